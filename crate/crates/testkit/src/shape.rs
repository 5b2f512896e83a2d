//! Clause structure of a SPARQL query with literal contents masked.
//!
//! Two queries built from different keywords have the same shape exactly
//! when the keyword stayed inside its string literal.

/// Replaces the body of every quoted literal with nothing and every comment
/// with a single space. Unterminated literals are kept verbatim, so a query
/// whose quoting was broken never matches a well-formed one.
pub fn signature(query: &str) -> String {
    let chars: Vec<char> = query.chars().collect();
    let mut out = String::with_capacity(query.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '"' | '\'' => {
                let long = chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c);
                let delim = if long { 3 } else { 1 };
                let mut j = i + delim;
                let mut closed = None;
                while j < chars.len() {
                    if chars[j] == '\\' {
                        j += 2;
                        continue;
                    }
                    if !long && chars[j] == '\n' {
                        break;
                    }
                    if chars[j] == c && (!long || (chars.get(j + 1) == Some(&c) && chars.get(j + 2) == Some(&c))) {
                        closed = Some(j + delim);
                        break;
                    }
                    j += 1;
                }
                match closed {
                    Some(end) => {
                        for _ in 0..delim * 2 {
                            out.push(c);
                        }
                        i = end;
                    }
                    None => {
                        out.extend(&chars[i..]);
                        break;
                    }
                }
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                out.push(' ');
            }
            '<' => {
                // IRIs may contain '#' and quotes are not allowed in them
                let end = chars[i..].iter().position(|&c| c == '>' || c.is_whitespace());
                match end {
                    Some(n) if chars[i + n] == '>' => {
                        out.extend(&chars[i..=i + n]);
                        i += n + 1;
                    }
                    _ => {
                        out.push(c);
                        i += 1;
                    }
                }
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}
