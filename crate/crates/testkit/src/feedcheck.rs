//! Structural validation for RSS 2.0 and Atom documents, plus a round-trip
//! through `feed-rs`.

use chrono::{DateTime, FixedOffset, Utc};
use roxmltree::{Document, Node};

pub const ATOM_NS: &str = "http://www.w3.org/2005/Atom";
pub const GEORSS_NS: &str = "http://www.georss.org/georss";

/// What a validator learned about one entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryFacts {
    pub id: String,
    pub updated: DateTime<Utc>,
    /// Text of the description (RSS) or content (Atom) element, already
    /// XML-decoded.
    pub payload: String,
    pub point: Option<(f64, f64)>,
}

fn child<'a, 'i>(n: Node<'a, 'i>, ns: Option<&str>, name: &str) -> Vec<Node<'a, 'i>> {
    n.children()
        .filter(|c| c.is_element() && c.tag_name().name() == name && c.tag_name().namespace() == ns)
        .collect()
}

fn text(n: Node<'_, '_>) -> String {
    n.text().unwrap_or("").to_string()
}

fn point(n: Node<'_, '_>, errors: &mut Vec<String>) -> Option<(f64, f64)> {
    let pts = child(n, Some(GEORSS_NS), "point");
    let p = pts.first()?;
    let t = text(*p);
    let mut it = t.split_whitespace().map(str::parse::<f64>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(lat)), Some(Ok(lon)), None) if (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon) => {
            Some((lat, lon))
        }
        _ => {
            errors.push(format!("bad georss:point {t:?}"));
            None
        }
    }
}

/// Checks RSS 2.0 required elements. Every item must also carry a guid and
/// pubDate so it can be identified.
pub fn check_rss(xml: &str) -> Result<Vec<EntryFacts>, Vec<String>> {
    let doc = Document::parse(xml).map_err(|e| vec![format!("not well-formed: {e}")])?;
    let mut errors = Vec::new();
    let root = doc.root_element();
    if root.tag_name().name() != "rss" || root.tag_name().namespace().is_some() {
        return Err(vec!["root element is not <rss>".into()]);
    }
    if root.attribute("version") != Some("2.0") {
        errors.push("rss version must be 2.0".into());
    }
    let channels = child(root, None, "channel");
    if channels.len() != 1 {
        errors.push(format!("expected one channel, found {}", channels.len()));
        return Err(errors);
    }
    let ch = channels[0];
    for required in ["title", "link", "description"] {
        if child(ch, None, required).len() != 1 {
            errors.push(format!("channel needs exactly one <{required}>"));
        }
    }
    if let Some(d) = child(ch, None, "lastBuildDate").first() {
        if DateTime::parse_from_rfc2822(&text(*d)).is_err() {
            errors.push("lastBuildDate is not RFC 822".into());
        }
    }
    let mut out = Vec::new();
    for (i, item) in child(ch, None, "item").into_iter().enumerate() {
        let title = child(item, None, "title");
        let desc = child(item, None, "description");
        if title.is_empty() && desc.is_empty() {
            errors.push(format!("item {i} has neither title nor description"));
        }
        let guid = child(item, None, "guid");
        let date = child(item, None, "pubDate");
        let (Some(g), Some(d)) = (guid.first(), date.first()) else {
            errors.push(format!("item {i} lacks guid or pubDate"));
            continue;
        };
        if g.attribute("isPermaLink") != Some("false") && url::Url::parse(&text(*g)).is_err() {
            errors.push(format!("item {i} permalink guid is not a URL"));
        }
        let updated = match DateTime::parse_from_rfc2822(&text(*d)) {
            Ok(t) => t.with_timezone(&Utc),
            Err(_) => {
                errors.push(format!("item {i} pubDate is not RFC 822"));
                continue;
            }
        };
        out.push(EntryFacts {
            id: text(*g),
            updated,
            payload: desc.first().map(|n| text(*n)).unwrap_or_default(),
            point: point(item, &mut errors),
        });
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

fn rfc3339(s: &str) -> Option<DateTime<FixedOffset>> {
    DateTime::parse_from_rfc3339(s).ok()
}

/// Checks the RFC 4287 element cardinalities for the feed and each entry.
pub fn check_atom(xml: &str) -> Result<Vec<EntryFacts>, Vec<String>> {
    let doc = Document::parse(xml).map_err(|e| vec![format!("not well-formed: {e}")])?;
    let mut errors = Vec::new();
    let root = doc.root_element();
    let atom = Some(ATOM_NS);
    if root.tag_name().name() != "feed" || root.tag_name().namespace() != atom {
        return Err(vec!["root element is not atom:feed".into()]);
    }
    for required in ["id", "title", "updated"] {
        if child(root, atom, required).len() != 1 {
            errors.push(format!("feed needs exactly one atom:{required}"));
        }
    }
    if let Some(u) = child(root, atom, "updated").first() {
        if rfc3339(&text(*u)).is_none() {
            errors.push("feed updated is not RFC 3339".into());
        }
    }
    if let Some(id) = child(root, atom, "id").first() {
        if url::Url::parse(&text(*id)).is_err() {
            errors.push("feed id is not an IRI".into());
        }
    }
    let feed_author = !child(root, atom, "author").is_empty();
    let mut out = Vec::new();
    for (i, entry) in child(root, atom, "entry").into_iter().enumerate() {
        for required in ["id", "title", "updated"] {
            if child(entry, atom, required).len() != 1 {
                errors.push(format!("entry {i} needs exactly one atom:{required}"));
            }
        }
        if !feed_author && child(entry, atom, "author").is_empty() {
            errors.push(format!("entry {i} has no author and the feed has none"));
        }
        let links = child(entry, atom, "link");
        let content = child(entry, atom, "content");
        let alternates = links
            .iter()
            .filter(|l| l.attribute("rel").unwrap_or("alternate") == "alternate")
            .count();
        if content.is_empty() && alternates == 0 {
            errors.push(format!("entry {i} has neither content nor alternate link"));
        }
        if alternates > 1 {
            errors.push(format!("entry {i} has several alternate links"));
        }
        if links.iter().any(|l| l.attribute("href").is_none()) {
            errors.push(format!("entry {i} has a link without href"));
        }
        let (Some(id), Some(upd)) = (child(entry, atom, "id").first().copied(), child(entry, atom, "updated").first().copied())
        else {
            continue;
        };
        if url::Url::parse(&text(id)).is_err() {
            errors.push(format!("entry {i} id is not an IRI"));
        }
        let Some(updated) = rfc3339(&text(upd)) else {
            errors.push(format!("entry {i} updated is not RFC 3339"));
            continue;
        };
        out.push(EntryFacts {
            id: text(id),
            updated: updated.with_timezone(&Utc),
            payload: content.first().map(|n| text(*n)).unwrap_or_default(),
            point: point(entry, &mut errors),
        });
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

pub type GenericEntry = (String, Option<DateTime<Utc>>);

/// Entry ids and timestamps as seen by `feed-rs`. For RSS the timestamp is
/// the published date, for Atom the updated date.
pub fn generic_parse(bytes: &[u8]) -> Result<Vec<GenericEntry>, String> {
    let feed = feed_rs::parser::parse(bytes).map_err(|e| e.to_string())?;
    Ok(feed
        .entries
        .into_iter()
        .map(|e| (e.id, e.updated.or(e.published)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RSS: &str = r#"<?xml version="1.0"?>
<rss version="2.0" xmlns:georss="http://www.georss.org/georss"><channel><title>t</title><link>http://x/</link><description>d</description>
<item><title>a</title><guid isPermaLink="true">http://x/1</guid><pubDate>Thu, 01 Jan 1970 00:00:00 GMT</pubDate><description>&lt;b&gt;hi&lt;/b&gt;</description><georss:point>1.5 2</georss:point></item>
</channel></rss>"#;

    #[test]
    fn accepts_minimal_rss() {
        let e = check_rss(RSS).unwrap();
        assert_eq!(e[0].payload, "<b>hi</b>");
        assert_eq!(e[0].point, Some((1.5, 2.0)));
        assert_eq!(e[0].updated.timestamp(), 0);
        let g = generic_parse(RSS.as_bytes()).unwrap();
        assert_eq!(g[0].0, "http://x/1");
        assert_eq!(g[0].1.unwrap().timestamp(), 0);
    }

    #[test]
    fn rejects_rss_without_channel_link() {
        let broken = RSS.replace("<link>http://x/</link>", "");
        assert!(check_rss(&broken).is_err());
        assert!(check_rss("<rss version=\"2.0\"><channel>").is_err());
    }

    #[test]
    fn atom_cardinalities() {
        let ok = r#"<feed xmlns="http://www.w3.org/2005/Atom"><id>http://x/</id><title>t</title><updated>2020-01-01T00:00:00Z</updated><author><name>a</name></author>
<entry><id>http://x/1</id><title>a</title><updated>2020-01-01T00:00:01Z</updated><content type="html">x</content></entry></feed>"#;
        assert_eq!(check_atom(ok).unwrap().len(), 1);
        let no_author = ok.replace("<author><name>a</name></author>", "");
        assert!(check_atom(&no_author).is_err());
        let two_ids = ok.replace("<id>http://x/1</id>", "<id>http://x/1</id><id>http://x/2</id>");
        assert!(check_atom(&two_ids).is_err());
    }
}
