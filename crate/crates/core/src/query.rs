//! Compilation of search requests into SPARQL SELECT queries.
//!
//! Generated queries match GoodRelations-shaped data:
//!
//! ```text
//! ?entity a gr:Offering ;
//!         gr:name ?title ;
//!         gr:description ?description ;
//!         gr:hasPriceSpecification [ gr:hasCurrencyValue ?price ; gr:hasCurrency ?currency ] ;
//!         foaf:depiction ?image ;
//!         foaf:page ?page ;
//!         gr:availableAtOrFrom [ geo:lat ?lat ; geo:long ?long ] .
//! ```
//!
//! Only `?entity a gr:Offering` and `?title` are mandatory in a basic query.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::currency::{conversion_clause, RateTable};
use crate::error::QueryError;
use crate::geo::{bounding_box, latitude_band, GeoError};
use crate::model::{validate_request, SearchMode, SearchRequest, SortOrder, MAX_LIMIT};
use crate::vocab::PROLOGUE;

/// Longest keyword accepted, in characters.
pub const MAX_KEYWORD_CHARS: usize = 200;

/// How keyword matching is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparqlDialect {
    /// Virtuoso's `bif:contains` full-text predicate.
    FulltextIndex,
    /// Plain SPARQL 1.1: a case-insensitive substring filter.
    #[default]
    Standard11,
}

impl FromStr for SparqlDialect {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fulltext_index" => Ok(SparqlDialect::FulltextIndex),
            "standard11" => Ok(SparqlDialect::Standard11),
            other => Err(format!("unknown dialect {other:?} (expected fulltext_index or standard11)")),
        }
    }
}

/// Variables a feed template knows how to consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    Entity,
    Title,
    Description,
    Price,
    Currency,
    Image,
    Page,
    Lat,
    Long,
    Updated,
}

impl Variable {
    pub const ALL: [Variable; 10] = [
        Variable::Entity,
        Variable::Title,
        Variable::Description,
        Variable::Price,
        Variable::Currency,
        Variable::Image,
        Variable::Page,
        Variable::Lat,
        Variable::Long,
        Variable::Updated,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variable::Entity => "entity",
            Variable::Title => "title",
            Variable::Description => "description",
            Variable::Price => "price",
            Variable::Currency => "currency",
            Variable::Image => "image",
            Variable::Page => "page",
            Variable::Lat => "lat",
            Variable::Long => "long",
            Variable::Updated => "updated",
        }
    }
}

impl FromStr for Variable {
    type Err = QueryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variable::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| QueryError::DisallowedVariable(s.to_string()))
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A complete SELECT query and the variables it projects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparqlQuery {
    pub text: String,
    pub dialect: SparqlDialect,
    pub output_variables: Vec<Variable>,
    pub limit: u32,
}

/// Trims a keyword and rejects anything that could escape a quoted literal.
pub fn sanitize_keyword(keyword: &str) -> Result<&str, QueryError> {
    let k = keyword.trim();
    if k.is_empty() {
        return Err(QueryError::EmptyKeyword);
    }
    if let Some(c) = k.chars().find(|&c| matches!(c, '"' | '\'' | '\\') || c.is_control()) {
        return Err(QueryError::UnsafeKeyword(c));
    }
    if k.chars().count() > MAX_KEYWORD_CHARS {
        return Err(QueryError::KeywordTooLong(MAX_KEYWORD_CHARS));
    }
    Ok(k)
}

fn keyword_clause(keyword: &str, dialect: SparqlDialect) -> String {
    match dialect {
        SparqlDialect::FulltextIndex => format!("  ?title bif:contains \"'{keyword}'\" .\n"),
        SparqlDialect::Standard11 => format!(
            "  FILTER(CONTAINS(LCASE(STR(?title)), \"{}\"))\n",
            keyword.to_lowercase()
        ),
    }
}

const OFFER_PATTERN: &str = "  ?entity a gr:Offering ;\n    gr:name ?title .\n";
const DESCRIPTION_PATTERN: &str = "  OPTIONAL { ?entity gr:description ?description }\n";
const PAGE_PATTERN: &str = "  OPTIONAL { ?entity foaf:page ?page }\n";

fn price_pattern(price_var: &str, currency_var: &str) -> String {
    format!(
        "?entity gr:hasPriceSpecification ?priceSpec .\n    ?priceSpec gr:hasCurrencyValue ?{price_var} ;\n      gr:hasCurrency ?{currency_var} ."
    )
}

fn render(variables: &[Variable], body: &str, order_by: Option<&str>, limit: u32) -> String {
    let mut text = String::from(PROLOGUE);
    text.push_str("SELECT");
    for v in variables {
        text.push_str(" ?");
        text.push_str(v.as_str());
    }
    text.push_str("\nWHERE {\n");
    text.push_str(body);
    text.push_str("}\n");
    if let Some(order) = order_by {
        text.push_str("ORDER BY ");
        text.push_str(order);
        text.push('\n');
    }
    let _ = write!(text, "LIMIT {limit}");
    text
}

const BASIC_VARIABLES: [Variable; 7] = [
    Variable::Entity,
    Variable::Title,
    Variable::Description,
    Variable::Price,
    Variable::Currency,
    Variable::Image,
    Variable::Page,
];

/// Keyword-only search over offer titles.
pub fn build_basic(keyword: &str, limit: u32, dialect: SparqlDialect) -> Result<SparqlQuery, QueryError> {
    let keyword = sanitize_keyword(keyword)?;
    let limit = limit.clamp(1, MAX_LIMIT);
    let mut body = String::from(OFFER_PATTERN);
    body.push_str(&keyword_clause(keyword, dialect));
    body.push_str(DESCRIPTION_PATTERN);
    let _ = writeln!(body, "  OPTIONAL {{ {} }}", price_pattern("price", "currency"));
    body.push_str("  OPTIONAL { ?entity foaf:depiction ?image }\n");
    body.push_str(PAGE_PATTERN);
    Ok(SparqlQuery {
        text: render(&BASIC_VARIABLES, &body, None, limit),
        dialect,
        output_variables: BASIC_VARIABLES.to_vec(),
        limit,
    })
}

/// Keyword search with price, currency, image, sort, and location constraints.
///
/// Price bounds and sorting apply to `?price`, which is the converted price
/// when a target currency is requested. A location adds a bounding-box
/// prefilter; exact radius filtering happens after mapping.
pub fn build_extended(
    req: &SearchRequest,
    dialect: SparqlDialect,
    rates: Option<&RateTable>,
) -> Result<SparqlQuery, QueryError> {
    if req.mode != SearchMode::Extended {
        return Err(QueryError::WrongMode {
            expected: SearchMode::Extended,
            actual: req.mode,
        });
    }
    let violations = validate_request(req);
    if !violations.is_empty() {
        return Err(QueryError::InvalidRequest(violations));
    }
    if let Some(target) = req.target_currency {
        let table = rates.ok_or(QueryError::MissingRates(target))?;
        if !table.contains(target) {
            return Err(QueryError::UnknownTargetCurrency(target));
        }
    }
    let keyword = sanitize_keyword(&req.keyword)?;

    let mut body = String::from(OFFER_PATTERN);
    body.push_str(&keyword_clause(keyword, dialect));
    body.push_str(DESCRIPTION_PATTERN);

    let needs_price = req.price_min.is_some() || req.price_max.is_some();
    match req.target_currency {
        Some(target) => {
            let _ = writeln!(body, "  {}", price_pattern("sourcePrice", "sourceCurrency"));
            body.push_str(&conversion_clause("sourcePrice", "sourceCurrency", target));
        }
        None if needs_price => {
            let _ = writeln!(body, "  {}", price_pattern("price", "currency"));
        }
        None => {
            let _ = writeln!(body, "  OPTIONAL {{ {} }}", price_pattern("price", "currency"));
        }
    }
    if let Some(min) = req.price_min {
        let _ = writeln!(body, "  FILTER(?price >= {})", min.normalize());
    }
    if let Some(max) = req.price_max {
        let _ = writeln!(body, "  FILTER(?price <= {})", max.normalize());
    }

    if req.require_image {
        body.push_str("  ?entity foaf:depiction ?image .\n");
    } else {
        body.push_str("  OPTIONAL { ?entity foaf:depiction ?image }\n");
    }
    body.push_str(PAGE_PATTERN);

    const LOCATION: &str = "?entity gr:availableAtOrFrom ?location .\n    ?location geo:lat ?lat ;\n      geo:long ?long .";
    match &req.location {
        Some(loc) => {
            let _ = writeln!(body, "  {LOCATION}");
            let radius = crate::model::decimal_to_f64(loc.radius_km);
            match bounding_box(loc.center, radius) {
                Ok(b) => {
                    let _ = writeln!(body, "  FILTER(?lat >= {} && ?lat <= {})", b.lat_min, b.lat_max);
                    if b.spans_all_longitudes() {
                        // no longitude constraint
                    } else if b.crosses_antimeridian() {
                        let _ = writeln!(body, "  FILTER(?long >= {} || ?long <= {})", b.lon_min, b.lon_max);
                    } else {
                        let _ = writeln!(body, "  FILTER(?long >= {} && ?long <= {})", b.lon_min, b.lon_max);
                    }
                }
                Err(GeoError::NearPole(_)) => {
                    let (lo, hi) = latitude_band(loc.center, radius)
                        .expect("radius validated positive and finite");
                    let _ = writeln!(body, "  FILTER(?lat >= {lo} && ?lat <= {hi})");
                }
                Err(GeoError::InvalidRadius(r)) => {
                    return Err(QueryError::Unparseable(format!("invalid radius {r}")));
                }
            }
        }
        None => {
            let _ = writeln!(body, "  OPTIONAL {{ {LOCATION} }}");
        }
    }

    let order = match req.sort {
        SortOrder::None => None,
        SortOrder::PriceAsc => Some("ASC(?price) ASC(STR(?entity))"),
        SortOrder::PriceDesc => Some("DESC(?price) ASC(STR(?entity))"),
    };
    let variables = [
        Variable::Entity,
        Variable::Title,
        Variable::Description,
        Variable::Price,
        Variable::Currency,
        Variable::Image,
        Variable::Page,
        Variable::Lat,
        Variable::Long,
    ];
    Ok(SparqlQuery {
        text: render(&variables, &body, order, req.limit),
        dialect,
        output_variables: variables.to_vec(),
        limit: req.limit,
    })
}

/// Compiles whichever mode the request selects.
pub fn build(
    req: &SearchRequest,
    dialect: SparqlDialect,
    rates: Option<&RateTable>,
    max_limit: u32,
) -> Result<SparqlQuery, QueryError> {
    let violations = validate_request(req);
    if !violations.is_empty() {
        return Err(QueryError::InvalidRequest(violations));
    }
    match req.mode {
        SearchMode::Basic => build_basic(&req.keyword, req.limit.min(max_limit), dialect),
        SearchMode::Extended => {
            let capped = SearchRequest {
                limit: req.limit.min(max_limit),
                ..req.clone()
            };
            build_extended(&capped, dialect, rates)
        }
        SearchMode::Expert => {
            let mut q = validate_expert(&req.raw_query, req.limit.min(max_limit))?;
            q.dialect = dialect;
            Ok(q)
        }
    }
}

/// Lexer over just enough SPARQL to find the query form and projection.
struct Scanner<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Scanner { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_trivia(&mut self) {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with('#') {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                break;
            }
        }
    }

    fn peek_char(&mut self) -> Option<char> {
        self.skip_trivia();
        self.rest().chars().next()
    }

    /// A run of name characters (letters, digits, `_`, `-`, `:`).
    fn word(&mut self) -> Option<&'a str> {
        self.skip_trivia();
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '.')))
            .unwrap_or(rest.len());
        let len = rest[..len].trim_end_matches('.').len();
        if len == 0 {
            return None;
        }
        self.pos += len;
        Some(&rest[..len])
    }

    fn iri(&mut self) -> Option<&'a str> {
        self.skip_trivia();
        let rest = self.rest();
        if !rest.starts_with('<') {
            return None;
        }
        let end = rest.find('>')?;
        if rest[..end].contains(char::is_whitespace) {
            return None;
        }
        self.pos += end + 1;
        Some(&rest[1..end])
    }

    fn variable(&mut self) -> Option<&'a str> {
        self.skip_trivia();
        let rest = self.rest();
        if !rest.starts_with(['?', '$']) {
            return None;
        }
        let name_len = rest[1..]
            .find(|c: char| !(c.is_alphanumeric() || c == '_'))
            .unwrap_or(rest.len() - 1);
        if name_len == 0 {
            return None;
        }
        self.pos += 1 + name_len;
        Some(&rest[1..1 + name_len])
    }

    /// Consumes a balanced parenthesized expression, returning its inner text.
    fn parenthesized(&mut self) -> Option<&'a str> {
        self.skip_trivia();
        let rest = self.rest();
        if !rest.starts_with('(') {
            return None;
        }
        let mut depth = 0usize;
        let mut quote: Option<char> = None;
        let mut escaped = false;
        for (i, c) in rest.char_indices() {
            if let Some(q) = quote {
                if escaped {
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    quote = None;
                }
                continue;
            }
            match c {
                '"' | '\'' => quote = Some(c),
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        self.pos += i + 1;
                        return Some(&rest[1..i]);
                    }
                }
                _ => {}
            }
        }
        None
    }
}

static PROJECTED_AS: LazyLock<regex::Regex> =
    LazyLock::new(|| regex::Regex::new(r"(?i)\bAS\s+[?$]([A-Za-z0-9_]+)\s*$").expect("static regex"));

/// Accepts a user-written SELECT query whose projection stays within the
/// canonical variables, and caps its LIMIT at `max_limit`.
///
/// Only the prologue, query form, projection, and trailing LIMIT are parsed.
pub fn validate_expert(raw_query: &str, max_limit: u32) -> Result<SparqlQuery, QueryError> {
    if raw_query.trim().is_empty() {
        return Err(QueryError::Unparseable("empty query".into()));
    }
    let max_limit = max_limit.clamp(1, MAX_LIMIT);
    let mut sc = Scanner::new(raw_query);

    let form = loop {
        let Some(word) = sc.word() else {
            return Err(QueryError::Unparseable("expected a query form".into()));
        };
        match word.to_ascii_uppercase().as_str() {
            "BASE" => {
                sc.iri().ok_or_else(|| QueryError::Unparseable("BASE needs an IRI".into()))?;
            }
            "PREFIX" => {
                let ok = sc.word().is_some_and(|p| p.ends_with(':')) && sc.iri().is_some();
                if !ok {
                    return Err(QueryError::Unparseable("malformed PREFIX declaration".into()));
                }
            }
            other => break other.to_string(),
        }
    };
    if form != "SELECT" {
        return Err(QueryError::NotSelect(form));
    }

    let mut projected: Vec<Variable> = Vec::new();
    let push = |name: &str, projected: &mut Vec<Variable>| -> Result<(), QueryError> {
        let v: Variable = name.parse()?;
        if !projected.contains(&v) {
            projected.push(v);
        }
        Ok(())
    };
    let mut first = true;
    loop {
        match sc.peek_char() {
            Some('?') | Some('$') => {
                let name = sc.variable().ok_or_else(|| QueryError::Unparseable("bad variable".into()))?;
                push(name, &mut projected)?;
            }
            Some('(') => {
                let inner = sc
                    .parenthesized()
                    .ok_or_else(|| QueryError::Unparseable("unbalanced parentheses in projection".into()))?;
                let caps = PROJECTED_AS
                    .captures(inner.trim())
                    .ok_or_else(|| QueryError::Unparseable("projected expression lacks AS ?var".into()))?;
                push(&caps[1], &mut projected)?;
            }
            Some('*') => {
                return Err(QueryError::Unparseable(
                    "SELECT * does not declare output variables".into(),
                ))
            }
            Some('{') => break,
            Some(_) => {
                let word = sc.word().map(|w| w.to_ascii_uppercase());
                match word.as_deref() {
                    Some("DISTINCT") | Some("REDUCED") if first => {}
                    Some("WHERE") | Some("FROM") => break,
                    _ => return Err(QueryError::Unparseable("unexpected token in projection".into())),
                }
            }
            None => return Err(QueryError::Unparseable("query ends inside projection".into())),
        }
        first = false;
    }
    if projected.is_empty() {
        return Err(QueryError::Unparseable("empty projection".into()));
    }
    for required in [Variable::Entity, Variable::Title] {
        if !projected.contains(&required) {
            return Err(QueryError::MissingVariable(required.as_str()));
        }
    }

    let close = raw_query
        .rfind('}')
        .ok_or_else(|| QueryError::Unparseable("missing WHERE group".into()))?;
    let (head, tail) = raw_query.split_at(close + 1);
    let limit_re = regex::Regex::new(r"(?i)\bLIMIT\s+(\d+)").expect("static regex");
    let (limit, tail) = match limit_re.captures(tail) {
        Some(caps) => {
            let n: u64 = caps[1]
                .parse()
                .map_err(|_| QueryError::Unparseable("LIMIT out of range".into()))?;
            if n == 0 {
                return Err(QueryError::Unparseable("LIMIT must be positive".into()));
            }
            let whole = caps.get(0).expect("match");
            let stripped = format!("{}{}", &tail[..whole.start()], &tail[whole.end()..]);
            (n.min(max_limit as u64) as u32, stripped)
        }
        None => (max_limit, tail.to_string()),
    };
    let tail = tail.trim_end();
    let mut text = String::with_capacity(raw_query.len() + 16);
    text.push_str(head);
    if !tail.trim().is_empty() {
        text.push_str(tail);
    }
    let _ = write!(text, "\nLIMIT {limit}");

    Ok(SparqlQuery {
        text,
        dialect: SparqlDialect::default(),
        output_variables: projected,
        limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeoPoint, LocationFilter};
    use rust_decimal_macros::dec;

    fn rates() -> RateTable {
        RateTable::parse_file("base=EUR\nas_of=2014-01-15T00:00:00Z\nUSD=1.25\nGBP=0.85\n").unwrap()
    }

    #[test]
    fn basic_standard_dialect() {
        let q = build_basic("Camcorder", 20, SparqlDialect::Standard11).unwrap();
        assert!(q.text.contains("FILTER(CONTAINS(LCASE(STR(?title)), \"camcorder\"))"));
        assert!(q.text.ends_with("LIMIT 20"));
        assert_eq!(q.text.matches("SELECT").count(), 1);
        assert_eq!(q.output_variables, BASIC_VARIABLES);
        assert!(!q.text.contains("bif:"));
    }

    #[test]
    fn dialects_differ_only_in_keyword_clause() {
        let a = build_basic("camcorder", 20, SparqlDialect::FulltextIndex).unwrap();
        let b = build_basic("camcorder", 20, SparqlDialect::Standard11).unwrap();
        assert_eq!(a.output_variables, b.output_variables);
        assert!(a.text.contains("?title bif:contains \"'camcorder'\" ."));
        let diff: Vec<_> = a
            .text
            .lines()
            .zip(b.text.lines())
            .filter(|(x, y)| x != y)
            .collect();
        assert_eq!(diff.len(), 1, "{diff:?}");
        assert_eq!(a.text.lines().count(), b.text.lines().count());
    }

    #[test]
    fn keyword_injection_rejected() {
        for bad in ["a\"b", "a'b", "a\\b", "a\nb", "a\u{0}b", "", "   "] {
            assert!(build_basic(bad, 20, SparqlDialect::Standard11).is_err(), "{bad:?}");
        }
        assert!(build_basic(&"x".repeat(MAX_KEYWORD_CHARS + 1), 20, SparqlDialect::Standard11).is_err());
        assert!(build_basic("  ok  ", 20, SparqlDialect::Standard11).is_ok());
    }

    #[test]
    fn deterministic() {
        let q1 = build_basic("camcorder", 5, SparqlDialect::Standard11).unwrap();
        let q2 = build_basic("camcorder", 5, SparqlDialect::Standard11).unwrap();
        assert_eq!(q1, q2);
    }

    fn camcorder() -> SearchRequest {
        SearchRequest {
            price_min: Some(dec!(100)),
            price_max: Some(dec!(500)),
            require_image: true,
            target_currency: Some("USD".parse().unwrap()),
            ..SearchRequest::extended("camcorder")
        }
    }

    #[test]
    fn extended_camcorder() {
        let q = build_extended(&camcorder(), SparqlDialect::Standard11, Some(&rates())).unwrap();
        assert!(q.text.contains("  ?entity foaf:depiction ?image .\n"));
        assert!(!q.text.contains("OPTIONAL { ?entity foaf:depiction"));
        assert!(q.text.contains("FILTER(?price >= 100)"));
        assert!(q.text.contains("FILTER(?price <= 500)"));
        assert!(q.text.contains("AS ?price)"));
        assert!(q.text.contains("xro:counter \"USD\""));
        assert!(!q.text.contains("ORDER BY"));
        assert!(q.text.ends_with("LIMIT 20"));
    }

    #[test]
    fn extended_sort_adds_only_order_by() {
        let plain = build_extended(&camcorder(), SparqlDialect::Standard11, Some(&rates())).unwrap();
        let sorted = build_extended(
            &SearchRequest {
                sort: SortOrder::PriceAsc,
                ..camcorder()
            },
            SparqlDialect::Standard11,
            Some(&rates()),
        )
        .unwrap();
        let expected = plain
            .text
            .replace("\nLIMIT 20", "\nORDER BY ASC(?price) ASC(STR(?entity))\nLIMIT 20");
        assert_eq!(sorted.text, expected);
    }

    #[test]
    fn extended_needs_rates_for_conversion() {
        assert!(matches!(
            build_extended(&camcorder(), SparqlDialect::Standard11, None),
            Err(QueryError::MissingRates(_))
        ));
        let req = SearchRequest {
            target_currency: Some("JPY".parse().unwrap()),
            ..camcorder()
        };
        assert!(matches!(
            build_extended(&req, SparqlDialect::Standard11, Some(&rates())),
            Err(QueryError::UnknownTargetCurrency(_))
        ));
    }

    #[test]
    fn extended_rejects_invalid_request() {
        let req = SearchRequest {
            price_min: Some(dec!(600)),
            ..camcorder()
        };
        assert!(matches!(
            build_extended(&req, SparqlDialect::Standard11, Some(&rates())),
            Err(QueryError::InvalidRequest(_))
        ));
        assert!(matches!(
            build_extended(&SearchRequest::basic("x"), SparqlDialect::Standard11, None),
            Err(QueryError::WrongMode { .. })
        ));
    }

    #[test]
    fn extended_near_pole_falls_back_to_latitude() {
        let req = SearchRequest {
            location: Some(LocationFilter {
                center: GeoPoint::new(dec!(89.5), dec!(10)).unwrap(),
                radius_km: dec!(5),
            }),
            ..SearchRequest::extended("camcorder")
        };
        let q = build_extended(&req, SparqlDialect::Standard11, None).unwrap();
        assert!(q.text.contains("FILTER(?lat >="));
        assert!(!q.text.contains("FILTER(?long"));
    }

    #[test]
    fn expert_minimal() {
        let q = validate_expert("SELECT ?entity ?title WHERE { ?entity ?p ?title } LIMIT 5", 100).unwrap();
        assert_eq!(q.output_variables, [Variable::Entity, Variable::Title]);
        assert_eq!(q.limit, 5);
        assert!(q.text.ends_with("LIMIT 5"));
        assert_eq!(q.text.matches("LIMIT").count(), 1);
    }

    #[test]
    fn expert_rejections() {
        assert_eq!(
            validate_expert("SELECT ?foo WHERE { ?foo ?p ?o }", 100),
            Err(QueryError::DisallowedVariable("foo".into()))
        );
        assert_eq!(
            validate_expert("DELETE WHERE { ?s ?p ?o }", 100),
            Err(QueryError::NotSelect("DELETE".into()))
        );
        for form in ["CONSTRUCT { ?s ?p ?o } WHERE { ?s ?p ?o }", "ASK { ?s ?p ?o }", "INSERT DATA { <a> <b> <c> }"] {
            assert!(matches!(validate_expert(form, 100), Err(QueryError::NotSelect(_))), "{form}");
        }
        assert!(matches!(
            validate_expert("SELECT * WHERE { ?s ?p ?o }", 100),
            Err(QueryError::Unparseable(_))
        ));
        assert_eq!(
            validate_expert("SELECT ?entity WHERE { ?entity ?p ?o }", 100),
            Err(QueryError::MissingVariable("title"))
        );
        assert!(matches!(
            validate_expert("SELECT ?entity ?title WHERE { ?entity ?p ?title } LIMIT 0", 100),
            Err(QueryError::Unparseable(_))
        ));
    }

    #[test]
    fn expert_limit_appended_or_clamped() {
        let q = validate_expert("SELECT ?entity ?title WHERE { ?entity ?p ?title }", 50).unwrap();
        assert_eq!(q.limit, 50);
        assert!(q.text.ends_with("}\nLIMIT 50"));
        let q = validate_expert(
            "SELECT ?entity ?title WHERE { ?entity ?p ?title } LIMIT 1000 OFFSET 3",
            100,
        )
        .unwrap();
        assert_eq!(q.limit, 100);
        assert!(q.text.ends_with("OFFSET 3\nLIMIT 100"), "{}", q.text);
    }

    #[test]
    fn expert_prologue_and_expressions() {
        let q = validate_expert(
            "# find offers\nPREFIX gr: <http://purl.org/goodrelations/v1#>\nBASE <http://x/#frag>\n\
             SELECT DISTINCT ?entity (STR(?name) AS ?title) $page\nWHERE { ?entity gr:name ?name ; <http://xmlns.com/foaf/0.1/page> ?page }\nORDER BY ?title",
            100,
        )
        .unwrap();
        assert_eq!(q.output_variables, [Variable::Entity, Variable::Title, Variable::Page]);
        assert!(q.text.ends_with("ORDER BY ?title\nLIMIT 100"));
    }
}
