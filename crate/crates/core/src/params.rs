//! The `/feed` query-string contract.
//!
//! | parameter   | values                                  |
//! |-------------|-----------------------------------------|
//! | `mode`      | `basic` (default), `extended`, `expert` |
//! | `format`    | `rss` (default), `atom`                 |
//! | `q`         | keyword                                 |
//! | `price_min`, `price_max` | non-negative decimal       |
//! | `currency`  | ISO-4217 target currency                |
//! | `image`     | `true` / `false`                        |
//! | `sort`      | `none`, `price_asc`, `price_desc`       |
//! | `lat`, `lon`, `radius_km` | given together            |
//! | `limit`     | 1..=100, default 20                     |
//! | `query`     | raw SPARQL (expert mode)                |

use std::collections::BTreeMap;
use std::str::FromStr;

use rust_decimal::Decimal;

use crate::model::{
    validate_request, CurrencyCode, FeedFormat, GeoPoint, LocationFilter, SearchMode, SearchRequest,
    SortOrder, Violation, ViolationCode, DEFAULT_LIMIT,
};

pub const PARAMETERS: [&str; 13] = [
    "mode", "format", "q", "price_min", "price_max", "currency", "image", "sort", "lat", "lon",
    "radius_km", "limit", "query",
];

fn invalid(field: &str, message: impl Into<String>) -> Violation {
    Violation::new(field, ViolationCode::InvalidValue, message)
}

/// Parses query-string pairs into a validated request.
///
/// Every problem is reported, not just the first.
pub fn from_pairs<K, V>(pairs: &[(K, V)]) -> Result<SearchRequest, Vec<Violation>>
where
    K: AsRef<str>,
    V: AsRef<str>,
{
    let mut violations = Vec::new();
    let mut map: BTreeMap<&str, &str> = BTreeMap::new();
    for (k, v) in pairs {
        let (k, v) = (k.as_ref(), v.as_ref());
        if !PARAMETERS.contains(&k) {
            violations.push(Violation::new(
                k,
                ViolationCode::UnknownParameter,
                format!("unknown parameter {k:?}"),
            ));
        } else if map.insert(k, v).is_some() {
            violations.push(Violation::new(
                k,
                ViolationCode::DuplicateParameter,
                format!("parameter {k:?} given more than once"),
            ));
        }
    }

    let mut req = SearchRequest::default();
    if let Some(v) = map.get("mode") {
        match *v {
            "basic" => req.mode = SearchMode::Basic,
            "extended" => req.mode = SearchMode::Extended,
            "expert" => req.mode = SearchMode::Expert,
            _ => violations.push(invalid("mode", "mode must be basic, extended, or expert")),
        }
    }
    if let Some(v) = map.get("format") {
        match *v {
            "rss" => req.format = FeedFormat::Rss,
            "atom" => req.format = FeedFormat::Atom,
            _ => violations.push(invalid("format", "format must be rss or atom")),
        }
    }
    if let Some(v) = map.get("q") {
        req.keyword = v.to_string();
    }
    if let Some(v) = map.get("query") {
        req.raw_query = v.to_string();
    }
    let decimal = |field: &str, violations: &mut Vec<Violation>| -> Option<Decimal> {
        let raw = map.get(field)?;
        match Decimal::from_str(raw.trim()) {
            Ok(d) => Some(d),
            Err(_) => {
                violations.push(invalid(field, format!("{field} must be a decimal number")));
                None
            }
        }
    };
    req.price_min = decimal("price_min", &mut violations);
    req.price_max = decimal("price_max", &mut violations);
    let lat = decimal("lat", &mut violations);
    let lon = decimal("lon", &mut violations);
    let radius = decimal("radius_km", &mut violations);

    if let Some(v) = map.get("currency") {
        match CurrencyCode::from_str(v) {
            Ok(c) => req.target_currency = Some(c),
            Err(e) => violations.push(invalid("currency", e.to_string())),
        }
    }
    if let Some(v) = map.get("image") {
        match *v {
            "true" | "1" => req.require_image = true,
            "false" | "0" => req.require_image = false,
            _ => violations.push(invalid("image", "image must be true or false")),
        }
    }
    if let Some(v) = map.get("sort") {
        match *v {
            "none" => req.sort = SortOrder::None,
            "price_asc" => req.sort = SortOrder::PriceAsc,
            "price_desc" => req.sort = SortOrder::PriceDesc,
            _ => violations.push(invalid("sort", "sort must be none, price_asc, or price_desc")),
        }
    }
    if let Some(v) = map.get("limit") {
        match v.parse::<u32>() {
            Ok(n) => req.limit = n,
            Err(_) => violations.push(Violation::new(
                "limit",
                ViolationCode::LimitOutOfRange,
                "limit must be a positive integer",
            )),
        }
    }

    let given = [map.contains_key("lat"), map.contains_key("lon"), map.contains_key("radius_km")];
    if given.iter().any(|g| *g) && !given.iter().all(|g| *g) {
        violations.push(invalid("lat", "lat, lon and radius_km must be given together"));
    } else if let (Some(lat), Some(lon), Some(radius_km)) = (lat, lon, radius) {
        match GeoPoint::new(lat, lon) {
            Ok(center) => req.location = Some(LocationFilter { center, radius_km }),
            Err(e) => violations.push(invalid("lat", e.to_string())),
        }
    }

    violations.extend(validate_request(&req));
    if violations.is_empty() {
        Ok(req)
    } else {
        Err(violations)
    }
}

/// Canonical parameter list: sorted by name, defaults omitted.
pub fn to_pairs(req: &SearchRequest) -> Vec<(&'static str, String)> {
    let mut pairs = Vec::new();
    let mode = match req.mode {
        SearchMode::Basic => "basic",
        SearchMode::Extended => "extended",
        SearchMode::Expert => "expert",
    };
    pairs.push(("mode", mode.to_string()));
    pairs.push(("format", req.format.as_str().to_string()));
    if !req.keyword.is_empty() {
        pairs.push(("q", req.keyword.clone()));
    }
    if let Some(v) = req.price_min {
        pairs.push(("price_min", v.to_string()));
    }
    if let Some(v) = req.price_max {
        pairs.push(("price_max", v.to_string()));
    }
    if let Some(c) = req.target_currency {
        pairs.push(("currency", c.to_string()));
    }
    if req.require_image {
        pairs.push(("image", "true".to_string()));
    }
    match req.sort {
        SortOrder::None => {}
        SortOrder::PriceAsc => pairs.push(("sort", "price_asc".to_string())),
        SortOrder::PriceDesc => pairs.push(("sort", "price_desc".to_string())),
    }
    if let Some(loc) = &req.location {
        pairs.push(("lat", loc.center.lat().to_string()));
        pairs.push(("lon", loc.center.lon().to_string()));
        pairs.push(("radius_km", loc.radius_km.to_string()));
    }
    if req.limit != DEFAULT_LIMIT {
        pairs.push(("limit", req.limit.to_string()));
    }
    if !req.raw_query.is_empty() {
        pairs.push(("query", req.raw_query.clone()));
    }
    pairs.sort_by_key(|(k, _)| *k);
    pairs
}

/// URL-encoded canonical query string.
pub fn to_query_string(req: &SearchRequest) -> String {
    let mut ser = url::form_urlencoded::Serializer::new(String::new());
    for (k, v) in to_pairs(req) {
        ser.append_pair(k, &v);
    }
    ser.finish()
}

/// Parses a raw (URL-encoded) query string.
pub fn from_query_string(qs: &str) -> Result<SearchRequest, Vec<Violation>> {
    let pairs: Vec<(String, String)> = url::form_urlencoded::parse(qs.as_bytes())
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    from_pairs(&pairs)
}
