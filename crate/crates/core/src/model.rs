//! Format-neutral domain types shared by the query, mapping, and serialization layers.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Default number of entries requested when a search does not specify a limit.
pub const DEFAULT_LIMIT: u32 = 20;
/// Hard upper bound on entries per feed.
pub const MAX_LIMIT: u32 = 100;

/// ISO-4217 currency code: exactly three ASCII uppercase letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CurrencyCode([u8; 3]);

impl CurrencyCode {
    pub fn as_str(&self) -> &str {
        // Constructed only from ASCII uppercase bytes.
        std::str::from_utf8(&self.0).expect("currency code is ASCII")
    }
}

impl FromStr for CurrencyCode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        if bytes.len() == 3 && bytes.iter().all(u8::is_ascii_uppercase) {
            Ok(CurrencyCode([bytes[0], bytes[1], bytes[2]]))
        } else {
            Err(ModelError::InvalidCurrency(s.to_string()))
        }
    }
}

impl fmt::Display for CurrencyCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for CurrencyCode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CurrencyCode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A non-negative monetary amount in a given currency.
///
/// Amounts are exact decimals and always carry at least two fractional digits,
/// so `299` is held as `299.00`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Money {
    amount: Decimal,
    currency: CurrencyCode,
}

impl Money {
    pub fn new(amount: Decimal, currency: CurrencyCode) -> Result<Self, ModelError> {
        if amount.is_sign_negative() && !amount.is_zero() {
            return Err(ModelError::NegativeAmount(amount));
        }
        let mut amount = amount;
        amount.set_sign_positive(true);
        if amount.scale() < 2 {
            amount.rescale(2);
        }
        Ok(Money { amount, currency })
    }

    pub fn amount(&self) -> Decimal {
        self.amount
    }

    pub fn currency(&self) -> CurrencyCode {
        self.currency
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.amount, self.currency)
    }
}

/// WGS 84 coordinate pair in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: Decimal,
    lon: Decimal,
}

impl GeoPoint {
    pub fn new(lat: Decimal, lon: Decimal) -> Result<Self, ModelError> {
        if lat < Decimal::from(-90) || lat > Decimal::from(90) {
            return Err(ModelError::LatitudeOutOfRange(lat));
        }
        if lon < Decimal::from(-180) || lon > Decimal::from(180) {
            return Err(ModelError::LongitudeOutOfRange(lon));
        }
        Ok(GeoPoint { lat, lon })
    }

    /// Builds a point from floating-point degrees, keeping the shortest decimal
    /// that round-trips the given `f64`.
    pub fn from_degrees(lat: f64, lon: f64) -> Result<Self, ModelError> {
        let to_dec = |v: f64| {
            Decimal::from_str(&v.to_string())
                .or_else(|_| Decimal::from_scientific(&format!("{v:e}")))
                .map_err(|_| ModelError::NotFinite(v))
        };
        if !lat.is_finite() {
            return Err(ModelError::NotFinite(lat));
        }
        if !lon.is_finite() {
            return Err(ModelError::NotFinite(lon));
        }
        GeoPoint::new(to_dec(lat)?, to_dec(lon)?)
    }

    pub fn lat(&self) -> Decimal {
        self.lat
    }

    pub fn lon(&self) -> Decimal {
        self.lon
    }

    pub fn lat_f64(&self) -> f64 {
        decimal_to_f64(self.lat)
    }

    pub fn lon_f64(&self) -> f64 {
        decimal_to_f64(self.lon)
    }
}

pub(crate) fn decimal_to_f64(d: Decimal) -> f64 {
    use rust_decimal::prelude::ToPrimitive;
    d.to_f64().unwrap_or(f64::NAN)
}

/// An absolute URI kept byte-for-byte as supplied.
///
/// Parsing only validates; the original text is what gets emitted, so the
/// identifier is never re-minted by normalization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct AbsoluteUri(String);

impl AbsoluteUri {
    pub fn parse(s: &str) -> Result<Self, ModelError> {
        if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c.is_control()) {
            return Err(ModelError::InvalidUri(s.to_string()));
        }
        match url::Url::parse(s) {
            Ok(u) if !u.cannot_be_a_base() || u.scheme() == "urn" || u.scheme() == "mailto" => {
                Ok(AbsoluteUri(s.to_string()))
            }
            _ => Err(ModelError::InvalidUri(s.to_string())),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AbsoluteUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One syndicated offer.
///
/// Entries are built through [`FeedEntryBuilder`], which renders the RDFa
/// payload so the fragment always describes `entity_uri`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedEntry {
    pub(crate) entity_uri: AbsoluteUri,
    pub(crate) title: String,
    pub(crate) description: String,
    pub(crate) page_url: AbsoluteUri,
    pub(crate) price: Option<Money>,
    pub(crate) image_url: Option<AbsoluteUri>,
    pub(crate) geo: Option<GeoPoint>,
    pub(crate) updated: DateTime<Utc>,
    pub(crate) rdfa_html: String,
}

impl FeedEntry {
    pub fn builder(
        entity_uri: AbsoluteUri,
        title: impl Into<String>,
        page_url: AbsoluteUri,
        updated: DateTime<Utc>,
    ) -> FeedEntryBuilder {
        FeedEntryBuilder {
            entity_uri,
            title: title.into(),
            description: String::new(),
            page_url,
            price: None,
            image_url: None,
            geo: None,
            updated,
        }
    }

    pub fn entity_uri(&self) -> &AbsoluteUri {
        &self.entity_uri
    }
    pub fn title(&self) -> &str {
        &self.title
    }
    pub fn description(&self) -> &str {
        &self.description
    }
    pub fn page_url(&self) -> &AbsoluteUri {
        &self.page_url
    }
    pub fn price(&self) -> Option<&Money> {
        self.price.as_ref()
    }
    pub fn image_url(&self) -> Option<&AbsoluteUri> {
        self.image_url.as_ref()
    }
    pub fn geo(&self) -> Option<GeoPoint> {
        self.geo
    }
    pub fn updated(&self) -> DateTime<Utc> {
        self.updated
    }
    /// The RDFa fragment in its unescaped form.
    pub fn rdfa_html(&self) -> &str {
        &self.rdfa_html
    }
}

#[derive(Debug, Clone)]
pub struct FeedEntryBuilder {
    entity_uri: AbsoluteUri,
    title: String,
    description: String,
    page_url: AbsoluteUri,
    price: Option<Money>,
    image_url: Option<AbsoluteUri>,
    geo: Option<GeoPoint>,
    updated: DateTime<Utc>,
}

impl FeedEntryBuilder {
    pub fn description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }
    pub fn price(mut self, price: Option<Money>) -> Self {
        self.price = price;
        self
    }
    pub fn image_url(mut self, image_url: Option<AbsoluteUri>) -> Self {
        self.image_url = image_url;
        self
    }
    pub fn geo(mut self, geo: Option<GeoPoint>) -> Self {
        self.geo = geo;
        self
    }

    pub fn build(self) -> Result<FeedEntry, ModelError> {
        let title = xml_safe_text(&self.title);
        let title = title.trim();
        if title.is_empty() {
            return Err(ModelError::EmptyTitle);
        }
        let mut entry = FeedEntry {
            entity_uri: self.entity_uri,
            title: title.to_string(),
            description: xml_safe_text(&self.description).trim().to_string(),
            page_url: self.page_url,
            price: self.price,
            image_url: self.image_url,
            geo: self.geo,
            updated: self.updated,
            rdfa_html: String::new(),
        };
        entry.rdfa_html = crate::mapper::render_rdfa(&entry);
        Ok(entry)
    }
}

/// Drops characters that cannot appear in an XML 1.0 document and turns
/// `\r\n` and lone `\r` into `\n`, as an XML parser would.
fn xml_safe_text(s: &str) -> String {
    s.replace("\r\n", "\n")
        .replace('\r', "\n")
        .chars()
        .filter(|&c| {
            matches!(c, '\t' | '\n')
                || ('\u{20}'..='\u{D7FF}').contains(&c)
                || ('\u{E000}'..='\u{FFFD}').contains(&c)
                || c >= '\u{10000}'
        })
        .collect()
}

/// Channel-level container for a list of entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedDocument {
    pub(crate) title: String,
    pub(crate) self_url: AbsoluteUri,
    pub(crate) description: String,
    pub(crate) generated_at: DateTime<Utc>,
    pub(crate) entries: Vec<FeedEntry>,
}

impl FeedDocument {
    pub fn new(
        title: impl Into<String>,
        self_url: AbsoluteUri,
        description: impl Into<String>,
        generated_at: DateTime<Utc>,
        entries: Vec<FeedEntry>,
    ) -> Result<Self, ModelError> {
        let title = xml_safe_text(&title.into()).trim().to_string();
        if title.is_empty() {
            return Err(ModelError::EmptyTitle);
        }
        Ok(FeedDocument {
            title,
            self_url,
            description: xml_safe_text(&description.into()),
            generated_at,
            entries,
        })
    }

    pub fn title(&self) -> &str {
        &self.title
    }
    pub fn self_url(&self) -> &AbsoluteUri {
        &self.self_url
    }
    pub fn description(&self) -> &str {
        &self.description
    }
    pub fn generated_at(&self) -> DateTime<Utc> {
        self.generated_at
    }
    pub fn entries(&self) -> &[FeedEntry] {
        &self.entries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    #[default]
    Basic,
    Extended,
    Expert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortOrder {
    #[default]
    None,
    PriceAsc,
    PriceDesc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedFormat {
    #[default]
    Rss,
    Atom,
}

impl FeedFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeedFormat::Rss => "rss",
            FeedFormat::Atom => "atom",
        }
    }

    pub fn media_type(&self) -> &'static str {
        match self {
            FeedFormat::Rss => "application/rss+xml",
            FeedFormat::Atom => "application/atom+xml",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocationFilter {
    pub center: GeoPoint,
    pub radius_km: Decimal,
}

/// What the user asked for, before compilation into a query.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SearchRequest {
    pub mode: SearchMode,
    pub keyword: String,
    pub price_min: Option<Decimal>,
    pub price_max: Option<Decimal>,
    pub target_currency: Option<CurrencyCode>,
    pub require_image: bool,
    pub sort: SortOrder,
    pub location: Option<LocationFilter>,
    pub limit: u32,
    pub raw_query: String,
    pub format: FeedFormat,
}

impl Default for SearchRequest {
    fn default() -> Self {
        SearchRequest {
            mode: SearchMode::Basic,
            keyword: String::new(),
            price_min: None,
            price_max: None,
            target_currency: None,
            require_image: false,
            sort: SortOrder::None,
            location: None,
            limit: DEFAULT_LIMIT,
            raw_query: String::new(),
            format: FeedFormat::Rss,
        }
    }
}

impl SearchRequest {
    pub fn basic(keyword: impl Into<String>) -> Self {
        SearchRequest {
            keyword: keyword.into(),
            ..Default::default()
        }
    }

    pub fn extended(keyword: impl Into<String>) -> Self {
        SearchRequest {
            mode: SearchMode::Extended,
            keyword: keyword.into(),
            ..Default::default()
        }
    }

    pub fn expert(raw_query: impl Into<String>) -> Self {
        SearchRequest {
            mode: SearchMode::Expert,
            raw_query: raw_query.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    EmptyRawQuery,
    UnexpectedRawQuery,
    EmptyKeyword,
    UnsafeKeyword,
    PriceBoundsInverted,
    NegativePrice,
    NonPositiveRadius,
    LimitOutOfRange,
    InvalidValue,
    UnknownParameter,
    DuplicateParameter,
    DisallowedVariable,
    InvalidQuery,
}

/// One broken request invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub code: ViolationCode,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, code: ViolationCode, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks every request invariant and reports each one that fails.
pub fn validate_request(req: &SearchRequest) -> Vec<Violation> {
    let mut out = Vec::new();
    match req.mode {
        SearchMode::Expert => {
            if req.raw_query.trim().is_empty() {
                out.push(Violation::new(
                    "query",
                    ViolationCode::EmptyRawQuery,
                    "expert mode requires a non-empty raw query",
                ));
            }
        }
        SearchMode::Basic | SearchMode::Extended => {
            if !req.raw_query.is_empty() {
                out.push(Violation::new(
                    "query",
                    ViolationCode::UnexpectedRawQuery,
                    "raw queries are only accepted in expert mode",
                ));
            }
            if let Err(e) = crate::query::sanitize_keyword(&req.keyword) {
                let code = match e {
                    crate::error::QueryError::EmptyKeyword => ViolationCode::EmptyKeyword,
                    _ => ViolationCode::UnsafeKeyword,
                };
                out.push(Violation::new("q", code, e.to_string()));
            }
        }
    }
    for (field, bound) in [("price_min", req.price_min), ("price_max", req.price_max)] {
        if let Some(v) = bound {
            if v.is_sign_negative() && !v.is_zero() {
                out.push(Violation::new(
                    field,
                    ViolationCode::NegativePrice,
                    format!("{field} must not be negative"),
                ));
            }
        }
    }
    if let (Some(lo), Some(hi)) = (req.price_min, req.price_max) {
        if lo > hi {
            out.push(Violation::new(
                "price_min",
                ViolationCode::PriceBoundsInverted,
                format!("price_min ({lo}) exceeds price_max ({hi})"),
            ));
        }
    }
    if let Some(loc) = &req.location {
        if loc.radius_km <= Decimal::ZERO {
            out.push(Violation::new(
                "radius_km",
                ViolationCode::NonPositiveRadius,
                "radius_km must be positive",
            ));
        }
    }
    if req.limit == 0 || req.limit > MAX_LIMIT {
        out.push(Violation::new(
            "limit",
            ViolationCode::LimitOutOfRange,
            format!("limit must be between 1 and {MAX_LIMIT}"),
        ));
    }
    out
}
