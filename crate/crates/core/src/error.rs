use rust_decimal::Decimal;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid ISO-4217 currency code {0:?}")]
    InvalidCurrency(String),
    #[error("monetary amount must not be negative: {0}")]
    NegativeAmount(Decimal),
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(Decimal),
    #[error("longitude {0} outside [-180, 180]")]
    LongitudeOutOfRange(Decimal),
    #[error("coordinate {0} is not a finite number")]
    NotFinite(f64),
    #[error("not an absolute URI: {0:?}")]
    InvalidUri(String),
    #[error("title must not be empty")]
    EmptyTitle,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("keyword is empty")]
    EmptyKeyword,
    #[error("keyword contains a forbidden character {0:?}")]
    UnsafeKeyword(char),
    #[error("keyword exceeds {0} characters")]
    KeywordTooLong(usize),
    #[error("request is invalid: {0:?}")]
    InvalidRequest(Vec<crate::model::Violation>),
    #[error("expected mode {expected:?}, got {actual:?}")]
    WrongMode {
        expected: crate::model::SearchMode,
        actual: crate::model::SearchMode,
    },
    #[error("a rate table is required to convert prices to {0}")]
    MissingRates(crate::model::CurrencyCode),
    #[error("target currency {0} is not in the rate table")]
    UnknownTargetCurrency(crate::model::CurrencyCode),
    #[error("only SELECT queries are accepted, found {0}")]
    NotSelect(String),
    #[error("variable ?{0} is not in the canonical variable set")]
    DisallowedVariable(String),
    #[error("projection must include ?{0}")]
    MissingVariable(&'static str),
    #[error("cannot parse query: {0}")]
    Unparseable(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("rate document has no base currency")]
    MissingBase,
    #[error("rate document has no as_of timestamp")]
    MissingTimestamp,
    #[error("rate for {0} must be strictly positive")]
    NonPositiveRate(crate::model::CurrencyCode),
    #[error("base currency {0} must have rate 1, found {1}")]
    BaseRateNotOne(crate::model::CurrencyCode, Decimal),
    #[error("rates as of {as_of} are older than the allowed {max_age_secs} s")]
    Stale {
        as_of: chrono::DateTime<chrono::Utc>,
        max_age_secs: i64,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("currency {0} is not in the rate table")]
    UnknownCurrency(crate::model::CurrencyCode),
    #[error("conversion of {0} overflows decimal range")]
    Overflow(Decimal),
    #[error("conflicting base currencies {0} and {1}")]
    MixedBases(crate::model::CurrencyCode, crate::model::CurrencyCode),
}

#[derive(Debug, Error)]
pub enum BindingsError {
    #[error("malformed results document: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O failure at {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cache record store is corrupt: {0}")]
    CorruptIndex(String),
}
