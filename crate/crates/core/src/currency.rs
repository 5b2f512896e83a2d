//! Materialized exchange rates against a single base currency.
//!
//! Rates are quoted as units of the quote currency per one unit of the base,
//! so converting between any two listed currencies is
//! `amount × rate[target] / rate[source]`. The same arithmetic is emitted into
//! queries by [`conversion_clause`] so endpoint-side and client-side
//! conversions agree.
//!
//! Rate file grammar (UTF-8, one record per line, `\n` or `\r\n`):
//!
//! ```text
//! file    = *( line EOL ) [ line ]
//! line    = blank / comment / base / as-of / rate
//! blank   = *WSP
//! comment = *WSP "#" *CHAR
//! base    = "base=" CODE
//! as-of   = "as_of=" RFC3339-TIMESTAMP
//! rate    = CODE "=" [ "-" / "+" ] 1*DIGIT [ "." 1*DIGIT ]
//! CODE    = 3( %x41-5A )
//! ```
//!
//! Leading and trailing whitespace on a line is ignored; no whitespace is
//! allowed around `=`. Each key may appear once.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Duration, Utc};
use rust_decimal::{Decimal, RoundingStrategy};

use crate::bindings::BindingSet;
use crate::error::RateError;
use crate::model::{CurrencyCode, Money};

/// Fractional digits kept after conversion.
pub const CONVERSION_SCALE: u32 = 4;

pub fn default_max_age() -> Duration {
    Duration::days(7)
}

/// Query listing every materialized rate, for loading a table from an endpoint.
pub const RATE_QUERY: &str = "PREFIX xro: <http://purl.org/xro/ns#>\n\
PREFIX dcterms: <http://purl.org/dc/terms/>\n\
SELECT ?base ?counter ?rate ?asOf\n\
WHERE {\n  ?r xro:base ?base ;\n    xro:counter ?counter ;\n    xro:rate ?rate .\n  OPTIONAL { ?r dcterms:date ?asOf }\n}\n\
ORDER BY ?counter";

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    base: CurrencyCode,
    rates: BTreeMap<CurrencyCode, Decimal>,
    as_of: DateTime<Utc>,
}

impl RateTable {
    /// Builds a table, adding the base self-rate of 1 when it is missing.
    pub fn new(
        base: CurrencyCode,
        mut rates: BTreeMap<CurrencyCode, Decimal>,
        as_of: DateTime<Utc>,
    ) -> Result<Self, RateError> {
        let base_rate = *rates.entry(base).or_insert(Decimal::ONE);
        if base_rate != Decimal::ONE {
            return Err(RateError::BaseRateNotOne(base, base_rate));
        }
        if let Some((code, _)) = rates.iter().find(|(_, r)| **r <= Decimal::ZERO) {
            return Err(RateError::NonPositiveRate(*code));
        }
        Ok(RateTable { base, rates, as_of })
    }

    pub fn base(&self) -> CurrencyCode {
        self.base
    }

    pub fn as_of(&self) -> DateTime<Utc> {
        self.as_of
    }

    pub fn rate(&self, code: CurrencyCode) -> Option<Decimal> {
        self.rates.get(&code).copied()
    }

    pub fn currencies(&self) -> impl Iterator<Item = CurrencyCode> + '_ {
        self.rates.keys().copied()
    }

    pub fn contains(&self, code: CurrencyCode) -> bool {
        self.rates.contains_key(&code)
    }

    pub fn is_stale(&self, now: DateTime<Utc>, max_age: Duration) -> bool {
        now - self.as_of > max_age
    }

    pub fn check_fresh(&self, now: DateTime<Utc>, max_age: Duration) -> Result<(), RateError> {
        if self.is_stale(now, max_age) {
            Err(RateError::Stale {
                as_of: self.as_of,
                max_age_secs: max_age.num_seconds(),
            })
        } else {
            Ok(())
        }
    }

    /// Parses a rate file (see the module docs for the grammar).
    pub fn parse_file(text: &str) -> Result<Self, RateError> {
        let mut base = None;
        let mut as_of = None;
        let mut rates = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: String| RateError::Syntax {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax("expected KEY=VALUE".into()))?;
            if key != key.trim() || value != value.trim() || value.is_empty() {
                return Err(syntax("no whitespace allowed around '='".into()));
            }
            match key {
                "base" => {
                    let code = CurrencyCode::from_str(value).map_err(|e| syntax(e.to_string()))?;
                    if base.replace(code).is_some() {
                        return Err(syntax("duplicate base".into()));
                    }
                }
                "as_of" => {
                    let ts = DateTime::parse_from_rfc3339(value)
                        .map_err(|e| syntax(format!("bad as_of timestamp: {e}")))?
                        .with_timezone(&Utc);
                    if as_of.replace(ts).is_some() {
                        return Err(syntax("duplicate as_of".into()));
                    }
                }
                code => {
                    let code = CurrencyCode::from_str(code).map_err(|e| syntax(e.to_string()))?;
                    let valid_number = {
                        let digits = value.strip_prefix(['-', '+']).unwrap_or(value);
                        let mut parts = digits.splitn(2, '.');
                        let int = parts.next().unwrap_or("");
                        let frac = parts.next();
                        !int.is_empty()
                            && int.bytes().all(|b| b.is_ascii_digit())
                            && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
                    };
                    if !valid_number {
                        return Err(syntax(format!("bad rate {value:?}")));
                    }
                    let rate = Decimal::from_str(value).map_err(|e| syntax(e.to_string()))?;
                    if rate <= Decimal::ZERO {
                        return Err(RateError::NonPositiveRate(code));
                    }
                    if rates.insert(code, rate).is_some() {
                        return Err(syntax(format!("duplicate rate for {code}")));
                    }
                }
            }
        }
        let base = base.ok_or(RateError::MissingBase)?;
        let as_of = as_of.ok_or(RateError::MissingTimestamp)?;
        RateTable::new(base, rates, as_of)
    }

    /// Serializes back into the rate file grammar.
    pub fn to_file(&self) -> String {
        let mut out = format!(
            "base={}\nas_of={}\n",
            self.base,
            self.as_of.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
        );
        for (code, rate) in &self.rates {
            out.push_str(&format!("{code}={rate}\n"));
        }
        out
    }

    /// Builds a table from the results of [`RATE_QUERY`].
    ///
    /// `as_of` is the oldest timestamp among the rates, so staleness is
    /// judged by the least recently updated rate.
    pub fn from_bindings(bindings: &BindingSet) -> Result<Self, RateError> {
        let mut base: Option<CurrencyCode> = None;
        let mut as_of: Option<DateTime<Utc>> = None;
        let mut rates = BTreeMap::new();
        for (idx, row) in bindings.rows.iter().enumerate() {
            let syntax = |message: String| RateError::Syntax {
                line: idx + 1,
                message,
            };
            let field = |name: &str| {
                row.get(name)
                    .map(|t| t.value().to_string())
                    .ok_or_else(|| syntax(format!("row lacks ?{name}")))
            };
            let row_base = CurrencyCode::from_str(&field("base")?).map_err(|e| syntax(e.to_string()))?;
            match base {
                Some(b) if b != row_base => return Err(RateError::MixedBases(b, row_base)),
                _ => base = Some(row_base),
            }
            let counter =
                CurrencyCode::from_str(&field("counter")?).map_err(|e| syntax(e.to_string()))?;
            let rate = row["rate"]
                .as_decimal()
                .map_err(|e| syntax(format!("bad rate: {e:?}")))?;
            if rate <= Decimal::ZERO {
                return Err(RateError::NonPositiveRate(counter));
            }
            rates.insert(counter, rate);
            if let Some(ts) = row.get("asOf") {
                let ts = DateTime::parse_from_rfc3339(ts.value())
                    .map_err(|e| syntax(format!("bad asOf: {e}")))?
                    .with_timezone(&Utc);
                as_of = Some(as_of.map_or(ts, |cur: DateTime<Utc>| cur.min(ts)));
            }
        }
        let base = base.ok_or(RateError::MissingBase)?;
        let as_of = as_of.ok_or(RateError::MissingTimestamp)?;
        RateTable::new(base, rates, as_of)
    }
}

/// Where a rate table comes from.
#[derive(Debug, Clone, Copy)]
pub enum RateSource<'a> {
    File(&'a str),
    Bindings(&'a BindingSet),
}

/// Loads a table and rejects it if it is older than `max_age` at `now`.
pub fn load_rates(
    source: RateSource<'_>,
    now: DateTime<Utc>,
    max_age: Duration,
) -> Result<RateTable, RateError> {
    let table = match source {
        RateSource::File(text) => RateTable::parse_file(text)?,
        RateSource::Bindings(b) => RateTable::from_bindings(b)?,
    };
    table.check_fresh(now, max_age)?;
    Ok(table)
}

/// Client-side conversion, rounded half-even to [`CONVERSION_SCALE`] digits.
pub fn convert(m: &Money, target: CurrencyCode, table: &RateTable) -> Result<Money, RateError> {
    let source_rate = table
        .rate(m.currency())
        .ok_or(RateError::UnknownCurrency(m.currency()))?;
    let target_rate = table.rate(target).ok_or(RateError::UnknownCurrency(target))?;
    if m.currency() == target {
        return Ok(m.clone());
    }
    let raw = m
        .amount()
        .checked_mul(target_rate)
        .and_then(|v| v.checked_div(source_rate))
        .ok_or(RateError::Overflow(m.amount()))?;
    let mut rounded = raw.round_dp_with_strategy(CONVERSION_SCALE, RoundingStrategy::MidpointNearestEven);
    rounded.rescale(CONVERSION_SCALE);
    Ok(Money::new(rounded, target).expect("positive rates preserve sign"))
}

/// Graph patterns converting `?{source_price_var}` (in the currency bound to
/// `?{source_currency_var}`) into `target`, binding the result to `?price`
/// and the target code to `?currency`.
///
/// Rates are joined from materialized triples of the form
/// `[] xro:base "EUR" ; xro:counter "USD" ; xro:rate 1.25`. Both rates must
/// share one base. Offers whose currency has no rate drop out of the join.
///
/// The product is parenthesized because some engines group `a * b / c` to
/// the right, and the rate quotient then overflows their decimal precision.
pub fn conversion_clause(source_price_var: &str, source_currency_var: &str, target: CurrencyCode) -> String {
    format!(
        "  ?fxSource xro:counter ?{source_currency_var} ;\n\
         \x20   xro:rate ?fxSourceRate ;\n\
         \x20   xro:base ?fxBase .\n\
         \x20 ?fxTarget xro:counter \"{target}\" ;\n\
         \x20   xro:rate ?fxTargetRate ;\n\
         \x20   xro:base ?fxBase .\n\
         \x20 BIND((?{source_price_var} * ?fxTargetRate) / ?fxSourceRate AS ?price)\n\
         \x20 BIND(\"{target}\" AS ?currency)\n"
    )
}

/// A rate table that can be replaced while readers hold the previous one.
#[derive(Debug, Default)]
pub struct SharedRates {
    inner: RwLock<Option<Arc<RateTable>>>,
}

impl SharedRates {
    pub fn new(table: Option<RateTable>) -> Self {
        SharedRates {
            inner: RwLock::new(table.map(Arc::new)),
        }
    }

    pub fn current(&self) -> Option<Arc<RateTable>> {
        self.inner.read().expect("rate lock poisoned").clone()
    }

    pub fn replace(&self, table: RateTable) {
        *self.inner.write().expect("rate lock poisoned") = Some(Arc::new(table));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rust_decimal_macros::dec;

    fn code(s: &str) -> CurrencyCode {
        s.parse().unwrap()
    }

    fn ts(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    const FILE: &str = "# fixture\nbase=EUR\nas_of=2014-01-15T00:00:00Z\nUSD=1.25\nEUR=1.0\nGBP=0.85\n";

    #[test]
    fn parses_rate_file() {
        let t = RateTable::parse_file(FILE).unwrap();
        assert_eq!(t.base(), code("EUR"));
        assert_eq!(t.rate(code("USD")), Some(dec!(1.25)));
        assert_eq!(t.as_of(), ts("2014-01-15T00:00:00Z"));
        assert_eq!(RateTable::parse_file(&t.to_file()).unwrap(), t);
    }

    #[test]
    fn base_self_rate_is_autocompleted() {
        let t = RateTable::parse_file("base=EUR\nas_of=2014-01-15T00:00:00Z\nUSD=1.25\n").unwrap();
        assert_eq!(t.rate(code("EUR")), Some(Decimal::ONE));
    }

    #[test]
    fn rejects_bad_documents() {
        let head = "base=EUR\nas_of=2014-01-15T00:00:00Z\n";
        assert_eq!(
            RateTable::parse_file(&format!("{head}USD=-2\n")),
            Err(RateError::NonPositiveRate(code("USD")))
        );
        assert_eq!(
            RateTable::parse_file(&format!("{head}USD=0\n")),
            Err(RateError::NonPositiveRate(code("USD")))
        );
        assert_eq!(RateTable::parse_file("as_of=2014-01-15T00:00:00Z\nUSD=1\n"), Err(RateError::MissingBase));
        assert_eq!(RateTable::parse_file("base=EUR\nUSD=1\n"), Err(RateError::MissingTimestamp));
        assert!(matches!(
            RateTable::parse_file(&format!("{head}EUR=2\n")),
            Err(RateError::BaseRateNotOne(..))
        ));
        for bad in ["USD = 1.2", "usd=1.2", "USD=1.", "USD=1e3", "USD", "USD=1.2\nUSD=1.3"] {
            assert!(
                matches!(RateTable::parse_file(&format!("{head}{bad}\n")), Err(RateError::Syntax { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn staleness() {
        let t = RateTable::parse_file(FILE).unwrap();
        let now = ts("2014-01-22T00:00:00Z");
        assert!(load_rates(RateSource::File(FILE), now, default_max_age()).is_ok());
        let later = ts("2014-01-22T00:00:01Z");
        assert!(matches!(
            load_rates(RateSource::File(FILE), later, default_max_age()),
            Err(RateError::Stale { .. })
        ));
        assert!(t.is_stale(later, default_max_age()));
    }

    #[test]
    fn conversion_examples() {
        let t = RateTable::parse_file(FILE).unwrap();
        let usd100 = Money::new(dec!(100), code("USD")).unwrap();
        assert_eq!(convert(&usd100, code("USD"), &t).unwrap(), usd100);
        // 100 × 1 / 1.25
        let eur = convert(&usd100, code("EUR"), &t).unwrap();
        assert_eq!(eur.amount(), dec!(80));
        assert_eq!(eur.amount().to_string(), "80.0000");
        // 100 × 0.85 / 1.25
        let gbp = convert(&usd100, code("GBP"), &t).unwrap();
        assert_eq!(gbp.amount().to_string(), "68.0000");
        assert_eq!(gbp.currency(), code("GBP"));
    }

    #[test]
    fn conversion_rounds_half_even() {
        let t = RateTable::new(
            code("EUR"),
            BTreeMap::from([(code("USD"), dec!(2))]),
            ts("2014-01-15T00:00:00Z"),
        )
        .unwrap();
        // 0.00025 / 2 = 0.000125 -> 0.0001; 0.00075 / 2 = 0.000375 -> 0.0004
        let a = Money::new(dec!(0.00025), code("USD")).unwrap();
        assert_eq!(convert(&a, code("EUR"), &t).unwrap().amount(), dec!(0.0001));
        let b = Money::new(dec!(0.00075), code("USD")).unwrap();
        assert_eq!(convert(&b, code("EUR"), &t).unwrap().amount(), dec!(0.0004));
    }

    #[test]
    fn unknown_currency() {
        let t = RateTable::parse_file(FILE).unwrap();
        let jpy = Money::new(dec!(1), code("JPY")).unwrap();
        assert_eq!(convert(&jpy, code("EUR"), &t), Err(RateError::UnknownCurrency(code("JPY"))));
        let eur = Money::new(dec!(1), code("EUR")).unwrap();
        assert_eq!(convert(&eur, code("JPY"), &t), Err(RateError::UnknownCurrency(code("JPY"))));
    }

    #[test]
    fn clause_uses_only_internal_and_canonical_variables() {
        let clause = conversion_clause("sourcePrice", "sourceCurrency", code("EUR"));
        let vars: std::collections::BTreeSet<_> = regex::Regex::new(r"\?([A-Za-z0-9_]+)")
            .unwrap()
            .captures_iter(&clause)
            .map(|c| c[1].to_string())
            .collect();
        let expected: std::collections::BTreeSet<String> = [
            "fxSource", "fxSourceRate", "fxBase", "fxTarget", "fxTargetRate", "sourcePrice",
            "sourceCurrency", "price", "currency",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(vars, expected);
        assert!(clause.contains("BIND((?sourcePrice * ?fxTargetRate) / ?fxSourceRate AS ?price)"));
    }

    #[test]
    fn shared_rates_swap() {
        let shared = SharedRates::new(None);
        assert!(shared.current().is_none());
        shared.replace(RateTable::parse_file(FILE).unwrap());
        let held = shared.current().unwrap();
        shared.replace(RateTable::parse_file("base=USD\nas_of=2015-01-01T00:00:00Z\n").unwrap());
        assert_eq!(held.base(), code("EUR"));
        assert_eq!(shared.current().unwrap().base(), code("USD"));
    }
}
