//! Turns result rows into feed entries and renders each entry's RDFa payload.

use std::collections::HashSet;

use chrono::{DateTime, NaiveDateTime, Utc};
use rust_decimal::RoundingStrategy;

use crate::bindings::{BindingSet, Row, Term};
use crate::currency::CONVERSION_SCALE;
use crate::escape::escape_html;
use crate::geo::haversine_km;
use crate::model::{
    decimal_to_f64, AbsoluteUri, CurrencyCode, FeedEntry, GeoPoint, Money, SearchRequest,
};

/// Prefixes declared on every fragment so it stays self-contained when excised.
pub const RDFA_PREFIXES: &str = "gr: http://purl.org/goodrelations/v1# \
foaf: http://xmlns.com/foaf/0.1/ xsd: http://www.w3.org/2001/XMLSchema#";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DefectKind {
    MissingEntity,
    InvalidEntity,
    MissingTitle,
    InvalidPage,
    InvalidPrice,
    InvalidCurrency,
    InvalidImage,
    InvalidCoordinates,
    InvalidTimestamp,
}

impl DefectKind {
    /// Whether a row with this defect is dropped rather than kept partially.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            DefectKind::MissingEntity | DefectKind::InvalidEntity | DefectKind::MissingTitle
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDefect {
    /// Zero-based row index in the result set.
    pub row: usize,
    pub kind: DefectKind,
}

#[derive(Debug, Clone, Default)]
pub struct MappedEntries {
    pub entries: Vec<FeedEntry>,
    pub defects: Vec<RowDefect>,
    pub duplicates: usize,
    pub outside_radius: usize,
}

impl MappedEntries {
    pub fn defect_count(&self) -> usize {
        self.defects.len()
    }

    pub fn dropped_rows(&self) -> usize {
        self.defects.iter().filter(|d| d.kind.is_fatal()).count()
    }
}

/// Maps rows to entries in result order.
///
/// Rows without a usable entity or title are dropped; later rows repeating
/// an entity are skipped; with a location filter, entries farther than the
/// radius (or without coordinates) are removed. `now` stands in for rows
/// that carry no `?updated` value.
pub fn map_bindings(bindings: &BindingSet, req: &SearchRequest, now: DateTime<Utc>) -> MappedEntries {
    let mut out = MappedEntries::default();
    let mut seen = HashSet::new();
    for (idx, row) in bindings.rows.iter().enumerate() {
        let mut kinds = Vec::new();
        let mapped = map_row(row, req, now, &mut |kind| kinds.push(kind));
        out.defects.extend(kinds.into_iter().map(|kind| RowDefect { row: idx, kind }));
        let entry = match mapped {
            Some(e) => e,
            None => continue,
        };
        if !seen.insert(entry.entity_uri().clone()) {
            out.duplicates += 1;
            continue;
        }
        if let Some(loc) = &req.location {
            let radius = decimal_to_f64(loc.radius_km);
            let inside = entry.geo().is_some_and(|g| haversine_km(loc.center, g) <= radius);
            if !inside {
                out.outside_radius += 1;
                continue;
            }
        }
        out.entries.push(entry);
    }
    out
}

fn map_row(
    row: &Row,
    req: &SearchRequest,
    now: DateTime<Utc>,
    defect: &mut impl FnMut(DefectKind),
) -> Option<FeedEntry> {
    let entity = match row.get("entity") {
        None => {
            defect(DefectKind::MissingEntity);
            return None;
        }
        Some(t) => match t.as_iri().ok().and_then(|s| AbsoluteUri::parse(s).ok()) {
            Some(u) => u,
            None => {
                defect(DefectKind::InvalidEntity);
                return None;
            }
        },
    };
    let title = match row.get("title").and_then(|t| t.as_literal().ok()) {
        Some(t) if !t.trim().is_empty() => t,
        _ => {
            defect(DefectKind::MissingTitle);
            return None;
        }
    };

    let page = match row.get("page") {
        None => entity.clone(),
        Some(t) => optional_iri(t).unwrap_or_else(|| {
            defect(DefectKind::InvalidPage);
            entity.clone()
        }),
    };
    let image = row.get("image").and_then(|t| {
        let iri = optional_iri(t);
        if iri.is_none() {
            defect(DefectKind::InvalidImage);
        }
        iri
    });

    let price = match (row.get("price"), row.get("currency")) {
        (None, None) => None,
        (Some(p), c) => {
            let currency = c.and_then(|c| c.value().trim().parse::<CurrencyCode>().ok());
            match (p.as_decimal(), currency) {
                (Err(_), _) => {
                    defect(DefectKind::InvalidPrice);
                    None
                }
                (_, None) => {
                    defect(DefectKind::InvalidCurrency);
                    None
                }
                (Ok(amount), Some(code)) => {
                    let amount = if req.target_currency.is_some() {
                        amount.round_dp_with_strategy(CONVERSION_SCALE, RoundingStrategy::MidpointNearestEven)
                    } else {
                        amount
                    };
                    match Money::new(amount, code) {
                        Ok(m) => Some(m),
                        Err(_) => {
                            defect(DefectKind::InvalidPrice);
                            None
                        }
                    }
                }
            }
        }
        (None, Some(_)) => {
            defect(DefectKind::InvalidPrice);
            None
        }
    };

    let geo = match (row.get("lat"), row.get("long")) {
        (None, None) => None,
        (Some(lat), Some(lon)) => match (lat.as_decimal(), lon.as_decimal()) {
            (Ok(lat), Ok(lon)) => GeoPoint::new(lat.normalize(), lon.normalize()).ok(),
            _ => None,
        }
        .or_else(|| {
            defect(DefectKind::InvalidCoordinates);
            None
        }),
        _ => {
            defect(DefectKind::InvalidCoordinates);
            None
        }
    };

    let updated = match row.get("updated") {
        None => now,
        Some(t) => parse_timestamp(t.value()).unwrap_or_else(|| {
            defect(DefectKind::InvalidTimestamp);
            now
        }),
    };

    let description = row
        .get("description")
        .and_then(|t| t.as_literal().ok())
        .unwrap_or("");

    FeedEntry::builder(entity, title, page, updated)
        .description(description)
        .price(price)
        .image_url(image)
        .geo(geo)
        .build()
        .map_err(|_| defect(DefectKind::MissingTitle))
        .ok()
}

fn optional_iri(t: &Term) -> Option<AbsoluteUri> {
    // Some endpoints return URLs as plain literals.
    AbsoluteUri::parse(t.value().trim()).ok()
}

/// Accepts `xsd:dateTime` with or without an offset; naive values are UTC.
fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    DateTime::parse_from_rfc3339(s)
        .map(|d| d.with_timezone(&Utc))
        .ok()
        .or_else(|| {
            NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f")
                .ok()
                .map(|n| n.and_utc())
        })
}

/// Renders the entry as a single RDFa-annotated `<div>`.
///
/// The subject is the entry's original entity URI. The `foaf:page` link has
/// an empty `href`, which resolves against whatever document the fragment is
/// embedded in, so every republishing page links itself to the offer.
pub fn render_rdfa(entry: &FeedEntry) -> String {
    let mut html = String::with_capacity(512);
    html.push_str("<div prefix=\"");
    html.push_str(RDFA_PREFIXES);
    html.push_str("\" about=\"");
    html.push_str(&escape_html(entry.entity_uri().as_str()));
    html.push_str("\" typeof=\"gr:Offering\">");
    html.push_str("<a rel=\"foaf:page\" href=\"\"></a>");

    // property sits outside the link: an href without rel would become the subject
    html.push_str("<span property=\"gr:name\"><a href=\"");
    html.push_str(&escape_html(entry.page_url().as_str()));
    html.push_str("\">");
    html.push_str(&escape_html(entry.title()));
    html.push_str("</a></span>");

    if let Some(img) = entry.image_url() {
        html.push_str("<img rel=\"foaf:depiction\" src=\"");
        html.push_str(&escape_html(img.as_str()));
        html.push_str("\" alt=\"");
        html.push_str(&escape_html(entry.title()));
        html.push_str("\" />");
    }

    if let Some(price) = entry.price() {
        let amount = price.amount().to_string();
        html.push_str("<span rel=\"gr:hasPriceSpecification\"><span typeof=\"gr:UnitPriceSpecification\">");
        html.push_str("<span property=\"gr:hasCurrencyValue\" datatype=\"xsd:decimal\" content=\"");
        html.push_str(&amount);
        html.push_str("\">");
        html.push_str(&amount);
        html.push_str("</span> <span property=\"gr:hasCurrency\">");
        html.push_str(price.currency().as_str());
        html.push_str("</span></span></span>");
    }

    if !entry.description().is_empty() {
        html.push_str("<p property=\"gr:description\">");
        html.push_str(&escape_html(entry.description()));
        html.push_str("</p>");
    }
    html.push_str("</div>");
    html
}
