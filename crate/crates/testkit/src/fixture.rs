//! Brute-force view of a GoodRelations Turtle file.
//!
//! The file is parsed into plain triples and walked by hand, so expected
//! result sets never depend on a SPARQL engine.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use oxigraph::io::{RdfFormat, RdfParser};
use oxigraph::model::{Subject, Term};
use rust_decimal::Decimal;

use crate::greatcircle;

const GR: &str = "http://purl.org/goodrelations/v1#";
const FOAF: &str = "http://xmlns.com/foaf/0.1/";
const GEO: &str = "http://www.w3.org/2003/01/geo/wgs84_pos#";
const XRO: &str = "http://purl.org/xro/ns#";
const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Clone, PartialEq)]
pub struct Offer {
    pub entity: String,
    pub title: String,
    pub description: Option<String>,
    /// Lexical price value and currency code, as written.
    pub price: Option<(String, String)>,
    pub image: Option<String>,
    pub page: Option<String>,
    pub lat: Option<Decimal>,
    pub long: Option<Decimal>,
}

impl Offer {
    pub fn amount(&self) -> Option<Decimal> {
        self.price.as_ref().and_then(|(v, _)| Decimal::from_str(v).ok())
    }

    pub fn currency(&self) -> Option<&str> {
        self.price.as_ref().map(|(_, c)| c.as_str())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Fixture {
    /// Offers in subject order of first appearance.
    pub offers: Vec<Offer>,
    pub rate_base: Option<String>,
    pub rates: BTreeMap<String, Decimal>,
}

/// A filter to evaluate by scanning every offer.
#[derive(Debug, Clone, Default)]
pub struct Scan {
    pub keyword: String,
    pub price_min: Option<Decimal>,
    pub price_max: Option<Decimal>,
    pub target: Option<String>,
    pub require_image: bool,
    /// (lat, lon, radius in km)
    pub near: Option<(f64, f64, f64)>,
}

#[derive(Default)]
struct Props(HashMap<String, Vec<Term>>);

impl Props {
    fn first(&self, p: &str) -> Option<&Term> {
        self.0.get(p).and_then(|v| v.first())
    }

    fn literal(&self, p: &str) -> Option<String> {
        match self.first(p)? {
            Term::Literal(l) => Some(l.value().to_string()),
            _ => None,
        }
    }

    fn iri(&self, p: &str) -> Option<String> {
        match self.first(p)? {
            Term::NamedNode(n) => Some(n.as_str().to_string()),
            _ => None,
        }
    }
}

fn key(s: &Subject) -> String {
    s.to_string()
}

fn term_key(t: &Term) -> Option<String> {
    match t {
        Term::NamedNode(n) => Some(n.to_string()),
        Term::BlankNode(b) => Some(b.to_string()),
        _ => None,
    }
}

impl Fixture {
    pub fn parse(turtle: &str) -> Fixture {
        let mut subjects: Vec<(String, Option<String>)> = Vec::new();
        let mut props: HashMap<String, Props> = HashMap::new();
        for quad in RdfParser::from_format(RdfFormat::Turtle).for_slice(turtle.as_bytes()) {
            let quad = quad.expect("fixture is valid Turtle");
            let k = key(&quad.subject);
            if !props.contains_key(&k) {
                let iri = match &quad.subject {
                    Subject::NamedNode(n) => Some(n.as_str().to_string()),
                    _ => None,
                };
                subjects.push((k.clone(), iri));
            }
            props
                .entry(k)
                .or_default()
                .0
                .entry(quad.predicate.as_str().to_string())
                .or_default()
                .push(quad.object);
        }
        let empty = Props::default();
        let node = |t: Option<&Term>| t.and_then(term_key).and_then(|k| props.get(&k)).unwrap_or(&empty);

        let mut fx = Fixture::default();
        for (k, iri) in &subjects {
            let p = &props[k];
            let is_offer = p.0.get(RDF_TYPE).is_some_and(|ts| {
                ts.iter()
                    .any(|t| matches!(t, Term::NamedNode(n) if n.as_str() == format!("{GR}Offering")))
            });
            if is_offer {
                let (Some(entity), Some(title)) = (iri.clone(), p.literal(&format!("{GR}name"))) else {
                    continue;
                };
                let spec = node(p.first(&format!("{GR}hasPriceSpecification")));
                let price = match (spec.literal(&format!("{GR}hasCurrencyValue")), spec.literal(&format!("{GR}hasCurrency"))) {
                    (Some(v), Some(c)) => Some((v, c)),
                    _ => None,
                };
                let loc = node(p.first(&format!("{GR}availableAtOrFrom")));
                let coord = |name: &str| loc.literal(&format!("{GEO}{name}")).and_then(|v| Decimal::from_str(&v).ok());
                let (lat, long) = match (coord("lat"), coord("long")) {
                    (Some(a), Some(b)) => (Some(a), Some(b)),
                    _ => (None, None),
                };
                fx.offers.push(Offer {
                    entity,
                    title,
                    description: p.literal(&format!("{GR}description")),
                    price,
                    image: p.iri(&format!("{FOAF}depiction")),
                    page: p.iri(&format!("{FOAF}page")),
                    lat,
                    long,
                });
            }
            if let (Some(base), Some(counter), Some(rate)) = (
                p.literal(&format!("{XRO}base")),
                p.literal(&format!("{XRO}counter")),
                p.literal(&format!("{XRO}rate")),
            ) {
                fx.rate_base = Some(base);
                fx.rates.insert(counter, Decimal::from_str(&rate).expect("decimal rate"));
            }
        }
        fx
    }

    /// Exact (unrounded) price of `offer` in `target`.
    pub fn converted(&self, offer: &Offer, target: &str) -> Option<Decimal> {
        let amount = offer.amount()?;
        let source = self.rates.get(offer.currency()?)?;
        let target = self.rates.get(target)?;
        amount.checked_mul(*target)?.checked_div(*source)
    }

    pub fn scan(&self, s: &Scan) -> Vec<&Offer> {
        let kw = s.keyword.trim().to_lowercase();
        self.offers
            .iter()
            .filter(|o| o.title.to_lowercase().contains(&kw))
            .filter(|o| !s.require_image || o.image.is_some())
            .filter(|o| {
                let price = match &s.target {
                    Some(t) => self.converted(o, t),
                    None => o.amount(),
                };
                let priced = s.target.is_some() || s.price_min.is_some() || s.price_max.is_some();
                match price {
                    None => !priced,
                    Some(p) => s.price_min.is_none_or(|m| p >= m) && s.price_max.is_none_or(|m| p <= m),
                }
            })
            .filter(|o| match s.near {
                None => true,
                Some((lat, lon, r)) => match (o.lat, o.long) {
                    (Some(a), Some(b)) => {
                        let a: f64 = a.to_string().parse().unwrap();
                        let b: f64 = b.to_string().parse().unwrap();
                        greatcircle::distance_km(lat, lon, a, b) <= r
                    }
                    _ => false,
                },
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TTL: &str = r#"
@prefix gr: <http://purl.org/goodrelations/v1#> .
@prefix foaf: <http://xmlns.com/foaf/0.1/> .
@prefix geo: <http://www.w3.org/2003/01/geo/wgs84_pos#> .
@prefix xro: <http://purl.org/xro/ns#> .
@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
<http://s/1> a gr:Offering ; gr:name "HD Camcorder" ;
  gr:hasPriceSpecification [ gr:hasCurrencyValue "80.00"^^xsd:decimal ; gr:hasCurrency "EUR" ] ;
  foaf:depiction <http://s/1.jpg> ;
  gr:availableAtOrFrom [ geo:lat "48.1"^^xsd:decimal ; geo:long "11.5"^^xsd:decimal ] .
<http://s/2> a gr:Offering ; gr:name "Camera" .
[] xro:base "EUR" ; xro:counter "EUR" ; xro:rate 1.0 .
[] xro:base "EUR" ; xro:counter "USD" ; xro:rate 1.25 .
"#;

    #[test]
    fn scans_offers_and_rates() {
        let fx = Fixture::parse(TTL);
        assert_eq!(fx.offers.len(), 2);
        assert_eq!(fx.rates.len(), 2);
        let o = &fx.offers[0];
        assert_eq!(fx.converted(o, "USD"), Some(Decimal::from(100)));
        assert_eq!(o.lat, Some(Decimal::from_str("48.1").unwrap()));
        let hits = fx.scan(&Scan {
            keyword: "CAM".into(),
            price_min: Some(100.into()),
            price_max: Some(100.into()),
            target: Some("USD".into()),
            require_image: true,
            ..Scan::default()
        });
        assert_eq!(hits.len(), 1);
    }
}
