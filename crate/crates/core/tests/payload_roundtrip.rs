use chrono::{DateTime, Utc};
use feedforge_core::escape::escape_html;
use feedforge_core::feed::{to_atom, to_rss};
use feedforge_core::model::{AbsoluteUri, FeedDocument, FeedEntry, GeoPoint, Money};
use feedforge_testkit::feedcheck::{check_atom, check_rss, generic_parse};
use feedforge_testkit::rdfa::{extract, objects, typed_subjects, Node};
use proptest::prelude::*;
use rust_decimal::Decimal;
use scraper::Html;

const GR: &str = "http://purl.org/goodrelations/v1#";
const FOAF: &str = "http://xmlns.com/foaf/0.1/";
const BASE: &str = "http://reader.example/some/page?x=1";

fn uri() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u8..5, "[a-z0-9_~-]{1,12}", prop::option::of(0u32..10_000), prop::option::of("[a-z]{1,6}"))
            .prop_map(|(h, seg, id, frag)| {
                let mut s = format!("http://shop{h}.example/offers/{seg}");
                if let Some(id) = id {
                    s.push_str(&format!("?id={id}&lang=en"));
                }
                if let Some(f) = frag {
                    s.push('#');
                    s.push_str(&f);
                }
                s
            }),
        "[0-9a-f]{8}".prop_map(|u| format!("urn:uuid:{u}-0000-4000-8000-000000000000")),
    ]
}

fn entry() -> impl Strategy<Value = FeedEntry> {
    (
        uri(),
        "\\PC{1,40}",
        prop::option::of(uri()),
        "\\PC{0,60}",
        prop::option::of((0i64..100_000_000_000, prop::sample::select(vec!["USD", "EUR", "GBP", "JPY"]))),
        prop::option::of(uri()),
        prop::option::of((-900_000i64..=900_000, -1_800_000i64..=1_800_000)),
        0i64..4_000_000_000,
    )
        .prop_filter_map("title must survive cleaning", |(e, title, page, desc, price, img, geo, ts)| {
            let entity = AbsoluteUri::parse(&e).ok()?;
            let page = page.map_or(Ok(entity.clone()), |p| AbsoluteUri::parse(&p)).ok()?;
            FeedEntry::builder(entity, title, page, DateTime::from_timestamp(ts, 0)?)
                .description(desc)
                .price(price.map(|(v, c)| Money::new(Decimal::new(v, 2), c.parse().unwrap()).unwrap()))
                .image_url(img.map(|i| AbsoluteUri::parse(&i).unwrap()))
                .geo(geo.map(|(la, lo)| GeoPoint::new(Decimal::new(la, 4), Decimal::new(lo, 4)).unwrap()))
                .build()
                .ok()
        })
}

/// Checks that an extracted payload describes exactly `e`.
fn assert_payload_describes(html: &str, e: &FeedEntry) -> Result<(), TestCaseError> {
    let triples = extract(html, BASE);
    let subject = Node::Iri(e.entity_uri().as_str().to_string());
    prop_assert_eq!(typed_subjects(&triples, &format!("{GR}Offering")), vec![subject.clone()]);

    let names = objects(&triples, &subject, &format!("{GR}name"));
    prop_assert_eq!(names.len(), 1);
    prop_assert_eq!(names[0].literal_value(), Some(e.title()));

    let pages = objects(&triples, &subject, &format!("{FOAF}page"));
    prop_assert_eq!(pages.len(), 1);
    prop_assert_eq!(pages[0].as_iri(), Some(BASE));

    let images: Vec<_> = objects(&triples, &subject, &format!("{FOAF}depiction"))
        .iter()
        .filter_map(|o| o.as_iri())
        .collect();
    prop_assert_eq!(images, e.image_url().map(|u| u.as_str()).into_iter().collect::<Vec<_>>());

    let specs = objects(&triples, &subject, &format!("{GR}hasPriceSpecification"));
    match e.price() {
        None => prop_assert!(specs.is_empty()),
        Some(p) => {
            prop_assert_eq!(specs.len(), 1);
            let feedforge_testkit::rdfa::Object::Node(spec) = specs[0] else {
                return Err(TestCaseError::fail("price spec is a literal"));
            };
            let value = objects(&triples, spec, &format!("{GR}hasCurrencyValue"));
            let amount = p.amount().to_string();
            prop_assert_eq!(value[0].literal_value(), Some(amount.as_str()));
            let cur = objects(&triples, spec, &format!("{GR}hasCurrency"));
            let code = p.currency();
            prop_assert_eq!(cur[0].literal_value(), Some(code.as_str()));
        }
    }

    let desc = objects(&triples, &subject, &format!("{GR}description"));
    if e.description().is_empty() {
        prop_assert!(desc.is_empty());
    } else {
        prop_assert_eq!(desc[0].literal_value(), Some(e.description()));
    }
    Ok(())
}

fn epoch() -> DateTime<Utc> {
    DateTime::from_timestamp(1_700_000_000, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fragment_has_one_root_and_preserves_subject(e in entry()) {
        let frag = Html::parse_fragment(e.rdfa_html());
        let roots: Vec<_> = frag.root_element().child_elements().collect();
        prop_assert_eq!(roots.len(), 1);
        prop_assert_eq!(roots[0].value().attr("about"), Some(e.entity_uri().as_str()));
        assert_payload_describes(e.rdfa_html(), &e)?;
    }

    #[test]
    fn feeds_validate_and_round_trip(entries in prop::collection::vec(entry(), 0..8), atom in any::<bool>()) {
        let mut seen = std::collections::HashSet::new();
        let entries: Vec<FeedEntry> = entries
            .into_iter()
            .filter(|e| seen.insert(e.entity_uri().clone()))
            .collect();
        let doc = FeedDocument::new(
            "Offers & more",
            AbsoluteUri::parse("http://feeds.example/feed?mode=basic&q=cam").unwrap(),
            "Random <feed>",
            epoch(),
            entries.clone(),
        )
        .unwrap();
        let xml = if atom { to_atom(&doc) } else { to_rss(&doc) };
        let facts = if atom { check_atom(&xml) } else { check_rss(&xml) };
        let facts = facts.map_err(|errs| TestCaseError::fail(format!("{errs:?}\n{xml}")))?;
        prop_assert_eq!(facts.len(), entries.len());
        for (f, e) in facts.iter().zip(&entries) {
            prop_assert_eq!(&f.id, e.entity_uri().as_str());
            prop_assert_eq!(f.updated, e.updated());
            // decoding the escaped payload gives back the exact fragment
            prop_assert_eq!(&f.payload, e.rdfa_html());
            assert_payload_describes(&f.payload, e)?;
            let point = e.geo().map(|g| (g.lat_f64(), g.lon_f64()));
            prop_assert_eq!(f.point, point);
        }
        let generic = generic_parse(xml.as_bytes()).map_err(TestCaseError::fail)?;
        prop_assert_eq!(generic.len(), entries.len());
        for ((id, ts), e) in generic.iter().zip(&entries) {
            prop_assert_eq!(id, e.entity_uri().as_str());
            prop_assert_eq!(ts.map(|t| t.timestamp()), Some(e.updated().timestamp()));
        }
    }

    #[test]
    fn escaping_is_undone_by_an_xml_parser(s in "\\PC{0,80}") {
        let xml = format!("<x a=\"{}\">{}</x>", escape_html(&s), escape_html(&s));
        let doc = roxmltree::Document::parse(&xml).unwrap();
        let root = doc.root_element();
        prop_assert_eq!(root.text().unwrap_or(""), s.as_str());
        prop_assert_eq!(root.attribute("a"), Some(s.as_str()));
    }
}
