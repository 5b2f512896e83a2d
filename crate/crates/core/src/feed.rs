//! RSS 2.0 and Atom serialization with GeoRSS points and entity-encoded RDFa.
//!
//! Output is built by hand so byte layout is fixed: identical documents
//! always serialize to identical bytes.

use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};

use crate::escape::escape_html as esc;
use crate::model::{FeedDocument, FeedEntry, FeedFormat, GeoPoint};
use crate::vocab::{ATOM, GEORSS};

const XML_DECL: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
const GENERATOR: &str = "feedforge";

pub fn serialize(doc: &FeedDocument, format: FeedFormat) -> String {
    match format {
        FeedFormat::Rss => to_rss(doc),
        FeedFormat::Atom => to_atom(doc),
    }
}

/// `Thu, 01 Jan 1970 00:00:00 GMT`
pub fn rfc822(ts: DateTime<Utc>) -> String {
    ts.format("%a, %d %b %Y %H:%M:%S GMT").to_string()
}

/// `1970-01-01T00:00:00Z`
pub fn rfc3339(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// `"lat lon"` with trailing zeros removed, e.g. `48.1351 11.582`.
pub fn georss_point(p: GeoPoint) -> String {
    let canon = |d: rust_decimal::Decimal| {
        let n = d.normalize();
        if n.is_zero() {
            "0".to_string()
        } else {
            n.to_string()
        }
    };
    format!("{} {}", canon(p.lat()), canon(p.lon()))
}

pub fn to_rss(doc: &FeedDocument) -> String {
    let mut out = String::with_capacity(1024 + doc.entries().len() * 1024);
    out.push_str(XML_DECL);
    let _ = writeln!(
        out,
        "<rss version=\"2.0\" xmlns:atom=\"{ATOM}\" xmlns:georss=\"{GEORSS}\">"
    );
    out.push_str("<channel>\n");
    let _ = writeln!(out, "<title>{}</title>", esc(doc.title()));
    let _ = writeln!(out, "<link>{}</link>", esc(doc.self_url().as_str()));
    let _ = writeln!(out, "<description>{}</description>", esc(doc.description()));
    let _ = writeln!(out, "<lastBuildDate>{}</lastBuildDate>", rfc822(doc.generated_at()));
    let _ = writeln!(out, "<generator>{GENERATOR}</generator>");
    let _ = writeln!(
        out,
        "<atom:link href=\"{}\" rel=\"self\" type=\"application/rss+xml\"/>",
        esc(doc.self_url().as_str())
    );
    for entry in doc.entries() {
        rss_item(&mut out, entry);
    }
    out.push_str("</channel>\n</rss>\n");
    out
}

fn rss_item(out: &mut String, e: &FeedEntry) {
    out.push_str("<item>\n");
    let _ = writeln!(out, "<title>{}</title>", esc(e.title()));
    let _ = writeln!(out, "<link>{}</link>", esc(e.page_url().as_str()));
    let _ = writeln!(out, "<guid isPermaLink=\"true\">{}</guid>", esc(e.entity_uri().as_str()));
    let _ = writeln!(out, "<pubDate>{}</pubDate>", rfc822(e.updated()));
    let _ = writeln!(out, "<description>{}</description>", esc(e.rdfa_html()));
    if let Some(p) = e.geo() {
        let _ = writeln!(out, "<georss:point>{}</georss:point>", georss_point(p));
    }
    out.push_str("</item>\n");
}

pub fn to_atom(doc: &FeedDocument) -> String {
    let mut out = String::with_capacity(1024 + doc.entries().len() * 1024);
    out.push_str(XML_DECL);
    let _ = writeln!(out, "<feed xmlns=\"{ATOM}\" xmlns:georss=\"{GEORSS}\">");
    let _ = writeln!(out, "<id>{}</id>", esc(doc.self_url().as_str()));
    let _ = writeln!(out, "<title type=\"text\">{}</title>", esc(doc.title()));
    if !doc.description().is_empty() {
        let _ = writeln!(out, "<subtitle type=\"text\">{}</subtitle>", esc(doc.description()));
    }
    let _ = writeln!(out, "<updated>{}</updated>", rfc3339(doc.generated_at()));
    let _ = writeln!(
        out,
        "<link rel=\"self\" type=\"application/atom+xml\" href=\"{}\"/>",
        esc(doc.self_url().as_str())
    );
    let _ = writeln!(out, "<author><name>{GENERATOR}</name></author>");
    let _ = writeln!(out, "<generator>{GENERATOR}</generator>");
    for entry in doc.entries() {
        atom_entry(&mut out, entry);
    }
    out.push_str("</feed>\n");
    out
}

fn atom_entry(out: &mut String, e: &FeedEntry) {
    out.push_str("<entry>\n");
    let _ = writeln!(out, "<id>{}</id>", esc(e.entity_uri().as_str()));
    let _ = writeln!(out, "<title type=\"text\">{}</title>", esc(e.title()));
    let _ = writeln!(out, "<updated>{}</updated>", rfc3339(e.updated()));
    let _ = writeln!(
        out,
        "<link rel=\"alternate\" type=\"text/html\" href=\"{}\"/>",
        esc(e.page_url().as_str())
    );
    let _ = writeln!(out, "<content type=\"html\">{}</content>", esc(e.rdfa_html()));
    if let Some(p) = e.geo() {
        let _ = writeln!(out, "<georss:point>{}</georss:point>", georss_point(p));
    }
    out.push_str("</entry>\n");
}
