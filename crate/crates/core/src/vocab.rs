//! Namespace IRIs used in generated queries and RDFa payloads.

pub const GR: &str = "http://purl.org/goodrelations/v1#";
pub const FOAF: &str = "http://xmlns.com/foaf/0.1/";
pub const GEO: &str = "http://www.w3.org/2003/01/geo/wgs84_pos#";
pub const XRO: &str = "http://purl.org/xro/ns#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const DCTERMS: &str = "http://purl.org/dc/terms/";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

pub const GEORSS: &str = "http://www.georss.org/georss";
pub const ATOM: &str = "http://www.w3.org/2005/Atom";

/// Query prologue shared by every generated query.
pub(crate) const PROLOGUE: &str = "PREFIX gr: <http://purl.org/goodrelations/v1#>\n\
PREFIX foaf: <http://xmlns.com/foaf/0.1/>\n\
PREFIX geo: <http://www.w3.org/2003/01/geo/wgs84_pos#>\n\
PREFIX xro: <http://purl.org/xro/ns#>\n";
