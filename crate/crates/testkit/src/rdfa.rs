//! A small RDFa 1.1 Core processor over `scraper`'s HTML tree.
//!
//! Covers `prefix`, `about`, `resource`, `href`, `src`, `typeof`, `rel`,
//! `rev`, `property`, `content` and `datatype`, including chaining through
//! incomplete triples. Lists, `vocab`, `lang` and XML literals are not
//! supported.

use std::collections::HashMap;
use std::fmt;

use scraper::{ElementRef, Html};
use url::Url;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Iri(String),
    Blank(usize),
}

impl Node {
    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Node::Iri(s) => Some(s),
            Node::Blank(_) => None,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Iri(s) => write!(f, "<{s}>"),
            Node::Blank(n) => write!(f, "_:b{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Object {
    Node(Node),
    Literal { value: String, datatype: Option<String> },
}

impl Object {
    pub fn literal_value(&self) -> Option<&str> {
        match self {
            Object::Literal { value, .. } => Some(value),
            Object::Node(_) => None,
        }
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Object::Node(n) => n.as_iri(),
            Object::Literal { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Node,
    pub predicate: String,
    pub object: Object,
}

#[derive(Clone)]
struct Incomplete {
    subject: Node,
    predicate: String,
    reverse: bool,
}

#[derive(Clone)]
struct Context {
    parent_subject: Node,
    parent_object: Option<Node>,
    prefixes: HashMap<String, String>,
    incomplete: Vec<Incomplete>,
}

struct Processor {
    base: Url,
    next_blank: usize,
    triples: Vec<Triple>,
}

/// Extracts triples from an HTML fragment parsed relative to `base`.
pub fn extract(html: &str, base: &str) -> Vec<Triple> {
    let base = Url::parse(base).expect("base must be absolute");
    let doc = Html::parse_fragment(html);
    let mut p = Processor {
        base: base.clone(),
        next_blank: 0,
        triples: Vec::new(),
    };
    let ctx = Context {
        parent_subject: Node::Iri(base.to_string()),
        parent_object: None,
        prefixes: HashMap::new(),
        incomplete: Vec::new(),
    };
    // parse_fragment wraps the input in an <html> element; start below it.
    for child in doc.root_element().children().filter_map(ElementRef::wrap) {
        p.element(child, &ctx);
    }
    p.triples
}

/// Subjects of every `rdf:type` triple.
pub fn typed_subjects(triples: &[Triple], class: &str) -> Vec<Node> {
    triples
        .iter()
        .filter(|t| t.predicate == RDF_TYPE && t.object.as_iri() == Some(class))
        .map(|t| t.subject.clone())
        .collect()
}

/// Every object for (subject, predicate).
pub fn objects<'a>(triples: &'a [Triple], subject: &Node, predicate: &str) -> Vec<&'a Object> {
    triples
        .iter()
        .filter(|t| &t.subject == subject && t.predicate == predicate)
        .map(|t| &t.object)
        .collect()
}

impl Processor {
    fn blank(&mut self) -> Node {
        self.next_blank += 1;
        Node::Blank(self.next_blank)
    }

    fn emit(&mut self, subject: Node, predicate: String, object: Object) {
        self.triples.push(Triple { subject, predicate, object });
    }

    fn element(&mut self, el: ElementRef<'_>, parent: &Context) {
        let mut prefixes = parent.prefixes.clone();
        if let Some(decl) = el.attr("prefix") {
            let mut tokens = decl.split_whitespace();
            while let (Some(name), Some(ns)) = (tokens.next(), tokens.next()) {
                if let Some(name) = name.strip_suffix(':') {
                    prefixes.insert(name.to_ascii_lowercase(), ns.to_string());
                }
            }
        }

        let attr = |n: &str| el.attr(n);
        let rel = attr("rel").map(|v| terms(v, &prefixes)).unwrap_or_default();
        let rev = attr("rev").map(|v| terms(v, &prefixes)).unwrap_or_default();
        let has_rel_attr = attr("rel").is_some() || attr("rev").is_some();
        let types = attr("typeof").map(|v| terms(v, &prefixes));
        let property = attr("property").map(|v| terms(v, &prefixes));
        let content = attr("content");
        let datatype = attr("datatype");

        let about = attr("about").and_then(|v| self.resource(v, &prefixes));
        let resource = attr("resource").and_then(|v| self.resource(v, &prefixes));
        let href = attr("href").and_then(|v| self.iri(v));
        let src = attr("src").and_then(|v| self.iri(v));
        let object_attr = resource.clone().or(href.clone()).or(src.clone());
        let fallback = parent.parent_object.clone().unwrap_or(parent.parent_subject.clone());

        let mut skip = false;
        let new_subject: Node;
        let mut current_object: Option<Node> = None;
        let mut typed_resource: Option<Node> = None;

        if !has_rel_attr {
            if property.is_some() && content.is_none() && datatype.is_none() {
                new_subject = about.clone().unwrap_or_else(|| fallback.clone());
                if types.is_some() {
                    let t = match (&about, &object_attr) {
                        (Some(a), _) => a.clone(),
                        (None, Some(o)) => o.clone(),
                        (None, None) => self.blank(),
                    };
                    typed_resource = Some(t.clone());
                    current_object = Some(t);
                }
            } else {
                let explicit = about.clone().or(object_attr.clone());
                new_subject = match explicit {
                    Some(s) => s,
                    None if types.is_some() => self.blank(),
                    None => {
                        if property.is_none() {
                            skip = true;
                        }
                        fallback.clone()
                    }
                };
                if types.is_some() {
                    typed_resource = Some(new_subject.clone());
                }
            }
        } else {
            new_subject = about.clone().unwrap_or_else(|| fallback.clone());
            if about.is_some() && types.is_some() {
                typed_resource = about.clone();
            }
            current_object = object_attr.clone();
            if current_object.is_none() && types.is_some() && about.is_none() {
                current_object = Some(self.blank());
            }
            if about.is_none() && types.is_some() {
                typed_resource = current_object.clone();
            }
        }

        if let (Some(t), Some(types)) = (&typed_resource, &types) {
            for class in types {
                self.emit(t.clone(), RDF_TYPE.into(), Object::Node(Node::Iri(class.clone())));
            }
        }

        let mut local_incomplete = Vec::new();
        if let Some(obj) = &current_object {
            for p in &rel {
                self.emit(new_subject.clone(), p.clone(), Object::Node(obj.clone()));
            }
            for p in &rev {
                self.emit(obj.clone(), p.clone(), Object::Node(new_subject.clone()));
            }
        } else if !rel.is_empty() || !rev.is_empty() {
            current_object = Some(self.blank());
            for p in &rel {
                local_incomplete.push(Incomplete {
                    subject: new_subject.clone(),
                    predicate: p.clone(),
                    reverse: false,
                });
            }
            for p in &rev {
                local_incomplete.push(Incomplete {
                    subject: new_subject.clone(),
                    predicate: p.clone(),
                    reverse: true,
                });
            }
        }

        if let Some(props) = &property {
            let dt = datatype.and_then(|d| {
                if d.is_empty() {
                    None
                } else {
                    terms(d, &prefixes).into_iter().next()
                }
            });
            let object = if let Some(c) = content {
                Object::Literal { value: c.to_string(), datatype: dt }
            } else if datatype.is_none() && !has_rel_attr && object_attr.is_some() {
                Object::Node(object_attr.clone().unwrap())
            } else if datatype.is_none() && types.is_some() && about.is_none() && typed_resource.is_some() {
                Object::Node(typed_resource.clone().unwrap())
            } else {
                Object::Literal { value: el.text().collect(), datatype: dt }
            };
            for p in props {
                self.emit(new_subject.clone(), p.clone(), object.clone());
            }
        }

        if !skip {
            for inc in &parent.incomplete {
                if inc.reverse {
                    self.emit(new_subject.clone(), inc.predicate.clone(), Object::Node(inc.subject.clone()));
                } else {
                    self.emit(inc.subject.clone(), inc.predicate.clone(), Object::Node(new_subject.clone()));
                }
            }
        }

        let ctx = if skip {
            Context { prefixes, ..parent.clone() }
        } else {
            Context {
                parent_object: Some(current_object.unwrap_or_else(|| new_subject.clone())),
                parent_subject: new_subject,
                prefixes,
                incomplete: local_incomplete,
            }
        };
        for child in el.children().filter_map(ElementRef::wrap) {
            self.element(child, &ctx);
        }
    }

    fn iri(&self, v: &str) -> Option<Node> {
        self.base.join(v).ok().map(|u| Node::Iri(u.to_string()))
    }

    /// `about` / `resource`: a safe CURIE, a CURIE with a known prefix, or an IRI.
    fn resource(&mut self, v: &str, prefixes: &HashMap<String, String>) -> Option<Node> {
        let v = v.trim();
        if let Some(inner) = v.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            return curie(inner, prefixes).map(Node::Iri);
        }
        if v.starts_with("_:") {
            return Some(self.blank());
        }
        curie(v, prefixes).map(Node::Iri).or_else(|| self.iri(v))
    }
}

fn curie(v: &str, prefixes: &HashMap<String, String>) -> Option<String> {
    let (prefix, reference) = v.split_once(':')?;
    if reference.starts_with("//") {
        return None;
    }
    prefixes
        .get(&prefix.to_ascii_lowercase())
        .map(|ns| format!("{ns}{reference}"))
}

/// Resolves a whitespace-separated list of CURIEs or absolute IRIs.
/// Bare terms are dropped since no default vocabulary is in effect.
fn terms(v: &str, prefixes: &HashMap<String, String>) -> Vec<String> {
    v.split_whitespace()
        .filter_map(|t| {
            curie(t, prefixes).or_else(|| {
                let u = Url::parse(t).ok()?;
                (t.contains(':') && !u.cannot_be_a_base()).then(|| t.to_string())
            })
        })
        .collect()
}
