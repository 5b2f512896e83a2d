//! SPARQL 1.1 Query Results JSON, parsed into an ordered binding set.

use std::collections::BTreeMap;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::error::BindingsError;

pub const RESULTS_JSON_MEDIA_TYPE: &str = "application/sparql-results+json";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LiteralKind {
    Plain,
    Typed(String),
    LangTagged(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Iri(String),
    BlankNode(String),
    Literal { value: String, kind: LiteralKind },
}

/// Why a bound value could not be used as the expected kind of term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermDefect {
    NotALiteral,
    NotAnIri,
    NotNumeric(String),
}

impl Term {
    pub fn plain(value: impl Into<String>) -> Self {
        Term::Literal {
            value: value.into(),
            kind: LiteralKind::Plain,
        }
    }

    pub fn typed(value: impl Into<String>, datatype: impl Into<String>) -> Self {
        Term::Literal {
            value: value.into(),
            kind: LiteralKind::Typed(datatype.into()),
        }
    }

    /// Lexical value of the term, regardless of kind.
    pub fn value(&self) -> &str {
        match self {
            Term::Iri(v) | Term::BlankNode(v) => v,
            Term::Literal { value, .. } => value,
        }
    }

    pub fn as_iri(&self) -> Result<&str, TermDefect> {
        match self {
            Term::Iri(v) => Ok(v),
            _ => Err(TermDefect::NotAnIri),
        }
    }

    pub fn as_literal(&self) -> Result<&str, TermDefect> {
        match self {
            Term::Literal { value, .. } => Ok(value),
            _ => Err(TermDefect::NotALiteral),
        }
    }

    /// Exact decimal value of a numeric literal.
    ///
    /// Scientific notation (as produced for `xsd:double`) is accepted;
    /// anything else that is not a finite number is a defect, never zero.
    pub fn as_decimal(&self) -> Result<Decimal, TermDefect> {
        let raw = self.as_literal()?.trim();
        let defect = || TermDefect::NotNumeric(raw.to_string());
        if raw.is_empty() || !raw.bytes().all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b)) {
            return Err(defect());
        }
        let unsigned = raw.strip_prefix('+').unwrap_or(raw);
        if unsigned.contains(['e', 'E']) {
            Decimal::from_scientific(unsigned).map_err(|_| defect())
        } else {
            Decimal::from_str(unsigned).map_err(|_| defect())
        }
    }
}

pub type Row = BTreeMap<String, Term>;

/// Ordered result rows of a SELECT query.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BindingSet {
    pub variables: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    #[serde(rename = "type")]
    kind: String,
    value: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    datatype: Option<String>,
    #[serde(rename = "xml:lang", skip_serializing_if = "Option::is_none")]
    lang: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonHead {
    #[serde(default)]
    vars: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonResults {
    bindings: Vec<BTreeMap<String, JsonTerm>>,
}

#[derive(Serialize, Deserialize)]
struct JsonDocument {
    head: JsonHead,
    #[serde(skip_serializing_if = "Option::is_none")]
    results: Option<JsonResults>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boolean: Option<bool>,
}

impl JsonTerm {
    fn into_term(self) -> Result<Term, BindingsError> {
        match self.kind.as_str() {
            "uri" => Ok(Term::Iri(self.value)),
            "bnode" => Ok(Term::BlankNode(self.value)),
            // "typed-literal" is emitted by older Virtuoso releases.
            "literal" | "typed-literal" => {
                let kind = match (self.datatype, self.lang) {
                    (_, Some(lang)) => LiteralKind::LangTagged(lang),
                    (Some(dt), None) => LiteralKind::Typed(dt),
                    (None, None) => LiteralKind::Plain,
                };
                Ok(Term::Literal {
                    value: self.value,
                    kind,
                })
            }
            other => Err(BindingsError::Malformed(format!("unknown term type {other:?}"))),
        }
    }

    fn from_term(term: &Term) -> Self {
        let (kind, datatype, lang) = match term {
            Term::Iri(_) => ("uri", None, None),
            Term::BlankNode(_) => ("bnode", None, None),
            Term::Literal { kind, .. } => match kind {
                LiteralKind::Plain => ("literal", None, None),
                LiteralKind::Typed(dt) => ("literal", Some(dt.clone()), None),
                LiteralKind::LangTagged(l) => ("literal", None, Some(l.clone())),
            },
        };
        JsonTerm {
            kind: kind.to_string(),
            value: term.value().to_string(),
            datatype,
            lang,
        }
    }
}

impl BindingSet {
    pub fn from_json(bytes: &[u8]) -> Result<Self, BindingsError> {
        let doc: JsonDocument =
            serde_json::from_slice(bytes).map_err(|e| BindingsError::Malformed(e.to_string()))?;
        let Some(results) = doc.results else {
            return Err(BindingsError::Malformed(if doc.boolean.is_some() {
                "expected bindings, got a boolean result".into()
            } else {
                "missing results member".into()
            }));
        };
        let variables = doc.head.vars;
        let mut rows = Vec::with_capacity(results.bindings.len());
        for binding in results.bindings {
            let mut row = Row::new();
            for (name, term) in binding {
                if !variables.contains(&name) {
                    return Err(BindingsError::Malformed(format!(
                        "row binds undeclared variable {name:?}"
                    )));
                }
                row.insert(name, term.into_term()?);
            }
            rows.push(row);
        }
        Ok(BindingSet { variables, rows })
    }

    pub fn to_json(&self) -> String {
        let doc = JsonDocument {
            head: JsonHead {
                vars: self.variables.clone(),
            },
            results: Some(JsonResults {
                bindings: self
                    .rows
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|(k, t)| (k.clone(), JsonTerm::from_term(t)))
                            .collect()
                    })
                    .collect(),
            }),
            boolean: None,
        };
        serde_json::to_string(&doc).expect("results document serializes")
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}
