//! The vetted template registry.
//!
//! Parses `data/query_library.toml` at startup, checks every entry's
//! invariants, and hands out immutable [`QueryTemplate`]s. This registry is
//! the complete set of SQL the read path may execute.

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use serde::Deserialize;
use thiserror::Error;

const LIBRARY_TOML: &str = include_str!("../data/query_library.toml");

/// Semantic type of a template parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Ticker,
    Date,
    PositiveInt,
    Periodicity,
    Frequency,
    Metric,
    StatementKind,
    PeriodTag,
    Choice,
    Text,
}

/// Declared parameter of a template.
#[derive(Debug, Clone, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub required: bool,
    #[serde(default)]
    pub default: Option<String>,
    #[serde(default)]
    pub choices: Vec<String>,
}

impl ParamSpec {
    pub fn accepts_choice(&self, value: &str) -> bool {
        self.choices.is_empty() || self.choices.iter().any(|c| c == value)
    }
}

/// One vetted, parameterized, read-only SQL statement.
#[derive(Debug, Clone, Deserialize)]
pub struct QueryTemplate {
    pub id: String,
    #[serde(default)]
    pub exposed: bool,
    pub description: String,
    pub sql: String,
    pub params: Vec<ParamSpec>,
    pub result: Vec<String>,
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template `{0}`: statement must start with SELECT")]
    NotSelect(String),
    #[error("template `{0}`: multiple statements are not allowed")]
    MultipleStatements(String),
    #[error("template `{id}`: placeholder `:{name}` has no param spec")]
    UnboundPlaceholder { id: String, name: String },
    #[error("template `{id}`: param `{name}` never appears in the SQL")]
    UnusedParam { id: String, name: String },
    #[error("template `{id}`: default for `{name}` violates its own constraints")]
    BadDefault { id: String, name: String },
    #[error("duplicate template id `{0}`")]
    DuplicateId(String),
    #[error("library file failed to parse: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Immutable registry of all vetted templates.
#[derive(Debug)]
pub struct TemplateRegistry {
    pub version: u32,
    templates: BTreeMap<String, QueryTemplate>,
}

#[derive(Deserialize)]
struct LibraryFile {
    version: u32,
    templates: Vec<QueryTemplate>,
}

impl TemplateRegistry {
    /// The bundled registry; panics only if the bundled file is invalid,
    /// which is a build defect rather than a runtime condition.
    pub fn bundled() -> &'static TemplateRegistry {
        static REGISTRY: OnceLock<TemplateRegistry> = OnceLock::new();
        REGISTRY.get_or_init(|| {
            TemplateRegistry::from_toml(LIBRARY_TOML).expect("bundled query library is valid")
        })
    }

    pub fn from_toml(text: &str) -> Result<TemplateRegistry, TemplateError> {
        let file: LibraryFile = toml::from_str(text)?;
        let mut templates = BTreeMap::new();
        for template in file.templates {
            validate_template(&template)?;
            if templates.contains_key(&template.id) {
                return Err(TemplateError::DuplicateId(template.id));
            }
            templates.insert(template.id.clone(), template);
        }
        Ok(TemplateRegistry {
            version: file.version,
            templates,
        })
    }

    pub fn get(&self, id: &str) -> Option<&QueryTemplate> {
        self.templates.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &QueryTemplate> {
        self.templates.values()
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// True if `sql` is exactly one of the registered statement texts.
    pub fn contains_sql(&self, sql: &str) -> bool {
        self.templates.values().any(|t| t.sql == sql)
    }
}

fn validate_template(template: &QueryTemplate) -> Result<(), TemplateError> {
    let first = template
        .sql
        .split_whitespace()
        .next()
        .unwrap_or_default()
        .to_ascii_uppercase();
    if first != "SELECT" {
        return Err(TemplateError::NotSelect(template.id.clone()));
    }
    if template
        .sql
        .split(';')
        .filter(|part| !part.trim().is_empty())
        .count()
        > 1
    {
        return Err(TemplateError::MultipleStatements(template.id.clone()));
    }

    let placeholders = extract_placeholders(&template.sql);
    let specs: HashSet<&str> = template.params.iter().map(|p| p.name.as_str()).collect();
    for ph in &placeholders {
        if !specs.contains(ph.as_str()) {
            return Err(TemplateError::UnboundPlaceholder {
                id: template.id.clone(),
                name: ph.clone(),
            });
        }
    }
    for spec in &template.params {
        if !placeholders.contains(&spec.name) {
            return Err(TemplateError::UnusedParam {
                id: template.id.clone(),
                name: spec.name.clone(),
            });
        }
        if let Some(default) = &spec.default {
            if !spec.accepts_choice(default) {
                return Err(TemplateError::BadDefault {
                    id: template.id.clone(),
                    name: spec.name.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Names of `:placeholder` parameters appearing in the statement.
pub fn extract_placeholders(sql: &str) -> HashSet<String> {
    let mut out = HashSet::new();
    let bytes = sql.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b':'
            && i + 1 < bytes.len()
            && (bytes[i + 1].is_ascii_alphabetic() || bytes[i + 1] == b'_')
        {
            let start = i + 1;
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            out.insert(sql[start..end].to_string());
            i = end;
        } else {
            i += 1;
        }
    }
    out
}
