//! Instance files.
//!
//! ```json
//! {"journals":[{"name":"J1","u":"5","a":"0.2","q":"0.2","c":"0"}],
//!  "prior_h":"17/29","outside_option":"0"}
//! ```
//!
//! Every number is a string in decimal or fraction syntax and is parsed
//! exactly. Writing always emits canonical fractions, journals in their
//! original input order, so a written instance re-reads identically.

use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, Journal, ModelError};
use crate::numeric::{format_exact, parse_exact, ParseNumberError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {source}")]
    Number { field: String, source: ParseNumberError },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JournalRecord {
    pub name: String,
    pub u: String,
    pub a: String,
    pub q: String,
    #[serde(default = "zero_text")]
    pub c: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRecord {
    pub journals: Vec<JournalRecord>,
    pub prior_h: String,
    #[serde(default = "zero_text")]
    pub outside_option: String,
}

fn zero_text() -> String {
    "0".into()
}

fn number(field: String, text: &str) -> Result<BigRational, FormatError> {
    parse_exact(text).map_err(|source| FormatError::Number { field, source })
}

impl InstanceRecord {
    pub fn to_instance(&self) -> Result<Instance, FormatError> {
        let journals = self
            .journals
            .iter()
            .map(|j| {
                let field = |f: &str| format!("journals[{}].{f}", j.name);
                Ok(Journal::new(
                    j.name.clone(),
                    number(field("u"), &j.u)?,
                    number(field("a"), &j.a)?,
                    number(field("q"), &j.q)?,
                    number(field("c"), &j.c)?,
                )?)
            })
            .collect::<Result<Vec<_>, FormatError>>()?;
        Ok(Instance::new(
            journals,
            number("prior_h".into(), &self.prior_h)?,
            number("outside_option".into(), &self.outside_option)?,
        )?)
    }

    pub fn from_instance(inst: &Instance) -> Self {
        Self {
            journals: inst
                .journals_in_input_order()
                .into_iter()
                .map(|j| JournalRecord {
                    name: j.name.clone(),
                    u: format_exact(&j.u),
                    a: format_exact(&j.a),
                    q: format_exact(&j.q),
                    c: format_exact(&j.c),
                })
                .collect(),
            prior_h: format_exact(inst.prior()),
            outside_option: format_exact(inst.outside_option()),
        }
    }
}

pub fn parse_instance(json: &str) -> Result<Instance, FormatError> {
    serde_json::from_str::<InstanceRecord>(json)?.to_instance()
}

pub fn read_instance(path: &Path) -> Result<Instance, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance(&text)
}

pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::to_string(&InstanceRecord::from_instance(inst)).expect("instance record serializes")
}

pub fn instance_to_value(inst: &Instance) -> serde_json::Value {
    serde_json::to_value(InstanceRecord::from_instance(inst)).expect("instance record serializes")
}
