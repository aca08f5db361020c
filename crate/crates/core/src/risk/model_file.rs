//! JSON model files.
//!
//! ```json
//! {
//!   "prior": 0.1,
//!   "threshold": 0.5,
//!   "factors": [
//!     { "iri": "onto:Smoking",
//!       "rows": [ { "value": "yes", "p_case": 0.8, "p_control": 0.2 },
//!                 { "value": "no",  "p_case": 0.2, "p_control": 0.8 } ] }
//!   ]
//! }
//! ```
//!
//! Factor IRIs may be absolute or use the `onto:` prefix, which expands to
//! the vocabulary namespace.

use std::path::Path;

use serde::Deserialize;

use super::{FactorCpt, RiskError, RiskModel};
use crate::graphstore::Iri;
use crate::ontology::Vocabulary;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    prior: f64,
    threshold: f64,
    factors: Vec<FactorDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorDoc {
    iri: String,
    rows: Vec<RowDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowDoc {
    value: String,
    p_case: f64,
    p_control: f64,
}

pub fn parse_model(text: &str, vocab: &Vocabulary) -> Result<RiskModel, RiskError> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| RiskError::ModelFile(e.to_string()))?;
    let mut cpts = Vec::with_capacity(doc.factors.len());
    for f in doc.factors {
        let raw = match f.iri.strip_prefix("onto:") {
            Some(local) => format!("{}{local}", vocab.namespace()),
            None => f.iri.clone(),
        };
        let iri = Iri::new(&raw).map_err(|e| RiskError::ModelFile(e.to_string()))?;
        let rows = f.rows.into_iter().map(|r| (r.value, r.p_case, r.p_control));
        cpts.push(FactorCpt::new(iri, rows)?);
    }
    RiskModel::new(doc.prior, doc.threshold, cpts, vocab)
}

pub fn load_model(path: &Path, vocab: &Vocabulary) -> Result<RiskModel, RiskError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RiskError::ModelFile(format!("{}: {e}", path.display())))?;
    parse_model(&text, vocab)
}
