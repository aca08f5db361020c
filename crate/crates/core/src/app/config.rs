//! Flat `key = value` configuration files.
//!
//! ```text
//! # paths are relative to this file
//! namespace = http://example.org/brca/onto#
//! store = http://hospital.example/graph hospital.nq
//! model = model.json
//! rules = monitor.rules
//! registry = http://hospital.example/ local hospital.nq
//! registry = http://oncology.example/ remote http://127.0.0.1:8081
//! department = oncology http://hospital.example/graph/oncology http://oncology.example/
//! fetch.max_documents = 200
//! fetch.max_depth = 3
//! fetch.timeout_ms = 2000
//! parallelism = 4
//! threshold = 0.5
//! ```
//!
//! `store` and `registry` may repeat. A store graph of `default` loads into
//! the default graph; otherwise unlabelled lines of the file go to the named
//! graph given.

use std::path::{Path, PathBuf};

use crate::federation::{Department, FetchPolicy};
use crate::graphstore::{GraphName, Iri};
use crate::ontology::DEFAULT_NAMESPACE;
use crate::risk::Probability;

use super::AppError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegistryTarget {
    Local(PathBuf),
    Remote(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub prefix: String,
    pub target: RegistryTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub namespace: String,
    pub stores: Vec<(GraphName, PathBuf)>,
    pub model_path: Option<PathBuf>,
    pub rules_path: Option<PathBuf>,
    pub registry: Vec<RegistryEntry>,
    pub departments: Vec<Department>,
    pub fetch: FetchPolicy,
    pub threshold: Option<Probability>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            namespace: DEFAULT_NAMESPACE.to_string(),
            stores: Vec::new(),
            model_path: None,
            rules_path: None,
            registry: Vec::new(),
            departments: Vec::new(),
            fetch: FetchPolicy::default(),
            threshold: None,
        }
    }
}

impl Config {
    /// Reads and validates a config file; every referenced path must exist.
    pub fn load(path: &Path) -> Result<Config, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::file(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let config = Config::parse(&text, base).map_err(|e| match e {
            AppError::Config { line, message, .. } => AppError::Config {
                path: path.display().to_string(),
                line,
                message,
            },
            other => other,
        })?;
        config.check_paths()?;
        Ok(config)
    }

    /// Parses config text, resolving relative paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Config, AppError> {
        let mut config = Config::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| AppError::Config {
                path: String::new(),
                line: n + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            let key = key.trim();
            let value = value.trim();
            let fields: Vec<&str> = value.split_whitespace().collect();
            let path = |p: &str| base.join(p);
            let number = |v: &str| v.parse::<u64>().map_err(|_| err(format!("{key}: not a non-negative integer: {v}")));
            let positive = |v: &str| match number(v)? {
                0 => Err(err(format!("{key} must be positive"))),
                x => Ok(x),
            };
            match key {
                "namespace" => config.namespace = value.to_string(),
                "store" => match fields.as_slice() {
                    [graph, file] => {
                        let graph = if *graph == "default" {
                            GraphName::Default
                        } else {
                            GraphName::Named(Iri::new(graph).map_err(|e| err(e.to_string()))?)
                        };
                        config.stores.push((graph, path(file)));
                    }
                    _ => return Err(err("store = <graph> <file>".into())),
                },
                "model" => config.model_path = Some(path(value)),
                "rules" => config.rules_path = Some(path(value)),
                "registry" => {
                    let target = match fields.as_slice() {
                        [_, "local", file] => RegistryTarget::Local(path(file)),
                        [_, "remote", url] => RegistryTarget::Remote(url.to_string()),
                        _ => return Err(err("registry = <prefix> local <file> | remote <url>".into())),
                    };
                    config.registry.push(RegistryEntry {
                        prefix: fields[0].to_string(),
                        target,
                    });
                }
                "department" => match fields.as_slice() {
                    [name, graph, prefix] => config.departments.push(Department {
                        name: name.to_string(),
                        graph: Iri::new(graph).map_err(|e| err(e.to_string()))?,
                        prefix: prefix.to_string(),
                    }),
                    _ => return Err(err("department = <name> <graph> <prefix>".into())),
                },
                "fetch.max_documents" => config.fetch.max_documents = positive(value)? as usize,
                "fetch.max_depth" => config.fetch.max_depth = number(value)? as usize,
                "fetch.timeout_ms" => config.fetch.timeout_ms = positive(value)?,
                "parallelism" => config.fetch.parallelism = positive(value)? as usize,
                "threshold" => {
                    let t: f64 = value.parse().map_err(|_| err(format!("threshold: not a number: {value}")))?;
                    if !(t > 0.0 && t < 1.0) {
                        return Err(err("threshold must lie strictly between 0 and 1".into()));
                    }
                    config.threshold = Some(Probability::new(t).expect("checked range"));
                }
                other => return Err(err(format!("unknown key {other}"))),
            }
        }
        Ok(config)
    }

    fn check_paths(&self) -> Result<(), AppError> {
        let locals = self.registry.iter().filter_map(|r| match &r.target {
            RegistryTarget::Local(p) => Some(p),
            RegistryTarget::Remote(_) => None,
        });
        let all = self
            .stores
            .iter()
            .map(|(_, p)| p)
            .chain(self.model_path.iter())
            .chain(self.rules_path.iter())
            .chain(locals);
        for p in all {
            if !p.is_file() {
                return Err(AppError::File {
                    path: p.display().to_string(),
                    message: "no such file".into(),
                });
            }
        }
        Ok(())
    }
}
