//! Federated linked-data risk monitoring.

pub mod graphstore;
pub mod query;
pub mod ontology;
pub mod risk;
pub mod rules;
pub mod federation;
pub mod app;
