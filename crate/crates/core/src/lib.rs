//! Social-media analytics engine.
//!
//! Uploaded or downloaded post datasets are validated and normalized
//! ([`ingest`]), persisted ([`store`]), and analyzed through a serialized job
//! queue ([`jobs`]). Analyses cover subtopics and word clouds ([`topics`]),
//! sentiment and propaganda baselines ([`classify`]), temporal and spatial
//! trends ([`trends`]) and interaction networks ([`network`]). The same
//! [`engine::Engine`] backs the HTTP service ([`api`]) and the `marsad` CLI.

pub mod api;
pub mod classify;
pub mod cli;
pub mod config;
pub mod connectors;
pub mod engine;
pub mod ingest;
pub mod jobs;
mod limit;
pub mod network;
pub mod store;
pub mod synth;
pub mod topics;
pub mod trends;
