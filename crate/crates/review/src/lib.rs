//! Manual verification of generated probes: a pending queue, an append-only
//! decision log and export of the accepted set, served over HTTP.

pub mod api;
pub mod store;

pub use api::{router, serve, ServiceConfig, WARNING_HEADER};
pub use store::{
    replay, Ack, Decision, Export, ExportMode, QueueFilter, QueueItem, QueueResponse, ReviewDecision,
    ReviewError, ReviewStore, Stats, StatusCounts,
};
