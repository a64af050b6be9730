//! Football tracking and event data to object-centric event logs with a
//! spatial grid.
//!
//! The pipeline runs [`ingest`] → [`possession`] → [`derive`] → [`ocel`];
//! [`mining`] and [`render`] work on the finished log.

pub mod attrs;
pub mod derive;
pub mod error;
pub mod ingest;
pub mod mining;
pub mod ocel;
pub mod pipeline;
pub mod possession;
pub mod render;
pub mod spatial;

pub use error::{Error, Result};
