//! Dataset loading and the HTTP JSON API for the atlas engine.

pub mod api;
pub mod dataset;

pub use api::{router, VERSION_HEADER};
pub use dataset::{load_dataset, Dataset, LoadError, LoadOptions, CACHE_FILE};
