//! Core of the feedforge linked-commerce feed service.
//!
//! A [`SearchRequest`](model::SearchRequest) is compiled by [`query`] into a
//! SPARQL SELECT, the endpoint's JSON results are parsed by [`bindings`],
//! turned into entries by [`mapper`], and written out by [`feed`] as RSS 2.0
//! or Atom. [`cache`] keeps rendered feeds on disk between requests.

pub mod bindings;
pub mod cache;
pub mod clock;
pub mod currency;
mod error;
pub mod escape;
pub mod feed;
pub mod geo;
pub mod mapper;
pub mod model;
pub mod params;
pub mod query;
pub mod vocab;

pub use error::{BindingsError, CacheError, ModelError, QueryError, RateError};
