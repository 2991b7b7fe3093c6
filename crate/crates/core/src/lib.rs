//! Online contextual-bandit reward prediction with one incrementally trained
//! linear learner per arm, plus static and single-learner baselines, a seeded
//! drifting-preference generator, MovieLens-100K ingestion and prequential
//! evaluation.

pub mod bandit;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod learners;
pub mod movielens;
pub mod schema;

pub use error::{Error, ErrorClass, Result};
