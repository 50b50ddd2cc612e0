pub mod data;
pub mod error;
pub mod glm;
pub mod inference;
pub mod interventions;
pub mod mediation;
pub mod simulate;

pub use error::{Error, Result};
