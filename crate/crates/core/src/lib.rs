//! Atomic signaling games under imitation-with-mutation and localized
//! competition, with exact stochastic-stability analysis on small instances.

pub mod chain;
pub mod dynamics;
pub mod error;
pub mod lang;
pub mod ratio;
pub mod replicator;
pub mod space;

pub use error::{Error, Result};
pub use lang::{GameParams, Language, LanguageId, Profile};
pub use ratio::Ratio;
