//! Heavy hexagonal code workbench: code construction, gauge-equivalence
//! canonicalization, noise sampling, decoders and Monte Carlo evaluation.

pub mod canonical;
pub mod code;
pub mod config;
pub mod dataset;
pub mod decoders;
pub mod error;
pub mod eval;
pub mod gf2;
pub mod noise;
pub mod sweep;

pub use code::{CodeLayout, ErrorType, Syndrome};
pub use error::{Error, Result};
pub use gf2::{BitVec, Gf2Matrix, ReducedBasis};
pub use noise::{NoiseConfig, NoiseModel, PauliSample};
