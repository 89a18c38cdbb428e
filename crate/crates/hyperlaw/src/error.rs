use thiserror::Error;

use crate::algebra::Vec2;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("state ({}, {}) lies outside the domain {domain}", .state[0], .state[1])]
    Domain { state: Vec2, domain: String },

    #[error("strict hyperbolicity fails at ({}, {}): discriminant {discriminant:e}", .state[0], .state[1])]
    Hyperbolicity { state: Vec2, discriminant: f64 },

    #[error("continuation failed at s = {s}: {reason}")]
    Continuation { s: f64, reason: String, last_good: Option<Vec2> },

    #[error("level {level} lies at or below the minimum {minimum} of the tilted entropy")]
    EmptyLevel { level: f64, minimum: f64 },

    #[error("quadrature did not reach tolerance {tolerance:e} on [{a}, {b}]")]
    Quadrature { a: f64, b: f64, tolerance: f64 },

    #[error("X{i} and X{j} are rank-one connected (normalized residual {residual:e})")]
    RankOneConnection { i: usize, j: usize, residual: f64 },

    #[error("decomposition fails at ({}, {}): {reason}", .state[0], .state[1])]
    Decomposition { state: Vec2, reason: String },
}

impl Error {
    /// Configuration and argument problems are caller mistakes; everything else is numerical.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Argument(_) | Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
