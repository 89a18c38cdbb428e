//! Numerical thresholds shared across modules.

/// Compatibility residual bound `|∇q − ∇η Df|`.
pub const COMPATIBILITY: f64 = 1e-8;

/// Relative size of `√disc` below which eigenvalues count as coincident.
pub const HYPERBOLICITY: f64 = 1e-10;

/// Relative size of `r·∇λ` treated as a genuine-nonlinearity tie.
pub const GNL_TIE: f64 = 1e-11;

/// Rankine–Hugoniot residual required at every traced shock sample.
pub const RH: f64 = 1e-8;

/// Newton target on the Hugoniot corrector.
pub const CORRECTOR: f64 = 1e-10;

/// Smallest continuation step before giving up.
pub const MIN_STEP: f64 = 1e-8;

/// Level-set residual `|η̃ − C|`.
pub const LEVEL: f64 = 1e-9;

/// Bisection target for critical points and exits.
pub const BISECTION: f64 = 1e-10;

/// Lagrange alignment residual at `q̃` extrema.
pub const LAGRANGE: f64 = 1e-6;

/// Relative scale for sign decisions in the T_N sign test.
pub const SIGN: f64 = 1e-9;

/// T_N solver success threshold.
pub const TN_RESIDUAL: f64 = 1e-10;

/// Rank-one residual that counts as a rank-one connection.
pub const RANK_ONE_HARD: f64 = 1e-8;

/// Rank-one residual that triggers a warning.
pub const RANK_ONE_WARN: f64 = 1e-6;
