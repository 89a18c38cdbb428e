//! Eulerian/Lagrangian change of variables for 2x2 systems.
//!
//! The state map `(u1, u2) ↦ (1/u1, u2/u1)` is an involution, and so is the induced map on
//! flux and entropy pair, so both directions share one implementation.

use serde::{Deserialize, Serialize};

use crate::algebra::{dot, is_positive_definite, norm, sub, Jet2, Vec2};
use crate::error::{Error, Result};
use crate::systems::{Domain, Local, SystemDef, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToLagrangian,
    ToEulerian,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::ToLagrangian => "to_lagrangian",
            Direction::ToEulerian => "to_eulerian",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransformRecord {
    pub direction: Direction,
    pub source: SystemDef,
    pub target: SystemDef,
    /// Bounds `(ε, M)` on the first source coordinate.
    pub strip: (f64, f64),
}

/// `(u1, u2) ↦ (1/u1, u2/u1)`; its own inverse.
pub fn state_map(u: Vec2) -> Vec2 {
    [1.0 / u[0], u[1] / u[0]]
}

pub(crate) fn transformed_local(src: &SystemDef, v: Vec2) -> Result<Local> {
    let v1 = Jet2::var(0, v);
    let v2 = Jet2::var(1, v);
    let u1 = v1.recip();
    let inner = [u1, v2.mul(&u1)];
    let s = src.local([inner[0].v, inner[1].v])?;
    let f1 = s.f[0].compose(&inner);
    let f2 = s.f[1].compose(&inner);
    let eta = s.eta.compose(&inner).mul(&v1);
    let q = s.q.compose(&inner).sub(&f1.mul(&eta));
    Ok(Local { u: v, f: [f1.mul(&v1).scale(-1.0), f2.sub(&f1.mul(&v2))], eta, q })
}

/// Transformed system on the image of the strip `ε ≤ u1 ≤ M`.
pub fn transform(src: &SystemDef, direction: Direction, strip: (f64, f64)) -> Result<(SystemDef, TransformRecord)> {
    let (eps, m) = strip;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain {
            state: [eps, 0.0],
            domain: format!("strip [{eps}, {m}] must stay away from u1 = 0"),
        });
    }
    if !(m > eps) || !m.is_finite() {
        return Err(Error::Argument(format!("strip upper bound {m} must exceed {eps}")));
    }
    let mut spec = SystemSpec::new("transformed").with_law(direction.name()).with_param("eps", eps).with_param("M", m);
    spec.source = Some(Box::new(src.spec().clone()));
    let mut domain = Domain::plane();
    domain.lo[0] = 1.0 / m;
    domain.hi[0] = 1.0 / eps;
    let target = SystemDef::transformed(src.clone(), spec, domain);
    let record = TransformRecord { direction, source: src.clone(), target: target.clone(), strip };
    Ok((target, record))
}

pub fn to_lagrangian(src: &SystemDef, strip: (f64, f64)) -> Result<(SystemDef, TransformRecord)> {
    transform(src, Direction::ToLagrangian, strip)
}

pub fn to_eulerian(src: &SystemDef, strip: (f64, f64)) -> Result<(SystemDef, TransformRecord)> {
    transform(src, Direction::ToEulerian, strip)
}

impl TransformRecord {
    /// Source state to target state, checking the strip.
    pub fn forward(&self, u: Vec2) -> Result<Vec2> {
        let (eps, m) = self.strip;
        if !(u[0] >= eps && u[0] <= m) || !self.source.contains(u) {
            return Err(Error::Domain { state: u, domain: format!("strip {eps} <= u1 <= {m}") });
        }
        Ok(state_map(u))
    }

    pub fn backward(&self, v: Vec2) -> Result<Vec2> {
        let u = state_map(v);
        self.forward(u)?;
        Ok(u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShockCorrespondence {
    /// `None` for a trivial shock, where any speed is admissible.
    pub target_sigma: Option<f64>,
    pub target_rh_residual: f64,
    pub source_rh_residual: f64,
    pub source_dissipation: f64,
    pub target_dissipation: f64,
    pub sign_preserved: bool,
    pub passed: bool,
}

fn dissipation(sys: &SystemDef, ul: Vec2, ur: Vec2, sigma: f64) -> Result<f64> {
    let (l, r) = (sys.local(ul)?, sys.local(ur)?);
    Ok(r.q.v - l.q.v - sigma * (r.eta.v - l.eta.v))
}

fn rh_residual(sys: &SystemDef, ul: Vec2, ur: Vec2, sigma: f64) -> Result<f64> {
    let jump_f = sub(sys.flux(ul)?, sys.flux(ur)?);
    let jump_u = sub(ul, ur);
    Ok(norm([sigma * jump_u[0] - jump_f[0], sigma * jump_u[1] - jump_f[1]]))
}

/// Maps a source shock to target variables and checks the target jump relation.
pub fn shock_correspondence_check(record: &TransformRecord, ul: Vec2, ur: Vec2, sigma: f64) -> Result<ShockCorrespondence> {
    let vl = record.forward(ul)?;
    let vr = record.forward(ur)?;
    let src = &record.source;
    let tgt = &record.target;
    let source_rh_residual = rh_residual(src, ul, ur, sigma)?;
    let dv = sub(vl, vr);
    let scale = 1.0 + norm(vl).max(norm(vr));
    if norm(dv) <= 1e-14 * scale {
        return Ok(ShockCorrespondence {
            target_sigma: None,
            target_rh_residual: 0.0,
            source_rh_residual,
            source_dissipation: 0.0,
            target_dissipation: 0.0,
            sign_preserved: true,
            passed: true,
        });
    }
    let df = sub(tgt.flux(vl)?, tgt.flux(vr)?);
    let s_hat = dot(df, dv) / dot(dv, dv);
    let target_rh_residual = rh_residual(tgt, vl, vr, s_hat)?;
    let source_dissipation = dissipation(src, ul, ur, sigma)?;
    let target_dissipation = dissipation(tgt, vl, vr, s_hat)?;
    let tol = 1e-9 * (1.0 + source_dissipation.abs());
    let sign_of = |d: f64| if d > tol { 1 } else if d < -tol { -1 } else { 0 };
    let sign_preserved = sign_of(source_dissipation) == sign_of(target_dissipation);
    Ok(ShockCorrespondence {
        target_sigma: Some(s_hat),
        target_rh_residual,
        source_rh_residual,
        source_dissipation,
        target_dissipation,
        sign_preserved,
        passed: target_rh_residual < 1e-6 && sign_preserved,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConvexityTransfer {
    pub samples: usize,
    pub both_convex: usize,
    pub both_nonconvex: usize,
    pub mismatches: usize,
}

/// Compares positive definiteness of `∇²η` at source states with that of the target entropy
/// at their images.
pub fn convexity_transfer(record: &TransformRecord, states: &[Vec2]) -> Result<ConvexityTransfer> {
    let mut out = ConvexityTransfer { samples: 0, both_convex: 0, both_nonconvex: 0, mismatches: 0 };
    for &u in states {
        let v = record.forward(u)?;
        let a = is_positive_definite(&record.source.local(u)?.eta.h);
        let b = is_positive_definite(&record.target.local(v)?.eta.h);
        out.samples += 1;
        match (a, b) {
            (true, true) => out.both_convex += 1,
            (false, false) => out.both_nonconvex += 1,
            _ => out.mismatches += 1,
        }
    }
    Ok(out)
}
