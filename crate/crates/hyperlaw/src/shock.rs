//! Hugoniot-locus continuation, shock-speed diagnostics and Lax's dissipation identity.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::algebra::{dot, norm, rank_one_residual, scale, sub, subdet, Vec2};
use crate::characteristics::{eigenframe, EigenFrame};
use crate::error::{Error, Result};
use crate::systems::{relative_entropy, SystemDef};
use crate::tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShockSample {
    pub s: f64,
    pub u: Vec2,
    pub sigma: f64,
    pub rh_residual: f64,
    /// `q(S) − q(U0) − σ(η(S) − η(U0))`.
    pub dissipation_direct: f64,
    /// `∫₀ˢ σ'(τ) η(U0|S(τ)) dτ`, filled by [`dissipation_profile`].
    pub dissipation_integral: f64,
    /// Tangent `(dU/ds, dσ/ds)` oriented towards increasing `s`.
    pub tangent: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `s > 0` leaves the base point along `−r_k`.
    MinusRk,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShockCurve {
    pub base: Vec2,
    pub family: usize,
    pub lambda_base: f64,
    pub orientation: Orientation,
    /// Samples sorted by strictly increasing `s`, including `s = 0`.
    pub samples: Vec<ShockSample>,
    /// The curve left the domain before reaching the requested span on the negative / positive side.
    pub truncated: [bool; 2],
}

impl ShockCurve {
    pub fn zero_index(&self) -> usize {
        self.samples.iter().position(|p| p.s == 0.0).expect("curve contains its base sample")
    }

    pub fn s_range(&self) -> (f64, f64) {
        (self.samples[0].s, self.samples[self.samples.len() - 1].s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub s_min: f64,
    pub s_max: f64,
    /// Largest continuation step in `s`.
    pub step: f64,
    pub max_samples: usize,
}

impl TraceOptions {
    pub fn symmetric(span: f64, step: f64) -> Self {
        TraceOptions { s_min: -span, s_max: span, step, max_samples: 200_000 }
    }
}

struct Rh<'a> {
    sys: &'a SystemDef,
    base: Vec2,
    f0: Vec2,
    tol: f64,
}

struct Corrected {
    u: Vec2,
    sigma: f64,
    residual: f64,
}

enum StepFailure {
    Domain,
    Newton(String),
}

impl<'a> Rh<'a> {
    fn new(sys: &'a SystemDef, base: Vec2) -> Result<Self> {
        let f0 = sys.flux(base)?;
        let tol = tolerances::CORRECTOR * (1.0 + norm(f0) + norm(base));
        Ok(Rh { sys, base, f0, tol })
    }

    fn residual(&self, u: Vec2, sigma: f64) -> Result<Vec2> {
        let f = self.sys.flux(u)?;
        Ok([
            sigma * (u[0] - self.base[0]) - (f[0] - self.f0[0]),
            sigma * (u[1] - self.base[1]) - (f[1] - self.f0[1]),
        ])
    }

    /// Rows of `[σI − Df, U − U0]`.
    fn jacobian(&self, u: Vec2, sigma: f64) -> Result<[[f64; 3]; 2]> {
        let a = self.sys.local(u)?.df();
        Ok([
            [sigma - a[0][0], -a[0][1], u[0] - self.base[0]],
            [-a[1][0], sigma - a[1][1], u[1] - self.base[1]],
        ])
    }

    /// Null vector of the Jacobian scaled to `|T_U| = 1`, with `T·reference > 0`.
    fn tangent(&self, u: Vec2, sigma: f64, reference: [f64; 3]) -> Result<[f64; 3]> {
        let [a, b] = self.jacobian(u, sigma)?;
        let mut t = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        let nu = t[0].hypot(t[1]);
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Continuation {
                s: f64::NAN,
                reason: "tangent has no state component".into(),
                last_good: Some(u),
            });
        }
        let sign = if t.iter().zip(reference.iter()).map(|(x, y)| x * y).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for x in t.iter_mut() {
            *x *= sign / nu;
        }
        Ok(t)
    }

    /// Newton solve of the jump relation with the constraint `a·(U − anchor) = ds`.
    fn correct(&self, guess: (Vec2, f64), anchor: Vec2, a: Vec2, ds: f64) -> std::result::Result<Corrected, StepFailure> {
        let (mut u, mut sigma) = guess;
        let mut best = f64::INFINITY;
        for _ in 0..30 {
            if !self.sys.contains(u) {
                return Err(StepFailure::Domain);
            }
            let r = self.residual(u, sigma).map_err(|_| StepFailure::Domain)?;
            let c = dot(a, sub(u, anchor)) - ds;
            let size = norm(r).hypot(c);
            // Newton is quadratic here, so polishing well past the tolerance is cheap.
            if norm(r) < 1e-4 * self.tol && c.abs() < 1e-13 * (1.0 + ds.abs()) {
                return Ok(Corrected { u, sigma, residual: norm(r) });
            }
            if size >= best && norm(r) < 1e2 * self.tol {
                // Rounding floor reached.
                return Ok(Corrected { u, sigma, residual: norm(r) });
            }
            best = best.min(size);
            let j = self.jacobian(u, sigma).map_err(|_| StepFailure::Domain)?;
            let m = Matrix3::new(j[0][0], j[0][1], j[0][2], j[1][0], j[1][1], j[1][2], a[0], a[1], 0.0);
            let rhs = Vector3::new(-r[0], -r[1], -c);
            let Some(d) = m.lu().solve(&rhs) else {
                return Err(StepFailure::Newton("singular corrector matrix".into()));
            };
            u = [u[0] + d[0], u[1] + d[1]];
            sigma += d[2];
            if !(u[0].is_finite() && u[1].is_finite() && sigma.is_finite()) {
                return Err(StepFailure::Newton("corrector diverged".into()));
            }
        }
        Err(StepFailure::Newton("corrector did not converge".into()))
    }
}

fn sample(rh: &Rh, s: f64, u: Vec2, sigma: f64, residual: f64, tangent: [f64; 3]) -> Result<ShockSample> {
    let l0 = rh.sys.local(rh.base)?;
    let l = rh.sys.local(u)?;
    Ok(ShockSample {
        s,
        u,
        sigma,
        rh_residual: residual,
        dissipation_direct: l.q.v - l0.q.v - sigma * (l.eta.v - l0.eta.v),
        dissipation_integral: f64::NAN,
        tangent,
    })
}

/// Traces one side of the curve. `dir` is +1 or −1; returned samples are ordered by `|s|`.
fn trace_side(rh: &Rh, frame: &EigenFrame, k: usize, dir: f64, opts: &TraceOptions) -> Result<(Vec<ShockSample>, bool)> {
    let end = if dir > 0.0 { opts.s_max } else { -opts.s_min };
    let mut out = Vec::new();
    if end <= 0.0 {
        return Ok((out, false));
    }
    let g = dot(frame.r[k], frame.grad_lambda[k]);
    let t0 = [-frame.r[k][0], -frame.r[k][1], -0.5 * g];
    let mut travel = [dir * t0[0], dir * t0[1], dir * t0[2]];
    let (mut u, mut sigma, mut s) = (rh.base, frame.lambda[k], 0.0f64);
    let mut h = opts.step.min(end);
    let mut first = true;
    let mut truncated = false;
    while s < end - 1e-14 * end.max(1.0) {
        if out.len() >= opts.max_samples {
            return Err(Error::Continuation { s: dir * s, reason: "sample budget exhausted".into(), last_good: Some(u) });
        }
        let h_try = h.min(end - s);
        let guess = ([u[0] + h_try * travel[0], u[1] + h_try * travel[1]], sigma + h_try * travel[2]);
        let attempt = rh.correct(guess, u, [travel[0], travel[1]], h_try);
        let accepted = match attempt {
            Ok(c) => {
                let moved = norm(sub(c.u, u));
                let new_t = rh.tangent(c.u, c.sigma, travel);
                match new_t {
                    Ok(t) if moved > 0.5 * h_try && dot([t[0], t[1]], [travel[0], travel[1]]) > 0.94 => {
                        if first {
                            let other = frame.lambda[1 - k];
                            if (c.sigma - frame.lambda[k]).abs() >= (c.sigma - other).abs() {
                                return Err(Error::Continuation {
                                    s: dir * h_try,
                                    reason: format!("shock speed {} does not match family {}", c.sigma, k + 1),
                                    last_good: Some(rh.base),
                                });
                            }
                        }
                        Some((c, t))
                    }
                    _ => None,
                }
            }
            Err(StepFailure::Domain) => {
                truncated = true;
                None
            }
            Err(StepFailure::Newton(_)) => None,
        };
        match accepted {
            Some((c, t)) => {
                s += h_try;
                u = c.u;
                sigma = c.sigma;
                travel = t;
                let stored = [dir * t[0], dir * t[1], dir * t[2]];
                out.push(sample(rh, dir * s, u, sigma, c.residual, stored)?);
                first = false;
                truncated = false;
                h = (1.5 * h).min(opts.step);
            }
            None => {
                h *= 0.5;
                if h < tolerances::MIN_STEP {
                    if truncated {
                        return Ok((out, true));
                    }
                    return Err(Error::Continuation {
                        s: dir * s,
                        reason: "step size fell below the minimum".into(),
                        last_good: Some(u),
                    });
                }
            }
        }
    }
    Ok((out, false))
}

/// Traces the `family`-th shock curve through `u0` by pseudo-arclength continuation of
/// `σ(U − U0) = f(U) − f(U0)`; `s` is the projected state arclength.
pub fn trace_hugoniot(sys: &SystemDef, u0: Vec2, family: usize, opts: &TraceOptions) -> Result<ShockCurve> {
    if family != 1 && family != 2 {
        return Err(Error::Argument(format!("family must be 1 or 2, got {family}")));
    }
    if !(opts.step > 0.0) || !(opts.s_min <= 0.0 && opts.s_max >= 0.0) {
        return Err(Error::Argument("span must contain 0 and the step must be positive".into()));
    }
    let k = family - 1;
    let frame = eigenframe(sys, u0)?;
    let rh = Rh::new(sys, u0)?;
    let g = dot(frame.r[k], frame.grad_lambda[k]);
    let t0 = [-frame.r[k][0], -frame.r[k][1], -0.5 * g];
    let (neg, neg_trunc) = trace_side(&rh, &frame, k, -1.0, opts)?;
    let (pos, pos_trunc) = trace_side(&rh, &frame, k, 1.0, opts)?;
    let mut samples: Vec<ShockSample> = neg.into_iter().rev().collect();
    let mut origin = sample(&rh, 0.0, u0, frame.lambda[k], 0.0, t0)?;
    origin.dissipation_direct = 0.0;
    samples.push(origin);
    samples.extend(pos);
    Ok(ShockCurve {
        base: u0,
        family,
        lambda_base: frame.lambda[k],
        orientation: Orientation::MinusRk,
        samples,
        truncated: [neg_trunc, pos_trunc],
    })
}

/// State and speed at parameter `s`, re-solved from the neighbouring sample nearer the base.
pub fn point_at(sys: &SystemDef, curve: &ShockCurve, s: f64) -> Result<(Vec2, f64, [f64; 3])> {
    let (lo, hi) = curve.s_range();
    if !(s >= lo && s <= hi) {
        return Err(Error::Argument(format!("s = {s} outside the traced range [{lo}, {hi}]")));
    }
    let z = curve.zero_index();
    let anchor = if s >= 0.0 {
        let i = curve.samples[z..].partition_point(|p| p.s <= s) + z - 1;
        &curve.samples[i]
    } else {
        let i = curve.samples[..=z].partition_point(|p| p.s < s);
        &curve.samples[i]
    };
    if anchor.s == s {
        return Ok((anchor.u, anchor.sigma, anchor.tangent));
    }
    let rh = Rh::new(sys, curve.base)?;
    let ds = s - anchor.s;
    let t = anchor.tangent;
    let guess = ([anchor.u[0] + ds * t[0], anchor.u[1] + ds * t[1]], anchor.sigma + ds * t[2]);
    match rh.correct(guess, anchor.u, [t[0], t[1]], ds) {
        Ok(c) => {
            let tan = rh.tangent(c.u, c.sigma, t)?;
            Ok((c.u, c.sigma, tan))
        }
        Err(StepFailure::Domain) => Err(Error::Domain { state: guess.0, domain: sys.domain().to_string() }),
        Err(StepFailure::Newton(reason)) => Err(Error::Continuation { s, reason, last_good: Some(anchor.u) }),
    }
}

/// `σ'(τ) η(U0|S(τ))` in the anchor-projection parametrization.
fn integrand(sys: &SystemDef, curve: &ShockCurve, anchor: &ShockSample, tau: f64) -> Result<f64> {
    if tau == 0.0 {
        return Ok(0.0);
    }
    let (u, _, t) = point_at(sys, curve, tau)?;
    let speed = t[2] / dot([anchor.tangent[0], anchor.tangent[1]], [t[0], t[1]]);
    Ok(speed * relative_entropy(sys, curve.base, u)?)
}

struct Simpson<'a> {
    f: &'a dyn Fn(f64) -> Result<f64>,
    depth_limit: u32,
}

impl Simpson<'_> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(&self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = ((self.f)(lm)?, (self.f)(rm)?);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        // Below this width the difference is rounding noise.
        let negligible = (b - a).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        if delta.abs() <= 15.0 * tol || negligible {
            return Ok(left + right + delta / 15.0);
        }
        if depth >= self.depth_limit {
            return Err(Error::Quadrature { a, b, tolerance: tol });
        }
        Ok(self.recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
            + self.recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
    }

    fn integrate(&self, a: f64, b: f64, tol: f64) -> Result<f64> {
        let (fa, fm, fb) = ((self.f)(a)?, (self.f)(0.5 * (a + b))?, (self.f)(b)?);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        self.recurse(a, b, fa, fm, fb, whole, tol, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationSample {
    pub s: f64,
    pub direct: f64,
    pub integral: f64,
    pub relative_entropy: f64,
    pub relative_residual: f64,
}

/// Both sides of Lax's identity `D(s) = ∫₀ˢ σ'(τ) η(U0|S(τ)) dτ` at every sample; also stores the
/// integral on the curve.
pub fn dissipation_profile(sys: &SystemDef, curve: &mut ShockCurve, tolerance: f64) -> Result<Vec<DissipationSample>> {
    let z = curve.zero_index();
    let n = curve.samples.len();
    let mut integral = vec![0.0; n];
    let frozen = curve.clone();
    for step in [1isize, -1] {
        let mut acc = 0.0;
        let mut i = z as isize;
        loop {
            let j = i + step;
            if j < 0 || j as usize >= n {
                break;
            }
            let (near, far) = (&frozen.samples[i as usize], &frozen.samples[j as usize]);
            let anchor = *near;
            let f = |tau: f64| integrand(sys, &frozen, &anchor, tau);
            let simpson = Simpson { f: &f, depth_limit: 40 };
            let piece = simpson.integrate(near.s, far.s, tolerance)?;
            acc += piece;
            integral[j as usize] = acc;
            i = j;
        }
    }
    let mut out = Vec::with_capacity(n);
    for (k, p) in curve.samples.iter_mut().enumerate() {
        p.dissipation_integral = integral[k];
        let re = relative_entropy(sys, frozen.base, p.u)?;
        let scale = p.dissipation_direct.abs().max(integral[k].abs());
        let rel = if scale < 1e-300 { 0.0 } else { (p.dissipation_direct - integral[k]).abs() / scale };
        out.push(DissipationSample { s: p.s, direct: p.dissipation_direct, integral: integral[k], relative_entropy: re, relative_residual: rel });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    NonMonotone,
    TooShort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedExtremum {
    pub s: f64,
    pub u: Vec2,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiuLaxReport {
    pub negative_side: Monotonicity,
    pub positive_side: Monotonicity,
    /// Strict monotonicity of `σ` over the whole curve.
    pub liu: bool,
    pub extrema: Vec<SpeedExtremum>,
    pub lax_e: bool,
    pub lax_e_violations: Vec<SpeedExtremum>,
}

fn monotonicity(values: &[f64]) -> Monotonicity {
    if values.len() < 2 {
        return Monotonicity::TooShort;
    }
    let inc = values.windows(2).all(|w| w[1] > w[0]);
    let dec = values.windows(2).all(|w| w[1] < w[0]);
    match (inc, dec) {
        (true, _) => Monotonicity::Increasing,
        (_, true) => Monotonicity::Decreasing,
        _ => Monotonicity::NonMonotone,
    }
}

/// Liu monotonicity of the shock speed and Lax E-condition membership along a traced curve.
pub fn liu_lax_check(sys: &SystemDef, curve: &ShockCurve) -> Result<LiuLaxReport> {
    if curve.samples.len() < 3 {
        return Err(Error::Argument("Liu/Lax check needs at least 3 samples".into()));
    }
    let z = curve.zero_index();
    let sig: Vec<f64> = curve.samples.iter().map(|p| p.sigma).collect();
    let negative_side = monotonicity(&sig[..=z]);
    let positive_side = monotonicity(&sig[z..]);
    let overall = monotonicity(&sig);
    let mut extrema = Vec::new();
    for i in 1..sig.len() - 1 {
        let (a, b) = (sig[i] - sig[i - 1], sig[i + 1] - sig[i]);
        if a * b < 0.0 {
            let p = &curve.samples[i];
            extrema.push(SpeedExtremum { s: p.s, u: p.u, sigma: p.sigma });
        }
    }
    let k = curve.family - 1;
    let mut lax_e_violations = Vec::new();
    for p in &curve.samples {
        let lk = eigenframe(sys, p.u)?.lambda[k];
        let (lo, hi) = (lk.min(curve.lambda_base), lk.max(curve.lambda_base));
        let tol = 1e-10 * (1.0 + lo.abs().max(hi.abs()));
        if p.sigma < lo - tol || p.sigma > hi + tol {
            lax_e_violations.push(SpeedExtremum { s: p.s, u: p.u, sigma: p.sigma });
        }
    }
    Ok(LiuLaxReport {
        negative_side,
        positive_side,
        liu: matches!(overall, Monotonicity::Increasing | Monotonicity::Decreasing),
        extrema,
        lax_e: lax_e_violations.is_empty(),
        lax_e_violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankOneScan {
    /// Smallest `rank_one_residual(G(U0) − G(S)) / |G(U0) − G(S)|` over the window.
    pub min_normalized: f64,
    pub witness_s: f64,
    pub witness_u: Vec2,
    /// Largest `|det_12(G(U0) − G(S))|` over the whole curve.
    pub max_subdet12: f64,
    pub samples: usize,
}

/// Rank-one residuals of `G(U0) − G(S(s))` over `s_lo ≤ |s| ≤ s_hi`.
pub fn rank_one_scan(sys: &SystemDef, curve: &ShockCurve, s_lo: f64, s_hi: f64) -> Result<RankOneScan> {
    if !(s_lo > 0.0) || !(s_hi >= s_lo) {
        return Err(Error::Argument(format!("rank-one scan needs 0 < s_lo <= s_hi, got [{s_lo}, {s_hi}]")));
    }
    let g0 = sys.local(curve.base)?.g_matrix();
    let mut out = RankOneScan { min_normalized: f64::INFINITY, witness_s: f64::NAN, witness_u: [f64::NAN; 2], max_subdet12: 0.0, samples: 0 };
    for p in &curve.samples {
        let m = g0.sub(&sys.local(p.u)?.g_matrix());
        out.max_subdet12 = out.max_subdet12.max(subdet(&m, (1, 2))?.abs());
        if p.s.abs() < s_lo || p.s.abs() > s_hi {
            continue;
        }
        out.samples += 1;
        let r = rank_one_residual(&m) / m.frobenius();
        if r < out.min_normalized {
            out.min_normalized = r;
            out.witness_s = p.s;
            out.witness_u = p.u;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityProbe {
    pub delta: f64,
    pub max_displacement: f64,
    pub common_span: (f64, f64),
    pub truncated: bool,
}

/// Traces from `u0` and from eight base points at distance `δ`, comparing states at equal `s`.
pub fn curve_continuity_probe(sys: &SystemDef, u0: Vec2, family: usize, delta: f64, opts: &TraceOptions) -> Result<ContinuityProbe> {
    if !(delta >= 0.0) {
        return Err(Error::Argument(format!("perturbation scale {delta} must be nonnegative")));
    }
    let reference = trace_hugoniot(sys, u0, family, opts)?;
    let mut span = reference.s_range();
    let mut truncated = reference.truncated.iter().any(|&t| t);
    let mut others = Vec::new();
    if delta > 0.0 {
        for j in 0..8 {
            let a = j as f64 * std::f64::consts::FRAC_PI_4;
            let base = [u0[0] + delta * a.cos(), u0[1] + delta * a.sin()];
            let c = trace_hugoniot(sys, base, family, opts)?;
            let (lo, hi) = c.s_range();
            span = (span.0.max(lo), span.1.min(hi));
            truncated |= c.truncated.iter().any(|&t| t);
            others.push(c);
        }
    }
    let mut worst = 0.0f64;
    for c in &others {
        for p in reference.samples.iter().filter(|p| p.s >= span.0 && p.s <= span.1) {
            let (u, _, _) = point_at(sys, c, p.s)?;
            worst = worst.max(norm(sub(u, p.u)));
        }
    }
    Ok(ContinuityProbe { delta, max_displacement: worst, common_span: span, truncated })
}

/// Points where the curve crosses `{η̃ = C}` (the tilt lives in `sys`), bisected in `s`.
pub fn level_exits(sys: &SystemDef, curve: &ShockCurve, level: f64) -> Result<Vec<(f64, Vec2)>> {
    let mut vals = Vec::with_capacity(curve.samples.len());
    for p in &curve.samples {
        vals.push(sys.eta(p.u)? - level);
    }
    let mut out = Vec::new();
    for i in 0..vals.len() - 1 {
        if vals[i] == 0.0 {
            out.push((curve.samples[i].s, curve.samples[i].u));
            continue;
        }
        if vals[i] * vals[i + 1] < 0.0 {
            let (mut a, mut b) = (curve.samples[i].s, curve.samples[i + 1].s);
            let mut fa = vals[i];
            while b - a > tolerances::BISECTION {
                let m = 0.5 * (a + b);
                let fm = sys.eta(point_at(sys, curve, m)?.0)? - level;
                if fa * fm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            let s = 0.5 * (a + b);
            out.push((s, point_at(sys, curve, s)?.0));
        }
    }
    if let Some(&last) = vals.last() {
        if last == 0.0 {
            let p = curve.samples[vals.len() - 1];
            out.push((p.s, p.u));
        }
    }
    Ok(out)
}

/// Largest `|sin|` of the angle between the rays from the base through two samples on the same
/// side of the curve; a star-shaped curve keeps distinct samples on distinct rays.
pub fn star_shape_defect(curve: &ShockCurve) -> f64 {
    let z = curve.zero_index();
    let dirs: Vec<(f64, Vec2)> = curve
        .samples
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != z)
        .map(|(_, p)| (p.s, crate::algebra::normalize(sub(p.u, curve.base))))
        .collect();
    let mut worst = f64::INFINITY;
    for i in 0..dirs.len() {
        for j in (i + 1)..dirs.len() {
            if dirs[i].0.signum() == dirs[j].0.signum() {
                let c = crate::algebra::cross(dirs[i].1, dirs[j].1).abs();
                let d = dot(dirs[i].1, dirs[j].1);
                if d > 0.0 {
                    worst = worst.min(c);
                }
            }
        }
    }
    worst
}

/// `max |σ(s) − λ_k(U0)| / |s|` over the samples with `0 < |s| ≤ s_hi`.
pub fn speed_contact_constant(curve: &ShockCurve, s_hi: f64) -> f64 {
    curve
        .samples
        .iter()
        .filter(|p| p.s != 0.0 && p.s.abs() <= s_hi)
        .map(|p| (p.sigma - curve.lambda_base).abs() / p.s.abs())
        .fold(0.0, f64::max)
}

/// `w·T` at the first positive-side sample, with `T` the unit state tangent there.
pub fn side_of_first_step(curve: &ShockCurve, w: Vec2) -> f64 {
    let z = curve.zero_index();
    match curve.samples.get(z + 1) {
        Some(p) => dot(w, crate::algebra::normalize(sub(p.u, curve.base))),
        None => 0.0,
    }
}

/// `σ(U_L − U_R) − (f(U_L) − f(U_R))`.
pub fn rh_residual(sys: &SystemDef, ul: Vec2, ur: Vec2, sigma: f64) -> Result<f64> {
    let d = sub(sys.flux(ul)?, sys.flux(ur)?);
    Ok(norm(sub(scale(sigma, sub(ul, ur)), d)))
}
