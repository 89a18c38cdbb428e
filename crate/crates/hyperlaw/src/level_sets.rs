//! Level sets of the tilted entropy, their I–IV arc partition, and extrema of `q̃` along them.

use serde::Serialize;

use crate::algebra::{add, cross, dot, norm, perp, quad_form, scale, solve22, sub, Vec2};
use crate::characteristics::{eigenframe, sector_holds, SectorVectors};
use crate::error::{Error, Result};
use crate::systems::{Region, SystemDef};
use crate::tolerances;

/// Largest turning of the tangent per step.
const MAX_TURN: f64 = std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSample {
    /// Accumulated chord length from the first sample.
    pub t: f64,
    pub u: Vec2,
    pub tangent: Vec2,
    /// Outward unit normal `∇η̃/|∇η̃|`.
    pub normal: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCurve {
    pub level: f64,
    pub tilt: Vec2,
    pub samples: Vec<LevelSample>,
    /// Counterclockwise closed loop; the last sample connects back to the first.
    pub closed: bool,
    /// Open curve cut at the window or domain boundary.
    pub clipped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Seed {
    Auto,
    Point(Vec2),
}

fn inside(sys: &SystemDef, window: &Region, u: Vec2) -> bool {
    window.contains(u) && sys.contains(u)
}

/// Minimizes `η̃` over the window by damped Newton steps with projection.
pub fn window_minimum(sys: &SystemDef, window: &Region) -> Result<(Vec2, f64)> {
    let mut u = window.center();
    if !sys.contains(u) {
        u = window
            .lattice(9)
            .into_iter()
            .find(|&p| sys.contains(p))
            .ok_or_else(|| Error::Argument("analysis window does not meet the system domain".into()))?;
    }
    let mut val = sys.eta(u)?;
    for _ in 0..200 {
        let l = sys.local(u)?;
        let dir = match solve22(&l.eta.h, l.eta.g) {
            Some(d) if dot(d, l.eta.g) > 0.0 => scale(-1.0, d),
            _ => scale(-1.0, l.eta.g),
        };
        let mut step = 1.0;
        let mut moved = false;
        while step > 1e-12 {
            let cand = window.clamp(add(u, scale(step, dir)));
            if sys.contains(cand) {
                let v = sys.eta(cand)?;
                if v < val {
                    let shift = norm(sub(cand, u));
                    u = cand;
                    val = v;
                    moved = shift > 1e-15 * (1.0 + norm(u));
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok((u, val))
}

/// Newton projection onto `{η̃ = level}` along `∇η̃`.
pub fn project(sys: &SystemDef, level: f64, mut u: Vec2) -> Result<Vec2> {
    let tol = 1e-13 * (1.0 + level.abs());
    for _ in 0..50 {
        let l = sys.local(u)?;
        let r = l.eta.v - level;
        if r.abs() <= tol {
            return Ok(u);
        }
        let g2 = dot(l.eta.g, l.eta.g);
        if g2 == 0.0 {
            return Err(Error::Argument(format!("∇η̃ vanishes at ({}, {}) on the level set", u[0], u[1])));
        }
        u = sub(u, scale(r / g2, l.eta.g));
    }
    let r = sys.eta(u)? - level;
    if r.abs() < tolerances::LEVEL {
        Ok(u)
    } else {
        Err(Error::Continuation { s: f64::NAN, reason: format!("level corrector stalled at residual {r:e}"), last_good: Some(u) })
    }
}

fn frame_at(sys: &SystemDef, u: Vec2) -> Result<(Vec2, Vec2, f64)> {
    let l = sys.local(u)?;
    let gn = norm(l.eta.g);
    if gn == 0.0 {
        return Err(Error::Argument(format!("∇η̃ vanishes at ({}, {})", u[0], u[1])));
    }
    let nu = scale(1.0 / gn, l.eta.g);
    let t = perp(nu);
    let kappa = quad_form(&l.eta.h, t, t) / gn;
    Ok((t, nu, kappa))
}

fn find_seed(sys: &SystemDef, level: f64, window: &Region) -> Result<Vec2> {
    let (umin, vmin) = window_minimum(sys, window)?;
    if level <= vmin + tolerances::LEVEL * (1.0 + vmin.abs()) {
        return Err(Error::EmptyLevel { level, minimum: vmin });
    }
    let reach = window.diameter();
    for j in 0..16 {
        let a = j as f64 * std::f64::consts::PI / 8.0;
        let d = [a.cos(), a.sin()];
        // March outward until η̃ exceeds the level, then bisect.
        let mut lo = 0.0;
        let mut hi = None;
        let mut t = reach / 256.0;
        while t <= reach {
            let p = add(umin, scale(t, d));
            if !inside(sys, window, p) {
                break;
            }
            if sys.eta(p)? >= level {
                hi = Some(t);
                break;
            }
            lo = t;
            t *= 1.25;
        }
        if let Some(mut hi) = hi {
            while hi - lo > 1e-14 * (1.0 + hi) {
                let m = 0.5 * (lo + hi);
                if sys.eta(add(umin, scale(m, d)))? >= level {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            return project(sys, level, add(umin, scale(hi, d)));
        }
    }
    Err(Error::Argument(format!("level {level} does not meet the analysis window")))
}

/// Marches from `start` in direction `dir` (+1 counterclockwise, −1 clockwise).
fn march(sys: &SystemDef, level: f64, start: Vec2, dir: f64, window: &Region, h_max: f64) -> Result<(Vec<Vec2>, bool, bool)> {
    let mut pts = vec![start];
    let mut u = start;
    let mut travelled = 0.0;
    let max_pts = 400_000;
    while pts.len() < max_pts {
        let (t, nu, kappa) = frame_at(sys, u)?;
        let t = scale(dir, t);
        let mut h = h_max.min(MAX_TURN / kappa.abs().max(1e-300));
        // Closure: the start lies just ahead.
        if travelled > 4.0 * h {
            let to_start = sub(start, u);
            let ahead = dot(to_start, t);
            if ahead > 0.0 && ahead <= 1.05 * h && cross(t, to_start).abs() < 0.5 * h {
                return Ok((pts, true, false));
            }
        }
        loop {
            let pred = add(add(u, scale(h, t)), scale(-0.5 * h * h * kappa, nu));
            if !inside(sys, window, pred) {
                if h < 1e-9 * h_max {
                    return Ok((pts, false, true));
                }
                h *= 0.5;
                continue;
            }
            match project(sys, level, pred) {
                Ok(next) if inside(sys, window, next) => {
                    let (t2, _, _) = frame_at(sys, next)?;
                    if dot(scale(dir, t2), t) < (2.5 * MAX_TURN).cos() && h > 1e-9 * h_max {
                        h *= 0.5;
                        continue;
                    }
                    travelled += norm(sub(next, u));
                    u = next;
                    pts.push(u);
                    break;
                }
                _ => {
                    if h < 1e-9 * h_max {
                        return Ok((pts, false, true));
                    }
                    h *= 0.5;
                }
            }
        }
    }
    Err(Error::Continuation { s: travelled, reason: "level curve sample budget exhausted".into(), last_good: Some(u) })
}

/// Traces `{η̃ = C}` inside the window; closed curves are counterclockwise.
pub fn trace_level_set(sys: &SystemDef, level: f64, seed: Seed, window: &Region) -> Result<LevelCurve> {
    let start = match seed {
        Seed::Auto => find_seed(sys, level, window)?,
        Seed::Point(p) => {
            if !sys.contains(p) {
                return Err(Error::Domain { state: p, domain: sys.domain().to_string() });
            }
            let (_, vmin) = window_minimum(sys, window)?;
            if level <= vmin + tolerances::LEVEL * (1.0 + vmin.abs()) {
                return Err(Error::EmptyLevel { level, minimum: vmin });
            }
            project(sys, level, p)?
        }
    };
    let h_max = window.diameter() / 100.0;
    let (fwd, closed, _) = march(sys, level, start, 1.0, window, h_max)?;
    let pts = if closed {
        fwd
    } else {
        let (back, _, _) = march(sys, level, start, -1.0, window, h_max)?;
        let mut all: Vec<Vec2> = back.into_iter().skip(1).rev().collect();
        all.extend(fwd);
        all
    };
    let mut samples = Vec::with_capacity(pts.len());
    let mut t = 0.0;
    for (i, &u) in pts.iter().enumerate() {
        if i > 0 {
            t += norm(sub(u, pts[i - 1]));
        }
        let (tan, nu, _) = frame_at(sys, u)?;
        samples.push(LevelSample { t, u, tangent: tan, normal: nu });
    }
    Ok(LevelCurve { level, tilt: sys.tilt_vector(), samples, closed, clipped: !closed })
}

/// Largest `|η̃(U) − C|` over the samples.
pub fn level_residual(sys: &SystemDef, curve: &LevelCurve) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in &curve.samples {
        worst = worst.max((sys.eta(p.u)? - curve.level).abs());
    }
    Ok(worst)
}

/// Smallest turning cross product `T_i × T_{i+1}`; nonnegative on the boundary of a convex set.
pub fn min_turning(curve: &LevelCurve) -> f64 {
    let n = curve.samples.len();
    let pairs = if curve.closed { n } else { n.saturating_sub(1) };
    (0..pairs)
        .map(|i| cross(curve.samples[i].tangent, curve.samples[(i + 1) % n].tangent))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Hash)]
pub enum ArcLabel {
    I,
    II,
    III,
    IV,
}

impl ArcLabel {
    pub const ALL: [ArcLabel; 4] = [ArcLabel::I, ArcLabel::II, ArcLabel::III, ArcLabel::IV];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["I", "II", "III", "IV"][self.index()]
    }

    fn from_signs(b1: f64, b2: f64) -> ArcLabel {
        match (b1 > 0.0, b2 > 0.0) {
            (false, false) => ArcLabel::I,
            (true, false) => ArcLabel::II,
            (true, true) => ArcLabel::III,
            (false, true) => ArcLabel::IV,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelDecomposition {
    pub labels: Vec<ArcLabel>,
    /// Maximal runs `(first index, length)` of each label, in curve order; a run may wrap around
    /// the end of a closed curve.
    pub arcs: [Vec<(usize, usize)>; 4],
    pub sectors: SectorVectors,
    pub rule: &'static str,
    /// Samples reassigned from a sector boundary.
    pub boundary_samples: usize,
    /// Samples where the inward-pointing property of the arc fails.
    pub property_violations: Vec<Vec2>,
}

impl LevelDecomposition {
    pub fn indices(&self, label: ArcLabel) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == label).collect()
    }
}

/// Canonical decomposition by the sign pattern of `ν` in the `(w_1, w_2)` basis.
pub fn decompose(sys: &SystemDef, curve: &LevelCurve, sectors: &SectorVectors) -> Result<LevelDecomposition> {
    let (w1, w2) = (sectors.w1, sectors.w2);
    let basis = [[w1[0], w2[0]], [w1[1], w2[1]]];
    let n = curve.samples.len();
    let mut raw: Vec<Option<ArcLabel>> = Vec::with_capacity(n);
    let mut violations = Vec::new();
    for p in &curve.samples {
        let frame = eigenframe(sys, p.u).map_err(|e| Error::Decomposition { state: p.u, reason: e.to_string() })?;
        if !sector_holds(&frame, w1, w2) {
            return Err(Error::Decomposition { state: p.u, reason: "sector vectors are invalid here".into() });
        }
        let beta = solve22(&basis, p.normal).ok_or_else(|| Error::Argument("sector vectors are parallel".into()))?;
        let label = if beta[0].abs() < 1e-10 || beta[1].abs() < 1e-10 { None } else { Some(ArcLabel::from_signs(beta[0], beta[1])) };
        if let Some(l) = label {
            let inward = match l {
                ArcLabel::I => scale(-1.0, frame.r[1]),
                ArcLabel::II => scale(-1.0, frame.r[0]),
                ArcLabel::III => frame.r[1],
                ArcLabel::IV => frame.r[0],
            };
            // `v` points into K when `v·ν < 0`; `inward` holds the vector that must point out.
            if dot(inward, p.normal) <= 0.0 {
                violations.push(p.u);
            }
        }
        raw.push(label);
    }
    let boundary_samples = raw.iter().filter(|l| l.is_none()).count();
    let first_known = raw.iter().position(|l| l.is_some());
    let labels: Vec<ArcLabel> = match first_known {
        None => return Err(Error::Decomposition { state: curve.samples[0].u, reason: "no sample has a definite sector".into() }),
        Some(k) => {
            let mut out = vec![ArcLabel::I; n];
            let mut prev = raw[k].unwrap();
            let order: Vec<usize> = if curve.closed { (k..n).chain(0..k).collect() } else { (0..n).collect() };
            if !curve.closed {
                prev = raw[k].unwrap();
            }
            for i in order {
                if let Some(l) = raw[i] {
                    prev = l;
                }
                out[i] = prev;
            }
            out
        }
    };
    let mut arcs: [Vec<(usize, usize)>; 4] = Default::default();
    let mut i = 0;
    while i < n {
        let l = labels[i];
        let mut j = i;
        while j + 1 < n && labels[j + 1] == l {
            j += 1;
        }
        arcs[l.index()].push((i, j - i + 1));
        i = j + 1;
    }
    if curve.closed && n > 1 && labels[0] == labels[n - 1] {
        let runs = &mut arcs[labels[0].index()];
        if runs.len() > 1 {
            let last = runs.pop().unwrap();
            runs[0] = (last.0, last.1 + runs[0].1);
        }
    }
    Ok(LevelDecomposition {
        labels,
        arcs,
        sectors: sectors.clone(),
        rule: "canonical_cyclic",
        boundary_samples,
        property_violations: violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Max,
    Min,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub u: Vec2,
    pub value: f64,
    pub kind: CriticalKind,
    /// `min_i |sin∠(∇η̃, l_i)|`.
    pub lagrange_residual: f64,
    /// Second derivative of `q̃` along the unit-speed curve.
    pub second_derivative: f64,
    /// `∇q̃·T` at the refined point.
    pub derivative: f64,
    /// Index of the sample preceding the point.
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremaReport {
    pub points: Vec<CriticalPoint>,
    /// Runs of samples where `∇q̃·T` stays numerically zero.
    pub plateaus: Vec<(usize, usize)>,
    pub clipped: bool,
}

impl ExtremaReport {
    pub fn count(&self) -> usize {
        self.points.len()
    }
}

fn tangential_derivative(sys: &SystemDef, u: Vec2) -> Result<(f64, f64)> {
    let l = sys.local(u)?;
    let gn = norm(l.eta.g);
    let t = perp(scale(1.0 / gn, l.eta.g));
    Ok((dot(l.q.g, t), norm(l.q.g)))
}

fn classify(sys: &SystemDef, u: Vec2) -> Result<(f64, f64)> {
    let l = sys.local(u)?;
    let gn = norm(l.eta.g);
    let nu = scale(1.0 / gn, l.eta.g);
    let t = perp(nu);
    let d2 = quad_form(&l.q.h, t, t) - quad_form(&l.eta.h, t, t) / gn * dot(l.q.g, nu);
    let frame = eigenframe(sys, u)?;
    let residual = frame.l.iter().map(|li| cross(nu, *li).abs()).fold(f64::INFINITY, f64::min);
    Ok((d2, residual))
}

/// All critical points of `q̃` restricted to the traced curve.
pub fn qtilde_extrema(sys: &SystemDef, curve: &LevelCurve) -> Result<ExtremaReport> {
    let n = curve.samples.len();
    let mut d = Vec::with_capacity(n);
    let mut scale_q = 0.0f64;
    for p in &curve.samples {
        let (v, g) = tangential_derivative(sys, p.u)?;
        scale_q = scale_q.max(g);
        d.push(v);
    }
    let zero = 1e-12 * scale_q.max(1e-300);
    let mut plateaus = Vec::new();
    let mut i = 0;
    while i < n {
        if d[i].abs() <= zero {
            let mut j = i;
            while j + 1 < n && d[j + 1].abs() <= zero {
                j += 1;
            }
            if j >= i + 2 {
                plateaus.push((i, j - i + 1));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    let in_plateau = |k: usize| plateaus.iter().any(|&(s, len)| k >= s && k < s + len);
    let mut found: Vec<(usize, Vec2)> = Vec::new();
    let segments = if curve.closed { n } else { n - 1 };
    for i in 0..segments {
        let j = (i + 1) % n;
        let (a, b) = (curve.samples[i].u, curve.samples[j].u);
        let (da, db) = (d[i], d[j]);
        if da.abs() <= zero || db.abs() <= zero || da.signum() == db.signum() {
            continue;
        }
        // Bisection on the chord, projected back to the level set.
        let at = |th: f64| -> Result<Vec2> { project(sys, curve.level, add(a, scale(th, sub(b, a)))) };
        let chord = norm(sub(b, a));
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while (hi - lo) * chord > tolerances::BISECTION {
            let m = 0.5 * (lo + hi);
            let (dm, _) = tangential_derivative(sys, at(m)?)?;
            if dm == 0.0 {
                (lo, hi) = (m, m);
            } else if dm.signum() == da.signum() {
                lo = m;
            } else {
                hi = m;
            }
        }
        found.push((i, at(0.5 * (lo + hi))?));
    }
    for j in 0..n {
        if d[j].abs() > zero || in_plateau(j) {
            continue;
        }
        let interior = curve.closed || (j > 0 && j + 1 < n);
        if interior {
            found.push(((j + n - 1) % n, curve.samples[j].u));
        }
    }
    found.sort_by_key(|&(i, _)| i);
    let mut points = Vec::with_capacity(found.len());
    for (i, u) in found {
        let (deriv, _) = tangential_derivative(sys, u)?;
        let (d2, lagrange_residual) = classify(sys, u)?;
        let kind = if d2.abs() <= 1e-10 * scale_q.max(1.0) {
            CriticalKind::Degenerate
        } else if d2 < 0.0 {
            CriticalKind::Max
        } else {
            CriticalKind::Min
        };
        points.push(CriticalPoint { u, value: sys.q(u)?, kind, lagrange_residual, second_derivative: d2, derivative: deriv, segment: i });
    }
    Ok(ExtremaReport { points, plateaus, clipped: curve.clipped })
}

/// Points of the curve where `q̃ = k`, refined by bisection on the level set.
pub fn qtilde_crossings(sys: &SystemDef, curve: &LevelCurve, k: f64) -> Result<Vec<Vec2>> {
    let n = curve.samples.len();
    let mut g = Vec::with_capacity(n);
    for p in &curve.samples {
        g.push(sys.q(p.u)? - k);
    }
    let segments = if curve.closed { n } else { n.saturating_sub(1) };
    let mut out = Vec::new();
    for i in 0..segments {
        let j = (i + 1) % n;
        if g[i] == 0.0 {
            out.push(curve.samples[i].u);
            continue;
        }
        if g[j] == 0.0 || g[i].signum() == g[j].signum() {
            continue;
        }
        let (a, b) = (curve.samples[i].u, curve.samples[j].u);
        let chord = norm(sub(b, a));
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while (hi - lo) * chord > tolerances::BISECTION {
            let m = 0.5 * (lo + hi);
            let gm = sys.q(project(sys, curve.level, add(a, scale(m, sub(b, a))))?)? - k;
            if gm.signum() == g[i].signum() {
                lo = m;
            } else {
                hi = m;
            }
        }
        out.push(project(sys, curve.level, add(a, scale(0.5 * (lo + hi), sub(b, a))))?);
    }
    if !curve.closed && n > 0 && g[n - 1] == 0.0 {
        out.push(curve.samples[n - 1].u);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::{sector_search, SectorOutcome};
    use crate::systems::{make_system, tilt, SystemSpec};

    fn circle_system() -> SystemDef {
        make_system(&SystemSpec::new("gradient_flux")).unwrap()
    }

    #[test]
    fn unit_circle() {
        let sys = circle_system();
        let w = Region::new([-3.0, -3.0], [3.0, 3.0]);
        let c = trace_level_set(&sys, 0.5, Seed::Auto, &w).unwrap();
        assert!(c.closed && !c.clipped);
        assert!(c.samples.len() >= 360, "{}", c.samples.len());
        for p in &c.samples {
            assert!((norm(p.u) - 1.0).abs() < 1e-9);
        }
        assert!(level_residual(&sys, &c).unwrap() < 1e-9);
        assert!(min_turning(&c) >= 0.0);
        let area: f64 = (0..c.samples.len())
            .map(|i| cross(c.samples[i].u, c.samples[(i + 1) % c.samples.len()].u))
            .sum::<f64>()
            * 0.5;
        assert!((area - std::f64::consts::PI).abs() < 1e-3, "{area}");
    }

    #[test]
    fn empty_level_at_minimum() {
        let sys = circle_system();
        let w = Region::new([-3.0, -3.0], [3.0, 3.0]);
        assert!(matches!(trace_level_set(&sys, 0.0, Seed::Auto, &w), Err(Error::EmptyLevel { .. })));
        assert!(matches!(trace_level_set(&sys, -1.0, Seed::Point([1.0, 0.0]), &w), Err(Error::EmptyLevel { .. })));
    }

    #[test]
    fn circle_decomposes_into_quarters() {
        let sys = make_system(&SystemSpec::new("two_burgers").with_param("b1", -10.0)).unwrap();
        let w = Region::new([-2.0, -2.0], [2.0, 2.0]);
        let SectorOutcome::Found(sec) = sector_search(&sys, &w, 100).unwrap() else { panic!() };
        let c = trace_level_set(&sys, 0.5, Seed::Auto, &w).unwrap();
        let d = decompose(&sys, &c, &sec).unwrap();
        assert!(d.property_violations.is_empty());
        for l in ArcLabel::ALL {
            assert_eq!(d.arcs[l.index()].len(), 1, "{l:?} {:?}", d.arcs);
            let frac = d.indices(l).len() as f64 / c.samples.len() as f64;
            assert!((frac - 0.25).abs() < 0.02, "{l:?} {frac}");
        }
        let e = qtilde_extrema(&sys, &c).unwrap();
        assert_eq!(e.count(), 4);
        for p in &e.points {
            assert!(p.u[0].abs() < 1e-8 || p.u[1].abs() < 1e-8, "{p:?}");
            assert!(p.lagrange_residual < 1e-6);
        }
    }

    #[test]
    fn p_system_level_set_matches_explicit_parametrization() {
        let base = make_system(&SystemSpec::new("p_system")).unwrap();
        let sys = tilt(&base, [-2.0, 0.0]);
        let w = Region::new([-4.0, -4.0], [4.0, 4.0]);
        let c = trace_level_set(&sys, 2.0, Seed::Auto, &w).unwrap();
        assert!(c.closed);
        for p in &c.samples {
            let [v, u] = p.u;
            assert!((u * u - (4.0 - 2.0 * v.exp() + 4.0 * v)).abs() < 1e-8, "{:?}", p.u);
        }
        let e = qtilde_extrema(&sys, &c).unwrap();
        assert_eq!(e.count(), 4, "{:?}", e.points);
        assert!(e.points.iter().all(|p| p.lagrange_residual < 1e-6));
    }

    #[test]
    fn unbounded_level_set_is_clipped() {
        let base = make_system(&SystemSpec::new("p_system")).unwrap();
        let sys = tilt(&base, [0.0, -2.0]);
        let w = Region::new([-4.0, -4.0], [4.0, 4.0]);
        let c = trace_level_set(&sys, 2.0, Seed::Auto, &w).unwrap();
        assert!(!c.closed && c.clipped);
        assert!(level_residual(&sys, &c).unwrap() < 1e-9);
        let first = c.samples[0].u;
        let last = c.samples.last().unwrap().u;
        let on_edge = |u: Vec2| u[0].abs().max(u[1].abs()) > 3.999;
        assert!(on_edge(first) && on_edge(last), "{first:?} {last:?}");
    }
}
