//! Eigenstructure, genuine nonlinearity, Smoller–Johnson quantities and the sector condition.

use serde::Serialize;

use crate::algebra::{cross, dot, norm, normalize, scale, Mat22, Vec2};
use crate::error::{Error, Result};
use crate::systems::{GradientEntropy, Local, Region, SystemDef};
use crate::tolerances;

/// Characteristic speeds with unit right and left eigenvectors, `λ[0] < λ[1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenFrame {
    pub u: Vec2,
    pub lambda: [f64; 2],
    pub r: [Vec2; 2],
    pub l: [Vec2; 2],
    pub grad_lambda: [Vec2; 2],
    /// `r_i·∇λ_i` was too small to fix the orientation.
    pub gnl_tie: [bool; 2],
}

impl EigenFrame {
    /// `r_i·∇λ_i`.
    pub fn gnl(&self) -> [f64; 2] {
        [dot(self.r[0], self.grad_lambda[0]), dot(self.r[1], self.grad_lambda[1])]
    }

    /// Flips `(r_i, l_i)` so that `r_i·reference[i] > 0`.
    pub fn regauged(mut self, reference: [Vec2; 2]) -> EigenFrame {
        for i in 0..2 {
            if dot(self.r[i], reference[i]) < 0.0 {
                self.flip(i);
            }
        }
        self
    }

    fn flip(&mut self, i: usize) {
        self.r[i] = scale(-1.0, self.r[i]);
        self.l[i] = scale(-1.0, self.l[i]);
    }
}

fn null_right(a: &Mat22, lambda: f64) -> Vec2 {
    let rows = [[a[0][0] - lambda, a[0][1]], [a[1][0], a[1][1] - lambda]];
    let row = if norm(rows[0]) >= norm(rows[1]) { rows[0] } else { rows[1] };
    normalize([-row[1], row[0]])
}

fn null_left(a: &Mat22, lambda: f64) -> Vec2 {
    let cols = [[a[0][0] - lambda, a[1][0]], [a[0][1], a[1][1] - lambda]];
    let col = if norm(cols[0]) >= norm(cols[1]) { cols[0] } else { cols[1] };
    normalize([-col[1], col[0]])
}

/// Frame from precomputed local data; `hint` keeps orientations continuous at GNL ties.
pub fn frame_from_local(local: &Local, hint: Option<&EigenFrame>) -> Result<EigenFrame> {
    let a = local.df();
    let tr = a[0][0] + a[1][1];
    let half_gap = 0.25 * (a[0][0] - a[1][1]).powi(2) + a[0][1] * a[1][0];
    let size = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let disc = 4.0 * half_gap;
    if !(disc.is_finite()) || half_gap <= 0.0 || half_gap.sqrt() <= tolerances::HYPERBOLICITY * (1.0 + size) {
        return Err(Error::Hyperbolicity { state: local.u, discriminant: disc });
    }
    let root = half_gap.sqrt();
    let lambda = [0.5 * tr - root, 0.5 * tr + root];
    let r = [null_right(&a, lambda[0]), null_right(&a, lambda[1])];
    let mut l = [null_left(&a, lambda[0]), null_left(&a, lambda[1])];
    for i in 0..2 {
        if dot(l[i], r[i]) < 0.0 {
            l[i] = scale(-1.0, l[i]);
        }
    }
    let mut frame = EigenFrame { u: local.u, lambda, r, l, grad_lambda: [[0.0; 2]; 2], gnl_tie: [false; 2] };
    let curvature_scale = 1.0 + local.f.iter().flat_map(|f| f.h.iter().flatten()).fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..2 {
        let (ri, li) = (frame.r[i], frame.l[i]);
        let lr = dot(li, ri);
        let mut g = [0.0; 2];
        for (k, gk) in g.iter_mut().enumerate() {
            let mut e = [0.0; 2];
            e[k] = 1.0;
            *gk = dot(li, local.d2f(e, ri)) / lr;
        }
        frame.grad_lambda[i] = g;
        let gnl = dot(ri, g);
        if gnl.abs() > tolerances::GNL_TIE * curvature_scale {
            if gnl < 0.0 {
                frame.flip(i);
            }
        } else {
            frame.gnl_tie[i] = true;
            let flip = match hint {
                Some(h) => dot(frame.r[i], h.r[i]) < 0.0,
                None => {
                    let ri = frame.r[i];
                    ri[0] < -1e-14 || (ri[0].abs() <= 1e-14 && ri[1] < 0.0)
                }
            };
            if flip {
                frame.flip(i);
            }
        }
    }
    Ok(frame)
}

pub fn eigenframe(sys: &SystemDef, u: Vec2) -> Result<EigenFrame> {
    frame_from_local(&sys.local(u)?, None)
}

/// Eigenframe whose tie-broken orientations follow a previous frame on the same path.
pub fn eigenframe_along(sys: &SystemDef, u: Vec2, previous: Option<&EigenFrame>) -> Result<EigenFrame> {
    frame_from_local(&sys.local(u)?, previous)
}

/// `(r_1·∇λ_1, r_2·∇λ_2)` in the normalized frame.
pub fn genuine_nonlinearity(sys: &SystemDef, u: Vec2) -> Result<[f64; 2]> {
    Ok(eigenframe(sys, u)?.gnl())
}

/// `(l_2·D²f(r_1,r_1), l_1·D²f(r_2,r_2))` for a given frame.
pub fn smoller_johnson_with_frame(local: &Local, frame: &EigenFrame) -> [f64; 2] {
    [dot(frame.l[1], local.d2f(frame.r[0], frame.r[0])), dot(frame.l[0], local.d2f(frame.r[1], frame.r[1]))]
}

/// Smoller–Johnson quantities in the normalized frame; both positive means SJ holds at `u`.
pub fn smoller_johnson(sys: &SystemDef, u: Vec2) -> Result<[f64; 2]> {
    let local = sys.local(u)?;
    let frame = frame_from_local(&local, None)?;
    Ok(smoller_johnson_with_frame(&local, &frame))
}

/// Signed rarefaction curvatures `κ_i = l_j D²f(r_i,r_i)/(λ_i − λ_j)`, so that `dr_i/ds = κ_i l_j`
/// along integral curves of `r_i`.
pub fn rarefaction_curvature(sys: &SystemDef, u: Vec2) -> Result<[f64; 2]> {
    let local = sys.local(u)?;
    let frame = frame_from_local(&local, None)?;
    let sj = smoller_johnson_with_frame(&local, &frame);
    let gap = frame.lambda[0] - frame.lambda[1];
    Ok([sj[0] / gap, -sj[1] / gap])
}

/// Closed-form speeds and right eigenvectors of the gradient-flux system, with the eigenvectors
/// scaled to unit length and positive `u`-component.
pub fn gradient_flux_closed_form(e: &GradientEntropy, u: Vec2) -> ([f64; 2], [Vec2; 2]) {
    let d = e.derivatives(u);
    let root = (d.uu * d.vv).sqrt();
    let s = (d.uu / d.vv).sqrt();
    ([d.vu - root, d.vu + root], [normalize([-s, 1.0]), normalize([s, 1.0])])
}

/// The genuine-nonlinearity expression for the gradient-flux system, entry `i` taking the sign
/// that belongs to `λ_{i+1}`. Its sign is that of `r·∇λ` for `r` with positive `u`-component.
pub fn gradient_flux_gnl_criterion(e: &GradientEntropy, u: Vec2) -> [f64; 2] {
    let d = e.derivatives(u);
    let a = (d.vvv * d.uu + 3.0 * d.vv * d.vuu) / d.vv.sqrt();
    let b = (d.vv * d.uuu + 3.0 * d.uu * d.vvu) / d.uu.sqrt();
    [a - b, a + b]
}

/// The Smoller–Johnson expression for the gradient-flux system; entry 0 is the upper sign choice
/// and pairs with `l_2 D²f(r_1,r_1)`, entry 1 the lower one with `l_1 D²f(r_2,r_2)`, both for
/// eigenvectors with negative `u`-component.
pub fn gradient_flux_sj_criterion(e: &GradientEntropy, u: Vec2) -> [f64; 2] {
    let d = e.derivatives(u);
    let ratio = d.uu / d.vv;
    let s = ratio.sqrt();
    let common = s * d.vuu - ratio * s * d.vvv;
    [ratio * d.vvu + common - d.uuu, -ratio * d.vvu + common + d.uuu]
}

/// Open arc of directions `{(cos θ, sin θ) : lo < θ < hi}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Arc {
    pub lo: f64,
    pub hi: f64,
}

impl Arc {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> Vec2 {
        let t = 0.5 * (self.lo + self.hi);
        [t.cos(), t.sin()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorVectors {
    pub w1: Vec2,
    pub w2: Vec2,
    /// Feasible directions for each vector over the sampled points.
    pub cones: [Arc; 2],
    /// Smallest of the four products `|r_i·w_j|` over the samples.
    pub margin: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorAbsence {
    /// Which vector had no feasible direction (1 or 2).
    pub vector: usize,
    /// Sample points whose feasible cones have empty common intersection.
    pub witness: Vec<Vec2>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SectorOutcome {
    Found(SectorVectors),
    Absent(SectorAbsence),
}

/// Half-plane `{w : n·w > 0}` as an arc of width π centred on `n`.
fn half_plane(n: Vec2) -> Arc {
    let t = n[1].atan2(n[0]);
    Arc { lo: t - std::f64::consts::FRAC_PI_2, hi: t + std::f64::consts::FRAC_PI_2 }
}

/// Intersection of two arcs of width at most π, placing `b` within π of `a`'s centre.
fn intersect(a: Arc, b: Arc) -> Option<Arc> {
    let two_pi = std::f64::consts::TAU;
    let ca = 0.5 * (a.lo + a.hi);
    let cb = 0.5 * (b.lo + b.hi);
    let shift = ((ca - cb) / two_pi).round() * two_pi;
    let (lo, hi) = (a.lo.max(b.lo + shift), a.hi.min(b.hi + shift));
    (hi > lo).then_some(Arc { lo, hi })
}

struct ArcTracker {
    arc: Option<Arc>,
    lo_owner: usize,
    hi_owner: usize,
}

/// Running intersection of per-sample cones; returns the arc or a witness set of sample indices.
fn common_arc(cones: &[Arc]) -> std::result::Result<Arc, Vec<usize>> {
    let mut t = ArcTracker { arc: None, lo_owner: 0, hi_owner: 0 };
    for (k, &c) in cones.iter().enumerate() {
        match t.arc {
            None => {
                t.arc = Some(c);
                t.lo_owner = k;
                t.hi_owner = k;
            }
            Some(cur) => {
                let ca = 0.5 * (cur.lo + cur.hi);
                let cb = 0.5 * (c.lo + c.hi);
                let shift = ((ca - cb) / std::f64::consts::TAU).round() * std::f64::consts::TAU;
                match intersect(cur, c) {
                    Some(next) => {
                        if c.lo + shift > cur.lo {
                            t.lo_owner = k;
                        }
                        if c.hi + shift < cur.hi {
                            t.hi_owner = k;
                        }
                        t.arc = Some(next);
                    }
                    None => {
                        let mut w = vec![t.lo_owner, t.hi_owner, k];
                        w.sort_unstable();
                        w.dedup();
                        return Err(w);
                    }
                }
            }
        }
    }
    t.arc.ok_or_else(Vec::new)
}

/// Searches for fixed `w_1, w_2` with `r_1·w_1 < 0 < r_1·w_2` and `r_2·w_i > 0` at every lattice
/// point of the region (at least `n_samples` points).
pub fn sector_search(sys: &SystemDef, region: &Region, n_samples: usize) -> Result<SectorOutcome> {
    if n_samples < 100 {
        return Err(Error::Argument(format!("sector search needs at least 100 samples, got {n_samples}")));
    }
    for corner in [region.lo, region.hi, [region.lo[0], region.hi[1]], [region.hi[0], region.lo[1]]] {
        if !sys.contains(corner) {
            return Err(Error::Domain { state: corner, domain: sys.domain().to_string() });
        }
    }
    let side = (n_samples as f64).sqrt().ceil() as usize;
    let points = region.lattice(side);
    let frames: Vec<EigenFrame> = points.iter().map(|&u| eigenframe(sys, u)).collect::<Result<_>>()?;
    sector_from_frames(&frames)
}

/// Sector search over an explicit set of frames.
pub fn sector_from_frames(frames: &[EigenFrame]) -> Result<SectorOutcome> {
    let cones1: Vec<Arc> = frames
        .iter()
        .map(|f| intersect(half_plane(scale(-1.0, f.r[0])), half_plane(f.r[1])))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Argument("parallel eigenvectors in sector search".into()))?;
    let cones2: Vec<Arc> = frames
        .iter()
        .map(|f| intersect(half_plane(f.r[0]), half_plane(f.r[1])))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Argument("parallel eigenvectors in sector search".into()))?;
    let mut arcs = [Arc { lo: 0.0, hi: 0.0 }; 2];
    for (v, cones) in [(1usize, &cones1), (2, &cones2)] {
        match common_arc(cones) {
            Ok(a) => arcs[v - 1] = a,
            Err(idx) => {
                return Ok(SectorOutcome::Absent(SectorAbsence {
                    vector: v,
                    witness: idx.iter().map(|&i| frames[i].u).collect(),
                    samples: frames.len(),
                }))
            }
        }
    }
    let (w1, w2) = (arcs[0].mid(), arcs[1].mid());
    let margin = frames
        .iter()
        .flat_map(|f| [-dot(f.r[0], w1), dot(f.r[0], w2), dot(f.r[1], w1), dot(f.r[1], w2)])
        .fold(f64::INFINITY, f64::min);
    if margin <= 0.0 || cross(w1, w2).abs() < 1e-12 {
        return Ok(SectorOutcome::Absent(SectorAbsence { vector: 1, witness: Vec::new(), samples: frames.len() }));
    }
    Ok(SectorOutcome::Found(SectorVectors { w1, w2, cones: arcs, margin, samples: frames.len() }))
}

/// Whether `w` satisfies the four sector inequalities at one frame.
pub fn sector_holds(frame: &EigenFrame, w1: Vec2, w2: Vec2) -> bool {
    dot(frame.r[0], w1) < 0.0 && dot(frame.r[0], w2) > 0.0 && dot(frame.r[1], w1) > 0.0 && dot(frame.r[1], w2) > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{add, fd_jacobian, sub};
    use crate::rng::seeded_rng;
    use crate::systems::{make_system, sample_states, SystemSpec};

    fn gradient_flux() -> SystemDef {
        make_system(
            &SystemSpec::new("gradient_flux")
                .with_param("m", 0.2)
                .with_param("alpha", 0.4)
                .with_param("kv", 0.9)
                .with_param("beta", 0.3)
                .with_param("ku", -0.6)
                .with_param("delta", 0.2)
                .with_param("ev", 0.5)
                .with_param("eu", 0.7),
        )
        .unwrap()
    }

    #[test]
    fn frame_invariants_over_catalog() {
        let mut rng = seeded_rng(21);
        let w = Region::new([-1.5, -1.5], [1.5, 1.5]);
        for sys in [
            gradient_flux(),
            make_system(&SystemSpec::new("p_system")).unwrap(),
            make_system(&SystemSpec::new("gamma_law").with_param("gamma", 3.0)).unwrap(),
        ] {
            let region = if sys.gas_law().is_some() { Region::new([0.3, -1.0], [3.0, 1.0]) } else { w };
            for u in sample_states(&sys, &region, 200, &mut rng) {
                let f = eigenframe(&sys, u).unwrap();
                assert!(f.lambda[0] < f.lambda[1]);
                for i in 0..2 {
                    assert!((norm(f.r[i]) - 1.0).abs() < 1e-12);
                    assert!((norm(f.l[i]) - 1.0).abs() < 1e-12);
                    assert!(dot(f.l[i], f.r[i]) > 0.0);
                    assert!(dot(f.l[i], f.r[1 - i]).abs() < 1e-10);
                    if !f.gnl_tie[i] {
                        assert!(f.gnl()[i] > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn examples_from_catalog() {
        let b = make_system(&SystemSpec::new("two_burgers")).unwrap();
        let f = eigenframe(&b, [1.0, 2.0]).unwrap();
        assert_eq!(f.lambda, [1.0, 12.0]);
        assert_eq!(f.r, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(genuine_nonlinearity(&b, [1.0, 2.0]).unwrap(), [1.0, 1.0]);
        assert_eq!(smoller_johnson(&b, [1.0, 2.0]).unwrap(), [0.0, 0.0]);

        let q = make_system(&SystemSpec::new("gradient_flux")).unwrap();
        let f = eigenframe(&q, [0.3, -0.7]).unwrap();
        assert!((f.lambda[0] + 1.0).abs() < 1e-14 && (f.lambda[1] - 1.0).abs() < 1e-14);
        assert_eq!(genuine_nonlinearity(&q, [0.3, -0.7]).unwrap(), [0.0, 0.0]);

        let g = make_system(&SystemSpec::new("gamma_law").with_param("gamma", 3.0)).unwrap();
        let f = eigenframe(&g, [1.0, 0.0]).unwrap();
        let s3 = 3f64.sqrt();
        assert!((f.lambda[0] + s3).abs() < 1e-12 && (f.lambda[1] - s3).abs() < 1e-12);
        let j = fd_jacobian(&|x| g.flux(x), [1.0, 0.0], 1e-6).unwrap();
        let tr = j[0][0] + j[1][1];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let root = (0.25 * tr * tr - det).sqrt();
        assert!((0.5 * tr - root - f.lambda[0]).abs() < 1e-8);
    }

    #[test]
    fn p_system_sj_signs() {
        // p = -e^v has p'' < 0; p = v^{-2} has p'' > 0.
        let neg = make_system(&SystemSpec::new("p_system")).unwrap();
        let pos = make_system(&SystemSpec::new("p_system").with_law("power").with_param("b", 2.0)).unwrap();
        let gauge = [[0.0, -1.0], [0.0, -1.0]];
        for u in [[0.5, 0.3], [1.2, -2.0], [2.0, 1.0]] {
            let g = genuine_nonlinearity(&pos, u).unwrap();
            assert!(g[0] != 0.0 && g[1] != 0.0);
            let sj = smoller_johnson(&neg, u).unwrap();
            assert!(sj[0] > 0.0 && sj[1] > 0.0, "{sj:?}");
            let local = pos.local(u).unwrap();
            let frame = frame_from_local(&local, None).unwrap().regauged(gauge);
            let flipped = smoller_johnson_with_frame(&local, &frame);
            assert!(flipped[0] < 0.0 && flipped[1] < 0.0, "{flipped:?}");
            let local = neg.local(u).unwrap();
            let frame = frame_from_local(&local, None).unwrap().regauged(gauge);
            let held = smoller_johnson_with_frame(&local, &frame);
            assert!(held[0] > 0.0 && held[1] > 0.0, "{held:?}");
        }
    }

    #[test]
    fn gradient_flux_criteria_match_frame_signs() {
        let sys = gradient_flux();
        let e = sys.gradient_entropy().unwrap();
        let mut rng = seeded_rng(8);
        let region = Region::new([-2.0, -2.0], [2.0, 2.0]);
        let mut checked = 0;
        for u in sample_states(&sys, &region, 300, &mut rng) {
            let local = sys.local(u).unwrap();
            let frame = frame_from_local(&local, None).unwrap();
            let (lambda, r) = gradient_flux_closed_form(&e, u);
            let up = frame.regauged([[0.0, 1.0], [0.0, 1.0]]);
            let down = frame.regauged([[0.0, -1.0], [0.0, -1.0]]);
            let gnl = gradient_flux_gnl_criterion(&e, u);
            let sj = gradient_flux_sj_criterion(&e, u);
            let direct_sj = smoller_johnson_with_frame(&local, &down);
            for i in 0..2 {
                assert!((lambda[i] - frame.lambda[i]).abs() < 1e-10);
                assert!(norm(sub(r[i], up.r[i])) < 1e-10);
                if gnl[i].abs() > 1e-9 {
                    assert_eq!(gnl[i] > 0.0, up.gnl()[i] > 0.0, "gnl {i} at {u:?}");
                    checked += 1;
                }
                if sj[i].abs() > 1e-9 {
                    assert_eq!(sj[i] > 0.0, direct_sj[i] > 0.0, "sj {i} at {u:?}: {sj:?} {direct_sj:?}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn sj_sign_ignores_orientation_of_r_i() {
        let sys = gradient_flux();
        let u = [0.4, -0.2];
        let local = sys.local(u).unwrap();
        let f = frame_from_local(&local, None).unwrap();
        let mut g = f;
        g.r[0] = scale(-1.0, g.r[0]);
        assert_eq!(smoller_johnson_with_frame(&local, &f)[0], smoller_johnson_with_frame(&local, &g)[0]);
    }

    fn rk4(sys: &SystemDef, u: Vec2, i: usize, h: f64, reference: Vec2) -> Vec2 {
        let field = |x: Vec2| {
            let r = eigenframe(sys, x).unwrap().r[i];
            if dot(r, reference) < 0.0 {
                scale(-1.0, r)
            } else {
                r
            }
        };
        let k1 = field(u);
        let k2 = field(add(u, scale(0.5 * h, k1)));
        let k3 = field(add(u, scale(0.5 * h, k2)));
        let k4 = field(add(u, scale(h, k3)));
        add(u, scale(h / 6.0, add(add(k1, scale(2.0, k2)), add(scale(2.0, k3), k4))))
    }

    #[test]
    fn rarefaction_curvature_matches_integrated_curves() {
        let mut rng = seeded_rng(4);
        for sys in [
            gradient_flux(),
            make_system(&SystemSpec::new("p_system")).unwrap(),
            make_system(&SystemSpec::new("gamma_law")).unwrap(),
        ] {
            let region = if sys.gas_law().is_some() { Region::new([0.5, -1.0], [2.0, 1.0]) } else { Region::new([-1.0, -1.0], [1.0, 1.0]) };
            for u in sample_states(&sys, &region, 20, &mut rng) {
                let f = eigenframe(&sys, u).unwrap();
                let kappa = rarefaction_curvature(&sys, u).unwrap();
                for i in 0..2 {
                    let h = 1e-3;
                    let ahead = rk4(&sys, u, i, h, f.r[i]);
                    let behind = rk4(&sys, u, i, -h, f.r[i]);
                    let second = scale(1.0 / (h * h), sub(add(ahead, behind), scale(2.0, u)));
                    let numeric = dot(f.l[1 - i], second);
                    assert!((numeric - kappa[i]).abs() < 1e-4, "{} i={i} {numeric} vs {}", sys.label(), kappa[i]);
                }
            }
        }
    }

    #[test]
    fn gradient_flux_sector_and_euler_absence() {
        let sys = gradient_flux();
        let region = Region::new([-1.0, -1.0], [1.0, 1.0]);
        match sector_search(&sys, &region, 400).unwrap() {
            SectorOutcome::Found(s) => {
                for u in region.lattice(30) {
                    assert!(sector_holds(&eigenframe(&sys, u).unwrap(), s.w1, s.w2));
                }
            }
            SectorOutcome::Absent(a) => panic!("{a:?}"),
        }
        let euler = make_system(&SystemSpec::new("gamma_law")).unwrap();
        let region = Region::new([0.2, -4.0], [3.0, 4.0]);
        match sector_search(&euler, &region, 400).unwrap() {
            SectorOutcome::Absent(a) => {
                assert!(!a.witness.is_empty());
                let frames: Vec<_> = a.witness.iter().map(|&u| eigenframe(&euler, u).unwrap()).collect();
                assert!(matches!(sector_from_frames(&frames).unwrap(), SectorOutcome::Absent(_)));
            }
            SectorOutcome::Found(s) => panic!("{s:?}"),
        }
    }

    #[test]
    fn decoupled_burgers_cones_are_quadrants() {
        let sys = make_system(&SystemSpec::new("two_burgers").with_param("b1", -10.0)).unwrap();
        let region = Region::new([-2.0, -2.0], [2.0, 2.0]);
        let SectorOutcome::Found(s) = sector_search(&sys, &region, 100).unwrap() else { panic!() };
        let pi = std::f64::consts::PI;
        // r_1 = (1,0), r_2 = (0,1): w_1 in the open second quadrant, w_2 in the first.
        let norm_angle = |t: f64| t.rem_euclid(2.0 * pi);
        assert!((norm_angle(s.cones[0].lo) - pi / 2.0).abs() < 1e-12);
        assert!((s.cones[0].width() - pi / 2.0).abs() < 1e-12);
        assert!(norm_angle(s.cones[1].lo).abs() < 1e-12 || (norm_angle(s.cones[1].lo) - 2.0 * pi).abs() < 1e-12);
        assert!((s.cones[1].width() - pi / 2.0).abs() < 1e-12);
    }

    #[test]
    fn hyperbolicity_failure_and_bad_arguments() {
        let sys = make_system(&SystemSpec::new("two_burgers").with_param("b2", 2.0)).unwrap();
        // f_1'(1) = f_2'(-1) = 1.
        assert!(matches!(eigenframe(&sys, [1.0, -1.0]), Err(Error::Hyperbolicity { .. })));
        assert!(matches!(eigenframe(&sys, [5.0, 0.0]), Err(Error::Domain { .. })));
        let region = Region::new([-1.0, -1.0], [1.0, 1.0]);
        assert!(matches!(sector_search(&sys, &region, 10), Err(Error::Argument(_))));
        let outside = Region::new([-5.0, -1.0], [1.0, 1.0]);
        assert!(matches!(sector_search(&sys, &outside, 100), Err(Error::Domain { .. })));
    }
}
