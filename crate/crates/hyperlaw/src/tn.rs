//! T_N configurations: synthesis, the subdeterminant sign test, parametrization recovery,
//! tilt fitting and the T4 search over constitutive surfaces.

use std::time::Instant;

use nalgebra::{SMatrix, SVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{cross, norm, normalize, rank_one_residual, solve22, sub, subdet, Mat32, Vec2, ROW_PAIRS};
use crate::error::{Error, Result};
use crate::level_sets::{project, qtilde_crossings, trace_level_set, window_minimum, Seed};
use crate::rng::stream_rng;
use crate::systems::{eval_g, tilt, Region, SystemDef};
use crate::tolerances;

/// A recovered or synthesized parametrization `X_i = P + C_1 + … + C_{i−1} + κ_i C_i`,
/// `C_i = a_i ⊗ n_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TnConfig {
    pub p: Mat32,
    pub a: Vec<[f64; 3]>,
    pub n: Vec<Vec2>,
    pub kappa: Vec<f64>,
    /// Position of each input matrix in the cyclic order used by the parametrization.
    pub order: Vec<usize>,
}

impl TnConfig {
    pub fn rank_ones(&self) -> Vec<Mat32> {
        self.a.iter().zip(&self.n).map(|(a, n)| Mat32::outer(*a, *n)).collect()
    }

    /// The matrices in parametrization order.
    pub fn matrices(&self) -> Vec<Mat32> {
        telescope(&self.p, &self.rank_ones(), &self.kappa)
    }

    pub fn closure(&self) -> f64 {
        self.rank_ones().iter().fold(Mat32::zero(), |acc, c| acc.add(c)).frobenius()
    }
}

fn telescope(p: &Mat32, c: &[Mat32], kappa: &[f64]) -> Vec<Mat32> {
    let mut base = *p;
    let mut out = Vec::with_capacity(c.len());
    for (ci, &k) in c.iter().zip(kappa) {
        out.push(base.add(&ci.scaled(k)));
        base = base.add(ci);
    }
    out
}

/// `σ₂/‖M‖`, zero for the zero matrix.
pub fn normalized_rank_one(m: &Mat32) -> f64 {
    let f = m.frobenius();
    if f == 0.0 {
        0.0
    } else {
        rank_one_residual(m) / f
    }
}

fn check_distinct(x: &[Mat32]) -> Result<()> {
    let s = x.iter().map(|m| m.max_abs()).fold(0.0, f64::max).max(1e-300);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if x[i].sub(&x[j]).max_abs() <= 1e-14 * s {
                return Err(Error::Argument(format!("matrices {} and {} coincide", i + 1, j + 1)));
            }
        }
    }
    Ok(())
}

/// Smallest normalized rank-one residual over pairs, with the pair.
pub fn min_pairwise_rank_one(x: &[Mat32]) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let r = normalized_rank_one(&x[i].sub(&x[j]));
            if r < best.0 {
                best = (r, i, j);
            }
        }
    }
    best
}

fn check_rank_one(x: &[Mat32]) -> Result<()> {
    let (r, i, j) = min_pairwise_rank_one(x);
    if r < tolerances::RANK_ONE_HARD {
        return Err(Error::RankOneConnection { i: i + 1, j: j + 1, residual: r });
    }
    Ok(())
}

pub fn tn_synthesize(p: &Mat32, a: &[[f64; 3]], n: &[Vec2], kappa: &[f64]) -> Result<Vec<Mat32>> {
    let big_n = a.len();
    if n.len() != big_n || kappa.len() != big_n {
        return Err(Error::Argument("a, n and κ must have the same length".into()));
    }
    if big_n < 4 {
        return Err(Error::Argument(format!("a T_N configuration needs N ≥ 4, got {big_n}")));
    }
    if let Some((i, k)) = kappa.iter().enumerate().find(|(_, &k)| !(k > 1.0)) {
        return Err(Error::Argument(format!("κ_{} = {k} must exceed 1", i + 1)));
    }
    let c: Vec<Mat32> = a.iter().zip(n).map(|(a, n)| Mat32::outer(*a, *n)).collect();
    let scale = c.iter().map(|m| m.frobenius()).fold(1.0, f64::max);
    let closure = c.iter().fold(Mat32::zero(), |acc, m| acc.add(m)).frobenius();
    if closure > 1e-10 * scale {
        return Err(Error::Argument(format!("Σ a_i⊗n_i has norm {closure:e}, expected 0")));
    }
    if let Some(i) = c.iter().position(|m| m.frobenius() == 0.0) {
        return Err(Error::Argument(format!("C_{} vanishes", i + 1)));
    }
    let x = telescope(p, &c, kappa);
    check_distinct(&x)?;
    check_rank_one(&x)?;
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SignVerdict {
    Possible,
    /// `subdet(X_i − X_j, rows)` has one strict sign for all `j ≠ i`.
    Excluded { index: usize, rows: (usize, usize) },
}

/// The necessary sign-change test; indices in the witness are 1-based.
pub fn tn_sign_test(x: &[Mat32]) -> Result<SignVerdict> {
    if x.len() < 3 {
        return Err(Error::Argument("sign test needs at least three matrices".into()));
    }
    check_distinct(x)?;
    let mut scale = 0.0f64;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            scale = scale.max(x[i].sub(&x[j]).frobenius().powi(2));
        }
    }
    let tol = tolerances::SIGN * scale;
    for &rows in &ROW_PAIRS {
        for i in 0..x.len() {
            let mut pos = true;
            let mut neg = true;
            for j in (0..x.len()).filter(|&j| j != i) {
                let d = subdet(&x[i].sub(&x[j]), rows)?;
                pos &= d > tol;
                neg &= d < -tol;
            }
            if pos || neg {
                return Ok(SignVerdict::Excluded { index: i + 1, rows });
            }
        }
    }
    Ok(SignVerdict::Possible)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Random starts per cyclic order.
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { starts: 64, seed: 0, max_iter: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SolveOutcome {
    Solved {
        config: TnConfig,
        /// Least-squares objective in the input units.
        residual: f64,
        /// The same objective after centring and scaling the inputs to unit size.
        normalized_residual: f64,
        /// Largest `‖X_i − X_i(config)‖_F` in the input units.
        reconstruction: f64,
        /// Pairs whose normalized rank-one residual is below the warning threshold.
        near_rank_one: Vec<(usize, usize, f64)>,
    },
    Failed {
        residual: f64,
        normalized_residual: f64,
    },
}

impl SolveOutcome {
    pub fn residual(&self) -> f64 {
        match self {
            SolveOutcome::Solved { residual, .. } | SolveOutcome::Failed { residual, .. } => *residual,
        }
    }

    pub fn solved(&self) -> bool {
        matches!(self, SolveOutcome::Solved { .. })
    }
}

const ORDERS: [[usize; 4]; 6] = [[0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3], [0, 2, 3, 1], [0, 3, 1, 2], [0, 3, 2, 1]];

type Design = SMatrix<f64, 10, 6>;
type Rhs = SMatrix<f64, 10, 3>;
type Resid = SVector<f64, 30>;
type Params = SVector<f64, 8>;

/// Variable projection: for fixed directions `n_i` and weights `κ_i` the remaining unknowns
/// `(P, a_i)` enter linearly and row by row.
struct VarPro {
    rhs: Rhs,
}

impl VarPro {
    fn new(y: &[Mat32; 4]) -> Self {
        let mut rhs = Rhs::zeros();
        for (i, m) in y.iter().enumerate() {
            for r in 0..3 {
                for c in 0..2 {
                    rhs[(2 * i + c, r)] = m.0[r][c];
                }
            }
        }
        VarPro { rhs }
    }

    fn unpack(phi: &Params) -> ([Vec2; 4], [f64; 4]) {
        let n = std::array::from_fn(|i| [phi[i].cos(), phi[i].sin()]);
        let kappa = std::array::from_fn(|i| 1.0 + phi[4 + i].clamp(-40.0, 40.0).exp());
        (n, kappa)
    }

    fn design(n: &[Vec2; 4], kappa: &[f64; 4]) -> Design {
        let mut a = Design::zeros();
        for i in 0..4 {
            for c in 0..2 {
                let row = 2 * i + c;
                a[(row, c)] = 1.0;
                for j in 0..i {
                    a[(row, 2 + j)] = n[j][c];
                }
                a[(row, 2 + i)] = kappa[i] * n[i][c];
            }
        }
        for c in 0..2 {
            for j in 0..4 {
                a[(8 + c, 2 + j)] = n[j][c];
            }
        }
        a
    }

    fn evaluate(&self, phi: &Params) -> Option<Projected> {
        let (n, kappa) = Self::unpack(phi);
        let a = Self::design(&n, &kappa);
        if !a.iter().all(|v| v.is_finite()) {
            return None;
        }
        let qr = a.qr();
        let (q, r) = (qr.q(), qr.r());
        let dmax = (0..6).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
        if (0..6).any(|k| r[(k, k)].abs() <= 1e-12 * dmax) {
            return None;
        }
        let x = r.solve_upper_triangular(&(q.transpose() * self.rhs))?;
        let res = a * x - self.rhs;
        Some(Projected { n, kappa, q, r, x, res })
    }

    fn solve_linear(&self, phi: &Params) -> (SMatrix<f64, 6, 3>, Resid) {
        match self.evaluate(phi) {
            Some(e) => (e.x, Resid::from_iterator(e.res.iter().copied())),
            None => (SMatrix::<f64, 6, 3>::zeros(), Resid::from_element(f64::INFINITY)),
        }
    }

    fn config(&self, phi: &Params) -> (Mat32, Vec<[f64; 3]>, Vec<Vec2>, Vec<f64>) {
        let (x, _) = self.solve_linear(phi);
        let (n, kappa) = Self::unpack(phi);
        let p = Mat32([[x[(0, 0)], x[(1, 0)]], [x[(0, 1)], x[(1, 1)]], [x[(0, 2)], x[(1, 2)]]]);
        let a = (0..4).map(|j| [x[(2 + j, 0)], x[(2 + j, 1)], x[(2 + j, 2)]]).collect();
        (p, a, n.to_vec(), kappa.to_vec())
    }
}

struct Projected {
    n: [Vec2; 4],
    kappa: [f64; 4],
    q: SMatrix<f64, 10, 6>,
    r: SMatrix<f64, 6, 6>,
    x: SMatrix<f64, 6, 3>,
    res: Rhs,
}

impl Projected {
    /// Exact Jacobian of the projected residual `A(φ)A⁺(φ)B − B`.
    fn jacobian(&self, phi: &Params) -> SMatrix<f64, 30, 8> {
        let mut jac = SMatrix::<f64, 30, 8>::zeros();
        for k in 0..8 {
            let j = k % 4;
            // Every derivative of the design matrix lives in column `2 + j`.
            let mut d = SVector::<f64, 10>::zeros();
            if k < 4 {
                let dn = [-self.n[j][1], self.n[j][0]];
                for c in 0..2 {
                    for i in j + 1..4 {
                        d[2 * i + c] = dn[c];
                    }
                    d[2 * j + c] = self.kappa[j] * dn[c];
                    d[8 + c] = dn[c];
                }
            } else {
                let rho = phi[k];
                if rho.abs() < 40.0 {
                    for c in 0..2 {
                        d[2 * j + c] = rho.exp() * self.n[j][c];
                    }
                }
            }
            let dx = d * self.x.row(2 + j);
            let perp = dx - self.q * (self.q.transpose() * dx);
            let mut e = SVector::<f64, 6>::zeros();
            e[2 + j] = 1.0;
            let z = self.r.transpose().solve_lower_triangular(&e).unwrap_or_else(SVector::zeros);
            let second = (self.q * z) * (d.transpose() * self.res);
            let col = perp - second;
            jac.set_column(k, &SVector::<f64, 30>::from_iterator(col.iter().copied()));
        }
        jac
    }
}

/// Levenberg–Marquardt on the projected residual.
fn levenberg_marquardt(vp: &VarPro, mut phi: Params, max_iter: usize) -> (Params, f64) {
    let Some(mut cur) = vp.evaluate(&phi) else { return (phi, f64::INFINITY) };
    let mut cost = cur.res.norm_squared();
    let mut mu = 1e-3;
    let mut stalls = 0;
    for _ in 0..max_iter {
        if cost < 1e-28 {
            break;
        }
        let jac = cur.jacobian(&phi);
        let r = Resid::from_iterator(cur.res.iter().copied());
        let jtj = jac.transpose() * jac;
        let g = jac.transpose() * r;
        let mut accepted = false;
        for _ in 0..12 {
            let mut m = jtj;
            for k in 0..8 {
                m[(k, k)] += mu * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = m.lu().solve(&(-g)) else {
                mu *= 4.0;
                continue;
            };
            let trial = phi + step;
            let Some(next) = vp.evaluate(&trial) else {
                mu *= 4.0;
                continue;
            };
            let ct = next.res.norm_squared();
            if ct.is_finite() && ct < cost {
                stalls = if ct > cost * (1.0 - 1e-6) { stalls + 1 } else { 0 };
                phi = trial;
                cur = next;
                cost = ct;
                mu = (mu / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted || stalls >= 8 || mu > 1e12 {
            break;
        }
    }
    (phi, cost)
}

fn normalize_inputs(x: &[Mat32; 4]) -> (Mat32, f64, [Mat32; 4]) {
    let mean = x.iter().fold(Mat32::zero(), |acc, m| acc.add(m)).scaled(0.25);
    let s = x.iter().map(|m| m.sub(&mean).frobenius()).fold(0.0, f64::max).max(1e-300);
    let y = std::array::from_fn(|i| x[i].sub(&mean).scaled(1.0 / s));
    (mean, s, y)
}

/// Best projected residual and parameters for one cyclic order.
fn solve_order(y: &[Mat32; 4], order: usize, opts: &SolveOptions) -> (f64, Params) {
    let perm = ORDERS[order];
    let yo: [Mat32; 4] = std::array::from_fn(|k| y[perm[k]]);
    let vp = VarPro::new(&yo);
    let mut rng = stream_rng(opts.seed, order as u64);
    let mut best = (f64::INFINITY, Params::zeros());
    for _ in 0..opts.starts {
        let mut phi = Params::zeros();
        for k in 0..4 {
            phi[k] = rng.gen_range(0.0..std::f64::consts::PI);
            phi[4 + k] = rng.gen_range(-1.5..1.5);
        }
        let (p, c) = levenberg_marquardt(&vp, phi, opts.max_iter);
        if c < best.0 {
            best = (c, p);
        }
        if best.0 < 1e-26 {
            break;
        }
    }
    best
}

/// Recovers a T4 parametrization by multistart least squares over all cyclic orders.
pub fn tn_solve(x: &[Mat32], opts: &SolveOptions) -> Result<SolveOutcome> {
    let x: &[Mat32; 4] = x.try_into().map_err(|_| Error::Argument(format!("tn_solve needs 4 matrices, got {}", x.len())))?;
    check_distinct(x)?;
    check_rank_one(x)?;
    let (mean, s, y) = normalize_inputs(x);
    let mut best = (f64::INFINITY, 0usize, Params::zeros());
    for order in 0..ORDERS.len() {
        let (c, p) = solve_order(&y, order, opts);
        if c < best.0 {
            best = (c, order, p);
        }
        if best.0 < 1e-26 {
            break;
        }
    }
    let (normalized_residual, order, phi) = best;
    let residual = normalized_residual * s * s;
    if !(normalized_residual < tolerances::TN_RESIDUAL) {
        return Ok(SolveOutcome::Failed { residual, normalized_residual });
    }
    let perm = ORDERS[order];
    let vp = VarPro::new(&std::array::from_fn(|k| y[perm[k]]));
    let (py, ay, mut n, kappa) = vp.config(&phi);
    let mut a: Vec<[f64; 3]> = ay.iter().map(|v| v.map(|t| t * s)).collect();
    for (ai, ni) in a.iter_mut().zip(n.iter_mut()) {
        if ni[0] < 0.0 || (ni[0] == 0.0 && ni[1] < 0.0) {
            *ni = [-ni[0], -ni[1]];
            *ai = ai.map(|t| -t);
        }
    }
    let config = TnConfig { p: mean.add(&py.scaled(s)), a, n, kappa, order: perm.to_vec() };
    let rebuilt = config.matrices();
    let reconstruction = (0..4).map(|k| rebuilt[k].sub(&x[perm[k]]).frobenius()).fold(0.0, f64::max);
    let rank_ok = config.rank_ones().iter().all(|c| normalized_rank_one(c) < tolerances::RANK_ONE_HARD);
    if !rank_ok {
        return Ok(SolveOutcome::Failed { residual, normalized_residual });
    }
    let mut near_rank_one = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            let r = normalized_rank_one(&x[i].sub(&x[j]));
            if r < tolerances::RANK_ONE_WARN {
                near_rank_one.push((i + 1, j + 1, r));
            }
        }
    }
    Ok(SolveOutcome::Solved { config, residual, normalized_residual, reconstruction, near_rank_one })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TiltFit {
    Tilt {
        c: Vec2,
        /// Common value of `η̃` at the first three points.
        level: f64,
        /// `|η̃(U_4) − level|`.
        eta_residual: f64,
        /// `max q̃ − min q̃` over the four points.
        q_spread: f64,
    },
    /// The first three points lie on the line `point + t·direction`.
    Degenerate { point: Vec2, direction: Vec2 },
}

/// Tilt making `η̃` equal at `U_1, U_2, U_3`, checked at `U_4`.
pub fn find_tilt(sys: &SystemDef, u: &[Vec2; 4]) -> Result<TiltFit> {
    for i in 0..4 {
        if !sys.contains(u[i]) {
            return Err(Error::Domain { state: u[i], domain: sys.domain().to_string() });
        }
        for j in i + 1..4 {
            if u[i] == u[j] {
                return Err(Error::Argument(format!("points {} and {} coincide", i + 1, j + 1)));
            }
        }
    }
    let d2 = sub(u[1], u[0]);
    let d3 = sub(u[2], u[0]);
    if cross(d2, d3).abs() <= 1e-12 * norm(d2) * norm(d3) {
        return Ok(TiltFit::Degenerate { point: u[0], direction: normalize(d2) });
    }
    let eta: Vec<f64> = u.iter().map(|&p| sys.eta(p)).collect::<Result<_>>()?;
    let c = solve22(&[d2, d3], [eta[0] - eta[1], eta[0] - eta[2]])
        .ok_or_else(|| Error::Argument("tilt system is singular".into()))?;
    let tilted = tilt(sys, c);
    let level = tilted.eta(u[0])?;
    let eta_residual = (tilted.eta(u[3])? - level).abs();
    let q: Vec<f64> = u.iter().map(|&p| tilted.q(p)).collect::<Result<_>>()?;
    let q_spread = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - q.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(TiltFit::Tilt { c, level, eta_residual, q_spread })
}

/// A map from states to 3×2 matrices searched for T4 configurations.
pub trait Surface: Sync {
    fn label(&self) -> String;
    fn window(&self) -> Region;
    fn matrix(&self, u: Vec2) -> Result<Mat32>;
    fn contains(&self, u: Vec2) -> bool;
    /// The underlying system when the surface is a constitutive set `K_{f,η,q}`.
    fn system(&self) -> Option<&SystemDef> {
        None
    }
}

pub struct SystemSurface<'a> {
    pub sys: &'a SystemDef,
    pub window: Region,
}

impl Surface for SystemSurface<'_> {
    fn label(&self) -> String {
        self.sys.label()
    }

    fn window(&self) -> Region {
        self.window
    }

    fn matrix(&self, u: Vec2) -> Result<Mat32> {
        eval_g(self.sys, u)
    }

    fn contains(&self, u: Vec2) -> bool {
        self.window.contains(u) && self.sys.contains(u)
    }

    fn system(&self) -> Option<&SystemDef> {
        Some(self.sys)
    }
}

/// Smooth surface equal to a synthesized T4 on a disc around each anchor.
#[derive(Debug, Clone)]
pub struct PlantedT4 {
    pub anchors: [Vec2; 4],
    pub matrices: [Mat32; 4],
    /// The surface equals `matrices[k]` within `plateau` of `anchors[k]` and blends into the
    /// background by `support`.
    pub plateau: f64,
    pub support: f64,
}

impl PlantedT4 {
    pub fn standard() -> Self {
        let a = [[1.0, 0.0, 0.5], [0.0, 1.0, -0.5], [-1.0, 0.0, -0.5], [0.0, -1.0, 0.5]];
        let n = [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        let x = tn_synthesize(&Mat32::zero(), &a, &n, &[2.0, 3.0, 2.5, 2.0]).expect("fixture is a valid T4");
        PlantedT4 {
            anchors: [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]],
            matrices: std::array::from_fn(|i| x[i]),
            plateau: 0.8,
            support: 0.95,
        }
    }

    fn weight(&self, d: f64) -> f64 {
        if d <= self.plateau {
            1.0
        } else if d >= self.support {
            0.0
        } else {
            let t = (d - self.plateau) / (self.support - self.plateau);
            let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
            f(1.0 - t) / (f(1.0 - t) + f(t))
        }
    }
}

impl Surface for PlantedT4 {
    fn label(&self) -> String {
        "planted_t4".into()
    }

    fn window(&self) -> Region {
        Region::new([-2.0, -2.0], [2.0, 2.0])
    }

    fn matrix(&self, u: Vec2) -> Result<Mat32> {
        let [x, y] = u;
        let background = Mat32([[x, y.sin()], [y, x * y], [x * x + y * y, x.cos()]]);
        let mut total = 0.0;
        let mut out = Mat32::zero();
        for k in 0..4 {
            let w = self.weight(norm(sub(u, self.anchors[k])));
            total += w;
            out = out.add(&self.matrices[k].scaled(w));
        }
        Ok(out.add(&background.scaled(1.0 - total)))
    }

    fn contains(&self, u: Vec2) -> bool {
        self.window().contains(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    ReducedLevelSet,
    Random,
    LocalDescent,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::ReducedLevelSet => "reduced-level-set",
            Strategy::Random => "random",
            Strategy::LocalDescent => "local-descent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Upper bound on examined candidates (descent runs for local descent).
    pub budget: usize,
    pub seed: u64,
    pub tilt_grid: Vec<Vec2>,
    pub levels: usize,
    /// Number of `q̃` values probed on each level curve.
    pub bands: usize,
    pub solver: SolveOptions,
    pub timing: bool,
}

impl SearchOptions {
    pub fn new(budget: usize, seed: u64) -> Self {
        let tilt_grid = Region::new([-3.0, -3.0], [3.0, 3.0]).lattice(5);
        SearchOptions { budget, seed, tilt_grid, levels: 10, bands: 10, solver: SolveOptions { seed, ..SolveOptions::default() }, timing: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub u: Vec<Vec2>,
    pub c: Vec2,
    /// `η̃` level shared by the points, when the candidate lies on a level set.
    pub level: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub system: String,
    pub strategy: Strategy,
    pub seed: u64,
    pub budget: usize,
    pub examined: usize,
    pub sign_rejected: usize,
    /// Exclusions by row pair `(1,2)`, `(1,3)`, `(2,3)`.
    pub rejected_by_rows: [usize; 3],
    pub solver_attempts: usize,
    /// Candidates that survived the sign test and met the solver threshold.
    pub passing: usize,
    pub structural: usize,
    pub trace_failures: usize,
    pub best_residual: Option<f64>,
    pub best_candidate: Option<Candidate>,
    pub wall_ms: Option<u64>,
}

impl SearchReport {
    fn empty(system: String, strategy: Strategy, opts: &SearchOptions) -> Self {
        SearchReport {
            system,
            strategy,
            seed: opts.seed,
            budget: opts.budget,
            examined: 0,
            sign_rejected: 0,
            rejected_by_rows: [0; 3],
            solver_attempts: 0,
            passing: 0,
            structural: 0,
            trace_failures: 0,
            best_residual: None,
            best_candidate: None,
            wall_ms: None,
        }
    }

    fn absorb(&mut self, r: CandidateResult) {
        self.examined += 1;
        match r.verdict {
            SignVerdict::Excluded { rows, .. } => {
                self.sign_rejected += 1;
                let k = ROW_PAIRS.iter().position(|&p| p == rows).unwrap_or(0);
                self.rejected_by_rows[k] += 1;
            }
            SignVerdict::Possible => {
                self.solver_attempts += 1;
                match r.residual {
                    None => self.structural += 1,
                    Some(res) => {
                        if r.solved {
                            self.passing += 1;
                        }
                        if self.best_residual.map_or(true, |b| res < b) {
                            self.best_residual = Some(res);
                            self.best_candidate = Some(Candidate { u: r.u, c: r.c, level: r.level, residual: res });
                        }
                    }
                }
            }
        }
    }

    /// Combines two reports on the same system; counts add and the best candidate wins.
    pub fn merge(mut self, other: SearchReport) -> SearchReport {
        self.budget += other.budget;
        self.examined += other.examined;
        self.sign_rejected += other.sign_rejected;
        for k in 0..3 {
            self.rejected_by_rows[k] += other.rejected_by_rows[k];
        }
        self.solver_attempts += other.solver_attempts;
        self.passing += other.passing;
        self.structural += other.structural;
        self.trace_failures += other.trace_failures;
        if let Some(b) = other.best_residual {
            if self.best_residual.map_or(true, |a| b < a) {
                self.best_residual = Some(b);
                self.best_candidate = other.best_candidate;
            }
        }
        self.wall_ms = match (self.wall_ms, other.wall_ms) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        self
    }
}

struct CandidateResult {
    u: Vec<Vec2>,
    c: Vec2,
    level: Option<f64>,
    verdict: SignVerdict,
    /// `None` when the solver refused the candidate as rank-one connected.
    residual: Option<f64>,
    solved: bool,
}

fn evaluate(x: &[Mat32; 4], u: Vec<Vec2>, c: Vec2, level: Option<f64>, solver: &SolveOptions) -> Option<CandidateResult> {
    let verdict = tn_sign_test(x).ok()?;
    let (residual, solved) = match verdict {
        SignVerdict::Excluded { .. } => (None, false),
        SignVerdict::Possible => match tn_solve(x, solver) {
            Ok(out) => (Some(out.residual()), out.solved()),
            Err(Error::RankOneConnection { .. }) => (None, false),
            Err(_) => return None,
        },
    };
    Some(CandidateResult { u, c, level, verdict, residual, solved })
}

fn tilted_matrices(sys: &SystemDef, u: &[Vec2; 4]) -> Result<[Mat32; 4]> {
    let m: Vec<Mat32> = u.iter().map(|&p| eval_g(sys, p)).collect::<Result<_>>()?;
    Ok(std::array::from_fn(|i| m[i]))
}

fn sample_point<R: Rng>(surface: &dyn Surface, rng: &mut R) -> Option<Vec2> {
    let w = surface.window();
    for _ in 0..1000 {
        let p = [rng.gen_range(w.lo[0]..w.hi[0]), rng.gen_range(w.lo[1]..w.hi[1])];
        if surface.contains(p) {
            return Some(p);
        }
    }
    None
}

fn random_candidate(surface: &dyn Surface, seed: u64, index: usize, solver: &SolveOptions) -> Option<CandidateResult> {
    let mut rng = stream_rng(seed, index as u64);
    let mut u: [Vec2; 4] = [[0.0; 2]; 4];
    for p in u.iter_mut() {
        *p = sample_point(surface, &mut rng)?;
    }
    match surface.system() {
        Some(sys) => {
            let (c, level) = match find_tilt(sys, &u).ok()? {
                TiltFit::Tilt { c, level, .. } => (c, level),
                TiltFit::Degenerate { .. } => return None,
            };
            let tilted = tilt(sys, c);
            if let Ok(p) = project(&tilted, level, u[3]) {
                if surface.contains(p) {
                    u[3] = p;
                }
            }
            let x = tilted_matrices(&tilted, &u).ok()?;
            let level = (tilted.eta(u[3]).ok()? - level).abs() < tolerances::LEVEL * (1.0 + level.abs());
            let lv = if level { Some(tilted.eta(u[0]).ok()?) } else { None };
            evaluate(&x, u.to_vec(), c, lv, solver)
        }
        None => {
            let m: Vec<Mat32> = u.iter().map(|&p| surface.matrix(p)).collect::<Result<_>>().ok()?;
            evaluate(&std::array::from_fn(|i| m[i]), u.to_vec(), [0.0, 0.0], None, solver)
        }
    }
}

/// Levels between the window minimum of `η̃` and the lowest value on the window edge.
fn level_grid(sys: &SystemDef, window: &Region, count: usize) -> Result<Vec<f64>> {
    let (_, m) = window_minimum(sys, window)?;
    let mut edge = f64::INFINITY;
    let k = 100;
    for i in 0..k {
        let t = (i as f64 + 0.5) / k as f64;
        let x = window.lo[0] + t * (window.hi[0] - window.lo[0]);
        let y = window.lo[1] + t * (window.hi[1] - window.lo[1]);
        for p in [[x, window.lo[1]], [x, window.hi[1]], [window.lo[0], y], [window.hi[0], y]] {
            if sys.contains(p) {
                edge = edge.min(sys.eta(p)?);
            }
        }
    }
    let span = if edge.is_finite() && edge > m { edge - m } else { 1.0 };
    Ok((1..=count).map(|j| m + span * j as f64 / (count + 1) as f64).collect())
}

fn reduced_search(sys: &SystemDef, window: &Region, opts: &SearchOptions, report: &mut SearchReport) -> Result<()> {
    let mut jobs: Vec<(Vec2, f64, [Vec2; 4])> = Vec::new();
    'outer: for &c in &opts.tilt_grid {
        let tilted = tilt(sys, c);
        let Ok(levels) = level_grid(&tilted, window, opts.levels) else {
            report.trace_failures += opts.levels;
            continue;
        };
        for level in levels {
            let curve = match trace_level_set(&tilted, level, Seed::Auto, window) {
                Ok(c) => c,
                Err(_) => {
                    report.trace_failures += 1;
                    continue;
                }
            };
            let q: Vec<f64> = curve.samples.iter().map(|p| tilted.q(p.u)).collect::<Result<_>>()?;
            let (qmin, qmax) = q.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            for b in 0..opts.bands {
                let k = qmin + (qmax - qmin) * (b as f64 + 0.5) / opts.bands as f64;
                let pts = qtilde_crossings(&tilted, &curve, k)?;
                if pts.len() < 4 {
                    continue;
                }
                for quad in four_subsets(pts.len()) {
                    if jobs.len() >= opts.budget {
                        break 'outer;
                    }
                    jobs.push((c, level, quad.map(|i| pts[i])));
                }
            }
        }
    }
    let results: Vec<Option<CandidateResult>> = jobs
        .par_iter()
        .map(|(c, level, u)| {
            let tilted = tilt(sys, *c);
            let x = tilted_matrices(&tilted, u).ok()?;
            evaluate(&x, u.to_vec(), *c, Some(*level), &opts.solver)
        })
        .collect();
    for r in results.into_iter().flatten() {
        report.absorb(r);
    }
    Ok(())
}

fn four_subsets(n: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

/// Compass search over the four points, warm-starting the solver along the way.
fn descent_run(surface: &dyn Surface, seed: u64, index: usize, solver: &SolveOptions) -> Option<CandidateResult> {
    let mut rng = stream_rng(seed, index as u64);
    let mut u: [Vec2; 4] = [[0.0; 2]; 4];
    for p in u.iter_mut() {
        *p = sample_point(surface, &mut rng)?;
    }
    let objective = |u: &[Vec2; 4]| -> f64 {
        let m: Option<Vec<Mat32>> = u.iter().map(|&p| surface.matrix(p).ok()).collect();
        let Some(m) = m else { return f64::INFINITY };
        let x: [Mat32; 4] = std::array::from_fn(|i| m[i]);
        if check_distinct(&x).is_err() {
            return f64::INFINITY;
        }
        let (_, _, y) = normalize_inputs(&x);
        let quick = SolveOptions { starts: 4, ..*solver };
        (0..ORDERS.len()).map(|o| solve_order(&y, o, &quick).0).fold(f64::INFINITY, f64::min)
    };
    let w = surface.window();
    let mut step = 0.25 * (w.hi[0] - w.lo[0]).min(w.hi[1] - w.lo[1]);
    let mut best = objective(&u);
    let mut evals = 0;
    while step > 1e-6 && evals < 400 && best > 1e-26 {
        let mut improved = false;
        for k in 0..8 {
            for sgn in [1.0, -1.0] {
                let mut trial = u;
                trial[k / 2][k % 2] += sgn * step;
                if !surface.contains(trial[k / 2]) {
                    continue;
                }
                evals += 1;
                let v = objective(&trial);
                if v < best {
                    best = v;
                    u = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let m: Vec<Mat32> = u.iter().map(|&p| surface.matrix(p)).collect::<Result<_>>().ok()?;
    evaluate(&std::array::from_fn(|i| m[i]), u.to_vec(), [0.0, 0.0], None, solver)
}

/// Searches a constitutive surface for T4 configurations; exhaustion is a report outcome.
pub fn t4_search(surface: &dyn Surface, strategy: Strategy, opts: &SearchOptions) -> Result<SearchReport> {
    if opts.budget == 0 {
        return Err(Error::Argument("search budget must be at least 1".into()));
    }
    let start = Instant::now();
    let mut report = SearchReport::empty(surface.label(), strategy, opts);
    match strategy {
        Strategy::ReducedLevelSet => {
            let sys = surface
                .system()
                .ok_or_else(|| Error::Argument("the reduced strategy needs an entropy pair".into()))?;
            reduced_search(sys, &surface.window(), opts, &mut report)?;
        }
        Strategy::Random => {
            let results: Vec<Option<CandidateResult>> =
                (0..opts.budget).into_par_iter().map(|k| random_candidate(surface, opts.seed, k, &opts.solver)).collect();
            for r in results.into_iter().flatten() {
                report.absorb(r);
            }
        }
        Strategy::LocalDescent => {
            let results: Vec<Option<CandidateResult>> =
                (0..opts.budget).into_par_iter().map(|k| descent_run(surface, opts.seed, k, &opts.solver)).collect();
            for r in results.into_iter().flatten() {
                report.absorb(r);
            }
        }
    }
    if opts.timing {
        report.wall_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(report)
}

/// Random valid T4 parametrization: `P`, `a_i`, unit `n_i`, `κ_i`.
pub fn random_t4<R: Rng>(rng: &mut R) -> (Mat32, Vec<[f64; 3]>, Vec<Vec2>, Vec<f64>) {
    let v3 = |rng: &mut R| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let p = {
        let a = v3(rng);
        let b = v3(rng);
        Mat32([[a[0], b[0]], [a[1], b[1]], [a[2], b[2]]])
    };
    let n: Vec<Vec2> = (0..4)
        .map(|_| {
            let t: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            [t.cos(), t.sin()]
        })
        .collect();
    let a1 = v3(rng);
    let a4 = v3(rng);
    // a_2⊗n_2 + a_3⊗n_3 = R := −a_1⊗n_1 − a_4⊗n_4, using the dual basis of (n_2, n_3).
    let r = Mat32::outer(a1, n[0]).add(&Mat32::outer(a4, n[3])).scaled(-1.0);
    let det = cross(n[1], n[2]);
    let m2 = [n[2][1] / det, -n[2][0] / det];
    let m3 = [-n[1][1] / det, n[1][0] / det];
    let apply = |m: Vec2| std::array::from_fn(|k| r.0[k][0] * m[0] + r.0[k][1] * m[1]);
    let a = vec![a1, apply(m2), apply(m3), a4];
    let kappa = (0..4).map(|_| rng.gen_range(1.2..4.0)).collect();
    (p, a, n, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level_sets::trace_level_set;
    use crate::rng::seeded_rng;
    use crate::shock::{trace_hugoniot, TraceOptions};
    use crate::systems::{make_system, SystemSpec};

    fn tartar() -> Vec<Mat32> {
        let a = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]];
        let n = [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        tn_synthesize(&Mat32::zero(), &a, &n, &[2.0; 4]).unwrap()
    }

    #[test]
    fn synthesis_contracts() {
        let x = tartar();
        assert_eq!(x.len(), 4);
        assert_eq!(tn_sign_test(&x).unwrap(), SignVerdict::Possible);
        let a = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]];
        let n = [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(tn_synthesize(&Mat32::zero(), &a, &n, &[1.0, 2.0, 2.0, 2.0]), Err(Error::Argument(_))));
        let bad = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -0.5, 0.0]];
        assert!(matches!(tn_synthesize(&Mat32::zero(), &bad, &n, &[2.0; 4]), Err(Error::Argument(_))));
    }

    #[test]
    fn projected_jacobian_matches_differences() {
        let mut rng = seeded_rng(2);
        let y: [Mat32; 4] = std::array::from_fn(|_| Mat32(std::array::from_fn(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])));
        let vp = VarPro::new(&y);
        let phi = Params::from_fn(|k, _| if k < 4 { 0.4 * k as f64 + 0.2 } else { 0.3 - 0.2 * k as f64 });
        let jac = vp.evaluate(&phi).unwrap().jacobian(&phi);
        for k in 0..8 {
            let h = 1e-6;
            let (mut p1, mut p2) = (phi, phi);
            p1[k] += h;
            p2[k] -= h;
            let fd = (vp.solve_linear(&p1).1 - vp.solve_linear(&p2).1) / (2.0 * h);
            assert!((fd - jac.column(k)).norm() < 1e-6 * (1.0 + fd.norm()), "{k}");
        }
    }

    #[test]
    fn tartar_square_round_trip() {
        let x = tartar();
        let out = tn_solve(&x, &SolveOptions::default()).unwrap();
        let SolveOutcome::Solved { reconstruction, config, .. } = out else { panic!("{out:?}") };
        assert!(reconstruction < 1e-8, "{reconstruction}");
        assert!(config.kappa.iter().all(|&k| k > 1.0));
        assert!(config.closure() < 1e-8);
    }

    #[test]
    fn random_round_trips() {
        let mut rng = seeded_rng(11);
        let mut done = 0;
        while done < 10 {
            let (p, a, n, k) = random_t4(&mut rng);
            let Ok(x) = tn_synthesize(&p, &a, &n, &k) else { continue };
            assert_eq!(tn_sign_test(&x).unwrap(), SignVerdict::Possible);
            let out = tn_solve(&x, &SolveOptions::default()).unwrap();
            let SolveOutcome::Solved { reconstruction, .. } = out else { panic!("{out:?}") };
            assert!(reconstruction < 1e-8);
            done += 1;
        }
    }

    #[test]
    fn gaussian_quadruples_fail() {
        let mut rng = seeded_rng(5);
        for _ in 0..5 {
            let x: Vec<Mat32> = (0..4)
                .map(|_| Mat32(std::array::from_fn(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])))
                .collect();
            let out = tn_solve(&x, &SolveOptions::default()).unwrap();
            assert!(!out.solved() && out.residual() > 1e-4, "{out:?}");
        }
    }

    #[test]
    fn rank_one_pair_is_structural() {
        let mut x = tartar();
        x[1] = x[0].add(&Mat32::outer([1.0, 2.0, 3.0], [0.5, -1.0]));
        assert!(matches!(tn_solve(&x, &SolveOptions::default()), Err(Error::RankOneConnection { .. })));
        x[1] = x[0];
        assert!(matches!(tn_sign_test(&x), Err(Error::Argument(_))));
    }

    #[test]
    fn sign_test_invariances() {
        let x = tartar();
        let shift = Mat32([[0.3, -1.0], [2.0, 0.1], [5.0, -7.0]]);
        let y: Vec<Mat32> = x.iter().map(|m| m.add(&shift)).collect();
        assert_eq!(tn_sign_test(&y).unwrap(), SignVerdict::Possible);
        let z = [Mat32::zero(), Mat32([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), Mat32([[2.0, 0.0], [0.0, 3.0], [0.0, 0.0]]), Mat32([[3.0, 1.0], [0.0, 4.0], [0.0, 0.0]])];
        let v = tn_sign_test(&z).unwrap();
        assert_eq!(v, SignVerdict::Excluded { index: 1, rows: (1, 2) });
        let single_signed = |x: &[Mat32], i: usize, rows| {
            let d: Vec<f64> = (0..4).filter(|&j| j != i).map(|j| subdet(&x[i].sub(&x[j]), rows).unwrap()).collect();
            d.iter().all(|&v| v > 0.0) || d.iter().all(|&v| v < 0.0)
        };
        let perm = [z[3], z[2], z[0], z[1]];
        let SignVerdict::Excluded { index, rows } = tn_sign_test(&perm).unwrap() else { panic!() };
        let original = [3, 2, 0, 1][index - 1];
        assert!(single_signed(&perm, index - 1, rows) && single_signed(&z, original, rows));
    }

    #[test]
    fn shock_curve_points_are_excluded() {
        let sys = make_system(&SystemSpec::new("p_system")).unwrap();
        let curve = trace_hugoniot(&sys, [0.0, 0.0], 1, &TraceOptions::symmetric(2.0, 0.05)).unwrap();
        let pick = |s: f64| curve.samples.iter().min_by(|a, b| (a.s - s).abs().total_cmp(&(b.s - s).abs())).unwrap().u;
        for signs in [1.0, -1.0] {
            let u = [[0.0, 0.0], pick(0.5 * signs), pick(1.0 * signs), pick(1.7 * signs)];
            let x: Vec<Mat32> = u.iter().map(|&p| eval_g(&sys, p).unwrap()).collect();
            assert!(matches!(tn_sign_test(&x).unwrap(), SignVerdict::Excluded { .. }));
        }
    }

    #[test]
    fn tilt_recovery() {
        let sys = make_system(&SystemSpec::new("two_burgers").with_param("b1", -10.0)).unwrap();
        let w = Region::new([-2.0, -2.0], [2.0, 2.0]);
        for c in [[0.0, 0.0], [0.3, -0.2]] {
            let tilted = tilt(&sys, c);
            let curve = trace_level_set(&tilted, tilted.eta([0.0, 0.0]).unwrap() + 0.8, Seed::Auto, &w).unwrap();
            let q: Vec<f64> = curve.samples.iter().map(|p| tilted.q(p.u).unwrap()).collect();
            let (lo, hi) = q.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            let pts = (1..20)
                .map(|j| qtilde_crossings(&tilted, &curve, lo + (hi - lo) * j as f64 / 20.0).unwrap())
                .find(|p| p.len() == 4)
                .expect("a q̃ band with four crossings");
            let u = [pts[0], pts[1], pts[2], pts[3]];
            let TiltFit::Tilt { c: got, q_spread, eta_residual, .. } = find_tilt(&sys, &u).unwrap() else { panic!() };
            assert!((got[0] - c[0]).abs() < 1e-8 && (got[1] - c[1]).abs() < 1e-8, "{got:?}");
            assert!(q_spread < 1e-8 && eta_residual < 1e-8);
        }
        let line = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.0, 1.0]];
        assert!(matches!(find_tilt(&sys, &line).unwrap(), TiltFit::Degenerate { .. }));
    }

    #[test]
    fn planted_fixture_is_found() {
        let planted = PlantedT4::standard();
        let mut opts = SearchOptions::new(1500, 3);
        opts.solver.starts = 16;
        let r = t4_search(&planted, Strategy::Random, &opts).unwrap();
        assert!(r.passing > 0, "{r:?}");
        assert!(r.best_residual.unwrap() < 1e-10);
    }
}
