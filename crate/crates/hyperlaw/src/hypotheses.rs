//! Sampled verdicts for the two hypothesis sets (H1) and (H2).

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{is_positive_definite, scale, sub, Vec2};
use crate::characteristics::{frame_from_local, sector_search, smoller_johnson_with_frame, EigenFrame, SectorOutcome};
use crate::error::{Error, Result};
use crate::level_sets::{decompose, qtilde_extrema, trace_level_set, window_minimum, ArcLabel, Seed};
use crate::shock::{liu_lax_check, trace_hugoniot, TraceOptions};
use crate::systems::{tilt, Region, SystemDef};
use crate::tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    VerifiedOnSamples,
    FailedAtPoint,
    /// Arc images touch within tolerance, so no decision is made.
    Indeterminate,
    NotChecked,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub item: &'static str,
    pub name: &'static str,
    pub status: Status,
    /// Universal quantifier over tilts replaced by the supplied grid.
    pub sampled_only: bool,
    pub witness: Option<Vec2>,
    pub detail: String,
}

impl Verdict {
    fn new(item: &'static str, name: &'static str) -> Self {
        Verdict { item, name, status: Status::VerifiedOnSamples, sampled_only: false, witness: None, detail: String::new() }
    }

    fn fail(mut self, at: Vec2, detail: impl Into<String>) -> Self {
        self.status = Status::FailedAtPoint;
        self.witness = Some(at);
        self.detail = detail.into();
        self
    }

    fn skip(mut self, detail: impl Into<String>) -> Self {
        self.status = Status::NotChecked;
        self.detail = detail.into();
        self
    }

    fn note(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn verified(&self) -> bool {
        self.status == Status::VerifiedOnSamples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportOptions {
    /// Lattice points per side for pointwise items.
    pub lattice: usize,
    /// Base points per side for shock-curve items.
    pub shock_lattice: usize,
    /// Half-length of traced shock curves as a fraction of the region diameter.
    pub shock_span: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { lattice: 12, shock_lattice: 3, shock_span: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub system: String,
    pub region: Region,
    pub tilt_grid: Vec<Vec2>,
    pub level_grid: Vec<f64>,
    pub samples: usize,
    pub h1: Vec<Verdict>,
    pub h2: Vec<Verdict>,
    pub sectors: Option<SectorOutcome>,
    pub recommendation: Option<String>,
}

impl HypothesisReport {
    pub fn item(&self, id: &str) -> Option<&Verdict> {
        self.h1.iter().chain(&self.h2).find(|v| v.item == id)
    }
}

/// Point where `Df` fails to have distinct real eigenvalues, refined from the sample with the
/// smallest relative gap.
pub fn hyperbolicity_witness(sys: &SystemDef, samples: &[Vec2]) -> Result<Option<Vec2>> {
    let disc = |u: Vec2| -> Result<(f64, f64)> {
        let j = sys.local(u)?.df();
        let tr = j[0][0] + j[1][1];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let d = 0.25 * tr * tr - det;
        let s = 1.0 + 0.5 * tr.abs() + d.abs().sqrt();
        Ok((d, s))
    };
    let relative = |u: Vec2| -> Result<f64> {
        let (d, s) = disc(u)?;
        Ok(if d <= 0.0 { -1.0 } else { d.sqrt() / s })
    };
    let mut best: Option<(f64, Vec2)> = None;
    for &u in samples {
        let g = relative(u)?;
        if g <= tolerances::HYPERBOLICITY {
            return Ok(Some(u));
        }
        if best.map_or(true, |(b, _)| g < b) {
            best = Some((g, u));
        }
    }
    let Some((gap, mut u)) = best else { return Ok(None) };
    if gap > 0.05 {
        return Ok(None);
    }
    // Newton on the discriminant, which vanishes quadratically on a coincidence curve.
    for _ in 0..80 {
        let (d, _) = disc(u)?;
        if relative(u)? <= tolerances::HYPERBOLICITY {
            return Ok(Some(u));
        }
        let h = 1e-6 * (1.0 + u[0].abs().max(u[1].abs()));
        let gx = (disc([u[0] + h, u[1]])?.0 - disc([u[0] - h, u[1]])?.0) / (2.0 * h);
        let gy = (disc([u[0], u[1] + h])?.0 - disc([u[0], u[1] - h])?.0) / (2.0 * h);
        let g2 = gx * gx + gy * gy;
        if g2 == 0.0 {
            break;
        }
        let next = sub(u, scale(2.0 * d / g2, [gx, gy]));
        if !sys.contains(next) {
            break;
        }
        u = next;
    }
    Ok(None)
}

struct PointData {
    u: Vec2,
    frame: Option<EigenFrame>,
    sj: [f64; 2],
    convex: bool,
}

fn point_data(sys: &SystemDef, u: Vec2) -> Result<PointData> {
    let local = sys.local(u)?;
    let convex = is_positive_definite(&local.eta.h);
    match frame_from_local(&local, None) {
        Ok(frame) => {
            let sj = smoller_johnson_with_frame(&local, &frame);
            Ok(PointData { u, frame: Some(frame), sj, convex })
        }
        Err(Error::Hyperbolicity { .. }) => Ok(PointData { u, frame: None, sj: [0.0; 2], convex }),
        Err(e) => Err(e),
    }
}

fn interval(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v))))
    }
}

enum ArcCheck {
    Holds,
    Touching,
    Overlap(Vec2, ArcLabel, ArcLabel),
}

/// Adjacent arcs may share only their common endpoint value.
fn arc_images(sys: &SystemDef, curve: &crate::level_sets::LevelCurve, labels: &[ArcLabel]) -> Result<ArcCheck> {
    let q: Vec<f64> = curve.samples.iter().map(|p| sys.q(p.u)).collect::<Result<_>>()?;
    let scale_q = q.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let images: Vec<Option<(f64, f64)>> = ArcLabel::ALL
        .iter()
        .map(|&l| interval(&(0..q.len()).filter(|&i| labels[i] == l).map(|i| q[i]).collect::<Vec<_>>()))
        .collect();
    let mut touching = false;
    for k in 0..4 {
        let (a, b) = (ArcLabel::ALL[k], ArcLabel::ALL[(k + 1) % 4]);
        let (Some(ia), Some(ib)) = (images[k], images[(k + 1) % 4]) else { continue };
        let overlap = ia.1.min(ib.1) - ia.0.max(ib.0);
        // The shared boundary sample and its neighbour contribute one sampling step.
        let step = (0..q.len())
            .filter(|&i| labels[i] == a || labels[i] == b)
            .map(|i| (q[(i + 1) % q.len()] - q[i]).abs())
            .fold(0.0, f64::max);
        if overlap <= 1e-9 * scale_q {
            continue;
        }
        if overlap <= 2.0 * step + 1e-9 * scale_q {
            touching = true;
            continue;
        }
        let lo = ia.0.max(ib.0);
        let hi = ia.1.min(ib.1);
        let mid = 0.5 * (lo + hi);
        let witness = (0..q.len())
            .filter(|&i| labels[i] == a)
            .min_by(|&i, &j| (q[i] - mid).abs().total_cmp(&(q[j] - mid).abs()))
            .map(|i| curve.samples[i].u)
            .unwrap_or(curve.samples[0].u);
        return Ok(ArcCheck::Overlap(witness, a, b));
    }
    Ok(if touching { ArcCheck::Touching } else { ArcCheck::Holds })
}

/// Hypothesis verdicts over the region lattice, the tilt grid and the level grid.
pub fn hypothesis_report(
    sys: &SystemDef,
    region: &Region,
    tilt_grid: &[Vec2],
    level_grid: &[f64],
    opts: &ReportOptions,
) -> Result<HypothesisReport> {
    if tilt_grid.is_empty() || level_grid.is_empty() {
        return Err(Error::Argument("tilt and level grids must be nonempty".into()));
    }
    let n = opts.lattice.max(10);
    let points: Vec<Vec2> = region.lattice(n).into_iter().filter(|&p| sys.contains(p)).collect();
    let data: Vec<PointData> = points.par_iter().map(|&u| point_data(sys, u)).collect::<Result<_>>()?;
    let gap_witness = hyperbolicity_witness(sys, &points)?;

    // (H1)(i): strict hyperbolicity, genuine nonlinearity, one strict Smoller–Johnson sign.
    let mut h1_i = Verdict::new("H1(i)", "admissible");
    if let Some(w) = gap_witness {
        h1_i = h1_i.fail(w, "characteristic speeds coincide");
    } else if let Some(p) = data.iter().find(|p| p.frame.map_or(false, |f| f.gnl_tie.iter().any(|&t| t))) {
        h1_i = h1_i.fail(p.u, "genuine nonlinearity fails");
    } else {
        let pos = data.iter().all(|p| p.sj.iter().all(|&v| v > 0.0));
        let neg = data.iter().all(|p| p.sj.iter().all(|&v| v < 0.0));
        if pos {
            h1_i = h1_i.note("Smoller–Johnson holds");
        } else if neg {
            h1_i = h1_i.note("Smoller–Johnson holds with the flipped sign");
        } else {
            let sign0 = data[0].sj[0].signum();
            let bad = data.iter().find(|p| p.sj.iter().any(|&v| v == 0.0 || v.signum() != sign0)).unwrap_or(&data[0]);
            h1_i = h1_i.fail(bad.u, format!("Smoller–Johnson values {:?} change sign", bad.sj));
        }
    }

    // (H1)(ii): sector condition.
    let sectors = if gap_witness.is_none() { Some(sector_search(sys, region, n * n)?) } else { None };
    let mut recommendation = None;
    let h1_ii = match &sectors {
        None => Verdict::new("H1(ii)", "sector condition").skip("requires strict hyperbolicity"),
        Some(SectorOutcome::Found(s)) => {
            Verdict::new("H1(ii)", "sector condition").note(format!("w1 = {:?}, w2 = {:?}", s.w1, s.w2))
        }
        Some(SectorOutcome::Absent(a)) => {
            recommendation = Some("sector condition fails here; analyse the Lagrangian transform of this system".into());
            Verdict::new("H1(ii)", "sector condition").fail(a.witness[0], format!("no feasible w{}", a.vector))
        }
    };

    // (H1)(iii): λ_1 ≤ 0 ≤ λ_2.
    let mut h1_iii = Verdict::new("H1(iii)", "speed signs");
    if let Some(w) = gap_witness {
        h1_iii = h1_iii.skip(format!("not hyperbolic at {w:?}"));
    } else if let Some(p) = data.iter().find(|p| p.frame.map_or(false, |f| f.lambda[0] > 0.0 || f.lambda[1] < 0.0)) {
        h1_iii = h1_iii.fail(p.u, format!("λ = {:?}", p.frame.unwrap().lambda));
    }

    let mut convex = Verdict::new("H1(iv)", "strictly convex entropy");
    if let Some(p) = data.iter().find(|p| !p.convex) {
        convex = convex.fail(p.u, "entropy Hessian is not positive definite");
    }

    // Level-set items over the tilt × level grid.
    let jobs: Vec<(Vec2, f64)> = tilt_grid.iter().flat_map(|&c| level_grid.iter().map(move |&l| (c, l))).collect();
    let found = match &sectors {
        Some(SectorOutcome::Found(s)) => Some(s.clone()),
        _ => None,
    };
    struct LevelOutcome {
        decomposition: Option<Result<ArcCheck>>,
        extrema: Option<(usize, bool, Vec2)>,
        traced: bool,
    }
    let outcomes: Vec<LevelOutcome> = jobs
        .par_iter()
        .map(|&(c, level)| {
            let tilted = tilt(sys, c);
            let curve = match window_minimum(&tilted, region) {
                Ok((_, m)) if level > m => trace_level_set(&tilted, level, Seed::Auto, region).ok(),
                _ => None,
            };
            let Some(curve) = curve else {
                return LevelOutcome { decomposition: None, extrema: None, traced: false };
            };
            let decomposition = found.as_ref().map(|s| {
                let d = decompose(&tilted, &curve, s)?;
                arc_images(&tilted, &curve, &d.labels)
            });
            let extrema = qtilde_extrema(&tilted, &curve)
                .ok()
                .map(|e| (e.count(), curve.closed, e.points.last().map_or(curve.samples[0].u, |p| p.u)));
            LevelOutcome { decomposition, extrema, traced: true }
        })
        .collect();
    let traced = outcomes.iter().filter(|o| o.traced).count();

    let mut h1_v = Verdict::new("H1(v)", "four-arc decomposition");
    h1_v.sampled_only = true;
    if found.is_none() {
        h1_v = h1_v.skip("requires sector vectors");
    } else {
        let mut touching = false;
        let mut failure = None;
        for o in &outcomes {
            match &o.decomposition {
                Some(Ok(ArcCheck::Overlap(w, a, b))) => {
                    failure.get_or_insert((*w, format!("q̃({}) and q̃({}) overlap", a.name(), b.name())));
                }
                Some(Ok(ArcCheck::Touching)) => touching = true,
                Some(Err(e)) => {
                    let at = match e {
                        Error::Decomposition { state, .. } => *state,
                        _ => region.center(),
                    };
                    failure.get_or_insert((at, e.to_string()));
                }
                _ => {}
            }
        }
        h1_v = match failure {
            Some((w, msg)) => h1_v.fail(w, msg),
            None if touching => {
                let mut v = h1_v.note("adjacent arc images touch within tolerance");
                v.status = Status::Indeterminate;
                v
            }
            None => h1_v.note(format!("{traced} of {} level sets traced", jobs.len())),
        };
    }

    // (H2)(i)–(iii) from shock curves at a coarse lattice of base points.
    let bases: Vec<Vec2> = region.lattice(opts.shock_lattice.max(2)).into_iter().filter(|&p| sys.contains(p)).collect();
    let span = opts.shock_span * region.diameter();
    let trace = TraceOptions::symmetric(span, span / 40.0);
    let mut h2_i = Verdict::new("H2(i)", "global shock curves");
    let mut h2_ii = Verdict::new("H2(ii)", "Liu entropy condition");
    let mut h2_iii = Verdict::new("H2(iii)", "non-perverse Hugoniot locus");
    h2_iii.sampled_only = true;
    if let Some(w) = gap_witness {
        h2_i = h2_i.fail(w, "strict hyperbolicity fails, so shock curves are not separated");
        h2_ii = h2_ii.skip("requires shock curves");
        h2_iii = h2_iii.skip("requires shock curves");
    } else {
        let curves: Vec<(Vec2, usize, Result<_>)> = bases
            .par_iter()
            .flat_map(|&u0| [1usize, 2].into_par_iter().map(move |k| (u0, k)))
            .map(|(u0, k)| (u0, k, trace_hugoniot(sys, u0, k, &trace)))
            .collect();
        for (u0, k, curve) in curves {
            let curve = match curve {
                Ok(c) => c,
                Err(e) => {
                    if h2_i.verified() {
                        h2_i = h2_i.fail(u0, format!("family {k}: {e}"));
                    }
                    continue;
                }
            };
            if let Some(p) = curve.samples.iter().find(|p| !(p.rh_residual < tolerances::RH)) {
                if h2_i.verified() {
                    h2_i = h2_i.fail(p.u, format!("Rankine–Hugoniot residual {:e}", p.rh_residual));
                }
            }
            if curve.samples.len() < 3 {
                continue;
            }
            let ll = liu_lax_check(sys, &curve)?;
            if !ll.liu && h2_ii.verified() {
                let at = ll.extrema.first().map_or(u0, |e| e.u);
                h2_ii = h2_ii.fail(at, format!("σ is not monotone on S{k} from {u0:?}"));
            }
            let monotone_coord = (0..2).any(|c| {
                let v: Vec<f64> = curve.samples.iter().map(|p| p.u[c]).collect();
                v.windows(2).all(|w| w[1] > w[0]) || v.windows(2).all(|w| w[1] < w[0])
            });
            if h2_iii.verified() {
                if !ll.liu || !ll.lax_e {
                    let at = ll.lax_e_violations.first().or(ll.extrema.first()).map_or(u0, |e| e.u);
                    h2_iii = h2_iii.fail(at, format!("Liu or Lax-E fails on S{k} from {u0:?}"));
                } else if !monotone_coord {
                    h2_iii = h2_iii.fail(u0, format!("no monotone coordinate on S{k}"));
                }
            }
        }
        if h2_iii.verified() {
            h2_iii = h2_iii.note("collinear quadruples are not enumerated");
        }
    }

    let mut h2_v = Verdict::new("H2(v)", "at most four q̃ extrema");
    h2_v.sampled_only = true;
    let mut clipped = 0;
    for o in &outcomes {
        if let Some((count, closed, at)) = o.extrema {
            if !closed {
                clipped += 1;
            }
            let ok = if closed { count <= 4 } else { count < 4 };
            if !ok && h2_v.verified() {
                h2_v = h2_v.fail(at, format!("{count} critical points on a {} level set", if closed { "bounded" } else { "clipped" }));
            }
        }
    }
    if h2_v.verified() {
        h2_v = h2_v.note(format!("{traced} level sets, {clipped} clipped to the region"));
    }

    let mut h2_iv = convex.clone();
    h2_iv.item = "H2(iv)";

    Ok(HypothesisReport {
        system: sys.label(),
        region: *region,
        tilt_grid: tilt_grid.to_vec(),
        level_grid: level_grid.to_vec(),
        samples: points.len(),
        h1: vec![h1_i, h1_ii, h1_iii, convex, h1_v],
        h2: vec![h2_i, h2_ii, h2_iii, h2_iv, h2_v],
        sectors,
        recommendation,
    })
}
