//! Run configuration and the CSV/JSON/SVG artifacts behind each CLI subcommand.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::Vec2;
use crate::characteristics::{sector_search, SectorOutcome};
use crate::error::{Error, Result};
use crate::hypotheses::{hypothesis_report, ReportOptions};
use crate::level_sets::{decompose, level_residual, qtilde_crossings, qtilde_extrema, trace_level_set, ArcLabel, Seed};
use crate::shock::{dissipation_profile, liu_lax_check, rank_one_scan, trace_hugoniot, ShockCurve, TraceOptions};
use crate::systems::{make_system, tilt, Region, SystemDef, SystemSpec};
use crate::tn::{t4_search, PlantedT4, SearchOptions, SearchReport, SolveOptions, Strategy, Surface, SystemSurface};
use crate::transform::{state_map, transform, Direction};

pub const SCHEMA_VERSION: u32 = 1;

/// System kind accepted by `t4-search` only: the planted T4 test surface.
pub const PLANTED_KIND: &str = "planted_t4";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HugoniotConfig {
    pub base: Vec2,
    #[serde(default = "default_families")]
    pub families: Vec<usize>,
    #[serde(default = "default_span")]
    pub span: f64,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_families() -> Vec<usize> {
    vec![1, 2]
}

fn default_span() -> f64 {
    5.0
}

fn default_step() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSetConfig {
    #[serde(default)]
    pub tilt: Vec2,
    pub level: f64,
    #[serde(default)]
    pub seed: Option<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub budget: usize,
    pub seed: Option<u64>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_levels")]
    pub bands: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
}

fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::ReducedLevelSet, Strategy::Random]
}

fn default_levels() -> usize {
    10
}

fn default_starts() -> usize {
    SolveOptions::default().starts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    pub direction: Direction,
    pub eps: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure8Config {
    pub tilt: Vec2,
    pub level: f64,
    #[serde(default = "default_shock_span")]
    pub shock_span: f64,
    #[serde(default = "default_shock_step")]
    pub step: f64,
}

fn default_shock_span() -> f64 {
    1.5
}

fn default_shock_step() -> f64 {
    0.02
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emit {
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub json: bool,
    #[serde(default = "yes")]
    pub svg: bool,
}

fn yes() -> bool {
    true
}

impl Default for Emit {
    fn default() -> Self {
        Emit { csv: true, json: true, svg: true }
    }
}

/// One JSON document driving every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub system: SystemSpec,
    pub window: Region,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt_grid: Option<Vec<Vec2>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hugoniot: Option<HugoniotConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levelset: Option<LevelSetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure8: Option<Figure8Config>,
    #[serde(default)]
    pub emit: Emit,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    /// Parses and validates a configuration document.
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(config_err(format!("unsupported schema version {}", self.schema)));
        }
        let w = &self.window;
        if !(0..2).all(|i| w.lo[i].is_finite() && w.hi[i].is_finite() && w.lo[i] < w.hi[i]) {
            return Err(config_err(format!("window {:?} x {:?} is not a nonempty finite box", w.lo, w.hi)));
        }
        if self.system.kind != PLANTED_KIND {
            let d = self.build_system()?.domain();
            if !(0..2).all(|i| w.lo[i] > d.lo[i] && w.hi[i] < d.hi[i]) {
                return Err(config_err(format!("window {:?} x {:?} is not inside the domain {d}", w.lo, w.hi)));
            }
        }
        if let Some(s) = &self.search {
            if s.budget < 1 {
                return Err(config_err("search budget must be at least 1"));
            }
            if s.strategies.is_empty() || s.levels == 0 || s.bands == 0 || s.starts == 0 {
                return Err(config_err("search needs strategies and positive levels, bands and starts"));
            }
        }
        if let Some(h) = &self.hugoniot {
            if h.families.is_empty() || h.families.iter().any(|&k| k != 1 && k != 2) {
                return Err(config_err(format!("hugoniot families must be 1 or 2, got {:?}", h.families)));
            }
            if !(h.span > 0.0) || !(h.step > 0.0) {
                return Err(config_err("hugoniot span and step must be positive"));
            }
        }
        if let Some(f) = &self.figure8 {
            if !(f.shock_span > 0.0) || !(f.step > 0.0) {
                return Err(config_err("figure8 shock_span and step must be positive"));
            }
        }
        Ok(())
    }

    pub fn build_system(&self) -> Result<SystemDef> {
        if self.system.kind == PLANTED_KIND {
            return Err(config_err(format!("`{PLANTED_KIND}` is only a t4-search surface")));
        }
        make_system(&self.system)
    }

    fn tilts(&self) -> Vec<Vec2> {
        self.tilt_grid.clone().unwrap_or_else(|| Region::new([-3.0, -3.0], [3.0, 3.0]).lattice(5))
    }

    fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> Result<&'a T> {
        value.as_ref().ok_or_else(|| config_err(format!("configuration has no `{name}` section")))
    }
}

/// A named output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn json(name: impl Into<String>, value: &impl Serialize) -> Result<Artifact> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Argument(e.to_string()))?;
        bytes.push(b'\n');
        Ok(Artifact { name: name.into(), bytes })
    }

    fn text(name: impl Into<String>, text: String) -> Artifact {
        Artifact { name: name.into(), bytes: text.into_bytes() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunFlags {
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// One-line summary for the terminal.
    pub summary: String,
    /// Passing T4 candidates, for `t4-search --expect-none`.
    pub passing: usize,
}

fn keep(emit: bool, a: Artifact, out: &mut Vec<Artifact>) {
    if emit {
        out.push(a);
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn analyze(cfg: &RunConfig, _flags: RunFlags) -> Result<Outcome> {
    let sys = cfg.build_system()?;
    let levels = cfg.section(&cfg.levels, "levels")?;
    let report = hypothesis_report(&sys, &cfg.window, &cfg.tilts(), levels, &ReportOptions::default())?;
    let failed: Vec<&str> = report.h1.iter().chain(&report.h2).filter(|v| !v.verified()).map(|v| v.item).collect();
    let summary = if failed.is_empty() {
        format!("{}: all items verified on samples", report.system)
    } else {
        format!("{}: not verified: {}", report.system, failed.join(", "))
    };
    let mut artifacts = Vec::new();
    keep(cfg.emit.json, Artifact::json("analysis.json", &report)?, &mut artifacts);
    Ok(Outcome { artifacts, summary, passing: 0 })
}

fn side_summary(samples: &[crate::shock::DissipationSample], positive: bool) -> Value {
    let side: Vec<_> = samples.iter().filter(|d| if positive { d.s > 0.0 } else { d.s < 0.0 }).collect();
    if side.is_empty() {
        return Value::Null;
    }
    let all_negative = side.iter().all(|d| d.direct < 0.0);
    let all_positive = side.iter().all(|d| d.direct > 0.0);
    let min_magnitude = side.iter().map(|d| d.direct.abs()).fold(f64::INFINITY, f64::min);
    let max_relative = side.iter().map(|d| d.relative_residual).fold(0.0, f64::max);
    json!({
        "samples": side.len(),
        "sign": if all_negative { "negative" } else if all_positive { "positive" } else { "mixed" },
        "min_magnitude": min_magnitude,
        "max_relative_residual": max_relative,
    })
}

pub fn hugoniot(cfg: &RunConfig, _flags: RunFlags) -> Result<Outcome> {
    let sys = cfg.build_system()?;
    let h = cfg.section(&cfg.hugoniot, "hugoniot")?;
    if !cfg.window.contains(h.base) {
        return Err(config_err(format!("hugoniot base {:?} lies outside the window", h.base)));
    }
    let opts = TraceOptions::symmetric(h.span, h.step);
    let mut artifacts = Vec::new();
    let mut families = Vec::new();
    let mut notes = Vec::new();
    for &k in &h.families {
        let mut curve = trace_hugoniot(&sys, h.base, k, &opts)?;
        let dissipation = dissipation_profile(&sys, &mut curve, 1e-12)?;
        let liu_lax = liu_lax_check(&sys, &curve)?;
        let (s_min, s_max) = curve.s_range();
        let reach = s_max.max(-s_min).min(5.0);
        let scan = if reach >= 0.1 { Some(rank_one_scan(&sys, &curve, 0.1, reach)?) } else { None };
        let mut csv = String::from(
            "s,u1,u2,sigma,rh_residual,dissipation_direct,dissipation_integral,relative_entropy,relative_residual\n",
        );
        for (p, d) in curve.samples.iter().zip(&dissipation) {
            let row = [p.s, p.u[0], p.u[1], p.sigma, p.rh_residual, d.direct, d.integral, d.relative_entropy, d.relative_residual];
            csv.push_str(&row.iter().map(|&x| num(x)).collect::<Vec<_>>().join(","));
            csv.push('\n');
        }
        keep(cfg.emit.csv, Artifact::text(format!("hugoniot_S{k}.csv"), csv), &mut artifacts);
        let max_rh = curve.samples.iter().map(|p| p.rh_residual).fold(0.0, f64::max);
        let max_rel = dissipation.iter().map(|d| d.relative_residual).fold(0.0, f64::max);
        notes.push(format!("S{k}: {} samples, liu {}, lax-e {}", curve.samples.len(), liu_lax.liu, liu_lax.lax_e));
        families.push(json!({
            "family": k,
            "samples": curve.samples.len(),
            "s_range": [s_min, s_max],
            "truncated": curve.truncated,
            "lambda_base": curve.lambda_base,
            "max_rh_residual": max_rh,
            "liu_lax": liu_lax,
            "rank_one_scan": scan,
            "dissipation": {
                "max_relative_residual": max_rel,
                "negative_side": side_summary(&dissipation, false),
                "positive_side": side_summary(&dissipation, true),
            },
        }));
    }
    let doc = json!({ "system": sys.label(), "base": h.base, "span": h.span, "step": h.step, "families": families });
    keep(cfg.emit.json, Artifact::json("hugoniot.json", &doc)?, &mut artifacts);
    Ok(Outcome { artifacts, summary: notes.join("; "), passing: 0 })
}

pub fn levelset(cfg: &RunConfig, _flags: RunFlags) -> Result<Outcome> {
    let sys = cfg.build_system()?;
    let l = cfg.section(&cfg.levelset, "levelset")?;
    let tilted = tilt(&sys, l.tilt);
    let seed = l.seed.map_or(Seed::Auto, Seed::Point);
    let curve = trace_level_set(&tilted, l.level, seed, &cfg.window)?;
    let extrema = qtilde_extrema(&tilted, &curve)?;
    let sectors = sector_search(&sys, &cfg.window, 400)?;
    let (labels, decomposition) = match &sectors {
        SectorOutcome::Found(s) => match decompose(&tilted, &curve, s) {
            Ok(d) => {
                let summary = json!({
                    "rule": d.rule,
                    "arcs": d.arcs,
                    "sectors": d.sectors,
                    "boundary_samples": d.boundary_samples,
                    "property_violations": d.property_violations,
                });
                (Some(d.labels), summary)
            }
            Err(e) => (None, json!({ "error": e.to_string() })),
        },
        SectorOutcome::Absent(a) => (None, json!({ "error": "sector condition fails", "absence": a })),
    };
    let mut csv = String::from("t,u1,u2,qtilde,arc\n");
    for (i, p) in curve.samples.iter().enumerate() {
        let arc = labels.as_ref().map_or("", |ls: &Vec<ArcLabel>| ls[i].name());
        let _ = writeln!(csv, "{},{},{},{},{arc}", num(p.t), num(p.u[0]), num(p.u[1]), num(tilted.q(p.u)?));
    }
    let doc = json!({
        "system": sys.label(),
        "tilt": l.tilt,
        "level": l.level,
        "closed": curve.closed,
        "clipped": curve.clipped,
        "samples": curve.samples.len(),
        "level_residual": level_residual(&tilted, &curve)?,
        "decomposition": decomposition,
        "extrema": extrema,
    });
    let summary = format!(
        "{} level set with {} samples, {} q̃ extrema",
        if curve.closed { "closed" } else { "clipped" },
        curve.samples.len(),
        extrema.count()
    );
    let mut artifacts = Vec::new();
    keep(cfg.emit.csv, Artifact::text("levelset.csv", csv), &mut artifacts);
    keep(cfg.emit.json, Artifact::json("levelset.json", &doc)?, &mut artifacts);
    Ok(Outcome { artifacts, summary, passing: 0 })
}

pub fn search(cfg: &RunConfig, flags: RunFlags) -> Result<Outcome> {
    let s = cfg.section(&cfg.search, "search")?;
    let seed = s.seed.ok_or_else(|| config_err("t4-search needs `search.seed`"))?;
    let mut opts = SearchOptions::new(s.budget, seed);
    opts.tilt_grid = cfg.tilts();
    opts.levels = s.levels;
    opts.bands = s.bands;
    opts.solver.starts = s.starts;
    opts.timing = flags.timing;
    let planted;
    let sys;
    let surface: Box<dyn Surface + '_> = if cfg.system.kind == PLANTED_KIND {
        planted = PlantedT4::standard();
        Box::new(planted)
    } else {
        sys = cfg.build_system()?;
        Box::new(SystemSurface { sys: &sys, window: cfg.window })
    };
    let mut artifacts = Vec::new();
    let mut passing = 0;
    let mut notes = Vec::new();
    for &strategy in &s.strategies {
        let report: SearchReport = t4_search(surface.as_ref(), strategy, &opts)?;
        passing += report.passing;
        notes.push(format!(
            "{}: {} examined, {} passing, best residual {}",
            strategy.name(),
            report.examined,
            report.passing,
            report.best_residual.map_or("none".into(), |r| format!("{r:e}"))
        ));
        keep(cfg.emit.json, Artifact::json(format!("search_{}.json", strategy.name()), &report)?, &mut artifacts);
    }
    Ok(Outcome { artifacts, summary: notes.join("; "), passing })
}

/// Image of the window under the state map, shrunk into the open target domain.
fn transformed_window(window: &Region, strip: (f64, f64)) -> Result<Region> {
    let lo = window.lo[0].max(strip.0 * (1.0 + 1e-9));
    let hi = window.hi[0].min(strip.1 * (1.0 - 1e-9));
    if !(lo < hi) {
        return Err(config_err(format!("window does not meet the strip [{}, {}]", strip.0, strip.1)));
    }
    let corners = [[lo, window.lo[1]], [lo, window.hi[1]], [hi, window.lo[1]], [hi, window.hi[1]]].map(state_map);
    let min = |i: usize| corners.iter().map(|c| c[i]).fold(f64::INFINITY, f64::min);
    let max = |i: usize| corners.iter().map(|c| c[i]).fold(f64::NEG_INFINITY, f64::max);
    Ok(Region::new([min(0), min(1)], [max(0), max(1)]))
}

pub fn transform_config(cfg: &RunConfig, _flags: RunFlags) -> Result<Outcome> {
    let sys = cfg.build_system()?;
    let t = cfg.section(&cfg.transform, "transform")?;
    let (target, _) = transform(&sys, t.direction, (t.eps, t.m))?;
    let out = RunConfig {
        schema: SCHEMA_VERSION,
        system: target.spec().clone(),
        window: transformed_window(&cfg.window, (t.eps, t.m))?,
        tilt_grid: cfg.tilt_grid.clone(),
        levels: None,
        hugoniot: None,
        levelset: None,
        search: cfg.search.clone(),
        transform: None,
        figure8: None,
        emit: cfg.emit,
    };
    out.validate()?;
    let summary = format!("{} -> {}", sys.label(), target.label());
    let mut artifacts = Vec::new();
    keep(cfg.emit.json, Artifact::json("transformed.json", &out)?, &mut artifacts);
    Ok(Outcome { artifacts, summary, passing: 0 })
}

/// Affine map from a state box to a pixel box, with `y` pointing up.
struct Frame {
    src: Region,
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn px(&self, p: Vec2) -> (f64, f64) {
        let tx = (p[0] - self.src.lo[0]) / (self.src.hi[0] - self.src.lo[0]);
        let ty = (p[1] - self.src.lo[1]) / (self.src.hi[1] - self.src.lo[1]);
        (self.x0 + tx * self.w, self.y0 + (1.0 - ty) * self.h)
    }

    fn polyline(&self, pts: &[Vec2], class: &str, closed: bool) -> String {
        let mut s = format!("<polyline class=\"{class}\" points=\"");
        for (i, &p) in pts.iter().chain(if closed { pts.first() } else { None }).enumerate() {
            let (x, y) = self.px(p);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{x:.3},{y:.3}");
        }
        s.push_str("\"/>\n");
        s
    }

    fn marker(&self, p: Vec2, class: &str, r: f64, label: &str) -> String {
        let (x, y) = self.px(p);
        format!(
            "<circle class=\"{class}\" cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{r}\"/>\n<text x=\"{:.3}\" y=\"{:.3}\">{label}</text>\n",
            x + 6.0,
            y - 6.0
        )
    }
}

fn padded(lo: Vec2, hi: Vec2) -> Region {
    let pad = [0.08 * (hi[0] - lo[0]).max(1e-6), 0.08 * (hi[1] - lo[1]).max(1e-6)];
    Region::new([lo[0] - pad[0], lo[1] - pad[1]], [hi[0] + pad[0], hi[1] + pad[1]])
}

fn bounds(pts: impl Iterator<Item = Vec2>) -> (Vec2, Vec2) {
    pts.fold(([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]), |(lo, hi), p| {
        ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])])
    })
}

pub fn figure8(cfg: &RunConfig, _flags: RunFlags) -> Result<Outcome> {
    let sys = cfg.build_system()?;
    let f = cfg.section(&cfg.figure8, "figure8")?;
    let tilted = tilt(&sys, f.tilt);
    let curve = trace_level_set(&tilted, f.level, Seed::Auto, &cfg.window)?;
    let extrema = qtilde_extrema(&tilted, &curve)?;
    let zeros = qtilde_crossings(&tilted, &curve, 0.0)?;
    let opts = TraceOptions::symmetric(f.shock_span, f.step);
    let mut shocks: Vec<(usize, usize, ShockCurve)> = Vec::new();
    for (i, &z) in zeros.iter().enumerate() {
        for k in [1, 2] {
            shocks.push((i, k, trace_hugoniot(&sys, z, k, &opts)?));
        }
    }

    let pts: Vec<Vec2> = curve.samples.iter().map(|p| p.u).collect();
    let (lo, hi) = bounds(pts.iter().copied());
    let plane = Frame { src: padded(lo, hi), x0: 40.0, y0: 40.0, w: 400.0, h: 400.0 };
    let q: Vec<f64> = pts.iter().map(|&u| tilted.q(u)).collect::<Result<_>>()?;
    let qpts: Vec<Vec2> = curve.samples.iter().zip(&q).map(|(p, &v)| [p.t, v]).collect();
    let (qlo, qhi) = bounds(qpts.iter().copied());
    let panel = Frame { src: padded(qlo, qhi), x0: 500.0, y0: 40.0, w: 400.0, h: 400.0 };

    let mut svg = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"940\" height=\"480\" viewBox=\"0 0 940 480\">\n\
         <style>polyline{fill:none;stroke-width:1.5}.level-set{stroke:#000}.s1{stroke:#1f77b4}.s2{stroke:#d62728}\
         .qtilde{stroke:#2ca02c}.extremum,.extremum-q{fill:#ff7f0e}.zero{fill:#9467bd}text{font:11px sans-serif}</style>\n\
         <defs><clipPath id=\"plane\"><rect x=\"40\" y=\"40\" width=\"400\" height=\"400\"/></clipPath></defs>\n",
    );
    let _ = writeln!(
        svg,
        "<text x=\"40\" y=\"24\">level set η̃ = {} with tilt ({}, {}); S1, S2 at q̃ = 0</text>",
        f.level, f.tilt[0], f.tilt[1]
    );
    svg.push_str("<text x=\"500\" y=\"24\">q̃ along the level set</text>\n");
    svg.push_str("<rect x=\"40\" y=\"40\" width=\"400\" height=\"400\" fill=\"none\" stroke=\"#888\"/>\n");
    svg.push_str("<rect x=\"500\" y=\"40\" width=\"400\" height=\"400\" fill=\"none\" stroke=\"#888\"/>\n");
    svg.push_str("<g clip-path=\"url(#plane)\">\n");
    for (_, k, c) in &shocks {
        let path: Vec<Vec2> = c.samples.iter().map(|p| p.u).collect();
        svg.push_str(&plane.polyline(&path, &format!("shock s{k}"), false));
    }
    svg.push_str(&plane.polyline(&pts, "level-set", curve.closed));
    svg.push_str("</g>\n");
    for (i, e) in extrema.points.iter().enumerate() {
        svg.push_str(&plane.marker(e.u, "extremum", 4.0, &format!("E{}", i + 1)));
    }
    for (i, &z) in zeros.iter().enumerate() {
        svg.push_str(&plane.marker(z, "zero", 3.0, &format!("Z{}", i + 1)));
    }
    svg.push_str(&panel.polyline(&qpts, "qtilde", false));
    for (i, e) in extrema.points.iter().enumerate() {
        let t = curve.samples[e.segment].t;
        svg.push_str(&panel.marker([t, e.value], "extremum-q", 4.0, &format!("E{}", i + 1)));
    }
    svg.push_str("</svg>\n");

    let shock_doc: Vec<Value> = shocks
        .iter()
        .map(|(i, k, c)| {
            json!({ "zero": i + 1, "family": k, "samples": c.samples.len(), "s_range": c.s_range(), "truncated": c.truncated })
        })
        .collect();
    let doc = json!({
        "system": sys.label(),
        "tilt": f.tilt,
        "level": f.level,
        "closed": curve.closed,
        "samples": curve.samples.len(),
        "extrema": extrema,
        "zero_points": zeros,
        "shock_curves": shock_doc,
    });
    let summary = format!("{} q̃ extrema, {} zero-set points, {} shock curves", extrema.count(), zeros.len(), shocks.len());
    let mut artifacts = Vec::new();
    keep(cfg.emit.svg, Artifact::text("figure8.svg", svg), &mut artifacts);
    keep(cfg.emit.json, Artifact::json("figure8.json", &doc)?, &mut artifacts);
    Ok(Outcome { artifacts, summary, passing: 0 })
}
