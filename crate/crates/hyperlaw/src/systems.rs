//! Catalog of 2x2 systems with their entropy pairs, the constitutive map `G(U)`
//! and entropy tilting.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{dot, mat_vec, quad_form, vec_mat, Jet2, Mat22, Mat32, Vec2};
use crate::error::{Error, Result};
use crate::transform;

/// Open box in the state plane; infinite bounds allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: Vec2,
    pub hi: Vec2,
}

impl Domain {
    pub fn plane() -> Self {
        Domain { lo: [f64::NEG_INFINITY; 2], hi: [f64::INFINITY; 2] }
    }

    pub fn contains(&self, u: Vec2) -> bool {
        (0..2).all(|i| u[i].is_finite() && u[i] > self.lo[i] && u[i] < self.hi[i])
    }

    pub fn intersect(&self, o: &Domain) -> Domain {
        Domain {
            lo: [self.lo[0].max(o.lo[0]), self.lo[1].max(o.lo[1])],
            hi: [self.hi[0].min(o.hi[0]), self.hi[1].min(o.hi[1])],
        }
    }

    pub fn to_spec(&self) -> DomainSpec {
        let f = |x: f64| if x.is_finite() { Some(x) } else { None };
        DomainSpec { lo: [f(self.lo[0]), f(self.lo[1])], hi: [f(self.hi[0]), f(self.hi[1])] }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}) x ({}, {})", self.lo[0], self.hi[0], self.lo[1], self.hi[1])
    }
}

/// Serializable domain: `null` bounds are unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lo: [Option<f64>; 2],
    pub hi: [Option<f64>; 2],
}

impl DomainSpec {
    pub fn to_domain(&self) -> Domain {
        Domain {
            lo: [self.lo[0].unwrap_or(f64::NEG_INFINITY), self.lo[1].unwrap_or(f64::NEG_INFINITY)],
            hi: [self.hi[0].unwrap_or(f64::INFINITY), self.hi[1].unwrap_or(f64::INFINITY)],
        }
    }
}

/// Finite analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub lo: Vec2,
    pub hi: Vec2,
}

impl Region {
    pub fn new(lo: Vec2, hi: Vec2) -> Self {
        Region { lo, hi }
    }

    pub fn contains(&self, u: Vec2) -> bool {
        (0..2).all(|i| u[i] >= self.lo[i] && u[i] <= self.hi[i])
    }

    pub fn center(&self) -> Vec2 {
        [0.5 * (self.lo[0] + self.hi[0]), 0.5 * (self.lo[1] + self.hi[1])]
    }

    pub fn diameter(&self) -> f64 {
        (self.hi[0] - self.lo[0]).hypot(self.hi[1] - self.lo[1])
    }

    pub fn clamp(&self, u: Vec2) -> Vec2 {
        [u[0].clamp(self.lo[0], self.hi[0]), u[1].clamp(self.lo[1], self.hi[1])]
    }

    pub fn as_domain(&self) -> Domain {
        Domain { lo: self.lo, hi: self.hi }
    }

    /// `n × n` lattice including the corners.
    pub fn lattice(&self, n: usize) -> Vec<Vec2> {
        let t = |i: usize| if n <= 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push([
                    self.lo[0] + t(i) * (self.hi[0] - self.lo[0]),
                    self.lo[1] + t(j) * (self.hi[1] - self.lo[1]),
                ]);
            }
        }
        out
    }
}

/// System specification record as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Box<SystemSpec>>,
}

impl SystemSpec {
    pub fn new(kind: &str) -> Self {
        SystemSpec { kind: kind.to_string(), law: None, params: BTreeMap::new(), domain: None, source: None }
    }

    pub fn with_law(mut self, law: &str) -> Self {
        self.law = Some(law.to_string());
        self
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_domain(mut self, d: Domain) -> Self {
        self.domain = Some(d.to_spec());
        self
    }
}

/// Second-order data of flux and entropy pair at a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Local {
    pub u: Vec2,
    pub f: [Jet2; 2],
    pub eta: Jet2,
    pub q: Jet2,
}

impl Local {
    pub fn flux(&self) -> Vec2 {
        [self.f[0].v, self.f[1].v]
    }

    /// Jacobian `Df`, row `i` is `∇f_i`.
    pub fn df(&self) -> Mat22 {
        [self.f[0].g, self.f[1].g]
    }

    /// `D²f(a, b)`.
    pub fn d2f(&self, a: Vec2, b: Vec2) -> Vec2 {
        [quad_form(&self.f[0].h, a, b), quad_form(&self.f[1].h, a, b)]
    }

    pub fn g_matrix(&self) -> Mat32 {
        Mat32::from_rows([self.u[0], self.f[0].v], [self.u[1], self.f[1].v], [self.eta.v, self.q.v])
    }

    pub fn compatibility_residual(&self) -> Vec2 {
        let lhs = self.q.g;
        let rhs = vec_mat(self.eta.g, &self.df());
        [lhs[0] - rhs[0], lhs[1] - rhs[1]]
    }

    fn tilted(mut self, c: Vec2) -> Local {
        if c == [0.0, 0.0] {
            return self;
        }
        let lin = Jet2 { v: dot(c, self.u), g: c, h: [[0.0; 2]; 2] };
        self.eta = self.eta.add(&lin);
        self.q = self.q.add(&self.f[0].scale(c[0])).add(&self.f[1].scale(c[1]));
        self
    }
}

/// User-supplied constitutive data outside the catalog (test fixtures, planted surfaces).
pub trait CustomModel: Send + Sync {
    fn label(&self) -> String;
    /// Untilted second-order data; the state has already been checked against the domain.
    fn local(&self, u: Vec2) -> Local;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureLaw {
    /// `p(v) = -a e^{b v}`
    Exp { a: f64, b: f64 },
    /// `p(v) = a v^{-b}` on `v > 0`
    Power { a: f64, b: f64 },
    /// `p(v) = -a (v + v0)^b` on `v > -v0`
    ShiftedPower { a: f64, b: f64, v0: f64 },
}

impl PressureLaw {
    /// `(p, p', p'')`
    pub fn eval(&self, v: f64) -> [f64; 3] {
        match *self {
            PressureLaw::Exp { a, b } => {
                let e = a * (b * v).exp();
                [-e, -b * e, -b * b * e]
            }
            PressureLaw::Power { a, b } => {
                let x = a * v.powf(-b);
                [x, -b * x / v, b * (b + 1.0) * x / (v * v)]
            }
            PressureLaw::ShiftedPower { a, b, v0 } => {
                let w = v + v0;
                let x = a * w.powf(b);
                [-x, -b * x / w, -b * (b - 1.0) * x / (w * w)]
            }
        }
    }

    /// Elementary primitive `Π` with `Π' = p` and no added constant.
    pub fn primitive(&self, v: f64) -> f64 {
        match *self {
            PressureLaw::Exp { a, b } => -a / b * (b * v).exp(),
            PressureLaw::Power { a, b } => {
                if (b - 1.0).abs() < 1e-14 {
                    a * v.ln()
                } else {
                    a * v.powf(1.0 - b) / (1.0 - b)
                }
            }
            PressureLaw::ShiftedPower { a, b, v0 } => -a * (v + v0).powf(b + 1.0) / (b + 1.0),
        }
    }

    fn v_lower(&self) -> f64 {
        match *self {
            PressureLaw::Exp { .. } => f64::NEG_INFINITY,
            PressureLaw::Power { .. } => 0.0,
            PressureLaw::ShiftedPower { v0, .. } => -v0,
        }
    }
}

/// Pressure `P(ρ) = κ ρ^γ`; `γ = 1` is the isothermal law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasLaw {
    pub kappa: f64,
    pub gamma: f64,
}

impl GasLaw {
    /// `(P, P', P'')`
    pub fn pressure(&self, rho: f64) -> [f64; 3] {
        let (k, g) = (self.kappa, self.gamma);
        let p = k * rho.powf(g);
        [p, g * p / rho, g * (g - 1.0) * p / (rho * rho)]
    }

    /// `(S, S', S'', S''')` with `S'' = P'/ρ` and no added affine part.
    pub fn internal(&self, rho: f64) -> [f64; 4] {
        let (k, g) = (self.kappa, self.gamma);
        if (g - 1.0).abs() < 1e-14 {
            [k * rho * rho.ln(), k * (rho.ln() + 1.0), k / rho, -k / (rho * rho)]
        } else {
            let p = k * rho.powf(g);
            [
                p / (g - 1.0),
                g * p / (rho * (g - 1.0)),
                g * p / (rho * rho),
                g * (g - 2.0) * p / (rho * rho * rho),
            ]
        }
    }
}

/// One decoupled component: `f(u) = c u³ + a u²/2 + b u` with entropy `w u²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarLaw {
    pub cubic: f64,
    pub a: f64,
    pub b: f64,
    pub w: f64,
}

impl ScalarLaw {
    /// `(f, f', f'')`
    pub fn flux(&self, u: f64) -> [f64; 3] {
        [
            self.cubic * u * u * u + 0.5 * self.a * u * u + self.b * u,
            3.0 * self.cubic * u * u + self.a * u + self.b,
            6.0 * self.cubic * u + self.a,
        ]
    }

    fn entropy(&self, u: f64) -> [f64; 3] {
        [0.5 * self.w * u * u, self.w * u, self.w]
    }

    /// `∫ h' f'` with zero constant, plus its first two derivatives.
    fn entropy_flux(&self, u: f64) -> [f64; 3] {
        let [_, d1, d2] = self.flux(u);
        let w = self.w;
        [
            w * (0.75 * self.cubic * u.powi(4) + self.a * u.powi(3) / 3.0 + 0.5 * self.b * u * u),
            w * u * d1,
            w * (d1 + u * d2),
        ]
    }
}

/// `η(v,u) = a v²/2 + b u²/2 + m v u + α e^{kv v} + β e^{ku u} + δ e^{ev v + eu u}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientEntropy {
    pub a: f64,
    pub b: f64,
    pub m: f64,
    pub alpha: f64,
    pub kv: f64,
    pub beta: f64,
    pub ku: f64,
    pub delta: f64,
    pub ev: f64,
    pub eu: f64,
}

/// Partial derivatives of a gradient-flux entropy, state order `(v, u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyDerivatives {
    pub eta: f64,
    pub v: f64,
    pub u: f64,
    pub vv: f64,
    pub vu: f64,
    pub uu: f64,
    pub vvv: f64,
    pub vvu: f64,
    pub vuu: f64,
    pub uuu: f64,
}

impl GradientEntropy {
    pub fn derivatives(&self, s: Vec2) -> EntropyDerivatives {
        let [v, u] = s;
        let e1 = self.alpha * (self.kv * v).exp();
        let e2 = self.beta * (self.ku * u).exp();
        let e3 = self.delta * (self.ev * v + self.eu * u).exp();
        let (ev, eu) = (self.ev, self.eu);
        EntropyDerivatives {
            eta: 0.5 * self.a * v * v + 0.5 * self.b * u * u + self.m * v * u + e1 + e2 + e3,
            v: self.a * v + self.m * u + self.kv * e1 + ev * e3,
            u: self.b * u + self.m * v + self.ku * e2 + eu * e3,
            vv: self.a + self.kv.powi(2) * e1 + ev * ev * e3,
            vu: self.m + ev * eu * e3,
            uu: self.b + self.ku.powi(2) * e2 + eu * eu * e3,
            vvv: self.kv.powi(3) * e1 + ev.powi(3) * e3,
            vvu: ev * ev * eu * e3,
            vuu: ev * eu * eu * e3,
            uuu: self.ku.powi(3) * e2 + eu.powi(3) * e3,
        }
    }
}

#[derive(Clone)]
enum Model {
    PSystem(PressureLaw),
    GradientFlux(GradientEntropy),
    Euler(GasLaw),
    TwoBurgers([ScalarLaw; 2]),
    Transformed(Box<SystemDef>),
    Custom(Arc<dyn CustomModel>),
}

/// A 2x2 system with entropy pair, closed-form derivatives, domain and tilt.
#[derive(Clone)]
pub struct SystemDef {
    spec: SystemSpec,
    model: Model,
    domain: Domain,
    tilt: Vec2,
}

impl fmt::Debug for SystemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemDef")
            .field("label", &self.label())
            .field("domain", &self.domain)
            .field("tilt", &self.tilt)
            .finish()
    }
}

struct Params<'a> {
    kind: &'a str,
    map: &'a BTreeMap<String, f64>,
    allowed: &'static [&'static str],
}

impl<'a> Params<'a> {
    fn new(spec: &'a SystemSpec, allowed: &'static [&'static str]) -> Result<Self> {
        if let Some(k) = spec.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!("{}: unknown parameter `{k}`", spec.kind)));
        }
        Ok(Params { kind: &spec.kind, map: &spec.params, allowed })
    }

    fn get(&self, key: &str, default: f64) -> Result<f64> {
        debug_assert!(self.allowed.contains(&key));
        let v = self.map.get(key).copied().unwrap_or(default);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Config(format!("{}: parameter `{key}` is not finite", self.kind)))
        }
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

/// Builds a catalog system from its specification record.
pub fn make_system(spec: &SystemSpec) -> Result<SystemDef> {
    let (model, natural) = match spec.kind.as_str() {
        "p_system" => {
            let law_name = spec.law.as_deref().unwrap_or("exp");
            let p = Params::new(spec, &["a", "b", "v0"])?;
            let a = p.get("a", 1.0)?;
            let b = p.get("b", 1.0)?;
            let law = match law_name {
                "exp" => {
                    require(a * b > 0.0, || format!("p_system exp law needs a·b > 0, got a={a}, b={b}"))?;
                    PressureLaw::Exp { a, b }
                }
                "power" => {
                    require(a > 0.0 && b > 0.0, || format!("p_system power law needs a, b > 0, got a={a}, b={b}"))?;
                    PressureLaw::Power { a, b }
                }
                "shifted_power" => {
                    let v0 = p.get("v0", 1.0)?;
                    require(a > 0.0 && b > 0.0 && v0 > 0.0, || {
                        format!("p_system shifted_power law needs a, b, v0 > 0, got a={a}, b={b}, v0={v0}")
                    })?;
                    PressureLaw::ShiftedPower { a, b, v0 }
                }
                other => return Err(Error::Config(format!("p_system: unknown pressure law `{other}`"))),
            };
            let mut d = Domain::plane();
            d.lo[0] = law.v_lower();
            (Model::PSystem(law), d)
        }
        "gradient_flux" => {
            let p = Params::new(spec, &["a", "b", "m", "alpha", "kv", "beta", "ku", "delta", "ev", "eu"])?;
            let e = GradientEntropy {
                a: p.get("a", 1.0)?,
                b: p.get("b", 1.0)?,
                m: p.get("m", 0.0)?,
                alpha: p.get("alpha", 0.0)?,
                kv: p.get("kv", 0.0)?,
                beta: p.get("beta", 0.0)?,
                ku: p.get("ku", 0.0)?,
                delta: p.get("delta", 0.0)?,
                ev: p.get("ev", 0.0)?,
                eu: p.get("eu", 0.0)?,
            };
            require(e.a > 0.0 && e.b > 0.0 && e.a * e.b > e.m * e.m, || {
                "gradient_flux: quadratic part must be positive definite".to_string()
            })?;
            require(e.alpha >= 0.0 && e.beta >= 0.0 && e.delta >= 0.0, || {
                "gradient_flux: exponential weights must be nonnegative".to_string()
            })?;
            (Model::GradientFlux(e), Domain::plane())
        }
        "isentropic_euler" | "gamma_law" | "shallow_water" => {
            let (law, rho_min) = match spec.kind.as_str() {
                "shallow_water" => {
                    let p = Params::new(spec, &["g", "rho_min"])?;
                    let g = p.get("g", 2.0)?;
                    require(g > 0.0, || format!("shallow_water needs g > 0, got {g}"))?;
                    (GasLaw { kappa: 0.5 * g, gamma: 2.0 }, p.get("rho_min", 1e-3)?)
                }
                kind => {
                    let p = Params::new(spec, &["kappa", "gamma", "rho_min"])?;
                    let default_gamma = if kind == "gamma_law" { 2.0 } else { 1.4 };
                    let law = GasLaw { kappa: p.get("kappa", 1.0)?, gamma: p.get("gamma", default_gamma)? };
                    require(law.kappa > 0.0, || format!("{kind} needs kappa > 0, got {}", law.kappa))?;
                    if kind == "gamma_law" {
                        require(law.gamma > 1.0, || format!("gamma_law needs gamma > 1, got {}", law.gamma))?;
                    } else {
                        require(law.gamma >= 1.0, || format!("isentropic_euler needs gamma >= 1, got {}", law.gamma))?;
                    }
                    (law, p.get("rho_min", 1e-3)?)
                }
            };
            require(rho_min > 0.0, || format!("rho_min must be positive, got {rho_min}"))?;
            let mut d = Domain::plane();
            d.lo[0] = rho_min;
            (Model::Euler(law), d)
        }
        "two_burgers" => {
            let p = Params::new(spec, &["a1", "b1", "cubic1", "w1", "a2", "b2", "cubic2", "w2"])?;
            let laws = [
                ScalarLaw { cubic: p.get("cubic1", 0.0)?, a: p.get("a1", 1.0)?, b: p.get("b1", 0.0)?, w: p.get("w1", 1.0)? },
                ScalarLaw { cubic: p.get("cubic2", 0.0)?, a: p.get("a2", 1.0)?, b: p.get("b2", 10.0)?, w: p.get("w2", 1.0)? },
            ];
            require(laws.iter().all(|l| l.w > 0.0), || "two_burgers entropy weights must be positive".into())?;
            (Model::TwoBurgers(laws), Domain { lo: [-4.0; 2], hi: [4.0; 2] })
        }
        "transformed" => {
            let source = spec
                .source
                .as_deref()
                .ok_or_else(|| Error::Config("transformed system needs a `source` record".into()))?;
            let src = make_system(source)?;
            let p = Params::new(spec, &["eps", "M"])?;
            let strip = (p.get("eps", 0.1)?, p.get("M", 10.0)?);
            let direction = match spec.law.as_deref().unwrap_or("to_lagrangian") {
                "to_lagrangian" => transform::Direction::ToLagrangian,
                "to_eulerian" => transform::Direction::ToEulerian,
                other => return Err(Error::Config(format!("transformed: unknown direction `{other}`"))),
            };
            let (sys, _) = transform::transform(&src, direction, strip)?;
            return match spec.domain {
                Some(d) => Ok(sys.restricted(&d.to_domain())),
                None => Ok(sys),
            };
        }
        other => return Err(Error::Config(format!("unknown system kind `{other}`"))),
    };
    let domain = match &spec.domain {
        Some(d) if spec.kind == "two_burgers" => d.to_domain(),
        Some(d) => natural.intersect(&d.to_domain()),
        None => natural,
    };
    Ok(SystemDef { spec: spec.clone(), model, domain, tilt: [0.0, 0.0] })
}

/// Tilted copy: same flux, entropy pair `(η + c·U, q + c·f)`. Tilts compose additively.
pub fn tilt(sys: &SystemDef, c: Vec2) -> SystemDef {
    let mut out = sys.clone();
    out.tilt = [sys.tilt[0] + c[0], sys.tilt[1] + c[1]];
    out
}

/// The constitutive matrix with rows `(u1, f1)`, `(u2, f2)`, `(η, q)`.
pub fn eval_g(sys: &SystemDef, u: Vec2) -> Result<Mat32> {
    Ok(sys.local(u)?.g_matrix())
}

/// `∇q − ∇η·Df`.
pub fn compatibility_residual(sys: &SystemDef, u: Vec2) -> Result<Vec2> {
    Ok(sys.local(u)?.compatibility_residual())
}

impl SystemDef {
    pub fn custom(model: Arc<dyn CustomModel>, domain: Domain) -> SystemDef {
        let spec = SystemSpec::new("custom").with_law(&model.label());
        SystemDef { spec, model: Model::Custom(model), domain, tilt: [0.0, 0.0] }
    }

    pub(crate) fn transformed(source: SystemDef, spec: SystemSpec, domain: Domain) -> SystemDef {
        SystemDef { spec, model: Model::Transformed(Box::new(source)), domain, tilt: [0.0, 0.0] }
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn label(&self) -> String {
        let mut s = self.spec.kind.clone();
        if let Some(l) = &self.spec.law {
            s.push(':');
            s.push_str(l);
        }
        for (k, v) in &self.spec.params {
            s.push_str(&format!(" {k}={v}"));
        }
        if let Some(src) = &self.spec.source {
            s.push_str(&format!(" <- [{}]", make_system(src).map(|x| x.label()).unwrap_or_default()));
        }
        s
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Same system on a smaller domain.
    pub fn restricted(&self, d: &Domain) -> SystemDef {
        let mut out = self.clone();
        out.domain = self.domain.intersect(d);
        out.spec.domain = Some(out.domain.to_spec());
        out
    }

    pub fn tilt_vector(&self) -> Vec2 {
        self.tilt
    }

    /// Whether the natural entropy of this catalog entry is strictly convex on its domain.
    pub fn claims_convex_entropy(&self) -> bool {
        match &self.model {
            Model::Custom(_) => false,
            Model::Transformed(src) => src.claims_convex_entropy(),
            _ => true,
        }
    }

    /// The untransformed system behind a transformed one.
    pub fn source(&self) -> Option<&SystemDef> {
        match &self.model {
            Model::Transformed(src) => Some(src),
            _ => None,
        }
    }

    pub fn contains(&self, u: Vec2) -> bool {
        if !self.domain.contains(u) {
            return false;
        }
        match &self.model {
            Model::Transformed(src) => src.contains(transform::state_map(u)),
            _ => true,
        }
    }

    fn check(&self, u: Vec2) -> Result<()> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(Error::Domain { state: u, domain: self.domain.to_string() })
        }
    }

    /// Flux and tilted entropy pair with derivatives up to second order.
    pub fn local(&self, u: Vec2) -> Result<Local> {
        self.check(u)?;
        let base = match &self.model {
            Model::PSystem(law) => {
                let v = Jet2::var(0, u);
                let w = Jet2::var(1, u);
                let [p, dp, d2p] = law.eval(u[0]);
                let pj = v.map(p, dp, d2p);
                let prim = v.map(law.primitive(u[0]), p, dp);
                Local {
                    u,
                    f: [w.scale(-1.0), pj],
                    eta: w.mul(&w).scale(0.5).sub(&prim),
                    q: w.mul(&pj),
                }
            }
            Model::GradientFlux(e) => {
                let d = e.derivatives(u);
                let f1 = Jet2 { v: d.u, g: [d.vu, d.uu], h: [[d.vvu, d.vuu], [d.vuu, d.uuu]] };
                let f2 = Jet2 { v: d.v, g: [d.vv, d.vu], h: [[d.vvv, d.vvu], [d.vvu, d.vuu]] };
                let eta = Jet2 { v: d.eta, g: [d.v, d.u], h: [[d.vv, d.vu], [d.vu, d.uu]] };
                Local { u, f: [f1, f2], eta, q: f1.mul(&f2) }
            }
            Model::Euler(law) => {
                let rho = Jet2::var(0, u);
                let m = Jet2::var(1, u);
                let inv = rho.recip();
                let [pp, dp, d2p] = law.pressure(u[0]);
                let [s, ds, d2s, d3s] = law.internal(u[0]);
                let vel = m.mul(&inv);
                let kinetic = m.mul(&vel).scale(0.5);
                Local {
                    u,
                    f: [m, m.mul(&vel).add(&rho.map(pp, dp, d2p))],
                    eta: kinetic.add(&rho.map(s, ds, d2s)),
                    q: kinetic.mul(&vel).add(&m.mul(&rho.map(ds, d2s, d3s))),
                }
            }
            Model::TwoBurgers(laws) => {
                let x = Jet2::var(0, u);
                let y = Jet2::var(1, u);
                let jet = |j: &Jet2, d: [f64; 3]| j.map(d[0], d[1], d[2]);
                Local {
                    u,
                    f: [jet(&x, laws[0].flux(u[0])), jet(&y, laws[1].flux(u[1]))],
                    eta: jet(&x, laws[0].entropy(u[0])).add(&jet(&y, laws[1].entropy(u[1]))),
                    q: jet(&x, laws[0].entropy_flux(u[0])).add(&jet(&y, laws[1].entropy_flux(u[1]))),
                }
            }
            Model::Transformed(src) => transform::transformed_local(src, u)?,
            Model::Custom(m) => m.local(u),
        };
        Ok(base.tilted(self.tilt))
    }

    pub fn flux(&self, u: Vec2) -> Result<Vec2> {
        Ok(self.local(u)?.flux())
    }

    pub fn eta(&self, u: Vec2) -> Result<f64> {
        Ok(self.local(u)?.eta.v)
    }

    pub fn q(&self, u: Vec2) -> Result<f64> {
        Ok(self.local(u)?.q.v)
    }

    pub fn gradient_entropy(&self) -> Option<GradientEntropy> {
        match &self.model {
            Model::GradientFlux(e) => Some(*e),
            _ => None,
        }
    }

    pub fn pressure_law(&self) -> Option<PressureLaw> {
        match &self.model {
            Model::PSystem(l) => Some(*l),
            _ => None,
        }
    }

    pub fn gas_law(&self) -> Option<GasLaw> {
        match &self.model {
            Model::Euler(l) => Some(*l),
            _ => None,
        }
    }

    pub fn scalar_laws(&self) -> Option<[ScalarLaw; 2]> {
        match &self.model {
            Model::TwoBurgers(l) => Some(*l),
            _ => None,
        }
    }
}

/// `η(a|b) = η(a) − η(b) − ∇η(b)·(a − b)`.
pub fn relative_entropy(sys: &SystemDef, a: Vec2, b: Vec2) -> Result<f64> {
    let la = sys.local(a)?;
    let lb = sys.local(b)?;
    Ok(la.eta.v - lb.eta.v - dot(lb.eta.g, [a[0] - b[0], a[1] - b[1]]))
}

/// Uniform samples from the domain restricted to a window (rejection sampling).
pub fn sample_states<R: Rng>(sys: &SystemDef, window: &Region, n: usize, rng: &mut R) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(n);
    let mut tries = 0usize;
    while out.len() < n && tries < 1000 * n.max(1) {
        tries += 1;
        let u = [rng.gen_range(window.lo[0]..=window.hi[0]), rng.gen_range(window.lo[1]..=window.hi[1])];
        if sys.contains(u) {
            out.push(u);
        }
    }
    out
}

/// Directional second derivative `D²f(a,a)` from the Jacobian: `(a·∇)(Df) a`.
pub fn d2f_along(local: &Local, a: Vec2) -> Vec2 {
    local.d2f(a, a)
}

/// `Df · a`.
pub fn df_apply(local: &Local, a: Vec2) -> Vec2 {
    mat_vec(&local.df(), a)
}
