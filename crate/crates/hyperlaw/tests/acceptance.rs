//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use hyperlaw::algebra::{fd_jacobian, norm, normalize, sub, Mat32, Vec2};
use hyperlaw::characteristics::{
    frame_from_local, gradient_flux_closed_form, gradient_flux_gnl_criterion, gradient_flux_sj_criterion,
    smoller_johnson_with_frame,
};
use hyperlaw::level_sets::{qtilde_extrema, trace_level_set, window_minimum, Seed};
use hyperlaw::reports::{self, RunConfig, RunFlags};
use hyperlaw::rng::seeded_rng;
use hyperlaw::shock::{dissipation_profile, liu_lax_check, rank_one_scan, trace_hugoniot, TraceOptions};
use hyperlaw::systems::{compatibility_residual, make_system, sample_states, tilt, Region, SystemDef, SystemSpec};
use hyperlaw::tn::{
    random_t4, t4_search, tn_sign_test, tn_solve, tn_synthesize, PlantedT4, SearchOptions, SignVerdict, SolveOptions,
    SolveOutcome, Strategy, SystemSurface,
};
use hyperlaw::transform::{convexity_transfer, shock_correspondence_check, to_eulerian, to_lagrangian};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sys(spec: SystemSpec) -> SystemDef {
    make_system(&spec).expect("catalog system")
}

fn gradient_flux() -> SystemDef {
    sys(SystemSpec::new("gradient_flux")
        .with_param("m", 0.2)
        .with_param("alpha", 0.4)
        .with_param("kv", 0.9)
        .with_param("beta", 0.3)
        .with_param("ku", -0.6)
        .with_param("delta", 0.2)
        .with_param("ev", 0.5)
        .with_param("eu", 0.7))
}

/// Speeds and unit right eigenvectors (positive second component) of a 2×2 matrix.
fn eigen_oracle(a: [[f64; 2]; 2]) -> ([f64; 2], [Vec2; 2]) {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let root = (0.25 * tr * tr - det).sqrt();
    let lambda = [0.5 * tr - root, 0.5 * tr + root];
    let r = lambda.map(|l| {
        let rows = [[a[0][0] - l, a[0][1]], [a[1][0], a[1][1] - l]];
        let row = if norm(rows[0]) >= norm(rows[1]) { rows[0] } else { rows[1] };
        let v = normalize([-row[1], row[0]]);
        if v[1] < 0.0 {
            [-v[0], -v[1]]
        } else {
            v
        }
    });
    (lambda, r)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let sys = gradient_flux();
    let e = sys.gradient_entropy().unwrap();
    let region = Region::new([-1.5, -1.5], [1.5, 1.5]);
    let mut rng = seeded_rng(101);
    let mut worst = 0.0f64;
    for u in sample_states(&sys, &region, 1000, &mut rng) {
        let jac = fd_jacobian(&|x| sys.flux(x), u, 1e-5).map_err(|e| e.to_string())?;
        let (lambda_fd, r_fd) = eigen_oracle(jac);
        let (lambda, r) = gradient_flux_closed_form(&e, u);
        for i in 0..2 {
            worst = worst.max((lambda[i] - lambda_fd[i]).abs()).max(norm(sub(r[i], r_fd[i])));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst < 1e-6 && secs < 5.0, format!("max error {worst:.2e} over 1000 points in {secs:.2} s"))
}

fn criterion_2() -> Check {
    let sys = gradient_flux();
    let e = sys.gradient_entropy().unwrap();
    let region = Region::new([-2.0, -2.0], [2.0, 2.0]);
    let mut rng = seeded_rng(102);
    let (mut compared, mut agree, mut neutral) = (0usize, 0usize, 0usize);
    for u in sample_states(&sys, &region, 1000, &mut rng) {
        let local = sys.local(u).map_err(|e| e.to_string())?;
        let frame = frame_from_local(&local, None).map_err(|e| e.to_string())?;
        let up = frame.regauged([[0.0, 1.0], [0.0, 1.0]]);
        let down = frame.regauged([[0.0, -1.0], [0.0, -1.0]]);
        let gnl = gradient_flux_gnl_criterion(&e, u);
        let sj = gradient_flux_sj_criterion(&e, u);
        let direct_sj = smoller_johnson_with_frame(&local, &down);
        for i in 0..2 {
            for (formula, direct) in [(gnl[i], up.gnl()[i]), (sj[i], direct_sj[i])] {
                if formula.abs() <= 1e-9 || direct.abs() <= 1e-9 {
                    neutral += 1;
                    continue;
                }
                compared += 1;
                if (formula > 0.0) == (direct > 0.0) {
                    agree += 1;
                }
            }
        }
    }
    ensure(
        agree == compared && compared > 0,
        format!("{agree}/{compared} sign agreements at 1000 points, {neutral} in the neutral band"),
    )
}

fn criterion_3() -> Check {
    let g = sys(SystemSpec::new("gamma_law").with_param("kappa", 1.0).with_param("gamma", 2.0));
    let (rho0, v0) = (1.0, 0.3);
    let base = [rho0, rho0 * v0];
    let p = |rho: f64| rho * rho;
    let mut worst = 0.0f64;
    let mut worst_rh = 0.0f64;
    let mut checked = 0;
    let mut problems = Vec::new();
    for k in [1usize, 2] {
        let curve = trace_hugoniot(&g, base, k, &TraceOptions::symmetric(25.0, 0.02)).map_err(|e| e.to_string())?;
        let rho: Vec<f64> = curve.samples.iter().map(|s| s.u[0]).collect();
        let (lo, hi) = rho.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        if lo > 0.2 || hi < 5.0 {
            problems.push(format!("S{k} covers ρ ∈ [{lo:.3}, {hi:.3}]"));
        }
        for s in &curve.samples {
            let r = s.u[0];
            worst_rh = worst_rh.max(s.rh_residual);
            if !(0.2..=5.0).contains(&r) {
                continue;
            }
            let jump = ((p(r) - p(rho0)) * (r - rho0) / (r * rho0)).sqrt();
            let sign = if k == 1 { -(r - rho0).signum() } else { (r - rho0).signum() };
            let v = v0 + sign * jump;
            worst = worst.max((s.u[1] / r - v).abs());
            checked += 1;
        }
        let ll = liu_lax_check(&g, &curve).map_err(|e| e.to_string())?;
        if !ll.liu || !ll.lax_e {
            problems.push(format!("S{k}: liu {}, lax-e {}", ll.liu, ll.lax_e));
        }
    }
    ensure(
        problems.is_empty() && worst < 1e-6 && worst_rh < 1e-8,
        format!("{checked} samples, max velocity error {worst:.2e}, max RH residual {worst_rh:.2e} {problems:?}"),
    )
}

fn criterion_4() -> Check {
    let cases = [
        ("p-system", sys(SystemSpec::new("p_system")), [0.2, -0.1]),
        ("gamma 2", sys(SystemSpec::new("gamma_law").with_param("gamma", 2.0)), [1.0, 0.3]),
        ("gamma 3", sys(SystemSpec::new("gamma_law").with_param("gamma", 3.0)), [1.0, 0.3]),
    ];
    let mut worst = 0.0f64;
    let mut min_magnitude = f64::INFINITY;
    let mut problems = Vec::new();
    for (name, s, base) in &cases {
        for k in [1usize, 2] {
            let mut curve = trace_hugoniot(s, *base, k, &TraceOptions::symmetric(0.8, 0.01)).map_err(|e| e.to_string())?;
            if curve.truncated.iter().any(|&t| t) {
                problems.push(format!("{name} S{k} truncated"));
            }
            let prof = dissipation_profile(s, &mut curve, 1e-13).map_err(|e| e.to_string())?;
            let nonzero: Vec<_> = prof.iter().filter(|d| d.s != 0.0).collect();
            if nonzero.len() < 50 {
                problems.push(format!("{name} S{k}: {} samples", nonzero.len()));
                continue;
            }
            let picked: Vec<_> = (0..50).map(|i| nonzero[(i * (nonzero.len() - 1) + 24) / 49]).collect();
            for d in &picked {
                worst = worst.max(d.relative_residual);
                if d.s > 0.0 {
                    if d.direct >= 0.0 {
                        problems.push(format!("{name} S{k}: D = {:e} at s = {}", d.direct, d.s));
                    }
                    min_magnitude = min_magnitude.min(d.direct.abs());
                }
            }
        }
    }
    ensure(
        problems.is_empty() && worst < 1e-6,
        format!("max relative residual {worst:.2e}; entropic-side |D| ≥ {min_magnitude:.3e} {problems:?}"),
    )
}

fn criterion_5() -> Check {
    let cases: Vec<(SystemDef, Region)> = vec![
        (sys(SystemSpec::new("p_system")), Region::new([-1.0, -1.0], [1.0, 1.0])),
        (sys(SystemSpec::new("p_system").with_law("power").with_param("b", 2.0)), Region::new([0.5, -1.0], [2.0, 1.0])),
        (sys(SystemSpec::new("gamma_law").with_param("gamma", 2.0)), Region::new([0.5, -1.0], [2.0, 1.0])),
        (sys(SystemSpec::new("gamma_law").with_param("gamma", 3.0)), Region::new([0.5, -1.0], [2.0, 1.0])),
        (sys(SystemSpec::new("shallow_water")), Region::new([0.5, -1.0], [2.0, 1.0])),
        (sys(SystemSpec::new("isentropic_euler")), Region::new([0.5, -1.0], [2.0, 1.0])),
        (gradient_flux(), Region::new([-1.0, -1.0], [1.0, 1.0])),
        (sys(SystemSpec::new("two_burgers").with_param("b1", -10.0)), Region::new([-1.0, -1.0], [1.0, 1.0])),
    ];
    let mut min = f64::INFINITY;
    let mut witness = String::new();
    let (mut scanned, mut skipped) = (0, 0);
    for (s, region) in &cases {
        for base in region.lattice(3) {
            for k in [1usize, 2] {
                let curve = match trace_hugoniot(s, base, k, &TraceOptions::symmetric(5.0, 0.05)) {
                    Ok(c) => c,
                    Err(_) => {
                        skipped += 1;
                        continue;
                    }
                };
                let (lo, hi) = curve.s_range();
                let reach = hi.max(-lo).min(5.0);
                let liu = liu_lax_check(s, &curve).map_err(|e| e.to_string())?.liu;
                if !liu || reach < 0.1 {
                    skipped += 1;
                    continue;
                }
                let scan = rank_one_scan(s, &curve, 0.1, reach).map_err(|e| e.to_string())?;
                scanned += 1;
                if scan.min_normalized < min {
                    min = scan.min_normalized;
                    witness = format!("{} S{k} from {base:?} at s = {}", s.label(), scan.witness_s);
                }
            }
        }
    }
    ensure(
        min > 1e-6 && scanned > 0,
        format!("{scanned} Liu curves scanned ({skipped} skipped), min normalized residual {min:.3e} ({witness})"),
    )
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let p = sys(SystemSpec::new("p_system"));
    let window = Region::new([-4.0, -4.0], [4.0, 4.0]);
    let fig = tilt(&p, [-2.0, 0.0]);
    let curve = trace_level_set(&fig, 2.0, Seed::Auto, &window).map_err(|e| e.to_string())?;
    let ex = qtilde_extrema(&fig, &curve).map_err(|e| e.to_string())?;
    let mut worst_lagrange = ex.points.iter().map(|c| c.lagrange_residual).fold(0.0, f64::max);
    let figure_count = ex.count();
    let mut max_count = 0;
    let mut combos = 0;
    for c in Region::new([-2.0, -2.0], [2.0, 2.0]).lattice(5).into_iter().step_by(5).chain([[0.0, -2.0], [1.0, 1.0]]) {
        let tilted = tilt(&p, c);
        let (_, m) = window_minimum(&tilted, &window).map_err(|e| e.to_string())?;
        for dl in [0.5, 1.0, 2.0, 3.0, 4.0] {
            if combos == 25 {
                break;
            }
            let curve = trace_level_set(&tilted, m + dl, Seed::Auto, &window).map_err(|e| e.to_string())?;
            let ex = qtilde_extrema(&tilted, &curve).map_err(|e| e.to_string())?;
            max_count = max_count.max(ex.count());
            worst_lagrange = ex.points.iter().map(|c| c.lagrange_residual).fold(worst_lagrange, f64::max);
            combos += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        curve.closed && figure_count == 4 && combos == 25 && max_count <= 4 && worst_lagrange < 1e-6 && secs < 30.0,
        format!(
            "figure level set: {figure_count} extrema; {combos} tilt/level pairs: at most {max_count}; \
             max Lagrange residual {worst_lagrange:.2e}; {secs:.2} s"
        ),
    )
}

fn criterion_7() -> Check {
    let mut rng = seeded_rng(107);
    let (mut synthesized, mut round_trips, mut worst) = (0, 0, 0.0f64);
    let mut problems = Vec::new();
    while synthesized < 100 {
        let (p, a, n, k) = random_t4(&mut rng);
        let Ok(x) = tn_synthesize(&p, &a, &n, &k) else { continue };
        synthesized += 1;
        if tn_sign_test(&x).map_err(|e| e.to_string())? != SignVerdict::Possible {
            problems.push(format!("synthesized T4 #{synthesized} excluded by the sign test"));
            continue;
        }
        match tn_solve(&x, &SolveOptions::default()).map_err(|e| e.to_string())? {
            SolveOutcome::Solved { reconstruction, .. } if reconstruction < 1e-8 => {
                round_trips += 1;
                worst = worst.max(reconstruction);
            }
            other => problems.push(format!("synthesized T4 #{synthesized}: {other:?}")),
        }
    }
    let mut min_random = f64::INFINITY;
    let mut random_fail = 0;
    for _ in 0..100 {
        let x: Vec<Mat32> =
            (0..4).map(|_| Mat32(std::array::from_fn(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal)]))).collect();
        let out = tn_solve(&x, &SolveOptions::default()).map_err(|e| e.to_string())?;
        min_random = min_random.min(out.residual());
        if !out.solved() && out.residual() > 1e-4 {
            random_fail += 1;
        }
    }
    let mut opts = SearchOptions::new(1500, 3);
    opts.solver.starts = 16;
    let planted = t4_search(&PlantedT4::standard(), Strategy::Random, &opts).map_err(|e| e.to_string())?;
    let planted_best = planted.best_residual.unwrap_or(f64::INFINITY);
    ensure(
        problems.is_empty() && round_trips == 100 && random_fail == 100 && planted.passing > 0 && planted_best < 1e-10,
        format!(
            "{round_trips}/100 round trips (max reconstruction {worst:.2e}); {random_fail}/100 random quadruples fail \
             (min residual {min_random:.2e}); planted T4 found with residual {planted_best:.2e} {problems:?}"
        ),
    )
}

fn criterion_8() -> Check {
    let start = Instant::now();
    let strip = (0.2, 5.0);
    let lagrangian = |spec: SystemSpec| to_lagrangian(&sys(spec), strip).map(|(t, _)| t).map_err(|e| e.to_string());
    // Eulerian windows [0.5, 2] × [-1, 1] map to [0.5, 2] × [-2, 2].
    let lag_window = Region::new([0.5, -2.0], [2.0, 2.0]);
    let cases: Vec<(String, SystemDef, Region)> = vec![
        ("p-system".into(), sys(SystemSpec::new("p_system")), Region::new([-2.0, -2.0], [2.0, 2.0])),
        ("gamma 2 (Lagrangian)".into(), lagrangian(SystemSpec::new("gamma_law").with_param("gamma", 2.0))?, lag_window),
        ("gamma 3 (Lagrangian)".into(), lagrangian(SystemSpec::new("gamma_law").with_param("gamma", 3.0))?, lag_window),
        ("shallow water (Lagrangian)".into(), lagrangian(SystemSpec::new("shallow_water"))?, lag_window),
        (
            "two Burgers, disjoint speeds".into(),
            sys(SystemSpec::new("two_burgers").with_param("b1", -10.0).with_param("b2", 10.0)),
            Region::new([-2.0, -2.0], [2.0, 2.0]),
        ),
    ];
    let mut notes = Vec::new();
    let mut passing = 0;
    for (name, s, window) in &cases {
        let surface = SystemSurface { sys: s, window: *window };
        let reduced = t4_search(&surface, Strategy::ReducedLevelSet, &SearchOptions::new(1_000_000, 8)).map_err(|e| e.to_string())?;
        let random = t4_search(&surface, Strategy::Random, &SearchOptions::new(10_000, 8)).map_err(|e| e.to_string())?;
        passing += reduced.passing + random.passing;
        let best = [reduced.best_residual, random.best_residual].into_iter().flatten().fold(f64::INFINITY, f64::min);
        notes.push(format!(
            "{name}: {}+{} candidates, {} solver attempts, best {}",
            reduced.examined,
            random.examined,
            reduced.solver_attempts + random.solver_attempts,
            if best.is_finite() { format!("{best:.1e}") } else { "none".into() }
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(passing == 0 && secs < 600.0, format!("{passing} passing in {secs:.1} s; {}", notes.join("; ")))
}

fn criterion_9() -> Check {
    let euler = sys(SystemSpec::new("isentropic_euler").with_param("gamma", 1.4).with_param("kappa", 1.3));
    let strip = (0.2, 5.0);
    let (lag, rec) = to_lagrangian(&euler, strip).map_err(|e| e.to_string())?;
    let p = sys(SystemSpec::new("p_system").with_law("power").with_param("a", 1.3).with_param("b", 1.4));
    let mut rng = seeded_rng(109);
    let mut form = 0.0f64;
    for _ in 0..200 {
        let v = [rng.gen_range(0.21..4.9), rng.gen_range(-3.0..3.0)];
        let (a, b) = (lag.local(v).map_err(|e| e.to_string())?, p.local(v).map_err(|e| e.to_string())?);
        let scale = 1.0 + a.eta.v.abs() + a.q.v.abs() + norm(a.flux());
        let df = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| (a.df()[i][j] - b.df()[i][j]).abs()).fold(0.0, f64::max);
        form = form
            .max(norm(sub(a.flux(), b.flux())) / scale)
            .max((a.eta.v - b.eta.v).abs() / scale)
            .max((a.q.v - b.q.v).abs() / scale)
            .max(df / scale)
            .max(norm(compatibility_residual(&lag, v).map_err(|e| e.to_string())?));
    }

    let mut shocks = Vec::new();
    for base in [[1.0, 0.0], [0.8, 0.4], [1.5, -0.5], [2.0, 1.0], [0.6, -0.2]] {
        for k in [1usize, 2] {
            let c = trace_hugoniot(&euler, base, k, &TraceOptions::symmetric(1.5, 0.15)).map_err(|e| e.to_string())?;
            for s in c.samples.iter().filter(|s| s.s != 0.0 && s.u[0] >= strip.0 && s.u[0] <= strip.1) {
                shocks.push((base, s.u, s.sigma));
            }
        }
    }
    let step = (shocks.len() / 100).max(1);
    let picked: Vec<_> = shocks.iter().step_by(step).take(100).collect();
    let mut rh = 0.0f64;
    let mut failed = 0;
    for &&(ul, ur, sigma) in &picked {
        let r = shock_correspondence_check(&rec, ul, ur, sigma).map_err(|e| e.to_string())?;
        rh = rh.max(r.target_rh_residual);
        if !r.passed {
            failed += 1;
        }
    }

    let forward_states = sample_states(&euler, &Region::new([0.2, -3.0], [5.0, 3.0]), 1000, &mut rng);
    let forward = convexity_transfer(&rec, &forward_states).map_err(|e| e.to_string())?;
    let (_, back) = to_eulerian(&lag, (0.25, 4.5)).map_err(|e| e.to_string())?;
    let backward_states = sample_states(&lag, &Region::new([0.25, -3.0], [4.5, 3.0]), 1000, &mut rng);
    let backward = convexity_transfer(&back, &backward_states).map_err(|e| e.to_string())?;
    ensure(
        form < 1e-10
            && picked.len() == 100
            && failed == 0
            && rh < 1e-6
            && forward.samples == 1000
            && backward.samples == 1000
            && forward.mismatches == 0
            && backward.mismatches == 0,
        format!(
            "p-system form error {form:.2e}; {} shocks, {failed} failed, max target RH {rh:.2e}; \
             convexity {}/{} and {}/{} agree",
            picked.len(),
            forward.samples - forward.mismatches,
            forward.samples,
            backward.samples - backward.mismatches,
            backward.samples
        ),
    )
}

fn criterion_10() -> Check {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let load = |name: &str| -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(configs.join(name)).map_err(|e| e.to_string())?;
        RunConfig::from_json(&text).map_err(|e| e.to_string())
    };
    let p = load("p_system.json")?;
    let fig = load("figure8.json")?;
    let mut burgers = load("two_burgers.json")?;
    if let Some(s) = burgers.search.as_mut() {
        s.budget = 2000;
    }
    let run_all = || -> Result<Vec<(String, Vec<u8>)>, String> {
        let flags = RunFlags::default();
        let outcomes = [
            reports::analyze(&p, flags),
            reports::hugoniot(&p, flags),
            reports::levelset(&p, flags),
            reports::figure8(&fig, flags),
            reports::search(&burgers, flags),
        ];
        let mut out = Vec::new();
        for o in outcomes {
            out.extend(o.map_err(|e| e.to_string())?.artifacts.into_iter().map(|a| (a.name, a.bytes)));
        }
        Ok(out)
    };
    let (a, b) = (run_all()?, run_all()?);
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    let bytes: usize = a.iter().map(|x| x.1.len()).sum();
    ensure(
        a.len() == b.len() && differing.is_empty(),
        format!("{} artifacts ({bytes} bytes) identical across two runs {differing:?}", a.len()),
    )
}

fn main() {
    let checks: [(&str, fn() -> Check); 10] = [
        ("closed-form eigenstructure", criterion_1),
        ("GNL/SJ criteria", criterion_2),
        ("shock-curve fidelity", criterion_3),
        ("Lax dissipation identity", criterion_4),
        ("no rank-one connections", criterion_5),
        ("level-set extrema", criterion_6),
        ("T_N machinery", criterion_7),
        ("no T4 at desk scale", criterion_8),
        ("transform correctness", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name} ({secs:.1} s): {detail}", i + 1);
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
