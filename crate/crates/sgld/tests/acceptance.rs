//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances are fixed here and never adjusted to a run.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use sgld::commands::{run, split_marginals, Outcome, RunOptions};
use sgld::config::{ExperimentConfig, ExperimentKind};
use sgld::coupled::{run_coupled_ensemble, CoupledOptions, PairInit};
use sgld::ensemble::InitSpec;
use sgld::output::Verdict;
use sgld::stats::energy_test;
use sgld::tails::{tail_experiment, TailOptions};
use sgld_core::constants::{moment_step_bound, rate_report, ConstantsOptions, DistanceFunction};
use sgld_core::coupling::CouplingConfig;
use sgld_core::diagnostics::stats::{ks_p_value, ks_statistic};
use sgld_core::diagnostics::{brownian_sup_cdf, w1_empirical_assignment, TailProfile};
use sgld_core::dynamics::Schedule;
use sgld_core::noise::NoiseStream;
use sgld_core::targets::{make_bump_target, AssumptionParams, BatchSpec, ComponentFn, DriftField, TargetModel};

type Check = std::result::Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

fn run_config(kind: ExperimentKind, json: &str, out: &Path) -> std::result::Result<Outcome, String> {
    let cfg = ExperimentConfig::from_json(json).map_err(|e| e.to_string())?;
    run(
        kind,
        &cfg,
        &RunOptions {
            out: Some(out.to_path_buf()),
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())
}

fn verdict<'a>(o: &'a Outcome, name: &str) -> std::result::Result<&'a Verdict, String> {
    o.verdicts
        .iter()
        .find(|v| v.statistic == name)
        .ok_or_else(|| format!("verdict `{name}` missing"))
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().expect("temporary directory")
}

// 1 -------------------------------------------------------------------------

fn constants_pipeline() -> Check {
    let params = AssumptionParams::new(1.0, 1.0, 2.0, 0.0).map_err(|e| e.to_string())?;
    let beta = 2.0;
    let report = rate_report(&params, beta, &ConstantsOptions::default()).map_err(|e| e.to_string())?;

    let r = f64::max(4.0 * 1.0 * (2.0 + 1.0) / 1.0, 2.0);
    let kappa = 0.5;
    let c_f = 2.0 * 2.0 * r / (2.0f64 / beta).sqrt();
    let r1 = 1.51 * r;
    let log_c0 = c_f * r1;
    let log_c = (f64::min((2.0f64 / beta).sqrt() * c_f / r1, kappa) / 3.0).ln() - c_f * r1;

    let checks = [
        ("R", report.geometry.r, 12.0),
        ("R (formula)", report.geometry.r, r),
        ("kappa", report.geometry.kappa, kappa),
        ("c_f", report.distance.c_f, 48.0),
        ("R1", report.distance.r1, r1),
        ("log c0", report.rate.log_c0, log_c0),
        ("log c", report.rate.log_c, log_c),
        ("c0", report.c0(), log_c0.exp()),
        ("c", report.c(), log_c.exp()),
    ];
    let worst = checks.iter().map(|(_, a, b)| rel_err(*a, *b)).fold(0.0, f64::max);
    let bad: Vec<String> = checks
        .iter()
        .filter(|(_, a, b)| rel_err(*a, *b) > 1e-12)
        .map(|(n, a, b)| format!("{n}: {a} vs {b}"))
        .collect();
    ensure(
        bad.is_empty(),
        format!(
            "R = {}, kappa = {}, c_f = {}, log c = {:.6}, log c0 = {:.6}; max rel err {worst:.1e} (tol 1e-12) {}",
            report.geometry.r,
            report.geometry.kappa,
            report.distance.c_f,
            report.rate.log_c,
            report.rate.log_c0,
            bad.join("; ")
        ),
    )
}

// 2 -------------------------------------------------------------------------

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn level<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            level(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + level(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    level(f, a, b, fa, fm, fb, whole, 1e-15 * (b - a).max(1e-300), 50)
}

fn distance_function() -> Check {
    let mut g = NoiseStream::new(2024, 0);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..10_000 {
        let c_f = 10f64.powf(-2.0 + 3.0 * g.uniform());
        let r1 = 10f64.powf(-1.0 + 2.0 * g.uniform());
        let r = 3.0 * r1 * g.uniform();
        let dist = DistanceFunction::new(c_f, r1).map_err(|e| e.to_string())?;
        let integrand = |s: f64| (-c_f * s.min(r1)).exp();
        let quad = simpson(&integrand, 0.0, r.min(r1)) + simpson(&integrand, r1, r.max(r1));
        let f = dist.eval(r);
        let err = rel_err(f, quad);
        worst = worst.max(err);
        let lower = (-c_f * r1).exp() * r;
        let bracket = lower * (1.0 - 1e-12) <= f && f <= r * (1.0 + 1e-12);
        let h = 1e-3 * r1;
        let (d0, d1) = (dist.derivative(r), dist.derivative(r + h));
        let slopes = d0 > 0.0 && d0 <= 1.0 && d1 <= d0;
        if err > 1e-10 || !bracket || !slopes {
            failures += 1;
        }
    }
    ensure(
        failures == 0,
        format!("10^4 draws, max rel err vs adaptive Simpson {worst:.2e} (tol 1e-10), {failures} failures"),
    )
}

// 3 -------------------------------------------------------------------------

fn bump_gradient(a: f64, x: &[f64]) -> Vec<f64> {
    let s = 1.0 - a * (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp();
    x.iter().map(|v| s * v).collect()
}

fn far_field_convexity() -> Check {
    let mut details = Vec::new();
    let mut total_bad = 0;
    for d in [1usize, 2] {
        let model = make_bump_target(d, 2.0, 2.0).map_err(|e| e.to_string())?;
        let report = rate_report(model.params(), 2.0, &ConstantsOptions::default()).map_err(|e| e.to_string())?;
        let (r, kappa) = (report.geometry.r, report.geometry.kappa);
        let mut g = NoiseStream::new(7, d as u64);
        let mut bad = 0;
        let mut min_ratio = f64::INFINITY;
        let mut u = vec![0.0; d];
        let mut drift = vec![0.0; d];
        for _ in 0..1000 {
            let x: Vec<f64> = (0..d).map(|_| r * (2.0 * g.uniform() - 1.0)).collect();
            g.unit_vector(&mut u);
            let len = r * (1.0 + 2.0 * g.uniform());
            let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + len * b).collect();
            let (gx, gy) = (bump_gradient(2.0, &x), bump_gradient(2.0, &y));
            model.drift_full(&x, &mut drift).map_err(|e| e.to_string())?;
            if drift.iter().zip(&gx).any(|(a, b)| (a + b).abs() > 1e-12) {
                return Err("model gradient disagrees with the closed form".into());
            }
            let dz: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
            let inner: f64 = (0..d).map(|i| (x[i] - y[i]) * (gx[i] - gy[i])).sum();
            min_ratio = min_ratio.min(inner / dz);
            if inner < kappa * dz {
                bad += 1;
            }
        }
        total_bad += bad;
        details.push(format!("d={d}: R = {r:.4}, kappa = {kappa}, min ratio {min_ratio:.4}, {bad}/1000 violations"));
    }
    ensure(total_bad == 0, details.join("; "))
}

// 4 -------------------------------------------------------------------------

fn equal_marginals() -> Check {
    let (eta, beta) = (0.01, 2.0);
    let model = make_bump_target(2, beta, 2.0).map_err(|e| e.to_string())?;
    let mu0 = InitSpec::Gaussian {
        mean: vec![1.0, 0.0],
        std: 1.0,
    };
    let init = PairInit {
        x: mu0.clone(),
        y: mu0,
        coupled: false,
    };
    let config = CouplingConfig::reflection(eta, beta);
    let opts = CoupledOptions {
        n_pairs: 5000,
        n_steps: 500,
        record_every: 50,
        n_blocks: 20,
        batch: BatchSpec::full(1),
        keep_final: true,
    };
    let dist = DistanceFunction::new(1.0, 1.0).map_err(|e| e.to_string())?;
    let s = run_coupled_ensemble(&model, &Schedule::Constant(eta), &config, &init, &dist, &opts, 404).map_err(|e| e.to_string())?;
    let (x, y) = split_marginals(&s.final_x, &s.final_y);
    let test = energy_test(&x, &y, 2, 199, 404).map_err(|e| e.to_string())?;
    ensure(
        test.p_value >= 0.01,
        format!(
            "m = {}, merged {:.3}, X of pairs 1..2500 vs Y of pairs 2501..5000: energy {:.3e}, permutation p = {:.3} (reject below 0.01)",
            config.substeps,
            s.merged_fraction.last().unwrap(),
            test.statistic,
            test.p_value
        ),
    )
}

// 5 -------------------------------------------------------------------------

fn geometric_contraction() -> Check {
    let dir = tmp();
    let o = run_config(
        ExperimentKind::Couple,
        r#"{
        "target": {"name": "bump", "dim": 2, "beta": 2.0},
        "schedule": {"constant": 0.01},
        "coupling": {"mode": "reflection", "substeps": 4},
        "ensemble": {"n_pairs": 10000},
        "horizon": 2000,
        "record_every": 20,
        "init": {"x": {"point": [3.0, 0.0]}, "y": {"point": [-3.0, 0.0]}},
        "seed": 5
    }"#,
        dir.path(),
    )?;
    let r2 = verdict(&o, "rate_fit_r_squared")?.estimate;
    let rate = verdict(&o, "rate_vs_theory")?;
    let c = rate.reference.unwrap_or(f64::NAN);
    let series = std::fs::read_to_string(dir.path().join("coupling_series.csv")).map_err(|e| e.to_string())?;
    let merged: f64 = series
        .lines()
        .last()
        .and_then(|l| l.split(',').nth(6))
        .and_then(|v| v.parse().ok())
        .ok_or("cannot read merged fraction")?;
    let diverged = verdict(&o, "divergence_fraction")?.estimate;
    ensure(
        r2 >= 0.9 && rate.estimate + rate.ci_half_width >= c && merged >= 0.99 && diverged <= 0.01,
        format!(
            "rate {:.4} ± {:.1e} vs certified c = {c:.3e}, r² = {r2:.4} (>= 0.9), merged {merged:.4} (>= 0.99)",
            rate.estimate, rate.ci_half_width
        ),
    )
}

// 6 -------------------------------------------------------------------------

fn synchronous_baseline() -> Check {
    let dir = tmp();
    let eta = 0.05;
    let o = run_config(
        ExperimentKind::Couple,
        r#"{
        "target": {"name": "gaussian", "dim": 2, "beta": 1.0},
        "schedule": {"constant": 0.05},
        "coupling": {"mode": "synchronous"},
        "ensemble": {"n_pairs": 1000},
        "horizon": 200,
        "record_every": 5,
        "init": {"x": {"gaussian": {"mean": [2.0, 0.0], "std": 1.0}}, "y": {"gaussian": {"mean": [-2.0, 0.0], "std": 1.0}}},
        "seed": 3
    }"#,
        dir.path(),
    )?;
    let v = verdict(&o, "synchronous_rate")?;
    let exact = -(1.0f64 - eta).ln() / eta;
    ensure(
        (v.estimate - exact).abs() <= 0.05 * exact,
        format!("fitted {:.6} vs -log(1-eta)/eta = {exact:.6} (tol 5%)", v.estimate),
    )
}

// 7 -------------------------------------------------------------------------

fn moment_bounds() -> Check {
    let model = make_bump_target(2, 2.0, 2.0).map_err(|e| e.to_string())?;
    let report = rate_report(model.params(), 2.0, &ConstantsOptions::default()).map_err(|e| e.to_string())?;
    let (kappa, k) = (report.geometry.kappa, model.params().k);
    let mut details = Vec::new();
    let mut ok = true;
    for p in [2.0, 4.0] {
        let eta = 0.5 * moment_step_bound(kappa, k, p).map_err(|e| e.to_string())?;
        let dir = tmp();
        let o = run_config(
            ExperimentKind::Simulate,
            &format!(
                r#"{{"target": {{"name": "bump", "dim": 2, "beta": 2.0}},
                "schedule": {{"constant": {eta}}},
                "ensemble": {{"n_chains": 1000}},
                "horizon": 100000, "record_every": 1000,
                "simulate": {{"moments": [{p}], "trend_level": 0.05}},
                "seed": 11}}"#
            ),
            dir.path(),
        )?;
        let trend = verdict(&o, &format!("moment_p{p}_trend"))?;
        let div = verdict(&o, "divergence_fraction")?;
        ok &= trend.pass && div.pass;
        details.push(format!("p={p}: eta {eta:.5}, {}", trend.tolerance));
    }
    let s = 1.2;
    for p in [2.0, 4.0] {
        let eta = 4.0 * (2.0 / (p - 1.0) / (s * s));
        let dir = tmp();
        let o = run_config(
            ExperimentKind::Simulate,
            &format!(
                r#"{{"target": {{"name": "quadratic", "dim": 2, "beta": 2.0, "stiffness": {s}}},
                "schedule": {{"constant": {eta}}},
                "ensemble": {{"n_chains": 200}},
                "horizon": 1000, "record_every": 100,
                "simulate": {{"moments": [{p}]}},
                "seed": 12}}"#
            ),
            dir.path(),
        )?;
        let div = verdict(&o, "divergence_fraction")?;
        ok &= !div.pass && !o.passed();
        details.push(format!("steep p={p}: eta {eta:.3}, diverged fraction {:.3} flagged = {}", div.estimate, !div.pass));
    }
    ensure(ok, details.join("; "))
}

// 8 -------------------------------------------------------------------------

fn invariant_bias() -> Check {
    let dir = tmp();
    let o = run_config(
        ExperimentKind::Bias,
        r#"{
        "target": {"name": "gaussian", "dim": 1, "beta": 1.0},
        "ensemble": {"n_chains": 2000},
        "bias": {"etas": [0.02, 0.01, 0.005], "burn_in_time": 10, "n_snapshots": 50, "snapshot_spacing": 1},
        "seed": 13
    }"#,
        dir.path(),
    )?;
    let ratios: Vec<f64> = o.verdicts.iter().filter(|v| v.statistic.starts_with("bias_ratio")).map(|v| v.estimate).collect();
    let oracle: Vec<&Verdict> = o.verdicts.iter().filter(|v| v.statistic.starts_with("bias_oracle")).collect();
    let decreasing = o
        .verdicts
        .iter()
        .filter(|v| v.statistic.starts_with("bias_decreasing"))
        .all(|v| v.pass);
    let within = oracle.iter().all(|v| {
        let se = v.ci_half_width / 1.96;
        (v.estimate - v.reference.unwrap_or(f64::NAN)).abs() <= 3.0 * se
    });
    let in_range = ratios.len() == 2 && ratios.iter().all(|r| (1.5..=2.8).contains(r));
    ensure(
        in_range && decreasing && within && oracle.len() == 3,
        format!(
            "ratios {:?} in [1.5, 2.8], decreasing {decreasing}, oracle within 3 sigma {within} ({})",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>(),
            oracle
                .iter()
                .map(|v| format!("{:.3e}/{:.3e}", v.estimate, v.reference.unwrap_or(f64::NAN)))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

// 9 -------------------------------------------------------------------------

fn zero_drift_model() -> std::result::Result<TargetModel, String> {
    let zero: ComponentFn = Box::new(|_, out| out.iter_mut().for_each(|v| *v = 0.0));
    let params = AssumptionParams::new(0.0, 1.0, 1.0, 0.0).map_err(|e| e.to_string())?;
    TargetModel::new(1, 1.0, vec![zero], params).map_err(|e| e.to_string())
}

fn tail_slope(p: &TailProfile) -> std::result::Result<f64, String> {
    p.fit.map(|f| f.slope).ok_or_else(|| "no tail fit".to_string())
}

fn subgaussian_tails() -> Check {
    let model = zero_drift_model()?;
    let eta = 0.01;
    let opts = |eta| TailOptions {
        eta,
        substeps: 16_384,
        n_samples: 10_000,
        separation: 10.0,
        levels: vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99],
        min_exceedances: 20,
    };
    let a = tail_experiment(&model, &opts(eta), 901).map_err(|e| e.to_string())?;
    let b = tail_experiment(&model, &opts(0.5 * eta), 902).map_err(|e| e.to_string())?;
    let ks_b = ks_statistic(&b.samples, |x| brownian_sup_cdf(x, 0.5 * eta)).map_err(|e| e.to_string())?;
    let p_b = ks_p_value(ks_b, b.samples.len());
    let ratio = tail_slope(&b.profile)? / tail_slope(&a.profile)?;
    ensure(
        a.ks_p_value >= 0.01 && p_b >= 0.01 && (ratio - 2.0).abs() <= 0.15 * 2.0,
        format!(
            "KS p = {:.3} (eta), {:.3} (eta/2), reject below 0.01; tail coefficient ratio {ratio:.3} (2 ± 15%)",
            a.ks_p_value, p_b
        ),
    )
}

// 10 ------------------------------------------------------------------------

fn general_drift() -> Check {
    let dir = tmp();
    let o = run_config(
        ExperimentKind::Couple,
        r#"{
        "target": {"name": "rotational", "dim": 2, "beta": 1.0, "gamma": 1.0},
        "schedule": {"constant": 0.01},
        "coupling": {"mode": "reflection", "substeps": 4},
        "ensemble": {"n_pairs": 5000},
        "horizon": 500,
        "record_every": 5,
        "init": {"x": {"gaussian": {"mean": [1.0, 0.0], "std": 1.0}}, "y": {"gaussian": {"mean": [1.0, 0.0], "std": 1.0}}},
        "couple": {"equal_marginals": true, "n_permutations": 199, "marginal_level": 0.01},
        "seed": 9
    }"#,
        dir.path(),
    )?;
    let r2 = verdict(&o, "rate_fit_r_squared")?.estimate;
    let rate = verdict(&o, "rate_vs_theory")?.estimate;
    let energy = verdict(&o, "equal_marginals_energy")?;
    ensure(
        r2 >= 0.9 && rate > 0.0 && energy.pass,
        format!("rate {rate:.4} (> 0), r² = {r2:.4} (>= 0.9), equal marginals: {}", energy.tolerance),
    )
}

// 11 ------------------------------------------------------------------------

fn brute_force_w1(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    fn permute(k: usize, perm: &mut Vec<usize>, cost: &dyn Fn(&[usize]) -> f64, best: &mut f64) {
        if k == perm.len() {
            *best = best.min(cost(perm));
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            permute(k + 1, perm, cost, best);
            perm.swap(k, i);
        }
    }
    let n = a.len();
    let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let cost = |p: &[usize]| (0..n).map(|i| dist(&a[i], &b[p[i]])).sum::<f64>();
    let mut best = f64::INFINITY;
    permute(0, &mut (0..n).collect(), &cost, &mut best);
    best / n as f64
}

fn sorted_w1(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn exact_w1_oracles() -> Check {
    let mut g = NoiseStream::new(11, 0);
    let mut worst_brute = 0.0f64;
    for _ in 0..200 {
        let n = 1 + g.index(6);
        let d = 1 + g.index(3);
        let pts = |g: &mut NoiseStream| (0..n).map(|_| (0..d).map(|_| g.standard_normal()).collect()).collect::<Vec<Vec<f64>>>();
        let (a, b) = (pts(&mut g), pts(&mut g));
        let solver = w1_empirical_assignment(&a, &b).map_err(|e| e.to_string())?;
        worst_brute = worst_brute.max(rel_err(solver, brute_force_w1(&a, &b)));
    }
    let mut worst_1d = 0.0f64;
    for _ in 0..200 {
        let n = 1 + g.index(256);
        let a: Vec<f64> = (0..n).map(|_| g.standard_normal()).collect();
        let b: Vec<f64> = (0..n).map(|_| 2.0 * g.uniform() - 0.5).collect();
        let wrap = |v: &[f64]| v.iter().map(|x| vec![*x]).collect::<Vec<_>>();
        let solver = w1_empirical_assignment(&wrap(&a), &wrap(&b)).map_err(|e| e.to_string())?;
        worst_1d = worst_1d.max(rel_err(solver, sorted_w1(&a, &b)));
    }
    ensure(
        worst_brute <= 1e-12 && worst_1d <= 1e-12,
        format!(
            "200 brute-force instances (n <= 6): max rel err {worst_brute:.1e}; 200 1D instances (n <= 256): max rel err {worst_1d:.1e} (tol 1e-12)"
        ),
    )
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "constants pipeline exactness", budget: Duration::from_secs(1), run: constants_pipeline },
        Criterion { id: 2, name: "distance function properties", budget: Duration::from_secs(10), run: distance_function },
        Criterion { id: 3, name: "far-field convexity", budget: Duration::from_secs(10), run: far_field_convexity },
        Criterion { id: 4, name: "coupling validity (equal marginals)", budget: Duration::from_secs(120), run: equal_marginals },
        Criterion { id: 5, name: "geometric contraction", budget: Duration::from_secs(300), run: geometric_contraction },
        Criterion { id: 6, name: "synchronous baseline exactness", budget: Duration::from_secs(30), run: synchronous_baseline },
        Criterion { id: 7, name: "moment bounds and divergence", budget: Duration::from_secs(120), run: moment_bounds },
        Criterion { id: 8, name: "invariant-measure bias", budget: Duration::from_secs(120), run: invariant_bias },
        Criterion { id: 9, name: "sub-Gaussian tails", budget: Duration::from_secs(60), run: subgaussian_tails },
        Criterion { id: 10, name: "general drift", budget: Duration::from_secs(180), run: general_drift },
        Criterion { id: 11, name: "exact W1 oracles", budget: Duration::from_secs(30), run: exact_w1_oracles },
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        let timing = if elapsed > c.budget {
            format!("{:.2}s, over the {}s budget", elapsed.as_secs_f64(), c.budget.as_secs())
        } else {
            format!("{:.2}s", elapsed.as_secs_f64())
        };
        println!("{} [{:>2}] {} ({timing}): {detail}", if ok { "PASS" } else { "FAIL" }, c.id, c.name);
        ran += 1;
        if !ok {
            failed += 1;
        }
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
