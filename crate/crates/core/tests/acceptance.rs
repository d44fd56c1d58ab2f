//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::REFERENCE;
use scorefit::commands::{fit_check_stai, FitCheckOptions};
use scorefit::{
    bartlett_weights, build_parallel_sigma, factor_implied_sigma, fs_implied_sigma, min_p_for_srmr, regression_weights,
    run_simulation, score_model_implied_sigma, solve_r_for_srmr, srmr, srmr_parallel_closed_form, FactorModel,
    LoadingPattern, ModelKind, ParallelSpec, ScoreWeights, SimulationCell, SimulationConfig,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spec(r: f64, p: usize) -> ParallelSpec {
    ParallelSpec::new(r, p).unwrap()
}

/// Closed form against the reference population column (two-decimal
/// rounding, tolerance 0.005).
fn closed_form_vs_population_column() -> Outcome {
    let mut worst = 0.0_f64;
    for &(n, l, p, row) in REFERENCE.iter().filter(|r| r.0 == 150) {
        let value = srmr_parallel_closed_form(spec(l * l, p));
        let diff = (value - row[0]).abs();
        worst = worst.max(diff);
        ensure(diff <= 0.005, || {
            format!("n={n} l={l} p={p}: closed form {value:.4} vs reference {}", row[0])
        })?;
    }
    Ok(format!("12 cells, max |diff| = {worst:.4} <= 0.005"))
}

/// Elementwise pipeline versus closed form, tolerance 1e-12.
fn oracle_equivalence() -> Outcome {
    let mut worst = 0.0_f64;
    for &r in &[0.0, 0.04, 0.16, 0.36, 0.64, 0.9] {
        for &p in &[2usize, 6, 12, 24, 60] {
            let sigma = build_parallel_sigma(spec(r, p));
            let implied = score_model_implied_sigma(&sigma, &ScoreWeights::unit(p)).map_err(|e| e.to_string())?;
            let pipeline = srmr(&sigma, &implied, ModelKind::UnitWeighted).unwrap().srmr;
            let diff = (pipeline - srmr_parallel_closed_form(spec(r, p))).abs();
            worst = worst.max(diff);
            ensure(diff <= 1e-12, || format!("r={r} p={p}: |diff| = {diff:e}"))?;
        }
    }
    Ok(format!("30 grid points, max |diff| = {worst:e} <= 1e-12"))
}

/// Embedded STAI data: unit-weighted .197 and factor score .198, each +- 0.001.
fn empirical_goldens() -> Outcome {
    let doc = fit_check_stai(FitCheckOptions::default()).map_err(|e| e.to_string())?;
    let unit = doc.fit(ModelKind::UnitWeighted).unwrap().srmr;
    let fs = doc.fit(ModelKind::FactorScore).unwrap().srmr;
    ensure((unit - 0.197).abs() <= 0.001, || {
        format!("unit-weighted SRMR {unit:.5}")
    })?;
    ensure((fs - 0.198).abs() <= 0.001, || format!("factor score SRMR {fs:.5}"))?;
    Ok(format!("unit-weighted {unit:.5}, factor score {fs:.5}"))
}

/// Reflective model within .067 +- .010, plus the frozen regression golden.
fn reflective_sanity() -> Outcome {
    let doc = fit_check_stai(FitCheckOptions {
        reflective: true,
        residuals: false,
    })
    .map_err(|e| e.to_string())?;
    let value = doc.fit(ModelKind::ReflectiveFactor).unwrap().srmr;
    ensure((value - 0.067).abs() <= 0.010, || format!("reflective SRMR {value:.5}"))?;
    const FROZEN: f64 = 0.066838652914705;
    ensure((value - FROZEN).abs() <= 1e-10, || {
        format!("reflective SRMR {value:.15} drifted from frozen {FROZEN}")
    })?;
    Ok(format!("reflective {value:.5} (frozen {FROZEN})"))
}

fn compare_to_table(cells: &[SimulationCell], mean_tol: f64, sd_tol: Option<f64>) -> Result<(f64, f64), String> {
    let mut worst_mean = 0.0_f64;
    let mut worst_sd = 0.0_f64;
    ensure(cells.len() == 72, || format!("expected 72 cells, got {}", cells.len()))?;
    for cell in cells {
        let (_, _, _, row) = REFERENCE
            .iter()
            .find(|r| r.0 == cell.n && r.1 == cell.l && r.2 == cell.p)
            .ok_or_else(|| format!("no reference row for n={} l={} p={}", cell.n, cell.l, cell.p))?;
        let (mean, sd) = match cell.pattern {
            LoadingPattern::Constant => (row[1], row[2]),
            LoadingPattern::Variable => (row[4], row[5]),
        };
        let dm = (cell.mean_srmr_s - mean).abs();
        let ds = (cell.sd_srmr_s - sd).abs();
        worst_mean = worst_mean.max(dm);
        worst_sd = worst_sd.max(ds);
        let label = format!("n={} l={} p={} {}", cell.n, cell.l, cell.p, cell.pattern.label());
        ensure(dm <= mean_tol, || {
            format!("{label}: mean {:.4} vs reference {mean}", cell.mean_srmr_s)
        })?;
        if let Some(tol) = sd_tol {
            ensure(ds <= tol, || {
                format!("{label}: SD {:.4} vs reference {sd}", cell.sd_srmr_s)
            })?;
        }
    }
    Ok((worst_mean, worst_sd))
}

/// 72 cells at 1000 replications: means +- 0.01, SDs +- 0.005; at 5000
/// replications means +- 0.005.
fn simulation_reproduction() -> Outcome {
    let desk = run_simulation(&SimulationConfig::full_design(1000, 20_261_015)).map_err(|e| e.to_string())?;
    let (dm, ds) = compare_to_table(&desk, 0.01, Some(0.005))?;
    let full = run_simulation(&SimulationConfig::full_design(5000, 20_261_016)).map_err(|e| e.to_string())?;
    let (fm, _) = compare_to_table(&full, 0.005, None)?;
    Ok(format!(
        "1000 reps: max |mean diff| {dm:.4}, max |SD diff| {ds:.4}; 5000 reps: max |mean diff| {fm:.4}"
    ))
}

fn required_r_inversions() -> Outcome {
    let r16 = solve_r_for_srmr(0.06, 16).map_err(|e| e.to_string())?;
    ensure(r16 > 0.80 && r16 < 0.82, || format!("r for SRMR .06 at p=16 is {r16}"))?;
    let r60 = solve_r_for_srmr(0.09, 60).map_err(|e| e.to_string())?;
    ensure(r60 > 0.48 && r60 < 0.52, || format!("r for SRMR .09 at p=60 is {r60}"))?;
    let p = min_p_for_srmr(0.09, 0.199).map_err(|e| e.to_string())?;
    ensure(p > 150, || format!("min p for SRMR .09 at r=.199 is {p}"))?;
    Ok(format!(
        "r(.06, 16) = {r16:.4}, r(.09, 60) = {r60:.4}, min p(.09, .199) = {p}"
    ))
}

fn random_model(rng: &mut ChaCha8Rng) -> FactorModel {
    loop {
        let q = rng.random_range(1..=2usize);
        let p = rng.random_range(3 * q..=12);
        let mut lambda = DMatrix::zeros(p, q);
        for i in 0..p {
            for j in 0..q {
                let salient = i % q == j;
                lambda[(i, j)] = if salient {
                    rng.random_range(0.3..0.85)
                } else {
                    rng.random_range(-0.15..0.15)
                };
            }
        }
        let mut phi = DMatrix::identity(q, q);
        if q == 2 {
            let c = rng.random_range(-0.6..0.6);
            phi[(0, 1)] = c;
            phi[(1, 0)] = c;
        }
        if let Ok(model) = FactorModel::standardized(lambda, phi) {
            if model.uniquenesses().iter().all(|u| *u > 0.05) {
                return model;
            }
        }
    }
}

/// 50 random one- and two-factor models: three routes agree within 1e-8 and
/// Bartlett weights satisfy B'L = I within 1e-8.
fn estimator_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0_f64;
    let mut two_factor = 0;
    for k in 0..50 {
        let model = random_model(&mut rng);
        two_factor += (model.q() == 2) as usize;
        let sigma = factor_implied_sigma(&model);
        let fs = fs_implied_sigma(&sigma, &model).map_err(|e| e.to_string())?;
        let reg = score_model_implied_sigma(&sigma, &regression_weights(&sigma, &model).unwrap()).unwrap();
        let bartlett = bartlett_weights(&model).unwrap();
        let bar = score_model_implied_sigma(&sigma, &bartlett).unwrap();
        let unbiased = bartlett.values().transpose() * model.loadings() - DMatrix::identity(model.q(), model.q());
        let d = [
            (fs.values() - reg.values()).abs().max(),
            (fs.values() - bar.values()).abs().max(),
            (reg.values() - bar.values()).abs().max(),
            unbiased.abs().max(),
        ];
        let m = d.iter().copied().fold(0.0, f64::max);
        worst = worst.max(m);
        ensure(m <= 1e-8, || {
            format!("model {k} (p={}, q={}): deviation {m:e}", model.p(), model.q())
        })?;
    }
    ensure(two_factor > 0 && two_factor < 50, || {
        "model mix lacks one- or two-factor cases".into()
    })?;
    Ok(format!(
        "50 models ({two_factor} two-factor), max deviation {worst:e} <= 1e-8"
    ))
}

/// Exact zero at r = 1, monotone decrease in r and p, solve/closed-form
/// round trip within 1e-8.
///
/// Monotonicity in p is checked from p = 3: the closed form rises from p = 2
/// to p = 3 for every r < 1, which this criterion also pins.
fn limits_and_boundaries() -> Outcome {
    for p in 2..=200 {
        let v = srmr_parallel_closed_form(spec(1.0, p));
        ensure(v == 0.0, || format!("SRMR at r=1, p={p} is {v:e}"))?;
    }
    let rs: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
    for p in (2..=200).chain([500, 1000, 10_000]) {
        for w in rs.windows(2) {
            let (a, b) = (
                srmr_parallel_closed_form(spec(w[0], p)),
                srmr_parallel_closed_form(spec(w[1], p)),
            );
            ensure(b < a, || format!("not decreasing in r at p={p}, r={}", w[1]))?;
        }
    }
    for &r in rs.iter().filter(|r| **r < 1.0).step_by(10) {
        for p in 3..=2000 {
            let (a, b) = (
                srmr_parallel_closed_form(spec(r, p)),
                srmr_parallel_closed_form(spec(r, p + 1)),
            );
            ensure(b < a, || format!("not decreasing in p at r={r}, p={}", p + 1))?;
        }
        let (two, three) = (
            srmr_parallel_closed_form(spec(r, 2)),
            srmr_parallel_closed_form(spec(r, 3)),
        );
        ensure(three > two, || format!("expected the p=2 -> 3 rise at r={r}"))?;
    }
    let mut worst = 0.0_f64;
    for &r in rs.iter().filter(|r| **r < 1.0).step_by(7) {
        for &p in &[2usize, 3, 6, 16, 60, 150, 1000] {
            let back = solve_r_for_srmr(srmr_parallel_closed_form(spec(r, p)), p).map_err(|e| e.to_string())?;
            worst = worst.max((back - r).abs());
            ensure((back - r).abs() <= 1e-8, || {
                format!("round trip r={r} p={p} gave {back}")
            })?;
        }
    }
    Ok(format!(
        "zero at r=1 for p in 2..=200; monotone on dense grids (p >= 3 for p); round trip max |diff| {worst:e}"
    ))
}

/// Two `simulate` runs with identical flags give byte-identical CSV,
/// across thread counts and the sequential path.
fn determinism() -> Outcome {
    let run = |threads: &str, extra: &[&str]| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_scorefit"))
            .args(["simulate", "--reps", "100", "--seed", "99", "--format", "csv"])
            .args(extra)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
        Ok(out.stdout)
    };
    let a = run("1", &[])?;
    let b = run("1", &[])?;
    let c = run("4", &[])?;
    let d = run("3", &["--sequential"])?;
    ensure(a == b, || "repeat run differs".into())?;
    ensure(a == c, || "1 vs 4 threads differ".into())?;
    ensure(a == d, || "parallel vs sequential differ".into())?;
    Ok(format!(
        "{} bytes identical across 4 runs (1, 1, 4 threads, sequential)",
        a.len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "closed form vs reference population SRMR",
            closed_form_vs_population_column,
        ),
        ("oracle equivalence of pipeline and closed form", oracle_equivalence),
        ("empirical example goldens", empirical_goldens),
        ("reflective model sanity", reflective_sanity),
        ("simulation reproduction", simulation_reproduction),
        ("required r and minimum p inversions", required_r_inversions),
        ("estimator invariance", estimator_invariance),
        ("limits and boundaries", limits_and_boundaries),
        ("simulate determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  A{} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  A{} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
