//! The four commands. Configuration and I/O problems surface as errors
//! (exit code 1); solver and check outcomes are reported through [`Outcome`].

use anyhow::{bail, ensure};
use csh_core::functional::fiber_map;
use csh_core::mountainpass::{self, find_endpoint, find_negative_direction, sweep_coupling};
use csh_core::verify::run_lemma_suite;
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::output::OutputDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    NotConverged,
    ChecksFailed,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::NotConverged => 2,
            Outcome::ChecksFailed => 3,
        }
    }
}

const NO_NONEXISTENCE: &str = "a failed run does not show that no solution exists";

fn open_output(cfg: &RunConfig) -> anyhow::Result<OutputDir> {
    let out = OutputDir::create(&cfg.output.directory)?;
    out.config(cfg)?;
    Ok(out)
}

/// Negative direction, endpoint and mountain-pass solve; writes
/// `solution.json` and `profile.csv`.
pub fn solve(cfg: &RunConfig, quiet: bool) -> anyhow::Result<Outcome> {
    let grid = cfg.build_grid()?;
    let out = open_output(cfg)?;
    let run = match mountainpass::solve(&grid, &cfg.params, &cfg.cutoff, &cfg.solver) {
        Ok(run) => run,
        Err(err) => {
            eprintln!("not converged: {err}; {NO_NONEXISTENCE}");
            return Ok(Outcome::NotConverged);
        }
    };
    let b = &run.attempt.bundle;
    let failure = run.attempt.failure.as_ref().map(|e| e.to_string());
    if cfg.wants(Format::Json) {
        let meta = json!({
            "direction": {
                "lambda": run.direction.lambda,
                "sigma": run.direction.sigma,
                "quartic_ratio": run.direction.ratio,
                "threshold": run.direction.threshold,
            },
            "cutoff_t": run.cutoff.t,
            "endpoint": { "t": run.endpoint.t, "energy": run.endpoint.energy },
            "failure": failure,
        });
        out.json(
            "solution.json",
            cfg,
            vec![("run", meta), ("solution", serde_json::to_value(b)?)],
        )?;
    }
    if cfg.wants(Format::Csv) {
        out.profile(b)?;
    }
    if !quiet {
        println!(
            "{} e={} energy={:.12} residual_u={:.3e} residual_n={:.3e} norm={:.6} T={:.6} k_t={} iterations={}",
            if b.converged { "converged" } else { "not converged" },
            cfg.params.e,
            b.energy.total,
            b.residual_u,
            b.residual_n,
            b.h1_norm,
            b.cutoff_t,
            b.k_t_at_solution,
            b.path_sweeps + b.iterations,
        );
    }
    if b.converged {
        Ok(Outcome::Success)
    } else {
        eprintln!(
            "not converged: {}; {NO_NONEXISTENCE}",
            failure.unwrap_or_else(|| "residual above final_tol".into())
        );
        Ok(Outcome::NotConverged)
    }
}

/// Randomized theorem checks; writes `checks.csv` and `checks.json`.
pub fn verify(cfg: &RunConfig, trials: usize, quiet: bool) -> anyhow::Result<Outcome> {
    ensure!(trials >= 1, "trials must be ≥ 1");
    let grid = cfg.build_grid()?;
    let out = open_output(cfg)?;
    let rows = run_lemma_suite(&cfg.params, &grid, trials, cfg.seed)?;
    if cfg.wants(Format::Csv) {
        out.checks(&rows)?;
    }
    if cfg.wants(Format::Json) {
        out.json(
            "checks.json",
            cfg,
            vec![("trials", json!(trials)), ("checks", serde_json::to_value(&rows)?)],
        )?;
    }
    let failed: Vec<_> = rows.iter().filter(|r| !r.passed).collect();
    for r in failed.iter().filter(|r| r.trial.is_some()).take(20) {
        eprintln!(
            "FAIL {} trial {:?}: measured {:e}, bound/target {:e}, tolerance {:e} {}",
            r.name, r.trial, r.measured, r.bound_or_target, r.tolerance, r.note
        );
    }
    if !quiet {
        println!(
            "{} checks, {} failed ({} trials, seed {})",
            rows.len(),
            failed.len(),
            trials,
            cfg.seed
        );
    }
    Ok(if failed.is_empty() {
        Outcome::Success
    } else {
        Outcome::ChecksFailed
    })
}

/// Geometric grid of `steps` values from `from` to `to`.
pub fn geometric(from: f64, to: f64, steps: usize) -> anyhow::Result<Vec<f64>> {
    ensure!(from.is_finite() && from > 0.0, "--from must be positive");
    ensure!(steps >= 1, "--steps must be at least 1");
    if steps == 1 {
        return Ok(vec![from]);
    }
    ensure!(to.is_finite() && to > from, "--to must exceed --from");
    let ratio = (to / from).ln() / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                to
            } else {
                from * (ratio * i as f64).exp()
            }
        })
        .collect())
}

/// Coupling sweep; writes `sweep.csv` (and `sweep.json` with failure notes).
pub fn sweep(cfg: &RunConfig, param: &str, from: f64, to: f64, steps: usize, quiet: bool) -> anyhow::Result<Outcome> {
    if param != "e" {
        bail!("unsupported sweep parameter {param:?}; only \"e\" can be swept");
    }
    let values = geometric(from, to, steps)?;
    let grid = cfg.build_grid()?;
    let out = open_output(cfg)?;
    let rows = sweep_coupling(&grid, &cfg.params, &values, &cfg.cutoff, &cfg.solver)?;
    if cfg.wants(Format::Csv) {
        out.sweep(&rows)?;
    }
    if cfg.wants(Format::Json) {
        out.json("sweep.json", cfg, vec![("rows", serde_json::to_value(&rows)?)])?;
    }
    let converged = rows.iter().filter(|r| r.converged).count();
    if !quiet {
        for r in &rows {
            println!(
                "e={:.6e} converged={} norm/T={:.4e} k_t={} energy={:.6e} residual_u={:.2e} {}",
                r.e, r.converged, r.norm_over_t, r.k_t, r.energy, r.residual_u, r.note
            );
        }
        println!("{converged} of {} rows converged", rows.len());
    }
    if converged == 0 {
        eprintln!("no row converged; {NO_NONEXISTENCE}");
        Ok(Outcome::NotConverged)
    } else {
        Ok(Outcome::Success)
    }
}

/// Fibering map of the negative direction; writes `fiber.csv`. Without
/// `tmax` the samples run to twice the endpoint scale.
pub fn fiber(cfg: &RunConfig, tmax: Option<f64>, samples: usize, quiet: bool) -> anyhow::Result<Outcome> {
    ensure!(samples >= 8, "--samples must be at least 8");
    if let Some(t) = tmax {
        ensure!(t.is_finite() && t > 0.0, "--tmax must be positive");
    }
    let grid = cfg.build_grid()?;
    let dir = find_negative_direction(&grid, &cfg.params)?;
    let c = cfg.cutoff.resolve(&dir.u, &cfg.params)?;
    let tmax = match tmax {
        Some(t) => t,
        None => 2.0 * find_endpoint(&dir.u, &cfg.params, &c)?.t,
    };
    let ts: Vec<f64> = (0..samples).map(|i| tmax * i as f64 / (samples - 1) as f64).collect();
    let map = fiber_map(&dir.u, &cfg.params, Some(&c), &ts)?;
    let out = open_output(cfg)?;
    if cfg.wants(Format::Csv) {
        out.fiber(&map)?;
    }
    if cfg.wants(Format::Json) {
        let meta = json!({ "lambda": dir.lambda, "sigma": dir.sigma, "cutoff_t": c.t, "tmax": tmax });
        out.json(
            "fiber.json",
            cfg,
            vec![("direction", meta), ("samples", serde_json::to_value(&map)?)],
        )?;
    }
    if !quiet {
        println!(
            "fibre of lambda={} sigma={:.6} with T={:.6}: {samples} samples on [0, {tmax}]",
            dir.lambda, dir.sigma, c.t
        );
    }
    Ok(Outcome::Success)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_spacing() {
        let v = geometric(0.01, 1.0, 3).unwrap();
        assert_eq!(v[0], 0.01);
        assert!((v[1] - 0.1).abs() < 1e-15);
        assert_eq!(v[2], 1.0);
        assert_eq!(geometric(0.3, 0.1, 1).unwrap(), vec![0.3]);
        assert!(geometric(0.3, 0.1, 4).is_err());
        assert!(geometric(0.0, 1.0, 4).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Outcome::Success.exit_code(), 0);
        assert_eq!(Outcome::NotConverged.exit_code(), 2);
        assert_eq!(Outcome::ChecksFailed.exit_code(), 3);
    }
}
