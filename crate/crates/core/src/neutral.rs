//! The neutral scalar field `N_u`, solving `-ΔN + μ² N + q c u² = 0` with
//! `μ = κq` and `c = 1 + κq/2m`, by two independent routes.
//!
//! The finite-volume solve is the one the energy and the solver use: its
//! matrix is an M-matrix, so `N ≤ 0` holds exactly, and its discrete energy
//! identity holds to rounding. The Green route evaluates the free-space
//! kernel `I₀(μ r_<) K₀(μ r_>)` through two cumulative integrals.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bessel::{bessel_i0, bessel_k0, bessel_k1, MAX_ARGUMENT};
use crate::cells::CellForms;
use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::radial::{planar, RadialField, RadialGrid};
use crate::tridiag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeutralMethod {
    FiniteDifference,
    GreenOracle,
}

#[derive(Debug, Clone)]
pub struct NeutralSolveReport {
    pub n_field: RadialField,
    /// `∫ N_u u² dx`.
    pub coupling: f64,
    /// `‖∇N_u‖₂² + μ² ‖N_u‖₂²`.
    pub energy_lhs: f64,
    pub method: NeutralMethod,
}

impl NeutralSolveReport {
    /// `-q c · coupling`, the value `energy_lhs` should reproduce.
    pub fn energy_rhs(&self, p: &PhysicalParams) -> f64 {
        -p.q * p.neutral_factor() * self.coupling
    }

    /// Relative defect of the energy identity.
    pub fn energy_defect(&self, p: &PhysicalParams) -> f64 {
        let rhs = self.energy_rhs(p);
        let scale = self.energy_lhs.abs().max(rhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.energy_lhs - rhs).abs() / scale
        }
    }
}

/// Finite-volume solve of `(S + μ² M) N = -q c V u²` with `N(R) = 0`.
pub(crate) fn fd_values(cells: &CellForms, p: &PhysicalParams, u: &[f64]) -> Result<Vec<f64>> {
    let n = u.len();
    let mu = p.screening();
    let ones = vec![1.0; n - 1];
    let (sub, diag, sup) = cells.dirichlet_system(mu * mu, &ones);
    let qc = p.q * p.neutral_factor();
    let vol = cells.volumes();
    let mut rhs: Vec<f64> = (0..n - 1).map(|i| -qc * vol[i] * u[i] * u[i]).collect();
    tridiag::solve(&sub, &diag, &sup, &mut rhs).ok_or(Error::NeutralSolveFailed)?;
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NeutralSolveFailed);
    }
    rhs.push(0.0);
    Ok(rhs)
}

pub fn solve_neutral_fd(u: &RadialField, p: &PhysicalParams) -> Result<NeutralSolveReport> {
    let grid = u.grid();
    let cells = grid.cells();
    let mu = p.screening();
    let n = fd_values(cells, p, u.values())?;
    let sq: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    let coupling = 2.0 * PI * cells.mass(&n, &sq);
    let energy_lhs = 2.0 * PI * (cells.stiffness(&n, &n) + mu * mu * cells.mass(&n, &n));
    Ok(NeutralSolveReport {
        n_field: RadialField::new(grid.clone(), n)?,
        coupling,
        energy_lhs,
        method: NeutralMethod::FiniteDifference,
    })
}

/// `N(r) = -q c [K₀(μr) ∫_0^r I₀(μs) s u² ds + I₀(μr) ∫_r^R K₀(μs) s u² ds]`.
///
/// The `K₀` integral is accumulated panel by panel from `R` inward; see
/// `outer_tail` for the treatment near the logarithmic singularity.
pub fn solve_neutral_green(u: &RadialField, p: &PhysicalParams) -> Result<NeutralSolveReport> {
    let grid = u.grid();
    let mu = p.screening();
    if mu * grid.radius() > MAX_ARGUMENT {
        return Err(Error::BesselRange(mu * grid.radius()));
    }
    let nodes = grid.nodes();
    let len = nodes.len();
    let f: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    let i0: Vec<f64> = nodes.iter().map(|r| bessel_i0(mu * r)).collect();
    let mut k0 = vec![0.0; len];
    for i in 1..len {
        k0[i] = bessel_k0(mu * nodes[i])?;
    }

    let inner: Vec<f64> = (0..len).map(|i| i0[i] * nodes[i] * f[i]).collect();
    let inner = grid.cumulative(&inner);
    let outer: Vec<f64> = (0..len).map(|i| k0[i] * nodes[i] * f[i]).collect();
    let outer = outer_tail(grid, mu, &f, &outer)?;

    let qc = p.q * p.neutral_factor();
    let values: Vec<f64> = (0..len).map(|i| -qc * (k0[i] * inner[i] + i0[i] * outer[i])).collect();
    let n_field = RadialField::new(grid.clone(), values).map_err(|_| Error::NeutralSolveFailed)?;

    let dn = grid.derivative(n_field.values());
    let nv = n_field.values();
    let grad: Vec<f64> = dn.iter().map(|d| d * d).collect();
    let sq: Vec<f64> = nv.iter().map(|v| v * v).collect();
    let energy_lhs = planar(grid, &grad) + mu * mu * planar(grid, &sq);
    let pair: Vec<f64> = nv.iter().zip(&f).map(|(a, b)| a * b).collect();
    let coupling = planar(grid, &pair);
    Ok(NeutralSolveReport {
        n_field,
        coupling,
        energy_lhs,
        method: NeutralMethod::GreenOracle,
    })
}

/// Panels next to the origin whose `K₀` integrals are done with Gauss-Legendre
/// rather than the node rule, which sees the `s ln s` behaviour there.
const NEAR_PANELS: usize = 32;

/// `∫_{r_i}^R K₀(μs) s f(s) ds` for every node.
///
/// Panel 0 fits `f ≈ a + b s²` and uses the exact moments of `s K₀(μs)` and
/// `s³ K₀(μs)`. The next panels interpolate `f` by a cubic through the
/// surrounding nodes and integrate against `s K₀(μs)` with Gauss-Legendre;
/// the rest use the node rule on `g = K₀(μs) s f`.
fn outer_tail(grid: &RadialGrid, mu: f64, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    let len = f.len();
    let h = grid.step();
    let near = NEAR_PANELS.min(len.saturating_sub(3));
    let mut panels: Vec<f64> = (0..len - 1)
        .map(|k| if k < near { 0.0 } else { grid.panel(k, g) })
        .collect();

    let x = mu * h;
    let k0 = bessel_k0(x)?;
    let k1 = bessel_k1(x)?;
    let k2 = k0 + 2.0 * k1 / x;
    let m1 = (1.0 - x * k1) / (mu * mu);
    let m3 = (4.0 - x * x * x * k1 - 2.0 * x * x * k2) / mu.powi(4);
    panels[0] = f[0] * m1 + (f[1] - f[0]) / (h * h) * m3;

    let (abscissae, weights) = gauss_legendre(12);
    for (k, panel) in panels.iter_mut().enumerate().take(near).skip(1) {
        let a = k as f64 * h;
        let stencil = [f[k - 1], f[k], f[k + 1], f[k + 2]];
        let mut sum = 0.0;
        for (t, w) in abscissae.iter().zip(&weights) {
            let local = 0.5 * (t + 1.0);
            let s = a + local * h;
            sum += w * cubic_through(&stencil, local) * s * bessel_k0(mu * s)?;
        }
        *panel = 0.5 * h * sum;
    }

    let mut tail = vec![0.0; len];
    for k in (0..len - 1).rev() {
        tail[k] = tail[k + 1] + panels[k];
    }
    Ok(tail)
}

/// Cubic through values at local positions -1, 0, 1, 2, evaluated at `t`.
fn cubic_through(v: &[f64; 4], t: f64) -> f64 {
    let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    v[0] * l0 + v[1] * l1 + v[2] * l2 + v[3] * l3
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Bound on the coupling by the quartic norm: returns `(lhs, rhs, holds)` with
/// `lhs = -∫ N_u u²`, `rhs = (1/κ²q) c ‖u‖₄⁴`. Both sides use the cell rule,
/// under which the bound is exact for the discrete problem.
pub fn neutral_coupling_inequality(u: &RadialField, p: &PhysicalParams) -> Result<(f64, f64, bool)> {
    let report = solve_neutral_fd(u, p)?;
    let cells = u.grid().cells();
    let quartic: Vec<f64> = u.values().iter().map(|v| v.powi(4)).collect();
    let l4 = 2.0 * PI * cells.sum(&quartic);
    let lhs = -report.coupling;
    let rhs = p.neutral_factor() / (p.kappa * p.kappa * p.q) * l4;
    Ok((lhs, rhs, lhs <= rhs * (1.0 + 1e-8)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    const GAUSSIAN_COUPLING: f64 = -1.087_278_473_599_049;
    const GAUSSIAN_N0: f64 = -0.502_832_041_811_772_5;

    fn unit() -> PhysicalParams {
        PhysicalParams::unit(1.0).unwrap()
    }

    fn gaussian(g: &Arc<RadialGrid>) -> RadialField {
        RadialField::from_fn(g.clone(), |r| (-r * r / 2.0).exp()).unwrap()
    }

    fn rel_max(a: &RadialField, b: &RadialField) -> f64 {
        let scale = a.max_abs().max(b.max_abs());
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn zero_source_gives_zero_field() {
        let g = RadialGrid::shared(20.0, 512).unwrap();
        let z = RadialField::zeros(g);
        for r in [
            solve_neutral_fd(&z, &unit()).unwrap(),
            solve_neutral_green(&z, &unit()).unwrap(),
        ] {
            assert!(r.n_field.values().iter().all(|v| *v == 0.0));
            assert_eq!(r.coupling, 0.0);
        }
        assert_eq!(neutral_coupling_inequality(&z, &unit()).unwrap(), (0.0, 0.0, true));
    }

    #[test]
    fn green_matches_closed_form_coupling() {
        let g = RadialGrid::shared(20.0, 2048).unwrap();
        let r = solve_neutral_green(&gaussian(&g), &unit()).unwrap();
        assert!((r.coupling - GAUSSIAN_COUPLING).abs() < 1e-7, "{}", r.coupling);
        assert!((r.n_field.values()[0] - GAUSSIAN_N0).abs() < 1e-8);
        assert!(r.energy_defect(&unit()) < 1e-6, "{}", r.energy_defect(&unit()));
    }

    #[test]
    fn fd_agrees_with_green_on_gaussian() {
        // second-order FD: coupling error is about 2e-5 at n = 2048, 5e-6 at 4096
        let g = RadialGrid::shared(20.0, 4096).unwrap();
        let u = gaussian(&g);
        let fd = solve_neutral_fd(&u, &unit()).unwrap();
        let gr = solve_neutral_green(&u, &unit()).unwrap();
        assert!(((fd.coupling - gr.coupling) / gr.coupling).abs() < 1e-5);
        assert!(((gr.coupling - GAUSSIAN_COUPLING) / GAUSSIAN_COUPLING).abs() < 1e-9);
        assert!(rel_max(&fd.n_field, &gr.n_field) < 1e-4);
        assert!(fd.energy_defect(&unit()) < 1e-12);
        assert!(fd.n_field.values().iter().all(|v| *v <= 0.0));
    }

    #[test]
    fn quadratic_scaling_and_determinism() {
        let g = RadialGrid::shared(20.0, 1024).unwrap();
        let u = gaussian(&g);
        let a = solve_neutral_fd(&u, &unit()).unwrap();
        let b = solve_neutral_fd(&u.scaled(2.0).unwrap(), &unit()).unwrap();
        for (x, y) in a.n_field.values().iter().zip(b.n_field.values()) {
            assert!((4.0 * x - y).abs() <= 1e-10 * y.abs());
        }
        let again = solve_neutral_fd(&u, &unit()).unwrap();
        assert_eq!(a.n_field.values(), again.n_field.values());
    }

    #[test]
    fn sources_add() {
        let g = RadialGrid::shared(15.0, 600).unwrap();
        let a = RadialField::from_fn(g.clone(), |r| (-r * r).exp()).unwrap();
        let b = RadialField::from_fn(g.clone(), |r| 0.5 * (-(r - 2.0).powi(2)).exp()).unwrap();
        let sum = RadialField::from_fn(g.clone(), |r| {
            ((-r * r).exp().powi(2) + (0.5 * (-(r - 2.0).powi(2)).exp()).powi(2)).sqrt()
        })
        .unwrap();
        let p = PhysicalParams::new(1.0, 1.0, 1.0, 0.8, 1.5).unwrap();
        let na = solve_neutral_fd(&a, &p).unwrap().n_field;
        let nb = solve_neutral_fd(&b, &p).unwrap().n_field;
        let ns = solve_neutral_fd(&sum, &p).unwrap().n_field;
        for i in 0..g.len() {
            let expect = na.values()[i] + nb.values()[i];
            assert!((ns.values()[i] - expect).abs() <= 1e-12 * ns.max_abs());
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        for k in 0..24 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn bessel_range_guard() {
        let g = RadialGrid::shared(700.0, 64).unwrap();
        let u = RadialField::zeros(g);
        assert!(matches!(solve_neutral_green(&u, &unit()), Err(Error::BesselRange(_))));
    }

    #[test]
    fn inequality_ratio_is_scale_invariant() {
        let g = RadialGrid::shared(20.0, 800).unwrap();
        let u = RadialField::from_fn(g, |r| (-(r - 1.0).powi(2)).exp() + 0.3 * (-r * r / 4.0).exp()).unwrap();
        let (l1, r1, ok) = neutral_coupling_inequality(&u, &unit()).unwrap();
        assert!(ok);
        let (l2, r2, _) = neutral_coupling_inequality(&u.scaled(3.0).unwrap(), &unit()).unwrap();
        assert!((l1 / r1 - l2 / r2).abs() < 1e-10);
    }
}
