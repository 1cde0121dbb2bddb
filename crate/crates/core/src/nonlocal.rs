//! Chern-Simons nonlocal objects: the flux function `h_u`, the electric
//! potential `A⁰`, the tangential magnetic potential and the Chern-Simons
//! energy integral.
//!
//! The free functions use the fourth-order rule of [`crate::radial`].
//! [`CellGauge`] evaluates the same objects with the cell rule the discrete
//! energy is built on; its derivative structure is what makes the energy
//! gradient coincide with the pointwise residual of the first equation.

use crate::cells::CellForms;
use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::radial::{planar, RadialField};

/// `h_u(r) = ∫_0^r s u²(s) ds`.
pub fn compute_h(u: &RadialField) -> RadialField {
    let grid = u.grid();
    let g: Vec<f64> = grid.nodes().iter().zip(u.values()).map(|(r, v)| r * v * v).collect();
    RadialField::new(grid.clone(), grid.cumulative(&g)).expect("finite")
}

/// `A⁰(r) = (e³ / m κ²) ∫_r^R u²(s) h_u(s) / s ds`, zero at `R`. The
/// integrand is continued by its limit 0 at the origin.
pub fn compute_a0(u: &RadialField, p: &PhysicalParams) -> RadialField {
    let h = compute_h(u);
    a0_from_h(u, &h, p)
}

fn a0_from_h(u: &RadialField, h: &RadialField, p: &PhysicalParams) -> RadialField {
    let grid = u.grid();
    let g: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(u.values().iter().zip(h.values()))
        .map(|(&r, (v, hv))| if r > 0.0 { v * v * hv / r } else { 0.0 })
        .collect();
    let scale = p.a0_prefactor();
    let tail = grid.tail(&g).into_iter().map(|t| scale * t).collect();
    RadialField::new(grid.clone(), tail).expect("finite")
}

/// `∫ u² h_u² / |x|² dx` without the `e⁴/4mκ²` prefactor.
pub fn cs_energy_raw(u: &RadialField) -> f64 {
    let h = compute_h(u);
    cs_raw_from_h(u, &h)
}

fn cs_raw_from_h(u: &RadialField, h: &RadialField) -> f64 {
    let grid = u.grid();
    let f: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(u.values().iter().zip(h.values()))
        .map(|(&r, (v, hv))| if r > 0.0 { v * v * hv * hv / (r * r) } else { 0.0 })
        .collect();
    planar(grid, &f)
}

/// Magnetic potential `(A¹, A²) = (e/κ) h_u(|x|) (x₂, -x₁) / |x|²` at a point
/// of the plane; `h_u` is interpolated linearly between nodes and held at
/// `h_u(R)` outside the grid.
pub fn gauge_vector(u: &RadialField, p: &PhysicalParams, x: [f64; 2]) -> Result<(f64, f64)> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2.is_nan() || r2 <= 0.0 {
        return Err(Error::GaugeAtOrigin);
    }
    let h = compute_h(u);
    let hr = interpolate(h.values(), u.grid().step(), r2.sqrt());
    let c = p.e / p.kappa * hr / r2;
    Ok((c * x[1], -c * x[0]))
}

fn interpolate(values: &[f64], step: f64, r: f64) -> f64 {
    let pos = r / step;
    let last = values.len() - 1;
    if pos >= last as f64 {
        return values[last];
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    values[i] * (1.0 - frac) + values[i + 1] * frac
}

/// `h_u`, `A⁰` and the raw Chern-Simons energy of one field.
#[derive(Debug, Clone)]
pub struct GaugeSnapshot {
    pub h: RadialField,
    pub a0: RadialField,
    pub cs_energy_raw: f64,
}

impl GaugeSnapshot {
    pub fn compute(u: &RadialField, p: &PhysicalParams) -> Self {
        let h = compute_h(u);
        let a0 = a0_from_h(u, &h, p);
        let cs_energy_raw = cs_raw_from_h(u, &h);
        Self { h, a0, cs_energy_raw }
    }

    /// Checks the structural invariants: `h(0) = 0`, `h` nondecreasing, `A⁰`
    /// nonincreasing and vanishing at `R`, energy finite and nonnegative.
    pub fn check_monotone(&self) -> bool {
        let h = self.h.values();
        let a0 = self.a0.values();
        let slack = 1e-14 * (1.0 + self.h.max_abs());
        let slack_a = 1e-14 * (1.0 + self.a0.max_abs());
        h[0] == 0.0
            && *a0.last().unwrap() == 0.0
            && h.windows(2).all(|w| w[1] >= w[0] - slack)
            && a0.windows(2).all(|w| w[1] <= w[0] + slack_a)
            && self.cs_energy_raw.is_finite()
            && self.cs_energy_raw >= 0.0
    }
}

/// Nonlocal terms evaluated with the cell rule.
///
/// `h_i = Σ_{j<i} V_j u_j² + ½ V_i u_i²`; the origin node contributes nothing
/// to `∫ u² h² / r²` (its integrand limit is 0). `tail_i` is the matching cell
/// approximation of `∫_{r_i}^R u² h / s ds`, so that
/// `∂/∂u_j [2π Σ V_i u_i² h_i² / r_i²] = 2π V_j (2 u_j h_j² / r_j² + 4 u_j tail_j)`.
#[derive(Debug, Clone)]
pub struct CellGauge {
    pub h: Vec<f64>,
    /// `h_i² / r_i²`, zero at the origin.
    pub h_over_r_sq: Vec<f64>,
    pub tail: Vec<f64>,
    /// `2π Σ V_i u_i² h_i² / r_i²`.
    pub cs_raw: f64,
}

impl CellGauge {
    pub fn new(cells: &CellForms, nodes: &[f64], u: &[f64]) -> Self {
        let n = u.len();
        let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
        let h = cells.cumulative_half(&sq);
        let vol = cells.volumes();
        let mut h_over_r_sq = vec![0.0; n];
        // per-node density V_i u_i² h_i / r_i²
        let mut density = vec![0.0; n];
        let mut cs = 0.0;
        for i in 1..n {
            let inv = 1.0 / (nodes[i] * nodes[i]);
            h_over_r_sq[i] = h[i] * h[i] * inv;
            density[i] = vol[i] * sq[i] * h[i] * inv;
            cs += density[i] * h[i];
        }
        let mut tail = vec![0.0; n];
        let mut acc = 0.0;
        for i in (0..n).rev() {
            tail[i] = acc + 0.5 * density[i];
            acc += density[i];
        }
        Self {
            h,
            h_over_r_sq,
            tail,
            cs_raw: 2.0 * std::f64::consts::PI * cs,
        }
    }

    pub fn of(u: &RadialField) -> Self {
        let grid = u.grid();
        Self::new(grid.cells(), grid.nodes(), u.values())
    }

    /// Cell-rule `A⁰ = (e³/mκ²) tail`.
    pub fn a0(&self, p: &PhysicalParams) -> Vec<f64> {
        let c = p.a0_prefactor();
        self.tail.iter().map(|t| c * t).collect()
    }
}
