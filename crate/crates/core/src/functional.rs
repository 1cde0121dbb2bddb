//! Reduced energy `J_e(u) = I_e(u, N_u)`, its truncation `J_{e,T}` by the
//! cutoff `K_T(u) = χ(‖u‖²/T²)`, first variations and the fibering map.
//!
//! Everything here is built on the cell forms of [`crate::cells`]:
//!
//! ```text
//! J = (1/4m) ‖∇u‖² + (ω/2) ‖u‖² + (e⁴/4mκ²) K_T cs(u) + ¼ c ∫ N_u u² + (q/16m²) ‖u‖₄⁴
//! ```
//!
//! with every integral a cell sum and `N_u` the finite-volume neutral field.
//! The gradient returned by [`gradient_field`] is the exact derivative of this
//! discrete energy divided by the cell volumes, which at every node equals
//! the pointwise left side of the first field equation.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::neutral::fd_values;
use crate::nonlocal::CellGauge;
use crate::params::PhysicalParams;
use crate::radial::{RadialField, RadialGrid};

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth cutoff: 1 on `[0, 1]`, 0 on `[2, ∞)`.
pub fn chi(s: f64) -> f64 {
    if s <= 1.0 {
        return 1.0;
    }
    if s >= 2.0 {
        return 0.0;
    }
    let a = bump(2.0 - s);
    let b = bump(s - 1.0);
    a / (a + b)
}

pub fn chi_prime(s: f64) -> f64 {
    if s <= 1.0 || s >= 2.0 {
        return 0.0;
    }
    let (x, y) = (2.0 - s, s - 1.0);
    let a = bump(x);
    let b = bump(y);
    let da = -a / (x * x);
    let db = b / (y * y);
    let sum = a + b;
    (da * b - a * db) / (sum * sum)
}

/// Truncation level `T` of the cutoff, in H¹-norm units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub t: f64,
}

impl CutoffSpec {
    pub fn new(t: f64) -> Result<Self> {
        if t.is_finite() && t > 0.0 {
            Ok(Self { t })
        } else {
            Err(Error::InvalidCutoff(t))
        }
    }

    /// `(χ(s), χ′(s))` at `s = ‖u‖² / T²`.
    pub fn factor(&self, h1_norm_sq: f64) -> (f64, f64) {
        let s = h1_norm_sq / (self.t * self.t);
        (chi(s), chi_prime(s))
    }
}

/// `K_T(u) = χ(‖u‖²_{H¹} / T²)`.
pub fn k_t(u: &RadialField, c: &CutoffSpec) -> f64 {
    c.factor(u.grid().cells().h1_norm_sq(u.values())).0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub mass: f64,
    pub cs: f64,
    pub neutral: f64,
    pub quartic: f64,
    pub total: f64,
}

/// All quantities of one field needed for its energy and gradient, computed
/// once (one neutral solve).
#[derive(Debug, Clone)]
pub struct Evaluation<'a> {
    grid: &'a RadialGrid,
    params: PhysicalParams,
    u: Vec<f64>,
    pub neutral: Vec<f64>,
    pub gauge: CellGauge,
    /// `2π stiffness(u, u)`.
    pub grad_sq: f64,
    /// `2π Σ V u²`.
    pub l2_sq: f64,
    /// `2π Σ V u⁴`.
    pub l4_4: f64,
    /// `2π Σ V N u²`.
    pub coupling: f64,
    /// `(K_T, K_T′)`; `(1, 0)` without truncation.
    pub cutoff: (f64, f64),
    truncation: Option<CutoffSpec>,
}

impl<'a> Evaluation<'a> {
    pub fn new(grid: &'a RadialGrid, u: &[f64], p: &PhysicalParams, c: Option<&CutoffSpec>) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: u.len(),
            });
        }
        let cells = grid.cells();
        let neutral = fd_values(cells, p, u)?;
        let gauge = CellGauge::new(cells, grid.nodes(), u);
        let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
        let grad_sq = 2.0 * PI * cells.stiffness(u, u);
        let l2_sq = 2.0 * PI * cells.sum(&sq);
        let l4_4 = 2.0 * PI * cells.mass(&sq, &sq);
        let coupling = 2.0 * PI * cells.mass(&neutral, &sq);
        let cutoff = match c {
            Some(c) => c.factor(grad_sq + l2_sq),
            None => (1.0, 0.0),
        };
        Ok(Self {
            grid,
            params: *p,
            u: u.to_vec(),
            neutral,
            gauge,
            grad_sq,
            l2_sq,
            l4_4,
            coupling,
            cutoff,
            truncation: c.copied(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    /// Discrete H¹ norm squared.
    pub fn h1_norm_sq(&self) -> f64 {
        self.grad_sq + self.l2_sq
    }

    pub fn energy(&self) -> EnergyBreakdown {
        let p = &self.params;
        let kinetic = self.grad_sq / (4.0 * p.m);
        let mass = 0.5 * p.omega * self.l2_sq;
        let cs = p.cs_prefactor() * self.cutoff.0 * self.gauge.cs_raw;
        let neutral = 0.25 * p.neutral_factor() * self.coupling;
        let quartic = p.q / (16.0 * p.m * p.m) * self.l4_4;
        EnergyBreakdown {
            kinetic,
            mass,
            cs,
            neutral,
            quartic,
            total: kinetic + mass + cs + neutral + quartic,
        }
    }

    /// Coefficient of `(-Δ_h u + u)` contributed by the derivative of `K_T`.
    fn cutoff_slope(&self) -> f64 {
        match self.truncation {
            Some(c) => self.cutoff.1 * 2.0 / (c.t * c.t) * self.params.cs_prefactor() * self.gauge.cs_raw,
            None => 0.0,
        }
    }

    /// Pointwise gradient: `∂J/∂u_j / (2π V_j)` at every node.
    pub fn gradient(&self) -> Vec<f64> {
        let p = &self.params;
        let lap = self.grid.cells().neg_laplacian(&self.u);
        let cs = p.cs_prefactor() * self.cutoff.0;
        let slope = self.cutoff_slope();
        let c = p.neutral_factor();
        let quartic = p.q / (4.0 * p.m * p.m);
        let g = &self.gauge;
        (0..self.u.len())
            .map(|j| {
                let u = self.u[j];
                lap[j] / (2.0 * p.m)
                    + p.omega * u
                    + cs * (2.0 * u * g.h_over_r_sq[j] + 4.0 * u * g.tail[j])
                    + c * self.neutral[j] * u
                    + quartic * u * u * u
                    + slope * (lap[j] + u)
            })
            .collect()
    }

    /// Weak-form pairing `J′(u)[φ]`, with the nonlocal variation written
    /// through the cumulative integral of `u φ`.
    pub fn pairing(&self, phi: &[f64]) -> f64 {
        let p = &self.params;
        let cells = self.grid.cells();
        let nodes = self.grid.nodes();
        let vol = cells.volumes();
        let u = &self.u;
        let uphi: Vec<f64> = u.iter().zip(phi).map(|(a, b)| a * b).collect();
        let dh = cells.cumulative_half(&uphi);
        let g = &self.gauge;
        let mut cs_var = 0.0;
        for i in 1..u.len() {
            let w = vol[i] / (nodes[i] * nodes[i]);
            cs_var += w * (2.0 * uphi[i] * g.h[i] * g.h[i] + 4.0 * u[i] * u[i] * g.h[i] * dh[i]);
        }
        let u3: Vec<f64> = u.iter().map(|v| v * v * v).collect();
        let nu: Vec<f64> = self.neutral.iter().zip(u).map(|(a, b)| a * b).collect();
        let tau = 2.0 * PI;
        let mut total = tau * cells.stiffness(u, phi) / (2.0 * p.m)
            + p.omega * tau * cells.sum(&uphi)
            + p.cs_prefactor() * self.cutoff.0 * tau * cs_var
            + p.neutral_factor() * tau * cells.mass(&nu, phi)
            + p.q / (4.0 * p.m * p.m) * tau * cells.mass(&u3, phi);
        if self.truncation.is_some() {
            total += self.cutoff_slope() * cells.h1_inner(u, phi);
        }
        total
    }
}

pub fn energy(u: &RadialField, p: &PhysicalParams, c: Option<&CutoffSpec>) -> Result<EnergyBreakdown> {
    Ok(Evaluation::new(u.grid(), u.values(), p, c)?.energy())
}

pub fn first_variation(u: &RadialField, phi: &RadialField, p: &PhysicalParams, c: Option<&CutoffSpec>) -> Result<f64> {
    u.ensure_same_grid(phi)?;
    Ok(Evaluation::new(u.grid(), u.values(), p, c)?.pairing(phi.values()))
}

/// Representative `g` with `first_variation(u, φ) = 2π Σ V_i g_i φ_i`.
pub fn gradient_field(u: &RadialField, p: &PhysicalParams, c: Option<&CutoffSpec>) -> Result<RadialField> {
    let g = Evaluation::new(u.grid(), u.values(), p, c)?.gradient();
    u.with_values(g)
}

/// The pieces of `J_{e,T}(tu) = t² a₂ + t⁴ a₄ + t⁶ K_T(tu) a₆` that do not
/// depend on `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberCoefficients {
    /// `(1/4m) ‖∇u‖² + (ω/2) ‖u‖²`.
    pub a2: f64,
    /// `(q/16m²) ‖u‖₄⁴ − ¼ c ∫ |N_u| u²`.
    pub a4: f64,
    /// `(e⁴/4mκ²) cs(u)`.
    pub a6: f64,
    pub h1_norm_sq: f64,
}

impl FiberCoefficients {
    pub fn of(eval: &Evaluation<'_>) -> Self {
        let e = eval.energy();
        Self {
            a2: e.kinetic + e.mass,
            a4: e.quartic + e.neutral,
            a6: eval.params.cs_prefactor() * eval.gauge.cs_raw,
            h1_norm_sq: eval.h1_norm_sq(),
        }
    }

    pub fn sample(&self, t: f64, c: Option<&CutoffSpec>) -> FiberSample {
        let t2 = t * t;
        let k = match c {
            Some(c) => c.factor(t2 * self.h1_norm_sq).0,
            None => 1.0,
        };
        let t2_term = t2 * self.a2;
        let t4_term = t2 * t2 * self.a4;
        let t6_term = t2 * t2 * t2 * k * self.a6;
        FiberSample {
            t,
            value: t2_term + t4_term + t6_term,
            t2_term,
            t4_term,
            t6_term,
        }
    }
}

impl FiberCoefficients {
    /// `d/dt J_{e,T}(t u)`.
    pub fn slope(&self, t: f64, c: Option<&CutoffSpec>) -> f64 {
        let t2 = t * t;
        let (k, dk) = match c {
            Some(c) => c.factor(t2 * self.h1_norm_sq),
            None => (1.0, 0.0),
        };
        let dk_dt = match c {
            Some(c) => dk * 2.0 * t * self.h1_norm_sq / (c.t * c.t),
            None => 0.0,
        };
        2.0 * t * self.a2 + 4.0 * t * t2 * self.a4 + (6.0 * t * t2 * t2 * k + t2 * t2 * t2 * dk_dt) * self.a6
    }

    /// First local maximum of `t ↦ J_{e,T}(t u)` on `t > 0`, searched from
    /// `t = 1`; `None` when the fibre increases without bound.
    pub fn ray_max(&self, c: Option<&CutoffSpec>) -> Option<f64> {
        let slope = |t: f64| self.slope(t, c);
        let (mut lo, mut hi) = (1.0, 1.0);
        if slope(1.0) > 0.0 {
            while slope(hi) > 0.0 {
                lo = hi;
                hi *= 1.25;
                if hi > 1e12 {
                    return None;
                }
            }
        } else {
            while slope(lo) <= 0.0 {
                hi = lo;
                lo *= 0.8;
                if lo < 1e-12 {
                    return None;
                }
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSample {
    pub t: f64,
    pub value: f64,
    pub t2_term: f64,
    pub t4_term: f64,
    pub t6_term: f64,
}

/// `t ↦ J_{e,T}(t u)` at the requested samples, from one neutral solve.
pub fn fiber_map(
    u: &RadialField,
    p: &PhysicalParams,
    c: Option<&CutoffSpec>,
    t_samples: &[f64],
) -> Result<Vec<FiberSample>> {
    let eval = Evaluation::new(u.grid(), u.values(), p, c)?;
    let coef = FiberCoefficients::of(&eval);
    Ok(t_samples.iter().map(|&t| coef.sample(t, c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlocal::cs_energy_raw;
    use crate::radial::{grad_norm_sq, l2_norm_sq, l4_norm_4};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn field(g: &Arc<RadialGrid>, a: f64, c: f64, w: f64) -> RadialField {
        RadialField::from_fn(g.clone(), move |r| {
            a * ((-((r - c) / w).powi(2)).exp() + (-((r + c) / w).powi(2)).exp())
        })
        .unwrap()
    }

    #[test]
    fn chi_examples() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi_prime(0.5), 0.0);
        assert_eq!(chi(3.0), 0.0);
        assert!((chi(1.5) - 0.5).abs() < 1e-15);
        assert!((chi_prime(1.5) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn chi_prime_matches_difference_quotient() {
        for s in [1.05, 1.2, 1.4, 1.5, 1.7, 1.93] {
            let fd = (chi(s + 1e-6) - chi(s - 1e-6)) / 2e-6;
            assert!((fd - chi_prime(s)).abs() < 1e-7, "s={s}");
        }
    }

    proptest! {
        #[test]
        fn chi_bounded_and_monotone(s in 0.0f64..3.0, d in 0.0f64..0.5) {
            let v = chi(s);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(chi(s + d) <= v);
            prop_assert!(chi_prime(s).abs() <= 2.0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn cutoff_examples() {
        let g = RadialGrid::shared(10.0, 512).unwrap();
        let u = field(&g, 1.0, 0.0, 1.0);
        let norm = g.cells().h1_norm_sq(u.values());
        let at = |s: f64| k_t(&u, &CutoffSpec::new((norm / s).sqrt()).unwrap());
        assert_eq!(at(0.5), 1.0);
        assert_eq!(at(3.0), 0.0);
        assert!((at(1.5) - 0.5).abs() < 1e-12);
        assert!(CutoffSpec::new(0.0).is_err());
    }

    #[test]
    fn zero_field() {
        let g = RadialGrid::shared(10.0, 256).unwrap();
        let z = RadialField::zeros(g.clone());
        let p = PhysicalParams::unit(0.5).unwrap();
        let e = energy(&z, &p, None).unwrap();
        assert_eq!(e.total, 0.0);
        assert!(gradient_field(&z, &p, None).unwrap().values().iter().all(|v| *v == 0.0));
        let phi = field(&g, 1.0, 1.0, 1.0);
        assert_eq!(first_variation(&z, &phi, &p, None).unwrap(), 0.0);
        assert_eq!(first_variation(&phi, &z, &p, None).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_breakdown() {
        // cell-rule components are second order; the Chern-Simons one carries
        // an error near 0.5 h², so 1e-5 needs n of several thousand at R = 20
        let g = RadialGrid::shared(20.0, 8192).unwrap();
        let u = RadialField::from_fn(g.clone(), |r| (-r * r / 2.0).exp()).unwrap();
        let p = PhysicalParams::unit(0.5).unwrap();
        let e = energy(&u, &p, None).unwrap();
        let neutral = 0.25 * 1.5 * -1.087_278_473_599_049;
        let cs = 0.5_f64.powi(4) / 4.0 * PI / 4.0 * (4.0_f64 / 3.0).ln();
        for (got, want) in [
            (e.kinetic, PI / 4.0),
            (e.mass, PI / 2.0),
            (e.quartic, PI / 32.0),
            (e.cs, cs),
            (e.neutral, neutral),
        ] {
            assert!(((got - want) / want).abs() < 1e-5, "{got} vs {want}");
        }
        let sum = e.kinetic + e.mass + e.cs + e.neutral + e.quartic;
        assert!((e.total - sum).abs() <= 1e-12 * sum.abs());
    }

    #[test]
    fn fourth_order_and_cell_energies_agree() {
        let g = RadialGrid::shared(20.0, 2048).unwrap();
        let u = field(&g, 0.8, 1.5, 1.0);
        let p = PhysicalParams::unit(0.5).unwrap();
        let e = energy(&u, &p, None).unwrap();
        let h2 = g.step() * g.step();
        assert!((e.kinetic - grad_norm_sq(&u) / 4.0).abs() < h2 * e.kinetic);
        assert!((e.mass - l2_norm_sq(&u) / 2.0).abs() < h2 * e.mass);
        assert!((e.quartic - l4_norm_4(&u) / 16.0).abs() < h2 * e.quartic);
        assert!((e.cs - p.cs_prefactor() * cs_energy_raw(&u)).abs() < h2 * e.cs);
    }

    #[test]
    fn truncation_is_inactive_on_plateau() {
        let g = RadialGrid::shared(12.0, 600).unwrap();
        let u = field(&g, 0.7, 0.5, 1.2);
        let phi = field(&g, -0.3, 2.0, 0.8);
        let p = PhysicalParams::unit(0.6).unwrap();
        let big = CutoffSpec::new(10.0 * k_norm(&u)).unwrap();
        let a = energy(&u, &p, None).unwrap().total;
        let b = energy(&u, &p, Some(&big)).unwrap().total;
        assert!((a - b).abs() <= 1e-12 * a.abs());
        let fa = first_variation(&u, &phi, &p, None).unwrap();
        let fb = first_variation(&u, &phi, &p, Some(&big)).unwrap();
        assert!((fa - fb).abs() <= 1e-12 * fa.abs());
    }

    fn k_norm(u: &RadialField) -> f64 {
        u.grid().cells().h1_norm_sq(u.values()).sqrt()
    }

    #[test]
    fn first_variation_matches_difference_quotient() {
        let g = RadialGrid::shared(12.0, 400).unwrap();
        let p = PhysicalParams::new(1.0, 0.8, 0.9, 1.2, 1.1).unwrap();
        let u = field(&g, 1.1, 0.7, 1.0);
        let phi = field(&g, 0.4, 2.5, 0.7);
        let norm = k_norm(&u);
        // cutoff placed inside the transition so the K_T′ term is active
        let mid = CutoffSpec::new(norm / 1.3_f64.sqrt()).unwrap();
        for c in [None, Some(&mid)] {
            let eps = 1e-5;
            let plus = RadialField::from_fn(g.clone(), |_| 0.0)
                .unwrap()
                .with_values(u.values().iter().zip(phi.values()).map(|(a, b)| a + eps * b).collect())
                .unwrap();
            let minus = u
                .with_values(u.values().iter().zip(phi.values()).map(|(a, b)| a - eps * b).collect())
                .unwrap();
            let fd = (energy(&plus, &p, c).unwrap().total - energy(&minus, &p, c).unwrap().total) / (2.0 * eps);
            let an = first_variation(&u, &phi, &p, c).unwrap();
            assert!(((fd - an) / an).abs() < 1e-7, "{fd} vs {an}");
        }
    }

    #[test]
    fn gradient_pairs_with_first_variation() {
        let g = RadialGrid::shared(12.0, 300).unwrap();
        let p = PhysicalParams::unit(1.3).unwrap();
        let u = field(&g, 0.9, 1.0, 1.5);
        let mid = CutoffSpec::new(k_norm(&u) / 1.6_f64.sqrt()).unwrap();
        for c in [None, Some(&mid)] {
            let grad = gradient_field(&u, &p, c).unwrap();
            for k in 0..10 {
                let phi = field(&g, 1.0 - 0.2 * k as f64, 0.4 * k as f64, 0.5 + 0.1 * k as f64);
                let a = first_variation(&u, &phi, &p, c).unwrap();
                let prod: Vec<f64> = grad.values().iter().zip(phi.values()).map(|(x, y)| x * y).collect();
                let b = 2.0 * PI * g.cells().sum(&prod);
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-3), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn quarter_variation_identity() {
        let g = RadialGrid::shared(12.0, 500).unwrap();
        let p = PhysicalParams::new(1.3, 0.7, 0.8, 0.9, 1.4).unwrap();
        let u = field(&g, 1.2, 0.8, 1.1);
        let norm_sq = g.cells().h1_norm_sq(u.values());
        for s in [0.5, 1.2, 1.5, 1.8] {
            let c = CutoffSpec::new((norm_sq / s).sqrt()).unwrap();
            let eval = Evaluation::new(&g, u.values(), &p, Some(&c)).unwrap();
            let lhs = eval.energy().total - 0.25 * eval.pairing(u.values());
            let (k, dk) = c.factor(norm_sq);
            let pre = p.e.powi(4) / (8.0 * p.m * p.kappa * p.kappa);
            let cs = eval.gauge.cs_raw;
            let rhs = eval.grad_sq / (8.0 * p.m) + p.omega / 4.0 * eval.l2_sq
                - pre * k * cs
                - pre / (c.t * c.t) * dk * norm_sq * cs;
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs(), "s={s}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn fiber_map_matches_direct_energy() {
        let g = RadialGrid::shared(15.0, 700).unwrap();
        let p = PhysicalParams::unit(0.8).unwrap();
        let u = field(&g, 0.6, 1.0, 1.0);
        let c = CutoffSpec::new(2.0 * k_norm(&u)).unwrap();
        let ts = [0.0, 0.5, 1.0, 2.0, 4.0];
        let fib = fiber_map(&u, &p, Some(&c), &ts).unwrap();
        assert_eq!(fib[0].value, 0.0);
        for f in &fib[1..] {
            let direct = energy(&u.scaled(f.t).unwrap(), &p, Some(&c)).unwrap().total;
            assert!((f.value - direct).abs() <= 1e-8 * direct.abs(), "t={}", f.t);
        }
        // ‖4u‖² = 16 ‖u‖² ≥ 2T² = 8 ‖u‖²
        assert_eq!(fib[4].t6_term, 0.0);
    }

    #[test]
    fn fiber_slope_and_ray_max() {
        let g = RadialGrid::shared(15.0, 500).unwrap();
        let p = PhysicalParams::unit(0.3).unwrap();
        let u = field(&g, 2.0, 0.0, 0.6);
        let eval = Evaluation::new(&g, u.values(), &p, None).unwrap();
        let coef = FiberCoefficients::of(&eval);
        assert!(coef.a4 < 0.0);
        // strong coupling: the sextic term removes the maximum
        let strong = FiberCoefficients {
            a6: 1e3 * coef.a6,
            ..coef
        };
        assert!(strong.ray_max(None).is_none());
        let c = CutoffSpec::new(3.0 * eval.h1_norm_sq().sqrt()).unwrap();
        for cut in [None, Some(&c)] {
            for t in [0.3, 1.0, 1.7, 2.4] {
                let fd = (coef.sample(t + 1e-6, cut).value - coef.sample(t - 1e-6, cut).value) / 2e-6;
                assert!((fd - coef.slope(t, cut)).abs() < 1e-6 * (1.0 + fd.abs()));
            }
            let t = coef.ray_max(cut).unwrap();
            assert!(coef.slope(t, cut).abs() < 1e-9 * coef.a2);
            assert!(coef.sample(t, cut).value > coef.sample(0.99 * t, cut).value);
            assert!(coef.sample(t, cut).value > coef.sample(1.01 * t, cut).value);
        }
    }

    #[test]
    fn fibering_is_polynomial_on_plateau() {
        // on the plateau J(tu) is exactly a₂t² + a₄t⁴ + a₆t⁶
        let g = RadialGrid::shared(15.0, 500).unwrap();
        let p = PhysicalParams::unit(0.9).unwrap();
        let u = field(&g, 0.9, 0.5, 1.3);
        let c = CutoffSpec::new(5.0 * k_norm(&u)).unwrap();
        let ts: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
        let vals: Vec<f64> = ts
            .iter()
            .map(|t| energy(&u.scaled(*t).unwrap(), &p, Some(&c)).unwrap().total)
            .collect();
        let coef = fiber_map(&u, &p, Some(&c), &[1.0]).unwrap()[0];
        let (a2, a4, a6) = (coef.t2_term, coef.t4_term, coef.t6_term);
        for (t, v) in ts.iter().zip(&vals) {
            let model = a2 * t.powi(2) + a4 * t.powi(4) + a6 * t.powi(6);
            assert!((model - v).abs() <= 1e-10 * v.abs().max(1.0));
        }
    }
}
