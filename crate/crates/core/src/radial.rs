//! Radial grid, sampled radial fields, quadrature and derivative stencils.
//!
//! Two discretizations live side by side on the same uniform nodes:
//!
//! * a fourth-order rule (cubic-exact panel quadrature and five-point
//!   derivatives) used for the norms and nonlocal integrals reported as
//!   approximations of the continuum quantities, and
//! * the finite-volume forms in [`crate::cells`], on which the discrete
//!   energy is built so that its gradient is exactly the pointwise residual.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::cells::CellForms;
use crate::error::{Error, Result};

/// Uniform grid `0 = r_0 < r_1 < ... < r_{n-1} = R` on the truncated radial
/// domain, with quadrature weights for `∫_0^R g(r) dr`.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    radius: f64,
    step: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cells: CellForms,
}

impl RadialGrid {
    pub const MIN_NODES: usize = 16;

    pub fn new(radius: f64, n: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidRadius(radius));
        }
        if n < Self::MIN_NODES {
            return Err(Error::GridTooCoarse {
                n,
                min: Self::MIN_NODES,
            });
        }
        let step = radius / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
        nodes[n - 1] = radius;

        let mut weights = vec![0.0; n];
        for k in 0..n - 1 {
            for (idx, c) in panel_stencil(k, n) {
                weights[idx] += c * step;
            }
        }
        let cells = CellForms::new(&nodes, step);
        Ok(Self {
            radius,
            step,
            nodes,
            weights,
            cells,
        })
    }

    /// Shared handle, the form fields hold on to.
    pub fn shared(radius: f64, n: usize) -> Result<Arc<Self>> {
        Self::new(radius, n).map(Arc::new)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cells(&self) -> &CellForms {
        &self.cells
    }

    pub fn same_as(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other) || (self.radius == other.radius && self.len() == other.len())
    }

    /// `∫_0^R g(r) dr`.
    pub fn integrate(&self, g: &[f64]) -> f64 {
        debug_assert_eq!(g.len(), self.len());
        self.weights.iter().zip(g).map(|(w, v)| w * v).sum()
    }

    /// `∫_0^{r_i} g(s) ds` for every node, built from the same panels as
    /// [`RadialGrid::integrate`], so the last entry equals the full integral
    /// up to summation order.
    pub fn cumulative(&self, g: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for k in 0..n - 1 {
            out[k + 1] = out[k] + self.panel(k, g);
        }
        out
    }

    /// `∫_{r_i}^R g(s) ds`, accumulated from the outer end so that the last
    /// entry is exactly zero.
    pub fn tail(&self, g: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for k in (0..n - 1).rev() {
            out[k] = out[k + 1] + self.panel(k, g);
        }
        out
    }

    /// Integral of `g` over `[r_k, r_{k+1}]` from the cubic through four
    /// neighbouring nodes.
    pub fn panel(&self, k: usize, g: &[f64]) -> f64 {
        panel_stencil(k, self.len()).map(|(idx, c)| c * g[idx]).sum::<f64>() * self.step
    }

    /// Fourth-order first derivative of nodal samples.
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        derivative(f, self.step)
    }
}

/// Coefficients (times `h`) of the cubic-interpolation rule on panel `k`.
fn panel_stencil(k: usize, n: usize) -> impl Iterator<Item = (usize, f64)> {
    const C: f64 = 1.0 / 24.0;
    let (start, coeffs) = if k == 0 {
        (0, [9.0, 19.0, -5.0, 1.0])
    } else if k == n - 2 {
        (n - 4, [1.0, -5.0, 19.0, 9.0])
    } else {
        (k - 1, [-1.0, 13.0, 13.0, -1.0])
    };
    coeffs.into_iter().enumerate().map(move |(j, c)| (start + j, c * C))
}

/// Five-point central differences in the interior, fourth-order one-sided
/// stencils on the two outermost nodes at each end. Exact on quartics.
pub fn derivative(f: &[f64], step: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5, "derivative stencil needs at least 5 nodes");
    let s = 1.0 / (12.0 * step);
    let mut d = vec![0.0; n];
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * s;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * s;
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * s;
    }
    let m = n - 1;
    d[m - 1] = (3.0 * f[m] + 10.0 * f[m - 1] - 18.0 * f[m - 2] + 6.0 * f[m - 3] - f[m - 4]) * s;
    d[m] = (25.0 * f[m] - 48.0 * f[m - 1] + 36.0 * f[m - 2] - 16.0 * f[m - 3] + 3.0 * f[m - 4]) * s;
    d
}

/// A radial function sampled at every node of a grid.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| t * v).collect())
    }

    /// Replaces the samples, keeping the grid.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn ensure_same_grid(&self, other: &RadialField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Serialized as the bare array of samples; the grid is written separately.
impl serde::Serialize for RadialField {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.values.serialize(serializer)
    }
}

/// `∫_{R^2} f dx = 2π ∫_0^R f(r) r dr`. The `r = 0` node carries zero weight.
pub fn planar_integral(f: &RadialField) -> f64 {
    planar(f.grid(), f.values())
}

pub(crate) fn planar(grid: &RadialGrid, f: &[f64]) -> f64 {
    let g: Vec<f64> = grid.nodes().iter().zip(f).map(|(r, v)| r * v).collect();
    2.0 * PI * grid.integrate(&g)
}

pub fn l2_norm_sq(u: &RadialField) -> f64 {
    let sq: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    planar(u.grid(), &sq)
}

pub fn l4_norm_4(u: &RadialField) -> f64 {
    let q: Vec<f64> = u.values().iter().map(|v| v.powi(4)).collect();
    planar(u.grid(), &q)
}

pub fn grad_norm_sq(u: &RadialField) -> f64 {
    let du = u.grid().derivative(u.values());
    let sq: Vec<f64> = du.iter().map(|v| v * v).collect();
    planar(u.grid(), &sq)
}

pub fn h1_norm_sq(u: &RadialField) -> f64 {
    grad_norm_sq(u) + l2_norm_sq(u)
}

pub fn radial_derivative(u: &RadialField) -> RadialField {
    let d = u.grid().derivative(u.values());
    RadialField::new(u.grid().clone(), d).expect("derivative of a finite field is finite")
}
