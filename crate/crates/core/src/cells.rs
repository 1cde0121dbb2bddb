//! Finite-volume forms on the radial grid.
//!
//! Node `i` owns the annulus `[r_i - h/2, r_i + h/2]` clipped to `[0, R]`;
//! `volumes[i]` is its area divided by `2π`. Fluxes cross the faces
//! `r_{i+1/2}`. With these weights the stiffness form differentiates to the
//! compact radial Laplacian `u'' + u'/r` at interior nodes and to the
//! regularized `4 (u_1 - u_0) / h^2` at the origin.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct CellForms {
    step: f64,
    volumes: Vec<f64>,
    faces: Vec<f64>,
}

impl CellForms {
    pub(crate) fn new(nodes: &[f64], step: f64) -> Self {
        let n = nodes.len();
        let mut volumes: Vec<f64> = nodes.iter().map(|r| r * step).collect();
        volumes[0] = step * step / 8.0;
        volumes[n - 1] = nodes[n - 1] * step / 2.0 - step * step / 8.0;
        let faces = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Self { step, volumes, faces }
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Face radii `r_{i+1/2}`, one fewer than nodes.
    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    /// `Σ V_i f_i`, the cell approximation of `∫ f dx / 2π`.
    pub fn sum(&self, f: &[f64]) -> f64 {
        self.volumes.iter().zip(f).map(|(v, x)| v * x).sum()
    }

    /// `Σ V_i a_i b_i`.
    pub fn mass(&self, a: &[f64], b: &[f64]) -> f64 {
        self.volumes
            .iter()
            .zip(a.iter().zip(b))
            .map(|(v, (x, y))| v * x * y)
            .sum()
    }

    /// `Σ r_{i+1/2} (a_{i+1} - a_i)(b_{i+1} - b_i) / h`.
    pub fn stiffness(&self, a: &[f64], b: &[f64]) -> f64 {
        self.faces
            .iter()
            .enumerate()
            .map(|(k, f)| f * (a[k + 1] - a[k]) * (b[k + 1] - b[k]))
            .sum::<f64>()
            / self.step
    }

    /// Row-wise action of the stiffness form, `(S a)_i = ∂/∂a_i ½ stiffness(a, a)`.
    pub fn stiffness_apply(&self, a: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for (k, f) in self.faces.iter().enumerate() {
            let flux = f * (a[k + 1] - a[k]) / self.step;
            out[k] -= flux;
            out[k + 1] += flux;
        }
        out
    }

    /// `(S a)_i / V_i`: the compact `-(a'' + a'/r)` at interior nodes and the
    /// regularized origin row. The last entry is the natural (flux) row.
    pub fn neg_laplacian(&self, a: &[f64]) -> Vec<f64> {
        let mut out = self.stiffness_apply(a);
        for (o, v) in out.iter_mut().zip(&self.volumes) {
            *o /= v;
        }
        out
    }

    /// `2π (stiffness(a, a) + Σ V a²)`, the discrete H¹ norm squared.
    pub fn h1_norm_sq(&self, a: &[f64]) -> f64 {
        2.0 * PI * (self.stiffness(a, a) + self.mass(a, a))
    }

    /// `2π (stiffness(a, b) + Σ V a b)`.
    pub fn h1_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        2.0 * PI * (self.stiffness(a, b) + self.mass(a, b))
    }

    /// `∫_0^{r_i} s f(s) ds` by cells: whole cells below node `i` plus half of
    /// the cell of node `i`.
    pub fn cumulative_half(&self, f: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(f.len());
        let mut acc = 0.0;
        for (v, x) in self.volumes.iter().zip(f) {
            let c = v * x;
            out.push(acc + 0.5 * c);
            acc += c;
        }
        out
    }

    /// Tridiagonal matrix of `stiffness + shift · mass` on the Dirichlet
    /// unknowns `0..n-1` (the node at `R` is held at zero). Returns
    /// `(sub, diag, sup)` with `sub[0]` and `sup[last]` unused.
    pub fn dirichlet_system(&self, shift: f64, scale: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let m = self.len() - 1;
        let h = self.step;
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        for i in 0..m {
            let right = self.faces[i] / h;
            let left = if i > 0 { self.faces[i - 1] / h } else { 0.0 };
            diag[i] = (left + right + shift * self.volumes[i]) * scale[i];
            if i > 0 {
                sub[i] = -left * scale[i];
            }
            if i + 1 < m {
                sup[i] = -right * scale[i];
            }
        }
        (sub, diag, sup)
    }
}

#[cfg(test)]
mod tests {
    use crate::radial::RadialGrid;

    #[test]
    fn volumes_tile_the_disk() {
        let g = RadialGrid::new(7.0, 100).unwrap();
        let total: f64 = g.cells().volumes().iter().sum();
        assert!((total - 49.0 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn laplacian_matches_compact_stencil() {
        let g = RadialGrid::new(2.0, 41).unwrap();
        let h = g.step();
        let u: Vec<f64> = g.nodes().iter().map(|r| (r * 1.3).cos() + r * r * r).collect();
        let lap = g.cells().neg_laplacian(&u);
        assert!((lap[0] + 4.0 * (u[1] - u[0]) / (h * h)).abs() < 1e-9);
        for i in 1..40 {
            let r = g.nodes()[i];
            let compact = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h) + (u[i + 1] - u[i - 1]) / (2.0 * h * r);
            assert!((lap[i] + compact).abs() < 1e-8 * (1.0 + compact.abs()), "i={i}");
        }
    }

    #[test]
    fn laplacian_of_quadratic_is_exact() {
        // Δ r² = 4 in the plane; the compact stencil is exact on quadratics
        let g = RadialGrid::new(3.0, 31).unwrap();
        let u: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
        let lap = g.cells().neg_laplacian(&u);
        for v in &lap[..30] {
            assert!((v + 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stiffness_apply_is_gradient_of_form() {
        let g = RadialGrid::new(1.0, 16).unwrap();
        let a: Vec<f64> = (0..16).map(|i| ((i * 7 % 5) as f64).sin()).collect();
        let b: Vec<f64> = (0..16).map(|i| (i as f64 * 0.3).cos()).collect();
        let sa = g.cells().stiffness_apply(&a);
        let pairing: f64 = sa.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((pairing - g.cells().stiffness(&a, &b)).abs() < 1e-12);
    }
}
