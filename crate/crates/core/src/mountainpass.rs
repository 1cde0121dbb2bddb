//! Mountain-pass machinery for the truncated energy: a negative-energy
//! direction, the endpoint of the initial path, discrete min-max path
//! deformation, and refinement of the path maximum to a critical point.
//!
//! Descent directions are preconditioned by the discrete operator
//! `P = -(1/2m)Δ_h + ω` with `u(R) = 0`, so step sizes do not shrink with the
//! grid spacing. Refinement moves along the set of fibre maxima: each iterate
//! is rescaled to the maximum of `t ↦ J(t v)`, where the mountain-pass point is
//! a local minimum of the energy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functional::{CutoffSpec, EnergyBreakdown, Evaluation, FiberCoefficients};
use crate::nonlocal::CellGauge;
use crate::params::PhysicalParams;
use crate::radial::{RadialField, RadialGrid};
use crate::tridiag;
use crate::verify::residual_system;

/// `‖u‖₄⁴ / ∫|N_u| u²` must stay below `4m² c / q`; candidates are accepted
/// only below this fraction of the bound.
const DIRECTION_MARGIN: f64 = 0.99;

/// Smallest Gaussian width, in grid steps, trusted in the search.
const MIN_WIDTH_STEPS: f64 = 4.0;

/// Largest tail value `e^{-R²/2σ²}` tolerated at the outer boundary.
const MAX_BOUNDARY_TAIL: f64 = 1e-8;

/// Consecutive sweeps without a decrease of the path maximum before the
/// deformation hands over to refinement.
const STALL_SWEEPS: usize = 100;

/// Residual at which descent hands over to Newton.
const NEWTON_SWITCH: f64 = 1e-4;

/// Descent steps without a new best residual before handing over to Newton.
const DESCENT_PATIENCE: usize = 200;

/// Newton iterations in the final refinement.
const NEWTON_ITERS: usize = 30;

/// Member `λ e^{-r²/2σ²}` of the Gaussian trial family satisfying the
/// negative-quartic condition.
#[derive(Debug, Clone)]
pub struct NegativeDirection {
    pub u: RadialField,
    pub lambda: f64,
    pub sigma: f64,
    /// `‖u‖₄⁴ / ∫|N_u| u²`.
    pub ratio: f64,
    /// `4m² c / q`.
    pub threshold: f64,
}

/// `(‖u‖₄⁴ / ∫|N_u| u², 4m²c/q)` on the cell forms.
pub fn quartic_ratio(u: &RadialField, p: &PhysicalParams) -> Result<(f64, f64)> {
    let eval = Evaluation::new(u.grid(), u.values(), p, None)?;
    let threshold = 4.0 * p.m * p.m * p.neutral_factor() / p.q;
    Ok((eval.l4_4 / -eval.coupling, threshold))
}

/// Scans `λ, σ ∈ [2⁻⁴, 2⁶]` on a half-octave grid (λ outer, σ inner, both
/// ascending) and returns the first member whose ratio is below the threshold
/// by at least 1%. Widths not resolved by the grid or not decayed at `R` are
/// skipped. The last node is set to zero (Dirichlet condition).
pub fn find_negative_direction(grid: &Arc<RadialGrid>, p: &PhysicalParams) -> Result<NegativeDirection> {
    let steps: Vec<f64> = (0..=20).map(|k| 2f64.powf(-4.0 + 0.5 * k as f64)).collect();
    let radius = grid.radius();
    for &lambda in &steps {
        for &sigma in &steps {
            if sigma < MIN_WIDTH_STEPS * grid.step() {
                continue;
            }
            if (-radius * radius / (2.0 * sigma * sigma)).exp() > MAX_BOUNDARY_TAIL {
                continue;
            }
            let mut values: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|r| lambda * (-r * r / (2.0 * sigma * sigma)).exp())
                .collect();
            *values.last_mut().unwrap() = 0.0;
            let u = RadialField::new(grid.clone(), values)?;
            let (ratio, threshold) = quartic_ratio(&u, p)?;
            if ratio < DIRECTION_MARGIN * threshold {
                return Ok(NegativeDirection {
                    u,
                    lambda,
                    sigma,
                    ratio,
                    threshold,
                });
            }
        }
    }
    Err(Error::NoNegativeDirection)
}

/// `t ū` with `t` the first power of two at which the energy is negative.
#[derive(Debug, Clone)]
pub struct Endpoint {
    pub u: RadialField,
    pub t: f64,
    pub energy: f64,
}

const ENDPOINT_CAP: f64 = 1.152_921_504_606_847e18; // 2^60

fn first_negative(coef: &FiberCoefficients, c: Option<&CutoffSpec>) -> Result<f64> {
    let mut t = 1.0;
    while coef.sample(t, c).value >= 0.0 {
        t *= 2.0;
        if t > ENDPOINT_CAP {
            return Err(Error::EndpointDiverged);
        }
    }
    Ok(t)
}

/// Doubles `t` from 1 until `J_{e,T}(t u_dir) < 0`.
pub fn find_endpoint(u_dir: &RadialField, p: &PhysicalParams, c: &CutoffSpec) -> Result<Endpoint> {
    let eval = Evaluation::new(u_dir.grid(), u_dir.values(), p, Some(c))?;
    let coef = FiberCoefficients::of(&eval);
    let t = first_negative(&coef, Some(c))?;
    Ok(Endpoint {
        u: u_dir.scaled(t)?,
        t,
        energy: coef.sample(t, Some(c)).value,
    })
}

/// Cutoff level `T = 10 ‖ū₀‖`, where `ū₀` is the endpoint of the fibre of
/// `u_dir` with the Chern-Simons term removed (first doubling `t` with
/// `t² a₂ + t⁴ a₄ < 0`). This breaks the circularity of defining `T` from an
/// endpoint that itself depends on `T`.
pub fn auto_cutoff(u_dir: &RadialField, p: &PhysicalParams) -> Result<CutoffSpec> {
    let eval = Evaluation::new(u_dir.grid(), u_dir.values(), p, None)?;
    let coef = FiberCoefficients {
        a6: 0.0,
        ..FiberCoefficients::of(&eval)
    };
    let t = first_negative(&coef, None)?;
    CutoffSpec::new(10.0 * t * eval.h1_norm_sq().sqrt())
}

/// Cutoff level: fixed, or resolved by [`auto_cutoff`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CutoffChoice {
    Fixed(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl Default for CutoffChoice {
    fn default() -> Self {
        CutoffChoice::Auto(AutoTag::Auto)
    }
}

impl CutoffChoice {
    pub fn auto() -> Self {
        Self::default()
    }

    pub fn resolve(&self, u_dir: &RadialField, p: &PhysicalParams) -> Result<CutoffSpec> {
        match self {
            CutoffChoice::Fixed(t) => CutoffSpec::new(*t),
            CutoffChoice::Auto(_) => auto_cutoff(u_dir, p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub path_points: usize,
    pub path_tol: f64,
    pub final_tol: f64,
    /// Refinement iteration budget.
    pub max_iters: usize,
    pub delta0: f64,
    /// Path deformation sweep budget; refinement starts from the current
    /// path maximum when it is exhausted.
    pub max_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            path_points: 64,
            path_tol: 1e-3,
            final_tol: 1e-8,
            max_iters: 20_000,
            delta0: 0.1,
            max_sweeps: 5_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("solver: {what}")));
        if self.path_points < 3 {
            return bad("path_points must be at least 3");
        }
        for (name, v) in [
            ("path_tol", self.path_tol),
            ("final_tol", self.final_tol),
            ("delta0", self.delta0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if self.max_iters == 0 || self.max_sweeps == 0 {
            return bad("iteration budgets must be positive");
        }
        Ok(())
    }
}

/// Solves `P d = g` on the Dirichlet unknowns, `d(R) = 0`.
pub(crate) struct Preconditioner {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    volumes: Vec<f64>,
}

impl Preconditioner {
    pub(crate) fn new(grid: &RadialGrid, p: &PhysicalParams) -> Self {
        let cells = grid.cells();
        let scale = vec![1.0 / (2.0 * p.m); grid.len() - 1];
        let (sub, diag, sup) = cells.dirichlet_system(2.0 * p.m * p.omega, &scale);
        Self {
            sub,
            diag,
            sup,
            volumes: cells.volumes().to_vec(),
        }
    }

    pub(crate) fn apply(&self, g: &[f64]) -> Vec<f64> {
        let m = self.diag.len();
        let mut rhs: Vec<f64> = (0..m).map(|i| self.volumes[i] * g[i]).collect();
        tridiag::solve(&self.sub, &self.diag, &self.sup, &mut rhs).expect("positive definite");
        rhs.push(0.0);
        rhs
    }
}

/// Discretized path from 0 to the endpoint.
#[derive(Debug, Clone)]
pub struct PathState {
    pub points: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    pub argmax_index: usize,
}

impl PathState {
    /// `k` points on the segment from 0 to `endpoint`.
    pub fn linear(grid: &RadialGrid, endpoint: &[f64], k: usize, p: &PhysicalParams, c: &CutoffSpec) -> Result<Self> {
        let points: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let s = j as f64 / (k - 1) as f64;
                endpoint.iter().map(|v| s * v).collect()
            })
            .collect();
        let mut state = Self {
            points,
            energies: vec![],
            argmax_index: 0,
        };
        state.reevaluate(grid, p, c)?;
        Ok(state)
    }

    fn reevaluate(&mut self, grid: &RadialGrid, p: &PhysicalParams, c: &CutoffSpec) -> Result<()> {
        self.energies = self
            .points
            .iter()
            .map(|u| Ok(Evaluation::new(grid, u, p, Some(c))?.energy().total))
            .collect::<Result<_>>()?;
        self.update_argmax();
        Ok(())
    }

    /// Interior maximum, lowest index on ties.
    fn update_argmax(&mut self) {
        let last = self.points.len() - 1;
        let mut best = 1;
        for j in 2..last {
            if self.energies[j] > self.energies[best] {
                best = j;
            }
        }
        self.argmax_index = best;
    }

    pub fn max_energy(&self) -> f64 {
        self.energies[self.argmax_index]
    }

    fn h1_distance(grid: &RadialGrid, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        grid.cells().h1_norm_sq(&d).sqrt()
    }

    /// Redistributes the points evenly in H¹ arclength along the polyline
    /// when the longest segment exceeds twice the shortest.
    fn resample(&mut self, grid: &RadialGrid, p: &PhysicalParams, c: &CutoffSpec) -> Result<bool> {
        let k = self.points.len();
        let lengths: Vec<f64> = self
            .points
            .windows(2)
            .map(|w| Self::h1_distance(grid, &w[0], &w[1]))
            .collect();
        let longest = lengths.iter().cloned().fold(0.0, f64::max);
        let shortest = lengths.iter().cloned().fold(f64::INFINITY, f64::min);
        if longest <= 2.0 * shortest {
            return Ok(false);
        }
        let total: f64 = lengths.iter().sum();
        let mut fresh = Vec::with_capacity(k);
        fresh.push(self.points[0].clone());
        let mut seg = 0;
        let mut start = 0.0;
        for j in 1..k - 1 {
            let target = total * j as f64 / (k - 1) as f64;
            while seg < lengths.len() - 1 && start + lengths[seg] < target {
                start += lengths[seg];
                seg += 1;
            }
            let frac = if lengths[seg] > 0.0 {
                ((target - start) / lengths[seg]).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let (a, b) = (&self.points[seg], &self.points[seg + 1]);
            fresh.push(a.iter().zip(b).map(|(x, y)| x + frac * (y - x)).collect());
        }
        fresh.push(self.points[k - 1].clone());
        self.points = fresh;
        self.reevaluate(grid, p, c)?;
        Ok(true)
    }
}

/// Outcome of [`mp_attempt`]: the bundle at the last iterate, plus the
/// reason it is not a converged solution, if any.
#[derive(Debug, Clone)]
pub struct SolveAttempt {
    pub bundle: SolutionBundle,
    pub failure: Option<Error>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionBundle {
    pub r: Vec<f64>,
    pub u: RadialField,
    pub n_field: RadialField,
    pub h: RadialField,
    pub a0: RadialField,
    pub energy: EnergyBreakdown,
    pub residual_u: f64,
    pub residual_n: f64,
    /// `residual_u` recomputed with the untruncated energy.
    pub residual_u_untruncated: f64,
    pub mp_level_estimate: f64,
    /// Largest energy on the initial straight path.
    pub initial_path_max: f64,
    pub k_t_at_solution: f64,
    pub h1_norm: f64,
    pub cutoff_t: f64,
    pub path_sweeps: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Converged with `K_T = 1`, i.e. a solution of the untruncated system.
    pub untruncated_solution: bool,
}

/// Max-norm of the pointwise gradient on the Dirichlet unknowns.
fn interior_max(g: &[f64]) -> f64 {
    g[..g.len() - 1].iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn combine(u: &[f64], d: &[f64], delta: f64) -> Vec<f64> {
    u.iter().zip(d).map(|(a, b)| a - delta * b).collect()
}

struct Solver<'a> {
    grid: &'a Arc<RadialGrid>,
    p: PhysicalParams,
    c: CutoffSpec,
    cfg: SolverConfig,
    pre: Preconditioner,
}

/// Field rescaled to the maximum of its fibre, with its gradient.
struct RayPoint {
    u: Vec<f64>,
    energy: f64,
    gradient: Vec<f64>,
    /// `⟨g, P⁻¹ g⟩`.
    dual_sq: f64,
    direction: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn energy(&self, u: &[f64]) -> Result<f64> {
        Ok(Evaluation::new(self.grid, u, &self.p, Some(&self.c))?.energy().total)
    }

    fn dual(&self, g: &[f64]) -> (Vec<f64>, f64) {
        let d = self.pre.apply(g);
        let prod: Vec<f64> = g.iter().zip(&d).map(|(a, b)| a * b).collect();
        let sq = 2.0 * PI * self.grid.cells().sum(&prod);
        (d, sq)
    }

    /// Largest energy along the two path segments at node `i`, found by
    /// golden-section search on each; moves node `i` there when higher.
    fn line_maximize(&self, path: &mut PathState, i: usize) -> Result<()> {
        const GOLD: f64 = 0.618_033_988_749_894_9;
        let centre = path.points[i].clone();
        let mut best = (path.energies[i], centre.clone());
        for nb in [i - 1, i + 1] {
            let other = &path.points[nb];
            let at = |s: f64| -> Vec<f64> { centre.iter().zip(other).map(|(a, b)| a + s * (b - a)).collect() };
            let (mut lo, mut hi) = (0.0, 1.0);
            let mut x1 = hi - GOLD * (hi - lo);
            let mut x2 = lo + GOLD * (hi - lo);
            let mut f1 = self.energy(&at(x1))?;
            let mut f2 = self.energy(&at(x2))?;
            for _ in 0..24 {
                if f1 >= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - GOLD * (hi - lo);
                    f1 = self.energy(&at(x1))?;
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + GOLD * (hi - lo);
                    f2 = self.energy(&at(x2))?;
                }
            }
            let (s, f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
            if f > best.0 {
                best = (f, at(s));
            }
        }
        path.energies[i] = best.0;
        path.points[i] = best.1;
        Ok(())
    }

    /// Path deformation until the gradient at the path maximum is below
    /// `path_tol`. Returns the number of sweeps and whether the path maximum
    /// stalled first.
    fn deform(&self, path: &mut PathState) -> Result<(usize, bool)> {
        let mut stalled = 0;
        let mut previous_max = path.max_energy();
        for sweep in 1..=self.cfg.max_sweeps {
            let i = path.argmax_index;
            self.line_maximize(path, i)?;
            let eval = Evaluation::new(self.grid, &path.points[i], &self.p, Some(&self.c))?;
            let g = eval.gradient();
            if interior_max(&g) < self.cfg.path_tol {
                return Ok((sweep, false));
            }
            let (d, _) = self.dual(&g);
            let cells = self.grid.cells();
            let ratio = (cells.h1_norm_sq(&path.points[i]) / cells.h1_norm_sq(&d)).sqrt();
            let mut delta = self.cfg.delta0.min(0.5 * ratio);
            for _ in 0..60 {
                let trial = combine(&path.points[i], &d, delta);
                let e = self.energy(&trial)?;
                if e < path.energies[i] {
                    path.points[i] = trial;
                    path.energies[i] = e;
                    break;
                }
                delta *= 0.5;
            }
            path.update_argmax();
            path.resample(self.grid, &self.p, &self.c)?;
            let current = path.max_energy();
            if previous_max - current < 1e-14 {
                stalled += 1;
                if stalled >= STALL_SWEEPS {
                    return Ok((sweep, true));
                }
            } else {
                stalled = 0;
            }
            previous_max = current;
        }
        Ok((self.cfg.max_sweeps, false))
    }

    fn ray_point(&self, v: &[f64]) -> Result<Option<RayPoint>> {
        let eval = Evaluation::new(self.grid, v, &self.p, Some(&self.c))?;
        let coef = FiberCoefficients::of(&eval);
        let Some(t) = coef.ray_max(Some(&self.c)) else {
            return Ok(None);
        };
        let u: Vec<f64> = v.iter().map(|x| t * x).collect();
        let eval = Evaluation::new(self.grid, &u, &self.p, Some(&self.c))?;
        let gradient = eval.gradient();
        let (direction, dual_sq) = self.dual(&gradient);
        Ok(Some(RayPoint {
            energy: eval.energy().total,
            u,
            gradient,
            dual_sq,
            direction,
        }))
    }

    /// Preconditioned descent along the fibre maxima. Steps satisfy an
    /// Armijo decrease of the energy or, once energy differences reach
    /// rounding level, a decrease of `⟨g, P⁻¹ g⟩`. The descent stops once
    /// the residual reaches `NEWTON_SWITCH` or stops improving.
    /// Returns `None` when the start's fibre has no maximum.
    fn descend(&self, start: &[f64]) -> Result<Option<(Vec<f64>, usize)>> {
        let Some(mut point) = self.ray_point(start)? else {
            return Ok(None);
        };
        let mut best = (interior_max(&point.gradient), point.u.clone());
        let mut since_best = 0;
        let mut delta: f64 = 1.0;
        for iter in 0..self.cfg.max_iters {
            if best.0 < NEWTON_SWITCH || since_best > DESCENT_PATIENCE {
                return Ok(Some((best.1, iter)));
            }
            let floor = 1e-13 * point.energy.abs().max(1.0);
            let mut accepted = None;
            for _ in 0..60 {
                let trial = combine(&point.u, &point.direction, delta);
                if let Some(next) = self.ray_point(&trial)? {
                    let armijo = next.energy <= point.energy - 1e-4 * delta * point.dual_sq;
                    let settled = next.energy <= point.energy + floor && next.dual_sq < point.dual_sq;
                    if armijo || settled {
                        accepted = Some(next);
                        break;
                    }
                }
                delta *= 0.5;
            }
            let Some(next) = accepted else {
                return Ok(Some((best.1, iter)));
            };
            point = next;
            delta = (2.0 * delta).min(4.0);
            let residual = interior_max(&point.gradient);
            if residual < best.0 {
                best = (residual, point.u.clone());
                since_best = 0;
            } else {
                since_best += 1;
            }
        }
        Ok(Some((best.1, self.cfg.max_iters)))
    }

    /// Strong residual of the truncated first equation, zero at `R`.
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut g = Evaluation::new(self.grid, u, &self.p, Some(&self.c))?.gradient();
        if let Some(last) = g.last_mut() {
            *last = 0.0;
        }
        Ok(g)
    }

    /// Preconditioned Jacobian product `P⁻¹V J v` by central differences.
    fn jacobian_apply(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let vn = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if vn == 0.0 {
            return Ok(vec![0.0; v.len()]);
        }
        let un = u.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        let eps = 1e-6 * un / vn;
        let plus = self.residual(&combine(u, v, -eps))?;
        let minus = self.residual(&combine(u, v, eps))?;
        let jv: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        Ok(self.pre.apply(&jv))
    }

    /// Newton iteration on the strong residual with restarted GMRES for the
    /// preconditioned linear systems and backtracking on the residual norm.
    fn newton(&self, start: Vec<f64>) -> Result<(Vec<f64>, usize, f64)> {
        let mut u = start;
        let mut f = self.residual(&u)?;
        let mut res = interior_max(&f);
        for iter in 0..NEWTON_ITERS {
            if res < self.cfg.final_tol {
                return Ok((u, iter, res));
            }
            let rhs = self.pre.apply(&f);
            let step = gmres(|v| self.jacobian_apply(&u, v), &rhs, 1e-10, 40, 400)?;
            // trust region: no step longer than half the current norm
            let cells = self.grid.cells();
            let ratio = (cells.h1_norm_sq(&u) / cells.h1_norm_sq(&step)).sqrt();
            let mut lambda = (0.5 * ratio).min(1.0);
            let mut moved = false;
            for _ in 0..12 {
                let trial = combine(&u, &step, lambda);
                let ft = self.residual(&trial)?;
                let rt = interior_max(&ft);
                if rt < res {
                    u = trial;
                    f = ft;
                    res = rt;
                    moved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !moved {
                return Ok((u, iter, res));
            }
        }
        Ok((u, NEWTON_ITERS, res))
    }

    /// Descent along fibre maxima followed by a Newton finish. Newton starts
    /// directly from the path maximum when its fibre has no maximum.
    fn refine(&self, start: &[f64]) -> Result<(Vec<f64>, usize, Option<Error>)> {
        let descent = self.descend(start)?;
        let projected = descent.is_some();
        let (u, descent_iters) = descent.unwrap_or_else(|| (start.to_vec(), 0));
        let (u, newton_iters, residual) = self.newton(u)?;
        let iterations = descent_iters + newton_iters;
        let failure = (residual >= self.cfg.final_tol).then(|| {
            if projected {
                Error::ResidualNotMet { residual, iterations }
            } else {
                Error::InvalidInput(format!("path maximum has no fibre maximum; residual {residual:e}"))
            }
        });
        Ok((u, iterations, failure))
    }
}

/// Restarted GMRES for `A x = b` with modified Gram-Schmidt and Givens
/// rotations. Returns the best iterate once the relative residual drops
/// below `tol` or the iteration budget is spent.
fn gmres<F>(apply: F, b: &[f64], tol: f64, restart: usize, max_iters: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut done = 0;
    while done < max_iters {
        let ax = apply(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
        let beta = dot(&r, &r).sqrt();
        if beta <= tol * b_norm {
            break;
        }
        let mut basis = vec![r.iter().map(|v| v / beta).collect::<Vec<f64>>()];
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        let mut k = 0;
        while k < restart && done < max_iters {
            let mut w = apply(&basis[k])?;
            let mut col = vec![0.0; k + 2];
            for (j, q) in basis.iter().enumerate() {
                col[j] = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(a, b)| *a -= col[j] * b);
            }
            col[k + 1] = dot(&w, &w).sqrt();
            for j in 0..k {
                let t = cs[j] * col[j] + sn[j] * col[j + 1];
                col[j + 1] = -sn[j] * col[j] + cs[j] * col[j + 1];
                col[j] = t;
            }
            let rho = col[k].hypot(col[k + 1]);
            let (c, s) = if rho == 0.0 {
                (1.0, 0.0)
            } else {
                (col[k] / rho, col[k + 1] / rho)
            };
            let sub = col[k + 1];
            col[k] = rho;
            col[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[k]);
            g[k] *= c;
            hess.push(col);
            k += 1;
            done += 1;
            if g[k].abs() <= tol * b_norm || sub == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / sub).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let tail: f64 = (i + 1..k).map(|j| hess[j][i] * y[j]).sum();
            y[i] = (g[i] - tail) / hess[i][i];
        }
        for (yi, q) in y.iter().zip(&basis) {
            x.iter_mut().zip(q).for_each(|(a, b)| *a += yi * b);
        }
        if g[k].abs() <= tol * b_norm {
            break;
        }
    }
    Ok(x)
}

/// Runs path deformation and refinement from the straight path `0 → ū`.
/// Errors are returned only when no iterate can be produced; otherwise a
/// non-converged run carries its reason in [`SolveAttempt::failure`].
pub fn mp_attempt(
    endpoint: &RadialField,
    p: &PhysicalParams,
    c: &CutoffSpec,
    cfg: &SolverConfig,
) -> Result<SolveAttempt> {
    cfg.validate()?;
    let grid = endpoint.grid();
    let solver = Solver {
        grid,
        p: *p,
        c: *c,
        cfg: *cfg,
        pre: Preconditioner::new(grid, p),
    };
    let mut path = PathState::linear(grid, endpoint.values(), cfg.path_points, p, c)?;
    let initial_path_max = path.max_energy();
    // A stalled path still hands its maximum to the refinement; stagnation
    // is reported only if the refinement cannot finish the job.
    let (sweeps, stalled) = solver.deform(&mut path)?;
    let start = path.points[path.argmax_index].clone();
    let (u, iterations, failure) = solver.refine(&start)?;
    let failure = failure.map(|e| {
        if stalled {
            Error::Stagnation { sweeps: STALL_SWEEPS }
        } else {
            e
        }
    });
    let bundle = assemble(
        grid,
        u,
        p,
        c,
        initial_path_max,
        sweeps,
        iterations,
        cfg,
        failure.is_none(),
    )?;
    Ok(SolveAttempt { bundle, failure })
}

pub fn mp_solve(
    endpoint: &RadialField,
    p: &PhysicalParams,
    c: &CutoffSpec,
    cfg: &SolverConfig,
) -> Result<SolutionBundle> {
    let attempt = mp_attempt(endpoint, p, c, cfg)?;
    match attempt.failure {
        Some(e) => Err(e),
        None => Ok(attempt.bundle),
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    grid: &Arc<RadialGrid>,
    u: Vec<f64>,
    p: &PhysicalParams,
    c: &CutoffSpec,
    initial_path_max: f64,
    path_sweeps: usize,
    iterations: usize,
    cfg: &SolverConfig,
    converged: bool,
) -> Result<SolutionBundle> {
    let eval = Evaluation::new(grid, &u, p, Some(c))?;
    let energy = eval.energy();
    let k_t_at_solution = eval.cutoff.0;
    let h1_norm = eval.h1_norm_sq().sqrt();
    let untruncated = Evaluation::new(grid, &u, p, None)?;
    let residual_u_untruncated = interior_max(&untruncated.gradient());
    let u_field = RadialField::new(grid.clone(), u)?;
    let n_field = RadialField::new(grid.clone(), eval.neutral.clone())?;
    let (residual_u, residual_n) = residual_system(&u_field, &n_field, p)?;
    let gauge = CellGauge::of(&u_field);
    let h = RadialField::new(grid.clone(), gauge.h.clone())?;
    let a0 = RadialField::new(grid.clone(), gauge.a0(p))?;
    let converged = converged && residual_u < cfg.final_tol && residual_n < cfg.final_tol;
    Ok(SolutionBundle {
        r: grid.nodes().to_vec(),
        u: u_field,
        n_field,
        h,
        a0,
        energy,
        residual_u,
        residual_n,
        residual_u_untruncated,
        mp_level_estimate: energy.total,
        initial_path_max,
        k_t_at_solution,
        h1_norm,
        cutoff_t: c.t,
        path_sweeps,
        iterations,
        converged,
        untruncated_solution: converged && k_t_at_solution == 1.0,
    })
}

/// Everything `solve` produces: the trial direction, the resolved cutoff, the
/// endpoint and the solver outcome.
#[derive(Debug, Clone)]
pub struct SolveRun {
    pub direction: NegativeDirection,
    pub cutoff: CutoffSpec,
    pub endpoint: Endpoint,
    pub attempt: SolveAttempt,
}

/// Negative direction, cutoff resolution, endpoint and mountain-pass solve.
pub fn solve(
    grid: &Arc<RadialGrid>,
    p: &PhysicalParams,
    cutoff: &CutoffChoice,
    cfg: &SolverConfig,
) -> Result<SolveRun> {
    let direction = find_negative_direction(grid, p)?;
    let c = cutoff.resolve(&direction.u, p)?;
    let endpoint = find_endpoint(&direction.u, p, &c)?;
    let attempt = mp_attempt(&endpoint.u, p, &c, cfg)?;
    Ok(SolveRun {
        direction,
        cutoff: c,
        endpoint,
        attempt,
    })
}

/// One row of a coupling sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub e: f64,
    pub converged: bool,
    pub h1_norm: f64,
    pub norm_over_t: f64,
    pub k_t: f64,
    pub energy: f64,
    pub residual_u: f64,
    pub residual_n: f64,
    pub iterations: usize,
    /// Chern-Simons share of the total energy.
    pub cs_share: f64,
    /// Failure reason, empty when converged.
    pub note: String,
}

fn sweep_row(grid: &Arc<RadialGrid>, p: &PhysicalParams, cutoff: &CutoffChoice, cfg: &SolverConfig) -> SweepRow {
    match solve(grid, p, cutoff, cfg) {
        Ok(run) => {
            let b = &run.attempt.bundle;
            SweepRow {
                e: p.e,
                converged: b.converged,
                h1_norm: b.h1_norm,
                norm_over_t: b.h1_norm / b.cutoff_t,
                k_t: b.k_t_at_solution,
                energy: b.energy.total,
                residual_u: b.residual_u,
                residual_n: b.residual_n,
                iterations: b.path_sweeps + b.iterations,
                cs_share: b.energy.cs / b.energy.total,
                note: run.attempt.failure.map(|e| e.to_string()).unwrap_or_default(),
            }
        }
        Err(err) => SweepRow {
            e: p.e,
            converged: false,
            h1_norm: f64::NAN,
            norm_over_t: f64::NAN,
            k_t: f64::NAN,
            energy: f64::NAN,
            residual_u: f64::NAN,
            residual_n: f64::NAN,
            iterations: 0,
            cs_share: f64::NAN,
            note: err.to_string(),
        },
    }
}

/// Solves at every coupling in `e_values`; rows run in parallel and come back
/// in input order. Failed rows are recorded, not propagated.
pub fn sweep_coupling(
    grid: &Arc<RadialGrid>,
    p_base: &PhysicalParams,
    e_values: &[f64],
    cutoff: &CutoffChoice,
    cfg: &SolverConfig,
) -> Result<Vec<SweepRow>> {
    if e_values.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one coupling".into()));
    }
    if e_values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("couplings must be ascending".into()));
    }
    let params: Vec<PhysicalParams> = e_values.iter().map(|&e| p_base.with_e(e)).collect::<Result<_>>()?;
    Ok(params.par_iter().map(|p| sweep_row(grid, p, cutoff, cfg)).collect())
}
