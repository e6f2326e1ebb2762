//! Bath-distribution estimation.
//!
//! For a fixed coupling `lambda` the predicted probabilities are linear in
//! the bath weights, so the inner problem is the simplex-constrained least
//! squares `min ||C p - y||^2` subject to `p >= 0`, `sum p = 1`. It is solved
//! with accelerated projected gradient and then polished on the detected
//! support. The coupling itself enters non-linearly and is handled by an
//! outer grid sweep with optional golden-section refinement.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{design_matrix, Dataset, DesignMatrix, MeasurementSetting, RankReport};
use crate::operator::DensityMatrix;
use crate::rovib::{BathModel, RovibParams};

/// Simplex feasibility tolerance of returned weight vectors.
pub const SIMPLEX_TOL: f64 = 1e-10;
/// Optimality certificate: a point whose natural residual
/// `||p - P(p - grad L(p))||_inf` is at most this counts as converged.
pub const KKT_TOL: f64 = 1e-10;
/// Iteration of the first attempt to certify the current support exactly;
/// later attempts follow at doubling intervals.
const FIRST_POLISH: usize = 500;
/// Relative slack in the convexity test on `L(lambda)`.
pub const CONVEXITY_RTOL: f64 = 1e-9;

/// Euclidean projection onto `{p : p >= 0, sum p = 1}` by the sort-and-
/// threshold rule. Points already on the simplex are returned unchanged, so
/// the projection is exactly idempotent.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let feasible_tol = 2.0 * n as f64 * f64::EPSILON;
    if v.iter().all(|&x| x >= 0.0) && (v.iter().sum::<f64>() - 1.0).abs() <= feasible_tol {
        return v.to_vec();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    let mut p: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // One corrective pass keeps the sum within rounding of 1.
    let s: f64 = p.iter().sum();
    let support = p.iter().filter(|&&x| x > 0.0).count().max(1) as f64;
    let shift = (s - 1.0) / support;
    if shift != 0.0 {
        for x in p.iter_mut().filter(|x| **x > 0.0) {
            *x = (*x - shift).max(0.0);
        }
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Stop once the relative objective decrease stays below this for
    /// `stall_window` consecutive iterations.
    pub rel_tol: f64,
    pub stall_window: usize,
    /// Per-record weights of the least-squares objective (uniform if `None`).
    pub record_weights: Option<Vec<f64>>,
    /// Exact re-solve on the active support after the first-order phase.
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 200_000,
            rel_tol: 1e-12,
            stall_window: 10,
            record_weights: None,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub weights: Vec<f64>,
    /// `sum_r w_r (y_r - (C p)_r)^2`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual_norm: f64,
    /// `||p - P(p - grad L(p))||_inf`, zero exactly at a KKT point.
    pub kkt_violation: f64,
    pub rank: RankReport,
}

impl EstimationResult {
    pub fn bath(&self, lambda: f64) -> Result<BathModel> {
        BathModel::new(lambda, self.weights.clone())
    }
}

struct LsProblem {
    c: DMatrix<f64>,
    y: DVector<f64>,
}

impl LsProblem {
    fn new(design: &DesignMatrix, y: &[f64], record_weights: Option<&[f64]>) -> Result<Self> {
        if y.len() != design.rows() {
            return Err(Error::dims("solve_simplex_ls data", design.rows(), y.len()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("data must be finite".into()));
        }
        let mut c = design.matrix().clone();
        let mut y = DVector::from_column_slice(y);
        if let Some(w) = record_weights {
            if w.len() != y.len() {
                return Err(Error::dims("solve_simplex_ls record weights", y.len(), w.len()));
            }
            if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::InvalidInput("record weights must be finite and non-negative".into()));
            }
            for (r, &wr) in w.iter().enumerate() {
                let s = wr.sqrt();
                c.row_mut(r).scale_mut(s);
                y[r] *= s;
            }
        }
        Ok(LsProblem { c, y })
    }

    fn residual(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.c * p - &self.y
    }

    fn objective(&self, p: &DVector<f64>) -> f64 {
        self.residual(p).norm_squared()
    }

    fn gradient_from_residual(&self, r: &DVector<f64>) -> DVector<f64> {
        self.c.tr_mul(r) * 2.0
    }

    /// Largest eigenvalue of `2 C^T C` by power iteration.
    fn lipschitz(&self) -> f64 {
        let m = self.c.ncols();
        let q = self.c.tr_mul(&self.c);
        let mut v = DVector::from_fn(m, |i, _| 1.0 + 0.01 * i as f64);
        v.normalize_mut();
        let mut est = 0.0;
        for _ in 0..500 {
            let w = &q * &v;
            let norm = w.norm();
            if norm == 0.0 {
                return 0.0;
            }
            let next = norm;
            v = w / norm;
            if (next - est).abs() <= 1e-12 * next {
                est = next;
                break;
            }
            est = next;
        }
        // Power iteration approaches from below; the trace bounds it above.
        (2.0 * est).max(2.0 * q.trace() / m as f64)
    }

    fn kkt_violation(&self, p: &DVector<f64>) -> f64 {
        let g = self.gradient_from_residual(&self.residual(p));
        let step: Vec<f64> = p.iter().zip(g.iter()).map(|(a, b)| a - b).collect();
        let proj = simplex_project(&step);
        p.iter().zip(proj).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Equality-constrained least squares on `support`, parametrized as
    /// `p = e_k + Z w` with `Z` the tangent directions `e_i - e_k`.
    fn solve_on_support(&self, support: &[usize]) -> Option<DVector<f64>> {
        let m = self.c.ncols();
        let (&k, rest) = support.split_first()?;
        let mut p = DVector::zeros(m);
        if rest.is_empty() {
            p[k] = 1.0;
            return Some(p);
        }
        let rows = self.c.nrows();
        let a = DMatrix::from_fn(rows, rest.len(), |r, i| self.c[(r, rest[i])] - self.c[(r, k)]);
        let rhs = &self.y - self.c.column(k);
        // Minimum-norm solution when the support columns are dependent.
        let svd = a.svd(true, true);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let w = svd.solve(&rhs, 1e-10 * smax).ok()?;
        let mut sum_rest = 0.0;
        for (i, &idx) in rest.iter().enumerate() {
            p[idx] = w[i];
            sum_rest += w[i];
        }
        p[k] = 1.0 - sum_rest;
        Some(p)
    }

    /// Primal active-set refinement started from the feasible point
    /// `start`: solve exactly on the current support, step toward that
    /// solution until a weight hits zero, drop it; at a feasible support
    /// minimizer add the level whose gradient most undercuts the support
    /// multiplier. Returns a feasible point.
    fn polish(&self, start: &DVector<f64>) -> Option<DVector<f64>> {
        let m = self.c.ncols();
        let mut x = start.clone();
        let mut support: Vec<usize> = (0..m).filter(|&i| x[i] > 0.0).collect();
        for _ in 0..(3 * m + 10) {
            let z = self.solve_on_support(&support)?;
            let blocking: Vec<usize> = support.iter().copied().filter(|&i| z[i] <= 0.0).collect();
            if blocking.is_empty() {
                x = z;
                let g = self.gradient_from_residual(&self.residual(&x));
                let nu = support.iter().map(|&i| g[i]).fold(f64::INFINITY, f64::min);
                let gscale = g.iter().map(|v| v.abs()).fold(f64::MIN_POSITIVE, f64::max);
                let entering = (0..m)
                    .filter(|i| !support.contains(i))
                    .filter(|&i| g[i] < nu - 1e-12 * gscale)
                    .min_by(|&a, &b| g[a].total_cmp(&g[b]));
                match entering {
                    Some(i) => {
                        support.push(i);
                        support.sort_unstable();
                    }
                    None => return Some(x),
                }
            } else {
                let alpha = blocking
                    .iter()
                    .map(|&i| x[i] / (x[i] - z[i]))
                    .fold(1.0f64, f64::min)
                    .clamp(0.0, 1.0);
                x = &x + (&z - &x) * alpha;
                for &i in &blocking {
                    if x[i] <= 1e-15 * (1.0 + z[i].abs()) {
                        x[i] = 0.0;
                    }
                }
                // The blocking index that defined the step always leaves.
                let leaving = blocking
                    .iter()
                    .copied()
                    .min_by(|&a, &b| (x[a]).total_cmp(&x[b]))
                    .expect("blocking set is non-empty");
                x[leaving] = 0.0;
                for v in x.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                let total = x.sum();
                if total <= 0.0 {
                    return None;
                }
                x /= total;
                support.retain(|&i| x[i] > 0.0);
                if support.is_empty() {
                    return None;
                }
            }
        }
        Some(x)
    }
}

impl LsProblem {
    /// Polished point, if it is feasible and not worse than `(x, fx)`.
    /// Objectives equal up to rounding are decided by the optimality
    /// residual, which the exact support solve drives to ~0.
    fn polished_candidate(&self, x: &DVector<f64>, fx: f64) -> Option<(DVector<f64>, f64)> {
        let p = self.polish(x)?;
        let fp = self.objective(&p);
        let no_worse = fp <= fx * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        let feasible = p.iter().all(|&v| v >= 0.0) && (p.sum() - 1.0).abs() <= SIMPLEX_TOL;
        if no_worse && feasible && (fp < fx || self.kkt_violation(&p) <= self.kkt_violation(x)) {
            Some((p, fp))
        } else {
            None
        }
    }
}

fn to_simplex(p: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(simplex_project(p.as_slice()))
}

/// Simplex-constrained least squares with default options.
pub fn solve_simplex_ls(design: &DesignMatrix, y: &[f64]) -> Result<EstimationResult> {
    solve_simplex_ls_with(design, y, &SolverOptions::default())
}

/// Projected gradient with Nesterov momentum and function-value restarts,
/// step `1 / L` with `L` an upper estimate of the largest eigenvalue of
/// `2 C^T C`, started from the uniform distribution.
pub fn solve_simplex_ls_with(design: &DesignMatrix, y: &[f64], opts: &SolverOptions) -> Result<EstimationResult> {
    let prob = LsProblem::new(design, y, opts.record_weights.as_deref())?;
    let m = design.cols();
    let lip = prob.lipschitz() * 1.01;

    let mut x = DVector::from_element(m, 1.0 / m as f64);
    let mut fx = prob.objective(&x);
    let mut iterations = 0;
    let mut converged = false;
    let mut next_polish = FIRST_POLISH;

    if lip > 0.0 && fx > 0.0 {
        let step = 1.0 / lip;
        let mut z = x.clone();
        let mut cz = &prob.c * &z;
        let mut cx = cz.clone();
        let mut t = 1.0f64;
        let mut stall = 0usize;
        while iterations < opts.max_iter {
            iterations += 1;
            let g = prob.gradient_from_residual(&(&cz - &prob.y));
            let x_new = to_simplex(&(&z - g * step));
            let cx_new = &prob.c * &x_new;
            let f_new = (&cx_new - &prob.y).norm_squared();
            if f_new > fx {
                // Momentum overshot: restart from the last accepted point.
                if z == x {
                    // A plain projected-gradient step cannot increase the
                    // objective beyond rounding; treat as converged.
                    converged = true;
                    break;
                }
                t = 1.0;
                z = x.clone();
                cz = cx.clone();
                stall = 0;
                continue;
            }
            let decrease = fx - f_new;
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            z = &x_new + (&x_new - &x) * beta;
            cz = &cx_new + (&cx_new - &cx) * beta;
            x = x_new;
            cx = cx_new;
            t = t_next;
            fx = f_new;
            if fx == 0.0 || decrease <= opts.rel_tol * fx {
                stall += 1;
                if stall >= opts.stall_window || fx == 0.0 {
                    converged = true;
                    break;
                }
            } else {
                stall = 0;
            }
            if opts.polish && iterations == next_polish {
                next_polish *= 2;
                // Certified early exit: the exact support solve satisfies
                // the optimality conditions.
                if let Some((p, fp)) = prob.polished_candidate(&x, fx) {
                    if prob.kkt_violation(&p) <= KKT_TOL {
                        x = p;
                        fx = fp;
                        converged = true;
                        break;
                    }
                }
            }
        }
    } else {
        converged = true;
    }

    if opts.polish {
        if let Some((p, fp)) = prob.polished_candidate(&x, fx) {
            x = p;
            fx = fp;
        }
    }
    let kkt_violation = prob.kkt_violation(&x);
    converged = converged || kkt_violation <= KKT_TOL;

    let weights: Vec<f64> = x.iter().copied().collect();
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::invariant("simplex", format!("solver left the simplex (sum {sum})")));
    }
    if !converged {
        log::warn!("simplex least squares hit the iteration cap ({iterations})");
    }
    let residual_norm = fx.sqrt();
    Ok(EstimationResult {
        kkt_violation,
        weights,
        objective: fx,
        iterations,
        converged,
        residual_norm,
        rank: design.rank_report(),
    })
}

/// The estimation inputs shared by every coupling value: data, the
/// reconstructed initial state, the model without its coupling, and the
/// settings aligned one-to-one with the records.
#[derive(Debug, Clone)]
pub struct EstimationProblem {
    rho0: DensityMatrix,
    params: RovibParams,
    settings: Vec<MeasurementSetting>,
    y: Vec<f64>,
    options: SolverOptions,
}

impl EstimationProblem {
    pub fn new(
        dataset: &Dataset,
        rho0: &DensityMatrix,
        params: &RovibParams,
        settings: &[MeasurementSetting],
    ) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::InvalidInput("dataset is empty".into()));
        }
        params.validate()?;
        let aligned = dataset.align(settings)?;
        Ok(EstimationProblem {
            rho0: rho0.clone(),
            params: *params,
            settings: aligned,
            y: dataset.probabilities(),
            options: SolverOptions::default(),
        })
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn params(&self) -> &RovibParams {
        &self.params
    }

    pub fn design_at(&self, lambda: f64) -> Result<DesignMatrix> {
        design_matrix(&self.settings, &self.rho0, &self.params.with_lambda(lambda))
    }

    pub fn solve_at(&self, lambda: f64) -> Result<EstimationResult> {
        solve_simplex_ls_with(&self.design_at(lambda)?, &self.y, &self.options)
    }

    /// Inner solve at every grid point, then argmin (smallest `lambda` wins
    /// ties).
    pub fn sweep(&self, grid: &[f64]) -> Result<SweepResult> {
        if grid.is_empty() {
            return Err(Error::InvalidInput("lambda grid is empty".into()));
        }
        if grid.iter().any(|l| !l.is_finite()) || grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("lambda grid must be finite and strictly ascending".into()));
        }
        let results = self.solve_grid(grid)?;
        let objectives: Vec<f64> = results.iter().map(|r| r.objective).collect();
        let mut best = 0;
        for (i, &l) in objectives.iter().enumerate() {
            if l < objectives[best] {
                best = i;
            }
        }
        Ok(SweepResult {
            lambda_grid: grid.to_vec(),
            convex_flag: is_convex(&objectives),
            boundary_flag: best == 0 || best + 1 == grid.len(),
            best_lambda: grid[best],
            best_index: best,
            best_result: results[best].clone(),
            objectives,
            results,
        })
    }

    #[cfg(feature = "parallel")]
    fn solve_grid(&self, grid: &[f64]) -> Result<Vec<EstimationResult>> {
        use rayon::prelude::*;
        grid.par_iter().map(|&l| self.solve_at(l)).collect()
    }

    #[cfg(not(feature = "parallel"))]
    fn solve_grid(&self, grid: &[f64]) -> Result<Vec<EstimationResult>> {
        grid.iter().map(|&l| self.solve_at(l)).collect()
    }

    /// Golden-section search on `L(lambda)` between the grid neighbours of
    /// the sweep minimum. Needs a convex sweep with an interior minimum.
    pub fn refine(&self, sweep: &SweepResult, tol: f64) -> Result<Refinement> {
        if !sweep.convex_flag || sweep.boundary_flag {
            return Err(Error::InvalidInput(format!(
                "refinement needs a convex sweep with an interior minimum (convex: {}, at boundary: {}); extend the lambda grid",
                sweep.convex_flag, sweep.boundary_flag
            )));
        }
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
        }
        let k = sweep.best_index;
        let (lo, hi) = (sweep.lambda_grid[k - 1], sweep.lambda_grid[k + 1]);
        if tol >= hi - lo {
            return Ok(Refinement {
                lambda: sweep.best_lambda,
                result: sweep.best_result.clone(),
                evaluations: 0,
            });
        }
        let mut evaluations = 0usize;
        let mut failure = None;
        let (x, _) = golden_section_minimize(
            |l| {
                evaluations += 1;
                match self.solve_at(l) {
                    Ok(r) => r.objective,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::INFINITY
                    }
                }
            },
            lo,
            hi,
            tol,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let result = self.solve_at(x)?;
        if result.objective <= sweep.best_result.objective {
            Ok(Refinement { lambda: x, result, evaluations })
        } else {
            Ok(Refinement {
                lambda: sweep.best_lambda,
                result: sweep.best_result.clone(),
                evaluations,
            })
        }
    }
}

/// `L[i-1] - 2 L[i] + L[i+1] >= -CONVEXITY_RTOL * max |L|` at every interior
/// point.
pub fn is_convex(objectives: &[f64]) -> bool {
    let scale = objectives.iter().map(|v| v.abs()).fold(0.0, f64::max);
    objectives
        .windows(3)
        .all(|w| w[0] - 2.0 * w[1] + w[2] >= -CONVEXITY_RTOL * scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub lambda_grid: Vec<f64>,
    pub objectives: Vec<f64>,
    pub best_lambda: f64,
    pub best_index: usize,
    pub best_result: EstimationResult,
    pub convex_flag: bool,
    pub boundary_flag: bool,
    /// Inner solution at every grid point, in grid order.
    pub results: Vec<EstimationResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub lambda: f64,
    pub result: EstimationResult,
    pub evaluations: usize,
}

/// Sweeps `L(lambda)` over `grid` for the given data.
pub fn sweep_lambda(
    dataset: &Dataset,
    rho0: &DensityMatrix,
    params: &RovibParams,
    settings: &[MeasurementSetting],
    grid: &[f64],
) -> Result<SweepResult> {
    EstimationProblem::new(dataset, rho0, params, settings)?.sweep(grid)
}

/// Golden-section refinement of a finished sweep.
pub fn refine_lambda(problem: &EstimationProblem, sweep: &SweepResult, tol: f64) -> Result<Refinement> {
    problem.refine(sweep, tol)
}

/// Golden-section minimization of a unimodal `f` on `[a, b]` until the
/// bracket is no wider than `tol`. Returns the best evaluated point.
pub fn golden_section_minimize(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a) > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Problem-size accounting for an `n`-level system and `J + 1` bath levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnknownCounts {
    /// `n^4 - n^2` free parameters of an unconstrained process matrix.
    pub blind_process_tomography: usize,
    /// `n^2` real parameters of a state.
    pub state_tomography: usize,
    /// `J + 1` bath weights plus the coupling constant.
    pub parametrized: usize,
}

pub fn unknown_counts(dim: usize, j_max: usize) -> UnknownCounts {
    let n2 = dim * dim;
    UnknownCounts {
        blind_process_tomography: n2 * n2 - n2,
        state_tomography: n2,
        parametrized: j_max + 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn design(rows: usize, cols: usize, data: &[f64]) -> DesignMatrix {
        DesignMatrix::from_matrix(DMatrix::from_row_slice(rows, cols, data)).unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(simplex_project(&[0.5, 0.5]), vec![0.5, 0.5]);
        assert_eq!(simplex_project(&[2.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(simplex_project(&[-1.0, -1.0]), vec![0.5, 0.5]);
        let p = simplex_project(&[0.3, 0.9, -0.2, 0.4]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn identity_design_exact_fit() {
        let c = design(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let r = solve_simplex_ls(&c, &[1.0, 0.0, 0.0]).unwrap();
        assert!((r.weights[0] - 1.0).abs() < 1e-12);
        assert!(r.objective < 1e-24);
        assert!(r.converged);
    }

    #[test]
    fn symmetric_projection_case() {
        let c = design(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let r = solve_simplex_ls(&c, &[2.0, 2.0]).unwrap();
        assert!((r.weights[0] - 0.5).abs() < 1e-12 && (r.weights[1] - 0.5).abs() < 1e-12);
        assert!((r.objective - 4.5).abs() < 1e-12);
        assert!(r.kkt_violation < 1e-12);
    }

    #[test]
    fn four_level_recovery_against_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let data: Vec<f64> = (0..80).map(|_| rng.random::<f64>()).collect();
        let c = design(20, 4, &data);
        let p_true = [0.1, 0.4, 0.0, 0.5];
        let y = c.predict(&p_true).unwrap();
        let r = solve_simplex_ls(&c, &y).unwrap();
        assert_eq!(r.rank.rank, 4);
        let l1: f64 = r.weights.iter().zip(p_true).map(|(a, b)| (a - b).abs()).sum();
        assert!(l1 < 1e-6, "{l1}");

        // Grid search over the 3-simplex at resolution 1e-3 (coarse pass at
        // 1e-2, then a local pass at 1e-3 around the coarse winner).
        let obj = |p: &[f64]| -> f64 {
            let pred = c.predict(p).unwrap();
            pred.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum()
        };
        let mut best = (f64::INFINITY, [0.0; 4]);
        for i in 0..=100 {
            for j in 0..=(100 - i) {
                for k in 0..=(100 - i - j) {
                    let p = [i as f64 / 100.0, j as f64 / 100.0, k as f64 / 100.0, (100 - i - j - k) as f64 / 100.0];
                    let f = obj(&p);
                    if f < best.0 {
                        best = (f, p);
                    }
                }
            }
        }
        let centre = best.1;
        for di in -10i32..=10 {
            for dj in -10i32..=10 {
                for dk in -10i32..=10 {
                    let p0 = centre[0] + di as f64 * 1e-3;
                    let p1 = centre[1] + dj as f64 * 1e-3;
                    let p2 = centre[2] + dk as f64 * 1e-3;
                    let p3 = 1.0 - p0 - p1 - p2;
                    if p0 < -1e-12 || p1 < -1e-12 || p2 < -1e-12 || p3 < -1e-12 {
                        continue;
                    }
                    let p = [p0.max(0.0), p1.max(0.0), p2.max(0.0), p3.max(0.0)];
                    let f = obj(&p);
                    if f < best.0 {
                        best = (f, p);
                    }
                }
            }
        }
        let dist: f64 = r.weights.iter().zip(best.1).map(|(a, b)| (a - b).abs()).sum();
        assert!(dist <= 4e-3, "solver {:?} vs grid {:?}", r.weights, best.1);
        assert!(r.objective <= best.0 + 1e-12);
    }

    #[test]
    fn rejects_non_finite_data() {
        let c = design(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(solve_simplex_ls(&c, &[f64::NAN, 0.0]).is_err());
        assert!(solve_simplex_ls(&c, &[0.0]).is_err());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let data: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
        let c = design(10, 6, &data);
        let y: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
        let opts = SolverOptions { max_iter: 2, polish: false, ..Default::default() };
        let r = solve_simplex_ls_with(&c, &y, &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn record_weights_change_the_fit() {
        let c = design(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let opts = SolverOptions { record_weights: Some(vec![3.0, 1.0]), ..Default::default() };
        let r = solve_simplex_ls_with(&c, &[1.0, 1.0], &opts).unwrap();
        // min 3 (p - 1)^2 + (1 - p - 1)^2 -> p = 3/4.
        assert!((r.weights[0] - 0.75).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn golden_section_on_quadratic() {
        let (x, fx) = golden_section_minimize(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-8);
        assert!((x - 0.3).abs() <= 1e-8);
        assert!(fx < 1e-16);
    }

    #[test]
    fn convexity_check() {
        assert!(is_convex(&[3.0, 1.0, 0.5, 1.0, 4.0]));
        assert!(!is_convex(&[3.0, 1.0, 2.0, 1.5, 4.0]));
        assert!(is_convex(&[1.0]));
    }

    #[test]
    fn unknown_counts_for_six_levels() {
        let u = unknown_counts(6, 150);
        assert_eq!(u.blind_process_tomography, 1260);
        assert_eq!(u.state_tomography, 36);
        assert_eq!(u.parametrized, 152);
    }
}
