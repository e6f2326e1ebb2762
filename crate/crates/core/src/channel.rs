//! Quantum channels in operator-sum form, the two dephasing special cases,
//! and the process-matrix (superoperator) representation.
//!
//! A [`KrausSet`] keeps the bath weights `p_j` separate from the operators,
//! so the channel is `rho -> sum_j p_j E_j rho E_j^dagger`. The weights are
//! folded in as `sqrt(p_j)` only when expanding to a [`Superoperator`].

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_io::{self, FORMAT_VERSION};
use crate::operator::{
    hermiticity_defect, psd_defect, raw_trace_product, vectorize_matrix, ComplexMatrix, DensityMatrix, Hermitian,
    HERMITIAN_TOL, PSD_TOL,
};

/// Tolerance on `||sum_j p_j E_j^dagger E_j - I||_max`.
pub const TRACE_PRESERVATION_TOL: f64 = 1e-10;
/// Tolerance on `|sum_j p_j - 1|`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Output trace drift above which `apply_channel` reports a broken set.
pub const OUTPUT_TRACE_TOL: f64 = 1e-9;

/// Identifier of the operator basis used for process matrices.
pub const MATRIX_UNIT_BASIS: &str = "matrix-units-column-stacked";

pub(crate) fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::invariant("weights_nonempty", "at least one weight is required"));
    }
    if let Some((j, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < -1e-14) {
        return Err(Error::invariant("weights_nonnegative", format!("weight {j} is {w:e}")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::invariant(
            "weights_normalized",
            format!("weights sum to {sum:.17}, expected 1 within {WEIGHT_SUM_TOL:e}"),
        ));
    }
    Ok(())
}

/// Weighted Kraus operators of a channel at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    dim: usize,
    operators: Vec<ComplexMatrix>,
    weights: Vec<f64>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>, weights: Vec<f64>) -> Result<Self> {
        if operators.len() != weights.len() {
            return Err(Error::dims("KrausSet weights", operators.len(), weights.len()));
        }
        check_weights(&weights)?;
        let dim = operators[0].nrows();
        for op in &operators {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::dims("KrausSet operator", dim, op.nrows().max(op.ncols())));
            }
        }
        let set = KrausSet { dim, operators, weights };
        let defect = set.trace_preservation_defect();
        if defect > TRACE_PRESERVATION_TOL {
            return Err(Error::invariant(
                "trace_preserving",
                format!("||sum p E^dagger E - I||_max = {defect:e} exceeds {TRACE_PRESERVATION_TOL:e}"),
            ));
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn trace_preservation_defect(&self) -> f64 {
        let n = self.dim;
        let mut acc = ComplexMatrix::zeros(n, n);
        for (e, &p) in self.operators.iter().zip(&self.weights) {
            acc += (e.adjoint() * e).scale(p);
        }
        acc -= ComplexMatrix::identity(n, n);
        acc.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// `sum_j p_j E_j rho E_j^dagger`.
pub fn apply_channel(kraus: &KrausSet, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if kraus.dim != rho.dim() {
        return Err(Error::dims("apply_channel", kraus.dim, rho.dim()));
    }
    let r = rho.as_matrix();
    let n = kraus.dim;
    let mut out = ComplexMatrix::zeros(n, n);
    for (e, &p) in kraus.operators.iter().zip(&kraus.weights) {
        if p == 0.0 {
            continue;
        }
        out += (e * r * e.adjoint()).scale(p);
    }
    let drift = (crate::operator::trace(&out) - 1.0).norm();
    if drift > OUTPUT_TRACE_TOL {
        return Err(Error::invariant(
            "trace_preserving",
            format!("channel output trace drifted by {drift:e}; the Kraus set is not trace preserving"),
        ));
    }
    DensityMatrix::new(out)
}

/// System eigenfrequencies `omega_n` and per-bath-level shifts
/// `kappa_{jn}` (eigenvalues of `K_j`), all in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    system_freqs: Vec<f64>,
    bath_shifts: Vec<Vec<f64>>,
}

impl SpectralModel {
    pub fn new(system_freqs: Vec<f64>, bath_shifts: Vec<Vec<f64>>) -> Result<Self> {
        let n = system_freqs.len();
        if n == 0 || bath_shifts.is_empty() {
            return Err(Error::InvalidInput("spectral model needs at least one level and one bath state".into()));
        }
        if system_freqs.iter().any(|w| !w.is_finite()) {
            return Err(Error::invariant("finite", "system frequencies must be finite"));
        }
        for row in &bath_shifts {
            if row.len() != n {
                return Err(Error::dims("SpectralModel bath shift row", n, row.len()));
            }
            if row.iter().any(|k| !k.is_finite()) {
                return Err(Error::invariant("finite", "bath shifts must be finite"));
            }
        }
        Ok(SpectralModel { system_freqs, bath_shifts })
    }

    pub fn dim(&self) -> usize {
        self.system_freqs.len()
    }

    pub fn bath_levels(&self) -> usize {
        self.bath_shifts.len()
    }

    pub fn system_freqs(&self) -> &[f64] {
        &self.system_freqs
    }

    pub fn bath_shifts(&self) -> &[Vec<f64>] {
        &self.bath_shifts
    }
}

/// Coefficients `mu^n_{jk}(t)` of the pure-dephasing Kraus operators,
/// stored for `j, k` in `0..bath_levels` and `n` in `0..dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingCoefficients {
    bath_levels: usize,
    dim: usize,
    values: Vec<C64>,
}

impl DephasingCoefficients {
    /// `values` is laid out as `[(j * bath_levels + k) * dim + n]`.
    pub fn new(bath_levels: usize, dim: usize, values: Vec<C64>) -> Result<Self> {
        let expected = bath_levels * bath_levels * dim;
        if values.len() != expected || expected == 0 {
            return Err(Error::dims("DephasingCoefficients", expected, values.len()));
        }
        Ok(DephasingCoefficients { bath_levels, dim, values })
    }

    /// `mu^n_{jk} = delta_{jk}`: no bath-induced transitions.
    pub fn diagonal(bath_levels: usize, dim: usize) -> Self {
        let values = (0..bath_levels * bath_levels * dim)
            .map(|idx| {
                let jk = idx / dim;
                if jk / bath_levels == jk % bath_levels {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        DephasingCoefficients { bath_levels, dim, values }
    }

    pub fn get(&self, j: usize, k: usize, n: usize) -> C64 {
        self.values[(j * self.bath_levels + k) * self.dim + n]
    }

    pub fn bath_levels(&self) -> usize {
        self.bath_levels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Pure-dephasing Kraus set: `E_{jk} = sum_n e^{-i omega_n t} mu^n_{jk} |n><n|`,
/// with `E_{jk}` carrying the weight `p_j` of its initial bath level. The set
/// is returned in normalized form: operators `sqrt(L) E_{jk}` with weights
/// `p_j / L`, where `L` is the number of bath levels.
pub fn case_i_kraus(mu: &DephasingCoefficients, freqs: &[f64], weights: &[f64], t: f64) -> Result<KrausSet> {
    if freqs.len() != mu.dim {
        return Err(Error::dims("case_i_kraus frequencies", mu.dim, freqs.len()));
    }
    if weights.len() != mu.bath_levels {
        return Err(Error::dims("case_i_kraus weights", mu.bath_levels, weights.len()));
    }
    // Each E_jk is scaled by sqrt(L) and weighted p_j / L, so the weights
    // stay normalized while sum_jk w_jk E_jk rho E_jk^dagger is unchanged.
    let levels = mu.bath_levels;
    let scale = (levels as f64).sqrt();
    let mut ops = Vec::with_capacity(levels * levels);
    let mut ws = Vec::with_capacity(levels * levels);
    for (j, &wj) in weights.iter().enumerate() {
        for k in 0..levels {
            let diag: Vec<C64> = (0..mu.dim)
                .map(|n| C64::from_polar(scale, -freqs[n] * t) * mu.get(j, k, n))
                .collect();
            ops.push(ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)));
            ws.push(wj / levels as f64);
        }
    }
    KrausSet::new(ops, ws)
}

fn diagonal_phase_unitary(phases: impl Iterator<Item = f64>) -> ComplexMatrix {
    let diag: Vec<C64> = phases.map(|phi| C64::from_polar(1.0, phi)).collect();
    ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
}

/// Bath-diagonal Kraus set: `D_j = diag(e^{-i (kappa_{jn} + omega_n) t})`.
pub fn case_ii_kraus(spec: &SpectralModel, weights: &[f64], t: f64) -> Result<KrausSet> {
    if weights.len() != spec.bath_levels() {
        return Err(Error::dims("case_ii_kraus weights", spec.bath_levels(), weights.len()));
    }
    let ops = spec
        .bath_shifts
        .iter()
        .map(|kappa| {
            diagonal_phase_unitary(kappa.iter().zip(&spec.system_freqs).map(|(k, w)| -(k + w) * t))
        })
        .collect();
    KrausSet::new(ops, weights.to_vec())
}

/// Direct phase-factor evaluation of the bath-diagonal evolution,
/// `<n|rho(t)|m> = <n|rho0|m> sum_j p_j e^{-i (kappa_jn - kappa_jm + omega_n - omega_m) t}`.
pub fn evolve_map(spec: &SpectralModel, weights: &[f64], rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if rho0.dim() != spec.dim() {
        return Err(Error::dims("evolve_map", spec.dim(), rho0.dim()));
    }
    if weights.len() != spec.bath_levels() {
        return Err(Error::dims("evolve_map weights", spec.bath_levels(), weights.len()));
    }
    check_weights(weights)?;
    let n = spec.dim();
    let r0 = rho0.as_matrix();
    let mut out = ComplexMatrix::zeros(n, n);
    for a in 0..n {
        out[(a, a)] = r0[(a, a)];
        for b in (a + 1)..n {
            let mut factor = C64::new(0.0, 0.0);
            for (kappa, &p) in spec.bath_shifts.iter().zip(weights) {
                let freq = kappa[a] - kappa[b] + spec.system_freqs[a] - spec.system_freqs[b];
                factor += C64::from_polar(p, -freq * t);
            }
            let v = r0[(a, b)] * factor;
            out[(a, b)] = v;
            out[(b, a)] = v.conj();
        }
    }
    DensityMatrix::new(out)
}

/// Process matrix `X` over the matrix-unit basis `B_mu = |a><b|`,
/// `mu = a + n b`, acting as `rho -> sum_{mu nu} X_{mu nu} B_mu rho B_nu^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    x: ComplexMatrix,
}

impl Superoperator {
    /// Validates size, Hermiticity, positivity and trace preservation.
    pub fn new(dim: usize, x: ComplexMatrix) -> Result<Self> {
        let d2 = dim * dim;
        if x.nrows() != d2 || x.ncols() != d2 {
            return Err(Error::dims("Superoperator", d2, x.nrows().max(x.ncols())));
        }
        let herm = hermiticity_defect(&x);
        if herm > HERMITIAN_TOL {
            return Err(Error::invariant("hermitian", format!("process matrix Hermiticity defect {herm:e}")));
        }
        let psd = psd_defect(&x)?;
        if psd > PSD_TOL {
            return Err(Error::invariant("positive_semidefinite", format!("process matrix PSD defect {psd:e}")));
        }
        let sop = Superoperator { dim, x };
        let tp = sop.trace_preservation_defect();
        if tp > TRACE_PRESERVATION_TOL {
            return Err(Error::invariant("trace_preserving", format!("process matrix trace defect {tp:e}")));
        }
        Ok(sop)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.x
    }

    pub fn basis(&self) -> &'static str {
        MATRIX_UNIT_BASIS
    }

    /// `|| sum_{mu nu} X_{mu nu} B_nu^dagger B_mu - I ||_max`. With matrix
    /// units this is a partial trace: `M_{db} = sum_a X_{(a,b),(a,d)}`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for d in 0..n {
            for b in 0..n {
                let mut m = C64::new(0.0, 0.0);
                for a in 0..n {
                    m += self.x[(a + n * b, a + n * d)];
                }
                let target = if b == d { 1.0 } else { 0.0 };
                worst = worst.max((m - target).norm());
            }
        }
        worst
    }

    pub fn psd_defect(&self) -> f64 {
        psd_defect(&self.x).unwrap_or(f64::INFINITY)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.x)
    }

    pub fn to_json(&self) -> SuperoperatorJson {
        SuperoperatorJson {
            format_version: FORMAT_VERSION,
            dim: self.dim,
            basis: MATRIX_UNIT_BASIS.to_string(),
            x: self.x.as_slice().iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_json(doc: &SuperoperatorJson) -> Result<Self> {
        if doc.basis != MATRIX_UNIT_BASIS {
            return Err(Error::Parse(format!("unsupported operator basis `{}`", doc.basis)));
        }
        let d2 = doc.dim * doc.dim;
        if doc.x.len() != d2 * d2 {
            return Err(Error::dims("Superoperator JSON entries", d2 * d2, doc.x.len()));
        }
        let data: Vec<C64> = doc.x.iter().map(|&[re, im]| C64::new(re, im)).collect();
        Self::new(doc.dim, ComplexMatrix::from_column_slice(d2, d2, &data))
    }

    /// Real and imaginary parts as dense CSV grids (one row of `X` per line).
    pub fn to_csv_grids(&self) -> (String, String) {
        let d2 = self.x.nrows();
        (
            matrix_io::real_grid_csv(d2, d2, |r, c| self.x[(r, c)].re),
            matrix_io::real_grid_csv(d2, d2, |r, c| self.x[(r, c)].im),
        )
    }
}

/// JSON export of a process matrix; `X` entries are column-stacked.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SuperoperatorJson {
    #[serde(default = "matrix_io::default_version")]
    pub format_version: u32,
    pub dim: usize,
    pub basis: String,
    #[serde(rename = "X")]
    pub x: Vec<[f64; 2]>,
}

/// Expands each `sqrt(p_j) E_j` over the matrix units; with coefficient
/// vectors `a_j = vec(E_j)` this gives `X = sum_j p_j a_j a_j^dagger`.
pub fn build_superoperator(kraus: &KrausSet) -> Result<Superoperator> {
    let d2 = kraus.dim * kraus.dim;
    let mut x = ComplexMatrix::zeros(d2, d2);
    for (e, &p) in kraus.operators.iter().zip(&kraus.weights) {
        if p == 0.0 {
            continue;
        }
        let a = vectorize_matrix(e);
        for nu in 0..d2 {
            let an = a[nu].conj() * p;
            if an == C64::new(0.0, 0.0) {
                continue;
            }
            for mu in 0..d2 {
                x[(mu, nu)] += a[mu] * an;
            }
        }
    }
    Superoperator::new(kraus.dim, x)
}

/// `<a|rho'|c> = sum_{b d} X_{(a,b),(c,d)} <b|rho|d>`.
pub fn apply_superoperator(sop: &Superoperator, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let n = sop.dim;
    if rho.dim() != n {
        return Err(Error::dims("apply_superoperator", n, rho.dim()));
    }
    let r = rho.as_matrix();
    let mut out = ComplexMatrix::zeros(n, n);
    for c in 0..n {
        for a in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for d in 0..n {
                for b in 0..n {
                    acc += sop.x[(a + n * b, c + n * d)] * r[(b, d)];
                }
            }
            out[(a, c)] = acc;
        }
    }
    DensityMatrix::new(out)
}

/// Gram matrix of pairwise overlaps `Tr(rho_j rho_k)`.
pub fn overlap_matrix(states: &[DensityMatrix]) -> Result<DMatrix<f64>> {
    let k = states.len();
    let mut g = DMatrix::zeros(k, k);
    if let Some(first) = states.first() {
        if let Some(bad) = states.iter().find(|s| s.dim() != first.dim()) {
            return Err(Error::dims("overlap_matrix", first.dim(), bad.dim()));
        }
    }
    for i in 0..k {
        for j in i..k {
            let v = raw_trace_product(states[i].matrix(), states[j].matrix())?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Conditional system states `D_j rho0 D_j^dagger` of a bath-diagonal
/// channel, one per bath level.
pub fn branch_states(kraus: &KrausSet, rho0: &DensityMatrix) -> Result<Vec<DensityMatrix>> {
    if kraus.dim != rho0.dim() {
        return Err(Error::dims("branch_states", kraus.dim, rho0.dim()));
    }
    kraus
        .operators
        .iter()
        .map(|e| DensityMatrix::new(e * rho0.as_matrix() * e.adjoint()))
        .collect()
}
