//! Rotational-bath dephasing of a harmonic vibrational mode.
//!
//! Bath level `j` shifts the vibrational frequency by `lambda_j =
//! lambda j (j + 1)`, so the Kraus operator for level `j` is the diagonal
//! unitary `D_j = sum_n e^{i n (omega + lambda_j) t} |n><n|`. The rotational
//! degeneracy `2j + 1` lives in the thermal weights, not in the operators,
//! which keeps every `D_j` exactly unitary.
//!
//! Phases follow the Heisenberg-picture `+i` convention. In terms of
//! [`SpectralModel`] this is `omega_n = -n omega`, `kappa_{jn} = -n lambda_j`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::channel::{check_weights, KrausSet, SpectralModel};
use crate::error::{Error, Result};
use crate::operator::{purity, raw_trace_product, ComplexMatrix, DensityMatrix, Hermitian};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Speed of light in cm/s.
pub const SPEED_OF_LIGHT_CM: f64 = 2.997_924_58e10;

/// Default number of rotational levels above the ground level.
pub const DEFAULT_J_MAX: usize = 150;
/// Default cell temperature, 400 degrees Celsius.
pub const DEFAULT_TEMPERATURE_K: f64 = 673.15;
/// Mass fraction the truncated thermal distribution must capture before the
/// truncation warning is raised.
pub const CAPTURED_MASS_TARGET: f64 = 1.0 - 1e-6;

/// Spectroscopic constant in cm^-1 to angular frequency in rad/s.
pub fn wavenumber_to_angular(b_cm_inv: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_CM * b_cm_inv
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RovibParams {
    /// Vibrational angular frequency, rad/s.
    pub omega: f64,
    /// Coupling constant `6 eta^2 B`, 1/s.
    pub lambda: f64,
    /// Number of vibrational levels kept.
    pub dim: usize,
    /// Highest rotational level `J`.
    pub j_max: usize,
}

impl RovibParams {
    pub fn new(omega: f64, lambda: f64, dim: usize, j_max: usize) -> Result<Self> {
        let p = RovibParams { omega, lambda, dim, j_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::invariant("omega_positive", format!("omega = {}", self.omega)));
        }
        if !self.lambda.is_finite() {
            return Err(Error::invariant("lambda_finite", format!("lambda = {}", self.lambda)));
        }
        if self.dim == 0 {
            return Err(Error::invariant("dim_positive", "need at least one vibrational level"));
        }
        Ok(())
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        RovibParams { lambda, ..self }
    }

    pub fn bath_levels(&self) -> usize {
        self.j_max + 1
    }

    /// The same dynamics expressed for the generic bath-diagonal channel.
    pub fn spectral_model(&self) -> SpectralModel {
        let freqs = (0..self.dim).map(|n| -(n as f64) * self.omega).collect();
        let shifts = (0..=self.j_max)
            .map(|j| {
                let lj = lambda_j(self.lambda, j);
                (0..self.dim).map(|n| -(n as f64) * lj).collect()
            })
            .collect();
        SpectralModel::new(freqs, shifts).expect("validated parameters give a finite spectral model")
    }
}

/// Coupling constant and bath-level occupation probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathModel {
    pub lambda: f64,
    pub weights: Vec<f64>,
}

impl BathModel {
    pub fn new(lambda: f64, weights: Vec<f64>) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::invariant("lambda_finite", format!("lambda = {lambda}")));
        }
        check_weights(&weights)?;
        Ok(BathModel { lambda, weights })
    }

    /// All bath population in level `j = 0`.
    pub fn ground(lambda: f64, j_max: usize) -> Self {
        let mut weights = vec![0.0; j_max + 1];
        weights[0] = 1.0;
        BathModel { lambda, weights }
    }

    pub fn j_max(&self) -> usize {
        self.weights.len() - 1
    }
}

/// `lambda j (j + 1)`.
pub fn lambda_j(lambda: f64, j: usize) -> f64 {
    lambda * (j * (j + 1)) as f64
}

/// Normalized thermal occupation of rotational levels `0..=j_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalDistribution {
    pub weights: Vec<f64>,
    /// Fraction of the untruncated partition function inside `0..=j_max`.
    pub captured_mass: f64,
    /// Set when `captured_mass` falls short of [`CAPTURED_MASS_TARGET`].
    pub truncated: bool,
}

/// `p_j ∝ (2j + 1) exp(-hbar B j (j + 1) / (k_B T))` for `j = 0..=j_max`,
/// with `b_rot` the rotational constant as an angular frequency (rad/s).
pub fn thermal_distribution(b_rot: f64, temperature: f64, j_max: usize) -> Result<ThermalDistribution> {
    if !(b_rot.is_finite() && b_rot > 0.0) {
        return Err(Error::InvalidInput(format!("rotational constant must be positive, got {b_rot}")));
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::InvalidInput(format!("temperature must be positive, got {temperature}")));
    }
    let beta = HBAR * b_rot / (K_B * temperature);
    thermal_distribution_reduced(beta, j_max)
}

/// Thermal weights parametrized by the reduced rotational energy
/// `hbar B / (k_B T)`.
pub fn thermal_distribution_reduced(beta: f64, j_max: usize) -> Result<ThermalDistribution> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidInput(format!("reduced rotational energy must be positive, got {beta}")));
    }
    let term = |j: usize| (2 * j + 1) as f64 * (-beta * (j * (j + 1)) as f64).exp();
    let raw: Vec<f64> = (0..=j_max).map(term).collect();
    let kept: f64 = raw.iter().sum();

    // Tail beyond j_max, summed until terms stop contributing.
    let mut tail = 0.0;
    let mut j = j_max + 1;
    loop {
        let t = term(j);
        tail += t;
        if t <= f64::EPSILON * 1e-3 * (kept + tail) && (j * (j + 1)) as f64 * beta > 1.0 {
            break;
        }
        j += 1;
    }
    let captured_mass = kept / (kept + tail);
    let truncated = captured_mass < CAPTURED_MASS_TARGET;
    if truncated {
        log::warn!("thermal distribution truncated at j_max = {j_max}: captures {captured_mass:.6} of the mass");
    }
    Ok(ThermalDistribution {
        weights: raw.iter().map(|w| w / kept).collect(),
        captured_mass,
        truncated,
    })
}

/// Rotational level of maximal thermal weight in the continuum
/// approximation, `sqrt(k_B T / (2 hbar B)) - 1/2`.
pub fn thermal_peak_estimate(beta: f64) -> f64 {
    (1.0 / (2.0 * beta)).sqrt() - 0.5
}

/// Diagonal Kraus set `D_j = diag(e^{i n (omega + lambda_j) t})`.
pub fn dephasing_kraus(params: &RovibParams, weights: &[f64], t: f64) -> Result<KrausSet> {
    params.validate()?;
    if weights.len() != params.bath_levels() {
        return Err(Error::dims("dephasing_kraus weights", params.bath_levels(), weights.len()));
    }
    let ops = (0..=params.j_max)
        .map(|j| {
            let rate = params.omega + lambda_j(params.lambda, j);
            let diag: Vec<C64> = (0..params.dim).map(|n| C64::from_polar(1.0, n as f64 * rate * t)).collect();
            ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
        })
        .collect();
    KrausSet::new(ops, weights.to_vec())
}

/// Bath-averaged phase `sum_j p_j e^{i d lambda j(j+1) t}` for a coherence
/// `d = n - m` levels off the diagonal.
pub fn coherence_envelope(lambda: f64, weights: &[f64], d: i64, t: f64) -> C64 {
    // Phases are carried in half-turns: `k * theta = pi * k * r`. The product
    // `k * r` is split exactly (two-product) and reduced modulo 2 before the
    // final scaling, so large `k` adds no rounding and `t = pi / lambda`
    // (r = 1, k even) lands on a whole number of turns.
    let r = lambda * t / PI;
    let mut acc = C64::new(0.0, 0.0);
    for (j, &p) in weights.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let k = (d * (j * (j + 1)) as i64) as f64;
        let hi = k * r;
        let lo = k.mul_add(r, -hi);
        let half_turns = hi % 2.0 + lo;
        acc += C64::from_polar(p, PI * half_turns);
    }
    acc
}

fn check_bath(params: &RovibParams, bath: &BathModel) -> Result<()> {
    params.validate()?;
    if bath.weights.len() != params.bath_levels() {
        return Err(Error::dims("bath weights", params.bath_levels(), bath.weights.len()));
    }
    if bath.lambda != params.lambda {
        return Err(Error::InvalidInput(format!(
            "bath coupling {} differs from model coupling {}",
            bath.lambda, params.lambda
        )));
    }
    Ok(())
}

/// Forward evolution `rho(t) = sum_j p_j D_j rho0 D_j^dagger`, evaluated as
/// `<n|rho(t)|m> = <n|rho0|m> e^{i(n-m) omega t} sum_j p_j e^{i (n-m) lambda_j t}`.
///
/// `bath.lambda` must equal `params.lambda`.
pub fn evolve(rho0: &DensityMatrix, params: &RovibParams, bath: &BathModel, t: f64) -> Result<DensityMatrix> {
    check_bath(params, bath)?;
    if rho0.dim() != params.dim {
        return Err(Error::dims("evolve", params.dim, rho0.dim()));
    }
    DensityMatrix::new(evolve_unchecked(rho0.as_matrix(), params, &bath.weights, t))
}

pub(crate) fn evolve_unchecked(r0: &ComplexMatrix, params: &RovibParams, weights: &[f64], t: f64) -> ComplexMatrix {
    if t == 0.0 {
        // Every phase is exactly 1; skip the weight sum and its rounding.
        return r0.clone();
    }
    let n = params.dim;
    let factors: Vec<C64> = (0..n as i64)
        .map(|d| C64::from_polar(1.0, d as f64 * params.omega * t) * coherence_envelope(params.lambda, weights, d, t))
        .collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for a in 0..n {
        out[(a, a)] = r0[(a, a)];
        for b in (a + 1)..n {
            // Row index a < b, so the coherence offset is d = a - b < 0.
            let v = r0[(a, b)] * factors[b - a].conj();
            out[(a, b)] = v;
            out[(b, a)] = v.conj();
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub t_s: f64,
    pub purity: f64,
    pub max_offdiag: f64,
    /// `Tr(rho0 rho(t))`.
    pub overlap0: f64,
}

/// Purity, largest coherence and overlap with the initial state along a
/// time grid.
pub fn coherence_decay(
    rho0: &DensityMatrix,
    params: &RovibParams,
    bath: &BathModel,
    t_grid: &[f64],
) -> Result<Vec<DecayRow>> {
    if t_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidInput("time grid must be ascending".into()));
    }
    t_grid
        .iter()
        .map(|&t| {
            let rho = evolve(rho0, params, bath, t)?;
            Ok(DecayRow {
                t_s: t,
                purity: purity(&rho),
                max_offdiag: rho.max_coherence(),
                overlap0: raw_trace_product(rho0.matrix(), rho.matrix())?,
            })
        })
        .collect()
}

/// Decay table as CSV with header `t_s,purity,max_offdiag,overlap0`.
pub fn decay_table_csv(rows: &[DecayRow]) -> String {
    let mut s = String::from("t_s,purity,max_offdiag,overlap0\n");
    for r in rows {
        s.push_str(&format!("{:?},{:?},{:?},{:?}\n", r.t_s, r.purity, r.max_offdiag, r.overlap0));
    }
    s
}
