//! Wigner quasi-probability of a truncated-oscillator state.
//!
//! With `alpha = (q + i p) / sqrt(2)`,
//! `W(q, p) = (1/pi) Tr[rho D(alpha) P D(alpha)^dagger]`, where `P` is the
//! parity operator. Its Fock matrix elements are closed-form in generalized
//! Laguerre polynomials, so the function is exact for any finite state.
//! `W` integrates to one over `dq dp`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::DensityMatrix;

/// Largest supported dimension; beyond it the Laguerre terms lose accuracy
/// on typical plotting ranges.
pub const MAX_WIGNER_DIM: usize = 60;

/// `L_0^{(k)}(x) .. L_{n_max}^{(k)}(x)` by the three-term recurrence.
fn laguerre_column(n_max: usize, k: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let k = k as f64;
    out.push(1.0);
    if n_max >= 1 {
        out.push(1.0 + k - x);
    }
    for i in 1..n_max {
        let fi = i as f64;
        let next = ((2.0 * fi + 1.0 + k - x) * out[i] - (fi + k) * out[i - 1]) / (fi + 1.0);
        out.push(next);
    }
    out
}

/// Displaced-parity matrix `A = D(alpha) P D(alpha)^dagger` in the Fock
/// basis, truncated to `dim`.
fn displaced_parity(dim: usize, alpha: C64) -> Vec<C64> {
    let x = 4.0 * alpha.norm_sqr();
    let gauss = (-2.0 * alpha.norm_sqr()).exp();
    let two_alpha = alpha * 2.0;
    let mut a = vec![C64::new(0.0, 0.0); dim * dim];
    for k in 0..dim {
        let lag = laguerre_column(dim - 1 - k, k, x);
        let pow = two_alpha.powu(k as u32);
        // sqrt(n! / (n + k)!) built up incrementally in n.
        let mut ratio = (1..=k).fold(1.0, |acc, i| acc / (i as f64).sqrt());
        for n in 0..dim - k {
            if n > 0 {
                ratio *= (n as f64 / (n + k) as f64).sqrt();
            }
            let m = n + k;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let v = pow * (sign * ratio * gauss * lag[n]);
            a[m + dim * n] = v;
            a[n + dim * m] = v.conj();
        }
    }
    a
}

/// Value of the Wigner function at phase-space point `(q, p)`.
pub fn wigner_point(rho: &DensityMatrix, q: f64, p: f64) -> Result<f64> {
    let dim = rho.as_matrix().nrows();
    check_dim(dim)?;
    Ok(wigner_with(rho, dim, q, p))
}

fn check_dim(dim: usize) -> Result<()> {
    if dim > MAX_WIGNER_DIM {
        return Err(Error::InvalidInput(format!(
            "Wigner evaluation supports dimension up to {MAX_WIGNER_DIM}, got {dim}"
        )));
    }
    Ok(())
}

fn wigner_with(rho: &DensityMatrix, dim: usize, q: f64, p: f64) -> f64 {
    let alpha = C64::new(q, p) / 2f64.sqrt();
    let a = displaced_parity(dim, alpha);
    let r = rho.as_matrix();
    let mut acc = C64::new(0.0, 0.0);
    for m in 0..dim {
        for n in 0..dim {
            acc += r[(n, m)] * a[m + dim * n];
        }
    }
    acc.re / PI
}

/// Wigner function sampled on a rectangular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `values[i][k] = W(q[i], p[k])`.
    pub values: Vec<Vec<f64>>,
}

impl WignerGrid {
    /// Long-format CSV with header `q,p,w`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("q,p,w\n");
        for (i, q) in self.q.iter().enumerate() {
            for (k, p) in self.p.iter().enumerate() {
                s.push_str(&format!("{q:?},{p:?},{:?}\n", self.values[i][k]));
            }
        }
        s
    }

    /// Riemann-sum estimate of the normalization on a uniform grid.
    pub fn integral(&self) -> f64 {
        let step = |v: &[f64]| if v.len() > 1 { (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64 } else { 0.0 };
        let (dq, dp) = (step(&self.q), step(&self.p));
        self.values.iter().flatten().sum::<f64>() * dq * dp
    }
}

/// `n` evenly spaced points covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn wigner_grid(rho: &DensityMatrix, q: &[f64], p: &[f64]) -> Result<WignerGrid> {
    let dim = rho.as_matrix().nrows();
    check_dim(dim)?;
    if q.iter().chain(p).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("Wigner grid coordinates must be finite".into()));
    }
    let values = q.iter().map(|&qi| p.iter().map(|&pk| wigner_with(rho, dim, qi, pk)).collect()).collect();
    Ok(WignerGrid { q: q.to_vec(), p: p.to_vec(), values })
}
