//! Measurement settings, predicted probabilities, the linear design matrix
//! that maps bath weights to probabilities, and seeded synthetic datasets.

use std::collections::HashMap;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{hermitian_eigenvalues, raw_trace_product, ComplexMatrix, DensityMatrix, Hermitian, HermitianObservable};
use crate::rovib::{BathModel, RovibParams};

/// Slack on the `[0, 1]` range for probabilities computed from valid
/// operators and states.
pub const PROBABILITY_TOL: f64 = 1e-10;
/// Empirical probabilities outside this band are rejected outright.
pub const EMPIRICAL_RANGE: (f64, f64) = (-0.05, 1.05);

/// A POVM element `0 <= O <= I` observed at a given delay.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSetting {
    pub id: String,
    operator: HermitianObservable,
    pub time: f64,
}

impl MeasurementSetting {
    pub fn new(id: impl Into<String>, operator: HermitianObservable, time: f64) -> Result<Self> {
        let ev = hermitian_eigenvalues(operator.as_matrix())?;
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if lo < -PROBABILITY_TOL || hi > 1.0 + PROBABILITY_TOL {
            return Err(Error::invariant(
                "povm_element",
                format!("eigenvalues span [{lo:e}, {hi}], outside [0, 1]"),
            ));
        }
        if !time.is_finite() {
            return Err(Error::InvalidInput(format!("setting time must be finite, got {time}")));
        }
        Ok(MeasurementSetting { id: id.into(), operator, time })
    }

    pub fn operator(&self) -> &HermitianObservable {
        &self.operator
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn at_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }
}

/// `Re Tr(O rho)`, checked to be a probability.
pub fn predict_probability(setting: &MeasurementSetting, rho: &DensityMatrix) -> Result<f64> {
    if setting.dim() != rho.dim() {
        return Err(Error::dims("predict_probability", setting.dim(), rho.dim()));
    }
    let p = raw_trace_product(setting.operator.matrix(), rho.matrix())?;
    if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&p) {
        return Err(Error::invariant("probability_range", format!("Tr(O rho) = {p} is not a probability")));
    }
    Ok(p)
}

/// Projector onto `|theta> = n^{-1/2} sum_n e^{i n theta} |n>`.
pub fn phase_probe(dim: usize, theta: f64, time: f64) -> Result<MeasurementSetting> {
    if dim < 2 {
        return Err(Error::InvalidInput("phase probes need dim >= 2".into()));
    }
    let amp = 1.0 / (dim as f64).sqrt();
    let v = DVector::from_iterator(dim, (0..dim).map(|n| C64::from_polar(amp, n as f64 * theta)));
    let op = HermitianObservable::new(&v * v.adjoint())?;
    MeasurementSetting::new(format!("phase:{theta:?}@{time:?}"), op, time)
}

/// Fock-level projector `|n><n|`.
pub fn fock_probe(dim: usize, n: usize, time: f64) -> Result<MeasurementSetting> {
    if n >= dim {
        return Err(Error::InvalidInput(format!("Fock level {n} out of range for dim {dim}")));
    }
    let mut m = ComplexMatrix::zeros(dim, dim);
    m[(n, n)] = C64::new(1.0, 0.0);
    MeasurementSetting::new(format!("fock:{n}@{time:?}"), HermitianObservable::new(m)?, time)
}

/// `count` phase probes with seeded uniform angles in `[0, 2 pi)` and
/// delays in `[0, t_max)`, labelled `g000`, `g001`, ...
pub fn phase_probe_family(dim: usize, count: usize, t_max: f64, seed: u64) -> Result<Vec<MeasurementSetting>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = count.max(1).to_string().len().max(3);
    (0..count)
        .map(|r| {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let t = rng.random::<f64>() * t_max;
            Ok(phase_probe(dim, theta, t)?.with_id(format!("g{r:0width$}")))
        })
        .collect()
}

/// Real linear map from bath weights to predicted probabilities; row `r`
/// holds `Tr(O_r D_j(t_r) rho0 D_j(t_r)^dagger)` for every level `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    c: DMatrix<f64>,
}

/// Singular-value summary of a design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub columns: usize,
    pub full_column_rank: bool,
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// Rank of `C` restricted to the simplex tangent space; the least-squares
    /// minimizer over the simplex is unique only if this is `columns - 1`.
    pub tangent_rank: usize,
    pub non_unique: bool,
}

/// Singular values below `RANK_RTOL * sigma_max` count as zero.
pub const RANK_RTOL: f64 = 1e-10;

fn numerical_rank(m: &DMatrix<f64>) -> (usize, f64, f64) {
    if m.ncols() == 0 || m.nrows() == 0 {
        return (0, 0.0, 0.0);
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = if m.nrows() >= m.ncols() { sv.iter().copied().fold(f64::INFINITY, f64::min) } else { 0.0 };
    let rank = sv.iter().filter(|&&s| s > RANK_RTOL * max).count();
    (rank, max, min)
}

impl DesignMatrix {
    pub fn from_matrix(c: DMatrix<f64>) -> Result<Self> {
        if c.nrows() == 0 || c.ncols() == 0 {
            return Err(Error::InvalidInput("design matrix must be non-empty".into()));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("design matrix entries must be finite".into()));
        }
        Ok(DesignMatrix { c })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn rows(&self) -> usize {
        self.c.nrows()
    }

    pub fn cols(&self) -> usize {
        self.c.ncols()
    }

    /// `C p`.
    pub fn predict(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.cols() {
            return Err(Error::dims("DesignMatrix::predict", self.cols(), weights.len()));
        }
        Ok((&self.c * DVector::from_column_slice(weights)).iter().copied().collect())
    }

    pub fn rank_report(&self) -> RankReport {
        let (rank, sigma_max, sigma_min) = numerical_rank(&self.c);
        let m = self.cols();
        // Tangent directions e_j - e_0 of the simplex.
        let tangent_rank = if m > 1 {
            let z = DMatrix::from_fn(self.rows(), m - 1, |r, j| self.c[(r, j + 1)] - self.c[(r, 0)]);
            numerical_rank(&z).0
        } else {
            0
        };
        RankReport {
            rank,
            columns: m,
            full_column_rank: rank == m,
            sigma_max,
            sigma_min,
            tangent_rank,
            non_unique: tangent_rank + 1 < m,
        }
    }
}

/// Builds `C` for the rotational-dephasing model at `params.lambda`, using
/// each setting's own delay.
pub fn design_matrix(settings: &[MeasurementSetting], rho0: &DensityMatrix, params: &RovibParams) -> Result<DesignMatrix> {
    params.validate()?;
    if settings.is_empty() {
        return Err(Error::InvalidInput("no measurement settings".into()));
    }
    let n = params.dim;
    if rho0.dim() != n {
        return Err(Error::dims("design_matrix initial state", n, rho0.dim()));
    }
    if let Some(bad) = settings.iter().find(|s| s.dim() != n) {
        return Err(Error::dims("design_matrix setting", n, bad.dim()));
    }
    let levels = params.bath_levels();
    let r0 = rho0.as_matrix();
    let mut c = DMatrix::zeros(settings.len(), levels);
    for (row, s) in settings.iter().enumerate() {
        let o = s.operator.as_matrix();
        let t = s.time;
        // amp[d] = sum_{a - b = d} O_ba rho0_ab e^{i d omega t}, d >= 1; the
        // d < 0 terms are complex conjugates.
        let mut amp = vec![C64::new(0.0, 0.0); n];
        for a in 0..n {
            for b in 0..a {
                amp[a - b] += o[(b, a)] * r0[(a, b)];
            }
        }
        let population: f64 = (0..n).map(|a| (o[(a, a)] * r0[(a, a)]).re).sum();
        for (d, v) in amp.iter_mut().enumerate().skip(1) {
            *v *= C64::from_polar(1.0, d as f64 * params.omega * t);
        }
        let theta = params.lambda * t;
        for j in 0..levels {
            let jj = (j * (j + 1)) as f64;
            let mut coh = 0.0;
            for (d, v) in amp.iter().enumerate().skip(1) {
                coh += (v * C64::from_polar(1.0, d as f64 * jj * theta)).re;
            }
            let value = population + 2.0 * coh;
            if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&value) {
                return Err(Error::invariant(
                    "probability_range",
                    format!("design entry ({row}, {j}) = {value} is not a probability"),
                ));
            }
            c[(row, j)] = value;
        }
    }
    DesignMatrix::from_matrix(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub setting_id: String,
    pub t_s: f64,
    pub p_emp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DatasetMeta {
    pub seed: Option<u64>,
    pub noise_sigma: Option<f64>,
    pub source: String,
}

/// Empirical probabilities, one per (setting, delay) record.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub metadata: DatasetMeta,
}

impl Dataset {
    pub fn new(records: Vec<Record>, metadata: DatasetMeta) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if !r.p_emp.is_finite() || !r.t_s.is_finite() {
                return Err(Error::InvalidInput(format!("record {i} has a non-finite value")));
            }
            if r.p_emp < EMPIRICAL_RANGE.0 || r.p_emp > EMPIRICAL_RANGE.1 {
                return Err(Error::invariant(
                    "empirical_range",
                    format!("record {i} ({}) has p_emp = {} outside [-0.05, 1.05]", r.setting_id, r.p_emp),
                ));
            }
        }
        Ok(Dataset { records, metadata })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.p_emp).collect()
    }

    /// Indices of records whose probability lies outside `[0, 1]`. These are
    /// kept as-is; clipping would bias the least-squares fit.
    pub fn out_of_range(&self) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| !(0.0..=1.0).contains(&r.p_emp))
            .map(|(i, _)| i)
            .collect()
    }

    /// One setting per record, looked up by id and moved to the record's
    /// delay.
    pub fn align(&self, settings: &[MeasurementSetting]) -> Result<Vec<MeasurementSetting>> {
        let index: HashMap<&str, &MeasurementSetting> = settings.iter().map(|s| (s.id.as_str(), s)).collect();
        self.records
            .iter()
            .map(|r| {
                index
                    .get(r.setting_id.as_str())
                    .map(|s| (*s).clone().at_time(r.t_s))
                    .ok_or_else(|| Error::InvalidInput(format!("record refers to unknown setting `{}`", r.setting_id)))
            })
            .collect()
    }

    /// CSV with `#` metadata comments and header `setting_id,t_s,p_emp`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Parse(e.to_string());
        writeln!(w, "# format_version={}", crate::matrix_io::FORMAT_VERSION).map_err(io)?;
        let seed = self.metadata.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        let sigma = self.metadata.noise_sigma.map_or_else(|| "none".to_string(), |s| format!("{s:?}"));
        writeln!(w, "# seed={seed},sigma={sigma},source={}", self.metadata.source).map_err(io)?;
        writeln!(w, "setting_id,t_s,p_emp").map_err(io)?;
        for r in &self.records {
            writeln!(w, "{},{:?},{:?}", r.setting_id, r.t_s, r.p_emp).map_err(io)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read_csv<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut meta = DatasetMeta::default();
        for line in text.lines().filter_map(|l| l.strip_prefix('#')) {
            for kv in line.trim().split(',') {
                match kv.split_once('=') {
                    Some(("seed", v)) => meta.seed = v.trim().parse().ok(),
                    Some(("sigma", v)) => meta.noise_sigma = v.trim().parse().ok(),
                    Some(("source", v)) => meta.source = v.trim().to_string(),
                    _ => {}
                }
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["setting_id", "t_s", "p_emp"] {
            return Err(Error::Parse("expected dataset header `setting_id,t_s,p_emp`".into()));
        }
        let mut records = Vec::new();
        for rec in rdr.deserialize() {
            let rec: Record = rec.map_err(|e| Error::Parse(e.to_string()))?;
            records.push(rec);
        }
        Dataset::new(records, meta)
    }
}

/// Noisy synthetic data: `p_emp = C p_true + eps`, `eps ~ N(0, sigma^2)`.
///
/// Record `r` draws its noise from its own ChaCha stream `r` under `seed`, so
/// the output does not depend on evaluation order.
pub fn synth_dataset(
    params: &RovibParams,
    bath_true: &BathModel,
    rho0: &DensityMatrix,
    settings: &[MeasurementSetting],
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("noise sigma must be non-negative, got {noise_sigma}")));
    }
    if bath_true.lambda != params.lambda {
        return Err(Error::InvalidInput(format!(
            "bath coupling {} differs from model coupling {}",
            bath_true.lambda, params.lambda
        )));
    }
    let design = design_matrix(settings, rho0, params)?;
    let model = design.predict(&bath_true.weights)?;
    let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let records = settings
        .iter()
        .zip(model)
        .enumerate()
        .map(|(r, (s, p))| {
            let eps = if noise_sigma == 0.0 {
                0.0
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                normal.sample(&mut rng)
            };
            Record { setting_id: s.id.clone(), t_s: s.time, p_emp: p + eps }
        })
        .collect();
    let meta = DatasetMeta {
        seed: Some(seed),
        noise_sigma: Some(noise_sigma),
        source: "synthetic".into(),
    };
    let ds = Dataset::new(records, meta)?;
    let flagged = ds.out_of_range().len();
    if flagged > 0 {
        log::info!("{flagged} synthetic probabilities fall outside [0, 1]; kept unclipped");
    }
    Ok(ds)
}

/// One entry of a settings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSpec {
    pub id: String,
    pub t_s: f64,
    pub kind: SettingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_file: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingKind {
    PhaseProbe,
    Fock,
    Custom,
}

/// Settings file contents; accepts a bare list or a versioned object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SettingsFile {
    Versioned { format_version: u32, settings: Vec<SettingSpec> },
    List(Vec<SettingSpec>),
}

impl SettingsFile {
    pub fn specs(&self) -> &[SettingSpec] {
        match self {
            SettingsFile::Versioned { settings, .. } => settings,
            SettingsFile::List(s) => s,
        }
    }
}

impl SettingSpec {
    pub fn from_phase_probe(id: &str, theta: f64, t_s: f64) -> Self {
        SettingSpec { id: id.into(), t_s, kind: SettingKind::PhaseProbe, theta: Some(theta), n: None, matrix_file: None }
    }

    /// Builds the setting; `load_matrix` resolves `matrix_file` for custom
    /// operators.
    pub fn build(&self, dim: usize, load_matrix: impl Fn(&str) -> Result<ComplexMatrix>) -> Result<MeasurementSetting> {
        let setting = match self.kind {
            SettingKind::PhaseProbe => {
                let theta = self.theta.ok_or_else(|| Error::InvalidInput(format!("setting `{}` needs theta", self.id)))?;
                phase_probe(dim, theta, self.t_s)?
            }
            SettingKind::Fock => {
                let n = self.n.ok_or_else(|| Error::InvalidInput(format!("setting `{}` needs n", self.id)))?;
                fock_probe(dim, n, self.t_s)?
            }
            SettingKind::Custom => {
                let path = self
                    .matrix_file
                    .as_deref()
                    .ok_or_else(|| Error::InvalidInput(format!("setting `{}` needs matrix_file", self.id)))?;
                let m = load_matrix(path)?;
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::dims("custom setting operator", dim, m.nrows()));
                }
                MeasurementSetting::new(self.id.clone(), HermitianObservable::new(m)?, self.t_s)?
            }
        };
        Ok(setting.with_id(self.id.clone()))
    }
}

/// Same draws as [`phase_probe_family`], returned as settings-file entries.
pub fn phase_probe_family_specs(count: usize, t_max: f64, seed: u64) -> Vec<SettingSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = count.max(1).to_string().len().max(3);
    (0..count)
        .map(|r| {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let t = rng.random::<f64>() * t_max;
            SettingSpec::from_phase_probe(&format!("g{r:0width$}"), theta, t)
        })
        .collect()
}
