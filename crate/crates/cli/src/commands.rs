//! The subcommands. Each one loads inputs, calls the library, and writes
//! files; no numerics live here.

use std::fs;
use std::path::{Path, PathBuf};

use dephaser::channel::{build_superoperator, Superoperator};
use dephaser::estimator::{unknown_counts, EstimationProblem, SolverOptions, UnknownCounts};
use dephaser::matrix_io::MatrixJson;
use dephaser::measurement::{synth_dataset, Dataset, RankReport};
use dephaser::operator::{DensityMatrix, Hermitian};
use dephaser::rovib::{coherence_decay, decay_table_csv, dephasing_kraus, evolve, BathModel};
use dephaser::wigner::{linspace, wigner_grid};
use serde::{Deserialize, Serialize};

use crate::config::{read_state, read_weights, weights_csv, Loaded};
use crate::error::{CliError, CliResult, Context};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Shared command context: configuration plus output directory.
pub struct Env {
    pub loaded: Loaded,
    pub out: PathBuf,
}

impl Env {
    fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::write(&self.out, e))?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| CliError::write(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    fn dataset_path(&self) -> PathBuf {
        match &self.loaded.config.dataset {
            Some(p) => self.loaded.resolve(p),
            None => self.out.join("dataset.csv"),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatesFile {
    pub format_version: u32,
    pub times_s: Vec<f64>,
    pub states: Vec<MatrixJson>,
}

pub fn simulate(env: &Env) -> CliResult<()> {
    let params = env.loaded.params()?;
    let bath = env.loaded.bath()?;
    let rho0 = env.loaded.initial_state()?;
    let cfg = &env.loaded.config.simulate;
    if cfg.times_s.is_empty() {
        return Err(CliError::Config("simulate.times_s must list at least one time".into()));
    }

    let states: Vec<DensityMatrix> = cfg
        .times_s
        .iter()
        .map(|&t| evolve(&rho0, &params, &bath, t).context(|| format!("evolve at t = {t:e} s")))
        .collect::<CliResult<_>>()?;
    let doc = StatesFile {
        format_version: REPORT_FORMAT_VERSION,
        times_s: cfg.times_s.clone(),
        states: states
            .iter()
            .map(|s| MatrixJson::from_matrix(s.as_matrix()).context(|| "state".into()))
            .collect::<CliResult<_>>()?,
    };
    env.write_json("states.json", &doc)?;

    let decay_times = match &cfg.decay_times_s {
        Some(t) => t.clone(),
        None => {
            let t_end = cfg.times_s.iter().copied().fold(0.0, f64::max);
            linspace(0.0, t_end, 101)
        }
    };
    let rows = coherence_decay(&rho0, &params, &bath, &decay_times).context(|| "decay table".into())?;
    env.write("decay.csv", &decay_table_csv(&rows))?;

    if cfg.wigner {
        let w = &env.loaded.config.wigner;
        let axis = linspace(-w.range, w.range, w.points);
        let last = states.last().expect("times_s is non-empty");
        let initial = wigner_grid(&rho0, &axis, &axis).context(|| "Wigner grid".into())?;
        let fin = wigner_grid(last, &axis, &axis).context(|| "Wigner grid".into())?;
        env.write("wigner_initial.csv", &initial.to_csv())?;
        env.write("wigner_final.csv", &fin.to_csv())?;
    }

    if let Some(row) = rows.last() {
        println!(
            "simulated {} times; at t = {:e} s purity {:.6}, overlap with initial {:.6} (initial purity {:.6})",
            cfg.times_s.len(),
            row.t_s,
            row.purity,
            row.overlap0,
            rows[0].purity
        );
    }
    Ok(())
}

pub fn synth(env: &Env, seed: u64) -> CliResult<()> {
    let params = env.loaded.params()?;
    let bath = env.loaded.bath()?;
    let rho0 = env.loaded.initial_state()?;
    let settings = env.loaded.settings()?;
    let sigma = env.loaded.config.noise_sigma;
    let ds = synth_dataset(&params, &bath, &rho0, &settings, sigma, seed).context(|| "synthetic dataset".into())?;
    let path = env.dataset_path();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    }
    let text = ds.to_csv_string().context(|| "dataset".into())?;
    fs::write(&path, text).map_err(|e| CliError::write(&path, e))?;
    if env.loaded.config.settings.is_none() {
        let specs = env.loaded.setting_specs()?;
        env.write_json(
            "settings.json",
            &serde_json::json!({ "format_version": REPORT_FORMAT_VERSION, "settings": specs }),
        )?;
    }
    println!("wrote {} records (sigma = {sigma:e}, seed = {seed}) to {}", ds.len(), path.display());
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedReport {
    pub lambda: f64,
    pub objective: f64,
    pub p_hat: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub format_version: u32,
    pub lambda_grid: Vec<f64>,
    pub objectives: Vec<f64>,
    pub best_lambda: f64,
    pub p_hat: Vec<f64>,
    pub objective: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_violation: f64,
    pub rank_flags: RankReport,
    pub convex_flag: bool,
    pub boundary_flag: bool,
    pub refined: Option<RefinedReport>,
    pub unknown_count_comparison: UnknownCounts,
}

pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let file = fs::File::open(path).map_err(|e| CliError::read(path, e))?;
    Dataset::read_csv(file).context(|| format!("dataset `{}`", path.display()))
}

pub fn estimate(env: &Env) -> CliResult<EstimateReport> {
    let params = env.loaded.params()?;
    let rho0 = env.loaded.initial_state()?;
    let dataset = read_dataset(&env.dataset_path())?;
    let settings = env.loaded.settings()?;
    let est = &env.loaded.config.estimator;
    let grid = est.lambda_grid.values()?;
    let options = SolverOptions { max_iter: est.max_iter, ..SolverOptions::default() };
    let problem = EstimationProblem::new(&dataset, &rho0, &params, &settings)
        .context(|| "estimation inputs".into())?
        .with_options(options);
    let sweep = problem.sweep(&grid).context(|| "lambda sweep".into())?;

    let refined = match est.tol {
        Some(tol) if sweep.convex_flag && !sweep.boundary_flag => {
            let r = problem.refine(&sweep, tol).context(|| "lambda refinement".into())?;
            Some(RefinedReport {
                lambda: r.lambda,
                objective: r.result.objective,
                p_hat: r.result.weights,
                evaluations: r.evaluations,
            })
        }
        Some(_) => {
            log::warn!(
                "refinement skipped: sweep is {} with minimum {}; extend the lambda grid",
                if sweep.convex_flag { "convex" } else { "not convex" },
                if sweep.boundary_flag { "at the grid edge" } else { "interior" }
            );
            None
        }
        None => None,
    };

    let best = &sweep.best_result;
    let report = EstimateReport {
        format_version: REPORT_FORMAT_VERSION,
        lambda_grid: sweep.lambda_grid.clone(),
        objectives: sweep.objectives.clone(),
        best_lambda: sweep.best_lambda,
        p_hat: best.weights.clone(),
        objective: best.objective,
        residual_norm: best.residual_norm,
        iterations: best.iterations,
        converged: best.converged,
        kkt_violation: best.kkt_violation,
        rank_flags: best.rank.clone(),
        convex_flag: sweep.convex_flag,
        boundary_flag: sweep.boundary_flag,
        refined,
        unknown_count_comparison: unknown_counts(params.dim, params.j_max),
    };

    env.write_json("estimate_report.json", &report)?;
    let p_out = report.refined.as_ref().map_or(&report.p_hat, |r| &r.p_hat);
    env.write("p_hat.csv", &weights_csv(p_out))?;
    let mut curve = String::from("lambda,L\n");
    for (l, v) in sweep.lambda_grid.iter().zip(&sweep.objectives) {
        curve.push_str(&format!("{l:?},{v:?}\n"));
    }
    env.write("objective.csv", &curve)?;

    println!("best lambda {:e} 1/s, L = {:e}", report.best_lambda, report.objective);
    if let Some(r) = &report.refined {
        println!("refined lambda {:e} 1/s, L = {:e}", r.lambda, r.objective);
    }
    if report.boundary_flag {
        println!("warning: the minimum lies on the grid edge; extend the lambda grid");
    }
    print_unknown_counts(&report.unknown_count_comparison, params.dim);
    Ok(report)
}

fn print_unknown_counts(u: &UnknownCounts, dim: usize) {
    println!(
        "unknowns at dim {dim}: blind process tomography {}, state tomography {}, this model {}",
        u.blind_process_tomography, u.state_tomography, u.parametrized
    );
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub format_version: u32,
    pub dim: usize,
    pub lambda: f64,
    pub t_s: f64,
    pub psd_defect: f64,
    pub trace_preservation_defect: f64,
    pub hermiticity_defect: f64,
    pub unknown_count_comparison: UnknownCounts,
}

pub struct ChannelArgs {
    pub lambda: Option<f64>,
    pub weights: Option<PathBuf>,
    pub t: Option<f64>,
}

pub fn channel(env: &Env, args: &ChannelArgs) -> CliResult<Superoperator> {
    let cfg = &env.loaded.config.channel;
    let lambda = args.lambda.or(cfg.lambda).unwrap_or(env.loaded.config.model.lambda);
    let t = args.t.unwrap_or(cfg.t_s);
    let params = env.loaded.params()?.with_lambda(lambda);
    let weights = match args.weights.as_deref().or(cfg.weights.as_deref()) {
        Some(p) => {
            let path = if args.weights.is_some() { p.to_path_buf() } else { env.loaded.resolve(p) };
            read_weights(&path)?
        }
        None => env.loaded.bath_weights()?,
    };
    BathModel::new(lambda, weights.clone()).context(|| "channel weights".into())?;
    let kraus = dephasing_kraus(&params, &weights, t).context(|| "channel weights".into())?;
    let x = build_superoperator(&kraus).context(|| "superoperator".into())?;

    env.write_json("superoperator.json", &x.to_json())?;
    let (re, im) = x.to_csv_grids();
    env.write("superoperator_re.csv", &re)?;
    env.write("superoperator_im.csv", &im)?;
    let report = ChannelReport {
        format_version: REPORT_FORMAT_VERSION,
        dim: x.dim(),
        lambda,
        t_s: t,
        psd_defect: x.psd_defect(),
        trace_preservation_defect: x.trace_preservation_defect(),
        hermiticity_defect: x.hermiticity_defect(),
        unknown_count_comparison: unknown_counts(params.dim, params.j_max),
    };
    env.write_json("channel_report.json", &report)?;
    let n2 = x.dim() * x.dim();
    println!(
        "superoperator {n2}x{n2}: psd defect {:e}, trace-preservation defect {:e}",
        report.psd_defect, report.trace_preservation_defect
    );
    print_unknown_counts(&report.unknown_count_comparison, params.dim);
    Ok(x)
}

pub struct WignerArgs {
    pub state: Option<PathBuf>,
    pub t: Option<f64>,
}

pub fn wigner(env: &Env, args: &WignerArgs) -> CliResult<()> {
    let rho = match &args.state {
        Some(p) => read_state(p)?,
        None => env.loaded.initial_state()?,
    };
    let rho = match args.t {
        Some(t) => {
            let params = env.loaded.params()?;
            if rho.dim() != params.dim {
                return Err(CliError::Config(format!(
                    "state dimension {} differs from model.dim {}",
                    rho.dim(),
                    params.dim
                )));
            }
            evolve(&rho, &params, &env.loaded.bath()?, t).context(|| format!("evolve at t = {t:e} s"))?
        }
        None => rho,
    };
    let w = &env.loaded.config.wigner;
    let axis = linspace(-w.range, w.range, w.points);
    let grid = wigner_grid(&rho, &axis, &axis).context(|| "Wigner grid".into())?;
    let path = env.write("wigner.csv", &grid.to_csv())?;
    println!("wrote {}x{} Wigner grid to {} (integral {:.6})", w.points, w.points, path.display(), grid.integral());
    Ok(())
}
