use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, MatrixSpec, SweepPoint};
use super::results::{SeRow, SweepRow};
use crate::amp::{generate_instance, mse, run_amp_recording, AmpTrace, Model, NetworkSpec};
use crate::error::Result;
use crate::par;
use crate::se::{se_run, SeParams, SeTrace};

/// Stream bit reserved for the dense twin of a trial.
const DENSE_STREAM: u64 = 1 << 63;

/// Per-trial generator derived from `(seed, sweep point, trial)` only, so
/// that results do not depend on execution order.
pub fn child_rng(seed: u64, point: usize, trial: usize, dense: bool) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stream = ((point as u64) << 32) | trial as u64;
    if dense {
        stream |= DENSE_STREAM;
    }
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
struct TrialResult {
    mse: Vec<f64>,
    converged: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    /// Same sweep on dense Gaussian matrices, when `paired_dense` is set.
    pub dense_rows: Option<Vec<SweepRow>>,
    /// Number of trials that stopped on a non-finite iterate.
    pub diverged_trials: usize,
}

fn se_params(model: &Model, specs: &[MatrixSpec]) -> Result<SeParams> {
    SeParams::new(model.clone(), specs.iter().map(MatrixSpec::aspect_ratio).collect())
}

fn run_trial(
    cfg: &ExperimentConfig,
    point: &SweepPoint,
    specs: &[MatrixSpec],
    model: &Model,
    trial: usize,
    dense: bool,
) -> Result<(TrialResult, bool)> {
    let mut rng = child_rng(cfg.seed, point.index, trial, dense);
    let ops = specs
        .iter()
        .map(|s| if dense { s.dense_counterpart() } else { s.clone() }.sample(cfg.matvec_path, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let spec = NetworkSpec::new(model.clone(), ops)?;
    let truth = generate_instance(&spec, &mut rng)?;
    let out = run_amp_recording(&spec, &truth.y, Some(&truth.x0), &cfg.amp)?;
    let mut curve = out.trace.mse;
    if curve.is_empty() {
        curve.push(mse(&vec![0.0; truth.x0.len()], &truth.x0)?);
    }
    Ok((TrialResult { mse: curve, converged: out.trace.converged }, out.error.is_some()))
}

fn aggregate(beta: f64, rho: f64, trials: &[TrialResult], se: &SeTrace) -> Vec<SweepRow> {
    let n = trials.len();
    let horizon = trials.iter().map(|t| t.mse.len()).max().unwrap_or(1);
    (1..=horizon)
        .map(|iter| {
            let vals: Vec<f64> = trials.iter().map(|t| t.mse[iter.min(t.mse.len()) - 1]).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let stderr = if n > 1 {
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            let done = trials.iter().filter(|t| t.converged && t.mse.len() <= iter).count();
            SweepRow {
                beta,
                rho,
                iter,
                mse_amp_mean: mean,
                mse_amp_stderr: stderr,
                mse_se: se.mse[iter.min(se.mse.len() - 1)],
                n_trials: n,
                converged_fraction: done as f64 / n as f64,
            }
        })
        .collect()
}

fn run_point(cfg: &ExperimentConfig, point: &SweepPoint, dense: bool, se: &SeTrace) -> Result<(Vec<SweepRow>, usize)> {
    let specs = cfg.matrices_at(point)?;
    let model = cfg.model_at(point);
    let results = par::map_range(cfg.trials, |trial| run_trial(cfg, point, &specs, &model, trial, dense));
    let mut trials = Vec::with_capacity(results.len());
    let mut diverged = 0;
    for r in results {
        let (t, div) = r?;
        diverged += div as usize;
        trials.push(t);
    }
    Ok((aggregate(cfg.beta_label(point), cfg.rho_label(point), &trials, se), diverged))
}

/// State-evolution trace at one sweep point.
pub fn se_at(cfg: &ExperimentConfig, point: &SweepPoint) -> Result<SeTrace> {
    let specs = cfg.matrices_at(point)?;
    se_run(&se_params(&cfg.model_at(point), &specs)?, &cfg.se)
}

/// `trials` AMP runs and one SE run per sweep point, aggregated per iteration.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut dense_rows = cfg.paired_dense.then(Vec::new);
    let mut diverged_trials = 0;
    for point in cfg.points() {
        let se = se_at(cfg, &point)?;
        let (r, d) = run_point(cfg, &point, false, &se)?;
        rows.extend(r);
        diverged_trials += d;
        if let Some(dr) = dense_rows.as_mut() {
            let (r, d) = run_point(cfg, &point, true, &se)?;
            dr.extend(r);
            diverged_trials += d;
        }
    }
    Ok(SweepOutput { rows, dense_rows, diverged_trials })
}

/// Per-layer SE traces for every sweep point; iteration 0 is the start.
pub fn run_se_sweep(cfg: &ExperimentConfig) -> Result<Vec<SeRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for point in cfg.points() {
        let trace = se_at(cfg, &point)?;
        let (beta, rho) = (cfg.beta_label(&point), cfg.rho_label(&point));
        for (iter, (m, m_hat)) in trace.m.iter().zip(&trace.m_hat).enumerate() {
            for layer in 0..m.len() {
                rows.push(SeRow { beta, rho, iter, layer: layer + 1, m: m[layer], m_hat: m_hat[layer], mse_se: trace.mse[iter] });
            }
        }
    }
    Ok(rows)
}

/// A single AMP instance (first sweep point, trial 0) next to its SE trace.
#[derive(Debug, Clone)]
pub struct SingleRun {
    pub beta: f64,
    pub rho: f64,
    pub amp: AmpTrace,
    pub se: SeTrace,
    /// Set when AMP stopped on a non-finite iterate.
    pub diverged: Option<String>,
}

pub fn run_single(cfg: &ExperimentConfig) -> Result<SingleRun> {
    cfg.validate()?;
    let point = cfg.points()[0];
    let specs = cfg.matrices_at(&point)?;
    let model = cfg.model_at(&point);
    let mut rng = child_rng(cfg.seed, point.index, 0, false);
    let ops = specs.iter().map(|s| s.sample(cfg.matvec_path, &mut rng)).collect::<Result<Vec<_>>>()?;
    let spec = NetworkSpec::new(model.clone(), ops)?;
    let truth = generate_instance(&spec, &mut rng)?;
    let out = run_amp_recording(&spec, &truth.y, Some(&truth.x0), &cfg.amp)?;
    let se = se_run(&se_params(&model, &specs)?, &cfg.se)?;
    Ok(SingleRun {
        beta: cfg.beta_label(&point),
        rho: cfg.rho_label(&point),
        amp: out.trace,
        se,
        diverged: out.error.map(|e| e.to_string()),
    })
}
