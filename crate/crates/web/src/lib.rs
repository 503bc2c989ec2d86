//! WebAssembly bindings for the demo page in `www/`. Each exported function
//! has a plain Rust counterpart so the logic is testable natively.

use convamp::amp::{generate_instance, run_amp, AmpOpts, Model, NetworkSpec};
use convamp::channels::{Channel, Prior};
use convamp::ensembles::{build_permutations, sample_mcc, LinearOperator, MatvecPath};
use convamp::se::{se_run, SeOpts, SeParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

fn sparse_model(rho: f64, sigma2: f64) -> Model {
    Model::single_layer(Channel::Awgn { sigma2 }, Prior::GaussBernoulli { rho })
}

fn se_trace(beta: f64, rho: f64, sigma2: f64, iters: usize) -> Result<Vec<f64>, String> {
    let params = SeParams::new(sparse_model(rho, sigma2), vec![beta]).map_err(|e| e.to_string())?;
    let opts = SeOpts { max_iter: iters, tol: 1e-12, quadrature_nodes: 41 };
    let mut mse = se_run(&params, &opts).map_err(|e| e.to_string())?.mse;
    // Pad to a fixed length so curves line up after early convergence.
    let last = *mse.last().expect("trace starts with the initial point");
    mse.resize(iters + 1, last);
    Ok(mse)
}

/// SE MSE after `iters` iterations for each `β` in `betas`.
pub fn final_mse_by_beta(betas: &[f64], rho: f64, sigma2: f64, iters: usize) -> Result<Vec<f64>, String> {
    betas.iter().map(|&b| se_trace(b, rho, sigma2, iters).map(|t| t[iters])).collect()
}

/// Original and permuted dense realizations of a sampled MCC matrix.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Heatmap {
    rows: usize,
    cols: usize,
    block_structure: bool,
    original: Vec<f64>,
    permuted: Vec<f64>,
}

#[wasm_bindgen]
impl Heatmap {
    #[wasm_bindgen(getter)]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[wasm_bindgen(getter)]
    pub fn cols(&self) -> usize {
        self.cols
    }
    /// Whether the permuted matrix is exactly block-circulant.
    #[wasm_bindgen(getter, js_name = blockStructure)]
    pub fn block_structure(&self) -> bool {
        self.block_structure
    }
    #[wasm_bindgen(getter)]
    pub fn original(&self) -> Vec<f64> {
        self.original.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn permuted(&self) -> Vec<f64> {
        self.permuted.clone()
    }
}

pub fn heatmap(d: usize, p: usize, q: usize, k: usize, seed: u64) -> Result<Heatmap, String> {
    if d * q * p * q > 1 << 16 {
        return Err("matrix too large to draw; keep D·q·P·q ≤ 65536".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = sample_mcc(d, p, q, k, &mut rng).map_err(|e| e.to_string())?;
    let pp = build_permutations(d, p, q, k).map_err(|e| e.to_string())?;
    let dense = m.to_dense();
    let permuted = pp.permute_matrix(&dense).map_err(|e| e.to_string())?;
    Ok(Heatmap {
        rows: dense.rows(),
        cols: dense.cols(),
        block_structure: pp.check_block_circulant(&permuted).is_ok(),
        original: dense.data().to_vec(),
        permuted: permuted.data().to_vec(),
    })
}

/// Per-iteration MSE of one AMP run on an MCC instance with `P·q` unknowns,
/// followed by the SE prediction of the same length: `[amp..., se...]`.
#[allow(clippy::too_many_arguments)]
pub fn amp_against_se(
    p: usize,
    q: usize,
    k: usize,
    beta: f64,
    rho: f64,
    sigma2: f64,
    iters: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let d = (beta * p as f64).round() as usize;
    if d == 0 {
        return Err(format!("β = {beta} leaves no measurements"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = sample_mcc(d, p, q, k, &mut rng).map_err(|e| e.to_string())?;
    let spec = NetworkSpec::new(sparse_model(rho, sigma2), vec![LinearOperator::mcc(w, MatvecPath::Fft)])
        .map_err(|e| e.to_string())?;
    let truth = generate_instance(&spec, &mut rng).map_err(|e| e.to_string())?;
    let opts = AmpOpts { max_iter: iters, tol: 1e-12, damping: 0.0 };
    let (_, trace) = run_amp(&spec, &truth.y, Some(&truth.x0), &opts).map_err(|e| e.to_string())?;
    let mut amp = trace.mse;
    let last = *amp.last().expect("at least one iteration");
    amp.resize(iters, last);
    let se = se_trace(d as f64 / p as f64, rho, sigma2, iters)?;
    amp.extend_from_slice(&se[1..]);
    Ok(amp)
}

#[wasm_bindgen(js_name = finalMseByBeta)]
pub fn final_mse_by_beta_js(betas: Vec<f64>, rho: f64, sigma2: f64, iters: usize) -> Result<Vec<f64>, JsError> {
    final_mse_by_beta(&betas, rho, sigma2, iters).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = permutationHeatmap)]
pub fn heatmap_js(d: usize, p: usize, q: usize, k: usize, seed: u32) -> Result<Heatmap, JsError> {
    heatmap(d, p, q, k, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = ampAgainstSe)]
#[allow(clippy::too_many_arguments)]
pub fn amp_against_se_js(
    p: usize,
    q: usize,
    k: usize,
    beta: f64,
    rho: f64,
    sigma2: f64,
    iters: usize,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    amp_against_se(p, q, k, beta, rho, sigma2, iters, seed as u64).map_err(|e| JsError::new(&e))
}
