//! Multi-layer AMP over a chain of linear operators and separable channels.
//!
//! Layer `l` (1-based, `l = 1..=L`) maps `h^(l)` (length `n_l`) to
//! `z^(l) = W^(l) h^(l)` (length `n_{l-1}`), followed by the channel
//! `h^(l-1) = φ^(l)(z^(l))`. `h^(L)` is the signal and `h^(0)` the observation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{apply_channel, sample_channel_with_noise, Channel, DenoiserOutput, Prior};
use crate::ensembles::LinearOperator;
use crate::error::{invalid, Error, Result};
use crate::par;
use crate::special::{floor_var, VARIANCE_FLOOR};

/// Channels and prior of an `L`-layer model, independent of the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    /// `φ^(1)`, producing the observation.
    pub output_channel: Channel,
    /// `φ^(l)` for `l = 2..=L`, in that order.
    pub hidden_channels: Vec<Channel>,
    pub prior: Prior,
}

impl Model {
    pub fn single_layer(output_channel: Channel, prior: Prior) -> Self {
        Self { output_channel, hidden_channels: Vec::new(), prior }
    }

    /// Number of layers `L`.
    pub fn depth(&self) -> usize {
        self.hidden_channels.len() + 1
    }

    /// The channel `φ^(l)` that follows `W^(l)`.
    pub fn channel(&self, l: usize) -> &Channel {
        assert!(l >= 1 && l <= self.depth(), "layer index {l} out of range");
        if l == 1 {
            &self.output_channel
        } else {
            &self.hidden_channels[l - 2]
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.output_channel.validate()?;
        for ch in &self.hidden_channels {
            ch.validate()?;
        }
        self.prior.validate()
    }
}

/// A model together with its weight matrices `W^(1), ..., W^(L)`.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    model: Model,
    operators: Vec<LinearOperator>,
}

impl NetworkSpec {
    pub fn new(model: Model, operators: Vec<LinearOperator>) -> Result<Self> {
        model.validate()?;
        if operators.len() != model.depth() {
            return invalid(format!(
                "model has {} layers but {} operators were given",
                model.depth(),
                operators.len()
            ));
        }
        for l in 1..operators.len() {
            if operators[l - 1].cols() != operators[l].rows() {
                return invalid(format!(
                    "dimension chain broken between layers {} and {}: {} columns vs {} rows",
                    l,
                    l + 1,
                    operators[l - 1].cols(),
                    operators[l].rows()
                ));
            }
        }
        Ok(Self { model, operators })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// `W^(l)` for `l = 1..=L`.
    pub fn operator(&self, l: usize) -> &LinearOperator {
        &self.operators[l - 1]
    }

    pub fn operators(&self) -> &[LinearOperator] {
        &self.operators
    }

    pub fn depth(&self) -> usize {
        self.operators.len()
    }

    /// Length of `h^(l)`, `l = 0..=L`.
    pub fn dim(&self, l: usize) -> usize {
        if l == 0 {
            self.operators[0].rows()
        } else {
            self.operators[l - 1].cols()
        }
    }

    pub fn signal_dim(&self) -> usize {
        self.dim(self.depth())
    }

    /// Second moments of `h^(l)` for `l = 1..=L` (index `l - 1`), propagated
    /// through the actual mean squared row norms of the operators.
    pub fn signal_powers(&self) -> Result<Vec<f64>> {
        let depth = self.depth();
        let mut tau = vec![0.0; depth];
        tau[depth - 1] = self.model.prior.second_moment();
        for l in (2..=depth).rev() {
            let op = self.operator(l);
            let row_sq = op.squared_apply(&vec![1.0; op.cols()])?;
            let mean_row = row_sq.iter().sum::<f64>() / row_sq.len() as f64;
            tau[l - 2] = self.model.channel(l).output_second_moment(tau[l - 1] * mean_row);
        }
        Ok(tau)
    }
}

/// A planted instance with all intermediate quantities and the noise used.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub x0: Vec<f64>,
    /// `z^(l)` at index `l - 1`.
    pub z: Vec<Vec<f64>>,
    /// Hidden `h^(l)` for `l = 1..L-1` at index `l - 1`.
    pub h: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// Standard-normal noise fed to `φ^(l)` at index `l - 1`.
    pub noise: Vec<Vec<f64>>,
}

impl GroundTruth {
    /// Rebuilds the chain from `x0` and the recorded noise.
    pub fn replay(&self, spec: &NetworkSpec) -> Result<GroundTruth> {
        let depth = spec.depth();
        if self.noise.len() != depth {
            return invalid("recorded noise does not match the network depth");
        }
        let mut z = vec![Vec::new(); depth];
        let mut h = vec![Vec::new(); depth - 1];
        let mut upstream = self.x0.clone();
        for l in (1..=depth).rev() {
            let zl = spec.operator(l).apply(&upstream)?;
            let hl = apply_channel(spec.model().channel(l), &zl, &self.noise[l - 1]);
            z[l - 1] = zl;
            if l > 1 {
                h[l - 2] = hl.clone();
            }
            upstream = hl;
        }
        Ok(GroundTruth { x0: self.x0.clone(), z, h, y: upstream, noise: self.noise.clone() })
    }
}

/// Samples `x0` from the prior and pushes it through the network.
pub fn generate_instance<R: Rng + ?Sized>(spec: &NetworkSpec, rng: &mut R) -> Result<GroundTruth> {
    let depth = spec.depth();
    let x0 = spec.model().prior.sample(spec.signal_dim(), rng);
    let mut z = vec![Vec::new(); depth];
    let mut h = vec![Vec::new(); depth - 1];
    let mut noise = vec![Vec::new(); depth];
    let mut upstream = x0.clone();
    for l in (1..=depth).rev() {
        let zl = spec.operator(l).apply(&upstream)?;
        let (hl, zeta) = sample_channel_with_noise(spec.model().channel(l), &zl, rng);
        z[l - 1] = zl;
        noise[l - 1] = zeta;
        if l > 1 {
            h[l - 2] = hl.clone();
        }
        upstream = hl;
    }
    Ok(GroundTruth { x0, z, h, y: upstream, noise })
}

/// Per-layer AMP parameters. `v`, `omega`, `g`, `eta` live on `z^(l)`
/// (length `n_{l-1}`); `a`, `b`, `h_hat`, `sigma` live on `h^(l)` (length `n_l`).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pub v: Vec<f64>,
    pub omega: Vec<f64>,
    pub g: Vec<f64>,
    pub eta: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub h_hat: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    /// Layer `l` at index `l - 1`.
    pub layers: Vec<LayerState>,
    /// Number of completed iterations.
    pub t: usize,
}

impl AmpState {
    /// Current signal estimate `ĥ^(L)`.
    pub fn x_hat(&self) -> &[f64] {
        &self.layers.last().expect("at least one layer").h_hat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmpOpts {
    pub max_iter: usize,
    pub tol: f64,
    pub damping: f64,
}

impl Default for AmpOpts {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-8, damping: 0.0 }
    }
}

impl AmpOpts {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return invalid("max_iter must be at least 1");
        }
        if !(self.tol > 0.0) {
            return invalid(format!("tol must be positive, got {}", self.tol));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return invalid(format!("damping must lie in [0, 1), got {}", self.damping));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AmpTrace {
    /// MSE of `ĥ^(L)` after each iteration; empty without ground truth.
    pub mse: Vec<f64>,
    /// Mean of `V^(l)` per iteration, one entry per layer.
    pub mean_v: Vec<Vec<f64>>,
    /// Mean of `A^(l)` per iteration, one entry per layer.
    pub mean_a: Vec<Vec<f64>>,
    pub converged: bool,
    pub iterations_run: usize,
}

/// `(1/n) Σ (x̂_i − x0_i)²`.
pub fn mse(x_hat: &[f64], x0: &[f64]) -> Result<f64> {
    if x_hat.len() != x0.len() {
        return invalid(format!("length mismatch: {} vs {}", x_hat.len(), x0.len()));
    }
    if x0.is_empty() {
        return invalid("mse of empty vectors");
    }
    let s: f64 = x_hat.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / x0.len() as f64)
}

/// Starting point: `ĥ = 0` and `σ` equal to the signal power of each layer,
/// with no Onsager memory.
pub fn init_amp(spec: &NetworkSpec, y: &[f64]) -> Result<AmpState> {
    if y.len() != spec.dim(0) {
        return invalid(format!("observation has length {} but the network emits {}", y.len(), spec.dim(0)));
    }
    let tau = spec.signal_powers()?;
    let layers = (1..=spec.depth())
        .map(|l| {
            let n_out = spec.dim(l - 1);
            let n_in = spec.dim(l);
            LayerState {
                v: vec![0.0; n_out],
                omega: vec![0.0; n_out],
                g: vec![0.0; n_out],
                eta: vec![0.0; n_out],
                a: vec![0.0; n_in],
                b: vec![0.0; n_in],
                h_hat: vec![0.0; n_in],
                sigma: vec![floor_var(tau[l - 1]); n_in],
            }
        })
        .collect();
    Ok(AmpState { layers, t: 0 })
}

fn check_finite(name: &str, l: usize, v: &[f64], iteration: usize) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::Diverged {
            iteration,
            detail: format!("{name}^({l})[{i}] = {}", v[i]),
        }),
    }
}

fn blend(old: &[f64], new: Vec<f64>, damping: f64) -> Vec<f64> {
    if damping == 0.0 {
        return new;
    }
    old.iter().zip(new).map(|(o, n)| damping * o + (1.0 - damping) * n).collect()
}

/// One sweep: linear step for `(V, ω)`, then for each layer the channel
/// denoiser and the linear step for `(A, B)`, then the new estimates `ĥ`.
#[allow(clippy::needless_range_loop)]
pub fn amp_step(mut state: AmpState, spec: &NetworkSpec, y: &[f64], damping: f64) -> Result<AmpState> {
    let depth = spec.depth();
    let t = state.t + 1;
    if state.layers.len() != depth || y.len() != spec.dim(0) {
        return invalid("state or observation does not match the network");
    }

    for l in 1..=depth {
        let op = spec.operator(l);
        let st = &mut state.layers[l - 1];
        let mut v = op.squared_apply(&st.sigma)?;
        v.iter_mut().for_each(|x| *x = floor_var(*x));
        let mut omega = op.apply(&st.h_hat)?;
        for ((o, vi), gi) in omega.iter_mut().zip(&v).zip(&st.g) {
            *o -= vi * gi;
        }
        check_finite("omega", l, &omega, t)?;
        check_finite("V", l, &v, t)?;
        st.v = v;
        st.omega = omega;
    }

    // middle[l - 1] holds φ^(l) evaluated at (A^(l-1), B^(l-1), V^(l), ω^(l)).
    let mut middle: Vec<Vec<DenoiserOutput>> = vec![Vec::new(); depth];
    for l in 1..=depth {
        let (g_new, eta) = if l == 1 {
            let st = &state.layers[0];
            let ch = spec.model().output_channel;
            let out = par::map_coords(y.len(), |i| ch.output_denoise_raw(y[i], st.v[i], st.omega[i]));
            out.into_iter().unzip::<_, _, Vec<f64>, Vec<f64>>()
        } else {
            let ch = *spec.model().channel(l);
            let (prev, cur) = state.layers.split_at(l - 1);
            let (below, st) = (&prev[l - 2], &cur[0]);
            let out = par::map_coords(st.v.len(), |i| {
                ch.middle_denoise_raw(below.a[i], below.b[i], st.v[i], st.omega[i])
            });
            let g: Vec<f64> = out.iter().map(|d| d.g).collect();
            let eta: Vec<f64> = out.iter().map(|d| d.eta).collect();
            middle[l - 1] = out;
            (g, eta)
        };
        check_finite("g", l, &g_new, t)?;
        check_finite("eta", l, &eta, t)?;

        let op = spec.operator(l);
        let st = &mut state.layers[l - 1];
        st.g = blend(&st.g, g_new, damping);
        st.eta = eta;
        let neg_eta: Vec<f64> = st.eta.iter().map(|e| -e).collect();
        let mut a = op.squared_transpose_apply(&neg_eta)?;
        a.iter_mut().for_each(|x| *x = x.max(VARIANCE_FLOOR));
        let mut b = op.transpose_apply(&st.g)?;
        for ((bi, ai), hi) in b.iter_mut().zip(&a).zip(&st.h_hat) {
            *bi += ai * hi;
        }
        check_finite("A", l, &a, t)?;
        check_finite("B", l, &b, t)?;
        st.a = a;
        st.b = b;
    }

    for l in 1..=depth {
        let (h_new, sigma): (Vec<f64>, Vec<f64>) = if l == depth {
            let st = &state.layers[l - 1];
            let prior = spec.model().prior;
            par::map_coords(st.a.len(), |i| prior.denoise_raw(st.a[i], st.b[i])).into_iter().unzip()
        } else {
            middle[l].iter().map(|d| (d.h_hat, d.sigma)).unzip()
        };
        check_finite("h_hat", l, &h_new, t)?;
        check_finite("sigma", l, &sigma, t)?;
        let st = &mut state.layers[l - 1];
        st.h_hat = blend(&st.h_hat, h_new, damping);
        st.sigma = sigma.into_iter().map(floor_var).collect();
    }

    state.t = t;
    Ok(state)
}

/// Result of a run that may have stopped on a divergence.
#[derive(Debug)]
pub struct AmpOutcome {
    /// Last finite estimate of the signal.
    pub x_hat: Vec<f64>,
    pub trace: AmpTrace,
    pub error: Option<Error>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Like [`run_amp`], but keeps the trace collected before a divergence.
pub fn run_amp_recording(spec: &NetworkSpec, y: &[f64], x0: Option<&[f64]>, opts: &AmpOpts) -> Result<AmpOutcome> {
    opts.validate()?;
    if let Some(x0) = x0 {
        if x0.len() != spec.signal_dim() {
            return invalid("ground-truth signal has the wrong length");
        }
    }
    let mut state = init_amp(spec, y)?;
    let mut trace = AmpTrace::default();
    let mut error = None;
    for _ in 0..opts.max_iter {
        let prev = state.x_hat().to_vec();
        let next = match amp_step(state.clone(), spec, y, opts.damping) {
            Ok(s) => s,
            Err(e) => {
                error = Some(e);
                break;
            }
        };
        state = next;
        trace.iterations_run = state.t;
        if let Some(x0) = x0 {
            trace.mse.push(mse(state.x_hat(), x0)?);
        }
        trace.mean_v.push(state.layers.iter().map(|s| mean(&s.v)).collect());
        trace.mean_a.push(state.layers.iter().map(|s| mean(&s.a)).collect());

        let x = state.x_hat();
        let diff: Vec<f64> = x.iter().zip(&prev).map(|(a, b)| a - b).collect();
        let scale = norm(x);
        let change = norm(&diff);
        if change == 0.0 || (scale > 0.0 && change / scale < opts.tol) {
            trace.converged = true;
            break;
        }
    }
    Ok(AmpOutcome { x_hat: state.x_hat().to_vec(), trace, error })
}

/// Iterates [`amp_step`] until the relative change of `x̂` drops below
/// `opts.tol` or `opts.max_iter` sweeps are done.
pub fn run_amp(spec: &NetworkSpec, y: &[f64], x0: Option<&[f64]>, opts: &AmpOpts) -> Result<(Vec<f64>, AmpTrace)> {
    let out = run_amp_recording(spec, y, x0, opts)?;
    match out.error {
        Some(e) => Err(e),
        None => Ok((out.x_hat, out.trace)),
    }
}
