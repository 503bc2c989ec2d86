//! Scalar state evolution for the Bayes-optimal multi-layer AMP, tracking
//! one overlap pair `(m^(l), m̂^(l))` per layer. Only the aspect ratios
//! enter; the layer ensembles (dense or convolutional) do not.

use serde::{Deserialize, Serialize};

use crate::amp::Model;
use crate::channels::{Channel, Prior};
use crate::error::{invalid, Error, Result};
use crate::par;
use crate::quadrature::{GaussHermite, GaussLegendre};
use crate::special::{floor_var, norm_cdf, VARIANCE_FLOOR};

/// Second moments `τ^(l)`, `l = 1..=L` (index `l - 1`), for operators with
/// unit mean squared row norm.
pub fn compute_tau(model: &Model) -> Vec<f64> {
    let depth = model.depth();
    let mut tau = vec![0.0; depth];
    tau[depth - 1] = model.prior.second_moment();
    for l in (2..=depth).rev() {
        tau[l - 2] = model.channel(l).output_second_moment(tau[l - 1]);
    }
    tau
}

#[derive(Debug, Clone)]
pub struct SeParams {
    model: Model,
    betas: Vec<f64>,
    tau: Vec<f64>,
    gh: GaussHermite,
    gl: GaussLegendre,
}

impl SeParams {
    /// `betas[l - 1]` is the aspect ratio `n_{l-1} / n_l` of layer `l`.
    pub fn new(model: Model, betas: Vec<f64>) -> Result<Self> {
        model.validate()?;
        if betas.len() != model.depth() {
            return invalid(format!("need {} aspect ratios, got {}", model.depth(), betas.len()));
        }
        if let Some(b) = betas.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
            return invalid(format!("aspect ratios must be positive, got {b}"));
        }
        let tau = compute_tau(&model);
        Ok(Self { model, betas, tau, gh: GaussHermite::new(61), gl: GaussLegendre::new(61) })
    }

    pub fn with_quadrature_nodes(mut self, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return invalid(format!("need at least 2 quadrature nodes, got {nodes}"));
        }
        if nodes != self.gh.len() {
            self.gh = GaussHermite::new(nodes);
            self.gl = GaussLegendre::new(nodes);
        }
        Ok(self)
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn depth(&self) -> usize {
        self.betas.len()
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.gh.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeState {
    /// Overlap of `h^(l)` at index `l - 1`.
    pub m: Vec<f64>,
    pub m_hat: Vec<f64>,
    pub t: usize,
}

impl SeState {
    /// Predicted MSE on the signal, `τ^(L) − m^(L)`.
    pub fn mse(&self, params: &SeParams) -> f64 {
        let l = params.depth() - 1;
        (params.tau[l] - self.m[l]).max(0.0)
    }

    /// Variance of the Gaussian iterates on `z^(l)`, i.e. `V^(l) = τ^(l) − m^(l)`.
    pub fn kappa(&self, params: &SeParams) -> Vec<f64> {
        self.m.iter().zip(&params.tau).map(|(m, t)| floor_var(t - m)).collect()
    }

    /// Effective precision `m̂^(l)` of the Gaussian iterates on `h^(l)`.
    pub fn kappa_hat(&self) -> Vec<f64> {
        self.m_hat.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeOpts {
    pub max_iter: usize,
    pub tol: f64,
    pub quadrature_nodes: usize,
}

impl Default for SeOpts {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-10, quadrature_nodes: 61 }
    }
}

impl SeOpts {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return invalid("SE max_iter must be at least 1");
        }
        if !(self.tol > 0.0) {
            return invalid(format!("SE tol must be positive, got {}", self.tol));
        }
        if self.quadrature_nodes < 2 {
            return invalid("SE needs at least 2 quadrature nodes");
        }
        Ok(())
    }
}

/// Per-iteration record; index 0 is the initial state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeTrace {
    pub m: Vec<Vec<f64>>,
    pub m_hat: Vec<Vec<f64>>,
    pub mse: Vec<f64>,
    pub converged: bool,
    pub iterations_run: usize,
}

pub fn se_init(params: &SeParams) -> SeState {
    let depth = params.depth();
    SeState { m: vec![0.0; depth], m_hat: vec![0.0; depth], t: 0 }
}

/// `E[f(w)]` for `w ~ N(0, s²)` where `f` changes on the scale `ell`
/// around the origin. Broad laws get a dedicated panel over the feature.
fn expect_normal<T, F>(params: &SeParams, s: f64, ell: f64, f: F) -> T
where
    T: Send + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    F: Fn(f64) -> T + Sync + Send,
{
    if s <= 0.0 {
        return f(0.0);
    }
    let nodes: Vec<(f64, f64)> = if s <= ell {
        params.gh.iter().map(|(x, w)| (s * x, w)).collect()
    } else {
        let c = 12.0 * ell;
        let far = 12.0 * s;
        let density = |w: f64| (-0.5 * (w / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
        let mut v = Vec::with_capacity(3 * params.gl.len());
        for (lo, hi) in [(-far, -c), (-c, c), (c, far)] {
            v.extend(params.gl.nodes(lo, hi).map(|(w, wt)| (w, wt * density(w))));
        }
        v
    };
    par::map_range(nodes.len(), |i| f(nodes[i].0) * nodes[i].1)
        .into_iter()
        .fold(T::default(), |acc, x| acc + x)
}

#[derive(Debug, Clone, Copy, Default)]
struct Pair(f64, f64);

impl std::ops::Add for Pair {
    type Output = Pair;
    fn add(self, o: Pair) -> Pair {
        Pair(self.0 + o.0, self.1 + o.1)
    }
}

impl std::ops::Mul<f64> for Pair {
    type Output = Pair;
    fn mul(self, k: f64) -> Pair {
        Pair(self.0 * k, self.1 * k)
    }
}

/// `E[−η]` at the output layer for `w ~ N(0, m)`, `z ~ N(w, V)`.
fn output_precision(params: &SeParams, ch: &Channel, m: f64, v: f64) -> f64 {
    match *ch {
        Channel::Awgn { sigma2 } => 1.0 / (v + sigma2),
        Channel::Identity => 1.0 / v,
        Channel::Relu => {
            // z > 0 happens with probability 1/2 and has −η = 1/V.
            let sd = v.sqrt();
            let atom = expect_normal(params, m.sqrt(), sd, |w| {
                let (_, eta0) = ch.output_denoise_raw(0.0, v, w);
                norm_cdf(-w / sd) * (-eta0)
            });
            atom + 0.5 / v
        }
    }
}

/// `(E[−η], E[h ĥ])` at a hidden layer with channel `ch`, upstream overlap
/// `m`, variance `V`, and downstream precision `a`.
fn hidden_moments(params: &SeParams, ch: &Channel, a: f64, m: f64, v: f64) -> (f64, f64) {
    match ch.gaussian_noise() {
        Some(delta) => {
            let s = v + delta;
            (a / (1.0 + a * s), m + a * s * s / (1.0 + a * s))
        }
        None => relu_hidden_moments(params, ch, a, m, v),
    }
}

/// Uses the marginal `p(b | w) = N(b; 0, A) Z(A, b, V, w)` of the
/// observation-side field, so that `E[h ĥ] = E[ĥ²]` and the expectation is
/// two-dimensional.
fn relu_hidden_moments(params: &SeParams, ch: &Channel, a: f64, m: f64, v: f64) -> (f64, f64) {
    let sd = v.sqrt();
    let sa = a.sqrt();
    let Pair(neg_eta, overlap) = expect_normal(params, m.sqrt(), sd, |w| {
        let inner = 12.0 * sa;
        let upper = a * (w + 12.0 * sd).max(0.0) + inner;
        let mut out = Pair(0.0, 0.0);
        let mut panel = |lo: f64, hi: f64| {
            for (b, wt) in params.gl.nodes(lo, hi) {
                let log_p = -0.5 * b * b / a - 0.5 * (2.0 * std::f64::consts::PI * a).ln()
                    + ch.middle_log_partition(a, b, v, w);
                let d = ch.middle_denoise_raw(a, b, v, w);
                out = out + Pair(-d.eta, d.h_hat * d.h_hat) * (wt * log_p.exp());
            }
        };
        panel(-inner, inner);
        if upper > inner {
            let pieces = ((upper - inner) / (8.0 * sa)).ceil().clamp(1.0, 16.0) as usize;
            let step = (upper - inner) / pieces as f64;
            for k in 0..pieces {
                panel(inner + k as f64 * step, inner + (k + 1) as f64 * step);
            }
        }
        out
    });
    (neg_eta, overlap)
}

/// `E[x ĥ]` under the prior with precision `a`.
fn prior_overlap(params: &SeParams, prior: &Prior, a: f64) -> f64 {
    match *prior {
        Prior::Gaussian { mean, var } => (a * (mean * mean + var) + mean * mean / var) / (a + 1.0 / var),
        Prior::GaussBernoulli { rho } => {
            if rho <= 0.0 {
                return 0.0;
            }
            let sa = a.sqrt();
            let gh = &params.gh;
            let ell = (3.0 / sa).min(1.0);
            let val = expect_normal(params, 1.0, ell, |x| gh.expect(|xi| x * prior.denoise_raw(a, a * x + sa * xi).0));
            rho * val
        }
    }
}

fn check_overlap(l: usize, m: f64, tau: f64) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::NumericFailure(format!("overlap m^({l}) is {m}")));
    }
    if m > tau + 1e-9 * tau.max(1.0) {
        return Err(Error::Internal(format!("overlap m^({l}) = {m} exceeds τ^({l}) = {tau}")));
    }
    Ok(m.clamp(0.0, tau))
}

/// One SE iteration, in the same order as the AMP sweep.
pub fn se_step(state: &SeState, params: &SeParams) -> Result<SeState> {
    let depth = params.depth();
    let model = &params.model;
    let tau = &params.tau;
    let v: Vec<f64> = state.m.iter().zip(tau).map(|(m, t)| floor_var(t - m)).collect();

    let mut m_hat = vec![0.0; depth];
    let mut m = state.m.clone();
    for l in 1..=depth {
        let neg_eta = if l == 1 {
            output_precision(params, &model.output_channel, state.m[0], v[0])
        } else {
            let (neg_eta, overlap) = hidden_moments(params, model.channel(l), m_hat[l - 2], state.m[l - 1], v[l - 1]);
            m[l - 2] = check_overlap(l - 1, overlap, tau[l - 2])?;
            neg_eta
        };
        let mh = params.betas[l - 1] * neg_eta;
        if !mh.is_finite() || mh < 0.0 {
            return Err(Error::NumericFailure(format!("conjugate overlap m̂^({l}) is {mh}")));
        }
        m_hat[l - 1] = mh.max(VARIANCE_FLOOR);
    }
    let overlap = prior_overlap(params, &model.prior, m_hat[depth - 1]);
    m[depth - 1] = check_overlap(depth, overlap, tau[depth - 1])?;
    Ok(SeState { m, m_hat, t: state.t + 1 })
}

/// Iterates [`se_step`] until every overlap moves by less than `opts.tol`.
pub fn se_run(params: &SeParams, opts: &SeOpts) -> Result<SeTrace> {
    opts.validate()?;
    let params = params.clone().with_quadrature_nodes(opts.quadrature_nodes)?;
    let mut state = se_init(&params);
    let mut trace = SeTrace {
        m: vec![state.m.clone()],
        m_hat: vec![state.m_hat.clone()],
        mse: vec![state.mse(&params)],
        ..SeTrace::default()
    };
    for _ in 0..opts.max_iter {
        let next = se_step(&state, &params)?;
        let delta = next.m.iter().zip(&state.m).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        state = next;
        trace.m.push(state.m.clone());
        trace.m_hat.push(state.m_hat.clone());
        trace.mse.push(state.mse(&params));
        trace.iterations_run = state.t;
        if delta < opts.tol {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

/// Fixed-point MSE of the single-layer linear-Gaussian model with a
/// standard Gaussian prior: iterates `mse ← 1 / (1 + β / (mse + σ²))`.
pub fn linear_gaussian_fixed_point(beta: f64, sigma2: f64) -> f64 {
    let mut e = 1.0;
    for _ in 0..100_000 {
        let next = 1.0 / (1.0 + beta / (e + sigma2));
        if (next - e).abs() < 1e-15 {
            return next;
        }
        e = next;
    }
    e
}
