//! The policy/value network: two tanh hidden layers, a squashed-Gaussian
//! continuous head (thrust xyz + yaw rate), a 3-way categorical manipulate
//! head, a scalar value head, and — for team critics — an observation
//! encoder whose mean-pool summarizes teammates.
//!
//! Parameters live in one flat `Vec<f64>`; `NetLayout` maps names to offsets
//! so forward and backward walk the same memory. Gradients are hand-derived
//! and validated against central finite differences.

use super::LearnError;
use crate::rng::{next_standard_normal, stream};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

pub const CONTINUOUS_DIM: usize = 4;
pub const DISCRETE_OPTIONS: usize = 3;

/// Network shape. `encoder_dim` is present only for team critics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub encoder_dim: Option<usize>,
}

impl MlpSpec {
    pub fn solo(input_dim: usize, hidden_units: usize) -> Self {
        MlpSpec { input_dim, hidden_layers: 2, hidden_units, encoder_dim: None }
    }

    pub fn team(input_dim: usize, hidden_units: usize, encoder_dim: usize) -> Self {
        MlpSpec { input_dim, hidden_layers: 2, hidden_units, encoder_dim: Some(encoder_dim) }
    }

    /// Value-trunk input width: own observation plus the pooled encoding.
    pub fn critic_input(&self) -> usize {
        self.input_dim + self.encoder_dim.unwrap_or(0)
    }

    pub fn descriptor(&self) -> String {
        format!(
            "mlp-v1 in={} layers={} units={} actc={} actd={} enc={}",
            self.input_dim,
            self.hidden_layers,
            self.hidden_units,
            CONTINUOUS_DIM,
            DISCRETE_OPTIONS,
            self.encoder_dim.map_or(0, |e| e)
        )
    }
}

/// Offsets of each parameter block in the flat vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetLayout {
    pub spec: MlpSpec,
    pub p_w1: usize,
    pub p_b1: usize,
    pub p_w2: usize,
    pub p_b2: usize,
    pub p_wm: usize,
    pub p_bm: usize,
    pub p_wd: usize,
    pub p_bd: usize,
    pub p_log_std: usize,
    pub v_w1: usize,
    pub v_b1: usize,
    pub v_w2: usize,
    pub v_b2: usize,
    pub v_wv: usize,
    pub v_bv: usize,
    pub e_w: usize,
    pub e_b: usize,
    pub len: usize,
}

impl NetLayout {
    pub fn new(spec: MlpSpec) -> Self {
        let h = spec.hidden_units;
        let d = spec.input_dim;
        let vin = spec.critic_input();
        let enc = spec.encoder_dim.unwrap_or(0);
        let mut at = 0usize;
        let mut take = |n: usize| {
            let o = at;
            at += n;
            o
        };
        NetLayout {
            spec,
            p_w1: take(h * d),
            p_b1: take(h),
            p_w2: take(h * h),
            p_b2: take(h),
            p_wm: take(CONTINUOUS_DIM * h),
            p_bm: take(CONTINUOUS_DIM),
            p_wd: take(DISCRETE_OPTIONS * h),
            p_bd: take(DISCRETE_OPTIONS),
            p_log_std: take(CONTINUOUS_DIM),
            v_w1: take(h * vin),
            v_b1: take(h),
            v_w2: take(h * h),
            v_b2: take(h),
            v_wv: take(h),
            v_bv: take(1),
            e_w: take(enc * d),
            e_b: take(enc),
            len: at,
        }
    }
}

/// Adaptive-optimizer memory; empty until the first Adam step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl OptimizerState {
    pub fn is_empty(&self) -> bool {
        self.m.is_empty() && self.v.is_empty() && self.t == 0
    }
}

/// Flat parameter vector plus its layout, a version counter bumped on every
/// update, and any optimizer memory accumulated so far.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub layout: NetLayout,
    pub data: Vec<f64>,
    pub version: u64,
    pub opt: OptimizerState,
}

impl PolicyParams {
    /// Deterministic initialization: Xavier-uniform hidden layers, small
    /// uniform heads, log-std at ln(0.5).
    pub fn init(spec: MlpSpec, seed: u64) -> Self {
        let layout = NetLayout::new(spec);
        let mut data = vec![0.0; layout.len];
        let mut rng = stream(seed, "init", &[]);
        let h = spec.hidden_units;
        let d = spec.input_dim;
        let vin = spec.critic_input();
        let mut fill = |data: &mut Vec<f64>, off: usize, rows: usize, cols: usize, scale: f64| {
            let s = scale * (6.0 / (rows + cols) as f64).sqrt();
            for v in &mut data[off..off + rows * cols] {
                *v = rng.random_range(-s..s);
            }
        };
        fill(&mut data, layout.p_w1, h, d, 1.0);
        fill(&mut data, layout.p_w2, h, h, 1.0);
        fill(&mut data, layout.p_wm, CONTINUOUS_DIM, h, 0.01);
        fill(&mut data, layout.p_wd, DISCRETE_OPTIONS, h, 0.01);
        fill(&mut data, layout.v_w1, h, vin, 1.0);
        fill(&mut data, layout.v_w2, h, h, 1.0);
        fill(&mut data, layout.v_wv, 1, h, 0.01);
        if let Some(e) = spec.encoder_dim {
            fill(&mut data, layout.e_w, e, d, 1.0);
        }
        for v in &mut data[layout.p_log_std..layout.p_log_std + CONTINUOUS_DIM] {
            *v = (0.5f64).ln();
        }
        PolicyParams { layout, data, version: 0, opt: OptimizerState::default() }
    }

    /// Zero the output heads so the policy starts neutral: mean 0, uniform
    /// categorical, value 0.
    pub fn zero_heads(&mut self) {
        let l = self.layout;
        let h = l.spec.hidden_units;
        for range in [
            (l.p_wm, CONTINUOUS_DIM * h),
            (l.p_bm, CONTINUOUS_DIM),
            (l.p_wd, DISCRETE_OPTIONS * h),
            (l.p_bd, DISCRETE_OPTIONS),
            (l.v_wv, h),
            (l.v_bv, 1),
        ] {
            for v in &mut self.data[range.0..range.0 + range.1] {
                *v = 0.0;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// out = W x + b with W row-major (rows x cols).
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = b[r];
        for (wv, xv) in row.iter().zip(x) {
            acc += wv * xv;
        }
        *o = acc;
    }
}

/// Backward of `affine`: accumulates dW, db and writes dx.
fn affine_backward(
    w: &[f64],
    x: &[f64],
    dout: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    let cols = x.len();
    for (r, d) in dout.iter().enumerate() {
        db[r] += d;
        let dw_row = &mut dw[r * cols..(r + 1) * cols];
        for (c, xv) in x.iter().enumerate() {
            dw_row[c] += d * xv;
        }
    }
    if let Some(dx) = dx {
        for (c, slot) in dx.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (r, d) in dout.iter().enumerate() {
                acc += w[r * cols + c] * d;
            }
            *slot = acc;
        }
    }
}

fn tanh_inplace(v: &mut [f64]) {
    for x in v {
        *x = x.tanh();
    }
}

/// Forward activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct TrunkCache {
    pub input: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
}

fn trunk_forward(w1: &[f64], b1: &[f64], w2: &[f64], b2: &[f64], x: &[f64], h: usize) -> TrunkCache {
    let mut h1 = vec![0.0; h];
    affine(w1, b1, x, &mut h1);
    tanh_inplace(&mut h1);
    let mut h2 = vec![0.0; h];
    affine(w2, b2, &h1, &mut h2);
    tanh_inplace(&mut h2);
    TrunkCache { input: x.to_vec(), h1, h2 }
}

/// Backward through the two-layer tanh trunk. `dh2` is the gradient at the
/// trunk output; gradients accumulate into the grad vector at the given
/// offsets; returns gradient w.r.t. the input when requested.
#[allow(clippy::too_many_arguments)]
fn trunk_backward(
    params: &[f64],
    grad: &mut [f64],
    cache: &TrunkCache,
    dh2: &[f64],
    o_w1: usize,
    o_b1: usize,
    o_w2: usize,
    o_b2: usize,
    want_dx: bool,
) -> Option<Vec<f64>> {
    let h = cache.h1.len();
    // Through the second tanh.
    let mut da2 = vec![0.0; h];
    for i in 0..h {
        da2[i] = dh2[i] * (1.0 - cache.h2[i] * cache.h2[i]);
    }
    let mut dh1 = vec![0.0; h];
    {
        let (w2, x) = (&params[o_w2..o_w2 + h * h], &cache.h1);
        let (dw_slice, db_slice) = grad_two(grad, o_w2, h * h, o_b2, h);
        affine_backward(w2, x, &da2, dw_slice, db_slice, Some(&mut dh1));
    }
    let mut da1 = vec![0.0; h];
    for i in 0..h {
        da1[i] = dh1[i] * (1.0 - cache.h1[i] * cache.h1[i]);
    }
    let din = cache.input.len();
    let mut dx = if want_dx { Some(vec![0.0; din]) } else { None };
    {
        let (w1, x) = (&params[o_w1..o_w1 + h * din], &cache.input);
        let (dw_slice, db_slice) = grad_two(grad, o_w1, h * din, o_b1, h);
        affine_backward(w1, x, &da1, dw_slice, db_slice, dx.as_deref_mut());
    }
    dx
}

/// Two disjoint mutable slices out of the gradient vector.
fn grad_two(grad: &mut [f64], a: usize, a_len: usize, b: usize, b_len: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(a + a_len <= b || b + b_len <= a);
    if a < b {
        let (lo, hi) = grad.split_at_mut(b);
        (&mut lo[a..a + a_len], &mut hi[..b_len])
    } else {
        let (lo, hi) = grad.split_at_mut(a);
        (&mut hi[..a_len], &mut lo[b..b + b_len])
    }
}

/// Policy head outputs plus the cache needed to push gradients back.
#[derive(Debug, Clone)]
pub struct PolicyOut {
    /// Squashed mean of the continuous head, each in (-1, 1).
    pub mean: [f64; CONTINUOUS_DIM],
    pub log_std: [f64; CONTINUOUS_DIM],
    pub logits: [f64; DISCRETE_OPTIONS],
    pub cache: TrunkCache,
}

impl PolicyOut {
    pub fn softmax(&self) -> [f64; DISCRETE_OPTIONS] {
        let m = self.logits.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        let mut e = [0.0; DISCRETE_OPTIONS];
        let mut sum = 0.0;
        for (i, l) in self.logits.iter().enumerate() {
            e[i] = (l - m).exp();
            sum += e[i];
        }
        for v in &mut e {
            *v /= sum;
        }
        e
    }
}

/// Policy forward pass.
pub fn policy_forward(params: &PolicyParams, obs: &[f64]) -> Result<PolicyOut, LearnError> {
    let l = params.layout;
    let spec = l.spec;
    if obs.len() != spec.input_dim {
        return Err(LearnError::DimMismatch { got: obs.len(), want: spec.input_dim });
    }
    let h = spec.hidden_units;
    let p = &params.data;
    let cache = trunk_forward(
        &p[l.p_w1..l.p_w1 + h * spec.input_dim],
        &p[l.p_b1..l.p_b1 + h],
        &p[l.p_w2..l.p_w2 + h * h],
        &p[l.p_b2..l.p_b2 + h],
        obs,
        h,
    );
    let mut mean_raw = [0.0; CONTINUOUS_DIM];
    affine(&p[l.p_wm..l.p_wm + CONTINUOUS_DIM * h], &p[l.p_bm..l.p_bm + CONTINUOUS_DIM], &cache.h2, &mut mean_raw);
    let mut logits = [0.0; DISCRETE_OPTIONS];
    affine(&p[l.p_wd..l.p_wd + DISCRETE_OPTIONS * h], &p[l.p_bd..l.p_bd + DISCRETE_OPTIONS], &cache.h2, &mut logits);
    let mut mean = [0.0; CONTINUOUS_DIM];
    for i in 0..CONTINUOUS_DIM {
        mean[i] = mean_raw[i].tanh();
    }
    let mut log_std = [0.0; CONTINUOUS_DIM];
    log_std.copy_from_slice(&p[l.p_log_std..l.p_log_std + CONTINUOUS_DIM]);
    Ok(PolicyOut { mean, log_std, logits, cache })
}

/// Value forward on the solo critic (input = own observation).
pub fn value_forward(params: &PolicyParams, obs: &[f64]) -> Result<(f64, TrunkCache), LearnError> {
    let l = params.layout;
    if l.spec.encoder_dim.is_some() {
        // Team layouts must pool teammates; reject silent misuse.
        return Err(LearnError::DimMismatch { got: obs.len(), want: l.spec.critic_input() });
    }
    if obs.len() != l.spec.input_dim {
        return Err(LearnError::DimMismatch { got: obs.len(), want: l.spec.input_dim });
    }
    value_trunk(params, obs)
}

/// Team critic: own observation concatenated with the mean-pooled encodings
/// of the teammates' observations. Order-invariant by construction.
pub fn value_forward_team(
    params: &PolicyParams,
    obs: &[f64],
    teammates: &[Vec<f64>],
) -> Result<(f64, TrunkCache, Vec<TrunkCache>), LearnError> {
    let l = params.layout;
    let enc_dim = l.spec.encoder_dim.unwrap_or(0);
    if obs.len() != l.spec.input_dim {
        return Err(LearnError::DimMismatch { got: obs.len(), want: l.spec.input_dim });
    }
    let mut pooled = vec![0.0; enc_dim];
    let mut enc_caches = Vec::with_capacity(teammates.len());
    if enc_dim > 0 && !teammates.is_empty() {
        let p = &params.data;
        for t in teammates {
            if t.len() != l.spec.input_dim {
                return Err(LearnError::DimMismatch { got: t.len(), want: l.spec.input_dim });
            }
            let mut e = vec![0.0; enc_dim];
            affine(&p[l.e_w..l.e_w + enc_dim * l.spec.input_dim], &p[l.e_b..l.e_b + enc_dim], t, &mut e);
            tanh_inplace(&mut e);
            for (acc, v) in pooled.iter_mut().zip(&e) {
                *acc += v;
            }
            enc_caches.push(TrunkCache { input: t.clone(), h1: e, h2: Vec::new() });
        }
        let k = teammates.len() as f64;
        for v in &mut pooled {
            *v /= k;
        }
    }
    let mut input = Vec::with_capacity(l.spec.critic_input());
    input.extend_from_slice(obs);
    input.extend_from_slice(&pooled);
    let (v, cache) = value_trunk(params, &input)?;
    Ok((v, cache, enc_caches))
}

fn value_trunk(params: &PolicyParams, input: &[f64]) -> Result<(f64, TrunkCache), LearnError> {
    let l = params.layout;
    let h = l.spec.hidden_units;
    let vin = l.spec.critic_input();
    if input.len() != vin {
        return Err(LearnError::DimMismatch { got: input.len(), want: vin });
    }
    let p = &params.data;
    let cache = trunk_forward(
        &p[l.v_w1..l.v_w1 + h * vin],
        &p[l.v_b1..l.v_b1 + h],
        &p[l.v_w2..l.v_w2 + h * h],
        &p[l.v_b2..l.v_b2 + h],
        input,
        h,
    );
    let mut v = [0.0];
    affine(&p[l.v_wv..l.v_wv + h], &p[l.v_bv..l.v_bv + 1], &cache.h2, &mut v);
    Ok((v[0], cache))
}

/// One forward pass reporting the action distribution and the (solo) value.
pub fn mlp_forward(params: &PolicyParams, obs: &[f64]) -> Result<(PolicyOut, f64), LearnError> {
    let out = policy_forward(params, obs)?;
    let (v, _) = if params.layout.spec.encoder_dim.is_some() {
        let (v, c, _) = value_forward_team(params, obs, &[])?;
        (v, c)
    } else {
        value_forward(params, obs)?
    };
    Ok((out, v))
}

/// A sampled (or greedy) action with its log probability under the policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample {
    pub continuous: [f64; CONTINUOUS_DIM],
    pub discrete: usize,
    pub log_prob: f64,
}

pub fn sample_action(out: &PolicyOut, rng: &mut ChaCha8Rng) -> ActionSample {
    let mut continuous = [0.0; CONTINUOUS_DIM];
    for i in 0..CONTINUOUS_DIM {
        let std = out.log_std[i].exp();
        continuous[i] = out.mean[i] + std * next_standard_normal(rng);
    }
    let probs = out.softmax();
    let u: f64 = rng.random::<f64>();
    let mut acc = 0.0;
    let mut discrete = DISCRETE_OPTIONS - 1;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            discrete = i;
            break;
        }
    }
    let log_prob = log_prob_of(out, &continuous, discrete);
    ActionSample { continuous, discrete, log_prob }
}

/// Mean action and argmax option; used for evaluation.
pub fn greedy_action(out: &PolicyOut) -> ActionSample {
    let probs = out.softmax();
    let discrete = probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    ActionSample {
        continuous: out.mean,
        discrete,
        log_prob: log_prob_of(out, &out.mean, discrete),
    }
}

/// Joint log probability of a continuous sample and a discrete option.
pub fn log_prob_of(out: &PolicyOut, continuous: &[f64; CONTINUOUS_DIM], discrete: usize) -> f64 {
    let mut lp = 0.0;
    for i in 0..CONTINUOUS_DIM {
        let std = out.log_std[i].exp();
        let z = (continuous[i] - out.mean[i]) / std;
        lp += -0.5 * z * z - out.log_std[i] - 0.5 * (std::f64::consts::TAU).ln();
    }
    let probs = out.softmax();
    lp += probs[discrete].max(1e-300).ln();
    lp
}

/// Entropy of the joint distribution (Gaussian part plus categorical part).
pub fn entropy_of(out: &PolicyOut) -> f64 {
    let mut h = 0.0;
    for i in 0..CONTINUOUS_DIM {
        h += out.log_std[i] + 0.5 * (std::f64::consts::TAU * std::f64::consts::E).ln();
    }
    for p in out.softmax() {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h
}

/// Gradient contributions at the policy heads, to be pushed through the
/// trunk by [`policy_backward`].
#[derive(Debug, Clone, Copy, Default)]
pub struct PolicyHeadGrads {
    /// d loss / d squashed mean.
    pub d_mean: [f64; CONTINUOUS_DIM],
    pub d_log_std: [f64; CONTINUOUS_DIM],
    pub d_logits: [f64; DISCRETE_OPTIONS],
}

/// Accumulate policy gradients for one sample into `grad`.
pub fn policy_backward(
    params: &PolicyParams,
    out: &PolicyOut,
    heads: &PolicyHeadGrads,
    grad: &mut [f64],
) {
    let l = params.layout;
    let h = l.spec.hidden_units;
    // Through the tanh squash of the mean head.
    let mut d_mean_raw = [0.0; CONTINUOUS_DIM];
    for i in 0..CONTINUOUS_DIM {
        d_mean_raw[i] = heads.d_mean[i] * (1.0 - out.mean[i] * out.mean[i]);
    }
    for i in 0..CONTINUOUS_DIM {
        grad[l.p_log_std + i] += heads.d_log_std[i];
    }
    let mut dh2 = vec![0.0; h];
    {
        let p = &params.data;
        let (dw, db) = grad_two(grad, l.p_wm, CONTINUOUS_DIM * h, l.p_bm, CONTINUOUS_DIM);
        let mut dh2_m = vec![0.0; h];
        affine_backward(&p[l.p_wm..l.p_wm + CONTINUOUS_DIM * h], &out.cache.h2, &d_mean_raw, dw, db, Some(&mut dh2_m));
        for (a, b) in dh2.iter_mut().zip(&dh2_m) {
            *a += b;
        }
        let (dw, db) = grad_two(grad, l.p_wd, DISCRETE_OPTIONS * h, l.p_bd, DISCRETE_OPTIONS);
        let mut dh2_d = vec![0.0; h];
        affine_backward(&p[l.p_wd..l.p_wd + DISCRETE_OPTIONS * h], &out.cache.h2, &heads.d_logits, dw, db, Some(&mut dh2_d));
        for (a, b) in dh2.iter_mut().zip(&dh2_d) {
            *a += b;
        }
    }
    trunk_backward(&params.data, grad, &out.cache, &dh2, l.p_w1, l.p_b1, l.p_w2, l.p_b2, false);
}

/// Accumulate value gradients (`d_v` at the scalar output) for one sample.
/// For team critics the gradient also flows into the encoder through the
/// pooled input slice.
pub fn value_backward(
    params: &PolicyParams,
    cache: &TrunkCache,
    enc_caches: &[TrunkCache],
    d_v: f64,
    grad: &mut [f64],
) {
    let l = params.layout;
    let h = l.spec.hidden_units;
    let mut dh2 = vec![0.0; h];
    {
        let p = &params.data;
        let (dw, db) = grad_two(grad, l.v_wv, h, l.v_bv, 1);
        affine_backward(&p[l.v_wv..l.v_wv + h], &cache.h2, &[d_v], dw, db, Some(&mut dh2));
    }
    let want_dx = l.spec.encoder_dim.is_some() && !enc_caches.is_empty();
    let dx = trunk_backward(&params.data, grad, cache, &dh2, l.v_w1, l.v_b1, l.v_w2, l.v_b2, want_dx);
    if let (Some(dx), Some(enc_dim)) = (dx, l.spec.encoder_dim) {
        if enc_caches.is_empty() {
            return;
        }
        let obs_dim = l.spec.input_dim;
        let k = enc_caches.len() as f64;
        let d_pool = &dx[obs_dim..obs_dim + enc_dim];
        for ec in enc_caches {
            // Mean pool: each encoding receives d_pool / k, then through tanh.
            let mut de = vec![0.0; enc_dim];
            for i in 0..enc_dim {
                de[i] = d_pool[i] / k * (1.0 - ec.h1[i] * ec.h1[i]);
            }
            let p = &params.data;
            let (dw, db) = grad_two(grad, l.e_w, enc_dim * obs_dim, l.e_b, enc_dim);
            affine_backward(&p[l.e_w..l.e_w + enc_dim * obs_dim], &ec.input, &de, dw, db, None);
        }
    }
}
