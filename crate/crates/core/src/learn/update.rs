//! Clipped-surrogate policy updates over shuffled minibatches, with the
//! centralized-critic variant for shared-reward teams, plus the finite
//! difference gradient check that keeps the hand-written backprop honest.

use super::buffer::RolloutBuffer;
use super::mlp::{
    entropy_of, log_prob_of, policy_backward, policy_forward, value_backward, value_forward,
    value_forward_team, PolicyHeadGrads, PolicyParams, CONTINUOUS_DIM,
};
use super::{HyperParams, LearnError};
use rand_chacha::ChaCha8Rng;

/// Diagnostics from one update call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub minibatches: u32,
}

/// PPO update with a solo critic. Normalizes advantages batch-wide, runs
/// `epochs_per_update` passes of shuffled minibatches of `batch_size`, and
/// clears the buffer. The shuffle stream is the only randomness.
pub fn ppo_update(
    buffer: &mut RolloutBuffer,
    params: &mut PolicyParams,
    hp: &HyperParams,
    shuffle: &mut ChaCha8Rng,
) -> Result<UpdateStats, LearnError> {
    update_impl(buffer, params, hp, shuffle, false)
}

/// Team update: same clipped surrogate, but the critic conditions on the
/// acting agent's observation concatenated with a mean-pool of its
/// teammates' encoded observations. Solo buffers reduce exactly to
/// [`ppo_update`].
pub fn poca_update(
    buffer: &mut RolloutBuffer,
    params: &mut PolicyParams,
    hp: &HyperParams,
    shuffle: &mut ChaCha8Rng,
) -> Result<UpdateStats, LearnError> {
    buffer.team()?;
    let solo = buffer.entries.iter().all(|e| e.teammate_obs.is_empty());
    if solo && params.layout.spec.encoder_dim.is_none() {
        return ppo_update(buffer, params, hp, shuffle);
    }
    update_impl(buffer, params, hp, shuffle, true)
}

fn update_impl(
    buffer: &mut RolloutBuffer,
    params: &mut PolicyParams,
    hp: &HyperParams,
    shuffle: &mut ChaCha8Rng,
    team_critic: bool,
) -> Result<UpdateStats, LearnError> {
    if buffer.is_empty() {
        return Err(LearnError::EmptyBuffer);
    }
    if let Err(msg) = hp.validate() {
        return Err(LearnError::InvalidHyperParams(msg));
    }

    // Batch-wide advantage normalization.
    let n = buffer.len();
    let mean = buffer.entries.iter().map(|e| e.advantage).sum::<f64>() / n as f64;
    let var = buffer.entries.iter().map(|e| (e.advantage - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt().max(1e-8);
    let norm_adv: Vec<f64> = buffer.entries.iter().map(|e| (e.advantage - mean) / std).collect();

    let mut grad = vec![0.0; params.layout.len];
    let mut stats = UpdateStats {
        mean_ratio: 0.0,
        clip_fraction: 0.0,
        policy_loss: 0.0,
        value_loss: 0.0,
        entropy: 0.0,
        minibatches: 0,
    };
    let mut sample_count = 0u64;

    for _epoch in 0..hp.epochs_per_update {
        let mut order: Vec<usize> = (0..n).collect();
        shuffle_in_place(&mut order, shuffle);
        for chunk in order.chunks(hp.batch_size.max(1)) {
            grad.fill(0.0);
            let scale = 1.0 / chunk.len() as f64;
            for &ix in chunk {
                let e = &buffer.entries[ix];
                let adv = norm_adv[ix];
                let out = policy_forward(params, &e.obs)?;
                let lp = log_prob_of(&out, &e.action_c, e.action_d);
                let ratio = (lp - e.log_prob).exp();
                let clipped = ratio.clamp(1.0 - hp.clip_epsilon, 1.0 + hp.clip_epsilon);
                let s1 = ratio * adv;
                let s2 = clipped * adv;
                let obj = s1.min(s2);
                // Gradient of the surrogate w.r.t. the new log prob: active
                // only when the unclipped branch is the minimum.
                let d_obj_d_lp = if s1 <= s2 { ratio * adv } else { 0.0 };

                stats.mean_ratio += ratio;
                if (ratio - 1.0).abs() > hp.clip_epsilon {
                    stats.clip_fraction += 1.0;
                }
                stats.policy_loss += -obj;
                let ent = entropy_of(&out);
                stats.entropy += ent;

                // Loss = -obj - c_e * entropy (+ value term below); build
                // head gradients of the loss.
                let mut heads = PolicyHeadGrads::default();
                let probs = out.softmax();
                for i in 0..CONTINUOUS_DIM {
                    let std_i = out.log_std[i].exp();
                    let z = (e.action_c[i] - out.mean[i]) / std_i;
                    // d lp / d mean_i (squash handled in policy_backward).
                    let d_lp_d_mean = z / std_i;
                    let d_lp_d_log_std = z * z - 1.0;
                    heads.d_mean[i] = -d_obj_d_lp * d_lp_d_mean * scale;
                    // Entropy of the Gaussian adds 1 per log_std.
                    heads.d_log_std[i] =
                        (-d_obj_d_lp * d_lp_d_log_std - hp.entropy_coefficient) * scale;
                }
                let h_cat: f64 = probs.iter().filter(|p| **p > 0.0).map(|p| -p * p.ln()).sum();
                for j in 0..probs.len() {
                    let d_lp_d_logit = f64::from(j == e.action_d) - probs[j];
                    let d_h_d_logit = -probs[j] * (probs[j].max(1e-300).ln() + h_cat);
                    heads.d_logits[j] =
                        (-d_obj_d_lp * d_lp_d_logit - hp.entropy_coefficient * d_h_d_logit)
                            * scale;
                }
                policy_backward(params, &out, &heads, &mut grad);

                // Value term.
                if team_critic {
                    let (v, cache, enc) = value_forward_team(params, &e.obs, &e.teammate_obs)?;
                    let err = v - e.target;
                    stats.value_loss += err * err;
                    let d_v = hp.value_coefficient * 2.0 * err * scale;
                    value_backward(params, &cache, &enc, d_v, &mut grad);
                } else {
                    let (v, cache) = value_forward(params, &e.obs)?;
                    let err = v - e.target;
                    stats.value_loss += err * err;
                    let d_v = hp.value_coefficient * 2.0 * err * scale;
                    value_backward(params, &cache, &[], d_v, &mut grad);
                }
                sample_count += 1;
            }
            apply_gradient(params, &grad, hp);
            stats.minibatches += 1;
        }
    }

    if !params.is_finite() {
        return Err(LearnError::NonFinite);
    }
    params.version += 1;
    buffer.clear();

    let k = sample_count as f64;
    stats.mean_ratio /= k;
    stats.clip_fraction /= k;
    stats.policy_loss /= k;
    stats.value_loss /= k;
    stats.entropy /= k;
    Ok(stats)
}

/// One optimizer step over the whole parameter vector.
fn apply_gradient(params: &mut PolicyParams, grad: &[f64], hp: &HyperParams) {
    match hp.optimizer {
        super::OptimizerKind::Sgd => {
            for (p, g) in params.data.iter_mut().zip(grad) {
                *p -= hp.learning_rate * g;
            }
        }
        super::OptimizerKind::Adam => {
            const B1: f64 = 0.9;
            const B2: f64 = 0.999;
            const EPS: f64 = 1e-8;
            let n = params.data.len();
            if params.opt.m.len() != n {
                params.opt.m = vec![0.0; n];
                params.opt.v = vec![0.0; n];
                params.opt.t = 0;
            }
            params.opt.t += 1;
            let bc1 = 1.0 - B1.powi(params.opt.t as i32);
            let bc2 = 1.0 - B2.powi(params.opt.t as i32);
            for i in 0..n {
                let g = grad[i];
                let m = &mut params.opt.m[i];
                *m = B1 * *m + (1.0 - B1) * g;
                let v = &mut params.opt.v[i];
                *v = B2 * *v + (1.0 - B2) * g * g;
                params.data[i] -=
                    hp.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + EPS);
            }
        }
    }
}

/// Fisher-Yates with the explicit stream.
fn shuffle_in_place(order: &mut [usize], rng: &mut ChaCha8Rng) {
    use rand::RngExt;
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}

/// Compare analytic gradients of the scalar heads (value output and the
/// joint log probability of a fixed action) against central finite
/// differences. Returns the worst relative error over all parameters.
pub fn gradient_check(
    params: &PolicyParams,
    observation: &[f64],
    epsilon: f64,
) -> Result<f64, LearnError> {
    let mut worst = 0.0f64;
    let team = params.layout.spec.encoder_dim.is_some();
    let teammates: Vec<Vec<f64>> =
        if team { vec![observation.to_vec()] } else { Vec::new() };

    // Scalar 1: the value head.
    let mut analytic = vec![0.0; params.layout.len];
    if team {
        let (_, cache, enc) = value_forward_team(params, observation, &teammates)?;
        value_backward(params, &cache, &enc, 1.0, &mut analytic);
    } else {
        let (_, cache) = value_forward(params, observation)?;
        value_backward(params, &cache, &[], 1.0, &mut analytic);
    }
    let value_scalar = |p: &PolicyParams| -> Result<f64, LearnError> {
        if team {
            Ok(value_forward_team(p, observation, &teammates)?.0)
        } else {
            Ok(value_forward(p, observation)?.0)
        }
    };
    worst = worst.max(compare_fd(params, &analytic, epsilon, value_scalar)?);

    // Scalar 2: log probability of a fixed action.
    let out = policy_forward(params, observation)?;
    let action_c = [0.3, -0.2, 0.1, 0.05];
    let action_d = 1usize;
    let mut analytic = vec![0.0; params.layout.len];
    let mut heads = PolicyHeadGrads::default();
    let probs = out.softmax();
    for i in 0..CONTINUOUS_DIM {
        let std_i = out.log_std[i].exp();
        let z = (action_c[i] - out.mean[i]) / std_i;
        heads.d_mean[i] = z / std_i;
        heads.d_log_std[i] = z * z - 1.0;
    }
    for j in 0..probs.len() {
        heads.d_logits[j] = f64::from(j == action_d) - probs[j];
    }
    policy_backward(params, &out, &heads, &mut analytic);
    let lp_scalar = |p: &PolicyParams| -> Result<f64, LearnError> {
        let out = policy_forward(p, observation)?;
        Ok(log_prob_of(&out, &action_c, action_d))
    };
    worst = worst.max(compare_fd(params, &analytic, epsilon, lp_scalar)?);
    Ok(worst)
}

fn compare_fd<F>(
    params: &PolicyParams,
    analytic: &[f64],
    epsilon: f64,
    f: F,
) -> Result<f64, LearnError>
where
    F: Fn(&PolicyParams) -> Result<f64, LearnError>,
{
    let mut worst = 0.0f64;
    let mut probe = params.clone();
    for ix in 0..params.layout.len {
        let orig = params.data[ix];
        probe.data[ix] = orig + epsilon;
        let hi = f(&probe)?;
        probe.data[ix] = orig - epsilon;
        let lo = f(&probe)?;
        probe.data[ix] = orig;
        let numeric = (hi - lo) / (2.0 * epsilon);
        let denom = analytic[ix].abs().max(numeric.abs()).max(1.0);
        worst = worst.max((analytic[ix] - numeric).abs() / denom);
    }
    Ok(worst)
}


#[cfg(test)]
mod tests {
    use crate::learn::mlp::sample_action;
    use super::*;
    use crate::learn::buffer::{Entry, Team};
    use crate::learn::mlp::MlpSpec;
    use crate::rng::stream;

    fn entry(obs: Vec<f64>, action_c: [f64; 4], adv: f64, lp: f64) -> Entry {
        Entry {
            obs,
            teammate_obs: Vec::new(),
            action_c,
            action_d: 0,
            log_prob: lp,
            reward: 0.0,
            value: 0.0,
            done: true,
            team: Team::Hiders,
            instance: 0,
            advantage: adv,
            target: 0.0,
        }
    }

    #[test]
    fn gradient_check_tiny_network() {
        let params = PolicyParams::init(MlpSpec::solo(4, 2), 11);
        let obs = vec![0.2, -0.4, 0.6, -0.8];
        let err = gradient_check(&params, &obs, 1e-5).unwrap();
        assert!(err < 1e-4, "relative gradient error {err}");
        // Deterministic on repeat.
        assert_eq!(err, gradient_check(&params, &obs, 1e-5).unwrap());
    }

    #[test]
    fn gradient_check_team_critic() {
        let params = PolicyParams::init(MlpSpec::team(4, 3, 2), 13);
        let obs = vec![0.1, 0.3, -0.5, 0.7];
        let err = gradient_check(&params, &obs, 1e-5).unwrap();
        assert!(err < 1e-4, "relative gradient error {err}");
    }

    #[test]
    fn zero_params_have_zero_linear_gradient_error() {
        let mut params = PolicyParams::init(MlpSpec::solo(3, 2), 1);
        params.data.fill(0.0);
        let err = gradient_check(&params, &[0.5, -0.5, 0.25], 1e-5).unwrap();
        assert!(err < 1e-6, "zero network is linear near zero: {err}");
    }

    #[test]
    fn clip_arithmetic_matches_definition() {
        // ratio 1.5, advantage +1, epsilon 0.2: clipped term is 1.2.
        let ratio: f64 = 1.5;
        let eps = 0.2;
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
        assert_eq!(clipped, 1.2);
        assert_eq!((ratio * 1.0).min(clipped * 1.0), 1.2);
    }

    #[test]
    fn zero_advantages_leave_policy_signal_to_value_and_entropy() {
        let spec = MlpSpec::solo(3, 8);
        let mut params = PolicyParams::init(spec, 21);
        let before = params.clone();
        let hp = HyperParams {
            batch_size: 8,
            entropy_coefficient: 0.0,
            value_coefficient: 0.0,
            learning_rate: 0.1,
            epochs_per_update: 1,
            ..Default::default()
        };
        let mut buffer = RolloutBuffer::new(8);
        let mut rng = stream(5, "mk", &[]);
        for _ in 0..8 {
            use rand::RngExt;
            let obs = vec![
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let (out, _) = crate::learn::mlp_forward(&params, &obs).unwrap();
            let s = sample_action(&out, &mut rng);
            buffer.push(entry(obs, s.continuous, 0.0, s.log_prob)).unwrap();
        }
        let mut shuffle = stream(5, "shuffle", &[]);
        ppo_update(&mut buffer, &mut params, &hp, &mut shuffle).unwrap();
        // All advantages equal (zero) normalize to zero; with value and
        // entropy coefficients off, parameters must not move.
        for (a, b) in params.data.iter().zip(&before.data) {
            assert_eq!(a, b);
        }
        assert!(buffer.is_empty(), "update flushes the buffer");
    }

    #[test]
    fn bandit_gradient_pushes_mean_toward_rewarded_side() {
        // One-step bandit: reward equals the first continuous component.
        // After one update the policy mean for that component must rise.
        let spec = MlpSpec::solo(2, 8);
        let mut params = PolicyParams::init(spec, 33);
        let hp = HyperParams {
            batch_size: 64,
            learning_rate: 0.05,
            epochs_per_update: 1,
            entropy_coefficient: 0.0,
            ..Default::default()
        };
        let obs = vec![0.5, -0.5];
        let (out0, _) = crate::learn::mlp_forward(&params, &obs).unwrap();
        let mean_before = out0.mean[0];

        let mut buffer = RolloutBuffer::new(256);
        let mut rng = stream(7, "bandit", &[]);
        for _ in 0..256 {
            let (out, _) = crate::learn::mlp_forward(&params, &obs).unwrap();
            let s = sample_action(&out, &mut rng);
            let reward = s.continuous[0];
            let mut e = entry(obs.clone(), s.continuous, reward, s.log_prob);
            e.reward = reward;
            e.target = 0.0;
            buffer.push(e).unwrap();
        }
        let mut shuffle = stream(7, "shuffle", &[]);
        ppo_update(&mut buffer, &mut params, &hp, &mut shuffle).unwrap();
        let (out1, _) = crate::learn::mlp_forward(&params, &obs).unwrap();
        assert!(
            out1.mean[0] > mean_before,
            "mean must move toward rewarded actions: {} -> {}",
            mean_before,
            out1.mean[0]
        );
    }

    #[test]
    fn stats_are_bounded_and_params_stay_finite() {
        let spec = MlpSpec::solo(3, 8);
        let mut params = PolicyParams::init(spec, 44);
        let hp = HyperParams { batch_size: 16, ..Default::default() };
        let mut buffer = RolloutBuffer::new(64);
        let mut rng = stream(9, "stats", &[]);
        for i in 0..64 {
            use rand::RngExt;
            let obs = vec![
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let (out, _) = crate::learn::mlp_forward(&params, &obs).unwrap();
            let s = sample_action(&out, &mut rng);
            let mut e = entry(obs, s.continuous, (i % 5) as f64 - 2.0, s.log_prob);
            e.action_d = s.discrete;
            e.target = 0.3;
            buffer.push(e).unwrap();
        }
        let mut shuffle = stream(9, "shuffle", &[]);
        let stats = ppo_update(&mut buffer, &mut params, &hp, &mut shuffle).unwrap();
        assert!((0.0..=1.0).contains(&stats.clip_fraction));
        assert!(stats.mean_ratio.is_finite());
        assert!(params.is_finite());
        assert_eq!(params.version, 1);

        assert!(matches!(
            ppo_update(&mut buffer, &mut params, &hp, &mut shuffle),
            Err(LearnError::EmptyBuffer)
        ));
    }

    #[test]
    fn poca_solo_is_bit_identical_to_ppo() {
        let spec = MlpSpec::solo(3, 8);
        let mk_buffer = |params: &PolicyParams| {
            let mut buffer = RolloutBuffer::new(32);
            let mut rng = stream(15, "poca", &[]);
            for i in 0..32 {
                use rand::RngExt;
                let obs = vec![
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ];
                let (out, _) = crate::learn::mlp_forward(params, &obs).unwrap();
                let s = sample_action(&out, &mut rng);
                let mut e = entry(obs, s.continuous, (i as f64).sin(), s.log_prob);
                e.action_d = s.discrete;
                e.team = Team::Seekers;
                buffer.push(e).unwrap();
            }
            buffer
        };
        let hp = HyperParams { batch_size: 8, ..Default::default() };

        let mut p1 = PolicyParams::init(spec, 77);
        let mut b1 = mk_buffer(&p1);
        let mut s1 = stream(3, "shuffle", &[]);
        let st1 = ppo_update(&mut b1, &mut p1, &hp, &mut s1).unwrap();

        let mut p2 = PolicyParams::init(spec, 77);
        let mut b2 = mk_buffer(&p2);
        let mut s2 = stream(3, "shuffle", &[]);
        let st2 = poca_update(&mut b2, &mut p2, &hp, &mut s2).unwrap();

        assert_eq!(p1.data, p2.data, "solo team critic must equal ppo bit for bit");
        assert_eq!(st1, st2);
    }

    #[test]
    fn poca_team_reduces_value_error_on_shared_reward() {
        let spec = MlpSpec::team(3, 8, 4);
        let mut params = PolicyParams::init(spec, 99);
        let hp = HyperParams {
            batch_size: 32,
            learning_rate: 0.05,
            epochs_per_update: 4,
            ..Default::default()
        };
        let mut rng = stream(11, "pteam", &[]);
        let mut mk = |params: &PolicyParams| {
            let mut buffer = RolloutBuffer::new(64);
            for _ in 0..64 {
                use rand::RngExt;
                let obs = vec![
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ];
                let mate = vec![
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ];
                let (out, _) = crate::learn::policy_forward(params, &obs)
                    .map(|o| (o, 0.0))
                    .unwrap();
                let s = sample_action(&out, &mut rng);
                let mut e = entry(obs, s.continuous, 0.0, s.log_prob);
                e.action_d = s.discrete;
                e.team = Team::Seekers;
                e.teammate_obs = vec![mate];
                e.target = 1.0; // shared +1 outcome
                buffer.push(e).unwrap();
            }
            buffer
        };
        let value_err = |params: &PolicyParams, buffer: &RolloutBuffer| {
            buffer
                .entries
                .iter()
                .map(|e| {
                    let (v, _, _) =
                        value_forward_team(params, &e.obs, &e.teammate_obs).unwrap();
                    (v - e.target).powi(2)
                })
                .sum::<f64>()
                / buffer.len() as f64
        };
        let probe = mk(&params);
        let before = value_err(&params, &probe);
        let mut shuffle = stream(8, "shuffle", &[]);
        for _ in 0..10 {
            let mut buffer = mk(&params);
            poca_update(&mut buffer, &mut params, &hp, &mut shuffle).unwrap();
        }
        let after = value_err(&params, &probe);
        assert!(after < before, "team critic should fit the shared target: {before} -> {after}");
    }
}
