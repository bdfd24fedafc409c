//! Generalized advantage estimation over one trajectory segment.

use super::LearnError;

/// Backward GAE recursion. `values` carries one bootstrap entry beyond the
/// rewards (zero when the episode terminated). Returns (advantages,
/// value targets) with targets = advantage + value.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), LearnError> {
    if values.len() != rewards.len() + 1 {
        return Err(LearnError::GaeLength { rewards: rewards.len(), values: values.len() });
    }
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let delta = rewards[t] + gamma * values[t + 1] - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, targets))
}
