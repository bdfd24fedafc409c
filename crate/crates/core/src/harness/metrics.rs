//! Run metrics: exponential smoothing and the CSV files a run writes.

use std::fmt::Write as _;

/// Exponential moving average: y_0 = x_0, y_t = f*y_{t-1} + (1-f)*x_t.
pub fn smooth(series: &[f64], factor: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    let mut prev = None;
    for x in series {
        let y = match prev {
            None => *x,
            Some(p) => factor * p + (1.0 - factor) * x,
        };
        out.push(y);
        prev = Some(y);
    }
    out
}

/// One metrics.csv row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub global_step: u64,
    pub episodes: u64,
    pub team: &'static str,
    pub cumulative_reward_mean: f64,
    pub cumulative_reward_smoothed: f64,
    pub episode_length_mean: f64,
    pub curriculum_level: u8,
}

impl MetricsRow {
    pub const HEADER: &'static str = "global_step,episodes,team,cumulative_reward_mean,cumulative_reward_smoothed,episode_length_mean,curriculum_level";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.global_step,
            self.episodes,
            self.team,
            self.cumulative_reward_mean,
            self.cumulative_reward_smoothed,
            self.episode_length_mean,
            self.curriculum_level
        )
    }
}

/// One updates.csv row: optimizer diagnostics per update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRow {
    pub global_step: u64,
    pub team: &'static str,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

impl UpdateRow {
    pub const HEADER: &'static str =
        "global_step,team,mean_ratio,clip_fraction,policy_loss,value_loss,entropy";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.global_step,
            self.team,
            self.mean_ratio,
            self.clip_fraction,
            self.policy_loss,
            self.value_loss,
            self.entropy
        )
    }
}

/// Render a whole CSV document from header and rows.
pub fn csv_document<R, F: Fn(&R) -> String>(header: &str, rows: &[R], render: F) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{header}");
    for r in rows {
        let _ = writeln!(s, "{}", render(r));
    }
    s
}
