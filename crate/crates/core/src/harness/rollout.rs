//! Parallel rollout collection with deterministic merge order.

use super::instance::{EnvInstance, EpisodeSummary};
use super::{HarnessError, TeamPolicies};
use crate::learn::{Entry, Team};

/// Everything one collection round produced, merged in instance-id order.
pub struct CollectOutput {
    pub entries: Vec<Entry>,
    pub summaries: Vec<EpisodeSummary>,
    pub ticks: u64,
}

/// Run `f` over every instance, optionally across worker threads. Results
/// come back in instance order no matter the thread count.
pub fn run_instances<R, F>(instances: &mut [EnvInstance], threads: usize, f: F) -> Vec<R>
where
    F: Fn(&mut EnvInstance) -> R + Sync,
    R: Send,
{
    if threads <= 1 || instances.len() <= 1 {
        return instances.iter_mut().map(|i| f(i)).collect();
    }
    let chunk = instances.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for slice in instances.chunks_mut(chunk) {
            let f = &f;
            handles.push(scope.spawn(move || slice.iter_mut().map(f).collect::<Vec<R>>()));
        }
        handles.into_iter().flat_map(|h| h.join().expect("rollout worker panicked")).collect()
    })
}

/// Collect exactly `quota` learning-team entries from each instance,
/// cutting mid-episode with a bootstrapped value when needed.
pub fn collect_quota(
    instances: &mut [EnvInstance],
    threads: usize,
    policies: &TeamPolicies,
    learning: Team,
    quota: usize,
) -> Result<CollectOutput, HarnessError> {
    let results = run_instances(instances, threads, |inst| collect_one(inst, policies, learning, quota));
    merge(results)
}

fn collect_one(
    inst: &mut EnvInstance,
    policies: &TeamPolicies,
    learning: Team,
    quota: usize,
) -> Result<(Vec<Entry>, Vec<EpisodeSummary>, u64), HarnessError> {
    let tick_start = inst.ticks_total;
    let mut entries = Vec::with_capacity(quota);
    let mut summaries = Vec::new();
    while entries.len() + inst.pending_entries() < quota {
        if let Some(summary) = inst.run_decision(policies, Some(learning), &mut entries)? {
            summaries.push(summary);
        }
    }
    inst.finalize_segment(policies, &mut entries, false)?;
    debug_assert_eq!(entries.len(), quota, "quota must land exactly");
    Ok((entries, summaries, inst.ticks_total - tick_start))
}

/// Run `episodes` whole episodes on each instance. Entries are collected
/// only when `learning` is set.
pub fn collect_episodes(
    instances: &mut [EnvInstance],
    threads: usize,
    policies: &TeamPolicies,
    learning: Option<Team>,
    episodes: u64,
) -> Result<CollectOutput, HarnessError> {
    let results = run_instances(instances, threads, |inst| {
        let tick_start = inst.ticks_total;
        let mut entries = Vec::new();
        let mut summaries = Vec::new();
        while (summaries.len() as u64) < episodes {
            if let Some(summary) = inst.run_decision(policies, learning, &mut entries)? {
                summaries.push(summary);
            }
        }
        Ok((entries, summaries, inst.ticks_total - tick_start))
    });
    merge(results)
}

type InstanceResult = Result<(Vec<Entry>, Vec<EpisodeSummary>, u64), HarnessError>;

fn merge(results: Vec<InstanceResult>) -> Result<CollectOutput, HarnessError> {
    let mut out = CollectOutput { entries: Vec::new(), summaries: Vec::new(), ticks: 0 };
    for r in results {
        let (entries, summaries, ticks) = r?;
        out.entries.extend(entries);
        out.summaries.extend(summaries);
        out.ticks += ticks;
    }
    Ok(out)
}
