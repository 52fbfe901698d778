//! Rayon-parallel Monte Carlo driver.
//!
//! Trials are simulated in index batches and folded into the accumulator in
//! index order, so the summary is byte-identical to the sequential
//! [`netscs_core::sim::monte_carlo_acr`] regardless of the thread count.

use netscs_core::sim::{simulate_trial, trial_rng, McAccumulator, McSummary, TrialTrace};
use netscs_core::SystemSpec;
use rayon::prelude::*;

const BATCH: u64 = 1024;

pub fn monte_carlo<C>(
    spec: &SystemSpec,
    controller: C,
    horizon: usize,
    trials: u64,
    master_seed: u64,
) -> McSummary
where
    C: Fn(f64, usize) -> f64 + Sync,
{
    let mut acc = McAccumulator::new(spec, horizon, master_seed);
    let mut start = 0;
    while start < trials {
        let end = (start + BATCH).min(trials);
        let traces: Vec<TrialTrace> = (start..end)
            .into_par_iter()
            .map(|i| simulate_trial(spec, &controller, horizon, &mut trial_rng(master_seed, i)))
            .collect();
        for (offset, trace) in traces.iter().enumerate() {
            acc.push(start + offset as u64, trace);
        }
        start = end;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use netscs_core::sim::monte_carlo_acr;

    #[test]
    fn parallel_equals_sequential() {
        let spec = SystemSpec::new(1.25, 1.0, 1.0, -2.0, 1.0, 5).unwrap();
        let controller = |xhat: f64, _k: usize| -xhat;
        let par = monte_carlo(&spec, controller, 30, 1500, 42);
        let seq = monte_carlo_acr(&spec, controller, 30, 1500, 42);
        assert_eq!(par, seq);
    }
}
