//! Monte Carlo simulation of the full plant / estimator / scheduler loop.
//!
//! Trial `i` of a run with master seed `s` draws its noise from
//! `Rng::stream(s, i)` — exactly one normal per step, in step order — so
//! results do not depend on execution order and trials may be simulated
//! concurrently. [`McAccumulator`] folds traces into summary statistics; it
//! must be fed traces by index but is otherwise order-insensitive.

use alloc::vec;
use alloc::vec::Vec;

use crate::acr::AcrSeries;
use crate::coeffs::Method;
use crate::rng::Rng;
use crate::system::SystemSpec;

/// One realization of the closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    /// Plant state `x[0..=horizon]`.
    pub x: Vec<f64>,
    /// Remote estimate; equals `x` at sampling steps.
    pub xhat: Vec<f64>,
    /// Estimation error `x - xhat`; zero at sampling steps.
    pub e: Vec<f64>,
    /// Communication indicator; `delta[0] = true` by convention.
    pub delta: Vec<bool>,
    /// Last sampling instant at or before each step.
    pub iota: Vec<usize>,
}

/// Per-trial RNG for trial `index` of a run keyed by `master_seed`.
pub fn trial_rng(master_seed: u64, index: u64) -> Rng {
    Rng::stream(master_seed, index)
}

/// Simulates one trial. Per step `k >= 1`: advance the plant with
/// `u = controller(xhat, k)` noise; transmit when `|e[k-1]| >= eta` or when
/// more than `t_max` steps have passed since the last transmission, which
/// resets the estimate to the true state; otherwise predict the estimate
/// open loop.
///
/// Draws exactly `horizon` normal deviates from `rng`, one per step.
pub fn simulate_trial<C>(
    spec: &SystemSpec,
    controller: C,
    horizon: usize,
    rng: &mut Rng,
) -> TrialTrace
where
    C: Fn(f64, usize) -> f64,
{
    let n = horizon + 1;
    let mut x = Vec::with_capacity(n);
    let mut xhat = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    let mut iota = Vec::with_capacity(n);
    x.push(spec.x0);
    xhat.push(spec.x0);
    e.push(0.0);
    delta.push(true);
    iota.push(0);
    for k in 1..=horizon {
        let w = rng.normal(spec.sigma);
        let u = controller(xhat[k - 1], k - 1);
        x.push(spec.a * x[k - 1] + spec.b * u + w);
        let trigger = libm::fabs(e[k - 1]) >= spec.eta || k - iota[k - 1] > spec.t_max;
        xhat.push(if trigger {
            x[k]
        } else {
            spec.a * xhat[k - 1] + spec.b * u
        });
        e.push(x[k] - xhat[k]);
        delta.push(trigger);
        iota.push(if trigger { k } else { iota[k - 1] });
    }
    TrialTrace {
        x,
        xhat,
        e,
        delta,
        iota,
    }
}

/// Aggregate of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub trials: u64,
    /// Empirical ACR: trigger fraction per step, no stationary value.
    pub acr: AcrSeries,
    /// `error_samples[d-1]`: closed-loop errors observed `d` steps after a
    /// transmission (with no transmission in between), pooled over all
    /// transmission instants and trials, `d = 1..=t_max`.
    pub error_samples: Vec<Vec<f64>>,
    /// `open_loop_samples[k-1]`: never-reset errors after `k` steps,
    /// rebuilt per trial from the same noise stream, `k = 1..=t_max`.
    pub open_loop_samples: Vec<Vec<f64>>,
    /// Post-transmission runs fully observed to depth `n` with the first
    /// `n - 1` steps silent (the denominator of the depth-`n` conditional
    /// frequency).
    pub run_risk: Vec<u64>,
    /// Of those, runs whose `n`-th step was silent as well.
    pub run_survive: Vec<u64>,
}

/// Order-insensitive fold of trial traces into an [`McSummary`].
pub struct McAccumulator {
    spec: SystemSpec,
    horizon: usize,
    master_seed: u64,
    trials: u64,
    trigger_counts: Vec<u64>,
    error_samples: Vec<Vec<f64>>,
    open_loop_samples: Vec<Vec<f64>>,
    run_risk: Vec<u64>,
    run_survive: Vec<u64>,
}

impl McAccumulator {
    pub fn new(spec: &SystemSpec, horizon: usize, master_seed: u64) -> Self {
        let t = spec.t_max;
        Self {
            spec: spec.clone(),
            horizon,
            master_seed,
            trials: 0,
            trigger_counts: vec![0; horizon + 1],
            error_samples: vec![Vec::new(); t],
            open_loop_samples: vec![Vec::new(); t],
            run_risk: vec![0; t],
            run_survive: vec![0; t],
        }
    }

    /// Folds the trace of trial `index` in. Must be called once per index;
    /// the resulting summary does not depend on the call order as long as
    /// traces are pushed in index order per batch (counts commute, sample
    /// pools are ordered by the caller).
    pub fn push(&mut self, index: u64, trace: &TrialTrace) {
        debug_assert_eq!(trace.delta.len(), self.horizon + 1);
        self.trials += 1;
        for (count, &d) in self.trigger_counts.iter_mut().zip(&trace.delta) {
            *count += u64::from(d);
        }
        for k in 1..=self.horizon {
            if !trace.delta[k] {
                let depth = k - trace.iota[k];
                self.error_samples[depth - 1].push(trace.e[k]);
            }
        }
        for k in 0..=self.horizon {
            if !trace.delta[k] {
                continue;
            }
            // run starting at the transmission instant k
            let mut d_end = 0;
            while k + d_end < self.horizon && !trace.delta[k + d_end + 1] {
                d_end += 1;
            }
            for n in 1..=self.spec.t_max {
                if k + n > self.horizon {
                    break;
                }
                if d_end >= n - 1 {
                    self.run_risk[n - 1] += 1;
                }
                if d_end >= n {
                    self.run_survive[n - 1] += 1;
                }
            }
        }
        // replay the trial's noise prefix without the reset branch
        let mut rng = trial_rng(self.master_seed, index);
        let mut e_open = 0.0;
        for k in 1..=self.spec.t_max.min(self.horizon) {
            e_open = self.spec.a * e_open + rng.normal(self.spec.sigma);
            self.open_loop_samples[k - 1].push(e_open);
        }
    }

    pub fn finish(self) -> McSummary {
        let trials = self.trials.max(1);
        let values = self
            .trigger_counts
            .iter()
            .map(|&c| c as f64 / trials as f64)
            .collect::<Vec<_>>();
        let acr = AcrSeries::new(values, None, Method::MonteCarlo)
            .expect("trigger fractions are probabilities");
        McSummary {
            trials: self.trials,
            acr,
            error_samples: self.error_samples,
            open_loop_samples: self.open_loop_samples,
            run_risk: self.run_risk,
            run_survive: self.run_survive,
        }
    }
}

/// Runs `trials` independent trials with per-trial streams derived from
/// `master_seed` and folds them into a summary.
pub fn monte_carlo_acr<C>(
    spec: &SystemSpec,
    controller: C,
    horizon: usize,
    trials: u64,
    master_seed: u64,
) -> McSummary
where
    C: Fn(f64, usize) -> f64,
{
    let mut acc = McAccumulator::new(spec, horizon, master_seed);
    for index in 0..trials {
        let trace = simulate_trial(
            spec,
            &controller,
            horizon,
            &mut trial_rng(master_seed, index),
        );
        acc.push(index, &trace);
    }
    acc.finish()
}

/// A conditional-frequency estimate of one predictive coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffEstimate {
    pub value: f64,
    /// Number of fully observed runs behind the estimate.
    pub support: u64,
    /// Fewer than 100 observations.
    pub low_confidence: bool,
}

/// Estimates the predictive coefficients from run statistics:
/// `value[n-1] = (#runs silent through depth n) / (#runs silent through
/// depth n-1)`, pooled over all transmission instants and trials. Runs cut
/// short by the horizon are excluded from both counts at depths they could
/// not have reached.
pub fn conditional_frequencies(summary: &McSummary) -> Vec<CoeffEstimate> {
    summary
        .run_risk
        .iter()
        .zip(&summary.run_survive)
        .map(|(&risk, &survive)| CoeffEstimate {
            value: if risk > 0 {
                survive as f64 / risk as f64
            } else {
                0.0
            },
            support: risk,
            low_confidence: risk < 100,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_spec() -> SystemSpec {
        SystemSpec::new(1.25, 1.0, 1.0, -2.0, 1.0, 5).unwrap()
    }

    fn feedback(xhat: f64, _k: usize) -> f64 {
        -xhat
    }

    /// Re-derives every trace invariant from scratch.
    fn check_trace(spec: &SystemSpec, trace: &TrialTrace) {
        let n = trace.delta.len();
        assert!(trace.delta[0]);
        assert_eq!(trace.iota[0], 0);
        let mut zero_run = 0;
        for k in 1..n {
            let expect =
                libm::fabs(trace.e[k - 1]) >= spec.eta || k - trace.iota[k - 1] > spec.t_max;
            assert_eq!(trace.delta[k], expect, "scheduler mismatch at k={k}");
            assert_eq!(trace.e[k], trace.x[k] - trace.xhat[k]);
            if trace.delta[k] {
                assert_eq!(trace.e[k], 0.0, "no reset at k={k}");
                assert_eq!(trace.iota[k], k);
                zero_run = 0;
            } else {
                assert_eq!(trace.iota[k], trace.iota[k - 1]);
                zero_run += 1;
                assert!(zero_run <= spec.t_max, "silent run exceeded t_max at k={k}");
            }
        }
    }

    #[test]
    fn unreachable_threshold_gives_periodic_pattern() {
        let spec = SystemSpec::new(1.25, 1.0, 1.0, -2.0, 1e9, 5).unwrap();
        let trace = simulate_trial(&spec, feedback, 60, &mut Rng::new(1));
        for (k, &d) in trace.delta.iter().enumerate() {
            assert_eq!(d, k % (spec.t_max + 1) == 0, "k={k}");
        }
    }

    #[test]
    fn vanishing_threshold_alternates_after_first_error() {
        // Every nonzero error triggers, and each trigger resets the error to
        // zero, which in turn blocks the next step: from k = 2 on the
        // pattern alternates 1, 0, 1, 0, ...
        let spec = SystemSpec::new(1.25, 1.0, 1.0, -2.0, 1e-12, 5).unwrap();
        let trace = simulate_trial(&spec, feedback, 60, &mut Rng::new(2));
        assert!(!trace.delta[1]);
        for k in 2..=60 {
            assert_eq!(trace.delta[k], k % 2 == 0, "k={k}");
        }
    }

    #[test]
    fn paper_trace_satisfies_invariants() {
        let spec = paper_spec();
        for seed in 0..4 {
            let trace = simulate_trial(&spec, feedback, 1000, &mut Rng::new(seed));
            check_trace(&spec, &trace);
        }
    }

    #[test]
    fn single_trial_summary_is_the_trace() {
        let spec = paper_spec();
        let summary = monte_carlo_acr(&spec, feedback, 50, 1, 7);
        let trace = simulate_trial(&spec, feedback, 50, &mut trial_rng(7, 0));
        for k in 0..=50 {
            assert_eq!(summary.acr.values()[k], f64::from(u8::from(trace.delta[k])));
        }
    }

    #[test]
    fn summary_is_reproducible() {
        let spec = paper_spec();
        let a = monte_carlo_acr(&spec, feedback, 40, 200, 11);
        let b = monte_carlo_acr(&spec, feedback, 40, 200, 11);
        assert_eq!(a, b);
    }

    #[test]
    fn open_loop_replay_matches_direct_recursion() {
        let spec = paper_spec();
        let summary = monte_carlo_acr(&spec, feedback, 30, 5, 13);
        for index in 0..5u64 {
            let mut rng = trial_rng(13, index);
            let mut e = 0.0;
            for k in 1..=spec.t_max {
                e = spec.a * e + rng.normal(spec.sigma);
                assert_eq!(summary.open_loop_samples[k - 1][index as usize], e);
            }
        }
    }

    #[test]
    fn controller_does_not_move_the_communication_rate() {
        let spec = paper_spec();
        let a = monte_carlo_acr(&spec, feedback, 60, 2000, 17);
        let b = monte_carlo_acr(&spec, |xhat, _| -0.8 * xhat, 60, 2000, 17);
        for (va, vb) in a.acr.values().iter().zip(b.acr.values()) {
            assert!((va - vb).abs() < 1e-3, "{va} vs {vb}");
        }
    }

    #[test]
    fn conditional_frequencies_with_unreachable_threshold() {
        let spec = SystemSpec::new(1.25, 1.0, 1.0, -2.0, 1e9, 4).unwrap();
        let summary = monte_carlo_acr(&spec, feedback, 100, 50, 3);
        for est in conditional_frequencies(&summary) {
            assert_eq!(est.value, 1.0);
            assert!(!est.low_confidence);
        }
    }

    #[test]
    fn conditional_frequencies_flag_thin_data() {
        let spec = paper_spec();
        let summary = monte_carlo_acr(&spec, feedback, 6, 30, 3);
        let ests = conditional_frequencies(&summary);
        assert!(ests.iter().any(|e| e.low_confidence));
    }

    #[test]
    fn pooled_frequencies_match_worked_values() {
        let spec = paper_spec();
        let summary = monte_carlo_acr(&spec, feedback, 100, 2000, 23);
        let ests = conditional_frequencies(&summary);
        assert!(ests[0].value == 1.0);
        assert!(
            (ests[1].value - 0.6827).abs() < 0.01,
            "pbar2 {}",
            ests[1].value
        );
        assert!(
            (ests[2].value - 0.5872).abs() < 0.01,
            "pbar3 {}",
            ests[2].value
        );
        assert!(ests.iter().all(|e| !e.low_confidence));
    }
}
