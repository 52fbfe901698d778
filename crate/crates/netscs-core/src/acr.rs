//! Transient and stationary average communication rate, and the Jury
//! stability test that certifies convergence of the recursion.

use alloc::vec;
use alloc::vec::Vec;

use crate::coeffs::{CoeffSet, Method};
use crate::error::{Error, Result};

/// Iteration cap for fixed-point detection.
const CONVERGENCE_CAP: usize = 10_000;
const CONVERGENCE_TOL: f64 = 1e-10;

/// A transient ACR sequence `values[k] = E(delta_k)`, with the stationary
/// value when the producing method defines one.
#[derive(Debug, Clone, PartialEq)]
pub struct AcrSeries {
    values: Vec<f64>,
    stationary: Option<f64>,
    method: Method,
    clamp_excess: f64,
}

impl AcrSeries {
    pub fn new(values: Vec<f64>, stationary: Option<f64>, method: Method) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("ACR series must not be empty"));
        }
        if values
            .iter()
            .any(|v| !v.is_finite() || !(0.0..=1.0).contains(v))
        {
            return Err(Error::InvalidParameter("ACR values must lie in [0, 1]"));
        }
        Ok(Self {
            values,
            stationary,
            method,
            clamp_excess: 0.0,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stationary(&self) -> Option<f64> {
        self.stationary
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Largest amount by which the recursion left `[0, 1]` before clamping.
    /// Zero for well-behaved coefficient sets; values above `1e-9` warrant a
    /// diagnostic.
    pub fn clamp_excess(&self) -> f64 {
        self.clamp_excess
    }

    /// Mean of the last quarter of the sequence (excluding `k = 0`), the
    /// empirical stand-in for the stationary value.
    pub fn tail_average(&self) -> f64 {
        let k_max = self.values.len() - 1;
        if k_max == 0 {
            return self.values[0];
        }
        let start = (k_max - k_max / 4).max(1);
        let tail = &self.values[start..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

/// Evolves `E(delta_k) = 1 - sum_{n=1}^{min(k,T)} p[n] E(delta_{k-n})` from
/// `E(delta_0) = 1` up to `k = k_max`, clamping to `[0, 1]` and recording the
/// largest clamp. The stationary value of [`stationary_acr`] is attached.
pub fn recursive_acr(coeffs: &CoeffSet, k_max: usize) -> AcrSeries {
    let p = coeffs.p();
    let t_max = p.len();
    let mut values = Vec::with_capacity(k_max + 1);
    values.push(1.0);
    let mut excess: f64 = 0.0;
    for k in 1..=k_max {
        let mut sum = 0.0;
        for n in 1..=k.min(t_max) {
            sum += p[n - 1] * values[k - n];
        }
        let v = 1.0 - sum;
        excess = excess.max(-v).max(v - 1.0);
        values.push(v.clamp(0.0, 1.0));
    }
    AcrSeries {
        values,
        stationary: Some(stationary_acr(coeffs)),
        method: coeffs.method(),
        clamp_excess: excess.max(0.0),
    }
}

/// Stationary ACR: `1 / (1 + sum_{n=1}^{T} p[n])`.
pub fn stationary_acr(coeffs: &CoeffSet) -> f64 {
    1.0 / (1.0 + coeffs.p().iter().sum::<f64>())
}

/// Runs the recursion until the value changes by less than `1e-10` for `T`
/// consecutive steps (or `10^4` steps), returning the fixed point reached
/// and the step count.
pub fn converged_acr(coeffs: &CoeffSet) -> (f64, usize) {
    let p = coeffs.p();
    let t_max = p.len();
    let mut values = vec![1.0];
    let mut quiet = 0;
    for k in 1..=CONVERGENCE_CAP {
        let mut sum = 0.0;
        for n in 1..=k.min(t_max) {
            sum += p[n - 1] * values[k - n];
        }
        let v = (1.0 - sum).clamp(0.0, 1.0);
        values.push(v);
        if (v - values[k - 1]).abs() < CONVERGENCE_TOL {
            quiet += 1;
            if quiet >= t_max {
                return (v, k);
            }
        } else {
            quiet = 0;
        }
    }
    (*values.last().unwrap(), CONVERGENCE_CAP)
}

/// Outcome of the Jury test on a real polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct JuryReport {
    /// All roots strictly inside the unit circle.
    pub stable: bool,
    /// The Jury array: the coefficient row, then alternating reversed and
    /// derived rows, ending at the first three-element derived row.
    pub rows: Vec<Vec<f64>>,
    /// First rule violated, in the check order 3, 1, 2, 4; `None` when
    /// stable.
    pub failed_rule: Option<u8>,
}

/// Jury stability test for `D(z) = a[0] + a[1] z + ... + a[N] z^N`.
///
/// Rule 1: `D(1) > 0`. Rule 2: `(-1)^N D(-1) > 0`. Rule 3: `|a[0]| < |a[N]|`.
/// Rule 4: in every derived row of the Jury array, the first element
/// dominates the last in magnitude. Boundary cases count as failures, so a
/// marginally stable polynomial is reported unstable.
pub fn jury_stable(poly: &[f64]) -> Result<JuryReport> {
    if poly.len() < 2 {
        return Err(Error::InvalidParameter(
            "polynomial must have degree at least 1",
        ));
    }
    if poly.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidParameter(
            "polynomial coefficients must be finite",
        ));
    }
    let n = poly.len() - 1;
    let a_n = poly[n];
    if a_n == 0.0 {
        return Err(Error::InvalidParameter(
            "leading coefficient must be nonzero",
        ));
    }
    let mut rows = vec![poly.to_vec()];
    let mut failed: Option<u8> = None;
    let check = |ok: bool, rule: u8, failed: &mut Option<u8>| {
        if !ok && failed.is_none() {
            *failed = Some(rule);
        }
    };
    check(poly[0].abs() < a_n.abs(), 3, &mut failed);
    let at = |z: f64| poly.iter().rev().fold(0.0, |acc, c| acc * z + c);
    check(at(1.0) > 0.0, 1, &mut failed);
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    check(sign * at(-1.0) > 0.0, 2, &mut failed);
    let mut current = poly.to_vec();
    while current.len() > 3 {
        let m = current.len() - 1;
        let derived: Vec<f64> = (0..m)
            .map(|k| current[0] * current[k] - current[m - k] * current[m])
            .collect();
        check(derived[0].abs() > derived[m - 1].abs(), 4, &mut failed);
        rows.push(current.iter().rev().copied().collect());
        rows.push(derived.clone());
        current = derived;
    }
    Ok(JuryReport {
        stable: failed.is_none(),
        rows,
        failed_rule: failed,
    })
}

/// Characteristic polynomial of the ACR recursion in ascending order:
/// `p[T], p[T-1], ..., p[1], 1`.
pub fn characteristic_polynomial(coeffs: &CoeffSet) -> Vec<f64> {
    let p = coeffs.p();
    let mut poly: Vec<f64> = p.iter().rev().copied().collect();
    poly.push(1.0);
    poly
}

/// Homogeneous transition matrix of the recursion, row-major `T x T`: a
/// shifted identity with last row `(-p[T], ..., -p[1])`. Its powers applied
/// to any vector decay exactly when the recursion converges.
pub fn companion_matrix(coeffs: &CoeffSet) -> Vec<f64> {
    let p = coeffs.p();
    let t = p.len();
    let mut m = vec![0.0; t * t];
    for i in 0..t.saturating_sub(1) {
        m[i * t + i + 1] = 1.0;
    }
    for j in 0..t {
        m[(t - 1) * t + j] = -p[t - 1 - j];
    }
    m
}
