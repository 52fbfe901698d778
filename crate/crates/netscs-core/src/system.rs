//! Scalar NET-SCS parameters shared by every engine.

use crate::error::{Error, Result};

/// Parameters of the scalar plant, its noise, and the event scheduler.
///
/// Plant: `x[k+1] = a x[k] + b u[k] + w[k]` with `w[k] ~ N(0, sigma^2)` i.i.d.
/// Scheduler: transmit at step `k` when `|e[k-1]| >= eta` or when more than
/// `t_max` steps have passed since the last transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    /// Plant gain.
    pub a: f64,
    /// Input gain.
    pub b: f64,
    /// Noise standard deviation, `> 0`.
    pub sigma: f64,
    /// Known deterministic initial state.
    pub x0: f64,
    /// Triggering threshold, `> 0`.
    pub eta: f64,
    /// Maximum inter-communication interval in steps, `>= 1`.
    pub t_max: usize,
}

impl SystemSpec {
    pub fn new(a: f64, b: f64, sigma: f64, x0: f64, eta: f64, t_max: usize) -> Result<Self> {
        let spec = Self {
            a,
            b,
            sigma,
            x0,
            eta,
            t_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() {
            return Err(Error::InvalidParameter("a must be finite"));
        }
        if !self.b.is_finite() {
            return Err(Error::InvalidParameter("b must be finite"));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidParameter("x0 must be finite"));
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::InvalidParameter("sigma must be positive and finite"));
        }
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(Error::InvalidParameter("eta must be positive and finite"));
        }
        if self.t_max < 1 {
            return Err(Error::InvalidParameter("t_max must be at least 1"));
        }
        Ok(())
    }

    /// Variance of the never-reset estimation error after `k` steps:
    /// `sigma^2 * sum_{n=0}^{k-1} a^(2n)`.
    pub fn open_loop_variance(&self, k: usize) -> f64 {
        let a2 = self.a * self.a;
        let mut sum = 0.0;
        let mut pow = 1.0;
        for _ in 0..k {
            sum += pow;
            pow *= a2;
        }
        self.sigma * self.sigma * sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_names_the_field() {
        assert!(SystemSpec::new(1.25, 1.0, 1.0, -2.0, 1.0, 5).is_ok());
        let e = SystemSpec::new(1.0, 1.0, 0.0, 0.0, 1.0, 5).unwrap_err();
        assert_eq!(
            e,
            Error::InvalidParameter("sigma must be positive and finite")
        );
        let e = SystemSpec::new(1.0, 1.0, 1.0, 0.0, -1.0, 5).unwrap_err();
        assert_eq!(
            e,
            Error::InvalidParameter("eta must be positive and finite")
        );
        let e = SystemSpec::new(1.0, 1.0, 1.0, 0.0, 1.0, 0).unwrap_err();
        assert_eq!(e, Error::InvalidParameter("t_max must be at least 1"));
        assert!(SystemSpec::new(f64::NAN, 1.0, 1.0, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn open_loop_variance_matches_geometric_sum() {
        let spec = SystemSpec::new(1.25, 1.0, 1.0, -2.0, 1.0, 5).unwrap();
        assert!((spec.open_loop_variance(1) - 1.0).abs() < 1e-12);
        assert!((spec.open_loop_variance(2) - 2.5625).abs() < 1e-12);
        assert!((spec.open_loop_variance(4) - 8.818603515625).abs() < 1e-12);
        assert!((spec.open_loop_variance(5) - 14.779067993164062).abs() < 1e-12);
    }
}
