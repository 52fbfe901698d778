//! Communication-rate analysis for event-triggered networked stochastic
//! control systems (NET-SCS).
//!
//! A scalar linear plant `x[k+1] = A x[k] + B u[k] + w[k]` is observed by a
//! remote sensor. The sensor transmits a sample only when the state-estimation
//! error leaves a threshold band `[-eta, eta]` or when `T` steps have passed
//! since the last transmission. The fraction of steps with an active
//! transmission is the average communication rate (ACR).
//!
//! This crate computes the ACR four ways:
//!
//! * [`coeffs::quadrature_coefficients`] — exact propagation of the error
//!   density through alternating truncation and Gaussian convolution on a
//!   grid, integrated with composite Simpson rules;
//! * [`coeffs::particle_coefficients`] — a particle approximation of the same
//!   recursion using Gaussian kernel density estimates;
//! * [`coeffs::open_loop_coefficients`] — the conventional closed form that
//!   ignores the truncation (and therefore overestimates the ACR);
//! * [`sim::monte_carlo_acr`] — a ground-truth Monte Carlo simulation of the
//!   full plant/estimator/scheduler loop.
//!
//! The coefficient sets feed a linear recursion ([`acr::recursive_acr`]) whose
//! fixed point is the stationary ACR ([`acr::stationary_acr`]); convergence is
//! certified with the Jury stability test ([`acr::jury_stable`]).
//!
//! The crate is `no_std` (with `alloc`); all floating-point math goes through
//! `libm` so results are identical with or without the `std` feature.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod acr;
pub mod coeffs;
pub mod dist;
pub mod error;
pub mod platoon;
pub mod rng;
pub mod sim;
pub mod system;

pub use error::{Error, Result};
pub use system::SystemSpec;
