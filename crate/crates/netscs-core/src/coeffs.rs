//! Predictive non-communication coefficients.
//!
//! `pbar[n-1]` is the conditional probability of one more silent step given
//! `n - 1` silent steps since the last transmission; stacking the
//! coefficients (`p[n-1] = pbar[0] * ... * pbar[n-1]`) gives the probability
//! of `n` consecutive silent steps. Three engines produce them:
//!
//! * [`quadrature_coefficients`] — grid propagation of the truncated error
//!   density (exact up to quadrature error);
//! * [`particle_coefficients`] — particle/kernel approximation of the same
//!   recursion, optionally with the truncation steps removed;
//! * [`open_loop_coefficients`] — closed form for the never-reset Gaussian
//!   error, the conventional approximation.

use alloc::vec;
use alloc::vec::Vec;

use crate::dist::{self, Grid, GridOptions, GridPdf, ParticleSet};
use crate::error::{Error, Result};
use crate::rng::{Rng, PARTICLE_OPEN_LOOP_STREAM, PARTICLE_STREAM};
use crate::system::SystemSpec;

/// The five ways a coefficient set or ACR series can be produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Truncated-density propagation by quadrature.
    Quadrature,
    /// Particle/kernel approximation of the truncated recursion.
    Particle,
    /// Closed-form Gaussian (truncation ignored).
    OpenLoop,
    /// Particle approximation with the truncation steps removed.
    OpenLoopParticle,
    /// Empirical, from Monte Carlo simulation.
    MonteCarlo,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::Particle => "particle",
            Method::OpenLoop => "open-loop",
            Method::OpenLoopParticle => "open-loop-particle",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Predictive coefficients `pbar[0..T]` and their stacked products `p[0..T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSet {
    pbar: Vec<f64>,
    p: Vec<f64>,
    method: Method,
}

impl CoeffSet {
    /// Validates the coefficients and computes the stacked indexes.
    pub fn new(pbar: Vec<f64>, method: Method) -> Result<Self> {
        let p = stack(&pbar)?;
        Ok(Self { pbar, p, method })
    }

    pub fn pbar(&self) -> &[f64] {
        &self.pbar
    }

    /// Stacked indexes; `p[n-1]` is the probability of `n` consecutive
    /// silent steps after a transmission.
    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn t_max(&self) -> usize {
        self.pbar.len()
    }
}

/// Running products of the coefficients. Entries must lie in `[0, 1]`.
pub fn stack(pbar: &[f64]) -> Result<Vec<f64>> {
    if pbar.is_empty() {
        return Err(Error::InvalidParameter(
            "coefficient sequence must not be empty",
        ));
    }
    let mut out = Vec::with_capacity(pbar.len());
    let mut prod = 1.0;
    for &c in pbar {
        if !c.is_finite() || !(0.0..=1.0).contains(&c) {
            return Err(Error::InvalidParameter("coefficients must lie in [0, 1]"));
        }
        prod *= c;
        out.push(prod);
    }
    Ok(out)
}

/// Densities of the closed-loop error `k` steps after a transmission,
/// for `k = 1..=k_max`, produced by alternating truncation to
/// `[-eta, eta]` and Gaussian propagation starting from `N(0, sigma^2)`.
///
/// The step-0 error is identically zero and is never gridded; the returned
/// vector starts at `k = 1`. The support follows
/// `|a| * min(eta, previous support) + support_factor * sigma` per step, so
/// it stays fixed while truncation is active and widens geometrically when
/// the threshold lies beyond the grid.
pub fn closed_loop_error_pdfs(
    spec: &SystemSpec,
    opts: &GridOptions,
    k_max: usize,
) -> Result<Vec<GridPdf>> {
    spec.validate()?;
    opts.validate()?;
    if k_max < 1 {
        return Err(Error::InvalidParameter("k_max must be at least 1"));
    }
    let grid = Grid::aligned(opts.closed_loop_span(spec), spec.eta, opts)?;
    let mut pdfs = Vec::with_capacity(k_max);
    pdfs.push(dist::make_gaussian(spec.sigma, &grid)?);
    for _ in 2..=k_max {
        let trunc = dist::truncate(pdfs.last().unwrap(), spec.eta)?;
        let span = libm::fabs(spec.a) * trunc.hi() + opts.support_factor * spec.sigma;
        let grid = Grid::aligned(span, spec.eta, opts)?;
        pdfs.push(dist::propagate(&trunc, spec.a, spec.sigma, &grid)?);
    }
    Ok(pdfs)
}

/// Coefficients from the truncated-density recursion: `pbar[0] = 1` and
/// `pbar[i-1]` is the mass of the step-`(i-1)` error density in
/// `[-eta, eta]`.
pub fn quadrature_coefficients(spec: &SystemSpec, opts: &GridOptions) -> Result<CoeffSet> {
    spec.validate()?;
    let mut pbar = vec![1.0];
    if spec.t_max >= 2 {
        let pdfs = closed_loop_error_pdfs(spec, opts, spec.t_max - 1)?;
        for pdf in &pdfs {
            pbar.push(dist::integrate(pdf, -spec.eta, spec.eta)?);
        }
    }
    CoeffSet::new(pbar, Method::Quadrature)
}

/// Coefficients for the never-reset Gaussian error: the error after `i - 1`
/// steps is `N(0, sigma^2 * sum a^(2n))`, so
/// `pbar[i-1] = erf(eta / sqrt(2 * var))`.
pub fn open_loop_coefficients(spec: &SystemSpec) -> Result<CoeffSet> {
    spec.validate()?;
    let mut pbar = vec![1.0];
    for i in 2..=spec.t_max {
        let var = spec.open_loop_variance(i - 1);
        pbar.push(libm::erf(spec.eta / libm::sqrt(2.0 * var)));
    }
    CoeffSet::new(pbar, Method::OpenLoop)
}

/// Parameters of the particle engine.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleOptions {
    /// Particle count, at least 100.
    pub particles: usize,
    /// Gaussian kernel bandwidth.
    pub bandwidth: f64,
    /// Remove the truncation/resampling steps, approximating the open-loop
    /// coefficients instead. Kept for comparison studies only.
    pub open_loop: bool,
    pub grid: GridOptions,
}

impl Default for ParticleOptions {
    fn default() -> Self {
        Self {
            particles: 10_000,
            bandwidth: 0.1,
            open_loop: false,
            grid: GridOptions::default(),
        }
    }
}

/// Particle approximation of the coefficient recursion.
///
/// Per iteration: drop particles at or beyond the threshold, resample from
/// the Gaussian-kernel estimate of the survivors (a uniformly chosen
/// survivor plus `N(0, bandwidth^2)` jitter — an exact draw from the kernel
/// mixture), push every particle through `z <- a z + N(0, sigma^2)`, then
/// estimate the new density on a grid and integrate it over `[-eta, eta]`.
///
/// The result is a pure function of `(spec, opts, seed)`; see [`crate::rng`]
/// for the stream layout.
pub fn particle_coefficients(
    spec: &SystemSpec,
    opts: &ParticleOptions,
    seed: u64,
) -> Result<CoeffSet> {
    spec.validate()?;
    opts.grid.validate()?;
    if opts.particles < 100 {
        return Err(Error::InvalidParameter(
            "particle count must be at least 100",
        ));
    }
    if !opts.bandwidth.is_finite() || opts.bandwidth <= 0.0 {
        return Err(Error::InvalidParameter(
            "bandwidth must be positive and finite",
        ));
    }
    let stream = if opts.open_loop {
        PARTICLE_OPEN_LOOP_STREAM
    } else {
        PARTICLE_STREAM
    };
    let mut rng = Rng::stream(seed, stream);
    let method = if opts.open_loop {
        Method::OpenLoopParticle
    } else {
        Method::Particle
    };

    let mut pbar = vec![1.0];
    if spec.t_max >= 2 {
        pbar.push(libm::erf(spec.eta / (libm::sqrt(2.0) * spec.sigma)));
    }
    let mut particles: Vec<f64> = (0..opts.particles)
        .map(|_| rng.normal(spec.sigma))
        .collect();
    for _ in 2..spec.t_max {
        if !opts.open_loop {
            particles.retain(|z| libm::fabs(*z) < spec.eta);
            if particles.is_empty() {
                return Err(Error::DegenerateTruncation(0.0));
            }
            let survivors = particles.len();
            particles = (0..opts.particles)
                .map(|_| {
                    let pick = particles[rng.index(survivors)];
                    pick + rng.normal(opts.bandwidth)
                })
                .collect();
        }
        for z in &mut particles {
            *z = spec.a * *z + rng.normal(spec.sigma);
        }
        pbar.push(kernel_mass(spec, opts, &particles)?);
    }
    CoeffSet::new(pbar, method)
}

/// Mass of the kernel density estimate of `particles` in `[-eta, eta]`.
fn kernel_mass(spec: &SystemSpec, opts: &ParticleOptions, particles: &[f64]) -> Result<f64> {
    let mut extent: f64 = 0.0;
    for z in particles {
        extent = extent.max(libm::fabs(*z));
    }
    let span = opts
        .grid
        .closed_loop_span(spec)
        .max(extent + 9.0 * opts.bandwidth);
    let grid = Grid::aligned(span, spec.eta, &opts.grid)?;
    let set = ParticleSet::new(particles.to_vec(), opts.bandwidth)?;
    let pdf = dist::kde(&set, &grid)?;
    dist::integrate(&pdf, -spec.eta, spec.eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_spec() -> SystemSpec {
        SystemSpec::new(1.25, 1.0, 1.0, -2.0, 1.0, 5).unwrap()
    }

    #[test]
    fn quadrature_reproduces_worked_values() {
        let set = quadrature_coefficients(&paper_spec(), &GridOptions::default()).unwrap();
        assert_eq!(set.t_max(), 5);
        assert_eq!(set.pbar()[0], 1.0);
        assert!(
            (set.pbar()[1] - 0.6827).abs() < 1e-3,
            "pbar2 {}",
            set.pbar()[1]
        );
        assert!(
            (set.pbar()[2] - 0.5872).abs() < 2e-3,
            "pbar3 {}",
            set.pbar()[2]
        );
        // stacked index used in the worked example
        assert!((set.p()[2] - 0.4009).abs() < 1e-3, "p3 {}", set.p()[2]);
    }

    #[test]
    fn unreachable_threshold_gives_unit_coefficients() {
        let spec = SystemSpec::new(0.8, 1.0, 1.0, 0.0, 50.0, 5).unwrap();
        let set = quadrature_coefficients(&spec, &GridOptions::default()).unwrap();
        for (n, c) in set.pbar().iter().enumerate() {
            assert!((c - 1.0).abs() < 1e-6, "pbar[{n}] = {c}");
        }
        // even an absurd threshold with an expanding plant stays well-posed
        let wild = SystemSpec::new(1.25, 1.0, 1.0, 0.0, 1e9, 4).unwrap();
        let set = quadrature_coefficients(&wild, &GridOptions::default()).unwrap();
        for c in set.pbar() {
            assert!((c - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn open_loop_matches_erf_closed_form() {
        let set = open_loop_coefficients(&paper_spec()).unwrap();
        let exact2 = libm::erf(1.0 / libm::sqrt(2.0));
        assert!((set.pbar()[1] - exact2).abs() < 1e-12);
        assert!((set.pbar()[1] - 0.6827).abs() < 1e-4);
        assert!(
            (set.pbar()[2] - 0.4679).abs() < 1e-3,
            "pbar3 {}",
            set.pbar()[2]
        );
        // a = 0: the variance stops growing after one step
        let frozen = SystemSpec::new(0.0, 1.0, 1.0, 0.0, 1.0, 6).unwrap();
        let set = open_loop_coefficients(&frozen).unwrap();
        for c in &set.pbar()[1..] {
            assert!((c - exact2).abs() < 1e-12);
        }
    }

    #[test]
    fn first_steps_agree_between_routes() {
        let q = quadrature_coefficients(&paper_spec(), &GridOptions::default()).unwrap();
        let o = open_loop_coefficients(&paper_spec()).unwrap();
        // both integrate N(0, sigma^2) over [-eta, eta]
        assert!((q.pbar()[1] - o.pbar()[1]).abs() < 1e-9);
        // truncation concentrates mass, so later coefficients dominate
        for i in 2..5 {
            assert!(
                q.pbar()[i] > o.pbar()[i],
                "i={i}: {} <= {}",
                q.pbar()[i],
                o.pbar()[i]
            );
        }
    }

    #[test]
    fn stack_products() {
        let s = stack(&[1.0, 0.6827, 0.5872]).unwrap();
        assert_eq!(s[0], 1.0);
        assert!((s[1] - 0.6827).abs() < 1e-12);
        assert!((s[2] - 0.4009).abs() < 1e-4);
        assert_eq!(stack(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(stack(&[1.0, 0.5, 0.0]).unwrap(), vec![1.0, 0.5, 0.0]);
        assert!(matches!(stack(&[1.5]), Err(Error::InvalidParameter(_))));
        assert!(matches!(stack(&[-0.1]), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn particle_run_is_deterministic() {
        let opts = ParticleOptions {
            particles: 2_000,
            ..ParticleOptions::default()
        };
        let a = particle_coefficients(&paper_spec(), &opts, 9).unwrap();
        let b = particle_coefficients(&paper_spec(), &opts, 9).unwrap();
        assert_eq!(a, b);
        let c = particle_coefficients(&paper_spec(), &opts, 10).unwrap();
        assert_ne!(a.pbar(), c.pbar());
    }

    #[test]
    fn particle_tracks_quadrature() {
        let q = quadrature_coefficients(&paper_spec(), &GridOptions::default()).unwrap();
        let n = particle_coefficients(&paper_spec(), &ParticleOptions::default(), 1).unwrap();
        for i in 0..5 {
            assert!(
                (q.pbar()[i] - n.pbar()[i]).abs() < 0.02,
                "i={i}: {} vs {}",
                q.pbar()[i],
                n.pbar()[i]
            );
        }
    }

    #[test]
    fn large_particle_run_converges_to_worked_value() {
        let opts = ParticleOptions {
            particles: 1_000_000,
            bandwidth: 0.05,
            ..ParticleOptions::default()
        };
        let set = particle_coefficients(&paper_spec(), &opts, 3).unwrap();
        assert!(
            (set.pbar()[2] - 0.5872).abs() < 0.01,
            "pbar3 {}",
            set.pbar()[2]
        );
    }

    #[test]
    fn open_loop_particles_track_closed_form() {
        let opts = ParticleOptions {
            open_loop: true,
            ..ParticleOptions::default()
        };
        let cnm = particle_coefficients(&paper_spec(), &opts, 4).unwrap();
        assert_eq!(cnm.method(), Method::OpenLoopParticle);
        let cam = open_loop_coefficients(&paper_spec()).unwrap();
        for i in 0..5 {
            assert!(
                (cnm.pbar()[i] - cam.pbar()[i]).abs() < 0.02,
                "i={i}: {} vs {}",
                cnm.pbar()[i],
                cam.pbar()[i]
            );
        }
    }

    #[test]
    fn particle_validation() {
        let opts = ParticleOptions {
            particles: 50,
            ..ParticleOptions::default()
        };
        assert!(matches!(
            particle_coefficients(&paper_spec(), &opts, 0),
            Err(Error::InvalidParameter(_))
        ));
        // threshold far below the noise floor: every particle is removed
        let tiny = SystemSpec::new(1.25, 1.0, 1.0, 0.0, 1e-9, 5).unwrap();
        let opts = ParticleOptions {
            particles: 500,
            ..ParticleOptions::default()
        };
        assert!(matches!(
            particle_coefficients(&tiny, &opts, 0),
            Err(Error::DegenerateTruncation(_))
        ));
    }

    #[test]
    fn degenerate_threshold_propagates_from_quadrature() {
        let tiny = SystemSpec::new(1.25, 1.0, 1.0, 0.0, 1e-30, 5).unwrap();
        assert!(quadrature_coefficients(&tiny, &GridOptions::default()).is_err());
    }
}
