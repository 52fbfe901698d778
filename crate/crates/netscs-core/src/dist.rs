//! One-dimensional probability densities on uniform grids: construction,
//! truncation, Gaussian propagation, quadrature, and kernel density
//! estimation.
//!
//! All supports in this crate are symmetric about zero. Grids are aligned so
//! that the triggering threshold falls exactly on a node (see
//! [`Grid::aligned`]); truncation to `[-eta, eta]` is then an exact subset of
//! the nodes and composite Simpson quadrature keeps its full O(h^4) order
//! through the whole truncate/propagate recursion.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::system::SystemSpec;

pub(crate) const SQRT_TAU: f64 = 2.5066282746310002; // sqrt(2 pi)

/// Gaussian kernel evaluations below this many standard deviations from the
/// mean are kept; beyond it the kernel is below 4e-17 and is skipped.
const KERNEL_RADIUS: f64 = 8.7;

/// Interior mass below which truncation is considered degenerate.
const DEGENERATE_MASS: f64 = 1e-12;

/// Pre-normalization mass loss tolerated by `propagate` before the output
/// grid is declared too narrow.
const MASS_LOSS_TOL: f64 = 1e-8;

pub(crate) fn gaussian_pdf(z: f64, sigma: f64) -> f64 {
    libm::exp(-z * z / (2.0 * sigma * sigma)) / (SQRT_TAU * sigma)
}

/// Grid construction parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    /// Approximate total node count; the actual count is derived from the
    /// threshold alignment and is always odd.
    pub nodes_hint: usize,
    /// Half-width of supports in noise standard deviations beyond the
    /// deterministic extent of the density.
    pub support_factor: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            nodes_hint: 4001,
            support_factor: 8.0,
        }
    }
}

impl GridOptions {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_hint < 3 {
            return Err(Error::InvalidParameter(
                "grid nodes_hint must be at least 3",
            ));
        }
        if !self.support_factor.is_finite() || self.support_factor <= 0.0 {
            return Err(Error::InvalidParameter(
                "grid support_factor must be positive",
            ));
        }
        Ok(())
    }

    /// Support half-width for the closed-loop error densities of `spec`:
    /// `|a| * eta + support_factor * sigma`.
    pub fn closed_loop_span(&self, spec: &SystemSpec) -> f64 {
        libm::fabs(spec.a) * spec.eta + self.support_factor * spec.sigma
    }
}

/// A symmetric uniform grid: nodes `(i - half) * step` for `i = 0..=2*half`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    step: f64,
    half: usize,
}

impl Grid {
    /// Builds a grid covering at least `[-span, span]` whose step divides
    /// `anchor` exactly, so `+-anchor` are nodes whenever they lie inside the
    /// support. The node count is close to `opts.nodes_hint`.
    pub fn aligned(span: f64, anchor: f64, opts: &GridOptions) -> Result<Self> {
        opts.validate()?;
        if !span.is_finite() || span <= 0.0 {
            return Err(Error::InvalidGrid("span must be positive and finite"));
        }
        if !anchor.is_finite() || anchor <= 0.0 {
            return Err(Error::InvalidGrid("anchor must be positive and finite"));
        }
        let half_target = (opts.nodes_hint - 1) / 2;
        let m = libm::round(half_target as f64 * anchor / span).max(1.0);
        let step = anchor / m;
        let half = libm::ceil(span / step - 1e-9);
        // a threshold far below the support scale would need step = anchor,
        // blowing the node count past any useful budget
        if half > 4_194_304.0 {
            return Err(Error::InvalidGrid("span requires too many nodes"));
        }
        let half = half as usize;
        Ok(Self {
            step,
            half: half.max(1),
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        2 * self.half + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn hi(&self) -> f64 {
        self.half as f64 * self.step
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 - self.half as f64) * self.step
    }
}

/// First and second central moments of a density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// A normalized probability density sampled on a symmetric uniform grid.
///
/// Normalization happens in the constructor; the relative mass found before
/// normalization is kept as a diagnostic (see [`GridPdf::normalization_drift`]).
#[derive(Debug, Clone, PartialEq)]
pub struct GridPdf {
    grid: Grid,
    values: Vec<f64>,
    drift: f64,
}

impl GridPdf {
    /// Wraps raw density samples, validating and renormalizing them.
    /// `values.len()` must be odd and at least 3.
    pub fn from_values(grid: Grid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid("value count does not match the grid"));
        }
        if values.len() < 3 || values.len() % 2 == 0 {
            return Err(Error::InvalidGrid("node count must be odd and at least 3"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidGrid(
                "density values must be finite and non-negative",
            ));
        }
        let mass = simpson(&values, grid.step);
        if !mass.is_finite() || mass <= 0.0 {
            return Err(Error::InvalidGrid("density has no mass on the grid"));
        }
        for v in &mut values {
            *v /= mass;
        }
        Ok(Self {
            grid,
            values,
            drift: mass - 1.0,
        })
    }

    pub fn lo(&self) -> f64 {
        -self.grid.hi()
    }

    pub fn hi(&self) -> f64 {
        self.grid.hi()
    }

    pub fn step(&self) -> f64 {
        self.grid.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        self.grid.node(i)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Signed relative deviation of the pre-normalization mass from one.
    /// Values beyond `1e-6` in magnitude indicate quadrature or support
    /// problems and are surfaced as diagnostics by callers.
    pub fn normalization_drift(&self) -> f64 {
        self.drift
    }

    /// Density at an arbitrary point by local quadratic interpolation
    /// (exact at the nodes); zero outside the support.
    pub fn sample_at(&self, x: f64) -> f64 {
        let hi = self.hi();
        if x < -hi || x > hi {
            return 0.0;
        }
        let n = self.values.len();
        let pos = (x + hi) / self.grid.step;
        let center = (libm::round(pos) as usize).clamp(1, n - 2);
        let u = pos - center as f64; // in node units, |u| <= ~0.5
        let (f0, f1, f2) = (
            self.values[center - 1],
            self.values[center],
            self.values[center + 1],
        );
        let q = f1 + 0.5 * u * (f2 - f0) + 0.5 * u * u * (f2 - 2.0 * f1 + f0);
        q.max(0.0)
    }

    fn center(&self) -> usize {
        self.values.len() / 2
    }
}

fn simpson(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    debug_assert!(n % 2 == 1 && n >= 3);
    let mut sum = values[0] + values[n - 1];
    let mut i = 1;
    while i < n - 1 {
        sum += 4.0 * values[i];
        if i + 1 < n - 1 {
            sum += 2.0 * values[i + 1];
        }
        i += 2;
    }
    sum * step / 3.0
}

/// Zero-mean Gaussian density with standard deviation `sigma` on `grid`.
///
/// The grid must reach at least eight standard deviations on each side so
/// that the truncated tail mass stays below quadrature precision.
pub fn make_gaussian(sigma: f64, grid: &Grid) -> Result<GridPdf> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidParameter("sigma must be positive and finite"));
    }
    if grid.hi() < 8.0 * sigma {
        return Err(Error::InvalidGrid(
            "support narrower than eight standard deviations",
        ));
    }
    let values = (0..grid.len())
        .map(|i| gaussian_pdf(grid.node(i), sigma))
        .collect();
    GridPdf::from_values(grid.clone(), values)
}

/// Restricts `pdf` to `[-eta, eta]` and renormalizes to unit mass.
///
/// When `+-eta` fall on grid nodes the result is an exact node subset; when
/// `eta` reaches beyond the support the density is returned unchanged.
pub fn truncate(pdf: &GridPdf, eta: f64) -> Result<GridPdf> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::InvalidParameter("eta must be positive and finite"));
    }
    if eta >= pdf.hi() {
        return Ok(pdf.clone());
    }
    let step = pdf.step();
    let exact = libm::round(eta / step);
    let aligned = exact >= 1.0 && libm::fabs(eta - exact * step) <= 1e-9 * step;
    let (grid, raw): (Grid, Vec<f64>) = if aligned {
        let m = exact as usize;
        let center = pdf.center();
        (
            Grid { step, half: m },
            pdf.values[center - m..=center + m].to_vec(),
        )
    } else {
        // resample onto a fresh grid over [-eta, eta]; interpolation is
        // quadratic, matching the Simpson order
        let m = (libm::round(eta / step) as usize).max(1);
        let new_step = eta / m as f64;
        let grid = Grid {
            step: new_step,
            half: m,
        };
        let raw = (0..grid.len())
            .map(|i| pdf.sample_at(grid.node(i)))
            .collect();
        (grid, raw)
    };
    let mass = simpson(&raw, grid.step);
    if mass.is_nan() || mass < DEGENERATE_MASS {
        return Err(Error::DegenerateTruncation(mass));
    }
    GridPdf::from_values(grid, raw)
}

/// Density of `a * Z + W` where `Z ~ pdf_trunc` and `W ~ N(0, sigma^2)`,
/// evaluated on `grid`:
///
/// `p(z) = integral pdf_trunc(xi) * exp(-(z - a xi)^2 / (2 sigma^2)) / (sqrt(2 pi) sigma) dxi`
///
/// The inner integral runs over the (truncated) input support with composite
/// Simpson weights. Fails when more than `1e-8` of the mass falls outside
/// `grid`.
pub fn propagate(pdf_trunc: &GridPdf, a: f64, sigma: f64, grid: &Grid) -> Result<GridPdf> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidParameter("sigma must be positive and finite"));
    }
    if !a.is_finite() {
        return Err(Error::InvalidParameter("a must be finite"));
    }
    let n_out = grid.len();
    let mut out = vec![0.0; n_out];
    if a == 0.0 {
        // the input integrates to one, so the output is exactly N(0, sigma^2)
        for (i, o) in out.iter_mut().enumerate() {
            *o = gaussian_pdf(grid.node(i), sigma);
        }
    } else {
        let n_in = pdf_trunc.len();
        let step_in = pdf_trunc.step();
        let weighted: Vec<f64> = (0..n_in)
            .map(|j| {
                let c = if j == 0 || j == n_in - 1 {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * step_in / 3.0 * pdf_trunc.values[j]
            })
            .collect();
        let norm = 1.0 / (SQRT_TAU * sigma);
        let inv_two_var = 1.0 / (2.0 * sigma * sigma);
        let radius = KERNEL_RADIUS * sigma;
        let in_hi = pdf_trunc.hi();
        for (i, o) in out.iter_mut().enumerate() {
            let z = grid.node(i);
            // xi window where the kernel exceeds ~4e-17
            let (mut xa, mut xb) = ((z - radius) / a, (z + radius) / a);
            if xa > xb {
                core::mem::swap(&mut xa, &mut xb);
            }
            if xb < -in_hi || xa > in_hi {
                continue;
            }
            let ja = libm::floor((xa.max(-in_hi) + in_hi) / step_in).max(0.0) as usize;
            let jb = (libm::ceil((xb.min(in_hi) + in_hi) / step_in) as usize).min(n_in - 1);
            let mut acc = 0.0;
            for j in ja..=jb {
                let d = z - a * pdf_trunc.node(j);
                acc += weighted[j] * libm::exp(-d * d * inv_two_var);
            }
            *o = acc * norm;
        }
    }
    let mass = simpson(&out, grid.step);
    if mass < 1.0 - MASS_LOSS_TOL {
        return Err(Error::InvalidGrid(
            "output support too narrow: mass lost before normalization",
        ));
    }
    GridPdf::from_values(grid.clone(), out)
}

/// Composite-Simpson integral of `pdf` over `[a, b]` intersected with the
/// support, clamped to `[0, 1]`.
///
/// Ends that do not fall on nodes are handled by integrating the quadratic
/// Simpson interpolant of the enclosing node pair exactly.
pub fn integrate(pdf: &GridPdf, a: f64, b: f64) -> Result<f64> {
    if a.is_nan() || b.is_nan() || a > b {
        return Err(Error::InvalidParameter(
            "integration bounds must satisfy a <= b",
        ));
    }
    let hi = pdf.hi();
    let lo = -hi;
    let (a, b) = (a.max(lo), b.min(hi));
    if a >= b {
        return Ok(0.0);
    }
    let step = pdf.step();
    let values = &pdf.values;
    let mut total = 0.0;
    let n_panels = (values.len() - 1) / 2;
    // first panel overlapping [a, b]
    let p0 = (libm::floor((a - lo) / (2.0 * step)) as usize).min(n_panels - 1);
    for p in p0..n_panels {
        let x0 = lo + (2 * p) as f64 * step;
        let x2 = x0 + 2.0 * step;
        if x0 >= b {
            break;
        }
        let (alpha, beta) = (a.max(x0), b.min(x2));
        if beta <= alpha {
            continue;
        }
        let (f0, f1, f2) = (values[2 * p], values[2 * p + 1], values[2 * p + 2]);
        // quadratic through the three nodes in local coordinate u = (x - x1)/h
        let x1 = x0 + step;
        let (u0, u1) = ((alpha - x1) / step, (beta - x1) / step);
        let prim =
            |u: f64| f1 * u + 0.25 * (f2 - f0) * u * u + (f0 - 2.0 * f1 + f2) / 6.0 * u * u * u;
        total += step * (prim(u1) - prim(u0));
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Mean and variance of `pdf` by composite Simpson quadrature.
pub fn moments(pdf: &GridPdf) -> Moments {
    let step = pdf.step();
    let first: Vec<f64> = (0..pdf.len())
        .map(|i| pdf.node(i) * pdf.values[i])
        .collect();
    let second: Vec<f64> = (0..pdf.len())
        .map(|i| pdf.node(i) * pdf.node(i) * pdf.values[i])
        .collect();
    let mean = simpson(&first, step);
    let variance = (simpson(&second, step) - mean * mean).max(0.0);
    Moments { mean, variance }
}

/// A cloud of scalar samples with a Gaussian kernel bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    samples: Vec<f64>,
    bandwidth: f64,
}

impl ParticleSet {
    pub fn new(samples: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("particle set must not be empty"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("particles must be finite"));
        }
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(Error::InvalidParameter(
                "bandwidth must be positive and finite",
            ));
        }
        Ok(Self { samples, bandwidth })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
}

/// Gaussian kernel density estimate on `grid`, normalized over the grid
/// support:
///
/// `p(z) = 1/(sqrt(2 pi) bw N) * sum_j exp(-(z - z_j)^2 / (2 bw^2))`
pub fn kde(particles: &ParticleSet, grid: &Grid) -> Result<GridPdf> {
    let bw = particles.bandwidth;
    let n = grid.len();
    let step = grid.step;
    let hi = grid.hi();
    let mut values = vec![0.0; n];
    let norm = 1.0 / (SQRT_TAU * bw * particles.samples.len() as f64);
    let inv_two_var = 1.0 / (2.0 * bw * bw);
    let radius = KERNEL_RADIUS * bw;
    for &zj in &particles.samples {
        if zj + radius < -hi || zj - radius > hi {
            continue;
        }
        let ia = libm::floor(((zj - radius).max(-hi) + hi) / step).max(0.0) as usize;
        let ib = (libm::ceil(((zj + radius).min(hi) + hi) / step) as usize).min(n - 1);
        for (i, v) in values.iter_mut().enumerate().take(ib + 1).skip(ia) {
            let d = grid.node(i) - zj;
            *v += libm::exp(-d * d * inv_two_var);
        }
    }
    for v in &mut values {
        *v *= norm;
    }
    GridPdf::from_values(grid.clone(), values)
}

/// Closed-form density of the second-step closed-loop error: the Gaussian
/// propagation of the truncated first-step error, expressed with error
/// functions. Used as an independent cross-check of [`propagate`].
pub fn closed_form_e2_pdf(spec: &SystemSpec, opts: &GridOptions) -> Result<GridPdf> {
    spec.validate()?;
    let (a, sigma, eta) = (spec.a, spec.sigma, spec.eta);
    let grid = Grid::aligned(opts.closed_loop_span(spec), eta, opts)?;
    let a2p1 = a * a + 1.0;
    let denom = 2.0
        * sigma
        * libm::sqrt(core::f64::consts::TAU * a2p1)
        * libm::erf(eta / (libm::sqrt(2.0) * sigma));
    let scale = libm::sqrt(2.0) * sigma * libm::sqrt(a2p1);
    let values = (0..grid.len())
        .map(|i| {
            let z = grid.node(i);
            let pref = libm::exp(-z * z / (2.0 * sigma * sigma * a2p1)) / denom;
            pref * (libm::erf((eta * a2p1 - a * z) / scale)
                + libm::erf((eta * a2p1 + a * z) / scale))
        })
        .collect();
    GridPdf::from_values(grid, values)
}
