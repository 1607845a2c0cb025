//! Hermite-Gauss spectral modes and Gauss-Hermite projection.
//!
//! Frequencies are dimensionless offsets from the central frequency. The
//! mode of order `n` and width `sigma` is
//!
//! ```text
//! psi_n(w) = (pi sigma^2)^(-1/4) (2^n n!)^(-1/2) H_n(w / sigma) exp(-w^2 / (2 sigma^2))
//! ```
//!
//! and is always evaluated through the three-term recurrence on the
//! normalized functions, never as a raw Hermite polynomial times a Gaussian.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Flagged, Result, Warning};

/// Default coefficient cutoff for decompositions.
pub const DEFAULT_CUTOFF: usize = 16;

/// Largest Gauss-Hermite order served by [`QuadratureRule::gauss_hermite`].
pub const MAX_RULE_ORDER: usize = 300;

/// Drift (under doubling of the rule order) above which an overlap is flagged.
pub const ACCURACY_TOLERANCE: f64 = 1e-10;

/// Headroom added to `2n` when choosing a rule order for mode `n`.
pub const RULE_HEADROOM: usize = 16;

const PI_M4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
const RESCALE_AT: f64 = 1e150;

/// A single Hermite-Gauss mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HgMode {
    n: usize,
    sigma: f64,
}

impl HgMode {
    pub fn new(n: usize, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self { n, sigma })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn value(&self, omega: f64) -> f64 {
        weighted_values(self.n, omega / self.sigma)[self.n] / self.sigma.sqrt()
    }
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "spectral width must be positive and finite, got {sigma}"
        )))
    }
}

/// Value of the order-`n` Hermite-Gauss mode of width `sigma` at `omega`.
pub fn hg_value(n: usize, sigma: f64, omega: f64) -> Result<f64> {
    Ok(HgMode::new(n, sigma)?.value(omega))
}

/// Values of all modes `0..=nmax` at `omega`.
pub fn hg_values(nmax: usize, sigma: f64, omega: f64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let scale = sigma.sqrt().recip();
    let mut out = weighted_values(nmax, omega / sigma);
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

/// Unit-width normalized Hermite functions `0..=nmax` at `x`.
///
/// The polynomial part is propagated with a running log-scale so that
/// neither it nor the Gaussian factor over- or underflows on its own.
pub(crate) fn weighted_values(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let half_sq = 0.5 * x * x;
    let mut log_scale = 0.0_f64;
    let mut prev = 0.0_f64;
    let mut cur = PI_M4;
    let emit = |p: f64, log_scale: f64| -> f64 {
        if p == 0.0 {
            0.0
        } else if log_scale == 0.0 && half_sq < 700.0 {
            p * (-half_sq).exp()
        } else {
            p.signum() * (p.abs().ln() + log_scale - half_sq).exp()
        }
    };
    out.push(emit(cur, log_scale));
    for k in 0..nmax {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_AT {
            prev /= RESCALE_AT;
            cur /= RESCALE_AT;
            log_scale += RESCALE_AT.ln();
        }
        out.push(emit(cur, log_scale));
    }
    out
}

/// Normalized Hermite polynomials `pi^(-1/4) (2^k k!)^(-1/2) H_k(x)` for
/// `k = 0..=nmax`, i.e. the Hermite functions with the Gaussian removed.
fn polynomial_values(nmax: usize, x: f64, out: &mut Vec<f64>) {
    out.clear();
    let mut prev = 0.0;
    let mut cur = PI_M4;
    out.push(cur);
    for k in 0..nmax {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        out.push(cur);
    }
}

/// Gauss-Hermite rule for integrals of the form `int exp(-x^2) g(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `ln` of the weights; the far nodes of high orders carry weights
    /// close to the bottom of the `f64` range.
    ln_weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds a rule of the given order (Golub-Welsch nodes refined by Newton
    /// iteration on the orthonormal Hermite recurrence).
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_RULE_ORDER {
            return Err(Error::InvalidArgument(format!(
                "quadrature order must lie in 1..={MAX_RULE_ORDER}, got {order}"
            )));
        }
        let n = order;
        // Jacobi matrix eigenvalues as starting points, then Newton polish
        let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (0.5 * i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        nodes.sort_by(f64::total_cmp);
        let mut ln_w = vec![0.0; n];
        for (z, lw) in nodes.iter_mut().zip(ln_w.iter_mut()) {
            for _ in 0..8 {
                let (p, dp) = orthonormal_with_derivative(n, *z);
                let step = p / dp;
                *z -= step;
                if step.abs() <= 1e-16 * z.abs().max(1.0) {
                    break;
                }
            }
            let dp = orthonormal_with_derivative(n, *z).1;
            *lw = std::f64::consts::LN_2 - 2.0 * dp.abs().ln();
        }
        // exact symmetry about the origin
        for i in 0..n / 2 {
            let z = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let lw = 0.5 * (ln_w[i] + ln_w[n - 1 - i]);
            ln_w[i] = lw;
            ln_w[n - 1 - i] = lw;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let weights = ln_w.iter().map(|l| l.exp()).collect();
        Ok(Self {
            nodes,
            weights,
            ln_weights: ln_w,
        })
    }

    /// Shared, lazily built rule of the given order.
    pub fn gauss_hermite(order: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&order) {
            return Ok(rule.clone());
        }
        let rule = Arc::new(Self::new(order)?);
        cache
            .lock()
            .expect("rule cache poisoned")
            .entry(order)
            .or_insert_with(|| rule.clone());
        Ok(rule)
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights multiplied by `exp(x^2 / 2)`, for integrands that carry half
    /// of the Gaussian weight themselves.
    pub(crate) fn half_scaled_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes
            .iter()
            .zip(&self.ln_weights)
            .map(|(x, lw)| (lw + 0.5 * x * x).exp())
    }

    /// Weights multiplied by `exp(x^2)`, for plain integrals over the real line.
    pub fn unweighted(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.ln_weights)
            .map(|(&x, lw)| (x, (lw + x * x).exp()))
    }

    /// `int exp(-x^2) g(x) dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, w)| w * g(x))
            .sum()
    }

    /// Same rule at twice the order, capped at [`MAX_RULE_ORDER`].
    pub fn doubled(&self) -> Result<Arc<Self>> {
        Self::gauss_hermite((2 * self.order()).min(MAX_RULE_ORDER))
    }
}

/// Orthonormal Hermite polynomial of degree `n` at `z` and its derivative.
fn orthonormal_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = PI_M4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Minimum rule order that resolves mode `n`.
pub fn min_rule_order(n: usize) -> usize {
    2 * n + RULE_HEADROOM
}

/// A single-photon spectral state expanded on Hermite-Gauss modes `0..=cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    coeffs: Vec<Complex64>,
    sigma: f64,
}

impl SpectralState {
    pub fn new(coeffs: Vec<Complex64>, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("empty coefficient vector".into()));
        }
        Ok(Self { coeffs, sigma })
    }

    /// The pure mode `n`, padded to `cutoff`.
    pub fn mode(n: usize, cutoff: usize, sigma: f64) -> Result<Self> {
        if n > cutoff {
            return Err(Error::OutOfRange { index: n, cutoff });
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); cutoff + 1];
        coeffs[n] = Complex64::new(1.0, 0.0);
        Self::new(coeffs, sigma)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `1 - sum |c_n|^2`: the weight the truncation misses.
    pub fn deficit(&self) -> f64 {
        1.0 - self.norm_sqr()
    }

    /// Spectral amplitude `S(omega)` reconstructed from the coefficients.
    pub fn amplitude(&self, omega: f64) -> Complex64 {
        let values = weighted_values(self.cutoff(), omega / self.sigma);
        let scale = self.sigma.sqrt().recip();
        self.coeffs
            .iter()
            .zip(values)
            .map(|(c, v)| c * v * scale)
            .sum()
    }
}

/// `<n|f> = int psi_n(w) f(w) dw`, with the drift under rule doubling.
pub fn hg_overlap<F>(
    f: F,
    n: usize,
    sigma: f64,
    rule: &QuadratureRule,
) -> Result<Flagged<Complex64>>
where
    F: Fn(f64) -> Complex64,
{
    check_sigma(sigma)?;
    if rule.order() < min_rule_order(n) {
        return Err(Error::InvalidArgument(format!(
            "rule order {} too low for mode {n} (need {})",
            rule.order(),
            min_rule_order(n)
        )));
    }
    let coarse = project(&f, n, sigma, rule);
    let fine_rule = rule.doubled()?;
    let fine = project(&f, n, sigma, &fine_rule);
    let drift = (fine.iter().zip(&coarse))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(flag_drift(fine[n], drift))
}

fn flag_drift<T>(value: T, drift: f64) -> Flagged<T> {
    Flagged {
        value,
        warning: (drift > ACCURACY_TOLERANCE).then_some(Warning::Accuracy { drift }),
    }
}

/// Projections of `f` on modes `0..=nmax` with a single rule.
fn project<F>(f: &F, nmax: usize, sigma: f64, rule: &QuadratureRule) -> Vec<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let mut out = vec![Complex64::new(0.0, 0.0); nmax + 1];
    let mut poly = Vec::with_capacity(nmax + 1);
    for (&x, w) in rule.nodes().iter().zip(rule.half_scaled_weights()) {
        let fx = f(sigma * x) * w;
        if fx == Complex64::new(0.0, 0.0) {
            continue;
        }
        polynomial_values(nmax, x, &mut poly);
        for (acc, p) in out.iter_mut().zip(&poly) {
            *acc += fx * *p;
        }
    }
    let s = sigma.sqrt();
    out.iter_mut().for_each(|c| *c *= s);
    out
}

/// Expands `f` on modes `0..=cutoff`; the result carries an accuracy warning
/// when the largest coefficient drift under rule doubling exceeds tolerance.
pub fn decompose<F>(f: F, cutoff: usize, sigma: f64) -> Result<Flagged<SpectralState>>
where
    F: Fn(f64) -> Complex64,
{
    let order = min_rule_order(cutoff).clamp(64, MAX_RULE_ORDER / 2);
    let rule = QuadratureRule::gauss_hermite(order)?;
    decompose_with(f, cutoff, sigma, &rule)
}

/// [`decompose`] with a caller-chosen base rule.
pub fn decompose_with<F>(
    f: F,
    cutoff: usize,
    sigma: f64,
    rule: &QuadratureRule,
) -> Result<Flagged<SpectralState>>
where
    F: Fn(f64) -> Complex64,
{
    check_sigma(sigma)?;
    if rule.order() < min_rule_order(cutoff) {
        return Err(Error::InvalidArgument(format!(
            "rule order {} too low for cutoff {cutoff}",
            rule.order()
        )));
    }
    let coarse = project(&f, cutoff, sigma, rule);
    let fine = project(&f, cutoff, sigma, &*rule.doubled()?);
    let drift = fine
        .iter()
        .zip(&coarse)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(flag_drift(SpectralState::new(fine, sigma)?, drift))
}

/// `|<n|state>|^2`.
pub fn mode_probability(state: &SpectralState, n: usize) -> Result<f64> {
    state
        .coeffs
        .get(n)
        .map(|c| c.norm_sqr())
        .ok_or(Error::OutOfRange {
            index: n,
            cutoff: state.cutoff(),
        })
}

/// Normalized Gaussian spectrum of width `width` centred at zero.
pub fn gaussian_spectrum(width: f64) -> impl Fn(f64) -> Complex64 + Sync + Send + Copy {
    let norm = (PI * width * width).powf(-0.25);
    move |w: f64| Complex64::new(norm * (-w * w / (2.0 * width * width)).exp(), 0.0)
}
