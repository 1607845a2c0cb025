//! Gaussian boson sampling over Hermite-Gauss spectral modes.
//!
//! For a zero-mean state with complex covariance `S_c` (see
//! [`GaussianTFState::to_complex_covariance`]) the probability of detecting HG
//! orders `n = (n_1, ..., n_N)` is
//! `P(n) = |S_Q|^(-1/2) haf(A_n) / prod n_i!` with `S_Q = S_c + I/2`,
//! `A = X (I - S_Q^-1)` and `X` the block swap. `A_n` repeats rows and
//! columns `i` and `N + i` of `A` `n_i` times.

use std::fmt;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gaussian::GaussianTFState;
use crate::hafnian::{RepeatedHafnianTable, SymMatrix};
use crate::hg::{hg_values, QuadratureRule};
use crate::{par, sig17};

/// Largest |mean| entry treated as zero.
pub const MEAN_TOLERANCE: f64 = 1e-12;

/// Largest imaginary part of `haf`, on the probability scale, accepted.
pub const RESIDUE_TOLERANCE: f64 = 1e-10;

/// Probability mass the sampler's truncation box must hold.
pub const REQUIRED_MASS: f64 = 0.999;

/// Default cap on work units (table states, quadrature nodes).
pub const DEFAULT_MAX_COST: u128 = 50_000_000;

/// Environment variable that overrides [`DEFAULT_MAX_COST`].
pub const MAX_COST_ENV: &str = "TFSIM_MAX_COST";

/// Oracle limits: modes and total photons.
pub const ORACLE_MAX_MODES: usize = 3;
pub const ORACLE_MAX_PHOTONS: usize = 8;

/// Tolerance on `det(2 cov) = 1` when classifying a state as pure.
pub const PURITY_TOLERANCE: f64 = 1e-9;

/// The active cost cap: `TFSIM_MAX_COST` if set and valid, else the default.
pub fn max_cost() -> u128 {
    std::env::var(MAX_COST_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_COST)
}

fn guard(what: &'static str, needed: u128, limit: u128) -> Result<()> {
    if needed > limit {
        Err(Error::CostGuard {
            what,
            needed,
            limit,
        })
    } else {
        Ok(())
    }
}

/// Detected HG orders, one per mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomePattern(pub Vec<usize>);

impl OutcomePattern {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for OutcomePattern {
    /// Space-separated orders, e.g. `2 0 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, n) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FgbsDistribution {
    source: GaussianTFState,
    sigma_q: DMatrix<Complex64>,
    a: SymMatrix,
    prefactor: f64,
    pure: bool,
}

impl FgbsDistribution {
    pub fn source(&self) -> &GaussianTFState {
        &self.source
    }

    pub fn modes(&self) -> usize {
        self.source.modes()
    }

    pub fn sigma_q(&self) -> &DMatrix<Complex64> {
        &self.sigma_q
    }

    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    /// `|det S_Q|^(-1/2)`, the vacuum probability.
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    /// Whether the source is pure, in which case odd photon totals have zero
    /// probability.
    pub fn is_pure(&self) -> bool {
        self.pure
    }

    fn parity_zero(&self, pattern: &OutcomePattern) -> bool {
        self.pure && pattern.total() % 2 == 1
    }
}

/// Builds `S_Q`, `A` and the prefactor. Mixed states are accepted.
pub fn build_distribution(state: &GaussianTFState) -> Result<FgbsDistribution> {
    let displacement = state.mean().amax();
    if displacement > MEAN_TOLERANCE {
        return Err(Error::DisplacedState(displacement));
    }
    state.check_physical()?;
    let n = state.modes();
    let dim = 2 * n;
    let sigma_q = state.to_complex_covariance()
        + DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(0.5, 0.0);
    let inv = sigma_q
        .clone()
        .try_inverse()
        .ok_or(Error::SingularCovariance)?;
    let mut swap = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..n {
        swap[(k, n + k)] = Complex64::new(1.0, 0.0);
        swap[(n + k, k)] = Complex64::new(1.0, 0.0);
    }
    let raw = swap * (DMatrix::identity(dim, dim) - inv);
    let a = (&raw + raw.transpose()) * Complex64::new(0.5, 0.0);
    let a = SymMatrix::new(&a)?;
    let prefactor = sigma_q.determinant().norm().sqrt().recip();
    Ok(FgbsDistribution {
        source: state.clone(),
        sigma_q,
        a,
        prefactor,
        pure: state.is_pure(PURITY_TOLERANCE),
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn probability_from(
    dist: &FgbsDistribution,
    haf: Complex64,
    pattern: &OutcomePattern,
) -> Result<f64> {
    let scale = dist.prefactor / pattern.0.iter().map(|&k| factorial(k)).product::<f64>();
    let residue = haf.im.abs() * scale;
    if residue > RESIDUE_TOLERANCE {
        return Err(Error::ImaginaryResidue(residue));
    }
    Ok(haf.re * scale)
}

fn check_pattern(dist: &FgbsDistribution, pattern: &OutcomePattern) -> Result<()> {
    if pattern.modes() != dist.modes() {
        Err(Error::DimensionMismatch {
            expected: dist.modes(),
            got: pattern.modes(),
        })
    } else {
        Ok(())
    }
}

/// `P(n)`; exactly zero for odd total photon number on pure states.
pub fn probability(dist: &FgbsDistribution, pattern: &OutcomePattern) -> Result<f64> {
    check_pattern(dist, pattern)?;
    if dist.parity_zero(pattern) {
        return Ok(0.0);
    }
    let reps: Vec<usize> = pattern.0.iter().chain(&pattern.0).copied().collect();
    let limit = max_cost();
    let states: u128 = reps.iter().map(|&r| r as u128 + 1).product();
    guard("hafnian table states", states, limit)?;
    let haf = RepeatedHafnianTable::build(&dist.a, &reps, limit)?.get(&reps)?;
    probability_from(dist, haf, pattern)
}

/// All patterns with every entry at most `cutoff`, lexicographic with mode 0
/// most significant.
pub fn patterns_in_box(modes: usize, cutoff: usize) -> Vec<OutcomePattern> {
    let radix = cutoff + 1;
    let count = radix.pow(modes as u32);
    (0..count)
        .map(|mut idx| {
            let mut p = vec![0; modes];
            for slot in p.iter_mut().rev() {
                *slot = idx % radix;
                idx /= radix;
            }
            OutcomePattern(p)
        })
        .collect()
}

/// `P(n)` for every pattern in the cutoff box, from one shared hafnian table.
pub fn probability_table(
    dist: &FgbsDistribution,
    cutoff: usize,
) -> Result<Vec<(OutcomePattern, f64)>> {
    let n = dist.modes();
    let limit = max_cost();
    let states = (cutoff as u128 + 1)
        .checked_pow(2 * n as u32)
        .unwrap_or(u128::MAX);
    guard("probability table states", states, limit)?;
    let table = RepeatedHafnianTable::build(&dist.a, &vec![cutoff; 2 * n], limit)?;
    let patterns = patterns_in_box(n, cutoff);
    let probs = par::map_slice(&patterns, |p| -> Result<f64> {
        if dist.parity_zero(p) {
            return Ok(0.0);
        }
        let reps: Vec<usize> = p.0.iter().chain(&p.0).copied().collect();
        probability_from(dist, table.get(&reps)?, p)
    });
    patterns
        .into_iter()
        .zip(probs)
        .map(|(p, v)| Ok((p, v?)))
        .collect()
}

/// CSV with header `pattern,probability`.
pub fn write_table_csv<W: Write>(rows: &[(OutcomePattern, f64)], mut out: W) -> io::Result<()> {
    writeln!(out, "pattern,probability")?;
    for (p, v) in rows {
        writeln!(out, "{p},{}", sig17(*v))?;
    }
    Ok(())
}

/// Independent check of [`probability`]: the overlap of the pure Gaussian
/// wavefunction with `prod_i psi_{n_i}(w_i)`, by tensor Gauss-Hermite
/// quadrature.
///
/// For covariance blocks `S_ww`, `S_wt` the wavefunction is
/// `psi(w) ~ exp(-w^T Z w / 2)`, `Z = (2 S_ww)^-1 - i S_ww^-1 S_wt`. The
/// integrand is sampled in coordinates that whiten its Gaussian envelope.
pub fn oracle_probability(state: &GaussianTFState, pattern: &OutcomePattern) -> Result<f64> {
    let n = state.modes();
    if pattern.modes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: pattern.modes(),
        });
    }
    guard("oracle modes", n as u128, ORACLE_MAX_MODES as u128)?;
    guard(
        "oracle photons",
        pattern.total() as u128,
        ORACLE_MAX_PHOTONS as u128,
    )?;
    let displacement = state.mean().amax();
    if displacement > MEAN_TOLERANCE {
        return Err(Error::DisplacedState(displacement));
    }
    let purity = state.purity_det();
    if (purity - 1.0).abs() > PURITY_TOLERANCE {
        return Err(Error::MixedState(purity));
    }
    let cov = state.cov();
    let sww = cov.view((0, 0), (n, n)).into_owned();
    let swt = cov.view((0, n), (n, n)).into_owned();
    let sww_inv = sww.clone().try_inverse().ok_or(Error::SingularCovariance)?;
    let u = (&sww * 2.0)
        .try_inverse()
        .ok_or(Error::SingularCovariance)?;
    let v = -(&sww_inv * &swt);
    let v = (&v + v.transpose()) * 0.5;
    let norm = u.determinant().powf(0.25) * std::f64::consts::PI.powf(-(n as f64) / 4.0);

    // envelope exp(-x^T K x) with K = (U + I)/2; x = M y whitens it
    let k = (&u + DMatrix::identity(n, n)) * 0.5;
    let eig = k.symmetric_eigen();
    let m = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.sqrt().recip()));
    let jac = m.determinant().abs();

    let nmax = pattern.0.iter().copied().max().unwrap_or(0);
    let order = (2 * nmax + 48).min(crate::hg::MAX_RULE_ORDER);
    guard(
        "oracle quadrature nodes",
        (order as u128).pow(n as u32),
        max_cost(),
    )?;
    let rule = QuadratureRule::gauss_hermite(order)?;
    let nodes: Vec<(f64, f64)> = rule.unweighted().collect();

    let total = order.pow(n as u32);
    let chunk = order;
    let partial = par::map_range(total.div_ceil(chunk), |c| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut y = DVector::zeros(n);
        for idx in c * chunk..((c + 1) * chunk).min(total) {
            let mut rest = idx;
            let mut weight = 1.0;
            for d in 0..n {
                let (node, w) = nodes[rest % order];
                rest /= order;
                y[d] = node;
                weight *= w;
            }
            let x = &m * &y;
            let quad_u = x.dot(&(&u * &x));
            let quad_v = x.dot(&(&v * &x));
            let psi = Complex64::from_polar(norm * (-0.5 * quad_u).exp(), -0.5 * quad_v);
            let modes: f64 = (0..n)
                .map(|d| hg_values(pattern.0[d], 1.0, x[d]).expect("unit width")[pattern.0[d]])
                .product();
            acc += psi * (modes * weight);
        }
        acc
    });
    let amplitude: Complex64 = partial.into_iter().sum::<Complex64>() * jac;
    Ok(amplitude.norm_sqr())
}

/// Draws `shots` patterns by inverting the CDF of the probability table over
/// the cutoff box. The box must hold at least [`REQUIRED_MASS`].
pub fn sample(
    dist: &FgbsDistribution,
    shots: usize,
    seed: u64,
    cutoff: usize,
) -> Result<Vec<OutcomePattern>> {
    let table = probability_table(dist, cutoff)?;
    let mut cdf = Vec::with_capacity(table.len());
    let mut mass = 0.0;
    for (_, p) in &table {
        mass += p.max(0.0);
        cdf.push(mass);
    }
    if mass < REQUIRED_MASS {
        return Err(Error::InsufficientMass {
            mass,
            required: REQUIRED_MASS,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..shots)
        .map(|_| {
            let u = rng.random::<f64>() * mass;
            let k = cdf.partition_point(|&c| c <= u).min(table.len() - 1);
            table[k].0.clone()
        })
        .collect())
}
