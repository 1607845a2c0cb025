//! Two-photon joint spectral amplitudes (JSAs) in the Hermite-Gauss product
//! basis and the frequency beam-splitter acting on them.
//!
//! The beam-splitter maps `F(w, w')` to `F((w + w')/sqrt 2, (w - w')/sqrt 2)`.
//! On HG indices this is the balanced beam-splitter
//! `|n, m> -> (a+ + b+)^n (a+ - b+)^m / sqrt(2^(n+m) n! m!) |0>`, which keeps the
//! total index `n + m` fixed. Each sector is a real orthogonal involution.

use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Flagged, Result, Warning};
use crate::hg::{check_sigma, hg_values, SpectralState};
use crate::{par, sig17};

/// Output deficit above which [`apply_fbs`] attaches a truncation warning.
pub const TRUNCATION_WARNING: f64 = 1e-6;

/// Largest supported cutoff; sector sums of binomials stay exact in `i128`.
pub const MAX_CUTOFF: usize = 60;

/// Points per axis of the grid-rotation oracle.
pub const GRID_POINTS: usize = 512;

/// Half-width of the oracle grid in units of the basis width.
pub const GRID_HALF_WIDTH: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    A,
    B,
}

/// `C[n][m] = <n, m | psi>` over a square HG product basis of width `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    coeffs: DMatrix<Complex64>,
    sigma: f64,
}

impl JointSpectralAmplitude {
    pub fn new(coeffs: DMatrix<Complex64>, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if coeffs.nrows() != coeffs.ncols() || coeffs.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: coeffs.nrows(),
                got: coeffs.ncols(),
            });
        }
        if coeffs.nrows() > MAX_CUTOFF + 1 {
            return Err(Error::InvalidArgument(format!(
                "cutoff {} exceeds the supported maximum {MAX_CUTOFF}",
                coeffs.nrows() - 1
            )));
        }
        Ok(Self { coeffs, sigma })
    }

    /// The product state `|n, m>`.
    pub fn basis(n: usize, m: usize, cutoff: usize, sigma: f64) -> Result<Self> {
        for index in [n, m] {
            if index > cutoff {
                return Err(Error::OutOfRange { index, cutoff });
            }
        }
        let mut c = DMatrix::zeros(cutoff + 1, cutoff + 1);
        c[(n, m)] = Complex64::new(1.0, 0.0);
        Self::new(c, sigma)
    }

    pub fn coeffs(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.nrows() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn deficit(&self) -> f64 {
        1.0 - self.norm_sqr()
    }

    /// Largest coefficient-wise modulus difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `F(w, w')` reconstructed from the coefficients.
    pub fn amplitude(&self, omega: f64, omega_prime: f64) -> Complex64 {
        let k = self.cutoff();
        let hx = hg_values(k, self.sigma, omega).expect("width validated on construction");
        let hy = hg_values(k, self.sigma, omega_prime).expect("width validated on construction");
        bilinear(&self.coeffs, &hx, &hy)
    }

    /// CSV with header `n,m,re,im`, one row per coefficient.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,m,re,im")?;
        for n in 0..=self.cutoff() {
            for m in 0..=self.cutoff() {
                let c = self.coeffs[(n, m)];
                writeln!(out, "{n},{m},{},{}", sig17(c.re), sig17(c.im))?;
            }
        }
        Ok(())
    }
}

fn bilinear(c: &DMatrix<Complex64>, hx: &[f64], hy: &[f64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, &x) in hx.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let mut row = Complex64::new(0.0, 0.0);
        for (m, &y) in hy.iter().enumerate() {
            row += c[(n, m)] * y;
        }
        acc += row * x;
    }
    acc
}

/// Separable JSA with `C[n][m] = a[n] b[m]`.
pub fn product_jsa(a: &SpectralState, b: &SpectralState) -> Result<JointSpectralAmplitude> {
    if a.sigma() != b.sigma() {
        return Err(Error::WidthMismatch(a.sigma(), b.sigma()));
    }
    let k = a.cutoff().max(b.cutoff());
    let coeffs = DMatrix::from_fn(k + 1, k + 1, |n, m| {
        let x = a.coeffs().get(n).copied().unwrap_or_default();
        let y = b.coeffs().get(m).copied().unwrap_or_default();
        x * y
    });
    JointSpectralAmplitude::new(coeffs, a.sigma())
}

fn binomial_row(n: usize) -> Vec<i128> {
    let mut row = vec![1i128; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as i128 / k as i128;
    }
    row
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// FBS restricted to the sector `n + m = total`, indexed by the arm-a index:
/// entry `[p][n]` is `<p, total - p | FBS | n, total - n>`.
pub fn fbs_sector_matrix(total: usize) -> Result<DMatrix<f64>> {
    if total > 2 * MAX_CUTOFF {
        return Err(Error::InvalidArgument(format!(
            "sector {total} exceeds the supported maximum {}",
            2 * MAX_CUTOFF
        )));
    }
    let lnf: Vec<f64> = (0..=total).map(ln_factorial).collect();
    let binom: Vec<Vec<i128>> = (0..=total).map(binomial_row).collect();
    let half_ln2 = 0.5 * total as f64 * std::f64::consts::LN_2;
    Ok(DMatrix::from_fn(total + 1, total + 1, |p, n| {
        let m = total - n;
        let q = total - p;
        // coefficient of a+^p b+^q in (a+ + b+)^n (a+ - b+)^m
        let mut sum: i128 = 0;
        for k in p.saturating_sub(m)..=n.min(p) {
            let l = p - k;
            let sign = if (m - l).is_multiple_of(2) { 1 } else { -1 };
            sum += sign * binom[n][k] * binom[m][l];
        }
        if sum == 0 {
            return 0.0;
        }
        let ln_norm = 0.5 * (lnf[p] + lnf[q] - lnf[n] - lnf[m]) - half_ln2;
        sum as f64 * ln_norm.exp()
    }))
}

/// Frequency beam-splitter in the HG-index representation. Components pushed
/// beyond the cutoff are dropped; the result carries a truncation warning when
/// its deficit exceeds [`TRUNCATION_WARNING`].
pub fn apply_fbs(jsa: &JointSpectralAmplitude) -> Result<Flagged<JointSpectralAmplitude>> {
    let k = jsa.cutoff();
    let sectors = par::map_range(
        2 * k + 1,
        |total| -> Result<Vec<(usize, usize, Complex64)>> {
            let lo = total.saturating_sub(k);
            let hi = total.min(k);
            if (lo..=hi).all(|n| jsa.coeffs[(n, total - n)] == Complex64::new(0.0, 0.0)) {
                return Ok(Vec::new());
            }
            let u = fbs_sector_matrix(total)?;
            Ok((lo..=hi)
                .map(|p| {
                    let amp = (lo..=hi)
                        .map(|n| jsa.coeffs[(n, total - n)] * u[(p, n)])
                        .sum();
                    (p, total - p, amp)
                })
                .collect())
        },
    );
    let mut out = DMatrix::zeros(k + 1, k + 1);
    for sector in sectors {
        for (p, q, amp) in sector? {
            out[(p, q)] = amp;
        }
    }
    let result = JointSpectralAmplitude::new(out, jsa.sigma)?;
    let deficit = result.deficit();
    Ok(Flagged {
        warning: (deficit > TRUNCATION_WARNING).then_some(Warning::Truncation { deficit }),
        value: result,
    })
}

/// Projects `f` onto the HG product basis on a uniform
/// [`GRID_POINTS`]-squared grid spanning `+-GRID_HALF_WIDTH * sigma`.
pub fn project_on_grid<F>(f: F, cutoff: usize, sigma: f64) -> Result<JointSpectralAmplitude>
where
    F: Fn(f64, f64) -> Complex64 + Sync + Send,
{
    check_sigma(sigma)?;
    let half = GRID_HALF_WIDTH * sigma;
    let step = 2.0 * half / (GRID_POINTS - 1) as f64;
    let axis: Vec<f64> = (0..GRID_POINTS).map(|i| -half + i as f64 * step).collect();
    // basis[i][n] = psi_n(w_i) * step
    let basis: Vec<Vec<f64>> = par::map_slice(&axis, |&w| {
        let mut v = hg_values(cutoff, sigma, w).expect("width checked above");
        v.iter_mut().for_each(|x| *x *= step);
        v
    });
    // first contraction over w', one row of the grid at a time
    let partial: Vec<Vec<Complex64>> = par::map_range(GRID_POINTS, |i| {
        let mut acc = vec![Complex64::new(0.0, 0.0); cutoff + 1];
        for (j, wj) in axis.iter().enumerate() {
            let v = f(axis[i], *wj);
            for (q, b) in basis[j].iter().enumerate() {
                acc[q] += v * *b;
            }
        }
        acc
    });
    let mut coeffs = DMatrix::zeros(cutoff + 1, cutoff + 1);
    for (i, row) in partial.iter().enumerate() {
        for (p, &bp) in basis[i].iter().enumerate() {
            for (q, &v) in row.iter().enumerate() {
                coeffs[(p, q)] += v * bp;
            }
        }
    }
    JointSpectralAmplitude::new(coeffs, sigma)
}

/// Reference path for [`apply_fbs`]: rotate `f` by a quarter of a right angle
/// on the frequency grid and re-project.
pub fn fbs_on_grid<F>(f: F, cutoff: usize, sigma: f64) -> Result<JointSpectralAmplitude>
where
    F: Fn(f64, f64) -> Complex64 + Sync + Send,
{
    let r = std::f64::consts::FRAC_1_SQRT_2;
    project_on_grid(move |w, wp| f(r * (w + wp), r * (w - wp)), cutoff, sigma)
}

/// [`fbs_on_grid`] applied to the function a JSA represents.
pub fn fbs_grid_oracle(jsa: &JointSpectralAmplitude) -> Result<JointSpectralAmplitude> {
    fbs_on_grid(|w, wp| jsa.amplitude(w, wp), jsa.cutoff(), jsa.sigma)
}

/// `|C[n][m]|^2`: probability of detecting HG modes `n` and `m`.
pub fn coincidence_probability(jsa: &JointSpectralAmplitude, n: usize, m: usize) -> Result<f64> {
    let cutoff = jsa.cutoff();
    for index in [n, m] {
        if index > cutoff {
            return Err(Error::OutOfRange { index, cutoff });
        }
    }
    Ok(jsa.coeffs[(n, m)].norm_sqr())
}

/// Mode-order distribution of one arm.
pub fn mode_marginal(jsa: &JointSpectralAmplitude, arm: Arm) -> Vec<f64> {
    let c = &jsa.coeffs;
    (0..=jsa.cutoff())
        .map(|n| match arm {
            Arm::A => c.row(n).iter().map(|z| z.norm_sqr()).sum(),
            Arm::B => c.column(n).iter().map(|z| z.norm_sqr()).sum(),
        })
        .collect()
}
