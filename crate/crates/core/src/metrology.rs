//! Two-photon phase estimation with a beam-splitter / fractional Fourier /
//! beam-splitter interferometer acting on HG indices.
//!
//! A [`TwoModeState`] lives in a fixed sector `n_a + n_b = N`; amplitudes are
//! indexed by the arm-a order `k = n_a`, so `J_z = k - N/2`. The phase gate
//! multiplies index `k` by `e^{i k phi}`. Conjugating `J_z` by the whole
//! interferometer gives `cos(phi) J_z - sin(phi) J_y` in this convention.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Flagged, Result, Warning};
use crate::hg::{hg_overlap, hg_value, min_rule_order, QuadratureRule};
use crate::two_photon::{apply_fbs, fbs_sector_matrix, JointSpectralAmplitude};
use crate::{par, sig17};

/// Signal slopes below this are reported as degenerate.
pub const DEGENERATE_SLOPE: f64 = 1e-12;

/// Interior grid points used by [`optimal_phase`] before refinement.
pub const PHASE_GRID: usize = 360;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Sector state over `|k, N - k>`, `k = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    amps: DVector<Complex64>,
}

impl TwoModeState {
    pub fn new(amps: DVector<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidArgument("empty sector state".into()));
        }
        let norm = amps.norm_squared();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "sector state must be normalized, got norm {norm}"
            )));
        }
        Ok(Self { amps })
    }

    /// Total index `N`.
    pub fn total(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn amps(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    /// Embeds the sector into a JSA with cutoff `N`.
    pub fn to_jsa(&self, sigma: f64) -> Result<JointSpectralAmplitude> {
        let n = self.total();
        let mut c = DMatrix::zeros(n + 1, n + 1);
        for k in 0..=n {
            c[(k, n - k)] = self.amps[k];
        }
        JointSpectralAmplitude::new(c, sigma)
    }

    /// Reads the sector `n + m = total` out of a JSA, which must be supported
    /// on it.
    pub fn from_jsa(jsa: &JointSpectralAmplitude, total: usize) -> Result<Self> {
        let cutoff = jsa.cutoff();
        if total > cutoff {
            return Err(Error::OutOfRange {
                index: total,
                cutoff,
            });
        }
        let amps = DVector::from_fn(total + 1, |k, _| jsa.coeffs()[(k, total - k)]);
        Self::new(amps)
    }
}

/// Both photons in HG order `N/2`.
pub fn twin_state(n: usize) -> Result<TwoModeState> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::OddPhotonNumber(n));
    }
    let mut amps = DVector::zeros(n + 1);
    amps[n / 2] = Complex64::new(1.0, 0.0);
    TwoModeState::new(amps)
}

/// Schwinger operators on one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct JOperators {
    pub jx: DMatrix<Complex64>,
    pub jy: DMatrix<Complex64>,
    pub jz: DMatrix<Complex64>,
}

impl JOperators {
    pub fn new(total: usize) -> Self {
        let dim = total + 1;
        let half = total as f64 / 2.0;
        let mut jx = DMatrix::zeros(dim, dim);
        let mut jy = DMatrix::zeros(dim, dim);
        let jz = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Complex64::new(i as f64 - half, 0.0)
            } else {
                ZERO
            }
        });
        // a+ b |k, N-k> = sqrt((k+1)(N-k)) |k+1, N-k-1>
        for k in 0..total {
            let r = (((k + 1) * (total - k)) as f64).sqrt() / 2.0;
            jx[(k + 1, k)] = Complex64::new(r, 0.0);
            jx[(k, k + 1)] = Complex64::new(r, 0.0);
            jy[(k + 1, k)] = Complex64::new(0.0, -r);
            jy[(k, k + 1)] = Complex64::new(0.0, r);
        }
        Self { jx, jy, jz }
    }

    /// `j = N/2`.
    pub fn j(&self) -> f64 {
        (self.jz.nrows() - 1) as f64 / 2.0
    }
}

/// Precomputed per-sector matrices.
#[derive(Debug, Clone)]
pub struct Sector {
    total: usize,
    fbs: DMatrix<Complex64>,
    ops: JOperators,
}

impl Sector {
    pub fn new(total: usize) -> Result<Self> {
        let fbs = fbs_sector_matrix(total)?.map(|v| Complex64::new(v, 0.0));
        Ok(Self {
            total,
            fbs,
            ops: JOperators::new(total),
        })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn ops(&self) -> &JOperators {
        &self.ops
    }

    pub fn fbs(&self) -> &DMatrix<Complex64> {
        &self.fbs
    }

    /// Diagonal of the phase stage.
    fn phases(&self, phi: f64, placement: FrftPlacement) -> Vec<Complex64> {
        let n = self.total as f64;
        (0..=self.total)
            .map(|k| {
                let k = k as f64;
                let angle = match placement {
                    FrftPlacement::ArmA => k * phi,
                    FrftPlacement::Opposite => (2.0 * k - n) * phi,
                };
                Complex64::from_polar(1.0, angle)
            })
            .collect()
    }

    /// Full interferometer unitary on the sector.
    pub fn unitary(&self, phi: f64, placement: FrftPlacement) -> DMatrix<Complex64> {
        let p = DMatrix::from_diagonal(&DVector::from_vec(self.phases(phi, placement)));
        &self.fbs * p * &self.fbs
    }

    /// Output state and its phase derivative.
    fn evolve(
        &self,
        state: &TwoModeState,
        phi: f64,
        placement: FrftPlacement,
    ) -> Result<(DVector<Complex64>, DVector<Complex64>)> {
        if state.total() != self.total {
            return Err(Error::DimensionMismatch {
                expected: self.total,
                got: state.total(),
            });
        }
        let n = self.total as f64;
        let mid = &self.fbs * &state.amps;
        let phases = self.phases(phi, placement);
        let staged = DVector::from_fn(mid.len(), |k, _| mid[k] * phases[k]);
        let rate = |k: usize| match placement {
            FrftPlacement::ArmA => k as f64,
            FrftPlacement::Opposite => 2.0 * k as f64 - n,
        };
        let d_staged = DVector::from_fn(mid.len(), |k, _| staged[k] * Complex64::new(0.0, rate(k)));
        Ok((&self.fbs * staged, &self.fbs * d_staged))
    }
}

/// Which arms carry the fractional Fourier phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrftPlacement {
    /// `F(phi)` on arm a only.
    #[default]
    ArmA,
    /// `F(phi)` on arm a and `F(-phi)` on arm b.
    Opposite,
}

/// Beam-splitter, phase stage, beam-splitter.
pub fn interferometer(state: &TwoModeState, phi: f64) -> Result<TwoModeState> {
    interferometer_with(state, phi, FrftPlacement::ArmA)
}

pub fn interferometer_with(
    state: &TwoModeState,
    phi: f64,
    placement: FrftPlacement,
) -> Result<TwoModeState> {
    let sector = Sector::new(state.total())?;
    Ok(TwoModeState {
        amps: sector.evolve(state, phi, placement)?.0,
    })
}

/// Matrix of a frequency shift by `omega0` on HG orders `0..=cutoff`:
/// entry `[p][n]` is `<p| psi_n(w - omega0)>`.
pub fn shift_matrix(omega0: f64, cutoff: usize, sigma: f64) -> Result<Flagged<DMatrix<f64>>> {
    let order = min_rule_order(cutoff).max(64) + (4.0 * omega0.abs() / sigma).ceil() as usize;
    let rule: Arc<QuadratureRule> = QuadratureRule::gauss_hermite(order.min(150))?;
    let mut warning = None;
    let mut m = DMatrix::zeros(cutoff + 1, cutoff + 1);
    for n in 0..=cutoff {
        for p in 0..=cutoff {
            let f = |w: f64| Complex64::new(hg_value(n, sigma, w - omega0).unwrap_or(0.0), 0.0);
            let v = hg_overlap(f, p, sigma, &rule)?;
            warning = warning.or(v.warning);
            m[(p, n)] = v.value.re;
        }
    }
    Ok(Flagged { value: m, warning })
}

/// Variant with a frequency shift `omega0` on arm a in place of the phase
/// stage. The shift leaves the sector, so the result is a JSA truncated at
/// `cutoff`.
pub fn interferometer_shifted(
    state: &TwoModeState,
    omega0: f64,
    cutoff: usize,
) -> Result<Flagged<JointSpectralAmplitude>> {
    let n = state.total();
    if cutoff < n {
        return Err(Error::OutOfRange { index: n, cutoff });
    }
    let mut c = DMatrix::zeros(cutoff + 1, cutoff + 1);
    for k in 0..=n {
        c[(k, n - k)] = state.amps[k];
    }
    let first = apply_fbs(&JointSpectralAmplitude::new(c, 1.0)?)?;
    let shift = shift_matrix(omega0, cutoff, 1.0)?;
    let shifted = shift.value.map(|v| Complex64::new(v, 0.0)) * first.value.coeffs();
    let second = apply_fbs(&JointSpectralAmplitude::new(shifted, 1.0)?)?;
    let deficit = second.value.deficit();
    let warning = first
        .warning
        .or(shift.warning)
        .or(second.warning)
        .or((deficit > crate::two_photon::TRUNCATION_WARNING)
            .then_some(Warning::Truncation { deficit }));
    Ok(Flagged {
        value: second.value,
        warning,
    })
}

/// Distribution of the `J_z` eigenvalue `m = (n_a - n_b) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct JzStatistics {
    pub mean: f64,
    pub variance: f64,
    /// `(m, p(m))` in increasing `m`.
    pub distribution: Vec<(f64, f64)>,
}

impl JzStatistics {
    fn from_distribution(distribution: Vec<(f64, f64)>) -> Self {
        let mean: f64 = distribution.iter().map(|(m, p)| m * p).sum();
        let second: f64 = distribution.iter().map(|(m, p)| m * m * p).sum();
        Self {
            mean,
            variance: second - mean * mean,
            distribution,
        }
    }

    /// `J_z` statistics of a general JSA, pooling all sectors.
    pub fn from_jsa(jsa: &JointSpectralAmplitude) -> Self {
        let k = jsa.cutoff() as i64;
        let dist = (-k..=k)
            .map(|d| {
                let p: f64 = (0..=k)
                    .filter(|&n| (0..=k).contains(&(n - d)))
                    .map(|n| jsa.coeffs()[(n as usize, (n - d) as usize)].norm_sqr())
                    .sum();
                (d as f64 / 2.0, p)
            })
            .collect();
        Self::from_distribution(dist)
    }
}

pub fn jz_statistics(state: &TwoModeState) -> JzStatistics {
    let half = state.total() as f64 / 2.0;
    JzStatistics::from_distribution(
        state
            .amps
            .iter()
            .enumerate()
            .map(|(k, a)| (k as f64 - half, a.norm_sqr()))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Error propagation on `<J_z>` from rotated input moments.
    Jz,
    /// Error propagation on `<J_z^2>`.
    JzSquared,
    /// Inverse square root of the classical Fisher information of `p(m|phi)`.
    Fisher,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Jz => "jz",
            Estimator::JzSquared => "jz_squared",
            Estimator::Fisher => "fisher",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jz" => Ok(Estimator::Jz),
            "jz_squared" => Ok(Estimator::JzSquared),
            "fisher" => Ok(Estimator::Fisher),
            other => Err(Error::InvalidArgument(format!(
                "unknown estimator {other:?}; expected jz, jz_squared or fisher"
            ))),
        }
    }
}

/// A phase uncertainty; `delta_phi` is infinite when `degenerate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precision {
    pub delta_phi: f64,
    /// Slope of the signal (or the Fisher information) at this phase.
    pub sensitivity: f64,
    pub degenerate: bool,
}

impl Precision {
    fn from_ratio(noise: f64, slope: f64) -> Self {
        let degenerate = slope.abs() < DEGENERATE_SLOPE;
        Self {
            delta_phi: if degenerate {
                f64::INFINITY
            } else {
                noise / slope.abs()
            },
            sensitivity: slope,
            degenerate,
        }
    }
}

fn expect(op: &DMatrix<Complex64>, psi: &DVector<Complex64>) -> Complex64 {
    psi.dotc(&(op * psi))
}

/// Phase uncertainty of `estimator` for the twin input with `n` photons.
pub fn phase_precision(n: usize, phi: f64, estimator: Estimator) -> Result<Precision> {
    let sector = Sector::new(n)?;
    precision_for(&sector, &twin_state(n)?, phi, estimator)
}

/// Phase uncertainty of `estimator` for an arbitrary sector input.
pub fn precision_for(
    sector: &Sector,
    input: &TwoModeState,
    phi: f64,
    estimator: Estimator,
) -> Result<Precision> {
    if !phi.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite phase {phi}")));
    }
    let ops = &sector.ops;
    match estimator {
        Estimator::Jz => {
            let psi = &input.amps;
            let (jz, jy) = (&ops.jz, &ops.jy);
            let mz = expect(jz, psi).re;
            let my = expect(jy, psi).re;
            let vz = expect(&(jz * jz), psi).re - mz * mz;
            let vy = expect(&(jy * jy), psi).re - my * my;
            let cov = 0.5 * expect(&(jy * jz + jz * jy), psi).re - my * mz;
            let (s, c) = phi.sin_cos();
            let variance = c * c * vz + s * s * vy - 2.0 * s * c * cov;
            let slope = -s * mz - c * my;
            Ok(Precision::from_ratio(variance.max(0.0).sqrt(), slope))
        }
        Estimator::JzSquared => {
            let (psi, dpsi) = sector.evolve(input, phi, FrftPlacement::ArmA)?;
            let jz2 = &ops.jz * &ops.jz;
            let m2 = expect(&jz2, &psi).re;
            let m4 = expect(&(&jz2 * &jz2), &psi).re;
            let slope = 2.0 * psi.dotc(&(&jz2 * &dpsi)).re;
            Ok(Precision::from_ratio((m4 - m2 * m2).max(0.0).sqrt(), slope))
        }
        Estimator::Fisher => {
            let fi = fisher_information(sector, input, phi)?;
            Ok(Precision::from_ratio(1.0, fi.sqrt()))
        }
    }
}

/// Classical Fisher information of the output mode distribution.
pub fn fisher_information(sector: &Sector, input: &TwoModeState, phi: f64) -> Result<f64> {
    let (psi, dpsi) = sector.evolve(input, phi, FrftPlacement::ArmA)?;
    Ok(psi
        .iter()
        .zip(dpsi.iter())
        .map(|(a, da)| {
            let p = a.norm_sqr();
            if p < 1e-14 {
                // limit of dp^2 / p as the amplitude vanishes
                4.0 * da.norm_sqr()
            } else {
                let dp = 2.0 * (a.conj() * da).re;
                dp * dp / p
            }
        })
        .sum())
}

/// Pure-state quantum Fisher information of the interferometer:
/// four times the input variance of the phase generator.
pub fn quantum_fisher_information(sector: &Sector, input: &TwoModeState) -> Result<f64> {
    if input.total() != sector.total {
        return Err(Error::DimensionMismatch {
            expected: sector.total,
            got: input.total(),
        });
    }
    let na = DMatrix::from_fn(sector.total + 1, sector.total + 1, |i, j| {
        if i == j {
            Complex64::new(i as f64, 0.0)
        } else {
            ZERO
        }
    });
    let g = &sector.fbs * na * &sector.fbs;
    let m = expect(&g, &input.amps).re;
    Ok(4.0 * (expect(&(&g * &g), &input.amps).re - m * m))
}

/// Phase in `(0, pi)` minimizing `delta_phi` for the twin input, found on a
/// uniform grid and refined by golden-section search.
pub fn optimal_phase(n: usize, estimator: Estimator) -> Result<(f64, Precision)> {
    let sector = Sector::new(n)?;
    let input = twin_state(n)?;
    let eval = |phi: f64| precision_for(&sector, &input, phi, estimator);
    let step = PI / (PHASE_GRID + 1) as f64;
    let values = par::map_range(PHASE_GRID, |i| {
        let phi = (i + 1) as f64 * step;
        eval(phi).map(|p| (phi, p))
    });
    let mut best: Option<(f64, Precision)> = None;
    for v in values {
        let (phi, p) = v?;
        if best.is_none_or(|(_, b)| p.delta_phi < b.delta_phi) {
            best = Some((phi, p));
        }
    }
    let (mut phi, mut p) = best.expect("grid is nonempty");
    if p.degenerate {
        return Ok((phi, p));
    }
    let (mut lo, mut hi) = (
        (phi - step).max(step * 1e-3),
        (phi + step).min(PI - step * 1e-3),
    );
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if eval(a)?.delta_phi <= eval(b)?.delta_phi {
            hi = b;
        } else {
            lo = a;
        }
    }
    let mid = 0.5 * (lo + hi);
    let refined = eval(mid)?;
    if refined.delta_phi <= p.delta_phi {
        phi = mid;
        p = refined;
    }
    Ok((phi, p))
}

/// One line of a precision sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub photons: usize,
    pub phi: f64,
    pub estimator: Estimator,
    pub precision: Precision,
}

/// `delta_phi` for each photon number, at `phi` or at the optimal phase.
pub fn sweep(photons: &[usize], phi: Option<f64>, estimator: Estimator) -> Result<Vec<SweepRow>> {
    photons
        .iter()
        .map(|&n| {
            let (phi, precision) = match phi {
                Some(phi) => (phi, phase_precision(n, phi, estimator)?),
                None => optimal_phase(n, estimator)?,
            };
            Ok(SweepRow {
                photons: n,
                phi,
                estimator,
                precision,
            })
        })
        .collect()
}

/// CSV with header `N,phi,estimator,delta_phi`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "N,phi,estimator,delta_phi")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.photons,
            sig17(r.phi),
            r.estimator.name(),
            sig17(r.precision.delta_phi)
        )?;
    }
    Ok(())
}

/// Least-squares slope of `ln(delta_phi)` against `ln(N)`.
pub fn log_log_slope(rows: &[SweepRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.photons as f64).ln(), r.precision.delta_phi.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn comm(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        a * b - b * a
    }

    fn max_norm(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn random_state(n: usize, seed: u64) -> TwoModeState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = DVector::from_fn(n + 1, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        TwoModeState::new(v.normalize()).unwrap()
    }

    #[test]
    fn twin_examples() {
        let t2 = twin_state(2).unwrap();
        assert_eq!(t2.amps()[1], Complex64::new(1.0, 0.0));
        let t4 = twin_state(4).unwrap();
        assert_eq!(t4.amps()[2], Complex64::new(1.0, 0.0));
        assert_eq!(t4.norm_sqr(), 1.0);
        assert_eq!(twin_state(3), Err(Error::OddPhotonNumber(3)));
        assert_eq!(twin_state(0), Err(Error::OddPhotonNumber(0)));
    }

    #[test]
    fn su2_algebra() {
        for n in [1, 2, 5, 10, 20] {
            let j = JOperators::new(n);
            let i = Complex64::new(0.0, 1.0);
            assert!(max_norm(&(comm(&j.jx, &j.jy) - &j.jz * i)) < 1e-10);
            assert!(max_norm(&(comm(&j.jy, &j.jz) - &j.jx * i)) < 1e-10);
            assert!(max_norm(&(comm(&j.jz, &j.jx) - &j.jy * i)) < 1e-10);
            let casimir = &j.jx * &j.jx + &j.jy * &j.jy + &j.jz * &j.jz;
            let jj = j.j() * (j.j() + 1.0);
            let id = DMatrix::<Complex64>::identity(n + 1, n + 1) * Complex64::new(jj, 0.0);
            assert!(max_norm(&(casimir - id)) < 1e-10);
        }
    }

    #[test]
    fn rotation_law() {
        for n in [1, 2, 4, 7, 12] {
            let s = Sector::new(n).unwrap();
            for phi in [0.0, 0.3, 1.1, 2.9] {
                let u = s.unitary(phi, FrftPlacement::ArmA);
                let lhs = u.adjoint() * &s.ops.jz * &u;
                let c = Complex64::new(phi.cos(), 0.0);
                let sn = Complex64::new(phi.sin(), 0.0);
                let rhs = &s.ops.jz * c - &s.ops.jy * sn;
                assert!(max_norm(&(lhs - rhs)) < 1e-10, "N={n} phi={phi}");
            }
        }
    }

    #[test]
    fn zero_phase_is_identity() {
        let t = twin_state(6).unwrap();
        let out = interferometer(&t, 0.0).unwrap();
        assert!((out.amps() - t.amps()).norm() < 1e-12);
    }

    #[test]
    fn two_photon_fringe() {
        let t = twin_state(2).unwrap();
        for phi in [0.1, 0.7, 1.3, 2.2, 3.0] {
            let out = interferometer(&t, phi).unwrap();
            assert_abs_diff_eq!(out.amps()[1].norm_sqr(), phi.cos().powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn unitarity() {
        for seed in 0..20u64 {
            let n = 1 + (seed as usize * 7) % 19;
            let phi = 0.37 * seed as f64;
            let out = interferometer(&random_state(n, seed), phi).unwrap();
            assert_abs_diff_eq!(out.norm_sqr(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn jz_examples() {
        let s = jz_statistics(&twin_state(4).unwrap());
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.distribution[2], (0.0, 1.0));
        let out = interferometer(&twin_state(2).unwrap(), PI / 2.0).unwrap();
        let s = jz_statistics(&out);
        assert_abs_diff_eq!(s.distribution[0].1, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.distribution[1].1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.distribution[2].1, 0.5, epsilon = 1e-12);
        let total: f64 = s.distribution.iter().map(|d| d.1).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotated_moments_match_direct_evaluation() {
        for seed in 0..10u64 {
            let n = 2 + seed as usize;
            let input = random_state(n, 100 + seed);
            let sector = Sector::new(n).unwrap();
            let phi = 0.2 + 0.25 * seed as f64;
            let p = precision_for(&sector, &input, phi, Estimator::Jz).unwrap();
            let out = interferometer(&input, phi).unwrap();
            let stats = jz_statistics(&out);
            let h = 1e-6;
            let up = jz_statistics(&interferometer(&input, phi + h).unwrap()).mean;
            let down = jz_statistics(&interferometer(&input, phi - h).unwrap()).mean;
            let slope = (up - down) / (2.0 * h);
            assert_abs_diff_eq!(p.sensitivity, slope, epsilon = 1e-7);
            assert_abs_diff_eq!(
                p.delta_phi * slope.abs(),
                stats.variance.sqrt(),
                epsilon = 1e-7
            );
        }
    }

    #[test]
    fn twin_jz_is_degenerate() {
        for n in [2, 4, 10] {
            let p = phase_precision(n, 0.8, Estimator::Jz).unwrap();
            assert!(p.degenerate);
            assert!(p.delta_phi.is_infinite());
        }
    }

    #[test]
    fn fisher_matches_bound_for_two_photons() {
        let s = Sector::new(2).unwrap();
        let t = twin_state(2).unwrap();
        let qfi = quantum_fisher_information(&s, &t).unwrap();
        assert_abs_diff_eq!(qfi, 4.0, epsilon = 1e-12);
        for phi in [0.2, 0.9, PI / 2.0, 2.5] {
            let p = phase_precision(2, phi, Estimator::Fisher).unwrap();
            assert!(p.delta_phi <= 2f64.sqrt() / qfi.sqrt());
            assert!(p.delta_phi >= 1.0 / qfi.sqrt() - 1e-12);
        }
    }

    #[test]
    fn twin_qfi_closed_form() {
        for n in (2..=20).step_by(2) {
            let s = Sector::new(n).unwrap();
            let q = quantum_fisher_information(&s, &twin_state(n).unwrap()).unwrap();
            assert_abs_diff_eq!(q, (n * (n + 2)) as f64 / 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn fisher_derivative_matches_finite_difference() {
        let s = Sector::new(6).unwrap();
        let t = twin_state(6).unwrap();
        let phi = 0.61;
        let (_, dpsi) = s.evolve(&t, phi, FrftPlacement::ArmA).unwrap();
        let h = 1e-6;
        let up = interferometer(&t, phi + h).unwrap();
        let down = interferometer(&t, phi - h).unwrap();
        let fd = (up.amps() - down.amps()) / Complex64::new(2.0 * h, 0.0);
        assert!((fd - dpsi).norm() < 1e-7);
    }

    #[test]
    fn fisher_is_pi_periodic_for_twins() {
        let s = Sector::new(8).unwrap();
        let t = twin_state(8).unwrap();
        for phi in [0.1, 0.5, 1.4] {
            let a = fisher_information(&s, &t, phi).unwrap();
            let b = fisher_information(&s, &t, phi + PI).unwrap();
            assert!(a >= 0.0);
            assert_abs_diff_eq!(a, b, epsilon = 1e-9 * a.max(1.0));
        }
    }

    #[test]
    fn opposite_placement_doubles_rate() {
        let t = twin_state(4).unwrap();
        let a = interferometer_with(&t, 0.35, FrftPlacement::Opposite).unwrap();
        let b = interferometer_with(&t, 0.7, FrftPlacement::ArmA).unwrap();
        let sa = jz_statistics(&a);
        let sb = jz_statistics(&b);
        for (x, y) in sa.distribution.iter().zip(&sb.distribution) {
            assert_abs_diff_eq!(x.1, y.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn shifted_variant_with_zero_shift_is_identity() {
        let t = twin_state(2).unwrap();
        let out = interferometer_shifted(&t, 0.0, 6).unwrap();
        assert!(out.is_clean());
        assert_abs_diff_eq!(out.value.coeffs()[(1, 1)].re, 1.0, epsilon = 1e-10);
        let moved = interferometer_shifted(&t, 0.5, 10).unwrap();
        let stats = JzStatistics::from_jsa(&moved.value);
        let total: f64 = stats.distribution.iter().map(|d| d.1).sum();
        assert!(total <= 1.0 + 1e-10 && total > 0.99);
    }

    #[test]
    fn sweep_csv() {
        let rows = sweep(&[2, 4], Some(0.5), Estimator::Fisher).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("N,phi,estimator,delta_phi\n2,5.0000000000000000e-1,fisher,"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn optimal_phase_is_interior() {
        let (phi, p) = optimal_phase(4, Estimator::Fisher).unwrap();
        assert!(phi > 0.0 && phi < PI);
        let qfi = (4 * 6) as f64 / 2.0;
        assert!(p.delta_phi >= 1.0 / qfi.sqrt() - 1e-9);
    }
}
