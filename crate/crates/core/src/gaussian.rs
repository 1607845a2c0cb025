//! N-mode time-frequency Gaussian states and symplectic gates.
//!
//! Phase-space vectors use block ordering `(w_1..w_N, t_1..t_N)`. The vacuum
//! analog (a unit-width Gaussian spectrum) has covariance `I/2`, and the
//! Wigner function is `exp(-X^T cov^-1 X / 2) / ((2 pi)^N sqrt(det cov))`.
//! Helpers convert to and from the interleaved `(w_1, t_1, ..., w_N, t_N)`
//! ordering.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;
use crate::sig17;

/// Tolerance on the symplectic condition of constructed gates.
pub const SYMPLECTIC_TOLERANCE: f64 = 1e-12;

/// Slack allowed below zero in the uncertainty-relation eigenvalue check.
pub const PHYSICALITY_TOLERANCE: f64 = 1e-10;

/// `[[0, I], [-I, 0]]` in block ordering.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for i in 0..modes {
        omega[(i, modes + i)] = 1.0;
        omega[(modes + i, i)] = -1.0;
    }
    omega
}

/// Block index `k` to interleaved index.
fn interleaved_index(modes: usize, k: usize) -> usize {
    if k < modes {
        2 * k
    } else {
        2 * (k - modes) + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTFState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianTFState {
    /// `modes` unit-width Gaussian photons: zero mean, covariance `I/2`.
    pub fn vacuum(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidArgument(
                "a state needs at least one mode".into(),
            ));
        }
        Ok(Self {
            mean: DVector::zeros(2 * modes),
            cov: DMatrix::identity(2 * modes, 2 * modes) * 0.5,
        })
    }

    /// Product of Gaussian photons with the given spectral widths.
    pub fn with_widths(widths: &[f64]) -> Result<Self> {
        let mut state = Self::vacuum(widths.len())?;
        for (mode, &s) in widths.iter().enumerate() {
            if s != 1.0 {
                state = apply(
                    &state,
                    &gate_symplectic(Gate::Scale { mode, s }, widths.len())?,
                )?;
            }
        }
        Ok(state)
    }

    /// Validated state from block-ordered moments.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = cov.nrows();
        if dim == 0 || dim % 2 == 1 || cov.ncols() != dim {
            return Err(Error::InvalidArgument(format!(
                "covariance must be a nonempty even square matrix, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mean.len(),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite moment".into()));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > 1e-12 * cov.amax().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        let state = Self { mean, cov };
        state.check_physical()?;
        Ok(state)
    }

    /// Validated state from interleaved moments `(w_1, t_1, ..., w_N, t_N)`.
    pub fn from_interleaved(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = cov.nrows();
        if dim % 2 == 1 || mean.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mean.len(),
            });
        }
        let n = dim / 2;
        let block_mean = DVector::from_fn(dim, |k, _| mean[interleaved_index(n, k)]);
        let block_cov = DMatrix::from_fn(dim, dim, |i, j| {
            cov[(interleaved_index(n, i), interleaved_index(n, j))]
        });
        Self::new(block_mean, block_cov)
    }

    /// Moments in interleaved ordering.
    pub fn to_interleaved(&self) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.modes();
        let dim = 2 * n;
        let mut mean = DVector::zeros(dim);
        let mut cov = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            mean[interleaved_index(n, i)] = self.mean[i];
            for j in 0..dim {
                cov[(interleaved_index(n, i), interleaved_index(n, j))] = self.cov[(i, j)];
            }
        }
        (mean, cov)
    }

    pub fn modes(&self) -> usize {
        self.cov.nrows() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Smallest eigenvalue of `cov + (i/2) Omega`.
    pub fn uncertainty_margin(&self) -> f64 {
        let n = self.modes();
        let omega = symplectic_form(n);
        let h = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            Complex64::new(self.cov[(i, j)], 0.5 * omega[(i, j)])
        });
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_physical(&self) -> Result<()> {
        let margin = self.uncertainty_margin();
        if margin < -PHYSICALITY_TOLERANCE {
            Err(Error::UnphysicalCovariance(margin))
        } else {
            Ok(())
        }
    }

    /// `det(2 cov)`; equal to one exactly for pure states.
    pub fn purity_det(&self) -> f64 {
        (&self.cov * 2.0).determinant()
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity_det() - 1.0).abs() <= tol
    }

    /// Marginal state of the listed modes (row/column deletion).
    pub fn reduced(&self, keep: &[usize]) -> Result<Self> {
        let n = self.modes();
        if keep.is_empty() {
            return Err(Error::InvalidArgument("no modes kept".into()));
        }
        if let Some(&bad) = keep.iter().find(|&&m| m >= n) {
            return Err(Error::InvalidTarget {
                target: bad,
                modes: n,
            });
        }
        let idx: Vec<usize> = keep
            .iter()
            .copied()
            .chain(keep.iter().map(|m| m + n))
            .collect();
        Ok(Self {
            mean: DVector::from_fn(idx.len(), |k, _| self.mean[idx[k]]),
            cov: DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]),
        })
    }

    /// Covariance in the `(alpha_1..alpha_N, alpha*_1..alpha*_N)` basis,
    /// with `alpha = (w + i t) / sqrt(2)`.
    pub fn to_complex_covariance(&self) -> DMatrix<Complex64> {
        let n = self.modes();
        let w = complex_basis_change(n);
        let cov = self.cov.map(|v| Complex64::new(v, 0.0));
        &w * cov * w.adjoint()
    }

    /// Normalized Wigner function at the block-ordered phase-space point.
    pub fn wigner_at(&self, x: &[f64]) -> Result<f64> {
        GaussianDensity::new(&self.mean, self.cov.clone())?.at(x)
    }

    /// Husimi function at the coherent amplitudes `alpha`, normalized so that
    /// its integral over `d^2 alpha` is one.
    pub fn husimi_at(&self, alpha: &[Complex64]) -> Result<f64> {
        let n = self.modes();
        if alpha.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: alpha.len(),
            });
        }
        let cov_q = &self.cov + DMatrix::identity(2 * n, 2 * n) * 0.5;
        let x: Vec<f64> = alpha
            .iter()
            .map(|a| a.re * 2f64.sqrt())
            .chain(alpha.iter().map(|a| a.im * 2f64.sqrt()))
            .collect();
        // d^2 alpha = dw dt / 2 per mode
        Ok(GaussianDensity::new(&self.mean, cov_q)?.at(&x)? * 2f64.powi(n as i32))
    }
}

/// `(1/sqrt 2) [[I, iI], [I, -iI]]`.
fn complex_basis_change(n: usize) -> DMatrix<Complex64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let i = Complex64::new(0.0, FRAC_1_SQRT_2);
    for k in 0..n {
        w[(k, k)] = r;
        w[(k, n + k)] = i;
        w[(n + k, k)] = r;
        w[(n + k, n + k)] = -i;
    }
    w
}

/// A multivariate normal density with cached inverse and normalization.
struct GaussianDensity {
    mean: DVector<f64>,
    inv: DMatrix<f64>,
    norm: f64,
}

impl GaussianDensity {
    fn new(mean: &DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let det = cov.determinant();
        if det.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::SingularCovariance);
        }
        let inv = cov.try_inverse().ok_or(Error::SingularCovariance)?;
        let dim = mean.len() as i32;
        Ok(Self {
            mean: mean.clone(),
            inv,
            norm: ((2.0 * PI).powi(dim) * det).sqrt().recip(),
        })
    }

    fn at(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: x.len(),
            });
        }
        let d = DVector::from_column_slice(x) - &self.mean;
        Ok(self.norm * (-0.5 * d.dot(&(&self.inv * &d))).exp())
    }
}

/// Parameters of a time-frequency displacement on one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementParams {
    pub omega0: f64,
    pub t0: f64,
    pub mode: usize,
}

impl DisplacementParams {
    /// Coherent amplitude `(omega0 + i t0) / sqrt(2)`.
    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.omega0, self.t0) * FRAC_1_SQRT_2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// Frequency beam-splitter: `(w_a, w_b) -> ((w_a + w_b), (w_a - w_b)) / sqrt 2`,
    /// identically on the arrival times.
    Fbs {
        a: usize,
        b: usize,
    },
    /// Fractional Fourier transform: rotation of the `(w, t)` plane by `phi`.
    Frft {
        mode: usize,
        phi: f64,
    },
    /// Bandwidth scaling `w -> s w`, `t -> t / s`.
    Scale {
        mode: usize,
        s: f64,
    },
    Displace(DisplacementParams),
}

impl Gate {
    fn targets(&self) -> Vec<usize> {
        match *self {
            Gate::Fbs { a, b } => vec![a, b],
            Gate::Frft { mode, .. } | Gate::Scale { mode, .. } => vec![mode],
            Gate::Displace(p) => vec![p.mode],
        }
    }
}

/// Affine symplectic map `X -> S X + d` with the gate that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticOp {
    pub matrix: DMatrix<f64>,
    pub shift: DVector<f64>,
    pub gate: Gate,
}

impl SymplecticOp {
    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// `max |S^T Omega S - Omega|`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = symplectic_form(self.modes());
        (self.matrix.transpose() * &omega * &self.matrix - omega).amax()
    }
}

/// Builds the symplectic matrix (and shift) of `gate` on `modes` modes.
pub fn gate_symplectic(gate: Gate, modes: usize) -> Result<SymplecticOp> {
    for t in gate.targets() {
        if t >= modes {
            return Err(Error::InvalidTarget { target: t, modes });
        }
    }
    let n = modes;
    let mut s = DMatrix::identity(2 * n, 2 * n);
    let mut shift = DVector::zeros(2 * n);
    match gate {
        Gate::Fbs { a, b } => {
            if a == b {
                return Err(Error::InvalidArgument(format!(
                    "beam-splitter needs two distinct modes, got {a} twice"
                )));
            }
            for o in [0, n] {
                s[(o + a, o + a)] = FRAC_1_SQRT_2;
                s[(o + a, o + b)] = FRAC_1_SQRT_2;
                s[(o + b, o + a)] = FRAC_1_SQRT_2;
                s[(o + b, o + b)] = -FRAC_1_SQRT_2;
            }
        }
        Gate::Frft { mode, phi } => {
            if !phi.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite angle {phi}")));
            }
            let (sn, c) = phi.sin_cos();
            s[(mode, mode)] = c;
            s[(mode, n + mode)] = -sn;
            s[(n + mode, mode)] = sn;
            s[(n + mode, n + mode)] = c;
        }
        Gate::Scale { mode, s: k } => {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidScale(k));
            }
            s[(mode, mode)] = k;
            s[(n + mode, n + mode)] = k.recip();
        }
        Gate::Displace(p) => {
            if !(p.omega0.is_finite() && p.t0.is_finite()) {
                return Err(Error::InvalidArgument("non-finite displacement".into()));
            }
            shift[p.mode] = p.omega0;
            shift[n + p.mode] = p.t0;
        }
    }
    Ok(SymplecticOp {
        matrix: s,
        shift,
        gate,
    })
}

/// `mean -> S mean + d`, `cov -> S cov S^T`.
pub fn apply(state: &GaussianTFState, op: &SymplecticOp) -> Result<GaussianTFState> {
    if op.matrix.nrows() != state.cov.nrows() {
        return Err(Error::DimensionMismatch {
            expected: state.cov.nrows(),
            got: op.matrix.nrows(),
        });
    }
    let mean = &op.matrix * &state.mean + &op.shift;
    let cov = &op.matrix * &state.cov * op.matrix.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianTFState { mean, cov })
}

/// Applies a sequence of gates in order.
pub fn run_gates(state: &GaussianTFState, gates: &[Gate]) -> Result<GaussianTFState> {
    gates.iter().try_fold(state.clone(), |s, &g| {
        apply(&s, &gate_symplectic(g, s.modes())?)
    })
}

/// One grid axis: `count` equally spaced points from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 || !min.is_finite() || !max.is_finite() || max <= min {
            return Err(Error::InvalidArgument(format!(
                "axis needs count >= 2 and max > min, got {min}..{max} x {count}"
            )));
        }
        Ok(Self { min, max, count })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step()
    }
}

/// Chronocyclic phase-space grid. Frequency coordinates are absolute;
/// `origin` is the central frequency that maps to the phase-space origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpaceGrid {
    pub omega: Axis,
    pub t: Axis,
    pub origin: f64,
}

impl PhaseSpaceGrid {
    pub fn new(omega: Axis, t: Axis) -> Self {
        Self {
            omega,
            t,
            origin: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.omega.count * self.t.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Values on a [`PhaseSpaceGrid`], row-major with frequency as the outer index.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceField {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<f64>,
}

impl PhaseSpaceField {
    pub fn at(&self, i_omega: usize, i_t: usize) -> f64 {
        self.values[i_omega * self.grid.t.count + i_t]
    }

    /// Trapezoid-rule integral over the whole grid.
    pub fn integral(&self) -> f64 {
        let g = &self.grid;
        let tw = |i: usize, n: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        let mut total = 0.0;
        for i in 0..g.omega.count {
            for j in 0..g.t.count {
                total += tw(i, g.omega.count) * tw(j, g.t.count) * self.at(i, j);
            }
        }
        total * g.omega.step() * g.t.step()
    }

    /// Trapezoid integral over `t` at each frequency.
    pub fn frequency_marginal(&self) -> Vec<f64> {
        let g = &self.grid;
        (0..g.omega.count)
            .map(|i| {
                let row: f64 = (0..g.t.count)
                    .map(|j| {
                        let w = if j == 0 || j + 1 == g.t.count {
                            0.5
                        } else {
                            1.0
                        };
                        w * self.at(i, j)
                    })
                    .sum();
                row * g.t.step()
            })
            .collect()
    }

    /// Trapezoid integral over frequency at each time.
    pub fn time_marginal(&self) -> Vec<f64> {
        let g = &self.grid;
        (0..g.t.count)
            .map(|j| {
                let col: f64 = (0..g.omega.count)
                    .map(|i| {
                        let w = if i == 0 || i + 1 == g.omega.count {
                            0.5
                        } else {
                            1.0
                        };
                        w * self.at(i, j)
                    })
                    .sum();
                col * g.omega.step()
            })
            .collect()
    }

    /// CSV with header `omega,t,value`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "omega,t,value")?;
        let g = &self.grid;
        for i in 0..g.omega.count {
            for j in 0..g.t.count {
                writeln!(
                    out,
                    "{},{},{}",
                    sig17(g.omega.point(i)),
                    sig17(g.t.point(j)),
                    sig17(self.at(i, j))
                )?;
            }
        }
        Ok(())
    }
}

fn check_mode(state: &GaussianTFState, mode: usize) -> Result<()> {
    if mode >= state.modes() {
        Err(Error::InvalidTarget {
            target: mode,
            modes: state.modes(),
        })
    } else {
        Ok(())
    }
}

/// Wigner function of the reduced state of `mode` on `grid`.
pub fn wigner_eval(
    state: &GaussianTFState,
    grid: &PhaseSpaceGrid,
    mode: usize,
) -> Result<PhaseSpaceField> {
    check_mode(state, mode)?;
    let single = state.reduced(&[mode])?;
    let density = GaussianDensity::new(&single.mean, single.cov.clone())?;
    eval_grid(grid, |w, t| {
        density.at(&[w, t]).expect("two-dimensional point")
    })
}

/// Husimi function of the reduced state of `mode` on `grid`, with
/// `alpha = (w + i t) / sqrt 2`.
pub fn husimi_grid(
    state: &GaussianTFState,
    grid: &PhaseSpaceGrid,
    mode: usize,
) -> Result<PhaseSpaceField> {
    check_mode(state, mode)?;
    let single = state.reduced(&[mode])?;
    single.husimi_at(&[Complex64::new(0.0, 0.0)])?;
    eval_grid(grid, |w, t| {
        single
            .husimi_at(&[Complex64::new(w, t) * FRAC_1_SQRT_2])
            .expect("validated above")
    })
}

/// Husimi function of the full state at the coherent amplitudes `alpha`.
pub fn husimi_eval(state: &GaussianTFState, alpha: &[Complex64]) -> Result<f64> {
    state.husimi_at(alpha)
}

fn eval_grid<F>(grid: &PhaseSpaceGrid, f: F) -> Result<PhaseSpaceField>
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    let rows = par::map_range(grid.omega.count, |i| {
        let w = grid.omega.point(i) - grid.origin;
        (0..grid.t.count)
            .map(|j| f(w, grid.t.point(j)))
            .collect::<Vec<_>>()
    });
    Ok(PhaseSpaceField {
        grid: *grid,
        values: rows.into_iter().flatten().collect(),
    })
}
