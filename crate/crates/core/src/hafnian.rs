//! Hafnians of complex symmetric matrices.
//!
//! `haf(B)` sums, over every perfect matching of the index set, the product
//! of the matched entries. Diagonal entries never contribute.
//!
//! Kernels:
//! - [`hafnian_perm_sum`]: literal sum over all permutations (oracle, dim <= 8).
//! - [`hafnian`]: recursive matching enumeration, switching to a
//!   submask-memoized recursion above [`MEMO_THRESHOLD`].
//! - [`RepeatedHafnianTable`]: dynamic programme over row multiplicities for
//!   matrices built by repeating rows and columns, as [`reduce`] does.

use std::collections::HashMap;
use std::io::{self, Write};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::{par, sig17};

/// Largest dimension accepted by [`hafnian_perm_sum`].
pub const PERM_SUM_MAX_DIM: usize = 8;

/// Largest dimension accepted by [`hafnian`].
pub const MAX_DIM: usize = 32;

/// Dimension above which [`hafnian`] uses the memoized recursion.
pub const MEMO_THRESHOLD: usize = 16;

/// Default cap on the number of states in a [`RepeatedHafnianTable`].
pub const DEFAULT_TABLE_LIMIT: u128 = 50_000_000;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Complex symmetric matrix of even dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl SymMatrix {
    /// Validates symmetry (to `1e-12` relative) and even dimension.
    pub fn new(m: &DMatrix<Complex64>) -> Result<Self> {
        let dim = m.nrows();
        if m.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: m.ncols(),
            });
        }
        if dim % 2 == 1 {
            return Err(Error::OddDimension(dim));
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let asym = (0..dim)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| (m[(i, j)] - m[(j, i)]).norm())
            .fold(0.0, f64::max);
        if asym > 1e-12 * scale {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self {
            dim,
            entries: (0..dim * dim).map(|k| m[(k / dim, k % dim)]).collect(),
        })
    }

    /// The empty matrix, whose hafnian is one.
    pub fn empty() -> Self {
        Self {
            dim: 0,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Entries with real and imaginary parts uniform in `[-1, 1)`.
    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Result<Self> {
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z;
            }
        }
        Self::new(&m)
    }
}

/// Repetition counts `(n_1, ..., n_N)` for [`reduce`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReductionPattern(pub Vec<usize>);

impl ReductionPattern {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// Repeats row/column `i` and `N + i` of the `2N`-dimensional `a` each
/// `n_i` times: indices `i` (for all `i`) come first, then `N + i`.
pub fn reduce(a: &SymMatrix, pattern: &ReductionPattern) -> Result<SymMatrix> {
    let n = pattern.0.len();
    if a.dim != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: 2 * n,
        });
    }
    let rows: Vec<usize> = (0..2 * n)
        .flat_map(|k| std::iter::repeat_n(k, pattern.0[k % n]))
        .collect();
    let dim = rows.len();
    Ok(SymMatrix {
        dim,
        entries: (0..dim * dim)
            .map(|k| a.get(rows[k / dim], rows[k % dim]))
            .collect(),
    })
}

/// `1/(n! 2^n) sum_{sigma in S_2n} prod_i B[sigma(2i-1)][sigma(2i)]`.
pub fn hafnian_perm_sum(b: &SymMatrix) -> Result<Complex64> {
    let d = b.dim;
    if d > PERM_SUM_MAX_DIM {
        return Err(Error::CostGuard {
            what: "permutation-sum hafnian dimension",
            needed: d as u128,
            limit: PERM_SUM_MAX_DIM as u128,
        });
    }
    if d == 0 {
        return Ok(ONE);
    }
    let pairs = d / 2;
    let term =
        |p: &[usize]| -> Complex64 { (0..pairs).map(|i| b.get(p[2 * i], p[2 * i + 1])).product() };
    // Heap's algorithm, iterative
    let mut perm: Vec<usize> = (0..d).collect();
    let mut c = vec![0usize; d];
    let mut sum = term(&perm);
    let mut i = 0;
    while i < d {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sum += term(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let norm: f64 = (1..=pairs).map(|k| k as f64).product::<f64>() * 2f64.powi(pairs as i32);
    Ok(sum / norm)
}

fn check_dim(b: &SymMatrix) -> Result<()> {
    if b.dim > MAX_DIM {
        return Err(Error::CostGuard {
            what: "hafnian dimension",
            needed: b.dim as u128,
            limit: MAX_DIM as u128,
        });
    }
    Ok(())
}

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(j)
        }
    })
}

fn full_mask(dim: usize) -> u64 {
    if dim == 64 {
        u64::MAX
    } else {
        (1u64 << dim) - 1
    }
}

fn matchings(b: &SymMatrix, mask: u64) -> Complex64 {
    if mask == 0 {
        return ONE;
    }
    let i = mask.trailing_zeros() as usize;
    let rest = mask & (mask - 1);
    let mut sum = ZERO;
    for j in bits(rest) {
        let a = b.get(i, j);
        if a != ZERO {
            sum += a * matchings(b, rest & !(1 << j));
        }
    }
    sum
}

fn matchings_memo(b: &SymMatrix, mask: u64, memo: &mut HashMap<u64, Complex64>) -> Complex64 {
    if mask == 0 {
        return ONE;
    }
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let i = mask.trailing_zeros() as usize;
    let rest = mask & (mask - 1);
    let mut sum = ZERO;
    for j in bits(rest) {
        let a = b.get(i, j);
        if a != ZERO {
            sum += a * matchings_memo(b, rest & !(1 << j), memo);
        }
    }
    memo.insert(mask, sum);
    sum
}

/// Splits on the partner of the first index and sums branches in order.
fn split_first<F>(b: &SymMatrix, branch: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync + Send,
{
    let mask = full_mask(b.dim);
    let rest = mask & !1;
    let partners: Vec<usize> = bits(rest).collect();
    par::map_slice(&partners, |&j| {
        let a = b.get(0, j);
        if a == ZERO {
            ZERO
        } else {
            a * branch(rest & !(1 << j))
        }
    })
    .into_iter()
    .sum()
}

/// Plain recursive matching enumeration, `(dim - 1)!!` leaves.
pub fn hafnian_recursive(b: &SymMatrix) -> Result<Complex64> {
    check_dim(b)?;
    if b.dim == 0 {
        return Ok(ONE);
    }
    Ok(split_first(b, |m| matchings(b, m)))
}

/// Recursive matching with the partial hafnian of every remaining index set
/// cached.
pub fn hafnian_memo(b: &SymMatrix) -> Result<Complex64> {
    check_dim(b)?;
    if b.dim == 0 {
        return Ok(ONE);
    }
    Ok(split_first(b, |m| {
        matchings_memo(b, m, &mut HashMap::new())
    }))
}

/// Exact hafnian; recursion for small matrices, memoized recursion above
/// [`MEMO_THRESHOLD`].
pub fn hafnian(b: &SymMatrix) -> Result<Complex64> {
    if b.dim > MEMO_THRESHOLD {
        hafnian_memo(b)
    } else {
        hafnian_recursive(b)
    }
}

/// Hafnians of every matrix obtained from `a` by repeating row/column `i`
/// `c_i <= max_reps[i]` times.
///
/// Let `i` be the first index with `c_i > 0`. Its first copy pairs with
/// another copy of itself or with a copy of some `j > i`, so
/// `haf(c) = (c_i - 1) a_ii haf(c - 2e_i) + sum_{j>i} c_j a_ij haf(c - e_i - e_j)`.
#[derive(Debug, Clone)]
pub struct RepeatedHafnianTable {
    radices: Vec<usize>,
    strides: Vec<usize>,
    values: Vec<Complex64>,
}

impl RepeatedHafnianTable {
    pub fn build(a: &SymMatrix, max_reps: &[usize], limit: u128) -> Result<Self> {
        let m = a.dim;
        if max_reps.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: max_reps.len(),
            });
        }
        let radices: Vec<usize> = max_reps.iter().map(|r| r + 1).collect();
        let size = radices
            .iter()
            .try_fold(1u128, |acc, &r| acc.checked_mul(r as u128));
        let size = match size {
            Some(s) if s <= limit => s as usize,
            other => {
                return Err(Error::CostGuard {
                    what: "repeated-hafnian table states",
                    needed: other.unwrap_or(u128::MAX),
                    limit,
                })
            }
        };
        let mut strides = vec![1usize; m];
        for k in 1..m {
            strides[k] = strides[k - 1] * radices[k - 1];
        }
        let digits = |mut idx: usize| -> Vec<usize> {
            radices
                .iter()
                .map(|&r| {
                    let d = idx % r;
                    idx /= r;
                    d
                })
                .collect()
        };
        // bucket states by total multiplicity; layer t depends on layer t - 2
        let max_total: usize = max_reps.iter().sum();
        let mut layers: Vec<Vec<usize>> = vec![Vec::new(); max_total + 1];
        for idx in 0..size {
            let t: usize = digits(idx).iter().sum();
            if t.is_multiple_of(2) {
                layers[t].push(idx);
            }
        }
        let mut values = vec![ZERO; size];
        values[0] = ONE;
        for layer in layers.iter().skip(2).step_by(2) {
            let computed = par::map_slice(layer, |&idx| {
                let c = digits(idx);
                let i = c.iter().position(|&x| x > 0).expect("nonzero total");
                let base = idx - strides[i];
                let mut sum = ZERO;
                if c[i] >= 2 {
                    sum += a.get(i, i) * (c[i] - 1) as f64 * values[base - strides[i]];
                }
                for j in i + 1..m {
                    if c[j] > 0 {
                        sum += a.get(i, j) * c[j] as f64 * values[base - strides[j]];
                    }
                }
                sum
            });
            for (&idx, v) in layer.iter().zip(computed) {
                values[idx] = v;
            }
        }
        Ok(Self {
            radices,
            strides,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, reps: &[usize]) -> Result<Complex64> {
        if reps.len() != self.radices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.radices.len(),
                got: reps.len(),
            });
        }
        let mut idx = 0;
        for (k, (&r, &radix)) in reps.iter().zip(&self.radices).enumerate() {
            if r >= radix {
                return Err(Error::OutOfRange {
                    index: r,
                    cutoff: radix - 1,
                });
            }
            idx += r * self.strides[k];
        }
        Ok(self.values[idx])
    }
}

/// Hafnian of `a` with row/column `i` repeated `reps[i]` times.
pub fn hafnian_repeated(a: &SymMatrix, reps: &[usize]) -> Result<Complex64> {
    if reps.iter().sum::<usize>() % 2 == 1 {
        if reps.len() != a.dim {
            return Err(Error::DimensionMismatch {
                expected: a.dim,
                got: reps.len(),
            });
        }
        return Ok(ZERO);
    }
    RepeatedHafnianTable::build(a, reps, DEFAULT_TABLE_LIMIT)?.get(reps)
}

/// Median wall time of [`hafnian`] on random matrices of each size.
pub fn benchmark<R: Rng>(
    sizes: &[usize],
    repeats: usize,
    rng: &mut R,
) -> Result<Vec<(usize, Duration)>> {
    sizes
        .iter()
        .map(|&n| {
            let mut times = Vec::with_capacity(repeats.max(1));
            for _ in 0..repeats.max(1) {
                let b = SymMatrix::random(n, rng)?;
                let start = Instant::now();
                std::hint::black_box(hafnian(&b)?);
                times.push(start.elapsed());
            }
            times.sort();
            Ok((n, times[times.len() / 2]))
        })
        .collect()
}

/// CSV with header `n,seconds`.
pub fn write_benchmark_csv<W: Write>(rows: &[(usize, Duration)], mut out: W) -> io::Result<()> {
    writeln!(out, "n,seconds")?;
    for (n, t) in rows {
        writeln!(out, "{n},{}", sig17(t.as_secs_f64()))?;
    }
    Ok(())
}
