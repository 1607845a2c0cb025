#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfsim::gaussian::{run_gates, Gate, GaussianTFState};
use tfsim::two_photon::JointSpectralAmplitude;

/// Normalized random JSA supported on `n + m <= cutoff`.
pub fn random_jsa(cutoff: usize, seed: u64) -> JointSpectralAmplitude {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = DMatrix::from_fn(cutoff + 1, cutoff + 1, |n, m| {
        if n + m <= cutoff {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    c /= Complex64::new(norm, 0.0);
    JointSpectralAmplitude::new(c, 1.0).unwrap()
}

/// Two-mode circuit: scales in `[0.5, 2]`, then a random mix of FBS and FRFT.
pub fn random_two_mode_circuit(seed: u64) -> (Vec<f64>, Vec<Gate>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let widths = vec![rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)];
    let mut gates = vec![Gate::Fbs { a: 0, b: 1 }];
    for _ in 0..rng.random_range(0..4) {
        gates.push(if rng.random_bool(0.5) {
            Gate::Frft {
                mode: rng.random_range(0..2),
                phi: rng.random_range(-3.0..3.0),
            }
        } else {
            Gate::Fbs { a: 0, b: 1 }
        });
    }
    (widths, gates)
}

pub fn run(widths: &[f64], gates: &[Gate]) -> GaussianTFState {
    run_gates(&GaussianTFState::with_widths(widths).unwrap(), gates).unwrap()
}
