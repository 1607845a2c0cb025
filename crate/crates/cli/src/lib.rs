//! Command-line drivers for tfsim.
//!
//! Every command renders its result into memory first and then writes it to
//! `--out` (or stdout), so identical arguments give identical bytes.
//! `TFSIM_MAX_COST` raises or lowers the work limit on hafnian tables and
//! phase-space grids.

pub mod circuit;
pub mod error;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::value::RawValue;
use tfsim::fgbs::{self, OutcomePattern};
use tfsim::gaussian::{husimi_grid, wigner_eval, Axis, PhaseSpaceGrid};
use tfsim::hg::SpectralState;
use tfsim::metrology::{self, Estimator};
use tfsim::two_photon::{apply_fbs, coincidence_probability, mode_marginal, product_jsa, Arm};
use tfsim::{hafnian, sig17};

pub use circuit::{parse_circuit, CircuitSpec};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "tfsim",
    version,
    about = "Time-frequency simulations of single photons"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frequency-domain Hong-Ou-Mandel: |K,K> through the frequency beam-splitter.
    Hom {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Phase precision of the twin-state interferometer (CSV).
    Metrology {
        /// Photon number N, or an inclusive range `a..b` of even N.
        #[arg(long)]
        photons: String,
        /// Fixed phase; omitted means the per-N optimum.
        #[arg(long)]
        phase: Option<f64>,
        #[arg(long, default_value = "fisher")]
        estimator: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Frequency-based Gaussian boson sampling.
    Fgbs {
        #[command(subcommand)]
        command: FgbsCommand,
    },
    /// Chronocyclic Wigner or Husimi function of one mode on a grid (CSV).
    Wigner {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, default_value_t = 0)]
        mode: usize,
        /// `wmin:wmax:nw,tmin:tmax:nt`
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, value_enum, default_value_t = Kind::Wigner)]
        kind: Kind,
        #[command(flatten)]
        out: OutArg,
    },
    /// Wall time of the hafnian kernel on random matrices (CSV).
    HafnianBench {
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 6, 8, 10, 12, 14, 16])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Validate a circuit file and print its canonical form.
    Circuit {
        path: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum FgbsCommand {
    /// Probability of one detection pattern (JSON).
    Prob {
        #[arg(long)]
        circuit: PathBuf,
        /// Comma-separated mode-resolved counts, one per mode.
        #[arg(long, value_delimiter = ',', required = true)]
        pattern: Vec<usize>,
        #[command(flatten)]
        out: OutArg,
    },
    /// All patterns with every count at most `cutoff` (CSV).
    Table {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, default_value_t = 6)]
        cutoff: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Seeded samples, one JSON object per line.
    Sample {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        cutoff: usize,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Wigner,
    Husimi,
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// JSON number with 17 significant digits; non-finite values become `null`.
fn num(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() {
        sig17(x)
    } else {
        "null".to_string()
    };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

fn nums(xs: &[f64]) -> Vec<Box<RawValue>> {
    xs.iter().map(|&x| num(x)).collect()
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("result serializes");
    bytes.push(b'\n');
    bytes
}

fn load_circuit(path: &Path) -> Result<CircuitSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_circuit(&text)
}

fn emit(out: &OutArg, bytes: &[u8]) -> Result<(), CliError> {
    match &out.out {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

/// Parses `N` or `a..b`; a range keeps the even values.
pub fn parse_photons(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("--photons expects N or a..b, got {text:?}"));
    let list: Vec<usize> = match text.split_once("..") {
        Some((a, b)) => {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            (a..=b).filter(|n| n % 2 == 0).collect()
        }
        None => vec![text.trim().parse().map_err(|_| bad())?],
    };
    if list.is_empty() {
        return Err(CliError::Usage(format!(
            "--photons {text:?} contains no even photon number"
        )));
    }
    Ok(list)
}

/// Parses `wmin:wmax:nw,tmin:tmax:nt`.
pub fn parse_grid(text: &str) -> Result<PhaseSpaceGrid, CliError> {
    let bad = |why: &str| CliError::Usage(format!("--grid {text:?}: {why}"));
    let (w, t) = text
        .split_once(',')
        .ok_or_else(|| bad("expected two axes separated by ','"))?;
    let axis = |spec: &str| -> Result<Axis, CliError> {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(bad("each axis is min:max:count"));
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad("bad axis minimum"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad("bad axis maximum"))?;
        let n: usize = n.trim().parse().map_err(|_| bad("bad point count"))?;
        Ok(Axis::new(lo, hi, n)?)
    };
    Ok(PhaseSpaceGrid::new(axis(w)?, axis(t)?))
}

#[derive(Serialize)]
struct HomReport {
    input: [usize; 2],
    coincidence: Coincidence,
    marginal_a: Vec<Box<RawValue>>,
    marginal_b: Vec<Box<RawValue>>,
    bunched: Vec<Bunched>,
    deficit: Box<RawValue>,
}

#[derive(Serialize)]
struct Coincidence {
    pattern: [usize; 2],
    probability: Box<RawValue>,
}

#[derive(Serialize)]
struct Bunched {
    pattern: [usize; 2],
    probability: Box<RawValue>,
}

fn hom(n: usize) -> Result<Vec<u8>, CliError> {
    let cutoff = 2 * n.max(1);
    let mode = SpectralState::mode(n, cutoff, 1.0)?;
    let out = apply_fbs(&product_jsa(&mode, &mode)?)?.value;
    let p = |a: usize, b: usize| coincidence_probability(&out, a, b);
    let report = HomReport {
        input: [n, n],
        coincidence: Coincidence {
            pattern: [n, n],
            probability: num(p(n, n)?),
        },
        marginal_a: nums(&mode_marginal(&out, Arm::A)),
        marginal_b: nums(&mode_marginal(&out, Arm::B)),
        bunched: vec![
            Bunched {
                pattern: [2 * n, 0],
                probability: num(p(2 * n, 0)?),
            },
            Bunched {
                pattern: [0, 2 * n],
                probability: num(p(0, 2 * n)?),
            },
        ],
        deficit: num(out.deficit()),
    };
    Ok(to_json(&report))
}

fn metrology(photons: &str, phase: Option<f64>, estimator: &str) -> Result<Vec<u8>, CliError> {
    let estimator: Estimator = estimator.parse()?;
    let rows = metrology::sweep(&parse_photons(photons)?, phase, estimator)?;
    let mut bytes = Vec::new();
    metrology::write_sweep_csv(&rows, &mut bytes).expect("writing to memory");
    Ok(bytes)
}

#[derive(Serialize)]
struct ProbReport {
    pattern: Vec<usize>,
    probability: Box<RawValue>,
}

#[derive(Serialize)]
struct Shot<'a> {
    shot: usize,
    pattern: &'a [usize],
}

fn fgbs(command: &FgbsCommand) -> Result<Vec<u8>, CliError> {
    match command {
        FgbsCommand::Prob {
            circuit, pattern, ..
        } => {
            let dist = fgbs::build_distribution(&load_circuit(circuit)?.state()?)?;
            let p = fgbs::probability(&dist, &OutcomePattern(pattern.clone()))?;
            Ok(to_json(&ProbReport {
                pattern: pattern.clone(),
                probability: num(p),
            }))
        }
        FgbsCommand::Table {
            circuit, cutoff, ..
        } => {
            let dist = fgbs::build_distribution(&load_circuit(circuit)?.state()?)?;
            let rows = fgbs::probability_table(&dist, *cutoff)?;
            let mut bytes = Vec::new();
            fgbs::write_table_csv(&rows, &mut bytes).expect("writing to memory");
            Ok(bytes)
        }
        FgbsCommand::Sample {
            circuit,
            shots,
            seed,
            cutoff,
            ..
        } => {
            let dist = fgbs::build_distribution(&load_circuit(circuit)?.state()?)?;
            let draws = fgbs::sample(&dist, *shots, *seed, *cutoff)?;
            let mut bytes = Vec::new();
            for (shot, d) in draws.iter().enumerate() {
                serde_json::to_writer(
                    &mut bytes,
                    &Shot {
                        shot,
                        pattern: &d.0,
                    },
                )
                .expect("writing to memory");
                bytes.push(b'\n');
            }
            Ok(bytes)
        }
    }
}

fn phase_space(circuit: &Path, mode: usize, grid: &str, kind: Kind) -> Result<Vec<u8>, CliError> {
    let state = load_circuit(circuit)?.state()?;
    let grid = parse_grid(grid)?;
    let limit = fgbs::max_cost();
    if grid.len() as u128 > limit {
        return Err(tfsim::Error::CostGuard {
            what: "phase-space grid points",
            needed: grid.len() as u128,
            limit,
        }
        .into());
    }
    let field = match kind {
        Kind::Wigner => wigner_eval(&state, &grid, mode)?,
        Kind::Husimi => husimi_grid(&state, &grid, mode)?,
    };
    let mut bytes = Vec::new();
    field.write_csv(&mut bytes).expect("writing to memory");
    Ok(bytes)
}

fn hafnian_bench(sizes: &[usize], repeats: usize, seed: u64) -> Result<Vec<u8>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = hafnian::benchmark(sizes, repeats, &mut rng)?;
    let mut bytes = Vec::new();
    hafnian::write_benchmark_csv(&rows, &mut bytes).expect("writing to memory");
    Ok(bytes)
}

/// Runs one command and writes its output.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let (bytes, out) = match &cli.command {
        Command::Hom { n, out } => (hom(*n)?, out),
        Command::Metrology {
            photons,
            phase,
            estimator,
            out,
        } => (metrology(photons, *phase, estimator)?, out),
        Command::Fgbs { command } => {
            let out = match command {
                FgbsCommand::Prob { out, .. }
                | FgbsCommand::Table { out, .. }
                | FgbsCommand::Sample { out, .. } => out,
            };
            (fgbs(command)?, out)
        }
        Command::Wigner {
            circuit,
            mode,
            grid,
            kind,
            out,
        } => (phase_space(circuit, *mode, grid, *kind)?, out),
        Command::HafnianBench {
            sizes,
            repeats,
            seed,
            out,
        } => (hafnian_bench(sizes, *repeats, *seed)?, out),
        Command::Circuit { path, out } => (load_circuit(path)?.to_canonical().into_bytes(), out),
    };
    emit(out, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn photon_ranges() {
        assert_eq!(parse_photons("4").unwrap(), vec![4]);
        assert_eq!(parse_photons("2..8").unwrap(), vec![2, 4, 6, 8]);
        assert_eq!(parse_photons("3..7").unwrap(), vec![4, 6]);
        assert!(parse_photons("3..3").is_err());
        assert!(parse_photons("x").is_err());
    }

    #[test]
    fn grid_spec() {
        let g = parse_grid("-4:4:9,-2:2:5").unwrap();
        assert_eq!((g.omega.count, g.t.count), (9, 5));
        assert_eq!(g.omega.point(0), -4.0);
        assert!(parse_grid("-4:4:9").is_err());
        assert!(parse_grid("-4:4,0:1:2").is_err());
    }

    #[test]
    fn json_numbers_keep_seventeen_digits() {
        assert_eq!(num(0.1).get(), "1.0000000000000001e-1");
        assert_eq!(num(f64::INFINITY).get(), "null");
    }

    #[test]
    fn hom_single_photon() {
        let v: serde_json::Value = serde_json::from_slice(&hom(1).unwrap()).unwrap();
        assert_eq!(v["coincidence"]["probability"].as_f64().unwrap(), 0.0);
        let marginal: Vec<f64> = v["marginal_a"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        assert!(
            (marginal[0] - 0.5).abs() < 1e-12
                && marginal[1].abs() < 1e-12
                && (marginal[2] - 0.5).abs() < 1e-12
        );
    }
}
