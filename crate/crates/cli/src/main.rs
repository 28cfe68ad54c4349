//! Command-line front end for the rackcode toolkit.
//!
//! Subcommands chain into reproducible pipelines over JSON files:
//! `params` scans for the smallest admissible field, `encode` writes a
//! seeded codeword, `damage` erases entries, `repair` rebuilds them from
//! helper-rack aggregates, `verify` checks consistency, and `report`
//! collects repair transcripts into a CSV table. Exit status is zero only
//! when every audit passes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde_json::json;

use rackcode::array::{self, ArrayCodeParams, ArrayCodeSpec};
use rackcode::files::{ArrayCodewordFile, CodewordFile, RsCodewordFile};
use rackcode::repair::{RepairRequest, RepairTranscript};
use rackcode::rs::{self, RsCodeParams, RsCodeSpec, RsTower};
use rackcode::sim;

/// Ceiling for the field-size scan when --q is absent.
const Q_SCAN_CAP: u64 = 100_000;
/// Erasure-sweep budget when neither --budget nor RACKCODE_BUDGET is set.
const DEFAULT_BUDGET: u64 = 10_000;

#[derive(Parser)]
#[command(name = "rackcode", version, about = "Rack-aware erasure coding toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Kind {
    /// MDS array code; each node stores a column of field symbols.
    Array,
    /// Reed-Solomon code over an extension field; one coordinate per node.
    Rs,
}

#[derive(Args)]
struct ShapeArgs {
    /// Code family.
    #[arg(long, value_enum)]
    kind: Kind,
    /// Number of racks.
    #[arg(long)]
    racks: usize,
    /// Nodes per rack.
    #[arg(long)]
    rack_size: usize,
    /// Data entries; any k of the n determine the rest.
    #[arg(long)]
    k: usize,
    /// Helper racks contacted per repair.
    #[arg(long)]
    helpers: usize,
    /// Corrupted helper racks a repair must tolerate.
    #[arg(long, default_value_t = 0)]
    errors: usize,
    /// Base field size; the smallest admissible one is chosen when absent.
    #[arg(long)]
    q: Option<u64>,
    /// Seed for field construction and message sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the derived code shape and the smallest admissible field.
    Params(ShapeArgs),
    /// Encode a seeded random message and write the codeword file.
    Encode {
        #[command(flatten)]
        shape: ShapeArgs,
        /// Output codeword file.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Erase entries from a codeword file.
    Damage {
        /// Input codeword file.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Entries to erase, comma separated; all must live in one rack.
        #[arg(long, value_delimiter = ',', required = true)]
        fail: Vec<usize>,
        /// Output codeword file.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Rebuild the erased entries from helper-rack aggregates.
    Repair {
        /// Input codeword file with erased entries.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Helper racks to contact, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        helpers: Vec<usize>,
        /// Helper racks whose payloads are replaced by garbage in transit.
        #[arg(long, value_delimiter = ',')]
        corrupt: Vec<usize>,
        /// Seed for the corruption draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file for the repaired codeword.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Where to write the repair transcript; stdout when absent.
        #[arg(long, value_name = "PATH")]
        transcript: Option<PathBuf>,
    },
    /// Check codeword consistency; array codes also get an erasure sweep.
    Verify {
        /// Input codeword file.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Cap on erasure patterns checked in the array sweep.
        /// RACKCODE_BUDGET overrides this flag when set.
        #[arg(long)]
        budget: Option<u64>,
        /// Seed for pattern sampling when the sweep is not exhaustive.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Collect repair transcripts from a directory into one CSV table.
    Report {
        /// Directory of transcript JSON files.
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        /// CSV output path; stdout when absent.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: &Cmd) -> Result<bool> {
    match cmd {
        Cmd::Params(shape) => {
            cmd_params(shape)?;
            Ok(true)
        }
        Cmd::Encode { shape, out } => {
            cmd_encode(shape, out)?;
            Ok(true)
        }
        Cmd::Damage { input, fail, out } => {
            cmd_damage(input, fail, out)?;
            Ok(true)
        }
        Cmd::Repair {
            input,
            helpers,
            corrupt,
            seed,
            out,
            transcript,
        } => cmd_repair(input, helpers, corrupt, *seed, out, transcript.as_deref()),
        Cmd::Verify {
            input,
            budget,
            seed,
        } => cmd_verify(input, *budget, *seed),
        Cmd::Report { input, out } => cmd_report(input, out.as_deref()),
    }
}

fn is_prime(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= x {
        if x % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn is_prime_power(mut x: u64) -> bool {
    if x < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= x {
        if x % d == 0 {
            while x % d == 0 {
                x /= d;
            }
            return x == 1;
        }
        d += 1;
    }
    true
}

fn array_spec(shape: &ShapeArgs, q: u64) -> ArrayCodeSpec {
    ArrayCodeSpec {
        q,
        rack_size: shape.rack_size,
        racks: shape.racks,
        k: shape.k,
        helper_racks: shape.helpers,
        error_budget: shape.errors,
        seed: shape.seed,
    }
}

fn rs_spec(shape: &ShapeArgs, q: u64) -> RsCodeSpec {
    RsCodeSpec {
        q,
        rack_size: shape.rack_size,
        racks: shape.racks,
        k: shape.k,
        helper_racks: shape.helpers,
        error_budget: shape.errors,
        seed: shape.seed,
    }
}

/// Smallest prime power q > n with rack_size | q-1. The shape checks then
/// run once at that q, so any error they report is a genuine shape
/// violation rather than a field-size artifact.
fn resolve_array(shape: &ShapeArgs) -> Result<ArrayCodeParams> {
    if let Some(q) = shape.q {
        return Ok(ArrayCodeParams::new(&array_spec(shape, q))?);
    }
    if shape.rack_size == 0 {
        bail!("rack_size must be at least 1");
    }
    let n = shape
        .racks
        .checked_mul(shape.rack_size)
        .map(|n| n as u64)
        .filter(|&n| n < Q_SCAN_CAP)
        .context("racks * rack_size is out of range")?;
    let u = shape.rack_size as u64;
    let mut q = n + 1;
    while q <= Q_SCAN_CAP {
        if (q - 1) % u == 0 && is_prime_power(q) {
            return Ok(ArrayCodeParams::new(&array_spec(shape, q))?);
        }
        q += 1;
    }
    bail!("no admissible field size up to {Q_SCAN_CAP}: need a prime power q > {n} with {u} | q-1");
}

/// Smallest prime q with rack_size | q-1; the evaluation points live in an
/// extension, so q itself has no lower bound from n.
fn resolve_rs(shape: &ShapeArgs) -> Result<RsCodeParams> {
    if let Some(q) = shape.q {
        return Ok(RsCodeParams::new(&rs_spec(shape, q))?);
    }
    if shape.rack_size == 0 {
        bail!("rack_size must be at least 1");
    }
    let u = shape.rack_size as u64;
    let mut q = 2;
    while q <= Q_SCAN_CAP {
        if (q - 1) % u == 0 && is_prime(q) {
            return Ok(RsCodeParams::new(&rs_spec(shape, q))?);
        }
        q += 1;
    }
    bail!("no admissible field size up to {Q_SCAN_CAP}: need a prime q with {u} | q-1");
}

fn cmd_params(shape: &ShapeArgs) -> Result<()> {
    let bundle = match shape.kind {
        Kind::Array => {
            let p = resolve_array(shape)?;
            json!({
                "kind": "array",
                "q": p.spec().q,
                "racks": p.racks(),
                "rack_size": p.rack_size(),
                "n": p.n(),
                "k": p.spec().k,
                "parity": p.r(),
                "helper_racks": p.helper_racks(),
                "error_budget": p.error_budget(),
                "k_racks": p.k_racks(),
                "k_rem": p.k_rem(),
                "radix": p.radix(),
                "rows": p.rows(),
            })
        }
        Kind::Rs => {
            let p = resolve_rs(shape)?;
            json!({
                "kind": "rs",
                "q": p.spec().q,
                "racks": p.racks(),
                "rack_size": p.rack_size(),
                "n": p.n(),
                "k": p.spec().k,
                "parity": p.r(),
                "helper_racks": p.helper_racks(),
                "error_budget": p.error_budget(),
                "k_racks": p.k_racks(),
                "k_rem": p.k_rem(),
                "span": p.span(),
                "ell": p.ell(),
                "primes": p.primes(),
                "co_degrees": (0..p.racks()).map(|i| p.co_degree(i)).collect::<Vec<_>>(),
            })
        }
    };
    println!("{}", serde_json::to_string_pretty(&bundle)?);
    Ok(())
}

fn cmd_encode(shape: &ShapeArgs, out: &Path) -> Result<()> {
    let file = match shape.kind {
        Kind::Array => {
            let p = resolve_array(shape)?;
            let mut rng = ChaCha12Rng::seed_from_u64(shape.seed);
            let message = p.random_message(&mut rng);
            let columns = p.encode(&message)?;
            CodewordFile::Array(ArrayCodewordFile::capture(&p, &columns))
        }
        Kind::Rs => {
            let params = resolve_rs(shape)?;
            let tower = RsTower::build(params)?;
            let mut rng = ChaCha12Rng::seed_from_u64(shape.seed);
            let message = tower.random_message(&mut rng);
            let word = tower.encode(&message)?;
            CodewordFile::Rs(RsCodewordFile::capture(tower.params(), &word))
        }
    };
    write_json(out, &file)
}

fn cmd_damage(input: &Path, fail: &[usize], out: &Path) -> Result<()> {
    let mut file = read_codeword(input)?;
    file.erase(fail)?;
    write_json(out, &file)
}

fn cmd_repair(
    input: &Path,
    helpers: &[usize],
    corrupt: &[usize],
    seed: u64,
    out: &Path,
    transcript_path: Option<&Path>,
) -> Result<bool> {
    let mut file = read_codeword(input)?;
    let (transcript, codeword_ok) = match &mut file {
        CodewordFile::Array(f) => {
            let p = ArrayCodeParams::new(&f.params)?;
            let failed = f.erased();
            if failed.is_empty() {
                bail!("nothing to repair: no failed columns");
            }
            let host = failed[0] / p.rack_size();
            // The repair engine never reads the failed columns, so zero
            // placeholders are safe in the full-column view it expects.
            let mut columns = vec![vec![p.field().zero(); p.rows()]; p.n()];
            for (c, col) in f.surviving(&p)? {
                columns[c] = col;
            }
            let req = RepairRequest {
                host,
                failed,
                helpers: helpers.to_vec(),
            };
            let outcome = array::repair::run_repair(&p, &columns, &req, corrupt, seed)?;
            f.restore(&outcome.columns)?;
            let full = f.full_columns(&p)?;
            (outcome.transcript, p.is_codeword(&full))
        }
        CodewordFile::Rs(f) => {
            let tower = RsTower::build(RsCodeParams::new(&f.params)?)?;
            let p = tower.params();
            let failed = f.erased();
            if failed.is_empty() {
                bail!("nothing to repair: no failed columns");
            }
            let host = failed[0] / p.rack_size();
            let mut word = vec![tower.field().zero(); p.n()];
            for (c, x) in f.surviving(p, tower.field())? {
                word[c] = x;
            }
            let req = RepairRequest {
                host,
                failed,
                helpers: helpers.to_vec(),
            };
            let outcome = rs::repair::run_repair(&tower, &word, &req, corrupt, seed)?;
            f.restore(&outcome.coords)?;
            let full = f.full_word(tower.params(), tower.field())?;
            (outcome.transcript, tower.is_codeword(&full)?)
        }
    };
    write_json(out, &file)?;
    match transcript_path {
        Some(path) => write_json(path, &transcript)?,
        None => println!("{}", serde_json::to_string_pretty(&transcript)?),
    }
    let mut injected = corrupt.to_vec();
    injected.sort_unstable();
    injected.dedup();
    let localized = transcript.corrupted_detected == injected;
    if !codeword_ok {
        eprintln!("audit failed: the repaired word does not satisfy the parity checks");
    }
    if !localized {
        eprintln!(
            "audit failed: corrupted racks {:?} were detected as {:?}",
            injected, transcript.corrupted_detected
        );
    }
    Ok(codeword_ok && localized && transcript.ok)
}

fn cmd_verify(input: &Path, budget: Option<u64>, seed: u64) -> Result<bool> {
    let file = read_codeword(input)?;
    let budget = effective_budget(budget)?;
    let (result, passed) = match &file {
        CodewordFile::Array(f) => {
            let p = ArrayCodeParams::new(&f.params)?;
            let erased = f.erased();
            let consistent = if erased.is_empty() {
                let full = f.full_columns(&p)?;
                p.is_codeword(&full)
            } else {
                decode_check(
                    f.surviving(&p)
                        .map_err(anyhow::Error::from)
                        .and_then(|s| Ok(p.decode_from_columns(&s)?)),
                )
            };
            let sweep = p.verify_mds(budget, seed);
            let passed = consistent && sweep.all_ok();
            (
                json!({
                    "kind": "array",
                    "erased": erased,
                    "consistent": consistent,
                    "erasure_sweep": sweep,
                    "ok": passed,
                }),
                passed,
            )
        }
        CodewordFile::Rs(f) => {
            let tower = RsTower::build(RsCodeParams::new(&f.params)?)?;
            let erased = f.erased();
            let consistent = if erased.is_empty() {
                let full = f.full_word(tower.params(), tower.field())?;
                tower.is_codeword(&full)?
            } else {
                decode_check(
                    f.surviving(tower.params(), tower.field())
                        .map_err(anyhow::Error::from)
                        .and_then(|s| Ok(tower.decode_from_coords(&s)?)),
                )
            };
            (
                json!({
                    "kind": "rs",
                    "erased": erased,
                    "consistent": consistent,
                    "ok": consistent,
                }),
                consistent,
            )
        }
    };
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(passed)
}

fn decode_check<T>(outcome: Result<T>) -> bool {
    match outcome {
        Ok(_) => true,
        Err(e) => {
            eprintln!("decode check failed: {e:#}");
            false
        }
    }
}

fn cmd_report(dir: &Path, out: Option<&Path>) -> Result<bool> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no transcript files (*.json) in {}", dir.display());
    }
    let mut transcripts = Vec::with_capacity(paths.len());
    for path in &paths {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let t: RepairTranscript = serde_json::from_str(&text)
            .with_context(|| format!("{} is not a repair transcript", path.display()))?;
        transcripts.push(t);
    }
    let csv = sim::transcripts_to_csv(&transcripts);
    match out {
        Some(path) => fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(transcripts.iter().all(|t| t.ok))
}

/// RACKCODE_BUDGET wins over --budget when both are present.
fn effective_budget(flag: Option<u64>) -> Result<u64> {
    match std::env::var("RACKCODE_BUDGET") {
        Ok(text) => text
            .trim()
            .parse()
            .with_context(|| format!("RACKCODE_BUDGET={text:?} is not an unsigned integer")),
        Err(std::env::VarError::NotPresent) => Ok(flag.unwrap_or(DEFAULT_BUDGET)),
        Err(e) => Err(e).context("reading RACKCODE_BUDGET"),
    }
}

fn read_codeword(path: &Path) -> Result<CodewordFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a codeword file", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
