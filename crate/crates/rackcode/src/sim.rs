//! Cluster scenario runner: failure and corruption injection over either
//! code family, with exact bandwidth and access audits per run.
//!
//! A scenario names a code, a host rack with failed coordinates, and either
//! fixed or swept helper and corruption choices. Running it encodes a
//! deterministic message, executes every chosen repair, and checks each
//! transcript against the download floor and the access formula. Reports
//! carry exact rationals, so two runs of the same scenario produce
//! byte-identical output.

use crate::array::{self, ArrayCodeParams, ArrayCodeSpec};
use crate::gf::{self, FieldElement};
use crate::repair::{subsets, RepairError, RepairRequest, RepairScheme, RepairTranscript};
use crate::rs::{self, RsCodeParams, RsCodeSpec, RsTower};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario invalid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Array(#[from] array::CodeError),
    #[error(transparent)]
    Rs(#[from] rs::CodeError),
    #[error(transparent)]
    Repair(#[from] RepairError),
}

/// Code family plus its parameter bundle, tagged for serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CodeSpec {
    Array(ArrayCodeSpec),
    Rs(RsCodeSpec),
}

/// Which helper racks a repair contacts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HelperChoice {
    /// Every admissible helper subset of the right size.
    Sweep,
    Fixed(Vec<usize>),
}

/// Which helper racks lie.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorruptionChoice {
    /// Every subset of the contacted helpers up to the error budget.
    Sweep,
    Fixed(Vec<usize>),
}

/// Where the encoded message comes from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageSource {
    /// Drawn from the scenario seed.
    #[default]
    Random,
    /// Message symbols in encode order, each as its base-field coefficient
    /// vector (length 1 per row symbol for the array code, length ell for
    /// the tower code).
    Explicit(Vec<Vec<u64>>),
}

fn default_budget() -> usize {
    10_000
}

/// One reproducible experiment: everything a run needs, including the seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub code: CodeSpec,
    pub seed: u64,
    pub host: usize,
    /// Global column/coordinate indices to delete.
    pub failed: Vec<usize>,
    pub helpers: HelperChoice,
    pub corrupted: CorruptionChoice,
    #[serde(default)]
    pub message: MessageSource,
    /// Sweeps larger than this are sampled instead of enumerated.
    #[serde(default = "default_budget")]
    pub budget: usize,
}

/// Exact nonnegative rational, kept reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Ratio {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den).max(1);
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_one(&self) -> bool {
        self.num == 1 && self.den == 1
    }

    pub fn lt(&self, other: &Ratio) -> bool {
        (self.num as u128 * other.den as u128) < (other.num as u128 * self.den as u128)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// Erasures only.
    Plain,
    /// Erasures plus up to the error budget of lying helpers.
    Uer,
}

/// Rack shape shared by both code families, in audit-friendly units.
struct Shape {
    d: u64,
    e: u64,
    kr: u64,
    u: u64,
    v: u64,
    ell: u64,
    span: u64,
}

impl Shape {
    fn of(code: &CodeSpec) -> Result<Shape, SimError> {
        Ok(match code {
            CodeSpec::Array(s) => {
                let p = ArrayCodeParams::new(s)?;
                Shape {
                    d: p.helper_racks() as u64,
                    e: p.error_budget() as u64,
                    kr: p.k_racks() as u64,
                    u: p.rack_size() as u64,
                    v: p.k_rem() as u64,
                    ell: p.rows() as u64,
                    span: p.radix() as u64,
                }
            }
            CodeSpec::Rs(s) => {
                let p = RsCodeParams::new(s)?;
                Shape {
                    d: p.helper_racks() as u64,
                    e: p.error_budget() as u64,
                    kr: p.k_racks() as u64,
                    u: p.rack_size() as u64,
                    v: p.k_rem() as u64,
                    ell: p.ell() as u64,
                    span: p.span() as u64,
                }
            }
        })
    }
}

/// Exact download floor for repairing h coordinates through d helper racks:
/// d*h*ell over (d - kr + 1), or over (d - 2e - kr + 1) when lying helpers
/// are in scope.
pub fn cutset_bound(code: &CodeSpec, h: usize, mode: BoundMode) -> Result<Ratio, SimError> {
    let shape = Shape::of(code)?;
    let den = match mode {
        BoundMode::Plain => shape.d - shape.kr + 1,
        BoundMode::Uer => shape.d - 2 * shape.e - shape.kr + 1,
    };
    Ok(Ratio::new(shape.d * h as u64 * shape.ell, den))
}

/// One executed repair with its audit verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub id: usize,
    pub host: usize,
    pub failed: Vec<usize>,
    pub helpers: Vec<usize>,
    pub corrupted: Vec<usize>,
    /// Present unless the repair engine rejected the run.
    pub transcript: Option<RepairTranscript>,
    pub error: Option<String>,
    pub recovered: bool,
    pub downloaded: u64,
    pub bound: Ratio,
    /// downloaded over the lying-helper download floor; exactly 1 for
    /// passing base-scheme runs.
    pub ratio: Ratio,
    /// accessed over d*u*ell/span; exactly 1 for base, (d+1)/d for extended.
    pub access_ratio: Ratio,
    pub ok: bool,
}

/// Everything run_scenario produces: per-run records plus exact aggregates.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub total_combinations: usize,
    pub executed_runs: usize,
    /// True when the sweep exceeded the budget and was sampled instead.
    pub sampled: bool,
    pub min_downloaded: u64,
    pub max_downloaded: u64,
    pub mean_downloaded: Ratio,
    pub all_pass: bool,
    pub runs: Vec<RunRecord>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per run; list cells are semicolon-joined.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,host,failed,helpers,corrupted,downloaded,bound,ratio,ok\n");
        for r in &self.runs {
            let join = |xs: &[usize]| {
                xs.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.id,
                r.host,
                join(&r.failed),
                join(&r.helpers),
                join(&r.corrupted),
                r.downloaded,
                r.bound,
                r.ratio,
                r.ok
            ));
        }
        out
    }
}

enum Built {
    Array {
        params: ArrayCodeParams,
        word: Vec<Vec<FieldElement>>,
    },
    Rs {
        tower: RsTower,
        word: Vec<FieldElement>,
    },
}

fn build_code(s: &Scenario) -> Result<Built, SimError> {
    match &s.code {
        CodeSpec::Array(spec) => {
            let params = ArrayCodeParams::new(spec)?;
            let message = match &s.message {
                MessageSource::Random => {
                    let mut rng = ChaCha12Rng::seed_from_u64(s.seed);
                    params.random_message(&mut rng)
                }
                MessageSource::Explicit(symbols) => {
                    let k = params.spec().k;
                    let rows = params.rows();
                    if symbols.len() != k * rows {
                        return Err(SimError::Invalid(format!(
                            "explicit message needs {} symbols ({} columns of {} rows), got {}",
                            k * rows,
                            k,
                            rows,
                            symbols.len()
                        )));
                    }
                    let f = params.field();
                    (0..k)
                        .map(|c| {
                            (0..rows)
                                .map(|r| f.element(&symbols[c * rows + r]))
                                .collect()
                        })
                        .collect()
                }
            };
            let word = params.encode(&message)?;
            Ok(Built::Array { params, word })
        }
        CodeSpec::Rs(spec) => {
            let tower = RsTower::build(RsCodeParams::new(spec)?)?;
            let message = match &s.message {
                MessageSource::Random => {
                    let mut rng = ChaCha12Rng::seed_from_u64(s.seed);
                    tower.random_message(&mut rng)
                }
                MessageSource::Explicit(symbols) => {
                    let k = tower.params().k();
                    if symbols.len() != k {
                        return Err(SimError::Invalid(format!(
                            "explicit message needs {k} symbols, got {}",
                            symbols.len()
                        )));
                    }
                    symbols.iter().map(|c| tower.field().element(c)).collect()
                }
            };
            let word = tower.encode(&message)?;
            Ok(Built::Rs { tower, word })
        }
    }
}

impl Built {
    fn racks(&self) -> usize {
        match self {
            Built::Array { params, .. } => params.racks(),
            Built::Rs { tower, .. } => tower.params().racks(),
        }
    }

    /// Runs one repair; engine rejections that depend on payload content
    /// count as run failures, anything structural propagates.
    fn run_one(
        &self,
        req: &RepairRequest,
        corrupted: &[usize],
        sub_seed: u64,
    ) -> Result<(Option<RepairTranscript>, bool, Option<String>), SimError> {
        let outcome = match self {
            Built::Array { params, word } => {
                array::repair::run_repair(params, word, req, corrupted, sub_seed).map(|out| {
                    let recovered = req
                        .failed
                        .iter()
                        .all(|&c| out.columns.get(&c) == Some(&word[c]));
                    (out.transcript, recovered)
                })
            }
            Built::Rs { tower, word } => {
                rs::repair::run_repair(tower, word, req, corrupted, sub_seed).map(|out| {
                    let recovered = req
                        .failed
                        .iter()
                        .all(|&c| out.coords.get(&c) == Some(&word[c]));
                    (out.transcript, recovered)
                })
            }
        };
        match outcome {
            Ok((transcript, recovered)) => Ok((Some(transcript), recovered, None)),
            Err(e @ RepairError::NoConsistentHypothesis { .. })
            | Err(e @ RepairError::AmbiguousResolution) => Ok((None, false, Some(e.to_string()))),
            Err(e) => Err(SimError::Repair(e)),
        }
    }
}

/// Encodes, deletes, corrupts, repairs, and audits every chosen combination
/// of helpers and liars. Deterministic for a fixed scenario.
pub fn run_scenario(s: &Scenario) -> Result<Report, SimError> {
    if s.budget == 0 {
        return Err(SimError::Invalid("work budget must be positive".into()));
    }
    let shape = Shape::of(&s.code)?;
    let built = build_code(s)?;
    let racks = built.racks();
    if s.host >= racks {
        return Err(SimError::Invalid(format!(
            "host rack {} out of range for {racks} racks",
            s.host
        )));
    }
    let h = s.failed.len();
    let base_limit = (shape.u - shape.v) as usize;
    let required = if h <= base_limit {
        shape.d as usize
    } else {
        shape.d as usize + 1
    };

    let others: Vec<usize> = (0..racks).filter(|&r| r != s.host).collect();
    let mut helper_sets = match &s.helpers {
        HelperChoice::Fixed(hs) => vec![hs.clone()],
        HelperChoice::Sweep => {
            if required > others.len() {
                return Err(SimError::Repair(RepairError::ExtendedUnsupported {
                    required,
                    available: others.len(),
                }));
            }
            subsets(&others, required)
        }
    };
    if let CorruptionChoice::Fixed(cs) = &s.corrupted {
        // Liars must be among the contacted helpers.
        helper_sets.retain(|hs| cs.iter().all(|c| hs.contains(c)));
        if helper_sets.is_empty() {
            return Err(SimError::Invalid(
                "corrupted racks are not contained in any chosen helper set".into(),
            ));
        }
    }

    let mut combos: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for hs in &helper_sets {
        match &s.corrupted {
            CorruptionChoice::Fixed(cs) => combos.push((hs.clone(), cs.clone())),
            CorruptionChoice::Sweep => {
                for size in 0..=shape.e as usize {
                    for cs in subsets(hs, size) {
                        combos.push((hs.clone(), cs));
                    }
                }
            }
        }
    }
    let total = combos.len();
    let sampled = total > s.budget;
    let chosen: Vec<(Vec<usize>, Vec<usize>)> = if sampled {
        let mut rng = ChaCha12Rng::seed_from_u64(s.seed ^ 0x5157_4545_5053_494D);
        (0..s.budget)
            .map(|_| combos[gf::uniform_mod(&mut rng, total as u64) as usize].clone())
            .collect()
    } else {
        combos
    };

    let bound = cutset_bound(&s.code, h, BoundMode::Uer)?;
    let access_expected = shape.d * shape.u * shape.ell / shape.span;
    let mut runs = Vec::with_capacity(chosen.len());
    let mut sum = 0u64;
    for (id, (helpers, corrupted)) in chosen.into_iter().enumerate() {
        let req = RepairRequest {
            host: s.host,
            failed: s.failed.clone(),
            helpers: helpers.clone(),
        };
        let sub_seed = s
            .seed
            .wrapping_add((id as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let (transcript, recovered, error) = built.run_one(&req, &corrupted, sub_seed)?;
        let downloaded = transcript.as_ref().map_or(0, |t| t.downloaded_symbols);
        let ratio = Ratio::new(downloaded * bound.den(), bound.num().max(1));
        let access_ratio = transcript
            .as_ref()
            .map_or(Ratio::ZERO, |t| Ratio::new(t.accessed_symbols, access_expected));
        let within_budget = corrupted.len() <= shape.e as usize;
        let audits_pass = transcript.as_ref().is_some_and(|t| {
            let lp = shape.ell / shape.span;
            match t.scheme {
                RepairScheme::Base => ratio.is_one() && access_ratio.is_one(),
                RepairScheme::Extended => {
                    let over = h as u64 - (shape.u - shape.v);
                    t.downloaded_symbols
                        == shape.d * lp * (shape.u - shape.v) + (shape.d + 1) * lp * over
                        && t.downloaded_symbols < (shape.d + 1) * h as u64 * lp
                        && access_ratio == Ratio::new(shape.d + 1, shape.d)
                }
            }
        });
        let ok = recovered && within_budget && audits_pass;
        sum += downloaded;
        runs.push(RunRecord {
            id,
            host: s.host,
            failed: s.failed.clone(),
            helpers,
            corrupted,
            transcript,
            error,
            recovered,
            downloaded,
            bound,
            ratio,
            access_ratio,
            ok,
        });
    }

    let min = runs.iter().map(|r| r.downloaded).min().unwrap_or(0);
    let max = runs.iter().map(|r| r.downloaded).max().unwrap_or(0);
    let executed = runs.len();
    Ok(Report {
        total_combinations: total,
        executed_runs: executed,
        sampled,
        min_downloaded: min,
        max_downloaded: max,
        mean_downloaded: Ratio::new(sum, executed.max(1) as u64),
        all_pass: runs.iter().all(|r| r.ok),
        runs,
    })
}

/// Merges per-run transcripts (as written by repair commands) into the same
/// CSV row shape a scenario report uses.
pub fn transcripts_to_csv(transcripts: &[RepairTranscript]) -> String {
    let mut out = String::from("id,host,failed,helpers,corrupted,downloaded,bound,ratio,ok\n");
    for (id, t) in transcripts.iter().enumerate() {
        let join = |xs: &[usize]| {
            xs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},,,{}\n",
            id,
            t.host,
            join(&t.failed),
            join(&t.helpers),
            join(&t.corrupted_detected),
            t.downloaded_symbols,
            t.ok
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn array_q13() -> CodeSpec {
        CodeSpec::Array(ArrayCodeSpec {
            q: 13,
            rack_size: 3,
            racks: 4,
            k: 7,
            helper_racks: 3,
            error_budget: 0,
            seed: 3,
        })
    }

    fn rs_tight() -> CodeSpec {
        CodeSpec::Rs(RsCodeSpec {
            q: 3,
            rack_size: 2,
            racks: 2,
            k: 3,
            helper_racks: 1,
            error_budget: 0,
            seed: 7,
        })
    }

    #[test]
    fn bounds_match_hand_values() {
        let b = cutset_bound(&array_q13(), 1, BoundMode::Uer).unwrap();
        assert_eq!((b.num(), b.den()), (24, 1));
        let z = cutset_bound(&array_q13(), 0, BoundMode::Plain).unwrap();
        assert_eq!(z, Ratio::ZERO);
        // No error budget: both modes agree.
        assert_eq!(
            cutset_bound(&array_q13(), 2, BoundMode::Plain).unwrap(),
            cutset_bound(&array_q13(), 2, BoundMode::Uer).unwrap()
        );
    }

    #[test]
    fn ratios_reduce_and_render() {
        assert_eq!(Ratio::new(160, 144).to_string(), "10/9");
        assert_eq!(Ratio::new(48, 2).to_string(), "24");
        assert!(Ratio::new(3, 2).lt(&Ratio::new(2, 1)));
        assert!(!Ratio::new(2, 1).lt(&Ratio::new(3, 2)));
    }

    #[test]
    fn helper_sweep_passes_with_unit_ratio_everywhere() {
        let s = Scenario {
            code: array_q13(),
            seed: 17,
            host: 0,
            failed: vec![0],
            helpers: HelperChoice::Sweep,
            corrupted: CorruptionChoice::Sweep,
            message: MessageSource::Random,
            budget: default_budget(),
        };
        let report = run_scenario(&s).unwrap();
        // Only one admissible helper subset at d = racks - 1.
        assert_eq!(report.total_combinations, 1);
        assert!(!report.sampled);
        assert!(report.all_pass);
        assert_eq!(report.min_downloaded, 24);
        assert_eq!(report.max_downloaded, 24);
        assert_eq!(report.mean_downloaded.to_string(), "24");
        assert!(report.runs.iter().all(|r| r.ratio.is_one()));
        assert!(report.runs.iter().all(|r| r.access_ratio.is_one()));
    }

    #[test]
    fn reports_are_byte_identical_across_runs() {
        let s = Scenario {
            code: rs_tight(),
            seed: 99,
            host: 1,
            failed: vec![2],
            helpers: HelperChoice::Fixed(vec![0]),
            corrupted: CorruptionChoice::Sweep,
            message: MessageSource::Random,
            budget: 100,
        };
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.to_csv().starts_with(
            "id,host,failed,helpers,corrupted,downloaded,bound,ratio,ok\n"
        ));
        assert!(a.all_pass);
    }

    #[test]
    fn over_budget_sweeps_sample_and_say_so() {
        let s = Scenario {
            code: CodeSpec::Rs(RsCodeSpec {
                q: 3,
                rack_size: 2,
                racks: 3,
                k: 3,
                helper_racks: 1,
                error_budget: 0,
                seed: 7,
            }),
            seed: 5,
            host: 0,
            failed: vec![0],
            helpers: HelperChoice::Sweep,
            corrupted: CorruptionChoice::Sweep,
            message: MessageSource::Random,
            budget: 1,
        };
        let report = run_scenario(&s).unwrap();
        assert_eq!(report.total_combinations, 2);
        assert!(report.sampled);
        assert_eq!(report.executed_runs, 1);
        assert!(report.all_pass);
    }

    #[test]
    fn excess_corruption_is_flagged_not_passed() {
        let s = Scenario {
            code: CodeSpec::Rs(RsCodeSpec {
                q: 3,
                rack_size: 2,
                racks: 3,
                k: 1,
                helper_racks: 2,
                error_budget: 1,
                seed: 7,
            }),
            seed: 23,
            host: 0,
            failed: vec![0],
            helpers: HelperChoice::Fixed(vec![1, 2]),
            corrupted: CorruptionChoice::Fixed(vec![1, 2]),
            message: MessageSource::Random,
            budget: 10,
        };
        let report = run_scenario(&s).unwrap();
        assert!(!report.all_pass);
        assert_eq!(report.runs.len(), 1);
        assert!(!report.runs[0].ok);
        assert!(report.runs[0].error.is_some());
    }

    #[test]
    fn explicit_messages_must_fit_the_shape() {
        let s = Scenario {
            code: rs_tight(),
            seed: 0,
            host: 0,
            failed: vec![0],
            helpers: HelperChoice::Fixed(vec![1]),
            corrupted: CorruptionChoice::Fixed(vec![]),
            message: MessageSource::Explicit(vec![vec![1]]),
            budget: 10,
        };
        let err = run_scenario(&s).unwrap_err();
        assert!(matches!(err, SimError::Invalid(msg) if msg.contains("3 symbols")));
    }

    #[test]
    fn scenarios_round_trip_through_json() {
        let s = Scenario {
            code: rs_tight(),
            seed: 1,
            host: 0,
            failed: vec![1],
            helpers: HelperChoice::Sweep,
            corrupted: CorruptionChoice::Fixed(vec![1]),
            message: MessageSource::Random,
            budget: 50,
        };
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"kind\":\"rs\""));
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(back.host, 0);
        assert_eq!(back.helpers, HelperChoice::Sweep);
        assert_eq!(back.budget, 50);
    }
}
