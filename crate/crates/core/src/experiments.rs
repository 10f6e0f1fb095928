//! Seeded Monte Carlo harnesses: sample random linear codes at a rate
//! epsilon below capacity, draw input-list rectangles (or balls) from a
//! configurable sampler, and record exact list-size statistics.
//!
//! Determinism contract: identical (config, master seed) produces a
//! byte-identical JSON report at any thread count. Per-trial RNG streams are
//! derived by hashing the master seed with the trial indices, so trials are
//! order-independent; wall-clock timing is kept out of the serialized form.

use crate::balls::{ListRecoveryBall, Rectangle};
use crate::codes::{CodesError, CosetSide, LinearCode, DEFAULT_ENUM_CAP};
use crate::gf::{FieldElement, FieldSpec};
use crate::info::{capacity_erasures, capacity_errors, ErasureParams, ErrorParams};
use crate::mixing::{CenteredInterval, SubsetOfField};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentsError {
    #[error("infeasible config: {0}")]
    ConfigInfeasible(String),
    #[error("trial (code {code_index}, rectangle {rect_index}) failed: {source}")]
    Trial { code_index: usize, rect_index: usize, source: CodesError },
    #[error(transparent)]
    Codes(#[from] CodesError),
}

/// Decoding model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    Erasures,
    Errors,
}

/// How per-coordinate input lists are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// Uniform random size-l subsets.
    UniformSubsets,
    /// Random dilates and shifts of centered intervals (prime fields).
    CenteredIntervals,
    /// Multiplicative cosets gamma * F_{p^s} (extension fields, l = p^s).
    SubfieldCosets,
    /// Per-coordinate coin flip between a dilated centered interval and a
    /// uniform subset (prime fields).
    AdversarialScan,
}

impl SamplerKind {
    pub fn label(self) -> &'static str {
        match self {
            SamplerKind::UniformSubsets => "uniform-subsets",
            SamplerKind::CenteredIntervals => "centered-intervals",
            SamplerKind::SubfieldCosets => "subfield-cosets",
            SamplerKind::AdversarialScan => "adversarial-scan",
        }
    }
}

fn default_enum_cap() -> u64 {
    DEFAULT_ENUM_CAP
}

/// A seeded Monte Carlo run description. Flat so it round-trips through a
/// plain key-value config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Field characteristic.
    pub p: u32,
    /// Field extension degree; the field is F_{p^m}.
    pub m: u32,
    /// Input list size.
    pub ell: u32,
    /// Block length.
    pub n: usize,
    /// Gap to capacity; the design rate is capacity - eps.
    pub eps: f64,
    pub mode: ModeKind,
    /// Erasure fraction (erasures mode).
    #[serde(default)]
    pub alpha: f64,
    /// Decoding radius (errors mode).
    #[serde(default)]
    pub rho: f64,
    pub sampler: SamplerKind,
    pub code_trials: usize,
    pub rectangles_per_code: usize,
    pub master_seed: u64,
    #[serde(default = "default_enum_cap")]
    pub enumeration_cap: u64,
}

/// Everything derived from a validated config.
#[derive(Debug, Clone)]
pub struct DerivedParams {
    pub field: FieldSpec,
    pub capacity: f64,
    pub design_rate: f64,
    /// k = round(R n), required >= 1.
    pub k_target: usize,
    pub parity_rows: usize,
    /// capacity - k_target/n; at small n the rounding dominates the nominal
    /// eps, so reports carry this realized gap.
    pub realized_eps: f64,
    /// Subfield degree s with p^s = l, for the coset sampler.
    pub coset_degree: Option<u32>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<DerivedParams, ExperimentsError> {
        let field = FieldSpec::new(self.p as u64, self.m)
            .map_err(|e| ExperimentsError::ConfigInfeasible(e.to_string()))?;
        let q = field.order();
        let capacity = match self.mode {
            ModeKind::Erasures => {
                let params = ErasureParams::new(q, self.ell, self.alpha)
                    .map_err(|e| ExperimentsError::ConfigInfeasible(e.to_string()))?;
                capacity_erasures(&params)
            }
            ModeKind::Errors => {
                let params = ErrorParams::new(q, self.ell, self.rho)
                    .map_err(|e| ExperimentsError::ConfigInfeasible(e.to_string()))?;
                capacity_errors(&params)
            }
        };
        let design_rate = capacity - self.eps;
        if !(0.0..1.0).contains(&design_rate) {
            return Err(ExperimentsError::ConfigInfeasible(format!(
                "design rate {design_rate} outside (0,1): capacity {capacity}, eps {}",
                self.eps
            )));
        }
        let k_target = (design_rate * self.n as f64).round() as i64;
        if k_target < 1 {
            return Err(ExperimentsError::ConfigInfeasible(format!(
                "rate {design_rate} rounds to dimension {k_target} < 1 at n = {}",
                self.n
            )));
        }
        let k_target = (k_target as usize).min(self.n);
        let coset_degree = match self.sampler {
            SamplerKind::SubfieldCosets => {
                if self.m < 2 {
                    return Err(ExperimentsError::ConfigInfeasible(
                        "subfield-cosets sampler requires an extension field".into(),
                    ));
                }
                let s = exact_log(self.p, self.ell).ok_or_else(|| {
                    ExperimentsError::ConfigInfeasible(format!(
                        "subfield-cosets needs l = p^s, got l = {}, p = {}",
                        self.ell, self.p
                    ))
                })?;
                if self.m % s != 0 {
                    return Err(ExperimentsError::ConfigInfeasible(format!(
                        "subfield degree {s} does not divide m = {}",
                        self.m
                    )));
                }
                Some(s)
            }
            SamplerKind::CenteredIntervals | SamplerKind::AdversarialScan => {
                if self.m != 1 {
                    return Err(ExperimentsError::ConfigInfeasible(
                        "interval samplers require a prime field".into(),
                    ));
                }
                None
            }
            SamplerKind::UniformSubsets => None,
        };
        if self.code_trials == 0 || self.rectangles_per_code == 0 {
            return Err(ExperimentsError::ConfigInfeasible(
                "code_trials and rectangles_per_code must be positive".into(),
            ));
        }
        Ok(DerivedParams {
            capacity,
            design_rate,
            k_target,
            parity_rows: self.n - k_target,
            realized_eps: capacity - k_target as f64 / self.n as f64,
            coset_degree,
            field,
        })
    }
}

fn exact_log(p: u32, ell: u32) -> Option<u32> {
    let mut v = ell;
    let mut s = 0;
    while v > 1 {
        if v % p != 0 {
            return None;
        }
        v /= p;
        s += 1;
    }
    (s > 0).then_some(s)
}

/// SplitMix64 step; the seed-derivation mix.
fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from the master seed and a path of
/// indices, so trials can run in any order.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut acc = splitmix(master);
    for &part in path {
        acc = splitmix(acc ^ part.wrapping_mul(0xd1b54a32d192ed03));
    }
    acc
}

const RNG_SCHEME: &str =
    "ChaCha12 streams; trial seed = splitmix64 chain over (master, domain, code, rectangle)";

/// One counted trial; these rows are the CSV payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Pair/batch index in paired runs, 0 in standalone runs.
    pub seed_index: u64,
    pub code_index: usize,
    pub sampler: String,
    pub count: u64,
    pub realized_rate: f64,
}

/// Full result of a Monte Carlo run. Serializes deterministically; the
/// wall clock lives outside the serialized form so reruns are byte-equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub capacity: f64,
    pub design_rate: f64,
    pub realized_eps: f64,
    /// The theorems' asymptotic preconditions are out of reach at desk
    /// scale; reports say so explicitly.
    pub regime: String,
    pub trials: Vec<TrialRecord>,
    pub per_code_max: Vec<u64>,
    pub per_code_realized_rate: Vec<f64>,
    pub overall_max: u64,
    pub mean: f64,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub histogram: BTreeMap<u64, u64>,
    pub master_seed: u64,
    pub rng_scheme: String,
    #[serde(skip)]
    pub wall_clock_ms: u64,
}

impl ExperimentReport {
    /// Deterministic JSON rendering (struct field order, sorted histogram).
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<ExperimentReport, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// CSV rendering: one row per trial.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed_index,code_index,sampler,count,realized_rate\n");
        for t in &self.trials {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                t.seed_index, t.code_index, t.sampler, t.count, t.realized_rate
            ));
        }
        out
    }

    pub fn trials_from_csv(s: &str) -> Result<Vec<TrialRecord>, String> {
        let mut rows = Vec::new();
        for (i, line) in s.lines().enumerate() {
            if i == 0 || line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 5 {
                return Err(format!("row {i}: expected 5 columns, got {}", parts.len()));
            }
            rows.push(TrialRecord {
                seed_index: parts[0].parse().map_err(|e| format!("row {i}: {e}"))?,
                code_index: parts[1].parse().map_err(|e| format!("row {i}: {e}"))?,
                sampler: parts[2].to_string(),
                count: parts[3].parse().map_err(|e| format!("row {i}: {e}"))?,
                realized_rate: parts[4].parse().map_err(|e| format!("row {i}: {e}"))?,
            });
        }
        Ok(rows)
    }
}

struct CodeOutcome {
    counts: Vec<u64>,
    realized_rate: f64,
}

fn quantile(sorted: &[u64], p: f64) -> u64 {
    debug_assert!(!sorted.is_empty());
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn assemble_report(
    cfg: &ExperimentConfig,
    derived: &DerivedParams,
    seed_indices: &[u64],
    outcomes: Vec<CodeOutcome>,
    wall_clock_ms: u64,
) -> ExperimentReport {
    let mut trials = Vec::new();
    let mut per_code_max = Vec::new();
    let mut per_code_rate = Vec::new();
    let mut histogram = BTreeMap::new();
    for (code_index, outcome) in outcomes.iter().enumerate() {
        per_code_max.push(outcome.counts.iter().copied().max().unwrap_or(0));
        per_code_rate.push(outcome.realized_rate);
        for &count in &outcome.counts {
            *histogram.entry(count).or_insert(0u64) += 1;
            trials.push(TrialRecord {
                seed_index: seed_indices[code_index],
                code_index,
                sampler: cfg.sampler.label().to_string(),
                count,
                realized_rate: outcome.realized_rate,
            });
        }
    }
    let mut sorted: Vec<u64> = trials.iter().map(|t| t.count).collect();
    sorted.sort_unstable();
    let total: u128 = sorted.iter().map(|&c| c as u128).sum();
    ExperimentReport {
        config: cfg.clone(),
        capacity: derived.capacity,
        design_rate: derived.design_rate,
        realized_eps: derived.realized_eps,
        regime: format!(
            "desk-scale: n = {} is far below the asymptotic regime the list-size theorems assume",
            cfg.n
        ),
        overall_max: per_code_max.iter().copied().max().unwrap_or(0),
        mean: total as f64 / sorted.len() as f64,
        p50: quantile(&sorted, 0.50),
        p90: quantile(&sorted, 0.90),
        p99: quantile(&sorted, 0.99),
        trials,
        per_code_max,
        per_code_realized_rate: per_code_rate,
        histogram,
        master_seed: cfg.master_seed,
        rng_scheme: RNG_SCHEME.to_string(),
        wall_clock_ms,
    }
}

/// Draws one size-l side per the sampler kind.
fn sample_side(
    field: &FieldSpec,
    ell: u32,
    sampler: SamplerKind,
    coset_degree: Option<u32>,
    rng: &mut ChaCha12Rng,
) -> SubsetOfField {
    match sampler {
        SamplerKind::UniformSubsets => crate::mixing::random_subset(field, ell as usize, rng),
        SamplerKind::CenteredIntervals => sample_interval_side(field, ell, rng),
        SamplerKind::AdversarialScan => {
            if rng.gen_bool(0.5) {
                sample_interval_side(field, ell, rng)
            } else {
                crate::mixing::random_subset(field, ell as usize, rng)
            }
        }
        SamplerKind::SubfieldCosets => {
            let s = coset_degree.expect("validated");
            let gamma = field.element(rng.gen_range(1..field.order()));
            subfield_subset(field, s).dilate(gamma).expect("gamma nonzero")
        }
    }
}

/// A random dilate-and-shift of a centered interval: gamma * I + c.
fn sample_interval_side(field: &FieldSpec, ell: u32, rng: &mut ChaCha12Rng) -> SubsetOfField {
    let shapes = CenteredInterval::for_size(field, ell as usize).expect("valid size");
    let interval = shapes[rng.gen_range(0..shapes.len())].to_subset();
    let gamma = field.element(rng.gen_range(1..field.order()));
    let shift = field.element(rng.gen_range(0..field.order()));
    interval.dilate(gamma).expect("gamma nonzero").translate(shift)
}

/// The subfield F_{p^s} inside F_{p^m} as a subset.
fn subfield_subset(field: &FieldSpec, s: u32) -> SubsetOfField {
    let frob = (field.characteristic() as u64).pow(s);
    let fixed: Vec<FieldElement> =
        field.elements().filter(|&x| field.pow(x, frob) == x).collect();
    SubsetOfField::new(field.clone(), fixed).expect("subfield is nonempty")
}

/// Uniformly chosen floor(alpha n) erased coordinate positions.
fn sample_erasure_pattern(n: usize, alpha: f64, rng: &mut ChaCha12Rng) -> Vec<bool> {
    let erased_count = (alpha * n as f64).floor() as usize;
    let mut erased = vec![false; n];
    let mut picked = 0;
    while picked < erased_count {
        let i = rng.gen_range(0..n);
        if !erased[i] {
            erased[i] = true;
            picked += 1;
        }
    }
    erased
}

fn run_codes<F>(cfg: &ExperimentConfig, per_code: F) -> Result<Vec<CodeOutcome>, ExperimentsError>
where
    F: Fn(usize, &LinearCode) -> Result<Vec<u64>, ExperimentsError> + Sync,
{
    let derived = cfg.validate()?;
    (0..cfg.code_trials)
        .into_par_iter()
        .map(|code_index| {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(
                cfg.master_seed,
                &[1, code_index as u64],
            ));
            let h = crate::codes::sample_parity_check(
                &derived.field,
                cfg.n,
                derived.parity_rows,
                &mut rng,
            );
            let code = LinearCode::from_parity_check(derived.field.clone(), h);
            let counts = per_code(code_index, &code)?;
            Ok(CodeOutcome { counts, realized_rate: code.realized_rate() })
        })
        .collect()
}

/// Erasure-mode Monte Carlo: per code, sample rectangles whose erased
/// coordinates carry the full field and count |C ∩ rect| exactly (the
/// subfield-coset sampler uses the linearized counter).
pub fn run_erasure_experiment(
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentsError> {
    if cfg.mode != ModeKind::Erasures {
        return Err(ExperimentsError::ConfigInfeasible("mode must be erasures".into()));
    }
    let derived = cfg.validate()?;
    let start = std::time::Instant::now();
    let outcomes = run_codes(cfg, |code_index, code| {
        (0..cfg.rectangles_per_code)
            .map(|rect_index| {
                let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(
                    cfg.master_seed,
                    &[2, code_index as u64, rect_index as u64],
                ));
                let erased = sample_erasure_pattern(cfg.n, cfg.alpha, &mut rng);
                if cfg.sampler == SamplerKind::SubfieldCosets {
                    let s = derived.coset_degree.expect("validated");
                    let sides: Vec<CosetSide> = erased
                        .iter()
                        .map(|&e| {
                            if e {
                                CosetSide::Full
                            } else {
                                CosetSide::Coset(
                                    derived
                                        .field
                                        .element(rng.gen_range(1..derived.field.order())),
                                )
                            }
                        })
                        .collect();
                    let count = code.count_in_coset_rectangle(&sides, s).map_err(|source| {
                        ExperimentsError::Trial { code_index, rect_index, source }
                    })?;
                    u64::try_from(count).map_err(|_| ExperimentsError::Trial {
                        code_index,
                        rect_index,
                        source: CodesError::Overflow,
                    })
                } else {
                    let sides: Vec<SubsetOfField> = erased
                        .iter()
                        .map(|&e| {
                            if e {
                                SubsetOfField::full(derived.field.clone())
                            } else {
                                sample_side(
                                    &derived.field,
                                    cfg.ell,
                                    cfg.sampler,
                                    derived.coset_degree,
                                    &mut rng,
                                )
                            }
                        })
                        .collect();
                    let rect = Rectangle::new(sides).expect("sides share the field");
                    code.count_in_rectangle(&rect, cfg.enumeration_cap).map_err(|source| {
                        ExperimentsError::Trial { code_index, rect_index, source }
                    })
                }
            })
            .collect()
    })?;
    let wall = start.elapsed().as_millis() as u64;
    let seed_indices = vec![0u64; cfg.code_trials];
    Ok(assemble_report(cfg, &derived, &seed_indices, outcomes, wall))
}

/// Error-mode Monte Carlo: per code, sample all-small-side center rectangles
/// and count codewords in the radius-rho ball.
pub fn run_error_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentsError> {
    if cfg.mode != ModeKind::Errors {
        return Err(ExperimentsError::ConfigInfeasible("mode must be errors".into()));
    }
    let derived = cfg.validate()?;
    let q = derived.field.order() as u128;
    let space = q.checked_pow(derived.k_target as u32).unwrap_or(u128::MAX);
    if space > cfg.enumeration_cap as u128 {
        return Err(ExperimentsError::ConfigInfeasible(format!(
            "codeword space q^k = {space} exceeds the enumeration cap {}",
            cfg.enumeration_cap
        )));
    }
    let start = std::time::Instant::now();
    let outcomes = run_codes(cfg, |code_index, code| {
        (0..cfg.rectangles_per_code)
            .map(|rect_index| {
                let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(
                    cfg.master_seed,
                    &[2, code_index as u64, rect_index as u64],
                ));
                let sides: Vec<SubsetOfField> = (0..cfg.n)
                    .map(|_| {
                        sample_side(
                            &derived.field,
                            cfg.ell,
                            cfg.sampler,
                            derived.coset_degree,
                            &mut rng,
                        )
                    })
                    .collect();
                let rect = Rectangle::new(sides).expect("sides share the field");
                let ball = ListRecoveryBall::new(rect, cfg.rho);
                code.count_in_ball(&ball, cfg.enumeration_cap)
                    .map_err(|source| ExperimentsError::Trial { code_index, rect_index, source })
            })
            .collect()
    })?;
    let wall = start.elapsed().as_millis() as u64;
    let seed_indices = vec![0u64; cfg.code_trials];
    Ok(assemble_report(cfg, &derived, &seed_indices, outcomes, wall))
}

/// Paired comparison of an extension-field run against a prime-field run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub pairs: usize,
    /// (extension max, prime max) per pair, indexed by seed.
    pub paired_maxima: Vec<(u64, u64)>,
    /// Fraction of pairs with extension max strictly above prime max
    /// (ties count in the denominator).
    pub dominance_fraction: f64,
    pub strict_wins: usize,
    pub ties: usize,
    pub extension_p90: u64,
    pub prime_p90: u64,
    pub extension: ExperimentReport,
    pub prime: ExperimentReport,
}

impl SeparationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Smallest prime >= x.
pub fn nearest_prime_at_least(x: u32) -> u32 {
    let mut candidate = x.max(2);
    loop {
        let mut is_prime = true;
        let mut d = 2u32;
        while d.saturating_mul(d) <= candidate {
            if candidate % d == 0 {
                is_prime = false;
                break;
            }
            d += 1;
        }
        if is_prime {
            return candidate;
        }
        candidate += 1;
    }
}

/// Runs `pairs` paired erasure experiments: the given extension-field config
/// with the subfield-coset sampler against the nearest prime field with the
/// adversarial scan, at the same n and eps, pairing by seed index.
pub fn run_separation(
    ext_cfg: &ExperimentConfig,
    pairs: usize,
) -> Result<SeparationReport, ExperimentsError> {
    if pairs == 0 {
        return Err(ExperimentsError::ConfigInfeasible(
            "separation needs at least one pair".into(),
        ));
    }
    if ext_cfg.mode != ModeKind::Erasures {
        return Err(ExperimentsError::ConfigInfeasible("separation runs in erasures mode".into()));
    }
    if ext_cfg.sampler != SamplerKind::SubfieldCosets {
        return Err(ExperimentsError::ConfigInfeasible(
            "extension side must use the subfield-cosets sampler".into(),
        ));
    }
    let ext_derived = ext_cfg.validate()?;
    let q_ext = ext_derived.field.order();
    let q_prime = nearest_prime_at_least(q_ext);
    let prime_cfg = ExperimentConfig {
        p: q_prime,
        m: 1,
        sampler: SamplerKind::AdversarialScan,
        ..ext_cfg.clone()
    };
    prime_cfg.validate()?;

    let run_side =
        |base: &ExperimentConfig, side: u64| -> Result<ExperimentReport, ExperimentsError> {
            let sub_reports = (0..pairs)
                .into_par_iter()
                .map(|pair| {
                    let cfg = ExperimentConfig {
                        master_seed: derive_seed(ext_cfg.master_seed, &[3, pair as u64, side]),
                        ..base.clone()
                    };
                    run_erasure_experiment(&cfg)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(merge_reports(base, sub_reports))
        };
    let extension = run_side(ext_cfg, 0)?;
    let prime = run_side(&prime_cfg, 1)?;

    let per_pair_max = |r: &ExperimentReport| -> Vec<u64> {
        (0..pairs)
            .map(|pair| {
                let per_pair = ext_cfg.code_trials;
                r.per_code_max[pair * per_pair..(pair + 1) * per_pair]
                    .iter()
                    .copied()
                    .max()
                    .unwrap_or(0)
            })
            .collect()
    };
    let ext_max = per_pair_max(&extension);
    let prime_max = per_pair_max(&prime);
    let paired_maxima: Vec<(u64, u64)> =
        ext_max.iter().copied().zip(prime_max.iter().copied()).collect();
    let strict_wins = paired_maxima.iter().filter(|(e, p)| e > p).count();
    let ties = paired_maxima.iter().filter(|(e, p)| e == p).count();
    let mut ext_sorted = ext_max;
    ext_sorted.sort_unstable();
    let mut prime_sorted = prime_max;
    prime_sorted.sort_unstable();
    Ok(SeparationReport {
        pairs,
        dominance_fraction: strict_wins as f64 / pairs as f64,
        strict_wins,
        ties,
        extension_p90: quantile(&ext_sorted, 0.90),
        prime_p90: quantile(&prime_sorted, 0.90),
        paired_maxima,
        extension,
        prime,
    })
}

/// Concatenates per-pair reports into one (seed_index = pair index).
fn merge_reports(base: &ExperimentConfig, reports: Vec<ExperimentReport>) -> ExperimentReport {
    let mut trials = Vec::new();
    let mut per_code_max = Vec::new();
    let mut per_code_rate = Vec::new();
    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    let mut wall = 0u64;
    let mut code_offset = 0usize;
    let (mut capacity, mut design_rate, mut realized_eps) = (0.0, 0.0, 0.0);
    let mut regime = String::new();
    for (pair, r) in reports.into_iter().enumerate() {
        capacity = r.capacity;
        design_rate = r.design_rate;
        realized_eps = r.realized_eps;
        regime = r.regime;
        wall += r.wall_clock_ms;
        for t in r.trials {
            trials.push(TrialRecord {
                seed_index: pair as u64,
                code_index: code_offset + t.code_index,
                ..t
            });
        }
        for (k, v) in r.histogram {
            *histogram.entry(k).or_insert(0) += v;
        }
        per_code_max.extend(r.per_code_max);
        per_code_rate.extend(r.per_code_realized_rate);
        code_offset += base.code_trials;
    }
    let mut sorted: Vec<u64> = trials.iter().map(|t| t.count).collect();
    sorted.sort_unstable();
    let total: u128 = sorted.iter().map(|&c| c as u128).sum();
    ExperimentReport {
        config: base.clone(),
        capacity,
        design_rate,
        realized_eps,
        regime,
        overall_max: per_code_max.iter().copied().max().unwrap_or(0),
        mean: total as f64 / sorted.len().max(1) as f64,
        p50: quantile(&sorted, 0.50),
        p90: quantile(&sorted, 0.90),
        p99: quantile(&sorted, 0.99),
        trials,
        per_code_max,
        per_code_realized_rate: per_code_rate,
        histogram,
        master_seed: base.master_seed,
        rng_scheme: RNG_SCHEME.to_string(),
        wall_clock_ms: wall,
    }
}

/// The theorem-shaped list-size prediction L = C_{params} / eps with a
/// user-supplied universal constant; reporting aid only, the paper does not
/// pin the constant.
pub fn predicted_list_bound(
    mode: ModeKind,
    q: u32,
    ell: u32,
    alpha_or_rho: f64,
    eps: f64,
    universal_c: f64,
) -> f64 {
    let qf = q as f64;
    let exponent = match mode {
        ModeKind::Erasures => {
            universal_c * qf.log2() * ((1.0 - alpha_or_rho) * ell as f64 + 1.0)
        }
        ModeKind::Errors => {
            let rho = alpha_or_rho;
            let margin = rho * (1.0 - ell as f64 / qf - rho);
            ell as f64 * (qf.log2() / margin).powf(universal_c)
        }
    };
    qf.powf(exponent) / eps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_erasure_cfg() -> ExperimentConfig {
        ExperimentConfig {
            p: 5,
            m: 1,
            ell: 2,
            n: 20,
            eps: 0.15,
            mode: ModeKind::Erasures,
            alpha: 0.0,
            rho: 0.0,
            sampler: SamplerKind::CenteredIntervals,
            code_trials: 20,
            rectangles_per_code: 200,
            master_seed: 414,
            enumeration_cap: DEFAULT_ENUM_CAP,
        }
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        // eps so large the rate rounds to dimension zero.
        let cfg = ExperimentConfig { eps: 0.56, ..base_erasure_cfg() };
        assert!(matches!(cfg.validate(), Err(ExperimentsError::ConfigInfeasible(_))));
        // errors mode with rho outside (0, 1 - l/q).
        let cfg = ExperimentConfig {
            mode: ModeKind::Errors,
            rho: 0.6,
            sampler: SamplerKind::UniformSubsets,
            ..base_erasure_cfg()
        };
        assert!(matches!(cfg.validate(), Err(ExperimentsError::ConfigInfeasible(_))));
        // subfield sampler over a prime field.
        let cfg = ExperimentConfig { sampler: SamplerKind::SubfieldCosets, ..base_erasure_cfg() };
        assert!(matches!(cfg.validate(), Err(ExperimentsError::ConfigInfeasible(_))));
    }

    #[test]
    fn erasure_run_counts_zero_containing_rectangles() {
        let cfg = base_erasure_cfg();
        let report = run_erasure_experiment(&cfg).unwrap();
        assert_eq!(report.trials.len(), 20 * 200);
        assert_eq!(
            report.histogram.values().sum::<u64>(),
            (cfg.code_trials * cfg.rectangles_per_code) as u64
        );
        assert_eq!(report.overall_max, report.per_code_max.iter().copied().max().unwrap());

        // Rectangles through the origin must always count the zero codeword.
        // At n = 20 those are vanishingly rare, so check the implication on a
        // short block length where they actually occur.
        let small = ExperimentConfig { n: 4, code_trials: 5, ..cfg.clone() };
        let small_report = run_erasure_experiment(&small).unwrap();
        let derived = small.validate().unwrap();
        let mut zero_rects = 0;
        for code_index in 0..small.code_trials {
            for rect_index in 0..small.rectangles_per_code {
                let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(
                    small.master_seed,
                    &[2, code_index as u64, rect_index as u64],
                ));
                let erased = sample_erasure_pattern(small.n, small.alpha, &mut rng);
                let sides: Vec<SubsetOfField> = erased
                    .iter()
                    .map(|&e| {
                        if e {
                            SubsetOfField::full(derived.field.clone())
                        } else {
                            sample_side(&derived.field, small.ell, small.sampler, None, &mut rng)
                        }
                    })
                    .collect();
                if sides.iter().all(|s| s.contains(FieldElement::ZERO)) {
                    zero_rects += 1;
                    let t =
                        &small_report.trials[code_index * small.rectangles_per_code + rect_index];
                    assert!(t.count >= 1);
                }
            }
        }
        assert!(zero_rects > 0, "expected some rectangles through the origin");
    }

    #[test]
    fn realized_rates_meet_design_rate() {
        // The sampled code's design rate is k_target/n (the rounding of
        // capacity - eps); the realized k/n can only exceed it.
        let cfg = base_erasure_cfg();
        let derived = cfg.validate().unwrap();
        let code_design_rate = derived.k_target as f64 / cfg.n as f64;
        let report = run_erasure_experiment(&cfg).unwrap();
        for &rate in &report.per_code_realized_rate {
            assert!(rate >= code_design_rate - 1e-12);
        }
        assert!((report.realized_eps - (report.capacity - code_design_rate)).abs() < 1e-12);
    }

    #[test]
    fn subfield_fast_path_matches_brute_force() {
        let cfg = ExperimentConfig {
            p: 2,
            m: 2,
            ell: 2,
            n: 10,
            eps: 0.125,
            alpha: 0.0,
            sampler: SamplerKind::SubfieldCosets,
            code_trials: 4,
            rectangles_per_code: 25,
            master_seed: 86,
            ..base_erasure_cfg()
        };
        let report = run_erasure_experiment(&cfg).unwrap();
        // Re-run the sampling by hand, counting through enumeration instead
        // of the linearized path.
        let derived = cfg.validate().unwrap();
        for code_index in 0..cfg.code_trials {
            let mut code_rng = ChaCha12Rng::seed_from_u64(derive_seed(
                cfg.master_seed,
                &[1, code_index as u64],
            ));
            let h = crate::codes::sample_parity_check(
                &derived.field,
                cfg.n,
                derived.parity_rows,
                &mut code_rng,
            );
            let code = LinearCode::from_parity_check(derived.field.clone(), h);
            for rect_index in 0..cfg.rectangles_per_code {
                let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(
                    cfg.master_seed,
                    &[2, code_index as u64, rect_index as u64],
                ));
                let erased = sample_erasure_pattern(cfg.n, cfg.alpha, &mut rng);
                let subfield = subfield_subset(&derived.field, 1);
                let sides: Vec<SubsetOfField> = erased
                    .iter()
                    .map(|&e| {
                        if e {
                            SubsetOfField::full(derived.field.clone())
                        } else {
                            let gamma =
                                derived.field.element(rng.gen_range(1..derived.field.order()));
                            subfield.dilate(gamma).unwrap()
                        }
                    })
                    .collect();
                let rect = Rectangle::new(sides).unwrap();
                let slow = code.count_in_rectangle(&rect, cfg.enumeration_cap).unwrap();
                let recorded =
                    report.trials[code_index * cfg.rectangles_per_code + rect_index].count;
                assert_eq!(recorded, slow);
            }
        }
    }

    #[test]
    fn error_run_dominates_center_rectangle_counts() {
        let cfg = ExperimentConfig {
            p: 3,
            m: 1,
            ell: 1,
            n: 15,
            eps: 0.1,
            mode: ModeKind::Errors,
            alpha: 0.0,
            rho: 0.2,
            sampler: SamplerKind::UniformSubsets,
            code_trials: 10,
            rectangles_per_code: 100,
            master_seed: 2718,
            enumeration_cap: DEFAULT_ENUM_CAP,
        };
        let report = run_error_experiment(&cfg).unwrap();
        assert_eq!(report.trials.len(), 1000);
        let derived = cfg.validate().unwrap();
        for code_index in 0..cfg.code_trials {
            let mut code_rng = ChaCha12Rng::seed_from_u64(derive_seed(
                cfg.master_seed,
                &[1, code_index as u64],
            ));
            let h = crate::codes::sample_parity_check(
                &derived.field,
                cfg.n,
                derived.parity_rows,
                &mut code_rng,
            );
            let code = LinearCode::from_parity_check(derived.field.clone(), h);
            for rect_index in 0..10 {
                let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(
                    cfg.master_seed,
                    &[2, code_index as u64, rect_index as u64],
                ));
                let sides: Vec<SubsetOfField> = (0..cfg.n)
                    .map(|_| sample_side(&derived.field, cfg.ell, cfg.sampler, None, &mut rng))
                    .collect();
                let rect = Rectangle::new(sides).unwrap();
                let base = code.count_in_rectangle(&rect, cfg.enumeration_cap).unwrap();
                let recorded = report.trials[code_index * 100 + rect_index].count;
                assert!(recorded >= base);
            }
        }
    }

    #[test]
    fn reports_are_deterministic_across_thread_counts() {
        let cfg =
            ExperimentConfig { code_trials: 5, rectangles_per_code: 40, ..base_erasure_cfg() };
        let run_in_pool = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run_erasure_experiment(&cfg).unwrap().to_json())
        };
        let single = run_in_pool(1);
        let eight = run_in_pool(8);
        assert_eq!(single, eight);
        assert_eq!(single, run_in_pool(1));
    }

    #[test]
    fn csv_and_json_carry_the_same_trials() {
        let cfg =
            ExperimentConfig { code_trials: 3, rectangles_per_code: 10, ..base_erasure_cfg() };
        let report = run_erasure_experiment(&cfg).unwrap();
        // Wall clock is excluded from serialization, so compare the
        // serialized forms rather than the structs.
        let json_round: ExperimentReport = ExperimentReport::from_json(&report.to_json()).unwrap();
        assert_eq!(json_round.to_json(), report.to_json());
        assert_eq!(json_round.trials, report.trials);
        let csv_trials = ExperimentReport::trials_from_csv(&report.to_csv()).unwrap();
        assert_eq!(csv_trials, report.trials);
    }

    #[test]
    fn lower_rate_gives_stochastically_smaller_counts() {
        // One-sided sign test over paired per-code means at two gaps.
        let base = ExperimentConfig {
            p: 3,
            m: 1,
            ell: 2,
            n: 10,
            eps: 0.0,
            mode: ModeKind::Erasures,
            alpha: 0.0,
            rho: 0.0,
            sampler: SamplerKind::UniformSubsets,
            code_trials: 30,
            rectangles_per_code: 100,
            master_seed: 909,
            enumeration_cap: DEFAULT_ENUM_CAP,
        };
        let high_rate = ExperimentConfig { eps: 0.1, ..base.clone() };
        let low_rate = ExperimentConfig { eps: 0.2, ..base };
        let r1 = run_erasure_experiment(&high_rate).unwrap();
        let r2 = run_erasure_experiment(&low_rate).unwrap();
        let mean_per_code = |r: &ExperimentReport| -> Vec<f64> {
            (0..30)
                .map(|c| {
                    let counts: Vec<u64> =
                        r.trials.iter().filter(|t| t.code_index == c).map(|t| t.count).collect();
                    counts.iter().sum::<u64>() as f64 / counts.len() as f64
                })
                .collect()
        };
        let m1 = mean_per_code(&r1);
        let m2 = mean_per_code(&r2);
        let wins = m1.iter().zip(&m2).filter(|(a, b)| a > b).count();
        let decided = m1.iter().zip(&m2).filter(|(a, b)| a != b).count();
        // One-sided binomial tail Pr[Bin(decided, 1/2) >= wins].
        let mut tail = 0.0f64;
        for k in wins..=decided {
            let mut logc = 0.0f64;
            for i in 0..k {
                logc += ((decided - i) as f64).ln() - ((i + 1) as f64).ln();
            }
            tail += (logc - decided as f64 * 2f64.ln()).exp();
        }
        assert!(tail < 0.05, "sign test not significant: wins={wins}/{decided}, p={tail}");
    }

    #[test]
    fn separation_null_configuration_is_fair() {
        // Same field on both sides: per-side seed derivation differs, so
        // wins among tie-free pairs should look like a fair coin (3 sigma).
        let cfg = ExperimentConfig {
            p: 2,
            m: 2,
            ell: 2,
            n: 16,
            eps: 0.125,
            mode: ModeKind::Erasures,
            alpha: 0.0,
            rho: 0.0,
            sampler: SamplerKind::SubfieldCosets,
            code_trials: 1,
            rectangles_per_code: 60,
            master_seed: 5151,
            enumeration_cap: DEFAULT_ENUM_CAP,
        };
        let pairs = 60;
        let run_side = |side: u64| -> Vec<u64> {
            (0..pairs)
                .map(|pair| {
                    let sub = ExperimentConfig {
                        master_seed: derive_seed(cfg.master_seed, &[3, pair as u64, side]),
                        ..cfg.clone()
                    };
                    run_erasure_experiment(&sub).unwrap().overall_max
                })
                .collect()
        };
        let a = run_side(0);
        let b = run_side(1);
        let wins = a.iter().zip(&b).filter(|(x, y)| x > y).count() as f64;
        let decided = a.iter().zip(&b).filter(|(x, y)| x != y).count() as f64;
        assert!(decided > 0.0);
        let sigma = (decided * 0.25).sqrt();
        assert!((wins - decided / 2.0).abs() <= 3.0 * sigma, "wins={wins}, decided={decided}");
    }

    #[test]
    fn separation_rejects_zero_pairs() {
        let cfg = ExperimentConfig {
            p: 2,
            m: 2,
            sampler: SamplerKind::SubfieldCosets,
            ..base_erasure_cfg()
        };
        assert!(matches!(run_separation(&cfg, 0), Err(ExperimentsError::ConfigInfeasible(_))));
    }

    #[test]
    fn predicted_bound_scales_inversely_with_eps() {
        let at_one = predicted_list_bound(ModeKind::Erasures, 5, 2, 0.2, 1.0, 1.0);
        let at_half = predicted_list_bound(ModeKind::Erasures, 5, 2, 0.2, 0.5, 1.0);
        assert!((at_half / at_one - 2.0).abs() < 1e-12);
        let e = predicted_list_bound(ModeKind::Errors, 5, 2, 0.3, 1.0, 1.0);
        assert!(e.is_finite() && e > 0.0);
    }
}
