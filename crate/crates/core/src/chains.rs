//! c-increasing chains: verification, deterministic greedy extraction, exact
//! maximum-chain search for small instances, and the shift search that pairs
//! the existential chain lemma with a constructive extractor.

use crate::gf::{FieldElement, FieldSpec, FieldVector};
use crate::info::log_q;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChainsError {
    #[error("set must be nonempty")]
    EmptySet,
    #[error("vectors have mixed lengths: {0} vs {1}")]
    MixedDimensions(usize, usize),
    #[error("ambient dimension {0} exceeds the supported maximum 64")]
    DimensionTooLarge(usize),
    #[error("sampled shift search exhausted its budget of {budget} without meeting the bound (best length {best_len}, needed {needed})")]
    BudgetExceeded { budget: usize, best_len: usize, needed: usize },
}

/// An ordered list of vectors where each contributes at least c fresh
/// support coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    c: usize,
    vectors: Vec<FieldVector>,
}

impl Chain {
    pub fn new(c: usize, vectors: Vec<FieldVector>) -> Chain {
        debug_assert!(is_c_increasing(&vectors, c));
        Chain { c, vectors }
    }

    pub fn empty(c: usize) -> Chain {
        Chain { c, vectors: Vec::new() }
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[FieldVector] {
        &self.vectors
    }
}

/// True iff every vector adds at least c coordinates of fresh support.
/// The property is order-sensitive.
pub fn is_c_increasing(vectors: &[FieldVector], c: usize) -> bool {
    let mut covered = 0u64;
    for v in vectors {
        assert!(v.len() <= 64, "supported ambient dimension is at most 64");
        let mask = v.support_mask();
        if ((mask & !covered).count_ones() as usize) < c {
            return false;
        }
        covered |= mask;
    }
    true
}

/// Greedy extractor: repeatedly take the vector with the largest fresh
/// support (ties broken by lexicographic vector order) while the gain stays
/// at least c. Deterministic; may return an empty chain.
pub fn greedy_chain(set: &[FieldVector], c: usize) -> Chain {
    let mut candidates: Vec<&FieldVector> = set.iter().collect();
    candidates.sort_unstable();
    candidates.dedup();
    let mut covered = 0u64;
    let mut chain = Vec::new();
    loop {
        let mut best: Option<(usize, usize)> = None; // (gain, index)
        for (i, v) in candidates.iter().enumerate() {
            let gain = (v.support_mask() & !covered).count_ones() as usize;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, i));
            }
        }
        match best {
            Some((gain, i)) if gain >= c => {
                let v = candidates.remove(i);
                covered |= v.support_mask();
                chain.push(v.clone());
            }
            _ => break,
        }
    }
    Chain { c, vectors: chain }
}

/// Exact maximum chain length via depth-first search with an upper-bound
/// prune. Intended for small sets; `node_budget` caps the search
/// deterministically.
pub fn exact_max_chain(set: &[FieldVector], c: usize, node_budget: u64) -> Chain {
    let mut candidates: Vec<&FieldVector> = set.iter().collect();
    candidates.sort_unstable();
    candidates.dedup();
    let dim = candidates.first().map_or(0, |v| v.len());
    let masks: Vec<u64> = candidates.iter().map(|v| v.support_mask()).collect();
    let mut best: Vec<usize> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut nodes = 0u64;

    fn dfs(
        masks: &[u64],
        c: usize,
        dim: usize,
        covered: u64,
        current: &mut Vec<usize>,
        best: &mut Vec<usize>,
        nodes: &mut u64,
        budget: u64,
    ) {
        if current.len() > best.len() {
            *best = current.clone();
        }
        if *nodes >= budget {
            return;
        }
        // Even with perfectly disjoint fresh support the chain can grow by
        // at most (free coordinates)/c more steps.
        let free = dim - covered.count_ones() as usize;
        if current.len() + free / c <= best.len() {
            return;
        }
        for (i, &mask) in masks.iter().enumerate() {
            if current.contains(&i) {
                continue;
            }
            if ((mask & !covered).count_ones() as usize) < c {
                continue;
            }
            *nodes += 1;
            current.push(i);
            dfs(masks, c, dim, covered | mask, current, best, nodes, budget);
            current.pop();
        }
    }

    dfs(&masks, c, dim, 0, &mut current, &mut best, &mut nodes, node_budget);
    Chain { c, vectors: best.into_iter().map(|i| candidates[i].clone()).collect() }
}

/// Controls for the shift search.
#[derive(Clone, Debug)]
pub struct ShiftSearchConfig {
    /// Scan every shift when q^dim is at most this.
    pub exhaustive_limit: u64,
    /// Number of sampled shifts otherwise.
    pub sample_budget: usize,
    /// Seed for the sampled mode.
    pub seed: u64,
    /// Escalate from greedy to exact search when greedy misses the bound.
    pub escalate: bool,
    /// Node budget per exact search.
    pub escalation_node_budget: u64,
}

impl Default for ShiftSearchConfig {
    fn default() -> Self {
        ShiftSearchConfig {
            exhaustive_limit: 1 << 20,
            sample_budget: 4096,
            seed: 0,
            escalate: true,
            escalation_node_budget: 1 << 20,
        }
    }
}

/// Outcome of a shift search: the best chain found in some translate S + w,
/// together with the guaranteed length for |S| = L in dimension `dim`,
/// (1/c) log_q(L/2) - (1 - 1/c) log_q((q-1) dim).
#[derive(Clone, Debug)]
pub struct ChainCertificate {
    pub shift: FieldVector,
    pub chain: Chain,
    pub guaranteed_length: f64,
    /// ceil of the guaranteed length, clamped at zero.
    pub needed_length: usize,
    pub lemma_satisfied: bool,
    /// Best length achieved by greedy alone, for comparison with the exact
    /// escalation (the two extractors need not agree).
    pub greedy_length: usize,
    pub exact_length: Option<usize>,
    pub shifts_scanned: u64,
    pub exhaustive: bool,
}

fn shift_vector(field: &FieldSpec, dim: usize, mut t: u64) -> FieldVector {
    let q = field.order() as u64;
    let mut v = Vec::with_capacity(dim);
    for _ in 0..dim {
        v.push(FieldElement((t % q) as u32));
        t /= q;
    }
    FieldVector(v)
}

fn translate_set(field: &FieldSpec, set: &[FieldVector], w: &FieldVector) -> Vec<FieldVector> {
    set.iter().map(|v| field.vec_add(v, w).expect("equal lengths")).collect()
}

/// Scans shifts w and extracts the longest chain found in S + w. Exhaustive
/// when q^dim is within the configured limit, sampled otherwise; sampled
/// searches that never meet the bound report `BudgetExceeded`.
pub fn find_shift_chain(
    field: &FieldSpec,
    set: &[FieldVector],
    c: usize,
    cfg: &ShiftSearchConfig,
) -> Result<ChainCertificate, ChainsError> {
    let mut dedup: Vec<FieldVector> = set.to_vec();
    dedup.sort_unstable();
    dedup.dedup();
    let first = dedup.first().ok_or(ChainsError::EmptySet)?;
    let dim = first.len();
    if dim > 64 {
        return Err(ChainsError::DimensionTooLarge(dim));
    }
    for v in &dedup {
        if v.len() != dim {
            return Err(ChainsError::MixedDimensions(dim, v.len()));
        }
    }
    let q = field.order();
    let len = dedup.len() as f64;
    let guaranteed = (1.0 / c as f64) * log_q(q, len / 2.0)
        - (1.0 - 1.0 / c as f64) * log_q(q, (q as f64 - 1.0) * dim as f64);
    let needed =
        if guaranteed <= 0.0 { 0 } else { (guaranteed - 1e-12).ceil().max(0.0) as usize };

    let space = (q as u64).checked_pow(dim as u32);
    let exhaustive = space.is_some_and(|s| s <= cfg.exhaustive_limit);
    let shift_ids: Vec<u64> = if exhaustive {
        (0..space.unwrap()).collect()
    } else {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(cfg.seed);
        (0..cfg.sample_budget).map(|_| rng.gen_range(0..space.unwrap_or(u64::MAX))).collect()
    };

    // Longest greedy chain; ties resolved toward the earliest scanned shift.
    let best_greedy = shift_ids
        .par_iter()
        .map(|&t| {
            let w = shift_vector(field, dim, t);
            let len = greedy_chain(&translate_set(field, &dedup, &w), c).len();
            (len, t)
        })
        .reduce(
            || (0usize, u64::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );

    let (greedy_len, mut best_id) = best_greedy;
    let mut exact_length = None;

    if greedy_len < needed && cfg.escalate {
        let best_exact = shift_ids
            .par_iter()
            .map(|&t| {
                let w = shift_vector(field, dim, t);
                let len = exact_max_chain(
                    &translate_set(field, &dedup, &w),
                    c,
                    cfg.escalation_node_budget,
                )
                .len();
                (len, t)
            })
            .reduce(
                || (0usize, u64::MAX),
                |a, b| {
                    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                        b
                    } else {
                        a
                    }
                },
            );
        if best_exact.0 > greedy_len {
            best_id = best_exact.1;
        }
        exact_length = Some(best_exact.0);
    }

    // No scanned shifts (zero budget) means no chain was found at all.
    let (shift, chain) = if best_id == u64::MAX {
        (FieldVector::zero(dim), Chain::empty(c))
    } else {
        let shift = shift_vector(field, dim, best_id);
        let translated = translate_set(field, &dedup, &shift);
        let chain = if exact_length.is_some_and(|e| e > greedy_len) {
            exact_max_chain(&translated, c, cfg.escalation_node_budget)
        } else {
            greedy_chain(&translated, c)
        };
        (shift, chain)
    };
    let satisfied = chain.len() >= needed;

    let cert = ChainCertificate {
        shift,
        chain,
        guaranteed_length: guaranteed,
        needed_length: needed,
        lemma_satisfied: satisfied,
        greedy_length: greedy_len,
        exact_length,
        shifts_scanned: shift_ids.len() as u64,
        exhaustive,
    };
    if !exhaustive && !satisfied {
        return Err(ChainsError::BudgetExceeded {
            budget: cfg.sample_budget,
            best_len: cert.chain.len(),
            needed,
        });
    }
    Ok(cert)
}
