//! Random linear codes in parity-check form: sampling, membership,
//! codeword enumeration by a mixed-radix Gray walk, exact intersection
//! counts with rectangles and list-recovery balls, and a linearized counter
//! for multiplicative subfield-coset rectangles that avoids enumeration.

use crate::balls::{ListRecoveryBall, Rectangle};
use crate::gf::{FieldElement, FieldMatrix, FieldSpec, FieldVector, GfError};
use rand::Rng;
use std::collections::HashMap;

/// Default cap on enumerated sets in the counting operations.
pub const DEFAULT_ENUM_CAP: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodesError {
    #[error("enumeration of size {size} exceeds cap {cap}")]
    TooLarge { size: String, cap: u64 },
    #[error("operation requires an extension field (degree > 1)")]
    NotExtensionField,
    #[error("subfield degree {s} does not divide extension degree {m}")]
    BadDegree { s: u32, m: u32 },
    #[error("coset multiplier must be nonzero")]
    ZeroMultiplier,
    #[error("expected {0} coordinates, got {1}")]
    WrongLength(usize, usize),
    #[error("count overflows the 128-bit accumulator")]
    Overflow,
    #[error(transparent)]
    Gf(#[from] GfError),
}

/// One side of a coset rectangle: either gamma * F_{p^s} or the whole field
/// (an erased coordinate).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CosetSide {
    Coset(FieldElement),
    Full,
}

/// A linear code C = {x : Hx = 0} with the generator basis derived from H.
#[derive(Clone, Debug)]
pub struct LinearCode {
    field: FieldSpec,
    n: usize,
    parity_check: FieldMatrix,
    generator_basis: Vec<FieldVector>,
}

/// Uniform parity-check sample with `rows` rows.
pub fn sample_parity_check<R: Rng>(
    field: &FieldSpec,
    n: usize,
    rows: usize,
    rng: &mut R,
) -> FieldMatrix {
    let mut h = FieldMatrix::zero(rows, n);
    for r in 0..rows {
        for c in 0..n {
            h.set(r, c, field.element(rng.gen_range(0..field.order())));
        }
    }
    h
}

impl LinearCode {
    /// Samples a random linear code of design rate R: the parity-check
    /// matrix gets round((1-R)n) i.i.d. uniform rows.
    pub fn sample_rlc<R: Rng>(field: &FieldSpec, n: usize, rate: f64, rng: &mut R) -> LinearCode {
        assert!((0.0..=1.0).contains(&rate), "rate must lie in [0,1]");
        let rows = ((1.0 - rate) * n as f64).round().clamp(0.0, n as f64) as usize;
        let h = sample_parity_check(field, n, rows, rng);
        Self::from_parity_check(field.clone(), h)
    }

    pub fn from_parity_check(field: FieldSpec, parity_check: FieldMatrix) -> LinearCode {
        let n = parity_check.cols();
        let generator_basis = parity_check.nullspace_basis(&field);
        LinearCode { field, n, parity_check, generator_basis }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    /// k = n - rank(H).
    pub fn dimension(&self) -> usize {
        self.generator_basis.len()
    }

    pub fn parity_check(&self) -> &FieldMatrix {
        &self.parity_check
    }

    pub fn generator_basis(&self) -> &[FieldVector] {
        &self.generator_basis
    }

    pub fn design_rows(&self) -> usize {
        self.parity_check.rows()
    }

    /// (n - rows)/n; the realized rate k/n can only exceed this.
    pub fn design_rate(&self) -> f64 {
        (self.n - self.parity_check.rows().min(self.n)) as f64 / self.n as f64
    }

    pub fn realized_rate(&self) -> f64 {
        self.dimension() as f64 / self.n as f64
    }

    pub fn contains(&self, x: &FieldVector) -> bool {
        x.len() == self.n
            && self
                .parity_check
                .mul_vector(&self.field, x.as_slice())
                .iter()
                .all(|e| e.is_zero())
    }

    fn codeword_space(&self) -> Option<u128> {
        (self.field.order() as u128).checked_pow(self.dimension() as u32)
    }

    /// Visits all q^k codewords. Consecutive messages differ in one digit
    /// (mixed-radix Gray order), so each step is one scaled basis-vector
    /// addition.
    pub fn for_each_codeword(&self, mut visit: impl FnMut(&[FieldElement])) {
        let k = self.dimension();
        let q = self.field.order();
        let mut cw = vec![FieldElement::ZERO; self.n];
        visit(&cw);
        if k == 0 {
            return;
        }
        let mut digits = vec![0u32; k];
        let mut dirs = vec![1i64; k];
        loop {
            let mut j = 0;
            loop {
                if j == k {
                    return;
                }
                let next = digits[j] as i64 + dirs[j];
                if next < 0 || next >= q as i64 {
                    dirs[j] = -dirs[j];
                    j += 1;
                } else {
                    break;
                }
            }
            let old = digits[j];
            let new = (digits[j] as i64 + dirs[j]) as u32;
            digits[j] = new;
            let delta = self.field.sub(FieldElement(new), FieldElement(old));
            self.field.vec_add_scaled(&mut cw, delta, self.generator_basis[j].as_slice());
            visit(&cw);
        }
    }

    /// Exact |C ∩ rect|. Picks the cheaper of codeword enumeration and
    /// meet-in-the-middle rectangle enumeration; errors when
    /// min(q^k, prod |T_i|) exceeds the cap.
    pub fn count_in_rectangle(&self, rect: &Rectangle, cap: u64) -> Result<u64, CodesError> {
        if rect.n() != self.n {
            return Err(CodesError::WrongLength(self.n, rect.n()));
        }
        let cw = self.codeword_space();
        let rp: Option<u128> =
            rect.sides().iter().try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128));
        let smallest = match (cw, rp) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => u128::MAX,
        };
        if smallest > cap as u128 {
            return Err(CodesError::TooLarge { size: smallest.to_string(), cap });
        }
        // Meet-in-the-middle halves the rectangle exponent, so compare
        // against the codeword count on that scale.
        let mitm_cost = self.mitm_half_sizes(rect).map(|(l, r)| l + r);
        match (cw, mitm_cost) {
            (Some(c), Some(m)) if c <= m => Ok(self.count_via_codewords(rect)),
            (Some(_), None) => Ok(self.count_via_codewords(rect)),
            (None, None) => Err(CodesError::Overflow),
            _ => self.count_via_mitm(rect),
        }
    }

    fn mitm_half_sizes(&self, rect: &Rectangle) -> Option<(u128, u128)> {
        let (left, right) = split_coordinates(rect);
        let prod = |ids: &[usize]| {
            ids.iter().try_fold(1u128, |acc, &i| acc.checked_mul(rect.sides()[i].len() as u128))
        };
        Some((prod(&left)?, prod(&right)?))
    }

    pub(crate) fn count_via_codewords(&self, rect: &Rectangle) -> u64 {
        let member: Vec<Vec<bool>> = rect.sides().iter().map(|s| s.membership()).collect();
        let mut count = 0u64;
        self.for_each_codeword(|cw| {
            if cw.iter().zip(&member).all(|(e, m)| m[e.index() as usize]) {
                count += 1;
            }
        });
        count
    }

    /// Plain rectangle-side enumeration; used as a cross-check oracle.
    pub(crate) fn count_via_rect_direct(&self, rect: &Rectangle) -> u64 {
        let coords: Vec<usize> = (0..self.n).collect();
        let mut count = 0u64;
        self.walk_syndromes(rect, &coords, |syn| {
            if syn.iter().all(|e| e.is_zero()) {
                count += 1;
            }
        });
        count
    }

    /// Meet-in-the-middle: hash left-half syndromes, stream the right half.
    pub(crate) fn count_via_mitm(&self, rect: &Rectangle) -> Result<u64, CodesError> {
        let (left, right) = split_coordinates(rect);
        if left.is_empty() || right.is_empty() {
            return Ok(self.count_via_rect_direct(rect));
        }
        let rows = self.parity_check.rows();
        if rows == 0 {
            // No constraints: every rectangle point is a codeword.
            let total: u128 = rect
                .sides()
                .iter()
                .try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128))
                .ok_or(CodesError::Overflow)?;
            return u64::try_from(total).map_err(|_| CodesError::Overflow);
        }
        let bits = 32 - (self.field.order() - 1).leading_zeros();
        if rows as u32 * bits > 128 {
            return Ok(self.count_via_rect_direct(rect));
        }
        let pack = |syn: &[FieldElement]| -> u128 {
            syn.iter()
                .enumerate()
                .fold(0u128, |acc, (r, e)| acc | ((e.index() as u128) << (r as u32 * bits)))
        };
        let mut table: HashMap<u128, u64> = HashMap::new();
        self.walk_syndromes(rect, &left, |syn| {
            *table.entry(pack(syn)).or_insert(0) += 1;
        });
        let f = &self.field;
        let mut count = 0u64;
        let mut negated = vec![FieldElement::ZERO; rows];
        self.walk_syndromes(rect, &right, |syn| {
            for (d, &s) in negated.iter_mut().zip(syn.iter()) {
                *d = f.neg(s);
            }
            if let Some(&c) = table.get(&pack(&negated)) {
                count += c;
            }
        });
        Ok(count)
    }

    /// Walks the product of the given coordinates' sides (odometer order),
    /// maintaining the partial syndrome sum_{i in coords} H_i x_i
    /// incrementally.
    fn walk_syndromes(
        &self,
        rect: &Rectangle,
        coords: &[usize],
        mut visit: impl FnMut(&[FieldElement]),
    ) {
        let f = &self.field;
        let rows = self.parity_check.rows();
        let sides: Vec<&[FieldElement]> =
            coords.iter().map(|&i| rect.sides()[i].elements()).collect();
        let mut digit = vec![0usize; coords.len()];
        let mut syn = vec![FieldElement::ZERO; rows];
        for (pos, &i) in coords.iter().enumerate() {
            let e = sides[pos][0];
            if !e.is_zero() {
                for (r, s) in syn.iter_mut().enumerate() {
                    *s = f.add(*s, f.mul(self.parity_check.get(r, i), e));
                }
            }
        }
        loop {
            visit(&syn);
            let mut pos = 0;
            loop {
                if pos == coords.len() {
                    return;
                }
                let i = coords[pos];
                let side = sides[pos];
                let old = side[digit[pos]];
                if digit[pos] + 1 < side.len() {
                    digit[pos] += 1;
                    let delta = f.sub(side[digit[pos]], old);
                    for (r, s) in syn.iter_mut().enumerate() {
                        *s = f.add(*s, f.mul(self.parity_check.get(r, i), delta));
                    }
                    break;
                }
                digit[pos] = 0;
                let delta = f.sub(side[0], old);
                if !delta.is_zero() {
                    for (r, s) in syn.iter_mut().enumerate() {
                        *s = f.add(*s, f.mul(self.parity_check.get(r, i), delta));
                    }
                }
                pos += 1;
            }
        }
    }

    /// Exact |C ∩ B| by codeword enumeration; requires q^k within the cap.
    pub fn count_in_ball(&self, ball: &ListRecoveryBall, cap: u64) -> Result<u64, CodesError> {
        if ball.center().n() != self.n {
            return Err(CodesError::WrongLength(self.n, ball.center().n()));
        }
        let space = self.codeword_space().ok_or(CodesError::Overflow)?;
        if space > cap as u128 {
            return Err(CodesError::TooLarge { size: space.to_string(), cap });
        }
        let member: Vec<Vec<bool>> = ball.center().sides().iter().map(|s| s.membership()).collect();
        let radius = ball.radius_count();
        let mut count = 0u64;
        self.for_each_codeword(|cw| {
            let mut escapes = 0usize;
            for (e, m) in cw.iter().zip(&member) {
                if !m[e.index() as usize] {
                    escapes += 1;
                    if escapes > radius {
                        break;
                    }
                }
            }
            if escapes <= radius {
                count += 1;
            }
        });
        Ok(count)
    }

    /// Exact count of codewords with x_i in gamma_i F_{p^s} for every i,
    /// via linearization over F_p: substitute x_i = gamma_i b_i and count
    /// base-field solutions. No enumeration; the count is p^nullity.
    pub fn count_in_subfield_coset_rectangle(
        &self,
        multipliers: &[FieldElement],
        s: u32,
    ) -> Result<u128, CodesError> {
        if multipliers.len() != self.n {
            return Err(CodesError::WrongLength(self.n, multipliers.len()));
        }
        let sides: Vec<CosetSide> = multipliers.iter().map(|&g| CosetSide::Coset(g)).collect();
        self.count_in_coset_rectangle(&sides, s)
    }

    /// Coset counter that also admits erased (full-field) coordinates.
    pub fn count_in_coset_rectangle(
        &self,
        sides: &[CosetSide],
        s: u32,
    ) -> Result<u128, CodesError> {
        let m = self.field.degree();
        if m == 1 {
            return Err(CodesError::NotExtensionField);
        }
        if s == 0 || m % s != 0 {
            return Err(CodesError::BadDegree { s, m });
        }
        if sides.len() != self.n {
            return Err(CodesError::WrongLength(self.n, sides.len()));
        }
        for side in sides {
            if let CosetSide::Coset(g) = side {
                if g.is_zero() {
                    return Err(CodesError::ZeroMultiplier);
                }
            }
        }
        let p = self.field.characteristic();
        let prime = FieldSpec::prime(p as u64)?;
        let sub_basis = self.subfield_basis(s);
        debug_assert_eq!(sub_basis.len(), s as usize);
        let full_basis: Vec<FieldElement> =
            (0..m).map(|t| self.field.element(p.pow(t))).collect();

        // One F_p column per base-field unknown; m rows per parity row.
        let rows_p = self.parity_check.rows() * m as usize;
        let mut columns: Vec<Vec<FieldElement>> = Vec::new();
        for (i, side) in sides.iter().enumerate() {
            let basis: Vec<FieldElement> = match side {
                CosetSide::Coset(g) => {
                    sub_basis.iter().map(|&b| self.field.mul(*g, b)).collect()
                }
                CosetSide::Full => full_basis.clone(),
            };
            for b in basis {
                let mut col = Vec::with_capacity(rows_p);
                for j in 0..self.parity_check.rows() {
                    let u = self.field.mul(self.parity_check.get(j, i), b);
                    let mut idx = u.index();
                    for _ in 0..m {
                        col.push(FieldElement(idx % p));
                        idx /= p;
                    }
                }
                columns.push(col);
            }
        }
        let cols_p = columns.len();
        let mut system = FieldMatrix::zero(rows_p, cols_p);
        for (c, col) in columns.iter().enumerate() {
            for (r, &v) in col.iter().enumerate() {
                system.set(r, c, v);
            }
        }
        let nullity = cols_p - system.rank(&prime);
        let mut count: u128 = 1;
        for _ in 0..nullity {
            count = count.checked_mul(p as u128).ok_or(CodesError::Overflow)?;
        }
        Ok(count)
    }

    /// Deterministic F_p-basis of the fixed field of the s-th Frobenius
    /// power, {x : x^(p^s) = x}.
    fn subfield_basis(&self, s: u32) -> Vec<FieldElement> {
        let p = self.field.characteristic();
        let m = self.field.degree();
        if s == m {
            return (0..m).map(|t| self.field.element(p.pow(t))).collect();
        }
        let prime = FieldSpec::prime(p as u64).expect("characteristic is prime");
        let frob = (p as u64).pow(s);
        let mut basis: Vec<FieldElement> = Vec::with_capacity(s as usize);
        let mut rows: Vec<Vec<FieldElement>> = Vec::new();
        for x in self.field.nonzero_elements() {
            if self.field.pow(x, frob) != x {
                continue;
            }
            let digits: Vec<FieldElement> = {
                let mut idx = x.index();
                (0..m)
                    .map(|_| {
                        let d = FieldElement(idx % p);
                        idx /= p;
                        d
                    })
                    .collect()
            };
            rows.push(digits);
            let mat = FieldMatrix::from_rows(rows.clone()).expect("rectangular");
            if mat.rank(&prime) == rows.len() {
                basis.push(x);
                if basis.len() == s as usize {
                    break;
                }
            } else {
                rows.pop();
            }
        }
        basis
    }
}

/// Deterministic near-balanced split of rectangle coordinates by log side
/// size, for meet-in-the-middle counting.
fn split_coordinates(rect: &Rectangle) -> (Vec<usize>, Vec<usize>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    let (mut log_l, mut log_r) = (0f64, 0f64);
    for (i, side) in rect.sides().iter().enumerate() {
        let w = (side.len() as f64).ln();
        if log_l <= log_r {
            left.push(i);
            log_l += w;
        } else {
            right.push(i);
            log_r += w;
        }
    }
    (left, right)
}

/// Monte Carlo check of the span containment probability.
#[derive(Clone, Debug)]
pub struct SpanProbabilityReport {
    pub predicted: f64,
    pub empirical: f64,
    pub successes: u64,
    pub trials: u64,
    pub rows: usize,
    pub span_dim: usize,
}

impl SpanProbabilityReport {
    pub fn three_sigma(&self) -> f64 {
        3.0 * (self.predicted * (1.0 - self.predicted) / self.trials as f64).sqrt()
    }

    pub fn within_three_sigma(&self) -> bool {
        (self.empirical - self.predicted).abs() <= self.three_sigma()
    }
}

/// Samples `trials` parity checks and measures how often all the given
/// vectors lie in the code; the prediction is q^(-rows * dim Span).
pub fn span_probability_check(
    field: &FieldSpec,
    n: usize,
    rate: f64,
    vectors: &[FieldVector],
    trials: u64,
    seed: u64,
) -> Result<SpanProbabilityReport, GfError> {
    use rand::SeedableRng;
    for v in vectors {
        if v.len() != n {
            return Err(GfError::LengthMismatch(n, v.len()));
        }
    }
    let dim = crate::gf::span_dimension(field, vectors)?;
    let rows = ((1.0 - rate) * n as f64).round().clamp(0.0, n as f64) as usize;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut successes = 0u64;
    for _ in 0..trials {
        let h = sample_parity_check(field, n, rows, &mut rng);
        let ok = vectors
            .iter()
            .all(|v| h.mul_vector(field, v.as_slice()).iter().all(|e| e.is_zero()));
        if ok {
            successes += 1;
        }
    }
    let predicted = (field.order() as f64).powi(-((rows * dim) as i32));
    Ok(SpanProbabilityReport {
        predicted,
        empirical: successes as f64 / trials as f64,
        successes,
        trials,
        rows,
        span_dim: dim,
    })
}
