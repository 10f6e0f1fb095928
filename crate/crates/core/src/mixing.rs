//! Worst-case mixing of subsets of F_q and of product rectangles.
//!
//! All probabilities here are exact rationals over unbounded integers, so
//! the tightness checks against the extremal-interval formula can assert
//! rational equality rather than float closeness.

use crate::balls::Rectangle;
use crate::gf::{FieldElement, FieldSpec, FieldVector};
use crate::info::log_q;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MixingError {
    #[error("subsets live over different fields")]
    FieldMismatch,
    #[error("{0} is not an odd prime")]
    NotPrime(u64),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("subset must be nonempty")]
    EmptySubset,
    #[error("subset has a duplicate element")]
    DuplicateElement,
    #[error("element {0} out of range for field order {1}")]
    ElementOutOfRange(u32, u32),
    #[error("multiplier must be nonzero")]
    ZeroMultiplier,
}

/// A nonempty subset of F_q, stored strictly sorted by element index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetOfField {
    field: FieldSpec,
    elements: Vec<FieldElement>,
}

impl SubsetOfField {
    pub fn new(field: FieldSpec, mut elements: Vec<FieldElement>) -> Result<Self, MixingError> {
        if elements.is_empty() {
            return Err(MixingError::EmptySubset);
        }
        elements.sort_unstable();
        for w in elements.windows(2) {
            if w[0] == w[1] {
                return Err(MixingError::DuplicateElement);
            }
        }
        if let Some(&last) = elements.last() {
            if last.index() >= field.order() {
                return Err(MixingError::ElementOutOfRange(last.index(), field.order()));
            }
        }
        Ok(SubsetOfField { field, elements })
    }

    pub fn from_indices(field: FieldSpec, idx: &[u32]) -> Result<Self, MixingError> {
        Self::new(field, idx.iter().map(|&i| FieldElement(i)).collect())
    }

    /// The whole field as a subset.
    pub fn full(field: FieldSpec) -> Self {
        let elements = field.elements().collect();
        SubsetOfField { field, elements }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn elements(&self) -> &[FieldElement] {
        &self.elements
    }

    pub fn contains(&self, e: FieldElement) -> bool {
        self.elements.binary_search(&e).is_ok()
    }

    /// Dense membership table indexed by element index.
    pub fn membership(&self) -> Vec<bool> {
        let mut t = vec![false; self.field.order() as usize];
        for e in &self.elements {
            t[e.index() as usize] = true;
        }
        t
    }

    /// F_q minus this subset; errors when the subset is the whole field.
    pub fn complement(&self) -> Result<SubsetOfField, MixingError> {
        if self.len() == self.field.order() as usize {
            return Err(MixingError::EmptySubset);
        }
        let member = self.membership();
        let elements =
            self.field.elements().filter(|e| !member[e.index() as usize]).collect();
        Ok(SubsetOfField { field: self.field.clone(), elements })
    }

    /// T + c.
    pub fn translate(&self, c: FieldElement) -> SubsetOfField {
        let elements = self.elements.iter().map(|&t| self.field.add(t, c)).collect();
        SubsetOfField::new(self.field.clone(), elements).expect("translation preserves validity")
    }

    /// gamma * T for nonzero gamma.
    pub fn dilate(&self, gamma: FieldElement) -> Result<SubsetOfField, MixingError> {
        if gamma.is_zero() {
            return Err(MixingError::ZeroMultiplier);
        }
        let elements = self.elements.iter().map(|&t| self.field.mul(gamma, t)).collect();
        Ok(SubsetOfField::new(self.field.clone(), elements).expect("dilation is injective"))
    }
}

/// The interval [-alpha, alpha + delta_shape] in a prime field, the extremal
/// configuration for sumset hitting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CenteredInterval {
    field: FieldSpec,
    alpha: u32,
    delta_shape: i32,
}

impl CenteredInterval {
    pub fn new(field: FieldSpec, alpha: u32, delta_shape: i32) -> Result<Self, MixingError> {
        if field.degree() != 1 {
            return Err(MixingError::NotPrime(field.order() as u64));
        }
        let q = field.order();
        if alpha > (q - 1) / 2 {
            return Err(MixingError::OutOfRange(format!("alpha={alpha} > (q-1)/2")));
        }
        if !(-1..=1).contains(&delta_shape) {
            return Err(MixingError::OutOfRange(format!("delta_shape={delta_shape}")));
        }
        let size = 2 * alpha as i64 + 1 + delta_shape as i64;
        if size < 1 || size > q as i64 {
            return Err(MixingError::OutOfRange(format!("interval size {size} invalid")));
        }
        Ok(CenteredInterval { field, alpha, delta_shape })
    }

    /// The centered intervals of a given size: one when the size is odd,
    /// two (delta_shape = -1 and +1) when it is even.
    pub fn for_size(field: &FieldSpec, size: usize) -> Result<Vec<CenteredInterval>, MixingError> {
        if size == 0 || size > field.order() as usize {
            return Err(MixingError::OutOfRange(format!("size={size}")));
        }
        if size % 2 == 1 {
            let alpha = (size as u32 - 1) / 2;
            Ok(vec![CenteredInterval::new(field.clone(), alpha, 0)?])
        } else {
            Ok(vec![
                CenteredInterval::new(field.clone(), size as u32 / 2, -1)?,
                CenteredInterval::new(field.clone(), size as u32 / 2 - 1, 1)?,
            ])
        }
    }

    pub fn len(&self) -> usize {
        (2 * self.alpha as i64 + 1 + self.delta_shape as i64) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_subset(&self) -> SubsetOfField {
        let q = self.field.order() as i64;
        let lo = -(self.alpha as i64);
        let hi = self.alpha as i64 + self.delta_shape as i64;
        let elements = (lo..=hi)
            .map(|s| FieldElement(s.rem_euclid(q) as u32))
            .collect();
        SubsetOfField::new(self.field.clone(), elements).expect("interval elements are distinct")
    }
}

/// Result of an exhaustive worst-case mixing scan over one subset.
#[derive(Clone, Debug)]
pub struct MixingCertificate {
    pub subset: SubsetOfField,
    /// max over nonzero alpha, beta and all gamma of Pr[aX + bX' in T + g].
    pub probability: BigRational,
    pub alpha: FieldElement,
    pub beta: FieldElement,
    pub gamma: FieldElement,
    /// -log_q of the worst probability.
    pub delta: f64,
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Pr[X1 + X2 in T3] for X1 ~ T1, X2 ~ T2 independent and uniform.
pub fn sum_hit_probability(
    t1: &SubsetOfField,
    t2: &SubsetOfField,
    t3: &SubsetOfField,
) -> Result<BigRational, MixingError> {
    if t1.field != t2.field || t1.field != t3.field {
        return Err(MixingError::FieldMismatch);
    }
    let member = t3.membership();
    let f = &t1.field;
    let mut count = 0u64;
    for &x1 in &t1.elements {
        for &x2 in &t2.elements {
            if member[f.add(x1, x2).index() as usize] {
                count += 1;
            }
        }
    }
    Ok(ratio(count, (t1.len() * t2.len()) as u64))
}

/// Exact maximum of Pr[aX + bX' in T + g] over all nonzero a, b and all g,
/// with the first witness in scan order (a, then b, then g).
pub fn worst_case_mixing(t: &SubsetOfField) -> MixingCertificate {
    let f = &t.field;
    let q = f.order();
    let ell = t.len();
    let member = t.membership();
    let mut best_count = 0u64;
    let mut witness = (FieldElement::ONE, FieldElement::ONE, FieldElement::ZERO);
    let mut hist = vec![0u64; q as usize];
    for a in f.nonzero_elements() {
        let ax: Vec<FieldElement> = t.elements.iter().map(|&x| f.mul(a, x)).collect();
        for b in f.nonzero_elements() {
            hist.iter_mut().for_each(|h| *h = 0);
            for &xa in &ax {
                for &x in &t.elements {
                    hist[f.add(xa, f.mul(b, x)).index() as usize] += 1;
                }
            }
            for g in f.elements() {
                // Count pairs with aX + bX' in T + g.
                let mut count = 0u64;
                for (idx, &m) in member.iter().enumerate() {
                    if m {
                        count += hist[f.add(FieldElement(idx as u32), g).index() as usize];
                    }
                }
                if count > best_count {
                    best_count = count;
                    witness = (a, b, g);
                }
            }
        }
    }
    let probability = ratio(best_count, (ell * ell) as u64);
    let delta = -log_q(q, probability.to_f64().expect("small rational"));
    MixingCertificate {
        subset: t.clone(),
        probability,
        alpha: witness.0,
        beta: witness.1,
        gamma: witness.2,
        delta,
    }
}

/// The tight extremal value of Pr[X1 + X2 in T3] over all size-l subset
/// triples of a prime field, as an exact rational:
/// odd l:  3/4 + 1/(4l^2) + max(0, 3l-2q-1)(3l-2q+1)/(4l^2)
/// even l: 3/4 + max(0, 3l-2q)^2/(4l^2).
pub fn lev_extremal_bound(q: u64, ell: u64) -> Result<BigRational, MixingError> {
    check_prime_params(q, ell)?;
    let l = ell as i128;
    let qq = q as i128;
    let num = if ell % 2 == 1 {
        let a = 3 * l - 2 * qq - 1;
        3 * l * l + 1 + if a > 0 { a * (3 * l - 2 * qq + 1) } else { 0 }
    } else {
        let a = (3 * l - 2 * qq).max(0);
        3 * l * l + a * a
    };
    Ok(BigRational::new(BigInt::from(num), BigInt::from(4 * l * l)))
}

/// Mixing exponent guaranteed for every size-l subset of a prime field:
/// log_q(16/13) for 2 <= l <= 2q/3, else log_q(l^2 / (q^2 - 3l(q-l))).
pub fn prime_mixing_delta(q: u64, ell: u64) -> Result<f64, MixingError> {
    check_prime_params(q, ell)?;
    let value = if ell >= 2 && 3 * ell <= 2 * q {
        16.0 / 13.0
    } else {
        let denom = (q * q) as f64 - 3.0 * (ell * (q - ell)) as f64;
        (ell * ell) as f64 / denom
    };
    Ok(log_q(q as u32, value))
}

fn check_prime_params(q: u64, ell: u64) -> Result<(), MixingError> {
    let f = FieldSpec::prime(q).map_err(|_| MixingError::NotPrime(q))?;
    if f.order() < 3 {
        return Err(MixingError::NotPrime(q));
    }
    if ell < 1 || ell > q - 1 {
        return Err(MixingError::OutOfRange(format!("need 1 <= l <= q-1, got l={ell}, q={q}")));
    }
    Ok(())
}

/// Mixing exponent of a product set from per-coordinate exponents: the mean.
pub fn product_mixing_delta(deltas: &[f64]) -> f64 {
    if deltas.is_empty() {
        return 0.0;
    }
    deltas.iter().sum::<f64>() / deltas.len() as f64
}

/// Exact Pr[aX + bX' in rect + shift] for X, X' uniform on the rectangle:
/// the product over coordinates of the per-coordinate hit probabilities.
pub fn rectangle_mixing_probability(
    rect: &Rectangle,
    alpha: FieldElement,
    beta: FieldElement,
    shift: &FieldVector,
) -> Result<BigRational, MixingError> {
    if alpha.is_zero() || beta.is_zero() {
        return Err(MixingError::ZeroMultiplier);
    }
    if shift.len() != rect.n() {
        return Err(MixingError::OutOfRange(format!(
            "shift length {} vs rectangle length {}",
            shift.len(),
            rect.n()
        )));
    }
    let mut acc = BigRational::from(BigInt::from(1));
    for (i, side) in rect.sides().iter().enumerate() {
        let target = side.translate(shift.get(i));
        let a_side = side.dilate(alpha)?;
        let b_side = side.dilate(beta)?;
        acc *= sum_hit_probability(&a_side, &b_side, &target)?;
    }
    Ok(acc)
}

/// All size-l subsets of the field, in lexicographic index order.
pub fn subsets_of_size(field: &FieldSpec, ell: usize) -> Vec<SubsetOfField> {
    let q = field.order() as usize;
    assert!(ell >= 1 && ell <= q);
    let mut out = Vec::new();
    let mut idx: Vec<u32> = (0..ell as u32).collect();
    loop {
        out.push(
            SubsetOfField::from_indices(field.clone(), &idx).expect("combination is valid"),
        );
        // Advance the combination.
        let mut i = ell;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < (q - ell + i) as u32 {
                idx[i] += 1;
                for j in i + 1..ell {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Uniform random size-l subset.
pub fn random_subset<R: rand::Rng>(field: &FieldSpec, ell: usize, rng: &mut R) -> SubsetOfField {
    let q = field.order();
    assert!(ell >= 1 && ell <= q as usize);
    let mut chosen = Vec::with_capacity(ell);
    while chosen.len() < ell {
        let c = rng.gen_range(0..q);
        if !chosen.contains(&c) {
            chosen.push(c);
        }
    }
    SubsetOfField::from_indices(field.clone(), &chosen).expect("distinct by construction")
}

/// Exhaustive maximum of Pr[X1 + X2 in T3] over all triples of size-l
/// subsets, with a witness triple (first in enumeration order).
pub fn exhaustive_triple_maximum(
    field: &FieldSpec,
    ell: usize,
) -> (BigRational, [SubsetOfField; 3]) {
    let q = field.order() as usize;
    let subsets = subsets_of_size(field, ell);
    let masks: Vec<u64> = subsets
        .iter()
        .map(|s| s.elements().iter().fold(0u64, |m, e| m | (1 << e.index())))
        .collect();
    assert!(q <= 64, "exhaustive scan needs q <= 64");
    let mut add = vec![0u8; q * q];
    for a in 0..q {
        for b in 0..q {
            add[a * q + b] =
                field.add(FieldElement(a as u32), FieldElement(b as u32)).index() as u8;
        }
    }
    let mut best = 0u64;
    let mut wit = (0usize, 0usize, 0usize);
    for (i1, s1) in subsets.iter().enumerate() {
        for (i2, s2) in subsets.iter().enumerate() {
            let mut hist = [0u64; 64];
            for &x1 in s1.elements() {
                let row = x1.index() as usize * q;
                for &x2 in s2.elements() {
                    hist[add[row + x2.index() as usize] as usize] += 1;
                }
            }
            for (i3, &mask3) in masks.iter().enumerate() {
                let mut count = 0u64;
                let mut m = mask3;
                while m != 0 {
                    count += hist[m.trailing_zeros() as usize];
                    m &= m - 1;
                }
                if count > best {
                    best = count;
                    wit = (i1, i2, i3);
                }
            }
        }
    }
    (
        ratio(best, (ell * ell) as u64),
        [subsets[wit.0].clone(), subsets[wit.1].clone(), subsets[wit.2].clone()],
    )
}
