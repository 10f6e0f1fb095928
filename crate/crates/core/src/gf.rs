//! Exact arithmetic in F_q for prime and prime-power q, plus the linear
//! algebra used throughout: vectors, matrices, rank, nullspace, span.
//!
//! Elements are encoded as integer indices in `[0, q)` read base-p as
//! coordinates over F_p, so index 0 is the additive and index 1 the
//! multiplicative identity. Extension fields up to order 256 carry
//! precomputed add/mul tables; larger ones fall back to polynomial
//! arithmetic modulo a deterministically chosen irreducible.

use std::fmt;
use std::sync::Arc;

/// Largest field order accepted by [`FieldSpec::new`].
pub const DEFAULT_MAX_ORDER: u64 = 1 << 16;

/// Orders up to this limit get full q*q operation tables.
const TABLE_LIMIT: u64 = 256;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GfError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("field order {order} exceeds the configured maximum {max}")]
    FieldTooLarge { order: u64, max: u64 },
    #[error("no monic irreducible of degree {degree} over F_{p} found")]
    NoIrreducibleFound { p: u64, degree: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("matrix rows must all have {expected} entries, row {row} has {got}")]
    RaggedRows { expected: usize, row: usize, got: usize },
}

/// An element of F_q, stored as its index in `[0, q)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldElement(pub u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

struct OpTables {
    add: Vec<u32>,
    mul: Vec<u32>,
}

/// A concrete finite field F_{p^m}.
///
/// Immutable after construction; cloning is cheap (tables are shared).
#[derive(Clone)]
pub struct FieldSpec {
    p: u32,
    m: u32,
    q: u32,
    /// Ascending-degree coefficients of the monic irreducible modulus,
    /// length m+1; empty when m == 1.
    modulus: Vec<u32>,
    tables: Option<Arc<OpTables>>,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.m == other.m && self.modulus == other.modulus
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m == 1 {
            write!(f, "F_{}", self.q)
        } else {
            write!(f, "F_{} (p={}, m={}, modulus={:?})", self.q, self.p, self.m, self.modulus)
        }
    }
}

impl FieldSpec {
    /// Builds F_{p^m} with the deterministically chosen modulus (the monic
    /// irreducible whose non-leading coefficients, read base-p with the
    /// constant term least significant, form the smallest integer).
    pub fn new(p: u64, m: u32) -> Result<FieldSpec, GfError> {
        Self::with_max_order(p, m, DEFAULT_MAX_ORDER)
    }

    pub fn with_max_order(p: u64, m: u32, max_order: u64) -> Result<FieldSpec, GfError> {
        if !is_prime(p) {
            return Err(GfError::NotPrime(p));
        }
        assert!(m >= 1, "degree must be positive");
        let q = p
            .checked_pow(m)
            .ok_or(GfError::FieldTooLarge { order: u64::MAX, max: max_order })?;
        if q > max_order {
            return Err(GfError::FieldTooLarge { order: q, max: max_order });
        }
        let p32 = p as u32;
        let modulus = if m == 1 {
            Vec::new()
        } else {
            find_irreducible(p32, m).ok_or(GfError::NoIrreducibleFound { p, degree: m })?
        };
        let mut spec = FieldSpec { p: p32, m, q: q as u32, modulus, tables: None };
        if m > 1 && q <= TABLE_LIMIT {
            spec.tables = Some(Arc::new(spec.build_tables()));
        }
        Ok(spec)
    }

    /// Builds a prime field F_p.
    pub fn prime(p: u64) -> Result<FieldSpec, GfError> {
        Self::new(p, 1)
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    /// Ascending-degree modulus coefficients; empty for prime fields.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn element(&self, index: u32) -> FieldElement {
        assert!(index < self.q, "element index {} out of range for order {}", index, self.q);
        FieldElement(index)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(FieldElement)
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = FieldElement> {
        (1..self.q).map(FieldElement)
    }

    fn build_tables(&self) -> OpTables {
        let q = self.q as usize;
        let mut add = vec![0u32; q * q];
        let mut mul = vec![0u32; q * q];
        for a in 0..self.q {
            for b in 0..self.q {
                add[(a as usize) * q + b as usize] = self.add_poly(a, b);
                mul[(a as usize) * q + b as usize] = self.mul_poly(a, b);
            }
        }
        OpTables { add, mul }
    }

    fn digits(&self, mut x: u32) -> Vec<u32> {
        let mut d = vec![0u32; self.m as usize];
        for slot in d.iter_mut() {
            *slot = x % self.p;
            x /= self.p;
        }
        d
    }

    fn from_digits(&self, d: &[u32]) -> u32 {
        let mut x = 0u32;
        for &c in d.iter().rev() {
            x = x * self.p + c;
        }
        x
    }

    fn add_poly(&self, a: u32, b: u32) -> u32 {
        let da = self.digits(a);
        let db = self.digits(b);
        let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
        self.from_digits(&sum)
    }

    fn mul_poly(&self, a: u32, b: u32) -> u32 {
        let da = self.digits(a);
        let db = self.digits(b);
        let m = self.m as usize;
        let p = self.p as u64;
        let mut prod = vec![0u64; 2 * m - 1];
        for (i, &x) in da.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p;
            }
        }
        // Reduce modulo the monic modulus: x^m = -(lower-degree part).
        for deg in (m..prod.len()).rev() {
            let c = prod[deg];
            if c == 0 {
                continue;
            }
            prod[deg] = 0;
            for (t, &mc) in self.modulus.iter().enumerate().take(m) {
                let sub = c * mc as u64 % p;
                prod[deg - m + t] = (prod[deg - m + t] + p - sub) % p;
            }
        }
        let digits: Vec<u32> = prod[..m].iter().map(|&c| c as u32).collect();
        self.from_digits(&digits)
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.m == 1 {
            let s = a.0 + b.0;
            return FieldElement(if s >= self.q { s - self.q } else { s });
        }
        if let Some(t) = &self.tables {
            return FieldElement(t.add[(a.0 as usize) * self.q as usize + b.0 as usize]);
        }
        FieldElement(self.add_poly(a.0, b.0))
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if self.m == 1 {
            return FieldElement(if a.0 == 0 { 0 } else { self.q - a.0 });
        }
        let d: Vec<u32> = self.digits(a.0).iter().map(|&c| (self.p - c) % self.p).collect();
        FieldElement(self.from_digits(&d))
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.m == 1 {
            return FieldElement((a.0 as u64 * b.0 as u64 % self.q as u64) as u32);
        }
        if let Some(t) = &self.tables {
            return FieldElement(t.mul[(a.0 as usize) * self.q as usize + b.0 as usize]);
        }
        FieldElement(self.mul_poly(a.0, b.0))
    }

    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let mut base = a;
        let mut acc = FieldElement::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, GfError> {
        if a.is_zero() {
            return Err(GfError::DivisionByZero);
        }
        Ok(self.pow(a, self.q as u64 - 2))
    }

    // ---- vector helpers ----

    pub fn vec_add(&self, u: &FieldVector, v: &FieldVector) -> Result<FieldVector, GfError> {
        if u.len() != v.len() {
            return Err(GfError::LengthMismatch(u.len(), v.len()));
        }
        Ok(FieldVector(u.iter().zip(v.iter()).map(|(a, b)| self.add(a, b)).collect()))
    }

    pub fn vec_sub(&self, u: &FieldVector, v: &FieldVector) -> Result<FieldVector, GfError> {
        if u.len() != v.len() {
            return Err(GfError::LengthMismatch(u.len(), v.len()));
        }
        Ok(FieldVector(u.iter().zip(v.iter()).map(|(a, b)| self.sub(a, b)).collect()))
    }

    pub fn vec_scale(&self, s: FieldElement, v: &FieldVector) -> FieldVector {
        FieldVector(v.iter().map(|a| self.mul(s, a)).collect())
    }

    /// acc += s * v, in place.
    pub fn vec_add_scaled(&self, acc: &mut [FieldElement], s: FieldElement, v: &[FieldElement]) {
        debug_assert_eq!(acc.len(), v.len());
        for (a, &b) in acc.iter_mut().zip(v.iter()) {
            *a = self.add(*a, self.mul(s, b));
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// ---- polynomial helpers over F_p (ascending-degree coefficient vectors) ----

fn poly_degree(p: &[u32]) -> Option<usize> {
    p.iter().rposition(|&c| c != 0)
}

fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let db = poly_degree(b).expect("divisor must be nonzero");
    let lead_inv = mod_inv(b[db], p);
    let mut r = a.to_vec();
    loop {
        let dr = match poly_degree(&r) {
            Some(d) if d >= db => d,
            _ => return r,
        };
        let factor = (r[dr] as u64 * lead_inv as u64 % p as u64) as u32;
        let shift = dr - db;
        for (i, &bc) in b.iter().enumerate().take(db + 1) {
            let sub = factor as u64 * bc as u64 % p as u64;
            let idx = i + shift;
            r[idx] = ((r[idx] as u64 + p as u64 - sub) % p as u64) as u32;
        }
    }
}

fn mod_inv(a: u32, p: u32) -> u32 {
    // Fermat: p prime.
    let mut acc = 1u64;
    let mut base = a as u64 % p as u64;
    let mut e = p as u64 - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    acc as u32
}

/// Exhaustive trial-division irreducibility test over F_p.
fn poly_is_irreducible(poly: &[u32], p: u32) -> bool {
    let m = poly_degree(poly).unwrap_or(0);
    if m == 0 {
        return false;
    }
    for d in 1..=m / 2 {
        // All monic divisors of degree d.
        let total = (p as u64).pow(d as u32);
        for v in 0..total {
            let mut div = vec![0u32; d + 1];
            let mut x = v;
            for slot in div.iter_mut().take(d) {
                *slot = (x % p as u64) as u32;
                x /= p as u64;
            }
            div[d] = 1;
            if poly_degree(&poly_rem(poly, &div, p)).is_none() {
                return false;
            }
        }
    }
    true
}

fn find_irreducible(p: u32, m: u32) -> Option<Vec<u32>> {
    let total = (p as u64).pow(m);
    for v in 0..total {
        let mut poly = vec![0u32; m as usize + 1];
        let mut x = v;
        for slot in poly.iter_mut().take(m as usize) {
            *slot = (x % p as u64) as u32;
            x /= p as u64;
        }
        poly[m as usize] = 1;
        if poly_is_irreducible(&poly, p) {
            return Some(poly);
        }
    }
    None
}

/// A vector over F_q. Ordering is lexicographic on the element indices.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldVector(pub Vec<FieldElement>);

impl FieldVector {
    pub fn zero(n: usize) -> FieldVector {
        FieldVector(vec![FieldElement::ZERO; n])
    }

    pub fn from_indices(idx: &[u32]) -> FieldVector {
        FieldVector(idx.iter().map(|&i| FieldElement(i)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> FieldElement {
        self.0[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = FieldElement> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[FieldElement] {
        &self.0
    }

    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, e)| !e.is_zero()).map(|(i, _)| i).collect()
    }

    /// Support as a bitmask; only valid for length <= 64.
    pub fn support_mask(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0.iter().enumerate().fold(0u64, |acc, (i, e)| {
            if e.is_zero() {
                acc
            } else {
                acc | (1 << i)
            }
        })
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|e| !e.is_zero()).count()
    }

    pub fn hamming_distance(&self, other: &FieldVector) -> usize {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|e| e.is_zero())
    }
}

impl fmt::Debug for FieldVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", e)?;
        }
        write!(f, "]")
    }
}

/// A dense row-major matrix over F_q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl FieldMatrix {
    pub fn zero(rows: usize, cols: usize) -> FieldMatrix {
        FieldMatrix { rows, cols, data: vec![FieldElement::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> FieldMatrix {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, FieldElement::ONE);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<FieldElement>>) -> Result<FieldMatrix, GfError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(GfError::RaggedRows { expected: c, row: i, got: row.len() });
            }
        }
        Ok(FieldMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vector(&self, f: &FieldSpec, v: &[FieldElement]) -> Vec<FieldElement> {
        debug_assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                let mut acc = FieldElement::ZERO;
                for (c, &x) in v.iter().enumerate() {
                    if !x.is_zero() {
                        acc = f.add(acc, f.mul(self.get(r, c), x));
                    }
                }
                acc
            })
            .collect()
    }

    /// Reduced row echelon form. Pivots are chosen by scanning columns left
    /// to right and rows top to bottom, so the output is deterministic.
    pub fn rref(&self, f: &FieldSpec) -> (FieldMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut pr = 0usize;
        for col in 0..m.cols {
            if pr == m.rows {
                break;
            }
            let Some(sel) = (pr..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            if sel != pr {
                for c in 0..m.cols {
                    let tmp = m.get(pr, c);
                    m.set(pr, c, m.get(sel, c));
                    m.set(sel, c, tmp);
                }
            }
            let inv = f.inv(m.get(pr, col)).expect("pivot is nonzero");
            for c in 0..m.cols {
                m.set(pr, c, f.mul(inv, m.get(pr, c)));
            }
            for r in 0..m.rows {
                if r == pr {
                    continue;
                }
                let factor = m.get(r, col);
                if factor.is_zero() {
                    continue;
                }
                for c in 0..m.cols {
                    let v = f.sub(m.get(r, c), f.mul(factor, m.get(pr, c)));
                    m.set(r, c, v);
                }
            }
            pivots.push(col);
            pr += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self, f: &FieldSpec) -> usize {
        self.rref(f).1.len()
    }

    /// Basis of the right nullspace {v : Mv = 0}, one vector per free column,
    /// ordered by ascending free-column index.
    pub fn nullspace_basis(&self, f: &FieldSpec) -> Vec<FieldVector> {
        let (rr, pivots) = self.rref(f);
        let mut basis = Vec::with_capacity(self.cols - pivots.len());
        let mut piv_iter = pivots.iter().copied().peekable();
        let mut free_cols = Vec::new();
        for c in 0..self.cols {
            if piv_iter.peek() == Some(&c) {
                piv_iter.next();
            } else {
                free_cols.push(c);
            }
        }
        for &fc in &free_cols {
            let mut v = vec![FieldElement::ZERO; self.cols];
            v[fc] = FieldElement::ONE;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(rr.get(row, fc));
            }
            basis.push(FieldVector(v));
        }
        basis
    }
}

/// dim Span(v_1, ..., v_b); 0 for an empty list.
pub fn span_dimension(f: &FieldSpec, vectors: &[FieldVector]) -> Result<usize, GfError> {
    let Some(first) = vectors.first() else {
        return Ok(0);
    };
    for v in vectors {
        if v.len() != first.len() {
            return Err(GfError::LengthMismatch(first.len(), v.len()));
        }
    }
    let m = FieldMatrix::from_rows(vectors.iter().map(|v| v.0.clone()).collect())?;
    Ok(m.rank(f))
}
