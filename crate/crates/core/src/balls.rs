//! List-recovery balls: the radius-rho puffing of a combinatorial rectangle,
//! with membership tests, exact counting, the volume sandwich, the
//! convolution identity, and both a proved upper bound and an exact dynamic
//! program for the mixing probability of a ball.

use crate::gf::{FieldElement, FieldSpec, FieldVector};
use crate::info::{divergence_q, entropy_ql, ErrorParams};
use crate::mixing::{sum_hit_probability, MixingError, SubsetOfField};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Default cap on |B| for the exact mixing DP.
pub const DEFAULT_BALL_ENUM_CAP: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BallsError {
    #[error("sides live over different fields")]
    FieldMismatch,
    #[error("rectangle needs at least one side")]
    EmptyRectangle,
    #[error("all subsets must have size {0}")]
    SizeMismatch(usize),
    #[error("omega = {0} outside (0, 1 - l/q)")]
    OmegaOutOfRange(f64),
    #[error("eta = {0} violates 1 - rho > (1 - rho + eta)^2 + (rho - eta)^2 l/(q-l)")]
    EtaInfeasible(f64),
    #[error("ball of size {size} exceeds enumeration cap {cap}")]
    TooLarge { size: String, cap: u64 },
    #[error("shift length {0} does not match block length {1}")]
    ShiftLength(usize, usize),
    #[error(transparent)]
    Mixing(#[from] MixingError),
}

/// A combinatorial rectangle T_1 x ... x T_n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rectangle {
    sides: Vec<SubsetOfField>,
}

impl Rectangle {
    pub fn new(sides: Vec<SubsetOfField>) -> Result<Rectangle, BallsError> {
        let first = sides.first().ok_or(BallsError::EmptyRectangle)?;
        if sides.iter().any(|s| s.field() != first.field()) {
            return Err(BallsError::FieldMismatch);
        }
        Ok(Rectangle { sides })
    }

    /// n copies of the same side set.
    pub fn repeated(side: SubsetOfField, n: usize) -> Result<Rectangle, BallsError> {
        Rectangle::new(vec![side; n])
    }

    pub fn field(&self) -> &FieldSpec {
        self.sides[0].field()
    }

    pub fn n(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[SubsetOfField] {
        &self.sides
    }

    pub fn side_sizes(&self) -> Vec<usize> {
        self.sides.iter().map(|s| s.len()).collect()
    }

    pub fn contains(&self, x: &FieldVector) -> bool {
        x.len() == self.n() && x.iter().zip(&self.sides).all(|(e, s)| s.contains(e))
    }

    /// Product of the side sizes.
    pub fn num_points(&self) -> BigUint {
        self.sides.iter().fold(BigUint::one(), |acc, s| acc * BigUint::from(s.len()))
    }
}

/// Count of coordinates of x escaping their side set; 0 iff x is in the
/// rectangle.
pub fn rect_distance(x: &FieldVector, rect: &Rectangle) -> usize {
    debug_assert_eq!(x.len(), rect.n());
    x.iter().zip(rect.sides()).filter(|(e, s)| !s.contains(*e)).count()
}

/// B_rho(T_1 x ... x T_n): all vectors within rectangle-distance floor(rho n).
#[derive(Clone, Debug)]
pub struct ListRecoveryBall {
    center: Rectangle,
    rho: f64,
    radius_count: usize,
}

impl ListRecoveryBall {
    /// Radius is stored as the integer floor(rho * n); membership uses the
    /// integer threshold only.
    pub fn new(center: Rectangle, rho: f64) -> ListRecoveryBall {
        assert!((0.0..=1.0).contains(&rho), "rho must lie in [0,1]");
        let x = rho * center.n() as f64;
        // Guard against float noise when rho * n is integral.
        let radius_count =
            if (x - x.round()).abs() < 1e-9 { x.round() as usize } else { x.floor() as usize };
        ListRecoveryBall { center, rho, radius_count }
    }

    pub fn from_radius_count(center: Rectangle, radius_count: usize) -> ListRecoveryBall {
        let rho = radius_count as f64 / center.n() as f64;
        ListRecoveryBall { center, rho, radius_count }
    }

    pub fn center(&self) -> &Rectangle {
        &self.center
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn radius_count(&self) -> usize {
        self.radius_count
    }

    pub fn contains(&self, x: &FieldVector) -> bool {
        rect_distance(x, &self.center) <= self.radius_count
    }
}

/// Exact ball volume: sum over escape counts j <= radius of the number of
/// vectors escaping exactly the coordinates of some j-subset.
pub fn ball_size_exact(ball: &ListRecoveryBall) -> BigUint {
    let q = ball.center.field().order() as usize;
    let r = ball.radius_count.min(ball.center.n());
    // Coefficients of prod_i (l_i + (q - l_i) z), truncated at degree r.
    let mut coeffs = vec![BigUint::zero(); r + 1];
    coeffs[0] = BigUint::one();
    for side in ball.center.sides() {
        let stay = BigUint::from(side.len());
        let escape = BigUint::from(q - side.len());
        for j in (0..=r).rev() {
            let mut v = &coeffs[j] * &stay;
            if j > 0 {
                v += &coeffs[j - 1] * &escape;
            }
            coeffs[j] = v;
        }
    }
    coeffs.into_iter().sum()
}

/// Pr[X + Y = z] for X ~ A, Y ~ B independent and uniform.
pub fn convolution_hit(
    a: &SubsetOfField,
    b: &SubsetOfField,
    z: FieldElement,
) -> Result<BigRational, BallsError> {
    if a.field() != b.field() {
        return Err(BallsError::FieldMismatch);
    }
    let f = a.field();
    let count =
        a.elements().iter().filter(|&&x| b.contains(f.sub(z, x))).count();
    Ok(BigRational::new(BigInt::from(count), BigInt::from(a.len() * b.len())))
}

/// The four-term mixture (1-w1)(1-w2) Pr[X1+X2 in T] + w1(1-w2) Pr[X1+Y2 in T]
/// + w2(1-w1) Pr[Y1+X2 in T] + w1 w2 Pr[Y1+Y2 in T], where X1 ~ A, X2 ~ B and
/// Y1, Y2 sample the complements. Each probability is computed exactly.
pub fn mixture_bound_lhs(
    a: &SubsetOfField,
    b: &SubsetOfField,
    t: &SubsetOfField,
    omega1: f64,
    omega2: f64,
) -> Result<f64, BallsError> {
    let ell = t.len();
    if a.len() != ell || b.len() != ell {
        return Err(BallsError::SizeMismatch(ell));
    }
    let q = t.field().order() as usize;
    let upper = 1.0 - ell as f64 / q as f64;
    for w in [omega1, omega2] {
        if !(w > 0.0 && w < upper) {
            return Err(BallsError::OmegaOutOfRange(w));
        }
    }
    let ac = a.complement()?;
    let bc = b.complement()?;
    let p = |x: &SubsetOfField, y: &SubsetOfField| -> Result<f64, BallsError> {
        Ok(sum_hit_probability(x, y, t)?.to_f64().expect("small rational"))
    };
    Ok((1.0 - omega1) * (1.0 - omega2) * p(a, b)?
        + omega1 * (1.0 - omega2) * p(a, &bc)?
        + omega2 * (1.0 - omega1) * p(&ac, b)?
        + omega1 * omega2 * p(&ac, &bc)?)
}

/// The matching right side (1-w1)(1-w2) + w1 w2 l/(q-l).
pub fn mixture_bound_rhs(q: u32, ell: u32, omega1: f64, omega2: f64) -> f64 {
    (1.0 - omega1) * (1.0 - omega2) + omega1 * omega2 * ell as f64 / (q - ell) as f64
}

/// The eta used by the mixing-exponent corollary: rho(1 - l/q - rho)/3.
pub fn default_eta(p: &ErrorParams) -> f64 {
    p.rho * (p.rho_upper() - p.rho) / 3.0
}

/// Proved upper bound on the mixing probability of a radius-rho ball:
/// 2 sqrt(2n) q^{n(h(rho-eta) - h(rho))}
///   + 2n q^{-n D_q(1-rho || (1-rho+eta)^2 + (rho-eta)^2 l/(q-l))}.
pub fn ball_mixing_bound(p: &ErrorParams, n: usize, eta: f64) -> Result<f64, BallsError> {
    if !(0.0..=p.rho).contains(&eta) {
        return Err(BallsError::EtaInfeasible(eta));
    }
    let gamma = p.ell as f64 / (p.q - p.ell) as f64;
    let shifted = (1.0 - p.rho + eta).powi(2) + (p.rho - eta).powi(2) * gamma;
    if 1.0 - p.rho <= shifted {
        return Err(BallsError::EtaInfeasible(eta));
    }
    let nf = n as f64;
    let lnq = (p.q as f64).ln();
    let h_gap = entropy_ql(p.q, p.ell, p.rho - eta).expect("in domain")
        - entropy_ql(p.q, p.ell, p.rho).expect("in domain");
    let term1 = 2.0 * (2.0 * nf).sqrt() * (nf * h_gap * lnq).exp();
    let term2 = 2.0 * nf * (-nf * divergence_q(p.q, 1.0 - p.rho, shifted) * lnq).exp();
    Ok(term1 + term2)
}

/// Per-coordinate pair pattern counts for the mixing DP: bucket[e1][e2][e3]
/// counts pairs (x, x') in F_q^2 with e1 = [x escapes T], e2 = [x' escapes T],
/// e3 = [ax + bx' escapes z + T].
fn coordinate_buckets(
    f: &FieldSpec,
    side: &SubsetOfField,
    alpha: FieldElement,
    beta: FieldElement,
    z: FieldElement,
) -> [[[u64; 2]; 2]; 2] {
    let member = side.membership();
    let mut buckets = [[[0u64; 2]; 2]; 2];
    for x in f.elements() {
        let e1 = usize::from(!member[x.index() as usize]);
        let ax = f.mul(alpha, x);
        for xp in f.elements() {
            let e2 = usize::from(!member[xp.index() as usize]);
            let combo = f.sub(f.add(ax, f.mul(beta, xp)), z);
            let e3 = usize::from(!member[combo.index() as usize]);
            buckets[e1][e2][e3] += 1;
        }
    }
    buckets
}

/// Exact Pr[aX + bX' in B + z] for X, X' uniform on the ball B, computed by
/// a dynamic program over coordinates that tracks the joint escape counts of
/// X, X' and aX + bX' - z. Polynomial in n for fixed q.
pub fn ball_mixing_exact(
    ball: &ListRecoveryBall,
    alpha: FieldElement,
    beta: FieldElement,
    shift: &FieldVector,
    cap: u64,
) -> Result<BigRational, BallsError> {
    if alpha.is_zero() || beta.is_zero() {
        return Err(BallsError::Mixing(MixingError::ZeroMultiplier));
    }
    let n = ball.center.n();
    if shift.len() != n {
        return Err(BallsError::ShiftLength(shift.len(), n));
    }
    let size = ball_size_exact(ball);
    if size > BigUint::from(cap) {
        return Err(BallsError::TooLarge { size: size.to_string(), cap });
    }
    let f = ball.center.field().clone();
    let r = ball.radius_count.min(n);
    let dim = r + 1;
    let idx = |a: usize, b: usize, c: usize| (a * dim + b) * dim + c;
    let mut dp = vec![BigUint::zero(); dim * dim * dim];
    dp[0] = BigUint::one();
    for (i, side) in ball.center.sides().iter().enumerate() {
        let buckets = coordinate_buckets(&f, side, alpha, beta, shift.get(i));
        let mut next = vec![BigUint::zero(); dim * dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    let cur = &dp[idx(a, b, c)];
                    if cur.is_zero() {
                        continue;
                    }
                    for e1 in 0..2 {
                        for e2 in 0..2 {
                            for e3 in 0..2 {
                                let w = buckets[e1][e2][e3];
                                if w == 0 {
                                    continue;
                                }
                                let (na, nb, nc) = (a + e1, b + e2, c + e3);
                                if na > r || nb > r || nc > r {
                                    continue;
                                }
                                next[idx(na, nb, nc)] += cur * w;
                            }
                        }
                    }
                }
            }
        }
        dp = next;
    }
    let hits: BigUint = dp.into_iter().sum();
    Ok(BigRational::new(BigInt::from(hits), BigInt::from(&size * &size)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::random_subset;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn f(p: u64, m: u32) -> FieldSpec {
        FieldSpec::new(p, m).unwrap()
    }

    fn subset(field: &FieldSpec, idx: &[u32]) -> SubsetOfField {
        SubsetOfField::from_indices(field.clone(), idx).unwrap()
    }

    /// All q^n vectors, odometer order.
    fn all_vectors(field: &FieldSpec, n: usize) -> Vec<FieldVector> {
        let q = field.order() as u64;
        let total = q.pow(n as u32);
        (0..total)
            .map(|mut t| {
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    v.push(FieldElement((t % q) as u32));
                    t /= q;
                }
                FieldVector(v)
            })
            .collect()
    }

    #[test]
    fn rect_distance_examples() {
        let f5 = f(5, 1);
        let rect = Rectangle::new(vec![
            subset(&f5, &[0, 1]),
            subset(&f5, &[2, 3]),
            subset(&f5, &[4, 0]),
        ])
        .unwrap();
        assert_eq!(rect_distance(&FieldVector::from_indices(&[0, 2, 4]), &rect), 0);
        assert_eq!(rect_distance(&FieldVector::from_indices(&[3, 2, 1]), &rect), 2);

        let full = Rectangle::repeated(SubsetOfField::full(f5.clone()), 4).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = FieldVector((0..4).map(|_| f5.element(rng.gen_range(0..5))).collect());
            assert_eq!(rect_distance(&x, &full), 0);
        }
    }

    #[test]
    fn rect_distance_is_coordinate_indicator_sum() {
        let f5 = f(5, 1);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let sides: Vec<SubsetOfField> = (0..6).map(|_| random_subset(&f5, 2, &mut rng)).collect();
        let rect = Rectangle::new(sides.clone()).unwrap();
        for _ in 0..50 {
            let x = FieldVector((0..6).map(|_| f5.element(rng.gen_range(0..5))).collect());
            let expected: usize =
                (0..6).map(|i| usize::from(!sides[i].contains(x.get(i)))).sum();
            assert_eq!(rect_distance(&x, &rect), expected);
        }
    }

    #[test]
    fn ball_size_small_cases() {
        let f3 = f(3, 1);
        let rect = Rectangle::repeated(subset(&f3, &[1]), 2).unwrap();
        let ball = ListRecoveryBall::from_radius_count(rect.clone(), 1);
        assert_eq!(ball_size_exact(&ball), BigUint::from(5u32));
        let zero = ListRecoveryBall::from_radius_count(rect, 0);
        assert_eq!(ball_size_exact(&zero), BigUint::from(1u32));
    }

    #[test]
    fn ball_size_matches_brute_force_f4() {
        let f4 = f(2, 2);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let sides: Vec<SubsetOfField> = (0..8).map(|_| random_subset(&f4, 2, &mut rng)).collect();
        let rect = Rectangle::new(sides).unwrap();
        let ball = ListRecoveryBall::from_radius_count(rect.clone(), 2);
        let brute = all_vectors(&f4, 8).iter().filter(|x| ball.contains(x)).count();
        assert_eq!(ball_size_exact(&ball), BigUint::from(brute));
        // Closed form for equal side sizes.
        let expected: u64 = (0..=2).map(|j| binom(8, j) * 2u64.pow(j as u32) * 2u64.pow(8 - j as u32)).sum();
        assert_eq!(ball_size_exact(&ball), BigUint::from(expected));
    }

    fn binom(n: u64, k: u64) -> u64 {
        let mut c = 1u64;
        for i in 0..k {
            c = c * (n - i) / (i + 1);
        }
        c
    }

    #[test]
    fn ball_size_supports_mixed_side_sizes() {
        let f5 = f(5, 1);
        let rect = Rectangle::new(vec![
            subset(&f5, &[0]),
            subset(&f5, &[0, 1, 2]),
            subset(&f5, &[3, 4]),
        ])
        .unwrap();
        let ball = ListRecoveryBall::from_radius_count(rect.clone(), 1);
        let brute = all_vectors(&f5, 3).iter().filter(|x| ball.contains(x)).count();
        assert_eq!(ball_size_exact(&ball), BigUint::from(brute));
    }

    #[test]
    fn floor_radius_convention() {
        let f3 = f(3, 1);
        let rect = Rectangle::repeated(subset(&f3, &[0]), 10).unwrap();
        assert_eq!(ListRecoveryBall::new(rect.clone(), 0.29).radius_count(), 2);
        assert_eq!(ListRecoveryBall::new(rect.clone(), 0.3).radius_count(), 3);
        assert_eq!(ListRecoveryBall::new(rect.clone(), 0.7).radius_count(), 7);
        assert_eq!(ListRecoveryBall::new(rect, 1.0).radius_count(), 10);
    }

    #[test]
    fn entropy_matches_normalized_ball_volume() {
        // (1/n) log_q |B| must land inside [h - log_q(sqrt(2n))/n, h].
        let f4 = f(2, 2);
        for n in [8usize, 12] {
            let r = n / 4;
            let h = entropy_ql(4, 2, 0.25).unwrap();
            let rect = Rectangle::repeated(subset(&f4, &[0, 1]), n).unwrap();
            let size = ball_size_exact(&ListRecoveryBall::from_radius_count(rect, r));
            let normalized = size.to_f64().unwrap().ln() / (4f64).ln() / n as f64;
            let low = h - (2.0 * n as f64).sqrt().ln() / (4f64).ln() / n as f64;
            assert!(normalized <= h + 1e-12, "n={n}");
            assert!(normalized >= low - 1e-12, "n={n}");
        }
    }

    #[test]
    fn convolution_examples() {
        let f5 = f(5, 1);
        let zero = subset(&f5, &[0]);
        assert!(convolution_hit(&zero, &zero, FieldElement(0)).unwrap().is_one());
        let t = subset(&f5, &[0, 1]);
        assert_eq!(
            convolution_hit(&t, &t, FieldElement(1)).unwrap(),
            BigRational::new(BigInt::from(2), BigInt::from(4))
        );
    }

    #[test]
    fn convolution_dual_paths_agree() {
        // Direct pair count vs the normalized convolution sum over all of F_q.
        let f7 = f(7, 1);
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..100 {
            let a = random_subset(&f7, rng.gen_range(1..7), &mut rng);
            let b = random_subset(&f7, rng.gen_range(1..7), &mut rng);
            let z = f7.element(rng.gen_range(0..7));
            let direct = convolution_hit(&a, &b, z).unwrap();
            let conv_sum = f7
                .elements()
                .filter(|&y| a.contains(y) && b.contains(f7.sub(z, y)))
                .count();
            let via_convolution =
                BigRational::new(BigInt::from(conv_sum), BigInt::from(a.len() * b.len()));
            assert_eq!(direct, via_convolution);
        }
    }

    #[test]
    fn mixture_bound_examples() {
        let f5 = f(5, 1);
        let t = subset(&f5, &[0, 1]);
        // Degenerate weights: LHS collapses to Pr[X1+X2 in T] <= 1.
        let lhs = mixture_bound_lhs(&t, &t, &t, 1e-9, 1e-9).unwrap();
        let p_xx = sum_hit_probability(&t, &t, &t).unwrap().to_f64().unwrap();
        assert!((lhs - p_xx).abs() < 1e-6);

        let lhs = mixture_bound_lhs(&t, &t, &t, 0.2, 0.2).unwrap();
        let rhs = mixture_bound_rhs(5, 2, 0.2, 0.2);
        assert!((rhs - (0.64 + 0.04 * 2.0 / 3.0)).abs() < 1e-12);
        assert!(lhs <= rhs + 1e-12);

        // Subfield of F_4: Pr[X1+X2 in T] = 1 yet the bound still holds
        // (with equality).
        let f4 = f(2, 2);
        let sub = subset(&f4, &[0, 1]);
        let lhs = mixture_bound_lhs(&sub, &sub, &sub, 0.2, 0.2).unwrap();
        let rhs = mixture_bound_rhs(4, 2, 0.2, 0.2);
        assert!(lhs <= rhs + 1e-12);
        assert!((lhs - rhs).abs() < 1e-12);

        assert!(matches!(
            mixture_bound_lhs(&t, &t, &subset(&f5, &[0, 1, 2]), 0.2, 0.2),
            Err(BallsError::SizeMismatch(_))
        ));
        assert!(matches!(
            mixture_bound_lhs(&t, &t, &t, 0.7, 0.2),
            Err(BallsError::OmegaOutOfRange(_))
        ));
    }

    #[test]
    fn omega_second_inequality_sampled() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..500 {
            let (q, ell) = *[(4u32, 2u32), (5, 2), (7, 3), (9, 4)].choose(&mut rng).unwrap();
            let upper = 1.0 - ell as f64 / q as f64;
            let rho = rng.gen_range(0.05..upper - 0.01);
            let eta = rng.gen_range(0.0..rho);
            let w1 = rng.gen_range(rho - eta..=rho);
            let w2 = rng.gen_range(rho - eta..=rho);
            let gamma = ell as f64 / (q - ell) as f64;
            let lhs = (1.0 - rho + eta).powi(2) + (rho - eta).powi(2) * gamma;
            let g = (1.0 - w1) * (1.0 - w2) + w1 * w2 * gamma;
            assert!(lhs >= g - 1e-12);
        }
        // Equality exactly at the corner w1 = w2 = rho - eta.
        let (rho, eta, gamma): (f64, f64, f64) = (0.3, 0.1, 2.0 / 3.0);
        let lhs = (1.0 - rho + eta) * (1.0 - rho + eta) + (rho - eta) * (rho - eta) * gamma;
        let g = (1.0 - (rho - eta)) * (1.0 - (rho - eta)) + (rho - eta) * (rho - eta) * gamma;
        assert!((lhs - g).abs() < 1e-15);
    }

    #[test]
    fn ball_mixing_bound_behaviour() {
        let p = ErrorParams::new(5, 2, 0.3).unwrap();
        // eta = 0 satisfies the feasibility inequality but gives a vacuous
        // bound (>= 2 sqrt(2n) >= 1).
        assert!(ball_mixing_bound(&p, 100, 0.0).unwrap() >= 1.0);
        // eta = rho breaks feasibility.
        assert!(matches!(ball_mixing_bound(&p, 100, 0.3), Err(BallsError::EtaInfeasible(_))));

        let eta = default_eta(&p);
        assert!((eta - 0.03).abs() < 1e-15);
        let at_200 = ball_mixing_bound(&p, 200, eta).unwrap();
        let at_400 = ball_mixing_bound(&p, 400, eta).unwrap();
        // Frozen from a high-precision evaluation of the two-term formula;
        // the n = 200 value sits marginally above 1.
        assert!((at_200 - 1.0134706174439161).abs() < 1e-9);
        assert!((at_400 - 0.0050011707325284837).abs() < 1e-9);
        assert!(at_400 < at_200);
        assert!(at_400 < 1.0);
    }

    #[test]
    fn ball_mixing_exact_whole_space_is_one() {
        let f3 = f(3, 1);
        let rect = Rectangle::repeated(subset(&f3, &[0]), 4).unwrap();
        let ball = ListRecoveryBall::from_radius_count(rect, 4);
        let p = ball_mixing_exact(
            &ball,
            FieldElement(1),
            FieldElement(2),
            &FieldVector::zero(4),
            DEFAULT_BALL_ENUM_CAP,
        )
        .unwrap();
        assert!(p.is_one());
    }

    /// Brute-force pair enumeration over ball members.
    fn ball_mixing_brute(
        ball: &ListRecoveryBall,
        alpha: FieldElement,
        beta: FieldElement,
        shift: &FieldVector,
    ) -> BigRational {
        let field = ball.center().field().clone();
        let n = ball.center().n();
        let members: Vec<FieldVector> =
            all_vectors(&field, n).into_iter().filter(|x| ball.contains(x)).collect();
        let mut hits = 0u64;
        for x in &members {
            for y in &members {
                let combo = FieldVector(
                    (0..n)
                        .map(|i| {
                            field.sub(
                                field.add(field.mul(alpha, x.get(i)), field.mul(beta, y.get(i))),
                                shift.get(i),
                            )
                        })
                        .collect(),
                );
                if ball.contains(&combo) {
                    hits += 1;
                }
            }
        }
        BigRational::new(BigInt::from(hits), BigInt::from(members.len() * members.len()))
    }

    #[test]
    fn ball_mixing_dp_matches_brute_force() {
        let f3 = f(3, 1);
        let rect = Rectangle::repeated(subset(&f3, &[0]), 6).unwrap();
        let ball = ListRecoveryBall::from_radius_count(rect, 1);
        let dp = ball_mixing_exact(
            &ball,
            FieldElement(1),
            FieldElement(1),
            &FieldVector::zero(6),
            DEFAULT_BALL_ENUM_CAP,
        )
        .unwrap();
        assert_eq!(dp, ball_mixing_brute(&ball, FieldElement(1), FieldElement(1), &FieldVector::zero(6)));
    }

    #[test]
    fn puffed_subfield_rectangle_mixes_below_one() {
        // The unpuffed subfield rectangle has mixing probability exactly 1;
        // any positive radius breaks the additive closure.
        let f4 = f(2, 2);
        let rect = Rectangle::repeated(subset(&f4, &[0, 1]), 6).unwrap();
        let ball = ListRecoveryBall::from_radius_count(rect, 1);
        let p = ball_mixing_exact(
            &ball,
            FieldElement(1),
            FieldElement(1),
            &FieldVector::zero(6),
            DEFAULT_BALL_ENUM_CAP,
        )
        .unwrap();
        assert!(p < BigRational::one());
        assert_eq!(p, ball_mixing_brute(&ball, FieldElement(1), FieldElement(1), &FieldVector::zero(6)));
    }

    #[test]
    fn ball_mixing_invariant_under_coordinate_permutation() {
        let f4 = f(2, 2);
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let sides: Vec<SubsetOfField> = (0..5).map(|_| random_subset(&f4, 2, &mut rng)).collect();
        let shift = FieldVector((0..5).map(|_| f4.element(rng.gen_range(0..4))).collect());
        let ball =
            ListRecoveryBall::from_radius_count(Rectangle::new(sides.clone()).unwrap(), 1);
        let p = ball_mixing_exact(&ball, FieldElement(2), FieldElement(3), &shift, 1 << 22).unwrap();

        let perm = [3usize, 0, 4, 1, 2];
        let perm_sides: Vec<SubsetOfField> = perm.iter().map(|&i| sides[i].clone()).collect();
        let perm_shift = FieldVector(perm.iter().map(|&i| shift.get(i)).collect());
        let ball2 =
            ListRecoveryBall::from_radius_count(Rectangle::new(perm_sides).unwrap(), 1);
        let p2 =
            ball_mixing_exact(&ball2, FieldElement(2), FieldElement(3), &perm_shift, 1 << 22)
                .unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn ball_mixing_monotonicity_envelope() {
        let f3 = f(3, 1);
        let rect = Rectangle::repeated(subset(&f3, &[0, 1]), 6).unwrap();
        let shift = FieldVector::zero(6);
        let mut prev: Option<(BigRational, BigUint)> = None;
        for r in 0..=3usize {
            let ball = ListRecoveryBall::from_radius_count(rect.clone(), r);
            let size = ball_size_exact(&ball);
            let p = ball_mixing_exact(&ball, FieldElement(1), FieldElement(2), &shift, 1 << 22)
                .unwrap();
            assert!(p <= BigRational::one());
            if let Some((pp, ps)) = prev {
                let scale = BigRational::new(
                    BigInt::from(&ps * &ps),
                    BigInt::from(&size * &size),
                );
                assert!(p >= pp * scale);
            }
            prev = Some((p, size));
        }
    }

    #[test]
    fn ball_mixing_respects_cap() {
        let f4 = f(2, 2);
        let rect = Rectangle::repeated(subset(&f4, &[0, 1]), 10).unwrap();
        let ball = ListRecoveryBall::from_radius_count(rect, 3);
        let err = ball_mixing_exact(
            &ball,
            FieldElement(1),
            FieldElement(1),
            &FieldVector::zero(10),
            64,
        )
        .unwrap_err();
        assert!(matches!(err, BallsError::TooLarge { .. }));
    }
}
