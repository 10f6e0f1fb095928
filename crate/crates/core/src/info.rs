//! Scalar information-theoretic quantities: the (q,l)-entropy, erasure and
//! error capacities, Bernoulli KL divergence in base q, binomial tail and
//! point-mass bounds, and the mixing exponent of list-recovery balls.
//!
//! Everything here is 64-bit floating point; the documented comparison
//! tolerance for derived values is 1e-9. The convention 0*log(0) = 0 applies
//! throughout.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InfoError {
    #[error("out of domain: {0}")]
    OutOfDomain(String),
}

/// Base-q logarithm.
pub fn log_q(q: u32, x: f64) -> f64 {
    x.ln() / (q as f64).ln()
}

/// Parameters for list-recovery from erasures: alphabet q, input list size
/// 1 <= l <= q, erasure fraction alpha in [0,1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasureParams {
    pub q: u32,
    pub ell: u32,
    pub alpha: f64,
}

impl ErasureParams {
    pub fn new(q: u32, ell: u32, alpha: f64) -> Result<Self, InfoError> {
        if ell < 1 || ell > q {
            return Err(InfoError::OutOfDomain(format!("need 1 <= l <= q, got l={ell}, q={q}")));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(InfoError::OutOfDomain(format!("need alpha in [0,1), got {alpha}")));
        }
        Ok(ErasureParams { q, ell, alpha })
    }
}

/// Parameters for list-recovery from errors: alphabet q, input list size
/// 1 <= l < q, decoding radius rho strictly inside (0, 1 - l/q).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorParams {
    pub q: u32,
    pub ell: u32,
    pub rho: f64,
}

impl ErrorParams {
    pub fn new(q: u32, ell: u32, rho: f64) -> Result<Self, InfoError> {
        if ell < 1 || ell >= q {
            return Err(InfoError::OutOfDomain(format!("need 1 <= l < q, got l={ell}, q={q}")));
        }
        let upper = 1.0 - ell as f64 / q as f64;
        if !(rho > 0.0 && rho < upper) {
            return Err(InfoError::OutOfDomain(format!(
                "need rho in (0, {upper}), got {rho}"
            )));
        }
        Ok(ErrorParams { q, ell, rho })
    }

    /// 1 - l/q, the right end of the radius domain.
    pub fn rho_upper(&self) -> f64 {
        1.0 - self.ell as f64 / self.q as f64
    }
}

/// h_{q,l}(x) = x log_q((q-l)/x) + (1-x) log_q(l/(1-x)) on [0, 1-l/q].
///
/// With l = 1 this is the classical q-ary entropy; h(0) = log_q l and
/// h(1-l/q) = 1.
pub fn entropy_ql(q: u32, ell: u32, x: f64) -> Result<f64, InfoError> {
    if ell < 1 || ell > q {
        return Err(InfoError::OutOfDomain(format!("need 1 <= l <= q, got l={ell}, q={q}")));
    }
    let upper = 1.0 - ell as f64 / q as f64;
    let slack = 1e-12;
    if !(-slack..=upper + slack).contains(&x) {
        return Err(InfoError::OutOfDomain(format!("need x in [0, {upper}], got {x}")));
    }
    let x = x.clamp(0.0, upper);
    let lnq = (q as f64).ln();
    let term = |w: f64, s: f64| if w == 0.0 { 0.0 } else { w * (s / w).ln() / lnq };
    Ok(term(x, (q - ell) as f64) + term(1.0 - x, ell as f64))
}

/// Erasure capacity 1 - alpha - (1-alpha) log_q l.
pub fn capacity_erasures(p: &ErasureParams) -> f64 {
    let la = 1.0 - p.alpha;
    1.0 - p.alpha - la * log_q(p.q, p.ell as f64)
}

/// Error capacity 1 - h_{q,l}(rho).
pub fn capacity_errors(p: &ErrorParams) -> f64 {
    1.0 - entropy_ql(p.q, p.ell, p.rho).expect("rho validated at construction")
}

/// Bernoulli KL divergence in nats, D(x||y) = x ln(x/y) + (1-x) ln((1-x)/(1-y)).
pub fn divergence(x: f64, y: f64) -> f64 {
    let mut d = 0.0;
    if x > 0.0 {
        d += x * (x / y).ln();
    }
    if x < 1.0 {
        d += (1.0 - x) * ((1.0 - x) / (1.0 - y)).ln();
    }
    d
}

/// D_q(x||y) = D(x||y) / ln q.
pub fn divergence_q(q: u32, x: f64, y: f64) -> f64 {
    divergence(x, y) / (q as f64).ln()
}

/// Chernoff tail Pr[Bin(n,p) >= p'n] <= q^{-n D_q(p'||p)}; the value is
/// e^{-n D(p'||p)} and does not depend on q.
pub fn binomial_tail_bound(n: u64, p: f64, p_prime: f64) -> Result<f64, InfoError> {
    if !(0.0 < p && p < p_prime && p_prime < 1.0) {
        return Err(InfoError::OutOfDomain(format!("need 0 < p < p' < 1, got p={p}, p'={p_prime}")));
    }
    Ok((-(n as f64) * divergence(p_prime, p)).exp())
}

/// Lower bound Pr[Bin(n,p) = pn] >= 1/sqrt(2n), valid when pn is an integer.
pub fn binomial_floor(n: u64, p: f64) -> Result<f64, InfoError> {
    if !(0.0 < p && p < 1.0) {
        return Err(InfoError::OutOfDomain(format!("need 0 < p < 1, got {p}")));
    }
    let pn = p * n as f64;
    if (pn - pn.round()).abs() > 1e-9 {
        return Err(InfoError::OutOfDomain(format!("p*n = {pn} is not an integer")));
    }
    Ok(1.0 / (2.0 * n as f64).sqrt())
}

/// Lower bound on h_{q,l}(rho) - h_{q,l}(rho - eta), namely
/// eta * log_q((q-l)(1-rho)/(l*rho)). Valid for rho in (0, 1-l/q] and
/// eta in [0, rho].
pub fn entropy_gap_lower_bound(q: u32, ell: u32, rho: f64, eta: f64) -> Result<f64, InfoError> {
    if ell < 1 || ell >= q {
        return Err(InfoError::OutOfDomain(format!("need 1 <= l < q, got l={ell}, q={q}")));
    }
    let upper = 1.0 - ell as f64 / q as f64;
    if !(rho > 0.0 && rho <= upper + 1e-12) {
        return Err(InfoError::OutOfDomain(format!("need rho in (0, {upper}], got {rho}")));
    }
    if !(0.0..=rho).contains(&eta) {
        return Err(InfoError::OutOfDomain(format!("need eta in [0, rho], got {eta}")));
    }
    let arg = (q - ell) as f64 * (1.0 - rho) / (ell as f64 * rho);
    Ok(eta * log_q(q, arg))
}

/// Mixing exponent of a radius-rho list-recovery ball:
/// delta = log_q((q-l)(1-rho)/(rho l)) * rho^4 (1-l/q-rho)^2 / (16 log2 q).
pub fn delta_error_mixing(p: &ErrorParams) -> f64 {
    let q = p.q as f64;
    let ell = p.ell as f64;
    let rho = p.rho;
    let lead = log_q(p.q, (q - ell) * (1.0 - rho) / (rho * ell));
    let margin = 1.0 - ell / q - rho;
    lead * rho.powi(4) * margin * margin / (16.0 * q.log2())
}
