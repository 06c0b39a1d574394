//! Exact q-series: q-Pochhammer symbols, terminating basic hypergeometric
//! series, q-Hahn and Al-Salam–Carlitz II polynomials, orbit weights and
//! partial total masses.
//!
//! Everything is evaluated in exact rational arithmetic. A series is summed
//! until an upper Pochhammer factor vanishes (true termination), never by a
//! numeric smallness threshold; a configurable term cap guards against
//! non-terminating parameter choices.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

/// Exact rational scalar: arbitrary-precision, always reduced, positive
/// denominator.
pub type QRat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QSeriesError {
    #[error("series did not terminate within {0} terms")]
    NonTerminating(usize),
    #[error("a lower-parameter Pochhammer factor vanished at term {0} before the series terminated")]
    LowerParameterPole(usize),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
}

/// `n` as an exact rational.
pub fn qrat(n: i64) -> QRat {
    QRat::from_integer(BigInt::from(n))
}

/// `n/d` as an exact rational.
pub fn qfrac(n: i64, d: i64) -> QRat {
    QRat::new(BigInt::from(n), BigInt::from(d))
}

/// `base^e` for a (possibly negative) integer exponent. Panics for `0^-e`.
pub fn qpow(base: &QRat, e: i64) -> QRat {
    if e >= 0 {
        base.pow(e as i32)
    } else {
        assert!(!base.is_zero(), "zero to a negative power");
        base.pow((-e) as i32).recip()
    }
}

/// `(a; base)_k = (1-a)(1-a*base)...(1-a*base^(k-1))`, with `(a; base)_0 = 1`.
pub fn qpochhammer(a: &QRat, base: &QRat, k: usize) -> QRat {
    let mut acc = QRat::one();
    let mut ab = a.clone();
    for _ in 0..k {
        acc *= QRat::one() - &ab;
        ab *= base;
    }
    acc
}

/// Parameters of a basic hypergeometric series `r_phi_s`.
#[derive(Debug, Clone)]
pub struct SeriesParams {
    pub upper: Vec<QRat>,
    pub lower: Vec<QRat>,
    pub base: QRat,
    pub argument: QRat,
    /// Terms to attempt before declaring the series non-terminating.
    pub term_cap: usize,
}

pub const DEFAULT_TERM_CAP: usize = 10_000;

impl SeriesParams {
    pub fn new(upper: Vec<QRat>, lower: Vec<QRat>, base: QRat, argument: QRat) -> SeriesParams {
        SeriesParams {
            upper,
            lower,
            base,
            argument,
            term_cap: DEFAULT_TERM_CAP,
        }
    }
}

/// Terminating basic hypergeometric sum
///
/// ```text
/// sum_m  (a_1;b)_m ... (a_r;b)_m / [(c_1;b)_m ... (c_s;b)_m]
///        * [(-1)^m b^(m(m-1)/2)]^(1+s-r) * z^m / (b;b)_m
/// ```
///
/// summed until some upper factor `(a_i; b)_m` vanishes. Errors if a lower
/// factor vanishes first, or if no upper factor vanishes within the cap.
pub fn phi(params: &SeriesParams) -> Result<QRat, QSeriesError> {
    let SeriesParams {
        upper,
        lower,
        base,
        argument,
        term_cap,
    } = params;
    let t: i64 = 1 + lower.len() as i64 - upper.len() as i64;

    let mut sum = QRat::zero();
    // running (x; base)_m products, updated by one factor per term
    let mut upoch: Vec<QRat> = vec![QRat::one(); upper.len()];
    let mut lpoch: Vec<QRat> = vec![QRat::one(); lower.len()];
    let mut bpoch = QRat::one();
    // extra_m = [(-1)^m base^(m(m-1)/2)]^t * z^m, maintained via the ratio
    // extra_{m+1}/extra_m = [(-1) base^m]^t * z
    let mut extra = QRat::one();
    let mut base_pow_m = QRat::one();

    for m in 0..=*term_cap {
        if upoch.iter().any(|u| u.is_zero()) {
            return Ok(sum);
        }
        if lpoch.iter().any(|l| l.is_zero()) || bpoch.is_zero() {
            return Err(QSeriesError::LowerParameterPole(m));
        }
        let mut term = extra.clone();
        for u in &upoch {
            term *= u;
        }
        for l in &lpoch {
            term /= l;
        }
        term /= &bpoch;
        sum += term;

        // advance all products from m to m+1
        for (u, a) in upoch.iter_mut().zip(upper) {
            *u *= QRat::one() - a * &base_pow_m;
        }
        for (l, b) in lpoch.iter_mut().zip(lower) {
            *l *= QRat::one() - b * &base_pow_m;
        }
        bpoch *= QRat::one() - base * &base_pow_m;
        let mut ratio = qpow(&(base_pow_m.clone()), t) * argument;
        if t % 2 != 0 {
            ratio = -ratio;
        }
        extra *= ratio;
        base_pow_m *= base;
    }
    Err(QSeriesError::NonTerminating(*term_cap))
}

fn qpow_int(q: u64, e: i64) -> QRat {
    qpow(&qrat(q as i64), e)
}

/// q-Hahn polynomial value `Q_j(k)` on the discrete interval `k = 0..=n`:
/// the terminating `3phi2` with upper parameters `q^-j, q^(j-2n-1), q^-k`,
/// lower parameters `q^-n, q^-n`, base and argument `q`.
pub fn q_hahn(j: usize, k: usize, n: usize, q: u64) -> Result<QRat, QSeriesError> {
    if j > n || k > n {
        return Err(QSeriesError::ParameterOutOfRange(format!(
            "q_hahn needs j <= n and k <= n, got j={j} k={k} n={n}"
        )));
    }
    let params = SeriesParams::new(
        vec![
            qpow_int(q, -(j as i64)),
            qpow_int(q, j as i64 - 2 * n as i64 - 1),
            qpow_int(q, -(k as i64)),
        ],
        vec![qpow_int(q, -(n as i64)), qpow_int(q, -(n as i64))],
        qrat(q as i64),
        qrat(q as i64),
    );
    phi(&params)
}

/// Al-Salam–Carlitz II polynomial value
/// `V_j(q^k) = (-1)^j q^(j(j-1)/2) * 2phi0(q^j, q^k; -; q^-1; q^-j)`,
/// a degree-`j` polynomial in `x = q^k`. The series terminates after `j + 1`
/// terms because `(q^j; q^-1)_{j+1} = 0`.
pub fn alsalam_carlitz2(j: usize, k: usize, q: u64) -> QRat {
    let params = SeriesParams::new(
        vec![qpow_int(q, j as i64), qpow_int(q, k as i64)],
        vec![],
        qpow_int(q, -1),
        qpow_int(q, -(j as i64)),
    );
    let series = phi(&params).expect("2phi0 with upper parameter q^j always terminates");
    let sign = if j.is_multiple_of(2) { QRat::one() } else { -QRat::one() };
    sign * qpow_int(q, (j * (j.saturating_sub(1)) / 2) as i64) * series
}

/// Invariant measure of the parabolic orbit `O_k`:
/// `w(k) = q^(-k^2) / prod_{j=1..k} (1 - q^-j)^2`.
pub fn orbit_weight(k: usize, q: u64) -> QRat {
    let mut w = qpow_int(q, -((k * k) as i64));
    for j in 1..=k {
        let f = QRat::one() - qpow_int(q, -(j as i64));
        w /= &f * &f;
    }
    w
}

/// Partial product `prod_{j=1..=terms} (1 - q^-j)^-1` for the total measure.
pub fn total_mass_partial(terms: usize, q: u64) -> QRat {
    let mut acc = QRat::one();
    for j in 1..=terms {
        acc /= QRat::one() - qpow_int(q, -(j as i64));
    }
    acc
}

/// Floating-point limit of the total-mass product, converged until the
/// remaining factors differ from 1 by less than 1e-14 each (the tail factor
/// `(1 - q^-j)^-1` differs from 1 by about `q^-j`).
pub fn total_mass_float(q: u64) -> f64 {
    let mut acc = 1.0_f64;
    let mut term = 1.0 / q as f64;
    while term > 1e-14 {
        acc /= 1.0 - term;
        term /= q as f64;
    }
    acc
}

/// Exact `k`-th divided difference of `f` over the nodes `xs` (all distinct).
/// Vanishes identically iff `f` restricted to the nodes is a polynomial of
/// degree < k; used to check polynomial degrees of q-series values.
pub fn divided_difference(xs: &[QRat], fs: &[QRat]) -> QRat {
    assert_eq!(xs.len(), fs.len());
    assert!(!xs.is_empty());
    if xs.len() == 1 {
        return fs[0].clone();
    }
    let n = xs.len();
    let hi = divided_difference(&xs[1..], &fs[1..]);
    let lo = divided_difference(&xs[..n - 1], &fs[..n - 1]);
    (hi - lo) / (&xs[n - 1] - &xs[0])
}
