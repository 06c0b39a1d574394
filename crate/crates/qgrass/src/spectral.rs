//! Difference and averaging operators on parabolic orbit indices, with their
//! exact spectral checks and brute-force oracles.
//!
//! Two operators act on functions of the orbit index `k = dim(L ∩ W)`:
//!
//! - the finite q-Hahn difference operator on `k = 0..=n`, whose
//!   eigenfunctions are the q-Hahn polynomials with eigenvalues
//!   `(1 - q^-j)(1 - q^(j-2n-1))`;
//! - the infinite averaging kernel, a stochastic birth-death kernel with
//!   `down(k) = (1-q^-k)^2`, `stay(k) = 2q^-k - q^-2k - q^-2k-1`,
//!   `up(k) = q^-2k-1`, whose eigenfunctions are the Al-Salam–Carlitz II
//!   polynomials with eigenvalues `q^-j`.
//!
//! Both coefficient sets are pinned by internal oracles rather than taken on
//! faith: the kernel by exact stochasticity plus detailed balance against
//! the orbit weights, the q-Hahn coefficients by exact eigen-identities and
//! exact orthogonality of the eigenfunctions. The brute-force oracle
//! [`jump_probabilities_bruteforce`] recovers the kernel as the `n -> inf`
//! limit of finite two-step (hyperplane, overspace) statistics.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

use crate::gf::FieldSpec;
use crate::grassmann::{
    grassmannian_count, hyperplanes, orbit_count, orbit_index, overspaces, standard_w,
    Grassmannian,
};
use crate::linalg::{MatrixFq, Subspace};
use crate::qseries::{alsalam_carlitz2, orbit_weight, qpow, qrat, QRat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectralError {
    #[error("brute-force enumeration budget exceeded: {0}")]
    TooLarge(String),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
}

/// Work budget for brute-force enumerations, in (hyperplane, overspace)
/// pairs.
const BRUTE_FORCE_BUDGET: u64 = 2_000_000;

/// A tridiagonal operator on functions of the orbit index:
/// `(A y)(k) = down(k) y(k-1) + stay(k) y(k) + up(k) y(k+1)`,
/// materialized on `k = 0..rows.len()`. `down(0) = 0` always; a finite
/// operator has `cutoff = Some(n)` and `up(n) = 0`.
#[derive(Clone, Debug)]
pub struct TridiagonalOperator {
    rows: Vec<(QRat, QRat, QRat)>,
    cutoff: Option<usize>,
}

impl TridiagonalOperator {
    pub fn row(&self, k: usize) -> &(QRat, QRat, QRat) {
        &self.rows[k]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn cutoff(&self) -> Option<usize> {
        self.cutoff
    }

    /// Does every materialized row sum to exactly 1?
    pub fn is_stochastic(&self) -> bool {
        self.rows
            .iter()
            .all(|(d, s, u)| d + s + u == QRat::one())
    }

    /// Apply to a sampled function. For a finite operator `y` must cover
    /// `0..=n`; the result has the same length (the stencil never reaches
    /// outside thanks to `down(0) = up(n) = 0`). For an infinite operator the
    /// last index is dropped, since its stencil needs `y(len)`.
    pub fn apply(&self, y: &[QRat]) -> Vec<QRat> {
        let n = match self.cutoff {
            Some(n) => {
                assert_eq!(y.len(), n + 1, "sample length must be n + 1");
                n + 1
            }
            None => {
                assert!(y.len() <= self.rows.len());
                y.len() - 1
            }
        };
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let (down, stay, up) = &self.rows[k];
            let mut v = stay * &y[k];
            if k > 0 {
                v += down * &y[k - 1];
            }
            if k + 1 < y.len() {
                v += up * &y[k + 1];
            }
            out.push(v);
        }
        out
    }
}

/// q-Hahn coefficient `B(k) = (1 - q^(k-n))^2`.
pub fn hahn_b(k: usize, n: usize, q: u64) -> QRat {
    let f = QRat::one() - qpow(&qrat(q as i64), k as i64 - n as i64);
    &f * &f
}

/// q-Hahn coefficient `D(k) = q^(-2n-1) (1 - q^k)^2`.
pub fn hahn_d(k: usize, n: usize, q: u64) -> QRat {
    let f = QRat::one() - qpow(&qrat(q as i64), k as i64);
    qpow(&qrat(q as i64), -(2 * n as i64) - 1) * &f * &f
}

/// The q-Hahn difference operator on `k = 0..=n`, in its positive form
/// `(L y)(k) = (B(k) + D(k)) y(k) - B(k) y(k+1) - D(k) y(k-1)`.
/// Constants are annihilated; the q-Hahn polynomials are eigenfunctions with
/// eigenvalues [`hahn_eigenvalue`].
pub fn hahn_operator(n: usize, q: u64) -> TridiagonalOperator {
    assert!(n >= 1);
    let rows = (0..=n)
        .map(|k| {
            let b = hahn_b(k, n, q);
            let d = hahn_d(k, n, q);
            (-&d, &b + &d, -&b)
        })
        .collect();
    TridiagonalOperator {
        rows,
        cutoff: Some(n),
    }
}

/// `lambda_j = (1 - q^-j)(1 - q^(j-2n-1))`.
pub fn hahn_eigenvalue(j: usize, n: usize, q: u64) -> QRat {
    let qr = qrat(q as i64);
    (QRat::one() - qpow(&qr, -(j as i64)))
        * (QRat::one() - qpow(&qr, j as i64 - 2 * n as i64 - 1))
}

/// Exact residuals `(L Q_j - lambda_j Q_j)(k)` for `k = 0..=n`; all zero.
pub fn hahn_eigencheck(j: usize, n: usize, q: u64) -> Result<Vec<QRat>, crate::qseries::QSeriesError> {
    let op = hahn_operator(n, q);
    let values: Result<Vec<QRat>, _> = (0..=n).map(|k| crate::qseries::q_hahn(j, k, n, q)).collect();
    let values = values?;
    let lambda = hahn_eigenvalue(j, n, q);
    let image = op.apply(&values);
    Ok(image
        .into_iter()
        .zip(&values)
        .map(|(lhs, v)| lhs - &lambda * v)
        .collect())
}

/// Orthogonality weights of the q-Hahn operator, from detailed balance:
/// `rho(0) = 1`, `rho(k+1) = rho(k) B(k) / D(k+1)`. The q-Hahn polynomials
/// are exactly orthogonal under these weights, which pins the coefficient
/// pair `(B, D)` independently of the eigen-identities.
pub fn hahn_orthogonality_weights(n: usize, q: u64) -> Vec<QRat> {
    let mut rho = vec![QRat::one()];
    for k in 0..n {
        let next = rho[k].clone() * hahn_b(k, n, q) / hahn_d(k + 1, n, q);
        rho.push(next);
    }
    rho
}

/// Averaging-kernel coefficients at orbit index `k`:
/// `(down, stay, up) = ((1-q^-k)^2, 2q^-k - q^-2k - q^-2k-1, q^-2k-1)`.
/// They sum to exactly 1.
pub fn delta_coefficients(q: u64, k: usize) -> (QRat, QRat, QRat) {
    let qr = qrat(q as i64);
    let k = k as i64;
    let down = {
        let f = QRat::one() - qpow(&qr, -k);
        &f * &f
    };
    let stay = qrat(2) * qpow(&qr, -k) - qpow(&qr, -2 * k) - qpow(&qr, -2 * k - 1);
    let up = qpow(&qr, -2 * k - 1);
    debug_assert_eq!(&down + &stay + &up, QRat::one());
    (down, stay, up)
}

/// The infinite averaging kernel materialized on `k = 0..=kmax`.
pub fn delta_operator(q: u64, kmax: usize) -> TridiagonalOperator {
    TridiagonalOperator {
        rows: (0..=kmax).map(|k| delta_coefficients(q, k)).collect(),
        cutoff: None,
    }
}

/// Exact residuals `(Delta V_j - q^-j V_j)(k)` for `k < kmax`, where `V_j`
/// is the Al-Salam–Carlitz II polynomial; all zero.
pub fn asc_eigencheck(j: usize, q: u64, kmax: usize) -> Vec<QRat> {
    assert!(kmax >= 1);
    let values: Vec<QRat> = (0..=kmax).map(|k| alsalam_carlitz2(j, k, q)).collect();
    let eigen = qpow(&qrat(q as i64), -(j as i64));
    (0..kmax)
        .map(|k| {
            let (down, stay, up) = delta_coefficients(q, k);
            let mut v = stay * &values[k] + up * &values[k + 1];
            if k > 0 {
                v += down * &values[k - 1];
            }
            v - &eigen * &values[k]
        })
        .collect()
}

/// Exact detailed balance of the averaging kernel against the orbit weights:
/// `w(k) up(k) = w(k+1) down(k+1)` for all `k < kmax`.
pub fn detailed_balance_check(q: u64, kmax: usize) -> bool {
    (0..kmax).all(|k| {
        let (_, _, up) = delta_coefficients(q, k);
        let (down_next, _, _) = delta_coefficients(q, k + 1);
        orbit_weight(k, q) * up == orbit_weight(k + 1, q) * down_next
    })
}

/// Exact two-step jump statistics on `Gr(2n, n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JumpProbabilities {
    pub down: QRat,
    pub stay: QRat,
    pub up: QRat,
}

impl JumpProbabilities {
    pub fn sum(&self) -> QRat {
        &self.down + &self.stay + &self.up
    }
}

/// Brute-force oracle for the averaging kernel: fix a representative
/// `L in Gr(2n, n)` with `dim(L ∩ W) = k`, walk over every pair of a
/// hyperplane `K ⊂ L` and an `n`-dimensional overspace `M ⊃ K` (uniform at
/// both stages), and classify `dim(M ∩ W) - k` into down/stay/up. The three
/// exact probabilities sum to 1 and converge to [`delta_coefficients`] as
/// `n` grows.
pub fn jump_probabilities_bruteforce(
    n: usize,
    k: usize,
    q: u64,
) -> Result<JumpProbabilities, SpectralError> {
    if k > n {
        return Err(SpectralError::ParameterOutOfRange(format!(
            "orbit index {k} exceeds n = {n}"
        )));
    }
    let hyper = (q.pow(n as u32) - 1) / (q - 1);
    let over = (q.pow(n as u32 + 1) - 1) / (q - 1);
    if hyper.saturating_mul(over) > BRUTE_FORCE_BUDGET {
        return Err(SpectralError::TooLarge(format!(
            "{hyper} hyperplanes x {over} overspaces"
        )));
    }
    let spec = FieldSpec::of_order(q).map_err(|e| {
        SpectralError::ParameterOutOfRange(format!("q = {q}: {e}"))
    })?;

    // representative: span(e_k .. e_{n-1}, f_0 .. f_{k-1})
    let mut rep = MatrixFq::zeros(&spec, n, 2 * n);
    for (row, j) in (k..n).enumerate() {
        rep.set_code(row, j, 1);
    }
    for i in 0..k {
        rep.set_code(n - k + i, n + i, 1);
    }
    let l = Subspace::from_matrix(&rep);
    debug_assert_eq!(orbit_index(&l, n), k);

    let w = standard_w(&spec, n);
    let mut tally = [0u64; 3]; // down, stay, up
    let mut total = 0u64;
    for hyperplane in hyperplanes(&l) {
        for m in overspaces(&hyperplane) {
            let delta = m.intersect(&w).dim() as i64 - k as i64;
            debug_assert!((-1..=1).contains(&delta));
            tally[(delta + 1) as usize] += 1;
            total += 1;
        }
    }
    let frac = |c: u64| QRat::new(c.into(), total.into());
    let out = JumpProbabilities {
        down: frac(tally[0]),
        stay: frac(tally[1]),
        up: frac(tally[2]),
    };
    debug_assert_eq!(out.sum(), QRat::one());
    Ok(out)
}

/// Precomputed 127-bit sampling thresholds for the averaging kernel.
struct WalkKernel {
    q: u64,
    thresholds: Vec<(u128, u128)>,
}

impl WalkKernel {
    fn new(q: u64) -> WalkKernel {
        WalkKernel {
            q,
            thresholds: Vec::new(),
        }
    }

    fn at(&mut self, k: usize) -> (u128, u128) {
        while self.thresholds.len() <= k {
            let kk = self.thresholds.len();
            let (down, stay, _) = delta_coefficients(self.q, kk);
            let cum = &down + &stay;
            self.thresholds.push((scale_127(&down), scale_127(&cum)));
        }
        self.thresholds[k]
    }
}

/// `floor(p * 2^127)` for `p` in `[0, 1]`.
fn scale_127(p: &QRat) -> u128 {
    let num = p.numer().to_biguint().expect("probability is nonnegative");
    let scaled: BigUint = (num << 127) / p.denom().to_biguint().unwrap();
    scaled.to_u128().expect("probability at most 1")
}

/// Simulate the averaging Markov chain from `k0`. Returns the full
/// trajectory (`steps + 1` states including the start). Deterministic for a
/// fixed generator state; each transition consumes one 128-bit draw compared
/// against 127-bit thresholds, so sampling error per step is below 2^-127.
pub fn markov_walk<R: Rng + ?Sized>(q: u64, k0: usize, steps: usize, rng: &mut R) -> Vec<usize> {
    let mut kernel = WalkKernel::new(q);
    let mut traj = Vec::with_capacity(steps + 1);
    let mut k = k0;
    traj.push(k);
    for _ in 0..steps {
        let (t_down, t_stay) = kernel.at(k);
        let r = rng.gen::<u128>() >> 1;
        k = if r < t_down {
            k - 1
        } else if r < t_stay {
            k
        } else {
            k + 1
        };
        traj.push(k);
    }
    traj
}

/// Occupancy frequencies of a trajectory, up to the largest visited state.
pub fn occupancy(traj: &[usize]) -> Vec<f64> {
    let max = traj.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0u64; max + 1];
    for &k in traj {
        counts[k] += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / traj.len() as f64)
        .collect()
}

/// Stationary law of the averaging chain, `w(k) / sum w`, as floats.
pub fn stationary_frequencies(q: u64, kmax: usize) -> Vec<f64> {
    let total = crate::qseries::total_mass_float(q);
    (0..=kmax)
        .map(|k| crate::verify::rat_to_f64(&orbit_weight(k, q)) / total)
        .collect()
}

/// Monte Carlo orbit statistics on `Gr(2n, n)`: empirical orbit-index
/// frequencies of uniform subspaces next to the exact distribution.
#[derive(Clone, Debug)]
pub struct OrbitDistribution {
    pub n: usize,
    pub samples: u64,
    pub counts: Vec<u64>,
    /// Exact probabilities `#O_k / #Gr(2n, n)`.
    pub exact: Vec<QRat>,
}

impl OrbitDistribution {
    pub fn empirical(&self, k: usize) -> f64 {
        self.counts[k] as f64 / self.samples as f64
    }

    pub fn exact_f64(&self, k: usize) -> f64 {
        crate::verify::rat_to_f64(&self.exact[k])
    }

    /// Binomial standard error of the empirical frequency of bin `k`.
    pub fn standard_error(&self, k: usize) -> f64 {
        let p = self.exact_f64(k);
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }

    /// Are all bins within `sigmas` binomial standard errors?
    pub fn within(&self, sigmas: f64) -> bool {
        (0..self.counts.len()).all(|k| {
            let se = self.standard_error(k);
            (self.empirical(k) - self.exact_f64(k)).abs() <= sigmas * se.max(f64::EPSILON)
        })
    }
}

pub fn mc_orbit_distribution<R: Rng + ?Sized>(
    n: usize,
    q: u64,
    samples: u64,
    rng: &mut R,
) -> OrbitDistribution {
    let spec = FieldSpec::of_order(q).expect("q must be a prime power");
    let g = Grassmannian::new(&spec, 2 * n, n);
    let mut counts = vec![0u64; n + 1];
    for _ in 0..samples {
        counts[orbit_index(&g.sample(rng), n)] += 1;
    }
    let total = grassmannian_count(2 * n, n, q);
    let exact = (0..=n)
        .map(|k| QRat::new(orbit_count(n, k, q).into(), total.clone().into()))
        .collect();
    OrbitDistribution {
        n,
        samples,
        counts,
        exact,
    }
}

/// The finite averaging operator on parabolic-orbit functions: the
/// `(n+1) x (n+1)` stochastic tridiagonal matrix whose rows are the exact
/// brute-force jump probabilities.
#[derive(Clone, Debug)]
pub struct AveragingMatrix {
    pub n: usize,
    pub q: u64,
    pub rows: Vec<JumpProbabilities>,
}

/// Build the matrix by brute force; subject to the same enumeration budget
/// as [`jump_probabilities_bruteforce`].
pub fn finite_averaging_matrix(n: usize, q: u64) -> Result<AveragingMatrix, SpectralError> {
    let rows: Result<Vec<JumpProbabilities>, SpectralError> = (0..=n)
        .map(|k| jump_probabilities_bruteforce(n, k, q))
        .collect();
    Ok(AveragingMatrix { n, q, rows: rows? })
}

impl AveragingMatrix {
    pub fn is_stochastic(&self) -> bool {
        self.rows.iter().all(|r| r.sum() == QRat::one())
    }

    pub fn entry(&self, i: usize, j: usize) -> QRat {
        if j + 1 == i {
            self.rows[i].down.clone()
        } else if j == i {
            self.rows[i].stay.clone()
        } else if j == i + 1 {
            self.rows[i].up.clone()
        } else {
            QRat::zero()
        }
    }

    /// Exact characteristic polynomial `det(x I - A)`, coefficients by
    /// ascending power, leading coefficient 1; computed by the tridiagonal
    /// three-term recurrence.
    pub fn char_poly(&self) -> Vec<QRat> {
        let m = self.n + 1;
        // d_0 = 1, d_1 = x - a_0,
        // d_k = (x - a_{k-1}) d_{k-1} - up_{k-2} down_{k-1} d_{k-2}
        let mut prev: Vec<QRat> = vec![QRat::one()];
        let mut cur: Vec<QRat> = vec![-self.rows[0].stay.clone(), QRat::one()];
        for k in 2..=m {
            let a = &self.rows[k - 1].stay;
            let cross = &self.rows[k - 2].up * &self.rows[k - 1].down;
            // (x - a) * cur
            let mut next = vec![QRat::zero(); cur.len() + 1];
            for (i, c) in cur.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= a * c;
            }
            for (i, c) in prev.iter().enumerate() {
                next[i] -= &cross * c;
            }
            prev = std::mem::take(&mut cur);
            cur = next;
        }
        cur
    }

    /// Evaluate the characteristic polynomial exactly.
    pub fn char_poly_at(&self, x: &QRat) -> QRat {
        let mut acc = QRat::zero();
        for c in self.char_poly().iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Eigenvalues in descending order, computed in floating point on the
    /// symmetrized matrix (the chain is reversible, so the conjugated matrix
    /// with off-diagonals `sqrt(up_k down_{k+1})` is symmetric and similar).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = self.n + 1;
        let mut sym = vec![vec![0.0f64; m]; m];
        for k in 0..m {
            sym[k][k] = crate::verify::rat_to_f64(&self.rows[k].stay);
            if k + 1 < m {
                let prod = crate::verify::rat_to_f64(&self.rows[k].up)
                    * crate::verify::rat_to_f64(&self.rows[k + 1].down);
                sym[k][k + 1] = prod.sqrt();
                sym[k + 1][k] = sym[k][k + 1];
            }
        }
        let mut eig = jacobi_eigenvalues(sym);
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        eig
    }

    /// Normalized q-Hahn eigenvalues `1 - lambda_j / lambda_max`-style are
    /// not asserted against this spectrum; callers get both lists to compare
    /// side by side.
    pub fn hahn_reference_eigenvalues(&self) -> Vec<f64> {
        (0..=self.n)
            .map(|j| crate::verify::rat_to_f64(&hahn_eigenvalue(j, self.n, self.q)))
            .collect()
    }
}

/// Cyclic-by-rows Jacobi eigenvalue iteration for small symmetric matrices.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Exact chain law of two uniform flag steps from every start in
/// `Gr(m, d)`: the joint distribution of `(L, K, M)` with `L` uniform, `K` a
/// uniform hyperplane of `L`, `M` a uniform overspace of `K`. Returned as a
/// list of `(L, K, M, probability)` with exact rational weights.
pub fn two_step_flag_law(
    m: usize,
    d: usize,
    q: u64,
) -> Result<Vec<(Subspace, Subspace, Subspace, QRat)>, SpectralError> {
    assert!(d >= 1 && d < m);
    let spec = FieldSpec::of_order(q)
        .map_err(|e| SpectralError::ParameterOutOfRange(format!("q = {q}: {e}")))?;
    let g = Grassmannian::new(&spec, m, d);
    let total = g.count();
    let total = total
        .to_u64()
        .filter(|&t| t <= 10_000)
        .ok_or_else(|| SpectralError::TooLarge("flag enumeration".into()))?;
    let hyper = (q.pow(d as u32) - 1) / (q - 1);
    let over = (q.pow((m - d + 1) as u32) - 1) / (q - 1);
    let weight = QRat::new(
        1.into(),
        (total * hyper * over).into(),
    );
    let mut out = Vec::new();
    for l in g.enumerate().map_err(|_| SpectralError::TooLarge("flag enumeration".into()))? {
        for k in hyperplanes(&l) {
            for mm in overspaces(&k) {
                out.push((l.clone(), k.clone(), mm, weight.clone()));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::{q_hahn, qfrac};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hahn_operator_basics() {
        for q in [2u64, 3] {
            for n in 1..=4usize {
                let op = hahn_operator(n, q);
                // B(n) = 0 and D(0) = 0
                assert!(op.row(n).2.is_zero());
                assert!(op.row(0).0.is_zero());
                // constants are annihilated
                let ones = vec![QRat::one(); n + 1];
                assert!(op.apply(&ones).iter().all(|v| v.is_zero()));
            }
        }
    }

    #[test]
    fn hahn_eigencheck_small_grid() {
        for q in [2u64, 3] {
            for n in 1..=4usize {
                for j in 0..=n {
                    let residuals = hahn_eigencheck(j, n, q).unwrap();
                    assert!(
                        residuals.iter().all(|r| r.is_zero()),
                        "nonzero residual at q={q} n={n} j={j}"
                    );
                }
            }
        }
    }

    #[test]
    fn hahn_eigenvalues_examples() {
        assert!(hahn_eigenvalue(0, 3, 2).is_zero());
        // j=1, n=1, q=2: (1 - 1/2)(1 - 1/4) = 3/8
        assert_eq!(hahn_eigenvalue(1, 1, 2), qfrac(3, 8));
    }

    #[test]
    fn hahn_polynomials_are_exactly_orthogonal() {
        // independent oracle pinning the (B, D) coefficient pair
        for q in [2u64, 3] {
            for n in 1..=4usize {
                let rho = hahn_orthogonality_weights(n, q);
                assert!(rho.iter().all(|w| w > &QRat::zero()));
                for i in 0..=n {
                    for j in i + 1..=n {
                        let mut acc = QRat::zero();
                        for k in 0..=n {
                            acc += &rho[k]
                                * q_hahn(i, k, n, q).unwrap()
                                * q_hahn(j, k, n, q).unwrap();
                        }
                        assert!(acc.is_zero(), "q={q} n={n} pair ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn delta_coefficient_examples() {
        for q in [2u64, 3, 4, 5] {
            let (down, stay, up) = delta_coefficients(q, 0);
            assert!(down.is_zero());
            assert_eq!(stay, QRat::one() - qfrac(1, q as i64));
            assert_eq!(up, qfrac(1, q as i64));
        }
        let (down, stay, up) = delta_coefficients(2, 1);
        assert_eq!((down, stay, up), (qfrac(1, 4), qfrac(5, 8), qfrac(1, 8)));

        // up-moves from deep states are rare: up(5) = q^-11
        let (_, _, up5) = delta_coefficients(2, 5);
        assert_eq!(up5, qfrac(1, 2048));
    }

    #[test]
    fn delta_is_stochastic_and_fixes_constants() {
        for q in [2u64, 3, 4] {
            let op = delta_operator(q, 30);
            assert!(op.is_stochastic());
            let ones = vec![QRat::one(); 31];
            let image = op.apply(&ones);
            assert!(image.iter().all(|v| v == &QRat::one()));
        }
    }

    #[test]
    fn asc_eigencheck_examples() {
        // j=0: constants, eigenvalue 1
        assert!(asc_eigencheck(0, 2, 10).iter().all(|r| r.is_zero()));

        // j=1, q=2, k=0 by hand: stay(0)*(-1) + up(0)*0 = -1/2 = q^-1 V_1(0)
        let (_, stay, _) = delta_coefficients(2, 0);
        assert_eq!(stay * alsalam_carlitz2(1, 0, 2), qfrac(-1, 2));
        assert!(asc_eigencheck(1, 2, 10).iter().all(|r| r.is_zero()));

        for q in [2u64, 3] {
            for j in 0..=4 {
                assert!(
                    asc_eigencheck(j, q, 20).iter().all(|r| r.is_zero()),
                    "q={q} j={j}"
                );
            }
        }
    }

    #[test]
    fn detailed_balance_examples() {
        // k=0, q=2: w(0) up(0) = 1/2 and w(1) down(1) = 2 * 1/4
        let (_, _, up0) = delta_coefficients(2, 0);
        assert_eq!(orbit_weight(0, 2) * up0, qfrac(1, 2));
        let (down1, _, _) = delta_coefficients(2, 1);
        assert_eq!(orbit_weight(1, 2) * down1, qfrac(1, 2));

        for q in [2u64, 3, 4] {
            assert!(detailed_balance_check(q, 30));
        }
    }

    #[test]
    fn asc_weighted_near_orthogonality() {
        // the infinite weighted sums vanish; the exact partial sums to k = 60
        // are tiny relative to the norms
        let q = 2u64;
        let kmax = 60usize;
        let weights: Vec<QRat> = (0..=kmax).map(|k| orbit_weight(k, q)).collect();
        let polys: Vec<Vec<QRat>> = (0..=6)
            .map(|j| (0..=kmax).map(|k| alsalam_carlitz2(j, k, q)).collect())
            .collect();
        let dot = |a: &[QRat], b: &[QRat]| -> f64 {
            let mut acc = QRat::zero();
            for k in 0..=kmax {
                acc += &weights[k] * &a[k] * &b[k];
            }
            crate::verify::rat_to_f64(&acc)
        };
        for i in 0..=6usize {
            for j in i + 1..=6 {
                let norms = (dot(&polys[i], &polys[i]) * dot(&polys[j], &polys[j])).sqrt();
                assert!(
                    dot(&polys[i], &polys[j]).abs() <= 1e-8 * norms,
                    "pair ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn jump_probabilities_examples() {
        // n=1: from k=0 the two-step walk can only stay or go up
        let p = jump_probabilities_bruteforce(1, 0, 2).unwrap();
        assert_eq!(
            p,
            JumpProbabilities {
                down: QRat::zero(),
                stay: qfrac(2, 3),
                up: qfrac(1, 3)
            }
        );
        let p = jump_probabilities_bruteforce(1, 1, 2).unwrap();
        assert_eq!(
            p,
            JumpProbabilities {
                down: qfrac(2, 3),
                stay: qfrac(1, 3),
                up: QRat::zero()
            }
        );

        // k=0 never goes down; rows always sum to exactly 1
        for n in 1..=4usize {
            let p = jump_probabilities_bruteforce(n, 0, 2).unwrap();
            assert!(p.down.is_zero());
            assert_eq!(p.sum(), QRat::one());
        }

        // frozen oracle values at q=2
        let p = jump_probabilities_bruteforce(3, 1, 2).unwrap();
        assert_eq!(p.down, qfrac(32, 105));
        assert_eq!(p.stay, qfrac(64, 105));
        assert_eq!(p.up, qfrac(3, 35));

        // q=2, n=4, k=1: p_down within 0.1 of the limit (1 - 1/2)^2
        let p = jump_probabilities_bruteforce(4, 1, 2).unwrap();
        assert_eq!(p.down, qfrac(128, 465));
        let dev = crate::verify::rat_to_f64(&(p.down - qfrac(1, 4)));
        assert!(dev.abs() < 0.1);

        assert!(matches!(
            jump_probabilities_bruteforce(12, 1, 2),
            Err(SpectralError::TooLarge(_))
        ));
        assert!(matches!(
            jump_probabilities_bruteforce(2, 3, 2),
            Err(SpectralError::ParameterOutOfRange(_))
        ));
    }

    #[test]
    fn walk_is_deterministic_and_near_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let traj = markov_walk(2, 0, 200_000, &mut rng);
        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let traj2 = markov_walk(2, 0, 200_000, &mut rng2);
        assert_eq!(traj, traj2);

        let occ = occupancy(&traj);
        let expect = stationary_frequencies(2, occ.len() - 1);
        assert!((occ[0] - expect[0]).abs() < 0.015, "occ[0] = {}", occ[0]);
        assert!((occ[1] - expect[1]).abs() < 0.015);
    }

    #[test]
    fn mc_orbit_distribution_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let d = mc_orbit_distribution(1, 2, 30_000, &mut rng);
        assert_eq!(d.exact, vec![qfrac(2, 3), qfrac(1, 3)]);
        assert!(d.within(3.0));
    }

    #[test]
    fn averaging_matrix_exact_properties() {
        let a = finite_averaging_matrix(3, 2).unwrap();
        assert!(a.is_stochastic());
        // 1 is an exact root of the characteristic polynomial
        assert!(a.char_poly_at(&QRat::one()).is_zero());
        // leading coefficient 1, degree n+1
        let cp = a.char_poly();
        assert_eq!(cp.len(), 5);
        assert_eq!(cp[4], QRat::one());

        let eig = a.eigenvalues();
        assert_eq!(eig.len(), 4);
        assert!((eig[0] - 1.0).abs() < 1e-12);
        assert!(eig.iter().all(|&l| (-1.0 - 1e-12..=1.0 + 1e-12).contains(&l)));
        // reference list exists for side-by-side reporting
        assert_eq!(a.hahn_reference_eigenvalues().len(), 4);
    }

    #[test]
    fn two_step_flag_law_mass() {
        let law = two_step_flag_law(4, 2, 2).unwrap();
        let mass: QRat = law.iter().map(|(_, _, _, w)| w.clone()).sum();
        assert_eq!(mass, QRat::one());
        assert_eq!(law.len(), 35 * 3 * 7);
    }

    #[test]
    fn flag_sampler_reproduces_jump_law() {
        // drawing a hyperplane then an overspace from a fixed representative
        // is the same experiment the brute-force oracle enumerates
        use crate::grassmann::{sample_flag, standard_w, FlagStep};
        use crate::linalg::MatrixFq;

        let n = 3;
        let k = 1;
        let q = 2u64;
        let spec = crate::gf::FieldSpec::of_order(q).unwrap();
        let mut rep = MatrixFq::zeros(&spec, n, 2 * n);
        for (row, j) in (k..n).enumerate() {
            rep.set_code(row, j, 1);
        }
        rep.set_code(n - 1, n, 1);
        let l = crate::linalg::Subspace::from_matrix(&rep);
        let w = standard_w(&spec, n);
        assert_eq!(l.intersect(&w).dim(), k);

        let exact = jump_probabilities_bruteforce(n, k, q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let trials = 20_000u64;
        let mut tally = [0u64; 3];
        for _ in 0..trials {
            let chain = sample_flag(&l, &[FlagStep::Down, FlagStep::Up], &mut rng).unwrap();
            let delta = chain[2].intersect(&w).dim() as i64 - k as i64;
            tally[(delta + 1) as usize] += 1;
        }
        for (count, p) in tally.iter().zip([&exact.down, &exact.stay, &exact.up]) {
            let p = crate::verify::rat_to_f64(p);
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            let dev = (*count as f64 / trials as f64 - p).abs();
            assert!(dev <= 4.0 * se.max(1e-9), "dev {dev} vs se {se}");
        }
    }
}
