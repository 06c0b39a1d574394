//! Finite Grassmannians `Gr(m, k)` over `F_q`: counting, enumeration,
//! parabolic orbits, the `(Omega, Xi)` chart atlas, the Möbius action on
//! chart coordinates, uniform sampling, and uniform flag steps.
//!
//! Conventions, used throughout the crate:
//!
//! - vectors are rows; subspaces are row spaces ([`Subspace`]);
//! - in the doubled space `F_q^(2n)`, coordinates `0..n` form the `V`-block
//!   (basis `e_0..e_{n-1}`) and coordinates `n..2n` the `W`-block
//!   (basis `f_0..f_{n-1}`);
//! - all index sets are 0-based;
//! - counts are exact big integers, measures exact big rationals.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::gf::FieldSpec;
use crate::linalg::{MatrixFq, Subspace};
use crate::qseries::QRat;

/// Default ceiling on how many subspaces [`Grassmannian::enumerate`] will
/// agree to stream.
pub const ENUM_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrassmannError {
    #[error("enumeration of {count} subspaces exceeds the cap of {cap}")]
    TooLarge { count: BigUint, cap: u64 },
    #[error("the Möbius denominator a + T c is singular")]
    Singular,
    #[error("flag pattern leaves the dimension range 0..={0}")]
    PatternOutOfRange(usize),
}

/// Number of elements of `GL(m, F_q)`: `prod_{j=0}^{m-1} (q^m - q^j)`.
pub fn gl_count(m: usize, q: u64) -> BigUint {
    let q = BigUint::from(q);
    let qm = q.pow(m as u32);
    let mut acc = BigUint::one();
    for j in 0..m {
        acc *= &qm - q.pow(j as u32);
    }
    acc
}

/// Number of k-dimensional subspaces of `F_q^m` (Gaussian binomial):
/// `prod_{j=0}^{k-1} (q^(m-j) - 1) / (q^(k-j) - 1)`.
pub fn grassmannian_count(m: usize, k: usize, q: u64) -> BigUint {
    assert!(k <= m, "subspace dimension exceeds ambient dimension");
    let q = BigUint::from(q);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for j in 0..k {
        num *= q.pow((m - j) as u32) - BigUint::one();
        den *= q.pow((k - j) as u32) - BigUint::one();
    }
    let (quot, rem) = num.div_rem(&den);
    debug_assert!(rem.is_zero());
    quot
}

/// Number of `L` in `Gr(2n, n)` with `dim(L ∩ W) = k`, where `W` is the
/// second coordinate block:
/// `q^(n^2-k^2) * prod_{j=n-k+1}^{n} (1-q^-j)^2 / prod_{j=1}^{k} (1-q^-j)^2`,
/// always an exact integer.
pub fn orbit_count(n: usize, k: usize, q: u64) -> BigUint {
    assert!(k <= n, "orbit index exceeds n");
    let qr = QRat::from_integer(BigInt::from(q));
    let mut acc = crate::qseries::qpow(&qr, (n * n) as i64 - (k * k) as i64);
    for j in (n - k + 1)..=n {
        let f = QRat::one() - crate::qseries::qpow(&qr, -(j as i64));
        acc *= &f * &f;
    }
    for j in 1..=k {
        let f = QRat::one() - crate::qseries::qpow(&qr, -(j as i64));
        acc /= &f * &f;
    }
    assert!(acc.is_integer(), "orbit count must be an integer");
    acc.to_integer().to_biguint().expect("orbit count is nonnegative")
}

/// Uniform measure normalized so every full chart has mass 1:
/// `mu_n(S) = #S / q^(n^2)`.
pub fn mu_n(count: &BigUint, n: usize, q: u64) -> QRat {
    QRat::new(
        BigInt::from(count.clone()),
        BigInt::from(q).pow((n * n) as u32),
    )
}

/// The coordinate block `V = span(e_0..e_{n-1})` inside `F_q^(2n)`.
pub fn standard_v(spec: &FieldSpec, n: usize) -> Subspace {
    let mut m = MatrixFq::zeros(spec, n, 2 * n);
    for i in 0..n {
        m.set_code(i, i, 1);
    }
    Subspace::from_matrix(&m)
}

/// The coordinate block `W = span(f_0..f_{n-1})` inside `F_q^(2n)`.
pub fn standard_w(spec: &FieldSpec, n: usize) -> Subspace {
    let mut m = MatrixFq::zeros(spec, n, 2 * n);
    for i in 0..n {
        m.set_code(i, n + i, 1);
    }
    Subspace::from_matrix(&m)
}

/// Parabolic orbit index of `L` in `Gr(2n, n)`: `dim(L ∩ W)`.
pub fn orbit_index(l: &Subspace, n: usize) -> usize {
    assert_eq!(l.ambient_dim(), 2 * n, "ambient dimension must be 2n");
    l.intersect(&standard_w(l.spec(), n)).dim()
}

/// The Grassmannian `Gr(m, k)` of `k`-dimensional subspaces of `F_q^m`.
#[derive(Clone, Debug)]
pub struct Grassmannian {
    spec: FieldSpec,
    ambient: usize,
    dim: usize,
}

impl Grassmannian {
    pub fn new(spec: &FieldSpec, ambient: usize, dim: usize) -> Grassmannian {
        assert!(dim <= ambient, "subspace dimension exceeds ambient dimension");
        Grassmannian {
            spec: spec.clone(),
            ambient,
            dim,
        }
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn subspace_dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> BigUint {
        grassmannian_count(self.ambient, self.dim, self.spec.order() as u64)
    }

    /// Stream every subspace exactly once, by RREF pivot pattern: pivot
    /// column sets in lexicographic order, free entries in odometer order.
    pub fn enumerate(&self) -> Result<SubspaceEnumerator, GrassmannError> {
        self.enumerate_capped(ENUM_CAP)
    }

    pub fn enumerate_capped(&self, cap: u64) -> Result<SubspaceEnumerator, GrassmannError> {
        let count = self.count();
        if count > BigUint::from(cap) {
            return Err(GrassmannError::TooLarge { count, cap });
        }
        Ok(SubspaceEnumerator::new(self))
    }

    /// Uniform random subspace by rejection: draw a `k x m` matrix with
    /// i.i.d. uniform entries and keep it if its rank is `k`. Every subspace
    /// has exactly `#GL(k)` full-rank spanning matrices, so accepted draws
    /// are uniform; the acceptance probability is at least
    /// `prod_{j>=1} (1 - q^-j) > 0.288`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Subspace {
        let q = self.spec.order();
        loop {
            let codes: Vec<u32> = (0..self.dim * self.ambient)
                .map(|_| rng.gen_range(0..q))
                .collect();
            let m = MatrixFq::from_codes(&self.spec, self.dim, self.ambient, &codes);
            let sp = Subspace::from_matrix(&m);
            if sp.dim() == self.dim {
                return sp;
            }
        }
    }
}

/// Lazy enumerator behind [`Grassmannian::enumerate`].
pub struct SubspaceEnumerator {
    spec: FieldSpec,
    ambient: usize,
    dim: usize,
    pivots: Vec<usize>,
    free_pos: Vec<(usize, usize)>,
    counter: Vec<u32>,
    exhausted: bool,
}

impl SubspaceEnumerator {
    fn new(g: &Grassmannian) -> SubspaceEnumerator {
        let pivots: Vec<usize> = (0..g.dim).collect();
        let mut e = SubspaceEnumerator {
            spec: g.spec.clone(),
            ambient: g.ambient,
            dim: g.dim,
            pivots,
            free_pos: Vec::new(),
            counter: Vec::new(),
            exhausted: g.dim > g.ambient,
        };
        if !e.exhausted {
            e.reset_pattern();
        }
        e
    }

    fn reset_pattern(&mut self) {
        self.free_pos.clear();
        for (i, &p) in self.pivots.iter().enumerate() {
            for j in p + 1..self.ambient {
                if !self.pivots.contains(&j) {
                    self.free_pos.push((i, j));
                }
            }
        }
        self.counter = vec![0; self.free_pos.len()];
    }

    fn build(&self) -> Subspace {
        let mut m = MatrixFq::zeros(&self.spec, self.dim, self.ambient);
        for (i, &p) in self.pivots.iter().enumerate() {
            m.set_code(i, p, 1);
        }
        for (&(i, j), &v) in self.free_pos.iter().zip(&self.counter) {
            m.set_code(i, j, v);
        }
        // already in RREF by construction; canonicalization is a no-op
        Subspace::from_matrix(&m)
    }

    fn advance(&mut self) {
        let q = self.spec.order();
        // odometer over free entries, position 0 fastest
        for c in self.counter.iter_mut() {
            *c += 1;
            if *c < q {
                return;
            }
            *c = 0;
        }
        // next pivot combination in lexicographic order
        let k = self.pivots.len();
        let m = self.ambient;
        let mut i = k;
        loop {
            if i == 0 {
                self.exhausted = true;
                return;
            }
            i -= 1;
            if self.pivots[i] != i + m - k {
                self.pivots[i] += 1;
                for j in i + 1..k {
                    self.pivots[j] = self.pivots[j - 1] + 1;
                }
                self.reset_pattern();
                return;
            }
        }
    }
}

impl Iterator for SubspaceEnumerator {
    type Item = Subspace;

    fn next(&mut self) -> Option<Subspace> {
        if self.exhausted {
            return None;
        }
        let out = self.build();
        self.advance();
        Some(out)
    }
}

/// A chart `M[Omega, Xi]` of `Gr(2n, n)`: the set of subspaces that are
/// graphs of operators `V[Omega, Xi] -> W[Omega, Xi]`, where
/// `V[Omega, Xi] = span(e_i : i not in Omega) + span(f_j : j in Xi)` and
/// `W[Omega, Xi]` is the complementary block. Charts that meet `Gr(2n, n)`
/// have `#Omega = #Xi`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChartIndex {
    pub omega: BTreeSet<usize>,
    pub xi: BTreeSet<usize>,
}

impl ChartIndex {
    pub fn new<I, J>(omega: I, xi: J) -> ChartIndex
    where
        I: IntoIterator<Item = usize>,
        J: IntoIterator<Item = usize>,
    {
        ChartIndex {
            omega: omega.into_iter().collect(),
            xi: xi.into_iter().collect(),
        }
    }

    pub fn standard() -> ChartIndex {
        ChartIndex::new([], [])
    }

    /// All charts with `Omega, Xi ⊆ {0..n-1}` and `#Omega = #Xi` — the
    /// family whose members meet `Gr(2n, n)`.
    pub fn all_balanced(n: usize) -> Vec<ChartIndex> {
        let subsets: Vec<BTreeSet<usize>> = (0..1u32 << n)
            .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
            .collect();
        let mut out = Vec::new();
        for o in &subsets {
            for x in &subsets {
                if o.len() == x.len() {
                    out.push(ChartIndex {
                        omega: o.clone(),
                        xi: x.clone(),
                    });
                }
            }
        }
        out
    }

    /// Columns of `F_q^(2n)` forming the `V[Omega, Xi]` block, in basis
    /// order: `e_i (i not in Omega)` ascending, then `f_j (j in Xi)`.
    pub fn v_cols(&self, n: usize) -> Vec<usize> {
        let mut cols: Vec<usize> = (0..n).filter(|i| !self.omega.contains(i)).collect();
        cols.extend(self.xi.iter().map(|&j| n + j));
        cols
    }

    /// Columns of the complementary `W[Omega, Xi]` block: `e_i (i in Omega)`
    /// ascending, then `f_j (j not in Xi)`.
    pub fn w_cols(&self, n: usize) -> Vec<usize> {
        let mut cols: Vec<usize> = self.omega.iter().copied().collect();
        cols.extend((0..n).filter(|j| !self.xi.contains(j)).map(|j| n + j));
        cols
    }
}

/// If the projection of `L` onto `V[Omega, Xi]` along `W[Omega, Xi]` is
/// bijective, the unique coordinate matrix `T` with `L = graph(T)`; absent
/// otherwise. Rows of `T` follow the `v_cols` basis order, columns `w_cols`.
pub fn chart_membership(l: &Subspace, chart: &ChartIndex, n: usize) -> Option<MatrixFq> {
    assert_eq!(l.ambient_dim(), 2 * n);
    let v_cols = chart.v_cols(n);
    if l.dim() != v_cols.len() {
        return None;
    }
    let pv = l.basis().select_cols(&v_cols);
    let pv_inv = pv.inverse()?;
    let pw = l.basis().select_cols(&chart.w_cols(n));
    Some(pv_inv.mul(&pw))
}

/// The subspace `graph(T)` in the chart `M[Omega, Xi]` — the inverse of
/// [`chart_membership`].
pub fn graph_subspace(t: &MatrixFq, chart: &ChartIndex, n: usize) -> Subspace {
    let v_cols = chart.v_cols(n);
    let w_cols = chart.w_cols(n);
    assert_eq!(t.rows(), v_cols.len(), "coordinate rows mismatch");
    assert_eq!(t.cols(), w_cols.len(), "coordinate cols mismatch");
    let mut m = MatrixFq::zeros(t.spec(), v_cols.len(), 2 * n);
    for (r, &vc) in v_cols.iter().enumerate() {
        m.set_code(r, vc, 1);
        for (c, &wc) in w_cols.iter().enumerate() {
            m.set_code(r, wc, t.code_at(r, c));
        }
    }
    Subspace::from_matrix(&m)
}

/// The four n-blocks of a `2n x 2n` matrix.
pub fn blocks(g: &MatrixFq, n: usize) -> (MatrixFq, MatrixFq, MatrixFq, MatrixFq) {
    assert_eq!((g.rows(), g.cols()), (2 * n, 2 * n));
    let cols_v: Vec<usize> = (0..n).collect();
    let cols_w: Vec<usize> = (n..2 * n).collect();
    let take = |r0: usize, cols: &[usize]| {
        let mut m = MatrixFq::zeros(g.spec(), n, n);
        for i in 0..n {
            for (jj, &j) in cols.iter().enumerate() {
                m.set_code(i, jj, g.code_at(r0 + i, j));
            }
        }
        m
    };
    (take(0, &cols_v), take(0, &cols_w), take(n, &cols_v), take(n, &cols_w))
}

/// Möbius (linear-fractional) action on standard-chart coordinates:
/// `T  |->  (a + T c)^(-1) (b + T d)` for `g = (a b; c d)`, defined where
/// `a + T c` is invertible. On its domain the action satisfies
/// `graph(T) * g = graph(result)` as subspaces.
pub fn moebius_action(t: &MatrixFq, g: &MatrixFq) -> Result<MatrixFq, GrassmannError> {
    let n = t.rows();
    assert_eq!(t.cols(), n, "coordinate matrix must be square");
    let (a, b, c, d) = blocks(g, n);
    let denom = a.add(&t.mul(&c));
    let inv = denom.inverse().ok_or(GrassmannError::Singular)?;
    Ok(inv.mul(&b.add(&t.mul(&d))))
}

/// All codimension-1 subspaces of `L`: one per projective functional on `L`,
/// `(q^dim - 1)/(q - 1)` in total.
pub fn hyperplanes(l: &Subspace) -> Vec<Subspace> {
    let d = l.dim();
    assert!(d >= 1, "hyperplanes of the zero subspace");
    let spec = l.spec().clone();
    let q = spec.order();
    let mut out = Vec::new();
    // normalized functionals: first nonzero coordinate equal to 1
    let mut alpha = vec![0u32; d];
    for first in (0..d).rev() {
        alpha[first] = 1;
        loop {
            out.push(functional_kernel(l, &alpha));
            // odometer over coordinates after `first`
            let mut pos = first + 1;
            loop {
                if pos == d {
                    break;
                }
                alpha[pos] += 1;
                if alpha[pos] < q {
                    break;
                }
                alpha[pos] = 0;
                pos += 1;
            }
            if pos == d {
                break;
            }
        }
        for a in alpha.iter_mut() {
            *a = 0;
        }
    }
    out
}

/// Kernel of a nonzero functional `alpha` on the coefficient space of `L`.
fn functional_kernel(l: &Subspace, alpha: &[u32]) -> Subspace {
    let spec = l.spec().clone();
    let d = l.dim();
    let first = alpha.iter().position(|&a| a != 0).expect("nonzero functional");
    let inv = spec.vinv(alpha[first]).unwrap();
    let mut rows: Vec<Vec<u32>> = Vec::with_capacity(d - 1);
    for i in 0..d {
        if i == first {
            continue;
        }
        // x = e_i - (alpha_i / alpha_first) e_first annihilates alpha
        let coef = spec.vmul(alpha[i], inv);
        let mut v = l.basis().row_codes(i).to_vec();
        if coef != 0 {
            for (jv, &bfirst) in v.iter_mut().zip(l.basis().row_codes(first)) {
                *jv = spec.vsub(*jv, spec.vmul(coef, bfirst));
            }
        }
        rows.push(v);
    }
    let refs: Vec<&[u32]> = rows.iter().map(|v| v.as_slice()).collect();
    Subspace::span(&spec, l.ambient_dim(), &refs)
}

/// All subspaces `M ⊇ K` with `dim M = dim K + 1`:
/// `(q^(m - dim) - 1)/(q - 1)` of them.
pub fn overspaces(k: &Subspace) -> Vec<Subspace> {
    let m = k.ambient_dim();
    let d = k.dim();
    assert!(d < m, "overspaces of the full space");
    let spec = k.spec().clone();
    let q = spec.order();
    let pivots = k.pivots();
    let free_cols: Vec<usize> = (0..m).filter(|c| !pivots.contains(c)).collect();
    let nf = free_cols.len();
    let mut out = Vec::new();
    let mut w = vec![0u32; nf];
    for first in (0..nf).rev() {
        w[first] = 1;
        loop {
            let mut v = vec![0u32; m];
            for (&c, &val) in free_cols.iter().zip(&w) {
                v[c] = val;
            }
            out.push(k.sum(&Subspace::span(&spec, m, &[&v])));
            let mut pos = first + 1;
            loop {
                if pos == nf {
                    break;
                }
                w[pos] += 1;
                if w[pos] < q {
                    break;
                }
                w[pos] = 0;
                pos += 1;
            }
            if pos == nf {
                break;
            }
        }
        for x in w.iter_mut() {
            *x = 0;
        }
    }
    out
}

/// Uniform random hyperplane of `L`: a uniform nonzero functional (each
/// hyperplane has exactly `q - 1` of them).
pub fn sample_hyperplane<R: Rng + ?Sized>(l: &Subspace, rng: &mut R) -> Subspace {
    let q = l.spec().order();
    let d = l.dim();
    assert!(d >= 1);
    loop {
        let alpha: Vec<u32> = (0..d).map(|_| rng.gen_range(0..q)).collect();
        if alpha.iter().any(|&a| a != 0) {
            return functional_kernel(l, &alpha);
        }
    }
}

/// Uniform random overspace of `K` (each has exactly `q - 1` nonzero
/// complement-coordinate representatives).
pub fn sample_overspace<R: Rng + ?Sized>(k: &Subspace, rng: &mut R) -> Subspace {
    let m = k.ambient_dim();
    let q = k.spec().order();
    assert!(k.dim() < m);
    let pivots = k.pivots();
    let free_cols: Vec<usize> = (0..m).filter(|c| !pivots.contains(c)).collect();
    loop {
        let w: Vec<u32> = (0..free_cols.len()).map(|_| rng.gen_range(0..q)).collect();
        if w.iter().any(|&x| x != 0) {
            let mut v = vec![0u32; m];
            for (&c, &val) in free_cols.iter().zip(&w) {
                v[c] = val;
            }
            return k.sum(&Subspace::span(k.spec(), m, &[&v]));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlagStep {
    Up,
    Down,
}

/// Random nested chain from `start`: at each step draw a uniform hyperplane
/// (`Down`) or a uniform overspace (`Up`). Consecutive entries differ by
/// codimension 1.
pub fn sample_flag<R: Rng + ?Sized>(
    start: &Subspace,
    pattern: &[FlagStep],
    rng: &mut R,
) -> Result<Vec<Subspace>, GrassmannError> {
    let m = start.ambient_dim();
    // validate the whole pattern up front
    let mut d = start.dim() as i64;
    for step in pattern {
        d += match step {
            FlagStep::Up => 1,
            FlagStep::Down => -1,
        };
        if d < 0 || d > m as i64 {
            return Err(GrassmannError::PatternOutOfRange(m));
        }
    }
    let mut flag = vec![start.clone()];
    for step in pattern {
        let last = flag.last().unwrap();
        let next = match step {
            FlagStep::Down => sample_hyperplane(last, rng),
            FlagStep::Up => sample_overspace(last, rng),
        };
        flag.push(next);
    }
    Ok(flag)
}
