//! A computable model of the semi-infinite Grassmannian and its symmetry
//! group.
//!
//! The doubled space has basis `e_0, e_1, ...` (the discrete block `l`) and
//! `f_0, f_1, ...` (the compact block). Internally both chains are threaded
//! onto a single two-sided index: `e_i` sits at `z = -1-i`, `f_j` at `z = j`,
//! so the shift `J` (`e_{i+1} -> e_i`, `e_0 -> f_0`, `f_j -> f_{j+1}`) is
//! `z -> z+1`. Everything eventually-stable then lives in a finite window of
//! `z`, and all computations are exact windowed linear algebra over `F_q`.
//!
//! Three kinds of objects:
//!
//! - [`ChartPoint`] — a subspace `graph(T)` for a finitely supported
//!   coordinate matrix `T : V[Omega, Xi] -> W[Omega, Xi]`; beyond its support
//!   it coincides with the standard `e`-tail.
//! - [`StableOperator`] — an operator on `l` equal to an index shift outside
//!   a finite corner, with Fredholm data. The index convention is
//!   `ind = dim ker - dim coker`, which makes `theta(J) = +1` and
//!   `Dim(L g) = Dim(L) + theta(g)` hold simultaneously.
//! - [`StableGroupElement`] — an invertible operator on the doubled space of
//!   the form `J^s` composed with a finite invertible window corner.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::gf::FieldSpec;
use crate::linalg::{MatrixFq, Subspace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemiInfError {
    #[error("invalid chart support: {0}")]
    InvalidSupport(String),
    #[error("corner matrix is singular")]
    SingularCorner,
    #[error("truncation window {given} too small, need at least {needed}")]
    WindowTooSmall { needed: usize, given: usize },
    #[error("no chart found within the truncation window")]
    ChartSearchExhausted,
    #[error("element has nonzero shift invariant theta = {0}")]
    ThetaNonzero(i64),
}

/// A basis vector of the doubled space: `E(i)` is `e_i`, `F(j)` is `f_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BasisLabel {
    E(usize),
    F(usize),
}

impl BasisLabel {
    /// Two-sided index: `e_i` at `-1-i`, `f_j` at `j`.
    pub fn z(&self) -> i64 {
        match *self {
            BasisLabel::E(i) => -1 - i as i64,
            BasisLabel::F(j) => j as i64,
        }
    }

    pub fn from_z(z: i64) -> BasisLabel {
        if z >= 0 {
            BasisLabel::F(z as usize)
        } else {
            BasisLabel::E((-1 - z) as usize)
        }
    }

    pub fn natural_index(&self) -> usize {
        match *self {
            BasisLabel::E(i) => i,
            BasisLabel::F(j) => j,
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BasisLabel::E(i) => write!(f, "e{i}"),
            BasisLabel::F(j) => write!(f, "f{j}"),
        }
    }
}

/// A point of the chart `M[Omega, Xi]`: the subspace spanned by
/// `v + vT` for `v` in `V[Omega, Xi] = span(e_i : i not in Omega) +
/// span(f_j : j in Xi)`, with `T` finitely supported. Rows of the sparse
/// support are labels of `V[Omega, Xi]` basis vectors, columns labels of the
/// complementary `W[Omega, Xi]` basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartPoint {
    spec: FieldSpec,
    omega: BTreeSet<usize>,
    xi: BTreeSet<usize>,
    entries: BTreeMap<(BasisLabel, BasisLabel), u32>,
}

impl ChartPoint {
    pub fn new(
        spec: &FieldSpec,
        omega: BTreeSet<usize>,
        xi: BTreeSet<usize>,
        entries: BTreeMap<(BasisLabel, BasisLabel), u32>,
    ) -> Result<ChartPoint, SemiInfError> {
        for (&(row, col), &val) in &entries {
            let row_ok = match row {
                BasisLabel::E(i) => !omega.contains(&i),
                BasisLabel::F(j) => xi.contains(&j),
            };
            let col_ok = match col {
                BasisLabel::E(i) => omega.contains(&i),
                BasisLabel::F(j) => !xi.contains(&j),
            };
            if !row_ok || !col_ok {
                return Err(SemiInfError::InvalidSupport(format!(
                    "entry ({row}, {col}) is not a V x W pair for the chart"
                )));
            }
            if val == 0 || val >= spec.order() {
                return Err(SemiInfError::InvalidSupport(format!(
                    "entry ({row}, {col}) has value {val} outside 1..{}",
                    spec.order()
                )));
            }
        }
        Ok(ChartPoint {
            spec: spec.clone(),
            omega,
            xi,
            entries,
        })
    }

    /// The origin (`T = 0`) of `M[Omega, Xi]`.
    pub fn origin<I, J>(spec: &FieldSpec, omega: I, xi: J) -> ChartPoint
    where
        I: IntoIterator<Item = usize>,
        J: IntoIterator<Item = usize>,
    {
        ChartPoint::new(
            spec,
            omega.into_iter().collect(),
            xi.into_iter().collect(),
            BTreeMap::new(),
        )
        .expect("empty support is always valid")
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn omega(&self) -> &BTreeSet<usize> {
        &self.omega
    }

    pub fn xi(&self) -> &BTreeSet<usize> {
        &self.xi
    }

    pub fn entries(&self) -> &BTreeMap<(BasisLabel, BasisLabel), u32> {
        &self.entries
    }

    /// Largest natural index appearing anywhere in the chart data.
    pub fn max_natural_index(&self) -> usize {
        let mut m = 0;
        for &i in self.omega.iter().chain(self.xi.iter()) {
            m = m.max(i);
        }
        for &(r, c) in self.entries.keys() {
            m = m.max(r.natural_index()).max(c.natural_index());
        }
        m
    }

    fn v_labels_in_window(&self, lo: i64, hi: i64) -> Vec<BasisLabel> {
        // e's ascending, then f's ascending — the chart coordinate order
        let mut v = Vec::new();
        let mut i = 0usize;
        while -1 - (i as i64) >= lo {
            if !self.omega.contains(&i) {
                v.push(BasisLabel::E(i));
            }
            i += 1;
        }
        for &j in &self.xi {
            debug_assert!((j as i64) <= hi);
            v.push(BasisLabel::F(j));
        }
        v
    }

    /// Matrix of the subspace over the z-window `lo..=hi` (columns indexed
    /// `z - lo`). Rows are the graph rows of the window's `V`-basis labels.
    fn window_matrix(&self, lo: i64, hi: i64) -> MatrixFq {
        debug_assert!(lo <= -1 && hi >= 0);
        let width = (hi - lo + 1) as usize;
        let v_labels = self.v_labels_in_window(lo, hi);
        let mut m = MatrixFq::zeros(&self.spec, v_labels.len(), width);
        for (r, label) in v_labels.iter().enumerate() {
            m.set_code(r, (label.z() - lo) as usize, 1);
            for (&(row, col), &val) in &self.entries {
                if row == *label {
                    debug_assert!(col.z() >= lo && col.z() <= hi);
                    m.set_code(r, (col.z() - lo) as usize, val);
                }
            }
        }
        m
    }

    /// Truncation to `F_q^(2n)`: the image of the subspace in the window of
    /// the first `n` `e`- and `f`-coordinates (`e_i -> `coordinate `i`,
    /// `f_j -> n + j`). Requires `n` to exceed every index in the chart data.
    pub fn truncate(&self, n: usize) -> Result<Subspace, SemiInfError> {
        let needed = self.max_natural_index() + 1;
        if n < needed {
            return Err(SemiInfError::WindowTooSmall { needed, given: n });
        }
        let lo = -(n as i64);
        let hi = n as i64 - 1;
        let m = self.window_matrix(lo, hi);
        // reorder z-columns into (e_0..e_{n-1}, f_0..f_{n-1})
        let mut cols = Vec::with_capacity(2 * n);
        for i in 0..n {
            cols.push((BasisLabel::E(i).z() - lo) as usize);
        }
        for j in 0..n {
            cols.push((BasisLabel::F(j).z() - lo) as usize);
        }
        Ok(Subspace::from_matrix(&m.select_cols(&cols)))
    }

    /// Relative dimension, computed inside a faithful truncation window as
    /// `dim(L ∩ W) - dim(V / p(L))` where `p` projects onto the `e`-block
    /// along the `f`-block. Always equals `#Xi - #Omega`.
    pub fn relative_dimension(&self) -> i64 {
        let n = self.max_natural_index() + 1;
        let l = self.truncate(n).expect("window is large enough by construction");
        let w = crate::grassmann::standard_w(&self.spec, n);
        let dim_lw = l.intersect(&w).dim() as i64;
        let v_cols: Vec<usize> = (0..n).collect();
        let p_rank = l.basis().select_cols(&v_cols).rank() as i64;
        let dim = dim_lw - (n as i64 - p_rank);
        debug_assert_eq!(dim, self.xi.len() as i64 - self.omega.len() as i64);
        dim
    }

    /// Image under a stable group element, re-expressed in the first chart —
    /// in increasing order of max chart index, then of `#Omega`, then
    /// lexicographic — whose projection is bijective.
    pub fn apply(&self, g: &StableGroupElement) -> Result<ChartPoint, SemiInfError> {
        assert_eq!(&self.spec, g.spec(), "field spec mismatch");
        let s = g.shift;
        let (g_lo, g_hi) = g.window_span();
        let p_hi = self.max_natural_index() as i64; // f-side extent
        let p_lo = -1 - p_hi; // e-side extent
        let margin = s.abs() + 1;
        let lo = [p_lo, g_lo, g_lo - s, -1]
            .into_iter()
            .min()
            .unwrap()
            - margin;
        let hi = [p_hi, g_hi, g_hi - s, 0].into_iter().max().unwrap() + margin;

        let src = self.window_matrix(lo, hi);
        let gm = g.window_matrix(lo, hi);
        let img = src.mul(&gm);
        // image columns are indexed by z' - (lo + s) for z' in [lo+s, hi+s]
        let img_lo = lo + s;
        let img_hi = hi + s;

        let dim0 = self.relative_dimension() + s;
        let e_depth = (-1 - img_lo) as usize; // e-labels 0..=e_depth available
        let f_depth = img_hi as usize;

        let col_of = |label: BasisLabel| -> usize { (label.z() - img_lo) as usize };

        let t_limit = e_depth.max(f_depth) + 1;
        for t in 0..=t_limit {
            // all (Omega', Xi') with max natural index t-1 (t = 0: both empty)
            let omega_masks = subsets_with_bound(t, e_depth);
            let xi_masks = subsets_with_bound(t, f_depth);
            let mut candidates: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
            for om in &omega_masks {
                for xm in &xi_masks {
                    if t > 0 {
                        let top = t - 1;
                        if !om.contains(&top) && !xm.contains(&top) {
                            continue; // max index below t-1: already tried
                        }
                    }
                    if xm.len() as i64 - om.len() as i64 != dim0 {
                        continue;
                    }
                    candidates.push((om.clone(), xm.clone()));
                }
            }
            candidates.sort_by_key(|(om, xm)| (om.len(), om.clone(), xm.clone()));

            for (om, xm) in candidates {
                let omega: BTreeSet<usize> = om.iter().copied().collect();
                let xi: BTreeSet<usize> = xm.iter().copied().collect();
                // V'-labels inside the image window, chart coordinate order
                let mut v_labels: Vec<BasisLabel> = (0..=e_depth)
                    .filter(|i| !omega.contains(i))
                    .map(BasisLabel::E)
                    .collect();
                v_labels.extend(xi.iter().map(|&j| BasisLabel::F(j)));
                if v_labels.len() != img.rows() {
                    continue;
                }
                let v_cols: Vec<usize> = v_labels.iter().map(|&l| col_of(l)).collect();
                let Some(pv_inv) = img.select_cols(&v_cols).inverse() else {
                    continue;
                };
                let mut w_labels: Vec<BasisLabel> =
                    omega.iter().map(|&i| BasisLabel::E(i)).collect();
                w_labels.extend((0..=f_depth).filter(|j| !xi.contains(j)).map(BasisLabel::F));
                let w_cols: Vec<usize> = w_labels.iter().map(|&l| col_of(l)).collect();
                let t_mat = pv_inv.mul(&img.select_cols(&w_cols));
                let mut entries = BTreeMap::new();
                for (r, &vl) in v_labels.iter().enumerate() {
                    for (c, &wl) in w_labels.iter().enumerate() {
                        let val = t_mat.code_at(r, c);
                        if val != 0 {
                            entries.insert((vl, wl), val);
                        }
                    }
                }
                let out = ChartPoint::new(&self.spec, omega, xi, entries)?;
                debug_assert_eq!(out.relative_dimension(), dim0);
                return Ok(out);
            }
        }
        Err(SemiInfError::ChartSearchExhausted)
    }
}

/// All subsets of `{0..t}` as sorted vectors, restricted to elements
/// `<= bound`; empty when `t > 0` but no element fits.
fn subsets_with_bound(t: usize, bound: usize) -> Vec<Vec<usize>> {
    let universe: Vec<usize> = (0..t).filter(|&i| i <= bound).collect();
    let n = universe.len();
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0..(1u32 << n) {
        out.push(
            (0..n)
                .filter(|&b| mask >> b & 1 == 1)
                .map(|b| universe[b])
                .collect(),
        );
    }
    out
}

/// An operator `l -> l` equal to the tail shift `e_{M+t} -> e_{M'+t}`
/// outside its `M x M'` corner. Composition and kernel data never need the
/// tail beyond a computable window.
#[derive(Clone)]
pub struct StableOperator {
    corner: MatrixFq,
}

impl fmt::Debug for StableOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "StableOperator(corner {}x{}, index {})",
            self.corner.rows(),
            self.corner.cols(),
            self.index()
        )
    }
}

/// Canonical factorization `A = g1 * J * g2` of a stable operator: `g1`,
/// `g2` invertible, `J` with corner `[[0,0],[0,I]]` whose zero row count is
/// `dim ker A` and zero column count is `dim coker A`.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub g1: StableOperator,
    pub j_form: StableOperator,
    pub g2: StableOperator,
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
}

impl StableOperator {
    pub fn identity(spec: &FieldSpec) -> StableOperator {
        StableOperator {
            corner: MatrixFq::zeros(spec, 0, 0),
        }
    }

    pub fn from_corner(corner: MatrixFq) -> StableOperator {
        StableOperator { corner }
    }

    /// The canonical corner `[[0,0],[0,I_rank]]` with `kernel_dim` zero rows
    /// and `cokernel_dim` zero columns.
    pub fn j_form(spec: &FieldSpec, kernel_dim: usize, cokernel_dim: usize, rank: usize) -> StableOperator {
        let mut corner = MatrixFq::zeros(spec, kernel_dim + rank, cokernel_dim + rank);
        for i in 0..rank {
            corner.set_code(kernel_dim + i, cokernel_dim + i, 1);
        }
        StableOperator { corner }
    }

    pub fn spec(&self) -> &FieldSpec {
        self.corner.spec()
    }

    pub fn corner(&self) -> &MatrixFq {
        &self.corner
    }

    pub fn kernel_dim(&self) -> usize {
        self.corner.rows() - self.corner.rref().rank
    }

    pub fn cokernel_dim(&self) -> usize {
        self.corner.cols() - self.corner.rref().rank
    }

    /// Fredholm index `dim ker - dim coker`; structurally equal to
    /// `corner rows - corner cols`.
    pub fn index(&self) -> i64 {
        let ker = self.kernel_dim() as i64;
        let coker = self.cokernel_dim() as i64;
        let ind = ker - coker;
        debug_assert_eq!(ind, self.corner.rows() as i64 - self.corner.cols() as i64);
        ind
    }

    /// Extend the corner by `extra` tail coordinates (same operator).
    pub fn pad(&self, extra: usize) -> StableOperator {
        let (m, mp) = (self.corner.rows(), self.corner.cols());
        let mut corner = MatrixFq::zeros(self.spec(), m + extra, mp + extra);
        for i in 0..m {
            for j in 0..mp {
                corner.set_code(i, j, self.corner.code_at(i, j));
            }
        }
        for t in 0..extra {
            corner.set_code(m + t, mp + t, 1);
        }
        StableOperator { corner }
    }

    /// Composite `self` then `other` (row-vector convention: the corner of
    /// the result is `corner(self) * corner(other)` after aligning windows).
    pub fn compose(&self, other: &StableOperator) -> StableOperator {
        assert_eq!(self.spec(), other.spec(), "field spec mismatch");
        let mid = self.corner.cols().max(other.corner.rows());
        let a = self.pad(mid - self.corner.cols());
        let b = other.pad(mid - other.corner.rows());
        StableOperator {
            corner: a.corner.mul(&b.corner),
        }
    }

    /// Factor as `g1 * J * g2` with invertible `g1`, `g2` and the canonical
    /// `J` corner. Recomposition is exact.
    pub fn canonical_form(&self) -> CanonicalForm {
        let spec = self.spec().clone();
        let c = &self.corner;
        let (m, mp) = (c.rows(), c.cols());
        let (rref, u) = c.rref_with_transform();
        let r = rref.rank;
        let beta = m - r; // kernel
        let alpha = mp - r; // cokernel

        // column transform: pivots to the front, non-pivot columns cleared
        let mut v1 = MatrixFq::zeros(&spec, mp, mp);
        for (j, &p) in rref.pivots.iter().enumerate() {
            v1.set_code(p, j, 1);
        }
        let nonpivot: Vec<usize> = (0..mp).filter(|c| !rref.pivots.contains(c)).collect();
        for (idx, &cnp) in nonpivot.iter().enumerate() {
            v1.set_code(cnp, r + idx, 1);
            for (i, &p) in rref.pivots.iter().enumerate() {
                let val = rref.reduced.code_at(i, cnp);
                if val != 0 {
                    v1.set_code(p, r + idx, spec.vneg(val));
                }
            }
        }
        // now u * c * v1 = [[I_r, 0], [0, 0]]; permute zeros to the front
        let mut p_row = MatrixFq::zeros(&spec, m, m);
        for i in 0..beta {
            p_row.set_code(i, r + i, 1);
        }
        for i in 0..r {
            p_row.set_code(beta + i, i, 1);
        }
        let mut p_col = MatrixFq::zeros(&spec, mp, mp);
        for j in 0..alpha {
            p_col.set_code(r + j, j, 1);
        }
        for j in 0..r {
            p_col.set_code(j, alpha + j, 1);
        }

        let u_total = p_row.mul(&u);
        let v_total = v1.mul(&p_col);
        let g1 = StableOperator::from_corner(u_total.inverse().expect("row transform invertible"));
        let g2 = StableOperator::from_corner(v_total.inverse().expect("column transform invertible"));
        let j_form = StableOperator::j_form(&spec, beta, alpha, r);
        debug_assert_eq!(&g1.compose(&j_form).compose(&g2), self);
        CanonicalForm {
            g1,
            j_form,
            g2,
            kernel_dim: beta,
            cokernel_dim: alpha,
        }
    }
}

impl PartialEq for StableOperator {
    fn eq(&self, other: &StableOperator) -> bool {
        if self.spec() != other.spec() {
            return false;
        }
        let (ma, mpa) = (self.corner.rows() as i64, self.corner.cols() as i64);
        let (mb, mpb) = (other.corner.rows() as i64, other.corner.cols() as i64);
        if ma - mpa != mb - mpb {
            return false;
        }
        let target = ma.max(mb) as usize;
        self.pad(target - ma as usize).corner == other.pad(target - mb as usize).corner
    }
}

impl Eq for StableOperator {}

/// An invertible operator on the doubled space: the shift `J^s` followed by
/// an invertible corner supported on the z-window `lo..lo+w`. Outside the
/// window the element acts as the pure shift.
#[derive(Clone)]
pub struct StableGroupElement {
    spec: FieldSpec,
    shift: i64,
    lo: i64,
    corner: MatrixFq, // w x w, invertible, over post-shift window positions
}

impl fmt::Debug for StableGroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "StableGroupElement(shift {}, window [{}, {}])",
            self.shift,
            self.lo,
            self.lo + self.corner.rows() as i64 - 1
        )
    }
}

impl StableGroupElement {
    pub fn identity(spec: &FieldSpec) -> StableGroupElement {
        StableGroupElement {
            spec: spec.clone(),
            shift: 0,
            lo: 0,
            corner: MatrixFq::zeros(spec, 0, 0),
        }
    }

    /// The pure shift `J^s`.
    pub fn shift_power(spec: &FieldSpec, s: i64) -> StableGroupElement {
        StableGroupElement {
            spec: spec.clone(),
            shift: s,
            lo: 0,
            corner: MatrixFq::zeros(spec, 0, 0),
        }
    }

    /// `J^s` followed by the block matrix `(a b; c d)` acting on the first
    /// `n` coordinates of each chain (`a`: `e`-block to `e`-block, `d`:
    /// `f`-block to `f`-block), identity outside. Fails if the block matrix
    /// is singular.
    pub fn from_blocks(
        spec: &FieldSpec,
        s: i64,
        a: &MatrixFq,
        b: &MatrixFq,
        c: &MatrixFq,
        d: &MatrixFq,
    ) -> Result<StableGroupElement, SemiInfError> {
        let n = a.rows();
        for (name, m) in [("a", a), ("b", b), ("c", c), ("d", d)] {
            assert_eq!((m.rows(), m.cols()), (n, n), "block {name} must be {n}x{n}");
        }
        // z-window [-n, n-1]; position of e_i is n-1-i, of f_j is n+j
        let mut corner = MatrixFq::zeros(spec, 2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                corner.set_code(n - 1 - i, n - 1 - j, a.code_at(i, j));
                corner.set_code(n - 1 - i, n + j, b.code_at(i, j));
                corner.set_code(n + i, n - 1 - j, c.code_at(i, j));
                corner.set_code(n + i, n + j, d.code_at(i, j));
            }
        }
        StableGroupElement::from_window(spec, s, -(n as i64), corner)
    }

    /// Raw constructor over a z-window.
    pub fn from_window(
        spec: &FieldSpec,
        s: i64,
        lo: i64,
        corner: MatrixFq,
    ) -> Result<StableGroupElement, SemiInfError> {
        assert_eq!(corner.rows(), corner.cols(), "window corner must be square");
        if corner.rows() > 0 && corner.inverse().is_none() {
            return Err(SemiInfError::SingularCorner);
        }
        Ok(StableGroupElement {
            spec: spec.clone(),
            shift: s,
            lo,
            corner,
        }
        .normalized())
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    /// The shift homomorphism: `theta(J) = 1`, `theta = 0` on parabolic and
    /// finite elements, additive under composition.
    pub fn theta(&self) -> i64 {
        self.shift
    }

    fn width(&self) -> usize {
        self.corner.rows()
    }

    /// Post-shift window `[lo, hi]`; `(0, -1)` convention when empty.
    fn window_span(&self) -> (i64, i64) {
        (self.lo, self.lo + self.width() as i64 - 1)
    }

    /// Drop window edge coordinates on which the corner acts trivially.
    fn normalized(mut self) -> StableGroupElement {
        loop {
            let w = self.width();
            if w == 0 {
                self.lo = 0;
                return self;
            }
            let unit_low = (0..w).all(|j| self.corner.code_at(0, j) == u32::from(j == 0))
                && (0..w).all(|i| self.corner.code_at(i, 0) == u32::from(i == 0));
            if unit_low {
                self.corner = minor(&self.corner, 0);
                self.lo += 1;
                continue;
            }
            let unit_high = (0..w).all(|j| self.corner.code_at(w - 1, j) == u32::from(j == w - 1))
                && (0..w).all(|i| self.corner.code_at(i, w - 1) == u32::from(i == w - 1));
            if unit_high {
                self.corner = minor(&self.corner, w - 1);
                continue;
            }
            return self;
        }
    }

    /// Matrix of the element from window `lo..=hi` (columns of the image are
    /// indexed by `z' - (lo + shift)`). The corner window must fit inside.
    fn window_matrix(&self, lo: i64, hi: i64) -> MatrixFq {
        let (g_lo, g_hi) = self.window_span();
        if self.width() > 0 {
            assert!(
                g_lo >= lo + self.shift && g_hi <= hi + self.shift,
                "window too small for the corner"
            );
        }
        let width = (hi - lo + 1) as usize;
        let mut m = MatrixFq::zeros(&self.spec, width, width);
        for z in lo..=hi {
            let w = z + self.shift;
            let row = (z - lo) as usize;
            if self.width() > 0 && w >= g_lo && w <= g_hi {
                let cr = (w - g_lo) as usize;
                for cc in 0..self.width() {
                    let val = self.corner.code_at(cr, cc);
                    if val != 0 {
                        let col = (g_lo + cc as i64 - (lo + self.shift)) as usize;
                        m.set_code(row, col, val);
                    }
                }
            } else {
                m.set_code(row, (w - (lo + self.shift)) as usize, 1);
            }
        }
        m
    }

    /// Group law, `self` then `other` (row-vector convention).
    pub fn mul(&self, other: &StableGroupElement) -> StableGroupElement {
        assert_eq!(self.spec, other.spec, "field spec mismatch");
        let spec = &self.spec;
        // J^s G J^t H = J^(s+t) (J^-t G J^t) H; conjugation translates the window
        let conj_lo = self.lo + other.shift;
        let conj_hi = conj_lo + self.width() as i64 - 1;
        let (o_lo, o_hi) = other.window_span();
        if self.width() == 0 && other.width() == 0 {
            return StableGroupElement::shift_power(spec, self.shift + other.shift);
        }
        let lo = if self.width() == 0 {
            o_lo
        } else if other.width() == 0 {
            conj_lo
        } else {
            conj_lo.min(o_lo)
        };
        let hi = if self.width() == 0 {
            o_hi
        } else if other.width() == 0 {
            conj_hi
        } else {
            conj_hi.max(o_hi)
        };
        let width = (hi - lo + 1) as usize;
        let embed = |corner: &MatrixFq, c_lo: i64| -> MatrixFq {
            let mut m = MatrixFq::identity(spec, width);
            let w = corner.rows();
            for i in 0..w {
                for j in 0..w {
                    m.set_code(
                        (c_lo - lo) as usize + i,
                        (c_lo - lo) as usize + j,
                        corner.code_at(i, j),
                    );
                }
            }
            m
        };
        let left = embed(&self.corner, conj_lo);
        let right = embed(&other.corner, o_lo);
        StableGroupElement {
            spec: spec.clone(),
            shift: self.shift + other.shift,
            lo,
            corner: left.mul(&right),
        }
        .normalized()
    }

    pub fn inverse(&self) -> StableGroupElement {
        let corner = if self.width() == 0 {
            self.corner.clone()
        } else {
            self.corner.inverse().expect("group element corner is invertible")
        };
        StableGroupElement {
            spec: self.spec.clone(),
            shift: -self.shift,
            lo: self.lo - self.shift,
            corner,
        }
        .normalized()
    }

    /// Is the element in the parabolic subgroup (stabilizer of the compact
    /// block): shift 0 and no `f`-input mapped onto `e`-coordinates?
    pub fn is_parabolic(&self) -> bool {
        if self.shift != 0 {
            return false;
        }
        let (g_lo, _) = self.window_span();
        for i in 0..self.width() {
            let z_in = g_lo + i as i64;
            if z_in < 0 {
                continue;
            }
            for j in 0..self.width() {
                let z_out = g_lo + j as i64;
                if z_out < 0 && self.corner.code_at(i, j) != 0 {
                    return false;
                }
            }
        }
        true
    }

    /// Does the element act only on the `e`-block (`f`-basis vectors fixed)?
    pub fn is_ell_block(&self) -> bool {
        if self.shift != 0 {
            return false;
        }
        let (g_lo, _) = self.window_span();
        for i in 0..self.width() {
            let z_in = g_lo + i as i64;
            for j in 0..self.width() {
                let val = self.corner.code_at(i, j);
                let z_out = g_lo + j as i64;
                if z_in >= 0 && val != u32::from(i == j) {
                    return false;
                }
                if z_in < 0 && z_out >= 0 && val != 0 {
                    return false;
                }
            }
        }
        true
    }

    /// Compression to the `e`-block as a stable operator. Its Fredholm index
    /// equals `theta`, tying the index convention to the shift invariant.
    pub fn ell_compression(&self) -> StableOperator {
        let (g_lo, _) = self.window_span();
        let s = self.shift;
        let m_in = if self.width() == 0 {
            s.max(0) as usize
        } else {
            (s.max(0)).max(s - g_lo).max(0) as usize
        };
        let m_out = (m_in as i64 - s) as usize;
        let mut corner = MatrixFq::zeros(&self.spec, m_in, m_out);
        let (g_lo, g_hi) = self.window_span();
        for i in 0..m_in {
            let w = -(i as i64) - 1 + s; // post-shift z of e_i
            if self.width() > 0 && w >= g_lo && w <= g_hi {
                let cr = (w - g_lo) as usize;
                for cc in 0..self.width() {
                    let z_out = g_lo + cc as i64;
                    if z_out < 0 {
                        let j = (-1 - z_out) as usize;
                        if j < m_out {
                            corner.set_code(i, j, self.corner.code_at(cr, cc));
                        } else {
                            debug_assert_eq!(self.corner.code_at(cr, cc), 0);
                        }
                    }
                }
            } else if w < 0 {
                let j = (-1 - w) as usize;
                debug_assert!(j < m_out);
                corner.set_code(i, j, 1);
            }
        }
        StableOperator::from_corner(corner)
    }
}

impl PartialEq for StableGroupElement {
    fn eq(&self, other: &StableGroupElement) -> bool {
        // both sides are kept normalized (trimmed), so direct comparison works
        self.spec == other.spec
            && self.shift == other.shift
            && self.lo == other.lo
            && self.corner == other.corner
    }
}

impl Eq for StableGroupElement {}

fn minor(m: &MatrixFq, drop: usize) -> MatrixFq {
    let w = m.rows();
    let idx: Vec<usize> = (0..w).filter(|&i| i != drop).collect();
    let mut out = MatrixFq::zeros(m.spec(), w - 1, w - 1);
    for (i, &si) in idx.iter().enumerate() {
        for (j, &sj) in idx.iter().enumerate() {
            out.set_code(i, j, m.code_at(si, sj));
        }
    }
    out
}

/// The `g = h * s * r` factorization of a shift-free stable group element:
/// `h` acts only on the `e`-block, `s` is a finite correction, `r` is
/// parabolic. Recomposition is exact by construction.
#[derive(Clone, Debug)]
pub struct Factorization {
    pub ell_part: StableGroupElement,
    pub finite_part: StableGroupElement,
    pub parabolic_part: StableGroupElement,
}

/// Factor a `theta = 0` element as `h * s * r`. The `e`-block of `g` is row
/// reduced by `h^-1`; the rows it cannot normalize are repaired by the
/// finite part; what remains is parabolic.
pub fn factor_gl0(g: &StableGroupElement) -> Result<Factorization, SemiInfError> {
    if g.shift != 0 {
        return Err(SemiInfError::ThetaNonzero(g.shift));
    }
    let spec = g.spec().clone();
    let identity = StableGroupElement::identity(&spec);

    // symmetric window [-n, n-1]
    let (g_lo, g_hi) = g.window_span();
    let n = if g.width() == 0 {
        1
    } else {
        (g_lo.abs().max(g_hi + 1)) as usize
    };
    let full = g.window_matrix(-(n as i64), n as i64 - 1);
    // blocks in ascending e/f order
    let pos_e = |i: usize| n - 1 - i;
    let pos_f = |j: usize| n + j;
    let mut a = MatrixFq::zeros(&spec, n, n);
    let mut b = MatrixFq::zeros(&spec, n, n);
    let mut c = MatrixFq::zeros(&spec, n, n);
    let mut d = MatrixFq::zeros(&spec, n, n);
    for i in 0..n {
        for j in 0..n {
            a.set_code(i, j, full.code_at(pos_e(i), pos_e(j)));
            b.set_code(i, j, full.code_at(pos_e(i), pos_f(j)));
            c.set_code(i, j, full.code_at(pos_f(i), pos_e(j)));
            d.set_code(i, j, full.code_at(pos_f(i), pos_f(j)));
        }
    }

    if c.is_zero() {
        return Ok(Factorization {
            ell_part: identity.clone(),
            finite_part: identity,
            parabolic_part: g.clone(),
        });
    }

    let (rref_a, u) = a.rref_with_transform();
    let rho = rref_a.rank;
    let ub = u.mul(&b);
    // invertible completion of the reduced e-block: RREF rows on top, unit
    // rows on the non-pivot columns below
    let mut a_r = MatrixFq::zeros(&spec, n, n);
    let mut b_r = MatrixFq::zeros(&spec, n, n);
    for i in 0..rho {
        for j in 0..n {
            a_r.set_code(i, j, rref_a.reduced.code_at(i, j));
            b_r.set_code(i, j, ub.code_at(i, j));
        }
    }
    let nonpivot: Vec<usize> = (0..n).filter(|col| !rref_a.pivots.contains(col)).collect();
    for (extra, &col) in nonpivot.iter().enumerate() {
        a_r.set_code(rho + extra, col, 1);
    }

    let zero = MatrixFq::zeros(&spec, n, n);
    let eye = MatrixFq::identity(&spec, n);
    let r = StableGroupElement::from_blocks(&spec, 0, &a_r, &b_r, &zero, &eye)?;
    let u_inv = u.inverse().expect("row transform invertible");
    let h = StableGroupElement::from_blocks(&spec, 0, &u_inv, &zero, &zero, &eye)?;
    let s = h.inverse().mul(g).mul(&r.inverse());

    debug_assert_eq!(s.theta(), 0);
    debug_assert!(r.is_parabolic());
    debug_assert!(h.is_ell_block());
    debug_assert_eq!(&h.mul(&s).mul(&r), g);
    Ok(Factorization {
        ell_part: h,
        finite_part: s,
        parabolic_part: r,
    })
}
