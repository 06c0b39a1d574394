//! Dense matrices and canonical subspaces over `F_q`.
//!
//! Subspaces are always row spaces, stored as reduced-row-echelon bases with
//! strictly increasing pivot columns and no zero rows. That representation is
//! canonical: two subspaces are equal iff their stored bases are bitwise
//! equal, which makes subspaces usable as hash and ordering keys.
//!
//! Dimension mismatches and field-spec mismatches across operands panic;
//! data-dependent conditions (`quotient_dim` on a non-subspace) return `Err`.

use std::fmt;

use thiserror::Error;

use crate::gf::{FieldElement, FieldSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("the second argument is not a subspace of the first")]
    NotASubspace,
}

/// A dense `rows x cols` matrix over `F_q`, entries stored row-major as
/// canonical element codes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MatrixFq {
    spec: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

/// Result of row reduction: the reduced matrix, its rank, and pivot columns.
#[derive(Clone, Debug)]
pub struct Rref {
    pub reduced: MatrixFq,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl fmt::Debug for MatrixFq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "MatrixFq {}x{} over {}", self.rows, self.cols, self.spec)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        Ok(())
    }
}

impl MatrixFq {
    pub fn zeros(spec: &FieldSpec, rows: usize, cols: usize) -> MatrixFq {
        MatrixFq {
            spec: spec.clone(),
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(spec: &FieldSpec, n: usize) -> MatrixFq {
        let mut m = MatrixFq::zeros(spec, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Build from element codes (row-major). Panics if a code is out of range.
    pub fn from_codes(spec: &FieldSpec, rows: usize, cols: usize, codes: &[u32]) -> MatrixFq {
        assert_eq!(rows * cols, codes.len(), "shape/data length mismatch");
        let q = spec.order();
        assert!(codes.iter().all(|&c| c < q), "element code out of range");
        MatrixFq {
            spec: spec.clone(),
            rows,
            cols,
            data: codes.to_vec(),
        }
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn code_at(&self, i: usize, j: usize) -> u32 {
        assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    pub fn set_code(&mut self, i: usize, j: usize, code: u32) {
        assert!(i < self.rows && j < self.cols);
        assert!(code < self.spec.order());
        self.data[i * self.cols + j] = code;
    }

    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        self.spec.element(self.code_at(i, j))
    }

    pub fn set(&mut self, i: usize, j: usize, value: FieldElement) {
        assert_eq!(value.spec(), &self.spec, "field spec mismatch");
        self.set_code(i, j, value.code());
    }

    pub fn row_codes(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&c| c == 0)
    }

    pub fn transpose(&self) -> MatrixFq {
        let mut out = MatrixFq::zeros(&self.spec, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn mul(&self, other: &MatrixFq) -> MatrixFq {
        assert_eq!(self.spec, other.spec, "field spec mismatch");
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let s = &self.spec;
        let mut out = MatrixFq::zeros(s, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.data[k * other.cols + j];
                    if b != 0 {
                        let idx = i * other.cols + j;
                        out.data[idx] = s.vadd(out.data[idx], s.vmul(a, b));
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &MatrixFq) -> MatrixFq {
        assert_eq!(self.spec, other.spec, "field spec mismatch");
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        let mut out = self.clone();
        for (o, &b) in out.data.iter_mut().zip(&other.data) {
            *o = self.spec.vadd(*o, b);
        }
        out
    }

    /// New matrix keeping the listed columns, in the listed order.
    pub fn select_cols(&self, cols: &[usize]) -> MatrixFq {
        let mut out = MatrixFq::zeros(&self.spec, self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                out.data[i * cols.len() + jj] = self.code_at(i, j);
            }
        }
        out
    }

    /// Stack `self` on top of `other` (same column count).
    pub fn vstack(&self, other: &MatrixFq) -> MatrixFq {
        assert_eq!(self.spec, other.spec, "field spec mismatch");
        assert_eq!(self.cols, other.cols, "column count mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        MatrixFq {
            spec: self.spec.clone(),
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    /// Reduced row echelon form. Row space is preserved; pivot columns are
    /// strictly increasing and pivot entries are 1 with zeros above and below.
    pub fn rref(&self) -> Rref {
        let (reduced, rank, pivots, _) = self.rref_impl(false);
        Rref { reduced, rank, pivots }
    }

    /// Like [`rref`](Self::rref), additionally returning an invertible `u`
    /// with `u * self = reduced`.
    pub fn rref_with_transform(&self) -> (Rref, MatrixFq) {
        let (reduced, rank, pivots, transform) = self.rref_impl(true);
        (Rref { reduced, rank, pivots }, transform.unwrap())
    }

    fn rref_impl(&self, track: bool) -> (MatrixFq, usize, Vec<usize>, Option<MatrixFq>) {
        let s = self.spec.clone();
        let mut a = self.clone();
        let mut u = if track {
            Some(MatrixFq::identity(&s, self.rows))
        } else {
            None
        };
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let Some(pr) = (r..a.rows).find(|&i| a.code_at(i, c) != 0) else {
                continue;
            };
            a.swap_rows(r, pr);
            if let Some(u) = u.as_mut() {
                u.swap_rows(r, pr);
            }
            let inv = s.vinv(a.code_at(r, c)).unwrap();
            a.scale_row(r, inv);
            if let Some(u) = u.as_mut() {
                u.scale_row(r, inv);
            }
            for i in 0..a.rows {
                if i != r {
                    let f = a.code_at(i, c);
                    if f != 0 {
                        a.row_subtract(i, r, f);
                        if let Some(u) = u.as_mut() {
                            u.row_subtract(i, r, f);
                        }
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (a, r, pivots, u)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn scale_row(&mut self, i: usize, by: u32) {
        for c in 0..self.cols {
            let idx = i * self.cols + c;
            self.data[idx] = self.spec.vmul(self.data[idx], by);
        }
    }

    /// row_i -= f * row_j
    fn row_subtract(&mut self, i: usize, j: usize, f: u32) {
        for c in 0..self.cols {
            let sub = self.spec.vmul(f, self.data[j * self.cols + c]);
            let idx = i * self.cols + c;
            self.data[idx] = self.spec.vsub(self.data[idx], sub);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    pub fn inverse(&self) -> Option<MatrixFq> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let (rref, u) = self.rref_with_transform();
        if rref.rank < self.rows {
            return None;
        }
        Some(u)
    }

    /// Basis of the left kernel `{ v : v * self = 0 }`, a subspace of
    /// `F_q^rows`; its dimension is `rows - rank`.
    pub fn kernel_basis(&self) -> Subspace {
        let (rref, u) = self.rref_with_transform();
        // rows of u aligned with zero rows of the reduced matrix span the kernel
        let mut rows = Vec::new();
        for i in rref.rank..self.rows {
            rows.extend_from_slice(u.row_codes(i));
        }
        let mat = MatrixFq {
            spec: self.spec.clone(),
            rows: self.rows - rref.rank,
            cols: self.rows,
            data: rows,
        };
        Subspace::from_matrix(&mat)
    }
}

/// A subspace of `F_q^m`, canonically represented by its RREF row basis.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    basis: MatrixFq,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Subspace(dim {} of F^{}; basis rows: {:?})",
            self.dim(),
            self.ambient_dim(),
            (0..self.dim()).map(|i| self.basis.row_codes(i)).collect::<Vec<_>>()
        )
    }
}

impl Subspace {
    /// The row space of `m`, canonicalized.
    pub fn from_matrix(m: &MatrixFq) -> Subspace {
        let rref = m.rref();
        let mut data = Vec::with_capacity(rref.rank * m.cols());
        for i in 0..rref.rank {
            data.extend_from_slice(rref.reduced.row_codes(i));
        }
        Subspace {
            basis: MatrixFq {
                spec: m.spec().clone(),
                rows: rref.rank,
                cols: m.cols(),
                data,
            },
        }
    }

    pub fn zero(spec: &FieldSpec, ambient: usize) -> Subspace {
        Subspace {
            basis: MatrixFq::zeros(spec, 0, ambient),
        }
    }

    pub fn full(spec: &FieldSpec, ambient: usize) -> Subspace {
        Subspace {
            basis: MatrixFq::identity(spec, ambient),
        }
    }

    /// Span of the given basis vectors (each a slice of element codes).
    pub fn span(spec: &FieldSpec, ambient: usize, vectors: &[&[u32]]) -> Subspace {
        let mut data = Vec::with_capacity(vectors.len() * ambient);
        for v in vectors {
            assert_eq!(v.len(), ambient, "vector length mismatch");
            data.extend_from_slice(v);
        }
        Subspace::from_matrix(&MatrixFq::from_codes(spec, vectors.len(), ambient, &data))
    }

    pub fn spec(&self) -> &FieldSpec {
        self.basis.spec()
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.cols()
    }

    /// The canonical RREF basis (no zero rows, increasing pivots).
    pub fn basis(&self) -> &MatrixFq {
        &self.basis
    }

    pub fn pivots(&self) -> Vec<usize> {
        // first nonzero column of each RREF row
        (0..self.dim())
            .map(|i| {
                self.basis
                    .row_codes(i)
                    .iter()
                    .position(|&c| c != 0)
                    .expect("zero row in canonical basis")
            })
            .collect()
    }

    /// Does the subspace contain the vector (given as element codes)?
    pub fn contains_vector(&self, v: &[u32]) -> bool {
        assert_eq!(v.len(), self.ambient_dim(), "vector length mismatch");
        // reduce v against the RREF basis
        let s = self.spec().clone();
        let mut v = v.to_vec();
        for (i, &p) in self.pivots().iter().enumerate() {
            let f = v[p];
            if f != 0 {
                for c in 0..v.len() {
                    v[c] = s.vsub(v[c], s.vmul(f, self.basis.code_at(i, c)));
                }
            }
        }
        v.iter().all(|&c| c == 0)
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        assert_eq!(self.ambient_dim(), other.ambient_dim(), "ambient mismatch");
        (0..other.dim()).all(|i| self.contains_vector(other.basis.row_codes(i)))
    }

    /// Span of the union of bases.
    pub fn sum(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient_dim(), other.ambient_dim(), "ambient mismatch");
        Subspace::from_matrix(&self.basis.vstack(&other.basis))
    }

    /// Intersection via the kernel of the stacked system: a kernel vector
    /// `(u, w)` of `[A; B]` satisfies `u*A = -w*B`, which ranges exactly over
    /// the intersection as `(u, w)` ranges over the kernel.
    pub fn intersect(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient_dim(), other.ambient_dim(), "ambient mismatch");
        let da = self.dim();
        let stacked = self.basis.vstack(&other.basis);
        let ker = stacked.kernel_basis();
        let mut rows = Vec::new();
        for i in 0..ker.dim() {
            let coeffs = ker.basis.row_codes(i);
            let mut v = vec![0u32; self.ambient_dim()];
            let s = self.spec();
            for (r, &c) in coeffs.iter().enumerate().take(da) {
                if c != 0 {
                    for j in 0..v.len() {
                        v[j] = s.vadd(v[j], s.vmul(c, self.basis.code_at(r, j)));
                    }
                }
            }
            rows.push(v);
        }
        let refs: Vec<&[u32]> = rows.iter().map(|v| v.as_slice()).collect();
        Subspace::span(self.spec(), self.ambient_dim(), &refs)
    }

    /// `dim(big) - dim(small)`, checking `small ⊆ big`.
    pub fn quotient_dim(&self, small: &Subspace) -> Result<usize, LinalgError> {
        if !self.contains(small) {
            return Err(LinalgError::NotASubspace);
        }
        Ok(self.dim() - small.dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> FieldSpec {
        FieldSpec::new(2, 1).unwrap()
    }

    #[test]
    fn rref_examples() {
        let s = f2();
        let zero = MatrixFq::zeros(&s, 2, 3);
        let r = zero.rref();
        assert!(r.reduced.is_zero());
        assert_eq!(r.rank, 0);
        assert!(r.pivots.is_empty());

        let id = MatrixFq::identity(&s, 3);
        let r = id.rref();
        assert_eq!(r.reduced, id);
        assert_eq!(r.rank, 3);
        assert_eq!(r.pivots, vec![0, 1, 2]);

        let m = MatrixFq::from_codes(&s, 2, 2, &[1, 1, 1, 1]);
        let r = m.rref();
        assert_eq!(r.reduced, MatrixFq::from_codes(&s, 2, 2, &[1, 1, 0, 0]));
        assert_eq!(r.rank, 1);
        assert_eq!(r.pivots, vec![0]);
    }

    #[test]
    fn rref_is_idempotent() {
        let s = FieldSpec::new(3, 1).unwrap();
        let m = MatrixFq::from_codes(&s, 3, 4, &[1, 2, 0, 1, 2, 1, 1, 0, 0, 0, 2, 2]);
        let once = m.rref().reduced;
        let twice = once.rref().reduced;
        assert_eq!(once, twice);
    }

    #[test]
    fn row_space_examples() {
        let s = f2();
        // two equal nonzero rows span a line
        let m = MatrixFq::from_codes(&s, 2, 3, &[1, 0, 1, 1, 0, 1]);
        assert_eq!(Subspace::from_matrix(&m).dim(), 1);

        // hand RREF: [[0,1,1],[1,0,1]] -> [[1,0,1],[0,1,1]]
        let m = MatrixFq::from_codes(&s, 2, 3, &[0, 1, 1, 1, 0, 1]);
        let sp = Subspace::from_matrix(&m);
        assert_eq!(sp.basis(), &MatrixFq::from_codes(&s, 2, 3, &[1, 0, 1, 0, 1, 1]));

        let full = Subspace::from_matrix(&MatrixFq::identity(&s, 4));
        assert_eq!(full.dim(), 4);
    }

    #[test]
    fn kernel_examples() {
        let s = f2();
        let id = MatrixFq::identity(&s, 3);
        assert_eq!(id.kernel_basis().dim(), 0);

        let zero = MatrixFq::zeros(&s, 2, 3);
        assert_eq!(zero.kernel_basis(), Subspace::full(&s, 2));

        // v * [[1,1],[1,1]] = 0  =>  v in span{[1,1]}
        let m = MatrixFq::from_codes(&s, 2, 2, &[1, 1, 1, 1]);
        let k = m.kernel_basis();
        assert_eq!(k, Subspace::span(&s, 2, &[&[1, 1]]));
    }

    #[test]
    fn kernel_dimension_count() {
        let s = FieldSpec::new(3, 1).unwrap();
        let m = MatrixFq::from_codes(&s, 3, 2, &[1, 2, 2, 1, 0, 0]);
        let r = m.rref();
        assert_eq!(m.kernel_basis().dim(), 3 - r.rank);
    }

    #[test]
    fn sum_and_intersection_examples() {
        let s = f2();
        let a = Subspace::span(&s, 2, &[&[1, 0]]);
        let zero = Subspace::zero(&s, 2);
        assert_eq!(a.sum(&zero), a);
        assert_eq!(a.sum(&a), a);

        let b = Subspace::span(&s, 2, &[&[0, 1]]);
        assert_eq!(a.sum(&b), Subspace::full(&s, 2));

        assert_eq!(a.intersect(&a), a);
        assert_eq!(a.intersect(&b), Subspace::zero(&s, 2));

        let diag = Subspace::span(&s, 2, &[&[1, 1]]);
        let plane = Subspace::full(&s, 2);
        assert_eq!(plane.intersect(&diag), diag);
    }

    #[test]
    fn contains_and_quotient_dim() {
        let s = f2();
        let plane = Subspace::full(&s, 2);
        let line = Subspace::span(&s, 2, &[&[1, 1]]);
        assert!(line.contains_vector(&[0, 0]));
        assert_eq!(plane.quotient_dim(&plane), Ok(0));
        assert_eq!(plane.quotient_dim(&line), Ok(1));
        let other = Subspace::span(&s, 2, &[&[1, 0]]);
        assert_eq!(line.quotient_dim(&other), Err(LinalgError::NotASubspace));
    }

    #[test]
    fn inverse_round_trip() {
        let s = FieldSpec::new(5, 1).unwrap();
        let m = MatrixFq::from_codes(&s, 3, 3, &[1, 2, 0, 3, 1, 4, 0, 2, 1]);
        let inv = m.inverse().expect("invertible");
        assert_eq!(m.mul(&inv), MatrixFq::identity(&s, 3));
        assert_eq!(inv.mul(&m), MatrixFq::identity(&s, 3));

        let singular = MatrixFq::from_codes(&s, 2, 2, &[1, 2, 2, 4]);
        assert!(singular.inverse().is_none());
    }

    #[test]
    fn modular_law_of_dimensions_randomized() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for &(p, m) in &[(2u64, 5usize), (3, 4), (2, 6)] {
            let s = FieldSpec::new(p, 1).unwrap();
            for _ in 0..60 {
                let rand_space = |rng: &mut rand_chacha::ChaCha8Rng| {
                    let rows = rng.gen_range(0..=m);
                    let codes: Vec<u32> =
                        (0..rows * m).map(|_| rng.gen_range(0..s.order())).collect();
                    Subspace::from_matrix(&MatrixFq::from_codes(&s, rows, m, &codes))
                };
                let a = rand_space(&mut rng);
                let b = rand_space(&mut rng);
                let sum = a.sum(&b);
                let int = a.intersect(&b);
                assert_eq!(a.dim() + b.dim(), sum.dim() + int.dim());
                assert!(sum.contains(&a) && sum.contains(&b));
                assert!(a.contains(&int) && b.contains(&int));
            }
        }
    }

    #[test]
    fn canonicality_under_row_operations_randomized() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for &(p, m) in &[(2u64, 5usize), (3, 6)] {
            let s = FieldSpec::new(p, 1).unwrap();
            for _ in 0..40 {
                let rows = rng.gen_range(1..=m);
                let codes: Vec<u32> = (0..rows * m).map(|_| rng.gen_range(0..s.order())).collect();
                let mat = MatrixFq::from_codes(&s, rows, m, &codes);
                let sp = Subspace::from_matrix(&mat);

                // random invertible recombination of the rows
                let g = loop {
                    let codes: Vec<u32> =
                        (0..rows * rows).map(|_| rng.gen_range(0..s.order())).collect();
                    let g = MatrixFq::from_codes(&s, rows, rows, &codes);
                    if g.inverse().is_some() {
                        break g;
                    }
                };
                let recombined = Subspace::from_matrix(&g.mul(&mat));
                assert_eq!(sp, recombined);
            }
        }
    }
}
