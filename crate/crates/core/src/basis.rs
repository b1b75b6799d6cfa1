//! Representations of an orthonormal basis.
//!
//! A basis never has to be stored as explicit columns: Householder stores
//! reflectors, the TSPQR schemes store per-block factors. Every representation
//! can apply `Q·C` and `QᵀX`, which is all the drivers and the assembly of
//! explicit columns need.

use std::ops::Range;

use crate::error::{dim_err, PqrError, Result};
use crate::linalg::{axpy, dot, matmul, Matrix, RowMap};
use crate::tspqr::{FlatProductBasis, LocallyOrthogonalBasis};

/// Sequence of Householder reflectors `H_j = I − 2v_jv_jᵀ` with `‖v_j‖ = 1`
/// (or `v_j = 0` for an identity reflector).
///
/// Column `j` of the represented basis is `sign_j · H_0⋯H_j e_{pivot_j}`.
/// Reflector `j` vanishes on the pivot rows of all earlier reflectors, which
/// keeps the pivot rows of the classic layout (`pivot_j = j`) while allowing
/// rows to be inserted later, as the reduction and flat factors require.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectorSeq {
    pub(crate) vectors: Matrix,
    pub(crate) pivots: Vec<usize>,
    pub(crate) signs: Vec<f64>,
}

impl ReflectorSeq {
    pub fn new(rows: usize) -> Self {
        Self {
            vectors: Matrix::zeros(rows, 0),
            pivots: Vec::new(),
            signs: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.vectors.rows()
    }

    pub fn width(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn reflector(&self, j: usize) -> &[f64] {
        self.vectors.col(j)
    }

    /// Applies `H_{range.end−1}⋯H_{range.start}` (the lowest index first) to every column of `y`.
    pub(crate) fn reflect_forward(&self, range: Range<usize>, y: &mut Matrix) {
        for j in range {
            reflect(self.vectors.col(j), y);
        }
    }

    /// Applies `H_{range.start}⋯H_{range.end−1}` (the highest index first).
    pub(crate) fn reflect_backward(&self, range: Range<usize>, y: &mut Matrix) {
        for j in range.rev() {
            reflect(self.vectors.col(j), y);
        }
    }

    pub(crate) fn push(&mut self, v: &[f64], pivot: usize, sign: f64) {
        self.vectors
            .append_columns(&Matrix::from_col_major(v.len(), 1, v.to_vec()).expect("column"))
            .expect("reflector length matches");
        self.pivots.push(pivot);
        self.signs.push(sign);
    }

    fn apply(&self, c: &Matrix) -> Matrix {
        let mut y = Matrix::zeros(self.rows(), c.cols());
        for (j, (&p, &sg)) in self.pivots.iter().zip(&self.signs).enumerate() {
            for col in 0..c.cols() {
                y[(p, col)] = sg * c[(j, col)];
            }
        }
        self.reflect_backward(0..self.width(), &mut y);
        y
    }

    fn apply_t(&self, x: &Matrix) -> Matrix {
        let mut y = x.clone();
        self.reflect_forward(0..self.width(), &mut y);
        Matrix::from_fn(self.width(), x.cols(), |j, col| {
            self.signs[j] * y[(self.pivots[j], col)]
        })
    }

    fn insert_zero_rows(&mut self, insertions: &[(usize, usize)]) {
        let map = RowMap::new(self.rows(), insertions);
        self.vectors = self.vectors.with_zero_rows(insertions);
        for p in &mut self.pivots {
            *p = map.old_to_new[*p];
        }
    }
}

/// `y ← (I − 2vvᵀ)y`, column by column.
pub(crate) fn reflect(v: &[f64], y: &mut Matrix) {
    if v.iter().all(|&x| x == 0.0) {
        return;
    }
    for c in 0..y.cols() {
        let col = y.col_mut(c);
        let t = 2.0 * dot(v, col);
        if t != 0.0 {
            axpy(-t, v, col);
        }
    }
}

/// Any of the supported basis representations.
#[derive(Clone, Debug)]
pub enum BasisRep {
    /// Orthonormal columns stored explicitly (Gram-Schmidt family).
    Explicit(Matrix),
    /// Product of Householder reflectors.
    Reflectors(ReflectorSeq),
    /// Per-block local bases tied together by stacked, orthonormal R-factors (tree TSPQR).
    LocallyOrthogonal(LocallyOrthogonalBasis),
    /// Chain of partially overlapping factors (flat TSPQR).
    FlatProduct(FlatProductBasis),
}

impl BasisRep {
    pub fn kind(&self) -> &'static str {
        match self {
            BasisRep::Explicit(_) => "explicit",
            BasisRep::Reflectors(_) => "reflector",
            BasisRep::LocallyOrthogonal(_) => "locally orthogonal",
            BasisRep::FlatProduct(_) => "flat product",
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            BasisRep::Explicit(q) => q.rows(),
            BasisRep::Reflectors(h) => h.rows(),
            BasisRep::LocallyOrthogonal(t) => t.rows(),
            BasisRep::FlatProduct(f) => f.rows(),
        }
    }

    /// Number of basis columns, including any zero-padded deflated columns.
    pub fn width(&self) -> usize {
        match self {
            BasisRep::Explicit(q) => q.cols(),
            BasisRep::Reflectors(h) => h.width(),
            BasisRep::LocallyOrthogonal(t) => t.width(),
            BasisRep::FlatProduct(f) => f.width(),
        }
    }

    /// `Q·C` for a coefficient matrix with `width()` rows.
    pub fn apply(&self, c: &Matrix) -> Result<Matrix> {
        if c.rows() != self.width() {
            return dim_err(format!(
                "Q·C with {} basis columns and {} coefficient rows",
                self.width(),
                c.rows()
            ));
        }
        match self {
            BasisRep::Explicit(q) => matmul(q, c, false),
            BasisRep::Reflectors(h) => Ok(h.apply(c)),
            BasisRep::LocallyOrthogonal(t) => t.apply(c),
            BasisRep::FlatProduct(f) => f.apply(c),
        }
    }

    /// `QᵀX` for a block with `rows()` rows.
    pub fn apply_t(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.rows() {
            return dim_err(format!(
                "QᵀX with {} basis rows and {} block rows",
                self.rows(),
                x.rows()
            ));
        }
        match self {
            BasisRep::Explicit(q) => matmul(q, x, true),
            BasisRep::Reflectors(h) => Ok(h.apply_t(x)),
            BasisRep::LocallyOrthogonal(t) => t.apply_t(x),
            BasisRep::FlatProduct(f) => f.apply_t(x),
        }
    }

    /// Explicit copy of the basis columns in `cols`.
    pub fn assemble(&self, cols: Range<usize>) -> Result<Matrix> {
        if cols.end > self.width() {
            return dim_err(format!(
                "columns {cols:?} of a basis with {} columns",
                self.width()
            ));
        }
        self.apply(&Matrix::unit_columns(self.width(), cols))
    }

    /// Explicit copy of the whole basis.
    pub fn assemble_all(&self) -> Result<Matrix> {
        self.assemble(0..self.width())
    }

    /// Inserts zero rows into the represented basis (`count` rows before old
    /// row `position`). The basis stays orthonormal and its columns keep
    /// their values on the old rows.
    pub fn insert_zero_rows(&mut self, insertions: &[(usize, usize)]) -> Result<()> {
        match self {
            BasisRep::Explicit(q) => {
                *q = q.with_zero_rows(insertions);
                Ok(())
            }
            BasisRep::Reflectors(h) => {
                h.insert_zero_rows(insertions);
                Ok(())
            }
            other => Err(PqrError::InvalidPlan(format!(
                "rows cannot be inserted into a {} basis; use a kernel solver here",
                other.kind()
            ))),
        }
    }
}
