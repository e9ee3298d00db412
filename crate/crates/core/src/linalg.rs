//! Dense primitives and the structured operators used throughout the crate.
//!
//! Matrices are `nalgebra` column-major matrices, so `vec` is the storage
//! order itself. Selection, mask and commutation operators are index lists;
//! the corresponding 0/1 matrices are never formed.

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TeimError};
use crate::interp::InterpGrid;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Column-wise vectorization.
pub fn vec(x: &Matrix) -> Vector {
    Vector::from_column_slice(x.as_slice())
}

/// Inverse of [`vec`]: reshapes `v` into an `m x n` matrix, column by column.
pub fn vec_inv(v: &Vector, m: usize, n: usize) -> Result<Matrix> {
    if v.len() != m * n {
        return Err(TeimError::DimensionMismatch(format!(
            "cannot reshape a vector of length {} into {m}x{n}",
            v.len()
        )));
    }
    Ok(Matrix::from_column_slice(m, n, v.as_slice()))
}

/// Diagonal of a square matrix.
pub fn vecd(a: &Matrix) -> Result<Vector> {
    if !a.is_square() {
        return Err(TeimError::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(Vector::from_iterator(a.nrows(), (0..a.nrows()).map(|i| a[(i, i)])))
}

/// Kronecker product `A ⊗ B`: block `(i, j)` is `a_ij * B`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (pa, qa) = a.shape();
    let (pb, qb) = b.shape();
    let mut out = Matrix::zeros(pa * pb, qa * qb);
    for ja in 0..qa {
        for jb in 0..qb {
            let col = ja * qb + jb;
            for ia in 0..pa {
                let s = a[(ia, ja)];
                for ib in 0..pb {
                    out[(ia * pb + ib, col)] = s * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Column-wise Khatri-Rao product: column `j` is `kron(A[:, j], B[:, j])`.
pub fn khatri_rao_colwise(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.ncols() != b.ncols() {
        return Err(TeimError::DimensionMismatch(format!(
            "Khatri-Rao product needs equal column counts, got {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let (pa, pb) = (a.nrows(), b.nrows());
    let mut out = Matrix::zeros(pa * pb, a.ncols());
    for j in 0..a.ncols() {
        for ia in 0..pa {
            let s = a[(ia, j)];
            for ib in 0..pb {
                out[(ia * pb + ib, j)] = s * b[(ib, j)];
            }
        }
    }
    Ok(out)
}

/// Applies the commutation matrix `P_mn` to `v = vec(X)` for an `m x n`
/// matrix `X`, yielding `vec(Xᵀ)`.
pub fn commutation_apply(v: &Vector, m: usize, n: usize) -> Result<Vector> {
    if v.len() != m * n {
        return Err(TeimError::DimensionMismatch(format!(
            "commutation P_{{{m},{n}}} needs length {}, got {}",
            m * n,
            v.len()
        )));
    }
    let mut out = Vector::zeros(m * n);
    for j in 0..n {
        for i in 0..m {
            out[j + n * i] = v[i + m * j];
        }
    }
    Ok(out)
}

/// An ordered list of indices into `0..source_dim`.
///
/// Acts as `Pᵀ` in the interpolation formulas: applied to a matrix it picks
/// rows, applied to a vector it picks entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionOperator {
    source_dim: usize,
    indices: Vec<usize>,
}

impl SelectionOperator {
    pub fn new(source_dim: usize, indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= source_dim) {
            return Err(TeimError::IndexOutOfBounds {
                index: bad,
                bound: source_dim,
            });
        }
        Ok(Self { source_dim, indices })
    }

    /// All indices `0..n` in order.
    pub fn identity(n: usize) -> Self {
        Self {
            source_dim: n,
            indices: (0..n).collect(),
        }
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn has_duplicates(&self) -> bool {
        let mut seen = vec![false; self.source_dim];
        self.indices.iter().any(|&i| std::mem::replace(&mut seen[i], true))
    }

    /// `PᵀU`: the selected rows of `u`.
    pub fn select_rows(&self, u: &Matrix) -> Result<Matrix> {
        self.check_dim(u.nrows())?;
        Ok(u.select_rows(self.indices.iter()))
    }

    /// `Pᵀf`: the selected entries of `f`.
    pub fn select_entries(&self, f: &Vector) -> Result<Vector> {
        self.check_dim(f.len())?;
        Ok(Vector::from_iterator(
            self.indices.len(),
            self.indices.iter().map(|&i| f[i]),
        ))
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.source_dim {
            return Err(TeimError::DimensionMismatch(format!(
                "selection over {} entries applied to dimension {n}",
                self.source_dim
            )));
        }
        Ok(())
    }
}

/// The `(i_k, j_k)` entry pairs a mask operator reads, in mask order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskPairs {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl MaskPairs {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>) -> Result<Self> {
        if rows.len() != cols.len() {
            return Err(TeimError::DimensionMismatch(format!(
                "mask has {} row indices but {} column indices",
                rows.len(),
                cols.len()
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(rows.len());
        for (&i, &j) in rows.iter().zip(&cols) {
            if !seen.insert((i, j)) {
                return Err(TeimError::InvalidArgument(format!(
                    "interpolation point ({i}, {j}) repeated"
                )));
            }
        }
        Ok(Self { rows, cols })
    }

    /// Cartesian product of a grid, row-major: pair `r * m2 + c` is
    /// `(rows[r], cols[c])`.
    pub fn cartesian(grid: &InterpGrid) -> Self {
        let (rows, cols) = (grid.rows().indices(), grid.cols().indices());
        let mut pr = Vec::with_capacity(rows.len() * cols.len());
        let mut pc = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                pr.push(i);
                pc.push(j);
            }
        }
        Self { rows: pr, cols: pc }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.rows
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.cols
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().copied().zip(self.cols.iter().copied())
    }

    /// The values of `a` at the pairs, in pair order.
    pub fn gather(&self, a: &Matrix) -> Result<Vector> {
        for (i, j) in self.pairs() {
            check_entry(a, i, j)?;
        }
        Ok(Vector::from_iterator(self.len(), self.pairs().map(|(i, j)| a[(i, j)])))
    }
}

fn check_entry(a: &Matrix, i: usize, j: usize) -> Result<()> {
    if i >= a.nrows() {
        return Err(TeimError::IndexOutOfBounds {
            index: i,
            bound: a.nrows(),
        });
    }
    if j >= a.ncols() {
        return Err(TeimError::IndexOutOfBounds {
            index: j,
            bound: a.ncols(),
        });
    }
    Ok(())
}

/// Mask operator: reads the pairs of `mask` out of `a` into an `m1 x m2`
/// matrix, filling row-major (pair `k` lands at `(k / m2, k % m2)`).
pub fn mask_apply(a: &Matrix, mask: &MaskPairs, m1: usize, m2: usize) -> Result<Matrix> {
    if m1 * m2 != mask.len() {
        return Err(TeimError::DimensionMismatch(format!(
            "{} mask pairs cannot fill a {m1}x{m2} matrix",
            mask.len()
        )));
    }
    let values = mask.gather(a)?;
    Ok(Matrix::from_fn(m1, m2, |r, c| values[r * m2 + c]))
}

/// `P5 A P6ᵀ`: the entries of `a` on the rectangular grid.
pub fn grid_sample(a: &Matrix, grid: &InterpGrid) -> Result<Matrix> {
    if a.nrows() != grid.rows().source_dim() || a.ncols() != grid.cols().source_dim() {
        return Err(TeimError::DimensionMismatch(format!(
            "grid over {}x{} applied to a {}x{} matrix",
            grid.rows().source_dim(),
            grid.cols().source_dim(),
            a.nrows(),
            a.ncols()
        )));
    }
    let (rows, cols) = (grid.rows().indices(), grid.cols().indices());
    Ok(Matrix::from_fn(rows.len(), cols.len(), |r, c| a[(rows[r], cols[c])]))
}

/// Solves `m x = b` by LU with partial pivoting after checking that `m` is
/// numerically nonsingular.
pub fn solve(m: &Matrix, b: &Matrix, what: &str) -> Result<Matrix> {
    check_nonsingular(m, what)?;
    m.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| TeimError::Singular(what.to_string()))
}

/// `u m⁻¹`, computed as the solve `mᵀ yᵀ = uᵀ`.
pub fn right_divide(u: &Matrix, m: &Matrix, what: &str) -> Result<Matrix> {
    Ok(solve(&m.transpose(), &u.transpose(), what)?.transpose())
}

/// Relative threshold below which a singular value counts as zero.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Errors unless `σ_min(m) > 1e-12 σ_max(m)`.
pub fn check_nonsingular(m: &Matrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(TeimError::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.is_empty() {
        return Ok(());
    }
    let sv = SVD::new(m.clone(), false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if !(min > SINGULAR_RTOL * max) {
        return Err(TeimError::Singular(format!(
            "{what}: smallest singular value {min:e} vs largest {max:e}"
        )));
    }
    Ok(())
}

/// Index of the entry with largest absolute value; the lowest index wins ties.
pub fn argmax_abs(v: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in v.into_iter().enumerate() {
        let a = x.abs();
        match best {
            Some((_, b)) if !(a > b) => {}
            _ => best = Some((i, a)),
        }
    }
    best
}

/// Largest absolute entry difference.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{random_matrix, rng};

    fn m(rows: usize, cols: usize, row_major: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, row_major)
    }

    /// Dense 0/1 selection matrix whose column `k` is `e_{idx[k]}`.
    fn dense_selection(n: usize, idx: &[usize]) -> Matrix {
        let mut p = Matrix::zeros(n, idx.len());
        for (k, &i) in idx.iter().enumerate() {
            p[(i, k)] = 1.0;
        }
        p
    }

    /// Commutation matrix built from its definition as a sum of
    /// `E_ij ⊗ E_ijᵀ`.
    fn dense_commutation(mm: usize, nn: usize) -> Matrix {
        let mut p = Matrix::zeros(mm * nn, mm * nn);
        for i in 0..mm {
            for j in 0..nn {
                let mut e = Matrix::zeros(mm, nn);
                e[(i, j)] = 1.0;
                p += kron(&e, &e.transpose());
            }
        }
        p
    }

    fn kron_oracle(a: &Matrix, b: &Matrix) -> Matrix {
        let (pb, qb) = b.shape();
        Matrix::from_fn(a.nrows() * pb, a.ncols() * qb, |r, c| {
            a[(r / pb, c / qb)] * b[(r % pb, c % qb)]
        })
    }

    #[test]
    fn vec_examples() {
        assert_eq!(vec(&m(2, 2, &[1., 3., 2., 4.])).as_slice(), &[1., 2., 3., 4.]);
        assert_eq!(vec(&Matrix::identity(2, 2)).as_slice(), &[1., 0., 0., 1.]);
    }

    #[test]
    fn vec_inv_examples() {
        let v = Vector::from_vec(vec![1., 2., 3., 4.]);
        assert_eq!(vec_inv(&v, 2, 2).unwrap(), m(2, 2, &[1., 3., 2., 4.]));
        let v = Vector::from_vec(vec![1., 2., 3., 4., 5., 6.]);
        assert_eq!(vec_inv(&v, 2, 3).unwrap(), m(2, 3, &[1., 3., 5., 2., 4., 6.]));
        let v = Vector::from_vec(vec![1., 2., 3.]);
        assert!(matches!(vec_inv(&v, 2, 2), Err(TeimError::DimensionMismatch(_))));
    }

    #[test]
    fn vec_round_trip_random() {
        let mut r = rng(3);
        let v = Vector::from_iterator(12, random_matrix(&mut r, 12, 1).iter().copied());
        let x = vec_inv(&v, 3, 4).unwrap();
        for j in 0..4 {
            for i in 0..3 {
                assert_eq!(x[(i, j)], v[i + 3 * j]);
            }
        }
        assert_eq!(vec(&x), v);
    }

    #[test]
    fn vecd_examples() {
        assert_eq!(vecd(&Matrix::identity(3, 3)).unwrap().as_slice(), &[1., 1., 1.]);
        assert_eq!(vecd(&m(2, 2, &[1., 2., 3., 4.])).unwrap().as_slice(), &[1., 4.]);
        assert!(matches!(vecd(&Matrix::zeros(2, 3)), Err(TeimError::NonSquare { .. })));
    }

    #[test]
    fn vecd_of_selected_block_is_mask() {
        let mut r = rng(5);
        let a = random_matrix(&mut r, 7, 5);
        let pairs = MaskPairs::new(vec![0, 3, 6, 2, 2, 4], vec![1, 1, 4, 0, 3, 2]).unwrap();
        let p1 = SelectionOperator::new(7, pairs.row_indices().to_vec()).unwrap();
        let p2 = SelectionOperator::new(5, pairs.col_indices().to_vec()).unwrap();
        let block = p2
            .select_rows(&p1.select_rows(&a).unwrap().transpose())
            .unwrap()
            .transpose();
        let d = vecd(&block).unwrap();
        for (k, (i, j)) in pairs.pairs().enumerate() {
            assert_eq!(d[k], a[(i, j)]);
        }
    }

    #[test]
    fn kron_examples() {
        let a = m(2, 2, &[1., 2., 3., 4.]);
        let blk = kron(&Matrix::identity(2, 2), &a);
        let mut expected = Matrix::zeros(4, 4);
        expected.view_mut((0, 0), (2, 2)).copy_from(&a);
        expected.view_mut((2, 2), (2, 2)).copy_from(&a);
        assert_eq!(blk, expected);
        assert_eq!(
            kron(&m(1, 2, &[1., 2.]), &m(2, 1, &[3., 4.])),
            m(2, 2, &[3., 6., 4., 8.])
        );
    }

    #[test]
    fn kron_vec_identity() {
        let mut r = rng(11);
        let u1 = random_matrix(&mut r, 5, 3);
        let u2 = random_matrix(&mut r, 4, 2);
        let x = random_matrix(&mut r, 3, 2);
        let lhs = vec(&(&u1 * &x * u2.transpose()));
        let k = kron_oracle(&u2, &u1);
        assert_eq!(kron(&u2, &u1), k);
        let rhs = k * vec(&x);
        assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn khatri_rao_examples() {
        let a = m(2, 1, &[1., 2.]);
        let b = m(3, 1, &[3., 4., 5.]);
        assert_eq!(khatri_rao_colwise(&a, &b).unwrap(), kron(&a, &b));
        let kr = khatri_rao_colwise(&Matrix::identity(2, 2), &Matrix::identity(2, 2)).unwrap();
        assert_eq!(kr, m(4, 2, &[1., 0., 0., 0., 0., 0., 0., 1.]));
        assert!(khatri_rao_colwise(&Matrix::zeros(2, 2), &Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn khatri_rao_mixed_product() {
        let mut r = rng(17);
        let a = random_matrix(&mut r, 3, 3);
        let b = random_matrix(&mut r, 3, 3);
        let c = random_matrix(&mut r, 3, 4);
        let d = random_matrix(&mut r, 3, 4);
        let lhs = kron(&a, &b) * khatri_rao_colwise(&c, &d).unwrap();
        let rhs = khatri_rao_colwise(&(&a * &c), &(&b * &d)).unwrap();
        assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn commutation_examples() {
        let x = m(2, 2, &[1., 2., 3., 4.]);
        let out = commutation_apply(&vec(&x), 2, 2).unwrap();
        assert_eq!(out, vec(&x.transpose()));

        let mut r = rng(2);
        let x = random_matrix(&mut r, 3, 5);
        let once = commutation_apply(&vec(&x), 3, 5).unwrap();
        assert_eq!(commutation_apply(&once, 5, 3).unwrap(), vec(&x));
        assert!(commutation_apply(&vec(&x), 4, 4).is_err());
    }

    #[test]
    fn commutation_matches_dense_definition() {
        let mut r = rng(23);
        let x = random_matrix(&mut r, 3, 4);
        let dense = dense_commutation(3, 4);
        assert_eq!(dense * vec(&x), commutation_apply(&vec(&x), 3, 4).unwrap());
    }

    #[test]
    fn commutation_swaps_khatri_rao_of_selections() {
        // Column k of P1ᵀ ⊙ P2ᵀ is vec of the n2 x n1 matrix e_j e_iᵀ, so the
        // swap is P_{n2 n1} (P1ᵀ ⊙ P2ᵀ) = P2ᵀ ⊙ P1ᵀ.
        let (n1, n2) = (4, 3);
        let rows = [2, 0, 3, 1, 1];
        let cols = [1, 2, 0, 0, 2];
        let p1t = dense_selection(n1, &rows);
        let p2t = dense_selection(n2, &cols);
        let lhs = dense_commutation(n2, n1) * khatri_rao_colwise(&p1t, &p2t).unwrap();
        let rhs = khatri_rao_colwise(&p2t, &p1t).unwrap();
        assert_eq!(lhs, rhs);
        // and column by column through the lazy operator
        let kr = khatri_rao_colwise(&p1t, &p2t).unwrap();
        for k in 0..rows.len() {
            let col = Vector::from_iterator(n1 * n2, kr.column(k).iter().copied());
            let swapped = commutation_apply(&col, n2, n1).unwrap();
            assert_eq!(swapped.as_slice(), rhs.column(k).as_slice());
        }
    }

    #[test]
    fn mask_examples() {
        let mut r = rng(29);
        let x = random_matrix(&mut r, 3, 3);
        let full = MaskPairs::new((0..9).map(|k| k / 3).collect(), (0..9).map(|k| k % 3).collect()).unwrap();
        assert_eq!(mask_apply(&x, &full, 3, 3).unwrap(), x);

        let single = MaskPairs::new(vec![2], vec![1]).unwrap();
        assert_eq!(mask_apply(&x, &single, 1, 1).unwrap()[(0, 0)], x[(2, 1)]);

        let oob = MaskPairs::new(vec![3], vec![0]).unwrap();
        assert!(matches!(
            mask_apply(&x, &oob, 1, 1),
            Err(TeimError::IndexOutOfBounds { .. })
        ));
        assert!(MaskPairs::new(vec![1, 1], vec![0, 0]).is_err());
        assert!(MaskPairs::new(vec![1, 2], vec![0]).is_err());
    }

    #[test]
    fn mask_matches_dense_selection() {
        let mut r = rng(31);
        let x = random_matrix(&mut r, 6, 5);
        let pairs = MaskPairs::new(vec![0, 5, 3, 3, 1, 2], vec![4, 0, 1, 2, 2, 3]).unwrap();
        let linear: Vec<usize> = pairs.pairs().map(|(i, j)| i + 6 * j).collect();
        let p = dense_selection(30, &linear);
        let expected = p.transpose() * vec(&x);
        let masked = mask_apply(&x, &pairs, 2, 3).unwrap();
        // row-major fill: pair k sits at (k / 3, k % 3)
        for k in 0..6 {
            assert_eq!(masked[(k / 3, k % 3)], expected[k]);
        }
    }

    #[test]
    fn grid_sample_examples() {
        let mut r = rng(37);
        let a = random_matrix(&mut r, 4, 5);
        let full = InterpGrid::new(SelectionOperator::identity(4), SelectionOperator::identity(5)).unwrap();
        assert_eq!(grid_sample(&a, &full).unwrap(), a);

        let g = InterpGrid::new(
            SelectionOperator::new(4, vec![2]).unwrap(),
            SelectionOperator::new(5, vec![0, 3]).unwrap(),
        )
        .unwrap();
        let s = grid_sample(&a, &g).unwrap();
        assert_eq!(s.shape(), (1, 2));
        assert_eq!((s[(0, 0)], s[(0, 1)]), (a[(2, 0)], a[(2, 3)]));
        assert!(grid_sample(&Matrix::zeros(3, 5), &g).is_err());
    }

    #[test]
    fn grid_sample_equals_cartesian_mask() {
        let mut r = rng(41);
        let a = random_matrix(&mut r, 8, 7);
        let g = InterpGrid::new(
            SelectionOperator::new(8, vec![5, 1, 7]).unwrap(),
            SelectionOperator::new(7, vec![6, 0]).unwrap(),
        )
        .unwrap();
        let pairs = MaskPairs::cartesian(&g);
        assert_eq!(grid_sample(&a, &g).unwrap(), mask_apply(&a, &pairs, 3, 2).unwrap());
    }

    #[test]
    fn selection_rejects_out_of_range() {
        assert!(SelectionOperator::new(3, vec![0, 3]).is_err());
        let s = SelectionOperator::new(4, vec![3, 1, 3]).unwrap();
        assert!(s.has_duplicates());
    }

    #[test]
    fn argmax_abs_prefers_lowest_index() {
        assert_eq!(argmax_abs([1.0, -3.0, 3.0, 2.0]), Some((1, 3.0)));
        assert_eq!(argmax_abs(std::iter::empty()), None);
    }

    #[test]
    fn singular_systems_are_reported() {
        let s = m(2, 2, &[1., 2., 2., 4.]);
        assert!(matches!(
            solve(&s, &Matrix::identity(2, 2), "test"),
            Err(TeimError::Singular(_))
        ));
        let ok = m(2, 2, &[2., 1., 1., 3.]);
        let x = solve(&ok, &Matrix::identity(2, 2), "test").unwrap();
        assert!(max_abs_diff(&(ok * x), &Matrix::identity(2, 2)) < 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix(max: usize) -> impl Strategy<Value = Matrix> {
            (1..=max, 1..=max).prop_flat_map(|(r, c)| {
                proptest::collection::vec(-10.0f64..10.0, r * c).prop_map(move |d| Matrix::from_vec(r, c, d))
            })
        }

        proptest! {
            #[test]
            fn vec_round_trip(x in matrix(20)) {
                let v = vec(&x);
                prop_assert_eq!(vec_inv(&v, x.nrows(), x.ncols()).unwrap(), x);
            }

            #[test]
            fn commutation_is_transpose(x in matrix(12)) {
                let out = commutation_apply(&vec(&x), x.nrows(), x.ncols()).unwrap();
                prop_assert_eq!(out, vec(&x.transpose()));
            }

            #[test]
            fn kron_mixed_product(seed in 0u64..1000, p in 1usize..4, q in 1usize..4, r in 1usize..4) {
                let mut g = rng(seed);
                let a = random_matrix(&mut g, p, q);
                let b = random_matrix(&mut g, r, p);
                let c = random_matrix(&mut g, q, r);
                let d = random_matrix(&mut g, p, q);
                let lhs = kron(&a, &b) * kron(&c, &d);
                let rhs = kron(&(&a * &c), &(&b * &d));
                prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12);
                let assoc_l = kron(&kron(&a, &b), &c);
                let assoc_r = kron(&a, &kron(&b, &c));
                prop_assert!(max_abs_diff(&assoc_l, &assoc_r) <= 1e-12);
            }
        }
    }
}
