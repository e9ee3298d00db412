//! Greedy interpolation-point selection.
//!
//! [`teim`] walks the tensor basis `{u_k ⊗ v_l}` in row-major order. Its
//! residual at step `(k, l)` is the outer product of a DEIM residual of `u_k`
//! against `U1[:, ..k]` and one of `v_l` against `U2[:, ..l]`, so each step
//! costs two vector residuals instead of an `n1 x n2` matrix. The selected
//! pairs therefore always form a rectangular grid, and [`grid_of`] recovers
//! the same rows and columns that [`two_d_deim`] picks directly.
//! [`reference`] keeps the literal dense formulation for cross-checking.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TeimError};
use crate::linalg::{argmax_abs, check_nonsingular, solve, MaskPairs, Matrix, SelectionOperator};

/// A residual maximum below this fraction of the first one aborts selection.
pub const RESIDUAL_RTOL: f64 = 1e-14;

/// Rows `P5` and columns `P6` of a rectangular interpolation grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterpGrid {
    rows: SelectionOperator,
    cols: SelectionOperator,
}

impl InterpGrid {
    /// Rejects repeated row or column indices.
    pub fn new(rows: SelectionOperator, cols: SelectionOperator) -> Result<Self> {
        for sel in [&rows, &cols] {
            if sel.has_duplicates() {
                let mut seen = vec![false; sel.source_dim()];
                let dup = sel
                    .indices()
                    .iter()
                    .copied()
                    .find(|&i| std::mem::replace(&mut seen[i], true))
                    .expect("duplicate present");
                return Err(TeimError::DuplicateIndex(dup));
            }
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> &SelectionOperator {
        &self.rows
    }

    pub fn cols(&self) -> &SelectionOperator {
        &self.cols
    }

    /// `(m1, m2)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    /// `(n1, n2)`.
    pub fn source_dims(&self) -> (usize, usize) {
        (self.rows.source_dim(), self.cols.source_dim())
    }

    /// Errors unless `P5 U1` and `P6 U2` are square and nonsingular.
    pub fn check_against(&self, u1: &Matrix, u2: &Matrix) -> Result<()> {
        check_nonsingular(&self.rows.select_rows(u1)?, "row interpolation matrix P5 U1")?;
        check_nonsingular(&self.cols.select_rows(u2)?, "column interpolation matrix P6 U2")
    }

    /// Linear indices `rows[r] + n1 cols[c]` in the order `r + m1 c`, i.e.
    /// the entries of `vec(A)` that `vec(P5 A P6ᵀ)` reads.
    pub fn vec_indices(&self) -> Vec<usize> {
        let n1 = self.rows.source_dim();
        let mut out = Vec::with_capacity(self.rows.len() * self.cols.len());
        for &j in self.cols.indices() {
            for &i in self.rows.indices() {
                out.push(i + n1 * j);
            }
        }
        out
    }
}

/// Output of [`teim`]: every selected pair in iteration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeimTrace {
    source_dims: (usize, usize),
    shape: (usize, usize),
    flat_pairs: MaskPairs,
    residual_maxima: Vec<f64>,
}

impl TeimTrace {
    pub fn new(
        source_dims: (usize, usize),
        shape: (usize, usize),
        flat_pairs: MaskPairs,
        residual_maxima: Vec<f64>,
    ) -> Result<Self> {
        let m = shape.0 * shape.1;
        if flat_pairs.len() != m || residual_maxima.len() != m {
            return Err(TeimError::DimensionMismatch(format!(
                "a {}x{} trace needs {m} pairs and maxima, got {} and {}",
                shape.0,
                shape.1,
                flat_pairs.len(),
                residual_maxima.len()
            )));
        }
        for (i, j) in flat_pairs.pairs() {
            if i >= source_dims.0 {
                return Err(TeimError::IndexOutOfBounds {
                    index: i,
                    bound: source_dims.0,
                });
            }
            if j >= source_dims.1 {
                return Err(TeimError::IndexOutOfBounds {
                    index: j,
                    bound: source_dims.1,
                });
            }
        }
        Ok(Self {
            source_dims,
            shape,
            flat_pairs,
            residual_maxima,
        })
    }

    pub fn flat_pairs(&self) -> &MaskPairs {
        &self.flat_pairs
    }

    pub fn residual_maxima(&self) -> &[f64] {
        &self.residual_maxima
    }

    /// `(m1, m2)`.
    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    /// `(n1, n2)`.
    pub fn source_dims(&self) -> (usize, usize) {
        self.source_dims
    }

    /// Whether the pairs are exactly the row-major Cartesian product of
    /// `m1` distinct rows and `m2` distinct columns.
    pub fn is_rectangular(&self) -> bool {
        grid_of(self).is_ok()
    }
}

/// Greedy DEIM run that also reports each step's residual maximum.
struct Greedy {
    indices: Vec<usize>,
    maxima: Vec<f64>,
}

fn greedy(u: &Matrix, what: &str) -> Result<Greedy> {
    let (n, m) = u.shape();
    if m == 0 || m > n {
        return Err(TeimError::InvalidArgument(format!(
            "{what}: need 1 <= columns <= rows, got {n}x{m}"
        )));
    }
    let (first, max0) = argmax_abs(u.column(0).iter().copied()).expect("nonempty column");
    if !(max0 > 0.0) || !max0.is_finite() {
        return Err(TeimError::RankDeficient(format!("{what}: first basis vector is zero")));
    }
    let mut indices = vec![first];
    let mut maxima = vec![max0];
    for l in 1..m {
        let basis = u.columns(0, l);
        let pu = basis.select_rows(indices.iter());
        let rhs = u.column(l).select_rows(indices.iter());
        let c = solve(&pu, &Matrix::from_column_slice(l, 1, rhs.as_slice()), what)?;
        let r = u.column(l) - basis * c.column(0);
        let (idx, max) = argmax_abs(r.iter().copied()).expect("nonempty residual");
        if !(max > RESIDUAL_RTOL * max0) {
            return Err(TeimError::RankDeficient(format!(
                "{what}: residual {max:e} at step {} is below 1e-14 x {max0:e}",
                l + 1
            )));
        }
        indices.push(idx);
        maxima.push(max);
    }
    Ok(Greedy { indices, maxima })
}

/// DEIM point selection on the columns of `u`. Returns the indices and the
/// residual maximum of every step.
pub fn deim(u: &Matrix) -> Result<(SelectionOperator, Vec<f64>)> {
    let g = greedy(u, "DEIM")?;
    Ok((SelectionOperator::new(u.nrows(), g.indices)?, g.maxima))
}

/// TEIM point selection for the tensor basis `{u1_k ⊗ u2_l}`.
pub fn teim(u1: &Matrix, u2: &Matrix) -> Result<TeimTrace> {
    let left = greedy(u1, "TEIM rows")?;
    let right = greedy(u2, "TEIM columns")?;
    let (m1, m2) = (u1.ncols(), u2.ncols());
    let mut rows = Vec::with_capacity(m1 * m2);
    let mut cols = Vec::with_capacity(m1 * m2);
    let mut maxima = Vec::with_capacity(m1 * m2);
    for k in 0..m1 {
        for l in 0..m2 {
            // argmax of |a bᵀ| is (argmax |a|, argmax |b|), ties included
            rows.push(left.indices[k]);
            cols.push(right.indices[l]);
            maxima.push(left.maxima[k] * right.maxima[l]);
        }
    }
    TeimTrace::new((u1.nrows(), u2.nrows()), (m1, m2), MaskPairs::new(rows, cols)?, maxima)
}

/// DEIM on each factor separately.
pub fn two_d_deim(u1: &Matrix, u2: &Matrix) -> Result<InterpGrid> {
    let (rows, _) = deim(u1)?;
    let (cols, _) = deim(u2)?;
    InterpGrid::new(rows, cols)
}

/// Extracts the grid from a rectangular trace: rows from pairs
/// `0, m2, 2 m2, ...`, columns from pairs `0..m2`.
pub fn grid_of(trace: &TeimTrace) -> Result<InterpGrid> {
    let (m1, m2) = trace.shape;
    let (n1, n2) = trace.source_dims;
    let pr = trace.flat_pairs.row_indices();
    let pc = trace.flat_pairs.col_indices();
    let rows: Vec<usize> = (0..m1).map(|k| pr[k * m2]).collect();
    let cols: Vec<usize> = pc[..m2].to_vec();
    for (k, &row) in rows.iter().enumerate() {
        for (l, &col) in cols.iter().enumerate() {
            let p = k * m2 + l;
            if pr[p] != row || pc[p] != col {
                return Err(TeimError::NonRectangular(format!(
                    "pair {p} is ({}, {}), expected ({row}, {col})",
                    pr[p], pc[p]
                )));
            }
        }
    }
    InterpGrid::new(SelectionOperator::new(n1, rows)?, SelectionOperator::new(n2, cols)?)
        .map_err(|e| TeimError::NonRectangular(format!("grid indices repeat: {e}")))
}

/// Literal dense formulations, kept as independent references.
pub mod reference {
    use super::*;

    /// TEIM as written: at every step the coefficient system
    /// `((P1ᵀU1) .* (P2ᵀU2)) c = (P1ᵀu_k) .* (P2ᵀv_l)` is solved over all
    /// earlier basis functions and the full residual matrix is formed.
    pub fn teim_dense(u1: &Matrix, u2: &Matrix) -> Result<TeimTrace> {
        let (n1, m1) = u1.shape();
        let (n2, m2) = u2.shape();
        if m1 == 0 || m2 == 0 || m1 > n1 || m2 > n2 {
            return Err(TeimError::InvalidArgument(format!(
                "TEIM needs 1 <= m <= n per factor, got {n1}x{m1} and {n2}x{m2}"
            )));
        }
        let mut rows: Vec<usize> = Vec::new();
        let mut cols: Vec<usize> = Vec::new();
        let mut maxima = Vec::new();
        let mut first_max = 0.0;
        for k in 0..m1 {
            for l in 0..m2 {
                let p = rows.len();
                // earlier basis functions, in the same row-major order
                let earlier: Vec<(usize, usize)> = (0..p).map(|q| (q / m2, q % m2)).collect();
                let mut r = Matrix::from_fn(n1, n2, |i, j| u1[(i, k)] * u2[(j, l)]);
                if p > 0 {
                    let g = Matrix::from_fn(p, p, |a, q| {
                        let (bi, bj) = earlier[q];
                        u1[(rows[a], bi)] * u2[(cols[a], bj)]
                    });
                    let rhs = Matrix::from_fn(p, 1, |a, _| u1[(rows[a], k)] * u2[(cols[a], l)]);
                    let c = solve(&g, &rhs, "TEIM interpolation system")?;
                    for (q, &(bi, bj)) in earlier.iter().enumerate() {
                        let cq = c[(q, 0)];
                        for j in 0..n2 {
                            for i in 0..n1 {
                                r[(i, j)] -= cq * u1[(i, bi)] * u2[(j, bj)];
                            }
                        }
                    }
                }
                // row-major scan so the lowest (i, then j) wins ties
                let (lin, max) = argmax_abs((0..n1 * n2).map(|t| r[(t / n2, t % n2)])).expect("nonempty");
                if p == 0 {
                    first_max = max;
                }
                if !(max > RESIDUAL_RTOL * first_max) || first_max == 0.0 {
                    return Err(TeimError::RankDeficient(format!(
                        "TEIM residual {max:e} at step {} is below 1e-14 x {first_max:e}",
                        p + 1
                    )));
                }
                rows.push(lin / n2);
                cols.push(lin % n2);
                maxima.push(max);
            }
        }
        TeimTrace::new((n1, n2), (m1, m2), MaskPairs::new(rows, cols)?, maxima)
    }
}

#[cfg(test)]
mod tests {
    use super::reference::teim_dense;
    use super::*;
    use crate::testing::{random_matrix, random_orthonormal, rng};
    use crate::verify::deim_oracle;

    #[test]
    fn deim_examples() {
        let id = Matrix::identity(4, 2);
        assert_eq!(deim(&id).unwrap().0.indices(), &[0, 1]);
        let v = Matrix::from_column_slice(2, 1, &[0.6, 0.8]);
        assert_eq!(deim(&v).unwrap().0.indices(), &[1]);
    }

    #[test]
    fn deim_matches_oracle() {
        for seed in 0..20 {
            let mut r = rng(seed);
            let u = random_orthonormal(&mut r, 8, 3);
            assert_eq!(deim(&u).unwrap().0.indices(), deim_oracle(&u).as_slice());
        }
    }

    #[test]
    fn deim_is_prefix_stable() {
        let mut r = rng(3);
        let u = random_orthonormal(&mut r, 15, 6);
        let (full, _) = deim(&u).unwrap();
        for m in 1..=6 {
            let (part, _) = deim(&u.columns(0, m).into_owned()).unwrap();
            assert_eq!(part.indices(), &full.indices()[..m]);
        }
    }

    #[test]
    fn deim_rejects_dependent_columns() {
        let mut r = rng(4);
        let c = random_matrix(&mut r, 6, 1);
        let u = Matrix::from_fn(6, 2, |i, j| c[(i, 0)] * (j as f64 + 1.0));
        assert!(matches!(deim(&u), Err(TeimError::RankDeficient(_))));
    }

    #[test]
    fn deim_interpolation_matrices_stay_nonsingular() {
        let mut r = rng(5);
        let u = random_orthonormal(&mut r, 20, 7);
        let (p, maxima) = deim(&u).unwrap();
        assert!(maxima.iter().all(|&x| x > 0.0));
        for m in 1..=7 {
            let sel = SelectionOperator::new(20, p.indices()[..m].to_vec()).unwrap();
            let pu = sel.select_rows(&u.columns(0, m).into_owned()).unwrap();
            check_nonsingular(&pu, "test").unwrap();
        }
    }

    #[test]
    fn teim_rank_one() {
        let mut r = rng(6);
        let u = random_matrix(&mut r, 9, 1);
        let v = random_matrix(&mut r, 7, 1);
        let t = teim(&u, &v).unwrap();
        let i = argmax_abs(u.iter().copied()).unwrap().0;
        let j = argmax_abs(v.iter().copied()).unwrap().0;
        assert_eq!(t.flat_pairs().pairs().collect::<Vec<_>>(), vec![(i, j)]);
        let g = two_d_deim(&u, &v).unwrap();
        assert_eq!((g.rows().indices(), g.cols().indices()), (&[i][..], &[j][..]));
    }

    #[test]
    fn teim_canonical() {
        let t = teim(&Matrix::identity(6, 3), &Matrix::identity(5, 2)).unwrap();
        let g = grid_of(&t).unwrap();
        assert_eq!(g.rows().indices(), &[0, 1, 2]);
        assert_eq!(g.cols().indices(), &[0, 1]);
        let g2 = two_d_deim(&Matrix::identity(6, 3), &Matrix::identity(5, 2)).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn teim_matches_dense_reference() {
        for seed in 0..25 {
            let mut r = rng(100 + seed);
            let u1 = random_orthonormal(&mut r, 12, 3);
            let u2 = random_orthonormal(&mut r, 10, 2);
            let fast = teim(&u1, &u2).unwrap();
            let dense = teim_dense(&u1, &u2).unwrap();
            assert_eq!(fast.flat_pairs(), dense.flat_pairs());
            for (a, b) in fast.residual_maxima().iter().zip(dense.residual_maxima()) {
                assert!((a - b).abs() <= 1e-10 * b.max(1.0), "{a} vs {b}");
            }
            assert!(dense.is_rectangular());
            assert_eq!(grid_of(&fast).unwrap(), two_d_deim(&u1, &u2).unwrap());
        }
    }

    #[test]
    fn grid_of_reads_row_major_positions() {
        let pairs = MaskPairs::new(vec![4, 4, 4, 1, 1, 1], vec![2, 0, 3, 2, 0, 3]).unwrap();
        let t = TeimTrace::new((5, 4), (2, 3), pairs, vec![1.0; 6]).unwrap();
        let g = grid_of(&t).unwrap();
        assert_eq!(g.rows().indices(), &[4, 1]);
        assert_eq!(g.cols().indices(), &[2, 0, 3]);
    }

    #[test]
    fn grid_of_rejects_non_rectangular() {
        let pairs = MaskPairs::new(vec![0, 0, 1, 2], vec![0, 1, 0, 1]).unwrap();
        let t = TeimTrace::new((3, 3), (2, 2), pairs, vec![1.0; 4]).unwrap();
        assert!(matches!(grid_of(&t), Err(TeimError::NonRectangular(_))));
        assert!(!t.is_rectangular());
    }

    #[test]
    fn grid_rejects_duplicates() {
        let rows = SelectionOperator::new(5, vec![1, 1]).unwrap();
        let cols = SelectionOperator::new(5, vec![0]).unwrap();
        assert!(matches!(InterpGrid::new(rows, cols), Err(TeimError::DuplicateIndex(1))));
    }

    #[test]
    fn vec_indices_follow_column_major_grid() {
        let g = InterpGrid::new(
            SelectionOperator::new(4, vec![3, 1]).unwrap(),
            SelectionOperator::new(3, vec![2, 0]).unwrap(),
        )
        .unwrap();
        assert_eq!(g.vec_indices(), vec![3 + 8, 1 + 8, 3, 1]);
    }
}
