//! Order-3 snapshot tensors and the POD bases built from them.
//!
//! The tensor POD basis is the pair of leading left singular vectors of the
//! mode-1 and mode-2 unfoldings (a truncated HOSVD with the third mode kept
//! whole). [`standard_pod`] is the vectorized counterpart used by DEIM.

use nalgebra::SVD;

use crate::error::{Result, TeimError};
use crate::linalg::{Matrix, Vector, SINGULAR_RTOL};

/// Dense `n1 x n2 x N` tensor. Entry `(i, j, k)` lives at
/// `i + n1 j + n1 n2 k`, so each slice is a contiguous column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(dims: (usize, usize, usize), data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.0 * dims.1 * dims.2 {
            return Err(TeimError::DimensionMismatch(format!(
                "tensor {dims:?} needs {} entries, got {}",
                dims.0 * dims.1 * dims.2,
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        Self {
            dims: (n1, n2, n3),
            data: vec![0.0; n1 * n2 * n3],
        }
    }

    /// Stacks equally shaped matrices along the third mode.
    pub fn from_slices(slices: &[Matrix]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| TeimError::InvalidArgument("no slices given".into()))?;
        let (n1, n2) = first.shape();
        let mut data = Vec::with_capacity(n1 * n2 * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (n1, n2) {
                return Err(TeimError::DimensionMismatch(format!(
                    "slice {k} is {:?}, expected {:?}",
                    s.shape(),
                    (n1, n2)
                )));
            }
            data.extend_from_slice(s.as_slice());
        }
        Ok(Self {
            dims: (n1, n2, slices.len()),
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let (n1, n2, _) = self.dims;
        self.data[i + n1 * j + n1 * n2 * k]
    }

    pub fn slice(&self, k: usize) -> Matrix {
        let (n1, n2, _) = self.dims;
        let len = n1 * n2;
        Matrix::from_column_slice(n1, n2, &self.data[k * len..(k + 1) * len])
    }

    pub fn slices(&self) -> impl ExactSizeIterator<Item = Matrix> + '_ {
        (0..self.dims.2).map(|k| self.slice(k))
    }

    /// `n1 n2 x N` matrix whose columns are the vectorized slices.
    pub fn snapshot_matrix(&self) -> Matrix {
        let (n1, n2, n3) = self.dims;
        Matrix::from_column_slice(n1 * n2, n3, &self.data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

/// Mode-`mode` unfolding with the cyclic column ordering:
/// mode 1 is `n1 x (n2 N)` with column `j + n2 k`, mode 2 is `n2 x (N n1)`
/// with column `k + N i`, mode 3 is `N x (n1 n2)` with column `i + n1 j`.
pub fn unfold(t: &Tensor3, mode: usize) -> Result<Matrix> {
    let (n1, n2, n3) = t.dims;
    match mode {
        1 => Ok(Matrix::from_column_slice(n1, n2 * n3, &t.data)),
        2 => Ok(Matrix::from_fn(n2, n3 * n1, |j, col| t.get(col / n3, j, col % n3))),
        3 => Ok(Matrix::from_fn(n3, n1 * n2, |k, col| t.data[col + n1 * n2 * k])),
        _ => Err(TeimError::InvalidArgument(format!(
            "unfolding mode must be 1, 2 or 3, got {mode}"
        ))),
    }
}

/// Inverse of [`unfold`].
pub fn fold(m: &Matrix, mode: usize, dims: (usize, usize, usize)) -> Result<Tensor3> {
    let (n1, n2, n3) = dims;
    let expected = match mode {
        1 => (n1, n2 * n3),
        2 => (n2, n3 * n1),
        3 => (n3, n1 * n2),
        _ => {
            return Err(TeimError::InvalidArgument(format!(
                "unfolding mode must be 1, 2 or 3, got {mode}"
            )))
        }
    };
    if m.shape() != expected {
        return Err(TeimError::DimensionMismatch(format!(
            "mode-{mode} unfolding of {dims:?} is {expected:?}, got {:?}",
            m.shape()
        )));
    }
    let mut t = Tensor3::zeros(n1, n2, n3);
    for k in 0..n3 {
        for j in 0..n2 {
            for i in 0..n1 {
                t.data[i + n1 * j + n1 * n2 * k] = match mode {
                    1 => m[(i, j + n2 * k)],
                    2 => m[(j, k + n3 * i)],
                    _ => m[(k, i + n1 * j)],
                };
            }
        }
    }
    Ok(t)
}

/// Tensor POD basis: orthonormal factors `U1` (`n1 x m1`) and `U2`
/// (`n2 x m2`) spanning `{u1_i ⊗ u2_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorBasis {
    pub u1: Matrix,
    pub u2: Matrix,
    /// Mode singular values, nonincreasing, untruncated.
    pub singular_values: [Vec<f64>; 3],
}

impl FactorBasis {
    /// The third mode is never truncated.
    pub const MODE3_KEPT: bool = true;

    /// Wraps given factors after checking orthonormality to 1e-10.
    pub fn from_factors(u1: Matrix, u2: Matrix) -> Result<Self> {
        for (name, u) in [("U1", &u1), ("U2", &u2)] {
            if u.ncols() > u.nrows() || u.ncols() == 0 {
                return Err(TeimError::DimensionMismatch(format!(
                    "{name} is {}x{}, need 1 <= columns <= rows",
                    u.nrows(),
                    u.ncols()
                )));
            }
            let err = orthonormality_error(u);
            if err > 1e-10 {
                return Err(TeimError::InvalidArgument(format!(
                    "{name} columns are not orthonormal (max |UᵀU - I| = {err:e})"
                )));
            }
        }
        Ok(Self {
            u1,
            u2,
            singular_values: [Vec::new(), Vec::new(), Vec::new()],
        })
    }

    pub fn m1(&self) -> usize {
        self.u1.ncols()
    }

    pub fn m2(&self) -> usize {
        self.u2.ncols()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.u1.nrows(), self.u2.nrows())
    }

    /// Leading `m1`, `m2` columns.
    pub fn truncate(&self, m1: usize, m2: usize) -> Result<Self> {
        if m1 == 0 || m2 == 0 || m1 > self.m1() || m2 > self.m2() {
            return Err(TeimError::InvalidArgument(format!(
                "cannot truncate a ({}, {}) basis to ({m1}, {m2})",
                self.m1(),
                self.m2()
            )));
        }
        Ok(Self {
            u1: self.u1.columns(0, m1).into_owned(),
            u2: self.u2.columns(0, m2).into_owned(),
            singular_values: self.singular_values.clone(),
        })
    }

    /// `U1 X U2ᵀ`.
    pub fn expand(&self, x: &Matrix) -> Matrix {
        &self.u1 * x * self.u2.transpose()
    }

    /// `U1ᵀ A U2`.
    pub fn coefficients(&self, a: &Matrix) -> Matrix {
        self.u1.transpose() * a * &self.u2
    }
}

/// Standard (vectorized) POD basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    pub v: Matrix,
    pub singular_values: Vec<f64>,
}

impl PodBasis {
    pub fn from_columns(v: Matrix) -> Result<Self> {
        let err = orthonormality_error(&v);
        if err > 1e-10 {
            return Err(TeimError::InvalidArgument(format!(
                "POD columns are not orthonormal (max |VᵀV - I| = {err:e})"
            )));
        }
        Ok(Self {
            v,
            singular_values: Vec::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.v.ncols()
    }

    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(TeimError::InvalidArgument(format!(
                "cannot truncate a {}-mode POD basis to {k}",
                self.k()
            )));
        }
        Ok(Self {
            v: self.v.columns(0, k).into_owned(),
            singular_values: self.singular_values.clone(),
        })
    }
}

/// Max entry of `|UᵀU - I|`.
pub fn orthonormality_error(u: &Matrix) -> f64 {
    let g = u.transpose() * u;
    let mut err = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((g[(i, j)] - target).abs());
        }
    }
    err
}

/// Leading `k` left singular vectors of `m` with the sign convention applied,
/// plus all singular values.
fn leading_left_singular(m: Matrix, k: usize, what: &str) -> Result<(Matrix, Vec<f64>)> {
    let svd = SVD::new(m, true, false);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    check_rank(&sv, k, what)?;
    let u = svd.u.expect("left singular vectors requested");
    let mut u = u.columns(0, k).into_owned();
    fix_signs(&mut u);
    Ok((u, sv))
}

fn check_rank(sv: &[f64], k: usize, what: &str) -> Result<()> {
    if k == 0 {
        return Err(TeimError::InvalidArgument(format!(
            "{what}: at least one mode is required"
        )));
    }
    if k > sv.len() {
        return Err(TeimError::RankDeficient(format!(
            "{what}: requested {k} modes but only {} singular values exist",
            sv.len()
        )));
    }
    let smax = sv[0];
    if !(sv[k - 1] > SINGULAR_RTOL * smax) {
        return Err(TeimError::RankDeficient(format!(
            "{what}: singular value {k} is {:e}, below 1e-12 x {smax:e}",
            sv[k - 1]
        )));
    }
    Ok(())
}

/// Makes the largest-magnitude entry of every column positive.
fn fix_signs(u: &mut Matrix) {
    for mut col in u.column_iter_mut() {
        let Some((idx, _)) = crate::linalg::argmax_abs(col.iter().copied()) else {
            continue;
        };
        if col[idx] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Truncated HOSVD of `t` with ranks `(m1, m2, N)`.
pub fn hosvd_factors(t: &Tensor3, m1: usize, m2: usize) -> Result<FactorBasis> {
    let (n1, n2, n3) = t.dims();
    if n3 == 0 {
        return Err(TeimError::InvalidArgument("tensor has no snapshots".into()));
    }
    if m1 > n1 || m2 > n2 {
        return Err(TeimError::InvalidArgument(format!(
            "requested ({m1}, {m2}) modes for a {n1}x{n2} tensor"
        )));
    }
    let (mode1, (mode2, mode3)) = rayon::join(
        || leading_left_singular(unfold(t, 1)?, m1, "mode-1 unfolding"),
        || {
            rayon::join(
                || leading_left_singular(unfold(t, 2)?, m2, "mode-2 unfolding"),
                || -> Result<Vec<f64>> {
                    let m = t.snapshot_matrix();
                    Ok(SVD::new(m, false, false).singular_values.iter().copied().collect())
                },
            )
        },
    );
    let (u1, s1) = mode1?;
    let (u2, s2) = mode2?;
    Ok(FactorBasis {
        u1,
        u2,
        singular_values: [s1, s2, mode3?],
    })
}

/// Leading `k` left singular vectors of the snapshot matrix `s` (columns are
/// vectorized snapshots).
pub fn standard_pod(s: &Matrix, k: usize) -> Result<PodBasis> {
    if k > s.nrows().min(s.ncols()) {
        return Err(TeimError::InvalidArgument(format!(
            "requested {k} POD modes from a {}x{} snapshot matrix",
            s.nrows(),
            s.ncols()
        )));
    }
    let (v, singular_values) = leading_left_singular(s.clone(), k, "snapshot matrix")?;
    Ok(PodBasis { v, singular_values })
}

/// Subtracts the mean slice. Returns the centered tensor and the mean.
pub fn center(t: &Tensor3) -> (Tensor3, Matrix) {
    let (n1, n2, n3) = t.dims();
    let mut mean = Matrix::zeros(n1, n2);
    for s in t.slices() {
        mean += s;
    }
    mean /= n3 as f64;
    let len = n1 * n2;
    let mut data = t.data.clone();
    for chunk in data.chunks_mut(len) {
        for (x, m) in chunk.iter_mut().zip(mean.as_slice()) {
            *x -= m;
        }
    }
    (Tensor3 { dims: t.dims, data }, mean)
}

/// Mean of the columns of a snapshot matrix.
pub fn column_mean(s: &Matrix) -> Vector {
    s.column_mean()
}
