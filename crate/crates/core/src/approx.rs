//! Approximating matrix-valued functions from sampled entries.
//!
//! [`TeimApproximator`] evaluates `Ã = U1 (P5 U1)⁻¹ (P5 A P6ᵀ) ((U2 (P6 U2)⁻¹))ᵀ`
//! with both outer factors precomputed, so an evaluation reads `m1 m2`
//! entries of `A` and performs two small dense products.
//! [`DeimApproximator`] is the vectorized baseline on a standard POD basis.

use std::hint::black_box;
use std::time::Instant;

use crate::error::{Result, TeimError};
use crate::interp::{deim, InterpGrid};
use crate::linalg::{
    grid_sample, khatri_rao_colwise, kron, right_divide, solve, vec, vec_inv, MaskPairs, Matrix, SelectionOperator,
    Vector,
};
use crate::tensor::{standard_pod, FactorBasis, PodBasis};

/// Order of the two products in the online TEIM formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `(left · S) · rightᵀ`, about `n1 m1 m2 + n1 n2 m2` flops.
    LeftFirst,
    /// `left · (S · rightᵀ)`, about `m1 m2 n2 + n1 n2 m1` flops.
    RightFirst,
}

impl Direction {
    /// The cheaper order by flop count; `LeftFirst` on ties.
    pub fn preferred(n1: usize, n2: usize, m1: usize, m2: usize) -> Self {
        let left = n1 * m1 * m2 + n1 * n2 * m2;
        let right = m1 * m2 * n2 + n1 * n2 * m1;
        if left <= right {
            Direction::LeftFirst
        } else {
            Direction::RightFirst
        }
    }
}

/// Precomputed two-sided TEIM interpolant.
#[derive(Debug, Clone)]
pub struct TeimApproximator {
    left: Matrix,
    right_t: Matrix,
    grid: InterpGrid,
    direction: Direction,
}

impl TeimApproximator {
    /// `left = U1 (P5 U1)⁻¹`, `right = U2 (P6 U2)⁻¹`.
    pub fn build(basis: &FactorBasis, grid: &InterpGrid) -> Result<Self> {
        if grid.shape() != (basis.m1(), basis.m2()) || grid.source_dims() != basis.dims() {
            return Err(TeimError::DimensionMismatch(format!(
                "grid {:?} over {:?} does not fit a ({}, {}) basis over {:?}",
                grid.shape(),
                grid.source_dims(),
                basis.m1(),
                basis.m2(),
                basis.dims()
            )));
        }
        let p5u1 = grid.rows().select_rows(&basis.u1)?;
        let p6u2 = grid.cols().select_rows(&basis.u2)?;
        let left = right_divide(&basis.u1, &p5u1, "row interpolation matrix P5 U1")?;
        let right = right_divide(&basis.u2, &p6u2, "column interpolation matrix P6 U2")?;
        let (n1, n2) = basis.dims();
        Ok(Self {
            left,
            right_t: right.transpose(),
            grid: grid.clone(),
            direction: Direction::preferred(n1, n2, basis.m1(), basis.m2()),
        })
    }

    pub fn left(&self) -> &Matrix {
        &self.left
    }

    pub fn right(&self) -> Matrix {
        self.right_t.transpose()
    }

    pub fn grid(&self) -> &InterpGrid {
        &self.grid
    }

    /// The direction [`approximate`](Self::approximate) uses.
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn approximate(&self, a: &Matrix) -> Result<Matrix> {
        self.approximate_with(a, self.direction)
    }

    pub fn approximate_with(&self, a: &Matrix, direction: Direction) -> Result<Matrix> {
        Ok(self.from_samples(&grid_sample(a, &self.grid)?, direction))
    }

    /// Interpolant built from the `m1 x m2` grid values directly.
    pub fn from_samples(&self, s: &Matrix, direction: Direction) -> Matrix {
        match direction {
            Direction::LeftFirst => (&self.left * s) * &self.right_t,
            Direction::RightFirst => &self.left * (s * &self.right_t),
        }
    }
}

pub fn build_teim(basis: &FactorBasis, grid: &InterpGrid) -> Result<TeimApproximator> {
    TeimApproximator::build(basis, grid)
}

/// Evaluates `(U2 ⊗ U1) K⁻¹ vecd(P1 A P2ᵀ)` with the dense `m1 m2 x m1 m2`
/// Khatri-Rao interpolation matrix `K[a, i + m1 j] = U1[p_a, i] U2[q_a, j]`.
/// Reference only: costs `O(n1 n2 m1 m2)`.
pub fn approximate_khatri_rao_reference(basis: &FactorBasis, pairs: &MaskPairs, a: &Matrix) -> Result<Matrix> {
    let (m1, m2) = (basis.m1(), basis.m2());
    let (n1, n2) = basis.dims();
    if pairs.len() != m1 * m2 {
        return Err(TeimError::DimensionMismatch(format!(
            "{} pairs for a ({m1}, {m2}) basis",
            pairs.len()
        )));
    }
    if a.shape() != (n1, n2) {
        return Err(TeimError::DimensionMismatch(format!(
            "basis over {n1}x{n2} applied to a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    // Rows of P2 U2 and P1 U1 at each pair, paired column-wise:
    // ((P2U2)ᵀ ⊙ (P1U1)ᵀ)ᵀ has row a equal to kron(U2[q_a,:], U1[p_a,:]).
    let p1u1 = SelectionOperator::new(n1, pairs.row_indices().to_vec())?.select_rows(&basis.u1)?;
    let p2u2 = SelectionOperator::new(n2, pairs.col_indices().to_vec())?.select_rows(&basis.u2)?;
    let k = khatri_rao_colwise(&p2u2.transpose(), &p1u1.transpose())?.transpose();
    let values = pairs.gather(a)?;
    let coef = solve(
        &k,
        &Matrix::from_column_slice(values.len(), 1, values.as_slice()),
        "Khatri-Rao interpolation matrix",
    )?;
    let full = kron(&basis.u2, &basis.u1) * coef;
    vec_inv(&Vector::from_column_slice(full.as_slice()), n1, n2)
}

/// Vectorized DEIM interpolant `Φ (PᵀΦ)⁻¹ Pᵀ`.
#[derive(Debug, Clone)]
pub struct DeimApproximator {
    projector: Matrix,
    indices: SelectionOperator,
}

impl DeimApproximator {
    /// Uses the given basis and indices (which need not come from DEIM).
    pub fn from_basis(phi: &Matrix, indices: SelectionOperator) -> Result<Self> {
        if indices.len() != phi.ncols() {
            return Err(TeimError::DimensionMismatch(format!(
                "{} indices for {} basis vectors",
                indices.len(),
                phi.ncols()
            )));
        }
        let pphi = indices.select_rows(phi)?;
        let projector = right_divide(phi, &pphi, "DEIM interpolation matrix PᵀΦ")?;
        Ok(Self { projector, indices })
    }

    pub fn projector(&self) -> &Matrix {
        &self.projector
    }

    pub fn indices(&self) -> &SelectionOperator {
        &self.indices
    }

    pub fn approximate_vec(&self, f: &Vector) -> Result<Vector> {
        Ok(&self.projector * self.indices.select_entries(f)?)
    }

    /// Interpolant from the sampled values `Pᵀf`.
    pub fn from_samples(&self, samples: &Vector) -> Vector {
        &self.projector * samples
    }

    /// Vectorizes `a`, interpolates and reshapes back.
    pub fn approximate(&self, a: &Matrix) -> Result<Matrix> {
        let (n1, n2) = a.shape();
        let samples = Vector::from_iterator(
            self.indices.len(),
            self.indices.indices().iter().map(|&i| a.as_slice()[i]),
        );
        if n1 * n2 != self.indices.source_dim() {
            return Err(TeimError::DimensionMismatch(format!(
                "DEIM over {} entries applied to a {n1}x{n2} matrix",
                self.indices.source_dim()
            )));
        }
        vec_inv(&self.from_samples(&samples), n1, n2)
    }
}

/// POD basis of `m` modes from the snapshot matrix `s`, DEIM indices on it.
pub fn build_deim_vectorized(s: &Matrix, m: usize) -> Result<DeimApproximator> {
    let pod = standard_pod(s, m)?;
    build_deim_from_pod(&pod)
}

pub fn build_deim_from_pod(pod: &PodBasis) -> Result<DeimApproximator> {
    let (indices, _) = deim(&pod.v)?;
    DeimApproximator::from_basis(&pod.v, indices)
}

/// `U1 U1ᵀ A U2 U2ᵀ`.
pub fn orth_project_tensor(basis: &FactorBasis, a: &Matrix) -> Matrix {
    basis.expand(&basis.coefficients(a))
}

/// `V Vᵀ f`.
pub fn orth_project_pod(pod: &PodBasis, f: &Vector) -> Vector {
    &pod.v * (pod.v.transpose() * f)
}

/// `V Vᵀ vec(A)`, reshaped.
pub fn orth_project_pod_matrix(pod: &PodBasis, a: &Matrix) -> Matrix {
    let p = orth_project_pod(pod, &vec(a));
    Matrix::from_column_slice(a.nrows(), a.ncols(), p.as_slice())
}

/// Mean over slices of `‖f_i − f̂_i‖_F / ‖f_i‖_F`.
pub fn relative_average_error(truth: &[Matrix], approx: &[Matrix]) -> Result<f64> {
    if truth.len() != approx.len() {
        return Err(TeimError::DimensionMismatch(format!(
            "{} reference slices but {} approximations",
            truth.len(),
            approx.len()
        )));
    }
    if truth.is_empty() {
        return Err(TeimError::InvalidArgument("no slices to compare".into()));
    }
    let mut total = 0.0;
    for (i, (f, g)) in truth.iter().zip(approx).enumerate() {
        if f.shape() != g.shape() {
            return Err(TeimError::DimensionMismatch(format!(
                "slice {i}: {:?} vs {:?}",
                f.shape(),
                g.shape()
            )));
        }
        let norm = f.norm();
        if norm == 0.0 {
            return Err(TeimError::ZeroNorm(i));
        }
        total += (f - g).norm() / norm;
    }
    Ok(total / truth.len() as f64)
}

/// Warm-up evaluations discarded before timing.
pub const WARMUP_REPS: usize = 10;

/// Median wall-clock nanoseconds per call of `eval`, cycling through
/// `stream`. Runs [`WARMUP_REPS`] untimed calls first.
pub fn time_online<F>(mut eval: F, stream: &[Matrix], repetitions: usize) -> Result<f64>
where
    F: FnMut(&Matrix) -> Result<Matrix>,
{
    if stream.is_empty() {
        return Err(TeimError::InvalidArgument("empty input stream".into()));
    }
    if repetitions < 100 {
        return Err(TeimError::InvalidArgument(format!(
            "at least 100 repetitions required, got {repetitions}"
        )));
    }
    for i in 0..WARMUP_REPS {
        black_box(eval(black_box(&stream[i % stream.len()]))?);
    }
    let mut samples = Vec::with_capacity(repetitions);
    for i in 0..repetitions {
        let a = &stream[i % stream.len()];
        let start = Instant::now();
        let out = eval(black_box(a))?;
        let elapsed = start.elapsed();
        black_box(out);
        samples.push(elapsed.as_nanos() as f64);
    }
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    Ok(if samples.len() % 2 == 0 {
        0.5 * (samples[mid - 1] + samples[mid])
    } else {
        samples[mid]
    })
}

/// Median online times in nanoseconds per evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineTiming {
    pub teim_left_first: f64,
    pub teim_right_first: f64,
    pub deim: f64,
}

impl OnlineTiming {
    /// TEIM time in its preferred direction.
    pub fn teim(&self, direction: Direction) -> f64 {
        match direction {
            Direction::LeftFirst => self.teim_left_first,
            Direction::RightFirst => self.teim_right_first,
        }
    }
}

/// Times both TEIM orders and DEIM on the same stream.
pub fn time_online_all(
    teim: &TeimApproximator,
    deim: &DeimApproximator,
    stream: &[Matrix],
    repetitions: usize,
) -> Result<OnlineTiming> {
    Ok(OnlineTiming {
        teim_left_first: time_online(|a| teim.approximate_with(a, Direction::LeftFirst), stream, repetitions)?,
        teim_right_first: time_online(|a| teim.approximate_with(a, Direction::RightFirst), stream, repetitions)?,
        deim: time_online(|a| deim.approximate(a), stream, repetitions)?,
    })
}
