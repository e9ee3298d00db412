//! Galerkin reduction of semi-linear matrix ODEs `X' = AX + XB + F(X, t)`.
//!
//! The matrix form keeps the state as a `k1 x k2` matrix in a tensor basis
//! `V1 X̃ V2ᵀ` and hyper-reduces `F` with TEIM on a rectangular grid. The
//! vector form flattens the state onto a standard POD basis and hyper-reduces
//! `vec(F)` either with the TEIM interpolant or with DEIM. All forms are
//! integrated with the same fixed-step RK4.

use std::fmt;
use std::sync::Arc;

use crate::approx::{DeimApproximator, TeimApproximator};
use crate::error::{Result, TeimError};
use crate::interp::InterpGrid;
use crate::linalg::{grid_sample, vec, Matrix, Vector};
use crate::tensor::{FactorBasis, PodBasis, Tensor3};

pub type EntrywiseFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type DenseFn = Arc<dyn Fn(&Matrix, f64) -> Matrix + Send + Sync>;

/// The `F(X, t)` term.
#[derive(Clone)]
pub enum Nonlinearity {
    Zero,
    /// `F(X, t)[i, j] = f(X[i, j], t)`; reduced models evaluate it on the
    /// sampled entries only.
    Entrywise(EntrywiseFn),
    /// General `F`; reduced models lift the state to evaluate it.
    Dense(DenseFn),
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Nonlinearity::Zero => "Zero",
            Nonlinearity::Entrywise(_) => "Entrywise(..)",
            Nonlinearity::Dense(_) => "Dense(..)",
        })
    }
}

impl Nonlinearity {
    pub fn entrywise(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Nonlinearity::Entrywise(Arc::new(f))
    }

    pub fn dense(f: impl Fn(&Matrix, f64) -> Matrix + Send + Sync + 'static) -> Self {
        Nonlinearity::Dense(Arc::new(f))
    }

    pub fn is_entrywise(&self) -> bool {
        !matches!(self, Nonlinearity::Dense(_))
    }

    pub fn eval(&self, x: &Matrix, t: f64) -> Matrix {
        match self {
            Nonlinearity::Zero => Matrix::zeros(x.nrows(), x.ncols()),
            Nonlinearity::Entrywise(f) => x.map(|v| f(v, t)),
            Nonlinearity::Dense(f) => f(x, t),
        }
    }

    /// Entrywise evaluation of already sampled values. `None` for dense `F`.
    pub fn eval_samples<S: Clone + SampleMap>(&self, s: &S, t: f64) -> Option<S> {
        match self {
            Nonlinearity::Zero => Some(s.map_entries(|_| 0.0)),
            Nonlinearity::Entrywise(f) => Some(s.map_entries(|v| f(v, t))),
            Nonlinearity::Dense(_) => None,
        }
    }
}

/// Entrywise map over a matrix or vector of samples.
pub trait SampleMap {
    fn map_entries(&self, f: impl Fn(f64) -> f64) -> Self;
}

impl SampleMap for Matrix {
    fn map_entries(&self, f: impl Fn(f64) -> f64) -> Self {
        self.map(f)
    }
}

impl SampleMap for Vector {
    fn map_entries(&self, f: impl Fn(f64) -> f64) -> Self {
        self.map(f)
    }
}

/// `X' = AX + XB + F(X, t)`, `X(0) = X0`, on `[0, t_final]` with step `dt`.
#[derive(Debug, Clone)]
pub struct SemiLinearMatrixModel {
    pub a: Matrix,
    pub b: Matrix,
    pub f: Nonlinearity,
    pub x0: Matrix,
    pub t_final: f64,
    pub dt: f64,
}

impl SemiLinearMatrixModel {
    pub fn new(a: Matrix, b: Matrix, f: Nonlinearity, x0: Matrix, t_final: f64, dt: f64) -> Result<Self> {
        let (n1, n2) = x0.shape();
        if a.shape() != (n1, n1) || b.shape() != (n2, n2) {
            return Err(TeimError::DimensionMismatch(format!(
                "A is {:?} and B is {:?} for a {n1}x{n2} state",
                a.shape(),
                b.shape()
            )));
        }
        let model = Self {
            a,
            b,
            f,
            x0,
            t_final,
            dt,
        };
        model.steps()?;
        Ok(model)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.x0.shape()
    }

    /// `t_final / dt`, which must be a positive integer.
    pub fn steps(&self) -> Result<usize> {
        steps_for(self.t_final, self.dt)
    }

    pub fn rhs(&self, x: &Matrix, t: f64) -> Matrix {
        &self.a * x + x * &self.b + self.f.eval(x, t)
    }

    /// `AX + XB`.
    pub fn linear(&self, x: &Matrix) -> Matrix {
        &self.a * x + x * &self.b
    }
}

fn steps_for(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_final >= dt) {
        return Err(TeimError::InvalidArgument(format!(
            "need 0 < dt <= t_final, got dt = {dt}, t_final = {t_final}"
        )));
    }
    let steps = (t_final / dt).round();
    if (steps * dt - t_final).abs() > 1e-9 * t_final {
        return Err(TeimError::InvalidArgument(format!(
            "t_final = {t_final} is not a whole number of steps of {dt}"
        )));
    }
    Ok(steps as usize)
}

/// State types the integrator can advance.
pub trait OdeState: Clone {
    /// `self + h d`.
    fn add_scaled(&self, h: f64, d: &Self) -> Self;
    fn is_finite(&self) -> bool;
}

impl OdeState for Matrix {
    fn add_scaled(&self, h: f64, d: &Self) -> Self {
        self + d * h
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl OdeState for Vector {
    fn add_scaled(&self, h: f64, d: &Self) -> Self {
        self + d * h
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// Classical fixed-step RK4 from `t = 0`. Returns the state after each of
/// the `steps` steps; aborts on the first non-finite state.
pub fn rk4<S, F>(mut f: F, x0: &S, dt: f64, steps: usize) -> Result<Vec<S>>
where
    S: OdeState,
    F: FnMut(&S, f64) -> Result<S>,
{
    let mut out = Vec::with_capacity(steps);
    let mut x = x0.clone();
    for step in 0..steps {
        let t = step as f64 * dt;
        let k1 = f(&x, t)?;
        let k2 = f(&x.add_scaled(0.5 * dt, &k1), t + 0.5 * dt)?;
        let k3 = f(&x.add_scaled(0.5 * dt, &k2), t + 0.5 * dt)?;
        let k4 = f(&x.add_scaled(dt, &k3), t + dt)?;
        x = x
            .add_scaled(dt / 6.0, &k1)
            .add_scaled(dt / 3.0, &k2)
            .add_scaled(dt / 3.0, &k3)
            .add_scaled(dt / 6.0, &k4);
        if !x.is_finite() {
            return Err(TeimError::BlowUp {
                step: step + 1,
                time: (step + 1) as f64 * dt,
            });
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Full-order trajectory with the matching nonlinear snapshots.
#[derive(Debug, Clone)]
pub struct FullOrderRun {
    /// `X(t_k)` for `t_k = k dt`, `k = 1..=steps`.
    pub states: Tensor3,
    /// `F(X(t_k), t_k)` for the same times.
    pub nonlinear: Tensor3,
}

pub fn simulate_full(model: &SemiLinearMatrixModel) -> Result<FullOrderRun> {
    let steps = model.steps()?;
    let traj = rk4(|x: &Matrix, t| Ok(model.rhs(x, t)), &model.x0, model.dt, steps)?;
    let nl: Vec<Matrix> = traj
        .iter()
        .enumerate()
        .map(|(k, x)| model.f.eval(x, (k + 1) as f64 * model.dt))
        .collect();
    Ok(FullOrderRun {
        states: Tensor3::from_slices(&traj)?,
        nonlinear: Tensor3::from_slices(&nl)?,
    })
}

/// Matrix-form reduced model
/// `X̃' = Ar X̃ + X̃ Br + NL_left F(sample_left X̃ sample_right) NL_right`.
#[derive(Debug, Clone)]
pub struct ReducedTeimModel {
    pub ar: Matrix,
    pub br: Matrix,
    /// `V1ᵀ U1 (P5 U1)⁻¹`, `k1 x m1`.
    pub nl_left: Matrix,
    /// `(U2 (P6 U2)⁻¹)ᵀ V2`, `m2 x k2`.
    pub nl_right: Matrix,
    /// `P5 V1`, `m1 x k1`.
    pub sample_left: Matrix,
    /// `V2ᵀ P6ᵀ`, `k2 x m2`.
    pub sample_right: Matrix,
    pub grid: InterpGrid,
    pub x0: Matrix,
    /// With centering: `V1ᵀ (A X̄ + X̄ B) V2` and `P5 X̄ P6ᵀ`.
    pub centering: Option<(Matrix, Matrix)>,
    state: FactorBasis,
    mean: Option<Matrix>,
    approximator: TeimApproximator,
    f: Nonlinearity,
    dt: f64,
    t_final: f64,
}

/// Builds the matrix-form reduced model. With `mean`, the state is
/// approximated affinely as `X̄ + V1 X̃ V2ᵀ`.
pub fn reduce_teim_matrix(
    model: &SemiLinearMatrixModel,
    state: &FactorBasis,
    nl_basis: &FactorBasis,
    grid: &InterpGrid,
    mean: Option<&Matrix>,
) -> Result<ReducedTeimModel> {
    let dims = model.dims();
    if state.dims() != dims || nl_basis.dims() != dims {
        return Err(TeimError::DimensionMismatch(format!(
            "model is {dims:?}, state basis {:?}, nonlinear basis {:?}",
            state.dims(),
            nl_basis.dims()
        )));
    }
    check_mean(mean, dims)?;
    grid.check_against(&nl_basis.u1, &nl_basis.u2)?;
    let approximator = TeimApproximator::build(nl_basis, grid)?;
    let (v1, v2) = (&state.u1, &state.u2);
    let v1t = v1.transpose();
    let centering = mean.map(|xm| {
        (
            &v1t * model.linear(xm) * v2,
            grid_sample(xm, grid).expect("checked dims"),
        )
    });
    let x0 = match mean {
        Some(xm) => state.coefficients(&(&model.x0 - xm)),
        None => state.coefficients(&model.x0),
    };
    Ok(ReducedTeimModel {
        ar: &v1t * &model.a * v1,
        br: v2.transpose() * &model.b * v2,
        nl_left: &v1t * approximator.left(),
        nl_right: approximator.right().transpose() * v2,
        sample_left: grid.rows().select_rows(v1)?,
        sample_right: grid.cols().select_rows(v2)?.transpose(),
        grid: grid.clone(),
        x0,
        centering,
        state: state.clone(),
        mean: mean.cloned(),
        approximator,
        f: model.f.clone(),
        dt: model.dt,
        t_final: model.t_final,
    })
}

fn check_mean(mean: Option<&Matrix>, dims: (usize, usize)) -> Result<()> {
    match mean {
        Some(m) if m.shape() != dims => Err(TeimError::DimensionMismatch(format!(
            "mean is {:?} for a {dims:?} model",
            m.shape()
        ))),
        _ => Ok(()),
    }
}

impl ReducedTeimModel {
    pub fn dims(&self) -> (usize, usize) {
        self.x0.shape()
    }

    pub fn steps(&self) -> Result<usize> {
        steps_for(self.t_final, self.dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Reduced right-hand side. For entrywise `F` no `n1 x n2` object is
    /// formed.
    pub fn rhs(&self, x: &Matrix, t: f64) -> Matrix {
        let mut out = &self.ar * x + x * &self.br;
        if let Some((c, _)) = &self.centering {
            out += c;
        }
        let mut samples = &self.sample_left * x * &self.sample_right;
        if let Some((_, offset)) = &self.centering {
            samples += offset;
        }
        let fs = match self.f.eval_samples(&samples, t) {
            Some(fs) => fs,
            None => grid_sample(&self.f.eval(&self.lift(x), t), &self.grid).expect("grid fits the model"),
        };
        out + &self.nl_left * fs * &self.nl_right
    }

    /// Lift, evaluate `F` in full, interpolate it with TEIM and project back.
    pub fn rhs_reference(&self, x: &Matrix, a: &Matrix, b: &Matrix, t: f64) -> Result<Matrix> {
        let full = self.lift(x);
        let f = self.approximator.approximate(&self.f.eval(&full, t))?;
        Ok(self.state.coefficients(&(a * &full + &full * b + f)))
    }

    /// `V1 X̃ V2ᵀ` (plus the mean when centered).
    pub fn lift(&self, x: &Matrix) -> Matrix {
        let out = self.state.expand(x);
        match &self.mean {
            Some(m) => out + m,
            None => out,
        }
    }

    pub fn basis(&self) -> &FactorBasis {
        &self.state
    }
}

/// RK4 on the matrix-form reduced model.
pub fn rk4_matrix(rm: &ReducedTeimModel, steps: usize) -> Result<Vec<Matrix>> {
    rk4(|x: &Matrix, t| Ok(rm.rhs(x, t)), &rm.x0, rm.dt, steps)
}

/// Vector-form reduced model `x̃' = Ar x̃ + NL f(S x̃)`, where `S` samples
/// `vec(V x̃)` at the interpolation entries.
#[derive(Debug, Clone)]
pub struct ReducedVectorModel {
    pub ar: Matrix,
    /// `k x M`, `M` the number of sampled entries.
    pub nl: Matrix,
    /// Linear indices into `vec(X)` read by the hyper-reduction.
    pub sampler: Vec<usize>,
    /// Rows of `V` at `sampler`, `M x k`.
    pub sample_rows: Matrix,
    pub x0: Vector,
    /// With centering: `Vᵀ vec(A X̄ + X̄ B)` and the sampled mean.
    pub centering: Option<(Vector, Vector)>,
    v: Matrix,
    mean: Option<Matrix>,
    dims: (usize, usize),
    f: Nonlinearity,
    dt: f64,
    t_final: f64,
}

/// `Vᵀ A1 V` for `A1 = I ⊗ A + Bᵀ ⊗ I`, applied column by column as
/// `vec(A X + X B)`.
fn project_operator(model: &SemiLinearMatrixModel, v: &Matrix) -> Matrix {
    let (n1, n2) = model.dims();
    let mut a1v = Matrix::zeros(v.nrows(), v.ncols());
    for (i, col) in v.column_iter().enumerate() {
        let x = Matrix::from_column_slice(n1, n2, col.as_slice());
        a1v.set_column(i, &vec(&model.linear(&x)));
    }
    v.transpose() * a1v
}

fn reduce_vector(
    model: &SemiLinearMatrixModel,
    pod: &PodBasis,
    nl: Matrix,
    sampler: Vec<usize>,
    mean: Option<&Matrix>,
) -> Result<ReducedVectorModel> {
    let dims = model.dims();
    if pod.v.nrows() != dims.0 * dims.1 {
        return Err(TeimError::DimensionMismatch(format!(
            "POD basis has {} rows for a {dims:?} model",
            pod.v.nrows()
        )));
    }
    check_mean(mean, dims)?;
    let v = &pod.v;
    let vt = v.transpose();
    let centering = mean.map(|xm| {
        let offset = Vector::from_iterator(sampler.len(), sampler.iter().map(|&i| xm.as_slice()[i]));
        (&vt * vec(&model.linear(xm)), offset)
    });
    let x0 = match mean {
        Some(xm) => &vt * vec(&(&model.x0 - xm)),
        None => &vt * vec(&model.x0),
    };
    Ok(ReducedVectorModel {
        ar: project_operator(model, v),
        sample_rows: v.select_rows(sampler.iter()),
        nl,
        sampler,
        x0,
        centering,
        v: v.clone(),
        mean: mean.cloned(),
        dims,
        f: model.f.clone(),
        dt: model.dt,
        t_final: model.t_final,
    })
}

/// Vector-form model with TEIM hyper-reduction: row `i` of the nonlinear
/// projector is `vec(leftᵀ V_i right)` with `V_i = vec⁻¹(V[:, i])`, and the
/// samples are read in the order of [`InterpGrid::vec_indices`].
pub fn reduce_teim_vector(
    model: &SemiLinearMatrixModel,
    pod: &PodBasis,
    nl_basis: &FactorBasis,
    grid: &InterpGrid,
    mean: Option<&Matrix>,
) -> Result<ReducedVectorModel> {
    let (n1, n2) = model.dims();
    if nl_basis.dims() != (n1, n2) {
        return Err(TeimError::DimensionMismatch(format!(
            "nonlinear basis over {:?} for a {n1}x{n2} model",
            nl_basis.dims()
        )));
    }
    grid.check_against(&nl_basis.u1, &nl_basis.u2)?;
    let appr = TeimApproximator::build(nl_basis, grid)?;
    let (left, right) = (appr.left(), appr.right());
    let (m1, m2) = grid.shape();
    let lt = left.transpose();
    let mut nl = Matrix::zeros(pod.k(), m1 * m2);
    for (i, col) in pod.v.column_iter().enumerate() {
        let vi = Matrix::from_column_slice(n1, n2, col.as_slice());
        let block = &lt * vi * &right;
        nl.row_mut(i).copy_from_slice(block.as_slice());
    }
    reduce_vector(model, pod, nl, grid.vec_indices(), mean)
}

/// Standard POD-DEIM reduced model: `NL = Vᵀ Φ (PᵀΦ)⁻¹`.
pub fn reduce_pod_deim(
    model: &SemiLinearMatrixModel,
    pod: &PodBasis,
    deim: &DeimApproximator,
    mean: Option<&Matrix>,
) -> Result<ReducedVectorModel> {
    if deim.projector().nrows() != pod.v.nrows() {
        return Err(TeimError::DimensionMismatch(format!(
            "DEIM projector has {} rows, POD basis {}",
            deim.projector().nrows(),
            pod.v.nrows()
        )));
    }
    let nl = pod.v.transpose() * deim.projector();
    reduce_vector(model, pod, nl, deim.indices().indices().to_vec(), mean)
}

impl ReducedVectorModel {
    pub fn k(&self) -> usize {
        self.x0.len()
    }

    pub fn steps(&self) -> Result<usize> {
        steps_for(self.t_final, self.dt)
    }

    pub fn rhs(&self, x: &Vector, t: f64) -> Vector {
        let mut out = &self.ar * x;
        if let Some((c, _)) = &self.centering {
            out += c;
        }
        let mut samples = &self.sample_rows * x;
        if let Some((_, offset)) = &self.centering {
            samples += offset;
        }
        let fs = match self.f.eval_samples(&samples, t) {
            Some(fs) => fs,
            None => {
                let full = self.f.eval(&self.lift(x), t);
                Vector::from_iterator(self.sampler.len(), self.sampler.iter().map(|&i| full.as_slice()[i]))
            }
        };
        out + &self.nl * fs
    }

    /// `vec⁻¹(V x̃)` (plus the mean when centered).
    pub fn lift(&self, x: &Vector) -> Matrix {
        let v = &self.v * x;
        let out = Matrix::from_column_slice(self.dims.0, self.dims.1, v.as_slice());
        match &self.mean {
            Some(m) => out + m,
            None => out,
        }
    }
}

/// RK4 on the vector-form reduced model.
pub fn rk4_vector(rm: &ReducedVectorModel, steps: usize) -> Result<Vec<Vector>> {
    rk4(|x: &Vector, t| Ok(rm.rhs(x, t)), &rm.x0, rm.dt, steps)
}

/// Lifts every reduced state and returns the relative average error
/// against the full-order states of the same times.
pub fn lift_and_error<S>(trajectory: &[S], lift: impl Fn(&S) -> Matrix, fom: &Tensor3) -> Result<f64> {
    if trajectory.len() != fom.dims().2 {
        return Err(TeimError::DimensionMismatch(format!(
            "{} reduced states against {} full-order snapshots",
            trajectory.len(),
            fom.dims().2
        )));
    }
    let lifted: Vec<Matrix> = trajectory.iter().map(lift).collect();
    let truth: Vec<Matrix> = fom.slices().collect();
    crate::approx::relative_average_error(&truth, &lifted)
}
