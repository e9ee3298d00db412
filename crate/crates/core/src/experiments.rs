//! Snapshot generators and studies for the three benchmark problems: a
//! parameterized 2D function, a time-dependent 2D function, and the 2D
//! Allen-Cahn equation.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{
    build_deim_from_pod, orth_project_pod_matrix, orth_project_tensor, relative_average_error, TeimApproximator,
};
use crate::error::{Result, TeimError};
use crate::interp::two_d_deim;
use crate::io::{Method, ReportRow};
use crate::linalg::Matrix;
use crate::mor::{
    reduce_pod_deim, reduce_teim_matrix, reduce_teim_vector, rk4_matrix, rk4_vector, simulate_full, FullOrderRun,
    Nonlinearity, SemiLinearMatrixModel,
};
use crate::tensor::{center, hosvd_factors, standard_pod, FactorBasis, PodBasis, Tensor3};

/// `n` evenly spaced points from `a` to `b`, both included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// `1 / sqrt((x − μ1)² + (y − μ2)² + 0.1²)`.
pub fn example1_eval(x: f64, y: f64, mu1: f64, mu2: f64) -> f64 {
    example1_eval_with(x, y, mu1, mu2, 0.1 * 0.1)
}

/// Example 1 with the additive constant under the root as a parameter.
pub fn example1_eval_with(x: f64, y: f64, mu1: f64, mu2: f64, regularizer: f64) -> f64 {
    1.0 / ((x - mu1).powi(2) + (y - mu2).powi(2) + regularizer).sqrt()
}

/// `1 / sqrt((x + y − t)² + (2x − 3t)² + 0.01²)`.
pub fn example2_eval(x: f64, y: f64, t: f64) -> f64 {
    1.0 / ((x + y - t).powi(2) + (2.0 * x - 3.0 * t).powi(2) + 0.01 * 0.01).sqrt()
}

/// Example 1: `n x n` grid on `[lo, hi]²`, parameters on a tensor grid in
/// `[p_lo, p_hi]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Config {
    pub grid_n: (usize, usize),
    pub domain: (f64, f64),
    pub param_domain: (f64, f64),
    pub train_per_axis: usize,
    pub test_per_axis: usize,
    pub regularizer: f64,
}

impl Default for Example1Config {
    fn default() -> Self {
        Self {
            grid_n: (20, 20),
            domain: (0.1, 0.9),
            param_domain: (-1.0, -0.01),
            train_per_axis: 15,
            test_per_axis: 25,
            regularizer: 0.1 * 0.1,
        }
    }
}

impl Example1Config {
    /// Parameter pairs `(μ1, μ2)` of a `q x q` grid, `μ2` fastest.
    pub fn params(&self, q: usize) -> Vec<(f64, f64)> {
        let mus = linspace(self.param_domain.0, self.param_domain.1, q);
        mus.iter().flat_map(|&a| mus.iter().map(move |&b| (a, b))).collect()
    }

    pub fn slice(&self, mu: (f64, f64)) -> Matrix {
        let xs = linspace(self.domain.0, self.domain.1, self.grid_n.0);
        let ys = linspace(self.domain.0, self.domain.1, self.grid_n.1);
        Matrix::from_fn(xs.len(), ys.len(), |i, j| {
            example1_eval_with(xs[i], ys[j], mu.0, mu.1, self.regularizer)
        })
    }

    fn tensor(&self, q: usize) -> Tensor3 {
        let slices: Vec<Matrix> = self.params(q).par_iter().map(|&mu| self.slice(mu)).collect();
        Tensor3::from_slices(&slices).expect("equal slice shapes")
    }
}

/// Example 2: `n x n` grid on `[lo, hi]²`, times evenly spaced in
/// `[t_lo, t_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example2Config {
    pub grid_n: (usize, usize),
    pub domain: (f64, f64),
    pub time_domain: (f64, f64),
    pub train_times: usize,
    pub test_times: usize,
}

impl Default for Example2Config {
    fn default() -> Self {
        Self {
            grid_n: (50, 50),
            domain: (0.0, 2.0),
            time_domain: (0.0, 2.0),
            train_times: 300,
            test_times: 400,
        }
    }
}

impl Example2Config {
    pub fn slice(&self, t: f64) -> Matrix {
        let xs = linspace(self.domain.0, self.domain.1, self.grid_n.0);
        let ys = linspace(self.domain.0, self.domain.1, self.grid_n.1);
        Matrix::from_fn(xs.len(), ys.len(), |i, j| example2_eval(xs[i], ys[j], t))
    }

    fn tensor(&self, count: usize) -> Tensor3 {
        let times = linspace(self.time_domain.0, self.time_domain.1, count);
        let slices: Vec<Matrix> = times.par_iter().map(|&t| self.slice(t)).collect();
        Tensor3::from_slices(&slices).expect("equal slice shapes")
    }
}

/// One of the two function-approximation benchmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "lowercase")]
pub enum SnapshotConfig {
    Ex1(Example1Config),
    Ex2(Example2Config),
}

impl SnapshotConfig {
    pub fn name(&self) -> &'static str {
        match self {
            SnapshotConfig::Ex1(_) => "ex1",
            SnapshotConfig::Ex2(_) => "ex2",
        }
    }

    /// The (`m1`, `m2`) rows of the published comparison for this example.
    pub fn table_configs(&self) -> &'static [(usize, usize)] {
        match self {
            SnapshotConfig::Ex1(_) => EXAMPLE1_CONFIGS,
            SnapshotConfig::Ex2(_) => EXAMPLE2_CONFIGS,
        }
    }

    pub fn test_tensor(&self) -> Tensor3 {
        match self {
            SnapshotConfig::Ex1(c) => c.tensor(c.test_per_axis),
            SnapshotConfig::Ex2(c) => c.tensor(c.test_times),
        }
    }
}

/// Training snapshots: one slice per training parameter or time.
pub fn build_snapshot_tensor(config: &SnapshotConfig) -> Tensor3 {
    match config {
        SnapshotConfig::Ex1(c) => c.tensor(c.train_per_axis),
        SnapshotConfig::Ex2(c) => c.tensor(c.train_times),
    }
}

pub const EXAMPLE1_CONFIGS: &[(usize, usize)] = &[
    (2, 2),
    (3, 2),
    (4, 2),
    (3, 3),
    (4, 3),
    (5, 3),
    (4, 4),
    (4, 5),
    (4, 6),
    (5, 5),
];

pub const EXAMPLE2_CONFIGS: &[(usize, usize)] =
    &[(3, 3), (4, 4), (5, 3), (3, 5), (5, 5), (6, 6), (7, 7), (9, 9), (11, 11)];

/// ξ of the four methods at one (`m1`, `m2`) configuration, with
/// `m = m1 m2` for the vectorized methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxResult {
    pub m1: usize,
    pub m2: usize,
    pub m: usize,
    pub teim: f64,
    pub deim: f64,
    pub proj_tensor: f64,
    pub proj_pod: f64,
    /// Mean wall time per evaluation, in the same order.
    pub wall_ns: [f64; 4],
}

impl ApproxResult {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rows(&self, experiment: &str) -> Vec<ReportRow> {
        let methods = [Method::Teim, Method::Deim, Method::ProjTensor, Method::ProjPod];
        let xis = [self.teim, self.deim, self.proj_tensor, self.proj_pod];
        methods
            .iter()
            .zip(xis)
            .zip(self.wall_ns)
            .map(|((&method, xi), ns)| {
                let tensor = matches!(method, Method::Teim | Method::ProjTensor);
                ReportRow {
                    experiment: experiment.to_string(),
                    method,
                    m1: tensor.then_some(self.m1),
                    m2: tensor.then_some(self.m2),
                    m: (!tensor).then_some(self.m()),
                    k1: None,
                    k2: None,
                    k: None,
                    xi,
                    wall_ns_per_eval: Some(ns),
                }
            })
            .collect()
    }
}

/// Offline data shared by every configuration of an approximation sweep.
pub struct ApproxStudy {
    test: Vec<Matrix>,
    factors: FactorBasis,
    pod: PodBasis,
}

impl ApproxStudy {
    /// Factor and POD bases large enough for every configuration in
    /// `configs`; smaller configurations use their leading columns.
    pub fn new(train: &Tensor3, test: &Tensor3, configs: &[(usize, usize)]) -> Result<Self> {
        let max1 = configs.iter().map(|c| c.0).max().unwrap_or(1);
        let max2 = configs.iter().map(|c| c.1).max().unwrap_or(1);
        let maxm = configs.iter().map(|c| c.0 * c.1).max().unwrap_or(1);
        Self::with_sizes(train, test, (max1, max2), maxm)
    }

    /// Factor bases of size `max_factor` and a POD basis of `max_m` modes.
    pub fn with_sizes(train: &Tensor3, test: &Tensor3, max_factor: (usize, usize), max_m: usize) -> Result<Self> {
        let ((max1, max2), maxm) = (max_factor, max_m);
        let (factors, pod) = rayon::join(
            || hosvd_factors(train, max1, max2),
            || standard_pod(&train.snapshot_matrix(), maxm),
        );
        Ok(Self {
            test: test.slices().collect(),
            factors: factors?,
            pod: pod?,
        })
    }

    pub fn run(&self, m1: usize, m2: usize) -> Result<ApproxResult> {
        self.run_with(m1, m2, m1 * m2)
    }

    /// As [`ApproxStudy::run`], with `m` POD modes for the vectorized
    /// methods.
    pub fn run_with(&self, m1: usize, m2: usize, m: usize) -> Result<ApproxResult> {
        let basis = self.factors.truncate(m1, m2)?;
        let grid = two_d_deim(&basis.u1, &basis.u2)?;
        let teim = TeimApproximator::build(&basis, &grid)?;
        let pod = self.pod.truncate(m)?;
        let deim = build_deim_from_pod(&pod)?;

        let mut wall_ns = [0.0; 4];
        let mut measure = |slot: usize, f: &dyn Fn(&Matrix) -> Result<Matrix>| -> Result<f64> {
            let start = Instant::now();
            let out = self.test.iter().map(f).collect::<Result<Vec<_>>>()?;
            wall_ns[slot] = start.elapsed().as_nanos() as f64 / self.test.len() as f64;
            relative_average_error(&self.test, &out)
        };
        let xi_teim = measure(0, &|a| teim.approximate(a))?;
        let xi_deim = measure(1, &|a| deim.approximate(a))?;
        let xi_pt = measure(2, &|a| Ok(orth_project_tensor(&basis, a)))?;
        let xi_pp = measure(3, &|a| Ok(orth_project_pod_matrix(&pod, a)))?;
        Ok(ApproxResult {
            m1,
            m2,
            m,
            teim: xi_teim,
            deim: xi_deim,
            proj_tensor: xi_pt,
            proj_pod: xi_pp,
            wall_ns,
        })
    }
}

/// Runs every configuration (in parallel) and returns results in input
/// order.
pub fn approximation_sweep(config: &SnapshotConfig, configs: &[(usize, usize)]) -> Result<Vec<ApproxResult>> {
    let (train, test) = rayon::join(|| build_snapshot_tensor(config), || config.test_tensor());
    let study = ApproxStudy::new(&train, &test, configs)?;
    configs.par_iter().map(|&(m1, m2)| study.run(m1, m2)).collect()
}

/// Allen-Cahn `u_t = ε1 Δu − (u³ − u)/ε2²` on the periodic square
/// `[0, 2π)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllenCahnConfig {
    pub n: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub amplitude: f64,
    pub dt: f64,
    pub t_final: f64,
}

impl Default for AllenCahnConfig {
    fn default() -> Self {
        Self {
            n: 30,
            eps1: 1e-2,
            eps2: 1.0,
            amplitude: 0.05,
            dt: 0.025,
            t_final: 5.0,
        }
    }
}

/// Periodic second-difference matrix `(1/h²) tridiag(1, −2, 1)` with
/// wrap-around corners.
pub fn periodic_second_difference(n: usize, h: f64) -> Matrix {
    let mut d = Matrix::zeros(n, n);
    let s = 1.0 / (h * h);
    for i in 0..n {
        d[(i, i)] = -2.0 * s;
        d[(i, (i + 1) % n)] += s;
        d[(i, (i + n - 1) % n)] += s;
    }
    d
}

/// The Allen-Cahn double-well term `−(x³ − x)/ε2²`.
pub fn allen_cahn_nonlinearity(eps2: f64) -> Nonlinearity {
    let c = 1.0 / (eps2 * eps2);
    Nonlinearity::entrywise(move |x, _| -c * (x * x * x - x))
}

/// Allen-Cahn with the default parameters on an `n x n` grid.
pub fn build_allen_cahn(n: usize) -> Result<SemiLinearMatrixModel> {
    build_allen_cahn_with(&AllenCahnConfig {
        n,
        ..AllenCahnConfig::default()
    })
}

/// `A = ε1 D2`, `B = ε1 D2ᵀ` so that `AX + XB` is `ε1 Δ` on the grid
/// `x_i = 2π i / n`; `X0[i, j] = amplitude · sin(x_i) cos(y_j)`.
pub fn build_allen_cahn_with(cfg: &AllenCahnConfig) -> Result<SemiLinearMatrixModel> {
    if cfg.n < 4 {
        return Err(TeimError::InvalidArgument(format!(
            "Allen-Cahn grid needs n >= 4, got {}",
            cfg.n
        )));
    }
    let n = cfg.n;
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let d2 = periodic_second_difference(n, h);
    let xs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let x0 = Matrix::from_fn(n, n, |i, j| cfg.amplitude * xs[i].sin() * xs[j].cos());
    SemiLinearMatrixModel::new(
        &d2 * cfg.eps1,
        d2.transpose() * cfg.eps1,
        allen_cahn_nonlinearity(cfg.eps2),
        x0,
        cfg.t_final,
        cfg.dt,
    )
}

/// Matrix-form rows `(k1, k2, m1, m2)` of the published comparison.
pub const ALLEN_CAHN_MATRIX_CONFIGS: &[(usize, usize, usize, usize)] = &[
    (5, 5, 5, 5),
    (5, 5, 7, 7),
    (6, 6, 5, 5),
    (3, 3, 3, 3),
    (4, 3, 3, 3),
    (3, 4, 3, 3),
    (2, 6, 3, 3),
    (7, 7, 5, 5),
    (7, 7, 7, 7),
];

/// Vector-form rows `(k, m, m1, m2)`: POD-DEIM with `k` modes and `m`
/// points against TEIM hyper-reduction on an `m1 x m2` grid.
pub const ALLEN_CAHN_VECTOR_CONFIGS: &[(usize, usize, usize, usize)] = &[
    (7, 5, 5, 5),
    (7, 5, 4, 4),
    (7, 5, 5, 4),
    (7, 5, 4, 5),
    (7, 6, 7, 6),
    (7, 7, 7, 7),
    (8, 5, 5, 5),
    (8, 5, 4, 4),
    (8, 5, 5, 4),
    (8, 6, 7, 7),
    (8, 7, 7, 5),
];

/// ξ of one reduced simulation and its wall time per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorResult {
    pub xi: f64,
    pub wall_ns_per_step: f64,
}

/// Full-order Allen-Cahn run and the reductions built from it.
pub struct MorStudy {
    pub model: SemiLinearMatrixModel,
    pub fom: FullOrderRun,
    centered: Tensor3,
    mean: Matrix,
}

impl MorStudy {
    pub fn new(model: SemiLinearMatrixModel) -> Result<Self> {
        let fom = simulate_full(&model)?;
        let (centered, mean) = center(&fom.states);
        Ok(Self {
            model,
            fom,
            centered,
            mean,
        })
    }

    fn states(&self, centered: bool) -> (&Tensor3, Option<&Matrix>) {
        if centered {
            (&self.centered, Some(&self.mean))
        } else {
            (&self.fom.states, None)
        }
    }

    /// Matrix-form TEIM reduction with a `(k1, k2)` state basis and an
    /// `(m1, m2)` nonlinear basis and grid.
    pub fn teim_matrix(&self, k1: usize, k2: usize, m1: usize, m2: usize, centered: bool) -> Result<MorResult> {
        let (states, mean) = self.states(centered);
        let state = hosvd_factors(states, k1, k2)?;
        let nl = hosvd_factors(&self.fom.nonlinear, m1, m2)?;
        let grid = two_d_deim(&nl.u1, &nl.u2)?;
        let rm = reduce_teim_matrix(&self.model, &state, &nl, &grid, mean)?;
        let steps = rm.steps()?;
        let start = Instant::now();
        let traj = rk4_matrix(&rm, steps)?;
        let ns = start.elapsed().as_nanos() as f64 / steps as f64;
        let xi = crate::mor::lift_and_error(&traj, |x| rm.lift(x), &self.fom.states)?;
        Ok(MorResult {
            xi,
            wall_ns_per_step: ns,
        })
    }

    fn pod(&self, k: usize, centered: bool) -> Result<PodBasis> {
        let (states, _) = self.states(centered);
        standard_pod(&states.snapshot_matrix(), k)
    }

    fn run_vector(&self, rm: crate::mor::ReducedVectorModel) -> Result<MorResult> {
        let steps = rm.steps()?;
        let start = Instant::now();
        let traj = rk4_vector(&rm, steps)?;
        let ns = start.elapsed().as_nanos() as f64 / steps as f64;
        let xi = crate::mor::lift_and_error(&traj, |x| rm.lift(x), &self.fom.states)?;
        Ok(MorResult {
            xi,
            wall_ns_per_step: ns,
        })
    }

    /// Vector-form reduction on `k` POD modes with TEIM hyper-reduction.
    pub fn teim_vector(&self, k: usize, m1: usize, m2: usize, centered: bool) -> Result<MorResult> {
        let pod = self.pod(k, centered)?;
        let nl = hosvd_factors(&self.fom.nonlinear, m1, m2)?;
        let grid = two_d_deim(&nl.u1, &nl.u2)?;
        let (_, mean) = self.states(centered);
        self.run_vector(reduce_teim_vector(&self.model, &pod, &nl, &grid, mean)?)
    }

    /// POD-DEIM on `k` state modes and `m` nonlinear modes.
    pub fn pod_deim(&self, k: usize, m: usize, centered: bool) -> Result<MorResult> {
        let pod = self.pod(k, centered)?;
        let nl_pod = standard_pod(&self.fom.nonlinear.snapshot_matrix(), m)?;
        let deim = build_deim_from_pod(&nl_pod)?;
        let (_, mean) = self.states(centered);
        self.run_vector(reduce_pod_deim(&self.model, &pod, &deim, mean)?)
    }
}
