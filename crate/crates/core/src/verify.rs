//! Seeded property suites for the structural results TEIM rests on. Shared
//! by the `verify` command and the acceptance tests.

use rand::Rng;

use crate::approx::{approximate_khatri_rao_reference, TeimApproximator};
use crate::error::Result;
use crate::interp::{deim, grid_of, reference::teim_dense, teim, two_d_deim};
use crate::linalg::{grid_sample, Matrix};
use crate::tensor::FactorBasis;
use crate::testing::{random_matrix, random_orthonormal, rng, TestRng};

/// Result of one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, failures: usize, total: usize, extra: String) -> Self {
        Self {
            name,
            passed: failures == 0,
            detail: format!("{}/{total} cases passed{extra}", total - failures),
        }
    }
}

/// `n1 x m1` and `n2 x m2` orthonormal factors with `m1, m2` drawn from
/// `2..=5`.
pub fn random_factor_pair(r: &mut TestRng, n1: usize, n2: usize) -> (Matrix, Matrix) {
    let m1 = r.random_range(2..=5);
    let m2 = r.random_range(2..=5);
    (random_orthonormal(r, n1, m1), random_orthonormal(r, n2, m2))
}

/// `grid_of(teim)` equals `two_d_deim` index for index, for both the
/// production and the dense TEIM path.
pub fn check_equivalence(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let mut failures = 0;
    for s in 0..cases as u64 {
        let mut r = rng(seed.wrapping_add(s));
        let (u1, u2) = random_factor_pair(&mut r, 30, 25);
        let direct = two_d_deim(&u1, &u2)?;
        let fast = grid_of(&teim(&u1, &u2)?).ok();
        let dense = grid_of(&teim_dense(&u1, &u2)?).ok();
        if fast.as_ref() != Some(&direct) || dense.as_ref() != Some(&direct) {
            failures += 1;
        }
    }
    Ok(CheckOutcome::new("equivalence", failures, cases, String::new()))
}

/// Every trace is the full Cartesian product of `m1` rows and `m2` columns.
pub fn check_rectangularity(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let mut failures = 0;
    for s in 0..cases as u64 {
        let mut r = rng(seed.wrapping_add(s));
        let (u1, u2) = random_factor_pair(&mut r, 30, 25);
        for trace in [teim(&u1, &u2)?, teim_dense(&u1, &u2)?] {
            let (m1, m2) = trace.shape();
            let pairs = trace.flat_pairs();
            let mut rows: Vec<usize> = pairs.row_indices().to_vec();
            let mut cols: Vec<usize> = pairs.col_indices().to_vec();
            rows.sort_unstable();
            rows.dedup();
            cols.sort_unstable();
            cols.dedup();
            let product = rows.len() == m1
                && cols.len() == m2
                && rows
                    .iter()
                    .all(|i| cols.iter().all(|j| pairs.pairs().any(|p| p == (*i, *j))));
            if !product || !trace.is_rectangular() {
                failures += 1;
                break;
            }
        }
    }
    Ok(CheckOutcome::new("rectangularity", failures, cases, String::new()))
}

/// Efficient two-sided formula against the dense Khatri-Rao formula on
/// `n1 = n2 = 40`, `m1 = m2 = 4`. Passes at relative Frobenius
/// difference `<= 1e-10`.
pub fn check_dual_path(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let mut failures = 0;
    let mut worst = 0.0f64;
    for s in 0..cases as u64 {
        let mut r = rng(seed.wrapping_add(s));
        let basis = FactorBasis::from_factors(random_orthonormal(&mut r, 40, 4), random_orthonormal(&mut r, 40, 4))?;
        let trace = teim(&basis.u1, &basis.u2)?;
        let appr = TeimApproximator::build(&basis, &grid_of(&trace)?)?;
        let a = random_matrix(&mut r, 40, 40);
        let fast = appr.approximate(&a)?;
        let slow = approximate_khatri_rao_reference(&basis, trace.flat_pairs(), &a)?;
        let rel = (&fast - &slow).norm() / slow.norm();
        worst = worst.max(rel);
        if !(rel <= 1e-10) {
            failures += 1;
        }
    }
    Ok(CheckOutcome::new(
        "dual-path",
        failures,
        cases,
        format!(", worst relative difference {worst:.2e}"),
    ))
}

/// Grid values are reproduced and in-span inputs are recovered, both
/// within `1e-10` relative.
pub fn check_interpolation(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let mut failures = 0;
    let mut worst = 0.0f64;
    for s in 0..cases as u64 {
        let mut r = rng(seed.wrapping_add(s));
        let (u1, u2) = random_factor_pair(&mut r, 30, 25);
        let basis = FactorBasis::from_factors(u1, u2)?;
        let grid = two_d_deim(&basis.u1, &basis.u2)?;
        let appr = TeimApproximator::build(&basis, &grid)?;
        let a = random_matrix(&mut r, 30, 25);
        let sa = grid_sample(&a, &grid)?;
        let consistency = (grid_sample(&appr.approximate(&a)?, &grid)? - &sa).norm() / sa.norm();
        let inspan = basis.expand(&random_matrix(&mut r, basis.m1(), basis.m2()));
        let exactness = (appr.approximate(&inspan)? - &inspan).norm() / inspan.norm();
        worst = worst.max(consistency).max(exactness);
        if !(consistency <= 1e-10 && exactness <= 1e-10) {
            failures += 1;
        }
    }
    Ok(CheckOutcome::new(
        "interpolation",
        failures,
        cases,
        format!(", worst relative error {worst:.2e}"),
    ))
}

/// Greedy DEIM written out with plain vectors and Gaussian elimination with
/// partial pivoting. Shares no code with [`deim`]; ties go to the lowest
/// index.
pub fn deim_oracle(u: &Matrix) -> Vec<usize> {
    let (n, m) = u.shape();
    let argmax = |v: &[f64]| {
        let mut best = 0;
        for i in 1..v.len() {
            if v[i].abs() > v[best].abs() {
                best = i;
            }
        }
        best
    };
    let first: Vec<f64> = (0..n).map(|i| u[(i, 0)]).collect();
    let mut p = vec![argmax(&first)];
    for l in 1..m {
        let size = p.len();
        let mut a: Vec<Vec<f64>> = (0..size)
            .map(|r| {
                let mut row: Vec<f64> = (0..size).map(|c| u[(p[r], c)]).collect();
                row.push(u[(p[r], l)]);
                row
            })
            .collect();
        for c in 0..size {
            let mut piv = c;
            for rr in c + 1..size {
                if a[rr][c].abs() > a[piv][c].abs() {
                    piv = rr;
                }
            }
            a.swap(c, piv);
            for rr in c + 1..size {
                let f = a[rr][c] / a[c][c];
                let pivot_row = a[c].clone();
                for (x, p) in a[rr][c..].iter_mut().zip(&pivot_row[c..]) {
                    *x -= f * p;
                }
            }
        }
        let mut coef = vec![0.0; size];
        for rr in (0..size).rev() {
            let s: f64 = (rr + 1..size).map(|cc| a[rr][cc] * coef[cc]).sum();
            coef[rr] = (a[rr][size] - s) / a[rr][rr];
        }
        let res: Vec<f64> = (0..n)
            .map(|i| u[(i, l)] - (0..size).map(|c| u[(i, c)] * coef[c]).sum::<f64>())
            .collect();
        p.push(argmax(&res));
    }
    p
}

/// [`deim`] against [`deim_oracle`] on random bases with `n <= 20`,
/// `m <= 6`.
pub fn check_deim_oracle(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let mut failures = 0;
    for s in 0..cases as u64 {
        let mut r = rng(seed.wrapping_add(s));
        let n = r.random_range(6..=20);
        let m = r.random_range(1..=6);
        let u = if s % 2 == 0 {
            random_orthonormal(&mut r, n, m)
        } else {
            random_matrix(&mut r, n, m)
        };
        if deim(&u)?.0.indices() != deim_oracle(&u).as_slice() {
            failures += 1;
        }
    }
    Ok(CheckOutcome::new("deim-oracle", failures, cases, String::new()))
}

/// All suites with the default case counts.
pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_rectangularity(seed, 100)?,
        check_equivalence(seed, 100)?,
        check_dual_path(seed, 50)?,
        check_interpolation(seed, 50)?,
        check_deim_oracle(seed, 50)?,
    ])
}
