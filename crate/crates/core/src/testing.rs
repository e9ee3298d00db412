//! Seeded random inputs shared by the unit tests, the acceptance suite and
//! the `verify` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Matrix;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in `[-1, 1)`.
pub fn random_matrix(rng: &mut TestRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// `rows x cols` matrix with orthonormal columns (`cols <= rows`).
pub fn random_orthonormal(rng: &mut TestRng, rows: usize, cols: usize) -> Matrix {
    assert!(cols <= rows, "need cols <= rows for orthonormal columns");
    let q = random_matrix(rng, rows, cols).qr().q();
    q.columns(0, cols).into_owned()
}
