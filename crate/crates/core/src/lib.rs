//! Tensor empirical interpolation (TEIM) for matrix-valued functions.
//!
//! A matrix-valued function `A(t)` is approximated from a handful of its
//! entries on a rectangular grid, using a pair of factor bases built from
//! snapshots, without ever vectorizing `A`. The same machinery hyper-reduces
//! the nonlinear term of semi-linear matrix ODEs `X' = AX + XB + F(X, t)`.

// Negated comparisons below are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod error;
pub mod experiments;
pub mod interp;
pub mod io;
pub mod linalg;
pub mod mor;
pub mod tensor;
pub mod testing;
pub mod verify;

pub use approx::{build_teim, relative_average_error, DeimApproximator, Direction, TeimApproximator};
pub use error::{Result, TeimError};
pub use interp::{deim, grid_of, teim, two_d_deim, InterpGrid, TeimTrace};
pub use linalg::{MaskPairs, Matrix, SelectionOperator, Vector};
pub use mor::{Nonlinearity, ReducedTeimModel, ReducedVectorModel, SemiLinearMatrixModel};
pub use tensor::{center, hosvd_factors, standard_pod, FactorBasis, PodBasis, Tensor3};
