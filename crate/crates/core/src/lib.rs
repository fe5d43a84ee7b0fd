//! Numerical laboratory for the geometry of weighted `l^p` spaces.
//!
//! Everything lives on a finite-dimensional [`Space`] `(n, p, w)` with norm
//! `(sum_i w_i |x_i|^p)^(1/p)`. On top of that substrate the crate provides:
//!
//! - bounded bilinear forms and operators `T: X -> X*` with their
//!   coercivity / positivity / norm constants ([`operator`]),
//! - a projected fixed-point solver for the Stampacchia variational
//!   inequality over closed convex sets ([`vi`]),
//! - annihilators, quotient norms and the Galerkin-type projection
//!   realizing `X = M (+) T^-1(M_perp)` ([`decomposition`]),
//! - Birkhoff-James and form-induced orthogonality relations with
//!   property testers and falsifiers ([`orthogonality`]),
//! - the cosine and angle of a positive operator with witness-producing
//!   minimizers ([`cosine`]),
//! - quadratic forms `q(x) = 1/2 <Tx,x>` and their derivative checks
//!   ([`quadratic`]),
//! - discretized evolution triples `l^p_w -> l^2_w -> (l^p_w)*` and the
//!   spike-witness decay studies ([`gelfand`]).
//!
//! All stochastic routines take explicit seeds and are deterministic for a
//! fixed seed. The `lplab` binary exposes each subsystem as a subcommand;
//! see the crate README.

pub mod cli;
pub mod cosine;
pub mod decomposition;
pub mod error;
pub mod gelfand;
pub mod io;
pub mod operator;
pub mod orthogonality;
pub mod quadratic;
pub mod search;
pub mod space;
pub mod vi;

pub use error::{Error, Result};
pub use operator::{BilinearForm, OperatorToDual, PositivityReport};
pub use search::SearchConfig;
pub use space::{pairing, Functional, Point, Space};
