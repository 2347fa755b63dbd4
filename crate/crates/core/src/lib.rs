//! Exact intersection theory on the moduli spaces M̄₀,ₙ of stable n-pointed
//! genus-0 curves.
//!
//! The engine represents tautological classes as exact-rational linear
//! combinations of boundary strata (indexed by stable trees), multiplies them
//! with the standard excess-intersection rule, integrates over the top grade,
//! and decides equality of Chow classes through the Poincaré duality pairing
//! against complementary strata. On top of the algebra sits a pipeline that
//! computes the class of the bielliptic locus in the moduli of stable genus-2
//! and genus-3 curves from test-surface intersection data.
//!
//! Modules:
//! - [`rational`], [`matrix`]: arbitrary-precision rationals and exact linear
//!   algebra (reduced row echelon form, affine solving, kernels).
//! - [`strata`]: stable trees, canonical forms, enumeration, the symmetric
//!   group action, and divisor/stratum compatibility.
//! - [`chow`]: the tautological algebra (psi and kappa classes, products,
//!   forgetful push/pull, integration, pairing, zero tests).
//! - [`invariant`]: symmetrization and the invariant strata bases d_λ.
//! - [`expr`]: a small expression language over divisors, strata, psi, kappa.
//! - [`bielliptic`]: the bielliptic-locus pipeline and its report.
//! - [`selftest`]: the acceptance checks exposed both to `cargo test` and to
//!   the CLI `selftest` subcommand.

pub mod bielliptic;
pub mod chow;
mod cache;
pub mod expr;
pub mod invariant;
pub mod matrix;
pub mod rational;
pub mod selftest;
pub mod strata;

pub use chow::{kappa_class, psi_expand, ChowError, TautClass};
pub use invariant::InvariantClass;
pub use matrix::{AffineSolution, MatrixError, QMatrix};
pub use rational::Rational;
pub use strata::{Partition2, Permutation, StableTree, StrataError};

/// Caps engine parallelism from the `CHOW_THREADS` environment variable.
///
/// Call once at process start. With the variable unset the default thread
/// pool is used; results do not depend on the thread count.
pub fn configure_threads_from_env() {
    if let Ok(v) = std::env::var("CHOW_THREADS") {
        if let Ok(threads) = v.trim().parse::<usize>() {
            if threads > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}
