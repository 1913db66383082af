//! ordlab — a numerical laboratory for factor orderings of the kinetic term
//! g^{ab} p_a p_b on Riemannian configuration spaces.
//!
//! The crate builds candidate operator orderings, extracts their effective
//! potentials relative to the Laplace-Beltrami operator, computes scalar
//! curvature by two independent routes, and verifies which orderings
//! reproduce the conformally invariant Laplace-Beltrami operator — including
//! the anomalous hydrogen spectrum produced by the unweighted ordering.
//!
//! Modules:
//! * [`geometry`] — metrics, jets, curvature (Christoffel oracle + direct
//!   determinant route), formula audits
//! * [`catalog`] — built-in metrics addressable by string labels
//! * [`operators`] — factor orderings as executable operators, effective
//!   potentials and drifts
//! * [`conformal`] — conformally flat curvature, exact exponent solutions,
//!   blind two-solution verification
//! * [`hydrogen`] — closed-form anomalous/textbook spectra and the
//!   finite-difference eigensolver chain
//! * [`basis`] — seven-term span evidence and exact matrix identities

pub mod basis;
pub mod catalog;
pub mod conformal;
pub mod diff;
pub mod error;
pub mod geometry;
pub mod hydrogen;
pub mod operators;

pub use diff::DiffConfig;
pub use error::{Error, Result};
pub use geometry::{DerivativeMode, MetricField, MetricJet, Point};
pub use operators::{OperatorSpec, ScalarField};

use once_cell::sync::OnceCell;

static THREAD_POOL_INIT: OnceCell<()> = OnceCell::new();

/// Cap rayon parallelism from the `ORDLAB_THREADS` environment variable.
/// Callers that want the cap (the CLI does) invoke this once at startup;
/// absent or unparsable values leave the default pool.
pub fn init_threads_from_env() {
    THREAD_POOL_INIT.get_or_init(|| {
        if let Ok(value) = std::env::var("ORDLAB_THREADS") {
            if let Ok(threads) = value.parse::<usize>() {
                if threads >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .build_global();
                }
            }
        }
    });
}
