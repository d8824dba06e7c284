//! Differentially private randomized power iteration for top-k eigenspace
//! approximation, in centralized and federated (simulated secure-aggregation)
//! flavors, with adaptive sensitivity calibration, a zCDP accountant, and a
//! recommender-system application built on the item-item spectral filter.
//!
//! The crate is dependency-light and fully deterministic: all randomness goes
//! through keyed counter-based streams, so every run is reproducible from a
//! single seed.

pub mod bounds;
pub mod eig;
pub mod error;
pub mod federated;
pub mod matrix;
pub mod ppm;
pub mod privacy;
pub mod qr;
pub mod recsys;
pub mod rng;
pub mod sensitivity;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use ppm::{run_centralized, PowerMethodConfig};
pub use privacy::PrivacyBudget;
pub use sensitivity::SensitivityPolicy;
