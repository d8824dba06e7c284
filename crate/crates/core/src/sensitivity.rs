//! Sensitivity policies, coherence measures, and a brute-force adjacency
//! oracle for validating the improved bound on small instances.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::eig::symmetric_eig;
use crate::rng::{gaussian_matrix, RngStream};

/// Rule mapping the current iterate to the noise sensitivity `Delta_l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensitivityPolicy {
    /// `sqrt(p) * ||X||_max` — the prior single-column extrapolation.
    Prior,
    /// `max_i ||X_{i:}||_2` — the improved multidimensional bound.
    ImprovedMaxRow,
    /// `sqrt(2) * max_i ||X_{i:}||_2` — the recommender deletion adjacency.
    RecsysSqrt2,
    /// Non-adaptive constant, standing in for worst-case-calibrated baselines.
    /// Defaults to 1, the a-priori ceiling on the max row norm.
    FixedWorstCase(f64),
}

impl SensitivityPolicy {
    pub const DEFAULT_WORST_CASE: f64 = 1.0;

    pub fn evaluate(&self, x: &DenseMatrix) -> f64 {
        match *self {
            SensitivityPolicy::Prior => (x.cols() as f64).sqrt() * x.max_abs(),
            SensitivityPolicy::ImprovedMaxRow => x.max_row_l2(),
            SensitivityPolicy::RecsysSqrt2 => 2f64.sqrt() * x.max_row_l2(),
            SensitivityPolicy::FixedWorstCase(c) => c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SensitivityPolicy::Prior => "prior",
            SensitivityPolicy::ImprovedMaxRow => "improved-max-row",
            SensitivityPolicy::RecsysSqrt2 => "recsys-sqrt2",
            SensitivityPolicy::FixedWorstCase(_) => "fixed-worst-case",
        }
    }
}

pub fn evaluate_policy(policy: SensitivityPolicy, x: &DenseMatrix) -> f64 {
    policy.evaluate(x)
}

/// Coherence of a symmetric PSD matrix, computed from the full eigenvector
/// matrix: `mu0` is the max absolute entry, `mu1` the max row l2-norm.
#[derive(Debug, Clone, Copy)]
pub struct CoherenceReport {
    pub mu0: f64,
    pub mu1: f64,
    pub n: usize,
    pub eigenvectors_used: usize,
}

pub fn coherence(a: &DenseMatrix) -> Result<CoherenceReport> {
    let decomp = symmetric_eig(a)?;
    let u = &decomp.eigenvectors;
    Ok(CoherenceReport {
        mu0: u.max_abs(),
        mu1: u.max_row_l2(),
        n: a.rows(),
        eigenvectors_used: u.cols(),
    })
}

const ADJACENCY_TOL: f64 = 1e-12;

/// Symmetric update `C` with mixed-norm constraint
/// `sqrt(sum_i ||C_{i:}||_1^2) <= 1`.
#[derive(Debug, Clone)]
pub struct AdjacencyUpdate {
    c: DenseMatrix,
}

impl AdjacencyUpdate {
    pub fn new(c: DenseMatrix) -> Result<Self> {
        if !c.is_symmetric(ADJACENCY_TOL) {
            return Err(Error::NotSymmetric);
        }
        let value = c.row_l1_l2_mixed();
        if value > 1.0 + ADJACENCY_TOL {
            return Err(Error::MagnitudeTooLarge(value));
        }
        Ok(Self { c })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.c
    }

    pub fn constraint_value(&self) -> f64 {
        self.c.row_l1_l2_mixed()
    }
}

/// Single-entry update `c * e_i e_j^T`, symmetrized off the diagonal so the
/// update stays within the symmetric adjacency model.
pub fn single_entry_update(n: usize, i: usize, j: usize, c: f64) -> Result<AdjacencyUpdate> {
    if c.abs() > 1.0 {
        return Err(Error::MagnitudeTooLarge(c.abs()));
    }
    let mut m = DenseMatrix::zeros(n, n);
    if i == j {
        m.set(i, i, c);
    } else {
        m.set(i, j, c / 2.0);
        m.set(j, i, c / 2.0);
    }
    AdjacencyUpdate::new(m)
}

/// Random adjacency update: symmetrized Gaussian draw rescaled so the mixed
/// norm constraint holds with equality, maximizing the oracle's power.
pub fn random_adjacency_update(stream: RngStream, n: usize) -> Result<AdjacencyUpdate> {
    let g = gaussian_matrix(stream, n, n, 1.0)?;
    let sym = g.add(&g.transpose())?.scale(0.5);
    let value = sym.row_l1_l2_mixed();
    debug_assert!(value > 0.0);
    AdjacencyUpdate::new(sym.scale(1.0 / value))
}

/// Max of `||C x||_F` over `trials` sampled adjacency updates: an empirical
/// lower bound on the true sensitivity at `x`.
pub fn brute_force_sensitivity(x: &DenseMatrix, trials: usize, stream: RngStream) -> Result<f64> {
    assert!(x.rows() <= 16, "oracle is meant for n <= 16");
    let mut best = 0.0f64;
    for t in 0..trials {
        let update = random_adjacency_update(stream.with_iteration(t as u64), x.rows())?;
        let delta = update.matrix().matmul(x)?.frobenius();
        best = best.max(delta);
    }
    Ok(best)
}
