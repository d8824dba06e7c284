//! Centralized privacy-preserving power method.
//!
//! Each iteration multiplies the current orthonormal iterate by the data
//! matrix, adds Gaussian noise scaled by the active sensitivity policy, and
//! re-orthonormalizes. The sensitivity for iteration `l` is evaluated on
//! `X^{l-1}`, the matrix actually multiplied.

use crate::error::{Error, Result};
use crate::matrix::{gram_lambda_max, spectral_norm, DenseMatrix};
use crate::privacy::{calibrate_sigma, verify_algorithm_budget, BudgetCheck, PrivacyBudget};
use crate::qr::qr_orthonormalize;
use crate::rng::{gaussian_matrix, RngStream, StreamPurpose};
use crate::sensitivity::SensitivityPolicy;

/// Oracle-based trace metrics are skipped above this dimension; the reference
/// eigensolver would dominate the runtime.
pub const METRICS_DIM_LIMIT: usize = 2000;

#[derive(Debug, Clone)]
pub struct PowerMethodConfig {
    pub target_rank: usize,
    pub iteration_rank: usize,
    pub iterations: usize,
    /// `None` runs the noiseless baseline.
    pub budget: Option<PrivacyBudget>,
    pub policy: SensitivityPolicy,
    pub seed: u64,
}

impl PowerMethodConfig {
    /// Defaults mirroring the experiment setup: p = 32, L = 3.
    pub fn new(target_rank: usize, seed: u64) -> Self {
        Self {
            target_rank,
            iteration_rank: 32.max(target_rank),
            iterations: 3,
            budget: None,
            policy: SensitivityPolicy::ImprovedMaxRow,
            seed,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        assert!(self.target_rank >= 1);
        assert!(self.iterations >= 1);
        if self.iteration_rank < self.target_rank || self.iteration_rank > n {
            return Err(Error::ShapeMismatch {
                expected: format!("k <= p <= n with k={} n={n}", self.target_rank),
                got: format!("p={}", self.iteration_rank),
            });
        }
        if let Some(b) = self.budget {
            b.ensure_valid()?;
        }
        Ok(())
    }
}

/// One power-method iteration record.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub delta: f64,
    pub sigma: f64,
    pub max_row_l2: f64,
    /// `||G_l||_2`, recorded for inspection of the noise-magnitude conditions.
    pub noise_spectral: Option<f64>,
    pub projection_error: Option<f64>,
    pub rho_cumulative: f64,
}

#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub budget_check: Option<BudgetCheck>,
    pub metrics_skipped: bool,
}

impl IterationTrace {
    /// CSV with columns (iter, delta, sigma, max_row_l2, proj_err, rho_cum).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,delta,sigma,max_row_l2,proj_err,rho_cum\n");
        for r in &self.records {
            let proj = r
                .projection_error
                .map(|v| v.to_string())
                .unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iteration, r.delta, r.sigma, r.max_row_l2, proj, r.rho_cumulative
            ));
        }
        s
    }
}

/// How the centralized run draws its per-iteration noise.
#[derive(Debug, Clone, Copy)]
pub enum CentralNoise {
    /// Single stream (party index 0), scale `Delta_l * sigma`.
    Stream,
    /// Fold of per-party draws at scale `Delta_l * sigma / sqrt(s)`: the
    /// centralized image of the distributed-noise tape, used to check the
    /// `s nu^2 = sigma^2` aggregation identity.
    PartyTape { parties: usize },
}

pub(crate) fn initial_iterate(n: usize, p: usize, seed: u64) -> Result<DenseMatrix> {
    let sketch = gaussian_matrix(RngStream::new(seed, StreamPurpose::Init), n, p, 1.0)?;
    Ok(qr_orthonormalize(&sketch)?.0)
}

pub fn run_centralized(
    a: &DenseMatrix,
    cfg: &PowerMethodConfig,
    oracle_topk: Option<&DenseMatrix>,
) -> Result<(DenseMatrix, IterationTrace)> {
    run_centralized_with_noise(a, cfg, oracle_topk, CentralNoise::Stream)
}

pub fn run_centralized_with_noise(
    a: &DenseMatrix,
    cfg: &PowerMethodConfig,
    oracle_topk: Option<&DenseMatrix>,
    noise: CentralNoise,
) -> Result<(DenseMatrix, IterationTrace)> {
    let n = a.rows();
    if !a.is_symmetric(1e-10) {
        return Err(Error::NotSymmetric);
    }
    cfg.validate(n)?;

    let sigma_base = match cfg.budget {
        Some(b) => Some(calibrate_sigma(b, cfg.iterations)?),
        None => None,
    };

    let mut x = initial_iterate(n, cfg.iteration_rank, cfg.seed)?;
    let mut trace = IterationTrace {
        metrics_skipped: oracle_topk.is_none() && n > METRICS_DIM_LIMIT,
        ..Default::default()
    };
    let mut releases: Vec<(f64, f64)> = Vec::new();
    let mut rho_cum = 0.0;

    for l in 1..=cfg.iterations {
        let delta = cfg.policy.evaluate(&x);
        let max_row = x.max_row_l2();
        let sigma_l = sigma_base.map(|s| delta * s);

        let g = match sigma_l {
            Some(s) => Some(draw_noise(cfg.seed, noise, StreamPurpose::Noise, l, n, cfg.iteration_rank, delta, s)?),
            None => None,
        };
        let mut y = a.matmul(&x)?;
        if let Some(ref g) = g {
            y = y.add(g)?;
        }
        if let Some(s) = sigma_l {
            releases.push((delta, s));
            rho_cum += delta * delta / (2.0 * s * s);
        }

        let next = match qr_orthonormalize(&y) {
            Ok((q, _)) => q,
            Err(Error::RankDeficient { .. }) if sigma_l.is_some() => {
                // One fresh draw from the resample stream; a second failure
                // aborts. The extra release is charged to the ledger.
                let s = sigma_l.unwrap();
                let g2 = draw_noise(
                    cfg.seed,
                    noise,
                    StreamPurpose::Resample,
                    l,
                    n,
                    cfg.iteration_rank,
                    delta,
                    s,
                )?;
                let y2 = a.matmul(&x)?.add(&g2)?;
                releases.push((delta, s));
                rho_cum += delta * delta / (2.0 * s * s);
                qr_orthonormalize(&y2)?.0
            }
            Err(e) => return Err(e),
        };

        trace.records.push(IterationRecord {
            iteration: l,
            delta,
            sigma: sigma_l.unwrap_or(0.0),
            max_row_l2: max_row,
            noise_spectral: g.as_ref().map(|g| spectral_norm(g).0),
            projection_error: oracle_topk
                .map(|u| projection_error(&next, u))
                .transpose()?,
            rho_cumulative: rho_cum,
        });
        x = next;
    }

    if let Some(b) = cfg.budget {
        trace.budget_check = Some(verify_algorithm_budget(b, releases.len(), &releases)?);
    }
    Ok((x, trace))
}

#[allow(clippy::too_many_arguments)]
fn draw_noise(
    seed: u64,
    noise: CentralNoise,
    purpose: StreamPurpose,
    iteration: usize,
    rows: usize,
    cols: usize,
    _delta: f64,
    sigma_l: f64,
) -> Result<DenseMatrix> {
    match noise {
        CentralNoise::Stream => gaussian_matrix(
            RngStream::new(seed, purpose)
                .with_party(0)
                .with_iteration(iteration as u64),
            rows,
            cols,
            sigma_l,
        ),
        CentralNoise::PartyTape { parties } => {
            // sigma / sqrt(s) is exactly the federated nu; folding per-party
            // draws at that scale realizes sigma^2 = s nu^2.
            let nu_scale = sigma_l / (parties as f64).sqrt();
            let mut acc = gaussian_matrix(
                RngStream::new(seed, purpose)
                    .with_party(0)
                    .with_iteration(iteration as u64),
                rows,
                cols,
                nu_scale,
            )?;
            for i in 1..parties {
                let gi = gaussian_matrix(
                    RngStream::new(seed, purpose)
                        .with_party(i as u64)
                        .with_iteration(iteration as u64),
                    rows,
                    cols,
                    nu_scale,
                )?;
                acc = acc.add(&gi)?;
            }
            Ok(acc)
        }
    }
}

/// `||(I - X X^T) U_k||_2` via power iteration on the k x k Gram matrix of
/// the residual `U_k - X (X^T U_k)`.
pub fn projection_error(x: &DenseMatrix, u_k: &DenseMatrix) -> Result<f64> {
    let xt_u = x.transpose().matmul(u_k)?;
    let residual = u_k.sub(&x.matmul(&xt_u)?)?;
    let (lambda, _) = gram_lambda_max(&residual);
    Ok(lambda.max(0.0).sqrt())
}

/// `||(I - X X^T) A||_2^2`.
pub fn matrix_error(x: &DenseMatrix, a: &DenseMatrix) -> Result<f64> {
    let xt_a = x.transpose().matmul(a)?;
    let residual = a.sub(&x.matmul(&xt_a)?)?;
    let (lambda, _) = gram_lambda_max(&residual);
    Ok(lambda.max(0.0))
}
