//! Convergence-bound calculators and the sensitivity-ratio study.
//!
//! Every bound is evaluated with the unstated asymptotic constant fixed to 1
//! and natural logarithms throughout. The absolute values are therefore only
//! a convention; ratios between bounds computed under the same convention are
//! the meaningful outputs.

use crate::error::{Error, Result};
use crate::privacy::PrivacyBudget;
use crate::qr::qr_orthonormalize;
use crate::rng::{gaussian_matrix, RngStream, StreamPurpose};
use crate::sensitivity::SensitivityPolicy;

/// Spectrum and rank parameters entering the convergence bounds:
/// target rank `k`, intermediate rank `q`, iteration rank `p` with
/// `k <= q`, `2q <= p <= n`, and a tail constant `tau`.
#[derive(Debug, Clone)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<f64>,
    pub k: usize,
    pub q: usize,
    pub p: usize,
    pub tau: f64,
}

impl SpectrumSummary {
    pub fn new(eigenvalues: Vec<f64>, k: usize, q: usize, p: usize, tau: f64) -> Self {
        let n = eigenvalues.len();
        assert!(k >= 1 && k <= q && 2 * q <= p && p <= n);
        assert!(tau > 0.0);
        for w in eigenvalues.windows(2) {
            assert!(w[0] >= w[1], "eigenvalues must be sorted descending");
        }
        assert!(*eigenvalues.last().unwrap() >= 0.0);
        Self {
            eigenvalues,
            k,
            q,
            p,
            tau,
        }
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `lambda_k - lambda_{q+1}` (1-based indices).
    pub fn gap(&self) -> Result<f64> {
        let gap = self.eigenvalues[self.k - 1] - self.eigenvalues[self.q];
        if gap <= 0.0 {
            return Err(Error::ZeroGap);
        }
        Ok(gap)
    }
}

/// Row-norm-calibrated bound:
/// `eta = eps^{-1} max_row sqrt(L n ln(1/delta) ln L) / gap`.
pub fn eta_runtime_dependent(
    spec: &SpectrumSummary,
    budget: PrivacyBudget,
    iterations: usize,
    max_row_stat: f64,
) -> Result<f64> {
    assert!(iterations >= 1 && max_row_stat >= 0.0);
    let gap = spec.gap()?;
    let l = iterations as f64;
    let n = spec.n() as f64;
    let log_l = if iterations == 1 { 1.0 } else { l.ln() };
    Ok(max_row_stat * (l * n * (1.0 / budget.delta).ln() * log_l).sqrt()
        / (budget.epsilon * gap))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoherenceBranch {
    /// `mu0 sqrt(p ln n)` won the min.
    Mu0SqrtPLogN,
    /// `mu1` won the min.
    Mu1,
}

/// Coherence-calibrated bound: the row-norm statistic is replaced by
/// `min(mu0 sqrt(p ln n), mu1)`, which needs no knowledge of the iterates.
pub fn eta_runtime_independent(
    spec: &SpectrumSummary,
    budget: PrivacyBudget,
    iterations: usize,
    mu0: f64,
    mu1: f64,
) -> Result<(f64, CoherenceBranch)> {
    assert!(mu0 >= 0.0 && mu1 >= 0.0);
    let mu0_branch = mu0 * ((spec.p as f64) * (spec.n() as f64).ln()).sqrt();
    let (stat, branch) = if mu0_branch <= mu1 {
        (mu0_branch, CoherenceBranch::Mu0SqrtPLogN)
    } else {
        (mu1, CoherenceBranch::Mu1)
    };
    Ok((
        eta_runtime_dependent(spec, budget, iterations, stat)?,
        branch,
    ))
}

/// Entrywise-max-calibrated bound from prior work:
/// `eta = eps^{-1} max_abs sqrt(4 p L n ln(1/delta) ln L) / gap`.
pub fn eta_prior(
    spec: &SpectrumSummary,
    budget: PrivacyBudget,
    iterations: usize,
    max_abs_stat: f64,
) -> Result<f64> {
    let scaled = (4.0 * spec.p as f64).sqrt() * max_abs_stat;
    eta_runtime_dependent(spec, budget, iterations, scaled)
}

/// Predicted ratio of the prior to the improved sensitivity at the first
/// iteration, from the chi-square moment approximation: with
/// `mu = n/(n-2)` and `s2 = 2 n^2 (n-1) / ((n-2)^2 (n-4))`,
/// `E[prior^2] ~ sqrt(2 s2 ln(kn)) k/n + k mu/n` and
/// `E[improved^2] ~ sqrt(2 s2 k ln n)/n + k mu/n`.
pub fn ratio_theoretical(k: usize, n: usize) -> f64 {
    assert!(n > 4 && k >= 1 && k <= n);
    let (kf, nf) = (k as f64, n as f64);
    let mu = nf / (nf - 2.0);
    let s2 = 2.0 * nf * nf * (nf - 1.0) / ((nf - 2.0) * (nf - 2.0) * (nf - 4.0));
    let shared = kf * mu / nf;
    let prior_sq = (2.0 * s2 * (kf * nf).ln() * kf * kf / (nf * nf)).sqrt() + shared;
    let improved_sq = (2.0 * s2 * nf.ln() * kf / (nf * nf)).sqrt() + shared;
    (prior_sq / improved_sq).sqrt()
}

#[derive(Debug, Clone)]
pub struct RatioStudyConfig {
    pub n: usize,
    pub k_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

impl RatioStudyConfig {
    /// Desk-scale default: 5 trials per grid point.
    pub fn new(n: usize, seed: u64) -> Self {
        let k_grid = [1usize, 2, 4, 8, 16, 32, 64, 128, 256]
            .into_iter()
            .filter(|&k| k <= n)
            .collect();
        Self {
            n,
            k_grid,
            trials: 5,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RatioPoint {
    pub n: usize,
    pub k: usize,
    pub empirical: f64,
    pub theoretical: f64,
}

/// First-iteration sensitivity ratio, measured: for each k, draw
/// `X^0 = QR(Gaussian n x k)` `trials` times and report
/// `mean(prior) / mean(improved)`.
pub fn ratio_empirical(cfg: &RatioStudyConfig) -> Result<Vec<RatioPoint>> {
    assert!(cfg.trials >= 1);
    let mut out = Vec::with_capacity(cfg.k_grid.len());
    for &k in &cfg.k_grid {
        assert!(k <= cfg.n);
        let mut prior_sum = 0.0;
        let mut improved_sum = 0.0;
        for trial in 0..cfg.trials {
            let stream = RngStream::new(cfg.seed, StreamPurpose::Trial)
                .with_party(k as u64)
                .with_iteration(trial as u64);
            let g = gaussian_matrix(stream, cfg.n, k, 1.0)?;
            let (x0, _) = qr_orthonormalize(&g)?;
            prior_sum += SensitivityPolicy::Prior.evaluate(&x0);
            improved_sum += SensitivityPolicy::ImprovedMaxRow.evaluate(&x0);
        }
        out.push(RatioPoint {
            n: cfg.n,
            k,
            empirical: prior_sum / improved_sum,
            theoretical: ratio_theoretical(k, cfg.n),
        });
    }
    Ok(out)
}

/// CSV for the ratio study: (n, k, ratio_empirical, ratio_theoretical).
pub fn ratio_csv(points: &[RatioPoint]) -> String {
    let mut s = String::from("n,k,ratio_empirical,ratio_theoretical\n");
    for p in points {
        s.push_str(&format!(
            "{},{},{},{}\n",
            p.n, p.k, p.empirical, p.theoretical
        ));
    }
    s
}

/// Spearman rank correlation between `xs` and `ys` (no tie correction needed
/// for strictly increasing grids).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    assert!(n >= 2);
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64;
        }
        r
    };
    let (rx, ry) = (rank(xs), rank(ys));
    let mean = (n as f64 - 1.0) / 2.0;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..n {
        num += (rx[i] - mean) * (ry[i] - mean);
        dx += (rx[i] - mean) * (rx[i] - mean);
        dy += (ry[i] - mean) * (ry[i] - mean);
    }
    num / (dx.sqrt() * dy.sqrt())
}
