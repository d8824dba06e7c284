//! zCDP accountant: Gaussian-mechanism rho, adaptive composition, conversion
//! to (epsilon, delta)-DP, and the noise-scale calibration shared by the
//! centralized and federated algorithms.
//!
//! All logarithms are natural; the composition and conversion formulas are
//! exact identities in that convention.

use crate::error::{Error, Result};

/// Target (epsilon, delta) differential-privacy budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Self {
        assert!(epsilon > 0.0, "epsilon must be positive");
        assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
        Self { epsilon, delta }
    }

    /// The composition argument only closes when `delta <= exp(-epsilon/4)`;
    /// epsilon itself is not restricted to <= 1.
    pub fn valid(&self) -> bool {
        self.delta <= (-self.epsilon / 4.0).exp()
    }

    pub fn ensure_valid(&self) -> Result<()> {
        if self.valid() {
            Ok(())
        } else {
            Err(Error::InvalidBudget {
                epsilon: self.epsilon,
                delta: self.delta,
                limit: (-self.epsilon / 4.0).exp(),
            })
        }
    }

    /// Default delta used by experiment harnesses for a given epsilon.
    pub fn default_delta(epsilon: f64) -> f64 {
        (0.01f64).min((-epsilon / 4.0).exp() / 2.0)
    }
}

/// Running zCDP ledger over a sequence of Gaussian releases. A value type:
/// recording returns an updated copy.
#[derive(Debug, Clone, Default)]
pub struct ZcdpLedger {
    rho_total: f64,
    entries: Vec<LedgerEntry>,
}

#[derive(Debug, Clone, Copy)]
pub struct LedgerEntry {
    pub delta_sensitivity: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl ZcdpLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rho_total(&self) -> f64 {
        self.rho_total
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Record one Gaussian release of a sensitivity-`delta_sensitivity`
    /// function with noise scale `sigma`; charges `rho = Delta^2 / (2 sigma^2)`.
    pub fn record_gaussian_release(&self, delta_sensitivity: f64, sigma: f64) -> Result<Self> {
        if sigma <= 0.0 {
            return Err(Error::NonPositiveSigma(sigma));
        }
        assert!(delta_sensitivity >= 0.0);
        let rho = delta_sensitivity * delta_sensitivity / (2.0 * sigma * sigma);
        let mut next = self.clone();
        next.entries.push(LedgerEntry {
            delta_sensitivity,
            sigma,
            rho,
        });
        next.rho_total += rho;
        Ok(next)
    }
}

/// Base noise multiplier `epsilon^{-1} sqrt(4 L ln(1/delta))`; the
/// per-iteration scale is this value times the iteration's sensitivity.
pub fn calibrate_sigma(budget: PrivacyBudget, iterations: usize) -> Result<f64> {
    budget.ensure_valid()?;
    assert!(iterations >= 1, "need at least one iteration");
    let l = iterations as f64;
    Ok((4.0 * l * (1.0 / budget.delta).ln()).sqrt() / budget.epsilon)
}

/// Convert accumulated zCDP to approximate DP: `rho + 2 sqrt(rho ln(1/delta))`.
pub fn zcdp_to_dp(rho: f64, delta: f64) -> f64 {
    assert!(rho >= 0.0);
    assert!(delta > 0.0 && delta < 1.0);
    rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt()
}

/// Outcome of checking a full run against its declared budget.
#[derive(Debug, Clone, Copy)]
pub struct BudgetCheck {
    pub epsilon_effective: f64,
    pub satisfied: bool,
}

/// Floating-point slack on the `epsilon_effective <= epsilon` comparison; the
/// calibration identity is exact only in real arithmetic.
const BUDGET_SLACK: f64 = 1e-12;

/// Compose every per-iteration release, convert to DP, and compare against
/// the declared budget. The executable form of the overall privacy claim.
///
/// Note: releases calibrated at `sigma = Delta * calibrate_sigma` spend
/// exactly `rho + epsilon/sqrt(2)` with `rho = epsilon^2 / (8 ln(1/delta))`,
/// so the check passes iff `epsilon <= 8 (1 - 1/sqrt(2)) ln(1/delta)`, a
/// slightly stricter region than the `delta <= exp(-epsilon/4)` gate. The
/// check reports the honest composed value either way.
pub fn verify_algorithm_budget(
    budget: PrivacyBudget,
    iterations: usize,
    releases: &[(f64, f64)],
) -> Result<BudgetCheck> {
    if iterations == 0 && releases.is_empty() {
        return Ok(BudgetCheck {
            epsilon_effective: 0.0,
            satisfied: true,
        });
    }
    let mut ledger = ZcdpLedger::new();
    for &(delta_l, sigma_l) in releases {
        ledger = ledger.record_gaussian_release(delta_l, sigma_l)?;
    }
    let epsilon_effective = zcdp_to_dp(ledger.rho_total(), budget.delta);
    Ok(BudgetCheck {
        epsilon_effective,
        satisfied: epsilon_effective <= budget.epsilon + BUDGET_SLACK,
    })
}
