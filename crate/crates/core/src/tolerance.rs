//! Numerical tolerance policy shared by every module.
//!
//! All thresholds are relative: a quantity is compared against
//! `tol * scale` where the scale is `max(1, norms involved)`.

use serde::{Deserialize, Serialize};

/// Relative bound on `‖a − a*‖` for an element to count as self-adjoint.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Smallest singular value at or below `SINGULARITY_TOL * ‖a‖` marks a block singular.
pub const SINGULARITY_TOL: f64 = 1e-12;

pub const DEFAULT_VERDICT_TOL: f64 = 1e-8;
pub const DEFAULT_IDENTITY_TOL: f64 = 1e-10;
pub const DEFAULT_NORMALIZATION_TOL: f64 = 1e-10;

/// Environment variable overriding the default verdict tolerance.
pub const DEFAULT_TOL_ENV: &str = "NCUP_DEFAULT_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative slack allowed on an inequality margin before it counts as violated.
    pub verdict: f64,
    /// Relative residual allowed on algebraic identities.
    pub identity: f64,
    /// Allowed `‖⟨x,x⟩ − 1‖` for a supplied state.
    pub normalization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            verdict: DEFAULT_VERDICT_TOL,
            identity: DEFAULT_IDENTITY_TOL,
            normalization: DEFAULT_NORMALIZATION_TOL,
        }
    }
}

impl Tolerances {
    pub fn with_verdict(verdict: f64) -> Self {
        Self {
            verdict,
            ..Self::default()
        }
    }

    /// Defaults, with the verdict tolerance taken from `NCUP_DEFAULT_TOL` when set and valid.
    pub fn from_env() -> Self {
        let verdict = std::env::var(DEFAULT_TOL_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite() && *v >= 0.0)
            .unwrap_or(DEFAULT_VERDICT_TOL);
        Self::with_verdict(verdict)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("verdict", self.verdict),
            ("identity", self.identity),
            ("normalization", self.normalization),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("tolerance {name} must be finite and nonnegative, got {v}"));
            }
        }
        Ok(())
    }
}
