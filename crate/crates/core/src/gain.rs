//! Gain factor sequences `gamma(t) = t0 / max(t0, t^beta)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSchedule {
    t0: f64,
    beta: f64,
}

impl GainSchedule {
    /// Any positive `t0` and `beta` give a positive, non-increasing
    /// sequence. Whether the sequence is admissible for the convergence
    /// theory is a separate question answered by [`GainSchedule::validate`].
    pub fn new(t0: f64, beta: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::input(format!("gain t0 must be positive, got {t0}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::input(format!(
                "gain beta must be positive, got {beta}"
            )));
        }
        Ok(Self { t0, beta })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `gamma(t)`; `t = 0` is treated like `t = 1` (the plateau).
    #[inline]
    pub fn gain(&self, t: u64) -> f64 {
        let tb = if self.beta == 1.0 {
            t as f64
        } else {
            (t as f64).powf(self.beta)
        };
        self.t0 / self.t0.max(tb)
    }

    /// Drift correction `zeta` of the normalized recursion: zero for
    /// `beta < 1`, `1 / (2 t0)` for `beta = 1`.
    pub fn zeta(&self) -> f64 {
        if self.beta == 1.0 {
            1.0 / (2.0 * self.t0)
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> ValidationReport {
        self.validate_inner(None)
    }

    /// Like [`GainSchedule::validate`], but resolves the `beta = 1` stability
    /// requirement `-2 lambda_F t0 > 1` using a known largest real part
    /// `lambda_f` of the mean-field Jacobian.
    pub fn validate_with_jacobian(&self, lambda_f: f64) -> ValidationReport {
        self.validate_inner(Some(lambda_f))
    }

    fn validate_inner(&self, lambda_f: Option<f64>) -> ValidationReport {
        let beta_in_range = self.beta > 0.5 && self.beta <= 1.0;
        let zeta = self.zeta();
        let verdict = if !beta_in_range {
            Verdict::Fail(format!(
                "beta = {} is outside (1/2, 1]: the sequence is not admissible",
                self.beta
            ))
        } else if self.beta < 1.0 {
            Verdict::Pass
        } else {
            // beta = 1 also needs -2 lambda_F t0 > max(1, beta~); beta~ = 1
            // for gamma = t0/t, so the bound is 1.
            match lambda_f {
                None => Verdict::PassWithCaveat(
                    "beta = 1 additionally requires -2 * lambda_F * t0 > 1; \
                     unverifiable without F"
                        .into(),
                ),
                Some(l) if -2.0 * l * self.t0 > 1.0 => Verdict::Pass,
                Some(l) => Verdict::Fail(format!(
                    "beta = 1 requires -2 * lambda_F * t0 > 1, got {:.4}",
                    -2.0 * l * self.t0
                )),
            }
        };
        ValidationReport {
            t0: self.t0,
            beta: self.beta,
            beta_in_range,
            zeta,
            verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    PassWithCaveat(String),
    Fail(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub t0: f64,
    pub beta: f64,
    pub beta_in_range: bool,
    pub zeta: f64,
    pub verdict: Verdict,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        !matches!(self.verdict, Verdict::Fail(_))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gain t0={} beta={} zeta={}: ",
            self.t0, self.beta, self.zeta
        )?;
        match &self.verdict {
            Verdict::Pass => write!(f, "pass"),
            Verdict::PassWithCaveat(c) => write!(f, "pass ({c})"),
            Verdict::Fail(r) => write!(f, "schedule validation failed: {r}"),
        }
    }
}
