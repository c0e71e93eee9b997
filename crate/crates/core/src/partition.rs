use crate::error::{Error, Result};

/// Partition of the state space into energy bands.
///
/// Region `0` is `U <= u_1`, region `i` is `u_i < U <= u_{i+1}` and the last
/// region is `U > u_{m-1}`. A value equal to a cutpoint belongs to the lower
/// region. Indices are zero-based throughout the library; user-facing files
/// and CSV column names number regions from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyPartition {
    cutpoints: Vec<f64>,
}

impl EnergyPartition {
    pub fn new(cutpoints: Vec<f64>) -> Result<Self> {
        if cutpoints.is_empty() {
            return Err(Error::input(
                "partition needs at least one cutpoint (m >= 2)",
            ));
        }
        if cutpoints.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("partition cutpoints must be finite"));
        }
        if cutpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input(
                "partition cutpoints must be strictly increasing",
            ));
        }
        Ok(Self { cutpoints })
    }

    /// Cutpoints `lo, lo + step, ..., hi` (inclusive, up to rounding).
    pub fn uniform(lo: f64, step: f64, hi: f64) -> Result<Self> {
        if step.is_nan()
            || step <= 0.0
            || hi.is_nan()
            || hi < lo
            || !lo.is_finite()
            || !hi.is_finite()
        {
            return Err(Error::input(format!(
                "invalid uniform partition lo={lo} step={step} hi={hi}"
            )));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        Self::new((0..=n).map(|k| lo + k as f64 * step).collect())
    }

    pub fn cutpoints(&self) -> &[f64] {
        &self.cutpoints
    }

    /// Number of regions `m`.
    pub fn len(&self) -> usize {
        self.cutpoints.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Region of a finite energy.
    pub fn classify(&self, u: f64) -> Result<usize> {
        if !u.is_finite() {
            return Err(Error::input(format!(
                "cannot classify non-finite energy {u}"
            )));
        }
        Ok(self.classify_unchecked(u))
    }

    #[inline]
    pub fn classify_unchecked(&self, u: f64) -> usize {
        self.cutpoints.partition_point(|&c| c < u)
    }

    /// Energy interval `(lower, upper]` covered by `region`.
    pub fn bounds(&self, region: usize) -> (f64, f64) {
        let lo = if region == 0 {
            f64::NEG_INFINITY
        } else {
            self.cutpoints[region - 1]
        };
        let hi = self.cutpoints.get(region).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }
}
