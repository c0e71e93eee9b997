//! Target densities and their energy functions.
//!
//! The samplers only ever see a target through [`EnergyFunction`], i.e. the
//! unnormalized log density `U(x) = -log psi(x)`. [`MixtureDensity`] is the
//! isotropic Gaussian mixture used by the multimodal benchmark.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Terms whose log weight trails the leading term by more than this are
/// below f64 resolution of the sum and are skipped.
const LSE_CUTOFF: f64 = 50.0;

/// Energy `U(x) = -log psi(x)` of an unnormalized target.
///
/// Implementations return `+inf` where `psi(x) = 0` (outside the support or
/// after overflow); callers treat that as a zero-density state.
pub trait EnergyFunction: Send + Sync {
    fn dim(&self) -> usize;

    /// Energy at `x`. `x.len()` must equal [`EnergyFunction::dim`]; this is
    /// not rechecked on the hot path.
    fn energy_unchecked(&self, x: &[f64]) -> f64;

    fn energy(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(self.energy_unchecked(x))
    }
}

/// One isotropic Gaussian component `weight * N(mean, variance * I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: f64,
}

/// Finite mixture of isotropic Gaussians in `R^d`.
#[derive(Debug, Clone)]
pub struct MixtureDensity {
    dim: usize,
    components: Vec<Component>,
    // Flattened means, `dim` entries per component.
    means: Vec<f64>,
    // log(weight) - d/2 * log(2 pi variance)
    log_norm: Vec<f64>,
    // 1 / (2 variance)
    inv_two_var: Vec<f64>,
}

impl MixtureDensity {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::input("mixture needs at least one component"))?;
        let dim = first.mean.len();
        if dim == 0 {
            return Err(Error::input("mixture dimension must be positive"));
        }
        let mut total = 0.0;
        for (i, c) in components.iter().enumerate() {
            if c.mean.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: c.mean.len(),
                });
            }
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::input(format!(
                    "component {}: weight must be positive, got {}",
                    i + 1,
                    c.weight
                )));
            }
            if !(c.variance > 0.0 && c.variance.is_finite()) {
                return Err(Error::input(format!(
                    "component {}: variance must be positive, got {}",
                    i + 1,
                    c.variance
                )));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::input(format!(
                    "component {}: non-finite mean",
                    i + 1
                )));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!(
                "component weights must sum to 1 (got {total:.15})"
            )));
        }

        let half_d = dim as f64 / 2.0;
        let means = components
            .iter()
            .flat_map(|c| c.mean.iter().copied())
            .collect();
        let log_norm = components
            .iter()
            .map(|c| c.weight.ln() - half_d * (2.0 * PI * c.variance).ln())
            .collect();
        let inv_two_var = components.iter().map(|c| 0.5 / c.variance).collect();
        Ok(Self {
            dim,
            components,
            means,
            log_norm,
            inv_two_var,
        })
    }

    /// Equal-weight mixture with a shared variance.
    pub fn equal_weights(means: &[Vec<f64>], variance: f64) -> Result<Self> {
        let w = 1.0 / means.len().max(1) as f64;
        Self::new(
            means
                .iter()
                .map(|m| Component {
                    weight: w,
                    mean: m.clone(),
                    variance,
                })
                .collect(),
        )
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Normalized density `psi(x)`, evaluated by plain summation. Slow path,
    /// used for cross-checks.
    pub fn density_direct(&self, x: &[f64]) -> f64 {
        self.components
            .iter()
            .zip(&self.log_norm)
            .zip(&self.inv_two_var)
            .map(|((c, ln), itv)| {
                let d2: f64 = c
                    .mean
                    .iter()
                    .zip(x)
                    .map(|(m, xi)| (xi - m) * (xi - m))
                    .sum();
                (ln - d2 * itv).exp()
            })
            .sum()
    }

    /// Draws one exact sample: a component by weight, then its Gaussian.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.len() - 1;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                chosen = i;
                break;
            }
        }
        let c = &self.components[chosen];
        let sd = c.variance.sqrt();
        for (o, m) in out.iter_mut().zip(&c.mean) {
            let z: f64 = StandardNormal.sample(rng);
            *o = m + sd * z;
        }
    }

    /// Reads the CSV mixture format: header `weight,variance,mean_1,..,mean_d`,
    /// one component per row, `#` starts a comment line.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 3
            || &headers[0] != "weight"
            || &headers[1] != "variance"
            || !headers
                .iter()
                .skip(2)
                .enumerate()
                .all(|(i, h)| h == format!("mean_{}", i + 1))
        {
            return Err(Error::input(
                "mixture header must be weight,variance,mean_1,...,mean_d",
            ));
        }
        let mut components = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>().map_err(|_| {
                        Error::input(format!("mixture row {}: cannot parse {s:?}", row + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            components.push(Component {
                weight: vals[0],
                variance: vals[1],
                mean: vals[2..].to_vec(),
            });
        }
        Self::new(components)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Writes the format accepted by [`MixtureDensity::read_csv`]. Values use
    /// Rust's shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["weight".to_string(), "variance".to_string()];
        header.extend((1..=self.dim).map(|i| format!("mean_{i}")));
        w.write_record(&header)?;
        for c in &self.components {
            let mut rec = vec![c.weight.to_string(), c.variance.to_string()];
            rec.extend(c.mean.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<mixture writer>", e))?;
        Ok(())
    }
}

impl EnergyFunction for MixtureDensity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn energy_unchecked(&self, x: &[f64]) -> f64 {
        let k = self.log_norm.len();
        // Log terms are computed twice rather than buffered; k is small and
        // the second pass usually evaluates one or two exponentials.
        let log_term = |i: usize| {
            let mu = &self.means[i * self.dim..(i + 1) * self.dim];
            let d2: f64 = mu.iter().zip(x).map(|(m, xi)| (xi - m) * (xi - m)).sum();
            self.log_norm[i] - d2 * self.inv_two_var[i]
        };
        let mut max = f64::NEG_INFINITY;
        for i in 0..k {
            let lt = log_term(i);
            if lt > max {
                max = lt;
            }
        }
        if !max.is_finite() {
            // Squared distances overflowed: psi(x) underflows to zero.
            return f64::INFINITY;
        }
        let mut sum = 0.0;
        for i in 0..k {
            let diff = log_term(i) - max;
            if diff > -LSE_CUTOFF {
                sum += diff.exp();
            }
        }
        -(max + sum.ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn twenty_modes() -> MixtureDensity {
        let means: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i % 5) as f64 * 2.0, (i / 5) as f64 * 2.0])
            .collect();
        MixtureDensity::equal_weights(&means, 0.01).unwrap()
    }

    #[test]
    fn unit_peak_has_zero_energy() {
        let d = MixtureDensity::new(vec![Component {
            weight: 1.0,
            mean: vec![0.0],
            variance: 1.0 / (2.0 * PI),
        }])
        .unwrap();
        assert!(d.energy(&[0.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn energy_at_a_mode_matches_direct_sum() {
        let d = twenty_modes();
        let x = [0.0, 0.0];
        // Oracle: all 20 Gaussian terms summed at full precision.
        let direct: f64 = (0..20)
            .map(|i| {
                let (mx, my) = ((i % 5) as f64 * 2.0, (i / 5) as f64 * 2.0);
                let d2 = mx * mx + my * my;
                0.05 / (2.0 * PI * 0.01) * (-d2 / 0.02).exp()
            })
            .sum();
        let u = d.energy(&x).unwrap();
        assert_relative_eq!(u, -direct.ln(), max_relative = 1e-12);
        // Cross-terms are negligible for separated modes.
        assert_relative_eq!(u, -(0.05f64 / (2.0 * PI * 0.01)).ln(), max_relative = 1e-12);
    }

    #[test]
    fn far_away_energy_is_finite() {
        let d = twenty_modes();
        let u = d.energy(&[1e3, -1e3]).unwrap();
        assert!(u.is_finite() && u > 1e7);
        assert_eq!(d.energy(&[1e300, 1e300]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let d = twenty_modes();
        assert!(matches!(
            d.energy(&[0.0]),
            Err(Error::Dimension {
                expected: 2,
                actual: 1
            })
        ));
    }

    #[test]
    fn rejects_bad_components() {
        let bad_weights = MixtureDensity::equal_weights(&[vec![0.0], vec![1.0]], 1.0)
            .map(|d| d.components().to_vec())
            .unwrap();
        let mut c = bad_weights.clone();
        c[0].weight = 0.4;
        assert!(MixtureDensity::new(c).is_err());
        let mut c = bad_weights;
        c[1].variance = 0.0;
        assert!(MixtureDensity::new(c).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = twenty_modes();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = MixtureDensity::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.components(), d.components());
    }

    #[test]
    fn sampler_picks_components_by_weight() {
        let d = MixtureDensity::new(vec![
            Component {
                weight: 0.25,
                mean: vec![-10.0],
                variance: 1.0,
            },
            Component {
                weight: 0.75,
                mean: vec![10.0],
                variance: 1.0,
            },
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut x = [0.0];
        let n = 40_000;
        let right = (0..n)
            .filter(|_| {
                d.sample_into(&mut rng, &mut x);
                x[0] > 0.0
            })
            .count();
        let p = right as f64 / n as f64;
        assert!((p - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / n as f64).sqrt());
    }
}
