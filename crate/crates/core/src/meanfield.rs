//! Analytic mean field of the SAMC recursion for known region masses.
//!
//! With `S_i = w_i e^{-theta_i}` and `S = sum_k S_k` (over non-empty
//! regions), the mean field is `h_i(theta) = S_i / S - pi_i`. The reduced
//! system pins the last non-empty region (the reference) to zero and keeps
//! `h_i - h_ref` for the other non-empty regions; its Jacobian is
//! `F = (11^T + I) F0` with `F0_ii = -p_i (1 - p_i)`, `F0_ij = p_i p_j` and
//! `p_i = S_i / S`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::state::{DesiredDist, DEFAULT_THETA_BOUND};

/// How a [`MassVector`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassSource {
    /// Estimated by exact sampling.
    Oracle,
    /// Known in closed form.
    Analytic,
}

/// Unnormalized region masses `w_i = int_{E_i} psi`. Zero marks an empty
/// region.
#[derive(Debug, Clone, PartialEq)]
pub struct MassVector {
    w: Vec<f64>,
    source: MassSource,
}

impl MassVector {
    pub fn new(w: Vec<f64>, source: MassSource) -> Result<Self> {
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::input(
                "region masses must be finite and non-negative",
            ));
        }
        if !w.iter().any(|&v| v > 0.0) {
            return Err(Error::input("at least one region mass must be positive"));
        }
        Ok(Self { w, source })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn source(&self) -> MassSource {
        self.source
    }

    /// Indices of regions with positive mass, in order.
    pub fn nonempty(&self) -> Vec<usize> {
        (0..self.w.len()).filter(|&i| self.w[i] > 0.0).collect()
    }
}

fn check_lengths(theta: &[f64], w: &MassVector, pi: &DesiredDist) -> Result<()> {
    if theta.len() != w.w.len() || pi.len() != w.w.len() {
        return Err(Error::Dimension {
            expected: w.w.len(),
            actual: if theta.len() != w.w.len() {
                theta.len()
            } else {
                pi.len()
            },
        });
    }
    Ok(())
}

/// `S_i / S` for every region (zero for empty ones), in log space.
pub fn occupation(theta: &[f64], w: &MassVector) -> Vec<f64> {
    let log_s: Vec<f64> =
        w.w.iter()
            .zip(theta)
            .map(|(&wi, &t)| {
                if wi > 0.0 {
                    wi.ln() - t
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
    let max = log_s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = log_s.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// Full (unreduced) mean field `h_i = S_i / S - pi_i`, `i = 1..m`.
pub fn mean_field(theta: &[f64], w: &MassVector, pi: &DesiredDist) -> Result<Vec<f64>> {
    check_lengths(theta, w, pi)?;
    Ok(occupation(theta, w)
        .iter()
        .zip(pi.as_slice())
        .map(|(p, q)| p - q)
        .collect())
}

/// Reduced mean field `h_i - h_ref` over non-empty `i != ref`, where `ref`
/// is the last non-empty region.
pub fn mean_field_reduced(theta: &[f64], w: &MassVector, pi: &DesiredDist) -> Result<Vec<f64>> {
    let h = mean_field(theta, w, pi)?;
    let idx = w.nonempty();
    let r = *idx.last().expect("MassVector has a non-empty region");
    Ok(idx[..idx.len() - 1].iter().map(|&i| h[i] - h[r]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lyapunov {
    /// `v = 1/2 sum_k (S_k/S - pi_k)^2` over non-empty regions.
    pub v: f64,
    /// `<grad v, h>`, equal to minus the variance of `S_k/S - pi_k` under
    /// the distribution `S_k/S`.
    pub v_h: f64,
}

pub fn lyapunov(theta: &[f64], w: &MassVector, pi: &DesiredDist) -> Result<Lyapunov> {
    check_lengths(theta, w, pi)?;
    let p = occupation(theta, w);
    let idx = w.nonempty();
    let d: Vec<f64> = idx.iter().map(|&i| p[i] - pi.as_slice()[i]).collect();
    let v = 0.5 * d.iter().map(|x| x * x).sum::<f64>();
    let mean: f64 = idx.iter().zip(&d).map(|(&i, di)| p[i] * di).sum();
    let var: f64 = idx
        .iter()
        .zip(&d)
        .map(|(&i, di)| p[i] * (di - mean) * (di - mean))
        .sum();
    Ok(Lyapunov { v, v_h: -var })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Reduced Jacobian, `(m0 - 1) x (m0 - 1)`.
    pub jacobian: DMatrix<f64>,
    pub eigen_real_parts: Vec<f64>,
    /// Largest real part.
    pub lambda_f: f64,
    pub hurwitz: bool,
}

/// Jacobian of [`mean_field_reduced`] at `theta` and its stability.
pub fn jacobian(theta: &[f64], w: &MassVector, pi: &DesiredDist) -> Result<StabilityReport> {
    check_lengths(theta, w, pi)?;
    let idx = w.nonempty();
    if idx.len() < 2 {
        return Err(Error::input(
            "the reduced system needs at least two non-empty regions",
        ));
    }
    let p = occupation(theta, w);
    if idx.iter().any(|&i| p[i] <= 0.0) {
        return Err(Error::Degenerate(
            "a non-empty region has vanishing weight S_i / S".into(),
        ));
    }
    let n = idx.len() - 1;
    let q: Vec<f64> = idx[..n].iter().map(|&i| p[i]).collect();
    let f0 = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -q[i] * (1.0 - q[i])
        } else {
            q[i] * q[j]
        }
    });
    let lift = DMatrix::from_element(n, n, 1.0) + DMatrix::identity(n, n);
    let f = lift * f0;
    let eigen_real_parts: Vec<f64> = f.complex_eigenvalues().iter().map(|z| z.re).collect();
    let lambda_f = eigen_real_parts
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport {
        jacobian: f,
        hurwitz: eigen_real_parts.iter().all(|&r| r < 0.0),
        eigen_real_parts,
        lambda_f,
    })
}

/// The limit point `theta*_i = C + log w_i - log(pi_i + nu)` with `C` chosen
/// so the reference (last non-empty) coordinate is zero. Regions with zero
/// mass are empty and receive the sentinel `-bound` in place of `-inf`;
/// `nu` is the empty-region shift they induce.
pub fn fixed_point(w: &MassVector, pi: &DesiredDist, bound: f64) -> Result<Vec<f64>> {
    if pi.len() != w.w.len() {
        return Err(Error::Dimension {
            expected: w.w.len(),
            actual: pi.len(),
        });
    }
    let idx = w.nonempty();
    let m = w.w.len();
    let empty_mass: f64 = (0..m)
        .filter(|i| w.w[*i] == 0.0)
        .map(|i| pi.as_slice()[i])
        .sum();
    let nu = empty_mass / idx.len() as f64;
    let raw = |i: usize| w.w[i].ln() - (pi.as_slice()[i] + nu).ln();
    let r = *idx.last().expect("MassVector has a non-empty region");
    let c = raw(r);
    Ok((0..m)
        .map(|i| if w.w[i] > 0.0 { raw(i) - c } else { -bound })
        .collect())
}

/// [`fixed_point`] with the default bound.
pub fn fixed_point_default(w: &MassVector, pi: &DesiredDist) -> Result<Vec<f64>> {
    fixed_point(w, pi, DEFAULT_THETA_BOUND)
}
