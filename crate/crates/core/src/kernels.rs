//! Metropolis-Hastings kernels that leave the working density
//! `f_theta(x) ∝ psi(x) exp(-theta_{J(x)})` invariant, where `J(x)` is the
//! energy region of `x`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::density::EnergyFunction;
use crate::error::{Error, Result};
use crate::partition::EnergyPartition;
use crate::state::{ChainState, PopulationState};

/// Gaussian random-walk proposal `y = x + N(0, c I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwProposal {
    variance: f64,
    sd: f64,
}

impl RwProposal {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::input(format!(
                "proposal variance must be positive, got {variance}"
            )));
        }
        Ok(Self {
            variance,
            sd: variance.sqrt(),
        })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Probability of attempting a crossover move on chains 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverConfig {
    rate: f64,
}

impl CrossoverConfig {
    /// `rate` must lie in `[0, 1)`; at 1 the two chains would lose their
    /// local random-walk moves.
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::config(format!(
                "crossover rate must be in [0, 1), got {rate}"
            )));
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub region: usize,
}

/// Log of the MH ratio for moving from `(u_x, j_x)` to `(u_y, j_y)` under
/// `f_theta` with a symmetric proposal.
#[inline]
pub fn log_mh_ratio(theta: &[f64], u_x: f64, j_x: usize, u_y: f64, j_y: usize) -> f64 {
    (u_x - u_y) + (theta[j_x] - theta[j_y])
}

/// `min(1, exp(log_ratio))`.
pub fn acceptance_probability(log_ratio: f64) -> f64 {
    if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

/// `log f_theta(x)` up to the normalizing constant.
#[inline]
fn log_working_density(theta: &[f64], energy: f64, region: usize) -> f64 {
    -energy - theta[region]
}

/// Log MH ratio of a joint two-chain move `(x1, x2) -> (y1, y2)`, each
/// state given as `(energy, region)`, for a proposal with
/// `q(y, x) / q(x, y) = exp(log_q_ratio)`.
pub fn crossover_log_ratio(
    theta: &[f64],
    x: [(f64, usize); 2],
    y: [(f64, usize); 2],
    log_q_ratio: f64,
) -> f64 {
    let lf = |s: (f64, usize)| log_working_density(theta, s.0, s.1);
    (lf(y[0]) + lf(y[1])) - (lf(x[0]) + lf(x[1])) + log_q_ratio
}

/// Single-site random-walk MH kernel bound to a target and a partition.
pub struct MhKernel<'a, T: ?Sized> {
    target: &'a T,
    partition: &'a EnergyPartition,
    proposal: RwProposal,
}

impl<'a, T: EnergyFunction + ?Sized> MhKernel<'a, T> {
    pub fn new(target: &'a T, partition: &'a EnergyPartition, proposal: RwProposal) -> Self {
        Self {
            target,
            partition,
            proposal,
        }
    }

    pub fn partition(&self) -> &EnergyPartition {
        self.partition
    }

    /// One MH step of `chain` under `f_theta`. `scratch` is reused for the
    /// proposal. A proposal with non-finite energy is rejected. On rejection
    /// the chain is left bit-for-bit unchanged.
    pub fn step<R: Rng + ?Sized>(
        &self,
        chain: &mut ChainState,
        theta: &[f64],
        rng: &mut R,
        scratch: &mut Vec<f64>,
    ) -> StepOutcome {
        scratch.clear();
        for &xi in &chain.x {
            let z: f64 = StandardNormal.sample(rng);
            scratch.push(xi + self.proposal.sd * z);
        }
        let u: f64 = rng.random();
        let e_y = self.target.energy_unchecked(scratch);
        if !e_y.is_finite() {
            return StepOutcome {
                accepted: false,
                region: chain.region,
            };
        }
        let j_y = self.partition.classify_unchecked(e_y);
        let log_r = log_mh_ratio(theta, chain.energy, chain.region, e_y, j_y);
        if log_r >= 0.0 || u.ln() < log_r {
            std::mem::swap(&mut chain.x, scratch);
            chain.energy = e_y;
            chain.region = j_y;
            StepOutcome {
                accepted: true,
                region: j_y,
            }
        } else {
            StepOutcome {
                accepted: false,
                region: chain.region,
            }
        }
    }

    /// Applies [`MhKernel::step`] to every chain with its own stream.
    /// Returns the number of accepted moves.
    pub fn product_step(
        &self,
        pop: &mut PopulationState,
        theta: &[f64],
        scratch: &mut Vec<f64>,
    ) -> usize {
        let mut accepted = 0;
        for (chain, rng) in pop.chains.iter_mut().zip(pop.rngs.iter_mut()) {
            accepted += self.step(chain, theta, rng, scratch).accepted as usize;
        }
        accepted
    }

    /// Mixture kernel: with probability `1 - rate` the product kernel; with
    /// probability `rate` a joint swap proposal on chains 1 and 2, accepted
    /// with the two-chain MH ratio, while chains 3.. take ordinary MH steps.
    /// The crossover coin is drawn from `pop_rng`.
    pub fn crossover_step<R: Rng + ?Sized>(
        &self,
        config: CrossoverConfig,
        pop: &mut PopulationState,
        theta: &[f64],
        pop_rng: &mut R,
        scratch: &mut Vec<f64>,
    ) -> Result<usize> {
        if pop.kappa() < 2 {
            if config.rate > 0.0 {
                return Err(Error::config("crossover needs at least two chains"));
            }
            return Ok(self.product_step(pop, theta, scratch));
        }
        let coin: f64 = pop_rng.random();
        if coin >= config.rate {
            return Ok(self.product_step(pop, theta, scratch));
        }

        let mut accepted = 0;
        let (a, b) = (&pop.chains[0], &pop.chains[1]);
        // Swap proposal: symmetric, so log q-ratio is zero.
        let x = [(a.energy, a.region), (b.energy, b.region)];
        let y = [x[1], x[0]];
        let log_r = crossover_log_ratio(theta, x, y, 0.0);
        let u: f64 = pop_rng.random();
        if log_r >= 0.0 || u.ln() < log_r {
            pop.chains.swap(0, 1);
            accepted += 2;
        }
        for (chain, rng) in pop.chains.iter_mut().zip(pop.rngs.iter_mut()).skip(2) {
            accepted += self.step(chain, theta, rng, scratch).accepted as usize;
        }
        Ok(accepted)
    }
}
