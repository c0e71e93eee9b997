//! Mutable sampler state: the weight vector and the chain population.

use rand::Rng;

use crate::density::EnergyFunction;
use crate::error::{Error, Result};
use crate::partition::EnergyPartition;
use crate::rng::{chain_rng, ChainRng};

/// Default box `[-B, B]^m` for the weights. Large enough never to bind.
pub const DEFAULT_THETA_BOUND: f64 = 1e300;

/// Desired sampling frequencies `pi` of the subregions.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredDist {
    pi: Vec<f64>,
}

impl DesiredDist {
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if pi.len() < 2 {
            return Err(Error::input(
                "desired distribution needs at least two regions",
            ));
        }
        if pi.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::input("desired probabilities must all be positive"));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!(
                "desired probabilities must sum to 1 (got {total:.15})"
            )));
        }
        Ok(Self { pi })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(vec![1.0 / m as f64; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }
}

/// The working estimate `theta_t` of `log(w_i / pi_i)` (up to a constant).
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaState {
    theta: Vec<f64>,
    t: u64,
    bound: f64,
    projections: u64,
}

impl ThetaState {
    /// `theta_0 = 0` with the default bound.
    pub fn zeros(m: usize) -> Self {
        Self {
            theta: vec![0.0; m],
            t: 0,
            bound: DEFAULT_THETA_BOUND,
            projections: 0,
        }
    }

    pub fn new(theta: Vec<f64>, bound: f64) -> Result<Self> {
        if bound.is_nan() || bound <= 0.0 {
            return Err(Error::input(format!(
                "theta bound must be positive, got {bound}"
            )));
        }
        if theta.iter().any(|v| v.is_nan() || v.abs() > bound) {
            return Err(Error::input("initial theta must lie inside [-B, B]^m"));
        }
        Ok(Self {
            theta,
            t: 0,
            bound,
            projections: 0,
        })
    }

    pub fn with_bound(mut self, bound: f64) -> Result<Self> {
        let theta = std::mem::take(&mut self.theta);
        let t = self.t;
        self = Self::new(theta, bound)?;
        self.t = t;
        Ok(self)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Number of updates applied so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// How many coordinate clamps the projection onto `[-B, B]^m` performed.
    pub fn projections(&self) -> u64 {
        self.projections
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Adds `step` and projects onto the box; advances `t` by one.
    pub(crate) fn apply(&mut self, step: impl Iterator<Item = f64>) {
        let b = self.bound;
        for (th, s) in self.theta.iter_mut().zip(step) {
            let v = *th + s;
            *th = if v > b {
                self.projections += 1;
                b
            } else if v < -b {
                self.projections += 1;
                -b
            } else {
                v
            };
        }
        self.t += 1;
    }
}

/// One Markov chain: its position plus cached energy and region.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub x: Vec<f64>,
    pub energy: f64,
    pub region: usize,
}

impl ChainState {
    pub fn new<T: EnergyFunction + ?Sized>(
        target: &T,
        partition: &EnergyPartition,
        x: Vec<f64>,
    ) -> Result<Self> {
        let energy = target.energy(&x)?;
        let region = partition.classify(energy)?;
        Ok(Self { x, energy, region })
    }
}

/// Axis-aligned box `[lo, hi]^d` the initial population is drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitBox {
    pub lo: f64,
    pub hi: f64,
}

impl InitBox {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::input(format!("invalid initial box [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }
}

impl Default for InitBox {
    fn default() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }
}

/// `kappa` chains, each with its own random stream.
#[derive(Debug, Clone)]
pub struct PopulationState {
    pub(crate) chains: Vec<ChainState>,
    pub(crate) rngs: Vec<ChainRng>,
}

impl PopulationState {
    /// Draws each chain's start uniformly from `init` using that chain's own
    /// stream of `seed` (see [`crate::rng`]).
    pub fn initialize<T: EnergyFunction + ?Sized>(
        target: &T,
        partition: &EnergyPartition,
        kappa: usize,
        init: InitBox,
        seed: u64,
    ) -> Result<Self> {
        if kappa == 0 {
            return Err(Error::input("population size must be at least 1"));
        }
        let mut chains = Vec::with_capacity(kappa);
        let mut rngs = Vec::with_capacity(kappa);
        for i in 0..kappa {
            let mut rng = chain_rng(seed, i);
            chains.push(initial_chain(target, partition, init, &mut rng)?);
            rngs.push(rng);
        }
        Ok(Self { chains, rngs })
    }

    pub fn from_parts(chains: Vec<ChainState>, rngs: Vec<ChainRng>) -> Result<Self> {
        if chains.is_empty() || chains.len() != rngs.len() {
            return Err(Error::input("population needs one rng stream per chain"));
        }
        if chains.iter().any(|c| !c.energy.is_finite()) {
            return Err(Error::input("chain positions must have finite energy"));
        }
        Ok(Self { chains, rngs })
    }

    pub fn kappa(&self) -> usize {
        self.chains.len()
    }

    pub fn chains(&self) -> &[ChainState] {
        &self.chains
    }

    pub fn regions(&self) -> impl Iterator<Item = usize> + '_ {
        self.chains.iter().map(|c| c.region)
    }
}

pub(crate) fn initial_chain<T: EnergyFunction + ?Sized, R: Rng>(
    target: &T,
    partition: &EnergyPartition,
    init: InitBox,
    rng: &mut R,
) -> Result<ChainState> {
    const ATTEMPTS: usize = 1000;
    for _ in 0..ATTEMPTS {
        let x: Vec<f64> = (0..target.dim())
            .map(|_| init.lo + (init.hi - init.lo) * rng.random::<f64>())
            .collect();
        let energy = target.energy_unchecked(&x);
        if energy.is_finite() {
            let region = partition.classify_unchecked(energy);
            return Ok(ChainState { x, energy, region });
        }
    }
    Err(Error::input(format!(
        "no finite-energy start found in [{}, {}]^d after {ATTEMPTS} draws",
        init.lo, init.hi
    )))
}
