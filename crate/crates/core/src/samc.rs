//! Stochastic-approximation weight updates and the SAMC / Pop-SAMC drivers.
//!
//! One iteration samples (one MH step per chain under `f_theta_t`) and then
//! moves `theta` along `H = z - pi`, where `z` is the region indicator,
//! averaged over the population for Pop-SAMC:
//!
//! ```text
//! theta_{t+1,i} = theta_{t,i} + gamma_{t+1} (n_i / kappa - pi_i - nu)
//! ```
//!
//! `n_i` counts chains in region `i` and `nu` is the shift for regions known
//! to be empty (zero without them).

use crate::density::EnergyFunction;
use crate::error::{Error, Result};
use crate::gain::GainSchedule;
use crate::kernels::{CrossoverConfig, MhKernel, RwProposal};
use crate::partition::EnergyPartition;
use crate::rng::{chain_rng, population_rng};
use crate::state::{initial_chain, DesiredDist, InitBox, PopulationState, ThetaState};

/// Direction `n_i / kappa - pi_i - nu` of one update.
pub fn update_direction(counts: &[u32], kappa: usize, pi: &DesiredDist, nu: f64) -> Vec<f64> {
    let k = kappa as f64;
    counts
        .iter()
        .zip(pi.as_slice())
        .map(|(&n, &p)| n as f64 / k - p - nu)
        .collect()
}

/// SAMC update after the chain landed in `region`.
pub fn single_update(
    theta: &mut ThetaState,
    region: usize,
    pi: &DesiredDist,
    schedule: &GainSchedule,
) {
    let gamma = schedule.gain(theta.t() + 1);
    theta.apply(
        pi.as_slice()
            .iter()
            .enumerate()
            .map(|(i, &p)| gamma * ((i == region) as u8 as f64 - p)),
    );
}

/// Pop-SAMC update from the regions of all `kappa` chains.
pub fn population_update(
    theta: &mut ThetaState,
    regions: &[usize],
    pi: &DesiredDist,
    schedule: &GainSchedule,
) {
    let counts = region_counts(regions, pi.len());
    apply_counts(theta, &counts, regions.len(), pi, schedule, 0.0);
}

/// Population update with the empty-region shift `nu = sum_{j in empty}
/// pi_j / (m - m0)` subtracted from every coordinate.
pub fn adjusted_update(
    theta: &mut ThetaState,
    regions: &[usize],
    pi: &DesiredDist,
    schedule: &GainSchedule,
    empty: &[usize],
) -> Result<()> {
    let nu = empty_shift(pi, empty)?;
    if let Some(r) = regions.iter().find(|r| empty.contains(r)) {
        return Err(Error::input(format!(
            "region {} was visited but is declared empty",
            r + 1
        )));
    }
    let counts = region_counts(regions, pi.len());
    apply_counts(theta, &counts, regions.len(), pi, schedule, nu);
    Ok(())
}

/// `nu` for a set of (zero-based) empty regions.
pub fn empty_shift(pi: &DesiredDist, empty: &[usize]) -> Result<f64> {
    let m = pi.len();
    let mut seen = vec![false; m];
    for &j in empty {
        if j >= m {
            return Err(Error::config(format!(
                "empty region {} out of range 1..={m}",
                j + 1
            )));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::config(format!(
                "empty region {} listed twice",
                j + 1
            )));
        }
    }
    let m0 = empty.len();
    if m0 >= m {
        return Err(Error::config("at least one region must be non-empty"));
    }
    if m0 == 0 {
        return Ok(0.0);
    }
    let mass: f64 = empty.iter().map(|&j| pi.as_slice()[j]).sum();
    Ok(mass / (m - m0) as f64)
}

fn region_counts(regions: &[usize], m: usize) -> Vec<u32> {
    let mut counts = vec![0u32; m];
    for &r in regions {
        counts[r] += 1;
    }
    counts
}

#[inline]
fn apply_counts(
    theta: &mut ThetaState,
    counts: &[u32],
    kappa: usize,
    pi: &DesiredDist,
    schedule: &GainSchedule,
    nu: f64,
) {
    let gamma = schedule.gain(theta.t() + 1);
    let k = kappa as f64;
    theta.apply(
        counts
            .iter()
            .zip(pi.as_slice())
            .map(|(&n, &p)| gamma * (n as f64 / k - p - nu)),
    );
}

/// Estimated region probabilities `pi_i e^{theta_i} / sum_j pi_j e^{theta_j}`.
pub fn estimate_probs(theta: &ThetaState, pi: &DesiredDist) -> Result<Vec<f64>> {
    estimate_inner(theta, pi.as_slice().iter().map(|&p| p.ln()).collect())
}

/// Like [`estimate_probs`] for runs that used [`adjusted_update`]: non-empty
/// regions are weighted by `pi_i + nu` and empty ones get probability zero.
pub fn estimate_probs_adjusted(
    theta: &ThetaState,
    pi: &DesiredDist,
    empty: &[usize],
) -> Result<Vec<f64>> {
    let nu = empty_shift(pi, empty)?;
    let log_w = pi
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if empty.contains(&i) {
                f64::NEG_INFINITY
            } else {
                (p + nu).ln()
            }
        })
        .collect();
    estimate_inner(theta, log_w)
}

fn estimate_inner(theta: &ThetaState, log_w: Vec<f64>) -> Result<Vec<f64>> {
    let th = theta.theta();
    if th.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("theta must be finite"));
    }
    if th.iter().all(|&v| v <= -theta.bound()) {
        return Err(Error::Degenerate(
            "every theta coordinate sits at the lower bound".into(),
        ));
    }
    let logs: Vec<f64> = th.iter().zip(&log_w).map(|(t, lw)| t + lw).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Degenerate("no region carries weight".into()));
    }
    let mut p: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    Ok(p)
}

/// Where to record checkpoints within a run of `n` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckpointGrid {
    /// `count` equally spaced iterations ending at `n`.
    Linear { count: usize },
    /// `count` log-spaced iterations from `first` to `n`.
    Geometric { count: usize, first: u64 },
}

impl CheckpointGrid {
    /// Sorted, de-duplicated iteration numbers in `1..=n`. The initial state
    /// (t = 0) is always recorded in addition.
    pub fn iterations(&self, n: u64) -> Vec<u64> {
        if n == 0 {
            return Vec::new();
        }
        let mut out: Vec<u64> = match *self {
            CheckpointGrid::Linear { count } => {
                let c = count.max(1) as u64;
                (1..=c)
                    .map(|k| (n as u128 * k as u128 / c as u128) as u64)
                    .collect()
            }
            CheckpointGrid::Geometric { count, first } => {
                let c = count.max(1);
                let first = first.clamp(1, n) as f64;
                if c == 1 {
                    vec![n]
                } else {
                    let ratio = (n as f64 / first).ln() / (c - 1) as f64;
                    (0..c)
                        .map(|k| (first * (ratio * k as f64).exp()).round() as u64)
                        .collect()
                }
            }
        };
        out.retain(|&t| t >= 1 && t <= n);
        if out.last() != Some(&n) {
            out.push(n);
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Everything a run needs apart from the target and the seed.
#[derive(Debug, Clone)]
pub struct SamcConfig {
    pub partition: EnergyPartition,
    pub pi: DesiredDist,
    pub schedule: GainSchedule,
    pub proposal: RwProposal,
    pub iterations: u64,
    pub checkpoints: CheckpointGrid,
    /// Zero-based regions known a priori to have zero mass.
    pub empty_regions: Vec<usize>,
    pub init_box: InitBox,
    pub theta_bound: f64,
}

impl SamcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pi.len() != self.partition.len() {
            return Err(Error::config(format!(
                "desired distribution has {} entries but the partition has {} regions",
                self.pi.len(),
                self.partition.len()
            )));
        }
        empty_shift(&self.pi, &self.empty_regions)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: u64,
    pub gamma: f64,
    pub theta: Vec<f64>,
    pub phat: Vec<f64>,
    /// Cumulative visits per region, summed over chains.
    pub visits: Vec<u64>,
}

impl Checkpoint {
    /// Regions never visited so far; their estimates rest on the drift of
    /// `theta` alone.
    pub fn low_confidence(&self) -> Vec<bool> {
        self.visits.iter().map(|&v| v == 0).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kappa: usize,
    pub checkpoints: Vec<Checkpoint>,
    pub accepted: u64,
    pub proposals: u64,
    /// Coordinate clamps performed by the projection onto `[-B, B]^m`.
    pub projections: u64,
}

impl Trajectory {
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints
            .last()
            .expect("trajectory always has the initial checkpoint")
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

struct Recorder<'c> {
    cfg: &'c SamcConfig,
    grid: Vec<u64>,
    next: usize,
    visits: Vec<u64>,
    out: Vec<Checkpoint>,
}

impl<'c> Recorder<'c> {
    fn new(cfg: &'c SamcConfig) -> Self {
        Self {
            grid: cfg.checkpoints.iterations(cfg.iterations),
            cfg,
            next: 0,
            visits: vec![0; cfg.partition.len()],
            out: Vec::new(),
        }
    }

    fn record(&mut self, theta: &ThetaState) -> Result<()> {
        let phat = if self.cfg.empty_regions.is_empty() {
            estimate_probs(theta, &self.cfg.pi)?
        } else {
            estimate_probs_adjusted(theta, &self.cfg.pi, &self.cfg.empty_regions)?
        };
        self.out.push(Checkpoint {
            t: theta.t(),
            gamma: self.cfg.schedule.gain(theta.t().max(1)),
            theta: theta.theta().to_vec(),
            phat,
            visits: self.visits.clone(),
        });
        Ok(())
    }

    #[inline]
    fn maybe_record(&mut self, theta: &ThetaState) -> Result<()> {
        if self.grid.get(self.next) == Some(&theta.t()) {
            self.next += 1;
            self.record(theta)?;
        }
        Ok(())
    }
}

fn initial_theta(cfg: &SamcConfig) -> Result<ThetaState> {
    ThetaState::new(vec![0.0; cfg.partition.len()], cfg.theta_bound)
}

/// Single-chain SAMC. The chain draws from stream 0 of `seed`.
pub fn run_samc<T: EnergyFunction + ?Sized>(
    target: &T,
    cfg: &SamcConfig,
    seed: u64,
) -> Result<Trajectory> {
    cfg.validate()?;
    let kernel = MhKernel::new(target, &cfg.partition, cfg.proposal);
    let mut rng = chain_rng(seed, 0);
    let mut chain = initial_chain(target, &cfg.partition, cfg.init_box, &mut rng)?;
    let mut theta = initial_theta(cfg)?;
    let nu = empty_shift(&cfg.pi, &cfg.empty_regions)?;
    let mut rec = Recorder::new(cfg);
    rec.record(&theta)?;

    let mut scratch = Vec::with_capacity(target.dim());
    let mut counts = vec![0u32; cfg.partition.len()];
    let mut accepted = 0u64;
    for _ in 0..cfg.iterations {
        let out = kernel.step(&mut chain, theta.theta(), &mut rng, &mut scratch);
        accepted += out.accepted as u64;
        rec.visits[out.region] += 1;
        if nu == 0.0 {
            single_update(&mut theta, out.region, &cfg.pi, &cfg.schedule);
        } else {
            counts[out.region] = 1;
            apply_counts(&mut theta, &counts, 1, &cfg.pi, &cfg.schedule, nu);
            counts[out.region] = 0;
        }
        rec.maybe_record(&theta)?;
    }
    Ok(Trajectory {
        kappa: 1,
        checkpoints: rec.out,
        accepted,
        proposals: cfg.iterations,
        projections: theta.projections(),
    })
}

/// Pop-SAMC with `kappa` chains; chain `i` draws from stream `i` of `seed`
/// and crossover decisions from the population stream.
pub fn run_pop_samc<T: EnergyFunction + ?Sized>(
    target: &T,
    cfg: &SamcConfig,
    kappa: usize,
    crossover: Option<CrossoverConfig>,
    seed: u64,
) -> Result<Trajectory> {
    cfg.validate()?;
    if let Some(co) = crossover {
        if kappa < 2 && co.rate() > 0.0 {
            return Err(Error::config(
                "crossover needs a population of at least two chains",
            ));
        }
    }
    let kernel = MhKernel::new(target, &cfg.partition, cfg.proposal);
    let mut pop = PopulationState::initialize(target, &cfg.partition, kappa, cfg.init_box, seed)?;
    let mut pop_rng = population_rng(seed);
    let mut theta = initial_theta(cfg)?;
    let nu = empty_shift(&cfg.pi, &cfg.empty_regions)?;
    let mut rec = Recorder::new(cfg);
    rec.record(&theta)?;

    let mut scratch = Vec::with_capacity(target.dim());
    let mut counts = vec![0u32; cfg.partition.len()];
    let mut accepted = 0u64;
    for _ in 0..cfg.iterations {
        accepted += match crossover {
            Some(co) => {
                kernel.crossover_step(co, &mut pop, theta.theta(), &mut pop_rng, &mut scratch)?
            }
            None => kernel.product_step(&mut pop, theta.theta(), &mut scratch),
        } as u64;
        counts.iter_mut().for_each(|c| *c = 0);
        for r in pop.regions() {
            counts[r] += 1;
            rec.visits[r] += 1;
        }
        apply_counts(&mut theta, &counts, kappa, &cfg.pi, &cfg.schedule, nu);
        rec.maybe_record(&theta)?;
    }
    Ok(Trajectory {
        kappa,
        checkpoints: rec.out,
        accepted,
        proposals: cfg.iterations * kappa as u64,
        projections: theta.projections(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::MixtureDensity;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_gain() -> GainSchedule {
        // gamma(t) = 1 for every t below 1e12.
        GainSchedule::new(1e12, 1.0).unwrap()
    }

    #[test]
    fn single_update_example() {
        let pi = DesiredDist::uniform(20).unwrap();
        let mut th = ThetaState::zeros(20);
        single_update(&mut th, 2, &pi, &unit_gain());
        for (i, &v) in th.theta().iter().enumerate() {
            let expected = if i == 2 { 0.95 } else { -0.05 };
            assert_relative_eq!(v, expected, max_relative = 1e-15);
        }
        assert_eq!(th.t(), 1);
        assert!(th.theta().iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn population_update_examples() {
        let pi = DesiredDist::uniform(20).unwrap();
        let g = unit_gain();

        let mut a = ThetaState::zeros(20);
        population_update(&mut a, &[4; 10], &pi, &g);
        let mut b = ThetaState::zeros(20);
        single_update(&mut b, 4, &pi, &g);
        assert_eq!(a, b);

        let mut th = ThetaState::zeros(20);
        let regions = [1, 1, 1, 1, 1, 2, 2, 2, 2, 2];
        population_update(&mut th, &regions, &pi, &g);
        for (i, &v) in th.theta().iter().enumerate() {
            let expected = match i {
                1 | 2 => 0.45,
                _ => -0.05,
            };
            assert_relative_eq!(v, expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn kappa_one_population_update_is_single_update() {
        let pi = DesiredDist::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let g = GainSchedule::new(10.0, 0.7).unwrap();
        let mut a = ThetaState::zeros(4);
        let mut b = ThetaState::zeros(4);
        for t in 0..200 {
            let r = (t * 7) % 4;
            single_update(&mut a, r, &pi, &g);
            population_update(&mut b, &[r], &pi, &g);
        }
        assert_eq!(a, b);
    }

    #[test]
    fn zero_gain_leaves_theta() {
        // gamma(t) = t0 / t^beta underflows to zero for tiny t0.
        let g = GainSchedule::new(1e-320, 1.0).unwrap();
        let pi = DesiredDist::uniform(3).unwrap();
        let mut th = ThetaState::new(vec![0.5, -0.25, 0.0], 1e300).unwrap();
        for _ in 0..3 {
            single_update(&mut th, 1, &pi, &g);
        }
        let before = th.theta().to_vec();
        single_update(&mut th, 0, &pi, &g);
        for (a, b) in th.theta().iter().zip(&before) {
            assert!((a - b).abs() < 1e-300);
        }
    }

    #[test]
    fn empty_shift_examples() {
        let pi = DesiredDist::uniform(4).unwrap();
        assert_eq!(empty_shift(&pi, &[]).unwrap(), 0.0);
        assert_relative_eq!(
            empty_shift(&pi, &[3]).unwrap(),
            0.25 / 3.0,
            max_relative = 1e-15
        );
        assert!(empty_shift(&pi, &[0, 1, 2, 3]).is_err());
        assert!(empty_shift(&pi, &[4]).is_err());
    }

    #[test]
    fn adjusted_update_without_empties_is_population_update() {
        let pi = DesiredDist::uniform(4).unwrap();
        let g = GainSchedule::new(5.0, 0.8).unwrap();
        let mut a = ThetaState::zeros(4);
        let mut b = ThetaState::zeros(4);
        for t in 0..50 {
            let regions = [t % 4, (t + 1) % 4, 2];
            adjusted_update(&mut a, &regions, &pi, &g, &[]).unwrap();
            population_update(&mut b, &regions, &pi, &g);
        }
        assert_eq!(a, b);
    }

    #[test]
    fn adjusted_update_rejects_visits_to_empty_regions() {
        let pi = DesiredDist::uniform(4).unwrap();
        let mut th = ThetaState::zeros(4);
        assert!(adjusted_update(&mut th, &[3], &pi, &unit_gain(), &[3]).is_err());
    }

    #[test]
    fn estimate_examples() {
        let pi = DesiredDist::uniform(3).unwrap();
        let th = ThetaState::new(vec![4.2, 4.2, 4.2], 1e300).unwrap();
        for p in estimate_probs(&th, &pi).unwrap() {
            assert_relative_eq!(p, 1.0 / 3.0, max_relative = 1e-15);
        }
        let pi = DesiredDist::uniform(2).unwrap();
        let th = ThetaState::new(vec![2f64.ln(), 0.0], 1e300).unwrap();
        let p = estimate_probs(&th, &pi).unwrap();
        assert_relative_eq!(p[0], 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(p[1], 1.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn estimate_recovers_masses_from_fixed_point() {
        // theta*_i = C + log w_i - log pi_i
        let w: [f64; 4] = [3.0, 0.5, 1.25, 0.01];
        let pi = DesiredDist::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let c = -17.3;
        let th: Vec<f64> = w
            .iter()
            .zip(pi.as_slice())
            .map(|(wi, p)| c + wi.ln() - p.ln())
            .collect();
        let p = estimate_probs(&ThetaState::new(th, 1e300).unwrap(), &pi).unwrap();
        let total: f64 = w.iter().sum();
        for (pi_hat, wi) in p.iter().zip(&w) {
            assert_relative_eq!(*pi_hat, wi / total, max_relative = 1e-13);
        }
    }

    #[test]
    fn estimate_degenerate() {
        let pi = DesiredDist::uniform(2).unwrap();
        let th = ThetaState::new(vec![-10.0, -10.0], 10.0).unwrap();
        assert!(matches!(
            estimate_probs(&th, &pi),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn adjusted_estimate_zeroes_empty_regions() {
        let pi = DesiredDist::new(vec![0.2, 0.3, 0.5]).unwrap();
        let nu: f64 = 0.5 / 2.0;
        // Fixed point of the adjusted recursion with w = (1, 2, 0).
        let th = ThetaState::new(
            vec![
                1f64.ln() - (0.2 + nu).ln(),
                2f64.ln() - (0.3 + nu).ln(),
                -50.0,
            ],
            1e300,
        )
        .unwrap();
        let p = estimate_probs_adjusted(&th, &pi, &[2]).unwrap();
        assert_relative_eq!(p[0], 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(p[1], 2.0 / 3.0, max_relative = 1e-14);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn checkpoint_grids() {
        assert_eq!(
            CheckpointGrid::Linear { count: 4 }.iterations(100),
            vec![25, 50, 75, 100]
        );
        assert_eq!(
            CheckpointGrid::Linear { count: 4 }.iterations(0),
            Vec::<u64>::new()
        );
        assert_eq!(
            CheckpointGrid::Linear { count: 10 }.iterations(3),
            vec![1, 2, 3]
        );
        let g = CheckpointGrid::Geometric {
            count: 5,
            first: 10,
        }
        .iterations(100_000);
        assert_eq!(g, vec![10, 100, 1000, 10_000, 100_000]);
    }

    fn small_problem() -> (MixtureDensity, SamcConfig) {
        let d =
            MixtureDensity::equal_weights(&[vec![0.0, 0.0], vec![4.0, 4.0], vec![0.0, 4.0]], 0.05)
                .unwrap();
        let cfg = SamcConfig {
            partition: EnergyPartition::uniform(0.0, 1.0, 6.0).unwrap(),
            pi: DesiredDist::uniform(8).unwrap(),
            schedule: GainSchedule::new(20.0, 1.0).unwrap(),
            proposal: RwProposal::new(2.0).unwrap(),
            iterations: 3000,
            checkpoints: CheckpointGrid::Linear { count: 10 },
            empty_regions: vec![],
            init_box: InitBox::default(),
            theta_bound: 1e300,
        };
        (d, cfg)
    }

    #[test]
    fn zero_iterations_gives_initial_checkpoint_only() {
        let (d, mut cfg) = small_problem();
        cfg.iterations = 0;
        let tr = run_samc(&d, &cfg, 1).unwrap();
        assert_eq!(tr.checkpoints.len(), 1);
        assert_eq!(tr.checkpoints[0].t, 0);
        assert!(tr.checkpoints[0].theta.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pop_samc_with_one_chain_is_samc_bitwise() {
        let (d, cfg) = small_problem();
        let a = run_samc(&d, &cfg, 77).unwrap();
        let b = run_pop_samc(&d, &cfg, 1, None, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn runs_are_deterministic_and_seed_dependent() {
        let (d, cfg) = small_problem();
        let a = run_pop_samc(&d, &cfg, 5, None, 3).unwrap();
        let b = run_pop_samc(&d, &cfg, 5, None, 3).unwrap();
        let c = run_pop_samc(&d, &cfg, 5, None, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.last().theta, c.last().theta);
        assert_eq!(a.checkpoints.len(), 11);
        assert_eq!(a.last().visits.iter().sum::<u64>(), 5 * 3000);
        assert_eq!(a.projections, 0);
    }

    #[test]
    fn projection_counter_reports_binding_bound() {
        let (d, mut cfg) = small_problem();
        cfg.theta_bound = 0.5;
        let tr = run_samc(&d, &cfg, 9).unwrap();
        assert!(tr.projections > 0);
        assert!(tr.last().theta.iter().all(|v| v.abs() <= 0.5));
    }

    proptest! {
        #[test]
        fn update_directions_sum_to_zero(
            regions in proptest::collection::vec(0usize..6, 1..40),
            raw in proptest::collection::vec(0.05f64..1.0, 6),
        ) {
            let total: f64 = raw.iter().sum();
            let mut pi: Vec<f64> = raw.iter().map(|r| r / total).collect();
            let rest: f64 = pi[..5].iter().sum();
            pi[5] = 1.0 - rest;
            let pi = DesiredDist::new(pi).unwrap();
            let counts = region_counts(&regions, 6);
            let dir = update_direction(&counts, regions.len(), &pi, 0.0);
            prop_assert!(dir.iter().sum::<f64>().abs() < 1e-12);
            prop_assert!(dir.iter().all(|v| *v > -1.0 && *v < 1.0));
        }

        #[test]
        fn self_adjusting_direction(region in 0usize..20, t0 in 1.0f64..1000.0, steps in 0usize..50) {
            let pi = DesiredDist::uniform(20).unwrap();
            let g = GainSchedule::new(t0, 0.8).unwrap();
            let mut th = ThetaState::zeros(20);
            for s in 0..steps {
                single_update(&mut th, s % 20, &pi, &g);
            }
            let before = th.theta().to_vec();
            single_update(&mut th, region, &pi, &g);
            for (i, (a, b)) in th.theta().iter().zip(&before).enumerate() {
                if i == region { prop_assert!(a > b); } else { prop_assert!(a < b); }
            }
        }

        #[test]
        fn estimate_is_a_shift_invariant_distribution(
            theta in proptest::collection::vec(-50.0f64..50.0, 5),
            shift in -100.0f64..100.0,
        ) {
            let pi = DesiredDist::uniform(5).unwrap();
            let a = estimate_probs(&ThetaState::new(theta.clone(), 1e300).unwrap(), &pi).unwrap();
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(a.iter().all(|p| *p >= 0.0));
            let shifted: Vec<f64> = theta.iter().map(|t| t + shift).collect();
            let b = estimate_probs(&ThetaState::new(shifted, 1e300).unwrap(), &pi).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12 * x.max(1e-300) + 1e-300);
            }
        }
    }
}
