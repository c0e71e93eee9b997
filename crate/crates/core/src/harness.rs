//! Replication harness: exact-sampling oracle, independent replications,
//! MSE curves, efficiency ratios and normality diagnostics.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::density::{EnergyFunction, MixtureDensity};
use crate::error::{Error, Result};
use crate::kernels::CrossoverConfig;
use crate::partition::EnergyPartition;
use crate::rng::{chain_rng, run_seed};
use crate::samc::{run_pop_samc, run_samc, CheckpointGrid, SamcConfig, Trajectory};
use crate::stats;

/// Samples per independent oracle stream. Fixed so the result does not
/// depend on the thread count.
const ORACLE_CHUNK: u64 = 1 << 20;

pub const MIN_ORACLE_SAMPLES: u64 = 10_000;
pub const BOOTSTRAP_RESAMPLES: usize = 10_000;
pub const SKEW_LIMIT: f64 = 0.5;
pub const EXCESS_KURTOSIS_LIMIT: f64 = 1.0;
pub const NORMALITY_PASS_FRACTION: f64 = 0.9;

/// Region probabilities of the target estimated from exact samples.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub p_true: Vec<f64>,
    pub n_samples: u64,
    /// Binomial standard errors `sqrt(p (1 - p) / n)`.
    pub mc_std_err: Vec<f64>,
}

/// Draws `n` i.i.d. samples from the mixture and tabulates their regions.
/// Chunk `c` of the sample uses stream `c` of `seed`.
pub fn oracle_probs(
    density: &MixtureDensity,
    partition: &EnergyPartition,
    n: u64,
    seed: u64,
) -> Result<OracleResult> {
    if n < MIN_ORACLE_SAMPLES {
        return Err(Error::input(format!(
            "oracle needs at least {MIN_ORACLE_SAMPLES} samples, got {n}"
        )));
    }
    let m = partition.len();
    let chunks = n.div_ceil(ORACLE_CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chain_rng(seed, c as usize);
            let size = ORACLE_CHUNK.min(n - c * ORACLE_CHUNK);
            let mut counts = vec![0u64; m];
            let mut x = vec![0.0; density.dim()];
            for _ in 0..size {
                density.sample_into(&mut rng, &mut x);
                let u = density.energy_unchecked(&x);
                let r = if u.is_finite() {
                    partition.classify_unchecked(u)
                } else {
                    m - 1
                };
                counts[r] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; m],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let nf = n as f64;
    let p_true: Vec<f64> = counts.iter().map(|&c| c as f64 / nf).collect();
    let mc_std_err = p_true.iter().map(|p| (p * (1.0 - p) / nf).sqrt()).collect();
    Ok(OracleResult {
        p_true,
        n_samples: n,
        mc_std_err,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Samc,
    PopSamc {
        kappa: usize,
        crossover: Option<CrossoverConfig>,
    },
}

impl Algorithm {
    pub fn kappa(&self) -> usize {
        match self {
            Algorithm::Samc => 1,
            Algorithm::PopSamc { kappa, .. } => *kappa,
        }
    }
}

/// One algorithm setting to replicate.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub label: String,
    pub algorithm: Algorithm,
    pub config: SamcConfig,
}

impl RunSpec {
    pub fn run<T: EnergyFunction + ?Sized>(&self, target: &T, seed: u64) -> Result<Trajectory> {
        match self.algorithm {
            Algorithm::Samc => run_samc(target, &self.config, seed),
            Algorithm::PopSamc { kappa, crossover } => {
                run_pop_samc(target, &self.config, kappa, crossover, seed)
            }
        }
    }

    /// Energy evaluations per run.
    pub fn budget(&self) -> u64 {
        self.config.iterations * self.algorithm.kappa() as u64
    }

    pub fn final_gain(&self) -> f64 {
        self.config.schedule.gain(self.config.iterations.max(1))
    }
}

/// Progress reporting to standard error in 5% steps.
pub struct Progress {
    label: String,
    total: u64,
    done: AtomicU64,
    last_step: Mutex<u64>,
    enabled: bool,
}

impl Progress {
    pub fn new(label: impl Into<String>, total: u64, enabled: bool) -> Self {
        Self {
            label: label.into(),
            total: total.max(1),
            done: AtomicU64::new(0),
            last_step: Mutex::new(0),
            enabled,
        }
    }

    pub fn advance(&self, iterations: u64) {
        let done = self.done.fetch_add(iterations, Ordering::Relaxed) + iterations;
        if !self.enabled {
            return;
        }
        let step = done * 20 / self.total;
        let mut last = self.last_step.lock().expect("progress lock");
        if step > *last {
            *last = step;
            eprintln!("[{}] {}% of iterations", self.label, (step * 5).min(100));
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReplicationSummary {
    pub label: String,
    pub kappa: usize,
    /// Zero-based regions entering the MSE.
    pub tracked: Vec<usize>,
    pub p_true: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    /// Final estimates, one row per run.
    pub estimates: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub checkpoint_t: Vec<u64>,
    /// `kappa * t` for every checkpoint.
    pub energy_evals: Vec<u64>,
    /// Mean over runs of the tracked squared error at each checkpoint.
    pub mse_curve: Vec<f64>,
    /// Tracked squared error of each run at the final checkpoint.
    pub final_sq_errors: Vec<f64>,
    pub final_gamma: f64,
}

impl ReplicationSummary {
    pub fn runs(&self) -> usize {
        self.trajectories.len()
    }

    pub fn final_mse(&self) -> f64 {
        *self.mse_curve.last().expect("at least one checkpoint")
    }

    pub fn final_thetas(&self) -> Vec<Vec<f64>> {
        self.trajectories
            .iter()
            .map(|t| t.last().theta.clone())
            .collect()
    }
}

fn sq_error(phat: &[f64], p_true: &[f64], tracked: &[usize]) -> f64 {
    tracked.iter().map(|&i| (phat[i] - p_true[i]).powi(2)).sum()
}

/// Runs `runs` replications with seeds split from `base_seed`.
pub fn replicate<T: EnergyFunction + ?Sized>(
    target: &T,
    spec: &RunSpec,
    runs: usize,
    base_seed: u64,
    p_true: &[f64],
    tracked: &[usize],
    progress: Option<&Progress>,
) -> Result<ReplicationSummary> {
    let seeds: Vec<u64> = (0..runs as u64).map(|r| run_seed(base_seed, r)).collect();
    replicate_with_seeds(target, spec, &seeds, p_true, tracked, progress)
}

/// Like [`replicate`] with explicit per-run seeds.
pub fn replicate_with_seeds<T: EnergyFunction + ?Sized>(
    target: &T,
    spec: &RunSpec,
    seeds: &[u64],
    p_true: &[f64],
    tracked: &[usize],
    progress: Option<&Progress>,
) -> Result<ReplicationSummary> {
    let runs = seeds.len();
    if runs < 2 {
        return Err(Error::InsufficientReplication {
            needed: 2,
            got: runs,
        });
    }
    let m = spec.config.partition.len();
    if p_true.len() != m {
        return Err(Error::Dimension {
            expected: m,
            actual: p_true.len(),
        });
    }
    if let Some(&bad) = tracked.iter().find(|&&i| i >= m) {
        return Err(Error::config(format!(
            "tracked region {} out of range",
            bad + 1
        )));
    }

    let trajectories = seeds
        .par_iter()
        .map(|&seed| {
            let tr = spec.run(target, seed);
            if let Some(p) = progress {
                p.advance(spec.config.iterations);
            }
            tr
        })
        .collect::<Result<Vec<_>>>()?;

    let estimates: Vec<Vec<f64>> = trajectories.iter().map(|t| t.last().phat.clone()).collect();
    let column = |i: usize| estimates.iter().map(|e| e[i]).collect::<Vec<_>>();
    let mean = (0..m).map(|i| stats::mean(&column(i))).collect();
    let std_err = (0..m).map(|i| stats::std_err(&column(i))).collect();

    let first = &trajectories[0];
    let checkpoint_t: Vec<u64> = first.checkpoints.iter().map(|c| c.t).collect();
    let kappa = spec.algorithm.kappa();
    let energy_evals = checkpoint_t.iter().map(|t| t * kappa as u64).collect();
    let mse_curve = (0..checkpoint_t.len())
        .map(|k| {
            trajectories
                .iter()
                .map(|tr| sq_error(&tr.checkpoints[k].phat, p_true, tracked))
                .sum::<f64>()
                / runs as f64
        })
        .collect();
    let final_sq_errors = trajectories
        .iter()
        .map(|tr| sq_error(&tr.last().phat, p_true, tracked))
        .collect();

    Ok(ReplicationSummary {
        label: spec.label.clone(),
        kappa,
        tracked: tracked.to_vec(),
        p_true: p_true.to_vec(),
        final_gamma: spec.final_gain(),
        trajectories,
        estimates,
        mean,
        std_err,
        checkpoint_t,
        energy_evals,
        mse_curve,
        final_sq_errors,
    })
}

/// Efficiency of setting `a` relative to setting `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub kappa: usize,
    pub beta: f64,
    /// `MSE_b / MSE_a` at the final checkpoints.
    pub rho_hat: f64,
    /// Asymptotic prediction `kappa_a gamma_b(N_b) / (kappa_b gamma_a(N_a))`.
    pub target: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Bootstrap probability that `a` is not more accurate than `b`.
    pub p_value: f64,
}

/// Predicted variance ratio of two SA runs from their population sizes and
/// final gains: the variance of `theta_N` scales like `gamma_N / kappa`.
pub fn predicted_efficiency(kappa_a: usize, gamma_a: f64, kappa_b: usize, gamma_b: f64) -> f64 {
    (kappa_a as f64 * gamma_b) / (kappa_b as f64 * gamma_a)
}

/// Bootstrap comparison of final MSEs; runs are resampled within each group.
pub fn compare_efficiency(
    a: &ReplicationSummary,
    b: &ReplicationSummary,
    beta: f64,
    target: f64,
    resamples: usize,
    seed: u64,
) -> Result<RatioReport> {
    let mse_a = stats::mean(&a.final_sq_errors);
    let mse_b = stats::mean(&b.final_sq_errors);
    if mse_a <= 0.0 {
        return Err(Error::Degenerate("reference setting has zero MSE".into()));
    }
    let rho_hat = mse_b / mse_a;
    let mut rng = chain_rng(seed, 0);
    let mut ratios = Vec::with_capacity(resamples);
    let mut not_better = 0usize;
    for _ in 0..resamples {
        let ra = stats::resampled_mean(&a.final_sq_errors, &mut rng);
        let rb = stats::resampled_mean(&b.final_sq_errors, &mut rng);
        if ra >= rb {
            not_better += 1;
        }
        ratios.push(if ra > 0.0 { rb / ra } else { f64::INFINITY });
    }
    let (ci_lo, ci_hi) = stats::percentile_interval(&mut ratios, 0.05);
    Ok(RatioReport {
        kappa: a.kappa,
        beta,
        rho_hat,
        target,
        ci_lo,
        ci_hi,
        p_value: not_better as f64 / resamples as f64,
    })
}

/// How the single-chain run is matched to the population run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// Same `gamma(t)` sequence for both.
    SameGain,
    /// Single chain gets `t0 * kappa^beta` so both runs end at the same gain.
    EqualFinalGain,
}

pub struct RateRatioOutcome {
    pub report: RatioReport,
    pub population: ReplicationSummary,
    pub single: ReplicationSummary,
}

/// Pop-SAMC with `kappa` chains and `N = base.iterations` against SAMC with
/// `kappa N` iterations (equal energy budgets).
#[allow(clippy::too_many_arguments)]
pub fn rate_ratio_test<T: EnergyFunction + ?Sized>(
    target: &T,
    base: &SamcConfig,
    kappa: usize,
    pairing: Pairing,
    runs: usize,
    base_seed: u64,
    p_true: &[f64],
    tracked: &[usize],
    progress: bool,
) -> Result<RateRatioOutcome> {
    if runs < 10 {
        return Err(Error::InsufficientReplication {
            needed: 10,
            got: runs,
        });
    }
    let schedule = base.schedule;
    let beta = schedule.beta();
    let count = match base.checkpoints {
        CheckpointGrid::Linear { count } => count,
        CheckpointGrid::Geometric { count, .. } => count,
    };
    let pop_spec = RunSpec {
        label: format!("pop_samc_k{kappa}"),
        algorithm: Algorithm::PopSamc {
            kappa,
            crossover: None,
        },
        config: SamcConfig {
            checkpoints: CheckpointGrid::Linear { count },
            ..base.clone()
        },
    };
    let single_t0 = match pairing {
        Pairing::SameGain => schedule.t0(),
        Pairing::EqualFinalGain => schedule.t0() * (kappa as f64).powf(beta),
    };
    let single_spec = RunSpec {
        label: "samc".into(),
        algorithm: Algorithm::Samc,
        config: SamcConfig {
            iterations: base.iterations * kappa as u64,
            schedule: crate::gain::GainSchedule::new(single_t0, beta)?,
            checkpoints: CheckpointGrid::Linear { count },
            ..base.clone()
        },
    };
    let total = (pop_spec.config.iterations + single_spec.config.iterations) * runs as u64;
    let prog = Progress::new("rate-ratio", total, progress);
    let population = replicate(
        target,
        &pop_spec,
        runs,
        base_seed,
        p_true,
        tracked,
        Some(&prog),
    )?;
    let single = replicate(
        target,
        &single_spec,
        runs,
        base_seed.wrapping_add(1),
        p_true,
        tracked,
        Some(&prog),
    )?;
    let target_ratio =
        predicted_efficiency(kappa, pop_spec.final_gain(), 1, single_spec.final_gain());
    let report = compare_efficiency(
        &population,
        &single,
        beta,
        target_ratio,
        BOOTSTRAP_RESAMPLES,
        base_seed ^ 0xb007,
    )?;
    Ok(RateRatioOutcome {
        report,
        population,
        single,
    })
}

/// Shape diagnostics of `(theta_T - theta*) / sqrt(gamma_T)` across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCovariance {
    /// Zero-based coordinates examined.
    pub coords: Vec<usize>,
    /// One row per run, one column per coordinate; centered across runs.
    pub scaled_errors: Vec<Vec<f64>>,
    pub cov: DMatrix<f64>,
    pub skew: Vec<f64>,
    pub kurtosis: Vec<f64>,
    pub pass: Vec<bool>,
}

impl EmpiricalCovariance {
    pub fn pass_fraction(&self) -> f64 {
        self.pass.iter().filter(|&&p| p).count() as f64 / self.pass.len() as f64
    }

    pub fn passed(&self) -> bool {
        self.pass_fraction() >= NORMALITY_PASS_FRACTION
    }
}

/// Builds the scaled, centered errors and their moment diagnostics.
///
/// Each run's `theta` and `theta_star` are first centered on the mean over
/// `nonempty` regions (fixing the free additive constant), then scaled by
/// `sqrt(gamma)`; finally every coordinate is centered on its cross-run mean.
pub fn scaled_error_diagnostics(
    thetas: &[Vec<f64>],
    gamma: f64,
    theta_star: &[f64],
    nonempty: &[usize],
    coords: &[usize],
) -> Result<EmpiricalCovariance> {
    if thetas.len() < 4 {
        return Err(Error::InsufficientReplication {
            needed: 4,
            got: thetas.len(),
        });
    }
    let center = |v: &[f64]| nonempty.iter().map(|&i| v[i]).sum::<f64>() / nonempty.len() as f64;
    let c_star = center(theta_star);
    let scale = gamma.sqrt();
    let mut rows: Vec<Vec<f64>> = thetas
        .iter()
        .map(|th| {
            let c = center(th);
            coords
                .iter()
                .map(|&i| ((th[i] - c) - (theta_star[i] - c_star)) / scale)
                .collect()
        })
        .collect();
    for j in 0..coords.len() {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64;
        rows.iter_mut().for_each(|r| r[j] -= mean);
    }
    Ok(moment_diagnostics(coords.to_vec(), rows))
}

/// Skewness/kurtosis checks and covariance for already centered rows.
pub fn moment_diagnostics(coords: Vec<usize>, rows: Vec<Vec<f64>>) -> EmpiricalCovariance {
    let p = coords.len();
    let column = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let skew: Vec<f64> = (0..p).map(|j| stats::skewness(&column(j))).collect();
    let kurtosis: Vec<f64> = (0..p).map(|j| stats::excess_kurtosis(&column(j))).collect();
    let pass = skew
        .iter()
        .zip(&kurtosis)
        .map(|(s, k)| s.abs() < SKEW_LIMIT && k.abs() < EXCESS_KURTOSIS_LIMIT)
        .collect();
    EmpiricalCovariance {
        cov: stats::covariance(&rows),
        coords,
        scaled_errors: rows,
        skew,
        kurtosis,
        pass,
    }
}

/// Replicates `spec` and runs [`scaled_error_diagnostics`] on the final
/// weights against `theta_star`.
#[allow(clippy::too_many_arguments)]
pub fn normality_diagnostics<T: EnergyFunction + ?Sized>(
    target: &T,
    spec: &RunSpec,
    runs: usize,
    base_seed: u64,
    p_true: &[f64],
    theta_star: &[f64],
    coords: &[usize],
    progress: Option<&Progress>,
) -> Result<(EmpiricalCovariance, ReplicationSummary)> {
    if runs < 50 {
        return Err(Error::InsufficientReplication {
            needed: 50,
            got: runs,
        });
    }
    let summary = replicate(target, spec, runs, base_seed, p_true, coords, progress)?;
    let diag = diagnostics_for(&summary, spec, theta_star, coords)?;
    Ok((diag, summary))
}

/// [`scaled_error_diagnostics`] for an existing replication batch.
pub fn diagnostics_for(
    summary: &ReplicationSummary,
    spec: &RunSpec,
    theta_star: &[f64],
    coords: &[usize],
) -> Result<EmpiricalCovariance> {
    let nonempty: Vec<usize> = (0..theta_star.len())
        .filter(|i| {
            !spec.config.empty_regions.contains(i) && theta_star[*i] > -spec.config.theta_bound
        })
        .collect();
    scaled_error_diagnostics(
        &summary.final_thetas(),
        summary.final_gamma,
        theta_star,
        &nonempty,
        coords,
    )
}

/// Aligned MSE columns for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub energy_evals: Vec<u64>,
    pub labels: Vec<String>,
    /// One column per summary, aligned with `energy_evals`.
    pub columns: Vec<Vec<f64>>,
}

/// Aligns MSE curves on the energy-evaluation axis. All summaries must share
/// the same grid.
pub fn mse_curve(summaries: &[&ReplicationSummary]) -> Result<CurveTable> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::Alignment("no summaries given".into()))?;
    for s in &summaries[1..] {
        if s.energy_evals != first.energy_evals {
            return Err(Error::Alignment(format!(
                "`{}` and `{}` use different energy-evaluation grids",
                first.label, s.label
            )));
        }
    }
    Ok(CurveTable {
        energy_evals: first.energy_evals.clone(),
        labels: summaries.iter().map(|s| s.label.clone()).collect(),
        columns: summaries.iter().map(|s| s.mse_curve.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Component;
    use crate::gain::GainSchedule;
    use crate::kernels::RwProposal;
    use crate::state::{DesiredDist, InitBox};
    use rand_distr::{Distribution, StandardNormal};

    fn problem() -> (MixtureDensity, SamcConfig) {
        let d = MixtureDensity::equal_weights(&[vec![0.0], vec![5.0]], 0.1).unwrap();
        let cfg = SamcConfig {
            partition: EnergyPartition::uniform(0.0, 1.0, 4.0).unwrap(),
            pi: DesiredDist::uniform(6).unwrap(),
            schedule: GainSchedule::new(10.0, 1.0).unwrap(),
            proposal: RwProposal::new(1.0).unwrap(),
            iterations: 2000,
            checkpoints: CheckpointGrid::Linear { count: 5 },
            empty_regions: vec![],
            init_box: InitBox::default(),
            theta_bound: 1e300,
        };
        (d, cfg)
    }

    #[test]
    fn oracle_single_component_inside_lowest_region() {
        let d = MixtureDensity::new(vec![Component {
            weight: 1.0,
            mean: vec![0.0, 0.0],
            variance: 1.0,
        }])
        .unwrap();
        // Every energy is below 1e6.
        let p = EnergyPartition::new(vec![1e6, 2e6]).unwrap();
        let o = oracle_probs(&d, &p, 20_000, 1).unwrap();
        assert_eq!(o.p_true, vec![1.0, 0.0, 0.0]);
        assert_eq!(o.mc_std_err, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn oracle_rejects_tiny_budgets() {
        let (d, cfg) = problem();
        assert!(oracle_probs(&d, &cfg.partition, 0, 1).is_err());
    }

    #[test]
    fn oracle_is_independent_of_thread_count() {
        let (d, cfg) = problem();
        let n = 3 * ORACLE_CHUNK + 17;
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one
            .install(|| oracle_probs(&d, &cfg.partition, n, 5))
            .unwrap();
        let b = four
            .install(|| oracle_probs(&d, &cfg.partition, n, 5))
            .unwrap();
        assert_eq!(a, b);
        assert!((a.p_true.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_seeds_give_zero_spread() {
        let (d, cfg) = problem();
        let spec = RunSpec {
            label: "samc".into(),
            algorithm: Algorithm::Samc,
            config: cfg,
        };
        let p_true = vec![1.0 / 6.0; 6];
        let s = replicate_with_seeds(&d, &spec, &[9, 9], &p_true, &[1, 2], None).unwrap();
        assert!(s.std_err.iter().all(|&v| v == 0.0));
        assert_eq!(s.estimates[0], s.estimates[1]);
    }

    #[test]
    fn replication_requires_two_runs() {
        let (d, cfg) = problem();
        let spec = RunSpec {
            label: "samc".into(),
            algorithm: Algorithm::Samc,
            config: cfg,
        };
        assert!(matches!(
            replicate(&d, &spec, 1, 0, &[0.0; 6], &[1], None),
            Err(Error::InsufficientReplication { .. })
        ));
    }

    #[test]
    fn rate_ratio_requires_ten_runs() {
        let (d, cfg) = problem();
        assert!(matches!(
            rate_ratio_test(&d, &cfg, 2, Pairing::SameGain, 9, 0, &[0.0; 6], &[1], false),
            Err(Error::InsufficientReplication { needed: 10, got: 9 })
        ));
    }

    #[test]
    fn predicted_targets() {
        let pop = GainSchedule::new(100.0, 0.6).unwrap();
        let n = 200_000u64;
        let t = predicted_efficiency(10, pop.gain(n), 1, pop.gain(10 * n));
        assert!((t - 10f64.powf(0.4)).abs() < 1e-9);
        let pop = GainSchedule::new(100.0, 1.0).unwrap();
        let single = GainSchedule::new(1000.0, 1.0).unwrap();
        let t = predicted_efficiency(10, pop.gain(n), 1, single.gain(10 * n));
        assert!((t - 10.0).abs() < 1e-9);
        let t = predicted_efficiency(10, pop.gain(n), 1, pop.gain(10 * n));
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn self_comparison_is_unity() {
        let (d, cfg) = problem();
        let spec = RunSpec {
            label: "a".into(),
            algorithm: Algorithm::PopSamc {
                kappa: 3,
                crossover: None,
            },
            config: cfg,
        };
        let p_true = vec![1.0 / 6.0; 6];
        let s = replicate(&d, &spec, 12, 4, &p_true, &[1, 2, 3], None).unwrap();
        let r = compare_efficiency(&s, &s, 1.0, 1.0, 2000, 1).unwrap();
        assert_eq!(r.rho_hat, 1.0);
        assert!(r.ci_lo <= 1.0 && 1.0 <= r.ci_hi);
        let curve = mse_curve(&[&s, &s]).unwrap();
        assert_eq!(curve.columns[0], curve.columns[1]);
    }

    #[test]
    fn misaligned_grids_are_rejected() {
        let (d, cfg) = problem();
        let p_true = vec![1.0 / 6.0; 6];
        let a = RunSpec {
            label: "a".into(),
            algorithm: Algorithm::Samc,
            config: cfg.clone(),
        };
        let b = RunSpec {
            label: "b".into(),
            algorithm: Algorithm::PopSamc {
                kappa: 2,
                crossover: None,
            },
            config: cfg,
        };
        let sa = replicate(&d, &a, 2, 1, &p_true, &[1], None).unwrap();
        let sb = replicate(&d, &b, 2, 1, &p_true, &[1], None).unwrap();
        assert!(matches!(mse_curve(&[&sa, &sb]), Err(Error::Alignment(_))));
    }

    #[test]
    fn gaussian_errors_pass_normality() {
        let mut rng = chain_rng(2024, 0);
        let rows: Vec<Vec<f64>> = (0..400)
            .map(|_| (0..10).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let diag = moment_diagnostics((0..10).collect(), rows);
        assert!(diag.passed(), "{:?} {:?}", diag.skew, diag.kurtosis);
        let eig = stats::symmetric_eigenvalues(&diag.cov);
        assert!(eig.iter().all(|&e| e >= -1e-10));
        assert_eq!(diag.cov, diag.cov.transpose());
    }

    #[test]
    fn heavy_tailed_errors_fail_normality() {
        let mut rng = chain_rng(7, 0);
        let rows: Vec<Vec<f64>> = (0..400)
            .map(|_| {
                (0..4)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        z.powi(3)
                    })
                    .collect()
            })
            .collect();
        assert!(!moment_diagnostics((0..4).collect(), rows).passed());
    }
}
