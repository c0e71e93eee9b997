use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use popsamc_core::harness::{self, predicted_efficiency, BOOTSTRAP_RESAMPLES};
use popsamc_core::io;
use popsamc_core::meanfield::{fixed_point, MassSource, MassVector};
use popsamc_core::{
    oracle_probs, replicate, Experiment, ExperimentConfig, OracleResult, Progress,
    ReplicationSummary,
};

#[derive(Parser)]
#[command(
    name = "popsamc",
    version,
    about = "SAMC and population SAMC experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (defaults to the configuration's `output`, then
    /// `out/<name>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory holding cached oracle tables.
    #[arg(long, global = true, default_value = "oracle_cache")]
    cache_dir: PathBuf,
    /// Validate and print the resolved configuration without running.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Use the full-scale iteration and replication counts.
    #[arg(long, global = true)]
    full_scale: bool,
    /// Suppress progress messages.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Replicate one configuration and write summary, MSE curve and trajectories.
    Run { config: PathBuf },
    /// Compare two configurations at matched energy budgets.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Allow different energy-evaluation budgets.
        #[arg(long)]
        allow_unequal: bool,
        /// Also write a matplotlib script that plots `mse_curve.csv`.
        #[arg(long)]
        plot_script: bool,
    },
    /// Estimate region probabilities by exact sampling.
    Oracle {
        config: PathBuf,
        #[arg(long)]
        n: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.jobs.unwrap_or(0))
        .build()
        .expect("thread pool");
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Run { config } => cmd_run(g, config),
        Command::Compare {
            a,
            b,
            allow_unequal,
            plot_script,
        } => cmd_compare(g, a, b, *allow_unequal, *plot_script),
        Command::Oracle { config, n } => cmd_oracle(g, config, *n),
    }
}

fn load(g: &Global, path: &Path) -> Result<(ExperimentConfig, Experiment)> {
    let mut cfg = ExperimentConfig::load(path)?;
    if g.full_scale {
        cfg = cfg.full_scale();
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    let exp = cfg
        .resolve()
        .with_context(|| format!("invalid configuration {}", path.display()))?;
    Ok((cfg, exp))
}

fn out_dir(g: &Global, cfg: &ExperimentConfig, name: &str) -> Result<PathBuf> {
    let dir = g
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| Path::new("out").join(name));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn dry_run(cfg: &ExperimentConfig, exp: &Experiment) {
    println!("# resolved configuration");
    print!("{}", cfg.to_toml());
    println!("# {}", exp.validation);
}

/// Hex key identifying an oracle table: density, partition, sample size and seed.
fn oracle_key(exp: &Experiment, n: u64) -> Result<String> {
    let mut h = Sha256::new();
    let mut density = Vec::new();
    exp.density.write_csv(&mut density)?;
    h.update(&density);
    for c in exp.spec.config.partition.cutpoints() {
        h.update(c.to_bits().to_le_bytes());
    }
    h.update(n.to_le_bytes());
    h.update(exp.oracle_seed.to_le_bytes());
    Ok(hex::encode(&h.finalize()[..12]))
}

fn oracle_cached(g: &Global, exp: &Experiment, n: u64) -> Result<(OracleResult, PathBuf)> {
    let m = exp.spec.config.partition.len();
    std::fs::create_dir_all(&g.cache_dir)
        .with_context(|| format!("creating {}", g.cache_dir.display()))?;
    let path = g
        .cache_dir
        .join(format!("oracle_{}.csv", oracle_key(exp, n)?));
    if path.exists() {
        let read = std::fs::File::open(&path)
            .map_err(anyhow::Error::from)
            .and_then(|f| Ok(io::read_oracle(f, m, n)?));
        match read {
            Ok(o) => return Ok((o, path)),
            Err(e) => eprintln!(
                "warning: cached oracle {} is unreadable ({e:#}); recomputing",
                path.display()
            ),
        }
    }
    if !g.quiet {
        eprintln!("computing oracle with {n} samples");
    }
    let o = oracle_probs(&exp.density, &exp.spec.config.partition, n, exp.oracle_seed)?;
    io::write_file(&path, |w| io::write_oracle(w, &o))?;
    Ok((o, path))
}

fn cmd_oracle(g: &Global, path: &Path, n: Option<u64>) -> Result<()> {
    let (cfg, exp) = load(g, path)?;
    if g.dry_run {
        dry_run(&cfg, &exp);
        return Ok(());
    }
    let n = n.unwrap_or(exp.oracle_samples);
    let (o, cached) = oracle_cached(g, &exp, n)?;
    let dir = out_dir(g, &cfg, &exp.name)?;
    let out = dir.join("oracle.csv");
    std::fs::copy(&cached, &out).with_context(|| format!("writing {}", out.display()))?;
    println!("{:>6}  {:>10}  {:>10}", "region", "p_true", "std_err");
    for (i, (p, se)) in o.p_true.iter().zip(&o.mc_std_err).enumerate() {
        println!("{:>6}  {:>10.4}  {:>10.6}", i + 1, p, se);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn run_batch(g: &Global, exp: &Experiment, p_true: &[f64]) -> Result<ReplicationSummary> {
    let total = exp.spec.config.iterations * exp.replications as u64;
    let progress = Progress::new(exp.name.clone(), total, !g.quiet);
    Ok(replicate(
        &exp.density,
        &exp.spec,
        exp.replications,
        exp.seed,
        p_true,
        &exp.tracked,
        Some(&progress),
    )?)
}

fn print_table(s: &ReplicationSummary) {
    println!("{}", s.label);
    println!(
        "{:>6}  {:>8}  {:>9}  {:>9}",
        "region", "true", "estimate", "SE"
    );
    for i in 0..s.mean.len() {
        println!(
            "{:>6}  {:>8.4}  {:>9.4}  {:>9.5}",
            i + 1,
            s.p_true[i],
            s.mean[i],
            s.std_err[i]
        );
    }
    println!("final MSE (tracked regions): {:.4e}", s.final_mse());
}

fn cmd_run(g: &Global, path: &Path) -> Result<()> {
    let (cfg, exp) = load(g, path)?;
    if g.dry_run {
        dry_run(&cfg, &exp);
        return Ok(());
    }
    let dir = out_dir(g, &cfg, &exp.name)?;
    let (oracle, _) = oracle_cached(g, &exp, exp.oracle_samples)?;
    let s = run_batch(g, &exp, &oracle.p_true)?;

    io::write_file(&dir.join("summary.csv"), |w| io::write_summary(w, &[&s]))?;
    let curve = harness::mse_curve(&[&s])?;
    io::write_file(&dir.join("mse_curve.csv"), |w| {
        io::write_mse_curve(w, &curve)
    })?;
    io::write_file(&dir.join("trajectories.csv"), |w| {
        io::write_trajectories(w, &s)
    })?;
    if exp.replications >= 50 {
        let w = MassVector::new(oracle.p_true.clone(), MassSource::Oracle)?;
        let theta_star = fixed_point(&w, &exp.spec.config.pi, exp.spec.config.theta_bound)?;
        let diag = harness::diagnostics_for(&s, &exp.spec, &theta_star, &exp.tracked)?;
        io::write_file(&dir.join("normality.csv"), |w| {
            io::write_normality(w, &diag)
        })?;
        println!(
            "normality: {:.0}% of coordinates pass",
            100.0 * diag.pass_fraction()
        );
    }

    print_table(&s);
    let visits = s
        .trajectories
        .iter()
        .map(|t| t.last().visits.iter().sum::<u64>())
        .sum::<u64>();
    let accepted: u64 = s.trajectories.iter().map(|t| t.accepted).sum();
    let proposals: u64 = s.trajectories.iter().map(|t| t.proposals).sum();
    println!(
        "acceptance rate {:.3}, {} chain visits over {} runs",
        accepted as f64 / proposals.max(1) as f64,
        visits,
        s.runs()
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn check_comparable(a: &Experiment, b: &Experiment, allow_unequal: bool) -> Result<()> {
    if a.density.components() != b.density.components() {
        bail!("the two configurations use different target densities");
    }
    let (ca, cb) = (&a.spec.config, &b.spec.config);
    if ca.partition != cb.partition {
        bail!("the two configurations use different energy partitions");
    }
    if ca.pi != cb.pi {
        bail!("the two configurations use different desired distributions");
    }
    if a.tracked != b.tracked {
        bail!("the two configurations track different regions");
    }
    if a.oracle_samples != b.oracle_samples || a.oracle_seed != b.oracle_seed {
        bail!("the two configurations use different oracle settings");
    }
    if !allow_unequal && a.spec.budget() != b.spec.budget() {
        bail!(
            "energy budgets differ ({} vs {} evaluations per run); pass --allow-unequal to compare anyway",
            a.spec.budget(),
            b.spec.budget()
        );
    }
    Ok(())
}

fn cmd_compare(g: &Global, pa: &Path, pb: &Path, allow_unequal: bool, plot: bool) -> Result<()> {
    let (cfg_a, a) = load(g, pa)?;
    let (cfg_b, b) = load(g, pb)?;
    check_comparable(&a, &b, allow_unequal)?;
    let target = predicted_efficiency(
        a.spec.algorithm.kappa(),
        a.spec.final_gain(),
        b.spec.algorithm.kappa(),
        b.spec.final_gain(),
    );
    if g.dry_run {
        dry_run(&cfg_a, &a);
        dry_run(&cfg_b, &b);
        println!("# predicted efficiency {target:.3}");
        return Ok(());
    }
    let dir = out_dir(g, &cfg_a, &format!("{}_vs_{}", a.name, b.name))?;
    let (oracle, _) = oracle_cached(g, &a, a.oracle_samples)?;
    let mut sa = run_batch(g, &a, &oracle.p_true)?;
    let mut sb = run_batch(g, &b, &oracle.p_true)?;
    if sa.label == sb.label {
        sa.label.push_str("_a");
        sb.label.push_str("_b");
    }
    let beta = a.spec.config.schedule.beta();
    let report =
        harness::compare_efficiency(&sa, &sb, beta, target, BOOTSTRAP_RESAMPLES, a.seed ^ b.seed)?;

    io::write_file(&dir.join("summary.csv"), |w| {
        io::write_summary(w, &[&sa, &sb])
    })?;
    io::write_file(&dir.join("ratio_report.csv"), |w| {
        io::write_ratio_report(w, std::slice::from_ref(&report))
    })?;
    match harness::mse_curve(&[&sa, &sb]) {
        Ok(curve) => {
            io::write_file(&dir.join("mse_curve.csv"), |w| {
                io::write_mse_curve(w, &curve)
            })?;
            if plot {
                std::fs::write(dir.join("plot_mse.py"), plot_script(&curve.labels))?;
            }
        }
        Err(e) => eprintln!("warning: no mse_curve.csv written: {e}"),
    }

    print_table(&sa);
    print_table(&sb);
    println!(
        "rho_hat = {:.3} (95% CI {:.3} .. {:.3}), target {:.3}, p = {:.4}",
        report.rho_hat, report.ci_lo, report.ci_hi, report.target, report.p_value
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn plot_script(labels: &[String]) -> String {
    let mut s = String::from(
        "import csv\nimport matplotlib.pyplot as plt\n\n\
         with open(\"mse_curve.csv\") as f:\n    rows = list(csv.DictReader(f))\n\
         x = [float(r[\"energy_evals\"]) for r in rows]\n",
    );
    for l in labels {
        s.push_str(&format!(
            "plt.plot(x, [float(r[\"mse_{l}\"]) for r in rows], label=\"{l}\")\n"
        ));
    }
    s.push_str(
        "plt.yscale(\"log\")\nplt.xlabel(\"energy evaluations\")\nplt.ylabel(\"MSE\")\n\
         plt.legend()\nplt.savefig(\"mse_curve.png\", dpi=150)\n",
    );
    s
}
