//! `sitemap`: generate behavior-performance maps, adapt on a damaged crawler,
//! and run the strategy comparison.
//!
//! Exit status is 0 on success, 1 for invalid command-line usage and 2 when
//! an input file is missing, malformed or inconsistent.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use sitemap::adaptation::{adapt, AdaptationConfig, DamagedRobot, Strategy, DEFAULT_FORCE_SCALE};
use sitemap::archive::Archive;
use sitemap::bench::{self, ExperimentPlan};
use sitemap::config::RunConfig;
use sitemap::sim::DamageCondition;

#[derive(Parser)]
#[command(name = "sitemap", version, about = "Safety-aware map-based adaptation for a simulated crawler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a behavior-performance map with MAP-Elites on the intact robot.
    Mapgen {
        /// Run configuration (TOML); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        /// Number of simulated evaluations.
        #[arg(long)]
        budget: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Adapt on a damaged robot and write the trial log as CSV.
    Adapt {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        damage: DamageCondition,
        #[arg(long)]
        strategy: Strategy,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        /// Seeds the lock-angle perturbation; has no effect without --damage-jitter.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Run configuration the archive was generated with.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Force limit in N; defaults to the archive's recorded threshold.
        #[arg(long)]
        threshold: Option<f64>,
        /// Output scale of the force constraint GP, N.
        #[arg(long, default_value_t = DEFAULT_FORCE_SCALE)]
        constraint_scale: f64,
        /// Stop once the best safe speed reaches this fraction of the map's best.
        #[arg(long, default_value_t = 0.9, conflicts_with = "no_stop")]
        stop_ratio: f64,
        /// Always run every trial.
        #[arg(long)]
        no_stop: bool,
        /// Uniform perturbation of the locked joint angles, rad.
        #[arg(long, default_value_t = 0.0)]
        damage_jitter: f64,
        /// Write the per-step state of the first executed behavior as CSV.
        #[arg(long)]
        dump_trajectory: Option<PathBuf>,
    },
    /// Run every strategy over the plan's maps, damages and replicates.
    Bench {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Recompute the summary from a directory of trial logs.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Mapgen {
            config,
            seed,
            budget,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let (archive, stats) = cfg.generate_map(seed, budget)?;
            archive.save(&out)?;
            println!(
                "{} cells filled from {} evaluations ({} failed); force threshold {:.3} N",
                archive.len(),
                stats.evaluations,
                stats.failures,
                archive.meta.safety_threshold.unwrap_or(f64::NAN)
            );
            Ok(())
        }
        Command::Adapt {
            archive,
            damage,
            strategy,
            trials,
            seed,
            out,
            config,
            threshold,
            constraint_scale,
            stop_ratio,
            no_stop,
            damage_jitter,
            dump_trajectory,
        } => {
            if trials == 0 {
                bail!("--trials must be at least 1");
            }
            let map = Archive::load(&archive)?;
            let sim = load_config(config.as_deref())?.simulator()?;
            if map.meta.sim_version != sim.fingerprint() {
                bail!(
                    "{} was generated with simulator {} but this configuration is {}; pass the matching --config",
                    archive.display(),
                    map.meta.sim_version,
                    sim.fingerprint()
                );
            }
            let robot = DamagedRobot::new(sim, damage.spec().jittered(seed, damage_jitter));
            let mut cfg = AdaptationConfig::new(strategy, vec![bench::force_constraint(&map, threshold, constraint_scale)?]);
            cfg.max_trials = trials;
            cfg.stop_ratio = (!no_stop).then_some(stop_ratio);
            let log = adapt(&map, &robot, &cfg)?;
            fs::write(&out, log.to_csv()).with_context(|| format!("writing {}", out.display()))?;
            if let (Some(path), Some(first)) = (dump_trajectory, log.trials.first()) {
                let elite = map.get(first.cell).expect("trial cell is in the archive");
                let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                robot.sim.dump_trajectory(&elite.genotype, &robot.damage, &mut w)?;
                w.flush()?;
            }
            println!(
                "{strategy} on {damage}: {} trials, {} unsafe, best safe speed {:.4} m/s",
                log.trials.len(),
                log.unsafe_count,
                log.best_safe_performance
            );
            Ok(())
        }
        Command::Bench { plan, out_dir, jobs } => {
            let plan = ExperimentPlan::load(&plan, &out_dir)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .context("starting worker threads")?;
            let summary = pool.install(|| bench::run_bench(&plan, &out_dir))?;
            print!("{}", summary.report());
            Ok(())
        }
        Command::Stats { input, out } => {
            let logs = input.join("logs");
            let dir = if logs.is_dir() { logs } else { input };
            let outcomes = bench::read_logs(&dir)?;
            let summary = bench::summarize(&outcomes)?;
            bench::write_summary(&summary, &out)?;
            print!("{}", summary.report());
            Ok(())
        }
    }
}
