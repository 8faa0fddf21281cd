//! Batch experiment runner: reproduces the library's synthetic studies at
//! configurable scale and emits plot-ready tables.
//!
//! Every run is fully determined by its flags and `--seed`; replicates are
//! distributed over a worker pool but collected in replicate order, so
//! output files are byte-identical across repeats and thread counts.

mod output;
mod summarize;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use errest::bandit::falcon::{FalconConfig, FalconExperimentConfig};
use errest::bandit::pipeline::{PipelineConfig, PipelineExperimentConfig};
use errest::concentration::ConfidenceLevel;
use errest::excessrisk::RiskExperimentConfig;
use errest::inference::{CrossfitConfig, FwerConfig, WeightChoice};
use errest::means::{mean_stats, simultaneous_cis, FiniteSimConfig};
use errest::oracles::{exact_rademacher, FunctionTable};
use output::{Format, Table};
use rand::Rng;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "errest", version, about = "Data-driven error estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Confidence parameter in (0,1).
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Base seed; replicate streams derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Shrink every size parameter so the full code path finishes in seconds.
    #[arg(long)]
    smoke: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Correlated-task simulation: data-driven bound vs the union bound.
    FiniteSim {
        #[command(flatten)]
        common: Common,
        /// Cross-task correlation levels.
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 500)]
        tasks: usize,
        #[arg(long, default_value_t = 100)]
        reps: usize,
    },
    /// Simultaneous confidence intervals for many Gaussian means.
    MeansCi {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        tasks: usize,
        /// Observations per split part and task.
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        reps: usize,
    },
    /// Localized excess-risk bounds on the linear-regression process.
    ExcessRisk {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        d: usize,
        /// Total sample sizes (split evenly).
        #[arg(long, value_delimiter = ',', default_value = "100,400,1000")]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 60)]
        iters: usize,
    },
    /// Weighted multiple testing under the global null.
    Multitest {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        tasks: usize,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        /// Weight choice: flat or default (screened and scaled).
        #[arg(long, default_value = "default")]
        weights: String,
    },
    /// Two-way dataset switching on the correlated-task simulation.
    Crossfit {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 500)]
        tasks: usize,
        #[arg(long, default_value_t = 500)]
        reps: usize,
    },
    /// Paired FALCON trials: theoretical vs error-estimated exploration.
    Falcon {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        d: usize,
        #[arg(long = "K", default_value_t = 5)]
        arms: usize,
        #[arg(long = "T", default_value_t = 2000)]
        horizon: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Multiplier of the theoretical excess-risk term.
        #[arg(long = "C", default_value_t = 2.0)]
        big_c: f64,
        /// Multiplier of the exploration parameter.
        #[arg(long = "c", default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 0.1)]
        noise_sd: f64,
    },
    /// Conformal-arm-set exploration pipeline with cover certificates.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long = "K", default_value_t = 3)]
        arms: usize,
        #[arg(long = "T", default_value_t = 512)]
        horizon: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 32)]
        policies: usize,
        #[arg(long, default_value_t = 0.05)]
        noise_sd: f64,
    },
    /// Split discrepancy against exact Rademacher complexity.
    RademacherCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 500)]
        reps: usize,
        /// Deviation parameter of the tightness statement.
        #[arg(long, default_value_t = 0.5)]
        dev: f64,
    },
    /// Aggregate a result table: per-group means, standard errors, 95% bands.
    Summarize {
        /// CSV file produced by one of the experiment commands.
        input: PathBuf,
        /// Grouping column (default: the first column).
        #[arg(long)]
        by: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

fn delta_of(common: &Common) -> Result<ConfidenceLevel> {
    ConfidenceLevel::new(common.delta).context("--delta must lie in (0,1)")
}

fn configure_pool(common: &Common) {
    if let Some(jobs) = common.jobs {
        // ignore the error if a pool already exists (e.g. in tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
}

fn finish(table: Table, common: &Common, label: &str, started: Instant) -> Result<()> {
    let rows = table.rows.len();
    table.write(common.out.as_deref(), common.format)?;
    let dest = common
        .out
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "stdout".to_string());
    eprintln!("{label}: {rows} rows in {:.2} s -> {dest}", started.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::FiniteSim { common, alphas, tasks, reps } => {
            configure_pool(&common);
            let started = Instant::now();
            let (tasks, reps) = if common.smoke { (20, 3) } else { (tasks, reps) };
            let rows = errest::means::finite_sim(&FiniteSimConfig {
                alphas,
                n_tasks: tasks,
                reps,
                delta: delta_of(&common)?,
                seed: common.seed,
            })?;
            let mut table = Table::new(&["alpha", "rep", "true_max", "ee_bound", "union_bound"]);
            for r in rows {
                table.push(vec![
                    r.alpha.into(),
                    r.rep.into(),
                    r.true_max.into(),
                    r.ee_bound.into(),
                    r.union_bound.into(),
                ]);
            }
            finish(table, &common, "finite-sim", started)
        }
        Command::MeansCi { common, tasks, n, reps } => {
            configure_pool(&common);
            let started = Instant::now();
            let (tasks, n, reps) = if common.smoke { (5, 30, 3) } else { (tasks, n, reps) };
            let delta = delta_of(&common)?;
            let seed = common.seed;
            let rows = errest::exec::map_indexed(reps, |rep| {
                let mut rng = errest::rng::stream_rng(seed, rep as u64);
                let mut stats = Vec::with_capacity(tasks);
                let mut mus = Vec::with_capacity(tasks);
                for h in 0..tasks {
                    let mu = (h % 7) as f64 * 0.25;
                    let sd = 1.0 + (h % 3) as f64 * 0.5;
                    let mut draw = || -> Vec<f64> {
                        (0..n)
                            .map(|_| mu + sd * rng.sample::<f64, _>(rand_distr::StandardNormal))
                            .collect()
                    };
                    let d = mean_stats(&draw()).expect("n >= 2");
                    let e = mean_stats(&draw()).expect("n >= 2");
                    stats.push((d, e));
                    mus.push(mu);
                }
                let cis = simultaneous_cis(&stats, delta).expect("nonempty");
                let covered = cis
                    .intervals
                    .iter()
                    .zip(&mus)
                    .all(|((lo, hi), mu)| lo <= mu && mu <= hi);
                let max_err = stats
                    .iter()
                    .zip(&mus)
                    .map(|((d, _), mu)| {
                        (n as f64).sqrt() * (d.theta_hat - mu).abs() / d.sigma_hat
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                (rep, cis.xi, covered, max_err)
            });
            let mut table = Table::new(&["rep", "xi", "covered", "max_err"]);
            for (rep, xi, covered, max_err) in rows {
                table.push(vec![rep.into(), xi.into(), covered.into(), max_err.into()]);
            }
            finish(table, &common, "means-ci", started)
        }
        Command::ExcessRisk { common, d, ns, reps, restarts, iters } => {
            configure_pool(&common);
            let started = Instant::now();
            let (ns, reps, restarts, iters) = if common.smoke {
                (vec![60], 2, 2, 20)
            } else {
                (ns, reps, restarts, iters)
            };
            let rows = errest::excessrisk::risk_experiment(&RiskExperimentConfig {
                ns,
                reps,
                dim: d,
                delta: delta_of(&common)?,
                seed: common.seed,
                solver_restarts: restarts,
                solver_iters: iters,
            })?;
            let mut table = Table::new(&[
                "n",
                "rep",
                "true_excess",
                "bound_erm",
                "bound_general",
                "vc_bound",
                "iterations",
            ]);
            for r in rows {
                table.push(vec![
                    r.n.into(),
                    r.rep.into(),
                    r.true_excess.into(),
                    r.bound_erm.into(),
                    r.bound_general.into(),
                    r.vc_bound.into(),
                    r.iterations.into(),
                ]);
            }
            finish(table, &common, "excess-risk", started)
        }
        Command::Multitest { common, tasks, n, reps, weights } => {
            configure_pool(&common);
            let started = Instant::now();
            let weights = match weights.as_str() {
                "flat" => WeightChoice::Flat,
                "default" => WeightChoice::Default,
                other => bail!("--weights must be flat or default, got {other:?}"),
            };
            let (tasks, n, reps) = if common.smoke { (20, 30, 5) } else { (tasks, n, reps) };
            let rows = errest::inference::fwer_experiment(&FwerConfig {
                n_tasks: tasks,
                n,
                reps,
                delta: delta_of(&common)?,
                weights,
                seed: common.seed,
            })?;
            let mut table = Table::new(&["rep", "any_rejection", "n_rejected"]);
            for r in rows {
                table.push(vec![r.rep.into(), r.any_rejection.into(), r.n_rejected.into()]);
            }
            finish(table, &common, "multitest", started)
        }
        Command::Crossfit { common, alphas, tasks, reps } => {
            configure_pool(&common);
            let started = Instant::now();
            let (tasks, reps) = if common.smoke { (20, 5) } else { (tasks, reps) };
            let rows = errest::inference::crossfit_experiment(&CrossfitConfig {
                alphas,
                n_tasks: tasks,
                reps,
                delta: delta_of(&common)?,
                seed: common.seed,
            })?;
            let mut table =
                Table::new(&["alpha", "rep", "xi_12", "xi_21", "xi_min", "true_max"]);
            for r in rows {
                table.push(vec![
                    r.alpha.into(),
                    r.rep.into(),
                    r.xi_12.into(),
                    r.xi_21.into(),
                    r.xi_min.into(),
                    r.true_max.into(),
                ]);
            }
            finish(table, &common, "crossfit", started)
        }
        Command::Falcon { common, d, arms, horizon, trials, big_c, c, noise_sd } => {
            configure_pool(&common);
            let started = Instant::now();
            let (horizon, trials) = if common.smoke { (64, 1) } else { (horizon, trials) };
            let mut falcon = FalconConfig::new(delta_of(&common)?);
            falcon.big_c = big_c;
            falcon.c = c;
            let rows = errest::bandit::falcon::falcon_experiment(&FalconExperimentConfig {
                dim: d,
                arms,
                horizon,
                trials,
                noise_sd,
                seed: common.seed,
                falcon,
            })?;
            let mut table = Table::new(&["trial", "t", "variant", "epsilon", "cum_regret"]);
            for r in rows {
                table.push(vec![
                    r.trial.into(),
                    r.t.into(),
                    r.variant.label().into(),
                    r.epsilon.into(),
                    r.cum_regret.into(),
                ]);
            }
            finish(table, &common, "falcon", started)
        }
        Command::Pipeline { common, d, arms, horizon, trials, policies, noise_sd } => {
            configure_pool(&common);
            let started = Instant::now();
            let (horizon, trials, policies) =
                if common.smoke { (64, 1, 8) } else { (horizon, trials, policies) };
            let mut pipeline = PipelineConfig::new(delta_of(&common)?);
            pipeline.n_policies = policies;
            if common.smoke {
                pipeline.probe_size = 32;
                pipeline.validation_size = 64;
            }
            let rows = errest::bandit::pipeline::pipeline_experiment(&PipelineExperimentConfig {
                dim: d,
                arms,
                horizon,
                trials,
                noise_sd,
                seed: common.seed,
                pipeline,
            })?;
            let mut table = Table::new(&[
                "trial",
                "epoch",
                "u_elim",
                "u_con",
                "m_next",
                "alpha_next",
                "realized_cover",
            ]);
            for r in rows {
                table.push(vec![
                    r.trial.into(),
                    r.epoch.into(),
                    r.u_elim.into(),
                    r.u_con.into(),
                    r.m_next.into(),
                    r.alpha_next.into(),
                    r.realized_cover.into(),
                ]);
            }
            finish(table, &common, "pipeline", started)
        }
        Command::RademacherCheck { common, reps, dev } => {
            configure_pool(&common);
            let started = Instant::now();
            let reps = if common.smoke { 10 } else { reps };
            let seed = common.seed;
            let rows = errest::exec::map_indexed(reps, |rep| {
                let mut rng = errest::rng::stream_rng(seed, rep as u64);
                let n_fns = rng.gen_range(1..=8);
                let n = rng.gen_range(4..=10);
                let support = 6usize;
                let table: Vec<Vec<f64>> = (0..n_fns)
                    .map(|_| (0..support).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect();
                let mut draw = || -> Vec<usize> {
                    (0..n).map(|_| rng.gen_range(0..support)).collect()
                };
                let s_def = draw();
                let s_err = draw();
                let discrepancy = table
                    .iter()
                    .map(|f| {
                        let a: f64 = s_def.iter().map(|&i| f[i]).sum::<f64>() / n as f64;
                        let b: f64 = s_err.iter().map(|&i| f[i]).sum::<f64>() / n as f64;
                        (a - b).abs()
                    })
                    .fold(0.0, f64::max);
                let def_table = FunctionTable::new(
                    table.iter().map(|f| s_def.iter().map(|&i| f[i]).collect()).collect(),
                    1.0,
                )
                .expect("entries within bound");
                let rad = exact_rademacher(&def_table);
                let holds = discrepancy + dev <= 2.0 * rad + 2.0 * dev;
                (rep, n, n_fns, discrepancy, rad, holds)
            });
            let mut table = Table::new(&[
                "rep",
                "n",
                "class_size",
                "discrepancy",
                "exact_rademacher",
                "holds",
            ]);
            for (rep, n, n_fns, disc, rad, holds) in rows {
                table.push(vec![
                    rep.into(),
                    n.into(),
                    n_fns.into(),
                    disc.into(),
                    rad.into(),
                    holds.into(),
                ]);
            }
            finish(table, &common, "rademacher-check", started)
        }
        Command::Summarize { input, by, out, format } => {
            let started = Instant::now();
            let table = summarize::summarize(&input, by.as_deref())?;
            let rows = table.rows.len();
            table.write(out.as_deref(), format)?;
            let dest = out
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "stdout".to_string());
            eprintln!(
                "summarize: {rows} rows in {:.2} s -> {dest}",
                started.elapsed().as_secs_f64()
            );
            Ok(())
        }
    }
}
