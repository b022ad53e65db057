use std::path::PathBuf;

use aggcorr::{estimate, Dataset64, EstimatorConfig, LimitForm, Method, Simulator};
use aggcorr_harness::{
    data_seed, limit_table, run_experiment_with, write_outputs, ExperimentConfig, FactorCache, DEFAULT_CONFIG,
};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aggcorr", version, about = "Inter-correlation estimators for aggregated lattice data")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); the built-in default study when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Series length, overriding the config.
    #[arg(long = "T", value_name = "N")]
    t_len: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default_study(),
        };
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(t) = self.t_len {
            cfg.run.t_len = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one replicate of a scenario and write it as a dataset file.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Scenario id; the first scenario when omitted.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, default_value_t = 1)]
        rep: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one estimator on a dataset file.
    Estimate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        method: Method,
        #[arg(long, num_args = 2, value_names = ["J", "JP"], default_values_t = [0, 1])]
        targets: Vec<u32>,
        #[arg(long, num_args = 2, value_names = ["K", "KP"], default_values_t = [2, 3])]
        donors: Vec<u32>,
        #[arg(long, default_value_t = 1)]
        nu: usize,
        #[arg(long)]
        delta: Option<usize>,
        #[arg(long, default_value_t = 100)]
        draws: usize,
        /// Sampler seed for the draw-based methods.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the limit of every configured method in every scenario.
    Limits {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = FormArg::Derived)]
        form: FormArg,
    },
    /// Run the full scenario grid and write CSV (and boxplot) files.
    Experiment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        reps: Option<usize>,
        /// Use 500 replications.
        #[arg(long, conflicts_with = "reps")]
        full: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; all cores when omitted.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        no_boxplots: bool,
    },
    /// Print the built-in default config.
    Config,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormArg {
    Derived,
    Printed,
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Simulate { common, scenario, rep, out } => {
            let cfg = common.load()?;
            let s = match &scenario {
                Some(id) => cfg.scenario(id)?,
                None => &cfg.scenarios[0],
            };
            let params = cfg.scenario_params(s)?;
            let factor = FactorCache::new().get(&params, cfg.run.psd_repair)?;
            if let Some(r) = &factor.repair {
                eprintln!(
                    "note: covariance repaired (min eigenvalue {:.4}, {} clipped, max change {:.4})",
                    r.min_eigenvalue, r.clipped, r.max_abs_change
                );
            }
            let data =
                Simulator::with_factor(params, factor)?.simulate(cfg.run.t_len, data_seed(cfg.run.seed, &s.id, rep))?;
            data.save(&out)?;
            eprintln!("wrote {} ({} voxels x {} samples)", out.display(), data.voxel_count(), data.t_len());
        }
        Cmd::Estimate { dataset, method, targets, donors, nu, delta, draws, seed } => {
            let data = Dataset64::load(&dataset).with_context(|| format!("loading {}", dataset.display()))?;
            let mut cfg = EstimatorConfig::new(method, targets[0], targets[1])
                .with_nu(nu)
                .with_draws(draws)
                .with_sampler_seed(seed);
            if method.needs_donors() {
                cfg = cfg.with_donors(donors[0], donors[1]);
            }
            if let Some(d) = delta {
                cfg = cfg.with_delta(d);
            }
            let e = estimate(&data, &cfg)?;
            println!("{method}\t{}\tdraws_used={}\tdiscarded={}", e.value, e.draws_used, e.discarded);
        }
        Cmd::Limits { common, form } => {
            let mut cfg = common.load()?;
            cfg.run.limit_form = match form {
                FormArg::Derived => LimitForm::Derived,
                FormArg::Printed => LimitForm::Printed,
            };
            println!("scenario_id,method,limit");
            for (id, m, l) in limit_table(&cfg)? {
                println!("{id},{m},{l}");
            }
        }
        Cmd::Experiment { common, reps, full, out, threads, no_boxplots } => {
            let mut cfg = common.load()?;
            if full {
                cfg.run.reps = 500;
            }
            if let Some(r) = reps {
                cfg.run.reps = r;
            }
            cfg.validate()?;
            let dir = out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build()?;
            let cache = FactorCache::new();
            let summaries = pool.install(|| run_experiment_with(&cfg, &cache, |s| eprintln!("done {}", s.id)))?;
            for r in cache.repairs() {
                eprintln!(
                    "note: a signal covariance was repaired (min eigenvalue {:.4}, {} clipped, max change {:.4})",
                    r.min_eigenvalue, r.clipped, r.max_abs_change
                );
            }
            let failed: usize = summaries.iter().map(|s| s.failed).sum();
            if failed > 0 {
                eprintln!("warning: {failed} estimates failed; see empty cells in estimates.csv");
            }
            for p in write_outputs(&summaries, &dir, cfg.output.boxplots && !no_boxplots, cfg.true_r())? {
                eprintln!("wrote {}", p.display());
            }
        }
        Cmd::Config => print!("{DEFAULT_CONFIG}"),
    }
    Ok(())
}
