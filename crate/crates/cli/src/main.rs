use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use recbid::data::DataSet;
use recbid::sim::{
    comparison_csv, compare_cases, emit_day, load_config, run_day, run_week, write_comparison, write_week,
    Case, RunSpec, WeekReport,
};
use recbid::settlement::CashFlow;
use recbid::solver::{Backend, SolveRequest, DEFAULT_BINARY_LIMIT};
use recbid::synthetic::{synthetic_dataset, SyntheticSpec};

/// Day-ahead bidding of an energy community on a pay-as-bid service market.
#[derive(Parser)]
#[command(name = "recbid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan, dispatch and settle one day.
    Plan {
        #[command(flatten)]
        run: RunArgs,
        /// Index of the simulated day.
        #[arg(long, default_value_t = 0)]
        day: usize,
        /// Initial SOC, default from the configuration.
        #[arg(long)]
        soc: Option<f64>,
    },
    /// Simulate every day of the data set, chaining realized SOC.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Simulate the base case and the three restricted cases.
    Compare {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write one day's instance without solving it.
    Emit {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 0)]
        day: usize,
        #[arg(long)]
        soc: Option<f64>,
    },
    /// Write a seeded synthetic data directory.
    Synth {
        #[arg(long, default_value_t = 2022)]
        seed: u64,
        #[arg(long, default_value_t = 35)]
        history_days: usize,
        #[arg(long, default_value_t = 7)]
        days: usize,
        #[arg(long, default_value = "data/synthetic")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON plant configuration; the default plant when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "data/synthetic")]
    data_dir: PathBuf,
    /// base, no_msd, no_incentive or neither.
    #[arg(long, default_value = "base")]
    case: Case,
    /// Price scenarios kept after reduction.
    #[arg(long, default_value_t = 10)]
    nm: usize,
    /// Energy scenarios kept after reduction.
    #[arg(long, default_value_t = 10)]
    nr: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// external (CBC-compatible, see REC_SOLVER_CMD) or reference.
    #[arg(long, default_value = "external")]
    backend: Backend,
    /// Solver time limit per day in seconds.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
    /// Largest binary count the reference backend accepts.
    #[arg(long, default_value_t = DEFAULT_BINARY_LIMIT)]
    binary_limit: usize,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

impl RunArgs {
    fn spec(&self) -> Result<RunSpec> {
        let config = load_config(self.config.as_deref())
            .with_context(|| format!("loading configuration {:?}", self.config))?;
        let data = DataSet::load_dir(&self.data_dir, config.horizon_hours)
            .with_context(|| format!("loading data from {}", self.data_dir.display()))?;
        let mut spec = RunSpec::new(config, data, &self.out_dir);
        spec.case = self.case;
        spec.n_prices = self.nm;
        spec.n_energies = self.nr;
        spec.seed = self.seed;
        spec.solve = SolveRequest {
            backend: self.backend,
            time_limit_s: self.time_limit,
            rel_gap: self.gap,
            binary_limit: self.binary_limit,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn print_total(label: &str, t: &CashFlow) {
    println!(
        "{label:<14} net {:>10.2} EUR  energy {:>9.2}  shared {:>8.2}  msd {:>8.2}  penalties {:>7.2}",
        t.net,
        t.export_revenue - t.import_cost,
        t.shared_incentive,
        t.msd_sell_revenue - t.msd_buy_cost,
        t.penalty_sell - t.penalty_buy_refund,
    );
}

fn print_week(report: &WeekReport) {
    for d in &report.days {
        print_total(&format!("day {}", d.day), &d.cashflow.total);
    }
    print_total(report.case.as_str(), &report.total);
}

fn soc_or_default(spec: &RunSpec, soc: Option<f64>) -> f64 {
    soc.unwrap_or(spec.config.soc_initial)
}

fn write_synthetic(seed: u64, history_days: usize, days: usize, out: &Path) -> Result<()> {
    let spec = SyntheticSpec {
        seed,
        history_days,
        week_days: days,
        ..SyntheticSpec::default()
    };
    synthetic_dataset(&spec)?.write_dir(out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Plan { run, day, soc } => {
            let spec = run.spec()?;
            let result = run_day(&spec, day, soc_or_default(&spec, soc))?;
            let report = WeekReport {
                seed: spec.seed,
                case: spec.case,
                total: result.cashflow.total,
                planned_objective: result.plan.objective,
                days: vec![result],
            };
            write_week(&report, &spec, &run.out_dir)?;
            println!("planned objective {:.4} EUR", report.planned_objective);
            print_week(&report);
        }
        Command::Simulate { run } => {
            let spec = run.spec()?;
            let report = run_week(&spec)?;
            write_week(&report, &spec, &run.out_dir)?;
            print_week(&report);
        }
        Command::Compare { run } => {
            let spec = run.spec()?;
            let cmp = compare_cases(&spec)?;
            for week in &cmp.weeks {
                let case_spec = spec.with_case(week.case, run.out_dir.join(week.case.as_str()));
                write_week(week, &case_spec, &case_spec.work_dir)?;
            }
            write_comparison(&cmp, &run.out_dir)?;
            print!("{}", comparison_csv(&cmp)?);
        }
        Command::Emit { run, day, soc } => {
            let spec = run.spec()?;
            let path = emit_day(&spec, day, soc_or_default(&spec, soc))?;
            println!("wrote {}", path.display());
        }
        Command::Synth {
            seed,
            history_days,
            days,
            out_dir,
        } => write_synthetic(seed, history_days, days, &out_dir)?,
    }
    Ok(())
}
