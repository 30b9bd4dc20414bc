//! Rolling day-by-day simulation of a week, the four comparison cases and
//! their reports.

mod report;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RecConfig;
use crate::data::DataSet;
use crate::error::{invalid, Error, Result};
use crate::milp::{build_instance, check_solution, extract_plan, DayAheadModel, DayPlan, KnownPrices};
use crate::scenario::{build_price_scenarios, fit_dmc, reduce_scenarios, sample_scenarios};
use crate::settlement::{
    decide_acceptance, realtime_dispatch, settle, Acceptance, CashFlow, CashFlowReport, Dispatch,
    RealizedEnergies, SettlementPrices,
};
use crate::solver::{solve, write_instance, SolveRequest, INSTANCE_FILE};
use crate::types::ScenarioSet;

pub use report::{comparison_csv, write_comparison, write_week, REPORT_FILES};

/// Largest row violation tolerated in a solver result.
pub const AUDIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// Service market and sharing incentive.
    Base,
    /// Case 1: no service-market bids.
    NoMsd,
    /// Case 2: sharing incentive neglected.
    NoIncentive,
    /// Case 3: neither.
    Neither,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::Base, Case::NoMsd, Case::NoIncentive, Case::Neither];

    pub fn as_str(self) -> &'static str {
        match self {
            Case::Base => "base",
            Case::NoMsd => "no_msd",
            Case::NoIncentive => "no_incentive",
            Case::Neither => "neither",
        }
    }

    pub fn bids_allowed(self) -> bool {
        matches!(self, Case::Base | Case::NoIncentive)
    }

    pub fn incentive_paid(self) -> bool {
        matches!(self, Case::Base | Case::NoMsd)
    }

    /// The configuration the case plans and settles with.
    pub fn apply(self, config: &RecConfig) -> RecConfig {
        let mut c = config.clone();
        if !self.incentive_paid() {
            c.incentive_shared = 0.0;
        }
        c
    }
}

impl std::str::FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Case::Base),
            "no_msd" | "case1" => Ok(Case::NoMsd),
            "no_incentive" | "case2" => Ok(Case::NoIncentive),
            "neither" | "case3" => Ok(Case::Neither),
            _ => Err(invalid(format!(
                "unknown case {s:?}, expected base, no_msd, no_incentive or neither"
            ))),
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything one simulation run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub config: RecConfig,
    pub data: DataSet,
    pub case: Case,
    pub n_prices: usize,
    pub n_energies: usize,
    pub seed: u64,
    pub solve: SolveRequest,
    /// Days of price history forming the price scenarios.
    pub price_window_days: usize,
    /// Energy trajectories sampled before reduction.
    pub energy_samples: usize,
    pub dmc_bins: usize,
    /// Where instance and solution files of each day are written.
    pub work_dir: PathBuf,
}

impl RunSpec {
    /// Ten price and ten energy scenarios, a 30-day price window and 300
    /// sampled energy trajectories.
    pub fn new(config: RecConfig, data: DataSet, work_dir: impl Into<PathBuf>) -> Self {
        Self {
            config,
            data,
            case: Case::Base,
            n_prices: 10,
            n_energies: 10,
            seed: 1,
            solve: SolveRequest::default(),
            price_window_days: 30,
            energy_samples: 300,
            dmc_bins: 10,
            work_dir: work_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.config.horizon_hours != self.data.horizon {
            return Err(invalid(format!(
                "config horizon {} differs from data horizon {}",
                self.config.horizon_hours, self.data.horizon
            )));
        }
        if self.n_prices == 0 || self.n_energies == 0 {
            return Err(invalid("scenario counts must be at least 1"));
        }
        if self.price_window_days == 0 || self.energy_samples == 0 {
            return Err(invalid("price window and energy sample count must be at least 1"));
        }
        self.solve.validate()
    }

    /// Stream seed of simulated day `day`.
    pub fn day_seed(&self, day: usize) -> u64 {
        self.seed ^ (day as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
    }

    pub fn day_dir(&self, day: usize) -> PathBuf {
        self.work_dir.join(format!("day_{day:02}"))
    }

    pub fn with_case(&self, case: Case, work_dir: impl Into<PathBuf>) -> Self {
        Self {
            case,
            work_dir: work_dir.into(),
            ..self.clone()
        }
    }
}

/// Scenario sets and known prices for one simulated day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayInputs {
    pub prices: ScenarioSet,
    pub energies: ScenarioSet,
    pub known: KnownPrices,
}

/// Builds the day's scenarios from data strictly preceding it.
pub fn prepare_day(spec: &RunSpec, day: usize) -> Result<DayInputs> {
    spec.validate()?;
    let data = &spec.data;
    if day >= data.days() {
        return Err(invalid(format!("day {day} out of range, data covers {} days", data.days())));
    }
    let k = data.horizon;
    let price_days = data.prices_before(day, spec.price_window_days);
    let price_set = build_price_scenarios(&price_days, k)?;
    let prices = reduce_scenarios(&price_set, spec.n_prices.min(price_set.len()))?;

    let history = data.energy_before(day);
    let dmc = fit_dmc(&history, k, spec.dmc_bins)?;
    let sampled = sample_scenarios(&dmc, dmc.last_state(), spec.energy_samples, k, spec.day_seed(day))?;
    let energies = reduce_scenarios(&sampled, spec.n_energies.min(sampled.len()))?;
    let known = KnownPrices::new(data.week_export[day].clone(), data.week_import[day].clone(), k)?;
    Ok(DayInputs { prices, energies, known })
}

/// The day's model with the case toggles applied.
pub fn build_day_model(spec: &RunSpec, inputs: &DayInputs, soc_initial: f64) -> Result<DayAheadModel> {
    let config = spec.case.apply(&spec.config);
    let mut model = build_instance(&config, &inputs.prices, &inputs.energies, &inputs.known, soc_initial)?;
    if !spec.case.bids_allowed() {
        model.forbid_bids();
    }
    Ok(model)
}

/// Writes the day's instance without solving it.
pub fn emit_day(spec: &RunSpec, day: usize, soc_initial: f64) -> Result<PathBuf> {
    let inputs = prepare_day(spec, day)?;
    let model = build_day_model(spec, &inputs, soc_initial)?;
    write_instance(&model.instance, &spec.day_dir(day))
}

/// Plans one day, dispatches it against the realized data and settles it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayResult {
    pub day: usize,
    pub soc_initial: f64,
    pub plan: DayPlan,
    pub acceptance: Acceptance,
    pub dispatch: Dispatch,
    pub cashflow: CashFlowReport,
    pub penalty_sell: f64,
    pub penalty_buy: f64,
    pub realized_sell_max: Vec<f64>,
    pub realized_buy_min: Vec<f64>,
    /// Largest row violation of the solver result.
    pub max_row_violation: f64,
}

impl DayResult {
    pub fn soc_final(&self) -> f64 {
        self.dispatch.soc_final()
    }
}

pub fn run_day(spec: &RunSpec, day: usize, soc_initial: f64) -> Result<DayResult> {
    let inputs = prepare_day(spec, day)?;
    let model = build_day_model(spec, &inputs, soc_initial)?;
    let dir = spec.day_dir(day);
    let solution = solve(&model.instance, &spec.solve, &dir)?;
    if !solution.status.has_values() {
        return Err(Error::NoPlan {
            status: solution.status.to_string(),
            instance: dir.join(INSTANCE_FILE),
        });
    }
    check_solution(&model, &solution, AUDIT_TOLERANCE)?;
    let max_row_violation = crate::milp::audit(&model.instance, &solution.values).max_row_violation;
    let plan = extract_plan(&model, &solution)?;

    let data = &spec.data;
    let realized_prices = &data.week_prices[day];
    let acceptance = decide_acceptance(&plan.program.bids, &realized_prices.sell_max, &realized_prices.buy_min)?;
    let energy = data.realized_energy(day);
    let realized = RealizedEnergies {
        pv: energy.pv,
        load: energy.load,
        member_demand: energy.member_demand,
    };
    let config = &model.data.config;
    let dispatch = realtime_dispatch(&plan.program, &acceptance, &realized, config, soc_initial)?;
    let params = &model.data.params;
    let prices = SettlementPrices {
        export: data.week_export[day].clone(),
        import: data.week_import[day].clone(),
        penalty_sell: params.penalty_sell,
        penalty_buy: params.penalty_buy,
        incentive_shared: config.incentive_shared,
    };
    let cashflow = settle(&dispatch, &plan.program, &acceptance, &prices)?;
    Ok(DayResult {
        day,
        soc_initial,
        plan,
        acceptance,
        dispatch,
        cashflow,
        penalty_sell: params.penalty_sell,
        penalty_buy: params.penalty_buy,
        realized_sell_max: realized_prices.sell_max.clone(),
        realized_buy_min: realized_prices.buy_min.clone(),
        max_row_violation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeekReport {
    pub seed: u64,
    pub case: Case,
    pub days: Vec<DayResult>,
    pub total: CashFlow,
    /// Sum of the daily planned objectives.
    pub planned_objective: f64,
}

/// Runs every simulated day, seeding each with the previous realized terminal SOC.
pub fn run_week(spec: &RunSpec) -> Result<WeekReport> {
    spec.validate()?;
    let mut soc = spec.config.soc_initial;
    let mut days = Vec::with_capacity(spec.data.days());
    for day in 0..spec.data.days() {
        let r = run_day(spec, day, soc)?;
        soc = r.soc_final();
        days.push(r);
    }
    let total = CashFlow::sum(days.iter().map(|d| &d.cashflow.total));
    let planned_objective = days.iter().map(|d| d.plan.objective).sum();
    Ok(WeekReport {
        seed: spec.seed,
        case: spec.case,
        days,
        total,
        planned_objective,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub case: Case,
    pub net: f64,
    pub planned_objective: f64,
    /// Percent change of `net` relative to the case without either
    /// revenue stream; `None` when that net is zero.
    pub delta_vs_neither: Option<f64>,
    pub delta_vs_no_msd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub seed: u64,
    pub rows: Vec<ComparisonRow>,
    #[serde(skip)]
    pub weeks: Vec<WeekReport>,
}

fn percent(value: f64, reference: f64) -> Option<f64> {
    (reference != 0.0).then(|| (value - reference) / reference.abs() * 100.0)
}

/// Runs all four cases on the same data and seed; case `c` works in
/// `<work_dir>/<c>`.
pub fn compare_cases(spec: &RunSpec) -> Result<Comparison> {
    let weeks = Case::ALL
        .iter()
        .map(|&c| run_week(&spec.with_case(c, spec.work_dir.join(c.as_str()))))
        .collect::<Result<Vec<_>>>()?;
    Ok(comparison_of(spec.seed, weeks))
}

/// The comparison table of four weekly runs given in [`Case::ALL`] order.
pub fn comparison_of(seed: u64, weeks: Vec<WeekReport>) -> Comparison {
    let net = |c: Case| weeks.iter().find(|w| w.case == c).map_or(0.0, |w| w.total.net);
    let (neither, no_msd) = (net(Case::Neither), net(Case::NoMsd));
    let rows = weeks
        .iter()
        .map(|w| ComparisonRow {
            case: w.case,
            net: w.total.net,
            planned_objective: w.planned_objective,
            delta_vs_neither: percent(w.total.net, neither),
            delta_vs_no_msd: percent(w.total.net, no_msd),
        })
        .collect();
    Comparison { seed, rows, weeks }
}

/// Loads a configuration file, or the default plant when `path` is `None`.
pub fn load_config(path: Option<&Path>) -> Result<RecConfig> {
    match path {
        Some(p) => RecConfig::load(p),
        None => Ok(RecConfig::default()),
    }
}
