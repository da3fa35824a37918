//! The four CLI commands. Each takes a resolved scenario, writes its files
//! under the scenario's output directory and prints a short summary.

use std::io::Write;
use std::path::PathBuf;

use fluidgame_core::analysis::{self, verify_theorem, Verdict};
use fluidgame_core::model::SimError;
use fluidgame_core::pontryagin::{self, min_capture_time, PontryaginError};
use fluidgame_core::simulate_game;
use fluidgame_core::stochastic::{
    disturbance_stats, fluid_reference, free_window, simulate_stochastic, QueuePolicy,
    StochasticError,
};
use fluidgame_core::strategies::StrategyError;
use rayon::prelude::*;

use crate::output::{
    self, CheckReport, CompareReport, OutputError, SimulationReport, SolveReport, REPORT_VERSION,
};
use crate::scenario::{scenario_to_json, Scenario, ScenarioError};

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Success,
    /// A condition failed or the verifier rejected the run.
    Failed,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Failed => 2,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("cannot write to stdout: {0}")]
    Stdout(#[from] std::io::Error),
    #[error("simulation failed: {0}")]
    Simulation(SimError),
    #[error("solver failed: {0}")]
    Solver(PontryaginError),
    #[error("stochastic run failed: {0}")]
    Stochastic(#[from] StochasticError),
    #[error("scenario `{0}` has no `stochastic` section")]
    NoStochastic(String),
}

/// Files written by a command, in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

pub struct CommandResult {
    pub outcome: Outcome,
    pub written: Written,
}

struct Files<'a> {
    scenario: &'a Scenario,
    written: Written,
}

impl<'a> Files<'a> {
    fn open(scenario: &'a Scenario) -> Result<Self, CommandError> {
        output::ensure_dir(&scenario.output.dir)?;
        let mut files = Self {
            scenario,
            written: Written::default(),
        };
        let echo = files.path("scenario.json");
        output::write_text(&echo, &scenario_to_json(scenario))?;
        files.written.files.push(echo);
        Ok(files)
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.scenario
            .output
            .dir
            .join(format!("{}.{suffix}", self.scenario.name))
    }

    fn record(&mut self, path: PathBuf) {
        self.written.files.push(path);
    }

    fn finish(self, outcome: Outcome) -> CommandResult {
        CommandResult {
            outcome,
            written: self.written,
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.6}"))
}

fn yes_no(ok: bool) -> &'static str {
    if ok {
        "holds"
    } else {
        "fails"
    }
}

pub fn cmd_check(scenario: &Scenario, out: &mut impl Write) -> Result<CommandResult, CommandError> {
    let mut files = Files::open(scenario)?;
    let params = &scenario.params;
    let q0 = scenario.initial_state();
    let c1 = pontryagin::condition1(params);
    let c2 = pontryagin::condition2(params, &q0).unwrap_or(false);
    let report = CheckReport {
        format: "fluidgame-check",
        version: REPORT_VERSION,
        scenario: &scenario.name,
        epsilon: params.epsilon(),
        condition1: c1,
        condition2: c2,
        t2_star: analysis::t2_star(&q0, params).ok(),
        q1_peak_bound: analysis::q1_peak_bound(&q0, params).ok(),
        t1_bound: analysis::t1_bound(&q0, params).ok(),
    };
    writeln!(out, "scenario      {}", scenario.name)?;
    writeln!(out, "epsilon       {:.6}", report.epsilon)?;
    writeln!(out, "condition 1   {}", yes_no(c1))?;
    writeln!(out, "condition 2   {}", yes_no(c2))?;
    writeln!(out, "t2_star       {}", fmt_opt(report.t2_star))?;
    writeln!(out, "q1_peak_bound {}", fmt_opt(report.q1_peak_bound))?;
    writeln!(out, "t1_bound      {}", fmt_opt(report.t1_bound))?;
    let path = files.path("check.json");
    output::write_json(&path, &report)?;
    files.record(path);
    Ok(files.finish(if c1 && c2 {
        Outcome::Success
    } else {
        Outcome::Failed
    }))
}

pub fn cmd_simulate(
    scenario: &Scenario,
    out: &mut impl Write,
) -> Result<CommandResult, CommandError> {
    let mut files = Files::open(scenario)?;
    let q0 = scenario.initial_state();
    let attacker = scenario.attacker_strategy()?;
    let arrival = scenario.arrival_profile()?;
    let mut defender = scenario.defender_strategy();
    let traj = match simulate_game(
        &scenario.params,
        &q0,
        &scenario.sim,
        &mut defender,
        &attacker,
        &arrival,
    ) {
        Ok(traj) => traj,
        Err(SimError::Strategy(err @ StrategyError::Condition1Violated { .. })) => {
            writeln!(out, "refused: {err}")?;
            return Ok(files.finish(Outcome::Failed));
        }
        Err(err) => return Err(CommandError::Simulation(err)),
    };
    let theorem = verify_theorem(&traj, &q0, &scenario.params, scenario.sim.tol);

    let csv_path = files.path("trajectory.csv");
    output::write_trajectory_csv(&csv_path, &traj)?;
    files.record(csv_path);
    let report = SimulationReport {
        format: "fluidgame-simulation",
        version: REPORT_VERSION,
        scenario: &scenario.name,
        defender: traj.defender,
        dt: scenario.sim.dt,
        samples: traj.samples.len(),
        termination: traj.termination,
        theorem,
    };
    let report_path = files.path("report.json");
    output::write_json(&report_path, &report)?;
    files.record(report_path);
    if scenario.output.svg {
        let svg_path = files.path("trajectory.svg");
        output::write_text(
            &svg_path,
            &output::render_svg(&scenario.name, &traj, scenario.params.q1_max),
        )?;
        files.record(svg_path);
    }

    writeln!(out, "scenario      {}", scenario.name)?;
    writeln!(out, "samples       {}", traj.samples.len())?;
    writeln!(out, "termination   {}", describe(&traj.termination))?;
    writeln!(out, "peak q1       {:.6}", theorem.q1_peak_observed)?;
    writeln!(out, "t2 observed   {}", fmt_opt(theorem.t2_observed))?;
    writeln!(out, "verdict       {:?}", theorem.verdict)?;
    let outcome = match theorem.verdict {
        Verdict::Verified | Verdict::NotApplicable => Outcome::Success,
        _ => Outcome::Failed,
    };
    Ok(files.finish(outcome))
}

fn describe(t: &fluidgame_core::model::Termination) -> String {
    use fluidgame_core::model::Termination;
    match t {
        Termination::Drained { t } => format!("drained at t = {t:.6}"),
        Termination::Overflow { t, q1 } => format!("overflow at t = {t:.6} (q1 = {q1:.6})"),
        Termination::HorizonReached => "horizon reached".to_owned(),
    }
}

pub fn cmd_solve(scenario: &Scenario, out: &mut impl Write) -> Result<CommandResult, CommandError> {
    let mut files = Files::open(scenario)?;
    let q0 = scenario.initial_state();
    let search = scenario.capture_search();
    let capture = match min_capture_time(&q0, &scenario.params, &search) {
        Ok(c) => c,
        Err(err @ PontryaginError::Condition1Violated { .. }) => {
            writeln!(out, "refused: {err}")?;
            return Ok(files.finish(Outcome::Failed));
        }
        Err(err) => return Err(CommandError::Solver(err)),
    };
    let report = SolveReport {
        format: "fluidgame-solve",
        version: REPORT_VERSION,
        scenario: &scenario.name,
        n_dirs: scenario.solver.n_dirs,
        n_quad: scenario.solver.n_quad,
        tol_t: scenario.solver.tol_t,
        horizon: search.horizon,
        capture,
        t2_star: q0.q2 / scenario.params.epsilon(),
    };
    match capture.time {
        Some(t) => writeln!(out, "capture time  {t:.6}")?,
        None => writeln!(out, "capture time  none within horizon {}", search.horizon)?,
    }
    writeln!(out, "t2_star       {:.6}", report.t2_star)?;
    writeln!(
        out,
        "grid          {} directions, {} quadrature nodes, tol_t {}",
        report.n_dirs, report.n_quad, report.tol_t
    )?;
    writeln!(out, "monotone      {}", capture.monotone)?;
    writeln!(out, "evaluations   {}", capture.evaluations)?;
    let path = files.path("solve.json");
    output::write_json(&path, &report)?;
    files.record(path);
    Ok(files.finish(Outcome::Success))
}

pub fn cmd_compare(
    scenario: &Scenario,
    out: &mut impl Write,
) -> Result<CommandResult, CommandError> {
    let settings = scenario
        .stochastic
        .ok_or_else(|| CommandError::NoStochastic(scenario.name.clone()))?;
    let mut files = Files::open(scenario)?;
    let params = settings.params();
    let horizon = settings.horizon_slots;
    // Run i uses seed + i regardless of scheduling; collect keeps run order.
    let paths = (0..params.n_runs)
        .into_par_iter()
        .map(|i| {
            simulate_stochastic(
                &params,
                QueuePolicy::NonIdling,
                horizon,
                params.seed.wrapping_add(i as u64),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let fluid = fluid_reference(&params, horizon)?;
    let stats = disturbance_stats(&paths, &fluid, params.slot_dt)?;
    let summary = stats.summarize(free_window(&params, &fluid));

    let csv_path = files.path("compare.csv");
    output::write_compare_csv(&csv_path, &stats)?;
    files.record(csv_path);
    let report = CompareReport {
        format: "fluidgame-compare",
        version: REPORT_VERSION,
        scenario: &scenario.name,
        n_runs: params.n_runs,
        seed: params.seed,
        horizon_slots: horizon,
        slot_dt: params.slot_dt,
        effective_service_rate: params.effective_service_rate(),
        variance_rate: params.disturbance_variance_rate(),
        summary,
    };
    let path = files.path("compare.json");
    output::write_json(&path, &report)?;
    files.record(path);

    writeln!(out, "scenario      {}", scenario.name)?;
    writeln!(
        out,
        "runs          {} (seed {})",
        params.n_runs, params.seed
    )?;
    writeln!(out, "slots         {horizon}")?;
    writeln!(
        out,
        "free window   slots {}..{}",
        summary.window_start, summary.window_end
    )?;
    writeln!(out, "sup |mean N|  {:.6}", summary.sup_abs_mean)?;
    writeln!(out, "max |z|       {:.3}", summary.max_abs_z)?;
    match summary.var_fit {
        Some(fit) => writeln!(
            out,
            "var slope     {:.6} (R^2 {:.4}, reference {:.6})",
            fit.slope,
            fit.r_squared,
            params.disturbance_variance_rate()
        )?,
        None => writeln!(out, "var slope     n/a")?,
    }
    Ok(files.finish(Outcome::Success))
}
