//! Scenario files: a versioned JSON document describing one experiment.
//!
//! Every optional field is resolved on load, so a loaded [`Scenario`]
//! written back with [`write_scenario`] is fully explicit and loads to the
//! same value.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use fluidgame_core::model::{GameParams, GameState, ModelError, SimSettings};
use fluidgame_core::pontryagin::{CaptureSearch, DirectionGrid, DEFAULT_N_DIRS, DEFAULT_N_QUAD};
use fluidgame_core::stochastic::StochasticParams;
use fluidgame_core::strategies::{
    ArrivalProfile, AttackerStrategy, DefenderStrategy, PiecewiseLinear, StrategyError,
};
use serde::{Deserialize, Serialize};

pub const SCENARIO_VERSION: u32 = 1;
/// Environment variable overriding the default termination tolerance.
pub const TOL_ENV: &str = "FLUIDGAME_DEFAULT_TOL";
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_MAX: f64 = 100.0;
pub const DEFAULT_TOL_T: f64 = 1e-4;
pub const DEFAULT_RANDOM_HOLD: f64 = 0.1;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("parse error at line {line}, column {column} (at `{field}`): {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("invalid scenario: `{field}` {reason}")]
    Validation { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub q1: f64,
    pub q2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DefenderSpec {
    Theorem,
    NonIdling,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackerSpec {
    ConstantMax,
    Zero,
    Pulse {
        period: f64,
        duty: f64,
    },
    SeededRandom {
        seed: u64,
        #[serde(default)]
        hold: Option<f64>,
    },
    Trace {
        points: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalSpec {
    Constant {
        #[serde(default)]
        level: Option<f64>,
    },
    Sinusoid {
        mean: f64,
        amplitude: f64,
        period: f64,
    },
    Trace {
        points: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub n_dirs: usize,
    pub n_quad: usize,
    pub tol_t: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticSettings {
    pub arrival_mean: f64,
    pub service_rate: f64,
    pub slot_dt: f64,
    pub initial_queue: u64,
    pub n_runs: usize,
    pub seed: u64,
    pub horizon_slots: usize,
}

impl StochasticSettings {
    pub fn params(&self) -> StochasticParams {
        StochasticParams {
            arrival_mean: self.arrival_mean,
            service_rate: self.service_rate,
            slot_dt: self.slot_dt,
            initial_queue: self.initial_queue,
            n_runs: self.n_runs,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub svg: bool,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    pub params: GameParams,
    pub q0: InitialState,
    pub defender: DefenderSpec,
    pub attacker: AttackerSpec,
    pub arrival: ArrivalSpec,
    pub sim: SimSettings,
    pub solver: SolverSettings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stochastic: Option<StochasticSettings>,
    pub output: OutputSettings,
}

// On-disk form: everything optional so that missing fields can be named
// precisely and defaults filled in.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    version: Option<u32>,
    name: Option<String>,
    params: Option<RawParams>,
    q0: Option<RawInitial>,
    defender: Option<DefenderSpec>,
    attacker: Option<AttackerSpec>,
    arrival: Option<ArrivalSpec>,
    sim: Option<RawSim>,
    solver: Option<RawSolver>,
    stochastic: Option<RawStochastic>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    mu: Option<f64>,
    nu: Option<f64>,
    alpha_max: Option<f64>,
    k: Option<f64>,
    q1_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    q1: Option<f64>,
    q2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt: Option<f64>,
    t_max: Option<f64>,
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    n_dirs: Option<usize>,
    n_quad: Option<usize>,
    tol_t: Option<f64>,
    horizon: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStochastic {
    arrival_mean: Option<f64>,
    service_rate: Option<f64>,
    slot_dt: Option<f64>,
    initial_queue: Option<u64>,
    n_runs: Option<usize>,
    seed: Option<u64>,
    horizon_slots: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    svg: Option<bool>,
}

/// Values used when a scenario leaves a field out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defaults {
    pub tol: f64,
}

impl Default for Defaults {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL }
    }
}

impl Defaults {
    /// Defaults with `FLUIDGAME_DEFAULT_TOL` applied when set.
    pub fn from_env() -> Result<Self, ScenarioError> {
        match std::env::var(TOL_ENV) {
            Ok(raw) => {
                let tol: f64 = raw
                    .trim()
                    .parse()
                    .map_err(|_| invalid(TOL_ENV, format!("is not a number: {raw:?}")))?;
                if !(tol.is_finite() && tol > 0.0) {
                    return Err(invalid(TOL_ENV, "must be finite and > 0"));
                }
                Ok(Self { tol })
            }
            Err(_) => Ok(Self::default()),
        }
    }
}

fn required(value: Option<f64>, field: &str) -> Result<f64, ScenarioError> {
    value.ok_or_else(|| invalid(field, "is missing"))
}

fn model_error(prefix: &str, err: ModelError) -> ScenarioError {
    match err {
        ModelError::InvalidParam { field, reason } => invalid(format!("{prefix}.{field}"), reason),
        ModelError::InvalidState { field, reason } => invalid(format!("{prefix}.{field}"), reason),
        other => invalid(prefix, other.to_string()),
    }
}

fn strategy_error(field: &str, err: StrategyError) -> ScenarioError {
    invalid(field, err.to_string())
}

fn trace(points: &[[f64; 2]], field: &str) -> Result<PiecewiseLinear, ScenarioError> {
    PiecewiseLinear::new(points.iter().map(|p| (p[0], p[1])).collect())
        .map_err(|e| strategy_error(field, e))
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str, defaults: &Defaults) -> Result<Scenario, ScenarioError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let field = err.path().to_string();
        let inner = err.into_inner();
        ScenarioError::Parse {
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })?;
    resolve(raw, defaults)
}

/// Reads, parses and validates a scenario file, with defaults taken from
/// the environment.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut scenario = parse_scenario(&text, &Defaults::from_env()?)?;
    if scenario.name.is_empty() {
        scenario.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".to_owned());
    }
    Ok(scenario)
}

/// Pretty JSON of a resolved scenario.
pub fn scenario_to_json(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(scenario).expect("scenario serializes") + "\n"
}

pub fn write_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> io::Result<()> {
    fs::write(path, scenario_to_json(scenario))
}

fn resolve(raw: RawScenario, defaults: &Defaults) -> Result<Scenario, ScenarioError> {
    let version = raw.version.unwrap_or(SCENARIO_VERSION);
    if version != SCENARIO_VERSION {
        return Err(invalid(
            "version",
            format!("must be {SCENARIO_VERSION}, got {version}"),
        ));
    }

    let rp = raw.params.ok_or_else(|| invalid("params", "is missing"))?;
    let params = GameParams {
        mu: required(rp.mu, "params.mu")?,
        nu: required(rp.nu, "params.nu")?,
        alpha_max: required(rp.alpha_max, "params.alpha_max")?,
        k: required(rp.k, "params.k")?,
        q1_max: required(rp.q1_max, "params.q1_max")?,
    };
    params.validate().map_err(|e| model_error("params", e))?;

    let rq = raw.q0.ok_or_else(|| invalid("q0", "is missing"))?;
    let q0 = InitialState {
        q1: required(rq.q1, "q0.q1")?,
        q2: required(rq.q2, "q0.q2")?,
    };
    GameState::initial(q0.q1, q0.q2)
        .validate(&params)
        .map_err(|e| model_error("q0", e))?;

    let defender = raw.defender.unwrap_or(DefenderSpec::Theorem);

    let attacker = match raw.attacker.unwrap_or(AttackerSpec::ConstantMax) {
        AttackerSpec::SeededRandom { seed, hold } => AttackerSpec::SeededRandom {
            seed,
            hold: Some(hold.unwrap_or(DEFAULT_RANDOM_HOLD)),
        },
        other => other,
    };

    let arrival = match raw.arrival.unwrap_or(ArrivalSpec::Constant { level: None }) {
        ArrivalSpec::Constant { level } => {
            let level = level.unwrap_or(params.alpha_max);
            if !(level >= 0.0 && level <= params.alpha_max) {
                return Err(invalid("arrival.level", "must lie in [0, alpha_max]"));
            }
            ArrivalSpec::Constant { level: Some(level) }
        }
        other => other,
    };

    let rs = raw.sim.unwrap_or_default();
    let sim = SimSettings {
        dt: rs.dt.unwrap_or(DEFAULT_DT),
        t_max: rs.t_max.unwrap_or(DEFAULT_T_MAX),
        tol: rs.tol.unwrap_or(defaults.tol),
    };
    sim.validate().map_err(|e| model_error("sim", e))?;

    let rsol = raw.solver.unwrap_or_default();
    let tol_t = rsol.tol_t.unwrap_or(DEFAULT_TOL_T);
    if !(tol_t.is_finite() && tol_t > 0.0) {
        return Err(invalid("solver.tol_t", "must be finite and > 0"));
    }
    let solver = SolverSettings {
        n_dirs: rsol.n_dirs.unwrap_or(DEFAULT_N_DIRS),
        n_quad: rsol.n_quad.unwrap_or(DEFAULT_N_QUAD),
        tol_t,
        horizon: rsol.horizon.unwrap_or(1e6 * tol_t),
    };
    if solver.n_dirs < 8 {
        return Err(invalid("solver.n_dirs", "must be >= 8"));
    }
    if solver.n_quad < 2 {
        return Err(invalid("solver.n_quad", "must be >= 2"));
    }
    if !(solver.horizon.is_finite() && solver.horizon > 0.0) {
        return Err(invalid("solver.horizon", "must be finite and > 0"));
    }

    let stochastic = raw.stochastic.map(resolve_stochastic).transpose()?;

    let ro = raw.output.unwrap_or_default();
    let output = OutputSettings {
        dir: ro.dir.unwrap_or_else(|| PathBuf::from("out")),
        svg: ro.svg.unwrap_or(false),
    };

    let scenario = Scenario {
        version,
        name: raw.name.unwrap_or_default(),
        params,
        q0,
        defender,
        attacker,
        arrival,
        sim,
        solver,
        stochastic,
        output,
    };
    // Surfaces invalid strategy parameters now rather than mid-run.
    scenario.attacker_strategy()?;
    scenario.arrival_profile()?;
    Ok(scenario)
}

fn resolve_stochastic(rs: RawStochastic) -> Result<StochasticSettings, ScenarioError> {
    let arrival_mean = required(rs.arrival_mean, "stochastic.arrival_mean")?;
    let service_rate = required(rs.service_rate, "stochastic.service_rate")?;
    let initial_queue = rs
        .initial_queue
        .ok_or_else(|| invalid("stochastic.initial_queue", "is missing"))?;
    let slot_dt = rs.slot_dt.unwrap_or(1.0);
    let mut settings = StochasticSettings {
        arrival_mean,
        service_rate,
        slot_dt,
        initial_queue,
        n_runs: rs.n_runs.unwrap_or(1000),
        seed: rs.seed.unwrap_or(1),
        horizon_slots: 0,
    };
    settings.params().validate().map_err(|e| match e {
        fluidgame_core::stochastic::StochasticError::InvalidParam { field, reason } => {
            invalid(format!("stochastic.{field}"), reason)
        }
        other => invalid("stochastic", other.to_string()),
    })?;
    settings.horizon_slots = match rs.horizon_slots {
        Some(h) if h >= 1 => h,
        Some(_) => return Err(invalid("stochastic.horizon_slots", "must be >= 1")),
        None => default_horizon_slots(&settings),
    };
    Ok(settings)
}

// One and a half fluid drain times, or 200 slots when the queue never drains.
fn default_horizon_slots(s: &StochasticSettings) -> usize {
    let p = s.params();
    let net = p.effective_service_rate() - p.arrival_mean;
    if net > 0.0 {
        let drain_slots = s.initial_queue as f64 / net / s.slot_dt;
        (1.5 * drain_slots).ceil() as usize + 10
    } else {
        200
    }
}

impl Scenario {
    pub fn initial_state(&self) -> GameState {
        GameState::initial(self.q0.q1, self.q0.q2)
    }

    pub fn defender_strategy(&self) -> DefenderStrategy {
        match self.defender {
            DefenderSpec::Theorem => DefenderStrategy::theorem(self.sim.tol),
            DefenderSpec::NonIdling => DefenderStrategy::NonIdling,
            DefenderSpec::Zero => DefenderStrategy::Zero,
        }
    }

    pub fn attacker_strategy(&self) -> Result<AttackerStrategy, ScenarioError> {
        let strategy = match &self.attacker {
            AttackerSpec::ConstantMax => AttackerStrategy::ConstantMax,
            AttackerSpec::Zero => AttackerStrategy::Zero,
            AttackerSpec::Pulse { period, duty } => AttackerStrategy::Pulse {
                period: *period,
                duty: *duty,
            },
            AttackerSpec::SeededRandom { seed, hold } => AttackerStrategy::SeededRandom {
                seed: *seed,
                hold: hold.unwrap_or(DEFAULT_RANDOM_HOLD),
            },
            AttackerSpec::Trace { points } => {
                AttackerStrategy::PiecewiseTrace(trace(points, "attacker.points")?)
            }
        };
        strategy
            .validate()
            .map_err(|e| strategy_error("attacker", e))?;
        Ok(strategy)
    }

    pub fn arrival_profile(&self) -> Result<ArrivalProfile, ScenarioError> {
        let profile = match &self.arrival {
            ArrivalSpec::Constant { level } => ArrivalProfile::Constant {
                level: level.unwrap_or(self.params.alpha_max),
            },
            ArrivalSpec::Sinusoid {
                mean,
                amplitude,
                period,
            } => ArrivalProfile::SinusoidClipped {
                mean: *mean,
                amplitude: *amplitude,
                period: *period,
            },
            ArrivalSpec::Trace { points } => {
                ArrivalProfile::PiecewiseLinearTrace(trace(points, "arrival.points")?)
            }
        };
        profile
            .validate()
            .map_err(|e| strategy_error("arrival", e))?;
        Ok(profile)
    }

    pub fn capture_search(&self) -> CaptureSearch {
        let mut search = CaptureSearch::new(
            DirectionGrid::new(self.solver.n_dirs).expect("validated on load"),
            self.solver.n_quad,
            self.solver.tol_t,
        );
        search.horizon = self.solver.horizon;
        search
    }
}
