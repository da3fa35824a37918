//! Scenario files, commands and output formats for the `fluidgame` CLI.
//!
//! The numerics live in [`fluidgame_core`]; this crate only reads
//! scenarios, runs them and writes CSV, JSON and SVG files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod output;
pub mod scenario;

pub use commands::{cmd_check, cmd_compare, cmd_simulate, cmd_solve, CommandError, Outcome};
pub use scenario::{
    load_scenario, parse_scenario, write_scenario, Defaults, Scenario, ScenarioError,
};

use std::path::PathBuf;

use scenario::AttackerSpec;

/// Command-line overrides applied on top of a loaded scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub svg: bool,
    /// Replaces the stochastic seed and the seed of a random attacker.
    pub seed: Option<u64>,
    pub dt: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, scenario: &mut Scenario) -> Result<(), ScenarioError> {
        if let Some(dir) = &self.out {
            scenario.output.dir = dir.clone();
        }
        if self.svg {
            scenario.output.svg = true;
        }
        if let Some(seed) = self.seed {
            if let Some(st) = scenario.stochastic.as_mut() {
                st.seed = seed;
            }
            if let AttackerSpec::SeededRandom { seed: s, .. } = &mut scenario.attacker {
                *s = seed;
            }
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(ScenarioError::Validation {
                    field: "--dt".to_owned(),
                    reason: format!("must be finite and > 0, got {dt}"),
                });
            }
            scenario.sim.dt = dt;
        }
        Ok(())
    }
}
