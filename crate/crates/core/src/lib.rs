//! Conflict-controlled single-server fluid queue.
//!
//! A defender splits a service capacity `mu` between serving the queue and
//! suppressing an attacker whose power level feeds extra load into the
//! queue. This crate holds everything that is pure computation:
//!
//! * [`model`]: state types, the exact fixed-step integrator for the game
//!   and for general linear fluid networks.
//! * [`strategies`]: the two-phase switching defender, the non-idling
//!   policy, attacker strategies and arrival profiles.
//! * [`pontryagin`]: control-set polytopes, the Pontryagin map and the
//!   set-integral membership test with capture-time search.
//! * [`stochastic`]: the slotted random queue and its disturbance around
//!   the fluid mean flow.
//! * [`analysis`]: closed-form bounds and a verifier that checks a
//!   simulated trajectory against them.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]
// Ranges read better than `contains` in the admissibility checks.
#![allow(clippy::manual_range_contains)]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod model;
pub mod numeric;
pub mod pontryagin;
pub mod stochastic;
pub mod strategies;

pub use analysis::{TheoremReport, Verdict};
pub use model::{
    simulate_game, step_game, ArrivalSample, AttackInput, ControlInput, GameParams, GameState,
    ModelError, Player, Sample, SimError, SimSettings, Termination, Trajectory,
};
pub use pontryagin::{DirectionGrid, Polytope2, Vec2};
pub use strategies::{ArrivalProfile, AttackerStrategy, DefenderKind, DefenderStrategy};
