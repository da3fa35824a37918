//! Domain types and integrators.
//!
//! The game state `(q1, q2)` evolves as
//!
//! ```text
//! q1' = alpha(t) + k * q2(t) - u1(t)
//! q2' = v(t) - u2(t)
//! ```
//!
//! with both components kept in the nonnegative orthant. Because the
//! coupling matrix is nilpotent, inputs held constant over a step give a
//! closed-form solution (linear in `q2`, quadratic in `q1`), so the
//! integrator in [`game`] propagates each step exactly.

mod fluid;
mod game;
mod types;

pub use fluid::{
    simulate_fluid, validate_allocation, AllocationError, AllocationViolation, FluidError,
    FluidNetworkModel, FluidOutcome, FluidTrajectory, Matrix,
};
pub use game::{simulate_game, step_game, Player, SimError};
pub use types::{
    ArrivalSample, AttackInput, ControlInput, GameParams, GameState, ModelError, Sample,
    SimSettings, Termination, Trajectory, ADMISSIBILITY_TOL,
};
