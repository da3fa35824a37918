use alloc::vec::Vec;
use core::fmt;

use super::types::{
    ArrivalSample, AttackInput, ControlInput, GameParams, GameState, ModelError, Sample,
    SimSettings, Termination, Trajectory,
};
use crate::numeric::linear_crossing;
use crate::strategies::{
    ArrivalProfile, AttackerStrategy, DefenderStrategy, Observation, StrategyError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    Defender,
    Attacker,
    Arrival,
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Defender => "defender",
            Player::Attacker => "attacker",
            Player::Arrival => "arrival profile",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{player} emitted an inadmissible input at t = {t}: {detail}")]
    StrategyFault {
        player: Player,
        t: f64,
        detail: &'static str,
    },
    #[error("defender strategy unavailable: {0}")]
    Strategy(#[from] StrategyError),
}

fn check_finite(values: &[(f64, &'static str)]) -> Result<(), ModelError> {
    for &(x, name) in values {
        if !x.is_finite() {
            return Err(ModelError::NonFinite(name));
        }
    }
    Ok(())
}

/// Advances the game by one step of length `dt` with inputs held constant.
///
/// The step is exact: `q2` follows a line clamped at zero, and `q1` is the
/// free quadratic path reflected at zero (a component sitting at zero with a
/// negative derivative stays there).
pub fn step_game(
    state: &GameState,
    u: ControlInput,
    v: AttackInput,
    a: ArrivalSample,
    dt: f64,
    params: &GameParams,
) -> Result<GameState, ModelError> {
    check_finite(&[
        (state.t, "state.t"),
        (state.q1, "state.q1"),
        (state.q2, "state.q2"),
        (u.u1, "u.u1"),
        (u.u2, "u.u2"),
        (v.v, "v"),
        (a.alpha, "alpha"),
        (dt, "dt"),
        (params.k, "params.k"),
    ])?;
    if dt <= 0.0 {
        return Err(ModelError::NonPositiveStep(dt));
    }

    let k = params.k;
    let q1 = state.q1.max(0.0);
    let q2 = state.q2.max(0.0);
    let drift1 = a.alpha - u.u1;
    let drift2 = v.v - u.u2;

    // Time at which q2 reaches zero; it stays there afterwards.
    let hit = if drift2 < 0.0 {
        q2 / -drift2
    } else {
        f64::INFINITY
    };
    let q2_area = |s: f64| {
        let s = s.min(hit);
        q2 * s + 0.5 * drift2 * s * s
    };
    let free_q1 = |s: f64| q1 + drift1 * s + k * q2_area(s);

    // Minimum of the free q1 path over [0, dt]: endpoints, the q2 kink and
    // the stationary point of the quadratic piece.
    let mut lowest = q1.min(free_q1(dt));
    if hit < dt {
        lowest = lowest.min(free_q1(hit));
    }
    if k * drift2 != 0.0 {
        let s = -(drift1 + k * q2) / (k * drift2);
        if s > 0.0 && s < dt.min(hit) {
            lowest = lowest.min(free_q1(s));
        }
    }

    let q1_next = (free_q1(dt) - lowest.min(0.0)).max(0.0);
    let q2_next = if hit <= dt {
        0.0
    } else {
        (q2 + drift2 * dt).max(0.0)
    };
    Ok(GameState::new(state.t + dt, q1_next, q2_next))
}

fn fault(player: Player, t: f64, detail: &'static str) -> SimError {
    SimError::StrategyFault { player, t, detail }
}

/// Plays the game from `q0` until the terminal set is reached, the queue
/// overflows, or the horizon `t_max` (measured from `q0.t`) is hit.
///
/// At every step the arrival rate and the attacker's input are evaluated
/// first; the defender then sees `(t, q, v, alpha)` and responds. Inputs are
/// held over the step.
pub fn simulate_game(
    params: &GameParams,
    q0: &GameState,
    settings: &SimSettings,
    defender: &mut DefenderStrategy,
    attacker: &AttackerStrategy,
    arrival: &ArrivalProfile,
) -> Result<Trajectory, SimError> {
    params.validate()?;
    settings.validate()?;
    q0.validate(params)?;

    let SimSettings { dt, t_max, tol } = *settings;
    let t0 = q0.t;
    let t_end = t0 + t_max;
    let overflow_level = params.q1_max + tol;

    let mut samples = Vec::new();
    let mut state = *q0;
    let mut prev: Option<GameState> = None;
    let mut step: u64 = 0;

    let termination = loop {
        let t = state.t;
        let a = arrival.emit(t, params);
        if !a.is_admissible(params) {
            return Err(fault(Player::Arrival, t, "alpha outside [0, alpha_max]"));
        }
        let v = attacker.emit(t, &state, params);
        if !v.is_admissible(params) {
            return Err(fault(Player::Attacker, t, "v outside [0, nu]"));
        }
        let obs = Observation {
            t,
            state,
            v,
            alpha: a,
        };
        let u = defender.control(&obs, params)?;
        if !u.is_admissible(params) {
            return Err(fault(
                Player::Defender,
                t,
                "u violates u1, u2 >= 0 and u1 + u2 <= mu",
            ));
        }
        samples.push(Sample {
            state,
            u,
            v,
            arrival: a,
        });

        let gap = state.sup_norm() - tol;
        if gap <= 0.0 {
            let t_hit = match prev {
                Some(p) => linear_crossing(p.t, p.sup_norm() - tol, t, gap),
                None => t,
            };
            break Termination::Drained { t: t_hit };
        }
        if state.q1 > overflow_level {
            let t_hit = match prev {
                Some(p) => {
                    linear_crossing(p.t, overflow_level - p.q1, t, overflow_level - state.q1)
                }
                None => t,
            };
            break Termination::Overflow {
                t: t_hit,
                q1: state.q1,
            };
        }
        if t >= t_end {
            break Termination::HorizonReached;
        }

        step += 1;
        let t_next = (t0 + step as f64 * dt).min(t_end);
        let mut next = step_game(&state, u, v, a, t_next - t, params)?;
        next.t = t_next;
        prev = Some(state);
        state = next;
    };

    Ok(Trajectory {
        samples,
        termination,
        dt,
        defender: defender.kind(),
    })
}
