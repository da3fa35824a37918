use alloc::vec::Vec;

use crate::numeric::linear_crossing;
use crate::strategies::DefenderKind;

/// Relative slack allowed on control-set constraints before a value counts
/// as inadmissible. Covers rounding in expressions like `a + (mu - a)`.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("parameter `{field}` {reason}")]
    InvalidParam {
        field: &'static str,
        reason: &'static str,
    },
    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("initial state violates `{field}`: {reason}")]
    InvalidState {
        field: &'static str,
        reason: &'static str,
    },
}

fn require(ok: bool, field: &'static str, reason: &'static str) -> Result<(), ModelError> {
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvalidParam { field, reason })
    }
}

/// Scalar constants of the game.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GameParams {
    /// Service capacity shared between serving and counteraction.
    pub mu: f64,
    /// Upper bound on the attacker's replenishment rate.
    pub nu: f64,
    /// Upper bound on the arrival rate.
    pub alpha_max: f64,
    /// Coupling of attack power into the queue.
    pub k: f64,
    /// Queue capacity.
    pub q1_max: f64,
}

impl GameParams {
    pub fn new(mu: f64, nu: f64, alpha_max: f64, k: f64, q1_max: f64) -> Result<Self, ModelError> {
        let params = Self {
            mu,
            nu,
            alpha_max,
            k,
            q1_max,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require(
            self.mu.is_finite() && self.mu > 0.0,
            "mu",
            "must be finite and > 0",
        )?;
        require(
            self.nu.is_finite() && self.nu >= 0.0,
            "nu",
            "must be finite and >= 0",
        )?;
        require(
            self.alpha_max.is_finite() && self.alpha_max >= 0.0,
            "alpha_max",
            "must be finite and >= 0",
        )?;
        require(
            self.k.is_finite() && self.k >= 0.0,
            "k",
            "must be finite and >= 0",
        )?;
        require(
            self.q1_max.is_finite() && self.q1_max > 0.0,
            "q1_max",
            "must be finite and > 0",
        )
    }

    /// Control surplus `mu - nu - alpha_max`.
    pub fn epsilon(&self) -> f64 {
        self.mu - self.nu - self.alpha_max
    }
}

/// Time-stamped phase vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GameState {
    pub t: f64,
    /// Queue length.
    pub q1: f64,
    /// Attack power level.
    pub q2: f64,
}

impl GameState {
    pub const fn new(t: f64, q1: f64, q2: f64) -> Self {
        Self { t, q1, q2 }
    }

    /// State at `t = 0`.
    pub const fn initial(q1: f64, q2: f64) -> Self {
        Self { t: 0.0, q1, q2 }
    }

    /// Checks finiteness, the orthant and the queue capacity.
    pub fn validate(&self, params: &GameParams) -> Result<(), ModelError> {
        if !(self.t.is_finite() && self.q1.is_finite() && self.q2.is_finite()) {
            return Err(ModelError::NonFinite("state"));
        }
        if self.q1 < 0.0 {
            return Err(ModelError::InvalidState {
                field: "q1",
                reason: "must be >= 0",
            });
        }
        if self.q2 < 0.0 {
            return Err(ModelError::InvalidState {
                field: "q2",
                reason: "must be >= 0",
            });
        }
        if self.q1 > params.q1_max {
            return Err(ModelError::InvalidState {
                field: "q1",
                reason: "exceeds q1_max",
            });
        }
        Ok(())
    }

    /// `max(q1, q2)`, the distance to the terminal set in the sup norm.
    pub fn sup_norm(&self) -> f64 {
        self.q1.max(self.q2)
    }
}

/// Defender control: service rate and counteraction rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControlInput {
    pub u1: f64,
    pub u2: f64,
}

impl ControlInput {
    pub const fn new(u1: f64, u2: f64) -> Self {
        Self { u1, u2 }
    }

    pub fn is_admissible(&self, params: &GameParams) -> bool {
        let slack = ADMISSIBILITY_TOL * params.mu.max(1.0);
        self.u1.is_finite()
            && self.u2.is_finite()
            && self.u1 >= -slack
            && self.u2 >= -slack
            && self.u1 + self.u2 <= params.mu + slack
    }
}

/// Attacker replenishment rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackInput {
    pub v: f64,
}

impl AttackInput {
    pub const fn new(v: f64) -> Self {
        Self { v }
    }

    pub fn is_admissible(&self, params: &GameParams) -> bool {
        let slack = ADMISSIBILITY_TOL * params.nu.max(1.0);
        self.v.is_finite() && self.v >= -slack && self.v <= params.nu + slack
    }
}

/// Instantaneous arrival rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArrivalSample {
    pub alpha: f64,
}

impl ArrivalSample {
    pub const fn new(alpha: f64) -> Self {
        Self { alpha }
    }

    pub fn is_admissible(&self, params: &GameParams) -> bool {
        let slack = ADMISSIBILITY_TOL * params.alpha_max.max(1.0);
        self.alpha.is_finite() && self.alpha >= -slack && self.alpha <= params.alpha_max + slack
    }
}

/// Integration settings for a game run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimSettings {
    pub dt: f64,
    pub t_max: f64,
    /// The terminal set is reached once `max(q1, q2) <= tol`.
    pub tol: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_max: 100.0,
            tol: 1e-6,
        }
    }
}

impl SimSettings {
    pub fn validate(&self) -> Result<(), ModelError> {
        require(
            self.dt.is_finite() && self.dt > 0.0,
            "dt",
            "must be finite and > 0",
        )?;
        require(
            self.t_max.is_finite() && self.t_max > 0.0,
            "t_max",
            "must be finite and > 0",
        )?;
        require(
            self.tol.is_finite() && self.tol > 0.0,
            "tol",
            "must be finite and > 0",
        )
    }
}

/// One recorded instant of play: the state and the inputs held from it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    pub state: GameState,
    pub u: ControlInput,
    pub v: AttackInput,
    pub arrival: ArrivalSample,
}

impl Sample {
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

/// How a game run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Termination {
    /// Terminal set reached; `t` is interpolated inside the crossing step.
    Drained {
        t: f64,
    },
    /// Queue capacity exceeded; `t` is interpolated, `q1` is the first
    /// sampled value over the limit.
    Overflow {
        t: f64,
        q1: f64,
    },
    HorizonReached,
}

/// Sampled play of one game.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub termination: Termination,
    pub dt: f64,
    pub defender: DefenderKind,
}

impl Trajectory {
    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn drained_at(&self) -> Option<f64> {
        match self.termination {
            Termination::Drained { t } => Some(t),
            _ => None,
        }
    }

    pub fn is_drained(&self) -> bool {
        matches!(self.termination, Termination::Drained { .. })
    }

    pub fn is_overflow(&self) -> bool {
        matches!(self.termination, Termination::Overflow { .. })
    }

    pub fn peak_q1(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.state.q1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// First time `f` becomes non-positive, interpolated linearly inside the
    /// crossing step. `None` if it never does.
    pub fn first_crossing(&self, f: impl Fn(&Sample) -> f64) -> Option<f64> {
        let mut prev: Option<(f64, f64)> = None;
        for s in &self.samples {
            let value = f(s);
            if value <= 0.0 {
                return Some(match prev {
                    Some((t0, f0)) => linear_crossing(t0, f0, s.t(), value),
                    None => s.t(),
                });
            }
            prev = Some((s.t(), value));
        }
        None
    }
}
