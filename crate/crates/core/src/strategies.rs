//! Defender strategies, attacker strategies and arrival profiles.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ArrivalSample, AttackInput, ControlInput, GameParams, GameState};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum StrategyError {
    #[error("switching strategy needs mu > nu + alpha_max (epsilon = {epsilon})")]
    Condition1Violated { epsilon: f64 },
    #[error("invalid strategy parameter `{0}`")]
    InvalidParameter(&'static str),
}

/// What the defender sees when choosing its control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub t: f64,
    pub state: GameState,
    pub v: AttackInput,
    pub alpha: ArrivalSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DefenderKind {
    TheoremSwitching,
    NonIdling,
    Zero,
    Custom,
}

/// Phase of the switching strategy: suppress the attacker, then serve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchPhase {
    BeforeT2,
    AfterT2,
}

pub type CustomDefender = Box<dyn FnMut(&Observation, &GameParams) -> ControlInput + Send>;

pub enum DefenderStrategy {
    /// Two-phase counter-strategy. The phase latches the first time
    /// `q2 <= tol` and never reverts.
    TheoremSwitching {
        tol: f64,
        phase: SwitchPhase,
    },
    NonIdling,
    Zero,
    Custom(CustomDefender),
}

impl fmt::Debug for DefenderStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TheoremSwitching { tol, phase } => f
                .debug_struct("TheoremSwitching")
                .field("tol", tol)
                .field("phase", phase)
                .finish(),
            Self::NonIdling => f.write_str("NonIdling"),
            Self::Zero => f.write_str("Zero"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl DefenderStrategy {
    pub fn theorem(tol: f64) -> Self {
        Self::TheoremSwitching {
            tol,
            phase: SwitchPhase::BeforeT2,
        }
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: FnMut(&Observation, &GameParams) -> ControlInput + Send + 'static,
    {
        Self::Custom(Box::new(f))
    }

    pub fn kind(&self) -> DefenderKind {
        match self {
            Self::TheoremSwitching { .. } => DefenderKind::TheoremSwitching,
            Self::NonIdling => DefenderKind::NonIdling,
            Self::Zero => DefenderKind::Zero,
            Self::Custom(_) => DefenderKind::Custom,
        }
    }

    pub fn phase(&self) -> Option<SwitchPhase> {
        match self {
            Self::TheoremSwitching { phase, .. } => Some(*phase),
            _ => None,
        }
    }

    /// Clears the phase latch so the strategy can start a new run.
    pub fn reset(&mut self) {
        if let Self::TheoremSwitching { phase, .. } = self {
            *phase = SwitchPhase::BeforeT2;
        }
    }

    pub fn control(
        &mut self,
        obs: &Observation,
        params: &GameParams,
    ) -> Result<ControlInput, StrategyError> {
        match self {
            Self::TheoremSwitching { tol, phase } => {
                let eps = params.epsilon();
                if !(eps > 0.0) {
                    return Err(StrategyError::Condition1Violated { epsilon: eps });
                }
                if *phase == SwitchPhase::BeforeT2 && obs.state.q2 <= *tol {
                    *phase = SwitchPhase::AfterT2;
                }
                Ok(match phase {
                    SwitchPhase::BeforeT2 => suppress(obs.alpha, params),
                    SwitchPhase::AfterT2 => serve(obs.v, params),
                })
            }
            Self::NonIdling => Ok(non_idling(&obs.state, params)),
            Self::Zero => Ok(ControlInput::default()),
            Self::Custom(f) => Ok(f(obs, params)),
        }
    }
}

// Serve exactly the arrivals, spend the rest on the attacker.
fn suppress(a: ArrivalSample, params: &GameParams) -> ControlInput {
    ControlInput::new(a.alpha, params.mu - a.alpha)
}

// Cancel the attacker's input, spend the rest on the queue.
fn serve(v: AttackInput, params: &GameParams) -> ControlInput {
    ControlInput::new(params.mu - v.v, v.v)
}

/// Stateless form of the switching strategy: the branch is chosen from the
/// current `q2` alone. [`DefenderStrategy::TheoremSwitching`] adds the latch.
pub fn theorem_defender(
    state: &GameState,
    v: AttackInput,
    a: ArrivalSample,
    params: &GameParams,
    tol: f64,
) -> Result<ControlInput, StrategyError> {
    let eps = params.epsilon();
    if !(eps > 0.0) {
        return Err(StrategyError::Condition1Violated { epsilon: eps });
    }
    Ok(if state.q2 > tol {
        suppress(a, params)
    } else {
        serve(v, params)
    })
}

/// Full service while the queue is nonempty, nothing otherwise.
pub fn non_idling(state: &GameState, params: &GameParams) -> ControlInput {
    if state.q1 > 0.0 {
        ControlInput::new(params.mu, 0.0)
    } else {
        ControlInput::default()
    }
}

/// Piecewise-linear function through `(t, value)` breakpoints, held constant
/// outside the breakpoint range.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PiecewiseLinear {
    points: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, StrategyError> {
        if points.is_empty() {
            return Err(StrategyError::InvalidParameter(
                "trace needs at least one point",
            ));
        }
        if points.iter().any(|(t, x)| !t.is_finite() || !x.is_finite()) {
            return Err(StrategyError::InvalidParameter(
                "trace values must be finite",
            ));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(StrategyError::InvalidParameter(
                "trace times must be strictly increasing",
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn eval(&self, t: f64) -> f64 {
        let pts = &self.points;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if t <= first.0 {
            return first.1;
        }
        if t >= last.0 {
            return last.1;
        }
        // First breakpoint strictly after t.
        let i = pts.partition_point(|p| p.0 <= t);
        let (t0, x0) = pts[i - 1];
        let (t1, x1) = pts[i];
        x0 + (x1 - x0) * (t - t0) / (t1 - t0)
    }
}

/// Attacker policies. Every emitted value is clipped to `[0, nu]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AttackerStrategy {
    /// `v = nu` at all times.
    ConstantMax,
    Zero,
    /// `v = nu` for the first `duty` fraction of every period, else 0.
    Pulse {
        period: f64,
        duty: f64,
    },
    /// Uniform on `[0, nu]`, redrawn every `hold` time units. A pure
    /// function of `(seed, t)`.
    SeededRandom {
        seed: u64,
        hold: f64,
    },
    PiecewiseTrace(PiecewiseLinear),
}

impl AttackerStrategy {
    pub fn validate(&self) -> Result<(), StrategyError> {
        match self {
            Self::Pulse { period, duty } => {
                if !(period.is_finite() && *period > 0.0) {
                    return Err(StrategyError::InvalidParameter("pulse period"));
                }
                if !(*duty >= 0.0 && *duty <= 1.0) {
                    return Err(StrategyError::InvalidParameter("pulse duty"));
                }
            }
            Self::SeededRandom { hold, .. } if !(hold.is_finite() && *hold > 0.0) => {
                return Err(StrategyError::InvalidParameter("random hold"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn emit(&self, t: f64, _state: &GameState, params: &GameParams) -> AttackInput {
        let nu = params.nu;
        let v = match self {
            Self::ConstantMax => nu,
            Self::Zero => 0.0,
            Self::Pulse { period, duty } => {
                let r = libm::fmod(t, *period);
                let phase = if r < 0.0 { r + period } else { r } / period;
                if phase < *duty {
                    nu
                } else {
                    0.0
                }
            }
            Self::SeededRandom { seed, hold } => {
                let bucket = libm::floor(t / hold).max(0.0) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(bucket);
                nu * rng.random::<f64>()
            }
            Self::PiecewiseTrace(trace) => trace.eval(t),
        };
        AttackInput::new(v.clamp(0.0, nu))
    }
}

/// Arrival rate profiles. Every emitted value is clipped to `[0, alpha_max]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ArrivalProfile {
    Constant {
        level: f64,
    },
    SinusoidClipped {
        mean: f64,
        amplitude: f64,
        period: f64,
    },
    PiecewiseLinearTrace(PiecewiseLinear),
}

impl ArrivalProfile {
    pub fn validate(&self) -> Result<(), StrategyError> {
        match self {
            Self::Constant { level } if !level.is_finite() => {
                Err(StrategyError::InvalidParameter("arrival level"))
            }
            Self::SinusoidClipped {
                mean,
                amplitude,
                period,
            } => {
                if !(mean.is_finite() && amplitude.is_finite()) {
                    Err(StrategyError::InvalidParameter("sinusoid mean/amplitude"))
                } else if !(period.is_finite() && *period > 0.0) {
                    Err(StrategyError::InvalidParameter("sinusoid period"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn emit(&self, t: f64, params: &GameParams) -> ArrivalSample {
        let raw = match self {
            Self::Constant { level } => *level,
            Self::SinusoidClipped {
                mean,
                amplitude,
                period,
            } => mean + amplitude * libm::sin(core::f64::consts::TAU * t / period),
            Self::PiecewiseLinearTrace(trace) => trace.eval(t),
        };
        ArrivalSample::new(raw.clamp(0.0, params.alpha_max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn params() -> GameParams {
        GameParams::new(3.0, 1.0, 1.0, 1.0, 5.0).unwrap()
    }

    fn obs(q1: f64, q2: f64, v: f64, alpha: f64) -> Observation {
        Observation {
            t: 0.0,
            state: GameState::initial(q1, q2),
            v: AttackInput::new(v),
            alpha: ArrivalSample::new(alpha),
        }
    }

    #[test]
    fn theorem_first_branch_suppresses() {
        let u = theorem_defender(
            &GameState::initial(2.0, 2.0),
            AttackInput::new(1.0),
            ArrivalSample::new(1.0),
            &params(),
            1e-6,
        )
        .unwrap();
        assert_eq!(u, ControlInput::new(1.0, 2.0));
    }

    #[test]
    fn theorem_second_branch_serves() {
        let u = theorem_defender(
            &GameState::initial(2.0, 0.0),
            AttackInput::new(1.0),
            ArrivalSample::new(1.0),
            &params(),
            1e-6,
        )
        .unwrap();
        assert_eq!(u, ControlInput::new(2.0, 1.0));
    }

    #[test]
    fn theorem_controls_are_admissible_at_worst_case() {
        let p = params();
        for q2 in [0.0, 2.0] {
            let u = theorem_defender(
                &GameState::initial(1.0, q2),
                AttackInput::new(p.nu),
                ArrivalSample::new(p.alpha_max),
                &p,
                1e-6,
            )
            .unwrap();
            assert!(u.u1 >= 0.0 && u.u2 >= 0.0);
            assert_eq!(u.u1 + u.u2, p.mu);
        }
    }

    #[test]
    fn theorem_requires_condition1() {
        let p = GameParams::new(2.0, 1.0, 1.0, 1.0, 5.0).unwrap();
        let err = DefenderStrategy::theorem(1e-6)
            .control(&obs(1.0, 1.0, 1.0, 1.0), &p)
            .unwrap_err();
        assert_eq!(err, StrategyError::Condition1Violated { epsilon: 0.0 });
    }

    #[test]
    fn switch_latches() {
        let p = params();
        let mut d = DefenderStrategy::theorem(1e-6);
        assert_eq!(
            d.control(&obs(1.0, 1.0, 1.0, 1.0), &p).unwrap(),
            ControlInput::new(1.0, 2.0)
        );
        assert_eq!(
            d.control(&obs(1.0, 0.0, 1.0, 1.0), &p).unwrap(),
            ControlInput::new(2.0, 1.0)
        );
        assert_eq!(d.phase(), Some(SwitchPhase::AfterT2));
        // q2 back above tol does not revert the phase.
        assert_eq!(
            d.control(&obs(1.0, 0.5, 0.5, 1.0), &p).unwrap(),
            ControlInput::new(2.5, 0.5)
        );
        d.reset();
        assert_eq!(d.phase(), Some(SwitchPhase::BeforeT2));
    }

    #[test]
    fn non_idling_policy() {
        let p = params();
        assert_eq!(
            non_idling(&GameState::initial(5.0, 0.0), &p),
            ControlInput::new(3.0, 0.0)
        );
        assert_eq!(
            non_idling(&GameState::initial(0.0, 0.0), &p),
            ControlInput::new(0.0, 0.0)
        );
    }

    #[test]
    fn attacker_kinds() {
        let p = params();
        let s = GameState::default();
        assert_eq!(AttackerStrategy::ConstantMax.emit(3.0, &s, &p).v, 1.0);
        assert_eq!(AttackerStrategy::Zero.emit(3.0, &s, &p).v, 0.0);
        let pulse = AttackerStrategy::Pulse {
            period: 2.0,
            duty: 0.25,
        };
        assert_eq!(pulse.emit(0.4, &s, &p).v, 1.0);
        assert_eq!(pulse.emit(0.6, &s, &p).v, 0.0);
        assert_eq!(pulse.emit(4.1, &s, &p).v, 1.0);
    }

    #[test]
    fn seeded_random_is_deterministic() {
        let p = params();
        let s = GameState::default();
        let a = AttackerStrategy::SeededRandom {
            seed: 42,
            hold: 0.1,
        };
        let x = a.emit(1.0, &s, &p).v;
        assert_eq!(x, a.emit(1.0, &s, &p).v);
        assert!((0.0..=1.0).contains(&x));
        // Different buckets give different draws.
        assert_ne!(x, a.emit(1.1, &s, &p).v);
    }

    #[test]
    fn arrival_profiles() {
        let p = params();
        assert_eq!(
            ArrivalProfile::Constant { level: 1.0 }.emit(0.3, &p).alpha,
            1.0
        );
        let sin = ArrivalProfile::SinusoidClipped {
            mean: 1.0,
            amplitude: 1.0,
            period: 1.0,
        };
        for i in 0..1000 {
            let a = sin.emit(i as f64 * 0.0137, &p).alpha;
            assert!((0.0..=1.0).contains(&a));
        }
        let trace = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(
            ArrivalProfile::PiecewiseLinearTrace(trace)
                .emit(0.5, &p)
                .alpha,
            0.5
        );
    }

    #[test]
    fn trace_validation_and_hold() {
        assert!(PiecewiseLinear::new(vec![]).is_err());
        assert!(PiecewiseLinear::new(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
        let tr = PiecewiseLinear::new(vec![(1.0, 2.0), (3.0, 4.0)]).unwrap();
        assert_eq!(tr.eval(0.0), 2.0);
        assert_eq!(tr.eval(2.0), 3.0);
        assert_eq!(tr.eval(9.0), 4.0);
    }
}
