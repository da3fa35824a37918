//! Closed-form bounds for the switching strategy and a verifier that checks
//! a simulated trajectory against them.
//!
//! With `eps = mu - nu - alpha_max > 0`, the switching defender drives `q2`
//! down at rate at least `eps`, so it reaches zero by `T2* = q2(0) / eps`.
//! Meanwhile `q1` only grows through `k q2`, which bounds the queue peak by
//! `q1(0) + k q2(0)^2 / (2 eps)`. After the switch `q1` falls at rate at
//! least `eps`, giving
//!
//! ```text
//! T1 <= q1(0)/eps + q2(0)/eps + (k/2) (q2(0)/eps)^2
//! ```

use crate::model::{GameParams, GameState, Termination, Trajectory};
use crate::pontryagin::{condition1, condition2};
use crate::strategies::DefenderKind;

/// Absolute slack added to every time comparison on top of `2 dt`.
pub const TIME_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("bound undefined: mu - nu - alpha_max = {epsilon} is not positive")]
    NonPositiveEpsilon { epsilon: f64 },
    #[error("not stabilizable: mu = {mu} <= alpha_max = {alpha_max}")]
    NotStabilizable { mu: f64, alpha_max: f64 },
}

fn positive_epsilon(params: &GameParams) -> Result<f64, AnalysisError> {
    let epsilon = epsilon(params);
    if epsilon > 0.0 {
        Ok(epsilon)
    } else {
        Err(AnalysisError::NonPositiveEpsilon { epsilon })
    }
}

pub fn epsilon(params: &GameParams) -> f64 {
    params.epsilon()
}

/// Worst-case time for the attacker level to reach zero.
pub fn t2_star(q0: &GameState, params: &GameParams) -> Result<f64, AnalysisError> {
    Ok(q0.q2 / positive_epsilon(params)?)
}

pub fn q1_peak_bound(q0: &GameState, params: &GameParams) -> Result<f64, AnalysisError> {
    let eps = positive_epsilon(params)?;
    Ok(q0.q1 + 0.5 * params.k * q0.q2 * q0.q2 / eps)
}

pub fn t1_bound(q0: &GameState, params: &GameParams) -> Result<f64, AnalysisError> {
    let eps = positive_epsilon(params)?;
    let r = q0.q2 / eps;
    Ok(q0.q1 / eps + r + 0.5 * params.k * r * r)
}

/// Minimal draining time `q1(0) / (mu - alpha_max)` of the classic fluid
/// queue under the non-idling policy.
pub fn classic_draining_time(q1_0: f64, params: &GameParams) -> Result<f64, AnalysisError> {
    let margin = params.mu - params.alpha_max;
    if !(margin > 0.0) {
        return Err(AnalysisError::NotStabilizable {
            mu: params.mu,
            alpha_max: params.alpha_max,
        });
    }
    Ok(q1_0 / margin)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    /// Conditions hold and every observed quantity respects its bound.
    Verified,
    /// Conditions hold but some bound was broken.
    BoundViolated,
    /// A condition fails and the run overflowed, as the bound predicts.
    ConditionViolatedDemonstrated,
    /// A condition fails but the run did not overflow; nothing is claimed.
    ConditionsNotMet,
    /// The trajectory was not played by the switching strategy.
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoremReport {
    pub condition1_ok: bool,
    pub condition2_ok: bool,
    pub epsilon: f64,
    pub t2_observed: Option<f64>,
    pub t2_star: Option<f64>,
    pub q1_peak_observed: f64,
    pub q1_peak_bound: Option<f64>,
    pub t1_observed: Option<f64>,
    pub t1_bound: Option<f64>,
    pub admissibility_ok: bool,
    pub q1_max_respected: bool,
    pub termination: Termination,
    pub verdict: Verdict,
}

/// Replays the bound chain against `traj`.
///
/// Times are compared with slack `2 dt + 1e-9`, states with `tol`.
pub fn verify_theorem(
    traj: &Trajectory,
    q0: &GameState,
    params: &GameParams,
    tol: f64,
) -> TheoremReport {
    let eps = epsilon(params);
    let condition1_ok = condition1(params);
    let condition2_ok = condition2(params, q0).unwrap_or(false);

    let t2_observed = traj.first_crossing(|s| s.state.q2 - tol);
    let q1_peak_observed = traj.peak_q1();
    let t1_observed = traj.drained_at();
    let admissibility_ok = traj.samples.iter().all(|s| {
        s.u.is_admissible(params) && s.v.is_admissible(params) && s.arrival.is_admissible(params)
    });
    let q1_max_respected = traj
        .samples
        .iter()
        .all(|s| s.state.q1 >= 0.0 && s.state.q2 >= 0.0 && s.state.q1 <= params.q1_max + tol);

    let mut report = TheoremReport {
        condition1_ok,
        condition2_ok,
        epsilon: eps,
        t2_observed,
        t2_star: t2_star(q0, params).ok(),
        q1_peak_observed,
        q1_peak_bound: q1_peak_bound(q0, params).ok(),
        t1_observed,
        t1_bound: t1_bound(q0, params).ok(),
        admissibility_ok,
        q1_max_respected,
        termination: traj.termination,
        verdict: Verdict::NotApplicable,
    };

    if traj.defender != DefenderKind::TheoremSwitching {
        return report;
    }
    if !(condition1_ok && condition2_ok) {
        report.verdict = if traj.is_overflow() {
            Verdict::ConditionViolatedDemonstrated
        } else {
            Verdict::ConditionsNotMet
        };
        return report;
    }

    let time_slack = 2.0 * traj.dt + TIME_SLACK;
    let within = |observed: Option<f64>, bound: Option<f64>| match (observed, bound) {
        (Some(o), Some(b)) => o <= b + time_slack,
        _ => false,
    };
    let peak_ok = report
        .q1_peak_bound
        .is_some_and(|b| q1_peak_observed <= b.min(params.q1_max) + tol);

    report.verdict = if within(t2_observed, report.t2_star)
        && peak_ok
        && within(t1_observed, report.t1_bound)
        && admissibility_ok
        && q1_max_respected
    {
        Verdict::Verified
    } else {
        Verdict::BoundViolated
    };
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sec4() -> GameParams {
        GameParams::new(3.0, 1.0, 1.0, 1.0, 5.0).unwrap()
    }

    #[test]
    fn epsilon_values() {
        assert_eq!(epsilon(&sec4()), 1.0);
        assert_eq!(epsilon(&GameParams { mu: 2.0, ..sec4() }), 0.0);
        assert_eq!(
            epsilon(&GameParams {
                mu: 1.0,
                nu: 2.0,
                alpha_max: 2.0,
                ..sec4()
            }),
            -3.0
        );
    }

    #[test]
    fn t2_star_values() {
        let p = sec4();
        assert_eq!(t2_star(&GameState::initial(0.0, 2.0), &p), Ok(2.0));
        assert_eq!(t2_star(&GameState::initial(0.0, 0.0), &p), Ok(0.0));
        let half = GameParams { mu: 2.5, ..p };
        assert_eq!(t2_star(&GameState::initial(0.0, 3.0), &half), Ok(6.0));
        assert!(t2_star(&GameState::initial(0.0, 3.0), &GameParams { mu: 2.0, ..p }).is_err());
    }

    #[test]
    fn peak_bound_values() {
        let p = sec4();
        assert_eq!(q1_peak_bound(&GameState::initial(2.0, 2.0), &p), Ok(4.0));
        assert_eq!(
            q1_peak_bound(&GameState::initial(2.0, 2.0), &GameParams { k: 0.0, ..p }),
            Ok(2.0)
        );
        assert_eq!(q1_peak_bound(&GameState::initial(2.0, 0.0), &p), Ok(2.0));
    }

    #[test]
    fn t1_bound_values() {
        let p = sec4();
        assert_eq!(t1_bound(&GameState::initial(2.0, 2.0), &p), Ok(6.0));
        assert_eq!(t1_bound(&GameState::initial(3.0, 0.0), &p), Ok(3.0));
        assert_eq!(t1_bound(&GameState::initial(0.0, 2.0), &p), Ok(4.0));
    }

    #[test]
    fn classic_drain() {
        let p = sec4();
        assert_eq!(classic_draining_time(10.0, &p), Ok(5.0));
        assert_eq!(classic_draining_time(0.0, &p), Ok(0.0));
        assert_eq!(
            classic_draining_time(
                1.0,
                &GameParams {
                    alpha_max: 3.0,
                    ..p
                }
            ),
            Err(AnalysisError::NotStabilizable {
                mu: 3.0,
                alpha_max: 3.0
            })
        );
    }
}
