use fluidgame_core::analysis::{t1_bound, verify_theorem, Verdict};
use fluidgame_core::model::{GameParams, GameState, SimSettings, Trajectory};
use fluidgame_core::simulate_game;
use fluidgame_core::strategies::{
    ArrivalProfile, AttackerStrategy, DefenderStrategy, PiecewiseLinear,
};
use proptest::prelude::*;

const TOL: f64 = 1e-6;

fn attackers() -> Vec<AttackerStrategy> {
    vec![
        AttackerStrategy::ConstantMax,
        AttackerStrategy::Zero,
        AttackerStrategy::Pulse {
            period: 0.7,
            duty: 0.4,
        },
        AttackerStrategy::SeededRandom {
            seed: 11,
            hold: 0.05,
        },
    ]
}

fn arrivals(alpha_max: f64) -> Vec<ArrivalProfile> {
    vec![
        ArrivalProfile::Constant { level: alpha_max },
        ArrivalProfile::SinusoidClipped {
            mean: 0.5 * alpha_max,
            amplitude: alpha_max,
            period: 1.3,
        },
        ArrivalProfile::PiecewiseLinearTrace(
            PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, alpha_max), (2.0, 0.2 * alpha_max)])
                .unwrap(),
        ),
    ]
}

fn play(
    params: &GameParams,
    q0: GameState,
    dt: f64,
    attacker: &AttackerStrategy,
    arrival: &ArrivalProfile,
) -> Trajectory {
    let t_max = t1_bound(&q0, params).unwrap() * 1.5 + 1.0;
    simulate_game(
        params,
        &q0,
        &SimSettings {
            dt,
            t_max,
            tol: TOL,
        },
        &mut DefenderStrategy::theorem(TOL),
        attacker,
        arrival,
    )
    .unwrap()
}

fn sec4() -> GameParams {
    GameParams::new(3.0, 1.0, 1.0, 1.0, 5.0).unwrap()
}

#[test]
fn phase_identities_hold_along_the_run() {
    let params = sec4();
    for attacker in attackers() {
        for arrival in arrivals(params.alpha_max) {
            let traj = play(
                &params,
                GameState::initial(2.0, 2.0),
                1e-3,
                &attacker,
                &arrival,
            );
            let eps = params.epsilon();
            let mut switched = false;
            for s in &traj.samples {
                let q2_rate = s.v.v - s.u.u2;
                if !switched && s.state.q2 > TOL {
                    // Before the switch: q2' = v + alpha - mu <= -eps and q1' = k q2.
                    assert!(q2_rate <= -eps + 1e-12);
                    assert!((s.arrival.alpha - s.u.u1).abs() < 1e-12);
                } else {
                    switched = true;
                    // After the switch: q2' = 0 and q2 stays put.
                    assert_eq!(q2_rate, 0.0);
                    assert!(s.state.q2 <= TOL);
                }
                assert!((s.u.u1 + s.u.u2 - params.mu).abs() < 1e-12);
            }
            assert!(switched);
        }
    }
}

#[test]
fn weaker_attack_drains_strictly_faster_than_the_bound() {
    let params = sec4();
    let q0 = GameState::initial(2.0, 2.0);
    let traj = play(
        &params,
        q0,
        1e-3,
        &AttackerStrategy::Zero,
        &ArrivalProfile::Constant { level: 1.0 },
    );
    let report = verify_theorem(&traj, &q0, &params, TOL);
    assert_eq!(report.verdict, Verdict::Verified);
    assert!(report.t1_observed.unwrap() < report.t1_bound.unwrap() - 0.1);
}

#[test]
fn worst_case_bounds_are_tight() {
    let params = sec4();
    let q0 = GameState::initial(2.0, 2.0);
    let traj = play(
        &params,
        q0,
        1e-3,
        &AttackerStrategy::ConstantMax,
        &ArrivalProfile::Constant { level: 1.0 },
    );
    let r = verify_theorem(&traj, &q0, &params, TOL);
    assert_eq!(r.verdict, Verdict::Verified);
    assert!((r.t2_observed.unwrap() - 2.0).abs() <= 2e-3);
    assert!((r.q1_peak_observed - 4.0).abs() <= 1e-6);
    assert!((r.t1_observed.unwrap() - 6.0).abs() <= 2e-3);
}

#[test]
fn tight_capacity_overflows_under_worst_case() {
    let params = GameParams {
        q1_max: 3.9,
        ..sec4()
    };
    let q0 = GameState::initial(2.0, 2.0);
    let traj = play(
        &params,
        q0,
        1e-3,
        &AttackerStrategy::ConstantMax,
        &ArrivalProfile::Constant { level: 1.0 },
    );
    assert!(traj.is_overflow());
    let r = verify_theorem(&traj, &q0, &params, TOL);
    assert!(!r.condition2_ok);
    assert_eq!(r.verdict, Verdict::ConditionViolatedDemonstrated);
    assert!(r.q1_peak_observed > 3.9);
}

#[test]
fn other_defenders_are_not_applicable() {
    let params = sec4();
    let q0 = GameState::initial(2.0, 0.0);
    let traj = simulate_game(
        &params,
        &q0,
        &SimSettings::default(),
        &mut DefenderStrategy::NonIdling,
        &AttackerStrategy::Zero,
        &ArrivalProfile::Constant { level: 1.0 },
    )
    .unwrap();
    assert_eq!(
        verify_theorem(&traj, &q0, &params, TOL).verdict,
        Verdict::NotApplicable
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bound_dominates_every_attacker(
        eps in 0.2f64..3.0,
        nu in 0.0f64..2.0,
        alpha_max in 0.0f64..2.0,
        k in 0.0f64..2.0,
        q1 in 0.0f64..3.0,
        q2 in 0.0f64..2.0,
        slack in 0.0f64..1.0,
    ) {
        let mu = eps + nu + alpha_max;
        let extra = 0.5 * k * q2 * q2 / eps;
        let params = GameParams::new(mu, nu, alpha_max, k, q1 + extra + slack + 1e-3).unwrap();
        let q0 = GameState::initial(q1, q2);
        let bound = t1_bound(&q0, &params).unwrap();
        let dt = (bound / 2000.0).clamp(1e-4, 1e-2);
        for attacker in attackers() {
            for arrival in arrivals(alpha_max) {
                let traj = play(&params, q0, dt, &attacker, &arrival);
                let r = verify_theorem(&traj, &q0, &params, TOL);
                prop_assert_eq!(r.verdict, Verdict::Verified, "{:?} {:?} {:?}", attacker, arrival, r);
            }
        }
    }

    #[test]
    fn bound_never_grows_with_capacity(
        mu in 2.1f64..6.0, bump in 0.0f64..3.0, k in 0.0f64..3.0,
        q1 in 0.0f64..5.0, q2 in 0.0f64..5.0,
    ) {
        let base = GameParams::new(mu, 1.0, 1.0, k, 100.0).unwrap();
        let more = GameParams { mu: mu + bump, ..base };
        let q0 = GameState::initial(q1, q2);
        prop_assert!(t1_bound(&q0, &more).unwrap() <= t1_bound(&q0, &base).unwrap());
    }
}

proptest! {
    #[test]
    fn capacity_equal_to_peak_bound_satisfies_condition_two(
        eps in 0.1f64..5.0, k in 0.0f64..3.0, q1 in 0.0f64..5.0, q2 in 0.0f64..5.0,
    ) {
        let mut params = GameParams::new(eps + 2.0, 1.0, 1.0, k, 1.0).unwrap();
        let q0 = GameState::initial(q1, q2);
        params.q1_max = fluidgame_core::analysis::q1_peak_bound(&q0, &params).unwrap().max(1e-9);
        prop_assert!(fluidgame_core::pontryagin::condition2(&params, &q0).unwrap());
    }
}
