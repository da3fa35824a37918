use fluidgame::scenario::{
    scenario_to_json, ArrivalSpec, AttackerSpec, DefenderSpec, InitialState, OutputSettings,
    SolverSettings, StochasticSettings,
};
use fluidgame::{load_scenario, parse_scenario, write_scenario, Defaults, Scenario};
use fluidgame_core::model::{GameParams, SimSettings};
use proptest::prelude::*;

fn trace() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((0.01f64..5.0, 0.0f64..2.0), 1..6).prop_map(|steps| {
        let mut t = 0.0;
        steps
            .into_iter()
            .map(|(dt, x)| {
                let p = [t, x];
                t += dt;
                p
            })
            .collect()
    })
}

fn attacker() -> impl Strategy<Value = AttackerSpec> {
    prop_oneof![
        Just(AttackerSpec::ConstantMax),
        Just(AttackerSpec::Zero),
        (0.01f64..10.0, 0.0f64..=1.0)
            .prop_map(|(period, duty)| AttackerSpec::Pulse { period, duty }),
        (any::<u64>(), 1e-3f64..2.0).prop_map(|(seed, hold)| AttackerSpec::SeededRandom {
            seed,
            hold: Some(hold)
        }),
        trace().prop_map(|points| AttackerSpec::Trace { points }),
    ]
}

fn arrival(alpha_max: f64) -> impl Strategy<Value = ArrivalSpec> {
    prop_oneof![
        (0.0f64..=1.0).prop_map(move |f| ArrivalSpec::Constant {
            level: Some(f * alpha_max)
        }),
        (-1.0f64..3.0, 0.0f64..3.0, 0.1f64..10.0).prop_map(|(mean, amplitude, period)| {
            ArrivalSpec::Sinusoid {
                mean,
                amplitude,
                period,
            }
        }),
        trace().prop_map(|points| ArrivalSpec::Trace { points }),
    ]
}

fn stochastic() -> impl Strategy<Value = Option<StochasticSettings>> {
    prop::option::of(
        (
            0.0f64..3.0,
            0.1f64..5.0,
            0.01f64..2.0,
            0u64..500,
            1usize..5000,
            any::<u64>(),
            1usize..1000,
        )
            .prop_map(
                |(
                    arrival_mean,
                    service_rate,
                    slot_dt,
                    initial_queue,
                    n_runs,
                    seed,
                    horizon_slots,
                )| {
                    StochasticSettings {
                        arrival_mean,
                        service_rate,
                        slot_dt,
                        initial_queue,
                        n_runs,
                        seed,
                        horizon_slots,
                    }
                },
            ),
    )
}

fn scenario() -> impl Strategy<Value = Scenario> {
    (
        (
            0.01f64..10.0,
            0.0f64..5.0,
            0.0f64..5.0,
            0.0f64..3.0,
            0.1f64..100.0,
        ),
        (0.0f64..=1.0, 0.0f64..10.0),
        prop_oneof![
            Just(DefenderSpec::Theorem),
            Just(DefenderSpec::NonIdling),
            Just(DefenderSpec::Zero)
        ],
        attacker(),
        (1e-5f64..0.5, 0.1f64..1e3, 1e-12f64..1e-2),
        (8usize..2048, 2usize..32, 1e-6f64..1.0, 1.0f64..1e6),
        stochastic(),
        ("[a-z][a-z0-9_]{0,12}", any::<bool>()),
    )
        .prop_flat_map(
            |(p, q, defender, attacker, sim, solver, stochastic, (name, svg))| {
                let params = GameParams {
                    mu: p.0,
                    nu: p.1,
                    alpha_max: p.2,
                    k: p.3,
                    q1_max: p.4,
                };
                arrival(params.alpha_max).prop_map(move |arrival| Scenario {
                    version: 1,
                    name: name.clone(),
                    params,
                    q0: InitialState {
                        q1: q.0 * params.q1_max,
                        q2: q.1,
                    },
                    defender: defender.clone(),
                    attacker: attacker.clone(),
                    arrival,
                    sim: SimSettings {
                        dt: sim.0,
                        t_max: sim.1,
                        tol: sim.2,
                    },
                    solver: SolverSettings {
                        n_dirs: solver.0,
                        n_quad: solver.1,
                        tol_t: solver.2,
                        horizon: solver.3,
                    },
                    stochastic,
                    output: OutputSettings {
                        dir: format!("out/{name}").into(),
                        svg,
                    },
                })
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn written_scenarios_load_back_unchanged(s in scenario()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        write_scenario(&s, &path).unwrap();
        let back = load_scenario(&path).unwrap();
        prop_assert_eq!(&back, &s);
        // And the echo is a fixed point of parsing.
        let again = parse_scenario(&scenario_to_json(&back), &Defaults { tol: 0.5 }).unwrap();
        prop_assert_eq!(again, s);
    }
}
