use std::path::PathBuf;

use proptest::prelude::*;

use pbmor::bench::BenchmarkId;
use pbmor::mor::{Realify, Sidedness};
use pbmor::sim::Signal;
use pbmor::verify::Tolerances;
use pbmor_cli::config::{Axis, Point, ReductionConfig, SimulateConfig, SweepFreqConfig, SweepTimeConfig, SystemSource};
use pbmor_cli::{RunConfig, Stage};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, 1e-12f64..1e-3, Just(0.0)]
}

fn point() -> impl Strategy<Value = Point> {
    prop_oneof![finite().prop_map(Point::Real), (finite(), finite()).prop_map(|(a, b)| Point::Complex([a, b]))]
}

fn axis() -> impl Strategy<Value = Axis> {
    (finite(), finite(), 1usize..20).prop_map(|(a, b, n)| Axis(a, b, n))
}

fn signal() -> impl Strategy<Value = Signal> {
    prop::sample::select(vec!["0.05*(cos(10*t) + cos(5*t))", "sin(200*t) + 200", "-cos(200*t) - 200", "1", "t"])
        .prop_map(|s| Signal::parse(s).unwrap())
}

fn reduction() -> impl Strategy<Value = ReductionConfig> {
    (
        prop::collection::vec(point(), 1..5),
        1usize..4,
        0usize..3,
        prop::collection::vec(prop::collection::vec(finite(), 2), 1..3),
        prop::sample::select(vec![Sidedness::OneSidedV, Sidedness::OneSidedW, Sidedness::TwoSided, Sidedness::TwoSidedIdentical]),
        prop::sample::select(vec![Realify::Auto, Realify::On, Realify::Off]),
        1e-16f64..1e-6,
    )
        .prop_map(|(points, depth, order, mu_points, sidedness, realify, rank_tol)| ReductionConfig {
            points,
            depth,
            order,
            mu_points,
            sidedness,
            realify,
            rank_tol,
            v_chains: None,
            w_chains: None,
        })
}

fn config() -> impl Strategy<Value = RunConfig> {
    let stages = prop::sample::subsequence(
        vec![Stage::BenchGen, Stage::Reduce, Stage::Verify, Stage::SweepFreq, Stage::SweepTime, Stage::Simulate],
        1..=6,
    );
    let system = prop_oneof![
        (prop::sample::select(vec![BenchmarkId::HeatedRodDelay, BenchmarkId::MsdChain, BenchmarkId::Random]), 3usize..5000)
            .prop_map(|(id, n)| SystemSource { benchmark: Some(id), n: Some(n), ..Default::default() }),
        "[a-z]{1,8}".prop_map(|p| SystemSource { manifest: Some(PathBuf::from(format!("{p}/system.toml"))), ..Default::default() }),
    ];
    let sweep_freq = prop::option::of(
        (finite(), finite(), 1usize..200, 1usize..3, prop::collection::vec(axis(), 0..3), prop::option::of(1e-12f64..1.0)).prop_map(
            |(omega_min, omega_max, points, level, mu_axes, max_rel_err)| SweepFreqConfig {
                omega_min,
                omega_max,
                points,
                level,
                mu_axes,
                max_rel_err,
            },
        ),
    );
    let sweep_time = prop::option::of(
        (prop::collection::vec(signal(), 1..3), finite(), 1e-3f64..10.0, prop::collection::vec(axis(), 0..2)).prop_map(
            |(inputs, t_end, step, mu_axes)| SweepTimeConfig { inputs, t_start: 0.0, t_end, step, mu_axes, max_rel_err: None },
        ),
    );
    let simulate = prop::option::of((prop::collection::vec(finite(), 0..3), prop::collection::vec(signal(), 1..3), any::<bool>()).prop_map(
        |(mu, inputs, reduced)| SimulateConfig { mu, inputs, t_start: 0.0, t_end: 1.0, step: 0.01, reduced },
    ));
    (
        stages,
        "[a-z/_]{1,12}",
        any::<u64>(),
        system,
        prop::option::of(reduction()),
        (1e-14f64..1e-2, 1e-14f64..1e-2, 1e-14f64..1e-2),
        sweep_freq,
        sweep_time,
        simulate,
    )
        .prop_map(|(stages, out, seed, system, reduction, (l, d, g), sweep_freq, sweep_time, simulate)| RunConfig {
            stages,
            output_dir: PathBuf::from(out),
            seed,
            system,
            reduced: None,
            reduction,
            verify: Tolerances { lagrange: l, derivative: d, gradient: g },
            sweep_freq,
            sweep_time,
            simulate,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn config_survives_toml(cfg in config()) {
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text, "roundtrip.cfg").unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn config_survives_json(cfg in config()) {
        let value = serde_json::to_value(&cfg).unwrap();
        let back: RunConfig = serde_json::from_value(value).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
