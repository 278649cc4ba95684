use proptest::prelude::*;
use soliton_gas_lab::config::{DomainSpec, InterpolantSpec, SpacetimeSpec};
use soliton_gas_lab::ExperimentConfig;

fn pair() -> impl Strategy<Value = [f64; 2]> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| [a, b])
}

fn domain() -> impl Strategy<Value = DomainSpec> {
    prop_oneof![
        (
            0.5f64..2.0,
            0.05f64..0.4,
            prop::option::of((4usize..40, 8usize..128).prop_map(|(a, b)| [a, b]))
        )
            .prop_map(|(cy, radius, quadrature)| DomainSpec::Disk {
                center: [0.1, cy],
                radius,
                d_min: 0.05,
                quadrature,
            }),
        (0.1f64..1.0, 0.5f64..1.0).prop_map(|(w, y0)| DomainSpec::Rectangle {
            x: [-w, w],
            y: [y0, y0 + 0.5],
            d_min: 0.05,
            quadrature: None,
        }),
    ]
}

fn interpolant() -> impl Strategy<Value = InterpolantSpec> {
    prop_oneof![
        pair().prop_map(|a| InterpolantSpec::Constant { a }),
        (pair(), pair()).prop_map(|(a, b)| InterpolantSpec::Affine { a, b }),
        (pair(), pair()).prop_map(|(a, b)| InterpolantSpec::Exponential { a, b }),
    ]
}

fn spacetime() -> impl Strategy<Value = SpacetimeSpec> {
    prop_oneof![
        prop::collection::vec(pair().prop_map(|[x, t]| [x, t.abs()]), 1..6)
            .prop_map(SpacetimeSpec::Points),
        (1usize..8, 1usize..5).prop_map(|(nx, nt)| SpacetimeSpec::Grid {
            x: [-2.0, 2.0],
            nx,
            t: [0.0, 0.5],
            nt,
        }),
    ]
}

fn config() -> impl Strategy<Value = ExperimentConfig> {
    (
        domain(),
        interpolant(),
        spacetime(),
        4u32..9,
        prop::collection::vec(1usize..256, 1..6),
        1usize..10_000,
        any::<u64>(),
        0.01f64..1.0,
    )
        .prop_map(|(d, r, st, log_nodes, n_values, trials, seed, delta)| {
            let mut cfg = ExperimentConfig {
                domain: d,
                interpolant: r,
                spacetime: st,
                n_values,
                trials,
                base_seed: seed,
                ..Default::default()
            };
            cfg.contour.nodes_per_circle = 1 << log_nodes;
            cfg.membership.delta = delta;
            cfg
        })
}

proptest! {
    #[test]
    fn json_round_trip_preserves_config_and_hash(cfg in config()) {
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.content_hash(), cfg.content_hash());
    }

    #[test]
    fn changing_the_seed_changes_the_hash(cfg in config(), bump in 1u64..1000) {
        let mut other = cfg.clone();
        other.base_seed = cfg.base_seed.wrapping_add(bump);
        prop_assert_ne!(other.content_hash(), cfg.content_hash());
    }
}
