use proptest::prelude::*;
use rvm::regularized::PresetKind;
use rvm_cli::{parse_str, Settings};

fn settings() -> impl Strategy<Value = Settings> {
    (
        (0u64..u64::MAX, 1i64..64, prop::collection::btree_set(1i64..200, 1..5)),
        (1e-3f64..0.5, 0usize..40, 1usize..5, any::<bool>()),
        ([1usize..128, 1usize..4, 1usize..4], [0.1f64..50.0, 0.1f64..50.0, 0.1f64..50.0], [1usize..64, 1usize..64, 1usize..4]),
        (0usize..4, 1e-3f64..1.0, 0.0f64..1.0, 1u32..5, 0.1f64..5.0, 0.0f64..2.0, -1.0f64..1.0, 0.1f64..5.0),
        (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
        (0.1f64..2.5, 0usize..50, 4usize..32, 4usize..32, 4usize..32, 1usize..4),
    )
        .prop_map(|(top, time, grid, preset, checks, avg)| {
            let mut s = Settings::default();
            let r = &mut s.run;
            (r.seed, r.n) = (top.0, top.1);
            r.n_list = top.2.into_iter().collect();
            r.dt = time.0;
            r.t_final = time.0 * time.1 as f64 * if time.3 { -1.0 } else { 1.0 };
            r.save_every = time.2;
            r.write_snapshots = time.3;
            (r.spatial_cells, r.lengths, r.momentum_cells) = grid;
            r.momentum_halfwidth = 6.0;
            r.preset = PresetKind::ALL[preset.0];
            r.density = preset.1;
            r.alpha = if r.preset == PresetKind::LocalizedBump { preset.2.max(0.01) } else { preset.2 };
            (r.mode, r.beta, r.drift, r.b_amplitude, r.bump_radius) = (preset.3, preset.4, preset.5, preset.6, preset.7);
            (s.checks.charge, s.checks.domination, s.checks.div_b) = checks;
            let a = &mut s.averaging;
            a.psi_radius = avg.0;
            a.triples = avg.1;
            (a.nt, a.nx, a.np) = (2 * avg.2, 2 * avg.3, 2 * avg.4);
            a.levels = avg.5;
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn echo_reparses_to_the_same_settings(s in settings()) {
        s.validate().unwrap();
        let text = s.to_cfg();
        let back = parse_str(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_cfg(), text);
    }
}
