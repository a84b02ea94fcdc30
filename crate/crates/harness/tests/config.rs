use gkdv_harness::config::ExperimentConfig;
use gkdv_harness::perturbation::{PerturbationKind, Placement};
use gkdv_harness::{run_quadratic_control, run_stability, HarnessError, Overrides};

#[test]
fn defaults_round_trip_through_toml() {
    let cfg = ExperimentConfig::default();
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    assert_eq!(ExperimentConfig::from_toml("").unwrap(), cfg);
}

#[test]
fn partial_files_override_only_what_they_name() {
    let text = r#"
        p = 3
        speeds = [0.5, 1.5, 3.0]
        positions = [-80.0, 0.0, 80.0]

        [perturbation]
        kind = "random-seeded"
        alpha = 0.02
        placement = { between = 2 }

        [solver]
        t_final = 10.0
    "#;
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    assert_eq!(cfg.p, 3);
    assert_eq!(cfg.perturbation.kind, PerturbationKind::RandomSeeded);
    assert_eq!(cfg.perturbation.placement, Placement::Between(2));
    assert_eq!(cfg.solver.t_final, 10.0);
    assert_eq!(cfg.solver.dt, 1e-3);
    assert_eq!(cfg.separation(), 80.0);
    cfg.validate().unwrap();
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(matches!(ExperimentConfig::from_toml("speed = [1.0]"), Err(HarnessError::Config(_))));
}

#[test]
fn overrides_replace_fields() {
    let mut cfg = ExperimentConfig::default();
    cfg.sweep.alpha = vec![1e-3, 1e-2];
    cfg.apply(&Overrides {
        p: Some(4),
        speeds: Some(vec![1.0]),
        positions: Some(vec![0.0]),
        alpha: Some(0.05),
        grid: Some(1024),
        domain: Some(128.0),
        t_final: Some(3.0),
        seed: Some(9),
        out: Some("elsewhere".into()),
    });
    assert_eq!((cfg.p, cfg.grid.points, cfg.grid.domain, cfg.seed), (4, 1024, 128.0, 9));
    assert_eq!(cfg.alphas(), vec![0.05]);
    assert_eq!(cfg.solver.t_final, 3.0);
    assert_eq!(cfg.out.to_str(), Some("elsewhere"));
}

#[test]
fn solitons_closer_than_l_are_rejected() {
    let mut cfg = ExperimentConfig::default();
    cfg.separation = Some(80.0);
    let err = run_stability(&cfg).unwrap_err();
    assert!(matches!(err, HarnessError::Config(ref m) if m.contains("below the separation")), "{err}");
}

#[test]
fn invalid_settings_are_rejected() {
    let cases: [fn(&mut ExperimentConfig); 6] = [
        |c| c.speeds = vec![2.0, 1.0],
        |c| c.positions = vec![0.0],
        |c| c.solver.dt = 1.0,
        |c| c.perturbation.placement = Placement::Soliton(3),
        |c| c.monotonicity.reference = 0,
        |c| c.positions = vec![-30.0, 400.0],
    ];
    for (k, f) in cases.iter().enumerate() {
        let mut cfg = ExperimentConfig::default();
        f(&mut cfg);
        assert!(cfg.validate().is_err(), "case {k}");
    }
}

#[test]
fn amplitude_sweeps_need_four_points_over_one_and_a_half_decades() {
    let mut cfg = ExperimentConfig::default().with_separation(300.0);
    // the zero amplitude does not count towards the four points
    cfg.sweep.alpha = vec![0.0, 1e-2, 3e-2, 1e-1];
    assert!(run_quadratic_control(&cfg).is_err());
    cfg.sweep.alpha = vec![1e-2, 2e-2, 4e-2, 8e-2];
    assert!(cfg.validate_alpha_sweep().is_err());
    cfg.sweep.alpha = vec![3e-3, 1e-2, 3e-2, 1e-1];
    cfg.validate_alpha_sweep().unwrap();
    // exp(-gamma0 L) must stay below the smallest alpha^2
    let short = ExperimentConfig { sweep: cfg.sweep.clone(), ..ExperimentConfig::default() };
    assert!(short.validate_alpha_sweep().is_err());
}

#[test]
fn equal_spacing_keeps_the_mean_position() {
    let mut cfg = ExperimentConfig::default();
    cfg.speeds = vec![1.0, 2.0, 3.0];
    cfg.positions = vec![-40.0, 10.0, 60.0];
    let c = cfg.with_separation(100.0);
    assert_eq!(c.positions, vec![-90.0, 10.0, 110.0]);
    assert_eq!(c.separation(), 100.0);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        if path.file_stem().unwrap() == "nsoliton" {
            cfg.validate_model().unwrap();
        } else {
            cfg.validate().unwrap();
        }
        if path.file_stem().unwrap() == "quadratic-control" {
            cfg.validate_alpha_sweep().unwrap();
        }
        seen += 1;
    }
    assert_eq!(seen, 5);
}
