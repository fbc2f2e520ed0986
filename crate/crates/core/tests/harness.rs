use std::sync::Arc;

use stimqkd::harness::config::{DetectionConfig, GridConfig, ScreenConfig};
use stimqkd::harness::{
    realization_seed, run_pm, run_stimpdc, stimpdc_round_trip, sweep, write_outputs, AutoOr, DetectionMode, Geometry,
    Preset, ScenarioConfig, Scheme, StateSet, CSV_HEADER,
};
use stimqkd::propagation::Segment;
use stimqkd::stimpdc::gaussian_seed;
use stimqkd::{
    fidelity_matrix, inner_product, stimulate_idler, transmit, ChannelRealization, Direction, Error, Grid,
};

fn small_config() -> ScenarioConfig {
    ScenarioConfig {
        dimensions: vec![2],
        d_over_r0: vec![0.0, 3.0],
        realizations: 3,
        zernike_terms: 20,
        grid: GridConfig { samples: 128, extent: AutoOr::default() },
        ..ScenarioConfig::preset(Preset::Desk)
    }
}

#[test]
fn config_round_trips_through_toml() {
    for preset in [Preset::Desk, Preset::Full] {
        let cfg = ScenarioConfig::preset(preset);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
    }
}

#[test]
fn auto_keyword_and_defaults_parse() {
    let text = r#"
        dimensions = [2, 5]
        schemes = ["pm", "stimpdc"]
        d_over_r0 = [1.0, 2.5]
        path_length = 1000.0
        wavelength = 8.1e-7
        gamma = 2.0
        probe_waist = "auto"
        realizations = 10
        master_seed = 7
        segments = 3

        [grid]
        samples = 256
        extent = 0.2

        [detection]
        mode = "on-axis"
    "#;
    let cfg = ScenarioConfig::from_toml_str(text).unwrap();
    assert_eq!(cfg.probe_waist.value(), None);
    assert_eq!(cfg.segments.value(), Some(3));
    assert_eq!(cfg.grid.extent.value(), Some(0.2));
    assert_eq!(cfg.screens, ScreenConfig::default());
    assert_eq!(cfg.detection.mode, DetectionMode::OnAxis);
    assert_eq!(cfg.detection.focal_length, DetectionConfig::default().focal_length);
    assert_eq!(cfg.zernike_terms, 172);
}

#[test]
fn invalid_configs_are_rejected() {
    let base = ScenarioConfig::preset(Preset::Desk).to_toml_string().unwrap();
    assert!(matches!(ScenarioConfig::from_toml_str(&format!("{base}\nbogus = 1\n")), Err(Error::Config(_))));
    let broken = [
        ScenarioConfig { dimensions: vec![11], ..ScenarioConfig::preset(Preset::Desk) },
        ScenarioConfig { d_over_r0: vec![-1.0], ..ScenarioConfig::preset(Preset::Desk) },
        ScenarioConfig { gamma: 0.0, ..ScenarioConfig::preset(Preset::Desk) },
        ScenarioConfig { realizations: 0, ..ScenarioConfig::preset(Preset::Desk) },
        ScenarioConfig { segments: AutoOr::Value(0), ..ScenarioConfig::preset(Preset::Desk) },
        ScenarioConfig { schemes: vec![], ..ScenarioConfig::preset(Preset::Desk) },
    ];
    for cfg in broken {
        assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
    }
    let cramped = ScenarioConfig {
        grid: GridConfig { samples: 128, extent: AutoOr::Value(0.05) },
        ..ScenarioConfig::preset(Preset::Desk)
    };
    assert!(matches!(Geometry::resolve(&cramped), Err(Error::GridUndersampled { .. })));
}

#[test]
fn desk_geometry_resolves() {
    let g = Geometry::resolve(&ScenarioConfig::preset(Preset::Desk)).unwrap();
    assert_eq!(g.grid.n(), 512);
    assert!((g.w_b - 0.03).abs() < 1e-15);
    assert!((g.w_a - 0.015).abs() < 1e-15);
    assert!((g.d_b() - 0.06).abs() < 1e-15);
    assert!(g.screen_aperture >= 2.0 * g.d_b() && g.screen_aperture <= g.grid.extent());
    assert!(g.grid.extent() > 0.2 && g.grid.extent() < 0.3);
}

#[test]
fn modal_pipeline_equals_direct_state_transmission() {
    let cfg = small_config();
    let geometry = Geometry::resolve(&cfg).unwrap();
    let states = StateSet::prepare(&geometry, 2).unwrap();
    let generator = geometry.screen_generator().unwrap();
    let channel = geometry.channel(5, 4.0, &generator).unwrap();

    let pm = run_pm(&geometry, &states, &channel).unwrap();
    let probe = transmit(&geometry.probe().unwrap(), &channel, Direction::Forward).unwrap();
    let st = run_stimpdc(&geometry, &states, &channel).unwrap();
    for (b, (sources, refs)) in states.sources.iter().zip(&states.references).enumerate() {
        let direct: Vec<_> = sources.iter().map(|s| transmit(s, &channel, Direction::Reverse).unwrap()).collect();
        let expected = fidelity_matrix(&direct, refs).unwrap();
        assert!((&pm[b].1 - expected).abs().max() < 1e-10);

        let returned: Vec<_> = sources
            .iter()
            .map(|s| transmit(&stimulate_idler(s, &probe).unwrap(), &channel, Direction::Reverse).unwrap())
            .collect();
        let expected = fidelity_matrix(&returned, refs).unwrap();
        assert!((&st[b].1 - expected).abs().max() < 1e-10);
    }
}

#[test]
fn calm_channel_reproduces_the_transfer_fidelity() {
    let cfg = small_config();
    let geometry = Geometry::resolve(&cfg).unwrap();
    let states = StateSet::prepare(&geometry, 2).unwrap();
    let channel = ChannelRealization::free_space(geometry.grid, geometry.path_length, geometry.wavelength);
    for (_, f) in run_pm(&geometry, &states, &channel).unwrap() {
        assert!((f - nalgebra::DMatrix::identity(2, 2)).abs().max() < 1e-9);
    }
    for (_, f) in run_stimpdc(&geometry, &states, &channel).unwrap() {
        for j in 0..2 {
            assert!(f[(j, j)] > 0.95, "diagonal {}", f[(j, j)]);
        }
    }
}

#[test]
fn single_screen_round_trip_is_exactly_conjugated() {
    let cfg = small_config();
    let geometry = Geometry::resolve(&cfg).unwrap();
    let states = StateSet::prepare(&geometry, 2).unwrap();
    let generator = geometry.screen_generator().unwrap();
    let pump = &states.sources[0][0];
    let probe = gaussian_seed(geometry.w_b, geometry.wavelength, geometry.grid).unwrap();
    let calm = stimulate_idler(pump, &probe).unwrap();
    for x in [1.0, 10.0] {
        let screen = generator.sample(3, geometry.d_b() / x).unwrap();
        let channel = ChannelRealization {
            segments: vec![Segment { dz: 0.0, screen: Arc::new(screen) }],
            ..ChannelRealization::free_space(geometry.grid, 0.0, geometry.wavelength)
        };
        let out = stimpdc_round_trip(pump, &probe, &channel).unwrap();
        assert!(inner_product(&calm, &out).unwrap().norm_sqr() > 0.999_999);
    }
}

#[test]
fn realization_seeds_separate_every_axis() {
    let base = realization_seed(1, Scheme::Pm, 2, 1.0, 0);
    assert_ne!(base, realization_seed(2, Scheme::Pm, 2, 1.0, 0));
    assert_ne!(base, realization_seed(1, Scheme::Stimpdc, 2, 1.0, 0));
    assert_ne!(base, realization_seed(1, Scheme::Pm, 5, 1.0, 0));
    assert_ne!(base, realization_seed(1, Scheme::Pm, 2, 2.0, 0));
    assert_ne!(base, realization_seed(1, Scheme::Pm, 2, 1.0, 1));
}

#[test]
fn sweeps_are_independent_of_thread_count() {
    let cfg = small_config();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| sweep(&cfg).unwrap())
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one.csv(), three.csv());
    assert!(one.failures.is_empty());
    assert_eq!(one.rows.len(), 4);
    assert!(one.csv().starts_with(CSV_HEADER));
    let calm = one.row(Scheme::Pm, 2, 0.0).unwrap();
    assert!(calm.result.qer.mean < 1e-9);
    let rough = one.row(Scheme::Pm, 2, 3.0).unwrap();
    assert!(rough.result.fidelity_loss.mean > calm.result.fidelity_loss.mean);
}

#[test]
fn outputs_are_written() {
    let cfg = ScenarioConfig { d_over_r0: vec![1.0], schemes: vec![Scheme::Stimpdc], realizations: 2, ..small_config() };
    let out = sweep(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&cfg, &out, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let manifest: toml::Value = toml::from_str(&std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"].as_integer(), Some(cfg.master_seed as i64));
    assert_eq!(manifest["points"].as_integer(), Some(1));
    assert!(manifest["config"].get("dimensions").is_some());
}

#[test]
fn on_axis_detection_runs_end_to_end() {
    let mut cfg = small_config();
    cfg.detection.mode = DetectionMode::OnAxis;
    cfg.d_over_r0 = vec![0.0];
    cfg.schemes = vec![Scheme::Pm];
    let out = sweep(&cfg).unwrap();
    assert!(out.rows[0].result.qer.mean < 0.05);
    let g = Grid::with_extent(128, out.geometry.grid.extent()).unwrap();
    assert_eq!(g, out.geometry.grid);
}
