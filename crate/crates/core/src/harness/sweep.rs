//! Seeded Monte Carlo sweeps over scheme, dimension and turbulence strength.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::{ScenarioConfig, Scheme};
use crate::harness::pipeline::{run_realization, Geometry, StateSet};
use crate::metrics::{aggregate, q_max, ScenarioResult};
use crate::seed;

pub const CSV_HEADER: &str = "scheme,d,D_over_r0,Q_mean,Q_se,dF_mean,dF_se,r_mean,q_max";

/// Seed of realization `index` at one sweep point.
pub fn realization_seed(master: u64, scheme: Scheme, d: usize, d_over_r0: f64, index: usize) -> u64 {
    seed::derive(master, &[scheme.tag(), d as u64, d_over_r0.to_bits(), index as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub d: usize,
    pub d_over_r0: f64,
    pub result: ScenarioResult,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub scheme: Scheme,
    pub d: usize,
    pub d_over_r0: f64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub geometry: Geometry,
    pub rows: Vec<SweepRow>,
    pub failures: Vec<PointFailure>,
    pub wall_time: Duration,
}

impl SweepOutput {
    pub fn row(&self, scheme: Scheme, d: usize, d_over_r0: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.d == d && r.d_over_r0 == d_over_r0)
    }

    pub fn csv(&self) -> String {
        to_csv(&self.rows)
    }
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let res = &r.result;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.d,
            r.d_over_r0,
            res.qer.mean,
            res.qer.se,
            res.fidelity_loss.mean,
            res.fidelity_loss.se,
            res.key_rate.mean,
            r.q_max
        );
    }
    s
}

fn run_point(
    config: &ScenarioConfig,
    geometry: &Geometry,
    states: &StateSet,
    generator: &crate::turbulence::ScreenGenerator,
    scheme: Scheme,
    d_over_r0: f64,
) -> Result<ScenarioResult> {
    let fragments = (0..config.realizations)
        .into_par_iter()
        .map(|i| {
            let seed = realization_seed(config.master_seed, scheme, states.d, d_over_r0, i);
            run_realization(geometry, states, generator, scheme, d_over_r0, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(&fragments)
}

/// Runs every `(scheme, d, D/r0)` point. Configuration and geometry problems
/// are returned as errors; failures at individual points are recorded and the
/// sweep continues.
pub fn sweep(config: &ScenarioConfig) -> Result<SweepOutput> {
    let start = Instant::now();
    let geometry = Geometry::resolve(config)?;
    let generator = geometry.screen_generator()?;
    let mut states = BTreeMap::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &scheme in &config.schemes {
        for &d in &config.dimensions {
            states.entry(d).or_insert_with(|| StateSet::prepare(&geometry, d).map_err(|e| e.to_string()));
            for &x in &config.d_over_r0 {
                let outcome = match &states[&d] {
                    Ok(set) => run_point(config, &geometry, set, &generator, scheme, x).map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                };
                match outcome {
                    Ok(result) => {
                        log::info!("{scheme} d={d} D/r0={x}: Q={:.4} dF={:.4}", result.qer.mean, result.fidelity_loss.mean);
                        rows.push(SweepRow { scheme, d, d_over_r0: x, result, q_max: q_max(d)? });
                    }
                    Err(message) => {
                        log::warn!("{scheme} d={d} D/r0={x} failed: {message}");
                        failures.push(PointFailure { scheme, d, d_over_r0: x, message });
                    }
                }
            }
        }
    }
    Ok(SweepOutput { geometry, rows, failures, wall_time: start.elapsed() })
}

#[derive(Serialize)]
struct ResolvedGeometry {
    samples: usize,
    extent: f64,
    probe_waist: f64,
    state_waist: f64,
    screen_aperture: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    master_seed: u64,
    wall_time_s: f64,
    points: usize,
    failed_points: &'a [PointFailure],
    geometry: ResolvedGeometry,
    config: &'a ScenarioConfig,
}

/// Run manifest: version, seed, timing, failures, resolved geometry and the configuration.
pub fn manifest(config: &ScenarioConfig, output: &SweepOutput) -> Result<String> {
    let g = &output.geometry;
    let m = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        master_seed: config.master_seed,
        wall_time_s: output.wall_time.as_secs_f64(),
        points: output.rows.len(),
        failed_points: &output.failures,
        geometry: ResolvedGeometry {
            samples: g.grid.n(),
            extent: g.grid.extent(),
            probe_waist: g.w_b,
            state_waist: g.w_a,
            screen_aperture: g.screen_aperture,
        },
        config,
    };
    toml::to_string(&m).map_err(|e| Error::Config(e.to_string()))
}

/// Writes `results.csv` and `manifest.toml` into `dir`.
pub fn write_outputs(config: &ScenarioConfig, output: &SweepOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("results.csv"), output.csv())?;
    std::fs::write(dir.join("manifest.toml"), manifest(config, output)?)?;
    Ok(())
}
