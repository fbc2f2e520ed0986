//! End-to-end transmission pipelines for the prepare-and-measure and
//! stimulated schemes over a shared, resolved geometry.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{analytic_diameter, second_moment_diameter, superpose, ComplexField, Grid};
use crate::harness::config::{DetectionMode, ScenarioConfig, Scheme};
use crate::metrics::{default_disc_radius, fidelity_matrix, on_axis_overlap, Fragment};
use crate::mub::{build_mub_pair, oam_modes, oam_range};
use crate::propagation::{
    angular_spectrum_propagate, make_channel, transmit, ChannelRealization, Direction, SegmentCount, WINDOW_FILL_LIMIT,
};
use crate::stimpdc::{gaussian_seed, optimize_probe_waist, seeded_product, stimulate_idler};
use crate::turbulence::{ScreenGenerator, TurbulenceSpec};

/// How received fields are scored against references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detection {
    Exact,
    OnAxis { disc_radius: f64, focal_length: f64 },
}

/// Concrete simulation geometry with every `"auto"` setting resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub grid: Grid,
    pub wavelength: f64,
    pub path_length: f64,
    /// Probe (Bob) waist.
    pub w_b: f64,
    /// Pump and state (Alice) waist.
    pub w_a: f64,
    /// Screen aperture diameter.
    pub screen_aperture: f64,
    pub segments: SegmentCount,
    pub zernike_terms: usize,
    pub detection: Detection,
}

fn max_charge(dims: &[usize]) -> u32 {
    dims.iter().flat_map(|&d| oam_range(d)).map(i32::unsigned_abs).max().unwrap_or(0)
}

impl Geometry {
    pub fn resolve(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let (z, wl) = (config.path_length, config.wavelength);
        let l_max = max_charge(&config.dimensions);
        let w_b = match config.probe_waist.value() {
            Some(w) => w,
            None => optimize_probe_waist(z, config.gamma, wl, l_max)?,
        };
        let w_a = w_b / config.gamma;
        let d_b = 2.0 * w_b;

        let source = analytic_diameter(w_a, l_max as i32, 0.0, wl)?;
        let far = analytic_diameter(w_a, l_max as i32, z, wl)?.max(analytic_diameter(w_b, 0, z, wl)?);
        let extent = config.grid.extent.value().unwrap_or_else(|| (4.0 * source).max(3.0 * far));
        let grid = Grid::with_extent(config.grid.samples, extent)?;
        if extent < 4.0 * source {
            return Err(Error::GridUndersampled { extent, required: 4.0 * source });
        }
        let screen_aperture = config.screens.aperture.value().unwrap_or_else(|| (2.0 * d_b).max(far));
        if screen_aperture > extent {
            return Err(Error::Config(format!(
                "screen aperture {screen_aperture:.4e} m is larger than the {extent:.4e} m window"
            )));
        }
        let detection = match config.detection.mode {
            DetectionMode::Exact => Detection::Exact,
            DetectionMode::OnAxis => {
                let f = config.detection.focal_length;
                let disc_radius =
                    config.detection.disc_radius.value().unwrap_or_else(|| default_disc_radius(grid, wl, f, d_b));
                Detection::OnAxis { disc_radius, focal_length: f }
            }
        };
        Ok(Self {
            grid,
            wavelength: wl,
            path_length: z,
            w_b,
            w_a,
            screen_aperture,
            segments: config.segments.value().map_or(SegmentCount::Auto, SegmentCount::Fixed),
            zernike_terms: config.zernike_terms,
            detection,
        })
    }

    /// Aperture `D_B = 2·w_B` against which `D/r0` is quoted.
    pub fn d_b(&self) -> f64 {
        2.0 * self.w_b
    }

    pub fn turbulence(&self, d_over_r0: f64) -> TurbulenceSpec {
        TurbulenceSpec::Ratio {
            d_over_r0,
            aperture: self.d_b(),
            wavelength: self.wavelength,
            path_length: self.path_length,
        }
    }

    pub fn screen_generator(&self) -> Result<ScreenGenerator> {
        ScreenGenerator::new(self.grid, self.screen_aperture, self.zernike_terms)
    }

    /// Bob's Gaussian probe at his own plane.
    pub fn probe(&self) -> Result<ComplexField> {
        gaussian_seed(self.w_b, self.wavelength, self.grid)
    }

    pub fn channel(&self, seed: u64, d_over_r0: f64, generator: &ScreenGenerator) -> Result<ChannelRealization> {
        make_channel(seed, &self.turbulence(d_over_r0), generator, self.segments)
    }

    fn check_window(&self, field: &ComplexField) -> Result<()> {
        let diameter = second_moment_diameter(field)?;
        let extent = self.grid.extent();
        if diameter > WINDOW_FILL_LIMIT * extent {
            return Err(Error::WindowOverflow { diameter, extent });
        }
        Ok(())
    }
}

/// Encoded states and the references they are scored against.
#[derive(Debug, Clone)]
pub struct StateSet {
    pub d: usize,
    pub labels: Vec<String>,
    /// OAM modes at Alice's plane, one per coefficient index.
    pub modes: Vec<ComplexField>,
    /// `coefficients[basis][j]`: expansion of state `j` over `modes`.
    pub coefficients: Vec<Vec<Vec<Complex64>>>,
    /// `sources[basis][j]` at Alice's plane.
    pub sources: Vec<Vec<ComplexField>>,
    /// Sources diffracted to Bob's plane without turbulence.
    pub references: Vec<Vec<ComplexField>>,
}

impl StateSet {
    /// Builds and certifies the states for dimension `d`, rejecting geometries
    /// in which any beam would fill the window.
    pub fn prepare(geometry: &Geometry, d: usize) -> Result<Self> {
        let set = build_mub_pair(d)?;
        let modes = oam_modes(&set.oam_range, geometry.w_a, geometry.wavelength, geometry.grid)?;
        let coefficients: Vec<Vec<Vec<Complex64>>> =
            set.bases.iter().map(|b| (0..d).map(|j| b.vector(j)).collect()).collect();
        let sources = coefficients
            .iter()
            .map(|b| b.iter().map(|c| superpose(c, &modes)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let references = sources
            .iter()
            .map(|b| b.iter().map(|s| angular_spectrum_propagate(s, geometry.path_length)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let probe = angular_spectrum_propagate(&geometry.probe()?, geometry.path_length)?;
        for f in references.iter().flatten().chain(std::iter::once(&probe)) {
            geometry.check_window(f)?;
        }
        let idler = stimulate_idler(&sources[0][0], &probe)?;
        geometry.check_window(&angular_spectrum_propagate(&idler, geometry.path_length)?)?;
        Ok(Self {
            d,
            labels: set.bases.iter().map(|b| b.generator_label.clone()).collect(),
            modes,
            coefficients,
            sources,
            references,
        })
    }
}

fn project(geometry: &Geometry, received: &[ComplexField], references: &[ComplexField]) -> Result<DMatrix<f64>> {
    match geometry.detection {
        Detection::Exact => fidelity_matrix(received, references),
        Detection::OnAxis { disc_radius, focal_length } => {
            let d = received.len();
            if references.len() != d {
                return Err(Error::DimensionMismatch(format!("{d} received fields for {} references", references.len())));
            }
            let mut f = DMatrix::zeros(d, d);
            for (j, r) in references.iter().enumerate() {
                for (jp, u) in received.iter().enumerate() {
                    f[(j, jp)] = on_axis_overlap(u, r, disc_radius, focal_length)?;
                }
            }
            Ok(f)
        }
    }
}

pub type BasisFidelities = Vec<(String, DMatrix<f64>)>;

/// Scores every basis given the channel output for each mode. Transmission is
/// linear, so a state's output is the same superposition of mode outputs.
fn score(geometry: &Geometry, states: &StateSet, outputs: &[ComplexField]) -> Result<BasisFidelities> {
    states
        .coefficients
        .iter()
        .zip(&states.references)
        .zip(&states.labels)
        .map(|((coeffs, refs), label)| {
            let received = coeffs.iter().map(|c| superpose(c, outputs)).collect::<Result<Vec<_>>>()?;
            Ok((label.clone(), project(geometry, &received, refs)?))
        })
        .collect()
}

/// Prepare and measure: each state crosses the channel once, Alice to Bob.
pub fn run_pm(geometry: &Geometry, states: &StateSet, channel: &ChannelRealization) -> Result<BasisFidelities> {
    let outputs =
        states.modes.iter().map(|m| transmit(m, channel, Direction::Reverse)).collect::<Result<Vec<_>>>()?;
    score(geometry, states, &outputs)
}

/// Probe crosses Bob to Alice, stimulates the idler from `pump`, and the idler
/// returns through the same screens in reverse order.
pub fn stimpdc_round_trip(pump: &ComplexField, probe: &ComplexField, channel: &ChannelRealization) -> Result<ComplexField> {
    let arrived = transmit(probe, channel, Direction::Forward)?;
    transmit(&stimulate_idler(pump, &arrived)?, channel, Direction::Reverse)
}

/// Stimulated scheme: one probe pass per channel, then the idler of every
/// state returns to Bob.
pub fn run_stimpdc(geometry: &Geometry, states: &StateSet, channel: &ChannelRealization) -> Result<BasisFidelities> {
    let arrived = transmit(&geometry.probe()?, channel, Direction::Forward)?;
    let outputs = states
        .modes
        .iter()
        .map(|m| transmit(&seeded_product(m, &arrived)?, channel, Direction::Reverse))
        .collect::<Result<Vec<_>>>()?;
    score(geometry, states, &outputs)
}

/// Statistics of one realization for `scheme` at turbulence `d_over_r0`.
pub fn run_realization(
    geometry: &Geometry,
    states: &StateSet,
    generator: &ScreenGenerator,
    scheme: Scheme,
    d_over_r0: f64,
    seed: u64,
) -> Result<Fragment> {
    let channel = geometry.channel(seed, d_over_r0, generator)?;
    let fidelities = match scheme {
        Scheme::Pm => run_pm(geometry, states, &channel)?,
        Scheme::Stimpdc => run_stimpdc(geometry, states, &channel)?,
    };
    Fragment::from_fidelities(states.d, &fidelities)
}
