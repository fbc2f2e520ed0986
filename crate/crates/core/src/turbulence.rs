//! Kolmogorov phase screens from Zernike expansions, channel parameters and
//! structure-function validation.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_positive, Error, Result};
use crate::field::Grid;
use crate::zernike::{covariance_factor, zernike, FIRST_INDEX};

/// Default number of Zernike terms in a screen expansion.
pub const DEFAULT_TERMS: usize = 172;

/// Coefficient of the Kolmogorov phase structure function.
pub const STRUCTURE_COEFFICIENT: f64 = 6.88;

fn wavenumber(wavelength: f64) -> f64 {
    2.0 * PI / wavelength
}

/// Fried parameter `r0 = (0.423·Cn²·k²·Z)^{-3/5}`.
pub fn fried_parameter(cn2: f64, wavelength: f64, path_length: f64) -> Result<f64> {
    ensure_positive("cn2", cn2)?;
    ensure_positive("wavelength", wavelength)?;
    ensure_positive("path length", path_length)?;
    let k = wavenumber(wavelength);
    Ok((0.423 * cn2 * k * k * path_length).powf(-3.0 / 5.0))
}

/// `Cn²` that yields Fried parameter `r0` over `path_length`.
pub fn cn2_for_fried(r0: f64, wavelength: f64, path_length: f64) -> Result<f64> {
    ensure_positive("r0", r0)?;
    ensure_positive("wavelength", wavelength)?;
    ensure_positive("path length", path_length)?;
    let k = wavenumber(wavelength);
    Ok(r0.powf(-5.0 / 3.0) / (0.423 * k * k * path_length))
}

/// Plane-wave Rytov variance `σ_R² = 1.23·Cn²·k^{7/6}·Z^{11/6}`.
pub fn rytov_variance(cn2: f64, wavelength: f64, path_length: f64) -> Result<f64> {
    ensure_positive("cn2", cn2)?;
    ensure_positive("wavelength", wavelength)?;
    ensure_positive("path length", path_length)?;
    Ok(1.23 * cn2 * wavenumber(wavelength).powf(7.0 / 6.0) * path_length.powf(11.0 / 6.0))
}

/// Channel turbulence, given either physically or as a ratio to an aperture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TurbulenceSpec {
    Path { cn2: f64, wavelength: f64, path_length: f64 },
    /// Strength fixed by `D/r0` for aperture `D`; `Cn²` is inferred over the path.
    Ratio { d_over_r0: f64, aperture: f64, wavelength: f64, path_length: f64 },
}

impl TurbulenceSpec {
    pub fn wavelength(&self) -> f64 {
        match *self {
            Self::Path { wavelength, .. } | Self::Ratio { wavelength, .. } => wavelength,
        }
    }

    pub fn path_length(&self) -> f64 {
        match *self {
            Self::Path { path_length, .. } | Self::Ratio { path_length, .. } => path_length,
        }
    }

    /// Fried parameter over the whole path; infinite for a ratio of zero.
    pub fn r0(&self) -> Result<f64> {
        match *self {
            Self::Path { cn2, wavelength, path_length } => fried_parameter(cn2, wavelength, path_length),
            Self::Ratio { d_over_r0, aperture, .. } => {
                ensure_positive("aperture", aperture)?;
                if d_over_r0 == 0.0 {
                    Ok(f64::INFINITY)
                } else {
                    ensure_positive("D/r0", d_over_r0)?;
                    Ok(aperture / d_over_r0)
                }
            }
        }
    }

    pub fn cn2(&self) -> Result<f64> {
        match *self {
            Self::Path { cn2, .. } => Ok(cn2),
            Self::Ratio { d_over_r0: 0.0, .. } => Ok(0.0),
            Self::Ratio { wavelength, path_length, .. } => cn2_for_fried(self.r0()?, wavelength, path_length),
        }
    }

    /// Fried parameter of one of `segments` equal slices of the path.
    pub fn segment_r0(&self, segments: usize) -> Result<f64> {
        let r0 = self.r0()?;
        Ok(r0 * (segments.max(1) as f64).powf(3.0 / 5.0))
    }
}

/// Smallest number of equal segments whose individual Rytov variance is
/// strictly below `threshold`.
pub fn segment_path(spec: &TurbulenceSpec, threshold: f64) -> Result<usize> {
    ensure_positive("threshold", threshold)?;
    let cn2 = spec.cn2()?;
    if cn2 == 0.0 {
        return Ok(1);
    }
    let (wl, z) = (spec.wavelength(), spec.path_length());
    let mut m = 1usize;
    while rytov_variance(cn2, wl, z / m as f64)? >= threshold {
        m += 1;
    }
    Ok(m)
}

/// `6.88·(r/r0)^{5/3}`.
pub fn theoretical_structure(r: f64, r0: f64) -> f64 {
    STRUCTURE_COEFFICIENT * (r / r0).powf(5.0 / 3.0)
}

/// Real phase map (radians) on a grid, zero outside the screen aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreen {
    grid: Grid,
    phase: Vec<f64>,
    r0: f64,
    aperture_diameter: f64,
    terms: usize,
    seed: Option<u64>,
}

impl PhaseScreen {
    /// Screen with no distortion.
    pub fn flat(grid: Grid) -> Self {
        Self { grid, phase: vec![0.0; grid.len()], r0: f64::INFINITY, aperture_diameter: 0.0, terms: 0, seed: None }
    }

    pub fn from_phase(grid: Grid, phase: Vec<f64>) -> Result<Self> {
        if phase.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!("{} phase samples for {} grid points", phase.len(), grid.len())));
        }
        if phase.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("phase screen contains non-finite values".into()));
        }
        Ok(Self { phase, ..Self::flat(grid) })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn aperture_diameter(&self) -> f64 {
        self.aperture_diameter
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    fn in_aperture(&self, ix: usize, iy: usize) -> bool {
        let (x, y) = (self.grid.coordinate(ix), self.grid.coordinate(iy));
        let r = 0.5 * self.aperture_diameter;
        x * x + y * y <= r * r
    }
}

/// Precomputed Zernike basis over the pixels of an aperture disc, shared by
/// every screen drawn with the same geometry.
#[derive(Debug, Clone)]
pub struct ScreenGenerator {
    grid: Grid,
    aperture_diameter: f64,
    terms: usize,
    pixels: Vec<usize>,
    /// Row-major `pixels.len() × terms`.
    basis: Vec<f64>,
    factor: Arc<DMatrix<f64>>,
}

impl ScreenGenerator {
    pub fn new(grid: Grid, aperture_diameter: f64, terms: usize) -> Result<Self> {
        ensure_positive("aperture diameter", aperture_diameter)?;
        if aperture_diameter > grid.extent() {
            return Err(Error::InvalidParameter(format!(
                "screen aperture {aperture_diameter:.4e} m exceeds the {:.4e} m grid",
                grid.extent()
            )));
        }
        let factor = covariance_factor(terms)?;
        let radius = 0.5 * aperture_diameter;
        let n = grid.n();
        let mut pixels = Vec::new();
        let mut basis = Vec::new();
        for iy in 0..n {
            let y = grid.coordinate(iy);
            for ix in 0..n {
                let x = grid.coordinate(ix);
                let rho = (x * x + y * y).sqrt() / radius;
                if rho > 1.0 {
                    continue;
                }
                let theta = y.atan2(x);
                pixels.push(iy * n + ix);
                basis.extend((0..terms).map(|t| zernike(t + FIRST_INDEX, rho, theta)));
            }
        }
        Ok(Self { grid, aperture_diameter, terms, pixels, basis, factor })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn aperture_diameter(&self) -> f64 {
        self.aperture_diameter
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    /// Zernike coefficients `a_2 ..` drawn for the given aperture ratio `D/r0`.
    pub fn sample_coefficients<R: Rng + ?Sized>(&self, rng: &mut R, d_over_r0: f64) -> DVector<f64> {
        let xi = DVector::from_iterator(self.terms, (0..self.terms).map(|_| rng.sample::<f64, _>(StandardNormal)));
        (&*self.factor * xi) * d_over_r0.powf(5.0 / 6.0)
    }

    /// Phase map for a coefficient vector.
    pub fn synthesize(&self, coefficients: &DVector<f64>, r0: f64, seed: Option<u64>) -> PhaseScreen {
        let mut phase = vec![0.0; self.grid.len()];
        let a = coefficients.as_slice();
        for (row, &p) in self.basis.chunks_exact(self.terms).zip(&self.pixels) {
            phase[p] = row.iter().zip(a).map(|(z, c)| z * c).sum();
        }
        PhaseScreen { grid: self.grid, phase, r0, aperture_diameter: self.aperture_diameter, terms: self.terms, seed }
    }

    /// Screen with Fried parameter `r0` from an explicit generator state.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, r0: f64) -> Result<PhaseScreen> {
        if r0.is_infinite() && r0 > 0.0 {
            return Ok(PhaseScreen { r0, aperture_diameter: self.aperture_diameter, terms: self.terms, ..PhaseScreen::flat(self.grid) });
        }
        ensure_positive("r0", r0)?;
        let a = self.sample_coefficients(rng, self.aperture_diameter / r0);
        Ok(self.synthesize(&a, r0, None))
    }

    /// Screen fully determined by `seed`.
    pub fn sample(&self, seed: u64, r0: f64) -> Result<PhaseScreen> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut screen = self.sample_with(&mut rng, r0)?;
        screen.seed = Some(seed);
        Ok(screen)
    }
}

/// One-off screen for `spec` over an aperture of diameter `aperture_diameter`.
pub fn sample_screen<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &TurbulenceSpec,
    aperture_diameter: f64,
    terms: usize,
    grid: Grid,
) -> Result<PhaseScreen> {
    ScreenGenerator::new(grid, aperture_diameter, terms)?.sample_with(rng, spec.r0()?)
}

/// Point of an estimated structure-function curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructurePoint {
    /// Separation actually used (a whole number of samples).
    pub r: f64,
    pub estimate: f64,
    pub pairs: usize,
}

/// `D(r) = ⟨(Θ(x) − Θ(x + r))²⟩` over in-aperture pairs separated along
/// both grid axes, averaged over all screens.
pub fn structure_function_estimate(screens: &[PhaseScreen], separations: &[f64]) -> Result<Vec<StructurePoint>> {
    if screens.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: screens.len() });
    }
    let first = &screens[0];
    if screens.iter().any(|s| s.grid != first.grid || s.aperture_diameter != first.aperture_diameter) {
        return Err(Error::MismatchedGrid);
    }
    let grid = first.grid;
    let n = grid.n();
    let mask: Vec<bool> = (0..n * n).map(|i| first.in_aperture(i % n, i / n)).collect();

    separations
        .iter()
        .map(|&r| {
            if !(r >= 0.0 && r < first.aperture_diameter) {
                return Err(Error::InvalidParameter(format!(
                    "separation {r:.4e} m outside the {:.4e} m aperture",
                    first.aperture_diameter
                )));
            }
            let s = (r / grid.dx()).round() as usize;
            let mut index_pairs = Vec::new();
            for iy in 0..n {
                for ix in 0..n {
                    let i = iy * n + ix;
                    if !mask[i] {
                        continue;
                    }
                    if ix + s < n && mask[i + s] {
                        index_pairs.push((i, i + s));
                    }
                    if iy + s < n && mask[i + s * n] {
                        index_pairs.push((i, i + s * n));
                    }
                }
            }
            let pairs = index_pairs.len();
            let sum: f64 = screens
                .iter()
                .map(|sc| index_pairs.iter().map(|&(i, j)| (sc.phase[i] - sc.phase[j]).powi(2)).sum::<f64>())
                .sum();
            if pairs == 0 {
                return Err(Error::InsufficientSamples { needed: 1, got: 0 });
            }
            Ok(StructurePoint { r: s as f64 * grid.dx(), estimate: sum / (pairs * screens.len()) as f64, pairs })
        })
        .collect()
}
