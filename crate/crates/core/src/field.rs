//! Sampled complex scalar fields on a square grid, Laguerre–Gaussian mode
//! synthesis, overlaps and beam-size measures.
//!
//! Samples are stored row-major as `samples[iy * n + ix]` with transverse
//! coordinates `x = (ix - n/2) * dx`, `y = (iy - n/2) * dx`, so the optical
//! axis falls on sample `(n/2, n/2)`.
//!
//! Fields are values: every operation returns a new field.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{ensure_positive, Error, Result};
use crate::fft;
use crate::turbulence::PhaseScreen;

/// Tolerance on `‖U‖²` for a field to count as normalized.
pub const NORMALIZED_TOLERANCE: f64 = 1e-9;

/// Uniform square sampling grid centered on the optical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    dx: f64,
}

impl Grid {
    pub const MIN_SAMPLES: usize = 64;

    pub fn new(n: usize, dx: f64) -> Result<Self> {
        if n < Self::MIN_SAMPLES {
            return Err(Error::InvalidGrid(format!(
                "need at least {} samples per side, got {n}",
                Self::MIN_SAMPLES
            )));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidGrid(format!("sample spacing must be positive, got {dx}")));
        }
        Ok(Self { n, dx })
    }

    /// Grid with `n` samples spanning `extent` meters.
    pub fn with_extent(n: usize, extent: f64) -> Result<Self> {
        Self::new(n, extent / n as f64)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    pub fn extent(&self) -> f64 {
        self.n as f64 * self.dx
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dx
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Physical coordinate of sample index `k` along either axis.
    #[inline]
    pub fn coordinate(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dx
    }

    /// Iterator over `(x, y)` in storage order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.n).flat_map(move |iy| {
            let y = self.coordinate(iy);
            (0..self.n).map(move |ix| (self.coordinate(ix), y))
        })
    }
}

/// Complex field sampled on a [`Grid`] at a given wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    wavelength: f64,
    samples: Vec<Complex64>,
}

impl ComplexField {
    pub fn from_samples(grid: Grid, wavelength: f64, samples: Vec<Complex64>) -> Result<Self> {
        ensure_positive("wavelength", wavelength)?;
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {}x{} grid",
                samples.len(),
                grid.n(),
                grid.n()
            )));
        }
        Ok(Self { grid, wavelength, samples })
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: Grid, wavelength: f64, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let samples = grid.points().map(|(x, y)| f(x, y)).collect();
        Self::from_samples(grid, wavelength, samples)
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    #[inline]
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    #[inline]
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub(crate) fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        Self { grid: self.grid, wavelength: self.wavelength, samples }
    }

    /// Same samples relabeled with another wavelength.
    pub fn with_wavelength(&self, wavelength: f64) -> Result<Self> {
        ensure_positive("wavelength", wavelength)?;
        Ok(Self { wavelength, ..self.clone() })
    }

    /// `‖U‖² = Σ|u|²·dx²`.
    pub fn norm_sqr(&self) -> f64 {
        self.samples.iter().map(|u| u.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// `‖U‖²` evaluated in the transform domain (Parseval).
    pub fn spectral_norm_sqr(&self) -> f64 {
        let n = self.grid.n();
        let spectrum = fft::fft2(&self.samples, n);
        spectrum.iter().map(|u| u.norm_sqr()).sum::<f64>() * self.grid.cell_area() / (n * n) as f64
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < NORMALIZED_TOLERANCE
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::ZeroField);
        }
        let s = 1.0 / norm.sqrt();
        Ok(self.with_samples(self.samples.iter().map(|u| u * s).collect()))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        self.with_samples(self.samples.iter().map(|u| u * factor).collect())
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|u| u.norm_sqr()).collect()
    }

    /// Intensity centroid `(x̄, ȳ)`.
    pub fn centroid(&self) -> Result<(f64, f64)> {
        let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for ((x, y), u) in self.grid.points().zip(&self.samples) {
            let i = u.norm_sqr();
            s += i;
            sx += i * x;
            sy += i * y;
        }
        if s <= 0.0 {
            return Err(Error::ZeroField);
        }
        Ok((sx / s, sy / s))
    }

    pub(crate) fn ensure_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::MismatchedGrid)
        }
    }
}

/// Laguerre–Gaussian mode parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    /// Beam waist radius (m).
    pub w0: f64,
    /// Azimuthal index (OAM charge).
    pub l: i32,
    /// Radial index; only `p = 0` is supported.
    pub p: u32,
    /// Evaluation plane measured from the waist (m).
    pub z: f64,
    pub wavelength: f64,
}

impl ModeSpec {
    /// Mode at its waist plane with `p = 0`.
    pub fn new(w0: f64, l: i32, wavelength: f64) -> Self {
        Self { w0, l, p: 0, z: 0.0, wavelength }
    }

    pub fn at(self, z: f64) -> Self {
        Self { z, ..self }
    }

    pub fn rayleigh_range(&self) -> f64 {
        PI * self.w0 * self.w0 / self.wavelength
    }

    fn validate(&self) -> Result<()> {
        if !(self.w0.is_finite() && self.w0 > 0.0) {
            return Err(Error::InvalidSpec(format!("waist must be positive, got {}", self.w0)));
        }
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(Error::InvalidSpec(format!("wavelength must be positive, got {}", self.wavelength)));
        }
        if self.p != 0 {
            return Err(Error::InvalidSpec(format!("radial index p={} unsupported (p must be 0)", self.p)));
        }
        if !self.z.is_finite() {
            return Err(Error::InvalidSpec("evaluation plane must be finite".into()));
        }
        Ok(())
    }
}

/// Second-moment diameter of an LG beam with charge `l`:
/// `2·w0·sqrt((|l|+1)(1+(z/z_R)²))`, `z_R = π·w0²/λ`.
pub fn analytic_diameter(w0: f64, l: i32, z: f64, wavelength: f64) -> Result<f64> {
    ensure_positive("waist", w0)?;
    ensure_positive("wavelength", wavelength)?;
    if !z.is_finite() {
        return Err(Error::InvalidParameter("z must be finite".into()));
    }
    let zr = PI * w0 * w0 / wavelength;
    Ok(2.0 * w0 * ((l.unsigned_abs() as f64 + 1.0) * (1.0 + (z / zr).powi(2))).sqrt())
}

/// Normalized LG mode with `p = 0` at plane `spec.z`, including wavefront
/// curvature and Gouy phase (carrier `e^{ikz}` omitted).
pub fn lg_mode(spec: &ModeSpec, grid: Grid) -> Result<ComplexField> {
    spec.validate()?;
    let required = 4.0 * analytic_diameter(spec.w0, spec.l, spec.z, spec.wavelength)?;
    if grid.extent() < required {
        return Err(Error::GridUndersampled { extent: grid.extent(), required });
    }
    let k = 2.0 * PI / spec.wavelength;
    let zr = spec.rayleigh_range();
    let ratio = spec.z / zr;
    let w = spec.w0 * (1.0 + ratio * ratio).sqrt();
    // 1/R(z); zero at the waist.
    let inv_r = spec.z / (spec.z * spec.z + zr * zr);
    let abs_l = spec.l.unsigned_abs() as i32;
    let gouy = -((abs_l + 1) as f64) * ratio.atan();
    let l = spec.l as f64;

    let field = ComplexField::from_fn(grid, spec.wavelength, |x, y| {
        let r2 = x * x + y * y;
        let rho = (2.0 * r2).sqrt() / w;
        let amplitude = rho.powi(abs_l) * (-r2 / (w * w)).exp();
        let phase = l * y.atan2(x) + 0.5 * k * r2 * inv_r + gouy;
        Complex64::from_polar(amplitude, phase)
    })?;
    field.normalized()
}

/// Normalized coefficient-weighted sum `Σ c_i·m_i`.
pub fn superpose(coeffs: &[Complex64], modes: &[ComplexField]) -> Result<ComplexField> {
    if coeffs.len() != modes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} modes",
            coeffs.len(),
            modes.len()
        )));
    }
    let first = modes.first().ok_or(Error::ZeroField)?;
    let mut acc = vec![Complex64::default(); first.grid.len()];
    for (c, m) in coeffs.iter().zip(modes) {
        first.ensure_same_grid(m)?;
        if *c == Complex64::default() {
            continue;
        }
        for (a, u) in acc.iter_mut().zip(&m.samples) {
            *a += c * u;
        }
    }
    first.with_samples(acc).normalized()
}

/// `⟨a|b⟩ = Σ conj(a)·b·dx²`.
pub fn inner_product(a: &ComplexField, b: &ComplexField) -> Result<Complex64> {
    a.ensure_same_grid(b)?;
    let s: Complex64 = a.samples.iter().zip(&b.samples).map(|(u, v)| u.conj() * v).sum();
    Ok(s * a.grid.cell_area())
}

/// Intensity-weighted second-moment diameter about the intensity centroid,
/// `D = 2·sqrt(2·⟨|r − r̄|²⟩)` (equal to `2w` for a Gaussian of waist `w`).
pub fn second_moment_diameter(field: &ComplexField) -> Result<f64> {
    let (cx, cy) = field.centroid()?;
    let (mut s, mut m2) = (0.0, 0.0);
    for ((x, y), u) in field.grid.points().zip(&field.samples) {
        let i = u.norm_sqr();
        s += i;
        m2 += i * ((x - cx).powi(2) + (y - cy).powi(2));
    }
    Ok(2.0 * (2.0 * m2 / s).sqrt())
}

/// Multiplies the field pointwise by `exp(i·Θ)`.
pub fn apply_phase(field: &ComplexField, screen: &PhaseScreen) -> Result<ComplexField> {
    if field.grid != screen.grid() {
        return Err(Error::MismatchedGrid);
    }
    Ok(field.with_samples(
        field
            .samples
            .iter()
            .zip(screen.phase())
            .map(|(u, &t)| u * Complex64::from_polar(1.0, t))
            .collect(),
    ))
}

/// Pointwise complex conjugate.
pub fn conjugate(field: &ComplexField) -> ComplexField {
    field.with_samples(field.samples.iter().map(|u| u.conj()).collect())
}
