//! Classical model of stimulated parametric down-conversion: the idler is the
//! pump times the conjugated seed (thin crystal, low gain).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{ensure_positive, Error, Result};
use crate::fft;
use crate::field::{analytic_diameter, lg_mode, second_moment_diameter, superpose, ComplexField, Grid, ModeSpec};
use crate::mub::{build_mub_pair, oam_modes};
use crate::propagation::angular_spectrum_propagate;

/// Waist ratio and wavelengths of the stimulated process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StimConfig {
    /// `w_B / w_A`.
    pub gamma: f64,
    /// Pump (Alice) waist in meters.
    pub w_a: f64,
    pub wavelength_pump: f64,
    pub wavelength_probe: f64,
    pub wavelength_idler: f64,
}

impl StimConfig {
    /// Degenerate configuration: every beam at `wavelength`.
    pub fn degenerate(gamma: f64, w_a: f64, wavelength: f64) -> Result<Self> {
        let c = Self { gamma, w_a, wavelength_pump: wavelength, wavelength_probe: wavelength, wavelength_idler: wavelength };
        c.validate()?;
        Ok(c)
    }

    /// Probe (Bob) waist `w_B = γ·w_A`.
    pub fn w_b(&self) -> f64 {
        self.gamma * self.w_a
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("gamma", self.gamma)?;
        ensure_positive("pump waist", self.w_a)?;
        ensure_positive("pump wavelength", self.wavelength_pump)?;
        ensure_positive("probe wavelength", self.wavelength_probe)?;
        ensure_positive("idler wavelength", self.wavelength_idler)?;
        if self.wavelength_idler != self.wavelength_probe {
            return Err(Error::InvalidParameter("idler and probe wavelengths must match".into()));
        }
        Ok(())
    }
}

/// Unnormalized idler `pump(r)·conj(seed(r))`, carried at the seed wavelength.
/// Linear in `pump`.
pub fn seeded_product(pump: &ComplexField, seed: &ComplexField) -> Result<ComplexField> {
    pump.ensure_same_grid(seed)?;
    let product: Vec<Complex64> = pump.samples().iter().zip(seed.samples()).map(|(a, b)| a * b.conj()).collect();
    ComplexField::from_samples(pump.grid(), seed.wavelength(), product)
}

/// Normalized idler `pump(r)·conj(seed(r))`, carried at the seed wavelength.
pub fn stimulate_idler(pump: &ComplexField, seed: &ComplexField) -> Result<ComplexField> {
    let np = pump.norm_sqr();
    if np == 0.0 || seed.norm_sqr() == 0.0 {
        return Err(Error::ZeroField);
    }
    let idler = seeded_product(pump, seed)?;
    // Fraction of pump power that survives weighting by the relative seed intensity.
    let peak = seed.samples().iter().map(|b| b.norm_sqr()).fold(0.0, f64::max);
    if !(idler.norm_sqr() >= 1e-12 * np * peak) {
        return Err(Error::ZeroOverlap);
    }
    idler.normalized()
}

/// `|∫ U_A*·U_B*·U_A|² / (∫|U_A|² · ∫|U_B*·U_A|²)`: overlap between the pump
/// mode and the idler it stimulates from seed `U_B`.
pub fn transfer_fidelity(pump: &ComplexField, seed: &ComplexField) -> Result<f64> {
    pump.ensure_same_grid(seed)?;
    let (mut num, mut pa, mut pi) = (Complex64::default(), 0.0, 0.0);
    for (a, b) in pump.samples().iter().zip(seed.samples()) {
        let idler = a * b.conj();
        num += a.conj() * idler;
        pa += a.norm_sqr();
        pi += idler.norm_sqr();
    }
    if pa == 0.0 || pi == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(num.norm_sqr() / (pa * pi))
}

/// Real Gaussian seed envelope `exp(−r²/w²)` (normalized).
pub fn gaussian_seed(w: f64, wavelength: f64, grid: Grid) -> Result<ComplexField> {
    ensure_positive("seed waist", w)?;
    ComplexField::from_fn(grid, wavelength, |x, y| Complex64::new((-(x * x + y * y) / (w * w)).exp(), 0.0))?.normalized()
}

/// Representative pump of maximal OAM `l_max` at waist `w_a`: the first state
/// of the first certified basis over charges `−l_max ..= l_max`. Beyond the
/// supported dimensions the bare `LG_{l_max}` mode is used instead.
pub fn representative_pump(l_max: u32, w_a: f64, wavelength: f64, grid: Grid) -> Result<ComplexField> {
    let d = 2 * l_max as usize + 1;
    if l_max == 0 || d > crate::mub::MAX_DIMENSION {
        return lg_mode(&ModeSpec::new(w_a, l_max as i32, wavelength), grid);
    }
    let set = build_mub_pair(d)?;
    let modes = oam_modes(&set.oam_range, w_a, wavelength, grid)?;
    superpose(&set.bases[0].vector(0), &modes)
}

/// Transverse moments of a field in the form entering the free-space law
/// `Var(z) = var_r + 2(z/k)·cov + (z/k)²·var_q`, summed over both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamMoments {
    pub var_r: f64,
    pub cov: f64,
    pub var_q: f64,
}

impl BeamMoments {
    pub fn of(field: &ComplexField) -> Result<Self> {
        let grid = field.grid();
        let n = grid.n();
        let norm = field.norm_sqr() / grid.cell_area();
        if norm == 0.0 {
            return Err(Error::ZeroField);
        }
        let (cx, cy) = field.centroid()?;
        let spectrum = fft::fft2(field.samples(), n);
        let q: Vec<f64> = (0..n).map(|i| fft::angular_frequency(i, n, grid.dx())).collect();
        let total_s: f64 = spectrum.iter().map(|c| c.norm_sqr()).sum();
        let (mut mqx, mut mqy, mut mq2) = (0.0, 0.0, 0.0);
        for (i, c) in spectrum.iter().enumerate() {
            let (qy, qx) = (q[i / n], q[i % n]);
            let w = c.norm_sqr() / total_s;
            mqx += w * qx;
            mqy += w * qy;
            mq2 += w * (qx * qx + qy * qy);
        }
        let var_q = mq2 - mqx * mqx - mqy * mqy;

        // p·u with p = −i∂ evaluated spectrally.
        let dx_spec: Vec<Complex64> = spectrum.iter().enumerate().map(|(i, c)| c * q[i % n]).collect();
        let dy_spec: Vec<Complex64> = spectrum.iter().enumerate().map(|(i, c)| c * q[i / n]).collect();
        let px = fft::ifft2(&dx_spec, n);
        let py = fft::ifft2(&dy_spec, n);
        let (mut var_r, mut xp) = (0.0, 0.0);
        for (((x, y), u), (a, b)) in grid.points().zip(field.samples()).zip(px.iter().zip(&py)) {
            let (rx, ry) = (x - cx, y - cy);
            var_r += u.norm_sqr() * (rx * rx + ry * ry);
            xp += (u.conj() * (a * rx + b * ry)).re;
        }
        Ok(Self { var_r: var_r / norm, cov: xp / norm, var_q })
    }

    /// Second-moment diameter after free propagation over `z` at wavenumber `k`.
    pub fn diameter_at(&self, z: f64, k: f64) -> f64 {
        let t = z / k;
        2.0 * (2.0 * (self.var_r + 2.0 * t * self.cov + t * t * self.var_q)).sqrt()
    }

    /// Moments of the same profile rescaled by `s` in the transverse plane.
    pub fn scaled(&self, s: f64) -> Self {
        Self { var_r: self.var_r * s * s, cov: self.cov, var_q: self.var_q / (s * s) }
    }
}

const MOMENT_SAMPLES: usize = 512;

/// Grid resolving both the pump and the idler for the given waists.
fn source_grid(w_a: f64, l_max: u32) -> Result<Grid> {
    Grid::with_extent(MOMENT_SAMPLES, 6.0 * analytic_diameter(w_a, l_max as i32, 0.0, 1.0)?)
}

/// Source-plane idler for probe waist `w_b = γ·w_a`.
fn source_idler(gamma: f64, w_a: f64, wavelength: f64, l_max: u32, grid: Grid) -> Result<ComplexField> {
    let pump = representative_pump(l_max, w_a, wavelength, grid)?;
    let seed = gaussian_seed(gamma * w_a, wavelength, grid)?;
    stimulate_idler(&pump, &seed)
}

/// Moments of the idler at unit probe waist; other waists follow by scaling.
fn unit_idler_moments(gamma: f64, wavelength: f64, l_max: u32) -> Result<BeamMoments> {
    let w_a = 1.0 / gamma;
    BeamMoments::of(&source_idler(gamma, w_a, wavelength, l_max, source_grid(w_a, l_max)?)?)
}

/// One sample of the probe and idler diameter curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterSample {
    pub z: f64,
    pub probe: f64,
    pub idler: f64,
}

/// Probe diameter (Gaussian law) and numerically propagated idler diameter at
/// each `z`. The grid is sized from the moment law so that the idler stays
/// inside the window.
pub fn idler_diameter_curve(config: &StimConfig, l_max: u32, z_samples: &[f64]) -> Result<Vec<DiameterSample>> {
    config.validate()?;
    let wl = config.wavelength_idler;
    let k = 2.0 * PI / wl;
    let w_b = config.w_b();
    let moments = unit_idler_moments(config.gamma, config.wavelength_pump, l_max)?.scaled(w_b);
    let widest = z_samples
        .iter()
        .map(|&z| moments.diameter_at(z, k).max(analytic_diameter(w_b, 0, z, wl).unwrap_or(0.0)))
        .fold(0.0, f64::max);
    let d_pump = analytic_diameter(config.w_a, l_max as i32, 0.0, config.wavelength_pump)?;
    let extent = (4.0 * widest).max(6.0 * d_pump);
    let dx_max = d_pump / 80.0;
    let n = ((extent / dx_max).ceil() as usize).next_power_of_two().clamp(Grid::MIN_SAMPLES, 2048);
    let grid = Grid::with_extent(n, extent)?;

    let pump = representative_pump(l_max, config.w_a, config.wavelength_pump, grid)?;
    let seed = gaussian_seed(w_b, config.wavelength_probe, grid)?;
    let idler = stimulate_idler(&pump, &seed)?;
    z_samples
        .iter()
        .map(|&z| {
            let u = angular_spectrum_propagate(&idler, z)?;
            Ok(DiameterSample { z, probe: analytic_diameter(w_b, 0, z, wl)?, idler: second_moment_diameter(&u)? })
        })
        .collect()
}

/// Scan window for the probe waist.
pub const WAIST_SCAN: (f64, f64) = (1e-3, 0.5);

/// Probe waist `w_B` at which the probe and idler diameters agree at the
/// channel end, for pump modes up to OAM `l_max` and waist ratio `γ`.
pub fn optimize_probe_waist(path_length: f64, gamma: f64, wavelength: f64, l_max: u32) -> Result<f64> {
    ensure_positive("path length", path_length)?;
    ensure_positive("gamma", gamma)?;
    ensure_positive("wavelength", wavelength)?;
    let k = 2.0 * PI / wavelength;
    let unit = unit_idler_moments(gamma, wavelength, l_max)?;
    let f = |w: f64| -> f64 {
        let probe = analytic_diameter(w, 0, path_length, wavelength).unwrap_or(f64::NAN);
        (unit.scaled(w).diameter_at(path_length, k) - probe) / probe
    };

    const SCAN_POINTS: usize = 200;
    let (lo, hi) = WAIST_SCAN;
    let ratio = (hi / lo).ln();
    let ws: Vec<f64> = (0..=SCAN_POINTS).map(|i| lo * (ratio * i as f64 / SCAN_POINTS as f64).exp()).collect();
    let bracket = ws.windows(2).find(|w| f(w[0]).signum() != f(w[1]).signum());
    let Some(&[mut a, mut b]) = bracket else {
        return Err(Error::NoBracket(format!(
            "probe and idler diameters never cross for w_B in [{lo}, {hi}] m at Z = {path_length} m"
        )));
    };
    let fa_sign = f(a).signum();
    for _ in 0..200 {
        let m = (a * b).sqrt();
        if f(m).signum() == fa_sign {
            a = m;
        } else {
            b = m;
        }
        if b / a - 1.0 < 1e-12 {
            break;
        }
    }
    Ok((a * b).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_gaussian_follow_beam_law() {
        let w = 0.01;
        let wl = 810e-9;
        let g = Grid::with_extent(256, 0.12).unwrap();
        let u = lg_mode(&ModeSpec::new(w, 0, wl), g).unwrap();
        let m = BeamMoments::of(&u).unwrap();
        let k = 2.0 * PI / wl;
        let z = 2000.0;
        let expected = analytic_diameter(w, 0, z, wl).unwrap();
        assert!((m.diameter_at(z, k) / expected - 1.0).abs() < 1e-3);
        assert!(m.cov.abs() < 1e-9);
    }

    #[test]
    fn zero_path_has_no_bracket() {
        let err = optimize_probe_waist(1e-6, 2.0, 810e-9, 2).unwrap_err();
        assert!(matches!(err, Error::NoBracket(_)));
    }

    #[test]
    fn config_validation() {
        assert!(StimConfig::degenerate(0.0, 0.01, 810e-9).is_err());
        let mut c = StimConfig::degenerate(2.0, 0.01, 810e-9).unwrap();
        c.wavelength_idler = 780e-9;
        assert!(c.validate().is_err());
    }
}
