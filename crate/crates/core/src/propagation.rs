//! Angular-spectrum free-space propagation and the split-step turbulent channel.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{apply_phase, second_moment_diameter, ComplexField, Grid};
use crate::seed;
use crate::turbulence::{rytov_variance, segment_path, PhaseScreen, ScreenGenerator, TurbulenceSpec};

/// Fraction of the window a beam may fill before wrap-around is flagged.
pub const WINDOW_FILL_LIMIT: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct TransferKey {
    n: usize,
    dx: u64,
    wavelength: u64,
    dz: u64,
}

const TRANSFER_CACHE_LIMIT: usize = 32;

/// `exp(i·dz·(sqrt(k² − q²) − k))`, zero for evanescent `|q| > k`.
///
/// The carrier `e^{ik·dz}` is left out: it is a global phase, and at
/// kilometer scales it would only add rounding noise.
fn transfer_function(grid: Grid, wavelength: f64, dz: f64) -> Arc<Vec<Complex64>> {
    static CACHE: OnceLock<Mutex<HashMap<TransferKey, Arc<Vec<Complex64>>>>> = OnceLock::new();
    let key = TransferKey { n: grid.n(), dx: grid.dx().to_bits(), wavelength: wavelength.to_bits(), dz: dz.to_bits() };
    let cache = CACHE.get_or_init(Default::default);
    if let Some(h) = cache.lock().expect("transfer cache poisoned").get(&key) {
        return Arc::clone(h);
    }
    let n = grid.n();
    let k = 2.0 * std::f64::consts::PI / wavelength;
    let q: Vec<f64> = (0..n).map(|i| fft::angular_frequency(i, n, grid.dx())).collect();
    let mut h = Vec::with_capacity(n * n);
    for qa in &q {
        for qb in &q {
            let q2 = qa * qa + qb * qb;
            let kz2 = k * k - q2;
            h.push(if kz2 < 0.0 {
                Complex64::default()
            } else {
                // kz − k written without cancellation.
                Complex64::from_polar(1.0, -dz * q2 / (k + kz2.sqrt()))
            });
        }
    }
    let h = Arc::new(h);
    let mut guard = cache.lock().expect("transfer cache poisoned");
    if guard.len() >= TRANSFER_CACHE_LIMIT {
        guard.clear();
    }
    guard.insert(key, Arc::clone(&h));
    h
}

fn check_window(field: &ComplexField) {
    if !log::log_enabled!(log::Level::Warn) {
        return;
    }
    if let Ok(d) = second_moment_diameter(field) {
        let extent = field.grid().extent();
        if d > WINDOW_FILL_LIMIT * extent {
            log::warn!("beam diameter {d:.4e} m exceeds {WINDOW_FILL_LIMIT}x the {extent:.4e} m window; expect wrap-around");
        }
    }
}

/// Propagates `field` by `dz` meters (negative for back-propagation).
pub fn angular_spectrum_propagate(field: &ComplexField, dz: f64) -> Result<ComplexField> {
    if !dz.is_finite() {
        return Err(Error::InvalidParameter(format!("propagation distance must be finite, got {dz}")));
    }
    if dz == 0.0 {
        return Ok(field.clone());
    }
    let grid = field.grid();
    let n = grid.n();
    let h = transfer_function(grid, field.wavelength(), dz);
    let mut data = field.samples().to_vec();
    let mut scratch = Vec::new();
    // |q| is symmetric in (qx, qy), so the transposed spectrum can be
    // multiplied by H directly.
    fft::forward_transposed(&mut data, &mut scratch, n);
    for (u, t) in data.iter_mut().zip(h.iter()) {
        *u *= t;
    }
    fft::inverse_from_transposed(&mut data, &mut scratch, n);
    let out = field.with_samples(data);
    check_window(&out);
    Ok(out)
}

/// One slab of the channel: `dz` meters of path with a thin screen at its center.
#[derive(Debug, Clone)]
pub struct Segment {
    pub dz: f64,
    pub screen: Arc<PhaseScreen>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentCount {
    /// Fewest segments with per-segment Rytov variance below 1.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

/// A frozen turbulent channel.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub segments: Vec<Segment>,
    pub total_length: f64,
    pub spec: TurbulenceSpec,
    pub seed: u64,
}

impl ChannelRealization {
    /// Channel of `total_length` with no turbulence.
    pub fn free_space(grid: Grid, total_length: f64, wavelength: f64) -> Self {
        Self {
            segments: vec![Segment { dz: total_length, screen: Arc::new(PhaseScreen::flat(grid)) }],
            total_length,
            spec: TurbulenceSpec::Ratio { d_over_r0: 0.0, aperture: 1.0, wavelength, path_length: total_length },
            seed: 0,
        }
    }

    /// Rytov variance of each segment (zero for a turbulence-free channel).
    pub fn segment_rytov(&self) -> Result<Vec<f64>> {
        let cn2 = self.spec.cn2()?;
        self.segments
            .iter()
            .map(|s| if cn2 == 0.0 { Ok(0.0) } else { rytov_variance(cn2, self.spec.wavelength(), s.dz) })
            .collect()
    }
}

/// Draws a channel realization: one screen per equal-length segment, each from
/// its own seed derived from `seed` and carrying the per-segment Fried parameter.
pub fn make_channel(
    seed: u64,
    spec: &TurbulenceSpec,
    generator: &ScreenGenerator,
    segments: SegmentCount,
) -> Result<ChannelRealization> {
    let m = match segments {
        SegmentCount::Auto => segment_path(spec, 1.0)?,
        SegmentCount::Fixed(0) => return Err(Error::InvalidParameter("segment count must be at least 1".into())),
        SegmentCount::Fixed(m) => m,
    };
    let total = spec.path_length();
    let dz = total / m as f64;
    let r0_seg = spec.segment_r0(m)?;
    let cn2 = spec.cn2()?;
    if cn2 > 0.0 {
        let sigma = rytov_variance(cn2, spec.wavelength(), dz)?;
        if sigma >= 1.0 {
            log::warn!("segment Rytov variance {sigma:.3} is not below 1; consider more segments");
        }
    }
    let segments = (0..m)
        .map(|i| {
            let screen = generator.sample(seed::derive(seed, &[i as u64]), r0_seg)?;
            Ok(Segment { dz, screen: Arc::new(screen) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelRealization { segments, total_length: total, spec: *spec, seed })
}

/// Symmetric split-step transmission: half drift, screen, half drift per
/// segment, with adjacent half drifts merged. `Reverse` visits the same
/// screens in the opposite order.
pub fn transmit(field: &ComplexField, channel: &ChannelRealization, direction: Direction) -> Result<ComplexField> {
    let order: Box<dyn Iterator<Item = &Segment>> = match direction {
        Direction::Forward => Box::new(channel.segments.iter()),
        Direction::Reverse => Box::new(channel.segments.iter().rev()),
    };
    let mut u = field.clone();
    let mut pending = 0.0;
    for seg in order {
        if seg.screen.grid() != u.grid() {
            return Err(Error::MismatchedGrid);
        }
        pending += 0.5 * seg.dz;
        u = angular_spectrum_propagate(&u, pending)?;
        if seg.screen.aperture_diameter() > 0.0 {
            u = apply_phase(&u, &seg.screen)?;
        }
        pending = 0.5 * seg.dz;
    }
    angular_spectrum_propagate(&u, pending)
}
