//! Fidelity and crosstalk matrices, error rates, secure key rate and Monte
//! Carlo aggregation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{ensure_positive, Error, Result};
use crate::fft;
use crate::field::{inner_product, ComplexField, Grid};

/// `F[j][j'] = |⟨reference_j | received_j'⟩|²` with each received field normalized.
pub fn fidelity_matrix(received: &[ComplexField], reference: &[ComplexField]) -> Result<DMatrix<f64>> {
    if received.len() != reference.len() || received.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} received fields for {} references",
            received.len(),
            reference.len()
        )));
    }
    let d = received.len();
    let rx = received.iter().map(ComplexField::normalized).collect::<Result<Vec<_>>>()?;
    let mut f = DMatrix::zeros(d, d);
    for (j, r) in reference.iter().enumerate() {
        for (jp, u) in rx.iter().enumerate() {
            f[(j, jp)] = inner_product(r, u)?.norm_sqr();
        }
    }
    Ok(f)
}

/// Row-normalized crosstalk matrix for one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CrosstalkMatrix {
    pub d: usize,
    pub basis_label: String,
    pub entries: DMatrix<f64>,
}

/// `M[j][j'] = F[j][j'] / Σ_j' F[j][j']`.
pub fn normalize_crosstalk(f: &DMatrix<f64>, basis_label: impl Into<String>) -> Result<CrosstalkMatrix> {
    if f.nrows() != f.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} fidelity matrix", f.nrows(), f.ncols())));
    }
    let mut m = f.clone();
    for (j, mut row) in m.row_iter_mut().enumerate() {
        let s: f64 = row.sum();
        if !(s > 0.0) {
            return Err(Error::ZeroRow(j));
        }
        row /= s;
    }
    Ok(CrosstalkMatrix { d: f.nrows(), basis_label: basis_label.into(), entries: m })
}

/// Quantum error rate of one basis, `1 − tr(M)/d`.
pub fn qer(m: &CrosstalkMatrix) -> f64 {
    1.0 - m.entries.trace() / m.d as f64
}

/// Mean of the per-basis error rates.
pub fn total_qer(per_basis: &[f64]) -> Result<f64> {
    if per_basis.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    Ok(per_basis.iter().sum::<f64>() / per_basis.len() as f64)
}

fn xlog2x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Secure key rate `log₂d + 2(1−Q)log₂(1−Q) + 2Q·log₂(Q/(d−1))` in bits per
/// sifted symbol.
pub fn secure_key_rate(d: usize, q: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if !(0.0..1.0).contains(&q) {
        return Err(Error::QerDomain(q));
    }
    let dm1 = (d - 1) as f64;
    Ok((d as f64).log2() + 2.0 * xlog2x(1.0 - q) + 2.0 * (xlog2x(q) - q * dm1.log2()))
}

/// Largest error rate with a positive key rate.
pub fn q_max(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let (mut lo, mut hi) = (0.0, (d - 1) as f64 / d as f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if secure_key_rate(d, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Transform-plane sample spacing `λf/(n·dx)` behind a lens of focal length `f`.
pub fn transform_spacing(grid: Grid, wavelength: f64, focal_length: f64) -> f64 {
    wavelength * focal_length / (grid.n() as f64 * grid.dx())
}

/// Default detection disc: a tenth of the Rayleigh radius `1.22λf/D`, but
/// never smaller than half a transform-plane sample.
pub fn default_disc_radius(grid: Grid, wavelength: f64, focal_length: f64, aperture: f64) -> f64 {
    let rayleigh = 1.22 * wavelength * focal_length / aperture;
    (0.1 * rayleigh).max(0.5 * transform_spacing(grid, wavelength, focal_length))
}

/// Detected power fraction when `received` is projected with a hologram
/// encoding `projection` and the light within `disc_radius` of the axis in the
/// lens focal plane is collected. Averaged over the disc, so the
/// single-sample limit equals `|⟨projection|received⟩|²`.
pub fn on_axis_overlap(
    received: &ComplexField,
    projection: &ComplexField,
    disc_radius: f64,
    focal_length: f64,
) -> Result<f64> {
    received.ensure_same_grid(projection)?;
    ensure_positive("focal length", focal_length)?;
    let grid = received.grid();
    let spacing = transform_spacing(grid, received.wavelength(), focal_length);
    if !(disc_radius >= 0.5 * spacing) {
        return Err(Error::DiscTooSmall { radius: disc_radius, spacing });
    }
    let rx = received.normalized()?;
    let n = grid.n();
    let product: Vec<Complex64> = rx.samples().iter().zip(projection.samples()).map(|(a, b)| a * b.conj()).collect();
    let spectrum = fft::fft2(&product, n);
    let area2 = grid.cell_area().powi(2);
    let bins = ((disc_radius / spacing).floor() as usize).min(n / 2 - 1);
    let signed = |k: usize| if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
    let (mut sum, mut count) = (0.0, 0usize);
    for ky in (0..=bins).chain(n.saturating_sub(bins)..n) {
        for kx in (0..=bins).chain(n.saturating_sub(bins)..n) {
            let (fx, fy) = (signed(kx) * spacing, signed(ky) * spacing);
            if fx * fx + fy * fy > disc_radius * disc_radius {
                continue;
            }
            sum += spectrum[ky * n + kx].norm_sqr() * area2;
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

/// Statistics of one channel realization for one scenario point.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub per_basis_qer: Vec<f64>,
    pub qer: f64,
    pub key_rate: f64,
    pub fidelity_loss: f64,
}

impl Fragment {
    /// Builds a fragment from the raw fidelity matrix of each basis.
    pub fn from_fidelities(d: usize, fidelities: &[(String, DMatrix<f64>)]) -> Result<Self> {
        let mut per_basis = Vec::with_capacity(fidelities.len());
        let mut diag = Vec::new();
        for (label, f) in fidelities {
            if f.nrows() != d {
                return Err(Error::DimensionMismatch(format!("basis {label} has {} states, expected {d}", f.nrows())));
            }
            per_basis.push(qer(&normalize_crosstalk(f, label.clone())?));
            diag.extend(f.diagonal().iter().copied());
        }
        let q = total_qer(&per_basis)?;
        let fidelity_loss = 1.0 - diag.iter().sum::<f64>() / diag.len() as f64;
        Ok(Self { per_basis_qer: per_basis, qer: q, key_rate: secure_key_rate(d, q)?, fidelity_loss })
    }
}

/// Mean and standard error (sample standard deviation over `√N`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InsufficientSamples { needed: 2, got: n });
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Self { mean, se: (var / n as f64).sqrt() })
    }
}

/// Aggregated result of a scenario point over `realizations` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub per_basis_qer: Vec<Estimate>,
    pub qer: Estimate,
    pub key_rate: Estimate,
    pub fidelity_loss: Estimate,
    pub realizations: usize,
}

pub fn aggregate(fragments: &[Fragment]) -> Result<ScenarioResult> {
    let n = fragments.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let bases = fragments[0].per_basis_qer.len();
    if fragments.iter().any(|f| f.per_basis_qer.len() != bases) {
        return Err(Error::DimensionMismatch("fragments disagree on the number of bases".into()));
    }
    let column = |g: &dyn Fn(&Fragment) -> f64| -> Result<Estimate> {
        Estimate::of(&fragments.iter().map(g).collect::<Vec<_>>())
    };
    Ok(ScenarioResult {
        per_basis_qer: (0..bases).map(|b| column(&|f| f.per_basis_qer[b])).collect::<Result<_>>()?,
        qer: column(&|f| f.qer)?,
        key_rate: column(&|f| f.key_rate)?,
        fidelity_loss: column(&|f| f.fidelity_loss)?,
        realizations: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qer_arithmetic() {
        let f = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.8]);
        let m = normalize_crosstalk(&f, "X").unwrap();
        assert!((qer(&m) - 0.15).abs() < 1e-12);
    }

    #[test]
    fn zero_row_is_reported() {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(normalize_crosstalk(&f, "X"), Err(Error::ZeroRow(1))));
    }

    #[test]
    fn key_rate_domain() {
        assert_eq!(secure_key_rate(2, 0.0).unwrap(), 1.0);
        assert!(matches!(secure_key_rate(2, 1.0), Err(Error::QerDomain(_))));
        assert!(matches!(secure_key_rate(2, -0.1), Err(Error::QerDomain(_))));
        assert!(secure_key_rate(1, 0.0).is_err());
    }

    #[test]
    fn two_sample_aggregate() {
        let frag = |q: f64| Fragment { per_basis_qer: vec![q], qer: q, key_rate: 0.0, fidelity_loss: 0.0 };
        let r = aggregate(&[frag(0.1), frag(0.3)]).unwrap();
        assert!((r.qer.mean - 0.2).abs() < 1e-15);
        assert!((r.qer.se - 0.1).abs() < 1e-15);
        assert!(aggregate(&[frag(0.1)]).is_err());
    }
}
