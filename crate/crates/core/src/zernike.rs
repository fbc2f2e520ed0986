//! Zernike polynomials in Noll ordering and the Kolmogorov covariance of their
//! expansion coefficients.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use libm::tgamma;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// First Noll index used in expansions (piston is excluded).
pub const FIRST_INDEX: usize = 2;

/// Radial order `n` and azimuthal order `m ≥ 0` of Noll index `j ≥ 1`.
pub fn noll_to_nm(j: usize) -> (u32, u32) {
    assert!(j >= 1, "Noll indices start at 1");
    let mut n = 0usize;
    while (n + 1) * (n + 2) / 2 < j {
        n += 1;
    }
    let k = j - n * (n + 1) / 2;
    let m = if n % 2 == 0 { 2 * (k / 2) } else { 2 * ((k - 1) / 2) + 1 };
    (n as u32, m as u32)
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Radial polynomial `R_n^m(ρ)`.
pub fn radial(n: u32, m: u32, rho: f64) -> f64 {
    if (n - m) % 2 == 1 {
        return 0.0;
    }
    let half_minus = (n - m) / 2;
    let half_plus = (n + m) / 2;
    (0..=half_minus)
        .map(|s| {
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            sign * factorial(n - s) / (factorial(s) * factorial(half_plus - s) * factorial(half_minus - s))
                * rho.powi((n - 2 * s) as i32)
        })
        .sum()
}

/// Noll-normalized Zernike polynomial `Z_j(ρ, θ)` on the unit disc
/// (unit mean square over the disc).
pub fn zernike(j: usize, rho: f64, theta: f64) -> f64 {
    let (n, m) = noll_to_nm(j);
    let r = radial(n, m, rho);
    if m == 0 {
        (f64::from(n) + 1.0).sqrt() * r
    } else {
        let norm = (2.0 * (f64::from(n) + 1.0)).sqrt();
        let angle = f64::from(m) * theta;
        if j % 2 == 0 {
            norm * r * angle.cos()
        } else {
            norm * r * angle.sin()
        }
    }
}

/// Covariance prefactor `Γ(14/3)·((24/5)Γ(6/5))^{5/6}·Γ(11/6)² / (2^{8/3}·π)`.
///
/// This is the phase spectrum constant carried through the Bessel moment
/// integral exactly; the often-quoted `1/(2π²)` normalization is 1.07% high
/// and misses the classical tip/tilt variance of 0.449.
fn kolmogorov_constant() -> f64 {
    tgamma(14.0 / 3.0) * (24.0 / 5.0 * tgamma(6.0 / 5.0)).powf(5.0 / 6.0) * tgamma(11.0 / 6.0).powi(2)
        / (2f64.powf(8.0 / 3.0) * PI)
}

/// `⟨a_j a_j'⟩` for Kolmogorov turbulence at `D/r0 = 1` (rad²).
pub fn noll_covariance_entry(j: usize, jp: usize) -> f64 {
    let (n, m) = noll_to_nm(j);
    let (np, mp) = noll_to_nm(jp);
    if m != mp || (m != 0 && j % 2 != jp % 2) {
        return 0.0;
    }
    let (n, np, m) = (f64::from(n), f64::from(np), f64::from(m));
    let sign = if ((n + np - 2.0 * m) / 2.0).round() as i64 % 2 == 0 { 1.0 } else { -1.0 };
    kolmogorov_constant() * sign * ((n + 1.0) * (np + 1.0)).sqrt() * tgamma((n + np - 5.0 / 3.0) / 2.0)
        / (tgamma((n - np + 17.0 / 3.0) / 2.0)
            * tgamma((np - n + 17.0 / 3.0) / 2.0)
            * tgamma((n + np + 23.0 / 3.0) / 2.0))
}

/// Covariance of the `terms` coefficients `j = 2 ..= terms + 1` at `D/r0 = 1`.
/// Scale by `(D/r0)^{5/3}` for other turbulence strengths.
pub fn noll_covariance(terms: usize) -> Result<DMatrix<f64>> {
    if terms < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 Zernike terms, got {terms}")));
    }
    Ok(DMatrix::from_fn(terms, terms, |a, b| noll_covariance_entry(a + FIRST_INDEX, b + FIRST_INDEX)))
}

/// Symmetric square root `L` of the unit covariance with `L·Lᵀ = C`.
pub(crate) fn covariance_factor(terms: usize) -> Result<Arc<DMatrix<f64>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<DMatrix<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(f) = cache.lock().expect("covariance cache poisoned").get(&terms) {
        return Ok(Arc::clone(f));
    }
    let factor = Arc::new(psd_sqrt(&noll_covariance(terms)?)?);
    cache.lock().expect("covariance cache poisoned").insert(terms, Arc::clone(&factor));
    Ok(factor)
}

/// `V·diag(√λ)` from a symmetric eigendecomposition, clamping eigenvalues in
/// `[−1e-10·tr, 0)` to zero.
pub(crate) fn psd_sqrt(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let trace = cov.trace();
    let eig = cov.clone().symmetric_eigen();
    let floor = -1e-10 * trace.abs();
    let mut roots = eig.eigenvalues.clone();
    for v in roots.iter_mut() {
        if *v < floor {
            return Err(Error::Factorization(format!(
                "covariance eigenvalue {v:.3e} is below the repair threshold {floor:.3e}"
            )));
        }
        *v = v.max(0.0).sqrt();
    }
    Ok(eig.eigenvectors * DMatrix::from_diagonal(&roots))
}
