//! Mutually unbiased bases built from eigenbases of Weyl operators, and their
//! mapping onto superpositions of OAM modes.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{inner_product, lg_mode, second_moment_diameter, superpose, ComplexField, Grid, ModeSpec};

pub type CMatrix = DMatrix<Complex64>;

/// Largest supported dimension.
pub const MAX_DIMENSION: usize = 10;

const UNITARY_TOLERANCE: f64 = 1e-10;
const CERTIFY_TOLERANCE: f64 = 1e-10;
const PHASE_TIE: f64 = 1e-9;

/// An orthonormal basis of `C^d`; column `j` is basis vector `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientBasis {
    pub d: usize,
    pub matrix: CMatrix,
    pub generator_label: String,
}

impl CoefficientBasis {
    pub fn vector(&self, j: usize) -> Vec<Complex64> {
        self.matrix.column(j).iter().copied().collect()
    }
}

/// A family of bases together with the OAM charge carried by each coefficient index.
#[derive(Debug, Clone, PartialEq)]
pub struct MubSet {
    pub d: usize,
    pub bases: Vec<CoefficientBasis>,
    pub oam_range: Vec<i32>,
}

/// Certification summary from [`verify_mub`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MubReport {
    /// `max |M†M − I|` over all bases.
    pub orthonormality_deviation: f64,
    /// `max ||⟨u|v⟩|² − 1/d|` over vectors from distinct bases.
    pub unbiasedness_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl std::fmt::Display for MubReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "orthonormality deviation: {:.3e}", self.orthonormality_deviation)?;
        writeln!(f, "unbiasedness deviation:   {:.3e}", self.unbiasedness_deviation)?;
        write!(f, "tolerance {:.1e}: {}", self.tolerance, if self.passed { "PASS" } else { "FAIL" })
    }
}

/// Primitive root `ω = e^{2πi/d}`.
pub fn omega(d: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI / d as f64)
}

/// Clock `Z = diag(ω^i)` and shift `X|i⟩ = |i+1 mod d⟩` with `ω = e^{2πi/d}`.
pub fn weyl_operators(d: usize) -> Result<(CMatrix, CMatrix)> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let w = 2.0 * PI / d as f64;
    let z = CMatrix::from_fn(d, d, |i, j| if i == j { Complex64::from_polar(1.0, w * i as f64) } else { Complex64::default() });
    let x = CMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { Complex64::new(1.0, 0.0) } else { Complex64::default() });
    Ok((z, x))
}

/// `X·Z^power` for dimension `d`.
pub fn weyl_product(d: usize, power: usize) -> Result<CMatrix> {
    let (z, x) = weyl_operators(d)?;
    let mut op = x;
    for _ in 0..power {
        op *= &z;
    }
    Ok(op)
}

fn weyl_label(power: usize) -> String {
    match power {
        0 => "X".to_string(),
        1 => "XZ".to_string(),
        p => format!("XZ^{p}"),
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn unitarity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    max_abs(&(m.adjoint() * m - CMatrix::identity(n, n)))
}

fn phase_key(lambda: Complex64) -> f64 {
    let p = lambda.arg().rem_euclid(2.0 * PI);
    if 2.0 * PI - p < PHASE_TIE {
        0.0
    } else {
        p
    }
}

fn rounded(c: Complex64) -> (i64, i64) {
    ((c.re * 1e8).round() as i64, (c.im * 1e8).round() as i64)
}

fn fix_global_phase(v: &mut [Complex64]) {
    if let Some(lead) = v.iter().find(|c| c.norm() > 1e-8).copied() {
        let rot = lead.conj() / lead.norm();
        for c in v.iter_mut() {
            *c *= rot;
        }
    }
}

/// Candidate rotations for the Hermitian part; tried in order until every
/// eigenvector checks out against the original operator.
const ROTATIONS: [f64; 6] = [0.0, 0.317_732_1, 1.234_567_9, 0.071_067_8, std::f64::consts::E, 0.577_215_7];

/// Unit-norm eigenvectors of a unitary, ordered by eigenvalue phase in
/// `[0, 2π)` with the first non-negligible entry made real-positive.
pub fn eigenbasis(op: &CMatrix, label: impl Into<String>) -> Result<CoefficientBasis> {
    let d = op.nrows();
    if d == 0 || op.ncols() != d {
        return Err(Error::InvalidDimension(d));
    }
    let dev = unitarity_deviation(op);
    if !(dev < UNITARY_TOLERANCE) {
        return Err(Error::NonUnitary(dev));
    }

    let label = label.into();
    for &alpha in &ROTATIONS {
        // Eigenvectors of a normal matrix are shared with its Hermitian part
        // H = (e^{iα}U + e^{-iα}U†)/2, provided α keeps the eigenvalues of H apart.
        let rot = Complex64::from_polar(1.0, alpha);
        let h = (op * rot + op.adjoint() * rot.conj()) * Complex64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();

        let mut pairs = Vec::with_capacity(d);
        let mut ok = true;
        for j in 0..d {
            let mut v: Vec<Complex64> = eig.eigenvectors.column(j).iter().copied().collect();
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|c| *c /= norm);
            let vm = CMatrix::from_column_slice(d, 1, &v);
            let uv = op * &vm;
            let lambda = (vm.adjoint() * &uv)[(0, 0)];
            let resid = (uv - vm * lambda).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if resid > 1e-9 {
                ok = false;
                break;
            }
            fix_global_phase(&mut v);
            pairs.push((phase_key(lambda), v));
        }
        if !ok {
            continue;
        }
        let degenerate = {
            let mut keys: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            keys.sort_by(f64::total_cmp);
            keys.windows(2).any(|w| w[1] - w[0] < PHASE_TIE)
        };
        if degenerate {
            log::warn!("{label} has degenerate eigenvalues; ordering by tie-break");
        }
        pairs.sort_by(|a, b| {
            if (a.0 - b.0).abs() < PHASE_TIE {
                a.1.iter().map(|c| rounded(*c)).cmp(b.1.iter().map(|c| rounded(*c)))
            } else {
                a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal)
            }
        });
        let matrix = CMatrix::from_fn(d, d, |i, j| pairs[j].1[i]);
        return Ok(CoefficientBasis { d, matrix, generator_label: label });
    }
    Err(Error::Factorization("eigenvector verification failed for all rotations".into()))
}

/// OAM charges assigned to coefficient indices: `i − (d−1)/2` for odd `d`,
/// the symmetric range without zero for even `d`.
pub fn oam_range(d: usize) -> Vec<i32> {
    let d = d as i32;
    if d % 2 == 1 {
        (0..d).map(|i| i - (d - 1) / 2).collect()
    } else {
        let h = d / 2;
        (-h..=h).filter(|&l| l != 0).collect()
    }
}

/// Checks orthonormality of each basis and unbiasedness between every pair.
pub fn verify_mub(set: &MubSet, tol: f64) -> MubReport {
    let d = set.d as f64;
    let orth = set.bases.iter().map(|b| unitarity_deviation(&b.matrix)).fold(0.0, f64::max);
    let mut unb: f64 = 0.0;
    for (i, a) in set.bases.iter().enumerate() {
        for b in &set.bases[i + 1..] {
            let g = a.matrix.adjoint() * &b.matrix;
            for c in g.iter() {
                unb = unb.max((c.norm_sqr() - 1.0 / d).abs());
            }
        }
    }
    MubReport {
        orthonormality_deviation: orth,
        unbiasedness_deviation: unb,
        tolerance: tol,
        passed: orth < tol && unb < tol,
    }
}

fn pair(d: usize, a: usize, b: usize) -> Result<MubSet> {
    let bases = vec![
        eigenbasis(&weyl_product(d, a)?, weyl_label(a))?,
        eigenbasis(&weyl_product(d, b)?, weyl_label(b))?,
    ];
    Ok(MubSet { d, bases, oam_range: oam_range(d) })
}

/// Two certified mutually unbiased bases for dimension `d` in `2..=10`.
///
/// `d = 2` uses the eigenbases of X and XZ, `d = 5` those of XZ⁴ and XZ. Other
/// dimensions take the first pair `XZ^a, XZ^b` (`0 ≤ a < b ≤ d`) that certifies.
pub fn build_mub_pair(d: usize) -> Result<MubSet> {
    if !(2..=MAX_DIMENSION).contains(&d) {
        return Err(Error::InvalidDimension(d));
    }
    match d {
        2 => pair(2, 0, 1),
        5 => pair(5, 4, 1),
        _ => {
            for a in 0..d {
                for b in a + 1..=d {
                    let set = pair(d, a, b)?;
                    if verify_mub(&set, CERTIFY_TOLERANCE).passed {
                        return Ok(set);
                    }
                }
            }
            Err(Error::NoUnbiasedPair(d))
        }
    }
}

/// LG modes `LG_{l}` (`p = 0`) at the waist for each charge in `oam_range`.
pub fn oam_modes(oam_range: &[i32], w0: f64, wavelength: f64, grid: Grid) -> Result<Vec<ComplexField>> {
    oam_range.iter().map(|&l| lg_mode(&ModeSpec::new(w0, l, wavelength), grid)).collect()
}

/// Field for every basis vector: `states[basis][vector]`.
pub fn synthesize_states(set: &MubSet, w0: f64, wavelength: f64, grid: Grid) -> Result<Vec<Vec<ComplexField>>> {
    let modes = oam_modes(&set.oam_range, w0, wavelength, grid)?;
    set.bases
        .iter()
        .map(|b| (0..set.d).map(|j| superpose(&b.vector(j), &modes)).collect())
        .collect()
}

/// Field-level counterpart of [`verify_mub`] using grid inner products.
pub fn verify_states(states: &[Vec<ComplexField>], tol: f64) -> Result<MubReport> {
    let d = states.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let mut orth: f64 = 0.0;
    let mut unb: f64 = 0.0;
    for (bi, basis) in states.iter().enumerate() {
        for (i, u) in basis.iter().enumerate() {
            for (j, v) in basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                orth = orth.max((inner_product(u, v)? - target).norm());
            }
            for other in &states[bi + 1..] {
                for v in other {
                    unb = unb.max((inner_product(u, v)?.norm_sqr() - 1.0 / d as f64).abs());
                }
            }
        }
    }
    Ok(MubReport { orthonormality_deviation: orth, unbiasedness_deviation: unb, tolerance: tol, passed: orth < tol && unb < tol })
}

/// Relative spread `(max − min) / mean` of second-moment diameters over all states.
pub fn diameter_spread(states: &[Vec<ComplexField>]) -> Result<f64> {
    let ds = states.iter().flatten().map(second_moment_diameter).collect::<Result<Vec<_>>>()?;
    if ds.is_empty() {
        return Err(Error::ZeroField);
    }
    let (lo, hi) = ds.iter().fold((f64::INFINITY, 0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok((hi - lo) / (ds.iter().sum::<f64>() / ds.len() as f64))
}
