use std::f64::consts::PI;

use libm::{jn, tgamma};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use stimqkd::turbulence::{cn2_for_fried, DEFAULT_TERMS};
use stimqkd::zernike::{noll_covariance, noll_covariance_entry, noll_to_nm, zernike};
use stimqkd::{
    fried_parameter, rytov_variance, sample_screen, segment_path, structure_function_estimate, theoretical_structure,
    Grid, PhaseScreen, ScreenGenerator, TurbulenceSpec,
};

/// Kolmogorov phase spectrum constant in `Φ(f) = c·r0^{-5/3}·f^{-11/3}` (f in cycles per meter).
fn phase_psd_constant() -> f64 {
    tgamma(11.0 / 6.0).powi(2) / (2.0 * PI.powf(11.0 / 3.0)) * (24.0 / 5.0 * tgamma(6.0 / 5.0)).powf(5.0 / 6.0)
}

/// `∫₀^∞ x^{-14/3} J_a(x) J_b(x) dx` by Simpson's rule after `x = t³`.
fn bessel_moment(a: i32, b: i32) -> f64 {
    let t_max = 400f64.cbrt();
    let steps = 400_000;
    let h = t_max / steps as f64;
    let f = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        let x = t * t * t;
        3.0 * t * t * x.powf(-14.0 / 3.0) * jn(a, x) * jn(b, x)
    };
    let mut s = f(0.0) + f(t_max);
    for i in 1..steps {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Coefficient covariance at `D/r0 = 1` by direct integration of the phase
/// spectrum against the Zernike transforms.
fn spectral_covariance(j: usize, jp: usize) -> f64 {
    let (n, m) = noll_to_nm(j);
    let (np, mp) = noll_to_nm(jp);
    if m != mp || (m != 0 && j % 2 != jp % 2) {
        return 0.0;
    }
    let sign = if ((n + np - 2 * m) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let radial = sign * f64::from((n + 1) * (np + 1)).sqrt();
    8.0 * PI * phase_psd_constant() * PI.powf(5.0 / 3.0) * radial * bessel_moment(n as i32 + 1, np as i32 + 1)
}

#[test]
fn covariance_matches_spectral_integration() {
    for (j, jp) in [(2, 2), (3, 3), (4, 4), (5, 5), (7, 7), (11, 11), (22, 22), (2, 8), (4, 11), (3, 9), (6, 12)] {
        let oracle = spectral_covariance(j, jp);
        let value = noll_covariance_entry(j, jp);
        assert!((value - oracle).abs() < 1e-4 * oracle.abs().max(1e-3), "({j},{jp}): {value} vs {oracle}");
    }
    assert_eq!(noll_covariance_entry(2, 3), 0.0);
    assert_eq!(noll_covariance_entry(2, 4), 0.0);
}

#[test]
fn tilt_variance_is_the_classical_value() {
    // Tip and tilt carry 0.449·(D/r0)^{5/3} rad² each.
    assert!((noll_covariance_entry(2, 2) - 0.449).abs() < 2e-3);
    assert!((noll_covariance_entry(3, 3) - 0.449).abs() < 2e-3);
}

#[test]
fn covariance_is_symmetric_positive_definite() {
    let c = noll_covariance(DEFAULT_TERMS).unwrap();
    assert_eq!(c.nrows(), DEFAULT_TERMS);
    assert!((&c - c.transpose()).abs().max() < 1e-15);
    let eig = c.symmetric_eigen();
    assert!(eig.eigenvalues.min() > -1e-12 * eig.eigenvalues.max());
    assert!(noll_covariance(2).is_err());
}

#[test]
fn zernike_polynomials_are_orthonormal_on_the_disc() {
    let n = 400;
    let mut gram = [[0.0; 6]; 6];
    let mut count = 0usize;
    for iy in 0..n {
        for ix in 0..n {
            let x = (ix as f64 + 0.5) / n as f64 * 2.0 - 1.0;
            let y = (iy as f64 + 0.5) / n as f64 * 2.0 - 1.0;
            let rho = (x * x + y * y).sqrt();
            if rho > 1.0 {
                continue;
            }
            count += 1;
            let z: Vec<f64> = (2..8).map(|j| zernike(j, rho, y.atan2(x))).collect();
            for a in 0..6 {
                for b in 0..6 {
                    gram[a][b] += z[a] * z[b];
                }
            }
        }
    }
    for (a, row) in gram.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            let expected = if a == b { 1.0 } else { 0.0 };
            assert!((v / count as f64 - expected).abs() < 5e-3, "Z{} Z{}", a + 2, b + 2);
        }
    }
}

#[test]
fn reference_rytov_and_fried_values() {
    let cases = [(810e-9, 4.2e-14, 1000.0, 1.78), (810e-9, 4.2e-14, 250.0, 0.14), (840e-9, 4.2e-9, 1.0, 0.54)];
    for (wl, cn2, z, expected) in cases {
        let s = rytov_variance(cn2, wl, z).unwrap();
        assert!((s / expected - 1.0).abs() < 0.02, "σ²={s}, expected {expected}");
    }
    // r0 = (0.423·k²·Cn²·Z)^{-3/5}: about 1.52 cm here, so a 6 cm aperture sits near D/r0 = 3.94.
    let k = 2.0 * PI / 810e-9;
    let r0 = (0.423 * k * k * 4.2e-14 * 1000.0).powf(-0.6);
    let ratio = 0.06 / fried_parameter(4.2e-14, 810e-9, 1000.0).unwrap();
    assert!((ratio / (0.06 / r0) - 1.0).abs() < 1e-12, "D/r0 = {ratio}");
    assert!((ratio - 3.94).abs() < 0.01);
}

#[test]
fn fried_parameter_round_trips_through_cn2() {
    let cn2 = cn2_for_fried(0.02, 810e-9, 1000.0).unwrap();
    assert!((fried_parameter(cn2, 810e-9, 1000.0).unwrap() / 0.02 - 1.0).abs() < 1e-12);
    assert!(fried_parameter(-1.0, 810e-9, 1000.0).is_err());
    assert!(rytov_variance(1e-14, 0.0, 1000.0).is_err());
}

#[test]
fn segmentation_brings_rytov_variance_below_one() {
    let spec = TurbulenceSpec::Path { cn2: 4.2e-14, wavelength: 810e-9, path_length: 1000.0 };
    let m = segment_path(&spec, 1.0).unwrap();
    let cn2 = spec.cn2().unwrap();
    assert!(rytov_variance(cn2, 810e-9, 1000.0 / m as f64).unwrap() < 1.0);
    assert!(m == 1 || rytov_variance(cn2, 810e-9, 1000.0 / (m - 1) as f64).unwrap() >= 1.0);
    let calm = TurbulenceSpec::Ratio { d_over_r0: 0.0, aperture: 0.06, wavelength: 810e-9, path_length: 1000.0 };
    assert_eq!(segment_path(&calm, 1.0).unwrap(), 1);
    assert!(calm.r0().unwrap().is_infinite());
}

#[test]
fn segment_r0_recombines_to_path_r0() {
    let spec = TurbulenceSpec::Ratio { d_over_r0: 3.0, aperture: 0.06, wavelength: 810e-9, path_length: 1000.0 };
    let r0 = spec.r0().unwrap();
    for m in 1..6 {
        // Independent slabs add r0^{-5/3}.
        let seg = spec.segment_r0(m).unwrap();
        assert!(((m as f64 * seg.powf(-5.0 / 3.0)).powf(-3.0 / 5.0) / r0 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn screens_are_seeded_and_scale_with_r0() {
    let g = Grid::with_extent(96, 0.08).unwrap();
    let gen = ScreenGenerator::new(g, 0.06, 20).unwrap();
    let a = gen.sample(11, 0.02).unwrap();
    let b = gen.sample(11, 0.02).unwrap();
    let c = gen.sample(12, 0.02).unwrap();
    assert_eq!(a.phase(), b.phase());
    assert_ne!(a.phase(), c.phase());
    assert_eq!(a.seed(), Some(11));
    let weak = gen.sample(11, 0.04).unwrap();
    let ratio = 2f64.powf(5.0 / 6.0);
    for (x, y) in a.phase().iter().zip(weak.phase()) {
        assert!((x - ratio * y).abs() < 1e-12 * (1.0 + x.abs()));
    }
    let flat = gen.sample(11, f64::INFINITY).unwrap();
    assert!(flat.phase().iter().all(|&p| p == 0.0));
    assert!(gen.sample(1, -1.0).is_err());
}

#[test]
fn phase_vanishes_outside_the_aperture() {
    let g = Grid::with_extent(96, 0.08).unwrap();
    let gen = ScreenGenerator::new(g, 0.04, 20).unwrap();
    let s = gen.sample(3, 0.01).unwrap();
    for ((x, y), p) in g.points().zip(s.phase()) {
        if (x * x + y * y).sqrt() > 0.0201 {
            assert_eq!(*p, 0.0);
        }
    }
    assert!(ScreenGenerator::new(g, 0.2, 20).is_err());
}

#[test]
fn coefficient_draws_follow_the_covariance() {
    let g = Grid::with_extent(64, 0.08).unwrap();
    let terms = 9;
    let gen = ScreenGenerator::new(g, 0.06, terms).unwrap();
    let cov = noll_covariance(terms).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let draws = 20_000;
    let mut acc = nalgebra::DMatrix::<f64>::zeros(terms, terms);
    for _ in 0..draws {
        let a = gen.sample_coefficients(&mut rng, 1.0);
        acc += &a * a.transpose();
    }
    acc /= draws as f64;
    for i in 0..terms {
        let rel = acc[(i, i)] / cov[(i, i)] - 1.0;
        assert!(rel.abs() < 0.05, "term {}: {rel}", i + 2);
    }
    // The tilt/coma correlation is the largest off-diagonal entry in this block.
    assert!((acc[(0, 6)] - cov[(0, 6)]).abs() < 0.1 * cov[(0, 6)].abs());
}

#[test]
fn structure_function_follows_kolmogorov() {
    let aperture = 0.06;
    let g = Grid::with_extent(64, aperture).unwrap();
    let r0 = aperture / 2.0;
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let gen = ScreenGenerator::new(g, aperture, DEFAULT_TERMS).unwrap();
    let screens: Vec<PhaseScreen> = (0..400).map(|_| gen.sample_with(&mut rng, r0).unwrap()).collect();
    let seps: Vec<f64> = [0.1, 0.2, 0.3, 0.4, 0.5].iter().map(|f| f * aperture).collect();
    for p in structure_function_estimate(&screens, &seps).unwrap() {
        let theory = theoretical_structure(p.r, r0);
        assert!((p.estimate / theory - 1.0).abs() < 0.2, "r={}: {} vs {theory}", p.r, p.estimate);
        assert!(p.pairs > 0);
    }
    assert!(structure_function_estimate(&screens[..1], &seps).is_err());
    assert!(structure_function_estimate(&screens, &[aperture * 1.5]).is_err());
}

#[test]
fn one_off_screen_uses_the_path_fried_parameter() {
    let g = Grid::with_extent(64, 0.08).unwrap();
    let spec = TurbulenceSpec::Ratio { d_over_r0: 2.0, aperture: 0.06, wavelength: 810e-9, path_length: 1000.0 };
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let s = sample_screen(&mut rng, &spec, 0.06, 10, g).unwrap();
    assert!((s.r0() - 0.03).abs() < 1e-15);
    assert_eq!(s.terms(), 10);
}
