use std::f64::consts::PI;

use nalgebra::DMatrix;
use stimqkd::mub::{diameter_spread, oam_range, omega, verify_states, weyl_product, MAX_DIMENSION};
use stimqkd::{
    build_mub_pair, eigenbasis, synthesize_states, verify_mub, weyl_operators, CoefficientBasis, Complex64, Error,
    Grid, MubSet,
};

fn w5(power: i32) -> Complex64 {
    Complex64::from_polar(1.0 / 5f64.sqrt(), 2.0 * PI * f64::from(power) / 5.0)
}

/// Tabulated five-dimensional bases, one vector per row, as powers of `e^{2πi/5}`.
const D5_FIRST: [[i32; 5]; 5] =
    [[-2, 0, 1, 1, 0], [-1, 0, 0, -1, 2], [0, -2, 0, 1, 1], [1, 1, 0, -2, 0], [1, 0, -2, 0, 1]];
const D5_SECOND: [[i32; 5]; 5] =
    [[0, -1, -1, 0, 2], [2, 0, -1, -1, 0], [0, 0, 1, -2, 1], [1, -2, 1, 0, 0], [0, 1, -2, 1, 0]];

fn tabulated_d2() -> [Vec<Vec<Complex64>>; 2] {
    let s = 1.0 / 2f64.sqrt();
    let c = |re: f64, im: f64| Complex64::new(re * s, im * s);
    [
        vec![vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(-1.0, 0.0)]],
        vec![vec![c(1.0, 0.0), c(0.0, -1.0)], vec![c(1.0, 0.0), c(0.0, 1.0)]],
    ]
}

fn tabulated_d5() -> [Vec<Vec<Complex64>>; 2] {
    let rows = |t: &[[i32; 5]; 5]| t.iter().map(|r| r.iter().map(|&p| w5(p)).collect()).collect();
    [rows(&D5_FIRST), rows(&D5_SECOND)]
}

/// Largest entrywise distance between `u` and `v` after removing their relative global phase.
fn phase_distance(u: &[Complex64], v: &[Complex64]) -> f64 {
    let overlap: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
    let phase = Complex64::from_polar(1.0, overlap.arg());
    u.iter().zip(v).map(|(a, b)| (a * phase - b).norm()).fold(0.0, f64::max)
}

/// Matches every tabulated vector to a distinct basis vector up to global phase.
fn assert_matches(basis: &CoefficientBasis, expected: &[Vec<Complex64>]) {
    let mut used = vec![false; basis.d];
    for (i, v) in expected.iter().enumerate() {
        let (best, dist) = (0..basis.d)
            .filter(|&j| !used[j])
            .map(|j| (j, phase_distance(&basis.vector(j), v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(dist < 1e-8, "{}: vector {i} off by {dist}", basis.generator_label);
        used[best] = true;
    }
}

#[test]
fn two_dimensional_bases_match_the_tabulated_vectors() {
    let set = build_mub_pair(2).unwrap();
    for (basis, expected) in set.bases.iter().zip(tabulated_d2()) {
        assert_matches(basis, &expected);
    }
    // In two dimensions the eigenvalue ordering fixes the order as well.
    let expected = tabulated_d2();
    for (basis, rows) in set.bases.iter().zip(&expected) {
        for (j, v) in rows.iter().enumerate() {
            assert!(phase_distance(&basis.vector(j), v) < 1e-8);
        }
    }
}

#[test]
fn five_dimensional_bases_match_the_tabulated_vectors() {
    let set = build_mub_pair(5).unwrap();
    assert_eq!(set.oam_range, vec![-2, -1, 0, 1, 2]);
    for (basis, expected) in set.bases.iter().zip(tabulated_d5()) {
        assert_matches(basis, &expected);
    }
}

#[test]
fn tabulated_vectors_are_themselves_unbiased() {
    for tab in [tabulated_d2(), tabulated_d5()] {
        let d = tab[0].len();
        for u in &tab[0] {
            for v in &tab[1] {
                let ip: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                assert!((ip.norm_sqr() - 1.0 / d as f64).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn every_supported_dimension_certifies() {
    for d in 2..=MAX_DIMENSION {
        let set = build_mub_pair(d).unwrap();
        assert_eq!(set.bases.len(), 2);
        assert_eq!(set.oam_range.len(), d);
        let report = verify_mub(&set, 1e-10);
        assert!(report.passed, "d={d}: {report}");
    }
    assert!(matches!(build_mub_pair(1), Err(Error::InvalidDimension(1))));
    assert!(matches!(build_mub_pair(11), Err(Error::InvalidDimension(11))));
}

#[test]
fn construction_is_deterministic() {
    for d in [3, 5, 8] {
        assert_eq!(build_mub_pair(d).unwrap(), build_mub_pair(d).unwrap());
    }
}

#[test]
fn fourier_and_computational_bases_are_unbiased() {
    let d = 4;
    let dft = DMatrix::from_fn(d, d, |j, k| {
        Complex64::from_polar(1.0 / (d as f64).sqrt(), 2.0 * PI * (j * k) as f64 / d as f64)
    });
    let id = DMatrix::<Complex64>::identity(d, d);
    let basis = |m: DMatrix<Complex64>, label: &str| CoefficientBasis { d, matrix: m, generator_label: label.into() };
    let good = MubSet { d, bases: vec![basis(id.clone(), "I"), basis(dft, "F")], oam_range: oam_range(d) };
    assert!(verify_mub(&good, 1e-12).passed);
    let bad = MubSet { d, bases: vec![basis(id.clone(), "I"), basis(id, "I")], oam_range: oam_range(d) };
    let report = verify_mub(&bad, 1e-12);
    assert!(!report.passed);
    assert!((report.unbiasedness_deviation - 0.75).abs() < 1e-12);
}

#[test]
fn weyl_operators_satisfy_the_commutation_relation() {
    for d in 2..=7 {
        let (z, x) = weyl_operators(d).unwrap();
        let zx = &z * &x;
        let xz = &x * &z;
        assert!((zx - xz * omega(d)).norm() < 1e-12, "d={d}");
        // X shifts |i⟩ to |i+1⟩.
        assert_eq!(x[(1, 0)], Complex64::new(1.0, 0.0));
        assert!((z[(1, 1)] - omega(d)).norm() < 1e-15);
    }
}

#[test]
fn eigenbasis_vectors_are_eigenvectors() {
    for d in [3, 6, 9] {
        let op = weyl_product(d, 1).unwrap();
        let basis = eigenbasis(&op, "XZ").unwrap();
        for j in 0..d {
            let v = nalgebra::DVector::from_vec(basis.vector(j));
            let uv = &op * &v;
            let lambda = v.dotc(&uv);
            assert!((uv - v * lambda).norm() < 1e-10);
            assert!((lambda.norm() - 1.0).abs() < 1e-10);
        }
        // First significant entry of every vector is real and positive.
        for j in 0..d {
            let first = basis.vector(j).into_iter().find(|c| c.norm() > 1e-8).unwrap();
            assert!(first.im.abs() < 1e-12 && first.re > 0.0);
        }
    }
}

#[test]
fn oam_ranges_skip_zero_only_for_even_dimensions() {
    assert_eq!(oam_range(2), vec![-1, 1]);
    assert_eq!(oam_range(3), vec![-1, 0, 1]);
    assert_eq!(oam_range(4), vec![-2, -1, 1, 2]);
    assert_eq!(oam_range(5), vec![-2, -1, 0, 1, 2]);
}

#[test]
fn sampled_states_certify_on_a_fine_grid() {
    for d in [2, 5] {
        let set = build_mub_pair(d).unwrap();
        let grid = Grid::with_extent(512, 0.3).unwrap();
        let states = synthesize_states(&set, 0.01, 810e-9, grid).unwrap();
        let report = verify_states(&states, 1e-3).unwrap();
        assert!(report.passed, "d={d}: {report}");
        assert!(diameter_spread(&states).unwrap() < 0.25);
    }
}
