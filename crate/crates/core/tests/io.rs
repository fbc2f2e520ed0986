use stimqkd::io::{read_field, write_field, write_screen};
use stimqkd::{build_mub_pair, synthesize_states, Grid, PhaseScreen, ScreenGenerator};

#[test]
fn fields_round_trip_through_text() {
    let g = Grid::with_extent(64, 0.1).unwrap();
    let set = build_mub_pair(3).unwrap();
    let u = synthesize_states(&set, 0.004, 810e-9, g).unwrap().remove(1).remove(2);
    let mut buf = Vec::new();
    write_field(&mut buf, &u).unwrap();
    let back = read_field(buf.as_slice()).unwrap();
    assert_eq!(back.grid(), g);
    assert_eq!(back.wavelength(), u.wavelength());
    for (a, b) in u.samples().iter().zip(back.samples()) {
        assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
    }
}

#[test]
fn screens_are_written_as_unit_amplitude() {
    let g = Grid::with_extent(64, 0.1).unwrap();
    let s = ScreenGenerator::new(g, 0.08, 10).unwrap().sample(4, 0.02).unwrap();
    let mut buf = Vec::new();
    write_screen(&mut buf, &s).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("# n dx wavelength\n64 "));
    let values: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .flat_map(|l| l.split_whitespace().map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .collect();
    let (amp, phase) = values.split_at(g.len());
    assert!(amp.iter().all(|&a| a == 1.0));
    for (a, b) in phase.iter().zip(s.phase()) {
        assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
    }
    let flat = PhaseScreen::flat(g);
    let mut buf = Vec::new();
    write_screen(&mut buf, &flat).unwrap();
    assert!(read_field(buf.as_slice()).is_err(), "zero wavelength is not a valid field");
}

#[test]
fn malformed_files_are_rejected() {
    assert!(read_field("".as_bytes()).is_err());
    assert!(read_field("64 1e-3\n".as_bytes()).is_err());
    assert!(read_field("64 1e-3 8.1e-7\n1 2 3\n".as_bytes()).is_err());
}
