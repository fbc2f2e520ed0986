//! Plain-text grid export.
//!
//! Layout: a `# n dx wavelength` header line followed by the three values,
//! then `n` rows of amplitude and `n` rows of phase (radians), each block
//! preceded by a `# amplitude` / `# phase` marker. Phase screens are written
//! with unit amplitude and a wavelength of 0.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid};
use crate::turbulence::PhaseScreen;

fn write_planes<W: Write>(mut w: W, grid: Grid, wavelength: f64, amp: &[f64], phase: &[f64]) -> Result<()> {
    let n = grid.n();
    writeln!(w, "# n dx wavelength")?;
    writeln!(w, "{n} {:e} {:e}", grid.dx(), wavelength)?;
    for (name, plane) in [("amplitude", amp), ("phase", phase)] {
        writeln!(w, "# {name}")?;
        for row in plane.chunks_exact(n) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

pub fn write_field<W: Write>(w: W, field: &ComplexField) -> Result<()> {
    let amp: Vec<f64> = field.samples().iter().map(|c| c.norm()).collect();
    let phase: Vec<f64> = field.samples().iter().map(|c| c.arg()).collect();
    write_planes(w, field.grid(), field.wavelength(), &amp, &phase)
}

pub fn write_screen<W: Write>(w: W, screen: &PhaseScreen) -> Result<()> {
    write_planes(w, screen.grid(), 0.0, &vec![1.0; screen.grid().len()], screen.phase())
}

/// Reads a field written by [`write_field`].
pub fn read_field<R: BufRead>(r: R) -> Result<ComplexField> {
    let parse_err = |msg: &str| Error::InvalidParameter(format!("malformed grid file: {msg}"));
    let mut lines = r.lines().filter(|l| l.as_ref().map_or(true, |s| !s.starts_with('#')));
    let header = lines.next().ok_or_else(|| parse_err("missing header"))??;
    let mut it = header.split_whitespace();
    let n: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("bad n"))?;
    let dx: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("bad dx"))?;
    let wavelength: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("bad wavelength"))?;
    let mut values = Vec::with_capacity(2 * n * n);
    for line in lines {
        for tok in line?.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| parse_err("bad value"))?);
        }
    }
    if values.len() != 2 * n * n {
        return Err(parse_err("wrong number of values"));
    }
    let (amp, phase) = values.split_at(n * n);
    let samples = amp.iter().zip(phase).map(|(&a, &p)| Complex64::from_polar(a, p)).collect();
    ComplexField::from_samples(Grid::new(n, dx)?, wavelength, samples)
}
