//! Binary field and state dumps, CSV and JSON writers.
//!
//! `PTFLD1`: magic, three `u32` dims, `f64` spacing, then row-major `f64`
//! values (complex fields interleaved re, im), all little-endian.
//! `PTSLT1`: magic, `u32` N, then 2N complex `PTFLD1` blocks (up, down).

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Field, Grid3, RealField};
use crate::slater::{SlaterState, SpinOrbital};
use crate::C64;

pub const FIELD_MAGIC: &[u8; 6] = b"PTFLD1";
pub const STATE_MAGIC: &[u8; 6] = b"PTSLT1";

fn write_header(w: &mut impl Write, grid: &Grid3) -> Result<()> {
    w.write_all(FIELD_MAGIC)?;
    for d in grid.dims() {
        let d = u32::try_from(d).map_err(|_| Error::Format("dimension exceeds u32".into()))?;
        w.write_all(&d.to_le_bytes())?;
    }
    w.write_all(&grid.spacing().to_le_bytes())?;
    Ok(())
}

fn read_array<const K: usize>(r: &mut impl Read) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated dump".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array::<8>(r)?))
}

fn read_header(r: &mut impl Read) -> Result<Grid3> {
    if &read_array::<6>(r)? != FIELD_MAGIC {
        return Err(Error::Format("bad field magic".into()));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = u32::from_le_bytes(read_array::<4>(r)?) as usize;
    }
    let spacing = read_f64(r)?;
    Grid3::new(dims, spacing)
}

pub fn write_real_field(w: &mut impl Write, f: &RealField) -> Result<()> {
    write_header(w, f.grid())?;
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_complex_field(w: &mut impl Write, f: &ComplexField) -> Result<()> {
    write_header(w, f.grid())?;
    for v in f.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_real_field(r: &mut impl Read) -> Result<RealField> {
    let grid = read_header(r)?;
    let values = (0..grid.len()).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
    Field::from_vec(grid, values)
}

pub fn read_complex_field(r: &mut impl Read) -> Result<ComplexField> {
    let grid = read_header(r)?;
    let values = (0..grid.len())
        .map(|_| Ok(C64::new(read_f64(r)?, read_f64(r)?)))
        .collect::<Result<Vec<_>>>()?;
    Field::from_vec(grid, values)
}

pub fn write_state(w: &mut impl Write, state: &SlaterState) -> Result<()> {
    w.write_all(STATE_MAGIC)?;
    let n = u32::try_from(state.n()).map_err(|_| Error::Format("N exceeds u32".into()))?;
    w.write_all(&n.to_le_bytes())?;
    for o in state.orbitals() {
        write_complex_field(w, &o.up)?;
        write_complex_field(w, &o.down)?;
    }
    Ok(())
}

/// Reads a state dump and re-checks orthonormality.
pub fn read_state(r: &mut impl Read) -> Result<SlaterState> {
    if &read_array::<6>(r)? != STATE_MAGIC {
        return Err(Error::Format("bad state magic".into()));
    }
    let n = u32::from_le_bytes(read_array::<4>(r)?) as usize;
    let mut orbitals = Vec::with_capacity(n);
    for _ in 0..n {
        let up = read_complex_field(r)?;
        let down = read_complex_field(r)?;
        orbitals.push(SpinOrbital::new(up, down)?);
    }
    SlaterState::new(orbitals)
}

/// Float formatting used in every CSV: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Minimal CSV writer: header row, comma-separated, LF line endings.
pub struct CsvWriter<W: Write> {
    inner: W,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut inner: W, header: &[&str]) -> Result<Self> {
        writeln!(inner, "{}", header.join(","))?;
        Ok(Self {
            inner,
            columns: header.len(),
        })
    }

    /// Writes one row of pre-formatted cells.
    pub fn row(&mut self, cells: &[String]) -> Result<()> {
        if cells.len() != self.columns {
            return Err(Error::Format(format!(
                "row has {} cells, header has {}",
                cells.len(),
                self.columns
            )));
        }
        writeln!(self.inner, "{}", cells.join(","))?;
        Ok(())
    }

    pub fn floats(&mut self, values: &[f64]) -> Result<()> {
        let cells: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
        self.row(&cells)
    }

    pub fn into_inner(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Pretty JSON with a trailing newline. Struct fields keep declaration order.
pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip() {
        let grid = Grid3::new([8, 9, 10], 0.3).unwrap();
        let f = RealField::from_fn(grid, |x| x[0] - 2.0 * x[1] * x[2]);
        let mut buf = Vec::new();
        write_real_field(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), 6 + 12 + 8 + 8 * grid.len());
        assert_eq!(&buf[..6], b"PTFLD1");
        let g = read_real_field(&mut buf.as_slice()).unwrap();
        assert_eq!(f.values(), g.values());
        assert_eq!(g.grid(), &grid);
    }

    #[test]
    fn truncated_dump_rejected() {
        let grid = Grid3::cubic(8, 1.0).unwrap();
        let f = ComplexField::zeros(grid);
        let mut buf = Vec::new();
        write_complex_field(&mut buf, &f).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_complex_field(&mut buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn csv_layout() {
        let mut w = CsvWriter::new(Vec::new(), &["a", "b"]).unwrap();
        w.floats(&[0.1, -2.0]).unwrap();
        assert!(w.row(&["x".into()]).is_err());
        let s = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(s, "a,b\n1.0000000000000001e-1,-2.0000000000000000e0\n");
    }
}
