//! Binary field snapshots.
//!
//! Layout (little-endian): `b"CQWF"`, version byte `0x01`, `u8 d`, `u64 n1`,
//! `u64 nt` repeated `d - 1` times, `f64 N`, `f64 L`, `f64 A`, `f64 c`, then
//! `n1 * nt^(d-1)` complex values as interleaved `(re, im)` `f64` pairs,
//! row-major with `x1` slowest.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::grid::{make_grid, ComplexField, Grid, GridError, C64};

pub const MAGIC: [u8; 4] = *b"CQWF";
pub const VERSION: u8 = 0x01;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported snapshot version {0:#04x}")]
    BadVersion(u8),
    #[error("transverse counts differ ({0} vs {1}); only square transverse boxes are supported")]
    NonSquareTransverse(u64, u64),
    #[error("periodic x1 grids cannot be stored in slab snapshots")]
    PeriodicGrid,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: ComplexField,
    pub a: f64,
    pub c: f64,
}

impl Snapshot {
    pub fn new(field: ComplexField, a: f64, c: f64) -> Self {
        Self { field, a, c }
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), SnapshotError> {
        let g = self.field.grid();
        if g.is_periodic() {
            return Err(SnapshotError::PeriodicGrid);
        }
        w.write_all(&MAGIC)?;
        w.write_all(&[VERSION, g.dim() as u8])?;
        w.write_all(&(g.n1() as u64).to_le_bytes())?;
        for _ in 1..g.dim() {
            w.write_all(&(g.nt() as u64).to_le_bytes())?;
        }
        for x in [g.half_length(), g.period(), self.a, self.c] {
            w.write_all(&x.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(16 * g.len());
        for v in self.field.values() {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, SnapshotError> {
        let mut out = Vec::new();
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, SnapshotError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(SnapshotError::BadMagic(magic));
        }
        let mut b = [0u8; 2];
        r.read_exact(&mut b)?;
        if b[0] != VERSION {
            return Err(SnapshotError::BadVersion(b[0]));
        }
        let d = b[1] as usize;
        if d != 2 && d != 3 {
            return Err(GridError::UnsupportedDimension(d).into());
        }
        let n1 = read_u64(&mut r)?;
        let mut nts = Vec::with_capacity(d - 1);
        for _ in 1..d {
            nts.push(read_u64(&mut r)?);
        }
        if let Some(&other) = nts.iter().find(|&&x| x != nts[0]) {
            return Err(SnapshotError::NonSquareTransverse(nts[0], other));
        }
        let half_length = read_f64(&mut r)?;
        let period = read_f64(&mut r)?;
        let a = read_f64(&mut r)?;
        let c = read_f64(&mut r)?;
        let grid = make_grid(d, half_length, period, n1 as usize, nts[0] as usize)?;
        let mut raw = vec![0u8; 16 * grid.len()];
        r.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(16)
            .map(|ch| {
                let re = f64::from_le_bytes(ch[..8].try_into().unwrap());
                let im = f64::from_le_bytes(ch[8..].try_into().unwrap());
                C64::new(re, im)
            })
            .collect();
        Ok(Self {
            field: ComplexField::from_values(grid, values)?,
            a,
            c,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SnapshotError> {
        Self::read_from(bytes)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), SnapshotError> {
        let f = std::fs::File::create(path)?;
        let mut w = io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, SnapshotError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(io::BufReader::new(f))
    }
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
