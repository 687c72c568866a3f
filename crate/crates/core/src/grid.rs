//! Dense real images stored column-stacked: pixel `(i, j)` lives at
//! `j * rows + i`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const RAW_MAGIC: &[u8; 4] = b"RNPG";

#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image data"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0);
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut g = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                g.data[j * rows + i] = f(i, j);
            }
        }
        g
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.rows + i
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.data[k] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Plain (P2) PGM preview; values are clipped to `[0, 1]` before scaling to 8 bits.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "P2\n{} {}\n255", self.cols, self.rows)?;
        for i in 0..self.rows {
            let line: Vec<String> = (0..self.cols)
                .map(|j| ((self.get(i, j).clamp(0.0, 1.0) * 255.0).round() as u8).to_string())
                .collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a plain PGM and rescales to `[0, 1]` by its maxval.
    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut tokens = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("");
            tokens.extend(body.split_whitespace().map(str::to_owned));
        }
        let mut it = tokens.into_iter();
        if it.next().as_deref() != Some("P2") {
            return Err(Error::Format("expected P2 magic".into()));
        }
        let mut num = |what: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| Error::Format(format!("missing {what}")))?
                .parse::<usize>()
                .map_err(|e| Error::Format(format!("{what}: {e}")))
        };
        let cols = num("width")?;
        let rows = num("height")?;
        let maxval = num("maxval")?;
        if maxval == 0 {
            return Err(Error::Format("maxval must be positive".into()));
        }
        let mut g = Self::zeros(rows.max(1), cols.max(1));
        for i in 0..rows {
            for j in 0..cols {
                let v = num("pixel")?;
                g.set(i, j, v as f64 / maxval as f64);
            }
        }
        Ok(g)
    }

    /// Exact binary dump: `RNPG`, rows and cols as little-endian u32, four
    /// reserved zero bytes, then the column-stacked f64 values.
    pub fn write_raw(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_raw_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_raw_to(&self, w: &mut impl Write) -> Result<()> {
        let rows = u32::try_from(self.rows).map_err(|_| Error::Format("rows exceed u32".into()))?;
        let cols = u32::try_from(self.cols).map_err(|_| Error::Format("cols exceed u32".into()))?;
        w.write_all(RAW_MAGIC)?;
        w.write_all(&rows.to_le_bytes())?;
        w.write_all(&cols.to_le_bytes())?;
        w.write_all(&[0u8; 4])?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_raw(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_raw_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn read_raw_from(r: &mut impl Read) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != RAW_MAGIC {
            return Err(Error::Format("bad magic, expected RNPG".into()));
        }
        let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let mut data = Vec::with_capacity(rows * cols);
        let mut buf = [0u8; 8];
        for _ in 0..rows * cols {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        Self::new(rows, cols, data)
    }
}
