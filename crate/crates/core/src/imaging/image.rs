use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::pose::LatticePose;
use crate::error::{Error, Result};

/// A bit grid sampled on a posed lattice.
///
/// Sample `(i_0, …, i_{d-1})` sits at lattice coordinates `origin + i`. Bits
/// are stored row-major with the last axis fastest, least significant bit
/// first within a byte, each row padded to whole bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryImage {
    pub dims: Vec<usize>,
    pub origin: Vec<i64>,
    pub pose: LatticePose,
    pub bits: Vec<u8>,
}

impl BinaryImage {
    pub fn zeros(dims: &[usize], origin: &[i64], pose: LatticePose) -> Result<Self> {
        if dims.len() != pose.dim || origin.len() != pose.dim {
            return Err(Error::DimensionMismatch {
                expected: pose.dim,
                found: dims.len(),
            });
        }
        let rb = dims[dims.len() - 1].div_ceil(8);
        let rows: usize = dims[..dims.len() - 1].iter().product();
        Ok(BinaryImage {
            dims: dims.to_vec(),
            origin: origin.to_vec(),
            pose,
            bits: vec![0; rb * rows],
        })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn row_bytes(&self) -> usize {
        self.dims[self.dims.len() - 1].div_ceil(8)
    }

    pub fn row_count(&self) -> usize {
        self.dims[..self.dims.len() - 1].iter().product()
    }

    pub fn row(&self, r: usize) -> &[u8] {
        let rb = self.row_bytes();
        &self.bits[r * rb..(r + 1) * rb]
    }

    fn offset(&self, idx: &[usize]) -> (usize, u8) {
        let d = self.dims.len();
        let mut row = 0;
        for k in 0..d - 1 {
            row = row * self.dims[k] + idx[k];
        }
        let col = idx[d - 1];
        (row * self.row_bytes() + col / 8, (col % 8) as u8)
    }

    pub fn get(&self, idx: &[usize]) -> bool {
        let (byte, bit) = self.offset(idx);
        (self.bits[byte] >> bit) & 1 == 1
    }

    pub fn set(&mut self, idx: &[usize], value: bool) {
        let (byte, bit) = self.offset(idx);
        if value {
            self.bits[byte] |= 1 << bit;
        } else {
            self.bits[byte] &= !(1 << bit);
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().map(|b| b.count_ones() as u64).sum()
    }

    /// Number of `2×⋯×2` cells inside the window.
    pub fn cell_count(&self) -> u64 {
        self.dims.iter().map(|&n| n.saturating_sub(1) as u64).product()
    }

    /// Foreground/background swap (padding bits stay clear).
    pub fn inverted(&self) -> BinaryImage {
        let mut out = self.clone();
        let n = self.dims[self.dims.len() - 1];
        let rb = self.row_bytes();
        let tail = if n % 8 == 0 { 0xff } else { (1u8 << (n % 8)) - 1 };
        for row in out.bits.chunks_mut(rb) {
            for (k, b) in row.iter_mut().enumerate() {
                *b = !*b;
                if k == rb - 1 {
                    *b &= tail;
                }
            }
        }
        out
    }

    pub fn write_bvox<W: Write>(&self, mut w: W) -> Result<()> {
        let header = BvoxHeader {
            dims: self.dims.clone(),
            a: self.pose.a,
            rot: self.pose.rows(),
            c: self.pose.c[..self.dim()].to_vec(),
            origin: self.origin.clone(),
            packing: PACKING.to_owned(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        w.write_all(&self.bits)?;
        Ok(())
    }

    pub fn read_bvox<R: Read>(r: R) -> Result<Self> {
        let mut r = std::io::BufReader::new(r);
        let mut line = Vec::new();
        r.read_until(b'\n', &mut line)?;
        if line.last() != Some(&b'\n') {
            return Err(Error::Format("missing BVOX header line".into()));
        }
        let header: BvoxHeader =
            serde_json::from_slice(&line).map_err(|e| Error::Format(format!("BVOX header: {e}")))?;
        if header.packing != PACKING {
            return Err(Error::Format(format!("unsupported packing {}", header.packing)));
        }
        let d = header.dims.len();
        if header.dims.iter().any(|&n| n == 0) {
            return Err(Error::Format("empty dimension".into()));
        }
        let pose = LatticePose::from_rows(d, header.a, &header.rot, &header.c)?;
        let mut img = BinaryImage::zeros(&header.dims, &header.origin, pose)?;
        r.read_exact(&mut img.bits)
            .map_err(|_| Error::Format("BVOX payload shorter than the header promises".into()))?;
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Format("trailing bytes after BVOX payload".into()));
        }
        let n = header.dims[d - 1];
        if n % 8 != 0 {
            let rb = img.row_bytes();
            let mask = !((1u8 << (n % 8)) - 1);
            if img.bits.chunks(rb).any(|row| row[rb - 1] & mask != 0) {
                return Err(Error::Format("nonzero padding bits".into()));
            }
        }
        Ok(img)
    }
}

const PACKING: &str = "row-major-lsb";

#[derive(Debug, Serialize, Deserialize)]
struct BvoxHeader {
    dims: Vec<usize>,
    a: f64,
    #[serde(rename = "R")]
    rot: Vec<Vec<f64>>,
    c: Vec<f64>,
    origin: Vec<i64>,
    packing: String,
}
