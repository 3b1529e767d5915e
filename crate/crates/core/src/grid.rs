//! Dense `W×H×C` grids and the `PLT1` binary format.
//!
//! `PLT1` layout (little-endian):
//! - magic: `b"PLT1"`
//! - width, height, channels: `u32` each
//! - `W·H·C` `f32` values, row-major with `y` outermost, then `x`, then channel

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const PLT_MAGIC: [u8; 4] = *b"PLT1";

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

/// The composited feature map `L`.
pub type LayoutMap = Grid;
/// A single-channel grid (distance, opacity or compositing weight).
pub type FieldGrid = Grid;

impl Grid {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "{} values for a {width}x{height}x{channels} grid",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        let i = self.index(x, y, c);
        self.data[i] = v;
    }

    /// All channels of one pixel.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = self.index(x, y, 0);
        &self.data[i..i + self.channels]
    }

    /// One row as a contiguous slice of `W·C` values.
    pub fn row(&self, y: usize) -> &[f64] {
        let n = self.width * self.channels;
        &self.data[y * n..(y + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Grid) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub(crate) fn check_same_shape(&self, other: &Grid) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// Channel slices `[0, first)` and `[first, C)`.
    pub fn split_channels(&self, first: usize) -> Result<(Grid, Grid)> {
        if first > self.channels {
            return Err(Error::Shape(format!(
                "cannot split {} channels at {first}",
                self.channels
            )));
        }
        let rest = self.channels - first;
        let mut a = Vec::with_capacity(self.width * self.height * first);
        let mut b = Vec::with_capacity(self.width * self.height * rest);
        // a zero-channel grid has no data, so the chunk size never matters there
        for px in self.data.chunks_exact(self.channels.max(1)) {
            a.extend_from_slice(&px[..first]);
            b.extend_from_slice(&px[first..]);
        }
        Ok((
            Grid::from_vec(self.width, self.height, first, a)?,
            Grid::from_vec(self.width, self.height, rest, b)?,
        ))
    }

    /// Channel-wise concatenation of two grids with equal `W×H`.
    pub fn concat_channels(&self, other: &Grid) -> Result<Grid> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let channels = self.channels + other.channels;
        let mut data = Vec::with_capacity(self.width * self.height * channels);
        for i in 0..self.width * self.height {
            data.extend_from_slice(&self.data[i * self.channels..(i + 1) * self.channels]);
            data.extend_from_slice(&other.data[i * other.channels..(i + 1) * other.channels]);
        }
        Grid::from_vec(self.width, self.height, channels, data)
    }

    pub fn write_plt<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = |v: usize| {
            u32::try_from(v).map_err(|_| Error::Plt(format!("dimension {v} exceeds u32")))
        };
        let mut buf = Vec::with_capacity(16 + 4 * self.data.len());
        buf.extend_from_slice(&PLT_MAGIC);
        for v in [self.width, self.height, self.channels] {
            buf.extend_from_slice(&dim(v)?.to_le_bytes());
        }
        for &v in &self.data {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_plt_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_plt(&mut out)
            .expect("writing PLT1 into memory cannot fail");
        out
    }

    pub fn read_plt<R: Read>(mut r: R) -> Result<Grid> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_plt_bytes(&bytes)
    }

    pub fn from_plt_bytes(bytes: &[u8]) -> Result<Grid> {
        if bytes.len() < 16 {
            return Err(Error::Plt("truncated header".into()));
        }
        if bytes[..4] != PLT_MAGIC {
            return Err(Error::Plt("bad magic".into()));
        }
        let word = |i: usize| {
            u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize
        };
        let (width, height, channels) = (word(0), word(1), word(2));
        let count = width
            .checked_mul(height)
            .and_then(|v| v.checked_mul(channels))
            .ok_or_else(|| Error::Plt("dimensions overflow".into()))?;
        let body = &bytes[16..];
        if body.len() != count * 4 {
            return Err(Error::Plt(format!(
                "expected {} payload bytes, found {}",
                count * 4,
                body.len()
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        Grid::from_vec(width, height, channels, data)
    }

    pub fn save_plt(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_plt_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load_plt(path: impl AsRef<Path>) -> Result<Grid> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_plt_bytes(&bytes)
    }
}
