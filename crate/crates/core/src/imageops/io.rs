use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::geometry::check_dims;
use crate::grid::Grid;

/// An RGB panorama with `W = 2H` and values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquirectImage {
    grid: Grid,
}

impl EquirectImage {
    pub fn new(grid: Grid) -> Result<Self> {
        check_dims(grid.width(), grid.height())?;
        if grid.channels() != 3 {
            return Err(Error::Shape(format!(
                "panorama needs 3 channels, got {}",
                grid.channels()
            )));
        }
        if !grid.data().iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(Error::Invalid("panorama values must lie in [0, 1]".into()));
        }
        Ok(Self { grid })
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        Self::new(Grid::from_fn(width, height, 3, |_, _, c| rgb[c]))
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn into_grid(self) -> Grid {
        self.grid
    }

    /// Decodes an 8- or 16-bit PNG. Codes are divided by the maximum code
    /// value; an image that is not exactly 2:1 is refused rather than resampled.
    pub fn from_png_bytes(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        check_dims(w, h)?;
        let data: Vec<f64> = match img {
            DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
            | DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_) => img
                .to_rgb16()
                .into_raw()
                .into_iter()
                .map(|v| v as f64 / u16::MAX as f64)
                .collect(),
            _ => img
                .to_rgb8()
                .into_raw()
                .into_iter()
                .map(|v| v as f64 / u8::MAX as f64)
                .collect(),
        };
        Self::new(Grid::from_vec(w, h, 3, data)?)
    }

    /// Encodes as an 8-bit RGB PNG.
    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        grid_to_png(&self.grid)
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Encodes a 1- or 3-channel grid as an 8-bit RGB PNG, clamping to `[0, 1]`.
pub fn grid_to_png(grid: &Grid) -> Result<Vec<u8>> {
    let (w, h, c) = grid.shape();
    if c != 1 && c != 3 {
        return Err(Error::Shape(format!("cannot encode {c} channels as PNG")));
    }
    let img = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let px = grid.pixel(x as usize, y as usize);
        if c == 1 {
            let g = to_u8(px[0]);
            Rgb([g, g, g])
        } else {
            Rgb([to_u8(px[0]), to_u8(px[1]), to_u8(px[2])])
        }
    });
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn load_png(path: impl AsRef<Path>) -> Result<EquirectImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    EquirectImage::from_png_bytes(&bytes)
}

/// Writes a 1- or 3-channel grid as an 8-bit PNG.
pub fn save_png(grid: &Grid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, grid_to_png(grid)?).map_err(|e| Error::io(path, e))
}
