//! Panorama augmentation: a random circular translation followed by an
//! optional horizontal flip, applied to the image and co-applied to the layout.
//!
//! Draws come from `ChaCha8Rng::seed_from_u64(seed)`:
//! 1. `t = (next_u64() · W) >> 64`, a column offset in `[0, W)`;
//! 2. `flip = next_u64() >> 63 == 1`.
//!
//! The layout transform is defined by render-equivariance: rendering the
//! transformed layout gives the transformed render of the original layout.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::{circshift, flip_horizontal};
use super::io::EquirectImage;
use crate::error::{Error, Result};
use crate::layout::{mirror, shift_azimuth, SceneLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentRecord {
    pub t: usize,
    pub flip: bool,
    pub seed: u64,
}

/// Replays the draws for `seed` on a panorama of the given width.
pub fn draw_augmentation(seed: u64, width: usize) -> AugmentRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = ((rng.next_u64() as u128 * width as u128) >> 64) as usize;
    let flip = rng.next_u64() >> 63 == 1;
    AugmentRecord { t, flip, seed }
}

pub fn augment(
    img: &EquirectImage,
    layout: &SceneLayout,
    seed: u64,
) -> Result<(EquirectImage, SceneLayout, AugmentRecord)> {
    let record = draw_augmentation(seed, img.width());
    let (img, layout) = augment_with(img, layout, record.t, record.flip)?;
    Ok((img, layout, record))
}

/// Shifts right by `t` columns, then optionally mirrors.
pub fn augment_with(
    img: &EquirectImage,
    layout: &SceneLayout,
    t: usize,
    flip: bool,
) -> Result<(EquirectImage, SceneLayout)> {
    if (img.width(), img.height()) != (layout.width(), layout.height()) {
        return Err(Error::Shape(format!(
            "image is {}x{} but layout renders {}x{}",
            img.width(),
            img.height(),
            layout.width(),
            layout.height()
        )));
    }
    let w = img.width();
    let mut grid = circshift(img.grid(), t as isize);
    let mut layout = shift_azimuth(layout, TAU * t as f64 / w as f64);
    if flip {
        grid = flip_horizontal(&grid);
        layout = mirror(&layout);
    }
    Ok((EquirectImage::new(grid)?, layout))
}
