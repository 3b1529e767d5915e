//! Pinhole views of an equirectangular panorama.
//!
//! The camera looks along azimuth `yaw` on the horizon when `pitch = 0`;
//! positive pitch looks up, roll turns the image plane about the view axis.
//! Image right follows increasing azimuth, so a view reads in the same
//! left-to-right order as the panorama.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use super::io::EquirectImage;
use crate::error::{Error, Result};
use crate::geometry::{check_dims, UnitVec};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerspectiveCamera {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub hfov: f64,
    pub out_w: usize,
    pub out_h: usize,
}

type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn axpy(a: f64, x: Vec3, y: Vec3) -> Vec3 {
    [a * x[0] + y[0], a * x[1] + y[1], a * x[2] + y[2]]
}

fn scale(a: f64, x: Vec3) -> Vec3 {
    [a * x[0], a * x[1], a * x[2]]
}

/// World-space camera basis.
struct Basis {
    forward: Vec3,
    right: Vec3,
    down: Vec3,
    focal: f64,
}

impl PerspectiveCamera {
    pub fn new(yaw: f64, pitch: f64, roll: f64, hfov: f64, out_w: usize, out_h: usize) -> Result<Self> {
        let cam = Self {
            yaw,
            pitch,
            roll,
            hfov,
            out_w,
            out_h,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hfov > 0.0 && self.hfov < PI) {
            return Err(Error::Invalid(format!("hfov {} outside (0, π)", self.hfov)));
        }
        if self.out_w == 0 || self.out_h == 0 {
            return Err(Error::Invalid("empty output size".into()));
        }
        if ![self.yaw, self.pitch, self.roll].iter().all(|v| v.is_finite()) {
            return Err(Error::Invalid("non-finite camera angle".into()));
        }
        Ok(())
    }

    fn basis(&self) -> Basis {
        // equal yaws modulo 2π must give bit-identical rays
        let (sy, cy) = self.yaw.rem_euclid(TAU).sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let (sr, cr) = self.roll.sin_cos();
        let f0 = [cy, sy, 0.0];
        let r0 = [-sy, cy, 0.0];
        let d0 = [0.0, 0.0, -1.0];
        let forward = axpy(cp, f0, scale(-sp, d0));
        let down_p = axpy(sp, f0, scale(cp, d0));
        let right = axpy(cr, r0, scale(sr, down_p));
        let down = axpy(-sr, r0, scale(cr, down_p));
        Basis {
            forward,
            right,
            down,
            focal: 0.5 * self.out_w as f64 / (0.5 * self.hfov).tan(),
        }
    }

    /// Unit ray through the center of output pixel `(i, j)`.
    pub fn ray(&self, i: usize, j: usize) -> UnitVec {
        self.ray_with(&self.basis(), i, j)
    }

    fn ray_with(&self, b: &Basis, i: usize, j: usize) -> UnitVec {
        let xc = (i as f64 + 0.5 - 0.5 * self.out_w as f64) / b.focal;
        let yc = (j as f64 + 0.5 - 0.5 * self.out_h as f64) / b.focal;
        let v = axpy(yc, b.down, axpy(xc, b.right, b.forward));
        let n = dot(v, v).sqrt();
        UnitVec {
            x: v[0] / n,
            y: v[1] / n,
            z: v[2] / n,
        }
    }

    /// Continuous output coordinates `(i, j)` (pixel centers at `k + 0.5 − 0.5`)
    /// where direction `u` lands, or `None` behind the camera.
    pub fn project_direction(&self, u: UnitVec) -> Option<(f64, f64)> {
        let b = self.basis();
        let v = [u.x, u.y, u.z];
        let depth = dot(v, b.forward);
        if depth <= 0.0 {
            return None;
        }
        let xc = dot(v, b.right) / depth;
        let yc = dot(v, b.down) / depth;
        Some((
            xc * b.focal + 0.5 * self.out_w as f64 - 0.5,
            yc * b.focal + 0.5 * self.out_h as f64 - 0.5,
        ))
    }
}

/// The four bilinear taps `(x, y, weight)` for a sphere direction on a `W×H`
/// panorama: columns wrap across the seam, rows clamp at the poles.
pub fn bilinear_taps(theta: f64, phi: f64, width: usize, height: usize) -> [(usize, usize, f64); 4] {
    let xf = theta.rem_euclid(TAU) / TAU * width as f64 - 0.5;
    let yf = (phi / PI * height as f64 - 0.5).clamp(0.0, (height - 1) as f64);
    let x0 = xf.floor();
    let y0 = yf.floor();
    let (fx, fy) = (xf - x0, yf - y0);
    let xa = (x0 as isize).rem_euclid(width as isize) as usize;
    let xb = (xa + 1) % width;
    let ya = y0 as usize;
    let yb = (ya + 1).min(height - 1);
    [
        (xa, ya, (1.0 - fx) * (1.0 - fy)),
        (xb, ya, fx * (1.0 - fy)),
        (xa, yb, (1.0 - fx) * fy),
        (xb, yb, fx * fy),
    ]
}

/// Perspective view of any `W×H×C` panorama grid.
pub fn project_grid(src: &Grid, cam: &PerspectiveCamera) -> Result<Grid> {
    cam.validate()?;
    let (w, h, c) = src.shape();
    check_dims(w, h)?;
    let basis = cam.basis();
    let mut out = Grid::zeros(cam.out_w, cam.out_h, c);
    if c == 0 {
        return Ok(out);
    }
    out.data_mut()
        .par_chunks_mut(cam.out_w * c)
        .enumerate()
        .for_each(|(j, row)| {
            for (i, px) in row.chunks_exact_mut(c).enumerate() {
                let u = cam.ray_with(&basis, i, j);
                let theta = u.y.atan2(u.x);
                let phi = u.x.hypot(u.y).atan2(u.z);
                for (x, y, wgt) in bilinear_taps(theta, phi, w, h) {
                    for (o, s) in px.iter_mut().zip(src.pixel(x, y)) {
                        *o += wgt * s;
                    }
                }
            }
        });
    Ok(out)
}

/// Perspective view of an RGB panorama.
pub fn project_perspective(img: &EquirectImage, cam: &PerspectiveCamera) -> Result<Grid> {
    project_grid(img.grid(), cam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pixel_center;

    #[test]
    fn camera_validation() {
        assert!(PerspectiveCamera::new(0.0, 0.0, 0.0, PI, 8, 8).is_err());
        assert!(PerspectiveCamera::new(0.0, 0.0, 0.0, 0.0, 8, 8).is_err());
        assert!(PerspectiveCamera::new(0.0, 0.0, 0.0, 1.0, 0, 8).is_err());
        assert!(PerspectiveCamera::new(0.0, 0.0, 0.0, 1.0, 8, 8).is_ok());
    }

    #[test]
    fn constant_panorama_stays_constant() {
        let img = EquirectImage::filled(64, 32, [0.25, 0.5, 0.75]).unwrap();
        let cam = PerspectiveCamera::new(1.0, 0.4, 0.2, 1.5, 24, 16).unwrap();
        let out = project_perspective(&img, &cam).unwrap();
        for px in out.data().chunks(3) {
            assert!((px[0] - 0.25).abs() < 1e-12);
            assert!((px[1] - 0.5).abs() < 1e-12);
            assert!((px[2] - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn yaw_is_periodic() {
        let grid = Grid::from_fn(32, 16, 3, |x, y, c| ((x * 7 + y * 3 + c) % 11) as f64 / 10.0);
        let img = EquirectImage::new(grid).unwrap();
        let a = project_perspective(&img, &PerspectiveCamera::new(PI, 0.1, 0.0, 1.2, 16, 16).unwrap());
        let b = project_perspective(&img, &PerspectiveCamera::new(-PI, 0.1, 0.0, 1.2, 16, 16).unwrap());
        assert_eq!(a.unwrap(), b.unwrap());
    }

    #[test]
    fn taps_sum_to_one_and_wrap() {
        for k in 0..500 {
            let theta = k as f64 * 0.0137 - 1.0;
            let phi = (k as f64 * 0.00631) % PI;
            let taps = bilinear_taps(theta, phi, 16, 8);
            let total: f64 = taps.iter().map(|t| t.2).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        // just right of the seam mixes the last and first columns
        let taps = bilinear_taps(0.0, PI / 2.0, 16, 8);
        assert_eq!((taps[0].0, taps[1].0), (15, 0));
        assert!((taps[0].2 + taps[2].2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn center_ray_looks_along_yaw() {
        let cam = PerspectiveCamera::new(0.7, 0.0, 0.0, 1.0, 9, 9).unwrap();
        let u = cam.ray(4, 4);
        assert!((u.y.atan2(u.x) - 0.7).abs() < 1e-12);
        assert!(u.z.abs() < 1e-12);
        let up = PerspectiveCamera::new(0.0, 0.3, 0.0, 1.0, 9, 9).unwrap().ray(4, 4);
        assert!((up.z - 0.3f64.sin()).abs() < 1e-12);
        // right of the image centre has larger azimuth
        let r = cam.ray(8, 4);
        assert!(r.y.atan2(r.x) > 0.7);
    }

    #[test]
    fn rays_project_back_to_their_pixel() {
        let cam = PerspectiveCamera::new(2.0, -0.4, 0.3, 1.3, 20, 12).unwrap();
        for (i, j) in [(0, 0), (19, 11), (7, 5)] {
            let (x, y) = cam.project_direction(cam.ray(i, j)).unwrap();
            assert!((x - i as f64).abs() < 1e-9 && (y - j as f64).abs() < 1e-9);
        }
        let behind = pixel_center(0, 4, 16, 8).to_unit();
        let cam = PerspectiveCamera::new(PI, 0.0, 0.0, 1.0, 8, 8).unwrap();
        assert!(cam.project_direction(behind).is_none());
    }
}
