//! Sphere coordinates for equirectangular panoramas and the pixel-to-ellipse
//! distance.
//!
//! A pixel `(px, py)` of a `W×H` panorama (`W = 2H`) maps to azimuth
//! `theta ∈ (0, 2π]` and polar angle `phi ∈ [0, π]` through its pixel center.
//! The distance from a point to an ellipse is measured in the tangent frame of
//! the ellipse center: the great-circle angle `rho` from the center, the bearing
//! `omega` of the point around it, and an eccentricity factor that squeezes the
//! iso-distance contours into ellipses rotated by `gamma`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FieldGrid;

/// Wraps an azimuth into `(0, 2π]`.
pub fn wrap_azimuth(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t == 0.0 {
        TAU
    } else {
        t
    }
}

/// Normalizes an arbitrary `(theta, phi)` pair onto the sphere. A polar angle
/// past either pole is reflected back and the azimuth moves by `π`.
pub fn normalize_angles(theta: f64, phi: f64) -> (f64, f64) {
    let mut phi = phi.rem_euclid(TAU);
    let mut theta = theta;
    if phi > PI {
        phi = TAU - phi;
        theta += PI;
    }
    (wrap_azimuth(theta), phi)
}

/// Checks the `W = 2H` equirectangular aspect ratio.
pub fn check_dims(width: usize, height: usize) -> Result<()> {
    if height == 0 || width != 2 * height {
        return Err(Error::AspectRatio { width, height });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereCoord {
    pub theta: f64,
    pub phi: f64,
}

impl SphereCoord {
    pub fn new(theta: f64, phi: f64) -> Self {
        let (theta, phi) = normalize_angles(theta, phi);
        Self { theta, phi }
    }

    pub fn to_unit(self) -> UnitVec {
        sphere_to_unitvec(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitVec {
    pub fn dot(self, other: UnitVec) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn to_sphere(self) -> SphereCoord {
        let phi = self.x.hypot(self.y).atan2(self.z);
        SphereCoord::new(self.y.atan2(self.x), phi)
    }
}

/// Center, rotation and eccentricity of one ellipse on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub ecc: f64,
}

impl EllipseParams {
    /// Builds a validated ellipse; the center is normalized onto the sphere.
    pub fn new(alpha: f64, beta: f64, gamma: f64, ecc: f64) -> Result<Self> {
        check_ecc(ecc)?;
        if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
            return Err(Error::Invalid("non-finite ellipse angle".into()));
        }
        let (alpha, beta) = normalize_angles(alpha, beta);
        Ok(Self {
            alpha,
            beta,
            gamma,
            ecc,
        })
    }

    pub fn center(&self) -> SphereCoord {
        SphereCoord {
            theta: self.alpha,
            phi: self.beta,
        }
    }
}

pub(crate) fn check_ecc(ecc: f64) -> Result<()> {
    if (0.0..1.0).contains(&ecc) {
        Ok(())
    } else {
        Err(Error::Eccentricity(ecc))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarCoord {
    pub rho: f64,
    pub omega: f64,
}

/// Pixel-center mapping: `theta = 2π(px + ½)/W`, `phi = π(py + ½)/H`.
pub fn pixel_to_sphere(px: usize, py: usize, width: usize, height: usize) -> Result<SphereCoord> {
    check_dims(width, height)?;
    if px >= width || py >= height {
        return Err(Error::Invalid(format!(
            "pixel ({px}, {py}) outside {width}x{height}"
        )));
    }
    Ok(pixel_center(px, py, width, height))
}

#[inline]
pub(crate) fn pixel_center(px: usize, py: usize, width: usize, height: usize) -> SphereCoord {
    SphereCoord {
        theta: TAU * (px as f64 + 0.5) / width as f64,
        phi: PI * (py as f64 + 0.5) / height as f64,
    }
}

pub fn sphere_to_unitvec(c: SphereCoord) -> UnitVec {
    let (sp, cp) = c.phi.sin_cos();
    let (st, ct) = c.theta.sin_cos();
    UnitVec {
        x: sp * ct,
        y: sp * st,
        z: cp,
    }
}

/// Orthonormal frame at an ellipse center: the center itself, the eastward
/// direction `∂u/∂θ` and the southward direction `∂u/∂φ`. Both tangents are
/// unit length for every `β`, so a pole center needs no special case.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CenterFrame {
    pub center: UnitVec,
    pub east: UnitVec,
    pub south: UnitVec,
}

impl CenterFrame {
    pub fn new(alpha: f64, beta: f64) -> Self {
        let (sa, ca) = alpha.sin_cos();
        let (sb, cb) = beta.sin_cos();
        Self {
            center: UnitVec {
                x: sb * ca,
                y: sb * sa,
                z: cb,
            },
            east: UnitVec {
                x: -sa,
                y: ca,
                z: 0.0,
            },
            south: UnitVec {
                x: cb * ca,
                y: cb * sa,
                z: -sb,
            },
        }
    }

    /// Components of `u` along (east, south, center).
    #[inline]
    pub fn project(&self, u: UnitVec) -> (f64, f64, f64) {
        (u.dot(self.east), u.dot(self.south), u.dot(self.center))
    }
}

/// Angular radius and bearing of `p` around `center`.
///
/// `rho` is the great-circle angle, `omega` the bearing measured from the
/// eastward tangent towards the southward tangent. When `p` coincides with the
/// center or its antipode the bearing is undefined and reported as `0`.
pub fn rotate_to_center(p: SphereCoord, center: SphereCoord) -> PolarCoord {
    let frame = CenterFrame::new(center.theta, center.phi);
    polar_in_frame(&frame, p.to_unit())
}

/// Below this tangential length the bearing is treated as undefined.
pub(crate) const BEARING_EPS: f64 = 1e-15;

#[inline]
pub(crate) fn polar_in_frame(frame: &CenterFrame, u: UnitVec) -> PolarCoord {
    let (x, y, z) = frame.project(u);
    let r = x.hypot(y);
    // atan2 keeps full precision near both rho = 0 and rho = π where acos does not.
    let rho = r.atan2(z);
    let omega = if r > BEARING_EPS { y.atan2(x) } else { 0.0 };
    PolarCoord { rho, omega }
}

/// `sqrt((1 − e²) / (1 − e² cos²ψ))`, the factor that turns `rho` into an
/// elliptical distance.
#[inline]
pub(crate) fn ecc_factor(ecc: f64, psi: f64) -> f64 {
    let e2 = ecc * ecc;
    let c = psi.cos();
    ((1.0 - e2) / (1.0 - e2 * c * c)).sqrt()
}

/// Elliptical distance from `p` to the ellipse, in radians. Lies in
/// `[rho·sqrt(1 − e²), rho]`.
pub fn ellipse_distance(p: SphereCoord, ell: &EllipseParams) -> f64 {
    let polar = rotate_to_center(p, ell.center());
    polar.rho * ecc_factor(ell.ecc, polar.omega + ell.gamma)
}

/// An ellipse with its frame and `γ` trigonometry hoisted out of pixel loops.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PreparedEllipse {
    pub frame: CenterFrame,
    cos_g: f64,
    sin_g: f64,
    e2: f64,
}

impl PreparedEllipse {
    pub fn new(ell: &EllipseParams) -> Self {
        let (sin_g, cos_g) = ell.gamma.sin_cos();
        Self {
            frame: CenterFrame::new(ell.alpha, ell.beta),
            cos_g,
            sin_g,
            e2: ell.ecc * ell.ecc,
        }
    }

    /// Same value as [`ellipse_distance`], without recovering `omega`:
    /// `cos(omega + γ) = (x cos γ − y sin γ) / r`.
    #[inline]
    pub fn distance(&self, u: UnitVec) -> f64 {
        let (x, y, z) = self.frame.project(u);
        let r = (x * x + y * y).sqrt();
        let rho = r.atan2(z);
        if self.e2 == 0.0 {
            return rho;
        }
        let c = if r > BEARING_EPS {
            (x * self.cos_g - y * self.sin_g) / r
        } else {
            self.cos_g
        };
        rho * ((1.0 - self.e2) / (1.0 - self.e2 * c * c)).sqrt()
    }
}

/// Unit vectors of all pixel centers of a `W×H` grid, with the trigonometry
/// tabulated per column and per row.
pub(crate) struct PixelDirections {
    cols: Vec<(f64, f64)>,
    rows: Vec<(f64, f64)>,
}

impl PixelDirections {
    pub fn new(width: usize, height: usize) -> Self {
        let cols = (0..width)
            .map(|px| pixel_center(px, 0, width, height).theta.sin_cos())
            .collect();
        let rows = (0..height)
            .map(|py| pixel_center(0, py, width, height).phi.sin_cos())
            .collect();
        Self { cols, rows }
    }

    /// Bit-identical to `pixel_center(px, py, ..).to_unit()`.
    #[inline]
    pub fn at(&self, px: usize, py: usize) -> UnitVec {
        let (st, ct) = self.cols[px];
        let (sp, cp) = self.rows[py];
        UnitVec {
            x: sp * ct,
            y: sp * st,
            z: cp,
        }
    }
}

/// Ellipse distance evaluated at every pixel center.
pub fn distance_field(ell: &EllipseParams, width: usize, height: usize) -> Result<FieldGrid> {
    check_dims(width, height)?;
    let prepared = PreparedEllipse::new(ell);
    let dirs = PixelDirections::new(width, height);
    let mut field = FieldGrid::zeros(width, height, 1);
    field
        .data_mut()
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(py, row)| {
            for (px, v) in row.iter_mut().enumerate() {
                *v = prepared.distance(dirs.at(px, py));
            }
        });
    Ok(field)
}
