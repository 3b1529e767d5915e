//! Slow, literal reference implementations. They share no code with the
//! production paths and exist to check them.

use crate::geometry::{pixel_to_sphere, sphere_to_unitvec, PolarCoord, SphereCoord};
use crate::grid::{FieldGrid, Grid, LayoutMap};
use crate::imageops::Kernel2D;
use crate::layout::SceneLayout;

type Mat3 = [[f64; 3]; 3];

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn rot_z(t: f64) -> Mat3 {
    let (s, c) = t.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn rot_y(t: f64) -> Mat3 {
    let (s, c) = t.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

/// Polar coordinates of `p` after the rotation `R_y(−β)·R_z(−α)` that carries
/// the center `(α, β)` to the +z axis. The bearing is read as
/// `atan2(q_x, q_y)`, which starts at the eastward direction.
pub fn rotation_matrix_polar(p: SphereCoord, center: SphereCoord) -> PolarCoord {
    let m = mat_mul(&rot_y(-center.phi), &rot_z(-center.theta));
    let u = sphere_to_unitvec(p);
    let v = [u.x, u.y, u.z];
    let q: Vec<f64> = m
        .iter()
        .map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum())
        .collect();
    let r = q[0].hypot(q[1]);
    let rho = r.atan2(q[2]);
    let omega = if r > 1e-15 {
        q[0].atan2(q[1])
    } else {
        0.0
    };
    PolarCoord { rho, omega }
}

/// Ellipse distance evaluated through [`rotation_matrix_polar`].
pub fn matrix_ellipse_distance(p: SphereCoord, alpha: f64, beta: f64, gamma: f64, ecc: f64) -> f64 {
    let polar = rotation_matrix_polar(p, SphereCoord { theta: alpha, phi: beta });
    let c = (polar.omega + gamma).cos();
    polar.rho * ((1.0 - ecc * ecc) / (1.0 - ecc * ecc * c * c)).sqrt()
}

fn opacities(layout: &SceneLayout, x: usize, y: usize) -> Vec<f64> {
    let p = pixel_to_sphere(x, y, layout.width(), layout.height()).expect("layout dims are valid");
    layout
        .objects()
        .iter()
        .map(|o| {
            let e = &o.ellipse;
            let d = matrix_ellipse_distance(p, e.alpha, e.beta, e.gamma, e.ecc);
            1.0 / (1.0 + (d - o.size).exp())
        })
        .collect()
}

/// `L = Σ_i f_i·o_i·Π_{k>i}(1 − o_k)` written out term by term.
pub fn composite_sum_product(layout: &SceneLayout) -> LayoutMap {
    let (w, h, d_f) = (layout.width(), layout.height(), layout.feature_dim());
    let mut out = Grid::zeros(w, h, d_f);
    for y in 0..h {
        for x in 0..w {
            let o = opacities(layout, x, y);
            for (i, obj) in layout.objects().iter().enumerate() {
                let mut t = 1.0;
                for ok in &o[i + 1..] {
                    t *= 1.0 - ok;
                }
                for (c, f) in obj.features.iter().enumerate() {
                    let v = out.get(x, y, c) + f * o[i] * t;
                    out.set(x, y, c, v);
                }
            }
        }
    }
    out
}

/// `1 − Π_i(1 − o_i)` per pixel.
pub fn weight_closed_form(layout: &SceneLayout) -> FieldGrid {
    Grid::from_fn(layout.width(), layout.height(), 1, |x, y, _| {
        1.0 - opacities(layout, x, y).iter().map(|o| 1.0 - o).product::<f64>()
    })
}

/// Cross-correlation by direct modular indexing, zero rows outside the image.
pub fn conv2d_naive(img: &Grid, kernel: &Kernel2D) -> Grid {
    let (w, h, _) = img.shape();
    let (rx, ry) = ((kernel.width() / 2) as isize, (kernel.height() / 2) as isize);
    Grid::from_fn(w, h, img.channels(), |x, y, c| {
        let mut acc = 0.0;
        for ky in 0..kernel.height() {
            for kx in 0..kernel.width() {
                let sy = y as isize + ky as isize - ry;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                let sx = (x as isize + kx as isize - rx).rem_euclid(w as isize);
                acc += kernel.weight(kx, ky) * img.get(sx as usize, sy as usize, c);
            }
        }
        acc
    })
}
