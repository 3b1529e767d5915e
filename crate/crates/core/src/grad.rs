//! Analytic derivatives of the layout map with respect to the object vectors.
//!
//! The distance derivatives follow the tangent-frame construction in
//! [`crate::geometry`]: with `x, y, z` the components of a pixel direction along
//! the (east, south, center) frame of an ellipse,
//!
//! ```text
//! ∂x/∂α = −(sin β·z + cos β·y)   ∂y/∂α = cos β·x   ∂z/∂α = sin β·x
//! ∂x/∂β = 0                       ∂y/∂β = −z        ∂z/∂β = y
//! ```
//!
//! and `rho = atan2(hypot(x, y), z)`, `omega = atan2(y, x)`. Pixels within
//! [`SINGULAR_EPS`] of the center or its antipode have no bearing; their
//! geometric partials are defined as zero and reported.
//!
//! The compositing backward pass is a reverse-mode vector-Jacobian product: a
//! trainer supplies a cotangent map `∂loss/∂L` and gets the gradient of every
//! object parameter. Per-row partial sums are reduced in row order so results
//! do not depend on the thread count.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ecc_factor, CenterFrame, EllipseParams, PixelDirections, SphereCoord, UnitVec};
use crate::grid::{Grid, LayoutMap};
use crate::layout::{composite, opacity, prepare, ObjectVector, SceneLayout};

/// Angular radius around a center (or its antipode) treated as singular.
pub const SINGULAR_EPS: f64 = 1e-6;
/// Central-difference step for the scalar geometry checks.
pub const FD_STEP_GEOMETRY: f64 = 1e-6;
/// Central-difference step for the composite checks.
pub const FD_STEP_COMPOSITE: f64 = 1e-5;

/// Partials of the ellipse distance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DistanceGrad {
    pub distance: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub ecc: f64,
    /// The point lies in the singular set; all partials are zero.
    pub singular: bool,
}

#[inline]
pub(crate) fn distance_grad_in_frame(frame: &CenterFrame, ell: &EllipseParams, u: UnitVec) -> DistanceGrad {
    let (x, y, z) = frame.project(u);
    let r = x.hypot(y);
    let rho = r.atan2(z);
    if !(SINGULAR_EPS..=PI - SINGULAR_EPS).contains(&rho) {
        let omega = if r > crate::geometry::BEARING_EPS { y.atan2(x) } else { 0.0 };
        return DistanceGrad {
            distance: rho * ecc_factor(ell.ecc, omega + ell.gamma),
            singular: true,
            ..Default::default()
        };
    }
    let omega = y.atan2(x);
    let (sb, cb) = ell.beta.sin_cos();

    let dx_a = -(sb * z + cb * y);
    let dy_a = cb * x;
    let dz_a = sb * x;
    let dy_b = -z;
    let dz_b = y;

    let norm2 = r * r + z * z;
    let drho = |dx: f64, dy: f64, dz: f64| (z * (x * dx + y * dy) / r - r * dz) / norm2;
    let domega = |dx: f64, dy: f64| (x * dy - y * dx) / (r * r);

    let e2 = ell.ecc * ell.ecc;
    let (s, c) = (omega + ell.gamma).sin_cos();
    let denom = 1.0 - e2 * c * c;
    let g = ((1.0 - e2) / denom).sqrt();
    let g_psi = -g * e2 * c * s / denom;
    let g_e = g * ell.ecc * (c * c / denom - 1.0 / (1.0 - e2));

    DistanceGrad {
        distance: rho * g,
        alpha: g * drho(dx_a, dy_a, dz_a) + rho * g_psi * domega(dx_a, dy_a),
        beta: g * drho(0.0, dy_b, dz_b) + rho * g_psi * domega(0.0, dy_b),
        gamma: rho * g_psi,
        ecc: rho * g_e,
        singular: false,
    }
}

/// Partials of [`crate::geometry::ellipse_distance`] with respect to
/// `(α, β, γ, e)`.
pub fn d_distance(p: SphereCoord, ell: &EllipseParams) -> DistanceGrad {
    let frame = CenterFrame::new(ell.alpha, ell.beta);
    distance_grad_in_frame(&frame, ell, p.to_unit())
}

/// `(∂o/∂s, ∂o/∂d)` of `o = sigmoid(s − d)`.
pub fn d_opacity(s: f64, d: f64) -> (f64, f64) {
    // σ(x)·σ(−x) keeps precision on both tails, unlike σ(x)·(1 − σ(x))
    let slope = opacity(s, d) * opacity(d, s);
    (slope, -slope)
}

/// Gradient of a scalar objective with respect to one object vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamGradient {
    pub alpha: f64,
    pub beta: f64,
    pub size: f64,
    pub gamma: f64,
    pub ecc: f64,
    pub features: Vec<f64>,
}

impl ParamGradient {
    fn zeros(feature_dim: usize) -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            size: 0.0,
            gamma: 0.0,
            ecc: 0.0,
            features: vec![0.0; feature_dim],
        }
    }

    fn add(&mut self, other: &ParamGradient) {
        self.alpha += other.alpha;
        self.beta += other.beta;
        self.size += other.size;
        self.gamma += other.gamma;
        self.ecc += other.ecc;
        for (a, b) in self.features.iter_mut().zip(&other.features) {
            *a += b;
        }
    }

    pub fn get(&self, param: Param) -> f64 {
        match param {
            Param::Alpha => self.alpha,
            Param::Beta => self.beta,
            Param::Size => self.size,
            Param::Gamma => self.gamma,
            Param::Ecc => self.ecc,
            Param::Feature(c) => self.features[c],
        }
    }
}

/// Result of [`composite_jacobian_vp`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutGradient {
    pub objects: Vec<ParamGradient>,
    /// Per object, the number of pixels that fell in its singular set.
    pub singular_pixels: Vec<usize>,
}

/// Vector-Jacobian product `⟨cotangent, ∂L/∂θ⟩` for every object parameter.
pub fn composite_jacobian_vp(layout: &SceneLayout, cotangent: &LayoutMap) -> Result<LayoutGradient> {
    let (w, h, d_f) = (layout.width(), layout.height(), layout.feature_dim());
    if cotangent.shape() != (w, h, d_f) {
        return Err(Error::Shape(format!(
            "cotangent {:?} does not match rendered map {:?}",
            cotangent.shape(),
            (w, h, d_f)
        )));
    }
    let prepared = prepare(layout);
    let dirs = PixelDirections::new(w, h);
    let n = prepared.len();

    let rows: Vec<(Vec<ParamGradient>, Vec<usize>)> = (0..h)
        .into_par_iter()
        .map(|py| {
            let mut grads = vec![ParamGradient::zeros(d_f); n];
            let mut singular = vec![0usize; n];
            let mut dist = vec![DistanceGrad::default(); n];
            let mut ops = vec![0.0; n];
            let mut cf = vec![0.0; n];
            let mut below = vec![0.0; n];
            for px in 0..w {
                let cot = cotangent.pixel(px, py);
                let u = dirs.at(px, py);
                for j in 0..n {
                    let obj = prepared[j].object;
                    dist[j] = distance_grad_in_frame(&prepared[j].ellipse.frame, &obj.ellipse, u);
                    ops[j] = opacity(obj.size, dist[j].distance);
                    cf[j] = dot(cot, &obj.features);
                }
                // ⟨c, A_j⟩ where A_j is the composite of everything behind j
                let mut acc = 0.0;
                for j in 0..n {
                    below[j] = acc;
                    acc = acc * (1.0 - ops[j]) + cf[j] * ops[j];
                }
                // T_j = Π_{k>j}(1 − o_k), walked front to back
                let mut transmit = 1.0;
                for j in (0..n).rev() {
                    let obj = prepared[j].object;
                    let g = &mut grads[j];
                    let weight = ops[j] * transmit;
                    for (gf, &c) in g.features.iter_mut().zip(cot) {
                        *gf += c * weight;
                    }
                    let d_o = transmit * (cf[j] - below[j]);
                    let (do_ds, do_dd) = d_opacity(obj.size, dist[j].distance);
                    g.size += d_o * do_ds;
                    let d_d = d_o * do_dd;
                    let dg = &dist[j];
                    if dg.singular {
                        singular[j] += 1;
                    } else {
                        g.alpha += d_d * dg.alpha;
                        g.beta += d_d * dg.beta;
                        g.gamma += d_d * dg.gamma;
                        g.ecc += d_d * dg.ecc;
                    }
                    transmit *= 1.0 - ops[j];
                }
            }
            (grads, singular)
        })
        .collect();

    let mut objects = vec![ParamGradient::zeros(d_f); n];
    let mut singular_pixels = vec![0usize; n];
    for (grads, singular) in &rows {
        for j in 0..n {
            objects[j].add(&grads[j]);
            singular_pixels[j] += singular[j];
        }
    }
    Ok(LayoutGradient {
        objects,
        singular_pixels,
    })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A scalar parameter of one object vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    Alpha,
    Beta,
    Size,
    Gamma,
    Ecc,
    Feature(usize),
}

impl Param {
    pub fn name(&self) -> &'static str {
        match self {
            Param::Alpha => "alpha",
            Param::Beta => "beta",
            Param::Size => "s",
            Param::Gamma => "gamma",
            Param::Ecc => "e",
            Param::Feature(_) => "f",
        }
    }

    fn slot(self, obj: &mut ObjectVector) -> &mut f64 {
        match self {
            Param::Alpha => &mut obj.ellipse.alpha,
            Param::Beta => &mut obj.ellipse.beta,
            Param::Size => &mut obj.size,
            Param::Gamma => &mut obj.ellipse.gamma,
            Param::Ecc => &mut obj.ellipse.ecc,
            Param::Feature(c) => &mut obj.features[c],
        }
    }
}

/// `⟨cotangent, composite(layout)⟩`.
pub fn objective(layout: &SceneLayout, cotangent: &LayoutMap) -> f64 {
    dot(composite(layout).data(), cotangent.data())
}

/// Central difference of [`objective`] with respect to one parameter of
/// object `index` (zero-based).
pub fn fd_composite(
    layout: &SceneLayout,
    cotangent: &LayoutMap,
    index: usize,
    param: Param,
    step: f64,
) -> Result<f64> {
    let shifted = |delta: f64| -> Result<f64> {
        let mut objects = layout.objects().to_vec();
        *param.slot(&mut objects[index]) += delta;
        Ok(objective(&layout.with_objects(objects)?, cotangent))
    };
    Ok((shifted(step)? - shifted(-step)?) / (2.0 * step))
}

/// Agreement rule shared by every gradient check: relative error within
/// `rel_tol`, or an absolute error within `1e-7` when both values are below
/// `1e-3` in magnitude.
pub fn gradients_agree(analytic: f64, numeric: f64, rel_tol: f64) -> bool {
    let err = (analytic - numeric).abs();
    let scale = analytic.abs().max(numeric.abs());
    err <= rel_tol * scale || (scale < 1e-3 && err <= 1e-7)
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale == 0.0 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradcheckConfig {
    pub samples: usize,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub max_objects: usize,
    pub max_features: usize,
    pub rel_tol: f64,
    pub pass_fraction: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 7,
            width: 16,
            height: 8,
            max_objects: 5,
            max_features: 4,
            rel_tol: 1e-4,
            pass_fraction: 0.99,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamStats {
    pub checked: usize,
    pub failures: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub config: GradcheckConfig,
    pub fd_step: f64,
    pub checked: usize,
    pub failures: usize,
    pub singular_exclusions: usize,
    pub pass_rate: f64,
    pub passed: bool,
    pub alpha: ParamStats,
    pub beta: ParamStats,
    pub s: ParamStats,
    pub gamma: ParamStats,
    pub e: ParamStats,
    pub f: ParamStats,
}

impl GradcheckReport {
    fn stats_mut(&mut self, param: Param) -> &mut ParamStats {
        match param {
            Param::Alpha => &mut self.alpha,
            Param::Beta => &mut self.beta,
            Param::Size => &mut self.s,
            Param::Gamma => &mut self.gamma,
            Param::Ecc => &mut self.e,
            Param::Feature(_) => &mut self.f,
        }
    }
}

fn random_check_layout(rng: &mut ChaCha8Rng, cfg: &GradcheckConfig) -> Result<SceneLayout> {
    let n = rng.random_range(1..=cfg.max_objects.max(1));
    let d_f = rng.random_range(1..=cfg.max_features.max(1));
    let objects = (0..n)
        .map(|_| {
            let ellipse = EllipseParams::new(
                rng.random_range(0.0..TAU),
                rng.random_range(0.3..PI - 0.3),
                rng.random_range(0.0..PI),
                rng.random_range(0.0..0.9),
            )?;
            let size = rng.random_range(-0.5..1.5);
            let features = (0..d_f).map(|_| rng.sample(StandardNormal)).collect();
            Ok(ObjectVector::new(ellipse, size, features))
        })
        .collect::<Result<Vec<_>>>()?;
    SceneLayout::new(cfg.width, cfg.height, d_f, objects)
}

/// Checks `cfg.samples` randomly drawn parameters, each on a fresh random
/// layout and cotangent, against central differences of step
/// [`FD_STEP_COMPOSITE`]. Parameters of an object with any pixel in its
/// singular set are excluded and counted separately.
pub fn run_gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    crate::geometry::check_dims(cfg.width, cfg.height)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = GradcheckReport {
        config: *cfg,
        fd_step: FD_STEP_COMPOSITE,
        checked: 0,
        failures: 0,
        singular_exclusions: 0,
        pass_rate: 0.0,
        passed: false,
        alpha: ParamStats::default(),
        beta: ParamStats::default(),
        s: ParamStats::default(),
        gamma: ParamStats::default(),
        e: ParamStats::default(),
        f: ParamStats::default(),
    };
    for _ in 0..cfg.samples {
        let layout = random_check_layout(&mut rng, cfg)?;
        let d_f = layout.feature_dim();
        let cot_values = (0..cfg.width * cfg.height * d_f)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let cotangent = Grid::from_vec(cfg.width, cfg.height, d_f, cot_values)?;
        let index = rng.random_range(0..layout.len());
        let param = match rng.random_range(0..6) {
            0 => Param::Alpha,
            1 => Param::Beta,
            2 => Param::Size,
            3 => Param::Gamma,
            4 => Param::Ecc,
            _ => Param::Feature(rng.random_range(0..d_f)),
        };

        let grads = composite_jacobian_vp(&layout, &cotangent)?;
        if grads.singular_pixels[index] > 0 {
            report.singular_exclusions += 1;
            continue;
        }
        let analytic = grads.objects[index].get(param);
        let numeric = fd_composite(&layout, &cotangent, index, param, FD_STEP_COMPOSITE)?;
        let ok = gradients_agree(analytic, numeric, cfg.rel_tol);
        let rel = relative_error(analytic, numeric);

        report.checked += 1;
        let stats = report.stats_mut(param);
        stats.checked += 1;
        stats.max_rel_error = stats.max_rel_error.max(rel);
        if !ok {
            stats.failures += 1;
            report.failures += 1;
        }
    }
    report.pass_rate = if report.checked == 0 {
        0.0
    } else {
        (report.checked - report.failures) as f64 / report.checked as f64
    };
    report.passed = report.checked > 0 && report.pass_rate >= cfg.pass_fraction;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ellipse_distance;

    #[test]
    fn circle_has_no_shape_gradient() {
        let ell = EllipseParams::new(1.0, 1.2, 0.7, 0.0).unwrap();
        let g = d_distance(SphereCoord::new(2.1, 0.9), &ell);
        assert!(!g.singular);
        assert_eq!(g.gamma, 0.0);
        assert_eq!(g.ecc, 0.0);
    }

    #[test]
    fn alpha_partial_is_antisymmetric_across_meridian() {
        let ell = EllipseParams::new(2.0, PI / 2.0, 0.3, 0.6).unwrap();
        let east = d_distance(SphereCoord::new(2.4, PI / 2.0), &ell);
        let west = d_distance(SphereCoord::new(1.6, PI / 2.0), &ell);
        assert!(east.alpha.abs() > 0.1);
        assert!((east.alpha + west.alpha).abs() < 1e-12);
        assert!((east.distance - west.distance).abs() < 1e-12);

        // off the parallel the mirror image also needs γ → −γ
        let east = d_distance(SphereCoord::new(2.4, 1.0), &ell);
        let ell_mirror = EllipseParams::new(2.0, PI / 2.0, -0.3, 0.6).unwrap();
        let west = d_distance(SphereCoord::new(1.6, 1.0), &ell_mirror);
        assert!((east.alpha + west.alpha).abs() < 1e-12);
    }

    #[test]
    fn singular_points_are_flagged() {
        let ell = EllipseParams::new(1.0, 1.0, 0.2, 0.5).unwrap();
        let g = d_distance(ell.center(), &ell);
        assert!(g.singular);
        assert_eq!((g.alpha, g.beta, g.gamma, g.ecc), (0.0, 0.0, 0.0, 0.0));
        let anti = d_distance(SphereCoord::new(1.0 + PI, PI - 1.0), &ell);
        assert!(anti.singular);
    }

    #[test]
    fn distance_partials_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let h = FD_STEP_GEOMETRY;
        for _ in 0..2000 {
            let p = SphereCoord::new(rng.random_range(0.0..TAU), rng.random_range(0.05..PI - 0.05));
            let (a, b, g, e) = (
                rng.random_range(0.0..TAU),
                rng.random_range(0.05..PI - 0.05),
                rng.random_range(-PI..PI),
                rng.random_range(0.0..0.9),
            );
            let ell = EllipseParams { alpha: a, beta: b, gamma: g, ecc: e };
            let grad = d_distance(p, &ell);
            if grad.singular || grad.distance < 1e-3 || grad.distance > PI - 1e-3 {
                continue;
            }
            let fd = |f: &dyn Fn(f64) -> EllipseParams| {
                (ellipse_distance(p, &f(h)) - ellipse_distance(p, &f(-h))) / (2.0 * h)
            };
            let pairs = [
                (grad.alpha, fd(&|d| EllipseParams { alpha: a + d, ..ell })),
                (grad.beta, fd(&|d| EllipseParams { beta: b + d, ..ell })),
                (grad.gamma, fd(&|d| EllipseParams { gamma: g + d, ..ell })),
                (grad.ecc, fd(&|d| EllipseParams { ecc: e + d, ..ell })),
            ];
            for (an, num) in pairs {
                assert!(gradients_agree(an, num, 1e-4), "{an} vs {num} at {p:?} {ell:?}");
            }
        }
    }

    #[test]
    fn opacity_derivative() {
        assert_eq!(d_opacity(0.4, 0.4), (0.25, -0.25));
        let (ds, dd) = d_opacity(0.0, 50.0);
        assert!(ds.abs() < 1e-20 && dd.abs() < 1e-20);
        let (ds, _) = d_opacity(50.0, 0.0);
        assert!(ds > 0.0 && ds < 1e-20);
        let (s, d, h) = (0.37, -0.81, 1e-6);
        let num = (opacity(s + h, d) - opacity(s - h, d)) / (2.0 * h);
        assert!(relative_error(d_opacity(s, d).0, num) < 1e-6);
        let num = (opacity(s, d + h) - opacity(s, d - h)) / (2.0 * h);
        assert!(relative_error(d_opacity(s, d).1, num) < 1e-6);
    }

    #[test]
    fn zero_cotangent_gives_zero_gradient() {
        let layout = SceneLayout::random(4, 3, 2, 16, 8).unwrap();
        let grads = composite_jacobian_vp(&layout, &Grid::zeros(16, 8, 2)).unwrap();
        for g in &grads.objects {
            assert_eq!(g, &ParamGradient::zeros(2));
        }
        assert!(composite_jacobian_vp(&layout, &Grid::zeros(16, 8, 3)).is_err());
    }

    #[test]
    fn one_hot_cotangent_reads_opacity() {
        let layout = SceneLayout::random(6, 1, 3, 16, 8).unwrap();
        let mut cot = Grid::zeros(16, 8, 3);
        cot.set(5, 2, 1, 1.0);
        let grads = composite_jacobian_vp(&layout, &cot).unwrap();
        let o = crate::layout::opacity_field(&layout, 0).unwrap().get(5, 2, 0);
        assert!((grads.objects[0].features[1] - o).abs() < 1e-15);
        assert_eq!(grads.objects[0].features[0], 0.0);
    }

    #[test]
    fn small_gradcheck_passes() {
        let cfg = GradcheckConfig {
            samples: 300,
            ..Default::default()
        };
        let report = run_gradcheck(&cfg).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.checked + report.singular_exclusions, 300);
    }
}
