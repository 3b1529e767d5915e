//! Object vectors and their composition into the layout map.
//!
//! Every object owns an ellipse, a size `s` and a feature vector `f`. Its
//! opacity at a pixel is `sigmoid(s − d)` where `d` is the ellipse distance of
//! that pixel, and the map is the back-to-front alpha composite
//!
//! ```text
//! L(θ, φ) = Σ_i f_i · o_i · Π_{k>i} (1 − o_k)
//! ```
//!
//! with object `1` at the back and object `n` at the front. Pixels that no
//! object covers stay at zero.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    check_dims, check_ecc, normalize_angles, wrap_azimuth, EllipseParams, PixelDirections,
    PreparedEllipse, UnitVec,
};
use crate::grid::{FieldGrid, Grid, LayoutMap};

/// Size assigned by [`Manipulation::Remove`]; `sigmoid(-20) ≈ 2e-9`, so the
/// object vanishes from the map everywhere since `d ≥ 0`.
pub const REMOVED_SIZE: f64 = -20.0;

/// Object count used by the reference configuration.
pub const DEFAULT_OBJECTS: usize = 20;
/// Feature dimension used by the reference configuration.
pub const DEFAULT_FEATURE_DIM: usize = 1024;

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Feature opacity of an object of size `s` at ellipse distance `d`.
#[inline]
pub fn opacity(s: f64, d: f64) -> f64 {
    sigmoid(s - d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectVector {
    pub ellipse: EllipseParams,
    pub size: f64,
    pub features: Vec<f64>,
}

impl ObjectVector {
    pub fn new(ellipse: EllipseParams, size: f64, features: Vec<f64>) -> Self {
        Self {
            ellipse,
            size,
            features,
        }
    }
}

/// An ordered set of objects plus the render dimensions. Index order is the
/// compositing order: the last object is frontmost.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneLayout {
    feature_dim: usize,
    structure_dim: usize,
    width: usize,
    height: usize,
    objects: Vec<ObjectVector>,
}

impl SceneLayout {
    /// Builds a layout with the default even structure/style split.
    pub fn new(
        width: usize,
        height: usize,
        feature_dim: usize,
        objects: Vec<ObjectVector>,
    ) -> Result<Self> {
        Self::with_split(width, height, feature_dim, feature_dim / 2, objects)
    }

    pub fn with_split(
        width: usize,
        height: usize,
        feature_dim: usize,
        structure_dim: usize,
        objects: Vec<ObjectVector>,
    ) -> Result<Self> {
        check_dims(width, height)?;
        if structure_dim > feature_dim {
            return Err(Error::Layout(format!(
                "d_u = {structure_dim} exceeds d_f = {feature_dim}"
            )));
        }
        for (i, obj) in objects.iter().enumerate() {
            if obj.features.len() != feature_dim {
                return Err(Error::Layout(format!(
                    "object {} has {} features, expected {feature_dim}",
                    i + 1,
                    obj.features.len()
                )));
            }
            check_ecc(obj.ellipse.ecc)?;
            let finite = obj.size.is_finite()
                && obj.features.iter().all(|v| v.is_finite())
                && [obj.ellipse.alpha, obj.ellipse.beta, obj.ellipse.gamma]
                    .iter()
                    .all(|v| v.is_finite());
            if !finite {
                return Err(Error::Layout(format!("object {} is not finite", i + 1)));
            }
        }
        Ok(Self {
            feature_dim,
            structure_dim,
            width,
            height,
            objects,
        })
    }

    /// A seeded random layout: `α` uniform over the full circle, `β` uniform
    /// in `[π/4, 3π/4]`, `s` uniform in `[0.3, 0.8]`, `e` uniform in `[0, 0.8)`,
    /// `γ` uniform in `[0, π)` and standard-normal features, drawn from
    /// ChaCha8 seeded with `seed`.
    pub fn random(
        seed: u64,
        n: usize,
        feature_dim: usize,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let objects = (0..n)
            .map(|_| {
                let alpha = rng.random_range(0.0..TAU);
                let beta = rng.random_range(PI / 4.0..=3.0 * PI / 4.0);
                let gamma = rng.random_range(0.0..PI);
                let ecc = rng.random_range(0.0..0.8);
                let size = rng.random_range(0.3..=0.8);
                let features = (0..feature_dim)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                Ok(ObjectVector::new(
                    EllipseParams::new(alpha, beta, gamma, ecc)?,
                    size,
                    features,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(width, height, feature_dim, objects)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn structure_dim(&self) -> usize {
        self.structure_dim
    }

    pub fn style_dim(&self) -> usize {
        self.feature_dim - self.structure_dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn objects(&self) -> &[ObjectVector] {
        &self.objects
    }

    pub fn object(&self, i: usize) -> Option<&ObjectVector> {
        self.objects.get(i)
    }

    /// Returns the layout with the objects replaced, revalidated.
    pub fn with_objects(&self, objects: Vec<ObjectVector>) -> Result<Self> {
        Self::with_split(
            self.width,
            self.height,
            self.feature_dim,
            self.structure_dim,
            objects,
        )
    }

    /// Same objects rendered at a different resolution.
    pub fn with_dims(&self, width: usize, height: usize) -> Result<Self> {
        Self::with_split(
            width,
            height,
            self.feature_dim,
            self.structure_dim,
            self.objects.clone(),
        )
    }

    pub fn to_document(&self) -> LayoutDocument {
        LayoutDocument {
            version: 1,
            n: self.len(),
            d_f: self.feature_dim,
            d_u: self.structure_dim,
            d_y: self.style_dim(),
            width: self.width,
            height: self.height,
            objects: self
                .objects
                .iter()
                .map(|o| ObjectDocument {
                    alpha: o.ellipse.alpha,
                    beta: o.ellipse.beta,
                    s: o.size,
                    gamma: o.ellipse.gamma,
                    e: o.ellipse.ecc,
                    f: o.features.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("layout serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LayoutDocument = serde_json::from_str(text)?;
        doc.into_layout()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }
}

/// On-disk JSON form of a [`SceneLayout`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutDocument {
    pub version: u32,
    pub n: usize,
    pub d_f: usize,
    pub d_u: usize,
    pub d_y: usize,
    pub width: usize,
    pub height: usize,
    pub objects: Vec<ObjectDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDocument {
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    pub gamma: f64,
    pub e: f64,
    pub f: Vec<f64>,
}

impl LayoutDocument {
    pub fn into_layout(self) -> Result<SceneLayout> {
        if self.version != 1 {
            return Err(Error::Layout(format!("unsupported version {}", self.version)));
        }
        if self.n != self.objects.len() {
            return Err(Error::Layout(format!(
                "n = {} but {} objects listed",
                self.n,
                self.objects.len()
            )));
        }
        if self.d_u + self.d_y != self.d_f {
            return Err(Error::Layout(format!(
                "d_u + d_y = {} does not equal d_f = {}",
                self.d_u + self.d_y,
                self.d_f
            )));
        }
        let objects = self
            .objects
            .into_iter()
            .map(|o| {
                Ok(ObjectVector::new(
                    EllipseParams::new(o.alpha, o.beta, o.gamma, o.e)?,
                    o.s,
                    o.f,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        SceneLayout::with_split(self.width, self.height, self.d_f, self.d_u, objects)
    }
}

/// Per-object data hoisted out of the pixel loop.
pub(crate) struct Prepared<'a> {
    pub ellipse: PreparedEllipse,
    pub object: &'a ObjectVector,
}

pub(crate) fn prepare(layout: &SceneLayout) -> Vec<Prepared<'_>> {
    layout
        .objects
        .iter()
        .map(|object| Prepared {
            ellipse: PreparedEllipse::new(&object.ellipse),
            object,
        })
        .collect()
}

#[inline]
fn opacities_at(prepared: &[Prepared<'_>], u: UnitVec, out: &mut [f64]) {
    for (o, p) in out.iter_mut().zip(prepared) {
        let d = p.ellipse.distance(u);
        *o = opacity(p.object.size, d);
    }
}

/// Runs `per_pixel(opacities, out)` for every pixel, rows in parallel.
fn render_rows(
    layout: &SceneLayout,
    channels: usize,
    per_pixel: impl Fn(&[f64], &mut [f64]) + Sync,
) -> Grid {
    let (w, h) = (layout.width, layout.height);
    let prepared = prepare(layout);
    let dirs = PixelDirections::new(w, h);
    let mut grid = Grid::zeros(w, h, channels);
    if channels == 0 {
        return grid;
    }
    grid.data_mut()
        .par_chunks_mut(w * channels)
        .enumerate()
        .for_each(|(py, row)| {
            let mut ops = vec![0.0; prepared.len()];
            for (px, out) in row.chunks_exact_mut(channels).enumerate() {
                opacities_at(&prepared, dirs.at(px, py), &mut ops);
                per_pixel(&ops, out);
            }
        });
    grid
}

/// Renders the layout map `L` (`W×H×d_f`).
pub fn composite(layout: &SceneLayout) -> LayoutMap {
    let objects = &layout.objects;
    render_rows(layout, layout.feature_dim, |ops, out| {
        // back to front: acc ← acc·(1 − o_i) + f_i·o_i
        for (obj, &o) in objects.iter().zip(ops) {
            let keep = 1.0 - o;
            for (acc, &f) in out.iter_mut().zip(&obj.features) {
                *acc = *acc * keep + f * o;
            }
        }
    })
}

/// Total compositing weight `Σ_i o_i Π_{k>i}(1 − o_k)` per pixel.
pub fn composite_weight(layout: &SceneLayout) -> FieldGrid {
    render_rows(layout, 1, |ops, out| {
        out[0] = ops.iter().fold(0.0, |acc, &o| acc * (1.0 - o) + o);
    })
}

/// Opacity field of object `i` (zero-based).
pub fn opacity_field(layout: &SceneLayout, i: usize) -> Result<FieldGrid> {
    let obj = layout.objects.get(i).ok_or(Error::IndexOutOfRange {
        index: i + 1,
        count: layout.len(),
    })?;
    let mut field = crate::geometry::distance_field(&obj.ellipse, layout.width, layout.height)?;
    for v in field.data_mut() {
        *v = opacity(obj.size, *v);
    }
    Ok(field)
}

/// Distance field of object `i` (zero-based).
pub fn distance_field(layout: &SceneLayout, i: usize) -> Result<FieldGrid> {
    let obj = layout.objects.get(i).ok_or(Error::IndexOutOfRange {
        index: i + 1,
        count: layout.len(),
    })?;
    crate::geometry::distance_field(&obj.ellipse, layout.width, layout.height)
}

/// Splits `L` into the structure part `L_u` (first `d_u` channels) and the
/// style part `L_y` (remaining `d_y`).
pub fn split(map: &LayoutMap, d_u: usize, d_y: usize) -> Result<(LayoutMap, LayoutMap)> {
    if d_u + d_y != map.channels() {
        return Err(Error::Shape(format!(
            "d_u + d_y = {} but the map has {} channels",
            d_u + d_y,
            map.channels()
        )));
    }
    map.split_channels(d_u)
}

/// An edit of one object. `i` is the 1-based object number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Manipulation {
    Remove { i: usize },
    Translate { i: usize, d_alpha: f64, d_beta: f64 },
    Resize { i: usize, d_s: f64 },
    Rotate { i: usize, d_gamma: f64 },
    #[serde(alias = "set_ecc")]
    Ecc { i: usize, e: f64 },
}

impl Manipulation {
    pub fn index(&self) -> usize {
        match *self {
            Manipulation::Remove { i }
            | Manipulation::Translate { i, .. }
            | Manipulation::Resize { i, .. }
            | Manipulation::Rotate { i, .. }
            | Manipulation::Ecc { i, .. } => i,
        }
    }
}

impl fmt::Display for Manipulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Manipulation::Remove { i } => write!(f, "remove:{i}"),
            Manipulation::Translate { i, d_alpha, d_beta } => {
                write!(f, "translate:{i}:{d_alpha}:{d_beta}")
            }
            Manipulation::Resize { i, d_s } => write!(f, "resize:{i}:{d_s}"),
            Manipulation::Rotate { i, d_gamma } => write!(f, "rotate:{i}:{d_gamma}"),
            Manipulation::Ecc { i, e } => write!(f, "ecc:{i}:{e}"),
        }
    }
}

impl FromStr for Manipulation {
    type Err = Error;

    /// Parses `remove:i`, `translate:i:da:db`, `resize:i:ds`, `rotate:i:dg`
    /// and `ecc:i:e`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("malformed manipulation {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let index = |p: &str| p.trim().parse::<usize>().map_err(|_| bad());
        let real = |p: &str| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(bad)
        };
        match parts.as_slice() {
            ["remove", i] => Ok(Manipulation::Remove { i: index(i)? }),
            ["translate", i, da, db] => Ok(Manipulation::Translate {
                i: index(i)?,
                d_alpha: real(da)?,
                d_beta: real(db)?,
            }),
            ["resize", i, ds] => Ok(Manipulation::Resize {
                i: index(i)?,
                d_s: real(ds)?,
            }),
            ["rotate", i, dg] => Ok(Manipulation::Rotate {
                i: index(i)?,
                d_gamma: real(dg)?,
            }),
            ["ecc" | "set_ecc", i, e] => Ok(Manipulation::Ecc {
                i: index(i)?,
                e: real(e)?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Applies one edit and returns the new layout; `layout` is left untouched.
///
/// Translation wraps `α` and reflects `β` at the poles (moving `α` by `π`), so
/// dragging an object over a pole keeps it on the sphere.
pub fn manipulate(layout: &SceneLayout, op: &Manipulation) -> Result<SceneLayout> {
    let i = op.index();
    if i == 0 || i > layout.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            count: layout.len(),
        });
    }
    let mut objects = layout.objects.clone();
    let obj = &mut objects[i - 1];
    match *op {
        Manipulation::Remove { .. } => obj.size = REMOVED_SIZE,
        Manipulation::Translate {
            d_alpha, d_beta, ..
        } => {
            let (alpha, beta) =
                normalize_angles(obj.ellipse.alpha + d_alpha, obj.ellipse.beta + d_beta);
            obj.ellipse.alpha = alpha;
            obj.ellipse.beta = beta;
        }
        Manipulation::Resize { d_s, .. } => obj.size += d_s,
        Manipulation::Rotate { d_gamma, .. } => obj.ellipse.gamma += d_gamma,
        Manipulation::Ecc { e, .. } => {
            check_ecc(e)?;
            obj.ellipse.ecc = e;
        }
    }
    layout.with_objects(objects)
}

/// Shifts every object's azimuth by `delta` radians.
pub fn shift_azimuth(layout: &SceneLayout, delta: f64) -> SceneLayout {
    let objects = layout
        .objects
        .iter()
        .map(|o| {
            let mut o = o.clone();
            o.ellipse.alpha = wrap_azimuth(o.ellipse.alpha + delta);
            o
        })
        .collect();
    SceneLayout {
        objects,
        ..layout.clone()
    }
}

/// Mirrors the layout left-right: `α → 2π − α`, `γ → −γ`.
pub fn mirror(layout: &SceneLayout) -> SceneLayout {
    let objects = layout
        .objects
        .iter()
        .map(|o| {
            let mut o = o.clone();
            o.ellipse.alpha = wrap_azimuth(TAU - o.ellipse.alpha);
            o.ellipse.gamma = -o.ellipse.gamma;
            o
        })
        .collect();
    SceneLayout {
        objects,
        ..layout.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(alpha: f64, beta: f64, size: f64, features: Vec<f64>) -> SceneLayout {
        let d_f = features.len();
        let ell = EllipseParams::new(alpha, beta, 0.3, 0.5).unwrap();
        SceneLayout::new(16, 8, d_f, vec![ObjectVector::new(ell, size, features)]).unwrap()
    }

    #[test]
    fn opacity_values() {
        assert_eq!(opacity(1.3, 1.3), 0.5);
        assert!((opacity(3f64.ln(), 0.0) - 0.75).abs() < 1e-15);
        let tiny = opacity(0.0, 50.0);
        assert!(tiny > 0.0 && tiny < 1e-20);
        assert_eq!(opacity(0.0, -700.0), 1.0);
        assert!(opacity(0.0, 700.0) > 0.0);
    }

    #[test]
    fn single_object_is_feature_times_opacity() {
        let layout = single(1.0, 1.2, 0.6, vec![2.0, -1.0, 0.5]);
        let map = composite(&layout);
        let op = opacity_field(&layout, 0).unwrap();
        for y in 0..8 {
            for x in 0..16 {
                let o = op.get(x, y, 0);
                for (c, f) in [2.0, -1.0, 0.5].iter().enumerate() {
                    assert!((map.get(x, y, c) - f * o).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn opaque_front_object_wins() {
        let back = ObjectVector::new(EllipseParams::new(1.0, 1.5, 0.0, 0.0).unwrap(), 0.5, vec![1.0]);
        let front = ObjectVector::new(EllipseParams::new(4.0, 1.5, 0.0, 0.0).unwrap(), 800.0, vec![7.0]);
        let layout = SceneLayout::new(16, 8, 1, vec![back, front]).unwrap();
        let map = composite(&layout);
        assert!(map.data().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn empty_layout_renders_zero() {
        let layout = SceneLayout::new(16, 8, 3, vec![]).unwrap();
        assert!(composite(&layout).data().iter().all(|&v| v == 0.0));
        assert!(composite_weight(&layout).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weight_saturates_with_an_opaque_object() {
        let mut layout = SceneLayout::random(3, 4, 2, 16, 8).unwrap();
        layout.objects[1].size = 1000.0;
        assert!(composite_weight(&layout).data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn split_validates_dims() {
        let layout = SceneLayout::random(1, 3, 4, 16, 8).unwrap();
        let map = composite(&layout);
        let (u, y) = split(&map, 2, 2).unwrap();
        assert_eq!((u.channels(), y.channels()), (2, 2));
        let (u, y) = split(&map, 0, 4).unwrap();
        assert_eq!(u.channels(), 0);
        assert_eq!(y, map);
        assert!(split(&map, 2, 3).is_err());
    }

    #[test]
    fn manipulation_parsing() {
        assert_eq!(
            "remove:3".parse::<Manipulation>().unwrap(),
            Manipulation::Remove { i: 3 }
        );
        assert_eq!(
            "translate:1:0.5:-0.25".parse::<Manipulation>().unwrap(),
            Manipulation::Translate {
                i: 1,
                d_alpha: 0.5,
                d_beta: -0.25
            }
        );
        assert_eq!(
            "ecc:2:0.4".parse::<Manipulation>().unwrap(),
            Manipulation::Ecc { i: 2, e: 0.4 }
        );
        for bad in ["remove", "remove:x", "spin:1:2", "resize:1:nan", "translate:1:2"] {
            assert!(bad.parse::<Manipulation>().is_err(), "{bad}");
        }
        let op: Manipulation = serde_json::from_str(r#"{"op":"remove","i":3}"#).unwrap();
        assert_eq!(op, Manipulation::Remove { i: 3 });
        let op: Manipulation =
            serde_json::from_str(r#"{"op":"rotate","i":1,"d_gamma":0.5}"#).unwrap();
        assert_eq!(op.to_string().parse::<Manipulation>().unwrap(), op);
    }

    #[test]
    fn manipulate_errors_and_immutability() {
        let layout = SceneLayout::random(5, 3, 2, 16, 8).unwrap();
        let before = layout.clone();
        assert!(matches!(
            manipulate(&layout, &Manipulation::Remove { i: 0 }),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(manipulate(&layout, &Manipulation::Remove { i: 4 }).is_err());
        assert!(matches!(
            manipulate(&layout, &Manipulation::Ecc { i: 1, e: 1.0 }),
            Err(Error::Eccentricity(_))
        ));
        let edited = manipulate(&layout, &Manipulation::Resize { i: 2, d_s: 0.5 }).unwrap();
        assert_eq!(layout, before);
        assert_eq!(edited.objects()[1].size, layout.objects()[1].size + 0.5);
        assert_eq!(edited.objects()[0], layout.objects()[0]);
        assert_eq!(edited.objects()[2], layout.objects()[2]);
    }

    #[test]
    fn translate_reflects_over_pole() {
        let layout = single(1.0, 0.2, 0.5, vec![1.0]);
        let moved = manipulate(
            &layout,
            &Manipulation::Translate {
                i: 1,
                d_alpha: 0.0,
                d_beta: -0.5,
            },
        )
        .unwrap();
        let ell = moved.objects()[0].ellipse;
        assert!((ell.beta - 0.3).abs() < 1e-15);
        assert!((ell.alpha - (1.0 + PI)).abs() < 1e-15);
    }

    #[test]
    fn rotate_by_pi_keeps_map() {
        let layout = SceneLayout::random(11, 3, 3, 16, 8).unwrap();
        let turned = manipulate(&layout, &Manipulation::Rotate { i: 2, d_gamma: PI }).unwrap();
        let diff = composite(&layout).max_abs_diff(&composite(&turned)).unwrap();
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn document_round_trip_and_validation() {
        let layout = SceneLayout::random(2, 2, 4, 16, 8).unwrap();
        let back = SceneLayout::from_json(&layout.to_json()).unwrap();
        assert_eq!(back, layout);

        let mut doc = layout.to_document();
        doc.d_y = 3;
        assert!(doc.clone().into_layout().is_err());
        doc.d_y = 2;
        doc.n = 5;
        assert!(doc.clone().into_layout().is_err());
        doc.n = 2;
        doc.height = 9;
        assert!(doc.into_layout().is_err());

        let extra = layout.to_json().replacen("\"version\"", "\"colour\": 1, \"version\"", 1);
        assert!(SceneLayout::from_json(&extra).is_err());
    }

    #[test]
    fn random_layout_is_reproducible() {
        let a = SceneLayout::random(7, 5, 3, 32, 16).unwrap();
        let b = SceneLayout::random(7, 5, 3, 32, 16).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, SceneLayout::random(8, 5, 3, 32, 16).unwrap());
        for o in a.objects() {
            assert!(o.ellipse.beta >= PI / 4.0 && o.ellipse.beta <= 3.0 * PI / 4.0);
            assert!(o.ellipse.ecc < 0.8);
        }
    }
}
