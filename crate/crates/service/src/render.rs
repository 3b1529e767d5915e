//! Views of a session snapshot. Every render is a pure function of the
//! snapshot and the request, so repeating a request at one revision returns
//! identical bytes.

use std::collections::HashMap;
use std::f64::consts::PI;

use panolayout_core::grid::Grid;
use panolayout_core::imageops::{grid_to_png, project_grid, PerspectiveCamera};
use panolayout_core::layout::{composite, composite_weight, distance_field, opacity_field};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::ServiceError;
use crate::session::Snapshot;

/// Blend factor of the weight heatmap over the background.
pub const OVERLAY_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Png,
    Plt1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViewMode {
    /// Raw `d_f`-channel layout map; grid only.
    Composite,
    /// Seeded random projection of the layout map to RGB.
    CompositeRgb,
    Weight,
    /// Zero-based object index.
    Opacity(usize),
    Distance(usize),
    Background,
    Overlay,
    Perspective(PerspectiveCamera),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewRequest {
    pub mode: ViewMode,
    pub format: Format,
}

fn param<T: std::str::FromStr>(
    query: &HashMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, ServiceError> {
    match query.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| ServiceError::BadRequest(format!("bad value for {key}: {v:?}"))),
    }
}

fn object_index(spec: &str) -> Result<usize, ServiceError> {
    match spec.parse::<usize>() {
        Ok(i) if i >= 1 => Ok(i - 1),
        _ => Err(ServiceError::BadRequest(format!("bad object number {spec:?}"))),
    }
}

impl ViewRequest {
    /// Parses `mode=...` plus its parameters. Object numbers in
    /// `opacity:i` / `distance:i` are 1-based; perspective angles are radians.
    pub fn from_query(query: &HashMap<String, String>) -> Result<Self, ServiceError> {
        let mode_str = query
            .get("mode")
            .ok_or_else(|| ServiceError::BadRequest("missing mode".into()))?;
        let mode = match mode_str.split_once(':') {
            Some(("opacity", i)) => ViewMode::Opacity(object_index(i)?),
            Some(("distance", i)) => ViewMode::Distance(object_index(i)?),
            _ => match mode_str.as_str() {
                "composite" => ViewMode::Composite,
                "composite-rgb" => ViewMode::CompositeRgb,
                "weight" => ViewMode::Weight,
                "background" => ViewMode::Background,
                "overlay" => ViewMode::Overlay,
                "perspective" => ViewMode::Perspective(PerspectiveCamera::new(
                    param(query, "yaw", 0.0)?,
                    param(query, "pitch", 0.0)?,
                    param(query, "roll", 0.0)?,
                    param(query, "fov", PI / 2.0)?,
                    param(query, "w", 256usize)?,
                    param(query, "h", 256usize)?,
                )?),
                other => return Err(ServiceError::BadRequest(format!("unknown mode {other:?}"))),
            },
        };
        let format = match query.get("format").map(String::as_str) {
            None if mode == ViewMode::Composite => Format::Plt1,
            None | Some("png") => Format::Png,
            Some("plt1") => Format::Plt1,
            Some(other) => {
                return Err(ServiceError::BadRequest(format!("unknown format {other:?}")))
            }
        };
        if mode == ViewMode::Composite && format == Format::Png {
            return Err(ServiceError::BadRequest(
                "the raw composite is only available as plt1".into(),
            ));
        }
        Ok(Self { mode, format })
    }
}

/// Encoded render plus the revision it reflects.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub revision: u64,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

/// `3×d_f` projection with N(0, 1/d_f) entries drawn from the session seed.
fn projection(seed: u64, d_f: usize) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (d_f.max(1) as f64).sqrt();
    (0..d_f)
        .map(|_| {
            let mut row = [0.0; 3];
            for v in &mut row {
                *v = scale * rng.sample::<f64, _>(StandardNormal);
            }
            row
        })
        .collect()
}

pub fn composite_rgb(snap: &Snapshot) -> Grid {
    let map = composite(&snap.layout);
    let proj = projection(snap.projection_seed, map.channels());
    Grid::from_fn(map.width(), map.height(), 3, |x, y, c| {
        let v: f64 = map
            .pixel(x, y)
            .iter()
            .zip(&proj)
            .map(|(f, row)| f * row[c])
            .sum();
        0.5 + 0.5 * v.tanh()
    })
}

pub fn overlay(snap: &Snapshot) -> Grid {
    let weight = composite_weight(&snap.layout);
    let bg = snap.background.grid();
    Grid::from_fn(bg.width(), bg.height(), 3, |x, y, c| {
        (1.0 - OVERLAY_ALPHA) * bg.get(x, y, c) + OVERLAY_ALPHA * weight.get(x, y, 0)
    })
}

/// The grid a view displays, before encoding.
pub fn view_grid(snap: &Snapshot, mode: &ViewMode) -> Result<Grid, ServiceError> {
    let layout = &snap.layout;
    let out_of_range = |i: usize| {
        ServiceError::BadRequest(format!(
            "object {} out of range for {} objects",
            i + 1,
            layout.len()
        ))
    };
    Ok(match *mode {
        ViewMode::Composite => composite(layout),
        ViewMode::CompositeRgb => composite_rgb(snap),
        ViewMode::Weight => composite_weight(layout),
        ViewMode::Opacity(i) => opacity_field(layout, i).map_err(|_| out_of_range(i))?,
        ViewMode::Distance(i) => distance_field(layout, i).map_err(|_| out_of_range(i))?,
        ViewMode::Background => snap.background.grid().clone(),
        ViewMode::Overlay => overlay(snap),
        ViewMode::Perspective(cam) => project_grid(&overlay(snap), &cam)?,
    })
}

pub fn render_view(snap: &Snapshot, req: &ViewRequest) -> Result<Rendered, ServiceError> {
    let mut grid = view_grid(snap, &req.mode)?;
    let (content_type, body) = match req.format {
        Format::Plt1 => ("application/octet-stream", grid.to_plt_bytes()),
        Format::Png => {
            if let ViewMode::Distance(_) = req.mode {
                // distances span [0, π]
                for v in grid.data_mut() {
                    *v /= PI;
                }
            }
            ("image/png", grid_to_png(&grid)?)
        }
    };
    Ok(Rendered {
        revision: snap.revision,
        content_type,
        body,
    })
}
