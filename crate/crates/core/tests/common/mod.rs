#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use panolayout_core::{EllipseParams, ObjectVector, SceneLayout, SphereCoord};
use proptest::prelude::*;

pub fn sphere_coord() -> impl Strategy<Value = SphereCoord> {
    (0.0..TAU, 0.0..=PI).prop_map(|(theta, phi)| SphereCoord { theta, phi })
}

pub fn ellipse() -> impl Strategy<Value = EllipseParams> {
    (0.0..TAU, 0.0..=PI, -PI..PI, 0.0..0.99)
        .prop_map(|(a, b, g, e)| EllipseParams::new(a, b, g, e).unwrap())
}

pub fn object(d_f: usize) -> impl Strategy<Value = ObjectVector> {
    (
        0.0..TAU,
        0.2..PI - 0.2,
        0.0..PI,
        0.0..0.9,
        -0.5..1.5f64,
        proptest::collection::vec(-2.0..2.0f64, d_f),
    )
        .prop_map(|(a, b, g, e, s, f)| {
            ObjectVector::new(EllipseParams::new(a, b, g, e).unwrap(), s, f)
        })
}

/// Layouts at `w×h` with 1..=`max_n` objects and 1..=`max_d` features.
pub fn layout(w: usize, h: usize, max_n: usize, max_d: usize) -> impl Strategy<Value = SceneLayout> {
    (1..=max_n, 1..=max_d).prop_flat_map(move |(n, d_f)| {
        proptest::collection::vec(object(d_f), n)
            .prop_map(move |objs| SceneLayout::new(w, h, d_f, objs).unwrap())
    })
}
