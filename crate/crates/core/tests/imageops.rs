mod common;

use std::f64::consts::{PI, TAU};

use common::layout;
use panolayout_core::imageops::{
    augment, augment_with, bilinear_taps, circshift, circular_pad, conv2d_circular, flip_horizontal, project_grid,
    EquirectImage, Kernel2D, PerspectiveCamera,
};
use panolayout_core::layout::composite;
use panolayout_core::reference::conv2d_naive;
use panolayout_core::Grid;
use proptest::prelude::*;

fn grid(w: usize, h: usize, c: usize) -> impl Strategy<Value = Grid> {
    proptest::collection::vec(-1.0..1.0f64, w * h * c).prop_map(move |v| Grid::from_vec(w, h, c, v).unwrap())
}

fn kernel() -> impl Strategy<Value = Kernel2D> {
    (0usize..3, 0usize..3).prop_flat_map(|(a, b)| {
        let (kw, kh) = (2 * a + 1, 2 * b + 1);
        proptest::collection::vec(-1.0..1.0f64, kw * kh).prop_map(move |w| Kernel2D::new(kw, kh, w).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn convolution_is_shift_equivariant_bit_for_bit(img in grid(24, 12, 2), k in kernel(), t in -30isize..30) {
        let a = circshift(&conv2d_circular(&img, &k).unwrap(), t);
        let b = conv2d_circular(&circshift(&img, t), &k).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn convolution_matches_naive_oracle(img in grid(20, 10, 3), k in kernel()) {
        let diff = conv2d_circular(&img, &k).unwrap().max_abs_diff(&conv2d_naive(&img, &k)).unwrap();
        prop_assert!(diff <= 1e-6);
    }

    #[test]
    fn circshift_inverts(img in grid(16, 8, 2), t in -40isize..40) {
        prop_assert_eq!(circshift(&circshift(&img, t), -t), img.clone());
        prop_assert_eq!(circshift(&img, t + 16), circshift(&img, t));
    }

    #[test]
    fn circular_pad_wraps_both_sides(img in grid(10, 4, 1), pad in 0usize..10) {
        let padded = circular_pad(&img, pad).unwrap();
        for y in 0..4 {
            for x in 0..10 + 2 * pad {
                let src = (x as isize - pad as isize).rem_euclid(10) as usize;
                prop_assert_eq!(padded.get(x, y, 0), img.get(src, y, 0));
            }
        }
    }

    #[test]
    fn augmentation_commutes_with_rendering(l in layout(32, 16, 4, 3), seed in any::<u64>()) {
        let img = EquirectImage::filled(32, 16, [0.5; 3]).unwrap();
        let (_, moved, rec) = augment(&img, &l, seed).unwrap();
        let mut want = circshift(&composite(&l), rec.t as isize);
        if rec.flip {
            want = flip_horizontal(&want);
        }
        prop_assert!(composite(&moved).max_abs_diff(&want).unwrap() <= 1e-6);
    }

    #[test]
    fn flip_alone_commutes_with_rendering(l in layout(32, 16, 4, 2), t in 0usize..32) {
        let img = EquirectImage::filled(32, 16, [0.5; 3]).unwrap();
        let (_, moved) = augment_with(&img, &l, t, true).unwrap();
        let want = flip_horizontal(&circshift(&composite(&l), t as isize));
        prop_assert!(composite(&moved).max_abs_diff(&want).unwrap() <= 1e-6);
    }

    #[test]
    fn bilinear_weights_sum_to_one(theta in -10.0..10.0f64, phi in 0.0..=PI) {
        let taps = bilinear_taps(theta, phi, 64, 32);
        let total: f64 = taps.iter().map(|t| t.2).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(taps.iter().all(|t| t.0 < 64 && t.1 < 32 && t.2 >= 0.0));
    }
}

#[test]
fn augmentation_moves_pixels_with_the_layout() {
    let img = Grid::from_fn(32, 16, 3, |x, y, c| ((x * 3 + y + c) % 17) as f64 / 16.0);
    let img = EquirectImage::new(img).unwrap();
    let l = panolayout_core::SceneLayout::random(1, 2, 2, 32, 16).unwrap();
    for seed in 0..20 {
        let (out, _, rec) = augment(&img, &l, seed).unwrap();
        let mut want = circshift(img.grid(), rec.t as isize);
        if rec.flip {
            want = flip_horizontal(&want);
        }
        assert_eq!(out.grid(), &want);
    }
}

#[test]
fn perspective_is_smooth_across_the_seam() {
    let img = Grid::from_fn(128, 64, 1, |x, y, _| {
        let theta = TAU * (x as f64 + 0.5) / 128.0;
        let phi = PI * (y as f64 + 0.5) / 64.0;
        (theta.cos() + 0.5 * (2.0 * theta).sin()) * phi.sin()
    });
    let half_degree = 0.5f64.to_radians();
    let a = project_grid(&img, &PerspectiveCamera::new(-half_degree, 0.1, 0.0, 1.2, 48, 32).unwrap()).unwrap();
    let b = project_grid(&img, &PerspectiveCamera::new(half_degree, 0.1, 0.0, 1.2, 48, 32).unwrap()).unwrap();
    // one degree of yaw moves the view by well under a pixel of the source
    assert!(a.max_abs_diff(&b).unwrap() < 0.05);
    let wrapped = project_grid(&img, &PerspectiveCamera::new(TAU - half_degree, 0.1, 0.0, 1.2, 48, 32).unwrap()).unwrap();
    assert!(a.max_abs_diff(&wrapped).unwrap() < 1e-12);
}

#[test]
fn facing_an_object_centers_its_hotspot() {
    use panolayout_core::layout::opacity_field;
    let l = panolayout_core::SceneLayout::random(3, 1, 1, 128, 64).unwrap();
    let ell = l.objects()[0].ellipse;
    let field = opacity_field(&l, 0).unwrap();
    let cam = PerspectiveCamera::new(ell.alpha, std::f64::consts::FRAC_PI_2 - ell.beta, 0.0, 1.4, 64, 64).unwrap();
    let view = project_grid(&field, &cam).unwrap();
    let (mut best, mut at) = (f64::MIN, (0, 0));
    for y in 0..64 {
        for x in 0..64 {
            if view.get(x, y, 0) > best {
                best = view.get(x, y, 0);
                at = (x, y);
            }
        }
    }
    assert!((at.0 as f64 - 31.5).abs() <= 0.05 * 64.0 && (at.1 as f64 - 31.5).abs() <= 0.05 * 64.0, "{at:?}");
}
