use crate::error::{Error, Result};
use crate::grid::Grid;

/// A single-channel cross-correlation kernel with odd extents.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    k_w: usize,
    k_h: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    /// `weights` is row-major, `k_h` rows of `k_w` values.
    pub fn new(k_w: usize, k_h: usize, weights: Vec<f64>) -> Result<Self> {
        if k_w.is_multiple_of(2) || k_h.is_multiple_of(2) {
            return Err(Error::Kernel(format!("extents {k_w}x{k_h} must be odd")));
        }
        if weights.len() != k_w * k_h {
            return Err(Error::Kernel(format!(
                "{} weights for a {k_w}x{k_h} kernel",
                weights.len()
            )));
        }
        Ok(Self { k_w, k_h, weights })
    }

    /// The kernel that reproduces its input.
    pub fn identity(k_w: usize, k_h: usize) -> Result<Self> {
        let mut weights = vec![0.0; k_w * k_h];
        if let Some(w) = weights.get_mut((k_h / 2) * k_w + k_w / 2) {
            *w = 1.0;
        }
        Self::new(k_w, k_h, weights)
    }

    pub fn width(&self) -> usize {
        self.k_w
    }

    pub fn height(&self) -> usize {
        self.k_h
    }

    pub fn weight(&self, kx: usize, ky: usize) -> f64 {
        self.weights[ky * self.k_w + kx]
    }
}

/// Pads `pad` columns on each side by wrapping around: the left pad copies the
/// rightmost columns and the right pad the leftmost ones.
pub fn circular_pad(img: &Grid, pad: usize) -> Result<Grid> {
    let (w, h, c) = img.shape();
    if pad > w {
        return Err(Error::Invalid(format!("pad {pad} exceeds width {w}")));
    }
    let out_w = w + 2 * pad;
    let mut data = Vec::with_capacity(out_w * h * c);
    for y in 0..h {
        let row = img.row(y);
        data.extend_from_slice(&row[(w - pad) * c..]);
        data.extend_from_slice(row);
        data.extend_from_slice(&row[..pad * c]);
    }
    Grid::from_vec(out_w, h, c, data)
}

/// Cross-correlation of every channel with `kernel`, wrapping horizontally and
/// zero-padding vertically. The output has the input's shape.
pub fn conv2d_circular(img: &Grid, kernel: &Kernel2D) -> Result<Grid> {
    let (w, h, c) = img.shape();
    let (rx, ry) = (kernel.k_w / 2, kernel.k_h / 2);
    if rx > w {
        return Err(Error::Kernel(format!(
            "kernel width {} too large for {w} columns",
            kernel.k_w
        )));
    }
    let padded = circular_pad(img, rx)?;
    let pw = padded.width();
    let src = padded.data();
    let mut out = Grid::zeros(w, h, c);
    let data = out.data_mut();
    for y in 0..h {
        for ky in 0..kernel.k_h {
            // vertical zero padding: rows outside the image contribute nothing
            let sy = y as isize + ky as isize - ry as isize;
            if sy < 0 || sy >= h as isize {
                continue;
            }
            let src_row = &src[sy as usize * pw * c..(sy as usize + 1) * pw * c];
            for kx in 0..kernel.k_w {
                let wgt = kernel.weight(kx, ky);
                let dst_row = &mut data[y * w * c..(y + 1) * w * c];
                let shifted = &src_row[kx * c..(kx + w) * c];
                for (d, s) in dst_row.iter_mut().zip(shifted) {
                    *d += wgt * s;
                }
            }
        }
    }
    Ok(out)
}

/// Rotates columns right by `t` (mod `W`): output column `x` is input column
/// `(x − t) mod W`.
pub fn circshift(img: &Grid, t: isize) -> Grid {
    let (w, h, c) = img.shape();
    if w == 0 {
        return img.clone();
    }
    let t = t.rem_euclid(w as isize) as usize;
    let mut data = Vec::with_capacity(img.data().len());
    for y in 0..h {
        let row = img.row(y);
        data.extend_from_slice(&row[(w - t) * c..]);
        data.extend_from_slice(&row[..(w - t) * c]);
    }
    Grid::from_vec(w, h, c, data).expect("shape preserved")
}

/// Mirrors columns: output column `x` is input column `W − 1 − x`.
pub fn flip_horizontal(img: &Grid) -> Grid {
    let (w, h, c) = img.shape();
    Grid::from_fn(w, h, c, |x, y, ch| img.get(w - 1 - x, y, ch))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn columns(w: usize) -> Grid {
        Grid::from_fn(w, 2, 1, |x, _, _| x as f64)
    }

    fn row0(g: &Grid) -> Vec<f64> {
        (0..g.width()).map(|x| g.get(x, 0, 0)).collect()
    }

    #[test]
    fn pad_wraps_columns() {
        let img = columns(4);
        assert_eq!(circular_pad(&img, 0).unwrap(), img);
        assert_eq!(row0(&circular_pad(&img, 1).unwrap()), [3.0, 0.0, 1.0, 2.0, 3.0, 0.0]);
        assert_eq!(
            row0(&circular_pad(&img, 4).unwrap()),
            [0.0, 1.0, 2.0, 3.0, 0.0, 1.0, 2.0, 3.0, 0.0, 1.0, 2.0, 3.0]
        );
        assert!(circular_pad(&img, 5).is_err());
    }

    #[test]
    fn shift_permutes_columns() {
        let img = columns(8);
        assert_eq!(row0(&circshift(&img, 3)), [5.0, 6.0, 7.0, 0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(circshift(&img, 8), img);
        assert_eq!(circshift(&circshift(&img, 3), -3), img);
        assert_eq!(circshift(&img, -5), circshift(&img, 3));
    }

    #[test]
    fn flip_is_an_involution() {
        let img = columns(6);
        assert_eq!(row0(&flip_horizontal(&img)), [5.0, 4.0, 3.0, 2.0, 1.0, 0.0]);
        assert_eq!(flip_horizontal(&flip_horizontal(&img)), img);
    }

    #[test]
    fn kernels_must_be_odd() {
        assert!(Kernel2D::new(2, 3, vec![0.0; 6]).is_err());
        assert!(Kernel2D::new(3, 3, vec![0.0; 8]).is_err());
        assert!(Kernel2D::identity(3, 5).is_ok());
    }

    #[test]
    fn identity_kernel_is_exact() {
        let img = Grid::from_fn(10, 5, 3, |x, y, c| (x * 31 + y * 7 + c) as f64 * 0.123);
        let out = conv2d_circular(&img, &Kernel2D::identity(5, 3).unwrap()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn horizontal_kernel_reaches_across_the_seam() {
        let img = columns(4);
        let k = Kernel2D::new(3, 1, vec![1.0, 0.0, 0.0]).unwrap();
        // each output takes its left neighbour, column 0 takes column 3
        assert_eq!(row0(&conv2d_circular(&img, &k).unwrap()), [3.0, 0.0, 1.0, 2.0]);
        let k = Kernel2D::new(1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        let out = conv2d_circular(&img, &k).unwrap();
        // vertical zero padding: the top row sees nothing above it
        assert_eq!(row0(&out), [0.0; 4]);
    }
}
