//! Raster operations that respect the panorama seam.

mod augment;
mod conv;
mod io;
mod perspective;

pub use augment::{augment, augment_with, draw_augmentation, AugmentRecord};
pub use conv::{circshift, circular_pad, conv2d_circular, flip_horizontal, Kernel2D};
pub use io::{grid_to_png, load_png, save_png, EquirectImage};
pub use perspective::{bilinear_taps, project_grid, project_perspective, PerspectiveCamera};
