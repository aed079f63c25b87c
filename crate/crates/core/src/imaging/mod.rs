//! Simulation-versus-photograph comparison: binarize a photograph, register
//! simulated minima onto it with a projective map, and measure overlap
//! inside evaluation circles.

mod binarize;
mod compare;
mod homography;
mod image;

pub use binarize::{binarize, window_side, Polarity};
pub use compare::{project_points, 
    agreement_curve, format_curve_csv, overlap_fraction, parse_correspondences, project_minima,
    AgreementPoint, Circle, Overlap, Projection,
};
pub use homography::{fit_homography, Correspondence, Homography};
pub use image::{read_pgm, write_pgm, BinaryMask, GrayImage};
