use rayon::prelude::*;

use super::image::{BinaryMask, GrayImage};
use crate::error::{Error, Result};

/// Which intensity counts as foreground.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    /// Dark objects on a bright background; intensities are inverted first.
    Dark,
    Bright,
}

/// Side of the square averaging window: `ceil(min(w, h) / 16) * 2 + 1`.
pub fn window_side(width: usize, height: usize) -> usize {
    width.min(height).div_ceil(16) * 2 + 1
}

/// Adaptive local-mean threshold. A pixel is foreground when its (oriented)
/// intensity exceeds the mean over the surrounding window, clipped to the
/// image, times `1 + (0.5 - sensitivity)`. Higher sensitivity marks more
/// pixels as foreground; 0.5 compares against the plain local mean.
pub fn binarize(img: &GrayImage, sensitivity: f64, polarity: Polarity) -> Result<BinaryMask> {
    if !(0.0..=1.0).contains(&sensitivity) {
        return Err(Error::Validation(format!(
            "sensitivity must lie in [0, 1], got {sensitivity}"
        )));
    }
    let oriented = match polarity {
        Polarity::Dark => img.inverted(),
        Polarity::Bright => img.clone(),
    };
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 {
        return BinaryMask::new(w, h, Vec::new());
    }
    let half = window_side(w, h) / 2;
    let factor = 1.0 + (0.5 - sensitivity);

    // summed-area table with a zero border row and column
    let mut sat = vec![0.0f64; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += oriented.get(x, y);
            sat[(y + 1) * (w + 1) + x + 1] = sat[y * (w + 1) + x + 1] + row;
        }
    }
    let bits: Vec<bool> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            let sat = &sat;
            let oriented = &oriented;
            let y0 = y.saturating_sub(half);
            let y1 = (y + half + 1).min(h);
            (0..w).map(move |x| {
                let x0 = x.saturating_sub(half);
                let x1 = (x + half + 1).min(w);
                let sum = sat[y1 * (w + 1) + x1] - sat[y0 * (w + 1) + x1] - sat[y1 * (w + 1) + x0]
                    + sat[y0 * (w + 1) + x0];
                let mean = sum / ((x1 - x0) * (y1 - y0)) as f64;
                oriented.get(x, y) > mean * factor
            })
        })
        .collect();
    BinaryMask::new(w, h, bits)
}
