//! Rectangular sample lattices and the parallel potential sweep.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{field_jet, WaveConfig};
use crate::linalg::RangeBasis;
use crate::potential::{derivatives_from_jet, ArpCoefficients};

/// Axis-aligned box sampled with `points[i]` nodes along axis `i`, endpoints
/// included. Storage order is row-major with the first axis fastest, so in 2D
/// the flat index is `iy * nx + ix`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
    points: Vec<usize>,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        let d = lower.len();
        if !(2..=3).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        if upper.len() != d || points.len() != d {
            return Err(Error::Validation(
                "grid corners and resolution must have equal length".into(),
            ));
        }
        for i in 0..d {
            if !(lower[i].is_finite() && upper[i].is_finite()) || lower[i] >= upper[i] {
                return Err(Error::Validation(format!(
                    "degenerate grid box on axis {i}: [{}, {}]",
                    lower[i], upper[i]
                )));
            }
            if points[i] < 2 {
                return Err(Error::Validation(format!(
                    "grid needs at least 2 points per axis, axis {i} has {}",
                    points[i]
                )));
            }
        }
        Ok(GridSpec {
            lower,
            upper,
            points,
        })
    }

    /// The square `[-half_width, half_width]^2` with `n` points per axis.
    pub fn centered_square(half_width: f64, n: usize) -> Result<Self> {
        Self::new(vec![-half_width; 2], vec![half_width; 2], vec![n; 2])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.points[axis] - 1) as f64
    }

    /// Smallest spacing over all axes.
    pub fn min_spacing(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        let n = self.points[axis] - 1;
        if i == n {
            return self.upper[axis];
        }
        self.lower[axis] + (self.upper[axis] - self.lower[axis]) * (i as f64) / (n as f64)
    }

    /// Per-axis indices of a flat index.
    pub fn unravel(&self, mut index: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for (axis, &n) in self.points.iter().enumerate() {
            idx[axis] = index % n;
            index /= n;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for axis in (0..self.dim()).rev() {
            flat = flat * self.points[axis] + idx[axis];
        }
        flat
    }

    /// Coordinates of a flat index.
    pub fn point(&self, index: usize) -> Vec<f64> {
        let idx = self.unravel(index);
        (0..self.dim()).map(|a| self.coordinate(a, idx[a])).collect()
    }

    pub(crate) fn packed_point(&self, index: usize) -> [f64; 3] {
        let idx = self.unravel(index);
        let mut x = [0.0; 3];
        for (a, xa) in x.iter_mut().enumerate().take(self.dim()) {
            *xa = self.coordinate(a, idx[a]);
        }
        x
    }

    /// True when the index lies on the outer ring (shell in 3D).
    pub fn on_boundary(&self, index: usize) -> bool {
        let idx = self.unravel(index);
        (0..self.dim()).any(|a| idx[a] == 0 || idx[a] + 1 == self.points[a])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }
}

/// Potential sampled on a grid: value, gradient norm and smallest Hessian
/// eigenvalue (restricted to the span of the wavevectors) per node.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    pub spec: GridSpec,
    pub psi: Vec<f64>,
    pub grad_norm: Vec<f64>,
    pub min_eig: Vec<f64>,
}

impl FieldGrid {
    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn psi_range(&self) -> (f64, f64) {
        self.psi
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Curvature basis shared by grid sweeps, detection and refinement.
pub fn curvature_basis(cfg: &WaveConfig) -> RangeBasis {
    RangeBasis::from_columns(cfg.dim(), cfg.packed_wavevectors(), cfg.wavenumber())
}

/// Evaluates the potential over every grid node. Each node is computed
/// independently, so values do not depend on how rayon partitions the work.
pub fn evaluate_arp_grid(cfg: &WaveConfig, co: &ArpCoefficients, spec: &GridSpec) -> Result<FieldGrid> {
    if cfg.dim() != co.dim() || cfg.dim() != spec.dim() {
        return Err(Error::Config(format!(
            "dimension mismatch: waves {}, coefficients {}, grid {}",
            cfg.dim(),
            co.dim(),
            spec.dim()
        )));
    }
    let basis = curvature_basis(cfg);
    let n = spec.len();
    let mut psi = vec![0.0; n];
    let mut grad_norm = vec![0.0; n];
    let mut min_eig = vec![0.0; n];
    const CHUNK: usize = 4096;
    psi.par_chunks_mut(CHUNK)
        .zip(grad_norm.par_chunks_mut(CHUNK))
        .zip(min_eig.par_chunks_mut(CHUNK))
        .enumerate()
        .for_each(|(chunk, ((ps, gs), es))| {
            let start = chunk * CHUNK;
            for i in 0..ps.len() {
                let x = spec.packed_point(start + i);
                let der = derivatives_from_jet(&field_jet(cfg, &x, 3), co);
                ps[i] = der.value;
                gs[i] = der.gradient_norm();
                es[i] = basis.min_eigenvalue(&der.hessian);
            }
        });
    Ok(FieldGrid {
        spec: spec.clone(),
        psi,
        grad_norm,
        min_eig,
    })
}
