//! Complex pressure of a superposition of plane waves
//!
//! `p(x) = sum_j alpha_j exp(i k_j.x) + beta_j exp(-i k_j.x)`
//!
//! together with term-wise derivatives and the lifted field on the N-torus,
//! `p_N(y) = sum_j alpha_j exp(i y_j) + beta_j exp(-i y_j)`, which satisfies
//! `p(x) = p_N(K^T x)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub(crate) const MAX_DIM: usize = 3;

/// Relative tolerance on `| |k_j| - k |`.
pub const WAVENUMBER_TOLERANCE: f64 = 1e-12;

/// Wavevectors and drive amplitudes of a plane-wave superposition.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveConfig {
    dim: usize,
    wavenumber: f64,
    wavevectors: Vec<[f64; 3]>,
    alpha: Vec<Complex64>,
    beta: Vec<Complex64>,
}

impl WaveConfig {
    /// Builds a configuration from explicit wavevectors, each of which must
    /// have magnitude `wavenumber`.
    pub fn new(
        wavenumber: f64,
        wavevectors: &[Vec<f64>],
        alpha: Vec<Complex64>,
        beta: Vec<Complex64>,
    ) -> Result<Self> {
        if !(wavenumber.is_finite() && wavenumber > 0.0) {
            return Err(Error::Config(format!(
                "wavenumber must be positive and finite, got {wavenumber}"
            )));
        }
        if wavevectors.is_empty() {
            return Err(Error::Config("at least one wavevector is required".into()));
        }
        let dim = wavevectors[0].len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut packed = Vec::with_capacity(wavevectors.len());
        for (j, kv) in wavevectors.iter().enumerate() {
            if kv.len() != dim {
                return Err(Error::Config(format!(
                    "wavevectors[{j}] has {} components, expected {dim}",
                    kv.len()
                )));
            }
            if kv.iter().any(|c| !c.is_finite()) {
                return Err(Error::Config(format!("wavevectors[{j}] is not finite")));
            }
            let norm = kv.iter().map(|c| c * c).sum::<f64>().sqrt();
            if (norm - wavenumber).abs() > WAVENUMBER_TOLERANCE * wavenumber {
                return Err(Error::Config(format!(
                    "wavevectors[{j}] has magnitude {norm}, expected wavenumber {wavenumber}"
                )));
            }
            let mut v = [0.0; 3];
            v[..dim].copy_from_slice(kv);
            packed.push(v);
        }
        let cfg = WaveConfig {
            dim,
            wavenumber,
            wavevectors: packed,
            alpha: Vec::new(),
            beta: Vec::new(),
        };
        cfg.with_amplitudes(alpha, beta)
    }

    /// Wavevectors `k * d_j / |d_j|` from arbitrary nonzero directions.
    pub fn from_directions(
        wavenumber: f64,
        directions: &[Vec<f64>],
        alpha: Vec<Complex64>,
        beta: Vec<Complex64>,
    ) -> Result<Self> {
        let mut scaled = Vec::with_capacity(directions.len());
        for (j, d) in directions.iter().enumerate() {
            let norm = d.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::Config(format!("directions[{j}] is zero or not finite")));
            }
            scaled.push(d.iter().map(|c| c / norm * wavenumber).collect::<Vec<_>>());
        }
        Self::new(wavenumber, &scaled, alpha, beta)
    }

    /// Same wavevectors with new amplitudes.
    pub fn with_amplitudes(&self, alpha: Vec<Complex64>, beta: Vec<Complex64>) -> Result<Self> {
        let n = self.wavevectors.len();
        if alpha.len() != n || beta.len() != n {
            return Err(Error::Config(format!(
                "expected {n} alpha and {n} beta amplitudes, got {} and {}",
                alpha.len(),
                beta.len()
            )));
        }
        for j in 0..n {
            if !(alpha[j].is_finite() && beta[j].is_finite()) {
                return Err(Error::Config(format!("amplitude pair {j} is not finite")));
            }
            if alpha[j] == Complex64::new(0.0, 0.0) && beta[j] == Complex64::new(0.0, 0.0) {
                return Err(Error::Config(format!(
                    "amplitude pair {j} is zero; every wave pair needs a nonzero amplitude"
                )));
            }
        }
        Ok(WaveConfig {
            alpha,
            beta,
            ..self.clone()
        })
    }

    /// Amplitudes from a stacked drive vector `u = [alpha_1..alpha_N, beta_1..beta_N]`.
    pub fn with_drive_vector(&self, u: &[Complex64]) -> Result<Self> {
        let n = self.num_waves();
        if u.len() != 2 * n {
            return Err(Error::Config(format!(
                "drive vector has {} entries, expected {}",
                u.len(),
                2 * n
            )));
        }
        self.with_amplitudes(u[..n].to_vec(), u[n..].to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_waves(&self) -> usize {
        self.wavevectors.len()
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavenumber
    }

    pub fn wavevector(&self, j: usize) -> &[f64] {
        &self.wavevectors[j][..self.dim]
    }

    pub(crate) fn packed_wavevectors(&self) -> &[[f64; 3]] {
        &self.wavevectors
    }

    pub fn alpha(&self) -> &[Complex64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[Complex64] {
        &self.beta
    }

    /// `sum_j |alpha_j| + |beta_j|`, an upper bound on `|p|`.
    pub fn amplitude_norm(&self) -> f64 {
        self.alpha
            .iter()
            .chain(&self.beta)
            .map(|c| c.norm())
            .sum()
    }

    /// The `d x N` matrix `K = [k_1, ..., k_N]`.
    pub fn wavevector_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.num_waves(), |i, j| self.wavevectors[j][i])
    }

    /// Lifted coordinates `y = K^T x`.
    pub fn lift(&self, x: &[f64]) -> Result<Vec<f64>> {
        let xp = self.pack_point(x)?;
        Ok(self.wavevectors.iter().map(|kv| dot(kv, &xp)).collect())
    }

    pub(crate) fn pack_point(&self, x: &[f64]) -> Result<[f64; 3]> {
        if x.len() != self.dim {
            return Err(Error::Config(format!(
                "point has {} coordinates but the wave configuration is {}-dimensional",
                x.len(),
                self.dim
            )));
        }
        let mut p = [0.0; 3];
        p[..self.dim].copy_from_slice(x);
        Ok(p)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Pressure and its gradient at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub p: Complex64,
    pub grad_p: [Complex64; 3],
}

/// Pressure with gradient and Hessian. Entries beyond `dim` are zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldDerivatives {
    pub dim: usize,
    pub value: Complex64,
    pub gradient: [Complex64; 3],
    pub hessian: [[Complex64; 3]; 3],
}

impl FieldDerivatives {
    pub fn sample(&self) -> FieldSample {
        FieldSample {
            p: self.value,
            grad_p: self.gradient,
        }
    }

    /// `trace(hess p) + k^2 p`, zero for an exact Helmholtz solution.
    pub fn helmholtz_residual(&self, wavenumber: f64) -> Complex64 {
        let trace: Complex64 = (0..self.dim).map(|a| self.hessian[a][a]).sum();
        trace + self.value * (wavenumber * wavenumber)
    }
}

/// Pressure with derivatives up to third order, shared by the potential
/// evaluators.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FieldJet {
    pub p: Complex64,
    pub grad: [Complex64; 3],
    pub hess: [[Complex64; 3]; 3],
    pub third: [[[Complex64; 3]; 3]; 3],
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Term-wise derivatives of the superposition. With `A = alpha e^{i phi}` and
/// `B = beta e^{-i phi}` each wave contributes `A + B`, `i k (A - B)`,
/// `-k k^T (A + B)` and `-i k k k (A - B)`.
pub(crate) fn field_jet(cfg: &WaveConfig, x: &[f64; 3], order: usize) -> FieldJet {
    let d = cfg.dim;
    let mut jet = FieldJet {
        p: ZERO,
        grad: [ZERO; 3],
        hess: [[ZERO; 3]; 3],
        third: [[[ZERO; 3]; 3]; 3],
    };
    for ((kv, &al), &be) in cfg.wavevectors.iter().zip(&cfg.alpha).zip(&cfg.beta) {
        let (s, c) = dot(kv, x).sin_cos();
        let e = Complex64::new(c, s);
        let fwd = al * e;
        let bwd = be * e.conj();
        let sum = fwd + bwd;
        jet.p += sum;
        if order == 0 {
            continue;
        }
        let diff = fwd - bwd;
        // i * diff
        let idiff = Complex64::new(-diff.im, diff.re);
        for a in 0..d {
            jet.grad[a] += idiff * kv[a];
        }
        if order == 1 {
            continue;
        }
        for a in 0..d {
            for b in a..d {
                jet.hess[a][b] -= sum * (kv[a] * kv[b]);
            }
        }
        if order == 2 {
            continue;
        }
        for a in 0..d {
            for b in a..d {
                let kab = kv[a] * kv[b];
                for cc in b..d {
                    jet.third[a][b][cc] -= idiff * (kab * kv[cc]);
                }
            }
        }
    }
    // fill the symmetric halves
    for a in 0..d {
        for b in 0..a {
            jet.hess[a][b] = jet.hess[b][a];
        }
    }
    if order >= 3 {
        for a in 0..d {
            for b in 0..d {
                for cc in 0..d {
                    let mut idx = [a, b, cc];
                    idx.sort_unstable();
                    jet.third[a][b][cc] = jet.third[idx[0]][idx[1]][idx[2]];
                }
            }
        }
    }
    jet
}

/// `p(x)` for a single point.
pub fn evaluate_field(cfg: &WaveConfig, x: &[f64]) -> Result<Complex64> {
    let xp = cfg.pack_point(x)?;
    Ok(field_jet(cfg, &xp, 0).p)
}

/// `(p, grad p, hess p)` in one pass over the waves.
pub fn evaluate_field_derivatives(cfg: &WaveConfig, x: &[f64]) -> Result<FieldDerivatives> {
    let xp = cfg.pack_point(x)?;
    let jet = field_jet(cfg, &xp, 2);
    Ok(FieldDerivatives {
        dim: cfg.dim,
        value: jet.p,
        gradient: jet.grad,
        hessian: jet.hess,
    })
}

/// `p` at a flat list of points (`dim` coordinates each), in parallel.
pub fn evaluate_field_batch(cfg: &WaveConfig, points: &[f64]) -> Result<Vec<Complex64>> {
    if !points.len().is_multiple_of(cfg.dim) {
        return Err(Error::Config(format!(
            "flat point list of length {} is not a multiple of dimension {}",
            points.len(),
            cfg.dim
        )));
    }
    Ok(points
        .par_chunks(cfg.dim)
        .map(|x| {
            let mut xp = [0.0; 3];
            xp[..cfg.dim].copy_from_slice(x);
            field_jet(cfg, &xp, 0).p
        })
        .collect())
}

/// The lifted field `p_N(y)` on the N-torus, `y` of length N.
pub fn evaluate_periodic_field(cfg: &WaveConfig, y: &[f64]) -> Result<Complex64> {
    if y.len() != cfg.num_waves() {
        return Err(Error::Config(format!(
            "lifted point has {} coordinates, expected {}",
            y.len(),
            cfg.num_waves()
        )));
    }
    Ok(periodic_jet(cfg, y).0)
}

/// `p_N(y)` and its gradient in `y`.
pub(crate) fn periodic_jet(cfg: &WaveConfig, y: &[f64]) -> (Complex64, Vec<Complex64>) {
    let mut p = ZERO;
    let mut grad = Vec::with_capacity(y.len());
    for ((&yj, &al), &be) in y.iter().zip(&cfg.alpha).zip(&cfg.beta) {
        let (s, c) = yj.sin_cos();
        let e = Complex64::new(c, s);
        let fwd = al * e;
        let bwd = be * e.conj();
        p += fwd + bwd;
        let diff = fwd - bwd;
        grad.push(Complex64::new(-diff.im, diff.re));
    }
    (p, grad)
}
