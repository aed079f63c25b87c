//! Shared helpers for the integration tests: independent reference
//! evaluations and random configuration generators.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use quasiwave::{ArpCoefficients, ArpMode, WaveConfig};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn ones(n: usize) -> Vec<Complex64> {
    vec![c(1.0, 0.0); n]
}

/// Sum of amplitude magnitudes, the natural size of `p`.
pub fn amplitude_sum(cfg: &WaveConfig) -> f64 {
    cfg.alpha().iter().chain(cfg.beta()).map(|z| z.norm()).sum()
}

/// Spectral norm of the gradient coefficient matrix.
pub fn coefficient_norm(co: &ArpCoefficients) -> f64 {
    let d = co.dim();
    let m = DMatrix::from_fn(d, d, |i, j| co.b(i, j));
    m.singular_values().max()
}

/// `(|a| + |B| k^2) S^2`: bounds `|psi|` for amplitude sum `S`.
pub fn psi_scale(cfg: &WaveConfig, co: &ArpCoefficients) -> f64 {
    let k = cfg.wavenumber();
    let s = amplitude_sum(cfg);
    (co.a().abs() + coefficient_norm(co) * k * k) * s * s
}

/// Plane-wave sum written out directly.
pub fn p_direct(cfg: &WaveConfig, x: &[f64]) -> Complex64 {
    let mut p = c(0.0, 0.0);
    for j in 0..cfg.num_waves() {
        let phase: f64 = cfg.wavevector(j).iter().zip(x).map(|(k, xi)| k * xi).sum();
        p += cfg.alpha()[j] * Complex64::from_polar(1.0, phase)
            + cfg.beta()[j] * Complex64::from_polar(1.0, -phase);
    }
    p
}

/// Periodic field `p_N(y) = sum alpha_j e^{i y_j} + beta_j e^{-i y_j}`.
pub fn p_periodic(cfg: &WaveConfig, y: &[f64]) -> Complex64 {
    (0..cfg.num_waves())
        .map(|j| {
            cfg.alpha()[j] * Complex64::from_polar(1.0, y[j])
                + cfg.beta()[j] * Complex64::from_polar(1.0, -y[j])
        })
        .sum()
}

/// Periodic potential with `B_N = K^T B K`, built from scratch.
pub fn psi_periodic(cfg: &WaveConfig, co: &ArpCoefficients, y: &[f64]) -> f64 {
    let n = cfg.num_waves();
    let d = cfg.dim();
    let bn = DMatrix::from_fn(n, n, |i, j| {
        let (ki, kj) = (cfg.wavevector(i), cfg.wavevector(j));
        let mut s = 0.0;
        for a in 0..d {
            for b in 0..d {
                s += ki[a] * co.b(a, b) * kj[b];
            }
        }
        s
    });
    let grad: Vec<Complex64> = (0..n)
        .map(|j| {
            c(0.0, 1.0)
                * (cfg.alpha()[j] * Complex64::from_polar(1.0, y[j])
                    - cfg.beta()[j] * Complex64::from_polar(1.0, -y[j]))
        })
        .collect();
    let p = p_periodic(cfg, y);
    let mut quad = c(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            quad += grad[i].conj() * bn[(i, j)] * grad[j];
        }
    }
    co.a() * p.norm_sqr() - quad.re
}

pub fn lift(cfg: &WaveConfig, x: &[f64]) -> Vec<f64> {
    (0..cfg.num_waves())
        .map(|j| cfg.wavevector(j).iter().zip(x).map(|(k, xi)| k * xi).sum())
        .collect()
}

pub fn random_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

pub fn random_amplitude<R: Rng>(rng: &mut R) -> Complex64 {
    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Random wavevectors and amplitudes in `dim` dimensions.
pub fn random_wave<R: Rng>(rng: &mut R, dim: usize, waves: usize) -> WaveConfig {
    let k = rng.random_range(0.5..5.0e3);
    let dirs: Vec<Vec<f64>> = (0..waves).map(|_| random_direction(rng, dim)).collect();
    let alpha = (0..waves).map(|_| random_amplitude(rng)).collect();
    let beta = (0..waves).map(|_| random_amplitude(rng)).collect();
    WaveConfig::from_directions(k, &dirs, alpha, beta).expect("random configuration is valid")
}

/// Random `a` and symmetric `B` with entries of comparable weight at
/// wavenumber `k`.
pub fn random_coefficients<R: Rng>(rng: &mut R, dim: usize, k: f64) -> ArpCoefficients {
    let a = rng.random_range(-1.0..1.0);
    let mut b = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let v = rng.random_range(-1.0..1.0) / (k * k);
            b[i][j] = v;
            b[j][i] = v;
        }
    }
    ArpCoefficients::with_matrix(a, &b, ArpMode::Acoustic).expect("symmetric matrix")
}

pub fn random_point<R: Rng>(rng: &mut R, dim: usize, half_width: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-half_width..half_width)).collect()
}
