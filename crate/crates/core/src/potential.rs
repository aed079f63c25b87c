//! Acoustic radiation potential
//!
//! `psi(x) = a |p(x)|^2 - grad p(x)^* B grad p(x)`
//!
//! with `a = f1 kappa0 / 4` and `B = 3 f2 / (8 rho0 omega^2) I` for a small
//! sphere in an inviscid fluid, or `B = 0` for the optical (dielectric) case.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{field_jet, periodic_jet, FieldJet, WaveConfig, MAX_DIM};
use crate::linalg::Mat3;

pub use crate::linalg::RangeBasis;

/// Fluid and particle properties.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams {
    /// Fluid density, kg/m^3.
    pub rho0: f64,
    /// Fluid sound speed, m/s.
    pub c0: f64,
    /// Particle density, kg/m^3.
    pub rho_p: f64,
    /// Particle sound speed, m/s.
    pub c_p: f64,
    /// Angular frequency, rad/s.
    pub omega: f64,
}

impl MaterialParams {
    /// Carbon particles in water driven at 1 MHz.
    pub fn water_carbon() -> Self {
        MaterialParams {
            rho0: 1000.0,
            c0: 1500.0,
            rho_p: 2100.0,
            c_p: 5300.0,
            omega: 2.0 * std::f64::consts::PI * 1.0e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rho0", self.rho0),
            ("c0", self.c0),
            ("rho_p", self.rho_p),
            ("c_p", self.c_p),
            ("omega", self.omega),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "material parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Fluid compressibility `1 / (rho0 c0^2)`.
    pub fn kappa0(&self) -> f64 {
        1.0 / (self.rho0 * self.c0 * self.c0)
    }

    /// Particle compressibility `1 / (rho_p c_p^2)`.
    pub fn kappa_p(&self) -> f64 {
        1.0 / (self.rho_p * self.c_p * self.c_p)
    }

    /// Monopole coefficient `1 - kappa_p / kappa0`.
    pub fn f1(&self) -> f64 {
        1.0 - self.kappa_p() / self.kappa0()
    }

    /// Dipole coefficient `2 (rho_p - rho0) / (2 rho_p + rho0)`.
    pub fn f2(&self) -> f64 {
        2.0 * (self.rho_p - self.rho0) / (2.0 * self.rho_p + self.rho0)
    }

    /// Wavenumber in the fluid, `omega / c0`.
    pub fn wavenumber(&self) -> f64 {
        self.omega / self.c0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArpMode {
    Acoustic,
    /// Dielectric particles in a light field: gradient term dropped.
    Optical,
}

/// Scalar `a` and symmetric matrix `B` of the potential.
#[derive(Clone, Debug, PartialEq)]
pub struct ArpCoefficients {
    dim: usize,
    a: f64,
    b: Mat3,
    mode: ArpMode,
}

impl ArpCoefficients {
    /// Isotropic coefficients `a`, `B = b I_d`. `b` is forced to zero in
    /// optical mode.
    pub fn isotropic(dim: usize, a: f64, b: f64, mode: ArpMode) -> Result<Self> {
        check_dim(dim)?;
        let b = if mode == ArpMode::Optical { 0.0 } else { b };
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate().take(dim) {
            row[i] = b;
        }
        Self::build(dim, a, m, mode)
    }

    /// Coefficients with a general symmetric `B` given row by row.
    pub fn with_matrix(a: f64, b: &[Vec<f64>], mode: ArpMode) -> Result<Self> {
        let dim = b.len();
        check_dim(dim)?;
        let mut m = [[0.0; 3]; 3];
        for (i, row) in b.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Config(format!(
                    "coefficient matrix row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            m[i][..dim].copy_from_slice(row);
        }
        if mode == ArpMode::Optical && m.iter().flatten().any(|&v| v != 0.0) {
            return Err(Error::Config(
                "optical mode requires a zero gradient coefficient matrix".into(),
            ));
        }
        Self::build(dim, a, m, mode)
    }

    fn build(dim: usize, a: f64, b: Mat3, mode: ArpMode) -> Result<Self> {
        if !a.is_finite() || b.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("coefficients must be finite".into()));
        }
        for i in 0..dim {
            for j in 0..i {
                if b[i][j] != b[j][i] {
                    return Err(Error::Config(format!(
                        "coefficient matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(ArpCoefficients { dim, a, b, mode })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.b[i][j]
    }

    pub fn mode(&self) -> ArpMode {
        self.mode
    }

    /// Largest absolute row sum of `B`, a bound on its spectral norm.
    pub fn b_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.b[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// The lifted matrix `B_N = K^T B K` acting on gradients in `y`.
    pub fn lifted_matrix(&self, cfg: &WaveConfig) -> Result<DMatrix<f64>> {
        check_match(cfg, self)?;
        let k = cfg.wavevector_matrix();
        let b = DMatrix::from_fn(self.dim, self.dim, |i, j| self.b[i][j]);
        Ok(k.transpose() * b * k)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

fn check_match(cfg: &WaveConfig, co: &ArpCoefficients) -> Result<()> {
    if cfg.dim() != co.dim {
        return Err(Error::Config(format!(
            "coefficients are {}-dimensional but the wave configuration is {}-dimensional",
            co.dim,
            cfg.dim()
        )));
    }
    Ok(())
}

/// Coefficients from material parameters.
pub fn arp_coefficients(m: &MaterialParams, dim: usize, mode: ArpMode) -> Result<ArpCoefficients> {
    m.validate()?;
    let a = m.f1() * m.kappa0() / 4.0;
    let b = 3.0 * m.f2() / (8.0 * m.rho0 * m.omega * m.omega);
    ArpCoefficients::isotropic(dim, a, b, mode)
}

/// Magnitude bound `(|a| + ||B|| k^2) (sum |alpha| + |beta|)^2` for `|psi|`,
/// used to turn absolute errors into relative ones.
pub fn potential_scale(cfg: &WaveConfig, co: &ArpCoefficients) -> f64 {
    let s = cfg.amplitude_norm();
    let k = cfg.wavenumber();
    (co.a.abs() + co.b_norm() * k * k) * s * s
}

/// Potential with gradient and Hessian. Entries beyond `dim` are zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArpDerivatives {
    pub dim: usize,
    pub value: f64,
    pub gradient: [f64; 3],
    pub hessian: [[f64; 3]; 3],
}

impl ArpDerivatives {
    pub fn gradient_norm(&self) -> f64 {
        self.gradient.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Force `F = -grad psi` on a particle.
    pub fn force(&self) -> [f64; 3] {
        self.gradient.map(|g| -g)
    }
}

/// `g = B v` for a complex vector `v`.
#[inline]
fn apply_b(b: &Mat3, v: &[Complex64; 3], d: usize) -> [Complex64; 3] {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for i in 0..d {
        for j in 0..d {
            out[i] += v[j] * b[i][j];
        }
    }
    out
}

/// `Re(conj(u) . v)`.
#[inline]
fn re_dot(u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| a.re * b.re + a.im * b.im)
        .sum()
}

fn value_from_jet(jet: &FieldJet, co: &ArpCoefficients) -> f64 {
    let d = co.dim;
    let gradient_term = if co.mode == ArpMode::Optical {
        0.0
    } else {
        let g = apply_b(&co.b, &jet.grad, d);
        re_dot(&jet.grad[..d], &g[..d])
    };
    co.a * jet.p.norm_sqr() - gradient_term
}

pub(crate) fn derivatives_from_jet(jet: &FieldJet, co: &ArpCoefficients) -> ArpDerivatives {
    let d = co.dim;
    let a = co.a;
    let optical = co.mode == ArpMode::Optical;
    let g = apply_b(&co.b, &jet.grad, d);

    let value = co.a * jet.p.norm_sqr()
        - if optical {
            0.0
        } else {
            re_dot(&jet.grad[..d], &g[..d])
        };

    let mut gradient = [0.0; 3];
    for c in 0..d {
        let mono = 2.0 * a * re_dot(&[jet.p], &[jet.grad[c]]);
        let dip = if optical {
            0.0
        } else {
            let col: [Complex64; 3] = [jet.hess[0][c], jet.hess[1][c], jet.hess[2][c]];
            2.0 * re_dot(&col[..d], &g[..d])
        };
        gradient[c] = mono - dip;
    }

    // B * hess(p), column d gives sum_b B_ab p_bd
    let bh: [[Complex64; 3]; 3] = if optical {
        [[Complex64::new(0.0, 0.0); 3]; 3]
    } else {
        let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (ai, row) in m.iter_mut().enumerate().take(d) {
            for (dd, entry) in row.iter_mut().enumerate().take(d) {
                for bb in 0..d {
                    *entry += jet.hess[bb][dd] * co.b[ai][bb];
                }
            }
        }
        m
    };

    let mut hessian = [[0.0; 3]; 3];
    for c in 0..d {
        for dd in c..d {
            let mono = 2.0
                * a
                * (re_dot(&[jet.grad[dd]], &[jet.grad[c]]) + re_dot(&[jet.p], &[jet.hess[c][dd]]));
            let dip = if optical {
                0.0
            } else {
                let mut s = 0.0;
                for ai in 0..d {
                    s += re_dot(&[jet.third[ai][c][dd]], &[g[ai]]);
                    s += re_dot(&[jet.hess[ai][c]], &[bh[ai][dd]]);
                }
                2.0 * s
            };
            hessian[c][dd] = mono - dip;
            hessian[dd][c] = hessian[c][dd];
        }
    }

    ArpDerivatives {
        dim: d,
        value,
        gradient,
        hessian,
    }
}

/// `psi(x)`.
pub fn evaluate_arp(cfg: &WaveConfig, co: &ArpCoefficients, x: &[f64]) -> Result<f64> {
    check_match(cfg, co)?;
    let xp = cfg.pack_point(x)?;
    Ok(value_from_jet(&field_jet(cfg, &xp, 1), co))
}

/// `(psi, grad psi, hess psi)`, all analytic.
pub fn evaluate_arp_derivatives(
    cfg: &WaveConfig,
    co: &ArpCoefficients,
    x: &[f64],
) -> Result<ArpDerivatives> {
    check_match(cfg, co)?;
    let xp = cfg.pack_point(x)?;
    Ok(derivatives_from_jet(&field_jet(cfg, &xp, 3), co))
}

/// `psi` at a flat list of points, in parallel.
pub fn evaluate_arp_batch(cfg: &WaveConfig, co: &ArpCoefficients, points: &[f64]) -> Result<Vec<f64>> {
    check_match(cfg, co)?;
    let d = cfg.dim();
    if points.len() % d != 0 {
        return Err(Error::Config(format!(
            "flat point list of length {} is not a multiple of dimension {d}",
            points.len()
        )));
    }
    Ok(points
        .par_chunks(d)
        .map(|x| {
            let mut xp = [0.0; 3];
            xp[..d].copy_from_slice(x);
            value_from_jet(&field_jet(cfg, &xp, 1), co)
        })
        .collect())
}

/// Lifted potential `psi_N(y) = a |p_N(y)|^2 - grad p_N^* B_N grad p_N` on the
/// N-torus, with `B_N = K^T B K` supplied by the caller (see
/// [`ArpCoefficients::lifted_matrix`]).
pub fn evaluate_periodic_arp(
    cfg: &WaveConfig,
    a: f64,
    lifted_b: &DMatrix<f64>,
    y: &[f64],
) -> Result<f64> {
    let n = cfg.num_waves();
    if y.len() != n || lifted_b.nrows() != n || lifted_b.ncols() != n {
        return Err(Error::Config(format!(
            "lifted evaluation needs {n} coordinates and an {n}x{n} matrix"
        )));
    }
    let (p, grad) = periodic_jet(cfg, y);
    let mut quad = 0.0;
    for i in 0..n {
        let mut bg = Complex64::new(0.0, 0.0);
        for j in 0..n {
            bg += grad[j] * lifted_b[(i, j)];
        }
        quad += re_dot(&[grad[i]], &[bg]);
    }
    Ok(a * p.norm_sqr() - quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn one_pair(k: f64) -> WaveConfig {
        let one = Complex64::new(1.0, 0.0);
        WaveConfig::new(k, &[vec![k, 0.0]], vec![one], vec![one]).unwrap()
    }

    #[test]
    fn water_carbon_constants() {
        let m = MaterialParams::water_carbon();
        // kappa = 1 / (rho c^2)
        let kappa0 = 1.0 / (1000.0 * 1500.0 * 1500.0);
        let kappa_p = 1.0 / (2100.0 * 5300.0 * 5300.0);
        assert!((m.kappa0() - kappa0).abs() <= 1e-15 * kappa0);
        assert!((m.kappa0() - 4.44444e-10).abs() < 1e-15);
        assert!((m.kappa_p() - kappa_p).abs() <= 1e-15 * kappa_p);
        // the tabulated value is rounded from slightly different inputs
        assert!((m.kappa_p() - 1.69526e-11).abs() < 1e-4 * kappa_p);
        assert!((m.f1() - 0.961857).abs() < 1e-6);
        assert!((m.f2() - 2.0 * 1100.0 / 5200.0).abs() < 1e-15);
        assert!((m.f2() / 2.0 - 0.211538).abs() < 1e-6);
    }

    #[test]
    fn neutral_particle_has_zero_potential() {
        let m = MaterialParams {
            rho0: 1000.0,
            c0: 1500.0,
            rho_p: 1000.0,
            c_p: 1500.0,
            omega: 1.0e6,
        };
        assert_eq!(m.f1(), 0.0);
        assert_eq!(m.f2(), 0.0);
        let co = arp_coefficients(&m, 2, ArpMode::Acoustic).unwrap();
        let cfg = one_pair(m.wavenumber());
        assert_eq!(evaluate_arp(&cfg, &co, &[1e-4, 3e-4]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_nonpositive_material() {
        let mut m = MaterialParams::water_carbon();
        m.c_p = 0.0;
        assert!(matches!(
            arp_coefficients(&m, 2, ArpMode::Acoustic),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn one_pair_closed_forms() {
        let k = 2.0;
        let cfg = one_pair(k);
        let co = ArpCoefficients::isotropic(2, 0.7, 0.3, ArpMode::Acoustic).unwrap();
        assert!((evaluate_arp(&cfg, &co, &[0.0, 0.0]).unwrap() - 4.0 * 0.7).abs() < 1e-15);
        let node = [PI / (2.0 * k), 0.0];
        let expect = -4.0 * 0.3 * k * k;
        assert!((evaluate_arp(&cfg, &co, &node).unwrap() - expect).abs() < 1e-14);
        let der = evaluate_arp_derivatives(&cfg, &co, &[0.0, 0.0]).unwrap();
        assert_eq!(der.gradient, [0.0; 3]);
    }

    #[test]
    fn optical_mode_zeroes_gradient_term() {
        let co = ArpCoefficients::isotropic(2, 1.5, 0.3, ArpMode::Optical).unwrap();
        assert_eq!(co.b(0, 0), 0.0);
        assert!(ArpCoefficients::with_matrix(1.0, &[vec![1.0, 0.0], vec![0.0, 1.0]], ArpMode::Optical).is_err());
        let cfg = one_pair(2.0);
        let x = [0.31, -0.2];
        let p = crate::field::evaluate_field(&cfg, &x).unwrap();
        assert_eq!(evaluate_arp(&cfg, &co, &x).unwrap(), 1.5 * p.norm_sqr());
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let cfg = one_pair(1.0);
        let co = ArpCoefficients::isotropic(3, 1.0, 1.0, ArpMode::Acoustic).unwrap();
        assert!(matches!(evaluate_arp(&cfg, &co, &[0.0, 0.0]), Err(Error::Config(_))));
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let err = ArpCoefficients::with_matrix(1.0, &[vec![1.0, 0.5], vec![0.4, 1.0]], ArpMode::Acoustic);
        assert!(err.is_err());
    }
}
