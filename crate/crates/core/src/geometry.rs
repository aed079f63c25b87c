//! Wavevector arrangements, periodic/quasiperiodic classification and
//! rotational-symmetry measurements.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{WaveConfig, WAVENUMBER_TOLERANCE};
use crate::potential::{evaluate_arp, ArpCoefficients};

/// Relative tolerance below which two columns count as equal or antipodal.
const DUPLICATE_TOLERANCE: f64 = 1e-9;
/// Basis subsets need `|det| > BASIS_DET_TOLERANCE * k^d`.
const BASIS_DET_TOLERANCE: f64 = 1e-6;
/// Absolute tolerance (relative to k) on the rational reconstruction of a column.
const RATIONAL_RESIDUAL_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_QMAX: u64 = 64;

/// Columns `k_1, ..., k_N` of the `d x N` matrix `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct WavevectorMatrix {
    dim: usize,
    wavenumber: f64,
    columns: Vec<Vec<f64>>,
}

impl WavevectorMatrix {
    pub fn new(wavenumber: f64, columns: Vec<Vec<f64>>) -> Result<Self> {
        if !(wavenumber.is_finite() && wavenumber > 0.0) {
            return Err(Error::Validation(format!("wavenumber must be positive, got {wavenumber}")));
        }
        let Some(first) = columns.first() else {
            return Err(Error::Validation("wavevector matrix has no columns".into()));
        };
        let dim = first.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        for (j, c) in columns.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::Validation(format!("column {j} has wrong length")));
            }
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || (norm - wavenumber).abs() > WAVENUMBER_TOLERANCE * wavenumber {
                return Err(Error::Validation(format!(
                    "column {j} has magnitude {norm}, expected {wavenumber}"
                )));
            }
        }
        let tol = DUPLICATE_TOLERANCE * wavenumber;
        for i in 0..columns.len() {
            for j in 0..i {
                let same = columns[i].iter().zip(&columns[j]).all(|(a, b)| (a - b).abs() <= tol);
                let opposite = columns[i].iter().zip(&columns[j]).all(|(a, b)| (a + b).abs() <= tol);
                if same || opposite {
                    return Err(Error::Validation(format!(
                        "columns {j} and {i} describe the same wave pair"
                    )));
                }
            }
        }
        Ok(WavevectorMatrix {
            dim,
            wavenumber,
            columns,
        })
    }

    pub fn from_config(cfg: &WaveConfig) -> Result<Self> {
        let cols = (0..cfg.num_waves()).map(|j| cfg.wavevector(j).to_vec()).collect();
        Self::new(cfg.wavenumber(), cols)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.columns.len(), |i, j| self.columns[j][i])
    }

    /// Wave configuration on these wavevectors with the given amplitudes.
    pub fn to_config(&self, alpha: Vec<Complex64>, beta: Vec<Complex64>) -> Result<WaveConfig> {
        WaveConfig::new(self.wavenumber, &self.columns, alpha, beta)
    }

    /// All amplitudes equal to one.
    pub fn to_uniform_config(&self) -> Result<WaveConfig> {
        let one = vec![Complex64::new(1.0, 0.0); self.columns.len()];
        self.to_config(one.clone(), one)
    }
}

/// `N` wavevectors at angles `j pi / N`, `j = 0..N-1`. With the backward
/// waves these give a regular 2N-gon of propagation directions.
pub fn polygon_wavevectors(pairs: usize, wavenumber: f64) -> Result<WavevectorMatrix> {
    if pairs == 0 {
        return Err(Error::Validation("polygon needs at least one wave pair".into()));
    }
    let cols = (0..pairs)
        .map(|j| {
            let theta = j as f64 * std::f64::consts::PI / pairs as f64;
            let (s, c) = theta.sin_cos();
            vec![wavenumber * c, wavenumber * s]
        })
        .collect();
    WavevectorMatrix::new(wavenumber, cols)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    pub num: i64,
    pub den: u64,
}

impl Rational {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Column `column` written as a rational combination of the basis columns.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalCombination {
    pub column: usize,
    pub coefficients: Vec<Rational>,
}

/// Evidence that the wavevectors generate a discrete lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicWitness {
    /// Indices of the basis columns.
    pub basis: Vec<usize>,
    pub combinations: Vec<RationalCombination>,
    /// Lattice translations `T` with `k_j . T` in `2 pi Z` for every `j`; the
    /// field and potential are invariant under each.
    pub translations: Vec<Vec<f64>>,
}

impl fmt::Display for PeriodicWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.basis.iter().map(|b| format!("k{}", b + 1)).collect();
        write!(f, "basis {{{}}}", names.join(", "))?;
        for comb in &self.combinations {
            let mut terms = Vec::new();
            for (c, name) in comb.coefficients.iter().zip(&names) {
                match (c.num, c.den) {
                    (0, _) => {}
                    (1, 1) => terms.push(name.clone()),
                    (-1, 1) => terms.push(format!("-{name}")),
                    _ => terms.push(format!("{c} {name}")),
                }
            }
            let rhs = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
            write!(f, "; k{} = {}", comb.column + 1, rhs.replace("+ -", "- "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Periodicity {
    Periodic(PeriodicWitness),
    /// No rational relation with denominators up to the search bound.
    Quasiperiodic,
}

impl Periodicity {
    pub fn is_periodic(&self) -> bool {
        matches!(self, Periodicity::Periodic(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Periodicity::Periodic(_) => "periodic",
            Periodicity::Quasiperiodic => "quasiperiodic",
        }
    }
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, r, &mut Vec::with_capacity(r), &mut out);
    out
}

fn rationalize(c: f64, qmax: u64) -> Option<Rational> {
    for q in 1..=qmax {
        let p = (c * q as f64).round();
        if (c - p / q as f64).abs() <= 0.1 * RATIONAL_RESIDUAL_TOLERANCE {
            return Some(Rational {
                num: p as i64,
                den: q,
            });
        }
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Decides whether the integer span of the columns of `K` is a discrete
/// lattice. The search tries every subset of `rank(K)` independent columns
/// as a basis and asks whether each remaining column is a rational
/// combination of it with denominators at most `qmax`. A negative answer
/// means "quasiperiodic up to denominator `qmax`".
pub fn classify_periodicity(k: &WavevectorMatrix, qmax: u64) -> Result<Periodicity> {
    if qmax == 0 {
        return Err(Error::Validation("qmax must be at least 1".into()));
    }
    let kmat = k.to_matrix();
    let scale = k.wavenumber;
    let sv = kmat.clone().svd(false, false).singular_values;
    let rank = sv.iter().filter(|&&s| s > BASIS_DET_TOLERANCE * scale).count();
    let n = k.num_columns();
    let det_floor = (BASIS_DET_TOLERANCE * scale.powi(rank as i32)).powi(2);

    for subset in combinations(n, rank) {
        let basis = DMatrix::from_fn(k.dim, rank, |i, j| kmat[(i, subset[j])]);
        let gram = basis.transpose() * &basis;
        if gram.determinant().abs() <= det_floor {
            continue;
        }
        let Some(gram_inv) = gram.clone().try_inverse() else {
            continue;
        };
        let mut combos = Vec::new();
        let mut ok = true;
        for m in (0..n).filter(|m| !subset.contains(m)) {
            let col = kmat.column(m).into_owned();
            let coeffs = &gram_inv * basis.transpose() * &col;
            let mut rats = Vec::with_capacity(rank);
            for c in coeffs.iter() {
                match rationalize(*c, qmax) {
                    Some(r) => rats.push(r),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                break;
            }
            let mut residual = col.clone();
            for (l, r) in rats.iter().enumerate() {
                residual -= basis.column(l) * r.value();
            }
            if residual.norm() > RATIONAL_RESIDUAL_TOLERANCE * scale {
                ok = false;
                break;
            }
            combos.push(RationalCombination {
                column: m,
                coefficients: rats,
            });
        }
        if !ok {
            continue;
        }

        let lcm = combos
            .iter()
            .flat_map(|c| c.coefficients.iter().map(|r| r.den))
            .fold(1u64, |acc, d| acc / gcd(acc, d) * d);
        // T_i = 2 pi L B (B^T B)^{-1} e_i, so that k_b . T_i = 2 pi L delta_bi
        let dual = &basis * &gram_inv;
        let two_pi_l = 2.0 * std::f64::consts::PI * lcm as f64;
        let translations = (0..rank)
            .map(|i| dual.column(i).iter().map(|v| v * two_pi_l).collect())
            .collect();
        return Ok(Periodicity::Periodic(PeriodicWitness {
            basis: subset,
            combinations: combos,
            translations,
        }));
    }
    Ok(Periodicity::Quasiperiodic)
}

/// Radical-inverse sequence value for `index` in `base`.
pub(crate) fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * f;
        index /= base;
        f *= inv;
    }
    out
}

/// `n` low-discrepancy points (Halton bases 2 and 3) in the disk of radius `r`.
pub fn disk_samples(n: usize, radius: f64) -> Vec<[f64; 2]> {
    (1..=n as u64)
        .map(|i| {
            let rad = radius * radical_inverse(i, 2).sqrt();
            let (s, c) = (2.0 * std::f64::consts::PI * radical_inverse(i, 3)).sin_cos();
            [rad * c, rad * s]
        })
        .collect()
}

/// Rotation of a 2D point by `2 pi / order` about the origin. Order 1 is
/// the exact identity.
pub fn rotate_by_order(x: [f64; 2], order: usize) -> [f64; 2] {
    if order == 1 {
        return x;
    }
    let (s, c) = (2.0 * std::f64::consts::PI / order as f64).sin_cos();
    [c * x[0] - s * x[1], s * x[0] + c * x[1]]
}

/// `max |psi(R x) - psi(x)| / max |psi(x)|` over `samples` quasi-random
/// points in the disk of radius `radius`, `R` the rotation by `2 pi / order`.
pub fn rotational_symmetry_defect(
    cfg: &WaveConfig,
    co: &ArpCoefficients,
    order: usize,
    radius: f64,
    samples: usize,
) -> Result<f64> {
    if cfg.dim() != 2 {
        return Err(Error::UnsupportedDimension(cfg.dim()));
    }
    if order == 0 {
        return Err(Error::Validation("rotation order must be at least 1".into()));
    }
    if samples < 8 {
        return Err(Error::Validation("at least 8 sample points are required".into()));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Validation(format!("sample radius must be positive, got {radius}")));
    }
    let mut max_diff: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    for x in disk_samples(samples, radius) {
        let v = evaluate_arp(cfg, co, &x)?;
        let w = evaluate_arp(cfg, co, &rotate_by_order(x, order))?;
        max_abs = max_abs.max(v.abs());
        max_diff = max_diff.max((w - v).abs());
    }
    if max_abs == 0.0 {
        return Ok(0.0);
    }
    Ok(max_diff / max_abs)
}
