use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::{Error, Result};

/// Planar projective map acting on homogeneous coordinates `(x, y, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography {
    h: Matrix3<f64>,
}

impl Homography {
    /// Validates invertibility and scales so that `H[2][2] = 1` when nonzero.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        let mut h = Matrix3::from_fn(|i, j| m[i][j]);
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("homography entries must be finite".into()));
        }
        let norm = h.norm();
        if h.determinant().abs() <= 1e-12 * norm.powi(3) {
            return Err(Error::Validation("homography is singular".into()));
        }
        if h[(2, 2)] != 0.0 {
            h /= h[(2, 2)];
        }
        Ok(Homography { h })
    }

    pub fn identity() -> Self {
        Homography {
            h: Matrix3::identity(),
        }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Homography {
            h: Matrix3::new(1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0),
        }
    }

    /// Isotropic scale `s` followed by a shift.
    pub fn scale_shift(s: f64, dx: f64, dy: f64) -> Self {
        Homography {
            h: Matrix3::new(s, 0.0, dx, 0.0, s, dy, 0.0, 0.0, 1.0),
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.h[(i, j)];
            }
        }
        out
    }

    /// Image of `(x, y)`; `None` when it lands on the line at infinity.
    pub fn apply(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let v = self.h * Vector3::new(p[0], p[1], 1.0);
        let size = self.h[(2, 0)].abs() * p[0].abs() + self.h[(2, 1)].abs() * p[1].abs() + self.h[(2, 2)].abs();
        if v[2].abs() <= 1e-12 * size.max(f64::MIN_POSITIVE) {
            return None;
        }
        Some([v[0] / v[2], v[1] / v[2]])
    }

    pub fn inverse(&self) -> Homography {
        let inv = self.h.try_inverse().expect("validated homography is invertible");
        let inv = if inv[(2, 2)] != 0.0 { inv / inv[(2, 2)] } else { inv };
        Homography { h: inv }
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &Homography) -> Homography {
        let m = self.h * first.h;
        let m = if m[(2, 2)] != 0.0 { m / m[(2, 2)] } else { m };
        Homography { h: m }
    }
}

/// One registration point pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correspondence {
    pub source: [f64; 2],
    pub target: [f64; 2],
}

fn span(pts: &[[f64; 2]]) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (hi[0] - lo[0]).hypot(hi[1] - lo[1])
}

/// Translate to the centroid and scale to mean distance `sqrt(2)`.
fn normalizing_transform(pts: &[[f64; 2]]) -> Matrix3<f64> {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let mean = pts.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).sum::<f64>() / n;
    let s = if mean > 0.0 { std::f64::consts::SQRT_2 / mean } else { 1.0 };
    Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0)
}

fn transform(t: &Matrix3<f64>, p: [f64; 2]) -> [f64; 2] {
    let v = t * Vector3::new(p[0], p[1], 1.0);
    [v[0] / v[2], v[1] / v[2]]
}

/// Normalized direct linear transform over all pairs, solved in the
/// least-squares sense by SVD. Exact for four pairs in general position.
pub fn fit_homography(pairs: &[Correspondence]) -> Result<Homography> {
    if pairs.len() < 4 {
        return Err(Error::Fit(format!(
            "at least 4 correspondences are required, got {}",
            pairs.len()
        )));
    }
    if pairs
        .iter()
        .any(|c| c.source.iter().chain(&c.target).any(|v| !v.is_finite()))
    {
        return Err(Error::Fit("correspondences must be finite".into()));
    }
    let src: Vec<[f64; 2]> = pairs.iter().map(|c| c.source).collect();
    let dst: Vec<[f64; 2]> = pairs.iter().map(|c| c.target).collect();
    let sp = span(&src);
    let area_floor = 1e-9 * sp * sp;
    for i in 0..src.len() {
        for j in i + 1..src.len() {
            for k in j + 1..src.len() {
                let (a, b, c) = (src[i], src[j], src[k]);
                let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
                if area <= area_floor {
                    return Err(Error::Fit(format!(
                        "source points {i}, {j} and {k} are collinear"
                    )));
                }
            }
        }
    }

    let ts = normalizing_transform(&src);
    let td = normalizing_transform(&dst);
    let rows = (2 * pairs.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (n, (s, d)) in src.iter().zip(&dst).enumerate() {
        let [x, y] = transform(&ts, *s);
        let [u, v] = transform(&td, *d);
        let r = 2 * n;
        a[(r, 0)] = -x;
        a[(r, 1)] = -y;
        a[(r, 2)] = -1.0;
        a[(r, 6)] = u * x;
        a[(r, 7)] = u * y;
        a[(r, 8)] = u;
        a[(r + 1, 3)] = -x;
        a[(r + 1, 4)] = -y;
        a[(r + 1, 5)] = -1.0;
        a[(r + 1, 6)] = v * x;
        a[(r + 1, 7)] = v * y;
        a[(r + 1, 8)] = v;
    }
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Fit("singular value decomposition failed".into()))?;
    let smallest = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nine singular values");
    let h = v_t.row(smallest);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td
        .try_inverse()
        .ok_or_else(|| Error::Fit("degenerate target points".into()))?;
    let full = td_inv * hn * ts;
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = full[(i, j)];
        }
    }
    Homography::new(m).map_err(|e| Error::Fit(format!("fitted map is degenerate: {e}")))
}
