//! Small dense helpers for the fixed 2x2 / 3x3 matrices used per point.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};

pub(crate) type Mat3 = [[f64; 3]; 3];

/// Smallest eigenvalue of the leading `dim x dim` block of a symmetric matrix.
pub(crate) fn sym_min_eigenvalue(h: &Mat3, dim: usize) -> f64 {
    match dim {
        1 => h[0][0],
        2 => {
            let mean = 0.5 * (h[0][0] + h[1][1]);
            let half_diff = 0.5 * (h[0][0] - h[1][1]);
            mean - half_diff.hypot(h[0][1])
        }
        _ => {
            let m = Matrix3::from_fn(|i, j| h[i][j]);
            SymmetricEigen::new(m).eigenvalues.min()
        }
    }
}

/// Solves the symmetric `dim x dim` system `h x = rhs`; `None` when singular.
pub(crate) fn solve_small(h: &Mat3, rhs: &[f64; 3], dim: usize) -> Option<[f64; 3]> {
    let m = DMatrix::from_fn(dim, dim, |i, j| h[i][j]);
    let b = DMatrix::from_fn(dim, 1, |i, _| rhs[i]);
    let sol = m.lu().solve(&b)?;
    let mut out = [0.0; 3];
    for i in 0..dim {
        out[i] = sol[(i, 0)];
    }
    Some(out)
}

/// Orthonormal basis of the span of the wavevectors.
///
/// The potential of a plane-wave superposition is constant along directions
/// orthogonal to every wavevector, so curvature tests and Newton steps are
/// carried out in this subspace. When the wavevectors span the whole space the
/// basis is the identity and reductions are no-ops.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeBasis {
    dim: usize,
    rank: usize,
    /// Columns are basis vectors (only the first `rank` are meaningful).
    columns: [[f64; 3]; 3],
}

impl RangeBasis {
    pub(crate) fn from_columns(dim: usize, vectors: &[[f64; 3]], scale: f64) -> Self {
        let k = DMatrix::from_fn(dim, vectors.len(), |i, j| vectors[j][i]);
        let svd = k.svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
        let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        if rank == dim {
            return Self::identity(dim);
        }
        // nalgebra does not promise sorted singular values
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let mut columns = [[0.0; 3]; 3];
        for (c, &idx) in order.iter().take(rank).enumerate() {
            for i in 0..dim {
                columns[c][i] = u[(i, idx)];
            }
        }
        RangeBasis {
            dim,
            rank,
            columns,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut columns = [[0.0; 3]; 3];
        for (i, col) in columns.iter_mut().enumerate().take(dim) {
            col[i] = 1.0;
        }
        RangeBasis {
            dim,
            rank: dim,
            columns,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full(&self) -> bool {
        self.rank == self.dim
    }

    /// Coordinates of `v` in the basis.
    pub fn reduce_vector(&self, v: &[f64; 3]) -> [f64; 3] {
        if self.is_full() {
            return *v;
        }
        let mut out = [0.0; 3];
        for (c, o) in out.iter_mut().enumerate().take(self.rank) {
            *o = (0..self.dim).map(|i| self.columns[c][i] * v[i]).sum();
        }
        out
    }

    /// Maps basis coordinates back to the ambient space.
    pub fn expand_vector(&self, r: &[f64; 3]) -> [f64; 3] {
        if self.is_full() {
            return *r;
        }
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = (0..self.rank).map(|c| self.columns[c][i] * r[c]).sum();
        }
        out
    }

    /// `Q^T H Q` for the basis `Q`.
    pub fn reduce_matrix(&self, h: &Mat3) -> Mat3 {
        if self.is_full() {
            return *h;
        }
        let mut out = [[0.0; 3]; 3];
        for a in 0..self.rank {
            for b in 0..self.rank {
                let mut s = 0.0;
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        s += self.columns[a][i] * h[i][j] * self.columns[b][j];
                    }
                }
                out[a][b] = s;
            }
        }
        out
    }

    /// Smallest eigenvalue of the Hessian restricted to the basis span.
    pub fn min_eigenvalue(&self, h: &Mat3) -> f64 {
        if self.rank == 0 {
            return 0.0;
        }
        sym_min_eigenvalue(&self.reduce_matrix(h), self.rank)
    }
}
