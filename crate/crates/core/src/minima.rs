//! Assembly sites: minima of the potential.
//!
//! Detection scans a [`FieldGrid`] for nodes with a small gradient and a
//! positive-definite Hessian, reducing each connected cluster of passing nodes
//! to its locally lowest nodes. Refinement polishes such seeds with damped Newton
//! steps. Relaxation moves test particles downhill along `F = -grad psi`.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::WaveConfig;
use crate::grid::{curvature_basis, FieldGrid, GridSpec};
use crate::linalg::solve_small;
use crate::potential::{evaluate_arp, evaluate_arp_derivatives, potential_scale, ArpCoefficients};

/// Thresholds for accepting a grid node as a minimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MinimaCriteria {
    /// Thresholds relative to the grid: `grad_max = grad_fraction * max |grad psi|`
    /// and `eig_min = eig_fraction * max lambda_min`.
    Auto {
        grad_fraction: f64,
        eig_fraction: f64,
    },
    /// Thresholds in the units of the potential.
    Absolute { eig_min: f64, grad_max: f64 },
}

/// Default fraction of the largest grid gradient accepted near a minimum.
pub const AUTO_GRAD_FRACTION: f64 = 0.25;
/// Default fraction of the largest grid curvature required at a minimum.
pub const AUTO_EIG_FRACTION: f64 = 1e-9;

impl Default for MinimaCriteria {
    fn default() -> Self {
        MinimaCriteria::Auto {
            grad_fraction: AUTO_GRAD_FRACTION,
            eig_fraction: AUTO_EIG_FRACTION,
        }
    }
}

impl MinimaCriteria {
    /// Absolute thresholds `lambda_min > 1e-6`, `|grad psi| < 4e11`, meaningful
    /// together with the reference coefficients `a = 5.7424e6`, `B = 0.2115 I`.
    pub fn reference_absolute() -> Self {
        MinimaCriteria::Absolute {
            eig_min: 1e-6,
            grad_max: 4e11,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (x, y, what) = match *self {
            MinimaCriteria::Auto {
                grad_fraction,
                eig_fraction,
            } => (grad_fraction, eig_fraction, "auto fractions"),
            MinimaCriteria::Absolute { eig_min, grad_max } => (eig_min, grad_max, "thresholds"),
        };
        if !(x.is_finite() && x > 0.0 && y.is_finite() && y > 0.0) {
            return Err(Error::Validation(format!("minima {what} must be positive")));
        }
        Ok(())
    }

    /// Concrete thresholds for a grid.
    pub fn resolve(&self, grid: &FieldGrid) -> Result<Thresholds> {
        self.validate()?;
        Ok(match *self {
            MinimaCriteria::Absolute { eig_min, grad_max } => Thresholds { eig_min, grad_max },
            MinimaCriteria::Auto {
                grad_fraction,
                eig_fraction,
            } => {
                let gmax = grid.grad_norm.iter().copied().fold(0.0, f64::max);
                let emax = grid.min_eig.iter().copied().fold(0.0, f64::max);
                Thresholds {
                    eig_min: (eig_fraction * emax).max(f64::MIN_POSITIVE),
                    grad_max: (grad_fraction * gmax).max(f64::MIN_POSITIVE),
                }
            }
        })
    }
}

/// Resolved thresholds: a node passes when `min_eig > eig_min` and
/// `grad_norm < grad_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub eig_min: f64,
    pub grad_max: f64,
}

impl Thresholds {
    pub fn accepts(&self, grad_norm: f64, min_eig: f64) -> bool {
        min_eig > self.eig_min && grad_norm < self.grad_max
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub location: Vec<f64>,
    pub psi: f64,
    pub grad_norm: f64,
    pub min_eig: f64,
    /// False for raw grid nodes, true after Newton refinement.
    pub refined: bool,
}

/// Detected or refined minima with the grid and thresholds they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimaSet {
    pub points: Vec<Minimum>,
    pub grid: GridSpec,
    pub thresholds: Thresholds,
}

impl MinimaSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn locations(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|m| m.location.clone()).collect()
    }
}

fn neighbor_offsets(dim: usize) -> Vec<[isize; 3]> {
    let mut out = Vec::new();
    let r = |a: usize| if a < dim { -1..=1 } else { 0..=0 };
    for dz in r(2) {
        for dy in r(1) {
            for dx in r(0) {
                if (dx, dy, dz) != (0, 0, 0) {
                    out.push([dx, dy, dz]);
                }
            }
        }
    }
    out
}

/// Grid nodes passing both thresholds, reduced per connected cluster
/// (8-connected in 2D, 26-connected in 3D) to the cells that are lowest among
/// their passing neighbours. A cluster around a single well yields its lowest
/// cell; a cluster bridging several wells yields one cell per well. Equal
/// values are resolved by grid index. The outer ring of the grid is never
/// considered.
pub fn detect_minima(grid: &FieldGrid, criteria: &MinimaCriteria) -> Result<MinimaSet> {
    let n = grid.spec.len();
    if n == 0 || grid.psi.len() != n || grid.grad_norm.len() != n || grid.min_eig.len() != n {
        return Err(Error::Validation("field grid is empty or not fully populated".into()));
    }
    let thresholds = criteria.resolve(grid)?;
    let spec = &grid.spec;
    let dim = spec.dim();

    let pass: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|i| !spec.on_boundary(i) && thresholds.accepts(grid.grad_norm[i], grid.min_eig[i]))
        .collect();

    let offsets = neighbor_offsets(dim);
    let neighbors = |cur: usize| {
        let idx = spec.unravel(cur);
        offsets.iter().filter_map(move |off| {
            let mut nb = [0usize; 3];
            for a in 0..dim {
                let v = idx[a] as isize + off[a];
                if v < 0 || v >= spec.points()[a] as isize {
                    return None;
                }
                nb[a] = v as usize;
            }
            Some(spec.ravel(&nb[..dim]))
        })
    };
    let lower = |a: usize, b: usize| grid.psi[a] < grid.psi[b] || (grid.psi[a] == grid.psi[b] && a < b);

    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    let mut points = Vec::new();
    for start in 0..n {
        if !pass[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut cluster = Vec::new();
        while let Some(cur) = queue.pop_front() {
            cluster.push(cur);
            for j in neighbors(cur) {
                if pass[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        cluster.sort_unstable();
        for &cell in &cluster {
            if neighbors(cell).any(|j| pass[j] && lower(j, cell)) {
                continue;
            }
            points.push(Minimum {
                location: spec.point(cell),
                psi: grid.psi[cell],
                grad_norm: grid.grad_norm[cell],
                min_eig: grid.min_eig[cell],
                refined: false,
            });
        }
    }
    Ok(MinimaSet {
        points,
        grid: spec.clone(),
        thresholds,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineOptions {
    pub max_iter: usize,
    /// Stop once `|grad psi| <= tol * k * psi_scale`.
    pub tol: f64,
    /// Analysis box; leaving it by more than one wavelength is divergence.
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            max_iter: 50,
            tol: 1e-10,
            bounds: None,
        }
    }
}

impl RefineOptions {
    pub fn within(spec: &GridSpec) -> Self {
        RefineOptions {
            bounds: Some((spec.lower().to_vec(), spec.upper().to_vec())),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub minimum: Minimum,
    pub iterations: usize,
}

/// Damped Newton iteration from `x0` using the analytic gradient and Hessian.
/// Steps are taken in the span of the wavevectors (the potential is flat in
/// the orthogonal complement) and limited to an eighth of a wavelength.
pub fn refine_minimum(
    cfg: &WaveConfig,
    co: &ArpCoefficients,
    x0: &[f64],
    opts: &RefineOptions,
) -> Result<Refinement> {
    let dim = cfg.dim();
    if x0.len() != dim {
        return Err(Error::Config(format!("seed has {} coordinates, expected {dim}", x0.len())));
    }
    let basis = curvature_basis(cfg);
    let rank = basis.rank();
    let lambda = cfg.wavelength();
    let scale = potential_scale(cfg, co);
    let grad_goal = opts.tol * cfg.wavenumber() * scale;
    let max_step = lambda / 8.0;
    let min_step = 1e-14 * lambda;

    let mut x = x0.to_vec();
    for iter in 0..=opts.max_iter {
        let der = evaluate_arp_derivatives(cfg, co, &x)?;
        let g_red = basis.reduce_vector(&der.gradient);
        let gnorm = g_red.iter().map(|v| v * v).sum::<f64>().sqrt();
        let h_red = basis.reduce_matrix(&der.hessian);
        let min_eig = basis.min_eigenvalue(&der.hessian);
        let finish = |x: Vec<f64>| -> Result<Refinement> {
            if min_eig > 0.0 {
                Ok(Refinement {
                    minimum: Minimum {
                        location: x,
                        psi: der.value,
                        grad_norm: der.gradient_norm(),
                        min_eig,
                        refined: true,
                    },
                    iterations: iter,
                })
            } else {
                Err(Error::Saddle { location: x, min_eig })
            }
        };
        if gnorm <= grad_goal {
            return finish(x);
        }
        if iter == opts.max_iter {
            return Err(Error::NotConverged {
                iterations: iter,
                grad_norm: gnorm,
            });
        }

        // Levenberg shift keeps the step a descent direction away from convex regions
        let mut h = h_red;
        let shift = if min_eig > 0.0 {
            0.0
        } else {
            let diag_max = (0..rank).map(|i| h[i][i].abs()).fold(0.0, f64::max);
            -min_eig + 1e-3 * diag_max.max(f64::MIN_POSITIVE)
        };
        for (i, row) in h.iter_mut().enumerate().take(rank) {
            row[i] += shift;
        }
        let neg_g = g_red.map(|v| -v);
        let Some(step_red) = solve_small(&h, &neg_g, rank) else {
            return Err(Error::NotConverged {
                iterations: iter,
                grad_norm: gnorm,
            });
        };
        let mut step = basis.expand_vector(&step_red);
        let len = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len > max_step {
            for s in step.iter_mut() {
                *s *= max_step / len;
            }
        }
        if len <= min_step {
            return finish(x);
        }

        let psi0 = der.value;
        let slack = 1e-13 * scale;
        let mut t = 1.0;
        let mut next = x.clone();
        for _ in 0..30 {
            for a in 0..dim {
                next[a] = x[a] + t * step[a];
            }
            if evaluate_arp(cfg, co, &next)? <= psi0 + slack {
                break;
            }
            t *= 0.5;
        }
        x.copy_from_slice(&next);

        if let Some((lo, hi)) = &opts.bounds {
            let outside = (0..dim).any(|a| x[a] < lo[a] - lambda || x[a] > hi[a] + lambda);
            if outside {
                return Err(Error::Divergence(format!(
                    "iterate {x:?} is more than one wavelength outside the analysis box"
                )));
            }
        }
    }
    unreachable!("loop returns on the final iteration")
}

/// Refines every point of a detected set in parallel. Points that fail to
/// refine are dropped and counted; refined points closer than half a grid
/// spacing to an earlier one are merged. Output order follows the input.
pub fn refine_set(
    cfg: &WaveConfig,
    co: &ArpCoefficients,
    detected: &MinimaSet,
    opts: &RefineOptions,
) -> (MinimaSet, usize) {
    let results: Vec<Result<Refinement>> = detected
        .points
        .par_iter()
        .map(|m| refine_minimum(cfg, co, &m.location, opts))
        .collect();
    let merge = 0.5 * detected.grid.min_spacing();
    let mut failures = 0;
    let mut points: Vec<Minimum> = Vec::new();
    for r in results {
        match r {
            Ok(r) => {
                let dup = points.iter().any(|p| distance(&p.location, &r.minimum.location) < merge);
                if !dup {
                    points.push(r.minimum);
                }
            }
            Err(_) => failures += 1,
        }
    }
    (
        MinimaSet {
            points,
            grid: detected.grid.clone(),
            thresholds: detected.thresholds,
        },
        failures,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelaxOptions {
    /// Base step `eta` in `x <- x - eta grad psi`; `None` picks
    /// `1 / (k^2 psi_scale)`.
    pub step: Option<f64>,
    pub iters: usize,
    /// Converged once `|grad psi| <= tol * k * psi_scale`.
    pub tol: f64,
    pub record_paths: bool,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions {
            step: None,
            iters: 5000,
            tol: 1e-9,
            record_paths: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub psi: f64,
    pub grad_norm: f64,
    pub converged: bool,
    pub steps: usize,
    /// Accepted positions including the start, when paths are recorded.
    pub path: Vec<Vec<f64>>,
    /// Potential along `path`.
    pub psi_path: Vec<f64>,
}

const ARMIJO: f64 = 1e-4;

/// Overdamped relaxation of independent test particles. Each move is
/// clipped to a twentieth of a wavelength and the step is halved until the
/// potential decreases sufficiently, so the potential along every trajectory
/// is non-increasing.
pub fn relax_particles(
    cfg: &WaveConfig,
    co: &ArpCoefficients,
    inits: &[Vec<f64>],
    opts: &RelaxOptions,
) -> Result<Vec<Trajectory>> {
    let dim = cfg.dim();
    if let Some(bad) = inits.iter().position(|x| x.len() != dim) {
        return Err(Error::Config(format!("initial point {bad} has wrong dimension")));
    }
    let k = cfg.wavenumber();
    let scale = potential_scale(cfg, co);
    let eta = match opts.step {
        Some(s) if s.is_finite() && s > 0.0 => s,
        Some(s) => return Err(Error::Validation(format!("relaxation step must be positive, got {s}"))),
        None => 1.0 / (k * k * scale.max(f64::MIN_POSITIVE)),
    };
    let max_move = cfg.wavelength() / 20.0;
    let grad_goal = opts.tol * k * scale;
    let rounding = 16.0 * f64::EPSILON * scale;

    inits
        .par_iter()
        .map(|x0| -> Result<Trajectory> {
            let mut x = x0.clone();
            let mut der = evaluate_arp_derivatives(cfg, co, &x)?;
            let mut path = Vec::new();
            let mut psi_path = Vec::new();
            if opts.record_paths {
                path.push(x.clone());
                psi_path.push(der.value);
            }
            let mut converged = false;
            let mut steps = 0;
            let mut cand = x.clone();
            while steps < opts.iters {
                let gnorm = der.gradient_norm();
                if gnorm <= grad_goal {
                    converged = true;
                    break;
                }
                let mut t = eta;
                if t * gnorm > max_move {
                    t = max_move / gnorm;
                }
                let mut accepted = None;
                for _ in 0..60 {
                    for a in 0..dim {
                        cand[a] = x[a] - t * der.gradient[a];
                    }
                    let psi = evaluate_arp(cfg, co, &cand)?;
                    // sufficient decrease, unless it is below rounding
                    let wanted = ARMIJO * t * gnorm * gnorm;
                    let goal = if wanted > rounding { der.value - wanted } else { der.value };
                    if psi <= goal {
                        accepted = Some(psi);
                        break;
                    }
                    t *= 0.5;
                }
                if accepted.is_none() {
                    break;
                }
                x.copy_from_slice(&cand);
                der = evaluate_arp_derivatives(cfg, co, &x)?;
                steps += 1;
                if opts.record_paths {
                    path.push(x.clone());
                    psi_path.push(der.value);
                }
            }
            if !converged && der.gradient_norm() <= grad_goal {
                converged = true;
            }
            Ok(Trajectory {
                start: x0.clone(),
                end: x,
                psi: der.value,
                grad_norm: der.gradient_norm(),
                converged,
                steps,
                path,
                psi_path,
            })
        })
        .collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Symmetric Hausdorff distance between two point sets. Infinite when
/// exactly one of them is empty.
pub fn hausdorff_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let directed = |from: &[Vec<f64>], to: &[Vec<f64>]| {
        from.par_iter()
            .map(|p| to.iter().map(|q| distance(p, q)).fold(f64::INFINITY, f64::min))
            .reduce(|| 0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}
