//! Learning trace-normalized Laplacians from smooth signals.
//!
//! A Laplacian in Ω_L (symmetric, nonpositive off-diagonals, zero row sums,
//! trace `N`) is parameterized by its upper-triangular edge weights
//! `w ≥ 0` with `Σ w = N/2`. For node signals with pairwise costs
//! `c_ij = ‖z_i - z_j‖²` the problem
//!
//! ```text
//! min  ρ Tr(Zᵀ L(w) Z) + μ ‖L(w)‖_F²
//!    = ρ Σ_{i<j} w_ij c_ij + μ (2 Σ_{i<j} w_ij² + Σ_i deg_i²)
//! ```
//!
//! is a convex quadratic over a scaled simplex, solved here by projected
//! gradient descent with a fixed step.

use nalgebra::DMatrix;

use crate::coding::SparseCode;
use crate::error::{Error, Result};
use crate::graphs::{laplacian_from_weights, GraphLaplacian, WeightMatrix};

pub const DEFAULT_MAX_ITERS: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-8;

/// Number of unordered node pairs.
pub fn edge_count(nodes: usize) -> usize {
    nodes * nodes.saturating_sub(1) / 2
}

/// Calls `f(edge, i, j)` for each pair `i < j` in row-major order.
fn for_each_edge(nodes: usize, mut f: impl FnMut(usize, usize, usize)) {
    let mut e = 0;
    for i in 0..nodes {
        for j in (i + 1)..nodes {
            f(e, i, j);
            e += 1;
        }
    }
}

/// `c_ij = ‖Z(i,:) - Z(j,:)‖²` for each row pair `i < j`.
pub fn edge_costs(z: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = z.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least two nodes, got {n}")));
    }
    let zt = z.transpose();
    let mut costs = vec![0.0; edge_count(n)];
    for_each_edge(n, |e, i, j| {
        costs[e] = zt.column(i).iter().zip(zt.column(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    });
    Ok(costs)
}

/// Edge costs between sparse columns, `c_ij = ‖x_i - x_j‖²`.
pub fn sparse_edge_costs(codes: &[SparseCode]) -> Result<Vec<f64>> {
    let n = codes.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least two nodes, got {n}")));
    }
    let mut costs = vec![0.0; edge_count(n)];
    for_each_edge(n, |e, i, j| {
        let (a, b) = (&codes[i], &codes[j]);
        let (mut p, mut q, mut s) = (0, 0, 0.0);
        while p < a.nnz() || q < b.nnz() {
            let ka = a.support.get(p).copied().unwrap_or(usize::MAX);
            let kb = b.support.get(q).copied().unwrap_or(usize::MAX);
            let d = if ka == kb {
                p += 1;
                q += 1;
                a.coeffs[p - 1] - b.coeffs[q - 1]
            } else if ka < kb {
                p += 1;
                a.coeffs[p - 1]
            } else {
                q += 1;
                b.coeffs[q - 1]
            };
            s += d * d;
        }
        costs[e] = s;
    });
    Ok(costs)
}

/// Euclidean projection onto `{w ≥ 0, Σ w = total}` by sorting and thresholding.
pub fn project_scaled_simplex(v: &[f64], total: f64) -> Vec<f64> {
    assert!(total > 0.0, "simplex total must be positive");
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - total) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// The Laplacian-learning objective for one graph.
#[derive(Debug, Clone)]
pub struct LaplacianProblem<'a> {
    pub costs: &'a [f64],
    /// Weight on the smoothness term.
    pub rho: f64,
    /// Weight on `‖L‖_F²`.
    pub mu: f64,
    pub nodes: usize,
}

impl LaplacianProblem<'_> {
    fn check(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::InvalidArgument(format!("need at least two nodes, got {}", self.nodes)));
        }
        if self.costs.len() != edge_count(self.nodes) {
            return Err(Error::Dimension(format!(
                "{} edge costs for {} nodes",
                self.costs.len(),
                self.nodes
            )));
        }
        if !(self.rho >= 0.0 && self.mu >= 0.0) || (self.rho == 0.0 && self.mu == 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weights must be nonnegative and not both zero (rho = {}, mu = {})",
                self.rho, self.mu
            )));
        }
        Ok(())
    }

    fn degrees(&self, w: &[f64]) -> Vec<f64> {
        let mut deg = vec![0.0; self.nodes];
        for_each_edge(self.nodes, |e, i, j| {
            deg[i] += w[e];
            deg[j] += w[e];
        });
        deg
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        let linear: f64 = w.iter().zip(self.costs).map(|(w, c)| w * c).sum();
        let squares: f64 = w.iter().map(|w| w * w).sum();
        let deg: f64 = self.degrees(w).iter().map(|d| d * d).sum();
        self.rho * linear + self.mu * (2.0 * squares + deg)
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let deg = self.degrees(w);
        let mut g = vec![0.0; w.len()];
        for_each_edge(self.nodes, |e, i, j| {
            g[e] = self.rho * self.costs[e] + self.mu * (4.0 * w[e] + 2.0 * (deg[i] + deg[j]));
        });
        g
    }

    /// Upper bound on the Hessian's largest eigenvalue (`4Nμ`), with a factor-2 margin.
    pub fn lipschitz(&self) -> f64 {
        2.0 * self.mu * (4.0 + 2.0 * (self.nodes as f64 - 1.0))
    }
}

/// Convergence record of [`learn_laplacian`].
#[derive(Debug, Clone)]
pub struct LearningReport {
    pub iterations: usize,
    /// Norm of the projected gradient at the returned point.
    pub stationarity: f64,
    /// `|2 Σ w - N|` before trace normalization.
    pub feasibility: f64,
    pub min_weight: f64,
    /// Objective at the starting point (index 0) and after each iteration.
    pub objectives: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct LearnedLaplacian {
    pub laplacian: GraphLaplacian,
    pub weights: Vec<f64>,
    pub report: LearningReport,
}

/// Minimizes [`LaplacianProblem`] over trace-normalized Laplacians.
///
/// `start` (edge weights, e.g. the current graph) warm-starts the iteration;
/// it is projected onto the feasible set first. With `mu = 0` the problem is
/// a linear program whose optimum puts all mass `N/2` on the cheapest edge
/// (lowest index among ties); that vertex is returned directly.
pub fn learn_laplacian(
    problem: &LaplacianProblem<'_>,
    start: Option<&[f64]>,
    max_iters: usize,
    tol: f64,
) -> Result<LearnedLaplacian> {
    problem.check()?;
    let total = problem.nodes as f64 / 2.0;
    let edges = problem.costs.len();
    let mut w = match start {
        Some(s) if s.len() == edges => project_scaled_simplex(s, total),
        Some(s) => {
            return Err(Error::Dimension(format!("{} starting weights for {edges} edges", s.len())));
        }
        None => vec![total / edges as f64; edges],
    };
    let mut objectives = vec![problem.objective(&w)];
    let mut iterations = 0;
    let mut stationarity;
    let mut converged = false;

    if problem.mu == 0.0 {
        let best = problem
            .costs
            .iter()
            .enumerate()
            .fold(0, |best, (e, &c)| if c < problem.costs[best] { e } else { best });
        let mut vertex = vec![0.0; edges];
        vertex[best] = total;
        if problem.objective(&vertex) <= objectives[0] {
            w = vertex;
        }
        objectives.push(problem.objective(&w));
        iterations = 1;
        stationarity = 0.0;
        converged = true;
    } else {
        let step = 1.0 / problem.lipschitz();
        stationarity = f64::INFINITY;
        while iterations < max_iters {
            let g = problem.gradient(&w);
            let trial: Vec<f64> = w.iter().zip(&g).map(|(w, g)| w - step * g).collect();
            let next = project_scaled_simplex(&trial, total);
            stationarity = w.iter().zip(&next).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / step;
            w = next;
            objectives.push(problem.objective(&w));
            iterations += 1;
            if stationarity <= tol {
                converged = true;
                break;
            }
        }
    }

    let sum: f64 = w.iter().sum();
    let feasibility = (2.0 * sum - problem.nodes as f64).abs();
    let min_weight = w.iter().copied().fold(f64::INFINITY, f64::min);
    let laplacian = laplacian_from_edges(&w, problem.nodes)?;
    Ok(LearnedLaplacian {
        laplacian,
        weights: w,
        report: LearningReport {
            iterations,
            stationarity,
            feasibility,
            min_weight,
            objectives,
            converged,
        },
    })
}

/// Builds the trace-normalized Laplacian of an edge-weight vector.
pub fn laplacian_from_edges(w: &[f64], nodes: usize) -> Result<GraphLaplacian> {
    if w.len() != edge_count(nodes) {
        return Err(Error::Dimension(format!("{} weights for {nodes} nodes", w.len())));
    }
    let mut m = DMatrix::zeros(nodes, nodes);
    for_each_edge(nodes, |e, i, j| {
        m[(i, j)] = w[e];
        m[(j, i)] = w[e];
    });
    laplacian_from_weights(&WeightMatrix::new(m)?, true)
}
