//! Directed communication networks, row-stochastic weights, and the spectral
//! quantities of the weight matrix that the convergence analysis depends on.
//!
//! Agents are indexed `0..m` internally. The on-disk edge-list format is
//! 1-based: one `src dst` pair per line meaning `src` transmits to `dst`
//! (so `src` is an in-neighbor of `dst`), with `#` starting a comment.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Row sums of a [`WeightMatrix`] must be within this distance of 1.
pub const ROW_SUM_TOL: f64 = 1e-12;

const PERRON_TOL: f64 = 1e-12;
const LIMIT_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-14;

/// An unbalanced directed network. Self-loops are implied and never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedNetwork {
    m: usize,
    in_neighbors: Vec<BTreeSet<usize>>,
}

impl DirectedNetwork {
    /// Builds a network from 0-based `(src, dst)` edges. Duplicate edges are
    /// merged.
    pub fn new(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidNetwork("network has no agents".into()));
        }
        let mut in_neighbors = vec![BTreeSet::new(); m];
        for &(src, dst) in edges {
            if src >= m || dst >= m {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({}, {}) references an agent outside 1..={m}",
                    src + 1,
                    dst + 1
                )));
            }
            if src == dst {
                return Err(Error::InvalidNetwork(format!(
                    "explicit self-loop at agent {}",
                    src + 1
                )));
            }
            in_neighbors[dst].insert(src);
        }
        Ok(Self { m, in_neighbors })
    }

    /// Directed ring `0 -> 1 -> ... -> m-1 -> 0`.
    pub fn ring(m: usize) -> Result<Self> {
        let edges: Vec<_> = if m > 1 {
            (0..m).map(|i| (i, (i + 1) % m)).collect()
        } else {
            Vec::new()
        };
        Self::new(m, &edges)
    }

    /// Random strongly connected digraph: a directed ring over a seeded random
    /// permutation of the agents, plus every other ordered pair independently
    /// with probability `density`.
    pub fn random_strongly_connected(m: usize, density: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::InvalidConfig(format!(
                "edge density {density} outside [0, 1]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut edges = Vec::new();
        if m > 1 {
            for w in 0..m {
                edges.push((order[w], order[(w + 1) % m]));
            }
        }
        for src in 0..m {
            for dst in 0..m {
                if src != dst && rng.random_bool(density) {
                    edges.push((src, dst));
                }
            }
        }
        Self::new(m, &edges)
    }

    /// Parses the 1-based edge-list text format. The agent count is the largest
    /// index mentioned unless `m` is given.
    pub fn parse_edge_list(text: &str, m: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_index = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: String| Error::FileFormat {
                path: "<edge list>".into(),
                line: lineno + 1,
                msg,
            };
            if fields.len() != 2 {
                return Err(bad(format!("expected `src dst`, found {line:?}")));
            }
            let parse = |s: &str| -> Result<usize> {
                match s.parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v),
                    _ => Err(bad(format!("invalid 1-based agent index {s:?}"))),
                }
            };
            let (src, dst) = (parse(fields[0])?, parse(fields[1])?);
            max_index = max_index.max(src).max(dst);
            edges.push((src - 1, dst - 1));
        }
        let m = m.unwrap_or(max_index);
        Self::new(m, &edges)
    }

    pub fn read_edge_list(path: impl AsRef<Path>, m: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse_edge_list(&text, m).map_err(|e| match e {
            Error::FileFormat { line, msg, .. } => Error::FileFormat {
                path: path.to_path_buf(),
                line,
                msg,
            },
            other => other,
        })
    }

    /// Serializes to the 1-based edge-list format, sorted by destination.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# {} agents\n", self.m);
        for (dst, ins) in self.in_neighbors.iter().enumerate() {
            for src in ins {
                let _ = writeln!(out, "{} {}", src + 1, dst + 1);
            }
        }
        out
    }

    pub fn agents(&self) -> usize {
        self.m
    }

    pub fn in_neighbors(&self, agent: usize) -> &BTreeSet<usize> {
        &self.in_neighbors[agent]
    }

    pub fn edge_count(&self) -> usize {
        self.in_neighbors.iter().map(BTreeSet::len).sum()
    }

    pub fn in_degree(&self, agent: usize) -> usize {
        self.in_neighbors[agent].len()
    }

    pub fn out_degree(&self, agent: usize) -> usize {
        self.in_neighbors.iter().filter(|s| s.contains(&agent)).count()
    }

    /// True when some agent's in-degree differs from its out-degree.
    pub fn is_unbalanced(&self) -> bool {
        (0..self.m).any(|i| self.in_degree(i) != self.out_degree(i))
    }

    /// True iff every agent reaches every other agent along directed edges.
    pub fn check_strong_connectivity(&self) -> bool {
        let mut out = vec![Vec::new(); self.m];
        for (dst, ins) in self.in_neighbors.iter().enumerate() {
            for &src in ins {
                out[src].push(dst);
            }
        }
        let forward = reachable_from(0, &out);
        let backward = reachable_from(
            0,
            &self
                .in_neighbors
                .iter()
                .map(|s| s.iter().copied().collect())
                .collect::<Vec<Vec<usize>>>(),
        );
        forward && backward
    }
}

fn reachable_from(start: usize, adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == adj.len()
}

/// Topologies used by the two experiment case studies (10 and 20 agents).
pub mod fixtures {
    use super::DirectedNetwork;

    pub const TEN_AGENT_EDGES: &str = include_str!("../../../data/ten_agents.edges");
    pub const TWENTY_AGENT_EDGES: &str = include_str!("../../../data/twenty_agents.edges");

    pub fn ten_agents() -> DirectedNetwork {
        DirectedNetwork::parse_edge_list(TEN_AGENT_EDGES, Some(10)).expect("fixture parses")
    }

    pub fn twenty_agents() -> DirectedNetwork {
        DirectedNetwork::parse_edge_list(TWENTY_AGENT_EDGES, Some(20)).expect("fixture parses")
    }
}

/// Row-stochastic mixing weights. Row `i` only has support on agent `i` and
/// its in-neighbors, so each agent can pick its own row locally.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: Vec<Vec<(usize, f64)>>,
    dense: DMatrix<f64>,
}

impl WeightMatrix {
    /// Uniform in-neighbor weighting: `a_ij = 1 / (|N_i^in| + 1)` over
    /// `N_i^in ∪ {i}`.
    pub fn uniform(net: &DirectedNetwork) -> Self {
        let m = net.agents();
        let mut rows = Vec::with_capacity(m);
        let mut dense = DMatrix::zeros(m, m);
        for i in 0..m {
            let support: BTreeSet<usize> = net
                .in_neighbors(i)
                .iter()
                .copied()
                .chain(std::iter::once(i))
                .collect();
            let w = 1.0 / support.len() as f64;
            let row: Vec<(usize, f64)> = support.into_iter().map(|j| (j, w)).collect();
            for &(j, a) in &row {
                dense[(i, j)] = a;
            }
            rows.push(row);
        }
        Self { rows, dense }
    }

    /// Wraps an explicit matrix after checking it is square, non-negative, and
    /// row-stochastic with a positive diagonal.
    pub fn from_dense(dense: DMatrix<f64>) -> Result<Self> {
        let m = dense.nrows();
        if dense.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: dense.ncols(),
            });
        }
        let mut rows = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = Vec::new();
            let mut sum = 0.0;
            for j in 0..m {
                let a = dense[(i, j)];
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidNetwork(format!(
                        "weight a[{i}][{j}] = {a} is not a finite non-negative number"
                    )));
                }
                if a > 0.0 {
                    row.push((j, a));
                    sum += a;
                }
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidNetwork(format!("row {i} sums to {sum}")));
            }
            if dense[(i, i)] <= 0.0 {
                return Err(Error::InvalidNetwork(format!("zero self-weight at agent {i}")));
            }
            rows.push(row);
        }
        Ok(Self { rows, dense })
    }

    pub fn agents(&self) -> usize {
        self.rows.len()
    }

    /// Non-zero `(j, a_ij)` entries of row `i`, sorted by `j`.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn dense(&self) -> &DMatrix<f64> {
        &self.dense
    }

    /// `A^power` by repeated multiplication.
    pub fn power(&self, power: usize) -> DMatrix<f64> {
        let m = self.agents();
        let mut out = DMatrix::identity(m, m);
        for _ in 0..power {
            out = &out * &self.dense;
        }
        out
    }

    /// Strong connectivity of the support graph, which together with the
    /// positive diagonal makes the matrix primitive.
    pub fn is_irreducible(&self) -> bool {
        let m = self.agents();
        let mut edges = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, _) in row {
                if j != i {
                    edges.push((j, i));
                }
            }
        }
        DirectedNetwork::new(m, &edges)
            .map(|n| n.check_strong_connectivity())
            .unwrap_or(false)
    }
}

/// Perron vector, mixing rate and the supremum constants of the analysis, for
/// a fixed inner-loop count `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInfo {
    /// Left Perron eigenvector of `A`, positive and summing to 1.
    pub pi: DVector<f64>,
    /// `‖A − 1πᵀ‖_π`.
    pub sigma: f64,
    pub pi_max: f64,
    pub pi_min: f64,
    /// `pi_max / pi_min`.
    pub vartheta: f64,
    /// `sup_k max_i 1 / [A^{kH}]_ii`.
    pub y_inv_sup: f64,
    /// `sup_k ‖A^{kH}‖₂`.
    pub y_norm_sup: f64,
    /// `‖I − A^H‖₂`.
    pub p1: f64,
    /// Inner-loop count the suprema and `p1` were computed for.
    pub inner_loops: usize,
}

impl SpectralInfo {
    /// `y∞ = 1πᵀ`.
    pub fn limit_matrix(&self) -> DMatrix<f64> {
        let m = self.pi.len();
        DMatrix::from_fn(m, m, |_, j| self.pi[j])
    }

    pub fn sigma_pow(&self, exponent: usize) -> f64 {
        self.sigma.powi(exponent as i32)
    }
}

/// Power-iteration budget for the Perron vector: `100·m·ln(m) + 10000`.
pub fn perron_budget(m: usize) -> usize {
    let m = m as f64;
    (100.0 * m * m.max(1.0).ln()).ceil() as usize + 10_000
}

/// Left Perron eigenvector of a primitive row-stochastic matrix by power
/// iteration on `Aᵀ` from the uniform vector.
pub fn perron_vector(a: &WeightMatrix) -> Result<DVector<f64>> {
    let m = a.agents();
    if m > 1 && !a.is_irreducible() {
        return Err(Error::NotPrimitive(
            "support graph is not strongly connected".into(),
        ));
    }
    let at = a.dense().transpose();
    let mut pi = DVector::from_element(m, 1.0 / m as f64);
    for _ in 0..perron_budget(m) {
        let mut next = &at * &pi;
        let s = next.sum();
        next /= s;
        let delta = (&next - &pi).amax();
        pi = next;
        if delta < PERRON_TOL {
            return Ok(pi);
        }
    }
    Err(Error::NotPrimitive(format!(
        "power iteration did not converge within {} steps",
        perron_budget(m)
    )))
}

/// `‖X‖_π = ‖diag(√π) X diag(√π)⁻¹‖₂`.
pub fn pi_matrix_norm(x: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    let m = pi.len();
    let scaled = DMatrix::from_fn(m, m, |i, j| pi[i].sqrt() * x[(i, j)] / pi[j].sqrt());
    spectral_norm(&scaled)
}

/// Largest singular value.
pub fn spectral_norm(x: &DMatrix<f64>) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// Computes π, σ and the constants `Y`, `Ŷ`, `p₁` for inner-loop count `h`.
///
/// `Y` and `Ŷ` are suprema over the iterates `A^{kH}`; the iterates converge
/// geometrically to `1πᵀ`, so they are tracked until `‖A^{kH} − 1πᵀ‖₂` drops
/// below 1e-12 and the limit values are folded in.
pub fn compute_spectral_info(a: &WeightMatrix, h: usize) -> Result<SpectralInfo> {
    if h == 0 {
        return Err(Error::InvalidConfig("inner loop count H must be >= 1".into()));
    }
    let m = a.agents();
    let pi = perron_vector(a)?;
    let limit = DMatrix::from_fn(m, m, |_, j| pi[j]);
    let sigma = pi_matrix_norm(&(a.dense() - &limit), &pi);
    let pi_max = pi.max();
    let pi_min = pi.min();

    let a_h = a.power(h);
    let p1 = spectral_norm(&(DMatrix::identity(m, m) - &a_h));

    let mut y_inv_sup = 1.0 / pi_min;
    let mut y_norm_sup = spectral_norm(&limit);
    let mut iterate = DMatrix::identity(m, m);
    let budget = perron_budget(m);
    let mut converged = false;
    for _ in 0..budget {
        let diag_min = iterate.diagonal().min();
        y_inv_sup = y_inv_sup.max(1.0 / diag_min);
        y_norm_sup = y_norm_sup.max(spectral_norm(&iterate));
        let next = &iterate * &a_h;
        // π itself is only known to about 1e-11, so also accept an iterate
        // that has stopped moving
        if spectral_norm(&(&iterate - &limit)) < LIMIT_TOL || spectral_norm(&(&next - &iterate)) < STATIONARY_TOL {
            converged = true;
            break;
        }
        iterate = next;
    }
    if !converged {
        return Err(Error::NotPrimitive(format!(
            "A^(kH) did not reach 1πᵀ within {budget} steps"
        )));
    }

    Ok(SpectralInfo {
        vartheta: pi_max / pi_min,
        pi,
        sigma,
        pi_max,
        pi_min,
        y_inv_sup,
        y_norm_sup,
        p1,
        inner_loops: h,
    })
}

/// `√(Σ πᵢ xᵢ²)`.
pub fn pi_weighted_norm(x: &[f64], pi: &[f64]) -> Result<f64> {
    if x.len() != pi.len() {
        return Err(Error::DimensionMismatch {
            expected: pi.len(),
            got: x.len(),
        });
    }
    Ok(x.iter().zip(pi).map(|(v, p)| p * v * v).sum::<f64>().sqrt())
}

/// π-weighted norm of a stacked per-agent block vector `x = [x¹; …; xᵐ]`
/// (`(diag(π) ⊗ I_n)`-weighted).
pub fn pi_block_norm(blocks: &[DVector<f64>], pi: &DVector<f64>) -> f64 {
    blocks
        .iter()
        .zip(pi.iter())
        .map(|(b, p)| p * b.norm_squared())
        .sum::<f64>()
        .sqrt()
}
