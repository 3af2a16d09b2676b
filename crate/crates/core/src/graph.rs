//! Weighted undirected graphs, their Laplacians, and the graph families used
//! throughout the experiments.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};

/// Upper bound on rejection-resampling attempts for the random families.
pub const MAX_GENERATION_ATTEMPTS: usize = 1000;

/// A weighted undirected graph on vertices `0..n`.
///
/// The adjacency matrix is stored densely; a neighbor list is kept alongside
/// it so the consensus step can run over edges only.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    adjacency: DMatrix<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    /// Builds a graph from a dense adjacency matrix, checking symmetry, zero
    /// diagonal and non-negative finite weights.
    pub fn from_adjacency(adjacency: DMatrix<f64>) -> Result<Self> {
        let n = adjacency.nrows();
        if n == 0 || adjacency.ncols() != n {
            return param_err(format!(
                "adjacency must be a non-empty square matrix, got {}x{}",
                adjacency.nrows(),
                adjacency.ncols()
            ));
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return param_err(format!("self-loop at vertex {i}"));
            }
            for j in (i + 1)..n {
                let w = adjacency[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return param_err(format!("weight ({i},{j}) = {w} is not a non-negative number"));
                }
                if w != adjacency[(j, i)] {
                    return param_err(format!("adjacency is not symmetric at ({i},{j})"));
                }
            }
        }
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| adjacency[(i, j)] > 0.0).map(|j| (j, adjacency[(i, j)])).collect())
            .collect();
        Ok(Self { n, adjacency, neighbors })
    }

    /// Builds a graph from an undirected edge list `(i, j, w)`. Repeated edges
    /// are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return param_err("graph needs at least one vertex");
        }
        let mut adjacency = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return param_err(format!("edge ({i},{j}) out of range for n = {n}"));
            }
            if i == j {
                return param_err(format!("self-loop at vertex {i}"));
            }
            if !(w.is_finite() && w > 0.0) {
                return param_err(format!("edge ({i},{j}) has non-positive weight {w}"));
            }
            if adjacency[(i, j)] != 0.0 {
                return param_err(format!("duplicate edge ({i},{j})"));
            }
            adjacency[(i, j)] = w;
            adjacency[(j, i)] = w;
        }
        Self::from_adjacency(adjacency)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    /// Weighted neighbors of vertex `i`.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    /// Edges `(i, j, w)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for &(j, w) in &self.neighbors[i] {
                if i < j {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.neighbors[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn max_degree(&self) -> f64 {
        (0..self.n).map(|i| self.degree(i)).fold(0.0, f64::max)
    }

    /// Breadth-first connectivity check; any positive weight counts as an edge.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &self.neighbors[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.n
    }

    /// Returns a copy with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return param_err(format!("scale factor must be positive, got {factor}"));
        }
        Self::from_adjacency(&self.adjacency * factor)
    }

    /// The Laplacian `L = D − A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = -self.adjacency.clone();
        for i in 0..self.n {
            l[(i, i)] = self.degree(i);
        }
        l
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson { n: self.n, edges: self.edges().into_iter().collect() }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        for &(i, j, _) in &json.edges {
            if i >= j {
                return param_err(format!("edge [{i}, {j}] must satisfy i < j"));
            }
        }
        Self::from_edges(json.n, &json.edges)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let json: GraphJson = serde_json::from_str(&text)?;
        Self::from_json(&json)
    }
}

/// Free-function form of [`Graph::laplacian`].
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    g.laplacian()
}

/// On-disk graph format: `{"n": <int>, "edges": [[i, j, w], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

/// A graph family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphSpec {
    Complete {
        n: usize,
    },
    CompleteBipartite {
        m: usize,
        n: usize,
    },
    /// Vertex 0 is the center, joined to vertices `1..n`.
    Star {
        n: usize,
    },
    Cycle {
        n: usize,
    },
    Path {
        n: usize,
    },
    /// Ring lattice with `k` nearest neighbors, each edge rewired with probability `p`.
    WattsStrogatz {
        n: usize,
        k: usize,
        p: f64,
    },
    /// Erdős–Rényi `G(n, p)` conditioned on connectivity.
    RandomConnected {
        n: usize,
        p: f64,
    },
}

impl GraphSpec {
    /// Default small-world parameters for the 12-agent experiments.
    pub const SMALL_WORLD_DEFAULT: GraphSpec = GraphSpec::WattsStrogatz { n: 12, k: 4, p: 0.3 };

    pub fn is_random(&self) -> bool {
        matches!(self, GraphSpec::WattsStrogatz { .. } | GraphSpec::RandomConnected { .. })
    }

    pub fn vertex_count(&self) -> usize {
        match *self {
            GraphSpec::CompleteBipartite { m, n } => m + n,
            GraphSpec::Complete { n }
            | GraphSpec::Star { n }
            | GraphSpec::Cycle { n }
            | GraphSpec::Path { n }
            | GraphSpec::WattsStrogatz { n, .. }
            | GraphSpec::RandomConnected { n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GraphSpec::Complete { n } | GraphSpec::Star { n } | GraphSpec::Path { n } if n < 2 => {
                param_err(format!("{self} needs N >= 2"))
            }
            GraphSpec::Cycle { n } if n < 3 => param_err(format!("{self} needs N >= 3")),
            GraphSpec::CompleteBipartite { m, n } if m < 1 || n < 1 => param_err(format!("{self} needs M, N >= 1")),
            GraphSpec::WattsStrogatz { n, k, p } => {
                if k == 0 || k % 2 != 0 || k >= n {
                    param_err(format!("{self}: neighbor count k must be even with 0 < k < N"))
                } else if !(0.0..=1.0).contains(&p) {
                    param_err(format!("{self}: rewiring probability must lie in [0, 1]"))
                } else {
                    Ok(())
                }
            }
            GraphSpec::RandomConnected { n, p } => {
                if n < 2 {
                    param_err(format!("{self} needs N >= 2"))
                } else if !(p > 0.0 && p <= 1.0) {
                    param_err(format!("{self}: edge probability must lie in (0, 1]"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Builds the graph. `seed` is only consulted by the random families, whose
    /// output is a deterministic function of `(self, seed)`.
    pub fn build(&self, seed: u64) -> Result<Graph> {
        self.validate()?;
        match *self {
            GraphSpec::Complete { n } => {
                let edges: Vec<_> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j, 1.0))).collect();
                Graph::from_edges(n, &edges)
            }
            GraphSpec::CompleteBipartite { m, n } => {
                let edges: Vec<_> = (0..m).flat_map(|i| (m..m + n).map(move |j| (i, j, 1.0))).collect();
                Graph::from_edges(m + n, &edges)
            }
            GraphSpec::Star { n } => {
                let edges: Vec<_> = (1..n).map(|j| (0, j, 1.0)).collect();
                Graph::from_edges(n, &edges)
            }
            GraphSpec::Cycle { n } => {
                let edges: Vec<_> = (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n), 1.0)).collect();
                Graph::from_edges(n, &edges)
            }
            GraphSpec::Path { n } => {
                let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
                Graph::from_edges(n, &edges)
            }
            GraphSpec::WattsStrogatz { n, k, p } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                retry_until_connected(self, || watts_strogatz(n, k, p, &mut rng))
            }
            GraphSpec::RandomConnected { n, p } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                retry_until_connected(self, || erdos_renyi(n, p, &mut rng))
            }
        }
    }
}

/// Free-function form of [`GraphSpec::build`].
pub fn build_graph(spec: GraphSpec, seed: u64) -> Result<Graph> {
    spec.build(seed)
}

fn retry_until_connected(spec: &GraphSpec, mut sample: impl FnMut() -> Result<Graph>) -> Result<Graph> {
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let g = sample()?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Generation(format!("{spec}: no connected sample in {MAX_GENERATION_ATTEMPTS} attempts")))
}

fn erdos_renyi(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Result<Graph> {
    let mut adjacency = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                adjacency[(i, j)] = 1.0;
                adjacency[(j, i)] = 1.0;
            }
        }
    }
    Graph::from_adjacency(adjacency)
}

fn watts_strogatz(n: usize, k: usize, p: f64, rng: &mut ChaCha8Rng) -> Result<Graph> {
    let mut adjacency: DMatrix<f64> = DMatrix::zeros(n, n);
    for i in 0..n {
        for step in 1..=k / 2 {
            let j = (i + step) % n;
            adjacency[(i, j)] = 1.0;
            adjacency[(j, i)] = 1.0;
        }
    }
    // Rewire lattice edges in a fixed order: by offset, then by source vertex.
    for step in 1..=k / 2 {
        for i in 0..n {
            let j = (i + step) % n;
            if adjacency[(i, j)] == 0.0 || rng.gen::<f64>() >= p {
                continue;
            }
            let free: Vec<usize> = (0..n).filter(|&t| t != i && adjacency[(i, t)] == 0.0).collect();
            if free.is_empty() {
                continue;
            }
            let t = free[rng.gen_range(0..free.len())];
            adjacency[(i, j)] = 0.0;
            adjacency[(j, i)] = 0.0;
            adjacency[(i, t)] = 1.0;
            adjacency[(t, i)] = 1.0;
        }
    }
    Graph::from_adjacency(adjacency)
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GraphSpec::Complete { n } => write!(f, "complete:{n}"),
            GraphSpec::CompleteBipartite { m, n } => write!(f, "complete_bipartite:{m},{n}"),
            GraphSpec::Star { n } => write!(f, "star:{n}"),
            GraphSpec::Cycle { n } => write!(f, "cycle:{n}"),
            GraphSpec::Path { n } => write!(f, "path:{n}"),
            GraphSpec::WattsStrogatz { n, k, p } => write!(f, "watts_strogatz:{n},{k},{p}"),
            GraphSpec::RandomConnected { n, p } => write!(f, "random_connected:{n},{p}"),
        }
    }
}

/// Parses `family:params`, e.g. `star:12`, `complete_bipartite:3,4`,
/// `watts_strogatz:12,4,0.3`, `random_connected:100,0.06`.
impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, args) = s.split_once(':').unwrap_or((s, ""));
        let args: Vec<&str> = if args.is_empty() { Vec::new() } else { args.split(',').map(str::trim).collect() };
        let int = |idx: usize| -> Result<usize> {
            args.get(idx)
                .ok_or_else(|| Error::Parameter(format!("{family}: missing parameter #{}", idx + 1)))?
                .parse()
                .map_err(|_| Error::Parameter(format!("{family}: parameter #{} is not an integer", idx + 1)))
        };
        let real = |idx: usize| -> Result<f64> {
            args.get(idx)
                .ok_or_else(|| Error::Parameter(format!("{family}: missing parameter #{}", idx + 1)))?
                .parse()
                .map_err(|_| Error::Parameter(format!("{family}: parameter #{} is not a number", idx + 1)))
        };
        let expect = |count: usize| -> Result<()> {
            if args.len() == count {
                Ok(())
            } else {
                param_err(format!("{family} takes {count} parameter(s), got {}", args.len()))
            }
        };
        let spec = match family {
            "complete" => {
                expect(1)?;
                GraphSpec::Complete { n: int(0)? }
            }
            "complete_bipartite" | "bipartite" => {
                expect(2)?;
                GraphSpec::CompleteBipartite { m: int(0)?, n: int(1)? }
            }
            "star" => {
                expect(1)?;
                GraphSpec::Star { n: int(0)? }
            }
            "cycle" => {
                expect(1)?;
                GraphSpec::Cycle { n: int(0)? }
            }
            "path" => {
                expect(1)?;
                GraphSpec::Path { n: int(0)? }
            }
            "watts_strogatz" | "small_world" => {
                if args.is_empty() {
                    GraphSpec::SMALL_WORLD_DEFAULT
                } else {
                    expect(3)?;
                    GraphSpec::WattsStrogatz { n: int(0)?, k: int(1)?, p: real(2)? }
                }
            }
            "random_connected" | "erdos_renyi" => {
                expect(2)?;
                GraphSpec::RandomConnected { n: int(0)?, p: real(1)? }
            }
            other => return param_err(format!("unknown graph family '{other}'")),
        };
        spec.validate()?;
        Ok(spec)
    }
}
