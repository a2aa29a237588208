use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Attempts made by `gnp` before giving up on connectivity.
pub const GNP_MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unparsable graph spec {0:?}")]
    Spec(String),
    #[error("graph needs n >= {min}, got {n}")]
    TooSmall { n: usize, min: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(u32),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(u32, u32),
    #[error("edge {0}-{1} references a node outside 0..{2}")]
    NodeOutOfRange(u32, u32, usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("gnp:{n}:{p} not connected after {attempts} attempts")]
    GnpNotConnected { n: usize, p: f64, attempts: usize },
    #[error("graph file {path}: {msg}")]
    File { path: PathBuf, msg: String },
}

/// Connected simple undirected graph on nodes `0..n`.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    edge_set: HashSet<(u32, u32)>,
    tag: String,
}

fn key(u: u32, v: u32) -> (u32, u32) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edge_set == other.edge_set
    }
}

impl Eq for Graph {}

impl Graph {
    /// Validates and builds a graph. Edges are kept in the given order,
    /// which fixes how the scheduler indexes them.
    pub fn new(n: usize, edges: Vec<(u32, u32)>, tag: impl Into<String>) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooSmall { n, min: 2 });
        }
        let mut edge_set = HashSet::with_capacity(edges.len());
        for &(u, v) in &edges {
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::NodeOutOfRange(u, v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !edge_set.insert(key(u, v)) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
        }
        let g = Self { n, edges, edge_set, tag: tag.into() };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                edges.push((u, v));
            }
        }
        Self::new(n, edges, format!("complete:{n}"))
    }

    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        if n < 3 {
            return Err(GraphError::TooSmall { n, min: 3 });
        }
        let edges = (0..n as u32).map(|u| (u, (u + 1) % n as u32)).collect();
        Self::new(n, edges, format!("cycle:{n}"))
    }

    pub fn path(n: usize) -> Result<Self, GraphError> {
        let edges = (1..n as u32).map(|u| (u - 1, u)).collect();
        Self::new(n, edges, format!("path:{n}"))
    }

    pub fn star(n: usize) -> Result<Self, GraphError> {
        let edges = (1..n as u32).map(|u| (0, u)).collect();
        Self::new(n, edges, format!("star:{n}"))
    }

    /// Erdos-Renyi graph, resampled until connected.
    pub fn gnp<R: Rng>(n: usize, p: f64, rng: &mut R) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphError::Spec(format!("gnp:{n}:{p}")));
        }
        if n < 2 {
            return Err(GraphError::TooSmall { n, min: 2 });
        }
        for _ in 0..GNP_MAX_ATTEMPTS {
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    if rng.random_bool(p) {
                        edges.push((u, v));
                    }
                }
            }
            match Self::new(n, edges, format!("gnp:{n}:{p}")) {
                Ok(g) => return Ok(g),
                Err(GraphError::Disconnected) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(GraphError::GnpNotConnected { n, p, attempts: GNP_MAX_ATTEMPTS })
    }

    /// Reads a `u v` edge list; `#` starts a comment. `n` is one more than
    /// the largest node id.
    pub fn from_file(path: &Path) -> Result<Self, GraphError> {
        let file_err = |msg: String| GraphError::File { path: path.to_path_buf(), msg };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                [u, v] => u.parse::<u32>().ok().zip(v.parse::<u32>().ok()),
                _ => None,
            };
            let (u, v) = parsed.ok_or_else(|| file_err(format!("line {}: expected `u v`", lineno + 1)))?;
            edges.push((u, v));
        }
        let n = edges.iter().map(|&(u, v)| u.max(v) as usize + 1).max().unwrap_or(0);
        Self::new(n, edges, format!("file:{}", path.display())).map_err(|e| match e {
            GraphError::Disconnected => GraphError::Disconnected,
            other => file_err(other.to_string()),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.edge_set.contains(&key(u, v))
    }

    pub fn degree(&self, v: u32) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    queue.push_back(v as usize);
                }
            }
        }
        count == self.n
    }

    /// Replaces edge `i` with `(u, v)` without validation; callers keep the
    /// graph simple and check connectivity.
    pub(crate) fn replace_edge(&mut self, i: usize, u: u32, v: u32) {
        let (a, b) = self.edges[i];
        self.edge_set.remove(&key(a, b));
        self.edges[i] = (u, v);
        self.edge_set.insert(key(u, v));
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag)
    }
}

/// Graph family without a size, as used by sweeps: `complete`, `cycle`,
/// `path`, `star`, `gnp:p`.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphFamily {
    Complete,
    Cycle,
    Path,
    Star,
    Gnp(f64),
}

impl GraphFamily {
    pub fn spec(&self, n: usize) -> GraphSpec {
        match *self {
            GraphFamily::Complete => GraphSpec::Complete(n),
            GraphFamily::Cycle => GraphSpec::Cycle(n),
            GraphFamily::Path => GraphSpec::Path(n),
            GraphFamily::Star => GraphSpec::Star(n),
            GraphFamily::Gnp(p) => GraphSpec::Gnp(n, p),
        }
    }
}

impl FromStr for GraphFamily {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["complete"] => Ok(GraphFamily::Complete),
            ["cycle"] => Ok(GraphFamily::Cycle),
            ["path"] => Ok(GraphFamily::Path),
            ["star"] => Ok(GraphFamily::Star),
            ["gnp", p] => p.parse().map(GraphFamily::Gnp).map_err(|_| GraphError::Spec(s.into())),
            _ => Err(GraphError::Spec(s.into())),
        }
    }
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphFamily::Complete => f.write_str("complete"),
            GraphFamily::Cycle => f.write_str("cycle"),
            GraphFamily::Path => f.write_str("path"),
            GraphFamily::Star => f.write_str("star"),
            GraphFamily::Gnp(p) => write!(f, "gnp:{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Complete(usize),
    Cycle(usize),
    Path(usize),
    Star(usize),
    Gnp(usize, f64),
    File(PathBuf),
}

impl FromStr for GraphSpec {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || GraphError::Spec(s.to_string());
        if let Some(path) = s.trim().strip_prefix("file:") {
            return Ok(GraphSpec::File(PathBuf::from(path)));
        }
        let parts: Vec<&str> = s.trim().split(':').collect();
        let n = |x: &str| x.parse::<usize>().map_err(|_| err());
        match parts.as_slice() {
            ["complete", x] => Ok(GraphSpec::Complete(n(x)?)),
            ["cycle", x] => Ok(GraphSpec::Cycle(n(x)?)),
            ["path", x] => Ok(GraphSpec::Path(n(x)?)),
            ["star", x] => Ok(GraphSpec::Star(n(x)?)),
            ["gnp", x, p] => Ok(GraphSpec::Gnp(n(x)?, p.parse().map_err(|_| err())?)),
            _ => Err(err()),
        }
    }
}

impl GraphSpec {
    pub fn build(&self, seed: u64) -> Result<Graph, GraphError> {
        match self {
            GraphSpec::Complete(n) => Graph::complete(*n),
            GraphSpec::Cycle(n) => Graph::cycle(*n),
            GraphSpec::Path(n) => Graph::path(*n),
            GraphSpec::Star(n) => Graph::star(*n),
            GraphSpec::Gnp(n, p) => Graph::gnp(*n, *p, &mut ChaCha8Rng::seed_from_u64(seed)),
            GraphSpec::File(path) => Graph::from_file(path),
        }
    }
}

/// Builds a graph from `complete:n`, `cycle:n`, `path:n`, `star:n`,
/// `gnp:n:p` or `file:path`. Only `gnp` consumes the seed.
pub fn build_graph(spec: &str, seed: u64) -> Result<Graph, GraphError> {
    spec.parse::<GraphSpec>()?.build(seed)
}
