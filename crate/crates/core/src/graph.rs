//! Undirected graphs with optional self-loops.
//!
//! Adjacency is stored in compressed form: `offsets[u]..offsets[u + 1]` is the
//! slice of `targets` holding the sorted neighbor list of `u`. A self-loop
//! appears once in the list of its node and adds one to the degree.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    allows_self_loops: bool,
}

impl Graph {
    /// Builds a graph from an edge list. Edges are symmetrized and duplicates
    /// collapsed. Every node must end up with at least one neighbor.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], allows_self_loops: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                if !allows_self_loops {
                    return Err(Error::invalid(format!("self-loop at node {u} not allowed")));
                }
                adj[u].push(u);
            } else {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            if list.is_empty() {
                return Err(Error::invalid(format!("node {u} is isolated")));
            }
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        Ok(Graph { offsets, targets, allows_self_loops })
    }

    /// Complete graph on `n` nodes, optionally with a loop at every node.
    pub fn clique(n: usize, with_loops: bool) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("clique needs n >= 2, got {n}")));
        }
        let mut edges = Vec::with_capacity(n * (n + 1) / 2);
        for u in 0..n {
            if with_loops {
                edges.push((u, u));
            }
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Self::from_edges(n, &edges, with_loops)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid(format!("cycle needs n >= 3, got {n}")));
        }
        let edges: Vec<_> = (0..n).map(|u| (u, (u + 1) % n)).collect();
        Self::from_edges(n, &edges, false)
    }

    /// Star with hub 0 and leaves `1..n`.
    pub fn star(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("star needs n >= 2, got {n}")));
        }
        let edges: Vec<_> = (1..n).map(|v| (0, v)).collect();
        Self::from_edges(n, &edges, false)
    }

    /// Parses the edge-list format: a `n=<count>` header, then one `u v` pair
    /// per line. `#` starts a comment line; blank lines are skipped. A line
    /// `u u` declares a self-loop.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        let mut loops = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            let Some(count) = n else {
                let value = line
                    .strip_prefix("n=")
                    .ok_or_else(|| parse_err(format!("expected `n=<count>`, found `{line}`")))?;
                let count: usize = value
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(format!("invalid node count `{value}`")))?;
                if count == 0 {
                    return Err(parse_err("node count must be positive".into()));
                }
                n = Some(count);
                continue;
            };
            let mut fields = line.split_whitespace();
            let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(format!("expected `<u> <v>`, found `{line}`")));
            };
            let index = |s: &str| -> Result<usize> {
                let v: usize = s.parse().map_err(|_| parse_err(format!("invalid node index `{s}`")))?;
                if v >= count {
                    return Err(parse_err(format!("index {v} out of range for n = {count}")));
                }
                Ok(v)
            };
            let (u, v) = (index(a)?, index(b)?);
            loops |= u == v;
            edges.push((u, v));
        }
        let n = n.ok_or(Error::Parse { line: 0, message: "missing `n=<count>` header".into() })?;
        Self::from_edges(n, &edges, loops).map_err(|e| match e {
            Error::InvalidParameter(message) => Error::Parse { line: 0, message },
            other => other,
        })
    }

    /// Canonical edge-list serialization (`u <= v`, ascending).
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n={}\n", self.n());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn allows_self_loops(&self) -> bool {
        self.allows_self_loops
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|u| self.degree(u)).collect()
    }

    /// Sum of degrees (the graph volume).
    pub fn volume(&self) -> usize {
        self.targets.len()
    }

    /// Undirected edges with `u <= v`, each listed once.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u).iter().filter(move |&&v| v >= u).map(move |&v| (u, v))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// The common degree when the graph is regular.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        (1..self.n()).all(|u| self.degree(u) == d).then_some(d)
    }

    /// Number of edges with exactly one endpoint in `subset`.
    pub fn cut_size(&self, subset: &[usize]) -> usize {
        let mut inside = vec![false; self.n()];
        for &u in subset {
            inside[u] = true;
        }
        (0..self.n())
            .filter(|&u| inside[u])
            .map(|u| self.neighbors(u).iter().filter(|&&v| !inside[v]).count())
            .sum()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == n
    }

    /// Bipartite check by BFS 2-colouring (a self-loop makes a graph non-bipartite).
    pub fn is_bipartite(&self) -> bool {
        let n = self.n();
        let mut colour = vec![u8::MAX; n];
        for start in 0..n {
            if colour[start] != u8::MAX {
                continue;
            }
            colour[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if colour[v] == u8::MAX {
                        colour[v] = 1 - colour[u];
                        queue.push_back(v);
                    } else if colour[v] == colour[u] {
                        return false;
                    }
                }
            }
        }
        true
    }
}
