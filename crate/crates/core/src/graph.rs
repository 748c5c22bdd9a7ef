//! Undirected simple graphs on `p` nodes (0-based) and edge-list files.
//!
//! Edge-list format: a header line `# p=<count>`, then one `<i>\t<j>` line per
//! edge with `i < j`, sorted lexicographically. Further `#` lines and blank
//! lines are ignored on read; the reader also accepts space separators and
//! either endpoint order, but rejects duplicates.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stat::PrecisionModel;

/// Default absolute tolerance for reading edges off a precision matrix.
pub const SUPPORT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<BTreeSet<usize>>,
}

impl Graph {
    pub fn empty(p: usize) -> Self {
        Self {
            adj: vec![BTreeSet::new(); p],
        }
    }

    pub fn complete(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::invalid(format!("complete graph needs p >= 2, got {p}")));
        }
        let adj = (0..p).map(|i| (0..p).filter(|&j| j != i).collect()).collect();
        Ok(Self { adj })
    }

    pub fn from_edges(p: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::empty(p);
        for (i, j) in edges {
            if !g.add_edge(i, j)? {
                return Err(Error::invalid(format!("duplicate edge {}-{}", i.min(j), i.max(j))));
            }
        }
        Ok(g)
    }

    /// Edge `i-j` present iff `|Θ_ij| > tol`.
    pub fn from_precision(model: &PrecisionModel, tol: f64) -> Result<Self> {
        if !(tol >= 0.0) {
            return Err(Error::invalid("support tolerance must be nonnegative"));
        }
        let theta = model.theta();
        let p = model.p();
        let mut g = Self::empty(p);
        for i in 0..p {
            for j in (i + 1)..p {
                if theta[(i, j)].abs() > tol {
                    g.add_edge(i, j)?;
                }
            }
        }
        Ok(g)
    }

    pub fn p(&self) -> usize {
        self.adj.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        let p = self.p();
        if i >= p || j >= p {
            return Err(Error::invalid(format!("edge {i}-{j} out of range for p = {p}")));
        }
        if i == j {
            return Err(Error::invalid(format!("self-loop at node {i}")));
        }
        Ok(())
    }

    /// Inserts `i-j`; returns false if it was already present.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<bool> {
        self.check_pair(i, j)?;
        let fresh = self.adj[i].insert(j);
        self.adj[j].insert(i);
        Ok(fresh)
    }

    /// Removes `i-j`; returns false if it was absent.
    pub fn remove_edge(&mut self, i: usize, j: usize) -> bool {
        if i >= self.p() || j >= self.p() {
            return false;
        }
        let present = self.adj[i].remove(&j);
        self.adj[j].remove(&i);
        present
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj.get(i).is_some_and(|a| a.contains(&j))
    }

    /// Sorted neighbours of `i`.
    pub fn neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, a)| a.range(i + 1..).map(move |&j| (i, j)))
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# p={}\n", self.p());
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{i}\t{j}");
        }
        out
    }

    /// Parses the edge-list format; `origin` only labels error messages.
    pub fn parse_edge_list(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let p = loop {
            let Some((no, line)) = lines.next() else {
                return Err(Error::parse(origin, 1, "missing '# p=<count>' header"));
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let value = line
                .strip_prefix('#')
                .map(str::trim)
                .and_then(|rest| rest.strip_prefix("p="))
                .ok_or_else(|| Error::parse(origin, no + 1, "expected '# p=<count>' header"))?;
            break value
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::parse(origin, no + 1, format!("bad node count: {e}")))?;
        };
        let mut g = Self::empty(p);
        for (no, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [a, b] = fields[..] else {
                return Err(Error::parse(
                    origin,
                    no + 1,
                    format!("expected two node indices, got {line:?}"),
                ));
            };
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::parse(origin, no + 1, format!("bad node index {s:?}: {e}")))
            };
            let (i, j) = (parse(a)?, parse(b)?);
            match g.add_edge(i, j) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(Error::parse(
                        origin,
                        no + 1,
                        format!("duplicate edge {}-{}", i.min(j), i.max(j)),
                    ))
                }
                Err(e) => return Err(Error::parse(origin, no + 1, e.to_string())),
            }
        }
        Ok(g)
    }

    pub fn read_edge_list(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_edge_list(&text, path)
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list()).map_err(|e| Error::io(path, e))
    }
}

/// Edge-level confusion counts over the `p(p-1)/2` unordered pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion(estimated: &Graph, truth: &Graph) -> Result<ConfusionCounts> {
    let p = truth.p();
    if estimated.p() != p {
        return Err(Error::invalid(format!(
            "graphs have different node counts ({} vs {p})",
            estimated.p()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (i, j) in estimated.edges() {
        if truth.has_edge(i, j) {
            c.tp += 1;
        } else {
            c.fp += 1;
        }
    }
    c.fn_ = truth.n_edges() as u64 - c.tp;
    let pairs = (p * p.saturating_sub(1) / 2) as u64;
    c.tn = pairs - c.tp - c.fp - c.fn_;
    Ok(c)
}
