//! Self-avoiding walks of length `d(x,y)` and the walk classes that enter
//! the fractional-moment bounds.
//!
//! A walk `[v0, ..., vL]` is grown one step at a time. Before step `i` the
//! edges attached to `v0, ..., v(i-2)` have been removed (the depletion
//! mask), and the step `v(i-1) -> vi` must use a surviving edge. Walks of
//! length `d = d(x,y)` from `x` split into three classes relative to `y`:
//!
//! * `Y`: the walk ends at `y`;
//! * `X`: it ends elsewhere but the endpoint is still connected to `y` once
//!   all edges attached to `v0, ..., v(d-1)` are deleted;
//! * `XBar`: the endpoint is cut off from `y` and the walk contributes
//!   nothing to the Green's function.

use std::collections::VecDeque;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};

/// Default budget on walks enumerated per source vertex.
pub const DEFAULT_WALK_LIMIT: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SawWalk {
    vertices: Vec<Vertex>,
}

impl SawWalk {
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn source(&self) -> Vertex {
        self.vertices[0]
    }

    pub fn end(&self) -> Vertex {
        *self.vertices.last().expect("walks are never empty")
    }
}

/// Set of removed edges, stored as the vertices whose incident edges are
/// all gone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepletionMask {
    depleted: Vec<bool>,
    order: Vec<Vertex>,
}

impl DepletionMask {
    pub fn empty(vertex_count: usize) -> Self {
        DepletionMask { depleted: vec![false; vertex_count], order: Vec::new() }
    }

    /// Removes every edge attached to any of `vertices`.
    pub fn from_vertices(vertex_count: usize, vertices: &[Vertex]) -> Self {
        let mut mask = Self::empty(vertex_count);
        for &v in vertices {
            mask.deplete(v);
        }
        mask
    }

    /// Mask in force after visiting `prefix`: edges attached to every
    /// vertex but the last are removed.
    pub fn after_prefix(vertex_count: usize, prefix: &[Vertex]) -> Self {
        let head = prefix.len().saturating_sub(1);
        Self::from_vertices(vertex_count, &prefix[..head])
    }

    /// Adds `v` to the depleted set. The mask only ever grows.
    pub fn deplete(&mut self, v: Vertex) {
        if !self.depleted[v] {
            self.depleted[v] = true;
            self.order.push(v);
        }
    }

    pub fn is_depleted(&self, v: Vertex) -> bool {
        self.depleted[v]
    }

    pub fn depleted_vertices(&self) -> &[Vertex] {
        &self.order
    }

    pub fn removes(&self, u: Vertex, v: Vertex) -> bool {
        self.depleted[u] || self.depleted[v]
    }

    pub fn removed_edges(&self, graph: &Graph) -> Vec<(Vertex, Vertex)> {
        graph.edges().filter(|&(u, v)| self.removes(u, v)).collect()
    }

    /// Connected component of `start` in the graph with the masked edges
    /// deleted, as a membership vector.
    pub fn component(&self, graph: &Graph, start: Vertex) -> Vec<bool> {
        let mut seen = vec![false; graph.vertex_count()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            if self.depleted[u] {
                continue;
            }
            for &w in graph.neighbors(u) {
                if !seen[w] && !self.depleted[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WalkClass {
    Y,
    X,
    XBar,
}

/// Per-pair walk census: `|𝒴|`, `|𝒳|`, `|𝒳̄|` and `|𝒲′| = |𝒴| + |𝒳|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WalkClassCounts {
    pub source: Vertex,
    pub target: Vertex,
    pub d: usize,
    pub y_count: usize,
    pub x_count: usize,
    pub xbar_count: usize,
    pub w_prime_count: usize,
}

/// Visits every depletion-consistent self-avoiding walk of `length` steps
/// from `source`, in lexicographic order. Returns the number visited, or an
/// error once more than `limit` walks have been seen.
pub fn visit_saws<F>(graph: &Graph, source: Vertex, length: usize, limit: usize, mut visit: F) -> Result<usize>
where
    F: FnMut(&[Vertex]),
{
    let mut walk = vec![source];
    let mut on_walk = vec![false; graph.vertex_count()];
    on_walk[source] = true;
    let mut mask = DepletionMask::empty(graph.vertex_count());
    let mut count = 0;
    extend_walk(graph, length, limit, &mut walk, &mut on_walk, &mut mask, &mut count, &mut visit)?;
    Ok(count)
}

#[allow(clippy::too_many_arguments)]
fn extend_walk<F>(
    graph: &Graph,
    length: usize,
    limit: usize,
    walk: &mut Vec<Vertex>,
    on_walk: &mut [bool],
    mask: &mut DepletionMask,
    count: &mut usize,
    visit: &mut F,
) -> Result<()>
where
    F: FnMut(&[Vertex]),
{
    if walk.len() == length + 1 {
        *count += 1;
        if *count > limit {
            return Err(Error::EnumerationLimit { start: walk[0], length, limit });
        }
        visit(walk);
        return Ok(());
    }
    // Mask for the prefix `walk`: edges at every vertex but the tip are gone.
    let newly_depleted = (walk.len() >= 2).then(|| walk[walk.len() - 2]);
    if let Some(v) = newly_depleted {
        mask.depleted[v] = true;
    }
    let tip = *walk.last().unwrap();
    let mut outcome = Ok(());
    for &next in graph.neighbors(tip) {
        if on_walk[next] || mask.removes(tip, next) {
            continue;
        }
        walk.push(next);
        on_walk[next] = true;
        outcome = extend_walk(graph, length, limit, walk, on_walk, mask, count, visit);
        on_walk[next] = false;
        walk.pop();
        if outcome.is_err() {
            break;
        }
    }
    if let Some(v) = newly_depleted {
        mask.depleted[v] = false;
    }
    outcome
}

/// All depletion-consistent self-avoiding walks of `length` steps from
/// `source`, lexicographically ordered.
pub fn enumerate_saws(graph: &Graph, source: Vertex, length: usize) -> Vec<SawWalk> {
    let mut walks = Vec::new();
    visit_saws(graph, source, length, usize::MAX, |w| walks.push(SawWalk { vertices: w.to_vec() }))
        .expect("unbounded enumeration cannot hit its limit");
    walks
}

pub fn classify_walk(graph: &Graph, walk: &[Vertex], target: Vertex) -> WalkClass {
    let end = *walk.last().expect("walks are never empty");
    if end == target {
        return WalkClass::Y;
    }
    let mask = DepletionMask::after_prefix(graph.vertex_count(), walk);
    if mask.component(graph, end)[target] {
        WalkClass::X
    } else {
        WalkClass::XBar
    }
}

pub fn classify_walks(graph: &Graph, source: Vertex, target: Vertex) -> Result<WalkClassCounts> {
    if source == target {
        return Err(Error::Domain("walk classes need source != target".into()));
    }
    let d = graph.distance(source, target);
    let mut counts = WalkClassCounts {
        source,
        target,
        d,
        y_count: 0,
        x_count: 0,
        xbar_count: 0,
        w_prime_count: 0,
    };
    visit_saws(graph, source, d, usize::MAX, |walk| match classify_walk(graph, walk, target) {
        WalkClass::Y => counts.y_count += 1,
        WalkClass::X => counts.x_count += 1,
        WalkClass::XBar => counts.xbar_count += 1,
    })?;
    counts.w_prime_count = counts.y_count + counts.x_count;
    Ok(counts)
}

/// `|𝒲′(source, y)|` for every `y` at distance `d` from `source`, indexed by
/// vertex (zero elsewhere). One connectivity search per walk serves all
/// targets on the sphere.
pub fn w_prime_counts_at(graph: &Graph, source: Vertex, d: usize, limit: usize) -> Result<Vec<usize>> {
    let n = graph.vertex_count();
    let dist = graph.distances_from(source);
    let targets: Vec<Vertex> = (0..n).filter(|&y| dist[y] as usize == d).collect();
    let mut counts = vec![0usize; n];
    if targets.is_empty() {
        return Ok(counts);
    }
    visit_saws(graph, source, d, limit, |walk| {
        let mask = DepletionMask::after_prefix(n, walk);
        let reach = mask.component(graph, *walk.last().unwrap());
        for &y in &targets {
            if reach[y] {
                counts[y] += 1;
            }
        }
    })?;
    Ok(counts)
}

/// `𝒲(d) = max { |𝒲′(v,w)| : d(v,w) = d }`, zero when no pair is at
/// distance `d`. The scan over sources runs in parallel.
pub fn script_w(graph: &Graph, d: usize) -> Result<usize> {
    script_w_limited(graph, d, DEFAULT_WALK_LIMIT)
}

pub fn script_w_limited(graph: &Graph, d: usize, limit: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::Domain("𝒲(d) is defined for d >= 1".into()));
    }
    let per_source: Result<Vec<usize>> = (0..graph.vertex_count())
        .into_par_iter()
        .map(|x| w_prime_counts_at(graph, x, d, limit).map(|c| c.into_iter().max().unwrap_or(0)))
        .collect();
    Ok(per_source?.into_iter().max().unwrap_or(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CensusRow {
    pub d: usize,
    pub script_w: usize,
    pub script_s: usize,
}

/// Table of `(d, 𝒲(d), 𝒮(d))` for `d = 0..=depth`. Row 0 carries
/// `𝒲(0) = 𝒮(0) = 1` (the zero-step walk sits on its own target).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkCensus {
    pub rows: Vec<CensusRow>,
}

impl WalkCensus {
    /// Census up to `min(max_depth, diameter)`.
    pub fn build(graph: &Graph, max_depth: usize) -> Result<Self> {
        Self::build_limited(graph, max_depth, DEFAULT_WALK_LIMIT)
    }

    pub fn build_limited(graph: &Graph, max_depth: usize, limit: usize) -> Result<Self> {
        let depth = max_depth.min(graph.diameter());
        let mut rows = vec![CensusRow { d: 0, script_w: 1, script_s: 1 }];
        for d in 1..=depth {
            rows.push(CensusRow {
                d,
                script_w: script_w_limited(graph, d, limit)?,
                script_s: graph.script_s(d),
            });
        }
        Ok(WalkCensus { rows })
    }

    /// Largest distance covered.
    pub fn depth(&self) -> usize {
        self.rows.last().map_or(0, |r| r.d)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "d,script_W,script_S")?;
        for row in &self.rows {
            writeln!(out, "{},{},{}", row.d, row.script_w, row.script_s)?;
        }
        Ok(())
    }
}
