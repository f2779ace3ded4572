//! Finite simple graphs with a uniform degree bound, the builders used in the
//! experiments, and the distance/sphere machinery (`S(v,d)`, `B(v,d)`,
//! `𝒮(d)`) that the localization criterion consumes.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = usize;

/// Graph families with dedicated builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Path { n: usize },
    Cycle { n: usize },
    /// `side × side` square grid, vertex id `row * side + col`.
    Grid2d { side: usize },
    /// Complete `branching`-ary tree truncated at `depth`; the root has
    /// `branching` neighbours, internal vertices `branching + 1`.
    RegularTree { branching: usize, depth: usize },
    /// Cycle on `n` vertices plus `shortcuts` random chords.
    CycleShortcut { n: usize, shortcuts: usize, seed: u64 },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::Path { n } => write!(f, "path:{n}"),
            Family::Cycle { n } => write!(f, "cycle:{n}"),
            Family::Grid2d { side } => write!(f, "grid2d:{side}"),
            Family::RegularTree { branching, depth } => write!(f, "regular_tree:{branching},{depth}"),
            Family::CycleShortcut { n, shortcuts, seed } => {
                write!(f, "cycle_shortcut:{n},{shortcuts}@{seed}")
            }
        }
    }
}

/// Parses the inline spec `family:p1,p2[@seed]`, the inverse of `Display`.
/// A `cycle_shortcut` spec without `@seed` uses seed 0.
impl FromStr for Family {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parameter(format!("graph spec `{spec}`: {why}"));
        let (name, rest) = spec.split_once(':').ok_or_else(|| bad("expected `family:params`"))?;
        let (params, seed) = match rest.split_once('@') {
            Some((p, seed)) => (p, Some(seed.trim().parse::<u64>().map_err(|_| bad("seed is not an integer"))?)),
            None => (rest, None),
        };
        let values: Vec<usize> = params
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("parameters must be non-negative integers"))?;
        if seed.is_some() && name != "cycle_shortcut" {
            return Err(bad("only cycle_shortcut takes a seed"));
        }
        let arity = |k: usize| if values.len() == k { Ok(()) } else { Err(bad(&format!("expected {k} parameter(s)"))) };
        match name {
            "path" => arity(1).map(|_| Family::Path { n: values[0] }),
            "cycle" => arity(1).map(|_| Family::Cycle { n: values[0] }),
            "grid2d" => arity(1).map(|_| Family::Grid2d { side: values[0] }),
            "regular_tree" => arity(2).map(|_| Family::RegularTree { branching: values[0], depth: values[1] }),
            "cycle_shortcut" => arity(2).map(|_| Family::CycleShortcut {
                n: values[0],
                shortcuts: values[1],
                seed: seed.unwrap_or(0),
            }),
            _ => Err(bad("unknown family")),
        }
    }
}

/// A finite, simple, undirected, connected graph.
///
/// Adjacency lists are sorted, so neighbour iteration is in increasing id
/// order. All-pairs distances are computed on first use and cached.
#[derive(Debug, Clone)]
pub struct Graph {
    adjacency: Vec<Vec<Vertex>>,
    degree_bound: usize,
    distances: OnceLock<Vec<u32>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.adjacency == other.adjacency
    }
}

impl Eq for Graph {}

impl Graph {
    /// Builds a graph from an explicit edge list, validating simplicity and
    /// connectivity. A single isolated vertex is accepted.
    pub fn from_edges(vertex_count: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidGraph("graph must have at least one vertex".into()));
        }
        let mut adjacency = vec![Vec::new(); vertex_count];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{vertex_count}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("parallel edge between {u} and {v}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let degree_bound = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        let graph = Graph { adjacency, degree_bound, distances: OnceLock::new() };
        if !graph.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(graph)
    }

    pub fn build(family: &Family) -> Result<Self> {
        match *family {
            Family::Path { n } => {
                require(n >= 3, || format!("path needs n >= 3, got {n}"))?;
                let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
                Graph::from_edges(n, &edges)
            }
            Family::Cycle { n } => {
                require(n >= 3, || format!("cycle needs n >= 3, got {n}"))?;
                Graph::from_edges(n, &cycle_edges(n))
            }
            Family::Grid2d { side } => {
                require(side >= 2, || format!("grid2d needs side >= 2, got {side}"))?;
                let mut edges = Vec::with_capacity(2 * side * (side - 1));
                for row in 0..side {
                    for col in 0..side {
                        let id = row * side + col;
                        if col + 1 < side {
                            edges.push((id, id + 1));
                        }
                        if row + 1 < side {
                            edges.push((id, id + side));
                        }
                    }
                }
                Graph::from_edges(side * side, &edges)
            }
            Family::RegularTree { branching, depth } => {
                require(branching >= 2, || format!("regular_tree needs branching >= 2, got {branching}"))?;
                require(depth >= 1, || format!("regular_tree needs depth >= 1, got {depth}"))?;
                // Level-order ids: children of vertex i are b*i + 1 ..= b*i + b.
                let count = (0..=depth)
                    .try_fold(0usize, |acc, level| {
                        branching.checked_pow(level as u32).and_then(|c| acc.checked_add(c))
                    })
                    .ok_or_else(|| Error::Parameter("regular_tree is too large".into()))?;
                let edges: Vec<_> = (1..count).map(|child| ((child - 1) / branching, child)).collect();
                Graph::from_edges(count, &edges)
            }
            Family::CycleShortcut { n, shortcuts, seed } => {
                require(n >= 4, || format!("cycle_shortcut needs n >= 4, got {n}"))?;
                let feasible = n * (n - 1) / 2 - n;
                if shortcuts > feasible {
                    return Err(Error::Infeasible(format!(
                        "{shortcuts} shortcuts requested but a {n}-cycle has only {feasible} non-adjacent pairs"
                    )));
                }
                let mut edges = cycle_edges(n);
                let mut present: BTreeSet<(usize, usize)> =
                    edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut added = 0;
                while added < shortcuts {
                    let u = rng.random_range(0..n);
                    let v = rng.random_range(0..n);
                    if u == v {
                        continue;
                    }
                    if present.insert((u.min(v), u.max(v))) {
                        edges.push((u.min(v), u.max(v)));
                        added += 1;
                    }
                }
                Graph::from_edges(n, &edges)
            }
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v].len()
    }

    /// The uniform degree bound `N`, taken as the maximum degree.
    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn is_connected(&self) -> bool {
        bfs_distances(&self.adjacency, 0).iter().all(|&d| d != u32::MAX)
    }

    fn distance_matrix(&self) -> &[u32] {
        self.distances.get_or_init(|| {
            let n = self.vertex_count();
            let mut all = Vec::with_capacity(n * n);
            for v in 0..n {
                all.extend(bfs_distances(&self.adjacency, v));
            }
            all
        })
    }

    /// BFS distances from `v` to every vertex.
    pub fn distances_from(&self, v: Vertex) -> &[u32] {
        let n = self.vertex_count();
        &self.distance_matrix()[v * n..(v + 1) * n]
    }

    pub fn distance(&self, v: Vertex, w: Vertex) -> usize {
        self.distances_from(v)[w] as usize
    }

    pub fn eccentricity(&self, v: Vertex) -> usize {
        self.distances_from(v).iter().copied().max().unwrap_or(0) as usize
    }

    pub fn diameter(&self) -> usize {
        (0..self.vertex_count()).map(|v| self.eccentricity(v)).max().unwrap_or(0)
    }

    /// `S(v,d)`: vertices at distance exactly `d`, in increasing order.
    pub fn sphere(&self, v: Vertex, d: usize) -> Vec<Vertex> {
        self.distances_from(v)
            .iter()
            .enumerate()
            .filter(|&(_, &dist)| dist as usize == d)
            .map(|(w, _)| w)
            .collect()
    }

    pub fn sphere_table(&self, origin: Vertex) -> SphereTable {
        let mut sizes = vec![0usize; self.eccentricity(origin) + 1];
        for &d in self.distances_from(origin) {
            sizes[d as usize] += 1;
        }
        let ball_sizes = sizes
            .iter()
            .scan(0usize, |acc, &s| {
                *acc += s;
                Some(*acc)
            })
            .collect();
        SphereTable { origin, sizes, ball_sizes }
    }

    /// `𝒮(d) = max_v |S(v,d)|`.
    pub fn script_s(&self, d: usize) -> usize {
        (0..self.vertex_count())
            .map(|v| self.distances_from(v).iter().filter(|&&dist| dist as usize == d).count())
            .max()
            .unwrap_or(0)
    }

    /// `sup_{x, d >= 1} ln|S(x,d)| / d`, zero when no sphere has more than
    /// one vertex.
    pub fn sup_log_sphere_growth(&self) -> f64 {
        let mut best = 0.0f64;
        for v in 0..self.vertex_count() {
            let table = self.sphere_table(v);
            for (d, &size) in table.sizes.iter().enumerate().skip(1) {
                if size >= 1 {
                    best = best.max((size as f64).ln() / d as f64);
                }
            }
        }
        best
    }

    /// Serializes to the edge-list text format: `n <count>` then one `u v`
    /// line per edge with `u < v`.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.vertex_count());
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (header_line, header) =
            lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        let mut fields = header.split_whitespace();
        let vertex_count = match (fields.next(), fields.next(), fields.next()) {
            (Some("n"), Some(count), None) => count.parse::<usize>().map_err(|e| Error::Parse {
                line: header_line + 1,
                message: format!("bad vertex count: {e}"),
            })?,
            _ => {
                return Err(Error::Parse {
                    line: header_line + 1,
                    message: "expected header `n <vertex_count>`".into(),
                })
            }
        };
        let mut edges = Vec::new();
        for (idx, line) in lines {
            let parsed: Vec<_> = line.split_whitespace().map(str::parse::<usize>).collect();
            match parsed.as_slice() {
                [Ok(u), Ok(v)] => edges.push((*u, *v)),
                _ => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("expected two vertex ids, got `{line}`"),
                    })
                }
            }
        }
        Graph::from_edges(vertex_count, &edges)
    }
}

/// Sphere and ball sizes around one origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SphereTable {
    pub origin: Vertex,
    /// `sizes[d] = |S(origin, d)|`.
    pub sizes: Vec<usize>,
    /// `ball_sizes[d] = |B(origin, d)|`.
    pub ball_sizes: Vec<usize>,
}

fn require(ok: bool, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Parameter(message()))
    }
}

fn cycle_edges(n: usize) -> Vec<(Vertex, Vertex)> {
    (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))).collect()
}

fn bfs_distances(adjacency: &[Vec<Vertex>], source: Vertex) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adjacency.len()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        for &w in &adjacency[u] {
            if dist[w] == u32::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::build(&Family::Path { n }).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        Graph::build(&Family::Cycle { n }).unwrap()
    }

    fn tree(branching: usize, depth: usize) -> Graph {
        Graph::build(&Family::RegularTree { branching, depth }).unwrap()
    }

    /// Floyd–Warshall, independent of the BFS used by the graph.
    fn floyd_warshall(g: &Graph) -> Vec<Vec<usize>> {
        let n = g.vertex_count();
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for (v, row) in d.iter_mut().enumerate() {
            row[v] = 0;
        }
        for (u, v) in g.edges() {
            d[u][v] = 1;
            d[v][u] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    fn assert_invariants(g: &Graph) {
        let n = g.vertex_count();
        let mut max_degree = 0;
        for v in 0..n {
            let nb = g.neighbors(v);
            assert!(nb.windows(2).all(|w| w[0] < w[1]), "sorted, no parallel edges");
            assert!(!nb.contains(&v), "no self-loop");
            for &w in nb {
                assert!(g.neighbors(w).contains(&v), "undirected");
            }
            max_degree = max_degree.max(nb.len());
        }
        assert_eq!(g.degree_bound(), max_degree);
        assert!((0..n).all(|v| g.distance(0, v) < n));
    }

    #[test]
    fn smallest_path() {
        let g = path(3);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert_eq!(g.degree_bound(), 2);
    }

    #[test]
    fn four_cycle_is_two_regular() {
        let g = cycle(4);
        assert!((0..4).all(|v| g.degree(v) == 2));
        assert_eq!(g.degree_bound(), 2);
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn cycle_shortcut_adds_distinct_chords() {
        let g = Graph::build(&Family::CycleShortcut { n: 8, shortcuts: 2, seed: 7 }).unwrap();
        assert_eq!(g.vertex_count(), 8);
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges.len(), 10);
        let distinct: BTreeSet<_> = edges.iter().collect();
        assert_eq!(distinct.len(), 10);
        let chords: Vec<_> = edges
            .iter()
            .filter(|&&(u, v)| !(v == u + 1 || (u == 0 && v == 7)))
            .collect();
        assert_eq!(chords.len(), 2);
        assert_invariants(&g);
        let again = Graph::build(&Family::CycleShortcut { n: 8, shortcuts: 2, seed: 7 }).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn cycle_shortcut_rejects_infeasible_counts() {
        // K5 minus a 5-cycle leaves exactly 5 chords.
        assert!(Graph::build(&Family::CycleShortcut { n: 5, shortcuts: 5, seed: 1 }).is_ok());
        assert!(matches!(
            Graph::build(&Family::CycleShortcut { n: 5, shortcuts: 6, seed: 1 }),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn builders_reject_bad_parameters() {
        for family in [
            Family::Path { n: 2 },
            Family::Cycle { n: 2 },
            Family::Grid2d { side: 1 },
            Family::RegularTree { branching: 1, depth: 3 },
            Family::RegularTree { branching: 2, depth: 0 },
            Family::CycleShortcut { n: 3, shortcuts: 0, seed: 0 },
        ] {
            assert!(matches!(Graph::build(&family), Err(Error::Parameter(_))), "{family}");
        }
    }

    #[test]
    fn from_edges_validates() {
        assert!(matches!(Graph::from_edges(3, &[(0, 0), (1, 2)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::from_edges(3, &[(0, 1), (1, 0), (1, 2)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::from_edges(4, &[(0, 1), (2, 3)]), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::from_edges(2, &[(0, 5)]), Err(Error::InvalidGraph(_))));
        let single = Graph::from_edges(1, &[]).unwrap();
        assert_eq!(single.degree_bound(), 0);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(path(5).distance(0, 4), 4);
        assert_eq!(cycle(6).distance(0, 3), 3);
        let grid = Graph::build(&Family::Grid2d { side: 4 }).unwrap();
        let fw = floyd_warshall(&grid);
        assert_eq!(fw[0][15], 6);
        assert_eq!(grid.distance(0, 15), 6);
    }

    #[test]
    fn sphere_examples() {
        assert_eq!(cycle(6).sphere(0, 2), vec![2, 4]);
        assert_eq!(path(5).sphere(3, 0), vec![3]);
        assert!(path(5).sphere(0, 7).is_empty());
    }

    #[test]
    fn script_s_examples() {
        assert_eq!(path(9).script_s(2), 2);
        assert_eq!(tree(2, 4).script_s(2), 6);
        assert_eq!(cycle(7).script_s(0), 1);
    }

    #[test]
    fn sphere_growth_examples() {
        let ln2 = 2f64.ln();
        assert!((path(9).sup_log_sphere_growth() - ln2).abs() < 1e-15);
        assert!((cycle(4).sup_log_sphere_growth() - ln2).abs() < 1e-15);
        // Brute-force scan of ln(3 * 2^(d-1)) / d over the depths a
        // depth-5 binary tree realizes; the d = 1 term dominates.
        let expected = (1..=5)
            .map(|d: i32| (3.0 * 2f64.powi(d - 1)).ln() / d as f64)
            .fold(f64::MIN, f64::max);
        assert!((tree(2, 5).sup_log_sphere_growth() - expected).abs() < 1e-15);
        assert_eq!(Graph::from_edges(2, &[(0, 1)]).unwrap().sup_log_sphere_growth(), 0.0);
    }

    #[test]
    fn tree_shape() {
        let g = tree(2, 3);
        assert_eq!(g.vertex_count(), 15);
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.degree(1), 3);
        assert_eq!(g.degree(14), 1);
    }

    #[test]
    fn family_invariants_and_metric() {
        let graphs = [
            path(7),
            cycle(9),
            Graph::build(&Family::Grid2d { side: 5 }).unwrap(),
            tree(3, 3),
            Graph::build(&Family::CycleShortcut { n: 30, shortcuts: 6, seed: 3 }).unwrap(),
        ];
        for g in &graphs {
            assert_invariants(g);
            let n = g.vertex_count();
            assert!(n <= 64);
            let fw = floyd_warshall(g);
            for a in 0..n {
                for b in 0..n {
                    assert_eq!(g.distance(a, b), fw[a][b]);
                    assert_eq!(g.distance(a, b), g.distance(b, a));
                    assert_eq!(g.distance(a, b) == 0, a == b);
                    for c in 0..n {
                        assert!(g.distance(a, c) <= g.distance(a, b) + g.distance(b, c));
                    }
                }
            }
            let big_n = g.degree_bound() as f64;
            for v in 0..n {
                let table = g.sphere_table(v);
                assert_eq!(table.sizes[0], 1);
                assert_eq!(*table.ball_sizes.last().unwrap(), n);
                let mut covered = vec![false; n];
                for d in 0..table.sizes.len() {
                    let sphere = g.sphere(v, d);
                    assert_eq!(sphere.len(), table.sizes[d]);
                    for w in sphere {
                        assert!(!covered[w]);
                        covered[w] = true;
                    }
                }
                assert!(covered.iter().all(|&c| c));
            }
            for d in 0..=g.diameter() + 1 {
                let bound = big_n * (big_n - 1.0).powi(d as i32);
                assert!(g.script_s(d) as f64 <= bound.max(1.0));
            }
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::build(&Family::CycleShortcut { n: 12, shortcuts: 3, seed: 11 }).unwrap();
        let text = g.to_edge_list();
        assert!(text.starts_with("n 12\n"));
        assert_eq!(Graph::from_edge_list(&text).unwrap(), g);
    }

    #[test]
    fn edge_list_reader_rejects_bad_input() {
        assert!(matches!(Graph::from_edge_list(""), Err(Error::Parse { .. })));
        assert!(matches!(Graph::from_edge_list("m 3\n0 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(Graph::from_edge_list("n 3\n0 1 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(Graph::from_edge_list("n 3\n0 1\n"), Err(Error::InvalidGraph(_))));
        assert!(matches!(Graph::from_edge_list("n 2\n0 1\n1 0\n"), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn family_spec_round_trips() {
        for spec in ["path:5", "cycle:12", "grid2d:4", "regular_tree:2,3", "cycle_shortcut:500,50@7"] {
            assert_eq!(spec.parse::<Family>().unwrap().to_string(), spec);
        }
        assert_eq!(
            "cycle_shortcut:10,2".parse::<Family>().unwrap(),
            Family::CycleShortcut { n: 10, shortcuts: 2, seed: 0 }
        );
        for bad in ["path", "path:a", "path:3,4", "cycle:5@1", "torus:4", "regular_tree:2"] {
            assert!(bad.parse::<Family>().is_err(), "{bad}");
        }
    }
}
