//! The random operator `H = T + λω` on a graph, its depleted variants, and
//! Green's functions `G(x,y;z) = ⟨x|(H - z)⁻¹|y⟩`.
//!
//! `T` is the negative adjacency matrix. Depleting a vertex removes every
//! hopping term attached to it while leaving the diagonal alone.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::saw::DepletionMask;

/// Single-site densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    /// Uniform on `[0, 1]`, `‖ρ‖∞ = 1`.
    UniformUnit,
}

impl DensityKind {
    pub fn sup_norm(self) -> f64 {
        match self {
            DensityKind::UniformUnit => 1.0,
        }
    }

    /// `(inf supp ρ, sup supp ρ)`.
    pub fn support(self) -> (f64, f64) {
        match self {
            DensityKind::UniformUnit => (0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderModel {
    pub density: DensityKind,
    pub lambda: f64,
}

impl DisorderModel {
    pub fn uniform(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Parameter(format!("coupling must be finite and non-negative, got {lambda}")));
        }
        Ok(DisorderModel { density: DensityKind::UniformUnit, lambda })
    }

    pub fn density_sup_norm(&self) -> f64 {
        self.density.sup_norm()
    }

    /// Draws one realization. Draw `k` of seed `s` always produces the same
    /// potential regardless of which other draws are taken.
    pub fn sample(&self, graph: &Graph, seed: u64, draw_index: u64) -> DisorderRealization {
        let mut rng = disorder_stream(seed, draw_index);
        let omega = match self.density {
            DensityKind::UniformUnit => (0..graph.vertex_count()).map(|_| rng.random::<f64>()).collect(),
        };
        DisorderRealization { omega, seed, draw_index }
    }

    /// Almost-sure spectral bracket `[-N + λ inf supp ρ, N + λ sup supp ρ]`.
    pub fn spectral_bracket(&self, graph: &Graph) -> (f64, f64) {
        let n = graph.degree_bound() as f64;
        let (lo, hi) = self.density.support();
        (-n + self.lambda * lo, n + self.lambda * hi)
    }
}

/// Counter-style stream: the ChaCha stream id carries the draw index, and
/// vertex `v` reads the `v`-th 64-bit word of that stream.
fn disorder_stream(seed: u64, draw_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw_index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisorderRealization {
    pub omega: Vec<f64>,
    pub seed: u64,
    pub draw_index: u64,
}

/// A point `z = E + iη` off the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEnergy {
    pub energy: f64,
    pub eta: f64,
}

impl ComplexEnergy {
    pub fn new(energy: f64, eta: f64) -> Result<Self> {
        if !energy.is_finite() || !eta.is_finite() || eta == 0.0 {
            return Err(Error::Parameter(format!("need finite E and eta != 0, got E={energy}, eta={eta}")));
        }
        Ok(ComplexEnergy { energy, eta })
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.energy, self.eta)
    }
}

/// `H = T + λω` for one realization, possibly with a depleted prefix.
#[derive(Debug, Clone)]
pub struct AndersonOperator<'g> {
    graph: &'g Graph,
    onsite: Arc<[f64]>,
    prefix: Vec<Vertex>,
    mask: DepletionMask,
}

impl<'g> AndersonOperator<'g> {
    pub fn new(graph: &'g Graph, disorder: &DisorderRealization, lambda: f64) -> Result<Self> {
        let onsite: Vec<f64> = disorder.omega.iter().map(|w| lambda * w).collect();
        Self::with_potential(graph, onsite)
    }

    /// Operator with an explicit diagonal `V(v)`, i.e. `H = T + V`.
    pub fn with_potential(graph: &'g Graph, onsite: Vec<f64>) -> Result<Self> {
        if onsite.len() != graph.vertex_count() {
            return Err(Error::Parameter(format!(
                "potential has {} entries for {} vertices",
                onsite.len(),
                graph.vertex_count()
            )));
        }
        Ok(AndersonOperator {
            graph,
            onsite: onsite.into(),
            prefix: Vec::new(),
            mask: DepletionMask::empty(graph.vertex_count()),
        })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn onsite(&self) -> &[f64] {
        &self.onsite
    }

    pub fn depleted_prefix(&self) -> &[Vertex] {
        &self.prefix
    }

    pub fn dim(&self) -> usize {
        self.graph.vertex_count()
    }

    /// `H_[prefix]`: additionally removes all hopping attached to `prefix`.
    pub fn depleted(&self, prefix: &[Vertex]) -> Result<Self> {
        let mut next = self.clone();
        for &v in prefix {
            if v >= self.dim() {
                return Err(Error::Domain(format!("vertex {v} out of range")));
            }
            if next.mask.is_depleted(v) {
                return Err(Error::Domain(format!("vertex {v} repeated in depletion prefix")));
            }
            next.mask.deplete(v);
            next.prefix.push(v);
        }
        Ok(next)
    }

    /// Dense real symmetric matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for v in 0..n {
            h[(v, v)] = self.onsite[v];
        }
        for (u, v) in self.graph.edges() {
            if !self.mask.removes(u, v) {
                h[(u, v)] = -1.0;
                h[(v, u)] = -1.0;
            }
        }
        h
    }

    /// `H - z` as a complex matrix.
    pub fn shifted(&self, z: ComplexEnergy) -> DMatrix<Complex64> {
        let zc = z.z();
        self.matrix().map(|x| Complex64::new(x, 0.0)) - DMatrix::from_diagonal_element(self.dim(), self.dim(), zc)
    }

    /// LU factorization of `H - z`; columns of the resolvent are solved
    /// against the same factorization.
    pub fn resolvent(&self, z: ComplexEnergy) -> Result<Resolvent> {
        Ok(Resolvent { lu: self.shifted(z).lu(), z })
    }

    pub fn greens_function(&self, x: Vertex, y: Vertex, z: ComplexEnergy) -> Result<Complex64> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        self.resolvent(z)?.entry(x, y)
    }

    /// Green's function evaluated through the self-avoiding-walk expansion:
    /// a sum over walks `[x = v0, ..., vd]` with `d = d(x,y)` of
    /// `Π_{i<d} ⟨vi|(H_[v0..v(i-1)] - z)⁻¹|vi⟩ · ⟨vd|(H_[v0..v(d-1)] - z)⁻¹|y⟩`.
    pub fn saw_representation(&self, x: Vertex, y: Vertex, z: ComplexEnergy) -> Result<Complex64> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        if x == y {
            return Err(Error::Domain("the walk expansion needs x != y".into()));
        }
        let mut targets = vec![false; self.dim()];
        targets[y] = true;
        Ok(self.walk_expansion(x, z, &targets)?[y])
    }

    /// Walk expansion from `x` to every vertex at once. Entry `x` holds the
    /// zero-step term `G(x,x;z)`.
    pub fn saw_representation_from(&self, x: Vertex, z: ComplexEnergy) -> Result<Vec<Complex64>> {
        self.check_vertex(x)?;
        self.walk_expansion(x, z, &vec![true; self.dim()])
    }

    fn walk_expansion(&self, x: Vertex, z: ComplexEnergy, targets: &[bool]) -> Result<Vec<Complex64>> {
        if !self.prefix.is_empty() {
            return Err(Error::Domain("the walk expansion starts from an undepleted operator".into()));
        }
        let dist = self.graph.distances_from(x);
        let max_depth = (0..self.dim())
            .filter(|&y| targets[y])
            .map(|y| dist[y] as usize)
            .max()
            .unwrap_or(0);
        let shifted = self.shifted(z);
        let inverse = invert(&shifted)?;
        let mut expansion = WalkExpansion {
            graph: self.graph,
            dist,
            targets,
            max_depth,
            on_walk: vec![false; self.dim()],
            acc: vec![Complex64::new(0.0, 0.0); self.dim()],
        };
        expansion.on_walk[x] = true;
        expansion.descend(x, 0, Complex64::new(1.0, 0.0), &shifted, &inverse)?;
        Ok(expansion.acc)
    }

    /// Sorted eigenvalues.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.matrix().symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Eigenpairs sorted by eigenvalue; column `k` of the matrix is the
    /// normalized eigenvector of `values[k]`.
    pub fn eigenpairs(&self) -> (Vec<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.matrix());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v < self.dim() {
            Ok(())
        } else {
            Err(Error::Domain(format!("vertex {v} out of range 0..{}", self.dim())))
        }
    }
}

/// Depth-first walk over the tree of self-avoiding walks. Each node at depth
/// `i` holds `(H_[v0..v(i-1)] - z)⁻¹`, which serves every target at distance
/// `i` as well as the diagonal factor handed to the children.
struct WalkExpansion<'a> {
    graph: &'a Graph,
    dist: &'a [u32],
    targets: &'a [bool],
    max_depth: usize,
    on_walk: Vec<bool>,
    acc: Vec<Complex64>,
}

impl WalkExpansion<'_> {
    fn descend(
        &mut self,
        tip: Vertex,
        depth: usize,
        weight: Complex64,
        shifted: &DMatrix<Complex64>,
        inverse: &DMatrix<Complex64>,
    ) -> Result<()> {
        for y in 0..self.acc.len() {
            if self.targets[y] && self.dist[y] as usize == depth {
                self.acc[y] += weight * inverse[(tip, y)];
            }
        }
        if depth == self.max_depth {
            return Ok(());
        }
        let steps: Vec<Vertex> =
            self.graph.neighbors(tip).iter().copied().filter(|&w| !self.on_walk[w]).collect();
        if steps.is_empty() {
            return Ok(());
        }
        let child_weight = weight * inverse[(tip, tip)];
        // Children see the operator with the tip's hopping removed too.
        let mut child_shifted = shifted.clone();
        for &w in self.graph.neighbors(tip) {
            child_shifted[(tip, w)] = Complex64::new(0.0, 0.0);
            child_shifted[(w, tip)] = Complex64::new(0.0, 0.0);
        }
        let child_inverse = invert(&child_shifted)?;
        for next in steps {
            self.on_walk[next] = true;
            self.descend(next, depth + 1, child_weight, &child_shifted, &child_inverse)?;
            self.on_walk[next] = false;
        }
        Ok(())
    }
}

fn invert(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    m.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Numerical(format!("singular {}x{} shifted operator", m.nrows(), m.ncols())))
}

/// Factorized `H - z`.
pub struct Resolvent {
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    z: ComplexEnergy,
}

impl Resolvent {
    pub fn energy(&self) -> ComplexEnergy {
        self.z
    }

    /// Column `y` of `(H - z)⁻¹`, i.e. the solution of `(H - z)u = δ_y`.
    pub fn column(&self, y: Vertex) -> Result<DVector<Complex64>> {
        let n = self.lu.l().nrows();
        let mut rhs = DVector::zeros(n);
        rhs[y] = Complex64::new(1.0, 0.0);
        self.lu.solve(&rhs).ok_or_else(|| {
            Error::Numerical(format!("resolvent solve failed at z = {} + {}i", self.z.energy, self.z.eta))
        })
    }

    pub fn entry(&self, x: Vertex, y: Vertex) -> Result<Complex64> {
        Ok(self.column(y)?[x])
    }

    pub fn inverse(&self) -> Result<DMatrix<Complex64>> {
        self.lu.try_inverse().ok_or_else(|| {
            Error::Numerical(format!("resolvent inverse failed at z = {} + {}i", self.z.energy, self.z.eta))
        })
    }
}
