//! Fractional moments `E|G(x,y;z)|^s`, their a priori constants and the
//! walk-count bound, plus the second-moment ratio probe.
//!
//! Monte Carlo trials are independent: trial `k` uses disorder draw `k` of
//! the given seed, so results do not depend on how trials are scheduled.

use rayon::prelude::*;
use serde::Serialize;

use crate::anderson::{AndersonOperator, ComplexEnergy, DisorderModel};
use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::saw::WalkClassCounts;

/// Exponent `s` in the open interval `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct FractionalExponent(f64);

impl FractionalExponent {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 && s < 1.0 {
            Ok(FractionalExponent(s))
        } else {
            Err(Error::Domain(format!("fractional exponent must lie in (0, 1), got {s}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A priori constants for the diagonal (`c1`) and off-diagonal (`c2`)
/// fractional moments: `E|G(x,x)|^s <= c1 λ^-s`, `E|G(x,y)|^s <= c2 λ^-s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriConstants {
    pub s: f64,
    pub density_sup_norm: f64,
    pub c1: f64,
    pub c2: f64,
}

/// `c1 = ‖ρ‖∞^s 2^s s^-s / (1 - s)` and `c2 = 2^(s+1) c1`.
pub fn apriori_constants(s: FractionalExponent, density_sup_norm: f64) -> Result<AprioriConstants> {
    if !(density_sup_norm.is_finite() && density_sup_norm > 0.0) {
        return Err(Error::Parameter(format!("density sup norm must be positive, got {density_sup_norm}")));
    }
    let s = s.get();
    let c1 = density_sup_norm.powf(s) * 2f64.powf(s) * s.powf(-s) / (1.0 - s);
    let c2 = c1 * 2f64.powf(s + 1.0);
    Ok(AprioriConstants { s, density_sup_norm, c1, c2 })
}

impl AprioriConstants {
    /// `c1 λ^-s` on the diagonal, `c2 λ^-s` off it.
    pub fn single_site_bound(&self, lambda: f64, diagonal: bool) -> f64 {
        let c = if diagonal { self.c1 } else { self.c2 };
        c * lambda.powf(-self.s)
    }
}

/// `|𝒲′(x,y)| (c2 / λ^s)^(d(x,y)+1)`.
pub fn fractional_moment_bound(
    counts: &WalkClassCounts,
    s: FractionalExponent,
    lambda: f64,
    constants: &AprioriConstants,
) -> f64 {
    let ratio = constants.c2 / lambda.powf(s.get());
    counts.w_prime_count as f64 * ratio.powi(counts.d as i32 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub s: f64,
    pub lambda: f64,
    pub energy: f64,
    pub eta: f64,
    pub x: Vertex,
    pub y: Vertex,
}

impl MomentEstimate {
    /// `mean <= bound + 3 σ̂`.
    pub fn within(&self, bound: f64) -> bool {
        self.mean <= bound + 3.0 * self.std_error
    }
}

/// Mean and standard error of the mean, accumulated in input order.
fn mean_and_std_error(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let (mut n, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
    for v in values {
        n += 1;
        let delta = v - mean;
        mean += delta / n as f64;
        m2 += delta * (v - mean);
    }
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    (mean, (var / n as f64).sqrt(), n)
}

/// `|G(x,y;z)|` for every requested pair, one row per trial.
fn sample_greens_magnitudes(
    graph: &Graph,
    model: &DisorderModel,
    pairs: &[(Vertex, Vertex)],
    z: ComplexEnergy,
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    for &(x, y) in pairs {
        if x >= graph.vertex_count() || y >= graph.vertex_count() {
            return Err(Error::Domain(format!("pair ({x}, {y}) out of range")));
        }
    }
    let mut columns: Vec<Vertex> = pairs.iter().map(|&(_, y)| y).collect();
    columns.sort_unstable();
    columns.dedup();
    (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let disorder = model.sample(graph, seed, trial);
            let op = AndersonOperator::new(graph, &disorder, model.lambda)?;
            let resolvent = op.resolvent(z)?;
            let solved: Vec<_> = columns.iter().map(|&y| resolvent.column(y)).collect::<Result<_>>()?;
            Ok(pairs
                .iter()
                .map(|&(x, y)| {
                    let col = columns.binary_search(&y).expect("column was solved");
                    solved[col][x].norm()
                })
                .collect())
        })
        .collect()
}

/// Batched estimator: one resolvent per trial serves every pair and
/// exponent. Output is indexed `[pair][exponent]`.
pub fn estimate_fractional_moments(
    graph: &Graph,
    model: &DisorderModel,
    pairs: &[(Vertex, Vertex)],
    z: ComplexEnergy,
    exponents: &[FractionalExponent],
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<MomentEstimate>>> {
    if trials < 2 {
        return Err(Error::Parameter(format!("need at least 2 trials, got {trials}")));
    }
    let magnitudes = sample_greens_magnitudes(graph, model, pairs, z, trials, seed)?;
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(p, &(x, y))| {
            exponents
                .iter()
                .map(|s| {
                    let (mean, std_error, samples) =
                        mean_and_std_error(magnitudes.iter().map(|row| row[p].powf(s.get())));
                    MomentEstimate {
                        mean,
                        std_error,
                        samples,
                        s: s.get(),
                        lambda: model.lambda,
                        energy: z.energy,
                        eta: z.eta,
                        x,
                        y,
                    }
                })
                .collect()
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_fractional_moment(
    graph: &Graph,
    model: &DisorderModel,
    x: Vertex,
    y: Vertex,
    z: ComplexEnergy,
    s: FractionalExponent,
    trials: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    Ok(estimate_fractional_moments(graph, model, &[(x, y)], z, &[s], trials, seed)?[0][0])
}

/// Monte Carlo estimate checked against a bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    pub query: MomentEstimate,
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub bound: f64,
    pub satisfied: bool,
}

impl MomentReport {
    pub fn new(estimate: MomentEstimate, bound: f64) -> Self {
        MomentReport {
            query: estimate,
            mean: estimate.mean,
            std_error: estimate.std_error,
            samples: estimate.samples,
            bound,
            satisfied: estimate.within(bound),
        }
    }
}

/// Observed `|η| Ê|G|² / Ê|G|^s` from paired samples. A witness for how
/// large the second-moment constant has to be, not a certified value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMomentProbe {
    pub ratio: f64,
    pub second_moment: f64,
    pub fractional_moment: f64,
    pub samples: usize,
    pub s: f64,
    pub lambda: f64,
    pub energy: f64,
    pub eta: f64,
    pub x: Vertex,
    pub y: Vertex,
}

#[allow(clippy::too_many_arguments)]
pub fn second_moment_ratio_probe(
    graph: &Graph,
    model: &DisorderModel,
    x: Vertex,
    y: Vertex,
    z: ComplexEnergy,
    s: FractionalExponent,
    trials: usize,
    seed: u64,
) -> Result<SecondMomentProbe> {
    if trials < 2 {
        return Err(Error::Parameter(format!("need at least 2 trials, got {trials}")));
    }
    let magnitudes = sample_greens_magnitudes(graph, model, &[(x, y)], z, trials, seed)?;
    let n = magnitudes.len() as f64;
    let second_moment = magnitudes.iter().map(|row| row[0] * row[0]).sum::<f64>() / n;
    let fractional_moment = magnitudes.iter().map(|row| row[0].powf(s.get())).sum::<f64>() / n;
    if fractional_moment == 0.0 {
        return Err(Error::Degenerate(format!("Ê|G({x},{y})|^s vanished over {trials} trials")));
    }
    Ok(SecondMomentProbe {
        ratio: z.eta.abs() * second_moment / fractional_moment,
        second_moment,
        fractional_moment,
        samples: magnitudes.len(),
        s: s.get(),
        lambda: model.lambda,
        energy: z.energy,
        eta: z.eta,
        x,
        y,
    })
}
