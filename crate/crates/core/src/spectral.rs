//! Level-spacing statistics of finite-volume spectra.
//!
//! Spectra are cut to a central window, spacings are unfolded by the local
//! mean spacing over [`UNFOLD_NEIGHBORS`] neighbours, and the pooled sample
//! is compared with the Poisson law `1 - e^-s` and the Wigner surmise
//! `1 - e^(-πs²/4)` by Kolmogorov–Smirnov distance.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::anderson::{AndersonOperator, DisorderModel};
use crate::error::{Error, Result};
use crate::graph::Graph;

pub const UNFOLD_NEIGHBORS: usize = 20;
pub const MIN_LEVELS: usize = 32;
pub const MIN_SPACINGS: usize = 500;
pub const VERDICT_MARGIN: f64 = 0.02;
/// Raw spacings below this count as numerical degeneracies and are dropped.
pub const DEGENERACY_FLOOR: f64 = 1e-12;
pub const DEFAULT_WINDOW: f64 = 0.5;

/// Sorted spectra of `draws` independent realizations.
pub fn eigen_ensemble(graph: &Graph, model: &DisorderModel, draws: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if draws == 0 {
        return Err(Error::Parameter("need at least one draw".into()));
    }
    (0..draws as u64)
        .into_par_iter()
        .map(|draw| {
            let disorder = model.sample(graph, seed, draw);
            let spectrum = AndersonOperator::new(graph, &disorder, model.lambda)?.spectrum();
            if spectrum.iter().all(|e| e.is_finite()) {
                Ok(spectrum)
            } else {
                Err(Error::Numerical(format!("non-finite eigenvalue in draw {draw}")))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingEnsemble {
    pub unfolded_spacings: Vec<f64>,
    pub draws: usize,
    pub window: f64,
    pub dropped_degenerate: usize,
}

impl SpacingEnsemble {
    pub fn mean(&self) -> f64 {
        self.unfolded_spacings.iter().sum::<f64>() / self.unfolded_spacings.len() as f64
    }

    /// One spacing per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for s in &self.unfolded_spacings {
            writeln!(out, "{s:.16e}")?;
        }
        Ok(())
    }
}

pub fn unfold_and_space(spectra: &[Vec<f64>], window: f64) -> Result<SpacingEnsemble> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::Parameter(format!("window must lie in (0, 1], got {window}")));
    }
    if spectra.is_empty() {
        return Err(Error::Domain("no spectra to unfold".into()));
    }
    let mut unfolded_spacings = Vec::new();
    let mut dropped_degenerate = 0;
    for (i, spectrum) in spectra.iter().enumerate() {
        if spectrum.len() < MIN_LEVELS {
            return Err(Error::Domain(format!(
                "spectrum {i} has {} levels, need at least {MIN_LEVELS}",
                spectrum.len()
            )));
        }
        let mut levels = spectrum.clone();
        levels.sort_by(f64::total_cmp);
        let keep = ((window * levels.len() as f64).round() as usize).clamp(2, levels.len());
        let start = (levels.len() - keep) / 2;
        let central = &levels[start..start + keep];
        let raw: Vec<f64> = central.windows(2).map(|w| w[1] - w[0]).collect();
        let spacings: Vec<f64> = raw.iter().copied().filter(|&s| s >= DEGENERACY_FLOOR).collect();
        dropped_degenerate += raw.len() - spacings.len();
        unfolded_spacings.extend(unfold_locally(&spacings, UNFOLD_NEIGHBORS));
    }
    Ok(SpacingEnsemble { unfolded_spacings, draws: spectra.len(), window, dropped_degenerate })
}

/// Divides each spacing by the mean of the `k` spacings centred on it
/// (the window slides inward at the edges).
fn unfold_locally(spacings: &[f64], k: usize) -> Vec<f64> {
    let n = spacings.len();
    if n == 0 {
        return Vec::new();
    }
    let width = k.min(n);
    let mut prefix = vec![0.0; n + 1];
    for (i, s) in spacings.iter().enumerate() {
        prefix[i + 1] = prefix[i] + s;
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(width / 2).min(n - width);
            let local_mean = (prefix[lo + width] - prefix[lo]) / width as f64;
            spacings[i] / local_mean
        })
        .collect()
}

pub fn poisson_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        1.0 - (-s).exp()
    }
}

pub fn wigner_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        1.0 - (-PI * s * s / 4.0).exp()
    }
}

/// Two-sided Kolmogorov–Smirnov distance between a sample and a CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    PoissonLike,
    GoeLike,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineDistances {
    pub ks_poisson: f64,
    pub ks_goe: f64,
    pub verdict: Verdict,
    pub spacings: usize,
}

pub fn verdict(ks_poisson: f64, ks_goe: f64) -> Verdict {
    if ks_poisson < ks_goe - VERDICT_MARGIN {
        Verdict::PoissonLike
    } else if ks_goe < ks_poisson - VERDICT_MARGIN {
        Verdict::GoeLike
    } else {
        Verdict::Ambiguous
    }
}

pub fn baseline_distances(spacings: &[f64]) -> Result<BaselineDistances> {
    if spacings.len() < MIN_SPACINGS {
        return Err(Error::Domain(format!(
            "{} spacings pooled, need at least {MIN_SPACINGS}",
            spacings.len()
        )));
    }
    let ks_poisson = ks_distance(spacings, poisson_cdf);
    let ks_goe = ks_distance(spacings, wigner_cdf);
    Ok(BaselineDistances { ks_poisson, ks_goe, verdict: verdict(ks_poisson, ks_goe), spacings: spacings.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Family;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equally_spaced_spectrum_unfolds_to_one() {
        let spectrum: Vec<f64> = (0..100).map(|i| 0.37 * i as f64 - 3.0).collect();
        let ens = unfold_and_space(&[spectrum], 1.0).unwrap();
        assert_eq!(ens.unfolded_spacings.len(), 99);
        assert!(ens.unfolded_spacings.iter().all(|&s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn central_window_size() {
        let spectrum: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(unfold_and_space(&[spectrum], 0.5).unwrap().unfolded_spacings.len(), 49);
    }

    #[test]
    fn unfolding_rejects_short_spectra_and_bad_windows() {
        let short: Vec<f64> = (0..31).map(f64::from).collect();
        assert!(matches!(unfold_and_space(&[short], 0.5), Err(Error::Domain(_))));
        let ok: Vec<f64> = (0..40).map(f64::from).collect();
        assert!(unfold_and_space(std::slice::from_ref(&ok), 0.0).is_err());
        assert!(unfold_and_space(&[ok], 1.5).is_err());
    }

    #[test]
    fn degenerate_levels_are_dropped() {
        let mut spectrum: Vec<f64> = (0..64).map(f64::from).collect();
        spectrum[32] = spectrum[31];
        let ens = unfold_and_space(&[spectrum], 1.0).unwrap();
        assert_eq!(ens.dropped_degenerate, 1);
        assert!(ens.unfolded_spacings.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn iid_uniform_levels_look_poissonian() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let spectra: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                let mut v: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        let ens = unfold_and_space(&spectra, 1.0).unwrap();
        assert!(ens.unfolded_spacings.len() >= 10_000 - 20);
        assert!((ens.mean() - 1.0).abs() < 0.02);
        let dist = baseline_distances(&ens.unfolded_spacings).unwrap();
        assert!(dist.ks_poisson < 0.05, "{dist:?}");
        assert_eq!(dist.verdict, Verdict::PoissonLike);
    }

    #[test]
    fn ks_distance_of_exact_quantiles_is_small() {
        let n = 1000;
        let quantiles: Vec<f64> = (0..n).map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln()).collect();
        assert!(ks_distance(&quantiles, poisson_cdf) <= 0.5 / n as f64 + 1e-12);
        // Point mass at zero against a continuous CDF.
        assert!((ks_distance(&[0.0; 10], poisson_cdf) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn verdict_margin_rule() {
        assert_eq!(verdict(0.01, 0.2), Verdict::PoissonLike);
        assert_eq!(verdict(0.2, 0.01), Verdict::GoeLike);
        assert_eq!(verdict(0.10, 0.11), Verdict::Ambiguous);
        assert!(baseline_distances(&[1.0; 499]).is_err());
    }

    #[test]
    fn clean_cycle_spectrum() {
        let g = Graph::build(&Family::Cycle { n: 6 }).unwrap();
        let model = DisorderModel::uniform(0.0).unwrap();
        let spectra = eigen_ensemble(&g, &model, 1, 0).unwrap();
        for (got, want) in spectra[0].iter().zip([-2.0, -1.0, -1.0, 1.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ensemble_is_bounded_and_reproducible() {
        let g = Graph::build(&Family::CycleShortcut { n: 60, shortcuts: 6, seed: 2 }).unwrap();
        let model = DisorderModel::uniform(3.0).unwrap();
        let a = eigen_ensemble(&g, &model, 4, 9).unwrap();
        assert_eq!(a, eigen_ensemble(&g, &model, 4, 9).unwrap());
        let bound = g.degree_bound() as f64 + 3.0;
        assert!(a.iter().flatten().all(|e| e.abs() <= bound + 1e-12));
        assert!(eigen_ensemble(&g, &model, 0, 9).is_err());
    }
}
