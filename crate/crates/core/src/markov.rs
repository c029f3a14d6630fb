//! Column-size Markov chain of a uniformly random polyomino of large area.
//!
//! With `P(k,j) = π(k) U(k,j) C₂(j)` the chain has stationary law
//! `π₂(k) = Σ_j P(k,j)` and transitions `Π(k,j) = P(k,j)/π₂(k)`; all laws are
//! truncated to sizes `1..=K_max` and renormalized there.

use std::io::Write;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{gluing_count, FamilyId};
use crate::numeric::{self, Accumulator};
use crate::qseries::{KernelModel, ThetaBuilder};
use crate::spectral::{self, SpectralConstants, DEFAULT_K_MAX};

#[derive(Clone, Debug, PartialEq)]
pub struct ChainModel {
    pub family: FamilyId,
    pub k_max: usize,
    /// `π(j)`, index `j − 1`.
    pub pi: Vec<f64>,
    /// `π₂(k)`, index `k − 1`.
    pub pi2: Vec<f64>,
    /// Row-major `Π(k,j)`.
    pub transition: Vec<f64>,
}

impl ChainModel {
    pub fn pi_at(&self, j: usize) -> f64 {
        self.pi[j - 1]
    }

    pub fn pi2_at(&self, k: usize) -> f64 {
        self.pi2[k - 1]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.transition[(k - 1) * self.k_max..k * self.k_max]
    }

    pub fn at(&self, k: usize, j: usize) -> f64 {
        self.transition[(k - 1) * self.k_max + j - 1]
    }

    /// `Σ_k π₂(k) k`.
    pub fn mean_size(&self) -> f64 {
        numeric::sum(self.pi2.iter().enumerate().map(|(i, p)| p * (i + 1) as f64))
    }

    /// `Σ_k π₂(k) k² − μ₂²`, the one-column size variance.
    pub fn size_variance(&self) -> f64 {
        let m = self.mean_size();
        numeric::sum(self.pi2.iter().enumerate().map(|(i, p)| {
            let d = (i + 1) as f64 - m;
            p * d * d
        }))
    }
}

/// Builds the chain from spectral constants sharing the same truncations.
pub fn build_chain(sc: &SpectralConstants, model: &KernelModel) -> Result<ChainModel> {
    let k_max = sc.k_max();
    let family = sc.family;
    let long = model.with_l_max(model.l_max.max(k_max));
    let g = ThetaBuilder::new(&long, sc.rho)?.phi(1)?.value;
    let total = numeric::sum((1..=k_max).map(|j| g.coeff(j)));
    if !(total.abs() > 0.0) || !total.is_finite() {
        return Err(Error::NonConvergence { what: "G(theta)", last: total });
    }
    let mut pi: Vec<f64> = (1..=k_max).map(|j| (g.coeff(j) / total).max(0.0)).collect();
    if gluing_count(family, 1, 3) == 0 {
        pi = refine_last_column_law(family, sc.rho, pi);
    }

    let mut transition = vec![0.0; k_max * k_max];
    let mut row_log = vec![f64::NEG_INFINITY; k_max];
    for k in 1..=k_max {
        let admissible: Vec<usize> =
            (1..=k_max).filter(|&j| gluing_count(family, k as u32, j as u32) > 0).collect();
        let top = admissible
            .iter()
            .map(|&j| sc.c2_log[j - 1])
            .fold(f64::NEG_INFINITY, f64::max);
        let row = &mut transition[(k - 1) * k_max..k * k_max];
        let mut acc = Accumulator::new();
        for &j in &admissible {
            let u = gluing_count(family, k as u32, j as u32) as f64;
            row[j - 1] = u * (sc.c2_log[j - 1] - top).exp();
            acc.add(row[j - 1]);
        }
        let norm = acc.value();
        row.iter_mut().for_each(|x| *x /= norm);
        row_log[k - 1] = top + norm.ln();
    }

    let shift = row_log.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut pi2: Vec<f64> = pi
        .iter()
        .zip(&row_log)
        .map(|(p, l)| p * (l - shift).exp())
        .collect();
    let total = numeric::sum(pi2.iter().copied());
    pi2.iter_mut().for_each(|p| *p /= total);
    Ok(ChainModel { family, k_max, pi, pi2, transition })
}

/// Fixed point of `π(j) = ρ^j Σ_k π(k) U(k,j)`, iterated from `pi`.
///
/// When columns can grow by at most one cell, `π(j)` decays faster than any
/// geometric rate and its θ-coefficients lose relative accuracy to
/// cancellation; the sums here have positive terms only.
fn refine_last_column_law(family: FamilyId, rho: f64, mut pi: Vec<f64>) -> Vec<f64> {
    let k_max = pi.len();
    let weight: Vec<f64> = (1..=k_max).map(|j| rho.powi(j as i32)).collect();
    for _ in 0..500 {
        let mut next: Vec<f64> = (1..=k_max)
            .map(|j| {
                weight[j - 1]
                    * numeric::sum((1..=k_max).map(|k| {
                        pi[k - 1] * gluing_count(family, k as u32, j as u32) as f64
                    }))
            })
            .collect();
        let total = numeric::sum(next.iter().copied());
        next.iter_mut().for_each(|p| *p /= total);
        let change = next
            .iter()
            .zip(&pi)
            .filter(|(a, _)| **a > 1e-280)
            .map(|(a, b)| ((a - b) / a).abs())
            .fold(0.0, f64::max);
        pi = next;
        if change < 1e-15 {
            break;
        }
    }
    pi
}

static CACHE: [OnceLock<Result<Arc<ChainModel>>>; 6] = [const { OnceLock::new() }; 6];

/// Chain at the default truncations, built once per family.
pub fn chain_model(family: FamilyId) -> Result<Arc<ChainModel>> {
    CACHE[family.index()]
        .get_or_init(|| {
            let sc = spectral::bender_width_constants(family)?;
            build_chain(&sc, &KernelModel::default_for(family)).map(Arc::new)
        })
        .clone()
}

fn in_range(family: FamilyId, j: usize) -> Result<()> {
    if j == 0 || j > DEFAULT_K_MAX {
        return Err(Error::InvalidParameter(format!(
            "column size {j} outside 1..={DEFAULT_K_MAX} for {family}"
        )));
    }
    Ok(())
}

/// `π(j)`, the asymptotic law of the last column.
pub fn last_column_law(family: FamilyId, j: usize) -> Result<f64> {
    in_range(family, j)?;
    Ok(chain_model(family)?.pi_at(j))
}

/// `Π(k,j)`.
pub fn transition(family: FamilyId, k: usize, j: usize) -> Result<f64> {
    in_range(family, k)?;
    in_range(family, j)?;
    Ok(chain_model(family)?.at(k, j))
}

/// `π₂(k)`.
pub fn stationary_law(family: FamilyId, k: usize) -> Result<f64> {
    in_range(family, k)?;
    Ok(chain_model(family)?.pi2_at(k))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    pub family: FamilyId,
    pub k_max: usize,
    pub row_sum_residual: f64,
    pub stationarity_residual: f64,
    pub reversibility_residual: f64,
    /// Total-variation distance between row 1 of `Π^10` and `π₂`.
    pub mixing_tv: f64,
}

pub const MIXING_STEPS: usize = 10;

pub fn chain_checks(model: &ChainModel) -> ChainReport {
    let k = model.k_max;
    let inner = k.saturating_sub(5).max(1);
    let mut row_sum: f64 = 0.0;
    let mut stat: f64 = 0.0;
    let mut rev: f64 = 0.0;
    for a in 1..=inner {
        row_sum = row_sum.max((numeric::sum(model.row(a).iter().copied()) - 1.0).abs());
        let flow = numeric::sum((1..=k).map(|b| model.pi2_at(b) * model.at(b, a)));
        stat = stat.max((flow - model.pi2_at(a)).abs());
        for b in 1..=inner {
            let d = model.pi2_at(a) * model.at(a, b) - model.pi2_at(b) * model.at(b, a);
            rev = rev.max(d.abs());
        }
    }
    let mut dist = vec![0.0; k];
    dist[0] = 1.0;
    for _ in 0..MIXING_STEPS {
        dist = step(model, &dist);
    }
    let tv = 0.5 * numeric::sum(dist.iter().zip(&model.pi2).map(|(p, q)| (p - q).abs()));
    ChainReport {
        family: model.family,
        k_max: k,
        row_sum_residual: row_sum,
        stationarity_residual: stat,
        reversibility_residual: rev,
        mixing_tv: tv,
    }
}

/// One step of the law `p ↦ pΠ`.
pub fn step(model: &ChainModel, p: &[f64]) -> Vec<f64> {
    let k = model.k_max;
    (1..=k)
        .map(|j| numeric::sum((1..=k).map(|a| p[a - 1] * model.at(a, j))))
        .collect()
}

/// Largest `|C₂(k) − ρ^k Σ_j U(k,j) C₂(j)| / C₂(k)` over `k ≤ k_upto`.
pub fn weight_identity_residual(sc: &SpectralConstants, k_upto: usize) -> f64 {
    let kmax = sc.k_max();
    (1..=k_upto.min(kmax))
        .map(|k| {
            let s = numeric::sum((1..=kmax).map(|j| {
                gluing_count(sc.family, k as u32, j as u32) as f64 * (sc.c2_log[j - 1] - sc.c2_log[k - 1]).exp()
            }));
            (1.0 - sc.rho.powi(k as i32) * s).abs()
        })
        .fold(0.0, f64::max)
}

/// Writes `k,j,Pi` rows.
pub fn write_chain_csv(model: &ChainModel, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "k,j,Pi")?;
    for k in 1..=model.k_max {
        for j in 1..=model.k_max {
            writeln!(out, "{k},{j},{}", crate::cli::fmt_num(model.at(k, j)))?;
        }
    }
    Ok(())
}
