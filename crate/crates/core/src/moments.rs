//! Vertical-perimeter moments along the column chain and the final
//! Gaussian perimeter constants.
//!
//! Long-range covariances of step functionals `F(x_{d−1}, x_d)` are summed
//! in closed form through the pole decomposition of the width/area
//! generating function: for first column `j`, the regular part contributes
//! `M₁(j,ℓ) = [θ^ℓ]R(θ)` and the simple pole at `w = 1` contributes
//! `M₂(j,ℓ) = [θ^ℓ](ϕ_w/h_w − ϕ h_ww/(2h_w²))` once the divergent pieces
//! cancel. Then
//!
//! `Ξ₅(F₁,F₂) = Σ_j g₁(j) Σ_ℓ (M₁ + M₂)(j,ℓ) h₂(ℓ)` with
//! `g₁(j) = Σ_u π₂(u)Π(u,j)F₁(u,j)/C₂(j)` and `h₂(ℓ) = Σ_k U(ℓ,k)C₂(k)F₂(ℓ,k)`.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{gluing_count, horizontal_increment, placement_contributions, FamilyId};
use crate::markov::{self, ChainModel};
use crate::numeric::{self, Accumulator};
use crate::qseries::{KernelModel, ThetaBuilder};
use crate::spectral::{self, SpectralConstants};

/// Conditional moments `(E[T | k, j], E[T² | k, j])` of one vertical step.
pub fn step_moments(family: FamilyId, k: u32, j: u32) -> Result<(f64, f64)> {
    if k == 0 || j == 0 || gluing_count(family, k, j) == 0 {
        return Err(Error::InvalidPair { family, k, j });
    }
    if family == FamilyId::Dcc {
        return Ok(dcc_step_moments(k, j));
    }
    let ts = placement_contributions(family, k, j);
    let n = ts.len() as f64;
    let m1 = ts.iter().map(|&t| t as f64).sum::<f64>() / n;
    let m2 = ts.iter().map(|&t| (t as f64).powi(2)).sum::<f64>() / n;
    Ok((m1, m2))
}

/// dcc bookkeeping: `T_d = |x_d − u_{d−1}| + (x_d − u_d)` with `u_{d−1}`
/// uniform on `1..=k` and `u_d` uniform on `1..=j`.
fn dcc_step_moments(k: u32, j: u32) -> (f64, f64) {
    let (kf, jf) = (k as f64, j as f64);
    let a1 = (1..=k).map(|i| (j as f64 - i as f64).abs()).sum::<f64>() / kf;
    let a2 = (1..=k).map(|i| (j as f64 - i as f64).powi(2)).sum::<f64>() / kf;
    let z1 = (jf - 1.0) / 2.0;
    let z2 = (jf - 1.0) * (2.0 * jf - 1.0) / 6.0;
    (a1 + z1, a2 + 2.0 * a1 * z1 + z2)
}

/// Dense table of a functional `F(k, j)` over `1..=K_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepTable {
    k_max: usize,
    values: Vec<f64>,
}

impl StepTable {
    pub fn from_fn(k_max: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(k_max * k_max);
        for k in 1..=k_max {
            for j in 1..=k_max {
                values.push(f(k, j));
            }
        }
        StepTable { k_max, values }
    }

    pub fn at(&self, k: usize, j: usize) -> f64 {
        self.values[(k - 1) * self.k_max + j - 1]
    }
}

/// Everything needed to evaluate chain covariances for one family.
#[derive(Debug)]
pub struct FamilyModel {
    pub model: KernelModel,
    pub spectral: SpectralConstants,
    pub chain: Arc<ChainModel>,
    /// Row-major `M₁ + M₂`, rows `j = 1..=K_max`, columns `ℓ = 0..=L_max`.
    cov: Vec<f64>,
    width: usize,
    mean_t: StepTable,
    mean_t2: StepTable,
}

impl FamilyModel {
    pub fn build(model: &KernelModel, k_max: usize) -> Result<Self> {
        let sc = spectral::spectral_constants(model, k_max)?;
        let chain = Arc::new(markov::build_chain(&sc, model)?);
        Self::assemble(model, sc, chain)
    }

    fn assemble(model: &KernelModel, sc: SpectralConstants, chain: Arc<ChainModel>) -> Result<Self> {
        let k_max = sc.k_max();
        let width = model.l_max + 1;
        let builder = ThetaBuilder::new(model, sc.rho)?;
        let (hw, hww) = (sc.kernel.w, sc.kernel.ww);
        let mut cov = vec![0.0; k_max * width];
        for j in 1..=k_max {
            let phi = builder.phi(j as u32)?;
            let row = &mut cov[(j - 1) * width..j * width];
            for (l, slot) in row.iter_mut().enumerate() {
                let m2 = phi.dw.coeff(l) / hw - phi.value.coeff(l) * hww / (2.0 * hw * hw);
                *slot = phi.regular.coeff(l) + m2;
            }
        }
        let family = model.family;
        let moments = |k: usize, j: usize| step_moments(family, k as u32, j as u32).unwrap_or((0.0, 0.0));
        let mean_t = StepTable::from_fn(k_max, |k, j| moments(k, j).0);
        let mean_t2 = StepTable::from_fn(k_max, |k, j| moments(k, j).1);
        Ok(FamilyModel { model: *model, spectral: sc, chain, cov, width, mean_t, mean_t2 })
    }

    pub fn k_max(&self) -> usize {
        self.spectral.k_max()
    }

    pub fn family(&self) -> FamilyId {
        self.model.family
    }

    /// `E[T | k, j]` over the truncated range.
    pub fn mean_t(&self) -> &StepTable {
        &self.mean_t
    }

    /// Stationary expectation `Σ π₂(k)Π(k,j) F(k,j)`.
    pub fn expect(&self, f: &StepTable) -> f64 {
        let k_max = self.k_max();
        let mut acc = Accumulator::new();
        for k in 1..=k_max {
            let p = self.chain.pi2_at(k);
            if p == 0.0 {
                continue;
            }
            for j in 1..=k_max {
                acc.add(p * self.chain.at(k, j) * f.at(k, j));
            }
        }
        acc.value()
    }

    /// Total covariance between `F₁` at one step and `F₂` at every later step.
    pub fn xi5(&self, f1: &StepTable, f2: &StepTable) -> f64 {
        let k_max = self.k_max();
        let sc = &self.spectral;
        let family = self.family();
        let g1: Vec<f64> = (1..=k_max)
            .map(|j| {
                let s = numeric::sum((1..=k_max).map(|u| {
                    self.chain.pi2_at(u) * self.chain.at(u, j) * f1.at(u, j)
                }));
                if s == 0.0 {
                    0.0
                } else {
                    s / sc.c2_at(j)
                }
            })
            .collect();
        let h2: Vec<f64> = (0..self.width)
            .map(|l| {
                if l == 0 || l > k_max {
                    return 0.0;
                }
                numeric::sum((1..=k_max).map(|k| {
                    gluing_count(family, l as u32, k as u32) as f64 * sc.c2_at(k) * f2.at(l, k)
                }))
            })
            .collect();
        let mut acc = Accumulator::new();
        for j in 1..=k_max {
            if g1[j - 1] == 0.0 || !g1[j - 1].is_finite() {
                continue;
            }
            let row = &self.cov[(j - 1) * self.width..j * self.width];
            acc.add(g1[j - 1] * numeric::dot(row, &h2));
        }
        acc.value()
    }
}

static MODELS: [OnceLock<Result<Arc<FamilyModel>>>; 6] = [const { OnceLock::new() }; 6];

/// Family model at the default truncations, built once.
pub fn family_model(family: FamilyId) -> Result<Arc<FamilyModel>> {
    MODELS[family.index()]
        .get_or_init(|| {
            let sc = spectral::bender_width_constants(family)?;
            let chain = markov::chain_model(family)?;
            FamilyModel::assemble(&KernelModel::default_for(family), sc, chain).map(Arc::new)
        })
        .clone()
}

pub fn xi5(
    family: FamilyId,
    f1: impl Fn(usize, usize) -> f64,
    f2: impl Fn(usize, usize) -> f64,
) -> Result<f64> {
    let fm = family_model(family)?;
    let k_max = fm.k_max();
    Ok(fm.xi5(&StepTable::from_fn(k_max, f1), &StepTable::from_fn(k_max, f2)))
}

/// Stationary mean and variance of one vertical step.
pub fn vertical_stats(family: FamilyId) -> Result<(f64, f64)> {
    let fm = family_model(family)?;
    Ok(vertical_stats_with(&fm))
}

pub fn vertical_stats_with(fm: &FamilyModel) -> (f64, f64) {
    if fm.family() == FamilyId::Dcc {
        let s = DccSums::new(&fm.chain.pi2);
        return (s.mu3, s.sigma3_sq);
    }
    let mu3 = fm.expect(&fm.mean_t);
    (mu3, fm.expect(&fm.mean_t2) - mu3 * mu3)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerimeterStats {
    pub family: FamilyId,
    pub mu3: f64,
    pub sigma3_sq: f64,
    #[serde(rename = "sigmaQ_sq")]
    pub sigma_q_sq: f64,
    #[serde(rename = "C_XQ")]
    pub c_xq: f64,
    #[serde(rename = "rho_XQ")]
    pub rho_xq: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mu4: f64,
    pub sigma4_sq: f64,
    pub beta_star: f64,
    pub mu4_star: f64,
    pub sigma4_star_sq: f64,
    /// One-column size variance `σ_x²`.
    pub sigma_x_sq: f64,
    /// `σ_x² + 2Ξ₅(x, x)`, which must reproduce `σ₂²`.
    #[serde(rename = "sigmaX_sq")]
    pub sigma_big_x_sq: f64,
}

impl PerimeterStats {
    fn assemble(
        family: FamilyId,
        sc: &SpectralConstants,
        mu3: f64,
        sigma3_sq: f64,
        sigma_q_sq: f64,
        c_xq: f64,
        sigma_x_sq: f64,
        sigma_big_x_sq: f64,
    ) -> Self {
        let sigma2 = sc.sigma2_sq.sqrt();
        let sigma_q = sigma_q_sq.sqrt();
        let rho_xq = c_xq / (sigma2 * sigma_q);
        let h = horizontal_increment(family) as f64;
        let alpha = sigma_q * rho_xq / sigma2;
        let shift = rho_xq * sc.mu2 * sigma_q / sigma2;
        let beta = mu3 + h - shift;
        let beta_star = mu3 - shift;
        let gamma = sigma_q_sq * (1.0 - rho_xq * rho_xq);
        PerimeterStats {
            family,
            mu3,
            sigma3_sq,
            sigma_q_sq,
            c_xq,
            rho_xq,
            alpha,
            beta,
            gamma,
            mu4: alpha + beta * sc.mu1,
            sigma4_sq: gamma * sc.mu1 + sc.sigma1_sq * beta * beta,
            beta_star,
            mu4_star: alpha + beta_star * sc.mu1,
            sigma4_star_sq: gamma * sc.mu1 + sc.sigma1_sq * beta_star * beta_star,
            sigma_x_sq,
            sigma_big_x_sq,
        }
    }
}

static STATS: [OnceLock<Result<PerimeterStats>>; 6] = [const { OnceLock::new() }; 6];

/// Final perimeter constants at the default truncations.
pub fn joint_stats(family: FamilyId) -> Result<PerimeterStats> {
    STATS[family.index()]
        .get_or_init(|| family_model(family).map(|fm| joint_stats_with(&fm)))
        .clone()
}

/// `dcc` uses its iid-column sums, every other family the chain covariances.
pub fn joint_stats_with(fm: &FamilyModel) -> PerimeterStats {
    if fm.family() == FamilyId::Dcc {
        let s = DccSums::new(&fm.chain.pi2);
        return PerimeterStats::assemble(
            FamilyId::Dcc,
            &fm.spectral,
            s.mu3,
            s.sigma3_sq,
            s.sigma_q_sq,
            s.c_xq,
            s.sigma_x_sq,
            s.sigma_x_sq,
        );
    }
    general_stats(fm)
}

/// Chain-covariance route, valid for every family whose vertical steps are
/// conditionally independent given the column sizes.
pub fn general_stats(fm: &FamilyModel) -> PerimeterStats {
    let k_max = fm.k_max();
    let cur = StepTable::from_fn(k_max, |_, j| j as f64);
    let cur_t = StepTable::from_fn(k_max, |k, j| j as f64 * fm.mean_t.at(k, j));
    let mu3 = fm.expect(&fm.mean_t);
    let sigma3_sq = fm.expect(&fm.mean_t2) - mu3 * mu3;
    let mu2 = fm.chain.mean_size();
    let sigma_x_sq = fm.chain.size_variance();
    let sigma_big_x_sq = sigma_x_sq + 2.0 * fm.xi5(&cur, &cur);
    let sigma_q_sq = sigma3_sq + 2.0 * fm.xi5(&fm.mean_t, &fm.mean_t);
    let c_xq = fm.expect(&cur_t) - mu2 * mu3 + fm.xi5(&cur, &fm.mean_t) + fm.xi5(&fm.mean_t, &cur);
    PerimeterStats::assemble(
        fm.family(),
        &fm.spectral,
        mu3,
        sigma3_sq,
        sigma_q_sq,
        c_xq,
        sigma_x_sq,
        sigma_big_x_sq,
    )
}

/// Exact sums for `dcc`, whose columns are iid with law `π₂` and whose steps
/// share the offsets `u_d` uniform on `1..=x_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct DccSums {
    pub mu2: f64,
    pub sigma_x_sq: f64,
    pub mu3: f64,
    pub sigma3_sq: f64,
    pub sigma_q_sq: f64,
    pub c_xq: f64,
}

impl DccSums {
    pub fn new(pi2: &[f64]) -> Self {
        let k_max = pi2.len();
        let p = |k: usize| pi2[k - 1];
        let size = |k: usize| k as f64;
        // law of u: P_u(r) = Σ_{k ≥ r} π₂(k)/k
        let mut pu = vec![0.0; k_max + 2];
        for r in (1..=k_max).rev() {
            pu[r] = pu[r + 1] + p(r) / size(r);
        }
        // g(v) = E|x − v|
        let g: Vec<f64> = (0..=k_max)
            .map(|v| numeric::sum((1..=k_max).map(|l| p(l) * (size(l) - v as f64).abs())))
            .collect();
        let sum_g: Vec<f64> = {
            let mut acc = vec![0.0; k_max + 1];
            for v in 1..=k_max {
                acc[v] = acc[v - 1] + g[v];
            }
            acc
        };
        let over_ur = |f: &dyn Fn(usize, usize) -> f64| {
            numeric::sum((1..=k_max).flat_map(|r| {
                let pr = pu[r];
                (1..=k_max).map(move |j| (r, j, pr))
            })
            .map(|(r, j, pr)| pr * p(j) * f(r, j)))
        };
        let over_j = |f: &dyn Fn(usize) -> f64| numeric::sum((1..=k_max).map(|j| p(j) * f(j)));

        let mu2 = over_j(&|j| size(j));
        let sigma_x_sq = over_j(&|j| (size(j) - mu2).powi(2));
        let e_w = over_ur(&|r, j| (size(j) - size(r)).abs());
        let e_w2 = over_ur(&|r, j| (size(j) - size(r)).powi(2));
        let e_z = over_j(&|j| (size(j) - 1.0) / 2.0);
        let e_z2 = over_j(&|j| (size(j) - 1.0) * (2.0 * size(j) - 1.0) / 6.0);
        let e_wz = over_ur(&|r, j| (size(j) - size(r)).abs() * (size(j) - 1.0) / 2.0);
        let mu3 = e_w + e_z;
        let sigma3_sq = e_w2 + 2.0 * e_wz + e_z2 - mu3 * mu3;

        let s4 = over_ur(&|r, j| (size(j) - size(r)).abs() * sum_g[j] / size(j));
        let s5 = e_w * e_z;
        let s6 = e_z * e_z;
        let s7 = over_j(&|j| {
            (1..=j).map(|v| (size(j) - v as f64) * g[v]).sum::<f64>() / size(j)
        });
        let sigma_q_sq = sigma3_sq + 2.0 * (s4 + s5 + s6 + s7 - mu3 * mu3);

        let s8 = over_ur(&|r, j| (size(j) - size(r)).abs() * size(j))
            + over_j(&|j| size(j) * (size(j) - 1.0) / 2.0);
        let s9 = over_j(&|j| sum_g[j]) + mu2 * e_z;
        let c_xq = s8 + s9 - 2.0 * mu2 * mu3;
        DccSums { mu2, sigma_x_sq, mu3, sigma3_sq, sigma_q_sq, c_xq }
    }
}

/// Closed forms for iid Geometric(`p`) columns (the `wa` family at `p = 1/2`).
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricWord {
    pub mu1: f64,
    pub sigma1_sq: f64,
    pub mu2: f64,
    pub sigma2_sq: f64,
    pub mu3: f64,
    pub sigma3_sq: f64,
    pub sigma_q_sq: f64,
    pub c_xq: f64,
    pub rho_xq: f64,
    pub mu4: f64,
    pub sigma4_sq: f64,
}

pub fn geometric_word(p: f64) -> GeometricWord {
    let q = 1.0 - p;
    let mu2 = 1.0 / p;
    let sigma2_sq = q / (p * p);
    let mu1 = p;
    let sigma1_sq = sigma2_sq * mu1.powi(3);
    let d = p * p * (2.0 - p).powi(2);
    let mu3 = 2.0 * q / (p * (2.0 - p));
    let sigma3_sq = 2.0 * q * (p * p - 2.0 * p + 2.0) / d;
    let sigma_q_sq = 4.0 * q * (p.powi(4) + 9.0 * p * p - 4.0 * p.powi(3) - 10.0 * p + 5.0)
        / (d * (p * p + 3.0 - 3.0 * p));
    let c_xq = 2.0 * (2.0 - 4.0 * p + 3.0 * p * p - p.powi(3)) / d;
    let rho_xq = c_xq / (sigma2_sq * sigma_q_sq).sqrt();
    let sigma2 = sigma2_sq.sqrt();
    let sigma_q = sigma_q_sq.sqrt();
    let alpha = sigma_q * rho_xq / sigma2;
    let beta = mu3 + 2.0 - rho_xq * mu2 * sigma_q / sigma2;
    let gamma = sigma_q_sq * (1.0 - rho_xq * rho_xq);
    GeometricWord {
        mu1,
        sigma1_sq,
        mu2,
        sigma2_sq,
        mu3,
        sigma3_sq,
        sigma_q_sq,
        c_xq,
        rho_xq,
        mu4: alpha + beta * mu1,
        sigma4_sq: gamma * mu1 + sigma1_sq * beta * beta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dcc_step_law_matches_enumeration() {
        for k in 1..8u32 {
            for j in 1..8u32 {
                let mut s1 = 0.0;
                let mut s2 = 0.0;
                for up in 1..=k {
                    for u in 1..=j {
                        let t = (j as f64 - up as f64).abs() + (j - u) as f64;
                        s1 += t;
                        s2 += t * t;
                    }
                }
                let n = (k * j) as f64;
                let (m1, m2) = dcc_step_moments(k, j);
                assert!((m1 - s1 / n).abs() < 1e-12);
                assert!((m2 - s2 / n).abs() < 1e-12);
            }
        }
    }
}
