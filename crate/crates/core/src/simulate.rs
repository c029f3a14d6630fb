//! Monte Carlo column chains with vertical perimeter attached.
//!
//! Randomness comes from ChaCha8 with one 64-bit seed per trial and four
//! fixed streams: columns, perimeter, and the same two for columns appended
//! by [`resize_to_area`]. Because every purpose has its own stream, a chain
//! can be sampled, extended or streamed to disk in any order with the same
//! result.

use std::io::Write;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::families::{gluing_count, placement_contributions, FamilyId};
use crate::markov::{self, ChainModel};
use crate::moments;
use crate::spectral;

/// Recorded in every output.
pub const GENERATOR: &str = "chacha8 (rand_chacha 0.3), splitmix64 trial seeds";

const STREAM_COLUMNS: u64 = 0;
const STREAM_PERIMETER: u64 = 1;
const STREAM_EXT_COLUMNS: u64 = 2;
const STREAM_EXT_PERIMETER: u64 = 3;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under master seed `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(seed ^ splitmix64(trial))
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Index drawn from a cumulative table, 1-based.
fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> u32 {
    let total = *cdf.last().expect("nonempty table");
    let u = rng.gen::<f64>() * total;
    let i = cdf.partition_point(|&c| c <= u);
    let i = i.min(cdf.len() - 1);
    // skip zero-probability bins left by ties at the top
    let i = (0..=i).rev().find(|&a| a == 0 || cdf[a] > cdf[a - 1]).unwrap_or(i);
    i as u32 + 1
}

fn cumulative(p: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    p.map(|x| {
        acc += x.max(0.0);
        acc
    })
    .collect()
}

/// Inverse-CDF tables for one family.
#[derive(Debug)]
pub struct Sampler {
    pub family: FamilyId,
    pub chain: Arc<ChainModel>,
    stationary: Vec<f64>,
    rows: Vec<Vec<f64>>,
    reversed: Vec<Vec<f64>>,
    steps: Vec<Vec<u32>>,
}

impl Sampler {
    pub fn new(chain: Arc<ChainModel>) -> Self {
        let k_max = chain.k_max;
        let stationary = cumulative(chain.pi2.iter().copied());
        let rows = (1..=k_max).map(|k| cumulative(chain.row(k).iter().copied())).collect();
        let reversed = (1..=k_max)
            .map(|j| {
                let ch: &ChainModel = &chain;
                let pj = ch.pi2_at(j);
                let col = (1..=k_max).map(move |k| chain_rev(ch, k, j, pj));
                let c = cumulative(col);
                if *c.last().unwrap_or(&0.0) > 0.0 {
                    c
                } else {
                    // unreachable state: fall back to the stationary law
                    cumulative(chain.pi2.iter().copied())
                }
            })
            .collect();
        let family = chain.family;
        let steps = (1..=k_max)
            .flat_map(|k| (1..=k_max).map(move |j| (k, j)))
            .map(|(k, j)| placement_contributions(family, k as u32, j as u32))
            .collect();
        Sampler { family, chain, stationary, rows, reversed, steps }
    }

    fn k_max(&self) -> usize {
        self.chain.k_max
    }

    fn first(&self, r: &mut ChaCha8Rng) -> u32 {
        draw(&self.stationary, r)
    }

    fn next(&self, k: u32, r: &mut ChaCha8Rng) -> u32 {
        draw(&self.rows[k as usize - 1], r)
    }

    fn previous(&self, j: u32, r: &mut ChaCha8Rng) -> u32 {
        draw(&self.reversed[j as usize - 1], r)
    }

    /// One vertical contribution for the step `k → j`. For `dcc` the
    /// previous offset `u_{d−1}` is carried in `offset` and updated.
    fn contribution(&self, k: u32, j: u32, offset: &mut u32, r: &mut ChaCha8Rng) -> u32 {
        if self.family == FamilyId::Dcc {
            let u = r.gen_range(1..=j);
            let t = j.abs_diff(*offset) + (j - u);
            *offset = u;
            return t;
        }
        let s = &self.steps[(k as usize - 1) * self.k_max() + j as usize - 1];
        debug_assert_eq!(s.len() as u64, gluing_count(self.family, k, j));
        s[r.gen_range(0..s.len())]
    }
}

fn chain_rev(chain: &ChainModel, k: usize, j: usize, pj: f64) -> f64 {
    if pj > 0.0 {
        chain.pi2_at(k) * chain.at(k, j) / pj
    } else {
        0.0
    }
}

static SAMPLERS: [OnceLock<Result<Arc<Sampler>>>; 6] = [const { OnceLock::new() }; 6];

pub fn sampler(family: FamilyId) -> Result<Arc<Sampler>> {
    SAMPLERS[family.index()]
        .get_or_init(|| markov::chain_model(family).map(|c| Arc::new(Sampler::new(c))))
        .clone()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub family: FamilyId,
    pub seed: u64,
    /// Column before the first, drawn so that `T₁` is stationary.
    pub predecessor: u32,
    pub columns: Vec<u32>,
    /// `T_d`, empty until [`attach_perimeter`].
    pub vertical: Vec<u32>,
    /// `dcc` offsets `u_d`, with `u₀` first.
    offsets: Vec<u32>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// `X(d)` for `d = 1..=len`.
    pub fn partial_area(&self) -> Vec<u64> {
        prefix(&self.columns)
    }

    /// `Q(d)` for `d = 1..=len`.
    pub fn partial_vertical(&self) -> Vec<u64> {
        prefix(&self.vertical)
    }

    pub fn area(&self) -> u64 {
        self.columns.iter().map(|&x| x as u64).sum()
    }

    pub fn vertical_total(&self) -> u64 {
        self.vertical.iter().map(|&t| t as u64).sum()
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "step,x,X,T,Q")?;
        let (mut big_x, mut big_q) = (0u64, 0u64);
        for (d, &x) in self.columns.iter().enumerate() {
            let t = self.vertical.get(d).copied().unwrap_or(0);
            big_x += x as u64;
            big_q += t as u64;
            writeln!(out, "{},{x},{big_x},{t},{big_q}", d + 1)?;
        }
        writeln!(out, "# generator={GENERATOR} family={} seed={}", self.family, self.seed)?;
        Ok(())
    }
}

fn prefix(v: &[u32]) -> Vec<u64> {
    let mut acc = 0u64;
    v.iter()
        .map(|&x| {
            acc += x as u64;
            acc
        })
        .collect()
}

pub fn sample_chain(family: FamilyId, m: usize, seed: u64) -> Result<Trajectory> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    let s = sampler(family)?;
    let mut r = rng(seed, STREAM_COLUMNS);
    let mut columns = Vec::with_capacity(m);
    let first = s.first(&mut r);
    let predecessor = s.previous(first, &mut r);
    columns.push(first);
    for _ in 1..m {
        let k = *columns.last().unwrap();
        columns.push(s.next(k, &mut r));
    }
    Ok(Trajectory { family, seed, predecessor, columns, vertical: Vec::new(), offsets: Vec::new() })
}

pub fn attach_perimeter(mut traj: Trajectory) -> Result<Trajectory> {
    let s = sampler(traj.family)?;
    let mut r = rng(traj.seed, STREAM_PERIMETER);
    let mut offset = r.gen_range(1..=traj.predecessor);
    traj.offsets = vec![offset];
    traj.vertical.clear();
    let mut k = traj.predecessor;
    for &j in &traj.columns {
        traj.vertical.push(s.contribution(k, j, &mut offset, &mut r));
        if traj.family == FamilyId::Dcc {
            traj.offsets.push(offset);
        }
        k = j;
    }
    Ok(traj)
}

/// Extends the chain while `X < n`, then drops trailing columns while
/// `X > n`, leaving `m* = max{d : X(d) ≤ n}` columns.
pub fn resize_to_area(mut traj: Trajectory, n: u64) -> Result<Trajectory> {
    if traj.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    if n < traj.columns[0] as u64 {
        return Err(Error::InvalidParameter(format!(
            "target area {n} below first column {}",
            traj.columns[0]
        )));
    }
    let with_perimeter = traj.vertical.len() == traj.columns.len();
    let s = sampler(traj.family)?;
    let mut area = traj.area();
    if area < n {
        let mut rc = rng(traj.seed, STREAM_EXT_COLUMNS);
        let mut rp = rng(traj.seed, STREAM_EXT_PERIMETER);
        let mut offset = traj.offsets.last().copied().unwrap_or(1);
        while area < n {
            let k = *traj.columns.last().unwrap();
            let j = s.next(k, &mut rc);
            traj.columns.push(j);
            area += j as u64;
            if with_perimeter {
                traj.vertical.push(s.contribution(k, j, &mut offset, &mut rp));
                if traj.family == FamilyId::Dcc {
                    traj.offsets.push(offset);
                }
            }
        }
    }
    while area > n {
        let x = traj.columns.pop().unwrap();
        area -= x as u64;
        if with_perimeter {
            traj.vertical.pop();
            if traj.family == FamilyId::Dcc {
                traj.offsets.pop();
            }
        }
    }
    Ok(traj)
}

/// Streams `step,x,X,T,Q` rows without holding the chain in memory; the
/// output equals `sample_chain` + `attach_perimeter` + `write_csv`.
pub fn stream_trajectory(family: FamilyId, m: usize, seed: u64, out: &mut dyn Write) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    let s = sampler(family)?;
    let mut rc = rng(seed, STREAM_COLUMNS);
    let mut rp = rng(seed, STREAM_PERIMETER);
    let first = s.first(&mut rc);
    let predecessor = s.previous(first, &mut rc);
    let mut offset = rp.gen_range(1..=predecessor);
    writeln!(out, "step,x,X,T,Q")?;
    let (mut k, mut j) = (predecessor, first);
    let (mut big_x, mut big_q) = (0u64, 0u64);
    for d in 1..=m {
        if d > 1 {
            j = s.next(k, &mut rc);
        }
        let t = s.contribution(k, j, &mut offset, &mut rp);
        big_x += j as u64;
        big_q += t as u64;
        writeln!(out, "{d},{j},{big_x},{t},{big_q}")?;
        k = j;
    }
    writeln!(out, "# generator={GENERATOR} family={family} seed={seed}")?;
    Ok(())
}

/// Column chain with perimeter, ready for the statistics below.
pub fn sample_with_perimeter(family: FamilyId, m: usize, seed: u64) -> Result<Trajectory> {
    attach_perimeter(sample_chain(family, m, seed)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianReport {
    pub family: FamilyId,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub z_mu2: f64,
    /// `None` when fewer than two trials make the variance undefined.
    pub z_var2: Option<f64>,
    pub z_mu4s: f64,
    pub z_var4s: Option<f64>,
    pub ks: f64,
    pub variance_checked: bool,
    /// Target area `⌊m/μ₁⌋`.
    pub n: u64,
    pub generator: &'static str,
}

impl GaussianReport {
    /// Largest absolute z-score among those computed.
    pub fn max_abs_z(&self) -> f64 {
        [Some(self.z_mu2), self.z_var2, Some(self.z_mu4s), self.z_var4s]
            .into_iter()
            .flatten()
            .fold(0.0, |a: f64, z| a.max(z.abs()))
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 {
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        f64::NAN
    };
    (mean, var)
}

fn z_mean(sample_mean: f64, mu: f64, sigma_sq: f64, trials: usize) -> f64 {
    (sample_mean - mu) / (sigma_sq / trials as f64).sqrt()
}

fn z_variance(sample_var: f64, sigma_sq: f64, trials: usize) -> Option<f64> {
    (trials >= 2).then(|| (sample_var - sigma_sq) / (sigma_sq * (2.0 / (trials as f64 - 1.0)).sqrt()))
}

/// Kolmogorov–Smirnov distance of `x` from the standard Gaussian.
pub fn ks_statistic(x: &[f64]) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut v: Vec<f64> = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &y)| {
            let f = normal.cdf(y);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// `X(m)` is compared with `mμ₂, mσ₂²`; after resizing to `n = ⌊m/μ₁⌋`,
/// `Q(m*)` is compared with `nμ₄*, nσ₄*²`.
pub fn gaussian_check(family: FamilyId, m: usize, trials: usize, seed: u64) -> Result<GaussianReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let sc = spectral::bender_width_constants(family)?;
    let ps = moments::joint_stats(family)?;
    let n = (m as f64 / sc.mu1).floor() as u64;
    sampler(family)?;
    let outcomes: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<(f64, f64)> {
            let traj = sample_with_perimeter(family, m, trial_seed(seed, t))?;
            let x_m = traj.area() as f64;
            let resized = resize_to_area(traj, n.max(1))?;
            Ok((x_m, resized.vertical_total() as f64))
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let qs: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    let (mf, nf) = (m as f64, n as f64);
    let (mx, vx) = mean_var(&xs);
    let (mq, vq) = mean_var(&qs);
    let (mu4s, var4s) = (ps.mu4_star, ps.sigma4_star_sq);
    let normalized: Vec<f64> = qs.iter().map(|q| (q - nf * mu4s) / (nf * var4s).sqrt()).collect();
    Ok(GaussianReport {
        family,
        m,
        trials,
        seed,
        z_mu2: z_mean(mx, mf * sc.mu2, mf * sc.sigma2_sq, trials),
        z_var2: z_variance(vx, mf * sc.sigma2_sq, trials),
        z_mu4s: z_mean(mq, nf * mu4s, nf * var4s, trials),
        z_var4s: z_variance(vq, nf * var4s, trials),
        ks: ks_statistic(&normalized),
        variance_checked: trials >= 2,
        n,
        generator: GENERATOR,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_is_a_bijection_sample() {
        let a: Vec<u64> = (0..1000).map(splitmix64).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(a.len(), b.len());
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..1000).map(|i| normal.inverse_cdf((i as f64 + 0.5) / 1000.0)).collect();
        let d = ks_statistic(&x);
        assert!((d - 0.0005).abs() < 1e-8, "{d}");
    }
}
