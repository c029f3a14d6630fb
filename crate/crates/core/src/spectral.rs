//! Dominant singularity, Bender width constants and amplitudes.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::families::FamilyId;
use crate::numeric::{Jet, Scalar};
use crate::qseries::{self, KernelModel};

pub const DEFAULT_K_MAX: usize = 80;

/// Minimum `|S| / Σ|terms|` for which the escalier numerator is trusted.
const ES_CONDITION: f64 = 1e-6;
/// Agreement required between direct and recursive weight ratios.
const ES_RATIO_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralConstants {
    pub family: FamilyId,
    pub rho: f64,
    pub mu1: f64,
    pub sigma1_sq: f64,
    pub mu2: f64,
    pub sigma2_sq: f64,
    /// Amplitude of the base generating function: every first column for
    /// `dcc`, `cc`, `wa`; a single-cell first column for `dc`, `st`, `es`.
    pub c1: f64,
    pub c2: f64,
    /// Amplitudes summed over every first-column size.
    pub c1_total: f64,
    pub c2_total: f64,
    /// `h` and its partial derivatives at `(1, ρ)`.
    pub kernel: Jet,
    /// `C₂(j)` for `j = 1..=K_max`.
    pub c2_weights: Vec<f64>,
    /// `ln C₂(j)`, finite even where `C₂(j)` underflows.
    pub c2_log: Vec<f64>,
}

impl SpectralConstants {
    pub fn k_max(&self) -> usize {
        self.c2_weights.len()
    }

    pub fn c2_at(&self, j: usize) -> f64 {
        self.c2_weights[j - 1]
    }
}

pub fn find_rho(family: FamilyId) -> Result<f64> {
    find_rho_with(&KernelModel::default_for(family))
}

/// Smallest zero of `z ↦ h(1,z)` in `(0.01, 0.99)`.
pub fn find_rho_with(model: &KernelModel) -> Result<f64> {
    let h = |z: f64| qseries::kernel_h_at(model, 1.0, z);
    let (mut lo, mut hi) = scan_bracket(&h, model.family)?;
    let mut f_lo = h(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = h(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..3 {
        let jet = qseries::kernel_h_at(model, Jet::constant(1.0), Jet::var_z(z))?;
        if jet.z == 0.0 {
            break;
        }
        let next = z - jet.v / jet.z;
        if !(lo - 1e-12..=hi + 1e-12).contains(&next) {
            break;
        }
        z = next;
    }
    Ok(z)
}

fn scan_bracket(h: &impl Fn(f64) -> Result<f64>, family: FamilyId) -> Result<(f64, f64)> {
    let mut prev_z = 0.01;
    let mut prev = h(prev_z)?;
    for step in 2..=99 {
        let z = step as f64 * 0.01;
        let val = h(z)?;
        if prev == 0.0 {
            return Ok((prev_z, prev_z));
        }
        if (val > 0.0) != (prev > 0.0) {
            return Ok((prev_z, z));
        }
        prev_z = z;
        prev = val;
    }
    Err(Error::NoRoot(family))
}

static CACHE: [OnceLock<Result<SpectralConstants>>; 6] = [const { OnceLock::new() }; 6];

/// Constants at the default truncations, computed once per family.
pub fn bender_width_constants(family: FamilyId) -> Result<SpectralConstants> {
    CACHE[family.index()]
        .get_or_init(|| spectral_constants(&KernelModel::default_for(family), DEFAULT_K_MAX))
        .clone()
}

pub fn spectral_constants(model: &KernelModel, k_max: usize) -> Result<SpectralConstants> {
    if k_max < 10 {
        return Err(Error::InvalidParameter(format!("K_max = {k_max} < 10")));
    }
    let rho = find_rho_with(model)?;
    let w = Jet::var_w(1.0);
    let z = Jet::var_z(rho);
    let h = qseries::kernel_h_at(model, w, z)?;
    let r1 = -h.w / h.z;
    let r2 = -(r1 * r1 * h.zz + 2.0 * r1 * h.wz + h.w + h.ww) / h.z;
    let mu1 = -r1 / rho;
    let sigma1_sq = mu1 * mu1 - r2 / rho;

    let base = match model.family {
        FamilyId::Dcc | FamilyId::Cc | FamilyId::Wa => None,
        _ => Some(1),
    };
    let n_base = qseries::kernel_numerators_at(model, 1.0, rho, base)?.first();
    let (c2_weights, c2_log) = weights(model, rho, h.w, k_max)?;
    let c2_total = crate::numeric::sum(c2_weights.iter().copied());
    Ok(SpectralConstants {
        family: model.family,
        rho,
        mu1,
        sigma1_sq,
        mu2: 1.0 / mu1,
        sigma2_sq: sigma1_sq / (mu1 * mu1 * mu1),
        c1: -n_base / (rho * h.z),
        c2: -n_base / h.w,
        c1_total: c2_total * h.w / (rho * h.z),
        c2_total,
        kernel: h,
        c2_weights,
        c2_log,
    })
}

fn weights(model: &KernelModel, rho: f64, h_w: f64, k_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if model.family == FamilyId::Es {
        return escalier_weights(model, rho, h_w, k_max);
    }
    let mut c2 = Vec::with_capacity(k_max);
    for j in 1..=k_max as u32 {
        let n1 = qseries::kernel_numerators_at(model, 1.0, rho, Some(j))?.first();
        c2.push(-n1 / h_w);
    }
    let logs = c2.iter().map(|c: &f64| c.ln()).collect();
    Ok((c2, logs))
}

/// Escalier weights: the numerator `S(1,ρ,j)` while its alternating sum is
/// well conditioned, then the exact ratio recursion
/// `C₂(k)/C₂(k−1) = ρ^k / (1 − (C₂(k+1)/C₂(k))/ρ)` run backward from far out.
fn escalier_weights(
    model: &KernelModel,
    rho: f64,
    h_w: f64,
    k_max: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let ratios = escalier_ratios(rho, k_max);
    let mut c2: Vec<f64> = Vec::with_capacity(k_max);
    let mut logs = Vec::with_capacity(k_max);
    for j in 1..=k_max as u32 {
        let (s, abs) = qseries::escalier_s_conditioned(model.j_max, &1.0, &rho, j)?;
        let c = -s / h_w;
        if s.abs() < ES_CONDITION * abs || !(c > 0.0) {
            break;
        }
        if let Some(&prev) = c2.last() {
            if ((c / prev) / ratios[j as usize] - 1.0).abs() > ES_RATIO_TOL {
                break;
            }
        }
        c2.push(c);
        logs.push(c.ln());
    }
    if c2.is_empty() {
        return Err(Error::NonConvergence { what: "escalier C2(1)", last: f64::NAN });
    }
    if c2.len() < k_max {
        for j in c2.len() + 1..=k_max {
            let l = logs[j - 2] + ratios[j].ln();
            logs.push(l);
            c2.push(l.exp());
        }
    }
    Ok((c2, logs))
}

/// `r_k = C₂(k)/C₂(k−1)` for `k = 2..=k_max`, indexed by `k`.
pub fn escalier_ratios(rho: f64, k_max: usize) -> Vec<f64> {
    let far = k_max + 60;
    let mut r = vec![0.0; far + 2];
    for k in (2..=far).rev() {
        r[k] = rho.powi(k as i32) / (1.0 - r[k + 1] / rho);
    }
    r.truncate(k_max + 1);
    r
}

/// `C₂(j)`: amplitude of polyominoes whose first column has size `j`.
pub fn c2_weight(family: FamilyId, j: usize) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidParameter("column size must be positive".into()));
    }
    let sc = bender_width_constants(family)?;
    if j <= sc.k_max() {
        return Ok(sc.c2_at(j));
    }
    let sc = spectral_constants(&KernelModel::default_for(family), j)?;
    Ok(sc.c2_at(j))
}

/// Winding number of `z ↦ h(1,z)` around `|z| = ρ·radius_factor`.
pub fn verify_dominant_root(family: FamilyId, radius_factor: f64) -> Result<u32> {
    let model = KernelModel::default_for(family);
    let rho = bender_width_constants(family)?.rho;
    if !(radius_factor > 1.0 && radius_factor < 0.99 / rho) {
        return Err(Error::InvalidParameter(format!(
            "radius factor {radius_factor} outside (1, {:.4})",
            0.99 / rho
        )));
    }
    winding_number(&model, rho * radius_factor, 8192)
}

pub fn winding_number(model: &KernelModel, radius: f64, samples: usize) -> Result<u32> {
    let samples = samples.max(4096);
    let eval = |k: usize| {
        let t = 2.0 * PI * k as f64 / samples as f64;
        qseries::kernel_h_at(model, Complex64::cst(1.0), Complex64::from_polar(radius, t))
    };
    let first = eval(0)?;
    let mut prev = first;
    let mut total = 0.0;
    for k in 1..=samples {
        let cur = if k == samples { first } else { eval(k)? };
        let d = (cur / prev).arg();
        if d.abs() > PI / 2.0 {
            return Err(Error::Inconclusive(d.abs()));
        }
        total += d;
        prev = cur;
    }
    let turns = (total / (2.0 * PI)).round();
    Ok(turns.max(0.0) as u32)
}

const GF_TERMS: usize = 16;
const GF_STEP: f64 = 1e-4;

/// `(μ₄, σ₄²)` from the known joint area/perimeter generating function.
pub fn gf_perimeter_constants(family: FamilyId) -> Result<(f64, f64)> {
    let f: fn(f64, f64) -> f64 = match family {
        FamilyId::Dcc => gf_dcc,
        FamilyId::Cc => gf_cc,
        FamilyId::St => gf_st,
        FamilyId::Wa => gf_wa,
        FamilyId::Dc | FamilyId::Es => return Err(Error::UnsupportedFamily(family)),
    };
    let r0 = {
        let g = |z: f64| Ok(f(1.0, z));
        let (lo, hi) = scan_bracket(&g, family)?;
        bisect(|z| f(1.0, z), lo, hi)
    };
    let root = |s: f64| {
        let v = s.exp();
        bisect(|z| f(v, z), r0 - 0.02, r0 + 0.02)
    };
    let derivs = |h: f64| {
        let (m2, m1, p1, p2) = (root(-2.0 * h), root(-h), root(h), root(2.0 * h));
        let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
        let d2 = (-m2 + 16.0 * m1 - 30.0 * r0 + 16.0 * p1 - p2) / (12.0 * h * h);
        (d1, d2)
    };
    let (a1, a2) = derivs(GF_STEP);
    let (b1, b2) = derivs(2.0 * GF_STEP);
    let d1 = a1 + (a1 - b1) / 15.0;
    let d2 = a2 + (a2 - b2) / 15.0;
    let mu = -d1 / r0;
    let var = mu * mu - d2 / r0;
    Ok((2.0 * mu, 4.0 * var))
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn poch(a: f64, z: f64, n: usize) -> f64 {
    qseries::q_pochhammer(a, z, n)
}

fn tri(n: usize) -> i32 {
    (n * (n + 1) / 2) as i32
}

fn gf_dcc(v: f64, z: f64) -> f64 {
    let mut s = 0.0;
    for j in 1..=GF_TERMS {
        s += v.powi(j as i32) * (v - 1.0).powi(j as i32 - 1) * z.powi(tri(j))
            / (poch(z, z, j) * poch(v * z, z, j - 1) * poch(v * z, z, j));
    }
    1.0 - s
}

fn gf_wa(v: f64, z: f64) -> f64 {
    let mut s = 0.0;
    for n in 1..=GF_TERMS {
        s += v.powi(n as i32) * (v - 1.0).powi(n as i32 - 1) * z.powi(tri(n))
            / (poch(z, z, n) * poch(v * z, z, n - 1));
    }
    1.0 - s
}

fn gf_st(v: f64, z: f64) -> f64 {
    let mut s = 0.0;
    for n in 0..GF_TERMS {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * v.powi(n as i32) * z.powi(tri(n)) / (poch(z, z, n) * poch(v * z, z, n));
    }
    s
}

/// Column-convex joint GF denominator with the two `n = 1` terms, which
/// have cancelling poles at `v = 1`, combined in closed form.
fn gf_cc(v: f64, z: f64) -> f64 {
    let vz = v * z;
    let mut s = 1.0 - vz * (1.0 + vz) / ((1.0 - vz) * (1.0 - z));
    let v2z = v * v * z;
    for n in 2..=GF_TERMS {
        let ni = n as i32;
        let sign_x = if n % 2 == 0 { -1.0 } else { 1.0 };
        let x = sign_x * v.powi(ni) * (1.0 - v).powi(2 * ni - 4) * z.powi(tri(n))
            * poch(v2z, z, 2 * n - 2)
            / (poch(z, z, n - 1)
                * poch(vz, z, n - 2)
                * poch(vz, z, n - 1).powi(2)
                * poch(vz, z, n)
                * poch(v2z, z, n - 1));
        let w = -sign_x * v.powi(ni) * (1.0 - v).powi(2 * ni - 3) * z.powi(tri(n))
            * poch(v2z, z, 2 * n - 1)
            / (poch(z, z, n)
                * poch(vz, z, n - 1).powi(3)
                * poch(vz, z, n)
                * poch(v2z, z, n - 1));
        s += v * x + w;
    }
    s
}
