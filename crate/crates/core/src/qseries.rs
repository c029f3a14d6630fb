//! Generating-function building blocks: kernels `h(w,z)`, numerators for a
//! first column of size `i`, the q-Bessel type series of the `dc` and `st`
//! families, and the continued-fraction apparatus of the escalier family.
//!
//! Every width/area generating function is written as
//! `φ(w,θ,z,i)/w = R(θ) + ϕ(w,θ,z,i)/h(w,z)`, where `R` has no pole at the
//! dominant singularity. [`theta_phi`] returns the θ-coefficients of `R` and
//! of `ϕ`, `∂ϕ/∂w` at `w = 1`.

use crate::error::{Error, Result};
use crate::families::FamilyId;
use crate::numeric::{Jet, Scalar, Series};

pub const DEFAULT_J_MAX: usize = 16;
pub const DEFAULT_L_MAX: usize = 60;

/// Relative size of the last retained q-series term that counts as converged.
const SERIES_TOL: f64 = 1e-10;

/// Relative tolerance for the adaptively summed escalier tails.
const TAIL_TOL: f64 = 1e-18;
const TAIL_CAP: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelModel {
    pub family: FamilyId,
    pub j_max: usize,
    pub l_max: usize,
}

impl KernelModel {
    pub fn new(family: FamilyId, j_max: usize, l_max: usize) -> Result<Self> {
        if j_max < 8 {
            return Err(Error::InvalidParameter(format!("J_max = {j_max} < 8")));
        }
        if l_max < 40 {
            return Err(Error::InvalidParameter(format!("L_max = {l_max} < 40")));
        }
        Ok(KernelModel { family, j_max, l_max })
    }

    pub fn default_for(family: FamilyId) -> Self {
        KernelModel { family, j_max: DEFAULT_J_MAX, l_max: DEFAULT_L_MAX }
    }

    /// The kernel is a polynomial and the truncation parameters are unused.
    pub fn closed_form(&self) -> bool {
        self.family.is_polynomial()
    }

    pub fn with_l_max(self, l_max: usize) -> Self {
        KernelModel { l_max, ..self }
    }
}

/// Coefficients `c_ℓ`, `ℓ = 0..=L`, of a truncated series in `θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaSeries {
    pub coeffs: Vec<f64>,
}

impl ThetaSeries {
    pub fn coeff(&self, l: usize) -> f64 {
        self.coeffs.get(l).copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        crate::numeric::sum(self.coeffs.iter().copied())
    }

    /// `|c_L| / max_ℓ |c_ℓ|`.
    pub fn tail_ratio(&self) -> f64 {
        let max = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        match self.coeffs.last() {
            Some(last) if max > 0.0 => last.abs() / max,
            _ => 0.0,
        }
    }
}

/// The pole decomposition of `φ/w` for one first-column size.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaPhi {
    /// `R(θ)` at `w = 1`.
    pub regular: ThetaSeries,
    /// `ϕ(1,θ,z,i)`.
    pub value: ThetaSeries,
    /// `∂ϕ/∂w (1,θ,z,i)`.
    pub dw: ThetaSeries,
}

/// Numerators of the resolved linear system.
#[derive(Clone, Debug, PartialEq)]
pub enum Numerators<S> {
    Pair(S, S),
    Single(S),
}

impl<S: Clone> Numerators<S> {
    /// `N₁`, or `S` for the escalier family: the residue numerator.
    pub fn first(&self) -> S {
        match self {
            Numerators::Pair(a, _) | Numerators::Single(a) => a.clone(),
        }
    }
}

/// `(a; z)_n = (1−a)(1−az)···(1−az^{n−1})`.
pub fn q_pochhammer(a: f64, z: f64, n: usize) -> f64 {
    q_pochhammer_at(&a, &z, n)
}

pub fn q_pochhammer_at<S: Scalar>(a: &S, z: &S, n: usize) -> S {
    let one = S::cst(1.0);
    let mut acc = one.clone();
    let mut az = a.clone();
    for _ in 0..n {
        acc = acc * (one.clone() - az.clone());
        az = az * z.clone();
    }
    acc
}

fn check_tail<S: Scalar>(what: &'static str, sum: &S, last: &S) -> Result<()> {
    let scale = sum.magnitude();
    let last = last.magnitude();
    if !last.is_finite() || !scale.is_finite() {
        return Err(Error::NonConvergence { what, last: f64::INFINITY });
    }
    if scale > 0.0 && last > SERIES_TOL * scale {
        return Err(Error::NonConvergence { what, last: last / scale });
    }
    Ok(())
}

/// Kernel `h(w,z)` at real arguments.
pub fn kernel_h(family: FamilyId, w: f64, z: f64, model: &KernelModel) -> Result<f64> {
    kernel_h_at(&KernelModel { family, ..*model }, w, z)
}

pub fn kernel_h_at<S: Scalar>(model: &KernelModel, w: S, z: S) -> Result<S> {
    let c = S::cst;
    Ok(match model.family {
        FamilyId::Dcc => -(z.clone() * z.clone()) + z.scale(2.0) + z * w - c(1.0),
        FamilyId::Cc => {
            let z2 = z.clone() * z.clone();
            let z3 = z2.clone() * z.clone();
            let z4 = z3.clone() * z.clone();
            z4 * (w.clone() - c(1.0)) + z3 * (w.clone() * w.clone() - w.clone() + c(4.0))
                - z2 * (w.clone() + c(6.0))
                + z * (w + c(4.0))
                - c(1.0)
        }
        FamilyId::Wa => c(1.0) - z.clone() - w * z,
        FamilyId::Dc => {
            let xi = z.clone() * w;
            let b = dc_tilde_b(model, &xi, &z)?;
            b.b12.clone() * b.b21 - b.b22.clone() * b.b11.clone() + b.b22 + b.b11 - c(1.0)
        }
        FamilyId::St => {
            let xi = z.clone() * w;
            c(1.0) - st_b1(model, &xi, &c(1.0), &z)?
        }
        FamilyId::Es => escalier_q(model.j_max, &w, &z)?,
    })
}

/// Numerators for a first column of size `i` (`None`: all first columns).
pub fn kernel_numerators(
    family: FamilyId,
    w: f64,
    z: f64,
    i: u32,
    model: &KernelModel,
) -> Result<Numerators<f64>> {
    kernel_numerators_at(&KernelModel { family, ..*model }, w, z, Some(i))
}

pub fn kernel_numerators_at<S: Scalar>(
    model: &KernelModel,
    w: S,
    z: S,
    i: Option<u32>,
) -> Result<Numerators<S>> {
    let c = S::cst;
    Ok(match (model.family, i) {
        (FamilyId::Dcc, None) => {
            let zw = z.clone() * w;
            Numerators::Pair(zw.clone() * (z.clone() - c(1.0)), -(zw * z))
        }
        (FamilyId::Dcc, Some(i)) => {
            let fi = i as f64;
            let zw = z.clone() * w.clone();
            let z2 = z.clone() * z.clone();
            let zi1 = z.powi(i - 1);
            let n1 = (-z2.clone() + z2.clone() * w.scale(fi) + z.scale(2.0) - zw.scale(fi) - c(1.0)
                + zw.clone())
                * zw.clone()
                * zi1.clone();
            let n2 = -(zi1 * zw.clone())
                * (z2.scale(fi) - z.scale(2.0 * fi) + z.scale(2.0) + c(fi - 1.0) - z2.clone()
                    + z2 * w.scale(fi)
                    - zw.scale(fi)
                    + zw);
            Numerators::Pair(n1, n2)
        }
        (FamilyId::Cc, None) => {
            let zm1 = z.clone() - c(1.0);
            let z2 = z.clone() * z.clone();
            let n1 = w.clone() * z.clone() * zm1.clone() * zm1.clone() * zm1;
            let n2 = -(z2.clone() * w.clone())
                * (z2 - z.scale(2.0) + c(1.0) + z * w);
            Numerators::Pair(n1, n2)
        }
        (FamilyId::Cc, Some(i)) => {
            let fi = i as f64;
            let zm1 = z.clone() - c(1.0);
            let z2 = z.clone() * z.clone();
            let z3 = z2.clone() * z.clone();
            let zw = z.clone() * w.clone();
            let zi = z.powi(i);
            let n1 = w.clone() * zi.clone() * zm1.clone() * zm1.clone()
                * (z2.clone() * w.scale(fi) - z2.clone() + zw.clone() - zw.scale(fi)
                    + z.scale(2.0)
                    - c(1.0));
            let inner = -z3.scale(fi) + z3 - z2.scale(3.0) + z2.clone() * w.clone()
                + z2.scale(3.0 * fi)
                + z2 * w.scale(fi)
                - zw.scale(fi)
                - z.scale(3.0 * fi)
                + z.scale(3.0)
                + zw.clone()
                + c(fi - 1.0);
            let n2 = zm1 * inner * zw * zi;
            Numerators::Pair(n1, n2)
        }
        (FamilyId::Wa, None) => Numerators::Single(w * z),
        (FamilyId::Wa, Some(i)) => Numerators::Single(w * z.powi(i) * (c(1.0) - z)),
        (FamilyId::Dc, i) => {
            let xi = z.clone() * w;
            let b = dc_tilde_b(model, &xi, &z)?;
            let i = i.unwrap_or(1);
            let a1 = dc_a1(model, &xi, &c(1.0), &z, i)?;
            let a2 = dc_tilde_a2(model, &xi, &z, i)?;
            let n1 = -(b.b12 * a2.clone()) - a1.clone() + b.b22 * a1.clone();
            let n2 = b.b11 * a2.clone() - a2 - b.b21 * a1;
            Numerators::Pair(n1, n2)
        }
        (FamilyId::St, i) => {
            let xi = z.clone() * w;
            Numerators::Single(st_a1(model, &xi, &c(1.0), &z, i.unwrap_or(1))?)
        }
        (FamilyId::Es, i) => Numerators::Single(escalier_s(model.j_max, &w, &z, i.unwrap_or(1))?),
    })
}

/// `(P_n, Q_n)` of the escalier continued fraction.
pub fn escalier_convergents(n: usize, x: f64, z: f64) -> (f64, f64) {
    let (p, q) = convergents_at(n, &x, &z);
    (p[n + 1], q[n + 1])
}

/// `P_m`, `Q_m` for `m = -1..=n`, stored at offset one.
fn convergents_at<S: Scalar>(n: usize, x: &S, z: &S) -> (Vec<S>, Vec<S>) {
    let mut p = vec![S::cst(0.0), S::cst(1.0)];
    let mut q = vec![S::cst(1.0), S::cst(1.0)];
    let mut zm = S::cst(1.0);
    for m in 1..=n {
        zm = zm * z.clone();
        let f = zm.clone() * x.clone();
        let pn = p[m].clone() - f.clone() * p[m - 1].clone();
        let qn = q[m].clone() - f * q[m - 1].clone();
        p.push(pn);
        q.push(qn);
    }
    (p, q)
}

/// `Q(x,z) = Σ (−1)^j z^{j²} x^j / (z;z)_j`, the escalier kernel.
pub fn escalier_q<S: Scalar>(j_max: usize, x: &S, z: &S) -> Result<S> {
    escalier_series(j_max, x, z, 1, "Q(x,z)")
}

/// `P(x,z) = Σ (−1)^j z^{j²+j} x^j / (z;z)_j`.
pub fn escalier_p<S: Scalar>(j_max: usize, x: &S, z: &S) -> Result<S> {
    escalier_series(j_max, x, z, 2, "P(x,z)")
}

/// Shared recursion: the ratio of consecutive terms is `−x z^{2j−2+shift}/(1−z^j)`.
fn escalier_series<S: Scalar>(
    j_max: usize,
    x: &S,
    z: &S,
    shift: u32,
    what: &'static str,
) -> Result<S> {
    let one = S::cst(1.0);
    let mut term = one.clone();
    let mut acc = one.clone();
    let mut zj = one.clone();
    for j in 1..j_max {
        zj = zj * z.clone();
        let num = -(x.clone() * z.powi(2 * j as u32 - 2 + shift));
        term = term * num / (one.clone() - zj.clone());
        acc = acc + term.clone();
    }
    check_tail(what, &acc, &term)?;
    Ok(acc)
}

/// Coefficient `b_n(w)` of `θ^{n+1}` in `ϕ/z^i` for the escalier family, for
/// every `n` in `0..count`.
fn escalier_terms<S: Scalar>(
    j_max: usize,
    w: &S,
    z: &S,
    i: u32,
    count: usize,
) -> Result<Vec<S>> {
    let i = i as usize;
    let head = i.saturating_sub(1).min(count);
    let (_, qn) = convergents_at(i.saturating_sub(1), w, z);
    let q_shift = escalier_q(j_max, &(z.powi(i as u32) * w.clone()), z)?;
    let mut out = Vec::with_capacity(count);
    for n in 0..head {
        let e = (i * (i - 1) / 2 - n * (n + 1) / 2) as u32;
        out.push(z.powi(e) * w.powi((i - 1 - n) as u32) * qn[n + 1].clone() * q_shift.clone());
    }
    let q_prev = qn[i - 1].clone();
    for n in head..count {
        let qz = escalier_q(j_max, &(z.powi(n as u32 + 2) * w.clone()), z)?;
        out.push(z.powi(n as u32 + 1) * w.clone() * q_prev.clone() * qz);
    }
    Ok(out)
}

/// `S(w,z,i)` with the geometric outer tail summed adaptively.
pub fn escalier_s<S: Scalar>(j_max: usize, w: &S, z: &S, i: u32) -> Result<S> {
    let (value, _) = escalier_s_conditioned(j_max, w, z, i)?;
    Ok(value)
}

/// `S(w,z,i)` together with `Σ|terms|`, whose ratio to `|S|` measures the
/// cancellation suffered by the alternating outer sum.
pub fn escalier_s_conditioned<S: Scalar>(
    j_max: usize,
    w: &S,
    z: &S,
    i: u32,
) -> Result<(S, f64)> {
    let mut count = (i as usize + 32).max(64);
    loop {
        let terms = escalier_terms(j_max, w, z, i, count)?;
        let mut acc = S::cst(0.0);
        let mut abs = 0.0;
        for t in &terms {
            abs += t.magnitude();
            acc = acc + t.clone();
        }
        let last = terms.last().map(|t| t.magnitude()).unwrap_or(0.0);
        if last <= TAIL_TOL * acc.magnitude() || last == 0.0 {
            let pre = w.clone() * z.powi(i);
            return Ok((pre.clone() * acc, abs * pre.magnitude()));
        }
        if count >= TAIL_CAP {
            return Err(Error::NonConvergence { what: "S(w,z,i)", last: last / acc.magnitude() });
        }
        count *= 2;
    }
}

/// `(1 − t)` power helpers for the slice functions at `t = θz`.
fn inv_pow<S: Scalar>(x: &S, k: u32) -> S {
    S::cst(1.0) / x.powi(k)
}

/// Sum over `j` of `ξ pref_j(θ) weight(j, θ z^j)` for the `dc` prefactor
/// `ξ^j θ^{3j} z^{3j(j+1)/2} / (θz;z)_j²`.
fn dc_sum<S: Scalar>(
    model: &KernelModel,
    xi: &S,
    theta: &S,
    z: &S,
    what: &'static str,
    mut weight: impl FnMut(usize, &S) -> S,
) -> Result<S> {
    let one = S::cst(1.0);
    let mut pref = one.clone();
    let mut theta_zj = theta.clone();
    let mut acc = S::cst(0.0);
    let mut last = S::cst(0.0);
    let th3 = theta.powi(3);
    for j in 0..model.j_max {
        if j > 0 {
            theta_zj = theta_zj * z.clone();
            let d = one.clone() - theta_zj.clone();
            pref = pref * xi.clone() * th3.clone() * z.powi(3 * j as u32) / (d.clone() * d);
        }
        last = pref.clone() * weight(j, &theta_zj);
        acc = acc + last.clone();
    }
    check_tail(what, &acc, &last)?;
    Ok(xi.clone() * acc)
}

fn dc_a1<S: Scalar>(model: &KernelModel, xi: &S, theta: &S, z: &S, i: u32) -> Result<S> {
    let th = theta.powi(i - 1);
    dc_sum(model, xi, theta, z, "A1", |j, _| th.clone() * z.powi((i - 1) * (j as u32 + 1)))
}

fn dc_b11<S: Scalar>(model: &KernelModel, xi: &S, theta: &S, z: &S) -> Result<S> {
    dc_sum(model, xi, theta, z, "B11", |_, tz| {
        let t = tz.clone() * z.clone();
        let d = S::cst(1.0) - t.clone();
        (S::cst(2.0) - t.scale(3.0)) * inv_pow(&d, 2)
    })
}

fn dc_b12<S: Scalar>(model: &KernelModel, xi: &S, theta: &S, z: &S) -> Result<S> {
    dc_sum(model, xi, theta, z, "B12", |_, tz| {
        S::cst(1.0) / (S::cst(1.0) - tz.clone() * z.clone())
    })
}

/// θ-derivatives of the `dc` slice functions at `θ = z^j`.
struct DcSliceDerivs<S> {
    f1: S,
    f2: S,
    f3: S,
}

fn dc_slice_derivs<S: Scalar>(zj: &S, z: &S) -> DcSliceDerivs<S> {
    let t = zj.clone() * z.clone();
    let d = S::cst(1.0) - t.clone();
    let d2 = inv_pow(&d, 2);
    let d3 = inv_pow(&d, 3);
    DcSliceDerivs {
        f1: z.clone() * (S::cst(1.0) - t.scale(3.0)) * d3.clone(),
        f2: z.clone() * d2,
        f3: z.clone() * t.clone() * t.clone() * (S::cst(3.0) - t) * d3,
    }
}

/// Second-level sum `ξ Σ ξ^j z^j z^{3j(j+1)/2}/(z;z)_j² · term(j, z^j)`.
fn dc_second_sum<S: Scalar>(
    model: &KernelModel,
    xi: &S,
    z: &S,
    what: &'static str,
    mut term: impl FnMut(usize, &S) -> Result<S>,
) -> Result<S> {
    let one = S::cst(1.0);
    let mut pref = one.clone();
    let mut zj = one.clone();
    let mut acc = S::cst(0.0);
    let mut last = S::cst(0.0);
    for j in 0..model.j_max {
        if j > 0 {
            zj = zj * z.clone();
            let d = one.clone() - zj.clone();
            pref = pref * xi.clone() * z.powi(3 * j as u32 + 1) / (d.clone() * d);
        }
        last = pref.clone() * term(j, &zj)?;
        acc = acc + last.clone();
    }
    check_tail(what, &acc, &last)?;
    Ok(xi.clone() * acc)
}

struct DcTildeB<S> {
    b11: S,
    b12: S,
    b21: S,
    b22: S,
}

fn dc_tilde_b<S: Scalar>(model: &KernelModel, xi: &S, z: &S) -> Result<DcTildeB<S>> {
    let one = S::cst(1.0);
    let b11 = dc_b11(model, xi, &one, z)?;
    let b12 = dc_b12(model, xi, &one, z)?;
    let b21 = dc_second_sum(model, xi, z, "B21", |_, zj| {
        let d = dc_slice_derivs(zj, z);
        Ok(d.f1 + d.f3 * dc_b11(model, xi, &(zj.clone() * z.clone()), z)?)
    })?;
    let b22 = dc_second_sum(model, xi, z, "B22", |_, zj| {
        let d = dc_slice_derivs(zj, z);
        Ok(d.f2 + d.f3 * dc_b12(model, xi, &(zj.clone() * z.clone()), z)?)
    })?;
    Ok(DcTildeB { b11, b12, b21, b22 })
}

fn dc_tilde_a2<S: Scalar>(model: &KernelModel, xi: &S, z: &S, i: u32) -> Result<S> {
    dc_second_sum(model, xi, z, "A2", |j, zj| {
        let d = dc_slice_derivs(zj, z);
        let mut t = d.f3 * dc_a1(model, xi, &(zj.clone() * z.clone()), z, i)?;
        if i > 1 {
            t = t + (z.powi((i - 2) * j as u32) * z.powi(i - 1)).scale((i - 1) as f64);
        }
        Ok(t)
    })
}

/// Sum over `j` of `ξ pref_j(θ) weight(j, θ z^j)` for the `st` prefactor
/// `(−1)^j ξ^j θ^j z^{j(j+1)/2} / (θz;z)_j²`.
fn st_sum<S: Scalar>(
    model: &KernelModel,
    xi: &S,
    theta: &S,
    z: &S,
    what: &'static str,
    mut weight: impl FnMut(usize, &S) -> S,
) -> Result<S> {
    let one = S::cst(1.0);
    let mut pref = one.clone();
    let mut theta_zj = theta.clone();
    let mut acc = S::cst(0.0);
    let mut last = S::cst(0.0);
    for j in 0..model.j_max {
        if j > 0 {
            theta_zj = theta_zj * z.clone();
            let d = one.clone() - theta_zj.clone();
            pref = -(pref * xi.clone() * theta.clone() * z.powi(j as u32)) / (d.clone() * d);
        }
        last = pref.clone() * weight(j, &theta_zj);
        acc = acc + last.clone();
    }
    check_tail(what, &acc, &last)?;
    Ok(xi.clone() * acc)
}

fn st_a1<S: Scalar>(model: &KernelModel, xi: &S, theta: &S, z: &S, i: u32) -> Result<S> {
    let th = theta.powi(i - 1);
    st_sum(model, xi, theta, z, "A1", |j, _| th.clone() * z.powi((i - 1) * (j as u32 + 1)))
}

fn st_b1<S: Scalar>(model: &KernelModel, xi: &S, theta: &S, z: &S) -> Result<S> {
    st_sum(model, xi, theta, z, "B1", |_, tz| {
        let d = S::cst(1.0) - tz.clone() * z.clone();
        inv_pow(&d, 2)
    })
}

/// Evaluates the θ-decomposition of `φ/w` at one `z` for many first-column
/// sizes, caching the parts that do not depend on `i`.
pub struct ThetaBuilder {
    model: KernelModel,
    z: f64,
    w0: f64,
    len: usize,
    shared: Vec<Series<Jet>>,
}

type JetSeries = Series<Jet>;

impl ThetaBuilder {
    /// Coefficients `ℓ = 0..=model.l_max`.
    pub fn new(model: &KernelModel, z: f64) -> Result<Self> {
        Self::at_w(model, z, 1.0)
    }

    /// As [`ThetaBuilder::new`], with values and `w`-derivatives taken at
    /// `w = w0`.
    pub fn at_w(model: &KernelModel, z: f64, w0: f64) -> Result<Self> {
        let len = model.l_max + 1;
        let theta = JetSeries::var(len);
        let zs = JetSeries::cst(z);
        let xi = JetSeries::constant(Jet::var_w(w0).scale(z));
        let one = JetSeries::cst(1.0);
        let shared = match model.family {
            FamilyId::Dcc | FamilyId::Wa => {
                vec![one.clone() / (one - theta * zs)]
            }
            FamilyId::Cc => {
                let f2 = one.clone() / (one - theta * zs);
                vec![f2.clone() * f2.clone(), f2]
            }
            FamilyId::Dc => vec![
                dc_b11(model, &xi, &theta, &zs)?,
                dc_b12(model, &xi, &theta, &zs)?,
            ],
            FamilyId::St => vec![st_b1(model, &xi, &theta, &zs)?],
            FamilyId::Es => Vec::new(),
        };
        Ok(ThetaBuilder { model: *model, z, w0, len, shared })
    }

    pub fn phi(&self, i: u32) -> Result<ThetaPhi> {
        let len = self.len;
        let z = self.z;
        let w = Jet::var_w(self.w0);
        let zj = Jet::constant(z);
        let theta = JetSeries::var(len);
        let zs = JetSeries::cst(z);
        let xi = JetSeries::constant(w.scale(z));
        let monomial = |e: usize, c: f64| {
            let mut coeffs = vec![Jet::default(); len];
            if e < len {
                coeffs[e] = Jet::constant(c);
            }
            JetSeries::from_coeffs(coeffs, Some(len))
        };
        let (regular, value) = match self.model.family {
            FamilyId::Dcc | FamilyId::Cc => {
                let Numerators::Pair(n1, n2) = kernel_numerators_at(&self.model, w, zj, Some(i))?
                else {
                    unreachable!("pair numerators")
                };
                let (f1, f2) = match self.model.family {
                    FamilyId::Dcc => (self.shared[0].clone(), self.shared[0].clone()),
                    _ => (self.shared[0].clone(), self.shared[1].clone()),
                };
                // cc's N₂(w,z,i) already carries the factor z of f̃₂
                let z2 = match self.model.family {
                    FamilyId::Dcc => zs.clone(),
                    _ => JetSeries::cst(1.0),
                };
                let v = theta.clone()
                    * (zs.clone() * f1 * JetSeries::constant(n1)
                        + z2 * f2 * JetSeries::constant(n2));
                (monomial(i as usize, z.powi(i as i32)), v)
            }
            FamilyId::Wa => {
                let n1 = kernel_numerators_at(&self.model, w, zj, Some(i))?.first();
                let v = theta * zs * self.shared[0].clone() * JetSeries::constant(n1);
                (monomial(i as usize, z.powi(i as i32)), v)
            }
            FamilyId::Dc => {
                let Numerators::Pair(n1, n2) = kernel_numerators_at(&self.model, w, zj, Some(i))?
                else {
                    unreachable!("pair numerators")
                };
                let inv_w = JetSeries::constant(Jet::constant(1.0) / w);
                let a1 = dc_a1(&self.model, &xi, &theta, &zs, i)?;
                let reg = theta.clone() * a1 * inv_w.clone();
                let v = theta
                    * (self.shared[0].clone() * JetSeries::constant(n1)
                        + self.shared[1].clone() * JetSeries::constant(n2))
                    * inv_w;
                (reg, v)
            }
            FamilyId::St => {
                let n1 = kernel_numerators_at(&self.model, w, zj, Some(i))?.first();
                let inv_w = JetSeries::constant(Jet::constant(1.0) / w);
                let a1 = st_a1(&self.model, &xi, &theta, &zs, i)?;
                let reg = theta.clone() * a1 * inv_w.clone();
                let v = theta * self.shared[0].clone() * JetSeries::constant(n1) * inv_w;
                (reg, v)
            }
            FamilyId::Es => {
                let terms = escalier_terms(self.model.j_max, &w, &zj, i, len.saturating_sub(1))?;
                let zi = z.powi(i as i32);
                let mut coeffs = vec![Jet::default(); len];
                for (n, t) in terms.into_iter().enumerate() {
                    coeffs[n + 1] = t.scale(zi);
                }
                (monomial(i as usize, zi), JetSeries::from_coeffs(coeffs, Some(len)))
            }
        };
        let pick = |s: &JetSeries, f: fn(&Jet) -> f64| ThetaSeries {
            coeffs: (0..len).map(|l| f(&s.coeff(l))).collect(),
        };
        Ok(ThetaPhi {
            regular: pick(&regular, |j| j.v),
            value: pick(&value, |j| j.v),
            dw: pick(&value, |j| j.w),
        })
    }
}

pub fn theta_phi(family: FamilyId, z: f64, i: u32, model: &KernelModel) -> Result<ThetaPhi> {
    ThetaBuilder::new(&KernelModel { family, ..*model }, z)?.phi(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pochhammer_basics() {
        assert_eq!(q_pochhammer(0.3, 0.5, 0), 1.0);
        assert!((q_pochhammer(0.5, 0.5, 2) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn convergents_first_steps() {
        assert_eq!(escalier_convergents(0, 1.0, 0.5), (1.0, 1.0));
        let (p, q) = escalier_convergents(1, 1.0, 0.5);
        assert!((p - 1.0).abs() < 1e-15 && (q - 0.5).abs() < 1e-15);
    }
}
