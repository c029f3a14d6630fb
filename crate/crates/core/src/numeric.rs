//! Arithmetic building blocks shared by the analytic modules.
//!
//! Every q-series and kernel is written once, generically over [`Scalar`], and
//! evaluated on plain `f64`, on complex numbers (argument principle), on
//! second-order jets in `(w, z)` (analytic partial derivatives) and on
//! truncated power series in `θ` whose coefficients may themselves be jets.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait Scalar:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;

    /// Size used by convergence tests: the largest absolute component.
    fn magnitude(&self) -> f64;

    fn scale(&self, c: f64) -> Self {
        self.clone() * Self::cst(c)
    }

    fn powi(&self, n: u32) -> Self {
        let mut acc = Self::cst(1.0);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

impl Scalar for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn powi(&self, n: u32) -> Self {
        f64::powi(*self, n as i32)
    }
}

impl Scalar for Complex64 {
    fn cst(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
}

/// Value and partial derivatives up to order two in `(w, z)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub w: f64,
    pub z: f64,
    pub ww: f64,
    pub wz: f64,
    pub zz: f64,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { v, ..Default::default() }
    }

    /// The independent variable `w` at the point `w0`.
    pub fn var_w(w0: f64) -> Self {
        Jet { v: w0, w: 1.0, ..Default::default() }
    }

    /// The independent variable `z` at the point `z0`.
    pub fn var_z(z0: f64) -> Self {
        Jet { v: z0, z: 1.0, ..Default::default() }
    }

    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        let r2 = r * r;
        let r3 = r2 * r;
        Jet {
            v: r,
            w: -self.w * r2,
            z: -self.z * r2,
            ww: 2.0 * self.w * self.w * r3 - self.ww * r2,
            wz: 2.0 * self.w * self.z * r3 - self.wz * r2,
            zz: 2.0 * self.z * self.z * r3 - self.zz * r2,
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, b: Jet) -> Jet {
        Jet {
            v: self.v + b.v,
            w: self.w + b.w,
            z: self.z + b.z,
            ww: self.ww + b.ww,
            wz: self.wz + b.wz,
            zz: self.zz + b.zz,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, b: Jet) -> Jet {
        self + (-b)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            v: -self.v,
            w: -self.w,
            z: -self.z,
            ww: -self.ww,
            wz: -self.wz,
            zz: -self.zz,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, b: Jet) -> Jet {
        let a = self;
        Jet {
            v: a.v * b.v,
            w: a.w * b.v + a.v * b.w,
            z: a.z * b.v + a.v * b.z,
            ww: a.ww * b.v + 2.0 * a.w * b.w + a.v * b.ww,
            wz: a.wz * b.v + a.w * b.z + a.z * b.w + a.v * b.wz,
            zz: a.zz * b.v + 2.0 * a.z * b.z + a.v * b.zz,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, b: Jet) -> Jet {
        self * b.recip()
    }
}

impl Scalar for Jet {
    fn cst(x: f64) -> Self {
        Jet::constant(x)
    }
    fn magnitude(&self) -> f64 {
        [self.v, self.w, self.z, self.ww, self.wz, self.zz]
            .iter()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
    fn scale(&self, c: f64) -> Self {
        Jet {
            v: self.v * c,
            w: self.w * c,
            z: self.z * c,
            ww: self.ww * c,
            wz: self.wz * c,
            zz: self.zz * c,
        }
    }
}

/// Truncated power series `Σ c_ℓ θ^ℓ`.
///
/// `order = Some(n)` means only the coefficients `ℓ < n` are meaningful;
/// `None` marks an exact polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<S> {
    coeffs: Vec<S>,
    order: Option<usize>,
}

impl<S: Scalar> Series<S> {
    /// The variable `θ`, truncated after `order` coefficients.
    pub fn var(order: usize) -> Self {
        let mut coeffs = vec![S::cst(0.0), S::cst(1.0)];
        coeffs.truncate(order);
        Series { coeffs, order: Some(order) }
    }

    pub fn constant(c: S) -> Self {
        Series { coeffs: vec![c], order: None }
    }

    pub fn from_coeffs(coeffs: Vec<S>, order: Option<usize>) -> Self {
        let mut s = Series { coeffs, order };
        if let Some(n) = order {
            s.coeffs.truncate(n);
        }
        s
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<S> {
        self.coeffs
    }

    pub fn order(&self) -> Option<usize> {
        self.order
    }

    pub fn coeff(&self, l: usize) -> S {
        self.coeffs.get(l).cloned().unwrap_or_else(|| S::cst(0.0))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Series<T> {
        Series { coeffs: self.coeffs.iter().map(f).collect(), order: self.order }
    }

    fn joint_order(a: Option<usize>, b: Option<usize>) -> Option<usize> {
        match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (Some(x), None) | (None, Some(x)) => Some(x),
            (None, None) => None,
        }
    }
}

impl<S: Scalar> Add for Series<S> {
    type Output = Series<S>;
    fn add(self, b: Series<S>) -> Series<S> {
        let order = Self::joint_order(self.order, b.order);
        let mut len = self.coeffs.len().max(b.coeffs.len());
        if let Some(n) = order {
            len = len.min(n);
        }
        let coeffs = (0..len).map(|l| self.coeff(l) + b.coeff(l)).collect();
        Series { coeffs, order }
    }
}

impl<S: Scalar> Sub for Series<S> {
    type Output = Series<S>;
    fn sub(self, b: Series<S>) -> Series<S> {
        self + (-b)
    }
}

impl<S: Scalar> Neg for Series<S> {
    type Output = Series<S>;
    fn neg(self) -> Series<S> {
        Series { coeffs: self.coeffs.into_iter().map(|c| -c).collect(), order: self.order }
    }
}

impl<S: Scalar> Mul for Series<S> {
    type Output = Series<S>;
    fn mul(self, b: Series<S>) -> Series<S> {
        let order = Self::joint_order(self.order, b.order);
        if self.coeffs.is_empty() || b.coeffs.is_empty() {
            return Series { coeffs: Vec::new(), order };
        }
        let mut len = self.coeffs.len() + b.coeffs.len() - 1;
        if let Some(n) = order {
            len = len.min(n);
        }
        let mut coeffs = vec![S::cst(0.0); len];
        for (i, ai) in self.coeffs.iter().enumerate().take(len) {
            for (j, bj) in b.coeffs.iter().enumerate().take(len - i) {
                coeffs[i + j] = coeffs[i + j].clone() + ai.clone() * bj.clone();
            }
        }
        Series { coeffs, order }
    }
}

impl<S: Scalar> Div for Series<S> {
    type Output = Series<S>;
    fn div(self, b: Series<S>) -> Series<S> {
        if b.coeffs.len() == 1 {
            let inv = S::cst(1.0) / b.coeffs[0].clone();
            let order = Self::joint_order(self.order, b.order);
            let coeffs = self.coeffs.into_iter().map(|c| c * inv.clone()).collect();
            return Series::from_coeffs(coeffs, order);
        }
        let order = Self::joint_order(self.order, b.order)
            .unwrap_or(self.coeffs.len().max(b.coeffs.len()));
        let inv0 = S::cst(1.0) / b.coeffs[0].clone();
        let mut q: Vec<S> = Vec::with_capacity(order);
        for k in 0..order {
            let mut acc = self.coeff(k);
            for i in 1..=k.min(b.coeffs.len() - 1) {
                acc = acc - b.coeffs[i].clone() * q[k - i].clone();
            }
            q.push(acc * inv0.clone());
        }
        Series { coeffs: q, order: Some(order) }
    }
}

impl<S: Scalar> Scalar for Series<S> {
    fn cst(x: f64) -> Self {
        Series::constant(S::cst(x))
    }
    fn magnitude(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.magnitude()))
    }
    fn scale(&self, c: f64) -> Self {
        Series { coeffs: self.coeffs.iter().map(|x| x.scale(c)).collect(), order: self.order }
    }
}

/// Working-precision mode for long floating-point reductions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    /// Neumaier-compensated summation.
    Extended,
    /// Plain left-to-right summation.
    Double,
}

impl Precision {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "extended" => Ok(Precision::Extended),
            "double" => Ok(Precision::Double),
            other => Err(Error::BadPrecision(other.to_string())),
        }
    }

    /// Reads `POLYOSTAT_PRECISION`; unset means `extended`.
    pub fn from_env() -> Result<Self> {
        match std::env::var("POLYOSTAT_PRECISION") {
            Ok(v) => Precision::parse(&v),
            Err(_) => Ok(Precision::Extended),
        }
    }
}

static PRECISION: OnceLock<Precision> = OnceLock::new();

/// Process-wide precision, read once from the environment.
pub fn precision() -> Precision {
    *PRECISION.get_or_init(|| Precision::from_env().unwrap_or(Precision::Extended))
}

/// Running sum honoring [`precision`].
#[derive(Clone, Copy, Debug)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
    compensated: bool,
}

impl Default for Accumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl Accumulator {
    pub fn new() -> Self {
        Accumulator { sum: 0.0, comp: 0.0, compensated: precision() == Precision::Extended }
    }

    pub fn add(&mut self, x: f64) {
        if !self.compensated {
            self.sum += x;
            return;
        }
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Accumulator::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Relative comparison helper used throughout the checks.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}
