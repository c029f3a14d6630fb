//! Exact enumeration by adding one column at a time.
//!
//! `T(m, n, j)` counts polyominoes of width `m`, area `n` and last column
//! `j`; the recursion `T(m,n,j) = Σ_k U(k,j) T(m−1, n−j, k)` is run in exact
//! integer arithmetic. The perimeter histogram tracks every column placement
//! individually, so its totals are an independent check on the counts.
//!
//! Perimeter conventions: on the square lattice a polyomino of width `m`
//! has perimeter `x₁ + x_m + 2m + Σ_d (|Δbottom_d| + |Δtop_d|)`. For `dc`
//! the contribution of each step is the diagonal-contact increment (2 for
//! each extreme placement, 4 for the forced one) plus `2x₁ + 2x_m` for the
//! end columns, with no horizontal term.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::families::{gluing_count, placement_contributions, FamilyId};
use crate::spectral;

pub const N_MAX_CAP: usize = 60;
pub const PERIMETER_N_CAP: usize = 14;
/// Areas up to which the brute-force oracle is cheap.
pub const BRUTE_FORCE_CAP: usize = 22;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactCountTable {
    pub family: FamilyId,
    pub n_max: usize,
    /// `counts[n][m][j]`, zero-padded; index 0 unused on every axis.
    counts: Vec<Vec<Vec<BigUint>>>,
}

impl ExactCountTable {
    pub fn count(&self, m: usize, n: usize, j: usize) -> BigUint {
        if n == 0 || n > self.n_max || m == 0 || m > n || j == 0 || j > n {
            return BigUint::zero();
        }
        self.counts[n][m][j].clone()
    }

    /// `T(m, n)`, summed over the last column.
    pub fn width_counts(&self, n: usize) -> Vec<BigUint> {
        (0..=n)
            .map(|m| {
                if m == 0 || n > self.n_max {
                    BigUint::zero()
                } else {
                    self.counts[n][m].iter().sum()
                }
            })
            .collect()
    }

    /// `T(·, n)`.
    pub fn total(&self, n: usize) -> BigUint {
        self.width_counts(n).into_iter().sum()
    }

    /// `T(·, 1..=n_max)`.
    pub fn totals(&self) -> Vec<BigUint> {
        (1..=self.n_max).map(|n| self.total(n)).collect()
    }

    /// Mean width at area `n` under the uniform law.
    pub fn mean_width(&self, n: usize) -> f64 {
        let w = self.width_counts(n);
        let total = to_f64(&self.total(n));
        w.iter().enumerate().map(|(m, c)| m as f64 * to_f64(c)).sum::<f64>() / total
    }

    /// Rows `n,m,j,count` for every nonzero entry.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "n,m,j,count")?;
        for n in 1..=self.n_max {
            for m in 1..=n {
                for j in 1..=n {
                    let c = &self.counts[n][m][j];
                    if !c.is_zero() {
                        writeln!(out, "{n},{m},{j},{c}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

pub fn count_table(family: FamilyId, n_max: usize) -> Result<ExactCountTable> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be positive".into()));
    }
    if n_max > N_MAX_CAP {
        return Err(Error::ResourceCap { what: "n_max", value: n_max, cap: N_MAX_CAP });
    }
    let mut counts = vec![vec![vec![BigUint::zero(); n_max + 1]; n_max + 1]; n_max + 1];
    for n in 1..=n_max {
        counts[n][1][n] = BigUint::from(1u32);
        for m in 2..=n {
            for j in 1..=n + 1 - m {
                let rest = n - j;
                let mut acc = BigUint::zero();
                for k in 1..=rest + 2 - m {
                    let u = gluing_count(family, k as u32, j as u32);
                    let prev = &counts[rest][m - 1][k];
                    if u != 0 && !prev.is_zero() {
                        acc += prev * u;
                    }
                }
                counts[n][m][j] = acc;
            }
        }
    }
    Ok(ExactCountTable { family, n_max, counts })
}

/// `T(·, n)` for `n = 1..=n_max` by walking every composition of `n` and
/// multiplying gluing counts along it.
pub fn brute_force_totals(family: FamilyId, n_max: usize) -> Result<Vec<u128>> {
    if n_max > BRUTE_FORCE_CAP {
        return Err(Error::ResourceCap { what: "brute-force area", value: n_max, cap: BRUTE_FORCE_CAP });
    }
    fn walk(family: FamilyId, last: u32, left: u32, weight: u128) -> u128 {
        if left == 0 {
            return weight;
        }
        (1..=left)
            .map(|x| {
                let u = gluing_count(family, last, x) as u128;
                if u == 0 {
                    0
                } else {
                    walk(family, x, left - x, weight * u)
                }
            })
            .sum()
    }
    Ok((1..=n_max as u32)
        .map(|n| (1..=n).map(|x1| walk(family, x1, n - x1, 1)).sum())
        .collect())
}

/// `ρ` from the ratio `T(·,n−1)/T(·,n)` at `n = n_max`, sharpened by one
/// Aitken Δ² step over the last three ratios.
pub fn growth_estimate(table: &ExactCountTable) -> Result<f64> {
    let n = table.n_max;
    if n < 20 {
        return Err(Error::InvalidParameter(format!("growth estimate needs n_max ≥ 20, got {n}")));
    }
    let ratio = |n: usize| to_f64(&table.total(n - 1)) / to_f64(&table.total(n));
    let (r0, r1, r2) = (ratio(n - 2), ratio(n - 1), ratio(n));
    let denom = r2 - 2.0 * r1 + r0;
    if denom.abs() <= 1e-14 * r2.abs() {
        return Ok(r2);
    }
    let aitken = r2 - (r2 - r1).powi(2) / denom;
    // Aitken is only trusted when the ratios are monotone.
    if (r2 - r1) * (r1 - r0) > 0.0 {
        Ok(aitken)
    } else {
        Ok(r2)
    }
}

/// Sup over `|m − nμ₁| ≤ 2√n σ₁` of `|σ_n T(m,n)/T(·,n) − φ(x)|`, with
/// `σ_n = √n σ₁` and `x = (m − nμ₁)/σ_n`.
pub fn llt_residual(family: FamilyId, n: usize) -> Result<f64> {
    let table = count_table(family, n)?;
    llt_residual_with(&table, n)
}

pub fn llt_residual_with(table: &ExactCountTable, n: usize) -> Result<f64> {
    if n == 0 || n > table.n_max {
        return Err(Error::InvalidParameter(format!("area {n} outside table 1..={}", table.n_max)));
    }
    let sc = spectral::bender_width_constants(table.family)?;
    let nf = n as f64;
    let sigma_n = (nf * sc.sigma1_sq).sqrt();
    let centre = nf * sc.mu1;
    let total = to_f64(&table.total(n));
    let widths = table.width_counts(n);
    let lo = (centre - 2.0 * sigma_n).ceil().max(1.0) as usize;
    let hi = ((centre + 2.0 * sigma_n).floor() as usize).min(n);
    let mut worst: f64 = 0.0;
    for m in lo..=hi {
        let x = (m as f64 - centre) / sigma_n;
        let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let local = sigma_n * to_f64(&widths[m]) / total;
        worst = worst.max((local - density).abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerimeterHistogram {
    pub family: FamilyId,
    pub n: usize,
    pub counts: BTreeMap<u32, u128>,
}

impl PerimeterHistogram {
    pub fn total(&self) -> u128 {
        self.counts.values().sum()
    }

    pub fn mean(&self) -> f64 {
        let t = self.total() as f64;
        self.counts.iter().map(|(&p, &c)| p as f64 * c as f64).sum::<f64>() / t
    }

    pub fn variance(&self) -> f64 {
        let t = self.total() as f64;
        let m = self.mean();
        self.counts.iter().map(|(&p, &c)| (p as f64 - m).powi(2) * c as f64).sum::<f64>() / t
    }

    /// Rows `n,perimeter,count`.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "n,perimeter,count")?;
        for (p, c) in &self.counts {
            writeln!(out, "{},{p},{c}", self.n)?;
        }
        Ok(())
    }
}

/// Perimeter law of all polyominoes of area `n`, placement by placement.
pub fn exact_perimeter_histogram(family: FamilyId, n: usize) -> Result<PerimeterHistogram> {
    if n == 0 {
        return Err(Error::InvalidParameter("area must be positive".into()));
    }
    if n > PERIMETER_N_CAP {
        return Err(Error::ResourceCap { what: "perimeter area", value: n, cap: PERIMETER_N_CAP });
    }
    let end_weight = if family == FamilyId::Dc { 2 } else { 1 };
    let per_column = if family == FamilyId::Dc { 0 } else { 2 };
    // state[area][last] : partial perimeter -> count, excluding the last
    // column's end term
    let mut state: Vec<Vec<BTreeMap<u32, u128>>> = vec![vec![BTreeMap::new(); n + 1]; n + 1];
    for x in 1..=n {
        state[x][x].insert(end_weight * x as u32 + per_column, 1);
    }
    let mut counts = BTreeMap::new();
    for area in 1..=n {
        for k in 1..=area {
            let here = std::mem::take(&mut state[area][k]);
            if here.is_empty() {
                continue;
            }
            if area == n {
                for (&p, &c) in &here {
                    *counts.entry(p + end_weight * k as u32).or_insert(0) += c;
                }
                continue;
            }
            for j in 1..=n - area {
                let steps = placement_contributions(family, k as u32, j as u32);
                if steps.is_empty() {
                    continue;
                }
                let next = &mut state[area + j][j];
                for t in steps {
                    for (&p, &c) in &here {
                        *next.entry(p + t + per_column).or_insert(0) += c;
                    }
                }
            }
        }
    }
    Ok(PerimeterHistogram { family, n, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_columns_seed_the_table() {
        let t = count_table(FamilyId::Cc, 6).unwrap();
        for n in 1..=6 {
            for j in 1..=6 {
                assert_eq!(t.count(1, n, j), BigUint::from(u32::from(j == n)));
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(count_table(FamilyId::Wa, 61), Err(Error::ResourceCap { .. })));
        assert!(exact_perimeter_histogram(FamilyId::Wa, 15).is_err());
    }
}
