//! The six column-built polyomino families and their gluing rules.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyId {
    /// Directed column-convex.
    Dcc,
    /// Column-convex.
    Cc,
    /// Directed diagonally-convex.
    Dc,
    /// Staircase (parallelogram).
    St,
    /// Escalier.
    Es,
    /// Wall (bargraph).
    Wa,
}

impl FamilyId {
    pub const ALL: [FamilyId; 6] =
        [FamilyId::Dcc, FamilyId::Cc, FamilyId::Dc, FamilyId::St, FamilyId::Es, FamilyId::Wa];

    pub fn name(self) -> &'static str {
        match self {
            FamilyId::Dcc => "dcc",
            FamilyId::Cc => "cc",
            FamilyId::Dc => "dc",
            FamilyId::St => "st",
            FamilyId::Es => "es",
            FamilyId::Wa => "wa",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Kernel is a polynomial in `(w, z)`.
    pub fn is_polynomial(self) -> bool {
        matches!(self, FamilyId::Dcc | FamilyId::Cc | FamilyId::Wa)
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        FamilyId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FamilySpec {
    pub id: FamilyId,
    pub horizontal_increment: u32,
    pub supports_known_gf: bool,
}

pub fn spec(family: FamilyId) -> FamilySpec {
    FamilySpec {
        id: family,
        horizontal_increment: horizontal_increment(family),
        supports_known_gf: !matches!(family, FamilyId::Dc | FamilyId::Es),
    }
}

/// Number of ways to glue a column of size `j` after a column of size `k`.
pub fn gluing_count(family: FamilyId, k: u32, j: u32) -> u64 {
    let (k, j) = (k as u64, j as u64);
    match family {
        FamilyId::Dcc => k,
        FamilyId::Cc => k + j - 1,
        FamilyId::Dc => {
            if j <= k + 1 {
                k + 2 - j
            } else {
                0
            }
        }
        FamilyId::St => k.min(j),
        FamilyId::Es => u64::from(j + 1 >= k),
        FamilyId::Wa => 1,
    }
}

/// Perimeter units contributed by each column's top and bottom edges.
pub fn horizontal_increment(family: FamilyId) -> u32 {
    match family {
        FamilyId::Dc => 0,
        _ => 2,
    }
}

/// Vertical boundary changes `(Δbottom, Δtop)` of every admissible placement
/// of a size-`j` column after a size-`k` column, for the square-lattice
/// families. Empty for `dc`, whose cells sit on the diagonal lattice.
pub fn placement_offsets(family: FamilyId, k: u32, j: u32) -> Vec<(i64, i64)> {
    let (k, j) = (k as i64, j as i64);
    let with_bottoms = |lo: i64, hi: i64| (lo..=hi).map(|b| (b, b + j - k)).collect();
    match family {
        FamilyId::Dcc => with_bottoms(0, k - 1),
        FamilyId::Cc => with_bottoms(1 - j, k - 1),
        FamilyId::St => with_bottoms(0.max(k - j), k - 1),
        FamilyId::Es => {
            if j + 1 >= k {
                vec![(0, j - k)]
            } else {
                Vec::new()
            }
        }
        FamilyId::Wa => vec![(0, j - k)],
        FamilyId::Dc => Vec::new(),
    }
}

/// Vertical perimeter added by each admissible placement of `j` after `k`.
///
/// For `dcc` this is the geometric contact `|Δbottom| + |Δtop|`; the chain
/// statistics use the equivalent shifted bookkeeping in `moments`. For `dc`
/// the two extreme positions among `k − j + 2` add 2 each, and the forced
/// position when `j = k + 1` adds 4.
pub fn placement_contributions(family: FamilyId, k: u32, j: u32) -> Vec<u32> {
    if family == FamilyId::Dc {
        let u = gluing_count(family, k, j) as usize;
        return match u {
            0 => Vec::new(),
            1 => vec![4],
            _ => (0..u).map(|p| if p == 0 || p + 1 == u { 2 } else { 0 }).collect(),
        };
    }
    placement_offsets(family, k, j)
        .into_iter()
        .map(|(db, dt)| (db.abs() + dt.abs()) as u32)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placements_match_gluing_counts() {
        for f in FamilyId::ALL {
            for k in 1..=12 {
                for j in 1..=12 {
                    let n = placement_contributions(f, k, j).len() as u64;
                    assert_eq!(n, gluing_count(f, k, j), "{f} {k} {j}");
                }
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for f in FamilyId::ALL {
            assert_eq!(f.name().parse::<FamilyId>().unwrap(), f);
        }
        assert!("xx".parse::<FamilyId>().is_err());
    }
}
