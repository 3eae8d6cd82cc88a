//! Brute-force finite-difference oracle.
//!
//! `-y'' + q y` is discretized by second-order centered differences on
//! vertex grids. Eigenvalues come from exact inertia counts (Sturm sequences
//! for the tridiagonal cases, a bordered `LDLᵀ` for the cyclic ones) and
//! bisection, and are Richardson-combined across meshes. The oracle shares
//! no code with the shooting solver beyond evaluating `q`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fundamental::BoundaryCondition;
use crate::potential::Potential;

/// Mesh points per unit length needed for each requested eigenvalue.
pub const POINTS_PER_LEVEL: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleTag {
    DD,
    NN,
    DN,
    ND,
    /// Periodic conditions on `[0, 2)`: all periodic and antiperiodic edges.
    Per2,
    /// The even extension on `[0, 2]` with 4-periodic conditions.
    Per4,
}

impl OracleTag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DD => "DD",
            Self::NN => "NN",
            Self::DN => "DN",
            Self::ND => "ND",
            Self::Per2 => "PER2",
            Self::Per4 => "PER4",
        }
    }

    /// Index of the first returned level (`ν₀`, `λ⁺₀` and the doubled ground state start at 0).
    pub fn first_index(self) -> usize {
        match self {
            Self::DD | Self::DN | Self::ND => 1,
            Self::NN | Self::Per2 | Self::Per4 => 0,
        }
    }

    /// Number of eigenvalues returned for `levels` levels.
    pub fn count(self, levels: usize) -> usize {
        match self {
            Self::DD | Self::DN | Self::ND => levels,
            Self::NN => levels + 1,
            Self::Per2 | Self::Per4 => 2 * levels + 1,
        }
    }

    fn period(self) -> usize {
        match self {
            Self::Per2 => 2,
            Self::Per4 => 4,
            _ => 1,
        }
    }
}

impl From<BoundaryCondition> for OracleTag {
    fn from(bc: BoundaryCondition) -> Self {
        match bc {
            BoundaryCondition::DD => Self::DD,
            BoundaryCondition::NN => Self::NN,
            BoundaryCondition::DN => Self::DN,
            BoundaryCondition::ND => Self::ND,
        }
    }
}

impl fmt::Display for OracleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OracleTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DD" => Ok(Self::DD),
            "NN" => Ok(Self::NN),
            "DN" => Ok(Self::DN),
            "ND" => Ok(Self::ND),
            "PER2" => Ok(Self::Per2),
            "PER4" => Ok(Self::Per4),
            _ => Err(Error::Parse(format!("unknown oracle tag `{s}` (expected DD, NN, DN, ND, PER2 or PER4)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Mesh points per unit length, coarsest first; each mesh halves the previous step.
    pub meshes: Vec<usize>,
    pub tag: OracleTag,
    pub levels: usize,
}

impl OracleConfig {
    pub fn new(tag: OracleTag, levels: usize) -> Self {
        Self { meshes: vec![1024, 2048, 4096], tag, levels }
    }

    pub fn validate(&self) -> Result<()> {
        if self.meshes.len() < 2 {
            return Err(Error::Config("extrapolation needs at least two meshes".into()));
        }
        if self.meshes.windows(2).any(|w| w[1] != 2 * w[0]) {
            return Err(Error::Config(format!("meshes must double successively, got {:?}", self.meshes)));
        }
        if self.levels == 0 && self.tag.first_index() == 1 {
            return Err(Error::Config("level count must be at least 1".into()));
        }
        let coarse = self.meshes[0];
        let needed = POINTS_PER_LEVEL * self.tag.count(self.levels).max(1);
        if coarse * self.tag.period() < needed {
            return Err(Error::Range(format!(
                "{} levels of {} need at least {needed} mesh points, coarsest mesh has {}",
                self.levels,
                self.tag,
                coarse * self.tag.period()
            )));
        }
        Ok(())
    }
}

/// Extrapolated eigenvalues with error estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpectrum {
    pub tag: OracleTag,
    pub first_index: usize,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Raw eigenvalues per mesh, coarsest first.
    pub raw: Vec<Vec<f64>>,
}

/// Symmetric matrix with constant off-diagonal `-1/h²` except where noted.
#[derive(Debug, Clone)]
struct FdMatrix {
    diag: Vec<f64>,
    off: Vec<f64>,
    /// Corner entry coupling the first and last unknowns (cyclic case).
    corner: Option<f64>,
}

impl FdMatrix {
    fn build(q: &Potential, tag: OracleTag, per_unit: usize) -> Self {
        let h = 1.0 / per_unit as f64;
        let inv = 1.0 / (h * h);
        let m = per_unit;
        let qv = |x: f64| q.value(x);
        let ext = q.even_extension();
        let (nodes, corner): (Vec<f64>, Option<f64>) = match tag {
            OracleTag::DD => ((1..m).map(|j| j as f64 * h).collect(), None),
            OracleTag::NN => ((0..=m).map(|j| j as f64 * h).collect(), None),
            OracleTag::DN => ((1..=m).map(|j| j as f64 * h).collect(), None),
            OracleTag::ND => ((0..m).map(|j| j as f64 * h).collect(), None),
            OracleTag::Per2 | OracleTag::Per4 => {
                ((0..tag.period() * m).map(|j| j as f64 * h).collect(), Some(-inv))
            }
        };
        let diag = nodes
            .iter()
            .map(|&x| 2.0 * inv + if tag == OracleTag::Per4 { ext.value(x) } else { qv(x) })
            .collect::<Vec<_>>();
        let mut off = vec![-inv; nodes.len() - 1];
        let ghost = -std::f64::consts::SQRT_2 * inv;
        if matches!(tag, OracleTag::NN | OracleTag::ND) {
            off[0] = ghost;
        }
        if matches!(tag, OracleTag::NN | OracleTag::DN) {
            *off.last_mut().unwrap() = ghost;
        }
        Self { diag, off, corner }
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `sigma`.
    fn count_below(&self, sigma: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let guard = |p: f64| if p == 0.0 { -tiny } else { p };
        match self.corner {
            None => {
                let mut p = guard(self.diag[0] - sigma);
                let mut neg = (p < 0.0) as usize;
                for i in 1..self.dim() {
                    p = guard(self.diag[i] - sigma - self.off[i - 1] * self.off[i - 1] / p);
                    neg += (p < 0.0) as usize;
                }
                neg
            }
            Some(c) => {
                // LDLᵀ of the leading block with a running fill in the last column.
                let m = self.dim();
                let mut neg = 0;
                let mut p = guard(self.diag[0] - sigma);
                let mut fill = c;
                let mut schur = self.diag[m - 1] - sigma - fill * fill / p;
                neg += (p < 0.0) as usize;
                for i in 1..m - 1 {
                    let e = self.off[i - 1];
                    let fill_prev = fill;
                    fill = -e * fill_prev / p;
                    if i == m - 2 {
                        fill += self.off[m - 2];
                    }
                    p = guard(self.diag[i] - sigma - e * e / p);
                    schur -= fill * fill / p;
                    neg += (p < 0.0) as usize;
                }
                neg + (guard(schur) < 0.0) as usize
            }
        }
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            if let Some(c) = self.corner {
                if i == 0 || i == n - 1 {
                    r += c.abs();
                }
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on inertia counts.
    fn eigenvalue(&self, k: usize, bounds: (f64, f64)) -> f64 {
        let (mut lo, mut hi) = bounds;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn mesh_eigenvalues(q: &Potential, tag: OracleTag, per_unit: usize, count: usize) -> Vec<f64> {
    let a = FdMatrix::build(q, tag, per_unit);
    let (glo, _) = a.gershgorin();
    // The lowest `count` eigenvalues sit far below the top of the spectrum;
    // bound them by the free eigenvalue plus the potential size.
    let top = {
        let k = count as f64 + 1.0;
        let free = (std::f64::consts::PI * k).powi(2);
        free + q.sup_bound() + 10.0
    };
    let mut hi = top;
    while a.count_below(hi) < count {
        hi *= 2.0;
    }
    (0..count).into_par_iter().map(|k| a.eigenvalue(k, (glo, hi))).collect()
}

/// Richardson-extrapolated spectrum of `q` for one tag.
pub fn fd_spectrum(q: &Potential, cfg: &OracleConfig) -> Result<OracleSpectrum> {
    cfg.validate()?;
    let count = cfg.tag.count(cfg.levels);
    let raw: Vec<Vec<f64>> =
        cfg.meshes.par_iter().map(|&m| mesh_eigenvalues(q, cfg.tag, m, count)).collect();
    let extrapolated: Vec<Vec<f64>> = raw
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(c, f)| (4.0 * f - c) / 3.0).collect())
        .collect();
    let last = extrapolated.last().unwrap();
    let errors = if extrapolated.len() >= 2 {
        let prev = &extrapolated[extrapolated.len() - 2];
        last.iter().zip(prev).map(|(a, b)| (a - b).abs()).collect()
    } else {
        raw[0].iter().zip(&raw[1]).map(|(c, f)| (f - c).abs() / 3.0).collect()
    };
    Ok(OracleSpectrum { tag: cfg.tag, first_index: cfg.tag.first_index(), values: last.clone(), errors, raw })
}

/// `|a - b| / max(1, |b|)`.
pub fn relative_disagreement(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
