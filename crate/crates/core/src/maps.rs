//! Coordinate maps built from a spectrum table: gap lengths `𝔣`, the
//! vectors `p`, `𝔭`, `h`, `𝔥`, and pairings of two spectra.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eigensolve::SpectrumTable;
use crate::error::{Error, Result};
use crate::potential::Potential;

/// Truncation level below which [`estimate_check`] refuses to run.
pub const MIN_ESTIMATE_LEVELS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    GapF,
    P,
    FrakP,
    H,
    FrakH,
    PairMuTau,
    PairNuRho,
    PairNuTau,
    PairMuRho,
    PairMuHs,
    PairNuGhs,
}

impl MapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GapF => "gap_f",
            Self::P => "p",
            Self::FrakP => "frak_p",
            Self::H => "h",
            Self::FrakH => "frak_h",
            Self::PairMuTau => "pair_mu_tau",
            Self::PairNuRho => "pair_nu_rho",
            Self::PairNuTau => "pair_nu_tau",
            Self::PairMuRho => "pair_mu_rho",
            Self::PairMuHs => "pair_mu_hs",
            Self::PairNuGhs => "pair_nu_ghs",
        }
    }

    pub fn is_pair(self) -> bool {
        matches!(
            self,
            Self::PairMuTau | Self::PairNuRho | Self::PairNuTau | Self::PairMuRho | Self::PairMuHs | Self::PairNuGhs
        )
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Parse(format!("unknown map kind `{s}`")))
    }
}

/// Which pairing [`pair_map`] assembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pairing {
    MuTau,
    NuRho,
    NuTau,
    MuRho,
    MuHs,
    NuGhs,
}

impl Pairing {
    pub fn kind(self) -> MapKind {
        match self {
            Self::MuTau => MapKind::PairMuTau,
            Self::NuRho => MapKind::PairNuRho,
            Self::NuTau => MapKind::PairNuTau,
            Self::MuRho => MapKind::PairMuRho,
            Self::MuHs => MapKind::PairMuHs,
            Self::NuGhs => MapKind::PairNuGhs,
        }
    }
}

/// `dirichlet` uses `μ_n`, `h_{s,n}`; `neumann` uses `ν_n`, `𝔥_{s,n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapVariant {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entries {
    Scalars(Vec<f64>),
    Pairs(Vec<[f64; 2]>),
}

impl Entries {
    pub fn len(&self) -> usize {
        match self {
            Self::Scalars(v) => v.len(),
            Self::Pairs(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries flattened in order, pairs as consecutive components.
    pub fn flat(&self) -> Vec<f64> {
        match self {
            Self::Scalars(v) => v.clone(),
            Self::Pairs(v) => v.iter().flat_map(|p| *p).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralVector {
    pub kind: MapKind,
    #[serde(rename = "N")]
    pub levels: usize,
    pub entries: Entries,
}

impl SpectralVector {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Self = serde_json::from_str(text)?;
        v.check_shape()?;
        Ok(v)
    }

    fn check_shape(&self) -> Result<()> {
        let (want, pairs) = match self.kind {
            MapKind::GapF => (2 * self.levels, false),
            _ => (self.levels, true),
        };
        let ok = match &self.entries {
            Entries::Scalars(v) => !pairs && v.len() == want,
            Entries::Pairs(v) => pairs && v.len() == want,
        };
        if !ok {
            return Err(Error::Parse(format!(
                "{} vector with N = {} needs {want} {}",
                self.kind,
                self.levels,
                if pairs { "pairs" } else { "scalars" }
            )));
        }
        if self.entries.flat().iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse("spectral vector entries must be finite".into()));
        }
        Ok(())
    }

    pub fn pairs(&self) -> Option<&[[f64; 2]]> {
        match &self.entries {
            Entries::Pairs(v) => Some(v),
            Entries::Scalars(_) => None,
        }
    }

    pub fn scalars(&self) -> Option<&[f64]> {
        match &self.entries {
            Entries::Scalars(v) => Some(v),
            Entries::Pairs(_) => None,
        }
    }
}

fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `𝔣_{2n-1} = ϱ_n - τ_n`, `𝔣_{2n} = ν_n - μ_n`.
pub fn gap_map(table: &SpectrumTable) -> SpectralVector {
    let entries = (0..table.levels).flat_map(|i| [table.rho[i] - table.tau[i], table.nu[i] - table.mu[i]]).collect();
    SpectralVector { kind: MapKind::GapF, levels: table.levels, entries: Entries::Scalars(entries) }
}

fn anchor(table: &SpectrumTable, variant: MapVariant) -> (&[f64], &[f64]) {
    match variant {
        MapVariant::Dirichlet => (&table.mu, &table.hs),
        MapVariant::Neumann => (&table.nu, &table.ghs),
    }
}

/// `p_n` (Dirichlet) or `𝔭_n` (Neumann).
pub fn p_map(table: &SpectrumTable, variant: MapVariant) -> Result<SpectralVector> {
    let (centre, hs) = anchor(table, variant);
    let entries = (0..table.levels)
        .map(|i| {
            let (lm, lp) = (table.lam_minus[i], table.lam_plus[i]);
            let half = 0.5 * (lp - lm);
            let p1 = 0.5 * (lp + lm) - centre[i];
            let excess = p1.abs() - half;
            if excess > 1e-9 * (1.0 + centre[i].abs()) {
                return Err(Error::Inconsistent(format!(
                    "level {}: |p_1| = {:.6e} exceeds half gap {half:.6e}; eigenvalue outside [λ⁻, λ⁺]",
                    i + 1,
                    p1.abs()
                )));
            }
            // |p|² - p₁² factored to avoid cancellation near a gap edge
            let p2 = ((centre[i] - lm).max(0.0) * (lp - centre[i]).max(0.0)).sqrt() * signum0(hs[i]);
            Ok([p1, p2 + 0.0])
        })
        .collect::<Result<Vec<_>>>()?;
    let kind = match variant {
        MapVariant::Dirichlet => MapKind::P,
        MapVariant::Neumann => MapKind::FrakP,
    };
    Ok(SpectralVector { kind, levels: table.levels, entries: Entries::Pairs(entries) })
}

/// `h_n = (h_{c,n}, h_{s,n})` (Dirichlet) or `𝔥_n` (Neumann).
pub fn h_map(table: &SpectrumTable, variant: MapVariant) -> Result<SpectralVector> {
    let (centre, hs) = anchor(table, variant);
    let entries = (0..table.levels)
        .map(|i| {
            let n = i + 1;
            let d = table.delta_star[i].abs();
            if d < 1.0 - 1e-9 {
                return Err(Error::Inconsistent(format!("level {n}: |Δ(λ_n)| = {d:.12e} < 1")));
            }
            let h = table.h_abs[i];
            if hs[i].abs() > h + 1e-7 {
                return Err(Error::Inconsistent(format!(
                    "level {n}: |h_s| = {:.6e} exceeds |h| = {h:.6e}",
                    hs[i].abs()
                )));
            }
            let hc = ((h - hs[i].abs()).max(0.0) * (h + hs[i].abs())).sqrt() * signum0(table.lam_star[i] - centre[i]);
            Ok([hc + 0.0, hs[i]])
        })
        .collect::<Result<Vec<_>>>()?;
    let kind = match variant {
        MapVariant::Dirichlet => MapKind::H,
        MapVariant::Neumann => MapKind::FrakH,
    };
    Ok(SpectralVector { kind, levels: table.levels, entries: Entries::Pairs(entries) })
}

fn check_increasing(name: &str, v: &[f64]) -> Result<()> {
    for (i, w) in v.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::Invariant(format!("{name}_{} = {:.12e} ≮ {name}_{} = {:.12e}", i + 1, w[0], i + 2, w[1])));
        }
    }
    Ok(())
}

/// `lower_n < upper_n < lower_{n+1}` for all available levels.
fn check_alternation(upper: (&str, &[f64]), lower: (&str, &[f64])) -> Result<()> {
    let (un, u) = upper;
    let (ln, l) = lower;
    for i in 0..u.len() {
        if !(l[i] < u[i]) {
            return Err(Error::Invariant(format!("alternation: {ln}_{n} = {:.12e} ≮ {un}_{n} = {:.12e}", l[i], u[i], n = i + 1)));
        }
        if i + 1 < l.len() && !(u[i] < l[i + 1]) {
            return Err(Error::Invariant(format!(
                "alternation: {un}_{} = {:.12e} ≮ {ln}_{} = {:.12e}",
                i + 1,
                u[i],
                i + 2,
                l[i + 1]
            )));
        }
    }
    Ok(())
}

/// A spectrum with its display symbol.
type Labeled<'a> = (&'static str, &'a [f64]);

pub fn pair_map(table: &SpectrumTable, which: Pairing) -> Result<SpectralVector> {
    let (first, second): (Labeled, Labeled) = match which {
        Pairing::MuTau => (("μ", &table.mu), ("τ", &table.tau)),
        Pairing::NuRho => (("ν", &table.nu), ("ϱ", &table.rho)),
        Pairing::NuTau => (("ν", &table.nu), ("τ", &table.tau)),
        Pairing::MuRho => (("μ", &table.mu), ("ϱ", &table.rho)),
        Pairing::MuHs => (("μ", &table.mu), ("h_s", &table.hs)),
        Pairing::NuGhs => (("ν", &table.nu), ("𝔥_s", &table.ghs)),
    };
    check_increasing(first.0, first.1)?;
    if !matches!(which, Pairing::MuHs | Pairing::NuGhs) {
        check_increasing(second.0, second.1)?;
        check_alternation(first, second)?;
    }
    let entries = first.1.iter().zip(second.1).map(|(a, b)| [*a, *b]).collect();
    Ok(SpectralVector { kind: which.kind(), levels: table.levels, entries: Entries::Pairs(entries) })
}

/// `ℓ²` norm for `𝔣`, `p`, `𝔭`; `(Σ n² |h_n|²)^{1/2}` for `h`, `𝔥`.
pub fn map_norm(v: &SpectralVector) -> Result<f64> {
    match v.kind {
        MapKind::GapF | MapKind::P | MapKind::FrakP => Ok(v.entries.flat().iter().map(|x| x * x).sum::<f64>().sqrt()),
        MapKind::H | MapKind::FrakH => {
            let pairs = v.pairs().ok_or_else(|| Error::Usage("h vector must hold pairs".into()))?;
            Ok(pairs
                .iter()
                .enumerate()
                .map(|(i, p)| ((i + 1) as f64).powi(2) * (p[0] * p[0] + p[1] * p[1]))
                .sum::<f64>()
                .sqrt())
        }
        kind => Err(Error::Usage(format!("no norm defined for {kind}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateLine {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative when violated.
    pub margin: f64,
    pub holds: bool,
    /// Whether a violation is conclusive at finite truncation.
    pub rigorous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    #[serde(rename = "N")]
    pub levels: usize,
    pub q_norm: f64,
    pub p_norm: f64,
    pub f_norm: f64,
    pub h_norm: f64,
    pub h_sup: f64,
    pub lines: Vec<EstimateLine>,
}

impl EstimateReport {
    /// Violations among the directions that truncation cannot explain away.
    pub fn rigorous_violations(&self) -> usize {
        self.lines.iter().filter(|l| l.rigorous && !l.holds).count()
    }
}

/// Slack covering eigenvalue round-off in computed map norms.
pub const ESTIMATE_SLACK: f64 = 1e-8;

fn line(name: &str, lhs: f64, rhs: f64, rigorous: bool) -> EstimateLine {
    let holds = lhs <= rhs + ESTIMATE_SLACK * (1.0 + rhs.abs());
    EstimateLine { name: name.into(), lhs, rhs, margin: rhs - lhs, holds, rigorous }
}

/// Evaluates the two-sided norm estimates for `p`, `𝔣` and `h`.
///
/// Truncated map norms can only underestimate the full ones, so the upper
/// bounds on map norms are conclusive at any `N`; the bounds on `‖q‖` are
/// reported but only informative.
pub fn estimate_check(q: &Potential, table: &SpectrumTable) -> Result<EstimateReport> {
    if table.levels < MIN_ESTIMATE_LEVELS {
        return Err(Error::Usage(format!(
            "estimates need at least {MIN_ESTIMATE_LEVELS} levels, table has {}",
            table.levels
        )));
    }
    let qn = q.l2_norm();
    let p = map_norm(&p_map(table, MapVariant::Dirichlet)?)?;
    let f = map_norm(&gap_map(table))?;
    let hv = h_map(table, MapVariant::Dirichlet)?;
    let h = map_norm(&hv)?;
    let h_sup = table.h_abs.iter().fold(0.0f64, |m, v| m.max(*v));
    let cbrt = |x: f64| x.cbrt();
    let lines = vec![
        line("‖q‖ ≤ 2‖p‖(1+‖p‖^{1/3})", qn, 2.0 * p * (1.0 + cbrt(p)), false),
        line("‖p‖ ≤ ‖q‖(1+‖q‖^{1/3})", p, qn * (1.0 + cbrt(qn)), true),
        line("‖q‖ ≤ 2‖𝔣‖(1+2‖𝔣‖^{1/3})", qn, 2.0 * f * (1.0 + 2.0 * cbrt(f)), false),
        line("‖𝔣‖ ≤ 2‖q‖(1+2‖q‖^{1/3})", f, 2.0 * qn * (1.0 + 2.0 * cbrt(qn)), true),
        line("‖q‖ ≤ 3‖h‖₁(6+sup|h_n|)^{1/2}", qn, 3.0 * h * (6.0 + h_sup).sqrt(), false),
        line("‖h‖₁ ≤ 2‖q‖(1+‖q‖^{1/3})", h, 2.0 * qn * (1.0 + cbrt(qn)), true),
    ];
    Ok(EstimateReport { levels: table.levels, q_norm: qn, p_norm: p, f_norm: f, h_norm: h, h_sup, lines })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::spectrum_table;
    use std::f64::consts::PI;

    fn vector(kind: MapKind, entries: Entries, levels: usize) -> SpectralVector {
        SpectralVector { kind, levels, entries }
    }

    #[test]
    fn free_maps_vanish() {
        let t = spectrum_table(&Potential::zero(), 6).unwrap();
        assert!(gap_map(&t).entries.flat().iter().all(|x| x.abs() < 1e-7));
        for v in [MapVariant::Dirichlet, MapVariant::Neumann] {
            assert!(p_map(&t, v).unwrap().entries.flat().iter().all(|x| x.abs() < 1e-7));
            assert!(h_map(&t, v).unwrap().entries.flat().iter().all(|x| x.abs() < 1e-6));
        }
        let mt = pair_map(&t, Pairing::MuTau).unwrap();
        for (i, p) in mt.pairs().unwrap().iter().enumerate() {
            let n = (i + 1) as f64;
            assert!((p[0] - (PI * n).powi(2)).abs() < 1e-7);
            assert!((p[1] - (PI * (n - 0.5)).powi(2)).abs() < 1e-7);
        }
        let mh = pair_map(&t, Pairing::MuHs).unwrap();
        assert!(mh.pairs().unwrap().iter().all(|p| p[1].abs() < 1e-9));
    }

    #[test]
    fn symmetric_potential_has_zero_odd_gap_entries() {
        let q = Potential::from_fourier(&[2.0, -1.0, 0.5], &[]).unwrap();
        let t = spectrum_table(&q, 6).unwrap();
        let f = gap_map(&t);
        for (i, x) in f.scalars().unwrap().iter().enumerate() {
            if i % 2 == 0 {
                assert!(x.abs() < 1e-7, "entry {}: {x}", i + 1);
            }
        }
        let p = p_map(&t, MapVariant::Dirichlet).unwrap();
        for (i, e) in p.pairs().unwrap().iter().enumerate() {
            let half = 0.5 * (t.lam_plus[i] - t.lam_minus[i]);
            assert!((e[0].abs() - half).abs() < 1e-7 && e[1].abs() < 1e-3);
        }
        let h = h_map(&t, MapVariant::Dirichlet).unwrap();
        for e in h.pairs().unwrap() {
            assert!(e[1].abs() < 1e-7);
        }
    }

    #[test]
    fn norms_reproduce_gap_lengths() {
        let q = Potential::from_fourier(&[2.0], &[1.0]).unwrap();
        let t = spectrum_table(&q, 10).unwrap();
        let quarter: f64 = t.lam_plus.iter().zip(&t.lam_minus).map(|(a, b)| 0.25 * (a - b).powi(2)).sum();
        for v in [MapVariant::Dirichlet, MapVariant::Neumann] {
            let p = map_norm(&p_map(&t, v).unwrap()).unwrap();
            assert!((p * p - quarter).abs() < 1e-9 * quarter.max(1.0));
            let h = h_map(&t, v).unwrap();
            for (i, e) in h.pairs().unwrap().iter().enumerate() {
                assert!((e[0].hypot(e[1]) - t.h_abs[i]).abs() < 1e-7);
            }
        }
        assert!(map_norm(&gap_map(&t)).unwrap() > 0.1);
    }

    #[test]
    fn cosh_h_matches_discriminant() {
        let q = Potential::from_fourier(&[2.0], &[]).unwrap();
        let t = spectrum_table(&q, 3).unwrap();
        let d = crate::fundamental::discriminant(&q, t.lam_star[0]).unwrap().abs();
        assert!((t.h_abs[0].cosh() - d).abs() < 1e-7);
    }

    #[test]
    fn map_norm_examples() {
        let f = vector(MapKind::GapF, Entries::Scalars(vec![3.0, 4.0, 0.0, 0.0]), 2);
        assert_eq!(map_norm(&f).unwrap(), 5.0);
        let h = vector(MapKind::H, Entries::Pairs(vec![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), 3);
        assert!((map_norm(&h).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        let pair = vector(MapKind::PairMuTau, Entries::Pairs(vec![[1.0, 0.5]]), 1);
        assert!(matches!(map_norm(&pair), Err(Error::Usage(_))));
        assert_eq!(map_norm(&vector(MapKind::P, Entries::Pairs(vec![]), 0)).unwrap(), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let v = vector(MapKind::FrakP, Entries::Pairs(vec![[0.1, -0.2], [1e-300, 3.0]]), 2);
        let text = v.to_json().unwrap();
        assert!(text.contains("\"kind\": \"frak_p\"") && text.contains("\"N\": 2"));
        assert_eq!(SpectralVector::from_json(&text).unwrap(), v);
        let f = vector(MapKind::GapF, Entries::Scalars(vec![0.5, -0.25]), 1);
        assert_eq!(SpectralVector::from_json(&f.to_json().unwrap()).unwrap(), f);
        assert!(SpectralVector::from_json(r#"{"kind":"gap_f","N":2,"entries":[1.0]}"#).is_err());
        assert!(SpectralVector::from_json(r#"{"kind":"p","N":1,"entries":[1.0]}"#).is_err());
        assert!("bogus".parse::<MapKind>().is_err());
        assert_eq!("pair_nu_ghs".parse::<MapKind>().unwrap(), MapKind::PairNuGhs);
    }

    #[test]
    fn estimates_hold_for_free_and_cosine() {
        let r = estimate_check(&Potential::zero(), &spectrum_table(&Potential::zero(), 16).unwrap()).unwrap();
        assert!(r.lines.iter().all(|l| l.holds));
        let q = Potential::from_fourier(&[2.0], &[]).unwrap();
        let r = estimate_check(&q, &spectrum_table(&q, 16).unwrap()).unwrap();
        assert_eq!(r.rigorous_violations(), 0);
        assert!(r.lines[1].margin > 0.0);
        let small = spectrum_table(&q, 4).unwrap();
        assert!(matches!(estimate_check(&q, &small), Err(Error::Usage(_))));
    }
}
