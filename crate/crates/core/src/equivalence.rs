//! Sign flips `J_σ` on gap-map vectors, the induced involutions
//! `U_σ = 𝔣⁻¹ J_σ 𝔣`, and numerical checks of the identities they satisfy.
//!
//! Identities are evaluated at `q• = U_σ q` and compared against the data of
//! `q`. Levels above `¾N` are skipped because the truncated inverse solve
//! loses accuracy there.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{SpectralSolver, SpectrumTable};
use crate::error::{Error, Result};
use crate::fundamental::{IntegratorConfig, Shooter};
use crate::inverse::{reconstruct_with_start, SolverConfig};
use crate::maps::{gap_map, h_map, p_map, pair_map, Entries, MapKind, MapVariant, Pairing, SpectralVector};
use crate::potential::Potential;

/// Residual tolerance for eigenvalue and norming-constant identities.
pub const EIGEN_TOL: f64 = 1e-5;
/// Residual tolerance for band-edge invariance.
pub const PERIODIC_TOL: f64 = 1e-6;
/// Relative tolerance for norm preservation.
pub const NORM_TOL: f64 = 1e-4;
/// Tolerance for `p`, `𝔭`, `h`, `𝔥` entries, whose second components are
/// square roots of small differences.
pub const VECTOR_TOL: f64 = 1e-4;
/// Tolerance for the doubled-problem identities.
pub const DOUBLING_TOL: f64 = 1e-6;
/// Sample count for the fundamental-solution identity.
pub const LAMBDA_SAMPLES: usize = 20;

/// A binary sequence `σ = (σ_j)_{j≥1}`: explicit leading bits, then a repeating tail.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignSequence {
    pub prefix: Vec<u8>,
    pub tail: Vec<u8>,
}

impl SignSequence {
    /// `σ_j = 1` for every `j`.
    pub fn all_ones() -> Self {
        Self { prefix: vec![], tail: vec![1] }
    }

    /// `σ_{2j-1} = 1`, `σ_{2j} = 0`.
    pub fn odd_ones() -> Self {
        Self { prefix: vec![], tail: vec![1, 0] }
    }

    pub fn new(prefix: Vec<u8>, tail: Vec<u8>) -> Result<Self> {
        if tail.is_empty() {
            return Err(Error::Parse("sign sequence needs a non-empty repeating tail".into()));
        }
        if prefix.iter().chain(&tail).any(|b| *b > 1) {
            return Err(Error::Parse("sign bits must be 0 or 1".into()));
        }
        Ok(Self { prefix, tail })
    }

    /// `σ_j` for `j ≥ 1`.
    pub fn bit(&self, j: usize) -> u8 {
        assert!(j >= 1, "sign sequences are indexed from 1");
        if j <= self.prefix.len() {
            self.prefix[j - 1]
        } else {
            self.tail[(j - self.prefix.len() - 1) % self.tail.len()]
        }
    }

    pub fn is_all_ones(&self) -> bool {
        self.prefix.iter().chain(&self.tail).all(|b| *b == 1)
    }

    /// Every odd-indexed bit is 1 (checked over prefix plus two tail periods).
    pub fn odd_bits_set(&self) -> bool {
        let span = self.prefix.len() + 2 * self.tail.len() + 2;
        (1..=span).step_by(2).all(|j| self.bit(j) == 1)
    }
}

impl fmt::Display for SignSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Self::all_ones() {
            return f.write_str("all-ones");
        }
        if *self == Self::odd_ones() {
            return f.write_str("odd-ones");
        }
        let bits: Vec<String> = self.prefix.iter().map(|b| b.to_string()).collect();
        let tail: Vec<String> = self.tail.iter().map(|b| b.to_string()).collect();
        write!(f, "{}({})*", if bits.is_empty() { String::new() } else { bits.join(",") + "," }, tail.join(","))
    }
}

/// Accepts `all-ones`, `odd-ones`, comma-separated bits, or the display form
/// `b1,b2,(t1,t2)*`. A plain list continues by repeating its last two bits
/// (its only bit if it has one).
impl FromStr for SignSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "all-ones" | "all_ones" => return Ok(Self::all_ones()),
            "odd-ones" | "odd_ones" => return Ok(Self::odd_ones()),
            _ => {}
        }
        if let Some(body) = s.strip_suffix(")*") {
            let (head, tail) = body
                .split_once('(')
                .ok_or_else(|| Error::Parse(format!("unbalanced parenthesis in sign sequence `{s}`")))?;
            let head = head.trim().trim_end_matches(',');
            let prefix = if head.trim().is_empty() { vec![] } else { parse_bits(head)? };
            return Self::new(prefix, parse_bits(tail)?);
        }
        let bits = parse_bits(s)?;
        let tail = bits[bits.len().saturating_sub(2)..].to_vec();
        Self::new(bits, tail)
    }
}

fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.split(',')
        .map(|t| match t.trim() {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            other => Err(Error::Parse(format!("invalid sign bit `{other}` (expected 0 or 1)"))),
        })
        .collect()
}

impl Serialize for SignSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `(J_σ v)_j = (-1)^{σ_j} v_j`.
pub fn apply_sign_flip(sigma: &SignSequence, v: &SpectralVector) -> Result<SpectralVector> {
    let entries = v
        .scalars()
        .filter(|_| v.kind == MapKind::GapF)
        .ok_or_else(|| Error::Usage(format!("sign flips act on gap_f vectors, got {}", v.kind)))?;
    let flipped = entries
        .iter()
        .enumerate()
        .map(|(i, x)| if sigma.bit(i + 1) == 1 { -x } else { *x })
        .collect();
    Ok(SpectralVector { kind: MapKind::GapF, levels: v.levels, entries: Entries::Scalars(flipped) })
}

/// `U_σ q`, warm-started from `q`.
pub fn involution(sigma: &SignSequence, q: &Potential, cfg: &SolverConfig) -> Result<Potential> {
    Ok(involution_detailed(sigma, q, cfg)?.potential)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvolutionSummary {
    #[serde(skip)]
    pub potential: Potential,
    pub residual_norm: f64,
    pub iterations: usize,
    pub jacobian_condition_estimate: f64,
}

fn involution_detailed(sigma: &SignSequence, q: &Potential, cfg: &SolverConfig) -> Result<InvolutionSummary> {
    let table = SpectralSolver::new(q, &cfg.integrator)?.table(cfg.levels)?;
    let target = apply_sign_flip(sigma, &gap_map(&table))?;
    let r = reconstruct_with_start(&target, cfg, Some(q))?;
    if !r.converged {
        return Err(Error::NotConverged { iterations: r.iterations, residual: r.residual_norm });
    }
    Ok(InvolutionSummary {
        potential: r.potential,
        residual_norm: r.residual_norm,
        iterations: r.iterations,
        jacobian_condition_estimate: r.jacobian_condition_estimate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    T1,
    T2,
    T3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), residual, tolerance, passed: residual <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub theorem: String,
    pub sigma: Option<SignSequence>,
    #[serde(rename = "N")]
    pub levels: usize,
    /// Identities are compared for `n ≤ checked_levels`.
    pub checked_levels: usize,
    pub convention: String,
    pub involution: Option<InvolutionSummary>,
    pub checks: Vec<IdentityCheck>,
    pub passed: bool,
    pub failure: Option<String>,
}

impl EquivalenceReport {
    fn finish(mut self) -> Self {
        self.passed = self.failure.is_none() && self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn check(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_pair_diff(a: &SpectralVector, b: &SpectralVector, count: usize) -> f64 {
    let (a, b) = (a.pairs().unwrap_or(&[]), b.pairs().unwrap_or(&[]));
    a.iter().zip(b).take(count).map(|(x, y)| (x[0] - y[0]).abs().max((x[1] - y[1]).abs())).fold(0.0, f64::max)
}

fn periodic_check(t: &SpectrumTable, u: &SpectrumTable, m: usize) -> IdentityCheck {
    let r = (t.lam0_plus - u.lam0_plus)
        .abs()
        .max(max_diff(&t.lam_minus[..m], &u.lam_minus[..m]))
        .max(max_diff(&t.lam_plus[..m], &u.lam_plus[..m]));
    IdentityCheck::new("periodic λ₀⁺, λₙ± invariant", r, PERIODIC_TOL)
}

fn norm_check(q: &Potential, u: &Potential) -> IdentityCheck {
    let scale = q.l2_norm().max(1.0);
    IdentityCheck::new("‖q‖ = ‖q•‖", (q.l2_norm() - u.l2_norm()).abs() / scale, NORM_TOL)
}

fn pair_check(name: &str, a: Result<SpectralVector>, b: Result<SpectralVector>, m: usize, tol: f64) -> IdentityCheck {
    match (a, b) {
        (Ok(a), Ok(b)) => IdentityCheck::new(name, max_pair_diff(&a, &b, m), tol),
        (Err(e), _) | (_, Err(e)) => IdentityCheck::new(format!("{name} ({e})"), f64::INFINITY, tol),
    }
}

/// `φ'(1, λ, q) = θ(1, λ, q•)` and `θ(1, λ, q) = φ'(1, λ, q•)` on a λ grid
/// spanning the checked levels.
fn wronskian_level_check(q: &Potential, u: &Potential, t: &SpectrumTable, m: usize, cfg: &IntegratorConfig) -> Result<IdentityCheck> {
    let (sq, su) = (Shooter::new(q, cfg)?, Shooter::new(u, cfg)?);
    let lo = t.nu0 - 1.0;
    let hi = t.lam_plus[m - 1] + 1.0;
    let worst = (0..LAMBDA_SAMPLES)
        .into_par_iter()
        .map(|i| {
            let lambda = lo + (hi - lo) * i as f64 / (LAMBDA_SAMPLES - 1) as f64;
            let (a, b) = (sq.fundamental(lambda)?, su.fundamental(lambda)?);
            let d1 = (a.dphi1 - b.theta1).abs() / a.dphi1.abs().max(1.0);
            let d2 = (a.theta1 - b.dphi1).abs() / a.theta1.abs().max(1.0);
            Ok(d1.max(d2))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(IdentityCheck::new("φ'(1,λ,q) = θ(1,λ,q•) at sampled λ", worst, EIGEN_TOL))
}

/// Checks the identities of the selected theorem for `q` and `q• = U_σ q`.
///
/// `sigma` is required for [`Theorem::T3`] and ignored otherwise.
pub fn verify_theorem(q: &Potential, which: Theorem, sigma: Option<&SignSequence>, cfg: &SolverConfig) -> Result<EquivalenceReport> {
    cfg.validate()?;
    let sigma = match which {
        Theorem::T1 => SignSequence::all_ones(),
        Theorem::T2 => SignSequence::odd_ones(),
        Theorem::T3 => {
            let s = sigma.ok_or_else(|| Error::Usage("T3 needs a sign sequence".into()))?.clone();
            if !s.odd_bits_set() {
                return Err(Error::Usage(format!("T3 requires σ_(2j-1) = 1 for all j, got {s}")));
            }
            s
        }
    };
    let n = cfg.levels;
    let m = (3 * n / 4).max(1);
    let mut report = EquivalenceReport {
        theorem: format!("{which:?}"),
        sigma: Some(sigma.clone()),
        levels: n,
        checked_levels: m,
        convention: "identities evaluated at q• = U_σ q".into(),
        involution: None,
        checks: vec![],
        passed: false,
        failure: None,
    };
    let inv = match involution_detailed(&sigma, q, cfg) {
        Ok(inv) => inv,
        Err(e) => {
            report.failure = Some(format!("involution failed: {e}"));
            return Ok(report.finish());
        }
    };
    let u = inv.potential.clone();
    report.involution = Some(inv);
    let (t, tu) = rayon::join(
        || SpectralSolver::new(q, &cfg.integrator)?.table(n),
        || SpectralSolver::new(&u, &cfg.integrator)?.table(n),
    );
    let (t, tu) = match (t, tu) {
        (Ok(t), Ok(tu)) => (t, tu),
        (Err(e), _) | (_, Err(e)) => {
            report.failure = Some(format!("spectrum of q or q• failed: {e}"));
            return Ok(report.finish());
        }
    };
    let checks = &mut report.checks;
    match which {
        Theorem::T1 => {
            checks.push(IdentityCheck::new("μₙ(q) = νₙ(q•)", max_diff(&t.mu[..m], &tu.nu[..m]), EIGEN_TOL));
            checks.push(IdentityCheck::new("νₙ(q) = μₙ(q•)", max_diff(&t.nu[..m], &tu.mu[..m]), EIGEN_TOL));
            checks.push(IdentityCheck::new("τₙ(q) = ϱₙ(q•)", max_diff(&t.tau[..m], &tu.rho[..m]), EIGEN_TOL));
            checks.push(IdentityCheck::new("ϱₙ(q) = τₙ(q•)", max_diff(&t.rho[..m], &tu.tau[..m]), EIGEN_TOL));
            checks.push(periodic_check(&t, &tu, m));
            checks.push(norm_check(q, &u));
            checks.push(pair_check("ν×ϱ(q) = μ×τ(q•)", pair_map(&t, Pairing::NuRho), pair_map(&tu, Pairing::MuTau), m, EIGEN_TOL));
            checks.push(pair_check("ν×𝔥_s(q) = μ×h_s(q•)", pair_map(&t, Pairing::NuGhs), pair_map(&tu, Pairing::MuHs), m, EIGEN_TOL));
            checks.push(pair_check("𝔭(q) = p(q•)", p_map(&t, MapVariant::Neumann), p_map(&tu, MapVariant::Dirichlet), m, VECTOR_TOL));
            checks.push(pair_check("𝔥(q) = h(q•)", h_map(&t, MapVariant::Neumann), h_map(&tu, MapVariant::Dirichlet), m, VECTOR_TOL));
            checks.push(wronskian_level_check(q, &u, &t, m, &cfg.integrator)?);
        }
        Theorem::T2 => {
            checks.push(IdentityCheck::new("μₙ(q) = μₙ(q•)", max_diff(&t.mu[..m], &tu.mu[..m]), EIGEN_TOL));
            checks.push(IdentityCheck::new("νₙ(q) = νₙ(q•)", max_diff(&t.nu[..m], &tu.nu[..m]), EIGEN_TOL));
            checks.push(IdentityCheck::new("τₙ(q) = ϱₙ(q•)", max_diff(&t.tau[..m], &tu.rho[..m]), EIGEN_TOL));
            checks.push(IdentityCheck::new("ϱₙ(q) = τₙ(q•)", max_diff(&t.rho[..m], &tu.tau[..m]), EIGEN_TOL));
            checks.push(periodic_check(&t, &tu, m));
            checks.push(norm_check(q, &u));
            checks.push(pair_check("ν×ϱ(q) = ν×τ(q•)", pair_map(&t, Pairing::NuRho), pair_map(&tu, Pairing::NuTau), m, EIGEN_TOL));
            checks.push(pair_check("μ×τ(q) = μ×ϱ(q•)", pair_map(&t, Pairing::MuTau), pair_map(&tu, Pairing::MuRho), m, EIGEN_TOL));
        }
        Theorem::T3 => {
            let mixed = assemble_mixed_map(&sigma, &t)?;
            checks.push(pair_check("ζ(q) = μ×τ(q•)", Ok(mixed.zeta), pair_map(&tu, Pairing::MuTau), m, EIGEN_TOL));
            checks.push(pair_check("ξ(q) = μ×h_s(q•)", Ok(mixed.xi), pair_map(&tu, Pairing::MuHs), m, EIGEN_TOL));
            checks.push(pair_check("𝔉(q) = p(q•)", Ok(mixed.frak_f), p_map(&tu, MapVariant::Dirichlet), m, VECTOR_TOL));
            checks.push(periodic_check(&t, &tu, m));
            checks.push(norm_check(q, &u));
        }
    }
    Ok(report.finish())
}

/// The mixed maps `(ζ, ξ, 𝔉)` selected level by level by `σ_{2n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedMaps {
    pub zeta: SpectralVector,
    pub xi: SpectralVector,
    pub frak_f: SpectralVector,
}

/// Assembles `ζ_n`, `ξ_n`, `𝔉_n` from one table.
///
/// Since every odd bit is set, `τ` and `ϱ` always trade places; `σ_{2n}`
/// decides whether `μ_n` trades with `ν_n`. Where it does not, the
/// Dirichlet data stay but the norming constant changes sign.
pub fn assemble_mixed_map(sigma: &SignSequence, table: &SpectrumTable) -> Result<MixedMaps> {
    if !sigma.odd_bits_set() {
        return Err(Error::Usage(format!("mixed maps require σ_(2j-1) = 1 for all j, got {sigma}")));
    }
    let p = p_map(table, MapVariant::Dirichlet)?;
    let fp = p_map(table, MapVariant::Neumann)?;
    let (p, fp) = (p.pairs().unwrap(), fp.pairs().unwrap());
    let n = table.levels;
    let mut zeta = Vec::with_capacity(n);
    let mut xi = Vec::with_capacity(n);
    let mut ff = Vec::with_capacity(n);
    for i in 0..n {
        if sigma.bit(2 * (i + 1)) == 1 {
            zeta.push([table.nu[i], table.rho[i]]);
            xi.push([table.nu[i], table.ghs[i]]);
            ff.push(fp[i]);
        } else {
            zeta.push([table.mu[i], table.rho[i]]);
            xi.push([table.mu[i], -table.hs[i]]);
            ff.push([p[i][0], -p[i][1]]);
        }
    }
    for (i, w) in zeta.windows(2).enumerate() {
        if !(w[1][0] > w[0][0]) {
            return Err(Error::Invariant(format!("ζ first components not increasing at level {}", i + 2)));
        }
    }
    let vec = |kind, entries| SpectralVector { kind, levels: n, entries: Entries::Pairs(entries) };
    Ok(MixedMaps { zeta: vec(MapKind::PairMuTau, zeta), xi: vec(MapKind::PairMuHs, xi), frak_f: vec(MapKind::P, ff) })
}

/// Dirichlet, Neumann and 4-periodic data of the even extension on `[0, 2]`
/// compared with the spectra on `[0, 1]`.
pub fn verify_doubling(q: &Potential, levels: usize) -> Result<EquivalenceReport> {
    verify_doubling_with(q, levels, &IntegratorConfig::default())
}

pub fn verify_doubling_with(q: &Potential, levels: usize, cfg: &IntegratorConfig) -> Result<EquivalenceReport> {
    if levels == 0 {
        return Err(Error::Usage("level count must be at least 1".into()));
    }
    let base = SpectralSolver::new(q, cfg)?;
    let ext = SpectralSolver::on_extension(q, cfg)?;
    let (s, d) = rayon::join(|| base.boundary_spectra(levels), || ext.boundary_spectra(2 * levels + 1));
    let (s, d) = (s?, d?);
    let per = ext.periodic_from(&d, 2 * levels)?;

    let mut dirichlet_err: f64 = 0.0;
    let mut neumann_err: f64 = 0.0;
    let mut edge_err: f64 = 0.0;
    let mut ext_edge_err = (d.nu[0] - per.lam0_plus).abs();
    let set_diff = |a: (f64, f64), b: (f64, f64)| {
        let (a0, a1) = (a.0.min(a.1), a.0.max(a.1));
        let (b0, b1) = (b.0.min(b.1), b.0.max(b.1));
        (a0 - b0).abs().max((a1 - b1).abs())
    };
    for i in 0..levels {
        let (odd, even) = (2 * i, 2 * i + 1);
        dirichlet_err = dirichlet_err.max((d.mu[odd] - s.tau[i]).abs()).max((d.mu[even] - s.mu[i]).abs());
        neumann_err = neumann_err.max((d.nu[odd + 1] - s.rho[i]).abs()).max((d.nu[even + 1] - s.nu[i + 1]).abs());
        edge_err = edge_err
            .max(set_diff((per.minus[odd], per.plus[odd]), (s.rho[i], s.tau[i])))
            .max(set_diff((per.minus[even], per.plus[even]), (s.mu[i], s.nu[i + 1])));
    }
    for k in 0..2 * levels {
        ext_edge_err = ext_edge_err.max(set_diff((per.minus[k], per.plus[k]), (d.mu[k], d.nu[k + 1])));
    }
    let checks = vec![
        IdentityCheck::new("μ̃₂ₙ₋₁ = τₙ, μ̃₂ₙ = μₙ", dirichlet_err, DOUBLING_TOL),
        IdentityCheck::new("ν̃₂ₙ₋₁ = ϱₙ, ν̃₂ₙ = νₙ", neumann_err, DOUBLING_TOL),
        IdentityCheck::new("{λ̃₂ₙ₋₁±} = {ϱₙ, τₙ}, {λ̃₂ₙ±} = {μₙ, νₙ}", edge_err, DOUBLING_TOL),
        IdentityCheck::new("ν̃₀ = λ̃₀⁺, {λ̃ₙ±} = {μ̃ₙ, ν̃ₙ}", ext_edge_err, DOUBLING_TOL),
    ];
    Ok(EquivalenceReport {
        theorem: "doubling".into(),
        sigma: None,
        levels,
        checked_levels: levels,
        convention: "even extension on [0, 2], 4-periodic band edges".into(),
        involution: None,
        checks,
        passed: false,
        failure: None,
    }
    .finish())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub sigma: SignSequence,
    #[serde(rename = "N")]
    pub levels: usize,
    /// Least-squares slope of `log |c_k|` against `log k`; `None` with fewer than two resolved modes.
    pub slope_q: Option<f64>,
    pub slope_image: Option<f64>,
    pub resolved_modes_q: usize,
    pub resolved_modes_image: usize,
    pub note: String,
}

/// Slope of `log |c_k|` against `log k` over modes with `|c_k| > 1e-12`.
pub fn decay_slope(q: &Potential) -> (Option<f64>, usize) {
    let pts: Vec<(f64, f64)> = (1..=q.modes())
        .filter_map(|k| {
            let c = q.cos_coeff(k).hypot(q.sin_coeff(k));
            (c > 1e-12).then(|| ((k as f64).ln(), c.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return (None, pts.len());
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (Some(sxy / sxx), pts.len())
}

/// Compares Fourier decay of `q` and `U_σ q` (all-ones preset only).
pub fn smoothness_diagnostic(q: &Potential, sigma: &SignSequence, cfg: &SolverConfig) -> Result<SmoothnessReport> {
    if !sigma.is_all_ones() {
        return Err(Error::Usage(format!("smoothness diagnostic is defined for all-ones, got {sigma}")));
    }
    let u = involution(sigma, q, cfg)?;
    let (slope_q, nq) = decay_slope(q);
    let (slope_image, nu) = decay_slope(&u);
    let note = if nq < 2 {
        "input has fewer than two nonzero modes; its slope is undefined".to_string()
    } else {
        format!("slopes over resolved modes up to N = {}; finite truncation, consistency check only", cfg.levels)
    };
    Ok(SmoothnessReport {
        sigma: sigma.clone(),
        levels: cfg.levels,
        slope_q,
        slope_image,
        resolved_modes_q: nq,
        resolved_modes_image: nu,
        note,
    })
}
