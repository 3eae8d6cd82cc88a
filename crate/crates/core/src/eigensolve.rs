//! Boundary spectra, periodic band edges and the validated spectrum table.
//!
//! Every boundary eigenvalue is the solution of `ψ(1, λ) = α_n` for the
//! continuous Prüfer angle `ψ` of `φ` or `θ`. The angle is strictly
//! increasing in `λ`, so each level has its own bracket and no root can be
//! skipped, even next to a closed gap. Periodic edges are bracketed by the
//! boundary spectra through the band placement
//! `τ_n, ϱ_n ∈ (λ⁺_{n-1}, λ⁻_n)` and `μ_n, ν_n ∈ [λ⁻_n, λ⁺_n]`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fundamental::{
    eigenfunction_with, BoundaryCondition, FundamentalValues, GridFunction, IntegratorConfig, Shooter, Start,
};
use crate::potential::Potential;
use crate::roots::{brent, maximize};

/// Relative width below which a gap counts as closed.
pub const CLOSED_GAP_TOL: f64 = 1e-8;
/// Separation required between consecutive interlacing blocks.
pub const INTERLACE_GUARD: f64 = 1e-9;

/// Which norming constants to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `h_{s,n} = ln |φ'(1, μ_n)|`.
    Dirichlet,
    /// `𝔥_{s,n} = ln |θ(1, ν_n)|`.
    Neumann,
}

/// Periodic (`n` even) and antiperiodic (`n` odd) band edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSpectrum {
    pub lam0_plus: f64,
    /// `λ⁻_n`, `n = 1..=N`.
    pub minus: Vec<f64>,
    /// `λ⁺_n`, `n = 1..=N`.
    pub plus: Vec<f64>,
    /// Gap `n` is closed (`λ⁻_n = λ⁺_n`, a double eigenvalue).
    pub closed: Vec<bool>,
}

/// The four boundary spectra. `nu[0]` is `ν₀`; the other vectors start at level 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpectra {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub tau: Vec<f64>,
    pub rho: Vec<f64>,
}

impl BoundarySpectra {
    pub fn levels(&self) -> usize {
        self.mu.len()
    }

    pub fn get(&self, bc: BoundaryCondition) -> &[f64] {
        match bc {
            BoundaryCondition::DD => &self.mu,
            BoundaryCondition::NN => &self.nu,
            BoundaryCondition::DN => &self.tau,
            BoundaryCondition::ND => &self.rho,
        }
    }

    /// `ν_n`, `n ≥ 1`.
    pub fn nu_levels(&self) -> &[f64] {
        &self.nu[1..]
    }
}

/// All spectral data of one potential up to level `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub levels: usize,
    pub mu: Vec<f64>,
    pub nu0: f64,
    pub nu: Vec<f64>,
    pub tau: Vec<f64>,
    pub rho: Vec<f64>,
    pub lam0_plus: f64,
    pub lam_minus: Vec<f64>,
    pub lam_plus: Vec<f64>,
    pub closed: Vec<bool>,
    /// Maximizer `λ_n` of `(-1)ⁿ Δ` on `[λ⁻_n, λ⁺_n]`.
    pub lam_star: Vec<f64>,
    /// `Δ(λ_n)`.
    pub delta_star: Vec<f64>,
    /// `|h_n| = arccosh |Δ(λ_n)|`.
    pub h_abs: Vec<f64>,
    pub hs: Vec<f64>,
    pub ghs: Vec<f64>,
}

/// Shooting-based eigensolver bound to one potential.
#[derive(Debug, Clone)]
pub struct SpectralSolver {
    shooter: Shooter,
    sup: f64,
}

fn sign_for(n: usize) -> f64 {
    if n.is_multiple_of(2) { 1.0 } else { -1.0 }
}

impl SpectralSolver {
    pub fn new(q: &Potential, config: &IntegratorConfig) -> Result<Self> {
        Ok(Self { shooter: Shooter::new(q, config)?, sup: q.sup_bound() })
    }

    /// Solver for the even extension of `q` on `[0, 2]`.
    pub fn on_extension(q: &Potential, config: &IntegratorConfig) -> Result<Self> {
        Ok(Self { shooter: Shooter::on_extension(&q.even_extension(), config)?, sup: q.sup_bound() })
    }

    pub fn shooter(&self) -> &Shooter {
        &self.shooter
    }

    pub fn length(&self) -> f64 {
        self.shooter.length()
    }

    pub fn fundamental(&self, lambda: f64) -> Result<FundamentalValues> {
        self.shooter.fundamental(lambda)
    }

    pub fn discriminant(&self, lambda: f64) -> Result<f64> {
        Ok(self.shooter.fundamental(lambda)?.discriminant())
    }

    fn angle(&self, start: Start, lambda: f64) -> Result<f64> {
        let a = self.shooter.angles(lambda)?;
        Ok(match start {
            Start::Dirichlet => a.phi,
            Start::Neumann => a.theta,
        })
    }

    /// The `n`-th eigenvalue of the tagged problem (`n ≥ 0` for `NN`, `n ≥ 1` otherwise).
    pub fn eigenvalue(&self, bc: BoundaryCondition, n: usize) -> Result<f64> {
        if n < bc.first_index() {
            return Err(Error::Usage(format!("{bc} levels start at {}", bc.first_index())));
        }
        let len = self.length();
        let free = bc.free_eigenvalue(n, len);
        let pad = self.sup + 1.0;
        let lambda_max = self.shooter.config().lambda_max;
        if free + pad > lambda_max {
            return Err(Error::Range(format!(
                "{bc} level {n} (≈ {free:.3e}) exceeds lambda_max = {lambda_max:.3e}"
            )));
        }
        let start = bc.start();
        let target = crate::fundamental::target_angle(start, bc.right_dirichlet(), n);
        let g = |lambda: f64| -> Result<f64> { Ok(self.angle(start, lambda)? - target) };

        let (mut lo, mut hi) = (free - pad, free + pad);
        let mut widen = pad;
        for _ in 0..8 {
            if g(lo)? < 0.0 {
                break;
            }
            lo -= widen;
            widen *= 2.0;
        }
        widen = pad;
        for _ in 0..8 {
            if g(hi)? > 0.0 {
                break;
            }
            hi += widen;
            widen *= 2.0;
        }
        let (glo, ghi) = (g(lo)?, g(hi)?);
        if !(glo < 0.0 && ghi > 0.0) {
            return Err(Error::Bracketing(format!(
                "{bc} level {n}: oscillation count inconsistent on [{lo:.6e}, {hi:.6e}] (Prüfer offsets {glo:.3e}, {ghi:.3e})"
            )));
        }
        let root = brent(g, lo, hi, 0.0)?;
        self.check_residual(bc, n, root)?;
        Ok(root)
    }

    fn check_residual(&self, bc: BoundaryCondition, n: usize, lambda: f64) -> Result<()> {
        let fv = self.shooter.fundamental(lambda)?;
        let k = (1.0 + lambda.abs()).sqrt();
        let (value, scale) = match bc {
            BoundaryCondition::DD => (fv.phi1, 1.0 / k),
            BoundaryCondition::NN => (fv.dtheta1, k),
            BoundaryCondition::DN => (fv.dphi1, 1.0),
            BoundaryCondition::ND => (fv.theta1, 1.0),
        };
        if value.abs() > 1e-8 * scale {
            return Err(Error::Bracketing(format!(
                "{bc} level {n}: residual {value:.3e} at λ = {lambda:.12e} exceeds tolerance"
            )));
        }
        Ok(())
    }

    /// The lowest `count` eigenvalues (`count + 1` for `NN`, starting at `ν₀`).
    pub fn boundary_eigenvalues(&self, bc: BoundaryCondition, count: usize) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::Usage("level count must be at least 1".into()));
        }
        (bc.first_index()..=count).into_par_iter().map(|n| self.eigenvalue(bc, n)).collect()
    }

    pub fn boundary_spectra(&self, count: usize) -> Result<BoundarySpectra> {
        let mut all = BoundaryCondition::ALL
            .par_iter()
            .map(|&bc| self.boundary_eigenvalues(bc, count))
            .collect::<Result<Vec<_>>>()?;
        let rho = all.pop().unwrap();
        let tau = all.pop().unwrap();
        let nu = all.pop().unwrap();
        let mu = all.pop().unwrap();
        Ok(BoundarySpectra { mu, nu, tau, rho })
    }

    /// `Δ² - 1` in its cancellation-free form.
    fn excess(&self, lambda: f64) -> Result<f64> {
        Ok(self.shooter.fundamental(lambda)?.floquet_excess())
    }

    /// Edge between a band endpoint (`band`, where `Δ² < 1`) and a point
    /// inside the closed gap (`gap`, where `Δ² ≥ 1`).
    fn edge(&self, band: f64, gap: f64, label: &str) -> Result<f64> {
        let eg = self.excess(gap)?;
        if eg <= 0.0 {
            return Ok(gap);
        }
        let eb = self.excess(band)?;
        if eb >= 0.0 {
            return Err(Error::Inconsistent(format!(
                "{label}: Δ² - 1 = {eb:.3e} ≥ 0 at band point {band:.12e}; band count disagrees with boundary spectra"
            )));
        }
        brent(|l| self.excess(l), band, gap, 0.0)
    }

    /// Band edges `λ⁺₀`, `λ∓_n` for `n ≤ count`. `spectra` must reach level `count + 1`.
    pub fn periodic_from(&self, spectra: &BoundarySpectra, count: usize) -> Result<PeriodicSpectrum> {
        if spectra.levels() < count + 1 {
            return Err(Error::Usage(format!(
                "periodic edges up to level {count} need boundary spectra to level {}",
                count + 1
            )));
        }
        let (mu, nu, tau, rho) = (&spectra.mu, &spectra.nu, &spectra.tau, &spectra.rho);
        let lam0_plus = self.edge(tau[0].min(rho[0]), nu[0], "λ⁺₀")?;
        let edges = (1..=count)
            .into_par_iter()
            .map(|n| {
                let i = n - 1;
                let lo_gap = mu[i].min(nu[n]);
                let hi_gap = mu[i].max(nu[n]);
                let minus = self.edge(tau[i].max(rho[i]), lo_gap, &format!("λ⁻_{n}"))?;
                let plus = self.edge(tau[n].min(rho[n]), hi_gap, &format!("λ⁺_{n}"))?;
                Ok((minus, plus))
            })
            .collect::<Result<Vec<_>>>()?;
        let (minus, plus): (Vec<f64>, Vec<f64>) = edges.into_iter().unzip();
        let closed = minus.iter().zip(&plus).map(|(m, p)| p - m < CLOSED_GAP_TOL * (1.0 + m.abs())).collect();
        Ok(PeriodicSpectrum { lam0_plus, minus, plus, closed })
    }

    pub fn periodic_spectrum(&self, count: usize) -> Result<PeriodicSpectrum> {
        let spectra = self.boundary_spectra(count + 1)?;
        self.periodic_from(&spectra, count)
    }

    /// Maximizers `λ_n` of `(-1)ⁿ Δ` on each gap.
    pub fn discriminant_maxima(&self, periodic: &PeriodicSpectrum) -> Result<Vec<f64>> {
        (0..periodic.minus.len())
            .into_par_iter()
            .map(|i| {
                let (a, b) = (periodic.minus[i], periodic.plus[i]);
                if periodic.closed[i] {
                    return Ok(a);
                }
                let s = sign_for(i + 1);
                let width = 1e-10 * (1.0 + b.abs());
                let (x, _) = maximize(|l| Ok(s * self.discriminant(l)?), a, b, width)?;
                Ok(x)
            })
            .collect()
    }

    /// `h_{s,n}` at the given Dirichlet eigenvalues or `𝔥_{s,n}` at Neumann ones.
    pub fn norming_constants(&self, eigenvalues: &[f64], variant: Variant) -> Result<Vec<f64>> {
        eigenvalues
            .par_iter()
            .map(|&l| {
                let fv = self.shooter.fundamental(l)?;
                let v = match variant {
                    Variant::Dirichlet => fv.dphi1,
                    Variant::Neumann => fv.theta1,
                };
                if v.abs() < 1e-12 {
                    return Err(Error::Degenerate(format!("|{v:.3e}| at λ = {l:.12e} has no finite logarithm")));
                }
                Ok(v.abs().ln())
            })
            .collect()
    }

    pub fn eigenfunction(&self, bc: BoundaryCondition, eigenvalue: f64) -> Result<GridFunction> {
        eigenfunction_with(&self.shooter, bc, eigenvalue)
    }

    /// Assembles and validates the full table for levels `1..=count`.
    pub fn table(&self, count: usize) -> Result<SpectrumTable> {
        if count == 0 {
            return Err(Error::Usage("level count must be at least 1".into()));
        }
        let spectra = self.boundary_spectra(count + 1)?;
        let periodic = self.periodic_from(&spectra, count)?;
        let lam_star = self.discriminant_maxima(&periodic)?;
        let star_values = lam_star
            .par_iter()
            .map(|&l| self.shooter.fundamental(l))
            .collect::<Result<Vec<_>>>()?;
        let mu: Vec<f64> = spectra.mu[..count].to_vec();
        let nu: Vec<f64> = spectra.nu[1..=count].to_vec();
        let hs = self.norming_constants(&mu, Variant::Dirichlet)?;
        let ghs = self.norming_constants(&nu, Variant::Neumann)?;
        let table = SpectrumTable {
            levels: count,
            mu,
            nu0: spectra.nu[0],
            nu,
            tau: spectra.tau[..count].to_vec(),
            rho: spectra.rho[..count].to_vec(),
            lam0_plus: periodic.lam0_plus,
            lam_minus: periodic.minus,
            lam_plus: periodic.plus,
            closed: periodic.closed,
            lam_star,
            delta_star: star_values.iter().map(|f| f.discriminant()).collect(),
            h_abs: star_values.iter().map(|f| f.floquet_excess().max(0.0).sqrt().asinh()).collect(),
            hs,
            ghs,
        };
        table.validate(self)?;
        Ok(table)
    }
}

impl SpectrumTable {
    /// Checks interlacing, band placement and the discriminant relations.
    pub fn validate(&self, solver: &SpectralSolver) -> Result<()> {
        let n_lv = self.levels;
        let guard = |l: f64| INTERLACE_GUARD * (1.0 + l.abs());

        // ν₀ < {τ₁, ϱ₁} < {μ₁, ν₁} < {τ₂, ϱ₂} < …
        let mut blocks: Vec<(String, f64, f64)> = vec![("ν₀".into(), self.nu0, self.nu0)];
        for i in 0..n_lv {
            let n = i + 1;
            blocks.push((format!("{{τ_{n}, ϱ_{n}}}"), self.tau[i].min(self.rho[i]), self.tau[i].max(self.rho[i])));
            blocks.push((format!("{{μ_{n}, ν_{n}}}"), self.mu[i].min(self.nu[i]), self.mu[i].max(self.nu[i])));
        }
        for w in blocks.windows(2) {
            let (ref a, _, a_max) = w[0];
            let (ref b, b_min, _) = w[1];
            if !(b_min - a_max > INTERLACE_GUARD) {
                return Err(Error::Invariant(format!("interlacing violated: max {a} = {a_max:.12e} ≮ min {b} = {b_min:.12e}")));
            }
        }

        if self.nu0 > self.lam0_plus + guard(self.lam0_plus) {
            return Err(Error::Invariant(format!("ν₀ = {:.12e} > λ⁺₀ = {:.12e}", self.nu0, self.lam0_plus)));
        }
        for i in 0..n_lv {
            let n = i + 1;
            let below = if i == 0 { self.lam0_plus } else { self.lam_plus[i - 1] };
            let (lm, lp) = (self.lam_minus[i], self.lam_plus[i]);
            for (name, v) in [("τ", self.tau[i]), ("ϱ", self.rho[i])] {
                if v < below - guard(v) || v > lm + guard(v) {
                    return Err(Error::Invariant(format!(
                        "{name}_{n} = {v:.12e} outside band ({below:.12e}, {lm:.12e})"
                    )));
                }
            }
            for (name, v) in [("μ", self.mu[i]), ("ν", self.nu[i]), ("λ", self.lam_star[i])] {
                if v < lm - guard(v) || v > lp + guard(v) {
                    return Err(Error::Invariant(format!("{name}_{n} = {v:.12e} outside gap [{lm:.12e}, {lp:.12e}]")));
                }
            }
            let s = sign_for(n);
            if s * self.delta_star[i] < 1.0 - 1e-9 {
                return Err(Error::Invariant(format!("(-1)^{n} Δ(λ_{n}) = {:.12e} < 1", s * self.delta_star[i])));
            }
            let d_mu = s * solver.discriminant(self.mu[i])?;
            let ch = self.hs[i].cosh();
            if (d_mu - ch).abs() > 1e-7 * ch.max(1.0) {
                return Err(Error::Invariant(format!(
                    "(-1)^{n} Δ(μ_{n}) = {d_mu:.12e} differs from cosh h_s = {ch:.12e}"
                )));
            }
        }
        Ok(())
    }
}

/// First `count` eigenvalues of the tagged problem with default settings.
pub fn boundary_eigenvalues(q: &Potential, bc: BoundaryCondition, count: usize) -> Result<Vec<f64>> {
    SpectralSolver::new(q, &IntegratorConfig::default())?.boundary_eigenvalues(bc, count)
}

pub fn periodic_spectrum(q: &Potential, count: usize) -> Result<PeriodicSpectrum> {
    SpectralSolver::new(q, &IntegratorConfig::default())?.periodic_spectrum(count)
}

pub fn discriminant_maxima(q: &Potential, count: usize) -> Result<Vec<f64>> {
    let solver = SpectralSolver::new(q, &IntegratorConfig::default())?;
    let periodic = solver.periodic_spectrum(count)?;
    solver.discriminant_maxima(&periodic)
}

pub fn norming_constants(q: &Potential, count: usize, variant: Variant) -> Result<Vec<f64>> {
    let solver = SpectralSolver::new(q, &IntegratorConfig::default())?;
    let eig = match variant {
        Variant::Dirichlet => solver.boundary_eigenvalues(BoundaryCondition::DD, count)?,
        Variant::Neumann => solver.boundary_eigenvalues(BoundaryCondition::NN, count)?[1..].to_vec(),
    };
    solver.norming_constants(&eig, variant)
}

pub fn spectrum_table(q: &Potential, count: usize) -> Result<SpectrumTable> {
    SpectralSolver::new(q, &IntegratorConfig::default())?.table(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn solver(q: &Potential) -> SpectralSolver {
        SpectralSolver::new(q, &IntegratorConfig::default()).unwrap()
    }

    #[test]
    fn free_table_matches_closed_forms() {
        let t = solver(&Potential::zero()).table(20).unwrap();
        assert!(t.nu0.abs() < 1e-9);
        assert!(t.lam0_plus.abs() < 1e-9);
        for i in 0..20 {
            let n = (i + 1) as f64;
            let sq = (PI * n).powi(2);
            let half = (PI * (n - 0.5)).powi(2);
            for (v, want) in [(t.mu[i], sq), (t.nu[i], sq), (t.tau[i], half), (t.rho[i], half)] {
                assert!((v - want).abs() < 1e-7, "level {n}: {v} vs {want}");
            }
            assert!(t.closed[i]);
            assert!((t.lam_minus[i] - sq).abs() < 1e-7 && (t.lam_plus[i] - sq).abs() < 1e-7);
            assert!(t.h_abs[i] < 1e-6);
            assert!(t.hs[i].abs() < 1e-9 && t.ghs[i].abs() < 1e-9);
        }
    }

    #[test]
    fn cosine_potential_opens_gaps_and_validates() {
        let q = Potential::from_fourier(&[2.0, 0.0, 0.5], &[0.0, 1.0]).unwrap();
        let s = solver(&q);
        let t = s.table(8).unwrap();
        assert!(!t.closed[0]);
        for i in 0..8 {
            let d = s.discriminant(t.lam_minus[i]).unwrap().abs();
            assert!((d - 1.0).abs() < 1e-8, "|Δ(λ⁻)| = {d}");
            assert!(t.h_abs[i] >= 0.0);
        }
    }

    #[test]
    fn cosine_potential_matches_oracle_fixtures() {
        // finite-difference oracle, meshes 2⁻¹⁰..2⁻¹², Richardson-combined
        let q = Potential::from_fourier(&[2.0], &[]).unwrap();
        let s = solver(&q);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-8 * b.abs().max(1.0);
        let mu = s.boundary_eigenvalues(BoundaryCondition::DD, 3).unwrap();
        for (a, b) in mu.iter().zip([8.85709895209099, 39.469974546227625, 88.83261246932675]) {
            assert!(close(*a, b), "{a} vs {b}");
        }
        let nu = s.boundary_eigenvalues(BoundaryCondition::NN, 2).unwrap();
        for (a, b) in nu.iter().zip([-0.050603844070185845, 10.85677820056056, 39.520577486759656]) {
            assert!(close(*a, b), "{a} vs {b}");
        }
        let tau = s.boundary_eigenvalues(BoundaryCondition::DN, 2).unwrap();
        let rho = s.boundary_eigenvalues(BoundaryCondition::ND, 2).unwrap();
        for (i, b) in [2.400022215054681, 22.246965759589035].into_iter().enumerate() {
            assert!(close(tau[i], b) && close(rho[i], b));
        }
        let p = s.periodic_spectrum(1).unwrap();
        assert!(close(p.lam0_plus, -0.05060384407018579));
        assert!(close(p.plus[0] - p.minus[0], 10.85677820056056 - 8.857098952090988));
    }

    #[test]
    fn eigenvalue_rejects_bad_level() {
        let s = solver(&Potential::zero());
        assert!(matches!(s.eigenvalue(BoundaryCondition::DD, 0), Err(Error::Usage(_))));
        assert!(s.eigenvalue(BoundaryCondition::NN, 0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn out_of_range_level_is_reported() {
        let s = solver(&Potential::zero());
        assert!(matches!(s.eigenvalue(BoundaryCondition::DD, 400), Err(Error::Range(_))));
    }

    #[test]
    fn extension_spectrum_of_free_problem() {
        let s = SpectralSolver::on_extension(&Potential::zero(), &IntegratorConfig::default()).unwrap();
        let mu = s.boundary_eigenvalues(BoundaryCondition::DD, 6).unwrap();
        for (i, m) in mu.iter().enumerate() {
            let want = (PI * (i + 1) as f64 / 2.0).powi(2);
            assert!((m - want).abs() < 1e-8);
        }
    }

    #[test]
    fn periodic_needs_enough_boundary_levels() {
        let s = solver(&Potential::zero());
        let sp = s.boundary_spectra(3).unwrap();
        assert!(matches!(s.periodic_from(&sp, 3), Err(Error::Usage(_))));
    }

    #[test]
    fn gradient_of_mu_one_for_shifted_cosine() {
        // first-order shift: μ_n(εq) ≈ (πn)² - ε a_n / 2 for q = a cos 2πnx
        let eps = 1e-4;
        let q = Potential::from_fourier(&[eps], &[]).unwrap();
        let mu = solver(&q).eigenvalue(BoundaryCondition::DD, 1).unwrap();
        assert!((mu - PI * PI + eps / 2.0).abs() < 1e-7);
    }
}
