//! Reconstruction of a potential from its gap-map vector.
//!
//! The unknowns are the Fourier coefficients `a_1..a_N, b_1..b_N`, matched
//! against the first `2N` entries of `𝔣`. Newton steps use eigenvalue
//! gradients `∂λ/∂q = y²` projected on the basis, with a backtracking line
//! search and a norm guard on the iterates.

use rayon::prelude::*;
use serde::Serialize;

use crate::eigensolve::SpectralSolver;
use crate::error::{Error, Result};
use crate::fundamental::{simpson, BoundaryCondition, GridFunction, IntegratorConfig};
use crate::maps::{gap_map, MapKind, SpectralVector};
use crate::potential::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Truncation level: `2N` map entries, Fourier modes `1..=N`.
    pub levels: usize,
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Step reduction factor of the line search.
    pub backtrack: f64,
    /// Smallest step fraction tried before giving up.
    pub min_step: f64,
    pub jacobian: JacobianMode,
    /// Condition numbers above this abort the solve.
    pub max_condition: f64,
    pub integrator: IntegratorConfig,
}

impl SolverConfig {
    pub fn new(levels: usize) -> Self {
        Self {
            levels,
            residual_tol: 1e-8,
            max_iter: 60,
            backtrack: 0.5,
            min_step: 2f64.powi(-10),
            jacobian: JacobianMode::Analytic,
            max_condition: 1e10,
            integrator: IntegratorConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::Config("truncation level N must be at least 1".into()));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::Config("residual tolerance must be positive".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) || !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return Err(Error::Config("line search needs 0 < backtrack < 1 and 0 < min_step ≤ 1".into()));
        }
        self.integrator.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionResult {
    #[serde(skip)]
    pub potential: Potential,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub jacobian_condition_estimate: f64,
}

/// `y_n²` for the normalized `n`-th eigenfunction of the tagged problem.
pub fn eigenvalue_gradient(q: &Potential, bc: BoundaryCondition, n: usize) -> Result<GridFunction> {
    let solver = SpectralSolver::new(q, &IntegratorConfig::default())?;
    gradient_with(&solver, bc, n)
}

fn gradient_with(solver: &SpectralSolver, bc: BoundaryCondition, n: usize) -> Result<GridFunction> {
    let lambda = solver.eigenvalue(bc, n)?;
    let y = solver.eigenfunction(bc, lambda)?;
    let mut g = y.squared();
    g.normalized = false;
    Ok(g)
}

/// `∫ g(x) cos 2πkx dx`, `k = 1..=modes`, followed by the sine projections.
fn project(g: &GridFunction, modes: usize) -> Vec<f64> {
    let h = g.step;
    let mut out = vec![0.0; 2 * modes];
    let mut buf_c = vec![0.0; g.len()];
    let mut buf_s = vec![0.0; g.len()];
    for k in 1..=modes {
        let w = 2.0 * std::f64::consts::PI * k as f64;
        for (j, v) in g.values.iter().enumerate() {
            let (s, c) = (w * j as f64 * h).sin_cos();
            buf_c[j] = v * c;
            buf_s[j] = v * s;
        }
        out[k - 1] = simpson(&buf_c, h);
        out[modes + k - 1] = simpson(&buf_s, h);
    }
    out
}

/// `𝔣_1..𝔣_{2N}` from the boundary spectra alone.
fn gap_entries(q: &Potential, levels: usize, integrator: &IntegratorConfig) -> Result<Vec<f64>> {
    let solver = SpectralSolver::new(q, integrator)?;
    let s = solver.boundary_spectra(levels)?;
    Ok((0..levels).flat_map(|i| [s.rho[i] - s.tau[i], s.nu[i + 1] - s.mu[i]]).collect())
}

/// Jacobian of `c ↦ 𝔣(q_c)` with rows `𝔣_1..𝔣_{2N}` and columns `a_1..a_N, b_1..b_N`.
pub fn gap_jacobian(q: &Potential, cfg: &SolverConfig) -> Result<nalgebra::DMatrix<f64>> {
    let n = cfg.levels;
    let mut jac = nalgebra::DMatrix::<f64>::zeros(2 * n, 2 * n);
    match cfg.jacobian {
        JacobianMode::Analytic => {
            let solver = SpectralSolver::new(q, &cfg.integrator)?;
            let rows = (0..2 * n)
                .into_par_iter()
                .map(|r| {
                    let level = r / 2 + 1;
                    let (plus, minus) = if r % 2 == 0 {
                        (BoundaryCondition::ND, BoundaryCondition::DN)
                    } else {
                        (BoundaryCondition::NN, BoundaryCondition::DD)
                    };
                    let gp = project(&gradient_with(&solver, plus, level)?, n);
                    let gm = project(&gradient_with(&solver, minus, level)?, n);
                    Ok(gp.iter().zip(&gm).map(|(a, b)| a - b).collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            for (r, row) in rows.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    jac[(r, c)] = *v;
                }
            }
        }
        JacobianMode::FiniteDifference => {
            let base = q.coefficients(n);
            let cols = (0..2 * n)
                .into_par_iter()
                .map(|k| {
                    let step = 1e-5 * (1.0 + base[k].abs());
                    let mut up = base.clone();
                    let mut down = base.clone();
                    up[k] += step;
                    down[k] -= step;
                    let fu = gap_entries(&Potential::from_coefficients(&up)?, n, &cfg.integrator)?;
                    let fd = gap_entries(&Potential::from_coefficients(&down)?, n, &cfg.integrator)?;
                    Ok(fu.iter().zip(&fd).map(|(a, b)| (a - b) / (2.0 * step)).collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            for (c, col) in cols.iter().enumerate() {
                for (r, v) in col.iter().enumerate() {
                    jac[(r, c)] = *v;
                }
            }
        }
    }
    Ok(jac)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `𝔣(q) = target` for `q` in the span of the first `N` modes.
pub fn reconstruct_from_gap_map(target: &SpectralVector, cfg: &SolverConfig) -> Result<ReconstructionResult> {
    reconstruct_with_start(target, cfg, None)
}

/// As [`reconstruct_from_gap_map`], starting from `start` instead of `q = 0`.
pub fn reconstruct_with_start(
    target: &SpectralVector,
    cfg: &SolverConfig,
    start: Option<&Potential>,
) -> Result<ReconstructionResult> {
    cfg.validate()?;
    if target.kind != MapKind::GapF {
        return Err(Error::Usage(format!("reconstruction needs a gap_f vector, got {}", target.kind)));
    }
    let n = cfg.levels;
    let goal = target
        .scalars()
        .filter(|v| v.len() >= 2 * n)
        .ok_or_else(|| Error::Usage(format!("target must hold at least 2N = {} entries", 2 * n)))?[..2 * n]
        .to_vec();
    if goal.iter().any(|x| !x.is_finite()) {
        return Err(Error::Usage("target entries must be finite".into()));
    }
    let t = norm(&goal);
    let guard = 4.0 * t * (1.0 + 2.0 * t.cbrt()) + 1.0;

    let residual_at = |c: &[f64]| -> Result<Vec<f64>> {
        let q = Potential::from_coefficients(c)?;
        let f = gap_entries(&q, n, &cfg.integrator)?;
        Ok(f.iter().zip(&goal).map(|(a, b)| a - b).collect())
    };

    let mut c = match start {
        Some(q) => q.coefficients(n),
        None => vec![0.0; 2 * n],
    };
    if Potential::from_coefficients(&c)?.l2_norm() > guard {
        c = vec![0.0; 2 * n];
    }
    let mut res = residual_at(&c)?;
    let mut r = norm(&res);
    let mut iterations = 0;
    let mut condition = f64::NAN;

    while r > cfg.residual_tol && iterations < cfg.max_iter {
        let q = Potential::from_coefficients(&c)?;
        let jac = gap_jacobian(&q, cfg)?;
        let svd = jac.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition > cfg.max_condition {
            return Err(Error::IllConditioned(condition));
        }
        let rhs = nalgebra::DVector::from_iterator(2 * n, res.iter().map(|x| -x));
        let delta = svd.solve(&rhs, 0.0).map_err(|e| Error::Degenerate(e.to_string()))?;

        let mut step = 1.0;
        let mut accepted = None;
        while step >= cfg.min_step {
            let trial: Vec<f64> = c.iter().zip(delta.iter()).map(|(a, d)| a + step * d).collect();
            let within = Potential::from_coefficients(&trial)?.l2_norm() <= guard;
            if within {
                if let Ok(tr) = residual_at(&trial) {
                    let rn = norm(&tr);
                    if rn < r {
                        accepted = Some((trial, tr, rn));
                        break;
                    }
                }
            }
            step *= cfg.backtrack;
        }
        match accepted {
            Some((trial, tr, rn)) => {
                c = trial;
                res = tr;
                r = rn;
                iterations += 1;
            }
            None => break,
        }
    }

    let potential = Potential::from_coefficients(&c)?;
    let converged = r <= cfg.residual_tol;
    if converged {
        // forward check through the full validated table
        let table = SpectralSolver::new(&potential, &cfg.integrator)?.table(n)?;
        let f = gap_map(&table);
        let check = norm(&f.entries.flat().iter().zip(&goal).map(|(a, b)| a - b).collect::<Vec<_>>());
        if check > 10.0 * cfg.residual_tol {
            return Err(Error::Inconsistent(format!(
                "forward check of the reconstruction gives residual {check:.3e}"
            )));
        }
    }
    Ok(ReconstructionResult { potential, residual_norm: r, iterations, converged, jacobian_condition_estimate: condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::spectrum_table;
    use crate::maps::Entries;
    use std::f64::consts::PI;

    #[test]
    fn free_gradients() {
        let q = Potential::zero();
        let g = eigenvalue_gradient(&q, BoundaryCondition::DD, 1).unwrap();
        assert!((g.integral() - 1.0).abs() < 1e-9);
        for j in (0..g.len()).step_by(97) {
            let x = g.x(j);
            assert!((g.values[j] - 2.0 * (PI * x).sin().powi(2)).abs() < 1e-8);
        }
        let g = eigenvalue_gradient(&q, BoundaryCondition::NN, 1).unwrap();
        for j in (0..g.len()).step_by(97) {
            let x = g.x(j);
            assert!((g.values[j] - 2.0 * (PI * x).cos().powi(2)).abs() < 1e-8);
        }
    }

    #[test]
    fn gradient_predicts_directional_derivative() {
        let q = Potential::from_fourier(&[2.0], &[]).unwrap();
        let g = eigenvalue_gradient(&q, BoundaryCondition::DD, 1).unwrap();
        let predicted = project(&g, 1)[0];
        let mu = |eps: f64| {
            let p = Potential::from_fourier(&[2.0 + eps], &[]).unwrap();
            SpectralSolver::new(&p, &IntegratorConfig::default()).unwrap().eigenvalue(BoundaryCondition::DD, 1).unwrap()
        };
        let m0 = mu(0.0);
        let err = |eps: f64| (mu(eps) - m0 - eps * predicted).abs();
        let (e1, e2) = (err(1e-3), err(5e-4));
        // second-order remainder: halving ε quarters the error
        assert!((e1 / e2 - 4.0).abs() < 0.2, "{e1:e} {e2:e}");
    }

    #[test]
    fn analytic_and_finite_difference_jacobians_agree() {
        let q = Potential::from_fourier(&[0.4, -0.2, 0.1], &[0.3, 0.2]).unwrap();
        let mut cfg = SolverConfig::new(4);
        let a = gap_jacobian(&q, &cfg).unwrap();
        cfg.jacobian = JacobianMode::FiniteDifference;
        let f = gap_jacobian(&q, &cfg).unwrap();
        let rel = (&a - &f).norm() / f.norm();
        assert!(rel < 1e-4, "relative difference {rel:e}");
    }

    #[test]
    fn zero_target_gives_zero_potential() {
        let target = SpectralVector { kind: MapKind::GapF, levels: 4, entries: Entries::Scalars(vec![0.0; 8]) };
        let r = reconstruct_from_gap_map(&target, &SolverConfig::new(4)).unwrap();
        assert!(r.converged && r.iterations <= 1);
        assert!(r.potential.l2_norm() < 1e-8);
    }

    #[test]
    fn round_trip_of_cosine_potential() {
        let q = Potential::from_fourier(&[2.0], &[]).unwrap();
        let target = gap_map(&spectrum_table(&q, 12).unwrap());
        let r = reconstruct_from_gap_map(&target, &SolverConfig::new(12)).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.potential.distance(&q) < 1e-4, "distance {}", r.potential.distance(&q));
    }

    #[test]
    fn rejects_wrong_kind_and_length() {
        let v = SpectralVector { kind: MapKind::P, levels: 1, entries: Entries::Pairs(vec![[0.0, 0.0]]) };
        assert!(matches!(reconstruct_from_gap_map(&v, &SolverConfig::new(1)), Err(Error::Usage(_))));
        let v = SpectralVector { kind: MapKind::GapF, levels: 1, entries: Entries::Scalars(vec![0.0; 2]) };
        assert!(matches!(reconstruct_from_gap_map(&v, &SolverConfig::new(3)), Err(Error::Usage(_))));
        assert!(matches!(SolverConfig { residual_tol: 0.0, ..SolverConfig::new(2) }.validate(), Err(Error::Config(_))));
    }
}
