//! Zero-mean potentials on `[0, 1]` in a real Fourier basis.
//!
//! A potential is stored as `q(x) = Σ_{k=1..M} a_k cos(2πkx) + b_k sin(2πkx)`.
//! The constant mode is absent, so `∫₀¹ q = 0` holds structurally. Grid
//! samples are derived on demand and cached at the default resolution.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};

/// Default number of samples used for quadrature of `∫ q²`.
pub const DEFAULT_GRID: usize = 4096;

#[derive(Debug, Clone)]
pub struct Potential {
    cos: Vec<f64>,
    sin: Vec<f64>,
    grid: OnceLock<Vec<f64>>,
}

impl PartialEq for Potential {
    fn eq(&self, other: &Self) -> bool {
        let m = self.modes().max(other.modes());
        (1..=m).all(|k| self.cos_coeff(k) == other.cos_coeff(k) && self.sin_coeff(k) == other.sin_coeff(k))
    }
}

impl Default for Potential {
    fn default() -> Self {
        Self::zero()
    }
}

impl Potential {
    pub fn zero() -> Self {
        Self { cos: Vec::new(), sin: Vec::new(), grid: OnceLock::new() }
    }

    /// Builds a potential from cosine and sine coefficients of modes `1..=M`.
    /// The shorter sequence is padded with zeros.
    pub fn from_fourier(cos: &[f64], sin: &[f64]) -> Result<Self> {
        if let Some(index) = cos.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoefficient { which: "cos", index });
        }
        if let Some(index) = sin.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoefficient { which: "sin", index });
        }
        let m = cos.len().max(sin.len());
        let mut a = cos.to_vec();
        let mut b = sin.to_vec();
        a.resize(m, 0.0);
        b.resize(m, 0.0);
        Ok(Self { cos: a, sin: b, grid: OnceLock::new() })
    }

    /// Unpacks `[a_1..a_M, b_1..b_M]`, the layout used by the inverse solver.
    pub fn from_coefficients(coeffs: &[f64]) -> Result<Self> {
        if !coeffs.len().is_multiple_of(2) {
            return Err(Error::Usage(format!("coefficient vector of odd length {}", coeffs.len())));
        }
        let m = coeffs.len() / 2;
        Self::from_fourier(&coeffs[..m], &coeffs[m..])
    }

    /// Packs the first `modes` modes as `[a_1..a_modes, b_1..b_modes]`.
    pub fn coefficients(&self, modes: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * modes);
        out.extend((1..=modes).map(|k| self.cos_coeff(k)));
        out.extend((1..=modes).map(|k| self.sin_coeff(k)));
        out
    }

    /// Number of stored modes `M`.
    pub fn modes(&self) -> usize {
        self.cos.len()
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    /// Coefficient `a_k` (1-based); zero beyond the stored modes.
    pub fn cos_coeff(&self, k: usize) -> f64 {
        if k == 0 { 0.0 } else { self.cos.get(k - 1).copied().unwrap_or(0.0) }
    }

    pub fn sin_coeff(&self, k: usize) -> f64 {
        if k == 0 { 0.0 } else { self.sin.get(k - 1).copied().unwrap_or(0.0) }
    }

    pub fn is_zero(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|&c| c == 0.0)
    }

    /// True when every sine coefficient vanishes, i.e. `q(1-x) = q(x)`.
    pub fn is_symmetric(&self) -> bool {
        self.sin.iter().all(|&b| b == 0.0)
    }

    /// `Σ |a_k| + |b_k|`, an upper bound for `sup |q|`.
    pub fn sup_bound(&self) -> f64 {
        self.cos.iter().chain(&self.sin).map(|c| c.abs()).sum()
    }

    /// Evaluates `q(x)` for `x ∈ [0, 1]`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain { x, len: 1.0 });
        }
        Ok(self.value(x))
    }

    /// Evaluates the 1-periodic extension at any real `x`.
    pub fn value(&self, x: f64) -> f64 {
        if self.cos.is_empty() {
            return 0.0;
        }
        let (s1, c1) = (2.0 * PI * x).sin_cos();
        let (mut s, mut c) = (s1, c1);
        let mut acc = 0.0;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            if k > 0 {
                let next_c = c * c1 - s * s1;
                s = s * c1 + c * s1;
                c = next_c;
                // resync every few modes to stop the rotation drifting
                if k % 16 == 0 {
                    let (ss, cc) = (2.0 * PI * (k + 1) as f64 * x).sin_cos();
                    s = ss;
                    c = cc;
                }
            }
            acc += a * c + b * s;
        }
        acc
    }

    /// `‖q‖ = (½ Σ a_k² + b_k²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        0.5 * self.cos.iter().chain(&self.sin).map(|c| c * c).sum::<f64>()
    }

    /// Uniform samples `q(j/n)`, `j = 0..n-1`, cached for `n = DEFAULT_GRID`.
    pub fn grid(&self) -> &[f64] {
        self.grid.get_or_init(|| self.samples(DEFAULT_GRID))
    }

    pub fn samples(&self, n: usize) -> Vec<f64> {
        (0..n).map(|j| self.value(j as f64 / n as f64)).collect()
    }

    /// Trapezoid rule for `∫₀¹ q²` on the periodic extension.
    pub fn quadrature_norm_sq(&self) -> f64 {
        let g = self.grid();
        g.iter().map(|v| v * v).sum::<f64>() / g.len() as f64
    }

    /// `x ↦ q(1 - x)`: cosine terms are kept and sine terms change sign.
    pub fn reflect(&self) -> Self {
        Self { cos: self.cos.clone(), sin: self.sin.iter().map(|b| -b).collect(), grid: OnceLock::new() }
    }

    pub fn even_extension(&self) -> ExtendedPotential {
        ExtendedPotential { base: self.clone() }
    }

    /// `‖self - other‖` computed from coefficients.
    pub fn distance(&self, other: &Self) -> f64 {
        let m = self.modes().max(other.modes());
        let s: f64 = (1..=m)
            .map(|k| {
                let da = self.cos_coeff(k) - other.cos_coeff(k);
                let db = self.sin_coeff(k) - other.sin_coeff(k);
                da * da + db * db
            })
            .sum();
        (0.5 * s).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            cos: self.cos.iter().map(|a| a * factor).collect(),
            sin: self.sin.iter().map(|b| b * factor).collect(),
            grid: OnceLock::new(),
        }
    }

    /// Projects uniform samples onto `modes` Fourier modes.
    ///
    /// Samples are taken at the cell midpoints `x_j = (j + ½)/n`, so neither
    /// endpoint is included. The mean is discarded. Returns the potential and
    /// the L² norm of the discarded tail.
    pub fn from_grid(values: &[f64], modes: usize) -> Result<(Self, f64)> {
        let n = values.len();
        if n == 0 {
            return Err(Error::Parse("empty grid".into()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoefficient { which: "grid", index });
        }
        if 2 * modes >= n {
            return Err(Error::Config(format!("{modes} modes cannot be resolved from {n} samples")));
        }
        let xs: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect();
        let mut cos = Vec::with_capacity(modes);
        let mut sin = Vec::with_capacity(modes);
        for k in 1..=modes {
            let w = 2.0 * PI * k as f64;
            let (mut a, mut b) = (0.0, 0.0);
            for (x, v) in xs.iter().zip(values) {
                let (s, c) = (w * x).sin_cos();
                a += v * c;
                b += v * s;
            }
            cos.push(2.0 * a / n as f64);
            sin.push(2.0 * b / n as f64);
        }
        let q = Self::from_fourier(&cos, &sin)?;
        let mean = values.iter().sum::<f64>() / n as f64;
        let total: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let tail = (total - q.norm_sq()).max(0.0).sqrt();
        Ok((q, tail))
    }

    /// Random potential with `modes` modes and norm drawn uniformly from
    /// `[max_norm / 4, max_norm]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, modes: usize, max_norm: f64) -> Self {
        if modes == 0 || max_norm == 0.0 {
            return Self::zero();
        }
        let cos: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sin: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q = Self::from_fourier(&cos, &sin).expect("finite by construction");
        let target = rng.random_range(0.25..=1.0) * max_norm;
        let norm = q.l2_norm();
        if norm == 0.0 { q } else { q.scaled(target / norm) }
    }

    /// Random potential with vanishing sine part.
    pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, modes: usize, max_norm: f64) -> Self {
        let q = Self::random(rng, modes, max_norm);
        let norm = q.l2_norm();
        let sym = Self::from_fourier(q.cos_coeffs(), &[]).expect("finite");
        let sym_norm = sym.l2_norm();
        if sym_norm == 0.0 { sym } else { sym.scaled(norm / sym_norm) }
    }
}

/// Even extension of a potential onto `[0, 2]`: `q̃(x) = q(2 - x)` for `x > 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPotential {
    base: Potential,
}

impl ExtendedPotential {
    pub fn base(&self) -> &Potential {
        &self.base
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(0.0..=2.0).contains(&x) {
            return Err(Error::Domain { x, len: 2.0 });
        }
        Ok(self.value(x))
    }

    /// Value of the 2-periodic extension.
    pub fn value(&self, x: f64) -> f64 {
        let t = x.rem_euclid(2.0);
        if t <= 1.0 { self.base.value(t) } else { self.base.value(2.0 - t) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(cos: &[f64], sin: &[f64]) -> Potential {
        Potential::from_fourier(cos, sin).unwrap()
    }

    #[test]
    fn parseval_examples() {
        assert_eq!(q(&[], &[]).l2_norm(), 0.0);
        assert!((q(&[1.0], &[]).norm_sq() - 0.5).abs() < 1e-15);
        assert!((q(&[0.0, 3.0], &[4.0]).norm_sq() - 12.5).abs() < 1e-12);
        assert!((q(&[1.0], &[]).l2_norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((q(&[2.0], &[0.0, 2.0]).l2_norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn evaluation() {
        assert_eq!(Potential::zero().evaluate(0.3).unwrap(), 0.0);
        assert!((q(&[1.0], &[]).evaluate(0.5).unwrap() + 1.0).abs() < 1e-15);
        assert!((q(&[], &[1.0]).evaluate(0.25).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(q(&[1.0], &[]).evaluate(1.5), Err(Error::Domain { .. })));
        assert!(matches!(q(&[1.0], &[]).evaluate(-0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn high_modes_evaluate_accurately() {
        let mut cos = vec![0.0; 40];
        cos[36] = 1.0;
        let p = q(&cos, &[]);
        for &x in &[0.013, 0.377, 0.9] {
            let exact = (2.0 * PI * 37.0 * x).cos();
            assert!((p.value(x) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_rejected_with_index() {
        match Potential::from_fourier(&[1.0, f64::NAN], &[]) {
            Err(Error::NonFiniteCoefficient { which: "cos", index: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match Potential::from_fourier(&[], &[0.0, 0.0, f64::INFINITY]) {
            Err(Error::NonFiniteCoefficient { which: "sin", index: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reflection_examples() {
        assert_eq!(q(&[1.0], &[]).reflect(), q(&[1.0], &[]));
        assert_eq!(q(&[], &[1.0]).reflect(), q(&[], &[-1.0]));
    }

    #[test]
    fn even_extension_examples() {
        let zero = Potential::zero().even_extension();
        assert_eq!(zero.evaluate(1.7).unwrap(), 0.0);
        let s = q(&[], &[1.0]).even_extension();
        assert!((s.evaluate(1.25).unwrap() + 1.0).abs() < 1e-15);
        let c = q(&[1.0], &[]).even_extension();
        assert!((c.evaluate(1.5).unwrap() + 1.0).abs() < 1e-15);
        assert!(c.evaluate(2.5).is_err());
    }

    #[test]
    fn grid_projection_recovers_modes() {
        let p = q(&[0.5, -1.0], &[0.25, 0.0, 2.0]);
        let n = 256;
        let values: Vec<f64> = (0..n).map(|j| 3.0 + p.value((j as f64 + 0.5) / n as f64)).collect();
        let (r, tail) = Potential::from_grid(&values, 8).unwrap();
        assert!(r.distance(&p) < 1e-12);
        assert!(tail < 1e-6);
        let (r2, tail2) = Potential::from_grid(&values, 2).unwrap();
        assert!((tail2 - 2.0 / 2f64.sqrt()).abs() < 1e-9);
        assert!((r2.cos_coeff(2) + 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn parseval_matches_quadrature(cos in prop::collection::vec(-3.0f64..3.0, 0..12),
                                       sin in prop::collection::vec(-3.0f64..3.0, 0..12)) {
            let p = q(&cos, &sin);
            let n2 = p.norm_sq();
            prop_assert!((n2 - p.quadrature_norm_sq()).abs() < 1e-10 * n2.max(1.0));
        }

        #[test]
        fn reflect_is_isometric_involution(cos in prop::collection::vec(-3.0f64..3.0, 0..8),
                                           sin in prop::collection::vec(-3.0f64..3.0, 0..8),
                                           x in 0.0f64..1.0) {
            let p = q(&cos, &sin);
            let r = p.reflect();
            prop_assert_eq!(&r.reflect(), &p);
            prop_assert_eq!(r.l2_norm(), p.l2_norm());
            prop_assert!((r.value(x) - p.value(1.0 - x)).abs() < 1e-10);
        }

        #[test]
        fn even_extension_is_symmetric_about_one(cos in prop::collection::vec(-3.0f64..3.0, 0..8),
                                                 sin in prop::collection::vec(-3.0f64..3.0, 0..8),
                                                 t in 0.0f64..1.0) {
            let e = q(&cos, &sin).even_extension();
            prop_assert!((e.value(1.0 + t) - e.value(1.0 - t)).abs() < 1e-12);
        }
    }
}
