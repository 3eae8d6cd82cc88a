//! Fundamental solutions `φ`, `θ` of `-f'' + q f = λ f`.
//!
//! Integration uses the fourth-order Magnus method with two Gauss nodes per
//! step. Each step is the exact exponential of a traceless 2×2 matrix, so the
//! transfer matrix stays unimodular to rounding and the error constant does
//! not grow with `λ`. Oscillation counts come from sign changes of the
//! solutions at step boundaries; the step is refined whenever a step could
//! rotate the Prüfer angle by more than a twelfth of a turn.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::potential::{ExtendedPotential, Potential};

/// Integrator settings shared by every shooting computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Magnus steps per unit length at moderate `λ`.
    pub steps: usize,
    /// Smallest accepted value of `steps`.
    pub min_steps: usize,
    /// Largest `|λ|` the solver accepts.
    pub lambda_max: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { steps: 2048, min_steps: 32, lambda_max: 1.0e6 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < self.min_steps {
            return Err(Error::Config(format!(
                "{} integration steps is below the minimum of {}",
                self.steps, self.min_steps
            )));
        }
        if !(self.lambda_max > 0.0) {
            return Err(Error::Config("lambda_max must be positive".into()));
        }
        Ok(())
    }
}

/// Which solution starts the shooting: `φ` (Dirichlet at 0) or `θ` (Neumann at 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    Dirichlet,
    Neumann,
}

/// Boundary-condition tag: first letter at `x = 0`, second at the right end.
/// `D` is `f = 0`, `N` is `f' = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryCondition {
    DD,
    NN,
    DN,
    ND,
}

impl BoundaryCondition {
    pub const ALL: [BoundaryCondition; 4] = [Self::DD, Self::NN, Self::DN, Self::ND];

    pub fn start(self) -> Start {
        match self {
            Self::DD | Self::DN => Start::Dirichlet,
            Self::NN | Self::ND => Start::Neumann,
        }
    }

    pub fn right_dirichlet(self) -> bool {
        matches!(self, Self::DD | Self::ND)
    }

    /// Index of the lowest eigenvalue: `ν₀` for `NN`, otherwise 1.
    pub fn first_index(self) -> usize {
        if self == Self::NN { 0 } else { 1 }
    }

    /// Eigenvalue of the tagged problem for `q = 0` on `[0, L]`.
    pub fn free_eigenvalue(self, n: usize, length: f64) -> f64 {
        let k = match self {
            Self::DD | Self::NN => n as f64,
            Self::DN | Self::ND => n as f64 - 0.5,
        };
        (k * PI / length).powi(2)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::DD => "DD",
            Self::NN => "NN",
            Self::DN => "DN",
            Self::ND => "ND",
        }
    }
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DD" => Ok(Self::DD),
            "NN" => Ok(Self::NN),
            "DN" => Ok(Self::DN),
            "ND" => Ok(Self::ND),
            _ => Err(Error::Parse(format!("unknown boundary condition {s:?}"))),
        }
    }
}

/// `(θ, θ', φ, φ')` at the right endpoint for one value of `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalValues {
    pub lambda: f64,
    pub theta1: f64,
    pub dtheta1: f64,
    pub phi1: f64,
    pub dphi1: f64,
    /// Zeros of `φ(·, λ)` in `(0, L]`.
    pub oscillation_count: usize,
}

impl FundamentalValues {
    pub fn wronskian(&self) -> f64 {
        self.theta1 * self.dphi1 - self.dtheta1 * self.phi1
    }

    /// `Δ(λ) = ½(φ'(1, λ) + θ(1, λ))`.
    pub fn discriminant(&self) -> f64 {
        0.5 * (self.dphi1 + self.theta1)
    }

    /// `Δ² - 1` written as `¼(θ - φ')² + φ θ'`, which uses the unit
    /// Wronskian and avoids cancelling near a double root of `Δ² = 1`.
    pub fn floquet_excess(&self) -> f64 {
        let d = 0.5 * (self.theta1 - self.dphi1);
        d * d + self.phi1 * self.dtheta1
    }
}

/// Continuous Prüfer angles of `φ` and `θ` at the right endpoint.
///
/// Both start in `[0, π)` and increase by `π` at every zero, so
/// `ψ_φ = nπ` at `μ_n`, `ψ_φ = (n - ½)π` at `τ_n`, `ψ_θ = (n + ½)π` at
/// `ν_n` and `ψ_θ = nπ` at `ϱ_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruferAngles {
    pub phi: f64,
    pub theta: f64,
}

/// Uniform samples of a real function on `[0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
    pub step: f64,
    pub normalized: bool,
}

impl GridFunction {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.step * (self.values.len().saturating_sub(1)) as f64
    }

    /// Trapezoid approximation of `∫ f`.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.step)
    }

    /// Trapezoid approximation of `∫ f²`.
    pub fn integral_sq(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        trapezoid(&sq, self.step)
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    pub fn squared(&self) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|v| v * v).collect(),
            step: self.step,
            normalized: false,
        }
    }

    /// Checks the declared normalization flag against quadrature.
    pub fn check_normalization(&self, tol: f64) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("grid function has non-finite samples".into()));
        }
        if self.normalized {
            let s = self.integral_sq();
            if (s - 1.0).abs() > tol {
                return Err(Error::Degenerate(format!("declared normalized but ∫f² = {s}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Composite Simpson rule; an odd number of intervals ends with the
/// three-eighths rule on the last three.
pub(crate) fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 3 {
        return trapezoid(values, h);
    }
    let intervals = n - 1;
    let (even_end, tail) = if intervals.is_multiple_of(2) {
        (intervals, 0.0)
    } else {
        let k = intervals - 3;
        (k, 3.0 * h / 8.0 * (values[k] + 3.0 * values[k + 1] + 3.0 * values[k + 2] + values[k + 3]))
    };
    if even_end == 0 {
        return tail;
    }
    let mut acc = values[0] + values[even_end];
    for (j, v) in values.iter().enumerate().take(even_end).skip(1) {
        acc += if j % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0 + tail
}

#[derive(Debug, Clone)]
enum Profile {
    Base(Potential),
    Extended(ExtendedPotential),
}

impl Profile {
    fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Base(q) => q.value(x),
            Profile::Extended(e) => e.value(x),
        }
    }

    fn length(&self) -> f64 {
        match self {
            Profile::Base(_) => 1.0,
            Profile::Extended(_) => 2.0,
        }
    }
}

/// Per-step data of the Magnus scheme: mean of `q` over the Gauss nodes and
/// the commutator weight `√3 h² (q₁ - q₂) / 12`.
#[derive(Debug, Clone, Copy)]
struct MagnusStep {
    q_mean: f64,
    skew: f64,
}

const RESCALE: f64 = 1.0e150;
const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3 / 6

/// Precomputed shooting data for one potential on `[0, L]`.
#[derive(Debug, Clone)]
pub struct Shooter {
    profile: Profile,
    config: IntegratorConfig,
    steps: usize,
    h: f64,
    nodes: Vec<MagnusStep>,
    q_min: f64,
}

struct Propagation {
    /// Columns `(θ, θ')` and `(φ, φ')`.
    y: [[f64; 2]; 2],
    zeros: [usize; 2],
    log_scale: f64,
}

impl Shooter {
    /// Shooter for `q` on `[0, 1]`.
    pub fn new(q: &Potential, config: &IntegratorConfig) -> Result<Self> {
        Self::build(Profile::Base(q.clone()), config)
    }

    /// Shooter for the even extension on `[0, 2]`.
    pub fn on_extension(q: &ExtendedPotential, config: &IntegratorConfig) -> Result<Self> {
        Self::build(Profile::Extended(q.clone()), config)
    }

    fn build(profile: Profile, config: &IntegratorConfig) -> Result<Self> {
        config.validate()?;
        let steps = (config.steps as f64 * profile.length()).round() as usize;
        Ok(Self::with_steps(profile, *config, steps))
    }

    fn with_steps(profile: Profile, config: IntegratorConfig, steps: usize) -> Self {
        let len = profile.length();
        let h = len / steps as f64;
        let mut q_min = f64::INFINITY;
        let nodes = (0..steps)
            .map(|j| {
                let mid = (j as f64 + 0.5) * h;
                let q1 = profile.value(mid - GAUSS_OFFSET * h);
                let q2 = profile.value(mid + GAUSS_OFFSET * h);
                q_min = q_min.min(q1).min(q2);
                MagnusStep { q_mean: 0.5 * (q1 + q2), skew: 3f64.sqrt() / 12.0 * h * h * (q1 - q2) }
            })
            .collect();
        Self { profile, config, steps, h, nodes, q_min }
    }

    pub fn length(&self) -> f64 {
        self.profile.length()
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Potential value used by the integrator.
    pub fn potential_value(&self, x: f64) -> f64 {
        self.profile.value(x)
    }

    fn check_lambda(&self, lambda: f64) -> Result<()> {
        if !lambda.is_finite() {
            return Err(Error::Range(format!("non-finite λ = {lambda}")));
        }
        if lambda.abs() > self.config.lambda_max {
            return Err(Error::Range(format!(
                "|λ| = {:.6e} exceeds lambda_max = {:.6e}",
                lambda.abs(),
                self.config.lambda_max
            )));
        }
        Ok(())
    }

    /// Steps needed to keep at least twelve steps per local wavelength.
    fn required_steps(&self, lambda: f64) -> usize {
        let k = (lambda - self.q_min).max(0.0).sqrt();
        let per_length = 12.0 * k / (2.0 * PI);
        (per_length * self.length()).ceil() as usize
    }

    fn refined_for(&self, lambda: f64) -> Option<Shooter> {
        let need = self.required_steps(lambda);
        if need <= self.steps {
            return None;
        }
        let mut steps = self.steps;
        while steps < need {
            steps *= 2;
        }
        Some(Self::with_steps(self.profile.clone(), self.config, steps))
    }

    #[inline]
    fn step_matrix(&self, node: &MagnusStep, lambda: f64) -> [[f64; 2]; 2] {
        let h = self.h;
        let c = node.q_mean - lambda;
        let a = node.skew;
        let omega = a * a + h * h * c;
        let (cc, ss) = if omega > 1e-8 {
            let r = omega.sqrt();
            (r.cosh(), r.sinh() / r)
        } else if omega < -1e-8 {
            let r = (-omega).sqrt();
            let (s, co) = r.sin_cos();
            (co, s / r)
        } else {
            (1.0 + omega / 2.0 + omega * omega / 24.0, 1.0 + omega / 6.0 + omega * omega / 120.0)
        };
        [[cc + ss * a, ss * h], [ss * h * c, cc - ss * a]]
    }

    fn propagate(&self, lambda: f64) -> Propagation {
        if let Some(fine) = self.refined_for(lambda) {
            return fine.propagate(lambda);
        }
        // columns: θ = (1, 0), φ = (0, 1)
        let mut y = [[1.0, 0.0], [0.0, 1.0]];
        let mut sign = [1.0f64, 1.0f64];
        let mut zeros = [0usize; 2];
        let mut log_scale = 0.0;
        for node in &self.nodes {
            let m = self.step_matrix(node, lambda);
            for col in &mut y {
                let f = m[0][0] * col[0] + m[0][1] * col[1];
                let g = m[1][0] * col[0] + m[1][1] * col[1];
                col[0] = f;
                col[1] = g;
            }
            for i in 0..2 {
                let f = y[i][0];
                if f != 0.0 && f.signum() != sign[i] {
                    sign[i] = f.signum();
                    zeros[i] += 1;
                }
            }
            let big = y.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if big > RESCALE {
                for v in y.iter_mut().flatten() {
                    *v /= big;
                }
                log_scale += big.ln();
            }
        }
        Propagation { y, zeros, log_scale }
    }

    /// Values of both fundamental solutions at `x = L`.
    pub fn fundamental(&self, lambda: f64) -> Result<FundamentalValues> {
        self.check_lambda(lambda)?;
        let p = self.propagate(lambda);
        let scale = p.log_scale.exp();
        if !scale.is_finite() || p.log_scale > 700.0 {
            return Err(Error::Range(format!("fundamental solutions overflow at λ = {lambda:.6e}")));
        }
        let [theta, phi] = p.y;
        let fv = FundamentalValues {
            lambda,
            theta1: theta[0] * scale,
            dtheta1: theta[1] * scale,
            phi1: phi[0] * scale,
            dphi1: phi[1] * scale,
            oscillation_count: p.zeros[1] + usize::from(phi[0] == 0.0),
        };
        if [fv.theta1, fv.dtheta1, fv.phi1, fv.dphi1].iter().any(|v| !v.is_finite()) {
            return Err(Error::Range(format!("fundamental solutions overflow at λ = {lambda:.6e}")));
        }
        Ok(fv)
    }

    /// Prüfer angles at `x = L`; finite for every `λ` in range since only
    /// ratios are used.
    pub fn angles(&self, lambda: f64) -> Result<PruferAngles> {
        self.check_lambda(lambda)?;
        let p = self.propagate(lambda);
        let [theta, phi] = p.y;
        Ok(PruferAngles { phi: prufer(p.zeros[1], phi), theta: prufer(p.zeros[0], theta) })
    }

    /// Samples of `φ(·, λ)` or `θ(·, λ)` at the step nodes, plus the derivative
    /// at the right endpoint.
    pub fn solution(&self, lambda: f64, start: Start) -> Result<(GridFunction, f64)> {
        self.check_lambda(lambda)?;
        if let Some(fine) = self.refined_for(lambda) {
            return fine.solution(lambda, start);
        }
        let mut v = match start {
            Start::Dirichlet => [0.0, 1.0],
            Start::Neumann => [1.0, 0.0],
        };
        let mut values = Vec::with_capacity(self.steps + 1);
        values.push(v[0]);
        for node in &self.nodes {
            let m = self.step_matrix(node, lambda);
            v = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
            values.push(v[0]);
        }
        if values.iter().any(|x| !x.is_finite()) || !v[1].is_finite() {
            return Err(Error::Range(format!("solution overflows at λ = {lambda:.6e}")));
        }
        Ok((GridFunction { values, step: self.h, normalized: false }, v[1]))
    }
}

/// `ψ = Zπ + arg`, with `arg ∈ (0, π]` fixed by the sign convention that the
/// solution has sign `(-1)^Z` after `Z` zeros.
fn prufer(zeros: usize, col: [f64; 2]) -> f64 {
    let s = if zeros.is_multiple_of(2) { 1.0 } else { -1.0 };
    let (y, dy) = (s * col[0], s * col[1]);
    let frac = if y == 0.0 {
        if dy < 0.0 { PI } else { 0.0 }
    } else {
        y.atan2(dy)
    };
    zeros as f64 * PI + frac
}

/// Unperturbed Prüfer targets: the angle at which the `n`-th eigenvalue of
/// the tagged problem is attained.
pub(crate) fn target_angle(start: Start, right_dirichlet: bool, n: usize) -> f64 {
    let n = n as f64;
    match (start, right_dirichlet) {
        (Start::Dirichlet, true) => n * PI,
        (Start::Dirichlet, false) => (n - 0.5) * PI,
        (Start::Neumann, true) => n * PI,
        (Start::Neumann, false) => n * PI + FRAC_PI_2,
    }
}

/// Normalized eigenfunction of the tagged problem at `eigenvalue`.
///
/// The solution is `φ(·, λ)` when the left condition is Dirichlet and
/// `θ(·, λ)` otherwise, scaled to `∫ y² = 1` by the trapezoid rule, which
/// keeps the signs `y'(0) > 0` resp. `y(0) > 0`.
pub fn eigenfunction_with(shooter: &Shooter, bc: BoundaryCondition, eigenvalue: f64) -> Result<GridFunction> {
    let (mut grid, dy_end) = shooter.solution(eigenvalue, bc.start())?;
    let peak = grid.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::Degenerate("solution vanishes identically".into()));
    }
    let residual = if bc.right_dirichlet() {
        grid.values.last().copied().unwrap_or(0.0).abs() / peak
    } else {
        dy_end.abs() / (peak * (1.0 + eigenvalue.abs()).sqrt())
    };
    if residual > 1e-6 {
        return Err(Error::NotAnEigenvalue(eigenvalue, residual));
    }
    let norm = grid.integral_sq().sqrt();
    for v in &mut grid.values {
        *v /= norm;
    }
    grid.normalized = true;
    Ok(grid)
}

/// [`eigenfunction_with`] on `[0, 1]` with default settings.
pub fn eigenfunction(q: &Potential, bc: BoundaryCondition, eigenvalue: f64) -> Result<GridFunction> {
    eigenfunction_with(&Shooter::new(q, &IntegratorConfig::default())?, bc, eigenvalue)
}

/// Convenience wrapper building a one-off shooter with default settings.
pub fn fundamental_at_one(q: &Potential, lambda: f64) -> Result<FundamentalValues> {
    Shooter::new(q, &IntegratorConfig::default())?.fundamental(lambda)
}

/// `Δ(λ)` with default settings.
pub fn discriminant(q: &Potential, lambda: f64) -> Result<f64> {
    Ok(fundamental_at_one(q, lambda)?.discriminant())
}
