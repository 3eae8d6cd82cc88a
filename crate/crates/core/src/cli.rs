//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 malformed input,
//! 3 solver failure.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eigensolve::SpectralSolver;
use crate::equivalence::{self, SignSequence, Theorem};
use crate::error::{Error, Result};
use crate::fundamental::{BoundaryCondition, IntegratorConfig};
use crate::inverse::{reconstruct_from_gap_map, JacobianMode, SolverConfig};
use crate::io::{fmt_f64, potential_json, read_potential, spectrum_csv};
use crate::maps::{self, MapVariant, SpectralVector};
use crate::oracle::{self, OracleConfig, OracleTag};
use crate::potential::Potential;

/// Largest truncation level accepted on the command line.
pub const MAX_LEVELS: usize = 256;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

const FORMATS: &str = "\
FILE FORMATS
  Potential JSON (zero-mean q on [0,1]):
    {\"fourier\": {\"cos\": [a1, a2, ...], \"sin\": [b1, b2, ...]}}
        q(x) = sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x)
    {\"grid\": {\"values\": [v0, ..., v(n-1)]}}
        samples at x_j = (j + 1/2)/n; projected onto --grid-modes modes, mean removed
  Spectral vector JSON:
    {\"kind\": \"gap_f\" | \"p\" | \"frak_p\" | \"h\" | \"frak_h\" | \"pair_mu_tau\" | ...,
     \"N\": n, \"entries\": [x1, x2, ...] or [[a1, b1], [a2, b2], ...]}
    gap_f holds 2N scalars (rho_n - tau_n, nu_n - mu_n); the others hold N pairs.
  Spectrum CSV:
    n,mu,nu,tau,rho,lam_minus,lam_plus,lam_star,h_s,gh_s
    row 0 carries nu_0 and lam_0^+ only; values printed with 17 significant digits.
  Report JSON: {\"settings\": {...}, ...} with per-identity residual, tolerance and pass flag.

EXIT CODES
  0 success, 1 verification failure, 2 malformed input, 3 solver failure

ENVIRONMENT
  STURM_STEPS, STURM_LAMBDA_MAX, STURM_RESIDUAL_TOL, STURM_MAX_ITER override the
  corresponding defaults.";

#[derive(Debug, Parser)]
#[command(name = "sturm", version, about = "Spectral toolkit for periodic Sturm-Liouville problems", after_long_help = FORMATS)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Boundary, periodic and norming data as CSV, plus map vectors as JSON.
    Spectrum(SpectrumArgs),
    /// Sweep of the discriminant Δ(λ) as CSV.
    Discriminant(DiscriminantArgs),
    /// Apply U_σ to a potential.
    Involve(InvolveArgs),
    /// Recover a potential from a gap_f spectral vector.
    Reconstruct(ReconstructArgs),
    /// Run an identity suite and write a report.
    Verify(VerifyArgs),
    /// Compare shooting eigenvalues with the finite-difference oracle.
    OracleCompare(OracleArgs),
}

#[derive(Debug, Args)]
pub struct PotentialSource {
    /// Potential JSON file.
    #[arg(long, required_unless_present = "seed", conflicts_with = "seed")]
    pub potential: Option<PathBuf>,
    /// Draw a random potential from this seed instead.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fourier modes of a random potential.
    #[arg(long, default_value_t = 6)]
    pub modes: usize,
    /// Upper bound on the norm of a random potential.
    #[arg(long, default_value_t = 1.0)]
    pub max_norm: f64,
    /// Random potential with cosine terms only.
    #[arg(long)]
    pub symmetric: bool,
    /// Modes kept when projecting grid input.
    #[arg(long, default_value_t = 32)]
    pub grid_modes: usize,
}

#[derive(Debug, Args)]
pub struct IntegratorArgs {
    /// Integration steps per unit length.
    #[arg(long, env = "STURM_STEPS", default_value_t = 2048)]
    pub steps: usize,
    /// Largest |λ| accepted by the integrator.
    #[arg(long, env = "STURM_LAMBDA_MAX", default_value_t = 1.0e6)]
    pub lambda_max: f64,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Newton residual tolerance (ℓ² norm of the gap-map mismatch).
    #[arg(long, env = "STURM_RESIDUAL_TOL", default_value_t = 1e-8)]
    pub residual_tol: f64,
    /// Newton iteration cap.
    #[arg(long, env = "STURM_MAX_ITER", default_value_t = 60)]
    pub max_iter: usize,
    /// Jacobian evaluation.
    #[arg(long, value_enum, default_value_t = JacobianArg::Analytic)]
    pub jacobian: JacobianArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum JacobianArg {
    Analytic,
    Fd,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub source: PotentialSource,
    #[arg(long, default_value_t = 32)]
    pub levels: usize,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    /// CSV output (default: stdout).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Map vectors JSON output.
    #[arg(long)]
    pub maps: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiscriminantArgs {
    #[command(flatten)]
    pub source: PotentialSource,
    #[arg(long, allow_negative_numbers = true, default_value_t = -10.0)]
    pub from: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 400.0)]
    pub to: f64,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    /// Sweep CSV output (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of the periodic, Dirichlet, Neumann and mixed eigenvalues inside the sweep.
    #[arg(long)]
    pub markers: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InvolveArgs {
    #[command(flatten)]
    pub source: PotentialSource,
    /// `all-ones`, `odd-ones`, or comma-separated bits.
    #[arg(long)]
    pub sigma: String,
    #[arg(long, default_value_t = 12)]
    pub levels: usize,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Potential JSON output (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Convergence report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// gap_f spectral-vector JSON, or a maps file written by `spectrum --maps`.
    #[arg(long)]
    pub target: PathBuf,
    /// Truncation level (default: the N of the target).
    #[arg(long)]
    pub levels: Option<usize>,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VerifyKind {
    T1,
    T2,
    T3,
    Doubling,
    Smoothness,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub which: VerifyKind,
    #[command(flatten)]
    pub source: PotentialSource,
    /// Sign sequence for t3 (and smoothness, which accepts all-ones only).
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long, default_value_t = 12)]
    pub levels: usize,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Report JSON output (default: stdout; the table then goes to stderr).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub source: PotentialSource,
    #[arg(long, default_value = "DD")]
    pub bc: String,
    #[arg(long, default_value_t = 10)]
    pub levels: usize,
    /// Mesh points per unit length, coarsest first.
    #[arg(long, value_delimiter = ',', default_value = "1024,2048,4096")]
    pub meshes: Vec<usize>,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_)
        | Error::Usage(_)
        | Error::Config(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::NonFiniteCoefficient { .. }
        | Error::Domain { .. } => EXIT_MALFORMED,
        _ => EXIT_SOLVER,
    }
}

#[derive(Debug, Serialize)]
struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    jacobian: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    modes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    potential: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<(f64, f64, usize)>,
}

impl Settings {
    fn from_source(src: &PotentialSource) -> Self {
        Self {
            levels: None,
            steps: None,
            lambda_max: None,
            residual_tol: None,
            max_iter: None,
            jacobian: None,
            sigma: None,
            seed: src.seed,
            modes: src.seed.map(|_| src.modes),
            max_norm: src.seed.map(|_| src.max_norm),
            potential: src.potential.as_ref().map(|p| p.display().to_string()),
            sweep: None,
        }
    }

    fn integrator(mut self, i: &IntegratorArgs) -> Self {
        self.steps = Some(i.steps);
        self.lambda_max = Some(i.lambda_max);
        self
    }

    fn solver(mut self, s: &SolverArgs) -> Self {
        self.residual_tol = Some(s.residual_tol);
        self.max_iter = Some(s.max_iter);
        self.jacobian = Some(match s.jacobian {
            JacobianArg::Analytic => "analytic",
            JacobianArg::Fd => "finite_difference",
        });
        self
    }
}

#[derive(Serialize)]
struct WithSettings<'a, T: Serialize> {
    settings: &'a Settings,
    #[serde(flatten)]
    body: &'a T,
}

fn to_json<T: Serialize>(settings: &Settings, body: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&WithSettings { settings, body })? + "\n")
}

/// One `#` line carrying the settings, for CSV outputs.
fn csv_comment(settings: &Settings) -> Result<String> {
    Ok(format!("# {}\n", serde_json::to_string(settings)?))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn check_levels(levels: usize) -> Result<()> {
    if levels == 0 || levels > MAX_LEVELS {
        return Err(Error::Usage(format!("--levels must lie in 1..={MAX_LEVELS}, got {levels}")));
    }
    Ok(())
}

fn check_distinct(input: Option<&Path>, outputs: &[Option<&Path>]) -> Result<()> {
    let Some(input) = input else { return Ok(()) };
    for out in outputs.iter().flatten() {
        if *out == input {
            return Err(Error::Usage(format!("output {} would overwrite the input", out.display())));
        }
    }
    Ok(())
}

fn load(src: &PotentialSource) -> Result<Potential> {
    if let Some(path) = &src.potential {
        let loaded = read_potential(path, src.grid_modes)?;
        if let Some(tail) = loaded.discarded_tail {
            eprintln!("grid input projected onto {} modes; discarded tail norm {}", src.grid_modes, fmt_f64(tail));
        }
        return Ok(loaded.potential);
    }
    let seed = src.seed.ok_or_else(|| Error::Usage("either --potential or --seed is required".into()))?;
    if !(src.max_norm >= 0.0 && src.max_norm.is_finite()) {
        return Err(Error::Usage("--max-norm must be a non-negative number".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(if src.symmetric {
        Potential::random_symmetric(&mut rng, src.modes, src.max_norm)
    } else {
        Potential::random(&mut rng, src.modes, src.max_norm)
    })
}

fn integrator(i: &IntegratorArgs) -> Result<IntegratorConfig> {
    let cfg = IntegratorConfig { steps: i.steps, lambda_max: i.lambda_max, ..IntegratorConfig::default() };
    cfg.validate()?;
    Ok(cfg)
}

fn solver_config(levels: usize, i: &IntegratorArgs, s: &SolverArgs) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::new(levels);
    cfg.integrator = integrator(i)?;
    cfg.residual_tol = s.residual_tol;
    cfg.max_iter = s.max_iter;
    cfg.jacobian = match s.jacobian {
        JacobianArg::Analytic => JacobianMode::Analytic,
        JacobianArg::Fd => JacobianMode::FiniteDifference,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct MapsOutput {
    gap_f: SpectralVector,
    p: SpectralVector,
    frak_p: SpectralVector,
    h: SpectralVector,
    frak_h: SpectralVector,
    norms: MapNorms,
}

#[derive(Serialize)]
struct MapNorms {
    q: f64,
    gap_f: f64,
    p: f64,
    h: f64,
}

fn spectrum(a: &SpectrumArgs) -> Result<i32> {
    check_levels(a.levels)?;
    check_distinct(a.source.potential.as_deref(), &[a.csv.as_deref(), a.maps.as_deref()])?;
    let q = load(&a.source)?;
    let table = SpectralSolver::new(&q, &integrator(&a.integrator)?)?.table(a.levels)?;
    let mut settings = Settings::from_source(&a.source).integrator(&a.integrator);
    settings.levels = Some(a.levels);
    emit(a.csv.as_deref(), &(csv_comment(&settings)? + &spectrum_csv(&table)))?;
    if let Some(path) = &a.maps {
        let gap_f = maps::gap_map(&table);
        let p = maps::p_map(&table, MapVariant::Dirichlet)?;
        let h = maps::h_map(&table, MapVariant::Dirichlet)?;
        let norms = MapNorms { q: q.l2_norm(), gap_f: maps::map_norm(&gap_f)?, p: maps::map_norm(&p)?, h: maps::map_norm(&h)? };
        let out = MapsOutput {
            gap_f,
            p,
            frak_p: maps::p_map(&table, MapVariant::Neumann)?,
            h,
            frak_h: maps::h_map(&table, MapVariant::Neumann)?,
            norms,
        };
        std::fs::write(path, to_json(&settings, &out)?)?;
    }
    Ok(EXIT_OK)
}

fn discriminant(a: &DiscriminantArgs) -> Result<i32> {
    check_distinct(a.source.potential.as_deref(), &[a.out.as_deref(), a.markers.as_deref()])?;
    if a.out.is_some() && a.out == a.markers {
        return Err(Error::Usage("--out and --markers must differ".into()));
    }
    if !(a.from.is_finite() && a.to.is_finite() && a.from < a.to) || a.points < 2 {
        return Err(Error::Usage("need finite --from < --to and --points ≥ 2".into()));
    }
    let q = load(&a.source)?;
    let solver = SpectralSolver::new(&q, &integrator(&a.integrator)?)?;
    use rayon::prelude::*;
    let rows = (0..a.points)
        .into_par_iter()
        .map(|i| {
            let l = a.from + (a.to - a.from) * i as f64 / (a.points - 1) as f64;
            Ok((l, solver.discriminant(l)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut settings = Settings::from_source(&a.source).integrator(&a.integrator);
    settings.sweep = Some((a.from, a.to, a.points));
    let mut csv = csv_comment(&settings)? + "lambda,delta\n";
    for (l, d) in rows {
        csv.push_str(&format!("{},{}\n", fmt_f64(l), fmt_f64(d)));
    }
    emit(a.out.as_deref(), &csv)?;
    if let Some(path) = &a.markers {
        std::fs::write(path, csv_comment(&settings)? + &markers_csv(&solver, a.from, a.to)?)?;
    }
    Ok(EXIT_OK)
}

/// Every spectral point in `[from, to]`, one row each: `kind,n,lambda`.
fn markers_csv(solver: &SpectralSolver, from: f64, to: f64) -> Result<String> {
    // enough levels to pass `to`: the n-th eigenvalue is near (πn)²
    let levels = ((to.max(0.0).sqrt() / std::f64::consts::PI).ceil() as usize + 2).min(MAX_LEVELS);
    let table = solver.table(levels)?;
    let mut rows: Vec<(&str, usize, f64)> = vec![("lam0_plus", 0, table.lam0_plus), ("nu", 0, table.nu0)];
    for i in 0..levels {
        let n = i + 1;
        rows.extend([
            ("lam_minus", n, table.lam_minus[i]),
            ("lam_plus", n, table.lam_plus[i]),
            ("mu", n, table.mu[i]),
            ("nu", n, table.nu[i]),
            ("tau", n, table.tau[i]),
            ("rho", n, table.rho[i]),
        ]);
    }
    let mut out = String::from("kind,n,lambda\n");
    for (kind, n, l) in rows.into_iter().filter(|r| r.2 >= from && r.2 <= to) {
        out.push_str(&format!("{kind},{n},{}\n", fmt_f64(l)));
    }
    Ok(out)
}

fn involve(a: &InvolveArgs) -> Result<i32> {
    check_levels(a.levels)?;
    check_distinct(a.source.potential.as_deref(), &[a.out.as_deref(), a.report.as_deref()])?;
    let sigma: SignSequence = a.sigma.parse()?;
    let q = load(&a.source)?;
    let cfg = solver_config(a.levels, &a.integrator, &a.solver)?;
    let table = SpectralSolver::new(&q, &cfg.integrator)?.table(a.levels)?;
    let target = equivalence::apply_sign_flip(&sigma, &maps::gap_map(&table))?;
    let r = crate::inverse::reconstruct_with_start(&target, &cfg, Some(&q))?;
    let mut settings = Settings::from_source(&a.source).integrator(&a.integrator).solver(&a.solver);
    settings.levels = Some(a.levels);
    settings.sigma = Some(sigma.to_string());
    if let Some(path) = &a.report {
        std::fs::write(path, to_json(&settings, &r)?)?;
    }
    if !r.converged {
        eprintln!("involution did not converge: residual {} after {} iterations", fmt_f64(r.residual_norm), r.iterations);
        return Ok(EXIT_SOLVER);
    }
    emit(a.out.as_deref(), &potential_json(&r.potential)?)?;
    Ok(EXIT_OK)
}

/// A bare gap_f vector, or the `gap_f` member of a `spectrum --maps` file.
fn read_target(path: &Path) -> Result<SpectralVector> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let v = match value.get("gap_f") {
        Some(inner) => SpectralVector::from_json(&inner.to_string())?,
        None => SpectralVector::from_json(&text)?,
    };
    if v.kind != maps::MapKind::GapF {
        return Err(Error::Usage(format!("reconstruct needs a gap_f vector, got {}", v.kind)));
    }
    Ok(v)
}

fn reconstruct(a: &ReconstructArgs) -> Result<i32> {
    check_distinct(Some(&a.target), &[a.out.as_deref(), a.report.as_deref()])?;
    let target = read_target(&a.target)?;
    let levels = a.levels.unwrap_or(target.levels);
    check_levels(levels)?;
    let cfg = solver_config(levels, &a.integrator, &a.solver)?;
    let r = reconstruct_from_gap_map(&target, &cfg)?;
    let mut settings = Settings::from_source(&PotentialSource {
        potential: Some(a.target.clone()),
        seed: None,
        modes: 0,
        max_norm: 0.0,
        symmetric: false,
        grid_modes: 0,
    })
    .integrator(&a.integrator)
    .solver(&a.solver);
    settings.levels = Some(levels);
    if let Some(path) = &a.report {
        std::fs::write(path, to_json(&settings, &r)?)?;
    }
    if !r.converged {
        eprintln!("reconstruction did not converge: residual {} after {} iterations", fmt_f64(r.residual_norm), r.iterations);
        return Ok(EXIT_SOLVER);
    }
    emit(a.out.as_deref(), &potential_json(&r.potential)?)?;
    Ok(EXIT_OK)
}

fn table_text(report: &equivalence::EquivalenceReport) -> String {
    let mut s = format!("{} (N = {}, n ≤ {})\n", report.theorem, report.levels, report.checked_levels);
    if let Some(f) = &report.failure {
        s.push_str(&format!("  failure: {f}\n"));
    }
    for c in &report.checks {
        s.push_str(&format!(
            "  {:<4} {:<48} residual {:.3e}  tol {:.1e}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.residual,
            c.tolerance
        ));
    }
    s
}

fn verify(a: &VerifyArgs) -> Result<i32> {
    check_levels(a.levels)?;
    check_distinct(a.source.potential.as_deref(), &[a.out.as_deref()])?;
    let q = load(&a.source)?;
    let sigma = a.sigma.as_deref().map(str::parse::<SignSequence>).transpose()?;
    let cfg = solver_config(a.levels, &a.integrator, &a.solver)?;
    let mut settings = Settings::from_source(&a.source).integrator(&a.integrator).solver(&a.solver);
    settings.levels = Some(a.levels);
    settings.sigma = sigma.as_ref().map(|s| s.to_string());

    if let VerifyKind::Smoothness = a.which {
        let s = sigma.unwrap_or_else(SignSequence::all_ones);
        let r = equivalence::smoothness_diagnostic(&q, &s, &cfg)?;
        emit(a.out.as_deref(), &to_json(&settings, &r)?)?;
        return Ok(EXIT_OK);
    }
    let report = match a.which {
        VerifyKind::T1 => equivalence::verify_theorem(&q, Theorem::T1, None, &cfg)?,
        VerifyKind::T2 => equivalence::verify_theorem(&q, Theorem::T2, None, &cfg)?,
        VerifyKind::T3 => {
            let s = sigma.ok_or_else(|| Error::Usage("verify t3 needs --sigma".into()))?;
            equivalence::verify_theorem(&q, Theorem::T3, Some(&s), &cfg)?
        }
        VerifyKind::Doubling => equivalence::verify_doubling_with(&q, a.levels, &cfg.integrator)?,
        VerifyKind::Smoothness => unreachable!(),
    };
    let json = to_json(&settings, &report)?;
    let text = table_text(&report);
    match &a.out {
        Some(path) => {
            std::fs::write(path, json)?;
            print!("{text}");
        }
        None => {
            emit(None, &json)?;
            eprint!("{text}");
        }
    }
    Ok(if report.failure.is_some() {
        EXIT_SOLVER
    } else if report.passed {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    })
}

fn oracle_compare(a: &OracleArgs) -> Result<i32> {
    check_levels(a.levels)?;
    check_distinct(a.source.potential.as_deref(), &[a.out.as_deref()])?;
    let bc: BoundaryCondition = a.bc.parse()?;
    let q = load(&a.source)?;
    let cfg = OracleConfig { meshes: a.meshes.clone(), tag: OracleTag::from(bc), levels: a.levels };
    let o = oracle::fd_spectrum(&q, &cfg)?;
    let shoot = SpectralSolver::new(&q, &integrator(&a.integrator)?)?.boundary_eigenvalues(bc, a.levels)?;
    let mut csv = String::from("n,shooting,oracle,oracle_error,disagreement,tolerance,pass\n");
    let mut all = true;
    for (i, (s, v)) in shoot.iter().zip(&o.values).enumerate() {
        let d = oracle::relative_disagreement(*s, *v);
        let tol = 1e-6f64.max(3.0 * o.errors[i] / v.abs().max(1.0));
        let pass = d <= tol;
        all &= pass;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            i + o.first_index,
            fmt_f64(*s),
            fmt_f64(*v),
            fmt_f64(o.errors[i]),
            fmt_f64(d),
            fmt_f64(tol),
            pass
        ));
    }
    emit(a.out.as_deref(), &csv)?;
    Ok(if all { EXIT_OK } else { EXIT_VERIFICATION })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_MALFORMED } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_MALFORMED;
        }
        // a global pool can only be installed once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match &cli.command {
        Command::Spectrum(a) => spectrum(a),
        Command::Discriminant(a) => discriminant(a),
        Command::Involve(a) => involve(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Verify(a) => verify(a),
        Command::OracleCompare(a) => oracle_compare(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(exit_code(&Error::Parse("x".into())), EXIT_MALFORMED);
        assert_eq!(exit_code(&Error::Usage("x".into())), EXIT_MALFORMED);
        assert_eq!(exit_code(&Error::Bracketing("x".into())), EXIT_SOLVER);
        assert_eq!(exit_code(&Error::NotConverged { iterations: 3, residual: 1.0 }), EXIT_SOLVER);
    }

    #[test]
    fn argument_errors_are_malformed() {
        assert_eq!(run(["sturm", "spectrum"]), EXIT_MALFORMED);
        assert_eq!(run(["sturm", "spectrum", "--seed", "1", "--potential", "x.json"]), EXIT_MALFORMED);
        assert_eq!(run(["sturm", "bogus"]), EXIT_MALFORMED);
        assert_eq!(run(["sturm", "spectrum", "--seed", "1", "--levels", "0"]), EXIT_MALFORMED);
        assert_eq!(run(["sturm", "--help"]), EXIT_OK);
    }

    #[test]
    fn help_documents_formats() {
        let mut cmd = <Cli as clap::CommandFactory>::command();
        let help = cmd.render_long_help().to_string();
        assert!(help.contains("\"fourier\"") && help.contains("gap_f") && help.contains("EXIT CODES"));
    }
}
