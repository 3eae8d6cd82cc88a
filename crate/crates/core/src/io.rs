//! File formats: potential JSON, spectrum and sweep CSV.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eigensolve::SpectrumTable;
use crate::error::{Error, Result};
use crate::potential::Potential;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierBlock {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridBlock {
    pub values: Vec<f64>,
}

/// `{"fourier": {"cos": [...], "sin": [...]}}` or `{"grid": {"values": [...]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialFile {
    Fourier(FourierBlock),
    Grid(GridBlock),
}

/// A potential read from disk, with the L² norm of any discarded grid tail.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedPotential {
    pub potential: Potential,
    pub discarded_tail: Option<f64>,
}

/// Parses potential JSON; grid input is projected onto `grid_modes` modes.
pub fn parse_potential(text: &str, grid_modes: usize) -> Result<LoadedPotential> {
    let file: PotentialFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("potential JSON: {e}")))?;
    match file {
        PotentialFile::Fourier(f) => {
            Ok(LoadedPotential { potential: Potential::from_fourier(&f.cos, &f.sin)?, discarded_tail: None })
        }
        PotentialFile::Grid(g) => {
            let (potential, tail) = Potential::from_grid(&g.values, grid_modes)?;
            Ok(LoadedPotential { potential, discarded_tail: Some(tail) })
        }
    }
}

pub fn read_potential(path: &Path, grid_modes: usize) -> Result<LoadedPotential> {
    parse_potential(&std::fs::read_to_string(path)?, grid_modes)
}

pub fn potential_json(q: &Potential) -> Result<String> {
    let file = PotentialFile::Fourier(FourierBlock { cos: q.cos_coeffs().to_vec(), sin: q.sin_coeffs().to_vec() });
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const SPECTRUM_HEADER: &str = "n,mu,nu,tau,rho,lam_minus,lam_plus,lam_star,h_s,gh_s";

/// Spectrum CSV; row 0 carries `ν₀` and `λ₀⁺` only.
pub fn spectrum_csv(table: &SpectrumTable) -> String {
    let mut out = String::new();
    out.push_str(SPECTRUM_HEADER);
    out.push('\n');
    let _ = writeln!(out, "0,,{},,,,{},,,", fmt_f64(table.nu0), fmt_f64(table.lam0_plus));
    for i in 0..table.levels {
        let row = [
            table.mu[i],
            table.nu[i],
            table.tau[i],
            table.rho[i],
            table.lam_minus[i],
            table.lam_plus[i],
            table.lam_star[i],
            table.hs[i],
            table.ghs[i],
        ];
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{},{}", i + 1, cells.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::spectrum_table;

    #[test]
    fn fourier_round_trip() {
        let q = Potential::from_fourier(&[0.1, 1.0 / 3.0], &[-2.5e-17]).unwrap();
        let text = potential_json(&q).unwrap();
        assert!(text.contains("\"fourier\""));
        assert_eq!(parse_potential(&text, 8).unwrap().potential, q);
    }

    #[test]
    fn grid_input_is_projected() {
        let n = 64;
        let values: Vec<f64> = (0..n)
            .map(|j| {
                let x = (j as f64 + 0.5) / n as f64;
                3.0 + 2.0 * (2.0 * std::f64::consts::PI * x).cos()
            })
            .collect();
        let text = serde_json::json!({ "grid": { "values": values } }).to_string();
        let loaded = parse_potential(&text, 4).unwrap();
        assert!((loaded.potential.cos_coeff(1) - 2.0).abs() < 1e-12);
        assert!(loaded.discarded_tail.unwrap() < 1e-10);
    }

    #[test]
    fn malformed_potentials() {
        for bad in [
            "{}",
            "[1,2]",
            r#"{"fourier": {"cos": [1, "x"]}}"#,
            r#"{"grid": {"values": []}}"#,
            r#"{"fourier": {"cos": [1]}, "grid": {"values": [1]}}"#,
            r#"{"spline": {}}"#,
        ] {
            assert!(parse_potential(bad, 4).is_err(), "{bad}");
        }
    }

    #[test]
    fn csv_layout() {
        let t = spectrum_table(&Potential::zero(), 2).unwrap();
        let csv = spectrum_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SPECTRUM_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,,") && lines[1].split(',').count() == 10);
        let mu1: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert!((mu1 - std::f64::consts::PI.powi(2)).abs() < 1e-9);
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
