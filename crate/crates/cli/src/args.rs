use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const DEFAULT_N_GRID: usize = 1024;
pub const DEFAULT_RHO_MAX: f64 = 8.0;
pub const DEFAULT_DTAU: f64 = 1e-3;
const QUARTIC: &str = "model=VectorD0 coeffs=0,0.5,0.25";

#[derive(Debug, Parser)]
#[command(
    name = "largen",
    version,
    about = "Renormalization-group toolkit for large-N vector and matrix models"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Write the data table here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Suppress the human-readable summary.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Large-N saddle points and free energy of a potential.
    Saddle(SaddleArgs),
    /// Finite-N quadrature against the large-N asymptotics.
    Quadrature(QuadratureArgs),
    /// Finite-size scaling collapse around a multicritical point.
    Collapse(CollapseArgs),
    /// Evolve a potential under the flow equation and track its saddle.
    Flow(FlowArgs),
    /// Algebraic fixed points, their singularities and series.
    FixedPoint(FixedPointArgs),
    /// Linear-approximation eigenvalues around a multicritical fixed point.
    Spectrum(SpectrumArgs),
    /// Beta function from the flow of the quartic coupling.
    Beta(BetaArgs),
    /// Critical and double-scaling exponents.
    Exponents(ExponentsArgs),
    /// Run the full invariant suite.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Saddle(_) => "saddle",
            Command::Quadrature(_) => "quadrature",
            Command::Collapse(_) => "collapse",
            Command::Flow(_) => "flow",
            Command::FixedPoint(_) => "fixed-point",
            Command::Spectrum(_) => "spectrum",
            Command::Beta(_) => "beta",
            Command::Exponents(_) => "exponents",
            Command::Verify(_) => "verify",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SaddleArgs {
    /// Potential record `model=<tag> [d=<real>] coeffs=c0,c1,...`.
    #[arg(long, default_value = QUARTIC)]
    pub potential: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rho_0: f64,
    #[arg(long, default_value_t = DEFAULT_RHO_MAX)]
    pub rho_max: f64,
    /// Number of components N used for the free energy.
    #[arg(long, default_value_t = 100)]
    pub size: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct QuadratureArgs {
    #[arg(long, default_value = QUARTIC)]
    pub potential: String,
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_RHO_MAX)]
    pub rho_max: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CollapseArgs {
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, value_delimiter = ',', default_value = "200,400,800")]
    pub sizes: Vec<usize>,
    /// Scaling variables x = v N^{1 − q/m}; defaults to −1, −0.9, …, 1.
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        conflicts_with = "vs"
    )]
    pub xs: Option<Vec<f64>>,
    /// Raw couplings v, sampled identically for every N.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub vs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EquationArg {
    Full,
    Linear,
}

#[derive(Debug, Args, Serialize)]
pub struct FlowArgs {
    #[arg(long, default_value = QUARTIC)]
    pub potential: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rho_0: f64,
    #[arg(long, default_value_t = DEFAULT_N_GRID)]
    pub n_grid: usize,
    #[arg(long, default_value_t = DEFAULT_RHO_MAX)]
    pub rho_max: f64,
    #[arg(long, default_value_t = DEFAULT_DTAU)]
    pub dtau: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = EquationArg::Full)]
    pub equation: EquationArg,
    /// Emit the final profile `rho,R` instead of the saddle track.
    #[arg(long)]
    pub profile: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct FixedPointArgs {
    /// Polynomial order: γ = −1/n.
    #[arg(long, conflicts_with = "gamma", required_unless_present = "gamma")]
    pub n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_RHO_MAX)]
    pub rho_max: f64,
    #[arg(long, default_value_t = DEFAULT_N_GRID)]
    pub n_grid: usize,
    /// Emit the first K + 1 Taylor coefficients of R instead of the profile.
    #[arg(long, value_name = "K")]
    pub emit_series: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumModelArg {
    Vector,
    Matrix,
    Qm,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[arg(long, value_enum, default_value_t = SpectrumModelArg::Vector)]
    pub model: SpectrumModelArg,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 8)]
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaModelArg {
    Vector,
    Matrix,
}

#[derive(Debug, Args, Serialize)]
pub struct BetaArgs {
    #[arg(long, value_enum, default_value_t = BetaModelArg::Vector)]
    pub model: BetaModelArg,
    /// Truncation order of the coupling expansion.
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    pub g_min: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub g_max: f64,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentModelArg {
    D0,
    Qm,
    MatrixDoubleScaling,
}

#[derive(Debug, Args, Serialize)]
pub struct ExponentsArgs {
    #[arg(long, value_enum, default_value_t = ExponentModelArg::D0)]
    pub model: ExponentModelArg,
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// A single perturbation order; all admissible q when omitted.
    #[arg(long)]
    pub q: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {}

const SUBCOMMANDS: [&str; 9] = [
    "saddle",
    "quadrature",
    "collapse",
    "flow",
    "fixed-point",
    "spectrum",
    "beta",
    "exponents",
    "verify",
];
const VALUED_GLOBALS: [&str; 3] = ["--out", "--format", "--config"];

/// `key = value` lines; `#` starts a comment.
pub fn read_config(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> anyhow::Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "config line {}: expected `key = value`, got `{}`",
                i + 1,
                raw.trim()
            );
        };
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        map.insert(key.trim().replace('_', "-"), value.to_string());
    }
    Ok(map)
}

/// Removes `--config <path>` from `argv` and splices the file's entries in
/// as flags directly after the subcommand, so that later (explicit) flags
/// override them.
pub fn expand_config(argv: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let mut args: Vec<String> = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut iter = argv.into_iter();
    if let Some(bin) = iter.next() {
        args.push(bin.to_string_lossy().into_owned());
    }
    while let Some(a) = iter.next() {
        let a = a
            .into_string()
            .map_err(|a| anyhow::anyhow!("argument is not valid UTF-8: {a:?}"))?;
        if a == "--config" {
            let path = iter.next().context("--config needs a path")?;
            config = Some(PathBuf::from(path));
        } else if let Some(path) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else {
            args.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(args.into_iter().map(OsString::from).collect());
    };
    let entries = read_config(&path)?;
    let mut flags = Vec::new();
    for (key, value) in entries {
        match value.as_str() {
            "true" => flags.push(format!("--{key}")),
            "false" | "null" => {}
            _ => {
                flags.push(format!("--{key}"));
                flags.push(value);
            }
        }
    }
    let position = subcommand_position(&args).map_or(args.len(), |i| i + 1);
    args.splice(position..position, flags);
    Ok(args.into_iter().map(OsString::from).collect())
}

fn subcommand_position(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if SUBCOMMANDS.contains(&a.as_str()) {
            return Some(i);
        }
        if VALUED_GLOBALS.contains(&a.as_str()) {
            i += 1;
        }
        i += 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_comments_and_blank_lines() {
        let map = parse_config(
            "# run\nn = 2   # order\n\nrho_max=10\npotential = \"model=Matrix coeffs=0,1\"\n",
        )
        .unwrap();
        assert_eq!(
            map.get("potential").map(String::as_str),
            Some("model=Matrix coeffs=0,1")
        );
        assert_eq!(map.get("n").map(String::as_str), Some("2"));
        assert_eq!(map.get("rho-max").map(String::as_str), Some("10"));
        assert!(parse_config("just words").is_err());
    }

    #[test]
    fn subcommand_found_after_valued_globals() {
        let args: Vec<String> = ["largen", "--out", "beta", "fixed-point"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(subcommand_position(&args), Some(3));
    }

    #[test]
    fn flags_win_over_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "n = 2\nrho-max = 10\n").unwrap();
        let argv = expand_config(os(&[
            "largen",
            "--config",
            path.to_str().unwrap(),
            "fixed-point",
            "--n",
            "3",
        ]))
        .unwrap();
        let cli = Cli::try_parse_from(argv).unwrap();
        match cli.command {
            Command::FixedPoint(a) => {
                assert_eq!(a.n, Some(3));
                assert_eq!(a.rho_max, 10.0);
            }
            other => panic!("wrong subcommand {other:?}"),
        }
    }

    #[test]
    fn unknown_flags_are_usage_errors() {
        let err = Cli::try_parse_from(["largen", "beta", "--n", "2"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
