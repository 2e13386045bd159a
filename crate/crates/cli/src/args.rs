//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "iphfit", version, about = "Fit, simulate and evaluate phase-type models")]
pub struct Cli {
    /// Worker threads used by fitting and simulation (all cores if unset).
    #[arg(long, global = true, env = "PHASETYPE_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a CSV sample and write it as JSON.
    Fit(FitArgs),
    /// Draw a sample from a model.
    Simulate(SimulateArgs),
    /// Density and survival function on a grid.
    Eval(EvalArgs),
    /// Empirical against model quantiles.
    Qq(QqArgs),
    /// Joint density of a bivariate model on a rectangular grid.
    Contour(ContourArgs),
}

/// Model family to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Phase-type.
    Ph,
    /// Matrix-Pareto.
    Mpareto,
    /// Matrix-Weibull.
    Mweibull,
    /// Matrix-Gompertz.
    Mgompertz,
    /// Matrix-GEV.
    Mgev,
    /// MPH* with a reward matrix.
    Mph,
    /// Bivariate block model.
    Bivph,
    /// Bivariate block model with matrix-Pareto marginals.
    Bivmpareto,
    /// Bivariate block model with matrix-Weibull marginals.
    Bivmweibull,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ph => "ph",
            ModelKind::Mpareto => "mpareto",
            ModelKind::Mweibull => "mweibull",
            ModelKind::Mgompertz => "mgompertz",
            ModelKind::Mgev => "mgev",
            ModelKind::Mph => "mph",
            ModelKind::Bivph => "bivph",
            ModelKind::Bivmpareto => "bivmpareto",
            ModelKind::Bivmweibull => "bivmweibull",
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV sample with a header row.
    pub data: PathBuf,

    #[arg(long, value_enum)]
    pub model: ModelKind,

    /// Number of phases, or `p1,p2` for the blocks of bivariate models.
    #[arg(long, value_parser = parse_phases)]
    pub phases: Phases,

    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Step of the transform-parameter ascent (family default if unset).
    #[arg(long, value_parser = parse_positive)]
    pub step_length: Option<f64>,

    /// Gradient norm ending the transform-parameter ascent.
    #[arg(long, value_parser = parse_positive)]
    pub grad_tol: Option<f64>,

    /// Estimate the Pareto scale instead of fixing it at one.
    #[arg(long)]
    pub fit_beta: bool,

    /// Column holding observation weights.
    #[arg(long)]
    pub weight: Option<String>,

    /// Model document path (standard output if unset).
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    /// CSV of the log-likelihood after every iteration.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model document.
    pub model: PathBuf,

    /// Number of draws.
    #[arg(long, short = 'n')]
    pub samples: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// CSV path (standard output if unset).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model document.
    pub model: PathBuf,

    /// Evaluation points as `from,to,points`.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Grid,

    /// One-based coordinate whose marginal is evaluated.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub coordinate: Option<u64>,

    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QqArgs {
    /// Model document.
    pub model: PathBuf,

    /// CSV sample; censored entries are skipped.
    pub data: PathBuf,

    /// One-based coordinate compared.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub coordinate: Option<u64>,

    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ContourArgs {
    /// Model document.
    pub model: PathBuf,

    /// First-coordinate grid as `from,to,points`.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub x1: Grid,

    /// Second-coordinate grid as `from,to,points`.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub x2: Grid,

    /// Estimate the density from this many simulated draws with one bin per
    /// grid point instead of evaluating it.
    #[arg(long)]
    pub samples: Option<usize>,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Phase counts from `--phases`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phases(pub Vec<usize>);

/// Equally spaced points from `from` to `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.from];
        }
        let step = (self.to - self.from) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| if i + 1 == self.points { self.to } else { self.from + step * i as f64 })
            .collect()
    }

    /// Distance between neighbouring points.
    pub fn spacing(&self) -> Option<f64> {
        (self.points > 1).then(|| (self.to - self.from) / (self.points - 1) as f64)
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("'{s}' is not a positive number")),
    }
}

fn parse_phases(s: &str) -> Result<Phases, String> {
    let counts = s
        .split(',')
        .map(|p| match p.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("'{p}' is not a positive phase count")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if counts.len() > 2 {
        return Err("give one phase count, or two for bivariate models".into());
    }
    Ok(Phases(counts))
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [from, to, points] = parts[..] else {
        return Err(format!("'{s}' is not of the form from,to,points"));
    };
    let number = |v: &str| match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("'{v}' is not a finite number")),
    };
    let (from, to) = (number(from)?, number(to)?);
    let points: usize = points
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("'{points}' is not a positive point count"))?;
    if from > to || (from == to && points > 1) {
        return Err(format!("grid from {from} to {to} with {points} points is empty or reversed"));
    }
    Ok(Grid { from, to, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn flags_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grids_and_phases_parse() {
        let g = parse_grid("0.5, 2.5, 5").unwrap();
        assert_eq!(g.values(), [0.5, 1.0, 1.5, 2.0, 2.5]);
        assert_eq!(parse_grid("1,1,1").unwrap().values(), [1.0]);
        for bad in ["1,2", "2,1,3", "1,1,2", "0,1,0", "a,1,2", "0,inf,3"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
        assert_eq!(parse_phases("3").unwrap(), Phases(vec![3]));
        assert_eq!(parse_phases("2,4").unwrap(), Phases(vec![2, 4]));
        for bad in ["0", "1,2,3", "x", ""] {
            assert!(parse_phases(bad).is_err(), "{bad}");
        }
        assert_eq!(ModelKind::Bivmpareto.name(), "bivmpareto");
    }
}
