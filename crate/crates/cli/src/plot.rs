//! Commands producing samples and plot data.

use iphfit::rng::draws;

use crate::args::{ContourArgs, EvalArgs, Grid, QqArgs, SimulateArgs};
use crate::data::ingest;
use crate::document::{load_model, Model, Univariate};
use crate::error::{CliError, CliResult};
use crate::output::write_table;

/// Column names `x` or `x1, …, xd`.
fn coordinate_names(d: usize) -> Vec<String> {
    if d == 1 {
        vec!["x".into()]
    } else {
        (1..=d).map(|j| format!("x{j}")).collect()
    }
}

/// `n` draws from `model`, one row per draw.
pub fn simulate(model: &Model, n: usize, seed: u64) -> Vec<Vec<f64>> {
    draws(seed, n, |rng| model.sample(rng))
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let names = coordinate_names(model.coords());
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    write_table(args.output.as_deref(), &header, simulate(&model, args.samples, args.seed))
}

/// Zero-based coordinate picked by `--coordinate`, required for
/// multivariate models.
fn coordinate(model: &Model, flag: Option<u64>) -> CliResult<usize> {
    match flag {
        Some(j) => Ok(j as usize - 1),
        None if model.coords() == 1 => Ok(0),
        None => Err(CliError::usage(format!(
            "the model has {} coordinates; choose one with --coordinate",
            model.coords()
        ))),
    }
}

fn check_support(law: &Univariate, xs: &[f64]) -> CliResult<()> {
    match xs.iter().find(|&&x| !law.in_support(x)) {
        Some(x) => Err(CliError::usage(format!("grid point {x} is outside the support of the model"))),
        None => Ok(()),
    }
}

/// Rows `(x, density, survival)`.
pub fn eval(law: &Univariate, grid: &Grid) -> CliResult<Vec<Vec<f64>>> {
    let xs = grid.values();
    check_support(law, &xs)?;
    xs.iter()
        .map(|&x| Ok(vec![x, law.density(x)?, law.survival(x)?]))
        .collect()
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let law = model.marginal(coordinate(&model, args.coordinate)?)?;
    write_table(args.output.as_deref(), &["x", "density", "survival"], eval(&law, &args.grid)?)
}

/// Rows `(empirical quantile, model quantile)` at levels `(i - 1/2) / n`.
pub fn qq(law: &Univariate, sample: &[f64]) -> CliResult<Vec<Vec<f64>>> {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| Ok(vec![x, law.quantile((i as f64 + 0.5) / n)?]))
        .collect()
}

pub fn cmd_qq(args: &QqArgs) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let table = ingest(&args.data, None)?;
    let j = coordinate(&model, args.coordinate)?;
    let column = if table.dim() == 1 { 0 } else { j };
    if column >= table.dim() {
        return Err(CliError::usage(format!("the data has no coordinate {}", column + 1)));
    }
    let sample = table.exact_values(column);
    let skipped = table.rows.len() - sample.len();
    if skipped > 0 {
        eprintln!("skipping {skipped} censored observation(s)");
    }
    if sample.is_empty() {
        return Err(CliError::data("the sample has no exact observations"));
    }
    let law = model.marginal(j)?;
    write_table(args.output.as_deref(), &["empirical", "model"], qq(&law, &sample)?)
}

/// Rows `(x1, x2, value)` on the grid, with the value either the joint
/// density or, given `samples`, the fraction of `samples` draws falling in
/// the cell centred at the grid point divided by the cell area.
pub fn contour(model: &Model, g1: &Grid, g2: &Grid, samples: Option<(usize, u64)>) -> CliResult<Vec<Vec<f64>>> {
    if model.coords() != 2 {
        return Err(CliError::usage(format!(
            "contour grids need a bivariate model, this one has {} coordinate(s)",
            model.coords()
        )));
    }
    let (x1, x2) = (g1.values(), g2.values());
    check_support(&model.marginal(0)?, &x1)?;
    check_support(&model.marginal(1)?, &x2)?;
    let mut rows = Vec::with_capacity(x1.len() * x2.len());
    match samples {
        None => {
            if model.joint_density(1.0, 1.0).is_none() {
                return Err(CliError::usage(format!(
                    "a {} model has no explicit joint density; pass --samples for a simulated estimate",
                    model.tag()
                )));
            }
            for &a in &x1 {
                for &b in &x2 {
                    let f = model.joint_density(a, b).expect("checked above")?;
                    rows.push(vec![a, b, f]);
                }
            }
        }
        Some((n, seed)) => {
            let (Some(h1), Some(h2)) = (g1.spacing(), g2.spacing()) else {
                return Err(CliError::usage("simulated estimates need at least two points per axis"));
            };
            if n == 0 {
                return Err(CliError::usage("--samples must be positive"));
            }
            let cell = |x: f64, g: &Grid, h: f64| {
                let k = ((x - g.from) / h + 0.5).floor();
                (k >= 0.0 && k < g.points as f64).then_some(k as usize)
            };
            let mut counts = vec![0usize; x1.len() * x2.len()];
            for draw in simulate(model, n, seed) {
                if let (Some(i), Some(j)) = (cell(draw[0], g1, h1), cell(draw[1], g2, h2)) {
                    counts[i * x2.len() + j] += 1;
                }
            }
            let scale = 1.0 / (n as f64 * h1 * h2);
            for (i, &a) in x1.iter().enumerate() {
                for (j, &b) in x2.iter().enumerate() {
                    rows.push(vec![a, b, counts[i * x2.len() + j] as f64 * scale]);
                }
            }
        }
    }
    Ok(rows)
}

pub fn cmd_contour(args: &ContourArgs) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let rows = contour(&model, &args.x1, &args.x2, args.samples.map(|n| (n, args.seed)))?;
    let value = if args.samples.is_some() { "estimate" } else { "density" };
    write_table(args.output.as_deref(), &["x1", "x2", value], rows)
}
