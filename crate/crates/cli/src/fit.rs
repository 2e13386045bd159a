//! The `fit` command.

use iphfit::em::{fit_biv_block, fit_biv_inhom, fit_iph, fit_mph, fit_ph, FitConfig, FitResult};
use iphfit::{Family, Transform};

use crate::args::{FitArgs, ModelKind};
use crate::data::{ingest, DataTable};
use crate::document::{FitMetadata, Model, ModelDocument, ModelSpec};
use crate::error::{CliError, CliResult};
use crate::output::{write_table, write_text};

/// A fitted model with its likelihood trace.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: Model,
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl Fitted {
    fn from<M>(r: FitResult<M>, wrap: impl FnOnce(M) -> Model) -> Self {
        Fitted {
            model: wrap(r.model),
            log_likelihood: r.log_likelihood,
            iterations: r.iterations,
            converged: r.converged,
            warnings: r.warnings,
        }
    }
}

/// Fit settings taken from the command line.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub kind: ModelKind,
    pub phases: Vec<usize>,
    pub iterations: usize,
    pub seed: u64,
    pub step_length: Option<f64>,
    pub grad_tol: Option<f64>,
    pub fit_beta: bool,
    pub progress: bool,
}

fn report(iteration: usize, log_likelihood: f64) {
    if iteration.is_multiple_of(100) {
        eprintln!("iteration {iteration}: log-likelihood {log_likelihood:.6}");
    }
}

fn univariate_family(kind: ModelKind) -> Option<Family> {
    match kind {
        ModelKind::Ph => Some(Family::Identity),
        ModelKind::Mpareto => Some(Family::Pareto),
        ModelKind::Mweibull => Some(Family::Weibull),
        ModelKind::Mgompertz => Some(Family::Gompertz),
        ModelKind::Mgev => Some(Family::Gev),
        _ => None,
    }
}

fn check_shape(table: &DataTable, o: &FitOptions) -> CliResult<()> {
    let d = table.dim();
    let name = o.kind.name();
    let (coords, blocks) = match o.kind {
        ModelKind::Mph => (None, 1),
        ModelKind::Bivph | ModelKind::Bivmpareto | ModelKind::Bivmweibull => (Some(2), 2),
        _ => (Some(1), 1),
    };
    if let Some(c) = coords {
        if c != d {
            return Err(CliError::usage(format!("model {name} needs {c} coordinate(s) but the data has {d}")));
        }
    }
    if o.phases.len() > blocks {
        return Err(CliError::usage(format!("model {name} takes a single phase count")));
    }
    Ok(())
}

/// Fits the selected model.
pub fn fit_table(table: &DataTable, o: &FitOptions) -> CliResult<Fitted> {
    check_shape(table, o)?;
    let mut cfg = FitConfig {
        iterations: o.iterations,
        seed: o.seed,
        step_length: o.step_length,
        grad_tol: o.grad_tol,
        progress: o.progress.then_some(report as fn(usize, f64)),
        ..Default::default()
    };
    let p = o.phases[0];
    let (p1, p2) = (p, *o.phases.get(1).unwrap_or(&p));
    let log_shortcut = !o.fit_beta && matches!(o.kind, ModelKind::Mpareto | ModelKind::Bivmpareto);
    if log_shortcut {
        cfg.fit_transform = false;
        let coords = if o.kind == ModelKind::Mpareto { 1 } else { 2 };
        cfg.initial_transforms = Some(vec![Transform::Pareto { beta: 1.0 }; coords]);
    }
    let fitted = if let Some(family) = univariate_family(o.kind) {
        let data = table.column(0);
        if family == Family::Identity {
            Fitted::from(fit_ph(&data, p, &cfg)?, Model::Ph)
        } else {
            Fitted::from(fit_iph(&data, p, family, &cfg)?, Model::Iph)
        }
    } else {
        match o.kind {
            ModelKind::Mph => Fitted::from(fit_mph(&table.rows, p, &cfg)?, Model::Mph),
            ModelKind::Bivph => Fitted::from(fit_biv_block(&table.rows, p1, p2, &cfg)?, Model::Block),
            ModelKind::Bivmpareto => Fitted::from(
                fit_biv_inhom(&table.rows, p1, p2, [Family::Pareto; 2], &cfg)?,
                Model::Inhom,
            ),
            ModelKind::Bivmweibull => Fitted::from(
                fit_biv_inhom(&table.rows, p1, p2, [Family::Weibull; 2], &cfg)?,
                Model::Inhom,
            ),
            _ => unreachable!("univariate kinds are handled above"),
        }
    };
    ModelSpec::from_model(&fitted.model)
        .to_model()
        .map_err(|e| CliError::Numerical(format!("the fitted model is invalid: {e}")))?;
    Ok(fitted)
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let table = ingest(&args.data, args.weight.as_deref())?;
    let options = FitOptions {
        kind: args.model,
        phases: args.phases.0.clone(),
        iterations: args.iterations,
        seed: args.seed,
        step_length: args.step_length,
        grad_tol: args.grad_tol,
        fit_beta: args.fit_beta,
        progress: true,
    };
    let fitted = fit_table(&table, &options)?;
    for w in &fitted.warnings {
        eprintln!("warning: {w}");
    }
    let metadata = FitMetadata {
        model: args.model.name().to_string(),
        phases: options.phases.clone(),
        iterations: fitted.iterations,
        seed: args.seed,
        log_likelihood: *fitted.log_likelihood.last().unwrap_or(&f64::NAN),
        converged: fitted.converged,
    };
    if !metadata.log_likelihood.is_finite() {
        return Err(CliError::Numerical("the fit produced no finite log-likelihood".into()));
    }
    if let Some(path) = &args.trace {
        let rows = fitted
            .log_likelihood
            .iter()
            .enumerate()
            .map(|(i, &ll)| vec![i as f64, ll]);
        write_table(Some(path), &["iteration", "log_likelihood"], rows)?;
    }
    let doc = ModelDocument::new(&fitted.model, Some(metadata));
    write_text(args.output.as_deref(), &doc.to_json())
}
