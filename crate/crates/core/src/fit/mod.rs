//! Numeric transformation fitting: tries each model family on the example
//! points with Levenberg–Marquardt, selects by mean squared error, and emits
//! the winner as an interpretable transformation program.

mod families;
mod linalg;
mod lm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use families::{all_families, FamilyDef, ModelFamily};
pub use lm::{levenberg_marquardt, LmOptions, LmOutcome};

use crate::lang::{self, ProgramOrigin, TransformProgram};
use crate::table::ExamplePair;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("normal matrix is singular even after damping retries")]
    SingularNormalMatrix,
    #[error("residuals became non-finite")]
    NonFiniteResidual,
    #[error("{family} needs at least {needed} points, got {got}")]
    InsufficientPoints { family: ModelFamily, needed: usize, got: usize },
    #[error("{family} left its numeric domain: {detail}")]
    Domain { family: ModelFamily, detail: String },
    #[error("every model family failed to fit")]
    AllFitsFailed,
    #[error("target {0:?} is not numeric")]
    NonNumericTarget(String),
}

/// A fitted family with its parameters and error on the example points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub family: ModelFamily,
    /// (a, b, c); c stays 0 for two-parameter families.
    pub params: [f64; 3],
    pub mse: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn formula(&self) -> String {
        self.family.formula(&self.params[..self.family.arity()])
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.family.eval(&self.params[..self.family.arity()], x)
    }
}

/// Fits one family to the points: family-specific seed, then
/// Levenberg–Marquardt, with the MSE computed over all points.
pub fn fit_family(points: &[(f64, f64)], family: ModelFamily) -> Result<FitResult, FitError> {
    fit_family_with(points, family, &LmOptions::default())
}

pub fn fit_family_with(
    points: &[(f64, f64)],
    family: ModelFamily,
    opts: &LmOptions,
) -> Result<FitResult, FitError> {
    let arity = family.arity();
    if points.len() < arity {
        return Err(FitError::InsufficientPoints { family, needed: arity, got: points.len() });
    }
    if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(FitError::NonFiniteResidual);
    }

    let seed = family.seed(points);
    let residual = |p: &[f64]| points.iter().map(|&(x, y)| family.eval(p, x) - y).collect();
    let jacobian =
        |p: &[f64]| points.iter().flat_map(|&(x, _)| family.jacobian_row(p, x)).collect();

    let outcome = levenberg_marquardt(residual, jacobian, &seed, opts).map_err(|err| match err {
        // Escapes from the family's numeric domain surface as domain errors.
        FitError::NonFiniteResidual => match family {
            ModelFamily::Exponential => FitError::Domain {
                family,
                detail: "exponential overflow persisted during the search".into(),
            },
            ModelFamily::Rational => FitError::Domain {
                family,
                detail: "denominator hit zero near some sample x".into(),
            },
            _ => FitError::NonFiniteResidual,
        },
        other => other,
    })?;

    let mut params = [0.0; 3];
    params[..arity].copy_from_slice(&outcome.params);
    let sse: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = family.eval(&outcome.params, x) - y;
            r * r
        })
        .sum();
    let mse = sse / points.len() as f64;
    if !mse.is_finite() {
        return Err(FitError::NonFiniteResidual);
    }
    Ok(FitResult {
        family,
        params,
        mse,
        iterations: outcome.iterations,
        converged: outcome.converged,
    })
}

/// Fits every registered family; failures stay in the result list so the
/// caller can report them.
pub fn fit_all(points: &[(f64, f64)]) -> Vec<Result<FitResult, FitError>> {
    ModelFamily::ALL.iter().map(|&family| fit_family(points, family)).collect()
}

/// Relative MSE window treated as a tie.
const MSE_REL_TIE: f64 = 1e-9;
/// Below this, fits are indistinguishable from an exact fit at double
/// precision, so simplicity decides.
const MSE_NOISE_FLOOR: f64 = 1e-12;

/// Picks the fit with the lowest MSE. Fits within a relative tolerance of
/// the minimum (or jointly below the numerical noise floor) count as ties
/// and the simplest family wins.
pub fn select_best(fits: &[FitResult]) -> Result<FitResult, FitError> {
    let min_mse = fits.iter().map(|f| f.mse).fold(f64::INFINITY, f64::min);
    if !min_mse.is_finite() {
        return Err(FitError::AllFitsFailed);
    }
    fits.iter()
        .filter(|f| {
            f.mse <= min_mse * (1.0 + MSE_REL_TIE)
                || (f.mse <= MSE_NOISE_FLOOR && min_mse <= MSE_NOISE_FLOOR)
        })
        .min_by_key(|f| f.family.simplicity_rank())
        .cloned()
        .ok_or(FitError::AllFitsFailed)
}

/// Maximum number of digits after the decimal point over the example
/// targets (0 when all targets are integers).
pub fn infer_target_precision(examples: &[ExamplePair]) -> Result<u32, FitError> {
    let mut decimals = 0u32;
    for pair in examples {
        let raw = pair.target.raw().trim();
        if !pair.target.is_numeric() {
            return Err(FitError::NonNumericTarget(raw.to_string()));
        }
        if let Some(dot) = raw.find('.') {
            let count =
                raw[dot + 1..].chars().take_while(|c| c.is_ascii_digit()).count() as u32;
            decimals = decimals.max(count);
        }
    }
    Ok(decimals)
}

/// Splits example pairs into fit points, reporting the non-numeric pairs
/// that had to be dropped.
pub fn numeric_points(examples: &[ExamplePair]) -> (Vec<(f64, f64)>, Vec<String>) {
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for pair in examples {
        match (pair.source.numeric(), pair.target.numeric()) {
            (Some(x), Some(y)) => points.push((x, y)),
            _ => warnings.push(format!(
                "dropped non-numeric example pair ({:?} -> {:?})",
                pair.source.raw(),
                pair.target.raw()
            )),
        }
    }
    (points, warnings)
}

/// Renders a fit as a transformation program: parse the input as a number,
/// apply the fitted formula, and format the result rounded half away from
/// zero at `decimals` fraction digits.
pub fn emit_numeric_program(fit: &FitResult, decimals: u32) -> TransformProgram {
    let expr = fit.family.program_expr(&fit.params[..fit.family.arity()]);
    let source = format!(
        "transform(x) {{\n    let v = parse_num(x)\n    return format_num({expr}, {decimals})\n}}\n"
    );
    lang::parse(&source, ProgramOrigin::NumericFit)
        .expect("emitted numeric program must always parse")
}
