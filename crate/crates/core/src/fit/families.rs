//! The fitted model families and their seeds, derivatives, and renderings.
//!
//! Families live in one table ([`all_families`]); adding a new curve shape
//! means adding one [`FamilyDef`] row (evaluation, Jacobian row, seed
//! strategy, and program expression) plus its enum tag.

use serde::{Deserialize, Serialize};

use super::linalg;

/// Curve families, ordered here by the simplicity rank used for MSE ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelFamily {
    Linear,
    Polynomial2,
    Exponential,
    Rational,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 4] = [
        ModelFamily::Linear,
        ModelFamily::Polynomial2,
        ModelFamily::Exponential,
        ModelFamily::Rational,
    ];

    pub fn name(self) -> &'static str {
        self.def().name
    }

    /// Number of free parameters.
    pub fn arity(self) -> usize {
        self.def().arity
    }

    /// Preference order for MSE ties: lower is simpler.
    pub fn simplicity_rank(self) -> u8 {
        match self {
            ModelFamily::Linear => 0,
            ModelFamily::Exponential => 1,
            ModelFamily::Polynomial2 => 2,
            ModelFamily::Rational => 3,
        }
    }

    pub fn eval(self, params: &[f64], x: f64) -> f64 {
        (self.def().eval)(params, x)
    }

    /// One Jacobian row: ∂f/∂params at `x`.
    pub fn jacobian_row(self, params: &[f64], x: f64) -> Vec<f64> {
        (self.def().jacobian)(params, x)
    }

    /// Initial parameter guess for the optimizer.
    pub fn seed(self, points: &[(f64, f64)]) -> Vec<f64> {
        (self.def().seed)(points)
    }

    /// Human-readable formula with the fitted constants substituted.
    pub fn formula(self, params: &[f64]) -> String {
        (self.def().formula)(params)
    }

    /// Transformation-language expression over the bound variable `v`,
    /// constants rendered at 12 significant digits.
    pub fn program_expr(self, params: &[f64]) -> String {
        (self.def().program_expr)(params)
    }

    fn def(self) -> &'static FamilyDef {
        &all_families()[self as usize]
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub struct FamilyDef {
    pub family: ModelFamily,
    pub name: &'static str,
    pub arity: usize,
    pub eval: fn(&[f64], f64) -> f64,
    pub jacobian: fn(&[f64], f64) -> Vec<f64>,
    pub seed: fn(&[(f64, f64)]) -> Vec<f64>,
    pub formula: fn(&[f64]) -> String,
    pub program_expr: fn(&[f64]) -> String,
}

pub fn all_families() -> &'static [FamilyDef; 4] {
    &FAMILIES
}

/// Constant rendering used in emitted programs: 12 significant digits,
/// parenthesized so negative values compose inside any expression.
fn pc(value: f64) -> String {
    format!("({:.11e})", value)
}

static FAMILIES: [FamilyDef; 4] = [
    FamilyDef {
        family: ModelFamily::Linear,
        name: "Linear",
        arity: 2,
        eval: |p, x| p[0] * x + p[1],
        jacobian: |_, x| vec![x, 1.0],
        seed: seed_linear,
        formula: |p| format!("f(x) = {}*x + {}", p[0], p[1]),
        program_expr: |p| format!("{} * v + {}", pc(p[0]), pc(p[1])),
    },
    FamilyDef {
        family: ModelFamily::Polynomial2,
        name: "Polynomial2",
        arity: 3,
        eval: |p, x| p[0] * x * x + p[1] * x + p[2],
        jacobian: |_, x| vec![x * x, x, 1.0],
        seed: seed_poly2,
        formula: |p| format!("f(x) = {}*x^2 + {}*x + {}", p[0], p[1], p[2]),
        program_expr: |p| {
            format!("{} * v * v + {} * v + {}", pc(p[0]), pc(p[1]), pc(p[2]))
        },
    },
    FamilyDef {
        family: ModelFamily::Exponential,
        name: "Exponential",
        arity: 2,
        eval: |p, x| p[0] * (p[1] * x).exp(),
        jacobian: |p, x| {
            let e = (p[1] * x).exp();
            vec![e, p[0] * x * e]
        },
        seed: seed_exponential,
        formula: |p| format!("f(x) = {}*exp({}*x)", p[0], p[1]),
        program_expr: |p| format!("{} * exp({} * v)", pc(p[0]), pc(p[1])),
    },
    FamilyDef {
        family: ModelFamily::Rational,
        name: "Rational",
        arity: 3,
        eval: |p, x| (p[0] * x + p[1]) / (x + p[2]),
        jacobian: |p, x| {
            let d = x + p[2];
            vec![x / d, 1.0 / d, -(p[0] * x + p[1]) / (d * d)]
        },
        seed: seed_rational,
        formula: |p| format!("f(x) = ({}*x + {}) / (x + {})", p[0], p[1], p[2]),
        program_expr: |p| {
            format!("({} * v + {}) / (v + {})", pc(p[0]), pc(p[1]), pc(p[2]))
        },
    },
];

fn mean_y(points: &[(f64, f64)]) -> f64 {
    points.iter().map(|&(_, y)| y).sum::<f64>() / points.len() as f64
}

fn seed_linear(points: &[(f64, f64)]) -> Vec<f64> {
    let rows: Vec<(Vec<f64>, f64)> = points.iter().map(|&(x, y)| (vec![x, 1.0], y)).collect();
    linalg::least_squares(2, &rows).unwrap_or_else(|| vec![0.0, mean_y(points)])
}

fn seed_poly2(points: &[(f64, f64)]) -> Vec<f64> {
    let rows: Vec<(Vec<f64>, f64)> =
        points.iter().map(|&(x, y)| (vec![x * x, x, 1.0], y)).collect();
    linalg::least_squares(3, &rows).unwrap_or_else(|| vec![0.0, 0.0, mean_y(points)])
}

/// Log-linear regression on the positive targets: ln y = ln a + b x.
fn seed_exponential(points: &[(f64, f64)]) -> Vec<f64> {
    let rows: Vec<(Vec<f64>, f64)> = points
        .iter()
        .filter(|&&(_, y)| y > 0.0)
        .map(|&(x, y)| (vec![x, 1.0], y.ln()))
        .collect();
    if rows.len() < 2 {
        return vec![1.0, 0.1];
    }
    match linalg::least_squares(2, &rows) {
        Some(fit) => vec![fit[1].exp(), fit[0]],
        None => vec![1.0, 0.1],
    }
}

/// Linearized system: y(x + c) = a x + b, i.e. a x + b - y c = y x.
fn seed_rational(points: &[(f64, f64)]) -> Vec<f64> {
    let rows: Vec<(Vec<f64>, f64)> =
        points.iter().map(|&(x, y)| (vec![x, 1.0, -y], y * x)).collect();
    linalg::least_squares(3, &rows).unwrap_or_else(|| vec![1.0, 0.0, 1.0])
}
