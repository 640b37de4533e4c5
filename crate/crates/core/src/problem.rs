//! Problem data: coefficient fields, the two problem kinds (level-coupled
//! and classical junction data), assumption validation, and dense coefficient
//! sampling.
//!
//! Coefficients arrive as black-box evaluators of `(t, x, l)` (unused
//! variables are simply ignored by the data they describe: `alpha`, `r` and
//! `phi` read `(t, l)`, `psi` reads `(t, x)`, `g` reads `(x, l)`). Assumption
//! checking is therefore by grid sampling, not symbolic analysis.
//!
//! Validation is split in two:
//!
//! * [`validate_assumptions`] / [`validate_classical`] check the structural
//!   assumptions the schemes rely on: ellipticity and weight floors, the
//!   sign of `r`, junction consistency of the data, and the corner
//!   compatibility conditions relating `g`, `psi`, `phi`, `r` (respectively
//!   `lambda`, `gamma`) at `t = 0` and `x = R`.
//! * [`validate_declared`] / [`validate_declared_classical`] check that
//!   declared norm bounds cover the sampled values. Declared bounds feed the
//!   certificate constants, so a stale declaration shows up here (or as a
//!   failed certificate, when this check is skipped deliberately).
//!
//! Equality-type checks use second-order one-sided differences for the
//! derivatives they involve; their default tolerance scales like
//! `10 (dx^2 + dl^2) max(|g|, 1)` and shrinks at second order under
//! refinement for smooth data.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::network::{GridSpec, NetworkField, StarNetwork};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Shared coefficient evaluator. Must be pure: tables assume one call per
/// node yields the value.
pub type Evaluator = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// One scalar coefficient: an evaluator plus optionally declared sup and
/// Lipschitz bounds.
///
/// Declared bounds take precedence over sampled estimates when the
/// certificate constants are assembled (sampling can only underestimate a
/// norm); [`validate_declared`] checks them against the samples.
#[derive(Clone)]
pub struct CoefficientField {
    eval: Evaluator,
    declared_sup: Option<f64>,
    declared_lip: Option<f64>,
}

impl std::fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientField")
            .field("declared_sup", &self.declared_sup)
            .field("declared_lip", &self.declared_lip)
            .finish_non_exhaustive()
    }
}

impl CoefficientField {
    pub fn new(eval: Evaluator) -> Self {
        CoefficientField {
            eval,
            declared_sup: None,
            declared_lip: None,
        }
    }

    /// Constant coefficient; its sup and Lipschitz bounds are declared
    /// automatically.
    pub fn constant(value: f64) -> Self {
        CoefficientField {
            eval: Arc::new(move |_, _, _| value),
            declared_sup: Some(value.abs()),
            declared_lip: Some(0.0),
        }
    }

    pub fn from_fn(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(Arc::new(f))
    }

    pub fn from_expr(expr: Expr) -> Self {
        Self::new(expr.into_evaluator())
    }

    /// Declare `sup |coefficient|`.
    pub fn with_declared_sup(mut self, sup: f64) -> Self {
        self.declared_sup = Some(sup);
        self
    }

    /// Declare a Lipschitz constant valid in every variable.
    pub fn with_declared_lip(mut self, lip: f64) -> Self {
        self.declared_lip = Some(lip);
        self
    }

    pub fn declared_sup(&self) -> Option<f64> {
        self.declared_sup
    }

    pub fn declared_lip(&self) -> Option<f64> {
        self.declared_lip
    }

    pub fn eval(&self, t: f64, x: f64, l: f64) -> f64 {
        (self.eval)(t, x, l)
    }

    /// The same coefficient on every ray.
    pub fn per_ray(&self, ray_count: usize) -> Vec<CoefficientField> {
        vec![self.clone(); ray_count]
    }

    /// Pointwise sum; declared bounds add when both sides declare them.
    pub fn plus(&self, other: &CoefficientField) -> CoefficientField {
        let lhs = Arc::clone(&self.eval);
        let rhs = Arc::clone(&other.eval);
        CoefficientField {
            eval: Arc::new(move |t, x, l| lhs(t, x, l) + rhs(t, x, l)),
            declared_sup: sum_option(self.declared_sup, other.declared_sup),
            declared_lip: sum_option(self.declared_lip, other.declared_lip),
        }
    }

    /// Pointwise difference; declared bounds add (a bound on `u - v` is
    /// `sup u + sup v`).
    pub fn minus(&self, other: &CoefficientField) -> CoefficientField {
        let lhs = Arc::clone(&self.eval);
        let rhs = Arc::clone(&other.eval);
        CoefficientField {
            eval: Arc::new(move |t, x, l| lhs(t, x, l) - rhs(t, x, l)),
            declared_sup: sum_option(self.declared_sup, other.declared_sup),
            declared_lip: sum_option(self.declared_lip, other.declared_lip),
        }
    }
}

fn sum_option(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x + y),
        _ => None,
    }
}

/// Optional declared norms consumed by the certificate constants.
///
/// All entries are upper bounds the data author asserts; anything left out
/// is estimated by grid sampling (an underestimate, hence the uncertified
/// path). `*_lip` entries are Lipschitz constants in all variables;
/// `*_t_lip` entries are Lipschitz constants in time only.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeclaredNorms {
    pub a_sup: Option<f64>,
    pub a_lip: Option<f64>,
    pub b_sup: Option<f64>,
    pub b_lip: Option<f64>,
    pub c_sup: Option<f64>,
    pub c_lip: Option<f64>,
    pub f_sup: Option<f64>,
    pub f_lip: Option<f64>,
    pub alpha_sup: Option<f64>,
    pub alpha_lip: Option<f64>,
    pub r_sup: Option<f64>,
    pub r_lip: Option<f64>,
    pub r_t_lip: Option<f64>,
    pub phi_sup: Option<f64>,
    pub phi_lip: Option<f64>,
    pub phi_t_lip: Option<f64>,
    pub psi_sup: Option<f64>,
    pub psi_x_sup: Option<f64>,
    pub psi_junction_t_lip: Option<f64>,
    pub g_sup: Option<f64>,
    pub g_x_sup: Option<f64>,
    pub g_xx_sup: Option<f64>,
    pub g_dl_junction_sup: Option<f64>,
    pub lambda_sup: Option<f64>,
    pub lambda_lip: Option<f64>,
    pub gamma_sup: Option<f64>,
    pub gamma_lip: Option<f64>,
}

/// One instance of the level-coupled system on a star network.
///
/// Per-ray coefficients read `(t, x, l)`; `alpha` (per ray), `r` and `phi`
/// read `(t, l)`; `psi` reads `(t, x)`; `g` reads `(x, l)`.
/// `g_dl_junction`, when present, is the analytic level derivative of the
/// junction trace of `g` (a function of `l`), used for the compatibility
/// constants instead of a difference quotient.
#[derive(Clone, Debug)]
pub struct ProblemData {
    pub network: StarNetwork,
    pub horizon: f64,
    pub l_max: f64,
    pub a: Vec<CoefficientField>,
    pub b: Vec<CoefficientField>,
    pub c: Vec<CoefficientField>,
    pub f: Vec<CoefficientField>,
    pub alpha: Vec<CoefficientField>,
    pub r: CoefficientField,
    pub phi: CoefficientField,
    pub psi: Vec<CoefficientField>,
    pub g: Vec<CoefficientField>,
    pub g_dl_junction: Option<CoefficientField>,
    pub a_floor: f64,
    pub alpha_floor: f64,
    pub norms: DeclaredNorms,
}

impl ProblemData {
    pub(crate) fn check_shape(&self) -> Result<()> {
        let i = self.network.ray_count();
        for (name, len) in [
            ("a", self.a.len()),
            ("b", self.b.len()),
            ("c", self.c.len()),
            ("f", self.f.len()),
            ("alpha", self.alpha.len()),
            ("psi", self.psi.len()),
            ("g", self.g.len()),
        ] {
            if len != i {
                return Err(Error::InvalidData(format!(
                    "coefficient `{name}` has {len} rays, network has {i}"
                )));
            }
        }
        if !(self.a_floor > 0.0) {
            return Err(Error::InvalidData(format!(
                "ellipticity floor must be positive, got {}",
                self.a_floor
            )));
        }
        if !(self.alpha_floor > 0.0) {
            return Err(Error::InvalidData(format!(
                "Kirchhoff weight floor must be positive, got {}",
                self.alpha_floor
            )));
        }
        Ok(())
    }

    /// Junction trace of `g` at level `l`, read from ray 0 (validation
    /// checks the rays agree there).
    pub(crate) fn g_junction(&self, l: f64) -> f64 {
        self.g[0].eval(0.0, 0.0, l)
    }

    /// Level derivative of the junction trace of `g`: the declared analytic
    /// function when present, otherwise a second-order difference on an
    /// auxiliary grid with spacing `dl / 16` (one-sided at `l = 0`).
    pub(crate) fn g_junction_dl(&self, l: f64, dl: f64) -> f64 {
        if let Some(d) = &self.g_dl_junction {
            return d.eval(0.0, 0.0, l);
        }
        let h = dl / 16.0;
        if l >= h {
            (self.g_junction(l + h) - self.g_junction(l - h)) / (2.0 * h)
        } else {
            (-3.0 * self.g_junction(l) + 4.0 * self.g_junction(l + h) - self.g_junction(l + 2.0 * h))
                / (2.0 * h)
        }
    }
}

/// One instance of the classical-junction parabolic system: coefficients
/// without the level variable, plus Robin data `lambda`, `gamma` (functions
/// of `t`) at the junction.
#[derive(Clone, Debug)]
pub struct ClassicalProblemData {
    pub network: StarNetwork,
    pub horizon: f64,
    pub a: Vec<CoefficientField>,
    pub b: Vec<CoefficientField>,
    pub c: Vec<CoefficientField>,
    pub f: Vec<CoefficientField>,
    pub alpha: Vec<CoefficientField>,
    pub lambda: CoefficientField,
    pub gamma: CoefficientField,
    pub g: Vec<CoefficientField>,
    pub a_floor: f64,
    pub alpha_floor: f64,
    pub lambda_floor: f64,
    pub norms: DeclaredNorms,
}

impl ClassicalProblemData {
    pub(crate) fn check_shape(&self) -> Result<()> {
        let i = self.network.ray_count();
        for (name, len) in [
            ("a", self.a.len()),
            ("b", self.b.len()),
            ("c", self.c.len()),
            ("f", self.f.len()),
            ("alpha", self.alpha.len()),
            ("g", self.g.len()),
        ] {
            if len != i {
                return Err(Error::InvalidData(format!(
                    "coefficient `{name}` has {len} rays, network has {i}"
                )));
            }
        }
        if !(self.a_floor > 0.0 && self.alpha_floor > 0.0 && self.lambda_floor > 0.0) {
            return Err(Error::InvalidData(
                "floors a_floor, alpha_floor, lambda_floor must all be positive".to_string(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Dense sampling
// ---------------------------------------------------------------------------

/// Dense coefficient tables for the level-coupled system.
///
/// Layouts: 4-d tables are `[p][k][i][j]` (level, time, ray, node with
/// `j = 0..=n_x`); `alpha` is `[p][k][i]`; `r`, `phi` are `[p][k]`;
/// `psi` is one sampled plane per time step; `g` one per level.
#[derive(Debug)]
pub struct CoefficientTables {
    pub a: Vec<Vec<Vec<Vec<f64>>>>,
    pub b: Vec<Vec<Vec<Vec<f64>>>>,
    pub c: Vec<Vec<Vec<Vec<f64>>>>,
    pub f: Vec<Vec<Vec<Vec<f64>>>>,
    pub alpha: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    pub psi: Vec<NetworkField>,
    pub g: Vec<NetworkField>,
}

/// Dense coefficient tables for the classical system: 3-d tables are
/// `[k][i][j]`, `alpha` is `[k][i]`, `lambda`/`gamma` are `[k]`.
pub struct ClassicalTables {
    pub a: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<Vec<f64>>>,
    pub c: Vec<Vec<Vec<f64>>>,
    pub f: Vec<Vec<Vec<f64>>>,
    pub alpha: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub g: NetworkField,
}

fn finite(name: &str, value: f64, t: f64, x: f64, l: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteCoefficient {
            name: name.to_string(),
            value,
            t,
            x,
            l,
        })
    }
}

/// Sample every coefficient of the level-coupled system on the grid nodes.
/// Each evaluator is called exactly once per node; a non-finite value is an
/// error naming the coefficient and the node.
pub fn sample_coefficients(data: &ProblemData, grid: &GridSpec) -> Result<CoefficientTables> {
    data.check_shape()?;
    let ray_count = grid.network().ray_count();
    let (n_t, n_x, n_l) = (grid.n_t(), grid.n_x(), grid.n_l());

    let sample4 = |name: &str, fields: &[CoefficientField]| -> Result<Vec<Vec<Vec<Vec<f64>>>>> {
        let mut table = Vec::with_capacity(n_l + 1);
        for p in 0..=n_l {
            let l = grid.l_node(p);
            let mut per_k = Vec::with_capacity(n_t + 1);
            for k in 0..=n_t {
                let t = grid.t_node(k);
                let mut per_i = Vec::with_capacity(ray_count);
                for (i, field) in fields.iter().enumerate() {
                    let mut per_j = Vec::with_capacity(n_x + 1);
                    for j in 0..=n_x {
                        let x = grid.x_node(j);
                        per_j.push(finite(&format!("{name}[{i}]"), field.eval(t, x, l), t, x, l)?);
                    }
                    per_i.push(per_j);
                }
                per_k.push(per_i);
            }
            table.push(per_k);
        }
        Ok(table)
    };

    let a = sample4("a", &data.a)?;
    let b = sample4("b", &data.b)?;
    let c = sample4("c", &data.c)?;
    let f = sample4("f", &data.f)?;

    let mut alpha = Vec::with_capacity(n_l + 1);
    let mut r = Vec::with_capacity(n_l + 1);
    let mut phi = Vec::with_capacity(n_l + 1);
    for p in 0..=n_l {
        let l = grid.l_node(p);
        let mut alpha_k = Vec::with_capacity(n_t + 1);
        let mut r_k = Vec::with_capacity(n_t + 1);
        let mut phi_k = Vec::with_capacity(n_t + 1);
        for k in 0..=n_t {
            let t = grid.t_node(k);
            alpha_k.push(
                data.alpha
                    .iter()
                    .enumerate()
                    .map(|(i, field)| {
                        finite(&format!("alpha[{i}]"), field.eval(t, 0.0, l), t, 0.0, l)
                    })
                    .collect::<Result<Vec<f64>>>()?,
            );
            r_k.push(finite("r", data.r.eval(t, 0.0, l), t, 0.0, l)?);
            phi_k.push(finite("phi", data.phi.eval(t, 0.0, l), t, 0.0, l)?);
        }
        alpha.push(alpha_k);
        r.push(r_k);
        phi.push(phi_k);
    }

    let mut psi = Vec::with_capacity(n_t + 1);
    for k in 0..=n_t {
        let t = grid.t_node(k);
        let plane =
            NetworkField::from_profile(grid, |i, x| data.psi[i].eval(t, x, grid.l_max()));
        for i in 0..ray_count {
            for j in 0..=n_x {
                finite(&format!("psi[{i}]"), plane.value(i, j), t, grid.x_node(j), grid.l_max())?;
            }
        }
        psi.push(plane);
    }

    let mut g = Vec::with_capacity(n_l + 1);
    for p in 0..=n_l {
        let l = grid.l_node(p);
        let plane = NetworkField::from_profile(grid, |i, x| data.g[i].eval(0.0, x, l));
        for i in 0..ray_count {
            for j in 0..=n_x {
                finite(&format!("g[{i}]"), plane.value(i, j), 0.0, grid.x_node(j), l)?;
            }
        }
        g.push(plane);
    }

    Ok(CoefficientTables {
        a,
        b,
        c,
        f,
        alpha,
        r,
        phi,
        psi,
        g,
    })
}

/// Sample every coefficient of the classical system on the grid nodes.
pub fn sample_classical(data: &ClassicalProblemData, grid: &GridSpec) -> Result<ClassicalTables> {
    data.check_shape()?;
    let ray_count = grid.network().ray_count();
    let (n_t, n_x) = (grid.n_t(), grid.n_x());

    let sample3 = |name: &str, fields: &[CoefficientField]| -> Result<Vec<Vec<Vec<f64>>>> {
        let mut table = Vec::with_capacity(n_t + 1);
        for k in 0..=n_t {
            let t = grid.t_node(k);
            let mut per_i = Vec::with_capacity(ray_count);
            for (i, field) in fields.iter().enumerate() {
                let mut per_j = Vec::with_capacity(n_x + 1);
                for j in 0..=n_x {
                    let x = grid.x_node(j);
                    per_j.push(finite(&format!("{name}[{i}]"), field.eval(t, x, 0.0), t, x, 0.0)?);
                }
                per_i.push(per_j);
            }
            table.push(per_i);
        }
        Ok(table)
    };

    let a = sample3("a", &data.a)?;
    let b = sample3("b", &data.b)?;
    let c = sample3("c", &data.c)?;
    let f = sample3("f", &data.f)?;

    let mut alpha = Vec::with_capacity(n_t + 1);
    let mut lambda = Vec::with_capacity(n_t + 1);
    let mut gamma = Vec::with_capacity(n_t + 1);
    for k in 0..=n_t {
        let t = grid.t_node(k);
        alpha.push(
            data.alpha
                .iter()
                .enumerate()
                .map(|(i, field)| finite(&format!("alpha[{i}]"), field.eval(t, 0.0, 0.0), t, 0.0, 0.0))
                .collect::<Result<Vec<f64>>>()?,
        );
        lambda.push(finite("lambda", data.lambda.eval(t, 0.0, 0.0), t, 0.0, 0.0)?);
        gamma.push(finite("gamma", data.gamma.eval(t, 0.0, 0.0), t, 0.0, 0.0)?);
    }

    let g = NetworkField::from_profile(grid, |i, x| data.g[i].eval(0.0, x, 0.0));

    Ok(ClassicalTables {
        a,
        b,
        c,
        f,
        alpha,
        lambda,
        gamma,
        g,
    })
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// One validated assumption. For lower-bound assumptions (`value >= floor`)
/// the margin is the worst `value - floor` and passing means
/// `margin >= -tol`; for equality assumptions the margin is the worst
/// absolute residual and passing means `margin <= tol`.
#[derive(Clone, Debug, Serialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub margin: f64,
    pub tol: f64,
    pub pass: bool,
    pub worst: Option<String>,
}

/// Result of an assumption or declaration validation pass. Deterministic and
/// idempotent: the same data and grid always yield the same report.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub entries: Vec<AssumptionCheck>,
    pub pass: bool,
}

impl ValidationReport {
    fn new() -> Self {
        ValidationReport {
            entries: Vec::new(),
            pass: true,
        }
    }

    fn push_lower_bound(&mut self, name: &str, margin: f64, tol: f64, worst: Option<String>) {
        let pass = margin >= -tol;
        self.pass &= pass;
        self.entries.push(AssumptionCheck {
            name: name.to_string(),
            margin,
            tol,
            pass,
            worst,
        });
    }

    fn push_equality(&mut self, name: &str, margin: f64, tol: f64, worst: Option<String>) {
        let pass = margin <= tol;
        self.pass &= pass;
        self.entries.push(AssumptionCheck {
            name: name.to_string(),
            margin,
            tol,
            pass,
            worst,
        });
    }

    /// Concatenate another report into this one.
    pub fn merge(&mut self, other: ValidationReport) {
        self.pass &= other.pass;
        self.entries.extend(other.entries);
    }
}

/// Default tolerance for exact-zero conditions.
pub const TOL_EXACT_DEFAULT: f64 = 1e-8;

fn tol_diff_default(grid: &GridSpec, g_scale: f64) -> f64 {
    10.0 * (grid.dx() * grid.dx() + grid.dl() * grid.dl()) * g_scale.max(1.0)
}

/// Classical problems have no level axis, so their difference tolerance
/// scales with the spatial step only.
fn tol_diff_classical(grid: &GridSpec, g_scale: f64) -> f64 {
    10.0 * grid.dx() * grid.dx() * g_scale.max(1.0)
}

/// One-sided second-order derivative into a sampled profile: nodes
/// `(v0, v1, v2)` at spacing `h` from the evaluation point outward.
fn one_sided_derivative(v0: f64, v1: f64, v2: f64, h: f64) -> f64 {
    (-3.0 * v0 + 4.0 * v1 - v2) / (2.0 * h)
}

struct Tracker {
    worst: f64,
    location: Option<String>,
    take_max: bool,
}

impl Tracker {
    fn max() -> Self {
        Tracker {
            worst: f64::NEG_INFINITY,
            location: None,
            take_max: true,
        }
    }

    fn min() -> Self {
        Tracker {
            worst: f64::INFINITY,
            location: None,
            take_max: false,
        }
    }

    fn update(&mut self, value: f64, location: impl FnOnce() -> String) {
        let replace = if self.take_max {
            value > self.worst
        } else {
            value < self.worst
        };
        if replace || self.location.is_none() {
            self.worst = if self.take_max {
                self.worst.max(value)
            } else {
                self.worst.min(value)
            };
            if replace {
                self.location = Some(location());
            }
        }
    }
}

/// Validate the structural assumptions of the level-coupled system on the
/// grid nodes: ellipticity and weight floors, `r >= 0`, junction consistency
/// of `g` and `psi`, and the three corner compatibility conditions (the
/// junction relation at `t = 0` for levels below the top, flatness of `g` at
/// the ray ends, and agreement of `g` at the top level with `psi` at time
/// zero).
///
/// `tol` overrides every tolerance; `None` uses [`TOL_EXACT_DEFAULT`] for
/// exact conditions and the second-order default for difference-based ones.
pub fn validate_assumptions(
    data: &ProblemData,
    grid: &GridSpec,
    tol: Option<f64>,
) -> Result<ValidationReport> {
    data.check_shape()?;
    let tables = sample_coefficients(data, grid)?;
    let ray_count = grid.network().ray_count();
    let (n_t, n_x, n_l) = (grid.n_t(), grid.n_x(), grid.n_l());
    let (dx, dl) = (grid.dx(), grid.dl());

    let g_scale = tables
        .g
        .iter()
        .map(crate::network::sup_norm)
        .fold(0.0, f64::max);
    let tol_exact = tol.unwrap_or(TOL_EXACT_DEFAULT);
    let tol_diff = tol.unwrap_or_else(|| tol_diff_default(grid, g_scale));

    let mut report = ValidationReport::new();

    // Ellipticity floor.
    let mut t_a = Tracker::min();
    for p in 0..=n_l {
        for k in 0..=n_t {
            for i in 0..ray_count {
                for j in 0..=n_x {
                    t_a.update(tables.a[p][k][i][j] - data.a_floor, || {
                        format!(
                            "t={}, x={}, l={}, ray={i}",
                            grid.t_node(k),
                            grid.x_node(j),
                            grid.l_node(p)
                        )
                    });
                }
            }
        }
    }
    report.push_lower_bound("ellipticity: a >= a_floor", t_a.worst, tol_exact, t_a.location);

    // Kirchhoff weight floor.
    let mut t_alpha = Tracker::min();
    for p in 0..=n_l {
        for k in 0..=n_t {
            for i in 0..ray_count {
                t_alpha.update(tables.alpha[p][k][i] - data.alpha_floor, || {
                    format!("t={}, l={}, ray={i}", grid.t_node(k), grid.l_node(p))
                });
            }
        }
    }
    report.push_lower_bound(
        "junction weights: alpha >= alpha_floor",
        t_alpha.worst,
        tol_exact,
        t_alpha.location,
    );

    // Sign of the absorption rate.
    let mut t_r = Tracker::min();
    for p in 0..=n_l {
        for k in 0..=n_t {
            t_r.update(tables.r[p][k], || {
                format!("t={}, l={}", grid.t_node(k), grid.l_node(p))
            });
        }
    }
    report.push_lower_bound("absorption sign: r >= 0", t_r.worst, tol_exact, t_r.location);

    // Junction consistency of g across rays.
    let mut t_gj = Tracker::max();
    for p in 0..=n_l {
        let base = data.g[0].eval(0.0, 0.0, grid.l_node(p));
        for i in 1..ray_count {
            let v = (data.g[i].eval(0.0, 0.0, grid.l_node(p)) - base).abs();
            t_gj.update(v, || format!("l={}, ray={i}", grid.l_node(p)));
        }
    }
    report.push_equality(
        "junction consistency of g",
        t_gj.worst,
        tol_exact,
        t_gj.location,
    );

    // Junction consistency of psi across rays.
    let mut t_pj = Tracker::max();
    for k in 0..=n_t {
        let base = data.psi[0].eval(grid.t_node(k), 0.0, grid.l_max());
        for i in 1..ray_count {
            let v = (data.psi[i].eval(grid.t_node(k), 0.0, grid.l_max()) - base).abs();
            t_pj.update(v, || format!("t={}, ray={i}", grid.t_node(k)));
        }
    }
    report.push_equality(
        "junction consistency of psi",
        t_pj.worst,
        tol_exact,
        t_pj.location,
    );

    // Corner compatibility (i): the junction relation holds for g at t = 0
    // on levels below the top.
    let mut t_ci = Tracker::max();
    for p in 0..n_l {
        let l = grid.l_node(p);
        let dlg = if data.g_dl_junction.is_some() {
            data.g_junction_dl(l, dl)
        } else {
            // Second-order one-sided differences on the grid itself.
            let gj = |q: usize| tables.g[q].junction();
            if p + 2 <= n_l {
                one_sided_derivative(gj(p), gj(p + 1), gj(p + 2), dl)
            } else if p >= 1 {
                (gj(p + 1) - gj(p - 1)) / (2.0 * dl)
            } else {
                (gj(p + 1) - gj(p)) / dl
            }
        };
        let mut flux = 0.0;
        for i in 0..ray_count {
            let d = one_sided_derivative(
                tables.g[p].value(i, 0),
                tables.g[p].value(i, 1),
                tables.g[p].value(i, 2),
                dx,
            );
            flux += tables.alpha[p][0][i] * d;
        }
        let residual =
            (dlg + flux - tables.r[p][0] * tables.g[p].junction() - tables.phi[p][0]).abs();
        t_ci.update(residual, || format!("l={l}"));
    }
    report.push_equality(
        "corner compatibility (junction relation for g at t=0)",
        t_ci.worst,
        tol_diff,
        t_ci.location,
    );

    // Corner compatibility (ii): g is flat at the ray ends.
    let mut t_cii = Tracker::max();
    for p in 0..=n_l {
        for i in 0..ray_count {
            let d = one_sided_derivative(
                tables.g[p].value(i, n_x),
                tables.g[p].value(i, n_x - 1),
                tables.g[p].value(i, n_x.saturating_sub(2)),
                dx,
            )
            .abs();
            t_cii.update(d, || format!("l={}, ray={i}", grid.l_node(p)));
        }
    }
    report.push_equality(
        "corner compatibility (flatness of g at x=R)",
        t_cii.worst,
        tol_diff,
        t_cii.location,
    );

    // Corner compatibility (iii): g at the top level equals psi at t = 0.
    let mut t_ciii = Tracker::max();
    for i in 0..ray_count {
        for j in 0..=n_x {
            let v = (tables.g[n_l].value(i, j) - tables.psi[0].value(i, j)).abs();
            t_ciii.update(v, || format!("x={}, ray={i}", grid.x_node(j)));
        }
    }
    report.push_equality(
        "corner compatibility (g at top level equals psi at t=0)",
        t_ciii.worst,
        tol_exact,
        t_ciii.location,
    );

    Ok(report)
}

/// Validate the structural assumptions of the classical system: floors, the
/// Robin compatibility of `g` with `(lambda, gamma)` at `t = 0`, flatness of
/// `g` at the ray ends, and junction consistency of `g`.
pub fn validate_classical(
    data: &ClassicalProblemData,
    grid: &GridSpec,
    tol: Option<f64>,
) -> Result<ValidationReport> {
    data.check_shape()?;
    let tables = sample_classical(data, grid)?;
    let ray_count = grid.network().ray_count();
    let (n_t, n_x) = (grid.n_t(), grid.n_x());
    let dx = grid.dx();

    let g_scale = crate::network::sup_norm(&tables.g);
    let tol_exact = tol.unwrap_or(TOL_EXACT_DEFAULT);
    let tol_diff = tol.unwrap_or_else(|| tol_diff_classical(grid, g_scale));

    let mut report = ValidationReport::new();

    let mut t_a = Tracker::min();
    for k in 0..=n_t {
        for i in 0..ray_count {
            for j in 0..=n_x {
                t_a.update(tables.a[k][i][j] - data.a_floor, || {
                    format!("t={}, x={}, ray={i}", grid.t_node(k), grid.x_node(j))
                });
            }
        }
    }
    report.push_lower_bound("ellipticity: a >= a_floor", t_a.worst, tol_exact, t_a.location);

    let mut t_alpha = Tracker::min();
    let mut t_lambda = Tracker::min();
    for k in 0..=n_t {
        for i in 0..ray_count {
            t_alpha.update(tables.alpha[k][i] - data.alpha_floor, || {
                format!("t={}, ray={i}", grid.t_node(k))
            });
        }
        t_lambda.update(tables.lambda[k] - data.lambda_floor, || {
            format!("t={}", grid.t_node(k))
        });
    }
    report.push_lower_bound(
        "junction weights: alpha >= alpha_floor",
        t_alpha.worst,
        tol_exact,
        t_alpha.location,
    );
    report.push_lower_bound(
        "Robin coefficient: lambda >= lambda_floor",
        t_lambda.worst,
        tol_exact,
        t_lambda.location,
    );

    let mut t_gj = Tracker::max();
    let base = tables.g.junction();
    for i in 1..ray_count {
        t_gj.update((data.g[i].eval(0.0, 0.0, 0.0) - base).abs(), || {
            format!("ray={i}")
        });
    }
    report.push_equality(
        "junction consistency of g",
        t_gj.worst,
        tol_exact,
        t_gj.location,
    );

    // Robin compatibility at t = 0:
    // -lambda(0) g(0) + sum_i alpha_i(0) d_x g_i(0) = gamma(0).
    let mut flux = 0.0;
    for i in 0..ray_count {
        let d = one_sided_derivative(
            tables.g.value(i, 0),
            tables.g.value(i, 1),
            tables.g.value(i, 2),
            dx,
        );
        flux += tables.alpha[0][i] * d;
    }
    let residual = (-tables.lambda[0] * tables.g.junction() + flux - tables.gamma[0]).abs();
    report.push_equality(
        "corner compatibility (Robin relation for g at t=0)",
        residual,
        tol_diff,
        None,
    );

    let mut t_cii = Tracker::max();
    for i in 0..ray_count {
        let d = one_sided_derivative(
            tables.g.value(i, n_x),
            tables.g.value(i, n_x - 1),
            tables.g.value(i, n_x.saturating_sub(2)),
            dx,
        )
        .abs();
        t_cii.update(d, || format!("ray={i}"));
    }
    report.push_equality(
        "corner compatibility (flatness of g at x=R)",
        t_cii.worst,
        tol_diff,
        t_cii.location,
    );

    Ok(report)
}

// ---------------------------------------------------------------------------
// Declared-bound validation
// ---------------------------------------------------------------------------

pub(crate) struct SampledGroup {
    pub sup: f64,
    pub lip: f64,
    pub t_lip: f64,
}

/// Sup, all-axis adjacent quotient, and time-axis quotient of a `[p][k][i][j]`
/// table.
pub(crate) fn scan4(table: &[Vec<Vec<Vec<f64>>>], grid: &GridSpec) -> SampledGroup {
    let mut sup: f64 = 0.0;
    let mut lip: f64 = 0.0;
    let mut t_lip: f64 = 0.0;
    let (dt, dx, dl) = (grid.dt(), grid.dx(), grid.dl());
    for p in 0..table.len() {
        for k in 0..table[p].len() {
            for i in 0..table[p][k].len() {
                for j in 0..table[p][k][i].len() {
                    let v = table[p][k][i][j];
                    sup = sup.max(v.abs());
                    if j + 1 < table[p][k][i].len() {
                        lip = lip.max((table[p][k][i][j + 1] - v).abs() / dx);
                    }
                    if k + 1 < table[p].len() {
                        let q = (table[p][k + 1][i][j] - v).abs() / dt;
                        lip = lip.max(q);
                        t_lip = t_lip.max(q);
                    }
                    if p + 1 < table.len() {
                        lip = lip.max((table[p + 1][k][i][j] - v).abs() / dl);
                    }
                }
            }
        }
    }
    SampledGroup { sup, lip, t_lip }
}

/// Same for a `[p][k]` junction table (axes: level, time).
pub(crate) fn scan2(table: &[Vec<f64>], grid: &GridSpec) -> SampledGroup {
    let mut sup: f64 = 0.0;
    let mut lip: f64 = 0.0;
    let mut t_lip: f64 = 0.0;
    let (dt, dl) = (grid.dt(), grid.dl());
    for p in 0..table.len() {
        for k in 0..table[p].len() {
            let v = table[p][k];
            sup = sup.max(v.abs());
            if k + 1 < table[p].len() {
                let q = (table[p][k + 1] - v).abs() / dt;
                lip = lip.max(q);
                t_lip = t_lip.max(q);
            }
            if p + 1 < table.len() {
                lip = lip.max((table[p + 1][k] - v).abs() / dl);
            }
        }
    }
    SampledGroup { sup, lip, t_lip }
}

/// Same for a `[p][k][i]` table (axes: level, time; rays pooled).
pub(crate) fn scan3(table: &[Vec<Vec<f64>>], grid: &GridSpec) -> SampledGroup {
    let mut sup: f64 = 0.0;
    let mut lip: f64 = 0.0;
    let mut t_lip: f64 = 0.0;
    let (dt, dl) = (grid.dt(), grid.dl());
    for p in 0..table.len() {
        for k in 0..table[p].len() {
            for i in 0..table[p][k].len() {
                let v = table[p][k][i];
                sup = sup.max(v.abs());
                if k + 1 < table[p].len() {
                    let q = (table[p][k + 1][i] - v).abs() / dt;
                    lip = lip.max(q);
                    t_lip = t_lip.max(q);
                }
                if p + 1 < table.len() {
                    lip = lip.max((table[p + 1][k][i] - v).abs() / dl);
                }
            }
        }
    }
    SampledGroup { sup, lip, t_lip }
}

/// Sampled sup of the first spatial derivative of a plane (centered in the
/// interior, second-order one-sided at both ends).
pub(crate) fn plane_dx_sup(plane: &NetworkField, dx: f64) -> f64 {
    let n_x = plane.nodes_per_ray() - 1;
    let mut sup: f64 = 0.0;
    for i in 0..plane.ray_count() {
        sup = sup.max(
            one_sided_derivative(plane.value(i, 0), plane.value(i, 1), plane.value(i, 2), dx)
                .abs(),
        );
        for j in 1..n_x {
            sup = sup.max(((plane.value(i, j + 1) - plane.value(i, j - 1)) / (2.0 * dx)).abs());
        }
        sup = sup.max(
            one_sided_derivative(
                plane.value(i, n_x),
                plane.value(i, n_x - 1),
                plane.value(i, n_x - 2),
                dx,
            )
            .abs(),
        );
    }
    sup
}

/// Sampled sup of the second spatial derivative of a plane (interior second
/// differences).
pub(crate) fn plane_dxx_sup(plane: &NetworkField, dx: f64) -> f64 {
    let n_x = plane.nodes_per_ray() - 1;
    let mut sup: f64 = 0.0;
    for i in 0..plane.ray_count() {
        for j in 1..n_x {
            let second =
                (plane.value(i, j + 1) - 2.0 * plane.value(i, j) + plane.value(i, j - 1))
                    / (dx * dx);
            sup = sup.max(second.abs());
        }
    }
    sup
}

fn group_declared(fields: &[CoefficientField], pick_sup: bool) -> Option<f64> {
    let mut worst: f64 = 0.0;
    for field in fields {
        let v = if pick_sup {
            field.declared_sup()
        } else {
            field.declared_lip()
        }?;
        worst = worst.max(v);
    }
    Some(worst)
}

/// Effective sup/Lipschitz bounds of a coefficient group: the declared-norm
/// bag wins, then per-field declarations, then the sampled estimate.
pub(crate) fn effective(
    bag_value: Option<f64>,
    fields_declared: Option<f64>,
    sampled: f64,
) -> f64 {
    bag_value.or(fields_declared).unwrap_or(sampled)
}

pub(crate) fn group_sup(bag: Option<f64>, fields: &[CoefficientField], sampled: f64) -> f64 {
    effective(bag, group_declared(fields, true), sampled)
}

pub(crate) fn group_lip(bag: Option<f64>, fields: &[CoefficientField], sampled: f64) -> f64 {
    effective(bag, group_declared(fields, false), sampled)
}

/// Check that declared norm bounds cover the sampled values of the
/// level-coupled data. Declared bounds feed the certificate constants; a
/// declaration below the samples means the certificates would use stale
/// constants.
pub fn validate_declared(data: &ProblemData, grid: &GridSpec) -> Result<ValidationReport> {
    let tables = sample_coefficients(data, grid)?;
    let mut report = ValidationReport::new();
    let tol = TOL_EXACT_DEFAULT;

    let mut check = |name: &str, declared: Option<f64>, sampled: f64| {
        if let Some(d) = declared {
            report.push_lower_bound(
                &format!("declared {name} covers samples"),
                d - sampled,
                tol,
                None,
            );
        }
    };

    let groups: [(&str, &[CoefficientField], &SampledGroup); 4] = [
        ("a", &data.a, &scan4(&tables.a, grid)),
        ("b", &data.b, &scan4(&tables.b, grid)),
        ("c", &data.c, &scan4(&tables.c, grid)),
        ("f", &data.f, &scan4(&tables.f, grid)),
    ];
    let bag = &data.norms;
    let bag_sups = [bag.a_sup, bag.b_sup, bag.c_sup, bag.f_sup];
    let bag_lips = [bag.a_lip, bag.b_lip, bag.c_lip, bag.f_lip];
    for (idx, (name, fields, sampled)) in groups.iter().enumerate() {
        check(
            &format!("{name}_sup"),
            bag_sups[idx].or(group_declared(fields, true)),
            sampled.sup,
        );
        check(
            &format!("{name}_lip"),
            bag_lips[idx].or(group_declared(fields, false)),
            sampled.lip,
        );
    }

    let alpha_scan = scan3(&tables.alpha, grid);
    check(
        "alpha_sup",
        bag.alpha_sup.or(group_declared(&data.alpha, true)),
        alpha_scan.sup,
    );
    check(
        "alpha_lip",
        bag.alpha_lip.or(group_declared(&data.alpha, false)),
        alpha_scan.lip,
    );

    let r_scan = scan2(&tables.r, grid);
    check("r_sup", bag.r_sup.or(data.r.declared_sup()), r_scan.sup);
    check("r_lip", bag.r_lip.or(data.r.declared_lip()), r_scan.lip);
    check("r_t_lip", bag.r_t_lip, r_scan.t_lip);

    let phi_scan = scan2(&tables.phi, grid);
    check("phi_sup", bag.phi_sup.or(data.phi.declared_sup()), phi_scan.sup);
    check("phi_lip", bag.phi_lip.or(data.phi.declared_lip()), phi_scan.lip);
    check("phi_t_lip", bag.phi_t_lip, phi_scan.t_lip);

    let psi_sup = tables
        .psi
        .iter()
        .map(crate::network::sup_norm)
        .fold(0.0, f64::max);
    check(
        "psi_sup",
        bag.psi_sup.or(group_declared(&data.psi, true)),
        psi_sup,
    );
    let psi_x = tables
        .psi
        .iter()
        .map(|plane| plane_dx_sup(plane, grid.dx()))
        .fold(0.0, f64::max);
    check("psi_x_sup", bag.psi_x_sup, psi_x);
    let psi_trace: Vec<f64> = tables.psi.iter().map(|plane| plane.junction()).collect();
    check(
        "psi_junction_t_lip",
        bag.psi_junction_t_lip,
        crate::network::lipschitz_seminorm(&psi_trace, grid.dt())?,
    );

    let g_sup = tables
        .g
        .iter()
        .map(crate::network::sup_norm)
        .fold(0.0, f64::max);
    check("g_sup", bag.g_sup.or(group_declared(&data.g, true)), g_sup);
    let g_x = tables
        .g
        .iter()
        .map(|plane| plane_dx_sup(plane, grid.dx()))
        .fold(0.0, f64::max);
    check("g_x_sup", bag.g_x_sup, g_x);
    let g_xx = tables
        .g
        .iter()
        .map(|plane| plane_dxx_sup(plane, grid.dx()))
        .fold(0.0, f64::max);
    check("g_xx_sup", bag.g_xx_sup, g_xx);

    let dl_sampled = (0..grid.n_l())
        .map(|p| data.g_junction_dl(grid.l_node(p), grid.dl()).abs())
        .fold(0.0, f64::max);
    check("g_dl_junction_sup", bag.g_dl_junction_sup, dl_sampled);

    Ok(report)
}

/// Declared-bound validation for classical data.
pub fn validate_declared_classical(
    data: &ClassicalProblemData,
    grid: &GridSpec,
) -> Result<ValidationReport> {
    let tables = sample_classical(data, grid)?;
    let mut report = ValidationReport::new();
    let tol = TOL_EXACT_DEFAULT;
    let dt = grid.dt();

    let mut check = |name: &str, declared: Option<f64>, sampled: f64| {
        if let Some(d) = declared {
            report.push_lower_bound(
                &format!("declared {name} covers samples"),
                d - sampled,
                tol,
                None,
            );
        }
    };

    // Classical tables have no level axis; reuse the 4-d scan by viewing
    // them as a single-level table.
    let as4 = |t: &[Vec<Vec<f64>>]| vec![t.to_vec()];
    let bag = &data.norms;
    for (name, fields, table, bag_sup, bag_lip) in [
        ("a", &data.a, &tables.a, bag.a_sup, bag.a_lip),
        ("b", &data.b, &tables.b, bag.b_sup, bag.b_lip),
        ("c", &data.c, &tables.c, bag.c_sup, bag.c_lip),
        ("f", &data.f, &tables.f, bag.f_sup, bag.f_lip),
    ] {
        let scan = scan4(&as4(table), grid);
        check(
            &format!("{name}_sup"),
            bag_sup.or(group_declared(fields, true)),
            scan.sup,
        );
        check(
            &format!("{name}_lip"),
            bag_lip.or(group_declared(fields, false)),
            scan.lip,
        );
    }

    let alpha_scan = scan3(std::slice::from_ref(&tables.alpha), grid);
    check(
        "alpha_sup",
        bag.alpha_sup.or(group_declared(&data.alpha, true)),
        alpha_scan.sup,
    );
    check(
        "alpha_lip",
        bag.alpha_lip.or(group_declared(&data.alpha, false)),
        alpha_scan.lip,
    );

    check(
        "lambda_sup",
        bag.lambda_sup.or(data.lambda.declared_sup()),
        tables.lambda.iter().fold(0.0f64, |m, v| m.max(v.abs())),
    );
    check(
        "lambda_lip",
        bag.lambda_lip.or(data.lambda.declared_lip()),
        crate::network::lipschitz_seminorm(&tables.lambda, dt)?,
    );
    check(
        "gamma_sup",
        bag.gamma_sup.or(data.gamma.declared_sup()),
        tables.gamma.iter().fold(0.0f64, |m, v| m.max(v.abs())),
    );
    check(
        "gamma_lip",
        bag.gamma_lip.or(data.gamma.declared_lip()),
        crate::network::lipschitz_seminorm(&tables.gamma, dt)?,
    );

    check(
        "g_sup",
        bag.g_sup.or(group_declared(&data.g, true)),
        crate::network::sup_norm(&tables.g),
    );
    check("g_x_sup", bag.g_x_sup, plane_dx_sup(&tables.g, grid.dx()));
    check("g_xx_sup", bag.g_xx_sup, plane_dxx_sup(&tables.g, grid.dx()));

    Ok(report)
}

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

/// Problem kind tag in a problem document.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    LocalTime,
    Classical,
}

/// A coefficient in a problem document: a numeric constant, one expression
/// for every ray, or one expression per ray.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffDoc {
    Const(f64),
    Expr(String),
    PerRay(Vec<String>),
}

impl CoeffDoc {
    fn into_fields(self, name: &str, ray_count: usize) -> Result<Vec<CoefficientField>> {
        match self {
            CoeffDoc::Const(v) => Ok(CoefficientField::constant(v).per_ray(ray_count)),
            CoeffDoc::Expr(src) => Ok(CoefficientField::from_expr(Expr::parse(&src)?).per_ray(ray_count)),
            CoeffDoc::PerRay(sources) => {
                if sources.len() != ray_count {
                    return Err(Error::Document(format!(
                        "coefficient `{name}` lists {} expressions for {ray_count} rays",
                        sources.len()
                    )));
                }
                sources
                    .into_iter()
                    .map(|src| Ok(CoefficientField::from_expr(Expr::parse(&src)?)))
                    .collect()
            }
        }
    }

    fn into_single(self, name: &str) -> Result<CoefficientField> {
        match self {
            CoeffDoc::Const(v) => Ok(CoefficientField::constant(v)),
            CoeffDoc::Expr(src) => Ok(CoefficientField::from_expr(Expr::parse(&src)?)),
            CoeffDoc::PerRay(_) => Err(Error::Document(format!(
                "coefficient `{name}` is a junction quantity and cannot vary per ray"
            ))),
        }
    }
}

/// Serialized problem definition. Unknown fields are rejected.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub kind: ProblemKind,
    pub ray_count: usize,
    pub ray_length: f64,
    pub horizon: f64,
    #[serde(default)]
    pub l_max: Option<f64>,
    pub a_floor: f64,
    pub alpha_floor: f64,
    #[serde(default)]
    pub lambda_floor: Option<f64>,
    pub a: CoeffDoc,
    pub b: CoeffDoc,
    pub c: CoeffDoc,
    pub f: CoeffDoc,
    pub alpha: CoeffDoc,
    #[serde(default)]
    pub r: Option<CoeffDoc>,
    #[serde(default)]
    pub phi: Option<CoeffDoc>,
    #[serde(default)]
    pub psi: Option<CoeffDoc>,
    pub g: CoeffDoc,
    #[serde(default)]
    pub g_dl_junction: Option<CoeffDoc>,
    #[serde(default)]
    pub lambda: Option<CoeffDoc>,
    #[serde(default)]
    pub gamma: Option<CoeffDoc>,
    #[serde(default)]
    pub norms: DeclaredNorms,
}

impl ProblemDoc {
    pub fn from_json(text: &str) -> Result<ProblemDoc> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }

    /// Build level-coupled problem data; errors if the document is tagged
    /// classical or misses a required field.
    pub fn into_local_time(self) -> Result<ProblemData> {
        if self.kind != ProblemKind::LocalTime {
            return Err(Error::Document(
                "document kind is `classical`, expected `local-time`".to_string(),
            ));
        }
        let network = StarNetwork::new(self.ray_count, self.ray_length)?;
        let i = self.ray_count;
        let need = |field: Option<CoeffDoc>, name: &str| {
            field.ok_or_else(|| Error::Document(format!("missing required field `{name}`")))
        };
        let l_max = self
            .l_max
            .ok_or_else(|| Error::Document("missing required field `l_max`".to_string()))?;
        Ok(ProblemData {
            network,
            horizon: self.horizon,
            l_max,
            a: self.a.into_fields("a", i)?,
            b: self.b.into_fields("b", i)?,
            c: self.c.into_fields("c", i)?,
            f: self.f.into_fields("f", i)?,
            alpha: self.alpha.into_fields("alpha", i)?,
            r: need(self.r, "r")?.into_single("r")?,
            phi: need(self.phi, "phi")?.into_single("phi")?,
            psi: need(self.psi, "psi")?.into_fields("psi", i)?,
            g: self.g.into_fields("g", i)?,
            g_dl_junction: self
                .g_dl_junction
                .map(|d| d.into_single("g_dl_junction"))
                .transpose()?,
            a_floor: self.a_floor,
            alpha_floor: self.alpha_floor,
            norms: self.norms,
        })
    }

    /// Build classical problem data; errors if the document is tagged
    /// local-time or misses a required field.
    pub fn into_classical(self) -> Result<ClassicalProblemData> {
        if self.kind != ProblemKind::Classical {
            return Err(Error::Document(
                "document kind is `local-time`, expected `classical`".to_string(),
            ));
        }
        let network = StarNetwork::new(self.ray_count, self.ray_length)?;
        let i = self.ray_count;
        let need = |field: Option<CoeffDoc>, name: &str| {
            field.ok_or_else(|| Error::Document(format!("missing required field `{name}`")))
        };
        let lambda_floor = self
            .lambda_floor
            .ok_or_else(|| Error::Document("missing required field `lambda_floor`".to_string()))?;
        Ok(ClassicalProblemData {
            network,
            horizon: self.horizon,
            a: self.a.into_fields("a", i)?,
            b: self.b.into_fields("b", i)?,
            c: self.c.into_fields("c", i)?,
            f: self.f.into_fields("f", i)?,
            alpha: self.alpha.into_fields("alpha", i)?,
            lambda: need(self.lambda, "lambda")?.into_single("lambda")?,
            gamma: need(self.gamma, "gamma")?.into_single("gamma")?,
            g: self.g.into_fields("g", i)?,
            a_floor: self.a_floor,
            alpha_floor: self.alpha_floor,
            lambda_floor,
            norms: self.norms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_grid, Thresholds};

    pub(crate) fn two_ray_grid(n_t: usize, n_x: usize, n_l: usize) -> GridSpec {
        let net = StarNetwork::new(2, 1.0).unwrap();
        build_grid(net, 1.0, 1.0, n_t, n_x, n_l, &Thresholds::none()).unwrap()
    }

    fn constant_problem(value: f64) -> ProblemData {
        let net = StarNetwork::new(2, 1.0).unwrap();
        ProblemData {
            network: net,
            horizon: 1.0,
            l_max: 1.0,
            a: CoefficientField::constant(1.0).per_ray(2),
            b: CoefficientField::constant(0.0).per_ray(2),
            c: CoefficientField::constant(0.0).per_ray(2),
            f: CoefficientField::constant(0.0).per_ray(2),
            alpha: CoefficientField::constant(1.0).per_ray(2),
            r: CoefficientField::constant(0.0),
            phi: CoefficientField::constant(0.0),
            psi: CoefficientField::constant(value).per_ray(2),
            g: CoefficientField::constant(value).per_ray(2),
            g_dl_junction: Some(CoefficientField::constant(0.0)),
            a_floor: 1.0,
            alpha_floor: 1.0,
            norms: DeclaredNorms::default(),
        }
    }

    #[test]
    fn constant_data_pass_with_zero_margins() {
        let data = constant_problem(1.0);
        let grid = two_ray_grid(4, 8, 4);
        let report = validate_assumptions(&data, &grid, None).unwrap();
        assert!(report.pass, "{report:?}");
        for entry in &report.entries {
            if entry.name.starts_with("corner compatibility") {
                assert!(entry.margin.abs() <= 1e-14, "{entry:?}");
            }
        }
    }

    #[test]
    fn ellipticity_floor_violation_reports_signed_margin() {
        let mut data = constant_problem(1.0);
        data.a = CoefficientField::constant(0.5).per_ray(2);
        let grid = two_ray_grid(2, 4, 2);
        let report = validate_assumptions(&data, &grid, None).unwrap();
        assert!(!report.pass);
        let entry = report
            .entries
            .iter()
            .find(|e| e.name.starts_with("ellipticity"))
            .unwrap();
        assert!(!entry.pass);
        assert!((entry.margin + 0.5).abs() <= 1e-15);
    }

    #[test]
    fn cosine_profile_compat_margins_shrink_at_third_order() {
        // g(x, l) = cos(pi x / R) h(l), psi(t, x) = e^{-t} cos(pi x / R),
        // h(K) = 1: the flatness residual is the one-sided difference error
        // of cos at x = R. The formula's dx^2 error term carries g''', which
        // vanishes at the flat end (sin(pi) = 0), so the residual shrinks at
        // third order here.
        let h = |l: f64| l * l;
        let make = || {
            let mut data = constant_problem(1.0);
            data.g = CoefficientField::from_fn(move |_t, x, l| {
                (std::f64::consts::PI * x).cos() * h(l)
            })
            .per_ray(2);
            data.g_dl_junction = Some(CoefficientField::from_fn(|_t, _x, l| 2.0 * l));
            data.psi =
                CoefficientField::from_fn(|t, x, _l| (-t).exp() * (std::f64::consts::PI * x).cos())
                    .per_ray(2);
            // phi matches the junction relation:
            // d_l g(0,l) + sum alpha_i d_x g_i(0,l) = h'(l) + 0.
            data.phi = CoefficientField::from_fn(|_t, _x, l| 2.0 * l);
            data
        };
        let margin_at = |n_x: usize| {
            let grid = two_ray_grid(2, n_x, 4);
            let report = validate_assumptions(&make(), &grid, None).unwrap();
            assert!(report.pass, "n_x={n_x}: {report:?}");
            report
                .entries
                .iter()
                .find(|e| e.name.contains("flatness"))
                .unwrap()
                .margin
        };
        let coarse = margin_at(64);
        let fine = margin_at(128);
        let ratio = coarse / fine;
        assert!((6.0..10.0).contains(&ratio), "ratio {ratio}");
        assert!(coarse <= 1e-3);
    }

    #[test]
    fn classical_robin_compat_examples() {
        let net = StarNetwork::new(2, 1.0).unwrap();
        let base = |gamma0: f64| ClassicalProblemData {
            network: net,
            horizon: 1.0,
            a: CoefficientField::constant(1.0).per_ray(2),
            b: CoefficientField::constant(0.0).per_ray(2),
            c: CoefficientField::constant(0.0).per_ray(2),
            f: CoefficientField::constant(0.0).per_ray(2),
            alpha: CoefficientField::constant(0.5).per_ray(2),
            lambda: CoefficientField::constant(1.0),
            gamma: CoefficientField::constant(gamma0),
            g: CoefficientField::constant(1.0).per_ray(2),
            a_floor: 1.0,
            alpha_floor: 0.5,
            lambda_floor: 1.0,
            norms: DeclaredNorms::default(),
        };
        let grid = two_ray_grid(2, 8, 1);
        assert!(validate_classical(&base(-1.0), &grid, None).unwrap().pass);

        let report = validate_classical(&base(0.0), &grid, None).unwrap();
        assert!(!report.pass);
        let entry = report
            .entries
            .iter()
            .find(|e| e.name.contains("Robin relation"))
            .unwrap();
        assert!((entry.margin - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn classical_robin_compat_for_cosh_profile() {
        // g(x) = cosh(x - R) / cosh(R): g(0) = 1, g'(0) = -tanh(R), flat at
        // x = R. With lambda = 1 and alpha_i = 1/2 the compatible gamma(0) is
        // -g(0) + sum alpha_i g'(0) = -1 - tanh(R).
        let r_len = 1.0f64;
        let net = StarNetwork::new(2, r_len).unwrap();
        let gamma0 = -1.0 - r_len.tanh();
        let data = ClassicalProblemData {
            network: net,
            horizon: 1.0,
            a: CoefficientField::constant(1.0).per_ray(2),
            b: CoefficientField::constant(0.0).per_ray(2),
            c: CoefficientField::constant(0.0).per_ray(2),
            f: CoefficientField::constant(0.0).per_ray(2),
            alpha: CoefficientField::constant(0.5).per_ray(2),
            lambda: CoefficientField::constant(1.0),
            gamma: CoefficientField::constant(gamma0),
            g: CoefficientField::from_fn(move |_t, x, _l| (x - r_len).cosh() / r_len.cosh())
                .per_ray(2),
            a_floor: 1.0,
            alpha_floor: 0.5,
            lambda_floor: 1.0,
            norms: DeclaredNorms::default(),
        };
        let grid = two_ray_grid(2, 128, 1);
        let report = validate_classical(&data, &grid, None).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn sampling_is_exact_on_polynomial_data() {
        let mut data = constant_problem(0.0);
        data.f = CoefficientField::from_fn(|t, x, l| t + x + l).per_ray(2);
        let grid = two_ray_grid(2, 2, 2);
        let tables = sample_coefficients(&data, &grid).unwrap();
        assert_eq!(tables.f[1][1][0][1], 1.5);
        assert!(tables.a.iter().flatten().flatten().flatten().all(|&v| v == 1.0));
    }

    #[test]
    fn sampling_rejects_non_finite_values() {
        let mut data = constant_problem(0.0);
        data.f = CoefficientField::from_fn(|_t, x, _l| 1.0 / x).per_ray(2);
        let grid = two_ray_grid(2, 2, 2);
        let err = sample_coefficients(&data, &grid).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("non-finite"), "{msg}");
        assert!(msg.contains("f[0]"), "{msg}");
    }

    #[test]
    fn declared_bounds_below_samples_are_flagged() {
        let mut data = constant_problem(1.0);
        data.f = CoefficientField::from_fn(|_t, x, _l| 2.0 * x)
            .with_declared_sup(0.5)
            .per_ray(2);
        let grid = two_ray_grid(2, 4, 2);
        let report = validate_declared(&data, &grid).unwrap();
        assert!(!report.pass);
        let entry = report
            .entries
            .iter()
            .find(|e| e.name.contains("f_sup"))
            .unwrap();
        assert!(entry.margin < 0.0);
    }

    #[test]
    fn problem_documents_round_trip() {
        let text = r#"{
            "kind": "local-time",
            "ray_count": 2,
            "ray_length": 1.0,
            "horizon": 1.0,
            "l_max": 1.0,
            "a_floor": 1.0,
            "alpha_floor": 1.0,
            "a": 1.0,
            "b": "0",
            "c": 0.0,
            "f": ["x", "x"],
            "alpha": 1.0,
            "r": 0.0,
            "phi": 0.0,
            "psi": 1.0,
            "g": 1.0,
            "norms": { "f_sup": 1.0 }
        }"#;
        let data = ProblemDoc::from_json(text).unwrap().into_local_time().unwrap();
        assert_eq!(data.network.ray_count(), 2);
        assert_eq!(data.f[1].eval(0.0, 0.5, 0.0), 0.5);
        assert_eq!(data.norms.f_sup, Some(1.0));

        let bad = text.replace("\"a_floor\"", "\"unknown_field\"");
        assert!(ProblemDoc::from_json(&bad).is_err());
    }

    #[test]
    fn classical_document_requires_lambda() {
        let text = r#"{
            "kind": "classical",
            "ray_count": 2,
            "ray_length": 1.0,
            "horizon": 1.0,
            "a_floor": 1.0,
            "alpha_floor": 1.0,
            "lambda_floor": 1.0,
            "a": 1.0, "b": 0.0, "c": 0.0, "f": 0.0,
            "alpha": 1.0,
            "gamma": -1.0,
            "g": 1.0
        }"#;
        let doc = ProblemDoc::from_json(text).unwrap();
        assert!(doc.into_classical().is_err());
    }
}
