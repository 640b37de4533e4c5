//! One implicit step of the time-marching scheme: an elliptic system on the
//! star network with a Robin-type junction row, assembled as an arrow-banded
//! matrix (tridiagonal ray blocks bordered by one junction row/column) and
//! solved directly.
//!
//! The step solves, for the unknown field `u` and a given previous field `v`,
//!
//! ```text
//! rate (u_i - v_i) - a_i u_i'' + b_i u_i' + c_i u_i = f_i      on each ray,
//! -lambda u(0) + sum_i alpha_i u_i'(0) = gamma                 at the junction,
//! u_i'(R) = 0                                                  at the ray ends,
//! ```
//!
//! with second derivatives always centered and first derivatives either
//! upwinded (sign-split against `b`, first order, monotone) or centered
//! (second order). The ray end folds a ghost node through the reflected
//! stencil. The junction derivative is one-sided: first order for
//! [`Scheme::Upwind`], second order (three-point) for [`Scheme::Centered`].
//!
//! Under the upwind scheme and an admissible rate the assembled matrix is,
//! after flipping the sign of the junction row, an M-matrix; this is what the
//! comparison arguments in [`crate::verification`] rely on.

use crate::error::{Error, Result};
use crate::network::NetworkField;
use serde::Serialize;

/// First-derivative discretization used by the step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Sign-split first differences; first order, monotone (M-matrix rows).
    Upwind,
    /// Centered first differences; second order, monotone only for small
    /// `|b| dx / a`.
    Centered,
}

/// Everything one implicit step needs, with coefficient tables already
/// sampled at the step's time: `a`, `b`, `c`, `f` are `[ray][node]` with
/// nodes `0..=n_x`; `alpha` is per ray; `prev` is the previous time field.
pub struct EllipticStepSpec<'a> {
    /// Reciprocal time step (the implicit scheme's `n`).
    pub rate: f64,
    /// Time step index, carried into solver errors.
    pub time_index: usize,
    pub dx: f64,
    pub a: &'a [Vec<f64>],
    pub b: &'a [Vec<f64>],
    pub c: &'a [Vec<f64>],
    pub f: &'a [Vec<f64>],
    pub lambda: f64,
    pub alpha: &'a [f64],
    pub gamma: f64,
    pub prev: &'a NetworkField,
}

/// Arrow-banded system: per-ray tridiagonal rows for nodes `1..=n_x` (row
/// index `j - 1`; `lower[0]` couples to the junction unknown) plus one
/// junction row coupling the junction value to the first one or two nodes of
/// every ray.
#[derive(Debug)]
pub struct ArrowBandedSystem {
    pub dx: f64,
    pub time_index: usize,
    pub lower: Vec<Vec<f64>>,
    pub diag: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
    pub rhs: Vec<Vec<f64>>,
    pub jn_diag: f64,
    pub jn_first: Vec<f64>,
    pub jn_second: Vec<f64>,
    pub jn_rhs: f64,
}

/// Interior row `(lower, diag, upper)` for one node.
fn interior_row(scheme: Scheme, rate: f64, a: f64, b: f64, c: f64, dx: f64) -> (f64, f64, f64) {
    let dx2 = dx * dx;
    match scheme {
        Scheme::Centered => (
            -a / dx2 - b / (2.0 * dx),
            rate + 2.0 * a / dx2 + c,
            -a / dx2 + b / (2.0 * dx),
        ),
        Scheme::Upwind => {
            if b >= 0.0 {
                (
                    -a / dx2 - b / dx,
                    rate + 2.0 * a / dx2 + b / dx + c,
                    -a / dx2,
                )
            } else {
                (
                    -a / dx2,
                    rate + 2.0 * a / dx2 - b / dx + c,
                    -a / dx2 + b / dx,
                )
            }
        }
    }
}

fn check_finite(name: &str, value: f64, ray: Option<usize>, node: Option<usize>) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        let at = match (ray, node) {
            (Some(i), Some(j)) => format!(" at ray {i}, node {j}"),
            (Some(i), None) => format!(" at ray {i}"),
            _ => String::new(),
        };
        Err(Error::InvalidData(format!(
            "non-finite step coefficient `{name}` = {value}{at}"
        )))
    }
}

/// Assemble one implicit step. Checks shapes, finiteness, strict ellipticity
/// (`a > 0`), positive junction weights and Robin coefficient, and the
/// admissibility floor `rate >= max(floor(|c|) + 1, |c|^2)` against the
/// step's own coefficient slice.
pub fn assemble_step(spec: &EllipticStepSpec<'_>, scheme: Scheme) -> Result<ArrowBandedSystem> {
    let ray_count = spec.prev.ray_count();
    let n_x = spec.prev.nodes_per_ray() - 1;
    if n_x < 2 {
        return Err(Error::InvalidData(format!(
            "a step needs at least 2 nodes per ray, got n_x = {n_x}"
        )));
    }
    for (name, table) in [("a", spec.a), ("b", spec.b), ("c", spec.c), ("f", spec.f)] {
        if table.len() != ray_count || table.iter().any(|row| row.len() != n_x + 1) {
            return Err(Error::InvalidData(format!(
                "step coefficient `{name}` must be {ray_count} rays of {} nodes",
                n_x + 1
            )));
        }
        for (i, row) in table.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                check_finite(name, v, Some(i), Some(j))?;
            }
        }
    }
    if spec.alpha.len() != ray_count {
        return Err(Error::InvalidData(format!(
            "step weights `alpha` must have {ray_count} entries, got {}",
            spec.alpha.len()
        )));
    }
    for (i, &v) in spec.alpha.iter().enumerate() {
        check_finite("alpha", v, Some(i), None)?;
        if !(v > 0.0) {
            return Err(Error::InvalidData(format!(
                "junction weight alpha[{i}] must be positive, got {v}"
            )));
        }
    }
    check_finite("lambda", spec.lambda, None, None)?;
    check_finite("gamma", spec.gamma, None, None)?;
    check_finite("rate", spec.rate, None, None)?;
    if !(spec.lambda > 0.0) {
        return Err(Error::InvalidData(format!(
            "Robin coefficient lambda must be positive, got {}",
            spec.lambda
        )));
    }
    for (i, row) in spec.a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(v > 0.0) {
                return Err(Error::InvalidData(format!(
                    "ellipticity violated: a = {v} at ray {i}, node {j}"
                )));
            }
        }
    }

    let c_sup = spec
        .c
        .iter()
        .flatten()
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let floor = crate::certificates::elliptic_rate_floor(c_sup);
    if spec.rate < floor {
        return Err(Error::BelowThreshold {
            quantity: "step rate",
            rate: spec.rate,
            floor,
            formula: crate::certificates::ELLIPTIC_FLOOR_FORMULA.to_string(),
        });
    }

    let dx = spec.dx;
    let mut lower = Vec::with_capacity(ray_count);
    let mut diag = Vec::with_capacity(ray_count);
    let mut upper = Vec::with_capacity(ray_count);
    let mut rhs = Vec::with_capacity(ray_count);
    for i in 0..ray_count {
        let mut lo = Vec::with_capacity(n_x);
        let mut di = Vec::with_capacity(n_x);
        let mut up = Vec::with_capacity(n_x);
        let mut rh = Vec::with_capacity(n_x);
        for j in 1..=n_x {
            let (l, d, u) = interior_row(
                scheme,
                spec.rate,
                spec.a[i][j],
                spec.b[i][j],
                spec.c[i][j],
                dx,
            );
            if j < n_x {
                lo.push(l);
                di.push(d);
                up.push(u);
            } else {
                // Ray end: fold the ghost node u_{n_x+1} = u_{n_x-1}
                // (reflected Neumann stencil).
                lo.push(l + u);
                di.push(d);
                up.push(0.0);
            }
            rh.push(spec.f[i][j] + spec.rate * spec.prev.value(i, j));
        }
        lower.push(lo);
        diag.push(di);
        upper.push(up);
        rhs.push(rh);
    }

    let (jn_diag, jn_first, jn_second) = match scheme {
        Scheme::Upwind => {
            let flux: f64 = spec.alpha.iter().sum::<f64>() / dx;
            (
                -spec.lambda - flux,
                spec.alpha.iter().map(|&al| al / dx).collect::<Vec<f64>>(),
                vec![0.0; ray_count],
            )
        }
        Scheme::Centered => {
            let flux: f64 = 1.5 * spec.alpha.iter().sum::<f64>() / dx;
            (
                -spec.lambda - flux,
                spec.alpha
                    .iter()
                    .map(|&al| 2.0 * al / dx)
                    .collect::<Vec<f64>>(),
                spec.alpha
                    .iter()
                    .map(|&al| -al / (2.0 * dx))
                    .collect::<Vec<f64>>(),
            )
        }
    };

    Ok(ArrowBandedSystem {
        dx,
        time_index: spec.time_index,
        lower,
        diag,
        upper,
        rhs,
        jn_diag,
        jn_first,
        jn_second,
        jn_rhs: spec.gamma,
    })
}

impl ArrowBandedSystem {
    pub fn ray_count(&self) -> usize {
        self.diag.len()
    }

    pub fn nodes_per_ray(&self) -> usize {
        self.diag[0].len()
    }

    /// Whether the system is, after flipping the sign of the junction row, an
    /// M-matrix candidate: positive diagonal, nonpositive off-diagonal, and
    /// nonnegative row sums with the junction row strictly dominant. The
    /// upwind scheme satisfies this for every admissible step; the centered
    /// scheme loses it once `|b| dx / (2a) > 1` or through its second-node
    /// junction coupling.
    pub fn is_m_matrix(&self) -> bool {
        let tol = 0.0;
        for i in 0..self.ray_count() {
            for r in 0..self.nodes_per_ray() {
                if !(self.diag[i][r] > 0.0)
                    || self.lower[i][r] > tol
                    || self.upper[i][r] > tol
                {
                    return false;
                }
                if self.lower[i][r] + self.diag[i][r] + self.upper[i][r] < -1e-12 * self.diag[i][r]
                {
                    return false;
                }
            }
        }
        // Junction row, multiplied by -1: diagonal -jn_diag must be positive,
        // off-diagonal -jn_first, -jn_second nonpositive.
        if !(-self.jn_diag > 0.0) {
            return false;
        }
        for i in 0..self.ray_count() {
            if self.jn_first[i] < -tol || self.jn_second[i] < -tol {
                return false;
            }
        }
        let row_sum: f64 = -self.jn_diag
            - self
                .jn_first
                .iter()
                .zip(&self.jn_second)
                .map(|(a, b)| a + b)
                .sum::<f64>();
        row_sum > 0.0
    }
}

/// Solve the arrow-banded system directly: Thomas elimination per ray with
/// two right-hand sides (the step data and the junction coupling column),
/// then a scalar reduction for the junction value.
pub fn solve_arrow_banded(system: &ArrowBandedSystem) -> Result<NetworkField> {
    let ray_count = system.ray_count();
    let n = system.nodes_per_ray();

    // Per-ray solves M s = rhs and M q = lower[0] * e_0, so that the ray
    // unknowns are u_i = s_i - U q_i for the junction value U.
    let mut s_all = Vec::with_capacity(ray_count);
    let mut q_all = Vec::with_capacity(ray_count);
    for i in 0..ray_count {
        let lower = &system.lower[i];
        let diag = &system.diag[i];
        let upper = &system.upper[i];
        let rhs = &system.rhs[i];
        let scale = diag
            .iter()
            .chain(lower)
            .chain(upper)
            .fold(0.0f64, |m, &v| m.max(v.abs()));

        let mut cp = vec![0.0; n];
        let mut sp = vec![0.0; n];
        let mut qp = vec![0.0; n];
        let mut piv = diag[0];
        if !piv.is_finite() || piv.abs() <= 1e-14 * scale {
            return Err(Error::DegenerateRay {
                ray: i,
                row: 0,
                time_index: system.time_index,
            });
        }
        cp[0] = upper[0] / piv;
        sp[0] = rhs[0] / piv;
        qp[0] = lower[0] / piv;
        for r in 1..n {
            let m = lower[r];
            piv = diag[r] - m * cp[r - 1];
            if !piv.is_finite() || piv.abs() <= 1e-14 * scale {
                return Err(Error::DegenerateRay {
                    ray: i,
                    row: r,
                    time_index: system.time_index,
                });
            }
            cp[r] = upper[r] / piv;
            sp[r] = (rhs[r] - m * sp[r - 1]) / piv;
            qp[r] = -m * qp[r - 1] / piv;
        }
        let mut s = vec![0.0; n];
        let mut q = vec![0.0; n];
        s[n - 1] = sp[n - 1];
        q[n - 1] = qp[n - 1];
        for r in (0..n - 1).rev() {
            s[r] = sp[r] - cp[r] * s[r + 1];
            q[r] = qp[r] - cp[r] * q[r + 1];
        }
        s_all.push(s);
        q_all.push(q);
    }

    // Junction reduction.
    let mut denom = system.jn_diag;
    let mut num = system.jn_rhs;
    for i in 0..ray_count {
        denom -= system.jn_first[i] * q_all[i][0];
        num -= system.jn_first[i] * s_all[i][0];
        if n >= 2 {
            denom -= system.jn_second[i] * q_all[i][1];
            num -= system.jn_second[i] * s_all[i][1];
        }
    }
    let jn_scale = system.jn_diag.abs()
        + system
            .jn_first
            .iter()
            .zip(&system.jn_second)
            .map(|(a, b)| a.abs() + b.abs())
            .sum::<f64>();
    if !denom.is_finite() || denom.abs() <= 1e-14 * jn_scale {
        return Err(Error::DegenerateJunction {
            time_index: system.time_index,
        });
    }
    let junction = num / denom;

    let rows: Vec<Vec<f64>> = (0..ray_count)
        .map(|i| {
            let mut row = Vec::with_capacity(n + 1);
            row.push(junction);
            for r in 0..n {
                row.push(s_all[i][r] - junction * q_all[i][r]);
            }
            row
        })
        .collect();
    let field = NetworkField::from_dense(&rows, f64::INFINITY)
        .expect("solver output has consistent shape");
    if !field.junction().is_finite()
        || (0..ray_count).any(|i| field.ray_interior(i).iter().any(|v| !v.is_finite()))
    {
        return Err(Error::DegenerateJunction {
            time_index: system.time_index,
        });
    }
    Ok(field)
}

/// Residuals of a field against one step's equations, recomputed from the
/// step data (not from a stored matrix).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EllipticResidual {
    /// Max over rays and strict-interior nodes of the discrete equation
    /// residual.
    pub interior_sup: f64,
    /// Absolute residual of the junction relation.
    pub kirchhoff_abs: f64,
    /// Max over rays of the folded ray-end row residual.
    pub neumann_abs: f64,
}

/// Evaluate the discrete residuals of `field` for the step `spec` under
/// `scheme`.
pub fn elliptic_residual(
    field: &NetworkField,
    spec: &EllipticStepSpec<'_>,
    scheme: Scheme,
) -> EllipticResidual {
    let ray_count = field.ray_count();
    let n_x = field.nodes_per_ray() - 1;
    let dx = spec.dx;

    let mut interior_sup: f64 = 0.0;
    let mut neumann_abs: f64 = 0.0;
    for i in 0..ray_count {
        for j in 1..=n_x {
            let (l, d, u) = interior_row(
                scheme,
                spec.rate,
                spec.a[i][j],
                spec.b[i][j],
                spec.c[i][j],
                dx,
            );
            let rhs = spec.f[i][j] + spec.rate * spec.prev.value(i, j);
            if j < n_x {
                let res = l * field.value(i, j - 1) + d * field.value(i, j)
                    + u * field.value(i, j + 1)
                    - rhs;
                interior_sup = interior_sup.max(res.abs());
            } else {
                let res =
                    (l + u) * field.value(i, j - 1) + d * field.value(i, j) - rhs;
                neumann_abs = neumann_abs.max(res.abs());
            }
        }
    }

    let junction = field.junction();
    let kirchhoff = match scheme {
        Scheme::Upwind => {
            let mut acc = -spec.lambda * junction;
            for i in 0..ray_count {
                acc += spec.alpha[i] * (field.value(i, 1) - junction) / dx;
            }
            acc - spec.gamma
        }
        Scheme::Centered => {
            let mut acc = -spec.lambda * junction;
            for i in 0..ray_count {
                acc += spec.alpha[i]
                    * (-3.0 * junction + 4.0 * field.value(i, 1) - field.value(i, 2))
                    / (2.0 * dx);
            }
            acc - spec.gamma
        }
    };

    EllipticResidual {
        interior_sup,
        kirchhoff_abs: kirchhoff.abs(),
        neumann_abs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_grid, GridSpec, StarNetwork, Thresholds};

    fn uniform_tables(ray_count: usize, n_x: usize, value: f64) -> Vec<Vec<f64>> {
        vec![vec![value; n_x + 1]; ray_count]
    }

    struct Tables {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        f: Vec<Vec<f64>>,
        alpha: Vec<f64>,
    }

    fn hyperbolic_tables(ray_count: usize, n_x: usize) -> Tables {
        Tables {
            a: uniform_tables(ray_count, n_x, 1.0),
            b: uniform_tables(ray_count, n_x, 0.0),
            c: uniform_tables(ray_count, n_x, 0.0),
            f: uniform_tables(ray_count, n_x, 0.0),
            alpha: vec![1.0 / ray_count as f64; ray_count],
        }
    }

    fn spec_of<'a>(
        tables: &'a Tables,
        prev: &'a NetworkField,
        grid: &GridSpec,
        rate: f64,
        lambda: f64,
        gamma: f64,
    ) -> EllipticStepSpec<'a> {
        EllipticStepSpec {
            rate,
            time_index: 1,
            dx: grid.dx(),
            a: &tables.a,
            b: &tables.b,
            c: &tables.c,
            f: &tables.f,
            lambda,
            alpha: &tables.alpha,
            gamma,
            prev,
        }
    }

    fn grid(ray_count: usize, n_x: usize) -> GridSpec {
        let net = StarNetwork::new(ray_count, 1.0).unwrap();
        build_grid(net, 1.0, 1.0, 1, n_x, 1, &Thresholds::none()).unwrap()
    }

    /// Junction value of the steady problem
    /// `u - u'' = 0, u'(R) = 0, -u(0) + sum_i alpha_i u_i'(0) = -1`
    /// with `sum alpha_i = 1`: the solution is `u(x) = cosh(x - 1) / e` on
    /// each ray (for R = 1), so `u(0) = (1 + e^{-2}) / 2`.
    const EXACT_JUNCTION: f64 = 0.567_667_641_618_306_3;

    fn solve_hyperbolic(n_x: usize, scheme: Scheme) -> NetworkField {
        let g = grid(2, n_x);
        let tables = hyperbolic_tables(2, n_x);
        let prev = NetworkField::constant(2, n_x, 0.0);
        let spec = spec_of(&tables, &prev, &g, 1.0, 1.0, -1.0);
        let system = assemble_step(&spec, scheme).unwrap();
        solve_arrow_banded(&system).unwrap()
    }

    #[test]
    fn assembled_dimensions_are_arrow_banded() {
        let g = grid(2, 2);
        let tables = hyperbolic_tables(2, 2);
        let prev = NetworkField::constant(2, 2, 0.0);
        let spec = spec_of(&tables, &prev, &g, 1.0, 1.0, -1.0);
        let system = assemble_step(&spec, Scheme::Upwind).unwrap();
        assert_eq!(system.ray_count(), 2);
        assert_eq!(system.nodes_per_ray(), 2);
        assert_eq!(system.jn_first.len(), 2);
        // Total unknowns: 1 junction + 2 rays x 2 nodes = 5.
    }

    #[test]
    fn centered_and_upwind_agree_for_zero_drift_interior() {
        let g = grid(2, 8);
        let tables = hyperbolic_tables(2, 8);
        let prev = NetworkField::constant(2, 8, 0.0);
        let spec = spec_of(&tables, &prev, &g, 1.0, 1.0, -1.0);
        let up = assemble_step(&spec, Scheme::Upwind).unwrap();
        let ce = assemble_step(&spec, Scheme::Centered).unwrap();
        assert_eq!(up.lower, ce.lower);
        assert_eq!(up.diag, ce.diag);
        assert_eq!(up.upper, ce.upper);
        // The junction rows still differ: the upwind flux is first order.
        assert_ne!(up.jn_diag, ce.jn_diag);
    }

    #[test]
    fn junction_oracle_matches_closed_form() {
        let field = solve_hyperbolic(200, Scheme::Centered);
        assert!(
            (field.junction() - EXACT_JUNCTION).abs() <= 1e-3,
            "junction {} vs {}",
            field.junction(),
            EXACT_JUNCTION
        );
        // Interior nodes follow the closed form too.
        let g = grid(2, 200);
        for j in [50, 100, 150] {
            let x = g.x_node(j);
            let exact = (x - 1.0).cosh() / 1.0f64.exp();
            assert!((field.value(0, j) - exact).abs() <= 1e-3);
        }
    }

    #[test]
    fn junction_error_shrinks_at_second_order_under_centered_scheme() {
        let errors: Vec<f64> = [50usize, 100, 200, 400]
            .iter()
            .map(|&n| (solve_hyperbolic(n, Scheme::Centered).junction() - EXACT_JUNCTION).abs())
            .collect();
        let spacings: Vec<f64> = [50.0f64, 100.0, 200.0, 400.0]
            .iter()
            .map(|n| 1.0 / n)
            .collect();
        let order = crate::verification::convergence_order(&errors, &spacings).unwrap();
        assert!((order - 2.0).abs() <= 0.3, "order {order}, errors {errors:?}");
    }

    #[test]
    fn junction_error_shrinks_at_first_order_under_upwind_scheme() {
        let errors: Vec<f64> = [50usize, 100, 200, 400]
            .iter()
            .map(|&n| (solve_hyperbolic(n, Scheme::Upwind).junction() - EXACT_JUNCTION).abs())
            .collect();
        let spacings: Vec<f64> = [50.0f64, 100.0, 200.0, 400.0]
            .iter()
            .map(|n| 1.0 / n)
            .collect();
        let order = crate::verification::convergence_order(&errors, &spacings).unwrap();
        assert!((order - 1.0).abs() <= 0.3, "order {order}, errors {errors:?}");
    }

    #[test]
    fn solve_residual_is_at_machine_scale() {
        let g = grid(2, 200);
        let tables = hyperbolic_tables(2, 200);
        let prev = NetworkField::constant(2, 200, 0.0);
        let spec = spec_of(&tables, &prev, &g, 1.0, 1.0, -1.0);
        for scheme in [Scheme::Upwind, Scheme::Centered] {
            let system = assemble_step(&spec, scheme).unwrap();
            let field = solve_arrow_banded(&system).unwrap();
            let res = elliptic_residual(&field, &spec, scheme);
            assert!(res.interior_sup <= 1e-10, "{:?}", res);
            assert!(res.kirchhoff_abs <= 1e-10, "{:?}", res);
            assert!(res.neumann_abs <= 1e-10, "{:?}", res);
        }
    }

    #[test]
    fn shifting_the_whole_field_moves_the_junction_residual_by_lambda() {
        // Every junction stencil has coefficients summing to -lambda, so a
        // constant shift by eps changes the junction residual by exactly
        // lambda * eps (and interior residuals by (rate + c) eps).
        let g = grid(2, 50);
        let tables = hyperbolic_tables(2, 50);
        let prev = NetworkField::constant(2, 50, 0.0);
        let spec = spec_of(&tables, &prev, &g, 1.0, 1.0, -1.0);
        for scheme in [Scheme::Upwind, Scheme::Centered] {
            let system = assemble_step(&spec, scheme).unwrap();
            let field = solve_arrow_banded(&system).unwrap();
            let eps = 1e-3;
            let mut shifted = field.clone();
            shifted.set_junction(field.junction() + eps);
            for i in 0..2 {
                for j in 1..=50 {
                    shifted.set_value(i, j, field.value(i, j) + eps);
                }
            }
            let res = elliptic_residual(&shifted, &spec, scheme);
            assert!(
                (res.kirchhoff_abs - 1.0 * eps).abs() <= 1e-10,
                "{:?}",
                res
            );
            assert!((res.interior_sup - 1.0 * eps).abs() <= 1e-10, "{:?}", res);
        }
    }

    #[test]
    fn zero_data_solve_is_identically_zero() {
        let g = grid(3, 16);
        let mut tables = hyperbolic_tables(3, 16);
        tables.alpha = vec![1.0; 3];
        let prev = NetworkField::constant(3, 16, 0.0);
        let spec = spec_of(&tables, &prev, &g, 1.0, 1.0, 0.0);
        let field = solve_arrow_banded(&assemble_step(&spec, Scheme::Upwind).unwrap()).unwrap();
        assert_eq!(field.junction(), 0.0);
        assert!((0..3).all(|i| (1..=16).all(|j| field.value(i, j) == 0.0)));
    }

    #[test]
    fn huge_rate_pins_the_solution_to_compatible_previous_data() {
        // prev = 5 with gamma = -5 lambda makes u = 5 an exact solution; the
        // solver reproduces it to rounding regardless of rate.
        let g = grid(2, 32);
        let tables = hyperbolic_tables(2, 32);
        let prev = NetworkField::constant(2, 32, 5.0);
        let spec = spec_of(&tables, &prev, &g, 1e8, 1.0, -5.0);
        let field = solve_arrow_banded(&assemble_step(&spec, Scheme::Upwind).unwrap()).unwrap();
        assert!((field.junction() - 5.0).abs() <= 1e-6);
        assert!((field.value(0, 16) - 5.0).abs() <= 1e-6);
    }

    #[test]
    fn upwind_rows_are_m_matrix_and_centered_can_fail() {
        let g = grid(2, 10);
        let mut tables = hyperbolic_tables(2, 10);
        tables.b = uniform_tables(2, 10, 100.0);
        let prev = NetworkField::constant(2, 10, 0.0);
        let spec = spec_of(&tables, &prev, &g, 1.0, 1.0, -1.0);
        assert!(assemble_step(&spec, Scheme::Upwind).unwrap().is_m_matrix());
        // b dx / (2a) = 5 > 1: the centered upper entry is positive.
        assert!(!assemble_step(&spec, Scheme::Centered).unwrap().is_m_matrix());
    }

    #[test]
    fn assembly_rejects_bad_data() {
        let g = grid(2, 8);
        let prev = NetworkField::constant(2, 8, 0.0);

        let mut degenerate = hyperbolic_tables(2, 8);
        degenerate.a = uniform_tables(2, 8, 0.0);
        let spec = spec_of(&degenerate, &prev, &g, 1.0, 1.0, -1.0);
        assert!(assemble_step(&spec, Scheme::Upwind).is_err());

        let mut large_c = hyperbolic_tables(2, 8);
        large_c.c = uniform_tables(2, 8, 3.0);
        let spec = spec_of(&large_c, &prev, &g, 1.0, 1.0, -1.0);
        let err = assemble_step(&spec, Scheme::Upwind).unwrap_err();
        assert!(err.to_string().contains("below admissibility threshold"));
        // rate 9 = |c|^2 is admissible again.
        let spec = spec_of(&large_c, &prev, &g, 9.0, 1.0, -1.0);
        assert!(assemble_step(&spec, Scheme::Upwind).is_ok());
    }
}
