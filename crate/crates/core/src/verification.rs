//! Verification machinery: manufactured solutions, refinement sweeps,
//! comparison experiments, and the Hölder interpolation self-check.
//!
//! Nothing here feeds back into the solver; these are the instruments used
//! to measure it.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::elliptic::Scheme;
use crate::error::{Error, Result};
use crate::local_time::{run_backward, BetaMode};
use crate::network::{build_grid, SolutionCube, StarNetwork, Thresholds};
use crate::problem::{CoefficientField, DeclaredNorms, ProblemData};
use crate::rothe::Trajectory;

/// Scalar profile of the extra variable.
pub type LevelProfile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Exact solution as a closure of `(t, x, l)`.
pub type ExactSolution = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// A problem with a known exact solution.
pub struct ManufacturedCase {
    pub data: ProblemData,
    pub exact: ExactSolution,
    pub description: String,
}

/// Build the separable manufactured solution
/// `u(t, x, l) = e^{-t} cos(pi x / R) h(l)` on a star with constant
/// coefficients `a, b, c`, junction absorption `r`, and equal junction
/// weights `alpha`.
///
/// The source, junction free term, terminal and initial data are synthesized
/// so that `u` solves the system exactly:
/// the cosine makes the ray ends flat (homogeneous Neumann) and the junction
/// flux vanish, so the junction relation reduces to
/// `phi = e^{-t} (h'(l) - r h(l))`. The profile must satisfy `h(l_max) = 1`
/// so the Dirichlet plane is consistent.
#[allow(clippy::too_many_arguments)]
pub fn manufactured_cosine(
    network: StarNetwork,
    horizon: f64,
    l_max: f64,
    a: f64,
    b: f64,
    c: f64,
    r: f64,
    alpha: f64,
    h: LevelProfile,
    h_prime: LevelProfile,
) -> Result<ManufacturedCase> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "manufactured diffusion must be positive, got {a}"
        )));
    }
    if r < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "manufactured absorption must be nonnegative, got {r}"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "manufactured junction weight must be positive, got {alpha}"
        )));
    }
    let top = h(l_max);
    if (top - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "level profile must equal 1 at l_max so the terminal plane matches; h({l_max}) = {top}"
        )));
    }

    let ray_count = network.ray_count();
    let rr = network.ray_length();
    let omega = PI / rr;

    let exact: ExactSolution = {
        let h = Arc::clone(&h);
        Arc::new(move |t: f64, x: f64, l: f64| (-t).exp() * (omega * x).cos() * h(l))
    };

    let f = {
        let h = Arc::clone(&h);
        CoefficientField::from_fn(move |t, x, l| {
            (-t).exp()
                * h(l)
                * ((a * omega * omega + c - 1.0) * (omega * x).cos()
                    - b * omega * (omega * x).sin())
        })
    };
    let phi = {
        let h = Arc::clone(&h);
        let hp = Arc::clone(&h_prime);
        CoefficientField::from_fn(move |t, _x, l| (-t).exp() * (hp(l) - r * h(l)))
    };
    let psi = CoefficientField::from_fn(move |t, x, _l| (-t).exp() * (omega * x).cos());
    let g = {
        let h = Arc::clone(&h);
        CoefficientField::from_fn(move |_t, x, l| (omega * x).cos() * h(l))
    };
    let g_dl_junction = {
        let hp = Arc::clone(&h_prime);
        CoefficientField::from_fn(move |_t, _x, l| hp(l))
    };

    let data = ProblemData {
        network,
        horizon,
        l_max,
        a: CoefficientField::constant(a).per_ray(ray_count),
        b: CoefficientField::constant(b).per_ray(ray_count),
        c: CoefficientField::constant(c).per_ray(ray_count),
        f: f.per_ray(ray_count),
        alpha: CoefficientField::constant(alpha).per_ray(ray_count),
        r: CoefficientField::constant(r),
        phi,
        psi: psi.per_ray(ray_count),
        g: g.per_ray(ray_count),
        g_dl_junction: Some(g_dl_junction),
        a_floor: a,
        alpha_floor: alpha,
        norms: DeclaredNorms::default(),
    };

    Ok(ManufacturedCase {
        data,
        exact,
        description: format!(
            "separable cosine: u = e^(-t) cos(pi x / R) h(l), a={a}, b={b}, c={c}, r={r}"
        ),
    })
}

/// Sup and node-weighted root-mean-square error norms.
#[derive(Clone, Copy, Debug)]
pub struct ErrorNorms {
    pub sup: f64,
    pub rms: f64,
}

/// Error of a solution cube against an exact solution, over every grid node
/// of every level and time step.
pub fn cube_error(cube: &SolutionCube, exact: &ExactSolution) -> ErrorNorms {
    let grid = cube.grid();
    let mut sup: f64 = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for p in 0..=grid.n_l() {
        let l = grid.l_node(p);
        for k in 0..=grid.n_t() {
            let t = grid.t_node(k);
            let field = cube.field(p, k);
            for i in 0..field.ray_count() {
                for j in 0..=grid.n_x() {
                    let err = field.value(i, j) - exact(t, grid.x_node(j), l);
                    sup = sup.max(err.abs());
                    sum_sq += err * err;
                    count += 1;
                }
            }
        }
    }
    ErrorNorms {
        sup,
        rms: (sum_sq / count as f64).sqrt(),
    }
}

/// Error of a classical trajectory against an exact solution of `(t, x)`.
pub fn trajectory_error(traj: &Trajectory, exact: &dyn Fn(f64, f64) -> f64) -> ErrorNorms {
    let grid = traj.grid();
    let mut sup: f64 = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for k in 0..=grid.n_t() {
        let t = grid.t_node(k);
        let field = traj.field(k);
        for i in 0..field.ray_count() {
            for j in 0..=grid.n_x() {
                let err = field.value(i, j) - exact(t, grid.x_node(j));
                sup = sup.max(err.abs());
                sum_sq += err * err;
                count += 1;
            }
        }
    }
    ErrorNorms {
        sup,
        rms: (sum_sq / count as f64).sqrt(),
    }
}

/// Least-squares slope of `log(error)` against `log(spacing)`.
///
/// Needs at least three points, strictly decreasing positive spacings, and
/// positive errors (an error hitting zero means the sequence has left the
/// asymptotic regime and a slope would be meaningless).
pub fn convergence_order(errors: &[f64], spacings: &[f64]) -> Result<f64> {
    if errors.len() != spacings.len() {
        return Err(Error::InvalidArgument(format!(
            "convergence fit needs matching lengths, got {} errors and {} spacings",
            errors.len(),
            spacings.len()
        )));
    }
    if errors.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "convergence fit needs at least 3 points, got {}",
            errors.len()
        )));
    }
    for pair in spacings.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::InvalidArgument(
                "spacings must be strictly decreasing".to_string(),
            ));
        }
    }
    if spacings.iter().any(|&h| !(h > 0.0)) || errors.iter().any(|&e| !(e > 0.0) || !e.is_finite())
    {
        return Err(Error::InvalidArgument(
            "convergence fit needs positive finite errors and spacings".to_string(),
        ));
    }
    let xs: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - x_mean) * (y - y_mean);
        den += (x - x_mean) * (x - x_mean);
    }
    Ok(num / den)
}

/// Grid axis being refined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Time,
    Space,
    Level,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Time => "time",
            Axis::Space => "space",
            Axis::Level => "level",
        }
    }
}

/// One refinement pair: the coarse resolution of the refined axis, its
/// spacing, and the sup difference against the doubled resolution on the
/// shared (coarse) nodes.
#[derive(Clone, Copy, Debug)]
pub struct SweepPoint {
    pub resolution: usize,
    pub spacing: f64,
    pub difference: f64,
}

/// Result of a dyadic refinement sweep along one axis.
#[derive(Clone, Debug)]
pub struct AxisSweep {
    pub axis: Axis,
    pub points: Vec<SweepPoint>,
    pub order: f64,
}

fn shared_node_difference(coarse: &SolutionCube, fine: &SolutionCube, axis: Axis) -> f64 {
    let grid = coarse.grid();
    let (mt, mx, ml) = match axis {
        Axis::Time => (2, 1, 1),
        Axis::Space => (1, 2, 1),
        Axis::Level => (1, 1, 2),
    };
    let mut worst: f64 = 0.0;
    for p in 0..=grid.n_l() {
        for k in 0..=grid.n_t() {
            let cf = coarse.field(p, k);
            let ff = fine.field(p * ml, k * mt);
            for i in 0..cf.ray_count() {
                for j in 0..=grid.n_x() {
                    worst = worst.max((cf.value(i, j) - ff.value(i, j * mx)).abs());
                }
            }
        }
    }
    worst
}

/// Refine one axis dyadically, keeping the other two fixed, and fit the
/// order of the successive self-differences on the shared coarse nodes.
///
/// Self-differences isolate the refined axis: the discretization error of
/// the frozen axes is identical in both members of a pair and cancels, so
/// the fitted slope is that axis's own order. `resolutions` must double at
/// each step and provide at least four entries (three differences).
pub fn refinement_sweep(
    case: &ManufacturedCase,
    axis: Axis,
    resolutions: &[usize],
    base: (usize, usize, usize),
    scheme: Scheme,
) -> Result<AxisSweep> {
    if resolutions.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "a sweep needs at least 4 resolutions for a 3-point fit, got {}",
            resolutions.len()
        )));
    }
    for pair in resolutions.windows(2) {
        if pair[1] != 2 * pair[0] {
            return Err(Error::InvalidArgument(format!(
                "sweep resolutions must double at each step, got {} after {}",
                pair[1], pair[0]
            )));
        }
    }
    let mut cubes = Vec::with_capacity(resolutions.len());
    let mut spacings = Vec::with_capacity(resolutions.len());
    for &m in resolutions {
        let (n_t, n_x, n_l) = match axis {
            Axis::Time => (m, base.1, base.2),
            Axis::Space => (base.0, m, base.2),
            Axis::Level => (base.0, base.1, m),
        };
        let grid = build_grid(
            case.data.network,
            case.data.horizon,
            case.data.l_max,
            n_t,
            n_x,
            n_l,
            &Thresholds::none(),
        )?;
        spacings.push(match axis {
            Axis::Time => grid.dt(),
            Axis::Space => grid.dx(),
            Axis::Level => grid.dl(),
        });
        cubes.push(run_backward(&case.data, &grid, scheme, BetaMode::Compliant)?);
    }
    let mut points = Vec::with_capacity(cubes.len() - 1);
    for w in 0..cubes.len() - 1 {
        points.push(SweepPoint {
            resolution: resolutions[w],
            spacing: spacings[w],
            difference: shared_node_difference(&cubes[w], &cubes[w + 1], axis),
        });
    }
    let diffs: Vec<f64> = points.iter().map(|p| p.difference).collect();
    let steps: Vec<f64> = points.iter().map(|p| p.spacing).collect();
    let order = convergence_order(&diffs, &steps)?;
    Ok(AxisSweep {
        axis,
        points,
        order,
    })
}

/// Outcome of a comparison experiment.
#[derive(Clone, Copy, Debug)]
pub struct ComparisonOutcome {
    /// Largest positive part of `base - perturbed`: any value above roundoff
    /// breaks the ordering.
    pub violation: f64,
    /// Largest value of `perturbed - base`: how far the perturbation
    /// actually lifted the solution.
    pub max_increase: f64,
}

/// Solve `data` twice with the positivity-preserving one-sided scheme: once
/// as given and once with the source raised by `bump >= 0` and the junction
/// free term lowered by `drop >= 0`. Both perturbations push the solution
/// up, so the base solution must stay below the perturbed one everywhere.
pub fn comparison_test(
    data: &ProblemData,
    grid: &crate::network::GridSpec,
    bump: &CoefficientField,
    drop: &CoefficientField,
) -> Result<ComparisonOutcome> {
    for k in 0..=grid.n_t() {
        for p in 0..=grid.n_l() {
            let (t, l) = (grid.t_node(k), grid.l_node(p));
            for j in 0..=grid.n_x() {
                let v = bump.eval(t, grid.x_node(j), l);
                if !(v >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "comparison bump must be nonnegative, got {v} at (t={t}, x={}, l={l})",
                        grid.x_node(j)
                    )));
                }
            }
            let w = drop.eval(t, 0.0, l);
            if !(w >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "comparison drop must be nonnegative, got {w} at (t={t}, l={l})"
                )));
            }
        }
    }

    let mut perturbed = data.clone();
    perturbed.f = data.f.iter().map(|fi| fi.plus(bump)).collect();
    perturbed.phi = data.phi.minus(drop);

    let base = run_backward(data, grid, Scheme::Upwind, BetaMode::Compliant)?;
    let lifted = run_backward(&perturbed, grid, Scheme::Upwind, BetaMode::Compliant)?;

    let mut violation: f64 = 0.0;
    let mut max_increase: f64 = 0.0;
    for p in 0..=grid.n_l() {
        for k in 0..=grid.n_t() {
            let u = base.field(p, k);
            let v = lifted.field(p, k);
            for i in 0..u.ray_count() {
                for j in 0..=grid.n_x() {
                    let gap = v.value(i, j) - u.value(i, j);
                    max_increase = max_increase.max(gap);
                    if gap < 0.0 {
                        violation = violation.max(-gap);
                    }
                }
            }
        }
    }
    Ok(ComparisonOutcome {
        violation,
        max_increase,
    })
}

// ---------------------------------------------------------------------------
// Hölder interpolation self-check
// ---------------------------------------------------------------------------

/// Measured Hölder data of a cube and the interpolation bounds derived from
/// it.
///
/// With `nu1` the time Hölder constant of the values (exponent `alpha`),
/// `nu2` the level Hölder constant (exponent `beta`), and `nu3` the space
/// Hölder constant of the forward-difference gradient (exponent `gamma`),
/// all over pairs at distance at most 1, the gradient's increments must obey
///
/// `|G(t) - G(s)| <= (2 nu3 q^(g/(1+g)) + 2 nu1 q^(1/(1+g))) |t-s|^(a g/(1+g))`
///
/// with `q = nu1 / (gamma nu3)`, and the analogous bound in the level
/// variable with `nu2` in place of `nu1`. The ratios record the worst
/// observed increment relative to its bound; at most 1 means the check
/// holds. A side is vacuous (ratio 0) when its constants fall below `1e-8`:
/// either the increments are zero or the bound is unbounded.
#[derive(Clone, Copy, Debug)]
pub struct HolderWitness {
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub time_constant: Option<f64>,
    pub level_constant: Option<f64>,
    pub time_ratio: f64,
    pub level_ratio: f64,
}

fn holder_pairs_capped(samples: &[f64], spacing: f64, exponent: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let dist = (j - i) as f64 * spacing;
            if dist > 1.0 {
                break;
            }
            worst = worst.max((samples[j] - samples[i]).abs() / dist.powf(exponent));
        }
    }
    worst
}

fn interpolation_constant(nu_axis: f64, nu3: f64, gamma: f64) -> Option<f64> {
    if nu_axis <= 1e-8 || nu3 <= 1e-8 {
        return None;
    }
    let q = nu_axis / (gamma * nu3);
    Some(2.0 * nu3 * q.powf(gamma / (1.0 + gamma)) + 2.0 * nu_axis * q.powf(1.0 / (1.0 + gamma)))
}

fn increment_ratio_capped(samples: &[f64], spacing: f64, exponent: f64, constant: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let dist = (j - i) as f64 * spacing;
            if dist > 1.0 {
                break;
            }
            let bound = constant * dist.powf(exponent);
            if bound > 0.0 {
                worst = worst.max((samples[j] - samples[i]).abs() / bound);
            }
        }
    }
    worst
}

/// Measure `nu1, nu2, nu3` on a cube and verify the interpolation bounds on
/// its forward-difference gradient. Exponents must lie in `(0, 1)`.
pub fn holder_interpolation_check(
    cube: &SolutionCube,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<HolderWitness> {
    for (name, e) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "Hölder exponent {name} must lie in (0, 1), got {e}"
            )));
        }
    }
    let grid = cube.grid();
    let (n_t, n_x, n_l) = (grid.n_t(), grid.n_x(), grid.n_l());
    let (dt, dx, dl) = (grid.dt(), grid.dx(), grid.dl());
    let ray_count = grid.network().ray_count();

    // nu1: time Hölder constant of the values along every (l, ray, node)
    // line.
    let mut nu1: f64 = 0.0;
    for p in 0..=n_l {
        for i in 0..ray_count {
            for j in 0..=n_x {
                let line: Vec<f64> = (0..=n_t).map(|k| cube.field(p, k).value(i, j)).collect();
                nu1 = nu1.max(holder_pairs_capped(&line, dt, alpha));
            }
        }
    }
    // nu2: level Hölder constant along every (t, ray, node) line.
    let mut nu2: f64 = 0.0;
    for k in 0..=n_t {
        for i in 0..ray_count {
            for j in 0..=n_x {
                let line: Vec<f64> = (0..=n_l).map(|p| cube.field(p, k).value(i, j)).collect();
                nu2 = nu2.max(holder_pairs_capped(&line, dl, beta));
            }
        }
    }
    // Forward-difference gradient lines and nu3, its space Hölder constant.
    let gradient_line = |p: usize, k: usize, i: usize| -> Vec<f64> {
        let field = cube.field(p, k);
        (0..n_x)
            .map(|j| (field.value(i, j + 1) - field.value(i, j)) / dx)
            .collect()
    };
    let mut nu3: f64 = 0.0;
    for p in 0..=n_l {
        for k in 0..=n_t {
            for i in 0..ray_count {
                nu3 = nu3.max(holder_pairs_capped(&gradient_line(p, k, i), dx, gamma));
            }
        }
    }

    let time_constant = interpolation_constant(nu1, nu3, gamma);
    let level_constant = interpolation_constant(nu2, nu3, gamma);
    let time_exponent = alpha * gamma / (1.0 + gamma);
    let level_exponent = beta * gamma / (1.0 + gamma);

    let mut time_ratio: f64 = 0.0;
    if let Some(constant) = time_constant {
        for p in 0..=n_l {
            for i in 0..ray_count {
                for j in 0..n_x {
                    let line: Vec<f64> = (0..=n_t)
                        .map(|k| {
                            let f = cube.field(p, k);
                            (f.value(i, j + 1) - f.value(i, j)) / dx
                        })
                        .collect();
                    time_ratio =
                        time_ratio.max(increment_ratio_capped(&line, dt, time_exponent, constant));
                }
            }
        }
    }
    let mut level_ratio: f64 = 0.0;
    if let Some(constant) = level_constant {
        for k in 0..=n_t {
            for i in 0..ray_count {
                for j in 0..n_x {
                    let line: Vec<f64> = (0..=n_l)
                        .map(|p| {
                            let f = cube.field(p, k);
                            (f.value(i, j + 1) - f.value(i, j)) / dx
                        })
                        .collect();
                    level_ratio = level_ratio
                        .max(increment_ratio_capped(&line, dl, level_exponent, constant));
                }
            }
        }
    }

    Ok(HolderWitness {
        nu1,
        nu2,
        nu3,
        time_constant,
        level_constant,
        time_ratio,
        level_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkField;

    #[test]
    fn convergence_order_recovers_exact_slopes() {
        let spacings: Vec<f64> = (0..4).map(|k| 0.4 / f64::powi(2.0, k)).collect();
        let quadratic: Vec<f64> = spacings.iter().map(|h| 3.7 * h * h).collect();
        let order = convergence_order(&quadratic, &spacings).unwrap();
        assert!((order - 2.0).abs() <= 1e-12, "{order}");
        let linear: Vec<f64> = spacings.iter().map(|h| 0.2 * h).collect();
        let order = convergence_order(&linear, &spacings).unwrap();
        assert!((order - 1.0).abs() <= 1e-12, "{order}");
    }

    #[test]
    fn convergence_order_rejects_bad_inputs() {
        assert!(convergence_order(&[1.0, 0.5], &[0.1, 0.05]).is_err());
        assert!(convergence_order(&[1.0, 0.5, 0.0], &[0.4, 0.2, 0.1]).is_err());
        assert!(convergence_order(&[1.0, 0.5, 0.25], &[0.4, 0.4, 0.1]).is_err());
        assert!(convergence_order(&[1.0, 0.5, 0.25], &[0.4, 0.2]).is_err());
    }

    fn spread_case() -> ManufacturedCase {
        let network = StarNetwork::new(3, 1.0).unwrap();
        manufactured_cosine(
            network,
            1.0,
            1.0,
            1.0,
            0.5,
            0.25,
            0.5,
            1.0,
            Arc::new(|l: f64| 0.5 + 0.5 * l),
            Arc::new(|_l: f64| 0.5),
        )
        .unwrap()
    }

    #[test]
    fn manufactured_case_satisfies_its_own_equations() {
        let case = spread_case();
        let u = &case.exact;
        let (a, b, c, r) = (1.0, 0.5, 0.25, 0.5);
        let h = 1e-4;
        let points = [(0.3, 0.4, 0.6), (0.7, 0.9, 0.2), (0.1, 0.05, 0.8)];
        for (t, x, l) in points {
            let ut = (u(t + h, x, l) - u(t - h, x, l)) / (2.0 * h);
            let ux = (u(t, x + h, l) - u(t, x - h, l)) / (2.0 * h);
            let uxx = (u(t, x + h, l) - 2.0 * u(t, x, l) + u(t, x - h, l)) / (h * h);
            let f = case.data.f[0].eval(t, x, l);
            let residual = ut - a * uxx + b * ux + c * u(t, x, l) - f;
            assert!(residual.abs() <= 1e-5, "interior residual {residual}");

            let ul = (u(t, 0.0, l + h) - u(t, 0.0, l - h)) / (2.0 * h);
            let flux = (-3.0 * u(t, 0.0, l) + 4.0 * u(t, h, l) - u(t, 2.0 * h, l)) / (2.0 * h);
            let phi = case.data.phi.eval(t, 0.0, l);
            let junction = ul + 3.0 * 1.0 * flux - r * u(t, 0.0, l) - phi;
            assert!(junction.abs() <= 1e-5, "junction residual {junction}");
        }
        // Terminal consistency: psi at t = 0 equals g at l = l_max.
        let psi = case.data.psi[0].eval(0.0, 0.5, 1.0);
        let g = case.data.g[0].eval(0.0, 0.5, 1.0);
        assert!((psi - g).abs() <= 1e-14);
    }

    #[test]
    fn manufactured_profile_must_close_the_terminal_plane() {
        let network = StarNetwork::new(2, 1.0).unwrap();
        let result = manufactured_cosine(
            network,
            1.0,
            1.0,
            1.0,
            0.0,
            0.0,
            0.0,
            1.0,
            Arc::new(|l: f64| 0.5 + l),
            Arc::new(|_l: f64| 1.0),
        );
        assert!(result.is_err());
    }

    #[test]
    fn time_axis_sweep_sees_first_order() {
        let case = spread_case();
        let sweep = refinement_sweep(
            &case,
            Axis::Time,
            &[8, 16, 32, 64],
            (0, 16, 8),
            Scheme::Centered,
        )
        .unwrap();
        assert!(
            (sweep.order - 1.0).abs() <= 0.4,
            "time order {}, points {:?}",
            sweep.order,
            sweep.points
        );
    }

    #[test]
    fn sweep_rejects_non_dyadic_resolutions() {
        let case = spread_case();
        assert!(refinement_sweep(&case, Axis::Time, &[8, 16, 24, 48], (0, 8, 4), Scheme::Upwind)
            .is_err());
        assert!(refinement_sweep(&case, Axis::Time, &[8, 16, 32], (0, 8, 4), Scheme::Upwind)
            .is_err());
    }

    #[test]
    fn comparison_holds_on_a_generic_problem() {
        let case = spread_case();
        let grid = build_grid(
            case.data.network,
            case.data.horizon,
            case.data.l_max,
            12,
            16,
            6,
            &Thresholds::none(),
        )
        .unwrap();
        let bump = CoefficientField::from_fn(|t, x, _l| 0.2 + 0.1 * x + 0.05 * t);
        let drop = CoefficientField::constant(0.3);
        let outcome = comparison_test(&case.data, &grid, &bump, &drop).unwrap();
        assert!(outcome.violation <= 1e-10, "violation {}", outcome.violation);
        assert!(outcome.max_increase > 1e-3, "increase {}", outcome.max_increase);
    }

    #[test]
    fn comparison_rejects_signed_perturbations() {
        let case = spread_case();
        let grid = build_grid(
            case.data.network,
            1.0,
            1.0,
            4,
            8,
            2,
            &Thresholds::none(),
        )
        .unwrap();
        let bad = CoefficientField::constant(-0.1);
        let zero = CoefficientField::constant(0.0);
        assert!(comparison_test(&case.data, &grid, &bad, &zero).is_err());
        assert!(comparison_test(&case.data, &grid, &zero, &bad).is_err());
    }

    fn analytic_cube(n_t: usize, n_x: usize, n_l: usize) -> SolutionCube {
        let network = StarNetwork::new(2, 1.0).unwrap();
        let grid = build_grid(network, 1.0, 1.0, n_t, n_x, n_l, &Thresholds::none()).unwrap();
        let mut levels = Vec::new();
        for p in 0..=n_l {
            let l = grid.l_node(p);
            let mut steps = Vec::new();
            for k in 0..=n_t {
                let t = grid.t_node(k);
                steps.push(NetworkField::from_profile(&grid, |_i, x| {
                    (-t).exp() * (PI * x).cos() * (0.5 + 0.5 * l)
                }));
            }
            levels.push(steps);
        }
        SolutionCube::new(levels, grid)
    }

    #[test]
    fn interpolation_bound_holds_on_a_smooth_cube() {
        let cube = analytic_cube(12, 24, 10);
        let witness = holder_interpolation_check(&cube, 0.5, 0.5, 0.5).unwrap();
        assert!(witness.nu1 > 0.0 && witness.nu2 > 0.0 && witness.nu3 > 0.0);
        assert!(
            witness.time_ratio <= 1.0,
            "time ratio {} with constant {:?}",
            witness.time_ratio,
            witness.time_constant
        );
        assert!(
            witness.level_ratio <= 1.0,
            "level ratio {} with constant {:?}",
            witness.level_ratio,
            witness.level_constant
        );
    }

    #[test]
    fn interpolation_check_is_vacuous_on_flat_data() {
        let network = StarNetwork::new(2, 1.0).unwrap();
        let grid = build_grid(network, 1.0, 1.0, 4, 8, 4, &Thresholds::none()).unwrap();
        let levels = vec![vec![NetworkField::constant(2, 8, 1.0); 5]; 5];
        let cube = SolutionCube::new(levels, grid);
        let witness = holder_interpolation_check(&cube, 0.5, 0.5, 0.5).unwrap();
        assert_eq!(witness.time_ratio, 0.0);
        assert_eq!(witness.level_ratio, 0.0);
        assert!(witness.time_constant.is_none());
    }

    #[test]
    fn interpolation_check_rejects_bad_exponents() {
        let cube = analytic_cube(2, 4, 2);
        assert!(holder_interpolation_check(&cube, 1.0, 0.5, 0.5).is_err());
        assert!(holder_interpolation_check(&cube, 0.5, 0.0, 0.5).is_err());
    }
}
