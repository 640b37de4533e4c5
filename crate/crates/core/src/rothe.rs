//! Implicit time marching: starting from the initial field, one elliptic
//! step per time node produces the discrete trajectory. The classical
//! junction problem (Robin data `lambda`, `gamma` given directly) marches
//! here; the level recursion in [`crate::local_time`] reuses the same
//! marcher with level-synthesized Robin data.
//!
//! Each step uses the coefficients sampled at the step's own time node
//! (backward Euler in time), so the step at `t_k` solves
//! `rate (u^k - u^{k-1}) + A(t_k) u^k = f(t_k)` with the junction relation at
//! `t_k`.

use crate::elliptic::{assemble_step, solve_arrow_banded, EllipticStepSpec, Scheme};
use crate::error::{Error, Result};
use crate::network::{GridSpec, NetworkField};
use crate::problem::{sample_classical, ClassicalProblemData};

/// Discrete trajectory: one network field per time node `t_0..=t_{n_t}`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    fields: Vec<NetworkField>,
    grid: GridSpec,
}

impl Trajectory {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Field at time node `k`.
    pub fn field(&self, k: usize) -> &NetworkField {
        &self.fields[k]
    }

    pub fn fields(&self) -> &[NetworkField] {
        &self.fields
    }

    pub(crate) fn into_fields(self) -> Vec<NetworkField> {
        self.fields
    }

    /// Junction values as a time series.
    pub fn junction_trace(&self) -> Vec<f64> {
        self.fields.iter().map(|f| f.junction()).collect()
    }

    /// Maximum absolute value over all nodes and times.
    pub fn sup(&self) -> f64 {
        self.fields
            .iter()
            .map(crate::network::sup_norm)
            .fold(0.0, f64::max)
    }
}

/// Borrowed per-step coefficient tables for the marcher: `[k][i][j]` for the
/// ray coefficients, `[k][i]` for the weights, `[k]` for the Robin data.
pub(crate) struct TableRefs<'a> {
    pub a: &'a [Vec<Vec<f64>>],
    pub b: &'a [Vec<Vec<f64>>],
    pub c: &'a [Vec<Vec<f64>>],
    pub f: &'a [Vec<Vec<f64>>],
    pub alpha: &'a [Vec<f64>],
    pub lambda: &'a [f64],
    pub gamma: &'a [f64],
}

/// March the implicit scheme over all time nodes from `initial`.
pub(crate) fn march_tables(
    grid: &GridSpec,
    scheme: Scheme,
    tables: &TableRefs<'_>,
    initial: NetworkField,
) -> Result<Trajectory> {
    let n_t = grid.n_t();
    let rate = grid.time_rate();
    let mut fields = Vec::with_capacity(n_t + 1);
    fields.push(initial);
    for k in 1..=n_t {
        let spec = EllipticStepSpec {
            rate,
            time_index: k,
            dx: grid.dx(),
            a: &tables.a[k],
            b: &tables.b[k],
            c: &tables.c[k],
            f: &tables.f[k],
            lambda: tables.lambda[k],
            alpha: &tables.alpha[k],
            gamma: tables.gamma[k],
            prev: &fields[k - 1],
        };
        let system = assemble_step(&spec, scheme)?;
        fields.push(solve_arrow_banded(&system)?);
    }
    Ok(Trajectory {
        fields,
        grid: *grid,
    })
}

fn check_grid_matches(
    network_data: crate::network::StarNetwork,
    horizon_data: f64,
    grid: &GridSpec,
) -> Result<()> {
    if network_data != grid.network() {
        return Err(Error::InvalidArgument(format!(
            "grid network {:?} does not match problem network {:?}",
            grid.network(),
            network_data
        )));
    }
    let rel = (horizon_data - grid.horizon()).abs() / horizon_data.abs().max(1.0);
    if rel > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "grid horizon {} does not match problem horizon {}",
            grid.horizon(),
            horizon_data
        )));
    }
    Ok(())
}

/// Solve the classical junction problem on `grid`: sample the coefficients,
/// check the time rate against the scheme floor (which for the classical
/// junction condition also involves `|alpha|_W / alpha_floor`), and march
/// from `g`.
pub fn march_classical(
    data: &ClassicalProblemData,
    grid: &GridSpec,
    scheme: Scheme,
) -> Result<Trajectory> {
    check_grid_matches(data.network, data.horizon, grid)?;
    let tables = sample_classical(data, grid)?;

    let c_sup = tables
        .c
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let alpha_scan = crate::problem::scan3(std::slice::from_ref(&tables.alpha), grid);
    let alpha_w = alpha_scan.sup + alpha_scan.lip;
    let floor = crate::certificates::classical_rate_floor(c_sup, alpha_w, data.alpha_floor);
    if grid.time_rate() < floor {
        return Err(Error::BelowThreshold {
            quantity: "n_t",
            rate: grid.time_rate(),
            floor,
            formula: crate::certificates::CLASSICAL_FLOOR_FORMULA.to_string(),
        });
    }

    let refs = TableRefs {
        a: &tables.a,
        b: &tables.b,
        c: &tables.c,
        f: &tables.f,
        alpha: &tables.alpha,
        lambda: &tables.lambda,
        gamma: &tables.gamma,
    };
    march_tables(grid, scheme, &refs, tables.g.clone())
}

/// Piecewise-linear time interpolant of the trajectory, evaluated at `t`.
/// This is the interpolant whose limit object the a priori bounds control;
/// it is exact at the time nodes.
pub fn interpolant_v(traj: &Trajectory, t: f64) -> Result<NetworkField> {
    let grid = traj.grid();
    let horizon = grid.horizon();
    if !(0.0..=horizon * (1.0 + 1e-12)).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "interpolation time {t} outside [0, {horizon}]"
        )));
    }
    let dt = grid.dt();
    let k = ((t / dt).floor() as usize).min(grid.n_t().saturating_sub(1));
    let theta = ((t - grid.t_node(k)) / dt).clamp(0.0, 1.0);
    let left = traj.field(k);
    let right = traj.field(k + 1);
    let rows: Vec<Vec<f64>> = (0..left.ray_count())
        .map(|i| {
            (0..left.nodes_per_ray())
                .map(|j| (1.0 - theta) * left.value(i, j) + theta * right.value(i, j))
                .collect()
        })
        .collect();
    NetworkField::from_dense(&rows, f64::INFINITY)
}

/// Per-step discrete time-derivative norms of a trajectory:
/// `rate * |u^k - u^{k-1}|` over all nodes and at the junction alone.
#[derive(Clone, Debug)]
pub struct TimeDerivativeNorms {
    /// `rate * sup |u^k - u^{k-1}|`, index `k - 1` for `k = 1..=n_t`.
    pub per_step_sup: Vec<f64>,
    /// `rate * |u^k(0) - u^{k-1}(0)|`, same indexing.
    pub per_step_junction: Vec<f64>,
    pub max_sup: f64,
    pub max_junction: f64,
}

/// Difference quotients in time of a trajectory.
pub fn discrete_time_derivative(traj: &Trajectory) -> TimeDerivativeNorms {
    let rate = traj.grid().time_rate();
    let mut per_step_sup = Vec::new();
    let mut per_step_junction = Vec::new();
    for w in traj.fields().windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let mut sup: f64 = 0.0;
        for i in 0..prev.ray_count() {
            for j in 0..prev.nodes_per_ray() {
                sup = sup.max((next.value(i, j) - prev.value(i, j)).abs());
            }
        }
        per_step_sup.push(rate * sup);
        per_step_junction.push(rate * (next.junction() - prev.junction()).abs());
    }
    let max_sup = per_step_sup.iter().copied().fold(0.0, f64::max);
    let max_junction = per_step_junction.iter().copied().fold(0.0, f64::max);
    TimeDerivativeNorms {
        per_step_sup,
        per_step_junction,
        max_sup,
        max_junction,
    }
}

/// Max over times, rays and interior nodes of the centered first difference
/// of a trajectory.
pub fn gradient_sup(traj: &Trajectory) -> f64 {
    let dx = traj.grid().dx();
    let mut sup: f64 = 0.0;
    for field in traj.fields() {
        let n_x = field.nodes_per_ray() - 1;
        for i in 0..field.ray_count() {
            for j in 1..n_x {
                sup = sup
                    .max(((field.value(i, j + 1) - field.value(i, j - 1)) / (2.0 * dx)).abs());
            }
        }
    }
    sup
}

/// Max over times, rays and interior nodes of the second difference of a
/// trajectory.
pub fn second_difference_sup(traj: &Trajectory) -> f64 {
    let dx = traj.grid().dx();
    let mut sup: f64 = 0.0;
    for field in traj.fields() {
        let n_x = field.nodes_per_ray() - 1;
        for i in 0..field.ray_count() {
            for j in 1..n_x {
                let second = (field.value(i, j + 1) - 2.0 * field.value(i, j)
                    + field.value(i, j - 1))
                    / (dx * dx);
                sup = sup.max(second.abs());
            }
        }
    }
    sup
}
