//! Star-network geometry, tensor grids, network-valued fields, and the
//! discrete norms and seminorms every bound in this crate is phrased in.
//!
//! A star network is `I >= 2` copies of `[0, R]` glued at `x = 0`. A scalar
//! field on the network at a frozen `(t, l)` is one value per ray node plus a
//! single shared junction value; [`NetworkField`] stores the junction value
//! exactly once and exposes per-ray index `0` as an alias of it, so the
//! continuity condition at the junction is a representation invariant rather
//! than a tolerance check.
//!
//! Grids are uniform in each of the three directions (time, space, level):
//! the schemes in this crate use uniform steps, and their admissibility
//! thresholds are phrased as floors on the reciprocal steps `n_t / T` and
//! `n_l / K`. [`build_grid`] rejects grids below the supplied floors.

use crate::error::{Error, Result};
use serde::Serialize;

/// Geometry of the star network: `ray_count` rays of common length
/// `ray_length` glued at the junction `x = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StarNetwork {
    ray_count: usize,
    ray_length: f64,
}

impl StarNetwork {
    /// A network needs at least two rays (one ray is just an interval) and a
    /// positive common ray length.
    pub fn new(ray_count: usize, ray_length: f64) -> Result<Self> {
        if ray_count < 2 {
            return Err(Error::InvalidDomain(format!(
                "a star network needs at least 2 rays, got {ray_count}"
            )));
        }
        if !(ray_length > 0.0) || !ray_length.is_finite() {
            return Err(Error::InvalidDomain(format!(
                "ray length must be positive and finite, got {ray_length}"
            )));
        }
        Ok(Self {
            ray_count,
            ray_length,
        })
    }

    /// Number of rays `I`.
    pub fn ray_count(&self) -> usize {
        self.ray_count
    }

    /// Common ray length `R`.
    pub fn ray_length(&self) -> f64 {
        self.ray_length
    }
}

/// Admissibility floors on the reciprocal steps of a grid.
///
/// `time_rate` constrains `n_t / T` and `level_rate` constrains `n_l / K`.
/// The floors come from the scheme analysis (see
/// [`crate::certificates::elliptic_rate_floor`] and friends); grids used only
/// for sampling or validation can use [`Thresholds::none`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    /// Minimal reciprocal time step `n_t / T`.
    pub time_rate: f64,
    /// Minimal reciprocal level step `n_l / K`.
    pub level_rate: f64,
    /// Formula the time floor was computed from (for error messages).
    pub time_formula: &'static str,
    /// Formula the level floor was computed from (for error messages).
    pub level_formula: &'static str,
}

impl Thresholds {
    /// No constraints; every positive grid is accepted.
    pub fn none() -> Self {
        Thresholds {
            time_rate: 0.0,
            level_rate: 0.0,
            time_formula: "none",
            level_formula: "none",
        }
    }
}

/// Uniform tensor grid over `[0,T] x [0,R] x [0,K]`.
///
/// Nodes are `t_k = k * dt` (`k = 0..=n_t`), `x_j = j * dx` (`j = 0..=n_x`,
/// `x_0` the junction, `x_{n_x} = R`) and `l_p = p * dl` (`p = 0..=n_l`).
/// The spacings are computed once at construction and reused everywhere, so
/// no consumer re-derives them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    network: StarNetwork,
    horizon: f64,
    l_max: f64,
    n_t: usize,
    n_x: usize,
    n_l: usize,
    dt: f64,
    dx: f64,
    dl: f64,
}

/// Build a uniform grid, rejecting reciprocal steps below the supplied
/// admissibility floors.
pub fn build_grid(
    network: StarNetwork,
    horizon: f64,
    l_max: f64,
    n_t: usize,
    n_x: usize,
    n_l: usize,
    thresholds: &Thresholds,
) -> Result<GridSpec> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidDomain(format!(
            "time horizon must be positive and finite, got {horizon}"
        )));
    }
    if !(l_max > 0.0 && l_max.is_finite()) {
        return Err(Error::InvalidDomain(format!(
            "level span must be positive and finite, got {l_max}"
        )));
    }
    if n_t == 0 || n_x < 2 || n_l == 0 {
        return Err(Error::InvalidDomain(format!(
            "grid sizes must satisfy n_t >= 1, n_x >= 2, n_l >= 1, got ({n_t}, {n_x}, {n_l})"
        )));
    }
    let time_rate = n_t as f64 / horizon;
    if time_rate < thresholds.time_rate {
        return Err(Error::BelowThreshold {
            quantity: "n_t",
            rate: time_rate,
            floor: thresholds.time_rate,
            formula: thresholds.time_formula.to_string(),
        });
    }
    let level_rate = n_l as f64 / l_max;
    if level_rate < thresholds.level_rate {
        return Err(Error::BelowThreshold {
            quantity: "n_l",
            rate: level_rate,
            floor: thresholds.level_rate,
            formula: thresholds.level_formula.to_string(),
        });
    }
    Ok(GridSpec {
        network,
        horizon,
        l_max,
        n_t,
        n_x,
        n_l,
        dt: horizon / n_t as f64,
        dx: network.ray_length() / n_x as f64,
        dl: l_max / n_l as f64,
    })
}

impl GridSpec {
    pub fn network(&self) -> StarNetwork {
        self.network
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn l_max(&self) -> f64 {
        self.l_max
    }
    pub fn n_t(&self) -> usize {
        self.n_t
    }
    pub fn n_x(&self) -> usize {
        self.n_x
    }
    pub fn n_l(&self) -> usize {
        self.n_l
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dl(&self) -> f64 {
        self.dl
    }

    /// Time node `t_k = k * dt`.
    pub fn t_node(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
    /// Space node `x_j = j * dx` (index 0 is the junction).
    pub fn x_node(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }
    /// Level node `l_p = p * dl`.
    pub fn l_node(&self, p: usize) -> f64 {
        p as f64 * self.dl
    }

    /// Reciprocal time step `n_t / T`; the implicit scheme's step parameter.
    pub fn time_rate(&self) -> f64 {
        1.0 / self.dt
    }
    /// Reciprocal level step `n_l / K`; the backward recursion's step
    /// parameter.
    pub fn level_rate(&self) -> f64 {
        1.0 / self.dl
    }
}

/// One scalar field on the network at a frozen `(t, l)`.
///
/// The junction value is stored once; per-ray node `0` aliases it through the
/// accessors. Interior storage holds nodes `1..=n_x` for each ray.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkField {
    junction: f64,
    rays: Vec<Vec<f64>>,
}

impl NetworkField {
    /// Constant field.
    pub fn constant(ray_count: usize, n_x: usize, value: f64) -> Self {
        NetworkField {
            junction: value,
            rays: vec![vec![value; n_x]; ray_count],
        }
    }

    /// Sample a per-ray profile `f(i, x_j)` on the grid. The junction value
    /// is taken from ray 0; callers with genuinely per-ray data must ensure
    /// the profiles agree at `x = 0` (validated elsewhere).
    pub fn from_profile(grid: &GridSpec, f: impl Fn(usize, f64) -> f64) -> Self {
        let ray_count = grid.network().ray_count();
        let n_x = grid.n_x();
        let junction = f(0, 0.0);
        let rays = (0..ray_count)
            .map(|i| (1..=n_x).map(|j| f(i, grid.x_node(j))).collect())
            .collect();
        NetworkField { junction, rays }
    }

    /// Import a dense representation `rows[i][j]` (`j = 0..=n_x`), checking
    /// that the per-ray entries at `j = 0` agree with `rows[0][0]` within
    /// `tol`. This is the only constructor that can observe a junction
    /// continuity violation; fields built by the solvers satisfy continuity
    /// structurally.
    pub fn from_dense(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidDomain(format!(
                "a network field needs at least 2 rays, got {}",
                rows.len()
            )));
        }
        let n_nodes = rows[0].len();
        if n_nodes < 2 {
            return Err(Error::InvalidDomain(
                "each ray needs at least 2 nodes".to_string(),
            ));
        }
        let junction = rows[0][0];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_nodes {
                return Err(Error::InvalidDomain(format!(
                    "ray {i} has {} nodes, expected {n_nodes}",
                    row.len()
                )));
            }
            if (row[0] - junction).abs() > tol {
                return Err(Error::InvalidDomain(format!(
                    "junction continuity violated on ray {i}: |{} - {junction}| > {tol}",
                    row[0]
                )));
            }
        }
        Ok(NetworkField {
            junction,
            rays: rows.iter().map(|row| row[1..].to_vec()).collect(),
        })
    }

    /// Export to a dense representation `rows[i][j]`, `j = 0..=n_x`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rays
            .iter()
            .map(|ray| {
                let mut row = Vec::with_capacity(ray.len() + 1);
                row.push(self.junction);
                row.extend_from_slice(ray);
                row
            })
            .collect()
    }

    pub fn ray_count(&self) -> usize {
        self.rays.len()
    }

    /// Number of nodes per ray including the junction (`n_x + 1`).
    pub fn nodes_per_ray(&self) -> usize {
        self.rays[0].len() + 1
    }

    /// Shared junction value `u(0)`.
    pub fn junction(&self) -> f64 {
        self.junction
    }

    pub fn set_junction(&mut self, value: f64) {
        self.junction = value;
    }

    /// Value at node `j` of ray `i`; `j = 0` reads the shared junction value.
    pub fn value(&self, ray: usize, j: usize) -> f64 {
        if j == 0 {
            self.junction
        } else {
            self.rays[ray][j - 1]
        }
    }

    /// Write node `j` of ray `i`; `j = 0` writes the shared junction value
    /// (and therefore node 0 of every ray).
    pub fn set_value(&mut self, ray: usize, j: usize, value: f64) {
        if j == 0 {
            self.junction = value;
        } else {
            self.rays[ray][j - 1] = value;
        }
    }

    /// Interior storage of one ray (nodes `1..=n_x`).
    pub(crate) fn ray_interior(&self, ray: usize) -> &[f64] {
        &self.rays[ray]
    }
}

/// Maximum absolute value over the junction and all ray nodes.
pub fn sup_norm(field: &NetworkField) -> f64 {
    let mut m = field.junction.abs();
    for ray in &field.rays {
        for &v in ray {
            m = m.max(v.abs());
        }
    }
    m
}

/// Best discrete Lipschitz constant of uniformly spaced samples: the maximum
/// over adjacent pairs of `|f_{j+1} - f_j| / spacing`.
pub fn lipschitz_seminorm(samples: &[f64], spacing: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "lipschitz_seminorm needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lipschitz_seminorm needs positive spacing, got {spacing}"
        )));
    }
    Ok(samples
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / spacing)
        .fold(0.0, f64::max))
}

/// Discrete Hoelder quotient of uniformly spaced samples: the maximum over
/// all pairs of `|f_s - f_t| / |s - t|^exponent`, `exponent` in `(0, 1)`.
pub fn holder_quotient(samples: &[f64], spacing: f64, exponent: f64) -> Result<f64> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "holder_quotient needs positive spacing, got {spacing}"
        )));
    }
    let positions: Vec<f64> = (0..samples.len()).map(|j| j as f64 * spacing).collect();
    holder_quotient_at(samples, &positions, exponent)
}

/// Discrete Hoelder quotient over samples at arbitrary strictly increasing
/// positions. The interpolation consistency checks restrict pair distances;
/// callers wanting that restriction pre-slice their sample window.
pub fn holder_quotient_at(samples: &[f64], positions: &[f64], exponent: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "holder_quotient needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples.len() != positions.len() {
        return Err(Error::InvalidArgument(format!(
            "holder_quotient got {} samples but {} positions",
            samples.len(),
            positions.len()
        )));
    }
    if !(exponent > 0.0 && exponent < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "holder_quotient exponent must lie in (0, 1), got {exponent}"
        )));
    }
    let mut m: f64 = 0.0;
    for s in 0..samples.len() {
        for t in (s + 1)..samples.len() {
            let gap = positions[t] - positions[s];
            if !(gap > 0.0) {
                return Err(Error::InvalidArgument(
                    "holder_quotient positions must be strictly increasing".to_string(),
                ));
            }
            m = m.max((samples[t] - samples[s]).abs() / gap.powf(exponent));
        }
    }
    Ok(m)
}

/// Continuity of the per-ray traces at the junction within `tol`.
///
/// For fields built by this crate the junction value is shared storage, so
/// this always holds with margin zero; the check exists for data imported
/// through [`NetworkField::from_dense`]-style paths and as an explicit
/// statement of the invariant.
pub fn junction_continuity_check(field: &NetworkField, tol: f64) -> bool {
    (0..field.ray_count()).all(|i| (field.value(i, 0) - field.junction()).abs() <= tol)
}

/// Full discrete solution over levels and time: `field(p, k)` is the network
/// field at level `l_p` and time `t_k`.
///
/// Level `n_l` is the Dirichlet plane (the sampled `psi`), and every level's
/// `k = 0` field is the sampled initial datum `g(., l_p)`; the backward
/// solver places both verbatim.
#[derive(Clone, Debug)]
pub struct SolutionCube {
    levels: Vec<Vec<NetworkField>>,
    grid: GridSpec,
}

impl SolutionCube {
    pub(crate) fn new(levels: Vec<Vec<NetworkField>>, grid: GridSpec) -> Self {
        debug_assert_eq!(levels.len(), grid.n_l() + 1);
        debug_assert!(levels.iter().all(|traj| traj.len() == grid.n_t() + 1));
        SolutionCube { levels, grid }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Field at level `p`, time step `k`.
    pub fn field(&self, p: usize, k: usize) -> &NetworkField {
        &self.levels[p][k]
    }

    /// All fields of one level, indexed by time step.
    pub fn level(&self, p: usize) -> &[NetworkField] {
        &self.levels[p]
    }

    /// Junction trace of level `p` as a time series (`k = 0..=n_t`).
    pub fn junction_trace(&self, p: usize) -> Vec<f64> {
        self.levels[p].iter().map(|f| f.junction()).collect()
    }

    /// Maximum absolute value over the whole cube.
    pub fn sup(&self) -> f64 {
        self.levels
            .iter()
            .flatten()
            .map(sup_norm)
            .fold(0.0, f64::max)
    }
}
