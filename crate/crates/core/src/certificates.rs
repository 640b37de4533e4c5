//! Explicit a priori constants, admissibility floors, norm gathering, and
//! certificate checking.
//!
//! Every constant here is a closed-form function of data norms only (never
//! of the computed solution). The classical block `C0, C(g), K, C1, C', C2,
//! C3, Theta` bounds the implicit time-marching scheme for one junction
//! problem; the level block `M0, M(g), M1, M2, M4` bounds the backward level
//! recursion, whose per-level problems are classical problems with
//! level-synthesized Robin data. For those synthesized problems the ratios
//! `|lambda_p|/lambda_floor`, `|gamma_p|/lambda_floor` are largest at the
//! admissibility floor of the level rate, so the level block instantiates
//! the classical constants at that worst case.
//!
//! `M2` (the gradient bound of the level problems) has no closed form of its
//! own here; it is instantiated as the worst-case level-problem `C2`
//! (`m2_surrogate`), and the gradient of a cube is reported against it
//! rather than certified.
//!
//! A certificate entry passes when `observed <= bound * (1 + slack)` (or
//! `observed >= bound` for the admissibility entries). Bounds may honestly
//! be `+inf` (e.g. `e^K` overflow); an infinite bound passes against any
//! finite observation and serializes as the string `"inf"`.

use crate::error::Result;
use crate::network::{GridSpec, SolutionCube};
use crate::problem::{
    sample_classical, sample_coefficients, scan2, scan3, scan4, ClassicalProblemData, ProblemData,
};
use crate::rothe::Trajectory;
use serde::{Serialize, Serializer};

// ---------------------------------------------------------------------------
// Admissibility floors
// ---------------------------------------------------------------------------

pub const ELLIPTIC_FLOOR_FORMULA: &str = "max(floor(|c|) + 1, |c|^2)";
pub const CLASSICAL_FLOOR_FORMULA: &str = "max(floor(|c|) + 1, |c|^2, |alpha|_W / alpha_floor)";
pub const LEVEL_FLOOR_FORMULA: &str = "max(floor(|r|) + 1, |r|^2)";

/// Floor on the reciprocal time step for one implicit elliptic step.
pub fn elliptic_rate_floor(c_sup: f64) -> f64 {
    (c_sup.floor() + 1.0).max(c_sup * c_sup)
}

/// Floor on the reciprocal time step for the classical junction problem,
/// which additionally needs `rate >= |alpha|_W / alpha_floor`.
pub fn classical_rate_floor(c_sup: f64, alpha_w: f64, alpha_floor: f64) -> f64 {
    elliptic_rate_floor(c_sup).max(alpha_w / alpha_floor)
}

/// Floor on the reciprocal level step of the backward recursion.
pub fn level_rate_floor(r_sup: f64) -> f64 {
    (r_sup.floor() + 1.0).max(r_sup * r_sup)
}

// ---------------------------------------------------------------------------
// Closed-form constants
// ---------------------------------------------------------------------------

/// `C0 = (max(|gamma| / lambda_floor, |g|) + |f|) e^{|c| + 1}`: sup bound of
/// the marched solution.
pub fn constant_c0(gamma_sup: f64, lambda_floor: f64, g_sup: f64, f_sup: f64, c_sup: f64) -> f64 {
    ((gamma_sup / lambda_floor).max(g_sup) + f_sup) * (c_sup + 1.0).exp()
}

/// Alternative precedence reading of the same expression,
/// `max(|gamma| / lambda_floor, |g| + |f|) e^{|c| + 1}`; recorded next to
/// [`constant_c0`] whenever the two differ.
pub fn constant_c0_alt(
    gamma_sup: f64,
    lambda_floor: f64,
    g_sup: f64,
    f_sup: f64,
    c_sup: f64,
) -> f64 {
    (gamma_sup / lambda_floor).max(g_sup + f_sup) * (c_sup + 1.0).exp()
}

/// `C(g) = |a| |g''| + |b| |g'| + |c| |g| + |f|`: the elliptic operator
/// applied to the initial datum, bounding the first time quotient.
pub fn constant_cg(
    a_sup: f64,
    g_xx_sup: f64,
    b_sup: f64,
    g_x_sup: f64,
    c_sup: f64,
    g_sup: f64,
    f_sup: f64,
) -> f64 {
    a_sup * g_xx_sup + b_sup * g_x_sup + c_sup * g_sup + f_sup
}

/// Exponent `K` of the time-quotient Gronwall factor:
/// `(1 / max(a_floor^3, 1)) (1 + |alpha|_W / alpha_floor + C0 + 1188)
///  (|b|_W + |c|_W + |f|_W)`.
pub fn constant_k(
    a_floor: f64,
    alpha_ratio_w: f64,
    c0: f64,
    b_w: f64,
    c_w: f64,
    f_w: f64,
) -> f64 {
    (1.0 / a_floor.powi(3).max(1.0)) * (1.0 + alpha_ratio_w + c0 + 1188.0) * (b_w + c_w + f_w)
}

/// `C1 = (1 + max((C0 |lambda|_W + |gamma|_W) / lambda_floor, C(g))) e^K`:
/// uniform bound on the discrete time quotient. The ratio arguments are
/// already divided by `lambda_floor`.
pub fn constant_c1(c0: f64, lambda_ratio_w: f64, gamma_ratio_w: f64, cg: f64, k: f64) -> f64 {
    (1.0 + (c0 * lambda_ratio_w + gamma_ratio_w).max(cg)) * k.exp()
}

/// `C' = (R C1 + C0 (2 |b| + R (|c| + |f|)) + 2 |a|_W |b|_W / a_floor)
///  / a_floor`: seed of the gradient bound.
pub fn constant_c_prime(
    ray_length: f64,
    c1: f64,
    c0: f64,
    b_sup: f64,
    c_sup: f64,
    f_sup: f64,
    a_w: f64,
    b_w: f64,
    a_floor: f64,
) -> f64 {
    (ray_length * c1 + c0 * (2.0 * b_sup + ray_length * (c_sup + f_sup))
        + 2.0 * a_w * b_w / a_floor)
        / a_floor
}

/// `C2 = C' e^{R |b| / a_floor}
///       + ((C1 + |c| C0 + |f|) / |b|) (e^{R |b| / a_floor} - 1)`,
/// continued at `b = 0` by its limit `C' + (C1 + |c| C0 + |f|) R / a_floor`:
/// uniform bound on the discrete gradient.
pub fn constant_c2(
    c_prime: f64,
    c1: f64,
    c0: f64,
    b_sup: f64,
    c_sup: f64,
    f_sup: f64,
    ray_length: f64,
    a_floor: f64,
) -> f64 {
    let amplification = (ray_length * b_sup / a_floor).exp();
    let load = c1 + c_sup * c0 + f_sup;
    if b_sup > 0.0 {
        c_prime * amplification + (load / b_sup) * (amplification - 1.0)
    } else {
        c_prime + load * ray_length / a_floor
    }
}

/// `C3 = (C1 + |b| C2 + |c| C0 + |f|) / a_floor`: bound on the discrete
/// second difference, obtained by solving the scheme for it.
pub fn constant_c3(
    c1: f64,
    b_sup: f64,
    c2: f64,
    c_sup: f64,
    c0: f64,
    f_sup: f64,
    a_floor: f64,
) -> f64 {
    (c1 + b_sup * c2 + c_sup * c0 + f_sup) / a_floor
}

/// `Theta = (C0 t-lip(lambda) + t-lip(gamma)) / lambda_floor`: junction
/// time-quotient bound, with the solution sup replaced by its certified
/// bound `C0`.
pub fn constant_theta(c0: f64, lambda_t_lip: f64, gamma_t_lip: f64, lambda_floor: f64) -> f64 {
    (c0 * lambda_t_lip + gamma_t_lip) / lambda_floor
}

/// `M0 = (|g| + |psi| + |f| + |phi| + 2 |d_l g(0,.)|) e^{|r| + 1}
///  e^{T (|c| + 1)}`: sup bound of the solution cube.
#[allow(clippy::too_many_arguments)]
pub fn constant_m0(
    g_sup: f64,
    psi_sup: f64,
    f_sup: f64,
    phi_sup: f64,
    g_dl_junction_sup: f64,
    r_sup: f64,
    horizon: f64,
    c_sup: f64,
) -> f64 {
    (g_sup + psi_sup + f_sup + phi_sup + 2.0 * g_dl_junction_sup)
        * (r_sup + 1.0).exp()
        * (horizon * (c_sup + 1.0)).exp()
}

/// `M1 = max(M0 t-lip(r) + t-lip(phi), M(g))
///       + max(t-lip(psi(., 0)), M(g))`: bound on the junction traces'
/// Lipschitz constants in time, uniformly over levels.
pub fn constant_m1(
    m0: f64,
    r_t_lip: f64,
    phi_t_lip: f64,
    m_g: f64,
    psi_junction_t_lip: f64,
) -> f64 {
    (m0 * r_t_lip + phi_t_lip).max(m_g) + psi_junction_t_lip.max(m_g)
}

/// `M4 = max((2 / a_floor) |a|_W (M2 + M1 |b|_W + M0 |c|_W + |f|_W),
///           I |alpha| M1 + |psi|)`: bound on the level quotient
/// `level_rate |u^{p+1} - u^p|`, valid for `p <= n_l - 2`.
#[allow(clippy::too_many_arguments)]
pub fn constant_m4(
    m2: f64,
    m1: f64,
    m0: f64,
    a_w: f64,
    b_w: f64,
    c_w: f64,
    f_w: f64,
    a_floor: f64,
    ray_count: usize,
    alpha_sup: f64,
    psi_sup: f64,
) -> f64 {
    let bulk = (2.0 / a_floor) * (m2 * a_w + m1 * a_w * b_w + m0 * a_w * c_w + a_w * f_w);
    let boundary = ray_count as f64 * alpha_sup * m1 + psi_sup;
    bulk.max(boundary)
}

// ---------------------------------------------------------------------------
// Norm gathering
// ---------------------------------------------------------------------------

/// Effective norms of classical data: declared bounds where present, sampled
/// estimates otherwise. All finite.
#[derive(Clone, Debug, Serialize)]
pub struct ClassicalNorms {
    pub ray_count: usize,
    pub ray_length: f64,
    pub horizon: f64,
    pub a_floor: f64,
    pub alpha_floor: f64,
    pub lambda_floor: f64,
    pub a_sup: f64,
    pub a_lip: f64,
    pub b_sup: f64,
    pub b_lip: f64,
    pub c_sup: f64,
    pub c_lip: f64,
    pub f_sup: f64,
    pub f_lip: f64,
    pub alpha_sup: f64,
    pub alpha_lip: f64,
    pub lambda_sup: f64,
    pub lambda_lip: f64,
    pub gamma_sup: f64,
    pub gamma_lip: f64,
    pub g_sup: f64,
    pub g_x_sup: f64,
    pub g_xx_sup: f64,
}

impl ClassicalNorms {
    /// Gather norms from `data`, sampling on `grid` for anything not
    /// declared.
    pub fn gather(data: &ClassicalProblemData, grid: &GridSpec) -> Result<ClassicalNorms> {
        let tables = sample_classical(data, grid)?;
        let bag = &data.norms;
        let as4 = |t: &[Vec<Vec<f64>>]| vec![t.to_vec()];
        let a_scan = scan4(&as4(&tables.a), grid);
        let b_scan = scan4(&as4(&tables.b), grid);
        let c_scan = scan4(&as4(&tables.c), grid);
        let f_scan = scan4(&as4(&tables.f), grid);
        let alpha_scan = scan3(std::slice::from_ref(&tables.alpha), grid);
        let lambda_sup = tables.lambda.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gamma_sup = tables.gamma.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lambda_lip = crate::network::lipschitz_seminorm(&tables.lambda, grid.dt())?;
        let gamma_lip = crate::network::lipschitz_seminorm(&tables.gamma, grid.dt())?;

        Ok(ClassicalNorms {
            ray_count: data.network.ray_count(),
            ray_length: data.network.ray_length(),
            horizon: data.horizon,
            a_floor: data.a_floor,
            alpha_floor: data.alpha_floor,
            lambda_floor: data.lambda_floor,
            a_sup: crate::problem::group_sup(bag.a_sup, &data.a, a_scan.sup),
            a_lip: crate::problem::group_lip(bag.a_lip, &data.a, a_scan.lip),
            b_sup: crate::problem::group_sup(bag.b_sup, &data.b, b_scan.sup),
            b_lip: crate::problem::group_lip(bag.b_lip, &data.b, b_scan.lip),
            c_sup: crate::problem::group_sup(bag.c_sup, &data.c, c_scan.sup),
            c_lip: crate::problem::group_lip(bag.c_lip, &data.c, c_scan.lip),
            f_sup: crate::problem::group_sup(bag.f_sup, &data.f, f_scan.sup),
            f_lip: crate::problem::group_lip(bag.f_lip, &data.f, f_scan.lip),
            alpha_sup: crate::problem::group_sup(bag.alpha_sup, &data.alpha, alpha_scan.sup),
            alpha_lip: crate::problem::group_lip(bag.alpha_lip, &data.alpha, alpha_scan.lip),
            lambda_sup: crate::problem::effective(bag.lambda_sup, data.lambda.declared_sup(), lambda_sup),
            lambda_lip: crate::problem::effective(bag.lambda_lip, data.lambda.declared_lip(), lambda_lip),
            gamma_sup: crate::problem::effective(bag.gamma_sup, data.gamma.declared_sup(), gamma_sup),
            gamma_lip: crate::problem::effective(bag.gamma_lip, data.gamma.declared_lip(), gamma_lip),
            g_sup: crate::problem::group_sup(bag.g_sup, &data.g, crate::network::sup_norm(&tables.g)),
            g_x_sup: crate::problem::effective(
                bag.g_x_sup,
                None,
                crate::problem::plane_dx_sup(&tables.g, grid.dx()),
            ),
            g_xx_sup: crate::problem::effective(
                bag.g_xx_sup,
                None,
                crate::problem::plane_dxx_sup(&tables.g, grid.dx()),
            ),
        })
    }
}

/// Effective norms of level-coupled data.
#[derive(Clone, Debug, Serialize)]
pub struct LocalTimeNorms {
    pub ray_count: usize,
    pub ray_length: f64,
    pub horizon: f64,
    pub l_max: f64,
    pub a_floor: f64,
    pub alpha_floor: f64,
    pub a_sup: f64,
    pub a_lip: f64,
    pub b_sup: f64,
    pub b_lip: f64,
    pub c_sup: f64,
    pub c_lip: f64,
    pub f_sup: f64,
    pub f_lip: f64,
    pub alpha_sup: f64,
    pub alpha_lip: f64,
    pub r_sup: f64,
    pub r_lip: f64,
    pub r_t_lip: f64,
    pub phi_sup: f64,
    pub phi_lip: f64,
    pub phi_t_lip: f64,
    pub psi_sup: f64,
    pub psi_x_sup: f64,
    pub psi_junction_t_lip: f64,
    pub g_sup: f64,
    pub g_x_sup: f64,
    pub g_xx_sup: f64,
    pub g_dl_junction_sup: f64,
}

impl LocalTimeNorms {
    /// Gather norms from `data`, sampling on `grid` for anything not
    /// declared.
    pub fn gather(data: &ProblemData, grid: &GridSpec) -> Result<LocalTimeNorms> {
        let tables = sample_coefficients(data, grid)?;
        let bag = &data.norms;
        let a_scan = scan4(&tables.a, grid);
        let b_scan = scan4(&tables.b, grid);
        let c_scan = scan4(&tables.c, grid);
        let f_scan = scan4(&tables.f, grid);
        let alpha_scan = scan3(&tables.alpha, grid);
        let r_scan = scan2(&tables.r, grid);
        let phi_scan = scan2(&tables.phi, grid);

        let psi_sup = tables
            .psi
            .iter()
            .map(crate::network::sup_norm)
            .fold(0.0, f64::max);
        let psi_x = tables
            .psi
            .iter()
            .map(|plane| crate::problem::plane_dx_sup(plane, grid.dx()))
            .fold(0.0, f64::max);
        let psi_trace: Vec<f64> = tables.psi.iter().map(|p| p.junction()).collect();
        let psi_jn_t_lip = crate::network::lipschitz_seminorm(&psi_trace, grid.dt())?;

        let g_sup = tables
            .g
            .iter()
            .map(crate::network::sup_norm)
            .fold(0.0, f64::max);
        let g_x = tables
            .g
            .iter()
            .map(|plane| crate::problem::plane_dx_sup(plane, grid.dx()))
            .fold(0.0, f64::max);
        let g_xx = tables
            .g
            .iter()
            .map(|plane| crate::problem::plane_dxx_sup(plane, grid.dx()))
            .fold(0.0, f64::max);
        let g_dl = (0..grid.n_l())
            .map(|p| data.g_junction_dl(grid.l_node(p), grid.dl()).abs())
            .fold(0.0, f64::max);

        Ok(LocalTimeNorms {
            ray_count: data.network.ray_count(),
            ray_length: data.network.ray_length(),
            horizon: data.horizon,
            l_max: data.l_max,
            a_floor: data.a_floor,
            alpha_floor: data.alpha_floor,
            a_sup: crate::problem::group_sup(bag.a_sup, &data.a, a_scan.sup),
            a_lip: crate::problem::group_lip(bag.a_lip, &data.a, a_scan.lip),
            b_sup: crate::problem::group_sup(bag.b_sup, &data.b, b_scan.sup),
            b_lip: crate::problem::group_lip(bag.b_lip, &data.b, b_scan.lip),
            c_sup: crate::problem::group_sup(bag.c_sup, &data.c, c_scan.sup),
            c_lip: crate::problem::group_lip(bag.c_lip, &data.c, c_scan.lip),
            f_sup: crate::problem::group_sup(bag.f_sup, &data.f, f_scan.sup),
            f_lip: crate::problem::group_lip(bag.f_lip, &data.f, f_scan.lip),
            alpha_sup: crate::problem::group_sup(bag.alpha_sup, &data.alpha, alpha_scan.sup),
            alpha_lip: crate::problem::group_lip(bag.alpha_lip, &data.alpha, alpha_scan.lip),
            r_sup: crate::problem::effective(bag.r_sup, data.r.declared_sup(), r_scan.sup),
            r_lip: crate::problem::effective(bag.r_lip, data.r.declared_lip(), r_scan.lip),
            r_t_lip: crate::problem::effective(bag.r_t_lip, data.r.declared_lip(), r_scan.t_lip),
            phi_sup: crate::problem::effective(bag.phi_sup, data.phi.declared_sup(), phi_scan.sup),
            phi_lip: crate::problem::effective(bag.phi_lip, data.phi.declared_lip(), phi_scan.lip),
            phi_t_lip: crate::problem::effective(
                bag.phi_t_lip,
                data.phi.declared_lip(),
                phi_scan.t_lip,
            ),
            psi_sup: crate::problem::group_sup(bag.psi_sup, &data.psi, psi_sup),
            psi_x_sup: crate::problem::effective(bag.psi_x_sup, None, psi_x),
            psi_junction_t_lip: crate::problem::effective(
                bag.psi_junction_t_lip,
                None,
                psi_jn_t_lip,
            ),
            g_sup: crate::problem::group_sup(bag.g_sup, &data.g, g_sup),
            g_x_sup: crate::problem::effective(bag.g_x_sup, None, g_x),
            g_xx_sup: crate::problem::effective(bag.g_xx_sup, None, g_xx),
            g_dl_junction_sup: crate::problem::effective(
                bag.g_dl_junction_sup,
                data.g_dl_junction.as_ref().and_then(|d| d.declared_sup()),
                g_dl,
            ),
        })
    }
}

/// The norm inputs a constant set was computed from.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormInputs {
    Classical(ClassicalNorms),
    LocalTime(LocalTimeNorms),
}

// ---------------------------------------------------------------------------
// Constant sets
// ---------------------------------------------------------------------------

fn ser_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn ser_opt_f64<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(value) => ser_f64(value, s),
        None => s.serialize_none(),
    }
}

/// The full set of a priori constants for one problem.
///
/// For classical data the `C`-block describes the problem itself and the
/// `M`-block is absent. For level-coupled data the `M`-block describes the
/// cube and the `C`-block holds the worst-case per-level constants (the
/// classical constants of the synthesized level problems at the level-rate
/// floor), which is also where `m2_surrogate` comes from.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantSet {
    #[serde(serialize_with = "ser_f64")]
    pub c0: f64,
    #[serde(serialize_with = "ser_opt_f64")]
    pub c0_alt: Option<f64>,
    #[serde(serialize_with = "ser_f64")]
    pub c_g: f64,
    #[serde(serialize_with = "ser_f64")]
    pub k_exponent: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c1: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c_prime: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c2: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c3: f64,
    #[serde(serialize_with = "ser_f64")]
    pub theta: f64,
    #[serde(serialize_with = "ser_opt_f64")]
    pub m0: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub m_g: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub m1: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub m2_surrogate: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub m4: Option<f64>,
    pub inputs: NormInputs,
}

fn alt_if_different(c0: f64, alt: f64) -> Option<f64> {
    let scale = c0.abs().max(alt.abs()).max(1.0);
    if (c0 - alt).abs() > 1e-12 * scale {
        Some(alt)
    } else {
        None
    }
}

/// Compute every constant from gathered norms.
pub fn constants_full(inputs: &NormInputs) -> ConstantSet {
    match inputs {
        NormInputs::Classical(n) => {
            let c0 = constant_c0(n.gamma_sup, n.lambda_floor, n.g_sup, n.f_sup, n.c_sup);
            let c0_alt = alt_if_different(
                c0,
                constant_c0_alt(n.gamma_sup, n.lambda_floor, n.g_sup, n.f_sup, n.c_sup),
            );
            let c_g = constant_cg(
                n.a_sup, n.g_xx_sup, n.b_sup, n.g_x_sup, n.c_sup, n.g_sup, n.f_sup,
            );
            let alpha_ratio_w = (n.alpha_sup + n.alpha_lip) / n.alpha_floor;
            let (b_w, c_w, f_w) = (n.b_sup + n.b_lip, n.c_sup + n.c_lip, n.f_sup + n.f_lip);
            let k = constant_k(n.a_floor, alpha_ratio_w, c0, b_w, c_w, f_w);
            let lambda_ratio_w = (n.lambda_sup + n.lambda_lip) / n.lambda_floor;
            let gamma_ratio_w = (n.gamma_sup + n.gamma_lip) / n.lambda_floor;
            let c1 = constant_c1(c0, lambda_ratio_w, gamma_ratio_w, c_g, k);
            let a_w = n.a_sup + n.a_lip;
            let c_prime = constant_c_prime(
                n.ray_length,
                c1,
                c0,
                n.b_sup,
                n.c_sup,
                n.f_sup,
                a_w,
                b_w,
                n.a_floor,
            );
            let c2 = constant_c2(
                c_prime,
                c1,
                c0,
                n.b_sup,
                n.c_sup,
                n.f_sup,
                n.ray_length,
                n.a_floor,
            );
            let c3 = constant_c3(c1, n.b_sup, c2, n.c_sup, c0, n.f_sup, n.a_floor);
            let theta = constant_theta(c0, n.lambda_lip, n.gamma_lip, n.lambda_floor);
            ConstantSet {
                c0,
                c0_alt,
                c_g,
                k_exponent: k,
                c1,
                c_prime,
                c2,
                c3,
                theta,
                m0: None,
                m_g: None,
                m1: None,
                m2_surrogate: None,
                m4: None,
                inputs: inputs.clone(),
            }
        }
        NormInputs::LocalTime(n) => {
            let level_floor = level_rate_floor(n.r_sup);
            let beta_bound = 2.0 * n.g_dl_junction_sup;
            let m0 = constant_m0(
                n.g_sup,
                n.psi_sup,
                n.f_sup,
                n.phi_sup,
                n.g_dl_junction_sup,
                n.r_sup,
                n.horizon,
                n.c_sup,
            );
            let m_g = constant_cg(
                n.a_sup, n.g_xx_sup, n.b_sup, n.g_x_sup, n.c_sup, n.g_sup, n.f_sup,
            );
            let m1 = constant_m1(m0, n.r_t_lip, n.phi_t_lip, m_g, n.psi_junction_t_lip);

            // Worst-case synthesized level problem: lambda_p = rate + r,
            // gamma_p = phi + beta_p - rate u^{p+1}(0), with lambda_floor =
            // rate; the ratios below decrease in the rate, so the floor is
            // the worst admissible case.
            let gamma_lvl_sup = n.phi_sup + beta_bound + level_floor * m0;
            let c0 = constant_c0(gamma_lvl_sup, level_floor, n.g_sup, n.f_sup, n.c_sup);
            let c0_alt = alt_if_different(
                c0,
                constant_c0_alt(gamma_lvl_sup, level_floor, n.g_sup, n.f_sup, n.c_sup),
            );
            let alpha_ratio_w = (n.alpha_sup + n.alpha_lip) / n.alpha_floor;
            let (b_w, c_w, f_w) = (n.b_sup + n.b_lip, n.c_sup + n.c_lip, n.f_sup + n.f_lip);
            let k = constant_k(n.a_floor, alpha_ratio_w, c0, b_w, c_w, f_w);
            let lambda_ratio_w = 1.0 + (n.r_sup + n.r_t_lip) / level_floor;
            let gamma_ratio_w =
                (n.phi_sup + beta_bound + n.phi_t_lip) / level_floor + m0 + m1;
            let c1 = constant_c1(c0, lambda_ratio_w, gamma_ratio_w, m_g, k);
            let a_w = n.a_sup + n.a_lip;
            let c_prime = constant_c_prime(
                n.ray_length,
                c1,
                c0,
                n.b_sup,
                n.c_sup,
                n.f_sup,
                a_w,
                b_w,
                n.a_floor,
            );
            let c2 = constant_c2(
                c_prime,
                c1,
                c0,
                n.b_sup,
                n.c_sup,
                n.f_sup,
                n.ray_length,
                n.a_floor,
            );
            let c3 = constant_c3(c1, n.b_sup, c2, n.c_sup, c0, n.f_sup, n.a_floor);
            let theta = (c0 * n.r_t_lip + n.phi_t_lip) / level_floor + m1;

            let m2_surrogate = c2;
            let m4 = constant_m4(
                m2_surrogate,
                m1,
                m0,
                a_w,
                b_w,
                c_w,
                f_w,
                n.a_floor,
                n.ray_count,
                n.alpha_sup,
                n.psi_sup,
            );
            ConstantSet {
                c0,
                c0_alt,
                c_g: m_g,
                k_exponent: k,
                c1,
                c_prime,
                c2,
                c3,
                theta,
                m0: Some(m0),
                m_g: Some(m_g),
                m1: Some(m1),
                m2_surrogate: Some(m2_surrogate),
                m4: Some(m4),
                inputs: inputs.clone(),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Observation
// ---------------------------------------------------------------------------

/// Discrete norms of a marched classical solution.
#[derive(Clone, Debug, Serialize)]
pub struct ClassicalObserved {
    pub time_rate: f64,
    pub sup_u: f64,
    pub time_quotient: f64,
    pub gradient_sup: f64,
    pub junction_quotient: f64,
    pub second_diff_sup: f64,
}

/// Measure the certified norms of a trajectory.
pub fn observe_trajectory(traj: &Trajectory) -> ClassicalObserved {
    let derivative = crate::rothe::discrete_time_derivative(traj);
    ClassicalObserved {
        time_rate: traj.grid().time_rate(),
        sup_u: traj.sup(),
        time_quotient: derivative.max_sup,
        gradient_sup: crate::rothe::gradient_sup(traj),
        junction_quotient: derivative.max_junction,
        second_diff_sup: crate::rothe::second_difference_sup(traj),
    }
}

/// Discrete norms of a solution cube.
#[derive(Clone, Debug, Serialize)]
pub struct CubeObserved {
    pub time_rate: f64,
    pub level_rate: f64,
    pub sup_u: f64,
    /// Max over levels of the junction trace's time-Lipschitz constant.
    pub junction_t_lip: f64,
    /// Max of `level_rate |u^{p+1} - u^p|` over `p <= n_l - 2` and all
    /// nodes/times.
    pub level_quotient: f64,
    /// Same quotient for the top pair `p = n_l - 1` (couples the Dirichlet
    /// plane; reported, not certified).
    pub level_quotient_last: f64,
    /// Max centered interior first difference over the cube.
    pub gradient_sup: f64,
    /// Max discrete time quotient over all levels.
    pub time_quotient: f64,
}

/// Measure the certified norms of a solution cube.
pub fn observe_cube(cube: &SolutionCube) -> CubeObserved {
    let grid = cube.grid();
    let (n_t, n_x, n_l) = (grid.n_t(), grid.n_x(), grid.n_l());
    let (dt, dx) = (grid.dt(), grid.dx());
    let level_rate = grid.level_rate();
    let time_rate = grid.time_rate();

    let mut junction_t_lip: f64 = 0.0;
    for p in 0..=n_l {
        let trace = cube.junction_trace(p);
        if let Ok(lip) = crate::network::lipschitz_seminorm(&trace, dt) {
            junction_t_lip = junction_t_lip.max(lip);
        }
    }

    let mut level_quotient: f64 = 0.0;
    let mut level_quotient_last: f64 = 0.0;
    for p in 0..n_l {
        let mut worst: f64 = 0.0;
        for k in 0..=n_t {
            let low = cube.field(p, k);
            let high = cube.field(p + 1, k);
            for i in 0..low.ray_count() {
                for j in 0..=n_x {
                    worst = worst.max((high.value(i, j) - low.value(i, j)).abs());
                }
            }
        }
        let quotient = level_rate * worst;
        if p + 1 < n_l {
            level_quotient = level_quotient.max(quotient);
        } else {
            level_quotient_last = quotient;
        }
    }

    let mut gradient_sup: f64 = 0.0;
    let mut time_quotient: f64 = 0.0;
    for p in 0..=n_l {
        for k in 0..=n_t {
            let field = cube.field(p, k);
            for i in 0..field.ray_count() {
                for j in 1..n_x {
                    gradient_sup = gradient_sup
                        .max(((field.value(i, j + 1) - field.value(i, j - 1)) / (2.0 * dx)).abs());
                }
            }
            if k > 0 {
                let prev = cube.field(p, k - 1);
                for i in 0..field.ray_count() {
                    for j in 0..=n_x {
                        time_quotient = time_quotient
                            .max(time_rate * (field.value(i, j) - prev.value(i, j)).abs());
                    }
                }
            }
        }
    }

    CubeObserved {
        time_rate,
        level_rate,
        sup_u: cube.sup(),
        junction_t_lip,
        level_quotient,
        level_quotient_last,
        gradient_sup,
        time_quotient,
    }
}

/// Observed norms of either solution kind.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObservedNorms {
    Classical(ClassicalObserved),
    LocalTime(CubeObserved),
}

// ---------------------------------------------------------------------------
// Certification
// ---------------------------------------------------------------------------

/// One certificate line: `observed relation bound` with multiplicative
/// `slack` applied to upper bounds.
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub name: String,
    #[serde(serialize_with = "ser_f64")]
    pub observed: f64,
    #[serde(serialize_with = "ser_f64")]
    pub bound: f64,
    pub relation: &'static str,
    pub slack: f64,
    pub pass: bool,
}

/// A value reported next to the certificate without a pass/fail claim,
/// optionally with a reference scale.
#[derive(Clone, Debug, Serialize)]
pub struct ReportedValue {
    pub name: String,
    #[serde(serialize_with = "ser_f64")]
    pub observed: f64,
    #[serde(serialize_with = "ser_opt_f64")]
    pub reference: Option<f64>,
}

/// Certificate: every certified bound checked against the observations.
#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub entries: Vec<BoundCheck>,
    pub reported: Vec<ReportedValue>,
    pub pass: bool,
}

/// Absolute tolerance absorbing observation roundoff when a bound
/// vanishes; a zero bound with a `1e-15` observation is a pass, not a
/// violation.
const CERT_ABS_TOL: f64 = 1e-12;

fn upper(name: &str, observed: f64, bound: f64, slack: f64) -> BoundCheck {
    BoundCheck {
        name: name.to_string(),
        observed,
        bound,
        relation: "<=",
        slack,
        pass: observed <= bound * (1.0 + slack) + CERT_ABS_TOL,
    }
}

fn lower(name: &str, observed: f64, bound: f64) -> BoundCheck {
    BoundCheck {
        name: name.to_string(),
        observed,
        bound,
        relation: ">=",
        slack: 0.0,
        pass: observed >= bound,
    }
}

/// Check the observed norms against the a priori constants.
///
/// `slack` is multiplicative on upper bounds (`observed <= bound (1 +
/// slack)`); admissibility entries are exact. The report's `pass` is the
/// conjunction of all entries; reported values never affect it.
pub fn certify(observed: &ObservedNorms, constants: &ConstantSet, slack: f64) -> CertificateReport {
    let mut entries = Vec::new();
    let mut reported = Vec::new();
    match (observed, &constants.inputs) {
        (ObservedNorms::Classical(obs), NormInputs::Classical(n)) => {
            let alpha_w = n.alpha_sup + n.alpha_lip;
            entries.push(lower(
                "time rate above scheme floor",
                obs.time_rate,
                classical_rate_floor(n.c_sup, alpha_w, n.alpha_floor),
            ));
            entries.push(upper("sup |u| <= C0", obs.sup_u, constants.c0, slack));
            entries.push(upper(
                "time quotient <= C1",
                obs.time_quotient,
                constants.c1,
                slack,
            ));
            entries.push(upper(
                "gradient <= C2",
                obs.gradient_sup,
                constants.c2,
                slack,
            ));
            entries.push(upper(
                "junction quotient <= max(Theta, C(g))",
                obs.junction_quotient,
                constants.theta.max(constants.c_g),
                slack,
            ));
            reported.push(ReportedValue {
                name: "second difference (reference C3)".to_string(),
                observed: obs.second_diff_sup,
                reference: Some(constants.c3),
            });
        }
        (ObservedNorms::LocalTime(obs), NormInputs::LocalTime(n)) => {
            let alpha_w = n.alpha_sup + n.alpha_lip;
            entries.push(lower(
                "time rate above scheme floor",
                obs.time_rate,
                classical_rate_floor(n.c_sup, alpha_w, n.alpha_floor),
            ));
            entries.push(lower(
                "level rate above absorption floor",
                obs.level_rate,
                level_rate_floor(n.r_sup),
            ));
            let m0 = constants.m0.unwrap_or(f64::NAN);
            let m1 = constants.m1.unwrap_or(f64::NAN);
            let m4 = constants.m4.unwrap_or(f64::NAN);
            entries.push(upper("sup |u| <= M0", obs.sup_u, m0, slack));
            entries.push(upper(
                "junction time Lipschitz <= M1",
                obs.junction_t_lip,
                m1,
                slack,
            ));
            entries.push(upper(
                "level quotient (p <= n_l - 2) <= M4",
                obs.level_quotient,
                m4,
                slack,
            ));
            reported.push(ReportedValue {
                name: "gradient (reference max(M2 surrogate, |psi_x|))".to_string(),
                observed: obs.gradient_sup,
                reference: constants.m2_surrogate.map(|m2| m2.max(n.psi_x_sup)),
            });
            reported.push(ReportedValue {
                name: "top-level quotient (p = n_l - 1, uncertified)".to_string(),
                observed: obs.level_quotient_last,
                reference: None,
            });
            reported.push(ReportedValue {
                name: "time quotient (reference worst-case level C1)".to_string(),
                observed: obs.time_quotient,
                reference: Some(constants.c1),
            });
        }
        _ => {
            entries.push(BoundCheck {
                name: "observation kind matches constant set".to_string(),
                observed: f64::NAN,
                bound: f64::NAN,
                relation: "<=",
                slack,
                pass: false,
            });
        }
    }
    let pass = entries.iter().all(|e| e.pass);
    CertificateReport {
        entries,
        reported,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{CoefficientField, DeclaredNorms};

    const TOL: f64 = 1e-12;

    #[test]
    fn floors_match_hand_computations() {
        assert_eq!(elliptic_rate_floor(0.0), 1.0);
        assert_eq!(elliptic_rate_floor(0.5), 1.0);
        assert_eq!(elliptic_rate_floor(3.0), 9.0);
        assert_eq!(elliptic_rate_floor(1.5), 2.25);
        assert_eq!(classical_rate_floor(0.0, 2.0, 0.5), 4.0);
        assert_eq!(level_rate_floor(3.0), 9.0);
        assert_eq!(level_rate_floor(0.0), 1.0);
    }

    #[test]
    fn c0_matches_frozen_values() {
        let e = std::f64::consts::E;
        assert!((constant_c0(1.0, 1.0, 0.0, 0.0, 0.0) - e).abs() <= TOL);
        // (max(2, 1) + 1) e^2 = 3 e^2.
        let v = constant_c0(2.0, 1.0, 1.0, 1.0, 1.0);
        assert!((v - 22.16716829679195).abs() <= 1e-13, "{v}");
        // Alternative precedence differs exactly when |f| would be absorbed:
        // max(2, 1 + 1) e^2 = 2 e^2.
        let alt = constant_c0_alt(2.0, 1.0, 1.0, 1.0, 1.0);
        assert!((alt - 2.0 * e * e).abs() <= 1e-13);
    }

    #[test]
    fn cg_is_the_operator_applied_to_g() {
        assert_eq!(constant_cg(1.0, 2.0, 0.0, 5.0, 0.0, 3.0, 0.0), 2.0);
        assert_eq!(constant_cg(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0), 4.0);
    }

    #[test]
    fn k_matches_frozen_values() {
        assert_eq!(constant_k(1.0, 0.0, 0.0, 1.0, 0.0, 0.0), 1189.0);
        assert_eq!(constant_k(2.0, 0.0, 0.0, 1.0, 0.0, 0.0), 148.625);
        // a_floor below 1 does not shrink the cubic denominator.
        assert_eq!(constant_k(0.5, 0.0, 0.0, 1.0, 0.0, 0.0), 1189.0);
    }

    #[test]
    fn c1_of_zero_data_is_one() {
        assert_eq!(constant_c1(0.0, 0.0, 0.0, 0.0, 0.0), 1.0);
    }

    #[test]
    fn c2_interpolates_continuously_at_vanishing_drift() {
        let at_zero = constant_c2(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 1.0);
        assert!((at_zero - 3.0).abs() <= TOL);
        let near_zero = constant_c2(1.0, 1.0, 0.0, 1e-9, 0.0, 0.0, 2.0, 1.0);
        assert!((near_zero - at_zero).abs() <= 1e-7);
        let e = std::f64::consts::E;
        let at_one = constant_c2(1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0);
        assert!((at_one - (2.0 * e - 1.0)).abs() <= TOL);
    }

    #[test]
    fn m0_of_unit_box_data_is_two_e_squared() {
        let v = constant_m0(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        assert!((v - 14.7781121978613).abs() <= 1e-12, "{v}");
    }

    #[test]
    fn theta_combines_lipschitz_seminorms() {
        assert_eq!(constant_theta(2.0, 3.0, 4.0, 2.0), 5.0);
    }

    #[test]
    fn constants_grow_monotonically_in_their_inputs() {
        assert!(constant_c0(2.0, 1.0, 0.0, 0.0, 0.0) > constant_c0(1.0, 1.0, 0.0, 0.0, 0.0));
        assert!(constant_k(1.0, 0.0, 5.0, 1.0, 0.0, 0.0) > constant_k(1.0, 0.0, 0.0, 1.0, 0.0, 0.0));
        assert!(
            constant_m0(1.0, 1.0, 0.0, 0.0, 0.0, 2.0, 1.0, 0.0)
                > constant_m0(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0)
        );
        assert!(
            constant_m1(1.0, 1.0, 1.0, 0.0, 0.0) > constant_m1(1.0, 0.5, 1.0, 0.0, 0.0)
        );
    }

    #[test]
    fn overflowing_exponent_yields_honest_infinity() {
        let k = constant_k(1.0, 0.0, 1e6, 1.0, 1.0, 1.0);
        let c1 = constant_c1(1e6, 1.0, 1.0, 0.0, k);
        assert!(c1.is_infinite() && c1 > 0.0);
        // An infinite bound passes against any finite observation.
        let check = upper("x", 1e300, c1, 0.0);
        assert!(check.pass);
    }

    #[test]
    fn certify_applies_multiplicative_slack() {
        let ok = upper("x", 1.0, 0.9, 0.2);
        assert!(ok.pass);
        let not_ok = upper("x", 1.0, 0.9, 0.0);
        assert!(!not_ok.pass);
        let nan_fails = upper("x", f64::NAN, 1.0, 0.0);
        assert!(!nan_fails.pass);
        let admissible = lower("rate", 2.0, 3.0);
        assert!(!admissible.pass);
    }

    fn unit_local_time_data() -> crate::problem::ProblemData {
        crate::problem::ProblemData {
            network: crate::network::StarNetwork::new(3, 1.0).unwrap(),
            horizon: 1.0,
            l_max: 1.0,
            a: CoefficientField::constant(1.0).per_ray(3),
            b: CoefficientField::constant(0.0).per_ray(3),
            c: CoefficientField::constant(0.0).per_ray(3),
            f: CoefficientField::constant(0.0).per_ray(3),
            alpha: CoefficientField::constant(1.0).per_ray(3),
            r: CoefficientField::constant(0.0),
            phi: CoefficientField::constant(0.0),
            psi: CoefficientField::constant(1.0).per_ray(3),
            g: CoefficientField::constant(1.0).per_ray(3),
            g_dl_junction: Some(CoefficientField::constant(0.0)),
            a_floor: 1.0,
            alpha_floor: 1.0,
            norms: DeclaredNorms::default(),
        }
    }

    #[test]
    fn gathered_norms_prefer_declared_bounds() {
        let mut data = unit_local_time_data();
        data.norms.f_sup = Some(7.0);
        let grid = crate::network::build_grid(
            data.network,
            1.0,
            1.0,
            2,
            4,
            2,
            &crate::network::Thresholds::none(),
        )
        .unwrap();
        let norms = LocalTimeNorms::gather(&data, &grid).unwrap();
        assert_eq!(norms.f_sup, 7.0);
        assert_eq!(norms.a_sup, 1.0);
        assert_eq!(norms.g_dl_junction_sup, 0.0);
    }

    #[test]
    fn unit_cube_constants_and_certificate() {
        let data = unit_local_time_data();
        let grid = crate::network::build_grid(
            data.network,
            1.0,
            1.0,
            8,
            8,
            4,
            &crate::network::Thresholds::none(),
        )
        .unwrap();
        let norms = LocalTimeNorms::gather(&data, &grid).unwrap();
        let constants = constants_full(&NormInputs::LocalTime(norms));
        let m0 = constants.m0.unwrap();
        assert!((m0 - 14.7781121978613).abs() <= 1e-12);
        assert_eq!(constants.m1.unwrap(), 0.0);

        let cube = crate::local_time::run_backward(
            &data,
            &grid,
            crate::elliptic::Scheme::Upwind,
            crate::local_time::BetaMode::Compliant,
        )
        .unwrap();
        let observed = observe_cube(&cube);
        assert!((observed.sup_u - 1.0).abs() <= 1e-12);
        let report = certify(&ObservedNorms::LocalTime(observed), &constants, 0.05);
        assert!(report.pass, "{report:?}");
        assert_eq!(report.entries.len(), 5);
    }

    #[test]
    fn kind_mismatch_fails_certification() {
        let data = unit_local_time_data();
        let grid = crate::network::build_grid(
            data.network,
            1.0,
            1.0,
            2,
            4,
            2,
            &crate::network::Thresholds::none(),
        )
        .unwrap();
        let norms = LocalTimeNorms::gather(&data, &grid).unwrap();
        let constants = constants_full(&NormInputs::LocalTime(norms));
        let fake = ObservedNorms::Classical(ClassicalObserved {
            time_rate: 1.0,
            sup_u: 0.0,
            time_quotient: 0.0,
            gradient_sup: 0.0,
            junction_quotient: 0.0,
            second_diff_sup: 0.0,
        });
        assert!(!certify(&fake, &constants, 0.0).pass);
    }

    #[test]
    fn non_finite_bounds_serialize_as_strings() {
        let entry = upper("x", 1.0, f64::INFINITY, 0.0);
        let value = serde_json::to_value(&entry).unwrap();
        assert_eq!(value["bound"], serde_json::Value::String("inf".to_string()));
        assert_eq!(value["observed"], serde_json::json!(1.0));
    }
}
