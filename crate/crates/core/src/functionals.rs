//! Scalar functionals, their gradients and the residual of the l-vortex
//! system
//!
//! ```text
//! A1'' + A1'/r - (l^2/r^2) A1 = 2 (kappa - A2) A1
//! A2'' + A2'/r - (4 l^2/r^2) A2 = 4 (2 kappa + beta) A2 - 2 A1^2
//! A1(0) = A1(R) = A2(0) = A2(R) = 0
//! ```
//!
//! Every functional is assembled from the same discrete pieces: the
//! cell-based Dirichlet form for `int r A_r^2 dr`, nodal quadrature for the
//! potential and nonlinear terms. Gradients are taken in the weighted inner
//! product `<f, g> = sum_i w_i f_i g_i`, so they reproduce the central
//! finite-difference residual exactly:
//!
//! ```text
//! grad_J = (-F1, -F2 / 2),   grad_I = grad_J - (2 kappa A1, 2 (2 kappa + beta) A2)
//! ```

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Profile, RadialGrid};

/// Parameters of the l-vortex system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhysicsParams {
    /// Wave propagation constant.
    pub kappa: f64,
    /// Phase mismatch.
    pub beta: f64,
    /// Vortex number, nonzero.
    pub l: i32,
    /// Domain radius.
    pub radius: f64,
}

impl PhysicsParams {
    pub fn new(kappa: f64, beta: f64, l: i32, radius: f64) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidArgument("vortex number l must be nonzero".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "domain radius must be positive, got {radius}"
            )));
        }
        if !(kappa.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidArgument("kappa and beta must be finite".into()));
        }
        Ok(Self {
            kappa,
            beta,
            l,
            radius,
        })
    }

    pub fn l_sq(&self) -> f64 {
        let l = self.l as f64;
        l * l
    }

    /// `2 kappa + beta`, the screening constant of the second harmonic.
    pub fn sh_mass(&self) -> f64 {
        2.0 * self.kappa + self.beta
    }

    /// `kappa > max{0, -beta/2}`.
    pub fn in_existence_range(&self) -> bool {
        self.kappa > 0.0 && self.sh_mass() > 0.0
    }

    pub fn require_existence_range(&self) -> Result<()> {
        if self.in_existence_range() {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "need kappa > max{{0, -beta/2}}, got kappa = {}, beta = {}",
                self.kappa, self.beta
            )))
        }
    }

    pub fn with_multipliers(self, kappa: f64, beta: f64) -> Self {
        Self {
            kappa,
            beta,
            ..self
        }
    }
}

/// Prescribed energy fluxes `Q(A1) = q1`, `Q(A2) = q2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FluxTargets {
    pub q1: f64,
    pub q2: f64,
}

impl FluxTargets {
    pub fn new(q1: f64, q2: f64) -> Result<Self> {
        if !(q1 > 0.0 && q2 > 0.0 && q1.is_finite() && q2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "flux targets must be positive, got q1 = {q1}, q2 = {q2}"
            )));
        }
        Ok(Self { q1, q2 })
    }
}

/// A candidate solution pair together with the parameters it is evaluated at.
#[derive(Clone, Debug, PartialEq)]
pub struct VortexPair {
    pub a1: Profile,
    pub a2: Profile,
    pub params: PhysicsParams,
}

impl VortexPair {
    pub fn new(a1: Profile, a2: Profile, params: PhysicsParams) -> Result<Self> {
        if a1.grid() != a2.grid() {
            return Err(Error::GridMismatch);
        }
        let r = a1.grid().radius();
        if (r - params.radius).abs() > 1e-12 * r {
            return Err(Error::InvalidArgument(format!(
                "grid radius {r} differs from parameter radius {}",
                params.radius
            )));
        }
        Ok(Self { a1, a2, params })
    }

    pub fn zeros(grid: &RadialGrid, params: PhysicsParams) -> Result<Self> {
        Self::new(Profile::zeros(grid), Profile::zeros(grid), params)
    }

    pub fn grid(&self) -> &RadialGrid {
        self.a1.grid()
    }

    pub fn with_params(mut self, params: PhysicsParams) -> Self {
        self.params = params;
        self
    }

    /// Node values laid out as `[a1..., a2...]`.
    pub fn to_state(&self) -> Vec<f64> {
        let mut s = self.a1.values().to_vec();
        s.extend_from_slice(self.a2.values());
        s
    }

    pub(crate) fn from_state(grid: &RadialGrid, params: PhysicsParams, state: &[f64]) -> Self {
        let n = grid.n();
        Self {
            a1: Profile::from_raw(grid, state[..n].to_vec()),
            a2: Profile::from_raw(grid, state[n..].to_vec()),
            params,
        }
    }
}

/// `Q(A) = 2 pi int A^2 r dr`.
pub fn flux_q(a: &Profile) -> f64 {
    2.0 * PI * a.mass()
}

/// `Q(A1) + 2 Q(A2)`.
pub fn total_flux(pair: &VortexPair) -> f64 {
    flux_q(&pair.a1) + 2.0 * flux_q(&pair.a2)
}

/// Energy `int (A1_r^2 + A2_r^2 + A1^2/r^2 + A2^2/r^2 + A1^2 A2) r dr`.
pub fn energy_e(pair: &VortexPair) -> f64 {
    let g = pair.grid();
    let (a1, a2) = (pair.a1.values(), pair.a2.values());
    let pointwise: f64 = g
        .nodes()
        .iter()
        .zip(g.weights())
        .zip(a1.iter().zip(a2))
        .map(|((r, w), (u, v))| w * ((u * u + v * v) / (r * r) + u * u * v))
        .sum();
    g.dirichlet_form(a1) + g.dirichlet_form(a2) + pointwise
}

/// Action whose constrained minimizers carry `kappa`, `beta` as multipliers:
/// `1/2 int (A1_r^2 + A2_r^2/2 + l^2 A1^2/r^2 + 2 l^2 A2^2/r^2 - 2 A1^2 A2) r dr`.
pub fn action_i(pair: &VortexPair) -> f64 {
    kernel::action_i(pair.grid(), pair.params.l_sq(), pair.a1.values(), pair.a2.values())
}

/// Indefinite action at prescribed `kappa`, `beta`:
/// the quadratic part of [`action_i`] plus
/// `int (kappa A1^2 + (2 kappa + beta) A2^2 - A1^2 A2) r dr`.
pub fn action_j(pair: &VortexPair) -> f64 {
    kernel::action_j(pair.grid(), &pair.params, pair.a1.values(), pair.a2.values())
}

/// `||A||^2 = int (A_r^2 + l^2 A^2 / r^2) r dr`.
pub fn h_norm_sq(a: &Profile, l: i32) -> f64 {
    let l = l as f64;
    kernel::h_norm_sq(a.grid(), l * l, a.values())
}

/// Product norm `||A1||^2 + ||A2||^2`.
pub fn pair_h_norm_sq(pair: &VortexPair) -> f64 {
    h_norm_sq(&pair.a1, pair.params.l) + h_norm_sq(&pair.a2, pair.params.l)
}

/// Weighted-`L^2` gradient of [`action_i`].
pub fn grad_i(pair: &VortexPair) -> (Profile, Profile) {
    let g = pair.grid();
    let (g1, g2) = kernel::grad_i(g, pair.params.l_sq(), pair.a1.values(), pair.a2.values());
    (Profile::from_raw(g, g1), Profile::from_raw(g, g2))
}

/// Weighted-`L^2` gradient of [`action_j`].
pub fn grad_j(pair: &VortexPair) -> (Profile, Profile) {
    let g = pair.grid();
    let (g1, g2) = kernel::grad_j(g, &pair.params, pair.a1.values(), pair.a2.values());
    (Profile::from_raw(g, g1), Profile::from_raw(g, g2))
}

/// Left minus right hand side of both equations at every interior node.
pub fn residual(pair: &VortexPair) -> (Profile, Profile) {
    let g = pair.grid();
    let (f1, f2) = kernel::residual(g, &pair.params, pair.a1.values(), pair.a2.values());
    (Profile::from_raw(g, f1), Profile::from_raw(g, f2))
}

/// Max-abs over both residual components.
pub fn residual_max(pair: &VortexPair) -> f64 {
    let (f1, f2) = residual(pair);
    f1.max_abs().max(f2.max_abs())
}

/// All scalar diagnostics of a pair in one record.
#[derive(Clone, Debug, Serialize)]
#[allow(non_snake_case)]
pub struct FunctionalReport {
    pub Q1: f64,
    pub Q2: f64,
    pub total_flux: f64,
    pub E: f64,
    pub I: f64,
    pub J: f64,
    pub h_norm_sq_1: f64,
    pub h_norm_sq_2: f64,
    pub residual_max: f64,
}

impl FunctionalReport {
    pub fn evaluate(pair: &VortexPair) -> Self {
        Self {
            Q1: flux_q(&pair.a1),
            Q2: flux_q(&pair.a2),
            total_flux: total_flux(pair),
            E: energy_e(pair),
            I: action_i(pair),
            J: action_j(pair),
            h_norm_sq_1: h_norm_sq(&pair.a1, pair.params.l),
            h_norm_sq_2: h_norm_sq(&pair.a2, pair.params.l),
            residual_max: residual_max(pair),
        }
    }
}

/// Slice-level evaluation shared by the solvers.
pub(crate) mod kernel {
    use crate::functionals::PhysicsParams;
    use crate::grid::RadialGrid;

    /// `sum_i w_i a_i^2 / r_i^2`, the quadrature of `int a^2 / r dr`.
    pub fn inverse_moment(g: &RadialGrid, a: &[f64]) -> f64 {
        g.nodes()
            .iter()
            .zip(g.weights())
            .zip(a)
            .map(|((r, w), v)| w * v * v / (r * r))
            .sum()
    }

    pub fn cubic(g: &RadialGrid, a1: &[f64], a2: &[f64]) -> f64 {
        g.weights()
            .iter()
            .zip(a1.iter().zip(a2))
            .map(|(w, (u, v))| w * u * u * v)
            .sum()
    }

    fn quadratic_i(g: &RadialGrid, l_sq: f64, a1: &[f64], a2: &[f64]) -> f64 {
        0.5 * (g.dirichlet_form(a1)
            + 0.5 * g.dirichlet_form(a2)
            + l_sq * inverse_moment(g, a1)
            + 2.0 * l_sq * inverse_moment(g, a2))
    }

    pub fn action_i(g: &RadialGrid, l_sq: f64, a1: &[f64], a2: &[f64]) -> f64 {
        quadratic_i(g, l_sq, a1, a2) - cubic(g, a1, a2)
    }

    pub fn action_j(g: &RadialGrid, p: &PhysicsParams, a1: &[f64], a2: &[f64]) -> f64 {
        let tail: f64 = g
            .weights()
            .iter()
            .zip(a1.iter().zip(a2))
            .map(|(w, (u, v))| w * (p.kappa * u * u + p.sh_mass() * v * v - u * u * v))
            .sum();
        quadratic_i(g, p.l_sq(), a1, a2) + tail
    }

    pub fn h_norm_sq(g: &RadialGrid, l_sq: f64, a: &[f64]) -> f64 {
        g.dirichlet_form(a) + l_sq * inverse_moment(g, a)
    }

    pub fn grad_i(g: &RadialGrid, l_sq: f64, a1: &[f64], a2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut g1 = g.laplacian(a1);
        let mut g2 = g.laplacian(a2);
        for (i, r) in g.nodes().iter().enumerate() {
            let pot = l_sq / (r * r);
            g1[i] = -g1[i] + pot * a1[i] - 2.0 * a1[i] * a2[i];
            g2[i] = -0.5 * g2[i] + 2.0 * pot * a2[i] - a1[i] * a1[i];
        }
        (g1, g2)
    }

    pub fn grad_j(g: &RadialGrid, p: &PhysicsParams, a1: &[f64], a2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut g1, mut g2) = grad_i(g, p.l_sq(), a1, a2);
        let (c1, c2) = (2.0 * p.kappa, 2.0 * p.sh_mass());
        for i in 0..a1.len() {
            g1[i] += c1 * a1[i];
            g2[i] += c2 * a2[i];
        }
        (g1, g2)
    }

    pub fn residual(g: &RadialGrid, p: &PhysicsParams, a1: &[f64], a2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut f1 = g.laplacian(a1);
        let mut f2 = g.laplacian(a2);
        let l_sq = p.l_sq();
        for (i, r) in g.nodes().iter().enumerate() {
            let pot = l_sq / (r * r);
            f1[i] -= pot * a1[i] + 2.0 * (p.kappa - a2[i]) * a1[i];
            f2[i] -= 4.0 * pot * a2[i] + 4.0 * p.sh_mass() * a2[i] - 2.0 * a1[i] * a1[i];
        }
        (f1, f2)
    }

    pub fn max_abs2(a: &[f64], b: &[f64]) -> f64 {
        a.iter().chain(b).fold(0.0, |m, v| m.max(v.abs()))
    }
}
