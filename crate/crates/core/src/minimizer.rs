//! Flux-constrained minimization of the action I and recovery of the
//! Lagrange multipliers `(kappa, beta)`.
//!
//! The flow is a preconditioned projected gradient method. The raw gradient
//! is smoothed by the screened operator of [`PairPreconditioner::for_action_i`]
//! and then made tangent to both flux spheres in the preconditioner metric,
//! so every search direction is a descent direction on the constraint set.
//! After the step each component goes through the nodewise absolute value
//! and is rescaled back onto its sphere.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::functionals::{flux_q, kernel, FluxTargets, PhysicsParams, VortexPair};
use crate::grid::{Profile, RadialGrid};
use crate::mountain_pass::{tent_profile, TentParams};
use crate::precond::PairPreconditioner;
use crate::report::{SolveMethod, SolveReport};

#[derive(Clone, Copy, Debug)]
pub struct MinimizeOptions {
    /// Initial step length.
    pub step: f64,
    pub max_iters: usize,
    /// Stop when the constraint-tangential gradient norm falls below this.
    pub grad_tol: f64,
    /// Replace each iterate by its nodewise absolute value.
    pub enforce_nonneg: bool,
    /// Mass term of the screened preconditioner.
    pub precond_shift: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_iters: 5000,
            grad_tol: 1e-7,
            enforce_nonneg: true,
            precond_shift: 1.0,
        }
    }
}

impl MinimizeOptions {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.grad_tol > 0.0 && self.precond_shift > 0.0) {
            return Err(Error::InvalidArgument(
                "step, grad_tol and precond_shift must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of [`check_flux_window`].
#[derive(Clone, Debug, PartialEq)]
pub struct FluxWindow {
    pub admissible: bool,
    /// Which bound failed, when not admissible.
    pub reason: Option<String>,
}

/// `0 < q1 < 2 pi |l|` and `q2 > 0`.
pub fn check_flux_window(targets: &FluxTargets, l: i32) -> FluxWindow {
    let cap = 2.0 * PI * (l.unsigned_abs() as f64);
    let reason = if !(targets.q1 > 0.0) {
        Some(format!("q1 = {} must be positive", targets.q1))
    } else if !(targets.q1 < cap) {
        Some(format!(
            "q1 = {} must be below 2*pi*|l| = {cap} for the action to be bounded below",
            targets.q1
        ))
    } else if !(targets.q2 > 0.0) {
        Some(format!("q2 = {} must be positive", targets.q2))
    } else {
        None
    };
    FluxWindow {
        admissible: reason.is_none(),
        reason,
    }
}

/// Coercive lower bound on I over the constraint set, with
/// `C1 = (1 - eps)/2` and `C2 = (l^2 - q1^2/(4 pi^2 eps))/2`.
pub fn coercive_lower_bound(pair: &VortexPair, targets: &FluxTargets, eps: f64) -> Result<f64> {
    let l_sq = pair.params.l_sq();
    let lo = targets.q1 * targets.q1 / (4.0 * PI * PI * l_sq);
    if !(eps > lo && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} outside the admissible window ({lo}, 1)"
        )));
    }
    let c1 = 0.5 * (1.0 - eps);
    let c2 = 0.5 * (l_sq - targets.q1 * targets.q1 / (4.0 * PI * PI * eps));
    let g = pair.grid();
    let (a1, a2) = (pair.a1.values(), pair.a2.values());
    Ok(c1 * g.dirichlet_form(a1)
        + c2 * kernel::inverse_moment(g, a1)
        + 0.25 * g.dirichlet_form(a2)
        + 2.0 * l_sq * kernel::inverse_moment(g, a2)
        - targets.q2 / (2.0 * PI))
}

/// Scales `a` onto the sphere `Q(a) = q_target`.
pub fn project_flux(a: &Profile, q_target: f64) -> Result<Profile> {
    if !(q_target > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "flux target must be positive, got {q_target}"
        )));
    }
    let q = flux_q(a);
    if !(q > 0.0) {
        return Err(Error::DegenerateProjection);
    }
    Ok(a.scaled((q_target / q).sqrt()))
}

/// `(kappa, beta)` making `grad_J` orthogonal to `A1` and `A2`.
pub fn extract_multipliers(pair: &VortexPair) -> Result<(f64, f64)> {
    let g = pair.grid();
    let (a1, a2) = (pair.a1.values(), pair.a2.values());
    let (g1, g2) = kernel::grad_i(g, pair.params.l_sq(), a1, a2);
    let (m1, m2) = (g.dot(a1, a1), g.dot(a2, a2));
    if m1 == 0.0 {
        return Err(Error::UndefinedMultiplier("first component has zero flux".into()));
    }
    if m2 == 0.0 {
        return Err(Error::UndefinedMultiplier("second component has zero flux".into()));
    }
    let kappa = -g.dot(&g1, a1) / (2.0 * m1);
    let sh_mass = -g.dot(&g2, a2) / (2.0 * m2);
    Ok((kappa, sh_mass - 2.0 * kappa))
}

/// Snapshot handed to the observer after every accepted step.
#[derive(Debug)]
pub struct MinimizeIterate<'a> {
    pub iter: usize,
    pub action: f64,
    pub step: f64,
    pub pair: &'a VortexPair,
}

/// Constrained minimization of I at `l` and `targets` on `grid`. The
/// returned pair carries the extracted multipliers in its parameters.
pub fn minimize(
    grid: &RadialGrid,
    l: i32,
    targets: &FluxTargets,
    opts: &MinimizeOptions,
    seed: Option<&VortexPair>,
) -> Result<(VortexPair, SolveReport)> {
    minimize_observed(grid, l, targets, opts, seed, |_| {})
}

/// [`minimize`] calling `observer` on the seed and after every accepted step.
pub fn minimize_observed<F>(
    grid: &RadialGrid,
    l: i32,
    targets: &FluxTargets,
    opts: &MinimizeOptions,
    seed: Option<&VortexPair>,
    mut observer: F,
) -> Result<(VortexPair, SolveReport)>
where
    F: FnMut(&MinimizeIterate<'_>),
{
    opts.validate()?;
    let window = check_flux_window(targets, l);
    if let Some(reason) = window.reason {
        return Err(Error::Precondition(reason));
    }
    let params = PhysicsParams::new(0.0, 0.0, l, grid.radius())?;
    let l_sq = params.l_sq();

    let (a1, a2) = match seed {
        Some(s) => {
            if s.grid() != grid {
                return Err(Error::GridMismatch);
            }
            (s.a1.clone(), s.a2.clone())
        }
        None => {
            let tent = tent_profile(grid, &TentParams::for_radius(grid.radius(), 1.0)?)?;
            (tent.clone(), tent)
        }
    };
    let start = |a: &Profile, q: f64| -> Result<Vec<f64>> {
        let a = if opts.enforce_nonneg { a.map(f64::abs) } else { a.clone() };
        project_flux(&a, q)
            .map(Profile::into_values)
            .map_err(|_| Error::InvalidArgument("seed component has zero flux".into()))
    };
    let mut x1 = start(&a1, targets.q1)?;
    let mut x2 = start(&a2, targets.q2)?;

    let precond = PairPreconditioner::for_action_i(grid, l_sq, opts.precond_shift)?;

    let retract = |x: &[f64], d: &[f64], tau: f64, q: f64| -> Result<Vec<f64>> {
        let y: Vec<f64> = x
            .iter()
            .zip(d)
            .map(|(a, b)| {
                let v = a - tau * b;
                if opts.enforce_nonneg {
                    v.abs()
                } else {
                    v
                }
            })
            .collect();
        let flux = 2.0 * PI * grid.dot(&y, &y);
        if !(flux > 0.0) || !flux.is_finite() {
            return Err(Error::SolverFailure(
                "a component collapsed to zero during the flow".into(),
            ));
        }
        let c = (q / flux).sqrt();
        Ok(y.into_iter().map(|v| c * v).collect())
    };

    let mut action = kernel::action_i(grid, l_sq, &x1, &x2);
    let mut history = vec![action];
    let mut tau = opts.step;
    let step_cap = 10.0 * opts.step;
    let mut iters = 0;
    let mut grad_norm;
    let mut stalled = false;
    observer(&MinimizeIterate {
        iter: 0,
        action,
        step: tau,
        pair: &VortexPair::from_state(grid, params, &[x1.clone(), x2.clone()].concat()),
    });
    loop {
        let (g1, g2) = kernel::grad_i(grid, l_sq, &x1, &x2);
        grad_norm = (tangential_sq(grid, &g1, &x1) + tangential_sq(grid, &g2, &x2)).sqrt();
        if grad_norm <= opts.grad_tol || iters >= opts.max_iters {
            break;
        }
        let (d1, d2) = precond.apply_inverse(&g1, &g2);
        let (p1, p2) = precond.apply_inverse(&x1, &x2);
        let d1 = metric_tangent(grid, &d1, &p1, &x1);
        let d2 = metric_tangent(grid, &d2, &p2, &x2);

        let mut accepted = None;
        loop {
            let y1 = retract(&x1, &d1, tau, targets.q1)?;
            let y2 = retract(&x2, &d2, tau, targets.q2)?;
            let trial = kernel::action_i(grid, l_sq, &y1, &y2);
            if trial <= action {
                accepted = Some((y1, y2, trial));
                break;
            }
            tau *= 0.5;
            if tau < 1e-14 * opts.step {
                break;
            }
        }
        iters += 1;
        let Some((y1, y2, trial)) = accepted else {
            stalled = true;
            break;
        };
        x1 = y1;
        x2 = y2;
        action = trial;
        history.push(action);
        observer(&MinimizeIterate {
            iter: iters,
            action,
            step: tau,
            pair: &VortexPair::from_state(grid, params, &[x1.clone(), x2.clone()].concat()),
        });
        tau = (1.5 * tau).min(step_cap);
    }

    let raw = VortexPair::from_state(grid, params, &[x1, x2].concat());
    let (kappa, beta) = extract_multipliers(&raw)?;
    let pair = raw.with_params(params.with_multipliers(kappa, beta));
    let converged = grad_norm <= opts.grad_tol;
    let positive = pair.a1.values().iter().chain(pair.a2.values()).all(|&v| v > 0.0);
    let note = if stalled {
        Some(format!("line search stalled at tangential gradient {grad_norm:.3e}"))
    } else if !converged {
        Some(format!("iteration limit reached at tangential gradient {grad_norm:.3e}"))
    } else if !positive {
        Some("converged profile is not strictly positive".to_string())
    } else {
        None
    };
    let report = SolveReport {
        method: SolveMethod::Minimize,
        converged,
        kappa,
        beta,
        iters,
        final_i: action,
        q1: flux_q(&pair.a1),
        q2: flux_q(&pair.a2),
        proj_grad_norm: grad_norm,
        residual_max: crate::functionals::residual_max(&pair),
        in_existence_range: pair.params.in_existence_range(),
        trivial: false,
        history,
        path: None,
        note,
    };
    Ok((pair, report))
}

/// Weighted squared norm of `g` minus its component along `a`.
fn tangential_sq(grid: &RadialGrid, g: &[f64], a: &[f64]) -> f64 {
    let c = grid.dot(g, a) / grid.dot(a, a);
    let t: Vec<f64> = g.iter().zip(a).map(|(u, v)| u - c * v).collect();
    grid.dot(&t, &t)
}

/// `d - (<d, a> / <p, a>) p` with `p = P^{-1} a`: the part of `d` tangent to
/// the sphere through `a`.
fn metric_tangent(grid: &RadialGrid, d: &[f64], p: &[f64], a: &[f64]) -> Vec<f64> {
    let c = grid.dot(d, a) / grid.dot(p, a);
    d.iter().zip(p).map(|(u, v)| u - c * v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn flux_window_examples() {
        assert!(check_flux_window(&FluxTargets::new(PI, 2.0 * PI).unwrap(), 1).admissible);
        let w = check_flux_window(&FluxTargets::new(2.0 * PI, 1.0).unwrap(), 1);
        assert!(!w.admissible);
        assert!(w.reason.unwrap().contains("2*pi*|l|"));
        assert!(check_flux_window(&FluxTargets::new(5.0, 1.0).unwrap(), 2).admissible);
        assert!(check_flux_window(&FluxTargets::new(5.0, 1.0).unwrap(), -2).admissible);
    }

    #[test]
    fn boundary_flux_is_rejected() {
        let g = make_grid(10.0, 64).unwrap();
        let t = FluxTargets::new(2.0 * PI, 1.0).unwrap();
        let err = minimize(&g, 1, &t, &MinimizeOptions::default(), None).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn coercive_constants() {
        let g = make_grid(3.0, 50).unwrap();
        let p = PhysicsParams::new(0.0, 0.0, 1, 3.0).unwrap();
        let zero = VortexPair::zeros(&g, p).unwrap();
        let t = FluxTargets::new(PI, 2.0 * PI).unwrap();
        let b = coercive_lower_bound(&zero, &t, 0.5).unwrap();
        assert!((b + 1.0).abs() < 1e-15);
        assert!(coercive_lower_bound(&zero, &t, 0.25).is_err());
        assert!(coercive_lower_bound(&zero, &t, 1.0).is_err());
    }

    #[test]
    fn projection_scales_exactly() {
        let g = make_grid(2.0, 99).unwrap();
        let a = tent_profile(&g, &TentParams::new(1.0, 1.0).unwrap()).unwrap();
        let q = flux_q(&a);
        let b = project_flux(&a, 2.0 * PI).unwrap();
        assert!((flux_q(&b) - 2.0 * PI).abs() < 1e-13);
        let c = (2.0 * PI / q).sqrt();
        assert!((b.values()[10] - c * a.values()[10]).abs() < 1e-15);
        let same = project_flux(&b, 2.0 * PI).unwrap();
        for (u, v) in same.values().iter().zip(b.values()) {
            assert!((u - v).abs() < 1e-15);
        }
        assert!(matches!(
            project_flux(&Profile::zeros(&g), 1.0),
            Err(Error::DegenerateProjection)
        ));
    }

    #[test]
    fn multipliers_undefined_for_zero_component() {
        let g = make_grid(5.0, 40).unwrap();
        let p = PhysicsParams::new(1.0, 0.0, 1, 5.0).unwrap();
        let a1 = Profile::from_fn(&g, |r| r * (5.0 - r)).unwrap();
        let pair = VortexPair::new(a1, Profile::zeros(&g), p).unwrap();
        assert!(matches!(
            extract_multipliers(&pair),
            Err(Error::UndefinedMultiplier(_))
        ));
    }

    #[test]
    fn small_problem_converges_on_constraints() {
        let g = make_grid(6.0, 128).unwrap();
        let t = FluxTargets::new(2.0, 3.0).unwrap();
        let (pair, rep) = minimize(&g, 1, &t, &MinimizeOptions::default(), None).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!((rep.q1 - 2.0).abs() < 1e-12 * 2.0);
        assert!((rep.q2 - 3.0).abs() < 1e-12 * 3.0);
        assert!(rep.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(pair.a1.values().iter().all(|&v| v > 0.0));
        // stationarity of J with the extracted multipliers
        assert!(rep.residual_max < 1e-4, "{}", rep.residual_max);
    }
}
