//! Structural checks on a computed pair: positivity of `A2`, absence of
//! semi-trivial solutions, the amplitude sandwich and tail decay rates.
//!
//! Every check has a hypothesis on `(kappa, beta)`. A check whose hypothesis
//! does not hold is still evaluated and reported but does not enter
//! `all_pass`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{flux_q, residual_max, FluxTargets, PhysicsParams, VortexPair};
use crate::grid::Profile;

/// Amplitude below which a component counts as identically zero.
pub const TRIVIALITY_TOL: f64 = 1e-7;
/// Margin required by the strict sandwich inequalities.
pub const SANDWICH_MARGIN: f64 = 1e-10;
/// Fitted decay rates may fall this far (relative) below the bound.
pub const DECAY_SLACK: f64 = 0.2;
/// Relative flux mismatch accepted against the targets. A Newton polish at
/// fixed multipliers moves the fluxes at the level of the minimizer tolerance.
pub const FLUX_RTOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Triviality {
    FullyNontrivial,
    A1Zero,
    A2Zero,
    Trivial,
}

/// `A2 > 0` at every interior node.
pub fn check_positivity_a2(pair: &VortexPair) -> bool {
    pair.a2.values().iter().all(|&v| v > 0.0)
}

pub fn classify_triviality(pair: &VortexPair, tol: f64) -> Triviality {
    match (pair.a1.max_abs() > tol, pair.a2.max_abs() > tol) {
        (true, true) => Triviality::FullyNontrivial,
        (false, true) => Triviality::A1Zero,
        (true, false) => Triviality::A2Zero,
        (false, false) => Triviality::Trivial,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SandwichCheck {
    /// `lo < M2 < hi`, both with margin [`SANDWICH_MARGIN`].
    pub pass: bool,
    pub lo: f64,
    pub hi: f64,
    pub m1: f64,
    pub m2: f64,
    /// `hi > lo`, necessary for any genuine solution.
    pub consistent: bool,
}

/// `l^2/(2R^2) + kappa < M2 < M1^2 / (2 l^2/R^2 + 2(2 kappa + beta))`.
pub fn check_sandwich(pair: &VortexPair, params: &PhysicsParams) -> SandwichCheck {
    let m1 = pair.a1.max_abs();
    let m2 = pair.a2.max_abs();
    let r_sq = params.radius * params.radius;
    let lo = params.l_sq() / (2.0 * r_sq) + params.kappa;
    let hi = m1 * m1 / (2.0 * params.l_sq() / r_sq + 2.0 * params.sh_mass());
    SandwichCheck {
        pass: lo + SANDWICH_MARGIN < m2 && m2 + SANDWICH_MARGIN < hi,
        lo,
        hi,
        m1,
        m2,
        consistent: hi > lo,
    }
}

/// Tail window as fractions of the radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayWindow {
    pub start: f64,
    pub end: f64,
}

impl Default for DecayWindow {
    fn default() -> Self {
        Self {
            start: 0.75,
            end: 0.95,
        }
    }
}

/// Fitted model `A^2(r) ~ c exp(-rate r)` for both components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate1: f64,
    pub rate2: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Least-squares line through `log A^2` over the window; returns `(rate, c)`.
pub fn fit_tail(a: &Profile, window: &DecayWindow) -> Result<(f64, f64)> {
    if !(0.0 <= window.start && window.start < window.end && window.end <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "bad decay window [{}, {}]",
            window.start, window.end
        )));
    }
    let radius = a.grid().radius();
    let (lo, hi) = (window.start * radius, window.end * radius);
    let mut pts = Vec::new();
    for (&r, &v) in a.grid().nodes().iter().zip(a.values()) {
        if r < lo || r > hi {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::FitUndefined(format!(
                "profile value {v:e} at r = {r} is not positive"
            )));
        }
        pts.push((r, (v * v).ln()));
    }
    if pts.len() < 2 {
        return Err(Error::FitUndefined("fewer than two nodes in the tail window".into()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok((-slope, (my - slope * mx).exp()))
}

pub fn fit_decay(pair: &VortexPair, window: &DecayWindow) -> Result<DecayFit> {
    let (rate1, c1) = fit_tail(&pair.a1, window)?;
    let (rate2, c2) = fit_tail(&pair.a2, window)?;
    Ok(DecayFit {
        rate1,
        rate2,
        c1,
        c2,
    })
}

/// Decay bounds: `sqrt(2 kappa)` for `A1^2`, `sqrt(2 kappa + beta)` for `A2^2`
/// and the stronger candidate `2 sqrt(2 kappa + beta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayBounds {
    pub a1: f64,
    pub a2: f64,
    pub a2_strong: f64,
}

impl DecayBounds {
    pub fn new(params: &PhysicsParams) -> Self {
        let s = params.sh_mass().max(0.0).sqrt();
        Self {
            a1: (2.0 * params.kappa).max(0.0).sqrt(),
            a2: s,
            a2_strong: 2.0 * s,
        }
    }
}

fn rate_ok(rate: Option<f64>, bound: f64) -> bool {
    rate.is_some_and(|r| r >= bound * (1.0 - DECAY_SLACK))
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub positive_a2: bool,
    pub semi_trivial: Triviality,
    pub m1: f64,
    pub m2: f64,
    pub sandwich_lo: f64,
    pub sandwich_hi: f64,
    pub sandwich_pass: bool,
    pub sandwich_consistent: bool,
    /// `None` when the fit is undefined.
    pub decay_rate_a1: Option<f64>,
    pub decay_rate_a2: Option<f64>,
    pub decay_bounds: DecayBounds,
    pub decay_a1_pass: bool,
    pub decay_a2_pass: bool,
    pub decay_a2_strong_pass: bool,
    pub flux_q1: f64,
    pub flux_q2: f64,
    /// `None` without targets.
    pub flux_pass: Option<bool>,
    pub residual_max: f64,
    /// `2 kappa + beta > 0`, needed for the positivity check.
    pub positivity_applicable: bool,
    /// `kappa > max{0, -beta/2}`, needed for sandwich and decay.
    pub bounds_applicable: bool,
    pub all_pass: bool,
    pub notes: Vec<String>,
}

/// Runs every check on `pair` at `params`.
pub fn verify_all(
    pair: &VortexPair,
    params: &PhysicsParams,
    targets: Option<&FluxTargets>,
) -> VerifyReport {
    let mut notes = Vec::new();
    let positive_a2 = check_positivity_a2(pair);
    let semi_trivial = classify_triviality(pair, TRIVIALITY_TOL);
    let sandwich = check_sandwich(pair, params);
    let bounds = DecayBounds::new(params);
    let (rate1, rate2) = match fit_decay(pair, &DecayWindow::default()) {
        Ok(f) => (Some(f.rate1), Some(f.rate2)),
        Err(e) => {
            notes.push(format!("decay fit undefined: {e}"));
            let one = |a: &Profile| fit_tail(a, &DecayWindow::default()).ok().map(|f| f.0);
            (one(&pair.a1), one(&pair.a2))
        }
    };
    let decay_a1_pass = rate_ok(rate1, bounds.a1);
    let decay_a2_pass = rate_ok(rate2, bounds.a2);
    let decay_a2_strong_pass = rate_ok(rate2, bounds.a2_strong);

    let (q1, q2) = (flux_q(&pair.a1), flux_q(&pair.a2));
    let flux_pass = targets.map(|t| {
        (q1 - t.q1).abs() <= FLUX_RTOL * t.q1 && (q2 - t.q2).abs() <= FLUX_RTOL * t.q2
    });

    let positivity_applicable = params.sh_mass() > 0.0;
    let bounds_applicable = params.in_existence_range();
    if !positivity_applicable {
        notes.push("2*kappa + beta <= 0: positivity of A2 not implied".into());
    }
    if !bounds_applicable {
        notes.push("kappa outside (max{0, -beta/2}, inf): sandwich and decay not implied".into());
    }

    let mut all_pass = semi_trivial == Triviality::FullyNontrivial && flux_pass.unwrap_or(true);
    if positivity_applicable {
        all_pass &= positive_a2;
    }
    if bounds_applicable {
        all_pass &= sandwich.pass && decay_a1_pass && decay_a2_pass;
    }

    VerifyReport {
        positive_a2,
        semi_trivial,
        m1: sandwich.m1,
        m2: sandwich.m2,
        sandwich_lo: sandwich.lo,
        sandwich_hi: sandwich.hi,
        sandwich_pass: sandwich.pass,
        sandwich_consistent: sandwich.consistent,
        decay_rate_a1: rate1,
        decay_rate_a2: rate2,
        decay_bounds: bounds,
        decay_a1_pass,
        decay_a2_pass,
        decay_a2_strong_pass,
        flux_q1: q1,
        flux_q2: q2,
        flux_pass,
        residual_max: residual_max(pair),
        positivity_applicable,
        bounds_applicable,
        all_pass,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn pair_from(
        radius: f64,
        n: usize,
        f1: impl Fn(f64) -> f64,
        f2: impl Fn(f64) -> f64,
    ) -> VortexPair {
        let g = make_grid(radius, n).unwrap();
        let p = PhysicsParams::new(1.0, 0.0, 1, radius).unwrap();
        VortexPair::new(
            Profile::from_fn(&g, f1).unwrap(),
            Profile::from_fn(&g, f2).unwrap(),
            p,
        )
        .unwrap()
    }

    #[test]
    fn positivity_detects_sign_change_and_zero() {
        let ok = pair_from(2.0, 50, |r| r * (2.0 - r), |r| r * (2.0 - r));
        assert!(check_positivity_a2(&ok));
        let bad = pair_from(2.0, 50, |r| r, |r| (2.0 * PI * r / 2.0).sin());
        assert!(!check_positivity_a2(&bad));
        let zero = pair_from(2.0, 50, |r| r, |_| 0.0);
        assert!(!check_positivity_a2(&zero));
    }

    #[test]
    fn triviality_classes() {
        let t = 1e-6;
        assert_eq!(classify_triviality(&pair_from(1.0, 10, |_| 0.0, |_| 0.0), t), Triviality::Trivial);
        assert_eq!(classify_triviality(&pair_from(1.0, 10, |_| 0.0, |r| r), t), Triviality::A1Zero);
        assert_eq!(classify_triviality(&pair_from(1.0, 10, |r| r, |_| 0.0), t), Triviality::A2Zero);
        assert_eq!(
            classify_triviality(&pair_from(1.0, 10, |r| r, |r| r), t),
            Triviality::FullyNontrivial
        );
    }

    #[test]
    fn exact_exponential_rate() {
        let p = pair_from(10.0, 400, |r| (-1.5 * r).exp(), |r| 2.0 * (-0.25 * r).exp());
        let f = fit_decay(&p, &DecayWindow::default()).unwrap();
        assert!((f.rate1 - 3.0).abs() < 1e-9);
        assert!((f.rate2 - 0.5).abs() < 1e-9);
        assert!((f.c1 - 1.0).abs() < 1e-8);
        assert!((f.c2 - 4.0).abs() < 1e-8);
    }

    #[test]
    fn nonpositive_tail_is_undefined() {
        let p = pair_from(10.0, 100, |r| 10.0 - r - 1.0, |r| r);
        assert!(matches!(
            fit_decay(&p, &DecayWindow::default()),
            Err(Error::FitUndefined(_))
        ));
    }

    #[test]
    fn sandwich_bounds() {
        let p = pair_from(10.0, 99, |r| 4.0 * (PI * r / 10.0).sin(), |r| 2.0 * (PI * r / 10.0).sin());
        let s = check_sandwich(&p, &p.params);
        assert!((s.lo - (0.005 + 1.0)).abs() < 1e-15);
        assert!((s.hi - 16.0 / (0.02 + 4.0)).abs() < 1e-12);
        assert!(s.pass);
        let low = VortexPair::new(p.a1.clone(), p.a2.scaled(0.01), p.params).unwrap();
        assert!(!check_sandwich(&low, &low.params).pass);
    }
}
