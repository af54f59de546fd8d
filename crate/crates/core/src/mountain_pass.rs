//! Saddle points of the indefinite action J at prescribed `(kappa, beta)`.
//!
//! The search keeps a polygonal path from the origin to a tent-shaped
//! endpoint with negative action. J restricted to a straight segment is a
//! cubic polynomial, so the maximum of J over the whole path is found
//! exactly. Each round the maximizer becomes a path vertex and is pushed
//! along the preconditioned descent direction of J; the move is accepted
//! only if the path maximum drops. Vertices whose removal does not raise the
//! path maximum are dropped to keep the vertex count bounded.

use std::f64::consts::LN_2;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{action_i, flux_q, kernel, PhysicsParams, VortexPair};
use crate::grid::{Profile, RadialGrid};
use crate::precond::PairPreconditioner;
use crate::report::{PathDiagnostics, PathRound, SolveMethod, SolveReport};

/// Tent `A0(r) = (b/a) r` on `[0, a]`, `(b/a)(2a - r)` on `[a, 2a]`, with `R = 2a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TentParams {
    pub a: f64,
    pub b: f64,
}

impl TentParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tent needs a > 0 and b > 0, got a = {a}, b = {b}"
            )));
        }
        Ok(Self { a, b })
    }

    /// Tent filling the whole domain `[0, radius]`.
    pub fn for_radius(radius: f64, b: f64) -> Result<Self> {
        Self::new(0.5 * radius, b)
    }

    pub fn value(&self, r: f64) -> f64 {
        let slope = self.b / self.a;
        if r <= self.a {
            slope * r
        } else {
            slope * (2.0 * self.a - r)
        }
    }

    /// Derivative away from the kink at `r = a`.
    pub fn derivative(&self, r: f64) -> f64 {
        let slope = self.b / self.a;
        if r < self.a {
            slope
        } else {
            -slope
        }
    }
}

/// Samples the tent on `grid`; the grid must span exactly `[0, 2a]`.
pub fn tent_profile(grid: &RadialGrid, t: &TentParams) -> Result<Profile> {
    let radius = grid.radius();
    if (radius - 2.0 * t.a).abs() > 1e-12 * radius {
        return Err(Error::InvalidArgument(format!(
            "tent half-width {} does not match domain radius {radius}",
            t.a
        )));
    }
    Profile::from_fn(grid, |r| t.value(r))
}

/// The four weighted tent integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TentIntegrals {
    /// `int r A0^2 dr`
    pub mass: f64,
    /// `int r A0_r^2 dr`
    pub dirichlet: f64,
    /// `int A0^2 / r dr`
    pub inverse: f64,
    /// `int r A0^3 dr`
    pub cubic: f64,
}

impl TentIntegrals {
    pub fn closed_form(t: &TentParams) -> Self {
        let (a, b) = (t.a, t.b);
        Self {
            mass: 2.0 / 3.0 * a * a * b * b,
            dirichlet: 2.0 * b * b,
            inverse: 2.0 * b * b * (2.0 * LN_2 - 1.0),
            cubic: 0.5 * a * a * b * b * b,
        }
    }

    /// Grid quadrature. The derivative term samples the exact piecewise
    /// slope `+-b/a`, so it does not see the smoothing of the kink.
    pub fn quadrature(grid: &RadialGrid, t: &TentParams) -> Result<Self> {
        let a0 = tent_profile(grid, t)?;
        let v = a0.values();
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        let cube: Vec<f64> = v.iter().map(|x| x * x * x).collect();
        let over_r2 = grid.weighted_div_r2(v)?;
        let inv: Vec<f64> = over_r2.iter().zip(v).map(|(p, x)| p * x).collect();
        Ok(Self {
            mass: grid.integrate(&sq)?,
            dirichlet: grid.integrate_fn(|r| t.derivative(r).powi(2)),
            inverse: grid.integrate(&inv)?,
            cubic: grid.integrate(&cube)?,
        })
    }
}

/// Closed-form `J(A0, A0)`; the quadratic terms combine as stated only for `|l| = 1`.
pub fn tent_action_closed_form(params: &PhysicsParams, t: &TentParams) -> f64 {
    let (a, b) = (t.a, t.b);
    b * b
        * (1.5 + 3.0 * params.l_sq() * (2.0 * LN_2 - 1.0)
            + 2.0 / 3.0 * (3.0 * params.kappa + params.beta) * a * a
            - 0.5 * a * a * b)
}

/// Closed-form product norm `||(A0, A0)||^2 = 8 b^2 ln 2`, exact for `|l| = 1`.
pub fn tent_norm_closed_form(t: &TentParams) -> f64 {
    8.0 * t.b * t.b * LN_2
}

/// Norm level `K` and value floor `C0` of the mountain-pass geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpConstants {
    pub k: f64,
    pub c0: f64,
}

/// Lower bound `f(K) = K/4 - sqrt(2) R^2 K^{3/2}` for J on the sphere `||.||^2 = K`.
pub fn shell_bound(radius: f64, k: f64) -> f64 {
    0.25 * k - std::f64::consts::SQRT_2 * radius * radius * k.powf(1.5)
}

/// `K = 1/(72 R^4)` maximizes [`shell_bound`], with value `C0 = 1/(864 R^4)`.
pub fn mp_constants(radius: f64) -> MpConstants {
    let r4 = radius.powi(4);
    let k = 1.0 / (72.0 * r4);
    let c0 = 1.0 / (864.0 * r4);
    debug_assert!((shell_bound(radius, k) - c0).abs() <= 1e-12 * c0);
    MpConstants { k, c0 }
}

/// Rescales `pair` so that its product norm equals `k`.
pub fn scale_to_shell(pair: &VortexPair, k: f64) -> Result<VortexPair> {
    let norm = crate::functionals::pair_h_norm_sq(pair);
    if norm <= 0.0 {
        return Err(Error::DegenerateProjection);
    }
    let c = (k / norm).sqrt();
    VortexPair::new(pair.a1.scaled(c), pair.a2.scaled(c), pair.params)
}

/// Upper limit of the doubling search for the tent height.
const MAX_DOUBLINGS: usize = 200;

/// Doubles the tent height from `b = 1` until `||(A0, A0)||^2 > k` and
/// `J(A0, A0) < 0` (both by quadrature).
pub fn choose_endpoint(
    params: &PhysicsParams,
    grid: &RadialGrid,
    k: f64,
) -> Result<(VortexPair, TentParams)> {
    params.require_existence_range()?;
    let mut b = 1.0;
    for _ in 0..MAX_DOUBLINGS {
        let t = TentParams::for_radius(grid.radius(), b)?;
        let a0 = tent_profile(grid, &t)?;
        let pair = VortexPair::new(a0.clone(), a0, *params)?;
        let norm = crate::functionals::pair_h_norm_sq(&pair);
        let j = crate::functionals::action_j(&pair);
        if norm > k && j < 0.0 {
            return Ok((pair, t));
        }
        b *= 2.0;
    }
    Err(Error::SolverFailure(
        "no tent endpoint with negative action found".into(),
    ))
}

#[derive(Clone, Copy, Debug)]
pub struct MpOptions {
    /// Number of path segments, at least 16.
    pub path_points: usize,
    /// Rounds without a decrease of the path maximum before giving up.
    pub deform_iters: usize,
    /// Hard cap on deformation rounds.
    pub max_rounds: usize,
    /// Initial step along the preconditioned descent direction.
    pub descent_step: f64,
    /// Stop once the gradient max-norm at the path maximizer is below this.
    pub crit_tol: f64,
}

impl Default for MpOptions {
    fn default() -> Self {
        Self {
            path_points: 32,
            deform_iters: 200,
            max_rounds: 20_000,
            descent_step: 0.5,
            crit_tol: 1e-3,
        }
    }
}

impl MpOptions {
    fn validate(&self) -> Result<()> {
        if self.path_points < 16 {
            return Err(Error::InvalidArgument(format!(
                "path_points must be at least 16, got {}",
                self.path_points
            )));
        }
        if self.deform_iters == 0 || self.max_rounds == 0 {
            return Err(Error::InvalidArgument("iteration limits must be positive".into()));
        }
        if !(self.descent_step > 0.0 && self.crit_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "descent_step and crit_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct SegmentMax {
    s: f64,
    value: f64,
}

/// Evaluation context for J on flattened states `[a1..., a2...]`.
struct Landscape<'a> {
    grid: &'a RadialGrid,
    params: PhysicsParams,
    n: usize,
}

impl Landscape<'_> {
    fn j(&self, x: &[f64]) -> f64 {
        kernel::action_j(self.grid, &self.params, &x[..self.n], &x[self.n..])
    }

    fn norm_sq(&self, x: &[f64]) -> f64 {
        let l_sq = self.params.l_sq();
        kernel::h_norm_sq(self.grid, l_sq, &x[..self.n]) + kernel::h_norm_sq(self.grid, l_sq, &x[self.n..])
    }

    fn length(&self, p: &[f64], q: &[f64]) -> f64 {
        let d: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
        self.norm_sq(&d).sqrt()
    }

    /// Exact maximum of the cubic `s -> J(p + s (q - p))` on `[0, 1]`.
    fn segment_max(&self, p: &[f64], q: &[f64], jp: f64, jq: f64) -> SegmentMax {
        let at = |s: f64| -> f64 {
            let x: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + s * (b - a)).collect();
            self.j(&x)
        };
        let (j1, j2) = (at(1.0 / 3.0), at(2.0 / 3.0));
        // cubic through (0, jp), (1/3, j1), (2/3, j2), (1, jq)
        let c3 = 4.5 * (jq - 3.0 * j2 + 3.0 * j1 - jp);
        let c2 = 4.5 * (j2 - 2.0 * j1 + jp) - c3;
        let c1 = jq - jp - c2 - c3;
        let poly = |s: f64| jp + s * (c1 + s * (c2 + s * c3));
        let mut best = if jq > jp {
            SegmentMax { s: 1.0, value: jq }
        } else {
            SegmentMax { s: 0.0, value: jp }
        };
        for s in derivative_roots(c1, c2, c3) {
            if s > 0.0 && s < 1.0 {
                let v = poly(s);
                if v > best.value {
                    best = SegmentMax { s, value: v };
                }
            }
        }
        best
    }
}

/// Real roots of `c1 + 2 c2 s + 3 c3 s^2`.
fn derivative_roots(c1: f64, c2: f64, c3: f64) -> Vec<f64> {
    let (a, b, c) = (3.0 * c3, 2.0 * c2, c1);
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = Vec::with_capacity(2);
    if q != 0.0 {
        roots.push(q / a);
        roots.push(c / q);
    } else {
        roots.push(0.0);
    }
    roots
}

/// Polygonal path with cached vertex values, segment maxima and lengths.
struct Path {
    vertices: Vec<Vec<f64>>,
    values: Vec<f64>,
    maxima: Vec<SegmentMax>,
    lengths: Vec<f64>,
}

impl Path {
    fn new(land: &Landscape<'_>, vertices: Vec<Vec<f64>>) -> Self {
        let values: Vec<f64> = vertices.par_iter().map(|v| land.j(v)).collect();
        let maxima = (0..vertices.len() - 1)
            .into_par_iter()
            .map(|i| land.segment_max(&vertices[i], &vertices[i + 1], values[i], values[i + 1]))
            .collect();
        let lengths = (0..vertices.len() - 1)
            .into_par_iter()
            .map(|i| land.length(&vertices[i], &vertices[i + 1]))
            .collect();
        Self {
            vertices,
            values,
            maxima,
            lengths,
        }
    }

    fn max(&self) -> (usize, SegmentMax) {
        let mut best = 0;
        for (i, m) in self.maxima.iter().enumerate() {
            if m.value > self.maxima[best].value {
                best = i;
            }
        }
        (best, self.maxima[best])
    }

    fn arclength_fraction(&self, seg: usize, s: f64) -> f64 {
        let total: f64 = self.lengths.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        let before: f64 = self.lengths[..seg].iter().sum();
        (before + s * self.lengths[seg]) / total
    }

    /// Makes the point at parameter `s` of segment `seg` a vertex and returns its index.
    fn pin(&mut self, land: &Landscape<'_>, seg: usize, s: f64, point: Vec<f64>, value: f64) -> usize {
        const EDGE: f64 = 1e-12;
        if s <= EDGE {
            return seg;
        }
        if s >= 1.0 - EDGE {
            return seg + 1;
        }
        let left = land.length(&self.vertices[seg], &point);
        let right = land.length(&point, &self.vertices[seg + 1]);
        self.vertices.insert(seg + 1, point);
        self.values.insert(seg + 1, value);
        self.maxima[seg] = SegmentMax { s: 1.0, value };
        self.maxima.insert(seg + 1, SegmentMax { s: 0.0, value });
        self.lengths[seg] = left;
        self.lengths.insert(seg + 1, right);
        seg + 1
    }

    /// Removes interior vertices (never `keep`) while more than `target`
    /// vertices remain and a removal does not raise the path maximum.
    fn prune(&mut self, land: &Landscape<'_>, mut keep: usize, target: usize) -> usize {
        while self.vertices.len() > target {
            let ceiling = self.max().1.value;
            let candidates: Vec<(usize, SegmentMax, f64)> = (1..self.vertices.len() - 1)
                .into_par_iter()
                .filter(|&i| i != keep)
                .map(|i| {
                    let m = land.segment_max(
                        &self.vertices[i - 1],
                        &self.vertices[i + 1],
                        self.values[i - 1],
                        self.values[i + 1],
                    );
                    (i, m, self.lengths[i - 1] + self.lengths[i])
                })
                .filter(|(_, m, _)| m.value <= ceiling)
                .collect();
            let Some(&(i, m, _)) = candidates
                .iter()
                .min_by(|a, b| a.2.total_cmp(&b.2))
            else {
                break;
            };
            let chord = land.length(&self.vertices[i - 1], &self.vertices[i + 1]);
            self.vertices.remove(i);
            self.values.remove(i);
            self.maxima.remove(i);
            self.maxima[i - 1] = m;
            self.lengths.remove(i);
            self.lengths[i - 1] = chord;
            if i < keep {
                keep -= 1;
            }
        }
        keep
    }
}

/// Writes per-round diagnostics as `round,max_J,argmax_t,grad_norm`.
pub fn write_path_csv<W: Write>(rounds: &[PathRound], mut out: W) -> Result<()> {
    writeln!(out, "round,max_J,argmax_t,grad_norm")?;
    for r in rounds {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e}",
            r.round, r.max_j, r.argmax_t, r.grad_norm
        )?;
    }
    Ok(())
}

/// Mountain-pass search at `params`. The returned pair is the last path
/// maximizer; it is meant to be polished by Newton refinement.
pub fn mp_solve(
    params: &PhysicsParams,
    grid: &RadialGrid,
    opts: &MpOptions,
) -> Result<(VortexPair, SolveReport)> {
    params.require_existence_range()?;
    opts.validate()?;
    if (grid.radius() - params.radius).abs() > 1e-12 * params.radius {
        return Err(Error::InvalidArgument(
            "grid radius differs from parameter radius".into(),
        ));
    }
    let n = grid.n();
    let consts = mp_constants(params.radius);
    let (endpoint, tent) = choose_endpoint(params, grid, consts.k)?;
    let land = Landscape {
        grid,
        params: *params,
        n,
    };
    let precond = PairPreconditioner::for_action_j(grid, params.l_sq(), params.kappa, params.sh_mass())?;

    let end = endpoint.to_state();
    let m = opts.path_points;
    let vertices: Vec<Vec<f64>> = (0..=m)
        .map(|i| {
            let t = i as f64 / m as f64;
            end.iter().map(|v| t * v).collect()
        })
        .collect();
    let mut path = Path::new(&land, vertices);

    let mut diag = PathDiagnostics {
        c0: consts.c0,
        k_level: consts.k,
        endpoint_b: tent.b,
        endpoint_j: path.values[m],
        endpoint_j_closed_form: (params.l.abs() == 1).then(|| tent_action_closed_form(params, &tent)),
        ..Default::default()
    };

    let step_cap = 2.0 * opts.descent_step;
    let mut tau = opts.descent_step;
    let mut best_level = f64::INFINITY;
    let mut since_improvement = 0usize;
    let mut converged = false;
    let mut note = None;
    let mut maximizer;
    let mut grad_norm;
    let mut round = 0usize;
    loop {
        let (seg, smax) = path.max();
        let p = &path.vertices[seg];
        let q = &path.vertices[seg + 1];
        maximizer = p.iter().zip(q).map(|(a, b)| a + smax.s * (b - a)).collect::<Vec<f64>>();
        let (g1, g2) = kernel::grad_j(grid, params, &maximizer[..n], &maximizer[n..]);
        grad_norm = kernel::max_abs2(&g1, &g2);
        diag.path_max_history.push(smax.value);
        diag.rounds.push(PathRound {
            round,
            max_j: smax.value,
            argmax_t: path.arclength_fraction(seg, smax.s),
            grad_norm,
        });

        if smax.value < consts.c0 - 1e-9 || land.norm_sq(&maximizer) < 1e-3 * consts.k {
            return Err(Error::PathDegeneration(format!(
                "path maximum {:.3e} collapsed toward the origin (floor {:.3e})",
                smax.value, consts.c0
            )));
        }
        if grad_norm <= opts.crit_tol {
            converged = true;
            break;
        }
        if smax.value < best_level * (1.0 - 1e-12) {
            best_level = smax.value;
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if since_improvement >= opts.deform_iters {
            note = Some("path maximum stagnated".to_string());
            break;
        }
        if round >= opts.max_rounds {
            note = Some("round limit reached".to_string());
            break;
        }
        round += 1;

        let j = path.pin(&land, seg, smax.s, maximizer.clone(), smax.value);
        if j == 0 || j + 1 == path.vertices.len() {
            return Err(Error::PathDegeneration("path maximum sits on a pinned endpoint".into()));
        }
        let (d1, d2) = precond.apply_inverse(&g1, &g2);
        let dir = [d1, d2].concat();
        let mut moved = false;
        while tau > 1e-14 {
            let y: Vec<f64> = path.vertices[j].iter().zip(&dir).map(|(x, d)| x - tau * d).collect();
            let jy = land.j(&y);
            let left = land.segment_max(&path.vertices[j - 1], &y, path.values[j - 1], jy);
            let right = land.segment_max(&y, &path.vertices[j + 1], jy, path.values[j + 1]);
            if left.value.max(right.value) < smax.value {
                path.lengths[j - 1] = land.length(&path.vertices[j - 1], &y);
                path.lengths[j] = land.length(&y, &path.vertices[j + 1]);
                path.vertices[j] = y;
                path.values[j] = jy;
                path.maxima[j - 1] = left;
                path.maxima[j] = right;
                moved = true;
                break;
            }
            tau *= 0.5;
        }
        if !moved {
            note = Some("descent step collapsed".to_string());
            break;
        }
        tau = (1.25 * tau).min(step_cap);
        path.prune(&land, j, m + 1);
    }

    let pair = VortexPair::from_state(grid, *params, &maximizer);
    let floor = 10.0 * opts.crit_tol;
    if converged && (pair.a1.max_abs() <= floor || pair.a2.max_abs() <= floor) {
        converged = false;
        note = Some("saddle candidate is semi-trivial".to_string());
    }
    diag.j_value = land.j(&maximizer);
    diag.grad_norm = grad_norm;
    let residual_max = crate::functionals::residual_max(&pair);
    let report = SolveReport {
        method: SolveMethod::MountainPass,
        converged,
        kappa: params.kappa,
        beta: params.beta,
        iters: round,
        final_i: action_i(&pair),
        q1: flux_q(&pair.a1),
        q2: flux_q(&pair.a2),
        proj_grad_norm: grad_norm,
        residual_max,
        in_existence_range: true,
        trivial: false,
        history: Vec::new(),
        path: Some(diag),
        note,
    };
    Ok((pair, report))
}
