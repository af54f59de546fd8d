//! Damped Newton iteration on the finite-difference residual at fixed
//! `(kappa, beta)`.
//!
//! Unknowns are interleaved node by node, `(A1_1, A2_1, A1_2, A2_2, ...)`,
//! which turns the `2n x 2n` Jacobian into a band matrix with two sub- and
//! two super-diagonals.

use crate::error::Result;
use crate::functionals::{action_i, flux_q, kernel, total_flux, PhysicsParams, VortexPair};
use crate::grid::{Profile, RadialGrid};
use crate::linalg::BandMatrix;
use crate::report::{SolveMethod, SolveReport};

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    /// Target for the residual max-norm.
    pub tol: f64,
    pub max_iters: usize,
    /// First trial step length of the line search.
    pub damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 50,
            damping: 1.0,
        }
    }
}

/// Step halvings before a Newton step is declared stalled.
const MAX_HALVINGS: usize = 40;

/// Jacobian of the residual, stored as a band matrix in interleaved order.
#[derive(Clone, Debug)]
pub struct Jacobian {
    band: BandMatrix,
}

impl Jacobian {
    pub fn band(&self) -> &BandMatrix {
        &self.band
    }

    pub fn into_band(self) -> BandMatrix {
        self.band
    }

    /// `(dF/dA) v` for a direction given component-wise.
    pub fn apply(&self, v1: &[f64], v2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        split(&self.band.matvec(&interleave(v1, v2)))
    }

    /// Entry `dF_{row_comp}(r_i) / dA_{col_comp}(r_j)`, components numbered 0 and 1.
    pub fn entry(&self, row_comp: usize, i: usize, col_comp: usize, j: usize) -> f64 {
        self.band.get(2 * i + row_comp, 2 * j + col_comp)
    }
}

pub(crate) fn interleave(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).flat_map(|(&x, &y)| [x, y]).collect()
}

pub(crate) fn split(v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        v.iter().step_by(2).copied().collect(),
        v.iter().skip(1).step_by(2).copied().collect(),
    )
}

/// Linearization of the residual around `pair`.
pub fn assemble_jacobian(pair: &VortexPair) -> Jacobian {
    assemble(pair.grid(), &pair.params, pair.a1.values(), pair.a2.values())
}

fn assemble(g: &RadialGrid, p: &PhysicsParams, a1: &[f64], a2: &[f64]) -> Jacobian {
    let n = g.n();
    let mut band = BandMatrix::zeros(2 * n, 2, 2);
    let l_sq = p.l_sq();
    for i in 0..n {
        let (lo, di, up) = g.laplacian_stencil(i);
        let r = g.nodes()[i];
        let pot = l_sq / (r * r);
        let (row1, row2) = (2 * i, 2 * i + 1);
        band.set(row1, row1, di - pot - 2.0 * (p.kappa - a2[i]));
        band.set(row1, row2, 2.0 * a1[i]);
        band.set(row2, row1, 4.0 * a1[i]);
        band.set(row2, row2, di - 4.0 * pot - 4.0 * p.sh_mass());
        if i > 0 {
            band.set(row1, row1 - 2, lo);
            band.set(row2, row2 - 2, lo);
        }
        if i + 1 < n {
            band.set(row1, row1 + 2, up);
            band.set(row2, row2 + 2, up);
        }
    }
    Jacobian { band }
}

/// Max-abs of the residual over both components.
pub fn residual_max(pair: &VortexPair) -> f64 {
    crate::functionals::residual_max(pair)
}

/// Polishes `pair` to a root of the residual at `pair.params`.
pub fn refine(pair: &VortexPair, opts: &NewtonOptions) -> Result<(VortexPair, SolveReport)> {
    solve(pair, None, opts)
}

/// Solves `residual(pair) = forcing` instead of `residual(pair) = 0`.
pub fn refine_forced(
    pair: &VortexPair,
    forcing: (&Profile, &Profile),
    opts: &NewtonOptions,
) -> Result<(VortexPair, SolveReport)> {
    solve(pair, Some(forcing), opts)
}

fn solve(
    pair: &VortexPair,
    forcing: Option<(&Profile, &Profile)>,
    opts: &NewtonOptions,
) -> Result<(VortexPair, SolveReport)> {
    let g = pair.grid().clone();
    let p = pair.params;
    let mut a1 = pair.a1.values().to_vec();
    let mut a2 = pair.a2.values().to_vec();

    let eval = |a1: &[f64], a2: &[f64]| -> (Vec<f64>, Vec<f64>, f64) {
        let (mut f1, mut f2) = kernel::residual(&g, &p, a1, a2);
        if let Some((s1, s2)) = forcing {
            for (f, s) in f1.iter_mut().zip(s1.values()) {
                *f -= s;
            }
            for (f, s) in f2.iter_mut().zip(s2.values()) {
                *f -= s;
            }
        }
        let m = kernel::max_abs2(&f1, &f2);
        (f1, f2, m)
    };

    let (mut f1, mut f2, mut res) = eval(&a1, &a2);
    let mut history = vec![res];
    let mut iters = 0;
    let mut stalled = false;
    while res > opts.tol && iters < opts.max_iters {
        let lu = assemble(&g, &p, &a1, &a2).into_band().factor()?;
        let rhs: Vec<f64> = interleave(&f1, &f2).into_iter().map(|v| -v).collect();
        let (d1, d2) = split(&lu.solve(&rhs));
        let mut t = opts.damping;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let t1: Vec<f64> = a1.iter().zip(&d1).map(|(x, d)| x + t * d).collect();
            let t2: Vec<f64> = a2.iter().zip(&d2).map(|(x, d)| x + t * d).collect();
            let trial = eval(&t1, &t2);
            if trial.2 < res {
                accepted = Some((t1, t2, trial));
                break;
            }
            t *= 0.5;
        }
        iters += 1;
        match accepted {
            Some((t1, t2, (g1, g2, r))) => {
                a1 = t1;
                a2 = t2;
                f1 = g1;
                f2 = g2;
                res = r;
                history.push(res);
            }
            None => {
                stalled = true;
                break;
            }
        }
    }

    let out = VortexPair::from_state(&g, p, &[a1, a2].concat());
    let converged = res <= opts.tol;
    let trivial = converged && total_flux(&out) < 1e3 * opts.tol;
    let note = if stalled {
        Some("line search failed to reduce the residual".to_string())
    } else if !converged {
        Some(format!("iteration limit reached with residual {res:.3e}"))
    } else if trivial {
        Some("converged to the trivial root".to_string())
    } else {
        None
    };
    let report = SolveReport {
        method: SolveMethod::Newton,
        converged,
        kappa: p.kappa,
        beta: p.beta,
        iters,
        final_i: action_i(&out),
        q1: flux_q(&out.a1),
        q2: flux_q(&out.a2),
        proj_grad_norm: 0.0,
        residual_max: res,
        in_existence_range: p.in_existence_range(),
        trivial,
        history,
        path: None,
        note,
    };
    Ok((out, report))
}
