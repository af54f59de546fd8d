use serde::Serialize;

/// Which solver produced a [`SolveReport`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Minimize,
    MountainPass,
    Newton,
}

/// Mountain-pass specific diagnostics.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PathDiagnostics {
    /// Value of the indefinite action at the returned maximizer.
    pub j_value: f64,
    /// Max-abs of the weighted-`L^2` gradient of J at the maximizer.
    pub grad_norm: f64,
    /// Path maximum after every deformation round.
    pub path_max_history: Vec<f64>,
    /// Per-round records for plotting.
    pub rounds: Vec<PathRound>,
    /// Lower bound on the mountain-pass level.
    pub c0: f64,
    /// Norm level separating the origin from the endpoint.
    pub k_level: f64,
    /// Peak amplitude of the tent endpoint.
    pub endpoint_b: f64,
    pub endpoint_j: f64,
    /// Closed-form endpoint action, available for `|l| = 1`.
    pub endpoint_j_closed_form: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PathRound {
    pub round: usize,
    pub max_j: f64,
    pub argmax_t: f64,
    pub grad_norm: f64,
}

/// Solver diagnostics shared by all three solvers.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub converged: bool,
    pub kappa: f64,
    pub beta: f64,
    pub iters: usize,
    pub final_i: f64,
    /// Achieved fluxes `Q(A1)`, `Q(A2)`.
    pub q1: f64,
    pub q2: f64,
    /// Stationarity measure: tangential gradient norm for the minimizer,
    /// gradient max-norm at the path maximizer for the mountain pass, zero
    /// for Newton.
    pub proj_grad_norm: f64,
    pub residual_max: f64,
    /// `kappa > max{0, -beta/2}`.
    pub in_existence_range: bool,
    /// Set when a converged result has negligible total flux.
    pub trivial: bool,
    /// Objective (minimizer) or residual (Newton) after every iteration.
    pub history: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}
