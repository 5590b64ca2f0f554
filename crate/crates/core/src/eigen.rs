//! Principal eigenvalue by nonlinear inverse power iteration.
//!
//! Each step solves `F[ψ] = -φ^{1+α}` with zero boundary data and sets
//! `λ = 1 / |ψ|_∞^{1+α}`, `φ = ψ / |ψ|_∞`. Since `F` is jointly homogeneous of
//! degree `1+α`, a fixed point is an eigenpair `F[φ] + λ φ^{1+α} = 0`. The
//! negative eigenvalue runs the same loop on the dual operator `-F[-v]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DiscreteRadialFunction, Domain, RadialGrid};
use crate::operators::OperatorSpec;
use crate::solver::{solve_with_values, SolverParams};

const MAX_RESTARTS: usize = 3;
const RESTART_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenSign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenResult {
    pub lambda_plus: f64,
    /// Positive in the interior, sup-norm 1.
    #[serde(skip)]
    pub phi: DiscreteRadialFunction,
    pub iterations: usize,
    pub lambda_history: Vec<f64>,
    /// Largest solver tolerance enforced along the way.
    pub solver_tol: f64,
}

/// Interior bump vanishing on the Dirichlet boundary, sup-norm 1.
fn bump(dom: &Domain, nodes: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = if dom.is_ball() {
        nodes.iter().map(|&r| 1.0 - (r / dom.outer).powi(2)).collect()
    } else {
        nodes.iter().map(|&r| (r - dom.inner) * (dom.outer - r)).collect()
    };
    let top = raw.iter().fold(0.0f64, |acc, &v| acc.max(v));
    raw.into_iter().map(|v| v / top).collect()
}

/// Indices of nodes carrying Dirichlet data.
fn is_boundary(dom: &Domain, n: usize, i: usize) -> bool {
    i == n - 1 || (i == 0 && !dom.is_ball())
}

pub fn principal_eigenvalue(
    op: &OperatorSpec,
    dom: &Domain,
    grid: &RadialGrid,
    sign: EigenSign,
    tol: f64,
    max_outer: usize,
) -> Result<EigenResult> {
    dom.validate()?;
    if dom.bc_outer != 0.0 || (!dom.is_ball() && dom.bc_inner != 0.0) {
        return Err(Error::InvalidSpec("eigenproblems need zero Dirichlet data".into()));
    }
    if !(tol > 0.0) || max_outer == 0 {
        return Err(Error::InvalidSpec(format!("need tol > 0 and max_outer > 0, got {tol} and {max_outer}")));
    }
    let op = match sign {
        EigenSign::Plus => op.clone(),
        EigenSign::Minus => op.dual(),
    };
    let nodes = grid.nodes();
    let n = nodes.len();
    let power = 1.0 + op.alpha;
    let cold = SolverParams::default();
    let warm = SolverParams {
        eps_start: cold.eps_end,
        ..cold.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    let mut phi = bump(dom, nodes);
    let mut psi_prev: Option<Vec<f64>> = None;
    let mut history = Vec::new();
    let mut restarts = 0;
    let mut solver_tol: f64 = 0.0;

    while history.len() < max_outer {
        let f: Vec<f64> = phi.iter().map(|&v| -v.abs().powf(power)).collect();
        let params = if psi_prev.is_some() { &warm } else { &cold };
        let sol = match solve_with_values(&op, dom, grid, &f, 1.0, params, psi_prev.as_deref()) {
            Err(Error::Diverged { .. }) if psi_prev.is_some() => {
                solve_with_values(&op, dom, grid, &f, 1.0, &cold, None)?
            }
            other => other?,
        };
        solver_tol = solver_tol.max(sol.tol);
        let psi = sol.u.into_values();
        if let Some(i) = (0..n).find(|&i| !is_boundary(dom, n, i) && !(psi[i] > 0.0)) {
            if restarts == MAX_RESTARTS {
                return Err(Error::LostPositivity { r: nodes[i], value: psi[i] });
            }
            restarts += 1;
            phi = bump(dom, nodes).iter().map(|&b| b * rng.gen_range(0.5..1.5)).collect();
            psi_prev = None;
            history.clear();
            continue;
        }
        let norm = psi.iter().fold(0.0f64, |acc, &v| acc.max(v));
        let lambda = norm.powf(-power);
        phi = psi.iter().map(|&v| v / norm).collect();
        psi_prev = Some(psi);
        let settled = history.last().is_some_and(|&prev: &f64| (lambda - prev).abs() <= tol * lambda);
        history.push(lambda);
        if settled {
            return Ok(EigenResult {
                lambda_plus: lambda,
                phi: DiscreteRadialFunction::new(grid.clone(), phi)?,
                iterations: history.len(),
                lambda_history: history,
                solver_tol,
            });
        }
    }
    let k = history.len();
    let change = (history[k - 1] - history[k.saturating_sub(2)]).abs() / history[k - 1];
    Err(Error::Diverged {
        residual: change,
        tol,
        eps: cold.eps_end,
        partial: None,
    })
}
