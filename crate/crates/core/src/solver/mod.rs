//! Radial Dirichlet solver: monotone flux scheme, continuation in the
//! gradient regularization `ε`, semismooth Newton with pseudo-time fallback.

mod banded;
mod comparison;
mod scheme;
mod source;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DiscreteRadialFunction, Domain, RadialGrid};
use crate::operators::OperatorSpec;

use banded::Banded;
pub use comparison::comparison_oracle;
use scheme::Scheme;
pub use source::{Builtin, SourceFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_factor: f64,
    /// Residual sup-norm target; `1e-10 max(1, |f|_∞)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub newton_tol: Option<f64>,
    pub newton_max_iter: usize,
    pub damping_min: f64,
    /// Initial implicit pseudo-time step; `0.1 h_min² / A` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pseudo_time_dt: Option<f64>,
    pub pseudo_time_max_steps: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            eps_start: 1e-2,
            eps_end: 1e-8,
            eps_factor: 0.1,
            newton_tol: None,
            newton_max_iter: 200,
            damping_min: 2f64.powi(-20),
            pseudo_time_dt: None,
            pseudo_time_max_steps: 10_000,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidSpec(msg.into()));
        if !(self.eps_end > 0.0 && self.eps_end <= self.eps_start && self.eps_start.is_finite()) {
            return bad("need 0 < eps_end <= eps_start");
        }
        if !(self.eps_factor > 0.0 && self.eps_factor < 1.0) {
            return bad("eps_factor must lie in (0, 1)");
        }
        if self.newton_tol.is_some_and(|t| !(t > 0.0)) || self.pseudo_time_dt.is_some_and(|t| !(t > 0.0)) {
            return bad("tolerances and steps must be positive");
        }
        if !(self.damping_min > 0.0 && self.damping_min <= 1.0) {
            return bad("damping_min must lie in (0, 1]");
        }
        if self.newton_max_iter == 0 {
            return bad("newton_max_iter must be positive");
        }
        Ok(())
    }

    /// Continuation levels from `eps_start` down to `eps_end`.
    pub fn eps_schedule(&self) -> Vec<f64> {
        let mut levels = vec![self.eps_start];
        let mut eps = self.eps_start;
        while eps > self.eps_end * (1.0 + 1e-12) {
            eps = (eps * self.eps_factor).max(self.eps_end);
            levels.push(eps);
        }
        levels
    }
}

/// One continuation level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsStep {
    pub eps: f64,
    pub iterations: usize,
    pub pseudo_time_steps: usize,
    pub residual: f64,
    /// `|u_ε - u_previous|_∞`.
    pub change_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    #[serde(skip)]
    pub u: DiscreteRadialFunction,
    pub residual_sup: f64,
    pub eps_final: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Tolerance actually enforced: the requested one, raised to the
    /// roundoff level of the residual evaluation when that is larger.
    pub tol: f64,
    pub pseudo_time_steps: usize,
    pub eps_path: Vec<EpsStep>,
}

impl Solution {
    /// Wraps a profile that is treated as an exact solution (zero residual).
    pub fn exact(u: DiscreteRadialFunction) -> Self {
        Self {
            u,
            residual_sup: 0.0,
            eps_final: 0.0,
            iterations: 0,
            converged: true,
            tol: 0.0,
            pseudo_time_steps: 0,
            eps_path: Vec::new(),
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        self.u.grid()
    }

    pub fn write_diagnostics(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }
}

/// `H_ε(r_i, u) - f(r_i)` at interior nodes, the symmetry closure at the
/// origin of a ball, and `u - bc` on Dirichlet rows.
pub fn discretize_residual(
    op: &OperatorSpec,
    dom: &Domain,
    f: &SourceFunction,
    u: &DiscreteRadialFunction,
    eps: f64,
) -> Result<Vec<f64>> {
    f.validate()?;
    if !(eps >= 0.0) {
        return Err(Error::InvalidSpec(format!("eps = {eps} must be nonnegative")));
    }
    let scheme = Scheme::new(op, dom, u.grid())?;
    let fv = f.sample(u.nodes());
    Ok(scheme.evaluate(u.values(), &fv, eps, None))
}

pub fn solve_dirichlet(
    op: &OperatorSpec,
    dom: &Domain,
    f: &SourceFunction,
    grid: &RadialGrid,
    params: &SolverParams,
) -> Result<Solution> {
    f.validate()?;
    let fv = f.sample(grid.nodes());
    let f_sup = f.sup_norm(grid.first(), grid.last());
    solve_with_values(op, dom, grid, &fv, f_sup, params, None)
}

/// Newton iterations allowed without halving the residual.
const STALL_ITERATIONS: usize = 20;

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Roundoff level of the residual at `u`: perturbing every unknown by one ulp
/// moves row `i` by about `eps Σ_j |J_ij u_j|`.
fn roundoff_floor(jac: &Banded, u: &[f64], f: &[f64]) -> f64 {
    (0..u.len())
        .map(|i| {
            let row: f64 = jac.row_span(i).map(|j| (jac.get(i, j) * u[j]).abs()).sum();
            64.0 * f64::EPSILON * (row + f[i].abs())
        })
        .fold(0.0, f64::max)
}

/// Solver core on node values of `f`, optionally warm-started.
pub(crate) fn solve_with_values(
    op: &OperatorSpec,
    dom: &Domain,
    grid: &RadialGrid,
    f: &[f64],
    f_sup: f64,
    params: &SolverParams,
    initial: Option<&[f64]>,
) -> Result<Solution> {
    params.validate()?;
    let scheme = Scheme::new(op, dom, grid)?;
    let n = grid.len();
    if f.len() != n || f.iter().any(|v| !v.is_finite()) {
        return Err(Error::GridMismatch(format!("{} source values for {n} nodes", f.len())));
    }
    let requested_tol = params.newton_tol.unwrap_or(1e-10 * f_sup.max(1.0));
    let mut u: Vec<f64> = match initial {
        Some(u0) if u0.len() == n => u0.to_vec(),
        Some(u0) => return Err(Error::GridMismatch(format!("initial guess has {} values for {n} nodes", u0.len()))),
        None => {
            let (r0, r1) = (grid.first(), grid.last());
            let lo = if dom.is_ball() { dom.bc_outer } else { dom.bc_inner };
            grid.nodes()
                .iter()
                .map(|&r| lo + (dom.bc_outer - lo) * (r - r0) / (r1 - r0))
                .collect()
        }
    };
    scheme.impose_boundary(&mut u);

    let h_min = grid.min_spacing();
    let dt_start = params.pseudo_time_dt.unwrap_or(0.1 * h_min * h_min / op.upper);
    let mut jac = Banded::new(n, 1, 2);
    let mut total_iter = 0;
    let mut total_pseudo = 0;
    let mut path = Vec::new();
    let mut tol = requested_tol;
    let mut residual = f64::INFINITY;
    let mut level_ok = false;
    let schedule = params.eps_schedule();

    for &eps in &schedule {
        let start = u.clone();
        let mut iterations = 0;
        let mut pseudo = 0;
        let mut anchor = (f64::INFINITY, 0);
        level_ok = false;
        loop {
            let res = scheme.evaluate(&u, f, eps, Some(&mut jac));
            residual = sup(&res);
            tol = requested_tol.max(roundoff_floor(&jac, &u, f));
            if residual <= tol {
                level_ok = true;
                break;
            }
            if iterations >= params.newton_max_iter {
                break;
            }
            iterations += 1;
            if residual <= 0.5 * anchor.0 {
                anchor = (residual, iterations);
            }
            let stalled = iterations - anchor.1 >= STALL_ITERATIONS;
            let mut step: Vec<f64> = res.iter().map(|v| -v).collect();
            let accepted = !stalled && jac.solve_in_place(&mut step).is_ok() && {
                let mut t = 1.0;
                let mut done = false;
                while t >= params.damping_min {
                    let mut trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + t * d).collect();
                    scheme.impose_boundary(&mut trial);
                    let r_trial = sup(&scheme.evaluate(&trial, f, eps, None));
                    if r_trial.is_finite() && r_trial <= (1.0 - 1e-4 * t) * residual {
                        u = trial;
                        done = true;
                        break;
                    }
                    t *= 0.5;
                }
                done
            };
            if accepted {
                continue;
            }
            // Damping underflow or stall: implicit pseudo-time steps on the
            // interior rows, `(I/dt - J) δ = R`, until the residual halves.
            let target = 0.5 * residual;
            let budget = params.pseudo_time_max_steps.saturating_sub(pseudo);
            if budget == 0 {
                break;
            }
            let mut progressed = false;
            let mut dt = dt_start;
            for _ in 0..budget {
                let res = scheme.evaluate(&u, f, eps, Some(&mut jac));
                let now = sup(&res);
                if now <= target.max(tol) {
                    progressed = true;
                    break;
                }
                pseudo += 1;
                for i in 1..n - 1 {
                    jac.set(i, i, jac.get(i, i) - 1.0 / dt);
                }
                let mut step: Vec<f64> = res.iter().map(|v| -v).collect();
                if jac.solve_in_place(&mut step).is_err() {
                    dt *= 0.25;
                    continue;
                }
                let mut trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + d).collect();
                scheme.impose_boundary(&mut trial);
                let r_trial = sup(&scheme.evaluate(&trial, f, eps, None));
                if r_trial.is_finite() && r_trial <= 10.0 * now {
                    u = trial;
                    dt *= (2.0 * now / r_trial).clamp(0.5, 10.0);
                } else {
                    dt *= 0.25;
                }
            }
            anchor = (f64::INFINITY, iterations);
            if !progressed {
                let res = scheme.evaluate(&u, f, eps, Some(&mut jac));
                residual = sup(&res);
                tol = requested_tol.max(roundoff_floor(&jac, &u, f));
                level_ok = residual <= tol;
                break;
            }
        }
        total_iter += iterations;
        total_pseudo += pseudo;
        let change_sup = u.iter().zip(&start).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        path.push(EpsStep {
            eps,
            iterations,
            pseudo_time_steps: pseudo,
            residual,
            change_sup,
        });
    }

    let eps_final = *schedule.last().expect("nonempty schedule");
    if let Some(node) = scheme.monotonicity_violation(&jac) {
        return Err(Error::NonMonotone { node });
    }
    let solution = Solution {
        u: DiscreteRadialFunction::new(grid.clone(), u)?,
        residual_sup: residual,
        eps_final,
        iterations: total_iter,
        converged: level_ok,
        tol,
        pseudo_time_steps: total_pseudo,
        eps_path: path,
    };
    if !level_ok {
        return Err(Error::Diverged {
            residual,
            tol,
            eps: eps_final,
            partial: Some(Box::new(solution)),
        });
    }
    Ok(solution)
}
