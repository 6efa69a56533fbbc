//! SQP outer loop over the hypergraph NLP.
//!
//! Each iteration linearizes the constraint edges, builds the quadratic
//! program from the curvature of the *squared* time objective (which is
//! positive definite without changing the minimizer, since the step
//! vanishes at stationary points) while keeping the gradient of the
//! original linear objective, and globalizes with a backtracking line
//! search on the l1 merit function.
//!
//! The inner QP carries elastic slacks on the equality rows, penalized at
//! the merit weight: the subproblem stays feasible even where the plain
//! linearization is not, and persistent slack usage is the infeasibility
//! signal for the outer loop.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::DVector;

use super::qp::{QpOptions, QpProblem, QpSolver, QpStatus};
use crate::error::{Error, Result};
use crate::transcription::{DerivativeOptions, Evaluation, Hypergraph, VertexKind};

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub sqp_max_iter: usize,
    pub qp: QpOptions,
    /// Stationarity and complementarity tolerance.
    pub eps_kkt: f64,
    /// Constraint violation tolerance.
    pub eps_feas: f64,
    /// Hessian ridge; escalated tenfold on QP failures.
    pub regularization: f64,
    pub max_regularization: f64,
    /// Initial l1 merit penalty; raised above the multiplier norm as the
    /// iteration proceeds.
    pub merit_penalty: f64,
    /// Backtracking factor of the fallback line search along a rejected
    /// trust-region step.
    pub backtrack_factor: f64,
    /// Smallest line-search step length.
    pub min_step: f64,
    /// Restore feasibility at pinned interval lengths before minimizing
    /// time on cold starts.
    pub feasibility_first: bool,
    /// Initial trust-region radius on the parameter step.
    pub trust_radius: f64,
    pub trust_radius_max: f64,
    pub trust_radius_min: f64,
    pub derivatives: DerivativeOptions,
    /// Iterations without relative feasibility progress before an
    /// infeasibility declaration.
    pub stall_window: usize,
    /// Per-iteration CSV trace (iteration, objective, feasibility, step norm).
    pub trace_path: Option<PathBuf>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            sqp_max_iter: 150,
            qp: QpOptions::default(),
            eps_kkt: 1e-6,
            eps_feas: 1e-7,
            regularization: 1e-8,
            max_regularization: 1e-2,
            merit_penalty: 10.0,
            backtrack_factor: 0.5,
            min_step: 1e-4,
            feasibility_first: true,
            trust_radius: 1.0,
            trust_radius_max: 10.0,
            trust_radius_min: 1e-10,
            derivatives: DerivativeOptions::default(),
            stall_window: 12,
            trace_path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
    Error,
}

/// Result of one NLP solve, with the trajectory unpacked from the
/// parameter vector.
#[derive(Debug, Clone)]
pub struct NlpSolution {
    pub params: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
    /// Interval lengths per interval (the global form replicates its
    /// shared value).
    pub dts: Vec<f64>,
    pub objective: f64,
    /// Transition time `sum dt_k`.
    pub t_f: f64,
    pub status: SolveStatus,
    /// Accepted SQP steps.
    pub iterations: usize,
    pub max_violation: f64,
    pub kkt_residual: f64,
    pub wall_time: Duration,
    pub eq_multipliers: Vec<f64>,
    pub ineq_multipliers: Vec<f64>,
    pub bound_multipliers_lower: Vec<f64>,
    pub bound_multipliers_upper: Vec<f64>,
}

impl NlpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Stationarity, primal feasibility and complementary slackness norms.
#[derive(Debug, Clone, Copy)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.feasibility).max(self.complementarity)
    }
}

struct Multipliers {
    eq: Vec<f64>,
    ineq: Vec<f64>,
    bound_lower: Vec<f64>,
    bound_upper: Vec<f64>,
}

fn kkt_norms(
    eval: &Evaluation,
    v: &[f64],
    lb: &[f64],
    ub: &[f64],
    m: &Multipliers,
) -> KktResiduals {
    kkt_norms_scaled(eval, v, lb, ub, m, 1.0)
}

fn feasibility_norm(eval: &Evaluation) -> f64 {
    let mut f = 0.0f64;
    for v in &eval.eq_residuals {
        f = f.max(v.abs());
    }
    for v in &eval.ineq_residuals {
        f = f.max(*v);
    }
    f
}

fn violation_l1(eq: &[f64], ineq: &[f64]) -> f64 {
    eq.iter().map(|v| v.abs()).sum::<f64>() + ineq.iter().map(|v| v.max(0.0)).sum::<f64>()
}

fn kkt_norms_scaled(
    eval: &Evaluation,
    v: &[f64],
    lb: &[f64],
    ub: &[f64],
    m: &Multipliers,
    f_scale: f64,
) -> KktResiduals {
    let n = v.len();
    let mut stat: Vec<f64> = eval
        .objective_gradient
        .iter()
        .map(|g| g / f_scale)
        .collect();
    let mut tmp = vec![0.0; n];
    eval.eq_jacobian.mul_transpose_vec(&m.eq, &mut tmp);
    for j in 0..n {
        stat[j] += tmp[j];
    }
    eval.ineq_jacobian.mul_transpose_vec(&m.ineq, &mut tmp);
    for j in 0..n {
        stat[j] += tmp[j] + m.bound_upper[j] - m.bound_lower[j];
    }
    let stationarity = stat.iter().fold(0.0f64, |a, s| a.max(s.abs()));

    let mut feasibility = feasibility_norm(eval);
    for j in 0..n {
        feasibility = feasibility.max(lb[j] - v[j]).max(v[j] - ub[j]);
    }

    let mut comp = 0.0f64;
    for (i, &mu) in m.ineq.iter().enumerate() {
        comp = comp.max((mu * eval.ineq_residuals[i]).abs());
    }
    for j in 0..n {
        if lb[j].is_finite() {
            comp = comp.max((m.bound_lower[j] * (v[j] - lb[j])).abs());
        }
        if ub[j].is_finite() {
            comp = comp.max((m.bound_upper[j] * (ub[j] - v[j])).abs());
        }
    }
    KktResiduals {
        stationarity,
        feasibility,
        complementarity: comp,
    }
}

/// Solves the NLP encoded by the graph. The graph's vertex values provide
/// the starting point and are updated to the returned solution.
pub fn solve_nlp(graph: &mut Hypergraph, opts: &SolverOptions) -> Result<NlpSolution> {
    let t_start = Instant::now();
    let n = graph.free_param_count();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "graph has no free parameters".into(),
        ));
    }
    let (lb, ub) = graph.free_bounds();
    let mut v = graph.pack_values();
    for j in 0..n {
        if !v[j].is_finite() {
            return Err(Error::InvalidArgument(
                "initial parameter values must be finite".into(),
            ));
        }
        v[j] = v[j].clamp(lb[j], ub[j]);
    }

    let mut trace = match &opts.trace_path {
        Some(path) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            writeln!(f, "iteration,objective,feasibility,step_norm")?;
            Some(f)
        }
        None => None,
    };

    let column_kinds = graph.column_kinds();
    let mut qp_solver = QpSolver::new();
    let mut reg = opts.regularization;
    let mut nu = opts.merit_penalty;
    let mut accepted = 0usize;
    let mut status = SolveStatus::MaxIter;
    let mut best_feas = f64::INFINITY;
    let mut best_obj = f64::INFINITY;
    let mut stall = 0usize;
    let mut qp_infeasible_streak = 0usize;
    let mut endgame_attempts = 0usize;
    let mut recoveries = 0usize;
    let mut radius = opts.trust_radius;
    let mut merit_history: std::collections::VecDeque<(f64, f64)> = Default::default();

    // Cold starts of the minimum-time graphs restore feasibility first:
    // the interval lengths are pinned at their initial value (the time
    // objective then exerts no pull), released once a feasible trajectory
    // for the pinned horizon exists. Graphs without free interval columns
    // skip the phase.
    let dt_cols: Vec<usize> = (0..n)
        .filter(|&j| matches!(column_kinds[j], VertexKind::Dt(_)))
        .collect();
    let initial_feas = graph
        .eval_residuals(&v)
        .map(|(_, eq, ineq)| {
            eq.iter().fold(0.0f64, |a, r| a.max(r.abs())).max(
                ineq.iter().fold(0.0f64, |a, r| a.max(*r)),
            )
        })
        .unwrap_or(f64::INFINITY);
    let mut restoration = opts.feasibility_first
        && !dt_cols.is_empty()
        && initial_feas > 1e3 * opts.eps_feas;
    let mut pinned_at_max = false;
    // objective scaling keeps the merit geometry and the multipliers O(1)
    let mut f_scale = 1.0f64;
    let mut f_scale_set = false;
    let dt_rel = 0.15;
    let fallback_shrink = 0.9;
    let mut multipliers_scaled = true;
    let mut multipliers = Multipliers {
        eq: Vec::new(),
        ineq: Vec::new(),
        bound_lower: vec![0.0; n],
        bound_upper: vec![0.0; n],
    };
    let mut warm_y: Option<Vec<f64>> = None;
    let mut final_eval: Option<Evaluation> = None;
    let mut kkt = KktResiduals {
        stationarity: f64::INFINITY,
        feasibility: f64::INFINITY,
        complementarity: f64::INFINITY,
    };

    for _it in 0..opts.sqp_max_iter {
        let eval = match graph.eval_derivatives(&v, &opts.derivatives) {
            Ok(e) => e,
            Err(_) => {
                status = SolveStatus::Error;
                break;
            }
        };
        let mut feas = feasibility_norm(&eval);
        let obj_s = eval.objective / f_scale;
        if restoration && feas <= (1e3 * opts.eps_feas).max(1e-6) {
            restoration = false;
            radius = opts.trust_radius;
            nu = opts.merit_penalty;
            merit_history.clear();
            stall = 0;
            best_feas = f64::INFINITY;
            best_obj = f64::INFINITY;
            warm_y = None;
        }

        if !f_scale_set {
            let g0 = eval
                .objective_gradient
                .iter()
                .fold(0.0f64, |a, g| a.max(g.abs()));
            f_scale = g0.max(1.0);
            f_scale_set = true;
        }

        let m_eq = eval.eq_residuals.len();
        let m_in = eval.ineq_residuals.len();

        // elastic subproblem over [d; s_pos; s_neg; s_in], with the
        // objective row scaled to unit gradient norm
        let n_qp = n + 2 * m_eq + m_in;
        let hessian = {
            let base = graph.sqp_hessian(&v, 0.0);
            let mut triplets = Vec::with_capacity(base.nnz() + n_qp);
            for j in 0..n {
                for p in base.col_ptr[j]..base.col_ptr[j + 1] {
                    triplets.push((base.row_idx[p], j, base.values[p] / f_scale));
                }
            }
            for j in 0..n_qp {
                triplets.push((j, j, opts.regularization.max(reg)));
            }
            crate::solver::sparse::CscMatrix::from_triplets(n_qp, n_qp, &triplets)
        };
        let mut gradient = Vec::with_capacity(n_qp);
        gradient.extend(eval.objective_gradient.iter().map(|g| g / f_scale));
        gradient.extend(std::iter::repeat(nu).take(2 * m_eq + m_in));
        // equality rows: J_eq d - s_pos + s_neg = -c_eq
        let a_eq = {
            let j = &eval.eq_jacobian;
            let mut triplets = Vec::with_capacity(j.nnz() + 2 * m_eq);
            for col in 0..n {
                for p in j.col_ptr[col]..j.col_ptr[col + 1] {
                    triplets.push((j.row_idx[p], col, j.values[p]));
                }
            }
            for i in 0..m_eq {
                triplets.push((i, n + i, -1.0));
                triplets.push((i, n + m_eq + i, 1.0));
            }
            crate::solver::sparse::CscMatrix::from_triplets(m_eq, n_qp, &triplets)
        };
        // inequality rows: J_in d - s_in <= -c_in
        let a_in = {
            let j = &eval.ineq_jacobian;
            let mut triplets = Vec::with_capacity(j.nnz() + m_in);
            for col in 0..n {
                for p in j.col_ptr[col]..j.col_ptr[col + 1] {
                    triplets.push((j.row_idx[p], col, j.values[p]));
                }
            }
            for i in 0..m_in {
                triplets.push((i, n + 2 * m_eq + i, -1.0));
            }
            crate::solver::sparse::CscMatrix::from_triplets(m_in, n_qp, &triplets)
        };
        let neg_eq: Vec<f64> = eval.eq_residuals.iter().map(|r| -r).collect();
        let neg_in: Vec<f64> = eval.ineq_residuals.iter().map(|r| -r).collect();
        // interval lengths move relative to their magnitude; states,
        // controls and slacks use the base radius directly
        let trust_scale: Vec<f64> = (0..n)
            .map(|j| match column_kinds[j] {
                VertexKind::Dt(_) => dt_rel * v[j].abs().max(0.01),
                _ => 1.0,
            })
            .collect();
        let mut dlb: Vec<f64> = (0..n)
            .map(|j| (lb[j] - v[j]).max(-radius * trust_scale[j]))
            .collect();
        let mut dub: Vec<f64> = (0..n)
            .map(|j| (ub[j] - v[j]).min(radius * trust_scale[j]))
            .collect();
        if restoration {
            for &j in &dt_cols {
                dlb[j] = 0.0;
                dub[j] = 0.0;
            }
        }
        dlb.extend(std::iter::repeat(0.0).take(2 * m_eq + m_in));
        dub.extend(std::iter::repeat(f64::INFINITY).take(2 * m_eq + m_in));
        let prob = QpProblem::from_parts(
            hessian, gradient, &a_eq, &neg_eq, &a_in, &neg_in, &dlb, &dub,
        );
        let zero_x = vec![0.0; n_qp];
        let mut qp_opts = opts.qp;
        if feas > 1e-3 {
            // early phase: a coarse step direction is enough
            qp_opts.eps = qp_opts.eps.max(1e-5);
        }
        let qp_sol = match qp_solver.solve(
            &prob,
            &qp_opts,
            warm_y.as_ref().map(|y| (zero_x.as_slice(), y.as_slice())),
        ) {
            Ok(s) => s,
            Err(_) => {
                if reg < opts.max_regularization {
                    reg = (reg * 10.0).min(opts.max_regularization);
                    continue;
                }
                status = SolveStatus::Error;
                break;
            }
        };
        if qp_sol.status == QpStatus::MaxIter {
            if let Some(dir) = std::env::var_os("MINTIME_QP_DUMP") {
                let path = std::path::Path::new(&dir).join(format!("qp_{_it}.json"));
                let dump = serde_json::json!({
                    "h": {"nrows": prob.hessian.nrows, "ncols": prob.hessian.ncols,
                           "col_ptr": prob.hessian.col_ptr, "row_idx": prob.hessian.row_idx, "values": prob.hessian.values},
                    "g": prob.gradient,
                    "a": {"nrows": prob.constraints.nrows, "ncols": prob.constraints.ncols,
                           "col_ptr": prob.constraints.col_ptr, "row_idx": prob.constraints.row_idx, "values": prob.constraints.values},
                    "l": prob.lower.iter().map(|v| if v.is_finite() {*v} else {-1e30}).collect::<Vec<_>>(),
                    "u": prob.upper.iter().map(|v| if v.is_finite() {*v} else {1e30}).collect::<Vec<_>>(),
                });
                let _ = std::fs::write(path, dump.to_string());
            }
        }
        if qp_sol.status == QpStatus::PrimalInfeasible || qp_sol.status == QpStatus::DualInfeasible
        {
            // the elastic subproblem is feasible by construction, so treat
            // a certificate as a numerical failure
            if reg < opts.max_regularization {
                reg = (reg * 10.0).min(opts.max_regularization);
                continue;
            }
            qp_infeasible_streak += 1;
            if qp_infeasible_streak >= 2 {
                status = SolveStatus::Infeasible;
                final_eval = Some(eval);
                break;
            }
            continue;
        }
        qp_infeasible_streak = 0;
        warm_y = Some(qp_sol.y.clone());
        let slack_usage: f64 = qp_sol.x[n..].iter().map(|s| s.max(0.0)).sum();
        let d = &qp_sol.x[0..n];
        let step_norm = d.iter().fold(0.0f64, |a, s| a.max(s.abs()));

        multipliers.eq = qp_sol.y[0..m_eq].to_vec();
        multipliers.ineq = qp_sol.y[m_eq..m_eq + m_in]
            .iter()
            .map(|y| y.max(0.0))
            .collect();
        for j in 0..n {
            // a multiplier on a binding trust cap is not a bound multiplier;
            // keep it only when the step lands on the true bound
            let y = qp_sol.y[m_eq + m_in + j];
            let landed = v[j] + d[j];
            let scale = 1.0 + landed.abs();
            let at_upper = ub[j].is_finite() && ub[j] - landed <= 1e-7 * scale;
            let at_lower = lb[j].is_finite() && landed - lb[j] <= 1e-7 * scale;
            multipliers.bound_upper[j] = if at_upper { y.max(0.0) } else { 0.0 };
            multipliers.bound_lower[j] = if at_lower { (-y).max(0.0) } else { 0.0 };
        }

        kkt = kkt_norms_scaled(&eval, &v, &lb, &ub, &multipliers, f_scale);
        if std::env::var_os("MINTIME_SQP_DEBUG").is_some() {
            eprintln!(
                "it {_it}: obj {:.6} feas {:.3e} kkt ({:.2e},{:.2e}) step {:.3e} slack {:.2e} qp {:?} qp_iters {} nu {:.1}",
                eval.objective, feas, kkt.stationarity, kkt.complementarity, step_norm, slack_usage, qp_sol.status, qp_sol.iterations, nu
            );
        }
        if let Some(f) = trace.as_mut() {
            writeln!(f, "{},{},{},{}", accepted, eval.objective, feas, step_norm)?;
        }

        if feas <= opts.eps_feas
            && kkt.stationarity <= opts.eps_kkt
            && kkt.complementarity <= opts.eps_kkt
        {
            status = SolveStatus::Optimal;
            final_eval = Some(eval);
            break;
        }

        // near-feasible but the splitting QP cannot certify: freeze the
        // active set and refine by Newton
        if !restoration
            && feas <= 1e-4
            && endgame_attempts < 3
            && (qp_sol.status != QpStatus::Optimal || step_norm <= 1e-4)
        {
            endgame_attempts += 1;
            let mut v_ref = v.clone();
            if let Some((m, k, e)) = endgame(graph, &mut v_ref, &lb, &ub, opts, reg) {
                v = v_ref;
                multipliers = m;
                multipliers_scaled = false;
                kkt = k;
                status = SolveStatus::Optimal;
                final_eval = Some(e);
                break;
            }
        }

        // infeasibility by stagnation: neither the violation nor the
        // objective is making headway
        let obj_improving = obj_s < best_obj - 1e-9 * (1.0 + best_obj.abs());
        best_obj = best_obj.min(obj_s);
        if feas > opts.eps_feas {
            if feas > 0.9 * best_feas && !obj_improving {
                stall += 1;
            } else {
                stall = 0;
            }
            best_feas = best_feas.min(feas);
            if stall >= opts.stall_window {
                if restoration && !pinned_at_max {
                    // the pinned horizon may simply be too short; retry at
                    // the largest admissible interval length
                    pinned_at_max = true;
                    for &j in &dt_cols {
                        v[j] = ub[j];
                    }
                    stall = 0;
                    best_feas = f64::INFINITY;
                    best_obj = f64::INFINITY;
                    radius = opts.trust_radius;
                    merit_history.clear();
                    warm_y = None;
                    feas = f64::INFINITY;
                    continue;
                }
                status = if feas > 1e-2 {
                    SolveStatus::Infeasible
                } else {
                    SolveStatus::MaxIter
                };
                final_eval = Some(eval);
                break;
            }
        } else {
            stall = 0;
            best_feas = best_feas.min(feas);
        }

        if step_norm <= 1e-9 * (1.0 + radius) {
            // no progress inside the current region: either the region
            // collapsed spuriously (reopen it) or we are done
            if radius < 0.5 * opts.trust_radius && recoveries < 6 {
                recoveries += 1;
                radius = opts.trust_radius;
                continue;
            }
            status = SolveStatus::MaxIter;
            final_eval = Some(eval);
            break;
        }

        let viol0 = violation_l1(&eval.eq_residuals, &eval.ineq_residuals);
        let at_boundary = (0..n).any(|j| {
            let cap = radius * trust_scale[j];
            cap > 0.0 && d[j].abs() >= 0.9 * cap
        });
        // Penalty update. Slacks inside a binding trust region are normal;
        // only a step that is interior to the region yet still leans on
        // slacks signals that the linearization needs a stiffer penalty.
        // The penalty also relaxes once the multipliers say it is oversized,
        // so one hard stretch cannot poison later subproblems.
        if qp_sol.status == QpStatus::Optimal {
            // norm over true-constraint multipliers only; the slack-bound
            // rows carry the penalty weight itself by construction
            let mult_norm = qp_sol.y[0..m_eq + m_in + n]
                .iter()
                .fold(0.0f64, |a, y| a.max(y.abs()));
            if slack_usage > 1e-6 * (1.0 + viol0) && !at_boundary {
                nu = (nu * 2.0).min(1e4);
            } else if slack_usage <= 1e-6 * (1.0 + viol0) {
                nu = nu.max((1.5 * mult_norm + 1.0).min(1e4));
                if nu > 10.0 * (mult_norm + 1.0) {
                    nu = (nu * 0.5).max(opts.merit_penalty);
                }
            }
        }

        // trust-region step on the l1 merit; the model reduction comes
        // straight from the QP objective
        let phi0 = obj_s + nu * viol0;
        merit_history.push_back((obj_s, viol0));
        if merit_history.len() > 5 {
            merit_history.pop_front();
        }
        let phi_ref = merit_history
            .iter()
            .map(|(o, c)| o + nu * c)
            .fold(phi0, f64::max);
        let predicted = (nu * viol0 - qp_sol.objective).max(0.0);
        let cand: Vec<f64> = (0..n)
            .map(|j| (v[j] + d[j]).clamp(lb[j], ub[j]))
            .collect();
        let mut stepped = false;
        if let Ok((obj_c, eq_c, in_c)) = graph.eval_residuals(&cand) {
            let phi_c = obj_c / f_scale + nu * violation_l1(&eq_c, &in_c);
            let actual = phi0 - phi_c;
            let ratio = if predicted > 0.0 {
                actual / predicted
            } else {
                -1.0
            };
            let strict = phi_c <= phi_ref - (1e-4 * predicted).max(1e-12 * (1.0 + phi_ref.abs()));
            if (predicted > 0.0 && ratio >= 0.01) || strict {
                v = cand;
                accepted += 1;
                stepped = true;
                if ratio >= 0.7 && at_boundary {
                    radius = (radius * 2.0).min(opts.trust_radius_max);
                } else if ratio < 0.25 {
                    radius = (radius * 0.5).max(opts.trust_radius_min);
                }
            }
        }
        if !stepped {
            // backtrack along the same direction before shrinking the region
            let mut alpha = opts.backtrack_factor;
            while alpha >= opts.min_step {
                let cand: Vec<f64> = (0..n)
                    .map(|j| (v[j] + alpha * d[j]).clamp(lb[j], ub[j]))
                    .collect();
                if let Ok((obj_c, eq_c, in_c)) = graph.eval_residuals(&cand) {
                    let phi_c = obj_c / f_scale + nu * violation_l1(&eq_c, &in_c);
                    if phi_c <= phi0 - 1e-4 * alpha * predicted {
                        v = cand;
                        accepted += 1;
                        stepped = true;
                        radius = (radius * fallback_shrink).max(opts.trust_radius_min);
                        break;
                    }
                }
                alpha *= opts.backtrack_factor;
            }
        }
        if !stepped {
            radius = (radius * 0.25).max(opts.trust_radius_min);
        }
    }

    if status == SolveStatus::MaxIter {
        let mut v_ref = v.clone();
        if let Some((m, k, e)) = endgame(graph, &mut v_ref, &lb, &ub, opts, reg) {
            v = v_ref;
            multipliers = m;
            multipliers_scaled = false;
            kkt = k;
            status = SolveStatus::Optimal;
            final_eval = Some(e);
        }
    }
    if final_eval.is_none() {
        final_eval = graph.eval_derivatives(&v, &opts.derivatives).ok();
    }
    let (objective, max_violation) = match &final_eval {
        Some(e) => (e.objective, feasibility_norm(e)),
        None => (f64::NAN, f64::INFINITY),
    };
    if status == SolveStatus::Optimal && max_violation > opts.eps_feas {
        status = SolveStatus::Error;
    }
    if multipliers_scaled {
        for y in multipliers
            .eq
            .iter_mut()
            .chain(multipliers.ineq.iter_mut())
            .chain(multipliers.bound_lower.iter_mut())
            .chain(multipliers.bound_upper.iter_mut())
        {
            *y *= f_scale;
        }
    }
    if let Some(e) = &final_eval {
        kkt = kkt_norms(e, &v, &lb, &ub, &multipliers);
    }
    graph.set_values(&v);
    let (states, controls, dts) = graph.trajectory_values(&v);
    let t_f = dts.iter().sum();
    Ok(NlpSolution {
        params: v,
        states,
        controls,
        dts,
        objective,
        t_f,
        status,
        iterations: accepted,
        max_violation,
        kkt_residual: kkt.max(),
        wall_time: t_start.elapsed(),
        eq_multipliers: multipliers.eq,
        ineq_multipliers: multipliers.ineq,
        bound_multipliers_lower: multipliers.bound_lower,
        bound_multipliers_upper: multipliers.bound_upper,
    })
}

/// Active-set Newton refinement once the main loop is nearly feasible:
/// freezes the active bounds and inequality rows, then solves the active
/// KKT system by an augmented-Lagrangian direct method on re-evaluated
/// residuals. Converges quadratically near a regular solution and yields
/// exact multipliers; returns `None` when the frozen set proves wrong.
fn endgame(
    graph: &Hypergraph,
    v: &mut [f64],
    lb: &[f64],
    ub: &[f64],
    opts: &SolverOptions,
    reg: f64,
) -> Option<(Multipliers, KktResiduals, Evaluation)> {
    use crate::solver::ldl::OrderedLdl;
    use crate::solver::sparse::{normal_matrix, CscMatrix};

    let n = v.len();
    let derivs = DerivativeOptions {
        central: true,
        ..opts.derivatives
    };
    let eval0 = graph.eval_derivatives(v, &derivs).ok()?;
    // freeze active bounds and active inequality rows
    let side: Vec<i8> = (0..n)
        .map(|j| {
            let scale = 1.0 + v[j].abs();
            if lb[j].is_finite() && v[j] - lb[j] <= 1e-6 * scale {
                -1
            } else if ub[j].is_finite() && ub[j] - v[j] <= 1e-6 * scale {
                1
            } else {
                0
            }
        })
        .collect();
    let active_in: Vec<usize> = eval0
        .ineq_residuals
        .iter()
        .enumerate()
        .filter(|(_, r)| **r >= -1e-6)
        .map(|(i, _)| i)
        .collect();
    let m_eq = eval0.eq_residuals.len();
    let m_in_act = active_in.len();
    let m_bnd_act = side.iter().filter(|s| **s != 0).count();
    let m_act = m_eq + m_in_act + m_bnd_act;

    let beta = 1e8;
    let mut y_act = vec![0.0; m_act];
    let mut final_eval = None;
    for _pass in 0..8 {
        let eval = graph.eval_derivatives(v, &derivs).ok()?;
        let mut triplets = Vec::new();
        let mut b_act = vec![0.0; m_act];
        let jac = &eval.eq_jacobian;
        for col in 0..n {
            for p in jac.col_ptr[col]..jac.col_ptr[col + 1] {
                triplets.push((jac.row_idx[p], col, jac.values[p]));
            }
        }
        for i in 0..m_eq {
            b_act[i] = -eval.eq_residuals[i];
        }
        let jac_in = &eval.ineq_jacobian;
        let mut in_map = vec![usize::MAX; eval.ineq_residuals.len()];
        for (slot, &row) in active_in.iter().enumerate() {
            in_map[row] = m_eq + slot;
            b_act[m_eq + slot] = -eval.ineq_residuals[row];
        }
        for col in 0..n {
            for p in jac_in.col_ptr[col]..jac_in.col_ptr[col + 1] {
                let r = jac_in.row_idx[p];
                if in_map[r] != usize::MAX {
                    triplets.push((in_map[r], col, jac_in.values[p]));
                }
            }
        }
        let mut slot = m_eq + m_in_act;
        for j in 0..n {
            if side[j] != 0 {
                triplets.push((slot, j, 1.0));
                b_act[slot] = if side[j] < 0 { lb[j] } else { ub[j] } - v[j];
                slot += 1;
            }
        }
        let g_act = CscMatrix::from_triplets(m_act, n, &triplets);
        let hessian = graph.sqp_hessian(v, reg.max(1e-8));
        let normal = normal_matrix(&hessian, 1e-12, &g_act, &vec![beta; m_act]);
        let factors = OrderedLdl::analyze(&normal).factor(&normal).ok()?;

        let mut delta = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut tmp = vec![0.0; m_act];
        let mut r = vec![0.0; m_act];
        // warm-started multipliers keep the refinement a Newton step
        for _ in 0..6 {
            for i in 0..m_act {
                tmp[i] = beta * b_act[i] - y_act[i];
            }
            g_act.mul_transpose_vec(&tmp, &mut rhs);
            for j in 0..n {
                rhs[j] -= eval.objective_gradient[j];
            }
            factors.solve_in_place(&mut rhs);
            delta.copy_from_slice(&rhs);
            g_act.mul_vec(&delta, &mut r);
            let mut rn = 0.0f64;
            for i in 0..m_act {
                r[i] -= b_act[i];
                y_act[i] += beta * r[i];
                rn = rn.max(r[i].abs());
            }
            if rn <= 1e-14 {
                break;
            }
        }
        let step: f64 = delta.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        for j in 0..n {
            v[j] = (v[j] + delta[j]).clamp(lb[j], ub[j]);
        }
        let c_norm = {
            let (_, eq, ineq) = graph.eval_residuals(v).ok()?;
            let mut c = eq.iter().fold(0.0f64, |a, r| a.max(r.abs()));
            for &row in &active_in {
                c = c.max(ineq[row].abs());
            }
            c
        };
        if c_norm <= 1e-12 && step <= 1e-9 {
            final_eval = Some(graph.eval_derivatives(v, &derivs).ok()?);
            break;
        }
    }
    let eval = match final_eval {
        Some(e) => e,
        None => graph.eval_derivatives(v, &derivs).ok()?,
    };

    let mut m = Multipliers {
        eq: y_act[0..m_eq].to_vec(),
        ineq: vec![0.0; eval.ineq_residuals.len()],
        bound_lower: vec![0.0; n],
        bound_upper: vec![0.0; n],
    };
    for (slot, &row) in active_in.iter().enumerate() {
        // wrong-sign multipliers mean the frozen set was not optimal
        let mu = y_act[m_eq + slot];
        if mu < -1e-7 {
            return None;
        }
        m.ineq[row] = mu.max(0.0);
    }
    let mut slot = m_eq + m_in_act;
    for j in 0..n {
        if side[j] != 0 {
            let y = y_act[slot];
            slot += 1;
            if side[j] < 0 {
                if y > 1e-7 {
                    return None;
                }
                m.bound_lower[j] = (-y).max(0.0);
            } else {
                if y < -1e-7 {
                    return None;
                }
                m.bound_upper[j] = y.max(0.0);
            }
        }
    }
    let kkt = kkt_norms(&eval, v, lb, ub, &m);
    if kkt.feasibility <= opts.eps_feas
        && kkt.stationarity <= opts.eps_kkt
        && kkt.complementarity <= opts.eps_kkt
    {
        Some((m, kkt, eval))
    } else {
        None
    }
}

/// Recomputes the KKT norms of a solution against the graph.
pub fn kkt_residual(graph: &Hypergraph, sol: &NlpSolution) -> Result<KktResiduals> {
    let eval = graph.eval_derivatives(&sol.params, &DerivativeOptions::default())?;
    let (lb, ub) = graph.free_bounds();
    let m = Multipliers {
        eq: sol.eq_multipliers.clone(),
        ineq: sol.ineq_multipliers.clone(),
        bound_lower: sol.bound_multipliers_lower.clone(),
        bound_upper: sol.bound_multipliers_upper.clone(),
    };
    Ok(kkt_norms(&eval, &sol.params, &lb, &ub, &m))
}
