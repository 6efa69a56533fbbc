//! Convex quadratic programs by operator splitting (ADMM).
//!
//! Problems are stated in boxed-row form
//!
//! ```text
//! min 1/2 x' H x + g' x   s.t.   l <= A x <= u
//! ```
//!
//! with equality rows encoded as `l_i == u_i` and simple variable bounds as
//! identity rows. Each iteration solves the cached LDL^T factorization of
//! `H + sigma I + A' diag(rho) A`; the factorization is refreshed only when
//! the penalty is rescaled.

use super::ldl::{OrderedFactors, OrderedLdl};
use super::sparse::{normal_matrix, CscMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct QpOptions {
    pub max_iter: usize,
    /// Absolute tolerance on the unscaled primal and dual residuals.
    pub eps: f64,
    /// Tolerance at which the splitting iteration hands over to the
    /// active-set polish; polishing then either reaches `eps` (usually far
    /// beyond it) or the iteration resumes.
    pub eps_handover: f64,
    pub sigma: f64,
    pub rho: f64,
    /// Over-relaxation parameter.
    pub alpha: f64,
    /// Ruiz equilibration sweeps (0 disables scaling).
    pub scaling_iters: usize,
    pub check_interval: usize,
    pub eps_infeasible: f64,
    pub polish: bool,
    /// Augmented-Lagrangian penalty of the polish solve.
    pub polish_beta: f64,
    pub polish_iters: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            max_iter: 4_000,
            eps: 1e-8,
            eps_handover: 3e-3,
            sigma: 1e-6,
            rho: 0.1,
            alpha: 1.6,
            scaling_iters: 10,
            check_interval: 25,
            eps_infeasible: 1e-10,
            polish: true,
            polish_beta: 1e7,
            polish_iters: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    MaxIter,
    PrimalInfeasible,
    DualInfeasible,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// Row multipliers; positive entries push against upper bounds,
    /// negative entries against lower bounds.
    pub y: Vec<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub hessian: CscMatrix,
    pub gradient: Vec<f64>,
    pub constraints: CscMatrix,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl QpProblem {
    /// Assembles the boxed-row form from separate equality rows
    /// (`a_eq x = b_eq`), inequality rows (`a_in x <= b_in`) and variable
    /// bounds.
    pub fn from_parts(
        hessian: CscMatrix,
        gradient: Vec<f64>,
        a_eq: &CscMatrix,
        b_eq: &[f64],
        a_in: &CscMatrix,
        b_in: &[f64],
        x_lower: &[f64],
        x_upper: &[f64],
    ) -> Self {
        let n = gradient.len();
        assert_eq!(a_eq.ncols, n);
        assert_eq!(a_in.ncols, n);
        let m = a_eq.nrows + a_in.nrows + n;
        let mut triplets = Vec::with_capacity(a_eq.nnz() + a_in.nnz() + n);
        for j in 0..n {
            for p in a_eq.col_ptr[j]..a_eq.col_ptr[j + 1] {
                triplets.push((a_eq.row_idx[p], j, a_eq.values[p]));
            }
            for p in a_in.col_ptr[j]..a_in.col_ptr[j + 1] {
                triplets.push((a_eq.nrows + a_in.row_idx[p], j, a_in.values[p]));
            }
            triplets.push((a_eq.nrows + a_in.nrows + j, j, 1.0));
        }
        let mut lower = Vec::with_capacity(m);
        let mut upper = Vec::with_capacity(m);
        lower.extend_from_slice(b_eq);
        upper.extend_from_slice(b_eq);
        for &b in b_in {
            lower.push(f64::NEG_INFINITY);
            upper.push(b);
        }
        lower.extend_from_slice(x_lower);
        upper.extend_from_slice(x_upper);
        QpProblem {
            hessian,
            gradient,
            constraints: CscMatrix::from_triplets(m, n, &triplets),
            lower,
            upper,
        }
    }
}

/// ADMM solver with a symbolic factorization cached across solves that
/// share the normal-matrix pattern.
#[derive(Debug, Default)]
pub struct QpSolver {
    symbolic: Option<(Vec<usize>, Vec<usize>, OrderedLdl)>,
}

impl QpSolver {
    pub fn new() -> Self {
        QpSolver::default()
    }

    pub fn solve(
        &mut self,
        prob: &QpProblem,
        opts: &QpOptions,
        warm: Option<(&[f64], &[f64])>,
    ) -> Result<QpSolution> {
        let n = prob.gradient.len();
        let m = prob.constraints.nrows;
        assert_eq!(prob.hessian.ncols, n);
        assert_eq!(prob.lower.len(), m);
        assert_eq!(prob.upper.len(), m);
        for i in 0..m {
            if prob.lower[i] > prob.upper[i] {
                return Err(Error::Qp(format!("row {i} has lower > upper")));
            }
        }

        // Ruiz equilibration: P_s = c D P D, q_s = c D q, A_s = E A D.
        let mut d = vec![1.0f64; n];
        let mut e = vec![1.0f64; m];
        let mut c = 1.0f64;
        let mut h_s = prob.hessian.clone();
        let mut a_s = prob.constraints.clone();
        let mut q_s = prob.gradient.clone();
        for _ in 0..opts.scaling_iters {
            let hc = h_s.infinity_norm_cols();
            let ac = a_s.infinity_norm_cols();
            let ar = a_s.infinity_norm_rows();
            let mut dd = vec![1.0f64; n];
            for j in 0..n {
                let norm = hc[j].max(ac[j]);
                if norm > 1e-12 {
                    dd[j] = 1.0 / norm.sqrt();
                }
            }
            let mut de = vec![1.0f64; m];
            for i in 0..m {
                if ar[i] > 1e-12 {
                    de[i] = 1.0 / ar[i].sqrt();
                }
            }
            h_s.scale(&dd, &dd);
            a_s.scale(&de, &dd);
            for j in 0..n {
                q_s[j] *= dd[j];
                d[j] *= dd[j];
            }
            for i in 0..m {
                e[i] *= de[i];
            }
            // cost scaling
            let hc2 = h_s.infinity_norm_cols();
            let mean_h = if n > 0 {
                hc2.iter().sum::<f64>() / n as f64
            } else {
                0.0
            };
            let qn = q_s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let denom = mean_h.max(qn);
            if denom > 1e-12 {
                let gamma = 1.0 / denom;
                for v in h_s.values.iter_mut() {
                    *v *= gamma;
                }
                for v in q_s.iter_mut() {
                    *v *= gamma;
                }
                c *= gamma;
            }
        }
        let l_s: Vec<f64> = prob.lower.iter().zip(&e).map(|(v, ei)| v * ei).collect();
        let u_s: Vec<f64> = prob.upper.iter().zip(&e).map(|(v, ei)| v * ei).collect();

        // per-row penalties: stiffer on equality rows
        let mut rho_bar = opts.rho;
        let eq_row: Vec<bool> = (0..m).map(|i| prob.lower[i] == prob.upper[i]).collect();
        let rho_vec = |rho_bar: f64| -> Vec<f64> {
            (0..m)
                .map(|i| if eq_row[i] { rho_bar * 1e3 } else { rho_bar })
                .collect()
        };
        let mut rho = rho_vec(rho_bar);

        let mut factors = self.refactor(&h_s, opts.sigma, &a_s, &rho)?;

        let mut x = vec![0.0; n];
        let mut y = vec![0.0; m];
        if let Some((x0, y0)) = warm {
            for j in 0..n {
                x[j] = x0[j] / d[j];
            }
            for i in 0..m {
                y[i] = y0[i] * c / e[i];
            }
        }
        let mut z = vec![0.0; m];
        a_s.mul_vec(&x, &mut z);
        for i in 0..m {
            z[i] = z[i].clamp(l_s[i], u_s[i]);
        }

        let mut rhs = vec![0.0; n];
        let mut ax = vec![0.0; m];
        let mut scratch_n = vec![0.0; n];
        let mut scratch_m = vec![0.0; m];
        let mut best: Option<(f64, Vec<f64>, Vec<f64>, f64, f64)> = None;
        let mut status = QpStatus::MaxIter;
        let mut iterations = opts.max_iter;
        let mut last_polish_at = f64::INFINITY;

        for iter in 0..opts.max_iter {
            // x-update rhs: sigma x - q + A' (rho z - y)
            for i in 0..m {
                scratch_m[i] = rho[i] * z[i] - y[i];
            }
            a_s.mul_transpose_vec(&scratch_m, &mut rhs);
            for j in 0..n {
                rhs[j] += opts.sigma * x[j] - q_s[j];
            }
            factors.solve_in_place(&mut rhs);
            let x_tilde = &rhs;
            a_s.mul_vec(x_tilde, &mut ax);

            let mut dx_norm = 0.0f64;
            let mut x_norm = 0.0f64;
            for j in 0..n {
                let xn = opts.alpha * x_tilde[j] + (1.0 - opts.alpha) * x[j];
                dx_norm = dx_norm.max((xn - x[j]).abs());
                scratch_n[j] = xn - x[j];
                x[j] = xn;
                x_norm = x_norm.max(xn.abs());
            }
            let mut dy_norm = 0.0f64;
            let mut dy_sup: Vec<f64> = Vec::new();
            for i in 0..m {
                let za = opts.alpha * ax[i] + (1.0 - opts.alpha) * z[i];
                let zc = za + y[i] / rho[i];
                let zn = zc.clamp(l_s[i], u_s[i]);
                let yn = y[i] + rho[i] * (za - zn);
                let dy = yn - y[i];
                dy_norm = dy_norm.max(dy.abs());
                scratch_m[i] = dy;
                y[i] = yn;
                z[i] = zn;
            }

            if (iter + 1) % opts.check_interval == 0 || iter + 1 == opts.max_iter {
                // unscaled residuals
                let (rp, rd) = self.residuals(prob, &h_s, &a_s, &x, &y, &z, &d, &e, c);
                // relative residuals on the scaled problem steer rho
                let (rp_rel, rd_rel) = {
                    let mut ax_s = vec![0.0; m];
                    a_s.mul_vec(&x, &mut ax_s);
                    let ax_norm = ax_s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let z_norm = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let mut rp_s = 0.0f64;
                    for i in 0..m {
                        rp_s = rp_s.max((ax_s[i] - z[i]).abs());
                    }
                    let mut hx_s = vec![0.0; n];
                    h_s.mul_vec(&x, &mut hx_s);
                    let mut aty_s = vec![0.0; n];
                    a_s.mul_transpose_vec(&y, &mut aty_s);
                    let hx_norm = hx_s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let aty_norm = aty_s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let q_norm = q_s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let mut rd_s = 0.0f64;
                    for j in 0..n {
                        rd_s = rd_s.max((hx_s[j] + q_s[j] + aty_s[j]).abs());
                    }
                    (
                        rp_s / ax_norm.max(z_norm).max(1e-12),
                        rd_s / hx_norm.max(aty_norm).max(q_norm).max(1e-12),
                    )
                };
                if best.as_ref().map_or(true, |b| rp.max(rd) < b.0) {
                    best = Some((rp.max(rd), x.clone(), y.clone(), rp, rd));
                }
                if std::env::var_os("MINTIME_QP_DEBUG").is_some() && (iter + 1) % 500 == 0 {
                    eprintln!(
                        "    qp iter {}: rp {:.2e} rd {:.2e} rp_rel {:.2e} rd_rel {:.2e} rho {:.2e}",
                        iter + 1, rp, rd, rp_rel, rd_rel, rho_bar
                    );
                }
                if rp <= opts.eps && rd <= opts.eps {
                    status = QpStatus::Optimal;
                    iterations = iter + 1;
                    best = Some((rp.max(rd), x.clone(), y.clone(), rp, rd));
                    break;
                }
                if opts.polish
                    && rp <= opts.eps_handover
                    && rd <= opts.eps_handover
                    && rp.max(rd) < 0.3 * last_polish_at
                {
                    last_polish_at = rp.max(rd);
                    let mut xu = vec![0.0; n];
                    for j in 0..n {
                        xu[j] = x[j] * d[j];
                    }
                    let mut yu = vec![0.0; m];
                    for i in 0..m {
                        yu[i] = y[i] * e[i] / c;
                    }
                    let polished = polish(prob, &xu, &yu, opts);
                    if std::env::var_os("MINTIME_QP_DEBUG").is_some() {
                        match &polished {
                            Some((_, _, rpp, rdp)) => eprintln!(
                                "    polish at iter {}: rp {:.2e} rd {:.2e}",
                                iter + 1,
                                rpp,
                                rdp
                            ),
                            None => eprintln!("    polish at iter {}: factor failed", iter + 1),
                        }
                    }
                    if let Some((xp, yp, rpp, rdp)) = polished {
                        if rpp <= opts.eps && rdp <= opts.eps {
                            let mut hx = vec![0.0; n];
                            prob.hessian.mul_vec(&xp, &mut hx);
                            let objective = 0.5 * dot(&hx, &xp) + dot(&prob.gradient, &xp);
                            return Ok(QpSolution {
                                x: xp,
                                y: yp,
                                status: QpStatus::Optimal,
                                iterations: iter + 1,
                                primal_residual: rpp,
                                dual_residual: rdp,
                                objective,
                            });
                        }
                    }
                }
                // primal infeasibility certificate on delta y
                if dy_norm > opts.eps_infeasible {
                    dy_sup.clone_from(&scratch_m);
                    let mut aty = vec![0.0; n];
                    a_s.mul_transpose_vec(&dy_sup, &mut aty);
                    let aty_norm = aty.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let mut support = 0.0;
                    for i in 0..m {
                        let v = dy_sup[i];
                        if v > 0.0 {
                            if u_s[i].is_finite() {
                                support += u_s[i] * v;
                            } else {
                                support = f64::INFINITY;
                            }
                        } else if v < 0.0 {
                            if l_s[i].is_finite() {
                                support += l_s[i] * v;
                            } else {
                                support = f64::INFINITY;
                            }
                        }
                    }
                    if aty_norm <= 1e-8 * dy_norm && support < -1e-8 * dy_norm {
                        status = QpStatus::PrimalInfeasible;
                        iterations = iter + 1;
                        break;
                    }
                }
                // dual infeasibility certificate on delta x
                if dx_norm > opts.eps_infeasible && x_norm > 0.0 {
                    let dxv = &scratch_n;
                    let mut hdx = vec![0.0; n];
                    h_s.mul_vec(dxv, &mut hdx);
                    let hdx_norm = hdx.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let qdx: f64 = q_s.iter().zip(dxv).map(|(a, b)| a * b).sum();
                    let mut adx = vec![0.0; m];
                    a_s.mul_vec(dxv, &mut adx);
                    let mut in_recession = true;
                    for i in 0..m {
                        if adx[i] > 1e-8 * dx_norm && u_s[i].is_finite() {
                            in_recession = false;
                        }
                        if adx[i] < -1e-8 * dx_norm && l_s[i].is_finite() {
                            in_recession = false;
                        }
                    }
                    if hdx_norm <= 1e-8 * dx_norm && qdx < -1e-8 * dx_norm && in_recession {
                        status = QpStatus::DualInfeasible;
                        iterations = iter + 1;
                        break;
                    }
                }
                // penalty adaptation on the relative residual ratio
                if (iter + 1) % (opts.check_interval * 2) == 0 && rp_rel > 0.0 && rd_rel > 0.0 {
                    let candidate = (rho_bar * (rp_rel / rd_rel).sqrt()).clamp(1e-6, 1e6);
                    if candidate > 5.0 * rho_bar || candidate < rho_bar / 5.0 {
                        rho_bar = candidate;
                        rho = rho_vec(rho_bar);
                        factors = self.refactor(&h_s, opts.sigma, &a_s, &rho)?;
                        // rescale the duals' implicit step size history
                    }
                }
            }
        }

        let (err, xb, yb, rp, rd) = match best {
            Some(b) => b,
            None => {
                let (rp, rd) = self.residuals(prob, &h_s, &a_s, &x, &y, &z, &d, &e, c);
                (rp.max(rd), x, y, rp, rd)
            }
        };
        let _ = err;
        // unscale
        let mut x_out = vec![0.0; n];
        for j in 0..n {
            x_out[j] = xb[j] * d[j];
        }
        let mut y_out = vec![0.0; m];
        for i in 0..m {
            y_out[i] = yb[i] * e[i] / c;
        }
        let mut hx = vec![0.0; n];
        prob.hessian.mul_vec(&x_out, &mut hx);
        let objective = 0.5 * dot(&hx, &x_out) + dot(&prob.gradient, &x_out);
        Ok(QpSolution {
            x: x_out,
            y: y_out,
            status,
            iterations,
            primal_residual: rp,
            dual_residual: rd,
            objective,
        })
    }

    fn refactor(
        &mut self,
        h_s: &CscMatrix,
        sigma: f64,
        a_s: &CscMatrix,
        rho: &[f64],
    ) -> Result<OrderedFactors> {
        let normal = normal_matrix(h_s, sigma, a_s, rho);
        let key = (normal.col_ptr.clone(), normal.row_idx.clone());
        let reuse = matches!(&self.symbolic, Some((cp, ri, _)) if *cp == key.0 && *ri == key.1);
        if !reuse {
            let ordered = OrderedLdl::analyze(&normal);
            self.symbolic = Some((key.0, key.1, ordered));
        }
        self.symbolic.as_ref().unwrap().2.factor(&normal)
    }

    /// Unscaled residuals at scaled iterates.
    #[allow(clippy::too_many_arguments)]
    fn residuals(
        &self,
        prob: &QpProblem,
        _h_s: &CscMatrix,
        _a_s: &CscMatrix,
        x_s: &[f64],
        y_s: &[f64],
        z_s: &[f64],
        d: &[f64],
        e: &[f64],
        c: f64,
    ) -> (f64, f64) {
        let n = d.len();
        let m = e.len();
        let mut x = vec![0.0; n];
        for j in 0..n {
            x[j] = x_s[j] * d[j];
        }
        let mut y = vec![0.0; m];
        let mut z = vec![0.0; m];
        for i in 0..m {
            y[i] = y_s[i] * e[i] / c;
            z[i] = z_s[i] / e[i];
        }
        let mut ax = vec![0.0; m];
        prob.constraints.mul_vec(&x, &mut ax);
        let mut rp = 0.0f64;
        for i in 0..m {
            rp = rp.max((ax[i] - z[i]).abs());
        }
        let mut hx = vec![0.0; n];
        prob.hessian.mul_vec(&x, &mut hx);
        let mut aty = vec![0.0; n];
        prob.constraints.mul_transpose_vec(&y, &mut aty);
        let mut rd = 0.0f64;
        for j in 0..n {
            rd = rd.max((hx[j] + prob.gradient[j] + aty[j]).abs());
        }
        (rp, rd)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Active-set refinement: pins the rows the splitting iterate marks as
/// active and solves the equality-constrained problem to high accuracy by
/// an augmented-Lagrangian direct method (the factored matrix has the same
/// chain pattern as the ADMM normal matrix). Returns unscaled
/// `(x, y, primal_residual, dual_residual)`, or `None` when the guessed
/// active set does not factor.
fn polish(
    prob: &QpProblem,
    x: &[f64],
    y: &[f64],
    opts: &QpOptions,
) -> Option<(Vec<f64>, Vec<f64>, f64, f64)> {
    let n = prob.gradient.len();
    let m = prob.constraints.nrows;
    let mut ax = vec![0.0; m];
    prob.constraints.mul_vec(x, &mut ax);
    // per-row state: 0 inactive, -1 at lower, +1 at upper, 2 equality
    let mut side = vec![0i8; m];
    for i in 0..m {
        let l = prob.lower[i];
        let u = prob.upper[i];
        let scale = 1.0 + ax[i].abs();
        side[i] = if l == u {
            2
        } else if l.is_finite() && (y[i] < -1e-10 || ax[i] - l <= 1e-6 * scale) {
            -1
        } else if u.is_finite() && (y[i] > 1e-10 || u - ax[i] <= 1e-6 * scale) {
            1
        } else {
            0
        };
    }

    let beta = opts.polish_beta;
    let mut x_p = x.to_vec();
    let mut y_full = y.to_vec();
    let mut best: Option<(Vec<f64>, Vec<f64>, f64, f64)> = None;
    // rows may change state once; locking prevents add/drop cycles
    let mut locked = vec![false; m];
    for _round in 0..8 {
        let mut active_rows = Vec::new();
        let mut b_act = Vec::new();
        let mut row_map = vec![usize::MAX; m];
        for i in 0..m {
            let b = match side[i] {
                2 => prob.lower[i],
                -1 => prob.lower[i],
                1 => prob.upper[i],
                _ => continue,
            };
            row_map[i] = active_rows.len();
            active_rows.push(i);
            b_act.push(b);
        }
        let m_act = active_rows.len();
        let mut g_triplets = Vec::new();
        let a = &prob.constraints;
        for col in 0..n {
            for p in a.col_ptr[col]..a.col_ptr[col + 1] {
                let r = a.row_idx[p];
                if row_map[r] != usize::MAX {
                    g_triplets.push((row_map[r], col, a.values[p]));
                }
            }
        }
        let g = CscMatrix::from_triplets(m_act, n, &g_triplets);
        let normal = normal_matrix(&prob.hessian, 1e-12, &g, &vec![beta; m_act]);
        let factors = OrderedLdl::analyze(&normal).factor(&normal).ok()?;

        let mut y_act: Vec<f64> = active_rows.iter().map(|&i| y_full[i]).collect();
        let mut rhs = vec![0.0; n];
        let mut tmp = vec![0.0; m_act];
        let mut r = vec![0.0; m_act];
        for _ in 0..opts.polish_iters {
            for i in 0..m_act {
                tmp[i] = beta * b_act[i] - y_act[i];
            }
            g.mul_transpose_vec(&tmp, &mut rhs);
            for j in 0..n {
                rhs[j] -= prob.gradient[j];
            }
            factors.solve_in_place(&mut rhs);
            x_p.copy_from_slice(&rhs);
            g.mul_vec(&x_p, &mut r);
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
        y_full.fill(0.0);
        for (idx, &i) in active_rows.iter().enumerate() {
            y_full[i] = y_act[idx];
        }

        prob.constraints.mul_vec(&x_p, &mut ax);
        let ymax = y_full.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let drop_tol = 1e-7 * (1.0 + ymax);
        let mut changes = 0usize;
        for i in 0..m {
            if locked[i] {
                continue;
            }
            let scale = 1.0 + ax[i].abs();
            match side[i] {
                0 => {
                    if prob.lower[i] - ax[i] > 1e-9 * scale {
                        side[i] = -1;
                        locked[i] = true;
                        changes += 1;
                    } else if ax[i] - prob.upper[i] > 1e-9 * scale {
                        side[i] = 1;
                        locked[i] = true;
                        changes += 1;
                    }
                }
                -1 => {
                    if y_full[i] > drop_tol {
                        side[i] = 0;
                        locked[i] = true;
                        changes += 1;
                    }
                }
                1 => {
                    if y_full[i] < -drop_tol {
                        side[i] = 0;
                        locked[i] = true;
                        changes += 1;
                    }
                }
                _ => {}
            }
        }

        let mut rp = 0.0f64;
        for i in 0..m {
            rp = rp.max(prob.lower[i] - ax[i]).max(ax[i] - prob.upper[i]);
        }
        let mut hx = vec![0.0; n];
        prob.hessian.mul_vec(&x_p, &mut hx);
        let mut aty = vec![0.0; n];
        prob.constraints.mul_transpose_vec(&y_full, &mut aty);
        let mut rd = 0.0f64;
        for j in 0..n {
            rd = rd.max((hx[j] + prob.gradient[j] + aty[j]).abs());
        }
        let rp = rp.max(0.0);
        if best.as_ref().map_or(true, |b| rp.max(rd) < b.2.max(b.3)) {
            best = Some((x_p.clone(), y_full.clone(), rp, rd));
        }
        if changes == 0 || (rp <= opts.eps && rd <= opts.eps) {
            break;
        }
    }
    best
}

/// One-shot convenience wrapper around [`QpSolver::solve`].
pub fn solve_qp(prob: &QpProblem, opts: &QpOptions) -> Result<QpSolution> {
    QpSolver::new().solve(prob, opts, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds_only(h: Vec<(usize, usize, f64)>, g: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> QpProblem {
        let n = g.len();
        QpProblem::from_parts(
            CscMatrix::from_triplets(n, n, &h),
            g,
            &CscMatrix::zeros(0, n),
            &[],
            &CscMatrix::zeros(0, n),
            &[],
            &lo,
            &hi,
        )
    }

    #[test]
    fn active_lower_bound() {
        // min x^2 s.t. x >= 1
        let prob = bounds_only(vec![(0, 0, 2.0)], vec![0.0], vec![1.0], vec![f64::INFINITY]);
        let sol = solve_qp(&prob, &QpOptions::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-6);
        // stationarity: 2x + y = 0 at x = 1 -> y = -2 (pushing against lower bound)
        assert!((sol.y[0] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn symmetric_equality() {
        // min x^2 + y^2 s.t. x + y = 2
        let n = 2;
        let h = CscMatrix::from_triplets(n, n, &[(0, 0, 2.0), (1, 1, 2.0)]);
        let a = CscMatrix::from_triplets(1, n, &[(0, 0, 1.0), (0, 1, 1.0)]);
        let prob = QpProblem::from_parts(
            h,
            vec![0.0, 0.0],
            &a,
            &[2.0],
            &CscMatrix::zeros(0, n),
            &[],
            &[f64::NEG_INFINITY; 2],
            &[f64::INFINITY; 2],
        );
        let sol = solve_qp(&prob, &QpOptions::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-6);
        assert!((sol.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn clipped_unconstrained_minimizer() {
        // min (x-3)^2 s.t. 0 <= x <= 2
        let prob = bounds_only(vec![(0, 0, 2.0)], vec![-6.0], vec![0.0], vec![2.0]);
        let sol = solve_qp(&prob, &QpOptions::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.x[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn detects_primal_infeasibility() {
        // x >= 1 and x <= 0 simultaneously via two rows
        let n = 1;
        let a = CscMatrix::from_triplets(2, n, &[(0, 0, 1.0), (1, 0, 1.0)]);
        let prob = QpProblem {
            hessian: CscMatrix::from_triplets(n, n, &[(0, 0, 2.0)]),
            gradient: vec![0.0],
            constraints: a,
            lower: vec![1.0, f64::NEG_INFINITY],
            upper: vec![f64::INFINITY, 0.0],
        };
        let sol = solve_qp(&prob, &QpOptions::default()).unwrap();
        assert_eq!(sol.status, QpStatus::PrimalInfeasible);
    }

    #[test]
    fn solves_without_constraints() {
        // min (x-1)^2 + (y+2)^2
        let prob = bounds_only(
            vec![(0, 0, 2.0), (1, 1, 2.0)],
            vec![-2.0, 4.0],
            vec![f64::NEG_INFINITY; 2],
            vec![f64::INFINITY; 2],
        );
        let sol = solve_qp(&prob, &QpOptions::default()).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-6 && (sol.x[1] + 2.0).abs() < 1e-6);
    }
}
