//! One-step integration of the plant dynamics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Model;
use crate::error::{Error, Result};

/// One-step scheme for the discrete map `phi(dt, x, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ForwardEuler,
    BackwardEuler,
    Trapezoidal,
    Rk4,
}

/// Numerical one-step integrator. Implicit schemes solve the step residual
/// with a damped Newton iteration warm-started from the forward-Euler
/// predictor.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub scheme: Scheme,
    pub newton_max_iter: usize,
    pub newton_tol: f64,
}

impl Integrator {
    pub fn new(scheme: Scheme) -> Self {
        Integrator {
            scheme,
            newton_max_iter: 50,
            newton_tol: 1e-10,
        }
    }

    /// One step of `phi(dt, x, u)`.
    ///
    /// ```
    /// use mintime::dynamics::{Integrator, Scheme, VanDerPol};
    /// use nalgebra::dvector;
    ///
    /// let integ = Integrator::new(Scheme::ForwardEuler);
    /// let x = integ.step(&VanDerPol::new(), &dvector![0.0, 0.0], &dvector![1.0], 0.1).unwrap();
    /// assert_eq!(x, dvector![0.0, 0.1]);
    /// ```
    pub fn step(
        &self,
        model: &dyn Model,
        x: &DVector<f64>,
        u: &DVector<f64>,
        dt: f64,
    ) -> Result<DVector<f64>> {
        if dt == 0.0 {
            return Ok(x.clone());
        }
        let p = model.state_dim();
        let mut fx = DVector::zeros(p);
        match self.scheme {
            Scheme::ForwardEuler => {
                model.vector_field(x, u, &mut fx);
                Ok(x + dt * fx)
            }
            Scheme::Rk4 => {
                let mut k = DVector::zeros(p);
                model.vector_field(x, u, &mut k);
                let k1 = k.clone();
                model.vector_field(&(x + (dt / 2.0) * &k1), u, &mut k);
                let k2 = k.clone();
                model.vector_field(&(x + (dt / 2.0) * &k2), u, &mut k);
                let k3 = k.clone();
                model.vector_field(&(x + dt * &k3), u, &mut k);
                Ok(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k))
            }
            Scheme::BackwardEuler => {
                // residual r(y) = y - x - dt f(y, u)
                model.vector_field(x, u, &mut fx);
                let predictor = x + dt * &fx;
                self.newton(predictor, |y, r| {
                    let mut fy = DVector::zeros(p);
                    model.vector_field(y, u, &mut fy);
                    r.copy_from(&(y - x - dt * fy));
                })
            }
            Scheme::Trapezoidal => {
                // residual r(y) = y - x - dt/2 (f(x, u) + f(y, u))
                model.vector_field(x, u, &mut fx);
                let base = x + (dt / 2.0) * &fx;
                let predictor = x + dt * &fx;
                self.newton(predictor, |y, r| {
                    let mut fy = DVector::zeros(p);
                    model.vector_field(y, u, &mut fy);
                    r.copy_from(&(y - &base - (dt / 2.0) * fy));
                })
            }
        }
    }

    /// Solves `step(dt, y, u) = x_next` for `y`: the exact preimage of one
    /// forward step. Sampling a region in reverse time with this map keeps
    /// membership consistent with forward feasibility, i.e. replaying the
    /// generating controls forward lands on the original point.
    pub fn inverse_step(
        &self,
        model: &dyn Model,
        x_next: &DVector<f64>,
        u: &DVector<f64>,
        dt: f64,
    ) -> Result<DVector<f64>> {
        if dt == 0.0 {
            return Ok(x_next.clone());
        }
        let p = model.state_dim();
        if let Scheme::BackwardEuler = self.scheme {
            // x_next = y + dt f(x_next, u) rearranges explicitly
            let mut f = DVector::zeros(p);
            model.vector_field(x_next, u, &mut f);
            return Ok(x_next - dt * f);
        }
        let mut f = DVector::zeros(p);
        model.vector_field(x_next, u, &mut f);
        let predictor = x_next - dt * &f;
        self.newton(predictor, |y, r| match self.step(model, y, u, dt) {
            Ok(fwd) => r.copy_from(&(fwd - x_next)),
            Err(_) => r.fill(f64::NAN),
        })
    }

    /// Damped Newton iteration on a residual map, with a finite-difference
    /// Jacobian of the residual.
    fn newton<F>(&self, start: DVector<f64>, residual: F) -> Result<DVector<f64>>
    where
        F: Fn(&DVector<f64>, &mut DVector<f64>),
    {
        let p = start.len();
        let mut y = start;
        let mut r = DVector::zeros(p);
        residual(&y, &mut r);
        let mut rnorm = r.amax();
        for _ in 0..self.newton_max_iter {
            if rnorm <= self.newton_tol {
                return Ok(y);
            }
            let h = 1e-7;
            let mut jac = DMatrix::zeros(p, p);
            let mut rp = DVector::zeros(p);
            for j in 0..p {
                let mut yp = y.clone();
                yp[j] += h;
                residual(&yp, &mut rp);
                jac.set_column(j, &((&rp - &r) / h));
            }
            let Some(delta) = jac.lu().solve(&r) else {
                break;
            };
            let mut alpha = 1.0;
            loop {
                let cand = &y - alpha * &delta;
                residual(&cand, &mut rp);
                let cand_norm = rp.amax();
                if cand_norm.is_finite() && cand_norm < rnorm {
                    y = cand;
                    r.copy_from(&rp);
                    rnorm = cand_norm;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1.0 / 64.0 {
                    return Err(Error::IntegrationFailure {
                        iterations: self.newton_max_iter,
                        residual: rnorm,
                    });
                }
            }
        }
        if rnorm <= self.newton_tol {
            Ok(y)
        } else {
            Err(Error::IntegrationFailure {
                iterations: self.newton_max_iter,
                residual: rnorm,
            })
        }
    }
}

/// A control trajectory that is constant on each of `N` uniform intervals
/// of length `dt`; the domain is `[0, N dt]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantControl {
    values: Vec<DVector<f64>>,
    dt: f64,
}

impl PiecewiseConstantControl {
    pub fn new(values: Vec<DVector<f64>>, dt: f64) -> Self {
        assert!(!values.is_empty(), "control sequence must be non-empty");
        assert!(dt >= 0.0, "interval length must be non-negative");
        PiecewiseConstantControl { values, dt }
    }

    /// Constant control over the whole horizon.
    pub fn constant(u: DVector<f64>, n: usize, dt: f64) -> Self {
        Self::new(vec![u; n], dt)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.values.len() as f64
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    /// Control active at time `t`, i.e. `u_k` for `t` in `[k dt, (k+1) dt)`
    /// and `u_{N-1}` at the right endpoint. `None` outside the domain.
    pub fn value_at(&self, t: f64) -> Option<&DVector<f64>> {
        if t < 0.0 || t > self.duration() {
            return None;
        }
        let k = if self.dt == 0.0 {
            0
        } else {
            ((t / self.dt).floor() as usize).min(self.values.len() - 1)
        };
        Some(&self.values[k])
    }
}

/// Rolls the plant forward over the control grid, holding `u_k` on interval
/// `k` and subdividing each interval into `substeps` integrator steps.
/// Returns the `N + 1` grid-point states starting with `x0`.
pub fn simulate(
    model: &dyn Model,
    integrator: &Integrator,
    x0: &DVector<f64>,
    ctrl: &PiecewiseConstantControl,
    substeps: usize,
) -> Result<Vec<DVector<f64>>> {
    if substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be >= 1".into()));
    }
    let n = ctrl.len();
    let mut states = Vec::with_capacity(n + 1);
    states.push(x0.clone());
    let h = ctrl.dt() / substeps as f64;
    for (k, u) in ctrl.values().iter().enumerate() {
        let mut x = states[k].clone();
        for _ in 0..substeps {
            x = integrator
                .step(model, &x, u, h)
                .map_err(|e| Error::SimulationFailure {
                    interval: k,
                    source: Box::new(e),
                })?;
        }
        states.push(x);
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DoubleIntegrator, LinearModel, VanDerPol};
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;

    fn decay() -> LinearModel {
        LinearModel::new(
            DMatrix::from_row_slice(1, 1, &[-1.0]),
            DMatrix::from_row_slice(1, 1, &[0.0]),
        )
    }

    #[test]
    fn forward_euler_step_by_hand() {
        let integ = Integrator::new(Scheme::ForwardEuler);
        let x = integ
            .step(&VanDerPol::new(), &dvector![0.0, 0.0], &dvector![1.0], 0.1)
            .unwrap();
        assert_eq!(x, dvector![0.0, 0.1]);
    }

    #[test]
    fn zero_length_step_is_identity_for_all_schemes() {
        let x0 = dvector![0.3, -0.7];
        let u = dvector![0.5];
        for scheme in [
            Scheme::ForwardEuler,
            Scheme::BackwardEuler,
            Scheme::Trapezoidal,
            Scheme::Rk4,
        ] {
            let x = Integrator::new(scheme)
                .step(&VanDerPol::new(), &x0, &u, 0.0)
                .unwrap();
            assert_eq!(x, x0);
        }
    }

    #[test]
    fn trapezoidal_matches_closed_form_on_scalar_decay() {
        // x' = -x: one trapezoidal step is x (1 - dt/2) / (1 + dt/2)
        let integ = Integrator::new(Scheme::Trapezoidal);
        let x = integ
            .step(&decay(), &dvector![1.0], &dvector![0.0], 0.1)
            .unwrap();
        assert_abs_diff_eq!(x[0], 0.95 / 1.05, epsilon = 1e-10);
    }

    #[test]
    fn backward_euler_matches_closed_form_on_scalar_decay() {
        let integ = Integrator::new(Scheme::BackwardEuler);
        let x = integ
            .step(&decay(), &dvector![1.0], &dvector![0.0], 0.1)
            .unwrap();
        assert_abs_diff_eq!(x[0], 1.0 / 1.1, epsilon = 1e-10);
    }

    #[test]
    fn simulate_composes_single_steps() {
        let model = VanDerPol::new();
        let integ = Integrator::new(Scheme::ForwardEuler);
        let ctrl = PiecewiseConstantControl::new(
            vec![dvector![0.3], dvector![-0.2], dvector![1.0]],
            0.05,
        );
        let states = simulate(&model, &integ, &dvector![0.1, 0.2], &ctrl, 1).unwrap();
        let mut x = dvector![0.1, 0.2];
        for (k, u) in ctrl.values().iter().enumerate() {
            x = integ.step(&model, &x, u, 0.05).unwrap();
            assert_eq!(states[k + 1], x);
        }
    }

    #[test]
    fn simulate_keeps_steady_state() {
        let model = VanDerPol::new();
        let integ = Integrator::new(Scheme::Rk4);
        let ctrl = PiecewiseConstantControl::constant(dvector![0.8], 20, 0.1);
        let states = simulate(&model, &integ, &dvector![0.8, 0.0], &ctrl, 4).unwrap();
        for x in &states {
            assert!((x - dvector![0.8, 0.0]).amax() < 1e-12);
        }
    }

    #[test]
    fn constant_velocity_is_exact_under_euler() {
        // x' = u with u = 1 over 10 steps of 0.1
        let model = DoubleIntegrator::new();
        let integ = Integrator::new(Scheme::ForwardEuler);
        let ctrl = PiecewiseConstantControl::constant(dvector![1.0], 10, 0.1);
        // track velocity only: start at rest, the velocity integrates u exactly
        let states = simulate(&model, &integ, &dvector![0.0, 0.0], &ctrl, 1).unwrap();
        assert_abs_diff_eq!(states[10][1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn control_lookup_uses_half_open_intervals() {
        let ctrl =
            PiecewiseConstantControl::new(vec![dvector![1.0], dvector![2.0], dvector![3.0]], 0.5);
        assert_eq!(ctrl.value_at(0.0).unwrap()[0], 1.0);
        assert_eq!(ctrl.value_at(0.49).unwrap()[0], 1.0);
        assert_eq!(ctrl.value_at(0.5).unwrap()[0], 2.0);
        assert_eq!(ctrl.value_at(1.5).unwrap()[0], 3.0);
        assert!(ctrl.value_at(1.6).is_none());
        assert!(ctrl.value_at(-0.1).is_none());
    }

    #[test]
    fn inverse_step_recovers_preimage() {
        let model = VanDerPol::new();
        let u = dvector![0.4];
        for scheme in [
            Scheme::ForwardEuler,
            Scheme::BackwardEuler,
            Scheme::Trapezoidal,
            Scheme::Rk4,
        ] {
            let integ = Integrator::new(scheme);
            let x = dvector![0.3, -0.2];
            let fwd = integ.step(&model, &x, &u, 0.05).unwrap();
            let back = integ.inverse_step(&model, &fwd, &u, 0.05).unwrap();
            assert!((back - &x).amax() < 1e-8, "scheme {scheme:?}");
        }
    }
}
