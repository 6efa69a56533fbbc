//! Continuous-time plant models, one-step integrators and linearization.
//!
//! A [`Model`] is the vector field `x' = f(x, u)` together with box bounds
//! on states and controls. Models are immutable after construction and may
//! be shared across threads. The discrete map `phi(dt, x, u)` used by the
//! transcription is provided by [`Integrator::step`].

mod integrator;
mod models;

pub use integrator::{simulate, Integrator, PiecewiseConstantControl, Scheme};
pub use models::{model_by_name, DoubleIntegrator, Ecp220, LinearModel, VanDerPol};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A continuous-time, time-invariant vector field with constraint sets.
pub trait Model: Send + Sync {
    /// State dimension `p`.
    fn state_dim(&self) -> usize;

    /// Control dimension `q`.
    fn control_dim(&self) -> usize;

    /// Evaluates `out = f(x, u)`. Implementations may assume dimensions
    /// have been checked by the caller.
    fn vector_field(&self, x: &DVector<f64>, u: &DVector<f64>, out: &mut DVector<f64>);

    /// Analytic Jacobians `(df/dx, df/du)` when available.
    fn jacobians(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        None
    }

    /// Elementwise control bounds `(lower, upper)`; infinite entries mean
    /// unbounded channels.
    fn control_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        let q = self.control_dim();
        (
            DVector::from_element(q, f64::NEG_INFINITY),
            DVector::from_element(q, f64::INFINITY),
        )
    }

    /// Elementwise state bounds `(lower, upper)`.
    fn state_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        let p = self.state_dim();
        (
            DVector::from_element(p, f64::NEG_INFINITY),
            DVector::from_element(p, f64::INFINITY),
        )
    }

    fn name(&self) -> &str;
}

/// Dimension-checked evaluation of the vector field.
///
/// ```
/// use mintime::dynamics::{eval_vector_field, VanDerPol};
/// use nalgebra::dvector;
///
/// let model = VanDerPol::new();
/// let v = eval_vector_field(&model, &dvector![1.0, 1.0], &dvector![0.0]).unwrap();
/// assert_eq!(v, dvector![1.0, -1.0]);
/// ```
pub fn eval_vector_field(
    model: &dyn Model,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    if x.len() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            context: "eval_vector_field state",
            expected: model.state_dim(),
            actual: x.len(),
        });
    }
    if u.len() != model.control_dim() {
        return Err(Error::DimensionMismatch {
            context: "eval_vector_field control",
            expected: model.control_dim(),
            actual: u.len(),
        });
    }
    let mut out = DVector::zeros(model.state_dim());
    model.vector_field(x, u, &mut out);
    Ok(out)
}

/// Step width of the central-difference fallback in [`linearize`].
pub const FD_JACOBIAN_STEP: f64 = 1e-6;

/// Continuous-time Jacobians `(A_c, B_c)` at a reference point.
///
/// Uses analytic Jacobians when the model provides them and falls back to
/// central finite differences with step [`FD_JACOBIAN_STEP`].
pub fn linearize(
    model: &dyn Model,
    x_ref: &DVector<f64>,
    u_ref: &DVector<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    if let Some(jac) = model.jacobians(x_ref, u_ref) {
        return jac;
    }
    finite_difference_jacobians(model, x_ref, u_ref)
}

/// Central-difference Jacobians, independent of any analytic path.
pub fn finite_difference_jacobians(
    model: &dyn Model,
    x_ref: &DVector<f64>,
    u_ref: &DVector<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = model.state_dim();
    let q = model.control_dim();
    let h = FD_JACOBIAN_STEP;
    let mut a = DMatrix::zeros(p, p);
    let mut b = DMatrix::zeros(p, q);
    let mut plus = DVector::zeros(p);
    let mut minus = DVector::zeros(p);
    let mut xw = x_ref.clone();
    for j in 0..p {
        xw[j] = x_ref[j] + h;
        model.vector_field(&xw, u_ref, &mut plus);
        xw[j] = x_ref[j] - h;
        model.vector_field(&xw, u_ref, &mut minus);
        xw[j] = x_ref[j];
        a.set_column(j, &((&plus - &minus) / (2.0 * h)));
    }
    let mut uw = u_ref.clone();
    for j in 0..q {
        uw[j] = u_ref[j] + h;
        model.vector_field(x_ref, &uw, &mut plus);
        uw[j] = u_ref[j] - h;
        model.vector_field(x_ref, &uw, &mut minus);
        uw[j] = u_ref[j];
        b.set_column(j, &((&plus - &minus) / (2.0 * h)));
    }
    (a, b)
}

/// Zero-order-hold discretization of `x' = A_c x + B_c u` with sample
/// time `dt`: `A = exp(A_c dt)` and `B = (int_0^dt exp(A_c tau) dtau) B_c`,
/// both obtained from one exponential of the augmented matrix
/// `[[A_c, B_c], [0, 0]] * dt`.
pub fn zoh_discretize(
    a_c: &DMatrix<f64>,
    b_c: &DMatrix<f64>,
    dt: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = a_c.nrows();
    let q = b_c.ncols();
    assert_eq!(a_c.ncols(), p, "A_c must be square");
    assert_eq!(b_c.nrows(), p, "B_c row count must match A_c");
    let n = p + q;
    let mut aug = DMatrix::zeros(n, n);
    aug.view_mut((0, 0), (p, p)).copy_from(&(a_c * dt));
    aug.view_mut((0, p), (p, q)).copy_from(&(b_c * dt));
    let e = expm(&aug);
    (
        e.view((0, 0), (p, p)).into_owned(),
        e.view((0, p), (p, q)).into_owned(),
    )
}

/// Matrix exponential by scaling and squaring with a Taylor series on the
/// scaled matrix.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    assert_eq!(m.ncols(), n);
    let norm = m
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let t = m / 2f64.powi(s as i32);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=30 {
        term = (&term * &t) / k as f64;
        result += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;

    #[test]
    fn vdp_origin_is_steady_with_zero_control() {
        let m = VanDerPol::new();
        let v = eval_vector_field(&m, &dvector![0.0, 0.0], &dvector![0.0]).unwrap();
        assert_eq!(v, dvector![0.0, 0.0]);
    }

    #[test]
    fn vdp_steady_state_follows_control_reference() {
        // unique steady state at (u, 0)
        let m = VanDerPol::new();
        let v = eval_vector_field(&m, &dvector![0.8, 0.0], &dvector![0.8]).unwrap();
        assert!(v.amax() < 1e-12);
    }

    #[test]
    fn vdp_hand_evaluated_point() {
        let m = VanDerPol::new();
        let v = eval_vector_field(&m, &dvector![1.0, 1.0], &dvector![0.0]).unwrap();
        assert_eq!(v, dvector![1.0, -1.0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = VanDerPol::new();
        assert!(eval_vector_field(&m, &dvector![0.0], &dvector![0.0]).is_err());
        assert!(eval_vector_field(&m, &dvector![0.0, 0.0], &dvector![0.0, 1.0]).is_err());
    }

    #[test]
    fn vdp_linearization_at_origin() {
        let m = VanDerPol::new();
        let (a, b) = linearize(&m, &dvector![0.0, 0.0], &dvector![0.0]);
        assert_abs_diff_eq!(a, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 1.0]), epsilon = 1e-12);
        assert_abs_diff_eq!(b, DMatrix::from_row_slice(2, 1, &[0.0, 1.0]), epsilon = 1e-12);
    }

    #[test]
    fn linear_model_linearizes_to_itself() {
        let a = DMatrix::from_row_slice(2, 2, &[0.3, -1.2, 0.7, 0.1]);
        let b = DMatrix::from_row_slice(2, 1, &[0.5, -0.25]);
        let m = LinearModel::new(a.clone(), b.clone());
        let (aj, bj) = linearize(&m, &dvector![0.4, -0.3], &dvector![0.2]);
        assert_abs_diff_eq!(aj, a, epsilon = 1e-12);
        assert_abs_diff_eq!(bj, b, epsilon = 1e-12);
    }

    #[test]
    fn ecp_velocity_derivative_at_rest() {
        // d(xdd)/d(xd) at xd = 0 is -c1 - c2*c3 = -14.11
        let m = Ecp220::new();
        let (a, _) = linearize(&m, &dvector![0.0, 0.0], &dvector![0.0, 0.0]);
        assert_abs_diff_eq!(a[(1, 1)], -14.11, epsilon = 1e-9);
    }

    #[test]
    fn zoh_matches_reported_vdp_discretization() {
        let m = VanDerPol::new();
        let (ac, bc) = linearize(&m, &dvector![0.0, 0.0], &dvector![0.0]);
        let (a, b) = zoh_discretize(&ac, &bc, 0.001);
        // reported to three decimals
        assert_abs_diff_eq!(a[(0, 0)], 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(a[(0, 1)], 0.001, epsilon = 1e-5);
        assert_abs_diff_eq!(a[(1, 0)], -0.001, epsilon = 1e-5);
        assert_abs_diff_eq!(a[(1, 1)], 1.001, epsilon = 1e-5);
        assert_abs_diff_eq!(b[(0, 0)], 0.0, epsilon = 1e-5);
        assert_abs_diff_eq!(b[(1, 0)], 0.001, epsilon = 1e-5);
    }

    #[test]
    fn zoh_of_zero_dynamics() {
        let ac = DMatrix::zeros(2, 2);
        let bc = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let (a, b) = zoh_discretize(&ac, &bc, 0.3);
        assert_abs_diff_eq!(a, DMatrix::identity(2, 2), epsilon = 1e-14);
        assert_abs_diff_eq!(b, &bc * 0.3, epsilon = 1e-14);
    }

    #[test]
    fn zoh_semigroup_property() {
        let m = VanDerPol::new();
        let (ac, bc) = linearize(&m, &dvector![0.0, 0.0], &dvector![0.0]);
        let (a12, _) = zoh_discretize(&ac, &bc, 0.7);
        let (a1, _) = zoh_discretize(&ac, &bc, 0.3);
        let (a2, _) = zoh_discretize(&ac, &bc, 0.4);
        assert_abs_diff_eq!(a12, &a1 * &a2, epsilon = 1e-10);
    }
}
