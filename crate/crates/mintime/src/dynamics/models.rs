//! Built-in plant models.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::Model;

/// Van der Pol oscillator `y'' - (1 - y^2) y' + y = u` in state-space form
/// with `x = (y, y')` and `|u| <= 1`. The steady state for a constant
/// control `u` is `(u, 0)`.
#[derive(Debug, Clone, Default)]
pub struct VanDerPol;

impl VanDerPol {
    pub fn new() -> Self {
        VanDerPol
    }
}

impl Model for VanDerPol {
    fn state_dim(&self) -> usize {
        2
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn vector_field(&self, x: &DVector<f64>, u: &DVector<f64>, out: &mut DVector<f64>) {
        out[0] = x[1];
        out[1] = (1.0 - x[0] * x[0]) * x[1] - x[0] + u[0];
    }

    fn jacobians(&self, x: &DVector<f64>, _u: &DVector<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[0.0, 1.0, -2.0 * x[0] * x[1] - 1.0, 1.0 - x[0] * x[0]],
        );
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        Some((a, b))
    }

    fn control_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        (DVector::from_element(1, -1.0), DVector::from_element(1, 1.0))
    }

    fn name(&self) -> &str {
        "vdp"
    }
}

/// Two-motor plant emulator: a single inertia driven by two opposing motor
/// torques with viscous and smoothed Coulomb friction,
/// `x'' = -c1 x' - c2 tanh(c3 x') + k1 u1 - k2 u2`.
///
/// Bounds: `|u_i| <= 0.5` and `|x'| <= 5`.
#[derive(Debug, Clone)]
pub struct Ecp220 {
    k1: f64,
    k2: f64,
    c1: f64,
    c2: f64,
    c3: f64,
}

impl Default for Ecp220 {
    fn default() -> Self {
        Self::new()
    }
}

impl Ecp220 {
    pub fn new() -> Self {
        Ecp220 {
            k1: 34.51,
            k2: 34.13,
            c1: 1.46,
            c2: 2.53,
            c3: 5.0,
        }
    }
}

impl Model for Ecp220 {
    fn state_dim(&self) -> usize {
        2
    }

    fn control_dim(&self) -> usize {
        2
    }

    fn vector_field(&self, x: &DVector<f64>, u: &DVector<f64>, out: &mut DVector<f64>) {
        out[0] = x[1];
        out[1] = -self.c1 * x[1] - self.c2 * (self.c3 * x[1]).tanh() + self.k1 * u[0]
            - self.k2 * u[1];
    }

    fn jacobians(&self, x: &DVector<f64>, _u: &DVector<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let th = (self.c3 * x[1]).tanh();
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[0.0, 1.0, 0.0, -self.c1 - self.c2 * self.c3 * (1.0 - th * th)],
        );
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, self.k1, -self.k2]);
        Some((a, b))
    }

    fn control_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        (DVector::from_element(2, -0.5), DVector::from_element(2, 0.5))
    }

    fn state_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        (
            DVector::from_vec(vec![f64::NEG_INFINITY, -5.0]),
            DVector::from_vec(vec![f64::INFINITY, 5.0]),
        )
    }

    fn name(&self) -> &str {
        "ecp220"
    }
}

/// Double integrator `x'' = u` with `|u| <= 1`. Minimum transition times
/// have a closed form, which makes this the oracle plant for bang-bang
/// tests.
#[derive(Debug, Clone, Default)]
pub struct DoubleIntegrator;

impl DoubleIntegrator {
    pub fn new() -> Self {
        DoubleIntegrator
    }
}

impl Model for DoubleIntegrator {
    fn state_dim(&self) -> usize {
        2
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn vector_field(&self, x: &DVector<f64>, u: &DVector<f64>, out: &mut DVector<f64>) {
        out[0] = x[1];
        out[1] = u[0];
    }

    fn jacobians(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        Some((
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        ))
    }

    fn control_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        (DVector::from_element(1, -1.0), DVector::from_element(1, 1.0))
    }

    fn name(&self) -> &str {
        "double_integrator"
    }
}

/// Linear time-invariant model `x' = A x + B u` with configurable bounds.
#[derive(Debug, Clone)]
pub struct LinearModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    control_lower: DVector<f64>,
    control_upper: DVector<f64>,
    state_lower: DVector<f64>,
    state_upper: DVector<f64>,
}

impl LinearModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        assert_eq!(b.nrows(), a.nrows());
        let p = a.nrows();
        let q = b.ncols();
        LinearModel {
            a,
            b,
            control_lower: DVector::from_element(q, f64::NEG_INFINITY),
            control_upper: DVector::from_element(q, f64::INFINITY),
            state_lower: DVector::from_element(p, f64::NEG_INFINITY),
            state_upper: DVector::from_element(p, f64::INFINITY),
        }
    }

    pub fn with_control_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        assert_eq!(lower.len(), self.b.ncols());
        assert_eq!(upper.len(), self.b.ncols());
        self.control_lower = lower;
        self.control_upper = upper;
        self
    }

    pub fn with_state_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        assert_eq!(lower.len(), self.a.nrows());
        assert_eq!(upper.len(), self.a.nrows());
        self.state_lower = lower;
        self.state_upper = upper;
        self
    }
}

impl Model for LinearModel {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    fn vector_field(&self, x: &DVector<f64>, u: &DVector<f64>, out: &mut DVector<f64>) {
        out.copy_from(&(&self.a * x + &self.b * u));
    }

    fn jacobians(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        Some((self.a.clone(), self.b.clone()))
    }

    fn control_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        (self.control_lower.clone(), self.control_upper.clone())
    }

    fn state_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        (self.state_lower.clone(), self.state_upper.clone())
    }

    fn name(&self) -> &str {
        "linear"
    }
}

/// Looks up a built-in model by its configuration-file name.
pub fn model_by_name(name: &str) -> Option<Arc<dyn Model>> {
    match name {
        "vdp" => Some(Arc::new(VanDerPol::new())),
        "ecp220" => Some(Arc::new(Ecp220::new())),
        "double_integrator" => Some(Arc::new(DoubleIntegrator::new())),
        _ => None,
    }
}
