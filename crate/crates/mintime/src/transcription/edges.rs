//! Concrete edge terms used by the grid builders and baselines.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::graph::EdgeFunction;
use crate::dynamics::{Integrator, Model};
use crate::error::Result;

/// Deflection constraint `x_{k+1} - phi(dt, x_k, u_k) = 0`.
/// Input order: `[x_k, u_k, dt, x_{k+1}]`.
pub struct DynamicsEdge {
    pub model: Arc<dyn Model>,
    pub integrator: Integrator,
}

impl EdgeFunction for DynamicsEdge {
    fn dim(&self) -> usize {
        self.model.state_dim()
    }

    fn eval(&self, inputs: &[&[f64]], out: &mut [f64]) -> Result<()> {
        let x = DVector::from_column_slice(inputs[0]);
        let u = DVector::from_column_slice(inputs[1]);
        let dt = inputs[2][0];
        let next = self.integrator.step(self.model.as_ref(), &x, &u, dt)?;
        for (i, o) in out.iter_mut().enumerate() {
            *o = inputs[3][i] - next[i];
        }
        Ok(())
    }

    fn label(&self) -> &str {
        "dynamics"
    }
}

/// Linear time objective `weight * dt`; its squared form `weight * dt^2`
/// supplies the SQP Hessian entry `2 * weight` while the gradient of the
/// original linear term is kept.
pub struct TimeObjectiveEdge {
    pub weight: f64,
}

impl EdgeFunction for TimeObjectiveEdge {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, inputs: &[&[f64]], out: &mut [f64]) -> Result<()> {
        out[0] = self.weight * inputs[0][0];
        Ok(())
    }

    fn second_order(&self) -> bool {
        false
    }

    fn jacobian(&self, _inputs: &[&[f64]], blocks: &mut [DMatrix<f64>]) -> bool {
        blocks[0][(0, 0)] = self.weight;
        true
    }

    fn sqp_hessian(&self, _inputs: &[&[f64]]) -> Vec<(usize, usize, f64)> {
        vec![(0, 0, 2.0 * self.weight)]
    }

    fn label(&self) -> &str {
        "time_objective"
    }
}

/// Uniformity constraint `dt_k - dt_{k+1} = 0`.
pub struct UniformityEdge;

impl EdgeFunction for UniformityEdge {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, inputs: &[&[f64]], out: &mut [f64]) -> Result<()> {
        out[0] = inputs[0][0] - inputs[1][0];
        Ok(())
    }

    fn second_order(&self) -> bool {
        false
    }

    fn jacobian(&self, _inputs: &[&[f64]], blocks: &mut [DMatrix<f64>]) -> bool {
        blocks[0][(0, 0)] = 1.0;
        blocks[1][(0, 0)] = -1.0;
        true
    }

    fn label(&self) -> &str {
        "uniformity"
    }
}

/// Quadratic state error `scale * (x - target)' Q (x - target)` with
/// symmetric `Q`.
pub struct QuadraticStateCostEdge {
    pub target: DVector<f64>,
    pub weights: DMatrix<f64>,
    pub scale: f64,
}

impl EdgeFunction for QuadraticStateCostEdge {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, inputs: &[&[f64]], out: &mut [f64]) -> Result<()> {
        let e = DVector::from_column_slice(inputs[0]) - &self.target;
        out[0] = self.scale * (&self.weights * &e).dot(&e);
        Ok(())
    }

    fn jacobian(&self, inputs: &[&[f64]], blocks: &mut [DMatrix<f64>]) -> bool {
        let e = DVector::from_column_slice(inputs[0]) - &self.target;
        let g = 2.0 * self.scale * (&self.weights * e);
        for (j, v) in g.iter().enumerate() {
            blocks[0][(0, j)] = *v;
        }
        true
    }

    fn sqp_hessian(&self, _inputs: &[&[f64]]) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.weights.nrows() {
            for j in 0..self.weights.ncols() {
                let v = 2.0 * self.scale * self.weights[(i, j)];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    fn label(&self) -> &str {
        "quadratic_state_cost"
    }
}

/// Slack dominance rows `sign * w_i (x_i - target_i) - s_i <= 0` tying a
/// slack block to a weighted state deviation. Two of these (sign = +1 and
/// -1) make `s >= |W (x - target)|` elementwise.
/// Input order: `[x, s]`.
pub struct SlackDominanceEdge {
    pub target: DVector<f64>,
    pub weights: DVector<f64>,
    pub sign: f64,
}

impl EdgeFunction for SlackDominanceEdge {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn eval(&self, inputs: &[&[f64]], out: &mut [f64]) -> Result<()> {
        for i in 0..self.weights.len() {
            out[i] = self.sign * self.weights[i] * (inputs[0][i] - self.target[i]) - inputs[1][i];
        }
        Ok(())
    }

    fn second_order(&self) -> bool {
        false
    }

    fn jacobian(&self, _inputs: &[&[f64]], blocks: &mut [DMatrix<f64>]) -> bool {
        for i in 0..self.weights.len() {
            blocks[0][(i, i)] = self.sign * self.weights[i];
            blocks[1][(i, i)] = -1.0;
        }
        true
    }

    fn label(&self) -> &str {
        "slack_dominance"
    }
}

/// Linear objective `scale * sum_i w_i v_i` over one vertex block.
pub struct WeightedSumEdge {
    pub weights: DVector<f64>,
    pub scale: f64,
}

impl EdgeFunction for WeightedSumEdge {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, inputs: &[&[f64]], out: &mut [f64]) -> Result<()> {
        out[0] = self.scale
            * inputs[0]
                .iter()
                .zip(self.weights.iter())
                .map(|(v, w)| v * w)
                .sum::<f64>();
        Ok(())
    }

    fn second_order(&self) -> bool {
        false
    }

    fn jacobian(&self, _inputs: &[&[f64]], blocks: &mut [DMatrix<f64>]) -> bool {
        for (j, w) in self.weights.iter().enumerate() {
            blocks[0][(0, j)] = self.scale * w;
        }
        true
    }

    fn label(&self) -> &str {
        "weighted_sum"
    }
}
