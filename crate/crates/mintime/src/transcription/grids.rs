//! The two variable-discretization grid forms of the minimum-time problem.
//!
//! Both transcribe
//!
//! ```text
//! min t_f   s.t.  x_0 = x_s,  x_N in X_f,  x_{k+1} = phi(dt, x_k, u_k),
//!                 u_k in U,  x_k in X,  dt in [dt_min, dt_max]
//! ```
//!
//! with `t_f = N dt`. The *global* form shares one `dt` parameter across
//! all intervals (its column is structurally dense); the *local* form
//! carries one `dt_k` per interval tied by uniformity equalities, which is
//! larger but sparser.

use std::sync::Arc;

use nalgebra::DVector;

use super::edges::{DynamicsEdge, TimeObjectiveEdge, UniformityEdge};
use super::graph::{EdgeKind, Hypergraph, Vertex, VertexKind};
use crate::dynamics::{Integrator, Model};
use crate::error::{Error, Result};
use crate::solver::sqp::NlpSolution;

/// Target set for the final grid state.
#[derive(Debug, Clone)]
pub enum TerminalSet {
    /// Terminal equality `x_N = x_f`, realized by fixing the vertex.
    Point(DVector<f64>),
    /// Axis-aligned box around a center, realized as bounds on `x_N`.
    Box {
        center: DVector<f64>,
        half_widths: DVector<f64>,
    },
}

impl TerminalSet {
    pub fn center(&self) -> &DVector<f64> {
        match self {
            TerminalSet::Point(x) => x,
            TerminalSet::Box { center, .. } => center,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridForm {
    Global,
    Local,
}

/// Everything needed to rebuild a grid NLP, kept on the graph so that it
/// can be resized online.
#[derive(Clone)]
pub struct GridSpec {
    pub model: Arc<dyn Model>,
    pub integrator: Integrator,
    pub x_start: DVector<f64>,
    pub terminal: TerminalSet,
    pub n: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    pub form: GridForm,
}

impl std::fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridSpec")
            .field("model", &self.model.name())
            .field("n", &self.n)
            .field("dt_min", &self.dt_min)
            .field("dt_max", &self.dt_max)
            .field("form", &self.form)
            .finish()
    }
}

/// Builds the shared-`dt` form.
pub fn build_global_uniform(
    model: Arc<dyn Model>,
    integrator: Integrator,
    x_s: &DVector<f64>,
    terminal: &TerminalSet,
    n: usize,
    dt_min: f64,
    dt_max: f64,
) -> Result<Hypergraph> {
    build_grid(GridSpec {
        model,
        integrator,
        x_start: x_s.clone(),
        terminal: terminal.clone(),
        n,
        dt_min,
        dt_max,
        form: GridForm::Global,
    })
}

/// Builds the per-interval `dt_k` form with uniformity equalities.
pub fn build_local_uniform(
    model: Arc<dyn Model>,
    integrator: Integrator,
    x_s: &DVector<f64>,
    terminal: &TerminalSet,
    n: usize,
    dt_min: f64,
    dt_max: f64,
) -> Result<Hypergraph> {
    build_grid(GridSpec {
        model,
        integrator,
        x_start: x_s.clone(),
        terminal: terminal.clone(),
        n,
        dt_min,
        dt_max,
        form: GridForm::Local,
    })
}

pub fn build_grid(spec: GridSpec) -> Result<Hypergraph> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::InvalidArgument("grid size N must be >= 1".into()));
    }
    if !(spec.dt_min >= 0.0 && spec.dt_min <= spec.dt_max && spec.dt_max.is_finite()) {
        return Err(Error::InvalidArgument(
            "interval bounds must satisfy 0 <= dt_min <= dt_max < inf".into(),
        ));
    }
    let p = spec.model.state_dim();
    let q = spec.model.control_dim();
    if spec.x_start.len() != p {
        return Err(Error::DimensionMismatch {
            context: "grid start state",
            expected: p,
            actual: spec.x_start.len(),
        });
    }
    if spec.terminal.center().len() != p {
        return Err(Error::DimensionMismatch {
            context: "grid terminal state",
            expected: p,
            actual: spec.terminal.center().len(),
        });
    }
    let (u_lo, u_hi) = spec.model.control_bounds();
    let (x_lo, x_hi) = spec.model.state_bounds();
    let target = spec.terminal.center().clone();
    let dt_init = (0.5 * (spec.dt_min + spec.dt_max)).max(spec.dt_min);
    let u_init = DVector::from_fn(q, |i, _| u_lo[i].max(0.0).min(u_hi[i]));

    let mut g = Hypergraph::new();
    let x0 = g.add_vertex(
        Vertex::new(VertexKind::State(0), p)
            .with_value(spec.x_start.clone())
            .fixed(),
    );

    // interleaved vertex order: u_0 [, dt_0], x_1, u_1 [, dt_1], x_2, ...
    let mut state_ids = vec![x0];
    let mut control_ids = Vec::with_capacity(n);
    let mut dt_ids = Vec::new();
    for k in 0..n {
        control_ids.push(g.add_vertex(
            Vertex::new(VertexKind::Control(k), q)
                .with_bounds(u_lo.clone(), u_hi.clone())
                .with_value(u_init.clone()),
        ));
        if spec.form == GridForm::Local {
            // the uniformity equalities already tie every dt_k to dt_0;
            // repeating the box on each keeps intermediate iterates sane
            // without changing the feasible set
            dt_ids.push(g.add_vertex(
                Vertex::new(VertexKind::Dt(k), 1)
                    .with_bounds(
                        DVector::from_element(1, spec.dt_min),
                        DVector::from_element(1, spec.dt_max),
                    )
                    .with_value(DVector::from_element(1, dt_init)),
            ));
        }
        // linear interpolation from x_s to the target center
        let frac = (k + 1) as f64 / n as f64;
        let interp = &spec.x_start + frac * (&target - &spec.x_start);
        let vertex = if k + 1 == n {
            match &spec.terminal {
                TerminalSet::Point(xf) => Vertex::new(VertexKind::State(n), p)
                    .with_value(xf.clone())
                    .fixed(),
                TerminalSet::Box {
                    center,
                    half_widths,
                } => {
                    let lo = DVector::from_fn(p, |i, _| (center[i] - half_widths[i]).max(x_lo[i]));
                    let hi = DVector::from_fn(p, |i, _| (center[i] + half_widths[i]).min(x_hi[i]));
                    let init = DVector::from_fn(p, |i, _| interp[i].clamp(lo[i], hi[i]));
                    Vertex::new(VertexKind::State(n), p)
                        .with_bounds(lo, hi)
                        .with_value(init)
                }
            }
        } else {
            Vertex::new(VertexKind::State(k + 1), p)
                .with_bounds(x_lo.clone(), x_hi.clone())
                .with_value(interp)
        };
        state_ids.push(g.add_vertex(vertex));
    }
    if spec.form == GridForm::Global {
        dt_ids.push(
            g.add_vertex(
                Vertex::new(VertexKind::Dt(0), 1)
                    .with_bounds(
                        DVector::from_element(1, spec.dt_min),
                        DVector::from_element(1, spec.dt_max),
                    )
                    .with_value(DVector::from_element(1, dt_init)),
            ),
        );
    }

    for k in 0..n {
        let dt_id = match spec.form {
            GridForm::Global => dt_ids[0],
            GridForm::Local => dt_ids[k],
        };
        g.add_edge(
            EdgeKind::Equality,
            vec![state_ids[k], control_ids[k], dt_id, state_ids[k + 1]],
            Box::new(DynamicsEdge {
                model: Arc::clone(&spec.model),
                integrator: spec.integrator,
            }),
        );
    }
    match spec.form {
        GridForm::Global => {
            g.add_edge(
                EdgeKind::Objective,
                vec![dt_ids[0]],
                Box::new(TimeObjectiveEdge { weight: n as f64 }),
            );
        }
        GridForm::Local => {
            for &dt_id in &dt_ids {
                g.add_edge(
                    EdgeKind::Objective,
                    vec![dt_id],
                    Box::new(TimeObjectiveEdge { weight: 1.0 }),
                );
            }
            for k in 0..n.saturating_sub(1) {
                g.add_edge(
                    EdgeKind::Equality,
                    vec![dt_ids[k], dt_ids[k + 1]],
                    Box::new(UniformityEdge),
                );
            }
        }
    }
    g.grid = Some(spec);
    Ok(g)
}

/// Rebuilds the grid for a new start state and grid size (`prev N` or
/// `prev N - 1`) and initializes the parameters from the tail of a previous
/// solution: when shrinking, the first interval is dropped and the
/// interval length is kept.
pub fn shrink_and_warmstart(
    graph: &Hypergraph,
    prev: &NlpSolution,
    new_x_s: &DVector<f64>,
    new_n: usize,
) -> Result<Hypergraph> {
    let spec = graph
        .grid_spec()
        .ok_or_else(|| Error::InvalidArgument("graph carries no grid recipe".into()))?;
    if new_n < 1 {
        return Err(Error::InvalidArgument("grid size must be >= 1".into()));
    }
    if new_n != spec.n && new_n + 1 != spec.n {
        return Err(Error::InvalidArgument(format!(
            "resize must keep N or shrink by one (N = {}, requested {})",
            spec.n, new_n
        )));
    }
    let mut new_spec = spec.clone();
    new_spec.x_start = new_x_s.clone();
    new_spec.n = new_n;
    let mut g = build_grid(new_spec)?;
    let shift = spec.n - new_n;
    for k in 1..=new_n {
        if let Some(id) = g.find_vertex(VertexKind::State(k)) {
            if !g.vertices()[id].fixed {
                let src = &prev.states[k + shift];
                g.vertex_mut(id).value.copy_from(src);
            }
        }
    }
    for k in 0..new_n {
        if let Some(id) = g.find_vertex(VertexKind::Control(k)) {
            g.vertex_mut(id).value.copy_from(&prev.controls[k + shift]);
        }
    }
    match spec.form {
        GridForm::Global => {
            let id = g.find_vertex(VertexKind::Dt(0)).unwrap();
            g.vertex_mut(id).value[0] = prev.dts[0];
        }
        GridForm::Local => {
            for k in 0..new_n {
                let id = g.find_vertex(VertexKind::Dt(k)).unwrap();
                g.vertex_mut(id).value[0] = prev.dts[k + shift];
            }
        }
    }
    Ok(g)
}
