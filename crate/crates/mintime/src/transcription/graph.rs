//! Hypergraph representation of a sparse nonlinear program.
//!
//! Vertices are optimization parameters (state, control or interval-length
//! blocks); hyperedges are cost or constraint terms connected to exactly
//! the vertices their residual depends on. Jacobian and Hessian sparsity
//! patterns follow directly from the edge connectivity, so no coloring
//! pass is needed, and derivatives are filled by per-edge finite
//! differences into the structural nonzeros only.

use nalgebra::{DMatrix, DVector};
use serde_json::json;

use crate::error::{Error, Result};
use crate::solver::sparse::CscMatrix;

/// Role of a vertex in the transcribed problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    /// State at grid point `k`.
    State(usize),
    /// Control on interval `k`.
    Control(usize),
    /// Interval length; the global form has a single `Dt(0)`.
    Dt(usize),
    /// Auxiliary parameters (e.g. slack blocks of the l1 baseline).
    Slack(usize),
}

impl VertexKind {
    fn label(&self) -> String {
        match self {
            VertexKind::State(k) => format!("x{k}"),
            VertexKind::Control(k) => format!("u{k}"),
            VertexKind::Dt(k) => format!("dt{k}"),
            VertexKind::Slack(k) => format!("s{k}"),
        }
    }
}

/// An optimization parameter block with box bounds. Fixed vertices keep
/// their value and contribute no columns to the parameter vector.
#[derive(Debug, Clone)]
pub struct Vertex {
    pub kind: VertexKind,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub fixed: bool,
    pub value: DVector<f64>,
}

impl Vertex {
    pub fn new(kind: VertexKind, dim: usize) -> Self {
        Vertex {
            kind,
            lower: DVector::from_element(dim, f64::NEG_INFINITY),
            upper: DVector::from_element(dim, f64::INFINITY),
            fixed: false,
            value: DVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.value.len()
    }

    pub fn with_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        assert_eq!(lower.len(), self.dim());
        assert_eq!(upper.len(), self.dim());
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_value(mut self, value: DVector<f64>) -> Self {
        assert_eq!(value.len(), self.dim());
        self.value = value;
        self
    }

    pub fn fixed(mut self) -> Self {
        self.fixed = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Objective,
    /// Residual must equal zero.
    Equality,
    /// Residual must be non-positive.
    Inequality,
}

/// Residual term attached to a set of vertices.
///
/// `inputs` passes the connected vertices' values in connection order.
pub trait EdgeFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, inputs: &[&[f64]], out: &mut [f64]) -> Result<()>;

    /// Whether the residual is nonlinear in the connected parameters.
    /// Only second-order edges contribute vertex-pair blocks to the
    /// Hessian pattern; linear terms have no curvature.
    fn second_order(&self) -> bool {
        true
    }

    /// Fills analytic Jacobian blocks (one `dim x vertex_dim` matrix per
    /// connected vertex) and returns `true`, or returns `false` to request
    /// finite differences.
    fn jacobian(&self, _inputs: &[&[f64]], _blocks: &mut [DMatrix<f64>]) -> bool {
        false
    }

    /// Hessian contribution of an objective edge for the SQP step, as
    /// triplets over the edge-local scalar indices (concatenated vertex
    /// blocks). The minimum-time edges return the curvature of their
    /// squared form here.
    fn sqp_hessian(&self, _inputs: &[&[f64]]) -> Vec<(usize, usize, f64)> {
        Vec::new()
    }

    fn label(&self) -> &str {
        "edge"
    }
}

pub struct Edge {
    pub kind: EdgeKind,
    pub vertices: Vec<usize>,
    pub func: Box<dyn EdgeFunction>,
}

/// Sparsity pattern as a sorted set of (row, col) index pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize)>,
}

impl SparsityPattern {
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.entries.binary_search(&(row, col)).is_ok()
    }

    /// Number of structural nonzeros in one column.
    pub fn column_count(&self, col: usize) -> usize {
        self.entries.iter().filter(|&&(_, c)| c == col).count()
    }
}

/// Value/derivative bundle returned by [`Hypergraph::eval_derivatives`].
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objective: f64,
    pub objective_gradient: Vec<f64>,
    pub eq_residuals: Vec<f64>,
    pub ineq_residuals: Vec<f64>,
    pub eq_jacobian: CscMatrix,
    pub ineq_jacobian: CscMatrix,
    /// (edge index, first row, dimension) per equality edge, in edge order.
    pub eq_rows: Vec<(usize, usize, usize)>,
    pub ineq_rows: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone, Copy)]
pub struct DerivativeOptions {
    /// Forward-difference step for residual Jacobians.
    pub fd_step: f64,
    /// Use central differences (twice as many evaluations, for ill-scaled
    /// problems).
    pub central: bool,
}

impl Default for DerivativeOptions {
    fn default() -> Self {
        DerivativeOptions {
            fd_step: 1e-9,
            central: false,
        }
    }
}

/// Sparse NLP as vertices plus hyperedges.
#[derive(Default)]
pub struct Hypergraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    col_offsets: Vec<Option<usize>>,
    n_free: usize,
    pub(crate) grid: Option<super::grids::GridSpec>,
}

impl Hypergraph {
    pub fn new() -> Self {
        Hypergraph::default()
    }

    pub fn add_vertex(&mut self, vertex: Vertex) -> usize {
        self.vertices.push(vertex);
        self.reindex();
        self.vertices.len() - 1
    }

    pub fn add_edge(&mut self, kind: EdgeKind, vertices: Vec<usize>, func: Box<dyn EdgeFunction>) -> usize {
        for &v in &vertices {
            assert!(v < self.vertices.len(), "edge references unknown vertex");
        }
        if kind == EdgeKind::Objective {
            assert_eq!(func.dim(), 1, "objective edges are scalar");
        }
        self.edges.push(Edge {
            kind,
            vertices,
            func,
        });
        self.edges.len() - 1
    }

    fn reindex(&mut self) {
        self.col_offsets.clear();
        let mut offset = 0;
        for v in &self.vertices {
            if v.fixed {
                self.col_offsets.push(None);
            } else {
                self.col_offsets.push(Some(offset));
                offset += v.dim();
            }
        }
        self.n_free = offset;
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_mut(&mut self, id: usize) -> &mut Vertex {
        &mut self.vertices[id]
    }

    /// Column offset of a free vertex in the parameter vector.
    pub fn column_of(&self, vertex: usize) -> Option<usize> {
        self.col_offsets[vertex]
    }

    pub fn free_param_count(&self) -> usize {
        self.n_free
    }

    /// Current values of all free scalars, in vertex order.
    pub fn pack_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_free);
        for v in &self.vertices {
            if !v.fixed {
                out.extend(v.value.iter());
            }
        }
        out
    }

    /// Writes a parameter vector back into the vertex values.
    pub fn set_values(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.n_free);
        for (i, v) in self.vertices.iter_mut().enumerate() {
            if let Some(off) = self.col_offsets[i] {
                for d in 0..v.value.len() {
                    v.value[d] = params[off + d];
                }
            }
        }
    }

    /// Vertex kind of every free scalar, in column order.
    pub fn column_kinds(&self) -> Vec<VertexKind> {
        let mut kinds = Vec::with_capacity(self.n_free);
        for v in &self.vertices {
            if !v.fixed {
                kinds.extend(std::iter::repeat(v.kind).take(v.dim()));
            }
        }
        kinds
    }

    /// Elementwise bounds of the free parameter vector.
    pub fn free_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lower = Vec::with_capacity(self.n_free);
        let mut upper = Vec::with_capacity(self.n_free);
        for v in &self.vertices {
            if !v.fixed {
                lower.extend(v.lower.iter());
                upper.extend(v.upper.iter());
            }
        }
        (lower, upper)
    }

    /// Value slice of a vertex under a given parameter vector (fixed
    /// vertices yield their stored value).
    fn vertex_values<'a>(&'a self, id: usize, params: &'a [f64]) -> &'a [f64] {
        match self.col_offsets[id] {
            Some(off) => &params[off..off + self.vertices[id].dim()],
            None => self.vertices[id].value.as_slice(),
        }
    }

    fn edge_inputs<'a>(&'a self, edge: &Edge, params: &'a [f64]) -> Vec<&'a [f64]> {
        edge.vertices
            .iter()
            .map(|&v| self.vertex_values(v, params))
            .collect()
    }

    /// Structural sparsity of the constraint Jacobian (rows: equality then
    /// inequality edges in insertion order) and of the Hessian of the
    /// Lagrangian (vertex-pair blocks of second-order edges plus the
    /// diagonal).
    pub fn derive_sparsity(&self) -> (SparsityPattern, SparsityPattern) {
        let mut jac_entries = Vec::new();
        let mut row = 0;
        for pass_kind in [EdgeKind::Equality, EdgeKind::Inequality] {
            for edge in self.edges.iter().filter(|e| e.kind == pass_kind) {
                let dim = edge.func.dim();
                for r in 0..dim {
                    for &v in &edge.vertices {
                        if let Some(off) = self.col_offsets[v] {
                            for d in 0..self.vertices[v].dim() {
                                jac_entries.push((row + r, off + d));
                            }
                        }
                    }
                }
                row += dim;
            }
        }
        jac_entries.sort_unstable();
        jac_entries.dedup();

        let mut hess_entries = Vec::new();
        for k in 0..self.n_free {
            hess_entries.push((k, k));
        }
        for edge in &self.edges {
            if !edge.func.second_order() {
                continue;
            }
            let mut cols = Vec::new();
            for &v in &edge.vertices {
                if let Some(off) = self.col_offsets[v] {
                    for d in 0..self.vertices[v].dim() {
                        cols.push(off + d);
                    }
                }
            }
            for &a in &cols {
                for &b in &cols {
                    hess_entries.push((a, b));
                }
            }
        }
        hess_entries.sort_unstable();
        hess_entries.dedup();

        (
            SparsityPattern {
                nrows: row,
                ncols: self.n_free,
                entries: jac_entries,
            },
            SparsityPattern {
                nrows: self.n_free,
                ncols: self.n_free,
                entries: hess_entries,
            },
        )
    }

    /// Objective value and gradient, stacked constraint residuals and
    /// sparse Jacobians at the given parameter vector. Derivatives are
    /// per-edge forward differences (or analytic where an edge provides
    /// them) written only into structural nonzeros.
    pub fn eval_derivatives(&self, params: &[f64], opts: &DerivativeOptions) -> Result<Evaluation> {
        assert_eq!(params.len(), self.n_free);
        let mut objective = 0.0;
        let mut gradient = vec![0.0; self.n_free];
        let mut eq_residuals = Vec::new();
        let mut ineq_residuals = Vec::new();
        let mut eq_triplets = Vec::new();
        let mut ineq_triplets = Vec::new();
        let mut eq_rows = Vec::new();
        let mut ineq_rows = Vec::new();

        let mut scratch = params.to_vec();
        for (edge_id, edge) in self.edges.iter().enumerate() {
            let dim = edge.func.dim();
            let mut value = vec![0.0; dim];
            {
                let inputs = self.edge_inputs(edge, params);
                edge.func
                    .eval(&inputs, &mut value)
                    .map_err(|_| Error::EdgeEvaluation { edge: edge_id })?;
            }
            if value.iter().any(|v| !v.is_finite()) {
                return Err(Error::EdgeEvaluation { edge: edge_id });
            }

            // derivative blocks, one per connected vertex
            let mut blocks: Vec<DMatrix<f64>> = edge
                .vertices
                .iter()
                .map(|&v| DMatrix::zeros(dim, self.vertices[v].dim()))
                .collect();
            let analytic = {
                let inputs = self.edge_inputs(edge, params);
                edge.func.jacobian(&inputs, &mut blocks)
            };
            if !analytic {
                let h = opts.fd_step;
                let mut perturbed = vec![0.0; dim];
                let mut perturbed_lo = vec![0.0; dim];
                for (slot, &v) in edge.vertices.iter().enumerate() {
                    let Some(off) = self.col_offsets[v] else {
                        continue;
                    };
                    for d in 0..self.vertices[v].dim() {
                        let idx = off + d;
                        let old = scratch[idx];
                        scratch[idx] = old + h;
                        {
                            let inputs = self.edge_inputs(edge, &scratch);
                            edge.func
                                .eval(&inputs, &mut perturbed)
                                .map_err(|_| Error::EdgeEvaluation { edge: edge_id })?;
                        }
                        if opts.central {
                            scratch[idx] = old - h;
                            let inputs = self.edge_inputs(edge, &scratch);
                            edge.func
                                .eval(&inputs, &mut perturbed_lo)
                                .map_err(|_| Error::EdgeEvaluation { edge: edge_id })?;
                            for r in 0..dim {
                                blocks[slot][(r, d)] = (perturbed[r] - perturbed_lo[r]) / (2.0 * h);
                            }
                        } else {
                            for r in 0..dim {
                                blocks[slot][(r, d)] = (perturbed[r] - value[r]) / h;
                            }
                        }
                        scratch[idx] = old;
                    }
                }
            }

            match edge.kind {
                EdgeKind::Objective => {
                    objective += value[0];
                    for (slot, &v) in edge.vertices.iter().enumerate() {
                        if let Some(off) = self.col_offsets[v] {
                            for d in 0..self.vertices[v].dim() {
                                gradient[off + d] += blocks[slot][(0, d)];
                            }
                        }
                    }
                }
                EdgeKind::Equality | EdgeKind::Inequality => {
                    let (residuals, triplets, rows) = if edge.kind == EdgeKind::Equality {
                        (&mut eq_residuals, &mut eq_triplets, &mut eq_rows)
                    } else {
                        (&mut ineq_residuals, &mut ineq_triplets, &mut ineq_rows)
                    };
                    let row0 = residuals.len();
                    rows.push((edge_id, row0, dim));
                    residuals.extend_from_slice(&value);
                    for (slot, &v) in edge.vertices.iter().enumerate() {
                        if let Some(off) = self.col_offsets[v] {
                            for d in 0..self.vertices[v].dim() {
                                for r in 0..dim {
                                    triplets.push((row0 + r, off + d, blocks[slot][(r, d)]));
                                }
                            }
                        }
                    }
                }
            }
        }

        Ok(Evaluation {
            objective,
            objective_gradient: gradient,
            eq_jacobian: CscMatrix::from_triplets(eq_residuals.len(), self.n_free, &eq_triplets),
            ineq_jacobian: CscMatrix::from_triplets(
                ineq_residuals.len(),
                self.n_free,
                &ineq_triplets,
            ),
            eq_residuals,
            ineq_residuals,
            eq_rows,
            ineq_rows,
        })
    }

    /// Objective value and stacked constraint residuals only; the cheap
    /// path for line searches.
    pub fn eval_residuals(&self, params: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        assert_eq!(params.len(), self.n_free);
        let mut objective = 0.0;
        let mut eq = Vec::new();
        let mut ineq = Vec::new();
        for (edge_id, edge) in self.edges.iter().enumerate() {
            let mut value = vec![0.0; edge.func.dim()];
            let inputs = self.edge_inputs(edge, params);
            edge.func
                .eval(&inputs, &mut value)
                .map_err(|_| Error::EdgeEvaluation { edge: edge_id })?;
            if value.iter().any(|v| !v.is_finite()) {
                return Err(Error::EdgeEvaluation { edge: edge_id });
            }
            match edge.kind {
                EdgeKind::Objective => objective += value[0],
                EdgeKind::Equality => eq.extend_from_slice(&value),
                EdgeKind::Inequality => ineq.extend_from_slice(&value),
            }
        }
        Ok((objective, eq, ineq))
    }

    /// First vertex with the given kind.
    pub fn find_vertex(&self, kind: VertexKind) -> Option<usize> {
        self.vertices.iter().position(|v| v.kind == kind)
    }

    /// The grid recipe when this graph was produced by one of the grid
    /// builders.
    pub fn grid_spec(&self) -> Option<&super::grids::GridSpec> {
        self.grid.as_ref()
    }

    /// States, controls and interval lengths encoded by a parameter vector
    /// (fixed vertices contribute their stored values). The single shared
    /// interval length of the global form is replicated per interval.
    pub fn trajectory_values(
        &self,
        params: &[f64],
    ) -> (Vec<DVector<f64>>, Vec<DVector<f64>>, Vec<f64>) {
        let mut states: Vec<(usize, DVector<f64>)> = Vec::new();
        let mut controls: Vec<(usize, DVector<f64>)> = Vec::new();
        let mut dts: Vec<(usize, f64)> = Vec::new();
        for (id, v) in self.vertices.iter().enumerate() {
            let vals = DVector::from_column_slice(self.vertex_values(id, params));
            match v.kind {
                VertexKind::State(k) => states.push((k, vals)),
                VertexKind::Control(k) => controls.push((k, vals)),
                VertexKind::Dt(k) => dts.push((k, vals[0])),
                VertexKind::Slack(_) => {}
            }
        }
        states.sort_by_key(|&(k, _)| k);
        controls.sort_by_key(|&(k, _)| k);
        dts.sort_by_key(|&(k, _)| k);
        let n = controls.len();
        let mut dt_values: Vec<f64> = dts.into_iter().map(|(_, v)| v).collect();
        if dt_values.len() == 1 && n > 1 {
            dt_values = vec![dt_values[0]; n];
        }
        (
            states.into_iter().map(|(_, v)| v).collect(),
            controls.into_iter().map(|(_, v)| v).collect(),
            dt_values,
        )
    }

    /// SQP objective Hessian: the per-edge squared-form curvature plus a
    /// ridge on the diagonal, over free scalars.
    pub fn sqp_hessian(&self, params: &[f64], ridge: f64) -> CscMatrix {
        let mut triplets = Vec::new();
        for j in 0..self.n_free {
            triplets.push((j, j, ridge));
        }
        for edge in &self.edges {
            if edge.kind != EdgeKind::Objective {
                continue;
            }
            let inputs = self.edge_inputs(edge, params);
            let local = edge.func.sqp_hessian(&inputs);
            if local.is_empty() {
                continue;
            }
            // map edge-local scalar indices (concatenated vertex blocks,
            // fixed vertices included in the local numbering) to columns
            let mut map = Vec::new();
            for &v in &edge.vertices {
                for d in 0..self.vertices[v].dim() {
                    map.push(self.col_offsets[v].map(|off| off + d));
                }
            }
            for (li, lj, val) in local {
                if let (Some(gi), Some(gj)) = (map[li], map[lj]) {
                    triplets.push((gi, gj, val));
                }
            }
        }
        CscMatrix::from_triplets(self.n_free, self.n_free, &triplets)
    }

    /// Debug dump: vertices with kind, dimension, bounds and fixed flag,
    /// edges with kind and connected vertex ids.
    pub fn to_json(&self) -> serde_json::Value {
        let vertices: Vec<_> = self
            .vertices
            .iter()
            .map(|v| {
                json!({
                    "kind": v.kind.label(),
                    "dim": v.dim(),
                    "lower": v.lower.as_slice(),
                    "upper": v.upper.as_slice(),
                    "fixed": v.fixed,
                })
            })
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|e| {
                json!({
                    "kind": match e.kind {
                        EdgeKind::Objective => "objective",
                        EdgeKind::Equality => "equality",
                        EdgeKind::Inequality => "inequality",
                    },
                    "label": e.func.label(),
                    "dim": e.func.dim(),
                    "vertices": e.vertices,
                })
            })
            .collect();
        json!({ "vertices": vertices, "edges": edges })
    }
}

/// Closure-backed edge, mostly for tests and small custom terms.
pub struct FnEdge<F> {
    dim: usize,
    second_order: bool,
    f: F,
}

impl<F> FnEdge<F>
where
    F: Fn(&[&[f64]], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, second_order: bool, f: F) -> Self {
        FnEdge {
            dim,
            second_order,
            f,
        }
    }
}

impl<F> EdgeFunction for FnEdge<F>
where
    F: Fn(&[&[f64]], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, inputs: &[&[f64]], out: &mut [f64]) -> Result<()> {
        (self.f)(inputs, out);
        Ok(())
    }

    fn second_order(&self) -> bool {
        self.second_order
    }

    fn label(&self) -> &str {
        "fn"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn scalar_vertex(value: f64) -> Vertex {
        Vertex::new(VertexKind::Slack(0), 1).with_value(dvector![value])
    }

    #[test]
    fn fd_jacobian_of_square_edge() {
        let mut g = Hypergraph::new();
        let v = g.add_vertex(scalar_vertex(3.0));
        g.add_edge(
            EdgeKind::Equality,
            vec![v],
            Box::new(FnEdge::new(1, true, |inp: &[&[f64]], out: &mut [f64]| {
                out[0] = inp[0][0] * inp[0][0];
            })),
        );
        let eval = g
            .eval_derivatives(&g.pack_values(), &DerivativeOptions::default())
            .unwrap();
        assert_eq!(eval.eq_residuals, vec![9.0]);
        let (rows, vals) = eval.eq_jacobian.col(0);
        assert_eq!(rows, &[0]);
        assert!((vals[0] - 6.0).abs() < 1e-5);
    }

    #[test]
    fn unconnected_parameters_do_not_affect_edges() {
        let mut g = Hypergraph::new();
        let a = g.add_vertex(scalar_vertex(1.0));
        let _b = g.add_vertex(scalar_vertex(2.0));
        g.add_edge(
            EdgeKind::Equality,
            vec![a],
            Box::new(FnEdge::new(1, true, |inp: &[&[f64]], out: &mut [f64]| {
                out[0] = inp[0][0].sin();
            })),
        );
        let base = g
            .eval_derivatives(&[1.0, 2.0], &DerivativeOptions::default())
            .unwrap();
        let moved = g
            .eval_derivatives(&[1.0, -77.0], &DerivativeOptions::default())
            .unwrap();
        assert_eq!(base.eq_residuals[0].to_bits(), moved.eq_residuals[0].to_bits());
    }

    #[test]
    fn disjoint_edges_give_block_diagonal_hessian() {
        let mut g = Hypergraph::new();
        let a = g.add_vertex(Vertex::new(VertexKind::State(0), 2));
        let b = g.add_vertex(Vertex::new(VertexKind::State(1), 2));
        let sq = |inp: &[&[f64]], out: &mut [f64]| {
            out[0] = inp[0][0] * inp[0][1];
        };
        g.add_edge(EdgeKind::Equality, vec![a], Box::new(FnEdge::new(1, true, sq)));
        g.add_edge(EdgeKind::Equality, vec![b], Box::new(FnEdge::new(1, true, sq)));
        let (_, hess) = g.derive_sparsity();
        for (r, c) in hess.entries {
            // no coupling across the two blocks
            assert_eq!(r / 2, c / 2);
        }
    }

    #[test]
    fn fixed_vertices_have_no_columns() {
        let mut g = Hypergraph::new();
        let a = g.add_vertex(scalar_vertex(1.0).fixed());
        let b = g.add_vertex(scalar_vertex(2.0));
        assert_eq!(g.free_param_count(), 1);
        assert_eq!(g.column_of(a), None);
        assert_eq!(g.column_of(b), Some(0));
        assert_eq!(g.pack_values(), vec![2.0]);
    }
}
