//! Direct transcription of the minimum-time problem as hypergraph NLPs.

pub mod edges;
mod graph;
mod grids;

pub use graph::{
    DerivativeOptions, Edge, EdgeFunction, EdgeKind, Evaluation, FnEdge, Hypergraph,
    SparsityPattern, Vertex, VertexKind,
};
pub use grids::{
    build_global_uniform, build_local_uniform, build_grid, shrink_and_warmstart, GridForm,
    GridSpec, TerminalSet,
};
