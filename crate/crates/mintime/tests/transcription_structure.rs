//! Structural checks of the transcribed NLPs: parameter counts, published
//! sparsity patterns, topology dumps and resize bookkeeping.

use std::sync::Arc;

use mintime::dynamics::{Integrator, Scheme, VanDerPol};
use mintime::transcription::{
    build_global_uniform, build_local_uniform, DerivativeOptions, EdgeKind, Hypergraph,
    TerminalSet, VertexKind,
};
use nalgebra::dvector;

fn vdp_graph(form_local: bool, n: usize) -> Hypergraph {
    let model = Arc::new(VanDerPol::new());
    let integ = Integrator::new(Scheme::ForwardEuler);
    let x_s = dvector![0.0, 0.0];
    let terminal = TerminalSet::Point(dvector![0.8, 0.0]);
    if form_local {
        build_local_uniform(model, integ, &x_s, &terminal, n, 1e-3, 1.0).unwrap()
    } else {
        build_global_uniform(model, integ, &x_s, &terminal, n, 1e-3, 1.0).unwrap()
    }
}

fn load_pattern(name: &str) -> Vec<(usize, usize)> {
    let text = std::fs::read_to_string(format!(
        "{}/tests/fixtures/{}",
        env!("CARGO_MANIFEST_DIR"),
        name
    ))
    .unwrap();
    let mut out: Vec<(usize, usize)> = text
        .lines()
        .map(|l| {
            let mut it = l.split_whitespace().map(|v| v.parse::<usize>().unwrap());
            // published plots are 1-based
            (it.next().unwrap() - 1, it.next().unwrap() - 1)
        })
        .collect();
    out.sort_unstable();
    out
}

#[test]
fn global_grid_free_parameter_count() {
    // N=10, p=2, q=1, point target: 18 states + 10 controls + 1 dt
    let g = vdp_graph(false, 10);
    assert_eq!(g.free_param_count(), 29);
}

#[test]
fn local_grid_free_parameter_count() {
    let g = vdp_graph(true, 10);
    assert_eq!(g.free_param_count(), 38);
}

#[test]
fn single_interval_point_target_has_q_plus_one_parameters() {
    let g = vdp_graph(false, 1);
    assert_eq!(g.free_param_count(), 2);
}

#[test]
fn global_hessian_pattern_matches_published_figure() {
    let g = vdp_graph(false, 10);
    let (_, hess) = g.derive_sparsity();
    assert_eq!(hess.nnz(), 239);
    assert_eq!(hess.entries, load_pattern("hessian_pattern_global.txt"));
}

#[test]
fn local_hessian_pattern_matches_published_figure() {
    let g = vdp_graph(true, 10);
    let (_, hess) = g.derive_sparsity();
    assert_eq!(hess.nnz(), 284);
    assert_eq!(hess.entries, load_pattern("hessian_pattern_local.txt"));
}

#[test]
fn local_grid_is_sparser_than_global() {
    let g = vdp_graph(false, 10);
    let l = vdp_graph(true, 10);
    let (_, hg) = g.derive_sparsity();
    let (_, hl) = l.derive_sparsity();
    let density_global = hg.nnz() as f64 / (29.0 * 29.0);
    let density_local = hl.nnz() as f64 / (38.0 * 38.0);
    assert!((density_global - 0.28).abs() < 0.005);
    assert!((density_local - 0.20).abs() < 0.005);
    assert!(density_local < density_global);
}

#[test]
fn global_dt_column_is_dense_in_the_jacobian() {
    let g = vdp_graph(false, 10);
    let (jac, _) = g.derive_sparsity();
    let dt_vertex = g.find_vertex(VertexKind::Dt(0)).unwrap();
    let dt_col = g.column_of(dt_vertex).unwrap();
    // every dynamics row (2 per interval) touches the dt column
    assert_eq!(jac.column_count(dt_col), 20);
}

#[test]
fn local_dynamics_edges_have_bounded_arity() {
    // 2p + q + 1 regardless of N
    for n in [3, 10, 40] {
        let g = vdp_graph(true, n);
        let max_scalars = g
            .edges()
            .iter()
            .filter(|e| e.kind == EdgeKind::Equality)
            .map(|e| {
                e.vertices
                    .iter()
                    .map(|&v| g.vertices()[v].dim())
                    .sum::<usize>()
            })
            .max()
            .unwrap();
        assert_eq!(max_scalars, 2 * 2 + 1 + 1);
    }
}

#[test]
fn graph_json_dump_reflects_topology() {
    let g = vdp_graph(false, 3);
    let dump = g.to_json();
    let vertices = dump["vertices"].as_array().unwrap();
    let edges = dump["edges"].as_array().unwrap();
    // x0..x3, u0..u2, dt
    assert_eq!(vertices.len(), 8);
    assert_eq!(
        vertices
            .iter()
            .filter(|v| v["fixed"].as_bool().unwrap())
            .count(),
        2
    );
    // 3 dynamics + 1 objective
    assert_eq!(edges.len(), 4);
    let dt_id = vertices.len() - 1;
    for e in edges {
        // the shared dt vertex joins every edge
        let verts: Vec<usize> = e["vertices"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap() as usize)
            .collect();
        assert!(verts.contains(&dt_id));
    }
}

#[test]
fn local_graph_json_has_uniformity_chain() {
    let g = vdp_graph(true, 4);
    let dump = g.to_json();
    let uniformity: Vec<_> = dump["edges"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["label"] == "uniformity")
        .collect();
    assert_eq!(uniformity.len(), 3);
}

#[test]
fn vdp_dynamics_edge_jacobian_matches_chain_rule() {
    // forward Euler map: d(next)/dx = I + dt A, d/du = dt B, d/ddt = f(x,u)
    let g = vdp_graph(false, 10);
    let mut params = g.pack_values();
    // move to a generic point
    for (i, p) in params.iter_mut().enumerate() {
        *p += 0.01 * (i as f64 % 7.0);
    }
    let eval = g
        .eval_derivatives(&params, &DerivativeOptions::default())
        .unwrap();
    // inspect edge 1 (connects x1, u1, dt, x2), rows 2..4
    let model = VanDerPol::new();
    let (states, controls, dts) = g.trajectory_values(&params);
    let x1 = &states[1];
    let u1 = &controls[1];
    let dt = dts[0];
    use mintime::dynamics::{eval_vector_field, linearize};
    let (a, b) = linearize(&model, x1, u1);
    let f = eval_vector_field(&model, x1, u1).unwrap();
    let x1_col = g.column_of(g.find_vertex(VertexKind::State(1)).unwrap()).unwrap();
    let u1_col = g.column_of(g.find_vertex(VertexKind::Control(1)).unwrap()).unwrap();
    let dt_col = g.column_of(g.find_vertex(VertexKind::Dt(0)).unwrap()).unwrap();
    let dense = |row: usize, col: usize| -> f64 {
        let (rows, vals) = eval.eq_jacobian.col(col);
        rows.iter()
            .position(|&r| r == row)
            .map(|i| vals[i])
            .unwrap_or(0.0)
    };
    for r in 0..2 {
        for c in 0..2 {
            let expected = -(if r == c { 1.0 } else { 0.0 } + dt * a[(r, c)]);
            assert!((dense(2 + r, x1_col + c) - expected).abs() < 1e-4);
        }
        let expected_u = -dt * b[(r, 0)];
        assert!((dense(2 + r, u1_col) - expected_u).abs() < 1e-4);
        let expected_dt = -f[r];
        assert!((dense(2 + r, dt_col) - expected_dt).abs() < 1e-4);
    }
}
