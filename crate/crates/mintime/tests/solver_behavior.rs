//! End-to-end solves of the minimum-time NLPs.

use std::sync::Arc;

use mintime::dynamics::{
    eval_vector_field, DoubleIntegrator, Integrator, Scheme, VanDerPol,
};
use mintime::solver::{kkt_residual, solve_nlp, SolveStatus, SolverOptions};
use mintime::transcription::{
    build_global_uniform, build_local_uniform, shrink_and_warmstart, TerminalSet, VertexKind,
};
use nalgebra::dvector;

#[test]
fn steady_state_single_interval_kkt() {
    // start == target == steady state: the only feasible transition keeps
    // f(x_f, u) = 0, the horizon collapses onto its lower bound and the
    // dt-bound multiplier is exactly one.
    let model = Arc::new(VanDerPol::new());
    let integ = Integrator::new(Scheme::ForwardEuler);
    let x = dvector![0.8, 0.0];
    let mut g = build_global_uniform(
        Arc::clone(&model) as _,
        integ,
        &x,
        &TerminalSet::Point(x.clone()),
        1,
        1e-3,
        0.1,
    )
    .unwrap();
    let sol = solve_nlp(&mut g, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.t_f - 1e-3).abs() < 1e-9, "t_f = {}", sol.t_f);
    let f = eval_vector_field(model.as_ref(), &x, &sol.controls[0]).unwrap();
    assert!(f.amax() <= 1e-6, "residual field norm {}", f.amax());
    // multiplier on the dt lower bound
    let dt_col = g.column_of(g.find_vertex(VertexKind::Dt(0)).unwrap()).unwrap();
    let mu = sol.bound_multipliers_lower[dt_col];
    assert!((mu - 1.0).abs() < 1e-4, "mu = {mu}");
    let kkt = kkt_residual(&g, &sol).unwrap();
    assert!(kkt.stationarity <= 1e-6);
    assert!(kkt.feasibility <= 1e-6);
    assert!(kkt.complementarity <= 1e-6);
}

#[test]
fn double_integrator_bang_bang_time() {
    // analytic oracle: rest-to-rest transfer over distance d with |u| <= 1
    // takes 2 sqrt(d); verified by forward simulation below.
    let oracle = |d: f64| 2.0 * d.abs().sqrt();
    let model = Arc::new(DoubleIntegrator::new());
    let integ = Integrator::new(Scheme::ForwardEuler);
    // independent check of the oracle: bang-bang control reaches the target
    {
        let t_half = (1.0f64).sqrt();
        let steps = 4000usize;
        let h = 2.0 * t_half / steps as f64;
        let mut x = dvector![1.0, 0.0];
        for i in 0..steps {
            let t = i as f64 * h;
            let u = if t < t_half { dvector![-1.0] } else { dvector![1.0] };
            x = integ.step(model.as_ref(), &x, &u, h).unwrap();
        }
        assert!(x.amax() < 1e-2, "bang-bang replay missed: {x}");
    }

    let mut g = build_local_uniform(
        model as _,
        integ,
        &dvector![1.0, 0.0],
        &TerminalSet::Point(dvector![0.0, 0.0]),
        100,
        1e-4,
        1.0,
    )
    .unwrap();
    let sol = solve_nlp(&mut g, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(
        (sol.t_f - oracle(1.0)).abs() <= 0.05,
        "t_f = {} vs oracle {}",
        sol.t_f,
        oracle(1.0)
    );
}

#[test]
fn vdp_global_and_local_agree() {
    let model = Arc::new(VanDerPol::new());
    let integ = Integrator::new(Scheme::ForwardEuler);
    let x_s = dvector![0.0, 0.0];
    let terminal = TerminalSet::Point(dvector![0.8, 0.0]);
    for n in [5usize, 16] {
        let mut gg = build_global_uniform(
            Arc::clone(&model) as _,
            integ,
            &x_s,
            &terminal,
            n,
            1e-3,
            1.0,
        )
        .unwrap();
        let mut gl = build_local_uniform(
            Arc::clone(&model) as _,
            integ,
            &x_s,
            &terminal,
            n,
            1e-3,
            1.0,
        )
        .unwrap();
        let sg = solve_nlp(&mut gg, &SolverOptions::default()).unwrap();
        let sl = solve_nlp(&mut gl, &SolverOptions::default()).unwrap();
        assert_eq!(sg.status, SolveStatus::Optimal, "global N={n}");
        assert_eq!(sl.status, SolveStatus::Optimal, "local N={n}");
        assert!(
            (sg.t_f - sl.t_f).abs() < 1e-4,
            "N={n}: global {} local {}",
            sg.t_f,
            sl.t_f
        );
        // uniformity constraint active on the local grid
        for dt in &sl.dts {
            assert!((dt - sl.dts[0]).abs() < 1e-9);
        }
        println!("N={n}: t_f global {} local {}", sg.t_f, sl.t_f);
    }
}

#[test]
fn warmstart_at_same_point_converges_without_steps() {
    let model = Arc::new(VanDerPol::new());
    let integ = Integrator::new(Scheme::ForwardEuler);
    let x_s = dvector![0.0, 0.0];
    let terminal = TerminalSet::Point(dvector![0.8, 0.0]);
    let mut g = build_local_uniform(Arc::clone(&model) as _, integ, &x_s, &terminal, 10, 1e-3, 1.0)
        .unwrap();
    let first = solve_nlp(&mut g, &SolverOptions::default()).unwrap();
    assert_eq!(first.status, SolveStatus::Optimal);
    // same N, same start: the warm start is already the fixed point
    let mut g2 = shrink_and_warmstart(&g, &first, &x_s, 10).unwrap();
    let second = solve_nlp(&mut g2, &SolverOptions::default()).unwrap();
    assert_eq!(second.status, SolveStatus::Optimal);
    assert_eq!(second.iterations, 0);
    assert!((second.t_f - first.t_f).abs() < 1e-9);
}

#[test]
fn nominal_shrink_preserves_optimality_and_telescopes() {
    let model = Arc::new(VanDerPol::new());
    let integ = Integrator::new(Scheme::ForwardEuler);
    let x_s = dvector![0.0, 0.0];
    let terminal = TerminalSet::Point(dvector![0.8, 0.0]);
    let mut g = build_local_uniform(Arc::clone(&model) as _, integ, &x_s, &terminal, 12, 1e-3, 1.0)
        .unwrap();
    let first = solve_nlp(&mut g, &SolverOptions::default()).unwrap();
    assert_eq!(first.status, SolveStatus::Optimal);
    // nominal successor state is the first predicted state
    let x_next = first.states[1].clone();
    let mut g2 = shrink_and_warmstart(&g, &first, &x_next, 11).unwrap();
    let second = solve_nlp(&mut g2, &SolverOptions::default()).unwrap();
    assert_eq!(second.status, SolveStatus::Optimal);
    assert!(
        (second.t_f - (first.t_f - first.dts[0])).abs() < 1e-6,
        "telescoping: {} vs {}",
        second.t_f,
        first.t_f - first.dts[0]
    );
}

#[test]
fn infeasible_instance_is_flagged() {
    // target unreachable in one very short interval
    let model = Arc::new(VanDerPol::new());
    let integ = Integrator::new(Scheme::ForwardEuler);
    let mut g = build_local_uniform(
        model as _,
        integ,
        &dvector![0.0, 0.0],
        &TerminalSet::Point(dvector![0.8, 0.0]),
        2,
        1e-3,
        0.01,
    )
    .unwrap();
    let sol = solve_nlp(&mut g, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}
