use mintime::dynamics::{simulate, Integrator, PiecewiseConstantControl, Scheme, VanDerPol};
use mintime::solver::{solve_nlp, SolverOptions};
use mintime::transcription::{build_global_uniform, build_local_uniform, TerminalSet, VertexKind};
use nalgebra::{dvector, DVector};
use std::sync::Arc;

fn main() {
    let model = Arc::new(VanDerPol::new());
    let integ = Integrator::new(Scheme::ForwardEuler);
    let x_s = dvector![0.0, 0.0];
    let terminal = TerminalSet::Point(dvector![0.8, 0.0]);
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or(5);
    let local = std::env::args().nth(2).map(|v| v == "local").unwrap_or(false);
    let mut opts = SolverOptions::default();
    opts.sqp_max_iter = 200;
    if let Ok(reg) = std::env::var("REG") {
        opts.regularization = reg.parse().unwrap();
    }
    if let Ok(tr) = std::env::var("TRUST") {
        opts.trust_radius = tr.parse().unwrap();
    }
    let mut g = if local {
        build_local_uniform(model.clone() as _, integ, &x_s, &terminal, n, 1e-3, 1.0).unwrap()
    } else {
        build_global_uniform(model.clone() as _, integ, &x_s, &terminal, n, 1e-3, 1.0).unwrap()
    };
    if std::env::var_os("SIM_INIT").is_some() {
        let dt0 = 0.5;
        let ctrl = PiecewiseConstantControl::constant(DVector::zeros(1), n, dt0);
        let states = simulate(model.as_ref(), &integ, &x_s, &ctrl, 1).unwrap();
        for k in 1..n {
            if let Some(id) = g.find_vertex(VertexKind::State(k)) {
                g.vertex_mut(id).value.copy_from(&states[k]);
            }
        }
    }
    let sol = solve_nlp(&mut g, &opts).unwrap();
    println!(
        "status {:?} t_f {} iters {} viol {:.2e} kkt {:.2e} wall {:?}",
        sol.status, sol.t_f, sol.iterations, sol.max_violation, sol.kkt_residual, sol.wall_time
    );
}
