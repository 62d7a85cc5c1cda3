use super::*;
use crate::krylov::PreconditionerKind;
use crate::mesh::{build_box_mesh, BoxSpec, Partition};
use crate::operators::Discretization;

fn channel(counts: [usize; 3], order: usize) -> Discretization {
    let spec = BoxSpec::unit(counts)
        .with_bounds([0.0, -1.0, 0.0], [2.0, 1.0, 2.0])
        .with_periodic([true, false, true]);
    Discretization::new(build_box_mesh(&spec).unwrap(), order).unwrap()
}

fn periodic_box(counts: [usize; 3], order: usize) -> Discretization {
    let pi = std::f64::consts::PI;
    let spec = BoxSpec::unit(counts)
        .with_bounds([0.0; 3], [2.0 * pi; 3])
        .with_periodic([true; 3]);
    Discretization::new(build_box_mesh(&spec).unwrap(), order).unwrap()
}

fn settings(tol_v: f64, tol_p: f64) -> SolverSettings {
    let mut s = SolverSettings::default();
    s.velocity.tolerance = tol_v;
    s.pressure.tolerance = tol_p;
    s.pressure.preconditioner = PreconditionerKind::Jacobi;
    s
}

#[test]
fn zero_state_stays_zero() {
    let disc = channel([2, 2, 1], 3);
    let scheme = TimeScheme::new(2, 0.1).unwrap();
    let mut solver = FlowSolver::new(&disc, scheme, settings(1e-10, 1e-8), Partition::single(disc.num_elements())).unwrap();
    let mut state = FlowState::at_rest(&disc, 10.0, Forcing::Zero);
    for _ in 0..3 {
        let rep = solver.advance(&mut state).unwrap();
        assert_eq!(rep.iterations_v, 0);
        assert_eq!(rep.iterations_p, 0);
    }
    assert_eq!(state.step, 3);
    assert!((state.time - 0.3).abs() < 1e-14);
    assert_eq!(state.velocity.len(), 2);
    assert!(state.latest_velocity().iter().flatten().all(|&v| v == 0.0));
    assert!(state.pressure.values().iter().all(|&v| v == 0.0));
}

#[test]
fn channel_converges_to_parabola() {
    let disc = channel([1, 2, 1], 4);
    let scheme = TimeScheme::new(2, 0.2).unwrap();
    let tol_p = 1e-10;
    let mut solver = FlowSolver::new(&disc, scheme, settings(1e-13, tol_p), Partition::single(disc.num_elements())).unwrap();
    let mut state = FlowState::at_rest(&disc, 1.0, Forcing::Constant([2.0, 0.0, 0.0]));
    for _ in 0..120 {
        let rep = solver.advance(&mut state).unwrap();
        assert!(rep.divergence <= 10.0 * tol_p, "divergence {}", rep.divergence);
    }
    let exact = disc.interpolate_global(|x| 1.0 - x[1] * x[1]);
    let u = state.latest_velocity();
    let err = u[0].iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-9, "max error {err}");
    assert!(u[1].iter().chain(&u[2]).all(|v| v.abs() < 1e-9));
}

#[test]
fn unforced_energy_does_not_grow() {
    let disc = periodic_box([2, 2, 2], 5);
    let scheme = TimeScheme::new(2, 0.05).unwrap();
    let mut solver = FlowSolver::new(&disc, scheme, settings(1e-11, 1e-10), Partition::single(disc.num_elements())).unwrap();
    let u: GlobalVector = [
        disc.interpolate_global(|x| x[0].sin() * x[1].cos() * x[2].cos()),
        disc.interpolate_global(|x| -x[0].cos() * x[1].sin() * x[2].cos()),
        vec![0.0; disc.num_global()],
    ];
    let p = disc.pressure_field(vec![0.0; disc.num_pressure()]);
    let mut state = FlowState::from_history(&disc, 100.0, Forcing::Zero, true, 0.0, vec![u], p);
    let mut energy = state.kinetic_energy(&disc);
    for _ in 0..8 {
        solver.advance(&mut state).unwrap();
        let e = state.kinetic_energy(&disc);
        assert!(e <= energy + 1e-8, "{e} > {energy}");
        energy = e;
    }
}

#[test]
fn zero_update_leaves_velocity_unchanged() {
    let disc = channel([1, 1, 1], 3);
    let scheme = TimeScheme::new(1, 0.1).unwrap();
    let u: GlobalVector = std::array::from_fn(|d| disc.interpolate_global(|x| x[d] + 1.0));
    let dp = disc.pressure_field(vec![0.0; disc.num_pressure()]);
    assert_eq!(correct_velocity(&disc, &u, &dp, &scheme), u);
}

#[test]
fn missing_history_is_a_startup_error() {
    let disc = channel([1, 1, 1], 3);
    let state = FlowState::at_rest(&disc, 1.0, Forcing::Zero);
    let scheme = TimeScheme::new(3, 0.1).unwrap();
    assert!(matches!(assemble_fn(&disc, &state, &scheme), Err(crate::SemError::Startup(_))));
}

#[test]
fn pressure_update_has_zero_mean() {
    let disc = periodic_box([1, 1, 1], 3);
    let scheme = TimeScheme::new(1, 0.1).unwrap();
    let mut solver = FlowSolver::new(&disc, scheme.clone(), settings(1e-10, 1e-10), Partition::single(1)).unwrap();
    let u: GlobalVector = [disc.interpolate_global(|x| x[0].sin()), vec![0.0; disc.num_global()], vec![0.0; disc.num_global()]];
    let (dp, _) = solver.solve_pressure_update(&u, &scheme).unwrap();
    let sum: f64 = dp.values().iter().sum();
    assert!(sum.abs() < 1e-8);
}

#[test]
fn net_wall_flux_is_incompatible() {
    let disc = channel([1, 2, 1], 3);
    let scheme = TimeScheme::new(1, 0.1).unwrap();
    let mut solver = FlowSolver::new(&disc, scheme.clone(), settings(1e-10, 1e-10), Partition::single(2)).unwrap();
    let u: GlobalVector = [vec![0.0; disc.num_global()], disc.interpolate_global(|x| x[1]), vec![0.0; disc.num_global()]];
    let err = solver.solve_pressure_update(&u, &scheme).unwrap_err();
    assert!(matches!(err, crate::SemError::IncompatibleRhs { .. }), "{err}");
}

#[test]
fn cfl_scales_with_velocity_and_order() {
    let disc = channel([2, 2, 2], 4);
    let scheme = TimeScheme::new(2, 0.01).unwrap();
    let solver = FlowSolver::new(&disc, scheme, settings(1e-8, 1e-8), Partition::single(disc.num_elements())).unwrap();
    let u: GlobalVector = [vec![2.0; disc.num_global()], vec![0.0; disc.num_global()], vec![0.0; disc.num_global()]];
    // h_x = 1, N^2 = 16
    assert!((solver.cfl(&u) - 0.01 * 2.0 * 16.0).abs() < 1e-12);
}

#[test]
fn checkpoint_round_trip() {
    let disc = channel([2, 1, 1], 3);
    let scheme = TimeScheme::new(2, 0.1).unwrap();
    let mut solver = FlowSolver::new(&disc, scheme, settings(1e-10, 1e-10), Partition::single(disc.num_elements())).unwrap();
    let mut state = FlowState::at_rest(&disc, 1.0, Forcing::Constant([1.0, 0.0, 0.0]));
    for _ in 0..2 {
        solver.advance(&mut state).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.chk");
    let chk = Checkpoint::capture(&disc, &state, 2, 0.1);
    chk.write(&path).unwrap();
    let back = Checkpoint::read(&path, &disc).unwrap();
    assert_eq!(back, chk);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], b"SEMFLOW1");
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
    assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 3);
    assert_eq!(f64::from_le_bytes(bytes[48..56].try_into().unwrap()), 0.1);

    // a restored state continues identically
    let mut restored = back.restore(&disc, 1.0, Forcing::Constant([1.0, 0.0, 0.0]), true).unwrap();
    let a = solver.advance(&mut state).unwrap();
    let mut solver2 = FlowSolver::new(&disc, TimeScheme::new(2, 0.1).unwrap(), settings(1e-10, 1e-10), Partition::single(disc.num_elements())).unwrap();
    let b = solver2.advance(&mut restored).unwrap();
    assert_eq!(a.iterations_v, b.iterations_v);
    assert_eq!(state.latest_velocity(), restored.latest_velocity());

    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(Checkpoint::read(&path, &disc).is_err());
    let other = channel([1, 1, 1], 3);
    std::fs::write(&path, &bytes).unwrap();
    assert!(Checkpoint::read(&path, &other).is_err());
}

#[test]
fn telemetry_rows_are_flushed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let mut w = TelemetryWriter::create(&path).unwrap();
    let row = StepReport {
        step: 1,
        time: 0.5,
        iterations_v: 12,
        iterations_p: 7,
        residual_v: 1e-9,
        residual_p: 2e-7,
        divergence: 3e-12,
        cfl: 0.25,
        wall_s: 0.01,
    };
    w.write(&row).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), TELEMETRY_HEADER.join(","));
    assert_eq!(lines.next().unwrap(), "1,5e-1,12,7,1e-9,2e-7,3e-12,2.5e-1,0.010000");
}
