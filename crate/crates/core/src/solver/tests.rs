use super::*;
use crate::mesh::{generate_mesh, MeshPolicy};
use crate::scene::{Boundary, Material, PortDef, Polarization, Primitive, PrimitiveTag, Scene, Shape};

fn closed_box() -> YeeGrid {
    let scene = Scene {
        materials: vec![Material::pec()],
        primitives: vec![],
        ports: vec![],
        bounds: ([0.0; 3], [6e-3, 5e-3, 4e-3]),
        boundaries: [Boundary::Pec; 6],
        footprint: ([0.0, 0.0], [6e-3, 5e-3]),
        f0: 28e9,
    };
    generate_mesh(&scene, &MeshPolicy::uniform(0.5e-3)).unwrap()
}

/// Two vertical feeds joined by a strip on top: a source and a load.
fn wire_loop(load: f64) -> YeeGrid {
    let port = |index: usize, x: f64, impedance| PortDef {
        index,
        position: [x, 5e-3],
        z: [0.0, 2e-3],
        polarization: if index % 2 == 1 { Polarization::X } else { Polarization::Y },
        impedance,
    };
    let scene = Scene {
        materials: vec![Material::pec()],
        primitives: vec![Primitive {
            shape: Shape::Plate {
                x: [3e-3, 7e-3],
                y: [5e-3, 5.5e-3],
                z: 2e-3,
            },
            material: 0,
            priority: 10,
            tag: PrimitiveTag::Other,
        }],
        ports: vec![port(1, 3e-3, 50.0), port(2, 7e-3, load)],
        bounds: ([0.0; 3], [10e-3; 3]),
        boundaries: [Boundary::Pec; 6],
        footprint: ([0.0, 0.0], [10e-3, 10e-3]),
        f0: 28e9,
    };
    generate_mesh(&scene, &MeshPolicy::uniform(0.5e-3)).unwrap()
}

fn kick(sim: &mut Simulation, grid: &YeeGrid) {
    let [nx, ny, nz] = grid.dims();
    let n = grid.idx(nx / 2, ny / 2, nz / 2);
    sim.state_mut().e[2][n] = 1.0;
    let n = grid.idx(nx / 3, ny / 2, nz / 3);
    sim.state_mut().e[0][n] = -0.5;
}

fn tail_mean(x: &[f64], n: usize) -> f64 {
    x[x.len() - n..].iter().sum::<f64>() / n as f64
}

#[test]
fn zero_state_stays_zero() {
    let grid = closed_box();
    let mut sim = Simulation::new(&grid, &CpmlSpec::default(), 0.99).unwrap();
    for _ in 0..20 {
        sim.step().unwrap();
    }
    assert!(sim.state().e.iter().chain(sim.state().h.iter()).all(|c| c.iter().all(|&v| v == 0.0)));
}

#[test]
fn time_reversal_recovers_initial_field() {
    let grid = closed_box();
    let mut sim = Simulation::new(&grid, &CpmlSpec::default(), 0.99).unwrap();
    kick(&mut sim, &grid);
    let e0 = sim.state().e.clone();
    for _ in 0..150 {
        sim.step().unwrap();
    }
    sim.update_h();
    for c in &mut sim.state_mut().h {
        c.iter_mut().for_each(|v| *v = -*v);
    }
    for _ in 0..150 {
        sim.step().unwrap();
    }
    let err = sim.state().e.iter().zip(&e0).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max);
    assert!(err < 1e-9, "max deviation {err}");
}

#[test]
fn super_courant_step_diverges() {
    let grid = closed_box();
    let mut sim = Simulation::new(&grid, &CpmlSpec::default(), 1.05).unwrap();
    kick(&mut sim, &grid);
    let err = (0..2000).try_for_each(|_| sim.step()).unwrap_err();
    match err {
        SolverError::Divergence { step } => assert!(step <= 2000),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn closed_lossless_box_conserves_energy() {
    let grid = closed_box();
    let mut sim = Simulation::new(&grid, &CpmlSpec::default(), 0.99).unwrap();
    kick(&mut sim, &grid);
    sim.step().unwrap();
    let w0 = sim.energy();
    for _ in 0..1000 {
        sim.step().unwrap();
    }
    let w1 = sim.energy();
    assert!(((w1 - w0) / w0).abs() < 1e-3, "{w0} -> {w1}");
}

fn dc_run(load: f64, amplitude: f64) -> Recordings {
    let grid = wire_loop(load);
    let control = RunControl {
        max_steps: 6000,
        ..RunControl::default()
    };
    run(&grid, &CpmlSpec::default(), Drive::Port(1), &Excitation::step(0.2e-9).with_amplitude(amplitude), &control).unwrap()
}

#[test]
fn dc_divider_and_matched_load() {
    for load in [50.0, 100.0, 25.0] {
        let rec = dc_run(load, 1.0);
        let v = tail_mean(&rec.port(1).unwrap().v, 1000);
        let i = tail_mean(&rec.port(1).unwrap().i, 1000);
        let expected = load / (load + 50.0);
        assert!((v / expected - 1.0).abs() < 0.01, "load {load}: v {v} vs {expected}");
        if load == 50.0 {
            let z = 50.0f64;
            let a = (v + z * i) / (2.0 * z.sqrt());
            let b = (v - z * i) / (2.0 * z.sqrt());
            assert!(b.abs() < 0.01 * a.abs(), "reflected {b} incident {a}");
        }
    }
}

#[test]
fn passive_port_is_a_load() {
    // Zero source: the only energy is the initial kick, dissipated in the ports.
    let grid = wire_loop(50.0);
    let mut sim = Simulation::new(&grid, &CpmlSpec::default(), 0.99).unwrap();
    sim.set_drive(Drive::Port(1), Excitation::step(1e-10).with_amplitude(0.0)).unwrap();
    kick(&mut sim, &grid);
    sim.step().unwrap();
    let w0 = sim.energy();
    for _ in 0..3000 {
        sim.step().unwrap();
    }
    assert!(sim.energy() < w0);
}

#[test]
fn doubling_source_doubles_recordings() {
    let grid = wire_loop(50.0);
    let control = RunControl {
        max_steps: 400,
        ..RunControl::default()
    };
    let exc = Excitation::gaussian(20e-12);
    let r1 = run(&grid, &CpmlSpec::default(), Drive::Port(1), &exc, &control).unwrap();
    let r2 = run(&grid, &CpmlSpec::default(), Drive::Port(1), &exc.with_amplitude(2.0), &control).unwrap();
    for (p1, p2) in r1.ports.iter().zip(&r2.ports) {
        assert!(p1.v.iter().zip(&p2.v).all(|(a, b)| 2.0 * a == *b));
        assert!(p1.i.iter().zip(&p2.i).all(|(a, b)| 2.0 * a == *b));
    }
}

#[test]
fn reciprocal_symmetric_feeds() {
    let grid = wire_loop(50.0);
    let control = RunControl {
        max_steps: 500,
        ..RunControl::default()
    };
    let exc = Excitation::gaussian(20e-12);
    let r1 = run(&grid, &CpmlSpec::default(), Drive::Port(1), &exc, &control).unwrap();
    let r2 = run(&grid, &CpmlSpec::default(), Drive::Port(2), &exc, &control).unwrap();
    let v21 = &r1.port(2).unwrap().v;
    let v12 = &r2.port(1).unwrap().v;
    let peak = v21.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = v21.iter().zip(v12).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-9 * peak, "{err} vs {peak}");
}

#[test]
fn partition_count_does_not_change_results() {
    let grid = wire_loop(50.0);
    let control = RunControl {
        max_steps: 200,
        ..RunControl::default()
    };
    let exc = Excitation::gaussian(20e-12);
    let go = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run(&grid, &CpmlSpec::default(), Drive::Port(1), &exc, &control).unwrap())
    };
    assert_eq!(go(1).ports, go(3).ports);
}

#[test]
fn port_on_pec_is_rejected() {
    let mut grid = wire_loop(50.0);
    let n = {
        let p = &grid.ports[0];
        grid.idx(p.node[0], p.node[1], p.gap_edges[0])
    };
    grid.edge_material[2][n] = crate::mesh::PEC;
    assert!(matches!(
        Simulation::new(&grid, &CpmlSpec::default(), 0.99),
        Err(SolverError::PortOnPec { port: 1 })
    ));
}

#[test]
fn thin_cpml_is_rejected() {
    let spec = CpmlSpec {
        thickness: 3,
        ..CpmlSpec::default()
    };
    assert!(spec.validate().is_err());
}

#[test]
fn dump_round_trips() {
    let grid = wire_loop(50.0);
    let control = RunControl {
        max_steps: 50,
        ..RunControl::default()
    };
    let rec = run(&grid, &CpmlSpec::default(), Drive::Port(1), &Excitation::gaussian(20e-12), &control).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rec.bin");
    write_dump(&rec, &path).unwrap();
    let (dt, ports) = read_dump(&path).unwrap();
    assert_eq!(dt, rec.dt);
    assert_eq!(ports, rec.ports);
    assert!(dir.path().join("rec.bin.txt").exists());
}
