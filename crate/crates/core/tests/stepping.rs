use asph_core::operators::compute_correction_matrices;
use asph_core::solvers::{stable_dt, DiffusionStepper, DEFAULT_DT_SAFETY};
use asph_core::{
    build_neighbor_lists_mirrored, generate_lattice, LaplacianStencil, LatticeSpec, MirrorBox, ParticleSet,
    SymmetricTensor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(d: &SymmetricTensor) -> (ParticleSet, LaplacianStencil) {
    let spec = LatticeSpec::new(&[0.0, 0.0], &[1.0, 0.5], &[0.05, 0.025]).unwrap();
    let ps = generate_lattice(&spec).unwrap();
    let nl = build_neighbor_lists_mirrored(&ps, &MirrorBox::new(&[0.0, 0.0], &[1.0, 0.5]));
    let b = compute_correction_matrices(&ps, &nl);
    let stencil = LaplacianStencil::uniform(&ps, &nl, &b, d);
    (ps, stencil)
}

/// Largest magnitude eigenvalue of the assembled operator by power iteration.
fn spectral_radius(stencil: &LaplacianStencil) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut v: Vec<f64> = (0..stencil.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut lambda = 0.0;
    for _ in 0..3000 {
        let w = stencil.evaluate(&v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        lambda = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    lambda
}

fn run(stencil: &LaplacianStencil, dt: f64, steps: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut field: Vec<f64> = (0..stencil.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut stepper = DiffusionStepper::new(stencil.clone());
    for _ in 0..steps {
        stepper.step(&mut field, dt);
    }
    field.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn stable_step_decays_and_oversized_step_blows_up() {
    let d = SymmetricTensor::new_2d(1.0, 0.3, 0.4);
    let (ps, stencil) = setup(&d);
    let dt = stable_dt(&ps, d.max_eigenvalue(), DEFAULT_DT_SAFETY);
    let rho = spectral_radius(&stencil);
    assert!(dt < 2.0 / rho, "dt {dt} vs limit {}", 2.0 / rho);
    assert!(run(&stencil, dt, 2000) <= 1.0);
    let unstable = 4.0 * dt;
    if unstable > 2.0 / rho {
        assert!(run(&stencil, unstable, 2000) > 1e3);
    }
    assert!(run(&stencil, 1.2 * 2.0 / rho, 2000) > 1e3);
}

#[test]
fn mirrored_operator_conserves_mass_for_axis_aligned_tensor() {
    let d = SymmetricTensor::new_2d(0.1, 0.0, 0.03);
    let (ps, stencil) = setup(&d);
    let dt = stable_dt(&ps, d.max_eigenvalue(), DEFAULT_DT_SAFETY);
    let mut field: Vec<f64> =
        ps.positions().iter().map(|p| (-((p[0] - 0.3).powi(2) + p[1].powi(2)) / 0.01).exp()).collect();
    let mass = |f: &[f64]| f.iter().zip(ps.volumes()).map(|(a, v)| a * v).sum::<f64>();
    let m0 = mass(&field);
    let mut stepper = DiffusionStepper::new(stencil);
    for _ in 0..500 {
        stepper.step(&mut field, dt);
    }
    let drift = (mass(&field) - m0).abs() / m0;
    assert!(drift < 1e-12, "{drift}");
}
