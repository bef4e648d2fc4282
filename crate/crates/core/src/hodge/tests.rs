use super::*;
use crate::mesh::{betti_numbers, generate_mesh, Shape};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mesh(shape: Shape) -> SimplicialPatch<f64> {
    generate_mesh(shape, 16).unwrap()
}

fn random(m: &SimplicialPatch<f64>, k: usize, rng: &mut ChaCha8Rng) -> Cochain<f64> {
    Cochain::new(
        k,
        (0..m.num_simplices(k))
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    )
}

/// Planar triangle area from the (x1, x2) coordinates, independent of the mesh code.
fn planar_area(m: &SimplicialPatch<f64>) -> f64 {
    m.simplices()
        .iter()
        .map(|s| {
            let (a, b, c) = (m.vertex(s[0]), m.vertex(s[1]), m.vertex(s[2]));
            0.5 * ((b[0] - a[0]) * (c[2] - a[2]) - (c[0] - a[0]) * (b[2] - a[2])).abs()
        })
        .sum()
}

#[test]
fn harmonic_dimension_matches_first_betti_number() {
    for (shape, b1) in [(Shape::Disk, 0), (Shape::Annulus, 1), (Shape::Pants, 2)] {
        for res in [16, 24] {
            let m: SimplicialPatch<f64> = generate_mesh(shape, res).unwrap();
            let basis = neumann_harmonic_basis(&m, 1).unwrap();
            assert_eq!(basis.len(), b1, "{shape:?} at {res}");
            assert_eq!(betti_numbers(&m).1, b1);
        }
    }
}

#[test]
fn zero_and_two_forms() {
    let m = mesh(Shape::Annulus);
    assert_eq!(neumann_harmonic_basis(&m, 0).unwrap().len(), 1);
    assert!(neumann_harmonic_basis(&m, 2).unwrap().is_empty());
    assert!(neumann_harmonic_basis(&m, 3).is_err());
}

#[test]
fn annulus_harmonic_form_is_tangential_with_unit_circulation() {
    let m = mesh(Shape::Annulus);
    let solver = HodgeSolver::new(&m).unwrap();
    let space = solver.harmonic_space(1).unwrap();
    let eta = &space.forms[0];
    assert!((solver.ops.inner(eta, eta).unwrap() - 1.0).abs() < 1e-12);
    let zero = DVector::zeros(m.num_simplices(0));
    let flux = solver.normal_flux(eta, &zero).unwrap();
    assert!(flux.iter().all(|f| f.abs() <= 1e-8), "{flux:?}");
    let circ = solver.ops.boundary.component_integrals(eta);
    assert_eq!(circ.len(), 2);
    let scale = circ[0];
    assert!(scale.abs() > 1e-3);
    let normalized: Vec<f64> = circ.iter().map(|c| c / scale).collect();
    assert!(
        (normalized[0] - 1.0).abs() < 1e-12 && (normalized[1] + 1.0).abs() < 1e-8,
        "{normalized:?}"
    );
    // kernel property: the a obtained by integrating d⋆η vanishes
    for h in &space.forms {
        let a = -solver.codifferential(h).unwrap().sum() / solver.volume();
        assert!(a.abs() <= 1e-8);
    }
    assert!(space.gap > 1e3);
}

#[test]
fn pants_basis_is_star_orthonormal() {
    let m = mesh(Shape::Pants);
    let solver = HodgeSolver::new(&m).unwrap();
    let forms = solver.harmonic_space(1).unwrap().forms;
    for (i, a) in forms.iter().enumerate() {
        for (j, b) in forms.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((solver.ops.inner(a, b).unwrap() - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn solvability_of_exact_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = mesh(Shape::Disk);
    let ops = DecOperators::new(&m);
    let alpha = random(&m, 1, &mut rng);
    let beta = random(&m, 1, &mut rng);
    let sigma = ops.coboundary(&alpha).unwrap();
    let dbeta = ops.coboundary(&beta).unwrap();
    let a = integrability_scalar(&beta, &m).unwrap();
    let tau = dbeta.axpy(a, &volume_cochain(&m));
    let report = solvability_report(&m, &HodgeProblem::new(sigma, tau)).unwrap();
    assert!(report.passes(), "{report}");
    assert!(report.to_string().contains("(5)"));
}

#[test]
fn volume_form_alone_fails_condition_five() {
    let m = mesh(Shape::Disk);
    let vol = volume_cochain(&m);
    let report = solvability_report(&m, &HodgeProblem::new(Cochain::zeros(&m, 2), vol)).unwrap();
    assert!(report.structural_pass());
    assert!(!report.checks[4].pass);
    let r5 = report.checks[4].residual.unwrap();
    assert!((r5 - planar_area(&m)).abs() < 1e-12, "{r5}");
    let e = solve_bvp(
        &m,
        &HodgeProblem::new(Cochain::zeros(&m, 2), volume_cochain(&m)).fixed_volume(),
    )
    .unwrap_err();
    assert!(matches!(e.kind, ErrorKind::Solvability(_)));
}

#[test]
fn non_closed_sigma_fails_condition_one_in_three_dimensions() {
    let p = |a: f64, b: f64, c: f64| DVector::from_vec(vec![a, 0.0, b, 0.0, c, 0.0]);
    let m = SimplicialPatch::new(
        3,
        vec![
            p(0.0, 0.0, 0.0),
            p(1.0, 0.0, 0.0),
            p(0.0, 1.0, 0.0),
            p(0.0, 0.0, 1.0),
        ],
        vec![vec![0, 1, 2, 3]],
    )
    .unwrap();
    let sigma = Cochain::new(2, vec![0.3, -0.7, 0.2, 0.9]);
    let report = solvability_report(&m, &HodgeProblem::new(sigma, Cochain::zeros(&m, 3))).unwrap();
    assert!(!report.checks[0].pass);
    assert!(report.checks[3].residual.is_none() && report.checks[4].residual.is_none());
    let e = solve_bvp(&m, &HodgeProblem::zero(&m)).unwrap_err();
    assert!(matches!(e.kind, ErrorKind::Unsupported(_)));
}

#[test]
fn integrability_scalar_values() {
    let m = mesh(Shape::Annulus);
    assert_eq!(
        integrability_scalar(&Cochain::zeros(&m, 1), &m).unwrap(),
        0.0
    );
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ops = DecOperators::new(&m);
    let raw = random(&m, 1, &mut rng);
    // Stokes: the boundary integral is an independent evaluation of ∫ dβ
    let total = ops.boundary_integral(&raw).unwrap();
    let beta = raw.scaled(0.5 / total);
    let a = integrability_scalar(&beta, &m).unwrap();
    let expected = -0.5 / planar_area(&m);
    assert!((a - expected).abs() < 1e-12, "{a} vs {expected}");
    assert!((a + 0.5 / (3.0 * std::f64::consts::PI)).abs() < 5e-3);
    // exact β = df has dβ = 0
    let f = random(&m, 0, &mut rng);
    let exact = ops.coboundary(&f).unwrap();
    assert!(integrability_scalar(&exact, &m).unwrap().abs() < 1e-12);
}

#[test]
fn zero_problems_have_zero_solutions() {
    for shape in [Shape::Disk, Shape::Annulus] {
        let m = mesh(shape);
        let sol = solve_bvp(&m, &HodgeProblem::zero(&m)).unwrap();
        assert!(sol.eta.inf_norm() < 1e-14 && sol.a.abs() < 1e-14);
    }
}

#[test]
fn recovers_exact_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for shape in [Shape::Disk, Shape::Annulus, Shape::Pants] {
        let m = mesh(shape);
        let mut solver = HodgeSolver::new(&m).unwrap();
        let f = random(&m, 0, &mut rng);
        let eta0 = solver.ops.coboundary(&f).unwrap();
        let sigma = solver.ops.coboundary(&eta0).unwrap();
        let tau = Cochain::dual(
            2,
            solver
                .codifferential(&eta0)
                .unwrap()
                .iter()
                .copied()
                .collect(),
        );
        let sol = solver
            .solve(&HodgeProblem::new(sigma.clone(), tau.clone()))
            .unwrap();
        let d_eta = solver.ops.coboundary(&sol.eta).unwrap();
        assert!(d_eta.sub(&sigma).inf_norm() < 1e-9);
        let div = solver.codifferential(&sol.eta).unwrap();
        assert!(div
            .iter()
            .zip(&tau.values)
            .all(|(a, b)| (a - b).abs() < 1e-9));
        assert!(sol.a.abs() < 1e-9);
    }
}

#[test]
fn mixed_problem_chooses_a() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = mesh(Shape::Annulus);
    let mut solver = HodgeSolver::new(&m).unwrap();
    let sigma = random(&m, 2, &mut rng);
    let tau = random(&m, 2, &mut rng);
    let sol = solver
        .solve(&HodgeProblem::new(sigma, tau.clone()))
        .unwrap();
    let expected = -tau.values.iter().sum::<f64>() / planar_area(&m);
    assert!((sol.a - expected).abs() < 1e-10);
    assert!(
        sol.residual_norms.iter().all(|&r| r < 1e-9),
        "{:?}",
        sol.residual_norms
    );
    let basis = solver.harmonic_space(1).unwrap().forms;
    for h in &basis {
        assert!(solver.ops.inner(&sol.eta, h).unwrap().abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn solution_is_linear(seed in 0u64..1000, s in -2.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = mesh(Shape::Annulus);
        let mut solver = HodgeSolver::new(&m).unwrap();
        let (s1, t1) = (random(&m, 2, &mut rng), random(&m, 2, &mut rng));
        let (s2, t2) = (random(&m, 2, &mut rng), random(&m, 2, &mut rng));
        let a = solver.solve(&HodgeProblem::new(s1.clone(), t1.clone())).unwrap();
        let b = solver.solve(&HodgeProblem::new(s2.clone(), t2.clone())).unwrap();
        let c = solver.solve(&HodgeProblem::new(s1.axpy(s, &s2), t1.axpy(s, &t2))).unwrap();
        prop_assert!(c.eta.sub(&a.eta.axpy(s, &b.eta)).inf_norm() < 1e-9);
        prop_assert!((c.a - a.a - s * b.a).abs() < 1e-9);
    }
}
