use super::*;
use crate::ambient::{j_apply, Scaffold};
use crate::mesh::{generate_mesh, volume_cochain, Shape};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn disk() -> SimplicialPatch<f64> {
    generate_mesh(Shape::Disk, 16).unwrap()
}

fn annulus() -> SimplicialPatch<f64> {
    generate_mesh(Shape::Annulus, 16).unwrap()
}

fn annulus_scaffold() -> Scaffold<f64> {
    Scaffold::Union(vec![Scaffold::quadric(2, 1.0), Scaffold::quadric(2, 4.0)])
}

/// z_1 ↦ e^{iφ} z_1.
fn rotate_z1(p: &DVector<f64>, phi: f64) -> DVector<f64> {
    let mut q = p.clone();
    q[0] = phi.cos() * p[0] - phi.sin() * p[1];
    q[1] = phi.sin() * p[0] + phi.cos() * p[1];
    q
}

/// Scaffold containing the rotated unit circle: e^{-2iφ} z_1² + z_2² = 1.
fn rotated_quadric(phi: f64) -> Scaffold<f64> {
    Scaffold::Quadric {
        mu: vec![Complex::from_polar(1.0, -2.0 * phi), Complex::new(1.0, 0.0)],
        c: 1.0,
    }
}

fn random_coeffs(d: &Deformer<'_, f64>, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(d.space.dim(), |_, _| rng.random_range(-1.0..1.0))
}

#[test]
fn flat_disk_has_exactly_zero_residual() {
    let m = disk();
    let w = Scaffold::quadric(2, 1.0);
    let d = Deformer::new(&m, &w).unwrap();
    let s = d.state_of_field(&NormalField::zeros(&m), 0.0).unwrap();
    assert!(s.norms[0] <= 1e-14 && s.norms[1] <= 1e-14, "{:?}", s.norms);
    let (om, al) = d.residual(&s).unwrap();
    assert_eq!(om.values, s.residual_omega.values);
    assert_eq!(al.values, s.residual_alpha.values);
    // invariance under θ ↦ θ + 2π
    let (_, shifted) = residual_at_positions(&m, &s.positions, 2.0 * std::f64::consts::PI).unwrap();
    assert!(shifted.inf_norm() <= 1e-14);
}

#[test]
fn rotated_plane_phase() {
    let phi = 0.3;
    let m = disk().map_vertices(|p| rotate_z1(p, phi)).unwrap();
    let pos = m.vertices().to_vec();
    let (om, al) = residual_at_positions(&m, &pos, phi).unwrap();
    assert!(om.inf_norm() < 1e-14 && al.inf_norm() < 1e-14);
    let (_, al_pi) = residual_at_positions(&m, &pos, phi + std::f64::consts::PI).unwrap();
    assert!(al_pi.inf_norm() < 1e-14);
    let (_, al0) = residual_at_positions(&m, &pos, 0.0).unwrap();
    assert!(al0.inf_norm() > 1e-3);
    assert!((best_fit_theta(&m).unwrap() - phi).abs() < 1e-14);
}

#[test]
fn radial_normal_perturbation_keeps_omega_zero() {
    let m = disk();
    let pos: Vec<DVector<f64>> = m.vertices().iter().map(|p| p + j_apply(p) * 0.01).collect();
    let (om, al) = residual_at_positions(&m, &pos, 0.0).unwrap();
    assert!(om.inf_norm() < 1e-15);
    assert!(al.inf_norm() > 1e-6);
}

#[test]
fn normal_field_constraints() {
    let m = disk();
    let w = Scaffold::quadric(2, 1.0);
    let d = Deformer::new(&m, &w).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let field = d.space.field(&random_coeffs(&d, &mut rng));
    d.space.validate(&field).unwrap();
    // boundary value along J·N violates ω(V, N) = 0
    let mut bad = field.clone();
    let v = d.boundary.boundary_vertex_set[0];
    bad.values[v] += j_apply(&d.boundary.inward_normal[0]) * 0.1;
    assert!(matches!(
        d.retract(&bad).unwrap_err().kind,
        ErrorKind::Constraint(_)
    ));
    // tangential values are rejected everywhere
    let mut tangential = NormalField::zeros(&m);
    tangential.values[0] = d.space.tangents[0].column(0).into_owned();
    assert!(d.space.validate(&tangential).is_err());
    let projected = d.space.project(&field);
    assert!(projected
        .values
        .iter()
        .zip(&field.values)
        .all(|(a, b)| (a - b).norm() < 1e-14));
}

#[test]
fn retraction_is_identity_at_zero_and_second_order() {
    let m = disk();
    let w = Scaffold::quadric(2, 1.0);
    let d = Deformer::new(&m, &w).unwrap();
    let pos = d.retract(&NormalField::zeros(&m)).unwrap();
    for (a, b) in pos.iter().zip(m.vertices()) {
        assert!((a - b).norm() < 1e-15);
    }
    let v = d.boundary.boundary_vertex_set[3];
    let dir = d.space.bases[v].column(0).into_owned();
    let err_at = |t: f64| {
        let mut f = NormalField::zeros(&m);
        f.values[v] = &dir * t;
        let q = d.retract(&f).unwrap();
        (&q[v] - (m.vertex(v) + &dir * t)).norm()
    };
    let (e1, e2) = (err_at(1e-2), err_at(5e-3));
    assert!(e1 > 0.0 && (e1 / e2 - 4.0).abs() < 0.05, "{e1} {e2}");
}

#[test]
fn boundary_fields_are_tangent_to_the_scaffold() {
    for (m, w) in [
        (disk(), Scaffold::quadric(2, 1.0)),
        (annulus(), annulus_scaffold()),
    ] {
        let d = Deformer::new(&m, &w).unwrap();
        let h = m.mesh_size();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let field = d.space.field(&random_coeffs(&d, &mut rng));
        for &v in &d.boundary.boundary_vertex_set {
            let ev = w.eval(m.vertex(v));
            for g in &ev.gradients {
                assert!(g.dot(&field.values[v]).abs() <= 5.0 * h * field.values[v].norm());
            }
        }
    }
    let m: SimplicialPatch<f64> = generate_mesh(Shape::Cylinder, 16).unwrap();
    let w = Scaffold::Union(vec![
        Scaffold::complex_plane(2, 1, Complex::new(0.0, 0.0)),
        Scaffold::complex_plane(2, 1, Complex::new(1.0, 0.0)),
    ]);
    let d = Deformer::new(&m, &w).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let field = d.space.field(&random_coeffs(&d, &mut rng));
    for &v in &d.boundary.boundary_vertex_set {
        for g in &w.eval(m.vertex(v)).gradients {
            assert!(g.dot(&field.values[v]).abs() <= 1e-10);
        }
    }
}

#[test]
fn analytic_jacobian_matches_finite_differences() {
    let phi = 0.2;
    let m = disk().map_vertices(|p| rotate_z1(p, phi)).unwrap();
    let w = rotated_quadric(phi);
    let d = Deformer::new(&m, &w).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c = random_coeffs(&d, &mut rng) * 0.02;
    let theta = 0.1;
    let jac = d.jacobian(&c, theta).unwrap();
    let h = 1e-6;
    for col in [0, 7, d.space.dim() - 1, d.space.dim()] {
        let bump = |s: f64| {
            let mut cc = c.clone();
            let mut th = theta;
            if col < d.space.dim() {
                cc[col] += s;
            } else {
                th += s;
            }
            d.state(&cc, th).unwrap().residual_vector()
        };
        let fd = (bump(h) - bump(-h)) / (2.0 * h);
        assert!(
            (&fd - jac.column(col)).norm() < 1e-7 * (1.0 + fd.norm()),
            "column {col}"
        );
    }
}

#[test]
fn linearization_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (m, w) in [
        (disk(), Scaffold::quadric(2, 1.0)),
        (annulus(), annulus_scaffold()),
    ] {
        let d = Deformer::new(&m, &w).unwrap();
        let lin = linearize_at_zero(&d).unwrap();
        for _ in 0..5 {
            let c = random_coeffs(&d, &mut rng);
            let a: f64 = rng.random_range(-1.0..1.0);
            let field = d.space.field(&c);
            let (lo, la) = lin.apply(&field, a).unwrap();
            let h = 1e-5;
            let plus = d.state(&(&c * h), lin.theta0 + a * h).unwrap();
            let minus = d.state(&(&c * -h), lin.theta0 - a * h).unwrap();
            let fo = plus
                .residual_omega
                .sub(&minus.residual_omega)
                .scaled(0.5 / h);
            let fa = plus
                .residual_alpha
                .sub(&minus.residual_alpha)
                .scaled(0.5 / h);
            let scale = lo.inf_norm().max(la.inf_norm());
            assert!(fo.sub(&lo).inf_norm() <= 1e-6 * scale);
            assert!(fa.sub(&la).inf_norm() <= 1e-6 * scale);
        }
        let (zo, za) = lin.apply(&NormalField::zeros(&m), 1.0).unwrap();
        assert!(zo.inf_norm() == 0.0);
        assert!(za.sub(&volume_cochain(&m)).inf_norm() == 0.0);
    }
}

#[test]
fn linearization_requires_special_lagrangian_base() {
    let m = disk()
        .map_vertices(|p| p + j_apply(p) * (0.3 * p[0]))
        .unwrap();
    let w = Scaffold::quadric(2, 1.0);
    let Ok(d) = Deformer::new(&m, &w) else { return };
    assert!(matches!(
        linearize_at_zero(&d).map(|_| ()).unwrap_err().kind,
        ErrorKind::NotSpecialLagrangian { .. }
    ));
}

#[test]
fn moduli_basis_sizes_and_constraints() {
    let m = disk();
    let w = Scaffold::quadric(2, 1.0);
    assert!(moduli_basis(&Deformer::new(&m, &w).unwrap())
        .unwrap()
        .is_empty());
    let m = annulus();
    let w = annulus_scaffold();
    let d = Deformer::new(&m, &w).unwrap();
    let basis = moduli_basis(&d).unwrap();
    assert_eq!(basis.len(), 1);
    d.space.validate(&basis[0]).unwrap();
    for (pos, &v) in d.boundary.boundary_vertex_set.iter().enumerate() {
        assert!(omega(&basis[0].values[v], &d.boundary.inward_normal[pos]).abs() <= 1e-8);
    }
}

#[test]
fn moduli_direction_is_nearly_in_the_linear_kernel() {
    let m = annulus();
    let w = annulus_scaffold();
    let d = Deformer::new(&m, &w).unwrap();
    let lin = linearize_at_zero(&d).unwrap();
    let v = &moduli_basis(&d).unwrap()[0];
    let eta = lin.eta(v);
    let (o, a) = lin.apply(v, 0.0).unwrap();
    // discretization-level output compared with a generic field of the same size
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let generic = d.space.field(&random_coeffs(&d, &mut rng));
    let generic = generic.scaled(v.max_norm() / generic.max_norm());
    let (go, ga) = lin.apply(&generic, 0.0).unwrap();
    let ratio = o.inf_norm().max(a.inf_norm()) / go.inf_norm().max(ga.inf_norm());
    assert!(ratio < 0.2, "{ratio}");
    assert!(eta.inf_norm() > 0.0);
}

#[test]
fn newton_fixed_point_and_moved_quadric() {
    let m = disk();
    let opts = NewtonOptions::default();
    let w = Scaffold::quadric(2, 1.0);
    let d = Deformer::new(&m, &w).unwrap();
    let s0 = d.state(&DVector::zeros(d.space.dim()), 0.0).unwrap();
    let s = newton_solve(&d, &s0, &[], &opts).unwrap();
    assert_eq!(s.iterations(), 0);
    let w = Scaffold::quadric(2, 1.21);
    let d = Deformer::new(&m, &w).unwrap();
    let s0 = d.state(&DVector::zeros(d.space.dim()), 0.0).unwrap();
    let s = newton_solve(&d, &s0, &[], &opts).unwrap();
    assert!(s.residual_norm() <= 1e-10);
    for (v, p) in s.positions.iter().enumerate() {
        assert!(p[1].abs() < 1e-6 && p[3].abs() < 1e-6);
        if d.is_boundary(v) {
            assert!((p.norm() - 1.1).abs() < 1e-6);
        }
    }
}

#[test]
fn newton_recovers_the_phase() {
    let phi = 0.2;
    let m = disk().map_vertices(|p| rotate_z1(p, phi)).unwrap();
    let w = rotated_quadric(phi);
    let d = Deformer::new(&m, &w).unwrap();
    let s0 = d.state(&DVector::zeros(d.space.dim()), 0.0).unwrap();
    let s = newton_solve(&d, &s0, &[], &NewtonOptions::default()).unwrap();
    assert!(s.residual_norm() <= 1e-10);
    let dtheta = principal_angle(2.0 * (s.theta - phi)) / 2.0;
    assert!(dtheta.abs() <= 1e-8, "θ = {}", s.theta);
    let h = &s.history;
    assert!(h.len() >= 2);
    // quadratic convergence on the last steps
    for k in h.len().saturating_sub(3)..h.len() - 1 {
        if h[k] > 1e-13 {
            assert!(h[k + 1] <= 10.0 * h[k] * h[k].max(1e-3), "{h:?}");
        }
    }
}

#[test]
fn moduli_step_zero_is_the_base() {
    let m = annulus();
    let w = annulus_scaffold();
    let d = Deformer::new(&m, &w).unwrap();
    let dir = &moduli_basis(&d).unwrap()[0];
    let s = moduli_step(&d, dir, 0.0, &NewtonOptions::default()).unwrap();
    assert_eq!(s.iterations(), 0);
    assert!(s.field.max_norm() == 0.0);
}

#[test]
fn bump_profile() {
    assert_eq!(bump(0.1, 0.2, 0.5), 1.0);
    assert_eq!(bump(0.5, 0.2, 0.5), 0.0);
    assert!((bump(0.35f64, 0.2, 0.5) - 0.5).abs() < 1e-15);
}

#[test]
fn hat_metric_regions_and_positivity() {
    let chart = crate::ambient::ProductChart {
        n: 2,
        coeffs: [
            Complex::new(0.0, 0.0),
            Complex::new(0.2, 0.1),
            Complex::new(0.3, -0.2),
        ],
    };
    let g = build_hat_metric(&Scaffold::Product(chart), 0.2, 0.5).unwrap();
    let outside = DVector::from_vec(vec![0.3, 0.1, 0.6, 0.2]);
    assert_eq!(g.eval(&outside), g.flat(&outside));
    let inside = DVector::from_vec(vec![0.3, 0.1, 0.05, 0.0]);
    assert_eq!(g.eval(&inside), g.product(&inside));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let r: f64 = rng.random_range(0.2..0.5);
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let x = DVector::from_vec(vec![
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            r * a.cos(),
            r * a.sin(),
        ]);
        let e = g.eval(&x).symmetric_eigen().eigenvalues.min();
        assert!(e > 0.0);
    }
    // flat affine scaffold: ĝ = g exactly in the plateau
    let affine = Scaffold::complex_plane(2, 1, Complex::new(0.5, 0.0));
    let ga = build_hat_metric(&affine, 0.2, 0.5).unwrap();
    let x = DVector::from_vec(vec![0.3, -0.4, 0.1, 0.0]);
    assert_eq!(ga.eval(&x), DMatrix::identity(4, 4));
    assert!(build_hat_metric(&Scaffold::quadric(2, 1.0), 0.2, 0.5).is_err());
    assert!(build_hat_metric(&affine, 0.5, 0.2).is_err());
}

#[test]
fn geodesics_with_tangent_data_stay_on_the_scaffold() {
    let w = Scaffold::Product(crate::ambient::ProductChart {
        n: 2,
        coeffs: [
            Complex::new(0.1, 0.0),
            Complex::new(0.2, 0.1),
            Complex::new(0.3, -0.2),
        ],
    });
    let g = build_hat_metric(&w, 0.2, 0.5).unwrap();
    let p = w
        .project(&DVector::from_vec(vec![0.3, 0.2, 0.5, 0.1]))
        .unwrap();
    let t = w.tangent_basis(&p);
    let v = t.column(0) * 0.7 + t.column(1) * 0.4;
    let path = geodesic_shoot(&g, &p, &v.into_owned(), 1.0, 1e-3).unwrap();
    let worst = path
        .iter()
        .map(|q| w.eval(q).residual())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst}");
    let moved = (path.last().unwrap() - &p).norm();
    assert!(moved > 0.1);
    // positive control: a velocity with an s-component leaves W
    let (e, _) = w.frame(&p, None).unwrap();
    let off = geodesic_shoot(&g, &p, &e, 1.0, 1e-2).unwrap();
    assert!(w.eval(off.last().unwrap()).residual() > 1e-3);
    // flat affine case: straight line inside W
    let affine = Scaffold::complex_plane(2, 1, Complex::new(0.5, 0.0));
    let ga = build_hat_metric(&affine, 0.2, 0.5).unwrap();
    let p = DVector::from_vec(vec![0.0, 0.0, 0.5, 0.0]);
    let v = DVector::from_vec(vec![1.0, -0.5, 0.0, 0.0]);
    let line = geodesic_shoot(&ga, &p, &v, 1.0, 1e-2).unwrap();
    assert!((line.last().unwrap() - (&p + &v)).norm() < 1e-12);
}
