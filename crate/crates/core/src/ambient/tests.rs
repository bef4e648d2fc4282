use super::*;
use crate::mesh::{boundary_data, generate_mesh, Shape};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn vec4() -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-2.0..2.0f64, 4).prop_map(DVector::from_vec)
}

proptest! {
    #[test]
    fn kahler_compatibility(u in vec4(), w in vec4()) {
        let amb = AmbientSpace::new(2);
        prop_assert!(amb.compatibility_defect(&u, &w) < 1e-12);
        prop_assert!((omega(&u, &w) + omega(&w, &u)).abs() < 1e-14);
        prop_assert!((omega(&u, &w) - u.dot(&(omega_matrix::<f64>(4) * &w))).abs() < 1e-12);
        prop_assert!((j_apply(&j_apply(&u)) + &u).norm() == 0.0);
    }

    #[test]
    fn alpha_rotates_with_unit_phase(phi in -3.0..3.0f64, a in 0.1..2.0f64, b in 0.1..2.0f64) {
        // rotating every complex coordinate by e^{iφ} multiplies α by e^{2iφ}
        let tri = [v(&[0.0, 0.0, 0.0, 0.0]), v(&[a, 0.0, 0.0, 0.0]), v(&[0.0, 0.0, b, 0.0])];
        let rot = |p: &DVector<f64>| {
            let (c, s) = (phi.cos(), phi.sin());
            v(&[c * p[0] - s * p[1], s * p[0] + c * p[1], c * p[2] - s * p[3], s * p[2] + c * p[3]])
        };
        let rtri: Vec<_> = tri.iter().map(rot).collect();
        let base = alpha_integral(&[&tri[0], &tri[1], &tri[2]], 0.0).unwrap();
        let turned = alpha_integral(&[&rtri[0], &rtri[1], &rtri[2]], 2.0 * phi).unwrap();
        prop_assert!((base - turned).norm() < 1e-12);
        prop_assert!((base.re - 0.5 * a * b).abs() < 1e-12);
    }
}

#[test]
fn standard_frame_and_triangle_integrals() {
    let amb = AmbientSpace::new(3);
    let one = amb.alpha_on_standard_frame::<f64>();
    assert_eq!((one.re, one.im), (1.0, 0.0));
    let p0 = v(&[0.0, 0.0, 0.0, 0.0]);
    let p1 = v(&[1.0, 0.0, 0.0, 0.0]);
    let p2 = v(&[0.0, 0.0, 1.0, 0.0]);
    assert_eq!(omega_integral(&[&p0, &p1, &p2]).unwrap(), 0.0);
    let a = alpha_integral(&[&p0, &p1, &p2], 0.0).unwrap();
    assert!((a.re - 0.5).abs() < 1e-15 && a.im.abs() < 1e-15);
    // a complex line carries area in ω, none in Re α
    let q2 = v(&[0.0, 1.0, 0.0, 0.0]);
    assert!((omega_integral(&[&p0, &p1, &q2]).unwrap() - 0.5).abs() < 1e-15);
    assert!(alpha_integral(&[&p0, &p1, &q2], 0.0).unwrap().norm() < 1e-15);
    let e = alpha_integral(&[&p0, &p1, &v(&[2.0, 0.0, 0.0, 0.0])], 0.0).unwrap_err();
    assert!(matches!(e.kind, ErrorKind::Degenerate { .. }));
    assert!(omega_eval(&p0, &v(&[1.0, 2.0])).is_err());
}

fn fd_check(w: &Scaffold<f64>, p: &DVector<f64>) {
    let ev = w.eval(p);
    let h = 1e-6;
    for k in 0..p.len() {
        let mut a = p.clone();
        let mut b = p.clone();
        a[k] += h;
        b[k] -= h;
        let (ea, eb) = (w.eval(&a), w.eval(&b));
        for i in 0..2 {
            let g = (ea.values[i] - eb.values[i]) / (2.0 * h);
            assert!((g - ev.gradients[i][k]).abs() < 1e-7, "gradient {i},{k}");
            let hc = (&ea.gradients[i] - &eb.gradients[i]) / (2.0 * h);
            assert!(
                (hc - ev.hessians[i].column(k)).norm() < 1e-7,
                "hessian {i},{k}"
            );
        }
    }
}

fn skewed_quadric() -> Scaffold<f64> {
    Scaffold::Quadric {
        mu: vec![
            num_complex::Complex::new(0.7, 0.4),
            num_complex::Complex::new(1.2, -0.3),
        ],
        c: 0.9,
    }
}

fn product() -> Scaffold<f64> {
    use num_complex::Complex;
    Scaffold::Product(ProductChart {
        n: 2,
        coeffs: [
            Complex::new(0.1, 0.2),
            Complex::new(0.5, -0.1),
            Complex::new(0.3, 0.05),
        ],
    })
}

#[test]
fn analytic_derivatives_match_finite_differences() {
    let p = v(&[0.8, -0.3, 0.4, 0.6]);
    fd_check(&skewed_quadric(), &p);
    fd_check(&product(), &p);
    fd_check(
        &Scaffold::complex_plane(2, 1, num_complex::Complex::new(0.5, -1.0)),
        &p,
    );
}

#[test]
fn projection_onto_quadric() {
    let w = Scaffold::quadric(2, 1.1);
    let q = w.project(&v(&[1.1, 0.0, 0.0, 0.0])).unwrap();
    assert!((q[0] - 1.1f64.sqrt()).abs() < 1e-12 && q.rows(1, 3).norm() < 1e-14);
    // c = 1 sends the same point to x1 = 1
    let q1 = Scaffold::quadric(2, 1.0)
        .project(&v(&[1.1, 0.0, 0.0, 0.0]))
        .unwrap();
    assert!((q1[0] - 1.0).abs() < 1e-12);
    let e = Scaffold::quadric(2, 1.0)
        .project(&v(&[0.0; 4]))
        .unwrap_err();
    assert!(matches!(e.kind, ErrorKind::Projection { .. }));
}

#[test]
fn projection_is_idempotent_and_orthogonal() {
    for w in [skewed_quadric(), product(), Scaffold::quadric(2, 1.0)] {
        let p = v(&[0.9, 0.2, 0.5, -0.4]);
        let q = w.project(&p).unwrap();
        assert!(w.eval(&q).residual() <= PROJECTION_TOL);
        let qq = w.project(&q).unwrap();
        assert!((&qq - &q).norm() < 1e-12);
        // p - q is normal to W
        let t = w.tangent_basis(&q);
        assert!((t.transpose() * (&p - &q)).norm() < 1e-10);
    }
}

#[test]
fn projection_jacobian_matches_finite_differences() {
    let w = skewed_quadric();
    let p = v(&[0.9, 0.2, 0.5, -0.4]);
    let jac = w.projection_jacobian(&p).unwrap();
    let h = 1e-6;
    let mut fd = DMatrix::zeros(4, 4);
    for k in 0..4 {
        let mut a = p.clone();
        let mut b = p.clone();
        a[k] += h;
        b[k] -= h;
        fd.set_column(
            k,
            &((w.project(&a).unwrap() - w.project(&b).unwrap()) / (2.0 * h)),
        );
    }
    assert!((jac - fd).norm() < 1e-7);
}

#[test]
fn frame_is_normalized_and_complementary() {
    for w in [skewed_quadric(), product(), Scaffold::quadric(3, 1.0)] {
        let dim = w.dim();
        let mut p = DVector::zeros(dim);
        p[0] = 1.3;
        p[2] = 0.4;
        let q = w.project(&p).unwrap();
        let (e, f) = w.frame(&q, None).unwrap();
        assert!((omega(&e, &f) - 1.0).abs() < 1e-12);
        let t = w.tangent_basis(&q);
        assert_eq!(t.ncols(), dim - 2);
        for c in 0..t.ncols() {
            let tc = t.column(c).into_owned();
            assert!(omega(&e, &tc).abs() < 1e-12 && omega(&f, &tc).abs() < 1e-12);
        }
        // a hint selects the nearby direction
        let (e2, _) = w.frame(&q, Some(&(-&e))).unwrap();
        assert!((&e2 + &e).norm() < 1e-12);
    }
}

#[test]
fn lagrangian_plane_is_not_symplectic() {
    let w = Scaffold::Affine {
        normals: [v(&[1.0, 0.0, 0.0, 0.0]), v(&[0.0, 0.0, 1.0, 0.0])],
        offsets: [0.0, 0.0],
    };
    let e = w.frame(&v(&[0.0, 0.3, 0.0, 0.1]), None).unwrap_err();
    assert!(matches!(e.kind, ErrorKind::NotSymplectic { .. }));
}

#[test]
fn product_chart_round_trip() {
    let Scaffold::Product(chart) = product() else {
        unreachable!()
    };
    let c = v(&[0.3, -0.2, 0.0, 0.0]);
    let p = chart.chart_to_point(&c);
    assert!(product().eval(&p).residual() < 1e-15);
    assert!((chart.point_to_chart(&p) - c).norm() < 1e-15);
}

#[test]
fn union_picks_nearest_component() {
    let w = Scaffold::Union(vec![
        Scaffold::quadric(2, 1.0),
        Scaffold::complex_plane(2, 1, num_complex::Complex::new(3.0, 0.0)),
    ]);
    let near_quadric = w.project(&v(&[1.05, 0.0, 0.0, 0.0])).unwrap();
    assert!((near_quadric[0] - 1.0).abs() < 1e-12);
    let near_plane = w.project(&v(&[0.0, 0.0, 2.9, 0.1])).unwrap();
    assert!((near_plane[2] - 3.0).abs() < 1e-14 && near_plane[3].abs() < 1e-14);
}

#[test]
fn disk_rim_satisfies_the_scaffold_conditions() {
    let m = generate_mesh(Shape::Disk, 16).unwrap();
    let b = boundary_data(&m).unwrap();
    let w = Scaffold::quadric(2, 1.0);
    let report = check_scaffold_conditions(&w, &m, &b);
    assert!(report.passes(), "{report}");
    assert_eq!(report.rows.len(), b.len());
    let frames = boundary_frames(&w, &m, &b).unwrap();
    assert_eq!(frames.len(), b.len());
    let text = report.to_string();
    assert!(text.starts_with("  vertex") && text.contains("pass"));
}

#[test]
fn displaced_rim_fails_containment() {
    let m = generate_mesh(Shape::Disk, 16).unwrap();
    let b = boundary_data(&m).unwrap();
    let bset: std::collections::HashSet<usize> = b.boundary_vertex_set.iter().copied().collect();
    let moved = m
        .with_vertices(
            m.vertices()
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    if bset.contains(&i) {
                        p * 1.1
                    } else {
                        p.clone()
                    }
                })
                .collect(),
        )
        .unwrap();
    let b2 = boundary_data(&moved).unwrap();
    let report = check_scaffold_conditions(&Scaffold::quadric(2, 1.0), &moved, &b2);
    assert!(!report.containment_ok());
    assert!(report.rows.iter().all(|r| r.containment >= 0.1));
}

#[test]
fn config_round_trip_and_errors() {
    let w = parse_scaffold("type = \"quadric\"\nmu = [[1.0, 0.0], [1.0, 0.0]]\nc = 1.0\n").unwrap();
    assert_eq!(w, Scaffold::quadric(2, 1.0));
    let u = parse_scaffold(
        "type = \"union\"\n[[components]]\ntype = \"quadric\"\nmu = [[1.0, 0.0], [1.0, 0.0]]\nc = 1.0\n\
         [[components]]\ntype = \"product\"\nn = 2\na = [3.0, 0.0]\n",
    )
    .unwrap();
    assert_eq!(u.components().len(), 2);
    let e = parse_scaffold("type = \"sphere\"\n").unwrap_err();
    assert!(matches!(e.kind, ErrorKind::Parse { line: 1, .. }), "{e}");
    assert!(
        parse_scaffold("type = \"quadric\"\nmu = [[0.0, 0.0], [1.0, 0.0]]\nc = 1.0\n").is_err()
    );
    assert!(load_scaffold(std::path::Path::new("/nonexistent/w.toml")).is_err());
}
