//! End-to-end runs through the public API: mesh files, the Hodge solver,
//! Newton onto a scaffold and scaffold continuation.

use nalgebra::DVector;

use slag::ambient::Scaffold;
use slag::dec::DecOperators;
use slag::deform::{best_fit_theta, newton_solve, Deformer, NewtonOptions};
use slag::flow::{continuation_solve, ContinuationOptions, ScaffoldSection};
use slag::hodge::HodgeSolver;
use slag::mesh::{generate_mesh, load_mesh, patch_hash, write_mesh, Shape, SimplicialPatch};
use slag::Patch;

/// Largest distance of a boundary vertex's (x1, x2) radius from `r`, and of
/// any vertex from the x-plane.
fn planar_circle_defect(m: &Patch, positions: &[DVector<f64>], r: f64) -> (f64, f64) {
    let radius = m
        .boundary_vertices()
        .into_iter()
        .map(|v| (positions[v][0].hypot(positions[v][2]) - r).abs())
        .fold(0.0, f64::max);
    let plane = positions
        .iter()
        .map(|p| p[1].abs().max(p[3].abs()))
        .fold(0.0, f64::max);
    (radius, plane)
}

#[test]
fn mesh_file_round_trip_keeps_hash_and_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pants.slmesh");
    let m: Patch = generate_mesh(Shape::Pants, 12).unwrap();
    write_mesh(&m, &path).unwrap();
    let back: Patch = load_mesh(&path).unwrap();
    assert_eq!(patch_hash(&m), patch_hash(&back));
    assert_eq!(m.simplices(), back.simplices());
    assert!(m
        .vertices()
        .iter()
        .zip(back.vertices())
        .all(|(a, b)| a == b));
}

#[test]
fn newton_reaches_the_larger_quadric() {
    // The x-plane disk meets z1² + z2² = 1.21 in the circle of radius 1.1,
    // and the flat disk is special Lagrangian.
    let m: Patch = generate_mesh(Shape::Disk, 12).unwrap();
    let w = Scaffold::quadric(2, 1.21);
    let d = Deformer::new(&m, &w).unwrap();
    let start = d
        .state(&DVector::zeros(d.space.dim()), best_fit_theta(&m).unwrap())
        .unwrap();
    let state = newton_solve(&d, &start, &[], &NewtonOptions::default()).unwrap();
    assert!(state.residual_norm() <= 1e-10);
    let (radius, plane) = planar_circle_defect(&m, &state.positions, 1.1);
    assert!(
        radius <= 1e-12 && plane <= 1e-12,
        "radius {radius:e}, plane {plane:e}"
    );
}

#[test]
fn continuation_path_ends_on_the_moved_circle() {
    let m: Patch = generate_mesh(Shape::Disk, 8).unwrap();
    let w = Scaffold::quadric(2, 1.0);
    let out = continuation_solve(
        &m,
        &w,
        &ScaffoldSection::radial(0.21),
        3,
        &ContinuationOptions::default(),
    )
    .unwrap();
    assert_eq!(out.path.len(), 4);
    assert_eq!(out.path[0].t, 0.0);
    assert!(out.path.windows(2).all(|p| p[0].t < p[1].t));
    assert!((out.path.last().unwrap().t - 1.0).abs() < 1e-15);
    let (radius, plane) = planar_circle_defect(&m, &out.state.positions, 1.1);
    assert!(
        radius <= 1e-6 && plane <= 1e-6,
        "radius {radius:e}, plane {plane:e}"
    );
}

#[test]
fn harmonic_forms_of_the_pants_are_closed_and_orthonormal() {
    let m: Patch = generate_mesh(Shape::Pants, 12).unwrap();
    let space = HodgeSolver::new(&m).unwrap().harmonic_space(1).unwrap();
    assert_eq!(space.dim(), 2);
    let ops = DecOperators::new(&m);
    let star = &ops.stars.as_ref().unwrap().diag[1];
    for (i, a) in space.forms.iter().enumerate() {
        assert!(ops.coboundary(a).unwrap().inf_norm() <= 1e-12);
        for (j, b) in space.forms.iter().enumerate() {
            let inner: f64 = a
                .values
                .iter()
                .zip(&b.values)
                .zip(star.iter())
                .map(|((x, y), s)| x * y * s)
                .sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!(
                (inner - expected).abs() <= 1e-10,
                "<eta_{i}, eta_{j}> = {inner}"
            );
        }
    }
}

#[test]
fn single_precision_finds_the_annulus_cycle() {
    let m: SimplicialPatch<f32> = generate_mesh(Shape::Annulus, 8).unwrap();
    let space = HodgeSolver::new(&m).unwrap().harmonic_space(1).unwrap();
    assert_eq!(space.dim(), 1);
}
