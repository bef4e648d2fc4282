//! Built-in well-centered test meshes in the x-plane of C^2.

use std::f64::consts::PI;
use std::str::FromStr;

use delaunator::{triangulate, Point};
use nalgebra::DVector;

use super::{SimplicialPatch, MODULE};
use crate::error::{err, Error, ErrorKind, Result};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Unit disk.
    Disk,
    /// Annulus with radii 1 and 2.
    Annulus,
    /// Unit disk with two holes (a three-holed sphere).
    Pants,
    /// Unit circle in the z1-line times [0, 1] in x2: a Lagrangian cylinder
    /// whose two boundary circles lie on affine symplectic planes.
    Cylinder,
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disk" => Ok(Shape::Disk),
            "annulus" => Ok(Shape::Annulus),
            "pants" => Ok(Shape::Pants),
            "cylinder" => Ok(Shape::Cylinder),
            other => err(
                MODULE,
                "generate_mesh",
                ErrorKind::Invalid(format!("unknown shape `{other}`")),
            ),
        }
    }
}

/// Deterministic well-centered triangulation of `shape` at `resolution`
/// (number of segments on the outer boundary, or lattice cells across
/// the diameter for pants).
pub fn generate_mesh<T: Real>(shape: Shape, resolution: usize) -> Result<SimplicialPatch<T>> {
    if resolution < 4 {
        return err(MODULE, "generate_mesh", ErrorKind::Resolution(resolution));
    }
    let patch = match shape {
        Shape::Disk => {
            let (pts, tris) = disk(resolution);
            planar(pts, tris)?
        }
        Shape::Annulus => {
            let (pts, tris) = annulus(resolution);
            planar(pts, tris)?
        }
        Shape::Pants => {
            let (pts, tris) = pants(resolution);
            planar(pts, tris)?
        }
        Shape::Cylinder => cylinder(resolution)?,
    };
    if max_angle(&patch) >= PI / 2.0 - 1e-9 {
        return err(MODULE, "generate_mesh", ErrorKind::Resolution(resolution));
    }
    Ok(patch)
}

/// Largest interior angle over all triangles (radians); a triangle mesh is
/// well-centered iff this is below pi/2.
pub fn max_angle<T: Real>(m: &SimplicialPatch<T>) -> f64 {
    let mut worst = 0.0f64;
    for s in m.simplices() {
        if s.len() != 3 {
            return f64::NAN;
        }
        for i in 0..3 {
            let p = m.vertex(s[i]);
            let a = m.vertex(s[(i + 1) % 3]) - p;
            let b = m.vertex(s[(i + 2) % 3]) - p;
            let c = crate::scalar::to_f64(a.dot(&b) / (a.norm() * b.norm()));
            worst = worst.max(c.clamp(-1.0, 1.0).acos());
        }
    }
    worst
}

fn planar<T: Real>(pts: Vec<(f64, f64)>, mut tris: Vec<[usize; 3]>) -> Result<SimplicialPatch<T>> {
    for t in &mut tris {
        let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
        let area2 = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
        if area2 < 0.0 {
            t.swap(1, 2);
        }
    }
    let vertices = pts
        .iter()
        .map(|&(a, b)| super::x_plane_point::<T>(a, b))
        .collect();
    SimplicialPatch::new(2, vertices, tris.into_iter().map(|t| t.to_vec()).collect())
}

fn delaunay(pts: &[(f64, f64)]) -> Vec<[usize; 3]> {
    let points: Vec<Point> = pts.iter().map(|&(x, y)| Point { x, y }).collect();
    triangulate(&points)
        .triangles
        .chunks(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect()
}

fn disk(n: usize) -> (Vec<(f64, f64)>, Vec<[usize; 3]>) {
    let rings = (n as f64 / 8.0).round().max(1.0) as usize;
    let mut pts = vec![(0.0, 0.0)];
    for k in 1..=rings {
        let m = (n as f64 * k as f64 / rings as f64).round() as usize;
        let r = k as f64 / rings as f64;
        for j in 0..m {
            let a = 2.0 * PI * j as f64 / m as f64;
            pts.push((r * a.cos(), r * a.sin()));
        }
    }
    let tris = delaunay(&pts);
    (pts, tris)
}

/// Rings of `s` points each, rotated by half a segment from one ring to the
/// next; consecutive rings are joined by a strip of 2s triangles.
fn ring_strip(s: usize, layers: usize) -> Vec<[usize; 3]> {
    let mut tris = Vec::with_capacity(2 * s * layers);
    for j in 0..layers {
        let a = |i: usize| j * s + i % s;
        let b = |i: usize| (j + 1) * s + i % s;
        for i in 0..s {
            tris.push([a(i), a(i + 1), b(i)]);
            tris.push([a(i + 1), b(i + 1), b(i)]);
        }
    }
    tris
}

fn staggered_angle(s: usize, ring: usize, i: usize) -> f64 {
    (2.0 * i as f64 + ring as f64) * PI / s as f64
}

fn annulus(s: usize) -> (Vec<(f64, f64)>, Vec<[usize; 3]>) {
    let layers = (s as f64 / 8.0).round().max(1.0) as usize;
    let mut pts = Vec::with_capacity(s * (layers + 1));
    for j in 0..=layers {
        let r = 1.0 + j as f64 / layers as f64;
        for i in 0..s {
            let a = staggered_angle(s, j, i);
            pts.push((r * a.cos(), r * a.sin()));
        }
    }
    (pts, ring_strip(s, layers))
}

/// Equilateral lattice clipped to the unit disk minus two holes; triangles
/// are kept when their centroid lies in the domain.
fn pants(n: usize) -> (Vec<(f64, f64)>, Vec<[usize; 3]>) {
    const HOLES: [(f64, f64); 2] = [(-0.45, 0.0), (0.45, 0.0)];
    const HOLE_RADIUS: f64 = 0.22;
    let h = 2.0 / n as f64;
    let rows = (1.2 / (h * 3f64.sqrt() / 2.0)).ceil() as i64;
    let cols = (1.2 / h).ceil() as i64 + rows;
    let inside = |x: f64, y: f64| {
        x * x + y * y < 1.0
            && HOLES
                .iter()
                .all(|&(cx, cy)| (x - cx).powi(2) + (y - cy).powi(2) > HOLE_RADIUS * HOLE_RADIUS)
    };
    let pos = |i: i64, j: i64| {
        (
            (i as f64 + 0.5 * j as f64) * h,
            j as f64 * h * 3f64.sqrt() / 2.0,
        )
    };

    let mut index = std::collections::BTreeMap::new();
    let mut pts = Vec::new();
    let mut tris = Vec::new();
    let mut id = |i: i64, j: i64, pts: &mut Vec<(f64, f64)>| {
        *index.entry((j, i)).or_insert_with(|| {
            pts.push(pos(i, j));
            pts.len() - 1
        })
    };
    for j in -rows..rows {
        for i in -cols..cols {
            for tri in [
                [(i, j), (i + 1, j), (i, j + 1)],
                [(i + 1, j), (i + 1, j + 1), (i, j + 1)],
            ] {
                let c = tri.iter().fold((0.0, 0.0), |acc, &(a, b)| {
                    let p = pos(a, b);
                    (acc.0 + p.0 / 3.0, acc.1 + p.1 / 3.0)
                });
                if inside(c.0, c.1) {
                    let t = [
                        id(tri[0].0, tri[0].1, &mut pts),
                        id(tri[1].0, tri[1].1, &mut pts),
                        id(tri[2].0, tri[2].1, &mut pts),
                    ];
                    tris.push(t);
                }
            }
        }
    }
    (pts, tris)
}

fn cylinder<T: Real>(s: usize) -> Result<SimplicialPatch<T>> {
    let layers = (s as f64 / 8.0).round().max(1.0) as usize;
    let mut vertices = Vec::with_capacity(s * (layers + 1));
    for j in 0..=layers {
        let height = j as f64 / layers as f64;
        for i in 0..s {
            let a = staggered_angle(s, j, i);
            vertices.push(DVector::from_vec(vec![
                lit::<T>(a.cos()),
                lit(a.sin()),
                lit(height),
                T::zero(),
            ]));
        }
    }
    let tris = ring_strip(s, layers)
        .into_iter()
        .map(|t| t.to_vec())
        .collect();
    SimplicialPatch::new(2, vertices, tris)
}
