//! The `slmesh` text format.
//!
//! ```text
//! slmesh <n> <V> <S>
//! <2n coordinates>      (V lines)
//! <n+1 vertex indices>  (S lines)
//! ```
//! Blank lines and `#` comments are ignored.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use sha2::{Digest, Sha256};

use super::{SimplicialPatch, MODULE};
use crate::error::{err, Error, ErrorKind, Result};
use crate::scalar::{to_f64, Real};

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    err(
        MODULE,
        "load_mesh",
        ErrorKind::Parse {
            line,
            message: message.into(),
        },
    )
}

/// Parses and validates a patch from `slmesh` text.
pub fn parse_mesh<T: Real>(text: &str) -> Result<SimplicialPatch<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let Some((hline, header)) = lines.next() else {
        return parse_err(1, "missing header");
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "slmesh" {
        return parse_err(hline, "expected `slmesh <n> <V> <S>`");
    }
    let mut counts = [0usize; 3];
    for (slot, f) in counts.iter_mut().zip(&fields[1..]) {
        *slot = f
            .parse()
            .or_else(|_| parse_err(hline, format!("bad count `{f}`")))?;
    }
    let [n, nv, ns] = counts;
    if n == 0 {
        return parse_err(hline, "intrinsic dimension must be positive");
    }

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let Some((ln, l)) = lines.next() else {
            return parse_err(
                text.lines().count(),
                "unexpected end of file in vertex block",
            );
        };
        let coords: Vec<f64> = l
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .or_else(|_| parse_err(ln, format!("bad coordinate `{t}`")))
            })
            .collect::<Result<_>>()?;
        if coords.len() != 2 * n {
            return parse_err(
                ln,
                format!("expected {} coordinates, found {}", 2 * n, coords.len()),
            );
        }
        let v: Option<Vec<T>> = coords.iter().map(|&x| T::from_f64(x)).collect();
        let Some(v) = v else {
            return parse_err(ln, "coordinate not representable");
        };
        vertices.push(DVector::from_vec(v));
    }

    let mut simplices = Vec::with_capacity(ns);
    for _ in 0..ns {
        let Some((ln, l)) = lines.next() else {
            return parse_err(
                text.lines().count(),
                "unexpected end of file in simplex block",
            );
        };
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .or_else(|_| parse_err(ln, format!("bad index `{t}`")))
            })
            .collect::<Result<_>>()?;
        if idx.len() != n + 1 {
            return parse_err(
                ln,
                format!("expected {} indices, found {}", n + 1, idx.len()),
            );
        }
        simplices.push(idx);
    }
    if let Some((ln, _)) = lines.next() {
        return parse_err(ln, "trailing content after simplex block");
    }
    SimplicialPatch::new(n, vertices, simplices)
}

/// Reads and validates a patch from an `slmesh` file.
pub fn load_mesh<T: Real>(path: impl AsRef<Path>) -> Result<SimplicialPatch<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::new(
            MODULE,
            "load_mesh",
            ErrorKind::Io(format!("{}: {e}", path.display())),
        )
    })?;
    parse_mesh(&text)
}

/// Canonical `slmesh` text with 17 significant digits per coordinate.
pub fn format_mesh<T: Real>(m: &SimplicialPatch<T>) -> String {
    let n = m.intrinsic_dim();
    let mut out = format!(
        "slmesh {} {} {}\n",
        n,
        m.vertices().len(),
        m.num_simplices(n)
    );
    for v in m.vertices() {
        let row: Vec<String> = v.iter().map(|&x| format!("{:.16e}", to_f64(x))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    for s in m.simplices() {
        let row: Vec<String> = s.iter().map(|i| i.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_mesh<T: Real>(m: &SimplicialPatch<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_mesh(m)).map_err(|e| {
        Error::new(
            MODULE,
            "write_mesh",
            ErrorKind::Io(format!("{}: {e}", path.display())),
        )
    })
}

/// Short content hash (first 16 hex digits of SHA-256 of the canonical text).
pub fn patch_hash<T: Real>(m: &SimplicialPatch<T>) -> String {
    let digest = Sha256::digest(format_mesh(m).as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "# one triangle\nslmesh 2 3 1\n0 0 0 0\n1 0 0 0\n\n0 0 1 0\n0 1 2\n";

    #[test]
    fn parses_single_triangle() {
        let m: SimplicialPatch<f64> = parse_mesh(TRIANGLE).unwrap();
        assert_eq!(m.vertices().len(), 3);
        assert_eq!(m.num_simplices(2), 1);
        assert_eq!(m.boundary_faces().len(), 3);
    }

    #[test]
    fn round_trip_preserves_hash() {
        let m: SimplicialPatch<f64> = parse_mesh(TRIANGLE).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.slmesh");
        write_mesh(&m, &p).unwrap();
        let back: SimplicialPatch<f64> = load_mesh(&p).unwrap();
        assert_eq!(patch_hash(&m), patch_hash(&back));
        assert_eq!(patch_hash(&m).len(), 16);
    }

    #[test]
    fn malformed_inputs_report_lines() {
        let e = parse_mesh::<f64>("slmesh 2 3 1\n0 0 0\n").unwrap_err();
        assert!(matches!(e.kind, ErrorKind::Parse { line: 2, .. }), "{e}");
        let e = parse_mesh::<f64>("mesh 2 3 1\n").unwrap_err();
        assert!(matches!(e.kind, ErrorKind::Parse { line: 1, .. }));
        let e = parse_mesh::<f64>("slmesh 2 3 1\n0 0 0 0\n1 0 0 0\n0 0 1 0\n0 1 x\n").unwrap_err();
        assert!(matches!(e.kind, ErrorKind::Parse { line: 5, .. }));
        let e = load_mesh::<f64>("/nonexistent/file.slmesh").unwrap_err();
        assert!(matches!(e.kind, ErrorKind::Io(_)));
    }

    #[test]
    fn repeated_triangle_fails_validation() {
        let e = parse_mesh::<f64>("slmesh 2 3 2\n0 0 0 0\n1 0 0 0\n0 0 1 0\n0 1 2\n0 1 2\n")
            .unwrap_err();
        assert!(matches!(e.kind, ErrorKind::NonOrientable { .. }));
        assert_eq!(e.module, "mesh");
    }
}
