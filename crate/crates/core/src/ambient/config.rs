//! TOML description of a scaffold.
//!
//! ```toml
//! type = "quadric"
//! mu = [[1.0, 0.0], [1.0, 0.0]]   # complex coefficients as [re, im]
//! c = 1.0
//! ```
//!
//! Other forms: `type = "affine"` with `normals = [[...], [...]]` and
//! `offsets = [a, b]`; `type = "product"` with `n` and complex `a`, `b`, `c`
//! for `z_n = a + b z_1 + c z_1^2`; `type = "union"` with a `components`
//! array of tables.

use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex;
use serde::Deserialize;

use super::{ProductChart, Scaffold, MODULE};
use crate::error::{err, Error, ErrorKind, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScaffoldConfig {
    Quadric {
        mu: Vec<[f64; 2]>,
        c: f64,
    },
    Affine {
        normals: [Vec<f64>; 2],
        offsets: [f64; 2],
    },
    Product {
        n: usize,
        #[serde(default)]
        a: [f64; 2],
        #[serde(default)]
        b: [f64; 2],
        #[serde(default)]
        c: [f64; 2],
    },
    Union {
        components: Vec<ScaffoldConfig>,
    },
}

fn complex(v: [f64; 2]) -> Complex<f64> {
    Complex::new(v[0], v[1])
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    err(MODULE, "parse_scaffold", ErrorKind::Invalid(msg.into()))
}

impl ScaffoldConfig {
    pub fn build(&self) -> Result<Scaffold<f64>> {
        let all_finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            ScaffoldConfig::Quadric { mu, c } => {
                if mu.len() < 2 {
                    return invalid("quadric needs n >= 2 coefficients");
                }
                if !all_finite(&mu.concat()) || !c.is_finite() {
                    return invalid("non-finite quadric coefficient");
                }
                if mu.iter().any(|m| m[0] == 0.0 && m[1] == 0.0) {
                    return invalid("quadric coefficients must be non-zero");
                }
                Ok(Scaffold::Quadric {
                    mu: mu.iter().copied().map(complex).collect(),
                    c: *c,
                })
            }
            ScaffoldConfig::Affine { normals, offsets } => {
                let dim = normals[0].len();
                if dim < 4 || dim % 2 != 0 || normals[1].len() != dim {
                    return invalid("affine normals must share an even dimension >= 4");
                }
                if !all_finite(&normals.concat()) || !all_finite(offsets) {
                    return invalid("non-finite affine coefficient");
                }
                Ok(Scaffold::Affine {
                    normals: [
                        DVector::from_vec(normals[0].clone()),
                        DVector::from_vec(normals[1].clone()),
                    ],
                    offsets: *offsets,
                })
            }
            ScaffoldConfig::Product { n, a, b, c } => {
                if *n < 2 {
                    return invalid("product chart needs n >= 2");
                }
                if !all_finite(&[a[0], a[1], b[0], b[1], c[0], c[1]]) {
                    return invalid("non-finite product coefficient");
                }
                Ok(Scaffold::Product(ProductChart {
                    n: *n,
                    coeffs: [complex(*a), complex(*b), complex(*c)],
                }))
            }
            ScaffoldConfig::Union { components } => {
                if components.is_empty() {
                    return invalid("union needs at least one component");
                }
                let parts = components
                    .iter()
                    .map(ScaffoldConfig::build)
                    .collect::<Result<Vec<_>>>()?;
                let dim = parts[0].dim();
                if parts.iter().any(|p| p.dim() != dim) {
                    return invalid("union components have different dimensions");
                }
                Ok(Scaffold::Union(parts))
            }
        }
    }
}

pub fn parse_scaffold(text: &str) -> Result<Scaffold<f64>> {
    let cfg: ScaffoldConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| {
            text[..s.start.min(text.len())].lines().count().max(1)
        });
        Error::new(
            MODULE,
            "parse_scaffold",
            ErrorKind::Parse {
                line,
                message: e.message().to_string(),
            },
        )
    })?;
    cfg.build()
}

pub fn load_scaffold(path: &Path) -> Result<Scaffold<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::new(
            MODULE,
            "load_scaffold",
            ErrorKind::Io(format!("{}: {e}", path.display())),
        )
    })?;
    parse_scaffold(&text)
}
