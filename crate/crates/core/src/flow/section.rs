//! Sections `X = a¹ E + a² F` of the symplectic normal bundle `(TW)^ω`.
//!
//! Section files are TOML:
//!
//! ```toml
//! type = "samples"
//! points = [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]
//! a1 = [0.1, 0.1]
//! a2 = [0.0, 0.0]
//! ```
//!
//! Other forms: `type = "frame"` with constant `a1`, `a2`; `type = "radial"`
//! with `delta` (moves `Re F_1` by `delta`, i.e. the quadric `c ↦ c + δ`);
//! `type = "zero"`. The bare built-ins `radial(δ)` and `zero` are accepted
//! as the whole file.

use std::path::Path;

use nalgebra::DVector;
use serde::Deserialize;

use super::MODULE;
use crate::ambient::{omega, Scaffold};
use crate::error::{err, Error, ErrorKind, Result};
use crate::scalar::{lit, to_f64, Real};

/// Distance below which a query point is treated as a sample point.
const SAMPLE_HIT: f64 = 1e-14;
/// Samples must lie on the scaffold to this accuracy.
const SAMPLE_CONTAINMENT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum ScaffoldSection<T: Real> {
    /// `X ≡ 0`.
    Zero,
    /// Constant coefficients in the scaffold frame of
    /// [`Scaffold::frame`] without hint.
    Frame { a: [T; 2] },
    /// Coefficients at sample points. Between samples the sample vectors are
    /// blended with inverse-distance weights and projected symplectically
    /// onto `(T_qW)^ω`.
    Samples {
        points: Vec<DVector<T>>,
        coeffs: Vec<[T; 2]>,
        vectors: Vec<DVector<T>>,
    },
    /// `∇Re F_1 / |∇Re F_1|²`: unit rate of change of `Re F_1`, zero rate
    /// of `Im F_1`. The flow gain that realizes `F_1 ↦ F_1 - δ` is fitted
    /// when the Hamiltonian is built.
    Radial { delta: T },
}

impl<T: Real> ScaffoldSection<T> {
    pub fn frame(a1: T, a2: T) -> Self {
        ScaffoldSection::Frame { a: [a1, a2] }
    }

    pub fn radial(delta: T) -> Self {
        ScaffoldSection::Radial { delta }
    }

    /// Samples on `w` with their frame coefficients. Frames are propagated
    /// along the sample order so that `E` varies continuously.
    pub fn samples(w: &Scaffold<T>, points: Vec<DVector<T>>, coeffs: Vec<[T; 2]>) -> Result<Self> {
        const OP: &str = "scaffold_section";
        if points.is_empty() || points.len() != coeffs.len() {
            return err(
                MODULE,
                OP,
                ErrorKind::Invalid("need one coefficient pair per sample point".into()),
            );
        }
        let mut vectors = Vec::with_capacity(points.len());
        let mut hint: Option<DVector<T>> = None;
        for (i, (p, a)) in points.iter().zip(&coeffs).enumerate() {
            if p.len() != w.dim() {
                return err(
                    MODULE,
                    OP,
                    ErrorKind::Dimension {
                        expected: w.dim(),
                        got: p.len(),
                    },
                );
            }
            if !(a[0].is_finite() && a[1].is_finite() && p.iter().all(|c| c.is_finite())) {
                return err(
                    MODULE,
                    OP,
                    ErrorKind::Invalid(format!("sample {i} is not finite")),
                );
            }
            let containment = w.eval(p).residual();
            if to_f64(containment) > SAMPLE_CONTAINMENT {
                return err(
                    MODULE,
                    OP,
                    ErrorKind::Invalid(format!(
                        "sample {i} is off the scaffold by {:e}",
                        to_f64(containment)
                    )),
                );
            }
            let (e, f) = w.frame(p, hint.as_ref())?;
            vectors.push(&e * a[0] + &f * a[1]);
            hint = Some(e);
        }
        Ok(ScaffoldSection::Samples {
            points,
            coeffs,
            vectors,
        })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ScaffoldSection::Zero => true,
            ScaffoldSection::Frame { a } => a[0] == T::zero() && a[1] == T::zero(),
            ScaffoldSection::Samples { coeffs, .. } => coeffs
                .iter()
                .all(|a| a[0] == T::zero() && a[1] == T::zero()),
            ScaffoldSection::Radial { delta } => *delta == T::zero(),
        }
    }

    /// `X(q)` before any flow gain.
    pub fn eval(&self, w: &Scaffold<T>, q: &DVector<T>) -> Result<DVector<T>> {
        match self {
            ScaffoldSection::Zero => Ok(DVector::zeros(q.len())),
            ScaffoldSection::Frame { a } => {
                let (e, f) = w.frame(q, None)?;
                Ok(e * a[0] + f * a[1])
            }
            ScaffoldSection::Samples {
                points, vectors, ..
            } => {
                let mut blend = DVector::zeros(q.len());
                let mut total = T::zero();
                for (p, x) in points.iter().zip(vectors) {
                    let d2 = (q - p).norm_squared();
                    if d2.sqrt() < lit(SAMPLE_HIT) {
                        return Ok(x.clone());
                    }
                    let weight = T::one() / (d2 * d2);
                    blend += x * weight;
                    total += weight;
                }
                w.complement_part(q, &(blend / total))
            }
            ScaffoldSection::Radial { .. } => {
                let g = &w.eval(q).gradients[0];
                let n2 = g.norm_squared();
                if !(n2 > T::zero()) {
                    return err(
                        MODULE,
                        "scaffold_section",
                        ErrorKind::ScaffoldConditions("dF_1 vanishes".into()),
                    );
                }
                Ok(g / n2)
            }
        }
    }

    /// Frame coefficients `(a¹, a²) = (ω(X, F), ω(E, X))` of `X(q)`.
    pub fn coefficients(&self, w: &Scaffold<T>, q: &DVector<T>) -> Result<[T; 2]> {
        let x = self.eval(w, q)?;
        let (e, f) = w.frame(q, None)?;
        Ok([omega(&x, &f), omega(&e, &x)])
    }

    /// `sup |X|` over `points`.
    pub fn magnitude(&self, w: &Scaffold<T>, points: &[DVector<T>]) -> Result<T> {
        points
            .iter()
            .try_fold(T::zero(), |acc, q| Ok(acc.max(self.eval(w, q)?.norm())))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SectionConfig {
    Zero,
    Frame {
        a1: f64,
        a2: f64,
    },
    Radial {
        delta: f64,
    },
    Samples {
        points: Vec<Vec<f64>>,
        a1: Vec<f64>,
        a2: Vec<f64>,
    },
}

impl SectionConfig {
    pub fn build(&self, w: &Scaffold<f64>) -> Result<ScaffoldSection<f64>> {
        let invalid = |msg: &str| err(MODULE, "parse_section", ErrorKind::Invalid(msg.into()));
        match self {
            SectionConfig::Zero => Ok(ScaffoldSection::Zero),
            SectionConfig::Frame { a1, a2 } => {
                if !(a1.is_finite() && a2.is_finite()) {
                    return invalid("non-finite frame coefficient");
                }
                Ok(ScaffoldSection::frame(*a1, *a2))
            }
            SectionConfig::Radial { delta } => {
                if !delta.is_finite() {
                    return invalid("non-finite radial offset");
                }
                Ok(ScaffoldSection::radial(*delta))
            }
            SectionConfig::Samples { points, a1, a2 } => {
                if a1.len() != points.len() || a2.len() != points.len() {
                    return invalid("a1, a2 and points must have equal length");
                }
                let pts = points
                    .iter()
                    .map(|p| DVector::from_vec(p.clone()))
                    .collect();
                let coeffs = a1.iter().zip(a2).map(|(&x, &y)| [x, y]).collect();
                ScaffoldSection::samples(w, pts, coeffs)
            }
        }
    }
}

fn builtin(text: &str) -> Option<SectionConfig> {
    let t = text.trim();
    if t == "zero" {
        return Some(SectionConfig::Zero);
    }
    let arg = t.strip_prefix("radial(")?.strip_suffix(')')?;
    arg.trim()
        .parse()
        .ok()
        .map(|delta| SectionConfig::Radial { delta })
}

pub fn parse_section(text: &str) -> Result<SectionConfig> {
    if let Some(cfg) = builtin(text) {
        return Ok(cfg);
    }
    toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| {
            text[..s.start.min(text.len())].lines().count().max(1)
        });
        Error::new(
            MODULE,
            "parse_section",
            ErrorKind::Parse {
                line,
                message: e.message().to_string(),
            },
        )
    })
}

pub fn load_section(path: &Path) -> Result<SectionConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::new(
            MODULE,
            "load_section",
            ErrorKind::Io(format!("{}: {e}", path.display())),
        )
    })?;
    parse_section(&text)
}
