//! The adapted metric `ĝ = bump·g_1 + (1 - bump)·g` near a scaffold given
//! in product-chart form, and its geodesics.
//!
//! In chart coordinates `x = (w, s)` with `p = ψ(w, s) = (w, s + f(w_1))`,
//! `g = Dψᵀ Dψ` is the flat metric and `g_1` is the product of the induced
//! metric on `W = {s = 0}` with `ds¹² + ds²²`. The cutoff is called `bump`
//! (the usual name η is taken by the 1-forms).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use super::MODULE;
use crate::ambient::{ProductChart, Scaffold};
use crate::error::{err, ErrorKind, Result};
use crate::scalar::{lit, to_f64, Real};

/// Quintic smoothstep cutoff: 1 on `[0, r_in]`, 0 on `[r_out, ∞)`.
pub fn bump<T: Real>(r: T, r_in: T, r_out: T) -> T {
    if r <= r_in {
        return T::one();
    }
    if r >= r_out {
        return T::zero();
    }
    let s = (r - r_in) / (r_out - r_in);
    let s3 = s * s * s;
    T::one() - s3 * (lit::<T>(10.0) - lit::<T>(15.0) * s + lit::<T>(6.0) * s * s)
}

#[derive(Debug, Clone)]
pub struct HatMetric<T: Real> {
    pub chart: ProductChart<T>,
    pub r_in: T,
    pub r_out: T,
}

impl<T: Real> HatMetric<T> {
    pub fn dim(&self) -> usize {
        2 * self.chart.n
    }

    /// `Dψ` at chart coordinates `x`.
    pub fn chart_jacobian(&self, x: &DVector<T>) -> DMatrix<T> {
        let dim = self.dim();
        let mut j = DMatrix::identity(dim, dim);
        let fp = self.chart.df(Complex::new(x[0], x[1]));
        let last = dim - 2;
        j[(last, 0)] += fp.re;
        j[(last, 1)] -= fp.im;
        j[(last + 1, 0)] += fp.im;
        j[(last + 1, 1)] += fp.re;
        j
    }

    /// Flat metric in chart coordinates.
    pub fn flat(&self, x: &DVector<T>) -> DMatrix<T> {
        let j = self.chart_jacobian(x);
        j.transpose() * j
    }

    /// Product metric `g_1`: induced metric on W plus `ds¹² + ds²²`.
    pub fn product(&self, x: &DVector<T>) -> DMatrix<T> {
        let mut g = self.flat(x);
        let dim = self.dim();
        let last = dim - 2;
        for r in 0..dim {
            for c in 0..dim {
                let (rs, cs) = (r >= last, c >= last);
                if rs != cs {
                    g[(r, c)] = T::zero();
                } else if rs && cs {
                    g[(r, c)] = if r == c { T::one() } else { T::zero() };
                }
            }
        }
        g
    }

    pub fn cutoff(&self, x: &DVector<T>) -> T {
        let last = self.dim() - 2;
        bump(x[last].hypot(x[last + 1]), self.r_in, self.r_out)
    }

    /// `ĝ` in chart coordinates.
    pub fn eval(&self, x: &DVector<T>) -> DMatrix<T> {
        let b = self.cutoff(x);
        self.product(x) * b + self.flat(x) * (T::one() - b)
    }

    /// `ĝ` at an ambient point, in chart coordinates.
    pub fn eval_at_point(&self, p: &DVector<T>) -> DMatrix<T> {
        self.eval(&self.chart.point_to_chart(p))
    }

    /// Geodesic acceleration `-Γ(v, v)` with Christoffel symbols from
    /// central differences of the metric.
    fn acceleration(&self, x: &DVector<T>, v: &DVector<T>) -> Result<DVector<T>> {
        let dim = self.dim();
        let h = lit::<T>(1e-6);
        let derivs: Vec<DMatrix<T>> = (0..dim)
            .map(|l| {
                let mut a = x.clone();
                let mut b = x.clone();
                a[l] += h;
                b[l] -= h;
                (self.eval(&a) - self.eval(&b)) / (h + h)
            })
            .collect();
        // term_l = 2 Σ_i v^i (∂_i g · v)_l - vᵀ ∂_l g v
        let mut term = DVector::zeros(dim);
        for (i, di) in derivs.iter().enumerate() {
            term += di * v * (v[i] + v[i]);
        }
        for (l, dl) in derivs.iter().enumerate() {
            term[l] -= v.dot(&(dl * v));
        }
        let g = self.eval(x);
        let Some(chol) = g.cholesky() else {
            return err(
                MODULE,
                "geodesic_shoot",
                ErrorKind::Invalid("metric lost positive definiteness".into()),
            );
        };
        Ok(chol.solve(&term) * lit::<T>(-0.5))
    }
}

/// `ĝ` for a product-chart scaffold. An affine scaffold `{z_n = w}` is
/// accepted as the constant graph.
pub fn build_hat_metric<T: Real>(w: &Scaffold<T>, r_in: T, r_out: T) -> Result<HatMetric<T>> {
    const OP: &str = "build_hat_metric";
    if !(r_in > T::zero() && r_out > r_in) {
        return err(
            MODULE,
            OP,
            ErrorKind::Invalid("cutoff radii must satisfy 0 < r_in < r_out".into()),
        );
    }
    let chart = match w {
        Scaffold::Product(chart) => chart.clone(),
        Scaffold::Affine { normals, offsets } => {
            let dim = normals[0].len();
            let unit =
                |i: usize| DVector::from_fn(dim, |r, _| if r == i { T::one() } else { T::zero() });
            if normals[0] != unit(dim - 2) || normals[1] != unit(dim - 1) {
                return err(
                    MODULE,
                    OP,
                    ErrorKind::Invalid("affine scaffold is not of the form z_n = const".into()),
                );
            }
            let zero = Complex::new(T::zero(), T::zero());
            ProductChart {
                n: dim / 2,
                coeffs: [Complex::new(offsets[0], offsets[1]), zero, zero],
            }
        }
        _ => {
            return err(
                MODULE,
                OP,
                ErrorKind::Invalid("scaffold has no product chart".into()),
            )
        }
    };
    if chart.n < 2 {
        return err(
            MODULE,
            OP,
            ErrorKind::Invalid("product chart needs n >= 2".into()),
        );
    }
    Ok(HatMetric { chart, r_in, r_out })
}

/// RK4 integration of the `ĝ`-geodesic from ambient point `p` with ambient
/// velocity `v` over time `t_end` with step `dt`; returns ambient points.
pub fn geodesic_shoot<T: Real>(
    metric: &HatMetric<T>,
    p: &DVector<T>,
    v: &DVector<T>,
    t_end: T,
    dt: T,
) -> Result<Vec<DVector<T>>> {
    const OP: &str = "geodesic_shoot";
    let dim = metric.dim();
    if p.len() != dim || v.len() != dim {
        return err(
            MODULE,
            OP,
            ErrorKind::Dimension {
                expected: dim,
                got: p.len().min(v.len()),
            },
        );
    }
    if !(dt > T::zero()) {
        return err(
            MODULE,
            OP,
            ErrorKind::Invalid("step must be positive".into()),
        );
    }
    let mut x = metric.chart.point_to_chart(p);
    let mut u = metric.chart_jacobian(&x).lu().solve(v).ok_or_else(|| {
        crate::Error::new(MODULE, OP, ErrorKind::Invalid("chart is singular".into()))
    })?;
    let steps = to_f64(t_end / dt).round().max(1.0) as usize;
    let h = t_end / lit(steps as f64);
    let half = lit::<T>(0.5);
    let mut path = Vec::with_capacity(steps + 1);
    path.push(metric.chart.chart_to_point(&x));
    for _ in 0..steps {
        let k1x = u.clone();
        let k1v = metric.acceleration(&x, &u)?;
        let k2x = &u + &k1v * (h * half);
        let k2v = metric.acceleration(&(&x + &k1x * (h * half)), &k2x)?;
        let k3x = &u + &k2v * (h * half);
        let k3v = metric.acceleration(&(&x + &k2x * (h * half)), &k3x)?;
        let k4x = &u + &k3v * h;
        let k4v = metric.acceleration(&(&x + &k3x * h), &k4x)?;
        let sixth = h / lit(6.0);
        x += (k1x + (k2x + k3x) * lit::<T>(2.0) + k4x) * sixth;
        u += (k1v + (k2v + k3v) * lit::<T>(2.0) + k4v) * sixth;
        if !x.iter().all(|c| c.is_finite()) {
            return err(MODULE, OP, ErrorKind::Invalid("path left the chart".into()));
        }
        path.push(metric.chart.chart_to_point(&x));
    }
    Ok(path)
}
