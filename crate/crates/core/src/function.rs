//! Piecewise-linear sampled functions: the universal function carrier.
//!
//! All downstream norms, variations, and oscillations are computed exactly
//! for this class, so assertions about them are statements about the carrier
//! rather than approximations.

use crate::error::Error;
use crate::Result;

/// Ordered abscissae plus values, interpreted piecewise-linearly between
/// consecutive abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl SampledFunction {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::invalid(
                "sampled function",
                format!("{} abscissae vs {} values", xs.len(), ys.len()),
            ));
        }
        if xs.len() < 2 {
            return Err(Error::invalid(
                "sampled function",
                "need at least two samples",
            ));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("sampled function", "non-finite sample"));
        }
        for (j, w) in xs.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::invalid(
                    "sampled function",
                    format!("abscissae not strictly increasing at index {}", j + 1),
                ));
            }
        }
        Ok(SampledFunction { xs, ys })
    }

    /// Samples a closure at `count` uniform abscissae over `[a, b]`.
    pub fn from_fn(a: f64, b: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::invalid("sample count", "need at least 2"));
        }
        let xs: Vec<f64> = (0..count)
            .map(|j| a + (b - a) * (j as f64) / ((count - 1) as f64))
            .collect();
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        SampledFunction::new(xs, ys)
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn lower(&self) -> f64 {
        self.xs[0]
    }

    pub fn upper(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn span(&self) -> f64 {
        self.upper() - self.lower()
    }

    pub fn value_at_lower(&self) -> f64 {
        self.ys[0]
    }

    pub fn value_at_upper(&self) -> f64 {
        *self.ys.last().unwrap()
    }

    /// Linear interpolation; exact at the abscissae themselves.
    ///
    /// `x` slightly outside the domain (within rounding of the endpoints) is
    /// clamped; callers guarding user input should check the domain first.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= *self.xs.last().unwrap() {
            return *self.ys.last().unwrap();
        }
        let hi = self.xs.partition_point(|t| *t <= x);
        let (x0, x1) = (self.xs[hi - 1], self.xs[hi]);
        if x == x0 {
            return self.ys[hi - 1];
        }
        let t = (x - x0) / (x1 - x0);
        self.ys[hi - 1] + (self.ys[hi] - self.ys[hi - 1]) * t
    }

    /// Exact sup norm of the piecewise-linear function (attained at a node).
    pub fn sup_norm(&self) -> f64 {
        self.ys.iter().fold(0.0, |m, y| m.max(y.abs()))
    }

    /// Exact total variation: sum of absolute value increments.
    pub fn total_variation(&self) -> f64 {
        self.ys.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn scale(&self, c: f64) -> SampledFunction {
        SampledFunction {
            xs: self.xs.clone(),
            ys: self.ys.iter().map(|y| c * y).collect(),
        }
    }

    /// Pointwise combination on the union of both breakpoint sets, which is
    /// exact for any affine combination of the two carriers.
    pub fn zip_with(
        &self,
        other: &SampledFunction,
        f: impl Fn(f64, f64) -> f64,
    ) -> SampledFunction {
        let xs = union_abscissae(&self.xs, &other.xs);
        let ys = xs.iter().map(|&x| f(self.eval(x), other.eval(x))).collect();
        SampledFunction { xs, ys }
    }

    pub fn add(&self, other: &SampledFunction) -> SampledFunction {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SampledFunction) -> SampledFunction {
        self.zip_with(other, |a, b| a - b)
    }

    /// Exact `sup |self - other|` over the common domain (the difference is
    /// piecewise linear on the union grid, so the sup sits on a node).
    pub fn max_abs_diff(&self, other: &SampledFunction) -> f64 {
        let xs = union_abscissae(&self.xs, &other.xs);
        xs.iter()
            .map(|&x| (self.eval(x) - other.eval(x)).abs())
            .fold(0.0, f64::max)
    }

    /// `sup |self - other|` restricted to this function's own nodes. For a
    /// grid carrier whose node values are exact this measures the operator
    /// error alone, without the carrier's interpolation error between nodes.
    pub fn sup_diff_at_nodes(&self, other: &SampledFunction) -> f64 {
        self.xs
            .iter()
            .zip(&self.ys)
            .map(|(&x, &y)| (y - other.eval(x)).abs())
            .fold(0.0, f64::max)
    }

    /// Affine rescale of the domain onto `[0, 1]`; values are untouched.
    pub fn to_unit_domain(&self) -> SampledFunction {
        let (a, span) = (self.lower(), self.span());
        let mut xs: Vec<f64> = self.xs.iter().map(|&x| (x - a) / span).collect();
        let last = xs.len() - 1;
        xs[0] = 0.0;
        xs[last] = 1.0;
        SampledFunction {
            xs,
            ys: self.ys.clone(),
        }
    }

    pub fn is_unit_domain(&self) -> bool {
        self.lower() == 0.0 && self.upper() == 1.0
    }

    /// Largest gap between consecutive abscissae.
    pub fn max_gap(&self) -> f64 {
        self.xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Exact oscillation (sup - inf) of the carrier over each of `cells`
    /// equal-width cells covering the domain.
    pub fn equal_cell_oscillations(&self, cells: usize) -> Vec<f64> {
        let (a, span) = (self.lower(), self.span());
        let width = span / cells as f64;
        let mut out = vec![0.0f64; cells];
        for (c, slot) in out.iter_mut().enumerate() {
            let lo = a + width * c as f64;
            let hi = if c + 1 == cells {
                self.upper()
            } else {
                a + width * (c + 1) as f64
            };
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for v in [self.eval(lo), self.eval(hi)] {
                min = min.min(v);
                max = max.max(v);
            }
            let start = self.xs.partition_point(|t| *t <= lo);
            for j in start..self.xs.len() {
                if self.xs[j] >= hi {
                    break;
                }
                min = min.min(self.ys[j]);
                max = max.max(self.ys[j]);
            }
            *slot = max - min;
        }
        out
    }
}

/// Union of two sorted abscissa lists with exact-duplicate removal.
pub fn union_abscissae(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => {
                if x <= y {
                    i += 1;
                    if x == y {
                        j += 1;
                    }
                    x
                } else {
                    j += 1;
                    y
                }
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => break,
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}

/// Exact oscillation of the pointwise product `f * g` over each of `cells`
/// equal-width cells. The product of two piecewise-linear functions is
/// piecewise quadratic; extrema are taken at piece endpoints and at interior
/// vertices of the quadratics.
pub fn product_cell_oscillations(
    f: &SampledFunction,
    g: &SampledFunction,
    cells: usize,
) -> Result<Vec<f64>> {
    if f.lower() != g.lower() || f.upper() != g.upper() {
        return Err(Error::invalid("product oscillation", "domains differ"));
    }
    let (a, b) = (f.lower(), f.upper());
    let width = (b - a) / cells as f64;
    // breakpoints of the product: union of both abscissa sets
    let breaks = union_abscissae(f.abscissae(), g.abscissae());
    let mut out = vec![0.0f64; cells];
    for (c, slot) in out.iter_mut().enumerate() {
        let lo = a + width * c as f64;
        let hi = if c + 1 == cells {
            b
        } else {
            a + width * (c + 1) as f64
        };
        // piece boundaries restricted to the cell
        let mut pts: Vec<f64> = vec![lo];
        let start = breaks.partition_point(|t| *t <= lo);
        for &t in &breaks[start..] {
            if t >= hi {
                break;
            }
            pts.push(t);
        }
        pts.push(hi);
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut consider = |v: f64| {
            min = min.min(v);
            max = max.max(v);
        };
        for w in pts.windows(2) {
            let (u, v) = (w[0], w[1]);
            consider(f.eval(u) * g.eval(u));
            consider(f.eval(v) * g.eval(v));
            // vertex of the quadratic piece, if interior
            let (fu, fv) = (f.eval(u), f.eval(v));
            let (gu, gv) = (g.eval(u), g.eval(v));
            let bf = (fv - fu) / (v - u);
            let bg = (gv - gu) / (v - u);
            if bf != 0.0 && bg != 0.0 {
                // h(t) = (fu + bf t)(gu + bg t), t in [0, v-u]
                let t_star = -(fu * bg + gu * bf) / (2.0 * bf * bg);
                if t_star > 0.0 && t_star < v - u {
                    consider((fu + bf * t_star) * (gu + bg * t_star));
                }
            }
        }
        *slot = max - min;
    }
    Ok(out)
}
