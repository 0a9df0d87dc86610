//! Partitions of an interval, the affine contraction maps onto the
//! subintervals, and refinement grids closed under the inverse maps.

use crate::error::Error;
use crate::Result;

/// Strictly increasing knot sequence `x_0 < x_1 < ... < x_N` on an interval.
///
/// Subinterval `i` (1-based, `i = 1..=N`) is `[x_{i-1}, x_i]`. Interval
/// indices are 1-based throughout the crate to match the usual notation for
/// interpolation data.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    knots: Vec<f64>,
}

impl Partition {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 3 {
            return Err(Error::TooFewKnots { got: knots.len() });
        }
        for (j, w) in knots.windows(2).enumerate() {
            if !w[0].is_finite() || !w[1].is_finite() || w[1] <= w[0] {
                return Err(Error::NonMonotoneKnots {
                    index: j + 1,
                    value: w[1],
                });
            }
        }
        Ok(Partition { knots })
    }

    /// Uniform partition of `[a, b]` into `n` subintervals.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewKnots { got: n + 1 });
        }
        if b.is_nan() || b <= a {
            return Err(Error::invalid("domain", format!("[{a}, {b}] is empty")));
        }
        let knots = (0..=n)
            .map(|j| a + (b - a) * (j as f64) / (n as f64))
            .collect();
        Partition::new(knots)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of subintervals `N`.
    pub fn n(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn lower(&self) -> f64 {
        self.knots[0]
    }

    pub fn upper(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Total length `x_N - x_0`.
    pub fn span(&self) -> f64 {
        self.upper() - self.lower()
    }

    /// Index `i in 1..=N` with `x in [x_{i-1}, x_i)`; `x = x_N` maps to `N`.
    ///
    /// Shared knots belong to the interval on their right, which keeps the
    /// assignment deterministic; well-definedness of the operators makes both
    /// candidate branches agree there anyway.
    pub fn locate_interval(&self, x: f64) -> Result<usize> {
        let (lo, hi) = (self.lower(), self.upper());
        if x.is_nan() || x < lo || x > hi {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        if x >= hi {
            return Ok(self.n());
        }
        // count of knots <= x equals the 1-based interval index
        let i = self.knots.partition_point(|k| *k <= x);
        Ok(i.max(1))
    }
}

/// The affine maps `l_i(x) = a_i x + e_i` sending `[x_0, x_N]` onto
/// `[x_{i-1}, x_i]`, plus their inverses `Q_i`.
#[derive(Debug, Clone)]
pub struct AffineMapFamily {
    slopes: Vec<f64>,
    offsets: Vec<f64>,
    lower: f64,
    upper: f64,
    knots: Vec<f64>,
}

impl AffineMapFamily {
    /// Solves the endpoint conditions `l_i(x_0) = x_{i-1}`, `l_i(x_N) = x_i`.
    pub fn from_partition(p: &Partition) -> Self {
        let span = p.span();
        let x0 = p.lower();
        let slopes: Vec<f64> = p.knots().windows(2).map(|w| (w[1] - w[0]) / span).collect();
        let offsets: Vec<f64> = p
            .knots()
            .windows(2)
            .zip(&slopes)
            .map(|(w, a)| w[0] - a * x0)
            .collect();
        AffineMapFamily {
            slopes,
            offsets,
            lower: x0,
            upper: p.upper(),
            knots: p.knots().to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.slopes.len()
    }

    /// Contraction factor `a_i` of interval `i` (1-based).
    pub fn slope(&self, i: usize) -> f64 {
        self.slopes[i - 1]
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.offsets[i - 1]
    }

    pub fn max_slope(&self) -> f64 {
        self.slopes.iter().cloned().fold(0.0, f64::max)
    }

    /// `l_i(x)`, mapping the full interval into subinterval `i`.
    pub fn forward(&self, i: usize, x: f64) -> f64 {
        self.slopes[i - 1] * x + self.offsets[i - 1]
    }

    /// `Q_i(x) = l_i^{-1}(x) = (x - e_i) / a_i`, with precondition `x in I_i`.
    pub fn inverse(&self, i: usize, x: f64) -> Result<f64> {
        let (lo, hi) = (self.knots[i - 1], self.knots[i]);
        let tol = 1e-12 * (self.upper - self.lower);
        if x < lo - tol || x > hi + tol {
            return Err(Error::OutOfInterval {
                x,
                interval: i,
                lo,
                hi,
            });
        }
        let q = (x - self.offsets[i - 1]) / self.slopes[i - 1];
        // rounding can push the image a few ulps outside the domain
        Ok(q.clamp(self.lower, self.upper))
    }
}

/// Builds a partition together with its affine map family.
///
/// `knots` must be strictly increasing with at least 3 entries.
pub fn build_partition(knots: Vec<f64>) -> Result<(Partition, AffineMapFamily)> {
    let p = Partition::new(knots)?;
    let maps = AffineMapFamily::from_partition(&p);
    Ok((p, maps))
}

/// All images `l_{i_1} o ... o l_{i_k}(x_j)` of the knots under words of
/// length `k <= depth`, sorted and deduplicated.
///
/// The resulting set is closed under every `Q_i` restricted to its interval:
/// applying `inverse` to a member lands on another member (knots fall onto
/// `{x_0, x_N}` after one step, which are fixed).
pub fn refinement_points(p: &Partition, maps: &AffineMapFamily, depth: usize) -> Vec<f64> {
    let dedup_tol = 1e-12 * p.span();
    let mut all: Vec<f64> = p.knots().to_vec();
    let mut current: Vec<f64> = p.knots().to_vec();
    for _ in 0..depth {
        let mut next = Vec::with_capacity(current.len() * maps.n());
        for i in 1..=maps.n() {
            for &x in &current {
                next.push(maps.forward(i, x));
            }
        }
        all.extend_from_slice(&next);
        current = next;
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup_by(|a, b| (*a - *b).abs() <= dedup_tol);
    all
}

/// A refinement grid with the pullback structure precomputed: for every grid
/// point `x`, the interval `i` containing it and the grid index of `Q_i(x)`.
///
/// Operator applications on such a grid are exact: no interpolation of the
/// iterated function is ever needed.
#[derive(Debug, Clone)]
pub struct RefinementGrid {
    points: Vec<f64>,
    interval_of: Vec<usize>,
    pullback: Vec<usize>,
    depth: usize,
}

impl RefinementGrid {
    pub fn build(p: &Partition, maps: &AffineMapFamily, depth: usize) -> Result<Self> {
        let points = refinement_points(p, maps, depth);
        let min_gap = points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let match_tol = (1e-9 * p.span()).min(min_gap / 4.0);
        let mut interval_of = Vec::with_capacity(points.len());
        let mut pullback = Vec::with_capacity(points.len());
        for &x in &points {
            let i = p.locate_interval(x)?;
            let xi = maps.inverse(i, x)?;
            let j = lookup(&points, xi, match_tol).ok_or(Error::GridNotClosed {
                interval: i,
                x,
                miss: nearest_miss(&points, xi),
            })?;
            interval_of.push(i);
            pullback.push(j);
        }
        Ok(RefinementGrid {
            points,
            interval_of,
            pullback,
            depth,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Interval index (1-based) of grid point `j`.
    pub fn interval_of(&self, j: usize) -> usize {
        self.interval_of[j]
    }

    /// Grid index of `Q_{i(j)}(x_j)`.
    pub fn pullback(&self, j: usize) -> usize {
        self.pullback[j]
    }
}

fn lookup(points: &[f64], x: f64, tol: f64) -> Option<usize> {
    let idx = points.partition_point(|p| *p < x);
    for j in [idx.wrapping_sub(1), idx] {
        if let Some(&p) = points.get(j) {
            if (p - x).abs() <= tol {
                return Some(j);
            }
        }
    }
    None
}

fn nearest_miss(points: &[f64], x: f64) -> f64 {
    points
        .iter()
        .map(|p| (p - x).abs())
        .fold(f64::INFINITY, f64::min)
}
