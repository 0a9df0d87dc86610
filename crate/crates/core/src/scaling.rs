//! Level- and interval-indexed scaling functions `alpha_{i,m}` with a uniform
//! sup bound below 1.

use crate::error::Error;
use crate::Result;

/// A single scaling function on the base interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingFn {
    Constant(f64),
    /// `alpha(x) = p + q * x`
    Affine {
        p: f64,
        q: f64,
    },
}

impl ScalingFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ScalingFn::Constant(c) => c,
            ScalingFn::Affine { p, q } => p + q * x,
        }
    }

    /// Exact `sup |alpha|` over `[lo, hi]` (attained at an endpoint).
    pub fn sup_abs(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            ScalingFn::Constant(c) => c.abs(),
            ScalingFn::Affine { p, q } => (p + q * lo).abs().max((p + q * hi).abs()),
        }
    }

    /// `|alpha(lo)| + V(alpha, [lo, hi])`, exact for this class.
    pub fn bv_norm(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            ScalingFn::Constant(c) => c.abs(),
            ScalingFn::Affine { p, q } => (p + q * lo).abs() + (q * (hi - lo)).abs(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(
            self,
            ScalingFn::Constant(_) | ScalingFn::Affine { q: 0.0, .. }
        )
    }

    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            ScalingFn::Constant(c) => Some(c),
            ScalingFn::Affine { p, q: 0.0 } => Some(p),
            _ => None,
        }
    }

    fn scaled(&self, factor: f64) -> ScalingFn {
        match *self {
            ScalingFn::Constant(c) => ScalingFn::Constant(c * factor),
            ScalingFn::Affine { p, q } => ScalingFn::Affine {
                p: p * factor,
                q: q * factor,
            },
        }
    }
}

/// Extension rule for levels past the explicitly listed ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailRule {
    RepeatLast,
    /// Multiply the last explicit level by `factor^(m - M)`; `factor` must
    /// stay in `(0, 1]` so the sup bound is preserved.
    GeometricDecay(f64),
}

/// Scaling functions for every interval `i` and level `m`, given as explicit
/// levels plus a tail rule. `sup |alpha| < 1` is enforced at construction.
#[derive(Debug, Clone)]
pub struct ScalingScheme {
    levels: Vec<Vec<ScalingFn>>,
    tail: TailRule,
    max_level: usize,
    sup: f64,
    domain: (f64, f64),
}

/// Default cap on the number of levels a driver will ever request;
/// `0.99^64` is already far below every practical tolerance.
pub const DEFAULT_MAX_LEVEL: usize = 64;

impl ScalingScheme {
    pub fn new(
        levels: Vec<Vec<ScalingFn>>,
        tail: TailRule,
        domain: (f64, f64),
        n_intervals: usize,
    ) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("scaling scheme", "no levels given"));
        }
        for (m, level) in levels.iter().enumerate() {
            if level.len() != n_intervals {
                return Err(Error::invalid(
                    "scaling scheme",
                    format!(
                        "level {} has {} entries, partition has {} intervals",
                        m + 1,
                        level.len(),
                        n_intervals
                    ),
                ));
            }
        }
        if let TailRule::GeometricDecay(f) = tail {
            if f.is_nan() || f <= 0.0 || f > 1.0 {
                return Err(Error::invalid(
                    "tail rule",
                    format!("geometric decay factor {f} outside (0, 1]"),
                ));
            }
        }
        let sup = levels
            .iter()
            .flatten()
            .map(|a| a.sup_abs(domain.0, domain.1))
            .fold(0.0, f64::max);
        if !sup.is_finite() || sup >= 1.0 {
            return Err(Error::ScalingNotContractive { sup });
        }
        Ok(ScalingScheme {
            levels,
            tail,
            max_level: DEFAULT_MAX_LEVEL,
            sup,
            domain,
        })
    }

    /// Uniform constant scheme: the same factor for every interval and level.
    pub fn constant(c: f64, domain: (f64, f64), n_intervals: usize) -> Result<Self> {
        ScalingScheme::new(
            vec![vec![ScalingFn::Constant(c); n_intervals]],
            TailRule::RepeatLast,
            domain,
            n_intervals,
        )
    }

    pub fn with_max_level(mut self, cap: usize) -> Self {
        self.max_level = cap.max(1);
        self
    }

    pub fn n_intervals(&self) -> usize {
        self.levels[0].len()
    }

    pub fn explicit_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn tail(&self) -> TailRule {
        self.tail
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// `sup_{m,i} sup_x |alpha_{i,m}(x)|`, finite by construction.
    pub fn sup_norm(&self) -> f64 {
        self.sup
    }

    /// The scaling function for interval `i` (1-based) at level `m` (1-based).
    pub fn at(&self, i: usize, m: usize) -> ScalingFn {
        debug_assert!(m >= 1 && i >= 1 && i <= self.n_intervals());
        let explicit = self.levels.len();
        if m <= explicit {
            self.levels[m - 1][i - 1]
        } else {
            let last = self.levels[explicit - 1][i - 1];
            match self.tail {
                TailRule::RepeatLast => last,
                TailRule::GeometricDecay(f) => last.scaled(f.powi((m - explicit) as i32)),
            }
        }
    }

    /// True when every scaling function is constant in `x`.
    pub fn all_constant(&self) -> bool {
        self.levels.iter().flatten().all(ScalingFn::is_constant)
    }

    /// True when the scheme does not depend on the level at all.
    pub fn level_independent(&self) -> bool {
        self.levels.windows(2).all(|w| w[0] == w[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_norm_and_contractivity_gate() {
        let s = ScalingScheme::new(
            vec![vec![
                ScalingFn::Constant(0.4),
                ScalingFn::Affine { p: 0.1, q: 0.5 },
            ]],
            TailRule::RepeatLast,
            (0.0, 1.0),
            2,
        )
        .unwrap();
        assert_eq!(s.sup_norm(), 0.6);

        assert!(matches!(
            ScalingScheme::constant(1.0, (0.0, 1.0), 2),
            Err(Error::ScalingNotContractive { .. })
        ));
    }

    #[test]
    fn tail_rules() {
        let levels = vec![
            vec![ScalingFn::Constant(0.5)],
            vec![ScalingFn::Constant(0.25)],
        ];
        let repeat =
            ScalingScheme::new(levels.clone(), TailRule::RepeatLast, (0.0, 1.0), 1).unwrap();
        assert_eq!(repeat.at(1, 5), ScalingFn::Constant(0.25));

        let decay =
            ScalingScheme::new(levels, TailRule::GeometricDecay(0.5), (0.0, 1.0), 1).unwrap();
        assert_eq!(decay.at(1, 2), ScalingFn::Constant(0.25));
        assert_eq!(decay.at(1, 4), ScalingFn::Constant(0.0625));

        assert!(ScalingScheme::new(
            vec![vec![ScalingFn::Constant(0.5)]],
            TailRule::GeometricDecay(1.5),
            (0.0, 1.0),
            1
        )
        .is_err());
    }

    #[test]
    fn affine_bv_norm_is_offset_plus_variation() {
        let a = ScalingFn::Affine { p: 0.05, q: 0.05 };
        assert!((a.bv_norm(0.0, 1.0) - 0.1).abs() < 1e-15);
    }
}
