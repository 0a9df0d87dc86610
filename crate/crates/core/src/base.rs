//! Base functions `b_m`: given directly, or produced from the germ by a
//! built-in endpoint-preserving linear operator per level.

use std::borrow::Cow;

use crate::error::Error;
use crate::function::SampledFunction;
use crate::partition::Partition;
use crate::Result;

/// Built-in endpoint-preserving linear operators on the piecewise-linear
/// class. All three reproduce the germ's values at `x_0` and `x_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseOperator {
    /// Affine interpolant through `(x_0, f(x_0))` and `(x_N, f(x_N))`.
    Chord,
    /// Piecewise-linear interpolant of `f` at the partition knots.
    KnotPl,
    /// `(1 - t) * Chord + t * KnotPl`.
    Blend(f64),
}

impl BaseOperator {
    /// Applies the operator to `f`, producing a piecewise-linear function on
    /// the partition knots. Exact for the carrier class.
    pub fn apply(&self, f: &SampledFunction, p: &Partition) -> SampledFunction {
        let knots = p.knots().to_vec();
        let (a, b) = (p.lower(), p.upper());
        let (fa, fb) = (f.eval(a), f.eval(b));
        let chord = |x: f64| fa + (fb - fa) * (x - a) / (b - a);
        let ys: Vec<f64> = match *self {
            BaseOperator::Chord => knots.iter().map(|&x| chord(x)).collect(),
            BaseOperator::KnotPl => knots.iter().map(|&x| f.eval(x)).collect(),
            BaseOperator::Blend(t) => knots
                .iter()
                .map(|&x| (1.0 - t) * chord(x) + t * f.eval(x))
                .collect(),
        };
        SampledFunction::new(knots, ys).expect("knots are a valid abscissa set")
    }
}

/// One level of a base scheme.
#[derive(Debug, Clone)]
pub enum BaseFn {
    Direct(SampledFunction),
    Operator(BaseOperator),
}

/// Base functions per level: explicit list, extended by repeating the last
/// level. (A decaying tail would break the endpoint-matching requirement, so
/// base schemes only repeat.)
#[derive(Debug, Clone)]
pub struct BaseScheme {
    levels: Vec<BaseFn>,
}

impl BaseScheme {
    pub fn new(levels: Vec<BaseFn>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("base scheme", "no levels given"));
        }
        Ok(BaseScheme { levels })
    }

    /// Same operator for every level.
    pub fn operator(op: BaseOperator) -> Self {
        BaseScheme {
            levels: vec![BaseFn::Operator(op)],
        }
    }

    pub fn explicit_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn at(&self, m: usize) -> &BaseFn {
        debug_assert!(m >= 1);
        let idx = (m - 1).min(self.levels.len() - 1);
        &self.levels[idx]
    }

    pub fn level_independent(&self) -> bool {
        self.levels.len() == 1
            || self.levels.windows(2).all(|w| match (&w[0], &w[1]) {
                (BaseFn::Operator(a), BaseFn::Operator(b)) => a == b,
                (BaseFn::Direct(a), BaseFn::Direct(b)) => a == b,
                _ => false,
            })
    }

    /// The concrete `b_m` for a given germ: direct levels are passed through,
    /// operator levels are applied to `f`.
    pub fn materialize<'a>(
        &'a self,
        m: usize,
        f: &SampledFunction,
        p: &Partition,
    ) -> Cow<'a, SampledFunction> {
        match self.at(m) {
            BaseFn::Direct(b) => Cow::Borrowed(b),
            BaseFn::Operator(op) => Cow::Owned(op.apply(f, p)),
        }
    }

    /// Validates the endpoint-matching invariant `b_m(x_0) = f(x_0)`,
    /// `b_m(x_N) = f(x_N)` for every explicit level, and rejects direct base
    /// functions that coincide with the germ everywhere. Operator-produced
    /// bases may equal the germ (fixed points of the operator are a valid and
    /// interesting degenerate case).
    pub fn validate(&self, f: &SampledFunction, p: &Partition) -> Result<()> {
        let tol = 1e-9 * (1.0 + f.sup_norm());
        for m in 1..=self.levels.len() {
            let b = self.materialize(m, f, p);
            let off = (b.eval(p.lower()) - f.eval(p.lower()))
                .abs()
                .max((b.eval(p.upper()) - f.eval(p.upper())).abs());
            if off > tol {
                return Err(Error::BaseEndpointMismatch {
                    level: m,
                    offset: off,
                });
            }
            if let BaseFn::Direct(_) = self.at(m) {
                if b.max_abs_diff(f) == 0.0 {
                    return Err(Error::BaseEqualsGerm { level: m });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn germ() -> SampledFunction {
        SampledFunction::from_fn(0.0, 1.0, 65, |x| x * (1.0 - x)).unwrap()
    }

    #[test]
    fn builtins_match_endpoints() {
        let p = Partition::uniform(0.0, 1.0, 4).unwrap();
        let f = germ();
        for op in [
            BaseOperator::Chord,
            BaseOperator::KnotPl,
            BaseOperator::Blend(0.3),
        ] {
            let b = op.apply(&f, &p);
            assert_eq!(b.eval(0.0), f.eval(0.0));
            assert_eq!(b.eval(1.0), f.eval(1.0));
        }
    }

    #[test]
    fn knot_pl_reproduces_knot_values() {
        let p = Partition::new(vec![0.0, 0.25, 0.6, 1.0]).unwrap();
        let f = germ();
        let b = BaseOperator::KnotPl.apply(&f, &p);
        for &x in p.knots() {
            assert!((b.eval(x) - f.eval(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn blend_interpolates_between_chord_and_knot_pl() {
        let p = Partition::uniform(0.0, 1.0, 2).unwrap();
        let f = germ();
        let chord = BaseOperator::Chord.apply(&f, &p);
        let knot = BaseOperator::KnotPl.apply(&f, &p);
        let blend = BaseOperator::Blend(0.25).apply(&f, &p);
        for &x in p.knots() {
            let expect = 0.75 * chord.eval(x) + 0.25 * knot.eval(x);
            assert!((blend.eval(x) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn direct_base_equal_to_germ_is_rejected() {
        let p = Partition::uniform(0.0, 1.0, 2).unwrap();
        let f = germ();
        let scheme = BaseScheme::new(vec![BaseFn::Direct(f.clone())]).unwrap();
        assert!(matches!(
            scheme.validate(&f, &p),
            Err(Error::BaseEqualsGerm { level: 1 })
        ));
        // the chord of this germ differs from it, so the operator form passes
        let scheme = BaseScheme::operator(BaseOperator::Chord);
        scheme.validate(&f, &p).unwrap();
    }

    #[test]
    fn endpoint_mismatch_is_rejected() {
        let p = Partition::uniform(0.0, 1.0, 2).unwrap();
        let f = germ();
        let bad = SampledFunction::new(vec![0.0, 1.0], vec![0.5, 0.0]).unwrap();
        let scheme = BaseScheme::new(vec![BaseFn::Direct(bad)]).unwrap();
        assert!(matches!(
            scheme.validate(&f, &p),
            Err(Error::BaseEndpointMismatch { level: 1, .. })
        ));
    }
}
