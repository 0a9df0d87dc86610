//! The linear fractal operator `F: f -> f_b^alpha` obtained by coupling the
//! base functions to the input through endpoint-preserving linear operators
//! `b_m = L_m f`, together with numerical verification of its perturbation
//! bound, linearity, lower bound, and Neumann-series inversion.

use crate::base::{BaseFn, BaseOperator, BaseScheme};
use crate::engine::{build_fractal, FractalSpec};
use crate::error::Error;
use crate::function::SampledFunction;
use crate::partition::{AffineMapFamily, Partition, RefinementGrid};
use crate::scaling::ScalingScheme;
use crate::Result;

/// Configuration of the fractal operator: partition, scaling scheme, the
/// per-level base operator family, and an upper bound `C_L` for
/// `sup_m ||Id - L_m||`.
///
/// The built-in operators are interpolating projections with norm 1 on the
/// piecewise-linear class, so the conservative default `C_L = 2` is always a
/// valid bound. Sharp per-input checks use the measured `sup_m ||f - L_m f||`
/// instead; `C_L` only gates the contraction precondition.
#[derive(Debug, Clone)]
pub struct OperatorConfig {
    partition: Partition,
    maps: AffineMapFamily,
    scaling: ScalingScheme,
    base_ops: Vec<BaseOperator>,
    c_l: f64,
}

pub const DEFAULT_C_L: f64 = 2.0;

impl OperatorConfig {
    pub fn new(
        partition: Partition,
        maps: AffineMapFamily,
        scaling: ScalingScheme,
        base_ops: Vec<BaseOperator>,
        c_l: f64,
    ) -> Result<Self> {
        if base_ops.is_empty() {
            return Err(Error::invalid("operator config", "no base operators"));
        }
        if !c_l.is_finite() || c_l <= 0.0 {
            return Err(Error::invalid("C_L", "must be positive"));
        }
        Ok(OperatorConfig {
            partition,
            maps,
            scaling,
            base_ops,
            c_l,
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn scaling(&self) -> &ScalingScheme {
        &self.scaling
    }

    pub fn base_ops(&self) -> &[BaseOperator] {
        &self.base_ops
    }

    pub fn c_l(&self) -> f64 {
        self.c_l
    }

    /// `L_m` for a 1-based level, repeating the last explicit operator.
    pub fn base_op(&self, m: usize) -> BaseOperator {
        self.base_ops[(m - 1).min(self.base_ops.len() - 1)]
    }

    /// Threshold `1/(1+C_L)` of the contraction precondition.
    pub fn contraction_threshold(&self) -> f64 {
        1.0 / (1.0 + self.c_l)
    }

    fn require_contraction(&self) -> Result<()> {
        let sup = self.scaling.sup_norm();
        let threshold = self.contraction_threshold();
        if sup >= threshold {
            return Err(Error::ContractionConditionViolated {
                alpha_sup: sup,
                threshold,
            });
        }
        Ok(())
    }

    /// The fractal spec for a concrete input, with `b_m = L_m f`.
    pub fn spec_for(&self, f: &SampledFunction) -> Result<FractalSpec> {
        let base = BaseScheme::new(
            self.base_ops
                .iter()
                .map(|op| BaseFn::Operator(*op))
                .collect(),
        )?;
        FractalSpec::new(
            f.clone(),
            self.partition.clone(),
            self.maps.clone(),
            self.scaling.clone(),
            base,
        )
    }

    /// Measured `sup_m ||f - L_m f||`, exact on the piecewise-linear class.
    pub fn sup_base_distance(&self, f: &SampledFunction) -> f64 {
        (1..=self.base_ops.len())
            .map(|m| self.base_op(m).apply(f, &self.partition).max_abs_diff(f))
            .fold(0.0, f64::max)
    }
}

/// Applies the fractal operator: returns `f_b^alpha` on the depth-`depth`
/// refinement grid.
pub fn apply_operator(
    f: &SampledFunction,
    cfg: &OperatorConfig,
    depth: usize,
    tol: f64,
) -> Result<SampledFunction> {
    let spec = cfg.spec_for(f)?;
    let report = build_fractal(&spec, depth, spec.scaling().max_level(), tol)?;
    Ok(report.final_fn)
}

/// Perturbation bound report: the measured distance `||f_b^alpha - f||` on
/// the grid against the geometric-series bound, in both the sharp
/// `sup_m ||f - L_m f||` form and the `C_L ||f||` relaxation.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub measured: f64,
    /// `alpha_sup / (1 - alpha_sup) * sup_m ||f - L_m f||`
    pub bound_sup_form: f64,
    /// `alpha_sup / (1 - alpha_sup) * C_L * ||f||`
    pub bound_cl_form: f64,
    pub slack: f64,
    pub pass: bool,
}

pub fn perturbation_report(
    f: &SampledFunction,
    cfg: &OperatorConfig,
    depth: usize,
    tol: f64,
) -> Result<BoundReport> {
    let fractal = apply_operator(f, cfg, depth, tol)?;
    let measured = fractal.sup_diff_at_nodes(f);
    let sup = cfg.scaling.sup_norm();
    let factor = if sup == 0.0 { 0.0 } else { sup / (1.0 - sup) };
    let bound_sup_form = factor * cfg.sup_base_distance(f);
    let bound_cl_form = factor * cfg.c_l * f.sup_norm();
    let slack = bound_sup_form - measured;
    let pass = measured <= bound_sup_form + 1e-9 && measured <= bound_cl_form + 1e-9;
    Ok(BoundReport {
        measured,
        bound_sup_form,
        bound_cl_form,
        slack,
        pass,
    })
}

/// `sup |F(cf + dg) - c F(f) - d F(g)|` over the grid.
pub fn check_linearity(
    f: &SampledFunction,
    g: &SampledFunction,
    c: f64,
    d: f64,
    cfg: &OperatorConfig,
    depth: usize,
    tol: f64,
) -> Result<f64> {
    let combo = f.zip_with(g, |a, b| c * a + d * b);
    let lhs = apply_operator(&combo, cfg, depth, tol)?;
    let ff = apply_operator(f, cfg, depth, tol)?;
    let fg = apply_operator(g, cfg, depth, tol)?;
    let rhs = ff.zip_with(&fg, |a, b| c * a + d * b);
    Ok(lhs.max_abs_diff(&rhs))
}

/// Neumann-series inverse: `g = sum_n (Id - F)^n h`, truncated when the term
/// sup norm drops to `tol` (hard cap 200 terms). Requires
/// `sup |alpha| < 1/(1+C_L)` so that `||Id - F|| < 1`.
///
/// The iteration lives on the depth-`depth` refinement grid: `h` is projected
/// onto it first, and the returned inverse is a grid carrier.
pub fn neumann_inverse(
    h: &SampledFunction,
    cfg: &OperatorConfig,
    depth: usize,
    tol: f64,
) -> Result<SampledFunction> {
    cfg.require_contraction()?;
    const MAX_TERMS: usize = 200;
    let grid = RefinementGrid::build(&cfg.partition, &cfg.maps, depth)?;
    let project = |f: &SampledFunction| {
        SampledFunction::new(
            grid.points().to_vec(),
            grid.points().iter().map(|&x| f.eval(x)).collect(),
        )
    };
    let mut term = project(h)?;
    let mut sum = term.clone();
    if term.sup_norm() <= tol {
        return Ok(sum);
    }
    for _ in 0..MAX_TERMS {
        let image = apply_operator(&term, cfg, depth, tol)?;
        term = term.sub(&image);
        sum = sum.add(&term);
        if term.sup_norm() <= tol {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence {
        steps: MAX_TERMS,
        last: term.sup_norm(),
        tol,
    })
}

/// Lower-bound report for the operator: the measured ratio `||F(f)|| / ||f||`
/// against the theoretical floor, evaluated both with the configured `C_L`
/// and with the measured `sup_m ||f - L_m f||` (the sharp, per-input floor).
#[derive(Debug, Clone)]
pub struct BelowReport {
    pub measured_ratio: f64,
    /// `1 - alpha_sup/(1-alpha_sup) * sup_m ||f - L_m f|| / ||f||`
    pub floor_measured: f64,
    /// `(1 - alpha_sup (1 + C_L)) / (1 - alpha_sup)`
    pub floor_conservative: f64,
    pub pass: bool,
}

pub fn bounded_below_report(
    f: &SampledFunction,
    cfg: &OperatorConfig,
    depth: usize,
    tol: f64,
) -> Result<BelowReport> {
    cfg.require_contraction()?;
    let norm = f.sup_norm();
    if norm == 0.0 {
        return Err(Error::invalid("input function", "must be nonzero"));
    }
    let fractal = apply_operator(f, cfg, depth, tol)?;
    // f attains its sup at one of its own nodes, which need not be a grid
    // point; the series gives the exact image value there
    let (j_star, _) = f
        .values()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .unwrap();
    let spec = cfg.spec_for(f)?;
    let at_star = crate::engine::evaluate_series(f.abscissae()[j_star], &spec, 1e-12)?;
    let measured_ratio = fractal.sup_norm().max(at_star.abs()) / norm;
    let sup = cfg.scaling.sup_norm();
    let factor = if sup == 0.0 { 0.0 } else { sup / (1.0 - sup) };
    let floor_measured = 1.0 - factor * cfg.sup_base_distance(f) / norm;
    let floor_conservative = (1.0 - sup * (1.0 + cfg.c_l)) / (1.0 - sup);
    let pass = measured_ratio >= floor_measured - 1e-9;
    Ok(BelowReport {
        measured_ratio,
        floor_measured,
        floor_conservative,
        pass,
    })
}

/// Measured operator norm of a base operator over a probe family:
/// `max ||L f|| / ||f||`. On the piecewise-linear class the built-ins are
/// projections with norm 1, which the probes recover when they include a
/// fixed point.
pub fn measured_l_norm(op: BaseOperator, partition: &Partition, probes: &[SampledFunction]) -> f64 {
    probes
        .iter()
        .filter(|f| f.sup_norm() > 0.0)
        .map(|f| op.apply(f, partition).sup_norm() / f.sup_norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::ScalingScheme;

    fn config(alpha: f64, n: usize, ops: Vec<BaseOperator>) -> OperatorConfig {
        let p = Partition::uniform(0.0, 1.0, n).unwrap();
        let maps = AffineMapFamily::from_partition(&p);
        let scaling = ScalingScheme::constant(alpha, (0.0, 1.0), n).unwrap();
        OperatorConfig::new(p, maps, scaling, ops, DEFAULT_C_L).unwrap()
    }

    fn bump() -> SampledFunction {
        SampledFunction::from_fn(0.0, 1.0, 129, |x| x * (1.0 - x)).unwrap()
    }

    #[test]
    fn identity_at_zero_scaling() {
        let cfg = config(0.0, 2, vec![BaseOperator::Chord]);
        let f = bump();
        let image = apply_operator(&f, &cfg, 5, 1e-12).unwrap();
        assert!(image.sup_diff_at_nodes(&f) <= 1e-14);
    }

    #[test]
    fn chord_line_is_a_fixed_point() {
        let cfg = config(0.45, 2, vec![BaseOperator::Chord]);
        let line = SampledFunction::new(vec![0.0, 1.0], vec![0.25, 0.75]).unwrap();
        let image = apply_operator(&line, &cfg, 5, 1e-12).unwrap();
        assert!(image.max_abs_diff(&line) <= 1e-12);
        let report = perturbation_report(&line, &cfg, 5, 1e-12).unwrap();
        assert!(report.measured <= 1e-12);
        assert!(report.pass);
    }

    #[test]
    fn perturbation_bound_holds_for_a_bump() {
        let cfg = config(0.3, 2, vec![BaseOperator::Chord]);
        let f = bump();
        let report = perturbation_report(&f, &cfg, 6, 1e-12).unwrap();
        assert!(
            report.pass,
            "measured {} > bound {}",
            report.measured, report.bound_sup_form
        );
        assert!(report.measured > 0.0);
        assert!(report.bound_sup_form <= report.bound_cl_form + 1e-15);
    }

    #[test]
    fn zero_scaling_bound_is_zero() {
        let cfg = config(0.0, 2, vec![BaseOperator::KnotPl]);
        let report = perturbation_report(&bump(), &cfg, 5, 1e-12).unwrap();
        assert_eq!(report.measured, 0.0);
        assert_eq!(report.bound_sup_form, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn linearity_deviation_is_tiny() {
        let cfg = config(0.4, 2, vec![BaseOperator::Chord, BaseOperator::KnotPl]);
        let f = bump();
        let g = SampledFunction::from_fn(0.0, 1.0, 129, |x| (6.0 * x).sin() * 0.2).unwrap();
        let tol = 1e-10;
        assert!(check_linearity(&f, &g, 1.0, 0.0, &cfg, 5, tol).unwrap() <= 2.0 * tol);
        assert!(check_linearity(&f, &f, 1.0, 1.0, &cfg, 5, tol).unwrap() <= 10.0 * tol);
        assert!(check_linearity(&f, &g, 2.5, -1.3, &cfg, 5, tol).unwrap() <= 10.0 * tol);
    }

    #[test]
    fn neumann_round_trip() {
        let cfg = config(0.25, 2, vec![BaseOperator::Chord]);
        let f = bump();
        let tol = 1e-11;
        let h = apply_operator(&f, &cfg, 5, tol).unwrap();
        let recovered = neumann_inverse(&h, &cfg, 5, tol).unwrap();
        assert!(recovered.sup_diff_at_nodes(&f) <= 10.0 * tol);
        let image = apply_operator(&recovered, &cfg, 5, tol).unwrap();
        assert!(image.max_abs_diff(&h) <= 10.0 * tol);
    }

    #[test]
    fn neumann_zero_scaling_returns_input() {
        let cfg = config(0.0, 2, vec![BaseOperator::Chord]);
        let h = bump();
        let g = neumann_inverse(&h, &cfg, 4, 1e-12).unwrap();
        assert!(g.sup_diff_at_nodes(&h) <= 1e-13);
    }

    #[test]
    fn contraction_precondition_is_enforced() {
        let cfg = config(0.9, 2, vec![BaseOperator::Chord]);
        let err = neumann_inverse(&bump(), &cfg, 4, 1e-10).unwrap_err();
        assert!(matches!(err, Error::ContractionConditionViolated { .. }));
        let err = bounded_below_report(&bump(), &cfg, 4, 1e-10).unwrap_err();
        assert!(matches!(err, Error::ContractionConditionViolated { .. }));
    }

    #[test]
    fn bounded_below_examples() {
        let cfg = config(0.0, 2, vec![BaseOperator::Chord]);
        let r = bounded_below_report(&bump(), &cfg, 5, 1e-12).unwrap();
        assert!((r.measured_ratio - 1.0).abs() <= 1e-12);
        assert!((r.floor_measured - 1.0).abs() <= 1e-12);

        let cfg = config(0.2, 2, vec![BaseOperator::Chord]);
        let line = SampledFunction::new(vec![0.0, 1.0], vec![0.1, 0.9]).unwrap();
        let r = bounded_below_report(&line, &cfg, 5, 1e-12).unwrap();
        assert!((r.measured_ratio - 1.0).abs() <= 1e-12);

        let r = bounded_below_report(&bump(), &cfg, 5, 1e-12).unwrap();
        assert!(
            r.pass,
            "ratio {} < floor {}",
            r.measured_ratio, r.floor_measured
        );
    }

    #[test]
    fn measured_norm_of_projections_is_one() {
        let p = Partition::uniform(0.0, 1.0, 3).unwrap();
        let line = SampledFunction::new(vec![0.0, 1.0], vec![0.5, 1.0]).unwrap();
        let probes = vec![bump(), line];
        for op in [
            BaseOperator::Chord,
            BaseOperator::KnotPl,
            BaseOperator::Blend(0.5),
        ] {
            let norm = measured_l_norm(op, &p, &probes);
            assert!(norm <= 1.0 + 1e-12);
            assert!(norm >= 1.0 - 1e-12);
        }
    }
}
