//! Non-stationary fractal interpolation engine: Read-Bajraktarević operator
//! applications on refinement grids, backward trajectories to the limit
//! function, pointwise evaluation by the telescoping series, and the
//! stationary fixed point of a single level.
//!
//! On a grid closed under the inverse maps every operator application is
//! exact, and because pulled-back grid points reach the domain endpoints in
//! finitely many steps (where `g - b_m` vanishes for endpoint-matching
//! inputs), trajectories on such grids terminate exactly after roughly
//! `depth + 2` levels.

use crate::base::BaseScheme;
use crate::error::Error;
use crate::function::SampledFunction;
use crate::partition::{AffineMapFamily, Partition, RefinementGrid};
use crate::scaling::ScalingScheme;
use crate::Result;

/// Everything needed to build a non-stationary fractal function: germ,
/// partition with its affine maps, scaling scheme, and base scheme.
#[derive(Debug, Clone)]
pub struct FractalSpec {
    germ: SampledFunction,
    partition: Partition,
    maps: AffineMapFamily,
    scaling: ScalingScheme,
    base: BaseScheme,
}

impl FractalSpec {
    pub fn new(
        germ: SampledFunction,
        partition: Partition,
        maps: AffineMapFamily,
        scaling: ScalingScheme,
        base: BaseScheme,
    ) -> Result<Self> {
        if scaling.n_intervals() != partition.n() {
            return Err(Error::invalid(
                "fractal spec",
                format!(
                    "scaling scheme covers {} intervals, partition has {}",
                    scaling.n_intervals(),
                    partition.n()
                ),
            ));
        }
        let span_ok = (germ.lower() - partition.lower()).abs() <= 1e-12 * partition.span()
            && (germ.upper() - partition.upper()).abs() <= 1e-12 * partition.span();
        if !span_ok {
            return Err(Error::invalid(
                "fractal spec",
                format!(
                    "germ domain [{}, {}] does not match partition [{}, {}]",
                    germ.lower(),
                    germ.upper(),
                    partition.lower(),
                    partition.upper()
                ),
            ));
        }
        base.validate(&germ, &partition)?;
        Ok(FractalSpec {
            germ,
            partition,
            maps,
            scaling,
            base,
        })
    }

    pub fn germ(&self) -> &SampledFunction {
        &self.germ
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn maps(&self) -> &AffineMapFamily {
        &self.maps
    }

    pub fn scaling(&self) -> &ScalingScheme {
        &self.scaling
    }

    pub fn base(&self) -> &BaseScheme {
        &self.base
    }

    pub fn grid(&self, depth: usize) -> Result<RefinementGrid> {
        RefinementGrid::build(&self.partition, &self.maps, depth)
    }

    /// `sup_m ||f - b_m||` over the explicit levels (the tail repeats the
    /// last level, so the sup over all levels is attained here).
    pub fn sup_base_distance(&self) -> f64 {
        (1..=self.base.explicit_levels())
            .map(|m| {
                self.base
                    .materialize(m, &self.germ, &self.partition)
                    .max_abs_diff(&self.germ)
            })
            .fold(0.0, f64::max)
    }
}

/// Log of a backward trajectory run.
#[derive(Debug, Clone)]
pub struct TrajectoryReport {
    /// Deepest composition computed (the final function is `psi` at this level).
    pub levels_run: usize,
    /// Successive sup distances `d_m = ||psi_{m+1} g - psi_m g||`.
    pub distances: Vec<f64>,
    /// Geometric mean of `d_{m+1} / d_m` over consecutive positive entries.
    pub contraction_ratio: Option<f64>,
    pub converged: bool,
    pub final_fn: SampledFunction,
}

fn geometric_mean_ratio(distances: &[f64], floor: f64) -> Option<f64> {
    let mut log_sum = 0.0;
    let mut count = 0usize;
    for w in distances.windows(2) {
        if w[0] > floor && w[1] > floor {
            log_sum += (w[1] / w[0]).ln();
            count += 1;
        }
    }
    if count == 0 {
        None
    } else {
        Some((log_sum / count as f64).exp())
    }
}

/// Applies the level-`m` RB operator to grid values:
/// `(T g)(x) = f(x) + alpha_{i,m}(Q_i(x)) * (g - b_m)(Q_i(x))` for `x` in
/// interval `i`. Exact on the grid because `Q_i` maps grid points to grid
/// points.
fn apply_rb_values(spec: &FractalSpec, grid: &RefinementGrid, m: usize, g: &[f64]) -> Vec<f64> {
    let b = spec.base.materialize(m, &spec.germ, &spec.partition);
    let pts = grid.points();
    let mut out = Vec::with_capacity(pts.len());
    for j in 0..pts.len() {
        let i = grid.interval_of(j);
        let jq = grid.pullback(j);
        let xi = pts[jq];
        let alpha = spec.scaling.at(i, m).eval(xi);
        out.push(spec.germ.eval(pts[j]) + alpha * (g[jq] - b.eval(xi)));
    }
    out
}

/// Single RB operator application at level `m`, for a function sampled on the
/// refinement grid. The input must be aligned with the grid's points.
pub fn apply_rb(
    g: &SampledFunction,
    m: usize,
    spec: &FractalSpec,
    grid: &RefinementGrid,
) -> Result<SampledFunction> {
    let vals = aligned_values(g, grid)?;
    let out = apply_rb_values(spec, grid, m, &vals);
    SampledFunction::new(grid.points().to_vec(), out)
}

fn aligned_values(g: &SampledFunction, grid: &RefinementGrid) -> Result<Vec<f64>> {
    let span = grid.points()[grid.len() - 1] - grid.points()[0];
    if g.abscissae().len() == grid.len()
        && g.abscissae()
            .iter()
            .zip(grid.points())
            .all(|(a, b)| (a - b).abs() <= 1e-12 * span)
    {
        Ok(g.values().to_vec())
    } else {
        Err(Error::invalid(
            "grid function",
            "abscissae do not coincide with the refinement grid",
        ))
    }
}

/// Computes `psi_m(g) = T^{alpha_1} o ... o T^{alpha_m} g` on the grid.
/// Compositions prepend on the inside, so each level is rebuilt from scratch;
/// trajectories terminate after about `depth + 2` levels, which keeps the
/// quadratic recomputation cheap.
fn backward_values(spec: &FractalSpec, grid: &RefinementGrid, g0: &[f64], m: usize) -> Vec<f64> {
    let mut vals = g0.to_vec();
    for level in (1..=m).rev() {
        vals = apply_rb_values(spec, grid, level, &vals);
    }
    vals
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Runs the backward trajectory `psi_m(g0)` for increasing `m` until the
/// successive sup distance drops to `tol` or `max_levels` is reached.
pub fn backward_trajectory(
    g0: &SampledFunction,
    spec: &FractalSpec,
    grid: &RefinementGrid,
    max_levels: usize,
    tol: f64,
) -> Result<TrajectoryReport> {
    if max_levels < 1 {
        return Err(Error::invalid("max levels", "must be at least 1"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tolerance", "must be positive"));
    }
    let g0_vals = aligned_values(g0, grid)?;
    let noise_floor = 10.0 * f64::EPSILON * (1.0 + spec.germ.sup_norm());

    let mut distances = Vec::new();
    let mut prev = backward_values(spec, grid, &g0_vals, 1);
    let mut levels_run = 1;
    let mut converged = false;
    for m in 1..=max_levels {
        let next = backward_values(spec, grid, &g0_vals, m + 1);
        let d = sup_diff(&next, &prev);
        distances.push(d);
        prev = next;
        levels_run = m + 1;
        if d <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            steps: levels_run,
            last: *distances.last().unwrap(),
            tol,
        });
    }
    let contraction_ratio = geometric_mean_ratio(&distances, noise_floor);
    Ok(TrajectoryReport {
        levels_run,
        distances,
        contraction_ratio,
        converged,
        final_fn: SampledFunction::new(grid.points().to_vec(), prev)?,
    })
}

/// Builds the limit function on a depth-`depth` refinement grid, starting the
/// trajectory from the germ itself.
pub fn build_fractal(
    spec: &FractalSpec,
    depth: usize,
    max_levels: usize,
    tol: f64,
) -> Result<TrajectoryReport> {
    let grid = spec.grid(depth)?;
    let g0 = SampledFunction::new(
        grid.points().to_vec(),
        grid.points().iter().map(|&x| spec.germ.eval(x)).collect(),
    )?;
    backward_trajectory(&g0, spec, &grid, max_levels, tol)
}

/// Pointwise evaluation of the limit function by its telescoping series:
///
/// `f(x) + sum_{l >= 1} pi_l * (f - b_l)(xi_l)` with `xi_0 = x`,
/// `i_l = locate(xi_{l-1})`, `xi_l = Q_{i_l}(xi_{l-1})`, and
/// `pi_l = prod_{k <= l} alpha_{i_k,k}(xi_k)`.
///
/// Truncated at the first `L` whose geometric tail bound drops below `tol`;
/// if some `xi_l` lands on a domain endpoint the series terminates exactly.
pub fn evaluate_series(x: f64, spec: &FractalSpec, tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tolerance", "must be positive"));
    }
    let p = &spec.partition;
    let (lo, hi) = (p.lower(), p.upper());
    if x.is_nan() || x < lo || x > hi {
        return Err(Error::OutOfDomain { x, lo, hi });
    }
    let alpha_sup = spec.scaling.sup_norm();
    let mut sum = spec.germ.eval(x);
    if alpha_sup == 0.0 {
        return Ok(sum);
    }
    let base_sup = spec.sup_base_distance();
    // smallest L with alpha_sup^(L+1) / (1 - alpha_sup) * base_sup <= tol
    let tail = |l: usize| alpha_sup.powi(l as i32 + 1) / (1.0 - alpha_sup) * base_sup;
    let mut max_terms = spec.scaling.max_level();
    for l in 0..=spec.scaling.max_level() {
        if tail(l) <= tol {
            max_terms = l;
            break;
        }
    }

    let endpoint_snap = 1e-12 * p.span();
    let mut xi = x;
    let mut pi = 1.0f64;
    for l in 1..=max_terms {
        let i = p.locate_interval(xi)?;
        xi = spec.maps.inverse(i, xi)?;
        if (xi - lo).abs() <= endpoint_snap {
            xi = lo;
        } else if (xi - hi).abs() <= endpoint_snap {
            xi = hi;
        }
        pi *= spec.scaling.at(i, l).eval(xi);
        if xi == lo || xi == hi || pi == 0.0 {
            // (f - b_l)(xi) vanishes here and xi is a fixed point of the
            // remaining pullbacks: the series terminates exactly
            break;
        }
        let b = spec.base.materialize(l, &spec.germ, &spec.partition);
        sum += pi * (spec.germ.eval(xi) - b.eval(xi));
    }
    Ok(sum)
}

/// Iterates the single level-`m` operator to its fixed point on the grid.
/// The result satisfies the self-referential functional equation
/// `h(x) = f(x) + alpha_{i,m}(Q_i(x)) * (h - b_m)(Q_i(x))` up to `2 * tol`.
pub fn stationary_fixed_point(
    m: usize,
    spec: &FractalSpec,
    grid: &RefinementGrid,
    tol: f64,
) -> Result<SampledFunction> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tolerance", "must be positive"));
    }
    let mut vals: Vec<f64> = grid.points().iter().map(|&x| spec.germ.eval(x)).collect();
    let cap = 10_000usize;
    for _ in 0..cap {
        let next = apply_rb_values(spec, grid, m, &vals);
        let d = sup_diff(&next, &vals);
        vals = next;
        if d <= tol {
            return SampledFunction::new(grid.points().to_vec(), vals);
        }
    }
    Err(Error::NoConvergence {
        steps: cap,
        last: f64::NAN,
        tol,
    })
}

/// Sup-norm residual of the stationary functional equation for `h` on the
/// grid, used to verify fixed points independently of the iteration that
/// produced them.
pub fn stationary_residual(
    h: &SampledFunction,
    m: usize,
    spec: &FractalSpec,
    grid: &RefinementGrid,
) -> Result<f64> {
    let vals = aligned_values(h, grid)?;
    let image = apply_rb_values(spec, grid, m, &vals);
    Ok(sup_diff(&image, &vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{BaseOperator, BaseScheme};
    use crate::partition::build_partition;
    use crate::scaling::{ScalingFn, ScalingScheme, TailRule};

    fn bump_spec(alpha: f64, n: usize, op: BaseOperator) -> FractalSpec {
        let p = Partition::uniform(0.0, 1.0, n).unwrap();
        let maps = AffineMapFamily::from_partition(&p);
        let germ = SampledFunction::from_fn(0.0, 1.0, 65, |x| x * (1.0 - x)).unwrap();
        let scaling = ScalingScheme::constant(alpha, (0.0, 1.0), n).unwrap();
        FractalSpec::new(germ, p, maps, scaling, BaseScheme::operator(op)).unwrap()
    }

    #[test]
    fn zero_scaling_reproduces_the_germ() {
        let spec = bump_spec(0.0, 2, BaseOperator::Chord);
        let report = build_fractal(&spec, 5, 16, 1e-12).unwrap();
        assert!(report.converged);
        let grid = spec.grid(5).unwrap();
        for (j, &x) in grid.points().iter().enumerate() {
            assert!((report.final_fn.values()[j] - spec.germ().eval(x)).abs() <= 1e-15);
        }
    }

    #[test]
    fn applying_to_the_base_returns_the_germ() {
        let spec = bump_spec(0.4, 2, BaseOperator::Chord);
        let grid = spec.grid(4).unwrap();
        let b = spec
            .base()
            .materialize(1, spec.germ(), spec.partition())
            .into_owned();
        let b_on_grid = SampledFunction::new(
            grid.points().to_vec(),
            grid.points().iter().map(|&x| b.eval(x)).collect(),
        )
        .unwrap();
        let image = apply_rb(&b_on_grid, 1, &spec, &grid).unwrap();
        for (j, &x) in grid.points().iter().enumerate() {
            assert!((image.values()[j] - spec.germ().eval(x)).abs() <= 1e-15);
        }
    }

    #[test]
    fn single_application_hand_check() {
        // N = 2 uniform on [0,1], f(x) = x, constant alpha = 0.3, chord base:
        // (T g)(0.25) = f(0.25) + 0.3 * (g - b)(Q_1(0.25)) with Q_1(0.25) = 0.5
        let p = Partition::uniform(0.0, 1.0, 2).unwrap();
        let maps = AffineMapFamily::from_partition(&p);
        let germ = SampledFunction::from_fn(0.0, 1.0, 33, |x| x).unwrap();
        let scaling = ScalingScheme::constant(0.3, (0.0, 1.0), 2).unwrap();
        let spec = FractalSpec::new(
            germ,
            p,
            maps,
            scaling,
            BaseScheme::operator(BaseOperator::Chord),
        )
        .unwrap();
        let grid = spec.grid(3).unwrap();
        // g: a parabola sampled on the grid (endpoint-matching with f)
        let g = SampledFunction::new(
            grid.points().to_vec(),
            grid.points().iter().map(|&x| x * x).collect(),
        )
        .unwrap();
        let image = apply_rb(&g, 1, &spec, &grid).unwrap();
        let j = grid
            .points()
            .iter()
            .position(|&x| (x - 0.25).abs() < 1e-12)
            .unwrap();
        // b = chord of f(x) = x is x itself, so (g - b)(0.5) = 0.25 - 0.5
        let expect = 0.25 + 0.3 * (0.25 - 0.5);
        assert!((image.values()[j] - expect).abs() < 1e-15);
    }

    #[test]
    fn trajectory_ratio_tracks_the_scaling_bound() {
        let spec = bump_spec(0.5, 2, BaseOperator::Chord);
        let report = build_fractal(&spec, 6, 32, 1e-13).unwrap();
        let floor = 10.0 * f64::EPSILON;
        for w in report.distances.windows(2) {
            if w[0] > floor && w[1] > floor {
                assert!(w[1] <= (0.5 + 0.02) * w[0], "{} -> {}", w[0], w[1]);
            }
        }
        if let Some(r) = report.contraction_ratio {
            assert!(r <= 0.52);
        }
    }

    #[test]
    fn limits_agree_for_different_initializations() {
        let spec = bump_spec(0.45, 3, BaseOperator::KnotPl);
        let tol = 1e-11;
        let grid = spec.grid(4).unwrap();
        let from_germ = build_fractal(&spec, 4, 32, tol).unwrap();
        let chord = BaseOperator::Chord.apply(spec.germ(), spec.partition());
        let g0 = SampledFunction::new(
            grid.points().to_vec(),
            grid.points().iter().map(|&x| chord.eval(x)).collect(),
        )
        .unwrap();
        let from_chord = backward_trajectory(&g0, &spec, &grid, 32, tol).unwrap();
        assert!(from_germ.final_fn.max_abs_diff(&from_chord.final_fn) <= 2.0 * tol);
    }

    #[test]
    fn no_convergence_when_capped_too_early() {
        let spec = bump_spec(0.6, 2, BaseOperator::Chord);
        let err = build_fractal(&spec, 6, 1, 1e-14).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn series_at_endpoints_and_knots_is_exact() {
        let spec = bump_spec(0.5, 2, BaseOperator::Chord);
        assert_eq!(evaluate_series(0.0, &spec, 1e-12).unwrap(), 0.0);
        assert_eq!(evaluate_series(1.0, &spec, 1e-12).unwrap(), 0.0);
        let knot = 0.5;
        let v = evaluate_series(knot, &spec, 1e-12).unwrap();
        assert!((v - spec.germ().eval(knot)).abs() <= 1e-15);
        assert!(evaluate_series(1.5, &spec, 1e-12).is_err());
    }

    #[test]
    fn series_matches_grid_trajectory_on_refinement_points() {
        for (alpha, n, op) in [
            (0.5f64, 2usize, BaseOperator::Chord),
            (0.35, 3, BaseOperator::KnotPl),
            (0.6, 2, BaseOperator::Blend(0.4)),
        ] {
            let spec = bump_spec(alpha, n, op);
            let depth = 4;
            let report = build_fractal(&spec, depth, 64, 1e-13).unwrap();
            let grid = spec.grid(depth).unwrap();
            for (j, &x) in grid.points().iter().enumerate() {
                let s = evaluate_series(x, &spec, 1e-12).unwrap();
                assert!(
                    (s - report.final_fn.values()[j]).abs() <= 1e-10,
                    "x = {x}: series {s} vs grid {}",
                    report.final_fn.values()[j]
                );
            }
        }
    }

    #[test]
    fn series_matches_grid_with_affine_scaling_on_skewed_knots() {
        let (p, maps) = build_partition(vec![0.0, 0.25, 1.0]).unwrap();
        let germ = SampledFunction::from_fn(0.0, 1.0, 65, |x| x * (1.0 - x)).unwrap();
        let scaling = ScalingScheme::new(
            vec![
                vec![
                    ScalingFn::Affine { p: 0.2, q: 0.3 },
                    ScalingFn::Affine { p: -0.1, q: 0.4 },
                ],
                vec![ScalingFn::Constant(0.45), ScalingFn::Constant(-0.3)],
            ],
            TailRule::GeometricDecay(0.8),
            (0.0, 1.0),
            2,
        )
        .unwrap();
        let spec = FractalSpec::new(
            germ,
            p,
            maps,
            scaling,
            BaseScheme::operator(BaseOperator::Chord),
        )
        .unwrap();
        let depth = 5;
        let report = build_fractal(&spec, depth, 64, 1e-13).unwrap();
        let grid = spec.grid(depth).unwrap();
        for (j, &x) in grid.points().iter().enumerate() {
            let s = evaluate_series(x, &spec, 1e-12).unwrap();
            assert!(
                (s - report.final_fn.values()[j]).abs() <= 1e-10,
                "x = {x}: series {s} vs grid {}",
                report.final_fn.values()[j]
            );
        }
    }

    #[test]
    fn stationary_fixed_point_properties() {
        let spec = bump_spec(0.0, 2, BaseOperator::Chord);
        let grid = spec.grid(4).unwrap();
        let fixed = stationary_fixed_point(1, &spec, &grid, 1e-12).unwrap();
        for (j, &x) in grid.points().iter().enumerate() {
            assert!((fixed.values()[j] - spec.germ().eval(x)).abs() <= 1e-15);
        }

        let spec = bump_spec(0.5, 2, BaseOperator::Chord);
        let tol = 1e-12;
        let fixed = stationary_fixed_point(1, &spec, &grid, tol).unwrap();
        let res = stationary_residual(&fixed, 1, &spec, &grid).unwrap();
        assert!(res <= 2.0 * tol);

        // a level-independent scheme: the backward trajectory limit and the
        // stationary fixed point coincide
        let report = build_fractal(&spec, 4, 64, tol).unwrap();
        assert!(report.final_fn.max_abs_diff(&fixed) <= 2.0 * tol);
    }

    #[test]
    fn nonstationary_levels_change_the_limit() {
        let p = Partition::uniform(0.0, 1.0, 2).unwrap();
        let maps = AffineMapFamily::from_partition(&p);
        let germ = SampledFunction::from_fn(0.0, 1.0, 65, |x| x * (1.0 - x)).unwrap();
        let scaling = ScalingScheme::new(
            vec![
                vec![ScalingFn::Constant(0.6); 2],
                vec![ScalingFn::Constant(-0.3); 2],
            ],
            TailRule::RepeatLast,
            (0.0, 1.0),
            2,
        )
        .unwrap();
        let spec = FractalSpec::new(
            germ,
            p,
            maps,
            scaling,
            BaseScheme::operator(BaseOperator::Chord),
        )
        .unwrap();
        let report = build_fractal(&spec, 5, 64, 1e-12).unwrap();
        let grid = spec.grid(5).unwrap();
        let stationary = stationary_fixed_point(1, &spec, &grid, 1e-12).unwrap();
        assert!(report.final_fn.max_abs_diff(&stationary) > 1e-3);
    }
}
