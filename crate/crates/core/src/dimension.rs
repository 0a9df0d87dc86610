//! Box-counting machinery for graphs of sampled functions: mesh box counts
//! by the column/oscillation method, log-log slope estimation, and the
//! pairing of space conditions with their dimension claims.

use crate::engine::{build_fractal, FractalSpec};
use crate::error::Error;
use crate::function::SampledFunction;
use crate::spaces::{ConditionReport, SpaceSpec, ThetaFunction};
use crate::Result;

/// Theoretical bound a dimension estimate is tested against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundTag {
    /// Box dimension equals 1.
    EqOne,
    /// Box dimension at most `2 - eps`.
    LeqTwoMinusEps(f64),
    /// No claim.
    None,
}

/// Log-log regression result over a dyadic mesh range.
#[derive(Debug, Clone)]
pub struct DimensionEstimate {
    pub k_min: u32,
    pub k_max: u32,
    /// `N_delta` for `delta = 2^-k`, `k = k_min..=k_max`.
    pub counts: Vec<u64>,
    /// Least-squares slope of `ln N_delta` against `ln(1/delta)`.
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub bound: BoundTag,
}

/// Mesh box count of the graph of `f` at `delta = 2^-k`, after rescaling the
/// domain to `[0, 1]`: per column the count is `floor(osc/delta) + 1`, which
/// is exact for the piecewise-linear carrier.
pub fn box_count_graph(f: &SampledFunction, k: u32) -> u64 {
    let unit = if f.is_unit_domain() {
        f.clone()
    } else {
        f.to_unit_domain()
    };
    let delta = 0.5f64.powi(k as i32);
    unit.equal_cell_oscillations(1usize << k)
        .iter()
        .map(|osc| (osc / delta).floor() as u64 + 1)
        .sum()
}

/// Least-squares slope of `ln N_delta` vs `ln(1/delta)` over `k_min..=k_max`.
///
/// Refuses when the sampling cannot resolve the finest mesh: the rescaled
/// abscissa spacing must be at most `2^-(k_max+2)`.
pub fn estimate_box_dimension(
    f: &SampledFunction,
    k_min: u32,
    k_max: u32,
) -> Result<DimensionEstimate> {
    if k_max < k_min + 4 {
        return Err(Error::invalid(
            "k range",
            format!("need k_max - k_min >= 4, got [{k_min}, {k_max}]"),
        ));
    }
    let unit = if f.is_unit_domain() {
        f.clone()
    } else {
        f.to_unit_domain()
    };
    let required = 0.5f64.powi(k_max as i32 + 2);
    let max_gap = unit.max_gap();
    if max_gap > required {
        return Err(Error::Undersampled {
            max_gap,
            k_max,
            required,
        });
    }
    let counts: Vec<u64> = (k_min..=k_max).map(|k| box_count_graph(&unit, k)).collect();
    let ln2 = std::f64::consts::LN_2;
    let xs: Vec<f64> = (k_min..=k_max).map(|k| k as f64 * ln2).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (slope * x + intercept)).abs())
        .fold(0.0, f64::max);
    Ok(DimensionEstimate {
        k_min,
        k_max,
        counts,
        slope,
        intercept,
        max_residual,
        bound: BoundTag::None,
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Condition check and dimension estimate for one spec/space pairing.
#[derive(Debug, Clone)]
pub struct DimensionReport {
    pub conditions: ConditionReport,
    pub estimate: DimensionEstimate,
    /// Claim verdict at tolerance 0.15; `None` when the conditions failed
    /// (the estimate is still reported, the claim is just not asserted) or
    /// when the space carries no claim.
    pub claim_pass: Option<bool>,
}

impl DimensionReport {
    /// Overall verdict: conditions hold and the claim (if any) is met.
    pub fn pass(&self) -> bool {
        self.conditions.pass && self.claim_pass.unwrap_or(true)
    }
}

/// Claim tolerance on the measured slope.
pub const CLAIM_TOLERANCE: f64 = 0.15;

fn bound_for(space: &SpaceSpec) -> BoundTag {
    match space {
        SpaceSpec::BoundedVariation => BoundTag::EqOne,
        SpaceSpec::VBeta { .. } => BoundTag::None,
        SpaceSpec::ConvexLipschitz { theta } => match theta {
            ThetaFunction::Power(eps) => BoundTag::LeqTwoMinusEps(*eps),
            ThetaFunction::Slog => BoundTag::EqOne,
            ThetaFunction::Custom(_) => BoundTag::None,
        },
    }
}

fn claim_verdict(bound: BoundTag, slope: f64) -> Option<bool> {
    match bound {
        BoundTag::EqOne => Some((slope - 1.0).abs() <= CLAIM_TOLERANCE),
        BoundTag::LeqTwoMinusEps(eps) => Some(slope <= 2.0 - eps + CLAIM_TOLERANCE),
        BoundTag::None => None,
    }
}

/// Smallest refinement depth whose grid resolves `2^-(k_max+2)` after the
/// domain rescale, with a hard cap on the grid size.
pub fn resolving_depth(spec: &FractalSpec, k_max: u32) -> Result<usize> {
    let p = spec.partition();
    let max_knot_gap = p
        .knots()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let target = p.span() * 0.5f64.powi(k_max as i32 + 2);
    let a_max = spec.maps().max_slope();
    let mut depth = 0usize;
    let mut gap = max_knot_gap;
    while gap > target {
        depth += 1;
        gap *= a_max;
        let grid_points = (p.n() as f64).powi(depth as i32 + 1);
        if grid_points > (1u64 << 22) as f64 {
            return Err(Error::invalid(
                "depth",
                format!(
                    "resolving k_max = {k_max} needs more than 2^22 grid points \
                     for this partition"
                ),
            ));
        }
    }
    Ok(depth)
}

/// Runs the space's condition check, builds the fractal, estimates its graph
/// dimension, and tests the claim attached to the space.
pub fn dimension_report(
    spec: &FractalSpec,
    space: &SpaceSpec,
    k_min: u32,
    k_max: u32,
    tol: f64,
) -> Result<DimensionReport> {
    let m_levels = spec
        .scaling()
        .explicit_levels()
        .max(spec.base().explicit_levels());
    let conditions = space.check(spec.scaling(), spec.partition(), spec.maps(), m_levels)?;
    let depth = resolving_depth(spec, k_max)?;
    let trajectory = build_fractal(spec, depth, spec.scaling().max_level(), tol)?;
    let mut estimate = estimate_box_dimension(&trajectory.final_fn, k_min, k_max)?;
    estimate.bound = bound_for(space);
    let claim_pass = if conditions.pass {
        claim_verdict(estimate.bound, estimate.slope)
    } else {
        None
    };
    Ok(DimensionReport {
        conditions,
        estimate,
        claim_pass,
    })
}
