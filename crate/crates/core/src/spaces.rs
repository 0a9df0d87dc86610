//! Norms, seminorms, oscillation calculus, and the per-space parameter
//! condition checkers: bounded variation, the `V_beta` oscillation-sum space
//! on the unit interval, and the convex Lipschitz space of order `theta`.
//!
//! Every quantity is exact for the piecewise-linear carrier class; sup-type
//! quantities over continuums (the sup over `delta` in the `V_beta` norm, the
//! sup over triples in the convex seminorm) are reported as maxima over
//! deterministic grids and are therefore lower bounds of the true suprema.

use crate::error::Error;
use crate::function::{product_cell_oscillations, SampledFunction};
use crate::partition::{AffineMapFamily, Partition};
use crate::scaling::ScalingScheme;
use crate::Result;

/// Exact total variation of the carrier.
pub fn total_variation(f: &SampledFunction) -> f64 {
    f.total_variation()
}

/// `|f(x_0)| + V(f, I)`.
pub fn bv_norm(f: &SampledFunction) -> f64 {
    f.value_at_lower().abs() + f.total_variation()
}

/// Which function space a condition report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceTag {
    BoundedVariation,
    VBeta,
    ConvexLipschitz,
}

impl SpaceTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpaceTag::BoundedVariation => "bv",
            SpaceTag::VBeta => "vbeta",
            SpaceTag::ConvexLipschitz => "convex-lip",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionEntry {
    /// 1-based level `m`.
    pub level: usize,
    /// 1-based interval `i`.
    pub interval: usize,
    pub quantity: f64,
}

/// Outcome of a per-space parameter check: one quantity per `(i, m)`, a
/// threshold, and the pass verdict (every quantity strictly below the
/// threshold).
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub space: SpaceTag,
    pub threshold: f64,
    pub entries: Vec<ConditionEntry>,
    pub pass: bool,
    pub worst: Option<ConditionEntry>,
}

impl ConditionReport {
    fn from_entries(space: SpaceTag, threshold: f64, entries: Vec<ConditionEntry>) -> Self {
        let pass = entries.iter().all(|e| e.quantity < threshold);
        let worst = entries
            .iter()
            .cloned()
            .max_by(|a, b| a.quantity.partial_cmp(&b.quantity).unwrap());
        ConditionReport {
            space,
            threshold,
            entries,
            pass,
            worst,
        }
    }
}

/// Checks `||alpha_{i,m}||_BV < 1/(2N)` for all intervals and the first
/// `m_levels` levels, the contraction hypothesis on the bounded-variation
/// space.
pub fn check_bv_conditions(
    scaling: &ScalingScheme,
    partition: &Partition,
    m_levels: usize,
) -> ConditionReport {
    let n = partition.n();
    let (lo, hi) = (partition.lower(), partition.upper());
    let mut entries = Vec::new();
    for m in 1..=m_levels.max(1) {
        for i in 1..=n {
            entries.push(ConditionEntry {
                level: m,
                interval: i,
                quantity: scaling.at(i, m).bv_norm(lo, hi),
            });
        }
    }
    ConditionReport::from_entries(SpaceTag::BoundedVariation, 1.0 / (2.0 * n as f64), entries)
}

/// The `V_beta` hypotheses: constant scaling functions with `|alpha| < 1`.
pub fn check_vbeta_conditions(scaling: &ScalingScheme, m_levels: usize) -> Result<ConditionReport> {
    let mut entries = Vec::new();
    for m in 1..=m_levels.max(1) {
        for i in 1..=scaling.n_intervals() {
            let a = scaling.at(i, m);
            let c = a.constant_value().ok_or(Error::NonconstantScaling {
                level: m,
                interval: i,
            })?;
            entries.push(ConditionEntry {
                level: m,
                interval: i,
                quantity: c.abs(),
            });
        }
    }
    Ok(ConditionReport::from_entries(SpaceTag::VBeta, 1.0, entries))
}

/// Per-cell oscillation sum `R(delta, f)` over the dyadic cover of `[0, 1]`
/// by `2^k` cells of width `delta = 2^-k`. Exact for the carrier.
pub fn r_delta(f: &SampledFunction, k: u32) -> Result<f64> {
    require_unit_domain(f)?;
    Ok(f.equal_cell_oscillations(1usize << k).iter().sum())
}

/// `R(delta, f * g)` for the pointwise product, exact for the piecewise
/// quadratic the product actually is.
pub fn r_delta_product(f: &SampledFunction, g: &SampledFunction, k: u32) -> Result<f64> {
    require_unit_domain(f)?;
    require_unit_domain(g)?;
    Ok(product_cell_oscillations(f, g, 1usize << k)?.iter().sum())
}

fn require_unit_domain(f: &SampledFunction) -> Result<()> {
    if !f.is_unit_domain() {
        return Err(Error::DomainNotUnit {
            lo: f.lower(),
            hi: f.upper(),
        });
    }
    Ok(())
}

/// Oscillation sums over a range of dyadic mesh sizes.
#[derive(Debug, Clone)]
pub struct OscillationProfile {
    /// Exponents `k` with `delta = 2^-k`.
    pub k_values: Vec<u32>,
    /// `R(2^-k, f)` per exponent.
    pub r_values: Vec<f64>,
}

pub fn oscillation_profile(
    f: &SampledFunction,
    k_min: u32,
    k_max: u32,
) -> Result<OscillationProfile> {
    require_unit_domain(f)?;
    if k_min >= k_max {
        return Err(Error::invalid("k range", "k_min must be below k_max"));
    }
    let k_values: Vec<u32> = (k_min..=k_max).collect();
    let r_values = k_values
        .iter()
        .map(|&k| r_delta(f, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(OscillationProfile { k_values, r_values })
}

/// `||f||_beta = ||f|| + max_k R(2^-k, f) / (2^-k)^(1-beta)` over the dyadic
/// grid `k_min..=k_max`; a lower bound of the sup over all `delta`.
pub fn v_beta_norm(f: &SampledFunction, beta: f64, k_min: u32, k_max: u32) -> Result<f64> {
    if !(1.0..=2.0).contains(&beta) {
        return Err(Error::BetaOutOfRange { beta });
    }
    require_unit_domain(f)?;
    let mut sup = 0.0f64;
    for k in k_min..=k_max {
        let delta = 0.5f64.powi(k as i32);
        sup = sup.max(r_delta(f, k)? / delta.powf(1.0 - beta));
    }
    Ok(f.sup_norm() + sup)
}

/// The second-difference functional
/// `Delta(u, v, delta) = g(u + delta v) - (delta g(u+v) + (1-delta) g(u))`.
pub fn convex_delta(g: &SampledFunction, u: f64, v: f64, delta: f64) -> Result<f64> {
    let (lo, hi) = (g.lower(), g.upper());
    let tol = 1e-12 * g.span();
    let admissible =
        u.is_finite() && v.is_finite() && u >= lo - tol && v > 0.0 && u + v <= hi + tol;
    if !admissible {
        return Err(Error::OutOfDomain { x: u + v, lo, hi });
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid("delta", "must lie in [0, 1]"));
    }
    Ok(g.eval(u + delta * v) - (delta * g.eval(u + v) + (1.0 - delta) * g.eval(u)))
}

/// Order functions `theta` for the convex Lipschitz space.
#[derive(Debug, Clone)]
pub enum ThetaFunction {
    /// `theta(s) = s^eps`
    Power(f64),
    /// `theta(s) = -s ln s`, positive on `(0, 1)`
    Slog,
    /// Sampled order function, interpreted piecewise-linearly.
    Custom(SampledFunction),
}

/// Numerical admissibility of an order function: positivity on the working
/// range, boundedness of `s / theta(s)` near zero, and the scaling exponent
/// `gamma` with `theta(cs)/theta(s) -> c^gamma`, when one is detectable.
#[derive(Debug, Clone, Copy)]
pub struct AdmissibilityFlags {
    pub positive: bool,
    pub bounded_s_over_theta: bool,
    pub scaling_exponent: Option<f64>,
}

impl ThetaFunction {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            ThetaFunction::Power(eps) => s.powf(*eps),
            ThetaFunction::Slog => {
                if s > 0.0 {
                    -s * s.ln()
                } else {
                    0.0
                }
            }
            ThetaFunction::Custom(t) => t.eval(s),
        }
    }

    pub fn admissibility(&self) -> AdmissibilityFlags {
        match self {
            ThetaFunction::Power(eps) => AdmissibilityFlags {
                positive: *eps > 0.0,
                bounded_s_over_theta: *eps <= 1.0,
                scaling_exponent: Some(*eps),
            },
            ThetaFunction::Slog => AdmissibilityFlags {
                positive: true,
                bounded_s_over_theta: true,
                scaling_exponent: Some(1.0),
            },
            ThetaFunction::Custom(t) => {
                let positive = t
                    .abscissae()
                    .iter()
                    .zip(t.values())
                    .all(|(&s, &v)| s <= 0.0 || v > 0.0);
                // probe s/theta near the small end of the sampled range
                let s_min = t.abscissae().iter().cloned().find(|s| *s > 0.0);
                let (bounded, gamma) = match s_min {
                    Some(s0) if positive => {
                        // start at 2*s0 so the halved probe stays in range
                        let probes: Vec<f64> = (1..=4).map(|j| s0 * 2f64.powi(j)).collect();
                        let ratios: Vec<f64> = probes.iter().map(|&s| s / t.eval(s)).collect();
                        let bounded = ratios[0] <= 10.0 * ratios[3].max(1e-300);
                        let gammas: Vec<f64> = probes
                            .iter()
                            .map(|&s| (t.eval(s) / t.eval(s / 2.0)).log2())
                            .collect();
                        let mean = gammas.iter().sum::<f64>() / gammas.len() as f64;
                        let stable = gammas.iter().all(|g| (g - mean).abs() <= 0.05);
                        (bounded, if stable { Some(mean) } else { None })
                    }
                    _ => (false, None),
                };
                AdmissibilityFlags {
                    positive,
                    bounded_s_over_theta: bounded,
                    scaling_exponent: gamma,
                }
            }
        }
    }
}

fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Sampled convex Lipschitz seminorm: the max of `|Delta(u, v, delta)| /
/// theta(v)` over all abscissa-pair triples with `delta in {1/4, 1/2, 3/4}`
/// plus a deterministic low-discrepancy sample of `(u, v, delta)`.
///
/// A lower bound of the true sup. Low-discrepancy `v` stays above a floor of
/// a thousand grid gaps (capped at a quarter of the span): below that scale a
/// second difference measures the carrier's interpolation kinks rather than
/// the sampled function, while the abscissa-pair triples already cover the
/// fine scales exactly.
pub fn convex_seminorm(g: &SampledFunction, theta: &ThetaFunction, sample_budget: usize) -> f64 {
    let (a, b) = (g.lower(), g.upper());
    let span = b - a;
    let mut best = 0.0f64;
    let mut consider = |u: f64, v: f64, delta: f64| {
        let th = theta.eval(v);
        if th > 0.0 {
            let d = g.eval(u + delta * v) - (delta * g.eval(u + v) + (1.0 - delta) * g.eval(u));
            let ratio = d.abs() / th;
            if ratio > best {
                best = ratio;
            }
        }
    };

    // abscissa pairs, strided down to about a thousand effective nodes
    let xs = g.abscissae();
    let stride = xs.len().div_ceil(1100).max(1);
    let idx: Vec<usize> = (0..xs.len()).step_by(stride).collect();
    for (pos, &j) in idx.iter().enumerate() {
        for &k in &idx[pos + 1..] {
            let (u, v) = (xs[j], xs[k] - xs[j]);
            for delta in [0.25, 0.5, 0.75] {
                consider(u, v, delta);
            }
        }
    }

    // low-discrepancy (u, v, delta) triples
    let v_floor = (1000.0 * g.max_gap()).min(span / 4.0);
    for s in 1..=sample_budget.max(1000) {
        let u = a + halton(s, 2) * (span - v_floor);
        let v = v_floor + halton(s, 3) * (b - u - v_floor);
        if v <= 0.0 {
            continue;
        }
        let delta = halton(s, 5);
        consider(u, v, delta);
    }
    best
}

/// Checks the convex Lipschitz contraction quantity
/// `S_m = max_i max(|alpha_{i,m}|, |alpha_{i,m}| * sup_Y theta(Y)/theta(a_i Y))`
/// over the first `m_levels` levels; passes when `sup_m S_m < 1`. The sup
/// over `Y` is taken on `y_samples` (skipping points where `theta` is not
/// positive); for power-law order functions the ratio has the closed form
/// `a_i^(-eps)` and sampling is skipped.
pub fn check_convex_conditions(
    scaling: &ScalingScheme,
    maps: &AffineMapFamily,
    theta: &ThetaFunction,
    y_samples: &[f64],
    m_levels: usize,
) -> Result<ConditionReport> {
    let ratio_sup = |i: usize| -> f64 {
        let a_i = maps.slope(i);
        if let ThetaFunction::Power(eps) = theta {
            return a_i.powf(-eps);
        }
        let mut sup = 0.0f64;
        for &y in y_samples {
            let (num, den) = (theta.eval(y), theta.eval(a_i * y));
            if num > 0.0 && den > 0.0 {
                sup = sup.max(num / den);
            }
        }
        sup
    };
    let mut entries = Vec::new();
    for m in 1..=m_levels.max(1) {
        for i in 1..=scaling.n_intervals() {
            let c = scaling
                .at(i, m)
                .constant_value()
                .ok_or(Error::NonconstantScaling {
                    level: m,
                    interval: i,
                })?;
            entries.push(ConditionEntry {
                level: m,
                interval: i,
                quantity: c.abs().max(c.abs() * ratio_sup(i)),
            });
        }
    }
    Ok(ConditionReport::from_entries(
        SpaceTag::ConvexLipschitz,
        1.0,
        entries,
    ))
}

/// Default `Y` grid for the convex Lipschitz ratio: `2^-j * span`, `j = 0..=20`.
pub fn default_y_grid(span: f64) -> Vec<f64> {
    (0..=20).map(|j| span * 0.5f64.powi(j)).collect()
}

/// A function space paired with everything its condition checker needs.
#[derive(Debug, Clone)]
pub enum SpaceSpec {
    BoundedVariation,
    VBeta { beta: f64 },
    ConvexLipschitz { theta: ThetaFunction },
}

impl SpaceSpec {
    pub fn tag(&self) -> SpaceTag {
        match self {
            SpaceSpec::BoundedVariation => SpaceTag::BoundedVariation,
            SpaceSpec::VBeta { .. } => SpaceTag::VBeta,
            SpaceSpec::ConvexLipschitz { .. } => SpaceTag::ConvexLipschitz,
        }
    }

    /// Runs the parameter check appropriate for the space.
    pub fn check(
        &self,
        scaling: &ScalingScheme,
        partition: &Partition,
        maps: &AffineMapFamily,
        m_levels: usize,
    ) -> Result<ConditionReport> {
        match self {
            SpaceSpec::BoundedVariation => Ok(check_bv_conditions(scaling, partition, m_levels)),
            SpaceSpec::VBeta { beta } => {
                if !(1.0..=2.0).contains(beta) {
                    return Err(Error::BetaOutOfRange { beta: *beta });
                }
                check_vbeta_conditions(scaling, m_levels)
            }
            SpaceSpec::ConvexLipschitz { theta } => check_convex_conditions(
                scaling,
                maps,
                theta,
                &default_y_grid(partition.span()),
                m_levels,
            ),
        }
    }
}
