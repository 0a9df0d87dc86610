//! Subcommand implementations. Each command reads the validated config,
//! drives the core library, writes its artifacts, and reports a verdict:
//! `Pass` maps to exit 0, `SoftFail` (a negative check verdict with a report
//! still produced) to exit 2. Hard errors bubble up as `Err` and exit 1.

use std::path::Path;

use anyhow::{anyhow, bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use nsfrac_core::base::BaseOperator;
use nsfrac_core::dimension::dimension_report;
use nsfrac_core::engine::{
    build_fractal, evaluate_series, stationary_fixed_point, stationary_residual,
};
use nsfrac_core::ifs::{backward_trajectory_sets, invariant_ball_radius};
use nsfrac_core::operator::{
    apply_operator, bounded_below_report, check_linearity, measured_l_norm, neumann_inverse,
    perturbation_report,
};
use nsfrac_core::spaces::{v_beta_norm, SpaceSpec};
use nsfrac_core::SampledFunction;

use crate::config::ConfigFile;
use crate::report::{
    curve_csv, to_checked_json, write_output, AdmissibilityOut, BelowReportOut, BoundReportOut,
    ConditionReportOut, DimensionEstimateOut, TrajectoryOut,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    SoftFail,
}

#[derive(Debug, Default, Clone, Copy)]
pub struct CommonOpts {
    pub tol: Option<f64>,
    pub depth: Option<usize>,
    pub k_min: Option<u32>,
    pub k_max: Option<u32>,
    pub seed: Option<u64>,
}

impl CommonOpts {
    fn tol(&self, cfg: &ConfigFile) -> f64 {
        self.tol.or(cfg.tol).unwrap_or(1e-10)
    }

    fn seed(&self, cfg: &ConfigFile) -> u64 {
        self.seed.or(cfg.seed).unwrap_or(0)
    }
}

fn resolve_depth(
    opts: &CommonOpts,
    cfg: &ConfigFile,
    n_intervals: usize,
    floor_points: usize,
) -> Result<usize> {
    let depth = opts.depth.or(cfg.depth).unwrap_or_else(|| {
        let mut d = 0usize;
        while n_intervals.pow(d as u32 + 1) + 1 < floor_points {
            d += 1;
        }
        d
    });
    let points = (n_intervals as f64).powi(depth as i32 + 1);
    if points > (1u64 << 22) as f64 {
        bail!(
            "config invalid: depth: {depth} gives about {points:.0} grid points \
             for {n_intervals} intervals; cap is 2^22"
        );
    }
    Ok(depth)
}

#[derive(Serialize)]
struct BuildReport {
    command: &'static str,
    depth: usize,
    tol: f64,
    grid_points: usize,
    sup_vs_germ: f64,
    trajectory: TrajectoryOut,
}

pub fn build(
    cfg: &ConfigFile,
    out: &Path,
    report_path: Option<&Path>,
    opts: &CommonOpts,
) -> Result<Outcome> {
    let spec = cfg.fractal_spec()?;
    let tol = opts.tol(cfg);
    let depth = resolve_depth(opts, cfg, spec.partition().n(), 1025)?;
    let trajectory = build_fractal(&spec, depth, spec.scaling().max_level(), tol)?;
    let curve: Vec<(f64, f64)> = trajectory
        .final_fn
        .abscissae()
        .iter()
        .copied()
        .zip(trajectory.final_fn.values().iter().copied())
        .collect();
    write_output(Some(out), &curve_csv(&curve))?;
    let report = BuildReport {
        command: "build",
        depth,
        tol,
        grid_points: curve.len(),
        sup_vs_germ: trajectory.final_fn.max_abs_diff(spec.germ()),
        trajectory: TrajectoryOut::from(&trajectory),
    };
    if report_path.is_some() {
        write_output(report_path, &to_checked_json(&report)?)?;
    }
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct EvaluateReport {
    command: &'static str,
    tol: f64,
    points: usize,
    max_abs_value: f64,
}

pub fn evaluate(
    cfg: &ConfigFile,
    out: &Path,
    report_path: Option<&Path>,
    opts: &CommonOpts,
) -> Result<Outcome> {
    let spec = cfg.fractal_spec()?;
    let tol = opts.tol(cfg);
    let (lo, hi) = (spec.partition().lower(), spec.partition().upper());
    let xs: Vec<f64> = match cfg.evaluate.as_ref() {
        Some(e) if e.at.is_some() => e.at.clone().unwrap(),
        other => {
            let count = other.and_then(|e| e.points).unwrap_or(1025).max(2);
            (0..count)
                .map(|j| lo + (hi - lo) * j as f64 / (count - 1) as f64)
                .collect()
        }
    };
    // pointwise series evaluation is pure; order is preserved by collect
    let ys: Vec<f64> = xs
        .par_iter()
        .map(|&x| evaluate_series(x, &spec, tol))
        .collect::<nsfrac_core::Result<Vec<f64>>>()
        .map_err(|e| anyhow!("evaluate: {e}"))?;
    let curve: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
    write_output(Some(out), &curve_csv(&curve))?;
    if report_path.is_some() {
        let report = EvaluateReport {
            command: "evaluate",
            tol,
            points: curve.len(),
            max_abs_value: curve.iter().map(|(_, y)| y.abs()).fold(0.0, f64::max),
        };
        write_output(report_path, &to_checked_json(&report)?)?;
    }
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct CheckReport {
    command: &'static str,
    pass: bool,
    conditions: ConditionReportOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_admissibility: Option<AdmissibilityOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    /// `V_beta` contraction factor from the sup-norm step, reported only.
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_sup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sup_base_beta_norm: Option<f64>,
}

pub fn check(
    cfg: &ConfigFile,
    space_flag: Option<&str>,
    out: Option<&Path>,
    _opts: &CommonOpts,
) -> Result<Outcome> {
    let (partition, maps) = cfg.partition()?;
    let scaling = cfg.scaling(&partition)?;
    let space = cfg.space_spec(space_flag)?;
    let m_levels = cfg.max_levels.unwrap_or_else(|| scaling.explicit_levels());
    let conditions = space
        .check(&scaling, &partition, &maps, m_levels)
        .map_err(|e| anyhow!("check: {e}"))?;

    let theta_admissibility = match &space {
        SpaceSpec::ConvexLipschitz { theta } => Some(AdmissibilityOut::from(theta.admissibility())),
        _ => None,
    };
    let (beta, alpha_sup, sup_base_beta_norm) = match &space {
        SpaceSpec::VBeta { beta } => {
            // informational: the beta-norms of the base functions, when the
            // config carries enough to materialize them
            let sup_norm = cfg.germ(&partition).ok().and_then(|germ| {
                let base = cfg.base().ok()?;
                let mut sup = 0.0f64;
                for m in 1..=base.explicit_levels() {
                    let b = base.materialize(m, &germ, &partition).to_unit_domain();
                    sup = sup.max(v_beta_norm(&b, *beta, 0, 10).ok()?);
                }
                Some(sup)
            });
            (Some(*beta), Some(scaling.sup_norm()), sup_norm)
        }
        _ => (None, None, None),
    };

    let report = CheckReport {
        command: "check",
        pass: conditions.pass,
        conditions: ConditionReportOut::from(&conditions),
        theta_admissibility,
        beta,
        alpha_sup,
        sup_base_beta_norm,
    };
    write_output(out, &to_checked_json(&report)?)?;
    Ok(if conditions.pass {
        Outcome::Pass
    } else {
        Outcome::SoftFail
    })
}

#[derive(Serialize)]
struct DimensionReportOut {
    command: &'static str,
    pass: bool,
    conditions: ConditionReportOut,
    estimate: DimensionEstimateOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    claim_pass: Option<bool>,
}

pub fn dimension(
    cfg: &ConfigFile,
    space_flag: Option<&str>,
    out: Option<&Path>,
    opts: &CommonOpts,
) -> Result<Outcome> {
    let spec = cfg.fractal_spec()?;
    let space = cfg.space_spec(space_flag)?;
    let k_min = opts.k_min.or(cfg.k_min).unwrap_or(4);
    let k_max = opts.k_max.or(cfg.k_max).unwrap_or(10);
    let tol = opts.tol(cfg);
    let report = dimension_report(&spec, &space, k_min, k_max, tol)
        .map_err(|e| anyhow!("dimension: {e}"))?;
    let pass = report.pass();
    let out_report = DimensionReportOut {
        command: "dimension",
        pass,
        conditions: ConditionReportOut::from(&report.conditions),
        estimate: DimensionEstimateOut::from(&report.estimate),
        claim_pass: report.claim_pass,
    };
    write_output(out, &to_checked_json(&out_report)?)?;
    Ok(if pass {
        Outcome::Pass
    } else {
        Outcome::SoftFail
    })
}

#[derive(Serialize)]
struct BoundsReport {
    command: &'static str,
    pass: bool,
    depth: usize,
    tol: f64,
    seed: u64,
    perturbation: BoundReportOut,
    linearity_deviation: f64,
    linearity_pass: bool,
    fixed_point_residual: f64,
    fixed_point_pass: bool,
    contraction_condition_met: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounded_below: Option<BelowReportOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    neumann_round_trip_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    neumann_pass: Option<bool>,
}

fn random_probe(domain: (f64, f64), scale: f64, rng: &mut ChaCha8Rng) -> SampledFunction {
    let count = 65;
    let xs: Vec<f64> = (0..count)
        .map(|j| domain.0 + (domain.1 - domain.0) * j as f64 / (count - 1) as f64)
        .collect();
    let mut v = 0.0f64;
    let ys: Vec<f64> = (0..count)
        .map(|_| {
            v += rng.gen_range(-1.0..1.0);
            v
        })
        .collect();
    let sup = ys.iter().fold(0.0f64, |m, y| m.max(y.abs())).max(1e-9);
    SampledFunction::new(xs, ys.iter().map(|y| y * scale / sup).collect()).unwrap()
}

pub fn bounds(cfg: &ConfigFile, out: Option<&Path>, opts: &CommonOpts) -> Result<Outcome> {
    let op_cfg = cfg.operator_config()?;
    let germ = cfg.germ(op_cfg.partition())?;
    let tol = opts.tol(cfg);
    let depth = resolve_depth(opts, cfg, op_cfg.partition().n(), 4097)?;
    let seed = opts.seed(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let perturbation =
        perturbation_report(&germ, &op_cfg, depth, tol).map_err(|e| anyhow!("bounds: {e}"))?;

    let domain = (op_cfg.partition().lower(), op_cfg.partition().upper());
    let probe = random_probe(domain, germ.sup_norm().max(1.0), &mut rng);
    let linearity_deviation = check_linearity(&germ, &probe, 2.5, -1.3, &op_cfg, depth, tol)
        .map_err(|e| anyhow!("bounds: {e}"))?;
    let linearity_pass = linearity_deviation <= 10.0 * tol;

    // the chord of the germ is a fixed point of every built-in base operator
    let chord = BaseOperator::Chord.apply(&germ, op_cfg.partition());
    let chord_image =
        apply_operator(&chord, &op_cfg, depth, tol).map_err(|e| anyhow!("bounds: {e}"))?;
    let fixed_point_residual = chord_image.max_abs_diff(&chord);
    let fixed_point_pass = fixed_point_residual <= 1e-10 * (1.0 + chord.sup_norm());

    let contraction_met = op_cfg.scaling().sup_norm() < op_cfg.contraction_threshold();
    let (bounded_below, neumann_residual, neumann_pass) = if contraction_met {
        let below =
            bounded_below_report(&germ, &op_cfg, depth, tol).map_err(|e| anyhow!("bounds: {e}"))?;
        let h = apply_operator(&germ, &op_cfg, depth, tol).map_err(|e| anyhow!("bounds: {e}"))?;
        let inv = neumann_inverse(&h, &op_cfg, depth, tol).map_err(|e| anyhow!("bounds: {e}"))?;
        let image =
            apply_operator(&inv, &op_cfg, depth, tol).map_err(|e| anyhow!("bounds: {e}"))?;
        // compare at grid nodes, where the carriers are exact
        let residual = image.max_abs_diff(&h).max(inv.sup_diff_at_nodes(&germ));
        let pass = residual <= 10.0 * tol;
        (Some(below), Some(residual), Some(pass))
    } else {
        (None, None, None)
    };

    let pass = perturbation.pass
        && linearity_pass
        && fixed_point_pass
        && bounded_below.as_ref().is_none_or(|b| b.pass)
        && neumann_pass.unwrap_or(true);
    let report = BoundsReport {
        command: "bounds",
        pass,
        depth,
        tol,
        seed,
        perturbation: BoundReportOut::from(&perturbation),
        linearity_deviation,
        linearity_pass,
        fixed_point_residual,
        fixed_point_pass,
        contraction_condition_met: contraction_met,
        bounded_below: bounded_below.as_ref().map(BelowReportOut::from),
        neumann_round_trip_residual: neumann_residual,
        neumann_pass,
    };
    write_output(out, &to_checked_json(&report)?)?;
    Ok(if pass {
        Outcome::Pass
    } else {
        Outcome::SoftFail
    })
}

#[derive(Serialize)]
struct CompareStationaryReport {
    command: &'static str,
    pass: bool,
    tol: f64,
    depth: usize,
    limit_vs_fixed_point: f64,
    agreement_pass: bool,
    functional_equation_residual: f64,
    residual_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    measured_l_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    norm_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fractal_sup_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    norm_bound_pass: Option<bool>,
    trajectory: TrajectoryOut,
}

pub fn compare_stationary(
    cfg: &ConfigFile,
    out: Option<&Path>,
    opts: &CommonOpts,
) -> Result<Outcome> {
    let spec = cfg.fractal_spec()?;
    if !spec.scaling().level_independent() || !spec.base().level_independent() {
        bail!(
            "config invalid: scaling/base: compare-stationary needs a level-constant \
             scheme (identical levels)"
        );
    }
    let tol = opts.tol(cfg);
    let depth = resolve_depth(opts, cfg, spec.partition().n(), 1025)?;
    let trajectory = build_fractal(&spec, depth, spec.scaling().max_level(), tol)?;
    let grid = spec.grid(depth)?;
    let fixed = stationary_fixed_point(1, &spec, &grid, tol)?;
    let limit_vs_fixed_point = trajectory.final_fn.max_abs_diff(&fixed);
    let agreement_pass = limit_vs_fixed_point <= 2.0 * tol;
    let functional_equation_residual = stationary_residual(&fixed, 1, &spec, &grid)?;
    let residual_pass = functional_equation_residual <= 2.0 * tol;

    // stationary norm bound with the measured operator norm, when the base is
    // an operator family
    let (l_norm, norm_bound, fractal_sup, norm_pass) = match cfg.base_operators() {
        Ok(ops) => {
            let p = spec.partition();
            let mut probes = vec![
                spec.germ().clone(),
                BaseOperator::Chord.apply(spec.germ(), p),
            ];
            for j in 1..p.n() {
                let mut ys = vec![0.0; p.knots().len()];
                ys[j] = 1.0;
                probes.push(SampledFunction::new(p.knots().to_vec(), ys).unwrap());
            }
            let l = measured_l_norm(ops[0], p, &probes);
            let alpha = spec.scaling().sup_norm();
            let bound = (1.0 + alpha * l) / (1.0 - alpha) * spec.germ().sup_norm();
            let sup = trajectory.final_fn.sup_norm();
            (Some(l), Some(bound), Some(sup), Some(sup <= bound + 1e-9))
        }
        Err(_) => (None, None, None, None),
    };

    let pass = agreement_pass && residual_pass && norm_pass.unwrap_or(true);
    let report = CompareStationaryReport {
        command: "compare-stationary",
        pass,
        tol,
        depth,
        limit_vs_fixed_point,
        agreement_pass,
        functional_equation_residual,
        residual_pass,
        measured_l_norm: l_norm,
        norm_bound,
        fractal_sup_norm: fractal_sup,
        norm_bound_pass: norm_pass,
        trajectory: TrajectoryOut::from(&trajectory),
    };
    write_output(out, &to_checked_json(&report)?)?;
    Ok(if pass {
        Outcome::Pass
    } else {
        Outcome::SoftFail
    })
}

#[derive(Serialize)]
struct IfsReport {
    command: &'static str,
    pass: bool,
    tol: f64,
    trajectory: TrajectoryOut,
    final_set_size: usize,
    bounding_box: [[f64; 2]; 2],
    /// Included only for small nets.
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ball_radius: Option<f64>,
}

pub fn ifs(cfg: &ConfigFile, out: Option<&Path>, _opts: &CommonOpts) -> Result<Outcome> {
    let (schedule, initial, max_levels, tol) = cfg.ifs_schedule()?;
    let report = backward_trajectory_sets(&schedule, &initial, max_levels, tol)
        .map_err(|e| anyhow!("ifs: {e}"))?;
    let ball_radius = match cfg.ifs.as_ref().and_then(|i| i.ball.as_ref()) {
        Some(ball) => Some(
            invariant_ball_radius(schedule.levels(), ball.center, ball.mu, ball.m)
                .map_err(|e| anyhow!("ifs: {e}"))?,
        ),
        None => None,
    };
    let pts = report.final_set.points();
    let mut bbox = [[f64::INFINITY; 2], [f64::NEG_INFINITY; 2]];
    for p in pts {
        for d in 0..2 {
            bbox[0][d] = bbox[0][d].min(p[d]);
            bbox[1][d] = bbox[1][d].max(p[d]);
        }
    }
    let out_report = IfsReport {
        command: "ifs",
        pass: report.converged,
        tol,
        trajectory: TrajectoryOut::from(&report),
        final_set_size: pts.len(),
        bounding_box: bbox,
        points: (pts.len() <= 512).then(|| pts.to_vec()),
        ball_radius,
    };
    write_output(out, &to_checked_json(&out_report)?)?;
    Ok(Outcome::Pass)
}
