//! JSON run configuration: declarative forms of partitions, germs, scaling
//! and base schemes, spaces, and IFS levels, with validation that reports the
//! offending field path.

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use nsfrac_core::base::{BaseFn, BaseOperator, BaseScheme};
use nsfrac_core::engine::FractalSpec;
use nsfrac_core::ifs::{ContractionMap2D, IfsLevel, LevelSchedule, PointSet};
use nsfrac_core::operator::{OperatorConfig, DEFAULT_C_L};
use nsfrac_core::partition::{AffineMapFamily, Partition};
use nsfrac_core::scaling::{ScalingFn, ScalingScheme, TailRule};
use nsfrac_core::spaces::{SpaceSpec, ThetaFunction};
use nsfrac_core::SampledFunction;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub partition: Option<PartitionConfig>,
    pub germ: Option<GermConfig>,
    pub scaling: Option<ScalingConfig>,
    pub base: Option<BaseConfig>,
    pub c_l: Option<f64>,
    pub tol: Option<f64>,
    pub depth: Option<usize>,
    pub max_levels: Option<usize>,
    pub k_min: Option<u32>,
    pub k_max: Option<u32>,
    pub seed: Option<u64>,
    pub space: Option<SpaceConfig>,
    pub evaluate: Option<EvaluateConfig>,
    pub ifs: Option<IfsConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PartitionConfig {
    pub knots: Option<Vec<f64>>,
    pub uniform: Option<UniformPartition>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct UniformPartition {
    pub intervals: usize,
    pub domain: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GermConfig {
    pub builtin: Option<String>,
    pub samples: Option<usize>,
    pub table: Option<TableConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScalingConfig {
    pub levels: Vec<Vec<ScalingFnConfig>>,
    pub tail: Option<TailConfig>,
    pub max_levels: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScalingFnConfig {
    pub constant: Option<f64>,
    pub affine: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailConfig {
    #[serde(rename = "repeat-last")]
    RepeatLast,
    #[serde(untagged)]
    Decay {
        #[serde(rename = "geometric-decay")]
        geometric_decay: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BaseConfig {
    pub levels: Vec<BaseFnConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BaseFnConfig {
    pub operator: Option<OperatorConfigEntry>,
    pub table: Option<TableConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case", untagged)]
pub enum OperatorConfigEntry {
    Named(String),
    Blend { blend: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "kind")]
pub enum SpaceConfig {
    #[serde(rename = "bv")]
    Bv,
    #[serde(rename = "vbeta")]
    VBeta { beta: f64 },
    #[serde(rename = "convex-lip")]
    ConvexLip { theta: ThetaConfig },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaConfig {
    #[serde(rename = "slog")]
    Slog,
    #[serde(untagged)]
    Power { power: f64 },
    #[serde(untagged)]
    Custom { custom: TableConfig },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EvaluateConfig {
    pub points: Option<usize>,
    pub at: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct IfsConfig {
    pub levels: Vec<Vec<MapConfig>>,
    pub schedule: Option<String>,
    pub initial: Vec<[f64; 2]>,
    pub max_levels: Option<usize>,
    pub tol: Option<f64>,
    pub ball: Option<BallConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct MapConfig {
    pub linear: [[f64; 2]; 2],
    pub translation: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BallConfig {
    pub center: [f64; 2],
    pub mu: f64,
    pub m: f64,
}

pub fn load(path: &std::path::Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("config: cannot read {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow!("config invalid: {e}"))
}

impl ConfigFile {
    pub fn partition(&self) -> Result<(Partition, AffineMapFamily)> {
        let pc = self
            .partition
            .as_ref()
            .ok_or_else(|| anyhow!("config invalid: partition: section is required"))?;
        let p = match (&pc.knots, &pc.uniform) {
            (Some(knots), None) => Partition::new(knots.clone())
                .map_err(|e| anyhow!("config invalid: partition.knots: {e}"))?,
            (None, Some(u)) => Partition::uniform(u.domain[0], u.domain[1], u.intervals)
                .map_err(|e| anyhow!("config invalid: partition.uniform: {e}"))?,
            _ => bail!("config invalid: partition: give exactly one of `knots` or `uniform`"),
        };
        let maps = AffineMapFamily::from_partition(&p);
        Ok((p, maps))
    }

    pub fn germ(&self, p: &Partition) -> Result<SampledFunction> {
        let gc = self
            .germ
            .as_ref()
            .ok_or_else(|| anyhow!("config invalid: germ: section is required"))?;
        let (a, b) = (p.lower(), p.upper());
        match (&gc.builtin, &gc.table) {
            (Some(name), None) => {
                let samples = gc.samples.unwrap_or(257).max(2);
                let f = match name.as_str() {
                    "line" => SampledFunction::from_fn(a, b, samples, |x| x),
                    "parabola-bump" => SampledFunction::from_fn(a, b, samples, |x| {
                        4.0 * (x - a) * (b - x) / ((b - a) * (b - a))
                    }),
                    "sine-like" => SampledFunction::from_fn(a, b, samples, |x| {
                        let t = (x - a) / (b - a);
                        (2.0 * std::f64::consts::PI * t).sin()
                            + 0.3 * (6.0 * std::f64::consts::PI * t).sin()
                    }),
                    other => bail!(
                        "config invalid: germ.builtin: unknown builtin `{other}` \
                         (expected line | parabola-bump | sine-like)"
                    ),
                };
                f.map_err(|e| anyhow!("config invalid: germ: {e}"))
            }
            (None, Some(t)) => SampledFunction::new(t.x.clone(), t.y.clone())
                .map_err(|e| anyhow!("config invalid: germ.table: {e}")),
            _ => bail!("config invalid: germ: give exactly one of `builtin` or `table`"),
        }
    }

    pub fn scaling(&self, p: &Partition) -> Result<ScalingScheme> {
        let sc = self
            .scaling
            .as_ref()
            .ok_or_else(|| anyhow!("config invalid: scaling: section is required"))?;
        let mut levels = Vec::with_capacity(sc.levels.len());
        for (m, level) in sc.levels.iter().enumerate() {
            let mut fns = Vec::with_capacity(level.len());
            for (i, entry) in level.iter().enumerate() {
                let f = match (entry.constant, entry.affine) {
                    (Some(c), None) => ScalingFn::Constant(c),
                    (None, Some([pp, q])) => ScalingFn::Affine { p: pp, q },
                    _ => bail!(
                        "config invalid: scaling.levels[{m}][{i}]: give exactly one of \
                         `constant` or `affine`"
                    ),
                };
                fns.push(f);
            }
            levels.push(fns);
        }
        let tail = match sc.tail {
            None | Some(TailConfig::RepeatLast) => TailRule::RepeatLast,
            Some(TailConfig::Decay { geometric_decay }) => {
                TailRule::GeometricDecay(geometric_decay)
            }
        };
        let scheme = ScalingScheme::new(levels, tail, (p.lower(), p.upper()), p.n())
            .map_err(|e| anyhow!("config invalid: scaling: {e}"))?;
        Ok(match sc.max_levels.or(self.max_levels) {
            Some(cap) => scheme.with_max_level(cap),
            None => scheme,
        })
    }

    pub fn base(&self) -> Result<BaseScheme> {
        let bc = self
            .base
            .as_ref()
            .ok_or_else(|| anyhow!("config invalid: base: section is required"))?;
        let mut levels = Vec::with_capacity(bc.levels.len());
        for (m, entry) in bc.levels.iter().enumerate() {
            let b = match (&entry.operator, &entry.table) {
                (Some(op), None) => BaseFn::Operator(parse_operator(op, m)?),
                (None, Some(t)) => BaseFn::Direct(
                    SampledFunction::new(t.x.clone(), t.y.clone())
                        .map_err(|e| anyhow!("config invalid: base.levels[{m}].table: {e}"))?,
                ),
                _ => bail!(
                    "config invalid: base.levels[{m}]: give exactly one of `operator` or `table`"
                ),
            };
            levels.push(b);
        }
        BaseScheme::new(levels).map_err(|e| anyhow!("config invalid: base: {e}"))
    }

    /// Only operator levels, for commands that need the linear family `L_m`.
    pub fn base_operators(&self) -> Result<Vec<BaseOperator>> {
        let bc = self
            .base
            .as_ref()
            .ok_or_else(|| anyhow!("config invalid: base: section is required"))?;
        bc.levels
            .iter()
            .enumerate()
            .map(|(m, entry)| match (&entry.operator, &entry.table) {
                (Some(op), None) => parse_operator(op, m),
                _ => Err(anyhow!(
                    "config invalid: base.levels[{m}]: this command needs operator bases \
                     (chord | knot-pl | blend)"
                )),
            })
            .collect()
    }

    pub fn fractal_spec(&self) -> Result<FractalSpec> {
        let (p, maps) = self.partition()?;
        let germ = self.germ(&p)?;
        let scaling = self.scaling(&p)?;
        let base = self.base()?;
        FractalSpec::new(germ, p, maps, scaling, base).map_err(|e| anyhow!("config invalid: {e}"))
    }

    pub fn operator_config(&self) -> Result<OperatorConfig> {
        let (p, maps) = self.partition()?;
        let scaling = self.scaling(&p)?;
        let ops = self.base_operators()?;
        OperatorConfig::new(p, maps, scaling, ops, self.c_l.unwrap_or(DEFAULT_C_L))
            .map_err(|e| anyhow!("config invalid: {e}"))
    }

    pub fn space_spec(&self, flag: Option<&str>) -> Result<SpaceSpec> {
        if let Some(name) = flag {
            return match name {
                "bv" => Ok(SpaceSpec::BoundedVariation),
                "vbeta" => {
                    let beta = match &self.space {
                        Some(SpaceConfig::VBeta { beta }) => *beta,
                        _ => bail!(
                            "config invalid: space: --space vbeta needs a \
                             `space: {{kind: vbeta, beta: ...}}` section"
                        ),
                    };
                    Ok(SpaceSpec::VBeta { beta })
                }
                "convex-lip" => match &self.space {
                    Some(SpaceConfig::ConvexLip { theta }) => Ok(SpaceSpec::ConvexLipschitz {
                        theta: parse_theta(theta)?,
                    }),
                    _ => bail!(
                        "config invalid: space: --space convex-lip needs a \
                         `space: {{kind: convex-lip, theta: ...}}` section"
                    ),
                },
                other => bail!(
                    "config invalid: --space: unknown space `{other}` \
                     (expected bv | vbeta | convex-lip)"
                ),
            };
        }
        match &self.space {
            Some(SpaceConfig::Bv) => Ok(SpaceSpec::BoundedVariation),
            Some(SpaceConfig::VBeta { beta }) => Ok(SpaceSpec::VBeta { beta: *beta }),
            Some(SpaceConfig::ConvexLip { theta }) => Ok(SpaceSpec::ConvexLipschitz {
                theta: parse_theta(theta)?,
            }),
            None => bail!("config invalid: space: section or --space flag is required"),
        }
    }

    pub fn ifs_schedule(&self) -> Result<(LevelSchedule, PointSet, usize, f64)> {
        let ic = self
            .ifs
            .as_ref()
            .ok_or_else(|| anyhow!("config invalid: ifs: section is required"))?;
        let mut levels = Vec::with_capacity(ic.levels.len());
        for (m, maps) in ic.levels.iter().enumerate() {
            let maps: Vec<ContractionMap2D> = maps
                .iter()
                .map(|mc| ContractionMap2D::new(mc.linear, mc.translation))
                .collect();
            levels.push(
                IfsLevel::new(maps).map_err(|e| anyhow!("config invalid: ifs.levels[{m}]: {e}"))?,
            );
        }
        let schedule = match ic.schedule.as_deref() {
            None | Some("repeat-last") => LevelSchedule::RepeatLast(levels),
            Some("cycle") => LevelSchedule::Cycle(levels),
            Some(other) => bail!(
                "config invalid: ifs.schedule: unknown schedule `{other}` \
                 (expected repeat-last | cycle)"
            ),
        };
        let initial = PointSet::new(ic.initial.clone())
            .map_err(|e| anyhow!("config invalid: ifs.initial: {e}"))?;
        if initial.is_empty() {
            bail!("config invalid: ifs.initial: must contain at least one point");
        }
        let max_levels = ic.max_levels.unwrap_or(24);
        let tol = ic.tol.or(self.tol).unwrap_or(1e-6);
        Ok((schedule, initial, max_levels, tol))
    }
}

fn parse_operator(op: &OperatorConfigEntry, m: usize) -> Result<BaseOperator> {
    match op {
        OperatorConfigEntry::Named(name) => match name.as_str() {
            "chord" => Ok(BaseOperator::Chord),
            "knot-pl" => Ok(BaseOperator::KnotPl),
            other => Err(anyhow!(
                "config invalid: base.levels[{m}].operator: unknown operator `{other}` \
                 (expected chord | knot-pl | {{blend: t}})"
            )),
        },
        OperatorConfigEntry::Blend { blend } => {
            if !(0.0..=1.0).contains(blend) {
                return Err(anyhow!(
                    "config invalid: base.levels[{m}].operator.blend: {blend} outside [0, 1]"
                ));
            }
            Ok(BaseOperator::Blend(*blend))
        }
    }
}

pub fn parse_theta(t: &ThetaConfig) -> Result<ThetaFunction> {
    match t {
        ThetaConfig::Slog => Ok(ThetaFunction::Slog),
        ThetaConfig::Power { power } => {
            if power.is_nan() || *power <= 0.0 {
                bail!("config invalid: space.theta.power: must be positive");
            }
            Ok(ThetaFunction::Power(*power))
        }
        ThetaConfig::Custom { custom } => Ok(ThetaFunction::Custom(
            SampledFunction::new(custom.x.clone(), custom.y.clone())
                .map_err(|e| anyhow!("config invalid: space.theta.custom: {e}"))?,
        )),
    }
}
