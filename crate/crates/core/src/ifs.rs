//! Sequences of contractive plane IFSs acting on finite point sets: Hutchinson
//! applications, Hausdorff distances, the invariant-ball radius, and forward /
//! backward trajectories with convergence logs.
//!
//! Compact sets are represented by finite point sets, so the Hausdorff
//! distances computed here are exact for the represented sets and only
//! approximate their ideal limits at the resolution of the nets.

use crate::error::Error;
use crate::Result;

/// Affine contraction `x -> A x + t` on the plane. The Lipschitz constant is
/// the spectral norm of `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionMap2D {
    pub linear: [[f64; 2]; 2],
    pub translation: [f64; 2],
}

impl ContractionMap2D {
    pub fn new(linear: [[f64; 2]; 2], translation: [f64; 2]) -> Self {
        ContractionMap2D {
            linear,
            translation,
        }
    }

    /// Uniform scaling about the origin followed by a translation.
    pub fn scale_translate(s: f64, t: [f64; 2]) -> Self {
        ContractionMap2D::new([[s, 0.0], [0.0, s]], t)
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.linear[0][0] * p[0] + self.linear[0][1] * p[1] + self.translation[0],
            self.linear[1][0] * p[0] + self.linear[1][1] * p[1] + self.translation[1],
        ]
    }

    /// Spectral norm of the linear part (largest singular value).
    pub fn lipschitz(&self) -> f64 {
        let [[a, b], [c, d]] = self.linear;
        let frob_sq = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        let disc = (frob_sq * frob_sq - 4.0 * det * det).max(0.0);
        ((frob_sq + disc.sqrt()) / 2.0).sqrt()
    }
}

/// One level of the sequence: the maps `w_{i,m}` applied in parallel.
#[derive(Debug, Clone)]
pub struct IfsLevel {
    maps: Vec<ContractionMap2D>,
}

impl IfsLevel {
    pub fn new(maps: Vec<ContractionMap2D>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::invalid("IFS level", "must contain at least one map"));
        }
        Ok(IfsLevel { maps })
    }

    pub fn maps(&self) -> &[ContractionMap2D] {
        &self.maps
    }

    pub fn lipschitz(&self) -> f64 {
        self.maps.iter().map(|m| m.lipschitz()).fold(0.0, f64::max)
    }
}

/// Finite point set standing in for a compact set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<[f64; 2]>,
}

const DEDUP_TOL: f64 = 1e-12;

impl PointSet {
    pub fn new(mut points: Vec<[f64; 2]>) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("point set", "non-finite coordinate"));
        }
        sort_dedup(&mut points);
        Ok(PointSet { points })
    }

    /// Points on the line `y = 0`, convenient for interval IFSs.
    pub fn on_line(xs: &[f64]) -> Result<Self> {
        PointSet::new(xs.iter().map(|&x| [x, 0.0]).collect())
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn sort_dedup(points: &mut Vec<[f64; 2]>) {
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup_by(|a, b| (a[0] - b[0]).abs() <= DEDUP_TOL && (a[1] - b[1]).abs() <= DEDUP_TOL);
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Union of the images of `a` under every map of the level, deduplicated.
pub fn hutchinson_apply(level: &IfsLevel, a: &PointSet) -> PointSet {
    let mut out = Vec::with_capacity(level.maps.len() * a.len());
    for w in &level.maps {
        for &p in a.points() {
            out.push(w.apply(p));
        }
    }
    sort_dedup(&mut out);
    PointSet { points: out }
}

/// Exact symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff_distance(a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let one_sided = |from: &PointSet, to: &PointSet| -> f64 {
        from.points()
            .iter()
            .map(|&p| {
                to.points()
                    .iter()
                    .map(|&q| dist(p, q))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Ok(one_sided(a, b).max(one_sided(b, a)))
}

/// Verifies the displacement hypothesis `d(w(x), q) <= mu d(x, q) + M` on a
/// deterministic sample around `q` for every map of every provided level, and
/// returns the invariant-ball radius `r = M / (1 - mu)`.
pub fn invariant_ball_radius(
    levels: &[IfsLevel],
    q: [f64; 2],
    mu: f64,
    m_bound: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::invalid("mu", "must lie in [0, 1)"));
    }
    if !m_bound.is_finite() || m_bound <= 0.0 {
        return Err(Error::invalid("M", "must be positive"));
    }
    let r = m_bound / (1.0 - mu);
    let check_tol = 1e-9 * (1.0 + r + q[0].abs() + q[1].abs());
    // golden-angle spiral out to twice the ball radius
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    let samples = 512usize;
    for s in 0..samples {
        let rad = 2.0 * r * ((s as f64 + 0.5) / samples as f64).sqrt();
        let ang = golden * s as f64;
        let x = [q[0] + rad * ang.cos(), q[1] + rad * ang.sin()];
        let dxq = dist(x, q);
        for level in levels {
            for w in level.maps() {
                let lhs = dist(w.apply(x), q);
                let rhs = mu * dxq + m_bound;
                if lhs > rhs + check_tol {
                    return Err(Error::HypothesisFailed {
                        x: x[0],
                        y: x[1],
                        lhs,
                        rhs,
                    });
                }
            }
        }
    }
    Ok(r)
}

/// How the level sequence continues past the explicitly listed levels.
#[derive(Debug, Clone)]
pub enum LevelSchedule {
    /// Repeat the final level forever.
    RepeatLast(Vec<IfsLevel>),
    /// Cycle through the listed levels.
    Cycle(Vec<IfsLevel>),
}

impl LevelSchedule {
    pub fn stationary(level: IfsLevel) -> Self {
        LevelSchedule::RepeatLast(vec![level])
    }

    pub fn levels(&self) -> &[IfsLevel] {
        match self {
            LevelSchedule::RepeatLast(v) | LevelSchedule::Cycle(v) => v,
        }
    }

    pub fn is_valid(&self) -> Result<()> {
        if self.levels().is_empty() {
            return Err(Error::invalid("level schedule", "no levels given"));
        }
        Ok(())
    }

    /// Level for 1-based index `m`.
    pub fn at(&self, m: usize) -> &IfsLevel {
        match self {
            LevelSchedule::RepeatLast(v) => &v[(m - 1).min(v.len() - 1)],
            LevelSchedule::Cycle(v) => &v[(m - 1) % v.len()],
        }
    }
}

/// Convergence log of a set-valued trajectory.
#[derive(Debug, Clone)]
pub struct SetTrajectoryReport {
    pub levels_run: usize,
    /// Successive Hausdorff distances.
    pub distances: Vec<f64>,
    /// Geometric mean of successive distance ratios.
    pub contraction_ratio: Option<f64>,
    pub converged: bool,
    pub final_set: PointSet,
}

fn ratio_estimate(distances: &[f64]) -> Option<f64> {
    let floor = 1e-14;
    let mut log_sum = 0.0;
    let mut count = 0usize;
    for w in distances.windows(2) {
        if w[0] > floor && w[1] > floor {
            log_sum += (w[1] / w[0]).ln();
            count += 1;
        }
    }
    (count > 0).then(|| (log_sum / count as f64).exp())
}

fn backward_set(schedule: &LevelSchedule, a0: &PointSet, m: usize) -> PointSet {
    let mut set = a0.clone();
    for level in (1..=m).rev() {
        set = hutchinson_apply(schedule.at(level), &set);
    }
    set
}

/// Backward trajectory `psi_m(A0) = W_1 o ... o W_m (A0)` until successive
/// sets are within `tol` in Hausdorff distance.
///
/// When the horizon is reached without convergence the failure is classified:
/// if the Lipschitz products are still above `1e-4 * max(1, sum)` the product
/// series looks non-summable and the run reports that instead of a plain
/// convergence failure.
pub fn backward_trajectory_sets(
    schedule: &LevelSchedule,
    a0: &PointSet,
    max_levels: usize,
    tol: f64,
) -> Result<SetTrajectoryReport> {
    schedule.is_valid()?;
    if a0.is_empty() {
        return Err(Error::EmptySet);
    }
    if max_levels < 1 || tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid(
            "trajectory",
            "need max_levels >= 1 and tol > 0",
        ));
    }
    let mut distances = Vec::new();
    let mut prev = backward_set(schedule, a0, 1);
    let mut levels_run = 1usize;
    let mut converged = false;
    for m in 1..=max_levels {
        let next = backward_set(schedule, a0, m + 1);
        let d = hausdorff_distance(&next, &prev)?;
        distances.push(d);
        prev = next;
        levels_run = m + 1;
        if d <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        let mut product = 1.0f64;
        let mut sum = 0.0f64;
        for m in 1..=max_levels {
            product *= schedule.at(m).lipschitz();
            sum += product;
        }
        if product > 1e-4 * sum.max(1.0) {
            return Err(Error::SummabilityDoubtful {
                horizon: max_levels,
                last: product,
            });
        }
        return Err(Error::NoConvergence {
            steps: levels_run,
            last: *distances.last().unwrap(),
            tol,
        });
    }
    let contraction_ratio = ratio_estimate(&distances);
    Ok(SetTrajectoryReport {
        levels_run,
        distances,
        contraction_ratio,
        converged,
        final_set: prev,
    })
}

/// Forward trajectory `phi_m(A0) = W_m o ... o W_1 (A0)`, for contrast with
/// the backward one; incremental since new levels apply on the outside.
pub fn forward_trajectory_sets(
    schedule: &LevelSchedule,
    a0: &PointSet,
    max_levels: usize,
    tol: f64,
) -> Result<SetTrajectoryReport> {
    schedule.is_valid()?;
    if a0.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut distances = Vec::new();
    let mut prev = hutchinson_apply(schedule.at(1), a0);
    let mut levels_run = 1usize;
    let mut converged = false;
    for m in 2..=max_levels + 1 {
        let next = hutchinson_apply(schedule.at(m), &prev);
        let d = hausdorff_distance(&next, &prev)?;
        distances.push(d);
        prev = next;
        levels_run = m;
        if d <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            steps: levels_run,
            last: distances.last().copied().unwrap_or(f64::INFINITY),
            tol,
        });
    }
    let contraction_ratio = ratio_estimate(&distances);
    Ok(SetTrajectoryReport {
        levels_run,
        distances,
        contraction_ratio,
        converged,
        final_set: prev,
    })
}

/// The classical middle-thirds pair on the line.
pub fn cantor_level() -> IfsLevel {
    IfsLevel::new(vec![
        ContractionMap2D::scale_translate(1.0 / 3.0, [0.0, 0.0]),
        ContractionMap2D::scale_translate(1.0 / 3.0, [2.0 / 3.0, 0.0]),
    ])
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lipschitz_of_scalings_and_shears() {
        let s = ContractionMap2D::scale_translate(0.5, [1.0, 2.0]);
        assert!((s.lipschitz() - 0.5).abs() < 1e-15);
        // a pure shear has norm above its diagonal entries
        let shear = ContractionMap2D::new([[0.5, 0.3], [0.0, 0.5]], [0.0, 0.0]);
        assert!(shear.lipschitz() > 0.5);
    }

    #[test]
    fn hutchinson_on_singletons_and_cantor_step() {
        let level =
            IfsLevel::new(vec![ContractionMap2D::scale_translate(0.5, [0.0, 0.0])]).unwrap();
        let a = PointSet::new(vec![[1.0, 0.0]]).unwrap();
        let image = hutchinson_apply(&level, &a);
        assert_eq!(image.points(), &[[0.5, 0.0]]);

        let cantor = cantor_level();
        let a = PointSet::on_line(&[0.0, 1.0]).unwrap();
        let image = hutchinson_apply(&cantor, &a);
        let xs: Vec<f64> = image.points().iter().map(|p| p[0]).collect();
        for (got, want) in xs.iter().zip([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(image.len() <= cantor.maps().len() * a.len());
    }

    #[test]
    fn hausdorff_basics_and_triangle_inequality() {
        let a = PointSet::on_line(&[0.0]).unwrap();
        let b = PointSet::on_line(&[1.0]).unwrap();
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff_distance(&a, &b).unwrap(), 1.0);
        assert!(matches!(
            hausdorff_distance(&a, &PointSet { points: vec![] }),
            Err(Error::EmptySet)
        ));

        // deterministic pseudo-random triples
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
        };
        for _ in 0..20 {
            let mk = |n: usize, next: &mut dyn FnMut() -> f64| {
                PointSet::new((0..n).map(|_| [next(), next()]).collect()).unwrap()
            };
            let (a, b, c) = (mk(5, &mut next), mk(7, &mut next), mk(4, &mut next));
            let hab = hausdorff_distance(&a, &b).unwrap();
            let hbc = hausdorff_distance(&b, &c).unwrap();
            let hac = hausdorff_distance(&a, &c).unwrap();
            assert!(hac <= hab + hbc + 1e-12);
        }
    }

    #[test]
    fn ball_radius_formula_and_hypothesis_check() {
        // maps fixing q with Lip 0.5: any M works
        let q = [0.25, -0.5];
        let to_q = ContractionMap2D::new([[0.5, 0.0], [0.0, 0.5]], [q[0] * 0.5, q[1] * 0.5]);
        let level = IfsLevel::new(vec![to_q]).unwrap();
        let r = invariant_ball_radius(&[level], q, 0.5, 1.0).unwrap();
        assert_eq!(r, 2.0);

        // translation by 10 cannot satisfy the bound with M = 1
        let shifted =
            IfsLevel::new(vec![ContractionMap2D::scale_translate(0.5, [10.0, 0.0])]).unwrap();
        let err = invariant_ball_radius(std::slice::from_ref(&shifted), [0.0, 0.0], 0.5, 1.0)
            .unwrap_err();
        assert!(matches!(err, Error::HypothesisFailed { .. }));
        // a generous M absorbs the offset
        assert!(invariant_ball_radius(&[shifted], [0.0, 0.0], 0.5, 25.0).is_ok());
    }

    #[test]
    fn cantor_backward_matches_direct_iteration() {
        let schedule = LevelSchedule::stationary(cantor_level());
        let a0 = PointSet::on_line(&[0.0, 1.0]).unwrap();
        let report = backward_trajectory_sets(&schedule, &a0, 24, 1e-5).unwrap();
        assert!(report.converged);
        // successive distances are dominated by the Lipschitz products times
        // the one-step displacement scale (1/3 here)
        let mut product = 1.0f64;
        for d in &report.distances {
            product /= 3.0;
            assert!(
                *d <= product * (1.0 / 3.0) + 1e-12,
                "d = {d}, bound {product}"
            );
        }
        // stationary backward = plain forward iteration of the same map
        let mut direct = a0.clone();
        for _ in 0..report.levels_run {
            direct = hutchinson_apply(&cantor_level(), &direct);
        }
        let h = hausdorff_distance(&report.final_set, &direct).unwrap();
        assert!(h <= 1e-12);
    }

    #[test]
    fn stationary_forward_and_backward_agree() {
        let schedule = LevelSchedule::stationary(cantor_level());
        let a0 = PointSet::on_line(&[0.3]).unwrap();
        let tol = 1e-5;
        let fwd = forward_trajectory_sets(&schedule, &a0, 40, tol).unwrap();
        let bwd = backward_trajectory_sets(&schedule, &a0, 40, tol).unwrap();
        let h = hausdorff_distance(&fwd.final_set, &bwd.final_set).unwrap();
        assert!(h <= 2.0 * tol);
    }

    #[test]
    fn limit_is_independent_of_the_seed_set() {
        let schedule = LevelSchedule::stationary(cantor_level());
        let tol = 1e-5;
        let run = |xs: &[f64]| {
            backward_trajectory_sets(&schedule, &PointSet::on_line(xs).unwrap(), 30, tol)
                .unwrap()
                .final_set
        };
        let a = run(&[0.0, 1.0]);
        let b = run(&[0.5]);
        assert!(hausdorff_distance(&a, &b).unwrap() <= 2.0 * tol);
    }

    #[test]
    fn alternating_families_converge_with_bounded_ratio() {
        let fam_a = IfsLevel::new(vec![
            ContractionMap2D::scale_translate(0.5, [0.0, 0.0]),
            ContractionMap2D::scale_translate(0.5, [0.5, 0.0]),
            ContractionMap2D::scale_translate(0.5, [0.0, 0.5]),
        ])
        .unwrap();
        let fam_b = IfsLevel::new(vec![
            ContractionMap2D::scale_translate(0.4, [0.0, 0.0]),
            ContractionMap2D::scale_translate(0.4, [0.6, 0.0]),
            ContractionMap2D::scale_translate(0.4, [0.0, 0.6]),
        ])
        .unwrap();
        let schedule = LevelSchedule::Cycle(vec![fam_a, fam_b]);
        let a0 = PointSet::new(vec![[0.3, 0.3]]).unwrap();
        let report = backward_trajectory_sets(&schedule, &a0, 16, 5e-3).unwrap();
        assert!(report.converged);
        let ratio = report.contraction_ratio.unwrap();
        assert!(ratio <= 0.5 + 0.05, "ratio {ratio}");
    }

    #[test]
    fn non_summable_products_are_flagged() {
        let expand =
            IfsLevel::new(vec![ContractionMap2D::scale_translate(2.0, [0.0, 0.0])]).unwrap();
        let shrink =
            IfsLevel::new(vec![ContractionMap2D::scale_translate(0.5, [0.25, 0.0])]).unwrap();
        let schedule = LevelSchedule::Cycle(vec![shrink, expand]);
        let a0 = PointSet::on_line(&[0.0, 1.0]).unwrap();
        let err = backward_trajectory_sets(&schedule, &a0, 12, 1e-9).unwrap_err();
        assert!(matches!(err, Error::SummabilityDoubtful { .. }));
    }
}
