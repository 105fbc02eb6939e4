//! Camera/pose alternation with mean-pose or cluster-center restarts.

use nalgebra::{DVector, Vector2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::camera::{center_columns2, center_columns3, estimate_camera_lenient, pose2d_matrix, pose3d_matrix, Camera, CameraOptions};
use crate::error::{Error, Result};
use crate::lifter::{lift_from, LiftOptions, LiftProblem, LiftResult, VariantConfig, DEFAULT_THETA};
use crate::skeleton::{default_limbs, LimbSpec, Pose2D, Pose3D};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    #[serde(alias = "mean")]
    MeanPose,
    #[serde(alias = "clusters")]
    ClusterCenters,
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" | "mean-pose" => Ok(InitMode::MeanPose),
            "clusters" | "cluster-centers" => Ok(InitMode::ClusterCenters),
            _ => Err(Error::Config(format!("unknown init mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlternationOptions {
    pub max_outer: usize,
    /// Stop when `‖y_new − y_old‖ / max(‖y_old‖, 1)` falls below this.
    pub tol: f64,
    pub init: InitMode,
    pub camera: CameraOptions,
}

impl Default for AlternationOptions {
    fn default() -> Self {
        Self {
            max_outer: 20,
            tol: 1e-4,
            init: InitMode::MeanPose,
            camera: CameraOptions::default(),
        }
    }
}

impl AlternationOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer == 0 {
            return Err(Error::Config("max outer iterations must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("outer tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Everything needed to lift one 2D pose once the camera is known.
#[derive(Clone, Debug)]
pub struct LiftSetup<'a> {
    pub basis: &'a Basis,
    pub limbs: Vec<LimbSpec>,
    pub theta: f64,
    pub variant: VariantConfig,
    pub options: LiftOptions,
}

impl<'a> LiftSetup<'a> {
    /// Full method with default limbs, θ and solver options.
    pub fn new(basis: &'a Basis) -> Self {
        Self {
            basis,
            limbs: default_limbs(),
            theta: DEFAULT_THETA,
            variant: VariantConfig::FULL,
            options: LiftOptions::default(),
        }
    }

    pub fn with_variant(mut self, variant: VariantConfig) -> Self {
        self.variant = variant;
        self
    }

    pub fn problem(&self, x: Pose2D, camera: Camera) -> Result<LiftProblem<'a>> {
        LiftProblem::new(x, self.basis, camera, self.limbs.clone(), self.theta, self.variant)
    }

    pub fn lift(&self, x: &Pose2D, camera: Camera, warm: Option<&DVector<f64>>) -> Result<LiftResult> {
        lift_from(&self.problem(x.clone(), camera)?, &self.options, warm)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitializationSet {
    poses: Vec<Pose3D>,
}

impl InitializationSet {
    pub fn new(poses: Vec<Pose3D>) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::Data("initialization set is empty".into()));
        }
        Ok(Self { poses })
    }

    pub fn mean(basis: &Basis) -> Self {
        Self {
            poses: vec![basis.mean.clone()],
        }
    }

    pub fn poses(&self) -> &[Pose3D] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct KMeans {
    pub centroids: Vec<DVector<f64>>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub sse_history: Vec<f64>,
}

fn nearest(p: &DVector<f64>, centroids: &[DVector<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = (p - c).norm_squared();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iter` is reached.
pub fn kmeans(points: &[DVector<f64>], k: usize, seed: u64, max_iter: usize) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::Data("k-means needs k ≥ 1".into()));
    }
    if k > points.len() {
        return Err(Error::Data(format!(
            "asked for {k} clusters from {} points",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| (p - &centroids[0]).norm_squared()).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(&mut rng),
            // All remaining mass is zero: duplicates only, any point will do.
            Err(_) => rng.random_range(0..points.len()),
        };
        centroids.push(points[next].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min((p - &centroids[centroids.len() - 1]).norm_squared());
        }
    }

    let dim = points[0].len();
    let mut assignments = vec![usize::MAX; points.len()];
    let mut sse_history = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for (a, p) in assignments.iter_mut().zip(points) {
            let (c, _) = nearest(p, &centroids);
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        let mut sums = vec![DVector::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assignments.iter().zip(points) {
            sums[a] += p;
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = &sums[c] / counts[c] as f64;
            }
            // An empty cluster keeps its old center, which cannot raise the SSE.
        }
        let after: f64 = points
            .iter()
            .zip(&assignments)
            .map(|(p, &a)| (p - &centroids[a]).norm_squared())
            .sum();
        sse_history.push(after);
        if !changed {
            break;
        }
    }
    Ok(KMeans {
        centroids,
        assignments,
        sse_history,
    })
}

/// Cluster centers of `poses`, used as restart points.
pub fn kmeans_poses(poses: &[Pose3D], k: usize, seed: u64) -> Result<InitializationSet> {
    let points: Vec<DVector<f64>> = poses.iter().map(Pose3D::to_dvector).collect();
    let km = kmeans(&points, k, seed, 100)?;
    let poses = km
        .centroids
        .iter()
        .map(Pose3D::from_dvector)
        .collect::<Result<Vec<_>>>()?;
    InitializationSet::new(poses)
}

#[derive(Clone, Debug)]
pub struct Alternation {
    /// Best iterate by L1 reprojection residual.
    pub result: LiftResult,
    pub camera: Camera,
    /// L1 reprojection residual after each outer iteration.
    pub history: Vec<f64>,
    /// 2D centroid removed from the input; add it back to projections.
    pub offset: Vector2<f64>,
    pub converged: bool,
    /// Camera estimation failed after the first iteration and the loop
    /// stopped early.
    pub camera_failed: bool,
}

impl Alternation {
    /// Projection of the recovered pose, in the input's 2D frame.
    pub fn projected(&self) -> Pose2D {
        crate::camera::project(&self.result.pose, &self.camera).translated(self.offset)
    }
}

fn centered_pose2d(x2d: &Pose2D) -> Result<(Pose2D, Vector2<f64>)> {
    let (xc, offset) = center_columns2(&pose2d_matrix(x2d));
    Ok((Pose2D::new(xc.as_slice())?, offset))
}

/// Alternates camera estimation and lifting starting from `init`.
pub fn alternate(x2d: &Pose2D, setup: &LiftSetup, init: &Pose3D, opts: &AlternationOptions) -> Result<Alternation> {
    opts.validate()?;
    let (xc, offset) = centered_pose2d(x2d)?;
    let xm = pose2d_matrix(&xc);
    let mut y = init.clone();
    let mut warm: Option<DVector<f64>> = None;
    let mut best: Option<(LiftResult, Camera)> = None;
    let mut history = Vec::new();
    let mut converged = false;
    let mut camera_failed = false;
    for it in 1..=opts.max_outer {
        let (ym, _) = center_columns3(&pose3d_matrix(&y));
        let camera = match estimate_camera_lenient(&xm, &ym, &opts.camera) {
            Ok(est) if est.camera.is_valid() => est.camera,
            Ok(_) | Err(_) if it > 1 => {
                camera_failed = true;
                break;
            }
            Ok(_) => return Err(Error::Pipeline("initial camera estimate is degenerate".into())),
            Err(e) => return Err(Error::Pipeline(format!("initial camera estimate failed: {e}"))),
        };
        let result = match setup.lift(&xc, camera, warm.as_ref()) {
            Ok(r) => r,
            Err(e) if it == 1 => return Err(Error::Pipeline(format!("initial lift failed: {e}"))),
            Err(_) => {
                camera_failed = true;
                break;
            }
        };
        history.push(result.residual_l1);
        let y_old = y.to_dvector();
        let y_new = result.pose.to_dvector();
        let change = (&y_new - &y_old).norm() / y_old.norm().max(1.0);
        y = result.pose.clone();
        warm = Some(result.coefficients.0.clone());
        if best.as_ref().is_none_or(|(b, _)| result.residual_l1 < b.residual_l1) {
            best = Some((result, camera));
        }
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    let (result, camera) = best.expect("first iteration either succeeds or returns");
    Ok(Alternation {
        result,
        camera,
        history,
        offset,
        converged,
        camera_failed,
    })
}

/// How [`multi_start`] picks among its starts.
#[derive(Clone, Copy, Debug)]
pub enum Selection<'a> {
    /// Smallest final L1 reprojection residual; the only choice available
    /// at inference time.
    Reprojection,
    /// Smallest 3D error against a known pose, for evaluation.
    GroundTruth(&'a Pose3D),
}

impl Selection<'_> {
    fn score(&self, a: &Alternation) -> f64 {
        match self {
            Selection::Reprojection => a.result.residual_l1,
            Selection::GroundTruth(gt) => (a.result.pose.to_dvector() - gt.to_dvector()).norm(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MultiStart {
    pub best: Alternation,
    /// Index of the chosen start within the initialization set.
    pub start: usize,
    /// Selection score of every start; `None` where the start failed.
    pub scores: Vec<Option<f64>>,
}

/// Runs [`alternate`] from every initialization (in parallel) and keeps the
/// best by `selection`. Ties go to the lower index.
pub fn multi_start(
    x2d: &Pose2D,
    setup: &LiftSetup,
    inits: &InitializationSet,
    opts: &AlternationOptions,
    selection: Selection,
) -> Result<MultiStart> {
    opts.validate()?;
    let runs: Vec<Result<Alternation>> = inits
        .poses()
        .par_iter()
        .map(|init| alternate(x2d, setup, init, opts))
        .collect();
    let scores: Vec<Option<f64>> = runs
        .iter()
        .map(|r| r.as_ref().ok().map(|a| selection.score(a)))
        .collect();
    let mut pick: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(s) = s {
            if pick.is_none_or(|p| *s < scores[p].expect("picked starts have scores")) {
                pick = Some(i);
            }
        }
    }
    match pick {
        Some(i) => {
            let best = runs.into_iter().nth(i).expect("index in range").expect("picked start succeeded");
            Ok(MultiStart { best, start: i, scores })
        }
        None => {
            let msgs: Vec<String> = runs
                .into_iter()
                .enumerate()
                .filter_map(|(i, r)| r.err().map(|e| format!("start {i}: {e}")))
                .collect();
            Err(Error::Pipeline(format!("all starts failed: {}", msgs.join("; "))))
        }
    }
}

/// Restart set for `mode`; cluster centers need the training poses.
pub fn initialization_set(
    mode: InitMode,
    basis: &Basis,
    training: Option<&[Pose3D]>,
    clusters: usize,
    seed: u64,
) -> Result<InitializationSet> {
    match mode {
        InitMode::MeanPose => Ok(InitializationSet::mean(basis)),
        InitMode::ClusterCenters => {
            let poses = training.ok_or_else(|| Error::Config("cluster initialization needs training poses".into()))?;
            kmeans_poses(poses, clusters, seed)
        }
    }
}
