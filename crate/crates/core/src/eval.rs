//! Controlled experiments: noise and outlier injection, viewpoint sweeps,
//! the variant grid, and the 2D/3D metrics they report.

use std::io::Write;
use std::time::Instant;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::camera::{project, Camera};
use crate::error::{Error, Result};
use crate::lifter::{LiftOptions, VariantConfig, DEFAULT_THETA};
use crate::pipeline::{alternate, multi_start, AlternationOptions, InitializationSet, LiftSetup, Selection};
use crate::skeleton::{default_limbs, rotate_about_y, rotation_about_y, to_local_frame, Joint, Limb, LimbSpec, Pose2D, Pose3D, NUM_JOINTS};
use crate::synthetic::Instance;

/// Gaussian noise of level `level`: per-coordinate std `level * step`, so the
/// default step puts level 10 at the right-lower-leg length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub level: u32,
    pub step: f64,
    pub seed: u64,
}

pub const NOISE_LEVELS: u32 = 10;
pub const DEFAULT_NOISE_STEP: f64 = 0.1;

impl NoiseSpec {
    pub fn new(level: u32, seed: u64) -> Result<Self> {
        let spec = Self {
            level,
            step: DEFAULT_NOISE_STEP,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn std(&self) -> f64 {
        self.level as f64 * self.step
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=NOISE_LEVELS).contains(&self.level) {
            return Err(Error::Config(format!(
                "noise level must be in 1..={NOISE_LEVELS}, got {}",
                self.level
            )));
        }
        if !(self.step >= 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!("noise step must be nonnegative, got {}", self.step)));
        }
        Ok(())
    }
}

pub fn add_noise(x2d: &Pose2D, spec: &NoiseSpec) -> Result<Pose2D> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let std = spec.std();
    let v: Vec<f64> = x2d
        .as_slice()
        .iter()
        .map(|&c| c + std * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Pose2D::new(&v)
}

/// Gross errors on a few joints, as from a detector confusing body parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutlierSpec {
    pub joints: usize,
    pub min_offset: f64,
    pub max_offset: f64,
    pub seed: u64,
}

impl OutlierSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            joints: 1,
            min_offset: 0.5,
            max_offset: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints == 0 || self.joints > NUM_JOINTS {
            return Err(Error::Config(format!("outlier joint count must be in 1..={NUM_JOINTS}")));
        }
        if !(0.0 <= self.min_offset && self.min_offset <= self.max_offset && self.max_offset.is_finite()) {
            return Err(Error::Config("outlier offsets must satisfy 0 ≤ min ≤ max".into()));
        }
        Ok(())
    }
}

/// Moves `spec.joints` distinct joints by offsets of length drawn uniformly
/// from `[min_offset, max_offset]` in uniformly random directions.
pub fn add_outliers(x2d: &Pose2D, spec: &OutlierSpec) -> Result<Pose2D> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut joints = x2d.joints();
    for j in rand::seq::index::sample(&mut rng, NUM_JOINTS, spec.joints) {
        let len = if spec.max_offset > spec.min_offset {
            rng.random_range(spec.min_offset..=spec.max_offset)
        } else {
            spec.min_offset
        };
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        joints[j] += Vector2::new(phi.cos(), phi.sin()) * len;
    }
    Ok(Pose2D::from_joints(&joints))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Perturbation {
    None,
    Gaussian(NoiseSpec),
    Outliers(OutlierSpec),
}

impl Perturbation {
    pub fn apply(&self, x2d: &Pose2D) -> Result<Pose2D> {
        match self {
            Perturbation::None => Ok(x2d.clone()),
            Perturbation::Gaussian(n) => add_noise(x2d, n),
            Perturbation::Outliers(o) => add_outliers(x2d, o),
        }
    }

    /// Same perturbation with a seed specific to `instance`.
    pub fn for_instance(&self, instance: usize) -> Self {
        match *self {
            Perturbation::None => Perturbation::None,
            Perturbation::Gaussian(mut n) => {
                n.seed = mix_seed(n.seed, instance as u64);
                Perturbation::Gaussian(n)
            }
            Perturbation::Outliers(mut o) => {
                o.seed = mix_seed(o.seed, instance as u64);
                Perturbation::Outliers(o)
            }
        }
    }
}

/// SplitMix64 finalizer over `seed` and `salt`.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn pose_error(y: &Pose3D, estimate: &Pose3D) -> f64 {
    (y.to_dvector() - estimate.to_dvector()).norm()
}

pub fn joint_errors(y: &Pose3D, estimate: &Pose3D) -> [f64; NUM_JOINTS] {
    std::array::from_fn(|j| (y.joint(j) - estimate.joint(j)).norm())
}

pub fn pixel_distance(estimate: &Pose2D, truth: &Pose2D) -> f64 {
    (estimate.to_dvector() - truth.to_dvector()).norm()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pcp {
    /// Per limb: `Some(correct)`, or `None` when the ground-truth segment has
    /// zero length and the part is left out.
    pub parts: Vec<(Limb, Option<bool>)>,
    /// Fraction of scored parts that are correct; NaN when none are scored.
    pub overall: f64,
}

impl Pcp {
    pub fn excluded(&self) -> Vec<Limb> {
        self.parts.iter().filter(|(_, c)| c.is_none()).map(|(l, _)| *l).collect()
    }

    pub fn part(&self, limb: Limb) -> Option<bool> {
        self.parts.iter().find(|(l, _)| *l == limb).and_then(|(_, c)| *c)
    }
}

/// A part is correct when both of its endpoints lie within half the
/// ground-truth segment length of their true positions.
pub fn pcp(estimate: &Pose2D, truth: &Pose2D, limbs: &[Limb]) -> Pcp {
    let mut parts = Vec::with_capacity(limbs.len());
    let (mut scored, mut correct) = (0usize, 0usize);
    for &limb in limbs {
        let (a, b) = limb.endpoints();
        let (a, b) = (a.index(), b.index());
        let len = (truth.joint(a) - truth.joint(b)).norm();
        if !(len > 0.0) {
            parts.push((limb, None));
            continue;
        }
        let ok = (estimate.joint(a) - truth.joint(a)).norm() <= 0.5 * len
            && (estimate.joint(b) - truth.joint(b)).norm() <= 0.5 * len;
        scored += 1;
        correct += ok as usize;
        parts.push((limb, Some(ok)));
    }
    let overall = if scored == 0 { f64::NAN } else { correct as f64 / scored as f64 };
    Pcp { parts, overall }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CameraMode {
    /// Lift with the ground-truth camera; isolates the pose solver.
    Known,
    /// Alternate camera and pose estimation from the configured starts.
    Estimated,
}

impl std::str::FromStr for CameraMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "known" => Ok(CameraMode::Known),
            "estimated" => Ok(CameraMode::Estimated),
            _ => Err(Error::Config(format!("unknown camera mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Grid,
    Noise,
    Outliers,
    Viewpoint,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Grid => "grid",
            Experiment::Noise => "noise",
            Experiment::Outliers => "outliers",
            Experiment::Viewpoint => "viewpoint",
        }
    }
}

/// Shared solver settings for an experiment.
#[derive(Clone, Debug)]
pub struct EvalContext<'a> {
    pub basis: &'a Basis,
    pub limbs: Vec<LimbSpec>,
    pub theta: f64,
    pub lift: LiftOptions,
    pub camera_mode: CameraMode,
    pub alternation: AlternationOptions,
    /// Starts for estimated-camera runs; the mean pose when `None`.
    pub inits: Option<InitializationSet>,
    /// Pick among starts by ground-truth error instead of reprojection.
    pub select_by_truth: bool,
}

impl<'a> EvalContext<'a> {
    pub fn new(basis: &'a Basis) -> Self {
        Self {
            basis,
            limbs: default_limbs(),
            theta: DEFAULT_THETA,
            lift: LiftOptions::default(),
            camera_mode: CameraMode::Known,
            alternation: AlternationOptions::default(),
            inits: None,
            select_by_truth: false,
        }
    }

    pub fn setup(&self, variant: VariantConfig) -> LiftSetup<'a> {
        LiftSetup {
            basis: self.basis,
            limbs: self.limbs.clone(),
            theta: self.theta,
            variant,
            options: self.lift,
        }
    }
}

/// One solve, scored against ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub experiment: Experiment,
    pub variant: VariantConfig,
    pub instance: usize,
    /// Noise level, rotation angle in degrees, or 0 for the plain grid.
    pub condition: f64,
    pub error_3d: f64,
    pub joint_errors: Vec<f64>,
    pub pcp: Pcp,
    pub pixel_distance: f64,
    pub residual_l1: f64,
    pub max_limb_violation: f64,
    pub active_count: usize,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
    /// Solver error message, with all metrics NaN.
    pub failure: Option<String>,
    /// Wall time in seconds; left out of CSV reports so they stay
    /// reproducible.
    pub runtime: f64,
}

impl EvalRecord {
    fn failed(experiment: Experiment, variant: VariantConfig, instance: usize, condition: f64, err: &Error, runtime: f64) -> Self {
        Self {
            experiment,
            variant,
            instance,
            condition,
            error_3d: f64::NAN,
            joint_errors: vec![f64::NAN; NUM_JOINTS],
            pcp: Pcp {
                parts: Limb::ALL.iter().map(|&l| (l, None)).collect(),
                overall: f64::NAN,
            },
            pixel_distance: f64::NAN,
            residual_l1: f64::NAN,
            max_limb_violation: f64::NAN,
            active_count: 0,
            outer_iterations: 0,
            inner_iterations: 0,
            converged: false,
            failure: Some(err.to_string()),
            runtime,
        }
    }

    pub fn is_failure(&self) -> bool {
        self.failure.is_some()
    }
}

/// A single evaluation case: observed 2D joints plus the truth they came from.
#[derive(Clone, Debug)]
pub struct Trial<'t> {
    pub instance: usize,
    pub condition: f64,
    pub observed: Pose2D,
    pub truth3d: &'t Pose3D,
    /// Clean projection of the truth, for 2D metrics.
    pub truth2d: &'t Pose2D,
    pub camera: Camera,
}

pub fn evaluate(ctx: &EvalContext, experiment: Experiment, variant: VariantConfig, trial: &Trial) -> EvalRecord {
    let start = Instant::now();
    let setup = ctx.setup(variant);
    let solved = match ctx.camera_mode {
        CameraMode::Known => setup.lift(&trial.observed, trial.camera, None).map(|r| (r, trial.camera, Vector2::zeros())),
        CameraMode::Estimated => {
            let selection = if ctx.select_by_truth {
                Selection::GroundTruth(trial.truth3d)
            } else {
                Selection::Reprojection
            };
            let run = match &ctx.inits {
                None => alternate(&trial.observed, &setup, &ctx.basis.mean, &ctx.alternation),
                Some(inits) => multi_start(&trial.observed, &setup, inits, &ctx.alternation, selection).map(|m| m.best),
            };
            run.map(|a| (a.result, a.camera, a.offset))
        }
    };
    let runtime = start.elapsed().as_secs_f64();
    match solved {
        Err(e) => EvalRecord::failed(experiment, variant, trial.instance, trial.condition, &e, runtime),
        Ok((result, camera, offset)) => {
            let est2d = project(&result.pose, &camera).translated(offset);
            EvalRecord {
                experiment,
                variant,
                instance: trial.instance,
                condition: trial.condition,
                error_3d: pose_error(trial.truth3d, &result.pose),
                joint_errors: joint_errors(trial.truth3d, &result.pose).to_vec(),
                pcp: pcp(&est2d, trial.truth2d, &Limb::ALL),
                pixel_distance: pixel_distance(&est2d, trial.truth2d),
                residual_l1: result.residual_l1,
                max_limb_violation: result.max_limb_violation(),
                active_count: result.coefficients.active_count(),
                outer_iterations: result.outer_iterations,
                inner_iterations: result.inner_iterations,
                converged: result.converged,
                failure: None,
                runtime,
            }
        }
    }
}

/// Every variant on every instance under the same perturbation. Records come
/// back ordered by instance, then by position in `variants`.
pub fn run_variant_grid(
    ctx: &EvalContext,
    instances: &[Instance],
    variants: &[VariantConfig],
    perturbation: &Perturbation,
) -> Result<Vec<EvalRecord>> {
    if instances.is_empty() {
        return Err(Error::Data("variant grid needs at least one instance".into()));
    }
    if variants.is_empty() {
        return Err(Error::Config("variant grid needs at least one variant".into()));
    }
    let (experiment, condition) = match perturbation {
        Perturbation::None => (Experiment::Grid, 0.0),
        Perturbation::Gaussian(n) => (Experiment::Noise, n.level as f64),
        Perturbation::Outliers(o) => (Experiment::Outliers, o.joints as f64),
    };
    let observed = instances
        .iter()
        .map(|inst| perturbation.for_instance(inst.id).apply(&inst.pose2d))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..variants.len()).map(move |v| (i, v)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(i, v)| {
            let inst = &instances[i];
            let trial = Trial {
                instance: inst.id,
                condition,
                observed: observed[i].clone(),
                truth3d: &inst.pose3d,
                truth2d: &inst.pose2d,
                camera: inst.camera,
            };
            evaluate(ctx, experiment, variants[v], &trial)
        })
        .collect())
}

/// Grid runs at each noise level in `levels`.
pub fn noise_sweep(
    ctx: &EvalContext,
    instances: &[Instance],
    variants: &[VariantConfig],
    levels: &[u32],
    seed: u64,
) -> Result<Vec<EvalRecord>> {
    let mut out = Vec::new();
    for &level in levels {
        let spec = NoiseSpec::new(level, mix_seed(seed, level as u64))?;
        out.extend(run_variant_grid(ctx, instances, variants, &Perturbation::Gaussian(spec))?);
    }
    Ok(out)
}

/// Rotates `pose` (in its local frame) about the vertical axis by each angle,
/// projects it with `camera` and lifts it back. Errors are measured against
/// the local-frame pose: with a known camera the lift uses `camera` composed
/// with the rotation, which sees the unrotated pose from a new direction.
pub fn viewpoint_sweep(
    ctx: &EvalContext,
    instance: usize,
    pose3d: &Pose3D,
    angles: &[f64],
    camera: &Camera,
    variant: VariantConfig,
) -> Vec<EvalRecord> {
    let local = match to_local_frame(pose3d) {
        Ok(p) => p,
        Err(e) => {
            return angles
                .iter()
                .map(|&a| EvalRecord::failed(Experiment::Viewpoint, variant, instance, a, &e, 0.0))
                .collect()
        }
    };
    angles
        .iter()
        .map(|&angle| {
            let rotated = rotate_about_y(&local, angle);
            let observed = project(&rotated, camera);
            let r = rotation_about_y(angle);
            let view = Camera::new(r.transpose() * camera.m1, r.transpose() * camera.m2);
            let truth2d = project(&local, &view);
            let trial = Trial {
                instance,
                condition: angle,
                observed,
                truth3d: &local,
                truth2d: &truth2d,
                camera: view,
            };
            evaluate(ctx, Experiment::Viewpoint, variant, &trial)
        })
        .collect()
}

/// [`viewpoint_sweep`] over many instances and variants, in parallel.
pub fn viewpoint_grid(
    ctx: &EvalContext,
    instances: &[Instance],
    variants: &[VariantConfig],
    angles: &[f64],
) -> Vec<EvalRecord> {
    let jobs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..variants.len()).map(move |v| (i, v)))
        .collect();
    let mut per_job: Vec<Vec<EvalRecord>> = jobs
        .par_iter()
        .map(|&(i, v)| {
            let inst = &instances[i];
            viewpoint_sweep(ctx, inst.id, &inst.pose3d, angles, &inst.camera, variants[v])
        })
        .collect();
    // Order by angle, then instance, then variant.
    let mut out = Vec::with_capacity(jobs.len() * angles.len());
    for a in 0..angles.len() {
        for recs in per_job.iter_mut() {
            out.push(recs[a].clone());
        }
    }
    out
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolated quantile of the finite entries; NaN if there are none.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub variant: VariantConfig,
    pub condition: f64,
    pub count: usize,
    pub failures: usize,
    pub median_error: f64,
    pub mean_error: f64,
    pub q25_error: f64,
    pub q75_error: f64,
    pub mean_pcp: f64,
    pub median_pixel_distance: f64,
}

/// Aggregates records per (experiment, variant, condition), in order of
/// first appearance.
pub fn summarize(records: &[EvalRecord]) -> Vec<Summary> {
    let mut keys: Vec<(Experiment, VariantConfig, f64)> = Vec::new();
    for r in records {
        let key = (r.experiment, r.variant, r.condition);
        if !keys.iter().any(|k| k.0 == key.0 && k.1 == key.1 && k.2.to_bits() == key.2.to_bits()) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(experiment, variant, condition)| {
            let group: Vec<&EvalRecord> = records
                .iter()
                .filter(|r| r.experiment == experiment && r.variant == variant && r.condition.to_bits() == condition.to_bits())
                .collect();
            let errors: Vec<f64> = group.iter().map(|r| r.error_3d).collect();
            let ok: Vec<&&EvalRecord> = group.iter().filter(|r| !r.is_failure()).collect();
            let mean = |f: &dyn Fn(&EvalRecord) -> f64| {
                let v: Vec<f64> = ok.iter().map(|r| f(r)).filter(|x| x.is_finite()).collect();
                if v.is_empty() {
                    f64::NAN
                } else {
                    v.iter().sum::<f64>() / v.len() as f64
                }
            };
            let pixels: Vec<f64> = group.iter().map(|r| r.pixel_distance).collect();
            Summary {
                experiment,
                variant,
                condition,
                count: group.len(),
                failures: group.len() - ok.len(),
                median_error: median(&errors),
                mean_error: mean(&|r| r.error_3d),
                q25_error: quantile(&errors, 0.25),
                q75_error: quantile(&errors, 0.75),
                mean_pcp: mean(&|r| r.pcp.overall),
                median_pixel_distance: median(&pixels),
            }
        })
        .collect()
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn record_header() -> Vec<String> {
    let mut h: Vec<String> = ["experiment", "variant", "instance", "condition", "error_3d"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(Joint::ALL.iter().map(|j| format!("err_{}", j.name())));
    h.extend(Limb::ALL.iter().map(|l| format!("pcp_{}", l.code())));
    h.extend(
        [
            "pcp",
            "pixel_distance",
            "residual_l1",
            "max_limb_violation",
            "active_count",
            "outer_iterations",
            "inner_iterations",
            "converged",
            "failure",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

fn record_row(r: &EvalRecord) -> Vec<String> {
    let mut row = vec![
        r.experiment.name().to_string(),
        r.variant.name().to_string(),
        r.instance.to_string(),
        fmt_float(r.condition),
        fmt_float(r.error_3d),
    ];
    row.extend(r.joint_errors.iter().map(|&e| fmt_float(e)));
    row.extend(Limb::ALL.iter().map(|&l| {
        match r.pcp.parts.iter().find(|(p, _)| *p == l).and_then(|(_, c)| *c) {
            Some(true) => "1".to_string(),
            Some(false) => "0".to_string(),
            None => String::new(),
        }
    }));
    row.extend([
        fmt_float(r.pcp.overall),
        fmt_float(r.pixel_distance),
        fmt_float(r.residual_l1),
        fmt_float(r.max_limb_violation),
        r.active_count.to_string(),
        r.outer_iterations.to_string(),
        r.inner_iterations.to_string(),
        r.converged.to_string(),
        r.failure.clone().unwrap_or_default(),
    ]);
    row
}

/// One row per record. Runtime is omitted so identical runs give identical
/// bytes.
pub fn write_records_csv<W: Write>(records: &[EvalRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(record_header()).map_err(csv_error)?;
    for r in records {
        w.write_record(record_row(r)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(summaries: &[Summary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "experiment",
        "variant",
        "condition",
        "count",
        "failures",
        "median_error",
        "mean_error",
        "q25_error",
        "q75_error",
        "mean_pcp",
        "median_pixel_distance",
    ])
    .map_err(csv_error)?;
    for s in summaries {
        w.write_record([
            s.experiment.name().to_string(),
            s.variant.name().to_string(),
            fmt_float(s.condition),
            s.count.to_string(),
            s.failures.to_string(),
            fmt_float(s.median_error),
            fmt_float(s.mean_error),
            fmt_float(s.q25_error),
            fmt_float(s.q75_error),
            fmt_float(s.mean_pcp),
            fmt_float(s.median_pixel_distance),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Data(format!("csv: {other:?}")),
    }
}

/// Finite 3D errors of `variant` in `records`.
pub fn errors_of(records: &[EvalRecord], variant: VariantConfig) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.variant == variant && r.error_3d.is_finite())
        .map(|r| r.error_3d)
        .collect()
}
