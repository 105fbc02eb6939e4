use std::fs;
use std::path::{Path, PathBuf};

use poselift::basis::{learn_classwise_pca, learn_pca, learn_sparse_dictionary, BasisMethod};
use poselift::camera::{center_columns2, center_columns3, estimate_camera, pose2d_matrix, pose3d_matrix, CameraEstimate};
use poselift::eval::{
    mix_seed, noise_sweep, run_variant_grid, summarize, viewpoint_grid, write_records_csv, write_summary_csv,
    CameraMode, EvalContext, EvalRecord, NoiseSpec, OutlierSpec, Perturbation,
};
use poselift::io::{
    parse_pose_file, read_basis, read_camera, read_config, read_json, write_basis, write_json, write_pose_csv,
    write_pose_json, Config, LiftOutput, Poses, RunManifest,
};
use poselift::pipeline::{initialization_set, multi_start, Selection};
use poselift::plot::{plot_report, PlotKind};
use poselift::synthetic::{CorpusSpec, Generator, Instance};
use poselift::{Basis, Error, InitializationSet, LiftSetup, Pose2D, Pose3D, VariantConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::{Cli, Command, EvalArgs, Failure, StartArgs};

type Res<T> = Result<T, Failure>;

/// Resolved configuration plus everything a manifest needs.
struct Run {
    config: Config,
    command: &'static str,
    inputs: Vec<PathBuf>,
}

impl Run {
    fn input<'p>(&mut self, path: &'p Path) -> &'p Path {
        self.inputs.push(path.to_path_buf());
        path
    }

    fn finish(&self, outputs: &[&Path]) -> Res<()> {
        let args: Vec<String> = std::env::args().skip(1).collect();
        let inputs: Vec<&Path> = self.inputs.iter().map(PathBuf::as_path).collect();
        for out in outputs {
            RunManifest::new(self.command, args.clone(), &self.config, &inputs, &[out])?.write_next_to(out)?;
            println!("wrote {}", out.display());
        }
        Ok(())
    }
}

pub fn run(cli: Cli) -> Res<()> {
    let mut config = match &cli.config {
        Some(p) => read_config(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.dictionary.seed = seed;
    }
    let command = match &cli.command {
        Command::LearnBases(_) => "learn-bases",
        Command::Lift(_) => "lift",
        Command::EstimateCamera(_) => "estimate-camera",
        Command::EvalNoise(_) => "eval-noise",
        Command::EvalViewpoint(_) => "eval-viewpoint",
        Command::EvalGrid(_) => "eval-grid",
        Command::GenSynthetic(_) => "gen-synthetic",
        Command::Plot(_) => "plot",
    };
    let mut run = Run {
        config,
        command,
        inputs: cli.config.iter().cloned().collect(),
    };
    match cli.command {
        Command::LearnBases(a) => learn_bases(&mut run, a),
        Command::Lift(a) => lift(&mut run, a),
        Command::EstimateCamera(a) => camera(&mut run, a),
        Command::EvalNoise(a) => {
            let levels = a.levels;
            eval(&mut run, a.eval, |ctx, inst, vars, seed| noise_sweep(ctx, inst, vars, &levels, seed))
        }
        Command::EvalViewpoint(a) => {
            let angles = a.angles;
            eval(&mut run, a.eval, |ctx, inst, vars, _| Ok(viewpoint_grid(ctx, inst, vars, &angles)))
        }
        Command::EvalGrid(a) => {
            let perturbation = match (a.outliers, a.noise_level) {
                (true, _) => Perturbation::Outliers(OutlierSpec::new(mix_seed(run.config.seed, 2))),
                (false, Some(level)) => Perturbation::Gaussian(NoiseSpec::new(level, mix_seed(run.config.seed, level as u64))?),
                (false, None) => Perturbation::None,
            };
            eval(&mut run, a.eval, |ctx, inst, vars, _| run_variant_grid(ctx, inst, vars, &perturbation))
        }
        Command::GenSynthetic(a) => gen_synthetic(&mut run, a),
        Command::Plot(a) => plot(&mut run, a),
    }
}

fn corpus_spec(config: &Config) -> Res<CorpusSpec> {
    Ok(CorpusSpec {
        proportions: config.proportion_table()?,
        ..CorpusSpec::default()
    })
}

fn learn_bases(run: &mut Run, a: crate::LearnArgs) -> Res<()> {
    let method: BasisMethod = a.method.parse()?;
    let file = parse_pose_file(run.input(&a.poses))?;
    let labels = file.labels.clone();
    let poses = file.into_3d(&a.poses.display().to_string())?;
    let cfg = &mut run.config;
    if let Some(t) = a.theta {
        cfg.dictionary.theta = t;
    }
    if let Some(e) = a.epochs {
        cfg.dictionary.epochs = e;
    }
    if let Some(k) = a.k {
        cfg.dictionary.k = k;
    }
    cfg.validate()?;
    let need_k = || a.k.ok_or_else(|| Failure::Usage(format!("--k is required for {} bases", a.method)));
    let basis = match method {
        BasisMethod::Pca => learn_pca(&poses, need_k()?)?,
        BasisMethod::ClasswisePca => {
            let labels = labels.ok_or_else(|| Error::Data("classwise PCA needs labelled poses".into()))?;
            learn_classwise_pca(&poses, &labels, need_k()?)?
        }
        BasisMethod::Sparse => learn_sparse_dictionary(&poses, &cfg.dictionary)?.basis,
    };
    write_basis(&a.out, &basis)?;
    run.finish(&[&a.out])
}

fn read_poses2d(run: &mut Run, path: &Path) -> Res<Vec<Pose2D>> {
    Ok(parse_pose_file(run.input(path))?.into_2d(&path.display().to_string())?)
}

fn read_poses3d(run: &mut Run, path: &Path) -> Res<Vec<Pose3D>> {
    Ok(parse_pose_file(run.input(path))?.into_3d(&path.display().to_string())?)
}

fn write_one_or_many<T: Serialize>(path: &Path, mut items: Vec<T>) -> Res<()> {
    if items.len() == 1 {
        write_json(path, &items.remove(0))?;
    } else {
        write_json(path, &items)?;
    }
    Ok(())
}

fn starts(run: &mut Run, start: &StartArgs, basis: &Basis) -> Res<InitializationSet> {
    if let Some(m) = start.outer_max {
        run.config.alternation.max_outer = m;
    }
    run.config.alternation.init = start.init;
    let training = match &start.clusters {
        Some(p) => Some(read_poses3d(run, p)?),
        None => None,
    };
    Ok(initialization_set(
        start.init,
        basis,
        training.as_deref(),
        start.n_clusters,
        run.config.seed,
    )?)
}

fn lift(run: &mut Run, a: crate::LiftArgs) -> Res<()> {
    if let Some(t) = a.theta {
        run.config.theta = t;
    }
    run.config.validate()?;
    let basis = read_basis(run.input(&a.basis))?;
    let poses = read_poses2d(run, &a.pose2d)?;
    let known = match &a.camera {
        Some(p) => Some(read_camera(run.input(p))?),
        None => None,
    };
    let inits = match known {
        Some(_) => None,
        None => Some(starts(run, &a.start, &basis)?),
    };
    let cfg = &run.config;
    let limbs = cfg.proportion_table()?.limbs();
    let limb_ids: Vec<_> = limbs.iter().map(|l| l.limb).collect();
    let setup = LiftSetup {
        basis: &basis,
        limbs,
        theta: cfg.theta,
        variant: a.variant,
        options: cfg.lift,
    };
    let outputs: Vec<LiftOutput> = poses
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let out = match (known, &inits) {
                (Some(cam), _) => setup
                    .lift(x, cam, None)
                    .map(|r| LiftOutput::new(&r, a.variant, cfg.theta, cam, &limb_ids)),
                (None, Some(inits)) => {
                    multi_start(x, &setup, inits, &cfg.alternation, Selection::Reprojection).map(|m| {
                        let best = m.best;
                        let mut out = LiftOutput::new(&best.result, a.variant, cfg.theta, best.camera, &limb_ids);
                        out.offset = Some([best.offset.x, best.offset.y]);
                        out.history = Some(best.history);
                        out
                    })
                }
                (None, None) => unreachable!("starts exist whenever the camera is unknown"),
            };
            out.map_err(|e| if poses.len() > 1 { Error::Pipeline(format!("pose {i}: {e}")) } else { e })
        })
        .collect::<Result<_, Error>>()?;
    write_one_or_many(&a.out, outputs)?;
    run.finish(&[&a.out])
}

fn camera(run: &mut Run, a: crate::CameraArgs) -> Res<()> {
    run.config.validate()?;
    let xs = read_poses2d(run, &a.pose2d)?;
    let ys = read_poses3d(run, &a.pose3d)?;
    if xs.len() != ys.len() {
        return Err(Error::Data(format!("{} 2D poses but {} 3D poses", xs.len(), ys.len())).into());
    }
    let opts = run.config.camera;
    let estimates: Vec<CameraEstimate> = xs
        .par_iter()
        .zip(ys.par_iter())
        .map(|(x, y)| {
            let (xc, _) = center_columns2(&pose2d_matrix(x));
            let (yc, _) = center_columns3(&pose3d_matrix(y));
            estimate_camera(&xc, &yc, &opts)
        })
        .collect::<Result<_, Error>>()?;
    let rows: Vec<serde_json::Value> = estimates
        .iter()
        .map(|e| serde_json::json!({ "camera": e.camera, "diagnostics": e.diagnostics }))
        .collect();
    write_one_or_many(&a.out, rows)?;
    run.finish(&[&a.out])
}

fn summary_path(a: &EvalArgs) -> PathBuf {
    a.summary.clone().unwrap_or_else(|| {
        let stem = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        a.out.with_file_name(format!("{stem}.summary.csv"))
    })
}

fn eval(
    run: &mut Run,
    a: EvalArgs,
    experiment: impl FnOnce(&EvalContext, &[Instance], &[VariantConfig], u64) -> poselift::Result<Vec<EvalRecord>>,
) -> Res<()> {
    if let Some(t) = a.theta {
        run.config.theta = t;
    }
    run.config.validate()?;
    let basis = read_basis(run.input(&a.basis))?;
    let instances: Vec<Instance> = match &a.instances {
        Some(p) => read_json(run.input(p))?,
        None => Generator::new(corpus_spec(&run.config)?)?.instances(a.count, run.config.seed)?,
    };
    let inits = match a.camera_mode {
        CameraMode::Estimated => Some(starts(run, &a.start, &basis)?),
        CameraMode::Known => None,
    };
    let variants = if a.variants.is_empty() { VariantConfig::all().to_vec() } else { a.variants.clone() };
    let cfg = &run.config;
    let ctx = EvalContext {
        basis: &basis,
        limbs: cfg.proportion_table()?.limbs(),
        theta: cfg.theta,
        lift: cfg.lift,
        camera_mode: a.camera_mode,
        alternation: cfg.alternation,
        inits,
        select_by_truth: a.select_by_truth,
    };
    let records = experiment(&ctx, &instances, &variants, cfg.seed)?;

    let mut buf = Vec::new();
    write_records_csv(&records, &mut buf)?;
    let report = String::from_utf8(buf).expect("csv output is UTF-8");
    fs::write(&a.out, &report).map_err(Error::from)?;
    let summary = summary_path(&a);
    let mut buf = Vec::new();
    write_summary_csv(&summarize(&records), &mut buf)?;
    fs::write(&summary, buf).map_err(Error::from)?;
    let mut outputs: Vec<&Path> = vec![&a.out, &summary];
    if let Some(svg) = &a.plot {
        let title = run.command.trim_start_matches("eval-");
        fs::write(svg, plot_report(&report, PlotKind::ErrorVsCondition, title, "condition")?).map_err(Error::from)?;
        outputs.push(svg);
    }
    run.finish(&outputs)
}

fn write_poses(path: &Path, poses: &Poses, labels: Option<&[usize]>) -> Res<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => write_pose_csv(path, poses, labels)?,
        _ => write_pose_json(path, poses, labels)?,
    }
    Ok(())
}

fn gen_synthetic(run: &mut Run, a: crate::SynthArgs) -> Res<()> {
    run.config.validate()?;
    let instances = Generator::new(corpus_spec(&run.config)?)?.instances(a.count, run.config.seed)?;
    write_json(&a.out, &instances)?;
    let mut outputs: Vec<&Path> = vec![&a.out];
    let labels: Vec<usize> = instances.iter().map(|i| i.label).collect();
    if let Some(p) = &a.poses3d {
        write_poses(p, &Poses::Three(instances.iter().map(|i| i.pose3d.clone()).collect()), Some(&labels))?;
        outputs.push(p);
    }
    if let Some(p) = &a.poses2d {
        write_poses(p, &Poses::Two(instances.iter().map(|i| i.pose2d.clone()).collect()), Some(&labels))?;
        outputs.push(p);
    }
    run.finish(&outputs)
}

fn plot(run: &mut Run, a: crate::PlotArgs) -> Res<()> {
    let text = fs::read_to_string(run.input(&a.report)).map_err(Error::from)?;
    let svg = plot_report(&text, a.kind, &a.title, &a.x_label)?;
    fs::write(&a.out, svg).map_err(Error::from)?;
    run.finish(&[&a.out])
}
