use poselift::camera::{center_columns2, center_columns3, pose2d_matrix, pose3d_matrix, CameraOptions};
use poselift::eval::{run_variant_grid, write_records_csv, EvalContext, Perturbation, NoiseSpec};
use poselift::io::{read_basis, write_basis};
use poselift::pipeline::Selection;
use poselift::synthetic::{Generator, Instance};
use poselift::{
    basis::learn_pca, default_limbs, estimate_camera, multi_start, Basis, InitializationSet, LiftSetup, VariantConfig,
};

fn fixture() -> (Basis, Vec<Instance>) {
    let gen = Generator::new(Default::default()).unwrap();
    let train = gen.sample(300, 10).unwrap();
    let basis = learn_pca(&train.poses, 12).unwrap();
    (basis, gen.instances(6, 11).unwrap())
}

fn error(a: &poselift::Pose3D, b: &poselift::Pose3D) -> f64 {
    (a.to_dvector() - b.to_dvector()).norm()
}

#[test]
fn known_camera_lift_meets_limbs_and_beats_mean_pose() {
    let (basis, instances) = fixture();
    let setup = LiftSetup::new(&basis).with_variant(VariantConfig::FULL);
    let (mut lifted, mut baseline) = (0.0, 0.0);
    for inst in &instances {
        let r = setup.lift(&inst.pose2d, inst.camera, None).unwrap();
        assert!(r.limb_violation.iter().all(|v| *v < 1e-3), "{:?}", r.limb_violation);
        lifted += error(&r.pose, &inst.pose3d);
        baseline += error(&basis.mean, &inst.pose3d);
    }
    assert!(lifted < 0.5 * baseline, "lifted {lifted} vs mean pose {baseline}");
}

#[test]
fn camera_is_recovered_from_the_true_pose() {
    let (_, instances) = fixture();
    for inst in &instances {
        let (x, _) = center_columns2(&pose2d_matrix(&inst.pose2d));
        let (y, _) = center_columns3(&pose3d_matrix(&inst.pose3d));
        let est = estimate_camera(&x, &y, &CameraOptions::default()).unwrap();
        let diff = (est.camera.m1 - inst.camera.m1).norm() + (est.camera.m2 - inst.camera.m2).norm();
        assert!(diff < 1e-5, "instance {}: {diff}", inst.id);
    }
}

#[test]
fn estimated_camera_alternation_fits_the_image() {
    let (basis, instances) = fixture();
    let setup = LiftSetup::new(&basis);
    let inst = &instances[0];
    let ms = multi_start(
        &inst.pose2d,
        &setup,
        &InitializationSet::mean(&basis),
        &Default::default(),
        Selection::Reprojection,
    )
    .unwrap();
    let best = &ms.best;
    assert!(best.history.iter().all(|r| *r >= best.result.residual_l1 - 1e-12));
    let (limbs, pose) = (default_limbs(), &best.result.pose);
    assert_eq!(best.result.limb_violation.len(), limbs.len());
    assert!(pose.as_slice().iter().all(|v| v.is_finite()));
    let reprojection: f64 = (best.projected().to_dvector() - inst.pose2d.to_dvector()).abs().sum();
    assert!((reprojection - best.result.residual_l1).abs() < 1e-6 * (1.0 + reprojection));
}

#[test]
fn basis_round_trips_and_grid_is_reproducible() {
    let (basis, instances) = fixture();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    write_basis(&path, &basis).unwrap();
    let back = read_basis(&path).unwrap();
    assert_eq!(back.matrix, basis.matrix);
    assert_eq!(back.mean, basis.mean);

    let noise = Perturbation::Gaussian(NoiseSpec::new(3, 9).unwrap());
    let variants = [VariantConfig::FULL, VariantConfig::all()[1]];
    let report = |b: &Basis| {
        let records = run_variant_grid(&EvalContext::new(b), &instances[..3], &variants, &noise).unwrap();
        assert_eq!(records.len(), 6);
        let mut out = Vec::new();
        write_records_csv(&records, &mut out).unwrap();
        out
    };
    assert_eq!(report(&basis), report(&back));
}
