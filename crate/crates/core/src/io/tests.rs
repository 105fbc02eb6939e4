use super::*;
use crate::basis::learn_pca;
use crate::synthetic::{CorpusSpec, Generator};
use proptest::prelude::*;

fn sample3d(n: usize) -> Vec<Pose3D> {
    Generator::new(CorpusSpec::default()).unwrap().sample(n, 3).unwrap().poses
}

fn sample2d(n: usize) -> Vec<Pose2D> {
    Generator::new(CorpusSpec::default())
        .unwrap()
        .instances(n, 4)
        .unwrap()
        .into_iter()
        .map(|i| i.pose2d)
        .collect()
}

#[test]
fn flat_json_array_is_one_pose() {
    let pose = &sample3d(1)[0];
    let text = serde_json::to_string(pose.as_slice()).unwrap();
    let file = parse_pose_json(&text, "p.json").unwrap();
    assert_eq!(file.poses, Poses::Three(vec![pose.clone()]));
    assert!(file.labels.is_none());
}

#[test]
fn wrong_length_names_expected_counts() {
    let text = serde_json::to_string(&vec![0.5; 35]).unwrap();
    let err = parse_pose_json(&text, "p.json").unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::Parse { .. }));
    assert!(msg.contains("36") && msg.contains("35"), "{msg}");
}

#[test]
fn json_batch_with_permuted_joint_names() {
    let poses = sample3d(3);
    let mut names: Vec<String> = Joint::ALL.iter().map(|j| j.name().to_string()).collect();
    names.reverse();
    let rows: Vec<Vec<f64>> = poses
        .iter()
        .map(|p| Joint::ALL.iter().rev().flat_map(|j| p.joint(j.index()).iter().copied().collect::<Vec<_>>()).collect())
        .collect();
    let text = serde_json::json!({"dim": 3, "joints": names, "poses": rows, "labels": [0, 1, 2]}).to_string();
    let file = parse_pose_json(&text, "p.json").unwrap();
    assert_eq!(file.poses, Poses::Three(poses));
    assert_eq!(file.labels, Some(vec![0, 1, 2]));

    let bad = serde_json::json!({"poses": [vec![0.0; 24]], "extra": 1}).to_string();
    assert!(parse_pose_json(&bad, "p.json").unwrap_err().to_string().contains("extra"));
}

#[test]
fn csv_round_trip_and_permuted_columns() {
    let poses = Poses::Three(sample3d(4));
    let labels = [3usize, 1, 4, 1];
    let text = pose_csv_string(&poses, Some(&labels)).unwrap();
    let back = parse_pose_csv(&text, "p.csv").unwrap();
    assert_eq!(back.poses, poses);
    assert_eq!(back.labels.as_deref(), Some(&labels[..]));

    // Same data with columns in reverse order.
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    let mut permuted = header.iter().rev().cloned().collect::<Vec<_>>().join(",");
    permuted.push('\n');
    for rec in reader.records() {
        let rec = rec.unwrap();
        permuted.push_str(&rec.iter().rev().collect::<Vec<_>>().join(","));
        permuted.push('\n');
    }
    assert_eq!(parse_pose_csv(&permuted, "q.csv").unwrap(), back);

    let flat = Poses::Two(sample2d(2));
    assert_eq!(parse_pose_csv(&pose_csv_string(&flat, None).unwrap(), "r.csv").unwrap().poses, flat);
}

#[test]
fn csv_errors_carry_line_and_field() {
    let good = pose_csv_string(&Poses::Two(sample2d(2)), None).unwrap();
    let mut lines: Vec<String> = good.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[2].split(',').map(String::from).collect();
    fields[3] = "abc".into();
    lines[2] = fields.join(",");
    let err = parse_pose_csv(&lines.join("\n"), "p.csv").unwrap_err().to_string();
    assert!(err.contains("line 3") && err.contains("left_elbow_y") && err.contains("abc"), "{err}");

    fields[3] = "NaN".into();
    lines[2] = fields.join(",");
    let err = parse_pose_csv(&lines.join("\n"), "p.csv").unwrap_err().to_string();
    assert!(err.contains("non-finite"), "{err}");

    let renamed = good.replacen("left_hand_x", "left_paw_x", 1);
    let err = parse_pose_csv(&renamed, "p.csv").unwrap_err().to_string();
    assert!(err.contains("left_paw"), "{err}");

    let dropped: String = good
        .lines()
        .map(|l| l.split(',').skip(1).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n");
    let err = parse_pose_csv(&dropped, "p.csv").unwrap_err().to_string();
    assert!(err.contains("left_shoulder_x") && err.contains("missing"), "{err}");
}

#[test]
fn pose_files_dispatch_on_extension() {
    let dir = tempfile::tempdir().unwrap();
    let poses = Poses::Three(sample3d(2));
    let csv_path = dir.path().join("a.csv");
    let json_path = dir.path().join("a.json");
    write_pose_csv(&csv_path, &poses, None).unwrap();
    write_pose_json(&json_path, &poses, Some(&[0, 1])).unwrap();
    assert_eq!(parse_pose_file(&csv_path).unwrap().poses, poses);
    let j = parse_pose_file(&json_path).unwrap();
    assert_eq!(j.poses, poses);
    assert_eq!(j.labels, Some(vec![0, 1]));
    assert!(parse_pose_file(&dir.path().join("a.txt")).is_err());
    assert!(matches!(parse_pose_file(&dir.path().join("missing.json")), Err(Error::Parse { .. })));
    assert!(parse_pose_file(&csv_path).unwrap().into_2d("a.csv").is_err());
}

#[test]
fn dictionary_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut basis = learn_pca(&sample3d(60), 7).unwrap();
    basis.theta_learn = Some(0.1);
    basis.seed = Some(9);
    let path = dir.path().join("d.json");
    write_basis(&path, &basis).unwrap();
    assert_eq!(read_basis(&path).unwrap(), basis);

    let file = DictionaryFile::from(&basis);
    assert_eq!(file.b[1], basis.matrix[(0, 1)]);
    let mut short = file.clone();
    short.b.pop();
    assert!(matches!(short.into_basis(), Err(Error::Schema(_))));
}

#[test]
fn camera_and_config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cam = Camera::new(nalgebra::Vector3::new(0.1, 0.2, 0.3), nalgebra::Vector3::new(-0.3, 0.0, 0.1));
    let path = dir.path().join("c.json");
    write_json(&path, &cam).unwrap();
    assert_eq!(read_camera(&path).unwrap(), cam);

    let mut cfg = Config::default();
    cfg.theta = 0.25;
    cfg.lift.sdp.max_iter = 7;
    let cpath = dir.path().join("cfg.json");
    write_json(&cpath, &cfg).unwrap();
    assert_eq!(read_config(&cpath).unwrap(), cfg);
}

#[test]
fn config_defaults_and_rejections() {
    let partial: Config = serde_json::from_str(r#"{"theta": 0.2, "lift": {"tol": 1e-5}}"#).unwrap();
    assert_eq!(partial.theta, 0.2);
    assert_eq!(partial.lift.tol, 1e-5);
    assert_eq!(partial.lift.max_iter, LiftOptions::default().max_iter);
    assert!(serde_json::from_str::<Config>(r#"{"thetta": 0.2}"#).is_err());
    assert!(serde_json::from_str::<Config>(r#"{"lift": {"eta": 1}}"#).is_err());
    let mut bad = Config::default();
    bad.lift.eta0 = 0.0;
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
    let mut bad = Config::default();
    bad.theta = -1.0;
    assert!(bad.validate().is_err());
    let mut bad = Config::default();
    bad.camera.tau_growth = 0.9;
    assert!(bad.validate().is_err());
}

#[test]
fn proportion_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("prop.json");
    let mut map: BTreeMap<Limb, f64> = ProportionTable::default().into();
    map.insert(Limb::LeftUpperArm, 0.9);
    write_json(&path, &map).unwrap();
    let cfg = Config {
        proportions: Some(path),
        ..Default::default()
    };
    assert_eq!(cfg.proportion_table().unwrap().ratio(Limb::LeftUpperArm), 0.9);
}

#[test]
fn manifest_digests_and_location() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.json");
    let output = dir.path().join("out.csv");
    fs::write(&input, b"abc").unwrap();
    fs::write(&output, b"x").unwrap();
    let cfg = Config::default();
    let m = RunManifest::new("lift", vec!["--seed".into(), "1".into()], &cfg, &[&input], &[&output]).unwrap();
    assert_eq!(m.inputs[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    assert_eq!(m.config_digest, config_digest(&cfg));
    let path = m.write_next_to(&output).unwrap();
    assert_eq!(path, dir.path().join("out.csv.manifest.json"));
    let back: RunManifest = read_json(&path).unwrap();
    assert_eq!(back, m);
}

proptest! {
    #[test]
    fn pose_csv_round_trips_bitwise(values in proptest::collection::vec(-1e6f64..1e6, 24 * 3)) {
        let poses: Vec<Pose2D> = values.chunks(24).map(|c| Pose2D::new(c).unwrap()).collect();
        let text = pose_csv_string(&Poses::Two(poses.clone()), None).unwrap();
        prop_assert_eq!(parse_pose_csv(&text, "p.csv").unwrap().poses, Poses::Two(poses));
    }
}
