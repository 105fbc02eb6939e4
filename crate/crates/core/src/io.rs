//! File formats: pose batches (JSON or CSV), dictionaries, cameras, lift
//! results, run configuration and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::basis::{Basis, BasisMethod, CodingOptions, DictionaryOptions};
use crate::camera::{Camera, CameraOptions};
use crate::error::{Error, Result};
use crate::eval::fmt_float;
use crate::lifter::{LiftOptions, LiftResult, VariantConfig, DEFAULT_THETA};
use crate::pipeline::AlternationOptions;
use crate::skeleton::{Joint, Limb, Pose2D, Pose3D, ProportionTable, NUM_JOINTS, POSE2D_LEN, POSE3D_LEN};

const AXES: [&str; 3] = ["x", "y", "z"];

#[derive(Clone, Debug, PartialEq)]
pub enum Poses {
    Two(Vec<Pose2D>),
    Three(Vec<Pose3D>),
}

impl Poses {
    pub fn len(&self) -> usize {
        match self {
            Poses::Two(p) => p.len(),
            Poses::Three(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Poses::Two(_) => 2,
            Poses::Three(_) => 3,
        }
    }
}

/// A parsed pose file: one or more poses in canonical joint order, with
/// optional integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseFile {
    pub poses: Poses,
    pub labels: Option<Vec<usize>>,
}

impl PoseFile {
    pub fn into_2d(self, context: &str) -> Result<Vec<Pose2D>> {
        match self.poses {
            Poses::Two(p) => Ok(p),
            Poses::Three(_) => Err(Error::parse(context, "expected 2D poses, found 3D")),
        }
    }

    pub fn into_3d(self, context: &str) -> Result<Vec<Pose3D>> {
        match self.poses {
            Poses::Three(p) => Ok(p),
            Poses::Two(_) => Err(Error::parse(context, "expected 3D poses, found 2D")),
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}

/// Reads a `.json` or `.csv` pose file.
pub fn parse_pose_file(path: &Path) -> Result<PoseFile> {
    let text = read_text(path)?;
    let ctx = path.display().to_string();
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("csv") => parse_pose_csv(&text, &ctx),
        Some("json") => parse_pose_json(&text, &ctx),
        _ => Err(Error::parse(ctx, "pose files must end in .json or .csv")),
    }
}

fn dim_of_len(len: usize, context: &str) -> Result<usize> {
    match len {
        POSE2D_LEN => Ok(2),
        POSE3D_LEN => Ok(3),
        n => Err(Error::parse(
            context,
            format!("expected {POSE2D_LEN} (2D) or {POSE3D_LEN} (3D) values, got {n}"),
        )),
    }
}

fn build_poses(rows: Vec<Vec<f64>>, dim: usize, context: &str) -> Result<Poses> {
    let wrap = |i: usize, e: Error| Error::parse(format!("{context}: pose {i}"), e.to_string());
    if dim == 2 {
        let poses = rows
            .iter()
            .enumerate()
            .map(|(i, r)| Pose2D::new(r).map_err(|e| wrap(i, e)))
            .collect::<Result<_>>()?;
        Ok(Poses::Two(poses))
    } else {
        let poses = rows
            .iter()
            .enumerate()
            .map(|(i, r)| Pose3D::new(r).map_err(|e| wrap(i, e)))
            .collect::<Result<_>>()?;
        Ok(Poses::Three(poses))
    }
}

fn json_numbers(v: &Value, context: &str) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::parse(context, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .ok_or_else(|| Error::parse(format!("{context}: value {i}"), format!("not a number: {x}")))
        })
        .collect()
}

/// Reorders rows laid out by `names` (each joint's `dim` coordinates in
/// turn) into canonical joint order.
fn reorder_by_joint_names(rows: Vec<Vec<f64>>, names: &[String], dim: usize, context: &str) -> Result<Vec<Vec<f64>>> {
    let mut target = Vec::with_capacity(names.len());
    let mut seen = [false; NUM_JOINTS];
    for name in names {
        let j = Joint::from_name(name).ok_or_else(|| Error::parse(context, format!("unknown joint name `{name}`")))?;
        if std::mem::replace(&mut seen[j.index()], true) {
            return Err(Error::parse(context, format!("joint `{name}` listed twice")));
        }
        target.push(j.index());
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::parse(context, format!("joint `{}` missing", Joint::ALL[missing].name())));
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != dim * NUM_JOINTS {
                return Err(Error::parse(
                    format!("{context}: pose {i}"),
                    format!("expected {} values, got {}", dim * NUM_JOINTS, row.len()),
                ));
            }
            let mut out = vec![0.0; row.len()];
            for (slot, &j) in target.iter().enumerate() {
                out[dim * j..dim * j + dim].copy_from_slice(&row[dim * slot..dim * slot + dim]);
            }
            Ok(out)
        })
        .collect()
}

/// Accepts a flat array (one pose), an array of arrays (a batch), or an
/// object `{"dim", "joints"?, "poses", "labels"?}` whose `joints` list may
/// be in any order.
pub fn parse_pose_json(text: &str, context: &str) -> Result<PoseFile> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::parse(context, e.to_string()))?;
    match &v {
        Value::Array(items) if items.iter().all(Value::is_number) => {
            let row = json_numbers(&v, context)?;
            let dim = dim_of_len(row.len(), context)?;
            Ok(PoseFile {
                poses: build_poses(vec![row], dim, context)?,
                labels: None,
            })
        }
        Value::Array(items) => {
            let rows = items
                .iter()
                .enumerate()
                .map(|(i, r)| json_numbers(r, &format!("{context}: pose {i}")))
                .collect::<Result<Vec<_>>>()?;
            let dim = dim_of_len(rows.first().map_or(0, Vec::len), &format!("{context}: pose 0"))?;
            Ok(PoseFile {
                poses: build_poses(rows, dim, context)?,
                labels: None,
            })
        }
        Value::Object(map) => {
            if let Some(k) = map.keys().find(|k| !["dim", "joints", "poses", "labels"].contains(&k.as_str())) {
                return Err(Error::parse(context, format!("unknown key `{k}`")));
            }
            let rows_v = map
                .get("poses")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::parse(context, "missing `poses` array"))?;
            let mut rows = rows_v
                .iter()
                .enumerate()
                .map(|(i, r)| json_numbers(r, &format!("{context}: pose {i}")))
                .collect::<Result<Vec<_>>>()?;
            let dim = match map.get("dim") {
                Some(d) => match d.as_u64() {
                    Some(2) => 2,
                    Some(3) => 3,
                    _ => return Err(Error::parse(context, format!("`dim` must be 2 or 3, got {d}"))),
                },
                None => dim_of_len(rows.first().map_or(0, Vec::len), &format!("{context}: pose 0"))?,
            };
            if let Some(names) = map.get("joints") {
                let names: Vec<String> = serde_json::from_value(names.clone())
                    .map_err(|e| Error::parse(format!("{context}: joints"), e.to_string()))?;
                rows = reorder_by_joint_names(rows, &names, dim, context)?;
            }
            let labels = match map.get("labels") {
                None => None,
                Some(l) => {
                    let l: Vec<usize> = serde_json::from_value(l.clone())
                        .map_err(|e| Error::parse(format!("{context}: labels"), e.to_string()))?;
                    if l.len() != rows.len() {
                        return Err(Error::parse(context, format!("{} labels for {} poses", l.len(), rows.len())));
                    }
                    Some(l)
                }
            };
            Ok(PoseFile {
                poses: build_poses(rows, dim, context)?,
                labels,
            })
        }
        _ => Err(Error::parse(context, "expected a JSON array or object")),
    }
}

/// CSV with a header of `<joint>_<axis>` columns (any order) and an
/// optional `label` column; one pose per row.
pub fn parse_pose_csv(text: &str, context: &str) -> Result<PoseFile> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::parse(format!("{context}: line 1"), e.to_string()))?
        .clone();
    let dim = if header.iter().any(|h| h.ends_with("_z")) { 3 } else { 2 };
    let mut slots: Vec<Option<usize>> = Vec::with_capacity(header.len());
    let mut label_col = None;
    let mut seen = vec![false; dim * NUM_JOINTS];
    for (c, name) in header.iter().enumerate() {
        if name == "label" {
            label_col = Some(c);
            slots.push(None);
            continue;
        }
        let (joint, axis) = name
            .rsplit_once('_')
            .ok_or_else(|| Error::parse(format!("{context}: line 1 field {}", c + 1), format!("bad column name `{name}`")))?;
        let j = Joint::from_name(joint)
            .ok_or_else(|| Error::parse(format!("{context}: line 1 field {}", c + 1), format!("unknown joint name `{joint}`")))?;
        let a = AXES[..dim]
            .iter()
            .position(|&x| x == axis)
            .ok_or_else(|| Error::parse(format!("{context}: line 1 field {}", c + 1), format!("bad axis in `{name}`")))?;
        let slot = dim * j.index() + a;
        if std::mem::replace(&mut seen[slot], true) {
            return Err(Error::parse(format!("{context}: line 1"), format!("column `{name}` repeated")));
        }
        slots.push(Some(slot));
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::parse(
            format!("{context}: line 1"),
            format!("column `{}_{}` missing", Joint::ALL[missing / dim].name(), AXES[missing % dim]),
        ));
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(format!("{context}: line {line}"), e.to_string()))?;
        if rec.len() != header.len() {
            return Err(Error::parse(
                format!("{context}: line {line}"),
                format!("expected {} fields, got {}", header.len(), rec.len()),
            ));
        }
        let mut row = vec![0.0; dim * NUM_JOINTS];
        for (c, field) in rec.iter().enumerate() {
            let where_ = || format!("{context}: line {line} field `{}`", &header[c]);
            match slots[c] {
                Some(slot) => {
                    let v: f64 = field.parse().map_err(|_| Error::parse(where_(), format!("invalid number `{field}`")))?;
                    if !v.is_finite() {
                        return Err(Error::parse(where_(), format!("non-finite value `{field}`")));
                    }
                    row[slot] = v;
                }
                None => labels.push(field.parse::<usize>().map_err(|_| Error::parse(where_(), format!("invalid label `{field}`")))?),
            }
        }
        rows.push(row);
    }
    Ok(PoseFile {
        poses: build_poses(rows, dim, context)?,
        labels: label_col.map(|_| labels),
    })
}

pub fn pose_csv_header(dim: usize, with_labels: bool) -> Vec<String> {
    let mut h: Vec<String> = Joint::ALL
        .iter()
        .flat_map(|j| AXES[..dim].iter().map(move |a| format!("{}_{a}", j.name())))
        .collect();
    if with_labels {
        h.push("label".into());
    }
    h
}

/// Canonical-order CSV with 17 significant digits per value.
pub fn pose_csv_string(poses: &Poses, labels: Option<&[usize]>) -> Result<String> {
    if let Some(l) = labels {
        if l.len() != poses.len() {
            return Err(Error::Data(format!("{} labels for {} poses", l.len(), poses.len())));
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Data(format!("csv: {e}"));
    w.write_record(pose_csv_header(poses.dim(), labels.is_some())).map_err(csv_err)?;
    let rows: Vec<&[f64]> = match poses {
        Poses::Two(p) => p.iter().map(Pose2D::as_slice).collect(),
        Poses::Three(p) => p.iter().map(Pose3D::as_slice).collect(),
    };
    for (i, row) in rows.iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|&v| fmt_float(v)).collect();
        if let Some(l) = labels {
            rec.push(l[i].to_string());
        }
        w.write_record(rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn write_pose_csv(path: &Path, poses: &Poses, labels: Option<&[usize]>) -> Result<()> {
    fs::write(path, pose_csv_string(poses, labels)?)?;
    Ok(())
}

pub fn write_pose_json(path: &Path, poses: &Poses, labels: Option<&[usize]>) -> Result<()> {
    let rows: Vec<&[f64]> = match poses {
        Poses::Two(p) => p.iter().map(Pose2D::as_slice).collect(),
        Poses::Three(p) => p.iter().map(Pose3D::as_slice).collect(),
    };
    let mut obj = serde_json::Map::new();
    obj.insert("dim".into(), poses.dim().into());
    obj.insert("poses".into(), serde_json::to_value(rows).expect("finite floats serialize"));
    if let Some(l) = labels {
        obj.insert("labels".into(), serde_json::to_value(l).expect("integers serialize"));
    }
    write_json(path, &Value::Object(obj))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(format!("json: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}

/// On-disk dictionary: `B` is stored row-major (36 rows of `k` values).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryFile {
    pub method: BasisMethod,
    pub k: usize,
    pub theta_learn: Option<f64>,
    pub mu: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    pub seed: Option<u64>,
}

impl From<&Basis> for DictionaryFile {
    fn from(basis: &Basis) -> Self {
        let k = basis.k();
        let mut b = Vec::with_capacity(POSE3D_LEN * k);
        for r in 0..POSE3D_LEN {
            b.extend(basis.matrix.row(r).iter());
        }
        Self {
            method: basis.method,
            k,
            theta_learn: basis.theta_learn,
            mu: basis.mean.as_slice().to_vec(),
            b,
            seed: basis.seed,
        }
    }
}

impl DictionaryFile {
    pub fn into_basis(self) -> Result<Basis> {
        if self.b.len() != POSE3D_LEN * self.k {
            return Err(Error::Schema(format!(
                "B has {} values, expected {POSE3D_LEN} × {} = {}",
                self.b.len(),
                self.k,
                POSE3D_LEN * self.k
            )));
        }
        let mean = Pose3D::new(&self.mu).map_err(|e| Error::Schema(format!("mu: {e}")))?;
        let matrix = DMatrix::from_row_slice(POSE3D_LEN, self.k, &self.b);
        let mut basis = Basis::new(self.method, matrix, mean)?;
        basis.theta_learn = self.theta_learn;
        basis.seed = self.seed;
        Ok(basis)
    }
}

pub fn write_basis(path: &Path, basis: &Basis) -> Result<()> {
    write_json(path, &DictionaryFile::from(basis))
}

pub fn read_basis(path: &Path) -> Result<Basis> {
    let file: DictionaryFile = read_json(path)?;
    file.into_basis().map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}

pub fn read_camera(path: &Path) -> Result<Camera> {
    let cam: Camera = read_json(path)?;
    if !cam.is_valid() {
        return Err(Error::parse(path.display().to_string(), "camera rows must be finite and nonzero"));
    }
    Ok(cam)
}

/// Serialized form of one lift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftOutput {
    pub variant: VariantConfig,
    pub theta: f64,
    pub alpha: Vec<f64>,
    pub pose3d: Pose3D,
    pub camera: Camera,
    /// 2D translation removed before solving, when the camera was estimated.
    pub offset: Option<[f64; 2]>,
    pub residual_l1: f64,
    pub residual_l2: f64,
    pub limb_violation: BTreeMap<Limb, f64>,
    pub active_count: usize,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
    pub degenerate_steps: usize,
    /// Per-iteration L1 residual of the camera/pose alternation.
    pub history: Option<Vec<f64>>,
}

impl LiftOutput {
    pub fn new(result: &LiftResult, variant: VariantConfig, theta: f64, camera: Camera, limbs: &[Limb]) -> Self {
        Self {
            variant,
            theta,
            alpha: result.coefficients.0.iter().copied().collect(),
            pose3d: result.pose.clone(),
            camera,
            offset: None,
            residual_l1: result.residual_l1,
            residual_l2: result.residual_l2,
            limb_violation: limbs.iter().copied().zip(result.limb_violation.iter().copied()).collect(),
            active_count: result.coefficients.active_count(),
            outer_iterations: result.outer_iterations,
            inner_iterations: result.inner_iterations,
            converged: result.converged,
            degenerate_steps: result.degenerate_steps,
            history: None,
        }
    }
}

/// Run configuration. Every field has a default; unknown keys are errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub theta: f64,
    pub seed: u64,
    pub lift: LiftOptions,
    pub camera: CameraOptions,
    pub alternation: AlternationOptions,
    pub coding: CodingOptions,
    pub dictionary: DictionaryOptions,
    /// JSON map from limb code to length ratio, overriding the defaults.
    pub proportions: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            seed: 0,
            lift: LiftOptions::default(),
            camera: CameraOptions::default(),
            alternation: AlternationOptions::default(),
            coding: CodingOptions::default(),
            dictionary: DictionaryOptions::default(),
            proportions: None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn growth(name: &str, v: f64) -> Result<()> {
    if v >= 1.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be at least 1, got {v}")))
    }
}

fn at_least_one(name: &str, v: usize) -> Result<()> {
    if v >= 1 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be at least 1")))
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::Config(format!("theta must be nonnegative, got {}", self.theta)));
        }
        let l = &self.lift;
        positive("lift.eta0", l.eta0)?;
        growth("lift.eta_growth", l.eta_growth)?;
        positive("lift.eta_max", l.eta_max)?;
        positive("lift.tol", l.tol)?;
        at_least_one("lift.max_iter", l.max_iter)?;
        positive("lift.sdp.delta0", l.sdp.delta0)?;
        growth("lift.sdp.delta_growth", l.sdp.delta_growth)?;
        positive("lift.sdp.delta_max", l.sdp.delta_max)?;
        positive("lift.sdp.tol", l.sdp.tol)?;
        at_least_one("lift.sdp.max_iter", l.sdp.max_iter)?;
        let c = &self.camera;
        positive("camera.tau0", c.tau0)?;
        growth("camera.tau_growth", c.tau_growth)?;
        positive("camera.tau_max", c.tau_max)?;
        positive("camera.tol", c.tol)?;
        at_least_one("camera.max_iter", c.max_iter)?;
        self.alternation.validate()?;
        positive("coding.tol", self.coding.tol)?;
        at_least_one("coding.max_iter", self.coding.max_iter)?;
        let d = &self.dictionary;
        at_least_one("dictionary.k", d.k)?;
        if !(d.theta >= 0.0 && d.theta.is_finite()) {
            return Err(Error::Config(format!("dictionary.theta must be nonnegative, got {}", d.theta)));
        }
        at_least_one("dictionary.epochs", d.epochs)?;
        at_least_one("dictionary.dictionary_passes", d.dictionary_passes)?;
        positive("dictionary.coding.tol", d.coding.tol)?;
        at_least_one("dictionary.coding.max_iter", d.coding.max_iter)?;
        Ok(())
    }

    /// Proportion table from the override file, or the defaults.
    pub fn proportion_table(&self) -> Result<ProportionTable> {
        match &self.proportions {
            None => Ok(ProportionTable::default()),
            Some(p) => read_json(p),
        }
    }
}

pub fn read_config(path: &Path) -> Result<Config> {
    let text = read_text(path)?;
    let cfg: Config = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }
}

/// Provenance record written next to every output as `<out>.manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: Config,
    /// SHA-256 of the config's canonical JSON.
    pub config_digest: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

pub fn config_digest(config: &Config) -> String {
    sha256_hex(serde_json::to_string(config).expect("config serializes").as_bytes())
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, config: &Config, inputs: &[&Path], outputs: &[&Path]) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            args,
            config: config.clone(),
            config_digest: config_digest(config),
            inputs: inputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_>>()?,
            outputs: outputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_>>()?,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        output.with_file_name(name)
    }

    pub fn write_next_to(&self, output: &Path) -> Result<PathBuf> {
        let path = Self::path_for(output);
        write_json(&path, self)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests;
