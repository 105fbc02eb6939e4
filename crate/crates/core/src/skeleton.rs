//! Canonical 12-joint skeleton, limb selectors and pose-frame geometry.
//!
//! A 3D pose stores joint `j` at slots `3j..3j+3`; a 2D pose stores it at
//! `2j..2j+2`. The joint order below is fixed for every file format.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_JOINTS: usize = 12;
pub const POSE3D_LEN: usize = 3 * NUM_JOINTS;
pub const POSE2D_LEN: usize = 2 * NUM_JOINTS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Joint {
    LeftShoulder,
    LeftElbow,
    LeftHand,
    RightShoulder,
    RightElbow,
    RightHand,
    LeftHip,
    LeftKnee,
    LeftFoot,
    RightHip,
    RightKnee,
    RightFoot,
}

impl Joint {
    pub const ALL: [Joint; NUM_JOINTS] = [
        Joint::LeftShoulder,
        Joint::LeftElbow,
        Joint::LeftHand,
        Joint::RightShoulder,
        Joint::RightElbow,
        Joint::RightHand,
        Joint::LeftHip,
        Joint::LeftKnee,
        Joint::LeftFoot,
        Joint::RightHip,
        Joint::RightKnee,
        Joint::RightFoot,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Joint::LeftShoulder => "left_shoulder",
            Joint::LeftElbow => "left_elbow",
            Joint::LeftHand => "left_hand",
            Joint::RightShoulder => "right_shoulder",
            Joint::RightElbow => "right_elbow",
            Joint::RightHand => "right_hand",
            Joint::LeftHip => "left_hip",
            Joint::LeftKnee => "left_knee",
            Joint::LeftFoot => "left_foot",
            Joint::RightHip => "right_hip",
            Joint::RightKnee => "right_knee",
            Joint::RightFoot => "right_foot",
        }
    }

    pub fn from_name(name: &str) -> Option<Joint> {
        Joint::ALL.iter().copied().find(|j| j.name() == name)
    }
}

/// The ordered joint list and its name → index map.
#[derive(Clone, Copy, Debug, Default)]
pub struct JointSchema;

impl JointSchema {
    pub fn joints(&self) -> &'static [Joint; NUM_JOINTS] {
        &Joint::ALL
    }

    pub fn names(&self) -> Vec<&'static str> {
        Joint::ALL.iter().map(|j| j.name()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        Joint::from_name(name)
            .map(Joint::index)
            .ok_or_else(|| Error::Schema(format!("unknown joint name `{name}`")))
    }

    /// Maps a (possibly permuted) list of joint names to canonical indices.
    /// Every canonical joint must appear exactly once.
    pub fn permutation(&self, names: &[impl AsRef<str>]) -> Result<Vec<usize>> {
        if names.len() != NUM_JOINTS {
            return Err(Error::Schema(format!(
                "expected {NUM_JOINTS} joints, got {}",
                names.len()
            )));
        }
        let mut seen = [false; NUM_JOINTS];
        let mut perm = Vec::with_capacity(NUM_JOINTS);
        for name in names {
            let idx = self.index_of(name.as_ref())?;
            if seen[idx] {
                return Err(Error::Schema(format!(
                    "joint `{}` listed twice",
                    name.as_ref()
                )));
            }
            seen[idx] = true;
            perm.push(idx);
        }
        Ok(perm)
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Data(format!("{what} has non-finite value at index {i}"))),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pose3D {
    coords: [f64; POSE3D_LEN],
}

impl Pose3D {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.len() != POSE3D_LEN {
            return Err(Error::Dimension(format!(
                "3D pose needs {POSE3D_LEN} values, got {}",
                coords.len()
            )));
        }
        check_finite(coords, "3D pose")?;
        let mut out = [0.0; POSE3D_LEN];
        out.copy_from_slice(coords);
        Ok(Self { coords: out })
    }

    pub fn zeros() -> Self {
        Self {
            coords: [0.0; POSE3D_LEN],
        }
    }

    pub fn from_joints(joints: &[Vector3<f64>; NUM_JOINTS]) -> Self {
        let mut coords = [0.0; POSE3D_LEN];
        for (j, p) in joints.iter().enumerate() {
            coords[3 * j..3 * j + 3].copy_from_slice(p.as_slice());
        }
        Self { coords }
    }

    pub fn from_dvector(v: &DVector<f64>) -> Result<Self> {
        Self::new(v.as_slice())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coords)
    }

    pub fn joint(&self, j: usize) -> Vector3<f64> {
        Vector3::new(self.coords[3 * j], self.coords[3 * j + 1], self.coords[3 * j + 2])
    }

    pub fn joints(&self) -> [Vector3<f64>; NUM_JOINTS] {
        std::array::from_fn(|j| self.joint(j))
    }

    pub fn centroid(&self) -> Vector3<f64> {
        self.joints().iter().sum::<Vector3<f64>>() / NUM_JOINTS as f64
    }

    /// Applies `f` to every joint position.
    pub fn map_joints(&self, f: impl Fn(Vector3<f64>) -> Vector3<f64>) -> Pose3D {
        let joints = self.joints().map(f);
        Pose3D::from_joints(&joints)
    }

    pub fn scaled(&self, s: f64) -> Pose3D {
        self.map_joints(|p| p * s)
    }
}

impl TryFrom<Vec<f64>> for Pose3D {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Pose3D::new(&v)
    }
}

impl From<Pose3D> for Vec<f64> {
    fn from(p: Pose3D) -> Self {
        p.coords.to_vec()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pose2D {
    coords: [f64; POSE2D_LEN],
}

impl Pose2D {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.len() != POSE2D_LEN {
            return Err(Error::Dimension(format!(
                "2D pose needs {POSE2D_LEN} values, got {}",
                coords.len()
            )));
        }
        check_finite(coords, "2D pose")?;
        let mut out = [0.0; POSE2D_LEN];
        out.copy_from_slice(coords);
        Ok(Self { coords: out })
    }

    pub fn zeros() -> Self {
        Self {
            coords: [0.0; POSE2D_LEN],
        }
    }

    pub fn from_joints(joints: &[Vector2<f64>; NUM_JOINTS]) -> Self {
        let mut coords = [0.0; POSE2D_LEN];
        for (j, p) in joints.iter().enumerate() {
            coords[2 * j..2 * j + 2].copy_from_slice(p.as_slice());
        }
        Self { coords }
    }

    pub fn from_dvector(v: &DVector<f64>) -> Result<Self> {
        Self::new(v.as_slice())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coords)
    }

    pub fn joint(&self, j: usize) -> Vector2<f64> {
        Vector2::new(self.coords[2 * j], self.coords[2 * j + 1])
    }

    pub fn joints(&self) -> [Vector2<f64>; NUM_JOINTS] {
        std::array::from_fn(|j| self.joint(j))
    }

    pub fn centroid(&self) -> Vector2<f64> {
        self.joints().iter().sum::<Vector2<f64>>() / NUM_JOINTS as f64
    }

    pub fn translated(&self, offset: Vector2<f64>) -> Pose2D {
        Pose2D::from_joints(&self.joints().map(|p| p + offset))
    }
}

impl TryFrom<Vec<f64>> for Pose2D {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Pose2D::new(&v)
    }
}

impl From<Pose2D> for Vec<f64> {
    fn from(p: Pose2D) -> Self {
        p.coords.to_vec()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Limb {
    #[serde(rename = "LUA")]
    LeftUpperArm,
    #[serde(rename = "LLA")]
    LeftLowerArm,
    #[serde(rename = "RUA")]
    RightUpperArm,
    #[serde(rename = "RLA")]
    RightLowerArm,
    #[serde(rename = "LUL")]
    LeftUpperLeg,
    #[serde(rename = "LLL")]
    LeftLowerLeg,
    #[serde(rename = "RUL")]
    RightUpperLeg,
    #[serde(rename = "RLL")]
    RightLowerLeg,
}

impl Limb {
    pub const ALL: [Limb; 8] = [
        Limb::LeftUpperArm,
        Limb::LeftLowerArm,
        Limb::RightUpperArm,
        Limb::RightLowerArm,
        Limb::LeftUpperLeg,
        Limb::LeftLowerLeg,
        Limb::RightUpperLeg,
        Limb::RightLowerLeg,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Limb::LeftUpperArm => "LUA",
            Limb::LeftLowerArm => "LLA",
            Limb::RightUpperArm => "RUA",
            Limb::RightLowerArm => "RLA",
            Limb::LeftUpperLeg => "LUL",
            Limb::LeftLowerLeg => "LLL",
            Limb::RightUpperLeg => "RUL",
            Limb::RightLowerLeg => "RLL",
        }
    }

    /// (proximal, distal) joints.
    pub fn endpoints(self) -> (Joint, Joint) {
        use Joint::*;
        match self {
            Limb::LeftUpperArm => (LeftShoulder, LeftElbow),
            Limb::LeftLowerArm => (LeftElbow, LeftHand),
            Limb::RightUpperArm => (RightShoulder, RightElbow),
            Limb::RightLowerArm => (RightElbow, RightHand),
            Limb::LeftUpperLeg => (LeftHip, LeftKnee),
            Limb::LeftLowerLeg => (LeftKnee, LeftFoot),
            Limb::RightUpperLeg => (RightHip, RightKnee),
            Limb::RightLowerLeg => (RightKnee, RightFoot),
        }
    }
}

impl fmt::Display for Limb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Limb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Limb::ALL
            .iter()
            .copied()
            .find(|l| l.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Schema(format!("unknown limb `{s}`")))
    }
}

/// One limb-length constraint: `|joint(first) - joint(second)|^2 = squared_length`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimbSpec {
    pub limb: Limb,
    pub first: usize,
    pub second: usize,
    pub squared_length: f64,
}

impl LimbSpec {
    pub fn new(limb: Limb, first: usize, second: usize, squared_length: f64) -> Result<Self> {
        if first >= NUM_JOINTS || second >= NUM_JOINTS {
            return Err(Error::Schema(format!(
                "limb {limb} endpoint out of range ({first}, {second})"
            )));
        }
        if first == second {
            return Err(Error::Schema(format!("limb {limb} endpoints coincide")));
        }
        if !(squared_length > 0.0 && squared_length.is_finite()) {
            return Err(Error::Schema(format!(
                "limb {limb} squared length must be positive, got {squared_length}"
            )));
        }
        Ok(Self {
            limb,
            first,
            second,
            squared_length,
        })
    }

    pub fn vector(&self, pose: &Pose3D) -> Vector3<f64> {
        pose.joint(self.first) - pose.joint(self.second)
    }
}

/// Limb length ratios relative to the right lower leg.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<Limb, f64>", into = "BTreeMap<Limb, f64>")]
pub struct ProportionTable {
    ratios: BTreeMap<Limb, f64>,
}

impl Default for ProportionTable {
    fn default() -> Self {
        let mut ratios = BTreeMap::new();
        for limb in Limb::ALL {
            let r = match limb {
                Limb::LeftUpperArm | Limb::RightUpperArm => 0.80,
                Limb::LeftLowerArm | Limb::RightLowerArm => 0.75,
                Limb::LeftUpperLeg | Limb::RightUpperLeg => 1.15,
                Limb::LeftLowerLeg | Limb::RightLowerLeg => 1.00,
            };
            ratios.insert(limb, r);
        }
        Self { ratios }
    }
}

impl ProportionTable {
    pub fn new(ratios: BTreeMap<Limb, f64>) -> Result<Self> {
        for limb in Limb::ALL {
            let r = *ratios
                .get(&limb)
                .ok_or_else(|| Error::Schema(format!("proportion table is missing {limb}")))?;
            if !(r > 0.0 && r < 3.0) {
                return Err(Error::Schema(format!(
                    "ratio for {limb} must lie in (0, 3), got {r}"
                )));
            }
        }
        let rll = ratios[&Limb::RightLowerLeg];
        if (rll - 1.0).abs() > 1e-12 {
            return Err(Error::Schema(format!("RLL ratio must be 1, got {rll}")));
        }
        Ok(Self { ratios })
    }

    pub fn ratio(&self, limb: Limb) -> f64 {
        self.ratios[&limb]
    }

    /// The eight limb constraints, squared target lengths included.
    pub fn limbs(&self) -> Vec<LimbSpec> {
        Limb::ALL
            .iter()
            .map(|&limb| {
                let (a, b) = limb.endpoints();
                let r = self.ratio(limb);
                LimbSpec {
                    limb,
                    first: a.index(),
                    second: b.index(),
                    squared_length: r * r,
                }
            })
            .collect()
    }
}

impl TryFrom<BTreeMap<Limb, f64>> for ProportionTable {
    type Error = Error;

    fn try_from(m: BTreeMap<Limb, f64>) -> Result<Self> {
        ProportionTable::new(m)
    }
}

impl From<ProportionTable> for BTreeMap<Limb, f64> {
    fn from(t: ProportionTable) -> Self {
        t.ratios
    }
}

pub fn default_limbs() -> Vec<LimbSpec> {
    ProportionTable::default().limbs()
}

/// `E_first - E_second` as a dense 3 × 3n matrix.
pub fn limb_selector(limb: &LimbSpec, n: usize) -> Result<DMatrix<f64>> {
    if limb.first >= n || limb.second >= n || limb.first == limb.second {
        return Err(Error::Schema(format!(
            "limb {} endpoints ({}, {}) invalid for {n} joints",
            limb.limb, limb.first, limb.second
        )));
    }
    let mut c = DMatrix::zeros(3, 3 * n);
    for r in 0..3 {
        c[(r, 3 * limb.first + r)] = 1.0;
        c[(r, 3 * limb.second + r)] = -1.0;
    }
    Ok(c)
}

pub fn limb_lengths(pose: &Pose3D, limbs: &[LimbSpec]) -> Vec<f64> {
    limbs.iter().map(|l| l.vector(pose).norm()).collect()
}

fn right_lower_leg_length(pose: &Pose3D) -> f64 {
    (pose.joint(Joint::RightKnee.index()) - pose.joint(Joint::RightFoot.index())).norm()
}

/// Centers the pose on its joint centroid and scales it so the right lower
/// leg has unit length.
pub fn normalize_skeleton(pose: &Pose3D) -> Result<Pose3D> {
    let len = right_lower_leg_length(pose);
    if !(len > 1e-12) {
        return Err(Error::DegeneratePose(format!(
            "right lower leg has length {len}"
        )));
    }
    let c = pose.centroid();
    Ok(pose.map_joints(|p| (p - c) / len))
}

/// Body-aligned frame: x along the hips (left to right), y along the spine
/// (hip midpoint to shoulder midpoint, made orthogonal to x), z = x × y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFrame {
    pub origin: Vector3<f64>,
    /// Rows are the frame axes in world coordinates.
    pub rotation: Matrix3<f64>,
}

impl LocalFrame {
    pub fn of(pose: &Pose3D) -> Result<Self> {
        let lhip = pose.joint(Joint::LeftHip.index());
        let rhip = pose.joint(Joint::RightHip.index());
        let lsh = pose.joint(Joint::LeftShoulder.index());
        let rsh = pose.joint(Joint::RightShoulder.index());
        let origin = (lhip + rhip) / 2.0;
        let hip_line = rhip - lhip;
        let hip_len = hip_line.norm();
        if hip_len < 1e-9 {
            return Err(Error::Frame("hips coincide".into()));
        }
        let x = hip_line / hip_len;
        let spine = (lsh + rsh) / 2.0 - origin;
        let y_raw = spine - x * x.dot(&spine);
        let y_len = y_raw.norm();
        if y_len < 1e-9 * spine.norm().max(1.0) {
            return Err(Error::Frame("spine is parallel to the hip line".into()));
        }
        let y = y_raw / y_len;
        let z = x.cross(&y);
        let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        Ok(Self { origin, rotation })
    }

    pub fn apply(&self, pose: &Pose3D) -> Pose3D {
        pose.map_joints(|p| self.rotation * (p - self.origin))
    }
}

pub fn to_local_frame(pose: &Pose3D) -> Result<Pose3D> {
    Ok(LocalFrame::of(pose)?.apply(pose))
}

pub fn rotation_about_y(degrees: f64) -> Matrix3<f64> {
    let (s, c) = degrees.to_radians().sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rotate_about_y(pose: &Pose3D, degrees: f64) -> Pose3D {
    let r = rotation_about_y(degrees);
    pose.map_joints(|p| r * p)
}
