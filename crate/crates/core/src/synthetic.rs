//! Seeded synthetic pose corpus.
//!
//! A small set of prototype poses is built from joint angles for a handful of
//! motion classes. Corpus poses are sparse convex combinations of prototypes
//! from one class plus Gaussian jitter, with limb lengths then reset to the
//! proportion table and the result normalized.

use nalgebra::Vector3;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::camera::{project, Camera};
use crate::error::{Error, Result};
use crate::skeleton::{normalize_skeleton, Joint, Limb, Pose2D, Pose3D, ProportionTable, NUM_JOINTS};

pub const CLASS_NAMES: [&str; 5] = ["walk", "reach", "squat", "kick", "wave"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub prototypes_per_class: usize,
    pub min_active: usize,
    pub max_active: usize,
    /// Per-coordinate jitter std before limb renormalization.
    pub jitter: f64,
    /// Seed of the prototype set; corpora drawn with different sample seeds
    /// from the same prototype seed share a distribution.
    pub prototype_seed: u64,
    pub proportions: ProportionTable,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            prototypes_per_class: 8,
            min_active: 2,
            max_active: 4,
            jitter: 0.02,
            prototype_seed: 1,
            proportions: ProportionTable::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub poses: Vec<Pose3D>,
    pub labels: Vec<usize>,
}

/// A 3D pose with a camera and its exact projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: usize,
    pub label: usize,
    pub pose3d: Pose3D,
    pub camera: Camera,
    pub pose2d: Pose2D,
}

/// Unit direction `elev` degrees away from straight down, swung towards
/// `azim` (0 = front, 90 = the body's right).
fn direction(elev: f64, azim: f64) -> Vector3<f64> {
    let (se, ce) = elev.to_radians().sin_cos();
    let (sa, ca) = azim.to_radians().sin_cos();
    Vector3::new(se * sa, -ce, -se * ca)
}

#[derive(Clone, Copy, Debug)]
struct LimbAngles {
    upper: (f64, f64),
    lower: (f64, f64),
}

#[derive(Clone, Copy, Debug)]
struct BodyAngles {
    left_arm: LimbAngles,
    right_arm: LimbAngles,
    left_leg: LimbAngles,
    right_leg: LimbAngles,
    /// Forward lean of the upper body, degrees.
    lean: f64,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..=hi)
}

fn class_angles(class: usize, rng: &mut ChaCha8Rng) -> BodyAngles {
    let relaxed_arm = |rng: &mut ChaCha8Rng| {
        let e = uniform(rng, 5.0, 25.0);
        LimbAngles {
            upper: (e, uniform(rng, 60.0, 110.0)),
            lower: (e + uniform(rng, 5.0, 30.0), uniform(rng, 0.0, 60.0)),
        }
    };
    let straight_leg = |rng: &mut ChaCha8Rng| {
        let e = uniform(rng, 0.0, 10.0);
        LimbAngles {
            upper: (e, uniform(rng, 60.0, 120.0)),
            lower: (uniform(rng, 0.0, 8.0), uniform(rng, 0.0, 180.0)),
        }
    };
    match class {
        // walk: arms and legs swing in opposite phase
        0 => {
            let phase = uniform(rng, -1.0, 1.0);
            let arm = |s: f64, rng: &mut ChaCha8Rng| {
                let e = 30.0 * s * phase;
                LimbAngles {
                    upper: (e.abs(), if e >= 0.0 { 0.0 } else { 180.0 }),
                    lower: (e.abs() * 0.5 + uniform(rng, 20.0, 45.0), 0.0),
                }
            };
            let leg = |s: f64, rng: &mut ChaCha8Rng| {
                let e = 28.0 * s * phase;
                LimbAngles {
                    upper: (e.abs(), if e >= 0.0 { 0.0 } else { 180.0 }),
                    lower: (uniform(rng, 5.0, 40.0), 180.0),
                }
            };
            BodyAngles {
                left_arm: arm(1.0, rng),
                right_arm: arm(-1.0, rng),
                left_leg: leg(-1.0, rng),
                right_leg: leg(1.0, rng),
                lean: uniform(rng, 0.0, 10.0),
            }
        }
        // reach: one arm raised forward or overhead
        1 => {
            let raised = LimbAngles {
                upper: (uniform(rng, 80.0, 165.0), uniform(rng, -20.0, 60.0)),
                lower: (uniform(rng, 90.0, 175.0), uniform(rng, -20.0, 60.0)),
            };
            let (left_arm, right_arm) = if rng.random_bool(0.5) {
                (relaxed_arm(rng), raised)
            } else {
                (raised, relaxed_arm(rng))
            };
            BodyAngles {
                left_arm,
                right_arm,
                left_leg: straight_leg(rng),
                right_leg: straight_leg(rng),
                lean: uniform(rng, -5.0, 15.0),
            }
        }
        // squat: thighs forward, shins near vertical, arms out in front
        2 => {
            let depth = uniform(rng, 40.0, 100.0);
            let leg = |rng: &mut ChaCha8Rng| LimbAngles {
                upper: (depth + uniform(rng, -8.0, 8.0), uniform(rng, -25.0, 25.0)),
                lower: (uniform(rng, 0.0, 25.0), uniform(rng, -30.0, 30.0)),
            };
            let arm = |rng: &mut ChaCha8Rng| LimbAngles {
                upper: (uniform(rng, 60.0, 100.0), uniform(rng, -15.0, 15.0)),
                lower: (uniform(rng, 70.0, 110.0), uniform(rng, -15.0, 15.0)),
            };
            BodyAngles {
                left_arm: arm(rng),
                right_arm: arm(rng),
                left_leg: leg(rng),
                right_leg: leg(rng),
                lean: depth * uniform(rng, 0.2, 0.45),
            }
        }
        // kick: one leg raised forward, arms out for balance
        3 => {
            let kick = LimbAngles {
                upper: (uniform(rng, 40.0, 95.0), uniform(rng, -15.0, 25.0)),
                lower: (uniform(rng, 10.0, 85.0), uniform(rng, -15.0, 25.0)),
            };
            let arm = |rng: &mut ChaCha8Rng| {
                let e = uniform(rng, 25.0, 70.0);
                LimbAngles {
                    upper: (e, uniform(rng, 70.0, 110.0)),
                    lower: (e + uniform(rng, 0.0, 30.0), uniform(rng, 40.0, 110.0)),
                }
            };
            let (left_leg, right_leg) = if rng.random_bool(0.5) {
                (straight_leg(rng), kick)
            } else {
                (kick, straight_leg(rng))
            };
            BodyAngles {
                left_arm: arm(rng),
                right_arm: arm(rng),
                left_leg,
                right_leg,
                lean: uniform(rng, -15.0, 5.0),
            }
        }
        // wave: upper arms to the side, forearms up
        _ => {
            let arm = |rng: &mut ChaCha8Rng, up: bool| {
                if up {
                    LimbAngles {
                        upper: (uniform(rng, 65.0, 100.0), uniform(rng, 70.0, 110.0)),
                        lower: (uniform(rng, 130.0, 178.0), uniform(rng, 40.0, 120.0)),
                    }
                } else {
                    relaxed_arm(rng)
                }
            };
            let both = rng.random_bool(0.5);
            let left_up = both || rng.random_bool(0.5);
            let right_up = both || !left_up;
            BodyAngles {
                left_arm: arm(rng, left_up),
                right_arm: arm(rng, right_up),
                left_leg: straight_leg(rng),
                right_leg: straight_leg(rng),
                lean: uniform(rng, -5.0, 5.0),
            }
        }
    }
}

fn build_pose(angles: &BodyAngles, table: &ProportionTable) -> Pose3D {
    let lean = angles.lean.to_radians();
    // Upper body tilts forward (towards -z) about the hip line.
    let tilt = |v: Vector3<f64>| Vector3::new(v.x, v.y * lean.cos(), v.z * lean.cos() - v.y * lean.sin());
    let mut j = [Vector3::zeros(); NUM_JOINTS];
    j[Joint::LeftHip.index()] = Vector3::new(-0.45, 0.0, 0.0);
    j[Joint::RightHip.index()] = Vector3::new(0.45, 0.0, 0.0);
    j[Joint::LeftShoulder.index()] = tilt(Vector3::new(-0.75, 1.75, 0.0));
    j[Joint::RightShoulder.index()] = tilt(Vector3::new(0.75, 1.75, 0.0));

    // Left limbs mirror the azimuth so that 90 always points outwards.
    let chain = |root: Joint, mid: Joint, end: Joint, a: &LimbAngles, u: Limb, l: Limb, mirror: f64, j: &mut [Vector3<f64>; NUM_JOINTS]| {
        let mut d1 = direction(a.upper.0, a.upper.1);
        let mut d2 = direction(a.lower.0, a.lower.1);
        d1.x *= mirror;
        d2.x *= mirror;
        j[mid.index()] = j[root.index()] + d1 * table.ratio(u);
        j[end.index()] = j[mid.index()] + d2 * table.ratio(l);
    };
    chain(Joint::LeftShoulder, Joint::LeftElbow, Joint::LeftHand, &angles.left_arm, Limb::LeftUpperArm, Limb::LeftLowerArm, -1.0, &mut j);
    chain(Joint::RightShoulder, Joint::RightElbow, Joint::RightHand, &angles.right_arm, Limb::RightUpperArm, Limb::RightLowerArm, 1.0, &mut j);
    chain(Joint::LeftHip, Joint::LeftKnee, Joint::LeftFoot, &angles.left_leg, Limb::LeftUpperLeg, Limb::LeftLowerLeg, -1.0, &mut j);
    chain(Joint::RightHip, Joint::RightKnee, Joint::RightFoot, &angles.right_leg, Limb::RightUpperLeg, Limb::RightLowerLeg, 1.0, &mut j);
    Pose3D::from_joints(&j)
}

/// Resets every limb to its table length, keeping directions and carrying
/// the hand/foot along when the elbow/knee moves.
pub fn renormalize_limbs(pose: &Pose3D, table: &ProportionTable) -> Result<Pose3D> {
    let mut j = pose.joints();
    for (root, mid, end, u, l) in [
        (Joint::LeftShoulder, Joint::LeftElbow, Joint::LeftHand, Limb::LeftUpperArm, Limb::LeftLowerArm),
        (Joint::RightShoulder, Joint::RightElbow, Joint::RightHand, Limb::RightUpperArm, Limb::RightLowerArm),
        (Joint::LeftHip, Joint::LeftKnee, Joint::LeftFoot, Limb::LeftUpperLeg, Limb::LeftLowerLeg),
        (Joint::RightHip, Joint::RightKnee, Joint::RightFoot, Limb::RightUpperLeg, Limb::RightLowerLeg),
    ] {
        let seg1 = j[mid.index()] - j[root.index()];
        let seg2 = j[end.index()] - j[mid.index()];
        if seg1.norm() < 1e-9 || seg2.norm() < 1e-9 {
            return Err(Error::DegeneratePose(format!("zero-length {u} or {l}")));
        }
        j[mid.index()] = j[root.index()] + seg1.normalize() * table.ratio(u);
        j[end.index()] = j[mid.index()] + seg2.normalize() * table.ratio(l);
    }
    Ok(Pose3D::from_joints(&j))
}

/// Prototype poses with their class labels.
pub struct Generator {
    spec: CorpusSpec,
    prototypes: Vec<Vec<Pose3D>>,
}

impl Generator {
    pub fn new(spec: CorpusSpec) -> Result<Self> {
        if spec.prototypes_per_class == 0 {
            return Err(Error::Config("prototypes_per_class must be positive".into()));
        }
        if spec.min_active == 0 || spec.min_active > spec.max_active {
            return Err(Error::Config(format!(
                "need 1 <= min_active <= max_active, got {} and {}",
                spec.min_active, spec.max_active
            )));
        }
        if !(spec.jitter >= 0.0 && spec.jitter.is_finite()) {
            return Err(Error::Config(format!("jitter must be nonnegative, got {}", spec.jitter)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.prototype_seed);
        let prototypes = (0..CLASS_NAMES.len())
            .map(|c| {
                (0..spec.prototypes_per_class)
                    .map(|_| build_pose(&class_angles(c, &mut rng), &spec.proportions))
                    .collect()
            })
            .collect();
        Ok(Self { spec, prototypes })
    }

    pub fn spec(&self) -> &CorpusSpec {
        &self.spec
    }

    pub fn num_classes(&self) -> usize {
        self.prototypes.len()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<(Pose3D, usize)> {
        let class = rng.random_range(0..self.prototypes.len());
        let protos = &self.prototypes[class];
        let hi = self.spec.max_active.min(protos.len());
        let lo = self.spec.min_active.min(hi);
        let m = rng.random_range(lo..=hi);
        let picks = sample(rng, protos.len(), m);
        let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let mut coords = [0.0; 3 * NUM_JOINTS];
        for (idx, w) in picks.iter().zip(&weights) {
            for (c, v) in coords.iter_mut().zip(protos[idx].as_slice()) {
                *c += w / total * v;
            }
        }
        if self.spec.jitter > 0.0 {
            let noise = Normal::new(0.0, self.spec.jitter).expect("jitter validated");
            for c in coords.iter_mut() {
                *c += noise.sample(rng);
            }
        }
        let pose = renormalize_limbs(&Pose3D::new(&coords)?, &self.spec.proportions)?;
        Ok((normalize_skeleton(&pose)?, class))
    }

    pub fn sample(&self, count: usize, seed: u64) -> Result<Corpus> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut poses = Vec::with_capacity(count);
        let mut labels = Vec::with_capacity(count);
        for _ in 0..count {
            let (p, c) = self.draw(&mut rng)?;
            poses.push(p);
            labels.push(c);
        }
        Ok(Corpus { poses, labels })
    }

    /// Poses paired with random cameras and their exact projections.
    pub fn instances(&self, count: usize, seed: u64) -> Result<Vec<Instance>> {
        let corpus = self.sample(count, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        Ok(corpus
            .poses
            .into_iter()
            .zip(corpus.labels)
            .enumerate()
            .map(|(id, (pose3d, label))| {
                let camera = random_camera(&mut rng);
                let pose2d = project(&pose3d, &camera);
                Instance {
                    id,
                    label,
                    pose3d,
                    camera,
                    pose2d,
                }
            })
            .collect())
    }
}

/// Unit-scale orthographic camera with uniform yaw and pitch within ±20°.
pub fn random_camera(rng: &mut impl Rng) -> Camera {
    let yaw = rng.random_range(0.0..360.0f64).to_radians();
    let pitch = rng.random_range(-20.0..20.0f64).to_radians();
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    // R = Rx(pitch) · Ry(yaw)
    let r_yaw = nalgebra::Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let r_pitch = nalgebra::Matrix3::new(1.0, 0.0, 0.0, 0.0, cp, -sp, 0.0, sp, cp);
    Camera::from_rotation(&(r_pitch * r_yaw), 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{limb_lengths, LocalFrame};

    #[test]
    fn direction_conventions() {
        assert!((direction(0.0, 0.0) - Vector3::new(0.0, -1.0, 0.0)).norm() < 1e-12);
        assert!((direction(90.0, 90.0) - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((direction(180.0, 0.0) - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn corpus_poses_have_table_limb_lengths() {
        let spec = CorpusSpec::default();
        let gen = Generator::new(spec.clone()).unwrap();
        let corpus = gen.sample(200, 3).unwrap();
        let limbs = spec.proportions.limbs();
        for p in &corpus.poses {
            for (len, l) in limb_lengths(p, &limbs).iter().zip(&limbs) {
                assert!((len * len - l.squared_length).abs() < 1e-9);
            }
            assert!(p.centroid().norm() < 1e-12);
            LocalFrame::of(p).unwrap();
        }
    }

    #[test]
    fn every_class_is_drawn() {
        let gen = Generator::new(CorpusSpec::default()).unwrap();
        let corpus = gen.sample(300, 5).unwrap();
        for c in 0..gen.num_classes() {
            assert!(corpus.labels.iter().filter(|&&l| l == c).count() > 20);
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let gen = Generator::new(CorpusSpec::default()).unwrap();
        let a = gen.instances(20, 9).unwrap();
        let b = gen.instances(20, 9).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.pose3d, y.pose3d);
            assert_eq!(x.pose2d, y.pose2d);
        }
        let c = gen.sample(20, 10).unwrap();
        assert_ne!(a[0].pose3d, c.poses[0]);
    }

    #[test]
    fn random_cameras_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let cam = random_camera(&mut rng);
            assert!(cam.orthogonality().abs() < 1e-12);
            assert!((cam.m1.norm() - 1.0).abs() < 1e-12);
            assert!((cam.m2.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn renormalize_is_idempotent() {
        let table = ProportionTable::default();
        let gen = Generator::new(CorpusSpec::default()).unwrap();
        let p = &gen.sample(1, 2).unwrap().poses[0];
        let q = renormalize_limbs(p, &table).unwrap();
        for (a, b) in p.as_slice().iter().zip(q.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
