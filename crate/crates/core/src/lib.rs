//! Monocular 3D human pose estimation from 2D joint positions.
//!
//! A 3D pose is a sparse combination of learned basis poses. Given 2D joints
//! and a weak-perspective camera, [`lifter::lift`] recovers the coefficients
//! under an L1 reprojection loss with exact limb-length constraints;
//! [`camera::estimate_camera`] recovers the camera for a fixed pose, and
//! [`pipeline`] alternates the two.

pub mod basis;
pub mod camera;
pub mod error;
pub mod eval;
pub mod io;
pub mod lifter;
pub mod linalg;
pub mod pipeline;
pub mod plot;
pub mod skeleton;
pub mod synthetic;

pub use basis::{Basis, BasisMethod, Coefficients};
pub use camera::{estimate_camera, project, Camera, CameraEstimate};
pub use error::{Error, Result};
pub use lifter::{lift, LiftOptions, LiftProblem, LiftResult, LossNorm, VariantConfig};
pub use pipeline::{alternate, kmeans_poses, multi_start, AlternationOptions, InitMode, InitializationSet, LiftSetup};
pub use skeleton::{default_limbs, Joint, Limb, LimbSpec, Pose2D, Pose3D, ProportionTable};
