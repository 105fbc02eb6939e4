//! Weak-perspective projection and L1 camera estimation by alternating
//! directions.
//!
//! The camera problem is `min ||X - M0 Y||_1  s.t.  m1ᵀm2 = 0` where the rows
//! of `M0` are `m1ᵀ` and `m2ᵀ`. An auxiliary residual `R = X - M0 Y` turns the
//! L1 term into a shrinkage step; `m1` and `m2` each have a 3×3 normal system.

use nalgebra::{DMatrix, DVector, Matrix2xX, Matrix3, Matrix3xX, RowDVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{Pose2D, Pose3D};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    #[serde(with = "vec3")]
    pub m1: Vector3<f64>,
    #[serde(with = "vec3")]
    pub m2: Vector3<f64>,
}

mod vec3 {
    use nalgebra::Vector3;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector3<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector3<f64>, D::Error> {
        let v = <[f64; 3]>::deserialize(d)?;
        Ok(Vector3::from(v))
    }
}

impl Camera {
    pub fn new(m1: Vector3<f64>, m2: Vector3<f64>) -> Self {
        Self { m1, m2 }
    }

    /// Scaled orthographic camera: drops z.
    pub fn orthographic(scale: f64) -> Self {
        Self::new(Vector3::x() * scale, Vector3::y() * scale)
    }

    /// First two rows of a rotation matrix, scaled.
    pub fn from_rotation(r: &Matrix3<f64>, scale: f64) -> Self {
        Self::new(r.row(0).transpose() * scale, r.row(1).transpose() * scale)
    }

    pub fn matrix(&self) -> nalgebra::Matrix2x3<f64> {
        nalgebra::Matrix2x3::from_rows(&[self.m1.transpose(), self.m2.transpose()])
    }

    pub fn orthogonality(&self) -> f64 {
        self.m1.dot(&self.m2)
    }

    pub fn is_valid(&self) -> bool {
        self.m1.iter().chain(self.m2.iter()).all(|v| v.is_finite())
            && self.m1.norm() > 0.0
            && self.m2.norm() > 0.0
    }

    /// `I_n ⊗ M0` applied to a k-column matrix of stacked 3D poses.
    pub fn project_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let n = b.nrows() / 3;
        let mut out = DMatrix::zeros(2 * n, b.ncols());
        for j in 0..n {
            for c in 0..b.ncols() {
                let p = Vector3::new(b[(3 * j, c)], b[(3 * j + 1, c)], b[(3 * j + 2, c)]);
                out[(2 * j, c)] = self.m1.dot(&p);
                out[(2 * j + 1, c)] = self.m2.dot(&p);
            }
        }
        out
    }

    pub fn project_vector(&self, y: &DVector<f64>) -> DVector<f64> {
        let n = y.len() / 3;
        DVector::from_fn(2 * n, |i, _| {
            let j = i / 2;
            let p = Vector3::new(y[3 * j], y[3 * j + 1], y[3 * j + 2]);
            if i % 2 == 0 {
                self.m1.dot(&p)
            } else {
                self.m2.dot(&p)
            }
        })
    }
}

pub fn project(pose: &Pose3D, cam: &Camera) -> Pose2D {
    let joints = pose
        .joints()
        .map(|p| Vector2::new(cam.m1.dot(&p), cam.m2.dot(&p)));
    Pose2D::from_joints(&joints)
}

/// Elementwise `sign(v) * max(|v| - t, 0)`.
pub fn soft_threshold(v: &DVector<f64>, t: f64) -> DVector<f64> {
    v.map(|x| shrink(x, t))
}

#[inline]
pub fn shrink(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

pub fn pose2d_matrix(x: &Pose2D) -> Matrix2xX<f64> {
    Matrix2xX::from_column_slice(x.as_slice())
}

pub fn pose3d_matrix(y: &Pose3D) -> Matrix3xX<f64> {
    Matrix3xX::from_column_slice(y.as_slice())
}

pub fn center_columns2(x: &Matrix2xX<f64>) -> (Matrix2xX<f64>, Vector2<f64>) {
    let c = x.column_mean();
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        col -= &c;
    }
    (out, c)
}

pub fn center_columns3(y: &Matrix3xX<f64>) -> (Matrix3xX<f64>, Vector3<f64>) {
    let c = y.column_mean();
    let mut out = y.clone();
    for mut col in out.column_iter_mut() {
        col -= &c;
    }
    (out, c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraOptions {
    pub tau0: f64,
    pub tau_growth: f64,
    pub tau_max: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CameraOptions {
    fn default() -> Self {
        Self {
            tau0: 1.0,
            tau_growth: 1.1,
            tau_max: 1e8,
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraDiagnostics {
    pub iterations: usize,
    /// `||X - M0 Y||_1` at the returned camera.
    pub l1_residual: f64,
    pub orthogonality: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CameraEstimate {
    pub camera: Camera,
    pub diagnostics: CameraDiagnostics,
}

/// ADM state for the camera problem.
#[derive(Clone, Debug)]
pub struct CameraAdmState {
    pub camera: Camera,
    /// Residual variable standing in for `X - M0 Y`.
    pub r: Matrix2xX<f64>,
    pub h: Matrix2xX<f64>,
    pub zeta: f64,
    pub tau: f64,
}

/// Camera ADM over fixed, centered observations.
pub struct CameraAdm<'a> {
    x: &'a Matrix2xX<f64>,
    y: &'a Matrix3xX<f64>,
    yyt: Matrix3<f64>,
    pub state: CameraAdmState,
}

fn rank_tol(m: &Matrix3<f64>) -> f64 {
    1e-10 * m.norm().max(f64::MIN_POSITIVE)
}

/// Least-norm solution of a symmetric 3×3 system; fails when the matrix has
/// rank below two.
fn solve_sym3(a: &Matrix3<f64>, b: &Vector3<f64>) -> Result<Vector3<f64>> {
    if let Some(chol) = a.cholesky() {
        let sol = chol.solve(b);
        if sol.iter().all(|v| v.is_finite()) {
            return Ok(sol);
        }
    }
    let eig = a.symmetric_eigen();
    let tol = rank_tol(a);
    let rank = eig.eigenvalues.iter().filter(|&&v| v.abs() > tol).count();
    if rank < 2 {
        return Err(Error::SingularGeometry(format!(
            "camera normal system has rank {rank}"
        )));
    }
    let mut sol = Vector3::zeros();
    for i in 0..3 {
        let lam = eig.eigenvalues[i];
        if lam.abs() > tol {
            let v = eig.eigenvectors.column(i);
            sol += v * (v.dot(b) / lam);
        }
    }
    Ok(sol)
}

/// Rotates the two rows apart symmetrically in their common plane until they
/// are orthogonal, keeping each row's norm.
pub fn orthogonalize_rows(m1: Vector3<f64>, m2: Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let (n1, n2) = (m1.norm(), m2.norm());
    if n1 < 1e-300 || n2 < 1e-300 {
        return (m1, m2);
    }
    let (a, b) = (m1 / n1, m2 / n2);
    let sum = a + b;
    let diff = a - b;
    let (ls, ld) = (sum.norm(), diff.norm());
    if ls < 1e-12 || ld < 1e-12 {
        // Parallel or antiparallel rows: no plane to rotate in.
        return (m1, m2);
    }
    let (u, v) = (sum / ls, diff / ld);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ((u + v) * (s * n1), (u - v) * (s * n2))
}

impl<'a> CameraAdm<'a> {
    pub fn new(x: &'a Matrix2xX<f64>, y: &'a Matrix3xX<f64>, opts: &CameraOptions) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::Dimension(format!(
                "2D has {} joints, 3D has {}",
                x.ncols(),
                y.ncols()
            )));
        }
        let yyt: Matrix3<f64> = y * y.transpose();
        let eig = yyt.symmetric_eigen();
        let tol = rank_tol(&yyt);
        let rank = eig.eigenvalues.iter().filter(|&&v| v > tol).count();
        if rank < 2 {
            return Err(Error::SingularGeometry(format!("3D joints span rank {rank}")));
        }
        // Least-squares rows of X Yᵀ (Y Yᵀ)⁺, then made orthogonal.
        let xyt = x * y.transpose();
        let r1 = solve_sym3(&yyt, &xyt.row(0).transpose())?;
        let r2 = solve_sym3(&yyt, &xyt.row(1).transpose())?;
        let (m1, m2) = orthogonalize_rows(r1, r2);
        let n = x.ncols();
        Ok(Self {
            x,
            y,
            yyt,
            state: CameraAdmState {
                camera: Camera::new(m1, m2),
                r: Matrix2xX::zeros(n),
                h: Matrix2xX::zeros(n),
                zeta: 0.0,
                tau: opts.tau0,
            },
        })
    }

    pub fn with_state(
        x: &'a Matrix2xX<f64>,
        y: &'a Matrix3xX<f64>,
        state: CameraAdmState,
    ) -> Self {
        let yyt = y * y.transpose();
        Self { x, y, yyt, state }
    }

    /// `M0 Y + R - X`.
    pub fn constraint_residual(&self) -> Matrix2xX<f64> {
        self.state.camera.matrix() * self.y + &self.state.r - self.x
    }

    pub fn augmented_lagrangian(&self) -> f64 {
        let s = &self.state;
        let c = self.constraint_residual();
        let o = s.camera.orthogonality();
        s.r.abs().sum() + s.h.dot(&c) + s.zeta * o + 0.5 * s.tau * (c.norm_squared() + o * o)
    }

    pub fn update_r(&mut self) {
        let s = &mut self.state;
        let v = self.x - s.camera.matrix() * self.y - &s.h / s.tau;
        let t = 1.0 / s.tau;
        s.r = v.map(|e| shrink(e, t));
    }

    fn row_target(&self, row: usize) -> RowDVector<f64> {
        let s = &self.state;
        self.x.row(row) - s.r.row(row) - s.h.row(row) / s.tau
    }

    fn solve_row(&self, row: usize, other: &Vector3<f64>) -> Result<Vector3<f64>> {
        let d = self.row_target(row);
        let c = self.state.zeta / self.state.tau;
        let a = self.yyt + other * other.transpose();
        let rhs = self.y * d.transpose() - other * c;
        solve_sym3(&a, &rhs)
    }

    pub fn update_m1(&mut self) -> Result<()> {
        let m2 = self.state.camera.m2;
        self.state.camera.m1 = self.solve_row(0, &m2)?;
        Ok(())
    }

    pub fn update_m2(&mut self) -> Result<()> {
        let m1 = self.state.camera.m1;
        self.state.camera.m2 = self.solve_row(1, &m1)?;
        Ok(())
    }

    pub fn update_multipliers(&mut self) {
        let c = self.constraint_residual();
        let s = &mut self.state;
        s.h += &c * s.tau;
        s.zeta += s.tau * s.camera.orthogonality();
    }

    pub fn l1_residual(&self) -> f64 {
        (self.x - self.state.camera.matrix() * self.y).abs().sum()
    }
}

/// Estimates `m1, m2` from column-centered `X` (2×n) and `Y` (3×n).
///
/// Returns `Error::CameraNotConverged` carrying the best iterate (smallest
/// L1 residual among nearly orthogonal iterates) when the cap is reached.
pub fn estimate_camera(
    x: &Matrix2xX<f64>,
    y: &Matrix3xX<f64>,
    opts: &CameraOptions,
) -> Result<CameraEstimate> {
    let mut adm = CameraAdm::new(x, y, opts)?;
    let ortho_scale = |c: &Camera| c.m1.norm() * c.m2.norm();
    let score = |adm: &CameraAdm| {
        let cam = &adm.state.camera;
        let ortho = cam.orthogonality().abs() / ortho_scale(cam).max(1e-300);
        (adm.l1_residual(), ortho)
    };
    let mut best = adm.state.camera;
    let mut best_score = score(&adm);
    for it in 1..=opts.max_iter {
        adm.update_r();
        adm.update_m1()?;
        adm.update_m2()?;
        let c = adm.constraint_residual();
        let feas = c.abs().max().max(adm.state.camera.orthogonality().abs());
        adm.update_multipliers();
        adm.state.tau = (adm.state.tau * opts.tau_growth).min(opts.tau_max);

        let sc = score(&adm);
        if sc.1 <= 1e-6 && (sc.0 < best_score.0 || best_score.1 > 1e-6) {
            best = adm.state.camera;
            best_score = sc;
        }
        if feas < opts.tol {
            let camera = adm.state.camera;
            return Ok(CameraEstimate {
                camera,
                diagnostics: CameraDiagnostics {
                    iterations: it,
                    l1_residual: adm.l1_residual(),
                    orthogonality: camera.orthogonality(),
                    converged: true,
                },
            });
        }
    }
    let l1 = (x - best.matrix() * y).abs().sum();
    Err(Error::CameraNotConverged(Box::new(CameraEstimate {
        camera: best,
        diagnostics: CameraDiagnostics {
            iterations: opts.max_iter,
            l1_residual: l1,
            orthogonality: best.orthogonality(),
            converged: false,
        },
    })))
}

/// Like [`estimate_camera`] but accepts the best iterate when the cap is hit.
pub fn estimate_camera_lenient(
    x: &Matrix2xX<f64>,
    y: &Matrix3xX<f64>,
    opts: &CameraOptions,
) -> Result<CameraEstimate> {
    match estimate_camera(x, y, opts) {
        Err(Error::CameraNotConverged(est)) => Ok(*est),
        other => other,
    }
}
