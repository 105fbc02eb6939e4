//! Pose bases: PCA, classwise PCA and sparse dictionaries, plus L1-regularized
//! coding of a pose against a basis.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::shrink;
use crate::error::{Error, Result};
use crate::linalg::{sorted_eigen, sym};
use crate::skeleton::{Pose3D, POSE3D_LEN};

/// Coefficients with magnitude above this count as active.
pub const ACTIVATION_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisMethod {
    Pca,
    ClasswisePca,
    Sparse,
}

impl std::str::FromStr for BasisMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(BasisMethod::Pca),
            "classwise-pca" => Ok(BasisMethod::ClasswisePca),
            "sparse" => Ok(BasisMethod::Sparse),
            _ => Err(Error::Config(format!("unknown basis method `{s}`"))),
        }
    }
}

/// Dictionary `B` (3n × k, one basis pose per column) and mean pose `μ`;
/// a pose is `Bα + μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    pub method: BasisMethod,
    pub matrix: DMatrix<f64>,
    pub mean: Pose3D,
    pub theta_learn: Option<f64>,
    pub seed: Option<u64>,
}

impl Basis {
    pub fn new(method: BasisMethod, matrix: DMatrix<f64>, mean: Pose3D) -> Result<Self> {
        if matrix.nrows() != POSE3D_LEN {
            return Err(Error::Dimension(format!(
                "basis needs {POSE3D_LEN} rows, got {}",
                matrix.nrows()
            )));
        }
        if matrix.ncols() == 0 {
            return Err(Error::Dimension("basis has no columns".into()));
        }
        if let Some(c) = (0..matrix.ncols()).find(|&c| matrix.column(c).norm() == 0.0) {
            return Err(Error::Data(format!("basis column {c} is zero")));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("basis has non-finite entries".into()));
        }
        Ok(Self {
            method,
            matrix,
            mean,
            theta_learn: None,
            seed: None,
        })
    }

    pub fn k(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn reconstruct(&self, alpha: &DVector<f64>) -> DVector<f64> {
        &self.matrix * alpha + self.mean.to_dvector()
    }

    pub fn reconstruct_pose(&self, alpha: &DVector<f64>) -> Result<Pose3D> {
        Pose3D::from_dvector(&self.reconstruct(alpha))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients(pub DVector<f64>);

impl Coefficients {
    pub fn active_set(&self, tol: f64) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i].abs() > tol).collect()
    }

    pub fn active_count(&self) -> usize {
        self.0.iter().filter(|v| v.abs() > ACTIVATION_TOL).count()
    }
}

fn mean_pose(poses: &[Pose3D]) -> DVector<f64> {
    let mut m = DVector::zeros(POSE3D_LEN);
    for p in poses {
        m += p.to_dvector();
    }
    m / poses.len() as f64
}

fn centered_data(poses: &[Pose3D], mean: &DVector<f64>) -> DMatrix<f64> {
    let mut data = DMatrix::zeros(POSE3D_LEN, poses.len());
    for (c, p) in poses.iter().enumerate() {
        data.set_column(c, &(p.to_dvector() - mean));
    }
    data
}

/// Leading left singular vectors of the centered data, sorted by singular
/// value. Zero columns are appended when there are fewer samples than
/// dimensions so the full 36-dimensional frame is always available.
fn principal_directions(data: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    // Eigenvectors of the scatter matrix. nalgebra's SVD returned a wrong
    // leading vector on exactly rank-one inputs, the symmetric solver does not.
    let scatter = sym(&(data * data.transpose()));
    let (_, vectors) = sorted_eigen(&scatter);
    vectors.columns(0, k).into_owned()
}

pub fn learn_pca(poses: &[Pose3D], k: usize) -> Result<Basis> {
    if k > POSE3D_LEN {
        return Err(Error::Dimension(format!(
            "PCA yields at most {POSE3D_LEN} components, asked for {k}"
        )));
    }
    if k == 0 {
        return Err(Error::Dimension("k must be at least 1".into()));
    }
    if poses.len() < 2 {
        return Err(Error::Data("PCA needs at least two poses".into()));
    }
    let mean = mean_pose(poses);
    let data = centered_data(poses, &mean);
    Basis::new(
        BasisMethod::Pca,
        principal_directions(&data, k),
        Pose3D::from_dvector(&mean)?,
    )
}

/// Per-class PCA with class-centered data; the components of every class are
/// concatenated in ascending class order. `labels` must cover `0..=max`.
pub fn learn_classwise_pca(poses: &[Pose3D], labels: &[usize], k_per_class: usize) -> Result<Basis> {
    if labels.len() != poses.len() {
        return Err(Error::Data(format!(
            "{} labels for {} poses",
            labels.len(),
            poses.len()
        )));
    }
    if k_per_class == 0 || k_per_class > POSE3D_LEN {
        return Err(Error::Dimension(format!(
            "per-class component count must be in 1..={POSE3D_LEN}, got {k_per_class}"
        )));
    }
    let Some(&max_label) = labels.iter().max() else {
        return Err(Error::Data("no poses".into()));
    };
    let mut classes: BTreeMap<usize, Vec<Pose3D>> = (0..=max_label).map(|c| (c, Vec::new())).collect();
    for (p, &l) in poses.iter().zip(labels) {
        classes.get_mut(&l).expect("label in range").push(p.clone());
    }
    let mut columns = Vec::new();
    for (class, members) in &classes {
        if members.len() < 2 {
            return Err(Error::Data(format!(
                "class {class} has {} poses, needs at least two",
                members.len()
            )));
        }
        let m = mean_pose(members);
        let dirs = principal_directions(&centered_data(members, &m), k_per_class);
        columns.extend(dirs.column_iter().map(|c| c.into_owned()));
    }
    let matrix = DMatrix::from_columns(&columns);
    Basis::new(
        BasisMethod::ClasswisePca,
        matrix,
        Pose3D::from_dvector(&mean_pose(poses))?,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodingOptions {
    /// Relative tolerance on the iterate change.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CodingOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
        }
    }
}

/// Largest eigenvalue of `BᵀB` (equivalently of `BBᵀ`) by power iteration.
pub fn gram_spectral_norm(b: &DMatrix<f64>) -> f64 {
    let bbt = b * b.transpose();
    let n = bbt.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_7).fract());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..1000 {
        let w = &bbt * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= 1e-12 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Power iteration approaches from below; a hair of headroom keeps the
    // step inside the stable range.
    lambda * (1.0 + 1e-6)
}

/// Reusable L1-regularized least-squares solver for a fixed dictionary:
/// `min ||r - Bα||² + θ||α||₁` by accelerated proximal gradient with
/// function-value restarts.
pub struct SparseCoder<'a> {
    b: &'a DMatrix<f64>,
    lipschitz: f64,
}

pub(crate) struct CodeOutcome {
    pub alpha: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl<'a> SparseCoder<'a> {
    pub fn new(b: &'a DMatrix<f64>) -> Self {
        Self {
            b,
            lipschitz: 2.0 * gram_spectral_norm(b),
        }
    }

    pub fn objective(&self, r: &DVector<f64>, alpha: &DVector<f64>, theta: f64) -> f64 {
        (self.b * alpha - r).norm_squared() + theta * alpha.lp_norm(1)
    }

    pub(crate) fn solve(
        &self,
        r: &DVector<f64>,
        theta: f64,
        warm: Option<&DVector<f64>>,
        opts: &CodingOptions,
    ) -> CodeOutcome {
        let k = self.b.ncols();
        let mut x = warm.cloned().unwrap_or_else(|| DVector::zeros(k));
        let mut fx = self.objective(r, &x, theta);
        if self.lipschitz == 0.0 {
            return CodeOutcome {
                alpha: DVector::zeros(k),
                iterations: 0,
                converged: true,
            };
        }
        let step = 1.0 / self.lipschitz;
        let thresh = theta * step;
        let mut z = x.clone();
        let mut t = 1.0f64;
        let mut restarted = false;
        for it in 1..=opts.max_iter {
            let grad = self.b.tr_mul(&(self.b * &z - r)) * 2.0;
            let x_new = (&z - grad * step).map(|v| shrink(v, thresh));
            let f_new = self.objective(r, &x_new, theta);
            if f_new > fx {
                if restarted {
                    // A plain proximal step from x cannot increase the
                    // objective, so this is roundoff at the minimum.
                    return CodeOutcome {
                        alpha: x,
                        iterations: it,
                        converged: true,
                    };
                }
                // Momentum overshot: restart from the last accepted iterate.
                z = x.clone();
                t = 1.0;
                restarted = true;
                continue;
            }
            restarted = false;
            let dx = (&x_new - &x).norm();
            let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            z = &x_new + (&x_new - &x) * ((t - 1.0) / t_new);
            t = t_new;
            let scale = x_new.norm().max(1.0);
            x = x_new;
            fx = f_new;
            if dx <= opts.tol * scale {
                return CodeOutcome {
                    alpha: x,
                    iterations: it,
                    converged: true,
                };
            }
        }
        CodeOutcome {
            alpha: x,
            iterations: opts.max_iter,
            converged: false,
        }
    }
}

/// Codes `pose` against `basis`: `min ||y - μ - Bα||² + θ||α||₁`.
pub fn sparse_code(pose: &Pose3D, basis: &Basis, theta: f64, opts: &CodingOptions) -> Result<Coefficients> {
    if !(theta >= 0.0) {
        return Err(Error::Config(format!("θ must be nonnegative, got {theta}")));
    }
    let r = pose.to_dvector() - basis.mean.to_dvector();
    let out = SparseCoder::new(&basis.matrix).solve(&r, theta, None, opts);
    if out.converged {
        Ok(Coefficients(out.alpha))
    } else {
        Err(Error::CodingNotConverged {
            iterations: out.iterations,
            last: out.alpha.as_slice().to_vec(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DictionaryOptions {
    pub k: usize,
    pub theta: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Block-coordinate passes over the columns per epoch.
    pub dictionary_passes: usize,
    pub coding: CodingOptions,
}

impl Default for DictionaryOptions {
    fn default() -> Self {
        Self {
            k: 200,
            theta: 0.1,
            epochs: 15,
            seed: 0,
            dictionary_passes: 3,
            coding: CodingOptions {
                tol: 1e-7,
                max_iter: 2000,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct DictionaryLearning {
    pub basis: Basis,
    /// Training codes against the returned (column-normalized) basis.
    pub codes: DMatrix<f64>,
    /// `Σ||y - μ - Bα||² + θΣ||α||₁` after each epoch.
    pub objective_per_epoch: Vec<f64>,
}

/// Batch dictionary learning: code all samples, then update the columns by
/// exact block-coordinate minimization over the unit ball.
pub fn learn_sparse_dictionary(poses: &[Pose3D], opts: &DictionaryOptions) -> Result<DictionaryLearning> {
    if poses.is_empty() {
        return Err(Error::Data("dictionary learning needs at least one pose".into()));
    }
    if opts.k == 0 {
        return Err(Error::Dimension("k must be at least 1".into()));
    }
    if !(opts.theta >= 0.0) {
        return Err(Error::Config(format!("θ must be nonnegative, got {}", opts.theta)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mean = mean_pose(poses);
    let data = centered_data(poses, &mean);
    let n = poses.len();
    let k = opts.k;

    let mut b = DMatrix::zeros(POSE3D_LEN, k);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    for c in 0..k {
        let from_data = if c < n { Some(data.column(order[c]).into_owned()) } else { None };
        let col = match from_data {
            Some(v) if v.norm() > 1e-9 => v,
            _ => DVector::from_fn(POSE3D_LEN, |_, _| rng.sample::<f64, _>(StandardNormal)),
        };
        let norm = col.norm();
        b.set_column(c, &(col / norm));
    }

    let mut codes = DMatrix::zeros(k, n);
    let mut history = Vec::with_capacity(opts.epochs);
    let objective = |b: &DMatrix<f64>, codes: &DMatrix<f64>| {
        (&data - b * codes).norm_squared() + opts.theta * codes.iter().map(|v| v.abs()).sum::<f64>()
    };

    for _ in 0..opts.epochs {
        let coder = SparseCoder::new(&b);
        let new_codes: Vec<DVector<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let warm = codes.column(j).into_owned();
                let r = data.column(j).into_owned();
                coder.solve(&r, opts.theta, Some(&warm), &opts.coding).alpha
            })
            .collect();
        for (j, a) in new_codes.iter().enumerate() {
            codes.set_column(j, a);
        }

        let aat = &codes * codes.transpose();
        let yat = &data * codes.transpose();
        for _ in 0..opts.dictionary_passes {
            for j in 0..k {
                let ajj = aat[(j, j)];
                if ajj <= 1e-12 {
                    // Unused atom: swap in a normalized training residual.
                    // Its coefficients are zero, so the objective is unchanged.
                    let s = rng.random_range(0..n);
                    let resid = data.column(s) - &b * codes.column(s);
                    let norm = resid.norm();
                    if norm > 1e-9 {
                        b.set_column(j, &(resid / norm));
                    }
                    continue;
                }
                let u = b.column(j) + (yat.column(j) - &b * aat.column(j)) / ajj;
                let norm = u.norm();
                if norm > 1e-300 {
                    b.set_column(j, &(&u / norm.max(1.0)));
                }
            }
        }
        history.push(objective(&b, &codes));
    }

    // Unit-norm columns; codes rescaled so reconstructions are unchanged.
    for j in 0..k {
        let norm = b.column(j).norm();
        if norm > 0.0 && (norm - 1.0).abs() > 0.0 {
            let col = b.column(j) / norm;
            b.set_column(j, &col);
            let mut row = codes.row_mut(j);
            row *= norm;
        }
    }

    let mut basis = Basis::new(BasisMethod::Sparse, b, Pose3D::from_dvector(&mean)?)?;
    basis.theta_learn = Some(opts.theta);
    basis.seed = Some(opts.seed);
    Ok(DictionaryLearning {
        basis,
        codes,
        objective_per_epoch: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::Distribution;

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize, scales: &[f64]) -> Vec<Pose3D> {
        (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..POSE3D_LEN)
                    .map(|i| gaussian(rng) * scales[i % scales.len()] + 0.1 * i as f64)
                    .collect();
                Pose3D::new(&v).unwrap()
            })
            .collect()
    }

    fn residual_norm(basis: &Basis, pose: &Pose3D) -> f64 {
        // Orthonormal columns: projection is BBᵀ(y - μ).
        let r = pose.to_dvector() - basis.mean.to_dvector();
        let proj = &basis.matrix * basis.matrix.tr_mul(&r);
        (r - proj).norm()
    }

    #[test]
    fn pca_on_affine_plane_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let d1 = DVector::from_fn(POSE3D_LEN, |_, _| gaussian(&mut rng));
        let d2 = DVector::from_fn(POSE3D_LEN, |_, _| gaussian(&mut rng));
        let offset = DVector::from_fn(POSE3D_LEN, |i, _| i as f64);
        let poses: Vec<Pose3D> = (0..30)
            .map(|_| {
                let v = &offset + &d1 * gaussian(&mut rng) + &d2 * gaussian(&mut rng);
                Pose3D::from_dvector(&v).unwrap()
            })
            .collect();
        let basis = learn_pca(&poses, 2).unwrap();
        for p in &poses {
            assert!(residual_norm(&basis, p) < 1e-9);
        }
        let gram = basis.matrix.tr_mul(&basis.matrix);
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn full_rank_pca_reconstructs_anything() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let poses = random_cloud(&mut rng, 10, &[1.0, 0.5, 2.0]);
        let basis = learn_pca(&poses, 36).unwrap();
        let other = random_cloud(&mut rng, 3, &[3.0]);
        for p in &other {
            assert!(residual_norm(&basis, p) < 1e-9);
        }
    }

    #[test]
    fn pca_rejects_too_many_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let poses = random_cloud(&mut rng, 10, &[1.0]);
        assert!(matches!(learn_pca(&poses, 37), Err(Error::Dimension(_))));
        assert!(matches!(learn_pca(&poses[..1], 3), Err(Error::Data(_))));
    }

    #[test]
    fn pca_variance_matches_covariance_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let poses = random_cloud(&mut rng, 400, &[3.0, 1.0, 0.5, 2.0, 0.2, 1.5]);
        // Oracle: eigen-decomposition of the sample covariance.
        let n = poses.len() as f64;
        let mut mean = DVector::zeros(POSE3D_LEN);
        for p in &poses {
            mean += p.to_dvector();
        }
        mean /= n;
        let mut cov = DMatrix::zeros(POSE3D_LEN, POSE3D_LEN);
        for p in &poses {
            let d = p.to_dvector() - &mean;
            cov += &d * d.transpose();
        }
        cov /= n - 1.0;
        let mut eig: Vec<f64> = cov.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));

        for k in [1, 5, 12, 36] {
            let basis = learn_pca(&poses, k).unwrap();
            let explained: f64 = basis
                .matrix
                .column_iter()
                .map(|b| (b.transpose() * &cov * b)[(0, 0)])
                .sum();
            let oracle: f64 = eig[..k].iter().sum();
            assert!((explained - oracle).abs() < 1e-8 * oracle, "k={k}: {explained} vs {oracle}");
        }
    }

    #[test]
    fn pca_error_is_monotone_in_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let poses = random_cloud(&mut rng, 80, &[2.0, 1.0, 0.3]);
        let mut prev = f64::INFINITY;
        for k in 1..=36 {
            let basis = learn_pca(&poses, k).unwrap();
            let err: f64 = poses.iter().map(|p| residual_norm(&basis, p).powi(2)).sum();
            assert!(err <= prev + 1e-9);
            prev = err;
        }
    }

    #[test]
    fn single_class_matches_pca() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let poses = random_cloud(&mut rng, 50, &[2.0, 1.0, 0.3, 4.0]);
        let a = learn_pca(&poses, 6).unwrap();
        let b = learn_classwise_pca(&poses, &vec![0; poses.len()], 6).unwrap();
        // Same subspace, sign of each column free.
        for (ca, cb) in a.matrix.column_iter().zip(b.matrix.column_iter()) {
            assert!((ca.dot(&cb).abs() - 1.0).abs() < 1e-9);
        }
        assert!((a.mean.to_dvector() - b.mean.to_dvector()).norm() < 1e-12);
    }

    #[test]
    fn classwise_recovers_each_class_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let d1 = DVector::from_fn(POSE3D_LEN, |i, _| if i < 18 { 1.0 } else { 0.0 }).normalize();
        let d2 = DVector::from_fn(POSE3D_LEN, |i, _| if i >= 18 { 1.0 } else { -0.2 }).normalize();
        let mut poses = Vec::new();
        let mut labels = Vec::new();
        for (label, d) in [(0usize, &d1), (1usize, &d2)] {
            for _ in 0..20 {
                poses.push(Pose3D::from_dvector(&(d * gaussian(&mut rng))).unwrap());
                labels.push(label);
            }
        }
        let basis = learn_classwise_pca(&poses, &labels, 1).unwrap();
        assert_eq!(basis.k(), 2);
        assert!((basis.matrix.column(0).dot(&d1).abs() - 1.0).abs() < 1e-9);
        assert!((basis.matrix.column(1).dot(&d2).abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn classwise_caps_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let poses = random_cloud(&mut rng, 40, &[1.0, 2.0]);
        let labels: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let basis = learn_classwise_pca(&poses, &labels, 36).unwrap();
        assert_eq!(basis.k(), 144);
        assert!(learn_classwise_pca(&poses, &labels, 37).is_err());
        // Class 2 missing.
        let gap: Vec<usize> = (0..40).map(|i| if i % 2 == 0 { 0 } else { 3 }).collect();
        assert!(matches!(learn_classwise_pca(&poses, &gap, 2), Err(Error::Data(_))));
    }

    #[test]
    fn coding_without_penalty_inverts_square_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let mut b = DMatrix::from_fn(POSE3D_LEN, POSE3D_LEN, |_, _| 0.2 * gaussian(&mut rng));
        b += DMatrix::identity(POSE3D_LEN, POSE3D_LEN);
        let mean = Pose3D::new(&vec![0.5; POSE3D_LEN]).unwrap();
        let basis = Basis::new(BasisMethod::Pca, b.clone(), mean.clone()).unwrap();
        let pose = random_cloud(&mut rng, 1, &[1.0]).pop().unwrap();
        let opts = CodingOptions {
            tol: 1e-13,
            max_iter: 200_000,
        };
        let coded = sparse_code(&pose, &basis, 0.0, &opts).unwrap();
        let exact = b.lu().solve(&(pose.to_dvector() - mean.to_dvector())).unwrap();
        assert!((coded.0 - exact).amax() < 1e-6);
    }

    #[test]
    fn huge_penalty_gives_zero_code() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let poses = random_cloud(&mut rng, 30, &[1.0]);
        let basis = learn_pca(&poses, 10).unwrap();
        let c = sparse_code(&poses[0], &basis, 1e6, &CodingOptions::default()).unwrap();
        assert!(c.0.iter().all(|&v| v == 0.0));
        assert!(sparse_code(&poses[0], &basis, -1.0, &CodingOptions::default()).is_err());
    }

    /// Cyclic coordinate descent on the same objective, with each scalar
    /// subproblem solved in closed form.
    fn coordinate_descent(b: &DMatrix<f64>, r: &DVector<f64>, theta: f64) -> DVector<f64> {
        let k = b.ncols();
        let mut a = DVector::zeros(k);
        for _ in 0..20_000 {
            for i in 0..k {
                let col = b.column(i);
                let partial = r - b * &a + col * a[i];
                let rho = col.dot(&partial);
                let z = col.norm_squared();
                // argmin z a² - 2ρa + θ|a|
                a[i] = shrink(rho, theta / 2.0) / z;
            }
        }
        a
    }

    #[test]
    fn small_instance_matches_coordinate_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..10 {
            // k = 3 atoms in a 6-dimensional space, embedded in pose slots.
            let mut b = DMatrix::zeros(POSE3D_LEN, 3);
            for r in 0..6 {
                for c in 0..3 {
                    b[(r, c)] = gaussian(&mut rng);
                }
            }
            let mut r = DVector::zeros(POSE3D_LEN);
            for i in 0..6 {
                r[i] = gaussian(&mut rng);
            }
            let theta = 0.3;
            let oracle = coordinate_descent(&b, &r, theta);
            let mean = Pose3D::zeros();
            let basis = Basis::new(BasisMethod::Sparse, b, mean).unwrap();
            let pose = Pose3D::from_dvector(&r).unwrap();
            let coded = sparse_code(&pose, &basis, theta, &CodingOptions::default()).unwrap();
            assert!((coded.0 - oracle).amax() < 1e-6);
        }
    }

    #[test]
    fn coding_never_worse_than_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let poses = random_cloud(&mut rng, 40, &[1.0, 0.2]);
        let basis = learn_pca(&poses, 20).unwrap();
        let coder = SparseCoder::new(&basis.matrix);
        for p in poses.iter().take(10) {
            for theta in [0.0, 0.05, 1.0, 10.0] {
                let r = p.to_dvector() - basis.mean.to_dvector();
                let a = sparse_code(p, &basis, theta, &CodingOptions::default()).unwrap();
                let zero = DVector::zeros(basis.k());
                assert!(coder.objective(&r, &a.0, theta) <= coder.objective(&r, &zero, theta) + 1e-12);
            }
        }
    }

    #[test]
    fn coding_cap_reports_last_iterate() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let poses = random_cloud(&mut rng, 40, &[1.0, 0.2]);
        let basis = learn_pca(&poses, 20).unwrap();
        let opts = CodingOptions { tol: 1e-15, max_iter: 2 };
        match sparse_code(&poses[0], &basis, 0.01, &opts) {
            Err(Error::CodingNotConverged { iterations, last }) => {
                assert_eq!(iterations, 2);
                assert_eq!(last.len(), 20);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn dictionary_on_constant_data_codes_to_zero() {
        let pose = Pose3D::new(&(0..36).map(|i| i as f64 * 0.1).collect::<Vec<_>>()).unwrap();
        let poses = vec![pose.clone(); 12];
        let opts = DictionaryOptions { k: 8, epochs: 3, ..Default::default() };
        let learned = learn_sparse_dictionary(&poses, &opts).unwrap();
        assert!(learned.codes.iter().all(|&v| v == 0.0));
        assert!((learned.basis.mean.to_dvector() - pose.to_dvector()).norm() < 1e-12);
        for c in learned.basis.matrix.column_iter() {
            assert!((c.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dictionary_objective_is_non_increasing_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let poses = random_cloud(&mut rng, 60, &[2.0, 1.0, 0.3]);
        let opts = DictionaryOptions { k: 24, epochs: 8, theta: 0.2, seed: 5, ..Default::default() };
        let a = learn_sparse_dictionary(&poses, &opts).unwrap();
        for w in a.objective_per_epoch.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{:?}", a.objective_per_epoch);
        }
        let b = learn_sparse_dictionary(&poses, &opts).unwrap();
        assert_eq!(a.basis, b.basis);
        for c in a.basis.matrix.column_iter() {
            assert!((c.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn every_learner_uses_the_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let poses = random_cloud(&mut rng, 30, &[1.0, 0.5]);
        let mean = mean_pose(&poses);
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let learners = [
            learn_pca(&poses, 5).unwrap(),
            learn_classwise_pca(&poses, &labels, 2).unwrap(),
            learn_sparse_dictionary(&poses, &DictionaryOptions { k: 10, epochs: 2, ..Default::default() })
                .unwrap()
                .basis,
        ];
        for b in learners {
            assert!((b.mean.to_dvector() - &mean).amax() < 1e-10);
        }
    }
}
