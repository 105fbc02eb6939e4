//! Single-view 3D pose estimation for a fixed camera.
//!
//! The full problem is
//!
//! ```text
//! min_α ||x - M(Bα + μ)||_1 + θ||α||_1   s.t.  ||C_i(Bα + μ)||² = L_i
//! ```
//!
//! solved by alternating directions with splittings `γ = x - M(Bα+μ)` and
//! `β = α`. The α-step is a quadratic with quadratic equality constraints;
//! writing `z = [α; 1]` and `Q = zzᵀ` turns it into a trace problem over a
//! rank-one PSD matrix, which an inner ADM solves with a closed-form
//! constrained Q-step and a rank-one PSD projection for P.
//!
//! The same machinery covers the baseline variants: the L2 loss is folded
//! into the α quadratic, sparsity off means θ = 0, and without limb
//! constraints the α-step is a linear solve.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::basis::{Basis, Coefficients};
use crate::camera::{soft_threshold, Camera};
use crate::error::{Error, Result};
use crate::linalg::{frob_dot, leading_eigenpair, leading_eigenpair_warm, pinv_symmetric, sym};
use crate::skeleton::{limb_selector, LimbSpec, Pose2D, Pose3D, NUM_JOINTS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LossNorm {
    L1,
    L2,
}

/// Loss norm × limb constraints × sparsity. Named like `L1WAWS`
/// (L1 loss, With Anthropometric constraints, With Sparsity).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VariantConfig {
    pub loss: LossNorm,
    pub anthropometric: bool,
    pub sparsity: bool,
}

impl VariantConfig {
    pub const FULL: VariantConfig = VariantConfig {
        loss: LossNorm::L1,
        anthropometric: true,
        sparsity: true,
    };

    pub const fn new(loss: LossNorm, anthropometric: bool, sparsity: bool) -> Self {
        Self {
            loss,
            anthropometric,
            sparsity,
        }
    }

    /// The seven baselines followed by the full method.
    pub fn all() -> [VariantConfig; 8] {
        use LossNorm::*;
        [
            Self::new(L2, false, true),
            Self::new(L2, false, false),
            Self::new(L2, true, false),
            Self::new(L2, true, true),
            Self::new(L1, false, false),
            Self::new(L1, false, true),
            Self::new(L1, true, false),
            Self::new(L1, true, true),
        ]
    }

    pub fn name(&self) -> String {
        format!(
            "{}{}{}",
            match self.loss {
                LossNorm::L1 => "L1",
                LossNorm::L2 => "L2",
            },
            if self.anthropometric { "WA" } else { "NA" },
            if self.sparsity { "WS" } else { "NS" },
        )
    }
}

impl fmt::Display for VariantConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for VariantConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let u = s.to_ascii_uppercase();
        VariantConfig::all()
            .into_iter()
            .find(|v| v.name() == u)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}`")))
    }
}

impl Serialize for VariantConfig {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for VariantConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How the multiplier shifts the matrix that gets projected in the P-step:
/// `Q̃ = Q + c·G/δ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiplierShift {
    /// `c = 2`.
    Doubled,
    /// `c = 1`, the usual scaled-form step.
    Scaled,
}

impl MultiplierShift {
    fn factor(self) -> f64 {
        match self {
            MultiplierShift::Doubled => 2.0,
            MultiplierShift::Scaled => 1.0,
        }
    }
}

/// Coordinates the inner SDP runs in. `Reduced` restricts α to the row space
/// of `B` (at most 36 dimensions), where the constraints and the data term
/// live; the orthogonal part of α has a closed-form minimizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpSpace {
    Full,
    Reduced,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdpOptions {
    pub delta0: f64,
    pub delta_growth: f64,
    pub delta_max: f64,
    /// Stop when `||Q - P||_F <= tol * max(||P||_F, 1)`.
    pub tol: f64,
    pub max_iter: usize,
    pub shift: MultiplierShift,
    pub space: SdpSpace,
    /// Refine the inner estimate with Newton steps on the KKT conditions of
    /// the constrained quadratic.
    pub polish: bool,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            delta0: 1.0,
            delta_growth: 1.1,
            delta_max: 1e8,
            tol: 1e-6,
            max_iter: 20,
            shift: MultiplierShift::Doubled,
            space: SdpSpace::Reduced,
            polish: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftOptions {
    pub eta0: f64,
    pub eta_growth: f64,
    pub eta_max: f64,
    /// Relative primal residual tolerance for the outer loop.
    pub tol: f64,
    pub max_iter: usize,
    pub sdp: SdpOptions,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self {
            eta0: 0.1,
            eta_growth: 1.1,
            eta_max: 1e8,
            tol: 1e-6,
            max_iter: 300,
            sdp: SdpOptions::default(),
        }
    }
}

/// Default sparsity weight, in normalized skeleton units.
pub const DEFAULT_THETA: f64 = 0.1;

/// Orthonormal coordinates for the row space of `B` and the limb
/// quadratics expressed in them.
struct ReducedSpace {
    /// k × r, orthonormal columns spanning the row space of `B`.
    v: DMatrix<f64>,
    mb: DMatrix<f64>,
    constraints: TraceConstraints,
}

pub struct LiftProblem<'a> {
    pub x: Pose2D,
    pub basis: &'a Basis,
    pub camera: Camera,
    pub limbs: Vec<LimbSpec>,
    pub theta: f64,
    pub variant: VariantConfig,
    x_vec: DVector<f64>,
    mb: DMatrix<f64>,
    m_mu: DVector<f64>,
    full_constraints: Option<TraceConstraints>,
    reduced: Option<ReducedSpace>,
    /// Right singular vectors (k × q) and squared singular values of `MB`.
    mb_v: DMatrix<f64>,
    mb_s2: DVector<f64>,
}

impl<'a> LiftProblem<'a> {
    pub fn new(
        x: Pose2D,
        basis: &'a Basis,
        camera: Camera,
        limbs: Vec<LimbSpec>,
        theta: f64,
        variant: VariantConfig,
    ) -> Result<Self> {
        Self::with_space(x, basis, camera, limbs, theta, variant, SdpSpace::Reduced)
    }

    pub fn with_space(
        x: Pose2D,
        basis: &'a Basis,
        camera: Camera,
        limbs: Vec<LimbSpec>,
        theta: f64,
        variant: VariantConfig,
        space: SdpSpace,
    ) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::Config(format!("θ must be nonnegative, got {theta}")));
        }
        if basis.matrix.nrows() != 3 * NUM_JOINTS {
            return Err(Error::Dimension("basis rows do not match 3n".into()));
        }
        if !camera.is_valid() {
            return Err(Error::Config("camera rows must be finite and nonzero".into()));
        }
        let mb = camera.project_matrix(&basis.matrix);
        let m_mu = camera.project_vector(&basis.mean.to_dvector());
        let svd = mb.clone().svd(false, true);
        let vt = svd.v_t.expect("right singular vectors requested");
        let mb_v = vt.transpose();
        let mb_s2 = svd.singular_values.map(|s| s * s);
        let mut problem = Self {
            x_vec: x.to_dvector(),
            x,
            basis,
            camera,
            limbs,
            theta,
            variant,
            mb,
            m_mu,
            full_constraints: None,
            reduced: None,
            mb_v,
            mb_s2,
        };
        if variant.anthropometric {
            if problem.limbs.is_empty() {
                return Err(Error::Config("anthropometric variant needs limb constraints".into()));
            }
            match space {
                SdpSpace::Full => {
                    let omegas = build_limb_quadratics(basis, &problem.limbs)?;
                    problem.full_constraints = Some(TraceConstraints::normalized(omegas));
                }
                SdpSpace::Reduced => problem.reduced = Some(problem.reduce()?),
            }
        }
        Ok(problem)
    }

    fn reduce(&self) -> Result<ReducedSpace> {
        let b = &self.basis.matrix;
        let svd = b.clone().svd(false, true);
        let vt = svd.v_t.expect("right singular vectors requested");
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > 1e-10 * smax)
            .collect();
        let mut v = DMatrix::zeros(b.ncols(), keep.len());
        for (c, &i) in keep.iter().enumerate() {
            v.set_column(c, &vt.row(i).transpose());
        }
        let br = b * &v;
        let mb = &self.mb * &v;
        let omegas = limb_quadratics(&br, &self.basis.mean.to_dvector(), &self.limbs)?;
        Ok(ReducedSpace {
            v,
            mb,
            constraints: TraceConstraints::normalized(omegas),
        })
    }

    pub fn k(&self) -> usize {
        self.basis.k()
    }

    /// `M(Bα + μ)`.
    pub fn projected(&self, alpha: &DVector<f64>) -> DVector<f64> {
        &self.mb * alpha + &self.m_mu
    }

    pub fn x_vector(&self) -> &DVector<f64> {
        &self.x_vec
    }

    pub fn projected_basis(&self) -> &DMatrix<f64> {
        &self.mb
    }

    fn effective_theta(&self) -> f64 {
        if self.variant.sparsity {
            self.theta
        } else {
            0.0
        }
    }

    /// Coefficient of the isotropic term `c||α||²` in the α quadratic.
    fn identity_weight(&self, state: &PoseAdmState) -> f64 {
        match self.variant.loss {
            LossNorm::L1 => 1.0,
            LossNorm::L2 => 0.5 * state.eta,
        }
    }

    /// α-terms of the augmented Lagrangian as `αᵀHα + gᵀα` (up to a
    /// positive factor and an additive constant).
    pub fn alpha_quadratic(&self, state: &PoseAdmState) -> (DMatrix<f64>, DVector<f64>) {
        let c = self.identity_weight(state);
        let k = self.k();
        let h = self.mb.tr_mul(&self.mb) + DMatrix::identity(k, k) * c;
        let g = self.alpha_linear(state);
        (h, g)
    }

    fn alpha_linear(&self, state: &PoseAdmState) -> DVector<f64> {
        match self.variant.loss {
            LossNorm::L1 => {
                let s = &state.gamma - &self.x_vec + &self.m_mu + &state.lambda1 / state.eta;
                (self.mb.tr_mul(&s) - &state.beta + &state.lambda2 / state.eta) * 2.0
            }
            LossNorm::L2 => {
                let t = &self.x_vec - &self.m_mu;
                self.mb.tr_mul(&t) * -2.0 + &state.lambda2 - &state.beta * state.eta
            }
        }
    }

    /// Per-limb `||C_i(Bα+μ)||² - L_i`.
    pub fn limb_residuals(&self, alpha: &DVector<f64>) -> Vec<f64> {
        let y = self.basis.reconstruct(alpha);
        limb_residuals(&y, &self.limbs)
    }
}

pub fn limb_residuals(y: &DVector<f64>, limbs: &[LimbSpec]) -> Vec<f64> {
    limbs
        .iter()
        .map(|l| {
            let d: f64 = (0..3)
                .map(|r| (y[3 * l.first + r] - y[3 * l.second + r]).powi(2))
                .sum();
            d - l.squared_length
        })
        .collect()
}

/// `Ω_i` for the basis `[B | μ]`:
/// `[[BᵀCᵀCB, BᵀCᵀCμ], [μᵀCᵀCB, μᵀCᵀCμ - L]]`, so that
/// `zᵀΩz = ||C(Bα+μ)||² - L` for `z = [α; 1]`.
fn limb_quadratics(b: &DMatrix<f64>, mu: &DVector<f64>, limbs: &[LimbSpec]) -> Result<Vec<DMatrix<f64>>> {
    let k = b.ncols();
    let mut aug = DMatrix::zeros(b.nrows(), k + 1);
    aug.view_mut((0, 0), (b.nrows(), k)).copy_from(b);
    aug.set_column(k, mu);
    limbs
        .iter()
        .map(|l| {
            let c = limb_selector(l, b.nrows() / 3)?;
            let d = c * &aug;
            let mut omega = d.tr_mul(&d);
            omega[(k, k)] -= l.squared_length;
            Ok(omega)
        })
        .collect()
}

pub fn build_limb_quadratics(basis: &Basis, limbs: &[LimbSpec]) -> Result<Vec<DMatrix<f64>>> {
    limb_quadratics(&basis.matrix, &basis.mean.to_dvector(), limbs)
}

/// Assembles `[[H, 0], [gᵀ, 0]]`, the layout in which `zᵀWz = αᵀHα + gᵀα`.
fn assemble_w(h: &DMatrix<f64>, g: &DVector<f64>) -> DMatrix<f64> {
    let k = h.nrows();
    let mut w = DMatrix::zeros(k + 1, k + 1);
    w.view_mut((0, 0), (k, k)).copy_from(h);
    for i in 0..k {
        w[(k, i)] = g[i];
    }
    w
}

/// The (k+1) × (k+1) matrix `W` of the α-step; only its symmetric part
/// matters for `tr(WQ)`.
pub fn build_w(problem: &LiftProblem, state: &PoseAdmState) -> DMatrix<f64> {
    let (h, g) = problem.alpha_quadratic(state);
    assemble_w(&h, &g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoseAdmState {
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
    pub gamma: DVector<f64>,
    pub lambda1: DVector<f64>,
    pub lambda2: DVector<f64>,
    pub eta: f64,
}

impl PoseAdmState {
    pub fn new(problem: &LiftProblem, alpha: DVector<f64>, eta: f64) -> Self {
        let gamma = problem.x_vector() - problem.projected(&alpha);
        Self {
            beta: alpha.clone(),
            gamma,
            lambda1: DVector::zeros(problem.x_vector().len()),
            lambda2: DVector::zeros(alpha.len()),
            alpha,
            eta,
        }
    }
}

/// `argmin_γ ||γ||₁ + η/2 ||γ - (x - M(Bα+μ) - λ1/η)||²`.
pub fn update_gamma(state: &PoseAdmState, problem: &LiftProblem) -> DVector<f64> {
    let v = problem.x_vector() - problem.projected(&state.alpha) - &state.lambda1 / state.eta;
    soft_threshold(&v, 1.0 / state.eta)
}

/// `argmin_β θ||β||₁ + η/2 ||β - (α + λ2/η)||²`.
pub fn update_beta(state: &PoseAdmState, problem: &LiftProblem) -> DVector<f64> {
    let v = &state.alpha + &state.lambda2 / state.eta;
    soft_threshold(&v, problem.effective_theta() / state.eta)
}

/// Linear trace constraints `tr(A_j Q) = c_j` with the Gram pseudo-inverse
/// cached for repeated Q-steps.
#[derive(Clone, Debug)]
pub struct TraceConstraints {
    mats: Vec<DMatrix<f64>>,
    rhs: Vec<f64>,
    gram_pinv: DMatrix<f64>,
    degenerate: bool,
    /// Leading matrices that are limb quadratics `Ω_i` (right-hand side 0).
    limb_count: usize,
}

impl TraceConstraints {
    pub fn new(mats: Vec<DMatrix<f64>>, rhs: Vec<f64>) -> Self {
        assert_eq!(mats.len(), rhs.len());
        let m = mats.len();
        let gram = DMatrix::from_fn(m, m, |i, j| frob_dot(&mats[i], &mats[j]));
        let (gram_pinv, degenerate) = pinv_symmetric(&gram, 1e-12);
        Self {
            mats,
            rhs,
            gram_pinv,
            degenerate,
            limb_count: 0,
        }
    }

    /// `tr(Ω_i Q) = 0` for every `Ω_i`.
    pub fn homogeneous(omegas: Vec<DMatrix<f64>>) -> Self {
        let rhs = vec![0.0; omegas.len()];
        let count = omegas.len();
        Self {
            limb_count: count,
            ..Self::new(omegas, rhs)
        }
    }

    /// Homogeneous constraints plus `Q_{k+1,k+1} = 1`, which pins the scale of
    /// `Q = zzᵀ` to `z = [α; 1]`.
    pub fn normalized(omegas: Vec<DMatrix<f64>>) -> Self {
        let n = omegas.first().map_or(0, |o| o.nrows());
        let mut corner = DMatrix::zeros(n, n);
        corner[(n - 1, n - 1)] = 1.0;
        let count = omegas.len();
        let mut rhs = vec![0.0; count];
        let mut mats = omegas;
        mats.push(corner);
        rhs.push(1.0);
        Self {
            limb_count: count,
            ..Self::new(mats, rhs)
        }
    }

    /// The limb quadratics among the constraints.
    pub fn limb_quadratics(&self) -> &[DMatrix<f64>] {
        &self.mats[..self.limb_count]
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// True when the constraint matrices are linearly dependent.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn residuals(&self, q: &DMatrix<f64>) -> Vec<f64> {
        self.mats
            .iter()
            .zip(&self.rhs)
            .map(|(a, c)| frob_dot(a, q) - c)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct QSolution {
    pub q: DMatrix<f64>,
    /// Multipliers of the trace constraints.
    pub nu: DVector<f64>,
    pub degenerate: bool,
}

/// Closed-form minimizer of
/// `tr(WQ) + tr(Gᵀ(Q-P)) + δ/2 ||Q-P||²_F` subject to the trace constraints.
///
/// Stationarity gives `Q = Q0 - Σ ν_j A_j / δ` with
/// `Q0 = P - (sym(W) + G)/δ`; feasibility makes `ν` the solution of the
/// Gram system `Σ_j tr(A_i A_j)/δ ν_j = tr(A_i Q0) - c_i`.
pub fn solve_q_kkt(
    w: &DMatrix<f64>,
    constraints: &TraceConstraints,
    p: &DMatrix<f64>,
    g: &DMatrix<f64>,
    delta: f64,
) -> QSolution {
    let ws = sym(w);
    q_step(&ws, constraints, p, g, delta)
}

fn q_step(
    w_sym: &DMatrix<f64>,
    constraints: &TraceConstraints,
    p: &DMatrix<f64>,
    g: &DMatrix<f64>,
    delta: f64,
) -> QSolution {
    let mut q = p - (w_sym + g) / delta;
    let m = constraints.len();
    if m == 0 {
        return QSolution {
            q,
            nu: DVector::zeros(0),
            degenerate: false,
        };
    }
    let b = DVector::from_iterator(m, constraints.residuals(&q));
    // ν/δ = Gram⁺ b
    let scaled = &constraints.gram_pinv * b;
    for (a, s) in constraints.mats.iter().zip(scaled.iter()) {
        q -= a * *s;
    }
    QSolution {
        q,
        nu: scaled * delta,
        degenerate: constraints.degenerate,
    }
}

/// Nearest (Frobenius) PSD matrix of rank at most one:
/// `max(ζ₁, 0) ν₁ν₁ᵀ` for the leading eigenpair of `S`.
pub fn project_rank1_psd(s: &DMatrix<f64>) -> DMatrix<f64> {
    let (zeta, nu) = leading_eigenpair(&sym(s));
    rank1(zeta, &nu)
}

fn rank1(zeta: f64, nu: &DVector<f64>) -> DMatrix<f64> {
    if zeta <= 0.0 {
        DMatrix::zeros(nu.len(), nu.len())
    } else {
        nu * nu.transpose() * zeta
    }
}

#[derive(Clone, Debug)]
pub struct SdpState {
    pub q: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub delta: f64,
}

#[derive(Clone, Debug)]
pub struct SdpOutcome {
    /// Recovered α (the leading eigenvector of P scaled to a unit last entry).
    pub alpha: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The last eigenvector entry was too small to rescale; `alpha` is the
    /// warm start.
    pub degenerate: bool,
    pub state: SdpState,
}

/// Inner ADM for `min tr(WQ)` over `Q = zzᵀ`, `z = [α; 1]`, subject to the
/// trace constraints, with `W = [[H, 0], [gᵀ, 0]]`.
pub fn solve_rank1_sdp(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    constraints: &TraceConstraints,
    warm: &DVector<f64>,
    opts: &SdpOptions,
) -> SdpOutcome {
    let k = h.nrows();
    let n = k + 1;
    let mut w_sym = DMatrix::zeros(n, n);
    w_sym.view_mut((0, 0), (k, k)).copy_from(&sym(h));
    for i in 0..k {
        w_sym[(k, i)] = 0.5 * g[i];
        w_sym[(i, k)] = 0.5 * g[i];
    }
    let mut z = DVector::zeros(n);
    z.rows_mut(0, k).copy_from(warm);
    z[k] = 1.0;
    let mut state = SdpState {
        q: &z * z.transpose(),
        p: &z * z.transpose(),
        g: DMatrix::zeros(n, n),
        delta: opts.delta0,
    };
    let mut nu = z.normalize();
    let mut zeta = z.norm_squared();
    let shift = opts.shift.factor();
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=opts.max_iter {
        iterations = it;
        let sol = q_step(&w_sym, constraints, &state.p, &state.g, state.delta);
        state.q = sol.q;
        let mut q_tilde = &state.q + &state.g * (shift / state.delta);
        q_tilde = sym(&q_tilde);
        let (z1, v1) = leading_eigenpair_warm(&q_tilde, Some(&nu));
        zeta = z1;
        nu = v1;
        state.p = rank1(zeta, &nu);
        let gap = &state.q - &state.p;
        state.g += &gap * state.delta;
        state.delta = (state.delta * opts.delta_growth).min(opts.delta_max);
        if gap.norm() <= opts.tol * state.p.norm().max(1.0) {
            converged = true;
            break;
        }
    }
    let last = nu[k];
    if zeta <= 0.0 || last.abs() < 1e-6 {
        return SdpOutcome {
            alpha: warm.clone(),
            iterations,
            converged,
            degenerate: true,
            state,
        };
    }
    let sign = last.signum();
    let alpha = DVector::from_fn(k, |i, _| sign * nu[i] / (sign * last));
    SdpOutcome {
        alpha,
        iterations,
        converged,
        degenerate: false,
        state,
    }
}

/// Newton iterations on the KKT system of
/// `min uᵀHu + gᵀu  s.t.  [u;1]ᵀΩ_i[u;1] = 0`, started from `u0`.
/// Returns the refined point if the constraint residuals fall below `tol`
/// within `max_iter` steps.
pub fn polish_kkt(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    omegas: &[DMatrix<f64>],
    u0: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Option<DVector<f64>> {
    let k = h.nrows();
    let m = omegas.len();
    if m == 0 {
        return None;
    }
    let h2 = sym(h) * 2.0;
    let parts: Vec<(DMatrix<f64>, DVector<f64>, f64)> = omegas
        .iter()
        .map(|o| {
            (
                o.view((0, 0), (k, k)).into_owned(),
                o.view((0, k), (k, 1)).column(0).into_owned(),
                o[(k, k)],
            )
        })
        .collect();
    let eval = |u: &DVector<f64>| {
        let mut jac = DMatrix::zeros(m, k);
        let mut res = DVector::zeros(m);
        for (i, (a, b, c)) in parts.iter().enumerate() {
            let au = a * u;
            res[i] = u.dot(&au) + 2.0 * b.dot(u) + c;
            jac.set_row(i, &((au + b) * 2.0).transpose());
        }
        (res, jac)
    };
    let mut u = u0.clone();
    let (_, jac) = eval(&u);
    let grad_f = &h2 * &u + g;
    let mut lambda = (&jac * jac.transpose())
        .pseudo_inverse(1e-12)
        .ok()?
        * (&jac * &grad_f)
        * -1.0;
    for _ in 0..max_iter {
        let (res, jac) = eval(&u);
        let grad_f = &h2 * &u + g;
        let lag_grad = &grad_f + jac.tr_mul(&lambda);
        if res.amax() <= tol && lag_grad.norm() <= 1e-9 * grad_f.norm().max(1.0) {
            return Some(u);
        }
        let mut kmat = DMatrix::zeros(k + m, k + m);
        let mut hess = h2.clone();
        for ((a, _, _), l) in parts.iter().zip(lambda.iter()) {
            hess += a * (2.0 * l);
        }
        kmat.view_mut((0, 0), (k, k)).copy_from(&hess);
        kmat.view_mut((0, k), (k, m)).copy_from(&jac.transpose());
        kmat.view_mut((k, 0), (m, k)).copy_from(&jac);
        let mut rhs = DVector::zeros(k + m);
        rhs.rows_mut(0, k).copy_from(&(-grad_f));
        rhs.rows_mut(k, m).copy_from(&(-res));
        let sol = kmat.lu().solve(&rhs)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        u += sol.rows(0, k);
        lambda = sol.rows(k, m).into_owned();
    }
    let (res, _) = eval(&u);
    (res.amax() <= tol).then_some(u)
}

#[derive(Clone, Debug)]
pub struct AlphaUpdate {
    pub alpha: DVector<f64>,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    pub degenerate: bool,
    /// The Newton refinement converged and replaced the SDP estimate.
    pub polished: bool,
}

/// Refines the inner estimate and, as a fallback, the warm start; keeps the
/// feasible candidate with the lower objective.
fn polish(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    cons: &TraceConstraints,
    out: &SdpOutcome,
    warm: &DVector<f64>,
    opts: &SdpOptions,
) -> Option<DVector<f64>> {
    if !opts.polish {
        return None;
    }
    let objective = |u: &DVector<f64>| u.dot(&(h * u)) + g.dot(u);
    let omegas = cons.limb_quadratics();
    let from_sdp = (!out.degenerate)
        .then(|| polish_kkt(h, g, omegas, &out.alpha, 1e-10, 20))
        .flatten();
    let from_warm = polish_kkt(h, g, omegas, warm, 1e-10, 20);
    match (from_sdp, from_warm) {
        (Some(a), Some(b)) => Some(if objective(&b) < objective(&a) { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// α-step under the limb constraints.
pub fn update_alpha(state: &PoseAdmState, problem: &LiftProblem, opts: &SdpOptions) -> Result<AlphaUpdate> {
    if !problem.variant.anthropometric {
        return Err(Error::Config(
            "update_alpha needs the anthropometric variant; use solve_alpha_unconstrained".into(),
        ));
    }
    if let Some(cons) = &problem.full_constraints {
        let (h, g) = problem.alpha_quadratic(state);
        let out = solve_rank1_sdp(&h, &g, cons, &state.alpha, opts);
        let polished = polish(&h, &g, cons, &out, &state.alpha, opts);
        return Ok(AlphaUpdate {
            alpha: polished.clone().unwrap_or(out.alpha),
            inner_iterations: out.iterations,
            inner_converged: out.converged,
            degenerate: out.degenerate && polished.is_none(),
            polished: polished.is_some(),
        });
    }
    let red = problem
        .reduced
        .as_ref()
        .expect("anthropometric problems carry constraint data");
    let g = problem.alpha_linear(state);
    let c = problem.identity_weight(state);
    let r = red.v.ncols();
    let hr = red.mb.tr_mul(&red.mb) + DMatrix::identity(r, r) * c;
    let gr = red.v.tr_mul(&g);
    let warm = red.v.tr_mul(&state.alpha);
    let out = solve_rank1_sdp(&hr, &gr, &red.constraints, &warm, opts);
    let polished = polish(&hr, &gr, &red.constraints, &out, &warm, opts);
    let degenerate = out.degenerate && polished.is_none();
    // Component outside the row space of B: argmin c||w||² + gᵀw.
    let g_perp = &g - &red.v * &gr;
    let alpha = if degenerate {
        state.alpha.clone()
    } else {
        &red.v * polished.as_ref().unwrap_or(&out.alpha) - g_perp / (2.0 * c)
    };
    Ok(AlphaUpdate {
        alpha,
        inner_iterations: out.iterations,
        inner_converged: out.converged,
        degenerate,
        polished: polished.is_some(),
    })
}

/// α-step without limb constraints: `min αᵀHα + gᵀα`, i.e. `2Hα = -g`.
/// `H = (MB)ᵀMB + cI` with `c > 0`, so the solve goes through the SVD of
/// `MB` and never needs regularization.
pub fn solve_alpha_unconstrained(state: &PoseAdmState, problem: &LiftProblem) -> DVector<f64> {
    let g = problem.alpha_linear(state);
    let c = problem.identity_weight(state);
    let rhs = g * -0.5;
    let proj = problem.mb_v.tr_mul(&rhs);
    let inside = &problem.mb_v * &proj;
    let scaled = DVector::from_fn(proj.len(), |i, _| proj[i] / (problem.mb_s2[i] + c));
    &problem.mb_v * scaled + (rhs - inside) / c
}

#[derive(Clone, Debug)]
pub struct LiftResult {
    pub coefficients: Coefficients,
    /// `Bα + μ`.
    pub pose: Pose3D,
    pub residual_l1: f64,
    pub residual_l2: f64,
    /// `|‖C_i y‖² - L_i|` per limb.
    pub limb_violation: Vec<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
    /// α-steps that fell back to the previous iterate.
    pub degenerate_steps: usize,
}

impl LiftResult {
    pub fn max_limb_violation(&self) -> f64 {
        self.limb_violation.iter().copied().fold(0.0, f64::max)
    }
}

fn finish(problem: &LiftProblem, alpha: DVector<f64>) -> Result<LiftResult> {
    let y = problem.basis.reconstruct(&alpha);
    let resid = problem.x_vector() - problem.projected(&alpha);
    let limb_violation = limb_residuals(&y, &problem.limbs)
        .into_iter()
        .map(f64::abs)
        .collect();
    Ok(LiftResult {
        pose: Pose3D::from_dvector(&y)?,
        coefficients: Coefficients(alpha),
        residual_l1: resid.lp_norm(1),
        residual_l2: resid.norm(),
        limb_violation,
        outer_iterations: 0,
        inner_iterations: 0,
        converged: true,
        degenerate_steps: 0,
    })
}

/// Minimum-norm least squares for `min ||x - M(Bα+μ)||²`.
fn least_squares(problem: &LiftProblem) -> Result<LiftResult> {
    let target = problem.x_vector() - &problem.m_mu;
    let svd = problem.mb.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let alpha = svd
        .solve(&target, eps)
        .map_err(|e| Error::SingularGeometry(e.to_string()))?;
    let mut res = finish(problem, alpha)?;
    res.outer_iterations = 1;
    Ok(res)
}

pub fn lift(problem: &LiftProblem, opts: &LiftOptions) -> Result<LiftResult> {
    lift_from(problem, opts, None)
}

/// Runs the outer ADM from `init` (zero coefficients, i.e. the mean pose,
/// when `None`).
pub fn lift_from(problem: &LiftProblem, opts: &LiftOptions, init: Option<&DVector<f64>>) -> Result<LiftResult> {
    let v = problem.variant;
    if v.loss == LossNorm::L2 && !v.anthropometric && !v.sparsity {
        return least_squares(problem);
    }
    let k = problem.k();
    let alpha0 = match init {
        Some(a) if a.len() == k => a.clone(),
        Some(a) => {
            return Err(Error::Dimension(format!(
                "initial coefficients have length {}, basis has {k}",
                a.len()
            )))
        }
        None => DVector::zeros(k),
    };
    let mut state = PoseAdmState::new(problem, alpha0, opts.eta0);
    let x_scale = problem.x_vector().norm().max(1.0);
    let mut inner_total = 0;
    let mut degenerate_steps = 0;
    let mut converged = false;
    let mut outer = 0;
    for it in 1..=opts.max_iter {
        outer = it;
        if v.loss == LossNorm::L1 {
            state.gamma = update_gamma(&state, problem);
        }
        state.beta = update_beta(&state, problem);
        if v.anthropometric {
            let upd = update_alpha(&state, problem, &opts.sdp)?;
            inner_total += upd.inner_iterations;
            if upd.degenerate {
                degenerate_steps += 1;
            }
            state.alpha = upd.alpha;
        } else {
            state.alpha = solve_alpha_unconstrained(&state, problem);
        }

        let r2 = &state.alpha - &state.beta;
        let r2_rel = r2.norm() / state.alpha.norm().max(1.0);
        let r1_rel = if v.loss == LossNorm::L1 {
            let r1 = &state.gamma - problem.x_vector() + problem.projected(&state.alpha);
            let rel = r1.norm() / x_scale;
            state.lambda1.axpy(state.eta, &r1, 1.0);
            rel
        } else {
            0.0
        };
        state.lambda2.axpy(state.eta, &r2, 1.0);
        state.eta = (state.eta * opts.eta_growth).min(opts.eta_max);
        if r1_rel <= opts.tol && r2_rel <= opts.tol {
            converged = true;
            break;
        }
    }
    let mut res = finish(problem, state.alpha)?;
    res.outer_iterations = outer;
    res.inner_iterations = inner_total;
    res.converged = converged;
    res.degenerate_steps = degenerate_steps;
    Ok(res)
}

/// Augmented Lagrangian of the split problem (L1 loss), used by tests and
/// diagnostics.
pub fn augmented_lagrangian(problem: &LiftProblem, state: &PoseAdmState) -> f64 {
    let theta = problem.effective_theta();
    let r1 = &state.gamma - problem.x_vector() + problem.projected(&state.alpha);
    let r2 = &state.alpha - &state.beta;
    state.gamma.lp_norm(1)
        + theta * state.beta.lp_norm(1)
        + state.lambda1.dot(&r1)
        + state.lambda2.dot(&r2)
        + 0.5 * state.eta * (r1.norm_squared() + r2.norm_squared())
}
