//! Numerical checks of the min-max / regularization equivalence.
//!
//! For an uncertainty set `U` of radius `λ` the identity under test is
//! `max_{Δ∈U} g(y − (X̃+Δ)β) = g(y − X̃β) + λ·h(β)`, where `g` is the residual
//! norm and `h` the regularizer norm. Induced sets use
//! `‖Δ‖_(h,g) = max_x g(Δx)/h(x)`; Frobenius sets `F_p` pair `g = ℓp` with
//! `h = ℓp*`.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::adaptive::coefficients;
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::panel::ForecastPanel;

/// Absolute slack allowed on identities and set membership.
pub const TOLERANCE: f64 = 1e-9;

/// Largest dimension for which extreme points are enumerated.
const MAX_ENUMERATION_DIM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];

    pub fn eval(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Linf => v.iter().fold(0.0, |a, x| a.max(x.abs())),
        }
    }

    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::Linf,
            Norm::L2 => Norm::L2,
            Norm::Linf => Norm::L1,
        }
    }

    /// A `v` with `dual(v) = 1` and `βᵀv = self(β)`. Zero for `β = 0`.
    pub fn dual_maximizer(self, beta: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; beta.len()];
        let size = self.eval(beta);
        if size == 0.0 {
            return v;
        }
        match self {
            Norm::L2 => v.iter_mut().zip(beta).for_each(|(v, b)| *v = b / size),
            Norm::L1 => v.iter_mut().zip(beta).for_each(|(v, &b)| *v = sign(b)),
            Norm::Linf => {
                // first coordinate of largest magnitude
                let j = beta.iter().position(|b| b.abs() == size).unwrap_or(0);
                v[j] = sign(beta[j]);
            }
        }
        v
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" | "1" => Ok(Norm::L1),
            "l2" | "2" => Ok(Norm::L2),
            "linf" | "inf" | "l_inf" => Ok(Norm::Linf),
            other => Err(Error::InvalidParameter(format!("unknown norm `{other}` (use l1, l2 or linf)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SetKind {
    /// `‖Δ‖_(h,g) ≤ λ` with `h` on the input and `g` on the output.
    Induced { h: Norm, g: Norm },
    Frobenius { p: Norm },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySet {
    pub kind: SetKind,
    pub radius: f64,
}

impl UncertaintySet {
    pub fn induced(h: Norm, g: Norm, radius: f64) -> Self {
        Self { kind: SetKind::Induced { h, g }, radius }
    }

    pub fn frobenius(p: Norm, radius: f64) -> Self {
        Self { kind: SetKind::Frobenius { p }, radius }
    }

    /// Norm on the residual.
    pub fn residual_norm(&self) -> Norm {
        match self.kind {
            SetKind::Induced { g, .. } => g,
            SetKind::Frobenius { p } => p,
        }
    }

    /// Norm on the coefficients in the equivalent regularized problem.
    pub fn regularizer_norm(&self) -> Norm {
        match self.kind {
            SetKind::Induced { h, .. } => h,
            SetKind::Frobenius { p } => p.dual(),
        }
    }

    /// The set's defining norm of `delta`, with an exactness flag.
    pub fn size_of(&self, delta: &Mat<f64>) -> NormValue {
        match self.kind {
            SetKind::Induced { h, g } => induced_norm(delta, h, g),
            SetKind::Frobenius { p } => NormValue { value: frobenius_norm(delta, p), exact: true },
        }
    }

    /// An upper bound on the set's defining norm, valid for every pair.
    pub fn size_upper_bound(&self, delta: &Mat<f64>) -> f64 {
        match self.kind {
            SetKind::Induced { h, g } => induced_norm_upper_bound(delta, h, g),
            SetKind::Frobenius { p } => frobenius_norm(delta, p),
        }
    }

    /// A cheap size that never underestimates: the closed form when there
    /// is one, otherwise the upper bound. Rescaling by it lands in the set.
    pub fn feasibility_size(&self, delta: &Mat<f64>) -> f64 {
        match self.kind {
            SetKind::Induced { h, g } => {
                closed_form_induced_norm(delta, h, g).unwrap_or_else(|| induced_norm_upper_bound(delta, h, g))
            }
            SetKind::Frobenius { p } => frobenius_norm(delta, p),
        }
    }

    /// Membership up to `TOLERANCE`; conservative when the norm is not exact.
    pub fn contains(&self, delta: &Mat<f64>) -> bool {
        self.feasibility_size(delta) <= self.radius * (1.0 + TOLERANCE) + TOLERANCE
    }

    pub fn label(&self) -> String {
        match self.kind {
            SetKind::Induced { h, g } => format!("induced(residual={g},regularizer={h})"),
            SetKind::Frobenius { p } => format!("frobenius({p})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    /// `false` when `value` is only a lower bound.
    pub exact: bool,
}

fn rows_of(m: &Mat<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn cols_of(m: &Mat<f64>) -> Vec<Vec<f64>> {
    (0..m.ncols()).map(|j| (0..m.nrows()).map(|i| m[(i, j)]).collect()).collect()
}

fn apply(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
}

fn apply_t(m: &Mat<f64>, s: &[f64]) -> Vec<f64> {
    (0..m.ncols()).map(|j| (0..m.nrows()).map(|i| m[(i, j)] * s[i]).sum()).collect()
}

fn sign_vectors(n: usize) -> impl Iterator<Item = Vec<f64>> {
    // fix the first sign: g(Δx) = g(−Δx)
    let count = if n == 0 { 0u64 } else { 1u64 << (n - 1) };
    (0..count).map(move |mask| (0..n).map(|j| if j > 0 && mask >> (j - 1) & 1 == 1 { -1.0 } else { 1.0 }).collect())
}

/// `‖Δ‖_(h,g) = max_x g(Δx)/h(x)`.
///
/// Exact for `h = ℓ1` (largest column), `g = ℓ∞` (largest dual row norm),
/// `(ℓ2, ℓ2)` (spectral norm), and for the remaining pairs whenever the
/// relevant vertex set is small enough to enumerate. Otherwise a sampled
/// lower bound is returned and flagged.
pub fn induced_norm(delta: &Mat<f64>, h: Norm, g: Norm) -> NormValue {
    let exact = |value| NormValue { value, exact: true };
    if let Some(v) = closed_form_induced_norm(delta, h, g) {
        return exact(v);
    }
    match (h, g) {
        // max over the ℓ∞ ball is attained at a sign vector
        (Norm::Linf, _) if delta.ncols() <= MAX_ENUMERATION_DIM => {
            exact(sign_vectors(delta.ncols()).map(|x| g.eval(&apply(delta, &x))).fold(0.0, f64::max))
        }
        // ‖Δ‖_(2,1) = max_{s ∈ {±1}^T} ‖Δᵀs‖₂
        (Norm::L2, Norm::L1) if delta.nrows() <= MAX_ENUMERATION_DIM => {
            exact(sign_vectors(delta.nrows()).map(|s| Norm::L2.eval(&apply_t(delta, &s))).fold(0.0, f64::max))
        }
        _ => NormValue { value: sampled_lower_bound(delta, h, g, 4096, 0), exact: false },
    }
}

/// `h = ℓ1`: largest column; `g = ℓ∞`: largest dual row norm; `(ℓ2, ℓ2)`:
/// spectral norm.
pub fn closed_form_induced_norm(delta: &Mat<f64>, h: Norm, g: Norm) -> Option<f64> {
    if delta.nrows() == 0 || delta.ncols() == 0 {
        return Some(0.0);
    }
    match (h, g) {
        (Norm::L1, _) => Some(cols_of(delta).iter().map(|c| g.eval(c)).fold(0.0, f64::max)),
        (_, Norm::Linf) => Some(rows_of(delta).iter().map(|r| h.dual().eval(r)).fold(0.0, f64::max)),
        (Norm::L2, Norm::L2) => Some(spectral_norm(delta)),
        _ => None,
    }
}

fn sampled_lower_bound(delta: &Mat<f64>, h: Norm, g: Norm, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = cols_of(delta).iter().map(|c| g.eval(c)).fold(0.0, f64::max);
    for _ in 0..samples {
        let x: Vec<f64> = (0..delta.ncols()).map(|_| rng.sample(StandardNormal)).collect();
        let hx = h.eval(&x);
        if hx > 0.0 {
            best = best.max(g.eval(&apply(delta, &x)) / hx);
        }
    }
    best
}

/// `g((h*(row_i))_i)`, an upper bound on `‖Δ‖_(h,g)` for monotone `g`.
pub fn induced_norm_upper_bound(delta: &Mat<f64>, h: Norm, g: Norm) -> f64 {
    let dual_rows: Vec<f64> = rows_of(delta).iter().map(|r| h.dual().eval(r)).collect();
    g.eval(&dual_rows)
}

/// Entrywise `ℓp` norm.
pub fn frobenius_norm(delta: &Mat<f64>, p: Norm) -> f64 {
    let entries: Vec<f64> = rows_of(delta).concat();
    p.eval(&entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCasePerturbation {
    /// Row-major `T × n`.
    pub delta: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    /// `g(z + Δ̂β)`.
    pub achieved: f64,
    /// `g(z) + λh(β)`.
    pub bound: f64,
    /// Dual maximizer `v` with `βᵀv = h(β)`.
    pub v: Vec<f64>,
    /// Scale `c` in `Δ̂ = c·u·vᵀ`.
    pub scale: f64,
}

impl WorstCasePerturbation {
    pub fn matrix(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.delta[i * self.cols + j])
    }
}

/// The rank-one perturbation from the proof of the equivalence lemma:
/// `Δ̂ = (λ/g(z))·z·vᵀ`, or `λ·u·vᵀ` with `g(u) = 1` when `g(z) = 0`.
pub fn worst_case_delta(z: &[f64], beta: &[f64], set: &UncertaintySet) -> Result<WorstCasePerturbation> {
    if z.is_empty() || beta.is_empty() {
        return Err(Error::InvalidParameter("empty residual or coefficient vector".into()));
    }
    if !(set.radius >= 0.0 && set.radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be finite and >= 0, got {}", set.radius)));
    }
    let (g, h) = (set.residual_norm(), set.regularizer_norm());
    let lambda = set.radius;
    let v = h.dual_maximizer(beta);
    let gz = g.eval(z);
    let (u, scale): (Vec<f64>, f64) = if gz > 0.0 {
        (z.to_vec(), lambda / gz)
    } else {
        let mut u = vec![0.0; z.len()];
        u[0] = 1.0;
        (u, lambda)
    };
    let (rows, cols) = (z.len(), beta.len());
    let mut delta = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            delta[i * cols + j] = scale * u[i] * v[j];
        }
    }
    let vb: f64 = v.iter().zip(beta).map(|(a, b)| a * b).sum();
    let pushed: Vec<f64> = z.iter().zip(&u).map(|(zi, ui)| zi + scale * ui * vb).collect();
    Ok(WorstCasePerturbation {
        delta,
        rows,
        cols,
        achieved: g.eval(&pushed),
        bound: gz + lambda * h.eval(beta),
        v,
        scale,
    })
}

/// A regression `y ≈ X̃β` with `X̃` block diagonal (`T × T·m`).
#[derive(Debug, Clone, PartialEq)]
pub struct RobustInstance {
    pub x_tilde: Mat<f64>,
    pub y: Vec<f64>,
    pub beta: Vec<f64>,
}

impl RobustInstance {
    /// Stacks `β_t = β0 + V0 Z_t` over the rows of `panel` with `X̃`
    /// holding `X_t` in block `t`.
    pub fn from_adaptive(panel: &ForecastPanel, theta: &[f64], tau: usize) -> Result<Self> {
        let (rows, m) = (panel.len(), panel.n_members());
        if theta.len() != m + m * m * tau {
            return Err(Error::DimensionMismatch { what: "parameter vector", expected: m + m * m * tau, found: theta.len() });
        }
        let z = crate::adaptive::context_matrix(panel, tau, panel.lead_time())?;
        let d = m * tau;
        let mut beta = Vec::with_capacity(rows * m);
        for t in 0..rows {
            beta.extend(coefficients(theta, m, &z[t * d..(t + 1) * d]));
        }
        let x_tilde = Mat::from_fn(rows, rows * m, |t, j| if j / m == t { panel.row(t)[j % m] } else { 0.0 });
        Ok(Self { x_tilde, y: panel.targets().to_vec(), beta })
    }

    pub fn residual(&self) -> Vec<f64> {
        let fit = apply(&self.x_tilde, &self.beta);
        self.y.iter().zip(fit).map(|(y, f)| y - f).collect()
    }

    /// `g(y − (X̃+Δ)β)`.
    pub fn perturbed_loss(&self, delta: &Mat<f64>, g: Norm) -> f64 {
        let shift = apply(delta, &self.beta);
        let r: Vec<f64> = self.residual().iter().zip(shift).map(|(r, s)| r - s).collect();
        g.eval(&r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub sample: usize,
    pub loss: f64,
    /// Row-major.
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub set: String,
    pub radius: f64,
    /// `g(y − X̃β) + λh(β)`.
    pub regularized: f64,
    /// Loss under the constructed worst case.
    pub constructive: f64,
    pub constructive_norm: f64,
    pub constructive_norm_exact: bool,
    pub sampled_max: f64,
    pub samples: usize,
    pub violations: Vec<Violation>,
    pub passed: bool,
}

fn random_feasible(rng: &mut ChaCha8Rng, rows: usize, cols: usize, set: &UncertaintySet) -> Mat<f64> {
    // alternate dense Gaussian and rank-one draws
    let raw = if rng.gen_bool(0.5) {
        Mat::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
    } else {
        let a: Vec<f64> = (0..rows).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..cols).map(|_| rng.sample(StandardNormal)).collect();
        Mat::from_fn(rows, cols, |i, j| a[i] * b[j])
    };
    let size = set.feasibility_size(&raw);
    if size == 0.0 {
        return raw;
    }
    // on the boundary most of the time, inside otherwise
    let radius = if rng.gen_bool(0.8) { set.radius } else { set.radius * rng.gen::<f64>() };
    let c = radius / size;
    Mat::from_fn(rows, cols, |i, j| c * raw[(i, j)])
}

/// Checks the min-max identity for `instance` against `set`: the
/// constructed worst case must attain the regularized value and no sampled
/// feasible perturbation may exceed it.
pub fn verify_equivalence(
    instance: &RobustInstance,
    set: &UncertaintySet,
    samples: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    let (rows, cols) = (instance.x_tilde.nrows(), instance.x_tilde.ncols());
    if instance.y.len() != rows || instance.beta.len() != cols {
        return Err(Error::DimensionMismatch { what: "robust instance", expected: cols, found: instance.beta.len() });
    }
    let (g, h) = (set.residual_norm(), set.regularizer_norm());
    let z = instance.residual();
    let regularized = g.eval(&z) + set.radius * h.eval(&instance.beta);
    let wc = worst_case_delta(&z, &instance.beta, set)?;
    // the adversary subtracts: y − (X̃ − Δ̂)β = z + Δ̂β
    let neg = Mat::from_fn(rows, cols, |i, j| -wc.delta[i * cols + j]);
    let constructive = instance.perturbed_loss(&neg, g);
    let size = set.size_of(&neg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled_max: f64 = 0.0;
    let mut violations = Vec::new();
    for sample in 0..samples {
        let d = random_feasible(&mut rng, rows, cols, set);
        let loss = instance.perturbed_loss(&d, g);
        sampled_max = sampled_max.max(loss);
        if loss > regularized + TOLERANCE {
            violations.push(Violation { sample, loss, delta: rows_of(&d).concat() });
        }
    }
    let attains = (constructive - regularized).abs() <= TOLERANCE;
    let feasible = size.value <= set.radius * (1.0 + TOLERANCE) + TOLERANCE;
    Ok(EquivalenceReport {
        set: set.label(),
        radius: set.radius,
        regularized,
        constructive,
        constructive_norm: size.value,
        constructive_norm_exact: size.exact,
        sampled_max,
        samples,
        passed: attains && feasible && violations.is_empty(),
        violations,
    })
}

/// A small random instance: `T` rows, `m` members, `β` from random
/// `(β0, V0)` mapped through the adaptive rule with window `τ`.
pub fn random_instance(rows: usize, m: usize, tau: usize, seed: u64) -> Result<RobustInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = (0..rows).map(|_| rng.sample(StandardNormal)).collect();
    let fc: Vec<Vec<f64>> =
        y.iter().map(|&v| (0..m).map(|_| v + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect()).collect();
    let panel = ForecastPanel::from_rows(&fc, y, 1)?;
    let theta: Vec<f64> = (0..m + m * m * tau).map(|_| rng.gen_range(-1.0..1.0)).collect();
    RobustInstance::from_adaptive(&panel, &theta, tau)
}
