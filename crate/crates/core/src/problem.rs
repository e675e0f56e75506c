//! Problem specification: dimension, exponent, potential V and weight Γ as
//! radial piecewise-analytic descriptors, hypothesis validation, the
//! spectral bottom Σ of -Δ + V, and Kato-class norms.

use crate::grid::RadialGrid;
use crate::linalg;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),
    #[error("malformed specification: {0}")]
    Malformed(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

/// Radial piecewise-analytic profile used for V, Γ and sampled weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    Constant { value: f64 },
    /// coef · r^exponent
    Power { coef: f64, exponent: f64 },
    /// coef · e^{-rate r}
    Exponential { coef: f64, rate: f64 },
    /// coef · e^{-(r/width)²}
    Gaussian { coef: f64, width: f64 },
    /// inside for r < radius, outside for r >= radius
    Step { inside: f64, outside: f64, radius: f64 },
    Sum { terms: Vec<RadialProfile> },
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Power { coef, exponent } => coef * r.powf(*exponent),
            Self::Exponential { coef, rate } => coef * (-rate * r).exp(),
            Self::Gaussian { coef, width } => coef * (-(r / width) * (r / width)).exp(),
            Self::Step { inside, outside, radius } => {
                if r < *radius {
                    *inside
                } else {
                    *outside
                }
            }
            Self::Sum { terms } => terms.iter().map(|t| t.eval(r)).sum(),
        }
    }

    /// Leading power-law terms (coef, exponent) valid as r → 0, used for the
    /// closed-form origin pieces of singular integrals.
    pub fn origin_terms(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Constant { value } => vec![(*value, 0.0)],
            Self::Power { coef, exponent } => vec![(*coef, *exponent)],
            Self::Exponential { coef, .. } => vec![(*coef, 0.0)],
            Self::Gaussian { coef, .. } => vec![(*coef, 0.0)],
            Self::Step { inside, .. } => vec![(*inside, 0.0)],
            Self::Sum { terms } => terms.iter().flat_map(|t| t.origin_terms()).collect(),
        }
    }

    /// Multiply the profile by a scalar.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Constant { value } => Self::Constant { value: factor * value },
            Self::Power { coef, exponent } => Self::Power { coef: factor * coef, exponent: *exponent },
            Self::Exponential { coef, rate } => Self::Exponential { coef: factor * coef, rate: *rate },
            Self::Gaussian { coef, width } => Self::Gaussian { coef: factor * coef, width: *width },
            Self::Step { inside, outside, radius } => Self::Step {
                inside: factor * inside,
                outside: factor * outside,
                radius: *radius,
            },
            Self::Sum { terms } => Self::Sum {
                terms: terms.iter().map(|t| t.scaled(factor)).collect(),
            },
        }
    }
}

/// Potential descriptor with the declared origin-growth constants of the
/// bound |V(x)| <= C1 |x|^alpha on B_1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(flatten)]
    pub profile: RadialProfile,
    pub alpha: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
}

/// Weight descriptor with the declared constants of
/// |Γ(x) - Γ(0)| <= C2 |x|^beta on B_1, and Γ(0) = gamma0 > 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightSpec {
    #[serde(flatten)]
    pub profile: RadialProfile,
    pub beta: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub gamma0: f64,
}

/// Spatially homogeneous nonlinearity descriptors for the general equation;
/// when absent, the main-equation right-hand side Γ(x)|u|^{p-1}u applies.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// |s|^{p-1} s
    Power { p: f64 },
    /// |s|^{p-1} s - offset
    PowerMinusConst { p: f64, offset: f64 },
    /// slope · s
    Linear { slope: f64 },
}

impl NonlinearityKind {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Self::Power { p } => s.abs().powf(p - 1.0) * s,
            Self::PowerMinusConst { p, offset } => s.abs().powf(p - 1.0) * s - offset,
            Self::Linear { slope } => slope * s,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    #[serde(flatten)]
    pub kind: NonlinearityKind,
    #[serde(rename = "C3", default)]
    pub c3: f64,
    #[serde(rename = "C4", default)]
    pub c4: f64,
    #[serde(rename = "C5", default)]
    pub c5: f64,
    #[serde(rename = "C6", default)]
    pub c6: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// n >= 3, n/(n-2) < p < (n+2)/(n-2): singular-solution pipeline
    Supercritical,
    /// 1 < p < n/(n-2)_+: regularity pipeline
    Subcritical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: usize,
    pub p: f64,
    pub mode: Regime,
    #[serde(rename = "V")]
    pub v: PotentialSpec,
    #[serde(rename = "Gamma")]
    pub gamma: WeightSpec,
    #[serde(rename = "g", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<NonlinearitySpec>,
}

impl ProblemSpec {
    pub fn from_json(s: &str) -> Result<Self, ProblemError> {
        let spec: Self =
            serde_json::from_str(s).map_err(|e| ProblemError::Malformed(e.to_string()))?;
        spec.check_well_formed()?;
        Ok(spec)
    }

    pub fn check_well_formed(&self) -> Result<(), ProblemError> {
        let n = self.n as f64;
        match self.mode {
            Regime::Supercritical => {
                if self.n < 3 {
                    return Err(ProblemError::Hypothesis(
                        "supercritical mode needs n >= 3".into(),
                    ));
                }
                let lo = n / (n - 2.0);
                let hi = (n + 2.0) / (n - 2.0);
                if !(self.p > lo && self.p < hi) {
                    return Err(ProblemError::Hypothesis(format!(
                        "supercritical mode needs {lo} < p < {hi}, got {}",
                        self.p
                    )));
                }
            }
            Regime::Subcritical => {
                let hi = if self.n <= 2 { f64::INFINITY } else { n / (n - 2.0) };
                if !(self.p > 1.0 && self.p < hi) {
                    return Err(ProblemError::Hypothesis(format!(
                        "subcritical mode needs 1 < p < {hi}, got {}",
                        self.p
                    )));
                }
            }
        }
        if self.v.alpha < (n - 6.0) / 2.0 {
            return Err(ProblemError::Hypothesis(format!(
                "alpha = {} below (n-6)/2 = {}",
                self.v.alpha,
                (n - 6.0) / 2.0
            )));
        }
        if !(self.gamma.beta > (n - 2.0) / 2.0) {
            return Err(ProblemError::Hypothesis(format!(
                "beta = {} not above (n-2)/2 = {}",
                self.gamma.beta,
                (n - 2.0) / 2.0
            )));
        }
        if !(self.gamma.gamma0 > 0.0) {
            return Err(ProblemError::Hypothesis("Gamma(0) must be positive".into()));
        }
        Ok(())
    }

    pub fn v_at(&self, r: f64) -> f64 {
        self.v.profile.eval(r)
    }

    pub fn gamma_at(&self, r: f64) -> f64 {
        self.gamma.profile.eval(r)
    }

    /// g(x, s): the declared descriptor, defaulting to the main-equation
    /// right-hand side Γ(x)|s|^{p-1}s.
    pub fn nonlinearity(&self, r: f64, s: f64) -> f64 {
        match &self.g {
            Some(spec) => spec.kind.eval(s),
            None => self.gamma_at(r) * s.abs().powf(self.p - 1.0) * s,
        }
    }

    /// ∂g/∂s, used by Newton polishing of fixed points.
    pub fn nonlinearity_prime(&self, r: f64, s: f64) -> f64 {
        match &self.g {
            Some(spec) => match spec.kind {
                NonlinearityKind::Power { p } | NonlinearityKind::PowerMinusConst { p, .. } => {
                    p * s.abs().powf(p - 1.0)
                }
                NonlinearityKind::Linear { slope } => slope,
            },
            None => self.p * self.gamma_at(r) * s.abs().powf(self.p - 1.0),
        }
    }
}

/// Per-hypothesis sampling report.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub alpha_admissible: bool,
    pub beta_admissible: bool,
    pub gamma0_positive: bool,
    /// worst |V(r)|/r^alpha over sampled B_1 radii vs the declared C1
    pub v_origin_ratio: f64,
    pub v_origin_ok: bool,
    /// sup |V| over sampled radii in [1, 40]; boundedness outside B_1
    pub v_exterior_sup: f64,
    /// worst |Γ(r) - Γ(0)|/r^beta vs the declared C2
    pub gamma_origin_ratio: f64,
    pub gamma_origin_ok: bool,
    pub pass: bool,
}

/// Sample V and Γ on B_1 and outside, comparing the observed growth against
/// the declared (alpha, C1), (beta, C2).
pub fn validate_hypotheses(
    spec: &ProblemSpec,
    samples: usize,
) -> Result<HypothesisReport, ProblemError> {
    let n = spec.n as f64;
    let m = samples.max(16);
    let mut v_ratio = 0.0f64;
    let mut g_ratio = 0.0f64;
    for k in 0..m {
        // logarithmic radii in (1e-6, 1]
        let r = 10f64.powf(-6.0 * (1.0 - k as f64 / (m - 1) as f64));
        v_ratio = v_ratio.max(spec.v_at(r).abs() / r.powf(spec.v.alpha));
        g_ratio =
            g_ratio.max((spec.gamma_at(r) - spec.gamma.gamma0).abs() / r.powf(spec.gamma.beta));
    }
    let mut v_ext = 0.0f64;
    for k in 0..m {
        let r = 1.0 + 39.0 * k as f64 / (m - 1) as f64;
        v_ext = v_ext.max(spec.v_at(r).abs());
    }
    // equality-case declared constants must survive the cancellation noise
    // of (Γ(r) - Γ(0)) at r ~ 1e-6
    let slack = 1.0 + 1e-4;
    let report = HypothesisReport {
        alpha_admissible: spec.v.alpha >= (n - 6.0) / 2.0,
        beta_admissible: spec.gamma.beta > (n - 2.0) / 2.0,
        gamma0_positive: spec.gamma.gamma0 > 0.0,
        v_origin_ratio: v_ratio,
        v_origin_ok: v_ratio <= spec.v.c1 * slack,
        v_exterior_sup: v_ext,
        gamma_origin_ratio: g_ratio,
        gamma_origin_ok: g_ratio <= spec.gamma.c2 * slack,
        pass: false,
    };
    let pass = report.alpha_admissible
        && report.beta_admissible
        && report.gamma0_positive
        && report.v_origin_ok
        && report.gamma_origin_ok
        && v_ext.is_finite();
    Ok(HypothesisReport { pass, ..report })
}

/// Normalize Γ(0) to 1. Returns the rescaled spec and the solution scale
/// factor Γ(0)^{1/(p-1)}: solutions of the rescaled problem divided by this
/// factor solve the original problem.
pub fn rescale_gamma(spec: &ProblemSpec) -> Result<(ProblemSpec, f64), ProblemError> {
    let g0 = spec.gamma.gamma0;
    if !(g0 > 0.0) {
        return Err(ProblemError::Hypothesis(format!("Gamma(0) = {g0} must be > 0")));
    }
    let scale = g0.powf(1.0 / (spec.p - 1.0));
    let mut out = spec.clone();
    out.gamma = WeightSpec {
        profile: spec.gamma.profile.scaled(1.0 / g0),
        beta: spec.gamma.beta,
        c2: spec.gamma.c2 / g0,
        gamma0: 1.0,
    };
    Ok((out, scale))
}

/// Discrete spectral bottom of -Δ + V: the smallest Rayleigh quotient
/// ⟨u,u⟩_V / ‖u‖_{L²}² over the radial grid space, by inverse iteration.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralInfo {
    pub sigma: f64,
    pub grid_tag: String,
    pub iterations: usize,
}

pub fn estimate_sigma(
    spec: &ProblemSpec,
    grid: &Arc<RadialGrid>,
) -> Result<SpectralInfo, ProblemError> {
    let mut a = grid.stiffness();
    let qv = grid.weighted_mass(|r| spec.v_at(r));
    for i in 0..a.n() {
        a.diag[i] += qv.diag[i];
    }
    let b = grid.weighted_mass(|_| 1.0);
    let (sigma, _vec, iterations) = linalg::pencil_min_eig(&a, &b, 1e-12, 30_000)
        .map_err(|e| ProblemError::Numeric(format!("sigma iteration: {e}")))?;
    Ok(SpectralInfo {
        sigma,
        grid_tag: grid.tag(),
        iterations,
    })
}

/// Σ with a two-refinement convergence check and Richardson extrapolation
/// (second-order rule). Returns (extrapolated, per-grid values).
pub fn estimate_sigma_refined(
    spec: &ProblemSpec,
    grid: &Arc<RadialGrid>,
) -> Result<(f64, Vec<f64>), ProblemError> {
    let s0 = estimate_sigma(spec, grid)?.sigma;
    let g1 = grid.refine();
    let s1 = estimate_sigma(spec, &g1)?.sigma;
    let g2 = g1.refine();
    let s2 = estimate_sigma(spec, &g2)?.sigma;
    let extrapolated = s2 + (s2 - s1) / 3.0;
    Ok((extrapolated, vec![s0, s1, s2]))
}

/// Kato kernel h_n: |z|^{2-n} for n >= 3, -log|z| for n = 2, 1 for n = 1.
fn kato_kernel(n: usize, z: f64) -> f64 {
    match n {
        1 => 1.0,
        2 => -z.ln(),
        _ => z.powf(2.0 - n as f64),
    }
}

/// Restriction domain for Kato-norm computations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KatoDomain {
    Full,
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl KatoDomain {
    fn contains(&self, r: f64) -> bool {
        match self {
            Self::Full => true,
            Self::Ball { radius } => r <= *radius,
            Self::Annulus { inner, outer } => r >= *inner && r <= *outer,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum KatoNorm {
    Finite { value: f64, center: f64 },
    Divergent,
}

/// ‖W‖_{K_n} = sup_x ∫_{|x-y|<=1} h_n(x-y)|W(y)| dy for radial |W|; the sup
/// reduces to a 1-D search over the center radius t = |x|.
pub fn kato_norm(w: &RadialProfile, n: usize, domain: KatoDomain, centers: &[f64]) -> KatoNorm {
    // origin power counting when the domain reaches the origin
    let min_expo = w
        .origin_terms()
        .iter()
        .map(|(_, e)| *e)
        .fold(f64::INFINITY, f64::min);
    let critical = if n == 1 { -1.0 } else { -2.0 };
    if domain.contains(0.0) && min_expo <= critical {
        return KatoNorm::Divergent;
    }
    let wa = |r: f64| {
        if domain.contains(r) {
            w.eval(r).abs()
        } else {
            0.0
        }
    };
    let mut best = 0.0f64;
    let mut best_t = 0.0;
    for &t in centers {
        let v = kato_local(&wa, n, t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    KatoNorm::Finite { value: best, center: best_t }
}

/// ∫_{B_1(x)} h_n(x-y)|W(y)| dy for |x| = t.
fn kato_local(w: &impl Fn(f64) -> f64, n: usize, t: f64) -> f64 {
    match n {
        1 => crate::quad::gauss_composite(&|y: f64| w(y.abs()), t - 1.0, t + 1.0, 24),
        _ => {
            if t == 0.0 {
                // pure radial: σ ∫ h(u) u^{n-1} W(u) du
                let f = |u: f64| kato_kernel(n, u) * u.powi(n as i32 - 1) * w(u);
                return crate::unit_sphere_area(n) * crate::quad::tanh_sinh(f, 0.0, 1.0, 1e-11);
            }
            let sigma = crate::unit_sphere_area(n - 1);
            let outer = |u: f64| -> f64 {
                let inner = |theta: f64| -> f64 {
                    let d2 = t * t + u * u + 2.0 * t * u * theta.cos();
                    w(d2.max(0.0).sqrt()) * theta.sin().powi(n as i32 - 2)
                };
                kato_kernel(n, u)
                    * u.powi(n as i32 - 1)
                    * crate::quad::gauss_composite(&inner, 0.0, std::f64::consts::PI, 16)
            };
            sigma * crate::quad::tanh_sinh(outer, 0.0, 1.0, 1e-9)
        }
    }
}

/// sup_y ‖W‖_{L^q(B_1(y))} over the sampled centers: the right-hand side of
/// the Kato-vs-local-L^q comparison, for q > n/2.
pub fn kato_lq_side(w: &RadialProfile, n: usize, q: f64, centers: &[f64]) -> f64 {
    let wq = |r: f64| w.eval(r).abs().powf(q);
    centers
        .iter()
        .map(|&t| crate::quad::ball_integral_radial(&wq, n, t, 1.0).powf(1.0 / q))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthMode {
    LowerUpperPower,
    AbsolutePower,
    SmallSlope,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub mode: GrowthMode,
    pub worst_violation: f64,
    /// (s-window upper edge, sampled sup |g|/|s|) rows for SmallSlope
    pub slope_windows: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Sample a growth condition: lower/upper power envelopes on s >= 0, the
/// absolute two-sided power bound, or the vanishing-slope condition at 0.
pub fn check_growth(g: &NonlinearitySpec, p: f64, mode: GrowthMode, samples: usize) -> GrowthReport {
    let m = samples.max(32);
    match mode {
        GrowthMode::LowerUpperPower => {
            let mut worst = 0.0f64;
            for k in 0..m {
                let s = 10f64.powf(-4.0 + 8.0 * k as f64 / (m - 1) as f64);
                let val = g.kind.eval(s);
                let lower = -g.c3 + g.c4 * s.powf(p);
                let upper = g.c3 + g.c5 * s.powf(p);
                worst = worst.max(lower - val).max(val - upper);
            }
            GrowthReport {
                mode,
                worst_violation: worst,
                slope_windows: vec![],
                pass: worst <= 1e-9,
            }
        }
        GrowthMode::AbsolutePower => {
            let mut worst = 0.0f64;
            for k in 0..m {
                let s = 10f64.powf(-4.0 + 8.0 * k as f64 / (m - 1) as f64);
                for sg in [s, -s] {
                    let val = g.kind.eval(sg).abs();
                    let bound = g.c6 * (sg.abs() + sg.abs().powf(p));
                    worst = worst.max(val - bound);
                }
            }
            GrowthReport {
                mode,
                worst_violation: worst,
                slope_windows: vec![],
                pass: worst <= 1e-9,
            }
        }
        GrowthMode::SmallSlope => {
            let mut windows = Vec::new();
            for k in 0..6 {
                let edge = 10f64.powf(-(k as f64));
                let mut sup = 0.0f64;
                for j in 1..=m {
                    let s = edge * j as f64 / m as f64;
                    sup = sup.max(g.kind.eval(s).abs() / s);
                    sup = sup.max(g.kind.eval(-s).abs() / s);
                }
                windows.push((edge, sup));
            }
            let first = windows.first().unwrap().1;
            let last = windows.last().unwrap().1;
            GrowthReport {
                mode,
                worst_violation: last,
                pass: last < 0.01 * first.max(1e-12) || last < 1e-9,
                slope_windows: windows,
            }
        }
    }
}
