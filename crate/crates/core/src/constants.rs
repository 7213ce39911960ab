//! Closed-form constants certifying contraction of the reflection coupling.
//!
//! The pipeline is
//!
//! 1. [`derive_geometry`]: far-field convexity radius `R` and modulus `κ`
//!    from the declared [`AssumptionParams`];
//! 2. [`choose_cf`]: the smallest admissible slope parameter `c_f`;
//! 3. [`DistanceFunction`]: the concave distance
//!    `f(r) = ∫_0^r exp(−c_f min(s, R1)) ds` with `R1 > 3R/2`;
//! 4. [`contraction_rate`]: the rate `c` and the W1 prefactor `c0`;
//! 5. [`max_step_size`]: the largest step size satisfying every restriction.
//!
//! Realistic constants make `c` underflow and `c0` overflow in `f64`, so both
//! are also reported through their natural logarithms.

use core::fmt;

use crate::targets::AssumptionParams;
use crate::{Error, Result};

/// Default `c̄ = 1/(2e(1 + C))` with the martingale moment constant `C = 1`.
/// Heuristic: the constant is not pinned down analytically.
pub const DEFAULT_CBAR: f64 = 1.0 / (4.0 * core::f64::consts::E);

/// Default ratio `R1 / R`, just above the required `3/2`.
pub const DEFAULT_R1_FACTOR: f64 = 1.51;

/// Upper end of the step-size search domain; `Δ|log Δ|` is increasing on
/// `(0, e^{-1}]`.
pub const STEP_SEARCH_MAX: f64 = 1.0 / core::f64::consts::E;

/// Far-field convexity: `(x−y)·(∇U(x)−∇U(y)) ≥ κ|x−y|²` whenever `|x−y| > R`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContractionGeometry {
    pub r: f64,
    pub kappa: f64,
}

/// `R = max(4 R0 (K + κ0)/κ0, 2)`, `κ = κ0 / 2`.
pub fn derive_geometry(params: &AssumptionParams) -> Result<ContractionGeometry> {
    if !(params.kappa0 > 0.0) {
        return Err(Error::invalid("kappa0", "must be positive"));
    }
    let r = f64::max(4.0 * params.r0 * (params.k + params.kappa0) / params.kappa0, 2.0);
    Ok(ContractionGeometry {
        r,
        kappa: params.kappa0 / 2.0,
    })
}

/// Which contraction theorem the constants are taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DriftVariant {
    /// `−∇U^ξ` drifts: needs `½ sqrt(2/β) c_f / R ≥ K`.
    #[default]
    Gradient,
    /// General drifts `b^ξ`: needs `⅓ sqrt(2/β) c_f / R ≥ K`.
    GeneralDrift,
}

/// Smallest admissible `c_f`: `2KR / sqrt(2/β)` (gradient) or `3KR / sqrt(2/β)`.
pub fn choose_cf(beta: f64, k: f64, r: f64, variant: DriftVariant) -> f64 {
    let factor = match variant {
        DriftVariant::Gradient => 2.0,
        DriftVariant::GeneralDrift => 3.0,
    };
    factor * k * r / libm::sqrt(2.0 / beta)
}

/// `f(r) = ∫_0^r exp(−c_f min(s, R1)) ds`: concave, increasing, `f(0) = 0`,
/// and `e^{−c_f R1} r ≤ f(r) ≤ r`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DistanceFunction {
    pub c_f: f64,
    pub r1: f64,
}

impl DistanceFunction {
    pub fn new(c_f: f64, r1: f64) -> Result<Self> {
        if !(c_f.is_finite() && c_f > 0.0) {
            return Err(Error::invalid("c_f", "must be finite and positive"));
        }
        if !(r1.is_finite() && r1 > 0.0) {
            return Err(Error::invalid("r1", "must be finite and positive"));
        }
        Ok(DistanceFunction { c_f, r1 })
    }

    /// Closed form of `f`; assumes `r ≥ 0`.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.r1 {
            -libm::expm1(-self.c_f * r) / self.c_f
        } else {
            -libm::expm1(-self.c_f * self.r1) / self.c_f + libm::exp(-self.c_f * self.r1) * (r - self.r1)
        }
    }

    /// `f′(r) = exp(−c_f min(r, R1))`.
    pub fn derivative(&self, r: f64) -> f64 {
        libm::exp(-self.c_f * r.min(self.r1))
    }

    /// The lower bracketing slope `e^{−c_f R1}`.
    pub fn min_slope(&self) -> f64 {
        libm::exp(-self.c_f * self.r1)
    }
}

pub fn f_eval(dist: &DistanceFunction, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::invalid("r", "must be nonnegative"));
    }
    Ok(dist.eval(r))
}

pub fn f_prime(dist: &DistanceFunction, r: f64) -> f64 {
    dist.derivative(r)
}

/// Contraction rate and prefactor, with their logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rate {
    pub c: f64,
    pub log_c: f64,
    pub c0: f64,
    pub log_c0: f64,
}

/// `c = ⅓ e^{−c_f R1} min(sqrt(2/β) c_f / R1, κ)` and `c0 = e^{c_f R1}`.
pub fn contraction_rate(beta: f64, dist: &DistanceFunction, kappa: f64) -> Rate {
    let inner = f64::min(libm::sqrt(2.0 / beta) * dist.c_f / dist.r1, kappa);
    let exponent = dist.c_f * dist.r1;
    let log_c = libm::log(inner / 3.0) - exponent;
    Rate {
        c: libm::exp(log_c),
        log_c,
        c0: libm::exp(exponent),
        log_c0: exponent,
    }
}

/// `c′ = c̄^{−1/2} (2K/(R/2 − 1) + K c_f e^{−c_f (R/2 − 1)}) + 4 c̄^{−1/2} / R`.
///
/// Infinite when `R = 2`.
pub fn default_cprime(cbar: f64, k: f64, r: f64, c_f: f64) -> f64 {
    let s = 1.0 / libm::sqrt(cbar);
    let half = r / 2.0 - 1.0;
    s * (2.0 * k / half + k * c_f * libm::exp(-c_f * half)) + 4.0 * s / r
}

/// `κ / (2(p − 1) K²)`: supremum of step sizes keeping the p-th moment bounded.
pub fn moment_step_bound(kappa: f64, k: f64, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::invalid("p", "must be at least 2"));
    }
    Ok(kappa / (2.0 * (p - 1.0) * k * k))
}

/// One inequality of the step-size restriction set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Restriction {
    /// `sqrt(Δ|log Δ|) ≤ e^{−c_f R1} κ / (6c′)`
    NoiseVsConvexity,
    /// `sqrt(Δ|log Δ|) ≤ sqrt(c̄)`
    NoiseVsCbar,
    /// `Δ ≤ c̄^{−1/2} sqrt(Δ|log Δ|) / (KR)`
    DriftVsNoise,
    /// `Δ ≤ 1/(2K)`
    HalfInverseLipschitz,
    /// `Δ ≤ R²/9`
    RadiusSquared,
    /// `Δ ≤ 1`
    Unit,
    /// `Δ ≤ c̄βR1(R1 − 3R/2)/16`
    BandWidth,
    /// `Δ ≤ c̄βR²/(128 log 5)`
    RadiusLog5,
    /// `Δ ≤ c̄βR²/(128(c_f R1 + log(18/κ)))`
    RadiusRate,
    /// `Δ ≤ c̄β(R1 − 3R/2)²/8 / log(45 R1/R (1 + sqrt(2β) e^{c_f R1} KR / c_f))`
    BandLog,
}

impl Restriction {
    pub const ALL: [Restriction; 10] = [
        Restriction::NoiseVsConvexity,
        Restriction::NoiseVsCbar,
        Restriction::DriftVsNoise,
        Restriction::HalfInverseLipschitz,
        Restriction::RadiusSquared,
        Restriction::Unit,
        Restriction::BandWidth,
        Restriction::RadiusLog5,
        Restriction::RadiusRate,
        Restriction::BandLog,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Restriction::NoiseVsConvexity => "noise_vs_convexity",
            Restriction::NoiseVsCbar => "noise_vs_cbar",
            Restriction::DriftVsNoise => "drift_vs_noise",
            Restriction::HalfInverseLipschitz => "half_inverse_lipschitz",
            Restriction::RadiusSquared => "radius_squared",
            Restriction::Unit => "unit",
            Restriction::BandWidth => "band_width",
            Restriction::RadiusLog5 => "radius_log5",
            Restriction::RadiusRate => "radius_rate",
            Restriction::BandLog => "band_log",
        }
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Inputs of the step-size budget.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepInputs {
    pub beta: f64,
    pub k: f64,
    pub r: f64,
    pub r1: f64,
    pub c_f: f64,
    pub kappa: f64,
    pub cbar: f64,
    pub cprime: f64,
}

/// `sqrt(Δ |log Δ|)`.
fn noise_scale(delta: f64) -> f64 {
    libm::sqrt(delta * libm::fabs(libm::log(delta)))
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 30.0 {
        t + libm::log1p(libm::exp(-t))
    } else {
        libm::log1p(libm::exp(t))
    }
}

impl StepInputs {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta", self.beta),
            ("k", self.k),
            ("r", self.r),
            ("r1", self.r1),
            ("c_f", self.c_f),
            ("kappa", self.kappa),
            ("cbar", self.cbar),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be finite and positive"));
            }
        }
        if !(self.cprime > 0.0) {
            return Err(Error::invalid("cprime", "must be positive"));
        }
        if !(self.r1 > 1.5 * self.r) {
            return Err(Error::invalid("r1", "must exceed 3R/2"));
        }
        Ok(())
    }

    /// Right-hand side of the restrictions that bound `Δ` linearly, or
    /// `None` for the three nonlinear ones.
    fn linear_bound(&self, which: Restriction) -> Option<f64> {
        let cb = self.cbar * self.beta;
        let band = self.r1 - 1.5 * self.r;
        let r2 = self.r * self.r;
        Some(match which {
            Restriction::HalfInverseLipschitz => 1.0 / (2.0 * self.k),
            Restriction::RadiusSquared => r2 / 9.0,
            Restriction::Unit => 1.0,
            Restriction::BandWidth => cb * self.r1 * band / 16.0,
            Restriction::RadiusLog5 => cb * r2 / (128.0 * libm::log(5.0)),
            Restriction::RadiusRate => {
                let den = self.c_f * self.r1 + libm::log(18.0 / self.kappa);
                if den <= 0.0 {
                    f64::INFINITY
                } else {
                    cb * r2 / (128.0 * den)
                }
            }
            Restriction::BandLog => {
                let t = libm::log(libm::sqrt(2.0 * self.beta) * self.k * self.r / self.c_f) + self.c_f * self.r1;
                let log_arg = libm::log(45.0 * self.r1 / self.r) + softplus(t);
                cb * band * band / 8.0 / log_arg
            }
            _ => return None,
        })
    }

    /// Independent check of one restriction at `delta`.
    pub fn holds(&self, which: Restriction, delta: f64) -> bool {
        if let Some(bound) = self.linear_bound(which) {
            return delta <= bound;
        }
        let g = noise_scale(delta);
        match which {
            Restriction::NoiseVsConvexity => {
                // bound = e^{−c_f R1} κ / (6c′), compared in log space.
                g > 0.0 && libm::log(g) <= -self.c_f * self.r1 + libm::log(self.kappa / (6.0 * self.cprime))
            }
            Restriction::NoiseVsCbar => g <= libm::sqrt(self.cbar),
            Restriction::DriftVsNoise => delta * self.k * self.r * libm::sqrt(self.cbar) <= g,
            _ => unreachable!(),
        }
    }

    pub fn all_hold(&self, delta: f64) -> bool {
        Restriction::ALL.iter().all(|&w| self.holds(w, delta))
    }

    /// Largest `Δ ∈ (0, e^{−1}]` satisfying one restriction (0 if none does).
    pub fn max_for(&self, which: Restriction) -> f64 {
        if let Some(bound) = self.linear_bound(which) {
            return bound.clamp(0.0, STEP_SEARCH_MAX);
        }
        bisect_largest(|d| self.holds(which, d))
    }
}

/// Largest point of `(0, e^{−1}]` where a monotone (feasible-below) predicate
/// holds, by bisection on `log Δ`.
fn bisect_largest<P: Fn(f64) -> bool>(pred: P) -> f64 {
    if pred(STEP_SEARCH_MAX) {
        return STEP_SEARCH_MAX;
    }
    let mut lo = libm::log(1e-300);
    if !pred(libm::exp(lo)) {
        return 0.0;
    }
    let mut hi = libm::log(STEP_SEARCH_MAX);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pred(libm::exp(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    libm::exp(lo)
}

/// Result of [`max_step_size`]. Infeasibility is a value, not an error.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "status", rename_all = "snake_case"))]
pub enum StepBudget {
    Feasible { delta0: f64, binding: Restriction },
    Infeasible { binding: Restriction },
}

impl StepBudget {
    pub fn delta0(&self) -> Option<f64> {
        match self {
            StepBudget::Feasible { delta0, .. } => Some(*delta0),
            StepBudget::Infeasible { .. } => None,
        }
    }

    pub fn binding(&self) -> Restriction {
        match self {
            StepBudget::Feasible { binding, .. } | StepBudget::Infeasible { binding } => *binding,
        }
    }
}

/// Largest `Δ0 ∈ (0, e^{−1}]` satisfying every restriction, and the one that binds.
pub fn max_step_size(inputs: &StepInputs) -> Result<StepBudget> {
    inputs.validate()?;
    let (binding, delta0) = Restriction::ALL
        .iter()
        .map(|&w| (w, inputs.max_for(w)))
        .fold((Restriction::Unit, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
    if delta0 < f64::EPSILON {
        Ok(StepBudget::Infeasible { binding })
    } else {
        Ok(StepBudget::Feasible { delta0, binding })
    }
}

/// Tunables of [`rate_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstantsOptions {
    pub cbar: f64,
    /// Overrides the default `c′` formula.
    pub cprime: Option<f64>,
    pub r1_factor: f64,
    /// Overrides `r1_factor · R`.
    pub r1: Option<f64>,
    pub variant: DriftVariant,
}

impl Default for ConstantsOptions {
    fn default() -> Self {
        ConstantsOptions {
            cbar: DEFAULT_CBAR,
            cprime: None,
            r1_factor: DEFAULT_R1_FACTOR,
            r1: None,
            variant: DriftVariant::Gradient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateReport {
    pub params: AssumptionParams,
    pub beta: f64,
    pub variant: DriftVariant,
    pub geometry: ContractionGeometry,
    pub distance: DistanceFunction,
    pub rate: Rate,
    pub cbar: f64,
    pub cprime: f64,
    pub budget: StepBudget,
}

impl RateReport {
    pub fn c(&self) -> f64 {
        self.rate.c
    }

    pub fn c0(&self) -> f64 {
        self.rate.c0
    }

    pub fn delta0_max(&self) -> Option<f64> {
        self.budget.delta0()
    }

    pub fn binding_restriction(&self) -> Restriction {
        self.budget.binding()
    }

    pub fn step_inputs(&self) -> StepInputs {
        StepInputs {
            beta: self.beta,
            k: self.params.k,
            r: self.geometry.r,
            r1: self.distance.r1,
            c_f: self.distance.c_f,
            kappa: self.geometry.kappa,
            cbar: self.cbar,
            cprime: self.cprime,
        }
    }
}

/// Runs the whole constants pipeline for one target.
pub fn rate_report(params: &AssumptionParams, beta: f64, options: &ConstantsOptions) -> Result<RateReport> {
    params.validate()?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid("beta", "must be finite and positive"));
    }
    if !(options.cbar.is_finite() && options.cbar > 0.0) {
        return Err(Error::invalid("cbar", "must be finite and positive"));
    }
    let geometry = derive_geometry(params)?;
    let c_f = choose_cf(beta, params.k, geometry.r, options.variant);
    let r1 = match options.r1 {
        Some(r1) => r1,
        None => options.r1_factor * geometry.r,
    };
    if !(r1 > 1.5 * geometry.r) {
        return Err(Error::invalid("r1", "must exceed 3R/2"));
    }
    let distance = DistanceFunction::new(c_f, r1)?;
    let rate = contraction_rate(beta, &distance, geometry.kappa);
    let cprime = options
        .cprime
        .unwrap_or_else(|| default_cprime(options.cbar, params.k, geometry.r, c_f));
    let inputs = StepInputs {
        beta,
        k: params.k,
        r: geometry.r,
        r1,
        c_f,
        kappa: geometry.kappa,
        cbar: options.cbar,
        cprime,
    };
    let budget = max_step_size(&inputs)?;
    Ok(RateReport {
        params: *params,
        beta,
        variant: options.variant,
        geometry,
        distance,
        rate,
        cbar: options.cbar,
        cprime,
        budget,
    })
}
