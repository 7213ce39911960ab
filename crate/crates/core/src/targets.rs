//! Target energies and drifts as finite averages of component evaluators.
//!
//! A [`TargetModel`] stores the gradients `∇ℓ_i` of the components of
//! `U = (1/N) Σ ℓ_i`; a [`DriftModel`] stores component drifts `b_i` of a
//! general (not necessarily gradient) field `b = (1/N) Σ b_i`. Both expose the
//! minibatch drift through [`DriftField`], which is what the integrators and
//! couplings consume: `−∇U^ξ` for gradient targets and `b^ξ` for drifts.
//!
//! Component indices are zero-based.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::linalg::{dot, norm};
use crate::noise::NoiseStream;
use crate::{Error, Result};

/// A component evaluator: writes its value at `x` into `out`.
pub type ComponentFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Relative tolerance used when comparing observed constants to declared ones.
pub const ASSUMPTION_TOLERANCE: f64 = 1e-9;

/// Constants declared for a target: the nonconvexity radius `R0`, the convexity
/// modulus `κ0` outside `B(0, R0)`, the uniform-in-batch Lipschitz constant `K`
/// and `b0 = sup_ξ |∇U^ξ(0)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AssumptionParams {
    pub r0: f64,
    pub kappa0: f64,
    pub k: f64,
    pub b0: f64,
}

impl AssumptionParams {
    pub fn new(r0: f64, kappa0: f64, k: f64, b0: f64) -> Result<Self> {
        let p = AssumptionParams { r0, kappa0, k, b0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0.is_finite() && self.r0 >= 0.0) {
            return Err(Error::invalid("r0", "must be finite and nonnegative"));
        }
        if !(self.kappa0.is_finite() && self.kappa0 > 0.0) {
            return Err(Error::invalid("kappa0", "must be finite and positive"));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::invalid("k", "must be finite and positive"));
        }
        if !(self.b0.is_finite() && self.b0 >= 0.0) {
            return Err(Error::invalid("b0", "must be finite and nonnegative"));
        }
        if self.kappa0 > self.k {
            return Err(Error::invalid("kappa0", "cannot exceed the Lipschitz constant k"));
        }
        Ok(())
    }
}

/// The view of a model that the integrators need.
pub trait DriftField: Sync {
    fn dim(&self) -> usize;
    fn beta(&self) -> f64;
    fn n_components(&self) -> usize;
    fn params(&self) -> &AssumptionParams;

    /// Writes the minibatch drift at `x` into `out`: `−∇U^ξ(x)` for a gradient
    /// target, `b^ξ(x)` for a general drift.
    fn drift_batch(&self, x: &[f64], batch: &[usize], out: &mut [f64]) -> Result<()>;

    /// Writes the full drift (average over every component) into `out`.
    fn drift_full(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    fn is_gradient(&self) -> bool;
}

/// Ordered components sharing one dimension.
struct Components {
    dim: usize,
    fns: Vec<ComponentFn>,
}

impl Components {
    fn check_point(&self, x: &[f64], out: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if out.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: out.len(),
            });
        }
        Ok(())
    }

    /// Averages the selected components, scaled by `sign`, into `out`.
    fn average<I>(&self, x: &[f64], indices: I, count: usize, sign: f64, out: &mut [f64]) -> Result<()>
    where
        I: Iterator<Item = usize>,
    {
        self.check_point(x, out)?;
        if count == 1 {
            let mut indices = indices;
            let i = indices.next().ok_or(Error::EmptyBatch)?;
            (self.fns[i])(x, out);
            if !out.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteComponent { index: i });
            }
            if sign != 1.0 {
                out.iter_mut().for_each(|v| *v *= sign);
            }
            return Ok(());
        }
        let mut stack = [0.0; 16];
        let mut heap = Vec::new();
        let buf: &mut [f64] = if self.dim <= stack.len() {
            &mut stack[..self.dim]
        } else {
            heap.resize(self.dim, 0.0);
            &mut heap
        };
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in indices {
            (self.fns[i])(x, buf);
            if !buf.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteComponent { index: i });
            }
            for (o, b) in out.iter_mut().zip(buf.iter()) {
                *o += b;
            }
        }
        let scale = sign / count as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(())
    }

    fn check_batch(&self, batch: &[usize]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let n = self.fns.len();
        if let Some(&index) = batch.iter().find(|&&i| i >= n) {
            return Err(Error::BatchIndexOutOfRange { index, n });
        }
        Ok(())
    }
}

/// `U(x) = (1/N) Σ ℓ_i(x)` given through its component gradients.
pub struct TargetModel {
    beta: f64,
    components: Components,
    params: AssumptionParams,
}

impl TargetModel {
    pub fn new(dim: usize, beta: f64, components: Vec<ComponentFn>, params: AssumptionParams) -> Result<Self> {
        validate_common(dim, beta, components.len())?;
        params.validate()?;
        Ok(TargetModel {
            beta,
            components: Components { dim, fns: components },
            params,
        })
    }

    /// `(1/N) Σ_i ∇ℓ_i(x)`.
    pub fn grad_full(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.components.fns.len();
        self.components.average(x, 0..n, n, 1.0, out)
    }

    /// Average of `∇ℓ_i(x)` over the batch (a multiset: duplicates count).
    pub fn grad_batch(&self, x: &[f64], batch: &[usize], out: &mut [f64]) -> Result<()> {
        self.components.check_batch(batch)?;
        self.components
            .average(x, batch.iter().copied(), batch.len(), 1.0, out)
    }
}

impl DriftField for TargetModel {
    fn dim(&self) -> usize {
        self.components.dim
    }
    fn beta(&self) -> f64 {
        self.beta
    }
    fn n_components(&self) -> usize {
        self.components.fns.len()
    }
    fn params(&self) -> &AssumptionParams {
        &self.params
    }
    fn drift_batch(&self, x: &[f64], batch: &[usize], out: &mut [f64]) -> Result<()> {
        self.components.check_batch(batch)?;
        self.components
            .average(x, batch.iter().copied(), batch.len(), -1.0, out)
    }
    fn drift_full(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.components.fns.len();
        self.components.average(x, 0..n, n, -1.0, out)
    }
    fn is_gradient(&self) -> bool {
        true
    }
}

/// A general drift `b(x) = (1/N) Σ b_i(x)`. The constants in `params` are
/// read as the one-sided convexity and Lipschitz constants of `b`.
pub struct DriftModel {
    beta: f64,
    components: Components,
    params: AssumptionParams,
}

impl DriftModel {
    pub fn new(dim: usize, beta: f64, components: Vec<ComponentFn>, params: AssumptionParams) -> Result<Self> {
        validate_common(dim, beta, components.len())?;
        params.validate()?;
        Ok(DriftModel {
            beta,
            components: Components { dim, fns: components },
            params,
        })
    }

    pub fn drift(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.drift_full(x, out)
    }
}

impl DriftField for DriftModel {
    fn dim(&self) -> usize {
        self.components.dim
    }
    fn beta(&self) -> f64 {
        self.beta
    }
    fn n_components(&self) -> usize {
        self.components.fns.len()
    }
    fn params(&self) -> &AssumptionParams {
        &self.params
    }
    fn drift_batch(&self, x: &[f64], batch: &[usize], out: &mut [f64]) -> Result<()> {
        self.components.check_batch(batch)?;
        self.components
            .average(x, batch.iter().copied(), batch.len(), 1.0, out)
    }
    fn drift_full(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.components.fns.len();
        self.components.average(x, 0..n, n, 1.0, out)
    }
    fn is_gradient(&self) -> bool {
        false
    }
}

fn validate_common(dim: usize, beta: f64, n: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid("beta", "must be finite and positive"));
    }
    if n == 0 {
        return Err(Error::invalid("components", "need at least one component"));
    }
    Ok(())
}

/// How minibatches are drawn from `{0, …, N−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BatchSpec {
    pub batch_size: usize,
    pub replacement: bool,
}

impl BatchSpec {
    pub fn without_replacement(batch_size: usize) -> Self {
        BatchSpec {
            batch_size,
            replacement: false,
        }
    }

    pub fn with_replacement(batch_size: usize) -> Self {
        BatchSpec {
            batch_size,
            replacement: true,
        }
    }

    /// The whole data set every step (plain Langevin / Euler–Maruyama).
    pub fn full(n: usize) -> Self {
        Self::without_replacement(n)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::EmptyBatch);
        }
        if self.batch_size > n {
            return Err(Error::invalid("batch_size", "exceeds the number of components"));
        }
        Ok(())
    }

    /// Draws one batch of indices into `out`. A full batch without replacement
    /// consumes no randomness.
    pub fn sample_into<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        if self.replacement {
            out.extend((0..self.batch_size).map(|_| rng.random_range(0..n)));
        } else if self.batch_size >= n {
            out.extend(0..n);
        } else {
            out.extend(rand::seq::index::sample(rng, n, self.batch_size).iter());
        }
    }

    /// Variance factor of the batch mean relative to single-component
    /// sampling: `1/b` with replacement, `(N−b)/(b(N−1))` without.
    pub fn variance_factor(&self, n: usize) -> f64 {
        let b = self.batch_size as f64;
        if self.replacement {
            1.0 / b
        } else if n <= 1 {
            0.0
        } else {
            (n as f64 - b) / (b * (n as f64 - 1.0))
        }
    }
}

fn check_dim_beta(dim: usize, beta: f64) -> Result<()> {
    validate_common(dim, beta, 1)
}

/// `U(x) = |x|²/2`, a single component.
pub fn make_gaussian_target(dim: usize, beta: f64) -> Result<TargetModel> {
    make_quadratic_target(dim, beta, 1.0)
}

/// `U(x) = s|x|²/2`, a single component with `κ0 = K = s`.
pub fn make_quadratic_target(dim: usize, beta: f64, stiffness: f64) -> Result<TargetModel> {
    check_dim_beta(dim, beta)?;
    if !(stiffness.is_finite() && stiffness > 0.0) {
        return Err(Error::invalid("stiffness", "must be finite and positive"));
    }
    let grad: ComponentFn = Box::new(move |x, out| {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = stiffness * xi;
        }
    });
    TargetModel::new(dim, beta, vec![grad], AssumptionParams::new(0.0, stiffness, stiffness, 0.0)?)
}

/// `ℓ_i(x) = |x − m_i|²/2`. The average is a Gaussian centred at the mean
/// offset; minibatches add gradient noise but keep `κ0 = K = 1`.
pub fn make_split_gaussian_target(dim: usize, beta: f64, offsets: Vec<Vec<f64>>) -> Result<TargetModel> {
    check_dim_beta(dim, beta)?;
    if offsets.is_empty() {
        return Err(Error::invalid("offsets", "need at least one component"));
    }
    if let Some(m) = offsets.iter().find(|m| m.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: m.len(),
        });
    }
    let b0 = offsets.iter().map(|m| norm(m)).fold(0.0, f64::max);
    let components = offsets
        .into_iter()
        .map(|m| {
            let f: ComponentFn = Box::new(move |x: &[f64], out: &mut [f64]| {
                for ((o, xi), mi) in out.iter_mut().zip(x).zip(&m) {
                    *o = xi - mi;
                }
            });
            f
        })
        .collect();
    TargetModel::new(dim, beta, components, AssumptionParams::new(0.0, 1.0, 1.0, b0)?)
}

/// `U(x) = |x|²/2 + a·exp(−|x|²/2)`, nonconvex near the origin for `a > 1`.
///
/// With `u = |x|²` the Hessian has radial eigenvalue `1 + a e^{−u/2}(u − 1)`
/// and tangential eigenvalue `1 − a e^{−u/2}` (multiplicity `d − 1`). Hence
/// `K = max(1 + 2a e^{−3/2}, |1 − a|)`. In one dimension only the radial
/// eigenvalue exists and it is at least 1 for `|x| ≥ 1`, giving
/// `(R0, κ0) = (1, 1)`. For `d ≥ 2` the tangential eigenvalue never reaches 1,
/// so `κ0 = 1/2` with `R0 = sqrt(2 ln(2a))`.
pub fn make_bump_target(dim: usize, beta: f64, a: f64) -> Result<TargetModel> {
    check_dim_beta(dim, beta)?;
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::invalid("a", "must be finite and nonnegative"));
    }
    let k = f64::max(1.0 + 2.0 * a * libm::exp(-1.5), libm::fabs(1.0 - a));
    let (r0, kappa0) = if a == 0.0 {
        (0.0, 1.0)
    } else if dim == 1 {
        (1.0, 1.0)
    } else if 2.0 * a > 1.0 {
        (libm::sqrt(2.0 * libm::log(2.0 * a)), 0.5)
    } else {
        (0.0, 0.5)
    };
    let grad: ComponentFn = Box::new(move |x, out| {
        let u = dot(x, x);
        let s = 1.0 - a * libm::exp(-0.5 * u);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = s * xi;
        }
    });
    TargetModel::new(dim, beta, vec![grad], AssumptionParams::new(r0, kappa0, k, 0.0)?)
}

/// `b(x) = −x + γ J x` with `J` block-diagonal rotation generators
/// `[[0, −1], [1, 0]]`. The skew part drops out of `(x−y)·(b(x)−b(y))`, so
/// the one-sided modulus is 1 everywhere; `K = sqrt(1 + γ²)`.
pub fn make_rotational_drift(dim: usize, beta: f64, gamma: f64) -> Result<DriftModel> {
    check_dim_beta(dim, beta)?;
    if !dim.is_multiple_of(2) {
        return Err(Error::invalid("dim", "rotational drift needs an even dimension"));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::invalid("gamma", "must be finite and nonnegative"));
    }
    let b: ComponentFn = Box::new(move |x, out| {
        for (o, xi) in out.chunks_exact_mut(2).zip(x.chunks_exact(2)) {
            o[0] = -xi[0] - gamma * xi[1];
            o[1] = -xi[1] + gamma * xi[0];
        }
    });
    let k = libm::sqrt(1.0 + gamma * gamma);
    DriftModel::new(dim, beta, vec![b], AssumptionParams::new(0.0, 1.0, k, 0.0)?)
}

/// Outcome of [`verify_assumptions`]. A falsification check, not a proof.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AssumptionReport {
    pub declared: AssumptionParams,
    pub region_radius: f64,
    pub n_samples: usize,
    /// Smallest observed `−(x−y)·(D(x)−D(y))/|x−y|²` over short segments
    /// lying outside `B(0, R0)`, where `D` is the full drift.
    pub min_convexity: f64,
    pub min_convexity_at: Vec<f64>,
    pub convexity_violated: bool,
    /// Largest observed `|D_i(x)−D_i(y)|/|x−y|` over pairs and single components.
    pub max_lipschitz: f64,
    pub lipschitz_violated: bool,
    /// Largest `|D_i(0)|` over single components (informational).
    pub observed_b0: f64,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        !self.convexity_violated && !self.lipschitz_violated
    }
}

/// Samples the ball `B(0, region_radius)` and looks for counterexamples to the
/// declared constants.
///
/// Convexity is probed with directional difference quotients over short
/// segments that stay outside `B(0, R0)`; Lipschitz ratios are probed per
/// component (a batch average can never exceed its worst component), on a mix
/// of short and long pairs.
pub fn verify_assumptions<D: DriftField + ?Sized>(
    model: &D,
    region_radius: f64,
    n_samples: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be positive"));
    }
    let params = *model.params();
    if !(region_radius.is_finite() && region_radius > params.r0) {
        return Err(Error::invalid("region_radius", "must exceed r0"));
    }
    let d = model.dim();
    let n = model.n_components();
    let mut noise = NoiseStream::new(seed, 0);
    let h = 1e-3 * f64::max(region_radius, 1.0);

    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut v = vec![0.0; d];
    let mut dx = vec![0.0; d];
    let mut dy = vec![0.0; d];

    let mut min_convexity = f64::INFINITY;
    let mut min_convexity_at = vec![0.0; d];
    for _ in 0..n_samples {
        sample_annulus(&mut noise, params.r0, region_radius, &mut x);
        noise.unit_vector(&mut v);
        // Orient the segment outward so it never enters B(0, R0).
        if dot(&x, &v) < 0.0 {
            v.iter_mut().for_each(|vi| *vi = -*vi);
        }
        for ((yi, xi), vi) in y.iter_mut().zip(&x).zip(&v) {
            *yi = xi + h * vi;
        }
        model.drift_full(&x, &mut dx)?;
        model.drift_full(&y, &mut dy)?;
        let ratio = convexity_ratio(&x, &y, &dx, &dy);
        if ratio < min_convexity {
            min_convexity = ratio;
            min_convexity_at.copy_from_slice(&x);
        }
    }

    let probe: Vec<usize> = if n <= 16 {
        (0..n).collect()
    } else {
        (0..16).map(|_| noise.index(n)).collect()
    };
    let mut max_lipschitz: f64 = 0.0;
    for s in 0..n_samples {
        sample_ball(&mut noise, region_radius, &mut x);
        if s % 2 == 0 {
            noise.unit_vector(&mut v);
            for ((yi, xi), vi) in y.iter_mut().zip(&x).zip(&v) {
                *yi = xi + h * vi;
            }
        } else {
            sample_ball(&mut noise, region_radius, &mut y);
        }
        let dist = crate::linalg::distance(&x, &y);
        if dist == 0.0 {
            continue;
        }
        for &i in &probe {
            model.drift_batch(&x, &[i], &mut dx)?;
            model.drift_batch(&y, &[i], &mut dy)?;
            let diff = libm::sqrt(dx.iter().zip(&dy).map(|(a, b)| (a - b) * (a - b)).sum());
            max_lipschitz = max_lipschitz.max(diff / dist);
        }
    }

    let zero = vec![0.0; d];
    let mut observed_b0: f64 = 0.0;
    for &i in &probe {
        model.drift_batch(&zero, &[i], &mut dx)?;
        observed_b0 = observed_b0.max(norm(&dx));
    }

    Ok(AssumptionReport {
        declared: params,
        region_radius,
        n_samples,
        min_convexity,
        min_convexity_at,
        convexity_violated: min_convexity < params.kappa0 * (1.0 - ASSUMPTION_TOLERANCE),
        max_lipschitz,
        lipschitz_violated: max_lipschitz > params.k * (1.0 + ASSUMPTION_TOLERANCE),
        observed_b0,
    })
}

/// `−(x−y)·(dx−dy)/|x−y|²` for drifts `dx = D(x)`, `dy = D(y)`.
pub fn convexity_ratio(x: &[f64], y: &[f64], dx: &[f64], dy: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.len() {
        let z = x[i] - y[i];
        num -= z * (dx[i] - dy[i]);
        den += z * z;
    }
    num / den
}

fn sample_ball(noise: &mut NoiseStream, radius: f64, out: &mut [f64]) {
    noise.unit_vector(out);
    let r = radius * libm::pow(noise.uniform(), 1.0 / out.len() as f64);
    out.iter_mut().for_each(|v| *v *= r);
}

/// Uniform on `{r_in ≤ |x| ≤ r_out}` by inverting the radial law.
fn sample_annulus(noise: &mut NoiseStream, r_in: f64, r_out: f64, out: &mut [f64]) {
    let d = out.len() as f64;
    noise.unit_vector(out);
    let lo = libm::pow(r_in, d);
    let hi = libm::pow(r_out, d);
    let r = libm::pow(lo + (hi - lo) * noise.uniform(), 1.0 / d).max(r_in);
    out.iter_mut().for_each(|v| *v *= r);
}
