//! Prototype nonlinearity families for the right-hand side f(x, s): an
//! exponential family w(r)·s^{β-1}·exp_m(s^β) and a two-exponent power family
//! w(r)·(s^{p-1} + s^{𝔭-1}), both extended oddly to s < 0. The module also
//! evaluates the antiderivative F and the s-derivative ∂_s f in closed form,
//! and certifies the structural growth assumptions the variational arguments
//! rest on (superquadratic Ambrosetti-Rabinowitz lower bound, derivative
//! lower bound, growth thresholds against the Hardy constant).

use crate::error::Error;
use crate::geometry::AnnulusSpec;
use crate::stability::hardy_constant;
use crate::Result;

/// Largest exponent passed to exp before the evaluation is declared
/// saturated. Kept below ln(f64::MAX) ≈ 709.8 so algebraic prefactors cannot
/// push a finite modulus value to infinity.
pub(crate) const EXP_SATURATION: f64 = 690.0;

/// Positive weight w(r) multiplying the nonlinearity. Radial by construction,
/// so its θ-derivative vanishes identically.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Constant { c: f64 },
    /// Piecewise-linear interpolant of positive samples on increasing radii;
    /// constant extrapolation outside the sampled range.
    RadialTabulated { radii: Vec<f64>, values: Vec<f64> },
}

impl WeightSpec {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid("weight", format!("need a finite c > 0, got {c}")));
        }
        Ok(WeightSpec::Constant { c })
    }

    pub fn radial_tabulated(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(Error::invalid(
                "weight",
                format!(
                    "need matching sample arrays with at least 2 entries, got {} radii and {} values",
                    radii.len(),
                    values.len()
                ),
            ));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("weight", "radii must increase strictly"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("weight", "all weight samples must be finite and > 0"));
        }
        Ok(WeightSpec::RadialTabulated { radii, values })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            WeightSpec::Constant { c } => *c,
            WeightSpec::RadialTabulated { radii, values } => {
                if r <= radii[0] {
                    return values[0];
                }
                if r >= *radii.last().unwrap() {
                    return *values.last().unwrap();
                }
                let k = radii.partition_point(|x| *x <= r) - 1;
                let t = (r - radii[k]) / (radii[k + 1] - radii[k]);
                values[k] + t * (values[k + 1] - values[k])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum NonlinearityKind {
    Exponential { beta: f64, m: u32, weight: WeightSpec },
    Power { p: f64, pfrak: f64, weight: WeightSpec },
}

/// One of the two prototype families, validated at construction:
/// Exponential needs β ∈ (0, 2), m ≥ 1, β(m+1) > 2; Power needs 2 < p ≤ 𝔭.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySpec {
    pub(crate) kind: NonlinearityKind,
}

impl NonlinearitySpec {
    pub fn exponential(beta: f64, m: u32, weight: WeightSpec) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0 && beta < 2.0) {
            return Err(Error::invalid("beta", format!("need beta in (0, 2), got {beta}")));
        }
        if m < 1 {
            return Err(Error::invalid("m", "need m >= 1"));
        }
        let growth = beta * (m as f64 + 1.0);
        if !(growth > 2.0) {
            return Err(Error::invalid(
                "beta",
                format!("need beta(m+1) > 2, got beta = {beta}, m = {m}, beta(m+1) = {growth}"),
            ));
        }
        Ok(Self {
            kind: NonlinearityKind::Exponential { beta, m, weight },
        })
    }

    pub fn power(p: f64, pfrak: f64, weight: WeightSpec) -> Result<Self> {
        if !(p.is_finite() && p > 2.0) {
            return Err(Error::invalid("p", format!("need p > 2, got {p}")));
        }
        if !(pfrak.is_finite() && pfrak >= p) {
            return Err(Error::invalid("pfrak", format!("need pfrak >= p = {p}, got {pfrak}")));
        }
        Ok(Self {
            kind: NonlinearityKind::Power { p, pfrak, weight },
        })
    }

    pub fn weight(&self) -> &WeightSpec {
        match &self.kind {
            NonlinearityKind::Exponential { weight, .. } => weight,
            NonlinearityKind::Power { weight, .. } => weight,
        }
    }

    /// Superquadratic growth exponent: β(m+1) for Exponential, p for Power.
    /// Satisfies σ F(r, s) ≤ s f(r, s).
    pub fn sigma(&self) -> f64 {
        match &self.kind {
            NonlinearityKind::Exponential { beta, m, .. } => beta * (*m as f64 + 1.0),
            NonlinearityKind::Power { p, .. } => *p,
        }
    }

    /// Largest certified δ with s ∂_s f ≥ δ f: σ - 1 for both families.
    pub fn delta_certified(&self) -> f64 {
        self.sigma() - 1.0
    }

    /// Largest s for which f, F, ∂_s f all evaluate without saturation,
    /// shrunk by a safety margin.
    pub fn sample_ceiling(&self) -> f64 {
        match &self.kind {
            NonlinearityKind::Exponential { beta, .. } => {
                EXP_SATURATION.powf(1.0 / beta) * (1.0 - 1e-3)
            }
            NonlinearityKind::Power { pfrak, .. } => 1e300f64.powf(1.0 / (pfrak + 1.0)),
        }
    }
}

/// e^s with the first m Taylor terms removed: e^s − Σ_{i<m} s^i/i!.
///
/// For s below max(1, m) the subtraction cancels catastrophically, so the
/// tail Σ_{i≥m} s^i/i! is summed directly; all its terms are positive, which
/// keeps the relative error at the 1e-15 level everywhere. Above the
/// crossover the subtraction is well conditioned.
pub fn exp_m(m: u32, s: f64) -> f64 {
    assert!(s >= 0.0, "exp_m takes s >= 0, got {s}");
    if m == 0 {
        return s.exp();
    }
    if s < (m as f64).max(1.0) {
        // term = s^m / m!, built factor by factor to avoid overflow.
        let mut term = 1.0f64;
        for i in 1..=m {
            term *= s / i as f64;
        }
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut i = m;
        for _ in 0..10_000 {
            let new_sum = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - new_sum) + term;
            } else {
                comp += (term - new_sum) + sum;
            }
            sum = new_sum;
            i += 1;
            term *= s / i as f64;
            if term == 0.0 || term <= sum * 1e-18 {
                break;
            }
        }
        sum + comp
    } else {
        let mut partial = 0.0f64;
        let mut term = 1.0f64;
        for i in 0..m {
            partial += term;
            term *= s / (i as f64 + 1.0);
        }
        s.exp() - partial
    }
}

fn saturation_guard(s_abs: f64, exponent: f64) -> Result<()> {
    if exponent > EXP_SATURATION {
        return Err(Error::Saturation { s: s_abs, exponent });
    }
    Ok(())
}

/// f(r, s). Odd in s; 0 at s = 0 by continuity.
pub fn eval_f(spec: &NonlinearitySpec, r: f64, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let a = s.abs();
    let magnitude = match &spec.kind {
        NonlinearityKind::Exponential { beta, m, weight } => {
            let arg = a.powf(*beta);
            saturation_guard(a, arg)?;
            weight.eval(r) * a.powf(beta - 1.0) * exp_m(*m, arg)
        }
        NonlinearityKind::Power { p, pfrak, weight } => {
            weight.eval(r) * (a.powf(p - 1.0) + a.powf(pfrak - 1.0))
        }
    };
    Ok(s.signum() * magnitude)
}

/// F(r, s) = ∫_0^s f(r, t) dt. Even in s.
pub fn eval_primitive(spec: &NonlinearitySpec, r: f64, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let a = s.abs();
    match &spec.kind {
        NonlinearityKind::Exponential { beta, m, weight } => {
            let arg = a.powf(*beta);
            saturation_guard(a, arg)?;
            Ok(weight.eval(r) / beta * exp_m(*m + 1, arg))
        }
        NonlinearityKind::Power { p, pfrak, weight } => {
            Ok(weight.eval(r) * (a.powf(*p) / p + a.powf(*pfrak) / pfrak))
        }
    }
}

/// ∂_s f(r, s). Even in s; the value at s = 0 is the one-sided limit, which
/// the constructor invariants force to 0 (growth exponent above 2).
pub fn eval_dfds(spec: &NonlinearitySpec, r: f64, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let a = s.abs();
    match &spec.kind {
        NonlinearityKind::Exponential { beta, m, weight } => {
            let arg = a.powf(*beta);
            saturation_guard(a, arg)?;
            let first = (beta - 1.0) * a.powf(beta - 2.0) * exp_m(*m, arg);
            let second = beta * a.powf(2.0 * beta - 2.0) * exp_m(*m - 1, arg);
            Ok(weight.eval(r) * (first + second))
        }
        NonlinearityKind::Power { p, pfrak, weight } => Ok(weight.eval(r)
            * ((p - 1.0) * a.powf(p - 2.0) + (pfrak - 1.0) * a.powf(pfrak - 2.0))),
    }
}

/// Machine check of the structural growth assumptions over a log-spaced
/// sample of s values.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// Superquadratic exponent σ with σ F ≤ s f.
    pub sigma: f64,
    /// Certified derivative bound: s ∂_s f ≥ delta_max · f.
    pub delta_max: f64,
    /// Small-s exponent certificate; the certified bound is reported.
    pub mu: f64,
    /// Sampled infimum of s ∂_s f / f, for information.
    pub delta_sampled_inf: f64,
    /// (s, failing ratio) for every sample violating either bound beyond
    /// 1e-10 relative slack: s f / F against σ, or s ∂_s f / f against
    /// delta_max. Expected empty.
    pub sampled_violations: Vec<(f64, f64)>,
}

pub fn assumption_report(
    spec: &NonlinearitySpec,
    annulus: &AnnulusSpec,
    sample_count: usize,
) -> Result<AssumptionReport> {
    if sample_count < 100 {
        return Err(Error::invalid(
            "sample_count",
            format!("need at least 100 samples, got {sample_count}"),
        ));
    }
    let sigma = spec.sigma();
    let delta_max = spec.delta_certified();
    let r = 0.5 * (annulus.r_inner() + annulus.r_outer());
    let s_lo = 1e-6f64;
    let s_hi = spec.sample_ceiling();
    let log_lo = s_lo.ln();
    let log_step = (s_hi.ln() - log_lo) / (sample_count as f64 - 1.0);
    let mut violations = Vec::new();
    let mut delta_inf = f64::INFINITY;
    for k in 0..sample_count {
        let s = (log_lo + k as f64 * log_step).exp();
        let f = eval_f(spec, r, s)?;
        let big_f = eval_primitive(spec, r, s)?;
        let dfds = eval_dfds(spec, r, s)?;
        let sf = s * f;
        if sf - sigma * big_f < -1e-10 * sf.abs() {
            violations.push((s, sf / big_f));
        }
        let sdf = s * dfds;
        if sdf - delta_max * f < -1e-10 * sdf.abs() {
            violations.push((s, sdf / f));
        }
        if f > 0.0 {
            delta_inf = delta_inf.min(sdf / f);
        }
    }
    Ok(AssumptionReport {
        sigma,
        delta_max,
        mu: delta_max,
        delta_sampled_inf: delta_inf,
        sampled_violations: violations,
    })
}

/// Outcome of the growth-exponent threshold test against the Hardy constant.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdCheck {
    pub hardy: f64,
    /// 2 + 2N/H.
    pub required: f64,
    /// The family's growth exponent: β(m+1) or p.
    pub actual: f64,
    pub satisfied: bool,
    /// Strict comparison (λ = 0) versus non-strict (λ > 0).
    pub strict: bool,
}

/// Checks the symmetry-breaking growth threshold: the exponent must reach
/// 2 + 2N/H, strictly when λ = 0.
pub fn threshold_check(spec: &NonlinearitySpec, annulus: &AnnulusSpec) -> ThresholdCheck {
    let hardy = hardy_constant(annulus);
    let required = 2.0 + 2.0 * annulus.dim() as f64 / hardy;
    let actual = spec.sigma();
    let strict = annulus.lambda() == 0.0;
    let satisfied = if strict { actual > required } else { actual >= required };
    ThresholdCheck {
        hardy,
        required,
        actual,
        satisfied,
        strict,
    }
}
