//! Flat TOML run configuration. Every key lives at the top level, every key
//! has a benchmark default, and validation re-checks the solver-level
//! invariants up front so failures carry field-precise messages instead of
//! surfacing mid-run.

use std::fmt::Write as _;

use annulus_core::conevar::MountainPassOptions;
use annulus_core::geometry::AnnulusSpec;
use annulus_core::nonlinearity::{NonlinearitySpec, WeightSpec};
use annulus_core::radial::RadialOptions;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    // Domain: annulus {r0 < |x| < r1} in dimension `dim`, operator -Δ + λ.
    pub dim: u32,
    pub r0: f64,
    pub r1: f64,
    pub lambda: f64,
    /// Marks r1 as a truncation radius standing in for an unbounded outer
    /// region; reports then carry a warning (λ > 0 controls the tail).
    pub truncated: bool,

    // Nonlinearity: "power" (needs p, optional pfrak >= p) or "exponential"
    // (needs beta, m). `weight` is the constant spatial factor w(x).
    pub family: String,
    pub p: Option<f64>,
    pub pfrak: Option<f64>,
    pub beta: Option<f64>,
    pub m: Option<u32>,
    pub weight: f64,

    // Tensor grid for the 2-d pipelines.
    pub nr: usize,
    pub ntheta: usize,

    // Radial solver.
    pub radial_nodes: usize,
    pub radial_tol: f64,
    pub shoot_tol: f64,
    pub max_newton: usize,
    pub bisect_iters: usize,

    // Mountain-pass search.
    pub mp_tol: f64,
    pub mp_max_iters: usize,
    pub path_points: usize,
    pub tau0: f64,

    // Stability ladders: exponents for the indicator table, perturbation
    // amplitudes for the path-margin table.
    pub p_ladder: Vec<f64>,
    pub tau_ladder: Vec<f64>,

    // Integrability probe: exponents (default ladder 0.1..=1.6 when empty)
    // and samples per exponent.
    pub alpha_ladder: Vec<f64>,
    pub probe_samples: usize,

    pub seed: u64,

    // Sweep fan-out: rerun `sweep_command` once per value of `sweep_key`.
    pub sweep_command: Option<String>,
    pub sweep_key: Option<String>,
    pub sweep_values: Vec<f64>,

    // Outputs.
    pub out_dir: Option<String>,
    pub formats: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 5,
            r0: 2.0,
            r1: 3.0,
            lambda: 1.0,
            truncated: false,
            family: "power".into(),
            p: Some(4.0),
            pfrak: None,
            beta: None,
            m: None,
            weight: 1.0,
            nr: 64,
            ntheta: 32,
            radial_nodes: 2001,
            radial_tol: 1e-9,
            shoot_tol: 1e-10,
            max_newton: 60,
            bisect_iters: 80,
            mp_tol: 1e-6,
            mp_max_iters: 5000,
            path_points: 40,
            tau0: 0.05,
            p_ladder: Vec::new(),
            tau_ladder: Vec::new(),
            alpha_ladder: Vec::new(),
            probe_samples: 64,
            seed: 42,
            sweep_command: None,
            sweep_key: None,
            sweep_values: Vec::new(),
            out_dir: None,
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

/// Scalar keys the sweep subcommand may fan out.
pub const SWEEP_KEYS: &[&str] = &[
    "p",
    "pfrak",
    "beta",
    "lambda",
    "r0",
    "r1",
    "weight",
    "tau0",
    "mp_tol",
    "radial_tol",
    "shoot_tol",
    "dim",
    "m",
    "nr",
    "ntheta",
    "radial_nodes",
    "probe_samples",
    "path_points",
    "mp_max_iters",
    "seed",
];

impl RunConfig {
    /// Re-validate every solver-level invariant, collecting all offending
    /// fields rather than stopping at the first.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if self.dim < 3 {
            errs.push(format!("dim: need at least 3, got {}", self.dim));
        }
        if !(self.r0.is_finite() && self.r0 > 0.0) {
            errs.push(format!("r0: need a finite inner radius > 0, got {}", self.r0));
        }
        if !(self.r1.is_finite() && self.r1 > self.r0) {
            errs.push(format!(
                "r1: need r0 < r1, got r0 = {}, r1 = {}",
                self.r0, self.r1
            ));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            errs.push(format!("lambda: need a finite value >= 0, got {}", self.lambda));
        }
        match self.family.as_str() {
            "power" => {
                match self.p {
                    None => errs.push("p: required for family = \"power\"".into()),
                    Some(p) if !(p.is_finite() && p > 2.0) => {
                        errs.push(format!("p: need p > 2, got {p}"));
                    }
                    _ => {}
                }
                if let (Some(p), Some(pf)) = (self.p, self.pfrak) {
                    if !(pf.is_finite() && pf >= p) {
                        errs.push(format!("pfrak: need pfrak >= p = {p}, got {pf}"));
                    }
                }
                if self.beta.is_some() {
                    errs.push("beta: set only for family = \"exponential\"".into());
                }
                if self.m.is_some() {
                    errs.push("m: set only for family = \"exponential\"".into());
                }
            }
            "exponential" => {
                match self.beta {
                    None => errs.push("beta: required for family = \"exponential\"".into()),
                    Some(b) if !(b.is_finite() && b > 0.0 && b < 2.0) => {
                        errs.push(format!("beta: need beta in (0, 2), got {b}"));
                    }
                    _ => {}
                }
                match self.m {
                    None => errs.push("m: required for family = \"exponential\"".into()),
                    Some(m) if m < 1 => errs.push(format!("m: need m >= 1, got {m}")),
                    _ => {}
                }
                if let (Some(b), Some(m)) = (self.beta, self.m) {
                    if b.is_finite() && b > 0.0 && !(b * (m as f64 + 1.0) > 2.0) {
                        errs.push(format!(
                            "beta: need beta(m+1) > 2, got beta = {b}, m = {m}"
                        ));
                    }
                }
                if self.p.is_some() {
                    errs.push("p: set only for family = \"power\"".into());
                }
                if self.pfrak.is_some() {
                    errs.push("pfrak: set only for family = \"power\"".into());
                }
                if !self.p_ladder.is_empty() {
                    errs.push("p_ladder: set only for family = \"power\"".into());
                }
            }
            other => errs.push(format!(
                "family: expected \"power\" or \"exponential\", got \"{other}\""
            )),
        }
        if !(self.weight.is_finite() && self.weight > 0.0) {
            errs.push(format!("weight: need a finite value > 0, got {}", self.weight));
        }
        if self.nr < 8 {
            errs.push(format!("nr: need at least 8, got {}", self.nr));
        }
        if self.ntheta < 8 {
            errs.push(format!("ntheta: need at least 8, got {}", self.ntheta));
        }
        if self.radial_nodes < 9 {
            errs.push(format!("radial_nodes: need at least 9, got {}", self.radial_nodes));
        }
        for (name, value) in [
            ("radial_tol", self.radial_tol),
            ("shoot_tol", self.shoot_tol),
            ("mp_tol", self.mp_tol),
        ] {
            if !(value.is_finite() && value > 0.0) {
                errs.push(format!("{name}: need a finite tolerance > 0, got {value}"));
            }
        }
        for (name, value) in [
            ("max_newton", self.max_newton),
            ("bisect_iters", self.bisect_iters),
            ("mp_max_iters", self.mp_max_iters),
        ] {
            if value < 1 {
                errs.push(format!("{name}: need at least 1, got {value}"));
            }
        }
        if self.path_points < 4 {
            errs.push(format!("path_points: need at least 4, got {}", self.path_points));
        }
        if self.dim >= 3 {
            // The angular perturbation 1 + τ(1 − N sin²θ) stays positive and
            // θ-nonincreasing only for τ < 1/(N−1).
            let bound = 1.0 / (self.dim as f64 - 1.0);
            if !(self.tau0.is_finite() && self.tau0 > 0.0 && self.tau0 < bound) {
                errs.push(format!(
                    "tau0: need tau0 in (0, 1/(dim-1)) = (0, {bound:.6}), got {}",
                    self.tau0
                ));
            }
            for (i, tau) in self.tau_ladder.iter().enumerate() {
                if !(tau.is_finite() && *tau >= 0.0 && *tau < bound) {
                    errs.push(format!(
                        "tau_ladder[{i}]: need a value in [0, 1/(dim-1)) = [0, {bound:.6}), got {tau}"
                    ));
                }
            }
        }
        for (i, p) in self.p_ladder.iter().enumerate() {
            if !(p.is_finite() && *p > 2.0) {
                errs.push(format!("p_ladder[{i}]: need p > 2, got {p}"));
            }
        }
        for (i, alpha) in self.alpha_ladder.iter().enumerate() {
            if !(alpha.is_finite() && *alpha > 0.0) {
                errs.push(format!("alpha_ladder[{i}]: need alpha > 0, got {alpha}"));
            }
        }
        if self.probe_samples < 10 {
            errs.push(format!(
                "probe_samples: need at least 10, got {}",
                self.probe_samples
            ));
        }
        if let Some(cmd) = &self.sweep_command {
            if !matches!(cmd.as_str(), "radial" | "stability" | "mp2d" | "tmprobe") {
                errs.push(format!(
                    "sweep_command: expected one of radial|stability|mp2d|tmprobe, got \"{cmd}\""
                ));
            }
        }
        if let Some(key) = &self.sweep_key {
            if !SWEEP_KEYS.contains(&key.as_str()) {
                errs.push(format!(
                    "sweep_key: \"{key}\" is not a sweepable scalar; choose one of {}",
                    SWEEP_KEYS.join(", ")
                ));
            }
        }
        for (i, v) in self.sweep_values.iter().enumerate() {
            if !v.is_finite() {
                errs.push(format!("sweep_values[{i}]: need a finite value, got {v}"));
            }
        }
        for (i, f) in self.formats.iter().enumerate() {
            if !matches!(f.as_str(), "csv" | "json") {
                errs.push(format!(
                    "formats[{i}]: expected \"csv\" or \"json\", got \"{f}\""
                ));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Assemble the validated domain. Call only after `validate`.
    pub fn annulus(&self) -> AnnulusSpec {
        AnnulusSpec::new(self.dim, self.r0, self.r1, self.lambda)
            .expect("config was validated")
    }

    /// Assemble the validated nonlinearity. Call only after `validate`.
    pub fn nonlinearity(&self) -> NonlinearitySpec {
        let weight = WeightSpec::constant(self.weight).expect("config was validated");
        match self.family.as_str() {
            "power" => {
                let p = self.p.expect("config was validated");
                NonlinearitySpec::power(p, self.pfrak.unwrap_or(p), weight)
            }
            _ => NonlinearitySpec::exponential(
                self.beta.expect("config was validated"),
                self.m.expect("config was validated"),
                weight,
            ),
        }
        .expect("config was validated")
    }

    /// Pure power p = 𝔭 at a ladder exponent, sharing the configured weight.
    pub fn pure_power(&self, p: f64) -> annulus_core::Result<NonlinearitySpec> {
        NonlinearitySpec::power(p, p, WeightSpec::constant(self.weight)?)
    }

    pub fn radial_options(&self) -> RadialOptions {
        RadialOptions {
            tol: self.radial_tol,
            shoot_tol: self.shoot_tol,
            max_newton: self.max_newton,
            bisect_iters: self.bisect_iters,
        }
    }

    pub fn mp_options(&self) -> MountainPassOptions {
        MountainPassOptions {
            tol: self.mp_tol,
            max_iters: self.mp_max_iters,
            path_points: self.path_points,
            tau0: self.tau0,
            radial_nodes: self.radial_nodes,
        }
    }

    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }

    /// Report warnings implied by the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.truncated {
            let mut msg = format!(
                "r1 = {} is a truncation radius for an unbounded outer region",
                self.r1
            );
            if self.lambda > 0.0 {
                let _ = write!(msg, "; lambda = {} gives exponential tail decay", self.lambda);
            } else {
                msg.push_str("; lambda = 0 provides no decay control for the truncation error");
            }
            w.push(msg);
        }
        w
    }
}

/// Overwrite the swept scalar in a per-entry copy of the config. Integer keys
/// reject fractional or negative values.
pub fn apply_sweep_value(cfg: &mut RunConfig, key: &str, value: f64) -> Result<(), String> {
    let as_count = |name: &str| -> Result<u64, String> {
        if value.fract() != 0.0 || value < 0.0 || value > u64::MAX as f64 {
            return Err(format!(
                "sweep_values: key \"{name}\" takes nonnegative integers, got {value}"
            ));
        }
        Ok(value as u64)
    };
    match key {
        "p" => cfg.p = Some(value),
        "pfrak" => cfg.pfrak = Some(value),
        "beta" => cfg.beta = Some(value),
        "lambda" => cfg.lambda = value,
        "r0" => cfg.r0 = value,
        "r1" => cfg.r1 = value,
        "weight" => cfg.weight = value,
        "tau0" => cfg.tau0 = value,
        "mp_tol" => cfg.mp_tol = value,
        "radial_tol" => cfg.radial_tol = value,
        "shoot_tol" => cfg.shoot_tol = value,
        "dim" => cfg.dim = as_count(key)? as u32,
        "m" => cfg.m = Some(as_count(key)? as u32),
        "nr" => cfg.nr = as_count(key)? as usize,
        "ntheta" => cfg.ntheta = as_count(key)? as usize,
        "radial_nodes" => cfg.radial_nodes = as_count(key)? as usize,
        "probe_samples" => cfg.probe_samples = as_count(key)? as usize,
        "path_points" => cfg.path_points = as_count(key)? as usize,
        "mp_max_iters" => cfg.mp_max_iters = as_count(key)? as usize,
        "seed" => cfg.seed = as_count(key)?,
        other => {
            return Err(format!(
                "sweep_key: \"{other}\" is not a sweepable scalar; choose one of {}",
                SWEEP_KEYS.join(", ")
            ))
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_benchmark() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.dim, 5);
        assert_eq!((cfg.r0, cfg.r1, cfg.lambda), (2.0, 3.0, 1.0));
        assert_eq!(cfg.p, Some(4.0));
        let annulus = cfg.annulus();
        assert_eq!(annulus.dim(), 5);
        let _ = cfg.nonlinearity();
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let err = toml::from_str::<RunConfig>("rr0 = 2.0").unwrap_err();
        assert!(err.to_string().contains("rr0"), "{err}");
    }

    #[test]
    fn swapped_radii_name_the_field() {
        let cfg: RunConfig = toml::from_str("r0 = 3.0\nr1 = 2.0").unwrap();
        let errs = cfg.validate().unwrap_err();
        assert!(errs.iter().any(|e| e.starts_with("r1:")), "{errs:?}");
    }

    #[test]
    fn cross_family_keys_are_rejected() {
        let cfg: RunConfig =
            toml::from_str("family = \"exponential\"\nbeta = 1.5\nm = 1\np = 4.0").unwrap();
        let errs = cfg.validate().unwrap_err();
        assert!(errs.iter().any(|e| e.starts_with("p:")), "{errs:?}");
    }

    #[test]
    fn exponential_growth_threshold_checked() {
        let cfg: RunConfig = toml::from_str(
            "family = \"exponential\"\nbeta = 0.5\nm = 1\np = 4.0\npfrak = 4.0",
        )
        .unwrap();
        let errs = cfg.validate().unwrap_err();
        assert!(errs.iter().any(|e| e.contains("beta(m+1)")), "{errs:?}");
    }

    #[test]
    fn validation_collects_multiple_errors() {
        let cfg: RunConfig =
            toml::from_str("dim = 2\nr0 = -1.0\nnr = 4\nprobe_samples = 3").unwrap();
        let errs = cfg.validate().unwrap_err();
        assert!(errs.len() >= 4, "{errs:?}");
    }

    #[test]
    fn tau_ladder_bound_depends_on_dim() {
        let cfg: RunConfig = toml::from_str("tau_ladder = [0.02, 0.26]").unwrap();
        // dim = 5 restricts tau to [0, 0.25).
        let errs = cfg.validate().unwrap_err();
        assert!(errs.iter().any(|e| e.starts_with("tau_ladder[1]:")), "{errs:?}");
    }

    #[test]
    fn sweep_integer_keys_reject_fractions() {
        let mut cfg = RunConfig::default();
        let err = apply_sweep_value(&mut cfg, "nr", 2.5).unwrap_err();
        assert!(err.contains("nr"), "{err}");
        apply_sweep_value(&mut cfg, "nr", 48.0).unwrap();
        assert_eq!(cfg.nr, 48);
    }

    #[test]
    fn truncated_config_warns() {
        let cfg: RunConfig = toml::from_str("truncated = true").unwrap();
        let warnings = cfg.warnings();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("truncation"), "{warnings:?}");
    }
}
