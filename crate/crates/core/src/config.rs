//! Tracker configuration.
//!
//! Values are kept in `f64` regardless of the scalar type the tracker runs
//! in. Parameters that can be derived from the input accept the string
//! `"auto"` in JSON.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoTag {
    #[serde(rename = "auto")]
    Auto,
}

/// A parameter that is either given explicitly or derived from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting<T> {
    Auto(AutoTag),
    Fixed(T),
}

impl<T> Setting<T> {
    pub const AUTO: Self = Setting::Auto(AutoTag::Auto);

    pub fn fixed(&self) -> Option<&T> {
        match self {
            Setting::Fixed(v) => Some(v),
            Setting::Auto(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    #[default]
    Murty,
    Gibbs,
}

/// How the mitosis columns of the extended cost matrix are priced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MitosisCosts {
    /// Erlang life-cycle prior for objects of known age.
    #[default]
    Erlang,
    /// Every split is free (c^M = 0 ablation).
    Zero,
    /// Splits are never allowed.
    Forbidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MotionModel {
    /// Objects are matched against the detections' motion-warped densities
    /// and take over the detection centroid density on update.
    #[default]
    Implicit,
    /// Position/velocity prediction with a Kalman position update; matching
    /// uses the detection centroid densities only.
    Kalman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    pub p_detect: f64,
    pub p_birth: f64,
    pub a_max: usize,
    pub h_max: usize,
    pub erlang_alpha: Setting<u32>,
    pub erlang_rate: Setting<f64>,
    pub mean_motion_cov: Setting<[[f64; 2]; 2]>,
    pub gate_mahalanobis_sq: f64,
    pub clamp_eps: f64,
    pub prune_weight_delta: f64,
    pub existence_floor: f64,
    pub min_track_len: usize,
    pub sampler: Sampler,
    pub gibbs_samples: usize,
    pub rng_seed: u64,
    pub mitosis_costs: MitosisCosts,
    pub motion_model: MotionModel,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            p_detect: 0.9,
            p_birth: 0.1,
            a_max: 7,
            h_max: 150,
            erlang_alpha: Setting::AUTO,
            erlang_rate: Setting::AUTO,
            mean_motion_cov: Setting::AUTO,
            gate_mahalanobis_sq: 25.0,
            clamp_eps: 1e-12,
            prune_weight_delta: 20.0,
            existence_floor: 1e-3,
            min_track_len: 2,
            sampler: Sampler::Murty,
            gibbs_samples: 1000,
            rng_seed: 0,
            mitosis_costs: MitosisCosts::Erlang,
            motion_model: MotionModel::Implicit,
        }
    }
}

fn unit_interval(name: &str, v: f64, open_low: bool, open_high: bool) -> Result<()> {
    let low_ok = if open_low { v > 0.0 } else { v >= 0.0 };
    let high_ok = if open_high { v < 1.0 } else { v <= 1.0 };
    if v.is_finite() && low_ok && high_ok {
        Ok(())
    } else {
        Err(Error::DomainError(format!("{name} = {v}")))
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        unit_interval("p_detect", self.p_detect, true, true)?;
        unit_interval("p_birth", self.p_birth, true, false)?;
        unit_interval("existence_floor", self.existence_floor, false, true)?;
        unit_interval("clamp_eps", self.clamp_eps, true, true)?;
        if self.a_max == 0 || self.h_max == 0 || self.gibbs_samples == 0 {
            return Err(Error::DomainError(
                "a_max, h_max and gibbs_samples must be positive".into(),
            ));
        }
        for (name, v) in [
            ("gate_mahalanobis_sq", self.gate_mahalanobis_sq),
            ("prune_weight_delta", self.prune_weight_delta),
        ] {
            if !(v > 0.0) {
                return Err(Error::DomainError(format!("{name} = {v}")));
            }
        }
        if let Setting::Fixed(0) = self.erlang_alpha {
            return Err(Error::DomainError("erlang_alpha = 0".into()));
        }
        if let Setting::Fixed(r) = self.erlang_rate {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::DomainError(format!("erlang_rate = {r}")));
            }
        }
        if let Setting::Fixed(m) = self.mean_motion_cov {
            if !crate::gaussian::is_symmetric_psd(&m) {
                return Err(Error::NotPsd(format!("mean_motion_cov = {m:?}")));
            }
        }
        Ok(())
    }

    /// Replaces every `auto` setting. `n_frames` is the sequence length K;
    /// the Erlang parameters default to α = K, β = 1/K.
    pub fn resolve(&self, n_frames: usize, mean_motion_cov: [[f64; 2]; 2]) -> Self {
        let k = n_frames.max(1);
        let mut out = self.clone();
        if out.erlang_alpha.fixed().is_none() {
            out.erlang_alpha = Setting::Fixed(k.min(u32::MAX as usize) as u32);
        }
        if out.erlang_rate.fixed().is_none() {
            out.erlang_rate = Setting::Fixed(1.0 / k as f64);
        }
        if out.mean_motion_cov.fixed().is_none() {
            out.mean_motion_cov = Setting::Fixed(mean_motion_cov);
        }
        out
    }

    pub fn is_resolved(&self) -> bool {
        self.erlang_alpha.fixed().is_some()
            && self.erlang_rate.fixed().is_some()
            && self.mean_motion_cov.fixed().is_some()
    }
}
