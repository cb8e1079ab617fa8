//! Stochastic and kinematic sub-models used by the vertex handlers.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

use crate::geo::GeoPoint;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("speed must be positive, got {0}")]
    NonPositiveSpeed(f64),
    #[error("average wait must be positive, got {0}")]
    NonPositiveWait(f64),
    #[error("abandonment fraction must lie in [0, 1], got {0}")]
    FractionOutOfRange(f64),
    #[error("{what} mean must be positive, got {mean}")]
    NonPositiveMean { what: &'static str, mean: f64 },
    #[error("service mean {mean} must exceed the minimum {min}")]
    ServiceMeanBelowMinimum { min: f64, mean: f64 },
}

/// Seconds needed to cover the straight-line distance at `speed` m/s.
pub fn driving_time(from: &GeoPoint, to: &GeoPoint, speed: f64) -> Result<f64, ModelError> {
    if !(speed > 0.0) {
        return Err(ModelError::NonPositiveSpeed(speed));
    }
    Ok(from.distance(to) / speed)
}

/// Abandonment rate per second from the abandoned fraction and the average
/// wait: `theta = P{Ab} / E[W]`.
pub fn estimate_theta(abandon_fraction: f64, avg_wait: f64) -> Result<f64, ModelError> {
    if !(0.0..=1.0).contains(&abandon_fraction) {
        return Err(ModelError::FractionOutOfRange(abandon_fraction));
    }
    if !(avg_wait > 0.0) {
        return Err(ModelError::NonPositiveWait(avg_wait));
    }
    Ok(abandon_fraction / avg_wait)
}

fn exponential<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    let unit: f64 = Exp1.sample(rng);
    unit * mean
}

fn check_mean(what: &'static str, mean: f64) -> Result<(), ModelError> {
    if mean > 0.0 {
        Ok(())
    } else {
        Err(ModelError::NonPositiveMean { what, mean })
    }
}

/// Exponential patience with the given mean.
pub fn sample_patience<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<f64, ModelError> {
    check_mean("patience", mean)?;
    Ok(exponential(mean, rng))
}

/// Shifted exponential: `min + Exp(mean - min)`.
pub fn sample_service<R: Rng + ?Sized>(min: f64, mean: f64, rng: &mut R) -> Result<f64, ModelError> {
    if !(mean > min) || min < 0.0 {
        return Err(ModelError::ServiceMeanBelowMinimum { min, mean });
    }
    Ok(min + exponential(mean - min, rng))
}

/// Exponential on-scene time with the given mean.
pub fn sample_on_scene<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<f64, ModelError> {
    check_mean("on-scene", mean)?;
    Ok(exponential(mean, rng))
}

/// Parameters of the per-call durations that are drawn when a call is
/// generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationModel {
    pub service_min: f64,
    pub service_mean: f64,
    pub patience_mean: f64,
    pub on_scene_mean: f64,
}

impl Default for DurationModel {
    fn default() -> Self {
        DurationModel {
            service_min: 4.0,
            service_mean: 204.0,
            patience_mean: 49.36,
            on_scene_mean: 1200.0,
        }
    }
}

/// Durations attached to one call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledDurations {
    pub service: f64,
    pub patience: f64,
    pub on_scene: f64,
}

impl DurationModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.service_mean > self.service_min) || self.service_min < 0.0 {
            return Err(ModelError::ServiceMeanBelowMinimum {
                min: self.service_min,
                mean: self.service_mean,
            });
        }
        check_mean("patience", self.patience_mean)?;
        check_mean("on-scene", self.on_scene_mean)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SampledDurations, ModelError> {
        Ok(SampledDurations {
            service: sample_service(self.service_min, self.service_mean, rng)?,
            patience: sample_patience(self.patience_mean, rng)?,
            on_scene: sample_on_scene(self.on_scene_mean, rng)?,
        })
    }
}
