//! Array gain model for sector panels and UE arrays.
//!
//! Elements are isotropic; all directivity comes from the azimuth array
//! factor of a uniform linear array plus a fixed elevation gain equal to the
//! peak of the elevation array. Angles are relative to the array boresight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{db_to_lin, lin_to_db};

/// Gain behind a sector panel, relative to its peak.
pub const BACK_LOBE_REL_DB: f64 = -30.0;
/// Gain of the broad beam outside its arc, relative to the steered peak.
pub const BROAD_FLOOR_REL_DB: f64 = -30.0;
/// Lowest sidelobe level reported inside the front hemisphere.
pub const SIDELOBE_FLOOR_REL_DB: f64 = -50.0;
/// Default broad-beam loss relative to a steered beam.
pub const DEFAULT_BROAD_LOSS_DB: f64 = -8.0;

fn default_spacing() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_azimuth: u32,
    pub n_elevation: u32,
    /// Element spacing in wavelengths.
    #[serde(default = "default_spacing")]
    pub element_spacing: f64,
}

impl ArrayGeometry {
    pub const fn new(n_azimuth: u32, n_elevation: u32) -> Self {
        ArrayGeometry {
            n_azimuth,
            n_elevation,
            element_spacing: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_azimuth == 0 || self.n_elevation == 0 {
            return Err(Error::invalid("array element counts must be >= 1"));
        }
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return Err(Error::invalid("element spacing must be > 0"));
        }
        Ok(())
    }

    pub fn elements(&self) -> u32 {
        self.n_azimuth * self.n_elevation
    }

    /// Peak azimuth array gain, `10 log10(n_azimuth)`.
    pub fn peak_azimuth_gain_db(&self) -> f64 {
        lin_to_db(self.n_azimuth as f64)
    }

    /// Normalized power array factor in `[0, 1]` for a direction-cosine
    /// difference `u = sin(target) - sin(steer)`.
    pub fn array_factor(&self, u: f64) -> f64 {
        let n = self.n_azimuth as f64;
        let half_phase = std::f64::consts::PI * self.element_spacing * u;
        let den = half_phase.sin();
        if den.abs() < 1e-12 {
            return 1.0;
        }
        let ratio = (n * half_phase).sin() / (n * den);
        ratio * ratio
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BeamConfig {
    /// Constant-phase-offset beam steered to `steer_deg` off boresight.
    Steered { steer_deg: f64 },
    /// Fixed flat beam covering `±half_arc_deg` at `loss_db` below peak.
    Broad { loss_db: f64, half_arc_deg: f64 },
}

impl BeamConfig {
    pub fn steered(steer_deg: f64) -> Self {
        BeamConfig::Steered { steer_deg }
    }

    pub fn broad(loss_db: f64, half_arc_deg: f64) -> Self {
        BeamConfig::Broad {
            loss_db,
            half_arc_deg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let BeamConfig::Broad {
            loss_db,
            half_arc_deg,
        } = *self
        {
            if !(loss_db <= 0.0) {
                return Err(Error::invalid(format!(
                    "broad beam loss must be <= 0 dB, got {loss_db}"
                )));
            }
            if !(half_arc_deg > 0.0 && half_arc_deg <= 180.0) {
                return Err(Error::invalid(format!(
                    "broad beam half arc must lie in (0, 180], got {half_arc_deg}"
                )));
            }
        }
        Ok(())
    }
}

/// Beam reduced to what the pattern evaluation needs; see [`BeamConfig::shape`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamShape {
    Steered { sin_steer: f64 },
    Broad { loss_lin: f64, cos_half_arc: f64 },
}

impl BeamConfig {
    pub fn shape(&self) -> BeamShape {
        match *self {
            BeamConfig::Steered { steer_deg } => BeamShape::Steered {
                sin_steer: steer_deg.to_radians().sin(),
            },
            BeamConfig::Broad {
                loss_db,
                half_arc_deg,
            } => BeamShape::Broad {
                loss_lin: db_to_lin(loss_db),
                cos_half_arc: half_arc_deg.to_radians().cos(),
            },
        }
    }
}

/// Linear azimuth gain toward a target at offset angle `(cos, sin)` from
/// boresight. Same model as [`azimuth_gain_db`].
#[inline]
pub fn pattern_lin(arr: &ArrayGeometry, shape: &BeamShape, cos_off: f64, sin_off: f64) -> f64 {
    let peak = arr.n_azimuth as f64;
    match *shape {
        BeamShape::Steered { sin_steer } => {
            if cos_off < 0.0 {
                return peak * db_to_lin(BACK_LOBE_REL_DB);
            }
            let af = arr.array_factor(sin_off - sin_steer);
            peak * af.max(SIDELOBE_FLOOR_LIN)
        }
        BeamShape::Broad {
            loss_lin,
            cos_half_arc,
        } => {
            if cos_off >= cos_half_arc - 1e-12 {
                peak * loss_lin
            } else {
                peak * db_to_lin(BROAD_FLOOR_REL_DB)
            }
        }
    }
}

const SIDELOBE_FLOOR_LIN: f64 = 1e-5;

/// Azimuth gain (dB) toward `target_deg`, both angles relative to boresight.
pub fn azimuth_gain_db(arr: &ArrayGeometry, beam: &BeamConfig, target_deg: f64) -> f64 {
    let t = crate::units::wrap_deg(target_deg).to_radians();
    lin_to_db(pattern_lin(arr, &beam.shape(), t.cos(), t.sin()))
}

/// Fixed elevation gain, `10 log10(n_elevation)`.
pub fn elevation_gain_db(arr: &ArrayGeometry) -> f64 {
    lin_to_db(arr.n_elevation as f64)
}

/// Total conducted transmit power with one PA per element.
pub fn tx_power_dbm(arr: &ArrayGeometry, per_pa_dbm: f64) -> f64 {
    per_pa_dbm + lin_to_db(arr.elements() as f64)
}

/// Beamforming loss factor of the access beam relative to a steered beam.
pub fn bf_loss_factor(beam: &BeamConfig) -> f64 {
    match *beam {
        BeamConfig::Steered { .. } => 1.0,
        BeamConfig::Broad { loss_db, .. } => db_to_lin(loss_db),
    }
}
