//! Two-point attachment geometry of the virtual ankle muscles.
//!
//! Each muscle runs from a point on the shank (`r_origin` from the joint
//! centre) to a point on the foot (`r_insertion` from the joint centre). The
//! included angle between the two segments is `phi_neutral + sigma * theta`,
//! with `sigma = -1` for the anterior muscle and `+1` for the posterior one, so
//! dorsiflexion (positive `theta`) shortens the anterior muscle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Anterior,
    Posterior,
}

impl Side {
    /// Sign of the included-angle change per unit dorsiflexion.
    pub fn sigma(self) -> f64 {
        match self {
            Side::Anterior => -1.0,
            Side::Posterior => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttachmentGeometry {
    /// Origin distance from the joint centre along the shank, m.
    pub r_origin: f64,
    /// Insertion distance from the joint centre along the foot, m.
    pub r_insertion: f64,
    /// Included angle at `theta = 0`, rad.
    pub phi_neutral: f64,
    pub side: Side,
}

impl AttachmentGeometry {
    pub fn anterior_default() -> Self {
        Self {
            r_origin: 0.30,
            r_insertion: 0.10,
            phi_neutral: 80f64.to_radians(),
            side: Side::Anterior,
        }
    }

    pub fn posterior_default() -> Self {
        Self {
            r_origin: 0.35,
            r_insertion: 0.05,
            phi_neutral: 100f64.to_radians(),
            side: Side::Posterior,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_origin > 0.0 && self.r_origin.is_finite()) {
            return Err(Error::domain(format!("r_origin must be > 0, got {}", self.r_origin)));
        }
        if !(self.r_insertion > 0.0 && self.r_insertion.is_finite()) {
            return Err(Error::domain(format!(
                "r_insertion must be > 0, got {}",
                self.r_insertion
            )));
        }
        if !(self.phi_neutral > 0.0 && self.phi_neutral < std::f64::consts::PI) {
            return Err(Error::domain(format!(
                "phi_neutral must lie in (0, pi), got {}",
                self.phi_neutral
            )));
        }
        Ok(())
    }

    pub fn included_angle(&self, theta: f64) -> Result<f64> {
        let phi = self.phi_neutral + self.side.sigma() * theta;
        if phi > 0.0 && phi < std::f64::consts::PI {
            Ok(phi)
        } else {
            Err(Error::GeometryRange { theta, phi })
        }
    }
}

/// Law-of-cosines length for an included angle, without range checks.
pub(crate) fn length_at_angle(phi: f64, g: &AttachmentGeometry) -> f64 {
    let (ro, ri) = (g.r_origin, g.r_insertion);
    (ro * ro + ri * ri - 2.0 * ro * ri * phi.cos()).sqrt()
}

/// Muscle-tendon length at joint angle `theta`.
pub fn muscle_length(theta: f64, g: &AttachmentGeometry) -> Result<f64> {
    let phi = g.included_angle(theta)?;
    Ok(length_at_angle(phi, g))
}

/// Moment arm `|dL/dtheta|` at joint angle `theta`.
pub fn moment_arm(theta: f64, g: &AttachmentGeometry) -> Result<f64> {
    let phi = g.included_angle(theta)?;
    let l = length_at_angle(phi, g);
    Ok(g.r_origin * g.r_insertion * phi.sin() / l)
}

/// Net ankle torque, dorsiflexion positive. The anterior muscle dorsiflexes.
pub fn ankle_torque(
    f_anterior: f64,
    f_posterior: f64,
    theta: f64,
    g_a: &AttachmentGeometry,
    g_p: &AttachmentGeometry,
) -> Result<f64> {
    if !(f_anterior >= 0.0) || !(f_posterior >= 0.0) {
        return Err(Error::domain(format!(
            "muscle forces must be >= 0, got anterior {f_anterior}, posterior {f_posterior}"
        )));
    }
    Ok(moment_arm(theta, g_a)? * f_anterior - moment_arm(theta, g_p)? * f_posterior)
}
