//! Berry and Wilczek–Zee geometry of band subspaces over the field sphere.
//!
//! Two independent Chern-number schemes are provided:
//!
//! * finite differences of edge-integrated connections on smoothly gauged
//!   frames ([`smooth_gauge_states`] → [`connection_discrete`] →
//!   [`curvature_discrete`] → [`chern_number`]), uniform meshes only;
//! * overlap-determinant link variables ([`chern_number_link_variable`]),
//!   gauge free and exact after rounding, on any mesh.
//!
//! Chern numbers are reported in two normalizations. The primary one divides
//! the total flux by 4π, so the Zeeman band `m` of `n_B·S` gives `−m`; the
//! standard one divides by 2π and is twice as large.

mod finite_difference;
mod frames;
mod link;
mod loops;
pub mod mesh;

use std::f64::consts::PI;

pub use finite_difference::{chern_number, connection_discrete, curvature_discrete, CurvatureField, EdgeConnections, PlaquetteCurvature};
pub use frames::{align_frame, frame_overlap, smooth_gauge_states, BandFrames, FrameField, FrameSource, MultiFrameSource, ProjectedBandFrames};
pub use link::{chern_number_link_variable, chern_numbers_link_variable, link_fluxes, link_fluxes_multi, wrap_phase, LinkChern};
pub use loops::{cap_flux, cap_solid_angle, latitude_loop, loop_phase, wilson_phase};
pub use mesh::{Cell, MeshScheme, SphereMesh};

use crate::error::{Error, Result};
use crate::tolerance::TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    /// Flux / 4π.
    #[default]
    Primary,
    /// Flux / 2π.
    Standard,
}

impl std::str::FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "primary" => Ok(Self::Primary),
            "standard" => Ok(Self::Standard),
            _ => Err(Error::InvalidParameter(format!("unknown Chern convention {s:?}"))),
        }
    }
}

impl std::fmt::Display for Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Primary => "primary",
            Self::Standard => "standard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernNumber {
    /// Flux / 4π.
    pub ch: f64,
    /// Flux / 2π.
    pub standard: f64,
    /// Distance of `ch` from the nearest half-integer allowed by the
    /// rounded standard value.
    pub deviation: f64,
}

impl ChernNumber {
    pub fn from_flux(total: f64) -> Self {
        let standard = total / (2.0 * PI);
        let ch = total / (4.0 * PI);
        Self {
            ch,
            standard,
            deviation: (ch - standard.round() / 2.0).abs(),
        }
    }

    pub fn standard_integer(&self) -> i64 {
        self.standard.round() as i64
    }

    /// Nearest allowed value in the given convention.
    pub fn rounded(&self, convention: Convention) -> f64 {
        match convention {
            Convention::Primary => self.standard.round() / 2.0,
            Convention::Standard => self.standard.round(),
        }
    }

    pub fn value(&self, convention: Convention) -> f64 {
        match convention {
            Convention::Primary => self.ch,
            Convention::Standard => self.standard,
        }
    }

    /// Deviation measured in the given convention.
    pub fn deviation_in(&self, convention: Convention) -> f64 {
        match convention {
            Convention::Primary => self.deviation,
            Convention::Standard => 2.0 * self.deviation,
        }
    }

    pub fn quantized(self) -> Result<Self> {
        if self.deviation > TOL.chern_quantization {
            return Err(Error::NotQuantized {
                value: self.ch,
                deviation: self.deviation,
            });
        }
        Ok(self)
    }
}
