//! Edge connections and plaquette curvatures from smoothly gauged frames.
//!
//! Connections are edge-integrated one-forms, `A = i(⟨k|l′⟩ − δ_kl)` between
//! neighbouring nodes, so no division by the step sizes is needed.

use std::f64::consts::TAU;
use std::io::Write;

use rayon::prelude::*;

use crate::error::Result;
use crate::spin::{ComplexMatrix, I};

use super::frames::FrameField;
use super::ChernNumber;

/// `a1[i][j]`: edge (θ_i, φ_j) → (θ_{i+1}, φ_j). `a2[i][j]`: (θ_i, φ_j) → (θ_i, φ_{j+1}).
#[derive(Debug, Clone)]
pub struct EdgeConnections {
    pub a1: Vec<Vec<ComplexMatrix>>,
    pub a2: Vec<Vec<ComplexMatrix>>,
    thetas: Vec<f64>,
    n_phi: usize,
}

pub fn connection_discrete(frames: &FrameField) -> EdgeConnections {
    let n_rings = frames.thetas().len();
    let n_phi = frames.n_phi();
    let eye = ComplexMatrix::identity(frames.rank(), frames.rank());
    let link = |a: &ComplexMatrix, b: &ComplexMatrix| (a.adjoint() * b - &eye) * I;
    let a1 = (0..n_rings - 1)
        .into_par_iter()
        .map(|i| (0..n_phi).map(|j| link(frames.at(i, j), frames.at(i + 1, j))).collect())
        .collect();
    let a2 = (0..n_rings)
        .into_par_iter()
        .map(|i| (0..n_phi).map(|j| link(frames.at(i, j), frames.at(i, j + 1))).collect())
        .collect();
    EdgeConnections {
        a1,
        a2,
        thetas: frames.thetas().to_vec(),
        n_phi,
    }
}

#[derive(Debug, Clone)]
pub struct PlaquetteCurvature {
    pub theta: f64,
    pub phi: f64,
    pub solid_angle: f64,
    pub f: ComplexMatrix,
}

impl PlaquetteCurvature {
    pub fn trace(&self) -> f64 {
        self.f.trace().re
    }
}

/// Plaquette curvatures of every band except the polar one at `θ ∈ [0, Δθ]`,
/// where the transported gauge is singular.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub cells: Vec<PlaquetteCurvature>,
    pub rank: usize,
    n_phi: usize,
    /// Solid angle of the dropped polar cap.
    pub cap_solid_angle: f64,
}

pub fn curvature_discrete(conn: &EdgeConnections) -> CurvatureField {
    let n_phi = conn.n_phi;
    let n_bands = conn.thetas.len() - 1;
    let dphi = TAU / n_phi as f64;
    let cells = (1..n_bands)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (t0, t1) = (conn.thetas[i], conn.thetas[i + 1]);
            let omega = dphi * (t0.cos() - t1.cos());
            (0..n_phi).map(move |j| {
                let jn = (j + 1) % n_phi;
                let (a1, a2) = (&conn.a1[i][j], &conn.a2[i][j]);
                let f = &conn.a2[i + 1][j] - a2 - &conn.a1[i][jn] + a1 + (a1 * a2 - a2 * a1) * I;
                PlaquetteCurvature {
                    theta: t0,
                    phi: dphi * j as f64,
                    solid_angle: omega,
                    f,
                }
            })
        })
        .collect();
    CurvatureField {
        cells,
        rank: conn.a1[0][0].nrows(),
        n_phi,
        cap_solid_angle: TAU * (1.0 - conn.thetas[1].cos()),
    }
}

impl CurvatureField {
    /// Summed trace with the dropped cap filled in at the curvature density of
    /// the adjacent band.
    pub fn total_flux(&self) -> f64 {
        let body: f64 = self.cells.iter().map(PlaquetteCurvature::trace).sum();
        let next = &self.cells[..self.n_phi.min(self.cells.len())];
        let next_flux: f64 = next.iter().map(PlaquetteCurvature::trace).sum();
        let next_area: f64 = next.iter().map(|c| c.solid_angle).sum();
        body + next_flux / next_area * self.cap_solid_angle
    }

    /// `θ, φ, Re Tr F, solid angle` per plaquette.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "theta,phi,re_tr_f,solid_angle")?;
        for c in &self.cells {
            writeln!(w, "{:.12},{:.12},{:.12e},{:.12e}", c.theta, c.phi, c.trace(), c.solid_angle)?;
        }
        Ok(())
    }
}

/// Chern number of a finite-difference curvature field; fails when the
/// primary-convention value is further than the quantization tolerance from
/// the nearest allowed value.
pub fn chern_number(field: &CurvatureField) -> Result<ChernNumber> {
    ChernNumber::from_flux(field.total_flux()).quantized()
}
