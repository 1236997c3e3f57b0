//! Latitude–longitude meshes of the parameter sphere.
//!
//! The sphere is cut into bands between consecutive θ rings. Band `i` is split
//! into `n_i` equal φ sectors. Each ring carries the union of the φ points of the
//! two bands it separates, so a cell is a polygon whose boundary visits every
//! mesh vertex on it; shared edges are then traversed exactly once in each
//! direction by the two cells that own them.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshScheme {
    /// Same φ count on every band.
    Uniform,
    /// φ count proportional to `sin θ`, so cells have comparable solid angle.
    EqualArea,
}

impl std::str::FromStr for MeshScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "equal-area" | "equal_area" => Ok(Self::EqualArea),
            _ => Err(Error::InvalidParameter(format!("unknown mesh scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub band: usize,
    pub sector: usize,
    pub theta: (f64, f64),
    pub phi: (f64, f64),
    /// Vertex ids, counter-clockwise in the (θ, φ) plane: +θ, +φ, −θ, −φ.
    pub polygon: Vec<usize>,
    pub solid_angle: f64,
}

impl Cell {
    /// Representative (upper-left) corner.
    pub fn corner(&self) -> (f64, f64) {
        (self.theta.0, self.phi.0)
    }
}

#[derive(Debug, Clone)]
pub struct SphereMesh {
    scheme: MeshScheme,
    n_phi_max: usize,
    rings: Vec<f64>,
    band_counts: Vec<usize>,
    /// φ values per ring; poles hold the single value 0.
    ring_phis: Vec<Vec<f64>>,
    ring_offsets: Vec<usize>,
    cells: Vec<Cell>,
}

const MIN_SECTORS: usize = 3;

impl SphereMesh {
    /// `n_theta` equal θ bands; `n_phi_max` sectors on the widest band.
    pub fn new(n_theta: usize, n_phi_max: usize, scheme: MeshScheme) -> Result<Self> {
        if n_theta < 2 {
            return Err(Error::InvalidParameter("mesh needs at least two θ bands".into()));
        }
        let rings = (0..=n_theta).map(|i| PI * i as f64 / n_theta as f64).collect();
        Self::with_rings(rings, n_phi_max, scheme)
    }

    pub fn uniform(n_theta: usize, n_phi: usize) -> Result<Self> {
        Self::new(n_theta, n_phi, MeshScheme::Uniform)
    }

    /// Equal-area mesh with `2·n_theta` sectors at the equator.
    pub fn equal_area(n_theta: usize) -> Result<Self> {
        Self::new(n_theta, 2 * n_theta, MeshScheme::EqualArea)
    }

    /// Mesh on explicit θ rings (ascending, from 0 to π).
    pub fn with_rings(rings: Vec<f64>, n_phi_max: usize, scheme: MeshScheme) -> Result<Self> {
        if rings.len() < 3 || rings[0] != 0.0 || (rings[rings.len() - 1] - PI).abs() > 1e-15 || rings.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("rings must ascend from 0 to π".into()));
        }
        if n_phi_max < MIN_SECTORS {
            return Err(Error::InvalidParameter(format!("need at least {MIN_SECTORS} φ sectors")));
        }
        let n_bands = rings.len() - 1;
        let band_counts: Vec<usize> = (0..n_bands)
            .map(|i| match scheme {
                MeshScheme::Uniform => n_phi_max,
                MeshScheme::EqualArea => {
                    let mid = 0.5 * (rings[i] + rings[i + 1]);
                    ((n_phi_max as f64 * mid.sin()).round() as usize).clamp(MIN_SECTORS, n_phi_max)
                }
            })
            .collect();

        let grid = |n: usize| (0..n).map(move |j| TAU * j as f64 / n as f64);
        let mut ring_phis = Vec::with_capacity(rings.len());
        for i in 0..rings.len() {
            if i == 0 || i == n_bands {
                ring_phis.push(vec![0.0]);
                continue;
            }
            let mut phis: Vec<f64> = grid(band_counts[i - 1]).chain(grid(band_counts[i])).collect();
            phis.sort_by(f64::total_cmp);
            phis.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            ring_phis.push(phis);
        }
        let mut ring_offsets = Vec::with_capacity(rings.len() + 1);
        let mut acc = 0;
        for r in &ring_phis {
            ring_offsets.push(acc);
            acc += r.len();
        }
        ring_offsets.push(acc);

        let mut mesh = SphereMesh {
            scheme,
            n_phi_max,
            rings,
            band_counts,
            ring_phis,
            ring_offsets,
            cells: Vec::new(),
        };
        mesh.cells = mesh.build_cells();
        Ok(mesh)
    }

    /// Mesh whose ring set contains `theta0`, with roughly `n_theta` bands.
    pub fn with_ring_at(theta0: f64, n_theta: usize, n_phi_max: usize, scheme: MeshScheme) -> Result<Self> {
        if !(theta0 > 0.0 && theta0 < PI) {
            return Err(Error::InvalidParameter(format!("ring θ = {theta0} must lie strictly between the poles")));
        }
        let upper = ((n_theta as f64 * theta0 / PI).round() as usize).max(1);
        let lower = n_theta.saturating_sub(upper).max(1);
        let mut rings: Vec<f64> = (0..upper).map(|i| theta0 * i as f64 / upper as f64).collect();
        rings.extend((0..=lower).map(|i| theta0 + (PI - theta0) * i as f64 / lower as f64));
        let last = rings.len() - 1;
        rings[last] = PI;
        Self::with_rings(rings, n_phi_max, scheme)
    }

    fn build_cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for (band, &n) in self.band_counts.iter().enumerate() {
            let (t0, t1) = (self.rings[band], self.rings[band + 1]);
            let omega = TAU * (t0.cos() - t1.cos()) / n as f64;
            for sector in 0..n {
                let p0 = TAU * sector as f64 / n as f64;
                let p1 = TAU * (sector + 1) as f64 / n as f64;
                let mut polygon = vec![self.vertex_at(band, p0)];
                // down the left meridian to ring band+1, then along it in +φ
                for id in self.ring_span(band + 1, p0, p1) {
                    push_distinct(&mut polygon, id);
                }
                // back along ring `band` in −φ
                let mut top = self.ring_span(band, p0, p1);
                top.reverse();
                for id in top {
                    push_distinct(&mut polygon, id);
                }
                while polygon.len() > 1 && polygon.last() == polygon.first() {
                    polygon.pop();
                }
                cells.push(Cell {
                    band,
                    sector,
                    theta: (t0, t1),
                    phi: (p0, p1),
                    polygon,
                    solid_angle: omega,
                });
            }
        }
        cells
    }

    /// Vertex ids on ring `i` with φ in `[p0, p1]` (wrapping 2π to 0), ascending.
    fn ring_span(&self, ring: usize, p0: f64, p1: f64) -> Vec<usize> {
        if self.is_pole(ring) {
            return vec![self.ring_offsets[ring]];
        }
        let phis = &self.ring_phis[ring];
        let mut ids: Vec<usize> = phis
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= p0 - 1e-12 && p <= p1 + 1e-12)
            .map(|(k, _)| self.ring_offsets[ring] + k)
            .collect();
        if (p1 - TAU).abs() < 1e-12 {
            ids.push(self.ring_offsets[ring]);
        }
        ids
    }

    fn vertex_at(&self, ring: usize, phi: f64) -> usize {
        if self.is_pole(ring) {
            return self.ring_offsets[ring];
        }
        let phi = if (phi - TAU).abs() < 1e-12 { 0.0 } else { phi };
        let phis = &self.ring_phis[ring];
        let k = phis.iter().position(|p| (p - phi).abs() < 1e-12).expect("band grid point lies on its rings");
        self.ring_offsets[ring] + k
    }

    pub fn is_pole(&self, ring: usize) -> bool {
        ring == 0 || ring + 1 == self.rings.len()
    }

    pub fn scheme(&self) -> MeshScheme {
        self.scheme
    }

    pub fn n_theta(&self) -> usize {
        self.rings.len() - 1
    }

    pub fn n_phi_max(&self) -> usize {
        self.n_phi_max
    }

    pub fn rings(&self) -> &[f64] {
        &self.rings
    }

    pub fn band_counts(&self) -> &[usize] {
        &self.band_counts
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn num_vertices(&self) -> usize {
        self.ring_offsets[self.rings.len()]
    }

    /// Vertex ids belonging to ring `i`.
    pub fn ring_vertices(&self, ring: usize) -> std::ops::Range<usize> {
        self.ring_offsets[ring]..self.ring_offsets[ring + 1]
    }

    pub fn ring_of(&self, vertex: usize) -> usize {
        self.ring_offsets.partition_point(|&o| o <= vertex) - 1
    }

    /// (θ, φ) of a vertex.
    pub fn vertex(&self, id: usize) -> (f64, f64) {
        let ring = self.ring_of(id);
        (self.rings[ring], self.ring_phis[ring][id - self.ring_offsets[ring]])
    }
}

fn push_distinct(polygon: &mut Vec<usize>, id: usize) {
    if polygon.last() != Some(&id) {
        polygon.push(id);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn cells_tile_the_sphere() {
        for scheme in [MeshScheme::Uniform, MeshScheme::EqualArea] {
            let mesh = SphereMesh::new(24, 48, scheme).unwrap();
            let total: f64 = mesh.cells().iter().map(|c| c.solid_angle).sum();
            assert!((total - 4.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn every_edge_is_shared_with_opposite_orientation() {
        for scheme in [MeshScheme::Uniform, MeshScheme::EqualArea] {
            let mesh = SphereMesh::new(17, 40, scheme).unwrap();
            let mut count: HashMap<(usize, usize), i32> = HashMap::new();
            for c in mesh.cells() {
                let n = c.polygon.len();
                for k in 0..n {
                    let (a, b) = (c.polygon[k], c.polygon[(k + 1) % n]);
                    assert_ne!(a, b);
                    *count.entry((a, b)).or_default() += 1;
                }
            }
            for (&(a, b), &n) in &count {
                assert_eq!(n, 1, "edge {a}->{b} used {n} times");
                assert_eq!(count.get(&(b, a)), Some(&1), "edge {a}->{b} has no partner");
            }
        }
    }

    #[test]
    fn equal_area_cells_agree_within_factor_two() {
        let mesh = SphereMesh::equal_area(100).unwrap();
        let (lo, hi) = mesh
            .cells()
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), c| (lo.min(c.solid_angle), hi.max(c.solid_angle)));
        assert!(hi / lo < 2.0, "ratio {}", hi / lo);
        assert_eq!(mesh.band_counts()[50], 200);
        assert!(mesh.band_counts()[0] < 10);
    }

    #[test]
    fn ring_at_contains_theta0() {
        let mesh = SphereMesh::with_ring_at(PI / 6.0, 60, 120, MeshScheme::EqualArea).unwrap();
        assert!(mesh.rings().iter().any(|&t| (t - PI / 6.0).abs() < 1e-15));
    }

    #[test]
    fn vertex_lookup_roundtrip() {
        let mesh = SphereMesh::new(6, 12, MeshScheme::EqualArea).unwrap();
        for id in 0..mesh.num_vertices() {
            let (t, _) = mesh.vertex(id);
            assert_eq!(t, mesh.rings()[mesh.ring_of(id)]);
        }
        assert_eq!(mesh.vertex(0), (0.0, 0.0));
        assert_eq!(mesh.vertex(mesh.num_vertices() - 1).0, PI);
    }
}
