//! Numerical thresholds shared by every module.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Entrywise asymmetry allowed for matrices built as Hermitian.
    pub hermitian_build: f64,
    /// Entrywise asymmetry accepted by the eigensolver.
    pub hermitian_input: f64,
    /// Eigenvalues closer than this are treated as one degenerate cluster.
    pub degenerate_cluster: f64,
    /// Intra-cluster gap below which a crossing counts as exact.
    pub crossing_gap: f64,
    /// Root accuracy for crossing refinement in `x`.
    pub crossing_root: f64,
    /// Isolated-band computations refuse `x` this close to a crossing.
    pub crossing_exclusion: f64,
    /// Minimum gap that keeps a band subspace isolated on the sphere.
    pub isolation_gap: f64,
    /// Link overlaps with smaller determinant magnitude are singular.
    pub singular_overlap: f64,
    /// Finite-difference Chern numbers further than this from an integer are rejected.
    pub chern_quantization: f64,
    /// Allowed norm drift during propagation.
    pub norm_drift: f64,
    /// Minimum instantaneous-eigenstate fidelity for adiabatic following.
    pub adiabatic_fidelity: f64,
    /// Gram determinant below which a vector set is treated as dependent.
    pub gram_determinant: f64,
    /// Closed-form bases are refused this close to a pole.
    pub pole_exclusion: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian_build: 1e-12,
        hermitian_input: 1e-10,
        degenerate_cluster: 1e-8,
        crossing_gap: 1e-9,
        crossing_root: 1e-12,
        crossing_exclusion: 1e-6,
        isolation_gap: 1e-6,
        singular_overlap: 1e-8,
        chern_quantization: 0.05,
        norm_drift: 1e-8,
        adiabatic_fidelity: 0.99,
        gram_determinant: 1e-12,
        pole_exclusion: 1e-6,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub const TOL: Tolerances = Tolerances::DEFAULT;
