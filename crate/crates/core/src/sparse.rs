//! Decomposition of each kinetic band diagonal into at most two 1-sparse
//! Hermitian matrices, analytic exponentials of 1-sparse matrices, and the
//! diagonal-Trotter kinetic propagator composed from them.
//!
//! Grouping rules, per diagonal index ν (1 = main diagonal):
//! - ν = 1: the main diagonal is already 1-sparse.
//! - ν > D/2: the upper and lower diagonals touch disjoint index ranges, so
//!   one matrix holds both.
//! - 1 < ν ≤ D/2, ν even: upper/lower element pairs alternate one by one
//!   between the two parts, left to right.
//! - 1 < ν ≤ D/2, ν odd: write ν-1 = b·2^p with b odd; runs of 2^p
//!   contiguous elements alternate between the two parts. The final run may
//!   be shorter; the block-parity argument that keeps rows and columns
//!   disjoint is unaffected, and the exhaustive suite verifies it.
//!
//! Internally the construction follows the 1-based element enumeration the
//! grouping rules are stated in; conversion to 0-based storage happens at a
//! single boundary in `decompose_diagonal`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{StateVector, UniformGrid};

/// Real or imaginary propagation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeKind {
    /// e^{-iMθ}
    Real,
    /// e^{-Mθ}
    Imaginary,
}

/// One entry of a 1-sparse Hermitian matrix with real values. A `Pair`
/// stands for both the (row, col) element and its mirror.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SparseEntry {
    Diagonal { index: usize, value: f64 },
    Pair { row: usize, col: usize, value: f64 },
}

/// Hermitian matrix with at most one entry per row and per column.
#[derive(Debug, Clone, PartialEq)]
pub struct OneSparseMatrix {
    dim: usize,
    entries: Vec<SparseEntry>,
}

impl OneSparseMatrix {
    /// Build and validate: indices in range, pairs canonical (row < col),
    /// and no index touched twice (1-sparsity).
    pub fn new(dim: usize, entries: Vec<SparseEntry>) -> Result<Self> {
        let mut touched = vec![false; dim];
        let mut touch = |i: usize| -> Result<()> {
            if i >= dim {
                return Err(Error::invalid(format!("index {i} out of range {dim}")));
            }
            if touched[i] {
                return Err(Error::invalid(format!("index {i} touched twice")));
            }
            touched[i] = true;
            Ok(())
        };
        for e in &entries {
            match *e {
                SparseEntry::Diagonal { index, .. } => touch(index)?,
                SparseEntry::Pair { row, col, .. } => {
                    if row >= col {
                        return Err(Error::invalid(format!(
                            "pair ({row}, {col}) must satisfy row < col"
                        )));
                    }
                    touch(row)?;
                    touch(col)?;
                }
            }
        }
        Ok(OneSparseMatrix { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[SparseEntry] {
        &self.entries
    }

    /// All stored elements including mirrors, as (row, col, value).
    pub fn elements(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for e in &self.entries {
            match *e {
                SparseEntry::Diagonal { index, value } => out.push((index, index, value)),
                SparseEntry::Pair { row, col, value } => {
                    out.push((row, col, value));
                    out.push((col, row, value));
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.elements() {
            m[(r, c)] = v;
        }
        m
    }

    /// Brute-force 1-sparsity check on the dense expansion: scan row and
    /// column occupancy counts. Used by the test suites and debug asserts,
    /// not in hot loops.
    pub fn verify_one_sparse_dense(&self) -> bool {
        let m = self.to_dense();
        let sym = m == m.transpose();
        let rows_ok = (0..self.dim).all(|i| (0..self.dim).filter(|&j| m[(i, j)] != 0.0).count() <= 1);
        let cols_ok = (0..self.dim).all(|j| (0..self.dim).filter(|&i| m[(i, j)] != 0.0).count() <= 1);
        sym && rows_ok && cols_ok
    }
}

/// Decompose diag(DVR, ν) with Toeplitz value `value` into one or two
/// 1-sparse Hermitian matrices that sum to it exactly.
pub fn decompose_diagonal(d: usize, nu: usize, value: f64) -> Result<Vec<OneSparseMatrix>> {
    if d < 4 || !d.is_power_of_two() {
        return Err(Error::invalid(format!(
            "dimension {d} must be a power of two >= 4"
        )));
    }
    if nu < 1 || nu > d {
        return Err(Error::invalid(format!(
            "diagonal index {nu} out of range [1, {d}]"
        )));
    }

    // Case 1: the main diagonal.
    if nu == 1 {
        let entries = (0..d)
            .map(|q| SparseEntry::Diagonal { index: q, value })
            .collect();
        return Ok(vec![OneSparseMatrix::new(d, entries)?]);
    }

    // Upper-diagonal elements enumerated 1-based: the j-th element sits at
    // (j, j+ν-1), j ∈ [1, D-ν+1]. Stored 0-based as (j-1, j+ν-2).
    let count = d - nu + 1;
    let pair = |j: usize| SparseEntry::Pair {
        row: j - 1,
        col: j + nu - 2,
        value,
    };

    // Case 2: ν > D/2, rows and columns of the two diagonals never meet.
    if nu > d / 2 {
        let entries = (1..=count).map(pair).collect();
        return Ok(vec![OneSparseMatrix::new(d, entries)?]);
    }

    let (mut m1, mut m2) = (Vec::new(), Vec::new());
    if nu % 2 == 0 {
        // Case 3a: alternate element pairs left to right.
        for j in 1..=count {
            if j % 2 == 1 {
                m1.push(pair(j));
            } else {
                m2.push(pair(j));
            }
        }
    } else {
        // Case 3b: ν-1 = b·2^p with b odd; alternate runs of 2^p elements.
        let p = (nu - 1).trailing_zeros();
        let run = 1usize << p;
        debug_assert!((nu - 1) >> p & 1 == 1);
        for j in 1..=count {
            let q = (j - 1) / run + 1;
            if q % 2 == 1 {
                m1.push(pair(j));
            } else {
                m2.push(pair(j));
            }
        }
    }
    let parts = vec![OneSparseMatrix::new(d, m1)?, OneSparseMatrix::new(d, m2)?];
    debug_assert!(parts.iter().all(|m| m.verify_one_sparse_dense()));
    Ok(parts)
}

/// The unique (p, b) with ν-1 = b·2^p and b odd, for odd ν in (1, D/2].
pub fn case3b_split(nu: usize) -> Result<(u32, usize)> {
    if nu < 3 || nu % 2 == 0 {
        return Err(Error::invalid(format!("nu = {nu} is not an odd index > 1")));
    }
    let p = (nu - 1).trailing_zeros();
    Ok((p, (nu - 1) >> p))
}

/// Apply e^{-iMθ} (real time) or e^{-Mθ} (imaginary time) for a 1-sparse
/// Hermitian M, exactly: untouched indices pass through, isolated diagonal
/// entries become scalar factors, mirrored pairs become 2×2 blocks.
pub fn apply_exp_one_sparse(
    m: &OneSparseMatrix,
    theta: f64,
    kind: TimeKind,
    psi: &StateVector,
) -> Result<StateVector> {
    if psi.len() != m.dim() {
        return Err(Error::invalid(format!(
            "state dimension {} does not match matrix dimension {}",
            psi.len(),
            m.dim()
        )));
    }
    let mut out = psi.clone();
    apply_exp_one_sparse_in_place(m, theta, kind, out.amplitudes_mut());
    Ok(out)
}

/// In-place kernel behind [`apply_exp_one_sparse`]. Entries touch disjoint
/// indices, so the update order is immaterial.
pub fn apply_exp_one_sparse_in_place(
    m: &OneSparseMatrix,
    theta: f64,
    kind: TimeKind,
    amps: &mut [Complex64],
) {
    debug_assert_eq!(amps.len(), m.dim());
    for e in m.entries() {
        match *e {
            SparseEntry::Diagonal { index, value } => {
                let factor = match kind {
                    TimeKind::Real => Complex64::from_polar(1.0, -value * theta),
                    TimeKind::Imaginary => Complex64::new((-value * theta).exp(), 0.0),
                };
                amps[index] *= factor;
            }
            SparseEntry::Pair { row, col, value } => {
                let a = value * theta;
                let (x, y) = (amps[row], amps[col]);
                match kind {
                    TimeKind::Real => {
                        let c = a.cos();
                        let s = Complex64::new(0.0, -a.sin());
                        amps[row] = c * x + s * y;
                        amps[col] = s * x + c * y;
                    }
                    TimeKind::Imaginary => {
                        let c = a.cosh();
                        let s = -a.sinh();
                        amps[row] = c * x + s * y;
                        amps[col] = s * x + c * y;
                    }
                }
            }
        }
    }
}

/// One factor of the diagonal-Trotter kinetic propagator.
#[derive(Debug, Clone)]
pub struct KineticFactor {
    /// Diagonal index ν the factor came from.
    pub nu: usize,
    /// Part index σ within the decomposition of that diagonal (1 or 2).
    pub sigma: usize,
    pub matrix: OneSparseMatrix,
}

/// Ordered product Π_{ν=1}^{ℓ} Π_{σ} exp(-i·diag(DVR,ν)_σ·θ) (or the
/// imaginary-time analog). Factors are stored in product order (ν
/// ascending, σ = 1 then 2) and applied right to left.
#[derive(Debug, Clone)]
pub struct KineticPropagator {
    factors: Vec<KineticFactor>,
    theta: f64,
    kind: TimeKind,
    grid: UniformGrid,
    mass: f64,
}

impl KineticPropagator {
    pub fn factors(&self) -> &[KineticFactor] {
        &self.factors
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn kind(&self) -> TimeKind {
        self.kind
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.len() != self.grid.num_points() {
            return Err(Error::invalid(format!(
                "state dimension {} does not match grid dimension {}",
                psi.len(),
                self.grid.num_points()
            )));
        }
        let mut out = psi.clone();
        self.apply_in_place(out.amplitudes_mut(), 1.0);
        Ok(out)
    }

    /// Apply with the stored θ scaled by `theta_scale`; `-1.0` conjugates
    /// the real-time factors without reordering them.
    pub fn apply_in_place(&self, amps: &mut [Complex64], theta_scale: f64) {
        for f in self.factors.iter().rev() {
            apply_exp_one_sparse_in_place(&f.matrix, self.theta * theta_scale, self.kind, amps);
        }
    }
}

/// Descriptor of a single complex-time sub-step: which axis and how far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationStep {
    pub kind: TimeKind,
    pub theta: f64,
}

/// Build the kinetic propagator for `grid`/`mass` keeping ℓ band diagonals.
pub fn build_kinetic_propagator(
    grid: &UniformGrid,
    mass: f64,
    ell: usize,
    step: PropagationStep,
) -> Result<KineticPropagator> {
    let band = crate::dvr::DvrBand::truncated(grid, mass, ell)?;
    let mut factors = Vec::new();
    for nu in 1..=ell {
        let diag = band.diagonal(nu)?;
        let parts = decompose_diagonal(grid.num_points(), nu, diag.value)?;
        for (s, matrix) in parts.into_iter().enumerate() {
            factors.push(KineticFactor {
                nu,
                sigma: s + 1,
                matrix,
            });
        }
    }
    Ok(KineticPropagator {
        factors,
        theta: step.theta,
        kind: step.kind,
        grid: *grid,
        mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvr;
    use crate::hamiltonian::eigendecompose_matrix;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairs_of(m: &OneSparseMatrix) -> Vec<(usize, usize)> {
        m.entries()
            .iter()
            .filter_map(|e| match *e {
                SparseEntry::Pair { row, col, .. } => Some((row + 1, col + 1)),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn case2_single_part_disjoint_rows() {
        let parts = decompose_diagonal(8, 5, 0.3).unwrap();
        assert_eq!(parts.len(), 1);
        // 1-based: (1,5),(2,6),(3,7),(4,8) plus mirrors.
        assert_eq!(pairs_of(&parts[0]), vec![(1, 5), (2, 6), (3, 7), (4, 8)]);
        assert!(parts[0].verify_one_sparse_dense());
    }

    #[test]
    fn case3a_alternating_pairs() {
        let parts = decompose_diagonal(8, 2, -1.0).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(pairs_of(&parts[0]), vec![(1, 2), (3, 4), (5, 6), (7, 8)]);
        assert_eq!(pairs_of(&parts[1]), vec![(2, 3), (4, 5), (6, 7)]);
        for p in &parts {
            assert!(p.verify_one_sparse_dense());
        }
        let sum = parts[0].to_dense() + parts[1].to_dense();
        let band = dvr::BandDiagonal {
            value: -1.0,
            nu: 2,
            dim: 8,
        };
        assert_eq!(sum, band.to_dense());
    }

    #[test]
    fn case3b_alternating_runs() {
        let parts = decompose_diagonal(8, 3, 0.25).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(case3b_split(3).unwrap(), (1, 1));
        assert_eq!(pairs_of(&parts[0]), vec![(1, 3), (2, 4), (5, 7), (6, 8)]);
        assert_eq!(pairs_of(&parts[1]), vec![(3, 5), (4, 6)]);
        for p in &parts {
            assert!(p.verify_one_sparse_dense());
        }
    }

    #[test]
    fn case3b_split_exists_and_is_unique() {
        for d in [8usize, 16, 32, 64] {
            for nu in (3..=d / 2).step_by(2) {
                let (p, b) = case3b_split(nu).unwrap();
                assert!(p >= 1);
                assert_eq!(b % 2, 1);
                assert_eq!(b << p, nu - 1);
                // Uniqueness: every other p either gives an even b or does
                // not divide ν-1.
                let unique = (1..=(nu - 1).ilog2())
                    .filter(|&pp| (nu - 1) % (1 << pp) == 0 && ((nu - 1) >> pp) % 2 == 1)
                    .count();
                assert_eq!(unique, 1, "nu = {nu}");
            }
        }
    }

    #[test]
    fn exhaustive_decomposition_small_dims() {
        // Completeness at module scale; the acceptance suite extends to D=64.
        for d in [4usize, 8, 16, 32] {
            for nu in 1..=d {
                let value = dvr::diagonal_value(nu, 1.7);
                let parts = decompose_diagonal(d, nu, value).unwrap();
                assert!(parts.len() <= 2);
                let expected_parts = if nu == 1 || nu > d / 2 { 1 } else { 2 };
                assert_eq!(parts.len(), expected_parts, "D={d} nu={nu}");
                let mut sum = DMatrix::zeros(d, d);
                for p in &parts {
                    assert!(p.verify_one_sparse_dense(), "D={d} nu={nu}");
                    sum += p.to_dense();
                }
                let band = dvr::BandDiagonal {
                    value,
                    nu,
                    dim: d,
                };
                assert_eq!(sum, band.to_dense(), "D={d} nu={nu}");
            }
        }
    }

    #[test]
    fn rejects_invalid_dimensions() {
        assert!(decompose_diagonal(6, 2, 1.0).is_err());
        assert!(decompose_diagonal(2, 1, 1.0).is_err());
        assert!(decompose_diagonal(8, 0, 1.0).is_err());
        assert!(decompose_diagonal(8, 9, 1.0).is_err());
    }

    fn random_one_sparse(rng: &mut ChaCha8Rng, dim: usize) -> OneSparseMatrix {
        let mut indices: Vec<usize> = (0..dim).collect();
        for i in (1..dim).rev() {
            let j = rng.random_range(0..=i);
            indices.swap(i, j);
        }
        let mut entries = Vec::new();
        let mut it = indices.into_iter();
        while let Some(a) = it.next() {
            let value = rng.random_range(-1.0..1.0);
            if rng.random_bool(0.25) {
                entries.push(SparseEntry::Diagonal { index: a, value });
            } else if let Some(b) = it.next() {
                entries.push(SparseEntry::Pair {
                    row: a.min(b),
                    col: a.max(b),
                    value,
                });
            } else {
                entries.push(SparseEntry::Diagonal { index: a, value });
            }
        }
        OneSparseMatrix::new(dim, entries).unwrap()
    }

    #[test]
    fn exponential_matches_dense_spectral_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let dim = 16;
        for trial in 0..20 {
            let m = random_one_sparse(&mut rng, dim);
            let theta = rng.random_range(0.1..1.2);
            let spec = eigendecompose_matrix(&m.to_dense()).unwrap();
            for kind in [TimeKind::Real, TimeKind::Imaginary] {
                let dense_exp = match kind {
                    TimeKind::Real => spec.propagator_real(theta),
                    TimeKind::Imaginary => spec.propagator_imaginary(theta).map(|x| Complex64::new(x, 0.0)),
                };
                let mut max_dev = 0.0f64;
                for col in 0..dim {
                    let e = StateVector::basis_dim(dim, col).unwrap();
                    let got = apply_exp_one_sparse(&m, theta, kind, &e).unwrap();
                    for row in 0..dim {
                        max_dev = max_dev.max((got.amplitudes()[row] - dense_exp[(row, col)]).norm());
                    }
                }
                assert!(max_dev < 1e-12, "trial {trial} {kind:?}: {max_dev:e}");
            }
        }
    }

    #[test]
    fn theta_zero_is_identity() {
        let m = decompose_diagonal(8, 3, 0.7).unwrap().remove(0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = StateVector::from_amplitudes(
            (0..8)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        );
        for kind in [TimeKind::Real, TimeKind::Imaginary] {
            let out = apply_exp_one_sparse(&m, 0.0, kind, &psi).unwrap();
            assert_eq!(out, psi);
        }
    }

    #[test]
    fn single_pair_rotation() {
        // D=2-style pair embedded at D=4: ψ=(1,0,..) rotates to (cos, -i sin).
        let m = OneSparseMatrix::new(
            4,
            vec![SparseEntry::Pair {
                row: 0,
                col: 1,
                value: 0.9,
            }],
        )
        .unwrap();
        let psi = StateVector::basis_dim(4, 0).unwrap();
        let theta = 0.6;
        let out = apply_exp_one_sparse(&m, theta, TimeKind::Real, &psi).unwrap();
        let a = 0.9 * theta;
        assert_relative_eq!(out.amplitudes()[0].re, a.cos(), max_relative = 1e-15);
        assert_relative_eq!(out.amplitudes()[1].im, -a.sin(), max_relative = 1e-15);
        assert_relative_eq!(out.norm(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn disjoint_factors_commute() {
        let a = OneSparseMatrix::new(
            8,
            vec![SparseEntry::Pair {
                row: 0,
                col: 3,
                value: 0.5,
            }],
        )
        .unwrap();
        let b = OneSparseMatrix::new(
            8,
            vec![
                SparseEntry::Pair {
                    row: 1,
                    col: 6,
                    value: -0.8,
                },
                SparseEntry::Diagonal { index: 4, value: 0.2 },
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let psi = StateVector::from_amplitudes(
            (0..8)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        );
        for kind in [TimeKind::Real, TimeKind::Imaginary] {
            let ab = apply_exp_one_sparse(&a, 0.7, kind, &apply_exp_one_sparse(&b, 0.7, kind, &psi).unwrap()).unwrap();
            let ba = apply_exp_one_sparse(&b, 0.7, kind, &apply_exp_one_sparse(&a, 0.7, kind, &psi).unwrap()).unwrap();
            for (x, y) in ab.amplitudes().iter().zip(ba.amplitudes()) {
                assert!((x - y).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn one_sparsity_violations_rejected() {
        assert!(OneSparseMatrix::new(
            4,
            vec![
                SparseEntry::Pair {
                    row: 0,
                    col: 1,
                    value: 1.0
                },
                SparseEntry::Diagonal { index: 1, value: 2.0 },
            ]
        )
        .is_err());
        assert!(OneSparseMatrix::new(
            4,
            vec![SparseEntry::Pair {
                row: 2,
                col: 1,
                value: 1.0
            }]
        )
        .is_err());
    }

    #[test]
    fn propagator_structure_and_unitarity() {
        let grid = UniformGrid::new(10.0, 5).unwrap();
        let step = PropagationStep {
            kind: TimeKind::Real,
            theta: 0.37,
        };
        let ell = 7;
        let prop = build_kinetic_propagator(&grid, 1836.0, ell, step).unwrap();
        assert!(prop.factors().len() <= 2 * ell);
        // ν ascending, σ = 1 then 2.
        let tags: Vec<(usize, usize)> = prop.factors().iter().map(|f| (f.nu, f.sigma)).collect();
        let mut sorted = tags.clone();
        sorted.sort();
        assert_eq!(tags, sorted);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = StateVector::from_amplitudes(
            (0..32)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        );
        let out = prop.apply(&psi).unwrap();
        assert_relative_eq!(out.norm(), psi.norm(), max_relative = 1e-10);
    }

    #[test]
    fn imaginary_factors_are_positive_definite() {
        let grid = UniformGrid::new(10.0, 4).unwrap();
        let step = PropagationStep {
            kind: TimeKind::Imaginary,
            theta: 0.8,
        };
        let prop = build_kinetic_propagator(&grid, 100.0, 16, step).unwrap();
        for f in prop.factors() {
            let dense = f.matrix.to_dense();
            let spec = eigendecompose_matrix(&dense).unwrap();
            // Block eigenvalues of the exponential are e^{±aθ} > 0.
            for &e in spec.eigenvalues() {
                assert!((-e * step.theta).exp() > 0.0);
            }
        }
    }

    #[test]
    fn main_diagonal_only_is_pure_phase() {
        let grid = UniformGrid::new(8.0, 3).unwrap();
        let mass = 2.0;
        let step = PropagationStep {
            kind: TimeKind::Real,
            theta: 0.5,
        };
        let prop = build_kinetic_propagator(&grid, mass, 1, step).unwrap();
        let k = dvr::kinetic_scale(mass, grid.spacing());
        let expected = Complex64::from_polar(1.0, -k * std::f64::consts::PI.powi(2) / 6.0 * 0.5);
        let psi = StateVector::basis(&grid, 3).unwrap();
        let out = prop.apply(&psi).unwrap();
        assert!((out.amplitudes()[3] - expected).norm() < 1e-15);
    }
}
