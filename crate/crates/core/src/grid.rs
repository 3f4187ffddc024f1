//! Uniform position grids, grid-register basis states, and atomic-unit
//! conversions.
//!
//! Everything downstream works in Hartree atomic units (ℏ = k_B = m_e = 1).
//! A grid of D = 2^n points spans [-L/2, -L/2 + (D-1)·L/D]; there is no
//! point at +L/2.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hartree per cm⁻¹ (CODATA-derived conversion constant).
pub const HARTREE_PER_WAVENUMBER: f64 = 4.556335e-6;
/// Hartree per kelvin (Boltzmann constant in atomic units).
pub const HARTREE_PER_KELVIN: f64 = 3.166812e-6;

/// Convert a wavenumber in cm⁻¹ to an energy in hartree.
pub fn wavenumber_to_hartree(w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::invalid(format!("wavenumber must be > 0, got {w}")));
    }
    Ok(w * HARTREE_PER_WAVENUMBER)
}

/// Convert a temperature in kelvin to an inverse temperature β in hartree⁻¹.
pub fn kelvin_to_beta(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("temperature must be > 0, got {t}")));
    }
    Ok(1.0 / (t * HARTREE_PER_KELVIN))
}

/// Uniform position grid of D = 2^n points over total length L (bohr).
///
/// Spacing and offset are always derived from `length` and `num_points`,
/// never stored separately, so `spacing() * num_points() == length()` holds
/// exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    length: f64,
    n_qubits: u32,
}

impl UniformGrid {
    /// Build a grid of 2^`n_qubits` points spanning length `length` bohr.
    ///
    /// Requires `length > 0` and `2 <= n_qubits <= 16`.
    pub fn new(length: f64, n_qubits: u32) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::invalid(format!(
                "grid length must be > 0, got {length}"
            )));
        }
        if !(2..=16).contains(&n_qubits) {
            return Err(Error::invalid(format!(
                "n_qubits must be in [2, 16], got {n_qubits}"
            )));
        }
        Ok(UniformGrid { length, n_qubits })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    /// Number of grid points D (always a power of two, ≥ 4).
    pub fn num_points(&self) -> usize {
        1usize << self.n_qubits
    }

    /// Grid spacing Δx = L/D.
    pub fn spacing(&self) -> f64 {
        self.length / self.num_points() as f64
    }

    /// Leftmost grid position, -L/2.
    pub fn offset(&self) -> f64 {
        -0.5 * self.length
    }

    /// Position of grid index `q`: x_q = -L/2 + q·Δx.
    pub fn position(&self, q: usize) -> f64 {
        debug_assert!(q < self.num_points());
        self.offset() + q as f64 * self.spacing()
    }

    /// Index of a position that lies on the grid. Exact round trip with
    /// [`Self::position`] at every grid point; positions off the grid by
    /// more than 1e-9·Δx are rejected.
    pub fn index_of(&self, x: f64) -> Result<usize> {
        let raw = (x - self.offset()) / self.spacing();
        let q = raw.round();
        if q < 0.0 || q >= self.num_points() as f64 {
            return Err(Error::invalid(format!("position {x} outside grid")));
        }
        if (raw - q).abs() > 1e-9 {
            return Err(Error::invalid(format!("position {x} not a grid point")));
        }
        Ok(q as usize)
    }

    /// All grid positions in index order.
    pub fn positions(&self) -> Vec<f64> {
        (0..self.num_points()).map(|q| self.position(q)).collect()
    }
}

/// Complex amplitude vector over grid indices.
///
/// Unit norm is deliberately not an invariant: imaginary-time and PITE
/// branches shrink the norm by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        StateVector {
            amps: vec![Complex64::ZERO; dim],
        }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        StateVector { amps }
    }

    /// Computational basis state |q⟩ on `grid`: amplitude 1 at index `q`.
    pub fn basis(grid: &UniformGrid, q: usize) -> Result<Self> {
        Self::basis_dim(grid.num_points(), q)
    }

    /// Basis state of explicit dimension, for contexts without a grid.
    pub fn basis_dim(dim: usize, q: usize) -> Result<Self> {
        if q >= dim {
            return Err(Error::invalid(format!(
                "basis index {q} out of range for dimension {dim}"
            )));
        }
        let mut v = Self::zeros(dim);
        v.amps[q] = Complex64::ONE;
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    /// Standard complex inner product ⟨self|other⟩ (conjugate-linear in self).
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        debug_assert_eq!(self.len(), other.len());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&mut self, factor: Complex64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    /// Rescale to unit norm. No-op on the zero vector.
    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.scale(Complex64::new(1.0 / n, 0.0));
        }
    }
}
