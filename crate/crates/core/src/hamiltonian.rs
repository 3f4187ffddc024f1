//! Potentials, dense grid Hamiltonians H = T_DVR + V, and the dense
//! eigendecomposition oracle used for exact references.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dvr;
use crate::error::{Error, Result};
use crate::grid::UniformGrid;

/// Symmetric double-well value: V(x) = -½ m ω_b² x² + (m² ω_b⁴ / 16 V₀) x⁴.
pub fn double_well_value(x: f64, mass: f64, barrier_freq: f64, barrier_height: f64) -> f64 {
    let w2 = barrier_freq * barrier_freq;
    -0.5 * mass * w2 * x * x + mass * mass * w2 * w2 / (16.0 * barrier_height) * x.powi(4)
}

/// Well minima of the symmetric double well sit at ±√(4V₀/(m ω_b²)).
pub fn double_well_minimum(mass: f64, barrier_freq: f64, barrier_height: f64) -> f64 {
    (4.0 * barrier_height / (mass * barrier_freq * barrier_freq)).sqrt()
}

/// One-dimensional potential evaluable on a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    DoubleWell {
        mass: f64,
        barrier_freq: f64,
        barrier_height: f64,
    },
    Harmonic {
        mass: f64,
        omega: f64,
    },
    /// Values per grid point; length must equal the grid dimension.
    Tabulated(Vec<f64>),
}

impl Potential {
    pub fn double_well(mass: f64, barrier_freq: f64, barrier_height: f64) -> Result<Self> {
        for (name, v) in [
            ("mass", mass),
            ("barrier_freq", barrier_freq),
            ("barrier_height", barrier_height),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(Potential::DoubleWell {
            mass,
            barrier_freq,
            barrier_height,
        })
    }

    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        for (name, v) in [("mass", mass), ("omega", omega)] {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(Potential::Harmonic { mass, omega })
    }

    pub fn tabulated(values: Vec<f64>) -> Self {
        Potential::Tabulated(values)
    }

    /// Evaluate V(x_q) over all grid points.
    pub fn evaluate_on(&self, grid: &UniformGrid) -> Result<Vec<f64>> {
        match self {
            Potential::DoubleWell {
                mass,
                barrier_freq,
                barrier_height,
            } => Ok(grid
                .positions()
                .iter()
                .map(|&x| double_well_value(x, *mass, *barrier_freq, *barrier_height))
                .collect()),
            Potential::Harmonic { mass, omega } => Ok(grid
                .positions()
                .iter()
                .map(|&x| 0.5 * mass * omega * omega * x * x)
                .collect()),
            Potential::Tabulated(values) => {
                if values.len() != grid.num_points() {
                    return Err(Error::invalid(format!(
                        "tabulated potential has {} values, grid has {} points",
                        values.len(),
                        grid.num_points()
                    )));
                }
                Ok(values.clone())
            }
        }
    }
}

/// Dense real-symmetric grid Hamiltonian.
#[derive(Debug, Clone)]
pub struct DenseHamiltonian {
    matrix: DMatrix<f64>,
    grid: UniformGrid,
    mass: f64,
}

impl DenseHamiltonian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// H·ψ as a dense matrix-vector product.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim();
        debug_assert_eq!(psi.len(), d);
        let mut out = vec![Complex64::ZERO; d];
        for j in 0..d {
            let col = self.matrix.column(j);
            let amp = psi[j];
            if amp == Complex64::ZERO {
                continue;
            }
            for i in 0..d {
                out[i] += col[i] * amp;
            }
        }
        out
    }
}

/// Assemble H = T_DVR + diag(V) on `grid`.
pub fn assemble_dense(
    grid: &UniformGrid,
    potential: &Potential,
    mass: f64,
) -> Result<DenseHamiltonian> {
    assemble_dense_truncated(grid, potential, mass, grid.num_points())
}

/// Assemble H with the kinetic matrix truncated to its first `ell`
/// diagonals. `ell = D` reproduces [`assemble_dense`].
pub fn assemble_dense_truncated(
    grid: &UniformGrid,
    potential: &Potential,
    mass: f64,
    ell: usize,
) -> Result<DenseHamiltonian> {
    if !(mass > 0.0) {
        return Err(Error::invalid(format!("mass must be > 0, got {mass}")));
    }
    let d = grid.num_points();
    let k = dvr::kinetic_scale(mass, grid.spacing());
    let mut matrix = dvr::dense_kinetic_truncated(d, k, ell)?;
    let v = potential.evaluate_on(grid)?;
    for (q, vq) in v.iter().enumerate() {
        matrix[(q, q)] += vq;
    }
    Ok(DenseHamiltonian {
        matrix,
        grid: *grid,
        mass,
    })
}

/// Eigendecomposition of a real-symmetric matrix: ascending eigenvalues and
/// orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector matrix; column n is the eigenvector of `eigenvalues()[n]`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Z(β) = Σ_n e^{-β E_n}. Grid eigenvalues are bounded below at desk
    /// scale, so the raw sum is safe.
    pub fn partition_function(&self, beta: f64) -> f64 {
        self.eigenvalues.iter().map(|e| (-beta * e).exp()).sum()
    }

    /// Transform a position-diagonal observable to the eigenbasis: Vᵀ diag(a) V.
    pub fn diagonal_to_eigenbasis(&self, diag: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        debug_assert_eq!(diag.len(), d);
        let mut scaled = self.eigenvectors.clone();
        for q in 0..d {
            let w = diag[q];
            for n in 0..d {
                scaled[(q, n)] *= w;
            }
        }
        self.eigenvectors.transpose() * scaled
    }

    /// Spectral map V f(Λ) Vᵀ for a complex-valued function of the eigenvalues.
    pub fn map_eigenvalues<F: Fn(f64) -> Complex64>(&self, f: F) -> DMatrix<Complex64> {
        let d = self.dim();
        let fe: Vec<Complex64> = self.eigenvalues.iter().map(|&e| f(e)).collect();
        let v = &self.eigenvectors;
        DMatrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|n| fe[n] * v[(i, n)] * v[(j, n)])
                .sum::<Complex64>()
        })
    }

    /// Exact real-time propagator e^{-iHt} by spectral mapping.
    pub fn propagator_real(&self, t: f64) -> DMatrix<Complex64> {
        self.map_eigenvalues(|e| Complex64::from_polar(1.0, -e * t))
    }

    /// Exact imaginary-time propagator e^{-τH} by spectral mapping.
    pub fn propagator_imaginary(&self, tau: f64) -> DMatrix<f64> {
        let d = self.dim();
        let fe: Vec<f64> = self.eigenvalues.iter().map(|&e| (-e * tau).exp()).collect();
        let v = &self.eigenvectors;
        DMatrix::from_fn(d, d, |i, j| (0..d).map(|n| fe[n] * v[(i, n)] * v[(j, n)]).sum())
    }
}

/// Eigendecompose a dense grid Hamiltonian.
pub fn eigendecompose(h: &DenseHamiltonian) -> Result<Spectrum> {
    eigendecompose_matrix(h.matrix())
}

/// Eigendecompose any real-symmetric matrix, verifying orthonormality and
/// reconstruction before returning.
pub fn eigendecompose_matrix(m: &DMatrix<f64>) -> Result<Spectrum> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(Error::invalid("matrix must be square".to_string()));
    }
    let sym = nalgebra::linalg::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or(
        Error::NumericalFailure {
            context: "symmetric eigendecomposition".to_string(),
            residual: f64::INFINITY,
        },
    )?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| sym.eigenvalues[a].total_cmp(&sym.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| sym.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(d, d);
    for (new, &old) in order.iter().enumerate() {
        eigenvectors.set_column(new, &sym.eigenvectors.column(old));
    }

    let spectrum = Spectrum {
        eigenvalues,
        eigenvectors,
    };

    // Orthonormality within 1e-10.
    let gram = spectrum.eigenvectors.transpose() * &spectrum.eigenvectors;
    let mut ortho_residual = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            ortho_residual = ortho_residual.max((gram[(i, j)] - target).abs());
        }
    }
    if ortho_residual > 1e-10 {
        return Err(Error::NumericalFailure {
            context: "eigenvector orthonormality".to_string(),
            residual: ortho_residual,
        });
    }

    // Reconstruction ‖H - VΛVᵀ‖_F ≤ 1e-9 ‖H‖_F.
    let lambda = DVector::from_vec(spectrum.eigenvalues.clone());
    let recon = &spectrum.eigenvectors * DMatrix::from_diagonal(&lambda)
        * spectrum.eigenvectors.transpose();
    let residual = (m - &recon).norm();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    if residual > 1e-9 * scale {
        return Err(Error::NumericalFailure {
            context: "eigendecomposition reconstruction".to_string(),
            residual: residual / scale,
        });
    }

    Ok(spectrum)
}
