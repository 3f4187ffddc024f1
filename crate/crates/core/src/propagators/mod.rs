//! Complex-time single-step propagators.
//!
//! One step of complex-time evolution factorizes as a real-time Strang
//! step applied after an imaginary-time Boltzmann step,
//!
//! ```text
//!   U(Δt_c) ≈ [e^{-iVΔt/2} e^{-iTΔt} e^{-iVΔt/2}] · [e^{-(Δβ/2)V} e^{-(Δβ/2)T}]
//! ```
//!
//! with the kinetic factor realized either by FFT diagonalization or by the
//! 1-sparse diagonal-Trotter product, and the imaginary-time branch
//! optionally replaced by the linearized probabilistic step (PITE). The
//! backward step is the same operator with the real-time factors conjugated
//! in place (imaginary factors are real, so the backward element table is
//! the elementwise conjugate of the forward one).
//!
//! Conventions pinned here and covered by the scheme fingerprint:
//! - momentum grid p_k = 2πk/L with signed k ∈ [-D/2, D/2), Nyquist at -D/2;
//! - real-time split is the symmetric Strang form V/2·T·V/2;
//! - imaginary-time split applies the kinetic factor first;
//! - kinetic 1-sparse factors run ν ascending, σ = 1 then 2.

mod cache;

pub use cache::{cached_element, CacheLookup, CacheOutcome, ElementCache};

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{StateVector, UniformGrid};
use crate::hamiltonian::{assemble_dense_truncated, DenseHamiltonian, Potential};
use crate::sparse::{build_kinetic_propagator, KineticPropagator, PropagationStep, TimeKind};

/// Kinetic realization for the real-time Strang step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RealKinetic {
    /// Exact exponential of the FFT-diagonalized kinetic operator.
    Fourier,
    /// Diagonal-Trotter product over the first `ell` band diagonals.
    Dvr { ell: usize },
}

/// Kinetic realization for the imaginary-time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImagKinetic {
    Fourier,
    Dvr { ell: usize },
    /// Linearized probabilistic imaginary-time step (1 - Hτ) acting with the
    /// dense Hamiltonian truncated to `ell` kinetic diagonals.
    Pite { m0: f64, ell: usize },
}

/// Per-step scheme: kinetic realizations plus the step sizes Δt = t/N and
/// Δβ = β/N, derived at construction so they stay mutually consistent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepScheme {
    pub real: RealKinetic,
    pub imag: ImagKinetic,
    total_time: f64,
    beta: f64,
    n_steps: usize,
}

impl StepScheme {
    pub fn new(
        real: RealKinetic,
        imag: ImagKinetic,
        total_time: f64,
        beta: f64,
        n_steps: usize,
    ) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::invalid("n_steps must be >= 1".to_string()));
        }
        if !total_time.is_finite() || !(beta >= 0.0) {
            return Err(Error::invalid(format!(
                "need finite t and beta >= 0, got t = {total_time}, beta = {beta}"
            )));
        }
        if let RealKinetic::Dvr { ell } = real {
            if ell == 0 {
                return Err(Error::invalid("real-time ell must be >= 1".to_string()));
            }
        }
        match imag {
            ImagKinetic::Dvr { ell } if ell == 0 => {
                return Err(Error::invalid("imaginary-time ell must be >= 1".to_string()));
            }
            ImagKinetic::Pite { m0, .. } if !(m0 > 0.0 && m0 < 1.0) => {
                return Err(Error::invalid(format!("m0 must lie in (0, 1), got {m0}")));
            }
            _ => {}
        }
        Ok(StepScheme {
            real,
            imag,
            total_time,
            beta,
            n_steps,
        })
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.n_steps as f64
    }

    pub fn dbeta(&self) -> f64 {
        self.beta / self.n_steps as f64
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Same scheme evaluated at a different total time (used when sweeping
    /// the correlation-time axis at fixed N).
    pub fn at_time(&self, total_time: f64) -> Self {
        StepScheme {
            total_time,
            ..*self
        }
    }
}

/// Signed momentum grid p_k = 2πk/L, k ∈ [-D/2, D/2), in FFT bin order.
pub fn momentum_grid(grid: &UniformGrid) -> Vec<f64> {
    let d = grid.num_points();
    let scale = 2.0 * std::f64::consts::PI / grid.length();
    (0..d)
        .map(|k| {
            let signed = if k < d / 2 {
                k as isize
            } else {
                k as isize - d as isize
            };
            signed as f64 * scale
        })
        .collect()
}

/// Diagonal operator multiplying amplitude q by e^{-i·V(x_q)·θ} (real time)
/// or e^{-V(x_q)·θ} (imaginary time).
#[derive(Debug, Clone)]
pub struct DiagonalPhase {
    factors: Vec<Complex64>,
}

impl DiagonalPhase {
    pub fn factors(&self) -> &[Complex64] {
        &self.factors
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.len() != self.factors.len() {
            return Err(Error::invalid("dimension mismatch".to_string()));
        }
        let mut out = psi.clone();
        self.apply_in_place(out.amplitudes_mut());
        Ok(out)
    }

    pub fn apply_in_place(&self, amps: &mut [Complex64]) {
        for (a, f) in amps.iter_mut().zip(&self.factors) {
            *a *= f;
        }
    }
}

/// Build the diagonal potential phase for `potential` on `grid`.
pub fn potential_phase(
    potential: &Potential,
    grid: &UniformGrid,
    theta: f64,
    kind: TimeKind,
) -> Result<DiagonalPhase> {
    if !theta.is_finite() {
        return Err(Error::invalid(format!("theta must be finite, got {theta}")));
    }
    let v = potential.evaluate_on(grid)?;
    let factors = v
        .iter()
        .map(|&vq| match kind {
            TimeKind::Real => Complex64::from_polar(1.0, -vq * theta),
            TimeKind::Imaginary => Complex64::new((-vq * theta).exp(), 0.0),
        })
        .collect();
    Ok(DiagonalPhase { factors })
}

fn fourier_kinetic_in_place(
    fwd: &Arc<dyn Fft<f64>>,
    inv: &Arc<dyn Fft<f64>>,
    momenta: &[f64],
    mass: f64,
    theta: f64,
    kind: TimeKind,
    amps: &mut [Complex64],
) {
    let d = amps.len() as f64;
    fwd.process(amps);
    for (a, &p) in amps.iter_mut().zip(momenta) {
        let e = p * p / (2.0 * mass);
        let factor = match kind {
            TimeKind::Real => Complex64::from_polar(1.0, -e * theta),
            TimeKind::Imaginary => Complex64::new((-e * theta).exp(), 0.0),
        };
        *a *= factor;
    }
    inv.process(amps);
    for a in amps.iter_mut() {
        *a /= d;
    }
}

/// Kinetic evolution by FFT: transform to the momentum representation,
/// multiply by e^{-i·p²/(2m)·θ} (or the real-exponential analog), transform
/// back.
pub fn kinetic_fourier(
    grid: &UniformGrid,
    mass: f64,
    theta: f64,
    kind: TimeKind,
    psi: &StateVector,
) -> Result<StateVector> {
    if psi.len() != grid.num_points() {
        return Err(Error::invalid("dimension mismatch".to_string()));
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(grid.num_points());
    let inv = planner.plan_fft_inverse(grid.num_points());
    let momenta = momentum_grid(grid);
    let mut out = psi.clone();
    fourier_kinetic_in_place(&fwd, &inv, &momenta, mass, theta, kind, out.amplitudes_mut());
    Ok(out)
}

/// One linearized probabilistic imaginary-time step: the success branch
/// m₀·(1 - H·τ)·ψ with τ = s₁·Δβ/2, s₁ = m₀/√(1-m₀²), together with the
/// success probability ‖ψ_success‖²/‖ψ‖². The caller renormalizes.
pub fn pite_step(
    h: &DenseHamiltonian,
    psi: &StateVector,
    delta_beta: f64,
    m0: f64,
) -> Result<(StateVector, f64)> {
    if !(m0 > 0.0 && m0 < 1.0) {
        return Err(Error::invalid(format!("m0 must lie in (0, 1), got {m0}")));
    }
    if psi.len() != h.dim() {
        return Err(Error::invalid("dimension mismatch".to_string()));
    }
    let s1 = m0 / (1.0 - m0 * m0).sqrt();
    let tau = s1 * delta_beta / 2.0;
    let h_psi = h.apply(psi.amplitudes());
    let amps: Vec<Complex64> = psi
        .amplitudes()
        .iter()
        .zip(&h_psi)
        .map(|(&a, &ha)| m0 * (a - tau * ha))
        .collect();
    let success = StateVector::from_amplitudes(amps);
    let norm_in = psi.norm_sqr();
    let probability = if norm_in > 0.0 {
        success.norm_sqr() / norm_in
    } else {
        0.0
    };
    Ok((success, probability))
}

struct PiteContext {
    hamiltonian: DenseHamiltonian,
    tau: f64,
}

/// Prebuilt single-step propagator for one (grid, potential, mass, scheme)
/// context. Application is pure; one operator may be shared across threads.
pub struct StepOperator {
    grid: UniformGrid,
    mass: f64,
    scheme: StepScheme,
    v_grid: Vec<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    momenta: Vec<f64>,
    dvr_real: Option<KineticPropagator>,
    dvr_imag: Option<KineticPropagator>,
    pite: Option<PiteContext>,
    fingerprint: [u8; 32],
    family_fingerprint: [u8; 32],
}

impl StepOperator {
    pub fn new(
        grid: &UniformGrid,
        potential: &Potential,
        mass: f64,
        scheme: StepScheme,
    ) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::invalid(format!("mass must be > 0, got {mass}")));
        }
        let d = grid.num_points();
        let v_grid = potential.evaluate_on(grid)?;
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(d);
        let fft_inv = planner.plan_fft_inverse(d);

        let dvr_real = match scheme.real {
            RealKinetic::Dvr { ell } => Some(build_kinetic_propagator(
                grid,
                mass,
                ell,
                PropagationStep {
                    kind: TimeKind::Real,
                    theta: scheme.dt(),
                },
            )?),
            RealKinetic::Fourier => None,
        };
        let dvr_imag = match scheme.imag {
            ImagKinetic::Dvr { ell } => Some(build_kinetic_propagator(
                grid,
                mass,
                ell,
                PropagationStep {
                    kind: TimeKind::Imaginary,
                    theta: scheme.dbeta() / 2.0,
                },
            )?),
            _ => None,
        };
        let pite = match scheme.imag {
            ImagKinetic::Pite { m0, ell } => {
                let hamiltonian = assemble_dense_truncated(grid, potential, mass, ell)?;
                let s1 = m0 / (1.0 - m0 * m0).sqrt();
                Some(PiteContext {
                    hamiltonian,
                    tau: s1 * scheme.dbeta() / 2.0,
                })
            }
            _ => None,
        };

        let (fingerprint, family_fingerprint) = compute_fingerprints(grid, mass, &v_grid, &scheme);

        Ok(StepOperator {
            grid: *grid,
            mass,
            scheme,
            v_grid,
            fft_fwd,
            fft_inv,
            momenta: momentum_grid(grid),
            dvr_real,
            dvr_imag,
            pite,
            fingerprint,
            family_fingerprint,
        })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn scheme(&self) -> &StepScheme {
        &self.scheme
    }

    pub fn potential_values(&self) -> &[f64] {
        &self.v_grid
    }

    /// Hash of every parameter that affects an element value: grid,
    /// potential values, mass, N, t, β, scheme variants, factor ordering.
    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    /// Fingerprint of the scheme family: everything except the
    /// correlation-time point (used for provenance headers).
    pub fn family_fingerprint(&self) -> &[u8; 32] {
        &self.family_fingerprint
    }

    fn potential_phase_in_place(&self, theta: f64, kind: TimeKind, amps: &mut [Complex64]) {
        for (a, &vq) in amps.iter_mut().zip(&self.v_grid) {
            let f = match kind {
                TimeKind::Real => Complex64::from_polar(1.0, -vq * theta),
                TimeKind::Imaginary => Complex64::new((-vq * theta).exp(), 0.0),
            };
            *a *= f;
        }
    }

    /// Real-time Strang step e^{-iVΔt/2} e^{-iTΔt} e^{-iVΔt/2}.
    /// `conjugate` applies the backward variant (every θ negated, same
    /// factor order).
    pub fn apply_real_step_in_place(&self, amps: &mut [Complex64], conjugate: bool) {
        let sign = if conjugate { -1.0 } else { 1.0 };
        let dt = self.scheme.dt() * sign;
        self.potential_phase_in_place(dt / 2.0, TimeKind::Real, amps);
        match self.scheme.real {
            RealKinetic::Fourier => fourier_kinetic_in_place(
                &self.fft_fwd,
                &self.fft_inv,
                &self.momenta,
                self.mass,
                dt,
                TimeKind::Real,
                amps,
            ),
            RealKinetic::Dvr { .. } => {
                let prop = self.dvr_real.as_ref().expect("built with scheme");
                prop.apply_in_place(amps, sign);
            }
        }
        self.potential_phase_in_place(dt / 2.0, TimeKind::Real, amps);
    }

    /// Imaginary-time step approximating e^{-(Δβ/2)H}: first-order split
    /// e^{-(Δβ/2)V} · e^{-(Δβ/2)T} (kinetic factor applied first), or the
    /// linearized probabilistic branch (1 - Hτ) with the m₀ prefactor
    /// divided out.
    pub fn apply_imag_step_in_place(&self, amps: &mut [Complex64]) {
        let tau = self.scheme.dbeta() / 2.0;
        match self.scheme.imag {
            ImagKinetic::Fourier => {
                fourier_kinetic_in_place(
                    &self.fft_fwd,
                    &self.fft_inv,
                    &self.momenta,
                    self.mass,
                    tau,
                    TimeKind::Imaginary,
                    amps,
                );
                self.potential_phase_in_place(tau, TimeKind::Imaginary, amps);
            }
            ImagKinetic::Dvr { .. } => {
                let prop = self.dvr_imag.as_ref().expect("built with scheme");
                prop.apply_in_place(amps, 1.0);
                self.potential_phase_in_place(tau, TimeKind::Imaginary, amps);
            }
            ImagKinetic::Pite { .. } => {
                let ctx = self.pite.as_ref().expect("built with scheme");
                let h_amps = ctx.hamiltonian.apply(amps);
                for (a, ha) in amps.iter_mut().zip(&h_amps) {
                    *a -= ctx.tau * ha;
                }
            }
        }
    }

    pub fn apply_real_step(&self, psi: &StateVector) -> Result<StateVector> {
        self.check_dim(psi)?;
        let mut out = psi.clone();
        self.apply_real_step_in_place(out.amplitudes_mut(), false);
        Ok(out)
    }

    pub fn apply_imag_step(&self, psi: &StateVector) -> Result<StateVector> {
        self.check_dim(psi)?;
        let mut out = psi.clone();
        self.apply_imag_step_in_place(out.amplitudes_mut());
        Ok(out)
    }

    /// Forward step Ũ(Δt_c): imaginary-time factor rightmost, so it acts
    /// first.
    pub fn apply_forward(&self, psi: &StateVector) -> Result<StateVector> {
        self.check_dim(psi)?;
        let mut out = psi.clone();
        self.apply_imag_step_in_place(out.amplitudes_mut());
        self.apply_real_step_in_place(out.amplitudes_mut(), false);
        Ok(out)
    }

    /// Backward step: element table of e^{+iHΔt} e^{-(Δβ/2)H} under the
    /// same scheme (real-time factors conjugated in place).
    pub fn apply_backward(&self, psi: &StateVector) -> Result<StateVector> {
        self.check_dim(psi)?;
        let mut out = psi.clone();
        self.apply_imag_step_in_place(out.amplitudes_mut());
        self.apply_real_step_in_place(out.amplitudes_mut(), true);
        Ok(out)
    }

    /// Column `col` of the forward element table.
    pub fn column(&self, col: usize) -> Result<Vec<Complex64>> {
        let psi = StateVector::basis(&self.grid, col)?;
        Ok(self.apply_forward(&psi)?.into_amplitudes())
    }

    /// Column `col` of the backward element table.
    pub fn backward_column(&self, col: usize) -> Result<Vec<Complex64>> {
        let psi = StateVector::basis(&self.grid, col)?;
        Ok(self.apply_backward(&psi)?.into_amplitudes())
    }

    /// ⟨x_row| Ũ(Δt_c) |x_col⟩.
    pub fn element(&self, row: usize, col: usize) -> Result<Complex64> {
        if row >= self.grid.num_points() {
            return Err(Error::invalid(format!("row {row} out of range")));
        }
        Ok(self.column(col)?[row])
    }

    fn check_dim(&self, psi: &StateVector) -> Result<()> {
        if psi.len() != self.grid.num_points() {
            return Err(Error::invalid(format!(
                "state dimension {} does not match grid dimension {}",
                psi.len(),
                self.grid.num_points()
            )));
        }
        Ok(())
    }
}

/// ⟨x_row| Ũ(Δt_c) |x_col⟩: imaginary-time step, then real-time step,
/// applied to the basis state of the column index.
pub fn complex_time_element(op: &StepOperator, row: usize, col: usize) -> Result<Complex64> {
    op.element(row, col)
}

const ORDERING_TAG: &str =
    "real=strang-V/2.T.V/2;imag=V-after-T;kinetic=nu-asc,sigma-asc;backward=conj-real-same-order";

fn compute_fingerprints(
    grid: &UniformGrid,
    mass: f64,
    v_grid: &[f64],
    scheme: &StepScheme,
) -> ([u8; 32], [u8; 32]) {
    let mut base = Sha256::new();
    base.update(b"hpimc-step-operator-v1");
    base.update(ORDERING_TAG.as_bytes());
    base.update(grid.length().to_le_bytes());
    base.update((grid.num_points() as u64).to_le_bytes());
    base.update(mass.to_le_bytes());
    for v in v_grid {
        base.update(v.to_le_bytes());
    }
    base.update((scheme.n_steps() as u64).to_le_bytes());
    base.update(scheme.beta().to_le_bytes());
    match scheme.real {
        RealKinetic::Fourier => base.update(b"real:fourier"),
        RealKinetic::Dvr { ell } => {
            base.update(b"real:dvr");
            base.update((ell as u64).to_le_bytes());
        }
    }
    match scheme.imag {
        ImagKinetic::Fourier => base.update(b"imag:fourier"),
        ImagKinetic::Dvr { ell } => {
            base.update(b"imag:dvr");
            base.update((ell as u64).to_le_bytes());
        }
        ImagKinetic::Pite { m0, ell } => {
            base.update(b"imag:pite");
            base.update(m0.to_le_bytes());
            base.update((ell as u64).to_le_bytes());
        }
    }

    let mut family = base.clone();
    family.update(b"family");
    let family_fingerprint: [u8; 32] = family.finalize().into();

    base.update(b"time");
    base.update(scheme.total_time().to_le_bytes());
    let fingerprint: [u8; 32] = base.finalize().into();
    (fingerprint, family_fingerprint)
}

/// Hex rendering used in provenance headers and cache diagnostics.
pub fn fingerprint_hex(fp: &[u8; 32]) -> String {
    fp.iter().map(|b| format!("{b:02x}")).collect()
}
