//! Thermal correlation functions C_AB(t) = (1/Z)·Tr(U†(t_c) A U(t_c) B)
//! with t_c = t - iβ/2, computed three ways:
//!
//! - [`exact_tcf`]: spectral formula through the eigen-oracle;
//! - [`trotterized_tcf`]: quadrature over the single-step element table,
//!   contracted as matrix powers (no Monte Carlo error);
//! - [`mc_tcf`]: Metropolis path sampling over bead indices with |Θ| as the
//!   stationary weight and the unit phase of Θ as the sign generalization.
//!
//! Plus the correlation-error bound, the error-budget calculator, and the
//! asymptotic cost model.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::hamiltonian::{Potential, Spectrum};
use crate::linalg::cpow;
use crate::propagators::{ElementCache, StepOperator, StepScheme};

/// Observable diagonal in the position representation.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// The position operator x̂ itself.
    Position,
    /// Arbitrary values per grid point.
    Tabulated(Vec<f64>),
}

impl Observable {
    /// Diagonal values on `grid`.
    pub fn diagonal_on(&self, grid: &UniformGrid) -> Result<Vec<f64>> {
        match self {
            Observable::Position => Ok(grid.positions()),
            Observable::Tabulated(values) => {
                if values.len() != grid.num_points() {
                    return Err(Error::invalid(format!(
                        "tabulated observable has {} values, grid has {} points",
                        values.len(),
                        grid.num_points()
                    )));
                }
                Ok(values.clone())
            }
        }
    }

    /// Trace norm Σ_q |a_q| of the diagonal observable.
    pub fn trace_norm_on(&self, grid: &UniformGrid) -> Result<f64> {
        Ok(self.diagonal_on(grid)?.iter().map(|a| a.abs()).sum())
    }
}

/// Correlation-function series over a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TcfSeries {
    times: Vec<f64>,
    values: Vec<Complex64>,
    normalized: bool,
    metadata: Vec<(String, String)>,
}

impl TcfSeries {
    pub fn new(times: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::invalid(
                "times and values must be non-empty and equal length".to_string(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "times must be strictly increasing".to_string(),
            ));
        }
        Ok(TcfSeries {
            times,
            values,
            normalized: false,
            metadata: Vec::new(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn push_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.push((key.into(), value.into()));
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.push_metadata(key, value);
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_re(&self) -> f64 {
        self.values.iter().map(|v| v.re.abs()).fold(0.0, f64::max)
    }

    /// Normalize by the magnitude of the maximum absolute value (default
    /// figure normalization). Idempotent and phase-preserving.
    pub fn normalized_by_max_abs(mut self) -> Self {
        let m = self.max_abs();
        if m > 0.0 {
            for v in &mut self.values {
                *v /= m;
            }
        }
        self.normalized = true;
        self.push_metadata("normalization", "max-abs");
        self
    }

    /// Normalize by the maximum |Re C| instead.
    pub fn normalized_by_max_re(mut self) -> Self {
        let m = self.max_abs_re();
        if m > 0.0 {
            for v in &mut self.values {
                *v /= m;
            }
        }
        self.normalized = true;
        self.push_metadata("normalization", "max-re");
        self
    }

    /// Largest pointwise complex deviation from `other` on a shared grid.
    pub fn max_deviation_from(&self, other: &TcfSeries) -> Result<f64> {
        if self.times.len() != other.times.len() {
            return Err(Error::invalid("time grids differ in length".to_string()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// Exact spectral TCF:
/// C(t) = (1/Z)·Σ_{m,n} e^{-β(E_m+E_n)/2} e^{i(E_m-E_n)t} A_mn B_nm.
///
/// Energies are shifted by E₀ internally (the result is invariant under
/// uniform shifts, and shifting guards the exponentials).
pub fn exact_tcf(
    spectrum: &Spectrum,
    a: &Observable,
    b: &Observable,
    beta: f64,
    times: &[f64],
    grid: &UniformGrid,
) -> Result<TcfSeries> {
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("beta must be > 0, got {beta}")));
    }
    let d = spectrum.dim();
    if grid.num_points() != d {
        return Err(Error::invalid(
            "grid and spectrum dimensions differ".to_string(),
        ));
    }
    let a_eig = spectrum.diagonal_to_eigenbasis(&a.diagonal_on(grid)?);
    let b_eig = spectrum.diagonal_to_eigenbasis(&b.diagonal_on(grid)?);
    let e = spectrum.eigenvalues();
    let e0 = e[0];
    let weights: Vec<f64> = e
        .iter()
        .map(|&en| (-beta * (en - e0) / 2.0).exp())
        .collect();
    let z: f64 = weights.iter().map(|w| w * w).sum();

    // Collapse to weighted frequency terms once; each time point is then a
    // plain phase sum.
    let mut terms: Vec<(f64, f64)> = Vec::new();
    for m in 0..d {
        for n in 0..d {
            let w = weights[m] * weights[n] * a_eig[(m, n)] * b_eig[(n, m)];
            if w != 0.0 {
                terms.push((w, e[m] - e[n]));
            }
        }
    }

    let values: Vec<Complex64> = times
        .par_iter()
        .map(|&t| {
            let mut acc = Complex64::ZERO;
            for &(w, freq) in &terms {
                acc += w * Complex64::from_polar(1.0, freq * t);
            }
            acc / z
        })
        .collect();

    TcfSeries::new(times.to_vec(), values)
}

/// Forward single-step element table as a dense matrix, built column by
/// column through the cache.
pub fn forward_step_matrix(op: &StepOperator, cache: &ElementCache) -> Result<DMatrix<Complex64>> {
    let d = op.grid().num_points();
    let mut m = DMatrix::zeros(d, d);
    for col in 0..d {
        let column = cache.column(col, op)?;
        for (row, v) in column.into_iter().enumerate() {
            m[(row, col)] = v;
        }
    }
    Ok(m)
}

/// Backward single-step table. The imaginary-time factors are real and the
/// backward convention conjugates the real-time factors in place, so the
/// backward table is the elementwise conjugate of the forward one.
pub fn backward_step_matrix(forward: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    forward.map(|z| z.conj())
}

/// Quadrature TCF: build Ũ(Δt_c) column by column, form Ũ^N and the
/// backward N-step table, and contract C(t) = (1/Z)·Tr(Ũ_b^N A Ũ^N B)
/// with diagonal observables.
///
/// Each time point gets its own Δt = t/N at fixed N; `scheme` supplies the
/// kinetic realizations, β, and N. Time points evaluate independently in
/// parallel.
pub fn trotterized_tcf(
    grid: &UniformGrid,
    potential: &Potential,
    mass: f64,
    scheme: &StepScheme,
    a: &Observable,
    b: &Observable,
    times: &[f64],
    z: f64,
    cache_dir: Option<&Path>,
) -> Result<TcfSeries> {
    if !(z > 0.0) {
        return Err(Error::invalid(format!("Z must be > 0, got {z}")));
    }
    let diag_a = a.diagonal_on(grid)?;
    let diag_b = b.diagonal_on(grid)?;
    let n = scheme.n_steps();

    let values: Result<Vec<Complex64>> = times
        .par_iter()
        .map(|&t| {
            let op = StepOperator::new(grid, potential, mass, scheme.at_time(t))?;
            let cache = ElementCache::for_operator(&op, cache_dir)?;
            let forward = forward_step_matrix(&op, &cache)?;
            let fwd_n = cpow(&forward, n);
            let bwd_n = backward_step_matrix(&fwd_n);
            Ok(contract_trace(&bwd_n, &diag_a, &fwd_n, &diag_b) / z)
        })
        .collect();

    let mut series = TcfSeries::new(times.to_vec(), values?)?;
    let op0 = StepOperator::new(grid, potential, mass, scheme.at_time(0.0))?;
    series.push_metadata(
        "scheme_family_fingerprint",
        crate::propagators::fingerprint_hex(op0.family_fingerprint()),
    );
    series.push_metadata("trotter_steps", scheme.n_steps().to_string());
    series.push_metadata("beta", format!("{:e}", scheme.beta()));
    series.push_metadata("real_time_split", "strang-symmetric");
    series.push_metadata("kinetic_factor_order", "nu-ascending,sigma-ascending");
    Ok(series)
}

/// Tr(X · diag(a) · Y · diag(b)) = Σ_{p,q} X[p,q]·a[q]·Y[q,p]·b[p].
fn contract_trace(
    x: &DMatrix<Complex64>,
    diag_a: &[f64],
    y: &DMatrix<Complex64>,
    diag_b: &[f64],
) -> Complex64 {
    let d = diag_a.len();
    let mut acc = Complex64::ZERO;
    for p in 0..d {
        let mut inner = Complex64::ZERO;
        for q in 0..d {
            inner += x[(p, q)] * diag_a[q] * y[(q, p)];
        }
        acc += inner * diag_b[p];
    }
    acc
}

/// Influence-functional hook: a pure function of the full forward and
/// backward position paths (each of length N+1, backward running from x_N
/// back to x₀). The gas-phase default returns 1 for every path.
pub type InfluenceFn = dyn Fn(&[f64], &[f64]) -> Complex64 + Sync;

/// Gas-phase influence functional: identically 1.
pub fn gas_phase_influence(_forward: &[f64], _backward: &[f64]) -> Complex64 {
    Complex64::ONE
}

/// One sampled path: 2N bead indices with the trace-closure structure
/// [x₀, x₁, …, x_N, y₁, …, y_{N-1}] (y₀ = x_N and y_N = x₀ are shared
/// endpoints), plus the path weight Θ including the influence factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub beads: Vec<usize>,
    pub theta: Complex64,
}

impl PathSample {
    /// Unit phase Θ/|Θ| (the complex generalization of sgn Θ).
    pub fn phase(&self) -> Complex64 {
        let m = self.theta.norm();
        if m > 0.0 {
            self.theta / m
        } else {
            Complex64::ZERO
        }
    }
}

fn backward_bead(beads: &[usize], n_steps: usize, j: usize) -> usize {
    // y_0 = x_N, y_j interior, y_N = x_0 (trace closure).
    if j == 0 {
        beads[n_steps]
    } else if j == n_steps {
        beads[0]
    } else {
        beads[n_steps + j]
    }
}

/// Path weight Θ: product of backward elements times product of forward
/// elements, times the influence factor.
pub fn theta_weight(
    beads: &[usize],
    n_steps: usize,
    forward: &DMatrix<Complex64>,
    backward: &DMatrix<Complex64>,
    influence: &InfluenceFn,
    grid: &UniformGrid,
) -> Result<Complex64> {
    if beads.len() != 2 * n_steps {
        return Err(Error::invalid(format!(
            "expected {} beads, got {}",
            2 * n_steps,
            beads.len()
        )));
    }
    let mut theta = Complex64::ONE;
    for k in 0..n_steps {
        let r = backward_bead(beads, n_steps, k + 1);
        let c = backward_bead(beads, n_steps, k);
        theta *= backward[(r, c)];
    }
    for k in 0..n_steps {
        theta *= forward[(beads[k + 1], beads[k])];
    }
    let xf: Vec<f64> = (0..=n_steps).map(|k| grid.position(beads[k])).collect();
    let xb: Vec<f64> = (0..=n_steps)
        .map(|j| grid.position(backward_bead(beads, n_steps, j)))
        .collect();
    theta *= influence(&xf, &xb);
    Ok(theta)
}

/// Largest path space enumerated exactly for the normalization factor F.
pub const ENUMERATION_LIMIT: f64 = 1e6;

/// Exact normalization factor F = Σ_paths |Θ| by full enumeration of the
/// D^{2N} bead-index space. Errors out above [`ENUMERATION_LIMIT`]; the
/// sampler then estimates F concurrently instead.
pub fn path_distribution_f(
    n_steps: usize,
    forward: &DMatrix<Complex64>,
    backward: &DMatrix<Complex64>,
    influence: &InfluenceFn,
    grid: &UniformGrid,
) -> Result<f64> {
    let d = grid.num_points();
    let n_beads = 2 * n_steps;
    let space = (d as f64).powi(n_beads as i32);
    if space > ENUMERATION_LIMIT {
        return Err(Error::invalid(format!(
            "path space {space:e} too large to enumerate"
        )));
    }
    let mut beads = vec![0usize; n_beads];
    let mut f = 0.0f64;
    loop {
        f += theta_weight(&beads, n_steps, forward, backward, influence, grid)?.norm();
        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos == n_beads {
                return Ok(f);
            }
            beads[pos] += 1;
            if beads[pos] < d {
                break;
            }
            beads[pos] = 0;
            pos += 1;
        }
    }
}

/// Monte Carlo engine configuration. Every knob of the sampler lives here.
#[derive(Debug, Clone)]
pub struct McConfig {
    /// Requested estimator samples M (one per sweep), split across chains.
    pub iterations: u64,
    pub seed: u64,
    /// Independent chains merged deterministically by index.
    pub chains: usize,
    /// Proposal window in grid points; 0 selects the default D/8.
    pub window: usize,
    /// Fraction of per-chain samples spent on burn-in before recording.
    pub burn_in_fraction: f64,
    /// Total number of batches for the batched-mean standard error.
    pub batches: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            iterations: 10_000,
            seed: 0,
            chains: 1,
            window: 0,
            burn_in_fraction: 0.1,
            batches: 32,
        }
    }
}

/// Monte Carlo estimate with its diagnostics.
#[derive(Debug, Clone)]
pub struct McResult {
    pub estimate: Complex64,
    pub standard_error: f64,
    pub f_estimate: f64,
    /// Whether F came from exact enumeration (small path spaces) or from a
    /// concurrent uniform-sampling estimate.
    pub f_exact: bool,
    pub acceptance_rate: f64,
    /// Estimator samples actually recorded (requested M rounded down to a
    /// multiple of the batch structure).
    pub samples: u64,
}

struct ChainOutput {
    batch_means: Vec<Complex64>,
    accepted: u64,
    proposed: u64,
    f_uniform_mean: f64,
}

/// Path Monte Carlo estimate of the TCF at the scheme's time point.
///
/// Metropolis over bead-index space with |Θ| as the stationary weight:
/// single-bead uniform displacements within ±window (wrapping), sweeping
/// over beads, acceptance min(1, |Θ'|/|Θ|). The estimator averages
/// A(x_N)·B(x₀)·phase(Θ) and scales by F/Z with Z from the eigen-oracle.
#[allow(clippy::too_many_arguments)]
pub fn mc_tcf(
    grid: &UniformGrid,
    potential: &Potential,
    mass: f64,
    scheme: &StepScheme,
    a: &Observable,
    b: &Observable,
    cfg: &McConfig,
    z: f64,
    influence: &InfluenceFn,
    cache_dir: Option<&Path>,
) -> Result<McResult> {
    if cfg.iterations == 0 {
        return Err(Error::invalid("iterations must be >= 1".to_string()));
    }
    if cfg.chains == 0 || cfg.batches == 0 || cfg.batches % cfg.chains != 0 {
        return Err(Error::invalid(format!(
            "chains ({}) must be >= 1 and divide batches ({})",
            cfg.chains, cfg.batches
        )));
    }
    if !(z > 0.0) {
        return Err(Error::invalid(format!("Z must be > 0, got {z}")));
    }
    let d = grid.num_points();
    let n_steps = scheme.n_steps();
    let n_beads = 2 * n_steps;
    let window = if cfg.window == 0 {
        (d / 8).max(1)
    } else {
        cfg.window.min(d - 1)
    };

    let op = StepOperator::new(grid, potential, mass, *scheme)?;
    let cache = ElementCache::for_operator(&op, cache_dir)?;
    let forward = forward_step_matrix(&op, &cache)?;
    let backward = backward_step_matrix(&forward);
    let diag_a = a.diagonal_on(grid)?;
    let diag_b = b.diagonal_on(grid)?;

    // Exact F where the path space is enumerable.
    let space = (d as f64).powi(n_beads as i32);
    let f_exact_value = if space <= ENUMERATION_LIMIT {
        Some(path_distribution_f(
            n_steps, &forward, &backward, influence, grid,
        )?)
    } else {
        None
    };

    // Every chain starts at the potential minimum, the thermally dominant
    // index.
    let v = potential.evaluate_on(grid)?;
    let q_start = (0..d)
        .min_by(|&i, &j| v[i].total_cmp(&v[j]))
        .expect("non-empty grid");

    let batches_per_chain = cfg.batches / cfg.chains;
    let per_chain = cfg.iterations / cfg.chains as u64;
    let batch_len = (per_chain / batches_per_chain as u64).max(1);
    let samples_per_chain = batch_len * batches_per_chain as u64;

    let chain_results: Result<Vec<ChainOutput>> = (0..cfg.chains)
        .into_par_iter()
        .map(|chain| {
            run_chain(ChainParams {
                seed: cfg.seed.wrapping_add(chain as u64),
                n_steps,
                d,
                window,
                q_start,
                burn_in: ((samples_per_chain as f64) * cfg.burn_in_fraction).ceil() as u64,
                batches: batches_per_chain,
                batch_len,
                forward: &forward,
                backward: &backward,
                diag_a: &diag_a,
                diag_b: &diag_b,
                influence,
                grid,
                estimate_f: f_exact_value.is_none(),
            })
        })
        .collect();
    let chain_results = chain_results?;

    let all_means: Vec<Complex64> = chain_results
        .iter()
        .flat_map(|c| c.batch_means.iter().copied())
        .collect();
    let b_total = all_means.len() as f64;
    let mean: Complex64 = all_means.iter().sum::<Complex64>() / b_total;
    let var_re: f64 = all_means
        .iter()
        .map(|m| (m.re - mean.re).powi(2))
        .sum::<f64>()
        / (b_total - 1.0).max(1.0);
    let var_im: f64 = all_means
        .iter()
        .map(|m| (m.im - mean.im).powi(2))
        .sum::<f64>()
        / (b_total - 1.0).max(1.0);

    let f_value = match f_exact_value {
        Some(f) => f,
        None => {
            let avg: f64 =
                chain_results.iter().map(|c| c.f_uniform_mean).sum::<f64>() / cfg.chains as f64;
            avg * space
        }
    };

    let scale = f_value / z;
    let accepted: u64 = chain_results.iter().map(|c| c.accepted).sum();
    let proposed: u64 = chain_results.iter().map(|c| c.proposed).sum();

    Ok(McResult {
        estimate: mean * scale,
        standard_error: ((var_re + var_im) / b_total).sqrt() * scale,
        f_estimate: f_value,
        f_exact: f_exact_value.is_some(),
        acceptance_rate: accepted as f64 / proposed.max(1) as f64,
        samples: samples_per_chain * cfg.chains as u64,
    })
}

struct ChainParams<'a> {
    seed: u64,
    n_steps: usize,
    d: usize,
    window: usize,
    q_start: usize,
    burn_in: u64,
    batches: usize,
    batch_len: u64,
    forward: &'a DMatrix<Complex64>,
    backward: &'a DMatrix<Complex64>,
    diag_a: &'a [f64],
    diag_b: &'a [f64],
    influence: &'a InfluenceFn,
    grid: &'a UniformGrid,
    estimate_f: bool,
}

fn run_chain(p: ChainParams<'_>) -> Result<ChainOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let n_beads = 2 * p.n_steps;
    let mut path = PathSample {
        beads: vec![p.q_start; n_beads],
        theta: Complex64::ZERO,
    };
    path.theta = theta_weight(
        &path.beads,
        p.n_steps,
        p.forward,
        p.backward,
        p.influence,
        p.grid,
    )?;
    if path.theta.norm() == 0.0 {
        return Err(Error::SamplerStuck {
            batch: 0,
            theta_abs: 0.0,
            window: p.window,
        });
    }

    let mut accepted: u64 = 0;
    let mut proposed: u64 = 0;
    let mut f_uniform_sum = 0.0f64;
    let mut f_uniform_count: u64 = 0;

    let sweep = |rng: &mut ChaCha8Rng, path: &mut PathSample| -> Result<u64> {
        let mut acc = 0u64;
        for bead in 0..n_beads {
            // Uniform displacement in ±window excluding zero; wraps.
            let k = rng.random_range(0..2 * p.window) as i64;
            let delta = if k < p.window as i64 {
                k - p.window as i64
            } else {
                k - p.window as i64 + 1
            };
            let old_q = path.beads[bead];
            let new_q = (old_q as i64 + delta).rem_euclid(p.d as i64) as usize;
            path.beads[bead] = new_q;
            let new_theta = theta_weight(
                &path.beads,
                p.n_steps,
                p.forward,
                p.backward,
                p.influence,
                p.grid,
            )?;
            let ratio = new_theta.norm() / path.theta.norm();
            if ratio >= 1.0 || rng.random::<f64>() < ratio {
                path.theta = new_theta;
                acc += 1;
            } else {
                path.beads[bead] = old_q;
            }
        }
        Ok(acc)
    };

    for _ in 0..p.burn_in {
        let acc = sweep(&mut rng, &mut path)?;
        accepted += acc;
        proposed += n_beads as u64;
    }

    let mut batch_means = Vec::with_capacity(p.batches);
    for batch in 0..p.batches {
        let mut sum = Complex64::ZERO;
        let mut batch_accepted = 0u64;
        for _ in 0..p.batch_len {
            let acc = sweep(&mut rng, &mut path)?;
            batch_accepted += acc;
            proposed += n_beads as u64;
            let x_n = path.beads[p.n_steps];
            let x_0 = path.beads[0];
            sum += p.diag_a[x_n] * p.diag_b[x_0] * path.phase();
            if p.estimate_f {
                // Concurrent uniform-path estimate of F = Σ|Θ|.
                let beads: Vec<usize> = (0..n_beads).map(|_| rng.random_range(0..p.d)).collect();
                let th = theta_weight(
                    &beads, p.n_steps, p.forward, p.backward, p.influence, p.grid,
                )?;
                f_uniform_sum += th.norm();
                f_uniform_count += 1;
            }
        }
        accepted += batch_accepted;
        if batch_accepted == 0 {
            return Err(Error::SamplerStuck {
                batch,
                theta_abs: path.theta.norm(),
                window: p.window,
            });
        }
        batch_means.push(sum / p.batch_len as f64);
    }

    Ok(ChainOutput {
        batch_means,
        accepted,
        proposed,
        f_uniform_mean: if f_uniform_count > 0 {
            f_uniform_sum / f_uniform_count as f64
        } else {
            0.0
        },
    })
}

/// Bound on the TCF error induced by a propagator error ε_U:
/// (2/Z)·‖A‖₁·‖B‖₁·‖e^{-βH/2}‖₁·ε_U.
pub fn tcf_error_bound(norm1_a: f64, norm1_b: f64, norm1_thermal: f64, eps_u: f64, z: f64) -> f64 {
    2.0 / z * norm1_a * norm1_b * norm1_thermal * eps_u
}

/// Trace norms entering the error budget.
#[derive(Debug, Clone, Copy)]
pub struct BudgetNorms {
    pub a_trace: f64,
    pub b_trace: f64,
    pub thermal_trace: f64,
}

/// Resolved error budget: the total error split between the propagator
/// approximation and Monte Carlo, with the implied iteration and step
/// counts (implied constants 1).
#[derive(Debug, Clone)]
pub struct ErrorBudget {
    pub epsilon_total: f64,
    pub epsilon_c: f64,
    pub epsilon_mc: f64,
    /// M = ⌈1/ε_MC²⌉.
    pub mc_iterations: u64,
    /// N for a 2k-th order Suzuki product, rounded up.
    pub trotter_steps: u64,
    pub trotter_steps_raw: f64,
    pub omega: f64,
    pub suzuki_order_k: u32,
}

/// Ω = max of the two sub-Hamiltonian norms.
pub fn omega_from_subhamiltonians(norm_h1: f64, norm_h2: f64) -> f64 {
    norm_h1.max(norm_h2)
}

/// Split a total error budget ε = ε_C/2 + ε_MC/2 (fraction `split` of ε
/// going to the propagator side) and derive M and N.
pub fn error_budget(
    eps_total: f64,
    split: f64,
    suzuki_order_k: u32,
    omega: f64,
    t_c_abs: f64,
    norms: &BudgetNorms,
    z: f64,
) -> Result<ErrorBudget> {
    if !(eps_total > 0.0) || !(split > 0.0 && split < 1.0) {
        return Err(Error::invalid(format!(
            "need eps_total > 0 and split in (0,1), got {eps_total}, {split}"
        )));
    }
    if suzuki_order_k < 1 {
        return Err(Error::invalid("Suzuki order k must be >= 1".to_string()));
    }
    for (name, v) in [
        ("omega", omega),
        ("|t_c|", t_c_abs),
        ("norm1_a", norms.a_trace),
        ("norm1_b", norms.b_trace),
        ("norm1_thermal", norms.thermal_trace),
        ("Z", z),
    ] {
        if !(v > 0.0) {
            return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
        }
    }
    let epsilon_c = 2.0 * split * eps_total;
    let epsilon_mc = 2.0 * (1.0 - split) * eps_total;
    let mc_iterations = (1.0 / (epsilon_mc * epsilon_mc)).ceil() as u64;
    let k = suzuki_order_k as f64;
    let power = 2.0 * k + 1.0;
    let raw = (norms.a_trace * norms.b_trace * norms.thermal_trace
        * omega.powf(power)
        * t_c_abs.powf(power)
        / (z * epsilon_c))
        .powf(1.0 / (2.0 * k));
    Ok(ErrorBudget {
        epsilon_total: eps_total,
        epsilon_c,
        epsilon_mc,
        mc_iterations,
        trotter_steps: raw.ceil().max(1.0) as u64,
        trotter_steps_raw: raw,
        omega,
        suzuki_order_k,
    })
}

/// Asymptotic runtime/space comparison numbers (implied constants 1, not
/// wall-clock predictions).
#[derive(Debug, Clone, Copy)]
pub struct CostModel {
    /// M·N + P^{3d}
    pub pimc_runtime: f64,
    /// P^{2d}
    pub pimc_space: f64,
    /// M·N·Q(Ũ)
    pub hpimc_runtime: f64,
    /// d·log₂P + Anc(Ũ)
    pub hpimc_space: f64,
}

pub fn cost_model(m: f64, n: f64, p: f64, d: f64, q_u: f64, anc_u: f64) -> CostModel {
    CostModel {
        pimc_runtime: m * n + p.powf(3.0 * d),
        pimc_space: p.powf(2.0 * d),
        hpimc_runtime: m * n * q_u,
        hpimc_space: d * p.log2() + anc_u,
    }
}
