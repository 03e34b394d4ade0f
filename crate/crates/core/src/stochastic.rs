//! Stochastic-trajectory engine: brute-force noise averaging.
//!
//! Each realization integrates a Schrodinger equation whose site frequencies
//! jitter, omega_n(t) = n (omega + phi_n(t)), with phi either white or
//! Ornstein-Uhlenbeck noise, shared across sites or independent per site.
//! Averaging the projectors psi psi* over realizations estimates the same
//! density matrix the master engine evolves, which makes this module the
//! oracle for the master equation's noise reductions:
//!
//! * white noise of strength G reproduces the constant-rate generator at
//!   rate G, and
//! * OU noise of strength G reproduces the switch-on schedule with
//!   schedule gamma = 2G (the generator convention counts coherence decay
//!   at twice the amplitude rate; see the master module notes).
//!
//! Noise is held piecewise-constant over each grid step, the smooth-noise
//! limit that lands on the Stratonovich convention the reductions assume.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::PropagationGrid;
use crate::ham::HamOp;
use crate::master::{CorrelationMode, DensityMatrix};
use crate::unitary::PureState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Delta-correlated: <phi_n(t) phi_m(t')> = gamma [delta_nm or 1] delta(t-t').
    White,
    /// Exponentially correlated: 2 <W_n(t) W_m(t')> =
    /// gamma lambda [delta_nm or 1] exp(-lambda |t-t'|).
    OrnsteinUhlenbeck,
}

/// Stochastic process driving the site frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Strength gamma >= 0 (an inverse time).
    pub gamma: f64,
    /// Bandwidth lambda > 0; only meaningful for OrnsteinUhlenbeck.
    pub lambda: f64,
    pub correlation: CorrelationMode,
}

impl NoiseModel {
    pub fn white(gamma: f64, correlation: CorrelationMode) -> Self {
        Self {
            kind: NoiseKind::White,
            gamma,
            lambda: 0.0,
            correlation,
        }
    }

    pub fn ornstein_uhlenbeck(gamma: f64, lambda: f64, correlation: CorrelationMode) -> Self {
        Self {
            kind: NoiseKind::OrnsteinUhlenbeck,
            gamma,
            lambda,
            correlation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "noise gamma must be finite and nonnegative, got {}",
                self.gamma
            )));
        }
        if self.kind == NoiseKind::OrnsteinUhlenbeck
            && (!self.lambda.is_finite() || self.lambda <= 0.0)
        {
            return Err(Error::InvalidSpec(format!(
                "noise bandwidth lambda must be finite and positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(master_seed: u64, realization: u64, site: u64) -> ChaCha8Rng {
    // chain through the scrambler so (realization, site) pairs cannot alias
    // by any linear relation
    let a = splitmix64(master_seed);
    let b = splitmix64(a ^ realization);
    let mut s = splitmix64(b ^ site);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Reproducible per-realization noise generators: one shared stream in
/// correlated mode, one stream per site otherwise. Streams depend only on
/// (master_seed, realization, site), never on execution order.
pub struct NoiseStreams {
    rngs: Vec<ChaCha8Rng>,
    num_sites: usize,
    correlation: CorrelationMode,
}

impl NoiseStreams {
    pub fn for_realization(
        master_seed: u64,
        realization: u64,
        num_sites: usize,
        correlation: CorrelationMode,
    ) -> Self {
        let n_streams = match correlation {
            CorrelationMode::Correlated => 1,
            CorrelationMode::Uncorrelated => num_sites,
        };
        let rngs = (0..n_streams)
            .map(|site| stream_rng(master_seed, realization, site as u64))
            .collect();
        Self {
            rngs,
            num_sites,
            correlation,
        }
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    fn draw(&mut self, scale: f64) -> Vec<f64> {
        match self.correlation {
            CorrelationMode::Correlated => {
                let xi: f64 = StandardNormal.sample(&mut self.rngs[0]);
                vec![scale * xi; self.num_sites]
            }
            CorrelationMode::Uncorrelated => self
                .rngs
                .iter_mut()
                .map(|rng| {
                    let xi: f64 = StandardNormal.sample(rng);
                    scale * xi
                })
                .collect(),
        }
    }
}

/// One white-noise sample per site, frozen over a step of length dt:
/// Gaussian, mean 0, variance gamma/dt, so the discrete process integrates
/// to the delta correlation as dt -> 0. Correlated mode draws once and
/// replicates.
pub fn sample_white_step(dt: f64, model: &NoiseModel, streams: &mut NoiseStreams) -> Vec<f64> {
    assert!(dt > 0.0, "white noise step requires dt > 0");
    streams.draw((model.gamma / dt).sqrt())
}

/// Stationary initial condition for the OU process: N(0, gamma lambda / 2).
pub fn ou_stationary_init(model: &NoiseModel, streams: &mut NoiseStreams) -> Vec<f64> {
    streams.draw((0.5 * model.gamma * model.lambda).sqrt())
}

/// Exact OU transition over dt: decay by exp(-lambda dt) plus a Gaussian
/// innovation sized so the stationary law N(0, gamma lambda / 2) is
/// preserved for any dt.
pub fn sample_ou_step(
    prev: &[f64],
    dt: f64,
    model: &NoiseModel,
    streams: &mut NoiseStreams,
) -> Vec<f64> {
    assert!(dt > 0.0, "OU step requires dt > 0");
    assert_eq!(prev.len(), streams.num_sites, "prev length must match sites");
    let decay = (-model.lambda * dt).exp();
    let sd = (0.5 * model.gamma * model.lambda * (1.0 - decay * decay)).sqrt();
    let innovation = streams.draw(sd);
    prev.iter()
        .zip(innovation)
        .map(|(p, i)| p * decay + i)
        .collect()
}

/// One noise realization: recorded states plus the worst per-step norm
/// deviation seen before renormalization.
#[derive(Debug, Clone)]
pub struct TrajectoryRun {
    pub states: Vec<PureState>,
    pub max_norm_drift: f64,
}

/// Integrates one realization of the noisy Schrodinger equation.
///
/// The noise vector is frozen over each grid step; the resulting
/// time-independent Hermitian Hamiltonian is integrated with RK4,
/// sub-stepped so the largest instantaneous frequency stays well resolved
/// even for tail draws. The state is renormalized after each noise step:
/// the exact flow is norm-preserving, so this only removes integrator
/// rounding and cannot bias the ensemble.
pub fn propagate_trajectory(
    h: &Array2<f64>,
    psi0: &PureState,
    model: &NoiseModel,
    grid: &PropagationGrid,
    streams: &mut NoiseStreams,
) -> Result<TrajectoryRun> {
    model.validate()?;
    let ham = HamOp::new(h)?;
    let n = ham.dim();
    if psi0.num_sites() != n {
        return Err(Error::InvalidState(format!(
            "state has {} sites but the Hamiltonian has {n}",
            psi0.num_sites()
        )));
    }
    if streams.num_sites() != n {
        return Err(Error::InvalidState(format!(
            "noise streams cover {} sites but the lattice has {n}",
            streams.num_sites()
        )));
    }
    let dt = grid.dz();
    let z0 = psi0.z;
    let coherent_bound = ham.gershgorin();

    let mut psi: Vec<C64> = psi0.amplitudes.to_vec();
    let norm0: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in psi.iter_mut() {
        *a /= norm0;
    }
    let mut k1 = vec![C64::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();
    let mut extra = vec![0.0f64; n];

    let mut ou_state = match model.kind {
        NoiseKind::OrnsteinUhlenbeck => ou_stationary_init(model, streams),
        NoiseKind::White => Vec::new(),
    };

    let mut states = Vec::with_capacity(grid.n_outputs());
    let mut max_drift = 0f64;
    states.push(PureState {
        amplitudes: Array1::from(psi.clone()),
        z: z0,
    });

    let minus_i = C64::new(0.0, -1.0);
    for step in 0..grid.n_steps() {
        let phi = match model.kind {
            NoiseKind::White => sample_white_step(dt, model, streams),
            NoiseKind::OrnsteinUhlenbeck => {
                let current = ou_state.clone();
                ou_state = sample_ou_step(&ou_state, dt, model, streams);
                current
            }
        };
        // site n sees the frequency shift n * phi_n
        let mut extra_max = 0f64;
        for i in 0..n {
            extra[i] = i as f64 * phi[i];
            extra_max = extra_max.max(extra[i].abs());
        }
        let n_sub = (((coherent_bound + extra_max) * dt) / 0.02).ceil().max(1.0) as usize;
        let h_sub = dt / n_sub as f64;
        for _ in 0..n_sub {
            ham.apply_with_diag(&psi, &extra, &mut k1);
            for v in k1.iter_mut() {
                *v *= minus_i;
            }
            for i in 0..n {
                stage[i] = psi[i] + k1[i] * (0.5 * h_sub);
            }
            ham.apply_with_diag(&stage, &extra, &mut k2);
            for v in k2.iter_mut() {
                *v *= minus_i;
            }
            for i in 0..n {
                stage[i] = psi[i] + k2[i] * (0.5 * h_sub);
            }
            ham.apply_with_diag(&stage, &extra, &mut k3);
            for v in k3.iter_mut() {
                *v *= minus_i;
            }
            for i in 0..n {
                stage[i] = psi[i] + k3[i] * h_sub;
            }
            ham.apply_with_diag(&stage, &extra, &mut k4);
            for v in k4.iter_mut() {
                *v *= minus_i;
            }
            for i in 0..n {
                psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h_sub / 6.0);
            }
        }
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let drift = (norm - 1.0).abs();
        if !(drift <= 1e-6) {
            return Err(Error::IntegrationFailure(format!(
                "norm drifted by {drift:.3e} within one noise step at t = {}; reduce dt ({dt})",
                z0 + (step + 1) as f64 * dt
            )));
        }
        max_drift = max_drift.max(drift);
        for a in psi.iter_mut() {
            *a /= norm;
        }
        if (step + 1) % grid.stride() == 0 {
            states.push(PureState {
                amplitudes: Array1::from(psi.clone()),
                z: z0 + (step + 1) as f64 * dt,
            });
        }
    }

    Ok(TrajectoryRun {
        states,
        max_norm_drift: max_drift,
    })
}

/// Noise average over M realizations.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub num_realizations: usize,
    pub master_seed: u64,
    /// Mean projector (1/M) sum psi psi* at the final grid point.
    pub mean_sigma: DensityMatrix,
    /// Elementwise standard error of mean_sigma (complex scatter / sqrt M).
    pub std_error: Array2<f64>,
    /// Ensemble-averaged site populations at every recorded point
    /// (rows: outputs, columns: sites).
    pub mean_populations: Array2<f64>,
}

// Realizations are accumulated in fixed chunks and the chunk partials are
// folded in index order, so the floating-point result is identical for any
// worker count.
const CHUNK: usize = 32;

struct ChunkSums {
    sum_sigma: Array2<C64>,
    sum_sq: Array2<f64>,
    sum_pops: Array2<f64>,
}

/// Runs M independent realizations (in parallel) and averages their
/// projectors. Per-realization RNG streams are derived from
/// (master_seed, realization index), so the result is a pure function of the
/// inputs regardless of thread count.
pub fn run_ensemble(
    h: &Array2<f64>,
    psi0: &PureState,
    model: &NoiseModel,
    grid: &PropagationGrid,
    num_realizations: usize,
    master_seed: u64,
) -> Result<TrajectoryEnsemble> {
    if num_realizations == 0 {
        return Err(Error::InvalidSpec("ensemble needs at least one realization".into()));
    }
    model.validate()?;
    let n = psi0.num_sites();
    let n_out = grid.n_outputs();

    let n_chunks = num_realizations.div_ceil(CHUNK);
    let partials: Result<Vec<ChunkSums>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(num_realizations);
            let mut sums = ChunkSums {
                sum_sigma: Array2::zeros((n, n)),
                sum_sq: Array2::zeros((n, n)),
                sum_pops: Array2::zeros((n_out, n)),
            };
            for index in lo..hi {
                let mut streams = NoiseStreams::for_realization(
                    master_seed,
                    index as u64,
                    n,
                    model.correlation,
                );
                let run = propagate_trajectory(h, psi0, model, grid, &mut streams).map_err(
                    |e| Error::RealizationFailed {
                        index: index as u64,
                        message: e.to_string(),
                    },
                )?;
                for (row, state) in run.states.iter().enumerate() {
                    for j in 0..n {
                        sums.sum_pops[[row, j]] += state.amplitudes[j].norm_sqr();
                    }
                }
                let last = &run.states[run.states.len() - 1].amplitudes;
                for i in 0..n {
                    for j in 0..n {
                        let z = last[i] * last[j].conj();
                        sums.sum_sigma[[i, j]] += z;
                        sums.sum_sq[[i, j]] += z.norm_sqr();
                    }
                }
            }
            Ok(sums)
        })
        .collect();
    let partials = partials?;

    let mut sum_sigma: Array2<C64> = Array2::zeros((n, n));
    let mut sum_sq: Array2<f64> = Array2::zeros((n, n));
    let mut sum_pops: Array2<f64> = Array2::zeros((n_out, n));
    for p in partials {
        sum_sigma += &p.sum_sigma;
        sum_sq += &p.sum_sq;
        sum_pops += &p.sum_pops;
    }

    let m = num_realizations as f64;
    let mean = sum_sigma.mapv(|v| v / m);
    let mut std_error = Array2::zeros((n, n));
    if num_realizations > 1 {
        for i in 0..n {
            for j in 0..n {
                let var = (sum_sq[[i, j]] - mean[[i, j]].norm_sqr() * m) / (m - 1.0);
                std_error[[i, j]] = (var.max(0.0) / m).sqrt();
            }
        }
    }
    let t_final = grid.z_max() + psi0.z;

    Ok(TrajectoryEnsemble {
        num_realizations,
        master_seed,
        mean_sigma: DensityMatrix {
            elements: mean,
            t: t_final,
        },
        std_error,
        mean_populations: sum_pops.mapv(|v| v / m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_hamiltonian, LatticeSpec};
    use crate::unitary::propagate_unitary;

    fn gf(n: usize, c1: f64, alpha: f64) -> Array2<f64> {
        build_hamiltonian(&LatticeSpec::glauber_fock(n, c1, alpha)).unwrap()
    }

    #[test]
    fn zero_strength_noise_is_exactly_silent() {
        let model = NoiseModel::white(0.0, CorrelationMode::Uncorrelated);
        let mut streams = NoiseStreams::for_realization(7, 0, 4, model.correlation);
        assert_eq!(sample_white_step(0.1, &model, &mut streams), vec![0.0; 4]);

        let model = NoiseModel::ornstein_uhlenbeck(0.0, 1.0, CorrelationMode::Uncorrelated);
        let mut streams = NoiseStreams::for_realization(7, 0, 4, model.correlation);
        let init = ou_stationary_init(&model, &mut streams);
        assert_eq!(init, vec![0.0; 4]);
        assert_eq!(
            sample_ou_step(&init, 0.1, &model, &mut streams),
            vec![0.0; 4]
        );
    }

    #[test]
    fn correlated_mode_replicates_one_draw() {
        let model = NoiseModel::white(0.5, CorrelationMode::Correlated);
        let mut streams = NoiseStreams::for_realization(3, 9, 6, model.correlation);
        let phi = sample_white_step(0.05, &model, &mut streams);
        assert!(phi.iter().all(|v| *v == phi[0]));
        assert!(phi[0] != 0.0);

        let model = NoiseModel::ornstein_uhlenbeck(0.5, 2.0, CorrelationMode::Correlated);
        let mut streams = NoiseStreams::for_realization(3, 9, 6, model.correlation);
        let init = ou_stationary_init(&model, &mut streams);
        assert!(init.iter().all(|v| *v == init[0]));
        let next = sample_ou_step(&init, 0.1, &model, &mut streams);
        assert!(next.iter().all(|v| *v == next[0]));
    }

    #[test]
    fn white_sample_variance_tracks_gamma_over_dt() {
        let gamma = 0.8;
        let dt = 0.1;
        let model = NoiseModel::white(gamma, CorrelationMode::Correlated);
        let mut streams = NoiseStreams::for_realization(42, 0, 1, model.correlation);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let v = sample_white_step(dt, &model, &mut streams)[0];
            sum += v;
            sum_sq += v * v;
        }
        let var = (sum_sq - sum * sum / n as f64) / (n as f64 - 1.0);
        let target = gamma / dt;
        assert!(
            (var - target).abs() / target < 0.02,
            "sample variance {var} vs {target}"
        );
    }

    #[test]
    fn ou_update_decay_and_memoryless_limits() {
        let model = NoiseModel::ornstein_uhlenbeck(2.0, 0.5, CorrelationMode::Correlated);
        let dt = 0.3;
        // same innovation, different previous values: the difference must
        // shrink by exactly exp(-lambda dt)
        let s1 = NoiseStreams::for_realization(11, 4, 3, model.correlation);
        let mut a = NoiseStreams {
            rngs: s1.rngs.clone(),
            num_sites: 3,
            correlation: s1.correlation,
        };
        let mut b = NoiseStreams {
            rngs: s1.rngs.clone(),
            num_sites: 3,
            correlation: s1.correlation,
        };
        let prev_a = vec![1.0, -2.0, 0.5];
        let prev_b = vec![0.0, 0.0, 0.0];
        let out_a = sample_ou_step(&prev_a, dt, &model, &mut a);
        let out_b = sample_ou_step(&prev_b, dt, &model, &mut b);
        let decay = (-model.lambda * dt).exp();
        for i in 0..3 {
            assert!(((out_a[i] - out_b[i]) - prev_a[i] * decay).abs() < 1e-14);
        }

        // enormous lambda dt: no memory of prev at all
        let model = NoiseModel::ornstein_uhlenbeck(2.0, 1e9, CorrelationMode::Correlated);
        let mut a = NoiseStreams {
            rngs: s1.rngs.clone(),
            num_sites: 3,
            correlation: s1.correlation,
        };
        let mut b = NoiseStreams {
            rngs: s1.rngs.clone(),
            num_sites: 3,
            correlation: s1.correlation,
        };
        let out_a = sample_ou_step(&prev_a, 10.0, &model, &mut a);
        let out_b = sample_ou_step(&prev_b, 10.0, &model, &mut b);
        for i in 0..3 {
            assert_eq!(out_a[i], out_b[i]);
        }
    }

    #[test]
    fn noiseless_trajectory_is_the_unitary_run() {
        let h = gf(8, 1.0, 0.5);
        let psi0 = PureState::site_basis(0, 8).unwrap();
        let grid = PropagationGrid::new(2.0, 1e-3).unwrap();
        let model = NoiseModel::white(0.0, CorrelationMode::Uncorrelated);
        let mut streams = NoiseStreams::for_realization(0, 0, 8, model.correlation);
        let noisy = propagate_trajectory(&h, &psi0, &model, &grid, &mut streams).unwrap();
        let clean = propagate_unitary(&h, &psi0, &grid).unwrap();
        assert_eq!(noisy.states.len(), clean.states.len());
        for (a, b) in noisy.states.iter().zip(clean.states.iter()) {
            for (x, y) in a.amplitudes.iter().zip(b.amplitudes.iter()) {
                assert!((x - y).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn every_noisy_state_keeps_unit_norm() {
        let h = gf(6, 1.0, 0.4);
        let psi0 = PureState::site_basis(1, 6).unwrap();
        let grid = PropagationGrid::new(3.0, 5e-3).unwrap();
        let model = NoiseModel::white(0.3, CorrelationMode::Uncorrelated);
        let mut streams = NoiseStreams::for_realization(123, 5, 6, model.correlation);
        let run = propagate_trajectory(&h, &psi0, &model, &grid, &mut streams).unwrap();
        for s in &run.states {
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
        assert!(run.max_norm_drift < 1e-8);
    }

    #[test]
    fn single_realization_mean_is_a_pure_projector() {
        let h = gf(5, 1.0, 0.5);
        let psi0 = PureState::site_basis(0, 5).unwrap();
        let grid = PropagationGrid::new(1.0, 2e-3).unwrap();
        let model = NoiseModel::ornstein_uhlenbeck(0.5, 1.0, CorrelationMode::Uncorrelated);
        let ens = run_ensemble(&h, &psi0, &model, &grid, 1, 77).unwrap();
        let rho = &ens.mean_sigma.elements;
        let rho2 = rho.dot(rho);
        let purity: f64 = rho2.diag().iter().map(|v| v.re).sum();
        assert!((purity - 1.0).abs() < 1e-12);
        assert!((ens.mean_sigma.trace().re - 1.0).abs() < 1e-12);
        assert!(ens.std_error.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn ensemble_mean_is_hermitian_with_unit_trace() {
        let h = gf(5, 1.0, 0.5);
        let psi0 = PureState::site_basis(0, 5).unwrap();
        let grid = PropagationGrid::new(1.0, 5e-3).unwrap();
        let model = NoiseModel::white(0.4, CorrelationMode::Correlated);
        let ens = run_ensemble(&h, &psi0, &model, &grid, 50, 2024).unwrap();
        assert!(ens.mean_sigma.hermiticity_deviation() < 1e-10);
        assert!((ens.mean_sigma.trace().re - 1.0).abs() < 1e-10);
        let row_sums: Vec<f64> = ens
            .mean_populations
            .rows()
            .into_iter()
            .map(|r| r.sum())
            .collect();
        for s in row_sums {
            assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn ensembles_are_bitwise_reproducible_across_thread_counts() {
        let h = gf(6, 1.0, 0.5);
        let psi0 = PureState::site_basis(0, 6).unwrap();
        let grid = PropagationGrid::new(1.0, 5e-3).unwrap();
        let model = NoiseModel::ornstein_uhlenbeck(0.6, 0.8, CorrelationMode::Uncorrelated);
        let run_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_ensemble(&h, &psi0, &model, &grid, 70, 99).unwrap())
        };
        let a = run_with(1);
        let b = run_with(4);
        for (x, y) in a
            .mean_sigma
            .elements
            .iter()
            .zip(b.mean_sigma.elements.iter())
        {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
        for (x, y) in a.std_error.iter().zip(b.std_error.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.mean_populations.iter().zip(b.mean_populations.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let h = gf(5, 1.0, 0.5);
        let psi0 = PureState::site_basis(0, 4).unwrap();
        let grid = PropagationGrid::new(1.0, 1e-2).unwrap();
        let model = NoiseModel::white(0.1, CorrelationMode::Uncorrelated);
        let mut streams = NoiseStreams::for_realization(0, 0, 4, model.correlation);
        assert!(propagate_trajectory(&h, &psi0, &model, &grid, &mut streams).is_err());
        assert!(run_ensemble(&h, &psi0, &model, &grid, 0, 0).is_err());
    }
}
