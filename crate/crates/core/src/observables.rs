//! Transport observables, closed-form solutions, and dephasing-rate scans.
//!
//! The mean excitation index ⟨n(t)⟩ of the driven ladder has closed forms
//! in the unitary and constant-rate cases, a two-variable moment ODE for
//! arbitrary rate schedules, and the full density-matrix and trajectory
//! engines as ground truth. `scan_dephasing` evaluates any of them over a
//! grid of noise strengths at a fixed revival time, which is where the
//! noise-assisted transport peak lives.
//!
//! Rate conventions: every analytic formula here is written in terms of
//! gamma(t), the decay rate of the coherence amplitude ⟨a⟩. The
//! density-matrix generator counts the same physics at twice that rate
//! (its first off-diagonals decay at R/2), so the scan doubles the
//! schedule before dispatching to the master engine. Both sides of that
//! factor are pinned by exact-decay tests in the master module.

use std::fmt;

use ndarray::ArrayView1;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::PropagationGrid;
use crate::ham::boundary_leakage;
use crate::lattice::{build_hamiltonian, HoppingMode, LatticeSpec};
use crate::master::{
    integrate_master, suggested_step, CorrelationMode, DensityMatrix, DephasingSchedule,
};
use crate::stochastic::{run_ensemble, NoiseModel};
use crate::unitary::PureState;

/// Which solver produced a transport curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineTag {
    ClosedForm,
    MomentOde,
    MasterEq,
    Trajectories,
}

impl EngineTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            EngineTag::ClosedForm => "closed-form",
            EngineTag::MomentOde => "moment-ode",
            EngineTag::MasterEq => "master-eq",
            EngineTag::Trajectories => "trajectories",
        }
    }
}

impl fmt::Display for EngineTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Noise family scanned over. Markovian scans use the scaled rate
/// gamma/omega on the x axis; the bandwidth families use the bare strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleFamily {
    Markovian,
    OrnsteinUhlenbeck { lambda: f64 },
    PowerLaw { lambda: f64 },
}

impl ScheduleFamily {
    fn validate(&self) -> Result<()> {
        match *self {
            ScheduleFamily::Markovian => Ok(()),
            ScheduleFamily::OrnsteinUhlenbeck { lambda } | ScheduleFamily::PowerLaw { lambda } => {
                if !lambda.is_finite() || lambda <= 0.0 {
                    Err(Error::InvalidSpec(format!(
                        "noise bandwidth lambda must be finite and positive, got {lambda}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Amplitude-rate schedule for a scan point. `axis` is the grid value,
    /// `omega` converts the Markovian scaled rate to physical units.
    fn amplitude_schedule(&self, axis: f64, omega: f64) -> DephasingSchedule {
        match *self {
            ScheduleFamily::Markovian => DephasingSchedule::Constant { gamma: axis * omega },
            ScheduleFamily::OrnsteinUhlenbeck { lambda } => {
                // OU strength G gives Var[integrated noise] = (G/lambda)
                // (lambda t - 1 + e^{-lambda t}), whose half-derivative is
                // the switch-on curve (G/2)(1 - e^{-lambda t})
                DephasingSchedule::OrnsteinUhlenbeck { gamma: axis, lambda }
            }
            ScheduleFamily::PowerLaw { lambda } => DephasingSchedule::PowerLaw { gamma: axis, lambda },
        }
    }

    /// Same schedule in the generator convention used by the master engine:
    /// the generator rate is twice the amplitude rate.
    fn generator_schedule(&self, axis: f64, omega: f64) -> DephasingSchedule {
        self.amplitude_schedule(2.0 * axis, omega)
    }
}

/// ⟨n(t_rev)⟩ against noise strength for one engine.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportCurve {
    pub gammas: Vec<f64>,
    pub mean_n: Vec<f64>,
    pub engine: EngineTag,
    pub k: u32,
    pub initial_site: usize,
}

impl TransportCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,mean_n,engine,k,m\n");
        for (g, n) in self.gammas.iter().zip(&self.mean_n) {
            out.push_str(&format!(
                "{:.16e},{:.16e},{},{},{}\n",
                g, n, self.engine, self.k, self.initial_site
            ));
        }
        out
    }
}

/// First moments of the dephased ladder at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState {
    pub mean_a: C64,
    pub mean_n: f64,
    pub t: f64,
}

/// Knobs for `scan_dephasing` that are not physics: ensemble size, seeding,
/// and the truncation search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Realizations per grid point for the trajectory engine.
    pub realizations: usize,
    /// Base seed; grid point i uses master_seed + i.
    pub master_seed: u64,
    /// A truncation is accepted once boundary leakage stays below this.
    pub leakage_target: f64,
    /// Hard ceiling for the automatic truncation search.
    pub max_sites: usize,
    /// Starting truncation; defaults to the spec size with a safety floor.
    pub start_sites: Option<usize>,
    /// Optional cap on the integrator step.
    pub step_cap: Option<f64>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            realizations: 2000,
            master_seed: 0,
            leakage_target: 1e-8,
            max_sites: 512,
            start_sites: None,
            step_cap: None,
        }
    }
}

/// ⟨n⟩ = Σ n ρ_nn of a density matrix.
pub fn mean_site_index(rho: &DensityMatrix) -> f64 {
    rho.populations()
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum()
}

/// ⟨n⟩ of a bare population (or intensity) profile, assumed normalized.
pub fn mean_site_index_profile(populations: ArrayView1<f64>) -> f64 {
    populations
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum()
}

/// Noiseless mean index: m + (2g/ω)² sin²(ωt/2), with the ballistic
/// limit m + (gt)² taken at ω = 0.
pub fn closed_form_unitary(m: usize, g: f64, omega: f64, t: f64) -> f64 {
    if omega == 0.0 {
        return m as f64 + (g * t) * (g * t);
    }
    let amp = 2.0 * g / omega;
    let s = (0.5 * omega * t).sin();
    m as f64 + amp * amp * s * s
}

/// Mean index under a constant amplitude decay rate gamma:
/// m + 2g²/(ω²+γ²)² (f(t) + e^{−γt} g(t)) with
/// f = γ²(γt−1) + ω²(γt+1) and g = (γ²−ω²)cos ωt − 2γω sin ωt.
/// The pair (ω, γ) = (0, 0) has no finite form and is rejected.
pub fn closed_form_markovian(m: usize, g: f64, omega: f64, gamma: f64, t: f64) -> f64 {
    assert!(
        omega != 0.0 || gamma != 0.0,
        "constant-rate closed form needs omega or gamma nonzero"
    );
    let w2 = omega * omega;
    let g2 = gamma * gamma;
    let f = g2 * (gamma * t - 1.0) + w2 * (gamma * t + 1.0);
    let osc = (g2 - w2) * (omega * t).cos() - 2.0 * gamma * omega * (omega * t).sin();
    let denom = w2 + g2;
    m as f64 + 2.0 * g * g / (denom * denom) * (f + (-gamma * t).exp() * osc)
}

/// Mean index at the k-th revival t_rev = 2πk/ω as a function of the
/// scaled rate γ̃ = γ/ω:
/// m + (2g²/ω²)[2πkγ̃/(1+γ̃²) + (1−γ̃²)(1−e^{−2πkγ̃})/(1+γ̃²)²].
pub fn mean_n_at_revival(m: usize, g: f64, omega: f64, gamma_tilde: f64, k: u32) -> f64 {
    assert!(omega > 0.0, "revivals need a positive index ramp");
    assert!(k >= 1, "revival index k starts at 1");
    assert!(gamma_tilde >= 0.0, "scaled rate must be nonnegative");
    let gt = gamma_tilde;
    let denom = 1.0 + gt * gt;
    let phase = std::f64::consts::TAU * k as f64;
    let bracket =
        phase * gt / denom + (1.0 - gt * gt) / (denom * denom) * (1.0 - (-phase * gt).exp());
    m as f64 + 2.0 * g * g / (omega * omega) * bracket
}

/// Integrates the two-moment system
///     d⟨a⟩/dt = (−iω − γ(t)) ⟨a⟩ − ig,
///     d⟨n⟩/dt = −ig(⟨a⟩* − ⟨a⟩) = −2g Im⟨a⟩,
/// from the initial site |m⟩ (⟨a⟩ = 0, ⟨n⟩ = m) with RK4 on the grid.
///
/// Nonuniform dephasing couples ⟨a⟩ to higher coherences and this pair no
/// longer closes; with one shared rate on all coherence amplitudes (the
/// correlated-noise reduction) it is exact. The schedule supplies the
/// amplitude rate gamma(t); the master engine's generator runs at twice
/// that value for the same physics.
pub fn moment_ode_mean_n(
    m: usize,
    g: f64,
    omega: f64,
    schedule: &DephasingSchedule,
    grid: &PropagationGrid,
) -> Result<Vec<MomentState>> {
    schedule.validate()?;
    if !g.is_finite() || !omega.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "moment system needs finite g and omega, got g = {g}, omega = {omega}"
        )));
    }
    let dt = grid.dz();
    let slope_a = |t: f64, a: C64| C64::new(-schedule.rate_at(t), -omega) * a - C64::new(0.0, g);
    let slope_n = |a: C64| -2.0 * g * a.im;

    let mut a = C64::new(0.0, 0.0);
    let mut mean_n = m as f64;
    let mut out = Vec::with_capacity(grid.n_outputs());
    out.push(MomentState {
        mean_a: a,
        mean_n,
        t: 0.0,
    });
    for step in 0..grid.n_steps() {
        let t = step as f64 * dt;
        let k1a = slope_a(t, a);
        let k1n = slope_n(a);
        let a2 = a + k1a * (0.5 * dt);
        let k2a = slope_a(t + 0.5 * dt, a2);
        let k2n = slope_n(a2);
        let a3 = a + k2a * (0.5 * dt);
        let k3a = slope_a(t + 0.5 * dt, a3);
        let k3n = slope_n(a3);
        let a4 = a + k3a * dt;
        let k4a = slope_a(t + dt, a4);
        let k4n = slope_n(a4);
        a += (k1a + (k2a + k3a) * 2.0 + k4a) * (dt / 6.0);
        mean_n += (k1n + 2.0 * (k2n + k3n) + k4n) * (dt / 6.0);
        if (step + 1) % grid.stride() == 0 {
            out.push(MomentState {
                mean_a: a,
                mean_n,
                t: (step + 1) as f64 * dt,
            });
        }
    }
    Ok(out)
}

fn round_up(x: usize, q: usize) -> usize {
    x.div_ceil(q) * q
}

/// One fixed-step integration over `span` starting from rho0's own time,
/// with a fixed output count so memory stays flat and leakage gets sampled
/// at evenly spaced times.
fn segment_run(
    h: &Array2<f64>,
    rho0: &DensityMatrix,
    schedule: &DephasingSchedule,
    mode: CorrelationMode,
    span: f64,
    dz: f64,
) -> Result<MasterRun> {
    let n_steps = round_up((span / dz).ceil() as usize, 16).max(16);
    let grid = PropagationGrid::with_steps(span, n_steps)?.output_stride(n_steps / 16)?;
    integrate_master(h, rho0, schedule, mode, &grid)
}

/// Integrates the master equation to t_rev and returns the final state with
/// the worst boundary leakage seen.
///
/// The power-law rate is front-loaded: it falls off cubically, so its
/// stiffness cap only binds near t = 0. Those runs burn through the stiff
/// window at the fine step and finish on a coarser one, sized so that
/// rate(t) * dz keeps the margin the fine step had at t = 0.
fn revival_state(
    h: &Array2<f64>,
    rho0: &DensityMatrix,
    schedule: &DephasingSchedule,
    mode: CorrelationMode,
    t_rev: f64,
    opts: &ScanOptions,
) -> Result<(DensityMatrix, f64)> {
    let cap = opts.step_cap.unwrap_or(f64::INFINITY);
    let silent = DephasingSchedule::Constant { gamma: 0.0 };
    let dz_coherent = suggested_step(h, &silent, mode, t_rev)?.min(cap);
    let dz_full = suggested_step(h, schedule, mode, t_rev)?.min(cap);
    if let DephasingSchedule::PowerLaw { lambda, .. } = *schedule {
        if dz_full < 0.5 * dz_coherent {
            let t_burn = (((dz_coherent / dz_full).cbrt() - 1.0) / lambda).min(0.5 * t_rev);
            let u = lambda * t_burn + 1.0;
            // rate(t_burn) = rate(0) / u^3, so this step keeps the same
            // stability margin the fine step had at the start
            let dz_tail = (dz_full * u * u * u).min(dz_coherent);
            let head = segment_run(h, rho0, schedule, mode, t_burn, dz_full)?;
            let mid = head.states.last().expect("segment records its endpoint");
            let tail = segment_run(h, mid, schedule, mode, t_rev - t_burn, dz_tail)?;
            let leak = head.max_leakage.max(tail.max_leakage);
            let last = tail.states.last().expect("segment records its endpoint");
            return Ok((last.clone(), leak));
        }
    }
    let run = segment_run(h, rho0, schedule, mode, t_rev, dz_full)?;
    let last = run.states.last().expect("segment records its endpoint");
    Ok((last.clone(), run.max_leakage))
}

/// Master-engine value of ⟨n(t_rev)⟩ with an automatic truncation search:
/// the lattice grows (x1.5, rounded up to a multiple of 8) until boundary
/// leakage drops below target. Returns the mean index and the truncation
/// that achieved it.
fn master_point(
    g: f64,
    omega: f64,
    m: usize,
    schedule: &DephasingSchedule,
    mode: CorrelationMode,
    t_rev: f64,
    opts: &ScanOptions,
) -> Result<(f64, usize)> {
    let start = opts
        .start_sites
        .unwrap_or(16)
        .max(m + 8)
        .min(opts.max_sites);
    let mut n_sites = round_up(start, 8);
    loop {
        let lattice = LatticeSpec::glauber_fock(n_sites, g, omega);
        let h = build_hamiltonian(&lattice)?;
        let rho0 = DensityMatrix::site_projector(m, n_sites)?;
        let (last, leak) = revival_state(&h, &rho0, schedule, mode, t_rev, opts)?;
        if leak < opts.leakage_target {
            return Ok((mean_site_index(&last), n_sites));
        }
        if n_sites >= opts.max_sites {
            return Err(Error::IntegrationFailure(format!(
                "boundary leakage {leak:.3e} exceeds the target {:.1e} even at {} sites",
                opts.leakage_target, n_sites
            )));
        }
        n_sites = round_up(n_sites * 3 / 2, 8).min(opts.max_sites);
    }
}

fn trajectory_point(
    g: f64,
    omega: f64,
    m: usize,
    strength: f64,
    lambda: f64,
    mode: CorrelationMode,
    t_rev: f64,
    seed: u64,
    opts: &ScanOptions,
) -> Result<f64> {
    // size the lattice with the cheap equivalent generator, then average
    // pure-state realizations on it
    let generator = DephasingSchedule::OrnsteinUhlenbeck {
        gamma: 2.0 * strength,
        lambda,
    };
    let (_, n_sites) = master_point(g, omega, m, &generator, mode, t_rev, opts)?;
    let lattice = LatticeSpec::glauber_fock(n_sites, g, omega);
    let h = build_hamiltonian(&lattice)?;
    let psi0 = PureState::site_basis(m, n_sites)?;
    let model = NoiseModel::ornstein_uhlenbeck(strength, lambda, mode);

    let mut dt_cap = (0.2 / lambda).min(t_rev / 4096.0);
    if let Some(cap) = opts.step_cap {
        dt_cap = dt_cap.min(cap);
    }
    let n_steps = round_up((t_rev / dt_cap).ceil() as usize, 4);
    let grid = PropagationGrid::with_steps(t_rev, n_steps)?.output_stride(n_steps / 4)?;
    let ens = run_ensemble(&h, &psi0, &model, &grid, opts.realizations, seed)?;
    let leak = boundary_leakage(
        ens.mean_populations
            .row(ens.mean_populations.nrows() - 1)
            .as_slice()
            .expect("row view is contiguous"),
    );
    if leak > 10.0 * opts.leakage_target {
        log::warn!("trajectory ensemble leakage {leak:.3e} above target at {n_sites} sites");
    }
    let value = mean_site_index(&ens.mean_sigma);
    // statistical floor check: the mean can sit below m only by sampling
    // noise, bounded by the aggregated standard error
    let se: f64 = ens
        .std_error
        .diag()
        .iter()
        .enumerate()
        .map(|(n, s)| n as f64 * s)
        .sum();
    if !(value >= m as f64 - 1e-9 - 5.0 * se) {
        return Err(Error::IntegrationFailure(format!(
            "trajectory mean index {value} fell below the initial site {m}"
        )));
    }
    Ok(value)
}

/// Evaluates ⟨n(t_rev)⟩, t_rev = 2πk/ω, over a grid of noise strengths.
///
/// Engines: ClosedForm (constant rate only), MomentOde, MasterEq (both for
/// any family), Trajectories (Ornstein-Uhlenbeck only; power-law noise has
/// no generative process here). The correlation mode applies to the master
/// and trajectory engines; the analytic engines describe the shared-noise
/// reduction and ignore it. Grid points run in parallel and are seeded
/// independently, so the curve is deterministic for a fixed options block.
#[allow(clippy::too_many_arguments)]
pub fn scan_dephasing(
    spec: &LatticeSpec,
    family: ScheduleFamily,
    mode: CorrelationMode,
    gammas: &[f64],
    k: u32,
    initial_site: usize,
    engine: EngineTag,
    opts: &ScanOptions,
) -> Result<TransportCurve> {
    spec.validate()?;
    family.validate()?;
    if !matches!(spec.hopping, HoppingMode::GlauberFock) {
        return Err(Error::InvalidSpec(
            "dephasing scans need the square-root coupling ladder; custom networks have no closed revival".into(),
        ));
    }
    let g = spec.drive_g();
    let omega = spec.base_frequency();
    if omega <= 0.0 {
        return Err(Error::NoBlochRevival);
    }
    if k == 0 {
        return Err(Error::InvalidSpec("revival index k starts at 1".into()));
    }
    if gammas.is_empty() {
        return Err(Error::InvalidSpec("scan grid is empty".into()));
    }
    for pair in gammas.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::InvalidSpec(format!(
                "scan grid must increase strictly, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    if !gammas.iter().all(|v| v.is_finite() && *v >= 0.0) {
        return Err(Error::InvalidSpec(
            "scan grid values must be finite and nonnegative".into(),
        ));
    }
    match (engine, family) {
        (EngineTag::ClosedForm, ScheduleFamily::Markovian) => {}
        (EngineTag::ClosedForm, _) => {
            return Err(Error::EngineMismatch(
                "the closed form covers constant rates only; use the moment or master engine for bandwidth schedules".into(),
            ));
        }
        (EngineTag::Trajectories, ScheduleFamily::OrnsteinUhlenbeck { .. }) => {}
        (EngineTag::Trajectories, _) => {
            return Err(Error::EngineMismatch(
                "trajectories require a generative noise process, which only the Ornstein-Uhlenbeck family has".into(),
            ));
        }
        _ => {}
    }
    if initial_site + 8 > opts.max_sites {
        return Err(Error::InvalidSpec(format!(
            "initial site {initial_site} leaves no truncation headroom below max_sites {}",
            opts.max_sites
        )));
    }

    let t_rev = std::f64::consts::TAU * k as f64 / omega;
    let m = initial_site;
    let mut scan_opts = *opts;
    scan_opts.start_sites = Some(
        opts.start_sites
            .unwrap_or_else(|| spec.num_sites.max(16)),
    );

    let values: Result<Vec<f64>> = gammas
        .par_iter()
        .enumerate()
        .map(|(idx, &axis)| {
            let value = match engine {
                EngineTag::ClosedForm => mean_n_at_revival(m, g, omega, axis, k),
                EngineTag::MomentOde => {
                    let schedule = family.amplitude_schedule(axis, omega);
                    let rate_scale = 1.0 + omega.abs() + g.abs() + schedule.max_rate(t_rev);
                    let dz = (t_rev / 20_000.0).min(0.5 / rate_scale);
                    let n_steps = round_up((t_rev / dz).ceil() as usize, 4);
                    let grid =
                        PropagationGrid::with_steps(t_rev, n_steps)?.output_stride(n_steps / 4)?;
                    let states = moment_ode_mean_n(m, g, omega, &schedule, &grid)?;
                    states.last().expect("grid records the endpoint").mean_n
                }
                EngineTag::MasterEq => {
                    let schedule = family.generator_schedule(axis, omega);
                    master_point(g, omega, m, &schedule, mode, t_rev, &scan_opts)?.0
                }
                EngineTag::Trajectories => {
                    let lambda = match family {
                        ScheduleFamily::OrnsteinUhlenbeck { lambda } => lambda,
                        _ => unreachable!("validated above"),
                    };
                    trajectory_point(
                        g,
                        omega,
                        m,
                        axis,
                        lambda,
                        mode,
                        t_rev,
                        opts.master_seed.wrapping_add(idx as u64),
                        &scan_opts,
                    )?
                }
            };
            if !value.is_finite() {
                return Err(Error::IntegrationFailure(format!(
                    "scan point {axis} produced a non-finite mean index"
                )));
            }
            // transport from |m| cannot land below m here; a violation means
            // the integration, not the physics, went wrong
            if engine != EngineTag::Trajectories && !(value >= m as f64 - 1e-9) {
                return Err(Error::IntegrationFailure(format!(
                    "scan point {axis} returned mean index {value} below the initial site {m}"
                )));
            }
            Ok(value)
        })
        .collect();

    Ok(TransportCurve {
        gammas: gammas.to_vec(),
        mean_n: values?,
        engine,
        k,
        initial_site,
    })
}
