//! Channel layer: Nakagami-m fading draws, path-loss models, phase
//! configuration and quantization, and the exact/approximated reflected-path
//! SNRs.
//!
//! Conventions. Every amplitude is nonnegative, every phase lives in
//! `[0, 2*pi)`, path gains are linear, and SNRs are linear unless the function
//! name says `_db`. The surface-to-UAV dimension of a realization is indexed
//! by *blocked slot*: slot `j` refers to `config.blocked_uavs[j]`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::scenario::{distance, Position3D, ScenarioConfig};
use crate::units::db_to_linear;

/// Nakagami-m amplitude law: shape `m >= 0.5`, spread `omega = E[X^2] > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    pub m: f64,
    pub omega: f64,
}

impl FadingParams {
    pub fn new(m: f64, omega: f64) -> Result<Self> {
        let p = Self { m, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 0.5 && self.m.is_finite()) {
            return Err(Error::validation("m", "Nakagami shape must be >= 0.5"));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::validation("omega", "spread must be > 0"));
        }
        Ok(())
    }
}

/// One Nakagami(m, omega) amplitude: the square root of a
/// Gamma(shape = m, scale = omega/m) draw.
pub fn sample_nakagami(params: FadingParams, rng: &mut impl Rng) -> Result<f64> {
    params.validate()?;
    Ok(f64::gamma_draw(rng, params.m, params.omega / params.m).sqrt())
}

fn uniform_phase(rng: &mut impl Rng) -> f64 {
    f64::unit_uniform(rng) * 2.0 * PI
}

/// Small-scale fading of one Monte-Carlo trial, independent of the surface
/// position. Attach geometry with [`realize`].
#[derive(Debug, Clone, PartialEq)]
pub struct FadingDraw {
    /// UE-to-element amplitudes, length N.
    pub ue_ris_amp: Vec<f64>,
    /// UE-to-element phases, length N.
    pub ue_ris_phase: Vec<f64>,
    /// Element-to-UAV amplitudes per blocked slot, `[slot][n]`.
    pub ris_uav_amp: Vec<Vec<f64>>,
    /// Element-to-UAV phases per blocked slot, `[slot][n]`.
    pub ris_uav_phase: Vec<Vec<f64>>,
    /// Direct UE-to-UAV amplitudes, length K.
    pub direct_amp: Vec<f64>,
}

impl FadingDraw {
    /// Draw all small-scale coefficients for one trial.
    pub fn sample(config: &ScenarioConfig, rng: &mut impl Rng) -> Result<Self> {
        let n = config.n_elements;
        let j = config.n_blocked();
        let k = config.n_uavs;

        let mut ue_ris_amp = Vec::with_capacity(n);
        let mut ue_ris_phase = Vec::with_capacity(n);
        for _ in 0..n {
            ue_ris_amp.push(sample_nakagami(config.fading_ue_ris, rng)?);
        }
        for _ in 0..n {
            ue_ris_phase.push(uniform_phase(rng));
        }

        let mut ris_uav_amp = Vec::with_capacity(j);
        let mut ris_uav_phase = Vec::with_capacity(j);
        for _ in 0..j {
            let mut amps = Vec::with_capacity(n);
            for _ in 0..n {
                amps.push(sample_nakagami(config.fading_ris_uav, rng)?);
            }
            let mut phases = Vec::with_capacity(n);
            for _ in 0..n {
                phases.push(uniform_phase(rng));
            }
            ris_uav_amp.push(amps);
            ris_uav_phase.push(phases);
        }

        let mut direct_amp = Vec::with_capacity(k);
        for _ in 0..k {
            direct_amp.push(sample_nakagami(config.fading_direct, rng)?);
        }

        Ok(Self {
            ue_ris_amp,
            ue_ris_phase,
            ris_uav_amp,
            ris_uav_phase,
            direct_amp,
        })
    }

    /// Restriction to the first `n` elements, for common-random-number
    /// sweeps over the surface size.
    pub fn prefix(&self, n: usize) -> Self {
        let cut = |v: &Vec<f64>| v.iter().copied().take(n).collect::<Vec<_>>();
        Self {
            ue_ris_amp: cut(&self.ue_ris_amp),
            ue_ris_phase: cut(&self.ue_ris_phase),
            ris_uav_amp: self.ris_uav_amp.iter().map(cut).collect(),
            ris_uav_phase: self.ris_uav_phase.iter().map(cut).collect(),
            direct_amp: self.direct_amp.clone(),
        }
    }

    /// Restriction to the first `k` UAVs of a nested layout.
    pub fn prefix_uavs(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.direct_amp.truncate(k);
        out
    }
}

/// One Monte-Carlo draw of all small-scale coefficients plus the path-loss
/// gains implied by the surface position it was realized at.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub ue_ris_amp: Vec<f64>,
    pub ue_ris_phase: Vec<f64>,
    /// `[slot][n]`, slot indexing `config.blocked_uavs`.
    pub ris_uav_amp: Vec<Vec<f64>>,
    pub ris_uav_phase: Vec<Vec<f64>>,
    pub direct_amp: Vec<f64>,
    /// Linear gain of the UE-to-surface hop.
    pub pl_ue_ris: f64,
    /// Linear gain per blocked slot of the surface-to-UAV hop.
    pub pl_ris_uav: Vec<f64>,
    /// Linear gain of every direct UE-UAV link, length K.
    pub pl_direct: Vec<f64>,
}

impl ChannelRealization {
    pub fn n_elements(&self) -> usize {
        self.ue_ris_amp.len()
    }

    /// Dump one row per element (amplitudes and phases of both hops) as CSV.
    pub fn write_trace<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "element,ue_ris_amp,ue_ris_phase")?;
        for slot in 0..self.ris_uav_amp.len() {
            write!(w, ",ris_uav_amp_{slot},ris_uav_phase_{slot}")?;
        }
        writeln!(w)?;
        for n in 0..self.n_elements() {
            write!(
                w,
                "{n},{:.12e},{:.12e}",
                self.ue_ris_amp[n], self.ue_ris_phase[n]
            )?;
            for slot in 0..self.ris_uav_amp.len() {
                write!(
                    w,
                    ",{:.12e},{:.12e}",
                    self.ris_uav_amp[slot][n], self.ris_uav_phase[slot][n]
                )?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Attach the path losses implied by surface position `alpha` to a fading
/// draw.
pub fn realize(
    config: &ScenarioConfig,
    alpha: Position3D<f64>,
    draw: &FadingDraw,
) -> Result<ChannelRealization> {
    let pl_ue_ris = pathloss_ref(distance(config.ue_position, alpha), config.beta0)?;
    let pl_ris_uav = config
        .blocked_uavs
        .iter()
        .map(|&k| pathloss_ref(distance(alpha, config.uav_positions[k]), config.beta0))
        .collect::<Result<Vec<_>>>()?;
    let pl_direct = config
        .uav_positions
        .iter()
        .map(|&p| {
            let d = distance(config.ue_position, p);
            db_to_linear(-pathloss_umi(d, config.carrier_hz, Los::NLos))
        })
        .collect();
    Ok(ChannelRealization {
        ue_ris_amp: draw.ue_ris_amp.clone(),
        ue_ris_phase: draw.ue_ris_phase.clone(),
        ris_uav_amp: draw.ris_uav_amp.clone(),
        ris_uav_phase: draw.ris_uav_phase.clone(),
        direct_amp: draw.direct_amp.clone(),
        pl_ue_ris,
        pl_ris_uav,
        pl_direct,
    })
}

/// Draw fading and attach geometry in one step.
pub fn sample_realization(
    config: &ScenarioConfig,
    alpha: Position3D<f64>,
    rng: &mut impl Rng,
) -> Result<ChannelRealization> {
    let draw = FadingDraw::sample(config, rng)?;
    realize(config, alpha, &draw)
}

/// Inverse-square power gain relative to the 1 m reference: `beta0 / d^2`.
pub fn pathloss_ref<T: Scalar>(d: T, beta0: T) -> Result<T> {
    if d <= T::zero() || d.is_nan() {
        return Err(Error::domain("pathloss_ref", "distance must be > 0"));
    }
    Ok(beta0 / (d * d))
}

/// Line-of-sight flag for the street-canyon model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Los {
    Los,
    NLos,
}

static UMI_CLAMP_WARNINGS: AtomicU64 = AtomicU64::new(0);

/// Number of times [`pathloss_umi`] clamped a distance up to its 10 m
/// validity floor.
pub fn umi_clamp_warnings() -> u64 {
    UMI_CLAMP_WARNINGS.load(Ordering::Relaxed)
}

/// Urban-microcell street-canyon loss in dB.
///
/// LoS branch `32.4 + 21 log10(d) + 20 log10(f_GHz)`; the NLoS branch is the
/// maximum of the LoS branch and `35.3 log10(d) + 22.4 + 21.3 log10(f_GHz)`.
/// Distances below the 10 m validity floor are clamped and counted.
pub fn pathloss_umi<T: Scalar>(d: T, fc_hz: T, los: Los) -> T {
    let floor = T::of(10.0);
    let d = if d < floor {
        UMI_CLAMP_WARNINGS.fetch_add(1, Ordering::Relaxed);
        floor
    } else {
        d
    };
    let f_ghz = fc_hz / T::of(1e9);
    let los_db = T::of(32.4) + T::of(21.0) * d.log10() + T::of(20.0) * f_ghz.log10();
    match los {
        Los::Los => los_db,
        Los::NLos => {
            let nlos_db = T::of(35.3) * d.log10() + T::of(22.4) + T::of(21.3) * f_ghz.log10();
            los_db.max(nlos_db)
        }
    }
}

/// Free-space loss in dB of a UAV-to-UAV link: `20 log10(4 pi fc d / c)`.
pub fn pathloss_los_uav<T: Scalar>(d: T, fc_hz: T, c_mps: T) -> Result<T> {
    if d <= T::zero() || d.is_nan() {
        return Err(Error::domain("pathloss_los_uav", "distance must be > 0"));
    }
    let four_pi = T::of(4.0 * PI);
    Ok(T::of(20.0) * (four_pi * fc_hz * d / c_mps).log10())
}

/// Linear SNR of the direct UE link to UAV `k`. Blocked UAVs have no direct
/// link.
pub fn snr_direct(config: &ScenarioConfig, k: usize, realization: &ChannelRealization) -> Result<f64> {
    if k >= config.n_uavs {
        return Err(Error::domain("snr_direct", format!("UAV {k} out of range")));
    }
    if config.is_blocked(k) {
        return Err(Error::NoDirectLink(k));
    }
    let amp = realization.direct_amp[k];
    Ok(config.ue_power_watts() * realization.pl_direct[k] * amp * amp / config.noise_watts())
}

/// SNR in dB between two distinct UAVs over their line-of-sight link.
pub fn snr_uav_uav(config: &ScenarioConfig, k: usize, kp: usize) -> Result<f64> {
    if k == kp {
        return Err(Error::domain("snr_uav_uav", "UAV indices must differ"));
    }
    if k >= config.n_uavs || kp >= config.n_uavs {
        return Err(Error::domain("snr_uav_uav", "UAV index out of range"));
    }
    let d = distance(config.uav_positions[k], config.uav_positions[kp]);
    let gamma = pathloss_los_uav(d, config.carrier_hz, config.light_speed_mps)?;
    Ok(config.uav_power_dbm - gamma - config.noise_dbm)
}

/// Per-element phase shifts plus the blocked-slot each element serves.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    /// Phase shift per element, `[0, 2*pi)`.
    pub theta: Vec<f64>,
    /// Blocked-slot index served by each element.
    pub assignment: Vec<usize>,
}

/// Contiguous element assignment for the given shares: slot 0 takes the first
/// `ceil(rho_0 * n)` elements, slot 1 the next block, and so on. Overflow
/// beyond `n` is truncated from the last slots; any unallocated tail joins
/// the final slot so that every element is assigned.
pub fn partition_assignment(shares: &[f64], n: usize) -> Vec<usize> {
    assert!(!shares.is_empty(), "at least one share required");
    let mut assignment = Vec::with_capacity(n);
    for (slot, &rho) in shares.iter().enumerate() {
        if assignment.len() >= n {
            break;
        }
        let want = (rho * n as f64).ceil().max(0.0) as usize;
        let take = want.min(n - assignment.len());
        assignment.extend(std::iter::repeat_n(slot, take));
    }
    let last = shares.len() - 1;
    while assignment.len() < n {
        assignment.push(last);
    }
    assignment
}

/// Number of elements each slot actually receives under
/// [`partition_assignment`].
pub fn assigned_counts(shares: &[f64], n: usize) -> Vec<usize> {
    let assignment = partition_assignment(shares, n);
    let mut counts = vec![0usize; shares.len()];
    for slot in assignment {
        counts[slot] += 1;
    }
    counts
}

/// Phase-nulling profile: element `n` serving slot `j` gets
/// `theta_n = (phi_n + psi_{n,j}) mod 2*pi`, which makes its cascade term
/// real and positive.
pub fn optimal_phases(realization: &ChannelRealization, assignment: &[usize]) -> Result<PhaseProfile> {
    let n = realization.n_elements();
    if assignment.len() != n {
        return Err(Error::Contract(format!(
            "assignment covers {} elements, realization has {n}",
            assignment.len()
        )));
    }
    let two_pi = 2.0 * PI;
    let theta = (0..n)
        .map(|i| {
            let slot = assignment[i];
            (realization.ue_ris_phase[i] + realization.ris_uav_phase[slot][i]).rem_euclid(two_pi)
        })
        .collect();
    Ok(PhaseProfile {
        theta,
        assignment: assignment.to_vec(),
    })
}

/// Snap each phase to the nearest of `2^b` uniformly spaced levels; infinite
/// resolution is the identity.
pub fn quantize_phases(profile: &PhaseProfile, b: crate::scenario::BitResolution) -> PhaseProfile {
    match b {
        crate::scenario::BitResolution::Infinite => profile.clone(),
        crate::scenario::BitResolution::Bits(bits) => {
            let levels = (1u64 << bits) as f64;
            let step = 2.0 * PI / levels;
            let theta = profile
                .theta
                .iter()
                .map(|&t| {
                    let idx = (t / step).round().rem_euclid(levels);
                    idx * step
                })
                .collect();
            PhaseProfile {
                theta,
                assignment: profile.assignment.clone(),
            }
        }
    }
}

/// Cascade quality toward blocked slot `j`: the sum over elements of the
/// product of the two hop amplitudes.
pub fn channel_quality(realization: &ChannelRealization, j: usize) -> f64 {
    realization
        .ue_ris_amp
        .iter()
        .zip(&realization.ris_uav_amp[j])
        .map(|(a, b)| a * b)
        .sum()
}

/// Exact linear SNR at blocked slot `j`: the coherent sum over *all* N
/// elements under the given phase profile, including elements aligned to
/// other slots.
pub fn snr_exact(
    config: &ScenarioConfig,
    realization: &ChannelRealization,
    profile: &PhaseProfile,
    j: usize,
) -> Result<f64> {
    let n = realization.n_elements();
    if profile.theta.len() != n {
        return Err(Error::Contract(format!(
            "profile covers {} elements, realization has {n}",
            profile.theta.len()
        )));
    }
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..n {
        let amp = realization.ue_ris_amp[i] * realization.ris_uav_amp[j][i];
        let phase = profile.theta[i] - realization.ue_ris_phase[i] - realization.ris_uav_phase[j][i];
        re += amp * phase.cos();
        im += amp * phase.sin();
    }
    let power = re * re + im * im;
    Ok(config.ue_power_watts() * realization.pl_ue_ris * realization.pl_ris_uav[j] * power
        / config.noise_watts())
}

/// Approximated linear SNR from share `rho` and cascade quality `q`,
/// evaluated at surface position `alpha` toward UAV `uav_index`.
pub fn snr_approx(
    config: &ScenarioConfig,
    alpha: Position3D<f64>,
    uav_index: usize,
    rho: f64,
    q: f64,
) -> Result<f64> {
    let pl_ur = pathloss_ref(distance(config.ue_position, alpha), config.beta0)?;
    let pl_rk = pathloss_ref(
        distance(alpha, config.uav_positions[uav_index]),
        config.beta0,
    )?;
    Ok(snr_approx_with_gains(
        config.ue_power_watts(),
        config.noise_watts(),
        pl_ur,
        pl_rk,
        rho,
        q,
    ))
}

/// Approximated SNR kernel: `p * g_ur * g_rk * rho^2 * q^2 / n0`.
pub fn snr_approx_with_gains<T: Scalar>(p: T, n0: T, g_ur: T, g_rk: T, rho: T, q: T) -> T {
    p * g_ur * g_rk * rho * rho * q * q / n0
}

/// Shannon rate in bit/s.
pub fn rate<T: Scalar>(snr: T, bandwidth_hz: T) -> T {
    bandwidth_hz * (T::one() + snr).ln() / T::of(2.0).ln()
}
