//! Closed-form element split between the blocked UAVs.
//!
//! The most reliable blocked UAV (slot 0, "x") gets every element left after
//! each lower-reliability UAV ("y", ...) receives exactly the share that pins
//! its approximated SNR to its fraction of the reflected-link threshold. The
//! cap is solved as an equality, so whenever the result is feasible the
//! capped SNRs sit on their targets by construction.

use serde::{Deserialize, Serialize};

use crate::channel::{channel_quality, snr_approx, ChannelRealization};
use crate::error::{Error, Result};
use crate::scenario::{Position3D, ScenarioConfig};

/// First constraint violated by a candidate split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintTag {
    /// A share left `[0, 1]`.
    ShareRange,
    /// Shares oversubscribe the array.
    ShareBudget,
    /// The boosted UAV misses the reflected-link SNR floor.
    PrimaryFloor,
    /// A capped UAV exceeds its SNR cap.
    SecondaryCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feasibility {
    Feasible,
    Infeasible(ConstraintTag),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

/// Result of the closed-form split at one surface position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSolution {
    /// Blocked UAV indices in solve order, boosted UAV first.
    pub uavs: Vec<usize>,
    /// Share of the array per UAV, same order. Raw closed-form values; an
    /// infeasible geometry can push a capped share past 1.
    pub shares: Vec<f64>,
    /// Nominal element count per share, `ceil(rho_j * N)`.
    pub element_counts: Vec<usize>,
    /// Achieved approximated SNR per UAV, linear.
    pub snrs: Vec<f64>,
    pub feasibility: Feasibility,
}

impl PartitionSolution {
    /// Sum of the achieved SNRs, linear.
    pub fn snr_sum(&self) -> f64 {
        self.snrs.iter().sum()
    }
}

/// Nominal element count of one share.
pub fn element_count(rho: f64, n: usize) -> usize {
    (rho * n as f64).ceil().max(0.0) as usize
}

/// Elements each share actually receives under the contiguous assignment
/// rule (ceiling blocks, overflow truncated from the last block).
pub use crate::channel::assigned_counts as assigned_element_counts;

/// Share that pins UAV `uav_index` at `zeta_frac` of the reflected-link
/// threshold, given its cascade quality `q`. Not clamped: values above 1
/// surface as infeasibility downstream.
pub fn rho_capped(
    config: &ScenarioConfig,
    alpha: Position3D<f64>,
    uav_index: usize,
    zeta_frac: f64,
    q: f64,
) -> Result<f64> {
    if q <= 0.0 || q.is_nan() {
        return Err(Error::DegenerateChannel(format!(
            "cascade quality toward UAV {uav_index} is zero"
        )));
    }
    let target = zeta_frac * config.thr_ris_linear();
    let unit = snr_approx(config, alpha, uav_index, 1.0, q)?;
    if unit <= 0.0 || unit.is_nan() {
        return Err(Error::DegenerateChannel(format!(
            "path gains toward UAV {uav_index} vanish"
        )));
    }
    Ok((target / unit).sqrt())
}

/// Closed-form share of the capped UAV in the two-UAV setup
/// (`config.blocked_uavs[1]`, cap `config.zeta`).
pub fn rho_y_closed_form(
    config: &ScenarioConfig,
    alpha: Position3D<f64>,
    q_y: f64,
) -> Result<f64> {
    rho_capped(config, alpha, config.blocked_uavs[1], config.zeta, q_y)
}

/// Remainder share for the boosted UAV: whatever the capped UAVs leave,
/// floored at zero. All available elements are spent.
pub fn rho_x_remainder(others: &[f64]) -> f64 {
    (1.0 - others.iter().sum::<f64>()).max(0.0)
}

/// Per-slot cap fractions: the boosted slot is uncapped (entry 1.0), every
/// other slot gets the scenario's `zeta`.
pub fn default_zetas(config: &ScenarioConfig) -> Vec<f64> {
    let mut z = vec![config.zeta; config.n_blocked()];
    z[0] = 1.0;
    z
}

/// Cascade quality toward every blocked slot of one realization.
pub fn slot_qualities(config: &ScenarioConfig, realization: &ChannelRealization) -> Vec<f64> {
    (0..config.n_blocked())
        .map(|slot| channel_quality(realization, slot))
        .collect()
}

/// Closed-form split with the scenario's blocked order and cap fractions.
pub fn solve_partition(
    config: &ScenarioConfig,
    alpha: Position3D<f64>,
    realization: &ChannelRealization,
) -> Result<PartitionSolution> {
    let order: Vec<usize> = (0..config.n_blocked()).collect();
    solve_partition_ordered(config, alpha, realization, &order, &default_zetas(config))
}

/// Closed-form split for an explicit slot order (a permutation of the
/// blocked slots, boosted slot first) and per-slot cap fractions aligned
/// with that order.
pub fn solve_partition_ordered(
    config: &ScenarioConfig,
    alpha: Position3D<f64>,
    realization: &ChannelRealization,
    slot_order: &[usize],
    zetas: &[f64],
) -> Result<PartitionSolution> {
    solve_partition_from_qualities(
        config,
        alpha,
        &slot_qualities(config, realization),
        slot_order,
        zetas,
    )
}

/// Closed-form split from precomputed per-slot cascade qualities. The
/// qualities vector is indexed by blocked slot regardless of `slot_order`.
pub fn solve_partition_from_qualities(
    config: &ScenarioConfig,
    alpha: Position3D<f64>,
    qualities: &[f64],
    slot_order: &[usize],
    zetas: &[f64],
) -> Result<PartitionSolution> {
    let j = config.n_blocked();
    if qualities.len() != j || slot_order.len() != j || zetas.len() != j {
        return Err(Error::Contract(
            "qualities, slot order, and caps must cover every blocked UAV".into(),
        ));
    }
    let uavs: Vec<usize> = slot_order
        .iter()
        .map(|&s| config.blocked_uavs[s])
        .collect();

    let mut shares = vec![0.0; j];
    for (pos, &slot) in slot_order.iter().enumerate().skip(1) {
        shares[pos] = rho_capped(
            config,
            alpha,
            config.blocked_uavs[slot],
            zetas[pos],
            qualities[slot],
        )?;
    }
    shares[0] = rho_x_remainder(&shares[1..]);

    let snrs = slot_order
        .iter()
        .enumerate()
        .map(|(pos, &slot)| {
            snr_approx(
                config,
                alpha,
                config.blocked_uavs[slot],
                shares[pos],
                qualities[slot],
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let element_counts = shares
        .iter()
        .map(|&r| element_count(r, config.n_elements))
        .collect();

    let mut solution = PartitionSolution {
        uavs,
        shares,
        element_counts,
        snrs,
        feasibility: Feasibility::Feasible,
    };
    solution.feasibility =
        feasibility_from_qualities(config, alpha, &solution, qualities, slot_order, zetas);
    Ok(solution)
}

/// Post-hoc verification of a split against the scenario's constraint set;
/// returns the first violated tag.
pub fn check_feasibility(
    config: &ScenarioConfig,
    alpha: Position3D<f64>,
    solution: &PartitionSolution,
    realization: &ChannelRealization,
) -> Feasibility {
    let order: Vec<usize> = (0..config.n_blocked()).collect();
    feasibility_from_qualities(
        config,
        alpha,
        solution,
        &slot_qualities(config, realization),
        &order,
        &default_zetas(config),
    )
}

fn feasibility_from_qualities(
    config: &ScenarioConfig,
    alpha: Position3D<f64>,
    solution: &PartitionSolution,
    qualities: &[f64],
    slot_order: &[usize],
    zetas: &[f64],
) -> Feasibility {
    const REL_TOL: f64 = 1e-9;

    for &rho in &solution.shares {
        if !(0.0..=1.0 + REL_TOL).contains(&rho) || !rho.is_finite() {
            return Feasibility::Infeasible(ConstraintTag::ShareRange);
        }
    }
    if solution.shares.iter().sum::<f64>() > 1.0 + REL_TOL {
        return Feasibility::Infeasible(ConstraintTag::ShareBudget);
    }

    let thr = config.thr_ris_linear();
    for (pos, &slot) in slot_order.iter().enumerate() {
        let snr = match snr_approx(
            config,
            alpha,
            config.blocked_uavs[slot],
            solution.shares[pos],
            qualities[slot],
        ) {
            Ok(s) => s,
            Err(_) => return Feasibility::Infeasible(ConstraintTag::ShareRange),
        };
        if pos == 0 {
            if snr < thr * (1.0 - REL_TOL) {
                return Feasibility::Infeasible(ConstraintTag::PrimaryFloor);
            }
        } else if snr > zetas[pos] * thr * (1.0 + REL_TOL) {
            return Feasibility::Infeasible(ConstraintTag::SecondaryCap);
        }
    }
    Feasibility::Feasible
}

/// Magnitude of the worst constraint violation of a split, zero when
/// feasible. Used as the infeasibility penalty by the placement search.
pub fn violation_magnitude(config: &ScenarioConfig, solution: &PartitionSolution) -> f64 {
    let thr = config.thr_ris_linear();
    let mut v: f64 = 0.0;
    for &rho in &solution.shares {
        v = v.max(rho - 1.0).max(-rho);
    }
    v = v.max(solution.shares.iter().sum::<f64>() - 1.0);
    if let Some(&snr_primary) = solution.snrs.first() {
        v = v.max((thr - snr_primary) / thr);
    }
    v.max(0.0)
}
