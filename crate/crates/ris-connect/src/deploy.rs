//! 3D placement of the reflecting surface by simulated annealing.
//!
//! Candidate positions are scored through the closed-form split: infeasible
//! splits earn a negative penalty, feasible ones either the algebraic
//! connectivity of the graph extended with the two reflected edges (default)
//! or the raw sum of the reflected SNRs. Fitness is averaged over a frozen
//! batch of fading draws reused for every candidate, so the search cannot
//! chase per-draw noise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::FadingDraw;
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::graph::{add_ris_edges, algebraic_connectivity, NetworkGraph};
use crate::partition::{
    default_zetas, solve_partition_from_qualities, violation_magnitude, PartitionSolution,
};
use crate::scenario::{Box3, Position3D, ScenarioConfig};

/// What a feasible candidate position is scored by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    /// Algebraic connectivity of the graph with the reflected edges added.
    Lambda2,
    /// Sum of the reflected-link SNRs, linear.
    SnrSum,
}

impl ObjectiveKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lambda2" => Ok(Self::Lambda2),
            "snr-sum" => Ok(Self::SnrSum),
            other => Err(Error::validation(
                "objective",
                format!("unknown objective `{other}` (expected lambda2 | snr-sum)"),
            )),
        }
    }
}

/// One frozen fading draw prepared for candidate scoring: the per-slot
/// cascade qualities (position-independent) and the graph without reflected
/// edges.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub qualities: Vec<f64>,
    pub base_graph: NetworkGraph<f64>,
}

impl TrialContext {
    pub fn from_draw(config: &ScenarioConfig, draw: &FadingDraw) -> Result<Self> {
        let qualities = (0..config.n_blocked())
            .map(|slot| {
                draw.ue_ris_amp
                    .iter()
                    .zip(&draw.ris_uav_amp[slot])
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        let base_graph = base_graph_for_draw(config, draw)?;
        Ok(Self {
            qualities,
            base_graph,
        })
    }
}

/// Graph without reflected edges for one fading draw. Direct-link gains do
/// not depend on the surface position, so this is fixed per draw.
pub fn base_graph_for_draw(
    config: &ScenarioConfig,
    draw: &FadingDraw,
) -> Result<NetworkGraph<f64>> {
    let p = config.ue_power_watts();
    let n0 = config.noise_watts();
    let direct: Vec<f64> = (0..config.n_uavs)
        .map(|k| {
            let d = crate::scenario::distance(config.ue_position, config.uav_positions[k]);
            let gain = crate::units::db_to_linear(-crate::channel::pathloss_umi(
                d,
                config.carrier_hz,
                crate::channel::Los::NLos,
            ));
            let amp = draw.direct_amp[k];
            p * gain * amp * amp / n0
        })
        .collect();
    let uav_table = crate::graph::uav_snr_table(config)?;
    crate::graph::build_graph(config, &direct, &uav_table)
}

/// Frozen batch of scoring contexts drawn from one generator.
pub fn trial_contexts(
    config: &ScenarioConfig,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<TrialContext>> {
    (0..count)
        .map(|_| {
            let draw = FadingDraw::sample(config, rng)?;
            TrialContext::from_draw(config, &draw)
        })
        .collect()
}

const UNSOLVABLE_PENALTY: f64 = 1e9;

/// Score of one candidate position against one frozen draw, for an explicit
/// slot order and cap vector.
pub fn score_candidate(
    config: &ScenarioConfig,
    ctx: &TrialContext,
    alpha: Position3D<f64>,
    kind: ObjectiveKind,
    slot_order: &[usize],
    zetas: &[f64],
) -> f64 {
    let solution = match solve_partition_from_qualities(
        config,
        alpha,
        &ctx.qualities,
        slot_order,
        zetas,
    ) {
        Ok(s) => s,
        Err(_) => return -(1.0 + UNSOLVABLE_PENALTY),
    };
    if !solution.feasibility.is_feasible() {
        return -(1.0 + violation_magnitude(config, &solution));
    }
    match kind {
        ObjectiveKind::SnrSum => solution.snr_sum(),
        ObjectiveKind::Lambda2 => {
            match add_ris_edges(&ctx.base_graph, &solution.uavs, &solution.snrs)
                .and_then(|g| algebraic_connectivity(&g.laplacian()))
            {
                Ok(l2) => l2,
                Err(_) => -(1.0 + UNSOLVABLE_PENALTY),
            }
        }
    }
}

/// Batch-mean score of a candidate position under the scenario's blocked
/// order.
pub fn objective(
    config: &ScenarioConfig,
    batch: &[TrialContext],
    alpha: Position3D<f64>,
    kind: ObjectiveKind,
) -> f64 {
    let order: Vec<usize> = (0..config.n_blocked()).collect();
    let zetas = default_zetas(config);
    objective_ordered(config, batch, alpha, kind, &order, &zetas)
}

/// Batch-mean score for an explicit slot order.
pub fn objective_ordered(
    config: &ScenarioConfig,
    batch: &[TrialContext],
    alpha: Position3D<f64>,
    kind: ObjectiveKind,
    slot_order: &[usize],
    zetas: &[f64],
) -> f64 {
    assert!(!batch.is_empty(), "scoring needs at least one draw");
    batch
        .iter()
        .map(|ctx| score_candidate(config, ctx, alpha, kind, slot_order, zetas))
        .sum::<f64>()
        / batch.len() as f64
}

/// Annealing schedule and move parameters. Everything here is desk-scale
/// plumbing; the search space bound is the one contract that matters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaParams {
    /// Starting temperature; `None` estimates it as the interquartile range
    /// of the objective over 50 random probes of the bounds.
    pub initial_temperature: Option<f64>,
    pub cooling_factor: f64,
    pub iterations_per_temperature: usize,
    /// The schedule stops when T falls below `ratio * T0`.
    pub temperature_floor_ratio: f64,
    /// Per-axis Gaussian step at full temperature, meters.
    pub step_scale: f64,
    pub bounds: Box3<f64>,
    /// Additional independent chains beyond the first; the best position
    /// across all chains wins.
    pub restarts: usize,
}

impl SaParams {
    /// Bounds spanning the scenario's nodes widened by 2 km horizontally,
    /// altitude limited to 500 m.
    pub fn for_scenario(config: &ScenarioConfig) -> Self {
        let mut min_x = config.ue_position.x;
        let mut max_x = config.ue_position.x;
        let mut min_y = config.ue_position.y;
        let mut max_y = config.ue_position.y;
        for p in &config.uav_positions {
            min_x = min_x.min(p.x);
            max_x = max_x.max(p.x);
            min_y = min_y.min(p.y);
            max_y = max_y.max(p.y);
        }
        let bounds = Box3::new(
            Position3D::new(min_x - 2000.0, min_y - 2000.0, 0.0),
            Position3D::new(max_x + 2000.0, max_y + 2000.0, 500.0),
        );
        Self {
            initial_temperature: None,
            cooling_factor: 0.95,
            iterations_per_temperature: 40,
            temperature_floor_ratio: 1e-4,
            step_scale: 50.0,
            bounds,
            restarts: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t0) = self.initial_temperature {
            if !(t0 > 0.0 && t0.is_finite()) {
                return Err(Error::validation("initial_temperature", "must be > 0"));
            }
        }
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return Err(Error::validation("cooling_factor", "must lie in (0,1)"));
        }
        if !(self.temperature_floor_ratio > 0.0 && self.temperature_floor_ratio < 1.0) {
            return Err(Error::validation(
                "temperature_floor_ratio",
                "must lie in (0,1)",
            ));
        }
        if self.step_scale <= 0.0 || self.step_scale.is_nan() {
            return Err(Error::validation("step_scale", "must be > 0"));
        }
        if self.bounds.min.z < 0.0 {
            return Err(Error::validation("bounds", "altitude must start at z >= 0"));
        }
        for (lo, hi) in [
            (self.bounds.min.x, self.bounds.max.x),
            (self.bounds.min.y, self.bounds.max.y),
            (self.bounds.min.z, self.bounds.max.z),
        ] {
            if lo > hi || lo.is_nan() || hi.is_nan() {
                return Err(Error::validation("bounds", "min must not exceed max"));
            }
        }
        Ok(())
    }
}

fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let width = hi - lo;
    let mut t = (x - lo).rem_euclid(2.0 * width);
    if t > width {
        t = 2.0 * width - t;
    }
    lo + t
}

/// Gaussian move scaled by the cooling ratio, reflected into the bounds.
pub fn neighbor(
    alpha: Position3D<f64>,
    temperature: f64,
    initial_temperature: f64,
    params: &SaParams,
    rng: &mut impl Rng,
) -> Position3D<f64> {
    let sigma = if initial_temperature > 0.0 {
        params.step_scale * (temperature / initial_temperature)
    } else {
        0.0
    };
    let mut step = |x: f64, lo: f64, hi: f64| {
        if sigma > 0.0 {
            reflect(x + sigma * f64::standard_normal(rng), lo, hi)
        } else {
            reflect(x, lo, hi)
        }
    };
    Position3D::new(
        step(alpha.x, params.bounds.min.x, params.bounds.max.x),
        step(alpha.y, params.bounds.min.y, params.bounds.max.y),
        step(alpha.z, params.bounds.min.z, params.bounds.max.z),
    )
}

/// One annealing step as recorded in the audit trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub temperature: f64,
    pub candidate: Position3D<f64>,
    pub objective: f64,
    pub accepted: bool,
    /// Uniform draw behind an accept-worse decision; `None` for improving
    /// moves and rejections decided without a draw.
    pub uniform_draw: Option<f64>,
    pub best_so_far: f64,
}

/// Outcome of the annealing loop on a plain score function.
#[derive(Debug, Clone)]
pub struct SaOutcome {
    pub alpha: Position3D<f64>,
    pub objective: f64,
    pub trace: Vec<TraceEntry>,
}

/// Classic simulated annealing over the bounded box: improving moves always
/// accepted, worsening moves with probability `exp(delta / T)`, geometric
/// cooling, best-so-far kept across chains. Deterministic for a fixed
/// generator.
pub fn sa_optimize_with<F>(
    mut score: F,
    initial: Position3D<f64>,
    params: &SaParams,
    rng: &mut impl Rng,
) -> Result<SaOutcome>
where
    F: FnMut(Position3D<f64>) -> f64,
{
    params.validate()?;
    let initial = params.bounds.clamp(initial);
    let initial_score = score(initial);

    let mut trace = Vec::new();
    let mut best_alpha = initial;
    let mut best_score = initial_score;
    let mut iteration = 0usize;

    // Temperature 0 marks the schedule-free evaluation of the start point.
    trace.push(TraceEntry {
        iteration,
        temperature: 0.0,
        candidate: initial,
        objective: initial_score,
        accepted: true,
        uniform_draw: None,
        best_so_far: best_score,
    });

    if params.iterations_per_temperature == 0 {
        return Ok(SaOutcome {
            alpha: best_alpha,
            objective: best_score,
            trace,
        });
    }

    let t0 = match params.initial_temperature {
        Some(t) => t,
        None => {
            let mut probes: Vec<f64> = (0..50)
                .map(|_| {
                    let p = Position3D::new(
                        rng.random_range(params.bounds.min.x..=params.bounds.max.x),
                        rng.random_range(params.bounds.min.y..=params.bounds.max.y),
                        rng.random_range(params.bounds.min.z..=params.bounds.max.z),
                    );
                    score(p)
                })
                .collect();
            probes.sort_by(|a, b| a.total_cmp(b));
            let q1 = probes[probes.len() / 4];
            let q3 = probes[(3 * probes.len()) / 4];
            (q3 - q1).max(1e-9)
        }
    };
    let floor = t0 * params.temperature_floor_ratio;

    for chain in 0..=params.restarts {
        let mut current = if chain == 0 {
            initial
        } else {
            Position3D::new(
                rng.random_range(params.bounds.min.x..=params.bounds.max.x),
                rng.random_range(params.bounds.min.y..=params.bounds.max.y),
                rng.random_range(params.bounds.min.z..=params.bounds.max.z),
            )
        };
        let mut current_score = if chain == 0 { initial_score } else { score(current) };
        if current_score > best_score {
            best_score = current_score;
            best_alpha = current;
        }

        let mut temperature = t0;
        while temperature >= floor {
            for _ in 0..params.iterations_per_temperature {
                iteration += 1;
                let candidate = neighbor(current, temperature, t0, params, rng);
                let candidate_score = score(candidate);
                let delta = candidate_score - current_score;
                let (accepted, draw) = if delta >= 0.0 {
                    (true, None)
                } else {
                    let u = f64::unit_uniform(rng);
                    (u < (delta / temperature).exp(), Some(u))
                };
                if accepted {
                    current = candidate;
                    current_score = candidate_score;
                    if current_score > best_score {
                        best_score = current_score;
                        best_alpha = current;
                    }
                }
                trace.push(TraceEntry {
                    iteration,
                    temperature,
                    candidate,
                    objective: candidate_score,
                    accepted,
                    uniform_draw: draw,
                    best_so_far: best_score,
                });
            }
            temperature *= params.cooling_factor;
        }
    }

    Ok(SaOutcome {
        alpha: best_alpha,
        objective: best_score,
        trace,
    })
}

/// Placement result: the optimized position, the split it supports, and the
/// audit trace.
#[derive(Debug, Clone)]
pub struct DeploymentResult {
    pub alpha: Position3D<f64>,
    /// Split at the optimized position, solved on the batch-mean cascade
    /// qualities.
    pub partition: PartitionSolution,
    /// Batch-mean objective at the optimized position.
    pub objective: f64,
    /// Sum of the reflected-link SNRs of the reported split, linear.
    pub snr_sum: f64,
    pub trace: Vec<TraceEntry>,
}

impl DeploymentResult {
    /// Trace export: `iteration,temperature,x,y,z,objective,accepted` rows.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,temperature,x,y,z,objective,accepted\n");
        for e in &self.trace {
            s.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
                e.iteration,
                e.temperature,
                e.candidate.x,
                e.candidate.y,
                e.candidate.z,
                e.objective,
                e.accepted,
            ));
        }
        s
    }
}

/// Optimize the surface position for the scenario's blocked pair, starting
/// from the configured position.
pub fn sa_optimize(
    config: &ScenarioConfig,
    batch: &[TrialContext],
    params: &SaParams,
    kind: ObjectiveKind,
    rng: &mut impl Rng,
) -> Result<DeploymentResult> {
    let order: Vec<usize> = (0..config.n_blocked()).collect();
    let zetas = default_zetas(config);
    sa_optimize_ordered(config, batch, params, kind, &order, &zetas, rng)
}

/// Optimize for an explicit slot order (used by the pair-searching schemes).
pub fn sa_optimize_ordered(
    config: &ScenarioConfig,
    batch: &[TrialContext],
    params: &SaParams,
    kind: ObjectiveKind,
    slot_order: &[usize],
    zetas: &[f64],
    rng: &mut impl Rng,
) -> Result<DeploymentResult> {
    if batch.is_empty() {
        return Err(Error::Contract("placement needs a nonempty batch".into()));
    }
    let outcome = sa_optimize_with(
        |alpha| objective_ordered(config, batch, alpha, kind, slot_order, zetas),
        config.ris_position,
        params,
        rng,
    )?;

    let n_slots = config.n_blocked();
    let mean_qualities: Vec<f64> = (0..n_slots)
        .map(|slot| {
            batch.iter().map(|c| c.qualities[slot]).sum::<f64>() / batch.len() as f64
        })
        .collect();
    let partition = solve_partition_from_qualities(
        config,
        outcome.alpha,
        &mean_qualities,
        slot_order,
        zetas,
    )?;
    let snr_sum = partition.snr_sum();
    Ok(DeploymentResult {
        alpha: outcome.alpha,
        partition,
        objective: outcome.objective,
        snr_sum,
        trace: outcome.trace,
    })
}
