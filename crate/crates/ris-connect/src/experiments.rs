//! Benchmark schemes and Monte-Carlo sweep campaigns with CSV/JSON output.
//!
//! Within one trial every scheme sees the identical fading draw (common
//! random numbers), so per-trial scheme comparisons carry no sampling noise.
//! Surface placements are optimized once per sweep point on a frozen draw
//! batch, then scored on fresh per-trial draws.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::sync::Once;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    optimal_phases, partition_assignment, quantize_phases, rate, realize, snr_approx, snr_exact,
    FadingDraw,
};
use crate::deploy::{
    sa_optimize_ordered, trial_contexts, ObjectiveKind, SaParams, TrialContext,
};
use crate::error::{Error, Result};
use crate::graph::algebraic_connectivity;
use crate::partition::{default_zetas, solve_partition_from_qualities};
use crate::scenario::{
    stream_rng, synth_uav_positions, Position3D, ScenarioConfig, StreamPurpose,
};

/// Size of the frozen draw batch used to score placement candidates.
pub const DEPLOY_BATCH: usize = 16;

/// Benchmark schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    /// Closed-form split for the declared pair plus optimized placement.
    Proposed,
    /// [`Scheme::Proposed`] searched over every ordered blocked pair.
    ProposedOptimal,
    /// Whole array beamformed to the declared boosted UAV, fixed placement.
    OneLink,
    /// [`Scheme::OneLink`] searched over every blocked UAV.
    OneLinkOptimal,
    /// Closed-form split at the configured (unoptimized) surface position.
    ProposedRandomRis,
    /// No reflected edges at all.
    RisFree,
    /// No reflected edges and no direct UE links either.
    RisFreeNoDirect,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Proposed,
        Scheme::ProposedOptimal,
        Scheme::OneLink,
        Scheme::OneLinkOptimal,
        Scheme::ProposedRandomRis,
        Scheme::RisFree,
        Scheme::RisFreeNoDirect,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::ProposedOptimal => "proposed-optimal",
            Scheme::OneLink => "one-link",
            Scheme::OneLinkOptimal => "one-link-optimal",
            Scheme::ProposedRandomRis => "proposed-random-ris",
            Scheme::RisFree => "ris-free",
            Scheme::RisFreeNoDirect => "ris-free-no-direct",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Scheme::ALL
            .iter()
            .copied()
            .find(|scheme| scheme.tag() == s)
            .ok_or_else(|| Error::validation("scheme", format!("unknown scheme `{s}`")))
    }

}

static INIT_POOL: Once = Once::new();

/// Honor the `RIS_CONNECT_THREADS` cap. Safe to call repeatedly; the first
/// call wins.
pub fn init_parallelism() {
    INIT_POOL.call_once(|| {
        if let Ok(v) = std::env::var("RIS_CONNECT_THREADS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    });
}

/// Deterministic parallel map over trial indices.
fn run_trials<T: Send>(
    trials: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    init_parallelism();
    (0..trials).into_par_iter().map(f).collect()
}

/// Optimized surface position per ordered slot sequence, shared by all
/// trials of one sweep point.
#[derive(Debug, Clone)]
pub struct CampaignPlan {
    placements: BTreeMap<Vec<usize>, Position3D<f64>>,
}

impl CampaignPlan {
    pub fn placement(&self, order: &[usize]) -> Option<Position3D<f64>> {
        self.placements.get(order).copied()
    }
}

fn ordered_pairs(n_slots: usize) -> Vec<Vec<usize>> {
    let mut pairs = Vec::new();
    for i in 0..n_slots {
        for j in 0..n_slots {
            if i != j {
                pairs.push(vec![i, j]);
            }
        }
    }
    pairs
}

fn zetas_for_order(config: &ScenarioConfig, order: &[usize]) -> Vec<f64> {
    let mut z = vec![config.zeta; order.len()];
    z[0] = 1.0;
    z
}

/// Run the placement searches a scheme set needs: one annealing run per
/// ordered slot sequence, each on the same frozen draw batch and its own
/// seeded stream.
pub fn plan_campaign(
    config: &ScenarioConfig,
    schemes: &[Scheme],
    kind: ObjectiveKind,
    sa_params: Option<&SaParams>,
) -> Result<CampaignPlan> {
    let mut orders: Vec<Vec<usize>> = Vec::new();
    if schemes.contains(&Scheme::Proposed) {
        orders.push((0..config.n_blocked()).collect());
    }
    if schemes.contains(&Scheme::ProposedOptimal) {
        for pair in ordered_pairs(config.n_blocked()) {
            if !orders.contains(&pair) {
                orders.push(pair);
            }
        }
    }

    let mut placements = BTreeMap::new();
    if !orders.is_empty() {
        let default_params = SaParams::for_scenario(config);
        let params = sa_params.unwrap_or(&default_params);
        let mut batch_rng = stream_rng(config.rng_seed, StreamPurpose::Batch, 0);
        let batch = trial_contexts(config, DEPLOY_BATCH, &mut batch_rng)?;
        for (idx, order) in orders.iter().enumerate() {
            let zetas = zetas_for_order(config, order);
            let mut rng = stream_rng(config.rng_seed, StreamPurpose::Anneal, idx as u64);
            let result =
                sa_optimize_ordered(config, &batch, params, kind, order, &zetas, &mut rng)?;
            placements.insert(order.clone(), result.alpha);
        }
    }
    Ok(CampaignPlan { placements })
}

fn lambda2_with_split(
    config: &ScenarioConfig,
    ctx: &TrialContext,
    alpha: Position3D<f64>,
    order: &[usize],
    zetas: &[f64],
) -> Result<f64> {
    let base = algebraic_connectivity(&ctx.base_graph.laplacian())?;
    let solution =
        match solve_partition_from_qualities(config, alpha, &ctx.qualities, order, zetas) {
            Ok(s) => s,
            Err(Error::DegenerateChannel(_)) => return Ok(base),
            Err(e) => return Err(e),
        };
    if !solution.feasibility.is_feasible() {
        return Ok(base);
    }
    let extended = crate::graph::add_ris_edges(&ctx.base_graph, &solution.uavs, &solution.snrs)?;
    algebraic_connectivity(&extended.laplacian())
}

fn one_link_lambda2(
    config: &ScenarioConfig,
    ctx: &TrialContext,
    slot: usize,
) -> Result<f64> {
    let base = algebraic_connectivity(&ctx.base_graph.laplacian())?;
    let uav = config.blocked_uavs[slot];
    let q = ctx.qualities[slot];
    if q <= 0.0 || q.is_nan() {
        return Ok(base);
    }
    let snr = snr_approx(config, config.ris_position, uav, 1.0, q)?;
    if snr < config.thr_ris_linear() {
        return Ok(base);
    }
    let extended = crate::graph::add_ris_edges(&ctx.base_graph, &[uav], &[snr])?;
    algebraic_connectivity(&extended.laplacian())
}

/// Connectivity sample of one scheme on one trial draw.
pub fn run_scheme_on_ctx(
    config: &ScenarioConfig,
    plan: &CampaignPlan,
    scheme: Scheme,
    ctx: &TrialContext,
) -> Result<f64> {
    let n_blocked = config.n_blocked();
    let inapplicable = |reason: &str| Error::SchemeInapplicable {
        scheme: scheme.tag().into(),
        reason: reason.into(),
    };
    match scheme {
        Scheme::RisFree => algebraic_connectivity(&ctx.base_graph.laplacian()),
        Scheme::RisFreeNoDirect => {
            algebraic_connectivity(&ctx.base_graph.without_ue_edges().laplacian())
        }
        Scheme::OneLink => {
            if n_blocked < 1 {
                return Err(inapplicable("needs a blocked UAV"));
            }
            one_link_lambda2(config, ctx, 0)
        }
        Scheme::OneLinkOptimal => {
            if n_blocked < 1 {
                return Err(inapplicable("needs a blocked UAV"));
            }
            let mut best = f64::NEG_INFINITY;
            for slot in 0..n_blocked {
                best = best.max(one_link_lambda2(config, ctx, slot)?);
            }
            Ok(best)
        }
        Scheme::ProposedRandomRis => {
            if n_blocked < 2 {
                return Err(inapplicable("needs two blocked UAVs"));
            }
            let order: Vec<usize> = (0..n_blocked).collect();
            lambda2_with_split(
                config,
                ctx,
                config.ris_position,
                &order,
                &default_zetas(config),
            )
        }
        Scheme::Proposed => {
            if n_blocked < 2 {
                return Err(inapplicable("needs two blocked UAVs"));
            }
            let order: Vec<usize> = (0..n_blocked).collect();
            let alpha = plan
                .placement(&order)
                .ok_or_else(|| inapplicable("campaign plan carries no placement"))?;
            lambda2_with_split(config, ctx, alpha, &order, &default_zetas(config))
        }
        Scheme::ProposedOptimal => {
            if n_blocked < 2 {
                return Err(inapplicable("needs two blocked UAVs"));
            }
            let mut best = f64::NEG_INFINITY;
            for pair in ordered_pairs(n_blocked) {
                let alpha = plan
                    .placement(&pair)
                    .ok_or_else(|| inapplicable("campaign plan misses a pair placement"))?;
                let zetas = zetas_for_order(config, &pair);
                best = best.max(lambda2_with_split(config, ctx, alpha, &pair, &zetas)?);
            }
            Ok(best)
        }
    }
}

/// Connectivity sample of one scheme on a fresh draw from `rng`. Schemes
/// that optimize the placement run their annealing search first, so prefer
/// [`plan_campaign`] + [`run_scheme_on_ctx`] in loops.
pub fn run_scheme(config: &ScenarioConfig, scheme: Scheme, rng: &mut impl Rng) -> Result<f64> {
    let plan = plan_campaign(config, &[scheme], ObjectiveKind::Lambda2, None)?;
    let draw = FadingDraw::sample(config, rng)?;
    let ctx = TrialContext::from_draw(config, &draw)?;
    run_scheme_on_ctx(config, &plan, scheme, &ctx)
}

/// Aggregated sweep campaign: per-scheme mean metric and standard error for
/// every sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    /// Sweep variable name.
    pub sweep: String,
    pub values: Vec<f64>,
    pub schemes: Vec<String>,
    /// `mean[value_idx][scheme_idx]`.
    pub mean: Vec<Vec<f64>>,
    /// `std_error[value_idx][scheme_idx]`.
    pub std_error: Vec<Vec<f64>>,
    pub trials: usize,
    pub seed: u64,
    pub config: ScenarioConfig,
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn aggregate(
    sweep: &str,
    values: Vec<f64>,
    schemes: &[Scheme],
    samples: &[Vec<Vec<f64>>], // [trial][value][scheme]
    trials: usize,
    config: &ScenarioConfig,
) -> ExperimentResult {
    let n_values = values.len();
    let n_schemes = schemes.len();
    let mut mean = vec![vec![0.0; n_schemes]; n_values];
    let mut std_error = vec![vec![0.0; n_schemes]; n_values];
    for vi in 0..n_values {
        for si in 0..n_schemes {
            let col: Vec<f64> = samples.iter().map(|t| t[vi][si]).collect();
            let (m, se) = mean_and_se(&col);
            mean[vi][si] = m;
            std_error[vi][si] = se;
        }
    }
    ExperimentResult {
        sweep: sweep.to_string(),
        values,
        schemes: schemes.iter().map(|s| s.tag().to_string()).collect(),
        mean,
        std_error,
        trials,
        seed: config.rng_seed,
        config: config.clone(),
    }
}

/// Mean connectivity per scheme versus the fleet size. Fleet layouts are
/// re-derived from the seed so they nest across sizes, and every fleet size
/// shares the per-trial fading draw.
pub fn run_connectivity_vs_k(
    config: &ScenarioConfig,
    k_values: &[usize],
    schemes: &[Scheme],
    trials: usize,
    kind: ObjectiveKind,
) -> Result<ExperimentResult> {
    if k_values.is_empty() || trials == 0 {
        return Err(Error::validation("vs-k", "needs sweep values and trials"));
    }
    let k_max = *k_values.iter().max().expect("nonempty");

    let mut configs = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let mut c = config.clone();
        c.n_uavs = k;
        c.uav_positions = synth_uav_positions(k, config.rng_seed);
        c.validate()?;
        configs.push(c);
    }
    let cfg_max = {
        let mut c = config.clone();
        c.n_uavs = k_max;
        c.uav_positions = synth_uav_positions(k_max, config.rng_seed);
        c
    };

    let plans = configs
        .iter()
        .map(|c| plan_campaign(c, schemes, kind, None))
        .collect::<Result<Vec<_>>>()?;

    let samples = run_trials(trials, |t| {
        let mut rng = stream_rng(config.rng_seed, StreamPurpose::Trial, t as u64);
        let draw = FadingDraw::sample(&cfg_max, &mut rng)?;
        configs
            .iter()
            .zip(&plans)
            .map(|(c, plan)| {
                let ctx = TrialContext::from_draw(c, &draw.prefix_uavs(c.n_uavs))?;
                schemes
                    .iter()
                    .map(|&s| run_scheme_on_ctx(c, plan, s, &ctx))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    Ok(aggregate(
        "k",
        k_values.iter().map(|&k| k as f64).collect(),
        schemes,
        &samples,
        trials,
        config,
    ))
}

/// Mean connectivity per scheme versus the number of surface elements.
/// Element draws nest across sizes (prefixes of one maximal draw per trial).
pub fn run_connectivity_vs_n(
    config: &ScenarioConfig,
    n_values: &[usize],
    schemes: &[Scheme],
    trials: usize,
    kind: ObjectiveKind,
) -> Result<ExperimentResult> {
    if n_values.is_empty() || trials == 0 {
        return Err(Error::validation("vs-n", "needs sweep values and trials"));
    }
    let n_max = *n_values.iter().max().expect("nonempty");

    let mut configs = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut c = config.clone();
        c.n_elements = n;
        c.validate()?;
        configs.push(c);
    }
    let cfg_max = {
        let mut c = config.clone();
        c.n_elements = n_max;
        c
    };

    let plans = configs
        .iter()
        .map(|c| plan_campaign(c, schemes, kind, None))
        .collect::<Result<Vec<_>>>()?;

    let samples = run_trials(trials, |t| {
        let mut rng = stream_rng(config.rng_seed, StreamPurpose::Trial, t as u64);
        let draw = FadingDraw::sample(&cfg_max, &mut rng)?;
        configs
            .iter()
            .zip(&plans)
            .map(|(c, plan)| {
                let ctx = TrialContext::from_draw(c, &draw.prefix(c.n_elements))?;
                schemes
                    .iter()
                    .map(|&s| run_scheme_on_ctx(c, plan, s, &ctx))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    Ok(aggregate(
        "n",
        n_values.iter().map(|&n| n as f64).collect(),
        schemes,
        &samples,
        trials,
        config,
    ))
}

/// Rate/share table of the closed-form split at the configured surface
/// position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub sweep: String,
    pub values: Vec<f64>,
    /// Mean rate of the boosted UAV per sweep value, bit/s.
    pub rate_x: Vec<f64>,
    /// Mean rate of the capped UAV per sweep value, bit/s.
    pub rate_y: Vec<f64>,
    /// Mean boosted share (raw, not clipped).
    pub rho_x: Vec<f64>,
    /// Mean capped share (raw, not clipped).
    pub rho_y: Vec<f64>,
    /// Fraction of trials whose split satisfied every constraint.
    pub feasible_share: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub config: ScenarioConfig,
}

fn rate_sweep(
    config: &ScenarioConfig,
    sweep: &str,
    values: &[f64],
    make_cfg: impl Fn(f64) -> ScenarioConfig + Sync,
    trials: usize,
) -> Result<RateTable> {
    if values.is_empty() || trials == 0 {
        return Err(Error::validation(sweep, "needs sweep values and trials"));
    }
    let configs: Vec<ScenarioConfig> = values.iter().map(|&v| make_cfg(v)).collect();
    for c in &configs {
        c.validate()?;
    }

    // [trial][value] -> (rate_x, rate_y, rho_x, rho_y, feasible)
    let samples = run_trials(trials, |t| {
        let mut rng = stream_rng(config.rng_seed, StreamPurpose::Trial, t as u64);
        let draw = FadingDraw::sample(config, &mut rng)?;
        let ctx = TrialContext::from_draw(config, &draw)?;
        configs
            .iter()
            .map(|c| {
                let order: Vec<usize> = (0..c.n_blocked()).collect();
                let sol = solve_partition_from_qualities(
                    c,
                    c.ris_position,
                    &ctx.qualities,
                    &order,
                    &default_zetas(c),
                )?;
                let rx = rate(sol.snrs[0], c.bandwidth_hz);
                let ry = rate(sol.snrs[1], c.bandwidth_hz);
                Ok((
                    rx,
                    ry,
                    sol.shares[0],
                    sol.shares[1],
                    sol.feasibility.is_feasible(),
                ))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let n_values = values.len();
    let mut rate_x = vec![0.0; n_values];
    let mut rate_y = vec![0.0; n_values];
    let mut rho_x = vec![0.0; n_values];
    let mut rho_y = vec![0.0; n_values];
    let mut feasible_share = vec![0.0; n_values];
    for t in &samples {
        for (vi, &(rx, ry, sx, sy, feas)) in t.iter().enumerate() {
            rate_x[vi] += rx;
            rate_y[vi] += ry;
            rho_x[vi] += sx;
            rho_y[vi] += sy;
            feasible_share[vi] += if feas { 1.0 } else { 0.0 };
        }
    }
    let n = trials as f64;
    for vi in 0..n_values {
        rate_x[vi] /= n;
        rate_y[vi] /= n;
        rho_x[vi] /= n;
        rho_y[vi] /= n;
        feasible_share[vi] /= n;
    }

    if feasible_share.iter().all(|&f| f == 0.0) {
        return Err(Error::InfeasibleEverywhere);
    }

    Ok(RateTable {
        sweep: sweep.to_string(),
        values: values.to_vec(),
        rate_x,
        rate_y,
        rho_x,
        rho_y,
        feasible_share,
        trials,
        seed: config.rng_seed,
        config: config.clone(),
    })
}

/// Rates and shares versus the cap fraction.
pub fn run_rate_vs_zeta(
    config: &ScenarioConfig,
    zeta_values: &[f64],
    trials: usize,
) -> Result<RateTable> {
    for &z in zeta_values {
        if !(z > 0.0 && z <= 1.0) {
            return Err(Error::validation("zeta", "sweep values must lie in (0,1]"));
        }
    }
    rate_sweep(
        config,
        "zeta",
        zeta_values,
        |z| {
            let mut c = config.clone();
            c.zeta = z;
            c
        },
        trials,
    )
}

/// Rates and shares versus the reflected-link SNR threshold in dB.
pub fn run_rate_vs_gamma0(
    config: &ScenarioConfig,
    gamma_values_db: &[f64],
    trials: usize,
) -> Result<RateTable> {
    rate_sweep(
        config,
        "gamma0_db",
        gamma_values_db,
        |g| {
            let mut c = config.clone();
            c.thr_ris_db = g;
            c
        },
        trials,
    )
}

/// Exact-versus-approximated rate comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateComparisonRow {
    /// Sweep variable of this row: `rho_x` or `n`.
    pub sweep: String,
    pub value: f64,
    pub exact_x: f64,
    pub approx_x: f64,
    pub exact_y: f64,
    pub approx_y: f64,
    /// Mean per-trial relative gap `|exact - approx| / exact`.
    pub gap_x: f64,
    pub gap_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateComparisonTable {
    pub rows: Vec<RateComparisonRow>,
    pub trials: usize,
    pub seed: u64,
    pub config: ScenarioConfig,
}

/// Mean exact and approximated rates over a share grid (at the configured
/// element count) and an element-count grid (at a 0.8 boosted share), with
/// phase profiles quantized at the configured resolution.
pub fn run_rate_comparison(
    config: &ScenarioConfig,
    rho_grid: &[f64],
    n_grid: &[usize],
    trials: usize,
) -> Result<RateComparisonTable> {
    if trials == 0 {
        return Err(Error::validation("trials", "must be >= 1"));
    }
    for &r in rho_grid {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::validation("rho_grid", "shares must lie in [0,1]"));
        }
    }
    const RHO_X_FOR_N_SWEEP: f64 = 0.8;
    let n_max = n_grid.iter().copied().max().unwrap_or(0).max(config.n_elements);
    let cfg_max = {
        let mut c = config.clone();
        c.n_elements = n_max;
        c
    };

    struct Acc {
        exact_x: f64,
        approx_x: f64,
        exact_y: f64,
        approx_y: f64,
        gap_x: f64,
        gap_y: f64,
    }

    let eval_point = |config: &ScenarioConfig,
                      draw: &FadingDraw,
                      rho_x: f64|
     -> Result<(f64, f64, f64, f64)> {
        let realization = realize(config, config.ris_position, draw)?;
        let shares = [rho_x, 1.0 - rho_x];
        let assignment = partition_assignment(&shares, config.n_elements);
        let profile = quantize_phases(
            &optimal_phases(&realization, &assignment)?,
            config.bit_resolution,
        );
        let q_x = crate::channel::channel_quality(&realization, 0);
        let q_y = crate::channel::channel_quality(&realization, 1);
        let exact_x = rate(
            snr_exact(config, &realization, &profile, 0)?,
            config.bandwidth_hz,
        );
        let exact_y = rate(
            snr_exact(config, &realization, &profile, 1)?,
            config.bandwidth_hz,
        );
        let approx_x = rate(
            snr_approx(config, config.ris_position, config.blocked_uavs[0], shares[0], q_x)?,
            config.bandwidth_hz,
        );
        let approx_y = rate(
            snr_approx(config, config.ris_position, config.blocked_uavs[1], shares[1], q_y)?,
            config.bandwidth_hz,
        );
        Ok((exact_x, approx_x, exact_y, approx_y))
    };

    let per_trial = run_trials(trials, |t| {
        let mut rng = stream_rng(config.rng_seed, StreamPurpose::Trial, t as u64);
        let draw = FadingDraw::sample(&cfg_max, &mut rng)?;
        let mut accs = Vec::with_capacity(rho_grid.len() + n_grid.len());
        let base_draw = draw.prefix(config.n_elements);
        for &rho_x in rho_grid {
            let (ex, ax, ey, ay) = eval_point(config, &base_draw, rho_x)?;
            accs.push((ex, ax, ey, ay));
        }
        for &n in n_grid {
            let mut c = config.clone();
            c.n_elements = n;
            let (ex, ax, ey, ay) = eval_point(&c, &draw.prefix(n), RHO_X_FOR_N_SWEEP)?;
            accs.push((ex, ax, ey, ay));
        }
        Ok(accs)
    })?;

    let n_rows = rho_grid.len() + n_grid.len();
    let mut accs: Vec<Acc> = (0..n_rows)
        .map(|_| Acc {
            exact_x: 0.0,
            approx_x: 0.0,
            exact_y: 0.0,
            approx_y: 0.0,
            gap_x: 0.0,
            gap_y: 0.0,
        })
        .collect();
    for trial in &per_trial {
        for (row, &(ex, ax, ey, ay)) in trial.iter().enumerate() {
            let acc = &mut accs[row];
            acc.exact_x += ex;
            acc.approx_x += ax;
            acc.exact_y += ey;
            acc.approx_y += ay;
            if ex > 0.0 {
                acc.gap_x += (ex - ax).abs() / ex;
            }
            if ey > 0.0 {
                acc.gap_y += (ey - ay).abs() / ey;
            }
        }
    }

    let n = trials as f64;
    let mut rows = Vec::with_capacity(n_rows);
    for (row, acc) in accs.iter().enumerate() {
        let (sweep, value) = if row < rho_grid.len() {
            ("rho_x".to_string(), rho_grid[row])
        } else {
            ("n".to_string(), n_grid[row - rho_grid.len()] as f64)
        };
        rows.push(RateComparisonRow {
            sweep,
            value,
            exact_x: acc.exact_x / n,
            approx_x: acc.approx_x / n,
            exact_y: acc.exact_y / n,
            approx_y: acc.approx_y / n,
            gap_x: acc.gap_x / n,
            gap_y: acc.gap_y / n,
        });
    }

    Ok(RateComparisonTable {
        rows,
        trials,
        seed: config.rng_seed,
        config: config.clone(),
    })
}

/// Output format of [`emit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::validation(
                "format",
                format!("unknown format `{other}` (expected csv | json)"),
            )),
        }
    }
}

fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Table that can be emitted as CSV rows or a JSON document.
pub trait EmitTable: Serialize {
    fn csv(&self) -> String;
    fn config(&self) -> &ScenarioConfig;
}

impl EmitTable for ExperimentResult {
    fn csv(&self) -> String {
        let mut s = String::from("sweep,value,scheme,mean,std_error,trials\n");
        for (vi, &v) in self.values.iter().enumerate() {
            for (si, scheme) in self.schemes.iter().enumerate() {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    self.sweep,
                    sig12(v),
                    scheme,
                    sig12(self.mean[vi][si]),
                    sig12(self.std_error[vi][si]),
                    self.trials
                ));
            }
        }
        s
    }

    fn config(&self) -> &ScenarioConfig {
        &self.config
    }
}

impl EmitTable for RateTable {
    fn csv(&self) -> String {
        let mut s =
            String::from("sweep,value,rate_x,rate_y,rho_x,rho_y,feasible_share,trials\n");
        for (vi, &v) in self.values.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.sweep,
                sig12(v),
                sig12(self.rate_x[vi]),
                sig12(self.rate_y[vi]),
                sig12(self.rho_x[vi]),
                sig12(self.rho_y[vi]),
                sig12(self.feasible_share[vi]),
                self.trials
            ));
        }
        s
    }

    fn config(&self) -> &ScenarioConfig {
        &self.config
    }
}

impl EmitTable for RateComparisonTable {
    fn csv(&self) -> String {
        let mut s =
            String::from("sweep,value,exact_x,approx_x,exact_y,approx_y,gap_x,gap_y,trials\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.sweep,
                sig12(r.value),
                sig12(r.exact_x),
                sig12(r.approx_x),
                sig12(r.exact_y),
                sig12(r.approx_y),
                sig12(r.gap_x),
                sig12(r.gap_y),
                self.trials
            ));
        }
        s
    }

    fn config(&self) -> &ScenarioConfig {
        &self.config
    }
}

/// Write a table deterministically. CSV gets the configuration snapshot as a
/// `<path>.config.json` sidecar; JSON embeds it.
pub fn emit<T: EmitTable>(table: &T, format: OutputFormat, path: &Path) -> Result<()> {
    let write = |p: &Path, bytes: &[u8]| -> Result<()> {
        let mut f = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
        f.write_all(bytes).map_err(|e| Error::io(p, e))
    };
    match format {
        OutputFormat::Csv => {
            write(path, table.csv().as_bytes())?;
            let sidecar = path.with_extension(
                path.extension()
                    .map(|e| format!("{}.config.json", e.to_string_lossy()))
                    .unwrap_or_else(|| "config.json".into()),
            );
            let cfg = serde_json::to_string_pretty(table.config())
                .expect("config serializes") + "\n";
            write(&sidecar, cfg.as_bytes())
        }
        OutputFormat::Json => {
            let body = serde_json::to_string_pretty(table).expect("table serializes") + "\n";
            write(path, body.as_bytes())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_scenario;

    fn fast_sa(config: &ScenarioConfig) -> SaParams {
        let mut p = SaParams::for_scenario(config);
        p.iterations_per_temperature = 8;
        p.temperature_floor_ratio = 1e-2;
        p.restarts = 0;
        p
    }

    fn plan_all(config: &ScenarioConfig) -> CampaignPlan {
        let params = fast_sa(config);
        plan_campaign(config, &Scheme::ALL, ObjectiveKind::Lambda2, Some(&params)).unwrap()
    }

    fn trial_ctx(config: &ScenarioConfig, t: u64) -> TrialContext {
        let mut rng = stream_rng(config.rng_seed, StreamPurpose::Trial, t);
        let draw = FadingDraw::sample(config, &mut rng).unwrap();
        TrialContext::from_draw(config, &draw).unwrap()
    }

    #[test]
    fn isolated_ue_has_zero_connectivity() {
        let cfg = default_scenario();
        let plan = plan_campaign(&cfg, &[Scheme::RisFreeNoDirect], ObjectiveKind::Lambda2, None)
            .unwrap();
        for t in 0..20 {
            let ctx = trial_ctx(&cfg, t);
            let l2 = run_scheme_on_ctx(&cfg, &plan, Scheme::RisFreeNoDirect, &ctx).unwrap();
            assert_eq!(l2, 0.0);
        }
    }

    #[test]
    fn scheme_dominance_per_trial() {
        let cfg = default_scenario();
        let plan = plan_all(&cfg);
        let mut proposed_beats_one_link = 0usize;
        let trials = 60;
        for t in 0..trials {
            let ctx = trial_ctx(&cfg, t as u64);
            let value = |s: Scheme| run_scheme_on_ctx(&cfg, &plan, s, &ctx).unwrap();
            let po = value(Scheme::ProposedOptimal);
            let p = value(Scheme::Proposed);
            let prr = value(Scheme::ProposedRandomRis);
            let olo = value(Scheme::OneLinkOptimal);
            let ol = value(Scheme::OneLink);
            let rf = value(Scheme::RisFree);
            let rfnd = value(Scheme::RisFreeNoDirect);

            assert!(po >= p - 1e-9, "optimal pair search includes the declared pair");
            assert!(olo >= ol - 1e-9);
            assert!(prr >= rf - 1e-9, "extra edges never hurt");
            assert!(p >= rf - 1e-9);
            assert!(po >= olo - 1e-9, "two tuned links beat one at trial {t}");
            assert_eq!(rfnd, 0.0);
            if p >= ol {
                proposed_beats_one_link += 1;
            }
        }
        assert!(
            proposed_beats_one_link >= trials * 9 / 10,
            "second reflected edge should usually dominate: {proposed_beats_one_link}/{trials}"
        );
    }

    #[test]
    fn scheme_preconditions_are_checked() {
        let mut cfg = default_scenario();
        cfg.blocked_uavs.clear();
        let plan = CampaignPlan {
            placements: BTreeMap::new(),
        };
        let ctx = trial_ctx(&default_scenario(), 0);
        // Borrow a context from the valid scenario; the blocked list is what
        // the precondition looks at.
        let err = run_scheme_on_ctx(&cfg, &plan, Scheme::Proposed, &ctx).unwrap_err();
        assert!(matches!(err, Error::SchemeInapplicable { .. }));
    }

    #[test]
    fn vs_k_campaign_trends() {
        let cfg = default_scenario();
        let schemes = [Scheme::Proposed, Scheme::ProposedRandomRis, Scheme::RisFree, Scheme::RisFreeNoDirect];
        // Small but real: placements planned per fleet size.
        let result =
            run_connectivity_vs_k(&cfg, &[4, 8, 12], &schemes, 60, ObjectiveKind::Lambda2)
                .unwrap();
        assert_eq!(result.sweep, "k");
        assert_eq!(result.mean.len(), 3);
        assert_eq!(result.mean[0].len(), 4);

        let idx = |s: Scheme| schemes.iter().position(|&x| x == s).unwrap();
        for vi in 0..3 {
            assert_eq!(result.mean[vi][idx(Scheme::RisFreeNoDirect)], 0.0);
            assert!(
                result.mean[vi][idx(Scheme::Proposed)]
                    >= result.mean[vi][idx(Scheme::ProposedRandomRis)] - 1e-9
            );
            assert!(
                result.mean[vi][idx(Scheme::ProposedRandomRis)]
                    >= result.mean[vi][idx(Scheme::RisFree)] - 1e-9
            );
        }
        // Densified fleets connect better.
        let proposed = idx(Scheme::Proposed);
        assert!(result.mean[2][proposed] >= result.mean[0][proposed]);
    }

    #[test]
    fn vs_n_campaign_trends() {
        let cfg = default_scenario();
        let schemes = [Scheme::Proposed, Scheme::RisFree];
        let result =
            run_connectivity_vs_n(&cfg, &[40, 80, 160], &schemes, 60, ObjectiveKind::Lambda2)
                .unwrap();
        assert_eq!(result.sweep, "n");
        // More elements never hurt the proposed scheme.
        for w in result.mean.windows(2) {
            assert!(w[1][0] >= w[0][0] - 1e-9, "proposed mean dropped: {:?}", result.mean);
        }
        // The surface-free benchmark cannot depend on the element count.
        assert!((result.mean[0][1] - result.mean[1][1]).abs() < 1e-12);
        assert!((result.mean[1][1] - result.mean[2][1]).abs() < 1e-12);
    }

    #[test]
    fn zeta_sweep_moves_rates_in_opposite_directions() {
        let cfg = default_scenario();
        let table = run_rate_vs_zeta(&cfg, &[0.1, 0.2, 0.3, 0.4], 200).unwrap();
        for w in table.rate_y.windows(2) {
            assert!(w[1] > w[0], "capped rate must grow with its cap");
        }
        for w in table.rate_x.windows(2) {
            assert!(w[1] < w[0], "boosted rate must shrink as the cap grows");
        }
        // Closed-form scaling: shares grow like sqrt(zeta).
        let ratio = table.rho_y[3] / table.rho_y[0];
        assert!((ratio - 2.0).abs() < 1e-9, "sqrt(0.4/0.1) = 2, got {ratio}");
        assert!(table.feasible_share.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn gamma0_sweep_scales_shares_and_reports_infeasibility() {
        let mut cfg = default_scenario();
        cfg.zeta = 0.1;
        let table = run_rate_vs_gamma0(&cfg, &[60.0, 65.0, 75.0, 95.0], 200).unwrap();
        let ratio = table.rho_y[1] / table.rho_y[0];
        assert!(
            (ratio - 10f64.powf(0.25)).abs() < 1e-9,
            "5 dB threshold step scales the share by 10^(1/4), got {ratio}"
        );
        let ratio_15db = table.rho_y[2] / table.rho_y[0];
        assert!((ratio_15db - 10f64.powf(0.75)).abs() < 1e-9);
        // At 95 dB the capped share blows past 1: reported raw, not clipped.
        assert!(table.rho_y[3] > 1.0);
        assert_eq!(table.feasible_share[3], 0.0);
        assert!(table.feasible_share[0] > 0.99);
    }

    #[test]
    fn everywhere_infeasible_campaign_errors() {
        let mut cfg = default_scenario();
        cfg.zeta = 0.9;
        cfg.thr_ris_db = 140.0;
        let err = run_rate_vs_gamma0(&cfg, &[140.0, 150.0], 10).unwrap_err();
        assert!(matches!(err, Error::InfeasibleEverywhere));
    }

    #[test]
    fn rate_comparison_has_small_gaps_and_empty_partition_zero_rate() {
        let cfg = default_scenario();
        let table = run_rate_comparison(&cfg, &[0.2, 0.5, 0.8, 1.0], &[60, 100], 2000).unwrap();
        assert_eq!(table.rows.len(), 6);

        // rho_x = 1 leaves nothing for the capped UAV in the approximation.
        let full = &table.rows[3];
        assert_eq!(full.approx_y, 0.0);
        assert!(full.exact_y > 0.0, "stray reflections still arrive");

        // Approximation tracks the exact rates across the share grid.
        for row in &table.rows[..3] {
            assert!(row.gap_x < 0.05, "rho_x {}: gap_x = {}", row.value, row.gap_x);
            assert!(row.gap_y < 0.05, "rho_x {}: gap_y = {}", row.value, row.gap_y);
        }

        // More elements, more rate.
        let small_n = &table.rows[4];
        let large_n = &table.rows[5];
        assert!(large_n.exact_x > small_n.exact_x);
        assert!(large_n.approx_y > small_n.approx_y);
    }

    #[test]
    fn standard_error_shrinks_with_trials() {
        let cfg = default_scenario();
        let schemes = [Scheme::RisFree];
        let r100 =
            run_connectivity_vs_k(&cfg, &[8], &schemes, 100, ObjectiveKind::Lambda2).unwrap();
        let r400 =
            run_connectivity_vs_k(&cfg, &[8], &schemes, 400, ObjectiveKind::Lambda2).unwrap();
        let ratio = r100.std_error[0][0] / r400.std_error[0][0];
        assert!(
            (1.4..=2.9).contains(&ratio),
            "SE ratio {ratio} incompatible with 1/sqrt(trials)"
        );
    }

    #[test]
    fn emitted_tables_are_deterministic_and_round_trip() {
        let cfg = default_scenario();
        let schemes = [Scheme::RisFree, Scheme::ProposedRandomRis];
        let result =
            run_connectivity_vs_k(&cfg, &[4, 6], &schemes, 25, ObjectiveKind::Lambda2).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let json_path = dir.path().join("out.json");
        emit(&result, OutputFormat::Json, &json_path).unwrap();
        let parsed: ExperimentResult =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(parsed, result);

        let csv_path = dir.path().join("out.csv");
        emit(&result, OutputFormat::Csv, &csv_path).unwrap();
        let csv = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 * 2, "header + sweep x schemes");
        let sidecar = dir.path().join("out.csv.config.json");
        let cfg_parsed: ScenarioConfig =
            serde_json::from_str(&std::fs::read_to_string(&sidecar).unwrap()).unwrap();
        assert_eq!(cfg_parsed, cfg);

        // Byte-identical re-run.
        let result2 =
            run_connectivity_vs_k(&cfg, &[4, 6], &schemes, 25, ObjectiveKind::Lambda2).unwrap();
        let json_path2 = dir.path().join("out2.json");
        emit(&result2, OutputFormat::Json, &json_path2).unwrap();
        assert_eq!(
            std::fs::read(&json_path).unwrap(),
            std::fs::read(&json_path2).unwrap()
        );
    }

    #[test]
    fn sampled_run_scheme_matches_planned_path() {
        let cfg = default_scenario();
        let mut rng = stream_rng(cfg.rng_seed, StreamPurpose::Trial, 7);
        let l2 = run_scheme(&cfg, Scheme::RisFree, &mut rng).unwrap();
        assert!(l2 >= 0.0);
    }
}
