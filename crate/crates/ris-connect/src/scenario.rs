//! Scenario configuration: physical parameters, node geometry, and seeded
//! randomness for every experiment.
//!
//! A scenario is immutable once built. Workers derive independent ChaCha
//! streams from `(rng_seed, purpose, index)` via [`stream_rng`], so any
//! campaign re-run with the same seed reproduces bit-identical randomness.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::FadingParams;
use crate::error::{Error, Result};
use crate::num::Scalar;

/// Cartesian point, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    from = "[T; 3]",
    into = "[T; 3]",
    bound = "T: Scalar + Serialize + serde::de::DeserializeOwned"
)]
pub struct Position3D<T: Scalar> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Position3D<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<T: Scalar> From<[T; 3]> for Position3D<T> {
    fn from(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl<T: Scalar> From<Position3D<T>> for [T; 3] {
    fn from(p: Position3D<T>) -> Self {
        [p.x, p.y, p.z]
    }
}

/// Euclidean distance between two points, meters.
pub fn distance<T: Scalar>(a: Position3D<T>, b: Position3D<T>) -> T {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Axis-aligned box; degenerate axes (min == max) are allowed and collapse
/// sampling on that axis to a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct Box3<T: Scalar> {
    pub min: Position3D<T>,
    pub max: Position3D<T>,
}

impl<T: Scalar> Box3<T> {
    pub fn new(min: Position3D<T>, max: Position3D<T>) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: Position3D<T>) -> bool {
        self.min.x <= p.x
            && p.x <= self.max.x
            && self.min.y <= p.y
            && p.y <= self.max.y
            && self.min.z <= p.z
            && p.z <= self.max.z
    }

    /// Clamp a point into the box.
    pub fn clamp(&self, p: Position3D<T>) -> Position3D<T> {
        Position3D::new(
            p.x.max(self.min.x).min(self.max.x),
            p.y.max(self.min.y).min(self.max.y),
            p.z.max(self.min.z).min(self.max.z),
        )
    }
}

/// Phase-shifter resolution of the reflecting elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitResolution {
    /// `2^b` uniformly spaced phase levels.
    Bits(u32),
    /// Continuous phases (no quantization).
    Infinite,
}

/// Purpose tag mixed into the ChaCha stream id so that independent parts of a
/// campaign never share a random stream.
#[derive(Debug, Clone, Copy)]
pub enum StreamPurpose {
    Trial = 1,
    Anneal = 2,
    Batch = 3,
    Placement = 4,
}

/// Independent deterministic RNG stream for `(seed, purpose, index)`.
pub fn stream_rng(seed: u64, purpose: StreamPurpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 32) | (index & 0xffff_ffff));
    rng
}

/// All physical and algorithmic parameters of one scenario.
///
/// dB/dBm fields are stored as entered; the `*_watts`/`*_linear` accessors
/// are the single conversion boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Ground-user transmit power, dBm.
    pub ue_power_dbm: f64,
    /// UAV transmit power, dBm.
    pub uav_power_dbm: f64,
    /// Noise power, dBm.
    pub noise_dbm: f64,
    /// Number of reflecting elements N.
    pub n_elements: usize,
    /// Number of UAVs K.
    pub n_uavs: usize,
    /// Minimum SNR for a direct UE-UAV link, dB.
    pub thr_ue_db: f64,
    /// Minimum SNR for a UAV-UAV link, dB.
    pub thr_uav_db: f64,
    /// Minimum SNR for a reflected UE-UAV link, dB.
    pub thr_ris_db: f64,
    /// Fraction of the reflected-link threshold granted to the capped UAV.
    pub zeta: f64,
    /// Phase-shifter resolution.
    pub bit_resolution: BitResolution,
    /// Bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Carrier frequency, Hz.
    pub carrier_hz: f64,
    /// Propagation speed, m/s.
    pub light_speed_mps: f64,
    /// Linear path gain of the reflected hops at the 1 m reference distance.
    pub beta0: f64,
    /// Fading of the direct UE-UAV links.
    pub fading_direct: FadingParams,
    /// Fading of the UE-to-surface hop.
    pub fading_ue_ris: FadingParams,
    /// Fading of the surface-to-UAV hop.
    pub fading_ris_uav: FadingParams,
    pub ue_position: Position3D<f64>,
    pub uav_positions: Vec<Position3D<f64>>,
    pub ris_position: Position3D<f64>,
    /// UAV indices with no direct link, ordered most-reliable first.
    pub blocked_uavs: Vec<usize>,
    pub rng_seed: u64,
    pub mc_trials: usize,
}

/// Reference path gain of the reflected hops at 1 m, chosen so the default
/// scenario's closed-form split lands on its reference operating point.
pub const DEFAULT_BETA0: f64 = 0.6064;

/// Survey coordinates of the two blocked UAVs and the fixed nodes, meters.
pub const UE_POSITION: Position3D<f64> = Position3D {
    x: 318.0,
    y: 220.0,
    z: 0.0,
};
pub const UAV_X_POSITION: Position3D<f64> = Position3D {
    x: 460.0,
    y: 340.0,
    z: 200.0,
};
pub const UAV_Y_POSITION: Position3D<f64> = Position3D {
    x: 370.0,
    y: 14.0,
    z: 200.0,
};
pub const RIS_POSITION: Position3D<f64> = Position3D {
    x: 0.0,
    y: 0.0,
    z: 120.0,
};

/// Default footprint for randomly placed UAVs in K-sweeps.
pub const DEFAULT_UAV_REGION: Box3<f64> = Box3 {
    min: Position3D {
        x: 0.0,
        y: 0.0,
        z: 150.0,
    },
    max: Position3D {
        x: 500.0,
        y: 500.0,
        z: 250.0,
    },
};

// Chosen so the default fleet realizes the intended reliability ordering:
// dropping UAV 1 hurts connectivity more than dropping UAV 0.
const DEFAULT_SEED: u64 = 14;

/// Baseline scenario: two blocked UAVs at the survey coordinates, six more
/// placed in [`DEFAULT_UAV_REGION`] from the default seed.
pub fn default_scenario() -> ScenarioConfig {
    let seed = DEFAULT_SEED;
    ScenarioConfig {
        ue_power_dbm: 23.0,
        uav_power_dbm: 30.0,
        noise_dbm: -120.0,
        n_elements: 100,
        n_uavs: 8,
        thr_ue_db: 10.0,
        thr_uav_db: 55.0,
        thr_ris_db: 60.0,
        zeta: 0.2,
        bit_resolution: BitResolution::Bits(4),
        bandwidth_hz: 250e3,
        carrier_hz: 3e9,
        light_speed_mps: 3e8,
        beta0: DEFAULT_BETA0,
        fading_direct: FadingParams { m: 1.0, omega: 1.0 },
        fading_ue_ris: FadingParams { m: 5.0, omega: 1.0 },
        fading_ris_uav: FadingParams { m: 1.0, omega: 1.0 },
        ue_position: UE_POSITION,
        uav_positions: synth_uav_positions(8, seed),
        ris_position: RIS_POSITION,
        blocked_uavs: vec![0, 1],
        rng_seed: seed,
        mc_trials: 10_000,
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        default_scenario()
    }
}

/// UAV layout for a given fleet size: the two fixed blocked UAVs first, the
/// rest uniform in the default region. Layouts nest: the first `k` positions
/// are identical for every larger fleet drawn from the same seed.
pub fn synth_uav_positions(k: usize, seed: u64) -> Vec<Position3D<f64>> {
    let mut out = vec![UAV_X_POSITION, UAV_Y_POSITION];
    out.truncate(k);
    if k > 2 {
        let mut rng = stream_rng(seed, StreamPurpose::Placement, 0);
        out.extend(place_uavs_random(k - 2, DEFAULT_UAV_REGION, &mut rng));
    }
    out
}

/// Uniform positions inside `region`; deterministic for a fixed generator
/// state. A degenerate region collapses to its single point.
pub fn place_uavs_random(
    count: usize,
    region: Box3<f64>,
    rng: &mut impl Rng,
) -> Vec<Position3D<f64>> {
    (0..count)
        .map(|_| {
            Position3D::new(
                rng.random_range(region.min.x..=region.max.x),
                rng.random_range(region.min.y..=region.max.y),
                rng.random_range(region.min.z..=region.max.z),
            )
        })
        .collect()
}

impl ScenarioConfig {
    /// UE transmit power, watts.
    pub fn ue_power_watts(&self) -> f64 {
        crate::units::dbm_to_watts(self.ue_power_dbm)
    }

    /// Noise power, watts.
    pub fn noise_watts(&self) -> f64 {
        crate::units::dbm_to_watts(self.noise_dbm)
    }

    /// Reflected-link SNR threshold, linear.
    pub fn thr_ris_linear(&self) -> f64 {
        crate::units::db_to_linear(self.thr_ris_db)
    }

    /// Number of blocked UAVs J.
    pub fn n_blocked(&self) -> usize {
        self.blocked_uavs.len()
    }

    /// True when UAV `k` is declared blocked.
    pub fn is_blocked(&self, k: usize) -> bool {
        self.blocked_uavs.contains(&k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements < 1 {
            return Err(Error::validation("n_elements", "must be >= 1"));
        }
        if self.n_uavs < 2 {
            return Err(Error::validation("n_uavs", "must be >= 2"));
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(Error::validation("zeta", "out of (0,1]"));
        }
        if let BitResolution::Bits(b) = self.bit_resolution {
            if b < 1 {
                return Err(Error::validation("bit_resolution", "must be >= 1"));
            }
        }
        for (name, v) in [
            ("bandwidth_hz", self.bandwidth_hz),
            ("carrier_hz", self.carrier_hz),
            ("light_speed_mps", self.light_speed_mps),
            ("beta0", self.beta0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(name, "must be positive and finite"));
            }
        }
        for (name, v) in [
            ("ue_power_dbm", self.ue_power_dbm),
            ("uav_power_dbm", self.uav_power_dbm),
            ("noise_dbm", self.noise_dbm),
            ("thr_ue_db", self.thr_ue_db),
            ("thr_uav_db", self.thr_uav_db),
            ("thr_ris_db", self.thr_ris_db),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(name, "must be finite"));
            }
        }
        for (name, p) in [
            ("fading_direct", &self.fading_direct),
            ("fading_ue_ris", &self.fading_ue_ris),
            ("fading_ris_uav", &self.fading_ris_uav),
        ] {
            p.validate().map_err(|e| match e {
                Error::Validation { reason, .. } => Error::validation(name, reason),
                other => other,
            })?;
        }
        if self.uav_positions.len() != self.n_uavs {
            return Err(Error::validation(
                "uav_positions",
                format!(
                    "n_uavs={} but {} positions given",
                    self.n_uavs,
                    self.uav_positions.len()
                ),
            ));
        }
        for (name, p) in [
            ("ue_position", self.ue_position),
            ("ris_position", self.ris_position),
        ] {
            if !p.is_finite() || p.z < 0.0 {
                return Err(Error::validation(name, "coordinates must be finite, z >= 0"));
            }
        }
        for p in &self.uav_positions {
            if !p.is_finite() || p.z < 0.0 {
                return Err(Error::validation(
                    "uav_positions",
                    "coordinates must be finite, z >= 0",
                ));
            }
        }
        if self.blocked_uavs.len() < 2 {
            return Err(Error::validation(
                "blocked_uavs",
                "needs at least 2 entries for the partitioning path",
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &b in &self.blocked_uavs {
            if b >= self.n_uavs {
                return Err(Error::validation(
                    "blocked_uavs",
                    format!("index {b} out of range (K={})", self.n_uavs),
                ));
            }
            if !seen.insert(b) {
                return Err(Error::validation(
                    "blocked_uavs",
                    format!("index {b} listed twice"),
                ));
            }
        }
        if self.mc_trials < 1 {
            return Err(Error::validation("mc_trials", "must be >= 1"));
        }
        Ok(())
    }

    /// Serialize to the flat key/value configuration format accepted by
    /// [`load_scenario`]. Key order is fixed.
    pub fn to_config_string(&self) -> String {
        fn pos(p: Position3D<f64>) -> String {
            format!("[{:?}, {:?}, {:?}]", p.x, p.y, p.z)
        }
        let mut s = String::new();
        s.push_str(&format!("ue_power_dbm = {:?}\n", self.ue_power_dbm));
        s.push_str(&format!("uav_power_dbm = {:?}\n", self.uav_power_dbm));
        s.push_str(&format!("noise_dbm = {:?}\n", self.noise_dbm));
        s.push_str(&format!("n_elements = {}\n", self.n_elements));
        s.push_str(&format!("n_uavs = {}\n", self.n_uavs));
        s.push_str(&format!("thr_ue_db = {:?}\n", self.thr_ue_db));
        s.push_str(&format!("thr_uav_db = {:?}\n", self.thr_uav_db));
        s.push_str(&format!("thr_ris_db = {:?}\n", self.thr_ris_db));
        s.push_str(&format!("zeta = {:?}\n", self.zeta));
        match self.bit_resolution {
            BitResolution::Bits(b) => s.push_str(&format!("bit_resolution = {b}\n")),
            BitResolution::Infinite => s.push_str("bit_resolution = \"infinite\"\n"),
        }
        s.push_str(&format!("bandwidth_hz = {:?}\n", self.bandwidth_hz));
        s.push_str(&format!("carrier_hz = {:?}\n", self.carrier_hz));
        s.push_str(&format!("light_speed_mps = {:?}\n", self.light_speed_mps));
        s.push_str(&format!("beta0 = {:?}\n", self.beta0));
        s.push_str(&format!("fading_direct_m = {:?}\n", self.fading_direct.m));
        s.push_str(&format!(
            "fading_direct_omega = {:?}\n",
            self.fading_direct.omega
        ));
        s.push_str(&format!("fading_ue_ris_m = {:?}\n", self.fading_ue_ris.m));
        s.push_str(&format!(
            "fading_ue_ris_omega = {:?}\n",
            self.fading_ue_ris.omega
        ));
        s.push_str(&format!("fading_ris_uav_m = {:?}\n", self.fading_ris_uav.m));
        s.push_str(&format!(
            "fading_ris_uav_omega = {:?}\n",
            self.fading_ris_uav.omega
        ));
        s.push_str(&format!("ue_position = {}\n", pos(self.ue_position)));
        s.push_str("uav_positions = [\n");
        for p in &self.uav_positions {
            s.push_str(&format!("    {},\n", pos(*p)));
        }
        s.push_str("]\n");
        s.push_str(&format!("ris_position = {}\n", pos(self.ris_position)));
        s.push_str(&format!(
            "blocked_uavs = [{}]\n",
            self.blocked_uavs
                .iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ));
        s.push_str(&format!("rng_seed = {}\n", self.rng_seed));
        s.push_str(&format!("mc_trials = {}\n", self.mc_trials));
        s
    }
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::config(key, "expected a number")),
    }
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::config(key, "expected a non-negative integer")),
    }
}

fn as_u64(key: &str, v: &toml::Value) -> Result<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(Error::config(key, "expected a non-negative integer")),
    }
}

fn as_position(key: &str, v: &toml::Value) -> Result<Position3D<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::config(key, "expected [x, y, z]"))?;
    if arr.len() != 3 {
        return Err(Error::config(key, "expected exactly 3 coordinates"));
    }
    Ok(Position3D::new(
        as_f64(key, &arr[0])?,
        as_f64(key, &arr[1])?,
        as_f64(key, &arr[2])?,
    ))
}

/// Parse a flat key/value configuration document. Unspecified fields fall
/// back to [`default_scenario`]; unknown keys are rejected. When the document
/// changes the fleet size without listing positions, the layout is re-derived
/// from the (possibly overridden) seed.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<document>", e.to_string()))?;

    let mut cfg = default_scenario();
    let mut saw_positions = false;
    let mut saw_n_uavs = false;

    for (key, value) in &table {
        match key.as_str() {
            "ue_power_dbm" => cfg.ue_power_dbm = as_f64(key, value)?,
            "uav_power_dbm" => cfg.uav_power_dbm = as_f64(key, value)?,
            "noise_dbm" => cfg.noise_dbm = as_f64(key, value)?,
            "n_elements" => cfg.n_elements = as_usize(key, value)?,
            "n_uavs" => {
                cfg.n_uavs = as_usize(key, value)?;
                saw_n_uavs = true;
            }
            "thr_ue_db" => cfg.thr_ue_db = as_f64(key, value)?,
            "thr_uav_db" => cfg.thr_uav_db = as_f64(key, value)?,
            "thr_ris_db" => cfg.thr_ris_db = as_f64(key, value)?,
            "zeta" => cfg.zeta = as_f64(key, value)?,
            "bit_resolution" => {
                cfg.bit_resolution = match value {
                    toml::Value::Integer(b) if *b >= 1 => BitResolution::Bits(*b as u32),
                    toml::Value::String(s) if s == "infinite" => BitResolution::Infinite,
                    _ => {
                        return Err(Error::config(
                            key,
                            "expected a positive integer or \"infinite\"",
                        ))
                    }
                }
            }
            "bandwidth_hz" => cfg.bandwidth_hz = as_f64(key, value)?,
            "carrier_hz" => cfg.carrier_hz = as_f64(key, value)?,
            "light_speed_mps" => cfg.light_speed_mps = as_f64(key, value)?,
            "beta0" => cfg.beta0 = as_f64(key, value)?,
            "fading_direct_m" => cfg.fading_direct.m = as_f64(key, value)?,
            "fading_direct_omega" => cfg.fading_direct.omega = as_f64(key, value)?,
            "fading_ue_ris_m" => cfg.fading_ue_ris.m = as_f64(key, value)?,
            "fading_ue_ris_omega" => cfg.fading_ue_ris.omega = as_f64(key, value)?,
            "fading_ris_uav_m" => cfg.fading_ris_uav.m = as_f64(key, value)?,
            "fading_ris_uav_omega" => cfg.fading_ris_uav.omega = as_f64(key, value)?,
            "ue_position" => cfg.ue_position = as_position(key, value)?,
            "ris_position" => cfg.ris_position = as_position(key, value)?,
            "uav_positions" => {
                let arr = value
                    .as_array()
                    .ok_or_else(|| Error::config(key, "expected an array of [x, y, z]"))?;
                cfg.uav_positions = arr
                    .iter()
                    .map(|p| as_position(key, p))
                    .collect::<Result<Vec<_>>>()?;
                saw_positions = true;
            }
            "blocked_uavs" => {
                let arr = value
                    .as_array()
                    .ok_or_else(|| Error::config(key, "expected an array of UAV indices"))?;
                cfg.blocked_uavs = arr
                    .iter()
                    .map(|i| as_usize(key, i))
                    .collect::<Result<Vec<_>>>()?;
            }
            "rng_seed" => cfg.rng_seed = as_u64(key, value)?,
            "mc_trials" => cfg.mc_trials = as_usize(key, value)?,
            other => return Err(Error::config(other, "unknown key")),
        }
    }

    if !saw_positions && (saw_n_uavs || table.contains_key("rng_seed")) {
        cfg.uav_positions = synth_uav_positions(cfg.n_uavs, cfg.rng_seed);
    }
    if saw_positions && !saw_n_uavs {
        cfg.n_uavs = cfg.uav_positions.len();
    }

    cfg.validate()?;
    Ok(cfg)
}
