//! Domain types shared by every stage of the simulator, plus the validated
//! run configuration.

mod config;

pub use config::{
    validate_config, ConfigError, ConfigFile, PriorityTable, SimConfig, ValidatedConfig,
    VolumeShape, Violation,
    CONFIG_KEYS,
};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Identifier of a nanosensor. The nanocontroller always has id [`NC_ID`].
pub type NodeId = u32;

/// Id reserved for the nanocontroller at the centre of the deployment.
pub const NC_ID: NodeId = 0;

/// Derives an independent sub-seed for one named random stream of a run.
///
/// SplitMix64 finalizer over `seed ^ stream * golden`, so nearby streams
/// do not produce correlated generators.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A point in the deployment volume, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const ORIGIN: Position = Position { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Position) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Role a node plays in the layered cluster hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    /// Nanocontroller (sink).
    Nc,
    /// Nano cluster controller (cluster head).
    Ncc,
    /// Nano cluster member.
    Ncm,
}

/// Operating mode of a nanosensor within a transmission cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Harvesting,
    Transmitting,
    Idle,
}

/// Stored energy with attojoule resolution.
///
/// The engine keeps per-node budgets in integer units so that
/// `end = start - spent` holds bit-for-bit over any number of transmissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Energy(u64);

impl Energy {
    pub const ZERO: Energy = Energy(0);
    /// Joules per unit.
    pub const RESOLUTION: f64 = 1e-18;

    pub const fn from_attojoules(aj: u64) -> Self {
        Energy(aj)
    }

    /// Rounds to the nearest attojoule; negative and NaN inputs map to zero.
    pub fn from_joules(j: f64) -> Self {
        if !(j > 0.0) {
            return Energy(0);
        }
        Energy((j / Self::RESOLUTION).round() as u64)
    }

    pub const fn attojoules(self) -> u64 {
        self.0
    }

    pub fn joules(self) -> f64 {
        self.0 as f64 * Self::RESOLUTION
    }

    pub fn checked_sub(self, rhs: Energy) -> Option<Energy> {
        self.0.checked_sub(rhs.0).map(Energy)
    }

    pub fn saturating_add(self, rhs: Energy) -> Energy {
        Energy(self.0.saturating_add(rhs.0))
    }

    pub fn min(self, rhs: Energy) -> Energy {
        Energy(self.0.min(rhs.0))
    }
}

impl std::ops::Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

impl std::ops::Sub for Energy {
    type Output = Energy;
    fn sub(self, rhs: Energy) -> Energy {
        Energy(self.0 - rhs.0)
    }
}

impl std::iter::Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        iter.fold(Energy::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} J", self.joules())
    }
}

/// State of one nanosensor (or the nanocontroller).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: NodeId,
    pub pos: Position,
    pub role: Role,
    /// Zero-based layer index, `floor(2 d / r)`.
    pub layer: u32,
    pub cluster: Option<u32>,
    pub residual_energy: Energy,
    /// Index `u` of the CTMC energy state `S_u`.
    pub energy_state: u32,
    pub mode: Mode,
}

impl NodeState {
    /// A fresh sensor before layer registration and clustering.
    pub fn sensor(id: NodeId, pos: Position, residual_energy: Energy) -> Self {
        Self {
            id,
            pos,
            role: Role::Ncm,
            layer: 0,
            cluster: None,
            residual_energy,
            energy_state: 0,
            mode: Mode::Harvesting,
        }
    }

    pub fn nanocontroller(pos: Position) -> Self {
        Self {
            id: NC_ID,
            pos,
            role: Role::Nc,
            layer: 0,
            cluster: None,
            residual_energy: Energy::ZERO,
            energy_state: 0,
            mode: Mode::Idle,
        }
    }

    /// One-based layer label used in reports and the ordering weight.
    pub fn presentation_layer(&self) -> u32 {
        self.layer + 1
    }
}

/// A sensed data packet in flight. Payload content is not modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Packet {
    pub id: u64,
    pub origin: NodeId,
    pub bits: u32,
    /// Remaining hops before the packet is dropped.
    pub ttl: u32,
}

/// Physical parameters of the terahertz link model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Carrier frequency, Hz.
    pub frequency: f64,
    /// Molecular absorption coefficient K(f), 1/m.
    pub absorption: f64,
    /// Path-loss exponent.
    pub path_loss_exponent: f64,
    /// Shadowing standard deviation, dB.
    pub shadowing_sigma_db: f64,
    /// Gain constant G.
    pub gain: f64,
    /// Noise power at the receiver, W.
    pub noise_power: f64,
    /// SINR threshold, dB.
    pub sinr_threshold_db: f64,
    /// Propagation speed, m/s.
    pub speed_of_light: f64,
    /// Channel bandwidth used for capacity figures, Hz.
    pub bandwidth: f64,
    /// Radiating time per bit (one pulse per bit), s.
    pub pulse_duration: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            frequency: 1.0e12,
            absorption: 0.0,
            path_loss_exponent: 3.0,
            shadowing_sigma_db: 4.0,
            gain: 1.0e-7,
            // kTB at body temperature over 1 THz
            noise_power: 1.380649e-23 * 310.0 * 1.0e12,
            sinr_threshold_db: 12.0,
            speed_of_light: 299_792_458.0,
            bandwidth: 1.0e12,
            pulse_duration: 100e-15,
        }
    }
}

impl ChannelParams {
    /// SINR threshold as a linear ratio.
    pub fn sinr_threshold(&self) -> f64 {
        crate::channel::from_db(self.sinr_threshold_db)
    }

    pub(crate) fn violations(&self, out: &mut Vec<Violation>) {
        let mut check = |ok: bool, field: &'static str, reason: &str| {
            if !ok {
                out.push(Violation::new(field, reason));
            }
        };
        check(self.frequency > 0.0 && self.frequency.is_finite(), "frequency", "must be > 0");
        check(self.absorption >= 0.0 && self.absorption.is_finite(), "absorption", "must be >= 0");
        check(
            self.path_loss_exponent >= 2.0 && self.path_loss_exponent.is_finite(),
            "path_loss_exponent",
            "must be >= 2",
        );
        check(
            self.shadowing_sigma_db >= 0.0 && self.shadowing_sigma_db.is_finite(),
            "shadowing_sigma_db",
            "must be >= 0",
        );
        check(self.gain > 0.0 && self.gain.is_finite(), "gain", "must be > 0");
        check(self.noise_power > 0.0 && self.noise_power.is_finite(), "noise_power", "must be > 0");
        check(self.sinr_threshold_db.is_finite(), "sinr_threshold_db", "must be finite");
        check(self.speed_of_light > 0.0, "speed_of_light", "must be > 0");
        check(self.bandwidth > 0.0 && self.bandwidth.is_finite(), "bandwidth", "must be > 0");
        check(self.pulse_duration > 0.0, "pulse_duration", "must be > 0");
    }
}
