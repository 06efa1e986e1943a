use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ChannelParams;
use crate::energy::EnergyParams;

/// Shape of the region nodes are scattered in, centred on the nanocontroller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeShape {
    /// Ball of radius `deployment_radius`.
    #[default]
    Sphere,
    /// Axis-aligned cube inscribed in that ball (half-side `R / sqrt(3)`).
    Cube,
}

/// Data class name to priority `P` (a positive integer).
pub type PriorityTable = BTreeMap<String, u32>;

/// Complete description of one simulation run. SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub node_count: u32,
    /// Transmission range `r` of a nanosensor, m.
    pub tx_range: f64,
    pub deployment_radius: f64,
    pub volume: VolumeShape,
    /// Derived: `ceil(2 R / r)`. Filled by [`validate_config`].
    pub layer_count: u32,
    /// Short range used for head advertisement; `r / 2` when unset.
    pub low_power_range: Option<f64>,
    /// Election rounds before unassigned nodes are reported as orphans; 0 = until done.
    pub max_election_rounds: u32,
    pub pulse_energy: f64,
    /// Time per transmitted bit (one pulse per bit), s.
    pub pulse_interval: f64,
    pub packet_bits: u32,
    pub message_interval: f64,
    pub initial_ttl: u32,
    /// Probability that a cluster member has a packet in a given cycle.
    pub adtn_probability: f64,
    /// Cooperative links feeding each fusion node.
    pub coop_links: u32,
    pub fade_margin_db: f64,
    /// Per-hop circuit energy independent of distance, J/bit.
    pub electronics_energy_per_bit: f64,
    /// Fixed transmit power for capacity figures, W.
    pub tx_power: f64,
    /// Residual energy at start is uniform in `[f * E_max, E_max]`.
    pub initial_energy_min_fraction: f64,
    pub slot_quantum_ps: u64,
    pub channel: ChannelParams,
    pub energy: EnergyParams,
    pub seed: u64,
    pub trials: u64,
    /// Rate constant of the energy-saving probability, 1/J.
    pub theta: f64,
    pub priority_table: PriorityTable,
    /// Link distance used by sweeps over non-distance axes, m.
    pub sweep_distance: f64,
    /// Outage probability used for the outage-capacity column.
    pub target_outage: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let mut priority_table = PriorityTable::new();
        priority_table.insert("default".to_string(), 1);
        Self {
            node_count: 100,
            tx_range: 10e-3,
            deployment_radius: 10e-3,
            volume: VolumeShape::Sphere,
            layer_count: 0,
            low_power_range: None,
            max_election_rounds: 0,
            pulse_energy: 100e-12,
            pulse_interval: 10e-12,
            packet_bits: 256,
            message_interval: 0.1,
            initial_ttl: 1000,
            adtn_probability: 0.2,
            coop_links: 2,
            fade_margin_db: 6.0,
            electronics_energy_per_bit: 1.0e-16,
            tx_power: 1.0e-2,
            initial_energy_min_fraction: 0.5,
            slot_quantum_ps: 1,
            channel: ChannelParams::default(),
            energy: EnergyParams::default(),
            seed: 1,
            trials: 1_000_000,
            theta: 1.0e14,
            priority_table,
            sweep_distance: 5e-3,
            target_outage: 0.1,
        }
    }
}

impl SimConfig {
    pub fn low_power_range(&self) -> f64 {
        self.low_power_range.unwrap_or(self.tx_range / 2.0)
    }

    /// Time per bit rounded to whole picoseconds (at least one).
    pub fn bit_time_ps(&self) -> u64 {
        ((self.pulse_interval / 1e-12).round() as u64).max(1)
    }

    /// Average transmit power of a node sending one packet per message interval, W.
    pub fn average_consume_power(&self) -> f64 {
        self.pulse_energy * self.packet_bits as f64 / self.message_interval
    }

    pub fn fade_margin(&self) -> f64 {
        crate::channel::from_db(self.fade_margin_db)
    }

    fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut check = |ok: bool, field: &'static str, reason: &str| {
            if !ok {
                v.push(Violation::new(field, reason));
            }
        };
        check(self.tx_range > 0.0 && self.tx_range.is_finite(), "tx_range", "must be > 0");
        check(
            self.deployment_radius > 0.0 && self.deployment_radius.is_finite(),
            "deployment_radius",
            "must be > 0",
        );
        check(
            self.low_power_range.map_or(true, |r| r > 0.0 && r.is_finite()),
            "low_power_range",
            "must be > 0",
        );
        check(self.pulse_energy > 0.0, "pulse_energy", "must be > 0");
        check(self.pulse_interval > 0.0, "pulse_interval", "must be > 0");
        check(self.packet_bits > 0, "packet_bits", "must be > 0");
        check(self.message_interval > 0.0, "message_interval", "must be > 0");
        check(
            (0.0..=1.0).contains(&self.adtn_probability),
            "adtn_probability",
            "must lie in [0, 1]",
        );
        check(self.coop_links >= 1, "coop_links", "must be >= 1");
        check(self.fade_margin_db.is_finite(), "fade_margin_db", "must be finite");
        check(
            self.electronics_energy_per_bit >= 0.0 && self.electronics_energy_per_bit.is_finite(),
            "electronics_energy_per_bit",
            "must be >= 0",
        );
        check(self.tx_power > 0.0 && self.tx_power.is_finite(), "tx_power", "must be > 0");
        check(
            (0.0..=1.0).contains(&self.initial_energy_min_fraction),
            "initial_energy_min_fraction",
            "must lie in [0, 1]",
        );
        check(self.slot_quantum_ps >= 1, "slot_quantum_ps", "must be >= 1");
        check(self.trials >= 1, "trials", "must be >= 1");
        check(self.theta > 0.0 && self.theta.is_finite(), "theta", "must be > 0");
        check(!self.priority_table.is_empty(), "priority", "table must not be empty");
        check(
            self.priority_table.values().all(|&p| p >= 1),
            "priority",
            "priorities must be >= 1",
        );
        check(self.sweep_distance > 0.0, "sweep_distance", "must be > 0");
        check((0.0..=1.0).contains(&self.target_outage), "target_outage", "must lie in [0, 1]");
        self.channel.violations(&mut v);
        self.energy.violations(&mut v);
        v
    }

    /// Parses the key/value config format. Keys not listed in
    /// [`CONFIG_KEYS`] are rejected and `theta` is mandatory.
    pub fn from_config_str(text: &str) -> Result<SimConfig, ConfigError> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        file.into_config()
    }

    pub fn from_config_file(path: &Path) -> Result<SimConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_config_str(&text)
    }

    pub fn to_config_string(&self) -> String {
        toml::to_string(&ConfigFile::from(self)).expect("flat config always serializes")
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub reason: String,
}

impl Violation {
    pub(crate) fn new(field: &'static str, reason: &str) -> Self {
        Self { field, reason: reason.to_string() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {}", .violations[0])]
    Invalid { violations: Vec<Violation> },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("missing required config key `{0}`")]
    MissingKey(&'static str),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    /// Name of the first violated field, if this is a validation failure.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            ConfigError::Invalid { violations } => violations.first().map(|v| v.field),
            ConfigError::MissingKey(k) => Some(k),
            _ => None,
        }
    }
}

/// A configuration that passed [`validate_config`]. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig(SimConfig);

impl ValidatedConfig {
    pub fn into_inner(self) -> SimConfig {
        self.0
    }

    /// Clone with a different seed; seeds carry no invariants.
    pub fn with_seed(&self, seed: u64) -> ValidatedConfig {
        let mut cfg = self.0.clone();
        cfg.seed = seed;
        ValidatedConfig(cfg)
    }
}

impl Deref for ValidatedConfig {
    type Target = SimConfig;
    fn deref(&self) -> &SimConfig {
        &self.0
    }
}

/// Checks every invariant and fills derived fields.
pub fn validate_config(mut cfg: SimConfig) -> Result<ValidatedConfig, ConfigError> {
    let violations = cfg.violations();
    if !violations.is_empty() {
        return Err(ConfigError::Invalid { violations });
    }
    cfg.layer_count = (2.0 * cfg.deployment_radius / cfg.tx_range).ceil() as u32;
    Ok(ValidatedConfig(cfg))
}

/// `(key, unit, meaning)` for every config-file key.
pub const CONFIG_KEYS: &[(&str, &str, &str)] = &[
    ("node_count", "count", "number of nanosensors (nanocontroller excluded)"),
    ("tx_range", "m", "transmission range r of a nanosensor"),
    ("deployment_radius", "m", "radius of the deployment around the nanocontroller"),
    ("volume", "sphere|cube", "deployment volume shape"),
    ("low_power_range", "m", "head advertisement range (default r/2)"),
    ("max_election_rounds", "count", "election rounds before orphans are reported (0 = unlimited)"),
    ("pulse_energy", "J", "energy of one pulse"),
    ("pulse_interval", "s", "time per transmitted bit"),
    ("packet_bits", "bit", "packet size"),
    ("message_interval", "s", "time between transmission cycles"),
    ("initial_ttl", "hops", "initial packet TTL"),
    ("adtn_probability", "probability", "chance a member has data in a cycle"),
    ("coop_links", "count", "cooperative links into each fusion node"),
    ("fade_margin_db", "dB", "transmit margin above the SINR threshold"),
    ("electronics_energy_per_bit", "J/bit", "per-hop circuit energy"),
    ("tx_power", "W", "fixed transmit power for capacity figures"),
    ("initial_energy_min_fraction", "fraction", "lower bound of initial charge as a fraction of E_max"),
    ("slot_quantum_ps", "ps", "TDMA slot quantum"),
    ("seed", "integer", "master RNG seed (0..=2^63-1 in files)"),
    ("trials", "count", "Monte Carlo trials"),
    ("theta", "1/J", "energy-saving rate constant (required)"),
    ("priority.<class>", "integer >= 1", "priority P of a data class"),
    ("sweep_distance", "m", "link distance for sweeps over non-distance axes"),
    ("target_outage", "probability", "outage probability for outage capacity"),
    ("frequency", "Hz", "carrier frequency f"),
    ("absorption", "1/m", "molecular absorption coefficient K(f)"),
    ("absorption_table", "[[Hz, 1/m], ...]", "optional K(f) table, overrides absorption"),
    ("path_loss_exponent", "dimensionless", "path-loss exponent"),
    ("shadowing_sigma_db", "dB", "shadowing standard deviation"),
    ("gain", "dimensionless", "gain constant G"),
    ("noise_power", "W", "receiver noise power"),
    ("sinr_threshold_db", "dB", "SINR threshold"),
    ("speed_of_light", "m/s", "propagation speed"),
    ("bandwidth", "Hz", "channel bandwidth"),
    ("pulse_duration", "s", "radiating time per bit"),
    ("capacitance", "F", "nano power source capacitance C_nps"),
    ("generator_voltage", "V", "nanogenerator voltage V_g"),
    ("charge_per_cycle", "C", "harvested charge per vibration"),
    ("vibration_period", "s", "time between vibrations"),
    ("e_min", "J", "minimum operating energy"),
    ("e_tx", "J", "energy to transmit one packet"),
];

/// On-disk form of [`SimConfig`]: one flat table, unknown keys rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub node_count: u32,
    pub tx_range: f64,
    pub deployment_radius: f64,
    pub volume: VolumeShape,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub low_power_range: Option<f64>,
    pub max_election_rounds: u32,
    pub pulse_energy: f64,
    pub pulse_interval: f64,
    pub packet_bits: u32,
    pub message_interval: f64,
    pub initial_ttl: u32,
    pub adtn_probability: f64,
    pub coop_links: u32,
    pub fade_margin_db: f64,
    pub electronics_energy_per_bit: f64,
    pub tx_power: f64,
    pub initial_energy_min_fraction: f64,
    pub slot_quantum_ps: u64,
    pub seed: u64,
    pub trials: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub sweep_distance: f64,
    pub target_outage: f64,
    pub frequency: f64,
    pub absorption: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorption_table: Option<Vec<[f64; 2]>>,
    pub path_loss_exponent: f64,
    pub shadowing_sigma_db: f64,
    pub gain: f64,
    pub noise_power: f64,
    pub sinr_threshold_db: f64,
    pub speed_of_light: f64,
    pub bandwidth: f64,
    pub pulse_duration: f64,
    pub capacitance: f64,
    pub generator_voltage: f64,
    pub charge_per_cycle: f64,
    pub vibration_period: f64,
    pub e_min: f64,
    pub e_tx: f64,
    pub priority: PriorityTable,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let mut file = ConfigFile::from(&SimConfig::default());
        file.theta = None;
        file
    }
}

impl From<&SimConfig> for ConfigFile {
    fn from(c: &SimConfig) -> Self {
        Self {
            node_count: c.node_count,
            tx_range: c.tx_range,
            deployment_radius: c.deployment_radius,
            volume: c.volume,
            low_power_range: c.low_power_range,
            max_election_rounds: c.max_election_rounds,
            pulse_energy: c.pulse_energy,
            pulse_interval: c.pulse_interval,
            packet_bits: c.packet_bits,
            message_interval: c.message_interval,
            initial_ttl: c.initial_ttl,
            adtn_probability: c.adtn_probability,
            coop_links: c.coop_links,
            fade_margin_db: c.fade_margin_db,
            electronics_energy_per_bit: c.electronics_energy_per_bit,
            tx_power: c.tx_power,
            initial_energy_min_fraction: c.initial_energy_min_fraction,
            slot_quantum_ps: c.slot_quantum_ps,
            seed: c.seed,
            trials: c.trials,
            theta: Some(c.theta),
            sweep_distance: c.sweep_distance,
            target_outage: c.target_outage,
            frequency: c.channel.frequency,
            absorption: c.channel.absorption,
            absorption_table: None,
            path_loss_exponent: c.channel.path_loss_exponent,
            shadowing_sigma_db: c.channel.shadowing_sigma_db,
            gain: c.channel.gain,
            noise_power: c.channel.noise_power,
            sinr_threshold_db: c.channel.sinr_threshold_db,
            speed_of_light: c.channel.speed_of_light,
            bandwidth: c.channel.bandwidth,
            pulse_duration: c.channel.pulse_duration,
            capacitance: c.energy.c_nps,
            generator_voltage: c.energy.v_g,
            charge_per_cycle: c.energy.delta_q,
            vibration_period: c.energy.tau,
            e_min: c.energy.e_min,
            e_tx: c.energy.e_tx,
            priority: c.priority_table.clone(),
        }
    }
}

impl ConfigFile {
    pub fn into_config(self) -> Result<SimConfig, ConfigError> {
        let theta = self.theta.ok_or(ConfigError::MissingKey("theta"))?;
        let absorption = match &self.absorption_table {
            Some(rows) => crate::channel::AbsorptionTable::new(rows.clone())
                .map_err(|e| ConfigError::Parse(format!("absorption_table: {e}")))?
                .lookup(self.frequency),
            None => self.absorption,
        };
        Ok(SimConfig {
            node_count: self.node_count,
            tx_range: self.tx_range,
            deployment_radius: self.deployment_radius,
            volume: self.volume,
            layer_count: 0,
            low_power_range: self.low_power_range,
            max_election_rounds: self.max_election_rounds,
            pulse_energy: self.pulse_energy,
            pulse_interval: self.pulse_interval,
            packet_bits: self.packet_bits,
            message_interval: self.message_interval,
            initial_ttl: self.initial_ttl,
            adtn_probability: self.adtn_probability,
            coop_links: self.coop_links,
            fade_margin_db: self.fade_margin_db,
            electronics_energy_per_bit: self.electronics_energy_per_bit,
            tx_power: self.tx_power,
            initial_energy_min_fraction: self.initial_energy_min_fraction,
            slot_quantum_ps: self.slot_quantum_ps,
            channel: ChannelParams {
                frequency: self.frequency,
                absorption,
                path_loss_exponent: self.path_loss_exponent,
                shadowing_sigma_db: self.shadowing_sigma_db,
                gain: self.gain,
                noise_power: self.noise_power,
                sinr_threshold_db: self.sinr_threshold_db,
                speed_of_light: self.speed_of_light,
                bandwidth: self.bandwidth,
                pulse_duration: self.pulse_duration,
            },
            energy: EnergyParams {
                c_nps: self.capacitance,
                v_g: self.generator_voltage,
                delta_q: self.charge_per_cycle,
                tau: self.vibration_period,
                e_min: self.e_min,
                e_tx: self.e_tx,
            },
            seed: self.seed,
            trials: self.trials,
            theta,
            priority_table: self.priority,
            sweep_distance: self.sweep_distance,
            target_outage: self.target_outage,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn minimal() -> &'static str {
        "theta = 1e14\n"
    }

    #[test]
    fn layer_count_is_ceil_of_diameter_over_range() {
        let cfg = SimConfig { deployment_radius: 10e-3, tx_range: 10e-3, ..Default::default() };
        assert_eq!(validate_config(cfg).unwrap().layer_count, 2);
        let cfg = SimConfig { deployment_radius: 10e-3, tx_range: 6e-3, ..Default::default() };
        assert_eq!(validate_config(cfg).unwrap().layer_count, 4);
    }

    #[test]
    fn zero_range_names_tx_range() {
        let cfg = SimConfig { tx_range: 0.0, ..Default::default() };
        let err = validate_config(cfg).unwrap_err();
        assert_eq!(err.field(), Some("tx_range"));
        assert!(err.to_string().contains("tx_range"));
    }

    #[test]
    fn table_ii_values_are_valid() {
        let cfg = SimConfig::from_config_str(
            "theta = 1e14\npulse_energy = 100e-12\npacket_bits = 256\nsinr_threshold_db = 12.0\n",
        )
        .unwrap();
        let v = validate_config(cfg).unwrap();
        assert_eq!(v.packet_bits, 256);
        assert_eq!(v.channel.sinr_threshold_db, 12.0);
        assert_eq!(v.pulse_energy, 100e-12);
    }

    #[test]
    fn violations_are_all_collected() {
        let cfg = SimConfig { tx_range: -1.0, trials: 0, theta: 0.0, ..Default::default() };
        match validate_config(cfg).unwrap_err() {
            ConfigError::Invalid { violations } => {
                let fields: Vec<_> = violations.iter().map(|v| v.field).collect();
                assert_eq!(fields, ["tx_range", "trials", "theta"]);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = SimConfig::from_config_str("theta = 1.0\nfrobnicate = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{err}");
        assert!(err.to_string().contains("frobnicate"));
    }

    #[test]
    fn theta_is_required() {
        let err = SimConfig::from_config_str("node_count = 10\n").unwrap_err();
        assert!(matches!(err, ConfigError::MissingKey("theta")));
    }

    #[test]
    fn priority_classes_parse_from_dotted_keys() {
        let cfg = SimConfig::from_config_str("theta = 1.0\npriority.vital = 3\npriority.routine = 1\n")
            .unwrap();
        assert_eq!(cfg.priority_table.get("vital"), Some(&3));
        assert_eq!(cfg.priority_table.len(), 2);
    }

    #[test]
    fn absorption_table_sets_k_for_the_carrier() {
        let cfg = SimConfig::from_config_str(
            "theta = 1.0\nfrequency = 1.5e12\nabsorption_table = [[1e12, 10.0], [2e12, 30.0]]\n",
        )
        .unwrap();
        assert!((cfg.channel.absorption - 20.0).abs() < 1e-12);
    }

    #[test]
    fn every_file_key_is_documented() {
        let mut file = ConfigFile::from(&SimConfig::default());
        file.low_power_range = Some(1.0);
        file.absorption_table = Some(vec![[1.0, 1.0]]);
        let text = toml::to_string(&file).unwrap();
        let table: toml::Table = text.parse().unwrap();
        for key in table.keys() {
            let documented = CONFIG_KEYS
                .iter()
                .any(|(k, _, _)| *k == key || k.starts_with(&format!("{key}.")));
            assert!(documented, "key `{key}` missing from CONFIG_KEYS");
        }
        assert!(minimal().contains("theta"));
    }

    #[test]
    fn missing_file_reports_path() {
        let err = SimConfig::from_config_file(Path::new("/nonexistent/run.cfg")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/run.cfg"));
    }

    proptest! {
        #[test]
        fn config_text_roundtrips(
            nodes in 0u32..5000,
            r in 1e-4f64..1e-1,
            radius in 1e-4f64..1e-1,
            seed in 0u64..(i64::MAX as u64),
            sigma in 0.0f64..20.0,
            theta in 1e6f64..1e16,
            prio in 1u32..10,
        ) {
            let mut cfg = SimConfig {
                node_count: nodes, tx_range: r, deployment_radius: radius, seed, theta,
                ..Default::default()
            };
            cfg.channel.shadowing_sigma_db = sigma;
            cfg.priority_table.insert("vital".into(), prio);
            let text = cfg.to_config_string();
            let back = SimConfig::from_config_str(&text).unwrap();
            prop_assert_eq!(back, cfg);
        }

        #[test]
        fn validation_is_idempotent(r in 1e-4f64..1e-1, radius in 1e-4f64..1e-1) {
            let cfg = SimConfig { tx_range: r, deployment_radius: radius, ..Default::default() };
            let once = validate_config(cfg).unwrap();
            let twice = validate_config(once.clone().into_inner()).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
