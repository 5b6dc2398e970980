//! Simulation parameters and the flat `key = value` config format.
//!
//! ```text
//! # comments start with '#'
//! node_count = 100
//! queue_capacity = 16
//! ```
//!
//! Keys not listed in [`SimConfig::KEYS`] are rejected. Values from
//! [`parse_config`] are layered: defaults, then the file, then overrides.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

/// Fixed on-air packet size in bytes.
pub const PACKET_SIZE: usize = 30;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("failed to read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Where the sink sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SinkPlacement {
    /// The deployed node nearest the field center.
    Center,
    /// A specific node id.
    Node(u16),
}

/// Which observations feed a node's rate-control decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CongestionSignal {
    /// Service ratio and queue length advertised by the node's parents.
    Parents,
    /// The node's own measured ratio and queue occupancy.
    Own,
    /// Worst of both.
    Both,
}

/// How `max_rate_adjustment` bounds reductions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateCapMode {
    /// The scheduling rate never drops below `(1 - max) * initial`.
    Cumulative,
    /// A single control step never removes more than `max` of the rate.
    PerStep,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    // deployment
    pub field_side: f64,
    pub node_count: usize,
    pub tx_range: f64,
    pub sink: SinkPlacement,
    pub packet_size: usize,
    pub queue_capacity: usize,

    // energy
    pub alpha: f64,
    pub energy_k: f64,
    pub prioritizer_cost: f64,
    pub sched_unit_cost: f64,

    // scheduling and rate control
    pub initial_sched_rate: f64,
    pub ratio_threshold: f64,
    pub queue_threshold: usize,
    pub reduction_factor: f64,
    pub max_rate_adjustment: f64,
    pub rate_cap_mode: RateCapMode,
    pub recovery_enabled: bool,
    pub recovery_factor: f64,
    pub congestion_signal: CongestionSignal,
    pub service_window_ms: u64,
    pub measurement_interval_ms: u64,
    pub rate_control_enabled: bool,

    // link
    pub link_latency_ms: u64,
    pub processing_ms: u64,
    pub loss_base: f64,
    pub loss_collision: f64,

    // traffic
    pub origination_share: f64,
    pub weight_o0: f64,
    pub weight_o1: f64,
    pub deadline_class0_ms: u64,
    pub deadline_class1_ms: u64,
    pub deadline_class2_ms: u64,
    pub burst_multiplier: f64,
    pub burst_period_ms: u64,
    pub burst_duty: f64,
    pub requests_per_sensor: u64,
    pub replications: usize,
    pub duration_ms: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            field_side: 50.0,
            node_count: 100,
            tx_range: 12.0,
            sink: SinkPlacement::Center,
            packet_size: PACKET_SIZE,
            queue_capacity: 8,

            alpha: 2.0,
            energy_k: 1e-6,
            prioritizer_cost: 1e-4,
            sched_unit_cost: 2e-4,

            initial_sched_rate: 16.0,
            ratio_threshold: 0.5,
            queue_threshold: 6,
            reduction_factor: 0.85,
            max_rate_adjustment: 0.70,
            rate_cap_mode: RateCapMode::Cumulative,
            recovery_enabled: false,
            recovery_factor: 1.02,
            congestion_signal: CongestionSignal::Parents,
            service_window_ms: 1000,
            measurement_interval_ms: 1000,
            rate_control_enabled: true,

            link_latency_ms: 10,
            processing_ms: 40,
            loss_base: 0.01,
            loss_collision: 0.05,

            origination_share: 0.5,
            weight_o0: 2.0,
            weight_o1: 1.0,
            deadline_class0_ms: 200,
            deadline_class1_ms: 500,
            deadline_class2_ms: 1000,
            burst_multiplier: 1.0,
            burst_period_ms: 10_000,
            burst_duty: 0.5,
            requests_per_sensor: 0,
            replications: 2,
            duration_ms: 60_000,
        }
    }
}

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| invalid(key, value, "not a number"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "on" | "yes" => Ok(true),
        "false" | "0" | "off" | "no" => Ok(false),
        _ => Err(invalid(key, value, "expected true or false")),
    }
}

fn positive(key: &str, value: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, value, "must be positive"))
    }
}

fn non_negative(key: &str, value: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, value, "must be non-negative"))
    }
}

fn unit_interval(key: &str, value: &str, v: f64) -> Result<f64, ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(invalid(key, value, "must lie in [0, 1]"))
    }
}

impl SimConfig {
    pub const KEYS: &'static [&'static str] = &[
        "field_side",
        "node_count",
        "tx_range",
        "sink",
        "packet_size",
        "queue_capacity",
        "alpha",
        "energy_k",
        "prioritizer_cost",
        "sched_unit_cost",
        "initial_sched_rate",
        "ratio_threshold",
        "queue_threshold",
        "reduction_factor",
        "max_rate_adjustment",
        "rate_cap_mode",
        "recovery_enabled",
        "recovery_factor",
        "congestion_signal",
        "service_window_ms",
        "measurement_interval_ms",
        "rate_control_enabled",
        "link_latency_ms",
        "processing_ms",
        "loss_base",
        "loss_collision",
        "origination_share",
        "weight_o0",
        "weight_o1",
        "deadline_class0_ms",
        "deadline_class1_ms",
        "deadline_class2_ms",
        "burst_multiplier",
        "burst_period_ms",
        "burst_duty",
        "requests_per_sensor",
        "replications",
        "duration_ms",
    ];

    /// Sets one key from its textual value, validating the range.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "field_side" => self.field_side = positive(key, v, parse_num(key, v)?)?,
            "node_count" => {
                let n: usize = parse_num(key, v)?;
                if !(2..=usize::from(u16::MAX)).contains(&n) {
                    return Err(invalid(key, v, "must lie in [2, 65535]"));
                }
                self.node_count = n;
            }
            "tx_range" => self.tx_range = positive(key, v, parse_num(key, v)?)?,
            "sink" => {
                self.sink = match v {
                    "center" => SinkPlacement::Center,
                    other => SinkPlacement::Node(
                        other
                            .parse()
                            .map_err(|_| invalid(key, v, "expected `center` or a node id"))?,
                    ),
                }
            }
            "packet_size" => {
                let n: usize = parse_num(key, v)?;
                if n != PACKET_SIZE {
                    return Err(invalid(
                        key,
                        v,
                        format!("packet size is fixed at {PACKET_SIZE}"),
                    ));
                }
                self.packet_size = n;
            }
            "queue_capacity" => {
                let n: usize = parse_num(key, v)?;
                if n == 0 || n > 255 {
                    return Err(invalid(key, v, "must lie in [1, 255]"));
                }
                self.queue_capacity = n;
            }
            "alpha" => {
                let a: f64 = parse_num(key, v)?;
                if !(2.0..=5.0).contains(&a) {
                    return Err(invalid(key, v, "attenuation factor must lie in [2, 5]"));
                }
                self.alpha = a;
            }
            "energy_k" => self.energy_k = positive(key, v, parse_num(key, v)?)?,
            "prioritizer_cost" => self.prioritizer_cost = non_negative(key, v, parse_num(key, v)?)?,
            "sched_unit_cost" => self.sched_unit_cost = non_negative(key, v, parse_num(key, v)?)?,
            "initial_sched_rate" => {
                let r = positive(key, v, parse_num(key, v)?)?;
                if r > 65_535.0 {
                    return Err(invalid(key, v, "exceeds the fixed-point rate range"));
                }
                self.initial_sched_rate = r;
            }
            "ratio_threshold" => self.ratio_threshold = positive(key, v, parse_num(key, v)?)?,
            "queue_threshold" => self.queue_threshold = parse_num(key, v)?,
            "reduction_factor" => {
                let f: f64 = parse_num(key, v)?;
                if !(f > 0.0 && f < 1.0) {
                    return Err(invalid(key, v, "must lie in (0, 1)"));
                }
                self.reduction_factor = f;
            }
            "max_rate_adjustment" => {
                let f: f64 = parse_num(key, v)?;
                if !(0.0..1.0).contains(&f) {
                    return Err(invalid(key, v, "must lie in [0, 1)"));
                }
                self.max_rate_adjustment = f;
            }
            "rate_cap_mode" => {
                self.rate_cap_mode = match v {
                    "cumulative" => RateCapMode::Cumulative,
                    "per_step" => RateCapMode::PerStep,
                    _ => return Err(invalid(key, v, "expected `cumulative` or `per_step`")),
                }
            }
            "recovery_enabled" => self.recovery_enabled = parse_bool(key, v)?,
            "recovery_factor" => {
                let f: f64 = parse_num(key, v)?;
                if !(f >= 1.0 && f.is_finite()) {
                    return Err(invalid(key, v, "must be at least 1"));
                }
                self.recovery_factor = f;
            }
            "congestion_signal" => {
                self.congestion_signal = match v {
                    "parents" => CongestionSignal::Parents,
                    "own" => CongestionSignal::Own,
                    "both" => CongestionSignal::Both,
                    _ => return Err(invalid(key, v, "expected `parents`, `own` or `both`")),
                }
            }
            "service_window_ms" => {
                let n: u64 = parse_num(key, v)?;
                if n == 0 {
                    return Err(invalid(key, v, "must be positive"));
                }
                self.service_window_ms = n;
            }
            "measurement_interval_ms" => {
                let n: u64 = parse_num(key, v)?;
                if n == 0 {
                    return Err(invalid(key, v, "must be positive"));
                }
                self.measurement_interval_ms = n;
            }
            "rate_control_enabled" => self.rate_control_enabled = parse_bool(key, v)?,
            "link_latency_ms" => self.link_latency_ms = parse_num(key, v)?,
            "processing_ms" => self.processing_ms = parse_num(key, v)?,
            "loss_base" => self.loss_base = unit_interval(key, v, parse_num(key, v)?)?,
            "loss_collision" => self.loss_collision = unit_interval(key, v, parse_num(key, v)?)?,
            "origination_share" => {
                self.origination_share = non_negative(key, v, parse_num(key, v)?)?
            }
            "weight_o0" => self.weight_o0 = non_negative(key, v, parse_num(key, v)?)?,
            "weight_o1" => self.weight_o1 = non_negative(key, v, parse_num(key, v)?)?,
            "deadline_class0_ms" => self.deadline_class0_ms = parse_num(key, v)?,
            "deadline_class1_ms" => self.deadline_class1_ms = parse_num(key, v)?,
            "deadline_class2_ms" => self.deadline_class2_ms = parse_num(key, v)?,
            "burst_multiplier" => self.burst_multiplier = positive(key, v, parse_num(key, v)?)?,
            "burst_period_ms" => {
                let n: u64 = parse_num(key, v)?;
                if n == 0 {
                    return Err(invalid(key, v, "must be positive"));
                }
                self.burst_period_ms = n;
            }
            "burst_duty" => self.burst_duty = unit_interval(key, v, parse_num(key, v)?)?,
            "requests_per_sensor" => self.requests_per_sensor = parse_num(key, v)?,
            "replications" => {
                let n: usize = parse_num(key, v)?;
                if n == 0 {
                    return Err(invalid(key, v, "must be positive"));
                }
                self.replications = n;
            }
            "duration_ms" => self.duration_ms = parse_num(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Checks constraints that span several keys.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.loss_base + self.loss_collision > 1.0 {
            return Err(invalid(
                "loss_collision",
                &self.loss_collision.to_string(),
                "loss_base + loss_collision must not exceed 1",
            ));
        }
        if self.weight_o0 + self.weight_o1 <= 0.0 {
            return Err(invalid(
                "weight_o1",
                &self.weight_o1.to_string(),
                "originating class weights must not both be zero",
            ));
        }
        if let SinkPlacement::Node(id) = self.sink {
            if usize::from(id) >= self.node_count {
                return Err(invalid("sink", &id.to_string(), "sink id out of range"));
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                text: raw.to_string(),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<SimConfig, ConfigError> {
        let mut cfg = SimConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Full dump in the config format; `from_text(dump)` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            let _ = writeln!(out, "{key} = {}", self.value_text(key));
        }
        out
    }

    fn value_text(&self, key: &str) -> String {
        // `{}` on f64 prints the shortest string that parses back exactly.
        match key {
            "field_side" => self.field_side.to_string(),
            "node_count" => self.node_count.to_string(),
            "tx_range" => self.tx_range.to_string(),
            "sink" => match self.sink {
                SinkPlacement::Center => "center".to_string(),
                SinkPlacement::Node(id) => id.to_string(),
            },
            "packet_size" => self.packet_size.to_string(),
            "queue_capacity" => self.queue_capacity.to_string(),
            "alpha" => self.alpha.to_string(),
            "energy_k" => self.energy_k.to_string(),
            "prioritizer_cost" => self.prioritizer_cost.to_string(),
            "sched_unit_cost" => self.sched_unit_cost.to_string(),
            "initial_sched_rate" => self.initial_sched_rate.to_string(),
            "ratio_threshold" => self.ratio_threshold.to_string(),
            "queue_threshold" => self.queue_threshold.to_string(),
            "reduction_factor" => self.reduction_factor.to_string(),
            "max_rate_adjustment" => self.max_rate_adjustment.to_string(),
            "rate_cap_mode" => match self.rate_cap_mode {
                RateCapMode::Cumulative => "cumulative",
                RateCapMode::PerStep => "per_step",
            }
            .to_string(),
            "recovery_enabled" => self.recovery_enabled.to_string(),
            "recovery_factor" => self.recovery_factor.to_string(),
            "congestion_signal" => match self.congestion_signal {
                CongestionSignal::Parents => "parents",
                CongestionSignal::Own => "own",
                CongestionSignal::Both => "both",
            }
            .to_string(),
            "service_window_ms" => self.service_window_ms.to_string(),
            "measurement_interval_ms" => self.measurement_interval_ms.to_string(),
            "rate_control_enabled" => self.rate_control_enabled.to_string(),
            "link_latency_ms" => self.link_latency_ms.to_string(),
            "processing_ms" => self.processing_ms.to_string(),
            "loss_base" => self.loss_base.to_string(),
            "loss_collision" => self.loss_collision.to_string(),
            "origination_share" => self.origination_share.to_string(),
            "weight_o0" => self.weight_o0.to_string(),
            "weight_o1" => self.weight_o1.to_string(),
            "deadline_class0_ms" => self.deadline_class0_ms.to_string(),
            "deadline_class1_ms" => self.deadline_class1_ms.to_string(),
            "deadline_class2_ms" => self.deadline_class2_ms.to_string(),
            "burst_multiplier" => self.burst_multiplier.to_string(),
            "burst_period_ms" => self.burst_period_ms.to_string(),
            "burst_duty" => self.burst_duty.to_string(),
            "requests_per_sensor" => self.requests_per_sensor.to_string(),
            "replications" => self.replications.to_string(),
            "duration_ms" => self.duration_ms.to_string(),
            _ => unreachable!("unlisted key {key}"),
        }
    }

    /// Relative deadline for a priority class, in ms.
    pub fn relative_deadline_ms(&self, class: u8) -> u64 {
        match class {
            0 => self.deadline_class0_ms,
            1 => self.deadline_class1_ms,
            _ => self.deadline_class2_ms,
        }
    }
}

/// Loads a config: defaults, then `path` (if any), then `overrides` in order.
pub fn parse_config<S: AsRef<str>>(
    path: Option<&Path>,
    overrides: &[(S, S)],
) -> Result<SimConfig, ConfigError> {
    let mut cfg = SimConfig::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.apply_text(&text)?;
    }
    for (key, value) in overrides {
        cfg.set(key.as_ref().trim(), value.as_ref())?;
    }
    cfg.validate()?;
    Ok(cfg)
}
