use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::comms::LinkSecurity;
use crate::keypool::KpsPolicy;
use crate::link::PowerPair;
use crate::qkd::{ChannelModel, ProtocolParams};

use super::SimError;

/// How key-block statistics are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticsMode {
    /// Expected counts; every block of a channel yields the same length.
    #[default]
    Expected,
    /// Binomially sampled counts, seeded per channel and block.
    Sampled,
}

/// A power pair that holds from `t` until the next setpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Setpoint {
    pub t: f64,
    pub p_mw: f64,
    pub q_mvar: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub model: ChannelModel,
    pub protocol: ProtocolParams,
    /// Low-water mark for this pool; defaults to the sharing policy's.
    pub threshold: Option<u64>,
    pub capacity: Option<u64>,
    /// Reference trajectory the MGCC replays to this channel's controller.
    pub references: Vec<Setpoint>,
    /// Load measurements the plant side reports.
    pub measurements: Vec<Setpoint>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KpsConfig {
    pub enabled: bool,
    pub policy: KpsPolicy,
}

/// Scheduled attack. Channels are numbered from 1, like pool ids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Attack {
    /// Raises the channel's misalignment error from `t` on.
    Noise { t: f64, channel: u32, e_mis: f64 },
    /// Sends a clear-text control frame posing as the MGCC.
    Forge {
        t: f64,
        channel: u32,
        p_mw: f64,
        q_mvar: f64,
    },
}

impl Attack {
    pub fn time(&self) -> f64 {
        match *self {
            Attack::Noise { t, .. } | Attack::Forge { t, .. } => t,
        }
    }

    pub fn channel(&self) -> u32 {
        match *self {
            Attack::Noise { channel, .. } | Attack::Forge { channel, .. } => channel,
        }
    }
}

/// An attack without its time, for [`inject_attack`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackKind {
    Noise { channel: u32, e_mis: f64 },
    Forge { channel: u32, p_mw: f64, q_mvar: f64 },
}

impl AttackKind {
    pub fn at(self, t: f64) -> Attack {
        match self {
            AttackKind::Noise { channel, e_mis } => Attack::Noise { t, channel, e_mis },
            AttackKind::Forge { channel, p_mw, q_mvar } => Attack::Forge {
                t,
                channel,
                p_mw,
                q_mvar,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Simulated time span in seconds; events run in `[0, duration)`.
    pub duration: f64,
    /// Packet cycles per second, each one measurement and one control frame
    /// per channel.
    pub tx_rate: f64,
    pub seed: u64,
    /// Seconds between pool-level samples.
    pub sample_interval: f64,
    /// One-way datagram latency in seconds.
    pub latency: f64,
    pub statistics: StatisticsMode,
    /// Deposit a first key block at t = 0 so pools start full.
    pub precharge: bool,
    /// Keep per-packet records; long runs may switch this off.
    pub record_packets: bool,
    pub security: LinkSecurity,
    pub plant_rating_mw: f64,
    pub channels: Vec<ChannelConfig>,
    pub kps: KpsConfig,
    pub attacks: Vec<Attack>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration: 360.0,
            tx_rate: 100.0,
            seed: 1,
            sample_interval: 1.0,
            latency: 0.0,
            statistics: StatisticsMode::Expected,
            precharge: true,
            record_packets: true,
            security: LinkSecurity::default(),
            plant_rating_mw: crate::comms::controller::DEFAULT_RATING_MW,
            channels: vec![ChannelConfig::default()],
            kps: KpsConfig::default(),
            attacks: Vec::new(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> SimError {
    SimError::Config(msg.into())
}

fn finite_positive(name: &str, v: f64) -> Result<(), SimError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive, got {v}")))
    }
}

fn check_setpoints(what: &str, ch: usize, points: &[Setpoint]) -> Result<(), SimError> {
    for s in points {
        if !(s.t.is_finite() && s.t >= 0.0) {
            return Err(config_err(format!("channel {ch}: {what} time {} is invalid", s.t)));
        }
        PowerPair::from_mw(s.p_mw, s.q_mvar).map_err(|e| config_err(format!("channel {ch}: {e}")))?;
    }
    Ok(())
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        finite_positive("duration", self.duration)?;
        finite_positive("tx_rate", self.tx_rate)?;
        finite_positive("sample_interval", self.sample_interval)?;
        finite_positive("plant_rating_mw", self.plant_rating_mw)?;
        if !(self.latency.is_finite() && self.latency >= 0.0) {
            return Err(config_err(format!("latency must be non-negative, got {}", self.latency)));
        }
        if self.duration * self.tx_rate > 1e12 {
            return Err(config_err("duration x tx_rate is too large"));
        }
        if self.channels.is_empty() {
            return Err(config_err("at least one channel is required"));
        }
        if self.channels.len() > 200 {
            return Err(config_err("at most 200 channels are supported"));
        }
        for (i, c) in self.channels.iter().enumerate() {
            let n = i + 1;
            c.model.validate().map_err(|e| config_err(format!("channel {n}: {e}")))?;
            c.protocol.validate().map_err(|e| config_err(format!("channel {n}: {e}")))?;
            check_setpoints("reference", n, &c.references)?;
            check_setpoints("measurement", n, &c.measurements)?;
        }
        if self.kps.enabled {
            if self.channels.len() < 2 {
                return Err(config_err("key pool sharing needs at least two channels"));
            }
            self.kps.policy.validate().map_err(|e| config_err(e.to_string()))?;
        }
        for a in &self.attacks {
            self.check_attack(a)?;
        }
        Ok(())
    }

    fn check_attack(&self, a: &Attack) -> Result<(), SimError> {
        let t = a.time();
        if !(t.is_finite() && (0.0..=self.duration).contains(&t)) {
            return Err(SimError::AttackTime { t, duration: self.duration });
        }
        if a.channel() == 0 || a.channel() as usize > self.channels.len() {
            return Err(config_err(format!("attack targets unknown channel {}", a.channel())));
        }
        match *a {
            Attack::Noise { e_mis, .. } => {
                if !(0.0..0.5).contains(&e_mis) {
                    return Err(config_err(format!("noise e_mis {e_mis} outside [0, 0.5)")));
                }
            }
            Attack::Forge { p_mw, q_mvar, .. } => {
                PowerPair::from_mw(p_mw, q_mvar).map_err(|e| config_err(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Pool threshold for channel index `i`.
    pub fn threshold(&self, i: usize) -> u64 {
        self.channels[i].threshold.unwrap_or(self.kps.policy.threshold)
    }

    /// Two channels at 13.5 km with e_mis 8e-4 and 5e-4, 100 packets/s.
    ///
    /// At the default pulse rate pool 1 runs dry about 10 s before its
    /// second block arrives, while pool 2 has plenty to spare.
    pub fn kps_demo(kps_enabled: bool) -> Self {
        let channel = |e_mis: f64| ChannelConfig {
            model: ChannelModel::default().with_length(13.5).with_e_mis(e_mis),
            ..ChannelConfig::default()
        };
        Self {
            duration: 360.0,
            tx_rate: 100.0,
            channels: vec![channel(8e-4), channel(5e-4)],
            kps: KpsConfig {
                enabled: kps_enabled,
                policy: KpsPolicy::default(),
            },
            ..Self::default()
        }
    }

    /// One 50 km channel run for exactly one key-block period.
    pub fn exhaustion(tx_rate: f64) -> Result<Self, SimError> {
        let model = ChannelModel::default().with_length(50.0);
        let protocol = ProtocolParams::default();
        let period = crate::qkd::evaluate(&protocol, &model)?.block_period(model.pulse_rate);
        Ok(Self {
            duration: period,
            tx_rate,
            sample_interval: 5.0,
            channels: vec![ChannelConfig {
                model,
                protocol,
                ..ChannelConfig::default()
            }],
            ..Self::default()
        })
    }
}

/// Returns `cfg` with one more attack scheduled at `t` seconds.
pub fn inject_attack(cfg: &SimConfig, t: f64, kind: AttackKind) -> Result<SimConfig, SimError> {
    let attack = kind.at(t);
    cfg.check_attack(&attack)?;
    let mut out = cfg.clone();
    out.attacks.push(attack);
    Ok(out)
}
