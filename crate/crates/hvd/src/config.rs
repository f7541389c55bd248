//! Encoder configuration file.
//!
//! Everything random in an encoder set derives from the seeds stored here,
//! so two parties holding the same file produce bit-identical vectors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use hvd_core::encode::DEFAULT_ALPHABET;
use hvd_core::{
    Attribute, EncoderSet, EncoderSettings, Fuzziness, Seeds, TimeComponent, TimeConfig,
    TimeEncoding, Timestamp,
};
use serde::{Deserialize, Serialize};

use crate::timefmt::serde_ts;
use crate::{HvdError, Result};

pub const CONFIG_FORMAT: u32 = 1;
pub const DEFAULT_LEVELS: usize = 1024;
pub const DEFAULT_ROLE_LEVELS: usize = 3;
pub const DEFAULT_EMBEDDING_DIM: usize = 768;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mv,
    Sv,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Mv => "mv",
            Mode::Sv => "sv",
        })
    }
}

impl FromStr for Mode {
    type Err = HvdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mv" => Ok(Mode::Mv),
            "sv" => Ok(Mode::Sv),
            _ => Err(HvdError::Usage(format!("unknown mode {s:?} (expected mv or sv)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedsConfig {
    pub text: u64,
    pub hashtags: u64,
    pub sentiment: u64,
    pub alphabet: u64,
    pub time: u64,
    pub roles: u64,
    pub ties: u64,
}

impl From<Seeds> for SeedsConfig {
    fn from(s: Seeds) -> Self {
        Self {
            text: s.text,
            hashtags: s.hashtags,
            sentiment: s.sentiment,
            alphabet: s.alphabet,
            time: s.time,
            roles: s.roles,
            ties: s.ties,
        }
    }
}

impl From<SeedsConfig> for Seeds {
    fn from(s: SeedsConfig) -> Self {
        Self {
            text: s.text,
            hashtags: s.hashtags,
            sentiment: s.sentiment,
            alphabet: s.alphabet,
            time: s.time,
            roles: s.roles,
            ties: s.ties,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeEncodingConfig {
    Level,
    Components,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSection {
    #[serde(with = "serde_ts")]
    pub start: Timestamp,
    #[serde(with = "serde_ts")]
    pub end: Timestamp,
    pub levels: usize,
    pub encoding: TimeEncodingConfig,
    pub components: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RolesSection {
    pub seed: u64,
    pub levels: usize,
    pub attributes: Vec<String>,
    /// Hex of the registry version hash.
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub format: u32,
    pub dim: usize,
    pub embedding_dim: usize,
    pub master_seed: u64,
    pub seeds: SeedsConfig,
    pub time: TimeSection,
    pub alphabet: String,
    pub roles: RolesSection,
    /// Representations built for the store.
    pub modes: Vec<Mode>,
    /// Default per-attribute thresholds, by mode then attribute name.
    pub fuzziness: BTreeMap<Mode, BTreeMap<String, f64>>,
}

/// Default thresholds. MV values apply to exact per-attribute vectors; SV
/// values sit on the compound scale, where a perfectly matching filler is
/// already about 0.34 away.
pub fn default_fuzziness(mode: Mode) -> BTreeMap<String, f64> {
    let pairs: &[(&str, f64)] = match mode {
        Mode::Mv => &[
            ("text", 0.47),
            ("hashtags", 0.47),
            ("language", 0.05),
            ("location", 0.10),
            ("sentiment", 0.45),
            ("created_at", 0.05),
            ("year", 0.05),
            ("month", 0.05),
            ("day", 0.05),
            ("hour", 0.05),
            ("minute", 0.05),
        ],
        Mode::Sv => &[
            ("text", 0.485),
            ("hashtags", 0.48),
            ("language", 0.37),
            ("location", 0.375),
            ("sentiment", 0.375),
            ("created_at", 0.40),
            ("year", 0.385),
            ("month", 0.385),
            ("day", 0.385),
            ("hour", 0.385),
            ("minute", 0.385),
        ],
    };
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Level count that fits the width: at most `dim / 2` bits can be flipped.
pub fn default_levels(dim: usize) -> usize {
    DEFAULT_LEVELS.min(dim / 2 + 1)
}

pub fn default_time_range() -> (Timestamp, Timestamp) {
    (
        Timestamp::from_civil(1970, 1, 1, 0, 0, 0).expect("valid date"),
        Timestamp::from_civil(2101, 1, 1, 0, 0, 0).expect("valid date"),
    )
}

/// Builder for a fresh configuration.
#[derive(Clone, Debug)]
pub struct ConfigBuilder {
    pub dim: usize,
    pub embedding_dim: usize,
    pub seed: u64,
    pub modes: Vec<Mode>,
    pub time_encoding: TimeEncoding,
    pub components: Vec<TimeComponent>,
    pub levels: Option<usize>,
    pub time_range: Option<(Timestamp, Timestamp)>,
}

impl ConfigBuilder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            seed,
            modes: vec![Mode::Mv, Mode::Sv],
            time_encoding: TimeEncoding::Level,
            components: vec![
                TimeComponent::Year,
                TimeComponent::Month,
                TimeComponent::Day,
                TimeComponent::Hour,
            ],
            levels: None,
            time_range: None,
        }
    }

    pub fn embedding_dim(mut self, d: usize) -> Self {
        self.embedding_dim = d;
        self
    }

    pub fn modes(mut self, modes: &[Mode]) -> Self {
        self.modes = modes.to_vec();
        self
    }

    pub fn time_encoding(mut self, e: TimeEncoding) -> Self {
        self.time_encoding = e;
        self
    }

    pub fn levels(mut self, m: usize) -> Self {
        self.levels = Some(m);
        self
    }

    pub fn time_range(mut self, start: Timestamp, end: Timestamp) -> Self {
        self.time_range = Some((start, end));
        self
    }

    pub fn build(self) -> Result<EncoderConfig> {
        let (start, end) = self.time_range.unwrap_or_else(default_time_range);
        let settings = EncoderSettings {
            dim: self.dim,
            embedding_dim: self.embedding_dim,
            seeds: Seeds::from_master(self.seed),
            time: TimeConfig {
                start,
                end,
                levels: self.levels.unwrap_or_else(|| default_levels(self.dim)),
                encoding: self.time_encoding,
                components: self.components,
            },
            alphabet: DEFAULT_ALPHABET.into(),
            role_levels: DEFAULT_ROLE_LEVELS,
        };
        let mut modes = self.modes;
        modes.sort();
        modes.dedup();
        EncoderConfig::from_settings(&settings, self.seed, modes)
    }
}

impl EncoderConfig {
    pub fn from_settings(s: &EncoderSettings, master_seed: u64, modes: Vec<Mode>) -> Result<Self> {
        hvd_core::bsc::check_dim(s.dim)?;
        let attributes = s.attributes();
        let registry = hvd_core::RoleRegistry::new(&attributes, s.dim, s.seeds.roles, s.role_levels)?;
        let fuzziness = [Mode::Mv, Mode::Sv]
            .into_iter()
            .map(|m| (m, default_fuzziness(m)))
            .collect();
        Ok(Self {
            format: CONFIG_FORMAT,
            dim: s.dim,
            embedding_dim: s.embedding_dim,
            master_seed,
            seeds: s.seeds.into(),
            time: TimeSection {
                start: s.time.start,
                end: s.time.end,
                levels: s.time.levels,
                encoding: match s.time.encoding {
                    TimeEncoding::Level => TimeEncodingConfig::Level,
                    TimeEncoding::Components => TimeEncodingConfig::Components,
                },
                components: s.time.components.iter().map(|c| c.name().to_string()).collect(),
            },
            alphabet: s.alphabet.clone(),
            roles: RolesSection {
                seed: s.seeds.roles,
                levels: s.role_levels,
                attributes: attributes.iter().map(|a| a.name().to_string()).collect(),
                version: format!("{:016x}", registry.version_hash()),
            },
            modes,
            fuzziness,
        })
    }

    pub fn settings(&self) -> Result<EncoderSettings> {
        if self.format != CONFIG_FORMAT {
            return Err(HvdError::Format(format!("unsupported config format {}", self.format)));
        }
        let components = self
            .time
            .components
            .iter()
            .map(|c| {
                TimeComponent::from_name(c)
                    .ok_or_else(|| HvdError::Data(format!("unknown time component {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut seeds: Seeds = self.seeds.into();
        seeds.roles = self.roles.seed;
        Ok(EncoderSettings {
            dim: self.dim,
            embedding_dim: self.embedding_dim,
            seeds,
            time: TimeConfig {
                start: self.time.start,
                end: self.time.end,
                levels: self.time.levels,
                encoding: match self.time.encoding {
                    TimeEncodingConfig::Level => TimeEncoding::Level,
                    TimeEncodingConfig::Components => TimeEncoding::Components,
                },
                components,
            },
            alphabet: self.alphabet.clone(),
            role_levels: self.roles.levels,
        })
    }

    /// Builds the encoder set and checks the stored role convention.
    pub fn encoder_set(&self) -> Result<EncoderSet> {
        let settings = self.settings()?;
        let attrs: Vec<String> = settings.attributes().iter().map(|a| a.name().to_string()).collect();
        if attrs != self.roles.attributes {
            return Err(HvdError::Mismatch(format!(
                "role attributes {:?} do not match time encoding (expected {:?})",
                self.roles.attributes, attrs
            )));
        }
        let set = EncoderSet::new(settings)?;
        let version = format!("{:016x}", set.roles().version_hash());
        if version != self.roles.version {
            return Err(HvdError::Mismatch(format!(
                "role registry version {} does not match recorded {}",
                version, self.roles.version
            )));
        }
        Ok(set)
    }

    pub fn registry_version(&self) -> Result<u64> {
        u64::from_str_radix(&self.roles.version, 16)
            .map_err(|_| HvdError::Data(format!("bad registry version {:?}", self.roles.version)))
    }

    pub fn attributes(&self) -> Result<Vec<Attribute>> {
        Ok(self
            .roles
            .attributes
            .iter()
            .map(|a| Attribute::from_name(a))
            .collect::<hvd_core::Result<Vec<_>>>()?)
    }

    /// Defaults for `mode` over the configured attributes.
    pub fn default_fuzziness(&self, mode: Mode) -> Result<Fuzziness> {
        let table = self.fuzziness.get(&mode).cloned().unwrap_or_else(|| default_fuzziness(mode));
        let mut f = Fuzziness::new();
        for (name, t) in table {
            f.set(Attribute::from_name(&name)?, t)?;
        }
        Ok(f)
    }

    /// Fields that must agree for two configs to share an index.
    pub fn check_compatible(&self, other: &EncoderConfig) -> Result<()> {
        if self.dim != other.dim {
            return Err(HvdError::Mismatch(format!("dimension {} vs {}", self.dim, other.dim)));
        }
        if self.embedding_dim != other.embedding_dim {
            return Err(HvdError::Mismatch(format!(
                "embedding dimension {} vs {}",
                self.embedding_dim, other.embedding_dim
            )));
        }
        if self.seeds != other.seeds || self.roles != other.roles || self.time != other.time {
            return Err(HvdError::Mismatch("encoder seeds, roles or time settings differ".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::store::write_atomic(path, self.to_json()?.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_byte_identical() {
        let cfg = ConfigBuilder::new(1024, 42).embedding_dim(16).build().unwrap();
        let json = cfg.to_json().unwrap();
        let back = EncoderConfig::from_json(&json).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json().unwrap(), json);
        assert!(json.contains("\"start\": \"1970-01-01T00:00:00Z\""));
    }

    #[test]
    fn levels_fit_dimension() {
        assert_eq!(default_levels(1024), 513);
        assert_eq!(default_levels(10240), 1024);
        let cfg = ConfigBuilder::new(1024, 1).embedding_dim(8).build().unwrap();
        cfg.encoder_set().unwrap();
    }

    #[test]
    fn same_file_same_encoders() {
        let cfg = ConfigBuilder::new(1024, 7).embedding_dim(8).build().unwrap();
        let a = cfg.encoder_set().unwrap();
        let b = EncoderConfig::from_json(&cfg.to_json().unwrap()).unwrap().encoder_set().unwrap();
        let e = [0.5f32, -0.1, 0.3, 0.9, -0.7, 0.2, 0.0, 0.4];
        assert_eq!(a.text(&e).unwrap(), b.text(&e).unwrap());
        assert_eq!(a.lexical("de-de").unwrap(), b.lexical("de-de").unwrap());
    }

    #[test]
    fn tampered_roles_are_rejected() {
        let mut cfg = ConfigBuilder::new(1024, 7).embedding_dim(8).build().unwrap();
        cfg.roles.version = "0000000000000000".into();
        assert!(matches!(cfg.encoder_set(), Err(HvdError::Mismatch(_))));
    }

    #[test]
    fn compatibility() {
        let a = ConfigBuilder::new(1024, 7).embedding_dim(8).build().unwrap();
        let b = ConfigBuilder::new(10240, 7).embedding_dim(8).build().unwrap();
        let c = ConfigBuilder::new(1024, 8).embedding_dim(8).build().unwrap();
        assert!(a.check_compatible(&a.clone()).is_ok());
        assert!(matches!(a.check_compatible(&b), Err(HvdError::Mismatch(_))));
        assert!(matches!(a.check_compatible(&c), Err(HvdError::Mismatch(_))));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("SV".parse::<Mode>().unwrap(), Mode::Sv);
        assert!("xv".parse::<Mode>().is_err());
    }
}
