//! ISO-8601 UTC conversion for [`Timestamp`].

use chrono::{DateTime, SecondsFormat, Utc};
use hvd_core::Timestamp;

use crate::{HvdError, Result};

pub fn parse(s: &str) -> Result<Timestamp> {
    let dt = DateTime::parse_from_rfc3339(s.trim())
        .map_err(|e| HvdError::Data(format!("bad timestamp {s:?}: {e}")))?;
    Ok(Timestamp(dt.timestamp()))
}

pub fn format(ts: Timestamp) -> String {
    match DateTime::<Utc>::from_timestamp(ts.0, 0) {
        Some(dt) => dt.to_rfc3339_opts(SecondsFormat::Secs, true),
        None => ts.0.to_string(),
    }
}

pub mod serde_ts {
    use hvd_core::Timestamp;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(*ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let ts = parse("2022-03-15T10:20:30Z").unwrap();
        assert_eq!(ts, Timestamp::from_civil(2022, 3, 15, 10, 20, 30).unwrap());
        assert_eq!(format(ts), "2022-03-15T10:20:30Z");
        assert_eq!(parse("2022-03-15T12:20:30+02:00").unwrap(), ts);
        assert!(parse("yesterday").is_err());
    }
}
