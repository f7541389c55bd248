use alloc::format;
use alloc::vec::Vec;

use super::level::{quantize, LevelSequence};
use crate::bsc::{BitHypervector, ItemMemory, Rng};
use crate::{Error, Result};

/// UTC instant, whole seconds since 1970-01-01T00:00:00Z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub i64);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Civil {
    pub year: i64,
    pub month: u32,
    pub day: u32,
    pub hour: u32,
    pub minute: u32,
    pub second: u32,
}

// Days since the epoch for a proleptic Gregorian date (H. Hinnant's algorithm).
fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let mp = (m as i64 + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (yoe + era * 400 + (m <= 2) as i64, m, d)
}

fn days_in_month(y: i64, m: u32) -> u32 {
    match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        _ if (y % 4 == 0 && y % 100 != 0) || y % 400 == 0 => 29,
        _ => 28,
    }
}

impl Timestamp {
    pub fn from_civil(year: i64, month: u32, day: u32, hour: u32, minute: u32, second: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::ValueOutOfRange { what: "month", value: month as i64 });
        }
        if day == 0 || day > days_in_month(year, month) {
            return Err(Error::ValueOutOfRange { what: "day", value: day as i64 });
        }
        if hour > 23 || minute > 59 || second > 59 {
            return Err(Error::InvalidParameter(format!(
                "time of day {hour:02}:{minute:02}:{second:02}"
            )));
        }
        let days = days_from_civil(year, month, day);
        Ok(Self(days * 86_400 + (hour * 3600 + minute * 60 + second) as i64))
    }

    pub fn unix(self) -> i64 {
        self.0
    }

    pub fn civil(self) -> Civil {
        let days = self.0.div_euclid(86_400);
        let secs = self.0.rem_euclid(86_400) as u32;
        let (year, month, day) = civil_from_days(days);
        Civil {
            year,
            month,
            day,
            hour: secs / 3600,
            minute: secs % 3600 / 60,
            second: secs % 60,
        }
    }
}

/// Calendar component used by the component timestamp encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeComponent {
    Year,
    Month,
    Day,
    Hour,
    Minute,
}

impl TimeComponent {
    pub const ALL: [TimeComponent; 5] = [
        TimeComponent::Year,
        TimeComponent::Month,
        TimeComponent::Day,
        TimeComponent::Hour,
        TimeComponent::Minute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TimeComponent::Year => "year",
            TimeComponent::Month => "month",
            TimeComponent::Day => "day",
            TimeComponent::Hour => "hour",
            TimeComponent::Minute => "minute",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Inclusive value set.
    pub fn range(self) -> (i64, i64) {
        match self {
            TimeComponent::Year => (1970, 2100),
            TimeComponent::Month => (1, 12),
            TimeComponent::Day => (1, 31),
            TimeComponent::Hour => (0, 23),
            TimeComponent::Minute => (0, 59),
        }
    }

    pub fn value(self, c: &Civil) -> i64 {
        match self {
            TimeComponent::Year => c.year,
            TimeComponent::Month => c.month as i64,
            TimeComponent::Day => c.day as i64,
            TimeComponent::Hour => c.hour as i64,
            TimeComponent::Minute => c.minute as i64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeEncoding {
    /// One level hypervector per time window.
    Level,
    /// Independent basis vectors per calendar component.
    Components,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeConfig {
    pub start: Timestamp,
    pub end: Timestamp,
    /// Window count in level mode.
    pub levels: usize,
    pub encoding: TimeEncoding,
    /// Components encoded in component mode.
    pub components: Vec<TimeComponent>,
}

impl TimeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.start >= self.end {
            return Err(Error::InvalidParameter(format!(
                "time range start {} is not before end {}",
                self.start.0, self.end.0
            )));
        }
        if self.levels < 2 {
            return Err(Error::InvalidParameter(format!(
                "time level count {} must be at least 2",
                self.levels
            )));
        }
        if self.encoding == TimeEncoding::Components && self.components.is_empty() {
            return Err(Error::Empty("time components"));
        }
        Ok(())
    }

    /// Zero-based window of `ts` and whether it had to be clamped.
    pub fn window(&self, ts: Timestamp) -> (usize, bool) {
        let clamped = ts < self.start || ts > self.end;
        let t = ts.clamp(self.start, self.end);
        let width = (self.end.0 - self.start.0) as i128;
        let idx = ((t.0 - self.start.0) as i128 * self.levels as i128 / width) as usize;
        (idx.min(self.levels - 1), clamped)
    }

    /// First instant of window `w`.
    pub fn window_start(&self, w: usize) -> Timestamp {
        let width = (self.end.0 - self.start.0) as i128;
        let off = (w as i128 * width).div_euclid(self.levels as i128);
        // ceil so that window(window_start(w)) == w
        let off = if (w as i128 * width) % self.levels as i128 == 0 { off } else { off + 1 };
        Timestamp(self.start.0 + off as i64)
    }
}

/// Level-mode timestamp vector. The flag reports a timestamp outside the
/// configured range that was clamped to its nearest end.
pub fn encode_timestamp_level<'a>(
    ts: Timestamp,
    cfg: &TimeConfig,
    seq: &'a LevelSequence,
) -> Result<(&'a BitHypervector, bool)> {
    cfg.validate()?;
    if seq.len() != cfg.levels {
        return Err(Error::LengthMismatch {
            expected: cfg.levels,
            found: seq.len(),
        });
    }
    let (w, clamped) = cfg.window(ts);
    Ok((seq.level(w), clamped))
}

/// Same quantization as [`encode_timestamp_level`], for raw reals.
pub fn window_of(value: f64, lo: f64, hi: f64, m: usize) -> Result<usize> {
    quantize(value, lo, hi, m)
}

/// Per-component basis vectors, every value of every set drawn independently.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentMemories {
    memories: Vec<(TimeComponent, ItemMemory)>,
}

impl ComponentMemories {
    pub fn new(components: &[TimeComponent], dim: usize, rng: &mut Rng) -> Result<Self> {
        let mut memories = Vec::with_capacity(components.len());
        for &c in components {
            if memories.iter().any(|(k, _)| *k == c) {
                continue;
            }
            let (lo, hi) = c.range();
            let mem = ItemMemory::random((lo..=hi).map(|v| format!("{v}")), dim, rng)?;
            memories.push((c, mem));
        }
        Ok(Self { memories })
    }

    pub fn components(&self) -> impl Iterator<Item = TimeComponent> + '_ {
        self.memories.iter().map(|(c, _)| *c)
    }

    pub fn memory(&self, c: TimeComponent) -> Option<&ItemMemory> {
        self.memories.iter().find(|(k, _)| *k == c).map(|(_, m)| m)
    }

    pub fn vector(&self, c: TimeComponent, value: i64) -> Result<&BitHypervector> {
        let mem = self
            .memory(c)
            .ok_or_else(|| Error::UnknownAttribute(c.name().into()))?;
        let (lo, hi) = c.range();
        if value < lo || value > hi {
            return Err(Error::ValueOutOfRange { what: c.name(), value });
        }
        mem.lookup(&format!("{value}"))
    }
}

pub fn encode_timestamp_components(
    ts: Timestamp,
    memories: &ComponentMemories,
) -> Result<Vec<(TimeComponent, &BitHypervector)>> {
    let civil = ts.civil();
    memories
        .components()
        .map(|c| Ok((c, memories.vector(c, c.value(&civil))?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsc::hamming;
    use alloc::vec;

    #[test]
    fn civil_round_trip() {
        let cases = [
            (1970, 1, 1, 0, 0, 0, 0i64),
            (2000, 2, 29, 12, 0, 0, 951_825_600),
            (2022, 3, 15, 0, 0, 0, 1_647_302_400),
            (1969, 12, 31, 23, 59, 59, -1),
        ];
        for (y, mo, d, h, mi, s, unix) in cases {
            let ts = Timestamp::from_civil(y, mo, d, h, mi, s).unwrap();
            assert_eq!(ts.0, unix);
            let c = ts.civil();
            assert_eq!((c.year, c.month, c.day, c.hour, c.minute, c.second), (y, mo, d, h, mi, s));
        }
        assert!(Timestamp::from_civil(2023, 2, 29, 0, 0, 0).is_err());
        assert!(Timestamp::from_civil(2023, 13, 1, 0, 0, 0).is_err());
    }

    #[test]
    fn civil_agrees_with_day_counting() {
        let mut ts = Timestamp::from_civil(1999, 12, 25, 0, 0, 0).unwrap();
        let mut prev = ts.civil();
        for _ in 0..2000 {
            ts.0 += 86_400;
            let c = ts.civil();
            let rolled = c.day == 1 && (c.month != prev.month);
            assert!(c.day == prev.day + 1 || rolled, "{prev:?} -> {c:?}");
            prev = c;
        }
    }

    fn cfg(levels: usize) -> TimeConfig {
        TimeConfig {
            start: Timestamp(0),
            end: Timestamp(1000),
            levels,
            encoding: TimeEncoding::Level,
            components: vec![],
        }
    }

    #[test]
    fn level_windows() {
        let c = cfg(10);
        let mut rng = Rng::from_seed(1);
        let seq = LevelSequence::new(10, 1024, &mut rng).unwrap();
        assert_eq!(encode_timestamp_level(Timestamp(0), &c, &seq).unwrap(), (seq.level(0), false));
        assert_eq!(encode_timestamp_level(Timestamp(1000), &c, &seq).unwrap().0, seq.level(9));
        // same window, same vector
        assert_eq!(
            encode_timestamp_level(Timestamp(101), &c, &seq).unwrap().0,
            encode_timestamp_level(Timestamp(199), &c, &seq).unwrap().0
        );
        let (v, clamped) = encode_timestamp_level(Timestamp(5000), &c, &seq).unwrap();
        assert!(clamped);
        assert_eq!(v, seq.level(9));
        let bad = TimeConfig { start: Timestamp(5), end: Timestamp(5), ..c };
        assert!(encode_timestamp_level(Timestamp(5), &bad, &seq).is_err());
    }

    #[test]
    fn window_start_inverts_window() {
        let c = TimeConfig { end: Timestamp(997), ..cfg(7) };
        for w in 0..7 {
            let s = c.window_start(w);
            assert_eq!(c.window(s).0, w);
            if s.0 > 0 {
                assert_eq!(c.window(Timestamp(s.0 - 1)).0, w - 1);
            }
        }
    }

    #[test]
    fn level_distance_orders_windows() {
        let c = cfg(20);
        let mut rng = Rng::from_seed(2);
        let seq = LevelSequence::new(20, 10240, &mut rng).unwrap();
        let q = seq.level(0);
        let mut prev = -1.0;
        for t in (0..=1000).step_by(50) {
            let (v, _) = encode_timestamp_level(Timestamp(t), &c, &seq).unwrap();
            let d = hamming(q, v).unwrap();
            assert!(d >= prev);
            prev = d;
        }
    }

    #[test]
    fn component_vectors() {
        let mut rng = Rng::from_seed(3);
        let mems = ComponentMemories::new(&TimeComponent::ALL, 10240, &mut rng).unwrap();
        let ts = Timestamp::from_civil(2022, 3, 15, 0, 0, 0).unwrap();
        let a = encode_timestamp_components(ts, &mems).unwrap();
        let b = encode_timestamp_components(ts, &mems).unwrap();
        assert_eq!(a, b);
        let month = a.iter().find(|(c, _)| *c == TimeComponent::Month).unwrap().1;
        assert_eq!(month, mems.vector(TimeComponent::Month, 3).unwrap());
        let y22 = mems.vector(TimeComponent::Year, 2022).unwrap();
        let y23 = mems.vector(TimeComponent::Year, 2023).unwrap();
        assert!((hamming(y22, y23).unwrap() - 0.5).abs() < 0.02);
        assert!(matches!(
            mems.vector(TimeComponent::Year, 2101),
            Err(Error::ValueOutOfRange { .. })
        ));
        let late = Timestamp::from_civil(2200, 1, 1, 0, 0, 0).unwrap();
        assert!(encode_timestamp_components(late, &mems).is_err());
    }
}
