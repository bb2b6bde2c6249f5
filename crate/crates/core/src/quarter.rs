//! Calendar quarters, release vintages and report dates.

use alloc::string::ToString;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

/// A calendar quarter, the time index of every panel in this crate.
///
/// Ordering is chronological: the derived `Ord` compares `year` first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quarter {
    year: i32,
    quarter: u8,
}

impl Quarter {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::ParseQuarter(alloc::format!("{year}Q{quarter}")));
        }
        Ok(Self { year, quarter })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn quarter(self) -> u8 {
        self.quarter
    }

    /// Number of quarters since year 0, Q1.
    pub fn ordinal(self) -> i64 {
        i64::from(self.year) * 4 + i64::from(self.quarter) - 1
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        let year = ordinal.div_euclid(4);
        let quarter = ordinal.rem_euclid(4) as u8 + 1;
        Self {
            year: year as i32,
            quarter,
        }
    }

    pub fn succ(self) -> Self {
        self.offset(1)
    }

    pub fn pred(self) -> Self {
        self.offset(-1)
    }

    pub fn offset(self, quarters: i64) -> Self {
        Self::from_ordinal(self.ordinal() + quarters)
    }

    /// Signed number of quarters from `earlier` to `self`.
    pub fn distance_from(self, earlier: Quarter) -> i64 {
        self.ordinal() - earlier.ordinal()
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}Q{}", self.year, self.quarter)
    }
}

impl FromStr for Quarter {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::ParseQuarter(text.to_string());
        let trimmed = text.trim();
        let (year, q) = trimmed.split_once(['Q', 'q']).ok_or_else(bad)?;
        if year.len() != 4 || !year.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if q.len() != 1 {
            return Err(bad());
        }
        let year: i32 = year.parse().map_err(|_| bad())?;
        let quarter: u8 = q.parse().map_err(|_| bad())?;
        if !(1..=4).contains(&quarter) {
            return Err(bad());
        }
        Ok(Self { year, quarter })
    }
}

/// Inclusive range of calendar quarters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuarterRange {
    pub first: Quarter,
    pub last: Quarter,
}

impl QuarterRange {
    pub fn new(first: Quarter, last: Quarter) -> Result<Self> {
        if last < first {
            return Err(Error::Config(alloc::format!(
                "sample range {first}..{last} is empty"
            )));
        }
        Ok(Self { first, last })
    }

    /// 2000Q1 through 2022Q4.
    pub fn default_sample() -> Self {
        Self {
            first: Quarter {
                year: 2000,
                quarter: 1,
            },
            last: Quarter {
                year: 2022,
                quarter: 4,
            },
        }
    }

    pub fn contains(&self, q: Quarter) -> bool {
        self.first <= q && q <= self.last
    }

    pub fn len(&self) -> usize {
        (self.last.distance_from(self.first) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = Quarter> {
        let first = self.first.ordinal();
        (first..=self.last.ordinal()).map(Quarter::from_ordinal)
    }
}

/// Which official estimate of a quarter's growth rate is targeted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReleaseKind {
    First,
    Second,
    Third,
}

impl ReleaseKind {
    pub const ALL: [ReleaseKind; 3] = [ReleaseKind::First, ReleaseKind::Second, ReleaseKind::Third];

    pub fn number(self) -> u8 {
        match self {
            ReleaseKind::First => 1,
            ReleaseKind::Second => 2,
            ReleaseKind::Third => 3,
        }
    }

    pub fn index(self) -> usize {
        usize::from(self.number() - 1)
    }

    pub fn from_number(k: u8) -> Option<Self> {
        match k {
            1 => Some(ReleaseKind::First),
            2 => Some(ReleaseKind::Second),
            3 => Some(ReleaseKind::Third),
            _ => None,
        }
    }

    /// The release published just before this one; `None` for the first.
    pub fn prior(self) -> Option<Self> {
        match self {
            ReleaseKind::First => None,
            ReleaseKind::Second => Some(ReleaseKind::First),
            ReleaseKind::Third => Some(ReleaseKind::Second),
        }
    }
}

impl fmt::Display for ReleaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for ReleaseKind {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        text.trim()
            .parse::<u8>()
            .ok()
            .and_then(ReleaseKind::from_number)
            .ok_or_else(|| Error::ParseRelease(text.to_string()))
    }
}

/// Calendar date of a submitted forecast. Only used for ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Date {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

impl FromStr for Date {
    type Err = Error;

    /// Accepts `YYYY-MM-DD`, optionally followed by an ISO-8601 time part.
    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::ParseDate(text.to_string());
        let t = text.trim();
        let date = t.get(..10).ok_or_else(bad)?;
        if t.len() > 10 && !t[10..].starts_with(['T', ' ']) {
            return Err(bad());
        }
        let mut parts = date.split('-');
        let (y, m, d) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(y), Some(m), Some(d), None) if y.len() == 4 && m.len() == 2 && d.len() == 2 => {
                (y, m, d)
            }
            _ => return Err(bad()),
        };
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u8 = m.parse().map_err(|_| bad())?;
        let day: u8 = d.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
            return Err(bad());
        }
        Ok(Self { year, month, day })
    }
}
