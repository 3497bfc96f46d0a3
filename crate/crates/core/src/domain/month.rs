use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Calendar month used as the time index of every network and stress series.
///
/// Field order makes the derived `Ord` lexical in `(year, month)`, which
/// agrees with [`MonthIndex::ordinal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthIndex {
    year: i32,
    month: u8,
}

impl MonthIndex {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::parse("month", format!("{month} is outside 1..=12")));
        }
        if !(0..=9999).contains(&year) {
            return Err(Error::parse("year", format!("{year} is outside 0..=9999")));
        }
        Ok(MonthIndex {
            year,
            month: month as u8,
        })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        u32::from(self.month)
    }

    /// `year * 12 + (month - 1)`.
    pub fn ordinal(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        let year = ordinal.div_euclid(12);
        let month = ordinal.rem_euclid(12) + 1;
        MonthIndex {
            year: year as i32,
            month: month as u8,
        }
    }

    pub fn add_months(self, delta: i64) -> Self {
        Self::from_ordinal(self.ordinal() + delta)
    }

    pub fn succ(self) -> Self {
        self.add_months(1)
    }

    /// Signed number of months from `earlier` to `self`.
    pub fn months_since(self, earlier: MonthIndex) -> i64 {
        self.ordinal() - earlier.ordinal()
    }

    /// Inclusive range of months.
    pub fn range_inclusive(start: MonthIndex, end: MonthIndex) -> impl Iterator<Item = MonthIndex> {
        (start.ordinal()..=end.ordinal()).map(MonthIndex::from_ordinal)
    }
}

impl fmt::Display for MonthIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthIndex {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (year, month) = text
            .split_once('-')
            .ok_or_else(|| Error::parse("month", format!("{text:?} is not in YYYY-MM form")))?;
        if year.len() != 4 || !year.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::parse("year", format!("{year:?} in {text:?}")));
        }
        if month.len() != 2 || !month.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::parse("month", format!("{month:?} in {text:?}")));
        }
        let year: i32 = year.parse().map_err(|_| Error::parse("year", text))?;
        let month: u32 = month.parse().map_err(|_| Error::parse("month", text))?;
        MonthIndex::new(year, month)
    }
}

pub fn parse_month(text: &str) -> Result<MonthIndex> {
    text.parse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_direct_form() {
        let m = parse_month("2020-03").unwrap();
        assert_eq!((m.year(), m.month()), (2020, 3));
    }

    #[test]
    fn carries_at_year_boundary() {
        let m = parse_month("2019-12").unwrap();
        assert_eq!(m.succ().to_string(), "2020-01");
        assert_eq!(m.add_months(-12).to_string(), "2018-12");
    }

    #[test]
    fn rejects_out_of_range_month() {
        match parse_month("2020-13") {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "month"),
            other => panic!("expected month parse error, got {other:?}"),
        }
        assert!(matches!(parse_month("2020-00"), Err(Error::Parse { field: "month", .. })));
        assert!(matches!(parse_month("20x0-01"), Err(Error::Parse { field: "year", .. })));
        assert!(parse_month("202001").is_err());
        assert!(parse_month("2020-1").is_err());
    }

    proptest! {
        #[test]
        fn format_parse_round_trip(year in 0i32..=9999, month in 1u32..=12) {
            let m = MonthIndex::new(year, month).unwrap();
            prop_assert_eq!(parse_month(&m.to_string()).unwrap(), m);
            prop_assert_eq!(MonthIndex::from_ordinal(m.ordinal()), m);
        }

        #[test]
        fn ordinal_monotone_in_lexical_order(
            a in (0i32..=9999, 1u32..=12),
            b in (0i32..=9999, 1u32..=12),
        ) {
            let ma = MonthIndex::new(a.0, a.1).unwrap();
            let mb = MonthIndex::new(b.0, b.1).unwrap();
            prop_assert_eq!(a.cmp(&b), ma.ordinal().cmp(&mb.ordinal()));
            prop_assert_eq!(ma.cmp(&mb), ma.ordinal().cmp(&mb.ordinal()));
        }
    }
}
