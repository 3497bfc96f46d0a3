use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::domain::MonthIndex;
use crate::error::{Error, Result};

/// Three-digit zip prefix identifying a sub-region. Networks key nodes by it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Zip3(String);

impl Zip3 {
    pub fn new(code: &str) -> Result<Self> {
        let code = code.trim();
        if code.len() == 3 && code.bytes().all(|b| b.is_ascii_digit()) {
            Ok(Zip3(code.to_string()))
        } else {
            Err(Error::parse("zip3", format!("{code:?} is not three digits")))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Zip3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Zip3 {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Zip3::new(s)
    }
}

const POSTAL_CODES: &[&str] = &[
    "AL", "AK", "AZ", "AR", "CA", "CO", "CT", "DE", "DC", "FL", "GA", "HI", "ID", "IL", "IN", "IA",
    "KS", "KY", "LA", "ME", "MD", "MA", "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NJ", "NM",
    "NY", "NC", "ND", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VT", "VA", "WA",
    "WV", "WI", "WY", "AS", "GU", "MP", "PR", "VI",
];

/// US postal state code (50 states, DC and inhabited territories).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateCode(String);

impl StateCode {
    pub fn new(code: &str) -> Result<Self> {
        let upper = code.trim().to_ascii_uppercase();
        if POSTAL_CODES.contains(&upper.as_str()) {
            Ok(StateCode(upper))
        } else {
            Err(Error::parse("state", format!("{code:?} is not a US postal code")))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId {
    pub zip3: Zip3,
    pub state: StateCode,
}

impl RegionId {
    pub fn new(zip3: &str, state: &str) -> Result<Self> {
        Ok(RegionId {
            zip3: Zip3::new(zip3)?,
            state: StateCode::new(state)?,
        })
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.zip3, self.state)
    }
}

/// Centroid coordinates and the physician series `P_i(t)` of one region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionInfo {
    pub region: RegionId,
    pub lat: f64,
    pub lon: f64,
    pub physicians: BTreeMap<MonthIndex, u64>,
}

impl RegionInfo {
    pub fn new(region: RegionId, lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::parse("lat", format!("{lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::parse("lon", format!("{lon} outside [-180, 180]")));
        }
        Ok(RegionInfo {
            region,
            lat,
            lon,
            physicians: BTreeMap::new(),
        })
    }

    pub fn with_physicians(mut self, physicians: BTreeMap<MonthIndex, u64>) -> Self {
        self.physicians = physicians;
        self
    }

    pub fn physicians_at(&self, month: MonthIndex) -> Option<u64> {
        self.physicians.get(&month).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zip3_validation() {
        assert!(Zip3::new("100").is_ok());
        assert!(Zip3::new("10").is_err());
        assert!(Zip3::new("1a0").is_err());
        assert!(Zip3::new("1000").is_err());
    }

    #[test]
    fn state_validation() {
        assert_eq!(StateCode::new("ny").unwrap().as_str(), "NY");
        assert!(StateCode::new("XX").is_err());
    }

    #[test]
    fn coordinates_validated() {
        let id = RegionId::new("100", "NY").unwrap();
        assert!(RegionInfo::new(id.clone(), 91.0, 0.0).is_err());
        assert!(RegionInfo::new(id.clone(), 0.0, -181.0).is_err());
        assert!(RegionInfo::new(id, 40.7, -74.0).is_ok());
    }
}
