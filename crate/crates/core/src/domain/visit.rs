use std::fmt;
use std::str::FromStr;

use crate::domain::{MonthIndex, RegionId};
use crate::error::{Error, Result};

macro_rules! label_enum {
    ($name:ident, $field:literal, { $($variant:ident => $label:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                let lower = s.trim().to_ascii_lowercase();
                match lower.as_str() {
                    $($label => Ok($name::$variant),)+
                    "" => Ok(Self::UNKNOWN),
                    _ => Err(Error::parse($field, format!("unknown value {s:?}"))),
                }
            }
        }
    };
}

label_enum!(AgeGroup, "age_group", {
    Child => "child",
    Young => "young",
    Middle => "middle",
    Old => "old",
    Unknown => "unknown",
});

label_enum!(Race, "race", {
    Asian => "asian",
    Black => "black",
    Hispanic => "hispanic",
    White => "white",
    Other => "other",
    Unknown => "unknown",
});

impl AgeGroup {
    const UNKNOWN: AgeGroup = AgeGroup::Unknown;
}

impl Race {
    const UNKNOWN: Race = Race::Unknown;
}

/// Age band edges. Children are `<= 18`, young `< 44`, middle `< old_min`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgeBands {
    pub old_min: u32,
}

impl Default for AgeBands {
    fn default() -> Self {
        AgeBands { old_min: 65 }
    }
}

impl AgeBands {
    pub fn classify(&self, age: u32) -> AgeGroup {
        if age <= 18 {
            AgeGroup::Child
        } else if age < 44 {
            AgeGroup::Young
        } else if age < self.old_min {
            AgeGroup::Middle
        } else {
            AgeGroup::Old
        }
    }
}

/// Normalizes an ICD-10 code (trim, uppercase) and checks its shape.
pub fn normalize_code(code: &str) -> Result<String> {
    let upper = code.trim().to_ascii_uppercase();
    let bytes = upper.as_bytes();
    let shape_ok = (2..=7).contains(&bytes.len())
        && bytes[0].is_ascii_uppercase()
        && bytes[1..]
            .iter()
            .all(|b| b.is_ascii_digit() || b.is_ascii_uppercase() || *b == b'.');
    if shape_ok {
        Ok(upper)
    } else {
        Err(Error::parse("icd10_codes", format!("{code:?} is not an ICD-10 code")))
    }
}

/// One patient-month-region encounter.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitRecord {
    pub patient_id: String,
    pub month: MonthIndex,
    pub region: RegionId,
    pub age_group: AgeGroup,
    pub race: Race,
    pub service_codes: Vec<String>,
}

impl VisitRecord {
    pub fn new(
        patient_id: &str,
        month: MonthIndex,
        region: RegionId,
        age_group: AgeGroup,
        race: Race,
        service_codes: &[&str],
    ) -> Result<Self> {
        let patient_id = patient_id.trim();
        if patient_id.is_empty() {
            return Err(Error::parse("patient_id", "empty"));
        }
        let service_codes = service_codes
            .iter()
            .map(|c| normalize_code(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(VisitRecord {
            patient_id: patient_id.to_string(),
            month,
            region,
            age_group,
            race,
            service_codes,
        })
    }
}
