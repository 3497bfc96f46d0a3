//! ICD-10 service classes used to stratify flow networks.
//!
//! Membership is decided on the three-character category (`E11.9` → `E11`),
//! compared lexicographically against inclusive category ranges.

use std::fmt;
use std::str::FromStr;

use crate::domain::normalize_code;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ServiceClass {
    Chronic,
    AcuteRespiratory,
    Other,
}

impl ServiceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ServiceClass::Chronic => "chronic",
            ServiceClass::AcuteRespiratory => "acute_respiratory",
            ServiceClass::Other => "other",
        }
    }
}

impl fmt::Display for ServiceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ServiceClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "chronic" => Ok(ServiceClass::Chronic),
            "acute_respiratory" | "acute" => Ok(ServiceClass::AcuteRespiratory),
            "other" => Ok(ServiceClass::Other),
            _ => Err(Error::parse("service_class", format!("unknown value {s:?}"))),
        }
    }
}

/// Inclusive category ranges for chronic disease care.
pub const CHRONIC_RANGES: &[(&str, &str)] = &[
    ("G30", "G30"), // Alzheimer's disease
    ("J45", "J46"), // asthma
    ("I70", "I70"), // atherosclerosis
    ("C00", "C97"), // malignant neoplasms
    ("I60", "I69"), // cerebrovascular
    ("K70", "K70"), // alcoholic liver disease
    ("K73", "K74"), // chronic hepatitis, fibrosis, cirrhosis
    ("J40", "J47"), // chronic lower respiratory
    ("E10", "E14"), // diabetes
    ("I10", "I10"),
    ("I12", "I12"),
    ("I15", "I15"),
    ("I00", "I09"),
    ("I11", "I11"),
    ("I13", "I13"),
    ("I20", "I51"), // heart disease
    ("N00", "N07"),
    ("N17", "N19"),
    ("N25", "N27"),
    ("I71", "I78"),
    ("I80", "I99"),
];

/// Inclusive category ranges for acute respiratory illness care.
pub const ACUTE_RESPIRATORY_RANGES: &[(&str, &str)] = &[
    ("U07", "U07"),
    ("U00", "U00"),
    ("U09", "U09"),
    ("U49", "U49"),
    ("U50", "U50"),
    ("U85", "U85"),
    ("J00", "J06"),
    ("J09", "J18"),
    ("J20", "J22"),
];

fn category(code: &str) -> Result<String> {
    let normalized = normalize_code(code).map_err(|_| Error::Classification(code.to_string()))?;
    let bytes = normalized.as_bytes();
    // Category is letter, digit, then digit or letter (C7A, D3A).
    if bytes.len() < 3 || !bytes[1].is_ascii_digit() || !bytes[2].is_ascii_alphanumeric() {
        return Err(Error::Classification(code.to_string()));
    }
    if bytes.len() > 3 && bytes[3] != b'.' && !bytes[3].is_ascii_alphanumeric() {
        return Err(Error::Classification(code.to_string()));
    }
    Ok(normalized[..3].to_string())
}

fn in_ranges(cat: &str, ranges: &[(&str, &str)]) -> bool {
    ranges.iter().any(|(lo, hi)| *lo <= cat && cat <= *hi)
}

/// Chronic wins over acute if a category were ever listed in both.
pub fn classify_service(code: &str) -> Result<ServiceClass> {
    let cat = category(code)?;
    Ok(if in_ranges(&cat, CHRONIC_RANGES) {
        ServiceClass::Chronic
    } else if in_ranges(&cat, ACUTE_RESPIRATORY_RANGES) {
        ServiceClass::AcuteRespiratory
    } else {
        ServiceClass::Other
    })
}
