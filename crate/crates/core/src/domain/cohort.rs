use std::collections::BTreeSet;

use crate::domain::{AgeGroup, Race, VisitRecord};
use crate::services::{classify_service, ServiceClass};

/// Conjunctive cohort predicate. Unset dimensions accept every record.
///
/// Service classes are held as a set of classes that must *all* be present
/// among the record's codes, so that conjunction stays closed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CohortFilter {
    pub age_groups: Option<BTreeSet<AgeGroup>>,
    pub races: Option<BTreeSet<Race>>,
    pub service_classes: BTreeSet<ServiceClass>,
}

impl CohortFilter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn with_age_groups(mut self, groups: impl IntoIterator<Item = AgeGroup>) -> Self {
        self.age_groups = Some(groups.into_iter().collect());
        self
    }

    pub fn with_races(mut self, races: impl IntoIterator<Item = Race>) -> Self {
        self.races = Some(races.into_iter().collect());
        self
    }

    pub fn with_service(mut self, class: ServiceClass) -> Self {
        self.service_classes.insert(class);
        self
    }

    pub fn is_match_all(&self) -> bool {
        self.age_groups.is_none() && self.races.is_none() && self.service_classes.is_empty()
    }

    pub fn and(&self, other: &CohortFilter) -> CohortFilter {
        fn meet<T: Ord + Clone>(a: &Option<BTreeSet<T>>, b: &Option<BTreeSet<T>>) -> Option<BTreeSet<T>> {
            match (a, b) {
                (None, None) => None,
                (Some(x), None) | (None, Some(x)) => Some(x.clone()),
                (Some(x), Some(y)) => Some(x.intersection(y).cloned().collect()),
            }
        }
        CohortFilter {
            age_groups: meet(&self.age_groups, &other.age_groups),
            races: meet(&self.races, &other.races),
            service_classes: self.service_classes.union(&other.service_classes).copied().collect(),
        }
    }

    pub fn matches(&self, rec: &VisitRecord) -> bool {
        if let Some(groups) = &self.age_groups {
            if !groups.contains(&rec.age_group) {
                return false;
            }
        }
        if let Some(races) = &self.races {
            if !races.contains(&rec.race) {
                return false;
            }
        }
        self.service_classes.iter().all(|class| {
            rec.service_codes
                .iter()
                .any(|code| classify_service(code).is_ok_and(|c| c == *class))
        })
    }
}

pub fn matches(filter: &CohortFilter, rec: &VisitRecord) -> bool {
    filter.matches(rec)
}
