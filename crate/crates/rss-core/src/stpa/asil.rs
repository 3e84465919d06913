//! ASIL determination table: a replaceable data file mapping (S, E, C)
//! classifications to integrity levels, validated for totality and
//! monotonicity at load time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    S0,
    S1,
    S2,
    S3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Exposure {
    E0,
    E1,
    E2,
    E3,
    E4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Controllability {
    C0,
    C1,
    C2,
    C3,
}

/// Integrity outcome, ordered QM < A < B < C < D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AsilLevel {
    QM,
    A,
    B,
    C,
    D,
}

impl std::fmt::Display for AsilLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AsilLevel::QM => "QM",
            AsilLevel::A => "A",
            AsilLevel::B => "B",
            AsilLevel::C => "C",
            AsilLevel::D => "D",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AsilTableError {
    #[error("missing entry for {0}")]
    Missing(String),
    #[error("malformed key '{0}', expected e.g. S2-E3-C1")]
    BadKey(String),
    #[error("monotonicity violated between {0} and {1}")]
    NotMonotone(String, String),
}

/// Total map over S1–S3 × E1–E4 × C1–C3. Any classification with a zero
/// coordinate resolves to QM without consulting the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, AsilLevel>", into = "BTreeMap<String, AsilLevel>")]
pub struct AsilTable {
    entries: BTreeMap<(Severity, Exposure, Controllability), AsilLevel>,
}

const SEVERITIES: [Severity; 3] = [Severity::S1, Severity::S2, Severity::S3];
const EXPOSURES: [Exposure; 4] = [Exposure::E1, Exposure::E2, Exposure::E3, Exposure::E4];
const CONTROLLABILITIES: [Controllability; 3] =
    [Controllability::C1, Controllability::C2, Controllability::C3];

fn key_string(s: Severity, e: Exposure, c: Controllability) -> String {
    format!("S{}-E{}-C{}", s as u8, e as u8, c as u8)
}

fn parse_key(key: &str) -> Result<(Severity, Exposure, Controllability), AsilTableError> {
    let bad = || AsilTableError::BadKey(key.to_string());
    let parts: Vec<&str> = key.split('-').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let s = match parts[0] {
        "S1" => Severity::S1,
        "S2" => Severity::S2,
        "S3" => Severity::S3,
        _ => return Err(bad()),
    };
    let e = match parts[1] {
        "E1" => Exposure::E1,
        "E2" => Exposure::E2,
        "E3" => Exposure::E3,
        "E4" => Exposure::E4,
        _ => return Err(bad()),
    };
    let c = match parts[2] {
        "C1" => Controllability::C1,
        "C2" => Controllability::C2,
        "C3" => Controllability::C3,
        _ => return Err(bad()),
    };
    Ok((s, e, c))
}

impl TryFrom<BTreeMap<String, AsilLevel>> for AsilTable {
    type Error = AsilTableError;
    fn try_from(raw: BTreeMap<String, AsilLevel>) -> Result<Self, Self::Error> {
        let mut entries = BTreeMap::new();
        for (key, level) in raw {
            entries.insert(parse_key(&key)?, level);
        }
        let table = AsilTable { entries };
        table.validate()?;
        Ok(table)
    }
}

impl From<AsilTable> for BTreeMap<String, AsilLevel> {
    fn from(table: AsilTable) -> Self {
        table
            .entries
            .into_iter()
            .map(|((s, e, c), level)| (key_string(s, e, c), level))
            .collect()
    }
}

impl AsilTable {
    pub fn validate(&self) -> Result<(), AsilTableError> {
        for s in SEVERITIES {
            for e in EXPOSURES {
                for c in CONTROLLABILITIES {
                    if !self.entries.contains_key(&(s, e, c)) {
                        return Err(AsilTableError::Missing(key_string(s, e, c)));
                    }
                }
            }
        }
        // Raising any one coordinate must never lower the level.
        for (&(s, e, c), &level) in &self.entries {
            let mut neighbors = Vec::new();
            if let Some(s2) = SEVERITIES.iter().find(|x| **x > s) {
                neighbors.push((*s2, e, c));
            }
            if let Some(e2) = EXPOSURES.iter().find(|x| **x > e) {
                neighbors.push((s, *e2, c));
            }
            if let Some(c2) = CONTROLLABILITIES.iter().find(|x| **x > c) {
                neighbors.push((s, e, *c2));
            }
            for up in neighbors {
                if self.entries[&up] < level {
                    return Err(AsilTableError::NotMonotone(
                        key_string(s, e, c),
                        key_string(up.0, up.1, up.2),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&BTreeMap::<String, AsilLevel>::from(self.clone()))
            .expect("table serializes")
    }
}

/// The shipped default determination table.
pub fn default_table() -> AsilTable {
    AsilTable::from_json(include_str!("../../fixtures/asil-table.json"))
        .expect("shipped ASIL table is valid")
}

/// Total lookup: any zero coordinate yields QM, otherwise the table entry.
pub fn asil_lookup(s: Severity, e: Exposure, c: Controllability, table: &AsilTable) -> AsilLevel {
    if s == Severity::S0 || e == Exposure::E0 || c == Controllability::C0 {
        return AsilLevel::QM;
    }
    table.entries[&(s, e, c)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_is_valid_and_total() {
        let table = default_table();
        table.validate().unwrap();
        assert_eq!(
            asil_lookup(Severity::S3, Exposure::E4, Controllability::C3, &table),
            AsilLevel::D
        );
        assert_eq!(
            asil_lookup(Severity::S1, Exposure::E1, Controllability::C1, &table),
            AsilLevel::QM
        );
    }

    #[test]
    fn zero_coordinates_yield_qm() {
        let table = default_table();
        assert_eq!(
            asil_lookup(Severity::S0, Exposure::E4, Controllability::C3, &table),
            AsilLevel::QM
        );
        assert_eq!(
            asil_lookup(Severity::S3, Exposure::E0, Controllability::C3, &table),
            AsilLevel::QM
        );
        assert_eq!(
            asil_lookup(Severity::S3, Exposure::E4, Controllability::C0, &table),
            AsilLevel::QM
        );
    }

    #[test]
    fn monotonicity_violation_rejected() {
        let mut raw: BTreeMap<String, AsilLevel> = default_table().into();
        raw.insert("S3-E4-C3".into(), AsilLevel::QM);
        assert!(matches!(AsilTable::try_from(raw), Err(AsilTableError::NotMonotone(_, _))));
    }

    #[test]
    fn missing_entry_rejected() {
        let mut raw: BTreeMap<String, AsilLevel> = default_table().into();
        raw.remove("S2-E2-C2");
        assert!(matches!(AsilTable::try_from(raw), Err(AsilTableError::Missing(_))));
    }
}
