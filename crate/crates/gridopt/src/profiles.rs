//! Hourly power profiles for loads and generators.
//!
//! Profiles come from a CSV file with a mandatory header
//! `timestamp,element_id,p_kw,q_kvar`. Timestamps are opaque strings matched
//! exactly; one row per element per hour. For generators only `p_kw` is read,
//! the reactive output follows from the phase setting at solve time.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::model::NetworkModel;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("no profile rows for hour {0:?}")]
    MissingHour(String),
    #[error("element {element:?} has no profile at hour {hour:?}")]
    MissingElement { element: String, hour: String },
    #[error("profile row for {element:?} does not match any load or generator")]
    UnknownElement { element: String },
    #[error("load {element:?} has negative active power at hour {hour:?}")]
    NegativeLoad { element: String, hour: String },
}

/// Active/reactive power of one element for one hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSample {
    pub p_kw: f64,
    pub q_kvar: f64,
}

/// All element samples for a single hour.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyProfiles {
    pub hour: String,
    entries: BTreeMap<String, PowerSample>,
}

impl HourlyProfiles {
    pub fn get(&self, element: &str) -> Option<PowerSample> {
        self.entries.get(element).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &PowerSample)> {
        self.entries.iter()
    }

    /// Check coverage against a model: every load and generator must have a
    /// sample, no sample may refer to an unknown element, and load active
    /// power must be non-negative.
    pub fn validate_against(&self, model: &NetworkModel) -> Result<(), ProfileError> {
        for load in &model.loads {
            match self.get(&load.id) {
                None => {
                    return Err(ProfileError::MissingElement {
                        element: load.id.clone(),
                        hour: self.hour.clone(),
                    })
                }
                Some(s) if s.p_kw < 0.0 => {
                    return Err(ProfileError::NegativeLoad {
                        element: load.id.clone(),
                        hour: self.hour.clone(),
                    })
                }
                Some(_) => {}
            }
        }
        for gen in &model.generators {
            if self.get(&gen.id).is_none() {
                return Err(ProfileError::MissingElement {
                    element: gen.id.clone(),
                    hour: self.hour.clone(),
                });
            }
        }
        for element in self.entries.keys() {
            let known = model.loads.iter().any(|l| &l.id == element)
                || model.generators.iter().any(|g| &g.id == element);
            if !known {
                return Err(ProfileError::UnknownElement {
                    element: element.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Read the samples for one hour from a profiles CSV.
pub fn load_profiles(path: &Path, hour: &str) -> Result<HourlyProfiles, ProfileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ProfileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_profiles(&text, hour)
}

/// Parse profile CSV text for one hour.
pub fn parse_profiles(text: &str, hour: &str) -> Result<HourlyProfiles, ProfileError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "timestamp,element_id,p_kw,q_kvar" => {}
        Some((_, header)) => {
            return Err(ProfileError::Malformed {
                line: 1,
                msg: format!(
                    "expected header 'timestamp,element_id,p_kw,q_kvar', found {:?}",
                    header
                ),
            })
        }
        None => {
            return Err(ProfileError::Malformed {
                line: 1,
                msg: "empty file".into(),
            })
        }
    }

    let mut entries = BTreeMap::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(ProfileError::Malformed {
                line: lineno,
                msg: format!("expected 4 columns, found {}", fields.len()),
            });
        }
        if fields[0].trim() != hour {
            continue;
        }
        let element = fields[1].trim().to_string();
        let p_kw: f64 = fields[2].trim().parse().map_err(|_| ProfileError::Malformed {
            line: lineno,
            msg: format!("bad p_kw value {:?}", fields[2]),
        })?;
        let q_kvar: f64 = fields[3].trim().parse().map_err(|_| ProfileError::Malformed {
            line: lineno,
            msg: format!("bad q_kvar value {:?}", fields[3]),
        })?;
        if entries.insert(element.clone(), PowerSample { p_kw, q_kvar }).is_some() {
            return Err(ProfileError::Malformed {
                line: lineno,
                msg: format!("duplicate row for element {:?} at hour {:?}", element, hour),
            });
        }
    }
    if entries.is_empty() {
        return Err(ProfileError::MissingHour(hour.to_string()));
    }
    Ok(HourlyProfiles {
        hour: hour.to_string(),
        entries,
    })
}

/// Total active power absorbed by the loads, in kW. Independent of any
/// breaker or generator setting.
pub fn total_load(model: &NetworkModel, profiles: &HourlyProfiles) -> Result<f64, ProfileError> {
    let mut sum = 0.0;
    for load in &model.loads {
        let sample = profiles
            .get(&load.id)
            .ok_or_else(|| ProfileError::MissingElement {
                element: load.id.clone(),
                hour: profiles.hour.clone(),
            })?;
        sum += sample.p_kw;
    }
    Ok(sum)
}
