//! A judging study: registered images, the comparison schedule per
//! dimension, and the verdicts received so far.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::aqs::Dimension;
use crate::error::EvalError;
use crate::rank::{rank_methods_with, ComparisonRecord, Leaderboard};
use crate::schedule::{schedule_comparisons, ScheduledPair};
use crate::trueskill::TrueSkill;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Method → image ids.
    pub images: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Study {
    pub config: StudyConfig,
    image_method: BTreeMap<String, String>,
    pub schedule: Vec<ScheduledPair>,
    pub records: Vec<ComparisonRecord>,
    judged: BTreeSet<String>,
    pub params: TrueSkill,
}

impl Study {
    /// An empty study has no images and no schedule; verdicts are refused.
    pub fn new(config: StudyConfig) -> Result<Self, EvalError> {
        let mut image_method = BTreeMap::new();
        for (m, ids) in &config.images {
            for id in ids {
                if image_method.insert(id.clone(), m.clone()).is_some() {
                    return Err(EvalError::InvalidRecord(format!("image {id} listed more than once")));
                }
            }
        }
        let mut schedule = Vec::new();
        if !config.images.is_empty() {
            for dim in Dimension::ALL {
                schedule.extend(schedule_comparisons(&config.images, dim, config.seed)?);
            }
        }
        Ok(Study {
            config,
            image_method,
            schedule,
            records: Vec::new(),
            judged: BTreeSet::new(),
            params: TrueSkill::default(),
        })
    }

    pub fn methods(&self) -> BTreeSet<String> {
        self.config.images.keys().cloned().collect()
    }

    fn method_of(&self, image: &str) -> Result<&String, EvalError> {
        self.image_method
            .get(image)
            .ok_or_else(|| EvalError::UnknownImage(image.to_string()))
    }

    /// Resolves methods, rejects unknown images, mismatched pair ids and
    /// repeated verdicts, then stores the record. Records without a
    /// timestamp are stamped with their arrival order.
    pub fn record_verdict(&mut self, mut rec: ComparisonRecord) -> Result<&ComparisonRecord, EvalError> {
        let ma = self.method_of(&rec.image_a)?.clone();
        let mb = self.method_of(&rec.image_b)?.clone();
        for (given, known) in [(&mut rec.method_a, ma), (&mut rec.method_b, mb)] {
            if given.is_empty() {
                *given = known;
            } else if *given != known {
                return Err(EvalError::InvalidRecord(format!("method {given} does not match the registry")));
            }
        }
        rec.validate()?;
        if let Some(pid) = &rec.pair_id {
            let pair = self
                .schedule
                .iter()
                .find(|p| &p.pair_id == pid)
                .ok_or_else(|| EvalError::UnknownImage(pid.clone()))?;
            let same = pair.dimension == rec.dimension
                && ((pair.image_a == rec.image_a && pair.image_b == rec.image_b)
                    || (pair.image_a == rec.image_b && pair.image_b == rec.image_a));
            if !same {
                return Err(EvalError::InvalidRecord(format!("verdict does not match pair {pid}")));
            }
            if self.judged.contains(pid) {
                return Err(EvalError::DuplicateVerdict(pid.clone()));
            }
        } else if self.records.contains(&rec) {
            return Err(EvalError::DuplicateVerdict(format!("{} vs {}", rec.image_a, rec.image_b)));
        }
        if rec.timestamp == 0 {
            rec.timestamp = self.records.len() as u64 + 1;
        }
        if let Some(pid) = &rec.pair_id {
            self.judged.insert(pid.clone());
        }
        self.records.push(rec);
        Ok(self.records.last().expect("just pushed"))
    }

    /// Scheduled pairs still awaiting a verdict.
    pub fn pending(&self) -> impl Iterator<Item = &ScheduledPair> {
        self.schedule.iter().filter(|p| !self.judged.contains(&p.pair_id))
    }

    pub fn leaderboard(&self) -> Leaderboard {
        rank_methods_with(&self.methods(), &self.records, &self.params).expect("records were validated on entry")
    }
}
