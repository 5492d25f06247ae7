//! Per-dimension leaderboards from pairwise verdicts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::aqs::Dimension;
use crate::error::EvalError;
use crate::trueskill::{trueskill_update_pair, Rating, TrueSkill};

/// Reported RDR = μ − kσ + kσ0, so an unrated method scores μ0.
pub const RDR_K: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub dimension: Dimension,
    pub image_a: String,
    pub image_b: String,
    /// Method that produced each image; filled in from the study registry
    /// when a client omits them.
    #[serde(default)]
    pub method_a: String,
    #[serde(default)]
    pub method_b: String,
    pub winner: Side,
    #[serde(default)]
    pub judge: String,
    #[serde(default)]
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
}

impl ComparisonRecord {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.image_a == self.image_b {
            return Err(EvalError::InvalidRecord("image_a equals image_b".into()));
        }
        if self.method_a.is_empty() || self.method_b.is_empty() {
            return Err(EvalError::InvalidRecord("missing method".into()));
        }
        if self.method_a == self.method_b {
            return Err(EvalError::InvalidRecord("both images come from the same method".into()));
        }
        Ok(())
    }

    pub fn winner_loser(&self) -> (&str, &str) {
        match self.winner {
            Side::A => (&self.method_a, &self.method_b),
            Side::B => (&self.method_b, &self.method_a),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub dimension: Dimension,
    pub rank: usize,
    pub method: String,
    pub mu: f64,
    pub sigma: f64,
    /// μ − 3σ, the sort key.
    pub conservative: f64,
    pub rdr: f64,
    pub wins: usize,
    pub losses: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub dimensions: BTreeMap<Dimension, Vec<LeaderboardRow>>,
}

impl Leaderboard {
    pub fn order(&self, dim: Dimension) -> Vec<&str> {
        self.dimensions
            .get(&dim)
            .map(|rows| rows.iter().map(|r| r.method.as_str()).collect())
            .unwrap_or_default()
    }

    /// One JSON object per row.
    pub fn to_json_lines(&self) -> String {
        self.dimensions
            .values()
            .flatten()
            .map(|r| serde_json::to_string(r).expect("row serializes") + "\n")
            .collect()
    }

    pub fn record_count(&self) -> usize {
        self.dimensions
            .values()
            .flatten()
            .map(|r| r.wins)
            .sum()
    }
}

/// Leaderboards for every dimension over the methods named in `records`.
pub fn rank_methods(records: &[ComparisonRecord], params: &TrueSkill) -> Result<Leaderboard, EvalError> {
    let methods: BTreeSet<String> = records
        .iter()
        .flat_map(|r| [r.method_a.clone(), r.method_b.clone()])
        .collect();
    rank_methods_with(&methods, records, params)
}

/// Folds the records of each dimension in timestamp order (stable for
/// equal timestamps) and sorts by μ − 3σ, ties alphabetical. Methods
/// without records keep the prior.
pub fn rank_methods_with(
    methods: &BTreeSet<String>,
    records: &[ComparisonRecord],
    params: &TrueSkill,
) -> Result<Leaderboard, EvalError> {
    for r in records {
        r.validate()?;
    }
    let mut board = Leaderboard::default();
    for dim in Dimension::ALL {
        let mut recs: Vec<&ComparisonRecord> = records.iter().filter(|r| r.dimension == dim).collect();
        recs.sort_by_key(|r| r.timestamp);
        let mut ratings: BTreeMap<&str, (Rating, usize, usize)> =
            methods.iter().map(|m| (m.as_str(), (params.prior(), 0, 0))).collect();
        for r in recs {
            let (w, l) = r.winner_loser();
            let rw = ratings.get(w).map_or(params.prior(), |e| e.0);
            let rl = ratings.get(l).map_or(params.prior(), |e| e.0);
            let (nw, nl) = trueskill_update_pair(rw, rl, params);
            let ew = ratings.entry(w).or_insert((params.prior(), 0, 0));
            ew.0 = nw;
            ew.1 += 1;
            let el = ratings.entry(l).or_insert((params.prior(), 0, 0));
            el.0 = nl;
            el.2 += 1;
        }
        let mut rows: Vec<LeaderboardRow> = ratings
            .into_iter()
            .map(|(m, (r, wins, losses))| LeaderboardRow {
                dimension: dim,
                rank: 0,
                method: m.to_string(),
                mu: r.mu,
                sigma: r.sigma,
                conservative: r.conservative(),
                rdr: r.mu - RDR_K * r.sigma + RDR_K * params.sigma0,
                wins,
                losses,
            })
            .collect();
        rows.sort_by(|a, b| b.conservative.total_cmp(&a.conservative).then_with(|| a.method.cmp(&b.method)));
        for (i, r) in rows.iter_mut().enumerate() {
            r.rank = i + 1;
        }
        board.dimensions.insert(dim, rows);
    }
    Ok(board)
}

/// Parses JSON lines, skipping blank lines.
pub fn read_records_jsonl(text: &str) -> Result<Vec<ComparisonRecord>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| EvalError::InvalidRecord(format!("line {}: {e}", i + 1))))
        .collect()
}

pub fn write_records_jsonl(records: &[ComparisonRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}
