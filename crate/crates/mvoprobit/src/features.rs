//! Survey staging: assignment of stage-of-change labels from routing
//! questions, merging of fine labels into ordinal stage indices, conversion
//! of trip-frequency bands to midpoints, and the SEI/HHI multimodality
//! indices.

use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Fine stage-of-change labels. The walking/cycling instrument produces
/// PC1, PC2, C, P, A, M; the bikesharing instrument PC, C1, C2, P1, P2, AM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StageLabel {
    PC1,
    PC2,
    PC,
    C,
    C1,
    C2,
    P,
    P1,
    P2,
    A,
    M,
    AM,
}

impl StageLabel {
    pub const ALL: [StageLabel; 12] = [
        StageLabel::PC1,
        StageLabel::PC2,
        StageLabel::PC,
        StageLabel::C,
        StageLabel::C1,
        StageLabel::C2,
        StageLabel::P,
        StageLabel::P1,
        StageLabel::P2,
        StageLabel::A,
        StageLabel::M,
        StageLabel::AM,
    ];

    /// Canonical ordering key: coarse stage rank (PC < C < P < A/M) plus the
    /// sub-label position within the coarse stage.
    pub fn order_key(self) -> (u8, u8) {
        match self {
            StageLabel::PC => (0, 0),
            StageLabel::PC1 => (0, 1),
            StageLabel::PC2 => (0, 2),
            StageLabel::C => (1, 0),
            StageLabel::C1 => (1, 1),
            StageLabel::C2 => (1, 2),
            StageLabel::P => (2, 0),
            StageLabel::P1 => (2, 1),
            StageLabel::P2 => (2, 2),
            StageLabel::AM => (3, 0),
            StageLabel::A => (3, 1),
            StageLabel::M => (3, 2),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StageLabel::PC1 => "PC1",
            StageLabel::PC2 => "PC2",
            StageLabel::PC => "PC",
            StageLabel::C => "C",
            StageLabel::C1 => "C1",
            StageLabel::C2 => "C2",
            StageLabel::P => "P",
            StageLabel::P1 => "P1",
            StageLabel::P2 => "P2",
            StageLabel::A => "A",
            StageLabel::M => "M",
            StageLabel::AM => "AM",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        StageLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::LabelOutsideMap(s.to_string()))
    }
}

/// First routing answer of the walking/cycling instrument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorStatus {
    NeverContemplated,
    Contemplated,
    UsesMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UseDuration {
    UnderOneYear,
    OneYearOrMore,
}

/// Raw answers to the walking/cycling staging questions. Exactly the
/// follow-up matching `behavior_status` must be present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkCycleAnswers {
    pub behavior_status: BehaviorStatus,
    pub realistic: Option<bool>,
    pub expect_near_future: Option<bool>,
    pub duration: Option<UseDuration>,
}

/// Routing: never contemplated -> realistic? no = PC1, yes = PC2;
/// contemplated -> expect soon? no = C, yes = P; uses the mode -> under a
/// year = A, longer = M.
pub fn assign_stage_walk_cycle(a: &WalkCycleAnswers) -> Result<StageLabel> {
    let extraneous = |field: &str| {
        Err(Error::InvalidResponse(format!(
            "{field} answered on a branch that never asks it"
        )))
    };
    match a.behavior_status {
        BehaviorStatus::NeverContemplated => {
            if a.expect_near_future.is_some() {
                return extraneous("expect_near_future");
            }
            if a.duration.is_some() {
                return extraneous("duration");
            }
            match a.realistic {
                Some(false) => Ok(StageLabel::PC1),
                Some(true) => Ok(StageLabel::PC2),
                None => Err(Error::IncompleteResponse(
                    "never-contemplated branch requires the 'realistic' follow-up".into(),
                )),
            }
        }
        BehaviorStatus::Contemplated => {
            if a.realistic.is_some() {
                return extraneous("realistic");
            }
            if a.duration.is_some() {
                return extraneous("duration");
            }
            match a.expect_near_future {
                Some(false) => Ok(StageLabel::C),
                Some(true) => Ok(StageLabel::P),
                None => Err(Error::IncompleteResponse(
                    "contemplated branch requires the 'expect_near_future' follow-up".into(),
                )),
            }
        }
        BehaviorStatus::UsesMode => {
            if a.realistic.is_some() {
                return extraneous("realistic");
            }
            if a.expect_near_future.is_some() {
                return extraneous("expect_near_future");
            }
            match a.duration {
                Some(UseDuration::UnderOneYear) => Ok(StageLabel::A),
                Some(UseDuration::OneYearOrMore) => Ok(StageLabel::M),
                None => Err(Error::IncompleteResponse(
                    "user branch requires the 'duration' follow-up".into(),
                )),
            }
        }
    }
}

/// Raw answers to the bikesharing staging questions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BikeshareAnswers {
    pub weekly_use_expected: bool,
    pub would_contemplate: Option<bool>,
    pub accessible: Option<bool>,
    /// 5-point likelihood of use within six months.
    pub likelihood_6mo: Option<u8>,
}

/// Routing: expected weekly use = AM; otherwise would never contemplate =
/// PC; otherwise the 6-month likelihood (1-2 vs 3-5) crossed with access
/// yields C1/C2/P1/P2.
pub fn assign_stage_bikeshare(a: &BikeshareAnswers) -> Result<StageLabel> {
    let extraneous = |field: &str| {
        Err(Error::InvalidResponse(format!(
            "{field} answered on a branch that never asks it"
        )))
    };
    if a.weekly_use_expected {
        if a.would_contemplate.is_some() {
            return extraneous("would_contemplate");
        }
        if a.accessible.is_some() {
            return extraneous("accessible");
        }
        if a.likelihood_6mo.is_some() {
            return extraneous("likelihood_6mo");
        }
        return Ok(StageLabel::AM);
    }
    match a.would_contemplate {
        None => Err(Error::IncompleteResponse(
            "non-weekly users must answer 'would_contemplate'".into(),
        )),
        Some(false) => {
            if a.accessible.is_some() {
                return extraneous("accessible");
            }
            if a.likelihood_6mo.is_some() {
                return extraneous("likelihood_6mo");
            }
            Ok(StageLabel::PC)
        }
        Some(true) => {
            let accessible = a.accessible.ok_or_else(|| {
                Error::IncompleteResponse("contemplators must answer 'accessible'".into())
            })?;
            let likert = a.likelihood_6mo.ok_or_else(|| {
                Error::IncompleteResponse("contemplators must answer 'likelihood_6mo'".into())
            })?;
            match (likert, accessible) {
                (1..=2, false) => Ok(StageLabel::C1),
                (1..=2, true) => Ok(StageLabel::C2),
                (3..=5, false) => Ok(StageLabel::P1),
                (3..=5, true) => Ok(StageLabel::P2),
                _ => Err(Error::InvalidResponse(format!(
                    "likelihood_6mo must be on the 1-5 scale, got {likert}"
                ))),
            }
        }
    }
}

/// Order-preserving map from fine stage labels to 0-based ordinal stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeMap {
    map: BTreeMap<StageLabel, usize>,
    n_stages: usize,
}

impl MergeMap {
    pub fn new(entries: Vec<(StageLabel, usize)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidMergeMap("map has no entries".into()));
        }
        let mut map = BTreeMap::new();
        for (label, stage) in entries {
            if map.insert(label, stage).is_some() {
                return Err(Error::InvalidMergeMap(format!(
                    "label {} mapped twice",
                    label.as_str()
                )));
            }
        }
        let n_stages = map.values().max().unwrap() + 1;
        // Surjectivity onto 0..n_stages-1.
        for s in 0..n_stages {
            if !map.values().any(|&v| v == s) {
                return Err(Error::InvalidMergeMap(format!(
                    "stage {s} has no source label; stages must be contiguous from 0"
                )));
            }
        }
        // Order preservation over the canonical label order.
        let mut sorted: Vec<(&StageLabel, &usize)> = map.iter().collect();
        sorted.sort_by_key(|(l, _)| l.order_key());
        for w in sorted.windows(2) {
            let ((la, sa), (lb, sb)) = (w[0], w[1]);
            if sa > sb {
                return Err(Error::InvalidMergeMap(format!(
                    "map violates the canonical stage order: {} -> {sa} but {} -> {sb}",
                    la.as_str(),
                    lb.as_str()
                )));
            }
        }
        Ok(MergeMap { map, n_stages })
    }

    pub fn n_stages(&self) -> usize {
        self.n_stages
    }

    pub fn entries(&self) -> impl Iterator<Item = (StageLabel, usize)> + '_ {
        self.map.iter().map(|(l, s)| (*l, *s))
    }

    /// Default 4-stage condensation of the walking/cycling labels.
    pub fn walk_cycle_four_stage() -> Self {
        MergeMap::new(vec![
            (StageLabel::PC1, 0),
            (StageLabel::PC2, 0),
            (StageLabel::C, 1),
            (StageLabel::P, 2),
            (StageLabel::A, 3),
            (StageLabel::M, 3),
        ])
        .expect("static map is valid")
    }

    /// Default 4-stage condensation of the bikesharing labels.
    pub fn bikeshare_four_stage() -> Self {
        MergeMap::new(vec![
            (StageLabel::PC, 0),
            (StageLabel::C1, 1),
            (StageLabel::C2, 1),
            (StageLabel::P1, 2),
            (StageLabel::P2, 2),
            (StageLabel::AM, 3),
        ])
        .expect("static map is valid")
    }

    /// 3-stage walking/cycling condensation merging precontemplation with
    /// contemplation.
    pub fn walk_cycle_three_stage_merge_pc_c() -> Self {
        MergeMap::new(vec![
            (StageLabel::PC1, 0),
            (StageLabel::PC2, 0),
            (StageLabel::C, 0),
            (StageLabel::P, 1),
            (StageLabel::A, 2),
            (StageLabel::M, 2),
        ])
        .expect("static map is valid")
    }

    /// 3-stage walking/cycling condensation merging contemplation with
    /// preparation.
    pub fn walk_cycle_three_stage_merge_c_p() -> Self {
        MergeMap::new(vec![
            (StageLabel::PC1, 0),
            (StageLabel::PC2, 0),
            (StageLabel::C, 1),
            (StageLabel::P, 1),
            (StageLabel::A, 2),
            (StageLabel::M, 2),
        ])
        .expect("static map is valid")
    }

    /// 3-stage bikesharing condensation merging precontemplation with
    /// contemplation.
    pub fn bikeshare_three_stage_merge_pc_c() -> Self {
        MergeMap::new(vec![
            (StageLabel::PC, 0),
            (StageLabel::C1, 0),
            (StageLabel::C2, 0),
            (StageLabel::P1, 1),
            (StageLabel::P2, 1),
            (StageLabel::AM, 2),
        ])
        .expect("static map is valid")
    }

    /// 3-stage bikesharing condensation merging contemplation with
    /// preparation ("pre-action").
    pub fn bikeshare_three_stage_merge_c_p() -> Self {
        MergeMap::new(vec![
            (StageLabel::PC, 0),
            (StageLabel::C1, 1),
            (StageLabel::C2, 1),
            (StageLabel::P1, 1),
            (StageLabel::P2, 1),
            (StageLabel::AM, 2),
        ])
        .expect("static map is valid")
    }

    /// Identity map over the six walking/cycling labels.
    pub fn walk_cycle_six_stage() -> Self {
        MergeMap::new(vec![
            (StageLabel::PC1, 0),
            (StageLabel::PC2, 1),
            (StageLabel::C, 2),
            (StageLabel::P, 3),
            (StageLabel::A, 4),
            (StageLabel::M, 5),
        ])
        .expect("static map is valid")
    }

    /// Named presets available from configuration.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "walk_cycle_4" => Ok(Self::walk_cycle_four_stage()),
            "bikeshare_4" => Ok(Self::bikeshare_four_stage()),
            "walk_cycle_3_merge_pc_c" => Ok(Self::walk_cycle_three_stage_merge_pc_c()),
            "walk_cycle_3_merge_c_p" => Ok(Self::walk_cycle_three_stage_merge_c_p()),
            "bikeshare_3_merge_pc_c" => Ok(Self::bikeshare_three_stage_merge_pc_c()),
            "bikeshare_3_merge_c_p" => Ok(Self::bikeshare_three_stage_merge_c_p()),
            "walk_cycle_6" => Ok(Self::walk_cycle_six_stage()),
            other => Err(Error::InvalidMergeMap(format!(
                "unknown merge-map preset {other:?}"
            ))),
        }
    }
}

/// Ordinal stage of a fine label under a merge map.
pub fn merge_stages(label: StageLabel, map: &MergeMap) -> Result<usize> {
    map.map
        .get(&label)
        .copied()
        .ok_or_else(|| Error::LabelOutsideMap(label.as_str().to_string()))
}

/// Frequency-band label to trips-per-week midpoint map. The default bands
/// are an artifact convention (override in configuration if the survey used
/// different ones).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMidpoints {
    pub bands: Vec<(String, f64)>,
}

impl Default for BandMidpoints {
    fn default() -> Self {
        BandMidpoints {
            bands: vec![
                ("0".into(), 0.0),
                ("1–2".into(), 1.5),
                ("3–4".into(), 3.5),
                ("5–6".into(), 5.5),
                ("7+".into(), 8.0),
            ],
        }
    }
}

impl BandMidpoints {
    pub fn validate(&self) -> Result<()> {
        for (i, (name, v)) in self.bands.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "band {name:?} midpoint must be a nonnegative number, got {v}"
                )));
            }
            if self.bands[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate band label {name:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn midpoint(&self, band: &str) -> Result<f64> {
        self.bands
            .iter()
            .find(|(n, _)| n == band)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::UnknownBand(band.to_string()))
    }
}

/// Trips-per-week midpoint of a frequency band.
pub fn band_to_midpoint(band: &str, map: &BandMidpoints) -> Result<f64> {
    map.midpoint(band)
}

/// Modified Shannon entropy index over per-mode trip frequencies:
/// SEI = sum over modes of f_i/(n M) * (1 + ln(M / f_i)), with M the maximum
/// frequency. Zero-frequency modes contribute nothing (the continuous limit
/// of x(1 - ln x) at zero), so the index lives in (0, 1] and reaches 1
/// exactly when every mode is used equally.
pub fn sei(frequencies: &[f64]) -> Result<f64> {
    if frequencies.is_empty() {
        return Err(Error::UndefinedIndex("no modes supplied".into()));
    }
    if frequencies.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::UndefinedIndex(
            "frequencies must be finite and nonnegative".into(),
        ));
    }
    let m = frequencies.iter().cloned().fold(0.0f64, f64::max);
    if m <= 0.0 {
        return Err(Error::UndefinedIndex(
            "at least one mode must have positive frequency".into(),
        ));
    }
    let n = frequencies.len() as f64;
    let mut total = 0.0;
    for &f in frequencies {
        if f > 0.0 {
            total += f / (n * m) * (1.0 + (m / f).ln());
        }
    }
    Ok(total)
}

/// Herfindahl–Hirschman concentration index of the mode shares.
pub fn hhi(frequencies: &[f64]) -> Result<f64> {
    if frequencies.is_empty() {
        return Err(Error::UndefinedIndex("no modes supplied".into()));
    }
    if frequencies.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::UndefinedIndex(
            "frequencies must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = frequencies.iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedIndex(
            "at least one mode must have positive frequency".into(),
        ));
    }
    Ok(frequencies.iter().map(|f| (f / total) * (f / total)).sum())
}
