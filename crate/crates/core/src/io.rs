//! JSON Lines tracklet files.
//!
//! One record per ST-HOI tracklet:
//!
//! ```json
//! {"video": "v1", "track_id": 3, "interaction": 12,
//!  "frames": [{"second": 0, "human": [x, y, w, h], "score": 0.9,
//!              "objects": [[x, y, w, h]]}]}
//! ```
//!
//! `interaction: 0` marks a person that is tracked but performs no labelled
//! interaction. Frames may add `human_tube` and `object_tubes` holding every
//! frame of the second; their first box must equal `human` / the object box.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, SecondIndex, Tube};
use crate::tracklet::{split_contiguous, HoiFrame, InteractionId, StHoiTracklet, NUM_INTERACTIONS};
use crate::tracking::TrackSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub second: u32,
    pub human: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_tube: Option<Vec<[f64; 4]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default)]
    pub objects: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_tubes: Option<Vec<Vec<[f64; 4]>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackletRecord {
    pub video: String,
    #[serde(deserialize_with = "track_id_string")]
    pub track_id: String,
    pub interaction: u32,
    pub frames: Vec<FrameRecord>,
}

fn track_id_string<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Signed(i64),
        Unsigned(u64),
    }
    Ok(match Raw::deserialize(d)? {
        Raw::Text(s) => s,
        Raw::Signed(n) => n.to_string(),
        Raw::Unsigned(n) => n.to_string(),
    })
}

/// Which side of the evaluation a file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    GroundTruth,
    Prediction,
}

fn bbox(raw: [f64; 4]) -> Result<BBox<f64>> {
    let [x, y, w, h] = raw;
    BBox::new(x, y, w, h)
}

fn tube(first: [f64; 4], all: Option<&Vec<[f64; 4]>>) -> Result<Tube<f64>> {
    match all {
        None => Ok(Tube::single(bbox(first)?)),
        Some(boxes) => {
            if boxes.first() != Some(&first) {
                return Err(Error::invalid("tube must start with the sampled box"));
            }
            Tube::new(boxes.iter().map(|&b| bbox(b)).collect::<Result<_>>()?)
        }
    }
}

impl FrameRecord {
    pub fn to_frame(&self) -> Result<HoiFrame<f64>> {
        let score = self.score.unwrap_or(1.0);
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::invalid(format!("score {score} outside [0, 1]")));
        }
        if let Some(t) = &self.object_tubes {
            if t.len() != self.objects.len() {
                return Err(Error::invalid("object_tubes must list one tube per object"));
            }
        }
        let objects = self
            .objects
            .iter()
            .enumerate()
            .map(|(k, &o)| tube(o, self.object_tubes.as_ref().map(|t| &t[k])))
            .collect::<Result<_>>()?;
        Ok(HoiFrame {
            second: SecondIndex(self.second),
            human: tube(self.human, self.human_tube.as_ref())?,
            score,
            objects,
        })
    }
}

impl TrackletRecord {
    pub fn validate(&self, role: Role) -> Result<()> {
        if self.video.is_empty() {
            return Err(Error::invalid("empty video id"));
        }
        if self.interaction as usize > NUM_INTERACTIONS {
            return Err(Error::invalid(format!("interaction {} outside 0..=51", self.interaction)));
        }
        if self.frames.is_empty() {
            return Err(Error::invalid("record has no frames"));
        }
        for w in self.frames.windows(2) {
            if w[1].second <= w[0].second {
                return Err(Error::invalid("frame seconds must strictly increase"));
            }
        }
        for f in &self.frames {
            f.to_frame()?;
            if role == Role::GroundTruth && self.interaction > 0 && f.objects.is_empty() {
                return Err(Error::invalid(format!("ground truth second {} has no object box", f.second)));
            }
        }
        Ok(())
    }

    /// Interaction class, `None` for tracking-only records.
    pub fn interaction_id(&self) -> Option<InteractionId> {
        (self.interaction > 0).then(|| InteractionId::new(self.interaction).expect("validated"))
    }

    /// Contiguous ST-HOI tracklets of this record; empty for tracking-only ones.
    pub fn tracklets(&self) -> Result<Vec<StHoiTracklet<f64>>> {
        let Some(class) = self.interaction_id() else {
            return Ok(Vec::new());
        };
        let frames = self.frames.iter().map(FrameRecord::to_frame).collect::<Result<Vec<_>>>()?;
        Ok(split_contiguous(&self.track_id, class, frames))
    }
}

/// Reads and validates a JSON Lines file. Blank lines are skipped; errors
/// carry the 1-based line number.
pub fn read_records(input: impl BufRead, role: Role) -> Result<Vec<TrackletRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: i + 1, message };
        let rec: TrackletRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        rec.validate(role).map_err(|e| parse_err(e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_records<'a>(mut out: impl Write, records: impl IntoIterator<Item = &'a TrackletRecord>) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Records grouped by video id.
pub fn group_by_video(records: &[TrackletRecord]) -> BTreeMap<&str, Vec<&TrackletRecord>> {
    let mut map: BTreeMap<&str, Vec<&TrackletRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.video.as_str()).or_default().push(r);
    }
    map
}

/// Per-second human boxes of every track in the given records.
pub fn human_tracks<'a>(records: impl IntoIterator<Item = &'a TrackletRecord>) -> Result<TrackSet<f64>> {
    let mut set = TrackSet::new();
    for r in records {
        for f in &r.frames {
            set.insert(r.track_id.clone(), SecondIndex(f.second), bbox(f.human)?);
        }
    }
    Ok(set)
}
