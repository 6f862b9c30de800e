//! Ground-truth CSV: `video_id,start_s,end_s,verb,noun` with a header row.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::GroundTruthInstance;
use crate::interval::Interval;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    video_id: String,
    start_s: f64,
    end_s: f64,
    verb: usize,
    noun: usize,
}

pub fn parse_ground_truth(text: &str) -> Result<Vec<GroundTruthInstance>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let expected = ["video_id", "start_s", "end_s", "verb", "noun"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::SchemaMismatch(format!(
            "ground-truth header must be `{}`",
            expected.join(",")
        )));
    }
    reader
        .deserialize::<Row>()
        .map(|row| {
            let row = row.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let interval = Interval::new(row.start_s, row.end_s).map_err(|_| {
                Error::SchemaMismatch(format!(
                    "{}: ground-truth segment ({}, {}) is empty",
                    row.video_id, row.start_s, row.end_s
                ))
            })?;
            Ok(GroundTruthInstance {
                video_id: row.video_id,
                interval,
                verb: row.verb,
                noun: row.noun,
            })
        })
        .collect()
}

pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<Vec<GroundTruthInstance>> {
    parse_ground_truth(&std::fs::read_to_string(path)?)
}

pub fn write_ground_truth(gts: &[GroundTruthInstance]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for g in gts {
        writer
            .serialize(Row {
                video_id: g.video_id.clone(),
                start_s: g.interval.start,
                end_s: g.interval.end,
                verb: g.verb,
                noun: g.noun,
            })
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}
