//! Event log: one CSV row per event with a JSON detail column.

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Breakdown, Scheme};
use crate::error::{Error, Result};
use crate::tracking::Maneuver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Start,
    Step,
    Handover,
    Warning,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Start => "start",
            EventKind::Step => "step",
            EventKind::Handover => "handover",
            EventKind::Warning => "warning",
        }
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "start" => Ok(EventKind::Start),
            "step" => Ok(EventKind::Step),
            "handover" => Ok(EventKind::Handover),
            "warning" => Ok(EventKind::Warning),
            other => Err(format!("unknown event kind `{other}`")),
        }
    }
}

/// Run metadata, first row of every log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartDetail {
    pub route: String,
    pub seed: u64,
    pub value: u32,
    pub rsrp_offset_db: f64,
    pub ctt: u32,
    pub ttt_periods: u32,
    pub duration_s: f64,
    pub dt_s: f64,
    pub bits_per_block: u32,
}

/// Serving-link record of one prediction interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepDetail {
    pub blocked: bool,
    pub rsrp_dbm: f64,
    pub snr_db: f64,
    pub ber: f64,
    pub beam_theta: f64,
    pub beam_phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codebook_beam: Option<usize>,
    pub truth_maneuver: Maneuver,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandoverDetail {
    pub trigger_time: f64,
    pub command_time: f64,
    pub interruption_start: f64,
    pub interruption_end: f64,
    /// Component durations in ms, rounded to 3 decimals.
    pub breakdown_ms: Breakdown,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominant_maneuver: Option<Maneuver>,
}

impl HandoverDetail {
    pub fn interruption_s(&self) -> f64 {
        self.interruption_end - self.interruption_start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub kind: EventKind,
    pub scheme: Scheme,
    pub serving: String,
    pub target: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

const HEADER: [&str; 6] = ["t", "kind", "scheme", "serving", "target", "detail"];

impl EventLog {
    pub fn push<D: Serialize>(
        &mut self,
        t: f64,
        kind: EventKind,
        scheme: Scheme,
        serving: &str,
        target: &str,
        detail: &D,
    ) -> Result<()> {
        self.records.push(EventRecord {
            t,
            kind,
            scheme,
            serving: serving.to_string(),
            target: target.to_string(),
            detail: serde_json::to_string(detail)?,
        });
        Ok(())
    }

    pub fn start(&self) -> Result<StartDetail> {
        let first = self
            .records
            .first()
            .filter(|r| r.kind == EventKind::Start)
            .ok_or_else(|| Error::Log { line: 2, message: "log does not begin with a start record".into() })?;
        Ok(serde_json::from_str(&first.detail)?)
    }

    pub fn scheme(&self) -> Option<Scheme> {
        self.records.first().map(|r| r.scheme)
    }

    pub fn steps(&self) -> Result<Vec<(f64, StepDetail)>> {
        self.records
            .iter()
            .filter(|r| r.kind == EventKind::Step)
            .map(|r| Ok((r.t, serde_json::from_str(&r.detail)?)))
            .collect()
    }

    pub fn handovers(&self) -> Result<Vec<(&EventRecord, HandoverDetail)>> {
        self.records
            .iter()
            .filter(|r| r.kind == EventKind::Handover)
            .map(|r| Ok((r, serde_json::from_str(&r.detail)?)))
            .collect()
    }

    pub fn warnings(&self) -> impl Iterator<Item = &EventRecord> {
        self.records.iter().filter(|r| r.kind == EventKind::Warning)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(HEADER)?;
        for r in &self.records {
            out.write_record([
                r.t.to_string().as_str(),
                r.kind.as_str(),
                r.scheme.as_str(),
                &r.serving,
                &r.target,
                &r.detail,
            ])?;
        }
        out.flush().map_err(|e| Error::io("<event log>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Parses a log; malformed rows are reported with their line number.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = reader.headers().map_err(|e| Error::Log { line: 1, message: e.to_string() })?;
        if header.iter().ne(HEADER) {
            return Err(Error::Log { line: 1, message: format!("expected header {}", HEADER.join(",")) });
        }
        let mut records = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                Error::Log { line, message: e.to_string() }
            })?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let bad = |message: String| Error::Log { line, message };
            let t = row[0].parse::<f64>().map_err(|e| bad(format!("t: {e}")))?;
            let kind = row[1].parse::<EventKind>().map_err(bad)?;
            let scheme = row[2].parse::<Scheme>().map_err(bad)?;
            let detail = row[5].to_string();
            let check = match kind {
                EventKind::Start => serde_json::from_str::<StartDetail>(&detail).map(drop),
                EventKind::Step => serde_json::from_str::<StepDetail>(&detail).map(drop),
                EventKind::Handover => serde_json::from_str::<HandoverDetail>(&detail).map(drop),
                EventKind::Warning => serde_json::from_str::<serde_json::Value>(&detail).map(drop),
            };
            check.map_err(|e| bad(format!("detail: {e}")))?;
            if records.is_empty() && kind != EventKind::Start {
                return Err(bad("first record must be a start record".into()));
            }
            records.push(EventRecord {
                t,
                kind,
                scheme,
                serving: row[3].to_string(),
                target: row[4].to_string(),
                detail,
            });
        }
        if records.is_empty() {
            return Err(Error::Log { line: 2, message: "log has no records".into() });
        }
        Ok(Self { records })
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EventLog {
        let mut log = EventLog::default();
        let start = StartDetail {
            route: "r1".into(),
            seed: 7,
            value: 4,
            rsrp_offset_db: 1.0,
            ctt: 4,
            ttt_periods: 0,
            duration_s: 40.0,
            dt_s: 0.02,
            bits_per_block: 8448,
        };
        log.push(0.0, EventKind::Start, Scheme::Distance, "g1", "", &start).unwrap();
        let step = StepDetail {
            blocked: false,
            rsrp_dbm: -61.123456789,
            snr_db: 0.1 + 0.2,
            ber: 1.2345e-7,
            beam_theta: 0.3,
            beam_phi: -0.1,
            codebook_beam: None,
            truth_maneuver: Maneuver::Straight,
            probabilities: Some([0.75, 0.125, 0.125]),
        };
        log.push(0.02, EventKind::Step, Scheme::Distance, "g1", "", &step).unwrap();
        log
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let log = sample();
        let text = log.to_csv_string().unwrap();
        let back = EventLog::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.steps().unwrap()[0].1.snr_db, 0.1 + 0.2);
    }

    #[test]
    fn truncated_row_names_line() {
        let text = sample().to_csv_string().unwrap();
        let cut = &text[..text.len() - 20];
        match EventLog::read_csv(cut.as_bytes()) {
            Err(Error::Log { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected log error, got {other:?}"),
        }
    }

    #[test]
    fn bad_kind_names_line() {
        let text = sample().to_csv_string().unwrap().replace(",step,", ",stepp,");
        match EventLog::read_csv(text.as_bytes()) {
            Err(Error::Log { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("stepp"));
            }
            other => panic!("expected log error, got {other:?}"),
        }
    }
}
