//! Append-only feedback log with a single writer thread.
//!
//! Handlers send events through a bounded queue and wait for the writer's
//! acknowledgement, so an accepted event is on disk as one whole line. The
//! writer stamps events itself, which keeps timestamps non-decreasing in
//! file order.

use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::{mpsc, oneshot};

use crate::jsonl::open_sidecar;
use crate::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Up,
    Down,
}

/// Body of `POST /api/feedback`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackRequest {
    #[serde(default)]
    pub query_text: String,
    pub record_id: String,
    pub verdict: Verdict,
}

/// One log line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub timestamp: DateTime<Utc>,
    pub query_text: String,
    pub record_id: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeedbackError {
    #[error("{0}")]
    Invalid(String),
    #[error("feedback log is closed")]
    Closed,
    #[error("feedback log write failed: {0}")]
    Write(String),
}

type Job = (
    FeedbackRequest,
    oneshot::Sender<Result<FeedbackEvent, String>>,
);

/// Handle to the appender; clones share the same writer.
#[derive(Clone)]
pub struct FeedbackLog {
    tx: mpsc::Sender<Job>,
}

impl FeedbackLog {
    /// Open (or create) the log and start the writer thread. A torn final
    /// line left by a crash is removed first.
    pub fn open(path: &Path, capacity: usize) -> Result<Self, ServiceError> {
        let (existing, mut sidecar) = open_sidecar::<FeedbackEvent>(path)?;
        let mut last = existing.last().map(|e| e.timestamp);
        let (tx, mut rx) = mpsc::channel::<Job>(capacity.max(1));
        std::thread::Builder::new()
            .name("feedback-appender".into())
            .spawn(move || {
                while let Some((request, ack)) = rx.blocking_recv() {
                    let now = Utc::now();
                    let timestamp = last.map_or(now, |prev| prev.max(now));
                    let event = FeedbackEvent {
                        timestamp,
                        query_text: request.query_text,
                        record_id: request.record_id,
                        verdict: request.verdict,
                    };
                    let result = sidecar
                        .append(&event)
                        .map(|()| event)
                        .map_err(|e| e.to_string());
                    if result.is_ok() {
                        last = Some(timestamp);
                    } else {
                        tracing::error!(error = ?result.as_ref().err(), "feedback append failed");
                    }
                    let _ = ack.send(result);
                }
            })
            .map_err(|e| ServiceError::io(path, e))?;
        Ok(Self { tx })
    }

    /// Queue an event and wait until it is written.
    pub async fn record(&self, request: FeedbackRequest) -> Result<FeedbackEvent, FeedbackError> {
        if request.record_id.trim().is_empty() {
            return Err(FeedbackError::Invalid("record_id must not be empty".into()));
        }
        let (ack_tx, ack_rx) = oneshot::channel();
        self.tx
            .send((request, ack_tx))
            .await
            .map_err(|_| FeedbackError::Closed)?;
        ack_rx
            .await
            .map_err(|_| FeedbackError::Closed)?
            .map_err(FeedbackError::Write)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jsonl::read_jsonl;

    fn request(id: &str, verdict: Verdict) -> FeedbackRequest {
        FeedbackRequest {
            query_text: "q".into(),
            record_id: id.into(),
            verdict,
        }
    }

    #[tokio::test]
    async fn appends_and_resumes_after_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fb/log.jsonl");
        let log = FeedbackLog::open(&path, 4).unwrap();
        let a = log.record(request("r1", Verdict::Up)).await.unwrap();
        let b = log.record(request("r2", Verdict::Down)).await.unwrap();
        assert!(a.timestamp <= b.timestamp);
        drop(log);

        let mut bytes = std::fs::read(&path).unwrap();
        bytes.extend_from_slice(b"{\"timestamp\":\"20");
        std::fs::write(&path, bytes).unwrap();
        let log = FeedbackLog::open(&path, 4).unwrap();
        let c = log.record(request("r3", Verdict::Up)).await.unwrap();
        assert!(c.timestamp >= b.timestamp);
        let events: Vec<FeedbackEvent> = read_jsonl(&path).unwrap();
        assert_eq!(
            events
                .iter()
                .map(|e| e.record_id.as_str())
                .collect::<Vec<_>>(),
            ["r1", "r2", "r3"]
        );
    }

    #[tokio::test]
    async fn empty_record_id_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let log = FeedbackLog::open(&dir.path().join("log.jsonl"), 1).unwrap();
        let err = log.record(request(" ", Verdict::Up)).await.unwrap_err();
        assert!(matches!(err, FeedbackError::Invalid(_)));
    }

    #[test]
    fn verdict_wire_names() {
        let r: FeedbackRequest =
            serde_json::from_str(r#"{"query_text":"x","record_id":"a#1","verdict":"down"}"#)
                .unwrap();
        assert_eq!(r.verdict, Verdict::Down);
        assert!(
            serde_json::from_str::<FeedbackRequest>(r#"{"record_id":"a","verdict":"meh"}"#)
                .is_err()
        );
        assert!(serde_json::from_str::<FeedbackRequest>(
            r#"{"record_id":"a","verdict":"up","x":1}"#
        )
        .is_err());
    }
}
