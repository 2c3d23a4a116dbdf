//! Non-fatal diagnostics collected while processing a corpus.

use serde::{Deserialize, Serialize};

/// One warning record, written to the sidecar JSONL log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub paper_id: String,
    pub kind: String,
    pub offset: Option<usize>,
    pub detail: String,
}

impl Diagnostic {
    pub fn new(paper_id: impl Into<String>, kind: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            paper_id: paper_id.into(),
            kind: kind.into(),
            offset: None,
            detail: detail.into(),
        }
    }

    pub fn at(mut self, offset: usize) -> Self {
        self.offset = Some(offset);
        self
    }
}
