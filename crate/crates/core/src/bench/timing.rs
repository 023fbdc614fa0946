use std::time::{Duration, Instant};

use super::BenchError;

/// Phase of a benchmark run. Only [`Section::Update`] counts as wall time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Section {
    Generate,
    Init,
    Update,
    Oracle,
}

/// Ordered record of the timed sections of one run.
#[derive(Clone, Debug, Default)]
pub struct Timeline {
    spans: Vec<(Section, Instant, Instant)>,
}

impl Timeline {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs `f` as one section.
    pub fn time<T>(&mut self, section: Section, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        let end = Instant::now();
        self.spans.push((section, start, end));
        out
    }

    pub fn record(&mut self, section: Section, start: Instant, end: Instant) {
        self.spans.push((section, start, end));
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn count(&self, section: Section) -> usize {
        self.spans.iter().filter(|s| s.0 == section).count()
    }

    pub fn total(&self, section: Section) -> Duration {
        self.spans.iter().filter(|s| s.0 == section).map(|s| s.2 - s.1).sum()
    }

    /// Checks that no two sections overlap in time.
    pub fn check_disjoint(&self) -> Result<(), BenchError> {
        let mut sorted: Vec<&(Section, Instant, Instant)> = self.spans.iter().collect();
        sorted.sort_by_key(|s| s.1);
        for w in sorted.windows(2) {
            if w[1].1 < w[0].2 {
                return Err(BenchError::TimingOverlap(format!("{:?} starts before {:?} ends", w[1].0, w[0].0)));
            }
        }
        Ok(())
    }
}
