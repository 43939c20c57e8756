//! Per-variable trend history: bounded ring buffers with an optional
//! append-only CSV journal.

use std::collections::{BTreeMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

pub const DEFAULT_TREND_CAPACITY: usize = 100_000;
pub const CSV_HEADER: &str = "t_ms,symbol,pv,sp";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendSample {
    pub t: i64,
    pub symbol: String,
    pub pv: f64,
    pub sp: f64,
}

impl TrendSample {
    pub fn csv_line(&self) -> String {
        format!("{},{},{},{}", self.t, self.symbol, self.pv, self.sp)
    }
}

/// Samples for one `(process, symbol)` pair, strictly increasing in `t`.
#[derive(Debug, Default)]
struct Series {
    samples: VecDeque<TrendSample>,
}

pub struct TrendStore {
    capacity: usize,
    series: BTreeMap<(String, String), Series>,
    journal: Option<BufWriter<File>>,
}

impl TrendStore {
    pub fn new(capacity: usize) -> Self {
        TrendStore {
            capacity: capacity.max(1),
            series: BTreeMap::new(),
            journal: None,
        }
    }

    /// Appends every future sample to `path` as CSV; writes the header when
    /// the file is new or empty.
    pub fn with_journal(mut self, path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let empty = file.metadata()?.len() == 0;
        let mut w = BufWriter::new(file);
        if empty {
            writeln!(w, "{CSV_HEADER}")?;
        }
        self.journal = Some(w);
        Ok(self)
    }

    /// Records a sample at `now`, nudged forward when needed so that
    /// timestamps stay strictly increasing. Returns the stored sample.
    pub fn append(&mut self, process: &str, symbol: &str, now: i64, pv: f64, sp: f64) -> TrendSample {
        let series = self
            .series
            .entry((process.to_string(), symbol.to_string()))
            .or_default();
        let t = match series.samples.back() {
            Some(last) if last.t >= now => last.t + 1,
            _ => now,
        };
        let sample = TrendSample {
            t,
            symbol: symbol.to_string(),
            pv,
            sp,
        };
        if series.samples.len() == self.capacity {
            series.samples.pop_front();
        }
        series.samples.push_back(sample.clone());
        if let Some(j) = &mut self.journal {
            if let Err(e) = writeln!(j, "{}", sample.csv_line()) {
                log::warn!("trend journal write failed, disabling it: {e}");
                self.journal = None;
            }
        }
        sample
    }

    pub fn flush(&mut self) {
        if let Some(j) = &mut self.journal {
            let _ = j.flush();
        }
    }

    /// `symbol` alone picks the first process (by name) that has it;
    /// `PROCESS:SYMBOL` names one explicitly.
    fn resolve(&self, key: &str) -> Option<&Series> {
        if let Some((process, symbol)) = key.split_once(':') {
            return self.series.get(&(process.to_string(), symbol.to_string()));
        }
        self.series
            .iter()
            .find(|((_, s), _)| s == key)
            .map(|(_, series)| series)
    }

    /// Samples with `from <= t <= to`, in time order. Unknown symbols give an
    /// empty list.
    pub fn query(&self, key: &str, from: i64, to: i64) -> Vec<TrendSample> {
        let Some(series) = self.resolve(key) else {
            return Vec::new();
        };
        let s = &series.samples;
        let lo = s.partition_point(|x| x.t < from);
        let hi = s.partition_point(|x| x.t <= to);
        if lo >= hi {
            return Vec::new();
        }
        s.range(lo..hi).cloned().collect()
    }

    pub fn len(&self, key: &str) -> usize {
        self.resolve(key).map_or(0, |s| s.samples.len())
    }

    pub fn is_empty(&self) -> bool {
        self.series.values().all(|s| s.samples.is_empty())
    }
}

impl Default for TrendStore {
    fn default() -> Self {
        TrendStore::new(DEFAULT_TREND_CAPACITY)
    }
}

pub fn export_csv(samples: &[TrendSample]) -> String {
    let mut out = String::with_capacity(32 * (samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&s.csv_line());
        out.push('\n');
    }
    out
}
