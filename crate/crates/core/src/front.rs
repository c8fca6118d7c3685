//! Non-dominated strategy sets and the front file format.
//!
//! Front files are CSV with columns `seed,chromosome,strategy_text,time,score`.
//! Baseline fronts leave `chromosome` empty. Reals are written in Rust's
//! shortest round-trip form, so reading a file back yields identical values.

use std::cmp::Ordering;
use std::fs;
use std::io;
use std::path::Path;

use serde::Deserialize;

use crate::genome::Chromosome;
use crate::nsga2::dominates;
use crate::objectives::ObjectivePair;

#[derive(Debug, Clone, PartialEq)]
pub struct FrontEntry {
    pub chromosome: Option<Chromosome>,
    pub strategy_text: String,
    pub objectives: ObjectivePair,
}

/// A mutually non-dominated set with no two members sharing an objective pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Front {
    entries: Vec<FrontEntry>,
}

fn canonical_order(a: &FrontEntry, b: &FrontEntry) -> Ordering {
    a.objectives
        .time
        .total_cmp(&b.objectives.time)
        .then(b.objectives.score.total_cmp(&a.objectives.score))
        .then_with(|| a.strategy_text.cmp(&b.strategy_text))
        .then_with(|| {
            let genes = |e: &FrontEntry| e.chromosome.as_ref().map(|c| c.genes.clone());
            genes(a).cmp(&genes(b))
        })
}

impl Front {
    /// Keeps the non-dominated entries, one per objective pair, ordered by
    /// time ascending then score descending. Among entries sharing a pair the
    /// first in that order (by strategy text, then genes) is kept.
    pub fn non_dominated(mut entries: Vec<FrontEntry>) -> Self {
        entries.sort_by(canonical_order);
        entries.dedup_by(|b, a| a.objectives == b.objectives);
        let keep: Vec<bool> = entries
            .iter()
            .map(|e| !entries.iter().any(|o| dominates(&o.objectives, &e.objectives)))
            .collect();
        let entries = entries.into_iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| e).collect();
        Self { entries }
    }

    pub fn entries(&self) -> &[FrontEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn objectives(&self) -> Vec<ObjectivePair> {
        self.entries.iter().map(|e| e.objectives).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FrontFileError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed front file: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

#[derive(Deserialize)]
struct Row {
    seed: u64,
    chromosome: String,
    strategy_text: String,
    time: String,
    score: String,
}

/// One row of a front file.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontRow {
    pub seed: u64,
    pub entry: FrontEntry,
}

pub fn write_front_csv(writer: impl io::Write, seed: u64, front: &Front) -> Result<(), FrontFileError> {
    write_rows(writer, front.entries().iter().map(|e| (seed, e)))
}

/// Writes rows as given, without dominance filtering or reordering.
pub fn write_front_rows(writer: impl io::Write, rows: &[FrontRow]) -> Result<(), FrontFileError> {
    write_rows(writer, rows.iter().map(|r| (r.seed, &r.entry)))
}

fn write_rows<'a>(
    writer: impl io::Write,
    rows: impl IntoIterator<Item = (u64, &'a FrontEntry)>,
) -> Result<(), FrontFileError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["seed", "chromosome", "strategy_text", "time", "score"])?;
    for (seed, e) in rows {
        wtr.write_record([
            seed.to_string(),
            e.chromosome.as_ref().map(ToString::to_string).unwrap_or_default(),
            e.strategy_text.clone(),
            e.objectives.time.to_string(),
            e.objectives.score.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `bytes` to a temporary sibling and renames, so readers never see a partial file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> io::Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

pub fn save_front(path: impl AsRef<Path>, seed: u64, front: &Front) -> Result<(), FrontFileError> {
    let mut buf = Vec::new();
    write_front_csv(&mut buf, seed, front)?;
    Ok(write_atomic(path, &buf)?)
}

pub fn read_front_csv(reader: impl io::Read) -> Result<Vec<FrontRow>, FrontFileError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let bad = |message: String| FrontFileError::Row { row, message };
        let chromosome = if rec.chromosome.trim().is_empty() {
            None
        } else {
            Some(rec.chromosome.parse::<Chromosome>().map_err(|e| bad(format!("chromosome: {e}")))?)
        };
        let time: f64 = rec.time.parse().map_err(|e| bad(format!("time: {e}")))?;
        let score: f64 = rec.score.parse().map_err(|e| bad(format!("score: {e}")))?;
        rows.push(FrontRow {
            seed: rec.seed,
            entry: FrontEntry { chromosome, strategy_text: rec.strategy_text, objectives: ObjectivePair { time, score } },
        });
    }
    Ok(rows)
}

pub fn load_front(path: impl AsRef<Path>) -> Result<Vec<FrontRow>, FrontFileError> {
    read_front_csv(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(text: &str, time: f64, score: f64) -> FrontEntry {
        FrontEntry { chromosome: None, strategy_text: text.into(), objectives: ObjectivePair { time, score } }
    }

    #[test]
    fn filters_dominated_and_duplicates() {
        let f = Front::non_dominated(vec![
            entry("b", 0.5, 0.5),
            entry("a", 0.5, 0.5),
            entry("c", 0.6, 0.4),
            entry("d", 0.2, 0.3),
            entry("e", 0.9, 1.0),
        ]);
        let texts: Vec<_> = f.entries().iter().map(|e| e.strategy_text.as_str()).collect();
        assert_eq!(texts, ["d", "a", "e"]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut with_genes = entry("Execute Operators 100% → Retain Mutants random 100%", 0.1 + 0.2, 1.0 / 3.0);
        with_genes.chromosome = Some(Chromosome::new(vec![1, 2, 3]));
        let front = Front::non_dominated(vec![with_genes, entry("RMS 10%", 0.05, 0.2)]);
        let mut buf = Vec::new();
        write_front_csv(&mut buf, 42, &front).unwrap();
        let rows = read_front_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.seed == 42));
        let back: Vec<FrontEntry> = rows.into_iter().map(|r| r.entry).collect();
        assert_eq!(back, front.entries());
    }

    #[test]
    fn empty_front_has_header() {
        let mut buf = Vec::new();
        write_front_csv(&mut buf, 1, &Front::default()).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "seed,chromosome,strategy_text,time,score\n");
        assert!(read_front_csv("seed,chromosome,strategy_text,time,score\n".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn bad_rows_are_reported() {
        let text = "seed,chromosome,strategy_text,time,score\n1,\"1,x\",s,0.1,0.2\n";
        assert!(matches!(read_front_csv(text.as_bytes()), Err(FrontFileError::Row { row: 1, .. })));
    }
}
