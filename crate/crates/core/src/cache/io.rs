use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CacheError, MutantRecord, MutationCache, OperatorRecord, TestRecord};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CacheFile {
    operators: Vec<OperatorRecord>,
    tests: Vec<TestRecord>,
    mutants: Vec<MutantRecord>,
}

#[derive(Serialize, Deserialize)]
struct KillMatrixRow {
    mutant_id: String,
    operator_id: String,
    exec_cost: f64,
    killed_by: String,
}

/// Rounds to 9 significant digits.
pub(crate) fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CacheError + '_ {
    move |source| CacheError::Io { path: path.to_path_buf(), source }
}

pub fn parse_cache_json(text: &str) -> Result<MutationCache, CacheError> {
    let file: CacheFile = serde_json::from_str(text).map_err(|e| CacheError::Parse(e.to_string()))?;
    MutationCache::new(file.operators, file.tests, file.mutants)
}

pub fn load_cache(path: impl AsRef<Path>) -> Result<MutationCache, CacheError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_cache_json(&text)
}

/// Canonical JSON text: sorted keys, records in id order, reals at 9 significant digits.
pub fn to_cache_json(cache: &MutationCache) -> String {
    let file = CacheFile {
        operators: cache
            .operators()
            .iter()
            .map(|o| OperatorRecord { id: o.id.clone(), generation_cost: round_sig9(o.generation_cost) })
            .collect(),
        tests: cache.tests().to_vec(),
        mutants: cache
            .mutants()
            .iter()
            .map(|m| MutantRecord { exec_cost: round_sig9(m.exec_cost), ..m.clone() })
            .collect(),
    };
    // `Value` objects are BTreeMap-backed, which sorts keys.
    let value = serde_json::to_value(&file).expect("cache serializes");
    let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
    text.push('\n');
    text
}

pub fn save_cache(cache: &MutationCache, path: impl AsRef<Path>) -> Result<(), CacheError> {
    let path = path.as_ref();
    fs::write(path, to_cache_json(cache)).map_err(io_err(path))
}

/// Reads a `mutant_id,operator_id,exec_cost,killed_by` kill matrix.
///
/// Operators get a generation cost of 0. The test suite is the union of all
/// killers, ranked in ascending id order.
pub fn parse_kill_matrix_csv(reader: impl std::io::Read) -> Result<MutationCache, CacheError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut operators = BTreeSet::new();
    let mut tests = BTreeSet::new();
    let mut mutants = Vec::new();
    for row in rdr.deserialize::<KillMatrixRow>() {
        let row = row.map_err(|e| CacheError::Parse(e.to_string()))?;
        let killers: BTreeSet<String> = row
            .killed_by
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        tests.extend(killers.iter().cloned());
        operators.insert(row.operator_id.clone());
        mutants.push(MutantRecord {
            id: row.mutant_id,
            operator_id: row.operator_id,
            exec_cost: row.exec_cost,
            killers,
        });
    }
    MutationCache::new(
        operators.into_iter().map(|id| OperatorRecord { id, generation_cost: 0.0 }).collect(),
        tests.into_iter().enumerate().map(|(rank, id)| TestRecord { id, priority_rank: rank as u32 }).collect(),
        mutants,
    )
}

pub fn load_kill_matrix_csv(path: impl AsRef<Path>) -> Result<MutationCache, CacheError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(io_err(path))?;
    parse_kill_matrix_csv(file)
}

pub fn write_kill_matrix_csv(cache: &MutationCache, writer: impl std::io::Write) -> Result<(), CacheError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for m in cache.mutants() {
        wtr.serialize(KillMatrixRow {
            mutant_id: m.id.clone(),
            operator_id: m.operator_id.clone(),
            exec_cost: m.exec_cost,
            killed_by: m.killers.iter().cloned().collect::<Vec<_>>().join(";"),
        })
        .map_err(|e| CacheError::Parse(e.to_string()))?;
    }
    wtr.flush().map_err(|source| CacheError::Io { path: "<csv writer>".into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
      "operators": [{"id": "A", "generation_cost": 1.5}, {"id": "B", "generation_cost": 0.5}],
      "tests": [{"id": "t1", "priority_rank": 1}, {"id": "t2", "priority_rank": 0}, {"id": "t3", "priority_rank": 2}],
      "mutants": [
        {"id": "m1", "operator_id": "A", "exec_cost": 2, "killers": ["t1"]},
        {"id": "m2", "operator_id": "A", "exec_cost": 3, "killers": []},
        {"id": "m3", "operator_id": "B", "exec_cost": 4, "killers": ["t2", "t3"]},
        {"id": "m4", "operator_id": "B", "exec_cost": 5.25, "killers": ["t3"]}
      ]
    }"#;

    #[test]
    fn load_sums_costs() {
        let c = parse_cache_json(SAMPLE).unwrap();
        assert_eq!(c.total_cost(), 1.5 + 0.5 + 2.0 + 3.0 + 4.0 + 5.25);
        assert_eq!(c.global_score(), 0.75);
    }

    #[test]
    fn dangling_killer_names_offender() {
        let text = SAMPLE.replace(r#"["t1"]"#, r#"["tX"]"#);
        let err = parse_cache_json(&text).unwrap_err().to_string();
        assert!(err.contains("m1") && err.contains("tX"), "{err}");
    }

    #[test]
    fn syntax_error_is_parse_error() {
        assert!(matches!(parse_cache_json("{\"operators\": ["), Err(CacheError::Parse(_))));
    }

    #[test]
    fn save_is_byte_stable_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let c = parse_cache_json(SAMPLE).unwrap();
        let (p1, p2) = (dir.path().join("a.json"), dir.path().join("b.json"));
        save_cache(&c, &p1).unwrap();
        save_cache(&c, &p2).unwrap();
        let (b1, b2) = (fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        assert_eq!(b1, b2);
        assert_eq!(load_cache(&p1).unwrap(), c);
        let text = String::from_utf8(b1).unwrap();
        // keys sorted within every object
        assert!(text.find("\"exec_cost\"").unwrap() < text.find("\"operator_id\"").unwrap());
        assert!(text.find("\"mutants\"").unwrap() < text.find("\"operators\"").unwrap());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let c = parse_cache_json(SAMPLE).unwrap();
        let err = save_cache(&c, "/nonexistent-dir/x/cache.json").unwrap_err();
        assert!(matches!(err, CacheError::Io { .. }));
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(round_sig9(1.23456789012), 1.23456789);
        assert_eq!(round_sig9(0.000123456789012), 0.000123456789);
        assert_eq!(round_sig9(0.0), 0.0);
    }

    #[test]
    fn csv_kill_matrix_round_trip() {
        let csv_text = "mutant_id,operator_id,exec_cost,killed_by\nm1,A,2.5,t2;t1\nm2,B,1,\nm3,B,3,t3\n";
        let c = parse_kill_matrix_csv(csv_text.as_bytes()).unwrap();
        assert_eq!(c.mutants().len(), 3);
        assert_eq!(c.tests().len(), 3);
        assert_eq!(c.operators().iter().map(|o| o.generation_cost).sum::<f64>(), 0.0);
        let mut out = Vec::new();
        write_kill_matrix_csv(&c, &mut out).unwrap();
        let again = parse_kill_matrix_csv(out.as_slice()).unwrap();
        assert_eq!(again, c);
    }
}
