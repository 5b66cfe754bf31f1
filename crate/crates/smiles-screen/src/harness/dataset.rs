//! Dataset ingestion: CSV/TSV of labeled SMILES, with parser-validated rows
//! and a quarantine channel for the ones that fail.

use std::collections::HashSet;
use std::path::Path;

use super::HarnessError;
use crate::smiles::{parse_smiles, Molecule};

/// One labeled molecule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: String,
    pub smiles: String,
    pub label: u8,
}

/// A validated dataset: unique ids, parseable SMILES, both classes present.
#[derive(Debug, Clone)]
pub struct Dataset {
    name: String,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(name: String, records: Vec<Record>) -> Result<Dataset, HarnessError> {
        let mut ids = HashSet::new();
        for r in &records {
            if !ids.insert(r.id.as_str()) {
                return Err(HarnessError::DuplicateId(r.id.clone()));
            }
            if r.label > 1 {
                return Err(HarnessError::Format {
                    row: 0,
                    message: format!("record {} has label {}", r.id, r.label),
                });
            }
        }
        let positives = records.iter().filter(|r| r.label == 1).count();
        if positives == 0 || positives == records.len() {
            return Err(HarnessError::EmptyClass);
        }
        Ok(Dataset { name, records })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A dataset with every molecule already parsed, so downstream passes never
/// re-run the parser.
#[derive(Debug, Clone)]
pub struct ParsedDataset {
    pub dataset: Dataset,
    pub molecules: Vec<Molecule>,
}

impl ParsedDataset {
    pub fn from_dataset(dataset: Dataset) -> ParsedDataset {
        let molecules = dataset
            .records()
            .iter()
            .map(|r| parse_smiles(&r.smiles).expect("dataset records are pre-validated"))
            .collect();
        ParsedDataset { dataset, molecules }
    }
}

/// Input table flavors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    /// `smiles,label[,id]` with a header row.
    Csv,
    /// Two tab-separated columns `smiles<TAB>label`, no header.
    Tsv,
}

impl TableFormat {
    pub fn infer(path: &Path) -> TableFormat {
        match path.extension().and_then(|s| s.to_str()) {
            Some("tsv") | Some("tab") => TableFormat::Tsv,
            _ => TableFormat::Csv,
        }
    }
}

/// A rejected row: data line number (1-based), its SMILES, and why.
#[derive(Debug, Clone)]
pub struct QuarantinedRow {
    pub row: usize,
    pub smiles: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Quarantine {
    pub rows: Vec<QuarantinedRow>,
}

impl Quarantine {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&format!("row {}: {} # {}\n", r.row, r.smiles, r.reason));
        }
        out
    }
}

/// Reads and validates a dataset file. Malformed SMILES are quarantined;
/// malformed labels or rows are format errors; more than 10% quarantined
/// rows aborts the run (the file is probably not what it claims to be).
pub fn ingest(path: &Path, format: TableFormat) -> Result<(Dataset, Quarantine), HarnessError> {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    let mut reader_builder = csv::ReaderBuilder::new();
    match format {
        TableFormat::Csv => {
            reader_builder.has_headers(true);
        }
        TableFormat::Tsv => {
            reader_builder.has_headers(false).delimiter(b'\t');
        }
    }
    let mut reader = reader_builder
        .from_path(path)
        .map_err(|e| HarnessError::Io(e.to_string()))?;

    let (smiles_col, label_col, id_col) = match format {
        TableFormat::Tsv => (0, 1, None),
        TableFormat::Csv => {
            let headers = reader
                .headers()
                .map_err(|e| HarnessError::Io(e.to_string()))?;
            let find = |name: &str| headers.iter().position(|h| h.trim() == name);
            let smiles = find("smiles").ok_or_else(|| HarnessError::Format {
                row: 0,
                message: "missing 'smiles' column".into(),
            })?;
            let label = find("label").ok_or_else(|| HarnessError::Format {
                row: 0,
                message: "missing 'label' column".into(),
            })?;
            (smiles, label, find("id"))
        }
    };

    let mut records = Vec::new();
    let mut quarantine = Quarantine::default();
    let mut total_rows = 0usize;
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| HarnessError::Io(e.to_string()))?;
        let data_row = i + 1;
        total_rows += 1;
        let smiles = row
            .get(smiles_col)
            .ok_or_else(|| HarnessError::Format {
                row: data_row,
                message: "missing smiles field".into(),
            })?
            .trim()
            .to_string();
        let label_text = row
            .get(label_col)
            .ok_or_else(|| HarnessError::Format {
                row: data_row,
                message: "missing label field".into(),
            })?
            .trim();
        let label: u8 = match label_text {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(HarnessError::Format {
                    row: data_row,
                    message: format!("label must be 0 or 1, got {:?}", other),
                })
            }
        };
        let id = match id_col {
            Some(col) => row
                .get(col)
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .ok_or_else(|| HarnessError::Format {
                    row: data_row,
                    message: "missing id field".into(),
                })?,
            None => data_row.to_string(),
        };
        match parse_smiles(&smiles) {
            Ok(_) => records.push(Record { id, smiles, label }),
            Err(d) => quarantine.rows.push(QuarantinedRow {
                row: data_row,
                smiles,
                reason: d.to_string(),
            }),
        }
    }

    if total_rows == 0 {
        return Err(HarnessError::Format {
            row: 0,
            message: "file has no data rows".into(),
        });
    }
    if quarantine.rows.len() * 10 > total_rows {
        return Err(HarnessError::TooManyRejects {
            rejected: quarantine.rows.len(),
            total: total_rows,
        });
    }
    let dataset = Dataset::new(name, records)?;
    Ok((dataset, quarantine))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(name: &str, content: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("ingest-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn toy_csv_ingests_fully() {
        let path = write_temp("toy.csv", "smiles,label\nCCO,1\nCCC,0\nCCN,1\nCCCC,0\n");
        let (ds, q) = ingest(&path, TableFormat::Csv).unwrap();
        assert_eq!(ds.len(), 4);
        assert!(q.rows.is_empty());
        assert_eq!(ds.records()[0].id, "1");
    }

    #[test]
    fn malformed_smiles_is_quarantined() {
        let path = write_temp(
            "quarantine.csv",
            "smiles,label\nCCO,1\nC(C,0\nCCN,1\nCC,0\nCCC,0\nOC,1\nNC,0\nCN,1\nCO,0\nCC(C)C,0\nCCCC,1\n",
        );
        let (ds, q) = ingest(&path, TableFormat::Csv).unwrap();
        assert_eq!(q.rows.len(), 1);
        assert_eq!(q.rows[0].row, 2);
        assert_eq!(ds.len(), 10);
    }

    #[test]
    fn bad_label_names_the_row() {
        let path = write_temp("badlabel.csv", "smiles,label\nCCO,1\nCCC,2\n");
        match ingest(&path, TableFormat::Csv) {
            Err(HarnessError::Format { row, message }) => {
                assert_eq!(row, 2);
                assert!(message.contains('2'));
            }
            other => panic!("expected format error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn id_column_is_honored() {
        let path = write_temp("ids.csv", "smiles,label,id\nCCO,1,a\nCCC,0,b\n");
        let (ds, _) = ingest(&path, TableFormat::Csv).unwrap();
        assert_eq!(ds.records()[0].id, "a");
    }

    #[test]
    fn excess_rejects_abort() {
        let path = write_temp("broken.csv", "smiles,label\nC(C,1\nC(C,0\nCCO,1\nCCC,0\n");
        assert!(matches!(
            ingest(&path, TableFormat::Csv),
            Err(HarnessError::TooManyRejects { rejected: 2, total: 4 })
        ));
    }

    #[test]
    fn tsv_without_header() {
        let path = write_temp("plain.tsv", "CCO\t1\nCCC\t0\n");
        let (ds, _) = ingest(&path, TableFormat::Tsv).unwrap();
        assert_eq!(ds.len(), 2);
    }

    #[test]
    fn single_class_fails() {
        let path = write_temp("oneclass.csv", "smiles,label\nCCO,1\nCCC,1\n");
        assert!(matches!(
            ingest(&path, TableFormat::Csv),
            Err(HarnessError::EmptyClass)
        ));
    }
}
