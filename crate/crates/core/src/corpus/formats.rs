use std::collections::HashSet;
use std::path::Path;

use super::{Corpus, CorpusError, CorpusFormat, PairRecord, SplitTag};
use crate::fsutil;

const MRPC_COLUMNS: usize = 5;
const TPC_HEADER: [&str; 3] = ["sentence1", "sentence2", "label"];
const QUORA_HEADER: [&str; 6] = ["id", "qid1", "qid2", "question1", "question2", "is_duplicate"];

/// Reads a corpus file. The dataset id is the format name, or the file stem
/// for interchange files. The split tag starts as `unsplit`.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let dataset_id = match format {
        CorpusFormat::Interchange => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into()),
        other => other.as_str().to_string(),
    };
    parse_corpus(&text, format, &dataset_id)
}

pub fn parse_corpus(text: &str, format: CorpusFormat, dataset_id: &str) -> Result<Corpus, CorpusError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let records = match format {
        CorpusFormat::Mrpc => parse_mrpc(text)?,
        CorpusFormat::Tpc => parse_tpc(text)?,
        CorpusFormat::Quora => parse_quora(text)?,
        CorpusFormat::Interchange => parse_interchange(text)?,
    };
    Ok(Corpus::new(dataset_id, SplitTag::Unsplit, records))
}

/// Validates a freshly parsed record and tracks id uniqueness.
struct Collector {
    ids: HashSet<String>,
    records: Vec<PairRecord>,
}

impl Collector {
    fn new() -> Self {
        Self {
            ids: HashSet::new(),
            records: Vec::new(),
        }
    }

    fn push(&mut self, line: usize, record: PairRecord) -> Result<(), CorpusError> {
        record
            .validate()
            .map_err(|reason| CorpusError::Validation { line, reason })?;
        if !self.ids.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId(record.id));
        }
        self.records.push(record);
        Ok(())
    }
}

fn parse_label(raw: &str, line: usize) -> Result<u8, CorpusError> {
    match raw.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(CorpusError::InvalidLabel {
            line,
            value: other.to_string(),
        }),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_mrpc(text: &str) -> Result<Vec<PairRecord>, CorpusError> {
    let mut lines = data_lines(text);
    let Some((_, header)) = lines.next() else {
        return Err(CorpusError::Malformed {
            line: 1,
            reason: "missing MRPC header line".into(),
        });
    };
    if header.split('\t').count() != MRPC_COLUMNS || !header.starts_with("Quality") {
        return Err(CorpusError::Malformed {
            line: 1,
            reason: "expected header `Quality\\t#1 ID\\t#2 ID\\t#1 String\\t#2 String`".into(),
        });
    }
    let mut out = Collector::new();
    for (line, row) in lines {
        let cols: Vec<&str> = row.split('\t').collect();
        if cols.len() != MRPC_COLUMNS {
            return Err(CorpusError::Malformed {
                line,
                reason: format!("expected {MRPC_COLUMNS} tab-separated columns, found {}", cols.len()),
            });
        }
        let quality = parse_label(cols[0], line)?;
        let id = format!("{}_{}", cols[1].trim(), cols[2].trim());
        out.push(line, PairRecord::original(id, cols[3].trim(), cols[4].trim(), quality))?;
    }
    Ok(out.records)
}

fn parse_tpc(text: &str) -> Result<Vec<PairRecord>, CorpusError> {
    let mut lines = data_lines(text);
    let header_ok = lines
        .next()
        .map(|(_, h)| h.split('\t').map(str::trim).eq(TPC_HEADER))
        .unwrap_or(false);
    if !header_ok {
        return Err(CorpusError::Malformed {
            line: 1,
            reason: "expected header `sentence1\\tsentence2\\tlabel`".into(),
        });
    }
    let mut out = Collector::new();
    for (index, (line, row)) in lines.enumerate() {
        let cols: Vec<&str> = row.split('\t').collect();
        if cols.len() != TPC_HEADER.len() {
            return Err(CorpusError::Malformed {
                line,
                reason: format!("expected 3 tab-separated columns, found {}", cols.len()),
            });
        }
        let quality = parse_label(cols[2], line)?;
        out.push(
            line,
            PairRecord::original(format!("tpc-{index}"), cols[0].trim(), cols[1].trim(), quality),
        )?;
    }
    Ok(out.records)
}

fn parse_quora(text: &str) -> Result<Vec<PairRecord>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CorpusError::Malformed {
        line: 1,
        reason: e.to_string(),
    })?;
    if !headers.iter().map(str::trim).eq(QUORA_HEADER) {
        return Err(CorpusError::Malformed {
            line: 1,
            reason: format!("expected header `{}`", QUORA_HEADER.join(",")),
        });
    }
    let mut out = Collector::new();
    for (index, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CorpusError::Malformed {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(index + 2);
        if row.len() != QUORA_HEADER.len() {
            return Err(CorpusError::Malformed {
                line,
                reason: format!("expected 6 columns, found {}", row.len()),
            });
        }
        let quality = parse_label(&row[5], line)?;
        out.push(
            line,
            PairRecord::original(format!("quora-{index}"), row[3].trim(), row[4].trim(), quality),
        )?;
    }
    Ok(out.records)
}

#[derive(serde::Deserialize)]
struct InterchangeLine {
    id: String,
    sentence: String,
    paraphrase: String,
    quality: serde_json::Value,
    origin: String,
}

fn parse_interchange(text: &str) -> Result<Vec<PairRecord>, CorpusError> {
    let mut out = Collector::new();
    for (line, row) in data_lines(text) {
        let raw: InterchangeLine = serde_json::from_str(row).map_err(|e| CorpusError::Malformed {
            line,
            reason: e.to_string(),
        })?;
        let quality = match raw.quality.as_u64() {
            Some(q @ 0..=1) => q as u8,
            _ => {
                return Err(CorpusError::InvalidLabel {
                    line,
                    value: raw.quality.to_string(),
                })
            }
        };
        let origin = raw
            .origin
            .parse()
            .map_err(|reason| CorpusError::Validation { line, reason })?;
        out.push(
            line,
            PairRecord {
                id: raw.id,
                sentence: raw.sentence,
                paraphrase: raw.paraphrase,
                quality,
                origin,
            },
        )?;
    }
    Ok(out.records)
}

/// Serializes records as JSON lines with keys in the order
/// `id, sentence, paraphrase, quality, origin`.
pub fn to_interchange(corpus: &Corpus) -> String {
    let mut out = String::new();
    for record in &corpus.records {
        out.push_str(&serde_json::to_string(record).expect("records always serialize"));
        out.push('\n');
    }
    out
}

pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    fsutil::write_atomic(path, to_interchange(corpus).as_bytes()).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}
