//! Loading labelled query files, split bookkeeping and dataset statistics.
//!
//! Input files are UTF-8 CSV or TSV with a header row. The column holding
//! the query text is mandatory; intent, id, dialect and split columns are
//! mapped by name through [`CorpusFormat`].

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }

    /// Train and dev records must carry an intent label.
    pub fn requires_label(self) -> bool {
        matches!(self, Split::Train | Split::Dev)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" | "training" => Ok(Split::Train),
            "dev" | "development" | "val" | "valid" | "validation" => Ok(Split::Dev),
            "test" | "testing" => Ok(Split::Test),
            "" | "unassigned" | "none" => Ok(Split::Unassigned),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// Which records a statistic or encoding is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitSelector {
    All,
    Only(Split),
}

impl SplitSelector {
    pub fn matches(self, split: Split) -> bool {
        match self {
            SplitSelector::All => true,
            SplitSelector::Only(s) => s == split,
        }
    }
}

impl fmt::Display for SplitSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitSelector::All => f.write_str("all"),
            SplitSelector::Only(s) => s.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub text: String,
    pub intent: Option<String>,
    pub dialect: Option<String>,
    pub split: Split,
}

/// Bijection between intent strings and dense class ids, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelIndex {
    labels: Vec<String>,
    ids: HashMap<String, usize>,
}

impl LabelIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the index from the labels of `records`, skipping unlabelled ones.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a Record>) -> Self {
        let mut index = Self::new();
        for r in records {
            if let Some(label) = &r.intent {
                index.insert(label);
            }
        }
        index
    }

    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut index = Self::new();
        for label in labels {
            let label = label.as_ref();
            if index.get(label).is_some() {
                return Err(Error::InvalidConfig(format!(
                    "duplicate label `{label}` in label index"
                )));
            }
            index.insert(label);
        }
        Ok(index)
    }

    /// Returns the id of `label`, assigning the next free id if it is new.
    pub fn insert(&mut self, label: &str) -> usize {
        if let Some(&id) = self.ids.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_owned());
        self.ids.insert(label.to_owned(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.ids.get(label).copied()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl Serialize for LabelIndex {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.labels.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LabelIndex {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let labels = Vec::<String>::deserialize(deserializer)?;
        LabelIndex::from_labels(labels).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    Tab,
    Comma,
}

impl Delimiter {
    fn byte(self) -> u8 {
        match self {
            Delimiter::Tab => b'\t',
            Delimiter::Comma => b',',
        }
    }
}

impl FromStr for Delimiter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tab" | "tsv" | "\t" => Ok(Delimiter::Tab),
            "comma" | "csv" | "," => Ok(Delimiter::Comma),
            other => Err(format!(
                "unknown delimiter `{other}` (expected tab or comma)"
            )),
        }
    }
}

/// Column-name mapping and delimiter of an input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusFormat {
    pub delimiter: Delimiter,
    pub text_col: String,
    /// `None` reads an unlabelled file.
    pub label_col: Option<String>,
    pub id_col: Option<String>,
    pub dialect_col: Option<String>,
    pub split_col: Option<String>,
    /// Split assigned to rows when there is no split column.
    pub default_split: Split,
}

impl Default for CorpusFormat {
    fn default() -> Self {
        Self {
            delimiter: Delimiter::Tab,
            text_col: "text".to_owned(),
            label_col: Some("intent".to_owned()),
            id_col: None,
            dialect_col: None,
            split_col: None,
            default_split: Split::Unassigned,
        }
    }
}

impl CorpusFormat {
    pub fn with_split(mut self, split: Split) -> Self {
        self.default_split = split;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<Record>,
    labels: LabelIndex,
}

impl Corpus {
    /// Wraps `records`, indexing labels over every non-test record.
    pub fn new(records: Vec<Record>) -> Self {
        let labels = LabelIndex::from_records(records.iter().filter(|r| r.split != Split::Test));
        Self { records, labels }
    }

    /// Concatenates corpora in order and rebuilds the label index.
    pub fn concat(parts: impl IntoIterator<Item = Corpus>) -> Self {
        let records = parts.into_iter().flat_map(|c| c.records).collect();
        Self::new(records)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn labels(&self) -> &LabelIndex {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn select(&self, selector: SplitSelector) -> impl Iterator<Item = &Record> + '_ {
        self.records
            .iter()
            .filter(move |r| selector.matches(r.split))
    }

    /// Owned copies of the records of one split.
    pub fn split_records(&self, selector: SplitSelector) -> Vec<Record> {
        self.select(selector).cloned().collect()
    }
}

pub fn load_corpus(path: impl AsRef<Path>, format: &CorpusFormat) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(file, path, format)
}

/// Parses a corpus from any reader; `origin` is only used in diagnostics.
pub fn read_corpus<R: std::io::Read>(
    reader: R,
    origin: &Path,
    format: &CorpusFormat,
) -> Result<Corpus> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter.byte())
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let csv_err = |e: csv::Error| {
        let row = e
            .position()
            .map(|p| p.line().saturating_sub(1))
            .unwrap_or_default();
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(origin, io),
            kind => Error::MalformedRow {
                path: origin.to_owned(),
                row,
                message: describe_csv_error(&kind),
            },
        }
    };

    let header = rdr.headers().map_err(csv_err)?.clone();
    let column = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').trim() == name)
            .ok_or_else(|| Error::MissingColumn {
                path: origin.to_owned(),
                column: name.to_owned(),
                available: header.iter().collect::<Vec<_>>().join(", "),
            })
    };
    let optional = |name: &Option<String>| name.as_deref().map(column).transpose();

    let text_idx = column(&format.text_col)?;
    let label_idx = optional(&format.label_col)?;
    let id_idx = optional(&format.id_col)?;
    let dialect_idx = optional(&format.dialect_col)?;
    let split_idx = optional(&format.split_col)?;

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let row_no = i as u64 + 1;
        let cell = |idx: usize| row.get(idx).unwrap_or("");

        let text = cell(text_idx);
        if text.trim().is_empty() {
            return Err(Error::EmptyText {
                path: origin.to_owned(),
                row: row_no,
            });
        }
        let split = match split_idx {
            Some(idx) => cell(idx).parse().map_err(|_| Error::UnknownSplit {
                path: origin.to_owned(),
                row: row_no,
                value: cell(idx).to_owned(),
            })?,
            None => format.default_split,
        };
        let intent = label_idx
            .map(|idx| cell(idx).trim())
            .filter(|s| !s.is_empty())
            .map(str::to_owned);
        if label_idx.is_some() && intent.is_none() && split.requires_label() {
            return Err(Error::MissingLabel {
                path: origin.to_owned(),
                row: row_no,
                split: split.as_str(),
            });
        }
        let id = match id_idx {
            Some(idx) if !cell(idx).trim().is_empty() => cell(idx).trim().to_owned(),
            _ => format!("{split}-{row_no}"),
        };
        let dialect = dialect_idx
            .map(|idx| cell(idx).trim())
            .filter(|s| !s.is_empty())
            .map(str::to_owned);

        records.push(Record {
            id,
            text: text.to_owned(),
            intent,
            dialect,
            split,
        });
    }
    Ok(Corpus::new(records))
}

fn describe_csv_error(kind: &csv::ErrorKind) -> String {
    match kind {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} fields, found {len} (check quoting and delimiter)"),
        csv::ErrorKind::Utf8 { err, .. } => format!("invalid UTF-8: {err}"),
        other => format!("{other:?}"),
    }
}

/// Sentence count, mean word count and mean utterance length of a split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_sentences: usize,
    pub avg_words: f64,
    pub avg_chars: f64,
}

/// Words are maximal non-whitespace runs; length counts code points of the raw text.
pub fn corpus_stats(corpus: &Corpus, selector: SplitSelector) -> Result<CorpusStats> {
    stats_of(corpus.select(selector).map(|r| r.text.as_str()))
        .ok_or_else(|| Error::EmptySelection(selector.to_string()))
}

pub fn stats_of<'a>(texts: impl IntoIterator<Item = &'a str>) -> Option<CorpusStats> {
    let (mut n, mut words, mut chars) = (0usize, 0usize, 0usize);
    for text in texts {
        n += 1;
        words += text.split_whitespace().count();
        chars += text.chars().count();
    }
    (n > 0).then(|| CorpusStats {
        n_sentences: n,
        avg_words: words as f64 / n as f64,
        avg_chars: chars as f64 / n as f64,
    })
}

/// Class ids of the selected records under the corpus label index.
pub fn encode_labels(corpus: &Corpus, selector: SplitSelector) -> Result<Vec<usize>> {
    encode_with(corpus.labels(), corpus.select(selector))
}

pub fn encode_with<'a>(
    labels: &LabelIndex,
    records: impl IntoIterator<Item = &'a Record>,
) -> Result<Vec<usize>> {
    records
        .into_iter()
        .map(|r| {
            let label = r
                .intent
                .as_deref()
                .ok_or_else(|| Error::Unlabeled { id: r.id.clone() })?;
            labels.get(label).ok_or_else(|| Error::UnseenLabel {
                label: label.to_owned(),
            })
        })
        .collect()
}
