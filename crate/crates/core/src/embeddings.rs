//! Precomputed sentence embeddings.
//!
//! File format (UTF-8): a first line `#dim=D`, then one line per record with
//! the record id followed by `D` decimal floats, all tab-separated.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{encode_with, Corpus, Record, SplitSelector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

/// How a model consumes embeddings; stored with the model in place of a
/// fitted vectorizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    /// Name of the external encoder that produced the vectors.
    pub model: String,
    #[serde(default)]
    pub normalize: bool,
    /// Filled in at training time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig(
                "embedding dimension must be positive".into(),
            ));
        }
        Ok(Self {
            dim,
            vectors: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    /// Adds a vector. Fails on a taken id, a wrong length or non-finite values.
    pub fn insert(&mut self, id: String, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if !vector.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "embedding `{id}` has a non-finite value"
            )));
        }
        if self.vectors.contains_key(&id) {
            return Err(Error::DuplicateId {
                path: "<memory>".into(),
                id,
            });
        }
        self.vectors.insert(id, vector);
        Ok(())
    }

    /// Merges another table of the same dimension; ids must be disjoint.
    pub fn merge(&mut self, other: EmbeddingTable) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        for (id, v) in other.vectors {
            self.insert(id, v)?;
        }
        Ok(())
    }

    /// Vectors of `records`, in record order.
    pub fn rows_for<'a>(
        &self,
        records: impl IntoIterator<Item = &'a Record>,
        normalize: bool,
    ) -> Result<Vec<Vec<f64>>> {
        let mut rows = Vec::new();
        let mut missing = Vec::new();
        let mut n_missing = 0;
        for r in records {
            match self.vectors.get(&r.id) {
                Some(v) if normalize => rows.push(l2_normalized(v)),
                Some(v) => rows.push(v.clone()),
                None => {
                    n_missing += 1;
                    if missing.len() < 5 {
                        missing.push(r.id.clone());
                    }
                }
            }
        }
        if n_missing > 0 {
            return Err(Error::MissingEmbeddings {
                count: n_missing,
                first: missing,
            });
        }
        Ok(rows)
    }
}

fn l2_normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter().map(|x| x / norm).collect()
    } else {
        v.to_vec()
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file), path)
}

pub fn read_embeddings<R: BufRead>(reader: R, origin: &Path) -> Result<EmbeddingTable> {
    let fail = |line: u64, message: String| Error::EmbeddingFormat {
        path: origin.to_owned(),
        line,
        message,
    };
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(origin, e))?,
        None => return Err(fail(1, "empty file; expected `#dim=D` header".into())),
    };
    let dim: usize = header
        .trim()
        .strip_prefix("#dim=")
        .and_then(|d| d.trim().parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| fail(1, format!("expected `#dim=D` header, found `{header}`")))?;

    let mut table = EmbeddingTable::new(dim)?;
    for (i, line) in lines.enumerate() {
        let line_no = i as u64 + 2;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cells = line.split('\t');
        let id = cells.next().unwrap_or_default().trim().to_owned();
        if id.is_empty() {
            return Err(fail(line_no, "missing record id".into()));
        }
        let values = cells
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| fail(line_no, format!("non-numeric value `{c}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != dim {
            return Err(fail(
                line_no,
                format!("expected {dim} values for `{id}`, found {}", values.len()),
            ));
        }
        if table.vectors.contains_key(&id) {
            return Err(Error::DuplicateId {
                path: origin.to_owned(),
                id,
            });
        }
        table.vectors.insert(id, values);
    }
    Ok(table)
}

/// Dense matrix rows for the selected split, in corpus order, with class ids
/// under the corpus label index.
pub fn align(
    table: &EmbeddingTable,
    corpus: &Corpus,
    selector: SplitSelector,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let rows = table.rows_for(corpus.select(selector), false)?;
    let ids = encode_with(corpus.labels(), corpus.select(selector))?;
    Ok((rows, ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;

    fn parse(s: &str) -> Result<EmbeddingTable> {
        read_embeddings(s.as_bytes(), Path::new("emb.tsv"))
    }

    fn corpus(ids: &[&str]) -> Corpus {
        Corpus::new(
            ids.iter()
                .enumerate()
                .map(|(i, id)| Record {
                    id: id.to_string(),
                    text: format!("t{i}"),
                    intent: Some(if i % 2 == 0 { "x" } else { "y" }.into()),
                    dialect: None,
                    split: Split::Train,
                })
                .collect(),
        )
    }

    #[test]
    fn parses_rows() {
        let t = parse("#dim=3\nq1\t0.0\t0.0\t0.0\nq2\t1\t-2.5\t3e-2\n").unwrap();
        assert_eq!(t.dim(), 3);
        assert_eq!(t.get("q1").unwrap(), [0.0, 0.0, 0.0]);
        assert_eq!(t.get("q2").unwrap(), [1.0, -2.5, 0.03]);
    }

    #[test]
    fn arity_error_names_line() {
        let err = parse("#dim=3\nq1\t0.0\t0.0\n").unwrap_err();
        assert!(
            matches!(err, Error::EmbeddingFormat { line: 2, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn rejects_bad_values_and_headers() {
        assert!(matches!(
            parse("#dim=2\nq\t1\tabc\n"),
            Err(Error::EmbeddingFormat { .. })
        ));
        assert!(matches!(
            parse("#dim=2\nq\t1\tNaN\n"),
            Err(Error::EmbeddingFormat { .. })
        ));
        assert!(matches!(
            parse("dim=2\n"),
            Err(Error::EmbeddingFormat { line: 1, .. })
        ));
        assert!(matches!(
            parse("#dim=0\n"),
            Err(Error::EmbeddingFormat { line: 1, .. })
        ));
        assert!(matches!(parse(""), Err(Error::EmbeddingFormat { .. })));
    }

    #[test]
    fn duplicate_id_is_named() {
        let err = parse("#dim=1\na\t1\na\t2\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateId { ref id, .. } if id == "a"));
    }

    #[test]
    fn align_follows_corpus_order() {
        let a = parse("#dim=1\nr1\t1\nr2\t2\nr3\t3\n").unwrap();
        let b = parse("#dim=1\nr3\t3\nr1\t1\nr2\t2\n").unwrap();
        let c = corpus(&["r2", "r3", "r1"]);
        let (rows, ids) = align(&a, &c, SplitSelector::All).unwrap();
        assert_eq!(rows, vec![vec![2.0], vec![3.0], vec![1.0]]);
        assert_eq!(ids, vec![0, 1, 0]);
        assert_eq!(align(&b, &c, SplitSelector::All).unwrap(), (rows, ids));
    }

    #[test]
    fn missing_ids_are_listed() {
        let t = parse("#dim=1\nr1\t1\n").unwrap();
        let c = corpus(&["r1", "r9"]);
        let err = align(&t, &c, SplitSelector::All).unwrap_err();
        match err {
            Error::MissingEmbeddings { count, first } => {
                assert_eq!(count, 1);
                assert_eq!(first, ["r9"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn normalization_is_opt_in() {
        let t = parse("#dim=2\nr1\t3\t4\n").unwrap();
        let c = corpus(&["r1"]);
        assert_eq!(
            t.rows_for(c.records(), false).unwrap(),
            vec![vec![3.0, 4.0]]
        );
        assert_eq!(t.rows_for(c.records(), true).unwrap(), vec![vec![0.6, 0.8]]);
    }
}
