use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_model, checked_pair, EmbedError, EmbeddingProvider, EmbeddingVector, ProviderKind, Side};
use crate::corpus::FunctionPair;

/// One line of an embedding store file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoreRecord {
    pub pair_id: String,
    pub model_id: String,
    pub side: Side,
    pub vector: Vec<f64>,
}

pub fn read_store(path: &Path) -> Result<Vec<StoreRecord>, EmbedError> {
    let shown = path.display().to_string();
    let file = fs::File::open(path).map_err(|source| EmbedError::Io { path: shown.clone(), source })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| EmbedError::Io { path: shown.clone(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: StoreRecord = serde_json::from_str(&line).map_err(|e| EmbedError::Store {
            path: shown.clone(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_store(path: &Path, records: &[StoreRecord]) -> Result<(), EmbedError> {
    let io = |source| EmbedError::Io { path: path.display().to_string(), source };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    for rec in records {
        writeln!(out, "{}", serde_json::to_string(rec).expect("record serializes")).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Asks `provider` for every (pair, model) and flattens the answers into
/// store records, vuln side first.
pub fn precompute_store(
    provider: &dyn EmbeddingProvider,
    pairs: &[FunctionPair],
) -> Result<Vec<StoreRecord>, EmbedError> {
    let mut out = Vec::with_capacity(pairs.len() * provider.model_ids().len() * 2);
    for pair in pairs {
        for model in provider.model_ids() {
            let (x, y) = provider.get_pair_embeddings(pair, model)?;
            for (side, vec) in [(Side::Vuln, x), (Side::Benign, y)] {
                out.push(StoreRecord {
                    pair_id: pair.pair_id.clone(),
                    model_id: model.clone(),
                    side,
                    vector: vec.values().to_vec(),
                });
            }
        }
    }
    Ok(out)
}

/// Precomputed vectors loaded from a store file.
#[derive(Debug, Clone)]
pub struct FileStore {
    model_ids: Vec<String>,
    vectors: HashMap<(String, String, Side), EmbeddingVector>,
}

impl FileStore {
    pub fn open(path: &Path) -> Result<Self, EmbedError> {
        let shown = path.display().to_string();
        let records = read_store(path)?;
        Self::from_records(records).map_err(|(line, message)| EmbedError::Store { path: shown, line, message })
    }

    /// Builds a store; models are listed in order of first appearance, so a
    /// store written by `precompute_store` keeps its provider's order.
    /// Errors carry the 1-based record index.
    pub fn from_records(records: Vec<StoreRecord>) -> Result<Self, (usize, String)> {
        let mut models: Vec<String> = Vec::new();
        let mut vectors = HashMap::new();
        for (i, rec) in records.into_iter().enumerate() {
            let vec = EmbeddingVector::new(rec.model_id.clone(), rec.vector).map_err(|e| (i + 1, e.to_string()))?;
            if !models.contains(&rec.model_id) {
                models.push(rec.model_id.clone());
            }
            let key = (rec.pair_id, rec.model_id, rec.side);
            if vectors.contains_key(&key) {
                return Err((i + 1, format!("duplicate vector for {key:?}")));
            }
            vectors.insert(key, vec);
        }
        Ok(FileStore { model_ids: models, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    fn lookup(&self, pair_id: &str, model_id: &str, side: Side) -> Result<EmbeddingVector, EmbedError> {
        self.vectors
            .get(&(pair_id.to_string(), model_id.to_string(), side))
            .cloned()
            .ok_or_else(|| EmbedError::Missing { pair_id: pair_id.into(), model_id: model_id.into(), side })
    }
}

impl EmbeddingProvider for FileStore {
    fn kind(&self) -> ProviderKind {
        ProviderKind::FileStore
    }

    fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    fn get_pair_embeddings(
        &self,
        pair: &FunctionPair,
        model_id: &str,
    ) -> Result<(EmbeddingVector, EmbeddingVector), EmbedError> {
        check_model(self, model_id)?;
        let x = self.lookup(&pair.pair_id, model_id, Side::Vuln)?;
        let y = self.lookup(&pair.pair_id, model_id, Side::Benign)?;
        checked_pair(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::astkit::LanguageHint;

    fn pair(id: &str) -> FunctionPair {
        FunctionPair {
            pair_id: id.into(),
            vuln_source: "int f(void){return 1;}".into(),
            benign_source: "int f(void){return 0;}".into(),
            cve_id: None,
            project: None,
            language_hint: LanguageHint::C,
        }
    }

    fn rec(pair: &str, model: &str, side: Side, v: &[f64]) -> StoreRecord {
        StoreRecord { pair_id: pair.into(), model_id: model.into(), side, vector: v.to_vec() }
    }

    #[test]
    fn round_trips_bit_exactly() {
        let awkward = [0.1, -2.0 / 3.0, 1e-300, 0.9600000000000001];
        let records = vec![
            rec("p", "m", Side::Vuln, &awkward),
            rec("p", "m", Side::Benign, &[1.0, 2.0, 3.0, 4.0]),
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_store(f.path(), &records).unwrap();
        assert_eq!(read_store(f.path()).unwrap(), records);

        let store = FileStore::open(f.path()).unwrap();
        let (x, y) = store.get_pair_embeddings(&pair("p"), "m").unwrap();
        for (a, b) in x.values().iter().zip(&awkward) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(y.values(), &[1.0, 2.0, 3.0, 4.0]);
        // repeated queries agree
        assert_eq!(store.get_pair_embeddings(&pair("p"), "m").unwrap(), (x, y));
    }

    #[test]
    fn missing_side_and_model() {
        let store = FileStore::from_records(vec![rec("p", "m", Side::Vuln, &[1.0])]).unwrap();
        assert!(matches!(
            store.get_pair_embeddings(&pair("p"), "m"),
            Err(EmbedError::Missing { side: Side::Benign, .. })
        ));
        assert!(matches!(store.get_pair_embeddings(&pair("p"), "other"), Err(EmbedError::UnknownModel(_))));
    }

    #[test]
    fn side_dims_must_agree() {
        let store = FileStore::from_records(vec![
            rec("p", "m", Side::Vuln, &[1.0, 2.0]),
            rec("p", "m", Side::Benign, &[1.0]),
        ])
        .unwrap();
        assert!(matches!(store.get_pair_embeddings(&pair("p"), "m"), Err(EmbedError::DimensionMismatch { .. })));
    }

    #[test]
    fn duplicates_rejected() {
        let err = FileStore::from_records(vec![
            rec("p", "m", Side::Vuln, &[1.0]),
            rec("p", "m", Side::Vuln, &[2.0]),
        ])
        .unwrap_err();
        assert_eq!(err.0, 2);
    }
}
