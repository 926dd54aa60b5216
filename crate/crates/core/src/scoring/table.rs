//! `scores.csv`: one row per pair, one `cos_<model>` column per model.

use std::io::{Read, Write};

use super::{PairScore, Quadrant};
use crate::embedkit::ModelSimilarity;

const TAIL: [&str; 6] = ["mean_sem", "struct_sim", "cross_var", "agree", "rrs", "quadrant"];

#[derive(Debug, thiserror::Error)]
pub enum ScoreTableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("pair {0:?} has models that differ from the first row")]
    Models(String),
}

/// Writes scores in the given order. Floats use the shortest text that
/// round-trips, so output is byte-stable for equal inputs.
pub fn write_scores<W: Write>(out: W, scores: &[PairScore]) -> Result<(), ScoreTableError> {
    let models: Vec<&str> = scores.first().map_or(vec![], |s| s.per_model.iter().map(|m| m.model_id.as_str()).collect());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["pair_id".to_string()];
    header.extend(models.iter().map(|m| format!("cos_{m}")));
    header.extend(TAIL.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for s in scores {
        let same = s.per_model.len() == models.len() && s.per_model.iter().zip(&models).all(|(m, id)| m.model_id == *id);
        if !same {
            return Err(ScoreTableError::Models(s.pair_id.clone()));
        }
        let mut row = vec![s.pair_id.clone()];
        row.extend(s.per_model.iter().map(|m| m.cosine.to_string()));
        row.extend([
            s.mean_sem.to_string(),
            s.struct_sim.to_string(),
            s.cross_var.to_string(),
            s.agree.to_string(),
            s.rrs.to_string(),
            s.quadrant.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a score table. Only cosines are stored per model, so the other
/// distance fields of each `ModelSimilarity` come back as 0.
pub fn read_scores<R: Read>(input: R) -> Result<Vec<PairScore>, ScoreTableError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < 1 + TAIL.len() || header[0] != "pair_id" || header[header.len() - TAIL.len()..] != TAIL {
        return Err(ScoreTableError::Header(header.join(",")));
    }
    let models: Vec<String> = header[1..header.len() - TAIL.len()]
        .iter()
        .map(|h| h.strip_prefix("cos_").map(str::to_string).ok_or_else(|| ScoreTableError::Header(h.clone())))
        .collect::<Result<_, _>>()?;

    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let num = |k: usize| -> Result<f64, ScoreTableError> {
            rec[k].parse().map_err(|e| ScoreTableError::Row { row, message: format!("column {}: {e}", header[k]) })
        };
        let per_model = models
            .iter()
            .enumerate()
            .map(|(j, m)| {
                Ok(ModelSimilarity { model_id: m.clone(), cosine: num(1 + j)?, dot: 0.0, l1: 0.0, l2: 0.0, linf: 0.0 })
            })
            .collect::<Result<Vec<_>, ScoreTableError>>()?;
        let t = 1 + models.len();
        out.push(PairScore {
            pair_id: rec[0].to_string(),
            per_model,
            mean_sem: num(t)?,
            struct_sim: num(t + 1)?,
            cross_var: num(t + 2)?,
            agree: num(t + 3)?,
            rrs: num(t + 4)?,
            quadrant: rec[t + 5].parse::<Quadrant>().map_err(|message| ScoreTableError::Row { row, message })?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(id: &str, cos: &[f64]) -> PairScore {
        PairScore {
            pair_id: id.into(),
            per_model: cos
                .iter()
                .enumerate()
                .map(|(i, &c)| ModelSimilarity { model_id: format!("M{i}"), cosine: c, dot: 0.0, l1: 0.0, l2: 0.0, linf: 0.0 })
                .collect(),
            mean_sem: 0.1 + 0.2,
            struct_sim: 1.0 / 3.0,
            cross_var: 1e-17,
            agree: 1.0,
            rrs: 0.5,
            quadrant: Quadrant::III,
        }
    }

    #[test]
    fn round_trip() {
        let scores = vec![score("x,1", &[0.99, 0.97]), score("y", &[0.5, -0.25])];
        let mut buf = Vec::new();
        write_scores(&mut buf, &scores).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("pair_id,cos_M0,cos_M1,mean_sem,struct_sim,cross_var,agree,rrs,quadrant\n"));
        assert_eq!(read_scores(&buf[..]).unwrap(), scores);
    }

    #[test]
    fn inconsistent_models_rejected() {
        let scores = vec![score("a", &[0.9, 0.9]), score("b", &[0.9])];
        assert!(matches!(write_scores(Vec::new(), &scores), Err(ScoreTableError::Models(_))));
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read_scores("pair_id,rrs\n".as_bytes()).is_err());
    }
}
