use std::collections::HashSet;
use std::io::Read;

use crate::error::{PipelineError, Result};
use crate::schema::{ColumnRole, Schema};

/// Column-major view of an ingested CSV: numeric and categorical feature
/// columns in header order, labels, and optional id / annotation columns.
#[derive(Clone, Debug, PartialEq)]
pub struct RawDataset {
    pub numeric: Vec<NumericColumn>,
    pub categorical: Vec<CategoricalColumn>,
    pub labels: Vec<u8>,
    pub ids: Option<Vec<String>>,
    pub attack_tags: Option<Vec<String>>,
    /// Rows dropped at ingest because a cell was empty.
    pub rejected_missing: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericColumn {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CategoricalColumn {
    pub name: String,
    pub values: Vec<String>,
}

impl RawDataset {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        (self.labels.len() - pos, pos)
    }

    /// New dataset containing the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> RawDataset {
        let pick_f = |v: &[f64]| rows.iter().map(|&r| v[r]).collect::<Vec<_>>();
        let pick_s = |v: &[String]| rows.iter().map(|&r| v[r].clone()).collect::<Vec<_>>();
        RawDataset {
            numeric: self
                .numeric
                .iter()
                .map(|c| NumericColumn {
                    name: c.name.clone(),
                    values: pick_f(&c.values),
                })
                .collect(),
            categorical: self
                .categorical
                .iter()
                .map(|c| CategoricalColumn {
                    name: c.name.clone(),
                    values: pick_s(&c.values),
                })
                .collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            ids: self.ids.as_ref().map(|v| pick_s(v)),
            attack_tags: self.attack_tags.as_ref().map(|v| pick_s(v)),
            rejected_missing: 0,
        }
    }

    /// Removes rows whose feature values and label exactly match an earlier
    /// row (ids and annotations do not participate in the key). Returns the
    /// deduplicated dataset and the number of rows removed.
    pub fn dedup(&self) -> (RawDataset, usize) {
        let mut seen: HashSet<Vec<u8>> = HashSet::with_capacity(self.n_rows());
        let mut keep = Vec::with_capacity(self.n_rows());
        for row in 0..self.n_rows() {
            let mut key = Vec::with_capacity(self.numeric.len() * 8 + 16);
            for col in &self.numeric {
                key.extend_from_slice(&col.values[row].to_bits().to_le_bytes());
            }
            for col in &self.categorical {
                key.extend_from_slice(col.values[row].as_bytes());
                key.push(0xFF); // separator; 0xFF never starts a UTF-8 char
            }
            key.push(self.labels[row]);
            if seen.insert(key) {
                keep.push(row);
            }
        }
        let removed = self.n_rows() - keep.len();
        (self.select_rows(&keep), removed)
    }
}

/// Infers a schema from the header and a value sample when none is supplied:
/// well-known column names take their conventional roles and remaining
/// columns are numeric when every non-empty sampled cell parses as a finite
/// number.
fn infer_schema(headers: &[String], records: &[csv::StringRecord]) -> Schema {
    let columns = headers
        .iter()
        .enumerate()
        .map(|(idx, name)| {
            let role = match name.as_str() {
                "id" => ColumnRole::Id,
                "label" => ColumnRole::Label,
                "attack_cat" => ColumnRole::AttackTag,
                _ => {
                    let mut all_numeric = true;
                    let mut saw_value = false;
                    for rec in records.iter().take(256) {
                        let cell = rec.get(idx).unwrap_or("");
                        if cell.is_empty() {
                            continue;
                        }
                        saw_value = true;
                        if cell.parse::<f64>().map(|v| v.is_finite()) != Ok(true) {
                            all_numeric = false;
                            break;
                        }
                    }
                    if all_numeric && saw_value {
                        ColumnRole::Numeric
                    } else {
                        ColumnRole::Categorical
                    }
                }
            };
            crate::schema::SchemaColumn {
                name: name.clone(),
                role,
            }
        })
        .collect();
    Schema { columns }
}

/// Reads a CSV into a [`RawDataset`].
///
/// With a schema, the header must contain exactly the schema's columns (any
/// order); without one, roles are inferred. Rows containing an empty cell in
/// a used column are rejected and counted; unparseable numerics, bad labels,
/// and duplicate ids are hard errors carrying the 1-based data row number.
pub fn load_csv<R: Read>(reader: R, schema: Option<&Schema>) -> Result<RawDataset> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = csv_reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return Err(PipelineError::Data("csv has no header".into()));
    }
    {
        let mut seen = HashSet::new();
        for h in &headers {
            if !seen.insert(h.as_str()) {
                return Err(PipelineError::Data(format!(
                    "duplicate header column '{h}'"
                )));
            }
        }
    }

    let records: Vec<csv::StringRecord> = csv_reader
        .records()
        .collect::<std::result::Result<_, _>>()?;

    let owned_schema;
    let schema = match schema {
        Some(s) => {
            s.validate()?;
            let header_set: HashSet<&str> = headers.iter().map(|h| h.as_str()).collect();
            for c in &s.columns {
                if !header_set.contains(c.name.as_str()) {
                    return Err(PipelineError::Schema(format!(
                        "schema column '{}' missing from csv header",
                        c.name
                    )));
                }
            }
            for h in &headers {
                if s.role_of(h).is_none() {
                    return Err(PipelineError::Schema(format!(
                        "csv column '{h}' not declared in schema"
                    )));
                }
            }
            s
        }
        None => {
            owned_schema = infer_schema(&headers, &records);
            &owned_schema
        }
    };

    let roles: Vec<ColumnRole> = headers
        .iter()
        .map(|h| schema.role_of(h).expect("header coverage checked above"))
        .collect();
    if !roles.contains(&ColumnRole::Label) {
        return Err(PipelineError::Schema("no label column present".into()));
    }

    let mut numeric: Vec<NumericColumn> = headers
        .iter()
        .zip(&roles)
        .filter(|(_, &r)| r == ColumnRole::Numeric)
        .map(|(h, _)| NumericColumn {
            name: h.clone(),
            values: Vec::new(),
        })
        .collect();
    let mut categorical: Vec<CategoricalColumn> = headers
        .iter()
        .zip(&roles)
        .filter(|(_, &r)| r == ColumnRole::Categorical)
        .map(|(h, _)| CategoricalColumn {
            name: h.clone(),
            values: Vec::new(),
        })
        .collect();
    let has_id = roles.contains(&ColumnRole::Id);
    let has_tag = roles.contains(&ColumnRole::AttackTag);
    let mut labels: Vec<u8> = Vec::new();
    let mut ids: Vec<String> = Vec::new();
    let mut tags: Vec<String> = Vec::new();
    let mut id_set: HashSet<String> = HashSet::new();
    let mut rejected_missing = 0usize;

    'rows: for (row_idx, rec) in records.iter().enumerate() {
        let row_no = row_idx + 1;
        if rec.len() != headers.len() {
            return Err(PipelineError::Ingest {
                row: row_no,
                column: String::new(),
                message: format!("expected {} fields, got {}", headers.len(), rec.len()),
            });
        }
        // First pass: reject the whole row if any used cell is missing.
        for (idx, role) in roles.iter().enumerate() {
            if *role == ColumnRole::Ignore {
                continue;
            }
            if rec.get(idx).unwrap_or("").trim().is_empty() {
                rejected_missing += 1;
                continue 'rows;
            }
        }

        let mut num_it = numeric.iter_mut();
        let mut cat_it = categorical.iter_mut();
        for (idx, role) in roles.iter().enumerate() {
            let cell = rec.get(idx).expect("length checked").trim();
            match role {
                ColumnRole::Numeric => {
                    let col = num_it.next().expect("column order is fixed");
                    let v: f64 = cell.parse().map_err(|_| PipelineError::Ingest {
                        row: row_no,
                        column: col.name.clone(),
                        message: format!("'{cell}' is not numeric"),
                    })?;
                    if !v.is_finite() {
                        return Err(PipelineError::Ingest {
                            row: row_no,
                            column: col.name.clone(),
                            message: format!("non-finite value '{cell}'"),
                        });
                    }
                    col.values.push(v);
                }
                ColumnRole::Categorical => {
                    let col = cat_it.next().expect("column order is fixed");
                    col.values.push(cell.to_string());
                }
                ColumnRole::Label => {
                    let y: u8 = cell.parse().ok().filter(|&y| y <= 1).ok_or_else(|| {
                        PipelineError::Ingest {
                            row: row_no,
                            column: headers[idx].clone(),
                            message: format!("label must be 0 or 1, got '{cell}'"),
                        }
                    })?;
                    labels.push(y);
                }
                ColumnRole::Id => {
                    if !id_set.insert(cell.to_string()) {
                        return Err(PipelineError::Ingest {
                            row: row_no,
                            column: headers[idx].clone(),
                            message: format!("duplicate id '{cell}'"),
                        });
                    }
                    ids.push(cell.to_string());
                }
                ColumnRole::AttackTag => tags.push(cell.to_string()),
                ColumnRole::Ignore => {}
            }
        }
    }

    if labels.is_empty() {
        return Err(PipelineError::Data(
            "no usable rows after ingest (all empty or rejected)".into(),
        ));
    }
    if numeric.is_empty() && categorical.is_empty() {
        return Err(PipelineError::Data("no feature columns declared".into()));
    }

    Ok(RawDataset {
        numeric,
        categorical,
        labels,
        ids: has_id.then_some(ids),
        attack_tags: has_tag.then_some(tags),
        rejected_missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "\
id,dur,proto,attack_cat,label
1,0.5,tcp,normal,0
2,1.5,udp,generic,1
3,2.5,tcp,normal,0
";

    #[test]
    fn ingests_with_inferred_roles() {
        let data = load_csv(CSV.as_bytes(), None).unwrap();
        assert_eq!(data.n_rows(), 3);
        assert_eq!(data.numeric.len(), 1);
        assert_eq!(data.numeric[0].name, "dur");
        assert_eq!(data.numeric[0].values, vec![0.5, 1.5, 2.5]);
        assert_eq!(data.categorical.len(), 1);
        assert_eq!(data.categorical[0].values, vec!["tcp", "udp", "tcp"]);
        assert_eq!(data.labels, vec![0, 1, 0]);
        assert_eq!(data.ids.as_ref().unwrap().len(), 3);
        assert_eq!(data.attack_tags.as_ref().unwrap()[1], "generic");
        assert_eq!(data.class_counts(), (2, 1));
    }

    #[test]
    fn missing_cells_reject_the_row_and_are_counted() {
        let csv = "id,dur,label\n1,0.5,0\n2,,1\n3,2.0,1\n";
        let data = load_csv(csv.as_bytes(), None).unwrap();
        assert_eq!(data.n_rows(), 2);
        assert_eq!(data.rejected_missing, 1);
        assert_eq!(data.labels, vec![0, 1]);
    }

    #[test]
    fn unparseable_numeric_is_a_hard_error_with_location() {
        let schema = Schema::from_json(
            r#"{"columns":[
                {"name":"dur","role":"numeric"},
                {"name":"label","role":"label"}
            ]}"#,
        )
        .unwrap();
        let csv = "dur,label\n0.5,0\nabc,1\n";
        let err = load_csv(csv.as_bytes(), Some(&schema)).unwrap_err();
        match err {
            PipelineError::Ingest { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "dur");
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn non_finite_numeric_rejected() {
        let schema = Schema::from_json(
            r#"{"columns":[
                {"name":"dur","role":"numeric"},
                {"name":"label","role":"label"}
            ]}"#,
        )
        .unwrap();
        let csv = "dur,label\ninf,0\n";
        assert!(load_csv(csv.as_bytes(), Some(&schema)).is_err());
    }

    #[test]
    fn bad_label_rejected() {
        let csv = "dur,label\n0.5,2\n";
        assert!(load_csv(csv.as_bytes(), None).is_err());
        let csv = "dur,label\n0.5,-1\n";
        assert!(load_csv(csv.as_bytes(), None).is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let csv = "id,dur,label\n7,0.5,0\n7,1.0,1\n";
        assert!(load_csv(csv.as_bytes(), None).is_err());
    }

    #[test]
    fn duplicate_headers_rejected() {
        let csv = "dur,dur,label\n0.5,1.0,0\n";
        assert!(load_csv(csv.as_bytes(), None).is_err());
    }

    #[test]
    fn schema_header_mismatch_rejected() {
        let schema = Schema::from_json(
            r#"{"columns":[
                {"name":"dur","role":"numeric"},
                {"name":"rate","role":"numeric"},
                {"name":"label","role":"label"}
            ]}"#,
        )
        .unwrap();
        let csv = "dur,label\n0.5,0\n";
        assert!(matches!(
            load_csv(csv.as_bytes(), Some(&schema)),
            Err(PipelineError::Schema(_))
        ));
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let csv = "\
id,dur,proto,label
1,0.5,tcp,0
2,0.5,tcp,0
3,0.5,tcp,1
4,1.5,udp,1
";
        let data = load_csv(csv.as_bytes(), None).unwrap();
        let (deduped, removed) = data.dedup();
        assert_eq!(removed, 1);
        assert_eq!(deduped.n_rows(), 3);
        // Row with id 2 was the duplicate; id 3 differs by label.
        assert_eq!(
            deduped.ids.as_ref().unwrap(),
            &vec!["1".to_string(), "3".into(), "4".into()]
        );
    }

    #[test]
    fn inference_marks_mixed_column_categorical() {
        let csv = "code,label\n12,0\nA7,1\n";
        let data = load_csv(csv.as_bytes(), None).unwrap();
        assert!(data.numeric.is_empty());
        assert_eq!(data.categorical[0].name, "code");
    }
}
