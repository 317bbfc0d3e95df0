use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

/// How a CSV column participates in the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    /// Continuous feature; every non-missing cell must parse as a finite
    /// number.
    Numeric,
    /// Discrete feature; one-hot encoded against a capped vocabulary.
    Categorical,
    /// Binary target, strictly 0 or 1.
    Label,
    /// Row identifier; checked for uniqueness, excluded from features.
    Id,
    /// Free-text class annotation carried through for reporting, excluded
    /// from features.
    AttackTag,
    /// Present in the file but not used.
    Ignore,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaColumn {
    pub name: String,
    pub role: ColumnRole,
}

/// Declared column roles for a CSV file. Column order always comes from the
/// CSV header; the schema only assigns roles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<SchemaColumn>,
}

impl Schema {
    pub fn from_json(json: &str) -> Result<Self> {
        let schema: Schema = serde_json::from_str(json)
            .map_err(|e| PipelineError::Schema(format!("unparseable schema: {e}")))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(PipelineError::Schema("schema has no columns".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(PipelineError::Schema(format!(
                    "duplicate column '{}' in schema",
                    c.name
                )));
            }
        }
        let labels = self
            .columns
            .iter()
            .filter(|c| c.role == ColumnRole::Label)
            .count();
        if labels != 1 {
            return Err(PipelineError::Schema(format!(
                "schema must declare exactly one label column, found {labels}"
            )));
        }
        Ok(())
    }

    pub fn role_of(&self, name: &str) -> Option<ColumnRole> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.role)
    }
}
