use std::collections::{HashMap, HashSet};

use edgeguard_nn::stats::{median_sorted, quantile_sorted, sort_scalars};
use edgeguard_nn::Tensor2f64;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};
use crate::matrix::FeatureMatrix;
use crate::raw::RawDataset;

/// Columns whose training stddev falls below this are constant and dropped.
const STD_EPSILON: f64 = 1e-12;

/// Name suffix for the bucket that absorbs low-frequency and unseen
/// categories.
pub const OTHER_CATEGORY: &str = "__other__";

/// Preprocessing knobs. Defaults reproduce the standard recipe: dedup,
/// conditional capping at the 95th percentile, one-hot with at most 32
/// retained categories, 80/20 stratified split, minority oversampling with
/// 5 neighbors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineOptions {
    pub dedup: bool,
    pub winsorize: bool,
    pub winsor_percentile: f64,
    pub max_categories: usize,
    pub split_ratio: f64,
    pub smote: bool,
    pub smote_k: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            dedup: true,
            winsorize: true,
            winsor_percentile: 0.95,
            max_categories: 32,
            split_ratio: 0.8,
            smote: true,
            smote_k: 5,
        }
    }
}

impl PipelineOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.winsor_percentile > 0.0 && self.winsor_percentile < 1.0) {
            return Err(PipelineError::Config(format!(
                "winsor_percentile must be in (0, 1), got {}",
                self.winsor_percentile
            )));
        }
        if self.max_categories < 2 {
            return Err(PipelineError::Config(format!(
                "max_categories must be at least 2, got {}",
                self.max_categories
            )));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(PipelineError::Config(format!(
                "split_ratio must be in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if self.smote_k == 0 {
            return Err(PipelineError::Config("smote_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Upper cap for a numeric column, or `None` when the column is not
/// heavy-tailed. The trigger requires both `max > 10 * median` and
/// `max > 10`; the cap is the interpolated percentile of the training
/// values.
pub fn winsorize_fit(values: &[f64], percentile: f64) -> Result<Option<f64>> {
    if values.is_empty() {
        return Err(PipelineError::Data("cannot fit cap on empty column".into()));
    }
    let mut sorted = values.to_vec();
    sort_scalars(&mut sorted);
    let median = median_sorted(&sorted)?;
    let max = *sorted.last().expect("non-empty");
    if max > 10.0 * median && max > 10.0 {
        Ok(Some(quantile_sorted(&sorted, percentile)?))
    } else {
        Ok(None)
    }
}

/// Replaces values above the cap with the cap.
pub fn winsorize_apply(values: &mut [f64], cap: f64) {
    for v in values {
        if *v > cap {
            *v = cap;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericTransform {
    pub name: String,
    pub winsor_cap: Option<f64>,
}

/// Retained categories for one column, most frequent first. The first entry
/// is the dropped reference level and encodes as all-zeros. When training
/// saw more distinct categories than the retention limit, an extra bucket
/// column absorbs the remainder and any value unseen at apply time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryVocab {
    pub name: String,
    pub categories: Vec<String>,
    pub has_other: bool,
}

impl CategoryVocab {
    /// Number of encoded columns this vocabulary produces.
    pub fn width(&self) -> usize {
        self.categories.len().saturating_sub(1) + usize::from(self.has_other)
    }

    /// Column offset within this vocabulary's block for a value, or `None`
    /// for the reference category and for unseen values when no bucket
    /// column exists.
    fn offset_of(&self, value: &str) -> Option<usize> {
        match self.categories.iter().position(|c| c == value) {
            Some(0) => None,
            Some(i) => Some(i - 1),
            None => self.has_other.then_some(self.categories.len() - 1),
        }
    }
}

/// Retained vocabulary for a training column: categories ranked by count
/// (ties broken alphabetically), truncated to `max_categories`.
pub fn onehot_fit(name: &str, values: &[String], max_categories: usize) -> Result<CategoryVocab> {
    if values.is_empty() {
        return Err(PipelineError::Data(format!(
            "cannot fit vocabulary on empty column '{name}'"
        )));
    }
    if max_categories < 2 {
        return Err(PipelineError::Config(format!(
            "max_categories must be at least 2, got {max_categories}"
        )));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for v in values {
        *counts.entry(v.as_str()).or_insert(0) += 1;
    }
    let distinct = counts.len();
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_categories);
    Ok(CategoryVocab {
        name: name.to_string(),
        categories: ranked.into_iter().map(|(c, _)| c.to_string()).collect(),
        has_other: distinct > max_categories,
    })
}

/// Standardization parameters for one retained output column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledColumn {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

/// Fitted preprocessing state. Fit on training data only; applying it to any
/// partition replays the same caps, vocabularies, and scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub version: u32,
    pub numeric: Vec<NumericTransform>,
    pub categorical: Vec<CategoryVocab>,
    /// Retained output columns in final order, with train statistics.
    pub columns: Vec<ScaledColumn>,
    /// Encoded columns removed because they were constant in training.
    pub dropped_constant: Vec<String>,
}

pub const TRANSFORM_SPEC_VERSION: u32 = 1;

impl TransformSpec {
    pub fn from_json(text: &str) -> Result<TransformSpec> {
        let spec: TransformSpec =
            serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        if spec.version != TRANSFORM_SPEC_VERSION {
            return Err(PipelineError::Config(format!(
                "unsupported transform spec version {}",
                spec.version
            )));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    /// Names of the encoded design-matrix columns before constant-column
    /// removal: numeric columns first, then each vocabulary's block.
    fn prescale_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for n in &self.numeric {
            names.push(n.name.clone());
        }
        for v in &self.categorical {
            for cat in v.categories.iter().skip(1) {
                names.push(format!("{}={}", v.name, cat));
            }
            if v.has_other {
                names.push(format!("{}={}", v.name, OTHER_CATEGORY));
            }
        }
        names
    }

    /// Caps and one-hot encodes without scaling.
    fn encode_prescale(&self, data: &RawDataset) -> Result<Tensor2f64> {
        if data.numeric.len() != self.numeric.len()
            || data
                .numeric
                .iter()
                .zip(&self.numeric)
                .any(|(c, t)| c.name != t.name)
        {
            return Err(PipelineError::Schema(
                "numeric columns do not match the fitted transform".into(),
            ));
        }
        if data.categorical.len() != self.categorical.len()
            || data
                .categorical
                .iter()
                .zip(&self.categorical)
                .any(|(c, v)| c.name != v.name)
        {
            return Err(PipelineError::Schema(
                "categorical columns do not match the fitted transform".into(),
            ));
        }
        let rows = data.n_rows();
        let width: usize =
            self.numeric.len() + self.categorical.iter().map(|v| v.width()).sum::<usize>();
        let mut x = Tensor2f64::zeros(rows, width);
        for (j, (col, t)) in data.numeric.iter().zip(&self.numeric).enumerate() {
            for (r, &v) in col.values.iter().enumerate() {
                let v = match t.winsor_cap {
                    Some(cap) if v > cap => cap,
                    _ => v,
                };
                x.set(r, j, v);
            }
        }
        let mut base = self.numeric.len();
        for (col, vocab) in data.categorical.iter().zip(&self.categorical) {
            for (r, value) in col.values.iter().enumerate() {
                if let Some(off) = vocab.offset_of(value) {
                    x.set(r, base + off, 1.0);
                }
            }
            base += vocab.width();
        }
        Ok(x)
    }
}

/// Fits the full transform on training data and returns the encoded
/// training matrix along with the replayable state.
pub fn fit_transform(
    train: &RawDataset,
    opts: &PipelineOptions,
) -> Result<(FeatureMatrix, TransformSpec)> {
    opts.validate()?;
    if train.n_rows() == 0 {
        return Err(PipelineError::Data(
            "cannot fit transform on empty data".into(),
        ));
    }
    let numeric = train
        .numeric
        .iter()
        .map(|c| {
            let cap = if opts.winsorize {
                winsorize_fit(&c.values, opts.winsor_percentile)?
            } else {
                None
            };
            Ok(NumericTransform {
                name: c.name.clone(),
                winsor_cap: cap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let categorical = train
        .categorical
        .iter()
        .map(|c| onehot_fit(&c.name, &c.values, opts.max_categories))
        .collect::<Result<Vec<_>>>()?;

    let mut spec = TransformSpec {
        version: TRANSFORM_SPEC_VERSION,
        numeric,
        categorical,
        columns: Vec::new(),
        dropped_constant: Vec::new(),
    };
    let names = spec.prescale_names();
    {
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(PipelineError::Schema(format!(
                    "encoded column name '{n}' is ambiguous"
                )));
            }
        }
    }

    let prescale = spec.encode_prescale(train)?;
    let rows = prescale.rows() as f64;
    for (j, name) in names.iter().enumerate() {
        let mut sum = 0.0;
        for r in 0..prescale.rows() {
            sum += prescale.get(r, j);
        }
        let mean = sum / rows;
        let mut ss = 0.0;
        for r in 0..prescale.rows() {
            let d = prescale.get(r, j) - mean;
            ss += d * d;
        }
        let std = (ss / rows).sqrt();
        if std < STD_EPSILON {
            spec.dropped_constant.push(name.clone());
        } else {
            spec.columns.push(ScaledColumn {
                name: name.clone(),
                mean,
                std,
            });
        }
    }
    if spec.columns.is_empty() {
        return Err(PipelineError::Data(
            "every encoded column is constant; nothing to train on".into(),
        ));
    }

    let x = project_and_scale(&prescale, &names, &spec.columns)?;
    let mut fm = FeatureMatrix::new(
        x,
        train.labels.clone(),
        spec.columns.iter().map(|c| c.name.clone()).collect(),
    )?;
    fm.attack_tags = train.attack_tags.clone();
    Ok((fm, spec))
}

/// Replays a fitted transform on any partition. Never recomputes statistics.
pub fn apply_transform(spec: &TransformSpec, data: &RawDataset) -> Result<FeatureMatrix> {
    let prescale = spec.encode_prescale(data)?;
    let names = spec.prescale_names();
    let x = project_and_scale(&prescale, &names, &spec.columns)?;
    let mut fm = FeatureMatrix::new(
        x,
        data.labels.clone(),
        spec.columns.iter().map(|c| c.name.clone()).collect(),
    )?;
    fm.attack_tags = data.attack_tags.clone();
    Ok(fm)
}

fn project_and_scale(
    prescale: &Tensor2f64,
    prescale_names: &[String],
    columns: &[ScaledColumn],
) -> Result<Tensor2f64> {
    let index: HashMap<&str, usize> = prescale_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut out = Tensor2f64::zeros(prescale.rows(), columns.len());
    for (jo, col) in columns.iter().enumerate() {
        let js = *index.get(col.name.as_str()).ok_or_else(|| {
            PipelineError::Schema(format!("fitted column '{}' missing from data", col.name))
        })?;
        for r in 0..prescale.rows() {
            out.set(r, jo, (prescale.get(r, js) - col.mean) / col.std);
        }
    }
    Ok(out)
}
