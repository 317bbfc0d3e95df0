use edgeguard_nn::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::FeatureMatrix;
use crate::raw::RawDataset;
use crate::smote::oversample_matrix;
use crate::split::stratified_split_raw;
use crate::transform::{apply_transform, fit_transform, PipelineOptions, TransformSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassBalance {
    pub negative: usize,
    pub positive: usize,
}

impl From<(usize, usize)> for ClassBalance {
    fn from((negative, positive): (usize, usize)) -> Self {
        ClassBalance { negative, positive }
    }
}

/// What the preprocessing run did to the data, for the audit artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessAudit {
    pub train_rows_read: usize,
    pub test_rows_read: Option<usize>,
    pub rows_rejected_missing: usize,
    pub duplicates_removed: usize,
    pub split_performed: bool,
    pub train_balance_before_oversample: ClassBalance,
    pub train_balance_after_oversample: ClassBalance,
    pub test_balance: ClassBalance,
    pub synthetic_rows_added: usize,
    pub features_retained: usize,
    pub constant_columns_dropped: Vec<String>,
}

pub struct PreprocessOutput {
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    pub spec: TransformSpec,
    pub audit: PreprocessAudit,
}

/// Runs the full leakage-safe recipe.
///
/// Dedup (train side) runs before the split so duplicates can never span the
/// train/test boundary; every statistic is fitted on the train partition and
/// replayed on test; oversampling touches the train partition only and runs
/// after scaling. When `test` is `None` the train data is split by
/// `opts.split_ratio`.
pub fn run_preprocess(
    train: RawDataset,
    test: Option<RawDataset>,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<PreprocessOutput> {
    opts.validate()?;
    let train_rows_read = train.n_rows();
    let test_rows_read = test.as_ref().map(|t| t.n_rows());
    let rows_rejected_missing =
        train.rejected_missing + test.as_ref().map_or(0, |t| t.rejected_missing);

    let (train, duplicates_removed) = if opts.dedup {
        train.dedup()
    } else {
        (train, 0)
    };

    let split_performed = test.is_none();
    let (train_part, test_part) = match test {
        Some(t) => (train, t),
        None => stratified_split_raw(&train, opts.split_ratio, seed)?,
    };

    let (train_fm, spec) = fit_transform(&train_part, opts)?;
    let test_fm = apply_transform(&spec, &test_part)?;

    let train_balance_before = train_fm.class_counts();
    let train_fm = if opts.smote {
        oversample_matrix(&train_fm, opts.smote_k, derive_seed(seed, "smote", 0))?
    } else {
        train_fm
    };
    let train_balance_after = train_fm.class_counts();

    let audit = PreprocessAudit {
        train_rows_read,
        test_rows_read,
        rows_rejected_missing,
        duplicates_removed,
        split_performed,
        train_balance_before_oversample: train_balance_before.into(),
        train_balance_after_oversample: train_balance_after.into(),
        test_balance: test_fm.class_counts().into(),
        synthetic_rows_added: train_fm.n_rows() - train_fm.n_original,
        features_retained: spec.n_features(),
        constant_columns_dropped: spec.dropped_constant.clone(),
    };
    Ok(PreprocessOutput {
        train: train_fm,
        test: test_fm,
        spec,
        audit,
    })
}
