//! Projection and nearest-neighbor classification under the Frobenius
//! metric.

use nalgebra::DMatrix;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::ProjectionModel;

/// A projected sample: the reduced feature matrix `W^T X` and its label.
#[derive(Debug, Clone)]
pub struct ProjectedSample {
    pub features: DMatrix<f64>,
    pub label: usize,
}

/// Project `x` through the first `dims` directions of `model`.
///
/// Truncating the direction count this way equals fitting with a smaller
/// `r1`, because directions are computed greedily in order; it is what makes
/// dimension sweeps cheap.
pub fn project(x: &DMatrix<f64>, model: &ProjectionModel, dims: usize) -> Result<DMatrix<f64>> {
    if dims == 0 || dims > model.num_directions() {
        return Err(Error::InvalidParameter(format!(
            "dims = {dims} outside 1..={}",
            model.num_directions()
        )));
    }
    if x.nrows() != model.input_rows() {
        return Err(Error::ShapeMismatch(format!(
            "sample has {} rows, model expects {}",
            x.nrows(),
            model.input_rows()
        )));
    }
    Ok(model.w().columns(0, dims).transpose() * x)
}

/// Project every sample of a dataset.
pub fn project_dataset(
    dataset: &Dataset,
    model: &ProjectionModel,
    dims: usize,
) -> Result<Vec<ProjectedSample>> {
    dataset
        .samples()
        .iter()
        .map(|s| {
            Ok(ProjectedSample {
                features: project(&s.values, model, dims)?,
                label: s.label,
            })
        })
        .collect()
}

/// Label of the training sample nearest to `test` in Frobenius distance.
/// Ties go to the smallest training index.
pub fn nn_classify(train: &[ProjectedSample], test: &DMatrix<f64>) -> Result<usize> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut best_label = 0usize;
    let mut best_dist = f64::INFINITY;
    for sample in train {
        if sample.features.shape() != test.shape() {
            return Err(Error::ShapeMismatch(format!(
                "training features {:?} vs query {:?}",
                sample.features.shape(),
                test.shape()
            )));
        }
        let dist = (&sample.features - test).norm_squared();
        if dist < best_dist {
            best_dist = dist;
            best_label = sample.label;
        }
    }
    Ok(best_label)
}

/// Fraction of test samples whose nearest projected training neighbor shares
/// their label.
pub fn accuracy(
    model: &ProjectionModel,
    train: &Dataset,
    test: &Dataset,
    dims: usize,
) -> Result<f64> {
    let train_proj = project_dataset(train, model, dims)?;
    let mut correct = 0usize;
    for sample in test.samples() {
        let features = project(&sample.values, model, dims)?;
        if nn_classify(&train_proj, &features)? == sample.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}
