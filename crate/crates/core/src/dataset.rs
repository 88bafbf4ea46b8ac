//! Labeled datasets and per-class views.
//!
//! A [`Dataset`] is an immutable row-major feature matrix paired with integer
//! labels. Labels are opaque: two datasets never need to share a label set.

use crate::error::{Error, Result};

/// `n` feature rows of dimension `d` with one integer label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<i64>,
    dim: usize,
    name: String,
}

impl Dataset {
    /// Build and validate a dataset from row-major features.
    pub fn new(features: Vec<f64>, labels: Vec<i64>, dim: usize, name: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if !features.len().is_multiple_of(dim) {
            return Err(Error::ShapeMismatch(format!(
                "{} feature values do not divide into rows of dimension {dim}",
                features.len()
            )));
        }
        let ds = Self {
            features,
            labels,
            dim,
            name: name.into(),
        };
        validate_dataset(&ds)?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.features.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    /// New dataset made of the given rows, in order.
    pub fn select(&self, rows: &[usize], name: impl Into<String>) -> Result<Self> {
        let mut features = Vec::with_capacity(rows.len() * self.dim);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        Self::new(features, labels, self.dim, name)
    }

    /// Apply `(x - mean) / scale` per coordinate.
    pub fn standardized(&self, mean: &[f64], scale: &[f64]) -> Result<Self> {
        if mean.len() != self.dim || scale.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: mean.len().min(scale.len()),
            });
        }
        let features = self
            .rows()
            .flat_map(|row| row.iter().zip(mean).zip(scale).map(|((x, m), s)| (x - m) / s))
            .collect();
        Self::new(features, self.labels.clone(), self.dim, self.name.clone())
    }
}

/// Check the dataset invariants: non-empty, one label per row, finite features.
pub fn validate_dataset(ds: &Dataset) -> Result<()> {
    if ds.dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let n = ds.features.len() / ds.dim;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if ds.labels.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: ds.labels.len(),
        });
    }
    if let Some(pos) = ds.features.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteFeature {
            row: pos / ds.dim,
            col: pos % ds.dim,
        });
    }
    Ok(())
}

/// Grouping of row indices by label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassIndex {
    classes: Vec<i64>,
    members: Vec<Vec<usize>>,
    /// Position in `classes` of each row's label.
    slot_of_row: Vec<usize>,
}

impl ClassIndex {
    /// Distinct labels, ascending.
    pub fn classes(&self) -> &[i64] {
        &self.classes
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Index into [`classes`](Self::classes) of the label of row `row`.
    #[inline]
    pub fn slot_of_row(&self, row: usize) -> usize {
        self.slot_of_row[row]
    }

    pub fn slots(&self) -> &[usize] {
        &self.slot_of_row
    }

    pub fn view<'a>(&'a self, dataset: &'a Dataset, slot: usize) -> ClassView<'a> {
        ClassView {
            label: self.classes[slot],
            dataset,
            rows: &self.members[slot],
        }
    }

    pub fn views<'a>(&'a self, dataset: &'a Dataset) -> impl Iterator<Item = ClassView<'a>> {
        (0..self.classes.len()).map(move |s| self.view(dataset, s))
    }
}

/// Group rows by label, classes sorted ascending.
pub fn build_class_index(dataset: &Dataset) -> ClassIndex {
    let mut classes: Vec<i64> = dataset.labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut members = vec![Vec::new(); classes.len()];
    let mut slot_of_row = Vec::with_capacity(dataset.labels.len());
    for (row, label) in dataset.labels.iter().enumerate() {
        // classes is sorted and contains every label
        let slot = classes.binary_search(label).unwrap();
        members[slot].push(row);
        slot_of_row.push(slot);
    }
    ClassIndex {
        classes,
        members,
        slot_of_row,
    }
}

/// The empirical class-conditional feature distribution of one label.
#[derive(Debug, Clone, Copy)]
pub struct ClassView<'a> {
    pub label: i64,
    pub dataset: &'a Dataset,
    pub rows: &'a [usize],
}

impl<'a> ClassView<'a> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &'a [f64]> + 'a {
        let ds = self.dataset;
        self.rows.iter().map(move |&r| ds.row(r))
    }
}

/// Pooled per-coordinate mean and standard deviation (floored at 1e-12)
/// over both datasets.
pub fn pooled_moments(a: &Dataset, b: &Dataset) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let d = a.dim();
    let total = (a.len() + b.len()) as f64;
    let mut mean = vec![0.0; d];
    for row in a.rows().chain(b.rows()) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut var = vec![0.0; d];
    for row in a.rows().chain(b.rows()) {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let scale = var.into_iter().map(|v| (v / total).sqrt().max(1e-12)).collect();
    Ok((mean, scale))
}
