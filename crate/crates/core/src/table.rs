//! Row-major feature tables and learning targets shared by the learners,
//! preprocessing steps and evaluation harness.

use serde::{Deserialize, Serialize};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix shape does not match data");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    /// Builds a matrix from equally long rows. An empty input yields a 0x0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// New matrix holding the given rows, in the given order (repeats allowed).
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self::new(idx.len(), self.cols, data)
    }

    pub fn select_cols(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let r = self.row(i);
            data.extend(cols.iter().map(|&j| r[j]));
        }
        Self::new(self.rows, cols.len(), data)
    }

    pub fn push_row(&mut self, row: &[f64]) {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        assert_eq!(row.len(), self.cols, "row width mismatch");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A feature matrix with its column-name contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub names: Vec<String>,
    pub matrix: Matrix,
}

impl Features {
    pub fn new(names: Vec<String>, matrix: Matrix) -> Self {
        assert_eq!(names.len(), matrix.n_cols(), "name count does not match width");
        Self { names, matrix }
    }

    /// Convenience constructor with generated names `f0, f1, ...`.
    pub fn unnamed(matrix: Matrix) -> Self {
        let names = (0..matrix.n_cols()).map(|j| format!("f{j}")).collect();
        Self::new(names, matrix)
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::new(self.names.clone(), self.matrix.select_rows(idx))
    }

    /// Columns by name, in the order given. Returns the first unknown name on failure.
    pub fn select_names(&self, names: &[String]) -> Result<Self, String> {
        let cols = names
            .iter()
            .map(|n| self.names.iter().position(|m| m == n).ok_or_else(|| n.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(names.to_vec(), self.matrix.select_cols(&cols)))
    }
}

/// Class labels as indices into an ordered roster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassLabels {
    pub roster: Vec<String>,
    pub labels: Vec<usize>,
}

impl ClassLabels {
    pub fn new(roster: Vec<String>, labels: Vec<usize>) -> Self {
        debug_assert!(labels.iter().all(|&l| l < roster.len()));
        Self { roster, labels }
    }

    /// Builds labels from strings with the given roster; unknown labels are rejected.
    pub fn from_strings<S: AsRef<str>>(roster: &[String], values: &[S]) -> Result<Self, String> {
        let labels = values
            .iter()
            .map(|v| {
                roster
                    .iter()
                    .position(|r| r == v.as_ref())
                    .ok_or_else(|| v.as_ref().to_string())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(roster.to_vec(), labels))
    }

    pub fn n_classes(&self) -> usize {
        self.roster.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.roster.len()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self::new(self.roster.clone(), idx.iter().map(|&i| self.labels[i]).collect())
    }
}

/// Learning target: class labels or continuous values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Classes(ClassLabels),
    Values(Vec<f64>),
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Classes(c) => c.labels.len(),
            Target::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        match self {
            Target::Classes(c) => Target::Classes(c.select(idx)),
            Target::Values(v) => Target::Values(idx.iter().map(|&i| v[i]).collect()),
        }
    }

    pub fn as_classes(&self) -> Option<&ClassLabels> {
        match self {
            Target::Classes(c) => Some(c),
            Target::Values(_) => None,
        }
    }

    pub fn as_values(&self) -> Option<&[f64]> {
        match self {
            Target::Classes(_) => None,
            Target::Values(v) => Some(v),
        }
    }
}
