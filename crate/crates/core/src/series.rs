//! Uniformly sampled scalar series: ingestion, statistics, splitting,
//! delay-embedding windows and z-score scaling.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ten-minute sampling, the resolution of typical wind-farm SCADA exports.
pub const DEFAULT_SAMPLE_INTERVAL: Duration = Duration::from_secs(600);

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    values: Vec<T>,
    pub sample_interval: Duration,
    pub origin_label: Option<String>,
}

impl<T: Scalar> TimeSeries<T> {
    /// Builds a series, rejecting empty input and non-finite values.
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            values,
            sample_interval: DEFAULT_SAMPLE_INTERVAL,
            origin_label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.origin_label = Some(label.into());
        self
    }

    pub fn with_interval(mut self, interval: Duration) -> Self {
        self.sample_interval = interval;
        self
    }

    /// Same metadata, new values. Used internally for segments that may be empty.
    fn derive(&self, values: Vec<T>) -> Self {
        Self {
            values,
            sample_interval: self.sample_interval,
            origin_label: self.origin_label.clone(),
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn summarize(&self) -> SeriesStats<T> {
        summarize(self)
    }
}

/// Which CSV column holds the series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

impl FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim().parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.trim().to_string()),
        })
    }
}

impl fmt::Display for ColumnSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnSelector::Index(i) => write!(f, "{i}"),
            ColumnSelector::Name(n) => f.write_str(n),
        }
    }
}

/// Loads one column of a comma-delimited file.
///
/// The first row is treated as a header when its selected cell does not parse
/// as a number. Parse errors report the 1-based line number in the file.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, column: &ColumnSelector) -> Result<TimeSeries<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut col_index: Option<usize> = match column {
        ColumnSelector::Index(i) => Some(*i),
        ColumnSelector::Name(_) => None,
    };
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let row = line + 1;
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if row == 1 {
            let header_like = match column {
                ColumnSelector::Name(name) => {
                    col_index = record.iter().position(|h| h == name);
                    if col_index.is_none() {
                        return Err(Error::MissingColumn {
                            path: path.to_path_buf(),
                            column: name.clone(),
                        });
                    }
                    true
                }
                ColumnSelector::Index(i) => match record.get(*i) {
                    Some(cell) => cell.parse::<f64>().is_err(),
                    None => {
                        return Err(Error::MissingColumn {
                            path: path.to_path_buf(),
                            column: column.to_string(),
                        })
                    }
                },
            };
            if header_like {
                continue;
            }
        }
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let idx = col_index.expect("column resolved on first row");
        let cell = record.get(idx).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: column.to_string(),
        })?;
        let parsed = cell
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .and_then(T::from_f64)
            .ok_or_else(|| Error::ParseValue {
                path: path.to_path_buf(),
                row,
                value: cell.to_string(),
            })?;
        values.push(parsed);
    }
    if values.is_empty() {
        return Err(Error::EmptyData {
            path: path.to_path_buf(),
        });
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(TimeSeries::new(values)?.with_label(label))
}

/// Descriptive statistics. `std` is the population (1/N) deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStats<T> {
    pub mean: T,
    pub std: T,
    pub min: T,
    pub max: T,
    pub count: usize,
}

pub fn summarize<T: Scalar>(ts: &TimeSeries<T>) -> SeriesStats<T> {
    let v = ts.values();
    let n = T::from_usize_lossy(v.len());
    let mean = v.iter().copied().sum::<T>() / n;
    let var = v.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    let min = v.iter().copied().fold(T::infinity(), T::min);
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    SeriesStats {
        // Rounding can push the mean of a constant series a hair outside [min, max].
        mean: mean.max(min).min(max),
        std: var.sqrt(),
        min,
        max,
        count: v.len(),
    }
}

/// Splits off the last `n_test` values. The training part is never empty.
pub fn split_train_test<T: Scalar>(ts: &TimeSeries<T>, n_test: usize) -> Result<(TimeSeries<T>, TimeSeries<T>)> {
    if n_test >= ts.len() {
        return Err(Error::SplitTooLarge { n_test, len: ts.len() });
    }
    let cut = ts.len() - n_test;
    Ok((
        ts.derive(ts.values[..cut].to_vec()),
        ts.derive(ts.values[cut..].to_vec()),
    ))
}

/// Supervised pairs from delay embedding: one input window per sample and
/// one target column per horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset<T> {
    inputs: Vec<T>,
    targets: Vec<T>,
    /// Index into the source series of the first element of each window.
    starts: Vec<usize>,
    pub window_dim: usize,
    pub delay: usize,
    pub horizons: Vec<usize>,
}

impl<T: Scalar> WindowedDataset<T> {
    /// Dataset from explicit input/target pairs, labelled as horizon 1.
    pub fn from_pairs(inputs: &[Vec<T>], targets: &[T]) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::LengthMismatch {
                left: inputs.len(),
                right: targets.len(),
            });
        }
        let window_dim = inputs.first().map_or(0, Vec::len);
        if window_dim == 0 || inputs.iter().any(|x| x.len() != window_dim) {
            return Err(Error::Config("inputs must be non-empty rows of equal length".into()));
        }
        Ok(Self {
            inputs: inputs.concat(),
            targets: targets.to_vec(),
            starts: (0..inputs.len()).collect(),
            window_dim,
            delay: 1,
            horizons: vec![1],
        })
    }

    pub fn num_samples(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn input(&self, sample: usize) -> &[T] {
        &self.inputs[sample * self.window_dim..(sample + 1) * self.window_dim]
    }

    pub fn targets(&self, sample: usize) -> &[T] {
        let k = self.horizons.len();
        &self.targets[sample * k..(sample + 1) * k]
    }

    /// Target of `sample` for the horizon at position `horizon_pos` in `horizons`.
    pub fn target(&self, sample: usize, horizon_pos: usize) -> T {
        self.targets[sample * self.horizons.len() + horizon_pos]
    }

    pub fn start(&self, sample: usize) -> usize {
        self.starts[sample]
    }

    /// Source index of the last input element of `sample` (the forecast origin).
    pub fn origin(&self, sample: usize) -> usize {
        self.starts[sample] + (self.window_dim - 1) * self.delay
    }

    /// Copy restricted to one horizon, keeping sample order.
    pub fn for_horizon(&self, horizon: usize) -> Option<Self> {
        let pos = self.horizons.iter().position(|&h| h == horizon)?;
        Some(Self {
            inputs: self.inputs.clone(),
            targets: (0..self.num_samples()).map(|i| self.target(i, pos)).collect(),
            starts: self.starts.clone(),
            window_dim: self.window_dim,
            delay: self.delay,
            horizons: vec![horizon],
        })
    }
}

/// Minimum series length that yields one sample.
pub fn min_window_len(window_dim: usize, delay: usize, max_horizon: usize) -> usize {
    (window_dim - 1) * delay + max_horizon + 1
}

pub fn make_windows<T: Scalar>(
    ts: &TimeSeries<T>,
    window_dim: usize,
    delay: usize,
    horizons: &[usize],
) -> Result<WindowedDataset<T>> {
    make_windows_from(ts.values(), window_dim, delay, horizons)
}

pub(crate) fn make_windows_from<T: Scalar>(
    values: &[T],
    window_dim: usize,
    delay: usize,
    horizons: &[usize],
) -> Result<WindowedDataset<T>> {
    if window_dim == 0 || delay == 0 {
        return Err(Error::Config("window dimension and delay must be positive".into()));
    }
    if horizons.is_empty() || horizons.contains(&0) {
        return Err(Error::Config(
            "horizons must be a non-empty list of positive integers".into(),
        ));
    }
    let max_h = *horizons.iter().max().expect("non-empty");
    let required = min_window_len(window_dim, delay, max_h);
    if values.len() < required {
        return Err(Error::SeriesTooShort {
            required,
            actual: values.len(),
        });
    }
    let span = (window_dim - 1) * delay;
    let n = values.len() - span - max_h;
    let mut inputs = Vec::with_capacity(n * window_dim);
    let mut targets = Vec::with_capacity(n * horizons.len());
    for start in 0..n {
        inputs.extend((0..window_dim).map(|k| values[start + k * delay]));
        targets.extend(horizons.iter().map(|&h| values[start + span + h]));
    }
    Ok(WindowedDataset {
        inputs,
        targets,
        starts: (0..n).collect(),
        window_dim,
        delay,
        horizons: horizons.to_vec(),
    })
}

/// Z-score scaler fitted on a training segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaler<T> {
    pub mean: T,
    pub std: T,
}

impl<T: Scalar> Scaler<T> {
    pub fn fit(train: &TimeSeries<T>) -> Result<Self> {
        Self::fit_values(train.values())
    }

    pub fn fit_values(values: &[T]) -> Result<Self> {
        let n = T::from_usize_lossy(values.len());
        let mean = values.iter().copied().sum::<T>() / n;
        let std = (values.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n).sqrt();
        if !(std > T::zero()) {
            return Err(Error::ZeroVariance("cannot fit a scaler to a constant series"));
        }
        Ok(Self { mean, std })
    }

    pub fn identity() -> Self {
        Self {
            mean: T::zero(),
            std: T::one(),
        }
    }

    pub fn apply(&self, x: T) -> T {
        (x - self.mean) / self.std
    }

    pub fn invert(&self, z: T) -> T {
        z * self.std + self.mean
    }

    pub fn transform(&self, ts: &TimeSeries<T>) -> TimeSeries<T> {
        ts.derive(ts.values.iter().map(|&x| self.apply(x)).collect())
    }

    pub fn inverse(&self, ts: &TimeSeries<T>) -> TimeSeries<T> {
        ts.derive(ts.values.iter().map(|&z| self.invert(z)).collect())
    }
}

pub fn fit_scaler<T: Scalar>(train: &TimeSeries<T>) -> Result<Scaler<T>> {
    Scaler::fit(train)
}
