//! Survey datasets: CSV ingestion with schema validation, factor aggregation,
//! normalization and seeded train/test splitting.
//!
//! Questionnaire cells are stored zero-offset coded (see
//! [`ResponseScale::code`]): a variable cell lies in `0..=scale.span()` and a
//! factor cell in `0..=members * scale.span()`.

use std::collections::HashSet;
use std::fmt;
use std::io::Read;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{FactorCode, GradeBounds, QuestionnaireSchema, VariableId, NUM_FACTORS, NUM_VARIABLES};

/// Name of the target column in CSV files.
pub const TARGET_COLUMN: &str = "grade";

/// Feature level of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    /// The 70 questionnaire items `x1..x70`.
    Variable,
    /// The 21 factor sums `ssh..fpg`.
    Factor,
    /// Any other feature set (synthetic or external data).
    Custom,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Variable => "variable",
            Granularity::Factor => "factor",
            Granularity::Custom => "custom",
        }
    }

    /// Classifies a feature-name set: variable when every name is a variable
    /// id, factor when every name is a factor code, custom otherwise.
    pub fn of_features<S: AsRef<str>>(names: &[S]) -> Granularity {
        if names.is_empty() {
            return Granularity::Custom;
        }
        if names.iter().all(|n| n.as_ref().parse::<VariableId>().is_ok()) {
            Granularity::Variable
        } else if names
            .iter()
            .all(|n| FactorCode::parse(n.as_ref()).is_ok_and(|c| c.feature_name() == n.as_ref()))
        {
            Granularity::Factor
        } else {
            Granularity::Custom
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One respondent: named feature values plus the observed grade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: IndexMap<String, f64>,
    pub target: f64,
}

/// Dense, row-major table of samples over a fixed ordered feature list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetDoc", into = "DatasetDoc")]
pub struct Dataset {
    feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
    granularity: Granularity,
}

#[derive(Serialize, Deserialize)]
struct DatasetDoc {
    granularity: Granularity,
    feature_names: Vec<String>,
    samples: Vec<Sample>,
}

impl From<Dataset> for DatasetDoc {
    fn from(d: Dataset) -> Self {
        DatasetDoc { granularity: d.granularity, samples: d.samples().collect(), feature_names: d.feature_names }
    }
}

impl TryFrom<DatasetDoc> for Dataset {
    type Error = Error;

    fn try_from(doc: DatasetDoc) -> Result<Self> {
        let d = Dataset::from_samples(doc.feature_names, doc.samples)?;
        if d.granularity != doc.granularity {
            return Err(Error::WrongGranularity { expected: doc.granularity.as_str(), actual: d.granularity.as_str() });
        }
        Ok(d)
    }
}

impl Dataset {
    /// Builds a dataset; granularity is inferred from the feature names.
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        if rows.len() != targets.len() {
            return Err(Error::LengthMismatch { predicted: rows.len(), actual: targets.len() });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(Error::RaggedRow { row: i + 1, expected: feature_names.len(), found: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput);
            }
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let granularity = Granularity::of_features(&feature_names);
        Ok(Dataset { feature_names, rows, targets, granularity })
    }

    pub fn from_samples(feature_names: Vec<String>, samples: Vec<Sample>) -> Result<Self> {
        let mut rows = Vec::with_capacity(samples.len());
        let mut targets = Vec::with_capacity(samples.len());
        for s in samples {
            if s.features.len() != feature_names.len() {
                return Err(Error::DimensionMismatch { expected: feature_names.len(), actual: s.features.len() });
            }
            let row = feature_names
                .iter()
                .map(|n| s.features.get(n).copied().ok_or_else(|| Error::MissingFeature(n.clone())))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
            targets.push(s.target);
        }
        Dataset::new(feature_names, rows, targets)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn sample(&self, i: usize) -> Sample {
        Sample { features: self.features_of(i), target: self.targets[i] }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample> + '_ {
        (0..self.len()).map(|i| self.sample(i))
    }

    /// Feature map of row `i`, in feature order.
    pub fn features_of(&self, i: usize) -> IndexMap<String, f64> {
        self.feature_names.iter().cloned().zip(self.rows[i].iter().copied()).collect()
    }

    /// Rows selected by `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            granularity: self.granularity,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dataset serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Reads a CSV with the default grade bounds.
pub fn load_csv<R: Read>(source: R, schema: &QuestionnaireSchema) -> Result<Dataset> {
    load_csv_with(source, schema, &GradeBounds::default())
}

/// Reads a comma-separated file whose first row is a header.
///
/// The header decides the granularity: any `x<N>` column makes it a variable
/// file (all of `x1..x70` required), else any factor code makes it a factor
/// file (all 21 required), else every non-`grade` column is a custom feature.
/// Columns outside the detected set are ignored for variable and factor files.
pub fn load_csv_with<R: Read>(source: R, schema: &QuestionnaireSchema, bounds: &GradeBounds) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Io(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();

    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    let position = |name: &str| header.iter().position(|h| h == name);
    let target_col = position(TARGET_COLUMN).ok_or_else(|| Error::MissingColumn(TARGET_COLUMN.into()))?;

    let is_variable = header.iter().any(|h| h.parse::<VariableId>().is_ok());
    let is_factor = !is_variable && header.iter().any(|h| FactorCode::parse(h).is_ok_and(|c| c.feature_name() == *h));

    // (feature name, csv column, max coded value)
    let columns: Vec<(String, usize, Option<f64>)> = if is_variable {
        VariableId::all()
            .map(|id| {
                let name = id.to_string();
                let col = position(&name).ok_or_else(|| Error::MissingColumn(name.clone()))?;
                Ok((name, col, Some(schema.scale.span())))
            })
            .collect::<Result<_>>()?
    } else if is_factor {
        FactorCode::ALL
            .iter()
            .map(|c| {
                let name = c.feature_name();
                let col = position(&name).ok_or_else(|| Error::MissingColumn(name.clone()))?;
                Ok((name, col, Some(schema.scale.span() * c.member_count() as f64)))
            })
            .collect::<Result<_>>()?
    } else {
        header
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != target_col)
            .map(|(i, h)| (h.clone(), i, None))
            .collect()
    };

    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row_no = idx + 1;
        let record = record.map_err(|e| Error::Io(e.to_string()))?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow { row: row_no, expected: header.len(), found: record.len() });
        }
        let mut row = Vec::with_capacity(columns.len());
        for (name, col, max) in &columns {
            let v = parse_cell(&record[*col], row_no, name)?;
            if let Some(max) = max {
                if v < 0.0 || v > *max {
                    return Err(Error::OutOfScaleValue { row: row_no, column: name.clone(), value: v });
                }
            }
            row.push(v);
        }
        let target = parse_cell(&record[target_col], row_no, TARGET_COLUMN)?;
        if !bounds.contains(target) {
            return Err(Error::OutOfScaleValue { row: row_no, column: TARGET_COLUMN.into(), value: target });
        }
        rows.push(row);
        targets.push(target);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let names = columns.into_iter().map(|(n, _, _)| n).collect();
    Dataset::new(names, rows, targets)
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumericCell { row, column: column.to_string(), cell: cell.to_string() }),
    }
}

/// Writes the dataset as CSV: feature columns in order, then `grade`.
pub fn serialize_csv(d: &Dataset) -> String {
    let mut out = String::new();
    for name in d.feature_names() {
        out.push_str(name);
        out.push(',');
    }
    out.push_str(TARGET_COLUMN);
    out.push('\n');
    for (row, target) in d.rows().iter().zip(d.targets()) {
        for v in row {
            out.push_str(&v.to_string());
            out.push(',');
        }
        out.push_str(&target.to_string());
        out.push('\n');
    }
    out
}

/// Sums each factor's member variables into one feature per factor.
pub fn aggregate_factors(d: &Dataset, schema: &QuestionnaireSchema) -> Result<Dataset> {
    if d.granularity() != Granularity::Variable || d.num_features() != NUM_VARIABLES {
        return Err(Error::WrongGranularity { expected: "variable", actual: d.granularity().as_str() });
    }
    let groups: Vec<Vec<usize>> = FactorCode::ALL
        .iter()
        .map(|&c| {
            schema
                .factor_members(c)
                .iter()
                .map(|id| d.feature_index(&id.to_string()).expect("variable dataset has all 70 ids"))
                .collect()
        })
        .collect();
    let rows = d
        .rows()
        .iter()
        .map(|row| groups.iter().map(|g| g.iter().map(|&j| row[j]).sum()).collect())
        .collect();
    let names = FactorCode::ALL.iter().map(|c| c.feature_name()).collect::<Vec<_>>();
    debug_assert_eq!(names.len(), NUM_FACTORS);
    Dataset::new(names, rows, d.targets().to_vec())
}

/// Aggregates one coded variable-level feature map into factor sums.
pub fn aggregate_responses(coded: &IndexMap<String, f64>, schema: &QuestionnaireSchema) -> Result<IndexMap<String, f64>> {
    FactorCode::ALL
        .iter()
        .map(|&c| {
            let sum = schema
                .factor_members(c)
                .iter()
                .map(|id| {
                    let name = id.to_string();
                    coded.get(&name).copied().ok_or(Error::MissingFeature(name))
                })
                .sum::<Result<f64>>()?;
            Ok((c.feature_name(), sum))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    None,
    MinMax,
}

/// Rescales features; the target is never touched.
pub fn normalize(d: &Dataset, method: Normalization) -> Result<Dataset> {
    match method {
        Normalization::None => Ok(d.clone()),
        Normalization::MinMax => {
            let mut out = d.clone();
            for j in 0..d.num_features() {
                let col = d.column(j);
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if hi <= lo {
                    return Err(Error::DegenerateFeature(d.feature_names()[j].clone()));
                }
                for row in &mut out.rows {
                    row[j] = (row[j] - lo) / (hi - lo);
                }
            }
            Ok(out)
        }
    }
}

/// Parameters of a seeded train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if train_fraction > 0.0 && train_fraction < 1.0 {
            Ok(SplitSpec { train_fraction, seed })
        } else {
            Err(Error::InvalidFraction(train_fraction))
        }
    }

    /// Number of training rows for `n` samples.
    pub fn train_size(&self, n: usize) -> usize {
        ((self.train_fraction * n as f64).round() as usize).clamp(1, n - 1)
    }
}

/// Splits `d` into (train, test).
///
/// Row indices are shuffled with ChaCha8 seeded from `spec.seed`; the first
/// `train_size` shuffled indices form the training set. Both halves keep the
/// original row order.
pub fn split_train_test(d: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    SplitSpec::new(spec.train_fraction, spec.seed)?;
    let n = d.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, available: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);
    let k = spec.train_size(n);
    let mut train = order[..k].to_vec();
    let mut test = order[k..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((d.subset(&train), d.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::builtin_schema;

    fn variable_header() -> String {
        let mut h: Vec<String> = VariableId::all().map(|v| v.to_string()).collect();
        h.push("grade".into());
        h.join(",")
    }

    fn variable_row(v: f64, grade: f64) -> String {
        let mut cells: Vec<String> = (0..70).map(|_| v.to_string()).collect();
        cells.push(grade.to_string());
        cells.join(",")
    }

    #[test]
    fn loads_minimal_variable_csv() {
        let csv = format!("{}\n{}\n", variable_header(), variable_row(2.0, 5.0));
        let d = load_csv(csv.as_bytes(), &builtin_schema()).unwrap();
        assert_eq!(d.granularity(), Granularity::Variable);
        assert_eq!(d.len(), 1);
        assert_eq!(d.num_features(), 70);
        assert_eq!(d.targets(), &[5.0]);
    }

    #[test]
    fn variable_columns_any_order() {
        let mut header: Vec<String> = VariableId::all().map(|v| v.to_string()).collect();
        header.reverse();
        header.insert(10, "grade".into());
        let mut cells: Vec<String> = (1..=70).rev().map(|i| ((i % 5) as f64).to_string()).collect();
        cells.insert(10, "4.5".into());
        let csv = format!("{}\n{}\n", header.join(","), cells.join(","));
        let d = load_csv(csv.as_bytes(), &builtin_schema()).unwrap();
        assert_eq!(d.feature_names()[0], "x1");
        assert_eq!(d.row(0)[0], 1.0);
        assert_eq!(d.row(0)[4], 0.0);
        assert_eq!(d.targets(), &[4.5]);
    }

    #[test]
    fn detects_factor_header() {
        let mut header: Vec<String> = FactorCode::ALL.iter().map(|c| c.feature_name()).collect();
        header.push("grade".into());
        let mut cells = vec!["3".to_string(); 21];
        cells.push("5".into());
        let csv = format!("{}\n{}\n", header.join(","), cells.join(","));
        let d = load_csv(csv.as_bytes(), &builtin_schema()).unwrap();
        assert_eq!(d.granularity(), Granularity::Factor);
        assert_eq!(d.num_features(), 21);
    }

    #[test]
    fn custom_header() {
        let d = load_csv("x,grade\n0,1\n1,3\n2,5\n".as_bytes(), &builtin_schema()).unwrap();
        assert_eq!(d.granularity(), Granularity::Custom);
        assert_eq!(d.feature_names(), ["x"]);
        assert_eq!(d.column(0), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn rejects_non_numeric_cell() {
        let mut cells: Vec<String> = (0..70).map(|_| "1".to_string()).collect();
        cells[2] = "abc".into();
        cells.push("5".into());
        let csv = format!("{}\n{}\n{}\n", variable_header(), variable_row(1.0, 4.0), cells.join(","));
        let err = load_csv(csv.as_bytes(), &builtin_schema()).unwrap_err();
        assert_eq!(err, Error::NonNumericCell { row: 2, column: "x3".into(), cell: "abc".into() });
    }

    #[test]
    fn rejects_out_of_scale_and_missing() {
        let csv = format!("{}\n{}\n", variable_header(), variable_row(5.0, 4.0));
        assert!(matches!(
            load_csv(csv.as_bytes(), &builtin_schema()),
            Err(Error::OutOfScaleValue { row: 1, ref column, .. }) if column == "x1"
        ));

        let csv = format!("{}\n{}\n", variable_header(), variable_row(1.0, 9.0));
        assert!(matches!(
            load_csv(csv.as_bytes(), &builtin_schema()),
            Err(Error::OutOfScaleValue { ref column, .. }) if column == "grade"
        ));

        let header = variable_header().replace(",x33,", ",",);
        let csv = format!("{header}\n");
        assert_eq!(load_csv(csv.as_bytes(), &builtin_schema()).unwrap_err(), Error::MissingColumn("x33".into()));

        assert_eq!(
            load_csv("a,b\n1,2\n".as_bytes(), &builtin_schema()).unwrap_err(),
            Error::MissingColumn("grade".into())
        );
        assert_eq!(load_csv(format!("{}\n", variable_header()).as_bytes(), &builtin_schema()).unwrap_err(), Error::EmptyDataset);
        assert!(matches!(
            load_csv("x,grade\n1\n".as_bytes(), &builtin_schema()),
            Err(Error::RaggedRow { row: 1, expected: 2, found: 1 })
        ));
    }

    fn sample_variable_dataset(values: &[f64]) -> Dataset {
        let names = VariableId::all().map(|v| v.to_string()).collect();
        Dataset::new(names, vec![values.to_vec()], vec![5.0]).unwrap()
    }

    #[test]
    fn aggregation_sums_members() {
        let schema = builtin_schema();
        let mut values = vec![3.0; 70];
        values[0] = 0.0;
        values[1] = 0.0;
        values[2] = 0.0;
        values[9..13].copy_from_slice(&[1.0, 2.0, 3.0, 4.0]);
        let agg = aggregate_factors(&sample_variable_dataset(&values), &schema).unwrap();
        assert_eq!(agg.num_features(), 21);
        assert_eq!(agg.granularity(), Granularity::Factor);
        let s = agg.sample(0);
        assert_eq!(s.features["ssh"], 0.0);
        assert_eq!(s.features["sat"], 10.0);
        assert_eq!(s.features["fpg"], 9.0);
        assert_eq!(s.target, 5.0);
    }

    #[test]
    fn aggregation_requires_variable_level() {
        let d = Dataset::new(vec!["a".into()], vec![vec![1.0]], vec![1.0]).unwrap();
        assert!(matches!(aggregate_factors(&d, &builtin_schema()), Err(Error::WrongGranularity { .. })));
    }

    #[test]
    fn minmax_normalization() {
        let d = Dataset::new(vec!["a".into()], vec![vec![1.0], vec![3.0], vec![5.0]], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(normalize(&d, Normalization::None).unwrap(), d);
        let n = normalize(&d, Normalization::MinMax).unwrap();
        assert_eq!(n.column(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(n.targets(), d.targets());

        let c = Dataset::new(vec!["a".into()], vec![vec![2.0], vec![2.0]], vec![1.0, 2.0]).unwrap();
        assert_eq!(normalize(&c, Normalization::MinMax).unwrap_err(), Error::DegenerateFeature("a".into()));
    }

    fn ten_rows() -> Dataset {
        let rows = (0..10).map(|i| vec![i as f64]).collect();
        let targets = (0..10).map(|i| i as f64 * 0.5).collect();
        Dataset::new(vec!["a".into()], rows, targets).unwrap()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = ten_rows();
        let spec = SplitSpec::new(0.8, 42).unwrap();
        let (train, test) = split_train_test(&d, spec).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let (train2, test2) = split_train_test(&d, spec).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);

        let mut union: Vec<f64> = train.column(0).into_iter().chain(test.column(0)).collect();
        union.sort_by(f64::total_cmp);
        assert_eq!(union, d.column(0));
    }

    #[test]
    fn split_clamps_and_rejects() {
        let d = ten_rows();
        let (train, test) = split_train_test(&d, SplitSpec { train_fraction: 0.01, seed: 1 }).unwrap();
        assert_eq!((train.len(), test.len()), (1, 9));
        let (train, _) = split_train_test(&d, SplitSpec { train_fraction: 0.99, seed: 1 }).unwrap();
        assert_eq!(train.len(), 9);
        assert!(SplitSpec::new(1.0, 0).is_err());
        let one = d.subset(&[0]);
        assert_eq!(
            split_train_test(&one, SplitSpec { train_fraction: 0.5, seed: 1 }).unwrap_err(),
            Error::TooFewSamples { needed: 2, available: 1 }
        );
    }

    #[test]
    fn json_export_round_trips() {
        let d = ten_rows();
        let json = d.to_json();
        assert!(json.starts_with(r#"{"granularity":"custom","feature_names":["a"],"samples":[{"features":{"a":0.0},"target":0.0}"#));
        assert_eq!(Dataset::from_json(&json).unwrap(), d);
    }
}
