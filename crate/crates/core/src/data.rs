//! Aggregated paired-comparison counts and their CSV encodings.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;

use serde::Serialize;
use thiserror::Error;

use crate::matrix::PairMatrix;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        line: u64,
        column: Option<usize>,
        message: String,
    },
    #[error("no comparisons: every pair has zero counts")]
    NoComparisons,
    #[error("need at least two objects, got {0}")]
    TooFewObjects(usize),
    #[error("duplicate object label {0:?}")]
    DuplicateLabel(String),
    #[error("failed to read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Input layouts understood by [`load_counts`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountFormat {
    /// Header of labels, then one row per object: label followed by `n` cells.
    /// Cell (i, j) is the number of times object i was preferred over object j.
    MatrixCsv,
    /// Header `object_i,object_j,wins_i,wins_j`, one row per unordered pair.
    LongCsv,
}

/// Win counts `r_ij` for every ordered pair of `n` labeled objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairedComparisonData {
    labels: Vec<String>,
    wins: Vec<Vec<u64>>,
}

/// Citation counts among four statistics journals, 1987–1989. Cell (i, j) is
/// the number of times journal i was cited by journal j.
pub const JOURNALS_MATRIX_CSV: &str = "\
,Biometrika,Comm. in Stats.,JASA,JRSS-B
Biometrika,-,730,498,221
Comm. in Stats.,33,-,68,17
JASA,320,813,-,142
JRSS-B,284,276,325,-
";

impl PairedComparisonData {
    /// Validates a wins matrix. Diagonal entries are ignored.
    pub fn new(labels: Vec<String>, mut wins: Vec<Vec<u64>>) -> Result<Self, DataError> {
        let n = labels.len();
        if n < 2 {
            return Err(DataError::TooFewObjects(n));
        }
        let mut seen = HashMap::new();
        for label in &labels {
            if seen.insert(label.as_str(), ()).is_some() {
                return Err(DataError::DuplicateLabel(label.clone()));
            }
        }
        if wins.len() != n || wins.iter().any(|row| row.len() != n) {
            return Err(DataError::Parse {
                line: 0,
                column: None,
                message: format!("wins matrix must be {n}x{n}"),
            });
        }
        for (i, row) in wins.iter_mut().enumerate() {
            row[i] = 0;
        }
        let data = Self { labels, wins };
        if data.total_comparisons() == 0 {
            return Err(DataError::NoComparisons);
        }
        Ok(data)
    }

    /// The bundled journal-citation dataset.
    pub fn journals() -> Self {
        load_counts(JOURNALS_MATRIX_CSV.as_bytes(), CountFormat::MatrixCsv)
            .expect("bundled dataset is well formed")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `r_ij`, the number of times object `i` was preferred over object `j`.
    pub fn wins(&self, i: usize, j: usize) -> u64 {
        self.wins[i][j]
    }

    /// `n_ij = r_ij + r_ji`.
    pub fn comparisons(&self, i: usize, j: usize) -> u64 {
        if i == j {
            0
        } else {
            self.wins[i][j] + self.wins[j][i]
        }
    }

    pub fn total_comparisons(&self) -> u64 {
        self.unordered_pairs().map(|(i, j)| self.comparisons(i, j)).sum()
    }

    /// All `(i, j)` with `i < j`.
    pub fn unordered_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }

    /// Whether the graph with an edge for every compared pair is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.len();
        let mut visited = vec![false; n];
        let mut stack = vec![0];
        visited[0] = true;
        while let Some(i) = stack.pop() {
            for (j, seen) in visited.iter_mut().enumerate() {
                if !*seen && self.comparisons(i, j) > 0 {
                    *seen = true;
                    stack.push(j);
                }
            }
        }
        visited.into_iter().all(|v| v)
    }

    /// Data with `r_ij` and `r_ji` exchanged for every pair.
    pub fn transposed(&self) -> Self {
        let n = self.len();
        let wins = (0..n).map(|i| (0..n).map(|j| self.wins[j][i]).collect()).collect();
        Self {
            labels: self.labels.clone(),
            wins,
        }
    }

    /// Data with objects reordered so that new object `k` is old object `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let labels = order.iter().map(|&k| self.labels[k].clone()).collect();
        let wins = order
            .iter()
            .map(|&a| order.iter().map(|&b| self.wins[a][b]).collect())
            .collect();
        Self { labels, wins }
    }

    /// Serializes to the matrix CSV layout accepted by [`load_counts`].
    pub fn to_matrix_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        writer.write_record(&header).expect("in-memory write");
        for (i, label) in self.labels.iter().enumerate() {
            let mut record = vec![label.clone()];
            for j in 0..self.len() {
                record.push(if i == j { "-".to_string() } else { self.wins[i][j].to_string() });
            }
            writer.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    /// Serializes to the long CSV layout accepted by [`load_counts`].
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("object_i,object_j,wins_i,wins_j\n");
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for (i, j) in self.unordered_pairs() {
            writer
                .write_record([
                    self.labels[i].as_str(),
                    self.labels[j].as_str(),
                    &self.wins[i][j].to_string(),
                    &self.wins[j][i].to_string(),
                ])
                .expect("in-memory write");
        }
        let body = writer.into_inner().expect("in-memory flush");
        let _ = write!(out, "{}", String::from_utf8(body).expect("csv output is utf-8"));
        out
    }
}

/// Reads and validates paired-comparison counts.
pub fn load_counts<R: Read>(source: R, format: CountFormat) -> Result<PairedComparisonData, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        records.push((line, record));
    }
    match format {
        CountFormat::MatrixCsv => parse_matrix(records),
        CountFormat::LongCsv => parse_long(records),
    }
}

fn parse_error(line: u64, column: Option<usize>, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn parse_count(line: u64, column: usize, cell: &str) -> Result<u64, DataError> {
    if let Ok(v) = cell.parse::<u64>() {
        return Ok(v);
    }
    let message = match cell.parse::<f64>() {
        Ok(v) if v < 0.0 => format!("negative count {cell:?}"),
        Ok(_) => format!("non-integer count {cell:?}"),
        Err(_) => format!("not a count: {cell:?}"),
    };
    Err(parse_error(line, Some(column), message))
}

fn parse_matrix(records: Vec<(u64, csv::StringRecord)>) -> Result<PairedComparisonData, DataError> {
    let mut iter = records.into_iter();
    let (header_line, header) = iter.next().ok_or_else(|| parse_error(1, None, "empty input"))?;
    let rows: Vec<_> = iter.collect();
    let n = rows.len();
    let header: Vec<&str> = header.iter().collect();
    let labels: Vec<String> = if header.len() == n + 1 {
        header[1..].iter().map(|s| s.to_string()).collect()
    } else if header.len() == n {
        header.iter().map(|s| s.to_string()).collect()
    } else {
        return Err(parse_error(
            header_line,
            None,
            format!("header has {} labels but there are {n} data rows", header.len()),
        ));
    };
    let mut wins = vec![vec![0u64; n]; n];
    for (i, (line, record)) in rows.iter().enumerate() {
        if record.len() != n + 1 {
            return Err(parse_error(
                *line,
                None,
                format!("expected a label and {n} cells, found {} fields", record.len()),
            ));
        }
        if record[0] != labels[i] {
            return Err(parse_error(
                *line,
                Some(1),
                format!("row label {:?} does not match header label {:?}", &record[0], labels[i]),
            ));
        }
        for j in 0..n {
            let cell = &record[j + 1];
            if i == j {
                if !(cell.is_empty() || cell == "-" || cell == "0") {
                    return Err(parse_error(*line, Some(j + 2), format!("diagonal cell must be '-' or empty, got {cell:?}")));
                }
                continue;
            }
            wins[i][j] = parse_count(*line, j + 2, cell)?;
        }
    }
    PairedComparisonData::new(labels, wins)
}

const LONG_HEADER: [&str; 4] = ["object_i", "object_j", "wins_i", "wins_j"];

fn parse_long(records: Vec<(u64, csv::StringRecord)>) -> Result<PairedComparisonData, DataError> {
    let mut iter = records.into_iter();
    let (header_line, header) = iter.next().ok_or_else(|| parse_error(1, None, "empty input"))?;
    if header.iter().collect::<Vec<_>>() != LONG_HEADER {
        return Err(parse_error(
            header_line,
            None,
            format!("expected header {:?}", LONG_HEADER.join(",")),
        ));
    }
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut entries = Vec::new();
    let mut seen_pairs: HashMap<(usize, usize), u64> = HashMap::new();
    for (line, record) in iter {
        if record.len() != 4 {
            return Err(parse_error(line, None, format!("expected 4 fields, found {}", record.len())));
        }
        let mut ids = [0usize; 2];
        for (k, id) in ids.iter_mut().enumerate() {
            let label = &record[k];
            if label.is_empty() {
                return Err(parse_error(line, Some(k + 1), "empty object label"));
            }
            *id = *index.entry(label.to_string()).or_insert_with(|| {
                labels.push(label.to_string());
                labels.len() - 1
            });
        }
        if ids[0] == ids[1] {
            return Err(parse_error(line, Some(2), "an object cannot be compared with itself"));
        }
        let key = (ids[0].min(ids[1]), ids[0].max(ids[1]));
        if let Some(first) = seen_pairs.insert(key, line) {
            return Err(parse_error(line, None, format!("duplicate pair, first given on line {first}")));
        }
        let wins_i = parse_count(line, 3, &record[2])?;
        let wins_j = parse_count(line, 4, &record[3])?;
        entries.push((ids[0], ids[1], wins_i, wins_j));
    }
    let n = labels.len();
    let mut wins = vec![vec![0u64; n]; n];
    for (i, j, wi, wj) in entries {
        wins[i][j] = wi;
        wins[j][i] = wj;
    }
    PairedComparisonData::new(labels, wins)
}

/// `r_ij / n_ij` for every ordered pair; undefined where `n_ij = 0`.
pub fn observed_preference_matrix(data: &PairedComparisonData) -> PairMatrix {
    PairMatrix::from_fn(data.len(), |i, j| {
        let n = data.comparisons(i, j);
        (n > 0).then(|| data.wins(i, j) as f64 / n as f64)
    })
}

/// `r_i`, the number of times each object was preferred over any other.
pub fn total_wins(data: &PairedComparisonData) -> Vec<u64> {
    (0..data.len())
        .map(|i| (0..data.len()).filter(|&j| j != i).map(|j| data.wins(i, j)).sum())
        .collect()
}
