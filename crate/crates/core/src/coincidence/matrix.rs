use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{check_dimension, Error, Result};

/// Probability matrices must sum to one within this tolerance.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Input matrices further than this from unit sum are rejected; closer ones
/// are renormalised with a warning.
pub const INPUT_NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixMode {
    Probability,
    Counts,
}

impl fmt::Display for MatrixMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixMode::Probability => f.write_str("probability"),
            MatrixMode::Counts => f.write_str("counts"),
        }
    }
}

impl FromStr for MatrixMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "probability" => Ok(MatrixMode::Probability),
            "counts" => Ok(MatrixMode::Counts),
            other => Err(format!("unknown matrix mode `{other}`")),
        }
    }
}

/// Joint detection statistics for one (signal basis, idler basis) pair.
/// Rows index the signal outcome, columns the idler outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct CoincidenceMatrix {
    d: usize,
    signal_mub: usize,
    idler_mub: usize,
    mode: MatrixMode,
    entries: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    d: usize,
    signal_mub: usize,
    idler_mub: usize,
    mode: MatrixMode,
    entries: Vec<Vec<f64>>,
}

impl TryFrom<MatrixRepr> for CoincidenceMatrix {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        let m = CoincidenceMatrix::from_rows(repr.signal_mub, repr.idler_mub, repr.mode, repr.entries)?;
        if m.d != repr.d {
            return Err(Error::DimensionMismatch {
                expected: repr.d,
                found: m.d,
            });
        }
        Ok(m)
    }
}

impl From<CoincidenceMatrix> for MatrixRepr {
    fn from(m: CoincidenceMatrix) -> Self {
        MatrixRepr {
            d: m.d,
            signal_mub: m.signal_mub,
            idler_mub: m.idler_mub,
            mode: m.mode,
            entries: m.rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

impl CoincidenceMatrix {
    /// Validates shape and non-negativity; does not check normalisation.
    pub fn new(d: usize, signal_mub: usize, idler_mub: usize, mode: MatrixMode, entries: Vec<f64>) -> Result<Self> {
        check_dimension(d)?;
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        for (i, &value) in entries.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeEntry {
                    row: i / d,
                    column: i % d,
                    value,
                });
            }
        }
        Ok(Self {
            d,
            signal_mub,
            idler_mub,
            mode,
            entries,
        })
    }

    pub fn from_rows(signal_mub: usize, idler_mub: usize, mode: MatrixMode, rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        check_dimension(d)?;
        let mut entries = Vec::with_capacity(d * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            entries.extend(row);
        }
        Self::new(d, signal_mub, idler_mub, mode, entries)
    }

    pub(crate) fn from_parts_unchecked(d: usize, signal_mub: usize, idler_mub: usize, mode: MatrixMode, entries: Vec<f64>) -> Self {
        Self {
            d,
            signal_mub,
            idler_mub,
            mode,
            entries,
        }
    }

    /// Uniform `1/d^2` probability matrix.
    pub fn uniform(d: usize, signal_mub: usize, idler_mub: usize) -> Result<Self> {
        check_dimension(d)?;
        let v = 1.0 / (d * d) as f64;
        Self::new(d, signal_mub, idler_mub, MatrixMode::Probability, vec![v; d * d])
    }

    /// Perfectly correlated `delta/d` probability matrix.
    pub fn diagonal(d: usize, signal_mub: usize, idler_mub: usize) -> Result<Self> {
        check_dimension(d)?;
        let mut entries = vec![0.0; d * d];
        for j in 0..d {
            entries[j * d + j] = 1.0 / d as f64;
        }
        Self::new(d, signal_mub, idler_mub, MatrixMode::Probability, entries)
    }

    pub fn with_labels(mut self, signal_mub: usize, idler_mub: usize) -> Self {
        self.signal_mub = signal_mub;
        self.idler_mub = idler_mub;
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn signal_mub(&self) -> usize {
        self.signal_mub
    }

    pub fn idler_mub(&self) -> usize {
        self.idler_mub
    }

    pub fn mode(&self) -> MatrixMode {
        self.mode
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, row: usize, column: usize) -> f64 {
        self.entries[row * self.d + column]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.d)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().sum()
    }

    pub fn diagonal_sum(&self) -> f64 {
        (0..self.d).map(|j| self.get(j, j)).sum()
    }

    /// Mean of the diagonal and off-diagonal entries.
    pub fn diagonal_means(&self) -> (f64, f64) {
        let diag = self.diagonal_sum();
        let off = self.total() - diag;
        let d = self.d as f64;
        (diag / d, off / (d * (d - 1.0)))
    }

    /// Row marginal, the signal outcome distribution.
    pub fn row_sums(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum()).collect()
    }

    /// Column marginal, the idler outcome distribution.
    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.d).map(|c| (0..self.d).map(|r| self.get(r, c)).sum()).collect()
    }

    /// Probability-mode copy; counts are divided by their total.
    pub fn to_probability(&self) -> Result<Self> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(Self {
            mode: MatrixMode::Probability,
            entries: self.entries.iter().map(|x| x / total).collect(),
            ..self.clone()
        })
    }

    /// Probability-mode matrices must sum to one; counts are normalised.
    pub fn require_probability(&self) -> Result<Self> {
        match self.mode {
            MatrixMode::Counts => self.to_probability(),
            MatrixMode::Probability => {
                let sum = self.total();
                if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
                    return Err(Error::NotNormalized {
                        sum,
                        tolerance: PROBABILITY_TOLERANCE,
                    });
                }
                Ok(self.clone())
            }
        }
    }

    /// Input validation for externally supplied matrices: probability
    /// matrices off by more than [`INPUT_NORMALIZATION_TOLERANCE`] are
    /// rejected, smaller deviations are renormalised. Returns whether the
    /// matrix was rescaled.
    pub fn normalize_input(&mut self) -> Result<bool> {
        if self.mode != MatrixMode::Probability {
            return Ok(false);
        }
        let sum = self.total();
        let dev = (sum - 1.0).abs();
        if dev > INPUT_NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized {
                sum,
                tolerance: INPUT_NORMALIZATION_TOLERANCE,
            });
        }
        if dev > 0.0 {
            if dev > PROBABILITY_TOLERANCE {
                log::warn!(
                    "matrix (signal MUB {}, idler MUB {}) sums to {sum}; renormalising",
                    self.signal_mub,
                    self.idler_mub
                );
            }
            for x in &mut self.entries {
                *x /= sum;
            }
            return Ok(true);
        }
        Ok(false)
    }

    pub fn csv_header(&self) -> String {
        format!(
            "# d={} signal_mub={} idler_mub={} mode={}",
            self.d, self.signal_mub, self.idler_mub, self.mode
        )
    }

    /// Writes the header line followed by `d` comma-separated rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.csv_header())?;
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|x| format_float(*x)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty input".into(),
        })?;
        let header = CsvHeader::parse(header)?;
        let mut rows = Vec::with_capacity(header.d);
        for (index, line) in lines {
            let line_no = index + 1;
            let record = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .from_reader(line.as_bytes())
                .records()
                .next()
                .transpose()
                .map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?
                .unwrap_or_default();
            let row_index = rows.len();
            let mut row = Vec::with_capacity(record.len());
            for (column, field) in record.iter().enumerate() {
                let value: f64 = field.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("row {row_index}, column {column}: `{field}` is not a number"),
                })?;
                if value < 0.0 {
                    return Err(Error::NegativeEntry {
                        row: row_index,
                        column,
                        value,
                    });
                }
                row.push(value);
            }
            if row.len() != header.d {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("row {row_index} has {} columns, expected {}", row.len(), header.d),
                });
            }
            rows.push(row);
        }
        if rows.len() != header.d {
            return Err(Error::DimensionMismatch {
                expected: header.d,
                found: rows.len(),
            });
        }
        Self::from_rows(header.signal_mub, header.idler_mub, header.mode, rows)
    }
}

struct CsvHeader {
    d: usize,
    signal_mub: usize,
    idler_mub: usize,
    mode: MatrixMode,
}

impl CsvHeader {
    fn parse(line: &str) -> Result<Self> {
        let err = |message: String| Error::Parse { line: 1, message };
        let body = line
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| err("header must start with `#`".into()))?;
        let (mut d, mut signal, mut idler, mut mode) = (None, None, None, None);
        for token in body.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| err(format!("malformed header field `{token}`")))?;
            let parse_index = |v: &str| v.parse::<usize>().map_err(|_| err(format!("`{key}` must be an integer, got `{v}`")));
            match key {
                "d" => d = Some(parse_index(value)?),
                "signal_mub" => signal = Some(parse_index(value)?),
                "idler_mub" => idler = Some(parse_index(value)?),
                "mode" => mode = Some(value.parse::<MatrixMode>().map_err(err)?),
                other => return Err(err(format!("unknown header field `{other}`"))),
            }
        }
        Ok(Self {
            d: d.ok_or_else(|| err("missing `d`".into()))?,
            signal_mub: signal.ok_or_else(|| err("missing `signal_mub`".into()))?,
            idler_mub: idler.ok_or_else(|| err("missing `idler_mub`".into()))?,
            mode: mode.ok_or_else(|| err("missing `mode`".into()))?,
        })
    }
}

/// Shortest representation that round-trips exactly.
fn format_float(x: f64) -> String {
    format!("{x:?}")
}
