//! Run-off table data model: full incremental rectangles (simulated ground
//! truth) and the cumulative upper triangle the estimator is allowed to see.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TriangleError {
    #[error("run-off table needs at least two years, got {0}")]
    TooSmall(usize),
    #[error("row {row} has {got} cells, expected {expected}")]
    BadRowLength {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("cell ({row},{col}) must be finite and nonnegative, got {value}")]
    BadCell { row: usize, col: usize, value: f64 },
    #[error("cumulative row {row} decreases at development year {col}")]
    NonMonotonicRow { row: usize, col: usize },
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Full I x I rectangle of incremental claim amounts `S_ik`.
///
/// Row `i` is the occurrence year, column `k` the development year (both
/// 0-based here). The backtest simulates the whole rectangle so the realized
/// reserve is known by construction; the estimator only ever receives the
/// [`CumulativeTriangle`] produced by [`RunOffTable::cumulate_upper`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOffTable {
    years: usize,
    cells: Vec<f64>, // row-major
}

/// Per-year and total realized reserves read off a simulated rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Reserves {
    /// One entry per occurrence year 2..=I (0-based rows 1..I).
    pub per_year: Vec<f64>,
    pub total: f64,
}

impl RunOffTable {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, TriangleError> {
        let years = rows.len();
        if years < 2 {
            return Err(TriangleError::TooSmall(years));
        }
        let mut cells = Vec::with_capacity(years * years);
        for (row, values) in rows.iter().enumerate() {
            if values.len() != years {
                return Err(TriangleError::BadRowLength {
                    row,
                    got: values.len(),
                    expected: years,
                });
            }
            for (col, &value) in values.iter().enumerate() {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(TriangleError::BadCell { row, col, value });
                }
                cells.push(value);
            }
        }
        Ok(Self { years, cells })
    }

    /// Used by the simulator, which guarantees nonnegative finite cells.
    pub(crate) fn from_raw(years: usize, cells: Vec<f64>) -> Self {
        debug_assert_eq!(cells.len(), years * years);
        debug_assert!(cells.iter().all(|c| *c >= 0.0 && c.is_finite()));
        Self { years, cells }
    }

    pub fn years(&self) -> usize {
        self.years
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.years + col]
    }

    /// Sum of every cell in the rectangle.
    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// Cumulative claims `C_ik = sum_{l<=k} S_il` restricted to the known
    /// region `i + k <= I - 1` (0-based).
    pub fn cumulate_upper(&self) -> CumulativeTriangle {
        let mut rows = Vec::with_capacity(self.years);
        for i in 0..self.years {
            let width = self.years - i;
            let mut row = Vec::with_capacity(width);
            let mut acc = 0.0;
            for k in 0..width {
                acc += self.cell(i, k);
                row.push(acc);
            }
            rows.push(row);
        }
        CumulativeTriangle {
            years: self.years,
            rows,
        }
    }

    /// Realized reserves: for each occurrence year the sum of the future
    /// (lower-region) incremental cells, plus their total.
    pub fn actual_reserves(&self) -> Reserves {
        let mut per_year = Vec::with_capacity(self.years - 1);
        let mut total = 0.0;
        for i in 1..self.years {
            let mut sum = 0.0;
            for k in (self.years - i)..self.years {
                sum += self.cell(i, k);
            }
            per_year.push(sum);
            total += sum;
        }
        Reserves { per_year, total }
    }

    /// One line per occurrence year, `I` comma-separated cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.years {
            let row: Vec<String> = (0..self.years)
                .map(|k| format_cell(self.cell(i, k)))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TriangleError> {
        let rows = parse_csv_rows(text, |_| None)?;
        Self::from_rows(rows)
    }
}

/// Known cumulative claims: row `i` holds `C_ik` for `k = 0..I-i` only.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeTriangle {
    years: usize,
    rows: Vec<Vec<f64>>,
}

impl CumulativeTriangle {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, TriangleError> {
        let years = rows.len();
        if years < 2 {
            return Err(TriangleError::TooSmall(years));
        }
        for (row, values) in rows.iter().enumerate() {
            let expected = years - row;
            if values.len() != expected {
                return Err(TriangleError::BadRowLength {
                    row,
                    got: values.len(),
                    expected,
                });
            }
            let mut prev = 0.0;
            for (col, &value) in values.iter().enumerate() {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(TriangleError::BadCell { row, col, value });
                }
                if value < prev {
                    return Err(TriangleError::NonMonotonicRow { row, col });
                }
                prev = value;
            }
        }
        Ok(Self { years, rows })
    }

    pub fn years(&self) -> usize {
        self.years
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.rows[row][col]
    }

    /// Last known cumulative value of row `i` (the anti-diagonal).
    pub fn diagonal(&self, i: usize) -> f64 {
        *self.rows[i].last().expect("rows are never empty")
    }

    /// Sum of all known incremental amounts (equals the sum of each row's
    /// last cumulative value).
    pub fn known_total(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.last().copied().unwrap_or(0.0))
            .sum()
    }

    /// One line per occurrence year, short rows padded with empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let mut fields: Vec<String> = row.iter().map(|&v| format_cell(v)).collect();
            fields.resize(self.years, String::new());
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TriangleError> {
        let rows = parse_csv_rows(text, Some)?;
        Self::from_rows(rows)
    }
}

fn format_cell(value: f64) -> String {
    format!("{value:.16e}")
}

/// Parse comma-separated numeric rows. `known_width(row)` returning `Some`
/// marks triangle layout: row `i` keeps its first `n_rows - i` fields and the
/// rest must be empty; `None` keeps every field.
fn parse_csv_rows(
    text: &str,
    known_width: impl Fn(usize) -> Option<usize>,
) -> Result<Vec<Vec<f64>>, TriangleError> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let n_rows = lines.len();
    let mut rows = Vec::with_capacity(n_rows);
    for (i, line) in lines.iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let keep = match known_width(i) {
            Some(_) => n_rows.saturating_sub(i),
            None => fields.len(),
        };
        let mut row = Vec::with_capacity(keep);
        for (j, field) in fields.iter().enumerate() {
            let field = field.trim();
            if j < keep {
                let value: f64 = field.parse().map_err(|_| TriangleError::Csv {
                    line: i + 1,
                    message: format!("cannot parse cell {j}: {field:?}"),
                })?;
                row.push(value);
            } else if !field.is_empty() {
                return Err(TriangleError::Csv {
                    line: i + 1,
                    message: format!("expected empty cell {j}, found {field:?}"),
                });
            }
        }
        if row.len() < keep {
            return Err(TriangleError::Csv {
                line: i + 1,
                message: format!("expected {keep} cells, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}
