//! Matrix input and output, and the preprocessing steps applied before
//! rank selection.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::csv_error;
use crate::matrix::DataMatrix;
use crate::pa::SelectionResult;

const MAGIC: &[u8; 4] = b"SFPA";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    /// Cell content (after trimming) that marks a missing value.
    pub missing_token: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: false,
            missing_token: String::new(),
        }
    }
}

/// Parsed table whose missing cells hold `0.0` and are flagged in `mask`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedMatrix {
    pub n: usize,
    pub p: usize,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl MaskedMatrix {
    pub fn from_matrix(x: DataMatrix) -> Self {
        let (n, p) = x.shape();
        Self {
            n,
            p,
            values: x.into_vec(),
            mask: vec![false; n * p],
        }
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.p + j]
    }

    pub fn missing_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

pub fn read_matrix_csv<R: Read>(reader: R, opts: &CsvOptions) -> Result<MaskedMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut mask = Vec::new();
    let mut p = None;
    let mut n = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |pos| pos.line());
            match csv_error(e) {
                Error::Io(io) => Error::Io(io),
                other => Error::Parse {
                    line,
                    message: other.to_string(),
                },
            }
        })?;
        let line = record.position().map_or(0, |pos| pos.line());
        let width = *p.get_or_insert(record.len());
        if record.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for (j, field) in record.iter().enumerate() {
            if field == opts.missing_token {
                values.push(0.0);
                mask.push(true);
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("field {} is not a number: `{field}`", j + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("field {} is not finite: `{field}`", j + 1),
                });
            }
            values.push(v);
            mask.push(false);
        }
        n += 1;
    }
    let p = p.unwrap_or(0);
    if n == 0 || p == 0 {
        return Err(Error::input("input table is empty"));
    }
    Ok(MaskedMatrix { n, p, values, mask })
}

/// Writes `x` with shortest round-trip formatting, so reading it back
/// reproduces every entry exactly.
pub fn write_matrix_csv<W: Write>(writer: W, x: &DataMatrix, delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
    for row in x.rows() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_binary<W: Write>(mut writer: W, x: &DataMatrix) -> Result<()> {
    writer.write_all(MAGIC)?;
    writer.write_all(&VERSION.to_le_bytes())?;
    writer.write_all(&(x.nrows() as u64).to_le_bytes())?;
    writer.write_all(&(x.ncols() as u64).to_le_bytes())?;
    for v in x.as_slice() {
        writer.write_all(&v.to_le_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_matrix_binary<R: Read>(mut reader: R) -> Result<DataMatrix> {
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse {
            line: 0,
            message: "missing SFPA magic bytes".into(),
        });
    }
    let mut u32_buf = [0u8; 4];
    reader.read_exact(&mut u32_buf)?;
    let version = u32::from_le_bytes(u32_buf);
    if version != VERSION {
        return Err(Error::Parse {
            line: 0,
            message: format!("unsupported format version {version}"),
        });
    }
    let mut u64_buf = [0u8; 8];
    reader.read_exact(&mut u64_buf)?;
    let n = u64::from_le_bytes(u64_buf);
    reader.read_exact(&mut u64_buf)?;
    let p = u64::from_le_bytes(u64_buf);
    let len = n
        .checked_mul(p)
        .and_then(|v| usize::try_from(v).ok())
        .filter(|v| v.checked_mul(8).is_some())
        .ok_or_else(|| Error::input(format!("matrix dimensions {n} x {p} are too large")))?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected {} bytes of data, found {}", len * 8, bytes.len()),
        });
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DataMatrix::from_row_major(n as usize, p as usize, data)
}

/// Reads a binary file when it starts with the SFPA magic bytes and a CSV
/// table otherwise.
pub fn read_matrix_file(path: &Path, opts: &CsvOptions) -> Result<MaskedMatrix> {
    let mut file = BufReader::new(File::open(path)?);
    let mut head = [0u8; 4];
    let got = read_up_to(&mut file, &mut head)?;
    let file = BufReader::new(File::open(path)?);
    if got == 4 && &head == MAGIC {
        Ok(MaskedMatrix::from_matrix(read_matrix_binary(file)?))
    } else {
        read_matrix_csv(file, opts)
    }
}

fn read_up_to<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..])? {
            0 => break,
            k => got += k,
        }
    }
    Ok(got)
}

pub fn write_matrix_file(path: &Path, x: &DataMatrix, binary: bool) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    if binary {
        write_matrix_binary(w, x)
    } else {
        write_matrix_csv(w, x, b',')
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessStep {
    /// Subtract each row's mean from that row.
    CenterRows,
    /// Subtract the mean row from every row.
    CenterColumns,
    /// Divide each column by its sample standard deviation.
    ScaleColumnsUnitVariance,
    /// Replace missing entries by zero; always runs first.
    ImputeMissingZero,
}

impl FromStr for PreprocessStep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "center_rows" => Ok(Self::CenterRows),
            "center_columns" => Ok(Self::CenterColumns),
            "scale_columns_unit_variance" | "scale_columns" => Ok(Self::ScaleColumnsUnitVariance),
            "impute_missing_zero" | "impute" => Ok(Self::ImputeMissingZero),
            other => Err(Error::input(format!("unknown preprocessing step `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocess {
    pub steps: Vec<PreprocessStep>,
}

impl Preprocess {
    /// Row centering followed by column normalization.
    pub fn standard() -> Self {
        Self {
            steps: vec![PreprocessStep::CenterRows, PreprocessStep::ScaleColumnsUnitVariance],
        }
    }
}

impl FromStr for Preprocess {
    type Err = Error;

    /// Comma-separated step names; `standard` expands to row centering then
    /// column scaling, and an empty string or `none` means no steps.
    fn from_str(s: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "none" => {}
                "standard" => steps.extend(Preprocess::standard().steps),
                other => steps.push(other.parse()?),
            }
        }
        Ok(Self { steps })
    }
}

/// Applies the declared steps in order. Imputation, when requested, happens
/// before any other step; missing cells without imputation are an error.
pub fn apply_preprocess(x: &MaskedMatrix, steps: &Preprocess) -> Result<DataMatrix> {
    let impute = steps.steps.contains(&PreprocessStep::ImputeMissingZero);
    let missing = x.missing_count();
    if missing > 0 && !impute {
        return Err(Error::input(format!(
            "{missing} missing values present; add the impute_missing_zero step"
        )));
    }
    let mut m = DataMatrix::from_row_major(x.n, x.p, x.values.clone())?;
    for (v, &miss) in m.data_mut().iter_mut().zip(&x.mask) {
        if miss {
            *v = 0.0;
        }
    }
    for step in &steps.steps {
        match step {
            PreprocessStep::ImputeMissingZero => {}
            PreprocessStep::CenterRows => center_rows(&mut m),
            PreprocessStep::CenterColumns => center_columns(&mut m),
            PreprocessStep::ScaleColumnsUnitVariance => scale_columns(&mut m),
        }
    }
    Ok(m)
}

fn center_rows(m: &mut DataMatrix) {
    let p = m.ncols();
    for row in m.data_mut().chunks_exact_mut(p) {
        let mean = row.iter().sum::<f64>() / p as f64;
        row.iter_mut().for_each(|v| *v -= mean);
    }
}

fn column_means(m: &DataMatrix) -> Vec<f64> {
    let mut means = vec![0.0; m.ncols()];
    for row in m.rows() {
        for (s, v) in means.iter_mut().zip(row) {
            *s += v;
        }
    }
    means.iter_mut().for_each(|s| *s /= m.nrows() as f64);
    means
}

fn center_columns(m: &mut DataMatrix) {
    let means = column_means(m);
    let p = m.ncols();
    for row in m.data_mut().chunks_exact_mut(p) {
        for (v, mu) in row.iter_mut().zip(&means) {
            *v -= mu;
        }
    }
}

fn scale_columns(m: &mut DataMatrix) {
    let n = m.nrows();
    if n < 2 {
        warn!("column scaling needs at least two rows; columns left unscaled");
        return;
    }
    let means = column_means(m);
    let mut ss = vec![0.0; m.ncols()];
    for row in m.rows() {
        for ((s, v), mu) in ss.iter_mut().zip(row).zip(&means) {
            *s += (v - mu) * (v - mu);
        }
    }
    let sd: Vec<f64> = ss.iter().map(|s| (s / (n - 1) as f64).sqrt()).collect();
    for (j, s) in sd.iter().enumerate() {
        if *s == 0.0 {
            warn!("column {j} has zero variance; left unscaled");
        }
    }
    let p = m.ncols();
    for row in m.data_mut().chunks_exact_mut(p) {
        for (v, s) in row.iter_mut().zip(&sd) {
            if *s > 0.0 {
                *v /= s;
            }
        }
    }
}

/// One row per scanned rank: `k, data_sv, threshold, above`.
pub fn write_selection_csv<W: Write>(writer: W, result: &SelectionResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "data_sv", "threshold", "above"])
        .map_err(csv_error)?;
    for (k, threshold) in result.null_percentiles.iter().enumerate() {
        let above = result.trace.get(k).map_or(String::new(), |a| a.to_string());
        w.write_record([
            (k + 1).to_string(),
            result.data_sv.values[k].to_string(),
            threshold.to_string(),
            above,
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
