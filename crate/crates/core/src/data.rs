//! Price ingestion, log-returns and synthetic series.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::epd::EpdParams;
use crate::error::{Error, Result};
use crate::garch::{simulate, GarchParams};

const DATE_FORMATS: [&str; 4] = ["%Y-%m-%d", "%m/%d/%Y", "%Y/%m/%d", "%Y%m%d"];

/// A CSV column addressed by header name or zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim().parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.trim().to_string()),
        })
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Name(n) => write!(f, "{n}"),
            ColumnRef::Index(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub timestamps: Option<Vec<NaiveDate>>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub values: Vec<f64>,
    pub source_id: String,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>, source_id: impl Into<String>) -> Self {
        Self {
            values,
            source_id: source_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One value per line, optionally preceded by `# ` comment lines and an
    /// `x` header.
    pub fn write_csv<W: Write>(&self, mut out: W, header: bool, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        if header {
            writeln!(out, "x")?;
        }
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }
}

fn parse_number(raw: &str) -> Option<f64> {
    let cleaned: String = raw
        .trim()
        .trim_start_matches('$')
        .chars()
        .filter(|c| *c != ',')
        .collect();
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    DATE_FORMATS.iter().find_map(|f| NaiveDate::parse_from_str(raw, f).ok())
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| format_err(path, e.to_string()))
}

fn resolve_column(path: &Path, column: &ColumnRef, header: Option<&csv::StringRecord>) -> Result<usize> {
    match column {
        ColumnRef::Index(i) => Ok(*i),
        ColumnRef::Name(name) => {
            let header =
                header.ok_or_else(|| format_err(path, format!("column '{name}' requested but file has no header")))?;
            header
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| format_err(path, format!("no column named '{name}'")))
        }
    }
}

/// Loads a price column from a comma-separated file.
///
/// A header row is detected when the first row's price cell is not numeric.
/// Lines starting with `#` are skipped. Rows that fail to parse and
/// non-positive prices are errors reported with their 1-based line numbers.
/// A date column, when given, must be strictly monotone; descending files
/// are reversed into chronological order.
pub fn load_price_csv(
    path: impl AsRef<Path>,
    column: &ColumnRef,
    date_column: Option<&ColumnRef>,
) -> Result<PriceSeries> {
    let path = path.as_ref();
    let records = read_records(path)?;
    if records.is_empty() {
        return Err(format_err(path, "file contains no rows"));
    }

    let first = &records[0];
    let has_header = match column {
        ColumnRef::Name(_) => true,
        ColumnRef::Index(i) => first.get(*i).map(|c| parse_number(c).is_none()).unwrap_or(true),
    };
    let header = has_header.then_some(first);
    let value_idx = resolve_column(path, column, header)?;
    let date_idx = date_column.map(|c| resolve_column(path, c, header)).transpose()?;
    let body = if has_header { &records[1..] } else { &records[..] };

    let mut values = Vec::with_capacity(body.len());
    let mut dates = date_idx.map(|_| Vec::with_capacity(body.len()));
    let mut bad_rows = Vec::new();
    for (offset, record) in body.iter().enumerate() {
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(offset + 1 + usize::from(has_header));
        let value = record.get(value_idx).and_then(parse_number);
        let date = date_idx.map(|i| record.get(i).and_then(parse_date));
        match (value, date) {
            (Some(v), _) if v <= 0.0 => bad_rows.push(format!("{line} (non-positive price {v})")),
            (Some(v), None) => values.push(v),
            (Some(v), Some(Some(d))) => {
                values.push(v);
                dates.as_mut().expect("date column").push(d);
            }
            (Some(_), Some(None)) => bad_rows.push(format!("{line} (bad date)")),
            (None, _) => bad_rows.push(line.to_string()),
        }
    }
    if !bad_rows.is_empty() {
        let more = if bad_rows.len() > 10 {
            format!(" (+{} more)", bad_rows.len() - 10)
        } else {
            String::new()
        };
        return Err(format_err(
            path,
            format!(
                "rejected rows in column {column} at lines {}{more}",
                bad_rows[..bad_rows.len().min(10)].join(", ")
            ),
        ));
    }
    if values.is_empty() {
        return Err(format_err(path, "no price rows"));
    }

    if let Some(ds) = dates.as_mut() {
        if ds.windows(2).all(|w| w[0] > w[1]) {
            ds.reverse();
            values.reverse();
        } else if !ds.windows(2).all(|w| w[0] < w[1]) {
            return Err(format_err(path, "dates are not strictly monotone"));
        }
    }

    Ok(PriceSeries {
        timestamps: dates,
        values,
    })
}

/// Reads a return series written by [`ReturnSeries::write_csv`] (first
/// column, optional header, `#` comments ignored).
pub fn load_returns_csv(path: impl AsRef<Path>) -> Result<ReturnSeries> {
    let path = path.as_ref();
    let records = read_records(path)?;
    let mut values = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let cell = record.get(0).unwrap_or("");
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if i == 0 => continue,
            _ => {
                let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
                return Err(format_err(path, format!("line {line}: unparseable return '{cell}'")));
            }
        }
    }
    Ok(ReturnSeries::new(values, path.display().to_string()))
}

/// x_t = ln v_{t+1} - ln v_t.
pub fn log_returns(prices: &PriceSeries, source_id: impl Into<String>) -> Result<ReturnSeries> {
    if prices.values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "log-returns need at least 2 prices, got {}",
            prices.values.len()
        )));
    }
    let values = prices.values.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    Ok(ReturnSeries::new(values, source_id))
}

/// Stationary i.i.d. EPD series.
pub fn gen_epd_series(params: &EpdParams<f64>, n: usize, seed: u64) -> Result<ReturnSeries> {
    if n == 0 {
        return Err(Error::InsufficientData("n must be at least 1".into()));
    }
    Ok(ReturnSeries::new(
        params.sample(n, seed),
        format!(
            "epd(kappa={},mu={},sigma={},seed={seed})",
            params.kappa, params.mu, params.sigma
        ),
    ))
}

/// Concatenated zero-mean EPD blocks with piecewise-constant scale.
///
/// Returns the observations and the latent σ_t.
pub fn gen_regime_switching(kappa: f64, schedule: &[(usize, f64)], seed: u64) -> Result<(ReturnSeries, Vec<f64>)> {
    if schedule.is_empty() {
        return Err(Error::InsufficientData("empty sigma schedule".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::new();
    let mut sigmas = Vec::new();
    for &(len, sigma) in schedule {
        let params = EpdParams::new(kappa, 0.0, sigma)?;
        values.extend(params.sample_with(&mut rng, len));
        sigmas.extend(std::iter::repeat_n(sigma, len));
    }
    Ok((
        ReturnSeries::new(
            values,
            format!("regime(kappa={kappa},blocks={},seed={seed})", schedule.len()),
        ),
        sigmas,
    ))
}

/// Alternating-scale schedule: `blocks` blocks of `len`, cycling through `sigmas`.
pub fn alternating_schedule(sigmas: &[f64], len: usize, blocks: usize) -> Vec<(usize, f64)> {
    (0..blocks).map(|i| (len, sigmas[i % sigmas.len()])).collect()
}

/// Simulated GARCH(1,1) series and its latent σ²_t.
pub fn gen_garch_series(params: &GarchParams<f64>, n: usize, seed: u64) -> (ReturnSeries, Vec<f64>) {
    let (values, variances) = simulate(params, n, seed);
    (
        ReturnSeries::new(
            values,
            format!(
                "garch(omega={},alpha={},beta={},seed={seed})",
                params.omega, params.alpha, params.beta
            ),
        ),
        variances,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_two_rows_without_header() {
        let f = write_tmp("100\n110\n");
        let p = load_price_csv(f.path(), &ColumnRef::Index(0), None).unwrap();
        assert_eq!(p.values, vec![100.0, 110.0]);
        assert!(p.timestamps.is_none());
    }

    #[test]
    fn detects_header_and_named_column() {
        let f = write_tmp("Date,Open,Close\n2018-01-02,1,100\n2018-01-03,1,110\n2018-01-04,1,121\n");
        let by_index = load_price_csv(f.path(), &ColumnRef::Index(2), None).unwrap();
        let by_name = load_price_csv(f.path(), &"close".parse().unwrap(), Some(&ColumnRef::Index(0))).unwrap();
        assert_eq!(by_index.values, vec![100.0, 110.0, 121.0]);
        assert_eq!(by_name.values, by_index.values);
        assert_eq!(by_name.timestamps.unwrap().len(), 3);
    }

    #[test]
    fn descending_dates_are_reversed() {
        let f = write_tmp("date,close\n01/03/2018,$110.00\n01/02/2018,$100.00\n");
        let p = load_price_csv(f.path(), &"close".parse().unwrap(), Some(&"date".parse().unwrap())).unwrap();
        assert_eq!(p.values, vec![100.0, 110.0]);
    }

    #[test]
    fn rejects_bad_rows_with_line_numbers() {
        let f = write_tmp("close\n100\nabc\n101\n\"\"\n");
        let err = load_price_csv(f.path(), &ColumnRef::Index(0), None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("lines 3, 5"), "{err}");
        let f = write_tmp("100\n0\n");
        let err = load_price_csv(f.path(), &ColumnRef::Index(0), None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("lines 2 ") && err.contains("non-positive"), "{err}");
    }

    #[test]
    fn missing_file_and_column() {
        let err = load_price_csv("/nonexistent/prices.csv", &ColumnRef::Index(0), None).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/prices.csv"));
        let f = write_tmp("a,b\n1,2\n");
        assert!(load_price_csv(f.path(), &"close".parse().unwrap(), None).is_err());
    }

    #[test]
    fn log_return_examples() {
        let mk = |v: Vec<f64>| PriceSeries {
            timestamps: None,
            values: v,
        };
        assert_eq!(log_returns(&mk(vec![100.0, 100.0]), "t").unwrap().values, vec![0.0]);
        let r = log_returns(&mk(vec![100.0, 110.0]), "t").unwrap();
        assert!((r.values[0] - 0.095_310_179_804_324_9).abs() < 1e-15);
        let e = std::f64::consts::E;
        let r = log_returns(&mk(vec![1.0, e, e * e]), "t").unwrap();
        assert!((r.values[0] - 1.0).abs() < 1e-15 && (r.values[1] - 1.0).abs() < 1e-15);
        assert!(log_returns(&mk(vec![1.0]), "t").is_err());
    }

    #[test]
    fn returns_csv_round_trip() {
        let r = ReturnSeries::new(vec![0.1, -0.25, 3e-5], "x");
        let mut buf = Vec::new();
        r.write_csv(&mut buf, true, &["seed=1".to_string()]).unwrap();
        let f = write_tmp(std::str::from_utf8(&buf).unwrap());
        assert_eq!(load_returns_csv(f.path()).unwrap().values, r.values);
    }

    #[test]
    fn generators() {
        let p = EpdParams::new(1.0, 0.0, 1.0).unwrap();
        assert!(gen_epd_series(&p, 0, 1).is_err());
        assert_eq!(gen_epd_series(&p, 10, 3).unwrap(), gen_epd_series(&p, 10, 3).unwrap());

        let (single, _) = gen_regime_switching(1.0, &[(10, 1.0)], 3).unwrap();
        assert_eq!(single.values, gen_epd_series(&p, 10, 3).unwrap().values);

        let (r, sig) = gen_regime_switching(1.0, &[(500, 0.01), (500, 0.03)], 5).unwrap();
        assert_eq!(r.len(), 1000);
        assert_eq!(sig.len(), 1000);
        assert!(gen_regime_switching(1.0, &[], 5).is_err());
    }
}
