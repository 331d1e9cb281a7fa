use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{read_text, write_text};
use crate::error::{Error, Result};
use crate::metrics::PRPoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    /// Format implied by a `.json` or `.csv` extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension().and_then(|e| e.to_str()).and_then(|e| e.parse().ok())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidValue(format!("unknown report format '{other}'"))),
        }
    }
}

/// Output of one evaluation run. Maps keep keys sorted so the encoded bytes
/// depend only on the content. A metric that could not be computed is
/// `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub command: String,
    pub metadata: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, Option<f64>>,
    pub curves: BTreeMap<String, Vec<PRPoint>>,
}

const CSV_HEADER: [&str; 7] = ["section", "key", "index", "value", "threshold", "precision", "recall"];

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            ..Default::default()
        }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn metric(&mut self, key: impl Into<String>, value: Option<f64>) -> &mut Self {
        self.metrics.insert(key.into(), value);
        self
    }

    fn check_finite(&self) -> Result<()> {
        let bad_metric = self.metrics.iter().find(|(_, v)| v.is_some_and(|v| !v.is_finite()));
        if let Some((k, v)) = bad_metric {
            return Err(Error::InvalidValue(format!("metric {k} is not finite: {v:?}")));
        }
        for (k, pts) in &self.curves {
            if pts.iter().any(|p| !(p.threshold.is_finite() && p.precision.is_finite() && p.recall.is_finite())) {
                return Err(Error::InvalidValue(format!("curve {k} has non-finite values")));
            }
        }
        Ok(())
    }

    pub fn encode(&self, format: ReportFormat) -> Result<String> {
        self.check_finite()?;
        match format {
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidValue(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            ReportFormat::Csv => self.encode_csv(),
        }
    }

    fn encode_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut put = |rec: [&str; 7]| w.write_record(rec).map_err(|e| Error::InvalidValue(e.to_string()));
        put(CSV_HEADER)?;
        put(["command", &self.command, "", "", "", "", ""])?;
        for (k, v) in &self.metadata {
            put(["metadata", k, "", v, "", "", ""])?;
        }
        for (k, v) in &self.metrics {
            let value = v.map(|v| v.to_string()).unwrap_or_default();
            put(["metric", k, "", &value, "", "", ""])?;
        }
        for (k, pts) in &self.curves {
            if pts.is_empty() {
                put(["curve", k, "", "", "", "", ""])?;
            }
            for (i, p) in pts.iter().enumerate() {
                put([
                    "curve",
                    k,
                    &i.to_string(),
                    "",
                    &p.threshold.to_string(),
                    &p.precision.to_string(),
                    &p.recall.to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidValue(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn decode(text: &str, format: ReportFormat) -> Result<Self> {
        match format {
            ReportFormat::Json => serde_json::from_str(text).map_err(|e| Error::InvalidValue(e.to_string())),
            ReportFormat::Csv => Self::decode_csv(text),
        }
    }

    fn decode_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| Error::InvalidValue(e.to_string()))?;
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::InvalidValue(format!("unexpected csv header {header:?}")));
        }
        let mut report = Report::default();
        let mut seen_command = false;
        for (k, rec) in r.records().enumerate() {
            let row = k + 2;
            let rec = rec.map_err(|e| Error::InvalidValue(format!("row {row}: {e}")))?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::InvalidValue(format!("row {row}: bad number '{}'", &rec[i])))
            };
            match &rec[0] {
                "command" => {
                    report.command = rec[1].to_string();
                    seen_command = true;
                }
                "metadata" => {
                    report.metadata.insert(rec[1].to_string(), rec[3].to_string());
                }
                "metric" => {
                    let value = if rec[3].is_empty() { None } else { Some(num(3)?) };
                    report.metrics.insert(rec[1].to_string(), value);
                }
                "curve" => {
                    let points = report.curves.entry(rec[1].to_string()).or_default();
                    if !rec[2].is_empty() {
                        if rec[2] != points.len().to_string() {
                            return Err(Error::InvalidValue(format!("row {row}: curve index out of sequence")));
                        }
                        points.push(PRPoint {
                            threshold: num(4)?,
                            precision: num(5)?,
                            recall: num(6)?,
                        });
                    }
                }
                other => return Err(Error::InvalidValue(format!("row {row}: unknown section '{other}'"))),
            }
        }
        if !seen_command {
            return Err(Error::InvalidValue("csv report has no command row".into()));
        }
        Ok(report)
    }

    pub fn write(&self, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
        let path = path.as_ref();
        let text = self.encode(format).map_err(|e| Error::format(path, e.to_string()))?;
        write_text(path, &text)
    }

    pub fn read(path: impl AsRef<Path>, format: ReportFormat) -> Result<Self> {
        let path = path.as_ref();
        Self::decode(&read_text(path)?, format).map_err(|e| Error::format(path, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("eval-detection");
        r.meta("d_max", 5).meta("distance", "structural, \"quoted\"");
        r.metric("ap", Some(0.1 + 0.2)).metric("median_trans", None).metric("tiny", Some(1e-300));
        r.curves.insert(
            "pr".into(),
            vec![
                PRPoint { threshold: 0.9, precision: 1.0, recall: 0.5 },
                PRPoint { threshold: 0.7, precision: 2.0 / 3.0, recall: 1.0 },
            ],
        );
        r.curves.insert("empty".into(), vec![]);
        r
    }

    #[test]
    fn round_trips_in_both_formats() {
        let r = sample();
        for f in [ReportFormat::Json, ReportFormat::Csv] {
            let text = r.encode(f).unwrap();
            assert_eq!(Report::decode(&text, f).unwrap(), r, "{f:?}");
        }
    }

    #[test]
    fn empty_report_is_valid() {
        let mut r = Report::new("stats");
        r.meta("annotations", "a.json");
        for f in [ReportFormat::Json, ReportFormat::Csv] {
            assert_eq!(Report::decode(&r.encode(f).unwrap(), f).unwrap(), r);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut r = Report::new("x");
        r.metric("bad", Some(f64::NAN));
        assert!(r.encode(ReportFormat::Json).is_err());
    }

    #[test]
    fn format_from_path() {
        assert_eq!(ReportFormat::from_path(Path::new("a/b.CSV")), Some(ReportFormat::Csv));
        assert_eq!(ReportFormat::from_path(Path::new("b.json")), Some(ReportFormat::Json));
        assert_eq!(ReportFormat::from_path(Path::new("b.txt")), None);
    }

    #[test]
    fn unwritable_path() {
        let err = Report::new("x").write("/nonexistent/dir/r.json", ReportFormat::Json);
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
