//! `search`: the double-mixed-discriminant sampling harness with a JSON-lines log.

use std::collections::HashSet;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use positools::opsearch::{self, Certificate, MapKind, OpError, SearchConfig, SearchRecord, SearchSummary};

use crate::doc::{input, internal, read_json, CliError};

/// `{r, samples, kinds, seed}` with kinds by name.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub r: usize,
    pub samples: usize,
    pub kinds: Vec<String>,
    pub seed: u64,
}

impl ConfigDocument {
    pub fn to_config(&self) -> Result<SearchConfig, CliError> {
        let kinds = self
            .kinds
            .iter()
            .map(|k| k.parse::<MapKind>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(input)?;
        let cfg = SearchConfig {
            r: self.r,
            samples: self.samples,
            kinds,
            seed: self.seed,
        };
        cfg.validate().map_err(input)?;
        Ok(cfg)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateJson {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub min: Option<f64>,
}

impl From<&Certificate> for CertificateJson {
    fn from(c: &Certificate) -> Self {
        let min = match c {
            Certificate::CompletelyPositive { min_eigenvalue } | Certificate::CoCompletelyPositive { min_eigenvalue } => {
                Some(*min_eigenvalue)
            }
            Certificate::SampledNonNegative { min } => Some(*min),
            _ => None,
        };
        Self { label: c.label(), min }
    }
}

impl CertificateJson {
    fn to_certificate(&self) -> Result<Certificate, String> {
        let min = || self.min.ok_or_else(|| format!("certificate {:?} needs min", self.label));
        Ok(match self.label.as_str() {
            "cp" => Certificate::CompletelyPositive { min_eigenvalue: min()? },
            "cocp" => Certificate::CoCompletelyPositive { min_eigenvalue: min()? },
            "decomposable" => Certificate::Decomposable,
            "literature:choi-1975" => Certificate::Literature("choi-1975"),
            "literature:tomiyama-k-positive" => Certificate::Literature("tomiyama-k-positive"),
            "sampled-nonnegative" => Certificate::SampledNonNegative { min: min()? },
            "none" => Certificate::None,
            other => return Err(format!("unknown certificate {other:?}")),
        })
    }
}

/// One log line.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordJson {
    pub index: usize,
    pub seed: u64,
    pub kind: String,
    pub params: String,
    pub certificate: CertificateJson,
    pub dmd_value: f64,
    pub flags: Vec<String>,
}

impl From<&SearchRecord> for RecordJson {
    fn from(r: &SearchRecord) -> Self {
        Self {
            index: r.index,
            seed: r.seed,
            kind: r.kind.name().to_string(),
            params: r.params.clone(),
            certificate: (&r.certificate).into(),
            dmd_value: r.dmd_value,
            flags: r.flags.clone(),
        }
    }
}

impl RecordJson {
    /// Rebuilds the record, checking it belongs to `cfg`.
    fn to_record(&self, cfg: &SearchConfig) -> Result<SearchRecord, String> {
        let kind: MapKind = self.kind.parse().map_err(|e: OpError| e.to_string())?;
        if self.index >= cfg.samples {
            return Err(format!("index {} is outside the configured {} samples", self.index, cfg.samples));
        }
        if cfg.sample(self.index) != (kind, self.seed) {
            return Err(format!("record {} was produced by a different configuration", self.index));
        }
        Ok(SearchRecord {
            index: self.index,
            seed: self.seed,
            kind,
            params: self.params.clone(),
            certificate: self.certificate.to_certificate()?,
            dmd_value: self.dmd_value,
            flags: self.flags.clone(),
        })
    }
}

#[derive(Debug, Serialize)]
pub struct SummaryJson {
    pub samples: usize,
    /// Records taken from the existing log.
    pub resumed: usize,
    pub min_value: f64,
    pub argmin: Option<usize>,
    pub decomposable_min: f64,
    pub review: Vec<usize>,
    pub invariant_holds: bool,
}

impl SummaryJson {
    fn new(s: SearchSummary, resumed: usize) -> Self {
        Self {
            samples: s.samples,
            resumed,
            min_value: s.min_value,
            argmin: s.argmin,
            decomposable_min: s.decomposable_min,
            review: s.review,
            invariant_holds: s.invariant_holds,
        }
    }

    pub fn passed(&self) -> bool {
        self.invariant_holds && self.review.is_empty()
    }
}

fn read_log(path: &Path, cfg: &SearchConfig) -> Result<Vec<SearchRecord>, CliError> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(input(format!("{}: {e}", path.display()))),
    };
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| input(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |e: &dyn std::fmt::Display| input(format!("{}:{}: {e}", path.display(), line_no + 1));
        let rec: RecordJson = serde_json::from_str(&line).map_err(|e| at(&e))?;
        let rec = rec.to_record(cfg).map_err(|e| at(&e))?;
        if !seen.insert(rec.index) {
            return Err(at(&format!("duplicate index {}", rec.index)));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Runs the configured search, writing one JSON line per record to `log`.
///
/// With `resume`, records already in `log` are kept and only missing indices run.
pub fn search(config: &Path, log: &Path, resume: bool) -> Result<SummaryJson, CliError> {
    let cfg = read_json::<ConfigDocument>(config)?.to_config()?;
    let mut records = if resume { read_log(log, &cfg)? } else { Vec::new() };
    let resumed = records.len();
    let done: HashSet<usize> = records.iter().map(|r| r.index).collect();
    let fresh = opsearch::search_open_problem_resume(&cfg, &done).map_err(|e| match e {
        OpError::ConfigInvalid(_) => input(e),
        other => internal(other),
    })?;

    let mut file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(resume)
        .truncate(!resume)
        .open(log)
        .map_err(|e| input(format!("{}: {e}", log.display())))?;
    let mut buf = String::new();
    if resume && std::fs::read(log).is_ok_and(|b| b.last().is_some_and(|&c| c != b'\n')) {
        buf.push('\n');
    }
    for rec in &fresh {
        buf.push_str(&serde_json::to_string(&RecordJson::from(rec)).map_err(internal)?);
        buf.push('\n');
    }
    file.write_all(buf.as_bytes())
        .and_then(|_| file.flush())
        .map_err(|e| internal(format!("{}: {e}", log.display())))?;

    records.extend(fresh);
    records.sort_by_key(|r| r.index);
    Ok(SummaryJson::new(opsearch::summarize(&records), resumed))
}
