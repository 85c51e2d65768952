use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{io_err, load_record, InstanceRecord, SchemaError, MPS_FILE};
use crate::metrics::ScaleBucket;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SizeUnit {
    /// 1 KB = 1000 bytes.
    #[default]
    Decimal,
    /// 1 KB = 1024 bytes.
    Binary,
}

impl SizeUnit {
    pub fn kb(self, bytes: u64) -> f64 {
        match self {
            SizeUnit::Decimal => bytes as f64 / 1000.0,
            SizeUnit::Binary => bytes as f64 / 1024.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionRecord {
    pub mps_bytes: u64,
    pub nl_bytes: u64,
    pub data_bytes: u64,
    pub cr: f64,
}

impl CompressionRecord {
    pub fn from_bytes(mps_bytes: u64, nl_bytes: u64, data_bytes: u64) -> Option<CompressionRecord> {
        let den = nl_bytes + data_bytes;
        (den > 0).then(|| CompressionRecord { mps_bytes, nl_bytes, data_bytes, cr: mps_bytes as f64 / den as f64 })
    }
}

fn file_size(path: &Path) -> Result<u64, SchemaError> {
    Ok(fs::metadata(path).map_err(io_err(path))?.len())
}

fn measure(dir: &Path, record: &InstanceRecord) -> Result<CompressionRecord, SchemaError> {
    let mps_bytes = match record.metadata.get("mps_bytes").and_then(|v| v.as_u64()) {
        Some(b) => b,
        None => {
            let p = dir.join(MPS_FILE);
            if !p.is_file() {
                return Err(SchemaError::MissingMpsSize(dir.to_path_buf()));
            }
            file_size(&p)?
        }
    };
    let nl_bytes = record.abstract_problem.len() as u64;
    let mut data_bytes = 0;
    for f in &record.files {
        data_bytes += file_size(&dir.join(&f.path))?;
    }
    CompressionRecord::from_bytes(mps_bytes, nl_bytes, data_bytes).ok_or_else(|| SchemaError::ZeroDenominator(dir.to_path_buf()))
}

/// Compression ratio of an instance directory. The MPS size comes from
/// `metadata.mps_bytes` when recorded, otherwise from `model.mps` on disk;
/// the NL size is the byte length of `abstract_problem`.
pub fn compute_cr(dir: &Path) -> Result<CompressionRecord, SchemaError> {
    let record = load_record(dir)?;
    measure(dir, &record)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub median: f64,
    pub max: f64,
}

impl Summary {
    /// Median uses the mean of the two middle values for even counts.
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        Some(Summary { median, max: v[n - 1] })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceStats {
    pub id: String,
    pub dir: PathBuf,
    pub compression: CompressionRecord,
    pub n_groups: Option<u64>,
    pub n_families: Option<u64>,
    pub bucket: Option<ScaleBucket>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_instances: usize,
    pub unit: SizeUnit,
    pub mps_bytes: Summary,
    pub data_bytes: Summary,
    pub cr: Summary,
    pub n_groups: Option<Summary>,
    pub n_families: Option<Summary>,
    pub buckets: BTreeMap<String, usize>,
    pub instances: Vec<InstanceStats>,
}

fn load_stats(dir: &Path) -> Result<InstanceStats, SchemaError> {
    let record = load_record(dir)?;
    let compression = measure(dir, &record)?;
    let meta = |k: &str| record.metadata.get(k).and_then(|v| v.as_u64());
    let bucket = match (meta("n_vars"), meta("n_rows")) {
        (Some(v), Some(r)) => Some(ScaleBucket::of_size((v + r) as usize)),
        _ => None,
    };
    Ok(InstanceStats {
        id: record.id.clone(),
        dir: dir.to_path_buf(),
        compression,
        n_groups: meta("n_groups"),
        n_families: meta("n_families"),
        bucket,
    })
}

pub fn corpus_stats(dirs: &[PathBuf], unit: SizeUnit) -> Result<CorpusStats, SchemaError> {
    if dirs.is_empty() {
        return Err(SchemaError::EmptyCorpus);
    }
    let mut instances = dirs.par_iter().map(|d| load_stats(d)).collect::<Result<Vec<_>, _>>()?;
    instances.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.dir.cmp(&b.dir)));
    let col = |f: &dyn Fn(&InstanceStats) -> Option<f64>| instances.iter().filter_map(f).collect::<Vec<f64>>();
    let mut buckets: BTreeMap<String, usize> = ScaleBucket::ALL.iter().map(|b| (b.as_str().to_string(), 0)).collect();
    for s in &instances {
        let key = s.bucket.map_or("UNKNOWN", ScaleBucket::as_str);
        *buckets.entry(key.to_string()).or_insert(0) += 1;
    }
    Ok(CorpusStats {
        n_instances: instances.len(),
        unit,
        mps_bytes: Summary::of(&col(&|s| Some(s.compression.mps_bytes as f64))).expect("nonempty"),
        data_bytes: Summary::of(&col(&|s| Some(s.compression.data_bytes as f64))).expect("nonempty"),
        cr: Summary::of(&col(&|s| Some(s.compression.cr))).expect("nonempty"),
        n_groups: Summary::of(&col(&|s| s.n_groups.map(|x| x as f64))),
        n_families: Summary::of(&col(&|s| s.n_families.map(|x| x as f64))),
        buckets,
        instances,
    })
}

impl CorpusStats {
    pub fn to_text(&self) -> String {
        let kb = |b: f64| self.unit.kb(b as u64);
        let mut s = String::new();
        let _ = writeln!(s, "instances     {}", self.n_instances);
        let _ = writeln!(s, "{:<13} {:>12} {:>12}", "", "median", "max");
        let _ = writeln!(s, "{:<13} {:>12.2} {:>12.2}", "mps KB", kb(self.mps_bytes.median), kb(self.mps_bytes.max));
        let _ = writeln!(s, "{:<13} {:>12.2} {:>12.2}", "data KB", kb(self.data_bytes.median), kb(self.data_bytes.max));
        let _ = writeln!(s, "{:<13} {:>12.2} {:>12.2}", "CR", self.cr.median, self.cr.max);
        if let Some(g) = self.n_groups {
            let _ = writeln!(s, "{:<13} {:>12} {:>12}", "var groups", g.median, g.max);
        }
        if let Some(f) = self.n_families {
            let _ = writeln!(s, "{:<13} {:>12} {:>12}", "families", f.median, f.max);
        }
        let order = ScaleBucket::ALL.iter().map(|b| b.as_str()).chain(["UNKNOWN"]);
        for b in order {
            if let Some(n) = self.buckets.get(b) {
                let _ = writeln!(s, "{b:<13} {n:>12}");
            }
        }
        s
    }
}
