use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;

pub type CsvOut = csv::Writer<Box<dyn Write>>;

/// Provenance line written before the CSV header.
pub fn provenance(cfg: &ExperimentConfig) -> String {
    format!("# config={} seed={}\n", cfg.hash(), cfg.seed)
}

/// CSV writer to `path`, or stdout when absent, starting with the provenance line.
pub fn csv_out(path: Option<&Path>, cfg: &ExperimentConfig) -> Result<CsvOut, HarnessError> {
    let mut sink: Box<dyn Write> = match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
            }
            Box::new(File::create(p).map_err(HarnessError::io(p))?)
        }
        None => Box::new(io::stdout()),
    };
    let where_ = path.map_or_else(|| "<stdout>".into(), |p| p.to_path_buf());
    sink.write_all(provenance(cfg).as_bytes()).map_err(HarnessError::io(where_))?;
    Ok(csv::Writer::from_writer(sink))
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), HarnessError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(HarnessError::io(p)),
        None => io::stdout().write_all(text.as_bytes()).map_err(HarnessError::io("<stdout>")),
    }
}

/// One-based VL ids joined by spaces.
pub fn vl_list(vls: &[usize]) -> String {
    vls.iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(" ")
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}
