use std::path::Path;

use super::WaveformError;

/// Writes equal-length columns with a header row; header names carry units.
pub fn write_columns_csv(path: &Path, columns: &[(&str, &[f64])]) -> Result<(), WaveformError> {
    let n = columns.first().map(|c| c.1.len()).unwrap_or(0);
    if columns.iter().any(|c| c.1.len() != n) {
        return Err(WaveformError::GridMismatch("columns differ in length".into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(columns.iter().map(|c| c.0))?;
    for i in 0..n {
        w.write_record(columns.iter().map(|c| format!("{:.12e}", c.1[i])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_columns_csv(path: &Path) -> Result<Vec<(String, Vec<f64>)>, WaveformError> {
    let mut r = csv::Reader::from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for rec in r.records() {
        let rec = rec?;
        for (c, field) in cols.iter_mut().zip(rec.iter()) {
            let v = field
                .trim()
                .parse::<f64>()
                .map_err(|e| WaveformError::InvalidParam(format!("bad number {field:?}: {e}")))?;
            c.push(v);
        }
    }
    Ok(headers.into_iter().zip(cols).collect())
}
