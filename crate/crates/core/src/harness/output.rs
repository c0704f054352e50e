use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::RunRecord;
use crate::analysis::linear_fit;
use crate::error::{Error, Result};

pub const SERIES_HEADER: [&str; 4] = ["t", "f_total_sq", "f_system_sq", "p_codespace"];
pub const PROTECTION_HEADER: [&str; 5] = ["e_penalty", "lambda", "seed", "t_prot", "e_over_lambda_sq"];
pub const LONG_TERM_HEADER: [&str; 6] = ["e_penalty", "lambda", "seed", "alpha_sq", "predicted", "measured"];

/// 17 significant digits; parses back to the same double.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let io = |e: std::io::Error| Error::io(path, e);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::io(path, e.into()))?;
    w.write_record(header).map_err(|e| Error::io(path, e.into()))?;
    for r in rows {
        w.write_record(r).map_err(|e| Error::io(path, e.into()))?;
    }
    w.flush().map_err(io)
}

fn tag(v: f64) -> String {
    format!("{v}").replace('-', "m")
}

/// File stem `<plan>-<hash12>`, shared by every file of one plan run.
pub fn file_stem(records: &[RunRecord]) -> Result<String> {
    let first = records.first().ok_or_else(|| Error::validation("no records to write"))?;
    if records.iter().any(|r| r.plan_hash != first.plan_hash) {
        return Err(Error::validation("records come from different plans"));
    }
    Ok(format!("{}-{}", first.plan_name, &first.plan_hash[..12.min(first.plan_hash.len())]))
}

/// Series file per successful record, protection-time and long-term
/// summaries when present, and a JSON manifest of all records. Every file
/// name carries the plan hash.
pub fn emit_csv(records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    let stem = file_stem(records)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for r in records.iter().filter(|r| r.is_ok() && !r.series.is_empty()) {
        let path = dir.join(format!(
            "{stem}-ep{}-lam{}-seed{}.csv",
            tag(r.e_penalty),
            tag(r.lambda),
            r.seed
        ));
        let rows: Vec<Vec<String>> = r
            .series
            .iter()
            .map(|p| vec![fmt_f64(p.t), fmt_f64(p.total_sq), fmt_f64(p.system_sq), fmt_f64(p.codespace_prob)])
            .collect();
        write_rows(&path, &SERIES_HEADER, &rows)?;
        written.push(path);
    }
    let prot: Vec<Vec<String>> = records
        .iter()
        .filter(|r| r.protection.is_some())
        .map(|r| {
            vec![
                fmt_f64(r.e_penalty),
                fmt_f64(r.lambda),
                r.seed.to_string(),
                fmt_f64(r.t_prot().unwrap_or(f64::INFINITY)),
                fmt_f64(r.e_penalty / (r.lambda * r.lambda)),
            ]
        })
        .collect();
    if !prot.is_empty() {
        let path = dir.join(format!("{stem}-protection.csv"));
        write_rows(&path, &PROTECTION_HEADER, &prot)?;
        written.push(path);
    }
    let lt: Vec<Vec<String>> = records
        .iter()
        .filter_map(|r| r.long_term.as_ref().map(|l| (r, l)))
        .map(|(r, l)| {
            vec![
                fmt_f64(r.e_penalty),
                fmt_f64(r.lambda),
                r.seed.to_string(),
                fmt_f64(l.alpha_sq),
                fmt_f64(l.predicted),
                fmt_f64(l.measured),
            ]
        })
        .collect();
    if !lt.is_empty() {
        let path = dir.join(format!("{stem}-longterm.csv"));
        write_rows(&path, &LONG_TERM_HEADER, &lt)?;
        written.push(path);
    }
    let manifest = dir.join(format!("{stem}-records.json"));
    let text = serde_json::to_string_pretty(records)?;
    fs::write(&manifest, text + "\n").map_err(|e| Error::io(&manifest, e))?;
    written.push(manifest);
    Ok(written)
}

/// Parse a series file back into rows of doubles.
pub fn read_series_csv(path: &Path) -> Result<Vec<[f64; 4]>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let headers = rdr.headers().map_err(|e| Error::io(path, e.into()))?.clone();
    if headers.iter().ne(SERIES_HEADER.iter().copied()) {
        return Err(Error::validation(format!("{} is not a series file", path.display())));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::io(path, e.into()))?;
        let mut row = [0.0; 4];
        for (k, v) in row.iter_mut().enumerate() {
            *v = rec[k]
                .parse()
                .map_err(|_| Error::validation(format!("bad number '{}' in {}", &rec[k], path.display())))?;
        }
        out.push(row);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n_points: usize,
    /// Records skipped because they carry no finite protection time.
    pub n_skipped: usize,
    /// `t_prot = slope * E_P / lambda^2`
    pub slope: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    /// Free-intercept fit `t_prot = a + b x`.
    pub intercept: f64,
    pub free_slope: f64,
    /// `t_prot` barely changes across the `E_P / lambda^2` range.
    pub non_scaling: bool,
}

/// Variation of `b x` across the data below this fraction of the mean
/// marks the data as non-scaling.
pub const NON_SCALING_FRACTION: f64 = 0.1;

/// Least-squares fit of `y` against `x` through the origin.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> Result<FitReport> {
    if x.len() != y.len() {
        return Err(Error::validation("fit: x and y differ in length"));
    }
    if x.len() < 3 {
        return Err(Error::validation(format!("fit needs at least 3 points, got {}", x.len())));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::validation("fit: all x are zero"));
    }
    let slope = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - slope * a).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    let (intercept, free_slope) = match linear_fit(x, y) {
        Some((a, b, _)) => (a, b),
        None => (mean, 0.0),
    };
    let span = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x.iter().cloned().fold(f64::INFINITY, f64::min);
    let non_scaling = (free_slope * span).abs() < NON_SCALING_FRACTION * mean.abs();
    Ok(FitReport {
        n_points: x.len(),
        n_skipped: 0,
        slope,
        r_squared,
        residuals,
        intercept,
        free_slope,
        non_scaling,
    })
}

/// Fit of `t_prot` against `E_P / lambda^2` over records with a finite
/// protection time.
pub fn fit_report(records: &[RunRecord]) -> Result<FitReport> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut skipped = 0;
    for r in records {
        match r.t_prot() {
            Some(t) if t.is_finite() && r.lambda != 0.0 => {
                x.push(r.e_penalty / (r.lambda * r.lambda));
                y.push(t);
            }
            _ => skipped += 1,
        }
    }
    let mut rep = fit_through_origin(&x, &y)?;
    rep.n_skipped = skipped;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_recovered() {
        let x = [1.0, 2.0, 5.0, 9.0];
        let y: Vec<f64> = x.iter().map(|v| 3.7 * v).collect();
        let f = fit_through_origin(&x, &y).unwrap();
        assert!((f.slope - 3.7).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(!f.non_scaling);
    }

    #[test]
    fn constant_data_is_non_scaling() {
        let f = fit_through_origin(&[1.0, 2.0, 3.0, 4.0], &[5.0; 4]).unwrap();
        assert!(f.free_slope.abs() < 1e-12);
        assert!(f.non_scaling);
    }

    #[test]
    fn too_few_points_refused() {
        assert!(matches!(fit_through_origin(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::Validation(_))));
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, -2.5, 0.9999999999999999] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }
}
