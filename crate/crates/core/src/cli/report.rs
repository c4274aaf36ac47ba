use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::records::{read_metric_rows, write_csv, write_text, MetricRow};
use crate::error::{Error, Result};
use crate::metrics::MetricReport;

/// Grouping axis of a pivot table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Lambda,
    Dt,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Lambda => "lambda",
            Axis::Dt => "dt",
        }
    }

    fn key(self, row: &MetricRow) -> f64 {
        match self {
            Axis::Lambda => row.lambda,
            Axis::Dt => row.dt as f64,
        }
    }
}

/// AUUC is the only column where larger is better.
pub fn higher_is_better(metric: &str) -> bool {
    metric == "auuc"
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Best,
    Second,
    None,
}

impl Marker {
    pub fn label(self) -> &'static str {
        match self {
            Marker::Best => "best",
            Marker::Second => "second",
            Marker::None => "",
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Marker::Best => " **",
            Marker::Second => " *",
            Marker::None => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pivot {
    pub axis: Axis,
    /// Group keys in ascending order with their run counts.
    pub keys: Vec<(f64, usize)>,
    /// `means[g][m]` for group `g` and metric column `m`.
    pub means: Vec<[f64; 8]>,
    pub markers: Vec<[Marker; 8]>,
}

pub fn pivot(rows: &[MetricRow], axis: Axis) -> Pivot {
    let mut keys: Vec<f64> = rows.iter().map(|r| axis.key(r)).collect();
    keys.sort_by(f64::total_cmp);
    keys.dedup();
    let mut counts = vec![0usize; keys.len()];
    let mut means = vec![[0.0; 8]; keys.len()];
    for r in rows {
        let g = keys.iter().position(|k| *k == axis.key(r)).expect("key present");
        counts[g] += 1;
        for (a, v) in means[g].iter_mut().zip(r.metrics.values()) {
            *a += v;
        }
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        for a in m.iter_mut() {
            *a /= c as f64;
        }
    }
    let mut markers = vec![[Marker::None; 8]; keys.len()];
    for (col, name) in MetricReport::COLUMNS.iter().enumerate() {
        let mut order: Vec<usize> = (0..keys.len()).filter(|&g| means[g][col].is_finite()).collect();
        order.sort_by(|&a, &b| {
            let o = means[a][col].total_cmp(&means[b][col]);
            if higher_is_better(name) {
                o.reverse()
            } else {
                o
            }
        });
        if let Some(&g) = order.first() {
            markers[g][col] = Marker::Best;
        }
        if let Some(&g) = order.get(1) {
            markers[g][col] = Marker::Second;
        }
    }
    Pivot { axis, keys: keys.into_iter().zip(counts).collect(), means, markers }
}

impl Pivot {
    pub fn csv_rows(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header = vec![self.axis.name().to_string(), "runs".to_string()];
        for c in MetricReport::COLUMNS {
            header.push(c.to_string());
            header.push(format!("{c}_rank"));
        }
        let rows = self
            .keys
            .iter()
            .enumerate()
            .map(|(g, (k, n))| {
                let mut f = vec![k.to_string(), n.to_string()];
                for col in 0..8 {
                    f.push(self.means[g][col].to_string());
                    f.push(self.markers[g][col].label().to_string());
                }
                f
            })
            .collect();
        (header, rows)
    }

    pub fn render(&self) -> String {
        let mut cells: Vec<Vec<String>> = Vec::new();
        let mut header = vec![self.axis.name().to_string(), "runs".to_string()];
        header.extend(MetricReport::COLUMNS.iter().map(|c| c.to_string()));
        cells.push(header);
        for (g, (k, n)) in self.keys.iter().enumerate() {
            let mut row = vec![k.to_string(), n.to_string()];
            for col in 0..8 {
                row.push(format!("{:.6}{}", self.means[g][col], self.markers[g][col].suffix()));
            }
            cells.push(row);
        }
        let widths: Vec<usize> =
            (0..cells[0].len()).map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out.push_str("** best, * second best (auuc: higher is better; other columns: lower)\n");
        out
    }
}

fn collect(dir: &Path, found: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect(&p, found)?;
        } else if matches!(p.file_name().and_then(|n| n.to_str()), Some("runs.csv" | "metrics.csv")) {
            found.push(p);
        }
    }
    Ok(())
}

/// All per-run metric rows under `dir`, from `runs.csv` and `metrics.csv` files.
pub fn load_runs(dir: &Path) -> Result<Vec<MetricRow>> {
    if !dir.is_dir() {
        return Err(Error::usage(format!("{} is not a directory", dir.display())));
    }
    let mut files = Vec::new();
    collect(dir, &mut files)?;
    let mut rows = Vec::new();
    for f in files {
        rows.extend(read_metric_rows(&f)?);
    }
    if rows.is_empty() {
        return Err(Error::usage(format!("no runs found under {}", dir.display())));
    }
    Ok(rows)
}

/// Writes `report_lambda.{txt,csv}` and `report_dt.{txt,csv}` to `out` and
/// returns the combined text.
pub fn write_report(dir: &Path, out: &Path) -> Result<String> {
    let rows = load_runs(dir)?;
    let mut text = String::new();
    for axis in [Axis::Lambda, Axis::Dt] {
        let p = pivot(&rows, axis);
        let (header, csv_rows) = p.csv_rows();
        write_csv(&out.join(format!("report_{}.csv", axis.name())), &header, &csv_rows)?;
        let body = p.render();
        write_text(&out.join(format!("report_{}.txt", axis.name())), &body)?;
        let _ = writeln!(text, "by {} ({} runs)\n{body}", axis.name(), rows.len());
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(lambda: f64, dt: usize, pehe: f64, auuc: f64) -> MetricRow {
        MetricRow { lambda, dt, seed: 0, metrics: MetricReport { pehe, auuc, ..Default::default() } }
    }

    #[test]
    fn markers_follow_direction() {
        let rows = [row(1e-3, 2, 0.5, 0.1), row(1e-2, 2, 0.2, 0.3), row(1.0, 2, 0.3, 0.2)];
        let p = pivot(&rows, Axis::Lambda);
        assert_eq!(p.keys.len(), 3);
        let pehe = MetricReport::COLUMNS.iter().position(|c| *c == "pehe").unwrap();
        let auuc = MetricReport::COLUMNS.iter().position(|c| *c == "auuc").unwrap();
        assert_eq!(p.markers[1][pehe], Marker::Best);
        assert_eq!(p.markers[2][pehe], Marker::Second);
        assert_eq!(p.markers[1][auuc], Marker::Best);
        assert_eq!(p.markers[2][auuc], Marker::Second);
        assert_eq!(p.markers[0][auuc], Marker::None);
    }

    #[test]
    fn groups_average() {
        let rows = [row(1.0, 2, 1.0, 0.0), row(1.0, 5, 3.0, 0.0)];
        let by_lambda = pivot(&rows, Axis::Lambda);
        assert_eq!(by_lambda.keys, vec![(1.0, 2)]);
        let pehe = MetricReport::COLUMNS.iter().position(|c| *c == "pehe").unwrap();
        assert_eq!(by_lambda.means[0][pehe], 2.0);
        assert_eq!(pivot(&rows, Axis::Dt).keys.len(), 2);
    }

    #[test]
    fn empty_dir_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_runs(dir.path()), Err(Error::Usage(_))));
    }
}
