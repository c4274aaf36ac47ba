//! Dataset CSV files and their DGP sidecars.
//!
//! Static header: `id,x_0..x_{dx-1},t_0..t_{dt-1},y,talt_0..talt_{dt-1},ite_true`.
//! Dynamic header: `traj,step,v_0..,x_0..,a_0..,y,ite_true_step`, one row per step.
//! Frozen simulator parameters go to `<stem>.dgp.json` next to the CSV.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::dynamic_dgp::{Trajectory, TrajectoryDataset};
use super::static_dgp::StaticDataset;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("dgp.json")
}

pub fn static_header(dx: usize, dt: usize) -> Vec<String> {
    let mut h = vec!["id".to_string()];
    h.extend((0..dx).map(|k| format!("x_{k}")));
    h.extend((0..dt).map(|j| format!("t_{j}")));
    h.push("y".into());
    h.extend((0..dt).map(|j| format!("talt_{j}")));
    h.push("ite_true".into());
    h
}

pub fn dynamic_header(dv: usize, dx: usize, da: usize) -> Vec<String> {
    let mut h = vec!["traj".to_string(), "step".to_string()];
    h.extend((0..dv).map(|k| format!("v_{k}")));
    h.extend((0..dx).map(|k| format!("x_{k}")));
    h.extend((0..da).map(|k| format!("a_{k}")));
    h.push("y".into());
    h.push("ite_true_step".into());
    h
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::io(path, e.into()))?;
    writeln!(w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_static(path: &Path, data: &StaticDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(static_header(data.dx(), data.dt()))
        .map_err(|e| csv_err(path, e))?;
    for i in 0..data.len() {
        let mut rec = vec![i.to_string()];
        rec.extend(data.x.row(i).iter().map(f64::to_string));
        rec.extend(data.t.row(i).iter().map(f64::to_string));
        rec.push(data.y[i].to_string());
        rec.extend(data.t_alt.row(i).iter().map(f64::to_string));
        rec.push(data.ite_true[i].to_string());
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_dynamic(path: &Path, data: &TrajectoryDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(dynamic_header(data.dv, data.dx, data.da))
        .map_err(|e| csv_err(path, e))?;
    for (k, tr) in data.trajectories.iter().enumerate() {
        for t in 0..data.steps {
            let mut rec = vec![k.to_string(), t.to_string()];
            rec.extend(tr.v.iter().map(f64::to_string));
            rec.extend(tr.x.row(t).iter().map(f64::to_string));
            rec.extend(tr.a.row(t).iter().map(f64::to_string));
            rec.push(tr.y[t].to_string());
            rec.push(tr.ite_true[t].to_string());
            w.write_record(&rec).map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn schema(path: &Path, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn count_prefix(header: &[String], prefix: &str) -> usize {
    header
        .iter()
        .filter(|h| {
            h.strip_prefix(prefix)
                .is_some_and(|rest| rest.parse::<usize>().is_ok())
        })
        .count()
}

fn check_header(path: &Path, found: &[String], expected: &[String]) -> Result<()> {
    for (i, exp) in expected.iter().enumerate() {
        match found.get(i) {
            Some(f) if f == exp => {}
            Some(f) => return Err(schema(path, format!("column {i}: expected `{exp}`, found `{f}`"))),
            None => return Err(schema(path, format!("missing column `{exp}`"))),
        }
    }
    if found.len() > expected.len() {
        return Err(schema(path, format!("unexpected column `{}`", found[expected.len()])));
    }
    Ok(())
}

fn open_reader(path: &Path) -> Result<(csv::Reader<BufReader<File>>, Vec<String>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let header = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    Ok((reader, header))
}

fn parse_row(path: &Path, header: &[String], rec: &csv::StringRecord, line: usize) -> Result<Vec<f64>> {
    rec.iter()
        .enumerate()
        .map(|(i, s)| {
            let v: f64 = s.trim().parse().map_err(|_| {
                schema(path, format!("row {line}, column `{}`: not a number: `{s}`", header[i]))
            })?;
            if !v.is_finite() {
                return Err(schema(path, format!("row {line}, column `{}`: non-finite", header[i])));
            }
            Ok(v)
        })
        .collect()
}

fn check_binary(path: &Path, header: &[String], row: &[f64], cols: std::ops::Range<usize>, line: usize) -> Result<()> {
    for c in cols {
        if row[c] != 0.0 && row[c] != 1.0 {
            return Err(schema(path, format!("row {line}, column `{}`: expected 0 or 1", header[c])));
        }
    }
    Ok(())
}

pub fn read_static(path: &Path) -> Result<StaticDataset> {
    let (mut reader, header) = open_reader(path)?;
    let dx = count_prefix(&header, "x_");
    let dt = count_prefix(&header, "t_");
    if dx == 0 || dt == 0 {
        return Err(schema(path, "no `x_*` or `t_*` columns"));
    }
    check_header(path, &header, &static_header(dx, dt))?;
    let (mut xs, mut ts, mut alts, mut y, mut ite) = (vec![], vec![], vec![], vec![], vec![]);
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = parse_row(path, &header, &rec, line + 1)?;
        let t_start = 1 + dx;
        let alt_start = t_start + dt + 1;
        check_binary(path, &header, &row, t_start..t_start + dt, line + 1)?;
        check_binary(path, &header, &row, alt_start..alt_start + dt, line + 1)?;
        xs.extend_from_slice(&row[1..t_start]);
        ts.extend_from_slice(&row[t_start..t_start + dt]);
        y.push(row[t_start + dt]);
        alts.extend_from_slice(&row[alt_start..alt_start + dt]);
        ite.push(row[alt_start + dt]);
    }
    let n = y.len();
    if n == 0 {
        return Err(schema(path, "no data rows"));
    }
    Ok(StaticDataset {
        x: Tensor::matrix(n, dx, xs),
        t: Tensor::matrix(n, dt, ts),
        y,
        t_alt: Tensor::matrix(n, dt, alts),
        ite_true: ite,
    })
}

pub fn read_dynamic(path: &Path) -> Result<TrajectoryDataset> {
    let (mut reader, header) = open_reader(path)?;
    let dv = count_prefix(&header, "v_");
    let dx = count_prefix(&header, "x_");
    let da = count_prefix(&header, "a_");
    if dx == 0 || da == 0 {
        return Err(schema(path, "no `x_*` or `a_*` columns"));
    }
    check_header(path, &header, &dynamic_header(dv, dx, da))?;

    struct Partial {
        v: Vec<f64>,
        x: Vec<f64>,
        a: Vec<f64>,
        y: Vec<f64>,
        ite: Vec<f64>,
    }
    let mut parts: Vec<Partial> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = parse_row(path, &header, &rec, line + 1)?;
        let (traj, step) = (row[0] as usize, row[1] as usize);
        if traj == parts.len() {
            parts.push(Partial {
                v: row[2..2 + dv].to_vec(),
                x: vec![],
                a: vec![],
                y: vec![],
                ite: vec![],
            });
        } else if traj + 1 != parts.len() {
            return Err(schema(path, format!("row {}: column `traj` out of order", line + 1)));
        }
        let p = parts.last_mut().expect("pushed above");
        if step != p.y.len() {
            return Err(schema(path, format!("row {}: column `step` out of order", line + 1)));
        }
        let xs = 2 + dv;
        let as_ = xs + dx;
        check_binary(path, &header, &row, as_..as_ + da, line + 1)?;
        p.x.extend_from_slice(&row[xs..as_]);
        p.a.extend_from_slice(&row[as_..as_ + da]);
        p.y.push(row[as_ + da]);
        p.ite.push(row[as_ + da + 1]);
    }
    let steps = parts.first().map_or(0, |p| p.y.len());
    if steps == 0 {
        return Err(schema(path, "no data rows"));
    }
    if let Some(k) = parts.iter().position(|p| p.y.len() != steps) {
        return Err(schema(path, format!("trajectory {k}: column `step` has inconsistent length")));
    }
    let trajectories = parts
        .into_iter()
        .map(|p| Trajectory {
            v: p.v,
            x: Tensor::matrix(steps, dx, p.x),
            a: Tensor::matrix(steps, da, p.a),
            y: p.y,
            ite_true: p.ite,
        })
        .collect();
    Ok(TrajectoryDataset {
        trajectories,
        dv,
        dx,
        da,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{gen_dynamic, gen_static, DynamicDgpSpec, StaticDgpSpec};

    #[test]
    fn static_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let (_, data) = gen_static(&StaticDgpSpec {
            n: 50,
            dt: 3,
            ..StaticDgpSpec::default()
        });
        write_static(&path, &data).unwrap();
        assert_eq!(read_static(&path).unwrap(), data);
    }

    #[test]
    fn dynamic_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let (_, data) = gen_dynamic(&DynamicDgpSpec {
            n: 7,
            steps: 4,
            ..DynamicDgpSpec::default()
        });
        write_dynamic(&path, &data).unwrap();
        assert_eq!(read_dynamic(&path).unwrap(), data);
    }

    #[test]
    fn bad_cell_names_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "id,x_0,t_0,y,talt_0,ite_true\n0,0.5,0.3,1.0,1,0.2\n").unwrap();
        let err = read_static(&path).unwrap_err().to_string();
        assert!(err.contains("`t_0`"), "{err}");
        std::fs::write(&path, "id,x_0,t_0,y,talt_0,ite\n").unwrap();
        let err = read_static(&path).unwrap_err().to_string();
        assert!(err.contains("ite_true"), "{err}");
    }

    #[test]
    fn header_matches_documented_schema() {
        assert_eq!(
            static_header(2, 1).join(","),
            "id,x_0,x_1,t_0,y,talt_0,ite_true"
        );
        assert_eq!(
            dynamic_header(1, 2, 1).join(","),
            "traj,step,v_0,x_0,x_1,a_0,y,ite_true_step"
        );
    }
}
