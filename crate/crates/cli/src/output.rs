//! Solution tables: `t,u0,…,u{d-1},w0,…,w{d-1}` with shortest round-trip floats.

use ndarray::Array2;
use phibvp::{Grid, Trajectory};

pub fn header(dim: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain((0..dim).map(|j| format!("u{j}")))
        .chain((0..dim).map(|j| format!("w{j}")))
        .collect()
}

pub fn trajectory_csv(tr: &Trajectory) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(header(tr.dim())).map_err(|e| e.to_string())?;
    for (i, t) in tr.grid().nodes().into_iter().enumerate() {
        let (u, wr) = (tr.u().row(i), tr.w().row(i));
        let row = std::iter::once(t).chain(u.iter().copied()).chain(wr.iter().copied()).map(|v| v.to_string());
        w.write_record(row).map_err(|e| e.to_string())?;
    }
    String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

/// Inverse of [`trajectory_csv`] for a problem on `[0, t_end]` in dimension `dim`.
/// The `t` column must match the uniform grid.
pub fn read_trajectory_csv(text: &str, t_end: f64, dim: usize) -> Result<Trajectory, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let want = header(dim);
    let got: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
    if got != want {
        return Err(format!("expected header '{}', got '{}'", want.join(","), got.join(",")));
    }
    let mut rows = vec![];
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let vals: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        rows.push(vals.map_err(|_| format!("row {}: not a number", i + 2))?);
    }
    let grid = Grid::new(t_end, rows.len()).map_err(|e| format!("{e} (from {} rows)", rows.len()))?;
    for (i, row) in rows.iter().enumerate() {
        if (row[0] - grid.node(i)).abs() > 1e-12 * t_end.max(1.0) {
            return Err(format!("row {}: t = {} is not grid node {}", i + 2, row[0], grid.node(i)));
        }
    }
    let n = rows.len();
    let u = Array2::from_shape_fn((n, dim), |(i, j)| rows[i][1 + j]);
    let w = Array2::from_shape_fn((n, dim), |(i, j)| rows[i][1 + dim + j]);
    Trajectory::new(grid, u, w).map_err(|e| e.to_string())
}
