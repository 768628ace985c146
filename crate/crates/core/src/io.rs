//! Plain-text output: snapshot CSV, OBJ meshes, diagnostics and reports.
//!
//! Floats are written with 17 significant digits so every file round-trips
//! bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::IoError;
use crate::flow::{DiagnosticsRow, HaltReason};
use crate::grid::{Field, ImmersionGrid};

type Res<T> = Result<T, IoError>;

pub const DIAGNOSTICS_HEADER: &str = "step,t,dt,willmore_energy,min_a0sq,max_speed";

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.to_path_buf(), source }
}

/// Writes `contents`, creating parent directories as needed.
pub fn write_text(path: &Path, contents: &str) -> Res<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(file_err(dir))?;
    }
    fs::write(path, contents).map_err(file_err(path))
}

/// Point-per-row CSV, `u,v,x1,...,xn`, `u` varying fastest.
pub fn snapshot_csv(f: &Field<f64>) -> String {
    let mut s = String::from("u,v");
    for k in 1..=f.dim() {
        let _ = write!(s, ",x{k}");
    }
    s.push('\n');
    for j in 0..f.nv() {
        for i in 0..f.nu() {
            s.push_str(&fmt_f64(i as f64 * f.du()));
            s.push(',');
            s.push_str(&fmt_f64(j as f64 * f.dv()));
            for x in f.at(i, j) {
                s.push(',');
                s.push_str(&fmt_f64(*x));
            }
            s.push('\n');
        }
    }
    s
}

pub fn write_snapshot_csv(f: &Field<f64>, path: &Path) -> Res<()> {
    write_text(path, &snapshot_csv(f))
}

/// Parses a snapshot written by [`snapshot_csv`]. Grid sizes are inferred
/// from where `v` first changes.
pub fn parse_snapshot_csv(text: &str) -> Res<ImmersionGrid<f64>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or(IoError::Parse { line: 1, reason: "empty snapshot".into() })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let n = cols.len().saturating_sub(2);
    let expected: Vec<String> = ["u".to_string(), "v".to_string()].into_iter().chain((1..=n).map(|k| format!("x{k}"))).collect();
    if n == 0 || cols != expected {
        return Err(IoError::Parse { line: 1, reason: format!("expected header `u,v,x1,...,xn`, got `{header}`") });
    }
    let mut data = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in lines {
        let row: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| IoError::Parse { line: i + 1, reason: e.to_string() })?;
        if row.len() != n + 2 {
            return Err(IoError::Parse { line: i + 1, reason: format!("expected {} columns, got {}", n + 2, row.len()) });
        }
        vs.push(row[1]);
        data.extend_from_slice(&row[2..]);
    }
    let nu = vs.iter().position(|&v| v != vs[0]).unwrap_or(vs.len());
    if nu == 0 || vs.len() % nu != 0 {
        return Err(IoError::Parse { line: 1, reason: format!("{} rows do not form a rectangular grid", vs.len()) });
    }
    let nv = vs.len() / nu;
    Ok(ImmersionGrid::new(Field::from_vec(nu, nv, n, data)?)?)
}

pub fn read_snapshot_csv(path: &Path) -> Res<ImmersionGrid<f64>> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    parse_snapshot_csv(&text).map_err(|e| match e {
        IoError::Parse { line, reason } => IoError::Parse { line, reason: format!("{}: {reason}", path.display()) },
        other => other,
    })
}

/// Quad mesh of a surface in `R^3` with periodic wrap.
pub fn obj(f: &ImmersionGrid<f64>) -> Option<String> {
    if f.n() != 3 {
        return None;
    }
    let (nu, nv) = (f.nu(), f.nv());
    let mut s = String::new();
    for j in 0..nv {
        for i in 0..nu {
            let x = f.at(i, j);
            let _ = writeln!(s, "v {} {} {}", fmt_f64(x[0]), fmt_f64(x[1]), fmt_f64(x[2]));
        }
    }
    let id = |i: usize, j: usize| (j % nv) * nu + (i % nu) + 1;
    for j in 0..nv {
        for i in 0..nu {
            let _ = writeln!(s, "f {} {} {} {}", id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
        }
    }
    Some(s)
}

pub fn diagnostics_csv(rows: &[DiagnosticsRow], halt: HaltReason) -> String {
    let mut s = format!("{DIAGNOSTICS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.step,
            fmt_f64(r.t),
            fmt_f64(r.dt),
            fmt_f64(r.energy),
            fmt_f64(r.min_a0sq),
            fmt_f64(r.max_speed)
        );
    }
    let _ = writeln!(s, "# halt={halt}");
    s
}

/// Generic CSV with a header row; cells are written verbatim.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::torus_of_revolution;

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let f = torus_of_revolution(2.0, 0.7, 16, 18).unwrap();
        let g = parse_snapshot_csv(&snapshot_csv(&f)).unwrap();
        assert_eq!(g.nu(), 16);
        assert_eq!(g.nv(), 18);
        assert_eq!(g.data(), f.data());
    }

    #[test]
    fn snapshot_rejects_bad_input() {
        assert!(matches!(parse_snapshot_csv("a,b\n1,2\n"), Err(IoError::Parse { .. })));
        assert!(matches!(parse_snapshot_csv("u,v,x1,x2,x3\n0,0,1,2\n"), Err(IoError::Parse { line: 2, .. })));
        assert!(matches!(
            parse_snapshot_csv("u,v,x1,x2,x3\n0,0,1,2,3\n"),
            Err(IoError::Numerical(crate::Error::InvalidGrid(_)))
        ));
    }

    #[test]
    fn obj_faces_wrap() {
        let f = torus_of_revolution(2.0, 1.0, 16, 16).unwrap();
        let s = obj(&f).unwrap();
        assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 256);
        let faces: Vec<&str> = s.lines().filter(|l| l.starts_with("f ")).collect();
        assert_eq!(faces.len(), 256);
        assert_eq!(faces[0], "f 1 2 18 17");
        assert_eq!(*faces.last().unwrap(), "f 256 241 1 16");
    }

    #[test]
    fn diagnostics_layout() {
        let row = DiagnosticsRow { step: 0, t: 0.0, dt: 0.0, energy: 1.5, min_a0sq: 0.25, max_speed: 2.0 };
        let s = diagnostics_csv(&[row], HaltReason::Completed);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], DIAGNOSTICS_HEADER);
        assert!(lines[1].starts_with("0,0.0000000000000000e0,"));
        assert_eq!(lines[2], "# halt=completed");
    }

    #[test]
    fn file_errors_carry_the_path() {
        let e = read_snapshot_csv(Path::new("/nonexistent/x.csv")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/x.csv"));
    }
}
