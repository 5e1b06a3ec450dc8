//! Plot data from sweep CSVs: one whitespace-separated `x y yerr` file per
//! series and a gnuplot script that draws them. The terminal is left to the
//! caller, so the same files serve SVG, PNG or interactive output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::sweep::{read_csv, SweepError, Table};

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error(transparent)]
    Schema(#[from] SweepError),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

struct Series {
    title: String,
    xlabel: &'static str,
    ylabel: &'static str,
    points: Vec<(f64, f64, f64)>,
}

fn metrics(mode: &str) -> (&'static str, &'static [(&'static str, &'static str, &'static str)]) {
    match mode {
        "codelength_vs_dkl" => (
            "dkl_target",
            &[
                ("mean_bits", "se_bits", "codelength (bits)"),
                ("mean_path_bits", "se_path_bits", "-log2 P(S_D) (bits)"),
                ("mean_steps", "se_steps", "steps"),
            ],
        ),
        "bias_vs_extra_bits" => ("extra_bits", &[("kl_bias", "se_kl_bias", "KL bias (bits)")]),
        _ => (
            "dinf_target",
            &[("mean_steps", "se_steps", "steps"), ("mean_bits", "se_bits", "codelength (bits)")],
        ),
    }
}

fn collect(table: &Table) -> BTreeMap<String, Series> {
    let mut out: BTreeMap<String, Series> = BTreeMap::new();
    for row in &table.rows {
        if !table.get(row, "skipped").is_empty() {
            continue;
        }
        let mode = table.get(row, "mode");
        let variant = table.get(row, "variant");
        let dkl = table.number(row, "dkl_target").unwrap_or(f64::NAN);
        let dinf = table.number(row, "dinf_target").unwrap_or(f64::NAN);
        let (xcol, cols) = metrics(mode);
        let (x, fixed) = match xcol {
            "dkl_target" => (dkl, format!("gap{}", dinf - dkl)),
            "extra_bits" => match table.number(row, "d_max") {
                Some(d) => (d - dkl.round(), format!("dkl{dkl}_dinf{dinf}")),
                None => continue,
            },
            _ => (dinf, format!("dkl{dkl}")),
        };
        for &(ycol, ecol, ylabel) in cols {
            let (Some(y), Some(e)) = (table.number(row, ycol), table.number(row, ecol)) else {
                continue;
            };
            let key = format!("{mode}_{fixed}_{ycol}_{variant}");
            out.entry(key)
                .or_insert_with(|| Series {
                    title: variant.to_string(),
                    xlabel: if xcol == "extra_bits" { "additional bits d" } else if xcol == "dkl_target" { "D_KL (bits)" } else { "D_inf (bits)" },
                    ylabel,
                    points: Vec::new(),
                })
                .points
                .push((x, y, e));
        }
    }
    for s in out.values_mut() {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

fn sanitize(key: &str) -> String {
    key.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

fn write(path: &Path, contents: &str) -> Result<(), PlotError> {
    fs::write(path, contents).map_err(|source| PlotError::Io { path: path.to_path_buf(), source })
}

/// Writes plot data for `csv` into `out_dir`, returning the files written.
pub fn emit_plots(csv: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let file = fs::File::open(csv).map_err(|source| PlotError::Io { path: csv.to_path_buf(), source })?;
    let table = read_csv(file)?;
    fs::create_dir_all(out_dir).map_err(|source| PlotError::Io { path: out_dir.to_path_buf(), source })?;
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep").to_string();
    let series = collect(&table);

    // Series sharing everything but the variant share a panel.
    let mut panels: BTreeMap<String, Vec<(String, &Series)>> = BTreeMap::new();
    let mut written = Vec::new();
    for (key, s) in &series {
        let name = format!("{}_{}.dat", sanitize(&stem), sanitize(key));
        let mut body = format!("# {} vs {}\n# x y yerr\n", s.ylabel, s.xlabel);
        for (x, y, e) in &s.points {
            writeln!(body, "{x} {y} {e}").unwrap();
        }
        let path = out_dir.join(&name);
        write(&path, &body)?;
        written.push(path);
        let panel = key.rsplit_once('_').map(|(p, _)| p.to_string()).unwrap_or_default();
        panels.entry(panel).or_default().push((name, s));
    }

    let mut script = String::from("# gnuplot script; choose a terminal before loading, e.g.\n# set terminal svg; set output 'plot.svg'\n");
    for (panel, members) in &panels {
        let (_, first) = members[0];
        writeln!(script, "\nset title '{}'", panel.replace('_', " ")).unwrap();
        writeln!(script, "set xlabel '{}'\nset ylabel '{}'", first.xlabel, first.ylabel).unwrap();
        let parts: Vec<String> = members
            .iter()
            .map(|(file, s)| format!("'{file}' using 1:2:3 with yerrorlines title '{}'", s.title))
            .collect();
        writeln!(script, "plot {}", parts.join(", \\\n     ")).unwrap();
    }
    let path = out_dir.join(format!("{}.gp", sanitize(&stem)));
    write(&path, &script)?;
    written.push(path);
    Ok(written)
}
