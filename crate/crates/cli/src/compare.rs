//! `compare`: overlay two observable series on a common grid.

use crate::config::{key, Bound, Def, KeySpec, Reader};
use crate::output::Output;
use crate::Input;
use anyhow::Result;
use curved_dirac::io::{compare, read_csv, IoError, Series};
use std::path::PathBuf;

pub fn schema() -> Vec<KeySpec> {
    vec![
        key(
            "a.path",
            "path",
            Def::Required,
            "first CSV (e.g. observables.csv of a continuum run)",
        ),
        key(
            "a.x",
            "-",
            Def::Optional,
            "abscissa column (default: t, or z if there is no t)",
        ),
        key("a.y", "-", Def::Value("\"mean_x\""), "ordinate column"),
        key(
            "a.label",
            "-",
            Def::Value("\"a\""),
            "column name of the first series in report.csv",
        ),
        key(
            "b.path",
            "path",
            Def::Required,
            "second CSV (e.g. lattice_observables.csv of a waveguide run)",
        ),
        key(
            "b.x",
            "-",
            Def::Optional,
            "abscissa column (default: t, or z if there is no t)",
        ),
        key("b.y", "-", Def::Value("\"mean_x\""), "ordinate column"),
        key(
            "b.label",
            "-",
            Def::Value("\"b\""),
            "column name of the second series in report.csv",
        ),
        key(
            "width",
            "length",
            Def::Optional,
            "packet width; adds rel_width = max|Δ|/width to the summary",
        ),
    ]
}

struct Side {
    path: PathBuf,
    x: Option<String>,
    y: String,
    label: String,
}

fn side(r: &mut Reader, p: &str) -> Side {
    let path = PathBuf::from(r.string(&format!("{p}.path")));
    let xk = format!("{p}.x");
    let x = r.present(&xk).then(|| r.string(&xk));
    Side {
        path,
        x,
        y: r.string(&format!("{p}.y")),
        label: r.string(&format!("{p}.label")),
    }
}

fn load(s: &Side) -> Result<Series> {
    let data = read_csv(&s.path)?;
    let bad = |msg: String| IoError::Compare(format!("{}: {msg}", s.path.display()));
    let x = match &s.x {
        Some(x) => x.clone(),
        None => ["t", "z"]
            .into_iter()
            .find(|c| data.column_index(c).is_some())
            .ok_or_else(|| bad("no 't' or 'z' column; set the abscissa explicitly".into()))?
            .to_string(),
    };
    let xs = data.floats(&x).map_err(bad)?;
    let ys = data.floats(&s.y).map_err(bad)?;
    Ok(Series::new(s.label.clone(), xs, ys))
}

pub fn run(input: &Input) -> Result<()> {
    let mut r = input.reader(&schema());
    let a = side(&mut r, "a");
    let b = side(&mut r, "b");
    let width = r.opt_f64("width", Bound::Positive);
    if !a.label.is_empty() && a.label == b.label {
        r.error(format!("'a.label' and 'b.label' are both \"{}\"", a.label));
    }
    let outdir = PathBuf::from(r.string("outdir"));
    let effective = r.finish()?;

    let report = compare(&load(&a)?, &load(&b)?, width)?;
    let mut out = Output::create(&outdir, "compare", &effective)?;
    out.csv("report.csv", &report.to_table())?;
    out.csv("summary.csv", &report.summary_table())?;
    let manifest = out.finish()?;
    print!("max |Δ| = {:.6e}, rms = {:.6e}", report.max_abs, report.rms);
    match report.rel_width {
        Some(rel) => println!(", max |Δ| / width = {rel:.4}"),
        None => println!(),
    }
    println!("wrote {}", manifest.display());
    Ok(())
}
