//! `geometry-check`: general formulas vs hand-derived closed forms at random points.

use crate::config::{key, Def, KeySpec};
use crate::output::Output;
use crate::{Input, NumericalFailure};
use anyhow::Result;
use curved_dirac::geometry::{self, closed_form, MetricFamily, MetricSpec, Point};
use curved_dirac::io::Table;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

/// Relative tolerances, scaled by `max(|value|, |oracle|, 1)`.
const TOL_ANALYTIC: f64 = 1e-8;
const TOL_FD: f64 = 1e-5;
/// The Ricci scalar needs second derivatives; its floor is looser.
const TOL_RICCI: f64 = 1e-6;

pub fn schema() -> Vec<KeySpec> {
    vec![
        key("metric", "-", Def::Required, "metric family (flat, conformal-exp, conformal-poly, conformal-bump, static-poly, frw-linear, frw-exp, rindler-polar, rindler-conformal)"),
        key("params", "-", Def::Value("null"), "family parameters as an object, e.g. {\"rate\": 0.7}; omitted = catalog values"),
        key("points", "-", Def::Value("20"), "number of random probe points"),
        key("finite_difference", "-", Def::Value("true"), "also check the finite-difference derivative path"),
    ]
}

struct Row<'a> {
    object: &'a str,
    component: String,
    value: f64,
    oracle: f64,
    tol: f64,
}

fn components(
    out: &mut Vec<Row<'static>>,
    suffix: bool,
    general: &MetricFamily,
    reference: &MetricFamily,
    p: Point,
    tol: f64,
) -> Result<()> {
    let name = |base: &'static str, fd: &'static str| if suffix { fd } else { base };
    let g = geometry::christoffel(general, p)?.gamma;
    let gc = closed_form::christoffel(reference, p)?.gamma;
    let v = geometry::vielbein(general, p)?;
    let vc = closed_form::vielbein(reference, p)?;
    let w = geometry::spin_connection(general, p)?.omega;
    let wc = closed_form::spin_connection(reference, p)?.omega;
    let s = geometry::spinor_connection(general, p)?.omega;
    let sc = closed_form::spinor_connection(reference, p)?.omega;
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                out.push(Row {
                    object: name("christoffel", "christoffel_fd"),
                    component: format!("{a}{b}{c}"),
                    value: g[a][b][c],
                    oracle: gc[a][b][c],
                    tol,
                });
                out.push(Row {
                    object: name("spin_connection", "spin_connection_fd"),
                    component: format!("{a}{b}{c}"),
                    value: w[a][b][c],
                    oracle: wc[a][b][c],
                    tol,
                });
            }
            out.push(Row {
                object: name("vielbein", "vielbein_fd"),
                component: format!("{a}{b}"),
                value: v.e_inv[a][b],
                oracle: vc.e_inv[a][b],
                tol,
            });
            out.push(Row {
                object: name("inverse_vielbein", "inverse_vielbein_fd"),
                component: format!("{a}{b}"),
                value: v.e[a][b],
                oracle: vc.e[a][b],
                tol,
            });
        }
    }
    for n in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let (x, y) = (s[n].0[i][j], sc[n].0[i][j]);
                for (part, a, b) in [("re", x.re, y.re), ("im", x.im, y.im)] {
                    out.push(Row {
                        object: name("spinor_connection", "spinor_connection_fd"),
                        component: format!("{n}{i}{j}.{part}"),
                        value: a,
                        oracle: b,
                        tol,
                    });
                }
            }
        }
    }
    out.push(Row {
        object: name("ricci_scalar", "ricci_scalar_fd"),
        component: String::new(),
        value: geometry::ricci_scalar(general, p)?,
        oracle: closed_form::ricci_scalar(reference, p)?,
        tol: tol.max(TOL_RICCI),
    });
    Ok(())
}

pub fn run(input: &Input) -> Result<()> {
    let mut r = input.reader(&schema());
    let name = r.choice("metric", &MetricSpec::NAMES);
    let params = r.object_or_null("params");
    let n_points = r.usize("points", 1);
    let fd = r.bool("finite_difference");
    let seed = r.u64("seed");
    let outdir = PathBuf::from(r.string("outdir"));
    let spec = if name.is_empty() {
        None
    } else {
        let params = if params.is_null() {
            MetricSpec::catalog()
                .into_iter()
                .find(|s| s.name() == name)
                .map(|s| serde_json::to_value(&s).expect("spec serializes")["params"].clone())
                .unwrap_or_default()
        } else {
            params
        };
        match MetricSpec::from_name(&name, params) {
            Ok(s) => Some(s),
            Err(e) => {
                r.error(format!("'params' for metric '{name}': {e}"));
                None
            }
        }
    };
    let effective = r.finish()?;
    let spec = spec.expect("validated above");

    let mut out = Output::create(&outdir, "geometry-check", &effective)?;
    let family = spec.build();
    let fd_family = family.finite_difference();
    let [(t0, t1), (x0, x1)] = spec.probe_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Table::new(["point", "object", "component", "value", "oracle", "abs_err"]);
    let mut points = Table::new(["point", "t", "x"]);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for i in 0..n_points {
        let p = Point::new(rng.gen_range(t0..=t1), rng.gen_range(x0..=x1));
        points.push(vec![(i as i64).into(), p.t.into(), p.x.into()])?;
        let mut rows = Vec::new();
        components(&mut rows, false, &family, &family, p, TOL_ANALYTIC)?;
        if fd {
            components(&mut rows, true, &fd_family, &family, p, TOL_FD)?;
        }
        for row in rows {
            let err = (row.value - row.oracle).abs();
            let scale = row.value.abs().max(row.oracle.abs()).max(1.0);
            worst = worst.max(err / scale / row.tol);
            if !(err <= row.tol * scale) {
                failures += 1;
                eprintln!(
                    "point {i} {} {}: {} vs {}",
                    row.object, row.component, row.value, row.oracle
                );
            }
            report.push(vec![
                (i as i64).into(),
                row.object.into(),
                row.component.into(),
                row.value.into(),
                row.oracle.into(),
                err.into(),
            ])?;
        }
    }
    out.csv("geometry_check.csv", &report)?;
    out.csv("points.csv", &points)?;
    let manifest = out.finish()?;
    println!(
        "{}: {n_points} points, worst error {:.3} of tolerance, {failures} failure(s)",
        spec.name(),
        worst
    );
    println!("wrote {}", manifest.display());
    if failures > 0 {
        return Err(NumericalFailure(format!("{failures} component(s) outside tolerance")).into());
    }
    Ok(())
}
