#![allow(clippy::needless_range_loop)]

use curved_dirac::geometry::{
    self, closed_form, MetricFamily, MetricSpec, Point, ScalarFunction1D, ScalarFunction2D, ETA,
};
use proptest::prelude::*;

fn probe(spec: &MetricSpec, u: f64, v: f64) -> Point {
    let [(t0, t1), (x0, x1)] = spec.probe_box();
    Point::new(t0 + u * (t1 - t0), x0 + v * (x1 - x0))
}

fn metric_values(m: &MetricFamily, p: Point) -> [[f64; 2]; 2] {
    m.metric(p).unwrap().g
}

fn shifted(p: Point, i: usize, h: f64) -> Point {
    if i == 0 {
        Point::new(p.t + h, p.x)
    } else {
        Point::new(p.t, p.x + h)
    }
}

/// Christoffels from central differences of the metric values only.
fn fd_christoffel(m: &MetricFamily, p: Point, h: f64) -> [[[f64; 2]; 2]; 2] {
    let g = metric_values(m, p);
    let mut dg = [[[0.0; 2]; 2]; 2];
    for (r, dgr) in dg.iter_mut().enumerate() {
        let gp = metric_values(m, shifted(p, r, h));
        let gm = metric_values(m, shifted(p, r, -h));
        for a in 0..2 {
            for b in 0..2 {
                dgr[a][b] = (gp[a][b] - gm[a][b]) / (2.0 * h);
            }
        }
    }
    let ginv = [[1.0 / g[0][0], 0.0], [0.0, 1.0 / g[1][1]]];
    let mut out = [[[0.0; 2]; 2]; 2];
    for (s, os) in out.iter_mut().enumerate() {
        for mu in 0..2 {
            for nu in 0..2 {
                for r in 0..2 {
                    os[mu][nu] +=
                        0.5 * ginv[s][r] * (dg[mu][nu][r] + dg[nu][r][mu] - dg[r][mu][nu]);
                }
            }
        }
    }
    out
}

/// Ricci scalar by nested central differences, independent of the library formulas.
fn fd_ricci(m: &MetricFamily, p: Point) -> f64 {
    let (h_in, h_out) = (1e-5, 1e-3);
    let gam = fd_christoffel(m, p, h_in);
    let mut dgam = [[[[0.0; 2]; 2]; 2]; 2];
    for (l, dl) in dgam.iter_mut().enumerate() {
        let gp = fd_christoffel(m, shifted(p, l, h_out), h_in);
        let gm = fd_christoffel(m, shifted(p, l, -h_out), h_in);
        for s in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    dl[s][a][b] = (gp[s][a][b] - gm[s][a][b]) / (2.0 * h_out);
                }
            }
        }
    }
    let g = metric_values(m, p);
    let mut r = 0.0;
    for mu in 0..2 {
        let nu = mu;
        let mut ric = 0.0;
        for l in 0..2 {
            ric += dgam[l][l][mu][nu] - dgam[nu][l][mu][l];
            for s in 0..2 {
                ric += gam[l][mu][nu] * gam[s][l][s] - gam[l][mu][s] * gam[s][nu][l];
            }
        }
        r += ric / g[mu][mu];
    }
    r
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn ricci_of_quadratic_conformal_factor_matches_difference_oracle() {
    let m = MetricFamily::Conformal(ScalarFunction2D::of_time(ScalarFunction1D::polynomial(
        vec![1.0, 0.0, 1.0],
    )));
    let p = Point::new(0.0, 0.0);
    let oracle = fd_ricci(&m, p);
    assert!((oracle + 4.0).abs() < 1e-4, "oracle {oracle}");
    let r = geometry::ricci_scalar(&m, p).unwrap();
    assert!((r - oracle).abs() < 1e-4);
    assert!((r + 4.0).abs() < 1e-12);
}

#[test]
fn ricci_general_formula_matches_difference_oracle_for_catalog() {
    for spec in MetricSpec::catalog() {
        let m = spec.build();
        for (u, v) in [(0.2, 0.7), (0.5, 0.5), (0.9, 0.1)] {
            let p = probe(&spec, u, v);
            let r = geometry::ricci_scalar(&m, p).unwrap();
            let oracle = fd_ricci(&m, p);
            assert!(
                (r - oracle).abs() < 1e-4 * r.abs().max(1.0),
                "{} {r} {oracle}",
                spec.name()
            );
        }
    }
}

#[test]
fn closed_form_frw_and_static_spinor_connections() {
    // FRW: Ω_1 = (ȧ/4)[γ̃⁰, γ̃¹]
    let a = ScalarFunction1D::polynomial(vec![1.0, 0.5, 0.25]);
    let m = MetricFamily::Frw(a.clone());
    let p = Point::new(0.4, 0.0);
    let om = geometry::spinor_connection(&m, p).unwrap();
    let want = geometry::gamma_commutator().scale_re(a.d1(p.t) / 4.0);
    assert!((om.omega[1] - want).max_abs() < 1e-14);
    assert!(om.omega[0].max_abs() < 1e-14);

    // Static: Ω_0 = ¼ Φ' e^{Φ−Ψ} [γ̃⁰, γ̃¹]
    let phi = ScalarFunction1D::polynomial(vec![0.3, -0.4, 0.2]);
    let psi = ScalarFunction1D::polynomial(vec![0.1, 0.6]);
    let m = MetricFamily::Static {
        phi: phi.clone(),
        psi: psi.clone(),
    };
    let p = Point::new(0.0, 0.8);
    let om = geometry::spinor_connection(&m, p).unwrap();
    let c = 0.25 * phi.d1(p.x) * (phi.value(p.x) - psi.value(p.x)).exp();
    let want = geometry::gamma_commutator().scale_re(c);
    assert!((om.omega[0] - want).max_abs() < 1e-14);
    assert!(om.omega[1].max_abs() < 1e-14);
}

#[test]
fn rindler_conformal_is_flat() {
    let m = MetricFamily::RindlerConformal { accel: 1.7 };
    for i in 0..20 {
        let p = Point::new(-1.0 + 0.1 * i as f64, -1.0 + 0.09 * i as f64);
        assert!(geometry::ricci_scalar(&m, p).unwrap().abs() < 1e-12);
    }
}

fn check_identities(spec: &MetricSpec, m: &MetricFamily, p: Point) {
    let name = spec.name();
    let gamma = geometry::christoffel(m, p).unwrap().gamma;
    let mj = m.metric(p).unwrap();

    for l in 0..2 {
        for mu in 0..2 {
            for nu in 0..2 {
                assert_eq!(gamma[l][mu][nu], gamma[l][nu][mu], "{name} torsion");
            }
        }
    }

    // ∇_ρ g_{μν} with ∂g from differences of the metric values
    for r in 0..2 {
        let h = geometry::fd_step(p.coord(r));
        let gp = metric_values(m, shifted(p, r, h));
        let gm = metric_values(m, shifted(p, r, -h));
        for mu in 0..2 {
            for nu in 0..2 {
                let mut cov = (gp[mu][nu] - gm[mu][nu]) / (2.0 * h);
                for l in 0..2 {
                    cov -= gamma[l][r][mu] * mj.g[l][nu] + gamma[l][r][nu] * mj.g[mu][l];
                }
                assert!(cov.abs() < 1e-8, "{name} metric compatibility {cov}");
            }
        }
    }

    let vb = geometry::vielbein(m, p).unwrap();
    for a in 0..2 {
        for b in 0..2 {
            let delta: f64 = (0..2).map(|mu| vb.e[a][mu] * vb.e_inv[mu][b]).sum();
            assert!(
                (delta - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12,
                "{name} inverse"
            );
            let mut eta = 0.0;
            for mu in 0..2 {
                for nu in 0..2 {
                    eta += vb.e_inv[mu][a] * vb.e_inv[nu][b] * mj.g[mu][nu];
                }
            }
            let want = if a == b { ETA[a] } else { 0.0 };
            assert!((eta - want).abs() < 1e-10, "{name} orthonormality");
        }
    }

    let sc = geometry::spin_connection(m, p).unwrap();
    let low = sc.lowered();
    for a in 0..2 {
        for b in 0..2 {
            for n in 0..2 {
                assert!(
                    (low[a][b][n] + low[b][a][n]).abs() < 1e-10,
                    "{name} antisymmetry"
                );
            }
        }
    }

    // ∇_ν e^μ_a = ∂_ν e^μ_a + Γ^μ_{νλ} e^λ_a − ω^b_{aν} e^μ_b
    for n in 0..2 {
        let h = geometry::fd_step(p.coord(n));
        let ep = geometry::vielbein(m, shifted(p, n, h)).unwrap().e_inv;
        let em = geometry::vielbein(m, shifted(p, n, -h)).unwrap().e_inv;
        for mu in 0..2 {
            for a in 0..2 {
                let mut cov = (ep[mu][a] - em[mu][a]) / (2.0 * h);
                for l in 0..2 {
                    cov += gamma[mu][n][l] * vb.e_inv[l][a];
                }
                for b in 0..2 {
                    cov -= sc.omega[b][a][n] * vb.e_inv[mu][b];
                }
                assert!(
                    cov.abs() < 1e-8,
                    "{name} vielbein covariant derivative {cov}"
                );
            }
        }
    }
}

fn check_closed_forms(
    name: &str,
    general: &MetricFamily,
    reference: &MetricFamily,
    p: Point,
    tol: f64,
) {
    let g = geometry::christoffel(general, p).unwrap().gamma;
    let gc = closed_form::christoffel(reference, p).unwrap().gamma;
    let v = geometry::vielbein(general, p).unwrap();
    let vc = closed_form::vielbein(reference, p).unwrap();
    let w = geometry::spin_connection(general, p).unwrap().omega;
    let wc = closed_form::spin_connection(reference, p).unwrap().omega;
    for i in 0..2 {
        for j in 0..2 {
            assert!(
                rel_close(v.e_inv[i][j], vc.e_inv[i][j], tol),
                "{name} e_inv"
            );
            assert!(rel_close(v.e[i][j], vc.e[i][j], tol), "{name} e");
            for k in 0..2 {
                assert!(
                    rel_close(g[i][j][k], gc[i][j][k], tol),
                    "{name} Γ {i}{j}{k}: {} vs {}",
                    g[i][j][k],
                    gc[i][j][k]
                );
                assert!(
                    rel_close(w[i][j][k], wc[i][j][k], tol),
                    "{name} ω {i}{j}{k}"
                );
            }
        }
    }
    let s = geometry::spinor_connection(general, p).unwrap().omega;
    let sc = closed_form::spinor_connection(reference, p).unwrap().omega;
    for n in 0..2 {
        let scale = sc[n].max_abs().max(1.0);
        assert!(
            (s[n] - sc[n]).max_abs() <= tol * scale,
            "{name} spinor connection"
        );
    }
    let r = geometry::ricci_scalar(general, p).unwrap();
    let rc = closed_form::ricci_scalar(reference, p).unwrap();
    assert!(rel_close(r, rc, tol.max(1e-6)), "{name} Ricci {r} vs {rc}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn general_formulas_satisfy_identities(idx in 0usize..9, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let spec = &MetricSpec::catalog()[idx];
        let m = spec.build();
        check_identities(spec, &m, probe(spec, u, v));
    }

    #[test]
    fn general_formulas_match_closed_forms(idx in 0usize..9, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let spec = &MetricSpec::catalog()[idx];
        let m = spec.build();
        let p = probe(spec, u, v);
        check_closed_forms(spec.name(), &m, &m, p, 1e-8);
        // difference fallback against the analytic closed forms
        let fd = m.finite_difference();
        check_closed_forms(spec.name(), &fd, &m, p, 1e-5);
    }
}
