use std::f64::consts::PI;

use fbse_core::degeneracy::{
    jordan_special_case, multiplicities_at_zero, multiset_distance, obc_ep_scan, random_rational_params, rotate_spectrum,
    EigenBlock, ZERO_CLUSTER_TOL,
};
use fbse_core::exact::{exact_null_dim, RationalParams};
use fbse_core::flatband::{builtin_mode_basis, mode_basis, NULL_TOL};
use fbse_core::linalg::{self, C64};
use fbse_core::model::{obc_hamiltonian, ParamSet};
use fbse_core::nonbloch::{
    ep3_gamma2_window, ep3_locations, gbz_dispersive, quantum_distance, skin_decay_ratio, DistanceKind,
};
use fbse_core::response::{chi, chi_map, green_response, max_green_scaling, GreenMethod, GreenProbe};
use fbse_core::spectra::{eig_general, lex_cmp, pbc_bands, region_classify, Region};
use fbse_core::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, Method, RunConfig};
use crate::output::{num, Csv};

pub struct Outcome {
    pub files: Vec<Csv>,
    pub summary: Vec<String>,
}

fn params_meta(p: &ParamSet) -> (&'static str, String) {
    (
        "params",
        format!("t1={} t2={} gamma1={} gamma2={}", p.t1, p.t2, p.gamma1, p.gamma2),
    )
}

fn probe(cfg: &RunConfig) -> GreenProbe {
    GreenProbe {
        energy: C64::new(0.0, cfg.eta),
        source_site: cfg.source_site,
        method: match cfg.method {
            Method::Direct => GreenMethod::Direct,
            Method::Projector => GreenMethod::Projector,
        },
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.command {
        Command::Spectrum => spectrum(cfg),
        Command::PhaseMap => phase_map(cfg),
        Command::Response => response(cfg),
        Command::Scaling => scaling(cfg),
        Command::Modes => modes(cfg),
        Command::Gbz => gbz(cfg),
        Command::EpScan => ep_scan(cfg),
        Command::Qdist => qdist(cfg),
        Command::Transform => transform(cfg),
        Command::EmitModel => emit_model(cfg),
        Command::JordanLocus => jordan(cfg),
        Command::Multiplicity => multiplicity(cfg),
    }
}

fn spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.model_spec()?;
    let p = cfg.param_set()?;
    let bands = pbc_bands(&spec, &p, cfg.kpoints)?;
    let h = obc_hamiltonian(&spec, &p, cfg.cells)?;
    let obc = eig_general(&h, false)?;
    let mut csv = Csv::new(
        "spectrum.csv",
        &[params_meta(&p), ("cells", cfg.cells.to_string()), ("band_id", "-1 for open-chain values".into())],
        &["source", "k_or_index", "re_E", "im_E", "band_id"],
    );
    for (b, band) in bands.bands.iter().enumerate() {
        for (k, e) in bands.ks.iter().zip(band) {
            csv.row(&["pbc".into(), num(*k), num(e.re), num(e.im), b.to_string()]);
        }
    }
    for (i, e) in obc.values.iter().enumerate() {
        csv.row(&["obc".into(), i.to_string(), num(e.re), num(e.im), "-1".into()]);
    }
    let max_im = obc.values.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
    let mut summary = vec![format!("open-chain max |Im E| = {max_im:.3e}")];
    if cfg.is_builtin() {
        summary.insert(0, format!("region: {}", region_classify(&p).region));
    }
    Ok(Outcome {
        files: vec![csv],
        summary,
    })
}

fn phase_map(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.model_spec()?;
    let p = cfg.param_set()?;
    let grid = cfg.grid.ok_or_else(|| Error::Config("phase-map needs --grid".into()))?;
    let map = chi_map(&spec, &p, &grid.gamma1.values(), &grid.gamma2.values(), cfg.cells, &probe(cfg))?;
    let mut csv = Csv::new(
        "chi_map.csv",
        &[params_meta(&p), ("cells", cfg.cells.to_string()), ("eta", num(cfg.eta))],
        &["gamma1", "gamma2", "chi"],
    );
    let mut sums = [(0.0, 0usize); 3];
    for (i, g1) in map.gamma1.iter().enumerate() {
        for (j, g2) in map.gamma2.iter().enumerate() {
            let x = map.chi[i][j];
            csv.row(&[num(*g1), num(*g2), num(x)]);
            if cfg.is_builtin() && x.is_finite() {
                let slot = match region_classify(&p.with_gammas(*g1, *g2)).region {
                    Region::I => 0,
                    Region::II => 1,
                    Region::III => 2,
                    Region::Boundary => continue,
                };
                sums[slot].0 += x;
                sums[slot].1 += 1;
            }
        }
    }
    let mut bcsv = Csv::new("boundaries.csv", &[("curve", "gamma1^2 + gamma2^2 = threshold".into())], &["curve", "gamma1", "gamma2"]);
    for (c, curve) in map.boundaries.iter().enumerate() {
        for (a, b) in curve {
            bcsv.row(&[c.to_string(), num(*a), num(*b)]);
        }
    }
    let nan = map.chi.iter().flatten().filter(|x| x.is_nan()).count();
    let mut summary = vec![format!("failed cells: {nan}")];
    if cfg.is_builtin() {
        for (name, (s, n)) in ["I", "II", "III"].iter().zip(sums) {
            if n > 0 {
                summary.push(format!("region {name}: mean chi = {:.4} over {n} cells", s / n as f64));
            }
        }
    }
    Ok(Outcome {
        files: vec![csv, bcsv],
        summary,
    })
}

fn response(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.model_spec()?;
    let p = cfg.param_set()?;
    let h = obc_hamiltonian(&spec, &p, cfg.cells)?;
    let r = green_response(&h, &probe(cfg))?;
    let x = chi(&r)?;
    let mut csv = Csv::new(
        "response.csv",
        &[params_meta(&p), ("source_site", cfg.source_site.to_string()), ("chi", num(x))],
        &["site", "abs_R"],
    );
    for (n, v) in r.iter().enumerate() {
        csv.row(&[(n + 1).to_string(), num(v.norm())]);
    }
    Ok(Outcome {
        files: vec![csv],
        summary: vec![format!("chi = {x:.6}")],
    })
}

fn scaling(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.model_spec()?;
    let p = cfg.param_set()?;
    let s = max_green_scaling(&spec, &p, &cfg.sizes, cfg.eta)?;
    let mut csv = Csv::new(
        "green_scaling.csv",
        &[
            params_meta(&p),
            ("eta", num(cfg.eta)),
            ("slope", num(s.fit.slope)),
            ("r_squared", num(s.fit.r_squared)),
        ],
        &["N", "log_max_G"],
    );
    for (n, y) in s.cells.iter().zip(&s.log_max_g) {
        csv.row(&[n.to_string(), num(*y)]);
    }
    Ok(Outcome {
        files: vec![csv],
        summary: vec![format!("slope = {:.6}, R^2 = {:.6}", s.fit.slope, s.fit.r_squared)],
    })
}

fn modes(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.model_spec()?;
    let p = cfg.param_set()?;
    let basis = if cfg.is_builtin() {
        builtin_mode_basis(&p, cfg.cells)?
    } else {
        let h = obc_hamiltonian(&spec, &p, cfg.cells)?;
        let k = linalg::null_space(&h, NULL_TOL)?.ncols();
        mode_basis(&h, k, NULL_TOL)?
    };
    let mut csv = Csv::new("modes.csv", &[params_meta(&p), ("cells", cfg.cells.to_string())], &["mode_index", "site", "abs_rev", "abs_lev"]);
    for m in 0..basis.len() {
        for s in 0..basis.revs.nrows() {
            csv.row(&[m.to_string(), (s + 1).to_string(), num(basis.revs[(s, m)].norm()), num(basis.levs[(s, m)].norm())]);
        }
    }
    let mut summary = vec![format!("{} flat-band modes", basis.len())];
    for (m, (r, l)) in basis.rev_reports.iter().zip(&basis.lev_reports).enumerate() {
        summary.push(format!(
            "mode {m}: rev com {:.2} pr {:.2}; lev com {:.2} max {:.3e}",
            r.center_of_mass, r.participation_ratio, l.center_of_mass, l.max_abs
        ));
    }
    Ok(Outcome {
        files: vec![csv],
        summary,
    })
}

fn gbz(cfg: &RunConfig) -> Result<Outcome> {
    cfg.require_builtin()?;
    let p = cfg.param_set()?;
    let g = gbz_dispersive(&p, cfg.cells)?;
    let ratio = skin_decay_ratio(&p, cfg.cells)?;
    let excluded = g.samples.iter().filter(|s| !s.matched).count();
    let mut csv = Csv::new(
        "gbz.csv",
        &[
            params_meta(&p),
            ("radius", num(g.radius)),
            ("reciprocal", num(g.reciprocal)),
            ("flat_band", "all of the complex beta plane".into()),
            ("excluded_samples", excluded.to_string()),
        ],
        &["re_beta", "im_beta", "re_E", "im_E"],
    );
    for s in g.samples.iter().filter(|s| s.matched) {
        for b in [s.beta1, s.beta2] {
            csv.row(&[num(b.re), num(b.im), num(s.energy.re), num(s.energy.im)]);
        }
    }
    Ok(Outcome {
        files: vec![csv],
        summary: vec![
            format!("GBZ radius = {:.6} (reciprocal {:.6})", g.radius, g.reciprocal),
            format!("open-chain skin growth per cell = {ratio:.6}"),
        ],
    })
}

fn ep_scan(cfg: &RunConfig) -> Result<Outcome> {
    cfg.require_builtin()?;
    let p = cfg.param_set()?;
    let grid = cfg.grid.ok_or_else(|| Error::Config("ep-scan needs --grid".into()))?;
    let (g1s, g2s) = (grid.gamma1.values(), grid.gamma2.values());
    let scan = obc_ep_scan(&p, &g1s, &g2s, cfg.cells)?;
    let mut curves = Csv::new(
        "ep_curves.csv",
        &[params_meta(&p), ("cells", cfg.cells.to_string()), ("loci", scan.loci.len().to_string())],
        &["gamma1", "gamma2", "min_abs_E", "is_ep"],
    );
    for c in &scan.cells {
        curves.row(&[num(c.gamma1), num(c.gamma2), num(c.min_abs_e), (c.is_ep as u8).to_string()]);
    }
    let mut ep3 = Csv::new("ep3.csv", &[params_meta(&p)], &["gamma1", "gamma2", "re_beta", "im_beta", "order"]);
    let mut summary = vec![format!("open-chain EP loci: {}, unresolved: {}", scan.loci.len(), scan.unresolved.len())];
    for &g1 in &g1s {
        let mut present = Vec::new();
        for &g2 in &g2s {
            let recs = ep3_locations(&p.with_gammas(g1, g2))?;
            for r in &recs {
                ep3.row(&[num(g1), num(g2), num(r.beta.re), num(r.beta.im), r.order.to_string()]);
            }
            if recs.iter().any(|r| r.order == 3 && r.on_gbz) {
                present.push(g2);
            }
        }
        let analytic = ep3_gamma2_window(p.t1, p.t2, g1)
            .map_or("none".to_string(), |(a, b)| format!("({a:.5}, {b:.5})"));
        match (present.first(), present.last()) {
            (Some(a), Some(b)) => summary.push(format!("gamma1 = {g1}: EP3 for gamma2 in [{a:.5}, {b:.5}], analytic {analytic}")),
            _ => summary.push(format!("gamma1 = {g1}: no EP3 on the grid, analytic {analytic}")),
        }
    }
    Ok(Outcome {
        files: vec![curves, ep3],
        summary,
    })
}

fn qdist(cfg: &RunConfig) -> Result<Outcome> {
    cfg.require_builtin()?;
    let p = cfg.param_set()?;
    let eps = ep3_locations(&p)?;
    let ep = eps
        .iter()
        .filter(|r| r.order == 3)
        .max_by(|a, b| a.beta.im.total_cmp(&b.beta.im))
        .ok_or_else(|| Error::Precondition("no EP3 on the GBZ at these parameters".into()))?;
    let dt = 2.0 * PI / cfg.dtheta_points as f64;
    let mut csv = Csv::new(
        "qdist.csv",
        &[params_meta(&p), ("beta_ep", format!("{}", ep.beta))],
        &["kind", "delta_beta", "theta", "dtheta", "value"],
    );
    let mut summary = vec![format!("EP3 at beta = {:.6}", ep.beta)];
    for &db in &cfg.delta_beta {
        for kind in [DistanceKind::LR, DistanceKind::RR] {
            let mut vals = Vec::new();
            for j in 0..cfg.dtheta_points {
                let v = quantum_distance(&p, ep.beta, db, 0.0, j as f64 * dt, kind)?;
                csv.row(&[kind.to_string(), num(db), num(0.0), num(j as f64 * dt), num(v)]);
                vals.push(v);
            }
            if kind == DistanceKind::LR {
                let max = vals.iter().cloned().fold(f64::MIN, f64::max);
                let min = vals[1..].iter().cloned().fold(f64::MAX, f64::min);
                summary.push(format!("delta_beta {db:e}: d_LR over dtheta in [{min:.4}, {max:.4}]"));
            }
        }
        // isotropy of d_RR: rotate the pair at a fixed opening angle
        let mut rr = Vec::new();
        for j in 0..cfg.dtheta_points {
            let v = quantum_distance(&p, ep.beta, db, j as f64 * dt, PI / 2.0, DistanceKind::RR)?;
            csv.row(&["RR".into(), num(db), num(j as f64 * dt), num(PI / 2.0), num(v)]);
            rr.push(v);
        }
        let mean = rr.iter().sum::<f64>() / rr.len() as f64;
        let spread = rr.iter().cloned().fold(f64::MIN, f64::max) - rr.iter().cloned().fold(f64::MAX, f64::min);
        summary.push(format!("delta_beta {db:e}: d_RR mean {mean:.3e}, relative spread over theta {:.3e}", spread / mean));
    }
    Ok(Outcome {
        files: vec![csv],
        summary,
    })
}

fn transform(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.model_spec()?;
    let p = cfg.param_set()?;
    let h = obc_hamiltonian(&spec, &p, cfg.cells)?;
    let chain = rotate_spectrum(&h)?;
    let mut e: Vec<C64> = linalg::eigenvalues(&h)?;
    e.sort_by(lex_cmp);
    let rotated: Vec<C64> = e.iter().map(|x| x * C64::new(0.0, 1.0)).collect();
    let e3 = linalg::eigenvalues(&chain.h3)?;
    let dev = multiset_distance(&e3, &rotated);
    let mut csv = Csv::new(
        "transform.csv",
        &[params_meta(&p), ("cells", cfg.cells.to_string()), ("max_deviation", num(dev))],
        &["index", "re_E", "im_E", "re_E3", "im_E3"],
    );
    let mut used = vec![false; e3.len()];
    for (i, (x, r)) in e.iter().zip(&rotated).enumerate() {
        let k = (0..e3.len())
            .filter(|k| !used[*k])
            .min_by(|a, b| (e3[*a] - r).norm().total_cmp(&(e3[*b] - r).norm()))
            .unwrap();
        used[k] = true;
        csv.row(&[i.to_string(), num(x.re), num(x.im), num(e3[k].re), num(e3[k].im)]);
    }
    Ok(Outcome {
        files: vec![csv],
        summary: vec![format!("max |eig(H3) - i eig(H_OBC)| = {dev:.3e}")],
    })
}

fn emit_model(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.model_spec()?;
    Ok(Outcome {
        files: vec![Csv::raw("model.json", spec.to_json() + "\n")],
        summary: vec![format!("{} bands, {} parameters", spec.bands, spec.params.len())],
    })
}

fn exact_params(p: &ParamSet) -> Result<RationalParams> {
    RationalParams::from_f64(p.t1, p.t2, p.gamma1, p.gamma2)
}

fn block_row(name: &str, b: &EigenBlock) -> Vec<String> {
    let dims: Vec<String> = b.kernel_dims.iter().map(|d| d.to_string()).collect();
    vec![name.into(), b.eigenvalue.to_string(), b.algebraic.to_string(), b.geometric.to_string(), dims.join(";")]
}

fn jordan(cfg: &RunConfig) -> Result<Outcome> {
    cfg.require_builtin()?;
    let p = cfg.param_set()?;
    let r = jordan_special_case(&exact_params(&p)?, cfg.cells)?;
    let mut csv = Csv::new(
        "jordan.csv",
        &[params_meta(&p), ("cells", cfg.cells.to_string())],
        &["block", "eigenvalue", "algebraic", "geometric", "kernel_dims"],
    );
    csv.row(&block_row("zero", &r.zero));
    csv.row(&block_row("plus", &r.plus));
    csv.row(&block_row("minus", &r.minus));
    Ok(Outcome {
        files: vec![csv],
        summary: vec![
            format!("zero: algebraic {} geometric {}", r.zero.algebraic, r.zero.geometric),
            format!("+t2: algebraic {} geometric {}", r.plus.algebraic, r.plus.geometric),
            format!("-t2: algebraic {} geometric {}", r.minus.algebraic, r.minus.geometric),
        ],
    })
}

fn multiplicity(cfg: &RunConfig) -> Result<Outcome> {
    cfg.require_builtin()?;
    let p = cfg.param_set()?;
    let spec = cfg.model_spec()?;
    let mut csv = Csv::new(
        "multiplicity.csv",
        &[("cells", cfg.cells.to_string()), ("seed", cfg.seed.to_string()), ("tol", num(ZERO_CLUSTER_TOL))],
        &["t1", "t2", "gamma1", "gamma2", "algebraic_zero", "geometric_zero", "is_ep", "exact_null_dim"],
    );
    let mut summary = Vec::new();
    let mut points = vec![p.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.draws {
        let [t1, t2, g1, g2] = random_rational_params(&mut rng).to_f64();
        points.push(ParamSet::new(t1, t2, g1, g2));
    }
    let mut mismatches = 0;
    for (i, q) in points.iter().enumerate() {
        let h = obc_hamiltonian(&spec, q, cfg.cells)?;
        let rep = multiplicities_at_zero(&h, 3, ZERO_CLUSTER_TOL)?;
        let exact = exact_null_dim(&exact_params(q)?, cfg.cells)?;
        if exact != rep.geometric_zero {
            mismatches += 1;
        }
        if i == 0 {
            summary.push(format!(
                "algebraic {} geometric {} exact {} ep {}",
                rep.algebraic_zero, rep.geometric_zero, exact, rep.is_ep
            ));
            if let Some(w) = &rep.warning {
                summary.push(format!("warning: {w}"));
            }
        }
        csv.row(&[
            num(q.t1),
            num(q.t2),
            num(q.gamma1),
            num(q.gamma2),
            rep.algebraic_zero.to_string(),
            rep.geometric_zero.to_string(),
            (rep.is_ep as u8).to_string(),
            exact.to_string(),
        ]);
    }
    if cfg.draws > 0 {
        summary.push(format!("{} random draws, exact/numeric mismatches: {mismatches}", cfg.draws));
    }
    Ok(Outcome {
        files: vec![csv],
        summary,
    })
}
