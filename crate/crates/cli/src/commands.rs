//! One function per command. Each returns its checks, a JSON summary and
//! the artifacts to write.

use std::f64::consts::{SQRT_2, TAU};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use spectral_contour::acceptance::run_all;
use spectral_contour::calculus::{
    gamma_apply, nrange_inclusion, nrange_support, sym_calculus_analytic, sym_calculus_apply, CalculusError,
    MatrixOperand,
};
use spectral_contour::cauchy::{cauchy_interior, plemelj_residuals, BoundarySamples, Generator, Poly};
use spectral_contour::contour::{make_contour, winding_number, Contour, CurveFamily};
use spectral_contour::dlayer::{
    analytic_image, convexity_report, dl_evaluate, interior_inverse_norm, jump_residual, np_matrix, Domain, Region,
};
use spectral_contour::extremal::{analytic_config_lower, search_extremal, write_trace_csv};
use spectral_contour::linalg::{hermitian_eigen, inner, CMatrix, HermitianMatrix};
use spectral_contour::mapping::{
    normalize_unit_ball, run_ensemble, teardrop_support, write_ensemble_csv, EnsembleConfig, TrialRow, KERNEL_TOL,
};
use spectral_contour::report::Check;
use spectral_contour::smoothing::{
    build_domains, distance_field, nesting_report, spectral_stability, write_field_csv, Grid, PointSet, SmoothingParams,
};

use crate::output::{float_csv, Artifact};
use crate::scene::Scene;
use crate::Command;

pub struct Outcome {
    pub checks: Vec<Check>,
    pub summary: serde_json::Value,
    pub artifacts: Vec<Artifact>,
}

type Run = Result<Outcome, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Dispatches `cmd`; the scene must already satisfy `Scene::require`.
pub fn run_command(cmd: Command, scene: &Scene, csv: bool) -> Run {
    match cmd {
        Command::Convexity => convexity(scene, csv),
        Command::Transforms => transforms(scene, csv),
        Command::Calculus => calculus(scene, csv),
        Command::Mapping => mapping(scene, csv),
        Command::Extremal => extremal(scene, csv),
        Command::Smooth => smooth(scene, csv),
        Command::Selftest => selftest(scene),
    }
}

fn scene_contour(scene: &Scene) -> Result<Contour, String> {
    let spec = scene.contour_spec().ok_or("scene has no contour")?;
    make_contour(&spec).map_err(err)
}

fn scene_matrix(scene: &Scene) -> Result<CMatrix, String> {
    scene.matrix().ok_or_else(|| "scene has no valid matrix".to_string())
}

fn scene_functions(scene: &Scene) -> Vec<Poly> {
    if scene.functions.is_empty() {
        let c = |re, im| Complex64::new(re, im);
        return vec![Poly::new(vec![c(0.0, 0.25), c(-0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])];
    }
    scene
        .functions
        .iter()
        .map(|f| Poly::centered(f.center.unwrap_or_default(), f.coeffs.clone()))
        .collect()
}

fn nodes_csv(c: &Contour) -> Vec<u8> {
    float_csv(
        &["t", "x", "y", "normal_x", "normal_y", "curvature", "weight"],
        (0..c.len()).map(|j| {
            let (p, n) = (c.points[j], c.normals[j]);
            vec![c.param(j), p.re, p.im, n.re, n.im, c.curvature[j], c.weights[j]]
        }),
    )
}

fn convexity(scene: &Scene, csv: bool) -> Run {
    let t = &scene.tolerances;
    let c = scene_contour(scene)?;
    let r = convexity_report(&c).map_err(err)?;
    let doubled = convexity_report(&c.resampled(2 * c.len())).map_err(err)?;
    let mut checks = vec![Check::flag("kernel, norm and curvature verdicts agree", true)];
    if r.is_convex {
        checks.push(Check::near("|np_norm - 1|", r.np_norm, 1.0, t.np_norm));
        checks.push(Check::ge("min_kernel", r.min_kernel, -t.min_kernel));
    } else {
        checks.push(Check::ge("np_norm", r.np_norm, 1.0 + t.np_norm));
        checks.push(Check::le("min_kernel", r.min_kernel, -t.min_kernel));
    }
    checks.push(Check::flag("verdict stable under N doubling", r.is_convex == doubled.is_convex));
    let one = BoundarySamples::constant(&c, Complex64::new(1.0, 0.0));
    let mut dev = 0.0f64;
    for i in 0..c.len() {
        dev = dev.max((dl_evaluate(&c, &one, Region::Boundary(i)).map_err(err)? - 1.0).norm());
    }
    let g = c.centroid();
    if winding_number(&c, g) == Ok(1) {
        dev = dev.max((dl_evaluate(&c, &one, Region::Interior(g)).map_err(err)? - 2.0).norm());
    }
    checks.push(Check::le("partition of unity: max |P(1) - 2/1|", dev, t.partition));
    let summary = json!({
        "is_convex": r.is_convex,
        "np_norm": r.np_norm,
        "min_kernel": r.min_kernel,
        "min_curvature": r.min_curvature,
        "np_norm_doubled": doubled.np_norm,
        "area": c.area(),
        "length": c.length(),
        "diameter": c.diameter(),
    });
    let mut artifacts = Vec::new();
    if csv {
        artifacts.push(Artifact::new("contour_nodes.csv", nodes_csv(&c)));
        let mut buf = Vec::new();
        np_matrix(&c).write_csv(&mut buf).map_err(err)?;
        artifacts.push(Artifact::new("np_matrix.csv", buf));
    }
    Ok(Outcome { checks, summary, artifacts })
}

fn transforms(scene: &Scene, csv: bool) -> Run {
    let t = &scene.tolerances;
    let c = scene_contour(scene)?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut per_function = Vec::new();
    for (k, p) in scene_functions(scene).into_iter().enumerate() {
        let f = BoundarySamples::from_generator(&c, &Generator::Polynomial(p.clone()));
        let r = plemelj_residuals(&c, &f);
        let jump = jump_residual(&c, &f);
        let image = analytic_image(&c, &f).map_err(err)?;
        checks.push(Check::le(format!("f{k}: max Plemelj residual"), r.max(), t.plemelj));
        checks.push(Check::le(format!("f{k}: double-layer jump residual"), jump, t.plemelj));
        if let Some(disk) = image.disk_residual {
            checks.push(Check::le(format!("f{k}: max |K(f) - f(center)|"), disk, t.disk_collapse));
        }
        per_function.push(json!({
            "jump_err": r.jump_err,
            "interior_err": r.interior_err,
            "exterior_err": r.exterior_err,
            "dl_jump": jump,
            "antianalytic_residual": image.antianalytic_residual,
            "disk_residual": image.disk_residual,
        }));
        rows.push(vec![k as f64, r.jump_err, r.interior_err, r.exterior_err, jump]);
    }
    let mut artifacts = Vec::new();
    if csv {
        artifacts.push(Artifact::new(
            "residuals.csv",
            float_csv(&["function", "jump_err", "interior_err", "exterior_err", "dl_jump"], rows),
        ));
        artifacts.push(Artifact::new("contour_nodes.csv", nodes_csv(&c)));
    }
    Ok(Outcome { checks, summary: json!({ "functions": per_function }), artifacts })
}

/// Boundary of `W(A)`: support value and touching point per angle.
fn nrange_sweep(a: &CMatrix, angles: usize) -> Result<Vec<Vec<f64>>, String> {
    (0..angles)
        .map(|k| {
            let th = TAU * k as f64 / angles as f64;
            let rot = a.scale(Complex64::from_polar(1.0, -th));
            let h = HermitianMatrix::new(rot.hermitian_part().into_matrix()).map_err(err)?;
            let e = hermitian_eigen(&h).map_err(err)?;
            let top = e.values.len() - 1;
            let x = e.vector(top);
            let z = inner(&a.matvec(&x), &x);
            Ok(vec![th, e.values[top], z.re, z.im])
        })
        .collect()
}

fn calculus(scene: &Scene, csv: bool) -> Run {
    let t = &scene.tolerances;
    let c = scene_contour(scene)?;
    let a = scene_matrix(scene)?;
    let domain = Domain::new(c.clone()).map_err(err)?;
    let op = MatrixOperand::new(a.clone(), &c).map_err(err)?;
    let one = BoundarySamples::constant(&c, Complex64::new(1.0, 0.0));
    let mass = sym_calculus_apply(&op, &one).map_err(err)?;
    let two = CMatrix::identity(op.dim()).scale(Complex64::new(2.0, 0.0));
    let mut checks = vec![Check::le("||P(1) - 2I||_F", (&mass - &two).norm_fro(), t.total_mass)];
    let mut inclusion = serde_json::Value::Null;
    if domain.is_convex() {
        let r = nrange_inclusion(&op).map_err(err)?;
        checks.push(Check::flag("kernel and support inclusion verdicts agree", true));
        if r.included {
            checks.push(Check::near("|sym_norm_at_one - 2|", r.sym_norm_at_one, 2.0, t.sym_norm));
        }
        inclusion = serde_json::to_value(r).map_err(err)?;
    }
    for (k, p) in scene_functions(scene).into_iter().enumerate() {
        let f = BoundarySamples::from_generator(&c, &Generator::Polynomial(p));
        let kf = domain.k_apply(&f);
        let mismatch = match sym_calculus_analytic(&op, &f, &kf) {
            Ok((_, m)) | Err(CalculusError::DecompositionMismatch(m)) => m,
            Err(e) => return Err(e.to_string()),
        };
        checks.push(Check::le(format!("f{k}: decomposition mismatch"), mismatch, t.decomposition));
    }
    let summary = json!({
        "dim": op.dim(),
        "inside_count": op.inside_count(),
        "convex_domain": domain.is_convex(),
        "inclusion": inclusion,
    });
    let mut artifacts = Vec::new();
    if csv {
        artifacts.push(Artifact::new("nrange_sweep.csv", float_csv(&["theta", "support", "x", "y"], nrange_sweep(&a, 360)?)));
    }
    Ok(Outcome { checks, summary, artifacts })
}

fn mapping(scene: &Scene, csv: bool) -> Run {
    let t = &scene.tolerances;
    let c = scene_contour(scene)?;
    let domain = Domain::new(c.clone()).map_err(err)?;
    let e = scene.ensemble.as_ref().ok_or("scene has no ensemble")?;
    let cfg = EnsembleConfig {
        trials: e.trials,
        min_dim: e.min_dim,
        max_dim: e.max_dim,
        degree: e.degree,
        seed: scene.seed.ok_or("mapping needs a seed")?,
        vanish_at_center: e.vanish_at_center,
    };
    let results = run_ensemble(&domain, &cfg);
    let errors: Vec<String> = results.iter().filter_map(|r| r.as_ref().err().map(|e| e.to_string())).collect();
    let rows: Vec<TrialRow> = results.into_iter().filter_map(Result::ok).collect();
    let mut checks = vec![Check::le("trials that raised an error", errors.len() as f64, 0.0)];
    let kernel: Vec<&TrialRow> = rows.iter().filter(|r| r.kernel_residual <= KERNEL_TOL).collect();
    if !kernel.is_empty() {
        let max = |f: fn(&TrialRow) -> f64| kernel.iter().map(|r| f(r)).fold(0.0, f64::max);
        checks.push(Check::le("K(f)=0 trials: max numerical radius", max(|r| r.numerical_radius), 1.0 + t.mapping));
        checks.push(Check::le("K(f)=0 trials: max ||gamma(f)||", max(|r| r.okubo_norm), 2.0 + t.mapping));
    }
    let min = |f: fn(&TrialRow) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
    if rows.iter().any(|r| r.teardrop_slack.is_some()) {
        checks.push(Check::ge("min teardrop slack", min(|r| r.teardrop_slack.unwrap_or(f64::INFINITY)), -t.mapping));
    }
    checks.push(Check::ge("min crouzeix07 slack", min(|r| r.crouzeix07_slack), -t.mapping));
    checks.push(Check::ge("min rs18 slack", min(|r| r.rs18_slack), -t.mapping));
    let inv = interior_inverse_norm(&c).map_err(err)?;
    checks.push(Check::le("||(I + K)^-1|| vs a-priori bound", inv.inv_norm, inv.delyon_bound));
    let summary = json!({
        "trials": rows.len(),
        "kernel_trials": kernel.len(),
        "errors": errors,
        "inverse_norm": inv.inv_norm,
        "delyon_bound": inv.delyon_bound,
    });
    let mut artifacts = Vec::new();
    if csv {
        let mut buf = Vec::new();
        write_ensemble_csv(&rows, &mut buf).map_err(err)?;
        artifacts.push(Artifact::new("ensemble.csv", buf));
        if let (Some(a), Some((center, _))) = (scene.matrix(), c.as_circle()) {
            let op = MatrixOperand::new(a, &c).map_err(err)?;
            let p = scene_functions(scene).remove(0);
            let f = normalize_unit_ball(&c, &p).map_err(err)?;
            let g = gamma_apply(&op, &f).map_err(err)?;
            let a0 = cauchy_interior(&c, &f, center).map_err(err)?;
            let rows: Result<Vec<Vec<f64>>, String> = (0..360)
                .map(|k| {
                    let th = TAU * k as f64 / 360.0;
                    Ok(vec![th, teardrop_support(a0, th), nrange_support(&g, th).map_err(err)?])
                })
                .collect();
            artifacts.push(Artifact::new("teardrop.csv", float_csv(&["theta", "teardrop_support", "nrange_support"], rows?)));
        }
    }
    Ok(Outcome { checks, summary, artifacts })
}

fn extremal(scene: &Scene, csv: bool) -> Run {
    let t = &scene.tolerances;
    let c = scene_contour(scene)?;
    let domain = Domain::new(c.clone()).map_err(err)?;
    let op = MatrixOperand::new(scene_matrix(scene)?, &c).map_err(err)?;
    let block = scene.extremal.as_ref().ok_or("scene has no extremal block")?;
    let seed = scene.seed.ok_or("extremal needs a seed")?;
    let r = search_extremal(&domain, &op, block.degree, block.restarts, seed).map_err(err)?;
    let slack_cp = 1.0 + SQRT_2 - r.gamma_lb;
    let mut checks = vec![
        Check::ge("1 + sqrt(1 - rho) - gamma_lb", r.bound - r.gamma_lb, -t.extremal_bound),
        Check::ge("1 + sqrt(2) - gamma_lb", slack_cp, -t.extremal_bound),
        Check::le("|rho| - np_norm", r.rho.abs() - r.np_norm, t.extremal_bound),
    ];
    if r.disk {
        checks.push(Check::ge("2 - gamma_lb", 2.0 - r.gamma_lb, -t.extremal_bound));
    }
    let mut config = None;
    if block.config_samples > 0 {
        let a = analytic_config_lower(&domain, block.degree.max(1), block.config_samples, seed);
        checks.push(Check::le("analytic configuration estimate", a, 1.0 - f64::EPSILON));
        config = Some(a);
    }
    let summary = json!({
        "gamma_lb": r.gamma_lb,
        "rho": r.rho,
        "bound": r.bound,
        "slack_cp": slack_cp,
        "pairing": r.pairing,
        "stalled": r.stalled,
        "np_norm": r.np_norm,
        "center": r.center,
        "coeffs": r.coeffs,
        "x0": r.x0,
        "analytic_config": config,
    });
    let mut artifacts = Vec::new();
    if csv {
        let mut buf = Vec::new();
        write_trace_csv(&r.trace, &mut buf).map_err(err)?;
        artifacts.push(Artifact::new("trace.csv", buf));
    }
    Ok(Outcome { checks, summary, artifacts })
}

/// A contour as a scene fragment.
#[derive(Serialize)]
struct Fragment<'a> {
    nodes: usize,
    contour: &'a CurveFamily,
}

fn smooth(scene: &Scene, csv: bool) -> Run {
    let t = &scene.tolerances;
    let b = scene.smoothing.as_ref().ok_or("scene has no smoothing block")?;
    let p = SmoothingParams { epsilon: b.epsilon, levels: b.levels, h: b.h.unwrap_or(b.epsilon / 64.0), modes: b.modes, nodes: b.nodes };
    let x = PointSet::new(b.points.clone(), b.hull).map_err(err)?;
    let domains = build_domains(&x, &p).map_err(err)?;
    let mut checks = Vec::new();
    let mut levels = Vec::new();
    if domains.len() >= 2 {
        let nest = nesting_report(&domains, &x, &p).map_err(err)?;
        for l in &nest.levels {
            let n = l.level;
            checks.push(Check::flag(format!("level {n}: X inside"), l.x_inside));
            if n > 1 {
                checks.push(Check::flag(format!("level {n}: closure inside level {}", n - 1), l.nested));
            }
            checks.push(Check::le(format!("level {n}: Hausdorff distance to X"), l.hausdorff, l.hausdorff_bound));
            if x.hull_mode() {
                checks.push(Check::ge(format!("level {n}: min curvature"), l.min_curvature, -t.convexity));
            }
        }
        levels = nest.levels.iter().map(|l| serde_json::to_value(l).expect("plain data")).collect();
    }
    let fits: Vec<_> = domains.iter().map(|d| json!({ "level": d.level, "s": d.s, "t": d.t, "gradient_min": d.gradient_min, "fit_residual": d.fit_residual })).collect();
    let mut stability = serde_json::Value::Null;
    let mut artifacts = Vec::new();
    if let (Some(a), false) = (scene.matrix(), scene.functions.is_empty()) {
        let f = scene_functions(scene).remove(0);
        let table = spectral_stability(&a, &f, &domains, &x).map_err(err)?;
        checks.push(Check::flag("sup over level boundaries non-increasing", table.sup_monotone));
        checks.push(Check::flag("norm ratio monotone", table.ratio_monotone));
        checks.push(Check::flag("sup converges to sup over X", table.converged));
        let worst = table.rows.iter().map(|r| r.homomorphism_err).fold(0.0, f64::max);
        checks.push(Check::le("max homomorphism error", worst, t.homomorphism));
        if csv {
            let rows = table.rows.iter().map(|r| vec![r.level as f64, r.sup_boundary, r.norm_fa, r.ratio, r.homomorphism_err]);
            artifacts.push(Artifact::new("stability.csv", float_csv(&["level", "sup_boundary", "norm_fa", "ratio", "homomorphism_err"], rows)));
        }
        stability = serde_json::to_value(&table).map_err(err)?;
    }
    for d in &domains {
        let text = toml::to_string(&Fragment { nodes: d.spec.nodes, contour: &d.spec.family }).map_err(err)?;
        artifacts.push(Artifact::new(format!("level{}.toml", d.level), text.into_bytes()));
        if csv {
            artifacts.push(Artifact::new(format!("level{}_nodes.csv", d.level), nodes_csv(&d.contour)));
        }
    }
    if csv {
        let grid = Grid::covering(&x, p.epsilon, p.h);
        let mut buf = Vec::new();
        write_field_csv(&grid, &distance_field(&x, &grid), &mut buf).map_err(err)?;
        artifacts.push(Artifact::new("distance_field.csv", buf));
    }
    let summary = json!({ "fits": fits, "levels": levels, "stability": stability });
    Ok(Outcome { checks, summary, artifacts })
}

fn selftest(scene: &Scene) -> Run {
    let results = run_all(&scene.tolerances);
    let mut checks = Vec::new();
    let mut criteria = Vec::new();
    for r in &results {
        criteria.push(json!({ "id": r.id, "title": r.title, "pass": r.pass(), "checks": r.checks.len() }));
        for c in &r.checks {
            checks.push(Check { name: format!("criterion {}: {}", r.id, c.name), ..c.clone() });
        }
    }
    Ok(Outcome { checks, summary: json!({ "criteria": criteria }), artifacts: Vec::new() })
}
