//! The acceptance criteria as callable checks, shared by the acceptance test
//! target and the `selftest` command.

use std::f64::consts::SQRT_2;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;

use crate::calculus::{nrange_inclusion, sym_calculus_analytic, sym_calculus_apply, CalculusError, MatrixOperand};
use crate::cauchy::{plemelj_residuals, BoundarySamples, Generator, Poly};
use crate::contour::{make_contour, Contour, ContourSpec, FourierMode};
use crate::dlayer::{convexity_report, dl_evaluate, interior_inverse_norm, np_matrix, Domain, Region};
use crate::extremal::{analytic_config_lower, search_extremal, ExtremalResult};
use crate::linalg::CMatrix;
use crate::mapping::{normalize_unit_ball, putinar_sandberg_verify, run_ensemble, EnsembleConfig, TrialRow};
use crate::random::{random_coeffs, scaled_matrix, stream_rng};
use crate::report::{all_pass, collect, Check};
use crate::smoothing::{build_domains, circle_sample, nesting_report, spectral_stability, PointSet, SmoothingParams};
use crate::tolerances::Tolerances;

/// Sub-checks that cannot pass at the prescribed four levels: the last
/// smoothed domain still lies `ε/5` outside the sample, which caps the ratio
/// near `2/(1 + ε/5)`.
pub const UNATTAINABLE: &[&str] = &["disk sample: last ratio within 5% of 2"];

type Outcome = Result<Vec<Check>, String>;

pub struct Criterion {
    pub id: usize,
    pub title: &'static str,
    pub run: fn(&Tolerances) -> Vec<Check>,
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl CriterionResult {
    pub fn pass(&self) -> bool {
        all_pass(&self.checks)
    }

    /// Failed checks not listed in [`UNATTAINABLE`].
    pub fn unexpected_failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass && !UNATTAINABLE.contains(&c.name.as_str())).collect()
    }
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, title: "partition of unity", run: partition_of_unity },
        Criterion { id: 2, title: "convexity characterizations", run: convexity_characterizations },
        Criterion { id: 3, title: "disk collapse", run: disk_collapse },
        Criterion { id: 4, title: "Plemelj jump suite", run: plemelj_suite },
        Criterion { id: 5, title: "operator total mass", run: total_mass },
        Criterion { id: 6, title: "decomposition", run: decomposition },
        Criterion { id: 7, title: "inclusion equivalence", run: inclusion_equivalence },
        Criterion { id: 8, title: "mapping theorems on disks", run: mapping_theorems },
        Criterion { id: 9, title: "norm inequalities and inverse bound", run: norm_inequalities },
        Criterion { id: 10, title: "extremal bounds", run: extremal_bounds },
        Criterion { id: 11, title: "smoothing pipeline", run: smoothing_pipeline },
    ]
}

pub fn run_criterion(c: &Criterion, t: &Tolerances) -> CriterionResult {
    let start = Instant::now();
    let checks = (c.run)(t);
    CriterionResult { id: c.id, title: c.title, checks, elapsed: start.elapsed() }
}

pub fn run_all(t: &Tolerances) -> Vec<CriterionResult> {
    criteria().iter().map(|c| run_criterion(c, t)).collect()
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn contour(spec: ContourSpec) -> Result<Contour, String> {
    make_contour(&spec).map_err(|e| e.to_string())
}

fn standard_families(nodes: usize) -> Vec<(&'static str, ContourSpec)> {
    vec![
        ("circle", ContourSpec::unit_circle(nodes)),
        ("ellipse", ContourSpec::ellipse(cx(0.0, 0.0), 2.0, 1.0, nodes)),
        ("star", ContourSpec::star(1.0, 0.3, 3, nodes)),
    ]
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn partition_of_unity(t: &Tolerances) -> Vec<Check> {
    standard_families(256)
        .into_iter()
        .flat_map(|(label, spec)| {
            collect(label, (|| -> Outcome {
                let c = contour(spec)?;
                let one = BoundarySamples::constant(&c, cx(1.0, 0.0));
                let g = c.centroid();
                let n = c.len();
                let mut probes: Vec<(Region, f64)> = vec![(Region::Interior(g), 2.0), (Region::Exterior(g + 10.0), 0.0)];
                for j in (0..n).step_by(n / 8) {
                    let p = c.points[j];
                    probes.push((Region::Interior(g + (p - g) * 0.5), 2.0));
                    probes.push((Region::Exterior(g + (p - g) * 1.6), 0.0));
                }
                probes.extend((0..n).map(|i| (Region::Boundary(i), 1.0)));
                let mut dev = 0.0f64;
                for (r, want) in probes {
                    let v = dl_evaluate(&c, &one, r).map_err(|e| e.to_string())?;
                    dev = dev.max((v - want).norm());
                }
                Ok(vec![Check::le(format!("{label}: max |P(1) - 2/1/0|"), dev, t.partition)])
            })())
        })
        .collect()
}

fn convexity_characterizations(t: &Tolerances) -> Vec<Check> {
    let mut out = Vec::new();
    for (label, spec) in standard_families(256) {
        out.extend(collect(label, (|| -> Outcome {
            let mut checks = Vec::new();
            let mut verdicts = Vec::new();
            for nodes in [256, 512] {
                let c = contour(ContourSpec { nodes, ..spec.clone() })?;
                let r = convexity_report(&c).map_err(|e| e.to_string())?;
                verdicts.push(r.is_convex);
                if label == "star" {
                    checks.push(Check::ge(format!("{label} N={nodes}: np_norm"), r.np_norm, t.star_np_min));
                    checks.push(Check::le(format!("{label} N={nodes}: min_kernel"), r.min_kernel, 0.0));
                } else {
                    checks.push(Check::near(format!("{label} N={nodes}: |np_norm - 1|"), r.np_norm, 1.0, t.np_norm));
                    checks.push(Check::ge(format!("{label} N={nodes}: min_kernel"), r.min_kernel, -t.min_kernel));
                }
            }
            checks.push(Check::flag(format!("{label}: verdict stable under N doubling"), verdicts[0] == verdicts[1]));
            Ok(checks)
        })()));
    }
    out
}

fn disk_collapse(t: &Tolerances) -> Vec<Check> {
    let circles = [(cx(0.0, 0.0), 1.0), (cx(0.5, 0.3), 0.7), (cx(-1.0, 2.0), 2.5)];
    circles
        .iter()
        .enumerate()
        .flat_map(|(k, &(center, radius))| {
            let label = format!("circle {center} r={radius}");
            collect(&label.clone(), (|| -> Outcome {
                let c = contour(ContourSpec::circle(center, radius, 256))?;
                let k_mat = np_matrix(&c);
                let scale = 1.0 / (center.norm() + radius);
                let mut dev = 0.0f64;
                for trial in 0..20u64 {
                    let mut rng = stream_rng(3, 100 * k as u64 + trial);
                    let degree = rng.random_range(0..=8);
                    let coeffs: Vec<Complex64> = random_coeffs(&mut rng, degree)
                        .into_iter()
                        .enumerate()
                        .map(|(i, a)| a * scale.powi(i as i32))
                        .collect();
                    let p = Poly::new(coeffs);
                    let f = BoundarySamples::from_generator(&c, &Generator::Polynomial(p.clone()));
                    let want = p.eval(center);
                    dev = dev.max(max_of(k_mat.apply(&f.values).iter().map(|v| (v - want).norm())));
                }
                Ok(vec![Check::le(format!("{label}: max |K(f) - f(c)|"), dev, t.disk_collapse)])
            })())
        })
        .collect()
}

fn plemelj_suite(t: &Tolerances) -> Vec<Check> {
    let fourier = ContourSpec::fourier(
        vec![
            FourierMode { k: 1, c: cx(1.0, 0.0) },
            FourierMode { k: -1, c: cx(0.15, 0.0) },
            FourierMode { k: 2, c: cx(0.0, 0.05) },
        ],
        512,
    );
    let mut families = standard_families(512);
    families.push(("fourier", fourier));
    let data = [
        ("polynomial", Generator::polynomial(vec![cx(0.3, 0.0), cx(-1.0, 0.0), cx(0.0, 0.5), cx(0.0, 0.0), cx(0.2, 0.0)])),
        ("rational", Generator::simple_pole(cx(3.0, 2.0))),
    ];
    let mut out = Vec::new();
    for (label, spec) in families {
        let c = match contour(spec) {
            Ok(c) => c,
            Err(e) => {
                out.push(Check::error(label, e));
                continue;
            }
        };
        for (kind, g) in &data {
            let phi = BoundarySamples::from_generator(&c, g);
            let r = plemelj_residuals(&c, &phi);
            out.push(Check::le(format!("{label} {kind}: max Plemelj residual"), r.max(), t.plemelj));
        }
    }
    out
}

/// Seeded certified operands on the ellipse `{2, 1}`, dims 2–6, with
/// numerical range inside the domain.
fn operand_ensemble(c: &Contour, count: usize, seed: u64) -> Result<Vec<MatrixOperand>, String> {
    (0..count)
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let dim = rng.random_range(2..=6);
            let factor = rng.random_range(0.3..0.95);
            let a = scaled_matrix(&mut rng, c, dim, factor, 0.8);
            MatrixOperand::new(a, c).map_err(|e| e.to_string())
        })
        .collect()
}

fn ellipse256() -> Result<Contour, String> {
    contour(ContourSpec::ellipse(cx(0.0, 0.0), 2.0, 1.0, 256))
}

fn total_mass(t: &Tolerances) -> Vec<Check> {
    collect("total mass", (|| -> Outcome {
        let c = ellipse256()?;
        let one = BoundarySamples::constant(&c, cx(1.0, 0.0));
        let mut dev = 0.0f64;
        for op in operand_ensemble(&c, 20, 5)? {
            let m = sym_calculus_apply(&op, &one).map_err(|e| e.to_string())?;
            let two = CMatrix::identity(op.dim()).scale(cx(2.0, 0.0));
            dev = dev.max((&m - &two).norm_fro());
        }
        Ok(vec![Check::le("20 operands: max ||P(1) - 2I||_F", dev, t.total_mass)])
    })())
}

fn decomposition(t: &Tolerances) -> Vec<Check> {
    collect("decomposition", (|| -> Outcome {
        let c = ellipse256()?;
        let domain = Domain::new(c.clone()).map_err(|e| e.to_string())?;
        let center = c.centroid();
        let mut worst = 0.0f64;
        for (k, op) in operand_ensemble(&c, 20, 5)?.iter().enumerate() {
            for s in 0..10u64 {
                let mut rng = stream_rng(6, 100 * k as u64 + s);
                let degree = rng.random_range(0..=6);
                let p = Poly::centered(center, random_coeffs(&mut rng, degree));
                if p.is_zero() {
                    continue;
                }
                let f = normalize_unit_ball(&c, &p).map_err(|e| e.to_string())?;
                let kf = domain.k_apply(&f);
                let mismatch = match sym_calculus_analytic(op, &f, &kf) {
                    Ok((_, m)) => m,
                    Err(CalculusError::DecompositionMismatch(m)) => m,
                    Err(e) => return Err(e.to_string()),
                };
                worst = worst.max(mismatch);
            }
        }
        Ok(vec![Check::le("200 pairs: max Frobenius mismatch", worst, t.decomposition)])
    })())
}

fn inclusion_equivalence(t: &Tolerances) -> Vec<Check> {
    collect("inclusion", (|| -> Outcome {
        let c = ellipse256()?;
        let mut disagreements = 0;
        let mut included = 0;
        let mut sym_dev = 0.0f64;
        for k in 0..100u64 {
            let mut rng = stream_rng(7, k);
            let dim = rng.random_range(2..=6);
            let factor = rng.random_range(0.5..1.5);
            let a = scaled_matrix(&mut rng, &c, dim, factor, 0.8);
            let op = MatrixOperand::new(a, &c).map_err(|e| e.to_string())?;
            match nrange_inclusion(&op) {
                Ok(r) => {
                    if r.included {
                        included += 1;
                        sym_dev = sym_dev.max((r.sym_norm_at_one - 2.0).abs());
                    }
                }
                Err(CalculusError::InconsistentInclusion { .. }) => disagreements += 1,
                Err(e) => return Err(e.to_string()),
            }
        }
        Ok(vec![
            Check::le("kernel and support verdicts disagree (count of 100)", disagreements as f64, 0.0),
            Check::flag(format!("ensemble straddles inclusion ({included} of 100 included)"), included > 0 && included < 100),
            Check::le("included: max |sym_norm_at_one - 2|", sym_dev, t.sym_norm),
        ])
    })())
}

fn disk_domain() -> Result<Domain, String> {
    Domain::new(contour(ContourSpec::unit_circle(256))?).map_err(|e| e.to_string())
}

fn ellipse_domain() -> Result<Domain, String> {
    Domain::new(ellipse256()?).map_err(|e| e.to_string())
}

fn ensemble_rows(domain: &Domain, cfg: &EnsembleConfig) -> Result<Vec<TrialRow>, String> {
    run_ensemble(domain, cfg).into_iter().map(|r| r.map_err(|e| e.to_string())).collect()
}

fn disk_config(vanish_at_center: bool) -> EnsembleConfig {
    EnsembleConfig { trials: 100, min_dim: 2, max_dim: 6, degree: 5, seed: if vanish_at_center { 8 } else { 80 }, vanish_at_center }
}

fn nilpotent() -> CMatrix {
    CMatrix::from_real_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]).expect("square")
}

fn mapping_theorems(t: &Tolerances) -> Vec<Check> {
    collect("mapping", (|| -> Outcome {
        let domain = disk_domain()?;
        let zero = ensemble_rows(&domain, &disk_config(true))?;
        let free = ensemble_rows(&domain, &disk_config(false))?;
        let op = MatrixOperand::new(nilpotent(), &domain.contour).map_err(|e| e.to_string())?;
        let z = BoundarySamples::from_generator(&domain.contour, &Generator::monomial(1));
        let eq = putinar_sandberg_verify(&domain, &op, &z).map_err(|e| e.to_string())?;
        let teardrop = free.iter().map(|r| r.teardrop_slack.unwrap_or(f64::NEG_INFINITY)).fold(f64::INFINITY, f64::min);
        Ok(vec![
            Check::le("f(0)=0: max numerical radius", max_of(zero.iter().map(|r| r.numerical_radius)), 1.0 + t.mapping),
            Check::le("f(0)=0: max ||gamma(f)||", max_of(zero.iter().map(|r| r.okubo_norm)), 2.0 + t.mapping),
            Check::near("nilpotent: |numerical radius - 1|", eq.numerical_radius, 1.0, t.mapping),
            Check::near("nilpotent: |norm - 2|", eq.okubo_norm, 2.0, t.mapping),
            Check::ge("free f(0): min teardrop slack", teardrop, -t.mapping),
        ])
    })())
}

fn norm_inequalities(t: &Tolerances) -> Vec<Check> {
    collect("inequalities", (|| -> Outcome {
        let disk = disk_domain()?;
        let ellipse = ellipse_domain()?;
        let mut rows = ensemble_rows(&disk, &disk_config(true))?;
        rows.extend(ensemble_rows(&disk, &disk_config(false))?);
        let cfg = EnsembleConfig { trials: 50, min_dim: 2, max_dim: 6, degree: 5, seed: 9, vanish_at_center: false };
        rows.extend(ensemble_rows(&ellipse, &cfg)?);
        let min = |f: fn(&TrialRow) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
        let inv = interior_inverse_norm(&disk.contour).map_err(|e| e.to_string())?;
        Ok(vec![
            Check::ge(format!("{} trials: min crouzeix07 slack", rows.len()), min(|r| r.crouzeix07_slack), -t.mapping),
            Check::ge(format!("{} trials: min rs18 slack", rows.len()), min(|r| r.rs18_slack), -t.mapping),
            Check::near("disk: |inverse norm - 1.5|", inv.inv_norm, 1.5, t.inverse_norm),
            Check::le("disk: inverse norm vs a-priori bound", inv.inv_norm, inv.delyon_bound),
            Check::near("disk: |a-priori bound - 257.5|", inv.delyon_bound, 257.5, 1e-6),
        ])
    })())
}

fn extremal_checks(label: &str, r: &ExtremalResult, t: &Tolerances) -> Vec<Check> {
    let mut out = vec![
        Check::ge(format!("{label}: 1 + sqrt(1 - rho) - gamma_lb"), r.bound - r.gamma_lb, -t.extremal_bound),
        Check::ge(format!("{label}: 1 + sqrt(2) - gamma_lb"), 1.0 + SQRT_2 - r.gamma_lb, -t.extremal_bound),
        Check::le(format!("{label}: |rho| - np_norm"), r.rho.abs() - r.np_norm, t.extremal_bound),
    ];
    if r.disk {
        out.push(Check::ge(format!("{label}: 2 - gamma_lb"), 2.0 - r.gamma_lb, -t.extremal_bound));
    }
    out
}

fn extremal_bounds(t: &Tolerances) -> Vec<Check> {
    collect("extremal", (|| -> Outcome {
        let disk = disk_domain()?;
        let ellipse = ellipse_domain()?;
        let mut out = Vec::new();
        let op = MatrixOperand::new(nilpotent(), &disk.contour).map_err(|e| e.to_string())?;
        let r = search_extremal(&disk, &op, 3, 2, 10).map_err(|e| e.to_string())?;
        out.push(Check::near("nilpotent disk: |gamma_lb - 2|", r.gamma_lb, 2.0, t.extremal_equality));
        out.push(Check::near("nilpotent disk: |rho|", r.rho, 0.0, t.extremal_equality));
        out.extend(extremal_checks("nilpotent disk", &r, t));
        for (name, domain) in [("disk", &disk), ("ellipse", &ellipse)] {
            for k in 0..2u64 {
                let mut rng = stream_rng(10, k + if name == "disk" { 0 } else { 10 });
                let dim = rng.random_range(2..=4);
                let a = scaled_matrix(&mut rng, &domain.contour, dim, 0.9, 0.8);
                let op = MatrixOperand::new(a, &domain.contour).map_err(|e| e.to_string())?;
                let r = search_extremal(domain, &op, 3, 2, 100 + k).map_err(|e| e.to_string())?;
                out.extend(extremal_checks(&format!("{name} operand {k}"), &r, t));
            }
        }
        let a = analytic_config_lower(&ellipse, 6, 20, 11);
        out.push(Check::le("ellipse: analytic configuration estimate", a, 1.0 - f64::EPSILON));
        Ok(out)
    })())
}

struct SmoothingCase {
    label: &'static str,
    x: PointSet,
    a: CMatrix,
    f: Poly,
}

fn smoothing_cases() -> Result<Vec<SmoothingCase>, String> {
    let set = |p: Vec<Complex64>, hull| PointSet::new(p, hull).map_err(|e| e.to_string());
    let z = Poly::new(vec![cx(0.0, 0.0), cx(1.0, 0.0)]);
    let z2 = Poly::new(vec![cx(0.0, 0.0), cx(0.0, 0.0), cx(1.0, 0.0)]);
    let tri = CMatrix::from_rows(&[vec![cx(0.2, 0.2), cx(0.3, 0.0)], vec![cx(0.0, 0.0), cx(0.5, 0.1)]]).map_err(|e| e.to_string())?;
    Ok(vec![
        SmoothingCase {
            label: "X={0}",
            x: set(vec![cx(0.0, 0.0)], false)?,
            a: CMatrix::from_real_rows(&[vec![0.0, 0.1], vec![0.0, 0.0]]).map_err(|e| e.to_string())?,
            f: z.clone(),
        },
        SmoothingCase { label: "hull{0,1,i}", x: set(vec![cx(0.0, 0.0), cx(1.0, 0.0), cx(0.0, 1.0)], true)?, a: tri, f: z2 },
        SmoothingCase { label: "disk sample", x: set(circle_sample(64, 1.0), true)?, a: nilpotent(), f: z },
    ])
}

fn smoothing_pipeline(t: &Tolerances) -> Vec<Check> {
    collect("smoothing", (|| -> Outcome {
        let p = SmoothingParams::new(0.4, 4, 0.4 / 64.0).map_err(|e| e.to_string())?;
        let mut out = Vec::new();
        for case in smoothing_cases()? {
            let l = case.label;
            let doms = build_domains(&case.x, &p).map_err(|e| format!("{l}: {e}"))?;
            let nest = nesting_report(&doms, &case.x, &p).map_err(|e| format!("{l}: {e}"))?;
            let lv = &nest.levels;
            out.push(Check::flag(format!("{l}: nested at every level"), lv.iter().all(|c| c.nested)));
            out.push(Check::flag(format!("{l}: X interior at every level"), lv.iter().all(|c| c.x_inside)));
            out.push(Check::le(
                format!("{l}: max Hausdorff excess over eps/n + 2h"),
                lv.iter().map(|c| c.hausdorff - c.hausdorff_bound).fold(f64::NEG_INFINITY, f64::max),
                0.0,
            ));
            if case.x.hull_mode() {
                out.push(Check::ge(
                    format!("{l}: min curvature"),
                    lv.iter().map(|c| c.min_curvature).fold(f64::INFINITY, f64::min),
                    -t.convexity,
                ));
            }
            let table = spectral_stability(&case.a, &case.f, &doms, &case.x).map_err(|e| format!("{l}: {e}"))?;
            out.push(Check::flag(format!("{l}: sup non-increasing and ratio monotone"), table.sup_monotone && table.ratio_monotone));
            out.push(Check::le(
                format!("{l}: max homomorphism error"),
                max_of(table.rows.iter().map(|r| r.homomorphism_err)),
                t.homomorphism,
            ));
            if l == "disk sample" {
                let rel = (table.limit_ratio() - 2.0).abs() / 2.0;
                out.push(Check::le("disk sample: last ratio within 5% of 2", rel, t.disk_constant_rel));
            }
        }
        Ok(out)
    })())
}
