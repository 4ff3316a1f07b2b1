//! Scene configuration for the `shapelab` binary: JSON scene files are
//! deserialized into [`SceneConfig`], executed by [`run`], and summarized as
//! deterministic JSON (insertion-ordered maps, no timestamps).
//!
//! # Numeric defaults
//!
//! | mode              | gate                         | default |
//! |-------------------|------------------------------|---------|
//! | verify-curvature  | curvature residual           | 1e-6    |
//! | codazzi           | closed-form residual         | 1e-8    |
//! | codazzi           | integrated-data residual     | 1e-6    |
//! | pencil-scan       | curvature residual per lambda| 1e-6    |
//! | pencil-scan       | lambda list                  | 0.1, 0.5, 1, 2, 10 |
//! | darboux           | system residual              | 1e-6    |
//! | goursat / triple  | first-order residual         | 1e-6    |
//! | goursat / triple  | Monge-Ampere residual        | 1e-5    |
//! | compat            | the flat-pencil criterion residuals          | 1e-6    |
//! | frames            | Gram drift                   | 1e-6    |
//! | frames            | metric match                 | 1e-5    |
//! | frames            | lambda                       | 1.0     |
//! | reconstruct/family| oracle radii error           | 1e-3    |

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::catalog::{self, CatalogError, ExampleName};
use crate::codazzi::{codazzi_residual, integrate_codazzi, CodazziError};
use crate::compat::{flat_pencil_report, CompatError};
use crate::expr::{ExprError, ScalarExpr};
use crate::frames::{integrate_frame, FrameError, FrameModel, FrameOptions};
use crate::grid::{Field, GridDomain, GridError, ResidualReport};
use crate::lame::{
    integrate_darboux, load_rotation, save_rotation, solve_goursat_surface, solve_triple_system,
    surface_system_residual, DarbouxBoundary, LameError, RotationData,
};
use crate::metric::{flatness_residual, MetricError, MetricPencil};
use crate::surface::{
    deformation_family, export_obj, mesh_fundamental_forms, reconstruct_bundle, BasePose,
    SurfaceError,
};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene validation: {0}")]
    Validation(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Codazzi(#[from] CodazziError),
    #[error(transparent)]
    Lame(#[from] LameError),
    #[error(transparent)]
    Compat(#[from] CompatError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// Catalog bundle selector shared by the bundle-based modes.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSpec {
    pub bundle: String,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    #[serde(default)]
    pub functions: BTreeMap<String, String>,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridDomain>,
}

impl BundleSpec {
    fn build(&self, grid_override: Option<&[usize]>) -> Result<catalog::ExampleBundle, SceneError> {
        let name: ExampleName = self.bundle.parse()?;
        let mut ov = catalog::Overrides::default();
        for (k, v) in &self.constants {
            ov = ov.constant(k, *v);
        }
        for (k, src) in &self.functions {
            ov = ov.function(k, ScalarExpr::parse(src)?);
        }
        ov.dim = self.dim;
        ov.domain = self.grid.clone();
        let mut bundle = catalog::make_example(name, &ov)?;
        if let Some(nodes) = grid_override {
            let mut dom = bundle.domain.clone();
            if nodes.len() != dom.dim() {
                return Err(SceneError::Validation(format!(
                    "--grid has {} axes, the scene grid has {}",
                    nodes.len(),
                    dom.dim()
                )));
            }
            dom.n = nodes.to_vec();
            ov.domain = Some(dom);
            bundle = catalog::make_example(name, &ov)?;
        }
        Ok(bundle)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SceneConfig {
    VerifyCurvature {
        #[serde(flatten)]
        bundle: BundleSpec,
        #[serde(default)]
        tol: Option<f64>,
    },
    Codazzi {
        #[serde(flatten)]
        bundle: BundleSpec,
        /// optional boundary data: k^1 on the R^2 = lo line (in R^1) and
        /// k^2 on the R^1 = lo line (in R^2); integrated when present,
        /// otherwise the bundle's closed-form curvatures are checked
        #[serde(default)]
        k1: Option<String>,
        #[serde(default)]
        k2: Option<String>,
        #[serde(default)]
        tol: Option<f64>,
    },
    PencilScan {
        h: Vec<String>,
        eta: Vec<String>,
        grid: GridDomain,
        #[serde(default)]
        lambdas: Option<Vec<f64>>,
        #[serde(default)]
        tol: Option<f64>,
    },
    Darboux {
        eta: Vec<String>,
        /// beta[i][j] boundary expressions (null on the diagonal)
        beta: Vec<Vec<Option<String>>>,
        #[serde(default)]
        h: Option<Vec<String>>,
        grid: GridDomain,
        #[serde(default)]
        tol: Option<f64>,
        /// rotation-data artifact file name (relative to --out)
        #[serde(default)]
        save: Option<String>,
    },
    Goursat {
        phi: String,
        psi: String,
        grid: GridDomain,
        #[serde(default)]
        tol: Option<f64>,
        #[serde(default)]
        ma_tol: Option<f64>,
        #[serde(default)]
        save: Option<String>,
    },
    Triple {
        p: String,
        q: String,
        r: String,
        grid: GridDomain,
        #[serde(default)]
        tol: Option<f64>,
        #[serde(default)]
        ma_tol: Option<f64>,
    },
    Compat {
        g: Vec<String>,
        gt: Vec<String>,
        grid: GridDomain,
        #[serde(default)]
        tol: Option<f64>,
    },
    Frames {
        /// rotation data file written by a darboux/goursat run...
        #[serde(default)]
        rotation_file: Option<String>,
        /// ...or an inline Goursat problem
        #[serde(default)]
        phi: Option<String>,
        #[serde(default)]
        psi: Option<String>,
        #[serde(default)]
        grid: Option<GridDomain>,
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default)]
        tol: Option<f64>,
        #[serde(default)]
        metric_tol: Option<f64>,
        #[serde(default)]
        save: Option<String>,
    },
    Reconstruct {
        #[serde(flatten)]
        bundle: BundleSpec,
        #[serde(default)]
        out_obj: Option<String>,
        #[serde(default)]
        tol: Option<f64>,
    },
    Family {
        #[serde(flatten)]
        bundle: BundleSpec,
        /// constant sets of the family members (applied on top of the
        /// bundle's constants)
        members: Vec<BTreeMap<String, f64>>,
        #[serde(default)]
        tol: Option<f64>,
    },
}

/// Command-line overrides applied on top of the scene file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub tol: Option<f64>,
    pub grid: Option<Vec<usize>>,
    pub lambdas: Option<Vec<f64>>,
}

/// Result of a scene run: the deterministic summary object and the overall
/// verdict.
#[derive(Debug)]
pub struct RunOutcome {
    pub summary: Value,
    pub pass: bool,
    pub summary_path: PathBuf,
}

fn override_grid(mut dom: GridDomain, nodes: Option<&[usize]>) -> Result<GridDomain, SceneError> {
    if let Some(nodes) = nodes {
        if nodes.len() != dom.dim() {
            return Err(SceneError::Validation(format!(
                "--grid has {} axes, the scene grid has {}",
                nodes.len(),
                dom.dim()
            )));
        }
        dom.n = nodes.to_vec();
    }
    dom.validate()?;
    Ok(dom)
}

fn parse_all(srcs: &[String]) -> Result<Vec<ScalarExpr>, SceneError> {
    srcs.iter()
        .map(|s| ScalarExpr::parse(s).map_err(SceneError::from))
        .collect()
}

fn report_json(r: &ResidualReport) -> Value {
    serde_json::to_value(r).expect("report serialization")
}

/// Worker cap from SHAPELAB_THREADS (default 1; parallel sections chunk
/// their independent work items across this many threads).
fn thread_cap() -> usize {
    std::env::var("SHAPELAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Runs `jobs` (index-preserving) on up to `thread_cap()` scoped threads.
fn run_jobs<T: Send, F: Fn(usize) -> T + Sync>(count: usize, job: F) -> Vec<T> {
    let cap = thread_cap().min(count.max(1));
    if cap <= 1 {
        return (0..count).map(&job).collect();
    }
    let mut out: Vec<Option<T>> = (0..count).map(|_| None).collect();
    let chunk = count.div_ceil(cap);
    std::thread::scope(|scope| {
        for (t, slots) in out.chunks_mut(chunk).enumerate() {
            let job = &job;
            scope.spawn(move || {
                for (off, slot) in slots.iter_mut().enumerate() {
                    *slot = Some(job(t * chunk + off));
                }
            });
        }
    });
    out.into_iter().map(|v| v.expect("job completed")).collect()
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), SceneError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn summary_base(mode: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("mode".to_string(), json!(mode));
    m
}

/// Executes the scene and writes `summary.json` (plus mode-specific
/// artifacts) under `out_dir`. The summary is byte-deterministic for a
/// fixed scene and overrides.
pub fn run(
    config: &SceneConfig,
    overrides: &CliOverrides,
    out_dir: &Path,
) -> Result<RunOutcome, SceneError> {
    std::fs::create_dir_all(out_dir)?;
    let grid_nodes = overrides.grid.as_deref();
    let mut summary;
    let pass;

    match config {
        SceneConfig::VerifyCurvature { bundle, tol } => {
            let tol = overrides.tol.or(*tol).unwrap_or(1e-6);
            let b = bundle.build(grid_nodes)?;
            let report = crate::metric::curvature_one_residual(&b.metric)?;
            pass = report.max <= tol;
            summary = summary_base("verify-curvature");
            summary.insert("bundle".into(), json!(b.name.as_str()));
            summary.insert("tol".into(), json!(tol));
            summary.insert("report".into(), report_json(&report));
        }
        SceneConfig::Codazzi { bundle, k1, k2, tol } => {
            let b = bundle.build(grid_nodes)?;
            summary = summary_base("codazzi");
            summary.insert("bundle".into(), json!(b.name.as_str()));
            let (k, default_tol, source) = match (k1, k2) {
                (Some(k1), Some(k2)) => {
                    let k = integrate_codazzi(
                        &b.codazzi,
                        &ScalarExpr::parse(k1)?,
                        &ScalarExpr::parse(k2)?,
                        &b.domain,
                    )?;
                    (k, 1e-6, "integrated")
                }
                (None, None) => {
                    let k = b.curvatures.clone().ok_or_else(|| {
                        SceneError::Validation(format!(
                            "bundle `{}` has no closed-form curvatures; provide k1/k2 boundary data",
                            b.name.as_str()
                        ))
                    })?;
                    (k, 1e-8, "closed-form")
                }
                _ => {
                    return Err(SceneError::Validation(
                        "k1 and k2 boundary data must be given together".into(),
                    ))
                }
            };
            let tol = overrides.tol.or(*tol).unwrap_or(default_tol);
            let report = codazzi_residual(&k, &b.codazzi, &b.domain)?;
            pass = report.max <= tol;
            summary.insert("curvature_source".into(), json!(source));
            summary.insert("tol".into(), json!(tol));
            summary.insert("report".into(), report_json(&report));
        }
        SceneConfig::PencilScan {
            h,
            eta,
            grid,
            lambdas,
            tol,
        } => {
            let tol = overrides.tol.or(*tol).unwrap_or(1e-6);
            let dom = override_grid(grid.clone(), grid_nodes)?;
            let h_fields: Vec<Field> = parse_all(h)?.into_iter().map(Field::Expr).collect();
            let pencil = MetricPencil::new(h_fields, parse_all(eta)?, dom)?;
            let lambdas = overrides
                .lambdas
                .clone()
                .or_else(|| lambdas.clone())
                .unwrap_or_else(|| vec![0.1, 0.5, 1.0, 2.0, 10.0]);
            let reports = run_jobs(lambdas.len(), |i| {
                let lam = lambdas[i];
                pencil
                    .evaluate(lam)
                    .and_then(|m| crate::metric::curvature_one_residual(&m))
                    .map(|r| (lam, r))
            });
            let mut rows = Vec::new();
            let mut worst = 0.0f64;
            for r in reports {
                let (lam, rep) = r?;
                worst = worst.max(rep.max);
                rows.push(json!({"lambda": lam, "max": rep.max, "excluded": rep.excluded}));
            }
            pass = worst <= tol;
            summary = summary_base("pencil-scan");
            summary.insert("tol".into(), json!(tol));
            summary.insert("max_residual".into(), json!(worst));
            summary.insert("scan".into(), Value::Array(rows));
        }
        SceneConfig::Darboux {
            eta,
            beta,
            h,
            grid,
            tol,
            save,
        } => {
            let tol = overrides.tol.or(*tol).unwrap_or(1e-6);
            let dom = override_grid(grid.clone(), grid_nodes)?;
            let n = dom.dim();
            if beta.len() != n || beta.iter().any(|row| row.len() != n) {
                return Err(SceneError::Validation(format!(
                    "beta boundary matrix must be {n}x{n}"
                )));
            }
            let mut boundary = DarbouxBoundary::zero(n);
            for (i, row) in beta.iter().enumerate() {
                for (j, entry) in row.iter().enumerate() {
                    if i == j {
                        if entry.is_some() {
                            return Err(SceneError::Validation(
                                "beta boundary diagonal must be null".into(),
                            ));
                        }
                        continue;
                    }
                    if let Some(src) = entry {
                        boundary.beta[i][j] = Some(ScalarExpr::parse(src)?);
                    }
                }
            }
            if let Some(h) = h {
                boundary.h = Some(parse_all(h)?);
            }
            let rd = integrate_darboux(&parse_all(eta)?, &boundary, &dom)?;
            let report = if n == 2 {
                surface_system_residual(&rd)
            } else {
                flatness_residual(&rd)
            };
            pass = report.max <= tol;
            summary = summary_base("darboux");
            summary.insert("dim".into(), json!(n));
            summary.insert("tol".into(), json!(tol));
            summary.insert("report".into(), report_json(&report));
            if let Some(name) = save {
                let path = out_dir.join(name);
                save_rotation(&rd, &path)?;
                summary.insert("rotation_file".into(), json!(name));
            }
        }
        SceneConfig::Goursat {
            phi,
            psi,
            grid,
            tol,
            ma_tol,
            save,
        } => {
            let tol = overrides.tol.or(*tol).unwrap_or(1e-6);
            let ma_tol = ma_tol.unwrap_or(1e-5);
            let dom = override_grid(grid.clone(), grid_nodes)?;
            let sol = solve_goursat_surface(&ScalarExpr::parse(phi)?, &ScalarExpr::parse(psi)?, &dom)?;
            let first = sol.first_order_residual();
            let ma = sol.monge_ampere_residual();
            pass = first.max <= tol && ma.max <= ma_tol;
            summary = summary_base("goursat");
            summary.insert("tol".into(), json!(tol));
            summary.insert("ma_tol".into(), json!(ma_tol));
            summary.insert("first_order".into(), report_json(&first));
            summary.insert("monge_ampere".into(), report_json(&ma));
            if let Some(name) = save {
                let path = out_dir.join(name);
                save_rotation(&sol.rotation, &path)?;
                summary.insert("rotation_file".into(), json!(name));
            }
        }
        SceneConfig::Triple {
            p,
            q,
            r,
            grid,
            tol,
            ma_tol,
        } => {
            let tol = overrides.tol.or(*tol).unwrap_or(1e-6);
            let ma_tol = ma_tol.unwrap_or(1e-5);
            let dom = override_grid(grid.clone(), grid_nodes)?;
            let sol = solve_triple_system(
                &ScalarExpr::parse(p)?,
                &ScalarExpr::parse(q)?,
                &ScalarExpr::parse(r)?,
                &dom,
            )?;
            let first = sol.first_order_residual();
            let ma = sol.monge_ampere_residual();
            pass = first.max <= tol && ma.max <= ma_tol;
            summary = summary_base("triple");
            summary.insert("tol".into(), json!(tol));
            summary.insert("ma_tol".into(), json!(ma_tol));
            summary.insert("first_order".into(), report_json(&first));
            summary.insert("monge_ampere".into(), report_json(&ma));
        }
        SceneConfig::Compat { g, gt, grid, tol } => {
            let tol = overrides.tol.or(*tol).unwrap_or(1e-6);
            let dom = override_grid(grid.clone(), grid_nodes)?;
            let report = flat_pencil_report(&parse_all(g)?, &parse_all(gt)?, &dom, tol)?;
            pass = report.pass;
            summary = summary_base("compat");
            summary.insert("tol".into(), json!(tol));
            summary.insert("nijenhuis_max".into(), json!(report.nijenhuis_max));
            summary.insert("nabla".into(), report_json(&report.nabla));
            summary.insert(
                "btilde_consistency".into(),
                json!(report.btilde_consistency),
            );
            summary.insert("symmetry_max".into(), json!(report.symmetry_max));
            summary.insert("flat_g_max".into(), json!(report.flat_g_max));
            summary.insert("flat_gt_max".into(), json!(report.flat_gt_max));
        }
        SceneConfig::Frames {
            rotation_file,
            phi,
            psi,
            grid,
            lambda,
            tol,
            metric_tol,
            save,
        } => {
            let tol = overrides.tol.or(*tol).unwrap_or(1e-6);
            let metric_tol = metric_tol.unwrap_or(1e-5);
            let lambda = match (overrides.lambdas.as_deref(), lambda) {
                (Some([l, ..]), _) => *l,
                (_, Some(l)) => *l,
                _ => 1.0,
            };
            let rd: RotationData = match (rotation_file, phi, psi, grid) {
                (Some(name), None, None, None) => load_rotation(Path::new(name))?,
                (None, Some(phi), Some(psi), Some(grid)) => {
                    let dom = override_grid(grid.clone(), grid_nodes)?;
                    solve_goursat_surface(&ScalarExpr::parse(phi)?, &ScalarExpr::parse(psi)?, &dom)?
                        .rotation
                }
                _ => {
                    return Err(SceneError::Validation(
                        "frames needs either rotation_file or (phi, psi, grid)".into(),
                    ))
                }
            };
            let n = rd.n();
            let opts = FrameOptions::for_dim(n);
            let ambient = match opts.model {
                FrameModel::Sphere => 3,
                FrameModel::Euclidean => n,
            };
            let base = vec![0.0; ambient];
            let frame0: Vec<Vec<f64>> = (0..ambient)
                .map(|i| (0..ambient).map(|a| f64::from(u8::from(a == i))).collect())
                .collect();
            let ff = integrate_frame(&rd, lambda, &base, &frame0, &opts)?;
            let drift = ff.gram_drift();
            let mm = ff.metric_match(&rd);
            pass = drift <= tol && mm.max <= metric_tol;
            summary = summary_base("frames");
            summary.insert("lambda".into(), json!(lambda));
            summary.insert("tol".into(), json!(tol));
            summary.insert("metric_tol".into(), json!(metric_tol));
            summary.insert("gram_drift".into(), json!(drift));
            summary.insert("metric_match".into(), report_json(&mm));
            if let Some(name) = save {
                let path = out_dir.join(name);
                ff.save(&path)?;
                summary.insert("frame_file".into(), json!(name));
            }
        }
        SceneConfig::Reconstruct {
            bundle,
            out_obj,
            tol,
        } => {
            let tol = overrides.tol.or(*tol).unwrap_or(1e-3);
            let b = bundle.build(grid_nodes)?;
            let mesh = reconstruct_bundle(&b, &BasePose::default())?;
            let forms = mesh_fundamental_forms(&mesh)?;
            let k = b.curvatures.as_ref().expect("reconstruction had curvatures");
            let mut radii_err = 0.0f64;
            for axis in 0..2 {
                let want = k.k[axis].sample(&mesh.domain);
                for idx in mesh.domain.indices() {
                    if (0..2).any(|ax| idx[ax] < 2 || idx[ax] + 2 >= mesh.domain.n[ax]) {
                        continue;
                    }
                    let got = forms.radii[axis].get(&idx);
                    if got.is_finite() {
                        radii_err = radii_err.max((got - want.get(&idx)).abs());
                    }
                }
            }
            pass = radii_err <= tol;
            summary = summary_base("reconstruct");
            summary.insert("bundle".into(), json!(b.name.as_str()));
            summary.insert("tol".into(), json!(tol));
            summary.insert("oracle_radii_error".into(), json!(radii_err));
            summary.insert("normal_defect".into(), json!(mesh.normal_defect()));
            summary.insert("vertices".into(), json!(mesh.vertex_count()));
            if let Some(name) = out_obj {
                let path = out_dir.join(name);
                export_obj(&mesh, &path)?;
                summary.insert("obj_file".into(), json!(name));
            }
        }
        SceneConfig::Family {
            bundle,
            members,
            tol,
        } => {
            let tol = overrides.tol.or(*tol).unwrap_or(1e-3);
            let bundles = run_jobs(members.len(), |i| {
                let mut spec = bundle.clone();
                for (k, v) in &members[i] {
                    spec.constants.insert(k.clone(), *v);
                }
                spec.build(grid_nodes)
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            let fam = deformation_family(&bundles, &BasePose::default())?;
            let forms: Vec<_> = fam
                .meshes
                .iter()
                .map(|(_, m)| mesh_fundamental_forms(m))
                .collect::<Result<Vec<_>, _>>()?;
            let mut agreement = 0.0f64;
            if let Some((first, rest)) = forms.split_first() {
                let dom = &fam.meshes[0].1.domain;
                for other in rest {
                    for axis in 0..2 {
                        for idx in dom.indices() {
                            if (0..2).any(|ax| idx[ax] < 2 || idx[ax] + 2 >= dom.n[ax]) {
                                continue;
                            }
                            let (a, b) = (
                                first.radii[axis].get(&idx),
                                other.radii[axis].get(&idx),
                            );
                            if a.is_finite() && b.is_finite() {
                                agreement = agreement.max((a - b).abs());
                            }
                        }
                    }
                }
            }
            pass = !fam.meshes.is_empty() && agreement <= tol;
            summary = summary_base("family");
            summary.insert("bundle".into(), json!(bundle.bundle));
            summary.insert("tol".into(), json!(tol));
            summary.insert("members".into(), json!(members.len()));
            summary.insert("reconstructed".into(), json!(fam.meshes.len()));
            summary.insert("radii_agreement".into(), json!(agreement));
            summary.insert(
                "skipped".into(),
                Value::Array(
                    fam.skipped
                        .iter()
                        .map(|(i, why)| json!({"member": i, "reason": why}))
                        .collect(),
                ),
            );
        }
    }

    summary.insert("pass".into(), json!(pass));
    let value = Value::Object(summary);
    let summary_path = out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    atomic_write(&summary_path, text.as_bytes())?;
    Ok(RunOutcome {
        summary: value,
        pass,
        summary_path,
    })
}

/// Parses a `--grid n1xn2[xn3]` argument.
pub fn parse_grid_arg(s: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = s.split('x').collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(format!("expected n1xn2 or n1xn2xn3, got `{s}`"));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<usize>()
                .map_err(|e| format!("bad grid size `{p}`: {e}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_json(scene: &str, out: &Path) -> Result<RunOutcome, SceneError> {
        let config: SceneConfig = serde_json::from_str(scene)?;
        run(&config, &CliOverrides::default(), out)
    }

    #[test]
    fn verify_curvature_scene_passes_on_the_quadric() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_json(
            r#"{"mode": "verify-curvature", "bundle": "quadric"}"#,
            dir.path(),
        )
        .unwrap();
        assert!(out.pass, "{}", out.summary);
        let text = std::fs::read_to_string(&out.summary_path).unwrap();
        assert!(text.contains("\"pass\": true"));
    }

    #[test]
    fn summaries_are_byte_identical_across_runs() {
        let scene = r#"{"mode": "codazzi", "bundle": "dupin"}"#;
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let o1 = run_json(scene, d1.path()).unwrap();
        let o2 = run_json(scene, d2.path()).unwrap();
        assert!(o1.pass);
        assert_eq!(
            std::fs::read(&o1.summary_path).unwrap(),
            std::fs::read(&o2.summary_path).unwrap()
        );
    }

    #[test]
    fn unknown_keys_and_unknown_modes_are_rejected() {
        assert!(serde_json::from_str::<SceneConfig>(
            r#"{"mode": "verify-curvature", "bundle": "quadric", "typo": 1}"#
        )
        .is_err());
        assert!(serde_json::from_str::<SceneConfig>(r#"{"mode": "render"}"#).is_err());
    }

    #[test]
    fn goursat_scene_writes_rotation_artifact_and_frames_reads_it() {
        let dir = tempfile::tempdir().unwrap();
        let scene = r#"{
            "mode": "goursat",
            "phi": "0.3 + 0.1*R2",
            "psi": "0.2 + 0.1*R1",
            "grid": {"lo": [0.0, 0.0], "hi": [0.5, 0.5], "n": [33, 33]},
            "save": "rotation.bin"
        }"#;
        let out = run_json(scene, dir.path()).unwrap();
        assert!(out.pass, "{}", out.summary);
        let rot_path = dir.path().join("rotation.bin");
        assert!(rot_path.exists());

        let frames_scene = format!(
            r#"{{"mode": "frames", "rotation_file": {:?}, "lambda": 1.0}}"#,
            rot_path.to_str().unwrap()
        );
        let out = run_json(&frames_scene, dir.path()).unwrap();
        assert!(out.pass, "{}", out.summary);
    }

    #[test]
    fn reconstruct_scene_emits_an_obj() {
        let dir = tempfile::tempdir().unwrap();
        let scene = r#"{
            "mode": "reconstruct",
            "bundle": "dupin",
            "constants": {"a": 0.0, "b": 2.0, "c": -3.5},
            "grid": {"lo": [2.0, 0.3], "hi": [3.0, 1.0], "n": [48, 48]},
            "out_obj": "dupin.obj"
        }"#;
        let out = run_json(scene, dir.path()).unwrap();
        assert!(out.pass, "{}", out.summary);
        assert!(dir.path().join("dupin.obj").exists());
    }

    #[test]
    fn grid_argument_parsing() {
        assert_eq!(parse_grid_arg("64x64").unwrap(), vec![64, 64]);
        assert_eq!(parse_grid_arg("24x24x24").unwrap(), vec![24, 24, 24]);
        assert!(parse_grid_arg("64").is_err());
        assert!(parse_grid_arg("ax8").is_err());
    }

    #[test]
    fn tolerance_override_can_fail_a_passing_scene() {
        let dir = tempfile::tempdir().unwrap();
        let config: SceneConfig =
            serde_json::from_str(r#"{"mode": "verify-curvature", "bundle": "dupin"}"#).unwrap();
        let strict = CliOverrides {
            tol: Some(1e-18),
            ..CliOverrides::default()
        };
        let out = run(&config, &strict, dir.path()).unwrap();
        assert!(!out.pass);
    }
}
