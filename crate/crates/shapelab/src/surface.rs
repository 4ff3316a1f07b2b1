//! Surface reconstruction in E^3 from (third fundamental form, curvature
//! radii) data, a finite-difference mesh oracle for fundamental forms, and
//! OBJ export.
//!
//! Conventions: the curvature fields k^i are RADII of principal curvature;
//! Rodrigues integration uses d_i r = k^i d_i n with the outward sphere
//! normal. Flipping the global sign of k yields the mirrored surface.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::catalog::{CatalogError, CurvatureField, ExampleBundle};
use crate::codazzi::{codazzi_residual, CodazziError};
use crate::expr::ExprError;
use crate::grid::{GridDomain, GridError, GridField};
use crate::metric::{christoffel_ab, curvature_one_residual, DiagonalMetric, MetricError};

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Codazzi(#[from] CodazziError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("expected {expected} components, got {got}")]
    Dim { expected: usize, got: usize },
    #[error("third form does not have constant curvature 1 (residual {max:e})")]
    NotCurvatureOne { max: f64 },
    #[error("curvature radii do not satisfy the Codazzi equations of the third form (residual {max:e})")]
    CodazziMismatch { max: f64 },
    #[error("third form coefficient G_{index}{index} is not positive on the chart (min {min:e})")]
    NonPositiveForm { index: usize, min: f64 },
    #[error("curvature radius k^{index} is not bounded away from 0 (min |k| = {min:e}); Gauss map chart degenerates")]
    DegenerateRadius { index: usize, min: f64 },
    #[error("base pose (e1, e2, n) is not orthonormal (defect {defect:e})")]
    BadBasePose { defect: f64 },
    #[error("sphere frame drift {drift:e} exceeds tolerance at R = {at:?}; inputs are inconsistent")]
    FrameDrift { drift: f64, at: Vec<f64> },
    #[error("mixed-partial defect {max:e} of the position field at R = {at:?}; inputs are inconsistent")]
    MixedPartial { max: f64, at: Vec<f64> },
    #[error("Picard iteration for the sphere frame did not converge (last update {last:e})")]
    NoConvergence { last: f64 },
    #[error("degenerate tangent plane at R = {at:?}")]
    DegenerateTangent { at: Vec<f64> },
    #[error("bundle `{name}` has no closed-form curvature radii")]
    NoCurvatures { name: String },
    #[error("deformation family is empty")]
    EmptyFamily,
}

/// Where a mesh came from: bundle name, pencil parameter (if any), and the
/// constants it was built with.
#[derive(Debug, Clone, Default)]
pub struct MeshProvenance {
    pub bundle: String,
    pub lambda: Option<f64>,
    pub params: Vec<(String, f64)>,
}

/// Initial data for the Gauss-image moving frame: position r0, sphere point
/// n0 and tangent pair (e1, e2) at the low corner of the domain. The theory
/// leaves orientation and chart free; the default pins n = (0,0,1) with
/// e1 = (1,0,0), e2 = (0,1,0), and the surface family is defined up to
/// rigid motion.
#[derive(Debug, Clone)]
pub struct BasePose {
    pub r0: [f64; 3],
    pub n0: [f64; 3],
    pub e1: [f64; 3],
    pub e2: [f64; 3],
}

impl Default for BasePose {
    fn default() -> BasePose {
        BasePose {
            r0: [0.0; 3],
            n0: [0.0, 0.0, 1.0],
            e1: [1.0, 0.0, 0.0],
            e2: [0.0, 1.0, 0.0],
        }
    }
}

/// Grid-connected sampled surface in E^3 (quad connectivity is implicit in
/// the grid: node (i, j) is adjacent to (i±1, j) and (i, j±1)).
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub domain: GridDomain,
    /// r[a]: component a of the position field
    pub r: Vec<GridField>,
    /// normal[a]: component a of the unit normal (the Gauss image point)
    pub normal: Vec<GridField>,
    pub provenance: MeshProvenance,
}

impl SurfaceMesh {
    pub fn vertex_count(&self) -> usize {
        self.domain.len()
    }

    pub fn quad_count(&self) -> usize {
        (self.domain.n[0] - 1) * (self.domain.n[1] - 1)
    }

    /// Max deviation of the normal field from unit length.
    pub fn normal_defect(&self) -> f64 {
        let mut m = 0.0f64;
        for idx in self.domain.indices() {
            let norm: f64 = (0..3)
                .map(|a| self.normal[a].get(&idx).powi(2))
                .sum::<f64>()
                .sqrt();
            m = m.max((norm - 1.0).abs());
        }
        m
    }
}

fn pose_defect(base: &BasePose) -> f64 {
    let rows = [&base.e1, &base.e2, &base.n0];
    let mut defect = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..3).map(|a| rows[i][a] * rows[j][a]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((dot - target).abs());
        }
    }
    defect
}

/// Reconstructs the surface with third fundamental form `m` and principal
/// curvature radii `k` over the chart of `m`: integrates the sphere moving
/// frame (e1, e2, n) with d_i n = h_i e_i (h_i = sqrt(G_ii)), then the
/// position by the Rodrigues relation d_i r = k^i d_i n.
///
/// Preconditions: `m` has constant curvature 1 (<= 1e-6), `k` solves the
/// Codazzi system of `m` (<= 1e-5), the chart is umbilic-free, G_ii > 0 and
/// |k^i| >= 1e-6 on the chart.
pub fn reconstruct_surface(
    m: &DiagonalMetric,
    k: &CurvatureField,
    base: &BasePose,
    provenance: MeshProvenance,
) -> Result<SurfaceMesh, SurfaceError> {
    let dom = m.domain.clone();
    if m.n() != 2 || k.k.len() != 2 {
        return Err(SurfaceError::Dim {
            expected: 2,
            got: m.n().min(k.k.len()),
        });
    }
    let defect = pose_defect(base);
    if defect > 1e-12 {
        return Err(SurfaceError::BadBasePose { defect });
    }
    let c1 = curvature_one_residual(m)?;
    if !(c1.max <= 1e-6) {
        return Err(SurfaceError::NotCurvatureOne { max: c1.max });
    }
    k.validate_umbilic_free(&dom)?;
    let coeffs = christoffel_ab(m)?;
    let cres = codazzi_residual(k, &coeffs, &dom)?;
    if !(cres.max <= 1e-5) {
        return Err(SurfaceError::CodazziMismatch { max: cres.max });
    }

    let g: Vec<GridField> = (0..2).map(|i| m.g[i].sample(&dom)).collect();
    for (i, gi) in g.iter().enumerate() {
        let min = gi.data.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(SurfaceError::NonPositiveForm { index: i + 1, min });
        }
    }
    let h: Vec<GridField> = g.iter().map(|gi| gi.map(f64::sqrt)).collect();
    let kf: Vec<GridField> = (0..2).map(|i| k.k[i].sample(&dom)).collect();
    for (i, ki) in kf.iter().enumerate() {
        let min = ki.data.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
        if !(min >= 1e-6) {
            return Err(SurfaceError::DegenerateRadius { index: i + 1, min });
        }
    }

    // rotation coefficients of the orthogonal net on the unit sphere:
    // p = d2 h1 / h2, q = d1 h2 / h1, via dh = dG / (2 h) (exact when the
    // form is symbolic)
    let dg1_d2 = m.g[0].derivative(1, &dom).sample(&dom);
    let dg2_d1 = m.g[1].derivative(0, &dom).sample(&dom);
    let p = dg1_d2
        .zip(&h[0], |dg, h1| dg / (2.0 * h1))
        .zip(&h[1], |v, h2| v / h2);
    let q = dg2_d1
        .zip(&h[1], |dg, h2| dg / (2.0 * h2))
        .zip(&h[0], |v, h1| v / h1);

    // a[axis][row][col]: d_axis f_row = sum_col a[axis][row][col] f_col
    // over the frame rows (e1, e2, n)
    let mut a: Vec<Vec<Vec<Option<GridField>>>> = vec![vec![vec![None; 3]; 3]; 2];
    a[0][0][1] = Some(p.map(|v| -v));
    a[0][0][2] = Some(h[0].map(|v| -v));
    a[0][1][0] = Some(p.clone());
    a[0][2][0] = Some(h[0].clone());
    a[1][0][1] = Some(q.clone());
    a[1][1][0] = Some(q.map(|v| -v));
    a[1][1][2] = Some(h[1].map(|v| -v));
    a[1][2][1] = Some(h[1].clone());

    let spacing = [dom.spacing(0), dom.spacing(1)];
    let frame0 = [base.e1, base.e2, base.n0];
    let mut frame: Vec<Vec<GridField>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|comp| GridField::constant(&dom.n, frame0[i][comp]))
                .collect()
        })
        .collect();

    let telescope = |base_val: f64, rhs: &dyn Fn(usize) -> GridField| -> GridField {
        let mut acc = GridField::constant(&dom.n, base_val);
        for axis in 0..2 {
            let mut term = rhs(axis).cumint(axis, spacing[axis]);
            for later in axis + 1..2 {
                term = term.extend_base(later);
            }
            acc = acc.zip(&term, |x, y| x + y);
        }
        acc
    };

    let mut last = f64::INFINITY;
    let mut converged = false;
    for _ in 0..200 {
        let mut update = 0.0f64;
        let mut next = Vec::with_capacity(3);
        for row in 0..3 {
            let mut comps = Vec::with_capacity(3);
            for comp in 0..3 {
                let f = telescope(frame0[row][comp], &|axis| {
                    let mut acc = GridField::zeros(&dom.n);
                    for (col, entry) in a[axis][row].iter().enumerate() {
                        if let Some(cf) = entry {
                            acc = acc
                                .zip(&cf.zip(&frame[col][comp], |c, x| c * x), |x, y| x + y);
                        }
                    }
                    acc
                });
                update = update.max(f.zip(&frame[row][comp], |x, y| x - y).max_abs());
                comps.push(f);
            }
            next.push(comps);
        }
        frame = next;
        last = update;
        if update < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged && !(last < 1e-9) {
        return Err(SurfaceError::NoConvergence { last });
    }

    // drift of the frame Gram matrix, with the locus of the worst node
    let mut drift = 0.0f64;
    let mut drift_at = vec![0usize; 2];
    for idx in dom.indices() {
        for i in 0..3 {
            for j in i..3 {
                let dot: f64 = (0..3)
                    .map(|comp| frame[i][comp].get(&idx) * frame[j][comp].get(&idx))
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                let d = (dot - target).abs();
                if d > drift {
                    drift = d;
                    drift_at = idx.clone();
                }
            }
        }
    }
    if drift > 1e-5 {
        return Err(SurfaceError::FrameDrift {
            drift,
            at: dom.node_coords(&drift_at),
        });
    }

    // Rodrigues: d_i r = k^i d_i n = k^i h_i e_i
    let kh: Vec<GridField> = (0..2).map(|i| kf[i].zip(&h[i], |kv, hv| kv * hv)).collect();
    let r: Vec<GridField> = (0..3)
        .map(|comp| telescope(base.r0[comp], &|axis| kh[axis].zip(&frame[axis][comp], |c, e| c * e)))
        .collect();

    // mixed-partial consistency of the position field
    let mut mixed = 0.0f64;
    let mut mixed_at = vec![0usize; 2];
    let scale = 1.0 + r.iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    for comp in 0..3 {
        let pq = r[comp].derivative(0, spacing[0]).derivative(1, spacing[1]);
        let qp = r[comp].derivative(1, spacing[1]).derivative(0, spacing[0]);
        let d = pq.zip(&qp, |x, y| x - y);
        for idx in dom.indices() {
            if dom.is_interior(&idx) {
                let v = d.get(&idx).abs();
                if v > mixed {
                    mixed = v;
                    mixed_at = idx.clone();
                }
            }
        }
    }
    if mixed > 1e-5 * scale {
        return Err(SurfaceError::MixedPartial {
            max: mixed,
            at: dom.node_coords(&mixed_at),
        });
    }

    // the drift gate above bounds the integration error; the stored normal
    // is renormalized so the mesh invariant ||n|| = 1 holds node-wise
    let raw = frame.pop().expect("frame has three rows");
    let mut normal = raw.clone();
    for idx in dom.indices() {
        let norm: f64 = (0..3).map(|c| raw[c].get(&idx).powi(2)).sum::<f64>().sqrt();
        for c in 0..3 {
            normal[c].set(&idx, raw[c].get(&idx) / norm);
        }
    }
    Ok(SurfaceMesh {
        domain: dom,
        r,
        normal,
        provenance,
    })
}

/// Reconstructs a catalog bundle with its closed-form curvature radii.
pub fn reconstruct_bundle(
    bundle: &ExampleBundle,
    base: &BasePose,
) -> Result<SurfaceMesh, SurfaceError> {
    let k = bundle
        .curvatures
        .as_ref()
        .ok_or_else(|| SurfaceError::NoCurvatures {
            name: bundle.name.as_str().to_string(),
        })?;
    let provenance = MeshProvenance {
        bundle: bundle.name.as_str().to_string(),
        lambda: None,
        params: bundle.constants.iter().map(|(k, v)| (k.clone(), *v)).collect(),
    };
    reconstruct_surface(&bundle.metric, k, base, provenance)
}

/// Reconstruction of an S-deformation family: members must share the grid
/// and the curvature radii; each member contributes its own third form.
/// Members failing a precondition are skipped with the reason.
#[derive(Debug)]
pub struct FamilyOutcome {
    pub meshes: Vec<(usize, SurfaceMesh)>,
    pub skipped: Vec<(usize, String)>,
}

pub fn deformation_family(
    members: &[ExampleBundle],
    base: &BasePose,
) -> Result<FamilyOutcome, SurfaceError> {
    let first = members.first().ok_or(SurfaceError::EmptyFamily)?;
    let ref_k = first
        .curvatures
        .as_ref()
        .ok_or_else(|| SurfaceError::NoCurvatures {
            name: first.name.as_str().to_string(),
        })?;
    let dom = &first.domain;
    let ref_kf: Vec<GridField> = ref_k.k.iter().map(|f| f.sample(dom)).collect();

    let mut out = FamilyOutcome {
        meshes: Vec::new(),
        skipped: Vec::new(),
    };
    for (idx, member) in members.iter().enumerate() {
        if member.domain.lo != dom.lo || member.domain.hi != dom.hi || member.domain.n != dom.n {
            out.skipped
                .push((idx, "grid differs from the family grid".to_string()));
            continue;
        }
        let k = match member.curvatures.as_ref() {
            Some(k) => k,
            None => {
                out.skipped
                    .push((idx, "no closed-form curvature radii".to_string()));
                continue;
            }
        };
        let mut kdiff = 0.0f64;
        for (i, rf) in ref_kf.iter().enumerate() {
            kdiff = kdiff.max(k.k[i].sample(dom).zip(rf, |x, y| x - y).max_abs());
        }
        if kdiff > 1e-8 {
            out.skipped.push((
                idx,
                format!("curvature radii differ from the family data by {kdiff:e}"),
            ));
            continue;
        }
        let provenance = MeshProvenance {
            bundle: member.name.as_str().to_string(),
            lambda: None,
            params: member.constants.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        };
        match reconstruct_surface(&member.metric, k, base, provenance) {
            Ok(mesh) => out.meshes.push((idx, mesh)),
            Err(e) => out.skipped.push((idx, e.to_string())),
        }
    }
    Ok(out)
}

/// Finite-difference fundamental forms of a mesh: an oracle independent of
/// the reconstruction path (2nd-order stencils; boundary nodes are NaN).
/// Curvature radii are direction-matched to the coordinate axes via the
/// Rodrigues quotient (d_i r . d_i r)/(d_i r . d_i nu); a vanishing
/// denominator is flagged as an infinite radius (flat direction).
#[derive(Debug)]
pub struct MeshForms {
    pub domain: GridDomain,
    /// E, F, G
    pub first: [GridField; 3],
    /// L, M, N (against the oracle normal)
    pub second: [GridField; 3],
    /// third form from oracle normals: (nu_1.nu_1, nu_1.nu_2, nu_2.nu_2)
    pub third: [GridField; 3],
    /// curvature RADII along the two coordinate directions
    pub radii: [GridField; 2],
    pub mean_curvature: GridField,
    /// the unit normal field the forms were computed against
    pub normal: Vec<GridField>,
    /// interior nodes flagged with an infinite radius
    pub flat_flags: usize,
}

/// 2nd-order first derivative: central in the interior, one-sided at edges.
fn d1_second_order(f: &GridField, axis: usize, h: f64) -> GridField {
    let dims = f.dims.clone();
    let mut out = GridField::zeros(&dims);
    let n = dims[axis];
    let dom_like = |idx: &[usize], shift: isize| -> f64 {
        let mut j = idx.to_vec();
        j[axis] = (idx[axis] as isize + shift) as usize;
        f.get(&j)
    };
    let mut iter_dims = GridDomain::new(
        vec![0.0; dims.len()],
        vec![1.0; dims.len()],
        dims.clone(),
    )
    .expect("iteration domain");
    iter_dims.margin = 0.0;
    for idx in iter_dims.indices() {
        let i = idx[axis];
        let v = if i == 0 {
            (-3.0 * dom_like(&idx, 0) + 4.0 * dom_like(&idx, 1) - dom_like(&idx, 2)) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * dom_like(&idx, 0) - 4.0 * dom_like(&idx, -1) + dom_like(&idx, -2)) / (2.0 * h)
        } else {
            (dom_like(&idx, 1) - dom_like(&idx, -1)) / (2.0 * h)
        };
        out.set(&idx, v);
    }
    out
}

/// 2nd-order pure second derivative; NaN at the boundary along `axis`.
fn d2_second_order(f: &GridField, axis: usize, h: f64) -> GridField {
    let dims = f.dims.clone();
    let mut out = GridField::constant(&dims, f64::NAN);
    let n = dims[axis];
    let mut iter_dims = GridDomain::new(
        vec![0.0; dims.len()],
        vec![1.0; dims.len()],
        dims.clone(),
    )
    .expect("iteration domain");
    iter_dims.margin = 0.0;
    for idx in iter_dims.indices() {
        let i = idx[axis];
        if i == 0 || i == n - 1 {
            continue;
        }
        let mut jm = idx.clone();
        jm[axis] -= 1;
        let mut jp = idx.clone();
        jp[axis] += 1;
        out.set(&idx, (f.get(&jp) - 2.0 * f.get(&idx) + f.get(&jm)) / (h * h));
    }
    out
}

pub fn mesh_fundamental_forms(mesh: &SurfaceMesh) -> Result<MeshForms, SurfaceError> {
    let dom = &mesh.domain;
    let h = [dom.spacing(0), dom.spacing(1)];
    let ru: Vec<GridField> = (0..3).map(|c| d1_second_order(&mesh.r[c], 0, h[0])).collect();
    let rv: Vec<GridField> = (0..3).map(|c| d1_second_order(&mesh.r[c], 1, h[1])).collect();

    // degenerate-tangent detection via the cross product; the unit normal
    // itself is the mesh's stored Gauss-image field (every mesh carries vn
    // records), so curvature extraction probes the differential relation
    // between the independently integrated r and n fields
    for idx in dom.indices() {
        let a: Vec<f64> = (0..3).map(|c| ru[c].get(&idx)).collect();
        let b: Vec<f64> = (0..3).map(|c| rv[c].get(&idx)).collect();
        let cx = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let norm = (cx[0] * cx[0] + cx[1] * cx[1] + cx[2] * cx[2]).sqrt();
        if !(norm > 1e-12) {
            return Err(SurfaceError::DegenerateTangent {
                at: dom.node_coords(&idx),
            });
        }
    }
    let nu: Vec<GridField> = mesh.normal.clone();
    let nuu: Vec<GridField> = (0..3).map(|c| d1_second_order(&nu[c], 0, h[0])).collect();
    let nuv: Vec<GridField> = (0..3).map(|c| d1_second_order(&nu[c], 1, h[1])).collect();

    let dot3 = |x: &[GridField], y: &[GridField]| -> GridField {
        let mut acc = GridField::zeros(&dom.n);
        for c in 0..3 {
            acc = acc.zip(&x[c].zip(&y[c], |p, q| p * q), |p, q| p + q);
        }
        acc
    };

    let e = dot3(&ru, &ru);
    let f = dot3(&ru, &rv);
    let g = dot3(&rv, &rv);
    let third = [dot3(&nuu, &nuu), dot3(&nuu, &nuv), dot3(&nuv, &nuv)];

    let ruu: Vec<GridField> = (0..3).map(|c| d2_second_order(&mesh.r[c], 0, h[0])).collect();
    let rvv: Vec<GridField> = (0..3).map(|c| d2_second_order(&mesh.r[c], 1, h[1])).collect();
    let ruv: Vec<GridField> = (0..3)
        .map(|c| d1_second_order(&d1_second_order(&mesh.r[c], 0, h[0]), 1, h[1]))
        .collect();
    let l = dot3(&ruu, &nu);
    let mm = dot3(&ruv, &nu);
    let nn = dot3(&rvv, &nu);

    // Rodrigues quotient radii with an infinite-radius flag
    let mut flat_flags = 0usize;
    let mut radii = [GridField::constant(&dom.n, f64::NAN), GridField::constant(&dom.n, f64::NAN)];
    let tangents = [&ru, &rv];
    let normals_d = [&nuu, &nuv];
    for idx in dom.indices() {
        let interior = (0..2).all(|ax| idx[ax] > 0 && idx[ax] < dom.n[ax] - 1);
        if !interior {
            continue;
        }
        for axis in 0..2 {
            let num: f64 = (0..3)
                .map(|c| tangents[axis][c].get(&idx).powi(2))
                .sum();
            let den: f64 = (0..3)
                .map(|c| tangents[axis][c].get(&idx) * normals_d[axis][c].get(&idx))
                .sum();
            let v = if den.abs() <= 1e-8 * (1.0 + num) {
                flat_flags += 1;
                f64::INFINITY
            } else {
                num / den
            };
            radii[axis].set(&idx, v);
        }
    }
    let mean_curvature = radii[0].zip(&radii[1], |r1, r2| {
        let k1 = if r1.is_finite() { 1.0 / r1 } else { 0.0 };
        let k2 = if r2.is_finite() { 1.0 / r2 } else { 0.0 };
        if r1.is_nan() || r2.is_nan() {
            f64::NAN
        } else {
            0.5 * (k1 + k2)
        }
    });

    Ok(MeshForms {
        domain: dom.clone(),
        first: [e, f, g],
        second: [l, mm, nn],
        third,
        radii,
        mean_curvature,
        normal: nu,
        flat_flags,
    })
}

/// Least-squares implicit quadric fit: assembles the design matrix of
/// monomials [x^2, y^2, z^2, xy, xz, yz, x, y, z, 1] over all mesh nodes
/// and returns sigma_min/sigma_max of its SVD (relative residual of the
/// best-fit quadric).
pub fn quadric_fit_residual(mesh: &SurfaceMesh) -> f64 {
    let n = mesh.domain.len();
    let mut rows = Vec::with_capacity(n * 10);
    for idx in mesh.domain.indices() {
        let (x, y, z) = (
            mesh.r[0].get(&idx),
            mesh.r[1].get(&idx),
            mesh.r[2].get(&idx),
        );
        rows.extend_from_slice(&[x * x, y * y, z * z, x * y, x * z, y * z, x, y, z, 1.0]);
    }
    let m = DMatrix::from_row_slice(n, 10, &rows);
    let svd = m.svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    smin / smax
}

/// Writes the mesh as ASCII OBJ: `v` and `vn` records in row-major node
/// order (9 significant digits), quads split into two triangles each.
pub fn export_obj(mesh: &SurfaceMesh, path: &Path) -> Result<(), SurfaceError> {
    let mut text = String::new();
    let (n1, n2) = (mesh.domain.n[0], mesh.domain.n[1]);
    for idx in mesh.domain.indices() {
        let _ = writeln!(
            text,
            "v {:.8e} {:.8e} {:.8e}",
            mesh.r[0].get(&idx),
            mesh.r[1].get(&idx),
            mesh.r[2].get(&idx)
        );
    }
    for idx in mesh.domain.indices() {
        let _ = writeln!(
            text,
            "vn {:.8e} {:.8e} {:.8e}",
            mesh.normal[0].get(&idx),
            mesh.normal[1].get(&idx),
            mesh.normal[2].get(&idx)
        );
    }
    let vid = |i: usize, j: usize| i * n2 + j + 1;
    for i in 0..n1 - 1 {
        for j in 0..n2 - 1 {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            let _ = writeln!(text, "f {a}//{a} {b}//{b} {c}//{c}");
            let _ = writeln!(text, "f {a}//{a} {c}//{c} {d}//{d}");
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}
