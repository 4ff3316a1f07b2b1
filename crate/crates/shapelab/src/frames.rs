//! Integration of the lambda-dependent orthonormal frame and radius-vector
//! of the n-orthogonal coordinate system, coordinate-hypersurface shape
//! extraction, and the shape-operator scaling law.

use std::path::Path;

use thiserror::Error;

use crate::expr::ExprError;
use crate::grid::{GridDomain, GridError, GridField, ResidualReport};
use crate::lame::{load_fields, save_fields, LameError, RotationData};

#[derive(Debug, Error)]
pub enum FrameError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Lame(#[from] LameError),
    #[error("lambda + eta_{index} is not positive on the grid (min {min:e}); real frame integration impossible")]
    LambdaNotPositive { index: usize, min: f64 },
    #[error("initial frame is not orthonormal (defect {defect:e})")]
    BadInitialFrame { defect: f64 },
    #[error("frame orthonormality drift {drift:e} exceeds 1e-4; rotation data is inconsistent")]
    Drift { drift: f64 },
    #[error("Picard iteration for the frame did not converge (last update {last:e})")]
    NoConvergence { last: f64 },
    #[error("slice level {level} out of range for axis {axis}")]
    BadSlice { axis: usize, level: usize },
    #[error("expected {expected} components, got {got}")]
    Dim { expected: usize, got: usize },
}

/// Which frame system to transport.
///
/// `Euclidean` is the pure frame of the n-orthogonal coordinate system in
/// E^n; it is compatible when the rotation coefficients solve the flat-pencil
/// (Darboux-type) system without the curvature coupling. `Sphere` is the
/// n = 2 frame of the orthogonal system on S^2 governed by the 3x3 matrices
/// with the H_i row/column; it is the compatible choice for rotation data
/// solving the surface system with the H_1 H_2 term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameModel {
    Euclidean,
    Sphere,
}

#[derive(Debug, Clone)]
pub struct FrameOptions {
    /// Gram-Schmidt projection applied after each Picard sweep; off by
    /// default so that Gram drift stays a diagnostic.
    pub reorthonormalize: bool,
    /// axis order of the telescoping integration path
    pub axis_order: Vec<usize>,
    pub model: FrameModel,
}

impl FrameOptions {
    /// Default: the sphere frame for n = 2 (surface data), the Euclidean
    /// frame otherwise.
    pub fn for_dim(n: usize) -> FrameOptions {
        FrameOptions {
            reorthonormalize: false,
            axis_order: (0..n).collect(),
            model: if n == 2 {
                FrameModel::Sphere
            } else {
                FrameModel::Euclidean
            },
        }
    }

    pub fn with_model(mut self, model: FrameModel) -> FrameOptions {
        self.model = model;
        self
    }
}

/// Orthonormal frame vectors phi_i and position r over the grid,
/// integrated at a fixed lambda.
///
/// For the `Sphere` model (n = 2) the frame lives in the ambient E^3: the
/// first two vectors are tangent to the coordinate curves and the third is
/// the moving point of the unit sphere, so `ambient = 3` while `n = 2`.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub lambda: f64,
    pub domain: GridDomain,
    /// number of coordinates
    pub n: usize,
    /// ambient dimension (n, or 3 for the n = 2 sphere frame)
    pub ambient: usize,
    /// phi[i][a]: component a of frame vector phi_i (ambient x ambient)
    pub phi: Vec<Vec<GridField>>,
    /// r[a]: component a of the radius-vector (ambient components)
    pub r: Vec<GridField>,
}

fn sqrt_shift(rd: &RotationData, lambda: f64, i: usize) -> Result<GridField, FrameError> {
    let g = rd.eta_grid(i);
    let mut min = f64::INFINITY;
    for &v in &g.data {
        min = min.min(lambda + v);
    }
    if !(min > 1e-9) {
        return Err(FrameError::LambdaNotPositive { index: i + 1, min });
    }
    Ok(g.map(|v| (lambda + v).sqrt()))
}

/// Integrates the frame equations and d_i r = (H_i / sqrt(lambda+eta_i)) phi_i
/// from constant corner data by Picard iteration on the telescoping path
/// determined by `opts.axis_order`.
pub fn integrate_frame(
    rd: &RotationData,
    lambda: f64,
    base: &[f64],
    frame0: &[Vec<f64>],
    opts: &FrameOptions,
) -> Result<FrameField, FrameError> {
    let n = rd.n();
    let dom = rd.domain.clone();
    let ambient = match opts.model {
        FrameModel::Euclidean => n,
        FrameModel::Sphere => {
            if n != 2 {
                return Err(FrameError::Dim { expected: 2, got: n });
            }
            3
        }
    };
    if base.len() != ambient
        || frame0.len() != ambient
        || frame0.iter().any(|row| row.len() != ambient)
    {
        return Err(FrameError::Dim {
            expected: ambient,
            got: base.len().min(frame0.len()),
        });
    }
    let mut defect = 0.0f64;
    for i in 0..ambient {
        for j in 0..ambient {
            let dot: f64 = (0..ambient).map(|a| frame0[i][a] * frame0[j][a]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((dot - target).abs());
        }
    }
    if defect > 1e-12 {
        return Err(FrameError::BadInitialFrame { defect });
    }

    let s: Vec<GridField> = (0..n)
        .map(|i| sqrt_shift(rd, lambda, i))
        .collect::<Result<_, _>>()?;
    // hs[i] = H_i / sqrt(lambda + eta_i)
    let hs: Vec<GridField> = (0..n).map(|i| rd.h[i].zip(&s[i], |h, si| h / si)).collect();
    // a_mat[m][row][col]: d_m phi_row = sum_col a_mat[m][row][col] phi_col
    // (skew-symmetric in row/col). For the sphere frame the extra row/column
    // carries the H_m/sqrt(lambda+eta_m) curvature coupling.
    let mut a_mat: Vec<Vec<Vec<Option<GridField>>>> =
        vec![vec![vec![None; ambient]; ambient]; n];
    for m in 0..n {
        for i in 0..n {
            if i == m {
                continue;
            }
            let c = rd
                .beta(i, m)
                .zip(&s[i], |b, si| b * si)
                .zip(&s[m], |v, sm| v / sm);
            a_mat[m][m][i] = Some(c.map(|v| -v));
            a_mat[m][i][m] = Some(c);
        }
        if ambient > n {
            a_mat[m][m][n] = Some(hs[m].clone());
            a_mat[m][n][m] = Some(hs[m].map(|v| -v));
        }
    }
    let spacing: Vec<f64> = (0..n).map(|m| dom.spacing(m)).collect();

    let mut phi: Vec<Vec<GridField>> = (0..ambient)
        .map(|i| {
            (0..ambient)
                .map(|a| GridField::constant(&dom.n, frame0[i][a]))
                .collect()
        })
        .collect();
    let mut r: Vec<GridField> = (0..ambient)
        .map(|a| GridField::constant(&dom.n, base[a]))
        .collect();

    // d_m phi_i component a given the current phi
    let rhs_phi = |phi: &Vec<Vec<GridField>>, i: usize, a: usize, m: usize| -> GridField {
        let mut acc = GridField::zeros(&dom.n);
        for (col, entry) in a_mat[m][i].iter().enumerate() {
            if let Some(c) = entry {
                acc = acc.zip(&c.zip(&phi[col][a], |cv, p| cv * p), |x, y| x + y);
            }
        }
        acc
    };

    let telescope = |base_val: f64, rhs: &dyn Fn(usize) -> GridField| -> GridField {
        let mut acc = GridField::constant(&dom.n, base_val);
        for (t, &m) in opts.axis_order.iter().enumerate() {
            let mut term = rhs(m).cumint(m, spacing[m]);
            for &later in &opts.axis_order[t + 1..] {
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
        let mut new_phi = Vec::with_capacity(ambient);
        for i in 0..ambient {
            let mut rows = Vec::with_capacity(ambient);
            for a in 0..ambient {
                let f = telescope(frame0[i][a], &|m| rhs_phi(&phi, i, a, m));
                update = update.max(f.zip(&phi[i][a], |x, y| x - y).max_abs());
                rows.push(f);
            }
            new_phi.push(rows);
        }
        if opts.reorthonormalize {
            gram_schmidt(&mut new_phi, &dom);
        }
        phi = new_phi;
        last = update;
        if update < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged && !(last < 1e-9) {
        return Err(FrameError::NoConvergence { last });
    }
    for a in 0..ambient {
        r[a] = telescope(base[a], &|m| hs[m].zip(&phi[m][a], |h, p| h * p));
    }

    let ff = FrameField {
        lambda,
        domain: dom,
        n,
        ambient,
        phi,
        r,
    };
    let drift = ff.gram_drift();
    if drift > 1e-4 {
        return Err(FrameError::Drift { drift });
    }
    Ok(ff)
}

fn gram_schmidt(phi: &mut [Vec<GridField>], dom: &GridDomain) {
    let n = phi.len();
    for idx in dom.indices() {
        let mut v: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|a| phi[i][a].get(&idx)).collect())
            .collect();
        for i in 0..n {
            for k in 0..i {
                let dot: f64 = (0..n).map(|a| v[i][a] * v[k][a]).sum();
                for a in 0..n {
                    v[i][a] -= dot * v[k][a];
                }
            }
            let norm: f64 = (0..n).map(|a| v[i][a] * v[i][a]).sum::<f64>().sqrt();
            if norm > 0.0 {
                for a in 0..n {
                    v[i][a] /= norm;
                }
            }
        }
        for i in 0..n {
            for a in 0..n {
                phi[i][a].set(&idx, v[i][a]);
            }
        }
    }
}

impl FrameField {
    /// Max node-wise deviation of the frame Gram matrix from the identity.
    pub fn gram_drift(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.ambient {
            for j in i..self.ambient {
                let target = if i == j { 1.0 } else { 0.0 };
                let mut dot = GridField::zeros(&self.domain.n);
                for a in 0..self.ambient {
                    dot = dot.zip(&self.phi[i][a].zip(&self.phi[j][a], |x, y| x * y), |x, y| {
                        x + y
                    });
                }
                m = m.max(dot.map(|v| v - target).max_abs());
            }
        }
        m
    }

    /// Residual of (d_i r, d_j r) = delta_ij H_i^2/(lambda + eta_i).
    pub fn metric_match(&self, rd: &RotationData) -> ResidualReport {
        let dom = &self.domain;
        let dr: Vec<Vec<GridField>> = (0..self.n)
            .map(|i| {
                (0..self.ambient)
                    .map(|a| self.r[a].derivative(i, dom.spacing(i)))
                    .collect()
            })
            .collect();
        let mut named: Vec<(String, GridField)> = Vec::new();
        for i in 0..self.n {
            let eta = rd.eta_grid(i);
            for j in i..self.n {
                let mut dot = GridField::zeros(&dom.n);
                for a in 0..self.ambient {
                    dot = dot.zip(&dr[i][a].zip(&dr[j][a], |x, y| x * y), |x, y| x + y);
                }
                let res = if i == j {
                    let target = rd.h[i]
                        .zip(&eta, |h, e| h * h / (self.lambda + e));
                    dot.zip(&target, |x, y| x - y)
                } else {
                    dot
                };
                named.push((format!("metric_{}{}", i + 1, j + 1), res));
            }
        }
        let refs: Vec<(String, &GridField)> = named.iter().map(|(s, f)| (s.clone(), f)).collect();
        ResidualReport::collect_named(dom, &refs)
    }

    /// Max interior norm of d_1 d_2 r - d_2 d_1 r (and the other axis pairs).
    pub fn mixed_partial_residual(&self) -> f64 {
        let dom = &self.domain;
        let mut m = 0.0f64;
        for p in 0..self.n {
            for q in (p + 1)..self.n {
                for a in 0..self.ambient {
                    let pq = self.r[a]
                        .derivative(p, dom.spacing(p))
                        .derivative(q, dom.spacing(q));
                    let qp = self.r[a]
                        .derivative(q, dom.spacing(q))
                        .derivative(p, dom.spacing(p));
                    let d = pq.zip(&qp, |x, y| x - y);
                    for idx in dom.indices() {
                        if dom.is_interior(&idx) {
                            let v = d.get(&idx);
                            if v.is_finite() {
                                m = m.max(v.abs());
                            }
                        }
                    }
                }
            }
        }
        m
    }

    pub fn save(&self, path: &Path) -> Result<(), FrameError> {
        let mut named: Vec<(String, &GridField)> = Vec::new();
        for (i, row) in self.phi.iter().enumerate() {
            for (a, g) in row.iter().enumerate() {
                named.push((format!("phi{}_{}", i + 1, a + 1), g));
            }
        }
        for (a, g) in self.r.iter().enumerate() {
            named.push((format!("r{}", a + 1), g));
        }
        // lambda rides along as a constant pseudo-field header entry
        let lam = GridField::constant(&self.domain.n, self.lambda);
        named.push(("lambda".to_string(), &lam));
        save_fields(path, &self.domain, &[], &named)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<FrameField, FrameError> {
        let loaded = load_fields(path)?;
        let n = loaded.domain.dim();
        // field count is ambient^2 + ambient + 1
        let count = loaded.fields.len();
        let amb = (((1.0 + 4.0 * (count as f64 - 1.0)).sqrt() - 1.0) / 2.0).round() as usize;
        if amb < n || amb * amb + amb + 1 != count {
            return Err(FrameError::Dim {
                expected: n * n + n + 1,
                got: count,
            });
        }
        let phi: Vec<Vec<GridField>> = (0..amb)
            .map(|i| {
                (0..amb)
                    .map(|a| loaded.fields[i * amb + a].1.clone())
                    .collect()
            })
            .collect();
        let r: Vec<GridField> = (0..amb)
            .map(|a| loaded.fields[amb * amb + a].1.clone())
            .collect();
        let lambda = loaded.fields[amb * amb + amb].1.data[0];
        Ok(FrameField {
            lambda,
            domain: loaded.domain,
            n,
            ambient: amb,
            phi,
            r,
        })
    }
}

/// Principal curvatures of the coordinate hypersurface R^axis = const,
/// with the Weingarten cross-check residual on the slice.
pub struct ShapeSlice {
    /// grid domain of the slice (the remaining axes)
    pub domain: GridDomain,
    /// (coordinate index i, curvature field k^i) for i != axis
    pub k: Vec<(usize, GridField)>,
    /// residual of d_i phi_axis = k^i d_i r on the slice
    pub weingarten: ResidualReport,
    /// nodes excluded for |H_i| < 1e-9
    pub excluded: usize,
}

fn slice_domain(dom: &GridDomain, axis: usize) -> Result<GridDomain, FrameError> {
    let keep: Vec<usize> = (0..dom.dim()).filter(|&m| m != axis).collect();
    Ok(GridDomain::new(
        keep.iter().map(|&m| dom.lo[m]).collect(),
        keep.iter().map(|&m| dom.hi[m]).collect(),
        keep.iter().map(|&m| dom.n[m]).collect(),
    )?
    .with_margin(dom.margin))
}

pub fn hypersurface_shape(
    ff: &FrameField,
    rd: &RotationData,
    axis: usize,
    level: usize,
) -> Result<ShapeSlice, FrameError> {
    let dom = &ff.domain;
    let n = ff.n;
    if axis >= n || level >= dom.n[axis] {
        return Err(FrameError::BadSlice { axis, level });
    }
    let s_axis = sqrt_shift(rd, ff.lambda, axis)?;
    let mut excluded = 0usize;
    let mut k_full: Vec<(usize, GridField)> = Vec::new();
    for i in 0..n {
        if i == axis {
            continue;
        }
        let k = rd
            .beta(axis, i)
            .zip(&rd.h[i], |b, h| if h.abs() < 1e-9 { f64::NAN } else { b / h })
            .zip(&s_axis, |v, s| v * s);
        excluded += k.data.iter().filter(|v| !v.is_finite()).count();
        k_full.push((i, k));
    }
    // Weingarten: d_i phi_axis - k^i d_i r, on the full grid, then sliced
    let mut named: Vec<(String, GridField)> = Vec::new();
    for (i, k) in &k_full {
        for a in 0..ff.ambient {
            let dphi = ff.phi[axis][a].derivative(*i, dom.spacing(*i));
            let dr = ff.r[a].derivative(*i, dom.spacing(*i));
            let res = dphi.zip(&k.zip(&dr, |kv, d| kv * d), |x, y| x - y);
            named.push((
                format!("weingarten_{}_{}", i + 1, a + 1),
                res.slice(axis, level),
            ));
        }
    }
    let sdom = slice_domain(dom, axis)?;
    let refs: Vec<(String, &GridField)> = named.iter().map(|(s, f)| (s.clone(), f)).collect();
    let weingarten = ResidualReport::collect_named(&sdom, &refs);
    Ok(ShapeSlice {
        domain: sdom,
        k: k_full
            .into_iter()
            .map(|(i, k)| (i, k.slice(axis, level)))
            .collect(),
        weingarten,
        excluded,
    })
}

/// Formula-level check of the scaling law: on the slice R^axis = const,
/// k^i(lambda_1)/k^i(lambda_2) = sqrt((lambda_1+eta_axis)/(lambda_2+eta_axis))
/// node-wise (restricted to |k^i(lambda_2)| > 1e-8). Evaluated directly from
/// the printed curvature formula so that lambda values at which real frame
/// integration is impossible (lambda + eta_i < 0 for some other i) are
/// still comparable. The curvature-line parametrization is shared by
/// construction: both slices use the same R coordinates.
pub fn scaling_law_check(
    rd: &RotationData,
    lambda1: f64,
    lambda2: f64,
    axis: usize,
    level: usize,
) -> Result<ResidualReport, FrameError> {
    let dom = &rd.domain;
    let n = rd.n();
    if axis >= n || level >= dom.n[axis] {
        return Err(FrameError::BadSlice { axis, level });
    }
    rd.check_lambda(lambda1)?;
    rd.check_lambda(lambda2)?;
    let eta_axis = rd.eta_grid(axis).slice(axis, level);
    let sdom = slice_domain(dom, axis)?;
    let mut named: Vec<(String, GridField)> = Vec::new();
    for i in 0..n {
        if i == axis {
            continue;
        }
        let base = rd
            .beta(axis, i)
            .zip(&rd.h[i], |b, h| if h.abs() < 1e-9 { f64::NAN } else { b / h })
            .slice(axis, level);
        let res = base.zip(&eta_axis, |bh, e| {
            let (f1, f2) = (lambda1 + e, lambda2 + e);
            if f1 <= 0.0 || f2 <= 0.0 {
                return f64::NAN;
            }
            let (k1, k2) = (bh * f1.sqrt(), bh * f2.sqrt());
            if k2.abs() <= 1e-8 {
                f64::NAN
            } else {
                k1 / k2 - (f1 / f2).sqrt()
            }
        });
        named.push((format!("scaling_{}", i + 1), res));
    }
    let refs: Vec<(String, &GridField)> = named.iter().map(|(s, f)| (s.clone(), f)).collect();
    Ok(ResidualReport::collect_named(&sdom, &refs))
}
