//! Rotation-coefficient systems of orthogonal nets: the n = 2 nonlinear
//! system coupling Lame coefficients to a curvature-1 pencil, its Lax pairs,
//! the Darboux-type system for n >= 3, constant-eta integrals, and the
//! Goursat solvers for the associated Monge-Ampere reductions.
//!
//! All solvers are Picard iterations on the equivalent Volterra integral
//! equations, using 4th-order cumulative quadrature, so the first-order
//! residuals are limited only by the grid resolution.

use std::io::Read as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ExprError, ScalarExpr};
use crate::grid::{GridDomain, GridError, GridField, ResidualReport};

#[derive(Debug, Error)]
pub enum LameError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("dimension {got} unsupported here (expected {expected})")]
    Dim { expected: String, got: usize },
    #[error("lambda = {lambda}: lambda + eta_{index} vanishes on the grid")]
    LambdaAtPole { lambda: f64, index: usize },
    #[error("eta_{i} and eta_{j} coincide near {coords:?}")]
    CoincidentEta { i: usize, j: usize, coords: Vec<f64> },
    #[error("eta_{index} is not constant")]
    NonConstantEta { index: usize },
    #[error("eta_{index} must depend on R{index} only")]
    EtaWrongVariable { index: usize },
    #[error("solution blow-up (|field| > 1e6) near {coords:?}")]
    BlowUp { coords: Vec<f64> },
    #[error("Picard iteration failed to converge (last change {change})")]
    NoConvergence { change: f64 },
    #[error("parametrization chart departure near {coords:?}: {detail}")]
    ChartDeparture { coords: Vec<f64>, detail: String },
    #[error("malformed field file: {0}")]
    BadFile(String),
}

/// Lame coefficients H_i and rotation coefficients beta_ij of an orthogonal
/// net, tabulated on a grid, together with the pencil functions eta_i(R^i).
#[derive(Debug, Clone)]
pub struct RotationData {
    pub domain: GridDomain,
    pub h: Vec<GridField>,
    /// beta[i][j] for i != j; diagonal entries are None.
    pub beta: Vec<Vec<Option<GridField>>>,
    pub eta: Vec<ScalarExpr>,
}

impl RotationData {
    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn beta(&self, i: usize, j: usize) -> &GridField {
        self.beta[i][j].as_ref().expect("off-diagonal index")
    }

    pub fn eta_grid(&self, i: usize) -> GridField {
        GridField::sample(&self.eta[i], &self.domain)
    }

    pub fn eta_prime_grid(&self, i: usize) -> GridField {
        GridField::sample(&self.eta[i].differentiate(&format!("R{}", i + 1)), &self.domain)
    }

    /// Fails when lambda + eta_i has a node within 1e-9 of zero.
    pub fn check_lambda(&self, lambda: f64) -> Result<(), LameError> {
        for i in 0..self.n() {
            let g = self.eta_grid(i);
            if g.data.iter().any(|&v| !(lambda + v).is_finite() || (lambda + v).abs() < 1e-9) {
                return Err(LameError::LambdaAtPole { lambda, index: i + 1 });
            }
        }
        Ok(())
    }
}

/// Residuals of the four n = 2 equations coupling H_1, H_2, beta_12,
/// beta_21 to a constant-curvature-1 metric pencil:
/// the two linear Lame equations, the flatness of the base metric, and the
/// eta-weighted constraint with the H_1 H_2 curvature term.
pub fn surface_system_residual(rd: &RotationData) -> ResidualReport {
    assert_eq!(rd.n(), 2, "surface_system_residual is the n = 2 form");
    let dom = &rd.domain;
    let (h0, h1) = (dom.spacing(0), dom.spacing(1));
    let b12 = rd.beta(0, 1);
    let b21 = rd.beta(1, 0);
    let d1h2 = rd.h[1].derivative(0, h0);
    let d2h1 = rd.h[0].derivative(1, h1);
    let d1b12 = b12.derivative(0, h0);
    let d2b21 = b21.derivative(1, h1);
    let e1 = d1h2.zip(&b12.zip(&rd.h[0], |b, h| b * h), |a, b| a - b);
    let e2 = d2h1.zip(&b21.zip(&rd.h[1], |b, h| b * h), |a, b| a - b);
    let e3 = d1b12.zip(&d2b21, |a, b| a + b);
    let eta1 = rd.eta_grid(0);
    let eta2 = rd.eta_grid(1);
    let etap1 = rd.eta_prime_grid(0);
    let etap2 = rd.eta_prime_grid(1);
    let mut e4 = GridField::zeros(&dom.n);
    for idx in dom.indices() {
        let fi = e4.flat(&idx);
        e4.data[fi] = eta1.get(&idx) * d1b12.get(&idx)
            + eta2.get(&idx) * d2b21.get(&idx)
            + 0.5 * etap1.get(&idx) * b12.get(&idx)
            + 0.5 * etap2.get(&idx) * b21.get(&idx)
            + rd.h[0].get(&idx) * rd.h[1].get(&idx);
    }
    ResidualReport::collect_named(
        dom,
        &[
            ("lame_1".to_string(), &e1),
            ("lame_2".to_string(), &e2),
            ("flatness".to_string(), &e3),
            ("eta_constraint".to_string(), &e4),
        ],
    )
}

/// A matrix-valued grid field with complex entries (the Lax connection
/// matrices pick up imaginary parts when lambda + eta_i < 0).
struct MatGrid {
    m: usize,
    re: Vec<GridField>,
    im: Vec<GridField>,
}

impl MatGrid {
    fn from_fn(
        m: usize,
        dom: &GridDomain,
        f: impl Fn(&[usize], usize, usize) -> Complex64,
    ) -> MatGrid {
        let mut re = Vec::with_capacity(m * m);
        let mut im = Vec::with_capacity(m * m);
        for r in 0..m {
            for c in 0..m {
                let mut gr = GridField::zeros(&dom.n);
                let mut gi = GridField::zeros(&dom.n);
                for idx in dom.indices() {
                    let v = f(&idx, r, c);
                    let fi = gr.flat(&idx);
                    gr.data[fi] = v.re;
                    gi.data[fi] = v.im;
                }
                re.push(gr);
                im.push(gi);
            }
        }
        MatGrid { m, re, im }
    }

    fn derivative(&self, axis: usize, h: f64) -> MatGrid {
        MatGrid {
            m: self.m,
            re: self.re.iter().map(|g| g.derivative(axis, h)).collect(),
            im: self.im.iter().map(|g| g.derivative(axis, h)).collect(),
        }
    }

    fn at(&self, idx: &[usize]) -> Vec<Complex64> {
        (0..self.m * self.m)
            .map(|e| Complex64::new(self.re[e].get(idx), self.im[e].get(idx)))
            .collect()
    }
}

/// max-entry norm of d_{ax_v} U - d_{ax_u} V + [U, V] per node.
fn zero_curvature_field(
    u: &MatGrid,
    v: &MatGrid,
    dom: &GridDomain,
    ax_u: usize,
    ax_v: usize,
) -> GridField {
    let m = u.m;
    let du = u.derivative(ax_v, dom.spacing(ax_v));
    let dv = v.derivative(ax_u, dom.spacing(ax_u));
    let mut out = GridField::zeros(&dom.n);
    for idx in dom.indices() {
        let ua = u.at(&idx);
        let va = v.at(&idx);
        let dua = du.at(&idx);
        let dva = dv.at(&idx);
        let mut max = 0.0f64;
        for r in 0..m {
            for c in 0..m {
                let mut comm = Complex64::new(0.0, 0.0);
                for s in 0..m {
                    comm += ua[r * m + s] * va[s * m + c] - va[r * m + s] * ua[s * m + c];
                }
                let res = dua[r * m + c] - dva[r * m + c] + comm;
                max = max.max(res.norm());
            }
        }
        let fi = out.flat(&idx);
        out.data[fi] = max;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaxForm {
    /// The 3x3 real frame on the sphere (n = 2 only).
    ThreeByThree,
    /// The 2x2 complexified form (n = 2 only).
    TwoByTwo,
    /// The skew-symmetric n-dimensional frame connection, all axis pairs.
    NDim,
}

/// Zero-curvature residual of the lambda-dependent Lax connection built
/// from the rotation data. Square roots of lambda + eta_i are taken in the
/// principal complex branch, so inadmissible-sign lambdas are allowed as
/// long as lambda + eta_i stays away from zero.
pub fn lax_zero_curvature_residual(
    rd: &RotationData,
    lambda: f64,
    form: LaxForm,
) -> Result<ResidualReport, LameError> {
    rd.check_lambda(lambda)?;
    let dom = &rd.domain;
    let n = rd.n();
    let s: Vec<GridField> = (0..n).map(|i| rd.eta_grid(i)).collect();
    let sq = |i: usize, idx: &[usize]| Complex64::new(lambda + s[i].get(idx), 0.0).sqrt();
    match form {
        LaxForm::ThreeByThree => {
            if n != 2 {
                return Err(LameError::Dim { expected: "2".into(), got: n });
            }
            let u = MatGrid::from_fn(3, dom, |idx, r, c| {
                let s1 = sq(0, idx);
                let s2 = sq(1, idx);
                let b21 = rd.beta(1, 0).get(idx);
                let h1 = rd.h[0].get(idx);
                match (r, c) {
                    (0, 1) => -s2 / s1 * b21,
                    (1, 0) => s2 / s1 * b21,
                    (0, 2) => h1 / s1,
                    (2, 0) => -h1 / s1,
                    _ => Complex64::new(0.0, 0.0),
                }
            });
            let v = MatGrid::from_fn(3, dom, |idx, r, c| {
                let s1 = sq(0, idx);
                let s2 = sq(1, idx);
                let b12 = rd.beta(0, 1).get(idx);
                let h2 = rd.h[1].get(idx);
                match (r, c) {
                    (0, 1) => s1 / s2 * b12,
                    (1, 0) => -s1 / s2 * b12,
                    (1, 2) => h2 / s2,
                    (2, 1) => -h2 / s2,
                    _ => Complex64::new(0.0, 0.0),
                }
            });
            let res = zero_curvature_field(&u, &v, dom, 0, 1);
            Ok(ResidualReport::collect(dom, &[&res]))
        }
        LaxForm::TwoByTwo => {
            if n != 2 {
                return Err(LameError::Dim { expected: "2".into(), got: n });
            }
            let i_unit = Complex64::new(0.0, 1.0);
            let u = MatGrid::from_fn(2, dom, |idx, r, c| {
                let s1 = sq(0, idx);
                let s2 = sq(1, idx);
                let b21 = rd.beta(1, 0).get(idx);
                let h1 = rd.h[0].get(idx);
                let e = match (r, c) {
                    (0, 0) => i_unit * s2 * b21,
                    (0, 1) => Complex64::new(h1, 0.0),
                    (1, 0) => Complex64::new(-h1, 0.0),
                    (1, 1) => -i_unit * s2 * b21,
                    _ => unreachable!(),
                };
                e / (2.0 * s1)
            });
            let v = MatGrid::from_fn(2, dom, |idx, r, c| {
                let s1 = sq(0, idx);
                let s2 = sq(1, idx);
                let b12 = rd.beta(0, 1).get(idx);
                let h2 = rd.h[1].get(idx);
                let e = match (r, c) {
                    (0, 0) => -s1 * b12,
                    (0, 1) => Complex64::new(h2, 0.0),
                    (1, 0) => Complex64::new(h2, 0.0),
                    (1, 1) => s1 * b12,
                    _ => unreachable!(),
                };
                i_unit * e / (2.0 * s2)
            });
            let res = zero_curvature_field(&u, &v, dom, 0, 1);
            Ok(ResidualReport::collect(dom, &[&res]))
        }
        LaxForm::NDim => {
            let bmat = |j: usize| {
                MatGrid::from_fn(n, dom, |idx, r, c| {
                    if r != j && c == j {
                        sq(r, idx) / sq(j, idx) * rd.beta(r, j).get(idx)
                    } else if r == j && c != j {
                        -sq(c, idx) / sq(j, idx) * rd.beta(c, j).get(idx)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            };
            let mats: Vec<MatGrid> = (0..n).map(bmat).collect();
            let mut named = Vec::new();
            for p in 0..n {
                for q in (p + 1)..n {
                    let res = zero_curvature_field(&mats[p], &mats[q], dom, p, q);
                    named.push((format!("pair_{}{}", p + 1, q + 1), res));
                }
            }
            let refs: Vec<(String, &GridField)> =
                named.iter().map(|(s, f)| (s.clone(), f)).collect();
            Ok(ResidualReport::collect_named(dom, &refs))
        }
    }
}

/// Residual of the Darboux-type system for n >= 3 flat pencils: the
/// product equations d_k beta_ij = beta_ik beta_kj and the eta-weighted
/// diagonal equations. n = 2 reduces to `surface_system_residual`.
pub fn darboux_residual(rd: &RotationData) -> ResidualReport {
    let n = rd.n();
    if n == 2 {
        return surface_system_residual(rd);
    }
    let dom = &rd.domain;
    let eta: Vec<GridField> = (0..n).map(|i| rd.eta_grid(i)).collect();
    let etap: Vec<GridField> = (0..n).map(|i| rd.eta_prime_grid(i)).collect();
    let mut named: Vec<(String, GridField)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let d = rd.beta(i, j).derivative(k, dom.spacing(k));
                let prod = rd.beta(i, k).zip(rd.beta(k, j), |a, b| a * b);
                named.push((
                    format!("prod_{}{}{}", i + 1, j + 1, k + 1),
                    d.zip(&prod, |a, b| a - b),
                ));
            }
            // d_i beta_ij = (eta_i'/2) beta_ij/(eta_j-eta_i)
            //             + (eta_j'/2) beta_ji/(eta_j-eta_i)
            //             + sum_k (eta_k-eta_j)/(eta_j-eta_i) beta_ki beta_kj
            let d = rd.beta(i, j).derivative(i, dom.spacing(i));
            let mut res = GridField::zeros(&dom.n);
            for idx in dom.indices() {
                let den = eta[j].get(&idx) - eta[i].get(&idx);
                let fi = res.flat(&idx);
                if den.abs() < 1e-9 {
                    res.data[fi] = f64::NAN;
                    continue;
                }
                let mut rhs = 0.5 * etap[i].get(&idx) * rd.beta(i, j).get(&idx) / den
                    + 0.5 * etap[j].get(&idx) * rd.beta(j, i).get(&idx) / den;
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    rhs += (eta[k].get(&idx) - eta[j].get(&idx)) / den
                        * rd.beta(k, i).get(&idx)
                        * rd.beta(k, j).get(&idx);
                }
                res.data[fi] = d.get(&idx) - rhs;
            }
            named.push((format!("diag_{}{}", i + 1, j + 1), res));
        }
    }
    let refs: Vec<(String, &GridField)> = named.iter().map(|(s, f)| (s.clone(), f)).collect();
    ResidualReport::collect_named(dom, &refs)
}

/// Goursat data for `integrate_darboux`: each beta_ij is free on the j-th
/// coordinate axis line, each H_j on its own axis line.
#[derive(Debug, Clone)]
pub struct DarbouxBoundary {
    /// beta[i][j]: expression in R^{j+1}, the value of beta_ij on the j-th
    /// axis line through the grid corner.
    pub beta: Vec<Vec<Option<ScalarExpr>>>,
    /// H_j on the j-th axis line; None means H_j = 1 (unit corner data).
    pub h: Option<Vec<ScalarExpr>>,
}

impl DarbouxBoundary {
    pub fn zero(n: usize) -> DarbouxBoundary {
        DarbouxBoundary {
            beta: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (i != j).then(|| ScalarExpr::number(0.0)))
                        .collect()
                })
                .collect(),
            h: None,
        }
    }
}

/// Integrates the rotation-coefficient system by Picard iteration on the
/// equivalent Volterra equations: for n = 2 the curvature-1 system with the
/// H_1 H_2 term, for n = 3 the flat Darboux-type system; H_i are recovered
/// from the linear Lame equations alongside.
pub fn integrate_darboux(
    eta: &[ScalarExpr],
    boundary: &DarbouxBoundary,
    domain: &GridDomain,
) -> Result<RotationData, LameError> {
    let n = domain.dim();
    if !(2..=3).contains(&n) || eta.len() != n {
        return Err(LameError::Dim { expected: "2 or 3".into(), got: n });
    }
    domain.validate()?;
    for (i, e) in eta.iter().enumerate() {
        if e.variables().iter().any(|v| v != &format!("R{}", i + 1)) {
            return Err(LameError::EtaWrongVariable { index: i + 1 });
        }
    }
    let etag: Vec<GridField> = (0..n).map(|i| GridField::sample(&eta[i], domain)).collect();
    let etap: Vec<GridField> = (0..n)
        .map(|i| GridField::sample(&eta[i].differentiate(&format!("R{}", i + 1)), domain))
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            for idx in domain.indices() {
                if (etag[i].get(&idx) - etag[j].get(&idx)).abs() < 1e-9 {
                    return Err(LameError::CoincidentEta {
                        i: i + 1,
                        j: j + 1,
                        coords: domain.node_coords(&idx),
                    });
                }
            }
        }
    }

    // data extensions: expressions in R^{j+1} sample to fields constant
    // along every other axis, which is exactly the line extension we need
    let beta_data: Vec<Vec<Option<GridField>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (i != j).then(|| {
                        GridField::sample(
                            boundary.beta[i][j].as_ref().expect("boundary beta_ij"),
                            domain,
                        )
                    })
                })
                .collect()
        })
        .collect();
    let h_data: Vec<GridField> = (0..n)
        .map(|j| match &boundary.h {
            Some(hs) => GridField::sample(&hs[j], domain),
            None => GridField::constant(&domain.n, 1.0),
        })
        .collect();

    let mut beta: Vec<Vec<Option<GridField>>> = beta_data.clone();
    let mut h: Vec<GridField> = h_data.clone();
    let spac: Vec<f64> = (0..n).map(|a| domain.spacing(a)).collect();

    // extension of a field with data axis `d` from per-axis right-hand sides
    let extend = |data: &GridField, d: usize, rhs: &dyn Fn(usize) -> GridField| -> GridField {
        let transverse: Vec<usize> = (0..n).filter(|&a| a != d).collect();
        let mut out = data.clone();
        for (pos, &k) in transverse.iter().enumerate() {
            let mut term = rhs(k).cumint(k, spac[k]);
            for &later in &transverse[pos + 1..] {
                term = term.extend_base(later);
            }
            out = out.zip(&term, |a, b| a + b);
        }
        out
    };

    let mut last_change = f64::INFINITY;
    for _ in 0..80 {
        let mut change = 0.0f64;
        // beta updates
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let bij = beta[i][j].as_ref().unwrap();
                let rhs = |k: usize| -> GridField {
                    if k == i {
                        // diagonal equation for d_i beta_ij
                        let mut f = GridField::zeros(&domain.n);
                        for idx in domain.indices() {
                            let fi = f.flat(&idx);
                            f.data[fi] = if n == 2 {
                                // solve the flatness + eta-constraint pair
                                let num = 0.5 * etap[i].get(&idx)
                                    * beta[i][j].as_ref().unwrap().get(&idx)
                                    + 0.5 * etap[j].get(&idx)
                                        * beta[j][i].as_ref().unwrap().get(&idx)
                                    + h[0].get(&idx) * h[1].get(&idx);
                                num / (etag[j].get(&idx) - etag[i].get(&idx))
                            } else {
                                let den = etag[j].get(&idx) - etag[i].get(&idx);
                                let mut v = 0.5 * etap[i].get(&idx)
                                    * beta[i][j].as_ref().unwrap().get(&idx)
                                    / den
                                    + 0.5 * etap[j].get(&idx)
                                        * beta[j][i].as_ref().unwrap().get(&idx)
                                        / den;
                                for k2 in 0..n {
                                    if k2 == i || k2 == j {
                                        continue;
                                    }
                                    v += (etag[k2].get(&idx) - etag[j].get(&idx)) / den
                                        * beta[k2][i].as_ref().unwrap().get(&idx)
                                        * beta[k2][j].as_ref().unwrap().get(&idx);
                                }
                                v
                            };
                        }
                        f
                    } else {
                        // product equation d_k beta_ij = beta_ik beta_kj
                        beta[i][k]
                            .as_ref()
                            .unwrap()
                            .zip(beta[k][j].as_ref().unwrap(), |a, b| a * b)
                    }
                };
                let next = extend(beta_data[i][j].as_ref().unwrap(), j, &rhs);
                change = change.max(next.zip(bij, |a, b| a - b).max_abs());
                beta[i][j] = Some(next);
            }
        }
        // H updates: d_i H_j = beta_ij H_i for i != j, data on the j-axis
        for j in 0..n {
            let rhs = |k: usize| -> GridField {
                beta[k][j].as_ref().unwrap().zip(&h[k], |b, hh| b * hh)
            };
            let next = extend(&h_data[j], j, &rhs);
            change = change.max(next.zip(&h[j], |a, b| a - b).max_abs());
            h[j] = next;
        }
        for row in &beta {
            for b in row.iter().flatten() {
                if b.max_abs() > 1e6 {
                    let idx = domain
                        .indices()
                        .max_by(|a, bx| {
                            b.get(a).abs().partial_cmp(&b.get(bx).abs()).unwrap()
                        })
                        .unwrap();
                    return Err(LameError::BlowUp { coords: domain.node_coords(&idx) });
                }
            }
        }
        last_change = change;
        if change < 1e-13 {
            return Ok(RotationData {
                domain: domain.clone(),
                h,
                beta,
                eta: eta.to_vec(),
            });
        }
    }
    Err(LameError::NoConvergence { change: last_change })
}

/// Constants, integrals and parametrization data of the constant-eta case.
#[derive(Debug, Clone)]
pub struct ConstEtaData {
    pub domain: GridDomain,
    /// the constant eta values c_i
    pub c: Vec<f64>,
    /// integral fields P_i (functions of R^i when the system holds)
    pub p: Vec<GridField>,
    /// max interior variation of P_i transverse to R^i
    pub variation: Vec<f64>,
    /// angle fields of the parametrization, when known (phi/psi or p/q/r)
    pub angles: Vec<(String, GridField)>,
    /// scaling constants mu_i of the n = 3 parametrization, when known
    pub mu: Vec<f64>,
}

/// Evaluates the first integrals of the constant-eta systems.
/// For n >= 3 (flat case) P_i = sum_{k != i} (c_k - c_i) beta_ki^2;
/// for n = 2 (curvature-1 case) the H-corrected integrals
/// P_1 = (c_2 - c_1) beta_21^2 + H_1^2, P_2 = (c_2 - c_1) beta_12^2 - H_2^2.
pub fn const_eta_integrals(rd: &RotationData) -> Result<ConstEtaData, LameError> {
    let n = rd.n();
    let mut c = Vec::with_capacity(n);
    for (i, e) in rd.eta.iter().enumerate() {
        if !e.variables().is_empty() {
            return Err(LameError::NonConstantEta { index: i + 1 });
        }
        c.push(e.eval_coords(&vec![0.0; n])?);
    }
    let mut p = Vec::with_capacity(n);
    if n == 2 {
        let dc = c[1] - c[0];
        p.push(
            rd.beta(1, 0)
                .zip(&rd.h[0], |b, h| dc * b * b + h * h),
        );
        p.push(
            rd.beta(0, 1)
                .zip(&rd.h[1], |b, h| dc * b * b - h * h),
        );
    } else {
        for i in 0..n {
            let mut f = GridField::zeros(&rd.domain.n);
            for k in 0..n {
                if k == i {
                    continue;
                }
                let w = c[k] - c[i];
                f = f.zip(rd.beta(k, i), |acc, b| acc + w * b * b);
            }
            p.push(f);
        }
    }
    let mut variation = Vec::with_capacity(n);
    for (i, pi) in p.iter().enumerate() {
        let mut frozen = pi.clone();
        for a in 0..n {
            if a != i {
                frozen = frozen.extend_base(a);
            }
        }
        let diff = pi.zip(&frozen, |x, y| x - y);
        let mut m = 0.0f64;
        for idx in rd.domain.indices() {
            if rd.domain.is_interior(&idx) {
                m = m.max(diff.get(&idx).abs());
            }
        }
        variation.push(m);
    }
    Ok(ConstEtaData {
        domain: rd.domain.clone(),
        c,
        p,
        variation,
        angles: Vec::new(),
        mu: Vec::new(),
    })
}

/// Angle-field solution of the n = 2 Goursat problem
/// d_1 phi = sin psi, d_2 psi = sinh phi, with the rotation data assembled
/// through H_1 = sin psi, H_2 = sinh phi, beta_12 = cosh phi,
/// beta_21 = cos psi and eta = (-1/2, 1/2).
#[derive(Debug, Clone)]
pub struct GoursatSolution {
    pub domain: GridDomain,
    pub phi: GridField,
    pub psi: GridField,
    pub rotation: RotationData,
}

impl GoursatSolution {
    /// Residuals of the first-order pair.
    pub fn first_order_residual(&self) -> ResidualReport {
        let dom = &self.domain;
        let e1 = self
            .phi
            .derivative(0, dom.spacing(0))
            .zip(&self.psi.map(f64::sin), |a, b| a - b);
        let e2 = self
            .psi
            .derivative(1, dom.spacing(1))
            .zip(&self.phi.map(f64::sinh), |a, b| a - b);
        ResidualReport::collect_named(
            dom,
            &[("d1_phi".to_string(), &e1), ("d2_psi".to_string(), &e2)],
        )
    }

    /// Residuals of the two Monge-Ampere equations. Nodes where the phi
    /// radicand 1 - (d_1 phi)^2 drops below 1e-6 are excluded and counted.
    pub fn monge_ampere_residual(&self) -> ResidualReport {
        let dom = &self.domain;
        let d1phi = self.phi.derivative(0, dom.spacing(0));
        let mixed_phi = d1phi.derivative(1, dom.spacing(1));
        let mut e1 = GridField::zeros(&dom.n);
        for idx in dom.indices() {
            let rad = 1.0 - d1phi.get(&idx) * d1phi.get(&idx);
            let fi = e1.flat(&idx);
            e1.data[fi] = if rad < 1e-6 {
                f64::NAN
            } else {
                mixed_phi.get(&idx) - self.phi.get(&idx).sinh() * rad.sqrt()
            };
        }
        let d2psi = self.psi.derivative(1, dom.spacing(1));
        let mixed_psi = d2psi.derivative(0, dom.spacing(0));
        let mut e2 = GridField::zeros(&dom.n);
        for idx in dom.indices() {
            let rad = 1.0 + d2psi.get(&idx) * d2psi.get(&idx);
            let fi = e2.flat(&idx);
            e2.data[fi] = mixed_psi.get(&idx) - self.psi.get(&idx).sin() * rad.sqrt();
        }
        ResidualReport::collect_named(
            dom,
            &[("ma_phi".to_string(), &e1), ("ma_psi".to_string(), &e2)],
        )
    }
}

/// Solves the Goursat problem of the constant-eta n = 2 system:
/// phi prescribed on the line R^1 = lo (as a function of R^2),
/// psi on the line R^2 = lo (as a function of R^1).
pub fn solve_goursat_surface(
    phi0: &ScalarExpr,
    psi0: &ScalarExpr,
    domain: &GridDomain,
) -> Result<GoursatSolution, LameError> {
    if domain.dim() != 2 {
        return Err(LameError::Dim { expected: "2".into(), got: domain.dim() });
    }
    domain.validate()?;
    let phi_data = GridField::sample(phi0, domain);
    let psi_data = GridField::sample(psi0, domain);
    let (h0, h1) = (domain.spacing(0), domain.spacing(1));
    let mut phi = phi_data.clone();
    let mut psi = psi_data.clone();
    let mut converged = false;
    let mut last = f64::INFINITY;
    for _ in 0..80 {
        let phi_next = phi_data.zip(&psi.map(f64::sin).cumint(0, h0), |a, b| a + b);
        let psi_next = psi_data.zip(&phi_next.map(f64::sinh).cumint(1, h1), |a, b| a + b);
        let change = phi_next
            .zip(&phi, |a, b| a - b)
            .max_abs()
            .max(psi_next.zip(&psi, |a, b| a - b).max_abs());
        phi = phi_next;
        psi = psi_next;
        last = change;
        if change < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LameError::NoConvergence { change: last });
    }
    let rotation = RotationData {
        domain: domain.clone(),
        h: vec![psi.map(f64::sin), phi.map(f64::sinh)],
        beta: vec![
            vec![None, Some(phi.map(f64::cosh))],
            vec![Some(psi.map(f64::cos)), None],
        ],
        eta: vec![
            ScalarExpr::parse("-1/2").expect("constant"),
            ScalarExpr::parse("1/2").expect("constant"),
        ],
    };
    Ok(GoursatSolution {
        domain: domain.clone(),
        phi,
        psi,
        rotation,
    })
}

/// Angle-field solution of the rescaled triple system:
/// d1 q = cos p, d1 r = -sin p, d2 p = -cosh q, d2 r = sinh q,
/// d3 p = cos r, d3 q = sin r, posed on the rescaled coordinates.
#[derive(Debug, Clone)]
pub struct TripleSolution {
    /// grid of the rescaled coordinates
    pub domain: GridDomain,
    pub p: GridField,
    pub q: GridField,
    pub r: GridField,
    /// the constant eta values used for the beta parametrization
    pub c: [f64; 3],
    pub mu: [f64; 3],
}

impl TripleSolution {
    /// Residuals of all six first-order equations.
    pub fn first_order_residual(&self) -> ResidualReport {
        let dom = &self.domain;
        let sp: Vec<f64> = (0..3).map(|a| dom.spacing(a)).collect();
        let eqs: Vec<(String, GridField)> = vec![
            (
                "d1_q".into(),
                self.q.derivative(0, sp[0]).zip(&self.p.map(f64::cos), |a, b| a - b),
            ),
            (
                "d1_r".into(),
                self.r.derivative(0, sp[0]).zip(&self.p.map(f64::sin), |a, b| a + b),
            ),
            (
                "d2_p".into(),
                self.p.derivative(1, sp[1]).zip(&self.q.map(f64::cosh), |a, b| a + b),
            ),
            (
                "d2_r".into(),
                self.r.derivative(1, sp[1]).zip(&self.q.map(f64::sinh), |a, b| a - b),
            ),
            (
                "d3_p".into(),
                self.p.derivative(2, sp[2]).zip(&self.r.map(f64::cos), |a, b| a - b),
            ),
            (
                "d3_q".into(),
                self.q.derivative(2, sp[2]).zip(&self.r.map(f64::sin), |a, b| a - b),
            ),
        ];
        let refs: Vec<(String, &GridField)> = eqs.iter().map(|(s, f)| (s.clone(), f)).collect();
        ResidualReport::collect_named(dom, &refs)
    }

    /// Residuals of the triple of pairwise commuting Monge-Ampere equations
    /// for q. The positive-root form assumes the chart sin p >= 0,
    /// cos r >= 0 (p = arccos d1 q, r = arcsin d3 q); nodes outside that
    /// chart or with radicand below 1e-6 are excluded and counted.
    pub fn monge_ampere_residual(&self) -> ResidualReport {
        let dom = &self.domain;
        let sp: Vec<f64> = (0..3).map(|a| dom.spacing(a)).collect();
        let d1q = self.q.derivative(0, sp[0]);
        let d3q = self.q.derivative(2, sp[2]);
        let rad = |d: f64| 1.0 - d * d;
        let mut eqs: Vec<(String, GridField)> = Vec::new();
        let m12 = d1q.derivative(1, sp[1]);
        let m13 = d1q.derivative(2, sp[2]);
        let m23 = d3q.derivative(1, sp[1]);
        let mut e12 = GridField::zeros(&dom.n);
        let mut e13 = GridField::zeros(&dom.n);
        let mut e23 = GridField::zeros(&dom.n);
        for idx in dom.indices() {
            let r1 = rad(d1q.get(&idx));
            let r3 = rad(d3q.get(&idx));
            let qv = self.q.get(&idx);
            let p_ok = self.p.get(&idx).sin() >= 1e-3;
            let r_ok = self.r.get(&idx).cos() >= 1e-3;
            let fi = e12.flat(&idx);
            e12.data[fi] = if r1 < 1e-6 || !p_ok {
                f64::NAN
            } else {
                m12.get(&idx) - qv.cosh() * r1.sqrt()
            };
            e13.data[fi] = if r1 < 1e-6 || r3 < 1e-6 || !p_ok || !r_ok {
                f64::NAN
            } else {
                m13.get(&idx) + r1.sqrt() * r3.sqrt()
            };
            e23.data[fi] = if r3 < 1e-6 || !r_ok {
                f64::NAN
            } else {
                m23.get(&idx) - qv.sinh() * r3.sqrt()
            };
        }
        eqs.push(("ma_12".into(), e12));
        eqs.push(("ma_13".into(), e13));
        eqs.push(("ma_23".into(), e23));
        let refs: Vec<(String, &GridField)> = eqs.iter().map(|(s, f)| (s.clone(), f)).collect();
        ResidualReport::collect_named(dom, &refs)
    }

    /// Cross-derivative consistency of the fields with two equations:
    /// mixed partials computed through the two different right-hand sides.
    pub fn cross_derivative_residual(&self) -> ResidualReport {
        let dom = &self.domain;
        let sp: Vec<f64> = (0..3).map(|a| dom.spacing(a)).collect();
        // p: d2 p = -cosh q, d3 p = cos r  =>  d3(-cosh q) = d2(cos r)
        let ep = self
            .q
            .map(f64::cosh)
            .derivative(2, sp[2])
            .zip(&self.r.map(f64::cos).derivative(1, sp[1]), |a, b| -a - b);
        // q: d1 q = cos p, d3 q = sin r  =>  d3(cos p) = d1(sin r)
        let eq = self
            .p
            .map(f64::cos)
            .derivative(2, sp[2])
            .zip(&self.r.map(f64::sin).derivative(0, sp[0]), |a, b| a - b);
        // r: d1 r = -sin p, d2 r = sinh q  =>  d2(-sin p) = d1(sinh q)
        let er = self
            .p
            .map(f64::sin)
            .derivative(1, sp[1])
            .zip(&self.q.map(f64::sinh).derivative(0, sp[0]), |a, b| -a - b);
        ResidualReport::collect_named(
            dom,
            &[
                ("cross_p".to_string(), &ep),
                ("cross_q".to_string(), &eq),
                ("cross_r".to_string(), &er),
            ],
        )
    }
}

/// mu constants of the constant-eta parametrization for c_3 > c_2 > c_1.
pub fn mu_constants(c: &[f64; 3]) -> [f64; 3] {
    let (c1, c2, c3) = (c[0], c[1], c[2]);
    [
        ((c3 - c2) / ((c2 - c1) * (c3 - c1))).sqrt(),
        ((c3 - c1) / ((c2 - c1) * (c3 - c2))).sqrt(),
        ((c2 - c1) / ((c3 - c1) * (c3 - c2))).sqrt(),
    ]
}

/// Solves the rescaled triple system by Picard iteration. Data:
/// p on the R^1 axis, q on the R^2 axis, r on the R^3 axis (each an
/// expression in its own variable). The fields live on the rescaled grid;
/// `triple_rotation_data` maps them back to rotation coefficients.
pub fn solve_triple_system(
    p0: &ScalarExpr,
    q0: &ScalarExpr,
    r0: &ScalarExpr,
    domain: &GridDomain,
) -> Result<TripleSolution, LameError> {
    if domain.dim() != 3 {
        return Err(LameError::Dim { expected: "3".into(), got: domain.dim() });
    }
    domain.validate()?;
    let p_data = GridField::sample(p0, domain);
    let q_data = GridField::sample(q0, domain);
    let r_data = GridField::sample(r0, domain);
    let sp: Vec<f64> = (0..3).map(|a| domain.spacing(a)).collect();
    let mut p = p_data.clone();
    let mut q = q_data.clone();
    let mut r = r_data.clone();
    let mut converged = false;
    let mut last = f64::INFINITY;
    for _ in 0..120 {
        // p(R) = p0(R^1) - int_{lo2} cosh q |_{R^3=lo} + int_{lo3} cos r
        let p_next = {
            let t1 = q.map(|v| -v.cosh()).cumint(1, sp[1]).extend_base(2);
            let t2 = r.map(f64::cos).cumint(2, sp[2]);
            p_data.zip(&t1, |a, b| a + b).zip(&t2, |a, b| a + b)
        };
        let q_next = {
            let t1 = p_next.map(f64::cos).cumint(0, sp[0]).extend_base(2);
            let t2 = r.map(f64::sin).cumint(2, sp[2]);
            q_data.zip(&t1, |a, b| a + b).zip(&t2, |a, b| a + b)
        };
        let r_next = {
            let t1 = p_next.map(|v| -v.sin()).cumint(0, sp[0]).extend_base(1);
            let t2 = q_next.map(f64::sinh).cumint(1, sp[1]);
            r_data.zip(&t1, |a, b| a + b).zip(&t2, |a, b| a + b)
        };
        let change = p_next
            .zip(&p, |a, b| a - b)
            .max_abs()
            .max(q_next.zip(&q, |a, b| a - b).max_abs())
            .max(r_next.zip(&r, |a, b| a - b).max_abs());
        p = p_next;
        q = q_next;
        r = r_next;
        last = change;
        if change < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LameError::NoConvergence { change: last });
    }
    // chart check: the Monge-Ampere form needs |d1 q| <= 1 and |d3 q| <= 1
    let d1q = q.derivative(0, sp[0]);
    let d3q = q.derivative(2, sp[2]);
    for idx in domain.indices() {
        if d1q.get(&idx).abs() > 1.0 + 1e-6 || d3q.get(&idx).abs() > 1.0 + 1e-6 {
            return Err(LameError::ChartDeparture {
                coords: domain.node_coords(&idx),
                detail: "|dq| exceeds 1".into(),
            });
        }
    }
    let c = [0.0, 1.0, 3.0];
    Ok(TripleSolution {
        domain: domain.clone(),
        p,
        q,
        r,
        c,
        mu: mu_constants(&c),
    })
}

/// Maps a triple solution to rotation coefficients on the un-rescaled grid
/// (axis spacings divided by mu_i) with the sin/sinh/cos parametrization,
/// and recovers H_i from unit corner data by Picard iteration.
pub fn triple_rotation_data(sol: &TripleSolution) -> Result<RotationData, LameError> {
    let sdom = &sol.domain;
    let mu = sol.mu;
    let domain = GridDomain {
        lo: (0..3).map(|a| sdom.lo[a] / mu[a]).collect(),
        hi: (0..3).map(|a| sdom.hi[a] / mu[a]).collect(),
        n: sdom.n.clone(),
        margin: sdom.margin,
    };
    let (c1, c2, c3) = (sol.c[0], sol.c[1], sol.c[2]);
    let b = |f: GridField| Some(f);
    let beta: Vec<Vec<Option<GridField>>> = vec![
        vec![
            None,
            b(sol.q.map(|v| v.sinh() / (c2 - c1).sqrt())),
            b(sol.r.map(|v| v.sin() / (c3 - c1).sqrt())),
        ],
        vec![
            b(sol.p.map(|v| v.sin() / (c2 - c1).sqrt())),
            None,
            b(sol.r.map(|v| v.cos() / (c3 - c2).sqrt())),
        ],
        vec![
            b(sol.p.map(|v| v.cos() / (c3 - c1).sqrt())),
            b(sol.q.map(|v| v.cosh() / (c3 - c2).sqrt())),
            None,
        ],
    ];
    // H_j = 1 on the j-axis, d_i H_j = beta_ij H_i elsewhere
    let sp: Vec<f64> = (0..3).map(|a| domain.spacing(a)).collect();
    let mut h: Vec<GridField> = (0..3).map(|_| GridField::constant(&domain.n, 1.0)).collect();
    let ones: Vec<GridField> = h.clone();
    let mut converged = false;
    for _ in 0..80 {
        let mut change = 0.0f64;
        for j in 0..3 {
            let transverse: Vec<usize> = (0..3).filter(|&a| a != j).collect();
            let mut next = ones[j].clone();
            for (pos, &k) in transverse.iter().enumerate() {
                let mut term = beta[k][j]
                    .as_ref()
                    .unwrap()
                    .zip(&h[k], |bv, hv| bv * hv)
                    .cumint(k, sp[k]);
                for &later in &transverse[pos + 1..] {
                    term = term.extend_base(later);
                }
                next = next.zip(&term, |a, bx| a + bx);
            }
            change = change.max(next.zip(&h[j], |a, bx| a - bx).max_abs());
            h[j] = next;
        }
        if change < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LameError::NoConvergence { change: f64::NAN });
    }
    Ok(RotationData {
        domain,
        h,
        beta,
        eta: sol.c.iter().map(|&v| ScalarExpr::number(v)).collect(),
    })
}

#[derive(Serialize, Deserialize)]
struct FieldFileHeader {
    dims: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    margin: f64,
    eta: Vec<String>,
    fields: Vec<String>,
}

/// Named grid fields read back from a field file.
pub struct LoadedFields {
    pub domain: GridDomain,
    pub eta: Vec<ScalarExpr>,
    pub fields: Vec<(String, GridField)>,
}

/// Writes named grid fields as a JSON header line followed by raw
/// little-endian f64 blocks in header order; atomic via temp + rename.
pub fn save_fields(
    path: &Path,
    domain: &GridDomain,
    eta: &[ScalarExpr],
    named: &[(String, &GridField)],
) -> Result<(), LameError> {
    let header = FieldFileHeader {
        dims: domain.n.clone(),
        lo: domain.lo.clone(),
        hi: domain.hi.clone(),
        margin: domain.margin,
        eta: eta.iter().map(|e| e.to_string()).collect(),
        fields: named.iter().map(|(s, _)| s.clone()).collect(),
    };
    let mut out = Vec::new();
    serde_json::to_writer(&mut out, &header)?;
    out.push(b'\n');
    for (_, g) in named {
        for &v in &g.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &out)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_fields(path: &Path) -> Result<LoadedFields, LameError> {
    let mut raw = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut raw)?;
    let nl = raw
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| LameError::BadFile("missing header line".into()))?;
    let header: FieldFileHeader = serde_json::from_slice(&raw[..nl])?;
    let len: usize = header.dims.iter().product();
    let body = &raw[nl + 1..];
    if body.len() != header.fields.len() * len * 8 {
        return Err(LameError::BadFile(format!(
            "expected {} field values, found {} bytes",
            header.fields.len() * len,
            body.len()
        )));
    }
    let mut fields = Vec::with_capacity(header.fields.len());
    for (chunk_idx, name) in header.fields.iter().enumerate() {
        let mut data = Vec::with_capacity(len);
        let base = chunk_idx * len * 8;
        for k in 0..len {
            let mut bytes = [0u8; 8];
            bytes.copy_from_slice(&body[base + 8 * k..base + 8 * k + 8]);
            data.push(f64::from_le_bytes(bytes));
        }
        fields.push((name.clone(), GridField { dims: header.dims.clone(), data }));
    }
    let domain = GridDomain {
        lo: header.lo,
        hi: header.hi,
        n: header.dims,
        margin: header.margin,
    };
    let eta = header
        .eta
        .iter()
        .map(|s| ScalarExpr::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LoadedFields { domain, eta, fields })
}

/// Persists rotation data as a JSON header line followed by the raw
/// little-endian f64 field data (h1..hn, then beta_ij row-major, i != j).
pub fn save_rotation(rd: &RotationData, path: &Path) -> Result<(), LameError> {
    let n = rd.n();
    let mut named: Vec<(String, &GridField)> = Vec::new();
    for (i, g) in rd.h.iter().enumerate() {
        named.push((format!("h{}", i + 1), g));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                named.push((format!("beta{}{}", i + 1, j + 1), rd.beta(i, j)));
            }
        }
    }
    save_fields(path, &rd.domain, &rd.eta, &named)
}

pub fn load_rotation(path: &Path) -> Result<RotationData, LameError> {
    let loaded = load_fields(path)?;
    let n = loaded.domain.dim();
    if loaded.fields.len() != n * n {
        return Err(LameError::BadFile(format!(
            "expected {} fields for rotation data, found {}",
            n * n,
            loaded.fields.len()
        )));
    }
    let h: Vec<GridField> = loaded.fields[..n].iter().map(|(_, g)| g.clone()).collect();
    let mut beta: Vec<Vec<Option<GridField>>> = vec![(0..n).map(|_| None).collect(); n];
    let mut cursor = n;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                beta[i][j] = Some(loaded.fields[cursor].1.clone());
                cursor += 1;
            }
        }
    }
    Ok(RotationData {
        domain: loaded.domain,
        h,
        beta,
        eta: loaded.eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surface_domain(n: usize) -> GridDomain {
        GridDomain::new(vec![0.0, 0.0], vec![0.5, 0.5], vec![n, n]).unwrap()
    }

    fn surface_pair(n: usize) -> GoursatSolution {
        solve_goursat_surface(
            &ScalarExpr::parse("0.3").unwrap(),
            &ScalarExpr::parse("0.2").unwrap(),
            &surface_domain(n),
        )
        .unwrap()
    }

    #[test]
    fn goursat_zero_data_gives_zero_fields() {
        let sol = solve_goursat_surface(
            &ScalarExpr::number(0.0),
            &ScalarExpr::number(0.0),
            &surface_domain(16),
        )
        .unwrap();
        assert_eq!(sol.phi.max_abs(), 0.0);
        assert_eq!(sol.psi.max_abs(), 0.0);
    }

    #[test]
    fn goursat_first_order_and_surface_system_residuals() {
        let sol = surface_pair(64);
        let fo = sol.first_order_residual();
        assert!(fo.max < 1e-6, "first-order residual {}", fo.max);
        let s4 = surface_system_residual(&sol.rotation);
        assert!(s4.max < 1e-6, "system residual {}", s4.max);
        let ma = sol.monge_ampere_residual();
        assert!(ma.max < 1e-5, "Monge-Ampere residual {}", ma.max);
    }

    #[test]
    fn goursat_richardson_halved_step_ratio() {
        // first-order residual should drop ~16x on grid refinement 17 -> 33
        let coarse = surface_pair(17).first_order_residual().max;
        let fine = surface_pair(33).first_order_residual().max;
        assert!(coarse / fine > 3.5, "ratio {}", coarse / fine);
    }

    #[test]
    fn surface_system_negative_control() {
        let mut sol = surface_pair(64);
        let noisy = sol.rotation.beta(0, 1).map(|v| v + 1e-3);
        sol.rotation.beta[0][1] = Some(noisy);
        let s4 = surface_system_residual(&sol.rotation);
        assert!(s4.max > 1e-4, "perturbation went undetected: {}", s4.max);
    }

    #[test]
    fn surface_system_zero_fields() {
        let dom = surface_domain(16);
        let rd = RotationData {
            h: vec![GridField::zeros(&dom.n), GridField::zeros(&dom.n)],
            beta: vec![
                vec![None, Some(GridField::zeros(&dom.n))],
                vec![Some(GridField::zeros(&dom.n)), None],
            ],
            eta: vec![ScalarExpr::number(-0.5), ScalarExpr::number(0.5)],
            domain: dom,
        };
        assert_eq!(surface_system_residual(&rd).max, 0.0);
    }

    #[test]
    fn example8_integrals_are_constant() {
        let sol = surface_pair(64);
        let data = const_eta_integrals(&sol.rotation).unwrap();
        assert_eq!(data.c, vec![-0.5, 0.5]);
        // beta_21^2 + H_1^2 constant along R^2, beta_12^2 - H_2^2 along R^1
        assert!(data.variation[0] < 1e-6, "P1 varies by {}", data.variation[0]);
        assert!(data.variation[1] < 1e-6, "P2 varies by {}", data.variation[1]);
    }

    #[test]
    fn lax_residuals_small_for_example8() {
        let sol = surface_pair(48);
        for &lambda in &[0.1, 1.0, 10.0] {
            let r3 = lax_zero_curvature_residual(&sol.rotation, lambda, LaxForm::ThreeByThree)
                .unwrap();
            assert!(r3.max < 1e-5, "3x3 residual {} at lambda {lambda}", r3.max);
            let r2 =
                lax_zero_curvature_residual(&sol.rotation, lambda, LaxForm::TwoByTwo).unwrap();
            assert!(r2.max < 1e-5, "2x2 residual {} at lambda {lambda}", r2.max);
        }
    }

    #[test]
    fn lax_zero_fields_zero_residual() {
        let dom = surface_domain(16);
        let rd = RotationData {
            h: vec![GridField::zeros(&dom.n), GridField::zeros(&dom.n)],
            beta: vec![
                vec![None, Some(GridField::zeros(&dom.n))],
                vec![Some(GridField::zeros(&dom.n)), None],
            ],
            eta: vec![ScalarExpr::number(-0.5), ScalarExpr::number(0.5)],
            domain: dom,
        };
        let r = lax_zero_curvature_residual(&rd, 1.0, LaxForm::ThreeByThree).unwrap();
        assert_eq!(r.max, 0.0);
    }

    #[test]
    fn lax_rejects_lambda_at_pole() {
        let sol = surface_pair(16);
        assert!(matches!(
            lax_zero_curvature_residual(&sol.rotation, 0.5, LaxForm::ThreeByThree),
            Err(LameError::LambdaAtPole { .. })
        ));
    }

    fn triple_domain(n: usize) -> GridDomain {
        GridDomain::new(vec![0.0, 0.0, 0.0], vec![0.4, 0.4, 0.4], vec![n, n, n]).unwrap()
    }

    fn triple(n: usize) -> TripleSolution {
        solve_triple_system(
            &ScalarExpr::parse("0.1").unwrap(),
            &ScalarExpr::parse("0").unwrap(),
            &ScalarExpr::parse("0.05").unwrap(),
            &triple_domain(n),
        )
        .unwrap()
    }

    #[test]
    fn triple_residuals() {
        let sol = triple(24);
        let fo = sol.first_order_residual();
        assert!(fo.max < 1e-6, "first-order residual {}", fo.max);
        let ma = sol.monge_ampere_residual();
        assert!(ma.max < 1e-5, "Monge-Ampere residual {}", ma.max);
        let cross = sol.cross_derivative_residual();
        assert!(cross.max < 1e-6, "cross-derivative residual {}", cross.max);
    }

    #[test]
    fn triple_zero_data_still_nontrivial() {
        // with all-zero data, d1 q = cos 0 = 1 forces q = R^1 along its axis
        let sol = solve_triple_system(
            &ScalarExpr::number(0.0),
            &ScalarExpr::number(0.0),
            &ScalarExpr::number(0.0),
            &triple_domain(16),
        )
        .unwrap();
        assert!(sol.q.max_abs() > 0.1);
        assert!(sol.first_order_residual().max < 1e-6);
    }

    #[test]
    fn triple_integrals_after_rescaling() {
        let sol = triple(20);
        let rd = triple_rotation_data(&sol).unwrap();
        let data = const_eta_integrals(&rd).unwrap();
        // P_1 = P_2 = 1, P_3 = -1 exactly by the parametrization
        for (i, want) in [(0usize, 1.0f64), (1, 1.0), (2, -1.0)] {
            let got = data.p[i].data[0];
            assert!((got - want).abs() < 1e-12, "P{} = {}", i + 1, got);
            assert!(data.variation[i] < 1e-12);
        }
        let r = darboux_residual(&rd);
        assert!(r.max < 1e-5, "darboux residual {}", r.max);
    }

    #[test]
    fn triple_rotation_flatness_and_lax() {
        let sol = triple(20);
        let rd = triple_rotation_data(&sol).unwrap();
        let flat = crate::metric::flatness_residual(&rd);
        assert!(flat.max < 1e-5, "flatness residual {}", flat.max);
        let lax = lax_zero_curvature_residual(&rd, 0.7, LaxForm::NDim).unwrap();
        assert!(lax.max < 1e-5, "ndim Lax residual {}", lax.max);
    }

    #[test]
    fn darboux_n3_zero_boundary_is_trivial() {
        // the flat n = 3 system with zero data has the exact solution
        // beta = 0, H = 1
        let dom = triple_domain(12);
        let eta = [
            ScalarExpr::number(0.0),
            ScalarExpr::number(1.0),
            ScalarExpr::number(3.0),
        ];
        let rd = integrate_darboux(&eta, &DarbouxBoundary::zero(3), &dom).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(rd.beta(i, j).max_abs(), 0.0);
                }
            }
            assert_eq!(rd.h[i].map(|v| v - 1.0).max_abs(), 0.0);
        }
    }

    #[test]
    fn darboux_n2_zero_boundary_feels_curvature_term() {
        // for n = 2 the eta constraint carries the H1 H2 curvature term,
        // so zero beta data still produces a nontrivial consistent solution
        let dom = surface_domain(32);
        let eta = [ScalarExpr::number(-0.5), ScalarExpr::number(0.5)];
        let rd = integrate_darboux(&eta, &DarbouxBoundary::zero(2), &dom).unwrap();
        assert!(rd.beta(0, 1).max_abs() > 0.1);
        let s4 = surface_system_residual(&rd);
        assert!(s4.max < 1e-5, "system residual {}", s4.max);
    }

    #[test]
    fn darboux_matches_goursat_solver() {
        let n = 48;
        let dom = surface_domain(n);
        let sol = surface_pair(n);
        // boundary data read off the Goursat solution: on the R^1 axis
        // psi = 0.2, so beta_21 = cos 0.2; on the R^2 axis phi = 0.3, so
        // beta_12 = cosh 0.3; H_1 = sin 0.2 and H_2 = sinh 0.3 on their axes
        let boundary = DarbouxBoundary {
            beta: vec![
                vec![None, Some(ScalarExpr::parse("cosh(0.3)").unwrap())],
                vec![Some(ScalarExpr::parse("cos(0.2)").unwrap()), None],
            ],
            h: Some(vec![
                ScalarExpr::parse("sin(0.2)").unwrap(),
                ScalarExpr::parse("sinh(0.3)").unwrap(),
            ]),
        };
        let eta = [
            ScalarExpr::parse("-1/2").unwrap(),
            ScalarExpr::parse("1/2").unwrap(),
        ];
        let rd = integrate_darboux(&eta, &boundary, &dom).unwrap();
        let diff = rd
            .beta(0, 1)
            .zip(sol.rotation.beta(0, 1), |a, b| a - b)
            .max_abs()
            .max(rd.beta(1, 0).zip(sol.rotation.beta(1, 0), |a, b| a - b).max_abs())
            .max(rd.h[0].zip(&sol.rotation.h[0], |a, b| a - b).max_abs())
            .max(rd.h[1].zip(&sol.rotation.h[1], |a, b| a - b).max_abs());
        assert!(diff < 1e-4, "solver mismatch {diff}");
    }

    #[test]
    fn darboux_n3_matches_triple_solver() {
        let n = 20;
        let sol = triple(n);
        let rd_triple = triple_rotation_data(&sol).unwrap();
        let dom = rd_triple.domain.clone();
        // constant corner data aligns each beta_ij data line with the data
        // line of its angle field, so the boundary values are constants
        let s3 = 3.0f64.sqrt();
        let s2 = 2.0f64.sqrt();
        let (p0, q0, r0) = (0.1f64, 0.0f64, 0.05f64);
        let cexpr = |v: f64| Some(ScalarExpr::number(v));
        let boundary = DarbouxBoundary {
            beta: vec![
                vec![None, cexpr(q0.sinh()), cexpr(r0.sin() / s3)],
                vec![cexpr(p0.sin()), None, cexpr(r0.cos() / s2)],
                vec![cexpr(p0.cos() / s3), cexpr(q0.cosh() / s2), None],
            ],
            h: None,
        };
        let eta = [
            ScalarExpr::number(0.0),
            ScalarExpr::number(1.0),
            ScalarExpr::number(3.0),
        ];
        let rd = integrate_darboux(&eta, &boundary, &dom).unwrap();
        let mut diff = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    diff = diff.max(
                        rd.beta(i, j)
                            .zip(rd_triple.beta(i, j), |a, b| a - b)
                            .max_abs(),
                    );
                }
            }
        }
        assert!(diff < 1e-4, "beta mismatch {diff}");
        let r = darboux_residual(&rd);
        assert!(r.max < 1e-5, "darboux residual {}", r.max);
    }

    #[test]
    fn gauge_symmetry_of_constant_eta_system() {
        // R^1 -> s(R^1) = R^1 + 0.1 (R^1)^2, beta_k1 -> beta_k1 / s',
        // evaluated by interpolating the triple solution on the image grid
        let sol = triple(24);
        let rd = triple_rotation_data(&sol).unwrap();
        let dom = &rd.domain;
        let s = |x: f64| x + 0.1 * x * x;
        let sprime = |x: f64| 1.0 + 0.2 * x;
        let sinv = |y: f64| (-1.0 + (1.0 + 0.4 * y).sqrt()) / 0.2;
        // stay strictly inside the image of axis 1
        let new_dom = GridDomain::new(
            vec![s(dom.lo[0]) + 1e-3, dom.lo[1], dom.lo[2]],
            vec![s(dom.hi[0]) - 1e-3, dom.hi[1], dom.hi[2]],
            dom.n.clone(),
        )
        .unwrap();
        let mut beta: Vec<Vec<Option<GridField>>> = vec![vec![None, None, None]; 3];
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let src = rd.beta(i, j);
                let f = GridField::from_fn(&new_dom, |x| {
                    let pre = [sinv(x[0]), x[1], x[2]];
                    let v = src.interp(dom, &pre);
                    if j == 0 {
                        v / sprime(pre[0])
                    } else {
                        v
                    }
                });
                beta[i][j] = Some(f);
            }
        }
        let gauged = RotationData {
            h: vec![
                GridField::constant(&new_dom.n, 1.0),
                GridField::constant(&new_dom.n, 1.0),
                GridField::constant(&new_dom.n, 1.0),
            ],
            beta,
            eta: rd.eta.clone(),
            domain: new_dom,
        };
        let r = darboux_residual(&gauged);
        assert!(r.max < 1e-6, "gauged residual {}", r.max);
    }

    #[test]
    fn rotation_persistence_round_trip() {
        let sol = surface_pair(16);
        let dir = std::env::temp_dir().join("shapelab-lame-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("surface_pair.rot");
        save_rotation(&sol.rotation, &path).unwrap();
        let back = load_rotation(&path).unwrap();
        assert_eq!(back.domain, sol.rotation.domain);
        assert_eq!(back.h[0].data, sol.rotation.h[0].data);
        assert_eq!(back.beta(0, 1).data, sol.rotation.beta(0, 1).data);
        assert_eq!(back.eta[0].to_string(), sol.rotation.eta[0].to_string());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn mu_constants_printed_values() {
        let mu = mu_constants(&[0.0, 1.0, 3.0]);
        assert!((mu[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((mu[1] - (3.0f64 / 2.0).sqrt()).abs() < 1e-15);
        assert!((mu[2] - (1.0f64 / 6.0).sqrt()).abs() < 1e-15);
    }
}
