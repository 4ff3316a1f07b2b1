//! Diagonal metrics, the Christoffel fields `a`, `b`, curvature residuals,
//! metric pencils and flatness residuals.
//!
//! The constant-curvature-1 condition is evaluated in its rational form
//! (no square roots of metric coefficients), so metrics whose coefficients
//! change sign across the catalog domains are handled uniformly; only
//! non-vanishing of the coefficients is required.

use thiserror::Error;

use crate::expr::{ExprError, ScalarExpr};
use crate::grid::{Field, GridDomain, GridError, GridField, ResidualReport};
use crate::lame::RotationData;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("operation requires dimension {expected}, metric has {got}")]
    Dim { expected: usize, got: usize },
    #[error("metric coefficient G_{index}{index} vanishes near {coords:?}")]
    SingularCoefficient { index: usize, coords: Vec<f64> },
    #[error("lambda = {lambda} is inadmissible: lambda + eta_{index} vanishes or changes sign near {coords:?}")]
    InadmissibleLambda {
        lambda: f64,
        index: usize,
        coords: Vec<f64>,
    },
    #[error("eta_{index} must depend on R{} only, found variable {var}", index + 1)]
    EtaWrongVariable { index: usize, var: String },
    #[error("{0}")]
    Invalid(String),
}

/// A diagonal metric `sum_i G_ii (dR^i)^2` over a grid domain.
#[derive(Debug, Clone)]
pub struct DiagonalMetric {
    pub g: Vec<Field>,
    pub domain: GridDomain,
}

impl DiagonalMetric {
    pub fn new(g: Vec<Field>, domain: GridDomain) -> Result<DiagonalMetric, MetricError> {
        if g.len() != domain.dim() {
            return Err(MetricError::Dim {
                expected: domain.dim(),
                got: g.len(),
            });
        }
        domain.validate()?;
        Ok(DiagonalMetric { g, domain })
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn is_symbolic(&self) -> bool {
        self.g.iter().all(Field::is_symbolic)
    }

    /// Checks that every coefficient is non-vanishing over the interior.
    pub fn validate_nonsingular(&self) -> Result<(), MetricError> {
        for (i, gi) in self.g.iter().enumerate() {
            let s = gi.sample(&self.domain);
            for idx in self.domain.indices() {
                if !self.domain.is_interior(&idx) {
                    continue;
                }
                let v = s.get(&idx);
                if !v.is_finite() || v.abs() < 1e-12 {
                    return Err(MetricError::SingularCoefficient {
                        index: i + 1,
                        coords: self.domain.node_coords(&idx),
                    });
                }
            }
        }
        Ok(())
    }
}

/// The Christoffel fields of a diagonal metric: for n = 2 the classical
/// `a`, `b` pair; for general n the array `chi_ij = d_j ln sqrt(G_ii)`
/// computed in its rational form `d_j G_ii / (2 G_ii)`.
#[derive(Debug, Clone)]
pub struct CodazziCoeffs {
    pub n: usize,
    pub chi: Vec<Vec<Option<Field>>>,
}

impl CodazziCoeffs {
    pub fn a(&self) -> &Field {
        self.chi[0][1].as_ref().expect("chi_12 present")
    }

    pub fn b(&self) -> &Field {
        self.chi[1][0].as_ref().expect("chi_21 present")
    }

    pub fn get(&self, i: usize, j: usize) -> &Field {
        self.chi[i][j].as_ref().expect("i != j")
    }

    pub fn from_fields_2d(a: Field, b: Field) -> CodazziCoeffs {
        CodazziCoeffs {
            n: 2,
            chi: vec![vec![None, Some(a)], vec![Some(b), None]],
        }
    }
}

/// Computes `a = -d_2 G^11 / (2 G^11)`, `b = -d_1 G^22 / (2 G^22)`
/// (equivalently `d_j G_ii / (2 G_ii)`); for n > 2 the full `chi_ij` array.
pub fn christoffel_ab(m: &DiagonalMetric) -> Result<CodazziCoeffs, MetricError> {
    let n = m.n();
    let mut chi: Vec<Vec<Option<Field>>> = vec![(0..n).map(|_| None).collect(); n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let f = match &m.g[i] {
                Field::Expr(e) => {
                    let d = e.differentiate(&format!("R{}", j + 1));
                    Field::Expr(d.div_expr(&e.scale(2.0)))
                }
                Field::Grid(g) => {
                    let d = g.derivative(j, m.domain.spacing(j));
                    Field::Grid(d.zip(g, |dv, gv| dv / (2.0 * gv)))
                }
            };
            chi[i][j] = Some(f);
        }
    }
    Ok(CodazziCoeffs { n, chi })
}

/// First and second derivative tables of the metric coefficients, exact for
/// symbolic coefficients and 4th-order finite differences for tabulated ones.
struct MetricJet {
    g: Vec<GridField>,
    d1: Vec<Vec<GridField>>,
    d2: Vec<Vec<Vec<GridField>>>,
}

fn metric_jet(m: &DiagonalMetric, with_second: bool) -> MetricJet {
    let n = m.n();
    let dom = &m.domain;
    let mut g = Vec::with_capacity(n);
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for gi in &m.g {
        g.push(gi.sample(dom));
        let firsts: Vec<Field> = (0..n).map(|j| gi.derivative(j, dom)).collect();
        d1.push(firsts.iter().map(|f| f.sample(dom)).collect());
        if with_second {
            let mut seconds = Vec::with_capacity(n);
            for fj in &firsts {
                seconds.push(
                    (0..n)
                        .map(|k| fj.derivative(k, dom).sample(dom))
                        .collect::<Vec<_>>(),
                );
            }
            d2.push(seconds);
        } else {
            d2.push(Vec::new());
        }
    }
    MetricJet { g, d1, d2 }
}

/// Gaussian curvature of a 2D diagonal metric at a point, via the Lame form
/// `K = -(1/(H1 H2)) [d1(d1 H2 / H1) + d2(d2 H1 / H2)]`, `H_i = sqrt(G_ii)`.
/// Requires positive coefficients near the point.
pub fn gaussian_curvature(m: &DiagonalMetric, pt: &[f64]) -> Result<f64, MetricError> {
    if m.n() != 2 {
        return Err(MetricError::Dim {
            expected: 2,
            got: m.n(),
        });
    }
    match (&m.g[0], &m.g[1]) {
        (Field::Expr(g11), Field::Expr(g22)) => {
            let h1 = g11.sqrt_expr();
            let h2 = g22.sqrt_expr();
            let t1 = h2.differentiate("R1").div_expr(&h1).differentiate("R1");
            let t2 = h1.differentiate("R2").div_expr(&h2).differentiate("R2");
            let k = t1
                .add_expr(&t2)
                .div_expr(&h1.mul_expr(&h2))
                .neg_expr();
            Ok(k.eval_coords(pt)?)
        }
        _ => {
            // tabulated path: finite differences on sqrt(G) grids
            let dom = &m.domain;
            let h1 = m.g[0].sample(dom).map(f64::sqrt);
            let h2 = m.g[1].sample(dom).map(f64::sqrt);
            let s0 = dom.spacing(0);
            let s1 = dom.spacing(1);
            let t1 = h2.derivative(0, s0).zip(&h1, |d, h| d / h).derivative(0, s0);
            let t2 = h1.derivative(1, s1).zip(&h2, |d, h| d / h).derivative(1, s1);
            // nearest node to pt
            let idx: Vec<usize> = (0..2)
                .map(|a| {
                    let i = ((pt[a] - dom.lo[a]) / dom.spacing(a)).round();
                    (i.max(0.0) as usize).min(dom.n[a] - 1)
                })
                .collect();
            let denom = h1.get(&idx) * h2.get(&idx);
            if !denom.is_finite() || denom == 0.0 {
                return Err(MetricError::SingularCoefficient {
                    index: 1,
                    coords: pt.to_vec(),
                });
            }
            Ok(-(t1.get(&idx) + t2.get(&idx)) / denom)
        }
    }
}

/// Residual of the constant-curvature-1 condition in rational form.
///
/// For n = 2 this is
/// `(d2 a + a^2) G^22 + (a/2) d2 G^22 + (d1 b + b^2) G^11 + (b/2) d1 G^11 + 1`;
/// for n >= 3 the equivalent Lame-form conditions (off-diagonal and
/// sectional), normalized to the same "+1" scale.
pub fn curvature_one_residual(m: &DiagonalMetric) -> Result<ResidualReport, MetricError> {
    constant_curvature_residual(m, 1.0)
}

pub fn constant_curvature_residual(
    m: &DiagonalMetric,
    k0: f64,
) -> Result<ResidualReport, MetricError> {
    let n = m.n();
    if n == 2 {
        return curvature_residual_2d(m, k0);
    }
    let jet = metric_jet(m, true);
    let dom = &m.domain;
    let mut named: Vec<(String, GridField)> = Vec::new();
    // Sectional conditions E_ij / (G_ii G_jj) for i < j.
    for i in 0..n {
        for j in (i + 1)..n {
            let mut res = GridField::zeros(&dom.n);
            for idx in dom.indices() {
                let fi = res.flat(&idx);
                let gii = jet.g[i].get(&idx);
                let gjj = jet.g[j].get(&idx);
                let digjj = jet.d1[j][i].get(&idx);
                let djgii = jet.d1[i][j].get(&idx);
                let digii = jet.d1[i][i].get(&idx);
                let djgjj = jet.d1[j][j].get(&idx);
                let mut e = jet.d2[j][i][i].get(&idx) / 2.0
                    - digjj / 4.0 * (digii / gii + digjj / gjj)
                    + jet.d2[i][j][j].get(&idx) / 2.0
                    - djgii / 4.0 * (djgjj / gjj + djgii / gii);
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    e += jet.d1[i][k].get(&idx) * jet.d1[j][k].get(&idx)
                        / (4.0 * jet.g[k].get(&idx));
                }
                e += k0 * gii * gjj;
                res.data[fi] = e / (gii * gjj);
            }
            named.push((format!("sectional_{}{}", i + 1, j + 1), res));
        }
    }
    // Off-diagonal conditions F_ijk / (2 sqrt(|G_ii G_jj|)) for distinct i,j,k.
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k {
                    continue;
                }
                let mut res = GridField::zeros(&dom.n);
                for idx in dom.indices() {
                    let fi = res.flat(&idx);
                    let gii = jet.g[i].get(&idx);
                    let gjj = jet.g[j].get(&idx);
                    let gkk = jet.g[k].get(&idx);
                    let f = jet.d2[j][i][k].get(&idx)
                        - jet.d1[j][i].get(&idx)
                            * (jet.d1[i][k].get(&idx) / (2.0 * gii)
                                + jet.d1[j][k].get(&idx) / (2.0 * gjj))
                        - jet.d1[k][i].get(&idx) * jet.d1[j][k].get(&idx) / (2.0 * gkk);
                    res.data[fi] = f / (2.0 * (gii * gjj).abs().sqrt());
                }
                named.push((format!("offdiag_{}{}{}", i + 1, j + 1, k + 1), res));
            }
        }
    }
    let refs: Vec<(String, &GridField)> = named.iter().map(|(s, f)| (s.clone(), f)).collect();
    Ok(ResidualReport::collect_named(dom, &refs))
}

fn curvature_residual_2d(m: &DiagonalMetric, k0: f64) -> Result<ResidualReport, MetricError> {
    let jet = metric_jet(m, true);
    let dom = &m.domain;
    let mut res = GridField::zeros(&dom.n);
    for idx in dom.indices() {
        let fi = res.flat(&idx);
        let g11 = jet.g[0].get(&idx);
        let g22 = jet.g[1].get(&idx);
        // a = d2 G11 / (2 G11) and its d2; likewise b.
        let a = jet.d1[0][1].get(&idx) / (2.0 * g11);
        let d2a = (jet.d2[0][1][1].get(&idx) * g11
            - jet.d1[0][1].get(&idx) * jet.d1[0][1].get(&idx))
            / (2.0 * g11 * g11);
        let b = jet.d1[1][0].get(&idx) / (2.0 * g22);
        let d1b = (jet.d2[1][0][0].get(&idx) * g22
            - jet.d1[1][0].get(&idx) * jet.d1[1][0].get(&idx))
            / (2.0 * g22 * g22);
        let ginv11 = 1.0 / g11;
        let ginv22 = 1.0 / g22;
        let d2ginv22 = -jet.d1[1][1].get(&idx) / (g22 * g22);
        let d1ginv11 = -jet.d1[0][0].get(&idx) / (g11 * g11);
        res.data[fi] = (d2a + a * a) * ginv22 + a / 2.0 * d2ginv22 + (d1b + b * b) * ginv11
            + b / 2.0 * d1ginv11
            + k0;
    }
    Ok(ResidualReport::collect(dom, &[&res]))
}

/// A family of diagonal metrics `g_ii / (lambda + eta_i)` that keeps constant
/// curvature 1 for every admissible lambda.
#[derive(Debug, Clone)]
pub struct MetricPencil {
    /// Lame fields `H_i = sqrt(g_ii)` of the flat base metric.
    pub h: Vec<Field>,
    /// `eta_i`, a function of `R^i` alone.
    pub eta: Vec<ScalarExpr>,
    pub domain: GridDomain,
}

impl MetricPencil {
    pub fn new(
        h: Vec<Field>,
        eta: Vec<ScalarExpr>,
        domain: GridDomain,
    ) -> Result<MetricPencil, MetricError> {
        if h.len() != domain.dim() || eta.len() != domain.dim() {
            return Err(MetricError::Dim {
                expected: domain.dim(),
                got: h.len().max(eta.len()),
            });
        }
        domain.validate()?;
        let p = MetricPencil { h, eta, domain };
        p.validate_eta()?;
        Ok(p)
    }

    pub fn from_rotation(rd: &RotationData) -> MetricPencil {
        MetricPencil {
            h: rd.h.iter().cloned().map(Field::Grid).collect(),
            eta: rd.eta.clone(),
            domain: rd.domain.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    /// Structural check that each `eta_i` mentions `R^i` only.
    pub fn validate_eta(&self) -> Result<(), MetricError> {
        for (i, eta) in self.eta.iter().enumerate() {
            let allowed = format!("R{}", i + 1);
            for v in eta.variables() {
                if v != allowed {
                    return Err(MetricError::EtaWrongVariable { index: i + 1, var: v });
                }
            }
        }
        Ok(())
    }

    /// `lambda + eta_i` must be bounded away from zero and of one sign over
    /// the whole domain (a sign change is a pole of the pencil).
    pub fn check_admissible(&self, lambda: f64) -> Result<(), MetricError> {
        for i in 0..self.n() {
            let mut sign = 0.0f64;
            for idx in self.domain.indices() {
                let x = self.domain.node_coords(&idx);
                let v = lambda + self.eta[i].eval_coords(&x)?;
                if !v.is_finite() || v.abs() < 1e-9 || (sign != 0.0 && v.signum() != sign) {
                    return Err(MetricError::InadmissibleLambda {
                        lambda,
                        index: i + 1,
                        coords: x,
                    });
                }
                sign = v.signum();
            }
        }
        Ok(())
    }

    /// The diagonal metric `G_ii = H_i^2 / (lambda + eta_i)`.
    pub fn evaluate(&self, lambda: f64) -> Result<DiagonalMetric, MetricError> {
        self.check_admissible(lambda)?;
        let mut g = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            let denom = ScalarExpr::number(lambda).add_expr(&self.eta[i]);
            let f = match &self.h[i] {
                Field::Expr(h) => Field::Expr(h.mul_expr(h).div_expr(&denom)),
                Field::Grid(hg) => {
                    let den = GridField::sample(&denom, &self.domain);
                    Field::Grid(hg.zip(&den, |h, d| h * h / d))
                }
            };
            g.push(f);
        }
        DiagonalMetric::new(g, self.domain.clone())
    }
}

/// Curvature-1 residual of the pencil at each requested lambda.
pub fn pencil_curvature_scan(
    pencil: &MetricPencil,
    lambdas: &[f64],
) -> Result<Vec<(f64, ResidualReport)>, MetricError> {
    lambdas
        .iter()
        .map(|&l| Ok((l, curvature_one_residual(&pencil.evaluate(l)?)?)))
        .collect()
}

/// Zero-curvature (flatness) residuals of an orthogonal net given by its
/// rotation coefficients: `d_k beta_ij = beta_ik beta_kj` and
/// `d_i beta_ij + d_j beta_ji + sum_k beta_ki beta_kj = 0`.
pub fn flatness_residual(rd: &RotationData) -> ResidualReport {
    let n = rd.n();
    let dom = &rd.domain;
    let mut named: Vec<(String, GridField)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let bij = rd.beta(i, j);
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let d = bij.derivative(k, dom.spacing(k));
                let prod = rd.beta(i, k).zip(rd.beta(k, j), |x, y| x * y);
                named.push((
                    format!("f1_{}{}{}", i + 1, j + 1, k + 1),
                    d.zip(&prod, |a, b| a - b),
                ));
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut res = rd
                .beta(i, j)
                .derivative(i, dom.spacing(i))
                .zip(&rd.beta(j, i).derivative(j, dom.spacing(j)), |a, b| a + b);
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let prod = rd.beta(k, i).zip(rd.beta(k, j), |x, y| x * y);
                res = res.zip(&prod, |a, b| a + b);
            }
            named.push((format!("f2_{}{}", i + 1, j + 1), res));
        }
    }
    let refs: Vec<(String, &GridField)> = named.iter().map(|(s, f)| (s.clone(), f)).collect();
    ResidualReport::collect_named(dom, &refs)
}
