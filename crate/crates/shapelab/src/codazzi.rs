//! Residuals and integration for the linear Codazzi system
//! d_j k^i = chi_ij (k^j - k^i), and the affine S-deformation span check.

use thiserror::Error;

use crate::catalog::CurvatureField;
use crate::expr::{ExprError, ScalarExpr};
use crate::grid::{Field, GridDomain, GridError, GridField, ResidualReport};
use crate::metric::{
    christoffel_ab, curvature_one_residual, CodazziCoeffs, DiagonalMetric, MetricError,
};

#[derive(Debug, Error)]
pub enum CodazziError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("expected {expected} curvature radii, got {got}")]
    Dim { expected: usize, got: usize },
    #[error("k^1 - k^2 crosses zero while marching, near {coords:?}")]
    UmbilicCrossing { coords: Vec<f64> },
    #[error("metrics do not share Codazzi coefficients (max difference {max_diff:e}); not an S-deformation pair")]
    NotSDeformPair { max_diff: f64 },
    #[error("Picard iteration for the Codazzi system did not converge (last update {last:e})")]
    NoConvergence { last: f64 },
}

/// Max over i != j and interior nodes of |d_j k^i / (k^j - k^i) - chi_ij|.
/// Near-umbilic nodes (|k^i - k^j| < 1e-9 relative) are excluded and counted.
pub fn codazzi_residual(
    k: &CurvatureField,
    c: &CodazziCoeffs,
    domain: &GridDomain,
) -> Result<ResidualReport, CodazziError> {
    let n = domain.dim();
    if k.k.len() != n || c.n != n {
        return Err(CodazziError::Dim {
            expected: n,
            got: k.k.len().min(c.n),
        });
    }
    let ks: Vec<GridField> = k.k.iter().map(|f| f.sample(domain)).collect();
    let mut named: Vec<(String, GridField)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dk = k.k[i].derivative(j, domain).sample(domain);
            let chi = c.get(i, j).sample(domain);
            let mut res = GridField::zeros(&domain.n);
            for idx in domain.indices() {
                let (ki, kj) = (ks[i].get(&idx), ks[j].get(&idx));
                let gap = kj - ki;
                let scale = 1.0 + ki.abs().max(kj.abs());
                let v = if gap.abs() < 1e-9 * scale {
                    f64::NAN
                } else {
                    dk.get(&idx) / gap - chi.get(&idx)
                };
                res.set(&idx, v);
            }
            named.push((format!("codazzi_{}{}", i + 1, j + 1), res));
        }
    }
    let refs: Vec<(String, &GridField)> =
        named.iter().map(|(s, f)| (s.clone(), f)).collect();
    Ok(ResidualReport::collect_named(domain, &refs))
}

/// Integrates the n = 2 Codazzi system from boundary data
/// k^1(R^1, lo_2) and k^2(lo_1, R^2) by alternating Picard sweeps.
pub fn integrate_codazzi(
    c: &CodazziCoeffs,
    k1_boundary: &ScalarExpr,
    k2_boundary: &ScalarExpr,
    domain: &GridDomain,
) -> Result<CurvatureField, CodazziError> {
    if c.n != 2 || domain.dim() != 2 {
        return Err(CodazziError::Dim {
            expected: 2,
            got: c.n.max(domain.dim()),
        });
    }
    let a = c.a().sample(domain);
    let b = c.b().sample(domain);
    let (h1, h2) = (domain.spacing(0), domain.spacing(1));
    let d1 = GridField::sample(k1_boundary, domain).extend_base(1);
    let d2 = GridField::sample(k2_boundary, domain).extend_base(0);
    let mut k1 = d1.clone();
    let mut k2 = d2.clone();
    let mut last = f64::INFINITY;
    for _ in 0..80 {
        let gap = k2.zip(&k1, |x, y| x - y);
        let new_k1 = add(&d1, &a.zip(&gap, |x, y| x * y).cumint(1, h2));
        let new_k2 = add(&d2, &b.zip(&gap, |x, y| -x * y).cumint(0, h1));
        last = diff(&new_k1, &k1).max(diff(&new_k2, &k2));
        k1 = new_k1;
        k2 = new_k2;
        if last < 1e-13 {
            break;
        }
    }
    if !(last < 1e-10) {
        return Err(CodazziError::NoConvergence { last });
    }
    // abort if the solution reached or crossed the umbilic locus k^1 = k^2
    let gap = k1.zip(&k2, |x, y| x - y);
    for idx in domain.indices() {
        let g = gap.get(&idx);
        if !g.is_finite() || g.abs() < 1e-9 * (1.0 + k1.get(&idx).abs()) {
            return Err(CodazziError::UmbilicCrossing {
                coords: domain.node_coords(&idx),
            });
        }
        for axis in 0..2 {
            if idx[axis] + 1 < domain.n[axis] {
                let mut next = idx.clone();
                next[axis] += 1;
                if g * gap.get(&next) < 0.0 {
                    return Err(CodazziError::UmbilicCrossing {
                        coords: domain.node_coords(&idx),
                    });
                }
            }
        }
    }
    Ok(CurvatureField {
        k: vec![Field::Grid(k1), Field::Grid(k2)],
    })
}

fn add(a: &GridField, b: &GridField) -> GridField {
    a.zip(b, |x, y| x + y)
}

fn diff(a: &GridField, b: &GridField) -> f64 {
    a.zip(b, |x, y| x - y).max_abs()
}

/// Metrics sharing the Codazzi coefficients form an affine
/// family in the inverse coefficients. Verifies that
/// G^ii = lambda G^ii_1 + (1 - lambda) G^ii_2 still has curvature +1.
pub fn sdeform_span_check(
    m1: &DiagonalMetric,
    m2: &DiagonalMetric,
    lambda: f64,
) -> Result<ResidualReport, CodazziError> {
    let dom = &m1.domain;
    let c1 = christoffel_ab(m1)?;
    let c2 = christoffel_ab(m2)?;
    let mut max_diff = 0.0f64;
    for i in 0..m1.n() {
        for j in 0..m1.n() {
            if i == j {
                continue;
            }
            let f1 = c1.get(i, j).sample(dom);
            let f2 = c2.get(i, j).sample(dom);
            for idx in dom.indices() {
                if !dom.is_interior(&idx) {
                    continue;
                }
                let (x, y) = (f1.get(&idx), f2.get(&idx));
                if x.is_finite() && y.is_finite() {
                    max_diff = max_diff.max((x - y).abs());
                }
            }
        }
    }
    if max_diff > 1e-8 {
        return Err(CodazziError::NotSDeformPair { max_diff });
    }
    let mixed = mix_metrics(m1, m2, lambda)?;
    Ok(curvature_one_residual(&mixed)?)
}

/// The metric with inverse coefficients mixed affinely:
/// G_ii = 1 / (lambda/G_ii(m1) + (1-lambda)/G_ii(m2)). Exact (symbolic)
/// when both inputs are symbolic.
pub fn mix_metrics(
    m1: &DiagonalMetric,
    m2: &DiagonalMetric,
    lambda: f64,
) -> Result<DiagonalMetric, CodazziError> {
    if m1.n() != m2.n() {
        return Err(CodazziError::Dim {
            expected: m1.n(),
            got: m2.n(),
        });
    }
    let dom = m1.domain.clone();
    let mut g = Vec::with_capacity(m1.n());
    for i in 0..m1.n() {
        match (&m1.g[i], &m2.g[i]) {
            (Field::Expr(e1), Field::Expr(e2)) => {
                let inv = ScalarExpr::number(lambda)
                    .div_expr(e1)
                    .add_expr(&ScalarExpr::number(1.0 - lambda).div_expr(e2));
                g.push(Field::Expr(ScalarExpr::number(1.0).div_expr(&inv)));
            }
            _ => {
                let f1 = m1.g[i].sample(&dom);
                let f2 = m2.g[i].sample(&dom);
                g.push(Field::Grid(f1.zip(&f2, |x, y| {
                    1.0 / (lambda / x + (1.0 - lambda) / y)
                })));
            }
        }
    }
    Ok(DiagonalMetric::new(g, dom)?)
}
