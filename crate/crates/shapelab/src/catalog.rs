//! Catalog of third fundamental forms with closed-form Codazzi coefficients
//! and (where known) closed-form principal curvature radii, together with
//! safe default domain boxes keeping all denominators sign-definite.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

use crate::expr::{ExprError, ScalarExpr};
use crate::grid::{Field, GridDomain, GridError};
use crate::metric::{CodazziCoeffs, DiagonalMetric, MetricError};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("unknown example name {0:?}")]
    UnknownName(String),
    #[error("unknown parameter {0:?} for this example")]
    UnknownParam(String),
    #[error("{name} has no printed closed-form curvatures: {detail}")]
    NoClosedForm { name: String, detail: String },
    #[error("umbilic point (k^{i} = k^{j}) near {coords:?}")]
    Umbilic { i: usize, j: usize, coords: Vec<f64> },
    #[error("hyperquadric dimension must be 2 or 3, got {0}")]
    BadDim(usize),
}

/// Radii of principal curvature k^i(R), umbilic-free on the domain.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub k: Vec<Field>,
}

impl CurvatureField {
    /// Fails if two radii collide anywhere on the domain interior.
    pub fn validate_umbilic_free(&self, domain: &GridDomain) -> Result<(), CatalogError> {
        let samples: Vec<_> = self.k.iter().map(|f| f.sample(domain)).collect();
        for i in 0..samples.len() {
            for j in (i + 1)..samples.len() {
                for idx in domain.indices() {
                    if !domain.is_interior(&idx) {
                        continue;
                    }
                    let (a, b) = (samples[i].get(&idx), samples[j].get(&idx));
                    if !a.is_finite() || !b.is_finite() {
                        continue;
                    }
                    let scale = 1.0 + a.abs().max(b.abs());
                    if (a - b).abs() < 1e-9 * scale {
                        return Err(CatalogError::Umbilic {
                            i: i + 1,
                            j: j + 1,
                            coords: domain.node_coords(&idx),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleName {
    Monge,
    Moulding,
    Quadric,
    Dupin,
    ConfRevolution,
    TwoParam,
    OneParam,
    Hyperquadric,
}

impl ExampleName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExampleName::Monge => "monge",
            ExampleName::Moulding => "moulding",
            ExampleName::Quadric => "quadric",
            ExampleName::Dupin => "dupin",
            ExampleName::ConfRevolution => "conf_revolution",
            ExampleName::TwoParam => "two_param",
            ExampleName::OneParam => "one_param",
            ExampleName::Hyperquadric => "hyperquadric",
        }
    }

    pub fn all() -> [ExampleName; 8] {
        [
            ExampleName::Monge,
            ExampleName::Moulding,
            ExampleName::Quadric,
            ExampleName::Dupin,
            ExampleName::ConfRevolution,
            ExampleName::TwoParam,
            ExampleName::OneParam,
            ExampleName::Hyperquadric,
        ]
    }
}

impl FromStr for ExampleName {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<ExampleName, CatalogError> {
        ExampleName::all()
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| CatalogError::UnknownName(s.to_string()))
    }
}

/// Parameter/domain overrides on top of each example's defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub constants: BTreeMap<String, f64>,
    pub functions: BTreeMap<String, ScalarExpr>,
    pub domain: Option<GridDomain>,
    /// hyperquadric only: ambient dimension minus one (2 or 3)
    pub dim: Option<usize>,
}

impl Overrides {
    pub fn constant(mut self, name: &str, v: f64) -> Overrides {
        self.constants.insert(name.to_string(), v);
        self
    }

    pub fn function(mut self, name: &str, e: ScalarExpr) -> Overrides {
        self.functions.insert(name.to_string(), e);
        self
    }

    pub fn domain(mut self, d: GridDomain) -> Overrides {
        self.domain = Some(d);
        self
    }
}

/// A catalog entry: metric, closed-form Codazzi coefficients, optional
/// closed-form curvature radii, and the deformation-family dimension
/// (arbitrary functions counted once each).
#[derive(Debug, Clone)]
pub struct ExampleBundle {
    pub name: ExampleName,
    pub constants: BTreeMap<String, f64>,
    pub functions: BTreeMap<String, ScalarExpr>,
    pub metric: DiagonalMetric,
    pub codazzi: CodazziCoeffs,
    pub curvatures: Option<CurvatureField>,
    pub domain: GridDomain,
    pub family_dim: usize,
}

fn expr(src: &str) -> ScalarExpr {
    ScalarExpr::parse(src).expect("catalog literal")
}

fn bind(src: &str, consts: &BTreeMap<String, f64>) -> ScalarExpr {
    expr(src).bind_params(consts)
}

fn subst(src: &str, map: &BTreeMap<String, ScalarExpr>) -> ScalarExpr {
    expr(src).substitute(map)
}

fn merged_constants(
    defaults: &[(&str, f64)],
    ov: &Overrides,
) -> Result<BTreeMap<String, f64>, CatalogError> {
    let mut out: BTreeMap<String, f64> =
        defaults.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    for (k, v) in &ov.constants {
        if !out.contains_key(k) {
            return Err(CatalogError::UnknownParam(k.clone()));
        }
        out.insert(k.clone(), *v);
    }
    Ok(out)
}

fn merged_functions(
    defaults: &[(&str, &str)],
    ov: &Overrides,
) -> Result<BTreeMap<String, ScalarExpr>, CatalogError> {
    let mut out: BTreeMap<String, ScalarExpr> = defaults
        .iter()
        .map(|&(k, src)| (k.to_string(), expr(src)))
        .collect();
    for (k, e) in &ov.functions {
        if !out.contains_key(k) {
            return Err(CatalogError::UnknownParam(k.clone()));
        }
        out.insert(k.clone(), e.clone());
    }
    Ok(out)
}

fn box2(lo: [f64; 2], hi: [f64; 2]) -> GridDomain {
    GridDomain::new(lo.to_vec(), hi.to_vec(), vec![64, 64]).expect("catalog domain")
}

/// Builds the named example with defaults merged against `overrides`.
/// The returned metric is validated to be sign-definite per coefficient on
/// the domain interior, and the curvature field (if present) umbilic-free.
pub fn make_example(name: ExampleName, ov: &Overrides) -> Result<ExampleBundle, CatalogError> {
    let bundle = match name {
        ExampleName::Monge => {
            let consts = merged_constants(&[("c", 0.3)], ov)?;
            let funcs = merged_functions(&[("psi", "1 + 0.1*R2^2")], ov)?;
            let domain = ov.domain.clone().unwrap_or_else(|| box2([0.3, 0.0], [1.2, 1.0]));
            let g11 = bind("1/(1 + c/cos(R1)^2)", &consts);
            let g22 = expr("sin(R1)^2").div_expr(&funcs["psi"]);
            ExampleBundle {
                name,
                metric: DiagonalMetric::new(
                    vec![Field::Expr(g11), Field::Expr(g22)],
                    domain.clone(),
                )?,
                codazzi: CodazziCoeffs::from_fields_2d(
                    Field::Expr(ScalarExpr::number(0.0)),
                    Field::Expr(expr("cos(R1)/sin(R1)")),
                ),
                curvatures: None,
                domain,
                constants: consts,
                functions: funcs,
                family_dim: 2,
            }
        }
        ExampleName::Moulding => {
            let consts = merged_constants(&[], ov)?;
            let funcs = merged_functions(
                &[("phi", "0.1*sin(R2)"), ("psi", "1 + 0.1*sin(R2)")],
                ov,
            )?;
            let domain = ov.domain.clone().unwrap_or_else(|| box2([0.3, 0.0], [1.2, 1.0]));
            let mut map = BTreeMap::new();
            map.insert("PHI".to_string(), funcs["phi"].clone());
            let g22 = subst("sin(R1 + PHI)^2", &map).div_expr(&funcs["psi"]);
            let b = subst("cos(R1 + PHI)/sin(R1 + PHI)", &map);
            ExampleBundle {
                name,
                metric: DiagonalMetric::new(
                    vec![Field::Expr(ScalarExpr::number(1.0)), Field::Expr(g22)],
                    domain.clone(),
                )?,
                codazzi: CodazziCoeffs::from_fields_2d(
                    Field::Expr(ScalarExpr::number(0.0)),
                    Field::Expr(b),
                ),
                curvatures: None,
                domain,
                constants: consts,
                functions: funcs,
                family_dim: 1,
            }
        }
        ExampleName::Quadric => {
            // roots 1, 2, 3 by default
            let consts = merged_constants(&[("a", -6.0), ("b", 11.0), ("c", -6.0)], ov)?;
            let domain = ov.domain.clone().unwrap_or_else(|| box2([3.5, 4.55], [4.45, 5.5]));
            let g11 = bind("(R2 - R1)/(4*(R1^3 + a*R1^2 + b*R1 + c))", &consts);
            let g22 = bind("-(R2 - R1)/(4*(R2^3 + a*R2^2 + b*R2 + c))", &consts);
            ExampleBundle {
                name,
                metric: DiagonalMetric::new(
                    vec![Field::Expr(g11), Field::Expr(g22)],
                    domain.clone(),
                )?,
                codazzi: CodazziCoeffs::from_fields_2d(
                    Field::Expr(expr("1/(2*(R2 - R1))")),
                    Field::Expr(expr("1/(2*(R1 - R2))")),
                ),
                curvatures: Some(CurvatureField {
                    k: vec![
                        Field::Expr(expr("1/(R1*sqrt(R1*R2))")),
                        Field::Expr(expr("1/(R2*sqrt(R1*R2))")),
                    ],
                }),
                domain,
                constants: consts,
                functions: BTreeMap::new(),
                family_dim: 3,
            }
        }
        ExampleName::Dupin => {
            let consts = merged_constants(&[("a", 1.0), ("b", 0.0), ("c", 1.0)], ov)?;
            let domain = ov.domain.clone().unwrap_or_else(|| box2([2.0, 0.0], [3.0, 1.0]));
            let g11 = bind("1/((R1 - R2)^2*(a*R1^2 + b*R1 + c))", &consts);
            let g22 = bind("-1/((R1 - R2)^2*(a*R2^2 + b*R2 + c + 1))", &consts);
            ExampleBundle {
                name,
                metric: DiagonalMetric::new(
                    vec![Field::Expr(g11), Field::Expr(g22)],
                    domain.clone(),
                )?,
                codazzi: CodazziCoeffs::from_fields_2d(
                    Field::Expr(expr("1/(R1 - R2)")),
                    Field::Expr(expr("1/(R2 - R1)")),
                ),
                curvatures: Some(CurvatureField {
                    k: vec![Field::Expr(expr("R2")), Field::Expr(expr("R1"))],
                }),
                domain,
                constants: consts,
                functions: BTreeMap::new(),
                family_dim: 3,
            }
        }
        ExampleName::ConfRevolution => {
            let consts = merged_constants(&[("a", 1.0), ("b", 0.0), ("c", 1.0)], ov)?;
            let funcs = merged_functions(
                &[("p", "1 + 0.1*sin(R2)"), ("q", "1/(1 + 0.1*sin(R2))")],
                ov,
            )?;
            let domain = ov.domain.clone().unwrap_or_else(|| box2([2.0, 0.0], [3.0, 1.0]));
            let p = funcs["p"].clone();
            let pp = p.differentiate("R2");
            let mut map = BTreeMap::new();
            map.insert("P".to_string(), p.clone());
            map.insert("PP".to_string(), pp.clone());
            map.insert("Q".to_string(), funcs["q"].clone());
            map.insert("QP".to_string(), funcs["q"].differentiate("R2"));
            let g11 = subst("P^2/((R1 - R2)^2*(A*R1^2 + B*R1 + C))", &map)
                .bind_params(&upper_abc(&consts));
            let g22 = subst(
                "-(P + PP*(R1 - R2))^2/((R1 - R2)^2*(A*R2^2 + B*R2 + C + P^2))",
                &map,
            )
            .bind_params(&upper_abc(&consts));
            let a_cod = subst("1/(R1 - R2) + PP/P", &map);
            let b_cod = subst("1/(R2 - R1) + PP/(P + PP*(R1 - R2))", &map);
            let k1 = subst("Q", &map);
            // with q = 1/p this reduces to k^2 = 1/(p + p'(R1 - R2))
            let k2 = subst("Q + QP*P*(R1 - R2)/(P + PP*(R1 - R2))", &map);
            ExampleBundle {
                name,
                metric: DiagonalMetric::new(
                    vec![Field::Expr(g11), Field::Expr(g22)],
                    domain.clone(),
                )?,
                codazzi: CodazziCoeffs::from_fields_2d(Field::Expr(a_cod), Field::Expr(b_cod)),
                curvatures: Some(CurvatureField {
                    k: vec![Field::Expr(k1), Field::Expr(k2)],
                }),
                domain,
                constants: consts,
                functions: funcs,
                family_dim: 3,
            }
        }
        ExampleName::TwoParam => {
            let consts = merged_constants(&[("a", 0.2), ("c", 1.5)], ov)?;
            let domain = ov.domain.clone().unwrap_or_else(|| box2([1.0, 2.5], [2.0, 3.5]));
            let g11 = bind("(R1 - R2)/((R1 + R2)^2*(a*R1^2 - R1 + c))", &consts);
            let g22 = bind("-(R1 - R2)/((R1 + R2)^2*(a*R2^2 - R2 + c))", &consts);
            ExampleBundle {
                name,
                metric: DiagonalMetric::new(
                    vec![Field::Expr(g11), Field::Expr(g22)],
                    domain.clone(),
                )?,
                codazzi: CodazziCoeffs::from_fields_2d(
                    Field::Expr(expr("1/(2*(R2 - R1)) - 1/(R1 + R2)")),
                    Field::Expr(expr("1/(2*(R1 - R2)) - 1/(R1 + R2)")),
                ),
                curvatures: Some(CurvatureField {
                    k: vec![
                        Field::Expr(expr("(R1 + R2)^2/(R1^2.5*R2^1.5)")),
                        Field::Expr(expr("(R1 + R2)^2/(R1^1.5*R2^2.5)")),
                    ],
                }),
                domain,
                constants: consts,
                functions: BTreeMap::new(),
                family_dim: 2,
            }
        }
        ExampleName::OneParam => {
            let consts = merged_constants(&[("c", 0.5)], ov)?;
            let domain = ov.domain.clone().unwrap_or_else(|| box2([0.0, 0.0], [1.0, 1.0]));
            let g11 = bind("2/(cosh(R1 + R2)^2*(1 + c))", &consts);
            let g22 = bind("2/(cosh(R1 + R2)^2*(1 - c))", &consts);
            let t = expr("-sinh(R1 + R2)/cosh(R1 + R2)");
            ExampleBundle {
                name,
                metric: DiagonalMetric::new(
                    vec![Field::Expr(g11), Field::Expr(g22)],
                    domain.clone(),
                )?,
                codazzi: CodazziCoeffs::from_fields_2d(
                    Field::Expr(t.clone()),
                    Field::Expr(t),
                ),
                curvatures: Some(CurvatureField {
                    k: vec![
                        Field::Expr(expr("cosh(R1 + R2)^2")),
                        Field::Expr(expr("-cosh(R1 + R2)^2")),
                    ],
                }),
                domain,
                constants: consts,
                functions: BTreeMap::new(),
                family_dim: 1,
            }
        }
        ExampleName::Hyperquadric => {
            let n = ov.dim.unwrap_or(3);
            if !(2..=3).contains(&n) {
                return Err(CatalogError::BadDim(n));
            }
            // default roots 1..n+1 of the degree n+1 polynomial
            let mut defaults: Vec<(String, f64)> = Vec::new();
            for s in 0..=n {
                defaults.push((format!("a{}", s + 1), (s + 1) as f64));
            }
            let defaults_ref: Vec<(&str, f64)> =
                defaults.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            let consts = merged_constants(&defaults_ref, ov)?;
            let domain = ov.domain.clone().unwrap_or_else(|| {
                let lo: Vec<f64> = (0..n).map(|i| 5.0 + 1.1 * i as f64).collect();
                let hi: Vec<f64> = (0..n).map(|i| 5.6 + 1.1 * i as f64).collect();
                GridDomain::new(lo, hi, vec![if n == 2 { 64 } else { 24 }; n])
                    .expect("catalog domain")
            });
            let poly = |v: &str| -> String {
                (0..=n)
                    .map(|s| format!("({v} - a{})", s + 1))
                    .collect::<Vec<_>>()
                    .join("*")
            };
            // the overall sign alternates with n so that the form keeps
            // constant curvature +1 (at n = 2 it reduces to the quadric form)
            let sign = if n % 2 == 0 { "" } else { "-" };
            let mut g = Vec::with_capacity(n);
            for i in 0..n {
                let num: String = (0..n)
                    .filter(|&k| k != i)
                    .map(|k| format!("(R{} - R{})", k + 1, i + 1))
                    .collect::<Vec<_>>()
                    .join("*");
                let src = format!("{sign}({num})/(4*({}))", poly(&format!("R{}", i + 1)));
                g.push(Field::Expr(bind(&src, &consts)));
            }
            let mut chi: Vec<Vec<Option<Field>>> = vec![(0..n).map(|_| None).collect(); n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        chi[i][j] = Some(Field::Expr(expr(&format!(
                            "1/(2*(R{} - R{}))",
                            j + 1,
                            i + 1
                        ))));
                    }
                }
            }
            let prod: String = (0..n)
                .map(|k| format!("R{}", k + 1))
                .collect::<Vec<_>>()
                .join("*");
            let k = (0..n)
                .map(|i| Field::Expr(expr(&format!("1/(R{}*sqrt({prod}))", i + 1))))
                .collect();
            ExampleBundle {
                name,
                metric: DiagonalMetric::new(g, domain.clone())?,
                codazzi: CodazziCoeffs { n, chi },
                curvatures: Some(CurvatureField { k }),
                domain,
                constants: consts,
                functions: BTreeMap::new(),
                family_dim: n + 1,
            }
        }
    };
    bundle.metric.validate_nonsingular()?;
    if let Some(k) = &bundle.curvatures {
        k.validate_umbilic_free(&bundle.domain)?;
    }
    Ok(bundle)
}

fn upper_abc(consts: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    consts
        .iter()
        .map(|(k, v)| (k.to_uppercase(), *v))
        .collect()
}

/// Returns the printed closed-form curvature radii; Examples 1-2 have only
/// the ODE-level description and return an error saying so.
pub fn closed_form_curvatures(
    name: ExampleName,
    ov: &Overrides,
) -> Result<CurvatureField, CatalogError> {
    let bundle = make_example(name, ov)?;
    bundle.curvatures.ok_or_else(|| CatalogError::NoClosedForm {
        name: name.as_str().to_string(),
        detail: match name {
            ExampleName::Monge => {
                "k^1 = k^1(R^1) solves d2 k^1 = 0; k^2 from the cot(R^1) Codazzi equation"
                    .to_string()
            }
            _ => "k^1 = k^1(R^1) solves d2 k^1 = 0; k^2 from the moulding Codazzi equation"
                .to_string(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{christoffel_ab, constant_curvature_residual, curvature_one_residual};

    fn max_field_diff(a: &Field, b: &Field, dom: &GridDomain) -> f64 {
        let (fa, fb) = (a.sample(dom), b.sample(dom));
        let mut m = 0.0f64;
        for idx in dom.indices() {
            if !dom.is_interior(&idx) {
                continue;
            }
            let (x, y) = (fa.get(&idx), fb.get(&idx));
            if x.is_finite() && y.is_finite() {
                m = m.max((x - y).abs());
            }
        }
        m
    }

    #[test]
    fn all_two_dim_examples_have_curvature_one() {
        for name in ExampleName::all() {
            if name == ExampleName::Hyperquadric {
                continue;
            }
            let b = make_example(name, &Overrides::default()).unwrap();
            let r = curvature_one_residual(&b.metric).unwrap();
            assert!(r.max < 1e-6, "{}: residual {}", name.as_str(), r.max);
        }
    }

    #[test]
    fn hyperquadric_has_constant_curvature_one() {
        let b = make_example(ExampleName::Hyperquadric, &Overrides::default()).unwrap();
        assert_eq!(b.metric.n(), 3);
        let r = constant_curvature_residual(&b.metric, 1.0).unwrap();
        assert!(r.max < 1e-6, "residual {}", r.max);
    }

    #[test]
    fn printed_codazzi_matches_recomputed_christoffel() {
        for name in ExampleName::all() {
            let b = make_example(name, &Overrides::default()).unwrap();
            let computed = christoffel_ab(&b.metric).unwrap();
            let n = b.metric.n();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let d = max_field_diff(b.codazzi.get(i, j), computed.get(i, j), &b.domain);
                    assert!(
                        d < 1e-8,
                        "{}: chi_{}{} differs by {d}",
                        name.as_str(),
                        i + 1,
                        j + 1
                    );
                }
            }
        }
    }

    #[test]
    fn quadric_curvature_point_values() {
        let b = make_example(ExampleName::Quadric, &Overrides::default()).unwrap();
        let k = b.curvatures.unwrap();
        let at = |f: &Field, pt: &[f64]| match f {
            Field::Expr(e) => e.eval_coords(pt).unwrap(),
            _ => panic!("expected symbolic curvature"),
        };
        assert!((at(&k.k[0], &[4.0, 9.0]) - 1.0 / 24.0).abs() < 1e-14);
        assert!((at(&k.k[1], &[4.0, 9.0]) - 1.0 / 54.0).abs() < 1e-14);
    }

    #[test]
    fn codazzi_fields_do_not_mention_deformation_constants() {
        // the same Codazzi coefficients must come out for different draws
        for name in [ExampleName::Quadric, ExampleName::OneParam, ExampleName::TwoParam] {
            let b1 = make_example(name, &Overrides::default()).unwrap();
            let ov = match name {
                ExampleName::Quadric => Overrides::default()
                    .constant("a", -5.0)
                    .constant("b", 9.0)
                    .constant("c", -5.0),
                ExampleName::TwoParam => {
                    Overrides::default().constant("a", 0.25).constant("c", 1.8)
                }
                _ => Overrides::default().constant("c", -0.2),
            };
            let b2 = make_example(name, &ov).unwrap();
            assert!(max_field_diff(b1.codazzi.a(), b2.codazzi.a(), &b1.domain) == 0.0);
            assert!(max_field_diff(b1.codazzi.b(), b2.codazzi.b(), &b1.domain) == 0.0);
        }
    }

    #[test]
    fn example5_with_p_r2_maps_to_dupin_under_inversion() {
        // p = R^2 and R^i -> 1/R^i turns the conformal-revolution Codazzi
        // coefficient into the Dupin one; the coefficient transforms with
        // dR^2/dx^2 = -1/(x^2)^2
        let ov = Overrides::default()
            .function("p", expr("R2"))
            .function("q", expr("1/R2"));
        let b = make_example(ExampleName::ConfRevolution, &ov).unwrap();
        let a_expr = match b.codazzi.a() {
            Field::Expr(e) => e.clone(),
            _ => panic!(),
        };
        for s in 0..20 {
            let x1 = 2.0 + 0.05 * s as f64;
            let x2 = 0.3 + 0.02 * s as f64;
            let (r1, r2) = (1.0 / x1, 1.0 / x2);
            let transformed = a_expr.eval_coords(&[r1, r2]).unwrap() * (-1.0 / (x2 * x2));
            let dupin = 1.0 / (x1 - x2);
            assert!(
                (transformed - dupin).abs() < 1e-12,
                "point {s}: {transformed} vs {dupin}"
            );
        }
    }

    #[test]
    fn hyperquadric_n2_degenerates_to_quadric() {
        // same roots written as the expanded cubic for the quadric bundle
        let ov2 = Overrides::default().domain(box2([3.5, 4.55], [4.45, 5.5]));
        let hq = make_example(
            ExampleName::Hyperquadric,
            &Overrides {
                dim: Some(2),
                domain: Some(box2([3.5, 4.55], [4.45, 5.5])),
                ..Default::default()
            },
        )
        .unwrap();
        let q = make_example(ExampleName::Quadric, &ov2).unwrap();
        assert!(max_field_diff(hq.codazzi.a(), q.codazzi.a(), &q.domain) < 1e-12);
        assert!(max_field_diff(hq.codazzi.b(), q.codazzi.b(), &q.domain) < 1e-12);
        assert!(max_field_diff(&hq.metric.g[0], &q.metric.g[0], &q.domain) < 1e-12);
        let hk = hq.curvatures.unwrap();
        let qk = q.curvatures.unwrap();
        assert!(max_field_diff(&hk.k[0], &qk.k[0], &q.domain) < 1e-14);
    }

    #[test]
    fn family_dims_match_statements() {
        let dims: Vec<usize> = ExampleName::all()
            .iter()
            .map(|&n| make_example(n, &Overrides::default()).unwrap().family_dim)
            .collect();
        assert_eq!(dims, vec![2, 1, 3, 3, 3, 2, 1, 4]);
    }

    #[test]
    fn moulding_examples_report_no_closed_form() {
        for name in [ExampleName::Monge, ExampleName::Moulding] {
            assert!(matches!(
                closed_form_curvatures(name, &Overrides::default()),
                Err(CatalogError::NoClosedForm { .. })
            ));
        }
        assert!(closed_form_curvatures(ExampleName::Dupin, &Overrides::default()).is_ok());
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let ov = Overrides::default().constant("zz", 1.0);
        assert!(matches!(
            make_example(ExampleName::Dupin, &ov),
            Err(CatalogError::UnknownParam(_))
        ));
    }
}
