//! End-to-end acceptance gates. Each test prints exactly one pass/fail line
//! for its criterion; tolerances are pinned and not configurable.

use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shapelab::catalog::{closed_form_curvatures, make_example, ExampleName, Overrides};
use shapelab::codazzi::{codazzi_residual, sdeform_span_check};
use shapelab::compat::{nijenhuis, flat_pencil_report, OperatorField};
use shapelab::expr::ScalarExpr;
use shapelab::frames::{integrate_frame, scaling_law_check, FrameOptions};
use shapelab::grid::GridDomain;
use shapelab::lame::{
    const_eta_integrals, integrate_darboux, lax_zero_curvature_residual, solve_goursat_surface,
    solve_triple_system, surface_system_residual, triple_rotation_data, DarbouxBoundary, LaxForm,
};
use shapelab::metric::{christoffel_ab, curvature_one_residual, MetricPencil};
use shapelab::surface::{
    mesh_fundamental_forms, quadric_fit_residual, reconstruct_bundle, BasePose,
};

fn gate(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

fn e(src: &str) -> ScalarExpr {
    ScalarExpr::parse(src).unwrap()
}

fn cubic_from_roots(r1: f64, r2: f64, r3: f64) -> (f64, f64, f64) {
    (-(r1 + r2 + r3), r1 * r2 + r1 * r3 + r2 * r3, -(r1 * r2 * r3))
}

fn quadric_overrides(r1: f64, r2: f64, r3: f64) -> Overrides {
    let (a, b, c) = cubic_from_roots(r1, r2, r3);
    Overrides::default()
        .constant("a", a)
        .constant("b", b)
        .constant("c", c)
}

#[test]
fn criterion_1_catalog_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    let mut worst_name = "";
    let mut check = |name: &'static str, ov: Overrides| {
        let bundle = make_example(name.parse().unwrap(), &ov).unwrap();
        let r = curvature_one_residual(&bundle.metric).unwrap();
        if r.max > worst {
            worst = r.max;
            worst_name = name;
        }
    };
    for _ in 0..5 {
        check(
            "monge",
            Overrides::default()
                .constant("c", rng.gen_range(0.0..1.0))
                .function("psi", e(&format!("1 + {}*R2^2", rng.gen_range(0.05..0.2)))),
        );
        check(
            "moulding",
            Overrides::default()
                .function("phi", e(&format!("{}*sin(R2)", rng.gen_range(0.05..0.2))))
                .function("psi", e(&format!("1 + {}*sin(R2)", rng.gen_range(0.05..0.2)))),
        );
        check(
            "quadric",
            quadric_overrides(
                rng.gen_range(0.8..1.2),
                rng.gen_range(1.8..2.2),
                rng.gen_range(2.8..3.2),
            ),
        );
        check(
            "dupin",
            Overrides::default()
                .constant("a", rng.gen_range(0.5..1.5))
                .constant("c", rng.gen_range(0.5..1.5)),
        );
        check(
            "conf_revolution",
            Overrides::default()
                .constant("a", rng.gen_range(0.5..1.5))
                .constant("c", rng.gen_range(0.5..1.5))
                .function(
                    "p",
                    e(&format!("1 + {}*sin(R2)", rng.gen_range(0.05..0.15))),
                ),
        );
        check(
            "two_param",
            Overrides::default()
                .constant("a", rng.gen_range(0.2..0.3))
                .constant("c", rng.gen_range(1.5..2.0)),
        );
        check(
            "one_param",
            Overrides::default().constant("c", rng.gen_range(-0.8..0.8)),
        );
        // hyperquadric (n = 3): random root shifts within +-0.3
        let mut ov = Overrides::default();
        for (i, base) in [1.0, 2.0, 3.0, 4.0].iter().enumerate() {
            ov = ov.constant(&format!("a{}", i + 1), base + rng.gen_range(-0.3..0.3));
        }
        check("hyperquadric", ov);
    }
    gate(
        "1 catalog-curvature",
        worst <= 1e-6,
        &format!("worst residual {worst:.3e} ({worst_name}), 40 draws"),
    );
}

#[test]
fn criterion_2_codazzi_closure() {
    let closed_form = [
        "quadric",
        "dupin",
        "conf_revolution",
        "two_param",
        "one_param",
        "hyperquadric",
    ];
    let mut worst_codazzi = 0.0f64;
    for name in closed_form {
        let bundle = make_example(name.parse().unwrap(), &Overrides::default()).unwrap();
        let k = closed_form_curvatures(name.parse().unwrap(), &Overrides::default()).unwrap();
        let r = codazzi_residual(&k, &bundle.codazzi, &bundle.domain).unwrap();
        worst_codazzi = worst_codazzi.max(r.max);
    }
    // printed a, b fields vs the Christoffel symbols of each metric
    let printed = [
        "monge",
        "quadric",
        "dupin",
        "conf_revolution",
        "two_param",
        "one_param",
    ];
    let mut worst_ab = 0.0f64;
    for name in printed {
        let bundle = make_example(name.parse().unwrap(), &Overrides::default()).unwrap();
        let computed = christoffel_ab(&bundle.metric).unwrap();
        for (i, j) in [(0usize, 1usize), (1, 0)] {
            let got = computed.get(i, j).sample(&bundle.domain);
            let want = bundle.codazzi.get(i, j).sample(&bundle.domain);
            for idx in bundle.domain.indices() {
                if !bundle.domain.is_interior(&idx) {
                    continue;
                }
                let d = (got.get(&idx) - want.get(&idx)).abs();
                if d.is_finite() {
                    worst_ab = worst_ab.max(d);
                }
            }
        }
    }
    gate(
        "2 codazzi-closure",
        worst_codazzi <= 1e-8 && worst_ab <= 1e-8,
        &format!("codazzi {worst_codazzi:.3e}, christoffel match {worst_ab:.3e}"),
    );
}

#[test]
fn criterion_3_sdeform_linearity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m1 = make_example(ExampleName::Quadric, &quadric_overrides(1.0, 2.0, 3.0))
        .unwrap()
        .metric;
    let m2 = make_example(ExampleName::Quadric, &quadric_overrides(0.9, 2.1, 3.05))
        .unwrap()
        .metric;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let lambda = rng.gen_range(0.0..1.0);
        let r = sdeform_span_check(&m1, &m2, lambda).unwrap();
        worst = worst.max(r.max);
    }
    gate(
        "3 sdeform-linearity",
        worst <= 1e-6,
        &format!("worst mix residual {worst:.3e}, 10 mixes"),
    );
}

#[test]
fn criterion_4_pencil_and_lax() {
    let dom = GridDomain::new(vec![0.0, 0.0], vec![0.5, 0.5], vec![64, 64]).unwrap();
    let sol = solve_goursat_surface(&e("0.3"), &e("0.2"), &dom).unwrap();
    let s4 = surface_system_residual(&sol.rotation).max;
    let mut lax = 0.0f64;
    for lambda in [0.1, 1.0, 10.0] {
        for form in [LaxForm::ThreeByThree, LaxForm::TwoByTwo] {
            lax = lax
                .max(lax_zero_curvature_residual(&sol.rotation, lambda, form).unwrap().max);
        }
    }
    let pencil = MetricPencil::from_rotation(&sol.rotation);
    let mut scan = 0.0f64;
    for lambda in [0.1, 1.0, 2.0, 5.0, 10.0] {
        let m = pencil.evaluate(lambda).unwrap();
        scan = scan.max(curvature_one_residual(&m).unwrap().max);
    }
    gate(
        "4 pencil-lax",
        s4 <= 1e-6 && lax <= 1e-5 && scan <= 1e-6,
        &format!("system {s4:.3e}, lax {lax:.3e}, scan {scan:.3e}"),
    );
}

#[test]
fn criterion_5_integrals() {
    let dom = GridDomain::new(vec![0.0, 0.0], vec![0.5, 0.5], vec![64, 64]).unwrap();
    let sol = solve_goursat_surface(&e("0.3"), &e("0.2"), &dom).unwrap();
    let data = const_eta_integrals(&sol.rotation).unwrap();
    let variation = data.variation.iter().cloned().fold(0.0, f64::max);

    let tdom = GridDomain::new(vec![0.0; 3], vec![0.4; 3], vec![20, 20, 20]).unwrap();
    let tsol = solve_triple_system(&e("0.1"), &e("0"), &e("0.05"), &tdom).unwrap();
    let trd = triple_rotation_data(&tsol).unwrap();
    let tdata = const_eta_integrals(&trd).unwrap();
    let mut p_err = 0.0f64;
    for (i, want) in [(0usize, 1.0f64), (1, 1.0), (2, -1.0)] {
        for v in &tdata.p[i].data {
            p_err = p_err.max((v - want).abs());
        }
    }
    gate(
        "5 integrals",
        variation <= 1e-6 && p_err <= 1e-5,
        &format!("surface-pair variation {variation:.3e}, triple P error {p_err:.3e}"),
    );
}

#[test]
fn criterion_6_darboux_monge_ampere() {
    let dom = GridDomain::new(vec![0.0, 0.0], vec![0.5, 0.5], vec![64, 64]).unwrap();
    let sol = solve_goursat_surface(&e("0.3"), &e("0.2"), &dom).unwrap();
    let g_first = sol.first_order_residual().max;
    let g_ma = sol.monge_ampere_residual().max;

    let tdom = GridDomain::new(vec![0.0; 3], vec![0.4; 3], vec![24, 24, 24]).unwrap();
    let tsol = solve_triple_system(&e("0.1"), &e("0"), &e("0.05"), &tdom).unwrap();
    let t_first = tsol.first_order_residual().max;
    let t_ma = tsol.monge_ampere_residual().max;

    // general integrator against the dedicated Goursat solver
    let gdom = GridDomain::new(vec![0.0, 0.0], vec![0.5, 0.5], vec![48, 48]).unwrap();
    let gsol = solve_goursat_surface(&e("0.3"), &e("0.2"), &gdom).unwrap();
    let boundary = DarbouxBoundary {
        beta: vec![
            vec![None, Some(e("cosh(0.3)"))],
            vec![Some(e("cos(0.2)")), None],
        ],
        h: Some(vec![e("sin(0.2)"), e("sinh(0.3)")]),
    };
    let rd = integrate_darboux(&[e("-1/2"), e("1/2")], &boundary, &gdom).unwrap();
    let mut agree = 0.0f64;
    for (a, b) in [
        (rd.beta(0, 1), gsol.rotation.beta(0, 1)),
        (rd.beta(1, 0), gsol.rotation.beta(1, 0)),
        (&rd.h[0], &gsol.rotation.h[0]),
        (&rd.h[1], &gsol.rotation.h[1]),
    ] {
        agree = agree.max(a.zip(b, |x, y| x - y).max_abs());
    }

    // Richardson sanity: halving the step should cut the residual >= 3.5x
    let coarse = solve_goursat_surface(
        &e("0.3"),
        &e("0.2"),
        &GridDomain::new(vec![0.0, 0.0], vec![0.5, 0.5], vec![17, 17]).unwrap(),
    )
    .unwrap()
    .first_order_residual()
    .max;
    let fine = solve_goursat_surface(
        &e("0.3"),
        &e("0.2"),
        &GridDomain::new(vec![0.0, 0.0], vec![0.5, 0.5], vec![33, 33]).unwrap(),
    )
    .unwrap()
    .first_order_residual()
    .max;
    let ratio = coarse / fine;

    gate(
        "6 darboux-monge-ampere",
        g_first <= 1e-6
            && g_ma <= 1e-5
            && t_first <= 1e-6
            && t_ma <= 1e-5
            && agree <= 1e-4
            && ratio >= 3.5,
        &format!(
            "first-order {:.3e}, MA {:.3e}, solver agreement {agree:.3e}, Richardson {ratio:.2}",
            g_first.max(t_first),
            g_ma.max(t_ma)
        ),
    );
}

#[test]
fn criterion_7_flat_pencil() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dom = GridDomain::new(vec![0.5, 0.5], vec![1.5, 1.5], vec![12, 12]).unwrap();
    let mut all_valid_pass = true;
    let mut all_negative_fail = true;
    let mut worst_negative = f64::INFINITY;
    for _ in 0..5 {
        let (a, b) = (rng.gen_range(0.1..0.4), rng.gen_range(0.1..0.4));
        let (p, q) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let g = vec![e(&format!("1 + {a}*R1")), e(&format!("2 + {b}*R2^2"))];
        // valid pencil: gt_ii = g_ii / eta_i(R^i)
        let gt = vec![
            g[0].div_expr(&e(&format!("{p} + R1"))),
            g[1].div_expr(&e(&format!("{q} + R2^2"))),
        ];
        let rep = flat_pencil_report(&g, &gt, &dom, 1e-6).unwrap();
        all_valid_pass &= rep.pass;
        // perturbed negative: flat, but eta_1 depends on the wrong variable
        let c = rng.gen_range(0.2..0.4);
        let bad = vec![e(&format!("(1 + {c}*R2)^2")), e("1")];
        let rep = flat_pencil_report(&g, &bad, &dom, 1e-6).unwrap();
        all_negative_fail &= !rep.pass;
        worst_negative = worst_negative.min(rep.nijenhuis_max.max(rep.nabla.max));
    }
    // Nijenhuis antisymmetry is exact by construction
    let op = OperatorField::diagonal(
        vec![e("R2"), e("R1")],
        vec![e("1"), e("1")],
        dom,
    )
    .unwrap();
    let n = nijenhuis(&op, &[0.9, 1.2]).unwrap();
    let mut antisym = true;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                antisym &= n[i][j][k] == -n[i][k][j];
            }
        }
    }
    gate(
        "7 flat-pencil",
        all_valid_pass && all_negative_fail && worst_negative >= 1e-3 && antisym,
        &format!(
            "5 valid pass, 5 negatives fail (min residual {worst_negative:.3e}), antisymmetry exact"
        ),
    );
}

#[test]
fn criterion_8_frames_scaling() {
    // n = 2 (surface system)
    let dom = GridDomain::new(vec![0.0, 0.0], vec![0.5, 0.5], vec![33, 33]).unwrap();
    let rd2 = solve_goursat_surface(&e("0.3 + 0.1*R2"), &e("0.2 + 0.1*R1"), &dom)
        .unwrap()
        .rotation;
    let id3: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|a| f64::from(u8::from(a == i))).collect())
        .collect();
    let ff2 = integrate_frame(&rd2, 1.0, &[0.0; 3], &id3, &FrameOptions::for_dim(2)).unwrap();
    let drift2 = ff2.gram_drift();
    let match2 = ff2.metric_match(&rd2).max;

    // n = 3 (Darboux system)
    let dom3 = GridDomain::new(vec![0.0; 3], vec![0.4; 3], vec![17, 17, 17]).unwrap();
    let mut boundary = DarbouxBoundary::zero(3);
    boundary.beta[0][1] = Some(e("0.2"));
    boundary.beta[1][0] = Some(e("0.1"));
    boundary.beta[2][0] = Some(e("0.15"));
    let rd3 = integrate_darboux(&[e("0"), e("1"), e("3")], &boundary, &dom3).unwrap();
    let id: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|a| f64::from(u8::from(a == i))).collect())
        .collect();
    let ff3 = integrate_frame(&rd3, 1.0, &[0.0; 3], &id, &FrameOptions::for_dim(3)).unwrap();
    let drift3 = ff3.gram_drift();
    let match3 = ff3.metric_match(&rd3).max;

    // scaling law against the printed factor sqrt((l1+eta_n)/(l2+eta_n))
    let mut scaling = 0.0f64;
    for (l1, l2) in [(0.0, 1.0), (0.2, 2.0)] {
        scaling = scaling.max(scaling_law_check(&rd2, l1, l2, 1, 16).unwrap().max);
    }
    for (l1, l2) in [(0.5, 1.0), (0.2, 2.0)] {
        scaling = scaling.max(scaling_law_check(&rd3, l1, l2, 2, 8).unwrap().max);
    }
    gate(
        "8 frames-scaling",
        drift2 <= 1e-6 && drift3 <= 1e-6 && match2 <= 1e-5 && match3 <= 1e-5 && scaling <= 1e-4,
        &format!(
            "drift {:.3e}, metric match {:.3e}, scaling {scaling:.3e}",
            drift2.max(drift3),
            match2.max(match3)
        ),
    );
}

#[test]
fn criterion_9_reconstruction() {
    let base = BasePose::default();

    let ddom = GridDomain::new(vec![2.0, 0.3], vec![3.0, 1.0], vec![96, 96]).unwrap();
    let dupin = make_example(
        ExampleName::Dupin,
        &Overrides::default()
            .constant("a", 0.0)
            .constant("b", 2.0)
            .constant("c", -3.5)
            .domain(ddom),
    )
    .unwrap();
    let qdom = GridDomain::new(vec![1.2, 2.2], vec![1.8, 2.8], vec![33, 33]).unwrap();
    let quad = make_example(
        ExampleName::Quadric,
        &Overrides::default().domain(qdom),
    )
    .unwrap();

    let mut radii_err = 0.0f64;
    let mut fit = 0.0f64;
    for bundle in [&dupin, &quad] {
        let mesh = reconstruct_bundle(bundle, &base).unwrap();
        let forms = mesh_fundamental_forms(&mesh).unwrap();
        let k = bundle.curvatures.as_ref().unwrap();
        for axis in 0..2 {
            let want = k.k[axis].sample(&mesh.domain);
            for idx in mesh.domain.indices() {
                if (0..2).any(|ax| idx[ax] < 2 || idx[ax] + 2 >= mesh.domain.n[ax]) {
                    continue;
                }
                radii_err = radii_err
                    .max((forms.radii[axis].get(&idx) - want.get(&idx)).abs());
            }
        }
        if bundle.name == ExampleName::Quadric {
            fit = quadric_fit_residual(&mesh);
        }
    }

    let odom = GridDomain::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![48, 48]).unwrap();
    let minimal = make_example(ExampleName::OneParam, &Overrides::default().domain(odom)).unwrap();
    let mesh = reconstruct_bundle(&minimal, &base).unwrap();
    let forms = mesh_fundamental_forms(&mesh).unwrap();
    let mut mean_h = 0.0f64;
    for idx in mesh.domain.indices() {
        let v = forms.mean_curvature.get(&idx);
        if v.is_finite() {
            mean_h = mean_h.max(v.abs());
        }
    }
    gate(
        "9 reconstruction",
        radii_err <= 1e-3 && fit <= 1e-4 && mean_h <= 1e-3,
        &format!("oracle radii {radii_err:.3e}, quadric fit {fit:.3e}, |H| {mean_h:.3e}"),
    );
}

#[test]
fn criterion_10_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    std::fs::write(
        &scene,
        r#"{"mode": "codazzi", "bundle": "dupin"}"#,
    )
    .unwrap();
    let mut outputs: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("out{run}"));
        let result = Command::new(env!("CARGO_BIN_EXE_shapelab"))
            .arg("--scene")
            .arg(&scene)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(result.status.success(), "exit: {:?}", result.status);
        let summary = std::fs::read(out.join("summary.json")).unwrap();
        outputs.push((result.stdout, summary));
    }
    let identical = outputs[0] == outputs[1];
    gate(
        "10 cli-determinism",
        identical,
        "two runs, byte-identical stdout and summary.json",
    );
}
