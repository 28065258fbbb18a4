//! Domain, classifier, Reinhardt, disc, hull and exhaustion invariants.

use levi_core::classifier::{
    classify_point, psh_test_circle_average, psh_test_spectral, CircleAverageConfig, PshOutcome,
    Tolerances,
};
use levi_core::disc::{
    continuity_probe, disc_eval, disc_max_principle_check, DiscFamily, DiscSequence, ProbeConfig,
    J_LIM,
};
use levi_core::domain::{DomainSpec, Metric};
use levi_core::exhaustion::build_exhaustion;
use levi_core::hulls::{
    affine_hull_membership, convex_hull_2d, polygon_distance, AffineFamily, HullVerdict, PointSet,
    Query,
};
use levi_core::reinhardt::{log_convexity_test, LogImage, LogPoint};
use levi_core::sampling::{random_phase, stream_rng, unit_vector};
use levi_core::selftest::CORPUS;
use levi_core::{parse, CPoint, CVector, C64};
use proptest::prelude::*;
use rand::Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn unit_ball() -> DomainSpec {
    DomainSpec::unit_ball(2)
}

fn unit_polydisc() -> DomainSpec {
    DomainSpec::polydisc(CPoint::zeros(2), vec![1.0, 1.0]).unwrap()
}

// --- domain geometry ---------------------------------------------------------

#[test]
fn distance_is_one_lipschitz_on_ball() {
    let ball = DomainSpec::ball(CPoint::from(vec![c(0.5, 0.0), c(0.0, -0.5)]), 1.5).unwrap();
    let zs = ball.interior_sample(100, 1).unwrap();
    let ws = ball.interior_sample(100, 2).unwrap();
    for (z, w) in zs.iter().zip(&ws) {
        let dz = ball.distance_to_boundary(z, Metric::Euclidean).unwrap();
        let dw = ball.distance_to_boundary(w, Metric::Euclidean).unwrap();
        assert!((dz - dw).abs() <= z.distance(w) + 1e-9);
    }
}

#[test]
fn boundary_samples_are_valid() {
    for d in [unit_ball(), unit_polydisc(), DomainSpec::unit_ball(3)] {
        let s = d.boundary_sample(200, 9).unwrap();
        assert_eq!(s.samples.len(), 200);
        for b in &s.samples {
            assert!(!d.contains(&b.point).unwrap());
            let nu = b.normal.as_ref().expect("normal");
            let pulled = b.point.add_scaled(nu, c(-1e-4, 0.0));
            assert!(d.contains(&pulled).unwrap(), "{:?}", b.point);
        }
    }
}

#[test]
fn metric_ordering() {
    for d in [unit_ball(), unit_polydisc(), DomainSpec::hartogs_figure()] {
        let n = d.dimension() as f64;
        for z in d.interior_sample(200, 4).unwrap() {
            let inf = d.distance_to_boundary(&z, Metric::Linfty).unwrap();
            let euc = d.distance_to_boundary(&z, Metric::Euclidean).unwrap();
            assert!(inf <= euc + 1e-12, "{inf} > {euc}");
            assert!(euc <= (2.0 * n).sqrt() * inf + 1e-12);
        }
    }
}

// --- classifier ------------------------------------------------------------------

fn random_unitary(seed: u64) -> [[C64; 2]; 2] {
    let mut rng = stream_rng(seed, 0);
    let u = unit_vector(&mut rng, 2);
    let ph = random_phase(&mut rng);
    let (a, b) = (u[0], u[1]);
    [[a * ph, -b.conj() * ph], [b * ph, a.conj() * ph]]
}

fn literal(z: C64) -> String {
    format!("({} + ({})*i)", z.re, z.im)
}

#[test]
fn classifier_scales_with_defining_function() {
    let cases = [
        (
            "abs2(z1) + abs2(z2) - 1",
            "2*(abs2(z1) + abs2(z2) - 1)",
            unit_ball(),
        ),
        ("abs2(z1) - 1", "2*(abs2(z1) - 1)", unit_polydisc()),
    ];
    for (f, g, d) in cases {
        let (f, g) = (parse(f, 2).unwrap(), parse(g, 2).unwrap());
        for b in d.boundary_sample(50, 3).unwrap().samples {
            if !matches!(b.source, levi_core::domain::BoundarySource::Sphere)
                && !matches!(
                    b.source,
                    levi_core::domain::BoundarySource::PolydiscFace { face: 0 }
                )
            {
                continue;
            }
            let p = classify_point(&f, &b.point, Tolerances::default()).unwrap();
            let q = classify_point(&g, &b.point, Tolerances::default()).unwrap();
            assert_eq!(p.verdict, q.verdict);
            for (x, y) in p.eigenvalues.iter().zip(&q.eigenvalues) {
                assert!((2.0 * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }
    }
}

#[test]
fn classifier_is_unitarily_invariant() {
    let text = "abs2(z1) - abs2(z2) + abs2(z2)^2 - 0.1";
    let f = parse(text, 2).unwrap();
    for s in 0..10 {
        let v = random_unitary(100 + s);
        let w1 = format!("({}*z1 + {}*z2)", literal(v[0][0]), literal(v[0][1]));
        let w2 = format!("({}*z1 + {}*z2)", literal(v[1][0]), literal(v[1][1]));
        let fv = parse(
            &text
                .replace("z1", "W1")
                .replace("z2", &w2)
                .replace("W1", &w1),
            2,
        )
        .unwrap();
        let mut rng = stream_rng(200 + s, 0);
        let a = CPoint::from(vec![
            random_phase(&mut rng) * 0.8,
            random_phase(&mut rng) * 0.6,
        ]);
        // b = V^{-1} a = V^* a
        let b = CPoint::from(
            (0..2)
                .map(|k| (0..2).map(|j| v[j][k].conj() * a[j]).sum::<C64>())
                .collect::<Vec<_>>(),
        );
        let p = classify_point(&f, &a, Tolerances::default()).unwrap();
        let q = classify_point(&fv, &b, Tolerances::default()).unwrap();
        assert_eq!(p.eigenvalues.len(), q.eigenvalues.len());
        for (x, y) in p.eigenvalues.iter().zip(&q.eigenvalues) {
            assert!(
                (x - y).abs() <= 1e-8,
                "{:?} vs {:?}",
                p.eigenvalues,
                q.eigenvalues
            );
        }
    }
}

fn smooth_region() -> DomainSpec {
    DomainSpec::ball(CPoint::from(vec![c(1.0, 0.0), c(0.0, 1.0)]), 0.4).unwrap()
}

#[test]
fn spectral_and_circle_average_agree() {
    let region = smooth_region();
    for (text, n) in CORPUS.iter().filter(|(_, n)| *n == 2) {
        let f = parse(text, *n).unwrap();
        let spectral = psh_test_spectral(&f, &region, 200, 5, 1e-9).unwrap();
        let cfg = CircleAverageConfig {
            trials: 400,
            seed: 5,
            ..Default::default()
        };
        let g = f.clone();
        let average =
            psh_test_circle_average(move |z: &CPoint| Ok(g.eval_at(z)?.re), &region, &cfg).unwrap();
        let coherent = |a: &levi_core::classifier::PshVerdict,
                        b: &levi_core::classifier::PshVerdict| {
            a.verdict == PshOutcome::ConsistentWithPsh
                || b.verdict == PshOutcome::NotPsh
                || b.skipped > 0
        };
        assert!(
            coherent(&spectral, &average),
            "{text}: spectral NotPsh, average passes"
        );
        assert!(
            coherent(&average, &spectral),
            "{text}: average NotPsh, spectral passes"
        );
    }
}

#[test]
fn psh_functions_obey_disc_maximum_principle() {
    let region = smooth_region();
    for (text, n) in CORPUS.iter().filter(|(_, n)| *n == 2) {
        let f = parse(text, *n).unwrap();
        let g = f.clone();
        let cfg = CircleAverageConfig {
            trials: 300,
            seed: 8,
            ..Default::default()
        };
        let average =
            psh_test_circle_average(move |z: &CPoint| Ok(g.eval_at(z)?.re), &region, &cfg).unwrap();
        if average.verdict != PshOutcome::ConsistentWithPsh {
            continue;
        }
        for k in 0..20u64 {
            let mut rng = stream_rng(77, k);
            let center = region.interior_sample(1, 1000 + k).unwrap().remove(0);
            let room = region
                .distance_to_boundary(&center, Metric::Euclidean)
                .unwrap();
            let disc = DiscFamily::Affine {
                a: center,
                direction: unit_vector(&mut rng, 2),
                radius: 0.9 * room * rng.random::<f64>(),
            };
            let r =
                disc_max_principle_check(|z: &CPoint| Ok(f.eval_at(z)?.re), &disc, 128, 128, 1e-9)
                    .unwrap();
            assert!(r.pass, "{text}: margin {}", r.margin);
        }
    }
}

// --- Reinhardt --------------------------------------------------------------

fn log_points(seed: u64, count: u64) -> Vec<LogPoint> {
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            LogPoint(vec![
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            ])
        })
        .collect()
}

#[test]
fn log_image_is_monotone_in_members() {
    let small = DomainSpec::reinhardt_union(vec![vec![1.0, 2.0]]).unwrap();
    let large = DomainSpec::reinhardt_union(vec![vec![1.0, 2.0], vec![3.0, 0.5]]).unwrap();
    let (a, b) = (
        LogImage::new(&small).unwrap(),
        LogImage::new(&large).unwrap(),
    );
    for x in log_points(6, 50) {
        if a.contains(&x) {
            assert!(b.contains(&x));
        }
    }
}

#[test]
fn witnesses_re_verify() {
    let d = DomainSpec::hartogs_figure();
    let image = LogImage::new(&d).unwrap();
    for seed in 0..5 {
        let out = log_convexity_test(&d, 10_000, seed).unwrap();
        let w = out.witness().expect("witness");
        assert!(w.verify(&image));
        assert!(image.contains(&w.p) && image.contains(&w.q) && !image.contains(&w.midpoint));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_image_scaling_covariance(t in 0.1..10.0f64, x1 in -3.0..3.0f64, x2 in -3.0..3.0f64) {
        let radii = vec![vec![std::f64::consts::E, 7.0], vec![7.0, std::f64::consts::E]];
        let scaled: Vec<Vec<f64>> = radii.iter().map(|r| r.iter().map(|v| v * t).collect()).collect();
        let a = LogImage::new(&DomainSpec::reinhardt_union(radii).unwrap()).unwrap();
        let b = LogImage::new(&DomainSpec::reinhardt_union(scaled).unwrap()).unwrap();
        let x = LogPoint(vec![x1, x2]);
        let shifted = LogPoint(vec![x1 + t.ln(), x2 + t.ln()]);
        // verdicts agree unless the point sits on the boundary to rounding
        prop_assume!(a.defect(&x).abs() > 1e-12);
        prop_assert_eq!(a.contains(&x), b.contains(&shifted));
    }

    #[test]
    fn distance_lipschitz_polydisc(s in 0u64..500) {
        let d = unit_polydisc();
        let z = d.interior_sample(1, s).unwrap().remove(0);
        let w = d.interior_sample(1, s + 10_000).unwrap().remove(0);
        for m in [Metric::Euclidean, Metric::Linfty] {
            let dz = d.distance_to_boundary(&z, m).unwrap();
            let dw = d.distance_to_boundary(&w, m).unwrap();
            let gap = match m {
                Metric::Euclidean => z.distance(&w),
                Metric::Linfty => z.sub(&w).iter().map(|c| c.re.abs().max(c.im.abs())).fold(0.0, f64::max),
            };
            prop_assert!((dz - dw).abs() <= gap + 1e-9);
        }
    }
}

// --- discs ------------------------------------------------------------------------

fn complement_of_ball() -> DomainSpec {
    DomainSpec::sublevel(parse("1 - abs2(z1) - abs2(z2)", 2).unwrap(), 2, 0.0, None).unwrap()
}

#[test]
fn continuity_witness_lies_outside() {
    let d = complement_of_ball();
    let r = continuity_probe(
        &d,
        &DiscSequence::Hartogs {
            r: 1.0,
            dimension: 2,
        },
        &ProbeConfig::default(),
    )
    .unwrap();
    let w = r.violation().expect("violation");
    assert!(!d.contains(w).unwrap());
    assert!(w.distance(&CPoint::from(vec![c(1.0, 0.0), c(0.0, 0.0)])) < 1e-12);
}

#[test]
fn hartogs_family_decreases_to_limit() {
    let fam = DiscSequence::Hartogs {
        r: 1.0,
        dimension: 2,
    };
    let mut prev = f64::INFINITY;
    for j in 1..=64 {
        let x = disc_eval(&fam.member(j), c(0.3, 0.1)).unwrap()[0].re;
        assert!(x < prev && x > 1.0);
        prev = x;
    }
    let limit = fam.limit();
    for w in [c(0.0, 0.0), c(0.6, -0.8), c(-0.2, 0.5)] {
        let a = disc_eval(&fam.member(J_LIM), w).unwrap();
        let b = disc_eval(&limit, w).unwrap();
        assert!(a.distance(&b) <= 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn max_principle_margin_is_linear(s in 0u64..1000, k in 0usize..18) {
        let (text, n) = CORPUS[k];
        prop_assume!(n == 2);
        let f = parse(text, 2).unwrap();
        let region = smooth_region();
        let mut rng = stream_rng(s, 0);
        let disc = DiscFamily::Affine {
            a: region.interior_sample(1, s).unwrap().remove(0),
            direction: unit_vector(&mut rng, 2),
            radius: 0.1,
        };
        let one = disc_max_principle_check(|z: &CPoint| Ok(f.eval_at(z)?.re), &disc, 64, 64, 1e-9).unwrap();
        let three = disc_max_principle_check(|z: &CPoint| Ok(3.0 * f.eval_at(z)?.re), &disc, 64, 64, 1e-9).unwrap();
        // maxima scale exactly; the margin up to the rounding of one subtraction
        prop_assert_eq!(three.interior_max, 3.0 * one.interior_max);
        prop_assert_eq!(three.boundary_max, 3.0 * one.boundary_max);
        let scale = three.interior_max.abs() + three.boundary_max.abs();
        prop_assert!((three.margin - 3.0 * one.margin).abs() <= 4.0 * f64::EPSILON * scale);
    }
}

// --- hulls ------------------------------------------------------------------------

fn cloud(seed: u64, count: u64) -> PointSet {
    PointSet::real(
        (0..count)
            .map(|i| {
                let mut rng = stream_rng(seed, i);
                vec![rng.random_range(-1.0..1.0), rng.random::<f64>() * 2.0 - 1.0]
            })
            .collect(),
    )
    .unwrap()
}

fn as_pairs(k: &PointSet) -> Vec<[f64; 2]> {
    match k {
        PointSet::Real { points, .. } => points.iter().map(|p| [p[0], p[1]]).collect(),
        _ => unreachable!(),
    }
}

fn queries(seed: u64, count: u64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed ^ 0xabc, i);
            vec![rng.random_range(-1.6..1.6), rng.random_range(-1.6..1.6)]
        })
        .collect()
}

#[test]
fn outside_certificates_are_sound() {
    for s in 0..5 {
        let k = cloud(s, 60);
        let fam = AffineFamily::new(&k, 300, s).unwrap();
        for q in queries(s, 200) {
            let r = fam.membership(&q, 1e-9);
            if r.verdict == HullVerdict::Outside {
                let cert = r.certificate.expect("certificate");
                assert!(cert.verify(&k, &Query::Real(q.clone()), 1e-9));
            }
        }
    }
}

#[test]
fn growing_family_never_flips_outside() {
    for s in 0..5 {
        let k = cloud(10 + s, 60);
        let small = AffineFamily::new(&k, 100, s).unwrap();
        let large = AffineFamily::new(&k, 400, s).unwrap();
        for q in queries(s, 200) {
            if small.membership(&q, 1e-9).verdict == HullVerdict::Outside {
                assert_eq!(large.membership(&q, 1e-9).verdict, HullVerdict::Outside);
            }
        }
    }
}

#[test]
fn inside_agrees_with_exact_hull() {
    for s in 0..5 {
        let k = cloud(20 + s, 80);
        let hull = convex_hull_2d(&as_pairs(&k));
        for q in queries(s, 300) {
            let exact_inside = polygon_distance(&hull, [q[0], q[1]]) == 0.0;
            let r = affine_hull_membership(&k, &q, 500, s, 1e-9).unwrap();
            if exact_inside {
                assert_eq!(r.verdict, HullVerdict::Inside, "{q:?}");
            }
        }
    }
}

#[test]
fn adding_inside_points_keeps_verdicts() {
    for s in 0..3 {
        let k = cloud(30 + s, 50);
        let fam = AffineFamily::new(&k, 300, s).unwrap();
        let inside: Vec<Vec<f64>> = queries(s, 200)
            .into_iter()
            .filter(|q| fam.membership(q, 1e-9).verdict == HullVerdict::Inside)
            .collect();
        let PointSet::Real { points, .. } = &k else {
            unreachable!()
        };
        let grown = PointSet::real(points.iter().cloned().chain(inside).collect()).unwrap();
        let fam2 = AffineFamily::new(&grown, 300, s).unwrap();
        for q in queries(s + 1000, 200) {
            assert_eq!(
                fam.membership(&q, 1e-9).verdict,
                fam2.membership(&q, 1e-9).verdict,
                "{q:?}"
            );
        }
    }
}

// --- exhaustion -------------------------------------------------------------------

#[test]
fn exhaustion_sublevels_stay_away_from_boundary() {
    let ball = DomainSpec::unit_ball(2);
    let ex = build_exhaustion(&ball, Metric::Euclidean);
    let pts = ball.interior_sample(4000, 12).unwrap();
    for r in [1.0f64, 5.0, 10.0] {
        let sub: Vec<&CPoint> = pts.iter().filter(|z| ex.eval(z).unwrap() <= r).collect();
        assert!(!sub.is_empty());
        let min_d = sub
            .iter()
            .map(|z| ball.distance_to_boundary(z, Metric::Euclidean).unwrap())
            .fold(f64::INFINITY, f64::min);
        let max_norm = sub.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(min_d >= (-r).exp() * (1.0 - 1e-12), "r={r}: {min_d}");
        assert!(max_norm < 1.0);
    }
}

#[test]
fn exhaustion_circle_average_separates_ball_from_hartogs() {
    let cfg = CircleAverageConfig {
        trials: 1000,
        seed: 3,
        ..Default::default()
    };
    let ball = DomainSpec::unit_ball(2);
    let ex = build_exhaustion(&ball, Metric::Euclidean);
    let r = psh_test_circle_average(|z: &CPoint| ex.eval(z), &ball, &cfg).unwrap();
    assert_eq!(r.verdict, PshOutcome::ConsistentWithPsh);

    let hartogs = DomainSpec::hartogs_figure();
    let ex = build_exhaustion(&hartogs, Metric::Linfty);
    let r = psh_test_circle_average(|z: &CPoint| ex.eval(z), &hartogs, &cfg).unwrap();
    assert_eq!(r.verdict, PshOutcome::NotPsh);
    for v in &r.violations {
        let mean: f64 = (0..cfg.quadrature)
            .map(|k| {
                let w = C64::from_polar(
                    v.radius,
                    std::f64::consts::TAU * k as f64 / cfg.quadrature as f64,
                );
                ex.eval(&v.point.add_scaled(&v.direction, w)).unwrap()
            })
            .sum::<f64>()
            / cfg.quadrature as f64;
        assert!((ex.eval(&v.point).unwrap() - mean - v.deficit).abs() < 1e-9);
        assert!(v.deficit > cfg.tol);
    }
}

#[test]
fn unit_vectors_are_unit() {
    let mut rng = stream_rng(0, 0);
    let v: CVector = unit_vector(&mut rng, 4);
    assert!((v.norm() - 1.0).abs() < 1e-14);
}
