//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use std::time::Instant;

use hup_core::chordmap::ChordMap;
use hup_core::curve::{corner_cones, Angle, Curve, CurveSpec, PsiSpec};
use hup_core::dynamics::{
    certify_attractive, certify_wandering, detect_periodic_orbit, lift_for_angles, rotation_number, sigma_sequence, Horizon,
};
use hup_core::intervals::IntervalSet;
use hup_core::measure::{
    annihilator_search, check_annihilation, construct_counterexample, eqfund_residual_grid, CounterexampleKind, Density,
    SearchConfig, SeedProfile,
};
use hup_core::transform::{angle_monotonicity_probe, conjugation_deviation, fourier_slice_check, projective_map};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn parabola() -> Curve {
    Curve::new(CurveSpec::Graph { psi: PsiSpec::Power { alpha: 2.0, signed: false }, window: [-50.0, 50.0] }).unwrap()
}

fn ellipse() -> Curve {
    Curve::new(CurveSpec::Ellipse { a: 2.0, b: 1.0, center: [0.0, 0.0], rotation: 0.0 }).unwrap()
}

fn hyperbola() -> Curve {
    Curve::new(CurveSpec::HyperbolaStd { x_max: 50.0 }).unwrap()
}

fn square() -> Curve {
    Curve::new(CurveSpec::Polygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] }).unwrap()
}

/// `n` parameters spread evenly over a set, by arc length of the parameter.
fn spread(set: &IntervalSet, n: usize) -> Vec<f64> {
    let total = set.measure();
    (0..n)
        .filter_map(|i| {
            let mut u = total * (i as f64 + 0.5) / n as f64;
            for &(a, b) in set.parts() {
                if u <= b - a {
                    return Some(a + u);
                }
                u -= b - a;
            }
            None
        })
        .collect()
}

fn involution() -> Outcome {
    let start = Instant::now();
    let curves = [("circle", Curve::circle()), ("ellipse", ellipse()), ("parabola", parabola()), ("hyperbola", hyperbola()), ("square", square())];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut inv, mut proj) = (0.0f64, 0.0f64);
    for (_, c) in curves {
        let c = Arc::new(c);
        for _ in 0..20 {
            let theta = Angle::new(rng.gen_range(0.0..PI));
            let Ok(m) = ChordMap::new(c.clone(), theta) else { continue };
            for s in spread(&m.split().paired(), 1000) {
                let t = m.eval(s).unwrap();
                let back = m.eval(t).unwrap();
                let d = (back - s).abs();
                inv = inv.max(if c.is_closed() { d.min(1.0 - d) } else { d });
                let scale = c.position(s).norm().max(1.0);
                proj = proj.max((c.projection(theta, t).unwrap() - c.projection(theta, s).unwrap()).abs() / scale);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        inv <= 1e-9 && proj <= 1e-10 && secs < 10.0,
        format!("max |Φ(Φ(s)) − s| = {inv:.2e}, max projection gap = {proj:.2e} (relative to |γ|), {secs:.2} s"),
    )
}

fn derivative() -> Outcome {
    let curves = [("ellipse", ellipse(), 0.3), ("parabola", parabola(), 0.4), ("hyperbola", hyperbola(), 1.1), ("circle", Curve::circle(), 2.0)];
    let (mut worst, mut tangent) = (0.0f64, 0.0f64);
    for (_, c, th) in curves {
        let m = ChordMap::new(Arc::new(c), Angle::new(th)).unwrap();
        let crit = m.split().critical_set.clone();
        for s in spread(&m.split().paired(), 400) {
            if crit.iter().any(|&x| (x - s).abs() < 0.02) || m.curve().domain().wrap(s) != s {
                continue;
            }
            let h = 1e-6 * (1.0 + s.abs());
            let (Ok(a), Ok(b)) = (m.eval(s + h), m.eval(s - h)) else { continue };
            let mut diff = a - b;
            if m.curve().is_closed() {
                diff -= diff.round();
            }
            let fd = diff / (2.0 * h);
            let an = m.derivative(s).unwrap();
            worst = worst.max((an - fd).abs() / an.abs());
        }
        for &x in &crit {
            tangent = tangent.max((m.derivative(x).unwrap() + 1.0).abs());
            for side in [-1e-5, 1e-5] {
                if let Ok(d) = m.derivative(x + side) {
                    tangent = tangent.max((d + 1.0).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-5 && tangent <= 1e-3, format!("relative error vs central difference {worst:.2e}; |Φ' + 1| near tangencies {tangent:.2e}"))
}

fn circle_rotation() -> Outcome {
    let start = Instant::now();
    let c = Arc::new(Curve::circle());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let t2 = rng.gen_range(0.01..PI - 0.01);
        let lift = lift_for_angles(c.clone(), Angle::new(0.0), Angle::new(t2)).unwrap();
        let r = rotation_number(&lift, 0.0, 10_000).unwrap();
        worst = worst.max((r.value - (t2 / PI).rem_euclid(1.0)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-12 && secs < 1.0, format!("max |ρ − θ₂/π| = {worst:.2e}, {secs:.2} s"))
}

fn perturbed_circle() -> Outcome {
    let start = Instant::now();
    let c = Arc::new(Curve::new(CurveSpec::PerturbedCircle { epsilon: 0.02, sharpness: 1.0 }).unwrap());
    let lift = lift_for_angles(c, Angle::new(0.0), Angle::new(PI / 2.0)).unwrap();
    let r = rotation_number(&lift, 0.0, 10_000).unwrap();
    let orbit = detect_periodic_orbit(&lift, 64, 1e-10).unwrap();
    let eighth = |x: f64| (8.0 * x - (8.0 * x).round()).abs() / 8.0;
    let (q, near) = match &orbit {
        Some(o) => (o.q, o.points.iter().map(|&x| eighth(x)).fold(0.0, f64::max)),
        None => (0, f64::INFINITY),
    };
    let cert = certify_attractive(&lift, (0.26, 0.49), 2, 10_000);
    let limit = cert.as_ref().ok().and_then(|c| c.nested_limit);
    let secs = start.elapsed().as_secs_f64();
    let pass = (r.value - 0.5).abs() <= 1e-9
        && q == 2
        && near <= 1e-6
        && limit.is_some_and(|l| (l - 0.375).abs() <= 1e-6)
        && secs < 30.0;
    outcome(
        pass,
        format!("ρ = {:.12}, orbit period {q} within {near:.1e} of k/8, nested limit {limit:?}, {secs:.2} s", r.value),
    )
}

fn suite() -> Vec<(&'static str, Density, Arc<Curve>, [Angle; 2])> {
    let circle = Arc::new(Curve::circle());
    let axes = [Angle::new(0.0), Angle::new(PI / 2.0)];
    let mut out = vec![
        ("circle sin 4πs", Density::real(&circle, "sin4", |s| (4.0 * PI * s).sin()), circle.clone(), axes),
        ("circle f = 1", Density::real(&circle, "one", |_| 1.0), circle.clone(), axes),
        ("circle cos 2πs", Density::real(&circle, "cos", |s| (TAU * s).cos()), circle.clone(), axes),
        ("circle sin 2πs, lines 0 and 1", Density::real(&circle, "sin", |s| (TAU * s).sin()), circle.clone(), [Angle::new(0.0), Angle::new(1.0)]),
        ("circle zero", Density::zero(&circle), circle.clone(), axes),
    ];
    for (name, kind) in [
        ("circle q = 3", CounterexampleKind::CircleRational { q: 3, profile: SeedProfile::Sine }),
        ("hyperbola bump", CounterexampleKind::HyperbolaPerpendicular { theta1: 3.0 * PI / 8.0, profile: SeedProfile::Bump }),
        ("hyperbola sine", CounterexampleKind::HyperbolaPerpendicular { theta1: 0.3, profile: SeedProfile::Sine }),
    ] {
        let ce = construct_counterexample(&kind).unwrap();
        out.push((name, ce.density, ce.curve, ce.lines));
    }
    let hyp = Arc::new(hyperbola());
    out.push((
        "hyperbola bump, no structure",
        Density::real(&hyp, "b", |s| (-(s - 0.2) * (s - 0.2) * 400.0).exp()),
        hyp,
        [Angle::new(3.0 * PI / 8.0), Angle::new(PI / 8.0)],
    ));
    out
}

fn counterexamples() -> Outcome {
    let c = Arc::new(Curve::circle());
    let f = Density::real(&c, "sin4", |s| (4.0 * PI * s).sin());
    let r = check_annihilation(&f, &c, &[Angle::new(0.0), Angle::new(PI / 2.0)], (-50.0, 50.0), 501);
    let ctl = check_annihilation(&f, &c, &[Angle::new(PI / 4.0)], (-50.0, 50.0), 501);
    let ce = construct_counterexample(&CounterexampleKind::HyperbolaPerpendicular { theta1: 3.0 * PI / 8.0, profile: SeedProfile::Bump }).unwrap();
    let h = check_annihilation(&ce.density, &ce.curve, &ce.lines, (-50.0, 50.0), 501);
    let (cm, hm) = (r.max_moduli(), h.max_moduli());
    let pass = cm.iter().all(|&m| m <= 1e-8)
        && ctl.lines[0].max_modulus > 1e-3
        && hm.iter().all(|&m| m <= 1e-6)
        && ce.l1_norm >= 0.1;
    outcome(
        pass,
        format!(
            "circle ℓ₀ {:.1e}, ℓ_π/2 {:.1e}, control ℓ_π/4 {:.3}; hyperbola {:.1e}, {:.1e}, L¹ {:.3}",
            cm[0], cm[1], ctl.lines[0].max_modulus, hm[0], hm[1], ce.l1_norm
        ),
    )
}

fn equivalence() -> Outcome {
    let (mut forward, mut backward) = (0, 0);
    let mut bad = Vec::new();
    for (name, f, c, lines) in suite() {
        let rep = check_annihilation(&f, &c, &lines, (-50.0, 50.0), 201);
        for (k, th) in lines.iter().enumerate() {
            let e = eqfund_residual_grid(&f, &c, *th, 257).unwrap();
            let m = rep.lines[k].max_modulus;
            if e <= 1e-9 {
                forward += 1;
                if m > 1e-6 {
                    bad.push(format!("{name}: residual {e:.1e} but line max {m:.1e}"));
                }
            }
            if m <= 1e-9 {
                backward += 1;
                if e > 1e-5 {
                    bad.push(format!("{name}: line max {m:.1e} but residual {e:.1e}"));
                }
            }
        }
    }
    outcome(
        bad.is_empty() && forward > 0 && backward > 0,
        if bad.is_empty() {
            format!("{forward} line cases with residual ≤ 1e-9, {backward} with line max ≤ 1e-9, all consistent")
        } else {
            bad.join("; ")
        },
    )
}

fn hyperbola_transfer() -> Outcome {
    let hyp = Arc::new(hyperbola());
    let norm = spread(&IntervalSet::new(hyp.domain().intervals.iter().map(|i| (i.lo, i.hi))), 1000)
        .into_iter()
        .map(|s| (projective_map(hyp.position(s)).unwrap().norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let conj = [PI / 3.0, -PI / 6.0, 3.0 * PI / 8.0]
        .iter()
        .map(|&t| conjugation_deviation(&ChordMap::new(hyp.clone(), Angle::new(t)).unwrap(), 1000).unwrap())
        .fold(0.0, f64::max);
    let perp = [(3.0 * PI / 8.0, PI / 8.0), (0.3, PI / 2.0 - 0.3)]
        .iter()
        .all(|&(a, b)| angle_monotonicity_probe(Angle::new(a), Angle::new(b), 0.13, 100).unwrap().two_periodic);
    let others = [(3.0 * PI / 8.0, -PI / 8.0), (0.3, -0.5), (1.2, 0.2)]
        .iter()
        .all(|&(a, b)| angle_monotonicity_probe(Angle::new(a), Angle::new(b), 0.13, 100).unwrap().strictly_monotone());
    outcome(
        norm <= 1e-12 && conj <= 1e-9 && perp && others,
        format!("||T(γ)| − 1| = {norm:.1e}, conjugation {conj:.1e}, perpendicular pairs 2-periodic: {perp}, others monotone: {others}"),
    )
}

fn wandering() -> Outcome {
    let par = Arc::new(parabola());
    let th2 = (-4.0f64).atan().rem_euclid(PI);
    let sigma = sigma_sequence(par, Angle::new(-PI / 2.0), Angle::new(th2), None, 100).unwrap();
    let sigma_ok = sigma.values.len() == 100 && sigma.strictly_increasing;

    let sq = Arc::new(Curve::new(CurveSpec::Polygon { vertices: vec![[0.0, 0.0], [1.0, -1.0], [2.0, 0.0], [1.0, 1.0]] }).unwrap());
    let (t1, t2) = (Angle::new(7.0 * PI / 8.0), Angle::new(PI / 8.0));
    let cones = corner_cones(&sq).unwrap();
    let in_cones = cones.iter().any(|c| c.plus_dual_contains(t1) && c.minus_dual_contains(t2));
    let lift = lift_for_angles(sq, t1, t2).unwrap();
    let cert = certify_wandering(&lift, (0.05, 0.267), 200);
    let infinite = matches!(cert, Ok(ref c) if matches!(c.horizon, Some(Horizon::Infinite { .. })));

    let mut gon = 0.0f64;
    for n in 3..=8 {
        let c = Curve::new(CurveSpec::regular_polygon(n)).unwrap();
        for cone in corner_cones(&c).unwrap() {
            let t = Angle::new(cone.c_plus_dual.midpoint());
            let w = cone.admissible_theta2(t).map_or(f64::INFINITY, |a| a.width);
            gon = gon.max((w - PI / n as f64).abs());
        }
    }
    outcome(
        sigma_ok && in_cones && infinite && gon <= 1e-12,
        format!(
            "σ increasing over {} steps: {}; square cones hold: {in_cones}, infinite horizon: {infinite}; n-gon width error {gon:.1e}",
            sigma.values.len(),
            sigma.strictly_increasing
        ),
    )
}

fn search() -> Outcome {
    let start = Instant::now();
    let cfg = SearchConfig::default();
    let ratio = |c: Arc<Curve>, a: f64, b: f64| annihilator_search(c, Angle::new(a), Angle::new(b), &cfg).unwrap().ratio;
    let circle = Arc::new(Curve::circle());
    let c_keep = ratio(circle.clone(), 0.0, PI / 2.0);
    let c_decay = ratio(circle, 0.0, 1.0);
    let hyp = Arc::new(hyperbola());
    let h_keep = ratio(hyp.clone(), 3.0 * PI / 8.0, PI / 8.0);
    let h_decay = ratio(hyp, 3.0 * PI / 8.0, -PI / 8.0);
    let tube = Arc::new(Curve::new(CurveSpec::Tube { theta1: -0.4, theta2: 0.6 }).unwrap());
    let t_decay = ratio(tube, -0.4, 0.6);
    let secs = start.elapsed().as_secs_f64();
    let pass = c_keep >= 0.1
        && c_decay <= 1e-3
        && c_keep >= 100.0 * c_decay
        && h_keep >= 0.1
        && h_decay <= 1e-3
        && h_keep >= 100.0 * h_decay
        && t_decay <= 1e-3
        && secs < 120.0;
    outcome(
        pass,
        format!(
            "circle {c_keep:.3} vs {c_decay:.1e}; hyperbola {h_keep:.3} vs {h_decay:.1e}; tube {t_decay:.1e}; {secs:.1} s"
        ),
    )
}

fn fourier_slice() -> Outcome {
    let xis: Vec<f64> = (0..81).map(|i| -20.0 + 0.5 * i as f64).collect();
    let mut cases: Vec<(String, Density, Arc<Curve>, Angle)> = suite()
        .into_iter()
        .flat_map(|(name, f, c, lines)| lines.map(|t| (name.to_string(), f.clone(), c.clone(), t)))
        .collect();
    let circle = Arc::new(Curve::circle());
    cases.push(("circle complex".into(), Density::closed_form(&circle, "mix", |s| Complex64::new(1.0 + s, (TAU * s).cos())), circle, Angle::new(0.7)));
    let ell = Arc::new(Curve::new(CurveSpec::Ellipse { a: 2.0, b: 1.0, center: [0.5, -0.3], rotation: 0.4 }).unwrap());
    cases.push(("ellipse".into(), Density::real(&ell, "e", |s| 1.0 + 0.5 * (TAU * s).sin()), ell, Angle::new(1.1)));
    let sq = Arc::new(square());
    cases.push(("square".into(), Density::real(&sq, "q", |s| 1.0 + (TAU * s).cos()), sq, Angle::new(0.3)));
    let par = Arc::new(parabola());
    let g = Density::real(&par, "gauss", |s| (-s * s).exp()).restricted(IntervalSet::single(-6.0, 6.0), vec![]);
    cases.push(("parabola gaussian".into(), g, par, Angle::new(0.5)));
    let mut worst = (0.0f64, String::new());
    for (name, f, c, t) in cases {
        let r = fourier_slice_check(&f, &c, t, &xis).unwrap();
        if r.max_discrepancy >= worst.0 {
            worst = (r.max_discrepancy, name);
        }
    }
    outcome(worst.0 <= 1e-6, format!("max discrepancy {:.2e} ({})", worst.0, worst.1))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("chord-map involution and projection equality", involution),
        ("derivative formula and tangency limit", derivative),
        ("circle rotation number", circle_rotation),
        ("perturbed circle rotation, period-2 orbit, attractive limit", perturbed_circle),
        ("counterexample verification", counterexamples),
        ("preimage-sum and line-transform equivalence", equivalence),
        ("hyperbola transfer", hyperbola_transfer),
        ("wandering certificates", wandering),
        ("annihilator-search separation", search),
        ("Fourier-slice agreement", fourier_slice),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
