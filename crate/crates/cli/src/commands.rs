use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use hup_core::chordmap::{projection_split, single_line_hup_check, ChordMap, CuspMaps};
use hup_core::curve::{Angle, Curve, CurveSpec};
use hup_core::dynamics::{
    self, certify_attractive, certify_wandering, detect_periodic_orbit, lift_for_angles, rotation_number, sigma_sequence,
    CircleMapLift, DynamicsError, IntervalMap, OrbitMap,
};
use hup_core::measure::{
    annihilator_search, check_annihilation, construct_counterexample, uniform_grid, CounterexampleKind, Density, DensityFile,
    MeasureError, SearchConfig, SeedProfile,
};
use hup_core::transform::{ellipse_to_circle_with, fourier_slice_check, radon_projection, AxisScaling};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::report::{self, Report, Series, Status};
use crate::{
    AnnihilateArgs, AttractArgs, Command, CounterexampleArgs, DensityArg, EllipseArgs, Kind, LineArgs, OrbitArgs, PairArgs,
    PeriodicArgs, Profile, RadonArgs, RotationArgs, Scaling, SigmaArgs, SliceCheckArgs, VerifyArgs, WanderingArgs,
};

/// Tolerance from the flag, else `HUP_DEFAULT_TOL`, else the built-in value.
fn resolve_tol(flag: Option<f64>, builtin: f64) -> Result<f64> {
    let tol = match (flag, std::env::var("HUP_DEFAULT_TOL")) {
        (Some(t), _) => t,
        (None, Ok(s)) => s.trim().parse().with_context(|| format!("HUP_DEFAULT_TOL={s:?} is not a number"))?,
        (None, Err(_)) => builtin,
    };
    if !(tol > 0.0 && tol.is_finite()) {
        bail!("tolerance must be positive, got {tol}");
    }
    Ok(tol)
}

fn load_curve(arg: &str) -> Result<(CurveSpec, Arc<Curve>)> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading curve spec {arg}"))?
    };
    let spec: CurveSpec = serde_json::from_str(&text).with_context(|| format!("parsing curve spec {arg}"))?;
    let curve = Curve::new(spec.clone()).with_context(|| format!("building curve from {arg}"))?;
    Ok((spec, Arc::new(curve)))
}

fn load_density(arg: &DensityArg, curve: &Curve) -> Result<Density> {
    match (&arg.density, &arg.density_fn) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading density {}", path.display()))?;
            let file: DensityFile = serde_json::from_str(&text).with_context(|| format!("parsing density {}", path.display()))?;
            Ok(Density::from_file(&file)?)
        }
        (None, Some(spec)) => builtin_density(spec, curve),
        (None, None) => bail!("give either --density FILE or --density-fn"),
        (Some(_), Some(_)) => bail!("--density and --density-fn are exclusive"),
    }
}

fn builtin_density(spec: &str, curve: &Curve) -> Result<Density> {
    let (name, k) = match spec.split_once(':') {
        Some((n, k)) => (n, k.parse::<f64>().with_context(|| format!("frequency in {spec:?}"))?),
        None => (spec, 0.0),
    };
    Ok(match name {
        "one" => Density::real(curve, spec, |_| 1.0),
        "zero" => Density::zero(curve),
        "cos" => Density::real(curve, spec, move |s| (TAU * k * s).cos()),
        "sin" => Density::real(curve, spec, move |s| (TAU * k * s).sin()),
        _ => bail!("unknown density {spec:?}; expected one, zero, cos:K or sin:K"),
    })
}

fn interval(v: &[f64]) -> Result<(f64, f64)> {
    match v {
        [a, b] if b > a => Ok((*a, *b)),
        _ => bail!("--interval needs two increasing endpoints"),
    }
}

fn range(v: &[f64], flag: &str) -> Result<(f64, f64)> {
    match v {
        [a, b] if b > a => Ok((*a, *b)),
        _ => bail!("{flag} needs two increasing values"),
    }
}

/// Output of one subcommand before it is wrapped in a [`Report`].
struct Outcome {
    status: Status,
    inputs: Value,
    results: Value,
    series: Option<Series>,
    /// Extra files already written.
    artifacts: Vec<String>,
}

impl Outcome {
    fn ok(inputs: Value, results: Value) -> Self {
        Self { status: Status::Ok, inputs, results, series: None, artifacts: Vec::new() }
    }

    fn with_series(mut self, s: Series) -> Self {
        self.series = Some(s);
        self
    }

    fn failed_if(mut self, failed: bool) -> Self {
        if failed {
            self.status = Status::CertificateFailed;
        }
        self
    }
}

fn inputs<T: Serialize>(args: &T, spec: Option<&CurveSpec>) -> Result<Value> {
    let mut v = serde_json::to_value(args)?;
    if let (Some(spec), Value::Object(m)) = (spec, &mut v) {
        m.insert("curve_spec".into(), serde_json::to_value(spec)?);
    }
    Ok(v)
}

pub fn run(name: &str, command: Command, out: Option<&Path>, csv: Option<&Path>) -> Result<Status> {
    let outcome = match command {
        Command::Split(a) => split(a)?,
        Command::HupOneLine(a) => one_line(a)?,
        Command::Orbit(a) => orbit(a)?,
        Command::Rotation(a) => rotation(a)?,
        Command::Periodic(a) => periodic(a)?,
        Command::Wandering(a) => wandering(a)?,
        Command::Attract(a) => attract(a)?,
        Command::Sigma(a) => sigma(a)?,
        Command::Cusp(a) => cusp(a)?,
        Command::Counterexample(a) => counterexample(a, out)?,
        Command::Annihilate(a) => annihilate(a)?,
        Command::Verify(a) => verify(a)?,
        Command::Radon(a) => radon(a)?,
        Command::SliceCheck(a) => slice_check(a)?,
        Command::EllipseReduce(a) => ellipse_reduce(a)?,
    };
    let mut artifacts = outcome.artifacts;
    if let Some(series) = &outcome.series {
        let path = csv.map(Path::to_path_buf).or_else(|| out.map(|o| report::sibling(o, "csv")));
        if let Some(path) = path {
            report::write_csv(&path, series)?;
            artifacts.push(path.display().to_string());
        }
    }
    let rep = Report {
        command: name.to_string(),
        version: report::VERSION.to_string(),
        status: outcome.status,
        inputs: outcome.inputs,
        results: outcome.results,
        artifacts,
    };
    let text = report::to_json(&rep)?;
    match out {
        Some(path) => report::write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(rep.status)
}

fn split(a: LineArgs) -> Result<Outcome> {
    let (spec, curve) = load_curve(&a.curve.curve)?;
    let theta = Angle::new(a.theta);
    let split = projection_split(&curve, theta)?;
    let results = json!({
        "critical_values": split.critical_values(&curve),
        "paired_measure": split.paired().measure(),
        "split": split,
    });
    Ok(Outcome::ok(inputs(&a, Some(&spec))?, results))
}

fn one_line(a: LineArgs) -> Result<Outcome> {
    let (spec, curve) = load_curve(&a.curve.curve)?;
    let theta = Angle::new(a.theta);
    let split = projection_split(&curve, theta)?;
    let results = json!({
        "injective": single_line_hup_check(&curve, theta),
        "fold_count": split.fold_count,
    });
    Ok(Outcome::ok(inputs(&a, Some(&spec))?, results))
}

enum Composed {
    Circle(CircleMapLift),
    Line(Box<IntervalMap>),
}

impl Composed {
    fn map(&self) -> &dyn OrbitMap {
        match self {
            Composed::Circle(l) => l,
            Composed::Line(m) => m.as_ref(),
        }
    }
}

fn composed(p: &PairArgs) -> Result<(CurveSpec, Arc<Curve>, Composed)> {
    let (spec, curve) = load_curve(&p.curve.curve)?;
    let (t1, t2) = (Angle::new(p.theta1), Angle::new(p.theta2));
    let map = if curve.is_closed() {
        Composed::Circle(lift_for_angles(curve.clone(), t1, t2)?)
    } else {
        if t1.same_line(t2) {
            return Err(DynamicsError::SameAngle.into());
        }
        Composed::Line(Box::new(IntervalMap { first: ChordMap::new(curve.clone(), t1)?, second: ChordMap::new(curve.clone(), t2)? }))
    };
    Ok((spec, curve, map))
}

fn lift_only(p: &PairArgs) -> Result<(CurveSpec, CircleMapLift)> {
    match composed(p)? {
        (spec, _, Composed::Circle(l)) => Ok((spec, l)),
        _ => Err(DynamicsError::NotClosedCurve.into()),
    }
}

fn orbit(a: OrbitArgs) -> Result<Outcome> {
    let (spec, curve, map) = composed(&a.pair)?;
    let pts = dynamics::orbit(map.map(), a.x0, a.n);
    let mut s = Series::new(&["k", "x", "frac"]);
    for (k, &x) in pts.iter().enumerate() {
        let frac = if curve.is_closed() { x.rem_euclid(1.0) } else { x };
        s.push(vec![k as f64, x, frac]);
    }
    let results = json!({
        "closed": curve.is_closed(),
        "steps": pts.len() - 1,
        "escaped": pts.len() - 1 < a.n,
        "points": pts,
    });
    Ok(Outcome::ok(inputs(&a, Some(&spec))?, results).with_series(s))
}

fn rotation(a: RotationArgs) -> Result<Outcome> {
    let (spec, lift) = lift_only(&a.pair)?;
    let r = rotation_number(&lift, a.x0, a.n)?;
    Ok(Outcome::ok(inputs(&a, Some(&spec))?, serde_json::to_value(r)?))
}

fn periodic(mut a: PeriodicArgs) -> Result<Outcome> {
    a.tol = Some(resolve_tol(a.tol, 1e-9)?);
    let (spec, lift) = lift_only(&a.pair)?;
    let orbit = detect_periodic_orbit(&lift, a.max_period, a.tol.unwrap())?;
    let results = json!({ "found": orbit.is_some(), "orbit": orbit });
    Ok(Outcome::ok(inputs(&a, Some(&spec))?, results))
}

/// Overlap and containment failures are answers, not input errors.
fn certificate(r: Result<hup_core::IntervalCertificate, DynamicsError>) -> Result<(Value, bool)> {
    match r {
        Ok(c) => Ok((json!({ "certificate": c }), false)),
        Err(e @ (DynamicsError::Overlap { .. } | DynamicsError::NotContained { .. })) => {
            Ok((json!({ "certificate": null, "failure": e.to_string() }), true))
        }
        Err(e) => Err(e.into()),
    }
}

fn wandering(a: WanderingArgs) -> Result<Outcome> {
    let j = interval(&a.interval)?;
    let (spec, _, map) = composed(&a.pair)?;
    let (results, failed) = certificate(certify_wandering(map.map(), j, a.horizon))?;
    Ok(Outcome::ok(inputs(&a, Some(&spec))?, results).failed_if(failed))
}

fn attract(a: AttractArgs) -> Result<Outcome> {
    let j = interval(&a.interval)?;
    let (spec, _, map) = composed(&a.pair)?;
    let (results, failed) = certificate(certify_attractive(map.map(), j, a.k, a.n_limit))?;
    Ok(Outcome::ok(inputs(&a, Some(&spec))?, results).failed_if(failed))
}

fn sigma(a: SigmaArgs) -> Result<Outcome> {
    let (spec, curve) = load_curve(&a.pair.curve.curve)?;
    let seq = sigma_sequence(curve, Angle::new(a.pair.theta1), Angle::new(a.pair.theta2), a.sigma0, a.n)?;
    let mut s = Series::new(&["k", "sigma"]);
    for (k, v) in seq.values.iter().enumerate() {
        s.push(vec![(k + 1) as f64, *v]);
    }
    Ok(Outcome::ok(inputs(&a, Some(&spec))?, serde_json::to_value(seq)?).with_series(s))
}

fn cusp(a: LineArgs) -> Result<Outcome> {
    let (spec, curve) = load_curve(&a.curve.curve)?;
    let m = CuspMaps::new(curve, Angle::new(a.theta))?;
    let results = json!({ "a": m.a, "b": m.b, "c": m.c, "cusp": m.cusp });
    Ok(Outcome::ok(inputs(&a, Some(&spec))?, results))
}

fn profile(p: Profile) -> SeedProfile {
    match p {
        Profile::Sine => SeedProfile::Sine,
        Profile::Bump => SeedProfile::Bump,
    }
}

fn counterexample(mut a: CounterexampleArgs, out: Option<&Path>) -> Result<Outcome> {
    a.tol = Some(resolve_tol(a.tol, 1e-8)?);
    let t_range = range(&a.grid.t_range, "--t-range")?;
    let prof = profile(a.profile);
    let kind = match a.kind {
        Kind::CircleRational => CounterexampleKind::CircleRational { q: a.q, profile: prof },
        Kind::HyperbolaPerpendicular => CounterexampleKind::HyperbolaPerpendicular {
            theta1: a.theta1.ok_or_else(|| anyhow!("hyperbola-perpendicular needs --theta1"))?,
            profile: prof,
        },
        Kind::GenericPeriodic => {
            let arg = a.curve.as_deref().ok_or_else(|| anyhow!("generic-periodic needs --curve"))?;
            let (spec, curve) = load_curve(arg)?;
            let t1 = a.theta1.ok_or_else(|| anyhow!("generic-periodic needs --theta1"))?;
            let t2 = a.theta2.ok_or_else(|| anyhow!("generic-periodic needs --theta2"))?;
            let lift = lift_for_angles(curve, Angle::new(t1), Angle::new(t2))?;
            let Some(orbit) = detect_periodic_orbit(&lift, dynamics::DEFAULT_PERIOD_CAP, 1e-9)? else {
                let results = json!({ "kind": { "kind": "generic_periodic" }, "failure": "no periodic orbit up to the period cap" });
                return Ok(Outcome::ok(inputs(&a, None)?, results).failed_if(true));
            };
            CounterexampleKind::GenericPeriodic { curve: spec, theta1: t1, theta2: t2, orbit, profile: prof }
        }
    };
    let ce = match construct_counterexample(&kind) {
        Ok(ce) => ce,
        Err(e @ MeasureError::StructureAbsent(_)) => {
            let results = json!({ "kind": kind, "failure": e.to_string() });
            return Ok(Outcome::ok(inputs(&a, None)?, results).failed_if(true));
        }
        Err(e) => return Err(e.into()),
    };
    let density_path: PathBuf = match (&a.density_out, out) {
        (Some(p), _) => p.clone(),
        (None, Some(o)) => report::sibling(o, "density.json"),
        (None, None) => PathBuf::from("counterexample.density.json"),
    };
    let file = ce.density.to_file(&ce.curve, a.file_grid)?;
    report::write_atomic(&density_path, serde_json::to_string(&file)?.as_bytes())?;

    let mut results = json!({
        "kind": kind,
        "curve_spec": ce.curve.spec(),
        "lines": ce.lines,
        "seed": ce.seed,
        "l1_norm": ce.l1_norm,
        "density_file": density_path.display().to_string(),
    });
    let mut failed = false;
    let mut series = None;
    if a.verify {
        let rep = check_annihilation(&ce.density, &ce.curve, &ce.lines, t_range, a.grid.t_count);
        let maxima = rep.max_moduli();
        failed = maxima.iter().any(|&m| !(m <= a.tol.unwrap()));
        results["verification"] = line_summary(&rep);
        series = Some(line_series(&rep));
    }
    let mut o = Outcome::ok(inputs(&a, None)?, results).failed_if(failed);
    o.series = series;
    o.artifacts.push(density_path.display().to_string());
    Ok(o)
}

fn line_summary(rep: &hup_core::AnnihilationReport) -> Value {
    let lines: Vec<Value> = rep
        .lines
        .iter()
        .map(|l| json!({ "theta": l.theta, "max_modulus": l.max_modulus, "argmax_t": l.argmax_t }))
        .collect();
    json!({
        "t_range": rep.t_range,
        "t_count": rep.t_count,
        "max_moduli": rep.max_moduli(),
        "lines": lines,
        "quadrature": rep.quadrature,
    })
}

fn line_series(rep: &hup_core::AnnihilationReport) -> Series {
    let mut s = Series::new(&["theta", "t", "re", "im", "abs"]);
    for (th, t, re, im, abs) in rep.rows() {
        s.push(vec![th, t, re, im, abs]);
    }
    s
}

fn annihilate(a: AnnihilateArgs) -> Result<Outcome> {
    let (spec, curve) = load_curve(&a.pair.curve.curve)?;
    let cfg = SearchConfig {
        grid_size: a.grid,
        iterations: a.iterations,
        seed: a.seed,
        modes: a.modes,
        stop_ratio: a.stop_ratio,
        order: a.order,
    };
    let r = annihilator_search(curve.clone(), Angle::new(a.pair.theta1), Angle::new(a.pair.theta2), &cfg)?;
    let mut s = Series::new(&["iteration", "l1"]);
    for (k, v) in r.history.iter().enumerate() {
        s.push(vec![k as f64, *v]);
    }
    let results = json!({
        "config": cfg,
        "iterations": r.iterations,
        "initial_l1": r.history.first(),
        "final_l1": r.history.last(),
        "ratio": r.ratio,
        "residuals": r.residuals,
    });
    let mut o = Outcome::ok(inputs(&a, Some(&spec))?, results).with_series(s);
    if let Some(path) = &a.density_out {
        let file = r.density.to_file(&curve, a.grid)?;
        report::write_atomic(path, serde_json::to_string(&file)?.as_bytes())?;
        o.artifacts.push(path.display().to_string());
    }
    Ok(o)
}

fn verify(mut a: VerifyArgs) -> Result<Outcome> {
    a.tol = Some(resolve_tol(a.tol, 1e-8)?);
    let (spec, curve) = load_curve(&a.curve.curve)?;
    let f = load_density(&a.density, &curve)?;
    let lines: Vec<Angle> = a.lines.iter().map(|&t| Angle::new(t)).collect();
    let rep = check_annihilation(&f, &curve, &lines, range(&a.grid.t_range, "--t-range")?, a.grid.t_count);
    let failed = rep.max_moduli().iter().any(|&m| !(m <= a.tol.unwrap()));
    Ok(Outcome::ok(inputs(&a, Some(&spec))?, line_summary(&rep)).with_series(line_series(&rep)).failed_if(failed))
}

fn radon(a: RadonArgs) -> Result<Outcome> {
    let (spec, curve) = load_curve(&a.line.curve.curve)?;
    let f = load_density(&a.density, &curve)?;
    let theta = Angle::new(a.line.theta);
    let (lo, hi) = match &a.zeta_range {
        Some(v) => range(v, "--zeta-range")?,
        None => {
            let split = projection_split(&curve, theta)?;
            let lo = split.pieces.iter().map(|p| p.min_value()).fold(f64::INFINITY, f64::min);
            let hi = split.pieces.iter().map(|p| p.max_value()).fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
    };
    let zetas = uniform_grid((lo, hi), a.zeta_count);
    let slice = radon_projection(&f, &curve, theta, &zetas)?;
    let mut s = Series::new(&["zeta", "re", "im"]);
    for (z, re, im) in slice.rows() {
        s.push(vec![z, re, im]);
    }
    let results = json!({
        "zeta_range": [lo, hi],
        "max_modulus": slice.max_modulus(),
        "slice": slice,
    });
    Ok(Outcome::ok(inputs(&a, Some(&spec))?, results).with_series(s))
}

fn slice_check(mut a: SliceCheckArgs) -> Result<Outcome> {
    a.tol = Some(resolve_tol(a.tol, 1e-6)?);
    let (spec, curve) = load_curve(&a.line.curve.curve)?;
    let f = load_density(&a.density, &curve)?;
    let xis = uniform_grid(range(&a.xi_range, "--xi-range")?, a.xi_count);
    let r = fourier_slice_check(&f, &curve, Angle::new(a.line.theta), &xis)?;
    let mut s = Series::new(&["xi", "slice_re", "slice_im", "direct_re", "direct_im"]);
    for ((x, p), q) in r.xi.iter().zip(&r.slice_side).zip(&r.direct_side) {
        s.push(vec![*x, p.re, p.im, q.re, q.im]);
    }
    let failed = !(r.max_discrepancy <= a.tol.unwrap());
    let results = json!({
        "max_discrepancy": r.max_discrepancy,
        "mass": r.xi.iter().position(|&x| x == 0.0).map(|i| r.direct_side[i]).unwrap_or(Complex64::new(f64::NAN, f64::NAN)).re,
        "slice_quadrature": r.slice_quadrature,
        "direct_quadrature": r.direct_quadrature,
    });
    Ok(Outcome::ok(inputs(&a, Some(&spec))?, results).with_series(s).failed_if(failed))
}

fn ellipse_reduce(a: EllipseArgs) -> Result<Outcome> {
    let scaling = match a.scaling {
        Scaling::Minor => AxisScaling::Minor,
        Scaling::Major => AxisScaling::Major,
    };
    let r = ellipse_to_circle_with(a.a, a.b, a.rotation, Angle::new(a.theta1), Angle::new(a.theta2), scaling)?;
    Ok(Outcome::ok(inputs(&a, None)?, serde_json::to_value(r)?))
}
