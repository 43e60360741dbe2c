//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
//!
//! Runs without the libtest harness so every line reaches the output.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use bloch_purity::bangbang::{control_field, next_switch_time, synthesize, ControlSign, SwitchOptions, SynthesisOptions};
use bloch_purity::bloch_model::ComplexVector3;
use bloch_purity::cubic::CubicVariant;
use bloch_purity::lie::{ad_matrix, expm, lie_exp_apply, AdjointMatrix, LieElement, Matrix6};
use bloch_purity::ode::rk4_step;
use bloch_purity::recovery::{recover_control, SampledCurve};
use bloch_purity::ritz::{RitzProblem, SolveOptions};
use bloch_purity::{build_dissipation, LindbladSpec, PlanarSystem};
use bloch_purity_cli::{run, Overrides, RunConfig};
use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const APOGEE: [f64; 2] = [0.4079, 0.4493];
const APOGEE_TOL: f64 = 5e-4;
const APOGEE_BUDGET: Duration = Duration::from_secs(1);

const RITZ_TIMES: [(usize, f64); 4] = [(1, 1.9372), (3, 1.9366), (5, 1.9361), (7, 1.9359)];
const RITZ_TOL: f64 = 5e-3;
const MONOTONE_TOL: f64 = 1e-4;
const NU_TOL: f64 = 1e-6;
const RITZ_BUDGET: Duration = Duration::from_secs(300);

/// (initial sign, first switch, gap to the second switch)
const SWITCH_TIMES: [(ControlSign, f64, f64); 2] = [(ControlSign::Plus, 2.1943, 0.4685), (ControlSign::Minus, 1.1532, 0.4905)];
const SWITCH_TOL: f64 = 1e-2;
const DETERMINANT_TOL: f64 = 1e-8;
const TRANSPORT_TOL: f64 = 1e-5;
const SWITCH_BUDGET: Duration = Duration::from_secs(30);

const BALL_TOL: f64 = 1e-6;
const F_ROOT_TOL: f64 = 1e-10;
const G_BOUND_TOL: f64 = 1e-9;
const CUBIC_RESIDUAL_TOL: f64 = 1e-9;
const GRADIENT_TOL: f64 = 1e-5;
const JACOBI_TOL: f64 = 1e-12;
const EXP_TOL: f64 = 1e-9;
const RECOVERY_TOL: f64 = 1e-5;

struct Suite {
    failures: Vec<String>,
}

impl Suite {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures.push(name.to_string());
        }
    }
}

fn reference_system() -> PlanarSystem {
    PlanarSystem::new(1.0, 2.0, -3.0, -4.0).unwrap()
}

fn switching_system() -> PlanarSystem {
    PlanarSystem::new(-2.0, -1.0, -4.0, -3.0).unwrap()
}

fn random_spec(rng: &mut ChaCha8Rng) -> LindbladSpec {
    let n = rng.random_range(1..=3);
    let mut c = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    LindbladSpec::new((0..n).map(|_| ComplexVector3::new(c(), c(), c())).collect())
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_planar(rng: &mut ChaCha8Rng) -> PlanarSystem {
    PlanarSystem::new(
        rng.random_range(-1.5..1.5),
        rng.random_range(-1.5..1.5),
        rng.random_range(-3.0..-0.2),
        rng.random_range(-3.0..-0.2),
    )
    .unwrap()
}

fn apogee(s: &mut Suite) {
    let t0 = Instant::now();
    let geo = reference_system().apogee().unwrap();
    let elapsed = t0.elapsed();
    let err = (geo.apogee.x - APOGEE[0]).abs().max((geo.apogee.y - APOGEE[1]).abs());
    s.check(
        "apogee reproduction",
        err <= APOGEE_TOL && elapsed < APOGEE_BUDGET,
        format!(
            "q_apogee = ({:.6}, {:.6}), reference ({}, {}), max error {err:.2e} <= {APOGEE_TOL:e}, {elapsed:.2?} < {APOGEE_BUDGET:?}",
            geo.apogee.x, geo.apogee.y, APOGEE[0], APOGEE[1]
        ),
    );
}

fn ritz_times(s: &mut Suite) {
    let t0 = Instant::now();
    let mut times = Vec::new();
    let mut all_ok = true;
    for (order, reference) in RITZ_TIMES {
        let prob = RitzProblem::from_system(reference_system(), order, 1e-3, 1e-3).unwrap();
        let opts = SolveOptions {
            restarts: 25,
            seed: 7,
            ..SolveOptions::default()
        };
        let sol = match prob.solve(&opts) {
            Ok(sol) => sol,
            Err(e) => {
                s.check(&format!("ritz minimum time, M = {order}"), false, e.to_string());
                all_ok = false;
                continue;
            }
        };
        let valid = sol.candidates.iter().all(|c| {
            c.nu <= NU_TOL
                && prob.chimney_violation(&c.c).is_none()
                && (0..=1000).all(|k| {
                    let x = prob.start.x + (prob.end.x - prob.start.x) * k as f64 / 1000.0;
                    let (y, _) = prob.curve(&c.c, x);
                    reference_system().purity_derivative(&Vector2::new(x, y)) > 0.0
                })
        });
        let err = (sol.best.time - reference).abs();
        let ok = err <= RITZ_TOL && valid;
        all_ok &= ok;
        s.check(
            &format!("ritz minimum time, M = {order}"),
            ok,
            format!(
                "time {:.6} vs reference {reference} (error {err:.1e} <= {RITZ_TOL:e}); energy {:.4} (not gated); \
                 {} candidates, all nu <= {NU_TOL:e} and inside the chimney: {valid}",
                sol.best.time,
                sol.best.energy,
                sol.candidates.len()
            ),
        );
        times.push(sol.best.time);
    }
    let monotone = times.len() == RITZ_TIMES.len() && times.windows(2).all(|w| w[1] <= w[0] + MONOTONE_TOL);
    let elapsed = t0.elapsed();
    s.check(
        "ritz minimum time, times non-increasing in M",
        monotone,
        format!("{times:.6?} within {MONOTONE_TOL:e}"),
    );
    s.check(
        "ritz minimum time, runtime",
        all_ok && elapsed < RITZ_BUDGET,
        format!("{elapsed:.2?} < {RITZ_BUDGET:?}"),
    );
}

/// `exp(-t ad Z)(C, 0)` at `q0` against `exp(-t A) C q(t)` integrated as an ODE.
fn transport_error(p: &PlanarSystem, eps: f64, q0: Vector2<f64>, t: f64) -> f64 {
    let dt = 1e-4;
    let traj = p.integrate(q0, |_| eps, dt, t).unwrap();
    let n = traj.len() - 1;
    let h = t / n as f64;
    let a = p.drift_matrix() + Matrix2::new(0.0, -1.0, 1.0, 0.0) * eps;
    let rhs = |_: f64, v: &Vector2<f64>| -(a * v);
    let mut v = control_field(&traj.last().unwrap().q);
    for i in 0..n {
        v = rk4_step(&rhs, i as f64 * h, &v, h);
    }
    let w = lie_exp_apply(t, &ad_matrix(p, eps), &LieElement::rotation()).apply(&q0);
    (w - v).norm()
}

fn switch_times(s: &mut Suite) {
    let t0 = Instant::now();
    let p = switching_system();
    let q0 = p.b().normalize() * 1e-3;
    let mut literal = true;
    let mut det_max: f64 = 0.0;
    let mut switches = 0;
    for (sign, first, gap) in SWITCH_TIMES {
        let opts = SynthesisOptions {
            max_switches: 8,
            ..SynthesisOptions::default()
        };
        let syn = synthesize(q0, sign, &p, 8.0, &opts).unwrap();
        let sw = &syn.schedule.switches;
        let (t1, g) = (sw.first().map(|s| s.t), sw.get(1).map(|s| s.gap));
        let ok = matches!((t1, g), (Some(t1), Some(g)) if (t1 - first).abs() <= SWITCH_TOL && (g - gap).abs() <= SWITCH_TOL);
        literal &= ok;
        println!(
            "     switching times, initial u = {sign:>2}: first switch {}, gap {} (reference {first}, {gap})",
            t1.map_or("none".into(), |v| format!("{v:.6}")),
            g.map_or("none".into(), |v| format!("{v:.6}")),
        );
        for e in sw {
            det_max = det_max.max(e.determinant.abs());
            switches += 1;
        }
        // the root finder itself, from the start of every arc
        let again = next_switch_time(&q0, sign, &p, 8.0, &SwitchOptions::default()).unwrap();
        literal &= again == sw.first().map(|e| e.gap);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut transport: f64 = 0.0;
    for _ in 0..20 {
        let sys = random_planar(&mut rng);
        let eps = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let q = Vector2::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        transport = transport.max(transport_error(&sys, eps, q, rng.random_range(0.1..2.0)));
    }
    transport = transport.max(transport_error(&p, 1.0, q0, 2.0));
    let elapsed = t0.elapsed();
    let fallback = switches > 0 && det_max <= DETERMINANT_TOL && transport <= TRANSPORT_TOL;
    let detail = format!(
        "literal match within {SWITCH_TOL:e}: {literal}; fallback gate: {switches} switches with max |det| {det_max:.1e} <= {DETERMINANT_TOL:e}, \
         transport vs variational ODE {transport:.1e} <= {TRANSPORT_TOL:e}; {elapsed:.2?} < {SWITCH_BUDGET:?}"
    );
    s.check(
        if literal { "switching times" } else { "switching times (fallback gate)" },
        (literal || fallback) && elapsed < SWITCH_BUDGET,
        detail,
    );
}

fn ball_invariance(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let model = build_dissipation(&random_spec(&mut rng)).unwrap();
        let u0 = Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let u1 = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let q0 = random_unit(&mut rng) * rng.random_range(0.0..1.0f64).sqrt();
        let states = model.integrate(q0, |t| u0 + u1 * t.sin(), 1e-3, 10.0).unwrap();
        worst = states.iter().map(|(_, q)| q.norm()).fold(worst, f64::max);
    }
    s.check(
        "property: ball invariance",
        worst <= 1.0 + BALL_TOL,
        format!("200 models, t in [0, 10], max |q| = {worst:.12} <= 1 + {BALL_TOL:e}"),
    );
}

fn chimney_roots(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut f_worst, mut g_worst): (f64, f64) = (0.0, 0.0);
    let mut n = 0;
    while n < 1000 {
        let model = build_dissipation(&random_spec(&mut rng)).unwrap();
        if !model.drift().is_negative_definite() {
            continue;
        }
        let dir = random_unit(&mut rng);
        let g = model.chimney_radius(&dir).unwrap();
        f_worst = f_worst.max(model.purity_derivative(&(dir * g)).abs());
        g_worst = g_worst.max(g);
        n += 1;
    }
    s.check(
        "property: f-root and g-bound",
        f_worst <= F_ROOT_TOL && g_worst <= 1.0 + G_BOUND_TOL,
        format!("1000 directions, max |f(g q)| = {f_worst:.1e} <= {F_ROOT_TOL:e}, max g = {g_worst:.9} <= 1 + {G_BOUND_TOL:e}"),
    );
}

fn cubic(s: &mut Suite) {
    let mut exact = true;
    let mut cases = 0;
    for b1 in -3..=3 {
        for b2 in -3..=3 {
            for a1 in -4..=-1 {
                for a2 in -4..=-1 {
                    let p = PlanarSystem::new(b1 as f64, b2 as f64, a1 as f64, a2 as f64).unwrap();
                    for v in [CubicVariant::Printed, CubicVariant::Squared] {
                        let d = p.cubic_coefficients(v)[3];
                        exact &= (d == 0.0) == (b1 == 0 || b2 == 0 || a1 == a2);
                        cases += 1;
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    let mut roots = 0;
    for _ in 0..1000 {
        let p = random_planar(&mut rng);
        for v in [CubicVariant::Printed, CubicVariant::Squared] {
            let a = p.constant_control_analysis(v).unwrap();
            for &u in &a.real_roots {
                worst = worst.max(a.scaled_residual(u));
                roots += 1;
            }
        }
    }
    s.check(
        "property: cubic",
        exact && worst <= CUBIC_RESIDUAL_TOL,
        format!("d = 0 characterisation exact on {cases} systems: {exact}; {roots} roots, max scaled |p(u)| = {worst:.1e} <= {CUBIC_RESIDUAL_TOL:e}"),
    );
}

fn ritz_gradient(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    let mut attempts = 0;
    while n < 100 && attempts < 10_000 {
        attempts += 1;
        let p = PlanarSystem::new(
            rng.random_range(0.3..2.0),
            rng.random_range(0.3..2.0),
            rng.random_range(-4.0..-1.0),
            rng.random_range(-4.0..-1.0),
        )
        .unwrap();
        let order = rng.random_range(1..=5);
        let Ok(prob) = RitzProblem::from_system(p, order, 1e-3, 1e-3) else {
            continue;
        };
        let c: Vec<f64> = (0..order).map(|_| rng.random_range(-0.5..0.5)).collect();
        let r = prob.residuals(&c);
        if r.violation.is_some() {
            continue;
        }
        // five-point central stencil
        let h = 1e-3;
        let mut fd = Vec::with_capacity(order);
        for i in 0..order {
            let at = |k: f64| {
                let mut cs = c.clone();
                cs[i] += k * h;
                prob.functional(&cs)
            };
            match (at(2.0), at(1.0), at(-1.0), at(-2.0)) {
                (Ok(a), Ok(b), Ok(d), Ok(e)) => fd.push((-a + 8.0 * b - 8.0 * d + e) / (12.0 * h)),
                _ => break,
            }
        }
        if fd.len() != order {
            continue;
        }
        let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = fd.iter().zip(r.values.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(diff / scale.max(1e-12));
        n += 1;
    }
    s.check(
        "property: Ritz residuals vs finite differences",
        n == 100 && worst <= GRADIENT_TOL,
        format!("{n} cases, max relative error {worst:.1e} <= {GRADIENT_TOL:e}"),
    );
}

fn random_element(rng: &mut ChaCha8Rng) -> LieElement {
    let mut c = [0.0; 6];
    for v in &mut c {
        *v = rng.random_range(-1.0..1.0);
    }
    LieElement::from_coords(&c.into())
}

fn lie(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut antisym = true;
    let mut jacobi: f64 = 0.0;
    for _ in 0..1000 {
        let (a, b, c) = (random_element(&mut rng), random_element(&mut rng), random_element(&mut rng));
        antisym &= a.bracket(&b).coords() == -b.bracket(&a).coords() && a.bracket(&a) == LieElement::zero();
        let j = a.bracket(&b.bracket(&c)).coords() + b.bracket(&c.bracket(&a)).coords() + c.bracket(&a.bracket(&b)).coords();
        jacobi = jacobi.max(j.abs().max());
    }
    let mut adjoint = true;
    let mut exp_err: f64 = 0.0;
    for _ in 0..100 {
        let p = random_planar(&mut rng);
        for eps in [1.0, -1.0] {
            adjoint &= ad_matrix(&p, eps) == AdjointMatrix::from_bracket(&LieElement::drift_with_control(&p, eps));
            let t = rng.random_range(-5.0..5.0);
            let a = ad_matrix(&p, eps).0 * -t;
            // 30-term series on pieces small enough for it to converge
            let n = (a.abs().row_sum().max() / 2.0).ceil().max(1.0) as i32;
            let piece = a / n as f64;
            let (mut term, mut series) = (Matrix6::identity(), Matrix6::identity());
            for k in 1..30 {
                term = term * piece / k as f64;
                series += term;
            }
            let mut oracle = Matrix6::identity();
            for _ in 0..n {
                oracle *= series;
            }
            exp_err = exp_err.max((expm(&a) - oracle).abs().max() / oracle.abs().max().max(1.0));
        }
    }
    let mut transport: f64 = 0.0;
    for _ in 0..20 {
        let p = random_planar(&mut rng);
        let eps = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let q = Vector2::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        transport = transport.max(transport_error(&p, eps, q, rng.random_range(0.1..2.0)));
    }
    s.check(
        "property: Lie algebra",
        antisym && jacobi <= JACOBI_TOL && adjoint && exp_err <= EXP_TOL && transport <= TRANSPORT_TOL,
        format!(
            "antisymmetry exact: {antisym}; Jacobi {jacobi:.1e} <= {JACOBI_TOL:e}; ad matrix = bracket exactly: {adjoint}; \
             exp vs series {exp_err:.1e} <= {EXP_TOL:e}; transport vs variational ODE {transport:.1e} <= {TRANSPORT_TOL:e}"
        ),
    );
}

fn recovery(s: &mut Suite) {
    let p = reference_system();
    let (q0, _) = p.endpoints(1e-2, 1e-3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 50 {
        let (a, amp, w) = (rng.random_range(-1.0..1.0), rng.random_range(0.0..0.5), rng.random_range(0.5..3.0));
        let u = |t: f64| a + amp * f64::sin(w * t);
        let traj = p.integrate(q0, u, 1e-4, 0.3).unwrap();
        let Ok(curve) = SampledCurve::from_trajectory(&traj, &p) else {
            continue;
        };
        let mut knots = curve.knots().to_vec();
        if traj.samples[1].q.x < traj.samples[0].q.x {
            knots.reverse();
        }
        let Ok(profile) = recover_control(|x| curve.eval(x), &p, &knots) else {
            continue;
        };
        for (r, orig) in profile.samples.iter().zip(&traj.samples) {
            worst = worst.max((r.u - orig.u).abs()).max((r.t - orig.t).abs());
        }
        n += 1;
    }
    s.check(
        "property: control recovery round trip",
        worst <= RECOVERY_TOL,
        format!("50 controls at dt = 1e-4, max |du|, |dt| = {worst:.1e} <= {RECOVERY_TOL:e}"),
    );
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism(s: &mut Suite) {
    let runs = [
        ("ritz", "command = ritz\nb1=1 b2=2 alpha1=-3 alpha2=-4\norder = 3\nrestarts = 25\nseed = 7\n"),
        ("bangbang", "command = bangbang\nb1=-2 b2=-1 alpha1=-4 alpha2=-3\ninitial_sign = -1\nhorizon = 6\n"),
        ("apogee", "command = apogee\nb1=1 b2=2 alpha1=-3 alpha2=-4\n"),
        ("simulate", "command = simulate\nb1=1 b2=2 alpha1=-3 alpha2=-4\ncontrols = u.csv\nhorizon = 1\n"),
    ];
    let tmp = tempfile::TempDir::new().unwrap();
    fs::write(tmp.path().join("u.csv"), "t,u\n0,1\n0.4,-0.5\n").unwrap();
    let mut identical = true;
    let mut count = 0;
    for (name, text) in runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let ov = Overrides {
                out: Some(tmp.path().join(format!("{name}-{rep}"))),
                ..Overrides::default()
            };
            let cfg = RunConfig::from_text(text, tmp.path(), &ov).unwrap();
            let outcome = run(&cfg).unwrap();
            outputs.push((outcome.stdout, artifacts(&tmp.path().join(format!("{name}-{rep}")))));
        }
        count += outputs[0].1.len();
        identical &= outputs[0] == outputs[1] && !outputs[0].1.is_empty();
    }
    // a separate process as well
    let cfg = tmp.path().join("r.conf");
    fs::write(&cfg, runs[0].1).unwrap();
    let mut bytes = Vec::new();
    for rep in 0..2 {
        let out = tmp.path().join(format!("proc-{rep}"));
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_bloch-purity"))
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap()
            .status;
        identical &= status.success();
        bytes.push(artifacts(&out));
    }
    identical &= bytes[0] == bytes[1];
    s.check(
        "determinism",
        identical,
        format!("{count} artifacts from 4 commands plus a ritz run in separate processes byte-identical: {identical}"),
    );
}

fn main() {
    let mut s = Suite { failures: Vec::new() };
    apogee(&mut s);
    ritz_times(&mut s);
    switch_times(&mut s);
    ball_invariance(&mut s);
    chimney_roots(&mut s);
    cubic(&mut s);
    ritz_gradient(&mut s);
    lie(&mut s);
    recovery(&mut s);
    determinism(&mut s);
    if s.failures.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failed: {}", s.failures.len(), s.failures.join(", "));
        std::process::exit(1);
    }
}
