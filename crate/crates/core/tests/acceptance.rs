//! Acceptance criteria 1-7. Prints one PASS/FAIL line per criterion and
//! exits non-zero on any failure that is not listed as a known
//! discrepancy with the reference values.
//!
//!   cargo test -p dmkit-core --test acceptance

use std::f64::consts::TAU;
use std::panic;
use std::process::ExitCode;
use std::time::Instant;

use dmkit_core::classical::classical_margins;
use dmkit_core::disk::{
    disk_margin, disk_margin_with_tol, freq_margin_trace, perturbation_of, verify_destabilizing,
    worst_perturbation_lti, LoopFactor,
};
use dmkit_core::linalg::{complex_det, complex_eigenvalues, CMatrix};
use dmkit_core::lti::{poles, sensitivity_pair, FeedbackSign, System};
use dmkit_core::mu::{
    build_m, loop_at_a_time, loop_at_a_time_margins, mu_diag, multiloop_margin, verify_multiloop_destabilizing,
    AnalysisPoints, LoopLocation,
};
use dmkit_core::specnorm::{hinf_norm, FrequencyGrid};
use dmkit_core::{Complex64, LtiModel, StateSpace, TransferFunction};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reason a criterion failed. `known` marks a documented disagreement
/// with a reference value that the exact computation cannot meet.
struct Failure {
    known: bool,
    msg: String,
}

type Check = Result<(), Failure>;
type Criterion = (&'static str, fn() -> Check);

fn fail(msg: String) -> Failure {
    Failure { known: false, msg }
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(fail(format!($($fmt)+)));
        }
    };
}

fn close(what: &str, got: f64, want: f64, rel: f64) -> Check {
    let err = (got - want).abs() / want.abs().max(f64::MIN_POSITIVE);
    ensure!(
        err <= rel,
        "{what}: got {got}, want {want} (rel err {err:.2e} > {rel:.0e})"
    );
    Ok(())
}

fn ok<T, E: std::fmt::Debug>(what: &str, r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| fail(format!("{what}: {e:?}")))
}

fn tf(num: &[f64], den: &[f64]) -> LtiModel {
    LtiModel::tf(num, den).unwrap()
}

fn example1() -> LtiModel {
    tf(&[25.0], &[1.0, 10.0, 10.0, 10.0])
}

const BAD_NUM: [f64; 8] = [-47.252, -20.234, -135.4086, 61.6166, 804.6454, 600.0611, 59.1451, 1.888];
const BAD_DEN: [f64; 8] = [99.8696, 175.5045, 673.7378, 890.5109, 553.1742, -49.2268, 12.1448, 1.0];

fn satellite() -> (LtiModel, LtiModel) {
    let a = 10.0;
    let den = [1.0, 0.0, a * a];
    let e = |num: &[f64]| TransferFunction::from_coeffs(num, &den).unwrap();
    let p = LtiModel::from_tf_matrix(
        &[
            vec![e(&[1.0, -a * a]), e(&[a, a])],
            vec![e(&[-a, -a]), e(&[1.0, -a * a])],
        ],
        FeedbackSign::Negative,
    )
    .unwrap();
    // K = -I in the positive-feedback convention
    let k = LtiModel::new(
        StateSpace::static_gain(-DMatrix::identity(2, 2)),
        FeedbackSign::Positive,
    );
    (p, k)
}

/// Horner evaluation, coefficients from the highest power down.
fn horner(c: &[f64], s: Complex64) -> Complex64 {
    c.iter().fold(Complex64::new(0.0, 0.0), |acc, &x| acc * s + x)
}

fn loop_at(num: &[f64], den: &[f64], w: f64) -> Complex64 {
    if w.is_infinite() {
        let k = if num.len() == den.len() { num[0] / den[0] } else { 0.0 };
        return Complex64::new(k, 0.0);
    }
    let s = Complex64::new(0.0, w);
    horner(num, s) / horner(den, s)
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

/// Roots of a complex polynomial via its companion matrix.
fn complex_roots(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let mut m = CMatrix::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    complex_eigenvalues(&m).unwrap()
}

/// Closed-loop characteristic polynomial `den + f num` of a SISO loop.
fn closed_loop_roots(num: &[f64], den: &[f64], f: Complex64) -> Vec<Complex64> {
    let off = den.len() - num.len();
    let c: Vec<Complex64> = (0..den.len())
        .map(|i| {
            let n = if i >= off { num[i - off] } else { 0.0 };
            Complex64::new(den[i], 0.0) + f * n
        })
        .collect();
    complex_roots(&c)
}

fn coeffs(t: &TransferFunction) -> (Vec<f64>, Vec<f64>) {
    (t.num().coeffs().to_vec(), t.den().coeffs().to_vec())
}

fn tf_of(m: &LtiModel) -> TransferFunction {
    match m.system() {
        System::Tf(t) => t.clone(),
        System::Ss(s) => s.to_tf().unwrap(),
    }
}

fn criterion_1() -> Check {
    let c = ok("classical margins", classical_margins(&example1()))?;
    ensure!(c.g_lower == 0.0, "g_L = {}", c.g_lower);
    close("g_U", c.g_upper, 3.6, 0.02)?;
    close("g_U frequency", c.gain.freq_upper.unwrap_or(f64::NAN), 3.16, 0.02)?;
    close("phi_U [deg]", c.phi_upper.to_degrees(), 29.1, 0.02)?;
    close("phi_U frequency", c.critical_phase_freq.unwrap_or(f64::NAN), 1.78, 0.02)?;

    let (num, den) = coeffs(&tf_of(&example1()));
    let mut p = closed_loop_roots(&num, &den, Complex64::new(1.0, 0.0));
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    close("closed-loop pole 1", p[0].re, -9.33, 0.02)?;
    ensure!(p[0].im.abs() < 1e-9, "first pole not real: {}", p[0]);
    for z in &p[1..] {
        close("complex pole real part", z.re, -0.33, 0.02)?;
        close("complex pole imag part", z.im.abs(), 1.91, 0.02)?;
    }
    // the library's own closure agrees with the characteristic polynomial
    let cl = ok(
        "closure",
        dmkit_core::lti::scalar_close(&example1(), &[dmkit_core::lti::ChannelFactor::Gain(1.0)]),
    )?;
    let q = ok("poles", poles(&cl))?;
    ensure!(q.len() == p.len(), "{} closed-loop poles, want {}", q.len(), p.len());
    for a in &p {
        let d = q.iter().map(|b| (a - b).norm()).fold(f64::INFINITY, f64::min);
        ensure!(d < 1e-8, "closed-loop pole {a} missing from the library closure");
    }
    Ok(())
}

fn criterion_2() -> Check {
    let r = ok("disk margin", disk_margin(&example1(), 0.0))?;
    close("alpha_max", r.alpha(), 0.46, 0.02)?;
    close("omega_0", r.omega_crit, 1.94, 0.02)?;
    close("peak gain", r.peak_gain, 2.18, 0.02)?;
    close("Re delta_0", r.delta0.re, 0.212, 0.02)?;
    close("Im delta_0", r.delta0.im, -0.406, 0.02)?;
    let f0 = r.f0.ok_or_else(|| fail("f_0 is infinite".into()))?;
    close("Re f_0", f0.re, 1.128, 0.02)?;
    close("Im f_0", f0.im, -0.483, 0.02)?;
    let (lo, hi) = r.guaranteed_gm;
    close("gamma_min", lo, 0.63, 0.02)?;
    close("gamma_max", hi, 1.59, 0.02)?;
    close("gamma_min [dB]", 20.0 * lo.log10(), -4.05, 0.02)?;
    close("gamma_max [dB]", 20.0 * hi.log10(), 4.05, 0.02)?;
    close("phi_m [deg]", r.guaranteed_pm.to_degrees(), 25.8, 0.02)?;
    Ok(())
}

fn criterion_3() -> Check {
    let l = example1();
    let r = ok("disk margin", disk_margin(&l, 0.0))?;
    let p = ok(
        "worst perturbation",
        worst_perturbation_lti(r.delta0, r.omega_crit, 0.0),
    )?;
    let beta = p.beta.ok_or_else(|| fail("perturbation is static".into()))?;

    // δ̂0 = k (s - β)/(s + β)
    let (dn, dd) = coeffs(&p.delta_hat);
    ensure!(dn.len() == 2 && dd.len() == 2, "delta_hat is not first order");
    let k = dn[0] / dd[0];
    close("delta_hat gain", k, -0.458, 0.02)?;
    close("delta_hat zero", -dn[1] / dn[0], 3.226, 0.02)?;
    close("delta_hat pole", dd[1] / dd[0], 3.226, 0.02)?;
    close("beta", beta, 3.226, 0.02)?;

    // f̂0 normalized to a monic denominator
    let (fnum, fden) = coeffs(&p.f_hat);
    let (fnum, fden): (Vec<f64>, Vec<f64>) = (
        fnum.iter().map(|x| x / fden[0]).collect(),
        fden.iter().map(|x| x / fden[0]).collect(),
    );
    close("f_hat numerator s", fnum[0], 0.627, 0.02)?;
    close("f_hat numerator 1", fnum[1], 3.226, 0.02)?;

    // independent evaluation of f = (2 + δ)/(2 - δ) for δ = k (s-β)/(s+β):
    // f = ((2+k) s + (2-k) β) / ((2-k) s + (2+k) β)
    let oracle = |k: f64, b: f64| (2.0 + k) / (2.0 - k) * b;
    close(
        "f_hat denominator vs oracle (reference values)",
        fden[1],
        oracle(-0.458, 3.226),
        0.02,
    )?;
    close("f_hat denominator vs 2.024", fden[1], 2.024, 0.02)?;
    close(
        "f_hat denominator vs oracle (computed k, beta)",
        fden[1],
        oracle(k, beta),
        1e-9,
    )?;

    let v = ok(
        "verification",
        verify_destabilizing(&l, &LoopFactor::from(&p), r.omega_crit),
    )?;
    ensure!(v.passed(), "verify_destabilizing failed: {v:?}");
    let pole = v.nearest_pole.ok_or_else(|| fail("no closed-loop pole".into()))?;
    ensure!(
        (pole - Complex64::new(0.0, r.omega_crit)).norm() < 1e-6,
        "pole {pole} not at j{}",
        r.omega_crit
    );
    let target = Complex64::new(0.0, 1.94);
    let d = (pole - target).norm();
    if d >= 1e-3 {
        return Err(Failure {
            known: true,
            msg: format!(
                "closed-loop pole {:.4}{:+.4}j is {d:.4} from j1.94; the exact peak of |S - 1/2| is at {:.4} rad/s",
                pole.re, pole.im, r.omega_crit
            ),
        });
    }
    Ok(())
}

fn criterion_4() -> Check {
    let l = tf(&BAD_NUM, &BAD_DEN);
    let c = ok("classical margins", classical_margins(&l))?;
    close("phi_U [deg]", c.phi_upper.to_degrees(), 45.0, 0.03)?;
    close("g_L", c.g_lower, 0.2, 0.03)?;
    close("g_U", c.g_upper, 2.1, 0.03)?;

    let mut oracle = (loop_at(&BAD_NUM, &BAD_DEN, 0.0) + 1.0).norm();
    oracle = oracle.min((loop_at(&BAD_NUM, &BAD_DEN, f64::INFINITY) + 1.0).norm());
    for w in logspace(1e-3, 1e3, 100_000) {
        oracle = oracle.min((loop_at(&BAD_NUM, &BAD_DEN, w) + 1.0).norm());
    }
    let r = ok("disk margin", disk_margin(&l, 1.0))?;
    close("alpha_max(sigma=1) vs min |1+L|", r.alpha(), oracle, 1e-3)?;
    ensure!(r.alpha() < 0.3, "alpha_max(sigma=1) = {} is not below 0.3", r.alpha());
    Ok(())
}

fn criterion_5() -> Check {
    let (p, k) = satellite();
    for ch in 0..2 {
        let li = ok("loop at a time", loop_at_a_time(&p, &k, ch, LoopLocation::Input))?;
        // -L1 = 1/s in the negative-feedback convention
        for w in [0.1, 1.0, 10.0] {
            let z = ok("eval", li.eval_siso(w))?;
            let want = Complex64::new(0.0, -1.0 / w);
            ensure!(
                (z - want).norm() < 1e-9 * want.norm(),
                "L_{ch}(j{w}) = {z}, want {want}"
            );
        }
        let (c, d) = ok(
            "loop-at-a-time margins",
            loop_at_a_time_margins(&p, &k, ch, LoopLocation::Input, 0.0),
        )?;
        ensure!(
            c.g_lower == 0.0 && c.g_upper == f64::INFINITY,
            "GM ({}, {})",
            c.g_lower,
            c.g_upper
        );
        close("loop PM [deg]", c.phi_upper.to_degrees(), 90.0, 0.02)?;
        close("loop disk margin", d.alpha(), 2.0, 0.02)?;
    }

    let one = Complex64::new(1.0, 0.0);
    let nominal = ok(
        "nominal closure",
        verify_multiloop_destabilizing(&p, &k, &AnalysisPoints::Input, &[one, one], 0.0),
    )?;
    ensure!(nominal.stable, "nominal loop reported unstable");
    let skewed = ok(
        "closure with (0.9, 1.1)",
        verify_multiloop_destabilizing(&p, &k, &AnalysisPoints::Input, &[one * 0.9, one * 1.1], 0.0),
    )?;
    ensure!(!skewed.stable, "f = (0.9, 1.1) keeps the loop stable");

    let margin = |points: AnalysisPoints| {
        let sys = ok("M-Delta system", build_m(&p, &k, &points, 0.0))?;
        ok("multi-loop margin", multiloop_margin(&sys))
    };
    let input = margin(AnalysisPoints::Input)?;
    let output = margin(AnalysisPoints::Output)?;
    let io = margin(AnalysisPoints::InputOutput)?;
    let contains = |lo: f64, hi: f64, v: f64| lo <= v * 1.02 && hi >= v * 0.98;
    ensure!(
        contains(input.alpha_lower, input.alpha_upper, 0.0997),
        "input bracket [{}, {}] misses 0.0997",
        input.alpha_lower,
        input.alpha_upper
    );
    close("input gamma_min", input.geometry.gamma_min, 0.905, 0.02)?;
    close("input gamma_max", input.geometry.gamma_max, 1.105, 0.02)?;
    ensure!(
        contains(io.alpha_lower, io.alpha_upper, 0.0498),
        "io bracket [{}, {}] misses 0.0498",
        io.alpha_lower,
        io.alpha_upper
    );
    close("io gamma_min", io.geometry.gamma_min, 0.941, 0.02)?;
    close("io gamma_max", io.geometry.gamma_max, 1.051, 0.02)?;
    close("output vs input margin", output.alpha_lower, input.alpha_lower, 0.01)?;
    Ok(())
}

fn criterion_6() -> Check {
    let l = tf(&[6.25, 50.0, 93.75], &[1.0, 2.18, 101.36, 200.18, 100.0, 0.0]);
    let grid = ok("grid", FrequencyGrid::logspace(100.0, 1e4, 400))?;
    let t = ok("trace", freq_margin_trace(&l, 0.0, &grid))?;
    for (i, &w) in grid.points().iter().enumerate() {
        close(&format!("alpha({w:.1})"), t.alpha_of_omega[i], 2.0, 0.01)?;
        close(
            &format!("phi_m({w:.1}) [deg]"),
            t.pm_of_omega[i].to_degrees(),
            90.0,
            0.01,
        )?;
    }
    let grid = ok("grid", FrequencyGrid::logspace(5.0, 20.0, 601))?;
    let t = ok("trace", freq_margin_trace(&l, 0.0, &grid))?;
    let a = &t.alpha_of_omega;
    let (i_min, a_min) = a
        .iter()
        .copied()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    let (a5, a20) = (a[0], a[a.len() - 1]);
    ensure!(
        a_min < a5 && a_min < a20,
        "no interior dip: min {a_min} at {} vs alpha(5) = {a5}, alpha(20) = {a20}",
        grid.points()[i_min]
    );
    Ok(())
}

/// Random loop with stable poles whose negative-feedback closure is
/// stable as well.
fn random_stable_loop(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    loop {
        let n = rng.random_range(2..=4usize);
        let mut den = vec![1.0];
        let mut deg = 0;
        while deg < n {
            let factor = if n - deg >= 2 && rng.random::<bool>() {
                let wn = 10f64.powf(rng.random_range(-1.0..1.0));
                let zeta = rng.random_range(0.05..0.9);
                vec![1.0, 2.0 * zeta * wn, wn * wn]
            } else {
                vec![1.0, 10f64.powf(rng.random_range(-1.0..1.0))]
            };
            deg += factor.len() - 1;
            den = poly_mul(&den, &factor);
        }
        let m = rng.random_range(0..n);
        let mut num = vec![rng.random_range(0.2..5.0) * if rng.random::<f64>() < 0.2 { -0.3 } else { 1.0 }];
        for _ in 0..m {
            num = poly_mul(&num, &[1.0, rng.random_range(-0.5..5.0)]);
        }
        let l = tf(&num, &den);
        if disk_margin(&l, 0.0).is_ok() {
            return (num, den);
        }
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            c[i + j] += x * y;
        }
    }
    c
}

fn spectral_radius_2x2(m: [[Complex64; 2]; 2]) -> f64 {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr - det * 4.0).sqrt();
    ((tr + disc) * 0.5).norm().max(((tr - disc) * 0.5).norm())
}

/// μ of a 2x2 matrix for two complex scalar blocks: the largest
/// `ρ(diag(1, e^{jθ}) M)` over a fine phase grid.
fn mu_grid_oracle(m: &CMatrix) -> f64 {
    let n = 20_000;
    (0..n)
        .map(|i| {
            let q = Complex64::from_polar(1.0, TAU * i as f64 / n as f64);
            spectral_radius_2x2([[m[(0, 0)], m[(0, 1)]], [q * m[(1, 0)], q * m[(1, 1)]]])
        })
        .fold(0.0, f64::max)
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    let mut loops: Vec<(Vec<f64>, Vec<f64>)> = (0..5).map(|_| random_stable_loop(&mut rng)).collect();
    loops.push(coeffs(&tf_of(&example1())));
    loops.push((BAD_NUM.to_vec(), BAD_DEN.to_vec()));

    for (idx, (num, den)) in loops.iter().enumerate() {
        let l = tf(num, den);
        let (s, t) = ok("sensitivities", sensitivity_pair(&l))?;
        let (st, tt) = (tf_of(&s), tf_of(&t));

        // S + T = 1
        for w in logspace(1e-2, 1e2, 50) {
            let z = ok("S", st.eval_freq(w))? + ok("T", tt.eval_freq(w))?;
            ensure!((z - 1.0).norm() < 1e-12, "loop {idx}: S + T - 1 = {} at {w}", z - 1.0);
        }

        // special cases of the skew
        let half_diff = LtiModel::negative(st.add(&tt.neg()).scale(0.5));
        let norms = [
            (-1.0, ok("|T|", hinf_norm(&t, 1e-12))?.value),
            (0.0, ok("|S-T|/2", hinf_norm(&half_diff, 1e-12))?.value),
            (1.0, ok("|S|", hinf_norm(&s, 1e-12))?.value),
        ];
        for (sigma, norm) in norms {
            let r = ok("disk margin", disk_margin_with_tol(&l, sigma, 1e-12))?;
            close(
                &format!("loop {idx}: alpha(sigma={sigma}) vs 1/norm"),
                r.alpha(),
                1.0 / norm,
                1e-9,
            )?;
        }

        // H∞ norm of S against a dense grid
        let s_at = |w: f64| {
            let z = loop_at(num, den, w);
            1.0 / (1.0 + z).norm()
        };
        let mut oracle = s_at(0.0).max(s_at(f64::INFINITY));
        for w in logspace(1e-3, 1e3, 100_000) {
            oracle = oracle.max(s_at(w));
        }
        let h = norms[2].1;
        ensure!(
            h >= oracle * (1.0 - 1e-9),
            "loop {idx}: |S| = {h} below grid value {oracle}"
        );
        close(&format!("loop {idx}: |S| vs grid"), h, oracle, 1e-3)?;

        // interior of the disk keeps the loop stable; f0 sits on the boundary
        if idx < 5 {
            for sigma in [-1.0, 0.0, 1.0, rng.random_range(-1.0..1.0)] {
                let r = ok("disk margin", disk_margin(&l, sigma))?;
                // 4 skews x 25 samples per loop
                for _ in 0..25 {
                    let rad = 0.99 * r.alpha() * rng.random::<f64>().sqrt();
                    let th = rng.random::<f64>() * TAU;
                    let Some(f) = perturbation_of(Complex64::from_polar(rad, th), sigma) else {
                        continue;
                    };
                    let roots = closed_loop_roots(num, den, f);
                    ensure!(
                        roots.iter().all(|z| z.re < 0.0),
                        "loop {idx}, sigma {sigma}: interior f = {f} destabilizes"
                    );
                }
                if let (Some(f0), true) = (r.f0, r.omega_crit.is_finite()) {
                    let res = (1.0 + f0 * loop_at(num, den, r.omega_crit)).norm();
                    ensure!(res < 1e-6, "loop {idx}, sigma {sigma}: |1 + f0 L(jw0)| = {res}");
                }
            }
        }
    }

    // μ bounds against the phase-grid oracle, with det(I - MΔ) = 0
    for case in 0..20 {
        let m = CMatrix::from_fn(2, 2, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                * if case % 4 == 0 { 5.0 } else { 1.0 }
        });
        let r = ok("mu", mu_diag(&m))?;
        let oracle = mu_grid_oracle(&m);
        close(&format!("mu case {case}: upper bound"), r.upper, oracle, 5e-3)?;
        close(&format!("mu case {case}: lower bound"), r.lower, oracle, 5e-3)?;
        let d = r
            .delta_worst
            .ok_or_else(|| fail(format!("mu case {case}: no worst-case delta")))?;
        let md = &m * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
        let res = complex_det(&(CMatrix::identity(2, 2) - md)).norm();
        ensure!(res < 1e-6, "mu case {case}: det residual {res}");
    }

    // multi-loop margins never exceed loop-at-a-time margins
    let (p, k) = satellite();
    let coupled = {
        let e = |num: &[f64], den: &[f64]| TransferFunction::from_coeffs(num, den).unwrap();
        let p = LtiModel::from_tf_matrix(
            &[
                vec![e(&[2.0], &[1.0, 1.0]), e(&[0.5], &[1.0, 2.0])],
                vec![e(&[-0.8], &[1.0, 3.0]), e(&[3.0, 3.0], &[1.0, 0.4, 4.0])],
            ],
            FeedbackSign::Negative,
        )
        .unwrap();
        (p, LtiModel::negative(StateSpace::static_gain(DMatrix::identity(2, 2))))
    };
    for (name, (p, k)) in [("satellite", (p, k)), ("coupled", coupled)] {
        for sigma in [-0.5, 0.0, 0.7] {
            let mut single = f64::INFINITY;
            for loc in [LoopLocation::Input, LoopLocation::Output] {
                for ch in 0..2 {
                    let (_, d) = ok("loop-at-a-time", loop_at_a_time_margins(&p, &k, ch, loc, sigma))?;
                    single = single.min(d.alpha());
                }
            }
            let mut sub = Vec::new();
            for points in [
                AnalysisPoints::Input,
                AnalysisPoints::Output,
                AnalysisPoints::InputOutput,
            ] {
                let sys = ok("M-Delta", build_m(&p, &k, &points, sigma))?;
                let r = ok("multi-loop", multiloop_margin(&sys))?;
                ensure!(
                    r.alpha_lower <= single * (1.0 + 1e-9),
                    "{name} {points:?} sigma {sigma}: multi-loop {} above loop-at-a-time {single}",
                    r.alpha_lower
                );
                if r.alpha_upper.is_finite() {
                    let mw = ok("eval M", sys.m.eval_freq(r.omega_crit))?;
                    let n = sys.n;
                    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(r.delta_worst.clone()));
                    let res = complex_det(&(CMatrix::identity(n, n) - mw * d)).norm();
                    ensure!(res < 1e-6, "{name} {points:?} sigma {sigma}: det residual {res}");
                }
                sub.push(r);
            }
            // perturbing more channels cannot raise the margin
            for r in &sub[..2] {
                ensure!(
                    sub[2].alpha_lower <= r.alpha_upper * (1.0 + 1e-9),
                    "{name} sigma {sigma}: io margin {} above single-side {}",
                    sub[2].alpha_lower,
                    r.alpha_upper
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("classical margins of the third-order loop", criterion_1),
        ("symmetric disk margin of the third-order loop", criterion_2),
        ("worst-case dynamic perturbation", criterion_3),
        ("loop with good classical but poor disk margins", criterion_4),
        ("spinning satellite multi-loop margins", criterion_5),
        ("frequency-dependent margin trace", criterion_6),
        ("property suites", criterion_7),
    ];
    let mut unexpected = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(fail(format!("panicked: {msg}")))
        });
        let secs = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(()) if secs >= 5.0 => Err(fail(format!("took {secs:.1} s"))),
            o => o,
        };
        match outcome {
            Ok(()) => println!("criterion {}: PASS  {name} ({secs:.2} s)", i + 1),
            Err(Failure { known: true, msg }) => {
                println!(
                    "criterion {}: FAIL  {name} ({secs:.2} s) [known discrepancy] {msg}",
                    i + 1
                )
            }
            Err(Failure { known: false, msg }) => {
                unexpected += 1;
                println!("criterion {}: FAIL  {name} ({secs:.2} s) {msg}", i + 1)
            }
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
