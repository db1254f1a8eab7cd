//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion (with the individual checks indented below)
//! and exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qcontrast::certify::{
    certify_record, cglmp_noisy, cglmp_quantum_value, fidelity_all_mub_from_contrast, fidelity_exact_from_data,
    k_max_all_mub, optimal_operating_point, required_contrast_all_mub, required_contrast_two_mub,
    steering_functional, steering_test_from_data, steering_threshold, CglmpBound, CglmpTable,
};
use qcontrast::cli::commands::{simulate_point, table1_rows, validate_mc_cell, SimulationPoint};
use qcontrast::cli::derive_seed;
use qcontrast::coincidence::{simulate_record, ExperimentRecord, NoiseSpec};
use qcontrast::mubs::{all_mubs, mub_projector_sum_check, MubSet};
use qcontrast::noise_model::{contrast_from_weight, isotropic_weight, max_contrast, quantum_contrast};
use qcontrast::states::{flat_spectrum, gaussian_spectrum};
use qcontrast::NoiseParams;

struct Criterion {
    id: u32,
    title: &'static str,
    checks: Vec<(bool, String)>,
}

impl Criterion {
    fn new(id: u32, title: &'static str) -> Self {
        Self {
            id,
            title,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        self.checks.push((ok, detail.into()));
    }

    fn runtime(&mut self, start: Instant, limit: Duration) {
        let elapsed = start.elapsed();
        self.check(elapsed < limit, format!("runtime {:.3} s < {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.0)
    }
}

fn criterion_1() -> Criterion {
    let mut c = Criterion::new(1, "Table 1 prediction columns");
    let start = Instant::now();
    let rows = table1_rows().expect("table rows");
    c.runtime(start, Duration::from_secs(1));
    let fidelity: [&[&str]; 4] = [&["94.5"], &["89.2"], &["83.8", "83.9"], &["78.0", "78.1"]];
    let k = [3, 5, 6, 9];
    let optimal = [(4, "9.0"), (9, "20.8"), (14, "32.5"), (23, "55.8")];
    for (i, r) in rows.iter().enumerate() {
        let f = format!("{:.1}", 100.0 * r.fidelity_pred);
        c.check(fidelity[i].contains(&f.as_str()), format!("d = {}: F_pred {f}% in {:?}", r.d, fidelity[i]));
        c.check(r.k_pred == k[i], format!("d = {}: k_pred {} (expected {})", r.d, r.k_pred, k[i]));
        let q = format!("{:.1}", r.q_opt);
        c.check(
            r.d_opt == optimal[i].0 && q == optimal[i].1,
            format!("d = {}: (d_opt, Q_opt) = ({}, {q}) (expected ({}, {}))", r.d, r.d_opt, optimal[i].0, optimal[i].1),
        );
    }
    c
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::new(2, "Isotropic-state thresholds and constant-p contours");
    let p22 = isotropic_weight(2, 2.0).unwrap().p;
    let p106 = isotropic_weight(10, 6.0).unwrap().p;
    c.check((p22 - 1.0 / 3.0).abs() < 1e-12, format!("p(d = 2, q = 2) = {p22:.15}"));
    c.check((p106 - 1.0 / 3.0).abs() < 1e-12, format!("p(d = 10, q = 6) = {p106:.15}"));
    let mut worst = 0.0f64;
    for p in [0.1, 1.0 / 3.0, 0.5] {
        for d in 2..=50usize {
            let q = contrast_from_weight(d, p).unwrap().get();
            let expected = 1.0 + p * d as f64 / (1.0 - p);
            worst = worst.max((q - expected).abs() / expected);
            worst = worst.max((isotropic_weight(d, q).unwrap().p - p).abs());
        }
    }
    c.check(worst < 1e-12, format!("contours p in {{0.1, 1/3, 0.5}}, d in [2, 50]: worst deviation {worst:.2e}"));
    c
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new(3, "Contrast optimum");
    let q = max_contrast(1e-7, 0.8).unwrap().get();
    c.check((q / 2.0e6 - 1.0).abs() < 1e-3, format!("max_contrast(1e-7, 0.8) = {q:.6e}"));
    let points = 4001;
    let (lo, hi) = (1e-9f64.ln(), 0.0f64);
    let grid: Vec<f64> = (0..points).map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp()).collect();
    let step = (hi - lo) / (points - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = 10f64.powf(rng.random_range(-7.0..-2.0));
        let eta = rng.random_range((2.0 * n + 0.01)..1.0);
        let best = grid
            .iter()
            .map(|&mu| (mu, quantum_contrast(&NoiseParams::new(mu, n, eta).unwrap()).unwrap().get()))
            .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        let analytic = n / (eta - 2.0 * n);
        worst = worst.max((best.0 / analytic).ln().abs() / step);
    }
    c.check(worst <= 1.0, format!("20 random (n, eta): grid argmax within {worst:.3} log-grid steps of n/(eta - 2n)"));
    c
}

fn criterion_4() -> Criterion {
    let mut c = Criterion::new(4, "Two-MUB anchor points");
    let start = Instant::now();
    let q = required_contrast_two_mub(1000, 1000).unwrap();
    let op = optimal_operating_point(1000).unwrap();
    c.runtime(start, Duration::from_secs(1));
    c.check(q == 1_997_001.0, format!("required_contrast_two_mub(1000, 1000) = {q}"));
    let ratio = q / op.q_opt;
    c.check((ratio / 343.0 - 1.0).abs() < 0.02, format!("ratio to optimum {ratio:.2} (d_opt = {}, q_opt = {:.1})", op.d_opt, op.q_opt));
    c
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new(5, "All-MUB limits");
    for q in [2.5, 7.0, 19.99] {
        let k = k_max_all_mub(q, 1_000_000);
        let expected = q.floor() as usize;
        c.check(k == expected, format!("k_max_all_mub({q}, 1e6) = {k} (expected floor(q) = {expected})"));
    }
    for d in [3usize, 5, 7, 11] {
        let q = required_contrast_all_mub(d, d).unwrap();
        let edge = (d * d - d) as f64;
        c.check((q - edge).abs() <= 1.0, format!("d = {d}: required q for k = d is {q} vs d^2 - d = {edge}"));
    }
    c
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new(6, "Projector identity and exact fidelity");
    let start = Instant::now();
    for d in [2usize, 3, 5, 7, 11] {
        let set = all_mubs(d).unwrap();
        let dev = mub_projector_sum_check(&set).unwrap();
        c.check(dev < 1e-10, format!("d = {d}: projector-sum deviation {dev:.2e}"));
        let mut worst = 0.0f64;
        for q in [2.0, 10.0, 70.0] {
            let record = simulate_record(&flat_spectrum(d).unwrap(), &set, Some(NoiseSpec::TargetContrast(q)), None, 0).unwrap();
            let f = fidelity_exact_from_data(&record).unwrap();
            worst = worst.max((f - fidelity_all_mub_from_contrast(q, d)).abs());
        }
        c.check(worst < 1e-9, format!("d = {d}: exact fidelity vs all-MUB formula, Q in {{2, 10, 70}}: {worst:.2e}"));
    }
    c.runtime(start, Duration::from_secs(30));
    c
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::new(7, "Monte Carlo coincidence oracle");
    let start = Instant::now();
    let trials = 10_000_000;
    let mut index = 0;
    for rate in [1e-3, 3e-3, 1e-2] {
        for eta in [0.3, 0.5, 0.8] {
            let params = NoiseParams::new(rate, rate, eta).unwrap();
            let row = validate_mc_cell(&params, trials, derive_seed(7, index), 1.0).unwrap();
            index += 1;
            let within = |z: f64| z.abs() <= 5.0;
            c.check(
                within(row.z_same),
                format!("mu = n = {rate:e}, eta = {eta}: p_same {:.6e} vs {:.6e}, z = {:+.2}", row.p_same_mc, row.p_same_analytic, row.z_same),
            );
            c.check(
                within(row.z_cross),
                format!("mu = n = {rate:e}, eta = {eta}: p_cross {:.6e} vs {:.6e}, z = {:+.2}", row.p_cross_mc, row.p_cross_analytic, row.z_cross),
            );
            c.check(
                within(row.z_q),
                format!("mu = n = {rate:e}, eta = {eta}: ratio {:.4} vs {:.4}, z = {:+.2}", row.q_mc, row.q_analytic, row.z_q),
            );
        }
    }
    c.runtime(start, Duration::from_secs(120));
    c
}

fn certified_k(d: usize, sigma: f64, q: f64) -> (usize, f64, usize) {
    let point = SimulationPoint {
        d,
        sigma,
        noise: Some(NoiseSpec::TargetContrast(q)),
        events: None,
        seed: 0,
    };
    let (_, report) = simulate_point(&point, None).unwrap();
    (report.certified_k, report.average_q, report.k_all_mub.unwrap())
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::new(8, "Finite-bandwidth behaviour");
    let primes = [3usize, 5, 7, 11, 13, 17, 19, 23, 29, 31];
    let ks: Vec<usize> = primes.iter().map(|&d| certified_k(d, 2.0, 50.0).0).collect();
    let table: Vec<String> = primes.iter().zip(&ks).map(|(d, k)| format!("{d}:{k}")).collect();
    let peak = ks.iter().copied().max().unwrap();
    let peak_at = ks.iter().position(|&k| k == peak).unwrap();
    let rising = ks[..=peak_at].windows(2).all(|w| w[1] >= w[0]);
    c.check(rising, format!("sigma = 2, Q = 50: k(d) non-decreasing up to the peak k = {peak} [{}]", table.join(" ")));
    let plateau = ks[peak_at..].iter().all(|&k| k + 1 >= peak);
    c.check(plateau, format!("saturated beyond d = {}: every later k within 1 of the peak", primes[peak_at]));
    let k23 = ks[primes.iter().position(|&d| d == 23).unwrap()];
    let k31 = ks[primes.iter().position(|&d| d == 31).unwrap()];
    c.check(k31 <= k23 + 1, format!("k(31) - k(23) = {k31} - {k23} <= 1"));
    let mut worst = 0i64;
    for d in [3usize, 5, 7] {
        for q in [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0] {
            let (_, avg_q, k) = certified_k(d, 1e5, q);
            let predicted = k_max_all_mub(avg_q, d);
            worst = worst.max((k as i64 - predicted as i64).abs());
        }
    }
    c.check(worst <= 1, format!("sigma = 1e5: |k_data - k(average Q)| <= {worst} over Q in [5, 40], d in {{3, 5, 7}}"));
    c
}

fn criterion_9() -> Criterion {
    let mut c = Criterion::new(9, "Entropic steering");
    let f8 = steering_functional(8.0, 2).unwrap();
    let f9 = steering_functional(9.0, 2).unwrap();
    c.check(f8 > 0.0 && f9 < 0.0, format!("d = 2: functional(8) = {f8:+.4}, functional(9) = {f9:+.4}"));

    let ds = [2usize, 3, 5, 7, 11, 13];
    let ts: Vec<f64> = ds.iter().map(|&d| steering_threshold(d).unwrap()).collect();
    let xs: Vec<f64> = ds.iter().map(|&d| d as f64).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&xs), mean(&ts));
    let sxy: f64 = xs.iter().zip(&ts).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ts.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    let listing: Vec<String> = ds.iter().zip(&ts).map(|(d, t)| format!("{d}:{t:.4}")).collect();
    c.check(r2 > 0.99, format!("thresholds [{}], linear fit R^2 = {r2:.5}", listing.join(" ")));

    let mut compared = 0;
    let mut mismatched = 0;
    let mut index = 0;
    for d in [2usize, 3, 5, 7] {
        let set = MubSet::two_basis(d).unwrap();
        for q in [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0, 30.0, 50.0] {
            let predicted_margin = -2.0 * steering_functional(q, d).unwrap();
            if predicted_margin.abs() <= 0.05 {
                continue;
            }
            let record = simulate_record(&flat_spectrum(d).unwrap(), &set, Some(NoiseSpec::TargetContrast(q)), Some(1_000_000), derive_seed(9, index)).unwrap();
            index += 1;
            let verdict = steering_test_from_data(&record.matrices[0], &record.matrices[1], d).unwrap();
            compared += 1;
            if verdict.violated != (predicted_margin > 0.0) {
                mismatched += 1;
            }
        }
    }
    c.check(mismatched == 0, format!("finite-count verdicts vs contrast functional: {mismatched} of {compared} disagree"));
    c
}

/// Independent qubit oracle: best value over phase settings
/// `(|0> + e^{i(phi + pi k)}|1>)/sqrt 2` using `P(k, l) = (1 + cos(phi + theta + pi(k + l)))/4`,
/// coarse grid followed by coordinate refinement.
fn qubit_oracle() -> f64 {
    let value = |x: [f64; 3]| {
        let phi = [0.0, x[0]];
        let theta = [x[1], x[2]];
        let p = |a: usize, b: usize, k: usize, l: usize| (1.0 + (phi[a] + theta[b] + PI * (k + l) as f64).cos()) / 4.0;
        let same = |a: usize, b: usize| p(a, b, 0, 0) + p(a, b, 1, 1);
        let differ = |a: usize, b: usize| p(a, b, 0, 1) + p(a, b, 1, 0);
        (same(0, 0) + differ(1, 0) + same(1, 1) + same(0, 1)) - (differ(0, 0) + same(1, 0) + differ(1, 1) + differ(0, 1))
    };
    let steps = 36;
    let g = |i: usize| 2.0 * PI * i as f64 / steps as f64;
    let mut best = ([0.0; 3], f64::MIN);
    for a in 0..steps {
        for b in 0..steps {
            for e in 0..steps {
                let x = [g(a), g(b), g(e)];
                let v = value(x);
                if v > best.1 {
                    best = (x, v);
                }
            }
        }
    }
    let mut h = 2.0 * PI / steps as f64;
    while h > 1e-10 {
        let mut improved = false;
        for i in 0..3 {
            for s in [-h, h] {
                let mut x = best.0;
                x[i] += s;
                let v = value(x);
                if v > best.1 {
                    best = (x, v);
                    improved = true;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    best.1
}

fn criterion_10() -> Criterion {
    let mut c = Criterion::new(10, "CGLMP");
    let s2 = cglmp_quantum_value(2).unwrap();
    let oracle = qubit_oracle();
    c.check((s2 - oracle).abs() < 1e-6, format!("S_2 = {s2:.9}, qubit oracle {oracle:.9}"));

    let table = CglmpTable::precompute(128).unwrap();
    let mut table = table;
    let mut large = Vec::new();
    for d in [50usize, 64, 100, 128] {
        large.push((d, table.quantum_value(d).unwrap()));
    }
    let ok = large.iter().all(|&(_, v)| v > 2.9 && v < 3.0);
    let listing: Vec<String> = large.iter().map(|(d, v)| format!("{d}:{v:.5}")).collect();
    c.check(ok, format!("S_d in (2.9, 3.0) for d >= 50 [{}]", listing.join(" ")));

    let noisy = cglmp_noisy(21.0, 10).unwrap();
    c.check((noisy - 2.0).abs() < 0.05, format!("cglmp_noisy(21, 10) = {noisy:.4}"));

    let mut failures = Vec::new();
    for q in 10..=200u32 {
        let bound = table.dimension_bound(q as f64).unwrap();
        let expected = ((q - 1) / 2) as i64;
        let got = match bound {
            CglmpBound::MaxDimension { d } => d as i64,
            CglmpBound::NoViolation => 1,
            CglmpBound::UnboundedWithinScan { scanned_to } => scanned_to as i64,
        };
        if (got - expected).abs() > 2 {
            failures.push((q, got, expected));
        }
    }
    let detail = match (failures.first(), failures.last()) {
        (Some(first), Some(last)) => format!(
            "{} of 191 outside +-2, first q = {} (bound {} vs {}), last q = {} (bound {} vs {})",
            failures.len(),
            first.0,
            first.1,
            first.2,
            last.0,
            last.1,
            last.2
        ),
        _ => "all 191 within +-2".to_string(),
    };
    c.check(failures.is_empty(), format!("dimension bound vs floor((q - 1)/2), q in [10, 200]: {detail}"));
    c
}

fn criterion_11() -> Criterion {
    let mut c = Criterion::new(11, "Round-trip determinism");
    for (d, sigma) in [(5usize, 1e5), (7, 2.0)] {
        let point = SimulationPoint {
            d,
            sigma,
            noise: Some(NoiseSpec::TargetContrast(30.0)),
            events: Some(200_000),
            seed: 11,
        };
        let (record, report) = simulate_point(&point, Some("hash")).unwrap();
        let (again, _) = simulate_point(&point, Some("hash")).unwrap();
        let json = record.to_json().unwrap();
        c.check(json == again.to_json().unwrap(), format!("d = {d}, sigma = {sigma}: record bytes identical across runs"));
        let reloaded = ExperimentRecord::from_json(&json).unwrap();
        let recertified = certify_record(&reloaded).unwrap();
        c.check(
            serde_json::to_string(&recertified).unwrap() == serde_json::to_string(&report).unwrap(),
            format!("d = {d}, sigma = {sigma}: simulate -> certify report identical"),
        );
    }
    let spectrum = gaussian_spectrum(5, 1.5).unwrap();
    let set = all_mubs(5).unwrap();
    let a = simulate_record(&spectrum, &set, None, Some(1000), 1).unwrap();
    let b = simulate_record(&spectrum, &set, None, Some(1000), 2).unwrap();
    c.check(a != b, "different seeds give different samples");
    c
}

fn main() {
    let criteria: [fn() -> Criterion; 11] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
    ];
    let mut failed = Vec::new();
    for run in criteria {
        let c = run();
        let status = if c.passed() { "PASS" } else { "FAIL" };
        println!("{status} criterion {:>2}: {}", c.id, c.title);
        for (ok, detail) in &c.checks {
            println!("       [{}] {detail}", if *ok { "ok" } else { "FAIL" });
        }
        if !c.passed() {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 11 criteria passed");
    } else {
        println!("acceptance: {} of 11 criteria failed: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
