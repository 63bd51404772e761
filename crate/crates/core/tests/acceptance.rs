//! Acceptance suite: one report line per criterion, then a single verdict.
//!
//! Runs without the test harness (`cargo test -p fgm-core --test acceptance`)
//! so the report is always printed.

use fgm_core::aggregate_me::{aggregate, exp_iid_fast, AggregateOptions};
use fgm_core::allocation::Allocator;
use fgm_core::bernoulli::BernoulliScheme;
use fgm_core::copula::{scheme_from_theta, theta_from_scheme, FgmCopula};
use fgm_core::discrete_agg::{aggregate_discretized, aggregate_pmf, tvar_sandwich, DiscretizationSpec, Method};
use fgm_core::marginals::{Discrete, Marginal, MixedErlang, OrderStat, Truncation};
use fgm_core::mc_oracle::{estimate, kendall_tau, sample_portfolio, spearman_rho, Statistic};
use fgm_core::moments::{aggregate_moment, MomentOptions, Representation};
use fgm_core::portfolio::{Dependence, Portfolio};
use fgm_core::presets::{lognormal_trio, six_risk_marginals};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Gamma};
use std::time::{Duration, Instant};

// Pinned tolerances.
const TOL_TABLE1: f64 = 0.005;
const TOL_EFFECT: f64 = 0.0005;
const TOL_TABLE2: f64 = 0.01;
const TOL_TABLE3: f64 = 0.005;
const TOL_TABLE4: f64 = 1e-5;
const TOL_TABLE4_SUM: f64 = 1e-9;
const TOL_TABLE5: f64 = 0.005;
const TOL_TABLE5_SUM: f64 = 1e-8;
const TOL_KERNEL: f64 = 1e-10;
const TOL_WALSH: f64 = 1e-10;
const TOL_ORDER_MOMENTS: f64 = 1e-12;
const TOL_ALGORITHM1: f64 = 1e-9;
const TOL_DUAL_PATH: f64 = 1e-9;
const MC_SIGMAS: f64 = 4.0;
const MC_N: usize = 1_000_000;
const BUDGET_TABLE1: Duration = Duration::from_secs(10);
const BUDGET_TABLE1_D1000: Duration = Duration::from_secs(120);
const BUDGET_TABLE2_FINE: Duration = Duration::from_secs(60);

const SCHEMES: [&str; 3] = ["END", "Ind", "EPD"];
const KAPPAS: [f64; 3] = [0.9, 0.99, 0.999];

fn scheme(name: &str, d: usize) -> BernoulliScheme {
    match name {
        "END" => BernoulliScheme::end(d),
        "Ind" => BernoulliScheme::independent(d),
        "EPD" => BernoulliScheme::comonotone(d),
        _ => unreachable!(),
    }
    .unwrap()
}

struct Report {
    lines: Vec<(u32, bool, String)>,
}

impl Report {
    fn record(&mut self, n: u32, name: &str, pass: bool, detail: String) {
        let line = format!("criterion {n} [{name}]: {} ({detail})", if pass { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((n, pass, line));
    }
}

/// Rows `(d, VaR or TVaR, values)` with values ordered by level then scheme.
const TABLE1: [(usize, bool, [f64; 9]); 10] = [
    (1, false, [23.03, 23.03, 23.03, 46.05, 46.05, 46.05, 69.08, 69.08, 69.08]),
    (1, true, [33.03, 33.03, 33.03, 56.05, 56.05, 56.05, 79.08, 79.08, 79.08]),
    (2, false, [18.09, 19.45, 20.90, 29.91, 33.19, 35.55, 41.46, 46.17, 48.86]),
    (2, true, [23.25, 25.47, 27.37, 34.93, 38.85, 41.36, 46.47, 51.66, 54.43]),
    (10, false, [13.63, 14.21, 17.85, 17.58, 18.78, 23.19, 20.95, 22.66, 27.40]),
    (10, true, [15.38, 16.24, 20.26, 19.06, 20.48, 25.05, 22.31, 24.20, 29.04]),
    (100, false, [11.13, 11.30, 15.93, 12.14, 12.47, 17.39, 12.92, 13.38, 18.44]),
    (100, true, [11.58, 11.83, 16.60, 12.48, 12.87, 17.86, 13.21, 13.72, 18.82]),
    (1000, false, [10.35, 10.41, 15.30, 10.65, 10.75, 15.74, 10.87, 11.01, 16.04]),
    (1000, true, [10.49, 10.56, 15.50, 10.75, 10.86, 15.87, 10.95, 11.10, 16.15]),
];

/// `(VaR(W_d), TVaR(W_d))` at every level and scheme, through the general
/// transform engine.
fn table1_block(d: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); 9];
    for (si, name) in SCHEMES.iter().enumerate() {
        let p = Portfolio::with_scheme(vec![Marginal::exponential(0.1).unwrap(); d], scheme(name, d)).unwrap();
        let agg = aggregate(&p, AggregateOptions::default()).unwrap();
        for (ki, &k) in KAPPAS.iter().enumerate() {
            out[3 * ki + si] = (agg.var_risk(k).unwrap() / d as f64, agg.tvar(k).unwrap() / d as f64);
        }
    }
    out
}

fn criterion_1_2(report: &mut Report) {
    let mut worst = 0.0_f64;
    let mut misses = Vec::new();
    let start = Instant::now();
    let mut blocks = std::collections::BTreeMap::new();
    for d in [1, 2, 10, 100] {
        blocks.insert(d, table1_block(d));
    }
    let small_time = start.elapsed();
    let start = Instant::now();
    blocks.insert(1000, table1_block(1000));
    let big_time = start.elapsed();
    for (d, is_tvar, row) in TABLE1 {
        let block = &blocks[&d];
        for (c, &expected) in row.iter().enumerate() {
            let got = if is_tvar { block[c].1 } else { block[c].0 };
            let err = (got - expected).abs();
            worst = worst.max(err);
            if err > TOL_TABLE1 {
                misses.push(format!("d={d} col {c} got {got:.4} want {expected}"));
            }
        }
    }
    let pass = misses.is_empty() && small_time < BUDGET_TABLE1 && big_time < BUDGET_TABLE1_D1000;
    report.record(
        1,
        "exchangeable exponential VaR and TVaR",
        pass,
        format!(
            "90 entries, max |err| {worst:.5} <= {TOL_TABLE1}; d<=100 in {small_time:.2?}, d=1000 in {big_time:.2?}{}",
            if misses.is_empty() { String::new() } else { format!("; misses {misses:?}") }
        ),
    );

    // relative TVaR effects at level 0.9
    let effects = [(2usize, -0.0870, 0.0744), (1000, -0.0072, 0.4671)];
    let mut detail = Vec::new();
    let mut pass = true;
    for (d, end_ref, epd_ref) in effects {
        let b = &blocks[&d];
        let (end, ind, epd) = (b[0].1, b[1].1, b[2].1);
        let (e1, e2) = ((end - ind) / ind, (epd - ind) / ind);
        pass &= (e1 - end_ref).abs() <= TOL_EFFECT && (e2 - epd_ref).abs() <= TOL_EFFECT;
        detail.push(format!("d={d}: END {e1:.4} (want {end_ref}), EPD {e2:.4} (want {epd_ref})"));
    }
    report.record(2, "relative effects", pass, detail.join("; "));
}

fn criterion_3(report: &mut Report) {
    // rows: method, span, TVaR at 0.9, 0.99, 0.999
    let expected: [(Method, f64, [f64; 3]); 8] = [
        (Method::Upper, 2.0, [57.60, 92.65, 142.93]),
        (Method::Upper, 1.0, [59.08, 94.13, 144.42]),
        (Method::Upper, 0.5, [59.83, 94.88, 145.16]),
        (Method::Upper, 0.1, [60.43, 95.48, 145.76]),
        (Method::Lower, 0.1, [60.73, 95.78, 146.06]),
        (Method::Lower, 0.5, [61.33, 96.38, 146.66]),
        (Method::Lower, 1.0, [62.08, 97.13, 147.42]),
        (Method::Lower, 2.0, [63.60, 98.65, 148.93]),
    ];
    let p = Portfolio::with_scheme(lognormal_trio().unwrap(), BernoulliScheme::markov(3, 0.5).unwrap()).unwrap();
    let mut worst = 0.0_f64;
    let mut misses = Vec::new();
    let mut fine_time = Duration::ZERO;
    for (method, span, row) in expected {
        let start = Instant::now();
        let pmf = aggregate_discretized(&p, DiscretizationSpec { method, span }, Truncation::default()).unwrap();
        let tvars: Vec<f64> = KAPPAS.iter().map(|&k| pmf.tvar(k).unwrap()).collect();
        if span == 0.1 {
            fine_time = fine_time.max(start.elapsed());
        }
        for (got, want) in tvars.iter().zip(row) {
            let err = (got - want).abs();
            worst = worst.max(err);
            if err > TOL_TABLE2 {
                misses.push(format!("{method:?} h={span}: got {got:.4} want {want}"));
            }
        }
    }
    let pass = misses.is_empty() && fine_time < BUDGET_TABLE2_FINE;
    report.record(
        3,
        "log-normal discretization TVaR",
        pass,
        format!("24 entries, max |err| {worst:.4} <= {TOL_TABLE2}; h=0.1 in {fine_time:.2?}{}",
            if misses.is_empty() { String::new() } else { format!("; misses {misses:?}") }),
    );
}

fn criterion_4(report: &mut Report) {
    let means = [2.0, 4.0, 12.0, 14.0, 22.0, 26.0];
    let vars = [4.0, 16.0, 44.0, 124.0, 84.0, 292.0];
    let var99 = [9.21, 18.42, 31.44, 50.86, 47.45, 79.72];
    let tvar99 = [11.21, 22.42, 35.40, 59.90, 52.30, 92.03];
    let mut pass = true;
    let mut worst_moment = 0.0_f64;
    let mut worst_risk = 0.0_f64;
    for (k, m) in six_risk_marginals().unwrap().iter().enumerate() {
        let me = m.as_mixed_erlang().unwrap();
        let e = (me.mean() - means[k]).abs().max((me.variance() - vars[k]).abs());
        // "exactly": integers reproduced up to float rounding
        worst_moment = worst_moment.max(e);
        pass &= e < 1e-8;
        let r = (me.var(0.99).unwrap() - var99[k]).abs().max((me.tvar(0.99).unwrap() - tvar99[k]).abs());
        worst_risk = worst_risk.max(r);
        pass &= r <= TOL_TABLE3;
    }
    report.record(
        4,
        "six-risk marginals",
        pass,
        format!("E/Var max |err| {worst_moment:.1e}; VaR/TVaR max |err| {worst_risk:.4} <= {TOL_TABLE3}"),
    );
}

const TABLE4: [(f64, &str, [f64; 6]); 9] = [
    (40.0, "END", [1.928175, 2.987516, 7.996234, 5.766606, 13.401958, 7.919511]),
    (40.0, "Ind", [1.575428, 2.551020, 7.668274, 5.699930, 13.761121, 8.744228]),
    (40.0, "EPD", [0.941819, 1.757806, 7.136790, 5.658961, 14.296102, 10.208524]),
    (80.0, "END", [2.030938, 4.123420, 12.407195, 13.910778, 22.776325, 24.751343]),
    (80.0, "Ind", [2.042401, 4.106984, 12.392149, 13.867892, 22.741896, 24.848677]),
    (80.0, "EPD", [2.205948, 4.149484, 12.499946, 13.398856, 22.671998, 25.073768]),
    (160.0, "END", [1.721004, 4.234335, 13.912178, 30.207898, 27.145704, 82.778881]),
    (160.0, "Ind", [2.330977, 5.554256, 15.892004, 31.485783, 29.453031, 75.283950]),
    (160.0, "EPD", [3.347377, 7.541924, 18.660443, 32.720014, 32.458935, 65.271307]),
];

fn allocators() -> Vec<(&'static str, Allocator)> {
    SCHEMES
        .iter()
        .map(|&name| {
            let p = Portfolio::with_scheme(six_risk_marginals().unwrap(), scheme(name, 6)).unwrap();
            (name, Allocator::new(&p, AggregateOptions::default()).unwrap())
        })
        .collect()
}

fn criterion_5(report: &mut Report, allocs: &[(&str, Allocator)]) {
    let mut worst = 0.0_f64;
    let mut worst_sum = 0.0_f64;
    let mut pass = true;
    for (s, name, row) in TABLE4 {
        let a = &allocs.iter().find(|(n, _)| *n == name).unwrap().1;
        let r = a.cmrs(s).unwrap();
        for (got, want) in r.contributions.iter().zip(row) {
            worst = worst.max((got - want).abs());
        }
        worst_sum = worst_sum.max((r.total() - s).abs() / s);
    }
    pass &= worst <= TOL_TABLE4 && worst_sum <= TOL_TABLE4_SUM;
    report.record(
        5,
        "conditional mean risk sharing",
        pass,
        format!("54 entries, max |err| {worst:.1e} <= {TOL_TABLE4}; max |sum - s|/s {worst_sum:.1e} <= {TOL_TABLE4_SUM}"),
    );
}

/// Independent oracle for the comonotone (EPD) scheme: `I` is all zeros or
/// all ones, so each half is a sum of independent mixed Erlang order
/// statistics, convolved directly in the time domain.
fn epd_tail_contribution_oracle(k: usize, var: f64) -> f64 {
    let marginals: Vec<MixedErlang> =
        six_risk_marginals().unwrap().iter().map(|m| m.as_mixed_erlang().unwrap()).collect();
    let t = Truncation::default();
    let mut total = 0.0;
    for upper in [false, true] {
        let pmfs: Vec<Vec<f64>> = marginals
            .iter()
            .map(|m| {
                let (lo, hi) = m.order_weights(t).unwrap();
                if upper { hi.counting_pmf() } else { lo.counting_pmf() }
            })
            .collect();
        let mut rest = vec![1.0];
        for (j, p) in pmfs.iter().enumerate() {
            if j != k {
                rest = convolve(&rest, p);
            }
        }
        let biased: Vec<f64> = pmfs[k].iter().enumerate().map(|(l, q)| l as f64 * q).collect();
        let r = convolve(&biased, &rest);
        // rate 2β = 1
        let tail: f64 = r
            .iter()
            .enumerate()
            .skip(1)
            .map(|(l, w)| w * Gamma::new(l as f64 + 1.0, 1.0).unwrap().sf(var))
            .sum();
        total += 0.5 * tail;
    }
    total
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn criterion_6(report: &mut Report, allocs: &[(&str, Allocator)]) -> Vec<String> {
    let table5: [(&str, f64, f64, f64, [f64; 6]); 3] = [
        ("END", 452.45, 140.58, 153.41, [1.74, 4.26, 13.91, 29.10, 27.06, 77.35]),
        ("Ind", 564.0, 146.71, 160.14, [2.33, 5.55, 15.87, 31.44, 29.41, 75.54]),
        ("EPD", 1121.77, 163.57, 177.24, [3.39, 7.79, 19.08, 36.48, 33.23, 77.25]),
    ];
    let mut misses = Vec::new();
    let mut unexplained = Vec::new();
    let mut worst_sum = 0.0_f64;
    for (name, var_s, var99, tvar99, contrib) in table5 {
        let a = &allocs.iter().find(|(n, _)| *n == name).unwrap().1;
        let agg = a.aggregate();
        let checks = [("Var(S)", agg.variance(), var_s), ("VaR", agg.var(0.99).unwrap(), var99), ("TVaR", agg.tvar(0.99).unwrap(), tvar99)];
        for (label, got, want) in checks {
            if (got - want).abs() > TOL_TABLE5 {
                misses.push(format!("{name} {label} got {got:.4} want {want}"));
                unexplained.push(format!("{name} {label}"));
            }
        }
        let t = a.tvar_allocation(0.99).unwrap();
        worst_sum = worst_sum.max((t.total() - t.reference).abs() / t.reference);
        for (k, (got, want)) in t.contributions.iter().zip(contrib).enumerate() {
            if (got - want).abs() > TOL_TABLE5 {
                misses.push(format!("{name} risk {} got {got:.5} want {want}", k + 1));
                // a printed value may be off only if an independent oracle
                // confirms our number
                let confirmed = name == "EPD" && {
                    let var = match t.context {
                        fgm_core::allocation::AllocationContext::Tvar { var, .. } => var,
                        _ => unreachable!(),
                    };
                    let oracle = epd_tail_contribution_oracle(k, var) / 0.01;
                    misses.push(format!("independent oracle {oracle:.5}"));
                    (oracle - got).abs() < 1e-6
                };
                if !confirmed {
                    unexplained.push(format!("{name} risk {}", k + 1));
                }
            }
        }
    }
    if worst_sum > TOL_TABLE5_SUM {
        unexplained.push("allocation sum".into());
    }
    report.record(
        6,
        "TVaR allocation",
        misses.is_empty() && worst_sum <= TOL_TABLE5_SUM,
        format!(
            "27 entries at +-{TOL_TABLE5}, max sum rel err {worst_sum:.1e} <= {TOL_TABLE5_SUM}{}",
            if misses.is_empty() { String::new() } else { format!("; outside tolerance: {}", misses.join(", ")) }
        ),
    );
    unexplained
}

fn random_symmetric_dense(d: usize, rng: &mut ChaCha8Rng) -> BernoulliScheme {
    let n = 1usize << d;
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut masses: Vec<f64> = (0..n).map(|m| raw[m] + raw[(n - 1) ^ m]).collect();
    let total: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= total);
    BernoulliScheme::dense(d, masses).unwrap()
}

fn random_symmetric_nd(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..=d).map(|_| rng.random::<f64>()).collect();
    let mut p: Vec<f64> = (0..=d).map(|n| raw[n] + raw[d - n]).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

fn all_vectors(d: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1usize << d).map(move |m| (0..d).map(|k| m >> k & 1 == 1).collect())
}

fn criterion_7(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut parts = Vec::new();
    let mut pass = true;

    // (a) kernel against brute-force enumeration
    let mut worst = 0.0_f64;
    for d in 1..=10 {
        let mut schemes = vec![
            BernoulliScheme::independent(d).unwrap(),
            BernoulliScheme::comonotone(d).unwrap(),
            BernoulliScheme::end(d).unwrap(),
            BernoulliScheme::markov(d, rng.random_range(-1.0..1.0)).unwrap(),
            BernoulliScheme::exchangeable(d, random_symmetric_nd(d, &mut rng)).unwrap(),
        ];
        if d <= 8 {
            schemes.push(random_symmetric_dense(d, &mut rng));
        }
        for s in &schemes {
            let g: Vec<(Complex64, Complex64)> = (0..d)
                .map(|_| {
                    let mut c = || Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
                    (c(), c())
                })
                .collect();
            let fast = s.expected_product(&g).unwrap();
            let brute: Complex64 = all_vectors(d)
                .map(|i| {
                    let w = s.pmf(&i).unwrap();
                    i.iter().zip(&g).fold(Complex64::new(w, 0.0), |acc, (&b, &(x, y))| acc * if b { y } else { x })
                })
                .sum();
            worst = worst.max((fast - brute).norm() / brute.norm().max(1.0));
        }
    }
    pass &= worst <= TOL_KERNEL;
    parts.push(format!("kernel {worst:.1e}"));

    // (b) Walsh round trip
    let mut worst = 0.0_f64;
    for d in 2..=8 {
        let s = random_symmetric_dense(d, &mut rng);
        let back = scheme_from_theta(&theta_from_scheme(&s, None).unwrap()).unwrap();
        for i in all_vectors(d) {
            worst = worst.max((s.pmf(&i).unwrap() - back.pmf(&i).unwrap()).abs());
        }
    }
    pass &= worst <= TOL_WALSH;
    parts.push(format!("walsh {worst:.1e}"));

    // (c) order-statistic moment identity
    let catalog = [
        Marginal::exponential(0.3).unwrap(),
        Marginal::MixedErlang(MixedErlang::new(0.5, vec![0.1, 0.4, 0.0, 0.5]).unwrap()),
        Marginal::pareto_iv(0.5, 2.0, 0.4, 5.0).unwrap(),
        Marginal::weibull(0.8, 0.7).unwrap(),
    ];
    let mut worst = 0.0_f64;
    for m in &catalog {
        for k in 1..=4 {
            let lhs = m.os_moment(OrderStat::Min, k).unwrap() + m.os_moment(OrderStat::Max, k).unwrap();
            let rhs = 2.0 * m.moment(k).unwrap();
            worst = worst.max((lhs - rhs).abs() / rhs);
        }
    }
    pass &= worst <= TOL_ORDER_MOMENTS;
    parts.push(format!("order moments {worst:.1e}"));

    // (d) lattice aggregation against rectangle probabilities
    let mut worst = 0.0_f64;
    for d in 2..=4 {
        let omega = 6usize;
        let s = random_symmetric_dense(d, &mut rng);
        let cop = theta_from_scheme(&s, None).unwrap();
        let ms: Vec<Discrete> = (0..d)
            .map(|_| {
                let raw: Vec<f64> = (0..omega).map(|_| rng.random::<f64>()).collect();
                let t: f64 = raw.iter().sum();
                Discrete::new(1.0, raw.iter().map(|x| x / t).collect()).unwrap()
            })
            .collect();
        let fast = aggregate_pmf(&ms, &s).unwrap();
        let mut brute = vec![0.0; d * (omega - 1) + 1];
        let cdf_at = |k: usize, x: isize| if x < 0 { 0.0 } else { ms[k].cdf(x as f64) };
        for idx in 0..omega.pow(d as u32) {
            let x: Vec<usize> = (0..d).map(|k| idx / omega.pow(k as u32) % omega).collect();
            // inclusion-exclusion over the 2^d corners of the cell
            let mut prob = 0.0;
            for corner in 0..1usize << d {
                let u: Vec<f64> =
                    (0..d).map(|k| cdf_at(k, x[k] as isize - (corner >> k & 1) as isize)).collect();
                let sign = if corner.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                prob += sign * cop.cdf(&u).unwrap();
            }
            brute[x.iter().sum::<usize>()] += prob;
        }
        for (j, b) in brute.iter().enumerate() {
            worst = worst.max((fast.masses().get(j).copied().unwrap_or(0.0) - b).abs());
        }
    }
    pass &= worst <= TOL_ALGORITHM1;
    parts.push(format!("lattice {worst:.1e}"));

    // (e) dual-path exponential aggregation
    let mut worst = 0.0_f64;
    for d in [2usize, 10, 100] {
        for name in SCHEMES {
            let s = scheme(name, d);
            let fast = exp_iid_fast(d, 0.1, &s, Truncation::default()).unwrap();
            let p = Portfolio::with_scheme(vec![Marginal::exponential(0.1).unwrap(); d], s).unwrap();
            let slow = aggregate(&p, AggregateOptions::default()).unwrap();
            let top = fast.var_risk(0.99999).unwrap() * 1.5;
            for i in 0..=400 {
                let x = top * i as f64 / 400.0;
                worst = worst.max((fast.cdf(x) - slow.cdf(x)).abs());
            }
        }
    }
    pass &= worst <= TOL_DUAL_PATH;
    parts.push(format!("dual path {worst:.1e}"));

    // (f) discretization bounds bracket the exact mixed Erlang TVaR
    let mut inside = true;
    for name in SCHEMES {
        let p = Portfolio::with_scheme(six_risk_marginals().unwrap(), scheme(name, 6)).unwrap();
        let exact = aggregate(&p, AggregateOptions::default()).unwrap();
        for h in [1.0, 0.5] {
            for kappa in [0.9, 0.99] {
                let (lo, hi) = tvar_sandwich(&p, h, kappa, Truncation::default()).unwrap();
                let t = exact.tvar(kappa).unwrap();
                inside &= lo <= t && t <= hi;
            }
        }
    }
    pass &= inside;
    parts.push(format!("sandwich {}", if inside { "ok" } else { "violated" }));

    // (g) convex order of the three exchangeable structures
    let mut ordered = true;
    for d in [2usize, 10, 100] {
        let tv = |name: &str, k: f64| exp_iid_fast(d, 0.1, &scheme(name, d), Truncation::default()).unwrap().tvar(k).unwrap();
        for k in [0.5, 0.9, 0.99, 0.999] {
            let (a, b, c) = (tv("END", k), tv("Ind", k), tv("EPD", k));
            ordered &= a < b - 1e-9 && b < c - 1e-9;
        }
    }
    pass &= ordered;
    parts.push(format!("convex order {}", if ordered { "ok" } else { "violated" }));

    report.record(7, "property suite", pass, parts.join(", "));
}

/// Analytic moments of `S` against MC bands.
fn mc_check(p: &Portfolio, seed: u64, third: bool) -> (bool, String) {
    let batch = sample_portfolio(p, MC_N, seed).unwrap();
    let opts = MomentOptions::default();
    let m1 = aggregate_moment(p, 1, Representation::StochasticMin, opts).unwrap();
    let m2 = aggregate_moment(p, 2, Representation::StochasticMin, opts).unwrap();
    let mut checks = vec![
        ("E[S]", m1, estimate(&batch, Statistic::Mean).unwrap()),
        ("Var(S)", m2 - m1 * m1, estimate(&batch, Statistic::Variance).unwrap()),
    ];
    if third {
        let m3 = aggregate_moment(p, 3, Representation::StochasticMin, opts).unwrap();
        checks.push(("E[S^3]", m3, estimate(&batch, Statistic::RawMoment(3)).unwrap()));
    }
    let mut ok = true;
    let text: Vec<String> = checks
        .iter()
        .map(|(label, exact, est)| {
            let z = (est.value - exact) / est.std_error;
            ok &= z.abs() <= MC_SIGMAS;
            format!("{label} z={z:+.2}")
        })
        .collect();
    (ok, text.join(" "))
}

fn criterion_8(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut parts = Vec::new();
    let mut pass = true;

    let me: Vec<Marginal> = (0..4)
        .map(|_| {
            let raw: Vec<f64> = (0..rng.random_range(1..6)).map(|_| rng.random::<f64>()).collect();
            let t: f64 = raw.iter().sum();
            Marginal::MixedErlang(MixedErlang::new(rng.random_range(0.2..1.5), raw.iter().map(|x| x / t).collect()).unwrap())
        })
        .collect();
    let pareto: Vec<Marginal> = (0..4)
        .map(|_| {
            Marginal::pareto_iv(rng.random_range(0.0..1.0), rng.random_range(0.5..2.0), rng.random_range(0.3..0.5), rng.random_range(3.5..5.0))
                .unwrap()
        })
        .collect();
    let weibull: Vec<Marginal> =
        (0..4).map(|_| Marginal::weibull(rng.random_range(0.3..2.0), rng.random_range(0.6..3.0)).unwrap()).collect();
    for (label, ms, alpha, seed) in [("mixed Erlang", me, -0.6, 81), ("Pareto IV", pareto, 0.0, 82), ("Weibull", weibull, 0.7, 83)] {
        let p = Portfolio::with_scheme(ms, BernoulliScheme::markov(4, alpha).unwrap()).unwrap();
        let (ok, text) = mc_check(&p, seed, true);
        pass &= ok;
        parts.push(format!("{label} a={alpha}: {text}"));
    }

    // odd-order dependence: Weibull trio with θ_123 ≠ 0
    let cop = FgmCopula::new(3, [(vec![0, 1], 0.1), (vec![0, 2], -0.1), (vec![1, 2], 0.1), (vec![0, 1, 2], 0.6)]).unwrap();
    let ws = vec![
        Marginal::weibull(1.0, 0.7).unwrap(),
        Marginal::weibull(0.5, 1.0).unwrap(),
        Marginal::weibull(2.0, 0.5).unwrap(),
    ];
    let p = Portfolio::new(ws.clone(), Dependence::Copula(cop.clone())).unwrap();
    let batch = sample_portfolio(&p, 4 * MC_N, 84).unwrap();
    let est = estimate(&batch, Statistic::RawMoment(3)).unwrap();
    let engine = aggregate_moment(&p, 3, Representation::NaturalA1, MomentOptions::default()).unwrap();
    let z_engine = (est.value - engine) / est.std_error;
    pass &= z_engine.abs() <= MC_SIGMAS;
    // E[X1 X2 X3] / Π E[X_k] = 1 + Σ_A θ_A Π_{k∈A} c_k with c_k = E[X_k,[1]]/E[X_k] - 1;
    // under the true minimum c_k = 2^{-1/τ} - 1, the printed sign flips it
    let c: Vec<f64> = [0.7f64, 1.0, 0.5].iter().map(|t| 2f64.powf(-1.0 / t) - 1.0).collect();
    let pair = 0.1 * c[0] * c[1] - 0.1 * c[0] * c[2] + 0.1 * c[1] * c[2];
    let triple = 0.6 * c[0] * c[1] * c[2];
    let scale: f64 = ws.iter().map(|m| m.mean().unwrap()).product();
    let prods: Vec<f64> = batch.rows().map(|r| r[0] * r[1] * r[2] / scale).collect();
    let n = prods.len() as f64;
    let mean = prods.iter().sum::<f64>() / n;
    let se = (prods.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let (z_true, z_printed) = ((mean - (1.0 + pair + triple)) / se, (mean - (1.0 + pair - triple)) / se);
    pass &= z_true.abs() <= MC_SIGMAS && z_printed.abs() > MC_SIGMAS;
    parts.push(format!(
        "Weibull θ123: E[S^3] z={z_engine:+.2}, E[X1X2X3] true-min z={z_true:+.2} vs printed-sign z={z_printed:+.2}"
    ));

    // rank correlations of the bivariate FGM with θ = 1
    let p = Portfolio::with_scheme(
        vec![Marginal::exponential(1.0).unwrap(), Marginal::weibull(1.0, 2.0).unwrap()],
        BernoulliScheme::comonotone(2).unwrap(),
    )
    .unwrap();
    let batch = sample_portfolio(&p, 200_000, 85).unwrap();
    let (x, y) = (batch.column(0), batch.column(1));
    let n = x.len() as f64;
    let rho = spearman_rho(&x, &y);
    let tau = kendall_tau(&x, &y);
    let ok = (rho - 1.0 / 3.0).abs() <= 3.0 / n.sqrt() && (tau - 2.0 / 9.0).abs() <= 4.0 / n.sqrt();
    pass &= ok;
    parts.push(format!("rho {rho:.4} tau {tau:.4}"));

    report.record(8, "Monte Carlo concordance", pass, parts.join("; "));
}

fn main() {
    let mut report = Report { lines: Vec::new() };
    criterion_1_2(&mut report);
    criterion_3(&mut report);
    criterion_4(&mut report);
    let allocs = allocators();
    criterion_5(&mut report, &allocs);
    let unexplained = criterion_6(&mut report, &allocs);
    criterion_7(&mut report);
    criterion_8(&mut report);

    let failed: Vec<u32> = report.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    println!("summary: {} of {} criteria pass; failing: {failed:?}", report.lines.len() - failed.len(), report.lines.len());
    // Criterion 6 may only fail on cells where an independent oracle
    // confirms the computed value over the printed one.
    for n in &failed {
        assert!(*n == 6 && unexplained.is_empty(), "criterion {n} failed: {unexplained:?}");
    }
}
