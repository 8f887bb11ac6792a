//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::time::Instant;

use gdarb::arbitrage::{build_nu, build_theta, build_theta_bar, market_verdicts, FeedbackStrategy, NuBundle};
use gdarb::backtest::{backtest, classify_ip, Backtest, BacktestConfig, IPReport, Verdict};
use gdarb::catalog::{catalog, find, nu_mismatch, Params};
use gdarb::model::{to_natural_scale, BoundarySpec, NaturalScaleModel, Side};
use gdarb::piecewise::{PiecewiseFn, Segment};
use gdarb::simulate::{build_chain, run_paths, McConfig, Probes};

mod common;

struct Case {
    name: &'static str,
    params: Params,
    model: NaturalScaleModel,
    bundle: NuBundle,
}

fn case(name: &'static str, overrides: &[(&str, f64)]) -> Case {
    let entry = find(name).unwrap();
    let params = entry.resolve(overrides.iter().copied()).unwrap();
    let model = to_natural_scale(&entry.build(&params).unwrap()).unwrap();
    let bundle = build_nu(&model).unwrap();
    Case { name, params, model, bundle }
}

/// Strategy labels run on each failing-NIP example.
const THETA: usize = 0;
const THETA_BAR: usize = 1;
const EXTRA: usize = 2;

struct Run {
    case: Case,
    labels: Vec<&'static str>,
    bt: Backtest,
}

impl Run {
    fn report(&self, k: usize) -> &IPReport {
        &self.bt.reports[k]
    }
}

fn config() -> BacktestConfig {
    BacktestConfig {
        mc: McConfig { n_paths: 10_000, h: 0.005, horizon: 1.0, seed: 20_240_601, ..McConfig::default() },
        ..Default::default()
    }
}

fn run(c: Case, extra: &[(&'static str, FeedbackStrategy)]) -> Run {
    let mut labels = vec!["theta", "theta_bar"];
    let mut strategies = vec![build_theta(&c.bundle), build_theta_bar(&c.bundle)];
    for (l, s) in extra {
        labels.push(l);
        strategies.push(s.clone());
    }
    let bt = backtest(&c.model, &c.bundle, &strategies, &Probes::default(), &config()).unwrap();
    Run { case: c, labels, bt }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn criterion_1() -> Outcome {
    let mut runner = common::runner();
    let mut worst = 0.0f64;
    for entry in catalog() {
        let t = Instant::now();
        for _ in 0..20 {
            let p = common::draw(&mut runner, &entry);
            let model = to_natural_scale(&entry.build(&p).unwrap()).unwrap();
            let b = build_nu(&model).unwrap();
            if let Some(why) = nu_mismatch(&b.nu, &entry.expected_nu(&p).unwrap(), 1000) {
                return outcome(false, format!("{} {p:?}: {why}", entry.name));
            }
        }
        let secs = t.elapsed().as_secs_f64();
        worst = worst.max(secs);
        if secs >= 1.0 {
            return outcome(false, format!("{} took {secs:.2} s for 20 draws", entry.name));
        }
    }
    outcome(true, format!("6 examples x 20 draws match; slowest example {worst:.3} s"))
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let rates = [0.0, 0.05, 0.1, 0.125, 0.25, 0.5, 1.0];
    let masses = [0.0, 0.5, 1.0, 2.0, 4.0, 5.0, 1.999_999];
    let mut n_nip = 0;
    for r in rates {
        for m1 in masses {
            let c = case("black-scholes-reflected", &[("r", r), ("m1", m1)]);
            let v = market_verdicts(&c.model, &c.bundle).unwrap();
            if v.nip != (r * m1 == 0.5) {
                return outcome(false, format!("r={r} m1={m1}: nip={}", v.nip));
            }
            n_nip += v.nip as usize;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        secs < 1.0 && n_nip == 5,
        format!("{} grid points, nip exactly on r*m1=1/2 ({n_nip} points), {secs:.3} s", rates.len() * masses.len()),
    )
}

fn criterion_3(runs: &[Run]) -> Outcome {
    let mut parts = vec![];
    let mut pass = true;
    for r in runs {
        let worst = r.bt.outcomes.iter().map(|o| o.strategies[THETA].min_increment).fold(f64::INFINITY, f64::min);
        pass &= worst >= -1e-12 && r.report(THETA).monotone_fraction == 1.0;
        parts.push(format!("{} min dV={worst:.1e}", r.case.name));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_4(runs: &[Run]) -> Outcome {
    let mut parts = vec![];
    let mut pass = true;
    for r in runs {
        let p = r.report(THETA).p_positive_terminal;
        pass &= p.clearly_positive();
        parts.push(format!("{} {:.4}±{:.4}", r.case.name, p.p, p.se));
    }
    outcome(pass, format!("P(V_T>0): {}", parts.join("; ")))
}

fn criterion_5(runs: &[Run]) -> Outcome {
    let mut parts = vec![];
    let mut pass = true;
    for r in runs {
        let e = r.report(THETA).route_agreement.unwrap_or(f64::INFINITY);
        pass &= e <= 0.05;
        parts.push(format!("{} {e:.1e}", r.case.name));
    }
    let es = runs.iter().find(|r| r.case.name == "engelbert-schmidt").unwrap();
    let (b, rate) = (es.case.params.get("b"), es.case.params.get("r"));
    let mut absorbed = 0;
    let mut worst = 0.0f64;
    for o in &es.bt.outcomes {
        let s = &o.strategies[THETA];
        match o.absorbed_at {
            Some(tb) => {
                absorbed += 1;
                let want = (b * ((-rate * tb).exp() - (-rate * 1.0f64).exp())).abs();
                worst = worst.max((s.v_integral - want).abs()).max((s.v_closed - want).abs());
            }
            None => worst = worst.max(s.v_integral.abs()),
        }
    }
    pass &= worst <= 1e-10 && absorbed > 0;
    outcome(
        pass,
        format!(
            "mean route error: {}; absorbed value error {worst:.1e} over {absorbed} absorbed paths",
            parts.join("; ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let configs: [(&str, &[(&str, f64)]); 6] = [
        ("engelbert-schmidt", &[("r", 0.0)]),
        ("black-scholes-reflected", &[("r", 0.25), ("m1", 2.0)]),
        ("bessel-shifted", &[("r", 0.0)]),
        ("bachelier-sticky", &[("r", 0.0)]),
        ("bachelier-skew", &[("kappa", 0.5)]),
        ("fat-cantor", &[("r", 0.0)]),
    ];
    let mut pass = true;
    let mut parts = vec![];
    for (name, o) in configs {
        let c = case(name, o);
        let v = market_verdicts(&c.model, &c.bundle).unwrap();
        let rep = classify_ip(&c.model, &c.bundle, &build_theta(&c.bundle), &config()).unwrap();
        let ok = v.nip && rep.identically_zero && rep.verdict == Verdict::Not && rep.mean_integral == 0.0;
        pass &= ok;
        parts.push(format!("{name} {}", if ok { "zero" } else { "NONZERO" }));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let inf = f64::INFINITY;
    let bm = NaturalScaleModel::new(
        -inf,
        inf,
        BoundarySpec::excluded(Side::Left),
        BoundarySpec::excluded(Side::Right),
        PiecewiseFn::single(-inf, inf, Segment::identity()),
        PiecewiseFn::single(-inf, inf, Segment::Constant(1.0)),
        vec![],
        0.0,
        0.0,
    );
    let chain = build_chain(&bm, 0.005).unwrap();
    let out = run_paths(&chain, &[], &Probes { nodes: vec![chain.start()] }, &config().mc).unwrap();
    let mean = out.iter().map(|o| o.local_times[0]).sum::<f64>() / out.len() as f64;
    let want = (2.0 / std::f64::consts::PI).sqrt();
    let rel = (mean - want).abs() / want;
    outcome(rel <= 0.03, format!("E[L^0_1] = {mean:.5} vs {want:.5} ({:.2}% off)", 100.0 * rel))
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let c = case("fat-cantor", &[("depth", 4.0), ("r", 0.1)]);
    let v = market_verdicts(&c.model, &c.bundle).unwrap();
    let svc_measure = 1.0 - (1..=4).map(|k| 2f64.powi(k - 1) / 4f64.powi(k)).sum::<f64>();
    let ok_cantor = !v.nip && v.qvip_exists && !v.rp_holds && v.evidence.lambda_zero == svc_measure;
    let s = case("bachelier-skew", &[]);
    let w = market_verdicts(&s.model, &s.bundle).unwrap();
    let ok_skew = !w.qvip_exists && w.rp_holds;
    let secs = t.elapsed().as_secs_f64();
    outcome(
        ok_cantor && ok_skew && secs < 1.0,
        format!(
            "fat-cantor nip={} qvip={} rp={} lambda={} (exact {svc_measure}); skew qvip={} rp={}; {secs:.3} s",
            v.nip, v.qvip_exists, v.rp_holds, v.evidence.lambda_zero, w.qvip_exists, w.rp_holds
        ),
    )
}

fn criterion_9(runs: &[Run]) -> Outcome {
    let cantor = runs.iter().find(|r| r.case.name == "fat-cantor").unwrap().report(THETA_BAR);
    let sticky = runs.iter().find(|r| r.case.name == "bachelier-sticky").unwrap().report(THETA);
    let mut accepted = 0;
    let mut contacts = 0;
    for r in runs {
        for rep in &r.bt.reports {
            if rep.verdict == Verdict::IncreasingProfit {
                accepted += 1;
                contacts += rep.qv_s_contacts;
            }
        }
    }
    let pass = cantor.verdict == Verdict::IncreasingProfit
        && cantor.dominated_fraction == 1.0
        && sticky.dominated_fraction < 1.0
        && contacts == 0;
    outcome(
        pass,
        format!(
            "fat-cantor theta_bar dominated on {:.4} of paths; sticky theta on {:.4}; <S> contacts {contacts} over {accepted} accepted profits",
            cantor.dominated_fraction, sticky.dominated_fraction
        ),
    )
}

fn criterion_10(runs: &[Run]) -> Outcome {
    let skew = runs.iter().find(|r| r.case.name == "bachelier-skew").unwrap();
    let sticky = runs.iter().find(|r| r.case.name == "bachelier-sticky").unwrap();
    let hold = skew.report(EXTRA);
    let short = sticky.report(EXTRA);
    assert_eq!((skew.labels[EXTRA], sticky.labels[EXTRA]), ("hold", "neg_theta"));
    let non_monotone = 1.0 - hold.monotone_fraction;
    let pass = !hold.symbolic.condition_i
        && non_monotone >= 0.99
        && hold.verdict == Verdict::Not
        && !short.symbolic.condition_ii
        && short.p_negative_terminal.clearly_positive()
        && short.verdict == Verdict::Not;
    outcome(
        pass,
        format!(
            "H=1 on skew: condition (i) {}, non-monotone on {:.4}; H=-theta on sticky: condition (ii) {}, P(V_T<0)={:.4}±{:.4}",
            hold.symbolic.condition_i, non_monotone, short.symbolic.condition_ii, short.p_negative_terminal.p, short.p_negative_terminal.se
        ),
    )
}

fn main() {
    let t = Instant::now();
    let mut results: Vec<(usize, Outcome)> = vec![(1, criterion_1()), (2, criterion_2()), (8, criterion_8())];

    let runs: Vec<Run> = vec![
        run(case("engelbert-schmidt", &[]), &[]),
        run(case("black-scholes-reflected", &[]), &[]),
        run(case("bessel-shifted", &[]), &[]),
        {
            let c = case("bachelier-sticky", &[]);
            let short = build_theta(&c.bundle).negated();
            run(c, &[("neg_theta", short)])
        },
        run(case("bachelier-skew", &[]), &[("hold", FeedbackStrategy::constant(1.0))]),
        run(case("fat-cantor", &[("depth", 4.0)]), &[]),
    ];
    results.push((3, criterion_3(&runs)));
    results.push((4, criterion_4(&runs)));
    results.push((5, criterion_5(&runs)));
    results.push((6, criterion_6()));
    results.push((7, criterion_7()));
    results.push((9, criterion_9(&runs)));
    results.push((10, criterion_10(&runs)));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, o) in &results {
        println!("criterion {n:>2}: {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        t.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
