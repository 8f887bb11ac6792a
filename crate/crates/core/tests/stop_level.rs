//! A strategy that trades θ below a level and stops for good once the price
//! reaches a higher one is still an increasing profit, even though it is idle
//! on a set the price visits with positive probability.

use gdarb::arbitrage::{build_nu, build_theta};
use gdarb::backtest::{backtest, BacktestConfig, Verdict};
use gdarb::catalog::find;
use gdarb::measures::{BorelSetRepr, Interval};
use gdarb::model::to_natural_scale;
use gdarb::simulate::{replay, sample_path, McConfig, Probes};

#[test]
fn stopped_theta_is_an_increasing_profit() {
    let entry = find("black-scholes-reflected").unwrap();
    let model = to_natural_scale(&entry.build(&entry.defaults()).unwrap()).unwrap();
    let bundle = build_nu(&model).unwrap();
    let theta = build_theta(&bundle);
    let u0 = model.start();
    let (cap, level) = (u0 + 0.1, u0 + 0.3);
    let stopped =
        theta.restricted(&BorelSetRepr::from_interval(Interval::closed(model.lo(), cap))).with_stop_level(level);
    assert!(!stopped.is_state_feedback());

    let cfg = BacktestConfig { mc: McConfig { n_paths: 2000, h: 0.01, ..McConfig::default() }, ..Default::default() };
    let chain = gdarb::simulate::build_chain(&model, cfg.mc.h).unwrap();
    let probe = chain.nearest(level);
    let bt =
        backtest(&model, &bundle, &[theta.clone(), stopped.clone()], &Probes { nodes: vec![probe] }, &cfg).unwrap();
    let rep = &bt.reports[1];
    assert_eq!(rep.verdict, Verdict::IncreasingProfit, "{rep:?}");
    assert_eq!(rep.monotone_fraction, 1.0);

    let mut stopped_paths = 0;
    for o in &bt.outcomes {
        // the stopped strategy only drops nonnegative increments
        assert!(o.strategies[1].v_integral <= o.strategies[0].v_integral + 1e-12);
        stopped_paths += o.hits[0].is_some() as usize;
    }
    assert!(stopped_paths > 0 && stopped_paths < cfg.mc.n_paths, "{stopped_paths}");

    // after the stop the value is frozen
    let tables = chain.strategy_tables(&model, &bundle, &stopped).unwrap();
    let mut checked = 0;
    for id in 0..200 {
        let path = sample_path(&chain, 1.0, cfg.mc.seed, id).unwrap();
        let (out, series) = replay(&chain, &path, &[&tables], &Probes { nodes: vec![probe] }).unwrap();
        let Some(hit) = out.hits[0] else { continue };
        let at_hit = series[0].iter().rfind(|p| p.t <= hit).unwrap().v_integral;
        assert!(series[0].iter().filter(|p| p.t >= hit).all(|p| p.v_integral == at_hit));
        checked += 1;
    }
    assert!(checked > 0);
}
