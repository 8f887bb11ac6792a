//! Value processes of feedback strategies along simulated paths, and the
//! empirical increasing-profit classification.

use crate::arbitrage::{symbolic_ip_check, CheckReport, FeedbackStrategy, NuBundle};
use crate::error::{Error, Result};
use crate::model::NaturalScaleModel;
use crate::simulate::{
    build_chain, replay, run_paths, sample_path, GridChain, McConfig, PathOutcome, PathSample, Probes, SeriesPoint,
    StrategyTables,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Discretized stochastic integral against the discounted price.
    Integral,
    /// Local-time clock against ν.
    ClosedForm,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Integral => "integral",
            Route::ClosedForm => "closed_form",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub route: Route,
}

fn series_of(points: &[SeriesPoint], route: Route) -> ValueSeries {
    ValueSeries {
        times: points.iter().map(|p| p.t).collect(),
        values: points
            .iter()
            .map(|p| match route {
                Route::Integral => p.v_integral,
                Route::ClosedForm => p.v_closed,
            })
            .collect(),
        route,
    }
}

/// `∫ H dS` along a recorded path.
pub fn integral_value(path: &PathSample, chain: &GridChain, tables: &StrategyTables) -> Result<ValueSeries> {
    let (_, series) = replay(chain, path, &[tables], &Probes::default())?;
    Ok(series_of(&series[0], Route::Integral))
}

/// `∫ H e^{−rs} (local time or absorbed clock) dν` along a recorded path.
/// Refused when `H` can trade where `q' > 0`.
pub fn closed_form_value(
    path: &PathSample,
    chain: &GridChain,
    model: &NaturalScaleModel,
    bundle: &NuBundle,
    strategy: &FeedbackStrategy,
) -> Result<ValueSeries> {
    let check = symbolic_ip_check(model, bundle, &strategy.state_part())?;
    if !check.condition_i {
        return Err(Error::Argument(format!(
            "the local-time formula needs a strategy idle where q' > 0; it trades on a set of measure {}",
            check.lambda_active_martingale
        )));
    }
    let tables = chain.strategy_tables(model, bundle, strategy)?;
    let (_, series) = replay(chain, path, &[&tables], &Probes::default())?;
    Ok(series_of(&series[0], Route::ClosedForm))
}

/// Evidence on which quadratic variation carries a value process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DominationReport {
    /// Every nonzero value increment came with a nonzero `⟨U⟩` increment.
    pub dominated_by_qv_u: bool,
    /// Some nonzero value increment came with a nonzero `⟨S⟩` increment.
    pub meets_qv_s: bool,
}

/// Compares increments of aligned series.
pub fn domination_check(values: &[f64], qv_u: &[f64], qv_s: &[f64]) -> DominationReport {
    let mut rep = DominationReport { dominated_by_qv_u: true, meets_qv_s: false };
    for k in 1..values.len().min(qv_u.len()).min(qv_s.len()) {
        if values[k] != values[k - 1] {
            if qv_u[k] == qv_u[k - 1] {
                rep.dominated_by_qv_u = false;
            }
            if qv_s[k] != qv_s[k - 1] {
                rep.meets_qv_s = true;
            }
        }
    }
    rep
}

/// [`domination_check`] on the points produced by a replay.
pub fn domination_of(points: &[SeriesPoint]) -> DominationReport {
    let v: Vec<f64> = points.iter().map(|p| p.v_integral).collect();
    let qu: Vec<f64> = points.iter().map(|p| p.qv_u).collect();
    let qs: Vec<f64> = points.iter().map(|p| p.qv_s).collect();
    domination_check(&v, &qu, &qs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    IncreasingProfit,
    Not,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::IncreasingProfit => "increasing_profit",
            Verdict::Not => "not",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Tolerances of the classification.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    pub mc: McConfig,
    /// Mean relative discrepancy allowed between the two routes.
    pub tol_route: f64,
    /// Floor of the denominator of the relative discrepancy.
    pub route_floor: f64,
    /// Most negative increment still counted as monotone.
    pub tol_monotone: f64,
    /// Largest martingale activity still counted as idle.
    pub tol_activity: f64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            mc: McConfig::default(),
            tol_route: 0.05,
            route_floor: 1e-8,
            tol_monotone: 1e-12,
            tol_activity: 1e-12,
        }
    }
}

/// Mean and standard error of a Bernoulli sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub p: f64,
    pub se: f64,
}

impl Proportion {
    fn of(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Proportion { p, se: (p * (1.0 - p) / n as f64).sqrt() }
    }

    /// Estimate minus three standard errors is positive.
    pub fn clearly_positive(&self) -> bool {
        self.p - 3.0 * self.se > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IPReport {
    pub symbolic: CheckReport,
    pub condition_i_ok: bool,
    pub condition_ii_ok: bool,
    /// Largest `Σ H²q'²(ΔU)²` over the paths.
    pub max_martingale_activity: f64,
    /// Share of paths on which the clock `μ({θH > 0})` grew.
    pub empirical_iii: Proportion,
    pub monotone_fraction: f64,
    pub p_positive_terminal: Proportion,
    pub p_negative_terminal: Proportion,
    /// Mean relative discrepancy between routes, when the local-time route applies.
    pub route_agreement: Option<f64>,
    pub route_max: Option<f64>,
    pub mean_integral: f64,
    pub mean_closed: f64,
    /// Share of paths whose value only moved together with `⟨U⟩`.
    pub dominated_fraction: f64,
    /// Paths on which a value increment met a `⟨S⟩` increment.
    pub qv_s_contacts: usize,
    /// The value process vanished identically on every path.
    pub identically_zero: bool,
    pub window_fraction: f64,
    pub n_paths: usize,
    pub verdict: Verdict,
}

/// Summarizes the paths for strategy `k`.
pub fn summarize(
    check: CheckReport,
    outcomes: &[PathOutcome],
    k: usize,
    tables: &StrategyTables,
    cfg: &BacktestConfig,
) -> IPReport {
    let n = outcomes.len();
    let stats = || outcomes.iter().map(|o| &o.strategies[k]);
    let max_activity = stats().map(|s| s.martingale_activity).fold(0.0, f64::max);
    let condition_i_ok = check.condition_i && max_activity <= cfg.tol_activity;
    let condition_ii_ok = check.condition_ii;
    let monotone = stats().filter(|s| s.min_increment >= -cfg.tol_monotone).count();
    let positive = stats().filter(|s| s.v_integral > 0.0).count();
    let negative = stats().filter(|s| s.v_integral < 0.0).count();
    let clock = stats().filter(|s| s.clock_positive).count();
    let identically_zero =
        tables.is_zero || stats().all(|s| s.v_integral == 0.0 && s.min_increment == 0.0 && s.v_closed == 0.0);
    let (route_agreement, route_max) = if check.condition_i {
        let errs: Vec<f64> =
            stats().map(|s| (s.v_integral - s.v_closed).abs() / s.v_closed.abs().max(cfg.route_floor)).collect();
        (Some(errs.iter().sum::<f64>() / n as f64), Some(errs.iter().copied().fold(0.0, f64::max)))
    } else {
        (None, None)
    };
    let p_positive_terminal = Proportion::of(positive, n);
    let monotone_fraction = monotone as f64 / n as f64;
    let verdict = if identically_zero || !condition_i_ok || !condition_ii_ok {
        Verdict::Not
    } else if monotone_fraction == 1.0
        && p_positive_terminal.clearly_positive()
        && route_agreement.is_some_and(|e| e <= cfg.tol_route)
    {
        Verdict::IncreasingProfit
    } else {
        Verdict::Inconclusive
    };
    IPReport {
        symbolic: check,
        condition_i_ok,
        condition_ii_ok,
        max_martingale_activity: max_activity,
        empirical_iii: Proportion::of(clock, n),
        monotone_fraction,
        p_positive_terminal,
        p_negative_terminal: Proportion::of(negative, n),
        route_agreement,
        route_max,
        mean_integral: stats().map(|s| s.v_integral).sum::<f64>() / n as f64,
        mean_closed: stats().map(|s| s.v_closed).sum::<f64>() / n as f64,
        dominated_fraction: stats().filter(|s| s.dominated_by_qv_u).count() as f64 / n as f64,
        qv_s_contacts: stats().filter(|s| s.meets_qv_s).count(),
        identically_zero,
        window_fraction: outcomes.iter().filter(|o| o.left_window).count() as f64 / n as f64,
        n_paths: n,
        verdict,
    }
}

/// Several strategies backtested on one set of paths.
#[derive(Debug, Clone)]
pub struct Backtest {
    pub chain: GridChain,
    pub tables: Vec<StrategyTables>,
    pub outcomes: Vec<PathOutcome>,
    pub reports: Vec<IPReport>,
}

pub fn backtest(
    model: &NaturalScaleModel,
    bundle: &NuBundle,
    strategies: &[FeedbackStrategy],
    probes: &Probes,
    cfg: &BacktestConfig,
) -> Result<Backtest> {
    cfg.mc.validate()?;
    let chain = build_chain(model, cfg.mc.h)?;
    backtest_on(chain, model, bundle, strategies, probes, cfg)
}

/// As [`backtest`], on a chain built beforehand (probes refer to its nodes).
pub fn backtest_on(
    chain: GridChain,
    model: &NaturalScaleModel,
    bundle: &NuBundle,
    strategies: &[FeedbackStrategy],
    probes: &Probes,
    cfg: &BacktestConfig,
) -> Result<Backtest> {
    cfg.mc.validate()?;
    let checks =
        strategies.iter().map(|s| symbolic_ip_check(model, bundle, &s.state_part())).collect::<Result<Vec<_>>>()?;
    let tables = strategies.iter().map(|s| chain.strategy_tables(model, bundle, s)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&StrategyTables> = tables.iter().collect();
    let outcomes = run_paths(&chain, &refs, probes, &cfg.mc)?;
    let reports = checks.into_iter().enumerate().map(|(k, c)| summarize(c, &outcomes, k, &tables[k], cfg)).collect();
    Ok(Backtest { chain, tables, outcomes, reports })
}

/// Backtests one strategy.
pub fn classify_ip(
    model: &NaturalScaleModel,
    bundle: &NuBundle,
    strategy: &FeedbackStrategy,
    cfg: &BacktestConfig,
) -> Result<IPReport> {
    let bt = backtest(model, bundle, std::slice::from_ref(strategy), &Probes::default(), cfg)?;
    Ok(bt.reports.into_iter().next().expect("one report"))
}

/// Both value routes of every strategy on the first `n` paths of `cfg`, for
/// plotting. Entries are `(path_id, strategy index, points)`.
pub fn value_series(
    chain: &GridChain,
    tables: &[StrategyTables],
    cfg: &McConfig,
    n: usize,
) -> Result<Vec<(u64, usize, Vec<SeriesPoint>)>> {
    let refs: Vec<&StrategyTables> = tables.iter().collect();
    let mut out = Vec::new();
    for id in 0..n.min(cfg.n_paths) as u64 {
        let path = sample_path(chain, cfg.horizon, cfg.seed, id)?;
        let (_, series) = replay(chain, &path, &refs, &Probes::default())?;
        for (k, s) in series.into_iter().enumerate() {
            out.push((id, k, s));
        }
    }
    Ok(out)
}
