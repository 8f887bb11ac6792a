//! Six worked market models with their closed-form ν.

use std::collections::BTreeMap;

use crate::arbitrage::{build_nu, build_theta, market_verdicts, MarketVerdicts};
use crate::backtest::{classify_ip, BacktestConfig, IPReport, Verdict};
use crate::error::{Error, Result};
use crate::measures::{svc_set, AcPart, Interval, SignedMeasureRepr, SvcSet};
use crate::model::{to_natural_scale, validate, BoundarySpec, DensityBase, DiffusionSpec, MeasureRepr, Side};
use crate::piecewise::{PiecewiseFn, Segment};

/// One tunable parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    /// Admissible values, bounds included only where flagged.
    pub min: f64,
    pub max: f64,
    pub min_inclusive: bool,
    pub max_inclusive: bool,
    /// Range used for randomized checks.
    pub sample: (f64, f64),
    pub integer: bool,
    pub help: &'static str,
}

impl ParamSpec {
    fn admits(&self, v: f64) -> bool {
        let above = if self.min_inclusive { v >= self.min } else { v > self.min };
        let below = if self.max_inclusive { v <= self.max } else { v < self.max };
        v.is_finite() && above && below && (!self.integer || v.fract() == 0.0)
    }
}

/// Resolved parameter values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Params(BTreeMap<String, f64>);

impl Params {
    pub fn get(&self, name: &str) -> f64 {
        self.0.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Shape of the closed-form value of the canonical strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueForm {
    /// Discounted local time at the atoms of ν.
    LocalTimeAtom,
    /// Discounted clock after hitting an absorbing endpoint.
    AbsorbingClock,
    /// Discounted quadratic variation spent in the zero set of q'.
    QuadraticVariation,
}

#[derive(Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub title: &'static str,
    pub params: Vec<ParamSpec>,
    pub value_form: ValueForm,
    build: fn(&Params) -> Result<DiffusionSpec>,
    nu: fn(&Params) -> Result<SignedMeasureRepr>,
    nip: fn(&Params) -> bool,
}

impl std::fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogEntry").field("name", &self.name).finish_non_exhaustive()
    }
}

impl CatalogEntry {
    /// Defaults overridden by `overrides`, checked against the schema.
    pub fn resolve<'a, I>(&self, overrides: I) -> Result<Params>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut map: BTreeMap<String, f64> = self.params.iter().map(|p| (p.name.to_string(), p.default)).collect();
        for (k, v) in overrides {
            let spec = self
                .params
                .iter()
                .find(|p| p.name == k)
                .ok_or_else(|| Error::Argument(format!("{} has no parameter '{k}'", self.name)))?;
            if !spec.admits(v) {
                return Err(Error::Argument(format!(
                    "parameter '{k}' = {v} outside {}{}, {}{}",
                    if spec.min_inclusive { "[" } else { "(" },
                    spec.min,
                    spec.max,
                    if spec.max_inclusive { "]" } else { ")" }
                )));
            }
            map.insert(k.to_string(), v);
        }
        Ok(Params(map))
    }

    pub fn defaults(&self) -> Params {
        self.resolve([]).expect("defaults are admissible")
    }

    pub fn build(&self, p: &Params) -> Result<DiffusionSpec> {
        (self.build)(p)
    }

    /// ν in natural scale, from the closed form.
    pub fn expected_nu(&self, p: &Params) -> Result<SignedMeasureRepr> {
        (self.nu)(p)
    }

    pub fn expected_nip(&self, p: &Params) -> bool {
        (self.nip)(p)
    }
}

fn param(
    name: &'static str,
    default: f64,
    (min, min_inclusive): (f64, bool),
    (max, max_inclusive): (f64, bool),
    sample: (f64, f64),
    help: &'static str,
) -> ParamSpec {
    ParamSpec { name, default, min, max, min_inclusive, max_inclusive, sample, integer: false, help }
}

const OPEN: bool = false;
const CLOSED: bool = true;
const INF: f64 = f64::INFINITY;

fn rate_param(default: f64) -> ParamSpec {
    param("r", default, (-INF, OPEN), (INF, OPEN), (-0.2, 0.2), "interest rate")
}

fn line(seg: Segment) -> PiecewiseFn {
    PiecewiseFn::single(f64::NEG_INFINITY, INF, seg)
}

/// Geometric Brownian motion `dX = μX dt + σX dW` on `[b, ∞)`: scale
/// `s(x) = (x^{1−k} − b^{1−k})/(1−k)` with `k = 2μ/σ²`, speed density
/// `x^{k−2}/σ²`.
fn gbm_parts(mu: f64, sigma: f64, b: f64) -> Result<(PiecewiseFn, PiecewiseFn)> {
    let k = 2.0 * mu / (sigma * sigma);
    if !(k < 1.0) {
        return Err(Error::Unsupported(format!("2·mu/sigma² = {k} must be below 1 for the power scale")));
    }
    let e = 1.0 - k;
    let scale = PiecewiseFn::single(
        0.0,
        INF,
        Segment::Power { scale: 1.0 / e, shift: 0.0, exponent: e, offset: -b.powf(e) / e },
    );
    let speed = PiecewiseFn::single(
        0.0,
        INF,
        Segment::Power { scale: 1.0 / (sigma * sigma), shift: 0.0, exponent: k - 2.0, offset: 0.0 },
    );
    Ok((scale, speed))
}

fn gbm_params(x0: f64) -> Vec<ParamSpec> {
    vec![
        param("mu", 0.05, (-INF, OPEN), (INF, OPEN), (-0.1, 0.1), "drift coefficient"),
        param("sigma", 0.5, (0.0, OPEN), (INF, OPEN), (0.5, 1.0), "volatility coefficient"),
        param("x0", x0, (0.0, OPEN), (INF, OPEN), (1.1, 3.0), "initial price"),
    ]
}

fn atoms_only(domain: Interval, atoms: Vec<(f64, f64)>) -> Result<SignedMeasureRepr> {
    Ok(SignedMeasureRepr::new(domain, None, atoms))
}

fn engelbert_schmidt() -> CatalogEntry {
    let mut params = gbm_params(1.2);
    params.push(param("b", 1.0, (0.0, OPEN), (INF, OPEN), (0.5, 1.0), "absorbing level"));
    params.push(rate_param(0.05));
    CatalogEntry {
        name: "engelbert-schmidt",
        title: "Price absorbed at a positive level",
        params,
        value_form: ValueForm::AbsorbingClock,
        build: |p| {
            let b = p.get("b");
            let (scale, density) = gbm_parts(p.get("mu"), p.get("sigma"), b)?;
            Ok(DiffusionSpec {
                left: b,
                right: INF,
                left_bc: BoundarySpec::absorbing(Side::Left),
                right_bc: BoundarySpec::excluded(Side::Right),
                scale,
                speed: MeasureRepr { density, base: DensityBase::Lebesgue, atoms: vec![] },
                start: p.get("x0"),
                rate: p.get("r"),
            })
        },
        nu: |p| atoms_only(Interval::right_open(0.0, INF), vec![(0.0, -p.get("r") * p.get("b"))]),
        nip: |p| p.get("r") == 0.0,
    }
}

fn black_scholes_reflected() -> CatalogEntry {
    let mut params = gbm_params(1.2);
    params.push(param("m1", 2.0, (0.0, CLOSED), (INF, OPEN), (0.0, 5.0), "speed mass at the reflecting level 1"));
    params.push(rate_param(0.05));
    CatalogEntry {
        name: "black-scholes-reflected",
        title: "Price reflected at 1 with a sticky floor",
        params,
        value_form: ValueForm::LocalTimeAtom,
        build: |p| {
            let (scale, density) = gbm_parts(p.get("mu"), p.get("sigma"), 1.0)?;
            let m1 = p.get("m1");
            let atoms = if m1 > 0.0 { vec![(1.0, m1)] } else { vec![] };
            Ok(DiffusionSpec {
                left: 1.0,
                right: INF,
                left_bc: BoundarySpec::reflecting(Side::Left),
                right_bc: BoundarySpec::excluded(Side::Right),
                scale,
                speed: MeasureRepr { density, base: DensityBase::Lebesgue, atoms },
                start: p.get("x0"),
                rate: p.get("r"),
            })
        },
        nu: |p| atoms_only(Interval::right_open(0.0, INF), vec![(0.0, 0.5 - p.get("r") * p.get("m1"))]),
        nip: |p| p.get("r") * p.get("m1") == 0.5,
    }
}

fn bessel_shifted() -> CatalogEntry {
    let params = vec![
        param("delta", 1.0, (0.0, OPEN), (2.0, OPEN), (0.2, 1.8), "dimension"),
        param("m1", 1.0, (0.0, CLOSED), (INF, OPEN), (0.0, 5.0), "speed mass at 1"),
        param("x0", 2.0, (1.0, CLOSED), (INF, OPEN), (1.1, 3.0), "initial value"),
        rate_param(0.05),
    ];
    CatalogEntry {
        name: "bessel-shifted",
        title: "Squared Bessel process shifted to start above 1",
        params,
        value_form: ValueForm::LocalTimeAtom,
        build: |p| {
            let e = 1.0 - 0.5 * p.get("delta");
            let scale =
                PiecewiseFn::single(1.0, INF, Segment::Power { scale: 1.0, shift: 1.0, exponent: e, offset: 0.0 });
            let density = PiecewiseFn::single(
                1.0,
                INF,
                Segment::Power { scale: 1.0 / (4.0 * e), shift: 1.0, exponent: -e, offset: 0.0 },
            );
            let m1 = p.get("m1");
            let atoms = if m1 > 0.0 { vec![(1.0, m1)] } else { vec![] };
            Ok(DiffusionSpec {
                left: 1.0,
                right: INF,
                left_bc: BoundarySpec::reflecting(Side::Left),
                right_bc: BoundarySpec::excluded(Side::Right),
                scale,
                speed: MeasureRepr { density, base: DensityBase::Lebesgue, atoms },
                start: p.get("x0"),
                rate: p.get("r"),
            })
        },
        nu: |p| atoms_only(Interval::right_open(0.0, INF), vec![(0.0, -p.get("r") * p.get("m1"))]),
        nip: |p| p.get("r") * p.get("m1") == 0.0,
    }
}

fn bachelier_sticky() -> CatalogEntry {
    let params = vec![
        param("xi", 2.0, (-INF, OPEN), (INF, OPEN), (-3.0, 3.0), "sticky level"),
        param("rho", 3.0, (0.0, CLOSED), (INF, OPEN), (0.0, 5.0), "stickiness"),
        param("x0", 1.5, (-INF, OPEN), (INF, OPEN), (-3.0, 3.0), "initial price"),
        rate_param(0.05),
    ];
    CatalogEntry {
        name: "bachelier-sticky",
        title: "Brownian price sticky at one level",
        params,
        value_form: ValueForm::LocalTimeAtom,
        build: |p| {
            let rho = p.get("rho");
            let atoms = if rho > 0.0 { vec![(p.get("xi"), rho)] } else { vec![] };
            Ok(DiffusionSpec {
                left: f64::NEG_INFINITY,
                right: INF,
                left_bc: BoundarySpec::excluded(Side::Left),
                right_bc: BoundarySpec::excluded(Side::Right),
                scale: line(Segment::identity()),
                speed: MeasureRepr { density: line(Segment::Constant(1.0)), base: DensityBase::Lebesgue, atoms },
                start: p.get("x0"),
                rate: p.get("r"),
            })
        },
        nu: |p| {
            let xi = p.get("xi");
            atoms_only(Interval::open(f64::NEG_INFINITY, INF), vec![(xi, -p.get("r") * xi * p.get("rho"))])
        },
        nip: |p| p.get("r") * p.get("xi") * p.get("rho") == 0.0,
    }
}

fn bachelier_skew() -> CatalogEntry {
    let params = vec![
        param("kappa", 0.75, (0.0, OPEN), (1.0, OPEN), (0.05, 0.95), "skewness"),
        param("x0", 0.0, (-INF, OPEN), (INF, OPEN), (-1.0, 1.0), "initial price"),
        rate_param(0.05),
    ];
    CatalogEntry {
        name: "bachelier-skew",
        title: "Skew Brownian price",
        params,
        value_form: ValueForm::LocalTimeAtom,
        build: |p| {
            let k = p.get("kappa");
            let scale = PiecewiseFn::new(
                vec![f64::NEG_INFINITY, 0.0, INF],
                vec![Segment::Affine { slope: k, intercept: 0.0 }, Segment::Affine { slope: 1.0 - k, intercept: 0.0 }],
            )?;
            let density = PiecewiseFn::new(
                vec![f64::NEG_INFINITY, 0.0, INF],
                vec![Segment::Constant(1.0 / k), Segment::Constant(1.0 / (1.0 - k))],
            )?;
            Ok(DiffusionSpec {
                left: f64::NEG_INFINITY,
                right: INF,
                left_bc: BoundarySpec::excluded(Side::Left),
                right_bc: BoundarySpec::excluded(Side::Right),
                scale,
                speed: MeasureRepr { density, base: DensityBase::Lebesgue, atoms: vec![] },
                start: p.get("x0"),
                rate: p.get("r"),
            })
        },
        nu: |p| {
            let k = p.get("kappa");
            atoms_only(Interval::open(f64::NEG_INFINITY, INF), vec![(0.0, (2.0 * k - 1.0) / (2.0 * k * (1.0 - k)))])
        },
        nip: |p| p.get("kappa") == 0.5,
    }
}

/// Deepest construction offered for the fat Cantor example.
pub const FAT_CANTOR_MAX_DEPTH: u32 = 16;

fn fat_cantor_q(depth: u32) -> Segment {
    Segment::SvcDistanceIntegral { svc: SvcSet::unit(depth), scale: 1.0 }
}

fn fat_cantor() -> CatalogEntry {
    let mut depth =
        param("depth", 4.0, (1.0, CLOSED), (FAT_CANTOR_MAX_DEPTH as f64, CLOSED), (1.0, 8.0), "construction depth");
    depth.integer = true;
    let params = vec![
        depth,
        param("u0", 0.5, (-INF, OPEN), (INF, OPEN), (-0.5, 1.5), "initial position in natural scale"),
        rate_param(0.1),
    ];
    CatalogEntry {
        name: "fat-cantor",
        title: "Profit accrued on a fat Cantor set",
        params,
        value_form: ValueForm::QuadraticVariation,
        build: |p| {
            let q = fat_cantor_q(p.get("depth") as u32);
            let y0 = q.eval(p.get("u0"));
            let scale = line(Segment::Inverse { inner: Box::new(q), lo: f64::NEG_INFINITY, hi: INF });
            Ok(DiffusionSpec {
                left: f64::NEG_INFINITY,
                right: INF,
                left_bc: BoundarySpec::excluded(Side::Left),
                right_bc: BoundarySpec::excluded(Side::Right),
                scale,
                speed: MeasureRepr { density: line(Segment::Constant(1.0)), base: DensityBase::Scale, atoms: vec![] },
                start: y0,
                rate: p.get("r"),
            })
        },
        nu: |p| {
            let domain = Interval::open(f64::NEG_INFINITY, INF);
            let r = p.get("r");
            if r == 0.0 {
                return Ok(SignedMeasureRepr::zero(domain));
            }
            let depth = p.get("depth") as u32;
            let density = line(Segment::Constant(-r).times(fat_cantor_q(depth)));
            Ok(SignedMeasureRepr::new(domain, Some(AcPart { density, support: svc_set(depth)? }), vec![]))
        },
        nip: |p| p.get("r") == 0.0,
    }
}

/// All entries, in a fixed order.
pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        engelbert_schmidt(),
        black_scholes_reflected(),
        bessel_shifted(),
        bachelier_sticky(),
        bachelier_skew(),
        fat_cantor(),
    ]
}

pub fn find(name: &str) -> Result<CatalogEntry> {
    catalog().into_iter().find(|e| e.name == name).ok_or_else(|| {
        let names: Vec<_> = catalog().iter().map(|e| e.name).collect();
        Error::Argument(format!("unknown example '{name}'; known: {}", names.join(", ")))
    })
}

/// Describes the first disagreement between two representations of ν: atoms
/// must match in location with masses within `1e-12` relative, densities are
/// compared at `samples` points spread over the union of the supports.
pub fn nu_mismatch(built: &SignedMeasureRepr, expected: &SignedMeasureRepr, samples: usize) -> Option<String> {
    if built.atoms().len() != expected.atoms().len() {
        return Some(format!("{} atoms built, {} expected", built.atoms().len(), expected.atoms().len()));
    }
    for (&(x, w), &(y, v)) in built.atoms().iter().zip(expected.atoms()) {
        let tol = 1e-12 * (1.0 + x.abs().max(y.abs()));
        if (x - y).abs() > tol || (w - v).abs() > 1e-12 * (1.0 + v.abs()) {
            return Some(format!("atom ({x}, {w}) built, ({y}, {v}) expected"));
        }
    }
    if built.ac().is_some() != expected.ac().is_some() {
        return Some("density part present in only one of the two".into());
    }
    if let (Some(a), Some(b)) = (built.ac(), expected.ac()) {
        let cover = a.support.union(&b.support);
        let (ivs, pts) = cover.components();
        let lo = ivs.iter().map(|i| i.lo).chain(pts.iter().copied()).fold(INF, f64::min);
        let hi = ivs.iter().map(|i| i.hi).chain(pts.iter().copied()).fold(-INF, f64::max);
        if !(lo.is_finite() && hi.is_finite()) {
            return Some("density support is unbounded".into());
        }
        for i in 0..samples {
            let x = lo + (hi - lo) * (i as f64 + 0.5) / samples as f64;
            let (da, db) = (built.density(x), expected.density(x));
            if (da - db).abs() > 1e-10 {
                return Some(format!("density {da} built, {db} expected at {x}"));
            }
        }
    }
    None
}

/// Outcome of checking one entry against its closed forms.
#[derive(Debug, Clone)]
pub struct RegressionReport {
    pub entry: &'static str,
    pub params: Params,
    /// First disagreement between the built and the closed-form ν.
    pub nu_mismatch: Option<String>,
    pub verdicts: MarketVerdicts,
    pub expected_nip: bool,
    pub theta: IPReport,
    pub passed: bool,
}

/// Builds the entry, compares ν and the NIP verdict with the closed forms
/// and backtests θ. θ must come out as an increasing profit exactly when
/// NIP fails.
pub fn regression(entry: &CatalogEntry, params: &Params, cfg: &BacktestConfig) -> Result<RegressionReport> {
    let model = to_natural_scale(&entry.build(params)?)?;
    let report = validate(&model);
    if !report.all_passed() {
        let names: Vec<_> = report.failures().iter().map(|c| c.name.clone()).collect();
        return Err(Error::Model(format!("{} fails validation: {}", entry.name, names.join(", "))));
    }
    let bundle = build_nu(&model)?;
    let verdicts = market_verdicts(&model, &bundle)?;
    let nu_mismatch = nu_mismatch(&bundle.nu, &entry.expected_nu(params)?, 1000);
    let expected_nip = entry.expected_nip(params);
    let theta = classify_ip(&model, &bundle, &build_theta(&bundle), cfg)?;
    let theta_ok = if expected_nip {
        theta.verdict == Verdict::Not && theta.identically_zero
    } else {
        theta.verdict == Verdict::IncreasingProfit
    };
    let passed = nu_mismatch.is_none() && verdicts.nip == expected_nip && theta_ok;
    Ok(RegressionReport {
        entry: entry.name,
        params: params.clone(),
        nu_mismatch,
        verdicts,
        expected_nip,
        theta,
        passed,
    })
}
