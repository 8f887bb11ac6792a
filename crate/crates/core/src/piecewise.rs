//! Piecewise functions over a closed catalog of segment kinds.

use crate::error::{Error, Result};
use crate::measures::borel::{BorelSetRepr, Interval, SvcSet};
use crate::quadrature;

/// One smooth piece. Every kind evaluates everywhere (no panics, possibly
/// non-finite outside its natural domain) and reports the points inside an
/// interval where it stops being smooth.
#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Constant(f64),
    Affine {
        slope: f64,
        intercept: f64,
    },
    /// `Σ c_i x^i`
    Polynomial(Vec<f64>),
    /// `scale·(x − shift)^exponent + offset`, with `x − shift` clamped at 0.
    Power {
        scale: f64,
        shift: f64,
        exponent: f64,
        offset: f64,
    },
    /// `scale·d(x, F)`
    SvcDistance {
        svc: SvcSet,
        scale: f64,
    },
    /// `scale·∫_{F.lo}^x d(y, F) dy`
    SvcDistanceIntegral {
        svc: SvcSet,
        scale: f64,
    },
    /// Numerical inverse of an increasing segment defined on `[lo, hi]`.
    Inverse {
        inner: Box<Segment>,
        lo: f64,
        hi: f64,
    },
    /// `outer(inner(x))`
    Composed {
        outer: Box<Segment>,
        inner: Box<Segment>,
    },
    /// `density(map(x))·map'(x)`: a density transported by a change of variables.
    Pullback {
        density: Box<Segment>,
        map: Box<Segment>,
    },
    Product(Vec<Segment>),
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, &ci)| i as f64 * ci).collect()
}

fn trim_poly(c: &[f64]) -> &[f64] {
    let mut n = c.len();
    while n > 0 && c[n - 1] == 0.0 {
        n -= 1;
    }
    &c[..n]
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Real roots of a non-zero polynomial in `[lo, hi]`, isolated through the
/// roots of its derivative.
pub(crate) fn poly_roots(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let c = trim_poly(c);
    if c.len() <= 1 {
        return vec![];
    }
    let lead = c[c.len() - 1];
    let bound = 1.0 + c[..c.len() - 1].iter().map(|ci| (ci / lead).abs()).fold(0.0, f64::max);
    let (lo, hi) = (lo.max(-bound), hi.min(bound));
    if lo > hi {
        return vec![];
    }
    if c.len() == 2 {
        let x = -c[0] / c[1];
        return if x >= lo && x <= hi { vec![x] } else { vec![] };
    }
    let mut pts = vec![lo];
    pts.extend(poly_roots(&poly_deriv(c), lo, hi));
    pts.push(hi);
    let scale = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut roots = Vec::new();
    for w in pts.windows(2) {
        let (fa, fb) = (poly_eval(c, w[0]), poly_eval(c, w[1]));
        if fa.abs() <= 1e-14 * scale {
            roots.push(w[0]);
        } else if fa * fb < 0.0 {
            roots.push(bisect(|x| poly_eval(c, x), w[0], w[1]));
        }
    }
    if poly_eval(c, hi).abs() <= 1e-14 * scale {
        roots.push(hi);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + a.abs()));
    roots
}

/// `∫_{y0}^{y1} t^(e−1) dt` for `0 ≤ y0 ≤ y1`, stable as `e → 0`.
fn power_antideriv(y0: f64, y1: f64, e: f64) -> f64 {
    if y1 <= y0 {
        return 0.0;
    }
    if y0 == 0.0 {
        return if e > 0.0 { y1.powf(e) / e } else { f64::INFINITY };
    }
    let l = (y1 / y0).ln();
    if e == 0.0 {
        l
    } else {
        y0.powf(e) * (e * l).exp_m1() / e
    }
}

impl Segment {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Segment::Constant(_) => "constant",
            Segment::Affine { .. } => "affine",
            Segment::Polynomial(_) => "polynomial",
            Segment::Power { .. } => "power",
            Segment::SvcDistance { .. } => "svc-distance",
            Segment::SvcDistanceIntegral { .. } => "svc-distance-integral",
            Segment::Inverse { .. } => "inverse",
            Segment::Composed { .. } => "composed",
            Segment::Pullback { .. } => "pullback",
            Segment::Product(_) => "product",
        }
    }

    pub fn identity() -> Self {
        Segment::Affine { slope: 1.0, intercept: 0.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Segment::Constant(c) => *c,
            Segment::Affine { slope, intercept } => slope * x + intercept,
            Segment::Polynomial(c) => poly_eval(c, x),
            Segment::Power { scale, shift, exponent, offset } => scale * (x - shift).max(0.0).powf(*exponent) + offset,
            Segment::SvcDistance { svc, scale } => scale * svc.distance(x),
            Segment::SvcDistanceIntegral { svc, scale } => scale * svc.distance_integral(x),
            Segment::Inverse { inner, lo, hi } => invert(inner, *lo, *hi, x),
            Segment::Composed { outer, inner } => outer.eval(inner.eval(x)),
            Segment::Pullback { density, map } => density.eval(map.eval(x)) * map.d1(x),
            Segment::Product(fs) => fs.iter().map(|f| f.eval(x)).product(),
        }
    }

    /// Right derivative.
    pub fn d1(&self, x: f64) -> f64 {
        match self {
            Segment::Constant(_) => 0.0,
            Segment::Affine { slope, .. } => *slope,
            Segment::Polynomial(c) => poly_eval(&poly_deriv(c), x),
            Segment::Power { scale, shift, exponent, .. } => {
                if *exponent == 0.0 {
                    0.0
                } else {
                    scale * exponent * (x - shift).max(0.0).powf(exponent - 1.0)
                }
            }
            Segment::SvcDistance { svc, scale } => {
                // slope of d(., F) just to the right of x
                let eps = 1e-9 * (svc.hi - svc.lo);
                let d0 = svc.distance(x);
                let d1 = svc.distance(x + eps);
                scale
                    * if d1 > d0 {
                        1.0
                    } else if d1 < d0 {
                        -1.0
                    } else {
                        0.0
                    }
            }
            Segment::SvcDistanceIntegral { svc, scale } => scale * svc.distance(x),
            Segment::Inverse { inner, lo, hi } => 1.0 / inner.d1(invert(inner, *lo, *hi, x)),
            Segment::Composed { outer, inner } => outer.d1(inner.eval(x)) * inner.d1(x),
            Segment::Pullback { density, map } => {
                let y = map.eval(x);
                let m1 = map.d1(x);
                density.d1(y) * m1 * m1 + density.eval(y) * map.d2(x)
            }
            Segment::Product(fs) => (0..fs.len())
                .map(|i| fs.iter().enumerate().map(|(j, f)| if i == j { f.d1(x) } else { f.eval(x) }).product::<f64>())
                .sum(),
        }
    }

    /// Second derivative (right version where it jumps).
    pub fn d2(&self, x: f64) -> f64 {
        match self {
            Segment::Constant(_) | Segment::Affine { .. } => 0.0,
            Segment::Polynomial(c) => poly_eval(&poly_deriv(&poly_deriv(c)), x),
            Segment::Power { scale, shift, exponent, .. } => {
                let p = *exponent;
                if p == 0.0 || p == 1.0 {
                    0.0
                } else {
                    scale * p * (p - 1.0) * (x - shift).max(0.0).powf(p - 2.0)
                }
            }
            Segment::SvcDistanceIntegral { svc, scale } => Segment::SvcDistance { svc: *svc, scale: *scale }.d1(x),
            Segment::Inverse { inner, lo, hi } => {
                let y = invert(inner, *lo, *hi, x);
                let g1 = inner.d1(y);
                -inner.d2(y) / (g1 * g1 * g1)
            }
            Segment::Composed { outer, inner } => {
                let y = inner.eval(x);
                let i1 = inner.d1(x);
                outer.d2(y) * i1 * i1 + outer.d1(y) * inner.d2(x)
            }
            _ => numeric_d2(self, x),
        }
    }

    /// Points in `(lo, hi)` where the segment is not smooth.
    pub fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = match self {
            Segment::Power { shift, .. } if *shift > lo && *shift < hi => vec![*shift],
            Segment::SvcDistance { svc, .. } | Segment::SvcDistanceIntegral { svc, .. } => svc.kinks_within(lo, hi),
            Segment::Inverse { inner, lo: a, hi: b } => {
                let (ia, ib) = (inner.eval(a.max(-1e300)), inner.eval(b.min(1e300)));
                inner
                    .kinks(*a, *b)
                    .into_iter()
                    .map(|k| inner.eval(k))
                    .filter(|&y| y > lo && y < hi && y > ia && y < ib)
                    .collect()
            }
            Segment::Composed { outer, inner } | Segment::Pullback { density: outer, map: inner } => {
                let mut v = inner.kinks(lo, hi);
                let (ya, yb) = (inner.eval(lo), inner.eval(hi));
                let (ya, yb) = (ya.min(yb), ya.max(yb));
                if ya.is_finite() && yb.is_finite() {
                    for yk in outer.kinks(ya, yb) {
                        if let Some(x) = preimage(inner, lo, hi, yk) {
                            v.push(x);
                        }
                    }
                }
                v
            }
            Segment::Product(fs) => fs.iter().flat_map(|f| f.kinks(lo, hi)).collect(),
            _ => vec![],
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// `∫_lo^hi f(x)·(alpha + beta·x) dx` over a finite interval inside the
    /// segment's domain.
    pub fn integrate_affine(&self, lo: f64, hi: f64, alpha: f64, beta: f64) -> Result<f64> {
        if hi < lo {
            return self.integrate_affine(hi, lo, alpha, beta).map(|v| -v);
        }
        if lo == hi {
            return Ok(0.0);
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Numeric(format!("integral of {} over unbounded [{lo}, {hi}]", self.kind_name())));
        }
        match self {
            Segment::Constant(c) => Ok(c * (alpha * (hi - lo) + 0.5 * beta * (hi * hi - lo * lo))),
            Segment::Affine { slope, intercept } => {
                Segment::Polynomial(vec![*intercept, *slope]).integrate_affine(lo, hi, alpha, beta)
            }
            Segment::Polynomial(c) => {
                // multiply by the weight and integrate term by term
                let mut prod = vec![0.0; c.len() + 1];
                for (i, &ci) in c.iter().enumerate() {
                    prod[i] += alpha * ci;
                    prod[i + 1] += beta * ci;
                }
                let anti: Vec<f64> =
                    std::iter::once(0.0).chain(prod.iter().enumerate().map(|(i, &p)| p / (i + 1) as f64)).collect();
                Ok(poly_eval(&anti, hi) - poly_eval(&anti, lo))
            }
            Segment::Power { scale, shift, exponent, offset } => {
                let y0 = (lo - shift).max(0.0);
                let y1 = (hi - shift).max(0.0);
                let w0 = alpha + beta * shift;
                let p = *exponent;
                let base = Segment::Constant(*offset).integrate_affine(lo, hi, alpha, beta)?;
                // the clamped region below the shift contributes 0^p
                let flat = if lo < *shift {
                    let top = hi.min(*shift);
                    let v0 = if p == 0.0 {
                        1.0
                    } else if p > 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    if v0 == 0.0 {
                        0.0
                    } else {
                        scale * v0 * (alpha * (top - lo) + 0.5 * beta * (top * top - lo * lo))
                    }
                } else {
                    0.0
                };
                let main = scale * (w0 * power_antideriv(y0, y1, p + 1.0) + beta * power_antideriv(y0, y1, p + 2.0));
                let v = base + flat + main;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Numeric(format!("power segment (x-{shift})^{p} is not integrable on [{lo}, {hi}]")))
                }
            }
            _ => {
                let mut pts = vec![lo];
                pts.extend(self.kinks(lo, hi));
                pts.push(hi);
                let mut total = 0.0;
                for w in pts.windows(2) {
                    total += quadrature::integrate(|x| self.eval(x) * (alpha + beta * x), w[0], w[1]).map_err(|e| {
                        Error::Numeric(format!("{} segment on [{}, {}]: {e}", self.kind_name(), w[0], w[1]))
                    })?;
                }
                Ok(total)
            }
        }
    }

    /// The inverse function, for a segment increasing on `[lo, hi]`.
    pub fn inverse(&self, lo: f64, hi: f64) -> Result<Segment> {
        match self {
            Segment::Constant(_) => Err(Error::Model("constant scale segment is not invertible".into())),
            Segment::Affine { slope, intercept } => {
                if *slope > 0.0 {
                    Ok(Segment::Affine { slope: 1.0 / slope, intercept: -intercept / slope })
                } else {
                    Err(Error::Model(format!("affine scale segment with slope {slope} is not increasing")))
                }
            }
            Segment::Power { scale, shift, exponent, offset } => {
                if *scale > 0.0 && *exponent > 0.0 {
                    Ok(Segment::Power {
                        scale: scale.powf(-1.0 / exponent),
                        shift: *offset,
                        exponent: 1.0 / exponent,
                        offset: *shift,
                    })
                } else {
                    Err(Error::Unsupported(format!(
                        "power segment with scale {scale} and exponent {exponent} has no increasing inverse"
                    )))
                }
            }
            Segment::Inverse { inner, .. } => Ok((**inner).clone()),
            Segment::Polynomial(_) | Segment::SvcDistanceIntegral { .. } => {
                Ok(Segment::Inverse { inner: Box::new(self.clone()), lo, hi })
            }
            other => Err(Error::Unsupported(format!("cannot invert a {} segment", other.kind_name()))),
        }
    }

    /// Points of `[lo, hi]` where the right derivative vanishes.
    pub fn d1_zero_set(&self, lo: f64, hi: f64) -> Result<BorelSetRepr> {
        let whole = || BorelSetRepr::from_interval(Interval::closed(lo, hi));
        match self {
            Segment::Constant(_) => Ok(whole()),
            Segment::Affine { slope, .. } => Ok(if *slope == 0.0 { whole() } else { BorelSetRepr::empty() }),
            Segment::Polynomial(c) => {
                let d = poly_deriv(c);
                if trim_poly(&d).is_empty() {
                    return Ok(whole());
                }
                Ok(BorelSetRepr::from_parts(vec![], poly_roots(&d, lo, hi)))
            }
            Segment::Power { scale, shift, exponent, .. } => {
                if *scale == 0.0 || *exponent == 0.0 {
                    Ok(whole())
                } else if *exponent > 1.0 && *shift >= lo && *shift <= hi {
                    let mut set = BorelSetRepr::point(*shift);
                    // the clamped region left of the shift is flat
                    if lo < *shift {
                        set = set.union(&BorelSetRepr::from_interval(Interval::closed(lo, *shift)));
                    }
                    Ok(set)
                } else if *shift > lo {
                    Ok(BorelSetRepr::from_interval(Interval::closed(lo, shift.min(hi))))
                } else {
                    Ok(BorelSetRepr::empty())
                }
            }
            Segment::SvcDistanceIntegral { svc, scale } => {
                if *scale == 0.0 {
                    Ok(whole())
                } else {
                    Ok(BorelSetRepr::from_svc(*svc).intersect(&whole()))
                }
            }
            Segment::Inverse { inner, .. } => {
                // derivative of an inverse vanishes only where the inner slope blows up
                match **inner {
                    Segment::Polynomial(_) | Segment::SvcDistanceIntegral { .. } => Ok(BorelSetRepr::empty()),
                    _ => Err(Error::Unsupported(format!("zero set of inverse {} segment", inner.kind_name()))),
                }
            }
            other => Err(Error::Unsupported(format!("no closed-form zero set for a {} segment", other.kind_name()))),
        }
    }

    /// Product with simplifications for constant factors.
    pub fn times(self, other: Segment) -> Segment {
        match (self, other) {
            (Segment::Constant(a), Segment::Constant(b)) => Segment::Constant(a * b),
            (Segment::Constant(c), Segment::Power { scale, shift, exponent, offset })
            | (Segment::Power { scale, shift, exponent, offset }, Segment::Constant(c))
                if offset == 0.0 =>
            {
                Segment::Power { scale: c * scale, shift, exponent, offset }
            }
            (Segment::Constant(c), Segment::Affine { slope, intercept })
            | (Segment::Affine { slope, intercept }, Segment::Constant(c)) => {
                Segment::Affine { slope: c * slope, intercept: c * intercept }
            }
            (Segment::Constant(c), Segment::Polynomial(p)) | (Segment::Polynomial(p), Segment::Constant(c)) => {
                Segment::Polynomial(p.into_iter().map(|v| c * v).collect())
            }
            (Segment::Product(mut a), Segment::Product(b)) => {
                a.extend(b);
                Segment::Product(a)
            }
            (Segment::Product(mut a), b) | (b, Segment::Product(mut a)) => {
                a.push(b);
                Segment::Product(a)
            }
            (a, b) => Segment::Product(vec![a, b]),
        }
    }

    /// `density(map(x))·map'(x)` with closed forms where available.
    pub fn pullback(density: &Segment, map: &Segment) -> Segment {
        match (density, map) {
            (Segment::Constant(c), Segment::Affine { slope, .. }) => Segment::Constant(c * slope),
            (Segment::Constant(c), Segment::Power { scale, shift, exponent, .. }) => {
                Segment::Power { scale: c * scale * exponent, shift: *shift, exponent: exponent - 1.0, offset: 0.0 }
            }
            (
                Segment::Power { scale: a1, shift: c1, exponent: p1, offset: o1 },
                Segment::Power { scale: a2, shift: c2, exponent: p2, offset: off2 },
            ) if *o1 == 0.0 && off2 == c1 => Segment::Power {
                scale: a1 * a2.powf(*p1) * a2 * p2,
                shift: *c2,
                exponent: p1 * p2 + p2 - 1.0,
                offset: 0.0,
            },
            (d, m) => Segment::Pullback { density: Box::new(d.clone()), map: Box::new(m.clone()) },
        }
    }

    /// `outer(inner(x))` with closed forms where available.
    pub fn compose(outer: &Segment, inner: &Segment) -> Segment {
        match (outer, inner) {
            (Segment::Constant(c), _) => Segment::Constant(*c),
            (o, Segment::Affine { slope, intercept }) if *slope == 1.0 && *intercept == 0.0 => o.clone(),
            (o, i) => Segment::Composed { outer: Box::new(o.clone()), inner: Box::new(i.clone()) },
        }
    }
}

fn numeric_d2(f: &Segment, x: f64) -> f64 {
    let h = 1e-5 * (1.0 + x.abs());
    (f.d1(x + h) - f.d1(x)) / h
}

/// `inner^{-1}(y)` by bisection on `[lo, hi]`, expanding infinite ends.
fn invert(inner: &Segment, lo: f64, hi: f64, y: f64) -> f64 {
    if !y.is_finite() {
        return y;
    }
    let mut a = lo;
    let mut b = hi;
    let mut step = 1.0;
    if !a.is_finite() {
        a = if b.is_finite() { b - 1.0 } else { -1.0 };
        while inner.eval(a) > y && step < 1e300 {
            a -= step;
            step *= 2.0;
        }
    }
    step = 1.0;
    if !b.is_finite() {
        b = a + 1.0;
        while inner.eval(b) < y && step < 1e300 {
            b += step;
            step *= 2.0;
        }
    }
    if inner.eval(a) >= y {
        return a;
    }
    if inner.eval(b) <= y {
        return b;
    }
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if inner.eval(m) < y {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// A point of `[lo, hi]` where the monotone `f` crosses `y`.
fn preimage(f: &Segment, lo: f64, hi: f64, y: f64) -> Option<f64> {
    let (fa, fb) = (f.eval(lo), f.eval(hi));
    if (fa - y) * (fb - y) > 0.0 {
        return None;
    }
    Some(bisect(|x| f.eval(x) - y, lo, hi))
}

/// Breakpoints `b_0 < … < b_n` (ends may be infinite) with one segment per
/// gap. Evaluation at an interior breakpoint uses the segment to its right.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFn {
    breaks: Vec<f64>,
    segments: Vec<Segment>,
}

impl PiecewiseFn {
    pub fn new(breaks: Vec<f64>, segments: Vec<Segment>) -> Result<Self> {
        if breaks.len() != segments.len() + 1 || segments.is_empty() {
            return Err(Error::Model(format!("{} breakpoints for {} segments", breaks.len(), segments.len())));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) || breaks.iter().any(|b| b.is_nan()) {
            return Err(Error::Model("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { breaks, segments })
    }

    pub fn single(lo: f64, hi: f64, seg: Segment) -> Self {
        Self { breaks: vec![lo, hi], segments: vec![seg] }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn lo(&self) -> f64 {
        self.breaks[0]
    }

    pub fn hi(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    /// Interior breakpoints.
    pub fn interior_breaks(&self) -> &[f64] {
        &self.breaks[1..self.breaks.len() - 1]
    }

    /// Index of the segment governing `x` from the right.
    pub fn index(&self, x: f64) -> usize {
        let i = self.breaks.partition_point(|&b| b <= x);
        i.saturating_sub(1).min(self.segments.len() - 1)
    }

    /// Index of the segment governing `x` from the left.
    pub fn index_left(&self, x: f64) -> usize {
        let i = self.breaks.partition_point(|&b| b < x);
        i.saturating_sub(1).min(self.segments.len() - 1)
    }

    pub fn segment_bounds(&self, i: usize) -> (f64, f64) {
        (self.breaks[i], self.breaks[i + 1])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.segments[self.index(x)].eval(x)
    }

    pub fn eval_left(&self, x: f64) -> f64 {
        self.segments[self.index_left(x)].eval(x)
    }

    pub fn d1_right(&self, x: f64) -> f64 {
        self.segments[self.index(x)].d1(x)
    }

    pub fn d1_left(&self, x: f64) -> f64 {
        let seg = &self.segments[self.index_left(x)];
        // left derivative inside a segment differs only at internal kinks
        match seg {
            Segment::SvcDistance { svc, scale } => {
                let eps = 1e-9 * (svc.hi - svc.lo);
                let d0 = svc.distance(x);
                let dl = svc.distance(x - eps);
                scale
                    * if d0 > dl {
                        1.0
                    } else if d0 < dl {
                        -1.0
                    } else {
                        0.0
                    }
            }
            _ => seg.d1(x),
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.segments[self.index(x)].d2(x)
    }

    /// Maps every segment, keeping the breakpoints.
    pub fn map_segments(&self, f: impl Fn(&Segment) -> Segment) -> Self {
        Self { breaks: self.breaks.clone(), segments: self.segments.iter().map(f).collect() }
    }

    /// Every non-smooth point in `(lo, hi)`: interior breakpoints and
    /// segment-internal kinks.
    pub fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.interior_breaks().iter().copied().filter(|&b| b > lo && b < hi).collect();
        for (i, seg) in self.segments.iter().enumerate() {
            let (a, b) = self.segment_bounds(i);
            let (a, b) = (a.max(lo), b.min(hi));
            if a < b {
                out.extend(seg.kinks(a, b));
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// `∫_lo^hi f(x)·(alpha + beta·x) dx`.
    pub fn integrate_affine(&self, lo: f64, hi: f64, alpha: f64, beta: f64) -> Result<f64> {
        if hi < lo {
            return self.integrate_affine(hi, lo, alpha, beta).map(|v| -v);
        }
        let mut total = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            let (a, b) = self.segment_bounds(i);
            let (a, b) = (a.max(lo), b.min(hi));
            if a < b {
                total += seg.integrate_affine(a, b, alpha, beta)?;
            }
        }
        Ok(total)
    }

    /// `∫_lo^hi f(x)·w(x) dx` by quadrature, split at all kinks.
    pub fn integrate_with<W: Fn(f64) -> f64>(&self, lo: f64, hi: f64, w: W) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let mut pts = vec![lo];
        pts.extend(self.kinks(lo, hi));
        pts.push(hi);
        let mut total = 0.0;
        for p in pts.windows(2) {
            let seg = &self.segments[self.index(0.5 * (p[0] + p[1]))];
            total += quadrature::integrate(|x| seg.eval(x) * w(x), p[0], p[1])?;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(scale: f64, shift: f64, exponent: f64, offset: f64) -> Segment {
        Segment::Power { scale, shift, exponent, offset }
    }

    #[test]
    fn power_inverse_round_trip() {
        let s = power(2.0, 1.0, 0.5, -3.0);
        let q = s.inverse(1.0, f64::INFINITY).unwrap();
        for &x in &[1.0, 1.5, 4.0, 100.0] {
            assert!((q.eval(s.eval(x)) - x).abs() < 1e-12 * x);
        }
    }

    #[test]
    fn decreasing_power_is_rejected() {
        let s = power(-1.0, 0.0, 2.0, 0.0);
        assert!(matches!(s.inverse(0.0, 1.0), Err(Error::Unsupported(_))));
        assert!(matches!(Segment::Constant(1.0).inverse(0.0, 1.0), Err(Error::Model(_))));
    }

    #[test]
    fn numeric_inverse_of_polynomial() {
        let p = Segment::Polynomial(vec![0.0, 1.0, 0.0, 1.0]);
        let q = p.inverse(f64::NEG_INFINITY, f64::INFINITY).unwrap();
        for &x in &[-3.0, -0.2, 0.0, 0.7, 5.0] {
            assert!((q.eval(p.eval(x)) - x).abs() < 1e-12 * (1.0 + x.abs()));
            assert!((q.d1(p.eval(x)) - 1.0 / (1.0 + 3.0 * x * x)).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_integrals_match_quadrature() {
        let cases = [
            Segment::Constant(2.5),
            Segment::Affine { slope: -1.0, intercept: 3.0 },
            Segment::Polynomial(vec![1.0, -2.0, 0.5]),
            power(1.5, 0.2, 0.7, 0.3),
            power(0.8, -1.0, -2.0, 0.0),
            power(0.8, -1.0, -1.0, 0.0),
            power(2.0, 0.0, -0.5, 0.0),
        ];
        for seg in &cases {
            let (lo, hi) = (0.3, 2.0);
            let exact = seg.integrate_affine(lo, hi, 0.7, -0.4).unwrap();
            let q = quadrature::integrate(|x| seg.eval(x) * (0.7 - 0.4 * x), lo, hi).unwrap();
            assert!((exact - q).abs() < 1e-11, "{seg:?}: {exact} vs {q}");
        }
        // integrable singularity at the shift
        let v = power(1.0, 0.0, -0.5, 0.0).integrate_affine(0.0, 4.0, 1.0, 0.0).unwrap();
        assert!((v - 4.0).abs() < 1e-14);
        assert!(power(1.0, 0.0, -1.5, 0.0).integrate_affine(0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn pullback_of_powers_simplifies() {
        // density 1/(4p) (y−1)^{1/p − 1} pulled back by q(u) = u^p + 1
        let p = 2.5;
        let d = power(1.0 / (4.0 * (1.0 - 1.0 / p)) / p * p / p, 1.0, 1.0 / p - 1.0, 0.0);
        let q = power(1.0, 0.0, p, 1.0);
        let pb = Segment::pullback(&d, &q);
        assert!(matches!(pb, Segment::Power { .. }));
        let generic = Segment::Pullback { density: Box::new(d), map: Box::new(q) };
        for &u in &[0.1, 0.5, 2.0] {
            assert!((pb.eval(u) - generic.eval(u)).abs() < 1e-12 * generic.eval(u).abs());
        }
    }

    #[test]
    fn polynomial_roots() {
        // (x−1)(x+2)(x−0.5)
        let c = [1.0, -2.5, 0.5, 1.0];
        let r = poly_roots(&c, f64::NEG_INFINITY, f64::INFINITY);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([-2.0, 0.5, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        // double root of x^2
        assert_eq!(poly_roots(&[0.0, 0.0, 1.0], -1.0, 1.0), vec![0.0]);
    }

    #[test]
    fn zero_sets() {
        let z = power(1.0, 0.0, 2.0, 1.0).d1_zero_set(0.0, f64::INFINITY).unwrap();
        assert_eq!(z.points(), &[0.0]);
        assert!(power(1.0, 0.0, 0.5, 0.0).d1_zero_set(0.0, 1.0).unwrap().is_empty());
        let svc = SvcSet::unit(2);
        let z = Segment::SvcDistanceIntegral { svc, scale: 1.0 }.d1_zero_set(-5.0, 5.0).unwrap();
        assert!((z.lebesgue() - 0.625).abs() < 1e-15);
        assert!(matches!(
            Segment::Pullback { density: Box::new(Segment::Constant(1.0)), map: Box::new(Segment::identity()) }
                .d1_zero_set(0.0, 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn piecewise_lookup_and_one_sided_derivatives() {
        let f = PiecewiseFn::new(
            vec![f64::NEG_INFINITY, 0.0, f64::INFINITY],
            vec![Segment::Affine { slope: 4.0, intercept: 0.0 }, Segment::Affine { slope: 2.0, intercept: 0.0 }],
        )
        .unwrap();
        assert_eq!(f.d1_right(0.0), 2.0);
        assert_eq!(f.d1_left(0.0), 4.0);
        assert_eq!(f.eval(-1.0), -4.0);
        assert!((f.integrate_affine(-1.0, 1.0, 1.0, 0.0).unwrap() + 1.0).abs() < 1e-15);
        assert!(PiecewiseFn::new(vec![1.0, 0.0], vec![Segment::Constant(1.0)]).is_err());
    }
}
