use crate::error::{Error, Result};

/// Largest SVC depth accepted by [`svc_set`].
pub const MAX_SVC_DEPTH: u32 = 30;
/// Largest SVC depth that set algebra will expand into explicit intervals.
pub const MAX_MATERIALIZE_DEPTH: u32 = 22;

/// An interval with independent endpoint closedness. Endpoints may be infinite
/// (an infinite endpoint is never "closed").
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: lo.is_finite(), hi_closed: hi.is_finite() }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: false, hi_closed: false }
    }

    /// `[lo, hi)`
    pub fn right_open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: lo.is_finite(), hi_closed: false }
    }

    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Self { lo, hi, lo_closed: lo_closed && lo.is_finite(), hi_closed: hi_closed && hi.is_finite() }
    }

    pub fn contains(&self, x: f64) -> bool {
        (x > self.lo || (self.lo_closed && x == self.lo)) && (x < self.hi || (self.hi_closed && x == self.hi))
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn length(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        Interval { lo, hi, lo_closed, hi_closed }
    }
}

/// Depth-`n` Smith–Volterra–Cantor set on the base interval `[lo, hi]`.
///
/// Stage `k` removes the open middle interval of relative length `4^-k` from
/// each of the `2^(k-1)` intervals retained after stage `k-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvcSet {
    pub depth: u32,
    pub lo: f64,
    pub hi: f64,
}

impl SvcSet {
    pub fn unit(depth: u32) -> Self {
        Self { depth, lo: 0.0, hi: 1.0 }
    }

    fn len(&self) -> f64 {
        self.hi - self.lo
    }

    /// Relative measure `1 - Σ_{k<=n} 2^(k-1) 4^(-k)`.
    pub fn relative_measure(depth: u32) -> f64 {
        let removed: f64 = (1..=depth).map(|k| 0.5f64.powi(k as i32 + 1)).sum();
        1.0 - removed
    }

    pub fn lebesgue(&self) -> f64 {
        self.len() * Self::relative_measure(self.depth)
    }

    fn gap(&self, stage: u32) -> f64 {
        self.len() * 0.25f64.powi(stage as i32)
    }

    pub fn contains(&self, x: f64) -> bool {
        if !(x >= self.lo && x <= self.hi) {
            return false;
        }
        let (mut a, mut b) = (self.lo, self.hi);
        for k in 1..=self.depth {
            let mid = 0.5 * (a + b);
            let g = 0.5 * self.gap(k);
            if x > mid - g && x < mid + g {
                return false;
            }
            if x <= mid - g {
                b = mid - g;
            } else {
                a = mid + g;
            }
        }
        true
    }

    /// Exact distance from `x` to the set.
    pub fn distance(&self, x: f64) -> f64 {
        if x <= self.lo {
            return self.lo - x;
        }
        if x >= self.hi {
            return x - self.hi;
        }
        let (mut a, mut b) = (self.lo, self.hi);
        for k in 1..=self.depth {
            let mid = 0.5 * (a + b);
            let g = 0.5 * self.gap(k);
            if x > mid - g && x < mid + g {
                return (x - (mid - g)).min(mid + g - x);
            }
            if x <= mid - g {
                b = mid - g;
            } else {
                a = mid + g;
            }
        }
        0.0
    }

    /// `∫_lo^x d(y, F) dy`, exact.
    pub fn distance_integral(&self, x: f64) -> f64 {
        if x <= self.lo {
            let d = self.lo - x;
            return -0.5 * d * d;
        }
        if x >= self.hi {
            let d = x - self.hi;
            return self.subtree_area(0) + 0.5 * d * d;
        }
        let (mut a, mut b) = (self.lo, self.hi);
        let mut acc = 0.0;
        for k in 1..=self.depth {
            let mid = 0.5 * (a + b);
            let g = 0.5 * self.gap(k);
            if x <= mid - g {
                b = mid - g;
                continue;
            }
            // x is past the left child; it contributes its whole subtree.
            acc += self.subtree_area(k);
            if x < mid {
                let d = x - (mid - g);
                return acc + 0.5 * d * d;
            }
            if x < mid + g {
                let d = mid + g - x;
                return acc + g * g - 0.5 * d * d;
            }
            acc += g * g;
            a = mid + g;
        }
        acc
    }

    /// Area under `d(., F)` over the gaps nested inside one retained interval
    /// of stage `k`.
    fn subtree_area(&self, k: u32) -> f64 {
        (k + 1..=self.depth)
            .map(|j| {
                let half = 0.5 * self.gap(j);
                2f64.powi((j - k - 1) as i32) * half * half
            })
            .sum()
    }

    /// Gap endpoints and gap midpoints in `(lo, hi)`: the points where
    /// `d(., F)` is not smooth.
    pub fn kinks_within(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.walk_kinks(self.lo, self.hi, 1, lo, hi, &mut out);
        for e in [self.lo, self.hi] {
            if e > lo && e < hi {
                out.push(e);
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn walk_kinks(&self, a: f64, b: f64, k: u32, lo: f64, hi: f64, out: &mut Vec<f64>) {
        if k > self.depth || b < lo || a > hi {
            return;
        }
        let mid = 0.5 * (a + b);
        let g = 0.5 * self.gap(k);
        for p in [mid - g, mid, mid + g] {
            if p > lo && p < hi {
                out.push(p);
            }
        }
        self.walk_kinks(a, mid - g, k + 1, lo, hi, out);
        self.walk_kinks(mid + g, b, k + 1, lo, hi, out);
    }

    /// Retained closed intervals in increasing order (`2^depth` of them).
    pub fn retained(&self) -> Vec<(f64, f64)> {
        let mut cur = vec![(self.lo, self.hi)];
        for k in 1..=self.depth {
            let g = 0.5 * self.gap(k);
            let mut next = Vec::with_capacity(cur.len() * 2);
            for (a, b) in cur {
                let mid = 0.5 * (a + b);
                next.push((a, mid - g));
                next.push((mid + g, b));
            }
            cur = next;
        }
        cur
    }

    /// Removed open intervals (gaps), in increasing order.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        let r = self.retained();
        r.windows(2).map(|w| (w[0].1, w[1].0)).collect()
    }
}

/// Finite union of intervals and points, optionally plus one SVC set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BorelSetRepr {
    intervals: Vec<Interval>,
    points: Vec<f64>,
    svc: Option<SvcSet>,
}

/// Depth-`n` SVC subset of `[0, 1]`.
pub fn svc_set(depth: u32) -> Result<BorelSetRepr> {
    if depth == 0 || depth > MAX_SVC_DEPTH {
        return Err(Error::Argument(format!("svc depth must be in 1..={MAX_SVC_DEPTH}, got {depth}")));
    }
    Ok(BorelSetRepr { intervals: vec![], points: vec![], svc: Some(SvcSet::unit(depth)) })
}

/// Distance from `x` to the closure of `set`.
pub fn distance_to_set(x: f64, set: &BorelSetRepr) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Argument("distance to the empty set".into()));
    }
    let mut d = f64::INFINITY;
    for iv in &set.intervals {
        let di = if x < iv.lo {
            iv.lo - x
        } else if x > iv.hi {
            x - iv.hi
        } else {
            0.0
        };
        d = d.min(di);
    }
    for &p in &set.points {
        d = d.min((x - p).abs());
    }
    if let Some(s) = &set.svc {
        d = d.min(s.distance(x));
    }
    Ok(d)
}

impl BorelSetRepr {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_interval(iv: Interval) -> Self {
        Self::from_parts(vec![iv], vec![])
    }

    pub fn point(x: f64) -> Self {
        Self::from_parts(vec![], vec![x])
    }

    pub fn from_svc(svc: SvcSet) -> Self {
        Self { intervals: vec![], points: vec![], svc: Some(svc) }
    }

    pub fn from_parts(intervals: Vec<Interval>, points: Vec<f64>) -> Self {
        let mut s = Self { intervals, points, svc: None };
        s.normalize();
        s
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn svc(&self) -> Option<&SvcSet> {
        self.svc.as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty() && self.points.is_empty() && self.svc.is_none()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
            || self.points.contains(&x)
            || self.svc.is_some_and(|s| s.contains(x))
    }

    pub fn lebesgue(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum::<f64>() + self.svc.map_or(0.0, |s| s.lebesgue())
    }

    /// Intervals (SVC expanded) and isolated points.
    pub fn components(&self) -> (Vec<Interval>, Vec<f64>) {
        let mut ivs = self.intervals.clone();
        if let Some(s) = &self.svc {
            assert!(
                s.depth <= MAX_MATERIALIZE_DEPTH,
                "svc depth {} too large to expand (max {MAX_MATERIALIZE_DEPTH})",
                s.depth
            );
            ivs.extend(s.retained().into_iter().map(|(a, b)| Interval::closed(a, b)));
            ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        }
        (ivs, self.points.clone())
    }

    /// Finite endpoints of every component, sorted.
    pub fn boundary_points(&self) -> Vec<f64> {
        let (ivs, pts) = self.components();
        let mut out: Vec<f64> = ivs.iter().flat_map(|iv| [iv.lo, iv.hi]).chain(pts).filter(|x| x.is_finite()).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn materialized(&self) -> Self {
        if self.svc.is_none() {
            return self.clone();
        }
        let (ivs, pts) = self.components();
        Self::from_parts(ivs, pts)
    }

    fn normalize(&mut self) {
        self.intervals.retain(|iv| !iv.is_empty());
        self.intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
        let mut merged: Vec<Interval> = Vec::with_capacity(self.intervals.len());
        for iv in self.intervals.drain(..) {
            if let Some(last) = merged.last_mut() {
                let touches = iv.lo < last.hi || (iv.lo == last.hi && (iv.lo_closed || last.hi_closed));
                if touches {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                        last.hi_closed = iv.hi_closed;
                    } else if iv.hi == last.hi {
                        last.hi_closed |= iv.hi_closed;
                    }
                    continue;
                }
            }
            merged.push(iv);
        }
        // A point sitting on an open endpoint closes it.
        self.points.sort_by(f64::total_cmp);
        self.points.dedup();
        let mut kept = Vec::new();
        for &p in &self.points {
            let mut absorbed = false;
            for iv in merged.iter_mut() {
                if iv.contains(p) {
                    absorbed = true;
                    break;
                }
                if p == iv.lo && p.is_finite() {
                    iv.lo_closed = true;
                    absorbed = true;
                    break;
                }
                if p == iv.hi && p.is_finite() {
                    iv.hi_closed = true;
                    absorbed = true;
                    break;
                }
            }
            if !absorbed && !self.svc.is_some_and(|s| s.contains(p)) {
                kept.push(p);
            }
        }
        // Closing endpoints can make neighbours touch.
        let mut out: Vec<Interval> = Vec::with_capacity(merged.len());
        for iv in merged {
            if let Some(last) = out.last_mut() {
                if iv.lo == last.hi && (iv.lo_closed || last.hi_closed) {
                    last.hi = iv.hi;
                    last.hi_closed = iv.hi_closed;
                    continue;
                }
            }
            out.push(iv);
        }
        self.intervals = out;
        self.points = kept;
    }

    fn svc_overlaps(&self, other: &Self) -> bool {
        let Some(s) = &self.svc else { return false };
        let base = Interval::closed(s.lo, s.hi);
        other.intervals.iter().any(|iv| !iv.intersect(&base).is_empty())
            || other.points.iter().any(|&p| base.contains(p))
            || other.svc.is_some()
    }

    pub fn union(&self, other: &Self) -> Self {
        if self.svc.is_some() && other.svc.is_none() && !self.svc_overlaps(other) {
            let mut s = Self {
                intervals: [self.intervals.clone(), other.intervals.clone()].concat(),
                points: [self.points.clone(), other.points.clone()].concat(),
                svc: self.svc,
            };
            s.normalize();
            return s;
        }
        if other.svc.is_some() && self.svc.is_none() {
            return other.union(self);
        }
        let a = self.materialized();
        let b = other.materialized();
        Self::from_parts([a.intervals, b.intervals].concat(), [a.points, b.points].concat())
    }

    pub fn intersect(&self, other: &Self) -> Self {
        // An SVC clipped by an interval containing its whole base is unchanged.
        if let (Some(s), None) = (&self.svc, &other.svc) {
            let base = Interval::closed(s.lo, s.hi);
            if self.intervals.is_empty()
                && self.points.is_empty()
                && other.intervals.iter().any(|iv| iv.intersect(&base) == base)
            {
                return self.clone();
            }
        }
        if other.svc.is_some() && self.svc.is_none() {
            return other.intersect(self);
        }
        let a = self.materialized();
        let b = other.materialized();
        let mut ivs = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.intervals.len() && j < b.intervals.len() {
            let x = a.intervals[i].intersect(&b.intervals[j]);
            if !x.is_empty() {
                ivs.push(x);
            }
            if a.intervals[i].hi < b.intervals[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        let mut pts: Vec<f64> = a.points.iter().copied().filter(|&p| b.contains(p)).collect();
        pts.extend(b.points.iter().copied().filter(|&p| a.contains(p)));
        // Degenerate [x, x] intersections become points.
        let (degenerate, proper): (Vec<Interval>, Vec<Interval>) = ivs.into_iter().partition(|iv| iv.lo == iv.hi);
        pts.extend(degenerate.iter().map(|iv| iv.lo));
        Self::from_parts(proper, pts)
    }

    pub fn difference(&self, other: &Self) -> Self {
        let a = self.materialized();
        let b = other.materialized();
        let mut ivs = a.intervals.clone();
        for cut in &b.intervals {
            let mut next = Vec::with_capacity(ivs.len() + 1);
            for iv in ivs {
                let x = iv.intersect(cut);
                if x.is_empty() {
                    next.push(iv);
                    continue;
                }
                let left = Interval::new(iv.lo, x.lo, iv.lo_closed, !x.lo_closed);
                let right = Interval::new(x.hi, iv.hi, !x.hi_closed, iv.hi_closed);
                for piece in [left, right] {
                    if !piece.is_empty() {
                        next.push(piece);
                    }
                }
            }
            ivs = next;
        }
        for &p in &b.points {
            let mut next = Vec::with_capacity(ivs.len() + 1);
            for iv in ivs {
                if iv.contains(p) {
                    let left = Interval::new(iv.lo, p, iv.lo_closed, false);
                    let right = Interval::new(p, iv.hi, false, iv.hi_closed);
                    for piece in [left, right] {
                        if !piece.is_empty() {
                            next.push(piece);
                        }
                    }
                } else {
                    next.push(iv);
                }
            }
            ivs = next;
        }
        let mut degenerate = Vec::new();
        ivs.retain(|iv| {
            if iv.lo == iv.hi {
                degenerate.push(iv.lo);
                false
            } else {
                true
            }
        });
        let mut pts: Vec<f64> = a.points.iter().copied().filter(|&p| !b.contains(p)).collect();
        pts.extend(degenerate);
        Self::from_parts(ivs, pts)
    }

    /// Restriction to `[lo, hi]`.
    pub fn clip(&self, lo: f64, hi: f64) -> Self {
        self.intersect(&Self::from_interval(Interval::closed(lo, hi)))
    }

    /// The components (SVC expanded) meeting `(lo, hi)`, clipped to `[lo, hi]`.
    pub fn pieces_within(&self, lo: f64, hi: f64) -> (Vec<Interval>, Vec<f64>) {
        let window = Interval::closed(lo, hi);
        let mut ivs = Vec::new();
        let mut scan = |iv: Interval| {
            let x = iv.intersect(&window);
            if !x.is_empty() && x.lo < x.hi {
                ivs.push(x);
            }
        };
        for iv in &self.intervals {
            scan(*iv);
        }
        if let Some(s) = &self.svc {
            if s.hi > lo && s.lo < hi {
                if s.depth <= MAX_MATERIALIZE_DEPTH {
                    for (a, b) in s.retained() {
                        if b > lo && a < hi {
                            scan(Interval::closed(a, b));
                        }
                    }
                } else {
                    panic!("svc depth {} too large to expand", s.depth);
                }
            }
        }
        ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let pts = self.points.iter().copied().filter(|&p| p >= lo && p <= hi).collect();
        (ivs, pts)
    }
}
