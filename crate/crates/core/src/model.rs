//! Diffusion specifications and their natural-scale form.

use crate::error::{Error, Result};
use crate::measures::{BorelSetRepr, Interval};
use crate::piecewise::{PiecewiseFn, Segment};
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    Absorbing,
    Reflecting,
}

/// Endpoint of the state space. `behavior` is `None` exactly when the
/// endpoint is not part of the state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundarySpec {
    pub side: Side,
    pub behavior: Option<Behavior>,
}

impl BoundarySpec {
    pub fn excluded(side: Side) -> Self {
        Self { side, behavior: None }
    }

    pub fn absorbing(side: Side) -> Self {
        Self { side, behavior: Some(Behavior::Absorbing) }
    }

    pub fn reflecting(side: Side) -> Self {
        Self { side, behavior: Some(Behavior::Reflecting) }
    }

    pub fn included(&self) -> bool {
        self.behavior.is_some()
    }

    pub fn is_absorbing(&self) -> bool {
        self.behavior == Some(Behavior::Absorbing)
    }

    pub fn is_reflecting(&self) -> bool {
        self.behavior == Some(Behavior::Reflecting)
    }
}

/// Reference measure for a speed density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityBase {
    /// `m(dy) = g(y) dy`
    Lebesgue,
    /// `m(dy) = g(y) ds(y)`
    Scale,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureRepr {
    pub density: PiecewiseFn,
    pub base: DensityBase,
    pub atoms: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSpec {
    pub left: f64,
    pub right: f64,
    pub left_bc: BoundarySpec,
    pub right_bc: BoundarySpec,
    pub scale: PiecewiseFn,
    pub speed: MeasureRepr,
    pub start: f64,
    pub rate: f64,
}

/// The diffusion `U = s(Y)` on `E = s(J)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalScaleModel {
    lo: f64,
    hi: f64,
    left_bc: BoundarySpec,
    right_bc: BoundarySpec,
    q: PiecewiseFn,
    m_ac: PiecewiseFn,
    m_atoms: Vec<(f64, f64)>,
    q_second_atoms: Vec<(f64, f64)>,
    start: f64,
    rate: f64,
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())))
}

impl NaturalScaleModel {
    /// Builds the model as given; kinks of `q` are read off its breakpoints.
    /// No structural checks are made here, see [`validate`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lo: f64,
        hi: f64,
        left_bc: BoundarySpec,
        right_bc: BoundarySpec,
        q: PiecewiseFn,
        m_ac: PiecewiseFn,
        m_atoms: Vec<(f64, f64)>,
        start: f64,
        rate: f64,
    ) -> Self {
        let mut kinks = Vec::new();
        for &b in q.interior_breaks() {
            if b > lo && b < hi {
                let (r, l) = (q.d1_right(b), q.d1_left(b));
                let jump = r - l;
                if jump.abs() > 1e-12 * r.abs().max(l.abs()) {
                    kinks.push((b, jump));
                }
            }
        }
        let mut m_atoms: Vec<(f64, f64)> = m_atoms.into_iter().filter(|a| a.1 != 0.0).collect();
        m_atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { lo, hi, left_bc, right_bc, q, m_ac, m_atoms, q_second_atoms: kinks, start, rate }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn left_bc(&self) -> BoundarySpec {
        self.left_bc
    }

    pub fn right_bc(&self) -> BoundarySpec {
        self.right_bc
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn with_rate(&self, rate: f64) -> Self {
        Self { rate, ..self.clone() }
    }

    pub fn q_fn(&self) -> &PiecewiseFn {
        &self.q
    }

    pub fn m_ac_fn(&self) -> &PiecewiseFn {
        &self.m_ac
    }

    pub fn m_atoms(&self) -> &[(f64, f64)] {
        &self.m_atoms
    }

    pub fn q_second_atoms(&self) -> &[(f64, f64)] {
        &self.q_second_atoms
    }

    pub fn domain(&self) -> Interval {
        Interval::new(self.lo, self.hi, self.left_bc.included(), self.right_bc.included())
    }

    pub fn interior(&self) -> Interval {
        Interval::open(self.lo, self.hi)
    }

    pub fn is_interior(&self, u: f64) -> bool {
        u > self.lo && u < self.hi
    }

    pub fn q(&self, u: f64) -> f64 {
        self.q.eval(u)
    }

    pub fn q_prime_right(&self, u: f64) -> f64 {
        self.q.d1_right(u)
    }

    pub fn q_prime_left(&self, u: f64) -> f64 {
        self.q.d1_left(u)
    }

    /// Density of the absolutely continuous part of `q''`.
    pub fn q_second_ac(&self, u: f64) -> f64 {
        self.q.d2(u)
    }

    pub fn q_second_atom_at(&self, u: f64) -> f64 {
        self.q_second_atoms.iter().find(|a| a.0 == u).map_or(0.0, |a| a.1)
    }

    pub fn m_density(&self, u: f64) -> f64 {
        self.m_ac.eval(u)
    }

    pub fn m_atom_at(&self, u: f64) -> f64 {
        self.m_atoms.iter().find(|a| a.0 == u).map_or(0.0, |a| a.1)
    }

    /// `∫_a^b (alpha + beta·y) m_ac(dy)`.
    pub fn m_ac_affine(&self, a: f64, b: f64, alpha: f64, beta: f64) -> Result<f64> {
        self.m_ac.integrate_affine(a, b, alpha, beta)
    }

    /// `|q''|([a, b])`: density part by quadrature plus kinks.
    pub fn q_second_variation(&self, a: f64, b: f64) -> Result<f64> {
        let mut pts = vec![a];
        pts.extend(self.q.kinks(a, b));
        pts.push(b);
        let mut ac = 0.0;
        for w in pts.windows(2) {
            ac += quadrature::integrate(|x| self.q.d2(x).abs(), w[0], w[1])?;
        }
        let si: f64 = self.q_second_atoms.iter().filter(|k| k.0 >= a && k.0 <= b).map(|k| k.1.abs()).sum();
        Ok(ac + si)
    }

    /// Right-continuous zero set of `q'` on the open interior.
    pub fn interior_zero_set(&self) -> Result<BorelSetRepr> {
        let mut set = BorelSetRepr::empty();
        for (i, seg) in self.q.segments().iter().enumerate() {
            let (a, b) = self.q.segment_bounds(i);
            let (a, b) = (a.max(self.lo), b.min(self.hi));
            if a >= b {
                continue;
            }
            let mut z = seg.d1_zero_set(a, b)?;
            // the right end belongs to the next segment's right derivative
            if b < self.hi {
                z = z.difference(&BorelSetRepr::point(b));
            }
            set = set.union(&z);
        }
        Ok(set.intersect(&BorelSetRepr::from_interval(self.interior())))
    }
}

/// `{q' = 0}`: the interior zero set of `q'_+`, plus each included endpoint
/// whose inward derivative vanishes.
pub fn zero_set(model: &NaturalScaleModel) -> Result<BorelSetRepr> {
    let mut set = model.interior_zero_set()?;
    if model.left_bc.included() && model.q_prime_right(model.lo) == 0.0 {
        set = set.union(&BorelSetRepr::point(model.lo));
    }
    if model.right_bc.included() && model.q_prime_left(model.hi) == 0.0 {
        set = set.union(&BorelSetRepr::point(model.hi));
    }
    Ok(set)
}

/// Converts a specification to natural scale.
pub fn to_natural_scale(spec: &DiffusionSpec) -> Result<NaturalScaleModel> {
    let (l, r) = (spec.left, spec.right);
    if !(l < r) {
        return Err(Error::Model(format!("empty state space [{l}, {r}]")));
    }
    for (bc, x) in [(spec.left_bc, l), (spec.right_bc, r)] {
        if bc.included() && !x.is_finite() {
            return Err(Error::Model(format!("infinite endpoint {x} cannot be included")));
        }
    }
    if spec.scale.lo() > l || spec.scale.hi() < r {
        return Err(Error::Model(format!(
            "scale defined on [{}, {}] does not cover the state space [{l}, {r}]",
            spec.scale.lo(),
            spec.scale.hi()
        )));
    }
    if spec.speed.density.lo() > l || spec.speed.density.hi() < r {
        return Err(Error::Model("speed density does not cover the state space".into()));
    }
    check_start(spec.start, l, r, spec.left_bc, spec.right_bc)?;
    for &(y, w) in &spec.speed.atoms {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::Model(format!("speed atom at {y} has mass {w}; masses must be positive")));
        }
        let at_end = |x: f64, bc: BoundarySpec| y == x && bc.included();
        let interior = y > l && y < r;
        if at_end(l, spec.left_bc) || at_end(r, spec.right_bc) {
            let bc = if y == l { spec.left_bc } else { spec.right_bc };
            if bc.is_absorbing() {
                return Err(Error::Model(format!("speed atom at absorbing endpoint {y}")));
            }
        } else if !interior {
            return Err(Error::Model(format!("speed atom at {y} lies outside the state space")));
        }
    }

    // pieces of the scale inside [l, r], inverted one at a time
    let mut u_breaks = Vec::new();
    let mut q_segs = Vec::new();
    let mut y_pieces = Vec::new();
    for (i, seg) in spec.scale.segments().iter().enumerate() {
        let (a, b) = spec.scale.segment_bounds(i);
        let (ya, yb) = (a.max(l), b.min(r));
        if ya >= yb {
            continue;
        }
        let (ua, ub) = (seg.eval(ya), seg.eval(yb));
        if let Some(&prev) = u_breaks.last() {
            if !close(prev, ua) {
                return Err(Error::Model(format!("scale is discontinuous at {ya}: {prev} vs {ua}")));
            }
        } else {
            u_breaks.push(ua);
        }
        if !(ub > ua) {
            return Err(Error::Model(format!("{} scale segment on [{ya}, {yb}] is not increasing", seg.kind_name())));
        }
        q_segs.push(seg.inverse(ya, yb).map_err(|e| name_segment(e, i, seg))?);
        u_breaks.push(ub);
        y_pieces.push((ya, yb));
    }
    let q = PiecewiseFn::new(u_breaks.clone(), q_segs)?;
    let s = |y: f64| spec.scale.eval(y);

    // refine at the speed breakpoints and transport the density
    let mut fine: Vec<f64> = u_breaks.clone();
    for &yb in spec.speed.density.interior_breaks() {
        if yb > l && yb < r {
            fine.push(s(yb));
        }
    }
    fine.sort_by(f64::total_cmp);
    fine.dedup_by(|a, b| close(*a, *b));
    let mut m_segs = Vec::with_capacity(fine.len() - 1);
    for w in fine.windows(2) {
        let mid = mid_point(w[0], w[1]);
        let qi = q.index(mid);
        let qseg = &q.segments()[qi];
        let y_mid = qseg.eval(mid);
        let dseg = &spec.speed.density.segments()[spec.speed.density.index(y_mid)];
        m_segs.push(match spec.speed.base {
            DensityBase::Lebesgue => Segment::pullback(dseg, qseg),
            DensityBase::Scale => Segment::compose(dseg, qseg),
        });
    }
    let m_ac = PiecewiseFn::new(fine, m_segs)?;
    let m_atoms = spec.speed.atoms.iter().map(|&(y, w)| (s(y), w)).collect();
    let lo = *u_breaks.first().unwrap();
    let hi = *u_breaks.last().unwrap();
    Ok(NaturalScaleModel::new(lo, hi, spec.left_bc, spec.right_bc, q, m_ac, m_atoms, s(spec.start), spec.rate))
}

fn name_segment(e: Error, i: usize, seg: &Segment) -> Error {
    match e {
        Error::Unsupported(m) => Error::Unsupported(format!("scale segment {i} ({}): {m}", seg.kind_name())),
        Error::Model(m) => Error::Model(format!("scale segment {i} ({}): {m}", seg.kind_name())),
        other => other,
    }
}

/// A representative interior point of `(a, b)`, finite even for infinite ends.
pub(crate) fn mid_point(a: f64, b: f64) -> f64 {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => 0.5 * (a + b),
        (true, false) => a + 1.0,
        (false, true) => b - 1.0,
        (false, false) => 0.0,
    }
}

fn check_start(x0: f64, l: f64, r: f64, lb: BoundarySpec, rb: BoundarySpec) -> Result<()> {
    if x0 > l && x0 < r {
        return Ok(());
    }
    if (x0 == l && lb.is_reflecting()) || (x0 == r && rb.is_reflecting()) {
        return Ok(());
    }
    Err(Error::Model(format!("start {x0} must be interior or a reflecting endpoint of [{l}, {r}]")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The measured quantity behind the verdict.
    pub value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, passed: bool, value: f64, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, value, detail: detail.into() });
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

const VALIDATION_SAMPLES: usize = 1000;
/// Half-width of the window used to sample unbounded domains.
pub const WINDOW: f64 = 50.0;

/// Sample points covering the domain (clipped to the window around `u0`)
/// plus all breakpoints.
fn sample_points(model: &NaturalScaleModel) -> Vec<f64> {
    let a = model.lo.max(model.start - WINDOW);
    let b = model.hi.min(model.start + WINDOW);
    let mut pts: Vec<f64> =
        (0..VALIDATION_SAMPLES).map(|k| a + (b - a) * (k as f64 + 0.5) / VALIDATION_SAMPLES as f64).collect();
    pts.extend(model.q.interior_breaks().iter().copied().filter(|&x| x > a && x < b));
    pts.extend(model.m_ac.interior_breaks().iter().copied().filter(|&x| x > a && x < b));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Flats of `q` are tolerated inside zero sets carried by a distance-integral
/// segment, the finite-depth stand-in for a set with empty interior.
fn flat_allowed(model: &NaturalScaleModel, a: f64, b: f64) -> bool {
    let seg = &model.q.segments()[model.q.index(mid_point(a, b))];
    match seg {
        Segment::SvcDistanceIntegral { svc, .. } => {
            let mid = 0.5 * (a + b);
            svc.contains(a) && svc.contains(b) && svc.contains(mid)
        }
        _ => false,
    }
}

/// Checks the structural assumptions on a natural-scale model.
pub fn validate(model: &NaturalScaleModel) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let pts = sample_points(model);

    let min_slope =
        pts.iter().flat_map(|&u| [model.q_prime_right(u), model.q_prime_left(u)]).fold(f64::INFINITY, f64::min);
    rep.push("q_prime_nonnegative", min_slope >= 0.0, min_slope, "min of q'_± over samples and breakpoints");

    let mut worst_gap = f64::INFINITY;
    let mut bad_at = f64::NAN;
    for w in pts.windows(2) {
        let d = model.q(w[1]) - model.q(w[0]);
        if d <= 0.0 && !flat_allowed(model, w[0], w[1]) && d < worst_gap {
            worst_gap = d;
            bad_at = w[0];
        }
    }
    let inc = !(worst_gap <= 0.0);
    rep.push(
        "q_strictly_increasing",
        inc,
        if inc { 0.0 } else { worst_gap },
        if inc { "ok".to_string() } else { format!("q fails to increase after {bad_at}") },
    );

    let mut kink_err: f64 = 0.0;
    for &b in model.q.interior_breaks() {
        if model.is_interior(b) {
            let jump = model.q_prime_right(b) - model.q_prime_left(b);
            kink_err = kink_err.max((jump - model.q_second_atom_at(b)).abs());
        }
    }
    rep.push("kink_bookkeeping", kink_err <= 1e-12, kink_err, "max |q'_+ − q'_− − q''({a})| at breakpoints");

    let mut min_cell = f64::INFINITY;
    let mut min_density = f64::INFINITY;
    let mut speed_ok = true;
    for w in pts.windows(2) {
        let mass = model.m_ac_affine(w[0], w[1], 1.0, 0.0).unwrap_or(f64::NAN)
            + model.m_atoms.iter().filter(|a| a.0 >= w[0] && a.0 < w[1]).map(|a| a.1).sum::<f64>();
        if !(mass > 0.0 && mass.is_finite()) {
            speed_ok = false;
        }
        min_cell = min_cell.min(mass);
        min_density = min_density.min(model.m_density(0.5 * (w[0] + w[1])));
    }
    rep.push(
        "speed_locally_finite_positive",
        speed_ok && min_density >= 0.0,
        min_cell,
        "min speed mass over sample cells",
    );

    let start_ok = check_start(model.start, model.lo, model.hi, model.left_bc, model.right_bc).is_ok();
    rep.push("start_admissible", start_ok, model.start, "start is interior or a reflecting endpoint");

    for (bc, e, inward) in [(model.left_bc, model.lo, 1.0), (model.right_bc, model.hi, -1.0)] {
        let side = if bc.side == Side::Left { "left" } else { "right" };
        let z = near_point(model, e, inward);
        let (a, b) = if inward > 0.0 { (e, z) } else { (z, e) };
        match bc.behavior {
            Some(Behavior::Absorbing) => {
                let v = boundary_weighted_variation(model, e, a, b);
                let ok = matches!(v, Ok(x) if x.is_finite());
                rep.push(
                    &format!("absorbing_integrability_{side}"),
                    ok,
                    v.clone().unwrap_or(f64::INFINITY),
                    format!("∫ |x − e| |q''|(dx) over [{a}, {b}]"),
                );
            }
            Some(Behavior::Reflecting) => {
                let v = model.q_second_variation(a, b);
                let ok = matches!(v, Ok(x) if x.is_finite());
                rep.push(
                    &format!("reflecting_finiteness_{side}"),
                    ok,
                    v.clone().unwrap_or(f64::INFINITY),
                    format!("|q''| over [{a}, {b}]"),
                );
            }
            None => {}
        }
    }
    rep
}

/// An interior point at natural-scale distance at most 1 from endpoint `e`.
fn near_point(model: &NaturalScaleModel, e: f64, inward: f64) -> f64 {
    let z = e + inward;
    if model.is_interior(z) {
        z
    } else {
        mid_point(model.lo, model.hi)
    }
}

fn boundary_weighted_variation(model: &NaturalScaleModel, e: f64, a: f64, b: f64) -> Result<f64> {
    let mut pts = vec![a];
    pts.extend(model.q.kinks(a, b));
    pts.push(b);
    let mut t = 0.0;
    for w in pts.windows(2) {
        t += quadrature::integrate(|x| (x - e).abs() * model.q.d2(x).abs(), w[0], w[1])?;
    }
    let si: f64 =
        model.q_second_atoms.iter().filter(|k| k.0 >= a && k.0 <= b).map(|k| (k.0 - e).abs() * k.1.abs()).sum();
    Ok(t + si)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brownian() -> DiffusionSpec {
        DiffusionSpec {
            left: f64::NEG_INFINITY,
            right: f64::INFINITY,
            left_bc: BoundarySpec::excluded(Side::Left),
            right_bc: BoundarySpec::excluded(Side::Right),
            scale: PiecewiseFn::single(f64::NEG_INFINITY, f64::INFINITY, Segment::identity()),
            speed: MeasureRepr {
                density: PiecewiseFn::single(f64::NEG_INFINITY, f64::INFINITY, Segment::Constant(1.0)),
                base: DensityBase::Lebesgue,
                atoms: vec![],
            },
            start: 0.0,
            rate: 0.0,
        }
    }

    #[test]
    fn identity_scale_is_identity() {
        let m = to_natural_scale(&brownian()).unwrap();
        for &u in &[-3.0, 0.0, 2.5] {
            assert_eq!(m.q(u), u);
            assert_eq!(m.q_prime_right(u), 1.0);
            assert_eq!(m.m_density(u), 1.0);
        }
        assert!(m.m_atoms().is_empty());
        assert!(validate(&m).all_passed());
        assert!(zero_set(&m).unwrap().is_empty());
    }

    #[test]
    fn shifted_square_root_scale() {
        // s(x) = (x − 1)^{1/2} on [1, ∞)
        let spec = DiffusionSpec {
            left: 1.0,
            right: f64::INFINITY,
            left_bc: BoundarySpec::reflecting(Side::Left),
            right_bc: BoundarySpec::excluded(Side::Right),
            scale: PiecewiseFn::single(
                1.0,
                f64::INFINITY,
                Segment::Power { scale: 1.0, shift: 1.0, exponent: 0.5, offset: 0.0 },
            ),
            speed: MeasureRepr {
                density: PiecewiseFn::single(
                    1.0,
                    f64::INFINITY,
                    Segment::Power { scale: 0.5, shift: 1.0, exponent: -0.5, offset: 0.0 },
                ),
                base: DensityBase::Lebesgue,
                atoms: vec![(1.0, 0.4)],
            },
            start: 2.0,
            rate: 0.1,
        };
        let m = to_natural_scale(&spec).unwrap();
        assert_eq!(m.lo(), 0.0);
        assert!((m.q(1.5) - 3.25).abs() < 1e-14);
        assert_eq!(m.q_prime_right(0.0), 0.0);
        assert_eq!(m.m_atoms(), &[(0.0, 0.4)]);
        // density 1/2 (y−1)^{−1/2} under y = u² + 1 is constant 1
        assert!((m.m_density(0.7) - 1.0).abs() < 1e-14);
        let z = zero_set(&m).unwrap();
        assert_eq!(z.points(), &[0.0]);
        assert!(m.interior_zero_set().unwrap().is_empty());
    }

    #[test]
    fn sticky_point_carries_over() {
        let mut spec = brownian();
        spec.speed.atoms = vec![(2.0, 3.0)];
        let m = to_natural_scale(&spec).unwrap();
        assert_eq!(m.m_atoms(), &[(2.0, 3.0)]);
        assert_eq!(m.m_density(2.0), 1.0);
    }

    #[test]
    fn kinks_recorded() {
        let mut spec = brownian();
        spec.scale = PiecewiseFn::new(
            vec![f64::NEG_INFINITY, 0.0, f64::INFINITY],
            vec![Segment::Affine { slope: 0.75, intercept: 0.0 }, Segment::Affine { slope: 0.25, intercept: 0.0 }],
        )
        .unwrap();
        let m = to_natural_scale(&spec).unwrap();
        let c = m.q_second_atom_at(0.0);
        assert!((c - (4.0 - 4.0 / 3.0)).abs() < 1e-14);
        assert!(validate(&m).all_passed());
    }

    #[test]
    fn corrupt_slope_fails_validation() {
        let q = PiecewiseFn::new(
            vec![f64::NEG_INFINITY, 0.0, f64::INFINITY],
            vec![Segment::identity(), Segment::Affine { slope: -1.0, intercept: 0.0 }],
        )
        .unwrap();
        let m_ac = PiecewiseFn::single(f64::NEG_INFINITY, f64::INFINITY, Segment::Constant(1.0));
        let m = NaturalScaleModel::new(
            f64::NEG_INFINITY,
            f64::INFINITY,
            BoundarySpec::excluded(Side::Left),
            BoundarySpec::excluded(Side::Right),
            q,
            m_ac,
            vec![],
            -1.0,
            0.0,
        );
        let rep = validate(&m);
        assert!(!rep.get("q_prime_nonnegative").unwrap().passed);
        assert!(!rep.all_passed());
    }

    #[test]
    fn bad_inputs_rejected() {
        let mut spec = brownian();
        spec.scale = PiecewiseFn::single(f64::NEG_INFINITY, f64::INFINITY, Segment::Constant(1.0));
        assert!(matches!(to_natural_scale(&spec), Err(Error::Model(_))));

        let mut spec = brownian();
        spec.left = 0.0;
        spec.left_bc = BoundarySpec::absorbing(Side::Left);
        spec.start = 0.0;
        assert!(to_natural_scale(&spec).is_err());
        spec.start = 1.0;
        spec.speed.atoms = vec![(0.0, 1.0)];
        assert!(to_natural_scale(&spec).is_err());

        let mut spec = brownian();
        spec.scale = PiecewiseFn::single(
            f64::NEG_INFINITY,
            f64::INFINITY,
            Segment::Composed { outer: Box::new(Segment::identity()), inner: Box::new(Segment::identity()) },
        );
        let err = to_natural_scale(&spec).unwrap_err();
        assert!(matches!(&err, Error::Unsupported(m) if m.contains("scale segment 0")), "{err}");
    }
}
