//! The auxiliary measure ν, the canonical strategies and the market verdicts.

use crate::error::{Error, Result};
use crate::measures::signed::positive_runs;
use crate::measures::{jordan_hahn, AcPart, BorelSetRepr, Interval, JordanHahn, SignedMeasureRepr};
use crate::model::{zero_set, NaturalScaleModel, WINDOW};
use crate::piecewise::{PiecewiseFn, Segment};

/// Atoms whose mass is this small relative to their largest contribution are
/// treated as exact cancellations.
const CANCEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct NuBundle {
    pub nu: SignedMeasureRepr,
    pub hahn: JordanHahn,
    /// Interior atom locations of ν.
    pub n_si: BorelSetRepr,
    /// Set carrying ν on which the canonical strategy trades.
    pub n_qprime0: BorelSetRepr,
    /// `{q' = 0}` including flat included endpoints.
    pub zero: BorelSetRepr,
    pub interior_zero: BorelSetRepr,
    /// The density part was cut to the window around the start.
    pub truncated: bool,
}

fn atom_sum(terms: &[f64]) -> f64 {
    let s: f64 = terms.iter().sum();
    let big = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if s.abs() <= CANCEL_TOL * big {
        0.0
    } else {
        s
    }
}

/// `−r·q·m_ac` on the common refinement of the breakpoints of `q` and `m_ac`.
fn ac_density(model: &NaturalScaleModel) -> Result<PiecewiseFn> {
    let q = model.q_fn();
    let m = model.m_ac_fn();
    let mut br: Vec<f64> = q.breaks().iter().chain(m.breaks()).copied().collect();
    br.retain(|&b| b >= model.lo() && b <= model.hi());
    br.push(model.lo());
    br.push(model.hi());
    br.sort_by(f64::total_cmp);
    br.dedup();
    let segs = br
        .windows(2)
        .map(|w| {
            let mid = crate::model::mid_point(w[0], w[1]);
            let qs = q.segments()[q.index(mid)].clone();
            let ms = m.segments()[m.index(mid)].clone();
            Segment::Constant(-model.rate()).times(qs).times(ms)
        })
        .collect();
    PiecewiseFn::new(br, segs)
}

/// Assembles ν together with its Hahn sets and carriers.
pub fn build_nu(model: &NaturalScaleModel) -> Result<NuBundle> {
    let r = model.rate();
    let zero = zero_set(model)?;
    let interior_zero = model.interior_zero_set()?;
    let mut atoms = Vec::new();

    let mut interior_locs: Vec<f64> = model.q_second_atoms().iter().map(|a| a.0).collect();
    interior_locs.extend(model.m_atoms().iter().map(|a| a.0).filter(|&a| model.is_interior(a)));
    interior_locs.sort_by(f64::total_cmp);
    interior_locs.dedup();
    for a in interior_locs {
        let mass = atom_sum(&[0.5 * model.q_second_atom_at(a), -r * model.q(a) * model.m_atom_at(a)]);
        atoms.push((a, mass));
    }
    let (lo, hi) = (model.lo(), model.hi());
    if model.left_bc().is_absorbing() {
        atoms.push((lo, -r * model.q(lo)));
    }
    if model.right_bc().is_absorbing() {
        atoms.push((hi, -r * model.q(hi)));
    }
    if model.left_bc().is_reflecting() {
        atoms.push((lo, atom_sum(&[0.5 * model.q_prime_right(lo), -r * model.q(lo) * model.m_atom_at(lo)])));
    }
    if model.right_bc().is_reflecting() {
        atoms.push((hi, atom_sum(&[-0.5 * model.q_prime_left(hi), -r * model.q(hi) * model.m_atom_at(hi)])));
    }

    let mut truncated = false;
    let mut ac = None;
    if r != 0.0 && interior_zero.lebesgue() > 0.0 {
        let (ivs, _) = interior_zero.components();
        let mut support = interior_zero.clone();
        if ivs.iter().any(|iv| !iv.lo.is_finite() || !iv.hi.is_finite()) {
            truncated = true;
            support = support.clip(model.start() - WINDOW, model.start() + WINDOW);
        }
        let density = ac_density(model)?;
        ac = Some(AcPart { density, support });
    }
    let nu = SignedMeasureRepr::new(model.domain(), ac, atoms);
    let hahn = jordan_hahn(&nu)?;
    let interior_atoms: Vec<f64> = nu.atoms().iter().map(|a| a.0).filter(|&a| model.is_interior(a)).collect();
    let n_si = BorelSetRepr::from_parts(vec![], interior_atoms);
    let atom_locs: Vec<f64> = nu.atoms().iter().map(|a| a.0).collect();
    let mut n_qprime0 = BorelSetRepr::from_parts(vec![], atom_locs);
    if nu.ac().is_some() {
        n_qprime0 = n_qprime0.union(&zero);
    }
    Ok(NuBundle { nu, hahn, n_si, n_qprime0, zero, interior_zero, truncated })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictEvidence {
    pub nu_total_variation: f64,
    pub nu_ac_total_variation: f64,
    pub lambda_zero_with_density: f64,
    pub lambda_zero: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketVerdicts {
    pub nip: bool,
    pub qvip_exists: bool,
    pub rp_holds: bool,
    pub evidence: VerdictEvidence,
}

/// λ of the part of `set` where `m_ac > 0`.
fn lambda_where_speed_positive(model: &NaturalScaleModel, set: &BorelSetRepr) -> f64 {
    let (ivs, _) = set.components();
    let mut total = 0.0;
    for iv in ivs {
        let (a, b) = (iv.lo.max(model.start() - WINDOW), iv.hi.min(model.start() + WINDOW));
        if a < b {
            total += positive_runs(model.m_ac_fn(), a, b).iter().map(|r| r.length()).sum::<f64>();
        }
    }
    total
}

pub fn market_verdicts(model: &NaturalScaleModel, bundle: &NuBundle) -> Result<MarketVerdicts> {
    let atoms_tv: f64 = bundle.nu.atoms().iter().map(|a| a.1.abs()).sum();
    let ac_tv = match bundle.nu.ac() {
        Some(ac) => {
            let only_ac = SignedMeasureRepr::new(bundle.nu.domain(), Some(ac.clone()), vec![]);
            only_ac.total_variation(&ac.support)?
        }
        None => 0.0,
    };
    let lambda_zero = bundle.interior_zero.lebesgue();
    let lambda_zero_with_density =
        if lambda_zero > 0.0 { lambda_where_speed_positive(model, &bundle.interior_zero) } else { 0.0 };
    let tv = atoms_tv + ac_tv;
    Ok(MarketVerdicts {
        nip: tv == 0.0,
        qvip_exists: model.rate() != 0.0 && lambda_zero_with_density > 0.0,
        rp_holds: lambda_zero == 0.0,
        evidence: VerdictEvidence {
            nu_total_variation: tv,
            nu_ac_total_variation: ac_tv,
            lambda_zero_with_density,
            lambda_zero,
            truncated: bundle.truncated,
        },
    })
}

/// `H(u) = gain(u)·(1_plus(u) − 1_minus(u))`, optionally switched off once the
/// path has hit `stop_level`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackStrategy {
    plus: BorelSetRepr,
    minus: BorelSetRepr,
    gain: Option<PiecewiseFn>,
    stop_level: Option<f64>,
}

impl FeedbackStrategy {
    pub fn new(plus: BorelSetRepr, minus: BorelSetRepr) -> Result<Self> {
        let overlap = plus.intersect(&minus);
        if !overlap.is_empty() {
            return Err(Error::Argument("plus and minus sets of a strategy must be disjoint".into()));
        }
        Ok(Self { plus, minus, gain: None, stop_level: None })
    }

    pub fn zero() -> Self {
        Self { plus: BorelSetRepr::empty(), minus: BorelSetRepr::empty(), gain: None, stop_level: None }
    }

    /// `H ≡ c` on the whole line for `c ∈ {−1, 0, 1}` scaled by `|c|`.
    pub fn constant(c: f64) -> Self {
        let all = BorelSetRepr::from_interval(Interval::open(f64::NEG_INFINITY, f64::INFINITY));
        let mut s = if c >= 0.0 {
            Self { plus: all, minus: BorelSetRepr::empty(), gain: None, stop_level: None }
        } else {
            Self { plus: BorelSetRepr::empty(), minus: all, gain: None, stop_level: None }
        };
        if c.abs() != 1.0 && c != 0.0 {
            s.gain = Some(PiecewiseFn::single(f64::NEG_INFINITY, f64::INFINITY, Segment::Constant(c.abs())));
        }
        if c == 0.0 {
            return Self::zero();
        }
        s
    }

    pub fn with_gain(mut self, gain: PiecewiseFn) -> Self {
        self.gain = Some(gain);
        self
    }

    pub fn with_stop_level(mut self, level: f64) -> Self {
        self.stop_level = Some(level);
        self
    }

    /// The strategy without its stopping clause.
    pub fn state_part(&self) -> Self {
        Self { stop_level: None, ..self.clone() }
    }

    pub fn negated(&self) -> Self {
        Self { plus: self.minus.clone(), minus: self.plus.clone(), ..self.clone() }
    }

    /// Restricts trading to `region`.
    pub fn restricted(&self, region: &BorelSetRepr) -> Self {
        Self { plus: self.plus.intersect(region), minus: self.minus.intersect(region), ..self.clone() }
    }

    pub fn plus(&self) -> &BorelSetRepr {
        &self.plus
    }

    pub fn minus(&self) -> &BorelSetRepr {
        &self.minus
    }

    pub fn gain(&self) -> Option<&PiecewiseFn> {
        self.gain.as_ref()
    }

    pub fn stop_level(&self) -> Option<f64> {
        self.stop_level
    }

    pub fn is_state_feedback(&self) -> bool {
        self.stop_level.is_none()
    }

    pub fn is_zero(&self) -> bool {
        self.plus.is_empty() && self.minus.is_empty()
    }

    /// The state part `H(u)`.
    pub fn value(&self, u: f64) -> f64 {
        let s = if self.plus.contains(u) {
            1.0
        } else if self.minus.contains(u) {
            -1.0
        } else {
            return 0.0;
        };
        match &self.gain {
            Some(g) => s * g.eval(u),
            None => s,
        }
    }

    /// `{H ≠ 0}` (gains are treated as non-vanishing).
    pub fn support(&self) -> BorelSetRepr {
        self.plus.union(&self.minus)
    }
}

/// `θ = 1_{N+ ∩ N0} − 1_{N− ∩ N0}`.
pub fn build_theta(bundle: &NuBundle) -> FeedbackStrategy {
    FeedbackStrategy {
        plus: bundle.hahn.n_plus.intersect(&bundle.n_qprime0),
        minus: bundle.hahn.n_minus.intersect(&bundle.n_qprime0),
        gain: None,
        stop_level: None,
    }
}

/// θ with the atoms of ν and the endpoints removed: it trades only where the
/// density part of ν lives.
pub fn build_theta_bar(bundle: &NuBundle) -> FeedbackStrategy {
    if bundle.nu.ac().is_none() {
        return FeedbackStrategy::zero();
    }
    let base = bundle.interior_zero.difference(&bundle.n_si);
    FeedbackStrategy {
        plus: bundle.hahn.n_plus.intersect(&base),
        minus: bundle.hahn.n_minus.intersect(&base),
        gain: None,
        stop_level: None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    /// `λ({H·q'_+ ≠ 0})` on the interior.
    pub lambda_active_martingale: f64,
    pub condition_i: bool,
    pub condition_ii: bool,
    /// Where (ii) failed, if it did.
    pub condition_ii_violations: Vec<String>,
    pub note_iii: &'static str,
}

/// Representation-level check of the two deterministic conditions for a
/// state-feedback strategy to be an increasing profit.
pub fn symbolic_ip_check(model: &NaturalScaleModel, bundle: &NuBundle, h: &FeedbackStrategy) -> Result<CheckReport> {
    if !h.is_state_feedback() {
        return Err(Error::Unsupported("strategy with a stopping clause is not state feedback".into()));
    }
    let interior = BorelSetRepr::from_interval(model.interior());
    let active = h.support().intersect(&interior);
    let lambda_active = if active.is_empty() {
        0.0
    } else {
        let total = active.lebesgue();
        if total.is_infinite() {
            f64::INFINITY
        } else {
            total - active.intersect(&bundle.interior_zero).lebesgue()
        }
    };
    let condition_i = lambda_active.abs() <= 1e-12;

    let theta = build_theta(bundle);
    let mut violations = Vec::new();
    for &(a, _) in bundle.nu.atoms() {
        if theta.value(a) * h.value(a) < 0.0 {
            violations.push(format!("atom at {a}"));
        }
    }
    if let Some(ac) = bundle.nu.ac() {
        let pos = ac.support.intersect(&bundle.hahn.n_plus);
        let neg = ac.support.intersect(&bundle.hahn.n_minus);
        let bad = pos.intersect(h.minus()).lebesgue() + neg.intersect(h.plus()).lebesgue();
        if bad > 0.0 {
            violations.push(format!("density carrier, measure {bad}"));
        }
    }
    Ok(CheckReport {
        lambda_active_martingale: lambda_active,
        condition_i,
        condition_ii: violations.is_empty(),
        condition_ii_violations: violations,
        note_iii: "positivity of the local-time clock must be confirmed on simulated paths",
    })
}
