use crate::error::{Error, Result};
use crate::measures::borel::{BorelSetRepr, Interval};
use crate::piecewise::{PiecewiseFn, Segment};

/// Absolutely continuous part: `density` restricted to `support`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcPart {
    pub density: PiecewiseFn,
    pub support: BorelSetRepr,
}

/// Finite signed measure on `domain`: an optional density part plus atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasureRepr {
    domain: Interval,
    ac: Option<AcPart>,
    atoms: Vec<(f64, f64)>,
}

/// Output of [`jordan_hahn`].
#[derive(Debug, Clone, PartialEq)]
pub struct JordanHahn {
    pub plus: SignedMeasureRepr,
    pub minus: SignedMeasureRepr,
    pub n_plus: BorelSetRepr,
    pub n_minus: BorelSetRepr,
}

impl SignedMeasureRepr {
    /// Atoms at equal locations are merged and zero masses dropped.
    pub fn new(domain: Interval, ac: Option<AcPart>, atoms: Vec<(f64, f64)>) -> Self {
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, m) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += m,
                _ => merged.push((x, m)),
            }
        }
        merged.retain(|a| a.1 != 0.0);
        let ac = ac.filter(|a| !a.support.is_empty());
        Self { domain, ac, atoms: merged }
    }

    pub fn zero(domain: Interval) -> Self {
        Self { domain, ac: None, atoms: vec![] }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn ac(&self) -> Option<&AcPart> {
        self.ac.as_ref()
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn atom_at(&self, x: f64) -> f64 {
        self.atoms.iter().find(|a| a.0 == x).map_or(0.0, |a| a.1)
    }

    /// Density value at `x` (0 off the support).
    pub fn density(&self, x: f64) -> f64 {
        match &self.ac {
            Some(ac) if ac.support.contains(x) => ac.density.eval(x),
            _ => 0.0,
        }
    }

    /// True when no atoms remain and the density part is absent.
    pub fn is_structurally_zero(&self) -> bool {
        self.atoms.is_empty() && self.ac.is_none()
    }

    /// `ν(region)`.
    pub fn measure_of(&self, region: &BorelSetRepr) -> Result<f64> {
        integrate(self, |_| 1.0, region)
    }

    /// `|ν|(region)`.
    pub fn total_variation(&self, region: &BorelSetRepr) -> Result<f64> {
        let jh = jordan_hahn(self)?;
        Ok(jh.plus.measure_of(region)? + jh.minus.measure_of(region)?)
    }
}

/// `∫_region weight dm`.
pub fn integrate<W: Fn(f64) -> f64>(m: &SignedMeasureRepr, weight: W, region: &BorelSetRepr) -> Result<f64> {
    let mut total: f64 = m.atoms.iter().filter(|a| region.contains(a.0)).map(|&(x, w)| weight(x) * w).sum();
    if let Some(ac) = &m.ac {
        let on = region.intersect(&ac.support);
        let (ivs, _) = on.components();
        for iv in ivs {
            if iv.lo < iv.hi {
                if !(iv.lo.is_finite() && iv.hi.is_finite()) {
                    return Err(Error::Numeric(format!("density part over unbounded region [{}, {}]", iv.lo, iv.hi)));
                }
                total += ac.density.integrate_with(iv.lo, iv.hi, &weight)?;
            }
        }
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Numeric("non-finite integral".into()))
    }
}

const SAMPLES_PER_PIECE: usize = 32;
const FAR: f64 = 1e3;

/// Maximal open intervals inside `[lo, hi]` where `f > 0`.
pub(crate) fn positive_runs(f: &PiecewiseFn, lo: f64, hi: f64) -> Vec<Interval> {
    let lo_s = if lo.is_finite() { lo } else { hi.min(0.0) - FAR };
    let hi_s = if hi.is_finite() { hi } else { lo.max(0.0) + FAR };
    let mut pts = vec![lo_s];
    pts.extend(f.kinks(lo_s, hi_s));
    pts.push(hi_s);
    let mut grid = Vec::new();
    for w in pts.windows(2) {
        for k in 0..SAMPLES_PER_PIECE {
            grid.push(w[0] + (w[1] - w[0]) * k as f64 / SAMPLES_PER_PIECE as f64);
        }
    }
    grid.push(hi_s);
    // sample strictly inside each cell to dodge endpoint singularities
    let sign = |a: f64, b: f64| f.eval(0.5 * (a + b)) > 0.0;
    let mut runs = Vec::new();
    let mut start: Option<f64> = None;
    for (i, w) in grid.windows(2).enumerate() {
        let pos = sign(w[0], w[1]);
        match (pos, start) {
            (true, None) => {
                let left = if i == 0 {
                    lo
                } else {
                    let prev = 0.5 * (grid[i - 1] + w[0]);
                    refine(f, prev, 0.5 * (w[0] + w[1]))
                };
                start = Some(left);
            }
            (false, Some(s)) => {
                let prev = 0.5 * (grid[i - 1] + w[0]);
                runs.push(Interval::open(s, refine(f, prev, 0.5 * (w[0] + w[1]))));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push(Interval::open(s, hi));
    }
    runs
}

/// Sign-change location of `f` between `a` and `b`, to 1e−12.
fn refine(f: &PiecewiseFn, mut a: f64, mut b: f64) -> f64 {
    let pa = f.eval(a) > 0.0;
    while b - a > 1e-12 * (1.0 + a.abs()) {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f.eval(m) > 0.0) == pa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Jordan and Hahn decompositions. Points where the density is zero go to
/// the negative set.
pub fn jordan_hahn(m: &SignedMeasureRepr) -> Result<JordanHahn> {
    let domain_set = BorelSetRepr::from_interval(m.domain);
    let pos_atoms: Vec<f64> = m.atoms.iter().filter(|a| a.1 > 0.0).map(|a| a.0).collect();
    let mut n_plus = BorelSetRepr::from_parts(vec![], pos_atoms);
    let (mut plus_ac, mut minus_ac) = (None, None);
    if let Some(ac) = &m.ac {
        let (ivs, _) = ac.support.components();
        let mut pos = Vec::new();
        for iv in ivs {
            pos.extend(positive_runs(&ac.density, iv.lo, iv.hi));
        }
        let pos_set = BorelSetRepr::from_parts(pos, vec![]).intersect(&ac.support);
        let neg_support = ac.support.difference(&pos_set);
        if !pos_set.is_empty() {
            plus_ac = Some(AcPart { density: ac.density.clone(), support: pos_set.clone() });
        }
        if !neg_support.is_empty() {
            minus_ac = Some(AcPart {
                density: ac.density.map_segments(|s| Segment::Constant(-1.0).times(s.clone())),
                support: neg_support,
            });
        }
        n_plus = n_plus.union(&pos_set);
    }
    // atoms are carried by exact points; keep negative atoms out of N_plus
    let neg_atoms: Vec<f64> = m.atoms.iter().filter(|a| a.1 < 0.0).map(|a| a.0).collect();
    let n_plus = n_plus.difference(&BorelSetRepr::from_parts(vec![], neg_atoms));
    let n_minus = domain_set.difference(&n_plus);
    let plus = SignedMeasureRepr::new(m.domain, plus_ac, m.atoms.iter().filter(|a| a.1 > 0.0).copied().collect());
    let minus = SignedMeasureRepr::new(
        m.domain,
        minus_ac,
        m.atoms.iter().filter(|a| a.1 < 0.0).map(|&(x, w)| (x, -w)).collect(),
    );
    Ok(JordanHahn { plus, minus, n_plus, n_minus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::borel::svc_set;

    fn line() -> Interval {
        Interval::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    #[test]
    fn atoms_merge_and_drop() {
        let m = SignedMeasureRepr::new(line(), None, vec![(1.0, 0.5), (1.0, -0.5), (2.0, 0.1)]);
        assert_eq!(m.atoms(), &[(2.0, 0.1)]);
    }

    #[test]
    fn lebesgue_on_unit_interval() {
        let ac = AcPart {
            density: PiecewiseFn::single(0.0, 1.0, Segment::Constant(1.0)),
            support: BorelSetRepr::from_interval(Interval::closed(0.0, 1.0)),
        };
        let m = SignedMeasureRepr::new(Interval::closed(0.0, 1.0), Some(ac), vec![]);
        let v = integrate(&m, |_| 1.0, &BorelSetRepr::from_interval(Interval::closed(0.0, 1.0))).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn atom_weighted() {
        let m = SignedMeasureRepr::new(line(), None, vec![(2.0, -0.3)]);
        let v = integrate(&m, |x: f64| (-x).exp(), &BorelSetRepr::point(2.0)).unwrap();
        assert!((v + 0.3 * (-2.0f64).exp()).abs() < 1e-17);
    }

    #[test]
    fn svc_region_matches_interval_sum() {
        // Oracle: ∫ x·x over each of the four retained depth-2 intervals, [a,b] ↦ (b³−a³)/3.
        let ac = AcPart {
            density: PiecewiseFn::single(0.0, 1.0, Segment::identity()),
            support: BorelSetRepr::from_interval(Interval::closed(0.0, 1.0)),
        };
        let m = SignedMeasureRepr::new(Interval::closed(0.0, 1.0), Some(ac), vec![]);
        let region = svc_set(2).unwrap();
        let v = integrate(&m, |x| x, &region).unwrap();
        let retained = [(0.0, 5.0 / 32.0), (7.0 / 32.0, 3.0 / 8.0), (5.0 / 8.0, 25.0 / 32.0), (27.0 / 32.0, 1.0)];
        let mut riemann = 0.0;
        for (a, b) in retained {
            let n = 20_000;
            let h = (b - a) / n as f64;
            for k in 0..n {
                let x: f64 = a + (k as f64 + 0.5) * h;
                riemann += x * x * h;
            }
        }
        assert!((v - riemann).abs() < 1e-8, "{v} vs {riemann}");
    }

    #[test]
    fn hahn_for_positive_atom() {
        let m = SignedMeasureRepr::new(Interval::closed(0.0, f64::INFINITY), None, vec![(0.0, 0.3)]);
        let jh = jordan_hahn(&m).unwrap();
        assert!(jh.n_plus.contains(0.0));
        assert!(jh.minus.is_structurally_zero());
        assert!(!jh.n_minus.contains(0.0) && jh.n_minus.contains(1.0));
    }

    #[test]
    fn hahn_for_negative_atom() {
        let m = SignedMeasureRepr::new(line(), None, vec![(2.0, -0.3)]);
        let jh = jordan_hahn(&m).unwrap();
        assert!(jh.n_minus.contains(2.0));
        assert!(jh.plus.is_structurally_zero());
    }

    #[test]
    fn hahn_for_zero_measure() {
        let jh = jordan_hahn(&SignedMeasureRepr::zero(line())).unwrap();
        assert!(jh.n_plus.is_empty());
        assert!(jh.plus.is_structurally_zero() && jh.minus.is_structurally_zero());
    }

    #[test]
    fn hahn_splits_density_at_sign_change() {
        let ac = AcPart {
            density: PiecewiseFn::single(-1.0, 1.0, Segment::Affine { slope: 1.0, intercept: -0.25 }),
            support: BorelSetRepr::from_interval(Interval::closed(-1.0, 1.0)),
        };
        let m = SignedMeasureRepr::new(Interval::closed(-1.0, 1.0), Some(ac), vec![]);
        let jh = jordan_hahn(&m).unwrap();
        let ivs = jh.n_plus.intervals();
        assert_eq!(ivs.len(), 1);
        assert!((ivs[0].lo - 0.25).abs() < 1e-12 && ivs[0].hi == 1.0);
        let whole = BorelSetRepr::from_interval(Interval::closed(-1.0, 1.0));
        let tv = m.total_variation(&whole).unwrap();
        // ∫|x − 1/4| over [−1, 1]
        assert!((tv - (0.5 * 1.25 * 1.25 + 0.5 * 0.75 * 0.75)).abs() < 1e-10);
    }
}
