use gdarb::arbitrage::{build_nu, build_theta, build_theta_bar, market_verdicts, NuBundle};
use gdarb::catalog::{catalog, CatalogEntry, Params};
use gdarb::measures::{BorelSetRepr, Interval};
use gdarb::model::{to_natural_scale, NaturalScaleModel};
use proptest::prelude::*;

mod common;
use common::{draw, runner};

fn bundle_of(entry: &CatalogEntry, p: &Params, rate: Option<f64>) -> (NaturalScaleModel, NuBundle) {
    let mut spec = entry.build(p).unwrap();
    if let Some(r) = rate {
        spec.rate = r;
    }
    let m = to_natural_scale(&spec).unwrap();
    let b = build_nu(&m).unwrap();
    (m, b)
}

/// Points inside the ac carrier of ν where the density does not vanish.
fn ac_sample_points(b: &NuBundle) -> Vec<f64> {
    let Some(ac) = b.nu.ac() else { return vec![] };
    let mids: Vec<f64> = match ac.support.svc() {
        Some(svc) => svc.retained().iter().map(|(a, c)| 0.5 * (a + c)).collect(),
        None => {
            ac.support.components().0.iter().filter(|i| i.length().is_finite()).map(|i| 0.5 * (i.lo + i.hi)).collect()
        }
    };
    mids.into_iter().filter(|&x| ac.support.contains(x) && b.nu.density(x) != 0.0).collect()
}

#[test]
fn nu_lives_where_the_scale_is_flat() {
    let mut runner = runner();
    for entry in catalog() {
        for _ in 0..5 {
            let p = draw(&mut runner, &entry);
            let (_, b) = bundle_of(&entry, &p, None);
            let outside = BorelSetRepr::from_interval(b.nu.domain()).difference(&b.n_qprime0);
            let tv = b.nu.total_variation(&outside).unwrap();
            assert_eq!(tv, 0.0, "{} {p:?}", entry.name);
        }
    }
}

#[test]
fn nu_is_affine_in_the_rate() {
    for entry in catalog() {
        let p = entry.defaults();
        let bs: Vec<NuBundle> = [0.0, 1.0, 2.0].iter().map(|&r| bundle_of(&entry, &p, Some(r)).1).collect();
        let mut locations: Vec<f64> = bs.iter().flat_map(|b| b.nu.atoms().iter().map(|a| a.0)).collect();
        locations.sort_by(f64::total_cmp);
        locations.dedup();
        for x in locations {
            let [a0, a1, a2] = [0, 1, 2].map(|i| bs[i].nu.atom_at(x));
            let scale = a0.abs().max(a1.abs()).max(a2.abs()).max(1.0);
            assert!((a2 - 2.0 * a1 + a0).abs() <= 1e-12 * scale, "{} atom at {x}: {a0} {a1} {a2}", entry.name);
        }
        for x in ac_sample_points(&bs[1]) {
            let [d0, d1, d2] = [0, 1, 2].map(|i| bs[i].nu.density(x));
            assert!((d2 - 2.0 * d1 + d0).abs() <= 1e-12 * d2.abs().max(1e-300), "{} density at {x}", entry.name);
        }
    }
}

#[test]
fn theta_squared_is_one_on_the_carrier() {
    let mut runner = runner();
    for entry in catalog() {
        for _ in 0..5 {
            let p = draw(&mut runner, &entry);
            let (_, b) = bundle_of(&entry, &p, None);
            let theta = build_theta(&b);
            for &(x, m) in b.nu.atoms() {
                assert_eq!(theta.value(x), m.signum(), "{} atom at {x}", entry.name);
            }
            let pts = ac_sample_points(&b);
            assert_eq!(pts.is_empty(), b.nu.ac().is_none(), "{}", entry.name);
            for x in pts {
                assert_eq!(theta.value(x).powi(2), 1.0, "{} at {x}", entry.name);
                assert_eq!(theta.value(x), b.nu.density(x).signum());
            }
        }
    }
}

#[test]
fn verdicts_agree_with_the_canonical_strategies() {
    let mut runner = runner();
    for entry in catalog() {
        let mut draws: Vec<Params> = (0..10).map(|_| draw(&mut runner, &entry)).collect();
        draws.push(entry.defaults());
        for p in draws {
            let (m, b) = bundle_of(&entry, &p, None);
            let v = market_verdicts(&m, &b).unwrap();
            if v.nip {
                assert!(build_theta(&b).is_zero(), "{} {p:?}", entry.name);
            } else {
                assert!(!build_theta(&b).is_zero(), "{} {p:?}", entry.name);
            }
            if v.qvip_exists {
                assert!(!build_theta_bar(&b).is_zero(), "{} {p:?}", entry.name);
            }
        }
    }
}

#[test]
fn theta_does_not_depend_on_the_hahn_choice() {
    for entry in catalog() {
        let (_, b) = bundle_of(&entry, &entry.defaults(), None);
        // put every point of zero density into the positive set instead
        let neg_atoms: Vec<f64> = b.nu.atoms().iter().filter(|a| a.1 < 0.0).map(|a| a.0).collect();
        let mut alt_minus = BorelSetRepr::from_parts(vec![], neg_atoms);
        if let Some(ac) = b.hahn.minus.ac() {
            alt_minus = alt_minus.union(&ac.support);
        }
        let mut alt = b.clone();
        alt.hahn.n_minus = alt_minus.clone();
        alt.hahn.n_plus = BorelSetRepr::from_interval(b.nu.domain()).difference(&alt_minus);
        assert!(alt.hahn.n_plus != b.hahn.n_plus, "{}: the flip must change the Hahn sets", entry.name);

        let (t, t_alt) = (build_theta(&b), build_theta(&alt));
        let changed = t.plus().difference(t_alt.plus()).union(&t_alt.plus().difference(t.plus()));
        let changed = changed.union(&t.minus().difference(t_alt.minus())).union(&t_alt.minus().difference(t.minus()));
        assert_eq!(b.nu.total_variation(&changed).unwrap(), 0.0, "{}", entry.name);
        assert_eq!(changed.lebesgue(), 0.0, "{}", entry.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    // Sticky Brownian motion at a positive level: the canonical strategy is
    // short exactly at the sticky point.
    #[test]
    fn sticky_theta_is_short_at_the_sticky_point(xi in 0.05..3.0f64, rho in 0.1..5.0f64, r in 0.01..0.5f64, y in -5.0..5.0f64) {
        let entry = gdarb::catalog::find("bachelier-sticky").unwrap();
        let p = entry.resolve([("xi", xi), ("rho", rho), ("r", r), ("x0", xi + 0.5)]).unwrap();
        let (_, b) = bundle_of(&entry, &p, None);
        let theta = build_theta(&b);
        prop_assert_eq!(theta.value(xi), -1.0);
        if y != xi {
            prop_assert_eq!(theta.value(y), 0.0);
        }
        prop_assert_eq!(theta.support(), BorelSetRepr::point(xi));
        prop_assert!(build_theta_bar(&b).is_zero());
        prop_assert_eq!(b.nu.total_variation(&BorelSetRepr::from_interval(Interval::open(xi, f64::INFINITY))).unwrap(), 0.0);
    }
}
