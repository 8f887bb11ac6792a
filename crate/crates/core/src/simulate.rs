//! Exit-time grid chain for the natural-scale diffusion, path sampling and
//! the occupation-based estimators built on it.
//!
//! A node `u` with neighbours `u − a` and `u + b` holds for the expected
//! exit time of `(u − a, u + b)` and then jumps to one of them with the
//! martingale probabilities. The holding time splits into a sticky part
//! (speed atom at `u`) followed by a diffusive part.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arbitrage::{FeedbackStrategy, NuBundle};
use crate::error::{Error, Result};
use crate::measures::{BorelSetRepr, Interval};
use crate::model::{zero_set, NaturalScaleModel, WINDOW};
use crate::quadrature;

pub const DEFAULT_STEP_BUDGET: u64 = 100_000_000;

/// Environment variable capping the worker count of Monte Carlo runs.
pub const THREADS_ENV: &str = "GDARB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    /// Model endpoint pushing the path back inward.
    Reflecting,
    Absorbing,
    /// Artificial reflecting edge of the truncation window.
    WindowEdge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainNode {
    pub u: f64,
    pub kind: NodeKind,
    /// Distance to the left neighbour (0 at a left end).
    pub left_gap: f64,
    /// Distance to the right neighbour (0 at a right end).
    pub right_gap: f64,
    pub p_right: f64,
    /// Expected holding time.
    pub dt: f64,
    /// Sticky part of `dt`.
    pub tau_atom: f64,
    pub m_atom: f64,
    /// Local-time cell and its speed mass (atom included).
    pub cell: (f64, f64),
    pub cell_mass: f64,
    pub q: f64,
    pub q_prime: f64,
    /// Mean of `q(next) − q(u)` caused by a kink of `q` at the node.
    pub kink_drift: f64,
    /// Local-time increment of one full step.
    pub lt_step: f64,
}

impl ChainNode {
    fn is_left_end(&self) -> bool {
        self.left_gap == 0.0
    }

    fn is_right_end(&self) -> bool {
        self.right_gap == 0.0
    }

    /// `G(y)` on each side of the node as `(lo, hi, α, β)` with `G = α + βy`.
    fn tent(&self) -> Vec<(f64, f64, f64, f64)> {
        let (u, a, b) = (self.u, self.left_gap, self.right_gap);
        let mut out = Vec::with_capacity(2);
        if self.is_left_end() {
            out.push((u, u + b, u + b, -1.0));
        } else if self.is_right_end() {
            out.push((u - a, u, a - u, 1.0));
        } else {
            let (wl, wr) = (b / (a + b), a / (a + b));
            out.push((u - a, u, -(u - a) * wl, wl));
            out.push((u, u + b, (u + b) * wr, -wr));
        }
        out
    }

    /// `2·G(u)`: the weight of a speed atom at the node in the holding time.
    fn atom_weight(&self) -> f64 {
        let (a, b) = (self.left_gap, self.right_gap);
        if self.is_left_end() {
            2.0 * b
        } else if self.is_right_end() {
            2.0 * a
        } else {
            2.0 * a * b / (a + b)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridChain {
    nodes: Vec<ChainNode>,
    start: usize,
    h: f64,
    rate: f64,
    window: (f64, f64),
    f_atom: Vec<f64>,
    f_step: Vec<f64>,
    excluded: Vec<usize>,
}

/// Sorted disjoint intervals of a set, for fast clipping.
struct Pieces(Vec<Interval>);

impl Pieces {
    fn new(set: &BorelSetRepr) -> Self {
        let (mut ivs, _) = set.components();
        ivs.retain(|iv| iv.lo < iv.hi);
        ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        Pieces(ivs)
    }

    fn within(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let first = self.0.partition_point(|iv| iv.hi <= lo);
        self.0[first..]
            .iter()
            .take_while(move |iv| iv.lo < hi)
            .map(move |iv| (iv.lo.max(lo), iv.hi.min(hi)))
            .filter(|(x, y)| x < y)
    }
}

fn near(sorted: &[f64], x: f64, tol: f64) -> bool {
    let i = sorted.partition_point(|&s| s < x);
    (i < sorted.len() && sorted[i] - x < tol) || (i > 0 && x - sorted[i - 1] < tol)
}

/// Builds the chain on `[u0 − 50, u0 + 50] ∩ E` with spacing `h`. Speed
/// atoms, kinks of `q`, endpoints, the start and the ends of the components
/// of `{q' = 0}` are always nodes.
pub fn build_chain(model: &NaturalScaleModel, h: f64) -> Result<GridChain> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Argument(format!("grid spacing h = {h} must be positive")));
    }
    let u0 = model.start();
    let (lo, hi) = (model.lo(), model.hi());
    let mut left = u0 - WINDOW;
    let mut left_kind = NodeKind::WindowEdge;
    if lo >= left {
        if model.left_bc().included() {
            left = lo;
            left_kind = if model.left_bc().is_absorbing() { NodeKind::Absorbing } else { NodeKind::Reflecting };
        } else {
            left = lo + h;
        }
    }
    let mut right = u0 + WINDOW;
    let mut right_kind = NodeKind::WindowEdge;
    if hi <= right {
        if model.right_bc().included() {
            right = hi;
            right_kind = if model.right_bc().is_absorbing() { NodeKind::Absorbing } else { NodeKind::Reflecting };
        } else {
            right = hi - h;
        }
    }
    if !(left < u0 || u0 == lo) || !(u0 < right || u0 == hi) || left >= right {
        return Err(Error::Model(format!("start {u0} is not inside the grid window [{left}, {right}] at h = {h}")));
    }
    let inside = |x: f64| x > left && x < right;

    let mut essential: Vec<f64> = vec![left, right, u0];
    essential.extend(model.m_atoms().iter().map(|a| a.0).filter(|&x| inside(x)));
    essential.extend(model.q_second_atoms().iter().map(|a| a.0).filter(|&x| inside(x)));
    essential.sort_by(f64::total_cmp);
    essential.dedup();
    let mut special = essential.clone();
    let zero = zero_set(model)?.clip(left, right);
    let (ivs, pts) = zero.components();
    let mut candidates: Vec<f64> = ivs.iter().flat_map(|iv| [iv.lo, iv.hi]).chain(pts).filter(|&x| inside(x)).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    for x in candidates {
        if !near(&special, x, 0.25 * h) {
            let at = special.partition_point(|&s| s < x);
            special.insert(at, x);
        }
    }
    let k_lo = ((left - u0) / h).ceil() as i64;
    let k_hi = ((right - u0) / h).floor() as i64;
    let mut grid = special.clone();
    for k in k_lo..=k_hi {
        let x = u0 + k as f64 * h;
        if inside(x) && !near(&special, x, 0.25 * h) {
            grid.push(x);
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let n = grid.len();
    let mut nodes = Vec::with_capacity(n);
    let mut excluded = Vec::new();
    for (i, &u) in grid.iter().enumerate() {
        let kind = if i == 0 {
            left_kind
        } else if i == n - 1 {
            right_kind
        } else {
            NodeKind::Interior
        };
        let left_gap = if i == 0 { 0.0 } else { u - grid[i - 1] };
        let right_gap = if i == n - 1 { 0.0 } else { grid[i + 1] - u };
        let p_right = match (left_gap == 0.0, right_gap == 0.0) {
            (true, _) => 1.0,
            (_, true) => 0.0,
            _ => left_gap / (left_gap + right_gap),
        };
        let m_atom = model.m_atom_at(u);
        let cell = (u - 0.5 * left_gap, u + 0.5 * right_gap);
        let mut node = ChainNode {
            u,
            kind,
            left_gap,
            right_gap,
            p_right,
            dt: 0.0,
            tau_atom: 0.0,
            m_atom,
            cell,
            cell_mass: model.m_ac_affine(cell.0, cell.1, 1.0, 0.0)? + m_atom,
            q: model.q(u),
            q_prime: model.q_prime_right(u),
            kink_drift: 0.0,
            lt_step: 0.0,
        };
        if kind == NodeKind::Absorbing {
            nodes.push(node);
            continue;
        }
        let mut diffusive = 0.0;
        for (x, y, al, be) in node.tent() {
            diffusive += 2.0 * model.m_ac_affine(x, y, al, be)?;
        }
        node.tau_atom = node.atom_weight() * m_atom;
        node.dt = diffusive + node.tau_atom;
        node.kink_drift = if node.is_left_end() {
            model.q_prime_right(u) * right_gap
        } else if node.is_right_end() {
            -model.q_prime_left(u) * left_gap
        } else {
            0.5 * model.q_second_atom_at(u) * node.atom_weight()
        };
        node.lt_step = if m_atom > 0.0 {
            node.atom_weight()
        } else if node.cell_mass > 0.0 {
            node.dt / node.cell_mass
        } else {
            excluded.push(i);
            0.0
        };
        if !(node.dt > 0.0) || !node.dt.is_finite() {
            return Err(Error::Model(format!("holding time {} at node {u} is not positive and finite", node.dt)));
        }
        nodes.push(node);
    }
    let start = grid.partition_point(|&x| x < u0);
    let r = model.rate();
    let f_atom = nodes.iter().map(|n| (-r * n.tau_atom).exp()).collect();
    let f_step = nodes.iter().map(|n| (-r * n.dt).exp()).collect();
    Ok(GridChain { nodes, start, h, rate: r, window: (left, right), f_atom, f_step, excluded })
}

impl GridChain {
    pub fn nodes(&self) -> &[ChainNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &ChainNode {
        &self.nodes[i]
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// Nodes whose local-time cell carries no speed mass.
    pub fn excluded(&self) -> &[usize] {
        &self.excluded
    }

    /// Index of the node at `u`, if `u` is a node.
    pub fn index_of(&self, u: f64) -> Option<usize> {
        let i = self.nodes.partition_point(|n| n.u < u);
        (i < self.nodes.len() && self.nodes[i].u == u).then_some(i)
    }

    /// Index of the node closest to `u`.
    pub fn nearest(&self, u: f64) -> usize {
        let i = self.nodes.partition_point(|n| n.u < u);
        if i == 0 {
            0
        } else if i == self.nodes.len() || u - self.nodes[i - 1].u <= self.nodes[i].u - u {
            i - 1
        } else {
            i
        }
    }

    /// Per-node weights of a strategy for both value routes.
    pub fn strategy_tables(
        &self,
        model: &NaturalScaleModel,
        bundle: &NuBundle,
        strategy: &FeedbackStrategy,
    ) -> Result<StrategyTables> {
        StrategyTables::build(self, model, bundle, strategy)
    }
}

/// Per-node coefficients of one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTables {
    /// `H(u)`.
    pub h_point: Vec<f64>,
    /// `∫H·G dm_ac / ∫G dm_ac` over the node's tent.
    pub w_ac: Vec<f64>,
    /// `∫H·G dq / ∫G dq` over the node's tent.
    pub w_jump: Vec<f64>,
    /// `∫H²q'²·G dλ / ∫G dλ` over the node's tent: the share of a `⟨U⟩`
    /// increment on which the strategy meets the martingale part.
    pub w_activity: Vec<f64>,
    /// `H(u)·ν({u}) + ∫_cell H dν_ac`, the rate against local time.
    pub nu_rate: Vec<f64>,
    pub stop_level: Option<f64>,
    /// Every weight vanishes.
    pub is_zero: bool,
}

struct SignedPieces {
    plus: Pieces,
    minus: Pieces,
}

impl SignedPieces {
    fn new(plus: &BorelSetRepr, minus: &BorelSetRepr) -> Self {
        SignedPieces { plus: Pieces::new(plus), minus: Pieces::new(minus) }
    }

    /// `∫_{[lo,hi]} sgn·f` where `f` is integrated by `int(x, y)`.
    fn integrate<F: FnMut(f64, f64) -> Result<f64>>(&self, lo: f64, hi: f64, mut int: F) -> Result<f64> {
        let mut total = 0.0;
        for (x, y) in self.plus.within(lo, hi) {
            total += int(x, y)?;
        }
        for (x, y) in self.minus.within(lo, hi) {
            total -= int(x, y)?;
        }
        Ok(total)
    }
}

/// `∫_x^y (α + βs) q'(s) ds` by parts.
fn q_prime_affine(model: &NaturalScaleModel, x: f64, y: f64, al: f64, be: f64) -> Result<f64> {
    let boundary = (al + be * y) * model.q(y) - (al + be * x) * model.q(x);
    if be == 0.0 {
        return Ok(boundary);
    }
    Ok(boundary - be * model.q_fn().integrate_affine(x, y, 1.0, 0.0)?)
}

fn q_prime_weighted<W: Fn(f64) -> f64>(model: &NaturalScaleModel, x: f64, y: f64, w: W) -> Result<f64> {
    let mut pts = vec![x];
    pts.extend(model.q_fn().kinks(x, y));
    pts.push(y);
    let mut total = 0.0;
    for p in pts.windows(2) {
        total += quadrature::integrate(|s| model.q_prime_right(s) * w(s), p[0], p[1])?;
    }
    Ok(total)
}

impl StrategyTables {
    fn build(
        chain: &GridChain,
        model: &NaturalScaleModel,
        bundle: &NuBundle,
        strategy: &FeedbackStrategy,
    ) -> Result<Self> {
        let n = chain.nodes.len();
        let (mut h_point, mut w_ac, mut w_jump, mut nu_rate) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut w_activity = vec![0.0; n];
        let (wlo, whi) = chain.window;
        let plus = strategy.plus().clip(wlo, whi);
        let minus = strategy.minus().clip(wlo, whi);
        let h_sets = SignedPieces::new(&plus, &minus);
        let ac = bundle.nu.ac();
        let nu_sets = ac.map(|a| SignedPieces::new(&plus.intersect(&a.support), &minus.intersect(&a.support)));
        let gain = strategy.gain();
        let g = |s: f64| gain.map_or(1.0, |g| g.eval(s));
        for (i, node) in chain.nodes.iter().enumerate() {
            h_point[i] = strategy.value(node.u);
            if node.kind == NodeKind::Absorbing {
                nu_rate[i] = h_point[i] * bundle.nu.atom_at(node.u);
                continue;
            }
            let tent = node.tent();
            let (tlo, thi) = (tent[0].0, tent[tent.len() - 1].1);
            if h_sets.plus.within(tlo, thi).next().is_some() || h_sets.minus.within(tlo, thi).next().is_some() {
                let (mut num_m, mut den_m, mut num_q, mut den_q) = (0.0, 0.0, 0.0, 0.0);
                let (mut num_a, mut den_a) = (0.0, 0.0);
                for &(x, y, al, be) in &tent {
                    den_a += al * (y - x) + 0.5 * be * (y * y - x * x);
                    let act = |a: f64, b: f64| {
                        let w = |s: f64| {
                            let qp = model.q_prime_right(s);
                            g(s) * g(s) * qp * qp * (al + be * s)
                        };
                        let mut pts = vec![a];
                        pts.extend(model.q_fn().kinks(a, b));
                        pts.push(b);
                        pts.windows(2).map(|p| quadrature::integrate(w, p[0], p[1])).sum::<Result<f64>>()
                    };
                    for (a, b) in h_sets.plus.within(x, y).chain(h_sets.minus.within(x, y)) {
                        num_a += act(a, b)?;
                    }
                    den_m += model.m_ac_affine(x, y, al, be)?;
                    den_q += q_prime_affine(model, x, y, al, be)?;
                    num_m += h_sets.integrate(x, y, |a, b| match gain {
                        None => model.m_ac_affine(a, b, al, be),
                        Some(_) => model.m_ac_fn().integrate_with(a, b, |s| g(s) * (al + be * s)),
                    })?;
                    num_q += h_sets.integrate(x, y, |a, b| match gain {
                        None => q_prime_affine(model, a, b, al, be),
                        Some(_) => q_prime_weighted(model, a, b, |s| g(s) * (al + be * s)),
                    })?;
                }
                w_ac[i] = if den_m > 0.0 { num_m / den_m } else { 0.0 };
                w_jump[i] = if den_q > 0.0 { num_q / den_q } else { 0.0 };
                w_activity[i] = if den_a > 0.0 { num_a / den_a } else { 0.0 };
            }
            let mut rate = h_point[i] * bundle.nu.atom_at(node.u);
            if let (Some(ac), Some(sets)) = (ac, &nu_sets) {
                rate += sets.integrate(node.cell.0, node.cell.1, |a, b| match gain {
                    None => ac.density.integrate_affine(a, b, 1.0, 0.0),
                    Some(_) => ac.density.integrate_with(a, b, g),
                })?;
            }
            nu_rate[i] = rate;
        }
        let is_zero = [&h_point, &w_ac, &w_jump, &nu_rate].iter().all(|v| v.iter().all(|&x| x == 0.0));
        Ok(StrategyTables { h_point, w_ac, w_jump, w_activity, nu_rate, stop_level: strategy.stop_level(), is_zero })
    }
}

/// A recorded path. `times[k]` is when the path arrives at `states[k]`; the
/// last step is cut at the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<usize>,
    pub absorbed_at: Option<(f64, usize)>,
    pub horizon: f64,
    pub stream: u64,
    pub left_window: bool,
}

/// Next-state choice of a path driver.
trait Source {
    fn next(&mut self, chain: &GridChain, node: usize) -> usize;
}

struct RngSource {
    rng: ChaCha8Rng,
    bits: u64,
    left: u32,
}

impl RngSource {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngSource { rng, bits: 0, left: 0 }
    }
}

impl Source for RngSource {
    #[inline]
    fn next(&mut self, chain: &GridChain, i: usize) -> usize {
        let n = &chain.nodes[i];
        let right = if n.p_right == 0.5 {
            if self.left == 0 {
                self.bits = self.rng.next_u64_compat();
                self.left = 64;
            }
            let b = self.bits & 1 == 1;
            self.bits >>= 1;
            self.left -= 1;
            b
        } else if n.p_right >= 1.0 {
            true
        } else if n.p_right <= 0.0 {
            false
        } else {
            self.rng.gen::<f64>() < n.p_right
        };
        if right {
            i + 1
        } else {
            i - 1
        }
    }
}

trait NextU64 {
    fn next_u64_compat(&mut self) -> u64;
}

impl NextU64 for ChaCha8Rng {
    #[inline]
    fn next_u64_compat(&mut self) -> u64 {
        rand::RngCore::next_u64(self)
    }
}

struct ReplaySource<'a> {
    states: &'a [usize],
    k: usize,
}

impl Source for ReplaySource<'_> {
    fn next(&mut self, _: &GridChain, _: usize) -> usize {
        self.k += 1;
        self.states[self.k]
    }
}

/// Quantities tracked along a path for one strategy.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrategyPathStats {
    /// Terminal value from the stochastic-integral route.
    pub v_integral: f64,
    /// Terminal value from the local-time route.
    pub v_closed: f64,
    /// Smallest increment of the integral route (0 if none).
    pub min_increment: f64,
    /// `∫ H²q'² d⟨U⟩` before absorption, with each `⟨U⟩` increment spread
    /// over the tent of the node it leaves.
    pub martingale_activity: f64,
    /// Every nonzero value increment came with a nonzero `⟨U⟩` increment.
    pub dominated_by_qv_u: bool,
    /// Some nonzero value increment came with a nonzero `⟨S⟩` increment.
    pub meets_qv_s: bool,
    /// The local-time route accrued strictly positive mass.
    pub clock_positive: bool,
}

/// What a path produced.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub strategies: Vec<StrategyPathStats>,
    pub final_node: usize,
    pub absorbed_at: Option<f64>,
    pub qv_u: f64,
    /// Terminal local time at each probed node.
    pub local_times: Vec<f64>,
    /// Holding time accumulated at each probed node.
    pub occupation: Vec<f64>,
    /// First arrival at each probed node, if before the horizon.
    pub hits: Vec<Option<f64>>,
    pub left_window: bool,
    pub steps: u64,
}

/// Nodes at which local time, occupation and hitting times are recorded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Probes {
    pub nodes: Vec<usize>,
}

/// One increment of both routes, recorded when series are requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub t: f64,
    pub v_integral: f64,
    pub v_closed: f64,
    pub qv_u: f64,
    pub qv_s: f64,
}

struct Track<'a> {
    tab: &'a StrategyTables,
    stats: StrategyPathStats,
    stopped: bool,
    started_below: Option<bool>,
    series: Option<Vec<SeriesPoint>>,
    qv_u: f64,
    qv_s: f64,
}

impl Track<'_> {
    fn active(&mut self, u: f64) -> bool {
        if self.stopped {
            return false;
        }
        if let (Some(level), Some(below)) = (self.tab.stop_level, self.started_below) {
            if (below && u >= level) || (!below && u <= level) {
                self.stopped = true;
                return false;
            }
        }
        true
    }

    #[inline]
    fn add(&mut self, t: f64, dv: f64, dc: f64, d_qv_u: f64, d_qv_s: f64) {
        let s = &mut self.stats;
        s.v_integral += dv;
        s.v_closed += dc;
        if dv < s.min_increment {
            s.min_increment = dv;
        }
        if dv != 0.0 {
            if d_qv_u == 0.0 {
                s.dominated_by_qv_u = false;
            }
            if d_qv_s != 0.0 {
                s.meets_qv_s = true;
            }
        }
        if dc > 0.0 {
            s.clock_positive = true;
        }
        if let Some(series) = &mut self.series {
            self.qv_u += d_qv_u;
            self.qv_s += d_qv_s;
            series.push(SeriesPoint {
                t,
                v_integral: s.v_integral,
                v_closed: s.v_closed,
                qv_u: self.qv_u,
                qv_s: self.qv_s,
            });
        }
    }
}

struct Driven {
    outcome: PathOutcome,
    path: Option<PathSample>,
    series: Vec<Vec<SeriesPoint>>,
}

#[allow(clippy::too_many_arguments)]
fn drive<S: Source>(
    chain: &GridChain,
    tables: &[&StrategyTables],
    probes: &Probes,
    horizon: f64,
    source: &mut S,
    budget: u64,
    record_path: bool,
    record_series: bool,
) -> Result<Driven> {
    let r = chain.rate;
    let u0 = chain.nodes[chain.start].u;
    let mut tracks: Vec<Track> = tables
        .iter()
        .map(|tab| Track {
            tab,
            stats: StrategyPathStats { dominated_by_qv_u: true, ..Default::default() },
            stopped: false,
            started_below: tab.stop_level.map(|l| u0 < l),
            series: record_series
                .then(|| vec![SeriesPoint { t: 0.0, v_integral: 0.0, v_closed: 0.0, qv_u: 0.0, qv_s: 0.0 }]),
            qv_u: 0.0,
            qv_s: 0.0,
        })
        .collect();
    let mut probe_lt = vec![0.0; probes.nodes.len()];
    let mut probe_occ = vec![0.0; probes.nodes.len()];
    let mut probe_hit: Vec<Option<f64>> = vec![None; probes.nodes.len()];
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut i = chain.start;
    let mut t = 0.0;
    let mut d0 = 1.0;
    let d_end = (-r * horizon).exp();
    let mut qv_u = 0.0;
    let mut steps: u64 = 0;
    let mut absorbed_at = None;
    let mut left_window = false;
    if record_path {
        times.push(0.0);
        states.push(i);
    }
    loop {
        for (k, &p) in probes.nodes.iter().enumerate() {
            if p == i && probe_hit[k].is_none() {
                probe_hit[k] = Some(t);
            }
        }
        let node = &chain.nodes[i];
        if node.kind == NodeKind::Absorbing {
            absorbed_at = Some(t);
            let clock = if r != 0.0 { (d0 - d_end) / r } else { horizon - t };
            for tr in &mut tracks {
                if !tr.active(node.u) {
                    continue;
                }
                let h = tr.tab.h_point[i];
                let dv = h * node.q * (d_end - d0);
                let dc = tr.tab.nu_rate[i] * clock;
                tr.add(horizon, dv, dc, 0.0, 0.0);
            }
            for (k, &p) in probes.nodes.iter().enumerate() {
                if p == i {
                    probe_occ[k] += horizon - t;
                }
            }
            break;
        }
        if node.kind == NodeKind::WindowEdge {
            left_window = true;
        }
        steps += 1;
        if steps > budget {
            return Err(Error::Simulation(format!("step budget {budget} exceeded before the horizon")));
        }
        if steps.is_multiple_of(64) {
            d0 = (-r * t).exp();
        }
        let t_end = t + node.dt;
        let clipped = t_end > horizon;
        let (t1, t2) = if clipped { ((t + node.tau_atom).min(horizon), horizon) } else { (t + node.tau_atom, t_end) };
        let d1 = if clipped { (-r * t1).exp() } else { d0 * chain.f_atom[i] };
        let d2 = if clipped { d_end } else { d0 * chain.f_step[i] };
        let next = if clipped { None } else { Some(source.next(chain, i)) };
        let (jump, jump2) = match next {
            Some(j) => {
                let dq = chain.nodes[j].q - node.q;
                let du = chain.nodes[j].u - node.u;
                (dq, du * du)
            }
            None => (0.0, 0.0),
        };
        let tau_b = node.dt - node.tau_atom;
        let d_qv_u = if clipped {
            let e2 = if node.left_gap == 0.0 {
                node.right_gap * node.right_gap
            } else if node.right_gap == 0.0 {
                node.left_gap * node.left_gap
            } else {
                node.left_gap * node.right_gap
            };
            if tau_b > 0.0 {
                e2 * (t2 - t1) / tau_b
            } else {
                0.0
            }
        } else {
            jump2
        };
        let d_qv_s = d2 * d2 * node.q_prime * node.q_prime * d_qv_u;
        // the push of a kink is credited pro rata when the horizon cuts the step
        let kink = if clipped { node.kink_drift * (t2 - t) / node.dt } else { node.kink_drift };
        let lt = if clipped {
            if node.m_atom > 0.0 {
                (t1 - t) / node.m_atom
            } else if node.cell_mass > 0.0 {
                (t2 - t) / node.cell_mass
            } else {
                0.0
            }
        } else {
            node.lt_step
        };
        for tr in &mut tracks {
            if !tr.active(node.u) {
                continue;
            }
            let tab = tr.tab;
            let hp = tab.h_point[i];
            // sticky phase then diffusive phase
            let dv_a = hp * (node.q * (d1 - d0) + d2 * kink);
            let dv_b = tab.w_ac[i] * node.q * (d2 - d1) + tab.w_jump[i] * d2 * (jump - kink);
            let dc = d0 * lt * tab.nu_rate[i];
            tr.stats.martingale_activity += tab.w_activity[i] * d_qv_u;
            if node.tau_atom > 0.0 || kink != 0.0 {
                tr.add(t1, dv_a, dc, 0.0, 0.0);
                tr.add(t2, dv_b, 0.0, d_qv_u, d_qv_s);
            } else {
                tr.add(t2, dv_a + dv_b, dc, d_qv_u, d_qv_s);
            }
        }
        qv_u += d_qv_u;
        for (k, &p) in probes.nodes.iter().enumerate() {
            if p == i {
                probe_lt[k] += lt;
                probe_occ[k] += t2 - t;
            }
        }
        t = t2;
        d0 = d2;
        match next {
            Some(j) => {
                i = j;
                if record_path {
                    times.push(t);
                    states.push(i);
                }
                if t >= horizon {
                    break;
                }
            }
            None => {
                if record_path {
                    times.push(t);
                    states.push(i);
                }
                break;
            }
        }
    }
    let series = tracks.iter_mut().map(|tr| tr.series.take().unwrap_or_default()).collect();
    let path = record_path.then(|| PathSample {
        times,
        states,
        absorbed_at: absorbed_at.map(|t| (t, i)),
        horizon,
        stream: 0,
        left_window,
    });
    Ok(Driven {
        outcome: PathOutcome {
            strategies: tracks.into_iter().map(|tr| tr.stats).collect(),
            final_node: i,
            absorbed_at,
            qv_u,
            local_times: probe_lt,
            occupation: probe_occ,
            hits: probe_hit,
            left_window,
            steps,
        },
        path,
        series,
    })
}

/// Samples one path until the horizon or absorption. Paths with the same
/// `(seed, stream)` are identical; distinct streams are independent.
pub fn sample_path(chain: &GridChain, horizon: f64, seed: u64, stream: u64) -> Result<PathSample> {
    sample_path_with_budget(chain, horizon, seed, stream, DEFAULT_STEP_BUDGET)
}

pub fn sample_path_with_budget(
    chain: &GridChain,
    horizon: f64,
    seed: u64,
    stream: u64,
    budget: u64,
) -> Result<PathSample> {
    check_horizon(horizon)?;
    let mut src = RngSource::new(seed, stream);
    let d = drive(chain, &[], &Probes::default(), horizon, &mut src, budget, true, false)?;
    let mut p = d.path.expect("path recorded");
    p.stream = stream;
    Ok(p)
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("horizon T = {horizon} must be positive")))
    }
}

/// Replays a recorded path through the strategy trackers, returning the
/// outcome and, per strategy, the running values of both routes.
pub fn replay(
    chain: &GridChain,
    path: &PathSample,
    tables: &[&StrategyTables],
    probes: &Probes,
) -> Result<(PathOutcome, Vec<Vec<SeriesPoint>>)> {
    let mut src = ReplaySource { states: &path.states, k: 0 };
    let d = drive(chain, tables, probes, path.horizon, &mut src, u64::MAX, false, true)?;
    Ok((d.outcome, d.series))
}

/// Local-time estimates at every node along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeField {
    /// `(time, node, increment)` in path order.
    pub increments: Vec<(f64, usize, f64)>,
    /// Terminal value per node.
    pub terminal: Vec<f64>,
    /// Nodes without speed mass in their cell.
    pub excluded: Vec<usize>,
}

impl LocalTimeField {
    /// `L̂` at `node` after all increments completed by time `t`.
    pub fn at(&self, node: usize, t: f64) -> f64 {
        self.increments.iter().filter(|e| e.1 == node && e.0 <= t).map(|e| e.2).sum()
    }
}

pub fn local_time_field(path: &PathSample, chain: &GridChain) -> LocalTimeField {
    let mut terminal = vec![0.0; chain.nodes.len()];
    let mut increments = Vec::with_capacity(path.states.len());
    for k in 0..path.states.len().saturating_sub(1) {
        let i = path.states[k];
        let node = &chain.nodes[i];
        if node.kind == NodeKind::Absorbing {
            break;
        }
        let (t0, t1) = (path.times[k], path.times[k + 1]);
        let full = (t1 - t0 - node.dt).abs() <= 1e-12 * node.dt.max(1e-300) && path.states[k + 1] != i;
        let lt = if full {
            node.lt_step
        } else if node.m_atom > 0.0 {
            (t1 - t0).min(node.tau_atom) / node.m_atom
        } else if node.cell_mass > 0.0 {
            (t1 - t0) / node.cell_mass
        } else {
            0.0
        };
        terminal[i] += lt;
        increments.push((t1, i, lt));
    }
    LocalTimeField { increments, terminal, excluded: chain.excluded.clone() }
}

/// `⟨U⟩` and `⟨S⟩` along the path times.
pub fn qv_series(path: &PathSample, chain: &GridChain) -> (Vec<f64>, Vec<f64>) {
    let r = chain.rate;
    let (mut qu, mut qs) = (vec![0.0], vec![0.0]);
    for k in 0..path.states.len().saturating_sub(1) {
        let (i, j) = (path.states[k], path.states[k + 1]);
        let node = &chain.nodes[i];
        let t1 = path.times[k + 1];
        let du = if node.kind == NodeKind::Absorbing {
            0.0
        } else if i != j {
            let d = chain.nodes[j].u - node.u;
            d * d
        } else {
            // cut at the horizon: expected squared jump, pro rata over the diffusive phase
            let tau_b = node.dt - node.tau_atom;
            let e2 = node.left_gap.max(0.0) * node.right_gap.max(0.0);
            let e2 = if e2 == 0.0 { (node.left_gap + node.right_gap).powi(2) } else { e2 };
            let tb = (t1 - path.times[k] - node.tau_atom).max(0.0);
            if tau_b > 0.0 {
                e2 * tb / tau_b
            } else {
                0.0
            }
        };
        let ds = (-2.0 * r * t1).exp() * node.q_prime * node.q_prime * du;
        qu.push(qu[k] + du);
        qs.push(qs[k] + ds);
    }
    (qu, qs)
}

/// First time the path is at `node`, or `None` if not before the horizon.
pub fn hitting_time(path: &PathSample, node: usize) -> Option<f64> {
    path.states.iter().position(|&s| s == node).map(|k| path.times[k]).filter(|&t| t < path.horizon || t == 0.0)
}

/// Monte Carlo budget.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    pub h: f64,
    pub horizon: f64,
    pub seed: u64,
    pub step_budget: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n_paths: 10_000, h: 0.005, horizon: 1.0, seed: 1, step_budget: DEFAULT_STEP_BUDGET }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Argument("number of paths must be at least 1".into()));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::Argument(format!("h = {} must be positive", self.h)));
        }
        check_horizon(self.horizon)
    }
}

/// Worker count from the environment, at least 1.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0)
}

/// Runs `cfg.n_paths` independent paths; path `k` uses stream `k`.
pub fn run_paths(
    chain: &GridChain,
    tables: &[&StrategyTables],
    probes: &Probes,
    cfg: &McConfig,
) -> Result<Vec<PathOutcome>> {
    cfg.validate()?;
    let work = || {
        (0..cfg.n_paths as u64)
            .into_par_iter()
            .map(|k| {
                let mut src = RngSource::new(cfg.seed, k);
                drive(chain, tables, probes, cfg.horizon, &mut src, cfg.step_budget, false, false).map(|d| d.outcome)
            })
            .collect::<Result<Vec<_>>>()
    };
    match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Simulation(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}
