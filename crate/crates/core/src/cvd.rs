//! Determinant test for the CVD property of a periodic kernel: the kernel is
//! excluded as soon as two node configurations give
//! `det(epsilon K(x_i - y_j))` of opposite certified signs.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::kernel::{eval_neumann, geometric_terms, neumann_type_dd, EvalPolicy, NeumannParams};
use crate::linalg::{det_full_pivot, Matrix};

/// A 2pi-periodic kernel evaluated at node differences.
pub trait PeriodicKernel: Sync {
    fn value(&self, t: f64) -> f64;

    /// Absolute error bound of [`PeriodicKernel::value`].
    fn entry_error(&self) -> f64;

    /// Extended-precision value at an exact multiple of pi, when available.
    fn value_dd(&self, _t: Dd) -> Option<Dd> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NeumannKernel {
    pub params: NeumannParams,
    policy: EvalPolicy,
    sum_abs: f64,
}

impl NeumannKernel {
    pub fn new(params: NeumannParams) -> Result<Self> {
        params.validate()?;
        let policy = EvalPolicy::with_tol(1e-16);
        geometric_terms(params.q, 1, &policy)?;
        Ok(NeumannKernel {
            params,
            policy,
            sum_abs: -(1.0 - params.q).ln(),
        })
    }
}

impl PeriodicKernel for NeumannKernel {
    fn value(&self, t: f64) -> f64 {
        eval_neumann(self.params, t, &self.policy).expect("truncation checked at construction")
    }

    fn entry_error(&self) -> f64 {
        // truncation plus rounding of a compensated sum of terms bounded by -ln(1-q)
        self.policy.abs_tol + 4.0 * f64::EPSILON * self.sum_abs
    }

    fn value_dd(&self, t: Dd) -> Option<Dd> {
        neumann_type_dd(self.params.q, 1, self.params.beta, t, 1e-32).ok()
    }
}

/// A kernel given by a closure with a stated entry error.
pub struct FnKernel<F> {
    f: F,
    entry_error: f64,
}

impl<F: Fn(f64) -> f64 + Sync> FnKernel<F> {
    pub fn new(f: F, entry_error: f64) -> Self {
        FnKernel { f, entry_error }
    }
}

impl<F: Fn(f64) -> f64 + Sync> PeriodicKernel for FnKernel<F> {
    fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn entry_error(&self) -> f64 {
        self.entry_error
    }
}

/// The point `num / den * pi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "(i64, i64)", try_from = "(i64, i64)")]
pub struct PiMultiple {
    pub num: i64,
    pub den: i64,
}

impl PiMultiple {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(Error::InvalidParams(format!(
                "denominator must be positive, got {den}"
            )));
        }
        Ok(PiMultiple { num, den })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64 * PI
    }

    /// `self - other` as an exact multiple of pi.
    pub fn minus(&self, other: &PiMultiple) -> PiMultiple {
        PiMultiple {
            num: self.num * other.den - other.num * self.den,
            den: self.den * other.den,
        }
    }

    pub fn to_dd(&self) -> Dd {
        Dd::PI.mul_f64(self.num as f64).div_f64(self.den as f64)
    }

    fn cmp_value(&self, other: &PiMultiple) -> std::cmp::Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl From<PiMultiple> for (i64, i64) {
    fn from(p: PiMultiple) -> Self {
        (p.num, p.den)
    }
}

impl TryFrom<(i64, i64)> for PiMultiple {
    type Error = Error;
    fn try_from((num, den): (i64, i64)) -> Result<Self> {
        PiMultiple::new(num, den)
    }
}

fn pm(num: i64, den: i64) -> PiMultiple {
    PiMultiple { num, den }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeVectors {
    pub x: Vec<PiMultiple>,
    pub y: Vec<PiMultiple>,
}

impl NodeVectors {
    /// Checks equal odd lengths and `0 <= x_1 < ... < x_{2l+1} < 2pi` for both vectors.
    pub fn new(x: Vec<PiMultiple>, y: Vec<PiMultiple>) -> Result<Self> {
        if x.len() != y.len() || x.len().is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "node vectors must share an odd length, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        let zero = pm(0, 1);
        let two_pi = pm(2, 1);
        for (name, v) in [("x", &x), ("y", &y)] {
            for p in v.iter() {
                if p.den <= 0 || p.cmp_value(&zero).is_lt() || p.cmp_value(&two_pi).is_ge() {
                    return Err(Error::InvalidParams(format!(
                        "{name} nodes must lie in [0, 2pi)"
                    )));
                }
            }
            if v.windows(2).any(|w| !w[0].cmp_value(&w[1]).is_lt()) {
                return Err(Error::InvalidParams(format!(
                    "{name} nodes must be strictly increasing"
                )));
            }
        }
        Ok(NodeVectors { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// The two configurations that separate the Neumann kernels at `q = 0.21`:
/// the first gives a negative determinant, the second a positive one.
pub fn known_witnesses() -> (NodeVectors, NodeVectors) {
    let x = vec![pm(1, 18), pm(1, 9), pm(1, 6)];
    let neg = NodeVectors {
        x: x.clone(),
        y: vec![pm(13, 36), pm(11, 30), pm(67, 180)],
    };
    let pos = NodeVectors {
        x,
        y: vec![pm(13, 30), pm(10, 9), pm(7, 6)],
    };
    (neg, pos)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetReport {
    pub det: f64,
    /// Forward-error bound: sum of `|cofactor| * entry error`.
    pub error_estimate: f64,
    /// Sign when `|det| > error_estimate`.
    pub certified_sign: Option<i8>,
    /// Recomputed in double-double arithmetic.
    pub extended: bool,
}

fn cofactor_error<T: crate::linalg::Scalar>(a: &Matrix<T>, entry_err: f64, unit: f64) -> f64 {
    let d = a.dim;
    let per_entry = entry_err + 2.0 * d as f64 * unit * a.max_abs();
    if d == 1 {
        return per_entry;
    }
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            total += det_full_pivot(&a.minor(i, j)).magnitude();
        }
    }
    total * per_entry
}

/// `det(epsilon K(x_i - y_j))` by full-pivot elimination, with a forward-error
/// estimate and a double-double recomputation when the result is too close
/// to the estimate.
pub fn det_d(kernel: &dyn PeriodicKernel, nodes: &NodeVectors, epsilon: i8) -> DetReport {
    let eps = if epsilon < 0 { -1.0 } else { 1.0 };
    let d = nodes.dim();
    let a = Matrix::from_fn(d, |i, j| eps * kernel.value(nodes.x[i].minus(&nodes.y[j]).value()));
    let det = det_full_pivot(&a);
    let err = cofactor_error(&a, kernel.entry_error(), f64::EPSILON);
    let mut report = DetReport {
        det,
        error_estimate: err,
        certified_sign: None,
        extended: false,
    };
    if det.abs() < 100.0 * err {
        let entries: Option<Vec<Dd>> = (0..d * d)
            .map(|k| {
                let arg = nodes.x[k / d].minus(&nodes.y[k % d]).to_dd();
                kernel.value_dd(arg).map(|v| v.mul_f64(eps))
            })
            .collect();
        if let Some(entries) = entries {
            let ad = Matrix { dim: d, data: entries };
            let det_dd = det_full_pivot(&ad);
            report.det = det_dd.to_f64();
            report.error_estimate = cofactor_error(&ad, 1e-30, 2f64.powi(-104));
            report.extended = true;
        }
    }
    if report.det.abs() > report.error_estimate {
        report.certified_sign = Some(if report.det > 0.0 { 1 } else { -1 });
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessConfig {
    /// Total determinant evaluations across all shards.
    pub budget: u64,
    pub seed: u64,
    pub shards: u32,
    /// Lattice denominator: nodes are multiples of `pi / lattice`.
    pub lattice: i64,
    /// Greedy improvement steps tried after each random draw.
    pub local_steps: u32,
    /// Configurations examined before the random search.
    pub seeds: Vec<NodeVectors>,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        WitnessConfig {
            budget: 100_000,
            seed: 0x5eed,
            shards: 8,
            lattice: 720,
            local_steps: 8,
            seeds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub negative: NodeVectors,
    pub positive: NodeVectors,
    /// Determinants for `epsilon = +1`; `epsilon = -1` swaps their roles.
    pub det_negative: DetReport,
    pub det_positive: DetReport,
    pub evaluations: u64,
}

#[derive(Debug, Clone)]
struct Hit {
    shard: u32,
    index: u64,
    nodes: NodeVectors,
    report: DetReport,
}

fn pick(a: Option<Hit>, b: Option<Hit>) -> Option<Hit> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if (a.shard, a.index) <= (b.shard, b.index) { a } else { b }),
        (a, b) => a.or(b),
    }
}

fn random_sorted(rng: &mut ChaCha8Rng, len: usize, modulus: i64) -> Vec<i64> {
    let mut v: Vec<i64> = Vec::with_capacity(len);
    while v.len() < len {
        let c = rng.random_range(0..modulus);
        if !v.contains(&c) {
            v.push(c);
        }
    }
    v.sort_unstable();
    v
}

fn lattice_nodes(x: &[i64], y: &[i64], lattice: i64) -> NodeVectors {
    NodeVectors {
        x: x.iter().map(|&k| pm(k, lattice)).collect(),
        y: y.iter().map(|&k| pm(k, lattice)).collect(),
    }
}

struct Shard<'a> {
    kernel: &'a dyn PeriodicKernel,
    cfg: &'a WitnessConfig,
    dim: usize,
    id: u32,
    used: u64,
    budget: u64,
    neg: Option<Hit>,
    pos: Option<Hit>,
}

impl Shard<'_> {
    fn record(&mut self, nodes: &NodeVectors, report: DetReport) {
        let hit = || Hit {
            shard: self.id,
            index: self.used,
            nodes: nodes.clone(),
            report,
        };
        match report.certified_sign {
            Some(-1) if self.neg.is_none() => self.neg = Some(hit()),
            Some(1) if self.pos.is_none() => self.pos = Some(hit()),
            _ => {}
        }
    }

    fn eval(&mut self, nodes: &NodeVectors) -> DetReport {
        self.used += 1;
        let r = det_d(self.kernel, nodes, 1);
        self.record(nodes, r);
        r
    }

    fn done(&self) -> bool {
        (self.neg.is_some() && self.pos.is_some()) || self.used >= self.budget
    }

    fn run(mut self) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(self.id as u64);
        let m = self.cfg.lattice;
        let len = self.dim;
        while !self.done() {
            let mut x = random_sorted(&mut rng, len, 2 * m);
            let mut y = random_sorted(&mut rng, len, 2 * m);
            let mut best = self.eval(&lattice_nodes(&x, &y, m));
            let target = if self.neg.is_none() { -1.0 } else { 1.0 };
            for _ in 0..self.cfg.local_steps {
                if self.done() {
                    break;
                }
                let mut improved = false;
                for which in 0..2 * len {
                    for step in [-1i64, 1] {
                        if self.done() {
                            break;
                        }
                        let (v, i) = if which < len { (&mut x, which) } else { (&mut y, which - len) };
                        let c = v[i] + step;
                        let lo = if i == 0 { 0 } else { v[i - 1] + 1 };
                        let hi = if i + 1 == len { 2 * m - 1 } else { v[i + 1] - 1 };
                        if c < lo || c > hi {
                            continue;
                        }
                        v[i] = c;
                        let r = self.eval(&lattice_nodes(&x, &y, m));
                        if target * r.det > target * best.det {
                            best = r;
                            improved = true;
                        } else {
                            let (v, i) = if which < len { (&mut x, which) } else { (&mut y, which - len) };
                            v[i] -= step;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
        }
        self
    }
}

/// Searches for configurations with certified determinants of both signs.
/// The result depends only on the kernel and the configuration.
pub fn cvd_witness(kernel: &dyn PeriodicKernel, l: usize, cfg: &WitnessConfig) -> Result<Witness> {
    if l == 0 {
        return Err(Error::InvalidParams("l must be at least 1".into()));
    }
    if cfg.shards == 0 || cfg.lattice <= 0 || (2 * l + 1) as i64 > 2 * cfg.lattice {
        return Err(Error::InvalidParams("invalid witness search configuration".into()));
    }
    let dim = 2 * l + 1;
    let mut neg = None;
    let mut pos = None;
    let mut used = 0;
    for (i, s) in cfg.seeds.iter().enumerate() {
        if s.dim() != dim {
            return Err(Error::InvalidParams(format!(
                "seed configuration has dimension {}, expected {dim}",
                s.dim()
            )));
        }
        used += 1;
        let r = det_d(kernel, s, 1);
        let hit = Some(Hit {
            shard: 0,
            index: i as u64,
            nodes: s.clone(),
            report: r,
        });
        match r.certified_sign {
            Some(-1) if neg.is_none() => neg = hit,
            Some(1) if pos.is_none() => pos = hit,
            _ => {}
        }
    }

    if neg.is_none() || pos.is_none() {
        let remaining = cfg.budget.saturating_sub(used);
        let per_shard = remaining / cfg.shards as u64;
        let extra = remaining % cfg.shards as u64;
        let shards: Vec<Shard> = (0..cfg.shards)
            .into_par_iter()
            .map(|id| {
                Shard {
                    kernel,
                    cfg,
                    dim,
                    id: id + 1,
                    used: 0,
                    budget: per_shard + u64::from((id as u64) < extra),
                    neg: None,
                    pos: None,
                }
                .run()
            })
            .collect();
        // seed hits win; among random hits the lowest (shard, index) does
        let (mut rneg, mut rpos) = (None, None);
        for s in shards {
            used += s.used;
            rneg = pick(rneg, s.neg);
            rpos = pick(rpos, s.pos);
        }
        neg = neg.or(rneg);
        pos = pos.or(rpos);
    }

    match (neg, pos) {
        (Some(n), Some(p)) => Ok(Witness {
            negative: n.nodes,
            positive: p.nodes,
            det_negative: n.report,
            det_positive: p.report,
            evaluations: used,
        }),
        _ => Err(Error::NotFound { cap: cfg.budget }),
    }
}
