//! Privacy primitives: budgets, Laplace noise, and a composition ledger.
//!
//! Budgets are consume-once. A learner receives a [`BudgetId`] inside a
//! [`Session`], splits it into the fractions its algorithm prescribes, and
//! every mechanism spends exactly one leaf before drawing noise. The ledger
//! can then be audited: total spend, per-mechanism spend, split fractions.

use rand::distributions::{Distribution, Open01};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// An (epsilon, delta) pair. `delta == 0` is pure DP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) || !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidBudget { epsilon, delta });
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    pub fn is_pure(&self) -> bool {
        self.delta == 0.0
    }

    /// Splits the budget by `fractions` (positive, summing to 1 within one
    /// ulp). The children's epsilons, summed left to right, reproduce the
    /// parent epsilon bit-for-bit; likewise for delta.
    pub fn split(&self, fractions: &[f64]) -> Result<Vec<PrivacyBudget>> {
        if fractions.is_empty() || fractions.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::BadSplit(fractions.iter().sum()));
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > f64::EPSILON {
            return Err(Error::BadSplit(total));
        }
        let eps = exact_parts(self.epsilon, fractions);
        let del = exact_parts(self.delta, fractions);
        Ok(eps
            .into_iter()
            .zip(del)
            .map(|(epsilon, delta)| PrivacyBudget { epsilon, delta })
            .collect())
    }
}

/// `fraction * total` for all but the last part; the last part absorbs the
/// remainder and is nudged by ulps until the left-to-right sum is `total`.
/// When the head sum sits on a rounding tie the target can be skipped over
/// entirely, so the part before the last is nudged as well if needed.
fn exact_parts(total: f64, fractions: &[f64]) -> Vec<f64> {
    let k = fractions.len();
    let mut parts: Vec<f64> = fractions[..k - 1].iter().map(|f| f * total).collect();
    if k == 1 || total == 0.0 {
        parts.push(total - parts.iter().sum::<f64>());
        return parts;
    }
    let original = parts[k - 2];
    for attempt in 0..16 {
        // offsets 0, +1, -1, +2, -2, ... ulps on the part before the last
        let mut p = original;
        for _ in 0..(attempt + 1) / 2 {
            p = if attempt % 2 == 1 { p.next_up() } else { p.next_down() };
        }
        parts[k - 2] = p;
        let head: f64 = parts.iter().sum();
        let mut last = total - head;
        for _ in 0..8 {
            let sum = head + last;
            if sum == total {
                parts.push(last);
                return parts;
            }
            last = if sum < total { last.next_up() } else { last.next_down() };
        }
    }
    parts[k - 2] = original;
    let head: f64 = parts.iter().sum();
    parts.push(total - head);
    parts
}

/// Laplace scale `b = sensitivity / epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseScale(f64);

impl NoiseScale {
    pub fn new(scale_b: f64) -> Result<Self> {
        if scale_b.is_finite() && scale_b > 0.0 {
            Ok(Self(scale_b))
        } else {
            Err(Error::InvalidScale(scale_b))
        }
    }

    pub fn from_sensitivity(sensitivity: f64, epsilon: f64) -> Result<Self> {
        Self::new(sensitivity / epsilon)
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Seeded random stream. Equal `(seed, stream_id)` pairs yield equal draw
/// sequences; distinct stream ids select independent ChaCha streams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// One Laplace draw by inverse CDF: `u ~ U(-1/2, 1/2)`,
/// `z = -b * sign(u) * ln(1 - 2|u|)`. Returns exactly 0 when `noiseless`,
/// without touching the generator.
pub fn sample_laplace<R: RngCore + ?Sized>(scale: NoiseScale, rng: &mut R, noiseless: bool) -> f64 {
    if noiseless {
        return 0.0;
    }
    let u: f64 = <Open01 as Distribution<f64>>::sample(&Open01, rng) - 0.5;
    -scale.value() * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Laplace noise source shared by the mechanisms of one invocation. Counts
/// every draw, including the zero draws of noiseless mode, so tests can
/// audit how many noisy releases a mechanism made.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: RngStream,
    noiseless: bool,
    draws: u64,
}

impl NoiseSource {
    pub fn new(rng: RngStream, noiseless: bool) -> Self {
        Self {
            rng,
            noiseless,
            draws: 0,
        }
    }

    pub fn laplace(&mut self, scale: NoiseScale) -> f64 {
        self.draws += 1;
        sample_laplace(scale, &mut self.rng, self.noiseless)
    }

    pub fn noiseless(&self) -> bool {
        self.noiseless
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }
}

/// `#{x in data : x < threshold} / n` plus Laplace noise. Not clamped.
pub fn noisy_fraction_below(
    data: &Dataset,
    threshold: f64,
    scale: NoiseScale,
    noise: &mut NoiseSource,
) -> f64 {
    data.fraction_below(threshold) + noise.laplace(scale)
}

/// Handle to a node in a [`BudgetLedger`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BudgetId(usize);

#[derive(Debug, Clone, PartialEq)]
enum NodeState {
    Fresh,
    Split(Vec<usize>),
    Spent,
}

#[derive(Debug, Clone)]
struct Node {
    label: String,
    budget: PrivacyBudget,
    parent: Option<usize>,
    state: NodeState,
}

/// One mechanism's spend as recorded by the ledger.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub label: String,
    pub budget: PrivacyBudget,
    /// Fraction of the root budget's epsilon this spend represents.
    pub root_fraction: f64,
}

/// Tree of granted, split and spent budgets. A node may be split or spent
/// once; any second use is [`Error::BudgetExhausted`].
#[derive(Debug, Clone, Default)]
pub struct BudgetLedger {
    nodes: Vec<Node>,
    spends: Vec<usize>,
}

impl BudgetLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn grant(&mut self, budget: PrivacyBudget, label: &str) -> BudgetId {
        self.nodes.push(Node {
            label: label.to_string(),
            budget,
            parent: None,
            state: NodeState::Fresh,
        });
        BudgetId(self.nodes.len() - 1)
    }

    pub fn budget(&self, id: BudgetId) -> PrivacyBudget {
        self.nodes[id.0].budget
    }

    pub fn label(&self, id: BudgetId) -> &str {
        &self.nodes[id.0].label
    }

    pub fn split(&mut self, id: BudgetId, fractions: &[f64], labels: &[&str]) -> Result<Vec<BudgetId>> {
        debug_assert_eq!(fractions.len(), labels.len());
        self.ensure_fresh(id)?;
        let parts = self.nodes[id.0].budget.split(fractions)?;
        let labelled: Vec<(PrivacyBudget, &str)> = parts
            .into_iter()
            .enumerate()
            .map(|(i, b)| (b, labels.get(i).copied().unwrap_or("part")))
            .collect();
        Ok(self.attach(id, &labelled))
    }

    /// Splits into explicitly given budgets (e.g. `(eps/2, delta) + (eps/2, 0)`)
    /// whose left-to-right sums must reproduce the parent exactly.
    pub fn split_exact(&mut self, id: BudgetId, parts: &[(PrivacyBudget, &str)]) -> Result<Vec<BudgetId>> {
        self.ensure_fresh(id)?;
        let parent = self.nodes[id.0].budget;
        let eps: f64 = parts.iter().map(|(b, _)| b.epsilon).sum();
        let delta: f64 = parts.iter().map(|(b, _)| b.delta).sum();
        if parts.is_empty() || eps != parent.epsilon || delta != parent.delta {
            return Err(Error::BadSplit(eps / parent.epsilon));
        }
        Ok(self.attach(id, parts))
    }

    fn attach(&mut self, id: BudgetId, parts: &[(PrivacyBudget, &str)]) -> Vec<BudgetId> {
        let base = self.nodes.len();
        for &(budget, label) in parts {
            self.nodes.push(Node {
                label: label.to_string(),
                budget,
                parent: Some(id.0),
                state: NodeState::Fresh,
            });
        }
        let children: Vec<usize> = (base..self.nodes.len()).collect();
        self.nodes[id.0].state = NodeState::Split(children.clone());
        children.into_iter().map(BudgetId).collect()
    }

    /// Marks the node as consumed by one mechanism and returns its budget.
    pub fn spend(&mut self, id: BudgetId) -> Result<PrivacyBudget> {
        self.ensure_fresh(id)?;
        self.nodes[id.0].state = NodeState::Spent;
        self.spends.push(id.0);
        Ok(self.nodes[id.0].budget)
    }

    fn ensure_fresh(&self, id: BudgetId) -> Result<()> {
        match self.nodes[id.0].state {
            NodeState::Fresh => Ok(()),
            _ => Err(Error::BudgetExhausted(self.nodes[id.0].label.clone())),
        }
    }

    /// Spend accumulated under `id`: children are summed left to right.
    pub fn spent_under(&self, id: BudgetId) -> PrivacyBudget {
        let node = &self.nodes[id.0];
        match &node.state {
            NodeState::Fresh => PrivacyBudget {
                epsilon: 0.0,
                delta: 0.0,
            },
            NodeState::Spent => node.budget,
            NodeState::Split(children) => {
                let mut epsilon = 0.0;
                let mut delta = 0.0;
                for &c in children {
                    let b = self.spent_under(BudgetId(c));
                    epsilon += b.epsilon;
                    delta += b.delta;
                }
                PrivacyBudget { epsilon, delta }
            }
        }
    }

    pub fn children(&self, id: BudgetId) -> Option<Vec<BudgetId>> {
        match &self.nodes[id.0].state {
            NodeState::Split(c) => Some(c.iter().copied().map(BudgetId).collect()),
            _ => None,
        }
    }

    fn root_of(&self, mut idx: usize) -> usize {
        while let Some(p) = self.nodes[idx].parent {
            idx = p;
        }
        idx
    }

    /// Spends in the order they happened.
    pub fn entries(&self) -> Vec<LedgerEntry> {
        self.spends
            .iter()
            .map(|&i| {
                let node = &self.nodes[i];
                let root = &self.nodes[self.root_of(i)];
                LedgerEntry {
                    label: node.label.clone(),
                    budget: node.budget,
                    root_fraction: node.budget.epsilon / root.budget.epsilon,
                }
            })
            .collect()
    }
}

/// Ledger plus noise source: everything a mechanism needs besides data.
#[derive(Debug, Clone)]
pub struct Session {
    ledger: BudgetLedger,
    noise: NoiseSource,
}

impl Session {
    pub fn new(rng: RngStream, noiseless: bool) -> Self {
        Self {
            ledger: BudgetLedger::new(),
            noise: NoiseSource::new(rng, noiseless),
        }
    }

    pub fn grant(&mut self, budget: PrivacyBudget, label: &str) -> BudgetId {
        self.ledger.grant(budget, label)
    }

    pub fn split(&mut self, id: BudgetId, fractions: &[f64], labels: &[&str]) -> Result<Vec<BudgetId>> {
        self.ledger.split(id, fractions, labels)
    }

    pub fn split_exact(&mut self, id: BudgetId, parts: &[(PrivacyBudget, &str)]) -> Result<Vec<BudgetId>> {
        self.ledger.split_exact(id, parts)
    }

    pub fn spend(&mut self, id: BudgetId) -> Result<PrivacyBudget> {
        self.ledger.spend(id)
    }

    pub fn budget(&self, id: BudgetId) -> PrivacyBudget {
        self.ledger.budget(id)
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    pub fn noise(&mut self) -> &mut NoiseSource {
        &mut self.noise
    }

    pub fn noise_draws(&self) -> u64 {
        self.noise.draws()
    }

    pub fn noiseless(&self) -> bool {
        self.noise.noiseless()
    }
}
