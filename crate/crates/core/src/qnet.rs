//! One-hidden-layer Q-networks, RMSprop, target networks and replay buffers.

use std::collections::VecDeque;

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::QnetError;
use crate::tracker::FEATURE_SCHEMA_VERSION;

pub const CHECKPOINT_FORMAT: u32 = 1;

/// `q = W2 · relu(W1 · x + b1) + b2`.
///
/// Parameters live in one flat vector. W1 is kept input-major so that the
/// mostly-binary feature vectors can be applied by skipping zero inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    in_dim: usize,
    hidden: usize,
    out_dim: usize,
    params: Vec<f64>,
}

/// One regression target for a single chosen output.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub x: &'a [f64],
    pub action: usize,
    pub target: f64,
}

impl Mlp {
    pub fn init(in_dim: usize, hidden: usize, out_dim: usize, seed: u64) -> Result<Mlp, QnetError> {
        let mut net = Mlp::zeros(in_dim, hidden, out_dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u1 = Uniform::new_inclusive(-1.0 / (in_dim as f64).sqrt(), 1.0 / (in_dim as f64).sqrt());
        for h in 0..hidden {
            for i in 0..in_dim {
                let w = u1.sample(&mut rng);
                net.set_w1(h, i, w);
            }
        }
        let u2 = Uniform::new_inclusive(-1.0 / (hidden as f64).sqrt(), 1.0 / (hidden as f64).sqrt());
        for o in 0..out_dim {
            for h in 0..hidden {
                let w = u2.sample(&mut rng);
                net.set_w2(o, h, w);
            }
        }
        Ok(net)
    }

    pub fn zeros(in_dim: usize, hidden: usize, out_dim: usize) -> Result<Mlp, QnetError> {
        for d in [in_dim, hidden, out_dim] {
            if d == 0 {
                return Err(QnetError::DimensionMismatch {
                    expected: 1,
                    actual: 0,
                });
            }
        }
        Ok(Mlp {
            in_dim,
            hidden,
            out_dim,
            params: vec![0.0; in_dim * hidden + hidden + out_dim * hidden + out_dim],
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn b1_off(&self) -> usize {
        self.in_dim * self.hidden
    }

    fn w2_off(&self) -> usize {
        self.b1_off() + self.hidden
    }

    fn b2_off(&self) -> usize {
        self.w2_off() + self.out_dim * self.hidden
    }

    pub fn w1(&self, h: usize, i: usize) -> f64 {
        self.params[i * self.hidden + h]
    }

    pub fn set_w1(&mut self, h: usize, i: usize, v: f64) {
        let hid = self.hidden;
        self.params[i * hid + h] = v;
    }

    pub fn b1(&self) -> &[f64] {
        &self.params[self.b1_off()..self.w2_off()]
    }

    pub fn b1_mut(&mut self) -> &mut [f64] {
        let (a, b) = (self.b1_off(), self.w2_off());
        &mut self.params[a..b]
    }

    pub fn w2(&self, o: usize, h: usize) -> f64 {
        self.params[self.w2_off() + o * self.hidden + h]
    }

    pub fn set_w2(&mut self, o: usize, h: usize, v: f64) {
        let off = self.w2_off() + o * self.hidden + h;
        self.params[off] = v;
    }

    pub fn b2(&self) -> &[f64] {
        &self.params[self.b2_off()..]
    }

    pub fn b2_mut(&mut self) -> &mut [f64] {
        let off = self.b2_off();
        &mut self.params[off..]
    }

    fn check_input(&self, x: &[f64]) -> Result<(), QnetError> {
        if x.len() != self.in_dim {
            return Err(QnetError::DimensionMismatch {
                expected: self.in_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Hidden pre-activations into `pre`.
    fn hidden_pre(&self, x: &[f64], pre: &mut [f64]) {
        let hid = self.hidden;
        pre.copy_from_slice(self.b1());
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.params[i * hid..(i + 1) * hid];
            for (p, w) in pre.iter_mut().zip(row) {
                *p += xi * w;
            }
        }
    }

    fn output(&self, o: usize, pre: &[f64]) -> f64 {
        let off = self.w2_off() + o * self.hidden;
        let row = &self.params[off..off + self.hidden];
        let mut q = self.params[self.b2_off() + o];
        for (w, p) in row.iter().zip(pre) {
            if *p > 0.0 {
                q += w * p;
            }
        }
        q
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, QnetError> {
        self.check_input(x)?;
        let mut pre = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.out_dim];
        self.forward_into(x, &mut pre, &mut out);
        Ok(out)
    }

    /// Unchecked forward pass using caller-owned buffers.
    pub fn forward_into(&self, x: &[f64], pre: &mut [f64], out: &mut [f64]) {
        self.hidden_pre(x, pre);
        for (o, q) in out.iter_mut().enumerate() {
            *q = self.output(o, pre);
        }
    }

    /// Mean squared TD error over the batch and its gradient with respect to
    /// every parameter (same flat layout as [`Mlp::params`]).
    pub fn batch_loss_grad(&self, batch: &[Sample<'_>]) -> Result<(f64, Vec<f64>), QnetError> {
        let mut grads = vec![0.0; self.params.len()];
        let loss = self.batch_loss_grad_into(batch, &mut grads)?;
        Ok((loss, grads))
    }

    pub fn batch_loss_grad_into(&self, batch: &[Sample<'_>], grads: &mut [f64]) -> Result<f64, QnetError> {
        if batch.is_empty() {
            return Err(QnetError::EmptyBatch);
        }
        for s in batch {
            self.check_input(s.x)?;
            if s.action >= self.out_dim {
                return Err(QnetError::DimensionMismatch {
                    expected: self.out_dim,
                    actual: s.action + 1,
                });
            }
        }
        grads.fill(0.0);
        let hid = self.hidden;
        let (b1_off, w2_off, b2_off) = (self.b1_off(), self.w2_off(), self.b2_off());
        let scale = 1.0 / batch.len() as f64;
        let mut pre = vec![0.0; hid];
        let mut dpre = vec![0.0; hid];
        let mut loss = 0.0;
        for s in batch {
            self.hidden_pre(s.x, &mut pre);
            let q = self.output(s.action, &pre);
            let err = s.target - q;
            loss += err * err * scale;
            let dq = -2.0 * err * scale;
            let a_off = s.action * hid;
            grads[b2_off + s.action] += dq;
            for j in 0..hid {
                if pre[j] > 0.0 {
                    grads[w2_off + a_off + j] += dq * pre[j];
                    dpre[j] = dq * self.params[w2_off + a_off + j];
                } else {
                    dpre[j] = 0.0;
                }
            }
            for (g, d) in grads[b1_off..b1_off + hid].iter_mut().zip(&dpre) {
                *g += d;
            }
            for (i, &xi) in s.x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let row = &mut grads[i * hid..(i + 1) * hid];
                for (g, d) in row.iter_mut().zip(&dpre) {
                    *g += xi * d;
                }
            }
        }
        Ok(loss)
    }

    pub fn loss(&self, batch: &[Sample<'_>]) -> f64 {
        let mut pre = vec![0.0; self.hidden];
        batch
            .iter()
            .map(|s| {
                self.hidden_pre(s.x, &mut pre);
                let e = s.target - self.output(s.action, &pre);
                e * e
            })
            .sum::<f64>()
            / batch.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Parameters in the external order: W1 row-major `[hidden × in]`, b1,
    /// W2 row-major `[out × hidden]`, b2.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.layout_out(&self.params)
    }

    fn layout_out(&self, flat: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(flat.len());
        for h in 0..self.hidden {
            for i in 0..self.in_dim {
                out.push(flat[i * self.hidden + h]);
            }
        }
        out.extend_from_slice(&flat[self.b1_off()..]);
        out
    }

    fn layout_in(&self, external: &[f64]) -> Vec<f64> {
        let mut flat = vec![0.0; self.params.len()];
        for h in 0..self.hidden {
            for i in 0..self.in_dim {
                flat[i * self.hidden + h] = external[h * self.in_dim + i];
            }
        }
        flat[self.b1_off()..].copy_from_slice(&external[self.b1_off()..]);
        flat
    }
}

/// Clamps every gradient entry to `[-limit, limit]`.
pub fn clip_gradients(grads: &mut [f64], limit: f64) {
    for g in grads {
        *g = g.clamp(-limit, limit);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
    pub cache: Vec<f64>,
}

impl RmsProp {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        RmsProp {
            lr,
            decay: 0.95,
            eps: 1e-6,
            cache: vec![0.0; net.num_params()],
        }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &[f64]) {
        assert_eq!(grads.len(), net.params.len());
        let (lr, decay, eps) = (self.lr, self.decay, self.eps);
        for ((p, c), g) in net.params.iter_mut().zip(self.cache.iter_mut()).zip(grads) {
            *c = decay * *c + (1.0 - decay) * g * g;
            if *g != 0.0 {
                *p -= lr * g / (*c + eps).sqrt();
            }
        }
    }
}

pub fn td_target_low(reward: f64, next_max_q: f64, terminal: bool, gamma: f64) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma * next_max_q
    }
}

pub fn td_target_top(discounted_reward: f64, next_max_q: f64, steps: usize, terminal: bool, gamma: f64) -> f64 {
    if terminal {
        discounted_reward
    } else {
        discounted_reward + gamma.powi(steps as i32) * next_max_q
    }
}

/// `max_a Q(x, a)` over the outputs allowed by `mask` (all when `None`).
pub fn max_q(net: &Mlp, x: &[f64], mask: Option<&[bool]>) -> Result<f64, QnetError> {
    let q = net.forward(x)?;
    Ok(masked_argmax(&q, mask).map(|i| q[i]).unwrap_or(0.0))
}

/// Index of the largest value among allowed entries; ties go to the lowest index.
pub fn masked_argmax(q: &[f64], mask: Option<&[bool]>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in q.iter().enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        if best.is_none_or(|b| *v > q[b]) {
            best = Some(i);
        }
    }
    best
}

/// Online network, its frozen target copy and optimizer state.
#[derive(Debug, Clone)]
pub struct QNetwork {
    pub online: Mlp,
    pub target: Mlp,
    pub opt: RmsProp,
    pub clip: f64,
    grads: Vec<f64>,
    pre: Vec<f64>,
    out: Vec<f64>,
}

impl QNetwork {
    pub fn new(in_dim: usize, hidden: usize, out_dim: usize, lr: f64, clip: f64, seed: u64) -> Result<Self, QnetError> {
        let online = Mlp::init(in_dim, hidden, out_dim, seed)?;
        Ok(Self::from_parts(online.clone(), online, lr, clip))
    }

    pub fn from_parts(online: Mlp, target: Mlp, lr: f64, clip: f64) -> Self {
        let opt = RmsProp::new(&online, lr);
        QNetwork {
            grads: vec![0.0; online.num_params()],
            pre: vec![0.0; online.hidden()],
            out: vec![0.0; online.out_dim()],
            online,
            target,
            opt,
            clip,
        }
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }

    /// Max of the target network's outputs, restricted by `mask`.
    pub fn target_max(&mut self, x: &[f64], mask: Option<&[bool]>) -> f64 {
        self.target.forward_into(x, &mut self.pre, &mut self.out);
        masked_argmax(&self.out, mask).map(|i| self.out[i]).unwrap_or(0.0)
    }

    pub fn q_values(&mut self, x: &[f64]) -> &[f64] {
        self.online.forward_into(x, &mut self.pre, &mut self.out);
        &self.out
    }

    /// One clipped RMSprop step on the batch; returns the pre-update loss.
    pub fn train(&mut self, batch: &[Sample<'_>]) -> Result<f64, QnetError> {
        let loss = self.online.batch_loss_grad_into(batch, &mut self.grads)?;
        clip_gradients(&mut self.grads, self.clip);
        self.opt.step(&mut self.online, &self.grads);
        Ok(loss)
    }

    pub fn checkpoint(&self) -> NetCheckpoint {
        NetCheckpoint {
            format: CHECKPOINT_FORMAT,
            feature_schema_version: FEATURE_SCHEMA_VERSION,
            in_dim: self.online.in_dim,
            hidden: self.online.hidden,
            out_dim: self.online.out_dim,
            online: self.online.to_row_major(),
            target: self.target.to_row_major(),
            cache: self.online.layout_out(&self.opt.cache),
            lr: self.opt.lr,
            clip: self.clip,
        }
    }

    pub fn from_checkpoint(ck: &NetCheckpoint) -> Result<Self, QnetError> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(QnetError::Checkpoint(format!("unsupported format {}", ck.format)));
        }
        if ck.feature_schema_version != FEATURE_SCHEMA_VERSION {
            return Err(QnetError::Checkpoint(format!(
                "feature schema {} does not match {}",
                ck.feature_schema_version, FEATURE_SCHEMA_VERSION
            )));
        }
        let mut online = Mlp::zeros(ck.in_dim, ck.hidden, ck.out_dim)?;
        let n = online.num_params();
        for (name, v) in [("online", &ck.online), ("target", &ck.target), ("cache", &ck.cache)] {
            if v.len() != n {
                return Err(QnetError::Checkpoint(format!("{name} has {} values, expected {n}", v.len())));
            }
        }
        online.params = online.layout_in(&ck.online);
        let mut target = online.clone();
        target.params = online.layout_in(&ck.target);
        let mut net = QNetwork::from_parts(online, target, ck.lr, ck.clip);
        net.opt.cache = net.online.layout_in(&ck.cache);
        if !net.online.is_finite() || !net.target.is_finite() {
            return Err(QnetError::Checkpoint("non-finite parameters".into()));
        }
        Ok(net)
    }
}

/// Serialized network pair plus optimizer state. Arrays are row-major in
/// the order W1 `[hidden × in]`, b1, W2 `[out × hidden]`, b2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetCheckpoint {
    pub format: u32,
    pub feature_schema_version: u32,
    pub in_dim: usize,
    pub hidden: usize,
    pub out_dim: usize,
    pub online: Vec<f64>,
    pub target: Vec<f64>,
    pub cache: Vec<f64>,
    pub lr: f64,
    pub clip: f64,
}

/// Bounded FIFO store; the oldest entry is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: VecDeque<T>,
    capacity: usize,
    pushes: u64,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
            capacity,
            pushes: 0,
        }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
        self.pushes += 1;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total pushes since creation, including evicted and flushed entries.
    pub fn total_pushes(&self) -> u64 {
        self.pushes
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }

    /// Drops the `n` oldest entries.
    pub fn drop_oldest(&mut self, n: usize) {
        let n = n.min(self.items.len());
        self.items.drain(..n);
    }

    pub fn get(&self, i: usize) -> Option<&T> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// Indices drawn uniformly with replacement.
    pub fn sample_indices(&self, k: usize, rng: &mut impl Rng) -> Result<Vec<usize>, QnetError> {
        if self.items.is_empty() {
            return Err(QnetError::EmptyBuffer);
        }
        let n = self.items.len();
        Ok((0..k).map(|_| rng.gen_range(0..n)).collect())
    }

    pub fn sample(&self, k: usize, rng: &mut impl Rng) -> Result<Vec<&T>, QnetError> {
        Ok(self
            .sample_indices(k, rng)?
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_shape_and_determinism() {
        let a = Mlp::init(93, 80, 2, 4).unwrap();
        let b = Mlp::init(93, 80, 2, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.b1().iter().chain(a.b2()).all(|&v| v == 0.0));
        let bound = 1.0 / 93f64.sqrt();
        assert!((0..80).all(|h| (0..93).all(|i| a.w1(h, i).abs() <= bound)));
        assert_eq!(a.forward(&vec![0.5; 93]).unwrap().len(), 2);
        assert!(matches!(
            a.forward(&[1.0]),
            Err(QnetError::DimensionMismatch { expected: 93, actual: 1 })
        ));
    }

    #[test]
    fn hand_computed_forward() {
        let mut net = Mlp::zeros(1, 2, 1).unwrap();
        net.set_w1(0, 0, 1.0);
        net.set_w1(1, 0, -1.0);
        net.set_w2(0, 0, 1.0);
        net.set_w2(0, 1, 1.0);
        assert_eq!(net.forward(&[3.0]).unwrap(), vec![3.0]);
        let mut c = Mlp::zeros(4, 3, 2).unwrap();
        c.b2_mut().copy_from_slice(&[0.7, 0.7]);
        assert_eq!(c.forward(&[1.0, -2.0, 0.0, 9.0]).unwrap(), vec![0.7, 0.7]);
    }

    #[test]
    fn single_item_gradient_closed_form() {
        // 1-1-1 net: q = w2 * relu(w1 x + b1) + b2
        let mut net = Mlp::zeros(1, 1, 1).unwrap();
        net.set_w1(0, 0, 0.5);
        net.b1_mut()[0] = 0.1;
        net.set_w2(0, 0, 2.0);
        net.b2_mut()[0] = -0.3;
        let x = [2.0];
        let h = 0.5 * 2.0 + 0.1;
        let q = 2.0 * h - 0.3;
        let y = 1.0;
        let d = -2.0 * (y - q);
        let (loss, g) = net
            .batch_loss_grad(&[Sample { x: &x, action: 0, target: y }])
            .unwrap();
        assert!((loss - (y - q) * (y - q)).abs() < 1e-12);
        let expected = [d * 2.0 * 2.0, d * 2.0, d * h, d];
        for (a, b) in g.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_error_gives_zero_gradient() {
        let net = Mlp::init(5, 4, 3, 1).unwrap();
        let x = [1.0, 0.0, 0.5, 0.0, 1.0];
        let q = net.forward(&x).unwrap();
        let (loss, g) = net
            .batch_loss_grad(&[Sample { x: &x, action: 2, target: q[2] }])
            .unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|v| *v == 0.0));
        assert!(matches!(net.batch_loss_grad(&[]), Err(QnetError::EmptyBatch)));
    }

    #[test]
    fn rmsprop_closed_form() {
        let mut net = Mlp::zeros(1, 1, 1).unwrap();
        let mut opt = RmsProp::new(&net, 1e-3);
        let mut g = vec![0.0; net.num_params()];
        g[3] = 1.0;
        opt.step(&mut net, &g);
        assert!((opt.cache[3] - 0.05).abs() < 1e-15);
        assert!((net.b2()[0] + 0.001 / (0.05f64 + 1e-6).sqrt()).abs() < 1e-12);
        assert!((net.b2()[0] + 0.004472).abs() < 1e-6);
        let before = net.clone();
        opt.step(&mut net, &[0.0; 4]);
        assert_eq!(net, before);
        assert!((opt.cache[3] - 0.0475).abs() < 1e-15);
    }

    #[test]
    fn rmsprop_step_size_approaches_lr() {
        let mut net = Mlp::zeros(1, 1, 1).unwrap();
        let mut opt = RmsProp::new(&net, 1e-3);
        let g = vec![0.0, 0.0, 0.0, 0.5];
        let mut last = 0.0;
        for _ in 0..2000 {
            let before = net.b2()[0];
            opt.step(&mut net, &g);
            last = before - net.b2()[0];
        }
        assert!((last - 1e-3).abs() < 1e-6);
    }

    #[test]
    fn td_targets() {
        assert_eq!(td_target_low(1.95, 100.0, true, 0.95), 1.95);
        let r = -1.0 + -0.95;
        assert!((td_target_top(r, 10.0, 2, false, 0.95) - 7.075).abs() < 1e-12);
        assert_eq!(td_target_top(0.0, 5.0, 1, false, 1.0), 5.0);
    }

    #[test]
    fn target_is_a_frozen_copy() {
        let mut q = QNetwork::new(4, 3, 2, 1e-3, 1.0, 2).unwrap();
        q.online.b2_mut()[0] = 0.3;
        q.sync_target();
        assert_eq!(q.online, q.target);
        let x = [1.0, 0.0, 1.0, 0.0];
        assert_eq!(q.online.forward(&x).unwrap(), q.target.forward(&x).unwrap());
        let frozen = q.target.clone();
        q.train(&[Sample { x: &x, action: 1, target: 5.0 }]).unwrap();
        assert_eq!(q.target, frozen);
        assert_ne!(q.online, frozen);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut q = QNetwork::new(6, 4, 3, 1e-3, 1.0, 9).unwrap();
        let x = [1.0, 0.0, 0.25, 0.0, 1.0, 0.0];
        q.train(&[Sample { x: &x, action: 0, target: 1.0 }]).unwrap();
        let ck = q.checkpoint();
        let text = serde_json::to_string(&ck).unwrap();
        let back: NetCheckpoint = serde_json::from_str(&text).unwrap();
        let r = QNetwork::from_checkpoint(&back).unwrap();
        assert_eq!(r.online, q.online);
        assert_eq!(r.target, q.target);
        assert_eq!(r.opt.cache, q.opt.cache);
        let mut bad = ck.clone();
        bad.feature_schema_version += 1;
        assert!(matches!(QNetwork::from_checkpoint(&bad), Err(QnetError::Checkpoint(_))));
    }

    #[test]
    fn buffer_fifo_and_sampling() {
        let mut b = ReplayBuffer::new(3);
        assert!(matches!(
            b.sample(1, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(QnetError::EmptyBuffer)
        ));
        for i in 0..4 {
            b.push(i);
        }
        assert_eq!(b.iter().copied().collect::<Vec<_>>(), vec![1, 2, 3]);
        let s1 = b.sample(5, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let s2 = b.sample(5, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn argmax_ties_take_lowest_index() {
        let q = [0.0, 1.0, 0.5, 2.0, 0.1, 0.1, 0.1, 2.0];
        assert_eq!(masked_argmax(&q, None), Some(3));
        let mask = [true, true, true, false, true, true, true, true];
        assert_eq!(masked_argmax(&q, Some(&mask)), Some(7));
    }
}
