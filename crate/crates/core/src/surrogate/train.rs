//! Adam training of the surrogate in three variants.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{Dataset, Episode};
use super::loss::{LossValues, LossVars};
use super::mpnn::{rollout, rollout_on_tape, MpnnConfig, MpnnParams, ParamVars};
use super::tape::Tape;
use crate::adaptive::{adapt_points, AdaptiveConfig, AdaptivePoints};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::osc2d::{ScatteredFitter, SpaceTimeSurrogate};
use crate::trajectory::Trajectory;

pub const MAX_EPOCHS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Train on `L_s`; OSC only at evaluation.
    Post,
    /// Train on `L_s + L_i`.
    E2e,
    /// As `E2e`, with collocation points moved between rollouts.
    E2eAdaptive,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Post, Variant::E2e, Variant::E2eAdaptive];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Post => "post",
            Variant::E2e => "e2e",
            Variant::E2eAdaptive => "e2e-adaptive",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.label() == s)
            .ok_or_else(|| invalid(format!("unknown variant {s:?} (post, e2e, e2e-adaptive)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub variant: Variant,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub decay_every: usize,
    pub seed: u64,
    pub hidden: usize,
    pub processors: usize,
    /// Epochs between adaptation steps (adaptive variant).
    pub adapt_every: usize,
    pub divergence_threshold: f64,
    /// Adapted layouts whose scattered fit is worse conditioned are rejected.
    pub max_condition: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::E2e,
            epochs: MAX_EPOCHS,
            batch_size: 8,
            lr: 1e-3,
            lr_decay: 0.85,
            decay_every: 500,
            seed: 0,
            hidden: 64,
            processors: 3,
            adapt_every: 1,
            divergence_threshold: 1e6,
            max_condition: 1e5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.epochs > MAX_EPOCHS {
            return Err(invalid(format!("epochs must be in 1..={MAX_EPOCHS}")));
        }
        if self.batch_size == 0 || self.adapt_every == 0 || self.decay_every == 0 {
            return Err(invalid("batch size, adapt_every and decay_every must be positive"));
        }
        if !(self.lr > 0.0) || !(self.lr_decay > 0.0) {
            return Err(invalid("learning rate and decay must be positive"));
        }
        Ok(())
    }

    pub fn learning_rate(&self, epoch: usize) -> f64 {
        self.lr * self.lr_decay.powi((epoch / self.decay_every) as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub sample: f64,
    pub interp: f64,
}

pub fn metrics_csv(rows: &[EpochMetrics]) -> String {
    let mut s = String::from("epoch,L,L_s,L_i\n");
    for r in rows {
        s.push_str(&format!("{},{:e},{:e},{:e}\n", r.epoch, r.loss, r.sample, r.interp));
    }
    s
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: MpnnParams,
    pub metrics: Vec<EpochMetrics>,
    /// Mean losses over the test split.
    pub test: LossValues,
}

/// Which scalar the gradient is taken of.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossRoot {
    Total,
    Sample,
}

fn forward(mut tape: Tape, params: &MpnnParams, ep: &Episode, differentiable: bool) -> Result<(Tape, ParamVars, LossVars, LossValues)> {
    let pv = params.record(&mut tape, differentiable);
    let s0 = tape.constant(ep.initial.clone());
    let frames = rollout_on_tape(&mut tape, &pv, &ep.graph, s0, ep.loss.steps())?;
    let l = ep.loss.loss_on_tape(&mut tape, &frames)?;
    let values = LossValues { total: tape.scalar(l.total), sample: tape.scalar(l.sample), interp: tape.scalar(l.interp) };
    Ok((tape, pv, l, values))
}

/// Rectifier activation masks of one forward pass on `ep`.
pub fn relu_pattern(params: &MpnnParams, ep: &Episode) -> Result<Vec<Vec<bool>>> {
    Ok(forward(Tape::new(), params, ep, false)?.0.relu_masks())
}

/// Loss with every rectifier following `pattern` (see [`Tape::with_relu_masks`]).
pub fn episode_loss_with_pattern(params: &MpnnParams, ep: &Episode, pattern: Vec<Vec<bool>>) -> Result<LossValues> {
    Ok(forward(Tape::with_relu_masks(pattern), params, ep, false)?.3)
}

/// Loss of one episode and its gradient for every parameter tensor.
pub fn loss_and_gradient(params: &MpnnParams, ep: &Episode, root: LossRoot) -> Result<(LossValues, Vec<Matrix>)> {
    let (mut tape, pv, l, values) = forward(Tape::new(), params, ep, true)?;
    let g = tape.backward(match root {
        LossRoot::Total => l.total,
        LossRoot::Sample => l.sample,
    })?;
    let grads = pv
        .vars()
        .iter()
        .zip(params.tensors())
        .map(|(&v, t)| g.get_or_zeros(v, t.rows(), t.cols()))
        .collect();
    Ok((values, grads))
}

/// Loss of one episode, without gradients.
pub fn episode_loss(params: &MpnnParams, ep: &Episode) -> Result<LossValues> {
    let frames = rollout(params, &ep.graph, &ep.initial, ep.loss.steps())?;
    ep.loss.evaluate(&frames)
}

#[derive(Clone, Debug)]
struct Adam {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: i32,
}

impl Adam {
    fn new(p: &MpnnParams) -> Self {
        let z: Vec<Matrix> = p.tensors().iter().map(|t| Matrix::zeros(t.rows(), t.cols())).collect();
        Self { m: z.clone(), v: z, t: 0 }
    }

    fn step(&mut self, p: &mut MpnnParams, grads: &[Matrix], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for (((w, g), m), v) in p.tensors_mut().iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for (((w, g), m), v) in w.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut()) {
                *m = B1 * *m + (1.0 - B1) * g;
                *v = B2 * *v + (1.0 - B2) * g * g;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
            }
        }
    }
}

/// Halvings of the step tried before an adaptation is given up.
pub const STEP_HALVINGS: usize = 6;

/// Moves the base collocation points along `∂û/∂t` of the model's own rollout
/// on `ep`, at the middle of the rollout window. The step starts at half the
/// smallest cell width and is halved until the scattered fit of the moved
/// layout is conditioned better than `max_condition`; `None` if no step is.
pub fn adapted_positions(params: &MpnnParams, ds: &Dataset, ep: &Episode, max_condition: f64) -> Result<Option<Vec<(f64, f64)>>> {
    let frames = rollout(params, &ep.graph, &ep.initial, ep.loss.steps())?;
    let width = ep.initial.data().len();
    let data = frames.iter().flat_map(|f| f.data().iter().copied()).collect();
    let stacked = Matrix::from_vec(frames.len(), width, data)?;
    let times = ds.frame_times();
    let st = SpaceTimeSurrogate::new(&times, ep.space.clone(), ds.channels, &stacked, ds.r_time)?;
    let base = AdaptivePoints::tensor(ds.bx.clone(), ds.by.clone(), &ds.xs, &ds.ys)?;
    let t_mid = 0.5 * (times[0] + times[times.len() - 1]);
    let mut beta = AdaptiveConfig::default().step(&ds.bx, &ds.by)?;
    for _ in 0..=STEP_HALVINGS {
        let cfg = AdaptiveConfig { beta: Some(beta), channel: 0 };
        let pos = adapt_points(&base, &st, t_mid, &cfg)?.positions().to_vec();
        match ScatteredFitter::new(ds.bx.clone(), ds.by.clone(), &pos) {
            Ok(f) if f.condition_number()? <= max_condition => return Ok(Some(pos)),
            Ok(_) | Err(Error::Singular(_)) => beta *= 0.5,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Episodes for `trajs`; for the adaptive variant each layout is adapted once
/// from a rollout on the static layout.
pub fn episodes_for(params: &MpnnParams, ds: &Dataset, trajs: &[Trajectory], variant: Variant, max_condition: f64) -> Result<Vec<Episode>> {
    trajs
        .par_iter()
        .map(|t| {
            let ep = ds.episode(t, None)?;
            if variant != Variant::E2eAdaptive {
                return Ok(ep);
            }
            match adapted_positions(params, ds, &ep, max_condition)? {
                Some(p) => ds.episode(t, Some(&p)),
                None => Ok(ep),
            }
        })
        .collect()
}

/// Mean losses over `trajs`.
pub fn evaluate(params: &MpnnParams, ds: &Dataset, trajs: &[Trajectory], variant: Variant, max_condition: f64) -> Result<LossValues> {
    let eps = episodes_for(params, ds, trajs, variant, max_condition)?;
    let vals = eps.par_iter().map(|e| episode_loss(params, e)).collect::<Result<Vec<_>>>()?;
    Ok(mean(&vals))
}

fn mean(v: &[LossValues]) -> LossValues {
    let n = v.len().max(1) as f64;
    let mut out = LossValues { total: 0.0, sample: 0.0, interp: 0.0 };
    for x in v {
        out.total += x.total;
        out.sample += x.sample;
        out.interp += x.interp;
    }
    out.total /= n;
    out.sample /= n;
    out.interp /= n;
    out
}

pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mcfg = MpnnConfig { channels: ds.channels, hidden: cfg.hidden, processors: cfg.processors };
    let mut params = MpnnParams::init(mcfg, cfg.seed)?;
    let mut adam = Adam::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9));
    let root = if cfg.variant == Variant::Post { LossRoot::Sample } else { LossRoot::Total };
    let mut episodes = ds.train.iter().map(|t| ds.episode(t, None)).collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..episodes.len()).collect();
    let mut metrics = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        if cfg.variant == Variant::E2eAdaptive && epoch > 0 && epoch % cfg.adapt_every == 0 {
            episodes = episodes
                .par_iter()
                .zip(ds.train.par_iter())
                .map(|(ep, t)| match adapted_positions(&params, ds, ep, cfg.max_condition)? {
                    Some(p) => ds.episode(t, Some(&p)),
                    None => Ok(ep.clone()),
                })
                .collect::<Result<Vec<_>>>()?;
        }
        order.shuffle(&mut rng);
        let lr = cfg.learning_rate(epoch);
        let mut seen = Vec::with_capacity(order.len());
        for batch in order.chunks(cfg.batch_size) {
            let results = batch
                .par_iter()
                .map(|&i| loss_and_gradient(&params, &episodes[i], root))
                .collect::<Result<Vec<_>>>()?;
            let mut sum: Vec<Matrix> = params.tensors().iter().map(|t| Matrix::zeros(t.rows(), t.cols())).collect();
            for (vals, grads) in &results {
                if !(vals.total <= cfg.divergence_threshold) {
                    return Err(Error::Divergence(vals.total));
                }
                for (s, g) in sum.iter_mut().zip(grads) {
                    s.add_assign(g);
                }
                seen.push(*vals);
            }
            let inv = 1.0 / results.len() as f64;
            for s in &mut sum {
                s.scale(inv);
            }
            adam.step(&mut params, &sum, lr);
        }
        let m = mean(&seen);
        metrics.push(EpochMetrics { epoch: epoch + 1, loss: m.total, sample: m.sample, interp: m.interp });
    }
    if !params.is_finite() {
        return Err(Error::Divergence(f64::NAN));
    }
    let test_set = if ds.test.is_empty() { &ds.train } else { &ds.test };
    let test = evaluate(&params, ds, test_set, cfg.variant, cfg.max_condition)?;
    Ok(TrainOutcome { params, metrics, test })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub data: Vec<f64>,
}

/// JSON checkpoint: configuration plus named row-major tensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub train: TrainConfig,
    pub model: MpnnConfig,
    pub tensors: Vec<TensorRecord>,
}

const CHECKPOINT_FORMAT: &str = "splinecolloc-mpnn-1";

impl Checkpoint {
    pub fn new(params: &MpnnParams, train: &TrainConfig) -> Self {
        let tensors = params
            .config()
            .tensor_shapes()
            .into_iter()
            .zip(params.tensors())
            .map(|((name, rows, cols), t)| TensorRecord { name, rows, cols, data: t.data().to_vec() })
            .collect();
        Self { format: CHECKPOINT_FORMAT.into(), train: train.clone(), model: params.config(), tensors }
    }

    pub fn params(&self) -> Result<MpnnParams> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Layout(format!("unknown checkpoint format {:?}", self.format)));
        }
        let t = self.tensors.iter().map(|r| Matrix::from_vec(r.rows, r.cols, r.data.clone())).collect::<Result<Vec<_>>>()?;
        MpnnParams::from_tensors(self.model, t)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::data::ToyConfig;

    fn tiny() -> (Dataset, TrainConfig) {
        let ds = Dataset::heat_toy(&ToyConfig { cells: 2, steps: 2, r_time: 2, train: 2, test: 1, ..Default::default() }).unwrap();
        let cfg = TrainConfig { epochs: 3, batch_size: 2, hidden: 8, processors: 1, ..Default::default() };
        (ds, cfg)
    }

    #[test]
    fn variants_parse() {
        for v in Variant::ALL {
            assert_eq!(v.label().parse::<Variant>().unwrap(), v);
        }
        assert!("adaptive".parse::<Variant>().is_err());
    }

    #[test]
    fn learning_rate_schedule() {
        let c = TrainConfig::default();
        assert_eq!(c.learning_rate(499), 1e-3);
        assert!((c.learning_rate(500) - 0.85e-3).abs() < 1e-18);
        assert!(TrainConfig { epochs: 201, ..c }.validate().is_err());
    }

    #[test]
    fn deterministic_training_and_checkpoint() {
        let (ds, cfg) = tiny();
        let a = train(&ds, &cfg).unwrap();
        let b = train(&ds, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.metrics, b.metrics);
        assert!(metrics_csv(&a.metrics).starts_with("epoch,L,L_s,L_i\n1,"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        Checkpoint::new(&a.params, &cfg).save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap().params().unwrap(), a.params);
    }

    #[test]
    fn divergence_guard() {
        let (ds, cfg) = tiny();
        let cfg = TrainConfig { divergence_threshold: 1e-30, ..cfg };
        assert!(matches!(train(&ds, &cfg), Err(Error::Divergence(_))));
    }

    #[test]
    fn adaptive_variant_runs() {
        let (ds, cfg) = tiny();
        let out = train(&ds, &TrainConfig { variant: Variant::E2eAdaptive, ..cfg }).unwrap();
        assert!(out.test.interp.is_finite());
    }
}
