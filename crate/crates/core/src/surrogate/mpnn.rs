//! Encoder–processor–decoder message passing on collocation-point graphs.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tape::{Tape, Var};
use crate::error::{dim_mismatch, invalid, Result};
use crate::linalg::Matrix;

/// Directed graph over collocation points with geometric edge features.
#[derive(Clone, Debug, PartialEq)]
pub struct GridGraph {
    coords: Vec<(f64, f64)>,
    /// `[x0, x1, y0, y1]` used to normalize coordinates.
    domain: [f64; 4],
    src: Arc<Vec<usize>>,
    dst: Arc<Vec<usize>>,
    node_features: Matrix,
    edge_features: Matrix,
}

impl GridGraph {
    /// 4-neighbour connectivity (both directions) on a tensor layout with
    /// nodes in `[y][x]` order.
    pub fn grid(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let (nx, ny) = (xs.len(), ys.len());
        if nx < 2 || ny < 2 {
            return Err(invalid("grid graphs need at least 2 points per axis"));
        }
        let coords: Vec<(f64, f64)> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect();
        let mut edges = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let k = iy * nx + ix;
                if ix + 1 < nx {
                    edges.push((k, k + 1));
                    edges.push((k + 1, k));
                }
                if iy + 1 < ny {
                    edges.push((k, k + nx));
                    edges.push((k + nx, k));
                }
            }
        }
        let domain = [xs[0], xs[nx - 1], ys[0], ys[ny - 1]];
        Self::from_edges(coords, edges, domain)
    }

    pub fn from_edges(coords: Vec<(f64, f64)>, edges: Vec<(usize, usize)>, domain: [f64; 4]) -> Result<Self> {
        let n = coords.len();
        if edges.iter().any(|&(s, d)| s >= n || d >= n || s == d) {
            return Err(invalid("edge endpoints must be distinct existing nodes"));
        }
        if !(domain[1] > domain[0] && domain[3] > domain[2]) {
            return Err(invalid("degenerate normalization domain"));
        }
        let mut degree = vec![0usize; n];
        for &(_, d) in &edges {
            degree[d] += 1;
        }
        if degree.iter().any(|&d| d < 2) {
            return Err(invalid("every node needs at least two neighbours"));
        }
        let src = Arc::new(edges.iter().map(|e| e.0).collect());
        let dst = Arc::new(edges.iter().map(|e| e.1).collect());
        let mut g = Self {
            coords: Vec::new(),
            domain,
            src,
            dst,
            node_features: Matrix::zeros(0, 2),
            edge_features: Matrix::zeros(0, 3),
        };
        g.set_positions(coords);
        Ok(g)
    }

    fn set_positions(&mut self, coords: Vec<(f64, f64)>) {
        let [x0, x1, y0, y1] = self.domain;
        let norm = |(x, y): (f64, f64)| ((x - x0) / (x1 - x0), (y - y0) / (y1 - y0));
        let mut nf = Matrix::zeros(coords.len(), 2);
        for (k, &p) in coords.iter().enumerate() {
            let (u, v) = norm(p);
            nf.set(k, 0, u);
            nf.set(k, 1, v);
        }
        let mut ef = Matrix::zeros(self.src.len(), 3);
        for (e, (&s, &d)) in self.src.iter().zip(self.dst.iter()).enumerate() {
            let dx = nf.get(d, 0) - nf.get(s, 0);
            let dy = nf.get(d, 1) - nf.get(s, 1);
            ef.set(e, 0, dx);
            ef.set(e, 1, dy);
            ef.set(e, 2, dx.hypot(dy));
        }
        self.coords = coords;
        self.node_features = nf;
        self.edge_features = ef;
    }

    /// Same connectivity and normalization, moved nodes.
    pub fn with_positions(&self, coords: Vec<(f64, f64)>) -> Result<Self> {
        if coords.len() != self.coords.len() {
            return Err(dim_mismatch(format!("{} positions for {} nodes", coords.len(), self.coords.len())));
        }
        let mut g = self.clone();
        g.set_positions(coords);
        Ok(g)
    }

    /// Relabels node `i` as `perm[i]`, keeping the edge order.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(invalid("not a permutation of the nodes"));
        }
        let mut coords = vec![(0.0, 0.0); n];
        for (i, &p) in perm.iter().enumerate() {
            coords[p] = self.coords[i];
        }
        let edges = self.src.iter().zip(self.dst.iter()).map(|(&s, &d)| (perm[s], perm[d])).collect();
        Self::from_edges(coords, edges, self.domain)
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_edges(&self) -> usize {
        self.src.len()
    }

    pub fn coords(&self) -> &[(f64, f64)] {
        &self.coords
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.src.iter().copied().zip(self.dst.iter().copied())
    }

    pub fn node_features(&self) -> &Matrix {
        &self.node_features
    }

    pub fn edge_features(&self) -> &Matrix {
        &self.edge_features
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpnnConfig {
    pub channels: usize,
    pub hidden: usize,
    pub processors: usize,
}

impl MpnnConfig {
    pub fn new(channels: usize) -> Self {
        Self { channels, hidden: 64, processors: 3 }
    }

    /// `(name, fan_in, fan_out)` of every MLP, in parameter order.
    fn mlps(&self) -> Vec<(String, usize, usize)> {
        let h = self.hidden;
        let mut v = vec![("node_encoder".to_string(), self.channels + 2, h), ("edge_encoder".to_string(), 3, h)];
        for p in 0..self.processors {
            v.push((format!("processor{p}.edge"), 3 * h, h));
            v.push((format!("processor{p}.node"), 2 * h, h));
        }
        v.push(("decoder".to_string(), h, self.channels));
        v
    }

    /// Names and shapes of every tensor: three `(weight, bias)` layers per MLP.
    pub fn tensor_shapes(&self) -> Vec<(String, usize, usize)> {
        let mut out = Vec::new();
        for (name, fan_in, fan_out) in self.mlps() {
            let dims = [fan_in, self.hidden, self.hidden, fan_out];
            for l in 0..3 {
                out.push((format!("{name}.{l}.weight"), dims[l], dims[l + 1]));
                out.push((format!("{name}.{l}.bias"), 1, dims[l + 1]));
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.hidden == 0 || self.processors == 0 {
            return Err(invalid("channels, hidden size and processor count must be positive"));
        }
        Ok(())
    }
}

/// Weights of all MLPs, stored flat in [`MpnnConfig::tensor_shapes`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpnnParams {
    config: MpnnConfig,
    tensors: Vec<Matrix>,
}

impl MpnnParams {
    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(config: MpnnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = config
            .tensor_shapes()
            .into_iter()
            .map(|(name, r, c)| {
                if name.ends_with("bias") {
                    Matrix::zeros(r, c)
                } else {
                    let a = (6.0 / (r + c) as f64).sqrt();
                    let data = (0..r * c).map(|_| rng.gen_range(-a..a)).collect();
                    Matrix::from_vec(r, c, data).expect("shape from config")
                }
            })
            .collect();
        Ok(Self { config, tensors })
    }

    pub fn zeros(config: MpnnConfig) -> Result<Self> {
        config.validate()?;
        let tensors = config.tensor_shapes().into_iter().map(|(_, r, c)| Matrix::zeros(r, c)).collect();
        Ok(Self { config, tensors })
    }

    pub fn from_tensors(config: MpnnConfig, tensors: Vec<Matrix>) -> Result<Self> {
        config.validate()?;
        let shapes = config.tensor_shapes();
        if shapes.len() != tensors.len() || shapes.iter().zip(&tensors).any(|((_, r, c), t)| t.shape() != (*r, *c)) {
            return Err(dim_mismatch("tensor shapes do not match the configuration"));
        }
        Ok(Self { config, tensors })
    }

    pub fn config(&self) -> MpnnConfig {
        self.config
    }

    pub fn tensors(&self) -> &[Matrix] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Matrix] {
        &mut self.tensors
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(|t| t.data().len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data().iter().all(|v| v.is_finite()))
    }

    /// Records every tensor on `tape`, as leaves or as constants.
    pub fn record(&self, tape: &mut Tape, differentiable: bool) -> ParamVars {
        let vars = self
            .tensors
            .iter()
            .map(|t| if differentiable { tape.leaf(t.clone()) } else { tape.constant(t.clone()) })
            .collect();
        ParamVars { config: self.config, vars }
    }
}

/// Tape handles of a parameter set.
#[derive(Clone, Debug)]
pub struct ParamVars {
    config: MpnnConfig,
    vars: Vec<Var>,
}

impl ParamVars {
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    fn mlp(&self, index: usize) -> &[Var] {
        &self.vars[6 * index..6 * index + 6]
    }
}

fn mlp(tape: &mut Tape, layers: &[Var], x: Var) -> Result<Var> {
    let mut h = x;
    for l in 0..3 {
        let z = tape.matmul(h, layers[2 * l])?;
        let z = tape.add_row_bias(z, layers[2 * l + 1])?;
        h = if l < 2 { tape.relu(z)? } else { z };
    }
    Ok(h)
}

/// Graph inputs recorded once per rollout.
#[derive(Clone, Copy, Debug)]
pub struct GraphVars {
    nodes: Var,
    edges: Var,
}

pub fn record_graph(tape: &mut Tape, graph: &GridGraph) -> GraphVars {
    GraphVars { nodes: tape.constant(graph.node_features.clone()), edges: tape.constant(graph.edge_features.clone()) }
}

/// One step on the tape: `state + D(P_m(...P_1(E(X, state))))`.
pub fn step_on_tape(tape: &mut Tape, p: &ParamVars, graph: &GridGraph, g: GraphVars, state: Var) -> Result<Var> {
    let cfg = p.config;
    if tape.value(state).shape() != (graph.n_nodes(), cfg.channels) {
        return Err(dim_mismatch(format!(
            "state {:?} for {} nodes and {} channels",
            tape.value(state).shape(),
            graph.n_nodes(),
            cfg.channels
        )));
    }
    let input = tape.concat_cols(&[state, g.nodes])?;
    let mut h = mlp(tape, p.mlp(0), input)?;
    let mut e = mlp(tape, p.mlp(1), g.edges)?;
    for k in 0..cfg.processors {
        let hs = tape.gather_rows(h, graph.src.clone())?;
        let hd = tape.gather_rows(h, graph.dst.clone())?;
        let m_in = tape.concat_cols(&[e, hs, hd])?;
        let m = mlp(tape, p.mlp(2 + 2 * k), m_in)?;
        e = tape.add(e, m)?;
        let agg = tape.scatter_add_rows(e, graph.dst.clone(), graph.n_nodes())?;
        let n_in = tape.concat_cols(&[h, agg])?;
        let dh = mlp(tape, p.mlp(3 + 2 * k), n_in)?;
        h = tape.add(h, dh)?;
    }
    let delta = mlp(tape, p.mlp(2 + 2 * cfg.processors), h)?;
    tape.add(state, delta)
}

/// `K` autoregressive steps on the tape; returns `K + 1` state handles.
pub fn rollout_on_tape(tape: &mut Tape, p: &ParamVars, graph: &GridGraph, initial: Var, steps: usize) -> Result<Vec<Var>> {
    if steps == 0 {
        return Err(invalid("rollout needs at least one step"));
    }
    let g = record_graph(tape, graph);
    let mut frames = vec![initial];
    for _ in 0..steps {
        let next = step_on_tape(tape, p, graph, g, *frames.last().unwrap())?;
        frames.push(next);
    }
    Ok(frames)
}

/// Next node state (`nodes x channels`).
pub fn mpnn_step(params: &MpnnParams, graph: &GridGraph, state: &Matrix) -> Result<Matrix> {
    Ok(rollout(params, graph, state, 1)?.pop().unwrap())
}

/// `steps + 1` frames including `initial`.
pub fn rollout(params: &MpnnParams, graph: &GridGraph, initial: &Matrix, steps: usize) -> Result<Vec<Matrix>> {
    let mut tape = Tape::new();
    let p = params.record(&mut tape, false);
    let s0 = tape.constant(initial.clone());
    let frames = rollout_on_tape(&mut tape, &p, graph, s0, steps)?;
    Ok(frames.into_iter().map(|v| tape.value(v).clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph() -> GridGraph {
        GridGraph::grid(&[0.0, 0.3, 0.6, 1.0], &[0.0, 0.5, 1.0]).unwrap()
    }

    fn state(n: usize, c: usize) -> Matrix {
        Matrix::from_vec(n, c, (0..n * c).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect()).unwrap()
    }

    #[test]
    fn grid_graph_shape() {
        let g = graph();
        assert_eq!(g.n_nodes(), 12);
        // 2 * (3 rows * 3 + 4 cols * 2)
        assert_eq!(g.n_edges(), 34);
        let f = g.edge_features();
        for (e, (s, d)) in g.edges().enumerate() {
            let dx = g.node_features().get(d, 0) - g.node_features().get(s, 0);
            assert_eq!(f.get(e, 0), dx);
            assert!((f.get(e, 2) - f.get(e, 0).hypot(f.get(e, 1))).abs() < 1e-15);
        }
        assert!(GridGraph::grid(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn zero_weights_keep_state() {
        let cfg = MpnnConfig { channels: 2, hidden: 8, processors: 2 };
        let p = MpnnParams::zeros(cfg).unwrap();
        let s = state(12, 2);
        assert_eq!(mpnn_step(&p, &graph(), &s).unwrap(), s);
        let r = rollout(&p, &graph(), &s, 3).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r.iter().all(|f| *f == s));
    }

    #[test]
    fn rollout_matches_repeated_steps() {
        let cfg = MpnnConfig { channels: 1, hidden: 16, processors: 3 };
        let p = MpnnParams::init(cfg, 3).unwrap();
        let g = graph();
        let s = state(12, 1);
        let r = rollout(&p, &g, &s, 3).unwrap();
        let mut cur = s;
        for f in &r[1..] {
            cur = mpnn_step(&p, &g, &cur).unwrap();
            assert_eq!(&cur, f);
        }
        assert!(r.iter().all(|f| f.data().iter().all(|v| v.is_finite())));
    }

    #[test]
    fn shapes_and_init() {
        let cfg = MpnnConfig::new(2);
        let p = MpnnParams::init(cfg, 0).unwrap();
        assert_eq!(p.tensors().len(), 6 * (3 + 2 * 3));
        let w = &p.tensors()[0];
        assert_eq!(w.shape(), (4, 64));
        let bound = (6.0f64 / 68.0).sqrt();
        assert!(w.data().iter().all(|v| v.abs() <= bound));
        assert!(mpnn_step(&p, &graph(), &state(5, 2)).is_err());
    }
}
