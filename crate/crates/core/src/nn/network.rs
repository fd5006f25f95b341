//! Network description, parameter storage, and the forward/backward walk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::*;
use super::tensor::Tensor;
use super::NnError;

/// Standard normal via Box-Muller, used for weight init and test signals.
pub(crate) fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Four parallel branches over the same input, merged along channels:
/// 1x1, 3x3, and 5x5 convolutions plus a 3x3 same-size max pool feeding a
/// 1x1 convolution. Every branch convolution is followed by a ReLU.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InceptionSpec {
    pub in_ch: usize,
    pub conv1: usize,
    pub conv3: usize,
    pub conv5: usize,
    pub pool1: usize,
}

impl InceptionSpec {
    pub fn out_ch(&self) -> usize {
        self.conv1 + self.conv3 + self.conv5 + self.pool1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Node {
    /// Stride-1 same-padding convolution, kernel `k` in {1, 3, 5}.
    Conv { k: usize, in_ch: usize, out_ch: usize },
    MaxPool2,
    Relu,
    GlobalAvgPool,
    Dense { in_dim: usize, out_dim: usize },
    Sigmoid,
    Inception(InceptionSpec),
}

impl Node {
    /// How many parameter tensors this node owns.
    fn n_params(&self) -> usize {
        match self {
            Node::Conv { .. } | Node::Dense { .. } => 2,
            Node::Inception(_) => 8,
            _ => 0,
        }
    }
}

/// Which output head a forward pass drives. Exactly one is active per pass;
/// embeddings come from [`Network::embed`] and use neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Head {
    Tags,
    MidLevel,
}

/// Shape a node list carries between nodes: a feature map or a flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Carried {
    Map { c: usize, h: usize, w: usize },
    Vec(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// Default input size; forward accepts any spatial extent the pools
    /// can halve often enough, with the same parameters.
    pub input_hw: (usize, usize),
    pub in_channels: usize,
    /// Width of the backbone output, the embedding fed to every head.
    pub embedding_dim: usize,
    pub backbone: Vec<Node>,
    pub tag_head: Option<Vec<Node>>,
    pub mid_head: Option<Vec<Node>>,
}

impl NetworkSpec {
    /// Desk-scale preset: 64x64 inputs, five 3x3 convolutions with two
    /// poolings, two inception blocks, 128-wide embedding.
    pub fn desk(n_tags: usize) -> NetworkSpec {
        NetworkSpec::scaled(64, [8, 16, 16, 32, 32], [8, 12, 6, 6], [16, 16, 8, 8], 128, n_tags)
    }

    /// Small preset for fast tests: 16x16 inputs, 16-wide embedding.
    pub fn tiny(n_tags: usize) -> NetworkSpec {
        NetworkSpec::scaled(16, [4, 4, 6, 6, 8], [2, 3, 2, 1], [3, 3, 1, 1], 16, n_tags)
    }

    /// Minimal preset for numerical gradient verification: 8x8 inputs.
    pub fn micro(n_tags: usize) -> NetworkSpec {
        NetworkSpec::scaled(8, [2, 2, 3, 3, 3], [1, 1, 1, 1], [1, 1, 1, 1], 6, n_tags)
    }

    fn scaled(
        side: usize,
        convs: [usize; 5],
        incep1: [usize; 4],
        incep2: [usize; 4],
        embedding: usize,
        n_tags: usize,
    ) -> NetworkSpec {
        let conv = |i: usize, o: usize| Node::Conv { k: 3, in_ch: i, out_ch: o };
        let block = |i: usize, b: [usize; 4]| {
            Node::Inception(InceptionSpec {
                in_ch: i,
                conv1: b[0],
                conv3: b[1],
                conv5: b[2],
                pool1: b[3],
            })
        };
        let i1_out = incep1.iter().sum::<usize>();
        let i2_out = incep2.iter().sum::<usize>();
        let backbone = vec![
            conv(1, convs[0]),
            Node::Relu,
            conv(convs[0], convs[1]),
            Node::Relu,
            Node::MaxPool2,
            conv(convs[1], convs[2]),
            Node::Relu,
            conv(convs[2], convs[3]),
            Node::Relu,
            Node::MaxPool2,
            conv(convs[3], convs[4]),
            Node::Relu,
            block(convs[4], incep1),
            block(i1_out, incep2),
            Node::GlobalAvgPool,
            Node::Dense { in_dim: i2_out, out_dim: embedding },
            Node::Relu,
        ];
        NetworkSpec {
            input_hw: (side, side),
            in_channels: 1,
            embedding_dim: embedding,
            backbone,
            tag_head: Some(NetworkSpec::tag_head_nodes(embedding, n_tags)),
            mid_head: Some(NetworkSpec::mid_head_nodes(embedding)),
        }
    }

    pub fn tag_head_nodes(embedding: usize, n_tags: usize) -> Vec<Node> {
        vec![Node::Dense { in_dim: embedding, out_dim: n_tags }, Node::Sigmoid]
    }

    /// Two hidden layers of 150 and 30 units, linear 7-wide output.
    pub fn mid_head_nodes(embedding: usize) -> Vec<Node> {
        vec![
            Node::Dense { in_dim: embedding, out_dim: 150 },
            Node::Relu,
            Node::Dense { in_dim: 150, out_dim: 30 },
            Node::Relu,
            Node::Dense { in_dim: 30, out_dim: 7 },
        ]
    }
}

/// What one executed node remembers for its backward pass. Parameterized
/// nodes also record where their tensors live in the parameter store.
#[derive(Debug, Clone)]
enum Trace {
    Conv { input: Tensor, param_base: usize },
    MaxPool2 { input_shape: Vec<usize>, argmax: Vec<usize> },
    Relu { input: Tensor },
    GlobalAvgPool { input_shape: Vec<usize> },
    Dense { input: Tensor, param_base: usize },
    Sigmoid { output: Tensor },
    Inception(Box<InceptionTrace>),
}

#[derive(Debug, Clone)]
struct InceptionTrace {
    input: Tensor,
    pre1: Tensor,
    pre3: Tensor,
    pre5: Tensor,
    pooled: Tensor,
    pool_argmax: Vec<usize>,
    prep: Tensor,
    param_base: usize,
}

/// Activations recorded by one forward pass, consumed by [`Network::backward`].
/// Tied to the parameter version it was computed with.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    head: Head,
    traces: Vec<Trace>,
    input_shape: Vec<usize>,
    pub output: Tensor,
}

impl ForwardCache {
    pub fn head(&self) -> Head {
        self.head
    }
}

/// Parameter gradients aligned with the network's parameter store, plus the
/// gradient with respect to the input batch.
#[derive(Debug, Clone)]
pub struct Grads {
    pub by_param: Vec<Tensor>,
    pub input: Tensor,
}

/// A built network: the spec plus named parameter tensors. All mutation
/// bumps a version counter so stale forward caches are rejected.
#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    names: Vec<String>,
    params: Vec<Tensor>,
    backbone_params: usize,
    tag_params: usize,
    version: u64,
}

impl Network {
    /// Validates the spec and initializes parameters from the seed: He
    /// scaling for interior layers, zeros for each head's final dense layer
    /// so a fresh tag head starts at probability one half and a fresh
    /// regression head at zero.
    pub fn new(spec: NetworkSpec, seed: u64) -> Result<Network, NnError> {
        let (h, w) = spec.input_hw;
        let start = Carried::Map { c: spec.in_channels, h, w };
        if spec.in_channels == 0 || h == 0 || w == 0 {
            return Err(NnError::ShapeMismatch("empty input shape".into()));
        }
        let end = walk_shapes(&spec.backbone, start, "backbone")?;
        if end != Carried::Vec(spec.embedding_dim) {
            return Err(NnError::ShapeMismatch(format!(
                "backbone ends at {end:?}, expected a {}-wide vector",
                spec.embedding_dim
            )));
        }
        if spec.tag_head.is_none() && spec.mid_head.is_none() {
            return Err(NnError::MissingHead("spec declares no head".into()));
        }
        for (nodes, label) in [(&spec.tag_head, "tag head"), (&spec.mid_head, "mid head")] {
            if let Some(nodes) = nodes {
                match walk_shapes(nodes, Carried::Vec(spec.embedding_dim), label)? {
                    Carried::Vec(_) => {}
                    other => {
                        return Err(NnError::ShapeMismatch(format!(
                            "{label} ends at {other:?}, expected a vector"
                        )))
                    }
                }
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = Vec::new();
        let mut params = Vec::new();
        init_nodes(&spec.backbone, "backbone", false, &mut rng, &mut names, &mut params);
        let backbone_params = params.len();
        if let Some(nodes) = &spec.tag_head {
            init_nodes(nodes, "tags", true, &mut rng, &mut names, &mut params);
        }
        let tag_params = params.len() - backbone_params;
        if let Some(nodes) = &spec.mid_head {
            init_nodes(nodes, "mid", true, &mut rng, &mut names, &mut params);
        }
        Ok(Network { spec, names, params, backbone_params, tag_params, version: 0 })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    pub fn param(&self, i: usize) -> &Tensor {
        &self.params[i]
    }

    pub fn is_backbone_param(&self, i: usize) -> bool {
        i < self.backbone_params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [Tensor] {
        self.version += 1;
        &mut self.params
    }

    pub fn params_snapshot(&self) -> Vec<Tensor> {
        self.params.clone()
    }

    pub fn restore_params(&mut self, snapshot: Vec<Tensor>) -> Result<(), NnError> {
        if snapshot.len() != self.params.len()
            || snapshot
                .iter()
                .zip(&self.params)
                .any(|(a, b)| a.shape() != b.shape())
        {
            return Err(NnError::ShapeMismatch("snapshot does not fit this network".into()));
        }
        self.params = snapshot;
        self.version += 1;
        Ok(())
    }

    fn head_nodes(&self, head: Head) -> Result<(&[Node], usize), NnError> {
        match head {
            Head::Tags => self
                .spec
                .tag_head
                .as_deref()
                .map(|n| (n, self.backbone_params))
                .ok_or_else(|| NnError::MissingHead("network has no tag head".into())),
            Head::MidLevel => self
                .spec
                .mid_head
                .as_deref()
                .map(|n| (n, self.backbone_params + self.tag_params))
                .ok_or_else(|| NnError::MissingHead("network has no mid-level head".into())),
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<(), NnError> {
        let s = x.shape();
        if s.len() != 4 || s[1] != self.spec.in_channels {
            return Err(NnError::ShapeMismatch(format!(
                "expected [B, {}, H, W] input, got {s:?}",
                self.spec.in_channels
            )));
        }
        if x.data().iter().any(|v| !v.is_finite()) {
            return Err(NnError::ShapeMismatch("non-finite input".into()));
        }
        Ok(())
    }

    /// Runs the backbone and the chosen head, recording what backward needs.
    pub fn forward(&self, x: &Tensor, head: Head) -> Result<ForwardCache, NnError> {
        self.check_input(x)?;
        let (head_nodes, head_base) = self.head_nodes(head)?;
        let mut traces = Vec::new();
        let e = self.run_nodes(&self.spec.backbone, 0, x.clone(), Some(&mut traces))?;
        let output = self.run_nodes(head_nodes, head_base, e, Some(&mut traces))?;
        Ok(ForwardCache {
            version: self.version,
            head,
            traces,
            input_shape: x.shape().to_vec(),
            output,
        })
    }

    /// Backbone output for a batch, with no head applied and no cache kept.
    pub fn embed(&self, x: &Tensor) -> Result<Tensor, NnError> {
        self.check_input(x)?;
        self.run_nodes(&self.spec.backbone, 0, x.clone(), None)
    }

    /// Head output without recording a backward cache; for evaluation loops.
    pub fn predict(&self, x: &Tensor, head: Head) -> Result<Tensor, NnError> {
        self.check_input(x)?;
        let (head_nodes, head_base) = self.head_nodes(head)?;
        let e = self.run_nodes(&self.spec.backbone, 0, x.clone(), None)?;
        self.run_nodes(head_nodes, head_base, e, None)
    }

    /// Propagates a loss gradient on the forward output back to every
    /// parameter and to the input. The cache must come from this network at
    /// its current parameter version.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &Tensor) -> Result<Grads, NnError> {
        self.backward_inner(cache, grad_output, false)
    }

    /// `skip_tail_sigmoid` starts from the gradient on the final sigmoid's
    /// input instead, which keeps cross-entropy gradients finite when the
    /// output saturates.
    pub(crate) fn backward_inner(
        &self,
        cache: &ForwardCache,
        grad_output: &Tensor,
        skip_tail_sigmoid: bool,
    ) -> Result<Grads, NnError> {
        if cache.version != self.version {
            return Err(NnError::StaleCache);
        }
        let mut traces: &[Trace] = &cache.traces;
        if skip_tail_sigmoid {
            match traces.last() {
                Some(Trace::Sigmoid { .. }) => traces = &traces[..traces.len() - 1],
                _ => {
                    return Err(NnError::ShapeMismatch(
                        "head does not end in a sigmoid".into(),
                    ))
                }
            }
        }
        if cache.output.shape() != grad_output.shape() {
            return Err(NnError::ShapeMismatch(format!(
                "loss gradient shape {:?} does not match output {:?}",
                grad_output.shape(),
                cache.output.shape()
            )));
        }
        let mut by_param: Vec<Tensor> =
            self.params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        let mut g = grad_output.clone();
        for trace in traces.iter().rev() {
            g = self.backward_node(trace, g, &mut by_param);
        }
        if g.shape() != cache.input_shape.as_slice() {
            return Err(NnError::ShapeMismatch(format!(
                "input gradient shape {:?} does not match input {:?}",
                g.shape(),
                cache.input_shape
            )));
        }
        Ok(Grads { by_param, input: g })
    }

    fn run_nodes(
        &self,
        nodes: &[Node],
        param_start: usize,
        mut x: Tensor,
        mut traces: Option<&mut Vec<Trace>>,
    ) -> Result<Tensor, NnError> {
        let mut p = param_start;
        for node in nodes {
            let param_base = p;
            p += node.n_params();
            x = match node {
                Node::Conv { .. } => {
                    let out =
                        conv_forward(&x, &self.params[param_base], &self.params[param_base + 1]);
                    if let Some(t) = traces.as_deref_mut() {
                        t.push(Trace::Conv { input: x, param_base });
                    }
                    out
                }
                Node::MaxPool2 => {
                    let (_, _, h, w) = dims4(&x);
                    if h < 2 || w < 2 {
                        return Err(NnError::ShapeMismatch(format!(
                            "cannot pool a {h}x{w} map"
                        )));
                    }
                    let (out, argmax) = maxpool2_forward(&x);
                    if let Some(t) = traces.as_deref_mut() {
                        t.push(Trace::MaxPool2 { input_shape: x.shape().to_vec(), argmax });
                    }
                    out
                }
                Node::Relu => {
                    let out = relu_forward(&x);
                    if let Some(t) = traces.as_deref_mut() {
                        t.push(Trace::Relu { input: x });
                    }
                    out
                }
                Node::GlobalAvgPool => {
                    let out = gap_forward(&x);
                    if let Some(t) = traces.as_deref_mut() {
                        t.push(Trace::GlobalAvgPool { input_shape: x.shape().to_vec() });
                    }
                    out
                }
                Node::Dense { in_dim, .. } => {
                    if x.shape().len() != 2 || x.shape()[1] != *in_dim {
                        return Err(NnError::ShapeMismatch(format!(
                            "dense layer wants [B, {in_dim}], got {:?}",
                            x.shape()
                        )));
                    }
                    let out =
                        dense_forward(&x, &self.params[param_base], &self.params[param_base + 1]);
                    if let Some(t) = traces.as_deref_mut() {
                        t.push(Trace::Dense { input: x, param_base });
                    }
                    out
                }
                Node::Sigmoid => {
                    let out = sigmoid_forward(&x);
                    if let Some(t) = traces.as_deref_mut() {
                        t.push(Trace::Sigmoid { output: out.clone() });
                    }
                    out
                }
                Node::Inception(spec) => {
                    let (_, c, _, _) = dims4(&x);
                    if c != spec.in_ch {
                        return Err(NnError::ShapeMismatch(format!(
                            "inception block wants {} channels, got {c}",
                            spec.in_ch
                        )));
                    }
                    let ps = &self.params[param_base..param_base + 8];
                    let pre1 = conv_forward(&x, &ps[0], &ps[1]);
                    let pre3 = conv_forward(&x, &ps[2], &ps[3]);
                    let pre5 = conv_forward(&x, &ps[4], &ps[5]);
                    let (pooled, pool_argmax) = maxpool3_same_forward(&x);
                    let prep = conv_forward(&pooled, &ps[6], &ps[7]);
                    let out = concat_channels(&[
                        &relu_forward(&pre1),
                        &relu_forward(&pre3),
                        &relu_forward(&pre5),
                        &relu_forward(&prep),
                    ]);
                    if let Some(t) = traces.as_deref_mut() {
                        t.push(Trace::Inception(Box::new(InceptionTrace {
                            input: x,
                            pre1,
                            pre3,
                            pre5,
                            pooled,
                            pool_argmax,
                            prep,
                            param_base,
                        })));
                    }
                    out
                }
            };
        }
        Ok(x)
    }

    fn backward_node(&self, trace: &Trace, g: Tensor, by_param: &mut [Tensor]) -> Tensor {
        match trace {
            Trace::Conv { input, param_base } => {
                let (dw, db, dx) = conv_backward(input, &self.params[*param_base], &g);
                accumulate(&mut by_param[*param_base], &dw);
                accumulate(&mut by_param[*param_base + 1], &db);
                dx
            }
            Trace::MaxPool2 { input_shape, argmax } => {
                maxpool2_backward(input_shape, argmax, &g)
            }
            Trace::Relu { input } => relu_backward(input, &g),
            Trace::GlobalAvgPool { input_shape } => gap_backward(input_shape, &g),
            Trace::Dense { input, param_base } => {
                let (dw, db, dx) = dense_backward(input, &self.params[*param_base], &g);
                accumulate(&mut by_param[*param_base], &dw);
                accumulate(&mut by_param[*param_base + 1], &db);
                dx
            }
            Trace::Sigmoid { output } => sigmoid_backward(output, &g),
            Trace::Inception(t) => {
                let base = t.param_base;
                let widths = [
                    t.pre1.shape()[1],
                    t.pre3.shape()[1],
                    t.pre5.shape()[1],
                    t.prep.shape()[1],
                ];
                let parts = split_channels(&g, &widths);
                let mut dx = Tensor::zeros(t.input.shape());
                let branches: [(&Tensor, usize); 3] = [(&t.pre1, 0), (&t.pre3, 2), (&t.pre5, 4)];
                for (&(pre, off), part) in branches.iter().zip(&parts) {
                    let gz = relu_backward(pre, part);
                    let (dw, db, dxb) = conv_backward(&t.input, &self.params[base + off], &gz);
                    accumulate(&mut by_param[base + off], &dw);
                    accumulate(&mut by_param[base + off + 1], &db);
                    accumulate(&mut dx, &dxb);
                }
                let gz = relu_backward(&t.prep, &parts[3]);
                let (dw, db, dpool) = conv_backward(&t.pooled, &self.params[base + 6], &gz);
                accumulate(&mut by_param[base + 6], &dw);
                accumulate(&mut by_param[base + 7], &db);
                let dxp = maxpool3_same_backward(t.input.shape(), &t.pool_argmax, &dpool);
                accumulate(&mut dx, &dxp);
                dx
            }
        }
    }
}

fn accumulate(into: &mut Tensor, from: &Tensor) {
    for (a, b) in into.data_mut().iter_mut().zip(from.data()) {
        *a += b;
    }
}

fn concat_channels(parts: &[&Tensor]) -> Tensor {
    let (bs, _, h, w) = dims4(parts[0]);
    let total: usize = parts.iter().map(|p| p.shape()[1]).sum();
    let mut out = Tensor::zeros(&[bs, total, h, w]);
    let ov = out.data_mut();
    let hw = h * w;
    for b in 0..bs {
        let mut c_off = 0;
        for p in parts {
            let c = p.shape()[1];
            let src = &p.data()[b * c * hw..(b + 1) * c * hw];
            ov[(b * total + c_off) * hw..(b * total + c_off + c) * hw].copy_from_slice(src);
            c_off += c;
        }
    }
    out
}

fn split_channels(t: &Tensor, widths: &[usize]) -> Vec<Tensor> {
    let (bs, total, h, w) = dims4(t);
    debug_assert_eq!(widths.iter().sum::<usize>(), total);
    let hw = h * w;
    let mut out = Vec::with_capacity(widths.len());
    let mut c_off = 0;
    for &c in widths {
        let mut part = Tensor::zeros(&[bs, c, h, w]);
        {
            let pv = part.data_mut();
            for b in 0..bs {
                pv[b * c * hw..(b + 1) * c * hw].copy_from_slice(
                    &t.data()[(b * total + c_off) * hw..(b * total + c_off + c) * hw],
                );
            }
        }
        out.push(part);
        c_off += c;
    }
    out
}

fn walk_shapes(nodes: &[Node], start: Carried, label: &str) -> Result<Carried, NnError> {
    let mut s = start;
    for (i, node) in nodes.iter().enumerate() {
        let bad = |msg: String| NnError::ShapeMismatch(format!("{label} node {i}: {msg}"));
        s = match (node, s) {
            (Node::Conv { k, in_ch, out_ch }, Carried::Map { c, h, w }) => {
                if !matches!(k, 1 | 3 | 5) {
                    return Err(bad(format!("kernel size {k} not in {{1, 3, 5}}")));
                }
                if c != *in_ch {
                    return Err(bad(format!("conv wants {in_ch} channels, gets {c}")));
                }
                if *out_ch == 0 {
                    return Err(bad("conv with no output channels".into()));
                }
                Carried::Map { c: *out_ch, h, w }
            }
            (Node::MaxPool2, Carried::Map { c, h, w }) => {
                if h < 2 || w < 2 {
                    return Err(bad(format!("cannot pool a {h}x{w} map")));
                }
                Carried::Map { c, h: h / 2, w: w / 2 }
            }
            (Node::Relu, any) => any,
            (Node::GlobalAvgPool, Carried::Map { c, .. }) => Carried::Vec(c),
            (Node::Dense { in_dim, out_dim }, Carried::Vec(d)) => {
                if d != *in_dim {
                    return Err(bad(format!("dense wants {in_dim} inputs, gets {d}")));
                }
                if *out_dim == 0 {
                    return Err(bad("dense with no outputs".into()));
                }
                Carried::Vec(*out_dim)
            }
            (Node::Sigmoid, Carried::Vec(d)) => Carried::Vec(d),
            (Node::Inception(spec), Carried::Map { c, h, w }) => {
                if c != spec.in_ch {
                    return Err(bad(format!(
                        "inception wants {} channels, gets {c}",
                        spec.in_ch
                    )));
                }
                if spec.conv1 == 0 || spec.conv3 == 0 || spec.conv5 == 0 || spec.pool1 == 0 {
                    return Err(bad("inception branch with no channels".into()));
                }
                Carried::Map { c: spec.out_ch(), h, w }
            }
            (node, s) => return Err(bad(format!("{node:?} cannot follow {s:?}"))),
        };
    }
    Ok(s)
}

fn init_nodes(
    nodes: &[Node],
    prefix: &str,
    is_head: bool,
    rng: &mut ChaCha8Rng,
    names: &mut Vec<String>,
    params: &mut Vec<Tensor>,
) {
    let last_dense = nodes
        .iter()
        .rposition(|n| matches!(n, Node::Dense { .. }))
        .filter(|_| is_head);
    for (i, node) in nodes.iter().enumerate() {
        match node {
            Node::Conv { k, in_ch, out_ch } => {
                push_conv(rng, names, params, &format!("{prefix}.{i}"), *out_ch, *in_ch, *k);
            }
            Node::Dense { in_dim, out_dim } => {
                let zero = last_dense == Some(i);
                let name = format!("{prefix}.{i}");
                let w = if zero {
                    Tensor::zeros(&[*out_dim, *in_dim])
                } else {
                    he_tensor(rng, &[*out_dim, *in_dim], *in_dim)
                };
                names.push(format!("{name}.weight"));
                params.push(w);
                names.push(format!("{name}.bias"));
                params.push(Tensor::zeros(&[*out_dim]));
            }
            Node::Inception(spec) => {
                let name = format!("{prefix}.{i}");
                push_conv(rng, names, params, &format!("{name}.b1x1"), spec.conv1, spec.in_ch, 1);
                push_conv(rng, names, params, &format!("{name}.b3x3"), spec.conv3, spec.in_ch, 3);
                push_conv(rng, names, params, &format!("{name}.b5x5"), spec.conv5, spec.in_ch, 5);
                push_conv(rng, names, params, &format!("{name}.pool1x1"), spec.pool1, spec.in_ch, 1);
            }
            _ => {}
        }
    }
}

fn push_conv(
    rng: &mut ChaCha8Rng,
    names: &mut Vec<String>,
    params: &mut Vec<Tensor>,
    name: &str,
    out_ch: usize,
    in_ch: usize,
    k: usize,
) {
    names.push(format!("{name}.weight"));
    params.push(he_tensor(rng, &[out_ch, in_ch, k, k], in_ch * k * k));
    names.push(format!("{name}.bias"));
    params.push(Tensor::zeros(&[out_ch]));
}

fn he_tensor(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize) -> Tensor {
    let std = (2.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| std * gauss(rng)).collect();
    Tensor::from_vec(shape, data).expect("generated values are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_input(shape: &[usize], seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n: usize = shape.iter().product();
        Tensor::from_vec(shape, (0..n).map(|_| gauss(&mut rng)).collect()).unwrap()
    }

    #[test]
    fn micro_preset_builds_and_runs_both_heads() {
        let net = Network::new(NetworkSpec::micro(3), 7).unwrap();
        let x = gauss_input(&[2, 1, 8, 8], 1);
        let tags = net.forward(&x, Head::Tags).unwrap();
        assert_eq!(tags.output.shape(), &[2, 3]);
        assert!(tags.output.data().iter().all(|p| (0.0..=1.0).contains(p)));
        let mid = net.forward(&x, Head::MidLevel).unwrap();
        assert_eq!(mid.output.shape(), &[2, 7]);
    }

    #[test]
    fn fresh_heads_start_neutral() {
        // final head layers are zero-initialized
        let net = Network::new(NetworkSpec::tiny(4), 3).unwrap();
        let x = gauss_input(&[3, 1, 16, 16], 2);
        let tags = net.forward(&x, Head::Tags).unwrap();
        assert!(tags.output.data().iter().all(|&p| p == 0.5));
        let mid = net.forward(&x, Head::MidLevel).unwrap();
        assert!(mid.output.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inception_block_concatenates_branch_channels() {
        // an 8x8 4-channel map through branches (2, 2, 2, 2) keeps its
        // spatial size and stacks to 8 channels
        let spec = NetworkSpec {
            input_hw: (8, 8),
            in_channels: 4,
            embedding_dim: 8,
            backbone: vec![
                Node::Inception(InceptionSpec {
                    in_ch: 4,
                    conv1: 2,
                    conv3: 2,
                    conv5: 2,
                    pool1: 2,
                }),
                Node::GlobalAvgPool,
            ],
            tag_head: Some(NetworkSpec::tag_head_nodes(8, 2)),
            mid_head: None,
        };
        let net = Network::new(spec, 0).unwrap();
        let x = gauss_input(&[1, 4, 8, 8], 3);
        let e = net.embed(&x).unwrap();
        assert_eq!(e.shape(), &[1, 8]);
    }

    #[test]
    fn embeddings_are_deterministic_and_head_free() {
        let net = Network::new(NetworkSpec::tiny(2), 11).unwrap();
        let x = gauss_input(&[1, 1, 16, 16], 4);
        let a = net.embed(&x).unwrap();
        let b = net.embed(&Tensor::stack(&[&xitem(&x)]).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.shape(), &[1, 16]);

        let no_heads = NetworkSpec { tag_head: None, ..NetworkSpec::tiny(2) };
        let net = Network::new(no_heads, 11).unwrap();
        assert!(net.embed(&x).is_ok());
        assert!(matches!(net.forward(&x, Head::Tags), Err(NnError::MissingHead(_))));
    }

    fn xitem(x: &Tensor) -> Tensor {
        Tensor::from_vec(&x.shape()[1..], x.item(0).to_vec()).unwrap()
    }

    #[test]
    fn same_seed_same_params_different_seed_differs() {
        let a = Network::new(NetworkSpec::tiny(2), 5).unwrap();
        let b = Network::new(NetworkSpec::tiny(2), 5).unwrap();
        let c = Network::new(NetworkSpec::tiny(2), 6).unwrap();
        for i in 0..a.n_params() {
            assert_eq!(a.param(i), b.param(i));
        }
        assert!((0..a.n_params()).any(|i| a.param(i) != c.param(i)));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut net = Network::new(NetworkSpec::micro(2), 1).unwrap();
        let x = gauss_input(&[1, 1, 8, 8], 5);
        let cache = net.forward(&x, Head::MidLevel).unwrap();
        let g = Tensor::zeros(&[1, 7]);
        assert!(net.backward(&cache, &g).is_ok());
        net.params_mut();
        assert!(matches!(net.backward(&cache, &g), Err(NnError::StaleCache)));
    }

    #[test]
    fn zero_loss_gradient_gives_zero_parameter_gradients() {
        let net = Network::new(NetworkSpec::micro(2), 2).unwrap();
        let x = gauss_input(&[2, 1, 8, 8], 6);
        let cache = net.forward(&x, Head::MidLevel).unwrap();
        let grads = net.backward(&cache, &Tensor::zeros(&[2, 7])).unwrap();
        for t in &grads.by_param {
            assert!(t.data().iter().all(|&v| v == 0.0));
        }
        assert!(grads.input.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bad_specs_are_rejected() {
        let mut spec = NetworkSpec::micro(2);
        spec.embedding_dim = 7;
        assert!(Network::new(spec, 0).is_err());

        let mut spec = NetworkSpec::micro(2);
        spec.backbone[0] = Node::Conv { k: 3, in_ch: 2, out_ch: 2 };
        assert!(Network::new(spec, 0).is_err());

        let mut spec = NetworkSpec::micro(2);
        spec.backbone.insert(0, Node::Dense { in_dim: 1, out_dim: 1 });
        assert!(Network::new(spec, 0).is_err());

        let mut spec = NetworkSpec::micro(2);
        spec.tag_head = None;
        spec.mid_head = None;
        assert!(matches!(Network::new(spec, 0), Err(NnError::MissingHead(_))));
    }

    #[test]
    fn oversized_inputs_run_with_the_same_parameters() {
        // pooling floors odd extents, so a 19x21 input works on the micro net
        let net = Network::new(NetworkSpec::micro(2), 1).unwrap();
        let x = gauss_input(&[1, 1, 19, 21], 7);
        let e = net.embed(&x).unwrap();
        assert_eq!(e.shape(), &[1, 6]);
    }

    #[test]
    fn undersized_inputs_error_at_the_pool() {
        let net = Network::new(NetworkSpec::micro(2), 1).unwrap();
        let x = gauss_input(&[1, 1, 2, 2], 8);
        assert!(matches!(net.embed(&x), Err(NnError::ShapeMismatch(_))));
    }
}
