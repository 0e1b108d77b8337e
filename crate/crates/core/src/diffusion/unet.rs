use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::denoiser::{Denoiser, DenoiserInput, Trainable};
use super::nn::{self, ConvShape, Tensor};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Input planes: noisy state, conditioning map, known flags, exterior flags
/// (pixels of `x_t` at exactly -1) and a broadcast `sqrt(alpha_bar)`.
pub const INPUT_CHANNELS: usize = 5;

/// What the last layer predicts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputHead {
    /// The noise directly.
    Noise,
    /// `v = sqrt(ab) eps - sqrt(1 - ab) x0`, converted back with
    /// `eps = sqrt(1 - ab) x_t + sqrt(ab) v`.
    #[default]
    Velocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UNetConfig {
    /// Feature width per resolution level; each extra level halves the grid.
    pub channels: Vec<usize>,
    pub blocks_per_level: usize,
    pub head: OutputHead,
    pub init_seed: u64,
}

impl Default for UNetConfig {
    fn default() -> Self {
        Self {
            channels: vec![12, 24],
            blocks_per_level: 1,
            head: OutputHead::Velocity,
            init_seed: 0,
        }
    }
}

impl UNetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() || self.channels.contains(&0) {
            return Err(Error::BadConfig(
                "channels must list at least one positive width".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Input,
    Conv { src: usize, layer: usize },
    Silu(usize),
    Add(usize, usize),
    Pool(usize),
    Up { src: usize, like: usize },
    Concat(usize, usize),
}

#[derive(Debug, Clone, Copy)]
struct Layer {
    shape: ConvShape,
    offset: usize,
    init_scale: f64,
}

#[derive(Default)]
struct Builder {
    ops: Vec<Op>,
    layers: Vec<Layer>,
    n_params: usize,
}

impl Builder {
    fn push(&mut self, op: Op) -> usize {
        self.ops.push(op);
        self.ops.len() - 1
    }

    fn conv(&mut self, src: usize, cin: usize, cout: usize, kernel: usize, init_scale: f64) -> usize {
        let shape = ConvShape { cin, cout, kernel };
        self.layers.push(Layer {
            shape,
            offset: self.n_params,
            init_scale,
        });
        self.n_params += shape.param_len();
        let layer = self.layers.len() - 1;
        self.push(Op::Conv { src, layer })
    }

    fn res_block(&mut self, src: usize, c: usize) -> usize {
        let a = self.push(Op::Silu(src));
        let h = self.conv(a, c, c, 3, 1.0);
        let a = self.push(Op::Silu(h));
        let h = self.conv(a, c, c, 3, 0.1);
        self.push(Op::Add(src, h))
    }
}

/// Small encoder-decoder noise predictor with residual blocks and skip
/// connections. All parameters live in one flat vector.
#[derive(Debug, Clone)]
pub struct UNet {
    config: UNetConfig,
    ops: Vec<Op>,
    layers: Vec<Layer>,
    params: Vec<f64>,
}

/// Builds the network with freshly initialized weights.
pub fn reference_denoiser(config: UNetConfig) -> Result<UNet> {
    UNet::new(config)
}

impl UNet {
    pub fn new(config: UNetConfig) -> Result<Self> {
        config.validate()?;
        let ch = &config.channels;
        let mut b = Builder::default();
        let x = b.push(Op::Input);
        let mut h = b.conv(x, INPUT_CHANNELS, ch[0], 3, 1.0);
        let mut skips = Vec::new();
        for level in 0..ch.len() {
            if level > 0 {
                let p = b.push(Op::Pool(h));
                h = b.conv(p, ch[level - 1], ch[level], 3, 1.0);
            }
            for _ in 0..config.blocks_per_level {
                h = b.res_block(h, ch[level]);
            }
            skips.push(h);
        }
        for level in (0..ch.len() - 1).rev() {
            let skip = skips[level];
            let u = b.push(Op::Up { src: h, like: skip });
            let cat = b.push(Op::Concat(u, skip));
            h = b.conv(cat, ch[level + 1] + ch[level], ch[level], 3, 1.0);
            for _ in 0..config.blocks_per_level {
                h = b.res_block(h, ch[level]);
            }
        }
        let a = b.push(Op::Silu(h));
        b.conv(a, ch[0], 1, 1, 0.1);

        let mut params = vec![0.0; b.n_params];
        let mut rng = rng_from_seed(config.init_seed);
        for layer in &b.layers {
            let fan_in = (layer.shape.cin * layer.shape.kernel * layer.shape.kernel) as f64;
            let normal = Normal::new(0.0, layer.init_scale * (2.0 / fan_in).sqrt())
                .expect("positive std");
            for w in &mut params[layer.offset..layer.offset + layer.shape.weight_len()] {
                *w = normal.sample(&mut rng);
            }
        }
        Ok(Self {
            config,
            ops: b.ops,
            layers: b.layers,
            params,
        })
    }

    /// Rebuilds a network from a saved parameter vector.
    pub fn with_params(config: UNetConfig, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::new(config)?;
        if params.len() != net.params.len() {
            return Err(Error::BadConfig(format!(
                "expected {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn config(&self) -> &UNetConfig {
        &self.config
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Named parameter tensors in storage order: `(name, shape, values)`.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let ConvShape { cin, cout, kernel } = layer.shape;
            let w_end = layer.offset + layer.shape.weight_len();
            out.push((
                format!("conv{i}.weight"),
                vec![cout, cin, kernel, kernel],
                &self.params[layer.offset..w_end],
            ));
            out.push((
                format!("conv{i}.bias"),
                vec![cout],
                &self.params[w_end..w_end + cout],
            ));
        }
        out
    }

    fn input_tensor(input: &DenoiserInput<'_>) -> Tensor {
        let mut t = Tensor::zeros(INPUT_CHANNELS, input.height, input.width);
        let sqrt_ab = input.alpha_bar.sqrt();
        let p = input.pixels();
        for k in 0..p {
            t.data[k] = input.x_t[k];
            t.data[p + k] = input.cond[k];
            t.data[2 * p + k] = if input.known[k] { 1.0 } else { 0.0 };
            t.data[3 * p + k] = if input.x_t[k] == -1.0 { 1.0 } else { 0.0 };
            t.data[4 * p + k] = sqrt_ab;
        }
        t
    }

    fn forward_values(&self, input: Tensor) -> Vec<Tensor> {
        let mut values: Vec<Tensor> = Vec::with_capacity(self.ops.len());
        let mut input = Some(input);
        for op in &self.ops {
            let v = match *op {
                Op::Input => input.take().expect("single input"),
                Op::Conv { src, layer } => {
                    let l = self.layers[layer];
                    nn::conv_forward(l.shape, &self.params[l.offset..], &values[src])
                }
                Op::Silu(src) => nn::silu_forward(&values[src]),
                Op::Add(a, b) => {
                    let mut s = values[a].clone();
                    s.add_assign(&values[b]);
                    s
                }
                Op::Pool(src) => nn::pool_forward(&values[src]),
                Op::Up { src, like } => {
                    nn::upsample_forward(&values[src], values[like].height, values[like].width)
                }
                Op::Concat(a, b) => nn::concat(&values[a], &values[b]),
            };
            values.push(v);
        }
        values
    }

    fn backward(&self, values: &[Tensor], d_out: Tensor, grad: &mut [f64]) {
        let mut grads: Vec<Option<Tensor>> = vec![None; values.len()];
        grads[values.len() - 1] = Some(d_out);
        let accumulate = |grads: &mut Vec<Option<Tensor>>, at: usize, g: Tensor| match &mut grads[at] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        };
        for i in (0..self.ops.len()).rev() {
            let Some(g) = grads[i].take() else { continue };
            match self.ops[i] {
                Op::Input => {}
                Op::Conv { src, layer } => {
                    let l = self.layers[layer];
                    let d = nn::conv_backward(
                        l.shape,
                        &self.params[l.offset..],
                        &values[src],
                        &g,
                        &mut grad[l.offset..],
                    );
                    // The input plane needs no gradient.
                    if !matches!(self.ops[src], Op::Input) {
                        accumulate(&mut grads, src, d);
                    }
                }
                Op::Silu(src) => accumulate(&mut grads, src, nn::silu_backward(&values[src], &g)),
                Op::Add(a, b) => {
                    accumulate(&mut grads, b, g.clone());
                    accumulate(&mut grads, a, g);
                }
                Op::Pool(src) => {
                    let s = &values[src];
                    accumulate(&mut grads, src, nn::pool_backward(s.height, s.width, &g));
                }
                Op::Up { src, .. } => {
                    let s = &values[src];
                    accumulate(&mut grads, src, nn::upsample_backward(s.height, s.width, &g));
                }
                Op::Concat(a, b) => {
                    let (ga, gb) = nn::split(&g, values[a].channels);
                    accumulate(&mut grads, a, ga);
                    accumulate(&mut grads, b, gb);
                }
            }
        }
    }

    fn noise_from_output(&self, input: &DenoiserInput<'_>, out: &[f64]) -> Vec<f64> {
        match self.config.head {
            OutputHead::Noise => out.to_vec(),
            OutputHead::Velocity => {
                let ab = input.alpha_bar.clamp(0.0, 1.0);
                let (sa, sn) = (ab.sqrt(), (1.0 - ab).sqrt());
                out.iter()
                    .zip(input.x_t)
                    .map(|(v, x)| sn * x + sa * v)
                    .collect()
            }
        }
    }
}

impl Denoiser for UNet {
    fn predict(&self, input: &DenoiserInput<'_>) -> Result<Vec<f64>> {
        input.validate()?;
        let values = self.forward_values(Self::input_tensor(input));
        let out = &values.last().expect("non-empty graph").data;
        Ok(self.noise_from_output(input, out))
    }
}

impl Trainable for UNet {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward_backward(
        &self,
        input: &DenoiserInput<'_>,
        head: &mut dyn FnMut(&[f64]) -> (f64, Vec<f64>),
        grad: &mut [f64],
    ) -> Result<f64> {
        input.validate()?;
        if grad.len() != self.params.len() {
            return Err(Error::BadConfig("gradient buffer has the wrong length".into()));
        }
        let values = self.forward_values(Self::input_tensor(input));
        let out = values.last().expect("non-empty graph");
        let eps_hat = self.noise_from_output(input, &out.data);
        let (loss, d_eps) = head(&eps_hat);
        let scale = match self.config.head {
            OutputHead::Noise => 1.0,
            OutputHead::Velocity => input.alpha_bar.clamp(0.0, 1.0).sqrt(),
        };
        let d_out = Tensor {
            channels: 1,
            height: input.height,
            width: input.width,
            data: d_eps.iter().map(|g| g * scale).collect(),
        };
        self.backward(&values, d_out, grad);
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::loss::{masked_l1_loss, masked_l1_loss_grad};
    use crate::diffusion::process::standard_normal;
    use crate::raster::Mask;

    struct Fixture {
        x_t: Vec<f64>,
        cond: Vec<f64>,
        known: Vec<bool>,
        eps: Vec<f64>,
        m: Mask,
    }

    fn fixture(w: usize, h: usize) -> Fixture {
        let mut rng = rng_from_seed(21);
        let n = w * h;
        let m = Mask::new(w, h, (0..n).map(|k| k % 7 != 0).collect()).unwrap();
        let mut x_t = standard_normal(n, &mut rng);
        for (v, inside) in x_t.iter_mut().zip(m.data()) {
            if !inside {
                *v = -1.0;
            }
        }
        Fixture {
            x_t,
            cond: standard_normal(n, &mut rng),
            known: (0..n).map(|k| k % 3 == 0).collect(),
            eps: standard_normal(n, &mut rng),
            m,
        }
    }

    fn input<'a>(f: &'a Fixture, w: usize, h: usize) -> DenoiserInput<'a> {
        DenoiserInput {
            width: w,
            height: h,
            x_t: &f.x_t,
            cond: &f.cond,
            known: &f.known,
            alpha_bar: 0.37,
        }
    }

    #[test]
    fn shapes_and_determinism() {
        for (w, h) in [(24, 24), (7, 5)] {
            let net = reference_denoiser(UNetConfig::default()).unwrap();
            let f = fixture(w, h);
            let a = net.predict(&input(&f, w, h)).unwrap();
            let b = net.predict(&input(&f, w, h)).unwrap();
            assert_eq!(a.len(), w * h);
            assert_eq!(a, b);
            assert!(a.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn default_size_is_small() {
        let net = reference_denoiser(UNetConfig::default()).unwrap();
        assert!((10_000..40_000).contains(&net.param_count()), "{}", net.param_count());
        let total: usize = net.tensors().iter().map(|(_, s, v)| {
            assert_eq!(s.iter().product::<usize>(), v.len());
            v.len()
        }).sum();
        assert_eq!(total, net.param_count());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(UNet::new(UNetConfig { channels: vec![], ..Default::default() }).is_err());
        assert!(UNet::new(UNetConfig { channels: vec![4, 0], ..Default::default() }).is_err());
        let net = UNet::new(UNetConfig::default()).unwrap();
        assert!(UNet::with_params(UNetConfig::default(), vec![0.0; net.param_count() - 1]).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (w, h) = (6, 5);
        let f = fixture(w, h);
        for head in [OutputHead::Noise, OutputHead::Velocity] {
            let config = UNetConfig {
                channels: vec![2, 3, 2],
                blocks_per_level: 1,
                head,
                init_seed: 3,
            };
            let mut net = UNet::new(config).unwrap();
            let loss_at = |net: &UNet| {
                let eps_hat = net.predict(&input(&f, w, h)).unwrap();
                masked_l1_loss(&f.eps, &eps_hat, &f.m).unwrap()
            };
            let mut grad = vec![0.0; net.param_count()];
            let mut loss_head = |out: &[f64]| masked_l1_loss_grad(&f.eps, out, &f.m).unwrap();
            net.forward_backward(&input(&f, w, h), &mut loss_head, &mut grad).unwrap();
            let step = 1e-6;
            let mut worst: f64 = 0.0;
            for k in 0..net.param_count() {
                let orig = net.params()[k];
                net.params_mut()[k] = orig + step;
                let up = loss_at(&net);
                net.params_mut()[k] = orig - step;
                let down = loss_at(&net);
                net.params_mut()[k] = orig;
                let fd = (up - down) / (2.0 * step);
                let err = (fd - grad[k]).abs() / (fd.abs().max(grad[k].abs()) + 1e-6);
                worst = worst.max(err);
            }
            assert!(worst < 1e-3, "{head:?}: worst relative error {worst}");
        }
    }
}
