//! Minimal channel-major tensor ops with hand-written backward passes.

/// `C x H x W` grid of activations, row-major within each channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn zeros_like(other: &Tensor) -> Self {
        Self::zeros(other.channels, other.height, other.width)
    }

    pub fn plane(&self) -> usize {
        self.height * self.width
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let p = self.plane();
        &self.data[c * p..(c + 1) * p]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let p = self.plane();
        &mut self.data[c * p..(c + 1) * p]
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Shape of a square convolution kernel with zero padding that keeps the
/// spatial size. Weights are laid out `[out][in][ky][kx]`, followed by one
/// bias per output channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub cin: usize,
    pub cout: usize,
    pub kernel: usize,
}

impl ConvShape {
    pub fn weight_len(&self) -> usize {
        self.cout * self.cin * self.kernel * self.kernel
    }

    pub fn param_len(&self) -> usize {
        self.weight_len() + self.cout
    }
}

// Valid index ranges for a shift of `d` along an axis of length `n`:
// output positions `lo..hi` read input position `pos + d`.
fn shifted_range(n: usize, d: isize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d.max(0)).max(0) as usize;
    (lo.min(n), hi.max(lo.min(n)))
}

pub fn conv_forward(shape: ConvShape, params: &[f64], input: &Tensor) -> Tensor {
    let ConvShape { cin, cout, kernel } = shape;
    debug_assert_eq!(input.channels, cin);
    let (h, w) = (input.height, input.width);
    let (weights, bias) = params[..shape.param_len()].split_at(shape.weight_len());
    let half = (kernel / 2) as isize;
    let mut out = Tensor::zeros(cout, h, w);
    for co in 0..cout {
        let dst = out.channel_mut(co);
        dst.fill(bias[co]);
        for ci in 0..cin {
            let src = input.channel(ci);
            for ky in 0..kernel {
                let dy = ky as isize - half;
                let (y0, y1) = shifted_range(h, dy);
                for kx in 0..kernel {
                    let dx = kx as isize - half;
                    let (x0, x1) = shifted_range(w, dx);
                    let wt = weights[((co * cin + ci) * kernel + ky) * kernel + kx];
                    if wt == 0.0 {
                        continue;
                    }
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let o = &mut dst[y * w + x0..y * w + x1];
                        let sx0 = (x0 as isize + dx) as usize;
                        let i = &src[sy * w + sx0..sy * w + sx0 + (x1 - x0)];
                        for (a, b) in o.iter_mut().zip(i) {
                            *a += wt * b;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Accumulates parameter gradients into `grad` and returns the input
/// gradient.
pub fn conv_backward(
    shape: ConvShape,
    params: &[f64],
    input: &Tensor,
    d_out: &Tensor,
    grad: &mut [f64],
) -> Tensor {
    let ConvShape { cin, cout, kernel } = shape;
    let (h, w) = (input.height, input.width);
    let weights = &params[..shape.weight_len()];
    let (g_w, g_b) = grad[..shape.param_len()].split_at_mut(shape.weight_len());
    let half = (kernel / 2) as isize;
    let mut d_in = Tensor::zeros_like(input);
    for co in 0..cout {
        let go = d_out.channel(co);
        g_b[co] += go.iter().sum::<f64>();
        for ci in 0..cin {
            let src = input.channel(ci);
            for ky in 0..kernel {
                let dy = ky as isize - half;
                let (y0, y1) = shifted_range(h, dy);
                for kx in 0..kernel {
                    let dx = kx as isize - half;
                    let (x0, x1) = shifted_range(w, dx);
                    let k = ((co * cin + ci) * kernel + ky) * kernel + kx;
                    let wt = weights[k];
                    let mut acc = 0.0;
                    let di = d_in.channel_mut(ci);
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let sx0 = (x0 as isize + dx) as usize;
                        let g = &go[y * w + x0..y * w + x1];
                        let s = &src[sy * w + sx0..sy * w + sx0 + (x1 - x0)];
                        let d = &mut di[sy * w + sx0..sy * w + sx0 + (x1 - x0)];
                        for ((gv, sv), dv) in g.iter().zip(s).zip(d.iter_mut()) {
                            acc += gv * sv;
                            *dv += wt * gv;
                        }
                    }
                    g_w[k] += acc;
                }
            }
        }
    }
    d_in
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub fn silu_forward(input: &Tensor) -> Tensor {
    Tensor {
        data: input.data.iter().map(|v| v * sigmoid(*v)).collect(),
        channels: input.channels,
        height: input.height,
        width: input.width,
    }
}

pub fn silu_backward(input: &Tensor, d_out: &Tensor) -> Tensor {
    Tensor {
        data: input
            .data
            .iter()
            .zip(&d_out.data)
            .map(|(v, g)| {
                let s = sigmoid(*v);
                g * (s + v * s * (1.0 - s))
            })
            .collect(),
        channels: input.channels,
        height: input.height,
        width: input.width,
    }
}

fn pooled(n: usize) -> usize {
    n.div_ceil(2)
}

/// 2x2 average pooling. Odd trailing rows/columns average over the pixels
/// that exist.
pub fn pool_forward(input: &Tensor) -> Tensor {
    let (h, w) = (input.height, input.width);
    let (ph, pw) = (pooled(h), pooled(w));
    let mut out = Tensor::zeros(input.channels, ph, pw);
    for c in 0..input.channels {
        let src = input.channel(c);
        let dst = out.channel_mut(c);
        for y in 0..ph {
            for x in 0..pw {
                let mut sum = 0.0;
                let mut n = 0.0;
                for sy in 2 * y..(2 * y + 2).min(h) {
                    for sx in 2 * x..(2 * x + 2).min(w) {
                        sum += src[sy * w + sx];
                        n += 1.0;
                    }
                }
                dst[y * pw + x] = sum / n;
            }
        }
    }
    out
}

pub fn pool_backward(input_h: usize, input_w: usize, d_out: &Tensor) -> Tensor {
    let (pw, ph) = (d_out.width, d_out.height);
    let mut d_in = Tensor::zeros(d_out.channels, input_h, input_w);
    for c in 0..d_out.channels {
        let g = d_out.channel(c);
        let dst = d_in.channel_mut(c);
        for y in 0..ph {
            for x in 0..pw {
                let ys = 2 * y..(2 * y + 2).min(input_h);
                let xs = 2 * x..(2 * x + 2).min(input_w);
                let share = g[y * pw + x] / (ys.len() * xs.len()) as f64;
                for sy in ys {
                    for sx in xs.clone() {
                        dst[sy * input_w + sx] += share;
                    }
                }
            }
        }
    }
    d_in
}

/// Nearest-neighbour upsampling to an explicit size (the inverse of
/// [`pool_forward`]'s window layout).
pub fn upsample_forward(input: &Tensor, height: usize, width: usize) -> Tensor {
    let mut out = Tensor::zeros(input.channels, height, width);
    for c in 0..input.channels {
        let src = input.channel(c);
        let dst = out.channel_mut(c);
        for y in 0..height {
            for x in 0..width {
                dst[y * width + x] = src[(y / 2) * input.width + x / 2];
            }
        }
    }
    out
}

pub fn upsample_backward(input_h: usize, input_w: usize, d_out: &Tensor) -> Tensor {
    let mut d_in = Tensor::zeros(d_out.channels, input_h, input_w);
    let (h, w) = (d_out.height, d_out.width);
    for c in 0..d_out.channels {
        let g = d_out.channel(c);
        let dst = d_in.channel_mut(c);
        for y in 0..h {
            for x in 0..w {
                dst[(y / 2) * input_w + x / 2] += g[y * w + x];
            }
        }
    }
    d_in
}

pub fn concat(a: &Tensor, b: &Tensor) -> Tensor {
    debug_assert_eq!((a.height, a.width), (b.height, b.width));
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Tensor {
        channels: a.channels + b.channels,
        height: a.height,
        width: a.width,
        data,
    }
}

pub fn split(t: &Tensor, first_channels: usize) -> (Tensor, Tensor) {
    let cut = first_channels * t.plane();
    let head = Tensor {
        channels: first_channels,
        height: t.height,
        width: t.width,
        data: t.data[..cut].to_vec(),
    };
    let tail = Tensor {
        channels: t.channels - first_channels,
        height: t.height,
        width: t.width,
        data: t.data[cut..].to_vec(),
    };
    (head, tail)
}
