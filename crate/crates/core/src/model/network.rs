use std::borrow::Cow;

use rayon::prelude::*;

use super::{HeuristicModel, Pooling};
use crate::domains::FeatureTensor;
use crate::{Error, Result, Scalar};

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<S> {
    height: usize,
    width: usize,
    /// Post-ReLU output of every convolution layer, `[c][y][x]`.
    conv_out: Vec<Vec<S>>,
    pooled: Vec<S>,
    /// Position of each channel maximum (max pooling only).
    argmax: Vec<usize>,
    hidden: Vec<S>,
    /// Head output before softplus.
    logit: S,
    /// `h = output_scale · softplus(logit)`.
    pub value: S,
}

/// Same-padded stride-1 convolution, adding into `out` (pre-filled with the bias).
#[allow(clippy::too_many_arguments)]
fn conv_forward<S: Scalar>(
    input: &[S],
    in_ch: usize,
    out: &mut [S],
    out_ch: usize,
    weights: &[S],
    k: usize,
    h: usize,
    w: usize,
) {
    let pad = (k / 2) as isize;
    let plane = h * w;
    for o in 0..out_ch {
        let out_plane = &mut out[o * plane..(o + 1) * plane];
        for c in 0..in_ch {
            let in_plane = &input[c * plane..(c + 1) * plane];
            for ky in 0..k {
                let dy = ky as isize - pad;
                let (y0, y1) = valid_range(dy, h);
                for kx in 0..k {
                    let wt = weights[((o * in_ch + c) * k + ky) * k + kx];
                    if wt == S::zero() {
                        continue;
                    }
                    let dx = kx as isize - pad;
                    let (x0, x1) = valid_range(dx, w);
                    if x0 == x1 {
                        continue;
                    }
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let src = &in_plane[sy * w + (x0 as isize + dx) as usize..sy * w + (x1 as isize + dx) as usize];
                        let dst = &mut out_plane[y * w + x0..y * w + x1];
                        for (d, &s) in dst.iter_mut().zip(src) {
                            *d = *d + wt * s;
                        }
                    }
                }
            }
        }
    }
}

/// Output rows/columns `[lo, hi)` whose shifted source index `i + d` is inside `[0, n)`.
#[inline]
fn valid_range(d: isize, n: usize) -> (usize, usize) {
    let lo = ((-d).max(0) as usize).min(n);
    let hi = ((n as isize - d.max(0)).max(0) as usize).max(lo);
    (lo, hi)
}

impl<S: Scalar> HeuristicModel<S> {
    /// Input of the first convolution: the domain planes, plus coordinate
    /// planes when enabled.
    fn conv_input<'a>(&self, features: &'a FeatureTensor<S>) -> Cow<'a, [S]> {
        if !self.config.coord_planes {
            return Cow::Borrowed(&features.values);
        }
        let (h, w) = (features.height, features.width);
        let scale = |n: usize| if n > 1 { S::one() / S::from_usize_lossy(n - 1) } else { S::zero() };
        let (sx, sy) = (scale(w), scale(h));
        let mut values = Vec::with_capacity(features.values.len() + 2 * h * w);
        values.extend_from_slice(&features.values);
        for _ in 0..h {
            values.extend((0..w).map(|x| S::from_usize_lossy(x) * sx));
        }
        for y in 0..h {
            values.extend(std::iter::repeat_n(S::from_usize_lossy(y) * sy, w));
        }
        Cow::Owned(values)
    }

    pub fn forward(&self, features: &FeatureTensor<S>) -> Result<S> {
        self.forward_cached(features).map(|c| c.value)
    }

    pub fn forward_cached(&self, features: &FeatureTensor<S>) -> Result<ForwardCache<S>> {
        if features.channels != self.config.input_channels {
            return Err(Error::ChannelMismatch { expected: self.config.input_channels, got: features.channels });
        }
        let (h, w) = (features.height, features.width);
        let plane = h * w;
        let params = &self.params;
        let mut conv_out: Vec<Vec<S>> = Vec::with_capacity(self.config.conv_layers.len());
        let first_input = self.conv_input(features);
        let mut in_ch = self.config.conv_input_channels();
        for (i, spec) in self.config.conv_layers.iter().enumerate() {
            let wb = &self.layout.blocks[2 * i];
            let bb = &self.layout.blocks[2 * i + 1];
            let bias = &params[bb.range()];
            let mut out = vec![S::zero(); spec.out_channels * plane];
            for (o, chunk) in out.chunks_mut(plane).enumerate() {
                chunk.fill(bias[o]);
            }
            let input: &[S] = conv_out.last().map_or(&first_input, |v| v);
            conv_forward(input, in_ch, &mut out, spec.out_channels, &params[wb.range()], spec.kernel_size, h, w);
            for v in &mut out {
                *v = v.max(S::zero());
            }
            conv_out.push(out);
            in_ch = spec.out_channels;
        }

        let inv_area = S::one() / S::from_usize_lossy(plane);
        let last = conv_out.last().unwrap();
        let mut pooled: Vec<S> = last.chunks(plane).map(|p| p.iter().copied().sum::<S>() * inv_area).collect();
        let mut argmax = Vec::new();
        if self.config.pooling == Pooling::AverageMax {
            for p in last.chunks(plane) {
                let (i, m) =
                    p.iter().enumerate().fold((0, p[0]), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
                argmax.push(i);
                pooled.push(m);
            }
        }
        let pooled_len = pooled.len();

        let n_conv = self.config.conv_layers.len();
        let dense_w = &params[self.layout.blocks[2 * n_conv].range()];
        let dense_b = &params[self.layout.blocks[2 * n_conv + 1].range()];
        let head_w = &params[self.layout.blocks[2 * n_conv + 2].range()];
        let head_b = params[self.layout.blocks[2 * n_conv + 3].offset];
        let hidden: Vec<S> = (0..self.config.hidden_width)
            .map(|j| {
                let row = &dense_w[j * pooled_len..(j + 1) * pooled_len];
                let u = dense_b[j] + row.iter().zip(&pooled).map(|(&a, &b)| a * b).sum::<S>();
                u.max(S::zero())
            })
            .collect();
        let logit = head_b + head_w.iter().zip(&hidden).map(|(&a, &b)| a * b).sum::<S>();
        Ok(ForwardCache {
            height: h,
            width: w,
            conv_out,
            pooled,
            argmax,
            hidden,
            logit,
            value: logit.softplus() * S::from_usize_lossy(self.config.output_scale as usize),
        })
    }

    /// Adds `dl_dh · ∂h/∂θ` for one cached example into `grad`.
    pub fn accumulate_gradient(&self, features: &FeatureTensor<S>, cache: &ForwardCache<S>, dl_dh: S, grad: &mut [S]) {
        if dl_dh == S::zero() {
            return;
        }
        let (h, w) = (cache.height, cache.width);
        let plane = h * w;
        let params = &self.params;
        let blocks = &self.layout.blocks;
        let n_conv = self.config.conv_layers.len();
        let last_ch = self.config.conv_layers[n_conv - 1].out_channels;

        let d_logit = dl_dh * S::from_usize_lossy(self.config.output_scale as usize) * cache.logit.sigmoid();
        let head_w = blocks[2 * n_conv + 2].range();
        grad[blocks[2 * n_conv + 3].offset] = grad[blocks[2 * n_conv + 3].offset] + d_logit;
        let dense_w = blocks[2 * n_conv].range();
        let dense_b = blocks[2 * n_conv + 1].range();
        let pooled_len = cache.pooled.len();
        let mut d_pooled = vec![S::zero(); pooled_len];
        for j in 0..self.config.hidden_width {
            grad[head_w.start + j] = grad[head_w.start + j] + d_logit * cache.hidden[j];
            if cache.hidden[j] <= S::zero() {
                continue;
            }
            let du = d_logit * params[head_w.start + j];
            grad[dense_b.start + j] = grad[dense_b.start + j] + du;
            for (c, d) in d_pooled.iter_mut().enumerate() {
                let wi = dense_w.start + j * pooled_len + c;
                grad[wi] = grad[wi] + du * cache.pooled[c];
                *d = *d + du * params[wi];
            }
        }

        let inv_area = S::one() / S::from_usize_lossy(plane);
        let mut d_act: Vec<S> = Vec::with_capacity(last_ch * plane);
        for &g in &d_pooled[..last_ch] {
            d_act.extend(std::iter::repeat_n(g * inv_area, plane));
        }
        for (c, &i) in cache.argmax.iter().enumerate() {
            d_act[c * plane + i] = d_act[c * plane + i] + d_pooled[last_ch + c];
        }
        let first_input = self.conv_input(features);

        for layer in (0..n_conv).rev() {
            let spec = self.config.conv_layers[layer];
            let in_ch = if layer == 0 {
                self.config.conv_input_channels()
            } else {
                self.config.conv_layers[layer - 1].out_channels
            };
            let input: &[S] = if layer == 0 { &first_input } else { &cache.conv_out[layer - 1] };
            let out = &cache.conv_out[layer];
            // ReLU mask.
            for (d, &a) in d_act.iter_mut().zip(out) {
                if a <= S::zero() {
                    *d = S::zero();
                }
            }
            let wr = blocks[2 * layer].range();
            let br = blocks[2 * layer + 1].range();
            for o in 0..spec.out_channels {
                let s: S = d_act[o * plane..(o + 1) * plane].iter().copied().sum();
                grad[br.start + o] = grad[br.start + o] + s;
            }
            let k = spec.kernel_size;
            let pad = (k / 2) as isize;
            let need_input_grad = layer > 0;
            let mut d_in = if need_input_grad { vec![S::zero(); in_ch * plane] } else { Vec::new() };
            for o in 0..spec.out_channels {
                let dz = &d_act[o * plane..(o + 1) * plane];
                for c in 0..in_ch {
                    let in_plane = &input[c * plane..(c + 1) * plane];
                    for ky in 0..k {
                        let dy = ky as isize - pad;
                        let (y0, y1) = valid_range(dy, h);
                        for kx in 0..k {
                            let dx = kx as isize - pad;
                            let (x0, x1) = valid_range(dx, w);
                            if x0 == x1 {
                                continue;
                            }
                            let wi = wr.start + ((o * in_ch + c) * k + ky) * k + kx;
                            let wt = params[wi];
                            let mut acc = S::zero();
                            for y in y0..y1 {
                                let sy = (y as isize + dy) as usize;
                                let s0 = sy * w + (x0 as isize + dx) as usize;
                                let s1 = sy * w + (x1 as isize + dx) as usize;
                                let dz_row = &dz[y * w + x0..y * w + x1];
                                acc = acc + dz_row.iter().zip(&in_plane[s0..s1]).map(|(&a, &b)| a * b).sum::<S>();
                                if need_input_grad {
                                    let d_row = &mut d_in[c * plane + s0..c * plane + s1];
                                    for (d, &g) in d_row.iter_mut().zip(dz_row) {
                                        *d = *d + wt * g;
                                    }
                                }
                            }
                            grad[wi] = grad[wi] + acc;
                        }
                    }
                }
            }
            d_act = d_in;
        }
    }

    /// Exact gradient of `Σ_i dl_dh[i] · h(batch[i])` with respect to `θ`.
    pub fn backward(&self, batch: &[FeatureTensor<S>], dl_dh: &[S]) -> Result<Vec<S>> {
        if batch.len() != dl_dh.len() {
            return Err(Error::ShapeMismatch(format!("{} inputs but {} upstream gradients", batch.len(), dl_dh.len())));
        }
        let caches = batch.par_iter().map(|x| self.forward_cached(x)).collect::<Result<Vec<_>>>()?;
        Ok(self.backward_cached(batch, &caches, dl_dh))
    }

    /// Like [`HeuristicModel::backward`] with forward passes already done.
    ///
    /// Per-example gradients are computed in parallel and summed in input
    /// order, so the result does not depend on the thread count.
    pub fn backward_cached(&self, batch: &[FeatureTensor<S>], caches: &[ForwardCache<S>], dl_dh: &[S]) -> Vec<S> {
        let n = self.param_count();
        const CHUNK: usize = 16;
        let partials: Vec<Vec<S>> = batch
            .par_chunks(CHUNK)
            .zip(caches.par_chunks(CHUNK))
            .zip(dl_dh.par_chunks(CHUNK))
            .map(|((xs, cs), ds)| {
                let mut g = vec![S::zero(); n];
                for ((x, c), &d) in xs.iter().zip(cs).zip(ds) {
                    self.accumulate_gradient(x, c, d, &mut g);
                }
                g
            })
            .collect();
        let mut total = vec![S::zero(); n];
        for part in partials {
            for (t, p) in total.iter_mut().zip(part) {
                *t = *t + p;
            }
        }
        total
    }
}
