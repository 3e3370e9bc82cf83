//! Feed-forward encoder with hand-written reverse-mode gradients.
//!
//! Input row = [categorical embeddings ∥ numeric value/mask slots]. Each
//! hidden layer is affine → layer norm → dropout → GELU, followed by a final
//! affine map to the embedding dimension. All parameters live in one flat
//! vector so that optimizer steps, checkpoints and gradient checks can treat
//! them uniformly.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

pub const LAYER_NORM_EPS: f64 = 1e-5;

const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + erf(x * INV_SQRT_2))
}

#[inline]
fn gelu_grad(x: f64) -> f64 {
    0.5 * (1.0 + erf(x * INV_SQRT_2)) + x * INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// A matrix or vector stored inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Segment {
    fn len(&self) -> usize {
        self.rows * self.cols
    }

    fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    fn mat<'a>(&self, p: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape((self.rows, self.cols), &p[self.range()]).unwrap()
    }

    fn mat_mut<'a>(&self, p: &'a mut [f64]) -> ArrayViewMut2<'a, f64> {
        ArrayViewMut2::from_shape((self.rows, self.cols), &mut p[self.range()]).unwrap()
    }

    fn vec<'a>(&self, p: &'a [f64]) -> ArrayView1<'a, f64> {
        ArrayView1::from(&p[self.range()])
    }

    fn vec_mut<'a>(&self, p: &'a mut [f64]) -> ArrayViewMut1<'a, f64> {
        ArrayViewMut1::from(&mut p[self.range()])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenLayer {
    pub weight: Segment,
    pub bias: Segment,
    pub gain: Segment,
    pub offset: Segment,
}

/// Parameter layout of a network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    /// Per categorical column: (cardinality + 1) × embed_dim table; the last
    /// row is the MASK token.
    pub tables: Vec<Segment>,
    pub n_numeric_slots: usize,
    pub input_dim: usize,
    pub hidden: Vec<HiddenLayer>,
    pub out_weight: Segment,
    pub out_bias: Segment,
    pub total: usize,
}

impl Layout {
    pub fn new(
        cardinality: &[usize],
        embed_dims: &[usize],
        n_numeric: usize,
        hidden_widths: &[usize],
        embedding_dim: usize,
    ) -> Layout {
        let mut offset = 0;
        let mut seg = |rows: usize, cols: usize| {
            let s = Segment { offset, rows, cols };
            offset += rows * cols;
            s
        };
        let tables: Vec<Segment> = cardinality
            .iter()
            .zip(embed_dims)
            .map(|(&c, &d)| seg(c + 1, d))
            .collect();
        let n_numeric_slots = 2 * n_numeric;
        let input_dim = embed_dims.iter().sum::<usize>() + n_numeric_slots;
        let mut prev = input_dim;
        let hidden = hidden_widths
            .iter()
            .map(|&h| {
                let layer = HiddenLayer {
                    weight: seg(h, prev),
                    bias: seg(1, h),
                    gain: seg(1, h),
                    offset: seg(1, h),
                };
                prev = h;
                layer
            })
            .collect();
        let out_weight = seg(embedding_dim, prev);
        let out_bias = seg(1, embedding_dim);
        Layout {
            tables,
            n_numeric_slots,
            input_dim,
            hidden,
            out_weight,
            out_bias,
            total: offset,
        }
    }

    /// Named parameter groups, for reporting per-group gradient checks.
    pub fn groups(&self) -> Vec<(String, std::ops::Range<usize>)> {
        let mut out = Vec::new();
        for (k, t) in self.tables.iter().enumerate() {
            out.push((format!("embedding_table_{k}"), t.range()));
        }
        for (l, layer) in self.hidden.iter().enumerate() {
            out.push((format!("hidden_{l}.weight"), layer.weight.range()));
            out.push((format!("hidden_{l}.bias"), layer.bias.range()));
            out.push((format!("hidden_{l}.norm_gain"), layer.gain.range()));
            out.push((format!("hidden_{l}.norm_offset"), layer.offset.range()));
        }
        out.push(("output.weight".into(), self.out_weight.range()));
        out.push(("output.bias".into(), self.out_bias.range()));
        out
    }

    /// PyTorch-style initialization: uniform(±1/√fan_in) for affine maps,
    /// standard normal embedding tables, unit gains and zero offsets.
    pub fn init<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut p = vec![0.0; self.total];
        for t in &self.tables {
            for v in &mut p[t.range()] {
                *v = StandardNormal.sample(rng);
            }
        }
        let mut affine = |p: &mut [f64], w: Segment, b: Segment| {
            let bound = 1.0 / (w.cols as f64).sqrt();
            for v in &mut p[w.range()] {
                *v = rng.random_range(-bound..bound);
            }
            for v in &mut p[b.range()] {
                *v = rng.random_range(-bound..bound);
            }
        };
        for layer in &self.hidden {
            affine(&mut p, layer.weight, layer.bias);
            p[layer.gain.range()].fill(1.0);
        }
        affine(&mut p, self.out_weight, self.out_bias);
        p
    }
}

/// Network input for a batch of (possibly masked) records.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchInput {
    /// batch × (2 · numeric columns), value then mask indicator.
    pub numeric: Array2<f64>,
    /// batch × categorical columns, category codes (MASK = cardinality).
    pub categorical: Array2<u32>,
}

impl BatchInput {
    pub fn len(&self) -> usize {
        self.numeric.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stack(&self, other: &BatchInput) -> BatchInput {
        BatchInput {
            numeric: ndarray::concatenate(Axis(0), &[self.numeric.view(), other.numeric.view()])
                .unwrap(),
            categorical: ndarray::concatenate(
                Axis(0),
                &[self.categorical.view(), other.categorical.view()],
            )
            .unwrap(),
        }
    }
}

struct LayerCache {
    input: Array2<f64>,
    normalized: Array2<f64>,
    inv_std: Array1<f64>,
    /// Dropout keep mask already scaled by 1/(1 − p).
    keep: Option<Array2<f64>>,
    pre_activation: Array2<f64>,
}

pub struct ForwardCache {
    categorical: Array2<u32>,
    layers: Vec<LayerCache>,
    last_hidden: Array2<f64>,
    pub output: Array2<f64>,
}

fn assemble_input(layout: &Layout, params: &[f64], batch: &BatchInput) -> Array2<f64> {
    let b = batch.len();
    let mut x = Array2::<f64>::zeros((b, layout.input_dim));
    let mut col = 0;
    for (k, table) in layout.tables.iter().enumerate() {
        let t = table.mat(params);
        for i in 0..b {
            let code = batch.categorical[[i, k]] as usize;
            x.slice_mut(s![i, col..col + table.cols]).assign(&t.row(code));
        }
        col += table.cols;
    }
    x.slice_mut(s![.., col..]).assign(&batch.numeric);
    x
}

/// Runs the network. With `dropout = Some((p, rng))` a fresh dropout mask is
/// drawn for every hidden unit; with `None` dropout is the identity.
pub fn forward<R: Rng>(
    layout: &Layout,
    params: &[f64],
    batch: &BatchInput,
    mut dropout: Option<(f64, &mut R)>,
) -> ForwardCache {
    let mut x = assemble_input(layout, params, batch);
    let mut layers = Vec::with_capacity(layout.hidden.len());
    for layer in &layout.hidden {
        let w = layer.weight.mat(params);
        let bias = layer.bias.vec(params);
        let gain = layer.gain.vec(params);
        let off = layer.offset.vec(params);
        let z = x.dot(&w.t()) + &bias;
        let h = z.ncols() as f64;
        let mut normalized = z;
        let mut inv_std = Array1::zeros(normalized.nrows());
        for (mut row, is) in normalized.outer_iter_mut().zip(inv_std.iter_mut()) {
            let mean = row.sum() / h;
            row -= mean;
            let var = row.dot(&row) / h;
            *is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            row *= *is;
        }
        let mut pre = &normalized * &gain + &off;
        let keep = match dropout.as_mut() {
            Some((p, rng)) if *p > 0.0 => {
                let scale = 1.0 / (1.0 - *p);
                let mask = Array2::from_shape_fn(pre.raw_dim(), |_| {
                    if rng.random::<f64>() < *p {
                        0.0
                    } else {
                        scale
                    }
                });
                pre *= &mask;
                Some(mask)
            }
            _ => None,
        };
        let act = pre.mapv(gelu);
        layers.push(LayerCache {
            input: x,
            normalized,
            inv_std,
            keep,
            pre_activation: pre,
        });
        x = act;
    }
    let output = x.dot(&layout.out_weight.mat(params).t()) + &layout.out_bias.vec(params);
    ForwardCache {
        categorical: batch.categorical.clone(),
        layers,
        last_hidden: x,
        output,
    }
}

/// Accumulates into `grads` the gradient of Σᵢⱼ upstream[i,j] · output[i,j].
pub fn backward(
    layout: &Layout,
    params: &[f64],
    cache: &ForwardCache,
    upstream: &Array2<f64>,
    grads: &mut [f64],
) {
    layout
        .out_weight
        .mat_mut(grads)
        .scaled_add(1.0, &upstream.t().dot(&cache.last_hidden));
    layout
        .out_bias
        .vec_mut(grads)
        .scaled_add(1.0, &upstream.sum_axis(Axis(0)));
    let mut grad_x = upstream.dot(&layout.out_weight.mat(params));

    for (layer, lc) in layout.hidden.iter().zip(&cache.layers).rev() {
        // through GELU
        let mut g = grad_x;
        g.zip_mut_with(&lc.pre_activation, |gv, &x| *gv *= gelu_grad(x));
        if let Some(keep) = &lc.keep {
            g *= keep;
        }
        // layer-norm affine part
        layer
            .gain
            .vec_mut(grads)
            .scaled_add(1.0, &(&g * &lc.normalized).sum_axis(Axis(0)));
        layer.offset.vec_mut(grads).scaled_add(1.0, &g.sum_axis(Axis(0)));
        let gain = layer.gain.vec(params);
        let mut g_hat = g * &gain;
        // normalization: dz = inv_std · (dx̂ − mean(dx̂) − x̂ · mean(dx̂ ⊙ x̂))
        let h = g_hat.ncols() as f64;
        for ((mut row, xh), &is) in g_hat
            .outer_iter_mut()
            .zip(lc.normalized.outer_iter())
            .zip(lc.inv_std.iter())
        {
            let mean_g = row.sum() / h;
            let mean_gx = row.dot(&xh) / h;
            row.zip_mut_with(&xh, |gv, &x| *gv = is * (*gv - mean_g - x * mean_gx));
        }
        let grad_z = g_hat;
        layer
            .weight
            .mat_mut(grads)
            .scaled_add(1.0, &grad_z.t().dot(&lc.input));
        layer.bias.vec_mut(grads).scaled_add(1.0, &grad_z.sum_axis(Axis(0)));
        grad_x = grad_z.dot(&layer.weight.mat(params));
    }

    // scatter into embedding tables
    let mut col = 0;
    for (k, table) in layout.tables.iter().enumerate() {
        let mut t = table.mat_mut(grads);
        for (i, code) in cache.categorical.column(k).iter().enumerate() {
            let mut dst = t.row_mut(*code as usize);
            dst += &grad_x.slice(s![i, col..col + table.cols]);
        }
        col += table.cols;
    }
}
