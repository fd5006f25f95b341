//! Forward and backward kernels for the individual layer kinds. All
//! convolutions are stride 1 with same padding; pooling floors odd extents.

use super::tensor::Tensor;

/// `input [B, C, H, W]`, `w [O, C, K, K]` (K odd), `b [O]` -> `[B, O, H, W]`.
pub(crate) fn conv_forward(input: &Tensor, w: &Tensor, b: &Tensor) -> Tensor {
    let (bs, c, h, wd) = dims4(input);
    let o = w.shape()[0];
    let k = w.shape()[2];
    let r = (k / 2) as isize;
    let mut out = Tensor::zeros(&[bs, o, h, wd]);
    let x = input.data();
    let wv = w.data();
    let bv = b.data();
    let ov = out.data_mut();
    for bi in 0..bs {
        for oc in 0..o {
            let w_oc = &wv[oc * c * k * k..(oc + 1) * c * k * k];
            let out_base = (bi * o + oc) * h * wd;
            for ic in 0..c {
                let in_base = (bi * c + ic) * h * wd;
                let w_ic = &w_oc[ic * k * k..(ic + 1) * k * k];
                for dy in 0..k {
                    let sy = dy as isize - r;
                    for dx in 0..k {
                        let sx = dx as isize - r;
                        let wgt = w_ic[dy * k + dx];
                        if wgt == 0.0 {
                            continue;
                        }
                        let y0 = 0.max(-sy) as usize;
                        let y1 = h.min((h as isize - sy) as usize);
                        let x0 = 0.max(-sx) as usize;
                        let x1 = wd.min((wd as isize - sx) as usize);
                        for y in y0..y1 {
                            let src = in_base + (y as isize + sy) as usize * wd;
                            let dst = out_base + y * wd;
                            for xx in x0..x1 {
                                ov[dst + xx] += wgt * x[src + (xx as isize + sx) as usize];
                            }
                        }
                    }
                }
            }
            let bias = bv[oc];
            for v in &mut ov[out_base..out_base + h * wd] {
                *v += bias;
            }
        }
    }
    out
}

/// Gradients of `conv_forward` w.r.t. weights, bias, and input.
pub(crate) fn conv_backward(
    input: &Tensor,
    w: &Tensor,
    grad_out: &Tensor,
) -> (Tensor, Tensor, Tensor) {
    let (bs, c, h, wd) = dims4(input);
    let o = w.shape()[0];
    let k = w.shape()[2];
    let r = (k / 2) as isize;
    let mut dw = Tensor::zeros(&[o, c, k, k]);
    let mut db = Tensor::zeros(&[o]);
    let mut dx = Tensor::zeros(&[bs, c, h, wd]);
    let x = input.data();
    let wv = w.data();
    let g = grad_out.data();
    {
        let dbv = db.data_mut();
        for bi in 0..bs {
            for oc in 0..o {
                let base = (bi * o + oc) * h * wd;
                dbv[oc] += g[base..base + h * wd].iter().sum::<f64>();
            }
        }
    }
    let dwv = dw.data_mut();
    let dxv = dx.data_mut();
    for bi in 0..bs {
        for oc in 0..o {
            let out_base = (bi * o + oc) * h * wd;
            for ic in 0..c {
                let in_base = (bi * c + ic) * h * wd;
                for dy in 0..k {
                    let sy = dy as isize - r;
                    for dx_ in 0..k {
                        let sx = dx_ as isize - r;
                        let widx = ((oc * c + ic) * k + dy) * k + dx_;
                        let wgt = wv[widx];
                        let y0 = 0.max(-sy) as usize;
                        let y1 = h.min((h as isize - sy) as usize);
                        let x0 = 0.max(-sx) as usize;
                        let x1 = wd.min((wd as isize - sx) as usize);
                        let mut acc = 0.0;
                        for y in y0..y1 {
                            let src = in_base + (y as isize + sy) as usize * wd;
                            let dst = out_base + y * wd;
                            for xx in x0..x1 {
                                let gg = g[dst + xx];
                                acc += gg * x[src + (xx as isize + sx) as usize];
                                dxv[src + (xx as isize + sx) as usize] += wgt * gg;
                            }
                        }
                        dwv[widx] += acc;
                    }
                }
            }
        }
    }
    (dw, db, dx)
}

/// 2x2 stride-2 max pooling; odd trailing rows or columns are dropped.
/// Returns the pooled map and the flat input index of each chosen element
/// (first occurrence wins ties).
pub(crate) fn maxpool2_forward(input: &Tensor) -> (Tensor, Vec<usize>) {
    let (bs, c, h, wd) = dims4(input);
    let (oh, ow) = (h / 2, wd / 2);
    let mut out = Tensor::zeros(&[bs, c, oh, ow]);
    let mut argmax = vec![0usize; bs * c * oh * ow];
    let x = input.data();
    let ov = out.data_mut();
    for bc in 0..bs * c {
        let in_base = bc * h * wd;
        let out_base = bc * oh * ow;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best_idx = in_base + (2 * oy) * wd + 2 * ox;
                let mut best = x[best_idx];
                for (ddy, ddx) in [(0usize, 1usize), (1, 0), (1, 1)] {
                    let idx = in_base + (2 * oy + ddy) * wd + 2 * ox + ddx;
                    if x[idx] > best {
                        best = x[idx];
                        best_idx = idx;
                    }
                }
                ov[out_base + oy * ow + ox] = best;
                argmax[out_base + oy * ow + ox] = best_idx;
            }
        }
    }
    (out, argmax)
}

pub(crate) fn maxpool2_backward(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor,
) -> Tensor {
    let mut dx = Tensor::zeros(input_shape);
    let dxv = dx.data_mut();
    for (g, &idx) in grad_out.data().iter().zip(argmax) {
        dxv[idx] += g;
    }
    dx
}

/// 3x3 stride-1 max pooling over valid neighbors (same spatial size).
pub(crate) fn maxpool3_same_forward(input: &Tensor) -> (Tensor, Vec<usize>) {
    let (bs, c, h, wd) = dims4(input);
    let mut out = Tensor::zeros(&[bs, c, h, wd]);
    let mut argmax = vec![0usize; bs * c * h * wd];
    let x = input.data();
    let ov = out.data_mut();
    for bc in 0..bs * c {
        let base = bc * h * wd;
        for y in 0..h {
            for xx in 0..wd {
                let mut best_idx = usize::MAX;
                let mut best = f64::NEG_INFINITY;
                for ny in y.saturating_sub(1)..h.min(y + 2) {
                    for nx in xx.saturating_sub(1)..wd.min(xx + 2) {
                        let idx = base + ny * wd + nx;
                        if x[idx] > best {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                ov[base + y * wd + xx] = best;
                argmax[base + y * wd + xx] = best_idx;
            }
        }
    }
    (out, argmax)
}

pub(crate) fn maxpool3_same_backward(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor,
) -> Tensor {
    let mut dx = Tensor::zeros(input_shape);
    let dxv = dx.data_mut();
    for (g, &idx) in grad_out.data().iter().zip(argmax) {
        dxv[idx] += g;
    }
    dx
}

pub(crate) fn relu_forward(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

pub(crate) fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Tensor {
    let mut dx = grad_out.clone();
    for (d, x) in dx.data_mut().iter_mut().zip(input.data()) {
        if *x <= 0.0 {
            *d = 0.0;
        }
    }
    dx
}

/// `[B, C, H, W]` -> `[B, C]` spatial mean.
pub(crate) fn gap_forward(input: &Tensor) -> Tensor {
    let (bs, c, h, wd) = dims4(input);
    let hw = (h * wd) as f64;
    let mut out = Tensor::zeros(&[bs, c]);
    let x = input.data();
    let ov = out.data_mut();
    for bc in 0..bs * c {
        ov[bc] = x[bc * h * wd..(bc + 1) * h * wd].iter().sum::<f64>() / hw;
    }
    out
}

pub(crate) fn gap_backward(input_shape: &[usize], grad_out: &Tensor) -> Tensor {
    let mut dx = Tensor::zeros(input_shape);
    let hw = input_shape[2] * input_shape[3];
    let scale = 1.0 / hw as f64;
    let g = grad_out.data();
    for (bc, chunk) in dx.data_mut().chunks_mut(hw).enumerate() {
        let v = g[bc] * scale;
        for d in chunk {
            *d = v;
        }
    }
    dx
}

/// `input [B, I]`, `w [O, I]`, `b [O]` -> `[B, O]`.
pub(crate) fn dense_forward(input: &Tensor, w: &Tensor, b: &Tensor) -> Tensor {
    let bs = input.shape()[0];
    let i = input.shape()[1];
    let o = w.shape()[0];
    let mut out = Tensor::zeros(&[bs, o]);
    let x = input.data();
    let wv = w.data();
    let bv = b.data();
    let ov = out.data_mut();
    for bi in 0..bs {
        let row = &x[bi * i..(bi + 1) * i];
        for oc in 0..o {
            let wr = &wv[oc * i..(oc + 1) * i];
            ov[bi * o + oc] = bv[oc] + row.iter().zip(wr).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    out
}

pub(crate) fn dense_backward(
    input: &Tensor,
    w: &Tensor,
    grad_out: &Tensor,
) -> (Tensor, Tensor, Tensor) {
    let bs = input.shape()[0];
    let i = input.shape()[1];
    let o = w.shape()[0];
    let mut dw = Tensor::zeros(&[o, i]);
    let mut db = Tensor::zeros(&[o]);
    let mut dx = Tensor::zeros(&[bs, i]);
    let x = input.data();
    let wv = w.data();
    let g = grad_out.data();
    {
        let dwv = dw.data_mut();
        let dbv = db.data_mut();
        for bi in 0..bs {
            let row = &x[bi * i..(bi + 1) * i];
            for oc in 0..o {
                let gg = g[bi * o + oc];
                dbv[oc] += gg;
                for (dwe, xe) in dwv[oc * i..(oc + 1) * i].iter_mut().zip(row) {
                    *dwe += gg * xe;
                }
            }
        }
    }
    let dxv = dx.data_mut();
    for bi in 0..bs {
        for oc in 0..o {
            let gg = g[bi * o + oc];
            let wr = &wv[oc * i..(oc + 1) * i];
            for (dxe, we) in dxv[bi * i..(bi + 1) * i].iter_mut().zip(wr) {
                *dxe += gg * we;
            }
        }
    }
    (dw, db, dx)
}

pub(crate) fn sigmoid_forward(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    for v in out.data_mut() {
        *v = sigmoid(*v);
    }
    out
}

pub(crate) fn sigmoid_backward(output: &Tensor, grad_out: &Tensor) -> Tensor {
    let mut dx = grad_out.clone();
    for (d, p) in dx.data_mut().iter_mut().zip(output.data()) {
        *d *= p * (1.0 - p);
    }
    dx
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn dims4(t: &Tensor) -> (usize, usize, usize, usize) {
    let s = t.shape();
    assert_eq!(s.len(), 4, "expected a [B, C, H, W] tensor, got {s:?}");
    (s[0], s[1], s[2], s[3])
}
