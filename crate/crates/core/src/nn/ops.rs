//! Forward and backward kernels for the fixed layer set, plus the two losses.

use super::layer::{Conv2d, Dense};
use super::NnError;
use crate::tensor::{ShapeError, Tensor};

/// Gradients of a parameterised layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub weight: Tensor,
    pub bias: Tensor,
}

fn conv_dims(input: &Tensor, conv: &Conv2d) -> Result<(usize, usize, usize, usize), ShapeError> {
    let s = input.shape();
    if s.len() != 4 {
        return Err(ShapeError::new("conv2d input rank", 4, s.len()));
    }
    if s[1] != conv.in_channels() {
        return Err(ShapeError::new("conv2d input channels", conv.in_channels(), s[1]));
    }
    Ok((s[0], s[1], s[2], s[3]))
}

/// Valid output range `[lo, hi)` along one axis for kernel offset `k` with padding `pad`.
#[inline]
fn valid_range(k: usize, pad: usize, len: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(k).min(len);
    let hi = (len + pad).saturating_sub(k).min(len);
    (lo, hi.max(lo))
}

/// `c = a · b + beta · c` for row-major `a [m, k]`, `b [k, n]`, `c [m, n]`.
/// `a_t` / `b_t` read the operand transposed from its stored layout.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_t: bool, b: &[f64], b_t: bool, beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the extents above are checked against the slice lengths.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// Unfolds one `[Cin, H, W]` image into `[Cin*k*k, H*W]` zero-padded patches.
fn im2col(src: &[f64], cin: usize, h: usize, w: usize, k: usize, cols: &mut [f64]) {
    let pad = k / 2;
    let hw = h * w;
    cols.fill(0.0);
    for ci in 0..cin {
        let plane = &src[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            let (y0, y1) = valid_range(ky, pad, h);
            for kx in 0..k {
                let (x0, x1) = valid_range(kx, pad, w);
                if x0 == x1 {
                    continue;
                }
                let row = &mut cols[((ci * k + ky) * k + kx) * hw..][..hw];
                for y in y0..y1 {
                    let sy = y + ky - pad;
                    row[y * w + x0..y * w + x1]
                        .copy_from_slice(&plane[sy * w + x0 + kx - pad..sy * w + x1 + kx - pad]);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates patch gradients back onto the image.
fn col2im(cols: &[f64], cin: usize, h: usize, w: usize, k: usize, dst: &mut [f64]) {
    let pad = k / 2;
    let hw = h * w;
    for ci in 0..cin {
        let plane = &mut dst[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            let (y0, y1) = valid_range(ky, pad, h);
            for kx in 0..k {
                let (x0, x1) = valid_range(kx, pad, w);
                if x0 == x1 {
                    continue;
                }
                let row = &cols[((ci * k + ky) * k + kx) * hw..][..hw];
                for y in y0..y1 {
                    let sy = y + ky - pad;
                    let d = &mut plane[sy * w + x0 + kx - pad..sy * w + x1 + kx - pad];
                    for (dv, sv) in d.iter_mut().zip(&row[y * w + x0..y * w + x1]) {
                        *dv += sv;
                    }
                }
            }
        }
    }
}

pub fn conv2d_forward(input: &Tensor, conv: &Conv2d) -> Result<Tensor, ShapeError> {
    let (n, cin, h, w) = conv_dims(input, conv)?;
    let cout = conv.out_channels();
    let k = conv.kernel();
    let (hw, r) = (h * w, cin * k * k);
    let x = input.data();
    let mut cols = vec![0.0; r * hw];
    let mut out = vec![0.0; n * cout * hw];
    for b in 0..n {
        im2col(&x[b * cin * hw..(b + 1) * cin * hw], cin, h, w, k, &mut cols);
        let dst = &mut out[b * cout * hw..(b + 1) * cout * hw];
        for (plane, &bias) in dst.chunks_exact_mut(hw).zip(conv.bias.data()) {
            plane.fill(bias);
        }
        gemm(cout, r, hw, conv.weight.data(), false, &cols, false, 1.0, dst);
    }
    Tensor::from_vec(&[n, cout, h, w], out)
}

/// Returns `(grad_input, grad_params)`.
pub fn conv2d_backward(
    input: &Tensor,
    conv: &Conv2d,
    grad_out: &Tensor,
) -> Result<(Tensor, ParamGrads), ShapeError> {
    let (n, cin, h, w) = conv_dims(input, conv)?;
    let cout = conv.out_channels();
    let expected = [n, cout, h, w];
    if grad_out.shape() != expected {
        return Err(ShapeError::new(
            "conv2d grad_out",
            format!("{expected:?}"),
            format!("{:?}", grad_out.shape()),
        ));
    }
    let k = conv.kernel();
    let (hw, r) = (h * w, cin * k * k);
    let x = input.data();
    let g = grad_out.data();
    let mut cols = vec![0.0; r * hw];
    let mut gcols = vec![0.0; r * hw];
    let mut gx = vec![0.0; x.len()];
    let mut gw = vec![0.0; conv.weight.len()];
    let mut gb = vec![0.0; cout];
    for b in 0..n {
        let gb_out = &g[b * cout * hw..(b + 1) * cout * hw];
        for (acc, plane) in gb.iter_mut().zip(gb_out.chunks_exact(hw)) {
            *acc += plane.iter().sum::<f64>();
        }
        im2col(&x[b * cin * hw..(b + 1) * cin * hw], cin, h, w, k, &mut cols);
        gemm(cout, hw, r, gb_out, false, &cols, true, 1.0, &mut gw);
        gemm(r, cout, hw, conv.weight.data(), true, gb_out, false, 0.0, &mut gcols);
        col2im(&gcols, cin, h, w, k, &mut gx[b * cin * hw..(b + 1) * cin * hw]);
    }
    Ok((
        Tensor::from_vec(input.shape(), gx)?,
        ParamGrads {
            weight: Tensor::from_vec(conv.weight.shape(), gw)?,
            bias: Tensor::from_vec(&[cout], gb)?,
        },
    ))
}

pub fn relu_forward(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

/// Subgradient at zero is zero.
pub fn relu_backward(x: &Tensor, grad_out: &Tensor) -> Result<Tensor, ShapeError> {
    x.ensure_same_shape(grad_out, "relu grad_out")?;
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&xv, &g)| if xv > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::from_vec(x.shape(), data)
}

fn dense_batch(x: &Tensor, dense: &Dense) -> Result<usize, ShapeError> {
    if x.ndim() < 2 {
        return Err(ShapeError::new("dense input rank", ">= 2", x.ndim()));
    }
    let n = x.shape()[0];
    let features = x.len() / n.max(1);
    if features != dense.in_features() {
        return Err(ShapeError::new("dense in_features", dense.in_features(), features));
    }
    Ok(n)
}

/// `y = W x + b` per row; input `[N, ...]` is flattened.
pub fn dense_forward(x: &Tensor, dense: &Dense) -> Result<Tensor, ShapeError> {
    let n = dense_batch(x, dense)?;
    let (out_f, in_f) = (dense.out_features(), dense.in_features());
    let w = dense.weight.data();
    let mut out = Vec::with_capacity(n * out_f);
    for row in x.data().chunks_exact(in_f) {
        for o in 0..out_f {
            let wrow = &w[o * in_f..(o + 1) * in_f];
            let dot: f64 = wrow.iter().zip(row).map(|(a, b)| a * b).sum();
            out.push(dot + dense.bias.data()[o]);
        }
    }
    Tensor::from_vec(&[n, out_f], out)
}

pub fn dense_backward(
    x: &Tensor,
    dense: &Dense,
    grad_out: &Tensor,
) -> Result<(Tensor, ParamGrads), ShapeError> {
    let n = dense_batch(x, dense)?;
    let (out_f, in_f) = (dense.out_features(), dense.in_features());
    if grad_out.shape() != [n, out_f] {
        return Err(ShapeError::new(
            "dense grad_out",
            format!("{:?}", [n, out_f]),
            format!("{:?}", grad_out.shape()),
        ));
    }
    let w = dense.weight.data();
    let mut gx = vec![0.0; x.len()];
    let mut gw = vec![0.0; w.len()];
    let mut gb = vec![0.0; out_f];
    for (b, (row, grow)) in x
        .data()
        .chunks_exact(in_f)
        .zip(grad_out.data().chunks_exact(out_f))
        .enumerate()
    {
        let gxrow = &mut gx[b * in_f..(b + 1) * in_f];
        for (o, &g) in grow.iter().enumerate() {
            gb[o] += g;
            let wrow = &w[o * in_f..(o + 1) * in_f];
            let gwrow = &mut gw[o * in_f..(o + 1) * in_f];
            for i in 0..in_f {
                gwrow[i] += g * row[i];
                gxrow[i] += g * wrow[i];
            }
        }
    }
    Ok((
        Tensor::from_vec(x.shape(), gx)?,
        ParamGrads {
            weight: Tensor::from_vec(dense.weight.shape(), gw)?,
            bias: Tensor::from_vec(&[out_f], gb)?,
        },
    ))
}

/// Mean squared error and its gradient `2 (pred - target) / count`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor), ShapeError> {
    pred.ensure_same_shape(target, "mse operands")?;
    let count = pred.len().max(1) as f64;
    let mut loss = 0.0;
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / count
        })
        .collect();
    Ok((loss / count, Tensor::from_vec(pred.shape(), grad)?))
}

/// Mean softmax cross-entropy over `[N, K]` logits with log-sum-exp stabilisation.
pub fn softmax_xent(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor), NnError> {
    if logits.ndim() != 2 {
        return Err(ShapeError::new("logits rank", 2, logits.ndim()).into());
    }
    let (n, k) = (logits.shape()[0], logits.shape()[1]);
    if labels.len() != n {
        return Err(ShapeError::new("label count", n, labels.len()).into());
    }
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(n * k);
    for (row, &label) in logits.data().chunks_exact(k).zip(labels) {
        if label >= k {
            return Err(NnError::LabelOutOfRange { label, classes: k });
        }
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        loss += log_z - row[label];
        for (j, &v) in row.iter().enumerate() {
            let p = (v - log_z).exp();
            let onehot = if j == label { 1.0 } else { 0.0 };
            grad.push((p - onehot) / n as f64);
        }
    }
    Ok((loss / n as f64, Tensor::from_vec(logits.shape(), grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn conv_from(weight: Vec<f64>, shape: [usize; 4], bias: Vec<f64>) -> Conv2d {
        let cout = shape[0];
        Conv2d::from_parts(
            Tensor::from_vec(&shape, weight).unwrap(),
            Tensor::from_vec(&[cout], bias).unwrap(),
        )
    }

    #[test]
    fn zero_input_gives_bias() {
        let mut rng = Rng::new(1);
        let mut conv = Conv2d::new(1, 2, 3, &mut rng);
        conv.bias = Tensor::from_vec(&[2], vec![0.5, -1.5]).unwrap();
        let out = conv2d_forward(&Tensor::zeros(&[1, 1, 3, 3]), &conv).unwrap();
        assert!(out.data()[..9].iter().all(|&v| v == 0.5));
        assert!(out.data()[9..].iter().all(|&v| v == -1.5));
    }

    #[test]
    fn identity_kernel() {
        let conv = conv_from(vec![1.0], [1, 1, 1, 1], vec![0.0]);
        let x = Tensor::from_fn(&[2, 1, 4, 5], |i| i as f64 * 0.3 - 2.0);
        assert_eq!(conv2d_forward(&x, &conv).unwrap(), x);
    }

    #[test]
    fn ones_kernel_on_2x2() {
        // Every output tap sees the whole 2x2 input under same padding.
        let conv = conv_from(vec![1.0; 9], [1, 1, 3, 3], vec![0.0]);
        let x = Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let out = conv2d_forward(&x, &conv).unwrap();
        assert_eq!(out.data(), &[10.0, 10.0, 10.0, 10.0]);
    }

    #[test]
    fn channel_mismatch_names_dimension() {
        let conv = conv_from(vec![1.0; 2], [1, 2, 1, 1], vec![0.0]);
        let err = conv2d_forward(&Tensor::zeros(&[1, 3, 2, 2]), &conv).unwrap_err();
        assert!(err.dim.contains("channels"), "{err}");
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = Rng::new(2);
        let conv = Conv2d::new(2, 3, 3, &mut rng);
        let x = Tensor::from_fn(&[1, 2, 4, 4], |_| rng.normal());
        let (gx, pg) = conv2d_backward(&x, &conv, &Tensor::zeros(&[1, 3, 4, 4])).unwrap();
        assert!(gx.data().iter().all(|&v| v == 0.0));
        assert!(pg.weight.data().iter().all(|&v| v == 0.0));
        assert!(pg.bias.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_conv_gradient_is_x_times_g() {
        let conv = conv_from(vec![0.7], [1, 1, 1, 1], vec![0.0]);
        let x = Tensor::from_vec(&[1, 1, 1, 1], vec![3.0]).unwrap();
        let g = Tensor::from_vec(&[1, 1, 1, 1], vec![2.0]).unwrap();
        let (gx, pg) = conv2d_backward(&x, &conv, &g).unwrap();
        assert_eq!(pg.weight.data(), &[6.0]);
        assert_eq!(pg.bias.data(), &[2.0]);
        assert!((gx.data()[0] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn relu_definition() {
        let x = Tensor::from_vec(&[3], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu_forward(&x).data(), &[0.0, 0.0, 2.0]);
        let x = Tensor::from_vec(&[2], vec![-1.0, 2.0]).unwrap();
        let g = Tensor::from_vec(&[2], vec![5.0, 7.0]).unwrap();
        assert_eq!(relu_backward(&x, &g).unwrap().data(), &[0.0, 7.0]);
        let zero = Tensor::from_vec(&[1], vec![0.0]).unwrap();
        let one = Tensor::from_vec(&[1], vec![1.0]).unwrap();
        assert_eq!(relu_backward(&zero, &one).unwrap().data(), &[0.0]);
    }

    #[test]
    fn dense_hand_arithmetic() {
        let d = Dense::from_parts(
            Tensor::from_vec(&[2, 2], vec![1.0, 1.0, 0.0, 1.0]).unwrap(),
            Tensor::from_vec(&[2], vec![0.0, 1.0]).unwrap(),
        );
        let x = Tensor::from_vec(&[1, 2], vec![1.0, 2.0]).unwrap();
        assert_eq!(dense_forward(&x, &d).unwrap().data(), &[3.0, 3.0]);

        let eye = Dense::from_parts(
            Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            Tensor::zeros(&[2]),
        );
        assert_eq!(dense_forward(&x, &eye).unwrap().data(), x.data());
    }

    #[test]
    fn dense_rejects_wrong_features() {
        let d = Dense::new(3, 2, &mut Rng::new(0));
        assert!(dense_forward(&Tensor::zeros(&[1, 4]), &d).is_err());
    }

    #[test]
    fn mse_cases() {
        let p = Tensor::from_vec(&[2], vec![1.0, 2.0]).unwrap();
        let (loss, grad) = mse_loss(&p, &p).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.data().iter().all(|&g| g == 0.0));
        let (loss, _) = mse_loss(&p, &Tensor::zeros(&[2])).unwrap();
        assert_eq!(loss, 2.5);
    }

    #[test]
    fn xent_cases() {
        let (loss, _) = softmax_xent(&Tensor::zeros(&[3, 10]), &[0, 4, 9]).unwrap();
        assert!((loss - 10f64.ln()).abs() < 1e-12);

        let mut row = vec![0.0; 10];
        row[3] = 100.0;
        let (loss, _) = softmax_xent(&Tensor::from_vec(&[1, 10], row).unwrap(), &[3]).unwrap();
        assert!(loss < 1e-40);

        let err = softmax_xent(&Tensor::zeros(&[1, 3]), &[3]).unwrap_err();
        assert!(matches!(err, NnError::LabelOutOfRange { label: 3, classes: 3 }));
    }
}
