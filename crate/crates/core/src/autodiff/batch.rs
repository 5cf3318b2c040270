//! Batched forward jets and their reverse sweep.
//!
//! For a chunk of `n` points every layer holds an `outputs x (c * n)` matrix,
//! `c` being the number of jet components. Row `k` stores the jets of unit
//! `k` component-major: `n` values, then `n` time derivatives, and so on.
//! The affine part of a layer acts identically on all components, so each
//! layer costs one matrix product in each direction. The activation couples
//! components pointwise and is differentiated by hand; keeping components in
//! separate runs lets those loops vectorize across points.

use alloc::vec::Vec;

use super::JetLayout;
use crate::math;
use crate::network::{Activation, LayerShape, NetworkParams};

/// Work buffers for evaluating one network on chunks of points.
pub struct BatchJets {
    layout: JetLayout,
    input_dim: usize,
    n: usize,
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
    /// `sigma'`, `sigma''`, `sigma'''` per unit, each a run of `n`.
    slopes: Vec<Vec<f64>>,
    planar: Vec<f64>,
    output: Vec<f64>,
    adj_a: Vec<f64>,
    adj_z: Vec<f64>,
}

fn fit(buf: &mut Vec<f64>, len: usize) {
    if buf.len() != len {
        buf.resize(len, 0.0);
    }
}

impl BatchJets {
    pub fn new(params: &NetworkParams) -> Self {
        let arch = params.architecture();
        let hidden = params.shapes().len() - 1;
        BatchJets {
            layout: JetLayout::new(arch.spatial_dim()),
            input_dim: arch.input_dim,
            n: 0,
            input: Vec::new(),
            pre: (0..hidden).map(|_| Vec::new()).collect(),
            act: (0..hidden).map(|_| Vec::new()).collect(),
            slopes: (0..hidden).map(|_| Vec::new()).collect(),
            planar: Vec::new(),
            output: Vec::new(),
            adj_a: Vec::new(),
            adj_z: Vec::new(),
        }
    }

    pub fn layout(&self) -> JetLayout {
        self.layout
    }

    /// Whether the buffers were set up for this network's shape.
    pub fn fits(&self, params: &NetworkParams) -> bool {
        let arch = params.architecture();
        arch.input_dim == self.input_dim && params.shapes().len() - 1 == self.pre.len()
    }

    /// Jets of the network at `points` (row-major, `input_dim` coordinates
    /// each). Returns `n * c` components, point-major in [`JetLayout`] order.
    pub fn forward(&mut self, params: &NetworkParams, points: &[f64]) -> &[f64] {
        let arch = params.architecture();
        let shapes = params.shapes();
        let c = self.layout.len();
        let d = self.layout.dim();
        let n = points.len() / self.input_dim;
        debug_assert_eq!(points.len(), n * self.input_dim);
        self.n = n;
        let cols = n * c;

        fit(&mut self.input, self.input_dim * cols);
        self.input.fill(0.0);
        for i in 0..self.input_dim {
            let scaling = arch.scaling(i);
            let row = &mut self.input[i * cols..(i + 1) * cols];
            for p in 0..n {
                row[p] = scaling.apply(points[p * self.input_dim + i]);
            }
            let comp = if i == 0 { JetLayout::D_T } else { self.layout.d_x(i - 1) };
            row[comp * n..(comp + 1) * n].fill(scaling.scale);
        }

        let hidden = shapes.len() - 1;
        for l in 0..hidden {
            let shape = shapes[l];
            let (w, b) = params.layer(l);
            let (done, rest) = self.act.split_at_mut(l);
            let src: &[f64] = if l == 0 { &self.input } else { &done[l - 1] };
            let pre = &mut self.pre[l];
            fit(pre, shape.outputs * cols);
            affine(shape, w, b, src, cols, n, pre);
            let act = &mut rest[0];
            fit(act, shape.outputs * cols);
            let slopes = &mut self.slopes[l];
            fit(slopes, shape.outputs * 3 * n);
            for k in 0..shape.outputs {
                let z = &pre[k * cols..(k + 1) * cols];
                let a = &mut act[k * cols..(k + 1) * cols];
                let s = &mut slopes[k * 3 * n..(k + 1) * 3 * n];
                match d {
                    1 => activate::<1, 4>(arch.activation, z, a, s, n),
                    2 => activate::<2, 7>(arch.activation, z, a, s, n),
                    _ => activate::<3, 11>(arch.activation, z, a, s, n),
                }
            }
        }

        let shape = shapes[hidden];
        let (w, b) = params.layer(hidden);
        fit(&mut self.planar, cols);
        let src: &[f64] = if hidden == 0 { &self.input } else { &self.act[hidden - 1] };
        affine(shape, w, b, src, cols, n, &mut self.planar);
        fit(&mut self.output, cols);
        for m in 0..c {
            for p in 0..n {
                self.output[p * c + m] = self.planar[m * n + p];
            }
        }
        &self.output
    }

    /// Accumulates into `grad` the parameter gradient of `sum(adjoint * U)`,
    /// `U` being the output jets of the last [`BatchJets::forward`] call and
    /// `adjoint` laid out like them.
    pub fn backward(&mut self, params: &NetworkParams, adjoint: &[f64], grad: &mut [f64]) {
        let shapes = params.shapes();
        let c = self.layout.len();
        let d = self.layout.dim();
        let n = self.n;
        let cols = n * c;
        debug_assert_eq!(adjoint.len(), cols);
        debug_assert_eq!(grad.len(), params.len());

        fit(&mut self.planar, cols);
        for m in 0..c {
            for p in 0..n {
                self.planar[m * n + p] = adjoint[p * c + m];
            }
        }
        let hidden = shapes.len() - 1;
        let out_shape = shapes[hidden];
        {
            let src: &[f64] = if hidden == 0 { &self.input } else { &self.act[hidden - 1] };
            weight_and_bias_grad(out_shape, &self.planar, src, cols, n, grad);
        }
        if hidden == 0 {
            return;
        }
        // adjoint of the last hidden activations
        fit(&mut self.adj_a, out_shape.inputs * cols);
        let (w_out, _) = params.layer(hidden);
        transpose_product(out_shape, w_out, &self.planar, cols, &mut self.adj_a);

        for l in (0..hidden).rev() {
            let shape = shapes[l];
            let pre = &self.pre[l];
            let slopes = &self.slopes[l];
            fit(&mut self.adj_z, shape.outputs * cols);
            for k in 0..shape.outputs {
                let z = &pre[k * cols..(k + 1) * cols];
                let b = &self.adj_a[k * cols..(k + 1) * cols];
                let dz = &mut self.adj_z[k * cols..(k + 1) * cols];
                let s = &slopes[k * 3 * n..(k + 1) * 3 * n];
                match d {
                    1 => adjoint_unit::<1, 4>(z, b, s, dz, n),
                    2 => adjoint_unit::<2, 7>(z, b, s, dz, n),
                    _ => adjoint_unit::<3, 11>(z, b, s, dz, n),
                }
            }
            let src: &[f64] = if l == 0 { &self.input } else { &self.act[l - 1] };
            weight_and_bias_grad(shape, &self.adj_z, src, cols, n, grad);
            if l > 0 {
                let (w, _) = params.layer(l);
                fit(&mut self.adj_a, shape.inputs * cols);
                transpose_product(shape, w, &self.adj_z, cols, &mut self.adj_a);
            }
        }
    }
}

/// Splits a component-major row into its `C` runs of length `n`.
fn runs<const C: usize>(row: &[f64], n: usize) -> [&[f64]; C] {
    core::array::from_fn(|m| &row[m * n..(m + 1) * n])
}

fn runs_mut<const C: usize>(row: &mut [f64], n: usize) -> [&mut [f64]; C] {
    let mut it = row.chunks_exact_mut(n.max(1));
    core::array::from_fn(|_| it.next().map(|r| &mut r[..n]).unwrap_or(&mut []))
}

/// Activation of one unit's jets; `s` receives the three slopes.
fn activate<const D: usize, const C: usize>(act: Activation, z: &[f64], a: &mut [f64], s: &mut [f64], n: usize) {
    let z: [&[f64]; C] = runs(z, n);
    let [s1, s2, s3]: [&mut [f64]; 3] = runs_mut(s, n);
    let a: [&mut [f64]; C] = runs_mut(a, n);
    match act {
        Activation::Tanh => {
            math::tanh_slice(z[0], a[0]);
            for p in 0..n {
                let t = a[0][p];
                let d1 = 1.0 - t * t;
                s1[p] = d1;
                s2[p] = -2.0 * t * d1;
                s3[p] = (6.0 * t * t - 2.0) * d1;
            }
        }
        _ => {
            for p in 0..n {
                let [v, d1, d2, d3] = act.derivatives(z[0][p]);
                a[0][p] = v;
                s1[p] = d1;
                s2[p] = d2;
                s3[p] = d3;
            }
        }
    }
    for m in 1..2 + D {
        for p in 0..n {
            a[m][p] = s1[p] * z[m][p];
        }
    }
    let mut h = 2 + D;
    for i in 0..D {
        for j in i..D {
            let (zi, zj, zh) = (z[2 + i], z[2 + j], z[h]);
            for p in 0..n {
                a[h][p] = s1[p] * zh[p] + s2[p] * zi[p] * zj[p];
            }
            h += 1;
        }
    }
}

/// Reverse of [`activate`]: `dz` from the activation adjoint `b`.
fn adjoint_unit<const D: usize, const C: usize>(z: &[f64], b: &[f64], s: &[f64], dz: &mut [f64], n: usize) {
    let z: [&[f64]; C] = runs(z, n);
    let b: [&[f64]; C] = runs(b, n);
    let [s1, s2, s3]: [&[f64]; 3] = runs(s, n);
    let mut dz: [&mut [f64]; C] = runs_mut(dz, n);
    for p in 0..n {
        dz[0][p] = s1[p] * b[0][p];
    }
    for m in 1..2 + D {
        let (bm, zm) = (b[m], z[m]);
        let (head, tail) = dz.split_at_mut(m);
        let (d0, dm) = (&mut *head[0], &mut *tail[0]);
        for p in 0..n {
            dm[p] = s1[p] * bm[p];
            d0[p] += s2[p] * bm[p] * zm[p];
        }
    }
    let mut h = 2 + D;
    for i in 0..D {
        for j in i..D {
            let (bh, zh, zi, zj) = (b[h], z[h], z[2 + i], z[2 + j]);
            {
                let (head, tail) = dz.split_at_mut(h);
                let (d0, dh) = (&mut *head[0], &mut *tail[0]);
                for p in 0..n {
                    dh[p] = s1[p] * bh[p];
                    d0[p] += (s2[p] * zh[p] + s3[p] * zi[p] * zj[p]) * bh[p];
                }
            }
            if i == j {
                let di = &mut *dz[2 + i];
                for p in 0..n {
                    di[p] += 2.0 * s2[p] * bh[p] * zi[p];
                }
            } else {
                let (head, tail) = dz.split_at_mut(2 + j);
                let (di, dj) = (&mut *head[2 + i], &mut *tail[0]);
                for p in 0..n {
                    di[p] += s2[p] * bh[p] * zj[p];
                    dj[p] += s2[p] * bh[p] * zi[p];
                }
            }
            h += 1;
        }
    }
}

/// `out = W src`, plus the bias on value components.
fn affine(shape: LayerShape, w: &[f64], b: &[f64], src: &[f64], cols: usize, n: usize, out: &mut [f64]) {
    matmul(shape.outputs, shape.inputs, cols, w, src, out);
    for k in 0..shape.outputs {
        for v in &mut out[k * cols..k * cols + n] {
            *v += b[k];
        }
    }
}

/// `grad_W += adj src^T`, `grad_b += sum of value-component adjoints`.
fn weight_and_bias_grad(shape: LayerShape, adj: &[f64], src: &[f64], cols: usize, n: usize, grad: &mut [f64]) {
    matmul_nt_add(shape.outputs, shape.inputs, cols, adj, src, &mut grad[shape.weights..shape.bias]);
    for k in 0..shape.outputs {
        grad[shape.bias + k] += adj[k * cols..k * cols + n].iter().sum::<f64>();
    }
}

/// `out = W^T adj`.
fn transpose_product(shape: LayerShape, w: &[f64], adj: &[f64], cols: usize, out: &mut [f64]) {
    gemm(shape.inputs, shape.outputs, cols, w, (1, shape.inputs), adj, (cols, 1), 0.0, out, (cols, 1));
}

/// `c = a b`, row-major `a: m x k`, `b: k x n`.
fn matmul(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    gemm(m, k, n, a, (k, 1), b, (n, 1), 0.0, c, (n, 1));
}

/// `c += a b^T`, row-major `a: m x n`, `b: k x n`, `c: m x k`.
fn matmul_nt_add(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    gemm(m, n, k, a, (n, 1), b, (1, n), 1.0, c, (k, 1));
}

/// `c = a b + beta c` for strided `m x k` and `k x n` operands.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
    (rsc, csc): (usize, usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    let last = |rows: usize, cols: usize, rs: usize, cs: usize| (rows - 1) * rs + (cols - 1) * cs;
    assert!(k == 0 || a.len() > last(m, k, rsa, csa));
    assert!(k == 0 || b.len() > last(k, n, rsb, csb));
    assert!(c.len() > last(m, n, rsc, csc));
    // SAFETY: the assertions above keep every strided access inside the
    // slices, and `c` does not alias `a` or `b` (it is borrowed mutably).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}
