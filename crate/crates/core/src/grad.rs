//! Reverse-mode differentiation over whole-signal operations.
//!
//! Every node on a [`Tape`] holds a complete signal (real or complex) and
//! the forward values its adjoint needs. Complex signals are treated as
//! pairs of real signals: the adjoint stored for a complex node is
//! `dL/dRe + j·dL/dIm`, so a complex-linear map `y = A x` back-propagates
//! as `x̄ = Aᴴ ȳ` and `|E|²` back-propagates as `Ē = 2·E·ȳ`.
//!
//! Noise and evaluation-only stages (quantization, split-step fiber) enter
//! the tape as detached constants; gradients pass through additive
//! constants unchanged.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::dsp::spectral;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradError {
    #[error("loss node {0} is not a real scalar (length {1})")]
    NonScalarLoss(usize, usize),
    #[error("non-finite adjoint produced by node {index} ({op})")]
    NonFiniteAdjoint { index: usize, op: &'static str },
    #[error("non-finite value produced by node {index} ({op})")]
    NonFiniteValue { index: usize, op: &'static str },
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("expected a {expected} signal in {op}")]
    Kind { op: &'static str, expected: &'static str },
    #[error("zero-power input to {0}")]
    ZeroPower(&'static str),
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Value {
    pub fn len(&self) -> usize {
        match self {
            Value::Real(v) => v.len(),
            Value::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Value::Real(v) => v.iter().all(|x| x.is_finite()),
            Value::Complex(v) => v.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        }
    }

    fn zeros_like(&self) -> Value {
        match self {
            Value::Real(v) => Value::Real(vec![0.0; v.len()]),
            Value::Complex(v) => Value::Complex(vec![Complex64::new(0.0, 0.0); v.len()]),
        }
    }

    fn add_assign(&mut self, other: &Value) {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => a.iter_mut().zip(b).for_each(|(a, b)| *a += b),
            (Value::Complex(a), Value::Complex(b)) => {
                a.iter_mut().zip(b).for_each(|(a, b)| *a += b)
            }
            (Value::Complex(a), Value::Real(b)) => {
                a.iter_mut().zip(b).for_each(|(a, b)| a.re += b)
            }
            (Value::Real(a), Value::Complex(b)) => {
                a.iter_mut().zip(b).for_each(|(a, b)| *a += b.re)
            }
        }
    }
}

#[derive(Clone)]
enum Op {
    Constant,
    Param,
    Fir { x: Var, h: Var },
    Spectral { x: Var, response: Arc<[Complex64]> },
    Gather { x: Var, start: usize, step: usize },
    ScaleBy { x: Var, k: Var },
    ScaleConst { x: Var, k: f64 },
    Offset { x: Var, b: Var },
    AddConst { x: Var },
    Map { x: Var, deriv: Vec<f64> },
    MapToComplex { x: Var, deriv: Vec<Complex64> },
    ToComplex { x: Var },
    RealPart { x: Var },
    MulConst { x: Var, factor: Arc<[Complex64]> },
    Sum { xs: Vec<Var> },
    AbsSq { x: Var },
    PowerNormalize { x: Var, scale: f64, mean_sq: f64 },
    CenterMean { x: Var },
    Volterra { x: Var, k1: Var, k2: Var, n2: usize },
    Mse { x: Var, target: Arc<[f64]> },
    Dot { a: Var, b: Var },
    Mean { x: Var },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Constant => "constant",
            Op::Param => "param",
            Op::Fir { .. } => "fir",
            Op::Spectral { .. } => "spectral",
            Op::Gather { .. } => "gather",
            Op::ScaleBy { .. } => "scale_by",
            Op::ScaleConst { .. } => "scale_const",
            Op::Offset { .. } => "offset",
            Op::AddConst { .. } => "add_const",
            Op::Map { .. } => "map",
            Op::MapToComplex { .. } => "map_to_complex",
            Op::ToComplex { .. } => "to_complex",
            Op::RealPart { .. } => "real_part",
            Op::MulConst { .. } => "mul_const",
            Op::Sum { .. } => "sum",
            Op::AbsSq { .. } => "abs_sq",
            Op::PowerNormalize { .. } => "power_normalize",
            Op::CenterMean { .. } => "center_mean",
            Op::Volterra { .. } => "volterra",
            Op::Mse { .. } => "mse",
            Op::Dot { .. } => "dot",
            Op::Mean { .. } => "mean",
        }
    }
}

#[derive(Clone)]
struct Node {
    op: Op,
    label: &'static str,
    value: Value,
}

/// Ordered record of a forward computation.
///
/// Nodes are appended in evaluation order, so every node's inputs precede
/// it and a single reverse sweep visits each node once.
#[derive(Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// A trainable parameter vector and its gradient accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct GradSlot {
    value: Vec<f64>,
    grad: Vec<f64>,
}

impl GradSlot {
    pub fn new(value: Vec<f64>) -> Self {
        let grad = vec![0.0; value.len()];
        Self { value, grad }
    }

    pub fn value(&self) -> &[f64] {
        &self.value
    }

    pub fn value_mut(&mut self) -> &mut [f64] {
        &mut self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn grad_mut(&mut self) -> &mut [f64] {
        &mut self.grad
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn accumulate(&mut self, g: &[f64]) {
        assert_eq!(g.len(), self.value.len(), "gradient shape must match value");
        self.grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Gradients of a scalar loss with respect to every parameter leaf.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    by_param: BTreeMap<Var, Vec<f64>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.by_param.get(&var).map(Vec::as_slice)
    }

    /// Gradient for `var`, or zeros of `len` if the loss did not depend on it.
    pub fn get_or_zero(&self, var: Var, len: usize) -> Vec<f64> {
        self.get(var).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; len])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &[f64])> {
        self.by_param.iter().map(|(k, v)| (*k, v.as_slice()))
    }
}

fn fir_same(x: &[f64], h: &[f64]) -> Vec<f64> {
    crate::dsp::fir::convolve_same(x, h)
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Value) -> Result<Var, GradError> {
        let index = self.nodes.len();
        if !value.is_finite() {
            return Err(GradError::NonFiniteValue { index, op: op.name() });
        }
        self.nodes.push(Node { op, label: "", value });
        Ok(Var(index))
    }

    /// Attach a diagnostic label to a node; shown in error messages.
    pub fn label(&mut self, var: Var, label: &'static str) {
        self.nodes[var.0].label = label;
    }

    pub fn value(&self, var: Var) -> &Value {
        &self.nodes[var.0].value
    }

    pub fn real(&self, var: Var) -> Result<&[f64], GradError> {
        match &self.nodes[var.0].value {
            Value::Real(v) => Ok(v),
            Value::Complex(_) => Err(GradError::Kind { op: "real", expected: "real" }),
        }
    }

    pub fn complex(&self, var: Var) -> Result<&[Complex64], GradError> {
        match &self.nodes[var.0].value {
            Value::Complex(v) => Ok(v),
            Value::Real(_) => Err(GradError::Kind { op: "complex", expected: "complex" }),
        }
    }

    pub fn scalar(&self, var: Var) -> Result<f64, GradError> {
        let v = self.real(var)?;
        if v.len() != 1 {
            return Err(GradError::NonScalarLoss(var.0, v.len()));
        }
        Ok(v[0])
    }

    pub fn len_of(&self, var: Var) -> usize {
        self.nodes[var.0].value.len()
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: &[f64]) -> Var {
        self.nodes.push(Node { op: Op::Param, label: "param", value: Value::Real(value.to_vec()) });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Vec<f64>) -> Var {
        self.nodes.push(Node { op: Op::Constant, label: "", value: Value::Real(value) });
        Var(self.nodes.len() - 1)
    }

    pub fn constant_complex(&mut self, value: Vec<Complex64>) -> Var {
        self.nodes.push(Node { op: Op::Constant, label: "", value: Value::Complex(value) });
        Var(self.nodes.len() - 1)
    }

    /// Same-length FIR convolution of a real signal with a real tap vector.
    pub fn fir(&mut self, x: Var, h: Var) -> Result<Var, GradError> {
        let y = fir_same(self.real(x)?, self.real(h)?);
        self.push(Op::Fir { x, h }, Value::Real(y))
    }

    /// Linear frequency-domain filter `y = IFFT(H · FFT(x))`.
    ///
    /// Real inputs produce real outputs (the real part of the inverse
    /// transform); the adjoint applies `conj(H)` the same way.
    pub fn spectral(&mut self, x: Var, response: Arc<[Complex64]>) -> Result<Var, GradError> {
        let out = match self.value(x) {
            Value::Real(v) => {
                check_len("spectral", v.len(), response.len())?;
                Value::Real(spectral::filter_real(v, &response))
            }
            Value::Complex(v) => {
                check_len("spectral", v.len(), response.len())?;
                Value::Complex(spectral::filter_complex(v, &response))
            }
        };
        self.push(Op::Spectral { x, response }, out)
    }

    /// Strided selection `y[k] = x[start + k·step]` for `k < count`.
    pub fn gather(&mut self, x: Var, start: usize, step: usize, count: usize) -> Result<Var, GradError> {
        let src = self.real(x)?;
        let last = start + step * count.saturating_sub(1);
        if count > 0 && (step == 0 || last >= src.len()) {
            return Err(GradError::Shape {
                op: "gather",
                detail: format!("index {last} out of range for length {}", src.len()),
            });
        }
        let y = (0..count).map(|k| src[start + k * step]).collect();
        self.push(Op::Gather { x, start, step }, Value::Real(y))
    }

    /// Multiply a signal by a scalar node.
    pub fn scale_by(&mut self, x: Var, k: Var) -> Result<Var, GradError> {
        let k_val = self.scalar(k)?;
        let y = match self.value(x) {
            Value::Real(v) => Value::Real(v.iter().map(|a| a * k_val).collect()),
            Value::Complex(v) => Value::Complex(v.iter().map(|a| a * k_val).collect()),
        };
        self.push(Op::ScaleBy { x, k }, y)
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Result<Var, GradError> {
        let y = match self.value(x) {
            Value::Real(v) => Value::Real(v.iter().map(|a| a * k).collect()),
            Value::Complex(v) => Value::Complex(v.iter().map(|a| a * k).collect()),
        };
        self.push(Op::ScaleConst { x, k }, y)
    }

    /// Add a scalar node to every sample of a real signal.
    pub fn offset(&mut self, x: Var, b: Var) -> Result<Var, GradError> {
        let b_val = self.scalar(b)?;
        let y = self.real(x)?.iter().map(|a| a + b_val).collect();
        self.push(Op::Offset { x, b }, Value::Real(y))
    }

    /// Add a constant vector (e.g. a noise realization).
    pub fn add_const(&mut self, x: Var, c: &Value) -> Result<Var, GradError> {
        let mut y = self.value(x).clone();
        check_len("add_const", y.len(), c.len())?;
        match (&mut y, c) {
            (Value::Real(_), Value::Complex(_)) => {
                return Err(GradError::Kind { op: "add_const", expected: "real" })
            }
            _ => y.add_assign(c),
        }
        self.push(Op::AddConst { x }, y)
    }

    /// Elementwise real map with caller-supplied values and derivatives.
    pub fn map(&mut self, x: Var, values: Vec<f64>, deriv: Vec<f64>) -> Result<Var, GradError> {
        let n = self.real(x)?.len();
        check_len("map", n, values.len())?;
        check_len("map", n, deriv.len())?;
        self.push(Op::Map { x, deriv }, Value::Real(values))
    }

    /// Elementwise real-to-complex map with complex derivative `dy/dx`.
    pub fn map_to_complex(
        &mut self,
        x: Var,
        values: Vec<Complex64>,
        deriv: Vec<Complex64>,
    ) -> Result<Var, GradError> {
        let n = self.real(x)?.len();
        check_len("map_to_complex", n, values.len())?;
        check_len("map_to_complex", n, deriv.len())?;
        self.push(Op::MapToComplex { x, deriv }, Value::Complex(values))
    }

    /// Clip to `[lo, hi]`; slope 1 inside (boundary included), 0 outside.
    pub fn clip(&mut self, x: Var, lo: f64, hi: f64) -> Result<Var, GradError> {
        let src = self.real(x)?;
        let values = src.iter().map(|v| v.clamp(lo, hi)).collect();
        let deriv = src.iter().map(|&v| if (lo..=hi).contains(&v) { 1.0 } else { 0.0 }).collect();
        self.map(x, values, deriv)
    }

    pub fn to_complex(&mut self, x: Var) -> Result<Var, GradError> {
        let y = self.real(x)?.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        self.push(Op::ToComplex { x }, Value::Complex(y))
    }

    pub fn real_part(&mut self, x: Var) -> Result<Var, GradError> {
        let y = self.complex(x)?.iter().map(|z| z.re).collect();
        self.push(Op::RealPart { x }, Value::Real(y))
    }

    /// Elementwise product with a constant complex sequence.
    pub fn mul_const(&mut self, x: Var, factor: Arc<[Complex64]>) -> Result<Var, GradError> {
        let y: Vec<Complex64> = match self.value(x) {
            Value::Complex(v) => {
                check_len("mul_const", v.len(), factor.len())?;
                v.iter().zip(factor.iter()).map(|(a, b)| a * b).collect()
            }
            Value::Real(v) => {
                check_len("mul_const", v.len(), factor.len())?;
                v.iter().zip(factor.iter()).map(|(a, b)| b * a).collect()
            }
        };
        self.push(Op::MulConst { x, factor }, Value::Complex(y))
    }

    pub fn sum(&mut self, xs: &[Var]) -> Result<Var, GradError> {
        let first = xs.first().ok_or(GradError::Shape { op: "sum", detail: "no inputs".into() })?;
        let mut acc = self.value(*first).clone();
        for x in &xs[1..] {
            let v = self.value(*x);
            check_len("sum", acc.len(), v.len())?;
            if let (Value::Real(_), Value::Complex(c)) = (&acc, v) {
                let promoted = match &acc {
                    Value::Real(r) => r.iter().zip(c).map(|(a, b)| b + a).collect(),
                    Value::Complex(_) => unreachable!(),
                };
                acc = Value::Complex(promoted);
            } else {
                acc.add_assign(v);
            }
        }
        self.push(Op::Sum { xs: xs.to_vec() }, acc)
    }

    /// Squared magnitude of a complex (or real) signal.
    pub fn abs_sq(&mut self, x: Var) -> Result<Var, GradError> {
        let y = match self.value(x) {
            Value::Complex(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            Value::Real(v) => v.iter().map(|a| a * a).collect(),
        };
        self.push(Op::AbsSq { x }, Value::Real(y))
    }

    /// Rescale a real signal so its mean power equals `target`.
    pub fn power_normalize(&mut self, x: Var, target: f64) -> Result<Var, GradError> {
        let src = self.real(x)?;
        let mean_sq = src.iter().map(|a| a * a).sum::<f64>() / src.len().max(1) as f64;
        if !(mean_sq > 0.0) {
            return Err(GradError::ZeroPower("power_normalize"));
        }
        let scale = (target / mean_sq).sqrt();
        let y = src.iter().map(|a| a * scale).collect();
        self.push(Op::PowerNormalize { x, scale, mean_sq }, Value::Real(y))
    }

    /// Subtract the block mean.
    pub fn center_mean(&mut self, x: Var) -> Result<Var, GradError> {
        let src = self.real(x)?;
        let mean = src.iter().sum::<f64>() / src.len().max(1) as f64;
        let y = src.iter().map(|a| a - mean).collect();
        self.push(Op::CenterMean { x }, Value::Real(y))
    }

    /// Second-order Volterra filter; `k2` holds the upper triangle
    /// (row-major, `i ≤ j`) of an `n2 × n2` symmetric kernel.
    pub fn volterra(&mut self, x: Var, k1: Var, k2: Var, n2: usize) -> Result<Var, GradError> {
        let k2_len = self.len_of(k2);
        if k2_len != n2 * (n2 + 1) / 2 {
            return Err(GradError::Shape {
                op: "volterra",
                detail: format!("k2 length {k2_len} does not match n2 = {n2}"),
            });
        }
        let y = crate::equalizer::volterra_forward(self.real(x)?, self.real(k1)?, self.real(k2)?, n2);
        self.push(Op::Volterra { x, k1, k2, n2 }, Value::Real(y))
    }

    /// Mean squared error against a constant target.
    pub fn mse(&mut self, x: Var, target: Arc<[f64]>) -> Result<Var, GradError> {
        let src = self.real(x)?;
        check_len("mse", src.len(), target.len())?;
        if src.is_empty() {
            return Err(GradError::Shape { op: "mse", detail: "empty input".into() });
        }
        let loss = src.iter().zip(target.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            / src.len() as f64;
        self.push(Op::Mse { x, target }, Value::Real(vec![loss]))
    }

    /// Scalar mean of a real signal.
    pub fn mean(&mut self, x: Var) -> Result<Var, GradError> {
        let src = self.real(x)?;
        if src.is_empty() {
            return Err(GradError::Shape { op: "mean", detail: "empty input".into() });
        }
        let m = src.iter().sum::<f64>() / src.len() as f64;
        self.push(Op::Mean { x }, Value::Real(vec![m]))
    }

    /// Real inner product `⟨a, b⟩`.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        let (va, vb) = (self.real(a)?, self.real(b)?);
        check_len("dot", va.len(), vb.len())?;
        let s = va.iter().zip(vb).map(|(x, y)| x * y).sum();
        self.push(Op::Dot { a, b }, Value::Real(vec![s]))
    }

    /// Reverse sweep from a scalar `loss`, consuming the tape.
    pub fn backward(self, loss: Var) -> Result<Gradients, GradError> {
        let n_loss = self.len_of(loss);
        if n_loss != 1 || matches!(self.value(loss), Value::Complex(_)) {
            return Err(GradError::NonScalarLoss(loss.0, n_loss));
        }
        let mut adj: Vec<Option<Value>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(Value::Real(vec![1.0]));
        let mut grads = Gradients::default();

        for index in (0..=loss.0).rev() {
            let Some(g) = adj[index].take() else { continue };
            let node = &self.nodes[index];
            if !g.is_finite() {
                return Err(GradError::NonFiniteAdjoint { index, op: op_label(node) });
            }
            let mut out: Vec<(Var, Value)> = Vec::with_capacity(3);
            let mut send = |to: Var, v: Value| out.push((to, v));
            match &node.op {
                Op::Constant => {}
                Op::Param => {
                    grads.by_param.insert(Var(index), real_of(g));
                }
                Op::Fir { x, h } => {
                    let gy = real_of(g);
                    let xv = self.real(*x)?;
                    let hv = self.real(*h)?;
                    send(*x, Value::Real(crate::dsp::fir::convolve_same_adjoint(&gy, hv)));
                    send(*h, Value::Real(crate::dsp::fir::taps_adjoint(&gy, xv, hv.len())));
                }
                Op::Spectral { x, response } => {
                    let conj: Vec<Complex64> = response.iter().map(|z| z.conj()).collect();
                    let back = match g {
                        Value::Real(gy) => Value::Real(spectral::filter_real(&gy, &conj)),
                        Value::Complex(gy) => Value::Complex(spectral::filter_complex(&gy, &conj)),
                    };
                    send(*x, back);
                }
                Op::Gather { x, start, step } => {
                    let gy = real_of(g);
                    let mut gx = vec![0.0; self.len_of(*x)];
                    for (k, v) in gy.iter().enumerate() {
                        gx[start + k * step] += v;
                    }
                    send(*x, Value::Real(gx));
                }
                Op::ScaleBy { x, k } => {
                    let kv = self.scalar(*k)?;
                    let (gx, gk) = match (&g, self.value(*x)) {
                        (Value::Real(gy), Value::Real(xv)) => (
                            Value::Real(gy.iter().map(|a| a * kv).collect()),
                            gy.iter().zip(xv).map(|(a, b)| a * b).sum::<f64>(),
                        ),
                        (Value::Complex(gy), Value::Complex(xv)) => (
                            Value::Complex(gy.iter().map(|a| a * kv).collect()),
                            gy.iter().zip(xv).map(|(a, b)| (b.conj() * a).re).sum::<f64>(),
                        ),
                        _ => return Err(GradError::Kind { op: "scale_by", expected: "matching" }),
                    };
                    send(*x, gx);
                    send(*k, Value::Real(vec![gk]));
                }
                Op::ScaleConst { x, k } => {
                    let back = match g {
                        Value::Real(gy) => Value::Real(gy.iter().map(|a| a * k).collect()),
                        Value::Complex(gy) => Value::Complex(gy.iter().map(|a| a * k).collect()),
                    };
                    send(*x, back);
                }
                Op::Offset { x, b } => {
                    let gy = real_of(g);
                    let gb = gy.iter().sum::<f64>();
                    send(*b, Value::Real(vec![gb]));
                    send(*x, Value::Real(gy));
                }
                Op::AddConst { x } => send(*x, g),
                Op::Map { x, deriv } => {
                    let gy = real_of(g);
                    let gx = gy.iter().zip(deriv).map(|(a, d)| if *a == 0.0 { 0.0 } else { a * d });
                    send(*x, Value::Real(gx.collect()));
                }
                Op::MapToComplex { x, deriv } => {
                    let gy = complex_of(g);
                    let gx = gy.iter().zip(deriv).map(|(a, d)| (d.conj() * a).re).collect();
                    send(*x, Value::Real(gx));
                }
                Op::ToComplex { x } => {
                    send(*x, Value::Real(complex_of(g).iter().map(|z| z.re).collect()))
                }
                Op::RealPart { x } => send(*x, Value::Complex(complex_of(g))),
                Op::MulConst { x, factor } => {
                    let gy = complex_of(g);
                    let back: Vec<Complex64> =
                        gy.iter().zip(factor.iter()).map(|(a, c)| c.conj() * a).collect();
                    let back = match self.value(*x) {
                        Value::Real(_) => Value::Real(back.iter().map(|z| z.re).collect()),
                        Value::Complex(_) => Value::Complex(back),
                    };
                    send(*x, back);
                }
                Op::Sum { xs } => {
                    for x in xs {
                        let back = match (&g, self.value(*x)) {
                            (Value::Complex(c), Value::Real(_)) => Value::Real(c.iter().map(|z| z.re).collect()),
                            _ => g.clone(),
                        };
                        send(*x, back);
                    }
                }
                Op::Mean { x } => {
                    let gl = real_of(g)[0];
                    let n = self.len_of(*x);
                    send(*x, Value::Real(vec![gl / n as f64; n]));
                }
                Op::AbsSq { x } => {
                    let gy = real_of(g);
                    let back = match self.value(*x) {
                        Value::Complex(v) => {
                            Value::Complex(v.iter().zip(&gy).map(|(e, a)| e * (2.0 * a)).collect())
                        }
                        Value::Real(v) => Value::Real(v.iter().zip(&gy).map(|(e, a)| 2.0 * e * a).collect()),
                    };
                    send(*x, back);
                }
                Op::PowerNormalize { x, scale, mean_sq } => {
                    let gy = real_of(g);
                    let xv = self.real(*x)?;
                    let n = xv.len() as f64;
                    let proj = gy.iter().zip(xv).map(|(a, b)| a * b).sum::<f64>();
                    let coef = scale * proj / (mean_sq * n);
                    let gx = gy.iter().zip(xv).map(|(a, b)| scale * a - coef * b).collect();
                    send(*x, Value::Real(gx));
                }
                Op::CenterMean { x } => {
                    let gy = real_of(g);
                    let mean = gy.iter().sum::<f64>() / gy.len().max(1) as f64;
                    send(*x, Value::Real(gy.iter().map(|a| a - mean).collect()));
                }
                Op::Volterra { x, k1, k2, n2 } => {
                    let gy = real_of(g);
                    let (gx, gk1, gk2) = crate::equalizer::volterra_adjoint(
                        &gy,
                        self.real(*x)?,
                        self.real(*k1)?,
                        self.real(*k2)?,
                        *n2,
                    );
                    send(*x, Value::Real(gx));
                    send(*k1, Value::Real(gk1));
                    send(*k2, Value::Real(gk2));
                }
                Op::Mse { x, target } => {
                    let gl = real_of(g)[0];
                    let xv = self.real(*x)?;
                    let n = xv.len() as f64;
                    let gx = xv.iter().zip(target.iter()).map(|(a, b)| 2.0 * gl * (a - b) / n).collect();
                    send(*x, Value::Real(gx));
                }
                Op::Dot { a, b } => {
                    let gl = real_of(g)[0];
                    let va: Vec<f64> = self.real(*a)?.iter().map(|v| v * gl).collect();
                    let vb: Vec<f64> = self.real(*b)?.iter().map(|v| v * gl).collect();
                    send(*a, Value::Real(vb));
                    send(*b, Value::Real(va));
                }
            }
            for (to, v) in out {
                if !v.is_finite() {
                    return Err(GradError::NonFiniteAdjoint { index, op: op_label(node) });
                }
                match &mut adj[to.0] {
                    Some(acc) => acc.add_assign(&v),
                    slot @ None => {
                        let mut z = self.nodes[to.0].value.zeros_like();
                        z.add_assign(&v);
                        *slot = Some(z);
                    }
                }
            }
        }
        Ok(grads)
    }
}

fn op_label(node: &Node) -> &'static str {
    if node.label.is_empty() {
        node.op.name()
    } else {
        node.label
    }
}

fn check_len(op: &'static str, a: usize, b: usize) -> Result<(), GradError> {
    if a == b {
        Ok(())
    } else {
        Err(GradError::Shape { op, detail: format!("lengths {a} and {b} differ") })
    }
}

fn real_of(v: Value) -> Vec<f64> {
    match v {
        Value::Real(r) => r,
        Value::Complex(c) => c.into_iter().map(|z| z.re).collect(),
    }
}

fn complex_of(v: Value) -> Vec<Complex64> {
    match v {
        Value::Complex(c) => c,
        Value::Real(r) => r.into_iter().map(|a| Complex64::new(a, 0.0)).collect(),
    }
}

/// Compare reverse-mode gradients against central differences.
///
/// `build` records a scalar computation on a fresh tape given the
/// parameter leaf; it is called once for the analytic gradient and twice
/// per coordinate for the numeric one. Any randomness inside `build` must
/// be frozen. Returns `max_i |g_ad − g_fd| / (|g_fd| + 1e-12)`.
pub fn finite_diff_check<F>(build: F, point: &[f64], eps: f64) -> Result<f64, GradError>
where
    F: Fn(&mut Tape, Var) -> Result<Var, GradError>,
{
    let mut tape = Tape::new();
    let p = tape.param(point);
    let loss = build(&mut tape, p)?;
    let analytic = tape.backward(loss)?.get_or_zero(p, point.len());

    let eval = |x: &[f64]| -> Result<f64, GradError> {
        let mut tape = Tape::new();
        let p = tape.param(x);
        let loss = build(&mut tape, p)?;
        let v = tape.scalar(loss)?;
        if v.is_nan() {
            return Err(GradError::NonFiniteValue { index: loss.0, op: "finite_diff_check" });
        }
        Ok(v)
    };

    let mut worst = 0.0_f64;
    let mut probe = point.to_vec();
    for i in 0..point.len() {
        probe[i] = point[i] + eps;
        let up = eval(&probe)?;
        probe[i] = point[i] - eps;
        let down = eval(&probe)?;
        probe[i] = point[i];
        let numeric = (up - down) / (2.0 * eps);
        let rel = (analytic[i] - numeric).abs() / (numeric.abs() + 1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}
