//! Reverse-mode differentiation over dense matrices, limited to the
//! operations the classifier needs.

use nalgebra::{DMatrix, DVector};

use crate::spectral::{sigma_pow, sigma_pow_derivative, SnaFactors, SIGMA_DROP_TOL};

/// Negative slope of the leaky rectifier.
pub const LEAKY_SLOPE: f64 = 0.01;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    /// Adds a `1×n` row to every row.
    AddRow(Var, Var),
    /// Multiplies column `c` by entry `c` of a `1×K` row.
    ColScale(Var, Var),
    /// Multiplies by a `1×1` variable.
    ScalarMul(Var, Var),
    Scale(Var, f64),
    LeakyRelu(Var),
    Mask(Var, DMatrix<f64>),
    /// `U diag(σ^α) Vᵀ x` with cached `Vᵀ x`.
    SpectralPower { x: Var, alpha: Var, z: DMatrix<f64>, s: DVector<f64>, ds: DVector<f64> },
    ConcatCols(Var, Var),
    /// Mean cross-entropy over `rows`; caches the softmax probabilities.
    SoftmaxXent { logits: Var, probs: DMatrix<f64>, labels: Vec<usize>, rows: Vec<usize> },
}

#[derive(Debug)]
struct Node {
    value: DMatrix<f64>,
    op: Op,
}

/// Records values and operations for a single forward pass.
#[derive(Debug)]
pub struct Tape<'f> {
    nodes: Vec<Node>,
    factors: Option<&'f SnaFactors>,
}

impl<'f> Default for Tape<'f> {
    fn default() -> Self {
        Self::new()
    }
}

fn leaky(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        LEAKY_SLOPE * v
    }
}

impl<'f> Tape<'f> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), factors: None }
    }

    pub fn with_factors(factors: &'f SnaFactors) -> Self {
        Self { nodes: Vec::new(), factors: Some(factors) }
    }

    fn push(&mut self, value: DMatrix<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &DMatrix<f64> {
        &self.nodes[v.0].value
    }

    pub fn leaf(&mut self, value: DMatrix<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.leaf(DMatrix::from_element(1, 1, value))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(v, Op::Sub(a, b))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let r = self.value(row);
        assert_eq!(r.nrows(), 1);
        let mut v = self.value(a).clone();
        for mut vr in v.row_iter_mut() {
            vr += r;
        }
        self.push(v, Op::AddRow(a, row))
    }

    pub fn col_scale(&mut self, a: Var, row: Var) -> Var {
        let r = self.value(row);
        assert_eq!(r.shape(), (1, self.value(a).ncols()));
        let mut v = self.value(a).clone();
        for (c, mut col) in v.column_iter_mut().enumerate() {
            col *= r[(0, c)];
        }
        self.push(v, Op::ColScale(a, row))
    }

    pub fn scalar_mul(&mut self, a: Var, s: Var) -> Var {
        let v = self.value(a) * self.value(s)[(0, 0)];
        self.push(v, Op::ScalarMul(a, s))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) * c;
        self.push(v, Op::Scale(a, c))
    }

    pub fn leaky_relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(leaky);
        self.push(v, Op::LeakyRelu(a))
    }

    /// Elementwise product with a constant matrix, e.g. a dropout mask.
    pub fn mask(&mut self, a: Var, m: DMatrix<f64>) -> Var {
        let v = self.value(a).component_mul(&m);
        self.push(v, Op::Mask(a, m))
    }

    /// `S^α x` through the factors this tape was created with; `alpha` is a `1×1` variable.
    pub fn spectral_power(&mut self, x: Var, alpha: Var) -> Var {
        let f = self.factors.expect("tape has no spectral factors");
        let a = self.value(alpha)[(0, 0)];
        let drop = SIGMA_DROP_TOL * f.sigma_max();
        let s = f.sigma.map(|sv| sigma_pow(sv, a, drop));
        let ds = f.sigma.map(|sv| sigma_pow_derivative(sv, a, drop));
        let z = f.v.tr_mul(self.value(x));
        let mut sz = z.clone();
        for (mut row, &si) in sz.row_iter_mut().zip(s.iter()) {
            row *= si;
        }
        let y = &f.u * sz;
        self.push(y, Op::SpectralPower { x, alpha, z, s, ds })
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.nrows(), vb.nrows());
        let mut v = DMatrix::zeros(va.nrows(), va.ncols() + vb.ncols());
        v.columns_mut(0, va.ncols()).copy_from(va);
        v.columns_mut(va.ncols(), vb.ncols()).copy_from(vb);
        self.push(v, Op::ConcatCols(a, b))
    }

    /// Mean softmax cross-entropy of `logits` over `rows`.
    pub fn softmax_xent(&mut self, logits: Var, labels: &[usize], rows: &[usize]) -> Var {
        let probs = softmax_rows(self.value(logits));
        let mut loss = 0.0;
        for &r in rows {
            loss -= probs[(r, labels[r])].max(f64::MIN_POSITIVE).ln();
        }
        loss /= rows.len() as f64;
        let op = Op::SoftmaxXent { logits, probs, labels: labels.to_vec(), rows: rows.to_vec() };
        self.push(DMatrix::from_element(1, 1, loss), op)
    }

    /// Gradients of the `1×1` variable `out` with respect to every recorded value.
    pub fn backward(&self, out: Var) -> Vec<Option<DMatrix<f64>>> {
        assert_eq!(self.value(out).shape(), (1, 1));
        let mut grads: Vec<Option<DMatrix<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(DMatrix::from_element(1, 1, 1.0));
        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(&self.nodes[i].op, &g, &mut grads);
            grads[i] = Some(g);
        }
        grads
    }

    fn propagate(&self, op: &Op, g: &DMatrix<f64>, grads: &mut [Option<DMatrix<f64>>]) {
        let mut acc = |v: Var, d: DMatrix<f64>| match &mut grads[v.0] {
            Some(e) => *e += d,
            slot => *slot = Some(d),
        };
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                acc(*a, g * self.value(*b).transpose());
                acc(*b, self.value(*a).tr_mul(g));
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, -g);
            }
            Op::AddRow(a, r) => {
                acc(*a, g.clone());
                acc(*r, row_sums(g));
            }
            Op::ColScale(a, r) => {
                let rv = self.value(*r);
                let mut ga = g.clone();
                for (c, mut col) in ga.column_iter_mut().enumerate() {
                    col *= rv[(0, c)];
                }
                acc(*a, ga);
                acc(*r, row_sums(&g.component_mul(self.value(*a))));
            }
            Op::ScalarMul(a, s) => {
                acc(*a, g * self.value(*s)[(0, 0)]);
                acc(*s, DMatrix::from_element(1, 1, g.dot(self.value(*a))));
            }
            Op::Scale(a, c) => acc(*a, g * *c),
            Op::LeakyRelu(a) => {
                let x = self.value(*a);
                acc(*a, g.zip_map(x, |gi, xi| if xi > 0.0 { gi } else { LEAKY_SLOPE * gi }));
            }
            Op::Mask(a, m) => acc(*a, g.component_mul(m)),
            Op::SpectralPower { x, alpha, z, s, ds } => {
                let f = self.factors.expect("tape has no spectral factors");
                let p = f.u.tr_mul(g);
                let mut sp = p.clone();
                for (mut row, &si) in sp.row_iter_mut().zip(s.iter()) {
                    row *= si;
                }
                acc(*x, &f.v * sp);
                let da: f64 = (0..p.nrows()).map(|i| ds[i] * p.row(i).dot(&z.row(i))).sum();
                acc(*alpha, DMatrix::from_element(1, 1, da));
            }
            Op::ConcatCols(a, b) => {
                let na = self.value(*a).ncols();
                acc(*a, g.columns(0, na).into_owned());
                acc(*b, g.columns(na, g.ncols() - na).into_owned());
            }
            Op::SoftmaxXent { logits, probs, labels, rows } => {
                let scale = g[(0, 0)] / rows.len() as f64;
                let mut d = DMatrix::zeros(probs.nrows(), probs.ncols());
                for &r in rows {
                    for c in 0..probs.ncols() {
                        d[(r, c)] = probs[(r, c)] * scale;
                    }
                    d[(r, labels[r])] -= scale;
                }
                acc(*logits, d);
            }
        }
    }

    /// Signs of every leaky-rectifier input; differences between two passes
    /// mean a finite difference straddled a kink.
    pub fn activation_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        for node in &self.nodes {
            if let Op::LeakyRelu(a) = node.op {
                out.extend(self.value(a).iter().map(|&v| v > 0.0));
            }
        }
        out
    }
}

/// Column sums as a `1×n` matrix.
fn row_sums(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(1, m.ncols(), |_, c| m.column(c).sum())
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = m.clone();
    for mut row in p.row_iter_mut() {
        let mx = row.max();
        row.apply(|v| *v = (*v - mx).exp());
        let s = row.sum();
        row /= s;
    }
    p
}
