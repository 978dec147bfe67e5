//! Reverse-mode automatic differentiation on a flat tape.
//!
//! Every value is a `Vec<f64>`; scalars are length-1 vectors. A forward pass
//! appends nodes to the tape, `backward` walks it in reverse and accumulates
//! gradients. Tapes are cheap and short-lived: one per loss evaluation (or
//! per inference query, in which case `backward` is simply never called).
//!
//! The op set is exactly what the encoder, the event plug-in, and the losses
//! need; gradients are checked against central finite differences in the
//! test suite and again in the acceptance gradient suite.

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Scale(usize, f64),
    Offset(usize),
    MatVec { w: usize, x: usize, rows: usize, cols: usize },
    Dot(usize, usize),
    Sum(usize),
    Concat(Vec<usize>),
    Slice { src: usize, start: usize },
    Softmax(usize),
    Exp(usize),
    Ln(usize),
    Sqrt(usize),
    Tanh(usize),
    ScaleByScalar { v: usize, s: usize },
    CosSinTime { omega: usize, t: f64 },
}

struct Node {
    value: Vec<f64>,
    op: Op,
}

/// Gradients of one scalar root with respect to every tape node.
pub struct Gradients {
    g: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn wrt(&self, v: Var) -> &[f64] {
        &self.g[v.0]
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
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

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        debug_assert_eq!(self.nodes[v.0].value.len(), 1);
        self.nodes[v.0].value[0]
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Introduce a value the tape treats as an independent input. Gradients
    /// are accumulated for it like any node; whether they are read is up to
    /// the caller (parameters are, constants are not).
    pub fn leaf(&mut self, value: impl Into<Vec<f64>>) -> Var {
        self.push(value.into(), Op::Leaf)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = zip_with(self.value(a), self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = zip_with(self.value(a), self.value(b), |x, y| x - y);
        self.push(v, Op::Sub(a.0, b.0))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = zip_with(self.value(a), self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a.0, b.0))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let v = zip_with(self.value(a), self.value(b), |x, y| x / y);
        self.push(v, Op::Div(a.0, b.0))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let v = self.value(a).iter().map(|x| x * k).collect();
        self.push(v, Op::Scale(a.0, k))
    }

    pub fn offset(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).iter().map(|x| x + c).collect();
        self.push(v, Op::Offset(a.0))
    }

    /// `w` is a row-major `rows x cols` matrix stored flat; returns `w * x`.
    pub fn matvec(&mut self, w: Var, x: Var, rows: usize, cols: usize) -> Var {
        assert_eq!(self.value(w).len(), rows * cols, "matvec: bad matrix len");
        assert_eq!(self.value(x).len(), cols, "matvec: bad vector len");
        let mut out = vec![0.0; rows];
        {
            let wv = self.value(w);
            let xv = self.value(x);
            for (i, o) in out.iter_mut().enumerate() {
                let row = &wv[i * cols..(i + 1) * cols];
                *o = row.iter().zip(xv).map(|(a, b)| a * b).sum();
            }
        }
        self.push(out, Op::MatVec { w: w.0, x: x.0, rows, cols })
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let s: f64 = zip_with(self.value(a), self.value(b), |x, y| x * y).iter().sum();
        self.push(vec![s], Op::Dot(a.0, b.0))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s: f64 = self.value(a).iter().sum();
        self.push(vec![s], Op::Sum(a.0))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut v = Vec::new();
        for p in parts {
            v.extend_from_slice(self.value(*p));
        }
        self.push(v, Op::Concat(parts.iter().map(|p| p.0).collect()))
    }

    pub fn slice(&mut self, src: Var, start: usize, len: usize) -> Var {
        let v = self.value(src)[start..start + len].to_vec();
        self.push(v, Op::Slice { src: src.0, start })
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
        let z: f64 = e.iter().sum();
        let v = e.iter().map(|v| v / z).collect();
        self.push(v, Op::Softmax(a.0))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| x.exp()).collect();
        self.push(v, Op::Exp(a.0))
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| x.ln()).collect();
        self.push(v, Op::Ln(a.0))
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| x.sqrt()).collect();
        self.push(v, Op::Sqrt(a.0))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| x.tanh()).collect();
        self.push(v, Op::Tanh(a.0))
    }

    /// Vector `v` scaled by the length-1 var `s`.
    pub fn scale_by_scalar(&mut self, v: Var, s: Var) -> Var {
        assert_eq!(self.value(s).len(), 1, "scale_by_scalar: scalar expected");
        let k = self.value(s)[0];
        let out = self.value(v).iter().map(|x| x * k).collect();
        self.push(out, Op::ScaleByScalar { v: v.0, s: s.0 })
    }

    /// Bochner-style time features: for `omega` of length m and scalar time
    /// `t`, the output has length d = 2m with
    /// `out[2i] = cos(omega_i t)/sqrt(d)` and `out[2i+1] = sin(omega_i t)/sqrt(d)`.
    pub fn cos_sin_time(&mut self, omega: Var, t: f64) -> Var {
        let om = self.value(omega);
        let d = 2 * om.len();
        let norm = 1.0 / (d as f64).sqrt();
        let mut out = Vec::with_capacity(d);
        for w in om {
            let a = w * t;
            out.push(a.cos() * norm);
            out.push(a.sin() * norm);
        }
        self.push(out, Op::CosSinTime { omega: omega.0, t })
    }

    /// Mean of a vector as a length-1 var.
    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len().max(1);
        let s = self.sum(a);
        self.scale(s, 1.0 / n as f64)
    }

    /// Cosine similarity with the `+eps` norm guard on each factor.
    pub fn cosine_sim(&mut self, a: Var, b: Var, eps: f64) -> Var {
        let num = self.dot(a, b);
        let aa = self.dot(a, a);
        let bb = self.dot(b, b);
        let na = self.sqrt(aa);
        let nb = self.sqrt(bb);
        let na = self.offset(na, eps);
        let nb = self.offset(nb, eps);
        let den = self.mul(na, nb);
        self.div(num, den)
    }

    /// Reverse pass from a scalar root. Consumes nothing; the tape can keep
    /// growing afterwards, but gradients refer to the state at call time.
    pub fn backward(&mut self, root: Var) -> Gradients {
        assert_eq!(self.value(root).len(), 1, "backward root must be scalar");
        let mut g: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.value.len()])
            .collect();
        g[root.0][0] = 1.0;

        for i in (0..=root.0).rev() {
            // Take this node's gradient out to appease the borrow checker.
            let gi = std::mem::take(&mut g[i]);
            if gi.iter().all(|v| *v == 0.0) {
                g[i] = gi;
                continue;
            }
            match &self.nodes[i].op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    let (a, b) = (*a, *b);
                    for (j, gv) in gi.iter().enumerate() {
                        g[a][j] += gv;
                    }
                    for (j, gv) in gi.iter().enumerate() {
                        g[b][j] += gv;
                    }
                }
                Op::Sub(a, b) => {
                    let (a, b) = (*a, *b);
                    for (j, gv) in gi.iter().enumerate() {
                        g[a][j] += gv;
                    }
                    for (j, gv) in gi.iter().enumerate() {
                        g[b][j] -= gv;
                    }
                }
                Op::Mul(a, b) => {
                    let (a, b) = (*a, *b);
                    let av = self.nodes[a].value.clone();
                    let bv = self.nodes[b].value.clone();
                    for (k, gv) in gi.iter().enumerate() {
                        g[a][k] += gv * bv[k];
                        g[b][k] += gv * av[k];
                    }
                }
                Op::Div(a, b) => {
                    let (a, b) = (*a, *b);
                    let av = self.nodes[a].value.clone();
                    let bv = self.nodes[b].value.clone();
                    for (k, gv) in gi.iter().enumerate() {
                        g[a][k] += gv / bv[k];
                        g[b][k] -= gv * av[k] / (bv[k] * bv[k]);
                    }
                }
                Op::Scale(a, k) => {
                    let (a, k) = (*a, *k);
                    for (j, gv) in gi.iter().enumerate() {
                        g[a][j] += gv * k;
                    }
                }
                Op::Offset(a) => {
                    let a = *a;
                    for (j, gv) in gi.iter().enumerate() {
                        g[a][j] += gv;
                    }
                }
                Op::MatVec { w, x, rows, cols } => {
                    let (w, x, rows, cols) = (*w, *x, *rows, *cols);
                    let wv = self.nodes[w].value.clone();
                    let xv = self.nodes[x].value.clone();
                    for i_r in 0..rows {
                        let gv = gi[i_r];
                        if gv == 0.0 {
                            continue;
                        }
                        for j in 0..cols {
                            g[w][i_r * cols + j] += gv * xv[j];
                            g[x][j] += gv * wv[i_r * cols + j];
                        }
                    }
                }
                Op::Dot(a, b) => {
                    let (a, b) = (*a, *b);
                    let av = self.nodes[a].value.clone();
                    let bv = self.nodes[b].value.clone();
                    let gv = gi[0];
                    for j in 0..av.len() {
                        g[a][j] += gv * bv[j];
                        g[b][j] += gv * av[j];
                    }
                }
                Op::Sum(a) => {
                    let a = *a;
                    let gv = gi[0];
                    for v in g[a].iter_mut() {
                        *v += gv;
                    }
                }
                Op::Concat(parts) => {
                    let parts = parts.clone();
                    let mut off = 0;
                    for p in parts {
                        let len = self.nodes[p].value.len();
                        for j in 0..len {
                            g[p][j] += gi[off + j];
                        }
                        off += len;
                    }
                }
                Op::Slice { src, start } => {
                    let (src, start) = (*src, *start);
                    for (j, gv) in gi.iter().enumerate() {
                        g[src][start + j] += gv;
                    }
                }
                Op::Softmax(a) => {
                    let a = *a;
                    let y = self.nodes[i].value.clone();
                    let dot: f64 = gi.iter().zip(&y).map(|(gv, yv)| gv * yv).sum();
                    for (j, yv) in y.iter().enumerate() {
                        g[a][j] += yv * (gi[j] - dot);
                    }
                }
                Op::Exp(a) => {
                    let a = *a;
                    let y = self.nodes[i].value.clone();
                    for (j, gv) in gi.iter().enumerate() {
                        g[a][j] += gv * y[j];
                    }
                }
                Op::Ln(a) => {
                    let a = *a;
                    let xv = self.nodes[a].value.clone();
                    for (j, gv) in gi.iter().enumerate() {
                        g[a][j] += gv / xv[j];
                    }
                }
                Op::Sqrt(a) => {
                    let a = *a;
                    let y = self.nodes[i].value.clone();
                    for (j, gv) in gi.iter().enumerate() {
                        g[a][j] += gv / (2.0 * y[j]);
                    }
                }
                Op::Tanh(a) => {
                    let a = *a;
                    let y = self.nodes[i].value.clone();
                    for (j, gv) in gi.iter().enumerate() {
                        g[a][j] += gv * (1.0 - y[j] * y[j]);
                    }
                }
                Op::ScaleByScalar { v, s } => {
                    let (v, s) = (*v, *s);
                    let sv = self.nodes[s].value[0];
                    let vv = self.nodes[v].value.clone();
                    let mut ds = 0.0;
                    for (j, gv) in gi.iter().enumerate() {
                        g[v][j] += gv * sv;
                        ds += gv * vv[j];
                    }
                    g[s][0] += ds;
                }
                Op::CosSinTime { omega, t } => {
                    let (omega, t) = (*omega, *t);
                    let om = self.nodes[omega].value.clone();
                    let d = 2 * om.len();
                    let norm = 1.0 / (d as f64).sqrt();
                    for (k, w) in om.iter().enumerate() {
                        let a = w * t;
                        g[omega][k] +=
                            t * norm * (-a.sin() * gi[2 * k] + a.cos() * gi[2 * k + 1]);
                    }
                }
            }
            g[i] = gi;
        }
        Gradients { g }
    }
}

fn zip_with(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "elementwise op on mismatched lengths");
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

/// Relative error used by all gradient checks: |a-n| / max(|a|+|n|, floor).
pub fn grad_rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Central finite differences of `f` w.r.t. each entry of `theta`.
pub fn finite_diff(theta: &mut [f64], mut f: impl FnMut(&[f64]) -> f64, h: f64) -> Vec<f64> {
    let mut out = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let orig = theta[i];
        let step = h * orig.abs().max(1.0);
        theta[i] = orig + step;
        let fp = f(theta);
        theta[i] = orig - step;
        let fm = f(theta);
        theta[i] = orig;
        out[i] = (fp - fm) / (2.0 * step);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect()
    }

    /// A scalar function stressing most ops at once, evaluated on the tape.
    fn probe(theta: &[f64]) -> f64 {
        // theta: [ w(6) | x(3) | y(2) | omega(2) | lam(1) ]
        let mut t = Tape::new();
        let w = t.leaf(&theta[0..6]);
        let x = t.leaf(&theta[6..9]);
        let y = t.leaf(&theta[9..11]);
        let om = t.leaf(&theta[11..13]);
        let lam = t.leaf(&theta[13..14]);

        let mv = t.matvec(w, x, 2, 3); // 2-vec
        let th = t.tanh(mv);
        let sm = t.softmax(th);
        let c = t.cosine_sim(sm, y, 1e-12);
        let te = t.cos_sin_time(om, 0.7); // 4-vec
        let s1 = t.slice(te, 1, 2);
        let d = t.dot(s1, y);
        let neg = t.scale(lam, -0.9);
        let decay = t.exp(neg);
        let scaled = t.scale_by_scalar(y, decay);
        let ssum = t.sum(scaled);
        let part = t.concat(&[c, d, ssum]);
        let q = t.mul(part, part);
        let sq = t.sqrt(q);
        let ln_in = t.offset(sq, 1.3);
        let l = t.ln(ln_in);
        let total = t.sum(l);
        t.scalar(total)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let mut theta = rand_vec(&mut rng, 14);
            theta[13] = theta[13].abs() + 0.2; // keep lambda positive

            // Analytic pass.
            let mut t = Tape::new();
            let w = t.leaf(&theta[0..6]);
            let x = t.leaf(&theta[6..9]);
            let y = t.leaf(&theta[9..11]);
            let om = t.leaf(&theta[11..13]);
            let lam = t.leaf(&theta[13..14]);
            let mv = t.matvec(w, x, 2, 3);
            let th = t.tanh(mv);
            let sm = t.softmax(th);
            let c = t.cosine_sim(sm, y, 1e-12);
            let te = t.cos_sin_time(om, 0.7);
            let s1 = t.slice(te, 1, 2);
            let d = t.dot(s1, y);
            let neg = t.scale(lam, -0.9);
            let decay = t.exp(neg);
            let scaled = t.scale_by_scalar(y, decay);
            let ssum = t.sum(scaled);
            let part = t.concat(&[c, d, ssum]);
            let q = t.mul(part, part);
            let sq = t.sqrt(q);
            let ln_in = t.offset(sq, 1.3);
            let l = t.ln(ln_in);
            let total = t.sum(l);
            let grads = t.backward(total);

            let analytic: Vec<f64> = [
                grads.wrt(w),
                grads.wrt(x),
                grads.wrt(y),
                grads.wrt(om),
                grads.wrt(lam),
            ]
            .concat();

            let numeric = finite_diff(&mut theta, probe, 1e-6);
            for (a, n) in analytic.iter().zip(&numeric) {
                assert!(
                    grad_rel_err(*a, *n) < 1e-6,
                    "analytic {a} vs numeric {n}"
                );
            }
        }
    }

    #[test]
    fn softmax_is_a_distribution() {
        let mut t = Tape::new();
        let x = t.leaf(vec![3.0, -1.0, 0.5, 900.0]);
        let s = t.softmax(x);
        let v = t.value(s);
        assert!(v.iter().all(|p| *p >= 0.0));
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matvec_matches_manual_product() {
        let mut t = Tape::new();
        let w = t.leaf(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = t.leaf(vec![1.0, -1.0, 2.0]);
        let y = t.matvec(w, x, 2, 3);
        assert_eq!(t.value(y), &[5.0, 11.0]);
    }

    #[test]
    fn div_and_cosine_basics() {
        let mut t = Tape::new();
        let a = t.leaf(vec![1.0, 0.0]);
        let b = t.leaf(vec![1.0, 0.0]);
        let c = t.cosine_sim(a, b, 0.0);
        assert!((t.scalar(c) - 1.0).abs() < 1e-12);
        let d = t.leaf(vec![0.0, 1.0]);
        let c2 = t.cosine_sim(a, d, 0.0);
        assert!(t.scalar(c2).abs() < 1e-12);
    }
}
