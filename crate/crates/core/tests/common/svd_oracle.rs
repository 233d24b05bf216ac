//! Singular values of an explicitly multiplied V_t in arbitrary precision.
//!
//! Every step matrix M_t U_t is built from the f64 gate entries and Kraus
//! diagonals, multiplied exactly at `precision` bits, and the product is
//! diagonalized by one-sided Jacobi, which keeps small singular values
//! accurate relative to their own size.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use monitored_core::channel::{KrausPair, StepOperator, TrajectoryRecord};

type F = FBig<HalfEven, 2>;

#[derive(Clone)]
struct Cx {
    re: F,
    im: F,
}

struct Ctx {
    precision: usize,
}

impl Ctx {
    fn real(&self, x: f64) -> F {
        F::try_from(x).unwrap().with_precision(self.precision).value()
    }

    fn zero(&self) -> Cx {
        Cx { re: self.real(0.0), im: self.real(0.0) }
    }

    fn cx(&self, re: f64, im: f64) -> Cx {
        Cx { re: self.real(re), im: self.real(im) }
    }
}

fn mul(a: &Cx, b: &Cx) -> Cx {
    Cx { re: &a.re * &b.re - &a.im * &b.im, im: &a.re * &b.im + &a.im * &b.re }
}

fn add(a: &Cx, b: &Cx) -> Cx {
    Cx { re: &a.re + &b.re, im: &a.im + &b.im }
}

fn bit(x: usize, site: usize, l: usize) -> usize {
    (x >> (l - 1 - site)) & 1
}

/// Row-major V_t = S_t ⋯ S_1 with S_t = M_t U_t.
fn product(record: &TrajectoryRecord, ctx: &Ctx) -> Vec<Cx> {
    let l = record.num_qubits;
    let n = 1usize << l;
    let kraus = KrausPair::new(record.eta).unwrap();
    let mut v: Vec<Cx> = (0..n * n).map(|k| if k / n == k % n { ctx.cx(1.0, 0.0) } else { ctx.zero() }).collect();
    for step in &record.steps {
        let op = StepOperator::from_record(l, &kraus, step);
        for g in &op.gates {
            let gate: Vec<Cx> = g.gate.iter().map(|z| ctx.cx(z.re, z.im)).collect();
            let (s0, s1) = (g.left, g.left + 1);
            let mut next = vec![ctx.zero(); n * n];
            for x in 0..n {
                let row = 2 * bit(x, s0, l) + bit(x, s1, l);
                let rest = x & !((1 << (l - 1 - s0)) | (1 << (l - 1 - s1)));
                for col in 0..4 {
                    let y = rest | ((col >> 1) << (l - 1 - s0)) | ((col & 1) << (l - 1 - s1));
                    let u = &gate[4 * row + col];
                    for k in 0..n {
                        next[x * n + k] = add(&next[x * n + k], &mul(u, &v[y * n + k]));
                    }
                }
            }
            v = next;
        }
        for (x, &d) in op.diagonal().iter().enumerate() {
            let d = ctx.real(d);
            for k in 0..n {
                let z = &mut v[x * n + k];
                z.re = &z.re * &d;
                z.im = &z.im * &d;
            }
        }
    }
    v
}

/// ln σ_i of the recorded V_t, ascending in σ.
pub fn log_singular_values(record: &TrajectoryRecord, precision: usize) -> Vec<f64> {
    let ctx = Ctx { precision };
    let n = 1usize << record.num_qubits;
    let v = product(record, &ctx);
    let mut cols: Vec<Vec<Cx>> = (0..n).map(|k| (0..n).map(|x| v[x * n + k].clone()).collect()).collect();
    let tol = ctx.real(2f64.powi(-(precision as i32) + 16));
    let one = ctx.real(1.0);
    let two = ctx.real(2.0);
    let norm2 = |c: &[Cx]| c.iter().fold(ctx.real(0.0), |s, z| s + &z.re * &z.re + &z.im * &z.im);
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = norm2(&cols[i]);
                let beta = norm2(&cols[j]);
                // γ = c_i† c_j
                let mut g = ctx.zero();
                for (a, b) in cols[i].iter().zip(&cols[j]) {
                    let ac = Cx { re: a.re.clone(), im: -a.im.clone() };
                    g = add(&g, &mul(&ac, b));
                }
                let gabs = (&g.re * &g.re + &g.im * &g.im).sqrt();
                if gabs <= &tol * (&alpha * &beta).sqrt() || gabs == ctx.real(0.0) {
                    continue;
                }
                rotated = true;
                // c_j ← c_j · conj(γ)/|γ| makes the overlap real and positive.
                let phase = Cx { re: &g.re / &gabs, im: -(&g.im / &gabs) };
                for z in cols[j].iter_mut() {
                    *z = mul(z, &phase);
                }
                let zeta = (&beta - &alpha) / (&two * &gabs);
                let root = (&one + &zeta * &zeta).sqrt();
                let t = if zeta >= ctx.real(0.0) { &one / (&zeta + &root) } else { -(&one / (-&zeta + &root)) };
                let c = &one / (&one + &t * &t).sqrt();
                let s = &c * &t;
                let (left, right) = cols.split_at_mut(j);
                for (a, b) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let na = Cx { re: &c * &a.re - &s * &b.re, im: &c * &a.im - &s * &b.im };
                    let nb = Cx { re: &s * &a.re + &c * &b.re, im: &s * &a.im + &c * &b.im };
                    *a = na;
                    *b = nb;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut out: Vec<f64> = cols.iter().map(|c| (norm2(c).ln() / &two).to_f64().value()).collect();
    out.sort_by(f64::total_cmp);
    out
}
