//! Neural minimization of the periodic energy gap: a fixed tanh MLP triple
//! composed into a periodicity-enforcing ansatz, differentiated exactly in
//! space by forward tangents and in parameters by a hand-written adjoint,
//! integrated with the trapezoidal rule and trained with Adam.

use crate::energy::EnergyDensity;
use crate::mat2::Mat2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PinnError {
    #[error("persistent infeasibility at iteration {iteration}: {consecutive} consecutive rejected steps")]
    PersistentInfeasibility { iteration: usize, consecutive: usize },
    #[error("infeasible starting parameters: det(F0 + grad theta) <= 0 at node ({0}, {1})")]
    InfeasibleStart(usize, usize),
}

pub const WIDTHS_1D: [usize; 6] = [1, 64, 64, 64, 64, 2];
pub const WIDTHS_2D: [usize; 6] = [2, 64, 64, 64, 64, 2];

/// Dense tanh network with a linear last layer; parameters are stored flat,
/// layer by layer as W (row-major) then b.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub widths: Vec<usize>,
    pub params: Vec<f64>,
}

struct LayerCache {
    a_in: Vec<f64>,
    /// tanh output for hidden layers, raw affine output for the last.
    out: Vec<f64>,
    t_in: Vec<Vec<f64>>,
    /// pre-activation tangents u = W t_in.
    u: Vec<Vec<f64>>,
}

pub struct MlpCache {
    layers: Vec<LayerCache>,
}

/// Four-accumulator dot product; the independent partial sums let the
/// compiler vectorize despite strict floating-point semantics.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() - a.len() % 4;
    let mut acc = [0.0f64; 4];
    for (ca, cb) in a[..n].chunks_exact(4).zip(b[..n].chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let tail: f64 = a[n..].iter().zip(&b[n..]).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `out[j] += c * row[j]`, the transposed-matvec building block.
#[inline]
fn axpy(out: &mut [f64], c: f64, row: &[f64]) {
    for (o, r) in out.iter_mut().zip(row) {
        *o += c * r;
    }
}

impl Mlp {
    pub fn n_params_for(widths: &[usize]) -> usize {
        widths
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    pub fn zeros(widths: &[usize]) -> Self {
        Mlp {
            widths: widths.to_vec(),
            params: vec![0.0; Self::n_params_for(widths)],
        }
    }

    /// Symmetric uniform fan-in initialization; the last layer is scaled by
    /// `final_scale` so the initial field is a small perturbation.
    pub fn init(widths: &[usize], rng: &mut impl Rng, final_scale: f64) -> Self {
        let mut params = Vec::with_capacity(Self::n_params_for(widths));
        let n_layers = widths.len() - 1;
        for l in 0..n_layers {
            let (win, wout) = (widths[l], widths[l + 1]);
            let bound = 1.0 / (win as f64).sqrt();
            let scale = if l == n_layers - 1 { final_scale } else { 1.0 };
            for _ in 0..win * wout + wout {
                params.push(scale * rng.gen_range(-bound..bound));
            }
        }
        Mlp {
            widths: widths.to_vec(),
            params,
        }
    }

    /// Forward pass carrying directional input tangents. Returns the output,
    /// the output tangents, and the cache consumed by `backward`.
    pub fn forward(&self, x: &[f64], tangents: &[&[f64]]) -> (Vec<f64>, Vec<Vec<f64>>, MlpCache) {
        let n_layers = self.widths.len() - 1;
        let mut a = x.to_vec();
        let mut ts: Vec<Vec<f64>> = tangents.iter().map(|t| t.to_vec()).collect();
        let mut layers = Vec::with_capacity(n_layers);
        let mut off = 0;
        for l in 0..n_layers {
            let (win, wout) = (self.widths[l], self.widths[l + 1]);
            let w = &self.params[off..off + win * wout];
            let b = &self.params[off + win * wout..off + win * wout + wout];
            off += win * wout + wout;
            let mut z = vec![0.0; wout];
            for i in 0..wout {
                z[i] = b[i] + dot(&w[i * win..(i + 1) * win], &a);
            }
            let u: Vec<Vec<f64>> = ts
                .iter()
                .map(|t| {
                    (0..wout)
                        .map(|i| dot(&w[i * win..(i + 1) * win], t))
                        .collect()
                })
                .collect();
            if l < n_layers - 1 {
                let s: Vec<f64> = z.iter().map(|v| v.tanh()).collect();
                let t_next: Vec<Vec<f64>> = u
                    .iter()
                    .map(|ud| {
                        ud.iter()
                            .zip(&s)
                            .map(|(uv, sv)| uv * (1.0 - sv * sv))
                            .collect()
                    })
                    .collect();
                layers.push(LayerCache {
                    a_in: std::mem::replace(&mut a, s.clone()),
                    out: s,
                    t_in: std::mem::replace(&mut ts, t_next),
                    u,
                });
            } else {
                layers.push(LayerCache {
                    a_in: std::mem::replace(&mut a, z.clone()),
                    out: z,
                    t_in: std::mem::take(&mut ts),
                    u: u.clone(),
                });
                ts = u;
            }
        }
        (a, ts, MlpCache { layers })
    }

    /// Adjoint of `forward`: accumulates d(y_bar . y + sum_d t_bar_d . t_d)
    /// w.r.t. the parameters into `grad` (same layout as `params`).
    pub fn backward(
        &self,
        cache: &MlpCache,
        y_bar: &[f64],
        t_bars: &[&[f64]],
        grad: &mut [f64],
    ) {
        let n_layers = self.widths.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for l in 0..n_layers {
            offsets.push(off);
            off += self.widths[l] * self.widths[l + 1] + self.widths[l + 1];
        }
        let mut a_bar = y_bar.to_vec();
        let mut t_b: Vec<Vec<f64>> = t_bars.iter().map(|t| t.to_vec()).collect();
        for l in (0..n_layers).rev() {
            let (win, wout) = (self.widths[l], self.widths[l + 1]);
            let lc = &cache.layers[l];
            let (z_bar, u_bars): (Vec<f64>, Vec<Vec<f64>>) = if l == n_layers - 1 {
                (a_bar.clone(), t_b.clone())
            } else {
                let s = &lc.out;
                let mut z_bar = vec![0.0; wout];
                for i in 0..wout {
                    let sp = 1.0 - s[i] * s[i];
                    let mut v = a_bar[i] * sp;
                    for (d, tb) in t_b.iter().enumerate() {
                        v += tb[i] * (-2.0 * s[i] * sp) * lc.u[d][i];
                    }
                    z_bar[i] = v;
                }
                let u_bars = t_b
                    .iter()
                    .map(|tb| {
                        tb.iter()
                            .zip(s)
                            .map(|(tv, sv)| tv * (1.0 - sv * sv))
                            .collect()
                    })
                    .collect();
                (z_bar, u_bars)
            };
            let base = offsets[l];
            let w = &self.params[base..base + win * wout];
            {
                let gw = &mut grad[base..base + win * wout + wout];
                for i in 0..wout {
                    let row = &mut gw[i * win..(i + 1) * win];
                    axpy(row, z_bar[i], &lc.a_in);
                    for (d, ub) in u_bars.iter().enumerate() {
                        axpy(row, ub[i], &lc.t_in[d]);
                    }
                }
                for i in 0..wout {
                    gw[win * wout + i] += z_bar[i];
                }
            }
            let mut a_in_bar = vec![0.0; win];
            for i in 0..wout {
                axpy(&mut a_in_bar, z_bar[i], &w[i * win..(i + 1) * win]);
            }
            a_bar = a_in_bar;
            t_b = u_bars
                .iter()
                .map(|ub| {
                    let mut tb = vec![0.0; win];
                    for i in 0..wout {
                        axpy(&mut tb, ub[i], &w[i * win..(i + 1) * win]);
                    }
                    tb
                })
                .collect();
        }
    }
}

/// Periodic test field on the unit square built from three networks with
/// (1 - cos 2 pi x) envelopes; the field and its Jacobian are exactly
/// 1-periodic in each variable and vanish at the corners.
#[derive(Debug, Clone)]
pub struct PeriodicAnsatz {
    pub f: Mlp,
    pub g: Mlp,
    pub h: Mlp,
}

fn envelope(x: f64) -> (f64, f64) {
    let t = std::f64::consts::TAU * x;
    (1.0 - t.cos(), std::f64::consts::TAU * t.sin())
}

impl PeriodicAnsatz {
    pub fn zeros() -> Self {
        PeriodicAnsatz {
            f: Mlp::zeros(&WIDTHS_1D),
            g: Mlp::zeros(&WIDTHS_1D),
            h: Mlp::zeros(&WIDTHS_2D),
        }
    }

    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PeriodicAnsatz {
            f: Mlp::init(&WIDTHS_1D, &mut rng, 1e-2),
            g: Mlp::init(&WIDTHS_1D, &mut rng, 1e-2),
            h: Mlp::init(&WIDTHS_2D, &mut rng, 1e-2),
        }
    }

    pub fn n_params(&self) -> usize {
        self.f.params.len() + self.g.params.len() + self.h.params.len()
    }

    pub fn params_concat(&self) -> Vec<f64> {
        let mut v = self.f.params.clone();
        v.extend_from_slice(&self.g.params);
        v.extend_from_slice(&self.h.params);
        v
    }

    pub fn set_params(&mut self, v: &[f64]) {
        let (nf, ng) = (self.f.params.len(), self.g.params.len());
        self.f.params.copy_from_slice(&v[..nf]);
        self.g.params.copy_from_slice(&v[nf..nf + ng]);
        self.h.params.copy_from_slice(&v[nf + ng..]);
    }

    /// Field value and exact spatial Jacobian at a point.
    pub fn eval(&self, x: [f64; 2]) -> ([f64; 2], Mat2) {
        let (e1, de1) = envelope(x[0]);
        let (e2, de2) = envelope(x[1]);
        let (fv, ft, _) = self.f.forward(&[x[0]], &[&[1.0]]);
        let (gv, gt, _) = self.g.forward(&[x[1]], &[&[1.0]]);
        let (hv, ht, _) = self.h.forward(&x, &[&[1.0, 0.0], &[0.0, 1.0]]);
        let mut theta = [0.0; 2];
        let mut col1 = [0.0; 2];
        let mut col2 = [0.0; 2];
        for i in 0..2 {
            theta[i] = e1 * fv[i] + e2 * gv[i] + e1 * e2 * hv[i];
            col1[i] = de1 * fv[i] + e1 * ft[0][i] + de1 * e2 * hv[i] + e1 * e2 * ht[0][i];
            col2[i] = de2 * gv[i] + e2 * gt[0][i] + e1 * de2 * hv[i] + e1 * e2 * ht[1][i];
        }
        (theta, Mat2::new(col1[0], col2[0], col1[1], col2[1]))
    }
}

/// Trapezoidal product grid on [0,1]^2; axis weights sum to one.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureGrid {
    pub n: usize,
}

impl QuadratureGrid {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        QuadratureGrid { n }
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / (self.n - 1) as f64
    }

    pub fn weight(&self, i: usize) -> f64 {
        let h = 1.0 / (self.n - 1) as f64;
        if i == 0 || i == self.n - 1 {
            0.5 * h
        } else {
            h
        }
    }
}

struct AxisEval {
    value: Vec<f64>,
    tangent: Vec<f64>,
    cache: MlpCache,
}

fn eval_axis(net: &Mlp, x: f64) -> AxisEval {
    let (value, mut t, cache) = net.forward(&[x], &[&[1.0]]);
    AxisEval {
        value,
        tangent: t.remove(0),
        cache,
    }
}

/// Total quadrature energy; on an infeasible node returns +inf together
/// with the first offending node index.
pub fn total_energy(
    w: &EnergyDensity,
    ansatz: &PeriodicAnsatz,
    f0: Mat2,
    grid: QuadratureGrid,
) -> (f64, Option<(usize, usize)>) {
    let n = grid.n;
    let f_ax: Vec<AxisEval> = (0..n).map(|i| eval_axis(&ansatz.f, grid.node(i))).collect();
    let g_ax: Vec<AxisEval> = (0..n).map(|j| eval_axis(&ansatz.g, grid.node(j))).collect();
    let rows: Vec<Result<f64, (usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|alpha| {
            let x1 = grid.node(alpha);
            let (e1, de1) = envelope(x1);
            let fa = &f_ax[alpha];
            let mut row = 0.0;
            for beta in 0..n {
                let x2 = grid.node(beta);
                let (e2, de2) = envelope(x2);
                let gb = &g_ax[beta];
                let (hv, ht, _) = ansatz.h.forward(&[x1, x2], &[&[1.0, 0.0], &[0.0, 1.0]]);
                let mut fm = f0;
                for i in 0..2 {
                    let c1 = de1 * fa.value[i]
                        + e1 * fa.tangent[i]
                        + de1 * e2 * hv[i]
                        + e1 * e2 * ht[0][i];
                    let c2 = de2 * gb.value[i]
                        + e2 * gb.tangent[i]
                        + e1 * de2 * hv[i]
                        + e1 * e2 * ht[1][i];
                    if i == 0 {
                        fm.a11 += c1;
                        fm.a12 += c2;
                    } else {
                        fm.a21 += c1;
                        fm.a22 += c2;
                    }
                }
                let v = w.value(fm);
                if v == f64::INFINITY {
                    return Err((alpha, beta));
                }
                row += grid.weight(alpha) * grid.weight(beta) * v;
            }
            Ok(row)
        })
        .collect();
    let mut total = 0.0;
    for r in rows {
        match r {
            Ok(v) => total += v,
            Err(node) => return (f64::INFINITY, Some(node)),
        }
    }
    (total, None)
}

struct RowGrad {
    energy: f64,
    h_grad: Vec<f64>,
    /// value / tangent cotangents of the F net at this row's axis point.
    f_bar: [f64; 2],
    fp_bar: [f64; 2],
    /// per-beta cotangents of the G net: [g_bar0, g_bar1, gp_bar0, gp_bar1].
    g_bars: Vec<[f64; 4]>,
}

/// Energy and exact parameter gradient (concatenated F, G, H layout), or
/// None if any node is infeasible.
pub fn backprop_energy(
    w: &EnergyDensity,
    ansatz: &PeriodicAnsatz,
    f0: Mat2,
    grid: QuadratureGrid,
) -> Option<(f64, Vec<f64>)> {
    let n = grid.n;
    let f_ax: Vec<AxisEval> = (0..n).map(|i| eval_axis(&ansatz.f, grid.node(i))).collect();
    let g_ax: Vec<AxisEval> = (0..n).map(|j| eval_axis(&ansatz.g, grid.node(j))).collect();
    let nh = ansatz.h.params.len();
    let rows: Vec<Option<RowGrad>> = (0..n)
        .into_par_iter()
        .map(|alpha| {
            let x1 = grid.node(alpha);
            let (e1, de1) = envelope(x1);
            let fa = &f_ax[alpha];
            let mut out = RowGrad {
                energy: 0.0,
                h_grad: vec![0.0; nh],
                f_bar: [0.0; 2],
                fp_bar: [0.0; 2],
                g_bars: vec![[0.0; 4]; n],
            };
            for beta in 0..n {
                let x2 = grid.node(beta);
                let (e2, de2) = envelope(x2);
                let gb = &g_ax[beta];
                let (hv, ht, hc) = ansatz.h.forward(&[x1, x2], &[&[1.0, 0.0], &[0.0, 1.0]]);
                let mut fm = f0;
                for i in 0..2 {
                    let c1 = de1 * fa.value[i]
                        + e1 * fa.tangent[i]
                        + de1 * e2 * hv[i]
                        + e1 * e2 * ht[0][i];
                    let c2 = de2 * gb.value[i]
                        + e2 * gb.tangent[i]
                        + e1 * de2 * hv[i]
                        + e1 * e2 * ht[1][i];
                    if i == 0 {
                        fm.a11 += c1;
                        fm.a12 += c2;
                    } else {
                        fm.a21 += c1;
                        fm.a22 += c2;
                    }
                }
                let v = w.value(fm);
                if v == f64::INFINITY {
                    return None;
                }
                let weight = grid.weight(alpha) * grid.weight(beta);
                out.energy += weight * v;
                let s = w.stress(fm).scale(weight);
                let col1 = [s.a11, s.a21];
                let col2 = [s.a12, s.a22];
                let mut h_bar = [0.0; 2];
                let mut h1_bar = [0.0; 2];
                let mut h2_bar = [0.0; 2];
                for i in 0..2 {
                    out.f_bar[i] += de1 * col1[i];
                    out.fp_bar[i] += e1 * col1[i];
                    out.g_bars[beta][i] += de2 * col2[i];
                    out.g_bars[beta][2 + i] += e2 * col2[i];
                    h_bar[i] = de1 * e2 * col1[i] + e1 * de2 * col2[i];
                    h1_bar[i] = e1 * e2 * col1[i];
                    h2_bar[i] = e1 * e2 * col2[i];
                }
                ansatz
                    .h
                    .backward(&hc, &h_bar, &[&h1_bar, &h2_bar], &mut out.h_grad);
            }
            Some(out)
        })
        .collect();

    let (nf, ng) = (ansatz.f.params.len(), ansatz.g.params.len());
    let mut grad = vec![0.0; nf + ng + nh];
    let mut energy = 0.0;
    let mut g_accum = vec![[0.0f64; 4]; n];
    for (alpha, row) in rows.into_iter().enumerate() {
        let row = row?;
        energy += row.energy;
        for (k, v) in row.h_grad.iter().enumerate() {
            grad[nf + ng + k] += v;
        }
        ansatz.f.backward(
            &f_ax[alpha].cache,
            &row.f_bar,
            &[&row.fp_bar],
            &mut grad[..nf],
        );
        for beta in 0..n {
            for k in 0..4 {
                g_accum[beta][k] += row.g_bars[beta][k];
            }
        }
    }
    for beta in 0..n {
        let [g0, g1, gp0, gp1] = g_accum[beta];
        ansatz.g.backward(
            &g_ax[beta].cache,
            &[g0, g1],
            &[&[gp0, gp1]],
            &mut grad[nf..nf + ng],
        );
    }
    Some((energy, grad))
}

#[derive(Debug, Clone)]
pub struct AdamSchedule {
    pub lr0: f64,
    pub decay_at: Vec<usize>,
    pub factor: f64,
    pub iters: usize,
}

impl AdamSchedule {
    /// The reference schedule: 2000 iterations at 1e-3 decayed by 0.1 after
    /// iterations 700, 1400 and 1800.
    pub fn reference() -> Self {
        AdamSchedule {
            lr0: 1e-3,
            decay_at: vec![700, 1400, 1800],
            factor: 0.1,
            iters: 2000,
        }
    }

    /// Same shape compressed to `iters` total iterations.
    pub fn scaled(iters: usize) -> Self {
        let reference = Self::reference();
        AdamSchedule {
            decay_at: reference
                .decay_at
                .iter()
                .map(|&m| m * iters / reference.iters)
                .collect(),
            iters,
            ..reference
        }
    }

    pub fn lr(&self, iter: usize) -> f64 {
        let decays = self.decay_at.iter().filter(|&&m| iter >= m).count();
        self.lr0 * self.factor.powi(decays as i32)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best-seen parameters.
    pub ansatz: PeriodicAnsatz,
    pub best_energy: f64,
    /// Accepted energy per iteration.
    pub history: Vec<f64>,
    pub rejected_steps: u64,
}

/// Adam training of the ansatz, deterministic given the seed. Steps whose
/// trial point is infeasible are rejected with a temporarily halved
/// learning rate; more than 50 consecutive rejections abort.
pub fn adam_train(
    w: &EnergyDensity,
    f0: Mat2,
    grid: QuadratureGrid,
    seed: u64,
    schedule: &AdamSchedule,
) -> Result<TrainOutcome, PinnError> {
    let mut ansatz = PeriodicAnsatz::init(seed);
    let mut x = ansatz.params_concat();
    let p = x.len();
    let (mut m, mut v) = (vec![0.0; p], vec![0.0; p]);
    let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);
    let mut history = Vec::with_capacity(schedule.iters);
    let mut rejected_steps = 0u64;

    let (e0, bad) = total_energy(w, &ansatz, f0, grid);
    if let Some((a, b)) = bad {
        return Err(PinnError::InfeasibleStart(a, b));
    }
    let mut best_energy = e0;
    let mut best_params = x.clone();

    for iter in 0..schedule.iters {
        let (energy, grad) = backprop_energy(w, &ansatz, f0, grid)
            .expect("current iterate is feasible by construction");
        if energy < best_energy {
            best_energy = energy;
            best_params.copy_from_slice(&x);
        }
        for k in 0..p {
            m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
            v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
        }
        let bc1 = 1.0 - beta1.powi(iter as i32 + 1);
        let bc2 = 1.0 - beta2.powi(iter as i32 + 1);
        let mut lr = schedule.lr(iter);
        let mut consecutive = 0;
        loop {
            let mut trial = x.clone();
            for k in 0..p {
                trial[k] -= lr * (m[k] / bc1) / ((v[k] / bc2).sqrt() + eps);
            }
            ansatz.set_params(&trial);
            let (te, _) = total_energy(w, &ansatz, f0, grid);
            if te.is_finite() {
                x = trial;
                history.push(te);
                if te < best_energy {
                    best_energy = te;
                    best_params.copy_from_slice(&x);
                }
                break;
            }
            rejected_steps += 1;
            consecutive += 1;
            if consecutive > 50 {
                return Err(PinnError::PersistentInfeasibility { iteration: iter, consecutive });
            }
            lr *= 0.5;
        }
    }
    ansatz.set_params(&best_params);
    Ok(TrainOutcome {
        ansatz,
        best_energy,
        history,
        rejected_steps,
    })
}

/// Weighted L^2 structure of a trained field on the grid: returns the
/// deviation of the (1,1) Jacobian entry from its mean and the joint norm
/// of the other three entries. A smooth laminate has a large first and a
/// small second value.
pub fn laminate_structure(ansatz: &PeriodicAnsatz, f0: Mat2, grid: QuadratureGrid) -> (f64, f64) {
    let n = grid.n;
    let mut mean11 = 0.0;
    let mut grads = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let (_, g) = ansatz.eval([grid.node(a), grid.node(b)]);
            let weight = grid.weight(a) * grid.weight(b);
            let fm = f0 + g;
            mean11 += weight * fm.a11;
            grads.push((weight, fm));
        }
    }
    let mut var11 = 0.0;
    let mut off = 0.0;
    for (weight, fm) in grads {
        var11 += weight * (fm.a11 - mean11) * (fm.a11 - mean11);
        off += weight * (fm.a12 * fm.a12 + fm.a21 * fm.a21 + (fm.a22 - f0.a22) * (fm.a22 - f0.a22));
    }
    (var11.sqrt(), off.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_weights_sum_to_one() {
        for n in [2, 3, 33, 64] {
            let grid = QuadratureGrid::new(n);
            let total: f64 = (0..n).map(|i| grid.weight(i)).sum();
            assert!((total - 1.0).abs() < 1e-14, "n = {n}");
            assert_eq!(grid.node(0), 0.0);
            assert_eq!(grid.node(n - 1), 1.0);
        }
        let g2 = QuadratureGrid::new(2);
        assert_eq!(g2.weight(0), 0.5);
        assert_eq!(g2.weight(1), 0.5);
    }

    #[test]
    fn ansatz_vanishes_at_corner() {
        let ansatz = PeriodicAnsatz::init(1);
        let (theta, grad) = ansatz.eval([0.0, 0.0]);
        assert_eq!(theta, [0.0, 0.0]);
        assert!(grad.max_abs() < 1e-13);
    }

    #[test]
    fn ansatz_is_periodic() {
        let ansatz = PeriodicAnsatz::init(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let t: f64 = rng.gen();
            let (th_a, g_a) = ansatz.eval([t, 0.0]);
            let (th_b, g_b) = ansatz.eval([t, 1.0]);
            assert!((th_a[0] - th_b[0]).abs() < 1e-13);
            assert!((th_a[1] - th_b[1]).abs() < 1e-13);
            assert!((g_a - g_b).max_abs() < 1e-12);
            let (th_c, g_c) = ansatz.eval([0.0, t]);
            let (th_d, g_d) = ansatz.eval([1.0, t]);
            assert!((th_c[0] - th_d[0]).abs() < 1e-13);
            assert!((th_c[1] - th_d[1]).abs() < 1e-13);
            assert!((g_c - g_d).max_abs() < 1e-12);
        }
    }

    #[test]
    fn spatial_jacobian_matches_finite_differences() {
        let ansatz = PeriodicAnsatz::init(4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-5;
        for _ in 0..20 {
            let x = [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)];
            let (_, g) = ansatz.eval(x);
            for d in 0..2 {
                let mut xp = x;
                xp[d] += h;
                let mut xm = x;
                xm[d] -= h;
                let (tp, _) = ansatz.eval(xp);
                let (tm, _) = ansatz.eval(xm);
                for i in 0..2 {
                    let fd = (tp[i] - tm[i]) / (2.0 * h);
                    let got = if d == 0 {
                        if i == 0 { g.a11 } else { g.a21 }
                    } else if i == 0 {
                        g.a12
                    } else {
                        g.a22
                    };
                    assert!(
                        (got - fd).abs() <= 1e-7 * (1.0 + fd.abs()),
                        "entry ({i},{d}): {got} vs {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn zero_network_energy_is_exact() {
        let ansatz = PeriodicAnsatz::zeros();
        let f0 = Mat2::diag(3.0, 1.0 / 3.0);
        let (e, bad) = total_energy(
            &EnergyDensity::WMagicPlus,
            &ansatz,
            f0,
            QuadratureGrid::new(16),
        );
        assert!(bad.is_none());
        let want = 9.0 + 2.0 * (1.0f64 / 3.0).ln();
        assert!((e - want).abs() < 1e-13);
    }

    #[test]
    fn infeasible_node_is_reported() {
        // a huge F net drives det(F0 + grad) negative somewhere
        let mut ansatz = PeriodicAnsatz::zeros();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        ansatz.f = Mlp::init(&WIDTHS_1D, &mut rng, 50.0);
        let (e, bad) = total_energy(
            &EnergyDensity::WMagicPlus,
            &ansatz,
            Mat2::diag(1.0, 1.0),
            QuadratureGrid::new(16),
        );
        assert_eq!(e, f64::INFINITY);
        assert!(bad.is_some());
    }

    #[test]
    fn backprop_matches_directional_finite_differences() {
        let w = EnergyDensity::WMagicPlus;
        let f0 = Mat2::diag(2.0, 0.5);
        let grid = QuadratureGrid::new(8);
        let mut ansatz = PeriodicAnsatz::init(7);
        let (e0, grad) = backprop_energy(&w, &ansatz, f0, grid).unwrap();
        assert!(e0.is_finite());
        let x = ansatz.params_concat();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = 1e-6;
        for _ in 0..20 {
            let dir: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut xp = x.clone();
            let mut xm = x.clone();
            for k in 0..x.len() {
                xp[k] += h * dir[k] / norm;
                xm[k] -= h * dir[k] / norm;
            }
            ansatz.set_params(&xp);
            let (ep, _) = total_energy(&w, &ansatz, f0, grid);
            ansatz.set_params(&xm);
            let (em, _) = total_energy(&w, &ansatz, f0, grid);
            let fd = (ep - em) / (2.0 * h);
            let analytic: f64 = grad
                .iter()
                .zip(&dir)
                .map(|(g, d)| g * d / norm)
                .sum();
            assert!(
                (analytic - fd).abs() <= 1e-5 * (1.0 + fd.abs()),
                "directional derivative {analytic} vs fd {fd}"
            );
        }
    }

    #[test]
    fn adam_short_run_is_deterministic_and_non_increasing() {
        let w = EnergyDensity::WMagicPlus;
        let f0 = Mat2::diag(3.0, 1.0 / 3.0);
        let grid = QuadratureGrid::new(8);
        let schedule = AdamSchedule {
            lr0: 1e-3,
            decay_at: vec![20],
            factor: 0.1,
            iters: 30,
        };
        let out1 = adam_train(&w, f0, grid, 11, &schedule).unwrap();
        let out2 = adam_train(&w, f0, grid, 11, &schedule).unwrap();
        assert_eq!(out1.history, out2.history);
        assert_eq!(out1.best_energy, out2.best_energy);
        // the returned energy is the best seen anywhere along the run
        let min_hist = out1.history.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(out1.best_energy <= min_hist);
    }

    #[test]
    fn schedule_scaling() {
        let s = AdamSchedule::scaled(1000);
        assert_eq!(s.decay_at, vec![350, 700, 900]);
        assert_eq!(s.iters, 1000);
        assert!((s.lr(0) - 1e-3).abs() < 1e-18);
        assert!((s.lr(350) - 1e-4).abs() < 1e-18);
        assert!((s.lr(999) - 1e-6).abs() < 1e-18);
    }
}
