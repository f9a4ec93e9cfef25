use rayon::prelude::*;

use crate::cost::{BlockCost, CostSpec};
use crate::error::{Error, Result};
use crate::measure::BlockMeasure;
use crate::ot::exact::OtConfig;
use crate::ot::plan::{PlanEntry, PlanFile, TransportPlan};
use crate::scalar::{log_sum_exp, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct SinkhornConfig<T> {
    pub eta: T,
    /// Target for the larger L1 marginal violation.
    pub tol: T,
    pub max_iter: usize,
    /// Optional warm start for the column potential.
    pub init_g: Option<Vec<T>>,
    pub ot: OtConfig,
}

impl<T: Real> SinkhornConfig<T> {
    pub fn new(eta: T) -> Self {
        SinkhornConfig {
            eta,
            tol: T::of(1e-9),
            max_iter: 100_000,
            init_g: None,
            ot: OtConfig::default(),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.eta > T::zero()) || !self.eta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "entropic regularisation must be positive, got {}",
                self.eta
            )));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if let Some(g) = &self.init_g {
            if g.len() != n || g.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter("warm-start potential".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SinkhornStatus {
    Converged,
    MaxIterReached,
}

/// Entropic optimal coupling with its potentials.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropicPlan<T> {
    pub plan: TransportPlan<T>,
    pub eta: T,
    /// `sum c dpi - eta H(pi)` of the returned plan.
    pub regularized_value: T,
    pub f: Vec<T>,
    pub g: Vec<T>,
    pub iterations: usize,
    pub marginal_violation: T,
    pub status: SinkhornStatus,
}

/// Regularised value without materialising the plan.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropicValue<T> {
    pub regularized_value: T,
    pub f: Vec<T>,
    pub g: Vec<T>,
    pub iterations: usize,
    pub marginal_violation: T,
    pub status: SinkhornStatus,
}

/// Log-domain Gibbs kernel `-c(u, v) / eta` with reductions along either axis.
trait LogKernel<T> {
    /// `out_i = LSE_j (v_j - c_ij / eta)`
    fn lse_rows(&mut self, v: &[T], out: &mut [T]);
    /// `out_j = LSE_i (u_i - c_ij / eta)`
    fn lse_cols(&mut self, u: &[T], out: &mut [T]);
}

struct DenseKernel<T> {
    m: usize,
    n: usize,
    s: Vec<T>,
    st: Vec<T>,
}

impl<T: Real> DenseKernel<T> {
    fn new(a: &BlockMeasure<T>, b: &BlockMeasure<T>, cost: &dyn BlockCost<T>, eta: T) -> Result<Self> {
        let (m, n) = (a.len(), b.len());
        let mut s = Vec::with_capacity(m * n);
        for (i, u) in a.blocks().iter().enumerate() {
            for (j, v) in b.blocks().iter().enumerate() {
                let c = cost.cost(u, v);
                if !c.is_finite() || c < T::zero() {
                    return Err(Error::InvalidCost(i, j));
                }
                s.push(-c / eta);
            }
        }
        let mut st = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                st[j * m + i] = s[i * n + j];
            }
        }
        Ok(DenseKernel { m, n, s, st })
    }
}

fn lse_matrix<T: Real>(mat: &[T], cols: usize, v: &[T], out: &mut [T]) {
    let work = |(row, o): (&[T], &mut T)| {
        *o = log_sum_exp(row.iter().zip(v).map(|(&s, &x)| s + x));
    };
    if mat.len() >= 1 << 16 {
        mat.par_chunks(cols).zip(out.par_iter_mut()).for_each(work);
    } else {
        mat.chunks(cols).zip(out.iter_mut()).for_each(work);
    }
}

impl<T: Real> LogKernel<T> for DenseKernel<T> {
    fn lse_rows(&mut self, v: &[T], out: &mut [T]) {
        lse_matrix(&self.s, self.n, v, out);
    }

    fn lse_cols(&mut self, u: &[T], out: &mut [T]) {
        lse_matrix(&self.st, self.m, u, out);
    }
}

/// Kernel of a coordinate-wise additive cost on full product grids.
///
/// The block kernel factorises as a tensor product of single-letter kernels,
/// so each reduction is a sequence of `k` small contractions.
struct SeparableKernel<T> {
    k: usize,
    nx: usize,
    ny: usize,
    /// `-c(x, y) / eta`, row-major in `x`.
    s: Vec<T>,
    row_idx: Vec<usize>,
    col_idx: Vec<usize>,
    buf_a: Vec<T>,
    buf_b: Vec<T>,
}

fn grid_index(block: &[u8], base: usize) -> usize {
    block.iter().fold(0, |acc, &s| acc * base + s as usize)
}

/// Grid side above which separable reductions are not attempted.
const GRID_LIMIT: usize = 1 << 24;

impl<T: Real> SeparableKernel<T> {
    fn try_new(a: &BlockMeasure<T>, b: &BlockMeasure<T>, c: &CostSpec<T>, eta: T) -> Option<Self> {
        let k = a.k();
        if b.k() != k || a.alphabet() != c.x_alphabet() || b.alphabet() != c.y_alphabet() {
            return None;
        }
        let (nx, ny) = (c.x_alphabet().len(), c.y_alphabet().len());
        let gx = nx.checked_pow(k as u32)?;
        let gy = ny.checked_pow(k as u32)?;
        if gx > GRID_LIMIT || gy > GRID_LIMIT {
            return None;
        }
        let big = nx.max(ny);
        let work = (k * 2).saturating_mul(big.checked_pow(k as u32 + 1)?);
        if work.saturating_mul(4) >= a.len() * b.len() {
            return None;
        }
        Some(SeparableKernel {
            k,
            nx,
            ny,
            s: c.matrix().iter().map(|&x| -x / eta).collect(),
            row_idx: a.blocks().iter().map(|b| grid_index(b, nx)).collect(),
            col_idx: b.blocks().iter().map(|b| grid_index(b, ny)).collect(),
            buf_a: Vec::new(),
            buf_b: Vec::new(),
        })
    }

    /// Contracts a tensor over `in_base^k` into one over `out_base^k`:
    /// `out(w) = LSE_z in(z) + sum_l s(w_l, z_l)`, where `s(w, z) = kern(w, z)`.
    fn contract(&mut self, in_base: usize, out_base: usize, kern: impl Fn(usize, usize) -> T) {
        let k = self.k;
        let mut mx = Vec::new();
        let mut acc = Vec::new();
        for l in 0..k {
            let outer = out_base.pow(l as u32);
            let inner = in_base.pow((k - l - 1) as u32);
            let src = &self.buf_a;
            self.buf_b.clear();
            self.buf_b.resize(outer * out_base * inner, T::neg_infinity());
            mx.resize(inner, T::zero());
            acc.resize(inner, T::zero());
            for o in 0..outer {
                for w in 0..out_base {
                    mx.iter_mut().for_each(|x| *x = T::neg_infinity());
                    for z in 0..in_base {
                        let kv = kern(w, z);
                        let row = &src[(o * in_base + z) * inner..(o * in_base + z + 1) * inner];
                        for (m, &x) in mx.iter_mut().zip(row) {
                            *m = m.max(x + kv);
                        }
                    }
                    acc.iter_mut().for_each(|x| *x = T::zero());
                    for z in 0..in_base {
                        let kv = kern(w, z);
                        let row = &src[(o * in_base + z) * inner..(o * in_base + z + 1) * inner];
                        for ((s, &x), &m) in acc.iter_mut().zip(row).zip(&mx) {
                            if m > T::neg_infinity() {
                                *s += (x + kv - m).exp();
                            }
                        }
                    }
                    let dst = &mut self.buf_b[(o * out_base + w) * inner..(o * out_base + w + 1) * inner];
                    for ((d, &m), &s) in dst.iter_mut().zip(&mx).zip(&acc) {
                        if m > T::neg_infinity() {
                            *d = m + s.ln();
                        }
                    }
                }
            }
            std::mem::swap(&mut self.buf_a, &mut self.buf_b);
        }
    }
}

impl<T: Real> LogKernel<T> for SeparableKernel<T> {
    fn lse_rows(&mut self, v: &[T], out: &mut [T]) {
        let (nx, ny) = (self.nx, self.ny);
        self.buf_a.clear();
        self.buf_a.resize(ny.pow(self.k as u32), T::neg_infinity());
        for (&j, &x) in self.col_idx.iter().zip(v) {
            self.buf_a[j] = x;
        }
        let s = std::mem::take(&mut self.s);
        self.contract(ny, nx, |x, y| s[x * ny + y]);
        self.s = s;
        for (o, &i) in out.iter_mut().zip(&self.row_idx) {
            *o = self.buf_a[i];
        }
    }

    fn lse_cols(&mut self, u: &[T], out: &mut [T]) {
        let (nx, ny) = (self.nx, self.ny);
        self.buf_a.clear();
        self.buf_a.resize(nx.pow(self.k as u32), T::neg_infinity());
        for (&i, &x) in self.row_idx.iter().zip(u) {
            self.buf_a[i] = x;
        }
        let s = std::mem::take(&mut self.s);
        self.contract(nx, ny, |y, x| s[x * ny + y]);
        self.s = s;
        for (o, &j) in out.iter_mut().zip(&self.col_idx) {
            *o = self.buf_a[j];
        }
    }
}

fn make_kernel<T: Real>(
    a: &BlockMeasure<T>,
    b: &BlockMeasure<T>,
    cost: &dyn BlockCost<T>,
    eta: T,
    cfg: &OtConfig,
) -> Result<Box<dyn LogKernel<T>>> {
    if let Some(c) = cost.single_letter() {
        if let Some(k) = SeparableKernel::try_new(a, b, c, eta) {
            return Ok(Box::new(k));
        }
    }
    let needed = a.len().saturating_mul(b.len());
    if needed > cfg.max_entries {
        return Err(Error::BudgetExceeded {
            needed,
            budget: cfg.max_entries,
        });
    }
    Ok(Box::new(DenseKernel::new(a, b, cost, eta)?))
}

struct Potentials<T> {
    f: Vec<T>,
    g: Vec<T>,
    iterations: usize,
    status: SinkhornStatus,
}

fn scaled<T: Real>(v: &[T], eta: T) -> Vec<T> {
    v.iter().map(|&x| x / eta).collect()
}

fn sinkhorn_loop<T: Real>(
    kernel: &mut dyn LogKernel<T>,
    a: &[T],
    b: &[T],
    cfg: &SinkhornConfig<T>,
) -> Potentials<T> {
    let eta = cfg.eta;
    let (m, n) = (a.len(), b.len());
    let log_a: Vec<T> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<T> = b.iter().map(|x| x.ln()).collect();
    let mut g = cfg.init_g.clone().unwrap_or_else(|| vec![T::zero(); n]);
    let mut f = vec![T::zero(); m];
    let mut lr = vec![T::zero(); m];
    let mut lc = vec![T::zero(); n];
    let mut fitted = false;
    let mut iterations = 0;
    let status = loop {
        kernel.lse_rows(&scaled(&g, eta), &mut lr);
        if fitted {
            // Columns are exact after the last half-step; measure the rows.
            let viol: T = (0..m)
                .map(|i| ((f[i] / eta + lr[i]).exp() - a[i]).abs())
                .sum();
            if viol <= cfg.tol {
                break SinkhornStatus::Converged;
            }
            if iterations >= cfg.max_iter {
                break SinkhornStatus::MaxIterReached;
            }
        }
        for i in 0..m {
            f[i] = eta * (log_a[i] - lr[i]);
        }
        kernel.lse_cols(&scaled(&f, eta), &mut lc);
        for j in 0..n {
            g[j] = eta * (log_b[j] - lc[j]);
        }
        fitted = true;
        iterations += 1;
    };
    Potentials {
        f,
        g,
        iterations,
        status,
    }
}

/// Entropic optimal transport value `min sum c dpi - eta H(pi)` by log-domain Sinkhorn.
///
/// Avoids materialising the coupling, which matters for large product supports.
pub fn solve_entropic_value<T: Real>(
    a: &BlockMeasure<T>,
    b: &BlockMeasure<T>,
    cost: &dyn BlockCost<T>,
    cfg: &SinkhornConfig<T>,
) -> Result<EntropicValue<T>> {
    cfg.validate(b.len())?;
    let mut kernel = make_kernel(a, b, cost, cfg.eta, &cfg.ot)?;
    let p = sinkhorn_loop(kernel.as_mut(), a.masses(), b.masses(), cfg);
    let eta = cfg.eta;
    let mut lr = vec![T::zero(); a.len()];
    let mut lc = vec![T::zero(); b.len()];
    kernel.lse_rows(&scaled(&p.g, eta), &mut lr);
    kernel.lse_cols(&scaled(&p.f, eta), &mut lc);
    let r: Vec<T> = p.f.iter().zip(&lr).map(|(&f, &l)| (f / eta + l).exp()).collect();
    let s: Vec<T> = p.g.iter().zip(&lc).map(|(&g, &l)| (g / eta + l).exp()).collect();
    let value = p.f.iter().zip(&r).map(|(&f, &x)| f * x).sum::<T>()
        + p.g.iter().zip(&s).map(|(&g, &x)| g * x).sum::<T>();
    let viol_r: T = r.iter().zip(a.masses()).map(|(&x, &y)| (x - y).abs()).sum();
    let viol_c: T = s.iter().zip(b.masses()).map(|(&x, &y)| (x - y).abs()).sum();
    Ok(EntropicValue {
        regularized_value: value,
        f: p.f,
        g: p.g,
        iterations: p.iterations,
        marginal_violation: viol_r.max(viol_c),
        status: p.status,
    })
}

/// Entropic optimal coupling by log-domain Sinkhorn.
///
/// Non-convergence within `max_iter` is reported through `status`, not as an error.
pub fn solve_entropic_ot<T: Real>(
    a: &BlockMeasure<T>,
    b: &BlockMeasure<T>,
    cost: &dyn BlockCost<T>,
    cfg: &SinkhornConfig<T>,
) -> Result<EntropicPlan<T>> {
    cfg.validate(b.len())?;
    let needed = a.len().saturating_mul(b.len());
    if needed > cfg.ot.max_entries {
        return Err(Error::BudgetExceeded {
            needed,
            budget: cfg.ot.max_entries,
        });
    }
    let mut kernel = make_kernel(a, b, cost, cfg.eta, &cfg.ot)?;
    let p = sinkhorn_loop(kernel.as_mut(), a.masses(), b.masses(), cfg);
    drop(kernel);
    let eta = cfg.eta;
    let mut entries = Vec::with_capacity(needed);
    let mut value = T::zero();
    for (i, u) in a.blocks().iter().enumerate() {
        for (j, v) in b.blocks().iter().enumerate() {
            let c = cost.cost(u, v);
            let mass = ((p.f[i] + p.g[j] - c) / eta).exp();
            value += mass * c;
            entries.push(PlanEntry { row: i, col: j, mass });
        }
    }
    let plan = TransportPlan::new(a.clone(), b.clone(), entries, value, None)?;
    let regularized_value = value - eta * plan.entropy();
    let marginal_violation = plan.marginal_violation();
    Ok(EntropicPlan {
        plan,
        eta,
        regularized_value,
        f: p.f,
        g: p.g,
        iterations: p.iterations,
        marginal_violation,
        status: p.status,
    })
}

/// The `(c, eta)`-transform `g~(u) = -eta LSE_v ((g(v) - c(u, v)) / eta)` on the atoms of `a`.
pub fn c_eta_transform<T: Real>(
    g: &[T],
    a: &BlockMeasure<T>,
    b: &BlockMeasure<T>,
    cost: &dyn BlockCost<T>,
    eta: T,
) -> Result<Vec<T>> {
    if g.len() != b.len() {
        return Err(Error::InvalidParameter("potential length".into()));
    }
    if !(eta > T::zero()) {
        return Err(Error::InvalidParameter("eta must be positive".into()));
    }
    let mut kernel = make_kernel(a, b, cost, eta, &OtConfig::default())?;
    let mut out = vec![T::zero(); a.len()];
    kernel.lse_rows(&scaled(g, eta), &mut out);
    Ok(out.into_iter().map(|x| -eta * x).collect())
}

/// Semidual objective `sum (eta log a + g~) da + sum g db`.
pub fn semidual_value<T: Real>(
    a: &BlockMeasure<T>,
    b: &BlockMeasure<T>,
    g: &[T],
    cost: &dyn BlockCost<T>,
    eta: T,
) -> Result<T> {
    let gt = c_eta_transform(g, a, b, cost, eta)?;
    let first: T = a
        .masses()
        .iter()
        .zip(&gt)
        .map(|(&p, &t)| p * (eta * p.ln() + t))
        .sum();
    let second: T = b.masses().iter().zip(g).map(|(&q, &x)| q * x).sum();
    Ok(first + second)
}

impl<T: Real> EntropicPlan<T> {
    pub fn to_json(&self) -> String {
        let mut f: PlanFile<T> = self.plan.to_file();
        f.cost_value = self.regularized_value;
        f.eta = Some(self.eta);
        f.iterations = Some(self.iterations);
        f.marginal_violation = Some(self.marginal_violation);
        f.converged = Some(self.status == SinkhornStatus::Converged);
        serde_json::to_string_pretty(&f).expect("plan serializes")
    }
}
