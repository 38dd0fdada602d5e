//! One-dimensional adaptive Gauss–Kronrod engine.
//!
//! The 15-point Kronrod extension of 7-point Gauss is applied per panel; the
//! driver bisects the worst panel (ties broken by position, so refinement
//! order is deterministic) until the summed error meets the tolerance or the
//! evaluation budget runs out. Node values may themselves come from inner
//! quadratures: an [`Integrand1d`] reports, besides the value, its own error
//! contribution and cost, and the driver keeps those "auxiliary" errors in a
//! separate channel that bisection cannot shrink, to avoid burning budget on
//! panels whose error is irreducible.

use crate::exec::{pairwise_sum, par_map};
use std::collections::BinaryHeap;

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (positive half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// 7-point Gauss weights (for the embedded error estimate).
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// A node evaluation: value, error the node itself carries (inner quadrature
/// or angular refinement slack), and its cost in field evaluations.
#[derive(Copy, Clone, Debug, Default)]
pub struct NodeOut {
    pub value: f64,
    pub aux_error: f64,
    pub cost: u64,
}

impl NodeOut {
    pub fn exact(value: f64) -> Self {
        NodeOut {
            value,
            aux_error: 0.0,
            cost: 1,
        }
    }
}

/// A 1-D integrand whose node evaluations may be expensive and carry their
/// own error bars.
pub trait Integrand1d: Sync {
    fn eval(&self, x: f64) -> NodeOut;

    /// Nodes per panel evaluated concurrently when true (worth it only when
    /// a node hides an inner quadrature or an angular rule).
    fn parallel_nodes(&self) -> bool {
        false
    }
}

impl<F: Fn(f64) -> f64 + Sync> Integrand1d for F {
    fn eval(&self, x: f64) -> NodeOut {
        NodeOut::exact(self(x))
    }
}

/// QUADPACK-style error rescaling: trust the raw Kronrod-Gauss difference
/// only once it is small relative to the integrand's variation.
fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    let tiny = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if resabs > tiny {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

#[derive(Clone, Debug)]
struct PanelResult {
    value: f64,
    gk_error: f64,
    aux_error: f64,
    cost: u64,
}

fn gk15(f: &(impl Integrand1d + ?Sized), a: f64, b: f64) -> PanelResult {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    // All 15 abscissae in a fixed order: pairs from the outside in, then the
    // center point last.
    let mut xs = [0.0_f64; 15];
    for (i, xi) in XGK.iter().take(7).enumerate() {
        xs[2 * i] = center - half * xi;
        xs[2 * i + 1] = center + half * xi;
    }
    xs[14] = center;

    let outs: Vec<NodeOut> = if f.parallel_nodes() {
        par_map(15, |i| f.eval(xs[i]))
    } else {
        xs.iter().map(|&x| f.eval(x)).collect()
    };

    let mut resk = [0.0_f64; 15];
    let mut wk = [0.0_f64; 15];
    for i in 0..7 {
        wk[2 * i] = WGK[i];
        wk[2 * i + 1] = WGK[i];
        resk[2 * i] = outs[2 * i].value;
        resk[2 * i + 1] = outs[2 * i + 1].value;
    }
    wk[14] = WGK[7];
    resk[14] = outs[14].value;

    let kron: f64 = crate::exec::pairwise_dot(&wk, &resk);
    // Gauss-7 uses the odd-indexed Kronrod abscissae (XGK[1], XGK[3], ...).
    let mut gauss = WG[3] * outs[14].value;
    for i in 0..3 {
        gauss += WG[i] * (outs[2 * (2 * i + 1)].value + outs[2 * (2 * i + 1) + 1].value);
    }
    let resabs: f64 = wk
        .iter()
        .zip(&resk)
        .map(|(w, v)| w * v.abs())
        .sum::<f64>();
    let mean = 0.5 * kron;
    let resasc: f64 = wk
        .iter()
        .zip(&resk)
        .map(|(w, v)| w * (v - mean).abs())
        .sum::<f64>();

    let gk_error = rescale_error((kron - gauss) * half, resabs * half, resasc * half);
    let aux: f64 = outs
        .iter()
        .zip(&wk)
        .map(|(o, w)| w * o.aux_error)
        .sum::<f64>()
        * half.abs();
    let cost: u64 = outs.iter().map(|o| o.cost).sum();

    PanelResult {
        value: kron * half,
        gk_error,
        aux_error: aux,
        cost,
    }
}

#[derive(Clone, Debug)]
struct Panel {
    a: f64,
    b: f64,
    res: PanelResult,
    /// Panels whose remaining error is dominated by the irreducible aux
    /// channel are retired from the refinement heap.
    retired: bool,
}

/// Heap ordering: largest reducible error first; ties by position then width,
/// so the refinement sequence is a pure function of the inputs.
#[derive(PartialEq)]
struct HeapKey {
    err: f64,
    a: f64,
    b: f64,
    idx: usize,
}

impl Eq for HeapKey {}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
            .then_with(|| other.b.total_cmp(&self.b))
    }
}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug)]
pub struct Adapt1dOut {
    pub value: f64,
    /// Reducible (Gauss–Kronrod) error plus irreducible node error.
    pub error: f64,
    pub n_evals: u64,
    pub converged: bool,
}

/// Adaptive integration over a fixed list of seed panels.
///
/// `max_evals` is in units of the integrand's reported cost. The tolerance
/// test is `total_error ≤ max(abs_tol, rel_tol · |value|)`.
pub fn adaptive(
    f: &(impl Integrand1d + ?Sized),
    seeds: &[(f64, f64)],
    rel_tol: f64,
    abs_tol: f64,
    max_evals: u64,
) -> Adapt1dOut {
    assert!(!seeds.is_empty(), "need at least one seed panel");
    let mut panels: Vec<Panel> = Vec::with_capacity(seeds.len() * 4);
    let mut cost: u64 = 0;
    for &(a, b) in seeds {
        debug_assert!(b > a, "degenerate panel [{a}, {b}]");
        let res = gk15(f, a, b);
        cost += res.cost;
        panels.push(Panel {
            a,
            b,
            res,
            retired: false,
        });
    }

    let mut heap: BinaryHeap<HeapKey> = panels
        .iter()
        .enumerate()
        .map(|(idx, p)| HeapKey {
            err: p.res.gk_error,
            a: p.a,
            b: p.b,
            idx,
        })
        .collect();

    // Running totals drive the stopping decision (their update order is
    // deterministic); the reported value and error are re-summed pairwise in
    // position order at the end.
    let mut run_value: f64 = panels.iter().map(|p| p.res.value).sum();
    let mut run_error: f64 = panels
        .iter()
        .map(|p| p.res.gk_error + p.res.aux_error)
        .sum();

    loop {
        if run_error <= abs_tol.max(rel_tol * run_value.abs()) {
            break;
        }
        let Some(top) = heap.pop() else {
            break; // nothing reducible left
        };
        let p = &panels[top.idx];
        if p.retired || p.a != top.a || p.b != top.b || p.res.gk_error != top.err {
            continue; // stale heap entry
        }
        // A panel whose error is essentially all auxiliary (inner-quadrature
        // slack) cannot be improved by bisection; retire it.
        if p.res.gk_error <= 0.05 * p.res.aux_error {
            panels[top.idx].retired = true;
            continue;
        }
        if cost + 30 > max_evals {
            break;
        }
        let (a, b) = (p.a, p.b);
        let old = p.res.clone();
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) {
            // Width at floating-point resolution; cannot split further.
            panels[top.idx].retired = true;
            continue;
        }
        let left = gk15(f, a, mid);
        let right = gk15(f, mid, b);
        cost += left.cost + right.cost;
        run_value += left.value + right.value - old.value;
        run_error += left.gk_error + left.aux_error + right.gk_error + right.aux_error
            - old.gk_error
            - old.aux_error;
        heap.push(HeapKey {
            err: left.gk_error,
            a,
            b: mid,
            idx: top.idx,
        });
        panels[top.idx] = Panel {
            a,
            b: mid,
            res: left,
            retired: false,
        };
        let ridx = panels.len();
        heap.push(HeapKey {
            err: right.gk_error,
            a: mid,
            b,
            idx: ridx,
        });
        panels.push(Panel {
            a: mid,
            b,
            res: right,
            retired: false,
        });
    }

    // Final deterministic reduction: position order, pairwise.
    let mut order: Vec<usize> = (0..panels.len()).collect();
    order.sort_by(|&i, &j| panels[i].a.total_cmp(&panels[j].a));
    let vals: Vec<f64> = order.iter().map(|&i| panels[i].res.value).collect();
    let errs: Vec<f64> = order
        .iter()
        .map(|&i| panels[i].res.gk_error + panels[i].res.aux_error)
        .collect();
    let value = pairwise_sum(&vals);
    let error = pairwise_sum(&errs);
    Adapt1dOut {
        value,
        error,
        n_evals: cost,
        converged: error <= abs_tol.max(rel_tol * value.abs()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        // Kronrod-15 is exact for degree ≤ 22; a cubic over one panel must be
        // machine-exact.
        let f = |x: f64| 3.0 * x * x * x - x + 2.0;
        let out = adaptive(&f, &[(0.0, 2.0)], 1e-12, 1e-14, 10_000);
        let exact = 3.0 / 4.0 * 16.0 - 2.0 + 4.0;
        assert!((out.value - exact).abs() < 1e-12);
        assert!(out.converged);
    }

    #[test]
    fn peaked_integrand_adapts() {
        // 1/(1e-6 + x²) over [-1, 1]: sharp peak at 0.
        let c = 1e-6_f64;
        let f = move |x: f64| 1.0 / (c + x * x);
        let out = adaptive(&f, &[(-1.0, 1.0)], 1e-10, 1e-12, 1_000_000);
        let exact = 2.0 / c.sqrt() * (1.0 / c.sqrt()).atan();
        assert!(out.converged);
        assert!(
            ((out.value - exact) / exact).abs() < 1e-9,
            "value {} exact {exact}",
            out.value
        );
    }

    #[test]
    fn budget_exhaustion_reports_nonconverged() {
        let f = |x: f64| (1e-12 + x * x).powf(-0.49);
        let out = adaptive(&f, &[(0.0, 1.0)], 1e-14, 1e-16, 1_000);
        assert!(!out.converged);
        assert!(out.n_evals <= 1_000);
        assert!(out.error > 0.0);
    }

    #[test]
    fn deterministic_repeat() {
        let f = |x: f64| (x.sin() * 10.0).exp();
        let a = adaptive(&f, &[(0.0, 3.0)], 1e-11, 1e-13, 1_000_000);
        let b = adaptive(&f, &[(0.0, 3.0)], 1e-11, 1e-13, 1_000_000);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.error.to_bits(), b.error.to_bits());
    }
}
