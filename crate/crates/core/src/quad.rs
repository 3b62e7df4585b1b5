//! Adaptive 15-point Gauss–Kronrod quadrature on finite intervals.
//!
//! Panels are bisected until the Kronrod–Gauss difference summed over panels drops
//! below the absolute tolerance; no panel is refined beyond depth [`MAX_DEPTH`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub const MAX_DEPTH: u32 = 40;

/// Cap on the number of live panels.
pub const MAX_PANELS: usize = 200_000;

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

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    depth: u32,
    value: Vec<f64>,
    error: f64,
}

fn gk15<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> (Vec<f64>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    for j in 0..8 {
        let nodes: &[f64] = if j == 7 { &[0.0] } else { &[-XGK[j], XGK[j]] };
        for &s in nodes {
            f(c + h * s, buf);
            for d in 0..dim {
                kron[d] += WGK[j] * buf[d];
                if j % 2 == 1 {
                    gauss[d] += WG[j / 2] * buf[d];
                }
            }
        }
    }
    let mut err = 0.0f64;
    for d in 0..dim {
        kron[d] *= h;
        gauss[d] *= h;
        err = err.max((kron[d] - gauss[d]).abs());
    }
    (kron, err)
}

/// Integrates a vector-valued `f` over `[a, b]`.
///
/// `f(x, out)` writes `dim` components into `out`. The error measure is the largest
/// component error; `initial_panels` uniform panels seed the refinement.
pub fn integrate_vec<F>(mut f: F, a: f64, b: f64, dim: usize, tol: f64, initial_panels: usize) -> Result<Vec<f64>>
where
    F: FnMut(f64, &mut [f64]),
{
    if !(tol > 0.0) || !(b > a) || initial_panels == 0 {
        return Err(Error::InvalidInput(format!("bad quadrature request on [{a}, {b}] with tol {tol}")));
    }
    let mut buf = vec![0.0; dim];
    let mut panels: Vec<Panel> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;
    for i in 0..initial_panels {
        let pa = a + (b - a) * i as f64 / initial_panels as f64;
        let pb = a + (b - a) * (i + 1) as f64 / initial_panels as f64;
        let (value, error) = gk15(&mut f, pa, pb, dim, &mut buf);
        total_err += error;
        heap.push(Worst(error, panels.len()));
        panels.push(Panel { a: pa, b: pb, depth: 0, value, error });
    }
    while total_err > tol {
        if panels.len() >= MAX_PANELS {
            return Err(Error::NonConvergence { error: total_err, tol });
        }
        let Some(Worst(_, idx)) = heap.pop() else {
            return Err(Error::NonConvergence { error: total_err, tol });
        };
        let (pa, pb, depth) = (panels[idx].a, panels[idx].b, panels[idx].depth);
        let m = 0.5 * (pa + pb);
        let (lv, le) = gk15(&mut f, pa, m, dim, &mut buf);
        let (rv, re) = gk15(&mut f, m, pb, dim, &mut buf);
        total_err += le + re - panels[idx].error;
        panels[idx] = Panel { a: pa, b: m, depth: depth + 1, value: lv, error: le };
        panels.push(Panel { a: m, b: pb, depth: depth + 1, value: rv, error: re });
        if depth + 1 < MAX_DEPTH {
            heap.push(Worst(le, idx));
            heap.push(Worst(re, panels.len() - 1));
        }
        // refresh the running total to shed rounding drift
        if panels.len() % 1024 == 0 {
            total_err = panels.iter().map(|p| p.error).sum();
        }
    }
    // sum in interval order for reproducibility
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut out = vec![0.0; dim];
    for p in &panels {
        for d in 0..dim {
            out[d] += p.value[d];
        }
    }
    Ok(out)
}

struct Worst(f64, usize);

impl PartialEq for Worst {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Worst {}
impl PartialOrd for Worst {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Worst {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(o.1.cmp(&self.1))
    }
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_vec(|x, out| out[0] = f(x), a, b, 1, tol, 1).map(|v| v[0])
}
