//! Globally adaptive 15-point Gauss–Kronrod quadrature.

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> QuadResult {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    QuadResult {
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`, bisecting the worst panel until the summed
/// error estimate drops below `max(abs_tol, rel_tol·|I|)` or `max_panels` is hit.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> QuadResult {
    integrate_panels(&f, &[a, b], abs_tol, rel_tol, max_panels)
}

/// As [`integrate`], starting from the given panel breakpoints.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> QuadResult {
    let mut panels: Vec<(f64, f64, QuadResult)> = breaks
        .windows(2)
        .map(|w| (w[0], w[1], gk15(f, w[0], w[1])))
        .collect();
    loop {
        let value: f64 = panels.iter().map(|p| p.2.value).sum();
        let error: f64 = panels.iter().map(|p| p.2.error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) || panels.len() >= max_panels {
            return QuadResult { value, error };
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.2.error > acc.1 { (i, p.2.error) } else { acc });
        let (a, b, _) = panels.swap_remove(worst);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            // panel cannot be split further in double precision
            let value: f64 = panels.iter().map(|p| p.2.value).sum::<f64>() + gk15(f, a, b).value;
            return QuadResult { value, error };
        }
        panels.push((a, m, gk15(f, a, m)));
        panels.push((m, b, gk15(f, m, b)));
    }
}
