//! Adaptive Gauss–Kronrod (7/15) quadrature used as an independent oracle.

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let pair = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, rel: f64, depth: u32) -> f64 {
    let (value, err) = kronrod(f, a, b);
    if depth == 0 || err <= rel * whole.abs().max(f64::MIN_POSITIVE) || b - a < 1e-12 * b.abs() {
        return value;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, whole, rel, depth - 1) + adapt(f, m, b, whole, rel, depth - 1)
}

/// `∫_a^b f` to relative tolerance `rel` of the whole integral.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64) -> f64 {
    // Coarse pass gives the scale the local tolerances refer to.
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    let rough: f64 = (0..pieces)
        .map(|i| kronrod(&f, a + i as f64 * h, a + (i + 1) as f64 * h).0)
        .sum();
    let local = rel / pieces as f64;
    (0..pieces)
        .map(|i| {
            adapt(
                &f,
                a + i as f64 * h,
                a + (i + 1) as f64 * h,
                rough,
                local,
                30,
            )
        })
        .sum()
}
