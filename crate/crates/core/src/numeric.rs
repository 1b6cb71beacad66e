//! Small numerical kernels: adaptive Gauss–Kronrod quadrature, bracketed
//! root finding and golden-section minimisation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod 21-point abscissae on [-1, 1]; odd indices are the 10 Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_067_217,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let sum = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Globally adaptive Gauss–Kronrod (G10/K21) quadrature on a finite interval.
///
/// Non-finite integrand values are reported as divergence.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("finite bounds required, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral { value: 0.0, abs_err: 0.0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (value, err) = gauss_kronrod(&f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a: lo, b: hi, value, err });
    let mut total = value;
    let mut total_err = err;
    loop {
        if !total.is_finite() {
            return Err(Error::Divergent(format!("integrand not finite on [{lo}, {hi}]")));
        }
        if total_err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature { value: sign * total, abs_err: total_err });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval collapsed to machine resolution.
            heap.push(worst);
            return Err(Error::Quadrature { value: sign * total, abs_err: total_err });
        }
        let (v1, e1) = gauss_kronrod(&f, worst.a, mid);
        let (v2, e2) = gauss_kronrod(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Piece { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, err: e2 });
    }
    // Re-sum to shed accumulated rounding from the running updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let abs_err: f64 = heap.iter().map(|p| p.err).sum();
    Ok(Integral { value: sign * value, abs_err })
}

/// Integral over `[a, +inf)` through the map `x = a + scale * t / (1 - t)`.
pub fn integrate_upper<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    opts: QuadOptions,
) -> Result<Integral> {
    let g = |t: f64| {
        let s = 1.0 - t;
        let x = a + scale * t / s;
        if x.is_infinite() {
            return 0.0;
        }
        let v = f(x) * scale / (s * s);
        if v.is_finite() {
            v
        } else {
            f64::NAN
        }
    };
    integrate(g, 0.0, 1.0, opts)
}

/// Integral over `(-inf, b]` through the map `x = b - scale * t / (1 - t)`.
pub fn integrate_lower<F: Fn(f64) -> f64>(
    f: F,
    b: f64,
    scale: f64,
    opts: QuadOptions,
) -> Result<Integral> {
    integrate_upper(|x| f(2.0 * b - x), b, scale, opts)
}

/// Integral of `f` over `[a, b]` (either bound may be infinite), split at
/// the interior `knots` so that kinks never fall inside a Kronrod panel.
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    knots: &[f64],
    scale: f64,
    opts: QuadOptions,
) -> Result<Integral> {
    if a >= b {
        return Ok(Integral { value: 0.0, abs_err: 0.0 });
    }
    let mut points: Vec<f64> = knots
        .iter()
        .copied()
        .filter(|k| k.is_finite() && *k > a && *k < b)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    if points.is_empty() && a.is_infinite() && b.is_infinite() {
        points.push(0.0);
    }
    let mut value = 0.0;
    let mut abs_err = 0.0;
    let mut add = |r: Result<Integral>| -> Result<()> {
        let r = r?;
        value += r.value;
        abs_err += r.abs_err;
        Ok(())
    };
    let Some(&first) = points.first() else {
        return match (a.is_infinite(), b.is_infinite()) {
            (false, false) => integrate(&f, a, b, opts),
            (false, true) => integrate_upper(&f, a, scale, opts),
            (true, false) => integrate_lower(&f, b, scale, opts),
            (true, true) => unreachable!("a knot at zero was inserted"),
        };
    };
    if a.is_infinite() {
        add(integrate_lower(&f, first, scale, opts))?;
    } else if first > a {
        add(integrate(&f, a, first, opts))?;
    }
    for w in points.windows(2) {
        add(integrate(&f, w[0], w[1], opts))?;
    }
    let last = points[points.len() - 1];
    if b.is_infinite() {
        add(integrate_upper(&f, last, scale, opts))?;
    } else {
        add(integrate(&f, last, b, opts))?;
    }
    Ok(Integral { value, abs_err })
}

/// Brent's method for a root of `f` in `[a, b]`; requires a sign change.
pub fn brent<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::RootFinding(format!(
            "no sign change on [{a}, {b}] (f = {fa}, {fb})"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..500 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::RootFinding("iteration limit reached".into()))
}

/// Golden-section search for the minimiser of a unimodal `f` on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, -1.0, 3.0, QuadOptions::default()).unwrap();
        assert!((r.value - 12.0).abs() < 1e-13);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let r = integrate(|x: f64| x.exp(), 1.0, 0.0, QuadOptions::default()).unwrap();
        assert!((r.value + (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn kinked_integrand_converges() {
        let r = integrate(|x: f64| x.abs(), -1.0, 2.0, QuadOptions::default()).unwrap();
        assert!((r.value - 2.5).abs() < 1e-11);
    }

    #[test]
    fn semi_infinite_tails() {
        let r = integrate_upper(|x: f64| (-x).exp(), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        // Pareto-type decay x^-3 on [1, inf) integrates to 1/2.
        let r = integrate_upper(|x: f64| x.powi(-3), 1.0, 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        let r = integrate_split(
            |x: f64| (-0.5 * x * x).exp(),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &[],
            1.0,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn golden_section_minimum() {
        let m = golden_min(|x| (x - 0.7).powi(2), 0.0, 3.0, 1e-10);
        assert!((m - 0.7).abs() < 1e-8);
    }
}
