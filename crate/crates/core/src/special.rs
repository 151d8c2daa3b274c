//! Normal distribution kernels and the sweet-spot integrals.
//!
//! `I_n(beta) = (2 pi)^{-1/2} \int exp(-x^2/2) / (1 + beta x^2)^n dx` for
//! n = 1, 2 have closed forms in terms of the Mills ratio
//! `Phi(-t) exp(t^2/2)`. That product is evaluated through the scaled
//! complementary error function `erfcx`, never as tiny * huge.
//! [`in_quadrature`] integrates the definition directly and serves as the
//! independent check on the closed forms.

#![allow(clippy::excessive_precision)]

use crate::error::SpecialError;
use crate::scalar::{lit, to_f64, Real};

// W. J. Cody, "Rational Chebyshev approximation for the error function",
// Math. Comp. 23 (1969), coefficients as distributed in CALERF.
const ERF_A: [f64; 5] = [
    3.16112374387056560e00,
    1.13864154151050156e02,
    3.77485237685302021e02,
    3.20937758913846947e03,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e01,
    2.44024637934444173e02,
    1.28261652607737228e03,
    2.84423683343917062e03,
];
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e00,
    6.61191906371416295e01,
    2.98635138197400131e02,
    8.81952221241769090e02,
    1.71204761263407058e03,
    2.05107837782607147e03,
    1.23033935479799725e03,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e01,
    1.17693950891312499e02,
    5.37181101862009858e02,
    1.62138957456669019e03,
    3.29079923573345963e03,
    4.36261909014324716e03,
    3.43936767414372164e03,
    1.23033935480374942e03,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e00,
    1.87295284992346725e00,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
const ERF_THRESH: f64 = 0.46875;
const FRAC_1_SQRT_PI: f64 = 5.641_895_835_477_563e-1;

/// erf(x) for |x| <= 0.46875.
fn erf_small<T: Real>(x: T) -> T {
    let ysq = if x.abs() > lit(1.11e-16) { x * x } else { T::zero() };
    let mut num = lit::<T>(ERF_A[4]) * ysq;
    let mut den = ysq;
    for i in 0..3 {
        num = (num + lit(ERF_A[i])) * ysq;
        den = (den + lit(ERF_B[i])) * ysq;
    }
    x * (num + lit(ERF_A[3])) / (den + lit(ERF_B[3]))
}

/// erfcx(y) for y > 0.46875.
fn erfcx_positive<T: Real>(y: T) -> T {
    if y <= lit(4.0) {
        let mut num = lit::<T>(ERF_C[8]) * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + lit(ERF_C[i])) * y;
            den = (den + lit(ERF_D[i])) * y;
        }
        (num + lit(ERF_C[7])) / (den + lit(ERF_D[7]))
    } else {
        let ysq = (y * y).recip();
        let mut num = lit::<T>(ERF_P[5]) * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + lit(ERF_P[i])) * ysq;
            den = (den + lit(ERF_Q[i])) * ysq;
        }
        let r = ysq * (num + lit(ERF_P[4])) / (den + lit(ERF_Q[4]));
        (lit::<T>(FRAC_1_SQRT_PI) - r) / y
    }
}

/// `exp(-y^2)` without losing the low bits of `y^2`.
fn exp_neg_sq<T: Real>(y: T) -> T {
    let head = (y * lit(16.0)).trunc() / lit(16.0);
    let del = (y - head) * (y + head);
    (-head * head).exp() * (-del).exp()
}

/// Scaled complementary error function `exp(x^2) erfc(x)`.
pub fn erfcx<T: Real>(x: T) -> T {
    let y = x.abs();
    if y <= lit(ERF_THRESH) {
        return (x * x).exp() * (T::one() - erf_small(x));
    }
    let r = erfcx_positive(y);
    if x < T::zero() {
        lit::<T>(2.0) * (x * x).exp() - r
    } else {
        r
    }
}

/// Complementary error function.
pub fn erfc<T: Real>(x: T) -> T {
    let y = x.abs();
    if y <= lit(ERF_THRESH) {
        return T::one() - erf_small(x);
    }
    let r = exp_neg_sq(y) * erfcx_positive(y);
    if x < T::zero() {
        lit::<T>(2.0) - r
    } else {
        r
    }
}

/// Standard normal density.
pub fn norm_pdf<T: Real>(x: T) -> T {
    let inv_sqrt_2pi: T = lit(0.398_942_280_401_432_7);
    inv_sqrt_2pi * (-(x * x) / lit(2.0)).exp()
}

/// Standard normal distribution function.
pub fn norm_cdf<T: Real>(x: T) -> T {
    erfc(-x * T::FRAC_1_SQRT_2()) / lit(2.0)
}

/// Mills-type product `Phi(-t) exp(t^2 / 2)`, stable for large `t`.
pub fn scaled_upper_tail<T: Real>(t: T) -> T {
    erfcx(t * T::FRAC_1_SQRT_2()) / lit(2.0)
}

// Wichura (1988), Algorithm AS 241, PPND16.
const PPND_A: [f64; 8] = [
    3.387_132_872_796_366_608,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const PPND_B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const PPND_C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const PPND_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const PPND_E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const PPND_F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn horner<T: Real>(coeffs: &[f64; 8], r: T) -> T {
    coeffs
        .iter()
        .rev()
        .fold(T::zero(), |acc, &c| acc * r + lit(c))
}

/// Inverse of the standard normal distribution function.
///
/// Relative accuracy about 1e-16 on (0, 1); returns -inf/+inf at 0/1 and
/// NaN outside the unit interval.
pub fn norm_quantile<T: Real>(p: T) -> T {
    if p.is_nan() || p < T::zero() || p > T::one() {
        return T::nan();
    }
    if p == T::zero() {
        return T::neg_infinity();
    }
    if p == T::one() {
        return T::infinity();
    }
    let half: T = lit(0.5);
    let q = p - half;
    if q.abs() <= lit(0.425) {
        let r = lit::<T>(0.180625) - q * q;
        return q * horner(&PPND_A, r) / horner(&PPND_B, r);
    }
    let tail = if q < T::zero() { p } else { T::one() - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= lit(5.0) {
        r = r - lit(1.6);
        horner(&PPND_C, r) / horner(&PPND_D, r)
    } else {
        r = r - lit(5.0);
        horner(&PPND_E, r) / horner(&PPND_F, r)
    };
    if q < T::zero() {
        -x
    } else {
        x
    }
}

/// Below this the sweet-spot integrals use their small-beta expansion.
const SERIES_CUTOFF: f64 = 1e-3;

/// Asymptotic expansion `sum_k c_k (-beta)^k E[x^{2k}]`, where
/// `c_k = 1` for `I_1` and `k + 1` for `I_2`.
fn small_beta_series<T: Real>(order: u32, beta: T) -> T {
    let mut sum = T::zero();
    let mut moment = T::one(); // (2k - 1)!!
    let mut power = T::one(); // (-beta)^k
    for k in 0..40u32 {
        let weight = if order == 1 {
            T::one()
        } else {
            lit(f64::from(k + 1))
        };
        let term = weight * power * moment;
        sum = sum + term;
        if term.abs() <= T::epsilon() * lit(1e-3) * sum.abs() {
            break;
        }
        moment = moment * lit(f64::from(2 * k + 1));
        power = power * -beta;
    }
    sum
}

fn check_beta<T: Real>(beta: T) -> Result<(), SpecialError> {
    if beta > T::zero() && beta.is_finite() {
        Ok(())
    } else {
        Err(SpecialError::Domain(format!(
            "beta must be finite and > 0, got {beta}"
        )))
    }
}

/// `I_1(beta) = sqrt(2 pi / beta) Phi(-1/sqrt(beta)) exp(1 / (2 beta))`.
pub fn i1<T: Real>(beta: T) -> Result<T, SpecialError> {
    check_beta(beta)?;
    if beta < lit(SERIES_CUTOFF) {
        return Ok(small_beta_series(1, beta));
    }
    let two_pi = lit::<T>(2.0) * T::PI();
    Ok((two_pi / beta).sqrt() * scaled_upper_tail(beta.recip().sqrt()))
}

/// `I_2(beta) = 1/(2 beta) - sqrt(pi/2) (1 - beta) beta^{-3/2}
/// exp(1/(2 beta)) Phi(-1/sqrt(beta))`, i.e. `(1 - (1 - beta) I_1) / (2 beta)`.
pub fn i2<T: Real>(beta: T) -> Result<T, SpecialError> {
    check_beta(beta)?;
    if beta < lit(SERIES_CUTOFF) {
        return Ok(small_beta_series(2, beta));
    }
    let one = T::one();
    let first = i1(beta)?;
    Ok((one - (one - beta) * first) / (lit::<T>(2.0) * beta))
}

/// Tolerances for [`integrate`] and [`in_quadrature`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Integration range `[-half_width, half_width]` in standard units.
    pub half_width: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            half_width: 12.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), SpecialError> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(SpecialError::Domain("tolerances must be > 0".into()));
        }
        if !(self.half_width >= 8.0) {
            return Err(SpecialError::Domain("half_width must be >= 8".into()));
        }
        Ok(())
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK QK15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_SUBINTERVALS: usize = 2000;

/// Kronrod estimate and |Kronrod - Gauss| on one panel.
fn gauss_kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let two: T = lit(2.0);
    let centre = (a + b) / two;
    let half = (b - a) / two;
    let fc = f(centre);
    let mut kronrod = fc * lit(WGK[7]);
    let mut gauss = fc * lit(WG[3]);
    for j in 0..7 {
        let dx = half * lit(XGK[j]);
        let pair = f(centre - dx) + f(centre + dx);
        kronrod = kronrod + pair * lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * lit(WG[j / 2]);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
pub fn integrate<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    spec: &QuadratureSpec,
) -> Result<T, SpecialError> {
    spec.validate()?;
    let (r0, e0) = gauss_kronrod(&f, a, b);
    let mut panels = vec![(a, b, r0, e0)];
    loop {
        let total: T = panels.iter().fold(T::zero(), |s, p| s + p.2);
        let err: T = panels.iter().fold(T::zero(), |s, p| s + p.3);
        let tol = lit::<T>(spec.abs_tol).max(lit::<T>(spec.rel_tol) * total.abs());
        if err <= tol {
            return Ok(total);
        }
        if panels.len() >= MAX_SUBINTERVALS {
            return Err(SpecialError::ConvergenceFailure {
                subintervals: panels.len(),
                error_estimate: to_f64(err),
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, be), (i, p)| {
                if p.3 > be {
                    (i, p.3)
                } else {
                    (bi, be)
                }
            });
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let mid = (pa + pb) / lit(2.0);
        let (rl, el) = gauss_kronrod(&f, pa, mid);
        let (rr, er) = gauss_kronrod(&f, mid, pb);
        panels.push((pa, mid, rl, el));
        panels.push((mid, pb, rr, er));
    }
}

/// `I_n(beta)` by adaptive quadrature of its defining integral.
pub fn in_quadrature<T: Real>(n: u32, beta: T, spec: &QuadratureSpec) -> Result<T, SpecialError> {
    check_beta(beta)?;
    if !(n == 1 || n == 2) {
        return Err(SpecialError::Domain(format!("n must be 1 or 2, got {n}")));
    }
    let h: T = lit(spec.half_width);
    let exponent = n as i32;
    integrate(
        |x: T| norm_pdf(x) / (T::one() + beta * x * x).powi(exponent),
        -h,
        h,
        spec,
    )
}

/// `ln B(a, b)` via log-gamma differences.
pub fn ln_beta<T: Real>(a: T, b: T) -> T {
    use statrs::function::gamma::ln_gamma;
    let (a, b) = (to_f64(a), to_f64(b));
    lit(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
}
