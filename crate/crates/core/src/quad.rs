//! Numerical integration: a 15-point Kronrod rule with adaptive
//! bisection, and Gauss-Legendre rules of arbitrary order.
//!
//! These back the independent cross-checks (phase-functional oracles,
//! spectral purity integrals), so they deliberately share no code with
//! the closed-form segment algebra they are used to verify.

use num_complex::Complex;

use crate::scalar::{czero, real, Real};

// 15-point Kronrod abscissae (positive half, descending) and weights,
// with the embedded 7-point Gauss weights on the odd abscissae.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: Complex<T>,
    /// Accumulated error estimate from the embedded rule differences.
    pub error: T,
    pub evaluations: usize,
    /// False when the panel budget ran out before the tolerance was met.
    pub converged: bool,
}

fn gk15<T: Real>(f: &mut dyn FnMut(T) -> Complex<T>, a: T, b: T) -> (Complex<T>, T) {
    let half = (b - a) * real::<T>(0.5);
    let center = (a + b) * real::<T>(0.5);
    let mut kronrod = czero::<T>();
    let mut gauss = czero::<T>();
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let dx = half * real::<T>(x);
        let value = if i == 7 {
            f(center)
        } else {
            f(center - dx) + f(center + dx)
        };
        kronrod = kronrod + value * real::<T>(wk);
        // Gauss nodes sit at odd i plus the center (i == 7, also odd).
        if i % 2 == 1 {
            gauss = gauss + value * real::<T>(WG[i / 2]);
        }
    }
    let value = kronrod * half;
    let err = (kronrod - gauss).norm() * half.abs();
    (value, err)
}

/// Adaptively integrates a complex-valued function over `[a, b]` to the
/// requested tolerance: converged when
/// `error <= max(abs_tol, rel_tol * |value|)`.
pub fn adaptive<T: Real>(
    mut f: impl FnMut(T) -> Complex<T>,
    a: T,
    b: T,
    rel_tol: T,
    abs_tol: T,
    max_panels: usize,
) -> QuadResult<T> {
    adaptive_split(&mut f, &[a, b], rel_tol, abs_tol, max_panels)
}

/// Like [`adaptive`], with the integration domain pre-split at the given
/// ascending points (integrand kinks, spectral band edges).
pub fn adaptive_split<T: Real>(
    f: &mut dyn FnMut(T) -> Complex<T>,
    points: &[T],
    rel_tol: T,
    abs_tol: T,
    max_panels: usize,
) -> QuadResult<T> {
    assert!(points.len() >= 2, "need at least one interval");
    struct Panel<T> {
        a: T,
        b: T,
        value: Complex<T>,
        error: T,
    }
    let mut evaluations = 0usize;
    let mut panels: Vec<Panel<T>> = Vec::new();
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error) = gk15(f, w[0], w[1]);
        evaluations += 15;
        panels.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    assert!(!panels.is_empty(), "split points must span an interval");

    loop {
        let mut total = czero::<T>();
        let mut total_err = T::zero();
        for p in &panels {
            total = total + p.value;
            total_err = total_err + p.error;
        }
        let tol = abs_tol.max(rel_tol * total.norm());
        if total_err <= tol || panels.len() >= max_panels {
            return QuadResult {
                value: total,
                error: total_err,
                evaluations,
                converged: total_err <= tol,
            };
        }
        // Bisect the worst panel.
        let mut worst = 0usize;
        for (i, p) in panels.iter().enumerate() {
            if p.error > panels[worst].error {
                worst = i;
            }
        }
        let Panel { a, b, .. } = panels[worst];
        let mid = (a + b) * real::<T>(0.5);
        if mid <= a || mid >= b {
            // Interval at floating-point resolution; accept as is.
            let mut out = QuadResult {
                value: czero::<T>(),
                error: T::zero(),
                evaluations,
                converged: false,
            };
            for p in &panels {
                out.value = out.value + p.value;
                out.error = out.error + p.error;
            }
            return out;
        }
        let (v1, e1) = gk15(f, a, mid);
        let (v2, e2) = gk15(f, mid, b);
        evaluations += 30;
        panels[worst] = Panel {
            a,
            b: mid,
            value: v1,
            error: e1,
        };
        panels.push(Panel {
            a: mid,
            b,
            value: v2,
            error: e2,
        });
    }
}

/// Real-valued convenience wrapper around [`adaptive_split`].
pub fn adaptive_real<T: Real>(
    mut f: impl FnMut(T) -> T,
    points: &[T],
    rel_tol: T,
    abs_tol: T,
    max_panels: usize,
) -> QuadResult<T> {
    adaptive_split(
        &mut |x| Complex::new(f(x), T::zero()),
        points,
        rel_tol,
        abs_tol,
        max_panels,
    )
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// by Newton iteration on the Legendre recurrence. Exact for
/// polynomials of degree `2n - 1`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = real::<T>(n as f64);
    for i in 0..(n + 1) / 2 {
        // Chebyshev-like initial guess.
        let guess = ((real::<T>(i as f64) + real::<T>(0.75)) * T::PI()
            / (nf + real::<T>(0.5)))
        .cos();
        let mut x = guess;
        let mut dp = T::zero();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by upward recurrence.
            let mut p0 = T::one();
            let mut p1 = x;
            for k in 2..=n {
                let kf = real::<T>(k as f64);
                let p2 = ((real::<T>(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { T::one() } else { p0 };
            dp = nf * (x * p - pm1) / (x * x - T::one());
            let step = p / dp;
            x = x - step;
            if step.abs() <= T::epsilon() * real::<T>(4.0) {
                break;
            }
        }
        let w = real::<T>(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

/// Fixed-order Gauss-Legendre integral of `f` over `[a, b]` using
/// precomputed `(nodes, weights)` from [`gauss_legendre`].
pub fn gl_fixed<T: Real>(
    rule: &(Vec<T>, Vec<T>),
    mut f: impl FnMut(T) -> Complex<T>,
    a: T,
    b: T,
) -> Complex<T> {
    let half = (b - a) * real::<T>(0.5);
    let center = (a + b) * real::<T>(0.5);
    let mut acc = czero::<T>();
    for (&x, &w) in rule.0.iter().zip(rule.1.iter()) {
        acc = acc + f(center + half * x) * w;
    }
    acc * half
}
