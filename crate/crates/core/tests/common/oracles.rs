//! Reference computations written independently of the library internals.
#![allow(dead_code)]

use funcirc::{fit, Angle, Curve, Dataset, Kernel, Smoothing};

/// Modified Bessel function of the first kind `I_ν(x)` for integer `ν ≥ 0`,
/// from its power series `Σ_m (x/2)^{2m+ν} / (m! (m+ν)!)`.
pub fn bessel_i(nu: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = (0..nu).fold(1.0, |acc, k| acc * half / (k + 1) as f64);
    let mut sum = term;
    let mut m = 0u32;
    loop {
        m += 1;
        term *= half * half / (m as f64 * (m + nu) as f64);
        sum += term;
        if term <= sum * 1e-17 || m > 1000 {
            return sum;
        }
    }
}

/// Mean resultant length of `vM(·, κ)`: `I₁(κ)/I₀(κ)`.
pub fn vm_resultant(kappa: f64) -> f64 {
    bessel_i(1, kappa) / bessel_i(0, kappa)
}

/// `Var(sin ε)` for `ε ~ vM(0, κ)`: `(1 − I₂(κ)/I₀(κ)) / 2`.
pub fn vm_sin_variance(kappa: f64) -> f64 {
    (1.0 - bessel_i(2, kappa) / bessel_i(0, kappa)) / 2.0
}

/// Trapezoidal L² distance computed from raw grid values.
pub fn l2(a: &Curve, b: &Curve) -> f64 {
    let t = a.grid().points();
    let (x, y) = (a.values(), b.values());
    let mut acc = 0.0;
    for j in 1..t.len() {
        let d0 = (x[j - 1] - y[j - 1]).powi(2);
        let d1 = (x[j] - y[j]).powi(2);
        acc += 0.5 * (t[j] - t[j - 1]) * (d0 + d1);
    }
    acc.sqrt()
}

fn kernel_value(kernel: Kernel, u: f64) -> f64 {
    match kernel {
        Kernel::Uniform if u <= 1.0 => 1.0,
        Kernel::Quadratic if u < 1.0 => 1.0 - u * u,
        _ => 0.0,
    }
}

/// Direct Nadaraya–Watson direction at `chi`; `None` for an empty
/// neighbourhood or a vanishing resultant.
pub fn nw_direction(
    curves: &[Curve],
    responses: &[Angle],
    kernel: Kernel,
    h: f64,
    chi: &Curve,
) -> Option<f64> {
    let (mut s, mut c) = (0.0, 0.0);
    let mut any = false;
    for (x, t) in curves.iter().zip(responses) {
        let w = kernel_value(kernel, l2(x, chi) / h);
        if w > 0.0 {
            any = true;
            s += w * t.radians().sin();
            c += w * t.radians().cos();
        }
    }
    (any && (s != 0.0 || c != 0.0)).then(|| s.atan2(c))
}

/// Leave-one-out score by rebuilding a model for every fold.
pub fn naive_loocv(d: &Dataset, kernel: Kernel, h: f64) -> f64 {
    let n = d.len();
    let mut total = 0.0;
    for i in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let curves: Vec<Curve> = keep.iter().map(|&j| d.curves()[j].clone()).collect();
        let resp: Vec<Angle> = keep.iter().map(|&j| d.responses()[j]).collect();
        let fold = Dataset::new(curves, resp, None).expect("fold dataset");
        let model = fit(fold, kernel, Smoothing::Bandwidth(h)).expect("fold fit");
        match model.predict(&d.curves()[i]) {
            Ok(p) => total += 1.0 - (d.responses()[i].radians() - p.radians()).cos(),
            Err(_) => return f64::INFINITY,
        }
    }
    total
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
