//! Union bounds from the weight distribution and the Gallager random-coding
//! bound for the binary-input AWGN channel.
//!
//! SNR is `10 log10(Eb/N0)`; with unit-energy antipodal symbols and rate
//! `R = k/n` the noise variance is `1 / (2 R 10^(snr/10))`.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::codebook::WeightDistribution;
use crate::error::{Error, Result};

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Noise variance per real dimension for rate `rate` at `snr_db`.
pub fn noise_variance(rate: f64, snr_db: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(snr_db / 10.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    UnionBer,
    UnionFer,
    GallagerFer,
}

impl BoundKind {
    pub const ALL: [BoundKind; 3] = [BoundKind::UnionBer, BoundKind::UnionFer, BoundKind::GallagerFer];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::UnionBer => "union_ber",
            BoundKind::UnionFer => "union_fer",
            BoundKind::GallagerFer => "gallager_fer",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown bound kind `{s}`")))
    }
}

/// Union bound on ML bit or frame error rate:
/// `BER <= (1/n) sum_i i A_i Q(sqrt(2 R i Eb/N0))`, `FER <= sum_i A_i Q(..)`,
/// clamped to 1.
pub fn union_bound(weights: &WeightDistribution, n: usize, k: usize, snr_db: f64, kind: BoundKind) -> Result<f64> {
    if weights.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: weights.n(),
        });
    }
    let rate = k as f64 / n as f64;
    let ebn0 = 10f64.powf(snr_db / 10.0);
    let mut sum = 0.0;
    for i in 1..=n {
        let a = weights.count(i) as f64;
        if a == 0.0 {
            continue;
        }
        let q = q_function((2.0 * rate * i as f64 * ebn0).sqrt());
        sum += match kind {
            BoundKind::UnionBer => a * i as f64 * q / n as f64,
            BoundKind::UnionFer => a * q,
            BoundKind::GallagerFer => {
                return Err(Error::InvalidArgument("not a union bound kind".into()))
            }
        };
    }
    Ok(sum.min(1.0))
}

/// Number of eigenvalues below `x` of the Hermite Jacobi matrix
/// (zero diagonal, off-diagonal `sqrt(j/2)`), by Sturm sequence.
fn hermite_sturm_count(n: usize, x: f64) -> usize {
    let mut count = 0;
    let mut q = -x;
    for j in 0..n {
        if j > 0 {
            let b2 = j as f64 / 2.0;
            q = -x - b2 / q;
        }
        if q == 0.0 {
            q = -f64::EPSILON;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Orthonormal Hermite function value `p_n(z)` and `p_{n-1}(z)`.
fn hermite_pair(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

/// Nodes and weights of the `n`-point Gauss-Hermite rule (weight `e^{-t^2}`),
/// nodes descending.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let bound = (2.0 * n as f64 + 2.0).sqrt();
    for i in 0..n.div_ceil(2) {
        // the (i+1)-th largest eigenvalue: exactly n-1-i eigenvalues lie below it
        let target = n - 1 - i;
        let (mut lo, mut hi) = (0.0f64.min(-bound), bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hermite_sturm_count(n, mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        let mut z = 0.5 * (lo + hi);
        let mut pp = 0.0;
        for _ in 0..3 {
            let (p1, p2) = hermite_pair(n, z);
            pp = (2.0 * n as f64).sqrt() * p2;
            let step = p1 / pp;
            if step.is_finite() && step.abs() < 1e-6 {
                z -= step;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `(1+rho) ln(1/2 + 1/2 e^{a})`, stable for large `|a|`.
fn log_mix(a: f64, rho: f64) -> f64 {
    let softplus = if a > 0.0 { a + (-a).exp().ln_1p() } else { a.exp().ln_1p() };
    (1.0 + rho) * (softplus - LN_2)
}

/// Integrand of `exp(-E0)` as an expectation over `y ~ N(1, variance)`.
fn e0_integrand(y: f64, rho: f64, variance: f64) -> f64 {
    let s = 1.0 / (1.0 + rho);
    log_mix(-2.0 * y * s / variance, rho).exp()
}

fn gaussian_density(y: f64, variance: f64) -> f64 {
    (-(y - 1.0) * (y - 1.0) / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Option<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Some(left + right + delta / 15.0);
        }
        if depth == 0 {
            return None;
        }
        Some(
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?,
        )
    }
    // split into panels first so narrow features are not skipped
    let panels = 64;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let (lo, hi) = (a + p as f64 * h, a + (p + 1) as f64 * h);
        let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += rec(f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 40)
            .ok_or_else(|| Error::Numerical("adaptive Simpson did not converge".into()))?;
    }
    Ok(total)
}

/// Gallager function `E0(rho)` in nats for antipodal inputs with uniform prior.
#[derive(Clone, Debug)]
pub struct GallagerE0 {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Tolerance for the quadrature cross-check; `None` skips it.
    pub cross_check: Option<f64>,
}

impl Default for GallagerE0 {
    fn default() -> Self {
        Self::new(200)
    }
}

impl GallagerE0 {
    pub fn new(hermite_nodes: usize) -> Self {
        let (nodes, weights) = gauss_hermite(hermite_nodes);
        Self {
            nodes,
            weights,
            cross_check: Some(1e-9),
        }
    }

    /// `E[(1/2 + 1/2 e^{-2ys/variance})^{1+rho}]` by Gauss-Hermite.
    pub fn integral_hermite(&self, rho: f64, variance: f64) -> f64 {
        let sd = variance.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * e0_integrand(1.0 + std::f64::consts::SQRT_2 * sd * t, rho, variance))
            .sum::<f64>()
            / PI.sqrt()
    }

    /// The same integral by adaptive Simpson over `1 +- 12 sigma`.
    pub fn integral_simpson(&self, rho: f64, variance: f64, tol: f64) -> Result<f64> {
        let sd = variance.sqrt();
        let f = |y: f64| gaussian_density(y, variance) * e0_integrand(y, rho, variance);
        adaptive_simpson(&f, 1.0 - 12.0 * sd, 1.0 + 12.0 * sd, tol)
    }

    pub fn e0(&self, rho: f64, variance: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&rho) || !(variance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "E0 needs rho in [0,1] and positive variance, got {rho}, {variance}"
            )));
        }
        let gh = self.integral_hermite(rho, variance);
        if let Some(tol) = self.cross_check {
            let simpson = self.integral_simpson(rho, variance, tol * 0.1)?;
            if (gh - simpson).abs() > tol {
                return Err(Error::Numerical(format!(
                    "quadrature disagreement {:.3e} at rho={rho}, variance={variance}",
                    (gh - simpson).abs()
                )));
            }
        }
        Ok(-gh.ln())
    }
}

/// Optimum of `E0(rho) - rho R ln 2` over `rho in [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GallagerExponent {
    pub rho: f64,
    /// Random-coding exponent in nats per channel use.
    pub exponent: f64,
}

pub fn gallager_exponent(e0: &GallagerE0, rate: f64, snr_db: f64) -> Result<GallagerExponent> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidArgument(format!("rate must lie in (0,1), got {rate}")));
    }
    let variance = noise_variance(rate, snr_db);
    let objective = |rho: f64| -> Result<f64> { Ok(e0.e0(rho, variance)? - rho * rate * LN_2) };
    let at_zero = objective(0.0)?;
    if at_zero > 1e-12 {
        return Err(Error::Numerical(format!(
            "objective at rho = 0 is {at_zero}, expected <= 0"
        )));
    }
    let steps = 1000;
    let mut best = (0usize, at_zero);
    for i in 1..=steps {
        let v = objective(i as f64 / steps as f64)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    let lo = best.0.saturating_sub(1) as f64 / steps as f64;
    let hi = (best.0 + 1).min(steps) as f64 / steps as f64;
    let (rho, exponent) = golden_max(&objective, lo, hi, 1e-10)?;
    let (rho, exponent) = if exponent >= best.1 {
        (rho, exponent)
    } else {
        (best.0 as f64 / steps as f64, best.1)
    };
    Ok(GallagerExponent { rho, exponent })
}

fn golden_max<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// `exp(-n max_rho (E0(rho) - rho R ln 2))`.
pub fn gallager_bound(n: usize, rate: f64, snr_db: f64) -> Result<f64> {
    gallager_bound_with(&GallagerE0::default(), n, rate, snr_db)
}

pub fn gallager_bound_with(e0: &GallagerE0, n: usize, rate: f64, snr_db: f64) -> Result<f64> {
    let ex = gallager_exponent(e0, rate, snr_db)?;
    Ok((-(n as f64) * ex.exponent).exp().min(1.0))
}

/// One bound evaluated over an SNR grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub snr_db: Vec<f64>,
    pub values: Vec<f64>,
}

/// Evaluates the requested bounds for an `[n, k]` code. Union bounds need
/// the weight distribution.
pub fn bound_curves(
    n: usize,
    k: usize,
    weights: Option<&WeightDistribution>,
    snr_grid: &[f64],
    kinds: &[BoundKind],
) -> Result<Vec<BoundCurve>> {
    let e0 = GallagerE0::default();
    kinds
        .iter()
        .map(|&kind| {
            let values = snr_grid
                .iter()
                .map(|&s| match kind {
                    BoundKind::GallagerFer => gallager_bound_with(&e0, n, k as f64 / n as f64, s),
                    _ => union_bound(
                        weights.ok_or_else(|| {
                            Error::InvalidArgument("union bounds need a weight distribution".into())
                        })?,
                        n,
                        k,
                        s,
                        kind,
                    ),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BoundCurve {
                kind,
                snr_db: snr_grid.to_vec(),
                values,
            })
        })
        .collect()
}

/// CSV `snr_db,kind,value` preceded by a `#` line stating the normalization.
pub fn curves_to_csv(curves: &[BoundCurve], n: usize, k: usize) -> String {
    let mut out = format!(
        "# n={n} k={k} R=k/n; noise variance = 1/(2 R 10^(snr_db/10)); rates in nats via ln 2\nsnr_db,kind,value\n"
    );
    for c in curves {
        for (s, v) in c.snr_db.iter().zip(&c.values) {
            out.push_str(&format!("{s},{},{v:.6e}\n", c.kind));
        }
    }
    out
}
