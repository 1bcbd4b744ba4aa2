//! Standard-normal CDFs in one, two, and three dimensions, plus the 3-D box
//! probability assembled from corner CDFs.
//!
//! The bivariate CDF uses the single-integral reduction over the correlation
//! parameter with fixed-order Gauss–Legendre quadrature (6/12/20 points by
//! |rho|, switching to the complementary expansion above 0.925). The
//! trivariate CDF conditions on the most correlated pair and integrates the
//! correlation-path derivative — a one-dimensional integral whose integrand
//! is a bivariate density times a univariate CDF — with a composite
//! Gauss–Legendre rule. Everything is deterministic: no random number is ever
//! drawn on this path, so the log-likelihood built on top of it is smooth
//! enough for finite-difference gradients.

use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};

const TWO_PI: f64 = std::f64::consts::TAU;
const SQRT_TWO_PI: f64 = 2.5066282746310002;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Finite bounds are clamped to this magnitude before quadrature; the tail
/// mass beyond it is below 1e-16.
pub const BOUND_CLAMP: f64 = 8.5;

/// Negative rounding residue tolerated by [`rectangle_prob`] before it
/// reports an assembly error instead of clamping to zero.
pub const NEGATIVE_RESIDUE: f64 = -1e-12;

// Gauss–Legendre abscissas/weights (positive half; nodes are used in ± pairs).
const GL6_X: [f64; 3] = [0.932469514203152, 0.6612093864662645, 0.2386191860831969];
const GL6_W: [f64; 3] = [0.1713244923791704, 0.3607615730481386, 0.467913934572691];
const GL12_X: [f64; 6] = [
    0.9815606342467192,
    0.9041172563704749,
    0.7699026741943047,
    0.5873179542866175,
    0.3678314989981802,
    0.1252334085114689,
];
const GL12_W: [f64; 6] = [
    0.04717533638651183,
    0.1069393259953184,
    0.1600783285433462,
    0.2031674267230659,
    0.2334925365383548,
    0.2491470458134028,
];
const GL20_X: [f64; 10] = [
    0.9931285991850949,
    0.9639719272779138,
    0.912234428251326,
    0.8391169718222188,
    0.7463319064601508,
    0.636053680726515,
    0.5108670019508271,
    0.3737060887154195,
    0.2277858511416451,
    0.07652652113349733,
];
const GL20_W: [f64; 10] = [
    0.01761400713915212,
    0.04060142980038694,
    0.06267204833410907,
    0.08327674157670475,
    0.1019301198172404,
    0.1181945319615184,
    0.1316886384491766,
    0.142096109318382,
    0.1491729864726037,
    0.1527533871307258,
];

/// Fast internal Φ(x); callers are responsible for rejecting NaN upstream.
#[inline(always)]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_TWO_PI
}

/// Standard normal CDF Φ(x). Accepts ±infinity; rejects NaN.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidBound("NaN is not a valid bound".into()));
    }
    Ok(phi(x))
}

/// Inverse standard normal CDF.
///
/// Rational approximation (Acklam) refined with one Halley step, giving
/// absolute error well below 1e-9 over (0, 1).
pub fn std_normal_inv_cdf(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "probability must lie in [0, 1], got {p}"
        )));
    }
    if p == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if p == 1.0 {
        return Ok(f64::INFINITY);
    }

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    };

    // One Halley refinement step.
    let e = phi(x) - p;
    let u = e * SQRT_TWO_PI * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + 0.5 * x * u))
}

/// Correlation structure of a trivariate standard normal vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corr3 {
    pub r12: f64,
    pub r13: f64,
    pub r23: f64,
}

impl Corr3 {
    pub fn new(r12: f64, r13: f64, r23: f64) -> Result<Self> {
        let c = Corr3 { r12, r13, r23 };
        c.validate()?;
        Ok(c)
    }

    /// Unit-diagonal 3x3 matrix with these off-diagonals must be symmetric
    /// positive definite: each |r| < 1 and det = 1 + 2·r12·r13·r23 − r12² −
    /// r13² − r23² > 0.
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("r12", self.r12), ("r13", self.r13), ("r23", self.r23)] {
            if !r.is_finite() || r.abs() >= 1.0 {
                return Err(Error::DegenerateCorrelation(if r.is_finite() {
                    r
                } else {
                    return Err(Error::NotPositiveDefinite(format!("{name} is not finite")));
                }));
            }
        }
        let det = self.det();
        if det <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!(
                "1 + 2*r12*r13*r23 - r12^2 - r13^2 - r23^2 = {det} <= 0"
            )));
        }
        Ok(())
    }

    /// Determinant of the implied 3x3 correlation matrix.
    pub fn det(&self) -> f64 {
        1.0 + 2.0 * self.r12 * self.r13 * self.r23
            - self.r12 * self.r12
            - self.r13 * self.r13
            - self.r23 * self.r23
    }

    pub fn identity() -> Self {
        Corr3 { r12: 0.0, r13: 0.0, r23: 0.0 }
    }

    fn entry(&self, a: usize, b: usize) -> f64 {
        match (a.min(b), a.max(b)) {
            (0, 1) => self.r12,
            (0, 2) => self.r13,
            (1, 2) => self.r23,
            _ => 1.0,
        }
    }
}

fn ensure_bound(x: f64) -> Result<()> {
    if x.is_nan() {
        Err(Error::InvalidBound("NaN is not a valid bound".into()))
    } else {
        Ok(())
    }
}

#[inline]
fn clamp_finite(x: f64) -> f64 {
    if x.is_finite() {
        x.clamp(-BOUND_CLAMP, BOUND_CLAMP)
    } else {
        x
    }
}

/// Upper-orthant probability P(X > h, Y > k) for standard bivariate normals
/// with correlation `r`, |r| <= 1. This is the Drezner–Wesolowsky/Genz
/// single-integral scheme; absolute accuracy is near machine precision.
fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return phi(-k);
    }
    if k == f64::NEG_INFINITY {
        return phi(-h);
    }

    let (gx, gw): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&GL6_X, &GL6_W)
    } else if r.abs() < 0.75 {
        (&GL12_X, &GL12_W)
    } else {
        (&GL20_X, &GL20_W)
    };

    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;

    if r.abs() < 0.925 {
        if r != 0.0 {
            let hs = (h * h + k * k) / 2.0;
            let asr = r.asin();
            for i in 0..gx.len() {
                for sign in [-1.0, 1.0] {
                    let sn = (asr * (sign * gx[i] + 1.0) / 2.0).sin();
                    bvn += gw[i] * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn = bvn * asr / (2.0 * TWO_PI);
        }
        bvn += phi(-h) * phi(-k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let a_sq = (1.0 - r) * (1.0 + r);
            let mut a = a_sq.sqrt();
            let b_sq = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 16.0;
            let asr = -(b_sq / a_sq + hk) / 2.0;
            if asr > -100.0 {
                bvn = a
                    * asr.exp()
                    * (1.0 - c * (b_sq - a_sq) * (1.0 - d * b_sq / 5.0) / 3.0
                        + c * d * a_sq * a_sq / 5.0);
            }
            if -hk < 100.0 {
                let b = b_sq.sqrt();
                bvn -= (-hk / 2.0).exp()
                    * SQRT_TWO_PI
                    * phi(-b / a)
                    * b
                    * (1.0 - c * b_sq * (1.0 - d * b_sq / 5.0) / 3.0);
            }
            a /= 2.0;
            for i in 0..gx.len() {
                for sign in [-1.0, 1.0] {
                    let x = a * (sign * gx[i] + 1.0);
                    let xs = x * x;
                    let rs = (1.0 - xs).sqrt();
                    let asr = -(b_sq / xs + hk) / 2.0;
                    if asr > -100.0 {
                        bvn += a
                            * gw[i]
                            * asr.exp()
                            * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                                - (1.0 + c * xs * (1.0 + d * xs)));
                    }
                }
            }
            bvn = -bvn / TWO_PI;
        }
        if r > 0.0 {
            bvn += phi(-h.max(k));
        } else {
            bvn = -bvn;
            if k > h {
                bvn += phi(k) - phi(h);
            }
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// P(X <= b1, Y <= b2) for standard bivariate normals, internal entry without
/// argument validation.
#[inline]
pub(crate) fn bvn_cdf_unchecked(b1: f64, b2: f64, rho: f64) -> f64 {
    bvn_upper(-clamp_finite(b1), -clamp_finite(b2), rho)
}

/// P(X <= b1, Y <= b2) for standard bivariate normals with correlation `rho`.
pub fn bvn_cdf(b1: f64, b2: f64, rho: f64) -> Result<f64> {
    ensure_bound(b1)?;
    ensure_bound(b2)?;
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(Error::DegenerateCorrelation(rho));
    }
    Ok(bvn_cdf_unchecked(b1, b2, rho))
}

/// Number of composite panels used for the path integral; grows with the
/// magnitude of the two varied correlations so the 1e-8 target holds without
/// wasting quadrature points on the easy (small-|rho|) cases that dominate
/// estimation.
fn panel_count(max_varied: f64) -> usize {
    if max_varied < 0.35 {
        1
    } else if max_varied < 0.6 {
        2
    } else if max_varied < 0.8 {
        4
    } else if max_varied < 0.9 {
        7
    } else if max_varied < 0.96 {
        12
    } else {
        20
    }
}

#[derive(Debug, Clone, Copy)]
struct PathNode {
    /// Path correlation t·rho of the varied pair at this node.
    c: f64,
    /// 1 / (2 (1 − c²)) for the bivariate density exponent.
    expo: f64,
    /// Regression weights of the conditioned variable on the pair.
    b_first: f64,
    b_partner: f64,
    /// Conditional standard deviation of the third variable.
    s: f64,
    /// Quadrature weight with the density normalizer and drho/dt folded in.
    w: f64,
}

/// Precomputed machinery for trivariate CDF evaluations that share one
/// correlation structure. Building the context once per parameter vector and
/// reusing it across observations keeps the likelihood loop tight.
#[derive(Debug, Clone)]
pub struct TvnContext {
    corr: Corr3,
    /// perm[new_axis] = original axis; axes are reordered so the most
    /// correlated pair occupies positions 2 and 3.
    perm: [usize; 3],
    /// Correlations in permuted order: varied (1,2), varied (1,3), fixed (2,3).
    ra: f64,
    rb: f64,
    rc: f64,
    nodes_a: Vec<PathNode>,
    nodes_b: Vec<PathNode>,
}

impl TvnContext {
    pub fn new(corr: Corr3) -> Result<Self> {
        corr.validate()?;

        // Fix the pair with the largest |rho|; the two varied correlations are
        // then as small as possible, which keeps the integrand flat.
        let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
        let (mut pi, mut pj) = pairs[0];
        let mut best = corr.entry(0, 1).abs();
        for &(a, b) in &pairs[1..] {
            let v = corr.entry(a, b).abs();
            if v > best {
                best = v;
                pi = a;
                pj = b;
            }
        }
        let first = 3 - pi - pj;
        let perm = [first, pi, pj];
        let ra = corr.entry(perm[0], perm[1]);
        let rb = corr.entry(perm[0], perm[2]);
        let rc = corr.entry(perm[1], perm[2]);

        let panels = panel_count(ra.abs().max(rb.abs()));
        let mut ctx = TvnContext {
            corr,
            perm,
            ra,
            rb,
            rc,
            nodes_a: Vec::new(),
            nodes_b: Vec::new(),
        };
        if ra != 0.0 {
            ctx.nodes_a = ctx.build_nodes(ra, rb, panels);
        }
        if rb != 0.0 {
            ctx.nodes_b = ctx.build_nodes(rb, ra, panels);
        }
        Ok(ctx)
    }

    pub fn corr(&self) -> Corr3 {
        self.corr
    }

    /// Nodes for one varied pair. `r_pair` is the correlation being swept to
    /// t·r_pair; `r_other` is the other varied correlation (also at t·r_other
    /// along the path); the fixed correlation is `self.rc`.
    fn build_nodes(&self, r_pair: f64, r_other: f64, panels: usize) -> Vec<PathNode> {
        let mut nodes = Vec::with_capacity(panels * GL20_X.len() * 2);
        let width = 1.0 / panels as f64;
        for p in 0..panels {
            let left = p as f64 * width;
            for i in 0..GL20_X.len() {
                for sign in [-1.0, 1.0] {
                    let t = left + width * (sign * GL20_X[i] + 1.0) / 2.0;
                    let gl_w = GL20_W[i] * width / 2.0;

                    let c = t * r_pair;
                    let den = 1.0 - c * c;
                    let o = t * r_other;
                    // Regression of the third variable on the pair (first,
                    // partner) at path point t.
                    let b_first = (o - self.rc * c) / den;
                    let b_partner = (self.rc - o * c) / den;
                    let var = 1.0 - b_first * o - b_partner * self.rc;
                    let s = var.max(5e-16).sqrt();
                    nodes.push(PathNode {
                        c,
                        expo: 1.0 / (2.0 * den),
                        b_first,
                        b_partner,
                        s,
                        w: gl_w * r_pair / (TWO_PI * den.sqrt()),
                    });
                }
            }
        }
        nodes
    }

    /// Path-integral correction for fully finite, clamped, permuted bounds.
    #[inline]
    fn integral(&self, h1: f64, h2: f64, h3: f64) -> f64 {
        let mut acc = 0.0;
        for n in &self.nodes_a {
            let q = (h1 * h1 - 2.0 * n.c * h1 * h2 + h2 * h2) * n.expo;
            if q < 300.0 {
                let u = (h3 - n.b_first * h1 - n.b_partner * h2) / n.s;
                acc += n.w * (-q).exp() * phi(u);
            }
        }
        for n in &self.nodes_b {
            let q = (h1 * h1 - 2.0 * n.c * h1 * h3 + h3 * h3) * n.expo;
            if q < 300.0 {
                let u = (h2 - n.b_first * h1 - n.b_partner * h3) / n.s;
                acc += n.w * (-q).exp() * phi(u);
            }
        }
        acc
    }

    /// Trivariate CDF at permuted, clamped bounds (infinities allowed).
    fn cdf_permuted(&self, h1: f64, h2: f64, h3: f64) -> f64 {
        if h1 == f64::NEG_INFINITY || h2 == f64::NEG_INFINITY || h3 == f64::NEG_INFINITY {
            return 0.0;
        }
        match (h1 == f64::INFINITY, h2 == f64::INFINITY, h3 == f64::INFINITY) {
            (true, true, true) => 1.0,
            (true, true, false) => phi(h3),
            (true, false, true) => phi(h2),
            (false, true, true) => phi(h1),
            (true, false, false) => bvn_upper(-h2, -h3, self.rc),
            (false, true, false) => bvn_upper(-h1, -h3, self.rb),
            (false, false, true) => bvn_upper(-h1, -h2, self.ra),
            (false, false, false) => {
                let base = phi(h1) * bvn_upper(-h2, -h3, self.rc);
                (base + self.integral(h1, h2, h3)).clamp(0.0, 1.0)
            }
        }
    }

    /// P(X1 <= b1, X2 <= b2, X3 <= b3) in the original axis order.
    pub fn cdf(&self, b: [f64; 3]) -> f64 {
        let h = [
            clamp_finite(b[self.perm[0]]),
            clamp_finite(b[self.perm[1]]),
            clamp_finite(b[self.perm[2]]),
        ];
        self.cdf_permuted(h[0], h[1], h[2])
    }

    /// P(lower < X <= upper) componentwise, by inclusion–exclusion over the
    /// eight corner CDFs. Bounds may be ±infinity. Tiny negative assembly
    /// residue (>= −1e-12) is clamped to zero; anything more negative is
    /// reported as an error because it indicates a bug rather than rounding.
    pub fn rectangle(&self, lower: [f64; 3], upper: [f64; 3]) -> Result<f64> {
        for axis in 0..3 {
            ensure_bound(lower[axis])?;
            ensure_bound(upper[axis])?;
            if !(lower[axis] < upper[axis]) {
                return Err(Error::InvalidCell {
                    axis,
                    lower: lower[axis],
                    upper: upper[axis],
                });
            }
        }
        Ok(self.rectangle_unchecked(lower, upper))
    }

    /// Rectangle probability without argument validation; used by the
    /// likelihood hot path where bounds are valid by construction. Negative
    /// residue is clamped here unconditionally.
    pub(crate) fn rectangle_unchecked(&self, lower: [f64; 3], upper: [f64; 3]) -> f64 {
        // Permute once, then share Φ(h1) and the bivariate (h2, h3) corner
        // values across the eight corners.
        let lo = [
            clamp_finite(lower[self.perm[0]]),
            clamp_finite(lower[self.perm[1]]),
            clamp_finite(lower[self.perm[2]]),
        ];
        let hi = [
            clamp_finite(upper[self.perm[0]]),
            clamp_finite(upper[self.perm[1]]),
            clamp_finite(upper[self.perm[2]]),
        ];

        // bit == 0 selects the upper bound, bit == 1 the lower bound.
        let bound = |axis: usize, bit: usize| if bit == 0 { hi[axis] } else { lo[axis] };

        let mut phi1 = [0.0f64; 2];
        for (bit, slot) in phi1.iter_mut().enumerate() {
            let h = bound(0, bit);
            *slot = if h == f64::NEG_INFINITY {
                0.0
            } else if h == f64::INFINITY {
                1.0
            } else {
                phi(h)
            };
        }
        let mut bvn23 = [[0.0f64; 2]; 2];
        for b2 in 0..2 {
            for b3 in 0..2 {
                bvn23[b2][b3] = {
                    let h2 = bound(1, b2);
                    let h3 = bound(2, b3);
                    if h2 == f64::NEG_INFINITY || h3 == f64::NEG_INFINITY {
                        0.0
                    } else {
                        bvn_upper(-h2, -h3, self.rc)
                    }
                };
            }
        }

        let mut total = 0.0;
        for mask in 0..8usize {
            let b1 = mask & 1;
            let b2 = (mask >> 1) & 1;
            let b3 = (mask >> 2) & 1;
            let h1 = bound(0, b1);
            let h2 = bound(1, b2);
            let h3 = bound(2, b3);
            if h1 == f64::NEG_INFINITY || h2 == f64::NEG_INFINITY || h3 == f64::NEG_INFINITY {
                continue;
            }
            let corner = match (h1 == f64::INFINITY, h2 == f64::INFINITY, h3 == f64::INFINITY) {
                (true, true, true) => 1.0,
                (true, true, false) => phi(h3),
                (true, false, true) => phi(h2),
                (false, true, true) => phi1[b1],
                (true, false, false) => bvn23[b2][b3],
                (false, true, false) => bvn_upper(-h1, -h3, self.rb),
                (false, false, true) => bvn_upper(-h1, -h2, self.ra),
                (false, false, false) => {
                    (phi1[b1] * bvn23[b2][b3] + self.integral(h1, h2, h3)).clamp(0.0, 1.0)
                }
            };
            if mask.count_ones() % 2 == 0 {
                total += corner;
            } else {
                total -= corner;
            }
        }
        total.clamp(0.0, 1.0)
    }
}

/// P(X1 <= b1, X2 <= b2, X3 <= b3) for standard trivariate normals with
/// correlation structure `r`. Finite bounds of magnitude <= 8 are resolved to
/// an absolute accuracy better than 1e-8; an infinite upper bound reduces
/// exactly to the corresponding bivariate CDF.
pub fn tvn_cdf(b1: f64, b2: f64, b3: f64, r: Corr3) -> Result<f64> {
    ensure_bound(b1)?;
    ensure_bound(b2)?;
    ensure_bound(b3)?;
    if b1 == f64::INFINITY {
        return bvn_cdf(b2, b3, r.r23);
    }
    if b2 == f64::INFINITY {
        return bvn_cdf(b1, b3, r.r13);
    }
    if b3 == f64::INFINITY {
        return bvn_cdf(b1, b2, r.r12);
    }
    let ctx = TvnContext::new(r)?;
    Ok(ctx.cdf([b1, b2, b3]))
}

/// P(lower < X <= upper) for a trivariate standard normal vector, assembled
/// by inclusion–exclusion over the eight corner CDFs.
pub fn rectangle_prob(lower: [f64; 3], upper: [f64; 3], r: Corr3) -> Result<f64> {
    let ctx = TvnContext::new(r)?;
    // Detect genuinely negative assembly results (beyond rounding residue)
    // before the hot-path clamp hides them.
    for axis in 0..3 {
        ensure_bound(lower[axis])?;
        ensure_bound(upper[axis])?;
        if !(lower[axis] < upper[axis]) {
            return Err(Error::InvalidCell {
                axis,
                lower: lower[axis],
                upper: upper[axis],
            });
        }
    }
    let raw = rectangle_raw(&ctx, lower, upper);
    if raw < NEGATIVE_RESIDUE {
        return Err(Error::Numerical(format!(
            "rectangle probability {raw} below the rounding-residue tolerance"
        )));
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// Unclamped inclusion–exclusion sum used to distinguish rounding residue
/// from assembly bugs.
fn rectangle_raw(ctx: &TvnContext, lower: [f64; 3], upper: [f64; 3]) -> f64 {
    let mut total = 0.0;
    for mask in 0..8usize {
        let pick = |axis: usize| {
            if mask & (1 << axis) != 0 {
                lower[axis]
            } else {
                upper[axis]
            }
        };
        let corner = ctx.cdf([pick(0), pick(1), pick(2)]);
        if mask.count_ones() % 2 == 0 {
            total += corner;
        } else {
            total -= corner;
        }
    }
    total
}
