//! Probability measures with sampling, log-density evaluation and the
//! divergences consumed by the bounds and couplings.
//!
//! Densities are taken with respect to counting measure on finite spaces and
//! Lebesgue measure on `R^d`. Measures are immutable; randomness always comes
//! from an explicit [`RngStream`].

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods under no_std
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::point::Point;
use crate::quadrature::integrate_real_line;
use crate::rng::RngStream;
use crate::special::{
    ln_gamma, log_sum_exp, normal_cdf, student_t_log_kernel, student_t_log_norm, LN_2PI,
};

const SUM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleSpace {
    Discrete(usize),
    Continuous(usize),
}

/// Probability vector over `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Finite {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl Finite {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("finite measure needs at least one state"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid(
                "finite probabilities must be finite and nonnegative",
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(invalid("finite probabilities must sum to 1"));
        }
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        Ok(Self { probs, cdf })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn sample_state(&self, rng: &mut RngStream) -> usize {
        let u: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        let idx = self.cdf.partition_point(|&c| c <= u);
        if idx < self.probs.len() {
            idx
        } else {
            // rounding at the top end: last state with positive mass
            self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
        }
    }
}

/// Product Gaussian with diagonal covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianDiag {
    mean: Vec<f64>,
    var: Vec<f64>,
    sd: Vec<f64>,
    log_norm: f64,
}

impl GaussianDiag {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != var.len() {
            return Err(invalid(
                "gaussian mean and variance must be nonempty and equal length",
            ));
        }
        if var.iter().any(|v| !(v.is_finite() && *v > 0.0)) || mean.iter().any(|m| !m.is_finite()) {
            return Err(invalid(
                "gaussian variances must be > 0 and parameters finite",
            ));
        }
        let sd = var.iter().map(|v| v.sqrt()).collect();
        let log_norm = -0.5 * var.iter().map(|v| LN_2PI + v.ln()).sum::<f64>();
        Ok(Self {
            mean,
            var,
            sd,
            log_norm,
        })
    }

    pub fn isotropic(mean: Vec<f64>, var: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, vec![var; d])
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn var(&self) -> &[f64] {
        &self.var
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    #[inline]
    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let mut q = 0.0;
        for ((xi, mi), vi) in x.iter().zip(&self.mean).zip(&self.var) {
            let z = xi - mi;
            q += z * z / vi;
        }
        self.log_norm - 0.5 * q
    }

    pub fn sample_vec(&self, rng: &mut RngStream) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.sd)
            .map(|(m, s)| {
                let z: f64 = StandardNormal.sample(rng);
                m + s * z
            })
            .collect()
    }
}

/// `shift + Exp(1)` on the real line.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedExponential {
    shift: f64,
}

impl ShiftedExponential {
    pub fn new(shift: f64) -> Result<Self> {
        if !shift.is_finite() {
            return Err(invalid("shift must be finite"));
        }
        Ok(Self { shift })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if x >= self.shift {
            -(x - self.shift)
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// How a `d`-dimensional Student-t is formed from the 1-D law.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TForm {
    /// Independent Student-t coordinates.
    #[default]
    Product,
    /// Multivariate (elliptical) Student-t: one shared χ² mixing variable.
    Joint,
}

/// Location-scale Student-t on `R^d`, product or joint form.
///
/// Used both as a heavy-tailed target (`df = 1` is Cauchy) and as the
/// random-walk increment law.
#[derive(Clone, Debug, PartialEq)]
pub struct StudentT {
    center: Vec<f64>,
    scale: f64,
    df: f64,
    form: TForm,
    log_norm: f64,
    dist: rand_distr::StudentT<f64>,
    chi2: rand_distr::ChiSquared<f64>,
}

impl StudentT {
    pub fn new(center: Vec<f64>, scale: f64, df: f64) -> Result<Self> {
        Self::with_form(center, scale, df, TForm::Product)
    }

    pub fn with_form(center: Vec<f64>, scale: f64, df: f64, form: TForm) -> Result<Self> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("student-t center must be nonempty and finite"));
        }
        if !(scale.is_finite() && scale > 0.0) || !(df.is_finite() && df > 0.0) {
            return Err(invalid("student-t scale and df must be > 0"));
        }
        let dist = rand_distr::StudentT::new(df).map_err(|e| invalid(e.to_string()))?;
        let chi2 = rand_distr::ChiSquared::new(df).map_err(|e| invalid(e.to_string()))?;
        let d = center.len() as f64;
        let log_norm = match form {
            TForm::Product => d * (student_t_log_norm(df) - scale.ln()),
            TForm::Joint => {
                ln_gamma(0.5 * (df + d))
                    - ln_gamma(0.5 * df)
                    - 0.5 * d * (df * core::f64::consts::PI).ln()
                    - d * scale.ln()
            }
        };
        Ok(Self {
            center,
            scale,
            df,
            form,
            log_norm,
            dist,
            chi2,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn form(&self) -> TForm {
        self.form
    }

    /// Log-density at `x` for a law centred at `center`.
    #[inline]
    pub fn log_pdf_around(&self, center: &[f64], x: &[f64]) -> f64 {
        match self.form {
            TForm::Product => {
                self.log_norm
                    + x.iter()
                        .zip(center)
                        .map(|(xi, ci)| student_t_log_kernel((xi - ci) / self.scale, self.df))
                        .sum::<f64>()
            }
            TForm::Joint => {
                let q: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(xi, ci)| {
                        let z = (xi - ci) / self.scale;
                        z * z
                    })
                    .sum();
                self.log_norm - 0.5 * (self.df + x.len() as f64) * (q / self.df).ln_1p()
            }
        }
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        self.log_pdf_around(&self.center, x)
    }

    pub fn sample_around(&self, center: &[f64], rng: &mut RngStream) -> Vec<f64> {
        match self.form {
            TForm::Product => center
                .iter()
                .map(|c| c + self.scale * self.dist.sample(rng))
                .collect(),
            TForm::Joint => {
                let w: f64 = self.chi2.sample(rng);
                let f = self.scale * (self.df / w).sqrt();
                center
                    .iter()
                    .map(|c| {
                        let z: f64 = StandardNormal.sample(rng);
                        c + f * z
                    })
                    .collect()
            }
        }
    }
}

/// Two-dimensional banana:
/// `x1 ~ N(0, σ1²)`, `x2 + b (x1² − σ1²) ~ N(0, σ2²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Banana {
    pub sigma1: f64,
    pub sigma2: f64,
    pub b: f64,
}

impl Banana {
    pub fn new(sigma1: f64, sigma2: f64, b: f64) -> Result<Self> {
        if !(sigma1 > 0.0
            && sigma2 > 0.0
            && sigma1.is_finite()
            && sigma2.is_finite()
            && b.is_finite())
        {
            return Err(invalid("banana needs σ1, σ2 > 0 and finite b"));
        }
        Ok(Self { sigma1, sigma2, b })
    }

    fn residual(&self, x: &[f64]) -> f64 {
        x[1] + self.b * (x[0] * x[0] - self.sigma1 * self.sigma1)
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        -0.5 * x[0] * x[0] / (self.sigma1 * self.sigma1)
            - 0.5 * r * r / (self.sigma2 * self.sigma2)
            - LN_2PI
            - (self.sigma1 * self.sigma2).ln()
    }

    pub fn grad(&self, x: &[f64]) -> [f64; 2] {
        let (s1, s2, b) = (self.sigma1 * self.sigma1, self.sigma2 * self.sigma2, self.b);
        let r = self.residual(x);
        [-x[0] / s1 - r * 2.0 * b * x[0] / s2, -r / s2]
    }

    /// Hessian of the log-density, row-major.
    pub fn hessian(&self, x: &[f64]) -> [f64; 4] {
        let (s1, s2, b) = (self.sigma1 * self.sigma1, self.sigma2 * self.sigma2, self.b);
        let r = self.residual(x);
        let h11 = -1.0 / s1 - 4.0 * b * b * x[0] * x[0] / s2 - 2.0 * b * r / s2;
        let h12 = -2.0 * b * x[0] / s2;
        let h22 = -1.0 / s2;
        [h11, h12, h12, h22]
    }

    pub fn sample_vec(&self, rng: &mut RngStream) -> Vec<f64> {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let x1 = self.sigma1 * z1;
        let x2 = self.sigma2 * z2 - self.b * (x1 * x1 - self.sigma1 * self.sigma1);
        vec![x1, x2]
    }
}

/// Uniform law on an axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
    log_density: f64,
}

impl UniformBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty()
            || lo.len() != hi.len()
            || lo
                .iter()
                .zip(&hi)
                .any(|(a, b)| !(a < b) || !b.is_finite() || !a.is_finite())
        {
            return Err(invalid("uniform box needs finite lo < hi per coordinate"));
        }
        let log_density = -lo.iter().zip(&hi).map(|(a, b)| (b - a).ln()).sum::<f64>();
        Ok(Self {
            lo,
            hi,
            log_density,
        })
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let inside = x
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= *a && *v <= *b);
        if inside {
            self.log_density
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Finite mixture over a common sample space.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    components: Vec<Measure>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    cdf: Vec<f64>,
}

impl Mixture {
    pub fn new(components: Vec<Measure>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(invalid("mixture needs one weight per component"));
        }
        let space = components[0].space();
        if components.iter().any(|c| c.space() != space) {
            return Err(Error::SpaceMismatch(
                "mixture components on different spaces".into(),
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("mixture weights must be nonnegative"));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
            return Err(invalid("mixture weights must sum to 1"));
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cdf.push(acc);
        }
        Ok(Self {
            components,
            weights,
            log_weights,
            cdf,
        })
    }

    pub fn components(&self) -> &[Measure] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn pick(&self, rng: &mut RngStream) -> usize {
        let u: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        let idx = self.cdf.partition_point(|&c| c <= u);
        if idx < self.weights.len() {
            idx
        } else {
            self.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Measure {
    Finite(Finite),
    GaussianDiag(GaussianDiag),
    ShiftedExponential(ShiftedExponential),
    StudentT(StudentT),
    Banana(Banana),
    UniformBox(UniformBox),
    Mixture(Mixture),
}

impl Measure {
    pub fn finite(probs: Vec<f64>) -> Result<Self> {
        Finite::new(probs).map(Measure::Finite)
    }

    pub fn gaussian(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        GaussianDiag::new(mean, var).map(Measure::GaussianDiag)
    }

    pub fn shifted_exponential(shift: f64) -> Result<Self> {
        ShiftedExponential::new(shift).map(Measure::ShiftedExponential)
    }

    pub fn student_t(center: Vec<f64>, scale: f64, df: f64) -> Result<Self> {
        StudentT::new(center, scale, df).map(Measure::StudentT)
    }

    pub fn student_t_form(center: Vec<f64>, scale: f64, df: f64, form: TForm) -> Result<Self> {
        StudentT::with_form(center, scale, df, form).map(Measure::StudentT)
    }

    pub fn banana(sigma1: f64, sigma2: f64, b: f64) -> Result<Self> {
        Banana::new(sigma1, sigma2, b).map(Measure::Banana)
    }

    pub fn uniform_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        UniformBox::new(lo, hi).map(Measure::UniformBox)
    }

    pub fn mixture(components: Vec<Measure>, weights: Vec<f64>) -> Result<Self> {
        Mixture::new(components, weights).map(Measure::Mixture)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Measure::Finite(_) => "finite",
            Measure::GaussianDiag(_) => "gaussian-diag",
            Measure::ShiftedExponential(_) => "shifted-exponential",
            Measure::StudentT(_) => "student-t-walk",
            Measure::Banana(_) => "banana",
            Measure::UniformBox(_) => "uniform-box",
            Measure::Mixture(_) => "mixture",
        }
    }

    pub fn space(&self) -> SampleSpace {
        match self {
            Measure::Finite(f) => SampleSpace::Discrete(f.len()),
            Measure::GaussianDiag(g) => SampleSpace::Continuous(g.dim()),
            Measure::ShiftedExponential(_) => SampleSpace::Continuous(1),
            Measure::StudentT(t) => SampleSpace::Continuous(t.center.len()),
            Measure::Banana(_) => SampleSpace::Continuous(2),
            Measure::UniformBox(u) => SampleSpace::Continuous(u.lo.len()),
            Measure::Mixture(m) => m.components[0].space(),
        }
    }

    /// Natural-log density; `-inf` off the support.
    pub fn log_density(&self, x: &Point) -> Result<f64> {
        match (self.space(), x) {
            (SampleSpace::Discrete(n), Point::State(s)) => {
                if *s >= n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: *s + 1,
                    });
                }
                Ok(self.log_density_state(*s))
            }
            (SampleSpace::Continuous(d), Point::Vector(v)) => {
                if v.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: v.len(),
                    });
                }
                Ok(self.log_density_vec(v))
            }
            _ => Err(Error::SpaceMismatch(
                "point kind does not match sample space".into(),
            )),
        }
    }

    /// Log-density at a state of a discrete measure (`-inf` for continuous kinds).
    pub fn log_density_state(&self, s: usize) -> f64 {
        match self {
            Measure::Finite(f) => f.probs.get(s).map_or(f64::NEG_INFINITY, |p| p.ln()),
            Measure::Mixture(m) => log_sum_exp(
                m.log_weights
                    .iter()
                    .zip(&m.components)
                    .map(|(lw, c)| lw + c.log_density_state(s)),
            ),
            _ => f64::NEG_INFINITY,
        }
    }

    /// Log-density of a continuous measure; the caller guarantees the dimension.
    pub fn log_density_vec(&self, x: &[f64]) -> f64 {
        match self {
            Measure::GaussianDiag(g) => g.log_pdf(x),
            Measure::ShiftedExponential(e) => e.log_pdf(x[0]),
            Measure::StudentT(t) => t.log_pdf(x),
            Measure::Banana(b) => b.log_pdf(x),
            Measure::UniformBox(u) => u.log_pdf(x),
            Measure::Mixture(m) => log_sum_exp(
                m.log_weights
                    .iter()
                    .zip(&m.components)
                    .map(|(lw, c)| lw + c.log_density_vec(x)),
            ),
            Measure::Finite(_) => f64::NEG_INFINITY,
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Point {
        match self {
            Measure::Finite(f) => Point::State(f.sample_state(rng)),
            Measure::Mixture(m) => m.components[m.pick(rng)].sample(rng),
            _ => Point::Vector(self.sample_vec(rng)),
        }
    }

    /// Draw from a continuous measure.
    ///
    /// # Panics
    /// On finite measures (or mixtures of them).
    pub fn sample_vec(&self, rng: &mut RngStream) -> Vec<f64> {
        match self {
            Measure::GaussianDiag(g) => g.sample_vec(rng),
            Measure::ShiftedExponential(e) => {
                let z: f64 = Exp1.sample(rng);
                vec![e.shift + z]
            }
            Measure::StudentT(t) => t.sample_around(&t.center, rng),
            Measure::Banana(b) => b.sample_vec(rng),
            Measure::UniformBox(u) => {
                u.lo.iter()
                    .zip(&u.hi)
                    .map(|(a, b)| a + (b - a) * rng.random::<f64>())
                    .collect()
            }
            Measure::Mixture(m) => m.components[m.pick(rng)].sample_vec(rng),
            Measure::Finite(_) => panic!("sample_vec on a finite measure"),
        }
    }

    /// Gradient and row-major Hessian of the log-density, where analytic.
    pub fn log_density_derivatives(&self, x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Measure::GaussianDiag(g) => {
                let d = g.dim();
                let grad = x
                    .iter()
                    .zip(&g.mean)
                    .zip(&g.var)
                    .map(|((xi, mi), vi)| -(xi - mi) / vi)
                    .collect();
                let mut h = vec![0.0; d * d];
                for i in 0..d {
                    h[i * d + i] = -1.0 / g.var[i];
                }
                Some((grad, h))
            }
            Measure::Banana(b) => Some((b.grad(x).to_vec(), b.hessian(x).to_vec())),
            _ => None,
        }
    }

    /// Points where a 1-D density has a jump, kink or most of its mass;
    /// used to split quadrature.
    pub fn breakpoints_1d(&self) -> Vec<f64> {
        match self {
            Measure::GaussianDiag(g) => {
                let (m, s) = (g.mean[0], g.sd[0]);
                vec![m - 8.0 * s, m - s, m, m + s, m + 8.0 * s]
            }
            Measure::ShiftedExponential(e) => vec![e.shift, e.shift + 1.0, e.shift + 10.0],
            Measure::StudentT(t) => {
                let (c, s) = (t.center[0], t.scale);
                vec![c - 10.0 * s, c - s, c, c + s, c + 10.0 * s]
            }
            Measure::UniformBox(u) => vec![u.lo[0], u.hi[0]],
            Measure::Mixture(m) => m
                .components
                .iter()
                .flat_map(|c| c.breakpoints_1d())
                .collect(),
            Measure::Finite(_) | Measure::Banana(_) => Vec::new(),
        }
    }
}

/// Random sparse law on `n_states` states: `support` distinct states chosen
/// uniformly, with Dirichlet(1, …, 1) weights.
pub fn random_sparse_finite(
    n_states: usize,
    support: usize,
    rng: &mut RngStream,
) -> Result<Measure> {
    if support == 0 || support > n_states {
        return Err(invalid("need 1 <= support <= n_states"));
    }
    let states = rand::seq::index::sample(rng, n_states, support);
    let w: Vec<f64> = (0..support).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    let mut probs = vec![0.0; n_states];
    for (s, wi) in states.iter().zip(&w) {
        probs[s] = wi / total;
    }
    Measure::finite(probs)
}

/// `½ Σ |p − q|` for finite measures of equal size.
pub fn tv_finite(p: &Measure, q: &Measure) -> Result<f64> {
    let (p, q) = finite_pair(p, q, "tv_finite")?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

fn finite_pair<'a>(
    p: &'a Measure,
    q: &'a Measure,
    op: &'static str,
) -> Result<(&'a [f64], &'a [f64])> {
    match (p, q) {
        (Measure::Finite(a), Measure::Finite(b)) => {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch {
                    expected: a.len(),
                    got: b.len(),
                });
            }
            Ok((&a.probs, &b.probs))
        }
        (Measure::Finite(_), other) | (other, _) => Err(Error::UnsupportedKind {
            op,
            kind: other.kind(),
        }),
    }
}

/// Total variation between `N(m1, σ²I)` and `N(m2, σ²I)`: `2Φ(‖m1−m2‖/2σ) − 1`.
pub fn tv_gaussian_shared_cov(mean1: &[f64], mean2: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(invalid("sigma must be > 0"));
    }
    if mean1.len() != mean2.len() {
        return Err(Error::DimensionMismatch {
            expected: mean1.len(),
            got: mean2.len(),
        });
    }
    let dist = mean1
        .iter()
        .zip(mean2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(2.0 * normal_cdf(dist / (2.0 * sigma)) - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HockeyScheme {
    ExactFinite,
    /// Adaptive Simpson over the real line, absolute tolerance `1e-8`.
    Quadrature1d,
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

/// A computed quantity with its standard error (zero for exact schemes).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

pub const QUADRATURE_TOL: f64 = 1e-8;

/// Hockey-stick divergence `E_m(p‖q) = ∫ (p − m q)₊`.
pub fn hockey_stick(p: &Measure, q: &Measure, m: f64, scheme: HockeyScheme) -> Result<Estimate> {
    if !(m >= 1.0) {
        return Err(invalid("hockey-stick order must be >= 1"));
    }
    if p.space() != q.space() {
        return Err(Error::SpaceMismatch(
            "hockey_stick arguments on different spaces".into(),
        ));
    }
    match scheme {
        HockeyScheme::ExactFinite => {
            let SampleSpace::Discrete(n) = p.space() else {
                return Err(Error::UnsupportedKind {
                    op: "hockey_stick(exact-finite)",
                    kind: p.kind(),
                });
            };
            let value = (0..n)
                .map(|s| (p.log_density_state(s).exp() - m * q.log_density_state(s).exp()).max(0.0))
                .sum();
            Ok(Estimate { value, se: 0.0 })
        }
        HockeyScheme::Quadrature1d => {
            if p.space() != SampleSpace::Continuous(1) {
                return Err(Error::UnsupportedKind {
                    op: "hockey_stick(quadrature-1d)",
                    kind: p.kind(),
                });
            }
            let mut bps = p.breakpoints_1d();
            bps.extend(q.breakpoints_1d());
            let value = integrate_real_line(
                |x| {
                    let pv = p.log_density_vec(&[x]).exp();
                    if pv == 0.0 {
                        return 0.0;
                    }
                    (pv - m * q.log_density_vec(&[x]).exp()).max(0.0)
                },
                &bps,
                QUADRATURE_TOL,
            );
            Ok(Estimate { value, se: 0.0 })
        }
        HockeyScheme::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(invalid("monte-carlo hockey-stick needs samples >= 1"));
            }
            let mut rng = RngStream::new(seed);
            let lm = m.ln();
            let vals: Vec<f64> = (0..samples)
                .map(|_| {
                    let x = p.sample(&mut rng);
                    let lp = p.log_density(&x).unwrap_or(f64::NEG_INFINITY);
                    if lp == f64::NEG_INFINITY {
                        return 0.0;
                    }
                    let lq = q.log_density(&x).unwrap_or(f64::NEG_INFINITY);
                    (1.0 - (lm + lq - lp).exp()).max(0.0)
                })
                .collect();
            let (value, se) = crate::stats::mean_se(&vals);
            Ok(Estimate { value, se })
        }
    }
}

/// Picks the exact scheme the measure kinds allow.
pub fn default_scheme(p: &Measure) -> Option<HockeyScheme> {
    match p.space() {
        SampleSpace::Discrete(_) => Some(HockeyScheme::ExactFinite),
        SampleSpace::Continuous(1) => Some(HockeyScheme::Quadrature1d),
        _ => None,
    }
}

/// Mixture `Σ w_j P^j` (uniform weights by default). The density ratio
/// `dP^i/dμ` is then at most `1/w_i`.
pub fn barycenter(ms: &[Measure], weights: Option<&[f64]>) -> Result<Measure> {
    if ms.is_empty() {
        return Err(invalid("barycenter of an empty list"));
    }
    let w = match weights {
        Some(w) => w.to_vec(),
        None => vec![1.0 / ms.len() as f64; ms.len()],
    };
    Measure::mixture(ms.to_vec(), w)
}

/// `ln dP^i/dμ(x)` for a mixture `μ` and its `i`-th component.
pub fn component_log_ratio(mix: &Mixture, i: usize, x: &Point) -> Result<f64> {
    let lp = mix.components[i].log_density(x)?;
    if lp == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let terms: Vec<f64> = mix
        .components
        .iter()
        .zip(&mix.log_weights)
        .map(|(c, lw)| c.log_density(x).map(|l| l + lw))
        .collect::<Result<_>>()?;
    Ok(lp - log_sum_exp(terms))
}
