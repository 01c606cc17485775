//! Metropolis–Hastings kernels and the lifted proposal–acceptance laws
//! `P'(dy, du) = k(y|x) dy · Ber(α(x, y))(du)` scored by the coupled kernels.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods under no_std
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::couplings::Law;
use crate::error::{invalid, Error, Result};
use crate::linalg::{mat_vec, quad_form, recompose, sym_eigen};
use crate::measures::{Measure, SampleSpace, StudentT, TForm};
use crate::rng::RngStream;
use crate::special::{log1m_exp, LN_2PI};

/// Eigenvalue floor of the regularized RMALA metric.
pub const METRIC_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub enum ProposalKernel {
    /// `y = x + σ z`, `z ~ N(0, I)`.
    RwGaussian { sigma: f64 },
    /// `y = x + σ t` with Student-t increments (product or joint form).
    RwStudentT { sigma: f64, df: f64, form: TForm },
    /// `y ~ N(x + (σ²/2) G̃⁻¹∇log π, σ² G̃⁻¹)` with `G̃` the regularized
    /// negative Hessian of `log π`.
    Rmala { sigma: f64 },
}

/// Scale rule `2.4/√d` for random-walk proposals.
pub fn default_rw_scale(d: usize) -> f64 {
    2.4 / (d as f64).sqrt()
}

impl ProposalKernel {
    pub fn rw_gaussian(sigma: f64) -> Result<Self> {
        check_pos(sigma, "σ")?;
        Ok(Self::RwGaussian { sigma })
    }

    pub fn rw_student_t_form(sigma: f64, df: f64, form: TForm) -> Result<Self> {
        check_pos(sigma, "σ")?;
        check_pos(df, "df")?;
        Ok(Self::RwStudentT { sigma, df, form })
    }

    /// Joint (elliptical) increments, the default walk.
    pub fn rw_student_t(sigma: f64, df: f64) -> Result<Self> {
        Self::rw_student_t_form(sigma, df, TForm::Joint)
    }

    pub fn rmala(sigma: f64) -> Result<Self> {
        check_pos(sigma, "σ")?;
        Ok(Self::Rmala { sigma })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::RwGaussian { .. } => "rw-gaussian",
            Self::RwStudentT { .. } => "rw-student-t",
            Self::Rmala { .. } => "rmala",
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, Self::Rmala { .. })
    }

    /// Proposal law `k(·|x)`, with whatever per-state work it needs done once.
    pub fn at(&self, target: &Measure, x: &[f64]) -> Result<KernelAt> {
        let d = x.len();
        let shape = match *self {
            Self::RwGaussian { sigma } => Shape::Gauss {
                sigma,
                log_norm: -0.5 * d as f64 * (LN_2PI + 2.0 * sigma.ln()),
            },
            Self::RwStudentT { sigma, df, form } => {
                Shape::StudentT(StudentT::with_form(x.to_vec(), sigma, df, form)?)
            }
            Self::Rmala { sigma } => {
                let m = rmala_metric(target, x, sigma)?;
                return Ok(KernelAt {
                    center: m.mean,
                    shape: Shape::Full {
                        precision: m.precision,
                        factor: m.factor,
                        log_norm: m.log_norm,
                    },
                });
            }
        };
        Ok(KernelAt {
            center: x.to_vec(),
            shape,
        })
    }
}

fn check_pos(v: f64, name: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(alloc::format!("{name} must be finite and > 0")))
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Gauss {
        sigma: f64,
        log_norm: f64,
    },
    StudentT(StudentT),
    /// Gaussian with full precision matrix and a sampling factor `L` (`L Lᵀ = Σ`).
    Full {
        precision: Vec<f64>,
        factor: Vec<f64>,
        log_norm: f64,
    },
}

/// Proposal law `k(·|x)` at one state.
#[derive(Clone, Debug)]
pub struct KernelAt {
    center: Vec<f64>,
    shape: Shape,
}

impl KernelAt {
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    #[inline]
    pub fn log_density(&self, y: &[f64]) -> f64 {
        match &self.shape {
            Shape::Gauss { sigma, log_norm } => {
                let mut q = 0.0;
                for (a, b) in y.iter().zip(&self.center) {
                    let z = a - b;
                    q += z * z;
                }
                log_norm - 0.5 * q / (sigma * sigma)
            }
            Shape::StudentT(t) => t.log_pdf(y),
            Shape::Full {
                precision,
                log_norm,
                ..
            } => {
                let z: Vec<f64> = y.iter().zip(&self.center).map(|(a, b)| a - b).collect();
                log_norm - 0.5 * quad_form(precision, &z, z.len())
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        match &self.shape {
            Shape::Gauss { sigma, .. } => self
                .center
                .iter()
                .map(|c| {
                    let z: f64 = StandardNormal.sample(rng);
                    c + sigma * z
                })
                .collect(),
            Shape::StudentT(t) => t.sample_around(&self.center, rng),
            Shape::Full { factor, .. } => {
                let n = self.center.len();
                let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                let lz = mat_vec(factor, &z, n);
                self.center.iter().zip(lz).map(|(c, v)| c + v).collect()
            }
        }
    }
}

impl Law for KernelAt {
    type Value = Vec<f64>;
    fn log_density(&self, v: &Vec<f64>) -> f64 {
        KernelAt::log_density(self, v)
    }
    fn draw(&self, rng: &mut RngStream) -> Vec<f64> {
        self.sample(rng)
    }
}

/// Position-dependent RMALA proposal pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct RmalaMetric {
    /// Regularized metric `G̃` (row-major).
    pub metric: Vec<f64>,
    /// `(σ²/2) G̃⁻¹ ∇log π(x)`.
    pub mean_shift: Vec<f64>,
    /// Proposal mean `x + mean_shift`.
    pub mean: Vec<f64>,
    /// `G̃ / σ²`.
    pub precision: Vec<f64>,
    /// `σ V Λ^{-1/2}`, so `factor · factorᵀ = σ² G̃⁻¹`.
    pub factor: Vec<f64>,
    /// Gaussian log-normalizer `½ ln det(precision) − (d/2) ln 2π`.
    pub log_norm: f64,
}

/// Metric `G = −∇² log π(x)` with eigenvalues replaced by `max(|λ|, 1e-3)`.
pub fn rmala_metric(target: &Measure, x: &[f64], sigma: f64) -> Result<RmalaMetric> {
    let (grad, hess) = target
        .log_density_derivatives(x)
        .ok_or(Error::UnsupportedKind {
            op: "rmala_metric",
            kind: target.kind(),
        })?;
    if hess.iter().chain(&grad).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("target gradient or Hessian"));
    }
    let n = x.len();
    let neg: Vec<f64> = hess.iter().map(|h| -h).collect();
    let (vals, vecs) = sym_eigen(&neg, n);
    let lam: Vec<f64> = vals.iter().map(|l| l.abs().max(METRIC_FLOOR)).collect();
    let metric = recompose(&vecs, &lam, n);
    let inv = recompose(&vecs, &lam.iter().map(|l| 1.0 / l).collect::<Vec<_>>(), n);
    let s2 = sigma * sigma;
    let mean_shift: Vec<f64> = mat_vec(&inv, &grad, n)
        .into_iter()
        .map(|v| 0.5 * s2 * v)
        .collect();
    let mean = x.iter().zip(&mean_shift).map(|(a, b)| a + b).collect();
    let precision = metric.iter().map(|g| g / s2).collect();
    let mut factor = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            factor[i * n + k] = sigma * vecs[i * n + k] / lam[k].sqrt();
        }
    }
    let log_det_prec: f64 = lam.iter().map(|l| (l / s2).ln()).sum();
    let log_norm = 0.5 * log_det_prec - 0.5 * n as f64 * LN_2PI;
    Ok(RmalaMetric {
        metric,
        mean_shift,
        mean,
        precision,
        factor,
        log_norm,
    })
}

/// A chain state with its cached target log-density and proposal law.
#[derive(Clone, Debug)]
pub struct LiftedState {
    pub x: Vec<f64>,
    pub log_pi: f64,
    pub kernel: KernelAt,
}

impl LiftedState {
    pub fn new(target: &Measure, proposal: &ProposalKernel, x: Vec<f64>) -> Result<Self> {
        match target.space() {
            SampleSpace::Continuous(d) if d == x.len() => {}
            SampleSpace::Continuous(d) => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: x.len(),
                })
            }
            SampleSpace::Discrete(_) => {
                return Err(Error::UnsupportedKind {
                    op: "mh",
                    kind: target.kind(),
                })
            }
        }
        let log_pi = target.log_density_vec(&x);
        if log_pi == f64::NEG_INFINITY || log_pi.is_nan() {
            return Err(Error::NullState);
        }
        let kernel = proposal.at(target, &x)?;
        Ok(Self { x, log_pi, kernel })
    }

    /// `ln α(x, y)` given `ln π(y)`; `reverse` is `k(·|y)` for asymmetric kernels.
    #[inline]
    pub fn log_alpha(&self, y: &[f64], log_pi_y: f64, reverse: Option<&KernelAt>) -> f64 {
        if log_pi_y == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let mut r = log_pi_y - self.log_pi;
        if let Some(rev) = reverse {
            r += rev.log_density(&self.x) - self.kernel.log_density(y);
        }
        r.min(0.0)
    }

    /// `ln k(y|x) + ln Ber(α(x,y))(u)`.
    #[inline]
    pub fn lifted_log_density_with(
        &self,
        y: &[f64],
        u: bool,
        log_pi_y: f64,
        reverse: Option<&KernelAt>,
    ) -> f64 {
        let la = self.log_alpha(y, log_pi_y, reverse);
        self.kernel.log_density(y) + if u { la } else { log1m_exp(la) }
    }
}

/// Cached reverse proposal law `k(·|y)` when the kernel is not symmetric.
pub fn reverse_kernel(
    target: &Measure,
    proposal: &ProposalKernel,
    y: &[f64],
) -> Result<Option<KernelAt>> {
    if proposal.is_symmetric() {
        Ok(None)
    } else {
        proposal.at(target, y).map(Some)
    }
}

/// MH acceptance probability `min{1, π(y)k(x|y) / (π(x)k(y|x))}`.
pub fn accept_prob(
    x: &[f64],
    y: &[f64],
    target: &Measure,
    proposal: &ProposalKernel,
) -> Result<f64> {
    let st = LiftedState::new(target, proposal, x.to_vec())?;
    let lpy = target.log_density_vec(y);
    let rev = if lpy == f64::NEG_INFINITY {
        None
    } else {
        reverse_kernel(target, proposal, y)?
    };
    Ok(st.log_alpha(y, lpy, rev.as_ref()).exp())
}

/// `ln P'(y, u)` for the chain at `state`.
pub fn lifted_log_density(
    state: &LiftedState,
    target: &Measure,
    proposal: &ProposalKernel,
    y: &[f64],
    u: bool,
) -> Result<f64> {
    let lpy = target.log_density_vec(y);
    let rev = if lpy == f64::NEG_INFINITY {
        None
    } else {
        reverse_kernel(target, proposal, y)?
    };
    Ok(state.lifted_log_density_with(y, u, lpy, rev.as_ref()))
}

/// `y` if `u` else `x`, as an exact copy.
pub fn apply_update(x: &[f64], y: &[f64], u: bool) -> Vec<f64> {
    if u {
        y.to_vec()
    } else {
        x.to_vec()
    }
}

/// One Metropolis–Hastings transition.
pub fn mh_step(
    state: &LiftedState,
    target: &Measure,
    proposal: &ProposalKernel,
    rng: &mut RngStream,
) -> Result<LiftedState> {
    let y = state.kernel.sample(rng);
    let lpy = target.log_density_vec(&y);
    let rev = if lpy == f64::NEG_INFINITY {
        None
    } else {
        reverse_kernel(target, proposal, &y)?
    };
    let la = state.log_alpha(&y, lpy, rev.as_ref());
    let u: f64 = rng.random();
    if u.ln() < la {
        let kernel = match rev {
            Some(k) => k,
            None => proposal.at(target, &y)?,
        };
        Ok(LiftedState {
            x: y,
            log_pi: lpy,
            kernel,
        })
    } else {
        Ok(state.clone())
    }
}

/// A lifted value `(y, u)` with `ln π(y)` and the reverse kernel cached.
#[derive(Clone, Debug)]
pub struct LiftedValue {
    pub y: Vec<f64>,
    pub u: bool,
    pub log_pi_y: f64,
    pub reverse: Option<KernelAt>,
}

/// `P'` at one chain state as a [`Law`] over `(y, u)`.
pub struct LiftedLaw<'a> {
    pub state: &'a LiftedState,
    pub target: &'a Measure,
    pub proposal: &'a ProposalKernel,
}

impl LiftedLaw<'_> {
    pub fn value_at(&self, y: Vec<f64>, u: bool) -> LiftedValue {
        let log_pi_y = self.target.log_density_vec(&y);
        let reverse = if log_pi_y == f64::NEG_INFINITY || self.proposal.is_symmetric() {
            None
        } else {
            // the metric is finite wherever the target is; fall back to no
            // reverse kernel only if it is not
            self.proposal.at(self.target, &y).ok()
        };
        LiftedValue {
            y,
            u,
            log_pi_y,
            reverse,
        }
    }
}

impl Law for LiftedLaw<'_> {
    type Value = LiftedValue;

    fn log_density(&self, v: &LiftedValue) -> f64 {
        self.state
            .lifted_log_density_with(&v.y, v.u, v.log_pi_y, v.reverse.as_ref())
    }

    fn draw(&self, rng: &mut RngStream) -> LiftedValue {
        let y = self.state.kernel.sample(rng);
        let mut v = self.value_at(y, false);
        let la = self.state.log_alpha(&v.y, v.log_pi_y, v.reverse.as_ref());
        v.u = rng.random::<f64>().ln() < la;
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_real_line;

    fn std_normal() -> Measure {
        Measure::gaussian(vec![0.0], vec![1.0]).unwrap()
    }

    #[test]
    fn accept_prob_examples() {
        let t = std_normal();
        let k = ProposalKernel::rw_gaussian(1.0).unwrap();
        assert_eq!(accept_prob(&[1.0], &[0.0], &t, &k).unwrap(), 1.0);
        assert!((accept_prob(&[0.0], &[1.0], &t, &k).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        let boxed = Measure::uniform_box(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(accept_prob(&[0.5], &[2.0], &boxed, &k).unwrap(), 0.0);
        assert!(matches!(
            accept_prob(&[2.0], &[0.5], &boxed, &k),
            Err(Error::NullState)
        ));
    }

    #[test]
    fn lifted_density_cases() {
        let t = std_normal();
        let k = ProposalKernel::rw_gaussian(1.0).unwrap();
        let st = LiftedState::new(&t, &k, vec![0.0]).unwrap();
        assert_eq!(
            lifted_log_density(&st, &t, &k, &[0.0], false).unwrap(),
            f64::NEG_INFINITY
        );
        let lk = st.kernel.log_density(&[0.0]);
        assert!((lifted_log_density(&st, &t, &k, &[0.0], true).unwrap() - lk).abs() < 1e-15);
        let v = lifted_log_density(&st, &t, &k, &[1.0], true).unwrap();
        assert!((v - (st.kernel.log_density(&[1.0]) - 0.5)).abs() < 1e-14);
    }

    #[test]
    fn lifted_density_normalizes() {
        let t = std_normal();
        for k in [
            ProposalKernel::rw_gaussian(2.4).unwrap(),
            ProposalKernel::rw_student_t(1.3, 2.0).unwrap(),
        ] {
            let st = LiftedState::new(&t, &k, vec![0.7]).unwrap();
            let mut total = 0.0;
            for u in [false, true] {
                total += integrate_real_line(
                    |y| lifted_log_density(&st, &t, &k, &[y], u).unwrap().exp(),
                    &[-30.0, -3.0, 0.0, 0.7, 1.4, 3.0, 30.0],
                    1e-10,
                );
            }
            assert!((total - 1.0).abs() < 1e-6, "{} {total}", k.kind());
        }
    }

    #[test]
    fn apply_update_selects() {
        assert_eq!(apply_update(&[1.0], &[2.0], true), vec![2.0]);
        assert_eq!(apply_update(&[1.0], &[2.0], false), vec![1.0]);
    }

    #[test]
    fn rmala_metric_quadratic_target() {
        let b = Measure::banana(2.0, 1.0, 0.0).unwrap();
        for x in [[0.0, 0.0], [1.5, -2.0]] {
            let m = rmala_metric(&b, &x, 0.4).unwrap();
            let want = [0.25, 0.0, 0.0, 1.0];
            for (a, w) in m.metric.iter().zip(want) {
                assert!((a - w).abs() < 1e-12);
            }
        }
        let b = Measure::banana(2.0, 1.0, 0.05).unwrap();
        let m = rmala_metric(&b, &[0.0, 0.0], 0.4).unwrap();
        let (vals, _) = sym_eigen(&m.metric, 2);
        assert!(vals.iter().all(|&l| l >= METRIC_FLOOR - 1e-15));
        assert!((m.metric[1] - m.metric[2]).abs() < 1e-15);
    }

    #[test]
    fn rmala_kernel_normalizes() {
        let b = Measure::banana(2.0, 1.0, 0.05).unwrap();
        let k = ProposalKernel::rmala(0.4).unwrap();
        let at = k.at(&b, &[1.0, -0.5]).unwrap();
        let c = at.center().to_vec();
        let total = integrate_real_line(
            |y1| {
                integrate_real_line(
                    |y2| at.log_density(&[y1, y2]).exp(),
                    &[c[1] - 2.0, c[1], c[1] + 2.0],
                    1e-11,
                )
            },
            &[c[0] - 2.0, c[0], c[0] + 2.0],
            1e-10,
        );
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn mh_step_matches_lifted_update() {
        let t = std_normal();
        let k = ProposalKernel::rw_gaussian(2.4).unwrap();
        let mut a = LiftedState::new(&t, &k, vec![3.0]).unwrap();
        let mut b = a.clone();
        let mut ra = RngStream::new(11);
        let mut rb = RngStream::new(11);
        for _ in 0..1000 {
            a = mh_step(&a, &t, &k, &mut ra).unwrap();
            let law = LiftedLaw {
                state: &b,
                target: &t,
                proposal: &k,
            };
            let v = law.draw(&mut rb);
            let x = apply_update(&b.x, &v.y, v.u);
            b = LiftedState::new(&t, &k, x).unwrap();
            assert_eq!(a.x[0].to_bits(), b.x[0].to_bits());
        }
    }
}
