//! Standard targets, starting laws and proposals of the meeting-time and
//! diagnostic experiments.

use grandcouple_core::grand::{CoupledKernelSpec, Initial, Method};
use grandcouple_core::measures::TForm;
use grandcouple_core::mh::{default_rw_scale, ProposalKernel};
use grandcouple_core::Measure;

use crate::config::{ChainOverrides, TargetFamily};
use crate::error::{config_err, Result};

pub const RMALA_SCALE: f64 = 0.4;
pub const STUDENT_T_DF: f64 = 2.0;
pub const BANANA: [f64; 3] = [2.0, 1.0, 0.05];

/// Everything needed to simulate one family at one dimension.
#[derive(Clone, Debug)]
pub struct ChainSetup {
    pub target: Measure,
    pub init: Measure,
    pub proposal: ProposalKernel,
}

impl ChainSetup {
    pub fn new(family: TargetFamily, d: usize, o: &ChainOverrides) -> Result<Self> {
        if d == 0 {
            return Err(config_err("dimension must be >= 1"));
        }
        let (target, init, proposal) = match family {
            TargetFamily::Gaussian => (
                Measure::gaussian(vec![0.0; d], vec![1.0; d])?,
                Measure::gaussian(vec![1.0; d], vec![16.0; d])?,
                ProposalKernel::rw_gaussian(o.scale.unwrap_or_else(|| default_rw_scale(d)))?,
            ),
            TargetFamily::StudentT => {
                let tf: TForm = o.target_form.unwrap_or_default().into();
                let pf: TForm = o.proposal_form.map_or(TForm::Joint, Into::into);
                (
                    Measure::student_t_form(vec![0.0; d], 1.0, 1.0, tf)?,
                    Measure::gaussian(vec![0.0; d], vec![1.0; d])?,
                    ProposalKernel::rw_student_t_form(
                        o.scale.unwrap_or_else(|| default_rw_scale(d)),
                        o.df.unwrap_or(STUDENT_T_DF),
                        pf,
                    )?,
                )
            }
            TargetFamily::BananaRmala => {
                if d != 2 {
                    return Err(config_err("the banana target is two-dimensional (d = 2)"));
                }
                let [s1, s2, b] = o.banana.unwrap_or(BANANA);
                (
                    Measure::banana(s1, s2, b)?,
                    Measure::uniform_box(vec![-2.0; 2], vec![2.0; 2])?,
                    ProposalKernel::rmala(o.scale.unwrap_or(RMALA_SCALE))?,
                )
            }
        };
        let target = match &o.target {
            Some(spec) => spec.build()?,
            None => target,
        };
        let init = match &o.init {
            Some(spec) => spec.build()?,
            None => init,
        };
        Ok(Self {
            target,
            init,
            proposal,
        })
    }

    pub fn kernel(&self, method: Method, o: &ChainOverrides) -> Result<CoupledKernelSpec> {
        let mut spec = CoupledKernelSpec::new(method, self.target.clone(), self.proposal.clone())?;
        spec.variant = o.variant.into();
        Ok(spec)
    }

    pub fn initial(&self) -> Initial {
        Initial::Draw(self.init.clone())
    }
}

/// Dimension grid, defaulting per family.
pub fn dims(family: TargetFamily, d: &Option<Vec<usize>>) -> Vec<usize> {
    d.clone().unwrap_or_else(|| match family {
        TargetFamily::Gaussian => vec![8],
        TargetFamily::StudentT => vec![5],
        TargetFamily::BananaRmala => vec![2],
    })
}
