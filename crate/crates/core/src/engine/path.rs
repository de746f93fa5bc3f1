//! One simulation path of the multi-period model.

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{CorrelationSpec, SimulationConfig};
use super::rng::{PathRng, StreamFactory};
use super::scenario::ScenarioOverride;
use crate::error::{Error, Result};
use crate::math::normal::inv_cdf;
use crate::math::{cholesky_lower, CorrelationMatrix, EquicorrelationFactor, LowerTriangular};
use crate::model::{apply_impact_in_place, impact_into, BankNode, ExposureNetwork, PdUpdater, SystemState};

/// Maps independent standard normals of the live nodes to correlated ones.
#[derive(Debug, Clone)]
pub struct CorrelatedSampler {
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    /// The factor of any leading block of an equicorrelation matrix is the
    /// leading block of its factor, so one factor serves every live set.
    Uniform(EquicorrelationFactor),
    Dense {
        corr: CorrelationMatrix,
        live: Vec<usize>,
        factor: LowerTriangular,
    },
}

impl CorrelatedSampler {
    pub fn new(spec: &CorrelationSpec, n: usize) -> Result<Self> {
        spec.validate(n)?;
        let kind = match spec {
            CorrelationSpec::Uniform(rho) => SamplerKind::Uniform(EquicorrelationFactor::new(n, *rho)),
            CorrelationSpec::Matrix(m) => SamplerKind::Dense {
                corr: m.clone(),
                live: (0..n).collect(),
                factor: cholesky_lower(m)?,
            },
        };
        Ok(Self { kind })
    }

    /// `out[l]` is the correlated variable of node `live[l]`; `z` is indexed
    /// by original node.
    pub fn correlate(&mut self, live: &[usize], z: &[f64], compact: &mut [f64], out: &mut [f64]) {
        let m = live.len();
        for (c, &i) in compact.iter_mut().zip(live) {
            *c = z[i];
        }
        match &mut self.kind {
            SamplerKind::Uniform(f) => f.mul_prefix(&compact[..m], &mut out[..m]),
            SamplerKind::Dense {
                corr,
                live: cached,
                factor,
            } => {
                if cached.as_slice() != live {
                    *factor = cholesky_lower(&corr.principal(live))
                        .expect("principal submatrix of a valid correlation matrix");
                    cached.clear();
                    cached.extend_from_slice(live);
                }
                factor.mul_vec(&compact[..m], &mut out[..m]);
            }
        }
    }
}

/// Default flags for one period: node `k` defaults iff its correlated
/// variable falls below `Φ⁻¹(pd_k)`. `z` holds one independent standard normal
/// per original node; dead nodes' entries are ignored.
pub fn sample_defaults(state: &SystemState, sampler: &mut CorrelatedSampler, z: &[f64]) -> Vec<bool> {
    let live: Vec<usize> = (0..state.alive.len()).filter(|&i| state.alive[i]).collect();
    let mut compact = vec![0.0; live.len()];
    let mut x = vec![0.0; live.len()];
    sampler.correlate(&live, z, &mut compact, &mut x);
    let mut flags = vec![false; state.alive.len()];
    for (l, &i) in live.iter().enumerate() {
        flags[i] = x[l] < inv_cdf(state.pd[i]);
    }
    flags
}

/// Result of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    /// Undiscounted `L(t)` for `t = 1..=M`.
    pub period_losses: Vec<f64>,
    /// `Σ_t L(t) D(t)`.
    pub total_loss: f64,
    /// Period in which each node defaulted, 0 if it survived.
    pub default_period: Vec<u32>,
}

impl PathOutcome {
    pub fn defaulted(&self, node: usize) -> bool {
        self.default_period[node] != 0
    }
}

/// Inputs of a run with everything that does not depend on the path
/// precomputed.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    banks: &'a [BankNode],
    net: &'a ExposureNetwork,
    config: SimulationConfig,
    initial: SystemState,
    thresholds: Vec<f64>,
    updater: PdUpdater,
    sampler: CorrelatedSampler,
    discounts: Vec<f64>,
    streams: StreamFactory,
}

/// Per-worker scratch space, reused across paths.
#[derive(Debug, Clone)]
pub struct Workspace {
    state: SystemState,
    thresholds: Vec<f64>,
    sampler: CorrelatedSampler,
    live: Vec<usize>,
    z: Vec<f64>,
    compact: Vec<f64>,
    x: Vec<f64>,
    impacts: Vec<f64>,
    outcome: PathOutcome,
}

impl<'a> Engine<'a> {
    pub fn new(
        banks: &'a [BankNode],
        net: &'a ExposureNetwork,
        config: &SimulationConfig,
        scenario: &ScenarioOverride,
    ) -> Result<Self> {
        if net.dim() != banks.len() {
            return Err(Error::config(format!(
                "network has {} nodes but there are {} banks",
                net.dim(),
                banks.len()
            )));
        }
        for b in banks {
            b.validate()?;
        }
        config.validate(banks.len())?;
        let initial = scenario.initial_state(banks)?;
        let updater = PdUpdater::new(config.rule, config.dt, banks, &initial.pd)?;
        Ok(Self {
            banks,
            net,
            thresholds: initial.pd.iter().map(|&p| inv_cdf(p)).collect(),
            initial,
            updater,
            sampler: CorrelatedSampler::new(&config.correlation, banks.len())?,
            discounts: config.discount_factors(),
            streams: StreamFactory::new(config.seed),
            config: config.clone(),
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn banks(&self) -> &[BankNode] {
        self.banks
    }

    pub fn initial_state(&self) -> &SystemState {
        &self.initial
    }

    pub fn workspace(&self) -> Workspace {
        let n = self.banks.len();
        Workspace {
            state: self.initial.clone(),
            thresholds: self.thresholds.clone(),
            sampler: self.sampler.clone(),
            live: Vec::with_capacity(n),
            z: vec![0.0; n],
            compact: vec![0.0; n],
            x: vec![0.0; n],
            impacts: vec![0.0; n],
            outcome: PathOutcome {
                period_losses: vec![0.0; self.config.periods],
                total_loss: 0.0,
                default_period: vec![0; n],
            },
        }
    }

    /// Runs path number `path` and returns its outcome, borrowed from `ws`.
    pub fn run_path_in<'w>(&self, ws: &'w mut Workspace, path: u64) -> &'w PathOutcome {
        let mut rng = self.streams.path(path);
        self.run_with_rng(ws, &mut rng);
        &ws.outcome
    }

    pub fn run_path(&self, path: u64) -> PathOutcome {
        let mut ws = self.workspace();
        self.run_path_in(&mut ws, path).clone()
    }

    fn run_with_rng(&self, ws: &mut Workspace, rng: &mut PathRng) {
        let n = self.banks.len();
        ws.state.clone_from(&self.initial);
        ws.thresholds.clone_from(&self.thresholds);
        ws.outcome.total_loss = 0.0;
        ws.outcome.period_losses.iter_mut().for_each(|l| *l = 0.0);
        ws.outcome.default_period.iter_mut().for_each(|d| *d = 0);

        for period in 0..self.config.periods {
            ws.live.clear();
            ws.live.extend((0..n).filter(|&i| ws.state.alive[i]));
            if ws.live.is_empty() {
                break;
            }
            let g = rng.period(period);
            for v in ws.z.iter_mut() {
                *v = g.sample(StandardNormal);
            }
            ws.sampler.correlate(&ws.live, &ws.z, &mut ws.compact, &mut ws.x);

            let mut loss = 0.0;
            let mut any = false;
            for (l, &i) in ws.live.iter().enumerate() {
                if ws.x[l] < ws.thresholds[i] {
                    ws.state.defaulted_this_period[i] = true;
                    ws.outcome.default_period[i] = period as u32 + 1;
                    loss += ws.state.asset[i].max(0.0) * self.banks[i].lgd;
                    any = true;
                }
            }
            if !any {
                ws.state.t += 1;
                continue;
            }
            ws.outcome.period_losses[period] = loss;
            ws.outcome.total_loss += loss * self.discounts[period];

            impact_into(&ws.state, self.net, self.banks, &mut ws.impacts);
            apply_impact_in_place(&mut ws.state, &ws.impacts, &self.updater);
            for (i, &hit) in ws.impacts.iter().enumerate() {
                if hit != 0.0 && ws.state.alive[i] {
                    ws.thresholds[i] = inv_cdf(ws.state.pd[i]);
                }
            }
        }
    }
}

/// Runs a single path with an explicit stream.
pub fn run_path(
    banks: &[BankNode],
    net: &ExposureNetwork,
    config: &SimulationConfig,
    rng: &mut PathRng,
) -> Result<PathOutcome> {
    let engine = Engine::new(banks, net, config, &ScenarioOverride::baseline())?;
    let mut ws = engine.workspace();
    engine.run_with_rng(&mut ws, rng);
    Ok(ws.outcome)
}
