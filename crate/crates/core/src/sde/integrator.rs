use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{wrap_coord, PhaseState, TorusPoint};
use crate::model::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Half kick, half drift, exact Ornstein–Uhlenbeck velocity flow, half drift, half kick.
    #[default]
    ExactOuSplitting,
    /// Plain Euler–Maruyama; kept for cross-validation only.
    EulerMaruyama,
}

/// Step-size rule `h = min(h₀, c / γ)`.
pub fn step_size(gamma: f64, h0: f64, factor: f64) -> f64 {
    h0.min(factor / gamma)
}

pub const DEFAULT_H0: f64 = 1e-3;
pub const DEFAULT_STEP_FACTOR: f64 = 0.5;

/// Stateful kinetic Langevin stepper. Caches `F(x)` between steps so the
/// closing half kick of one step is reused by the opening kick of the next.
pub struct LangevinIntegrator<'m> {
    model: &'m ModelSpec,
    scheme: Scheme,
    h: f64,
    inv_sqrt_h: f64,
    decay: f64,
    ou_scale: f64,
    em_noise: f64,
    force: Vec<f64>,
    cached_at: Option<Vec<f64>>,
    xi: Vec<f64>,
    noise: Vec<f64>,
    steps: usize,
}

impl<'m> LangevinIntegrator<'m> {
    pub fn new(model: &'m ModelSpec, scheme: Scheme, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(LabError::invalid(format!("step must be positive, got {h}")));
        }
        let d = model.dim();
        let gamma = model.gamma();
        let decay = (-gamma * h).exp();
        Ok(LangevinIntegrator {
            model,
            scheme,
            h,
            inv_sqrt_h: 1.0 / h.sqrt(),
            decay,
            // √(1 − e^{−2γh}) without cancellation for small γh.
            ou_scale: (-(-2.0 * gamma * h).exp_m1()).sqrt(),
            em_noise: (2.0 * gamma).sqrt(),
            force: vec![0.0; d],
            cached_at: None,
            xi: vec![0.0; d],
            noise: vec![0.0; d],
            steps: 0,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// `e^{−γh}`, the per-step velocity contraction.
    pub fn decay(&self) -> f64 {
        self.decay
    }

    /// `√(1 − e^{−2γh})`, the per-step OU noise amplitude.
    pub fn ou_scale(&self) -> f64 {
        self.ou_scale
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    fn refresh_force(&mut self, x: &[f64]) {
        let fresh = matches!(&self.cached_at, Some(c) if c.as_slice() == x);
        if !fresh {
            self.model.force().eval_into(x, &mut self.force);
            match &mut self.cached_at {
                Some(c) => c.copy_from_slice(x),
                None => self.cached_at = Some(x.to_vec()),
            }
        }
    }

    /// Advances `p` by one step driven by the Brownian increment `db ~ N(0, h I)`.
    pub fn step(&mut self, p: &mut PhaseState, db: &[f64]) -> Result<()> {
        let h = self.h;
        let half = 0.5 * h;
        for (x, v) in self.xi.iter_mut().zip(db) {
            *x = v * self.inv_sqrt_h;
        }
        self.model.sigma().apply_sigma(&self.xi, &mut self.noise);
        match self.scheme {
            Scheme::ExactOuSplitting => {
                self.refresh_force(p.position.coords());
                {
                    let y = p.velocity.coords_mut();
                    for (yi, fi) in y.iter_mut().zip(&self.force) {
                        *yi += half * fi;
                    }
                }
                let (decay, ou) = (self.decay, self.ou_scale);
                {
                    let (x, y) = (p.position.coords_mut(), p.velocity.coords_mut());
                    for i in 0..x.len() {
                        x[i] += half * y[i];
                        y[i] = decay * y[i] + ou * self.noise[i];
                        x[i] = wrap_coord(x[i] + half * y[i]);
                    }
                }
                self.refresh_force(p.position.coords());
                for (yi, fi) in p.velocity.coords_mut().iter_mut().zip(&self.force) {
                    *yi += half * fi;
                }
            }
            Scheme::EulerMaruyama => {
                self.refresh_force(p.position.coords());
                let gamma = self.model.gamma();
                let scale = self.em_noise * h.sqrt();
                let (x, y) = (p.position.coords_mut(), p.velocity.coords_mut());
                for i in 0..x.len() {
                    let yi = y[i];
                    x[i] = wrap_coord(x[i] + h * yi);
                    y[i] = yi + h * (self.force[i] - gamma * yi) + scale * self.noise[i];
                }
            }
        }
        self.steps += 1;
        if !p.is_finite() {
            return Err(LabError::Diverged { step: self.steps });
        }
        Ok(())
    }
}

/// Euler–Maruyama stepper for `dZ = F(Z) dt + √2 Σ dB` on the torus.
pub struct OverdampedIntegrator<'m> {
    model: &'m ModelSpec,
    h: f64,
    force: Vec<f64>,
    noise: Vec<f64>,
    steps: usize,
}

impl<'m> OverdampedIntegrator<'m> {
    pub fn new(model: &'m ModelSpec, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(LabError::invalid(format!("step must be positive, got {h}")));
        }
        let d = model.dim();
        Ok(OverdampedIntegrator { model, h, force: vec![0.0; d], noise: vec![0.0; d], steps: 0 })
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// `z ← wrap(z + hF(z) + √2 Σ ΔB)`, with `ΔB` over a step of length `h`.
    pub fn step(&mut self, z: &mut TorusPoint, db: &[f64]) -> Result<()> {
        self.model.sigma().apply_sigma(db, &mut self.noise);
        self.model.force().eval_into(z.coords(), &mut self.force);
        let s2 = std::f64::consts::SQRT_2;
        for ((zi, fi), ni) in z.coords_mut().iter_mut().zip(&self.force).zip(&self.noise) {
            *zi = wrap_coord(*zi + self.h * fi + s2 * ni);
        }
        self.steps += 1;
        if z.coords().iter().any(|v| !v.is_finite()) {
            return Err(LabError::Diverged { step: self.steps });
        }
        Ok(())
    }
}

/// One kinetic step from `p`; see [`LangevinIntegrator::step`].
pub fn langevin_step(m: &ModelSpec, p: &PhaseState, db: &[f64], h: f64) -> Result<PhaseState> {
    let mut out = p.clone();
    LangevinIntegrator::new(m, Scheme::ExactOuSplitting, h)?.step(&mut out, db)?;
    Ok(out)
}

/// One overdamped Euler–Maruyama step from `z`.
pub fn overdamped_step(m: &ModelSpec, z: &TorusPoint, db: &[f64], h: f64) -> Result<TorusPoint> {
    let mut out = z.clone();
    OverdampedIntegrator::new(m, h)?.step(&mut out, db)?;
    Ok(out)
}
