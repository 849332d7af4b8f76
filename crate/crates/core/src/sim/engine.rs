use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use super::controller::{ControllerParams, ControllerRanges};
use super::damage::DamageSpec;
use super::model::{ForceMetric, RobotModel, SimConfig, JOINTS, LIMBS};
use crate::archive::Genotype;
use crate::error::{Error, Result};
use crate::map_elites::Evaluation;

/// Hands/feet first, then the front and rear ends of the torso.
const CONTACTS: usize = LIMBS + 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimResult {
    /// Net forward displacement after the settling interval divided by its duration, m/s.
    pub speed: f64,
    /// Fraction of post-settling steps each hand/foot touched the ground.
    pub duty: [f64; LIMBS],
    /// Contact-force safety measurement, N (see [`ForceMetric`]).
    pub force_sum: f64,
    /// Largest per-step summed normal force, N.
    pub peak_force: f64,
    pub failed: bool,
}

/// One integration step, as written by `--dump-trajectory`.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub t: f64,
    pub x: f64,
    pub z: f64,
    pub pitch: f64,
    pub theta: [f64; JOINTS],
    pub contact: [bool; LIMBS],
    pub normal_force: [f64; LIMBS],
}

impl TraceRow {
    pub const CSV_HEADER: &'static str = "t,x,z,pitch,theta_1,theta_2,theta_3,theta_4,theta_5,theta_6,theta_7,theta_8,contact_1,contact_2,contact_3,contact_4,fn_1,fn_2,fn_3,fn_4";

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        write!(w, "{},{},{},{}", self.t, self.x, self.z, self.pitch)?;
        for th in &self.theta {
            write!(w, ",{th}")?;
        }
        for c in &self.contact {
            write!(w, ",{}", u8::from(*c))?;
        }
        for f in &self.normal_force {
            write!(w, ",{f}")?;
        }
        writeln!(w)
    }
}

/// A robot model together with its controller ranges and integration settings.
///
/// Holds no mutable state: one value can serve any number of threads.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Simulator {
    pub model: RobotModel,
    pub ranges: ControllerRanges,
    pub config: SimConfig,
}

#[derive(Clone, Copy)]
struct Kinematics {
    q: [f64; JOINTS],
    pos: [[f64; 2]; LIMBS],
    vel: [[f64; 2]; LIMBS],
}

#[derive(Clone, Copy)]
struct Body {
    x: f64,
    z: f64,
    pitch: f64,
    vx: f64,
    vz: f64,
    omega: f64,
}

impl Simulator {
    pub fn new(model: RobotModel, ranges: ControllerRanges, config: SimConfig) -> Result<Self> {
        model.validate()?;
        ranges.validate()?;
        config.validate()?;
        Ok(Simulator { model, ranges, config })
    }

    /// Decodes the genotype and simulates it under `damage`.
    pub fn measure(&self, genotype: &Genotype, damage: &DamageSpec) -> Result<SimResult> {
        let ctrl = self.ranges.decode(genotype)?;
        Ok(self.simulate(&ctrl, damage))
    }

    pub fn simulate(&self, ctrl: &ControllerParams, damage: &DamageSpec) -> SimResult {
        self.run(ctrl, damage, None::<&mut fn(&TraceRow)>)
    }

    pub fn simulate_traced(
        &self,
        ctrl: &ControllerParams,
        damage: &DamageSpec,
        mut sink: impl FnMut(&TraceRow),
    ) -> SimResult {
        self.run(ctrl, damage, Some(&mut sink))
    }

    /// Writes the per-step trajectory CSV to `out`.
    pub fn dump_trajectory<W: Write>(
        &self,
        genotype: &Genotype,
        damage: &DamageSpec,
        out: &mut W,
    ) -> Result<SimResult> {
        let ctrl = self.ranges.decode(genotype)?;
        let mut io_err = None;
        writeln!(out, "{}", TraceRow::CSV_HEADER).map_err(|e| Error::io("trajectory", e))?;
        let res = self.simulate_traced(&ctrl, damage, |row| {
            if io_err.is_none() {
                if let Err(e) = row.write_csv(out) {
                    io_err = Some(e);
                }
            }
        });
        match io_err {
            Some(e) => Err(Error::io("trajectory", e)),
            None => Ok(res),
        }
    }

    /// Joint angles and torso-frame hand/foot kinematics at `t`, with damage locks applied.
    fn kinematics(&self, ctrl: &ControllerParams, locks: &[Option<f64>; JOINTS], t: f64) -> Kinematics {
        let mut q = [0.0; JOINTS];
        let mut qd = [0.0; JOINTS];
        for j in 0..JOINTS {
            match locks[j] {
                Some(angle) => q[j] = angle,
                None => (q[j], qd[j]) = ctrl.target(j, t),
            }
        }
        let half = 0.5 * self.model.body_length;
        let (l1, l2) = (self.model.upper_link, self.model.lower_link);
        let mut pos = [[0.0; 2]; LIMBS];
        let mut vel = [[0.0; 2]; LIMBS];
        for k in 0..LIMBS {
            let ax = if k < 2 { half } else { -half };
            let (a1, a2) = (q[2 * k], q[2 * k] + q[2 * k + 1]);
            let (w1, w2) = (qd[2 * k], qd[2 * k] + qd[2 * k + 1]);
            let (s1, c1) = a1.sin_cos();
            let (s2, c2) = a2.sin_cos();
            // Angles are measured from the torso's downward axis, positive swinging forward.
            pos[k] = [ax + l1 * s1 + l2 * s2, -l1 * c1 - l2 * c2];
            vel[k] = [l1 * w1 * c1 + l2 * w2 * c2, l1 * w1 * s1 + l2 * w2 * s2];
        }
        Kinematics { q, pos, vel }
    }

    fn run(
        &self,
        ctrl: &ControllerParams,
        damage: &DamageSpec,
        mut sink: Option<&mut impl FnMut(&TraceRow)>,
    ) -> SimResult {
        let m = &self.model;
        let cfg = &self.config;
        let dt = cfg.dt;
        let steps = cfg.steps();
        let settle_step = (cfg.settle_time / dt).round() as usize;
        let locks = damage.lock_table();
        let half = 0.5 * m.body_length;
        let (mass, inertia, g) = (m.body_mass, m.inertia(), m.gravity);
        let (k, c, mu, bt) = (
            m.contact_stiffness,
            m.contact_damping,
            m.friction_coefficient,
            m.tangential_damping,
        );
        let forward_slip = m.forward_slip_friction;

        // Limb motion is periodic in time and independent of the torso state,
        // so one gait cycle is tabulated whenever it spans a whole number of steps.
        let cycle = 1.0 / (ctrl.frequency * dt);
        let table: Vec<Kinematics> = if (cycle - cycle.round()).abs() < 1e-9 && cycle.round() >= 1.0 {
            (0..cycle.round() as usize)
                .map(|i| self.kinematics(ctrl, &locks, i as f64 * dt))
                .collect()
        } else {
            Vec::new()
        };

        // Start level and at rest with the lowest contact point touching the ground.
        let lowest = self
            .kinematics(ctrl, &locks, 0.0)
            .pos
            .iter()
            .map(|p| p[1])
            .fold(0.0f64, f64::min);
        let mut body = Body {
            x: 0.0,
            z: -lowest,
            pitch: 0.0,
            vx: 0.0,
            vz: 0.0,
            omega: 0.0,
        };

        let mut contact_steps = [0usize; LIMBS];
        let mut normal_total = 0.0;
        let mut normal_sq_total = 0.0;
        let mut magnitude_total = 0.0;
        let mut peak = 0.0f64;
        let mut x_settled = body.x;
        let mut failed = false;
        let mut done_steps = 0usize;

        for s in 0..steps {
            if s == settle_step {
                x_settled = body.x;
            }
            let t = s as f64 * dt;
            let computed;
            let kin = if table.is_empty() {
                computed = self.kinematics(ctrl, &locks, t);
                &computed
            } else {
                &table[s % table.len()]
            };
            let (sp, cp) = body.pitch.sin_cos();

            let mut fx = 0.0;
            let mut fz = -mass * g;
            let mut torque = 0.0;
            let mut normal_step = 0.0;
            let mut magnitude_step = 0.0;
            let mut touching = [false; LIMBS];
            let mut limb_normal = [0.0; LIMBS];

            for i in 0..CONTACTS {
                let (pb, vb) = if i < LIMBS {
                    (kin.pos[i], kin.vel[i])
                } else if i == LIMBS {
                    ([half, 0.0], [0.0, 0.0])
                } else {
                    ([-half, 0.0], [0.0, 0.0])
                };
                let rx = cp * pb[0] - sp * pb[1];
                let rz = sp * pb[0] + cp * pb[1];
                let pz = body.z + rz;
                if pz >= 0.0 {
                    continue;
                }
                let vx = body.vx - body.omega * rz + cp * vb[0] - sp * vb[1];
                let vz = body.vz + body.omega * rx + sp * vb[0] + cp * vb[1];
                let fn_ = (-k * pz - c * vz).max(0.0);
                // Hands and feet grip when pushed backward and slide when dragged forward.
                let cap = if i < LIMBS && vx > 0.0 { mu * forward_slip * fn_ } else { mu * fn_ };
                let ft = (-bt * vx).clamp(-cap, cap);
                fx += ft;
                fz += fn_;
                torque += rx * fn_ - rz * ft;
                normal_step += fn_;
                magnitude_step += (fn_ * fn_ + ft * ft).sqrt();
                if i < LIMBS {
                    touching[i] = true;
                    limb_normal[i] = fn_;
                }
            }

            if s >= settle_step {
                for (n, &touch) in contact_steps.iter_mut().zip(&touching) {
                    *n += usize::from(touch);
                }
                normal_total += normal_step;
                normal_sq_total += normal_step * normal_step;
                magnitude_total += magnitude_step;
                peak = peak.max(normal_step);
            }

            body.vx += fx / mass * dt;
            body.vz += fz / mass * dt;
            body.omega += torque / inertia * dt;
            body.x += body.vx * dt;
            body.z += body.vz * dt;
            body.pitch += body.omega * dt;
            done_steps = s + 1;

            if let Some(sink) = sink.as_mut() {
                sink(&TraceRow {
                    t: t + dt,
                    x: body.x,
                    z: body.z,
                    pitch: body.pitch,
                    theta: kin.q,
                    contact: touching,
                    normal_force: limb_normal,
                });
            }

            let finite = body.x.is_finite()
                && body.z.is_finite()
                && body.pitch.is_finite()
                && body.vx.is_finite()
                && body.vz.is_finite()
                && body.omega.is_finite();
            if !finite || body.pitch.abs() > FRAC_PI_2 {
                failed = true;
                break;
            }
        }

        // Every statistic covers the post-settling window only.
        let window = (steps - settle_step.min(steps)).max(1) as f64;
        let mut duty = [0.0; LIMBS];
        for (d, n) in duty.iter_mut().zip(contact_steps) {
            *d = n as f64 / window;
        }
        let force_sum = match cfg.force_metric {
            ForceMetric::RmsNormal => (normal_sq_total / window).sqrt(),
            ForceMetric::MeanMagnitude => magnitude_total / window,
            ForceMetric::MeanNormal => normal_total / window,
            ForceMetric::Peak => peak,
        };
        let speed = if failed || done_steps <= settle_step {
            0.0
        } else {
            (body.x - x_settled) / (window * dt)
        };
        SimResult {
            speed,
            duty,
            force_sum: if force_sum.is_finite() { force_sum } else { 0.0 },
            peak_force: if peak.is_finite() { peak } else { 0.0 },
            failed,
        }
    }
}

impl Simulator {
    /// Intact-robot evaluation used to build the map: speed as performance,
    /// the force measurement as the single safety value. Failed episodes yield `None`.
    pub fn evaluate(&self, genotype: &Genotype) -> Option<Evaluation> {
        let r = self.measure(genotype, &DamageSpec::none()).ok()?;
        if r.failed {
            return None;
        }
        Some(Evaluation {
            performance: r.speed,
            duty: r.duty,
            safety_values: vec![r.force_sum],
        })
    }

    /// Short stable identifier of the model, controller ranges and integration
    /// settings (FNV-1a over their canonical serialization).
    pub fn fingerprint(&self) -> String {
        #[derive(serde::Serialize)]
        struct Canon<'a> {
            robot: &'a RobotModel,
            controller: &'a ControllerRanges,
            sim: &'a SimConfig,
        }
        let text = toml::to_string(&Canon {
            robot: &self.model,
            controller: &self.ranges,
            sim: &self.config,
        })
        .expect("simulator settings serialize");
        let hash = text
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3));
        format!("crawler-{hash:016x}")
    }
}
