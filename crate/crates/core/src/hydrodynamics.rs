//! Local resistive-force-theory drag and the grand resistance matrix.
//!
//! Each link is a slender rod with per-unit-length drag `c_t` along its axis
//! and `c_n` across it. No hydrodynamic interaction between links is modeled.

use nalgebra::{DMatrix, Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{ConfigError, Result, SimError};
use crate::kinematics::{
    check_dim, perp, visit_links, FlagellumConfig, FluidModel, GeneralizedCoords, LinkFrame,
    RobotConfig,
};

/// Per-unit-length drag coefficients of a slender rod (N·s/m²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragCoefficients {
    pub c_t: f64,
    pub c_n: f64,
}

impl DragCoefficients {
    /// Gray–Hancock style coefficients for a rod of `length` and `radius`:
    /// `c_t = 2πμ / ln(2·length/radius)`, `c_n = ratio · c_t`.
    pub fn slender_rod(
        viscosity: f64,
        length: f64,
        radius: f64,
        ratio: f64,
    ) -> Result<Self, ConfigError> {
        let arg = 2.0 * length / radius;
        if !(arg > 1.0) {
            return Err(ConfigError::new(
                "segment_radius",
                format!("too large for rod length {length}: ln(2L/r) must be > 0"),
            ));
        }
        let c_t = 2.0 * std::f64::consts::PI * viscosity / arg.ln();
        Ok(Self {
            c_t,
            c_n: ratio * c_t,
        })
    }

    /// Link-frame drag operator diag(c_t L, c_n L, c_n L³/12).
    pub fn rod_resistance(&self, length: f64) -> Vector3<f64> {
        Vector3::new(
            self.c_t * length,
            self.c_n * length,
            self.c_n * length.powi(3) / 12.0,
        )
    }
}

/// Coefficients for a whole flagellum, using its total length as the slender length scale.
pub fn rft_coefficients(
    fluid: &FluidModel,
    flagellum: &FlagellumConfig,
    ratio: f64,
) -> Result<DragCoefficients, ConfigError> {
    DragCoefficients::slender_rod(
        fluid.viscosity,
        flagellum.total_length(),
        flagellum.segment_radius,
        ratio,
    )
}

/// Drag force and torque (about the link center) on a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vector2<f64>,
    pub torque: f64,
}

/// Integrates `-(c_t (u·t̂) t̂ + c_n (u·n̂) n̂)` over the link, where the point
/// velocity `u` includes rotation about the center.
/// `velocity` is `(vx, vy, ω)` of the link center in world axes.
pub fn link_drag_wrench(frame: &LinkFrame, velocity: Vector3<f64>, coeffs: &DragCoefficients) -> Wrench {
    let t = frame.tangent();
    let n = perp(t);
    let v = Vector2::new(velocity.x, velocity.y);
    let l = frame.length;
    // rotation adds ω·s·n̂ at arclength s; it integrates to zero force
    let force = -(t * (coeffs.c_t * l * v.dot(&t)) + n * (coeffs.c_n * l * v.dot(&n)));
    let torque = -coeffs.c_n * l.powi(3) / 12.0 * velocity.z;
    Wrench { force, torque }
}

/// World-frame 3×3 operator `D` with `wrench = -D · (vx, vy, ω)`.
pub fn link_drag_operator(frame: &LinkFrame, coeffs: &DragCoefficients) -> Matrix3<f64> {
    let d = coeffs.rod_resistance(frame.length);
    let a = translational_block(frame.tangent(), d);
    let mut out = Matrix3::zeros();
    out.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    out[(2, 2)] = d.z;
    out
}

#[inline]
fn translational_block(t: Vector2<f64>, d: Vector3<f64>) -> Matrix2<f64> {
    let n = perp(t);
    t * t.transpose() * d.x + n * n.transpose() * d.y
}

/// Symmetric positive-definite `R(q)` with generalized drag `-R q̇`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceMatrix(pub DMatrix<f64>);

impl ResistanceMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// Per-link rod resistances for a robot, computed once per configuration.
#[derive(Debug, Clone)]
pub struct DragModel {
    /// diag(c_t L, c_n L, c_n L³/12) per link, in link order.
    rod: Vec<Vector3<f64>>,
}

impl DragModel {
    pub fn new(config: &RobotConfig) -> Result<Self, ConfigError> {
        let body = DragCoefficients::slender_rod(
            config.fluid.viscosity,
            config.body.length,
            config.body.radius,
            config.drag_ratio,
        )
        .map_err(|e| ConfigError::new("body.radius", e.message))?;
        let mut rod = vec![body.rod_resistance(config.body.length)];
        for (i, f) in config.flagella.iter().enumerate() {
            let c = rft_coefficients(&config.fluid, f, config.drag_ratio)
                .map_err(|e| ConfigError::new(format!("flagella[{i}].segment_radius"), e.message))?;
            rod.extend(std::iter::repeat(c.rod_resistance(f.segment_length)).take(f.n_segments));
        }
        Ok(Self { rod })
    }

    pub fn body_coefficients(config: &RobotConfig) -> Result<DragCoefficients, ConfigError> {
        DragCoefficients::slender_rod(
            config.fluid.viscosity,
            config.body.length,
            config.body.radius,
            config.drag_ratio,
        )
    }

    /// Accumulates `Σ Jᵀ D J` into `r` (overwritten), touching only nonzero Jacobian columns.
    pub(crate) fn assemble_into(
        &self,
        config: &RobotConfig,
        q: &[f64],
        r: &mut DMatrix<f64>,
        hinges: &mut Vec<Vector2<f64>>,
    ) {
        r.fill(0.0);
        let mut cols: Vec<usize> = Vec::with_capacity(16);
        let mut lin: Vec<Vector2<f64>> = Vec::with_capacity(16);
        let mut a_lin: Vec<Vector2<f64>> = Vec::with_capacity(16);
        let mut ang: Vec<f64> = Vec::with_capacity(16);
        visit_links(config, q, hinges, |v| {
            let d = self.rod[v.id];
            let a = translational_block(v.frame.tangent(), d);
            cols.clear();
            cols.extend((0..3).chain(v.joint_cols.clone()));
            lin.clear();
            a_lin.clear();
            ang.clear();
            for &c in &cols {
                let l = v.linear_column(c);
                lin.push(l);
                a_lin.push(a * l);
                ang.push(v.angular_column(c));
            }
            for (i, &ci) in cols.iter().enumerate() {
                for j in i..cols.len() {
                    let cj = cols[j];
                    let val = lin[i].dot(&a_lin[j]) + d.z * ang[i] * ang[j];
                    r[(ci, cj)] += val;
                }
            }
        });
        let n = r.nrows();
        for i in 0..n {
            for j in 0..i {
                r[(i, j)] = r[(j, i)];
            }
        }
    }
}

pub fn assemble_resistance_matrix(q: &GeneralizedCoords, config: &RobotConfig) -> Result<ResistanceMatrix> {
    check_dim(config, q.dim())?;
    let model = DragModel::new(config)?;
    let n = config.dof();
    let mut r = DMatrix::zeros(n, n);
    model.assemble_into(config, q.to_vector().as_slice(), &mut r, &mut Vec::new());
    Ok(ResistanceMatrix(r))
}

/// `Re = ρ U L / μ`.
pub fn reynolds_number(speed: f64, length: f64, fluid: &FluidModel) -> Result<f64> {
    if !(speed >= 0.0) || !speed.is_finite() {
        return Err(ConfigError::new("speed", "must be >= 0").into());
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(ConfigError::new("length", "must be > 0").into());
    }
    if !(fluid.viscosity > 0.0 && fluid.density > 0.0) {
        return Err(SimError::Config(ConfigError::new(
            "fluid",
            "viscosity and density must be > 0",
        )));
    }
    Ok(fluid.density * speed * length / fluid.viscosity)
}
