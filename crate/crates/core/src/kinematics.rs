//! Articulated robot geometry: a rigid body rod with chains of hinged links.
//!
//! Generalized coordinates are `(x, y, phi_body, joint angles...)`. Joint
//! angles are stored flagellum-major, one hinge per segment, each measured
//! relative to the previous link (the first hinge relative to the attachment
//! direction). A mirrored flagellum is the reflection of an unmirrored one
//! across the body axis, so its attachment angle and joint angles enter with
//! the opposite sign.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidModel {
    /// Pa·s
    pub viscosity: f64,
    /// kg/m³
    pub density: f64,
}

impl Default for FluidModel {
    /// Vegetable glycerine at 20 °C.
    fn default() -> Self {
        Self {
            viscosity: 1.49,
            density: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlagellumConfig {
    pub n_segments: usize,
    pub segment_length: f64,
    pub segment_radius: f64,
    /// Distance along the body axis from the body center to the attachment point.
    pub attachment_offset: f64,
    /// Direction of the unbent flagellum relative to the body axis.
    pub attachment_angle: f64,
    pub mirror: bool,
}

impl FlagellumConfig {
    pub fn total_length(&self) -> f64 {
        self.n_segments as f64 * self.segment_length
    }

    /// +1 for unmirrored, -1 for mirrored flagella.
    pub fn sign(&self) -> f64 {
        if self.mirror {
            -1.0
        } else {
            1.0
        }
    }

    pub fn mirrored(&self) -> Self {
        Self {
            mirror: !self.mirror,
            ..*self
        }
    }
}

impl Default for FlagellumConfig {
    /// Six 15 mm segments hinged at the rear of the body.
    fn default() -> Self {
        Self {
            n_segments: 6,
            segment_length: 0.015,
            segment_radius: 0.002,
            attachment_offset: -0.063,
            attachment_angle: DEFAULT_ATTACHMENT_ANGLES[0],
            mirror: false,
        }
    }
}

/// Attachment angles of the two flagella on one side of the default robot.
pub const DEFAULT_ATTACHMENT_ANGLES: [f64; 2] = [2.5, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyConfig {
    pub length: f64,
    pub radius: f64,
}

impl Default for BodyConfig {
    fn default() -> Self {
        Self {
            length: 0.126,
            radius: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotConfig {
    pub body: BodyConfig,
    pub flagella: Vec<FlagellumConfig>,
    pub fluid: FluidModel,
    /// Normal-to-tangential drag coefficient ratio used for every rod.
    pub drag_ratio: f64,
}

pub const DEFAULT_DRAG_RATIO: f64 = 2.0;

impl Default for RobotConfig {
    /// Four flagella as two mirror-symmetric pairs at the rear of the body.
    fn default() -> Self {
        let flagella = DEFAULT_ATTACHMENT_ANGLES
            .iter()
            .flat_map(|&angle| {
                let f = FlagellumConfig {
                    attachment_angle: angle,
                    ..FlagellumConfig::default()
                };
                [f, f.mirrored()]
            })
            .collect();
        Self {
            body: BodyConfig::default(),
            flagella,
            fluid: FluidModel::default(),
            drag_ratio: DEFAULT_DRAG_RATIO,
        }
    }
}

impl RobotConfig {
    /// Number of generalized coordinates.
    pub fn dof(&self) -> usize {
        3 + self.joint_count()
    }

    pub fn joint_count(&self) -> usize {
        self.flagella.iter().map(|f| f.n_segments).sum()
    }

    /// Body plus every flagellum segment.
    pub fn link_count(&self) -> usize {
        1 + self.joint_count()
    }

    /// Index of the first joint of flagellum `f` within the joint-angle list.
    pub fn joint_offset(&self, f: usize) -> usize {
        self.flagella[..f].iter().map(|fl| fl.n_segments).sum()
    }
}

fn positive(path: &str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(path, "must be > 0"))
    }
}

/// Checks every geometric and fluid invariant, returning the config unchanged.
pub fn validate_config(config: RobotConfig) -> Result<RobotConfig, ConfigError> {
    positive("fluid.viscosity", config.fluid.viscosity)?;
    positive("fluid.density", config.fluid.density)?;
    if !(config.drag_ratio.is_finite() && config.drag_ratio > 1.0) {
        return Err(ConfigError::new("fluid.drag_ratio", "must be > 1"));
    }
    positive("body.length", config.body.length)?;
    positive("body.radius", config.body.radius)?;
    if config.body.radius >= config.body.length {
        return Err(ConfigError::new("body.radius", "must be < body.length"));
    }
    if config.flagella.is_empty() {
        return Err(ConfigError::new("flagella", "must contain at least one flagellum"));
    }
    let half = config.body.length / 2.0;
    for (i, f) in config.flagella.iter().enumerate() {
        let path = |field: &str| format!("flagella[{i}].{field}");
        if f.n_segments < 1 {
            return Err(ConfigError::new(path("n_segments"), "must be >= 1"));
        }
        positive(&path("segment_length"), f.segment_length)?;
        positive(&path("segment_radius"), f.segment_radius)?;
        if f.segment_radius >= f.segment_length {
            return Err(ConfigError::new(
                path("segment_radius"),
                "must be < segment_length",
            ));
        }
        if !f.attachment_offset.is_finite() || f.attachment_offset.abs() > half {
            return Err(ConfigError::new(
                path("attachment_offset"),
                format!("must lie within [-{half}, {half}] (inside the body)"),
            ));
        }
        if !f.attachment_angle.is_finite() {
            return Err(ConfigError::new(path("attachment_angle"), "must be finite"));
        }
    }
    Ok(config)
}

/// Full configuration `q` of the robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedCoords {
    pub x: f64,
    pub y: f64,
    pub phi_body: f64,
    pub joint_angles: Vec<f64>,
}

impl GeneralizedCoords {
    /// Body at the origin along +x with every joint at `angle`.
    pub fn uniform(config: &RobotConfig, angle: f64) -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            phi_body: 0.0,
            joint_angles: vec![angle; config.joint_count()],
        }
    }

    pub fn dim(&self) -> usize {
        3 + self.joint_angles.len()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            [self.x, self.y, self.phi_body]
                .into_iter()
                .chain(self.joint_angles.iter().copied()),
        )
    }

    pub fn from_slice(values: &[f64]) -> Self {
        assert!(values.len() >= 3, "generalized coordinates need a pose");
        Self {
            x: values[0],
            y: values[1],
            phi_body: values[2],
            joint_angles: values[3..].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.phi_body.is_finite()
            && self.joint_angles.iter().all(|a| a.is_finite())
    }

    /// Joint angle of segment `segment` of flagellum `flagellum`.
    pub fn joint(&self, config: &RobotConfig, flagellum: usize, segment: usize) -> f64 {
        self.joint_angles[config.joint_offset(flagellum) + segment]
    }
}

pub(crate) fn check_dim(config: &RobotConfig, actual: usize) -> Result<()> {
    let expected = config.dof();
    if actual != expected {
        return Err(SimError::DimensionMismatch { expected, actual });
    }
    Ok(())
}

#[inline]
pub(crate) fn unit(angle: f64) -> Vector2<f64> {
    let (s, c) = angle.sin_cos();
    Vector2::new(c, s)
}

/// Rotates a vector by +90°.
#[inline]
pub(crate) fn perp(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkFrame {
    pub center: Vector2<f64>,
    pub orientation: f64,
    pub length: f64,
}

impl LinkFrame {
    pub fn tangent(&self) -> Vector2<f64> {
        unit(self.orientation)
    }

    /// End of the link nearer the body (its hinge, for a flagellum segment).
    pub fn proximal(&self) -> Vector2<f64> {
        self.center - self.tangent() * (self.length / 2.0)
    }

    pub fn distal(&self) -> Vector2<f64> {
        self.center + self.tangent() * (self.length / 2.0)
    }
}

/// Frames of every link: index 0 is the body, then flagellum segments in
/// flagellum-major order (link `l >= 1` is driven by joint column `l + 2`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkFrames {
    pub links: Vec<LinkFrame>,
}

impl LinkFrames {
    pub fn body(&self) -> &LinkFrame {
        &self.links[0]
    }
}

/// One link as seen while walking the chains, with what is needed to form
/// its velocity Jacobian.
pub(crate) struct LinkVisit<'a> {
    pub id: usize,
    pub frame: LinkFrame,
    pub body_center: Vector2<f64>,
    /// Mirror sign of the owning flagellum (1 for the body).
    pub sign: f64,
    /// Generalized-coordinate columns of the joints proximal to (and including)
    /// this link's own hinge; empty for the body.
    pub joint_cols: Range<usize>,
    /// Proximal hinge points matching `joint_cols`.
    pub hinges: &'a [Vector2<f64>],
}

impl LinkVisit<'_> {
    /// Translational velocity column of the link center for `col`.
    #[inline]
    pub fn linear_column(&self, col: usize) -> Vector2<f64> {
        match col {
            0 => Vector2::new(1.0, 0.0),
            1 => Vector2::new(0.0, 1.0),
            2 => perp(self.frame.center - self.body_center),
            c => {
                let j = c - self.joint_cols.start;
                perp(self.frame.center - self.hinges[j]) * self.sign
            }
        }
    }

    #[inline]
    pub fn angular_column(&self, col: usize) -> f64 {
        if col < 3 {
            if col == 2 {
                1.0
            } else {
                0.0
            }
        } else {
            self.sign
        }
    }
}

/// Walks body and chains in link order. `q` must already have the right length.
pub(crate) fn visit_links(
    config: &RobotConfig,
    q: &[f64],
    hinges: &mut Vec<Vector2<f64>>,
    mut visit: impl FnMut(&LinkVisit<'_>),
) {
    let body_center = Vector2::new(q[0], q[1]);
    let phi = q[2];
    let axis = unit(phi);
    visit(&LinkVisit {
        id: 0,
        frame: LinkFrame {
            center: body_center,
            orientation: phi,
            length: config.body.length,
        },
        body_center,
        sign: 1.0,
        joint_cols: 3..3,
        hinges: &[],
    });
    let mut id = 1;
    for f in &config.flagella {
        let s = f.sign();
        let first_col = 2 + id;
        let mut hinge = body_center + axis * f.attachment_offset;
        let mut heading = phi + s * f.attachment_angle;
        hinges.clear();
        for seg in 0..f.n_segments {
            heading += s * q[first_col + seg];
            let t = unit(heading);
            hinges.push(hinge);
            let frame = LinkFrame {
                center: hinge + t * (f.segment_length / 2.0),
                orientation: heading,
                length: f.segment_length,
            };
            visit(&LinkVisit {
                id,
                frame,
                body_center,
                sign: s,
                joint_cols: first_col..first_col + seg + 1,
                hinges,
            });
            hinge += t * f.segment_length;
            id += 1;
        }
    }
}

pub fn forward_kinematics(q: &GeneralizedCoords, config: &RobotConfig) -> Result<LinkFrames> {
    check_dim(config, q.dim())?;
    let qv = q.to_vector();
    let mut links = Vec::with_capacity(config.link_count());
    let mut hinges = Vec::new();
    visit_links(config, qv.as_slice(), &mut hinges, |v| links.push(v.frame));
    Ok(LinkFrames { links })
}

/// Maps `q̇` to the link center's `(vx, vy, ω)`; returned as a `3 × dim(q)` matrix.
pub fn link_jacobian(q: &GeneralizedCoords, config: &RobotConfig, link: usize) -> Result<DMatrix<f64>> {
    check_dim(config, q.dim())?;
    if link >= config.link_count() {
        return Err(SimError::InvalidLink(link));
    }
    let n = config.dof();
    let qv = q.to_vector();
    let mut jac = DMatrix::zeros(3, n);
    let mut hinges = Vec::new();
    visit_links(config, qv.as_slice(), &mut hinges, |v| {
        if v.id != link {
            return;
        }
        for col in (0..3).chain(v.joint_cols.clone()) {
            let lin = v.linear_column(col);
            jac[(0, col)] = lin.x;
            jac[(1, col)] = lin.y;
            jac[(2, col)] = v.angular_column(col);
        }
    });
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let config = validate_config(RobotConfig::default()).unwrap();
        assert_eq!(config.flagella.len(), 4);
        assert!(config.flagella.iter().all(|f| f.n_segments == 6));
        assert_eq!(config.dof(), 27);
    }

    #[test]
    fn zero_segment_length_is_rejected() {
        let mut config = RobotConfig::default();
        config.flagella[2].segment_length = 0.0;
        let err = validate_config(config).unwrap_err();
        assert_eq!(err.path, "flagella[2].segment_length");
        assert!(err.to_string().contains("segment_length must be > 0"));
    }

    #[test]
    fn attachment_outside_body_is_rejected() {
        let mut config = RobotConfig::default();
        config.flagella[0].attachment_offset = config.body.length;
        let err = validate_config(config).unwrap_err();
        assert_eq!(err.path, "flagella[0].attachment_offset");
    }

    #[test]
    fn fat_segments_and_empty_flagella_are_rejected() {
        let mut config = RobotConfig::default();
        config.flagella[1].segment_radius = 0.02;
        assert_eq!(
            validate_config(config).unwrap_err().path,
            "flagella[1].segment_radius"
        );
        let config = RobotConfig {
            flagella: vec![],
            ..RobotConfig::default()
        };
        assert_eq!(validate_config(config).unwrap_err().path, "flagella");
    }

    #[test]
    fn straight_chains_lie_along_attachment_direction() {
        let config = RobotConfig::default();
        let q = GeneralizedCoords::uniform(&config, 0.0);
        let frames = forward_kinematics(&q, &config).unwrap();
        let mut id = 1;
        for f in &config.flagella {
            let base = Vector2::new(f.attachment_offset, 0.0);
            let dir = unit(f.sign() * f.attachment_angle);
            for seg in 0..f.n_segments {
                let link = frames.links[id];
                let expected = base + dir * ((seg as f64 + 0.5) * f.segment_length);
                assert!((link.center - expected).norm() < 1e-15);
                assert!((link.orientation - f.sign() * f.attachment_angle).abs() < 1e-15);
                id += 1;
            }
        }
    }

    #[test]
    fn mirrored_flagellum_reflects_across_body_axis() {
        let config = RobotConfig::default();
        let mut q = GeneralizedCoords::uniform(&config, 0.0);
        for (i, a) in q.joint_angles.iter_mut().enumerate() {
            *a = 0.1 + 0.05 * (i % 6) as f64;
        }
        let frames = forward_kinematics(&q, &config).unwrap();
        // flagella 0 and 1 form a mirror pair with equal joint angles
        for seg in 0..6 {
            let a = frames.links[1 + seg];
            let b = frames.links[7 + seg];
            assert!((a.center.x - b.center.x).abs() < 1e-12);
            assert!((a.center.y + b.center.y).abs() < 1e-12);
            assert!((a.orientation + b.orientation).abs() < 1e-12);
        }
    }

    #[test]
    fn body_jacobian_is_pose_identity() {
        let config = RobotConfig::default();
        let q = GeneralizedCoords::uniform(&config, 0.3);
        let jac = link_jacobian(&q, &config, 0).unwrap();
        let mut expected = DMatrix::zeros(3, config.dof());
        expected.view_mut((0, 0), (3, 3)).fill_with_identity();
        assert_eq!(jac, expected);
    }

    #[test]
    fn distal_joint_columns_are_zero() {
        let config = RobotConfig::default();
        let q = GeneralizedCoords::uniform(&config, 0.2);
        // second segment of the first flagellum: joints 2..6 of that chain are distal
        let jac = link_jacobian(&q, &config, 2).unwrap();
        for col in 5..config.dof() {
            for row in 0..3 {
                assert_eq!(jac[(row, col)], 0.0);
            }
        }
        assert!(jac[(2, 3)] != 0.0 && jac[(2, 4)] != 0.0);
    }

    #[test]
    fn bad_inputs_are_reported() {
        let config = RobotConfig::default();
        let q = GeneralizedCoords::from_slice(&[0.0; 5]);
        assert!(matches!(
            forward_kinematics(&q, &config),
            Err(SimError::DimensionMismatch { expected: 27, actual: 5 })
        ));
        let q = GeneralizedCoords::uniform(&config, 0.0);
        assert!(matches!(
            link_jacobian(&q, &config, 25),
            Err(SimError::InvalidLink(25))
        ));
    }
}
