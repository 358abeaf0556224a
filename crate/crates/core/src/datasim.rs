//! Synthetic stacking episodes.
//!
//! Each sample is a 43-value behavioral record of one attempt to stack a
//! theme object on a destination cube. Layout:
//!
//! | index  | content                                         |
//! |--------|-------------------------------------------------|
//! | 0      | theme type id                                   |
//! | 1-4    | orientation before action (quaternion w,x,y,z)  |
//! | 5-7    | placement offset of the action                  |
//! | 8-13   | spatial relation flags after settling           |
//! | 14-17  | orientation after settling (quaternion)         |
//! | 18-20  | relative position before action                 |
//! | 21-23  | relative position immediately after action      |
//! | 24-26  | relative position after physics                 |
//! | 27-29  | settle linear displacement                      |
//! | 30-32  | settle angular displacement (rotation vector)   |
//! | 33-35  | final linear velocity                           |
//! | 36-38  | final angular velocity                          |
//! | 39-41  | support polygon half extents and margin         |
//! | 42     | settle time                                     |
//!
//! The y axis is vertical. Positions are relative to the destination cube's
//! center, which sits 0.5 above the table.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const FEATURE_DIM: usize = 43;
/// Encoder input length once the type id is dropped.
pub const ENCODER_INPUT_DIM: usize = FEATURE_DIM - 1;

pub const SETTLE_DISPLACEMENT: std::ops::Range<usize> = 27..30;
pub const FINAL_VELOCITY: std::ops::Range<usize> = 33..36;

const PLACEMENT_SD: f64 = 0.08;
const YAW_SD: f64 = 0.15;
const DEST_HALF_HEIGHT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Cube,
    Sphere,
    Cylinder,
    Capsule,
    SmallCube,
    Egg,
    RectangularPrism,
    Pyramid,
    Cone,
}

impl Shape {
    pub const ALL: [Shape; 9] = [
        Shape::Cube,
        Shape::Sphere,
        Shape::Cylinder,
        Shape::Capsule,
        Shape::SmallCube,
        Shape::Egg,
        Shape::RectangularPrism,
        Shape::Pyramid,
        Shape::Cone,
    ];

    pub fn type_id(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Cube => "cube",
            Shape::Sphere => "sphere",
            Shape::Cylinder => "cylinder",
            Shape::Capsule => "capsule",
            Shape::SmallCube => "small_cube",
            Shape::Egg => "egg",
            Shape::RectangularPrism => "rectangular_prism",
            Shape::Pyramid => "pyramid",
            Shape::Cone => "cone",
        }
    }

    /// Cylinders and cones rest either on a flat face or on a curved edge.
    pub fn has_orientation(self) -> bool {
        matches!(self, Shape::Cylinder | Shape::Cone)
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|shape| shape.name() == s)
            .ok_or_else(|| Error::Format(format!("unknown shape {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    FlatDown,
    RoundDown,
    NotApplicable,
}

impl Orientation {
    pub fn name(self) -> &'static str {
        match self {
            Orientation::FlatDown => "flat_down",
            Orientation::RoundDown => "round_down",
            Orientation::NotApplicable => "not_applicable",
        }
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat_down" => Ok(Orientation::FlatDown),
            "round_down" => Ok(Orientation::RoundDown),
            "not_applicable" => Ok(Orientation::NotApplicable),
            _ => Err(Error::Format(format!("unknown orientation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Supercategory {
    FlatSided,
    Round,
}

impl Supercategory {
    pub fn name(self) -> &'static str {
        match self {
            Supercategory::FlatSided => "flat_sided",
            Supercategory::Round => "round",
        }
    }
}

/// One of the 11 evaluation labels: a shape, split by resting orientation
/// for cylinders and cones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ObjectClass {
    shape: Shape,
    orientation: Orientation,
}

impl ObjectClass {
    pub const CUBE: ObjectClass = ObjectClass::fixed(Shape::Cube, Orientation::NotApplicable);
    pub const SPHERE: ObjectClass = ObjectClass::fixed(Shape::Sphere, Orientation::NotApplicable);
    pub const CYLINDER_FLAT: ObjectClass = ObjectClass::fixed(Shape::Cylinder, Orientation::FlatDown);
    pub const CYLINDER_ROUND: ObjectClass =
        ObjectClass::fixed(Shape::Cylinder, Orientation::RoundDown);
    pub const CAPSULE: ObjectClass = ObjectClass::fixed(Shape::Capsule, Orientation::NotApplicable);
    pub const SMALL_CUBE: ObjectClass =
        ObjectClass::fixed(Shape::SmallCube, Orientation::NotApplicable);
    pub const EGG: ObjectClass = ObjectClass::fixed(Shape::Egg, Orientation::NotApplicable);
    pub const RECTANGULAR_PRISM: ObjectClass =
        ObjectClass::fixed(Shape::RectangularPrism, Orientation::NotApplicable);
    pub const PYRAMID: ObjectClass = ObjectClass::fixed(Shape::Pyramid, Orientation::NotApplicable);
    pub const CONE_FLAT: ObjectClass = ObjectClass::fixed(Shape::Cone, Orientation::FlatDown);
    pub const CONE_ROUND: ObjectClass = ObjectClass::fixed(Shape::Cone, Orientation::RoundDown);

    /// The evaluation label space, in confusion-matrix order.
    pub const ALL: [ObjectClass; 11] = [
        Self::CUBE,
        Self::SPHERE,
        Self::CYLINDER_FLAT,
        Self::CYLINDER_ROUND,
        Self::CAPSULE,
        Self::SMALL_CUBE,
        Self::EGG,
        Self::RECTANGULAR_PRISM,
        Self::PYRAMID,
        Self::CONE_FLAT,
        Self::CONE_ROUND,
    ];

    /// Classes seen during similarity training.
    pub const TRAINING: [ObjectClass; 7] = [
        Self::CUBE,
        Self::SMALL_CUBE,
        Self::RECTANGULAR_PRISM,
        Self::PYRAMID,
        Self::SPHERE,
        Self::CAPSULE,
        Self::EGG,
    ];

    const fn fixed(shape: Shape, orientation: Orientation) -> Self {
        ObjectClass { shape, orientation }
    }

    pub fn new(shape: Shape, orientation: Orientation) -> Result<Self> {
        let valid = if shape.has_orientation() {
            orientation != Orientation::NotApplicable
        } else {
            orientation == Orientation::NotApplicable
        };
        if !valid {
            return Err(Error::Contract(format!(
                "{} cannot have orientation {}",
                shape.name(),
                orientation.name()
            )));
        }
        Ok(ObjectClass { shape, orientation })
    }

    pub fn shape(self) -> Shape {
        self.shape
    }

    pub fn orientation(self) -> Orientation {
        self.orientation
    }

    /// Position in [`ObjectClass::ALL`].
    pub fn index(self) -> usize {
        Self::ALL
            .iter()
            .position(|c| *c == self)
            .expect("constructed classes are always in the label space")
    }

    pub fn short_name(self) -> &'static str {
        match (self.shape, self.orientation) {
            (Shape::Cube, _) => "cube",
            (Shape::Sphere, _) => "sphere",
            (Shape::Cylinder, Orientation::FlatDown) => "cyl-f",
            (Shape::Cylinder, _) => "cyl-r",
            (Shape::Capsule, _) => "cpsl",
            (Shape::SmallCube, _) => "scube",
            (Shape::Egg, _) => "egg",
            (Shape::RectangularPrism, _) => "rect",
            (Shape::Pyramid, _) => "pyr",
            (Shape::Cone, Orientation::FlatDown) => "cone-f",
            (Shape::Cone, _) => "cone-r",
        }
    }

    pub fn supercategory(self) -> Supercategory {
        match (self.shape, self.orientation) {
            (Shape::Cube | Shape::SmallCube | Shape::RectangularPrism | Shape::Pyramid, _) => {
                Supercategory::FlatSided
            }
            (Shape::Cylinder | Shape::Cone, Orientation::FlatDown) => Supercategory::FlatSided,
            _ => Supercategory::Round,
        }
    }

    pub fn is_training_class(self) -> bool {
        Self::TRAINING.contains(&self)
    }

    /// Whether an outcome is the one this class is kept for: flat-sided
    /// placements that stacked, round placements that did not.
    pub fn outcome_consistent(self, success: bool) -> bool {
        success == (self.supercategory() == Supercategory::FlatSided)
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ObjectClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.short_name() == s)
            .ok_or_else(|| Error::Format(format!("unknown object class {s:?}")))
    }
}

impl TryFrom<String> for ObjectClass {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ObjectClass> for String {
    fn from(c: ObjectClass) -> String {
        c.short_name().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackSample {
    pub features: Vec<f64>,
    pub class: ObjectClass,
    pub success: bool,
}

impl StackSample {
    pub fn new(features: Vec<f64>, class: ObjectClass, success: bool) -> Result<Self> {
        if features.len() != FEATURE_DIM {
            return Err(Error::Shape(format!(
                "sample has {} features, expected {FEATURE_DIM}",
                features.len()
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("feature {i} is not finite")));
        }
        Ok(StackSample {
            features,
            class,
            success,
        })
    }

    pub fn settle_displacement(&self) -> f64 {
        norm(&self.features[SETTLE_DISPLACEMENT])
    }

    /// Values fed to the encoder. The type id (index 0) is dropped unless
    /// `include_type_id` is set.
    pub fn encoder_input(&self, include_type_id: bool) -> &[f64] {
        if include_type_id {
            &self.features
        } else {
            &self.features[1..]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Samples emitted per evaluation label (cylinder and cone get this many
    /// in each orientation).
    pub samples_per_class: usize,
    pub noise_scale: f64,
    /// Maximum horizontal placement error that still stacks a flat face.
    pub placement_tolerance: f64,
    pub classes: Vec<ObjectClass>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            samples_per_class: 700,
            noise_scale: 0.05,
            placement_tolerance: 0.25,
            classes: ObjectClass::ALL.to_vec(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_class == 0 {
            return Err(Error::Config("samples_per_class must be at least 1".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::Config(format!(
                "noise_scale must be a finite non-negative number, got {}",
                self.noise_scale
            )));
        }
        if !(self.placement_tolerance > 0.0 && self.placement_tolerance.is_finite()) {
            return Err(Error::Config("placement_tolerance must be positive".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::Config("no object classes enabled".into()));
        }
        Ok(())
    }
}

/// Generates `samples_per_class` episodes for every enabled class.
///
/// Each class draws from its own stream seeded by `(seed, class name)`, so
/// output for one class does not depend on which other classes are enabled.
pub fn generate_dataset(config: &GeneratorConfig, seed: u64) -> Result<Vec<StackSample>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.samples_per_class * config.classes.len());
    for &class in &config.classes {
        let mut rng = seed::named_rng(seed, &format!("generate/{}", class.short_name()));
        for _ in 0..config.samples_per_class {
            out.push(simulate_episode(class, config, &mut rng));
        }
    }
    Ok(out)
}

struct Geometry {
    half_height: f64,
    /// Support polygon half extents (x, z) for flat contact, contact patch
    /// radius for curved contact.
    footprint: (f64, f64),
    /// Rolling radius for curved contact.
    radius: f64,
    /// Resting tilt away from upright, radians.
    tilt: f64,
    base_settle_time: f64,
}

fn geometry(class: ObjectClass) -> Geometry {
    use std::f64::consts::FRAC_PI_2;
    let g = |half_height, footprint, radius, tilt, base_settle_time| Geometry {
        half_height,
        footprint,
        radius,
        tilt,
        base_settle_time,
    };
    match (class.shape(), class.orientation()) {
        (Shape::Cube, _) => g(0.5, (0.5, 0.5), 0.5, 0.0, 0.20),
        (Shape::SmallCube, _) => g(0.5, (0.25, 0.25), 0.5, 0.0, 0.20),
        (Shape::RectangularPrism, _) => g(0.3, (0.75, 0.4), 0.3, 0.0, 0.28),
        (Shape::Pyramid, _) => g(0.42, (0.5, 0.5), 0.42, 0.0, 0.36),
        (Shape::Cylinder, Orientation::FlatDown) => g(0.62, (0.4, 0.4), 0.4, 0.0, 0.44),
        (Shape::Cone, Orientation::FlatDown) => g(0.38, (0.45, 0.45), 0.45, 0.0, 0.52),
        (Shape::Sphere, _) => g(0.5, (0.02, 0.02), 0.5, 0.0, 1.0),
        (Shape::Capsule, _) => g(0.3, (0.05, 0.02), 0.3, FRAC_PI_2, 1.3),
        (Shape::Egg, _) => g(0.35, (0.03, 0.03), 0.35, 1.3, 1.6),
        (Shape::Cylinder, _) => g(0.4, (0.06, 0.02), 0.4, FRAC_PI_2, 1.1),
        (Shape::Cone, _) => g(0.3, (0.04, 0.02), 0.3, 1.1, 1.9),
    }
}

/// Rolling behaviour of round classes: (mean final speed, touching probability).
fn roll_profile(class: ObjectClass) -> (f64, f64) {
    match class.shape() {
        Shape::Sphere => (0.9, 0.1),
        Shape::Capsule => (0.6, 0.2),
        Shape::Egg => (0.4, 0.35),
        Shape::Cylinder => (0.75, 0.2),
        _ => (0.3, 0.5),
    }
}

type Quat = [f64; 4];

fn quat_mul(a: Quat, b: Quat) -> Quat {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn axis_angle(axis: [f64; 3], angle: f64) -> Quat {
    let (s, c) = (angle / 2.0).sin_cos();
    [c, axis[0] * s, axis[1] * s, axis[2] * s]
}

fn random_unit_quat(rng: &mut ChaCha8Rng) -> Quat {
    let mut q = [0.0; 4];
    for v in &mut q {
        *v = StandardNormal.sample(rng);
    }
    let n = norm(&q);
    q.map(|v| v / n)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn simulate_episode(class: ObjectClass, config: &GeneratorConfig, rng: &mut ChaCha8Rng) -> StackSample {
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    let geo = geometry(class);
    let round = class.supercategory() == Supercategory::Round;
    let mut f = vec![0.0; FEATURE_DIM];
    f[0] = class.shape().type_id() as f64;

    // Resting pose before pickup: the agent grasps objects in a canonical
    // heading, so yaw only jitters about zero.
    let yaw = Normal::new(0.0, YAW_SD).expect("positive sd").sample(rng);
    let q_before = if class.shape() == Shape::Sphere {
        random_unit_quat(rng)
    } else {
        quat_mul(axis_angle([0.0, 1.0, 0.0], yaw), axis_angle([1.0, 0.0, 0.0], geo.tilt))
    };
    f[1..5].copy_from_slice(&q_before);

    let placement = Normal::new(0.0, PLACEMENT_SD).expect("positive sd");
    let (dx, dz) = (placement.sample(rng), placement.sample(rng));
    let dy = DEST_HALF_HEIGHT + geo.half_height;
    f[5..8].copy_from_slice(&[dx, dy, dz]);
    let offset = dx.hypot(dz);

    let stacked = !round && offset < config.placement_tolerance;

    // Pose before pickup: somewhere on the table around the destination.
    let r0 = rng.random_range(1.0..3.0);
    let a0 = rng.random_range(0.0..TAU);
    let table_y = geo.half_height - DEST_HALF_HEIGHT;
    f[18..21].copy_from_slice(&[r0 * a0.cos(), table_y, r0 * a0.sin()]);
    f[21..24].copy_from_slice(&[dx, dy, dz]);

    let mut q_after = q_before;
    let settle: [f64; 3];
    let time;
    if stacked {
        let jr = rng.random_range(0.0..0.02);
        let ja = rng.random_range(0.0..TAU);
        settle = [jr * ja.cos(), 0.0, jr * ja.sin()];
        f[8..14].copy_from_slice(&[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let spin = rng.random_range(-0.01..0.01);
        f[30..33].copy_from_slice(&[0.0, spin, 0.0]);
        time = geo.base_settle_time + rng.random_range(0.0..0.03);
    } else {
        let (distance, direction, speed, touching_p) = if round {
            let direction = match class.shape() {
                Shape::Sphere => dz.atan2(dx) + Normal::new(0.0, 0.3).unwrap().sample(rng),
                Shape::Egg => {
                    let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    yaw + side * FRAC_PI_2 + rng.random_range(-PI / 6.0..PI / 6.0)
                }
                Shape::Cone => yaw + rng.random_range(-0.5..0.5),
                _ => {
                    let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    yaw + side * FRAC_PI_2
                }
            };
            let (mean_speed, touching_p) = roll_profile(class);
            let speed = mean_speed * rng.random_range(0.8..1.2);
            (rng.random_range(0.5..2.0), direction, speed, touching_p)
        } else {
            // Flat face placed off the edge: tips over and slides off.
            (rng.random_range(0.3..0.8), dz.atan2(dx), 0.0, 0.6)
        };
        let u = [direction.cos(), 0.0, direction.sin()];
        settle = [distance * u[0], table_y - dy, distance * u[2]];
        let touching = if rng.random_bool(touching_p) { 1.0 } else { 0.0 };
        f[8..14].copy_from_slice(&[0.0, touching, 0.0, 1.0, 1.0, if round { 1.0 } else { 0.0 }]);

        // Rolling about the horizontal axis perpendicular to the motion.
        let axis = [u[2], 0.0, -u[0]];
        let angle = distance / geo.radius;
        f[30..33].copy_from_slice(&axis.map(|a| a * angle));
        q_after = quat_mul(axis_angle(axis, angle), q_before);

        let velocity = u.map(|c| c * speed);
        f[33..36].copy_from_slice(&velocity);
        let mut omega = axis.map(|a| a * speed / geo.radius);
        if class.shape() == Shape::Cone {
            // A cone on its side turns about its apex.
            omega[1] = speed / (2.0 * geo.radius);
        } else if class.shape() == Shape::Egg {
            omega[1] = rng.random_range(-0.3..0.3);
        }
        f[36..39].copy_from_slice(&omega);
        time = geo.base_settle_time + distance / (speed + 0.5);
    }
    f[14..18].copy_from_slice(&q_after);
    f[24..27].copy_from_slice(&[dx + settle[0], dy + settle[1], dz + settle[2]]);
    f[27..30].copy_from_slice(&settle);

    let margin = geo.footprint.0.min(geo.footprint.1) - offset;
    f[39..42].copy_from_slice(&[geo.footprint.0, geo.footprint.1, margin]);
    f[42] = time;

    if config.noise_scale > 0.0 {
        let noise = Normal::new(0.0, config.noise_scale).expect("validated noise scale");
        for (i, v) in f.iter_mut().enumerate() {
            // Type id and relation flags stay categorical.
            if i != 0 && !(8..14).contains(&i) {
                *v += noise.sample(rng);
            }
        }
    }

    StackSample {
        features: f,
        class,
        success: stacked,
    }
}

/// Per-dimension standardization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Dimensions whose spread fell below `CONSTANT_STD`.
    pub constant: Vec<bool>,
}

impl ScalerParams {
    pub const CONSTANT_STD: f64 = 1e-12;

    pub fn transform(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(self.mean.iter().zip(&self.std).zip(&self.constant))
            .map(|(x, ((m, s), c))| if *c { 0.0 } else { (x - m) / s })
            .collect()
    }

    /// Inverse of [`ScalerParams::transform`]; constant dimensions return their mean.
    pub fn inverse_transform(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.mean.iter().zip(&self.std).zip(&self.constant))
            .map(|(z, ((m, s), c))| if *c { *m } else { z * s + m })
            .collect()
    }

    pub fn apply(&self, sample: &StackSample) -> StackSample {
        StackSample {
            features: self.transform(&sample.features),
            class: sample.class,
            success: sample.success,
        }
    }
}

/// Fits per-dimension mean and population standard deviation.
pub fn fit_standardizer(samples: &[StackSample]) -> Result<ScalerParams> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "standardizer needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mut mean = vec![0.0; FEATURE_DIM];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(&s.features) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; FEATURE_DIM];
    for s in samples {
        for ((v, x), m) in var.iter_mut().zip(&s.features).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let std: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
    let constant = std.iter().map(|s| *s < ScalerParams::CONSTANT_STD).collect();
    Ok(ScalerParams {
        mean,
        std,
        constant,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Held-out samples per class used to build the object index.
    pub index_per_class: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_per_class: 500,
            test_per_class: 100,
            index_per_class: 50,
        }
    }
}

/// Standardized train / test / index partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<StackSample>,
    pub test: Vec<StackSample>,
    pub index: Vec<StackSample>,
    pub scaler: ScalerParams,
}

/// Partitions one generation run without replacement.
///
/// Only outcome-consistent samples are used (flat-sided labels that stacked,
/// round labels that did not). Training draws from the 7 training classes
/// only; test and index draw from all 11. The scaler is fit on the training
/// portion and applied to all three.
pub fn build_split(samples: &[StackSample], config: &SplitConfig, seed: u64) -> Result<DatasetSplit> {
    let mut by_class: BTreeMap<usize, Vec<&StackSample>> = BTreeMap::new();
    for s in samples.iter().filter(|s| s.class.outcome_consistent(s.success)) {
        by_class.entry(s.class.index()).or_default().push(s);
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut index = Vec::new();
    for class in ObjectClass::ALL {
        let train_n = if class.is_training_class() {
            config.train_per_class
        } else {
            0
        };
        let needed = train_n + config.test_per_class + config.index_per_class;
        let mut pool = by_class.remove(&class.index()).unwrap_or_default();
        if pool.len() < needed {
            return Err(Error::Shortage {
                class: class.short_name().to_string(),
                needed,
                available: pool.len(),
            });
        }
        let mut rng = seed::named_rng(seed, &format!("split/{}", class.short_name()));
        pool.shuffle(&mut rng);
        let (tr, rest) = pool.split_at(train_n);
        let (te, rest) = rest.split_at(config.test_per_class);
        train.extend(tr.iter().map(|s| (*s).clone()));
        test.extend(te.iter().map(|s| (*s).clone()));
        index.extend(rest[..config.index_per_class].iter().map(|s| (*s).clone()));
    }

    let scaler = fit_standardizer(&train)?;
    let apply = |v: Vec<StackSample>| v.iter().map(|s| scaler.apply(s)).collect::<Vec<_>>();
    Ok(DatasetSplit {
        train: apply(train),
        test: apply(test),
        index: apply(index),
        scaler,
    })
}

pub fn csv_header() -> Vec<String> {
    let mut header = vec!["class".to_string(), "orientation".into(), "success".into()];
    header.extend((0..FEATURE_DIM).map(|i| format!("f{i}")));
    header
}

pub fn write_csv<W: Write>(writer: W, samples: &[StackSample]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(csv_header())?;
    for s in samples {
        let mut row = vec![
            s.class.shape().name().to_string(),
            s.class.orientation().name().to_string(),
            s.success.to_string(),
        ];
        row.extend(s.features.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<StackSample>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != csv_header() {
        return Err(Error::Format("dataset header does not match class,orientation,success,f0..f42".into()));
    }
    let mut out = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let ctx = |e: String| Error::Format(format!("row {}: {e}", line + 2));
        let shape: Shape = record[0].parse().map_err(|e: Error| ctx(e.to_string()))?;
        let orientation: Orientation = record[1].parse().map_err(|e: Error| ctx(e.to_string()))?;
        let class = ObjectClass::new(shape, orientation).map_err(|e| ctx(e.to_string()))?;
        let success = match &record[2] {
            "true" => true,
            "false" => false,
            other => return Err(ctx(format!("bad success value {other:?}"))),
        };
        let features = record
            .iter()
            .skip(3)
            .map(|v| v.parse::<f64>().map_err(|e| ctx(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        out.push(StackSample::new(features, class, success).map_err(|e| ctx(e.to_string()))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(features: Vec<f64>) -> StackSample {
        StackSample::new(features, ObjectClass::CUBE, true).unwrap()
    }

    #[test]
    fn label_space_has_eleven_classes_and_seven_training() {
        assert_eq!(ObjectClass::ALL.len(), 11);
        for (i, c) in ObjectClass::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(c.short_name().parse::<ObjectClass>().unwrap(), *c);
        }
        assert!(ObjectClass::TRAINING
            .iter()
            .all(|c| !c.shape().has_orientation()));
    }

    #[test]
    fn orientation_only_for_cylinder_and_cone() {
        assert!(ObjectClass::new(Shape::Cube, Orientation::FlatDown).is_err());
        assert!(ObjectClass::new(Shape::Cone, Orientation::NotApplicable).is_err());
        assert!(ObjectClass::new(Shape::Cone, Orientation::RoundDown).is_ok());
    }

    #[test]
    fn supercategory_contract() {
        use Supercategory::*;
        let expected = [
            FlatSided, Round, FlatSided, Round, Round, FlatSided, Round, FlatSided, FlatSided,
            FlatSided, Round,
        ];
        for (c, s) in ObjectClass::ALL.iter().zip(expected) {
            assert_eq!(c.supercategory(), s, "{c}");
        }
    }

    #[test]
    fn standardizer_symmetric_pair() {
        let mut a = vec![0.0; FEATURE_DIM];
        let mut b = vec![0.0; FEATURE_DIM];
        a[1] = -1.0;
        b[1] = 1.0;
        let scaler = fit_standardizer(&[sample(a), sample(b)]).unwrap();
        assert_eq!(scaler.mean[1], 0.0);
        assert_eq!(scaler.std[1], 1.0);
    }

    #[test]
    fn standardizer_flags_constant_dimensions() {
        let mut a = vec![3.0; FEATURE_DIM];
        let b = vec![3.0; FEATURE_DIM];
        a[5] = 4.0;
        let scaler = fit_standardizer(&[sample(a.clone()), sample(b)]).unwrap();
        assert!(scaler.constant[0]);
        assert!(!scaler.constant[5]);
        let t = scaler.transform(&a);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[5], 1.0);
    }

    #[test]
    fn standardizer_needs_two_samples() {
        assert!(matches!(fit_standardizer(&[]), Err(Error::InsufficientData(_))));
        let one = [sample(vec![0.0; FEATURE_DIM])];
        assert!(matches!(fit_standardizer(&one), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = GeneratorConfig {
            noise_scale: -0.1,
            ..Default::default()
        };
        assert!(matches!(generate_dataset(&cfg, 1), Err(Error::Config(_))));
        cfg.noise_scale = 0.0;
        cfg.classes.clear();
        assert!(matches!(generate_dataset(&cfg, 1), Err(Error::Config(_))));
    }

    #[test]
    fn noiseless_spheres_always_roll_off() {
        let cfg = GeneratorConfig {
            noise_scale: 0.0,
            samples_per_class: 200,
            classes: vec![ObjectClass::SPHERE],
            ..Default::default()
        };
        for s in generate_dataset(&cfg, 3).unwrap() {
            assert!(!s.success);
            assert!(s.settle_displacement() >= 0.5);
        }
    }

    #[test]
    fn noiseless_flat_stacks_barely_move() {
        let cfg = GeneratorConfig {
            noise_scale: 0.0,
            samples_per_class: 200,
            classes: vec![ObjectClass::CUBE, ObjectClass::CONE_FLAT],
            ..Default::default()
        };
        for s in generate_dataset(&cfg, 5).unwrap() {
            let offset = s.features[5].hypot(s.features[7]);
            if offset < cfg.placement_tolerance {
                assert!(s.success);
                assert!(s.settle_displacement() < 0.05);
            } else {
                assert!(!s.success);
            }
        }
    }

    #[test]
    fn round_samples_keep_moving() {
        let cfg = GeneratorConfig {
            noise_scale: 0.0,
            samples_per_class: 50,
            classes: vec![ObjectClass::EGG, ObjectClass::CYLINDER_ROUND, ObjectClass::CONE_ROUND],
            ..Default::default()
        };
        for s in generate_dataset(&cfg, 9).unwrap() {
            assert!(!s.success);
            let d = &s.features[SETTLE_DISPLACEMENT];
            let horizontal = d[0].hypot(d[2]);
            assert!((0.5..2.0).contains(&horizontal));
            assert!(norm(&s.features[FINAL_VELOCITY]) > 0.0);
        }
    }

    #[test]
    fn shortage_names_the_class() {
        let cfg = GeneratorConfig {
            samples_per_class: 100,
            ..Default::default()
        };
        let data = generate_dataset(&cfg, 1).unwrap();
        match build_split(&data, &SplitConfig::default(), 1) {
            Err(Error::Shortage { class, .. }) => assert_eq!(class, "cube"),
            other => panic!("expected shortage, got {other:?}"),
        }
    }

    #[test]
    fn csv_roundtrip() {
        let cfg = GeneratorConfig {
            samples_per_class: 3,
            ..Default::default()
        };
        let data = generate_dataset(&cfg, 11).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("class,orientation,success,f0,f1,"));
        assert!(!text.contains('\r'));
        assert_eq!(read_csv(&buf[..]).unwrap(), data);
    }
}
