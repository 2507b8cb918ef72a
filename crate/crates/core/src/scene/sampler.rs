use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rir::{ArrayGeometry, Point3, RoomSpec, DEFAULT_SPEED_OF_SOUND_MPS};

pub const SCENE_SCHEMA: &str = "beamlab.scene/1";

/// Independent random streams drawn from one scene seed.
pub(crate) mod stream {
    pub const GEOMETRY: u64 = 0;
    pub const SIGNALS: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const DRY_NOISE: u64 = 3;
}

pub(crate) fn scene_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceRole {
    Desired,
    Interference,
    DirectionalNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourcePlacement {
    pub role: SourceRole,
    pub position_m: Point3,
    /// Azimuth from the array endfire axis; broadside is 90°.
    pub doa_deg: f64,
    /// Distance from the array centroid.
    pub distance_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[default]
    Random,
    SameDoa,
}

/// Both speakers on one ray from the array centre at different distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamePlacementConstraint {
    pub min_distance_gap_m: f64,
    /// Minimum angular separation between the noise source and the shared
    /// speaker DOA.
    pub min_noise_separation_deg: f64,
}

impl Default for SamePlacementConstraint {
    fn default() -> Self {
        Self {
            min_distance_gap_m: 0.5,
            min_noise_separation_deg: 30.0,
        }
    }
}

/// Ranges of the scenario distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub room_dim_range_m: [f64; 2],
    pub t60_range_s: [f64; 2],
    pub distance_range_m: [f64; 2],
    pub doa_range_deg: [f64; 2],
    pub snr_directional_range_db: [f64; 2],
    pub snr_sensor_db: f64,
    pub num_mics: usize,
    pub mic_spacing_m: f64,
    pub mic_height_range_m: [f64; 2],
    pub mic_wall_clearance_m: f64,
    pub source_wall_clearance_m: f64,
    pub reference_mic: usize,
    pub max_placement_attempts: usize,
    pub speed_of_sound_mps: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            room_dim_range_m: [3.0, 10.0],
            t60_range_s: [0.2, 0.8],
            distance_range_m: [1.0, 4.0],
            doa_range_deg: [0.0, 180.0],
            snr_directional_range_db: [-5.0, 20.0],
            snr_sensor_db: 20.0,
            num_mics: 4,
            mic_spacing_m: 0.08,
            mic_height_range_m: [1.0, 2.0],
            mic_wall_clearance_m: 0.7,
            source_wall_clearance_m: 0.5,
            reference_mic: 0,
            max_placement_attempts: 100,
            speed_of_sound_mps: DEFAULT_SPEED_OF_SOUND_MPS,
        }
    }
}

/// Relative paths of everything written for one scene.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SceneFiles {
    pub mixture: String,
    pub desired: String,
    pub interference: String,
    pub enrollment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux: Option<AuxFiles>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AuxFiles {
    pub desired_plus_noise: String,
    pub noise_only: String,
    pub interference_plus_noise: String,
    pub directional_noise: String,
    pub sensor_noise: String,
}

/// Where the dry material of a scene came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SourceMaterial {
    pub desired_speaker: String,
    pub desired_utterance: String,
    pub enrollment_utterance: String,
    pub interference_speaker: String,
    pub interference_utterance: String,
    pub noise: String,
    pub duration_s: f64,
}

/// SNRs re-measured on the rendered signals at the reference mic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredSnr {
    pub directional_db: f64,
    pub sensor_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub schema: String,
    pub scene_id: String,
    pub seed: u64,
    pub preset: Preset,
    pub sample_rate_hz: u32,
    pub room: RoomSpec,
    pub array: ArrayGeometry,
    pub array_azimuth_deg: f64,
    pub placements: Vec<SourcePlacement>,
    pub snr_directional_db: f64,
    pub snr_sensor_db: f64,
    /// SNRs are measured against the reverberant desired speaker at this mic.
    pub snr_reference_mic: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<SourceMaterial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_snr: Option<MeasuredSnr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub files: Option<SceneFiles>,
}

impl SceneManifest {
    pub fn placement(&self, role: SourceRole) -> Option<&SourcePlacement> {
        self.placements.iter().find(|p| p.role == role)
    }

    /// DOA of the desired speaker rounded to whole degrees.
    pub fn desired_doa_index(&self) -> Option<i32> {
        self.placement(SourceRole::Desired)
            .map(|p| p.doa_deg.round() as i32)
    }
}

fn uniform(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.random_range(range[0]..range[1])
    } else {
        range[0]
    }
}

struct Frame {
    center: Point3,
    axis: Point3,
    normal: Point3,
}

impl Frame {
    fn point(&self, doa_deg: f64, distance: f64, side: f64) -> Point3 {
        let th = doa_deg.to_radians();
        let (c, s) = (th.cos(), side * th.sin());
        [
            self.center[0] + distance * (c * self.axis[0] + s * self.normal[0]),
            self.center[1] + distance * (c * self.axis[1] + s * self.normal[1]),
            self.center[2],
        ]
    }
}

impl ScenarioConfig {
    fn sample_room(&self, rng: &mut ChaCha8Rng) -> Result<RoomSpec> {
        for _ in 0..self.max_placement_attempts.max(1) {
            let dims = [
                uniform(rng, self.room_dim_range_m),
                uniform(rng, self.room_dim_range_m),
                uniform(rng, self.room_dim_range_m),
            ];
            let mut room = RoomSpec::new(dims, uniform(rng, self.t60_range_s));
            room.speed_of_sound_mps = self.speed_of_sound_mps;
            if room.sabine_absorption().is_ok() {
                return Ok(room);
            }
        }
        Err(Error::PlacementFailed {
            attempts: self.max_placement_attempts,
            reason: "no Sabine-feasible room".into(),
        })
    }

    fn sample_array(&self, rng: &mut ChaCha8Rng, room: &RoomSpec) -> Option<(ArrayGeometry, f64)> {
        let c = self.mic_wall_clearance_m;
        let height_hi = self.mic_height_range_m[1].min(room.dims_m[2] - c);
        let height_lo = self.mic_height_range_m[0].max(c);
        if height_hi < height_lo || room.dims_m[0] < 2.0 * c || room.dims_m[1] < 2.0 * c {
            return None;
        }
        let center = [
            uniform(rng, [c, room.dims_m[0] - c]),
            uniform(rng, [c, room.dims_m[1] - c]),
            uniform(rng, [height_lo, height_hi]),
        ];
        let azimuth = rng.random_range(0.0..2.0 * PI);
        let mut array =
            ArrayGeometry::uniform_linear(center, self.num_mics, self.mic_spacing_m, azimuth);
        array.reference_mic_index = self.reference_mic;
        array.validate(room, c).ok()?;
        Some((array, azimuth))
    }

    fn source_fits(&self, room: &RoomSpec, p: &Point3) -> bool {
        room.wall_clearance(p) >= self.source_wall_clearance_m
    }

    /// Draws one scene of the distribution.
    pub fn sample(
        &self,
        seed: u64,
        constraint: Option<&SamePlacementConstraint>,
    ) -> Result<SceneManifest> {
        if self.num_mics == 0 || self.reference_mic >= self.num_mics {
            return Err(Error::InvalidConfig(format!(
                "reference mic {} with {} mics",
                self.reference_mic, self.num_mics
            )));
        }
        let mut rng = scene_rng(seed, stream::GEOMETRY);
        let room = self.sample_room(&mut rng)?;
        let snr_directional_db = uniform(&mut rng, self.snr_directional_range_db);
        for _ in 0..self.max_placement_attempts {
            let Some((array, azimuth)) = self.sample_array(&mut rng, &room) else {
                continue;
            };
            let frame = Frame {
                center: array.centroid(),
                axis: array.axis(),
                normal: [-azimuth.sin(), azimuth.cos(), 0.0],
            };
            let Some(placements) = self.sample_sources(&mut rng, &room, &frame, constraint) else {
                continue;
            };
            return Ok(SceneManifest {
                schema: SCENE_SCHEMA.into(),
                scene_id: format!("seed_{seed}"),
                seed,
                preset: if constraint.is_some() {
                    Preset::SameDoa
                } else {
                    Preset::Random
                },
                sample_rate_hz: crate::dsp::DEFAULT_SAMPLE_RATE_HZ,
                room,
                array,
                array_azimuth_deg: azimuth.to_degrees(),
                placements,
                snr_directional_db,
                snr_sensor_db: self.snr_sensor_db,
                snr_reference_mic: self.reference_mic,
                sources: None,
                measured_snr: None,
                files: None,
            });
        }
        Err(Error::PlacementFailed {
            attempts: self.max_placement_attempts,
            reason: format!(
                "room {:.2} x {:.2} x {:.2} m cannot host the sources",
                room.dims_m[0], room.dims_m[1], room.dims_m[2]
            ),
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
        let doa = uniform(rng, self.doa_range_deg);
        let dist = uniform(rng, self.distance_range_m);
        let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        (doa, dist, side)
    }

    /// Rejection-samples one source position that keeps its wall clearance.
    fn place_one(
        &self,
        rng: &mut ChaCha8Rng,
        room: &RoomSpec,
        frame: &Frame,
        role: SourceRole,
        accept_doa: impl Fn(f64) -> bool,
    ) -> Option<SourcePlacement> {
        for _ in 0..self.max_placement_attempts {
            let (doa, dist, side) = self.draw(rng);
            let p = frame.point(doa, dist, side);
            if accept_doa(doa) && self.source_fits(room, &p) {
                return Some(SourcePlacement {
                    role,
                    position_m: p,
                    doa_deg: doa,
                    distance_m: dist,
                });
            }
        }
        None
    }

    fn sample_sources(
        &self,
        rng: &mut ChaCha8Rng,
        room: &RoomSpec,
        frame: &Frame,
        constraint: Option<&SamePlacementConstraint>,
    ) -> Option<Vec<SourcePlacement>> {
        let Some(c) = constraint else {
            return Some(vec![
                self.place_one(rng, room, frame, SourceRole::Desired, |_| true)?,
                self.place_one(rng, room, frame, SourceRole::Interference, |_| true)?,
                self.place_one(rng, room, frame, SourceRole::DirectionalNoise, |_| true)?,
            ]);
        };
        for _ in 0..self.max_placement_attempts {
            let (doa, r0, side) = self.draw(rng);
            let r1 = uniform(rng, self.distance_range_m);
            let (p0, p1) = (frame.point(doa, r0, side), frame.point(doa, r1, side));
            if (r0 - r1).abs() < c.min_distance_gap_m
                || !self.source_fits(room, &p0)
                || !self.source_fits(room, &p1)
            {
                continue;
            }
            let sep = c.min_noise_separation_deg;
            let noise = self.place_one(rng, room, frame, SourceRole::DirectionalNoise, |dn| {
                (dn - doa).abs() >= sep
            })?;
            let place = |role, position_m, distance_m| SourcePlacement {
                role,
                position_m,
                doa_deg: doa,
                distance_m,
            };
            return Some(vec![
                place(SourceRole::Desired, p0, r0),
                place(SourceRole::Interference, p1, r1),
                noise,
            ]);
        }
        None
    }
}

/// One scene from the default distribution.
pub fn sample_scene(
    seed: u64,
    constraint: Option<&SamePlacementConstraint>,
) -> Result<SceneManifest> {
    ScenarioConfig::default().sample(seed, constraint)
}
