//! Scenario sampling, scene rendering and dataset generation.

mod corpus;
mod dataset;
mod noise;
mod render;
mod sampler;

pub use corpus::{
    load_mono, make_corpus, make_noise_dir, synth_utterance, Corpus, NoiseBank, Speaker,
    SynthCorpusOptions, Voice,
};
pub use dataset::{
    build_scene, generate_dataset, scene_id, Dataset, DatasetIndex, DatasetOptions, SceneEntry,
    DATASET_SCHEMA, INDEX_FILE,
};
pub(crate) use dataset::{check_schema, read_json, write_json};
pub use noise::{colored_noise, pink_noise, NoiseColor};
pub use render::{render_scene, snr_db, DrySignals, RenderOptions, SceneAudio};
pub use sampler::{
    sample_scene, AuxFiles, MeasuredSnr, Preset, SamePlacementConstraint, ScenarioConfig,
    SceneFiles, SceneManifest, SourceMaterial, SourcePlacement, SourceRole, SCENE_SCHEMA,
};
