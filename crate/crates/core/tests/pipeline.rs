mod common;

use std::path::Path;

use beamlab::beamformer::MvdrOptions;
use beamlab::dsp::{fft_convolve, read_wav, stft, MultichannelWaveform, StftConfig};
use beamlab::dump::{read_complex, read_ints, read_mask, RTF_MASK_SCHEMA, RTF_SCHEMA};
use beamlab::linalg::hermitian_angle_deg;
use beamlab::pipeline::{beamform_dataset, export_features, Feature, Method};
use beamlab::rir::{simulate_rir, ArrayGeometry, RirOptions, RoomSpec};
use beamlab::rtf::{average_rtf, instantaneous_rtf, rtf_from_rirs, Weighting};
use beamlab::scene::{generate_dataset, Dataset, DatasetOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn small_dataset(root: &Path, corpus: &Path, seed: u64) -> Dataset {
    let opts = DatasetOptions {
        n_scenes: 2,
        seed,
        duration_range_s: [2.0, 3.0],
        aux_segment_s: 1.0,
        ..DatasetOptions::default()
    };
    generate_dataset(&opts, corpus, None, root).unwrap();
    Dataset::open(root).unwrap()
}

#[test]
fn datasets_repeat_and_record_the_requested_snr() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = common::corpus(tmp.path(), 3, 5);
    let a = small_dataset(&tmp.path().join("a"), &corpus, 11);
    let b = small_dataset(&tmp.path().join("b"), &corpus, 11);
    assert_eq!(a.index, b.index);
    for entry in &a.index.scenes {
        let ma = a.manifest(entry).unwrap();
        assert_eq!(ma, b.manifest(entry).unwrap());
        let files = ma.files.as_ref().unwrap();
        let wa = std::fs::read(a.path(&files.mixture)).unwrap();
        let wb = std::fs::read(b.path(&files.mixture)).unwrap();
        assert_eq!(wa, wb, "{} mixture differs", entry.scene_id);
        let snr = ma.measured_snr.unwrap();
        assert!(
            (snr.directional_db - ma.snr_directional_db).abs() < 0.1,
            "{}: directional {} vs {}",
            entry.scene_id,
            snr.directional_db,
            ma.snr_directional_db
        );
        assert!((snr.sensor_db - ma.snr_sensor_db).abs() < 0.1);
    }
    let c = small_dataset(&tmp.path().join("c"), &corpus, 12);
    assert_ne!(
        a.manifest(&a.index.scenes[0]).unwrap().room,
        c.manifest(&c.index.scenes[0]).unwrap().room
    );
}

#[test]
fn beamformers_and_exports_cover_every_scene() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = common::corpus(tmp.path(), 3, 6);
    let ds = small_dataset(&tmp.path().join("ds"), &corpus, 3);
    let out = tmp.path().join("out");
    let opts = MvdrOptions::default();
    for method in [Method::OracleMvdr, Method::EstimatedMvdr] {
        let report = beamform_dataset(&ds, method, &opts, &out).unwrap();
        assert!(report.failed.is_empty(), "{:?}", report.failed);
        assert_eq!(report.written.len(), 2);
        for (path, entry) in report.written.iter().zip(&ds.index.scenes) {
            let y = read_wav(path, Some(8000)).unwrap();
            let m = ds.manifest(entry).unwrap();
            let mix = read_wav(&ds.path(&m.files.as_ref().unwrap().mixture), Some(8000)).unwrap();
            assert_eq!((y.channels(), y.len()), (1, mix.len()));
            assert!(y.samples().iter().all(|v| v.is_finite()));
        }
    }

    let report = export_features(&ds, Feature::Rtf, &opts, &out).unwrap();
    assert!(report.failed.is_empty());
    let entry = &ds.index.scenes[0];
    let m = ds.manifest(entry).unwrap();
    let stem = out.join("rtf").join(&entry.scene_id);
    let (header, values) = read_complex(&stem, RTF_SCHEMA).unwrap();
    let enr = read_wav(&ds.path(&m.files.as_ref().unwrap().enrollment), Some(8000)).unwrap();
    let expected = instantaneous_rtf(
        &stft(&enr, &StftConfig::default()).unwrap(),
        0,
        opts.floor_db,
    )
    .unwrap();
    assert_eq!(header.shape, expected.values.shape());
    assert_eq!((header.frame_len, header.hop), (Some(256), Some(128)));
    let err = values
        .iter()
        .zip(expected.values.iter())
        .filter(|(_, e)| e.norm() < 1e3)
        .fold(0.0f64, |acc, (v, e)| {
            acc.max(((v.re as f64 - e.re).hypot(v.im as f64 - e.im)) / (1.0 + e.norm()))
        });
    assert!(err < 1e-5, "float32 dump error {err}");
    let mask_stem = out.join("rtf").join(format!("{}_mask", entry.scene_id));
    let (_, mask) = read_mask(&mask_stem, RTF_MASK_SCHEMA).unwrap();
    assert!(mask.iter().eq(expected.mask.iter()));
    assert!(read_complex(&stem, RTF_MASK_SCHEMA).is_err());

    export_features(&ds, Feature::Doa, &opts, &out).unwrap();
    let (_, doa) = read_ints(
        &out.join("doa").join(&entry.scene_id),
        beamlab::dump::DOA_SCHEMA,
    )
    .unwrap();
    assert_eq!(Some(doa[0]), m.desired_doa_index());
}

#[test]
fn averaged_rtf_matches_the_rir_in_free_field() {
    let room = RoomSpec::new([6.0, 5.0, 3.0], 0.3);
    let array = ArrayGeometry::uniform_linear([3.0, 2.5, 1.5], 4, 0.08, 0.3);
    let rir_opts = RirOptions {
        anechoic: true,
        ..RirOptions::default()
    };
    let rirs = simulate_rir(&room, &array, &[1.2, 1.4, 1.5], &rir_opts).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dry: Vec<f64> = (0..4 * 8000).map(|_| rng.sample(StandardNormal)).collect();
    let channels: Vec<Vec<f64>> = (0..4)
        .map(|j| fft_convolve(&dry, &rirs.rirs.row(j).to_vec())[..dry.len()].to_vec())
        .collect();
    let x = MultichannelWaveform::from_channels(&channels, 8000).unwrap();
    let spec = stft(&x, &StftConfig::default()).unwrap();
    let est = average_rtf(
        &instantaneous_rtf(&spec, 0, 40.0).unwrap(),
        Weighting::RefEnergy,
    );
    let truth = rtf_from_rirs(&rirs, 256, 0).unwrap();
    let mut angles: Vec<f64> = (10..=112)
        .map(|k| hermitian_angle_deg(&est.vector(k), &truth.vector(k)))
        .collect();
    angles.sort_by(f64::total_cmp);
    let median = angles[angles.len() / 2];
    assert!(median < 2.0, "median angle {median} deg");
}
