//! Cross-module integration: corpus generation through training, bundling,
//! and design, checking that every hand-off between modules is lossless and
//! deterministic. Uses a deliberately small corpus and epoch budget so the
//! whole file runs in seconds; the full-scale gates live in `acceptance.rs`.

use tempfile::tempdir;

use msinn::dataset::{generate, load_dataset, save_dataset, split};
use msinn::designer::{
    design, evaluate, load_bundle, save_bundle, train_inverse, ModelManifest, Variant,
};
use msinn::nn::TrainConfig;
use msinn::spectral::{extract_notches, target_to_vector, vector_to_target};
use msinn::surrogate::{simulate, SurrogateConfig};
use msinn::Real;

#[test]
fn corpus_survives_disk_and_regeneration() {
    let config = SurrogateConfig::<Real>::default();
    let corpus = generate::<Real>(80, 11, &config, true, false).unwrap();
    let again = generate::<Real>(80, 11, &config, true, false).unwrap();
    assert_eq!(corpus, again, "same seed must regenerate the same corpus");

    let dir = tempdir().unwrap();
    let path = dir.path().join("corpus.msds");
    save_dataset(&corpus, &path).unwrap();
    let loaded = load_dataset::<Real>(&path).unwrap();
    assert_eq!(corpus, loaded, "a corpus must round-trip through disk");

    // The stored features are exactly what the featurizer produces from the
    // sample's own simulated spectrum - the pipeline invariant every
    // training run relies on.
    for sample in corpus.samples().iter().take(10) {
        let target = extract_notches(&simulate(&sample.codes, &config));
        let features = target_to_vector(&target).unwrap();
        assert_eq!(features, sample.features);
        // And the normalized form still describes the same notches.
        let recovered = vector_to_target(&sample.features);
        assert_eq!(recovered.len(), target.len());
    }
}

#[test]
fn train_bundle_reload_design_round_trip() {
    let config = SurrogateConfig::<Real>::default();
    let corpus = generate::<Real>(80, 11, &config, true, false).unwrap();
    let (train_set, test_set) = split(&corpus, 0.75, 5).unwrap();
    assert_eq!((train_set.len(), test_set.len()), (60, 20));

    let schedule = TrainConfig {
        epochs: 120,
        batch_size: 10,
        rng_seed: 7,
        ..TrainConfig::default()
    };
    let (model, history) =
        train_inverse::<Real>(Variant::Restricted, &train_set, None, &schedule).unwrap();

    assert_eq!(history.epochs.len(), schedule.epochs);
    let first = history.epochs.first().unwrap().train_loss;
    let last = history.epochs.last().unwrap().train_loss;
    assert!(
        last < first,
        "loss should fall over training (epoch 1: {first}, final: {last})"
    );

    let metrics = evaluate(&model, Variant::Restricted, &test_set, &config).unwrap();
    assert_eq!(metrics.samples, test_set.len());
    assert!(metrics.bit_accuracy > 0.0 && metrics.bit_accuracy <= 1.0);
    assert!(
        metrics.tile_accuracy <= metrics.bit_accuracy,
        "a correct tile needs all of its bits correct"
    );

    // Bundle to disk, reload, and check nothing about the model changed.
    let dir = tempdir().unwrap();
    let stem = dir.path().join("model");
    let manifest = ModelManifest::new(
        Variant::Restricted,
        config.clone(),
        train_set.config_digest(),
        schedule,
        &history,
    );
    save_bundle(&stem, &model, &manifest).unwrap();
    let (reloaded, manifest_back) = load_bundle::<Real>(&stem).unwrap();
    assert_eq!(model, reloaded);
    assert_eq!(manifest_back.variant, Variant::Restricted);
    assert_eq!(manifest_back.dataset_digest, train_set.config_digest());

    // A design run on the reloaded model reproduces the in-memory result.
    let target = vector_to_target(&test_set.samples()[0].features);
    let from_memory = design(&model, Variant::Restricted, &target, &config).unwrap();
    let from_disk = design(&reloaded, Variant::Restricted, &target, &config).unwrap();
    assert_eq!(from_memory.codes, from_disk.codes);
    assert_eq!(from_memory.achieved, from_disk.achieved);

    // The designed structure is legal by construction: its mask re-projects
    // onto exactly the codes the network emitted.
    let raw: Vec<Real> = msinn::codec::flatten_mask(&from_memory.mask)
        .iter()
        .map(|&b| Real::from(b))
        .collect();
    let projected = msinn::codec::project_pixels_to_tiles(&raw).unwrap();
    assert_eq!(projected, from_memory.codes);
}
