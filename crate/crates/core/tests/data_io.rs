use std::fs::File;

use mirnet_core::blocks::{Mirnet, NetworkConfig, ParamStore};
use mirnet_core::data::{degrade, load_ppm, procedural_texture, save_ppm, DegradationSpec, PatchSampler};
use mirnet_core::optim::AdamState;
use mirnet_core::tensor::{read_checkpoint, write_checkpoint};

#[test]
fn ppm_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.ppm");
    let img = procedural_texture(37, 21, 4);
    save_ppm(&img, &path).unwrap();
    assert_eq!(load_ppm(&path).unwrap(), img);
    assert!(load_ppm(dir.path().join("missing.ppm")).is_err());
}

#[test]
fn checkpoint_file_restores_parameters_and_optimizer() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    let cfg = NetworkConfig::desk();
    let (_, store) = Mirnet::build::<f32>(&cfg, 7).unwrap();
    let adam = AdamState::new(&store);
    let mut ckpt = store.to_checkpoint();
    adam.append_to_checkpoint(&store, &mut ckpt);
    write_checkpoint(File::create(&path).unwrap(), &ckpt).unwrap();

    let loaded = read_checkpoint(File::open(&path).unwrap()).unwrap();
    let (_, mut fresh): (_, ParamStore<f32>) = Mirnet::build(&cfg, 8).unwrap();
    fresh.load_checkpoint(&loaded).unwrap();
    assert_eq!(fresh.to_checkpoint().to_bytes().unwrap(), store.to_checkpoint().to_bytes().unwrap());
    assert_eq!(AdamState::from_checkpoint(&fresh, &loaded).unwrap().step, 0);

    let wider = NetworkConfig { base_channels: 16, ..cfg };
    let (_, mut other): (_, ParamStore<f32>) = Mirnet::build(&wider, 0).unwrap();
    let err = other.load_checkpoint(&loaded).unwrap_err().to_string();
    assert!(err.contains("head.weight"), "{err}");
}

#[test]
fn degraded_pairs_feed_deterministic_batches() {
    let spec = DegradationSpec::default();
    let pairs: Vec<_> = (0..3)
        .map(|i| degrade(&procedural_texture(40, 40, i), &spec.for_item(i)).unwrap())
        .collect();
    let again: Vec<_> = (0..3)
        .map(|i| degrade(&procedural_texture(40, 40, i), &spec.for_item(i)).unwrap())
        .collect();
    assert_eq!(pairs, again);
    let sampler = PatchSampler { patch_size: 16, batch: 4, hflip: true, vflip: true, seed: 3 };
    let a = sampler.sample_batch(&pairs, 5).unwrap();
    let b = sampler.sample_batch(&pairs, 5).unwrap();
    assert_eq!(a.input, b.input);
    assert_eq!(a.target, b.target);
    assert_ne!(a.input, sampler.sample_batch(&pairs, 6).unwrap().input);
    assert_ne!(a.input, a.target);
}
