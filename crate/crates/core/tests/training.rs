use fcsn::fourier::{estimate_ranges, CoefficientVector};
use fcsn::loss::LossConfig;
use fcsn::model::{checkpoint, erf_map, fit, history_csv, holdout_split, Architecture, Axis, HeadKind, OutputUnit, ToyModel, TrainConfig, TrainSample};
use fcsn::synth::{generate_dataset, DatasetKind};
use tempfile::TempDir;

fn samples(count: usize, seed: u64) -> Vec<TrainSample> {
    generate_dataset(DatasetKind::Ellipses, count, seed, 0.05)
        .unwrap()
        .into_iter()
        .map(|item| TrainSample {
            image: item.image,
            coeffs: item.coeffs,
        })
        .collect()
}

fn model_for(data: &[TrainSample], head: HeadKind, seed: u64) -> ToyModel {
    let targets: Vec<CoefficientVector> = data.iter().map(|s| s.coeffs.clone()).collect();
    ToyModel::new(Architecture::new(10, head), estimate_ranges(&targets, 1.1).unwrap(), seed).unwrap()
}

fn config(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn fixed_seed_reproduces_the_history_exactly() {
    let data = samples(16, 1);
    let run = || {
        let mut m = model_for(&data, HeadKind::Dsnt, 3);
        let h = fit(&mut m, &data, &config(3, 3), &LossConfig::default()).unwrap();
        (history_csv(&h), m.params().to_vec())
    };
    let (h1, p1) = run();
    let (h2, p2) = run();
    assert_eq!(h1, h2);
    assert_eq!(p1, p2);

    let mut other = model_for(&data, HeadKind::Dsnt, 4);
    let h3 = fit(&mut other, &data, &config(3, 4), &LossConfig::default()).unwrap();
    assert_ne!(h1, history_csv(&h3));
}

#[test]
fn zero_epochs_leave_the_initialisation_untouched() {
    let data = samples(8, 2);
    let fresh = model_for(&data, HeadKind::Dsnt, 5);
    let mut trained = fresh.clone();
    let history = fit(&mut trained, &data, &config(0, 5), &LossConfig::default()).unwrap();
    assert!(history.is_empty());
    assert_eq!(trained.params(), fresh.params());
}

#[test]
fn disabling_js_zeroes_its_column() {
    let data = samples(8, 3);
    let mut m = model_for(&data, HeadKind::Dsnt, 1);
    let cfg = LossConfig {
        js_enabled: false,
        ..LossConfig::default()
    };
    let history = fit(&mut m, &data, &config(2, 1), &cfg).unwrap();
    assert!(history.iter().all(|l| l.js == 0.0 && (l.total - (l.l1 + l.l2)).abs() < 1e-12));
    let csv = history_csv(&history);
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let js_col = header.iter().position(|h| *h == "js").unwrap();
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').nth(js_col).unwrap().parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn a_single_sample_is_memorised() {
    for head in [HeadKind::Dsnt, HeadKind::Fc] {
        let data = samples(1, 4);
        let mut m = model_for(&data, head, 2);
        let cfg = LossConfig {
            js_enabled: false,
            ..LossConfig::default()
        };
        let train = TrainConfig {
            epochs: 2000,
            learning_rate: 1e-3,
            ..config(0, 2)
        };
        let history = fit(&mut m, &data, &train, &cfg).unwrap();
        let (first, last) = (history[0].total, history.last().unwrap().total);
        assert!(last * 100.0 <= first, "{head:?}: {first} -> {last}");
    }
}

#[test]
fn smoothed_loss_does_not_increase_on_ellipses() {
    let data = samples(64, 5);
    let mut m = model_for(&data, HeadKind::Dsnt, 6);
    let history = fit(&mut m, &data, &config(40, 6), &LossConfig::default()).unwrap();
    let blocks: Vec<f64> = history.chunks(10).map(|c| c.iter().map(|l| l.total).sum::<f64>() / c.len() as f64).collect();
    for pair in blocks.windows(2) {
        assert!(pair[1] <= pair[0], "{blocks:?}");
    }
}

#[test]
fn checkpoints_round_trip_bit_for_bit() {
    let data = samples(8, 6);
    let dir = TempDir::new().unwrap();
    for head in [HeadKind::Dsnt, HeadKind::Fc] {
        let mut m = model_for(&data, head, 8);
        fit(&mut m, &data, &config(1, 8), &LossConfig::default()).unwrap();
        let path = dir.path().join("model.bin");
        checkpoint::save(&m, &path).unwrap();
        assert!(dir.path().join("model.json").exists());
        let back = checkpoint::load(&path).unwrap();
        assert_eq!(back.params(), m.params());
        assert_eq!(back.ranges(), m.ranges());
        assert_eq!(back.architecture(), m.architecture());
        let image = &data[0].image;
        assert_eq!(back.forward(image).unwrap().coeffs, m.forward(image).unwrap().coeffs);
    }
}

#[test]
fn truncated_checkpoints_are_rejected() {
    let data = samples(4, 7);
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("model.bin");
    checkpoint::save(&model_for(&data, HeadKind::Dsnt, 1), &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
    assert!(checkpoint::load(&path).is_err());
}

#[test]
fn erf_maps_are_max_normalised() {
    let data = samples(4, 8);
    let mut m = model_for(&data, HeadKind::Dsnt, 1);
    for axis in [Axis::Re, Axis::Im] {
        let map = erf_map(&m, &data[0].image, OutputUnit { n: -1, axis }).unwrap();
        assert_eq!(map.as_slice().iter().cloned().fold(0.0, f64::max), 1.0);
        assert!(map.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }
    assert!(erf_map(&m, &data[0].image, OutputUnit { n: 11, axis: Axis::Re }).is_err());
    m.zero_final_layer();
    let flat = erf_map(&m, &data[0].image, OutputUnit { n: 1, axis: Axis::Re }).unwrap();
    assert!(flat.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn holdout_split_is_a_seeded_partition() {
    let (train, test) = holdout_split(500, 3);
    assert_eq!((train.len(), test.len()), (400, 100));
    let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..500).collect::<Vec<_>>());
    assert_eq!(holdout_split(500, 3), (train, test));
    assert_ne!(holdout_split(500, 4).1, holdout_split(500, 3).1);
}
