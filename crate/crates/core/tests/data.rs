//! Checks against the downloaded IDX files. Each test skips with a note when
//! the files are absent; run `scripts/fetch_data.sh` to fetch them.

use std::path::PathBuf;

use tnvqc::dataset::{load_split, DatasetName, Split, IMAGE_PIXELS};

fn data_root() -> Option<PathBuf> {
    let root = std::env::var_os("TNVQC_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    if root.join("mnist").is_dir() && root.join("fashion").is_dir() {
        Some(root)
    } else {
        eprintln!("skipping: no datasets under {}", root.display());
        None
    }
}

#[test]
fn mnist_ternary_counts() {
    let Some(root) = data_root() else { return };
    let train = load_split(&root, DatasetName::Mnist, Split::Train, &[0, 3, 6]).unwrap();
    // 5923 zeros, 6131 threes, 5918 sixes
    assert_eq!(train.len(), 17972);
    assert_eq!(train.n_classes(), 3);
    assert_eq!(train.class_map(), &[0, 3, 6]);
    let counts = (0..3).map(|c| train.labels().iter().filter(|&&l| l == c).count());
    assert_eq!(counts.collect::<Vec<_>>(), vec![5923, 6131, 5918]);

    let test = load_split(&root, DatasetName::Mnist, Split::Test, &[0, 3, 6]).unwrap();
    // 980 + 1010 + 958
    assert_eq!(test.len(), 2948);
}

#[test]
fn fashion_binary_is_balanced() {
    let Some(root) = data_root() else { return };
    let train = load_split(&root, DatasetName::Fashion, Split::Train, &[5, 7]).unwrap();
    assert_eq!(train.len(), 12000);
    assert_eq!(train.labels().iter().filter(|&&l| l == 1).count(), 6000);
    let test = load_split(&root, DatasetName::Fashion, Split::Test, &[5, 7]).unwrap();
    assert_eq!(test.len(), 2000);
}

#[test]
fn pixels_are_scaled_to_unit_interval() {
    let Some(root) = data_root() else { return };
    let test = load_split(&root, DatasetName::Mnist, Split::Test, &[1]).unwrap();
    assert_eq!(test.images().len(), test.len() * IMAGE_PIXELS);
    assert!(test.images().iter().all(|&x| (0.0..=1.0).contains(&x)));
    assert!(test.images().contains(&1.0));
    assert!(test.images().contains(&0.0));
}

#[test]
fn class_order_sets_labels() {
    let Some(root) = data_root() else { return };
    let a = load_split(&root, DatasetName::Fashion, Split::Test, &[5, 7]).unwrap();
    let b = load_split(&root, DatasetName::Fashion, Split::Test, &[7, 5]).unwrap();
    assert_eq!(a.images(), b.images());
    assert!(a.labels().iter().zip(b.labels()).all(|(x, y)| x + y == 1));
}

#[test]
fn subsample_is_reproducible() {
    let Some(root) = data_root() else { return };
    let train = load_split(&root, DatasetName::Fashion, Split::Train, &[5, 7]).unwrap();
    let a = train.subsample(4000, 1234);
    assert_eq!(a.len(), 4000);
    assert_eq!(a, train.subsample(4000, 1234));
    assert_ne!(a.labels(), train.subsample(4000, 99).labels());
}
