//! Fixtures shared by the benchmarks.

use kdival::data::make_blobs;
use kdival::partition::Partition;
use kdival::Dataset;

/// `per_cluster` Gaussian points around each of four well separated 2-d centers.
pub fn four_blobs(per_cluster: usize) -> Dataset {
    let centers = [vec![0.0, 0.0], vec![20.0, 0.0], vec![0.0, 20.0], vec![20.0, 20.0]];
    make_blobs(per_cluster, &centers, 1.0, 42).expect("valid blob parameters")
}

/// The generating partition of a dataset built by [`four_blobs`].
pub fn reference(data: &Dataset) -> Partition {
    Partition::new(data.labels().expect("blobs carry labels"), "reference").expect("labels are non-empty")
}
