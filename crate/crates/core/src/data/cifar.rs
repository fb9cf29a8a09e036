//! CIFAR-10 binary batches: records of one label byte followed by 3072 pixel
//! bytes (R plane, G plane, B plane, each 32x32 row-major).

use std::fs;
use std::path::Path;

use super::{DataError, Dataset, DatasetRole, LabeledExample, Target};
use crate::tensor::Tensor;

pub const CIFAR_RECORD_BYTES: usize = 1 + 3 * 32 * 32;
const CIFAR_CLASSES: usize = 10;

pub fn load_cifar10_batch(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.len() % CIFAR_RECORD_BYTES != 0 {
        return Err(DataError::TruncatedFile {
            path: path.to_path_buf(),
            size: bytes.len() as u64,
        });
    }
    let examples = bytes
        .chunks_exact(CIFAR_RECORD_BYTES)
        .enumerate()
        .map(|(index, rec)| {
            let label = rec[0] as usize;
            if label >= CIFAR_CLASSES {
                return Err(DataError::LabelOutOfRange {
                    label,
                    classes: CIFAR_CLASSES,
                    index,
                });
            }
            let pixels = rec[1..].iter().map(|&b| f64::from(b)).collect();
            let input = Tensor::from_vec(&[3, 32, 32], pixels).expect("record size");
            Ok(LabeledExample::ground_truth(input, Target::Class(label)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Dataset::new(DatasetRole::GroundTruth, examples)
}
