use ndarray::Array2;
use sha2::{Digest, Sha256};

/// Hex SHA-256 of raw bytes.
pub fn digest_bytes(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Hex SHA-256 over shape, row values (little-endian f64 bits) and labels.
pub fn digest_dataset(x: &Array2<f64>, labels: &[usize]) -> String {
    let mut h = Sha256::new();
    h.update((x.nrows() as u64).to_le_bytes());
    h.update((x.ncols() as u64).to_le_bytes());
    for v in x.iter() {
        h.update(v.to_bits().to_le_bytes());
    }
    for &l in labels {
        h.update((l as u64).to_le_bytes());
    }
    format!("{:x}", h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_vector() {
        assert_eq!(
            digest_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn sensitive_to_values_and_labels() {
        let x = Array2::from_shape_vec((2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let d = digest_dataset(&x, &[0, 1]);
        assert_eq!(d, digest_dataset(&x.clone(), &[0, 1]));
        assert_ne!(d, digest_dataset(&x, &[1, 0]));
        let mut y = x.clone();
        y[[1, 1]] = 4.0 + 1e-15 * 4.0;
        assert_ne!(d, digest_dataset(&y, &[0, 1]));
        let reshaped = x.into_shape_with_order((1, 4)).unwrap();
        assert_ne!(d, digest_dataset(&reshaped, &[0, 1]));
    }
}
