use eulerrom::io::{decode_snapshots, encode_snapshots, read_snapshots, write_snapshots, RawSnapshots};
use eulerrom::problems::{run_fom, ProblemConfig, ProblemKind};
use proptest::prelude::*;

#[test]
fn snapshot_file_roundtrip() {
    let cfg = ProblemConfig { cells: 40, ..ProblemConfig::desk(ProblemKind::Sod, true) };
    let set = run_fom(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sod.ersn");
    write_snapshots(&path, &set).unwrap();
    let raw = read_snapshots(&path).unwrap();
    assert_eq!((raw.dim, raw.n_cells, raw.components), (1, 40, 3));
    let back = raw.clone().into_set(cfg.clone()).unwrap();
    assert_eq!(back.columns, set.columns);
    assert_eq!(back.times, set.times);

    // wrong configuration for the data
    let other = ProblemConfig { cells: 41, ..cfg };
    assert!(raw.into_set(other).is_err());
}

#[test]
fn snapshot_payload_is_row_major() {
    let raw = RawSnapshots { dim: 1, n_cells: 1, components: 3, columns: vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]], times: vec![0.0, 0.5] };
    let bytes = encode_snapshots(&raw);
    let header = 4 + 4 + 4 + 8 * 3;
    let first: Vec<f64> = bytes[header..header + 32].chunks(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    // row 0 of both snapshots, then row 1
    assert_eq!(first, vec![1.0, 4.0, 2.0, 5.0]);
    assert_eq!(bytes.len(), header + 8 * 6 + 8 * 2);
}

#[test]
fn corrupt_snapshot_files_are_rejected() {
    let raw = RawSnapshots { dim: 2, n_cells: 2, components: 4, columns: vec![vec![0.5; 8]], times: vec![0.0] };
    let bytes = encode_snapshots(&raw);
    assert!(decode_snapshots(&bytes[..bytes.len() - 1]).is_err());
    let mut extra = bytes.clone();
    extra.extend_from_slice(&[0; 8]);
    assert!(decode_snapshots(&extra).is_err());
    let mut magic = bytes.clone();
    magic[..4].copy_from_slice(b"ERPB");
    assert!(decode_snapshots(&magic).is_err());
    let mut dim = bytes.clone();
    dim[8] = 3;
    assert!(decode_snapshots(&dim).is_err());
    let mut huge = bytes;
    huge[12..20].copy_from_slice(&u64::MAX.to_le_bytes());
    assert!(decode_snapshots(&huge).is_err());
}

proptest! {
    #[test]
    fn snapshot_encoding_roundtrips(
        dim in 1u32..3,
        n_cells in 1usize..6,
        values in proptest::collection::vec(-1e6f64..1e6, 1..4),
    ) {
        let components = dim as usize + 2;
        let rows = n_cells * components;
        let columns: Vec<Vec<f64>> = values.iter().map(|&v| (0..rows).map(|i| v + i as f64).collect()).collect();
        let times = (0..values.len()).map(|i| i as f64 * 0.1).collect();
        let raw = RawSnapshots { dim, n_cells, components, columns, times };
        prop_assert_eq!(decode_snapshots(&encode_snapshots(&raw)).unwrap(), raw);
    }
}
