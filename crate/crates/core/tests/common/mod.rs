#![allow(dead_code)]

use instanton_core::search::InstantonRecord;
use instanton_core::{ChannelModel, ParityCheckCode};

/// Record for target `target` with the listed nonzero noise entries.
pub fn record(channel: ChannelModel, entries: &[(usize, f64)], target: usize) -> InstantonRecord {
    let mut xi = vec![0.0; 155];
    for &(b, v) in entries {
        xi[b] = v;
    }
    InstantonRecord {
        length: channel.noise_length(&xi),
        xi,
        target_bit: target,
        n_it: 4,
        channel,
    }
}

pub fn tanner() -> ParityCheckCode {
    ParityCheckCode::tanner_155()
}

/// Two red bits seen 7 times each, two greens seen 5 times each.
pub const CONFIG_A_REDS: [usize; 2] = [11, 47];
pub const CONFIG_A_GREENS: [usize; 2] = [100, 104];

pub fn config_a() -> InstantonRecord {
    record(ChannelModel::laplacian(1.0), &[(11, 2.0), (47, 2.0), (100, 1.8), (104, 1.8)], 0)
}

/// Three reds (N_2 = 19) and three greens seen 4 times each.
pub fn config_b() -> InstantonRecord {
    let t = 2.0 / 3.0;
    record(
        ChannelModel::laplacian(1.0),
        &[(37, 2.0), (99, 2.0), (144, 2.0), (36, t), (104, t), (139, t)],
        0,
    )
}

/// Same structure reached from a boundary point of the family, where one
/// of the greens is still at zero.
pub fn config_b_boundary() -> InstantonRecord {
    record(
        ChannelModel::laplacian(1.0),
        &[(37, 2.0), (99, 2.0), (144, 2.0), (36, 1.0), (104, 1.0)],
        0,
    )
}

/// A b-type record in which bit 133 has the green count but is screened.
pub fn config_b_screened() -> InstantonRecord {
    record(
        ChannelModel::laplacian(1.0),
        &[(57, 2.0), (119, 2.0), (128, 2.0), (32, 1.0), (127, 1.0)],
        0,
    )
}

/// Four reds, no greens.
pub fn config_c() -> InstantonRecord {
    record(ChannelModel::laplacian(1.0), &[(0, 2.0), (4, 2.0), (20, 2.0), (82, 2.0)], 0)
}

/// Gaussian piece optimum `xi_i = 46 n_i / 210`.
pub const GAUSSIAN_COUNTS: [(usize, i64); 12] = [
    (0, 7),
    (7, 5),
    (32, 4),
    (36, 5),
    (39, 3),
    (56, 4),
    (66, 5),
    (89, 1),
    (93, 3),
    (95, 1),
    (104, 5),
    (140, 3),
];

pub fn config_gaussian() -> InstantonRecord {
    let entries: Vec<(usize, f64)> = GAUSSIAN_COUNTS.iter().map(|&(b, n)| (b, 46.0 * n as f64 / 210.0)).collect();
    record(ChannelModel::gaussian(1.0), &entries, 0)
}
