#![allow(dead_code)]

/// Reference simulation table: n, l, p, then population SRMR, mean and SD
/// for constant loadings followed by the same three for variable loadings.
pub const REFERENCE: [(usize, f64, usize, [f64; 6]); 36] = [
    (150, 0.2, 6, [0.45, 0.45, 0.011, 0.45, 0.45, 0.011]),
    (150, 0.2, 12, [0.35, 0.36, 0.005, 0.35, 0.36, 0.005]),
    (150, 0.2, 24, [0.26, 0.27, 0.003, 0.26, 0.27, 0.003]),
    (150, 0.4, 6, [0.39, 0.4, 0.015, 0.39, 0.4, 0.015]),
    (150, 0.4, 12, [0.31, 0.31, 0.009, 0.31, 0.31, 0.008]),
    (150, 0.4, 24, [0.23, 0.24, 0.005, 0.23, 0.24, 0.005]),
    (150, 0.6, 6, [0.3, 0.3, 0.018, 0.3, 0.3, 0.017]),
    (150, 0.6, 12, [0.24, 0.24, 0.012, 0.24, 0.24, 0.011]),
    (150, 0.6, 24, [0.18, 0.18, 0.008, 0.18, 0.18, 0.008]),
    (150, 0.8, 6, [0.17, 0.17, 0.015, 0.18, 0.18, 0.015]),
    (150, 0.8, 12, [0.13, 0.14, 0.011, 0.14, 0.14, 0.01]),
    (150, 0.8, 24, [0.1, 0.1, 0.008, 0.11, 0.11, 0.007]),
    (300, 0.2, 6, [0.45, 0.45, 0.008, 0.45, 0.45, 0.008]),
    (300, 0.2, 12, [0.35, 0.36, 0.004, 0.35, 0.36, 0.004]),
    (300, 0.2, 24, [0.26, 0.27, 0.002, 0.26, 0.27, 0.002]),
    (300, 0.4, 6, [0.39, 0.39, 0.011, 0.39, 0.39, 0.011]),
    (300, 0.4, 12, [0.31, 0.31, 0.006, 0.31, 0.31, 0.006]),
    (300, 0.4, 24, [0.23, 0.23, 0.004, 0.23, 0.23, 0.004]),
    (300, 0.6, 6, [0.3, 0.3, 0.012, 0.3, 0.3, 0.012]),
    (300, 0.6, 12, [0.24, 0.24, 0.008, 0.24, 0.24, 0.008]),
    (300, 0.6, 24, [0.18, 0.18, 0.006, 0.18, 0.18, 0.005]),
    (300, 0.8, 6, [0.17, 0.17, 0.011, 0.18, 0.18, 0.011]),
    (300, 0.8, 12, [0.13, 0.13, 0.008, 0.14, 0.14, 0.007]),
    (300, 0.8, 24, [0.1, 0.1, 0.005, 0.11, 0.11, 0.005]),
    (900, 0.2, 6, [0.45, 0.45, 0.005, 0.45, 0.45, 0.005]),
    (900, 0.2, 12, [0.35, 0.35, 0.002, 0.35, 0.35, 0.002]),
    (900, 0.2, 24, [0.26, 0.26, 0.001, 0.26, 0.26, 0.001]),
    (900, 0.4, 6, [0.39, 0.39, 0.006, 0.39, 0.39, 0.006]),
    (900, 0.4, 12, [0.31, 0.31, 0.004, 0.31, 0.31, 0.003]),
    (900, 0.4, 24, [0.23, 0.23, 0.002, 0.23, 0.23, 0.002]),
    (900, 0.6, 6, [0.3, 0.3, 0.007, 0.3, 0.3, 0.007]),
    (900, 0.6, 12, [0.24, 0.24, 0.005, 0.24, 0.24, 0.005]),
    (900, 0.6, 24, [0.18, 0.18, 0.003, 0.18, 0.18, 0.003]),
    (900, 0.8, 6, [0.17, 0.17, 0.006, 0.18, 0.18, 0.006]),
    (900, 0.8, 12, [0.13, 0.13, 0.004, 0.14, 0.14, 0.004]),
    (900, 0.8, 24, [0.1, 0.1, 0.003, 0.11, 0.11, 0.003]),
];
