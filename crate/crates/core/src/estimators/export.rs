use std::fmt::Write;

use super::{RootSet, SpatialSpectrum};

/// `angle_rad,value` rows with a header line.
pub fn spectrum_csv(spectrum: &SpatialSpectrum) -> String {
    let mut out = String::from("angle_rad,value\n");
    for (a, v) in spectrum.grid.iter().zip(&spectrum.values) {
        writeln!(out, "{a:.12e},{v:.12e}").unwrap();
    }
    out
}

/// `re,im,selected` rows with a header line; `selected` is 0 or 1.
pub fn rootset_csv(roots: &RootSet) -> String {
    let mut out = String::from("re,im,selected\n");
    for (k, z) in roots.roots.iter().enumerate() {
        let sel = u8::from(roots.selected.contains(&k));
        writeln!(out, "{:.12e},{:.12e},{sel}", z.re, z.im).unwrap();
    }
    out
}
