//! Unit-radius vertex tables for the polygonal shapes.
//!
//! Stored as literals so rasterization never depends on the platform's
//! `sin`/`cos`. Coordinates use image orientation (y grows downward), first
//! vertex pointing up. Spoke tables hold two rim vertices per spoke.

#![allow(clippy::approx_constant)]

pub(crate) const PENTAGON: [[f64; 2]; 5] = [
    [6.123233995736766e-17, -1.0],
    [0.9510565162951535, -0.3090169943749474],
    [0.5877852522924731, 0.8090169943749475],
    [-0.587785252292473, 0.8090169943749475],
    [-0.9510565162951536, -0.3090169943749473],
];

pub(crate) const HEXAGON: [[f64; 2]; 6] = [
    [6.123233995736766e-17, -1.0],
    [0.8660254037844386, -0.5],
    [0.8660254037844387, 0.49999999999999983],
    [6.123233995736766e-17, 1.0],
    [-0.8660254037844385, 0.5000000000000003],
    [-0.8660254037844386, -0.5000000000000001],
];

pub(crate) const OCTAGON: [[f64; 2]; 8] = [
    [6.123233995736766e-17, -1.0],
    [0.7071067811865476, -0.7071067811865475],
    [1.0, 0.0],
    [0.7071067811865476, 0.7071067811865475],
    [6.123233995736766e-17, 1.0],
    [-0.7071067811865475, 0.7071067811865476],
    [-1.0, 1.2246467991473532e-16],
    [-0.7071067811865477, -0.7071067811865475],
];

pub(crate) const STAR_4: [[f64; 2]; 8] = [
    [6.123233995736766e-17, -1.0],
    [0.3535533905932738, -0.35355339059327373],
    [1.0, 0.0],
    [0.3535533905932738, 0.35355339059327373],
    [6.123233995736766e-17, 1.0],
    [-0.35355339059327373, 0.3535533905932738],
    [-1.0, 1.2246467991473532e-16],
    [-0.35355339059327384, -0.35355339059327373],
];

pub(crate) const STAR_5: [[f64; 2]; 10] = [
    [6.123233995736766e-17, -1.0],
    [0.29389262614623657, -0.4045084971874737],
    [0.9510565162951535, -0.3090169943749474],
    [0.47552825814757677, 0.1545084971874737],
    [0.5877852522924731, 0.8090169943749475],
    [3.061616997868383e-17, 0.5],
    [-0.587785252292473, 0.8090169943749475],
    [-0.47552825814757677, 0.15450849718747375],
    [-0.9510565162951536, -0.3090169943749473],
    [-0.2938926261462366, -0.40450849718747367],
];

pub(crate) const STAR_6: [[f64; 2]; 12] = [
    [6.123233995736766e-17, -1.0],
    [0.24999999999999994, -0.43301270189221935],
    [0.8660254037844386, -0.5],
    [0.5, 0.0],
    [0.8660254037844387, 0.49999999999999983],
    [0.24999999999999994, 0.43301270189221935],
    [6.123233995736766e-17, 1.0],
    [-0.2499999999999999, 0.43301270189221935],
    [-0.8660254037844385, 0.5000000000000003],
    [-0.5, 6.123233995736766e-17],
    [-0.8660254037844386, -0.5000000000000001],
    [-0.2500000000000002, -0.4330127018922192],
];

pub(crate) const SPOKE_4: [[f64; 2]; 8] = [
    [-0.25881904510252063, -0.9659258262890683],
    [0.25881904510252074, -0.9659258262890683],
    [0.9659258262890683, -0.25881904510252074],
    [0.9659258262890683, 0.25881904510252074],
    [0.25881904510252074, 0.9659258262890683],
    [-0.25881904510252063, 0.9659258262890683],
    [-0.9659258262890682, 0.258819045102521],
    [-0.9659258262890683, -0.2588190451025208],
];

pub(crate) const SPOKE_5: [[f64; 2]; 10] = [
    [-0.20791169081775934, -0.9781476007338057],
    [0.20791169081775945, -0.9781476007338056],
    [0.8660254037844387, -0.49999999999999994],
    [0.9945218953682733, -0.10452846326765347],
    [0.7431448254773942, 0.6691306063588582],
    [0.4067366430758002, 0.9135454576426009],
    [-0.40673664307580004, 0.913545457642601],
    [-0.743144825477394, 0.6691306063588583],
    [-0.9945218953682733, -0.1045284632676535],
    [-0.8660254037844388, -0.4999999999999997],
];

pub(crate) const SPOKE_6: [[f64; 2]; 12] = [
    [-0.1736481776669303, -0.984807753012208],
    [0.17364817766693041, -0.984807753012208],
    [0.766044443118978, -0.6427876096865394],
    [0.9396926207859083, -0.34202014332566877],
    [0.9396926207859084, 0.34202014332566855],
    [0.7660444431189781, 0.6427876096865393],
    [0.17364817766693041, 0.984807753012208],
    [-0.1736481776669303, 0.984807753012208],
    [-0.7660444431189779, 0.6427876096865395],
    [-0.9396926207859082, 0.3420201433256693],
    [-0.9396926207859083, -0.34202014332566905],
    [-0.766044443118978, -0.6427876096865393],
];

pub(crate) const TRIANGLE_HALF_HEIGHT: f64 = 0.8660254037844386;
