//! Local planar projection of geographic coordinates.
//!
//! Each tile is projected onto a plane tangent at its anchor (the tile
//! center) with an equirectangular mapping scaled by the anchor latitude:
//! `x = R·cos(lat₀)·(lon − lon₀)`, `y = R·(lat − lat₀)`. The map is linear,
//! so it is exactly invertible and odd-symmetric about the anchor, and it is
//! metric to well under 0.1 % across a tile at mid latitudes.

use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geom::Point;

/// Mean Earth radius (IUGG), meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Projection is refused at or beyond this latitude.
pub const MAX_ABS_LATITUDE: f64 = 85.0;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("latitude {0}° is outside (−85°, 85°)")]
pub struct DomainError(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub const fn new(lon: f64, lat: f64) -> Self {
        LonLat { lon, lat }
    }
}

fn check_lat(lat: f64) -> Result<(), DomainError> {
    if lat.is_finite() && lat.abs() < MAX_ABS_LATITUDE {
        Ok(())
    } else {
        Err(DomainError(lat))
    }
}

pub fn project_lonlat(lon: f64, lat: f64, anchor: LonLat) -> Result<Point, DomainError> {
    check_lat(lat)?;
    check_lat(anchor.lat)?;
    let k = EARTH_RADIUS_M * PI / 180.0;
    let x = k * libm::cos(anchor.lat.to_radians()) * (lon - anchor.lon);
    let y = k * (lat - anchor.lat);
    Ok(Point::new(x, y))
}

/// Inverse of [`project_lonlat`].
pub fn unproject(p: Point, anchor: LonLat) -> Result<LonLat, DomainError> {
    check_lat(anchor.lat)?;
    let k = EARTH_RADIUS_M * PI / 180.0;
    let lat = anchor.lat + p.y / k;
    let lon = anchor.lon + p.x / (k * libm::cos(anchor.lat.to_radians()));
    Ok(LonLat::new(lon, lat))
}

/// Moves a planar point from one anchor's frame into another's.
pub fn reframe(p: Point, from: LonLat, to: LonLat) -> Point {
    if from == to {
        return p;
    }
    // Anchors were validated when the frames were built.
    let g = unproject(p, from).expect("validated anchor");
    project_lonlat(g.lon, g.lat, to).expect("validated anchor")
}

/// Great-circle distance by the haversine formula, meters.
pub fn haversine(a: LonLat, b: LonLat) -> f64 {
    let (la1, la2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = la2 - la1;
    let dlon = (b.lon - a.lon).to_radians();
    let s = libm::sin(dlat / 2.0);
    let t = libm::sin(dlon / 2.0);
    let h = s * s + libm::cos(la1) * libm::cos(la2) * t * t;
    2.0 * EARTH_RADIUS_M * libm::asin(libm::sqrt(h).min(1.0))
}
