//! Great-circle distance and search-box derivation on a spherical Earth.

use thiserror::Error;

use crate::model::GeoPoint;

pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Length of one degree of arc on the sphere, `π × 6371.0 / 180`.
pub const KM_PER_DEGREE: f64 = std::f64::consts::PI * EARTH_RADIUS_KM / 180.0;

/// Outward padding applied to box edges to absorb floating-point error.
const EDGE_PAD_DEG: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("center latitude {0} is within one degree of a pole")]
    NearPole(f64),
    #[error("radius must be a non-negative finite number, got {0}")]
    InvalidRadius(f64),
}

pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    haversine_deg(a.lat_f64(), a.lon_f64(), b.lat_f64(), b.lon_f64())
}

pub(crate) fn haversine_deg(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    let h = h.clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_KM * h.sqrt().atan2((1.0 - h).sqrt())
}

/// Latitude/longitude rectangle in degrees.
///
/// When `lon_min > lon_max` the box wraps across the antimeridian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    pub fn crosses_antimeridian(&self) -> bool {
        self.lon_min > self.lon_max
    }

    pub fn spans_all_longitudes(&self) -> bool {
        self.lon_min <= -180.0 && self.lon_max >= 180.0
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        if lat < self.lat_min || lat > self.lat_max {
            return false;
        }
        if self.crosses_antimeridian() {
            lon >= self.lon_min || lon <= self.lon_max
        } else {
            lon >= self.lon_min && lon <= self.lon_max
        }
    }
}

/// Smallest lat/lon rectangle containing every point within `radius_km` of `center`.
///
/// The longitude half-width uses the tangent-point formula
/// `asin(sin(r / R) / cos(lat))`, which is where the circle reaches its
/// widest longitude; dividing the radius by the parallel's circumference
/// alone would clip the disc away from the equator.
pub fn bounding_box(center: GeoPoint, radius_km: f64) -> Result<BoundingBox, GeoError> {
    if !radius_km.is_finite() || radius_km < 0.0 {
        return Err(GeoError::InvalidRadius(radius_km));
    }
    let lat = center.lat_f64();
    let lon = center.lon_f64();
    if lat.abs() > 89.0 {
        return Err(GeoError::NearPole(lat));
    }
    let (lat_min, lat_max) = latitude_band(center, radius_km)?;

    let full = BoundingBox {
        lat_min,
        lat_max,
        lon_min: -180.0,
        lon_max: 180.0,
    };
    if lat_min <= -90.0 || lat_max >= 90.0 {
        // the disc covers a pole
        return Ok(full);
    }
    let angular = radius_km / EARTH_RADIUS_KM;
    let ratio = angular.sin() / lat.to_radians().cos();
    if angular >= std::f64::consts::FRAC_PI_2 || ratio >= 1.0 {
        return Ok(full);
    }
    let dlon = ratio.asin().to_degrees() + EDGE_PAD_DEG;
    if dlon >= 180.0 {
        return Ok(full);
    }
    Ok(BoundingBox {
        lat_min,
        lat_max,
        lon_min: wrap_longitude(lon - dlon),
        lon_max: wrap_longitude(lon + dlon),
    })
}

/// Latitude-only bounds, used when the longitude span degenerates near a pole.
pub fn latitude_band(center: GeoPoint, radius_km: f64) -> Result<(f64, f64), GeoError> {
    if !radius_km.is_finite() || radius_km < 0.0 {
        return Err(GeoError::InvalidRadius(radius_km));
    }
    let lat = center.lat_f64();
    let dlat = radius_km / KM_PER_DEGREE + EDGE_PAD_DEG;
    Ok(((lat - dlat).max(-90.0), (lat + dlat).min(90.0)))
}

fn wrap_longitude(lon: f64) -> f64 {
    if lon < -180.0 {
        lon + 360.0
    } else if lon > 180.0 {
        lon - 360.0
    } else {
        lon
    }
}
