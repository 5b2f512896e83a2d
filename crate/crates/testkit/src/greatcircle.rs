//! Great-circle distance via the Vincenty special case for a sphere.
//!
//! Numerically stable at all separations, including antipodes, and unrelated
//! in form to the haversine used by the main crate.

pub const RADIUS_KM: f64 = 6371.0;

pub fn central_angle(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dl = (lon2 - lon1).to_radians();
    let a = p2.cos() * dl.sin();
    let b = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    let num = (a * a + b * b).sqrt();
    let den = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
    num.atan2(den)
}

pub fn distance_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    RADIUS_KM * central_angle(lat1, lon1, lat2, lon2)
}

/// The point reached from (lat, lon) after `dist_km` along `bearing_deg`.
pub fn destination(lat: f64, lon: f64, bearing_deg: f64, dist_km: f64) -> (f64, f64) {
    let d = dist_km / RADIUS_KM;
    let (p1, l1, th) = (lat.to_radians(), lon.to_radians(), bearing_deg.to_radians());
    let p2 = (p1.sin() * d.cos() + p1.cos() * d.sin() * th.cos()).asin();
    let l2 = l1 + (th.sin() * d.sin() * p1.cos()).atan2(d.cos() - p1.sin() * p2.sin());
    let mut lon2 = l2.to_degrees();
    while lon2 > 180.0 {
        lon2 -= 360.0;
    }
    while lon2 < -180.0 {
        lon2 += 360.0;
    }
    (p2.to_degrees(), lon2)
}
