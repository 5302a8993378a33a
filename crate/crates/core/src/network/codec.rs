//! Versioned little-endian binary format.
//!
//! ```text
//! magic "GSTN" | version u8
//! config:  max_walk_m f64 | walk_speed_mps f64 | day_horizon_s u32 | n u32 | n × str
//! stops:   n u32 | n × (stop_id str | name str | lat f64 | lon f64)
//! nodes:   n u32 | n × (stop u32 | time_s u32)
//! trips:   n u32 | n × str
//! links:   n u32 | n × (from u32 | to u32 | kind u8 | duration_s u32 | walk_s u32 | trip u32)
//! ```
//! `str` is a u32 byte length followed by UTF-8; a missing trip is `u32::MAX`.
//! Adjacency indexes are rebuilt on load.

use super::*;

pub const MAGIC: &[u8; 4] = b"GSTN";
pub const FORMAT_VERSION: u8 = 1;
const NO_TRIP: u32 = u32::MAX;

pub fn serialize_network(net: &Network) -> Vec<u8> {
    let mut w = Writer(Vec::with_capacity(16 + net.nodes.len() * 8 + net.links.len() * 21));
    w.0.extend_from_slice(MAGIC);
    w.0.push(FORMAT_VERSION);
    let cfg = &net.config;
    w.f64(cfg.max_walk_m);
    w.f64(cfg.walk_speed_mps);
    w.u32(cfg.day_horizon_s);
    w.u32(cfg.service_ids.len() as u32);
    for s in &cfg.service_ids {
        w.str(s);
    }
    w.u32(net.stops.len() as u32);
    for s in &net.stops {
        w.str(&s.stop_id);
        w.str(&s.name);
        w.f64(s.point.lat);
        w.f64(s.point.lon);
    }
    w.u32(net.nodes.len() as u32);
    for n in &net.nodes {
        w.u32(n.stop);
        w.u32(n.time_s);
    }
    w.u32(net.trips.len() as u32);
    for t in &net.trips {
        w.str(t);
    }
    w.u32(net.links.len() as u32);
    for l in &net.links {
        w.u32(l.from);
        w.u32(l.to);
        w.0.push(match l.kind {
            LinkKind::Waiting => 0,
            LinkKind::Transit => 1,
            LinkKind::Walking => 2,
        });
        w.u32(l.duration_s);
        w.u32(l.walk_s);
        w.u32(l.trip.unwrap_or(NO_TRIP));
    }
    w.0
}

pub fn deserialize_network(bytes: &[u8]) -> Result<Network, NetworkError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(NetworkError::CorruptStream("bad magic".into()));
    }
    let version = r.take(1)?[0];
    if version != FORMAT_VERSION {
        return Err(NetworkError::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let max_walk_m = r.f64()?;
    let walk_speed_mps = r.f64()?;
    let day_horizon_s = r.u32()?;
    let n = r.count(4)?;
    let service_ids = (0..n).map(|_| r.str()).collect::<Result<_, _>>()?;
    let config = BuildConfig { service_ids, max_walk_m, walk_speed_mps, day_horizon_s };

    let n = r.count(24)?;
    let mut stops = Vec::with_capacity(n);
    for _ in 0..n {
        let stop_id = r.str()?;
        let name = r.str()?;
        let point = GeoPoint::new(r.f64()?, r.f64()?);
        stops.push(NetStop { stop_id, name, point });
    }
    let n = r.count(8)?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        nodes.push(EventNode { stop: r.u32()?, time_s: r.u32()? });
    }
    let n = r.count(4)?;
    let trips = (0..n).map(|_| r.str()).collect::<Result<_, _>>()?;
    let n = r.count(21)?;
    let mut links = Vec::with_capacity(n);
    for _ in 0..n {
        let from = r.u32()?;
        let to = r.u32()?;
        let kind = match r.take(1)?[0] {
            0 => LinkKind::Waiting,
            1 => LinkKind::Transit,
            2 => LinkKind::Walking,
            k => return Err(NetworkError::CorruptStream(format!("unknown link kind {k}"))),
        };
        let duration_s = r.u32()?;
        let walk_s = r.u32()?;
        let trip = Some(r.u32()?).filter(|&t| t != NO_TRIP);
        links.push(Link { from, to, kind, duration_s, walk_s, trip });
    }
    if r.pos != bytes.len() {
        return Err(NetworkError::CorruptStream(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Network::from_parts(config, stops, nodes, trips, links)
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NetworkError> {
        let end =
            self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
                NetworkError::CorruptStream(format!("truncated at byte {} (wanted {n} more)", self.pos))
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NetworkError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64, NetworkError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// Reads an element count, rejecting counts the remaining bytes cannot hold.
    fn count(&mut self, min_elem_bytes: usize) -> Result<usize, NetworkError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_elem_bytes) > self.buf.len() - self.pos {
            return Err(NetworkError::CorruptStream(format!("count {n} exceeds remaining bytes")));
        }
        Ok(n)
    }

    fn str(&mut self) -> Result<String, NetworkError> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| NetworkError::CorruptStream("invalid utf-8".into()))
    }
}
