//! Binary state snapshots.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "BDNA" | version u32 | geometry u8 | truncation u32 | t f64 | ν f64 | α f64 | σ f64
//! | payload length u64 | payload | CRC-32 of payload u32
//! ```
//!
//! The payload holds `payload length` f64 values: the streamfunction
//! coefficients in plan order followed, on the torus, by the harmonic pair.
//! The torus side length is not stored; it comes from the requested plan.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hodge::VelocityState;
use crate::spectral::{BasisPlan, Geometry};

pub const MAGIC: &[u8; 4] = b"BDNA";
pub const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 1 + 4 + 8 * 4 + 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotMeta {
    pub geometry_tag: u8,
    pub truncation: u32,
    pub t: f64,
    pub nu: f64,
    pub alpha: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub meta: SnapshotMeta,
    /// Coefficients followed by the harmonic pair (torus).
    pub payload: Vec<f64>,
}

pub fn geometry_tag(g: Geometry) -> u8 {
    match g {
        Geometry::Sphere => 0,
        Geometry::Torus { .. } => 1,
    }
}

impl Snapshot {
    pub fn new(plan: &BasisPlan, state: &VelocityState, t: f64, nu: f64, alpha: f64, sigma: f64) -> Result<Self> {
        crate::hodge::check_state(plan, state)?;
        Ok(Snapshot {
            meta: SnapshotMeta {
                geometry_tag: geometry_tag(plan.geometry()),
                truncation: plan.truncation() as u32,
                t,
                nu,
                alpha,
                sigma,
            },
            payload: state.to_flat(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.meta;
        let mut out = Vec::with_capacity(HEADER + 8 * self.payload.len() + 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(m.geometry_tag);
        out.extend_from_slice(&m.truncation.to_le_bytes());
        for x in [m.t, m.nu, m.alpha, m.sigma] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&(self.payload.len() as u64).to_le_bytes());
        let start = out.len();
        for x in &self.payload {
            out.extend_from_slice(&x.to_le_bytes());
        }
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let corrupt = |reason: &str| Error::CorruptSnapshot { path: path.to_path_buf(), reason: reason.into() };
        if bytes.len() < HEADER + 4 {
            return Err(corrupt("file is shorter than the header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(corrupt(&format!("unsupported version {version}")));
        }
        let geometry_tag = bytes[8];
        if geometry_tag > 1 {
            return Err(corrupt(&format!("unknown geometry tag {geometry_tag}")));
        }
        let meta = SnapshotMeta {
            geometry_tag,
            truncation: u32_at(9),
            t: f64_at(13),
            nu: f64_at(21),
            alpha: f64_at(29),
            sigma: f64_at(37),
        };
        let len = u64::from_le_bytes(bytes[45..53].try_into().unwrap());
        let expected = (len as u128) * 8 + HEADER as u128 + 4;
        if bytes.len() as u128 != expected {
            return Err(corrupt("length does not match the declared payload"));
        }
        let body = &bytes[HEADER..bytes.len() - 4];
        let crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
        if crc32fast::hash(body) != crc {
            return Err(corrupt("checksum mismatch"));
        }
        let payload = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Snapshot { meta, payload })
    }

    /// The stored state, checked against `plan`.
    pub fn state(&self, plan: &BasisPlan) -> Result<VelocityState> {
        let tag = geometry_tag(plan.geometry());
        if self.meta.geometry_tag != tag {
            return Err(Error::SnapshotMismatch { reason: format!("geometry tag {} but the plan is a {}", self.meta.geometry_tag, plan.geometry().name()) });
        }
        if self.meta.truncation as usize != plan.truncation() {
            return Err(Error::SnapshotMismatch {
                reason: format!("truncation {} but the plan has {}", self.meta.truncation, plan.truncation()),
            });
        }
        VelocityState::from_flat(plan, &self.payload).map_err(|e| Error::SnapshotMismatch { reason: e.to_string() })
    }
}

pub fn save_snapshot(path: &Path, snapshot: &Snapshot) -> Result<()> {
    fs::write(path, snapshot.to_bytes())?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot> {
    Snapshot::from_bytes(&fs::read(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> (BasisPlan, Snapshot, VelocityState) {
        let plan = BasisPlan::new(Geometry::Torus { length: 2.0 }, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = VelocityState::random(&plan, &mut rng, 1.0, true);
        let snap = Snapshot::new(&plan, &s, 1.25, 0.1, 0.2, 0.3).unwrap();
        (plan, snap, s)
    }

    #[test]
    fn roundtrip_is_bitwise() {
        let (plan, snap, s) = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.snap");
        save_snapshot(&path, &snap).unwrap();
        let back = load_snapshot(&path).unwrap();
        assert_eq!(back.meta, snap.meta);
        let t = back.state(&plan).unwrap();
        assert!(t.to_flat().iter().zip(s.to_flat()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn corruption_is_detected() {
        let (plan, snap, _) = sample();
        let bytes = snap.to_bytes();
        let p = Path::new("x");
        assert!(matches!(Snapshot::from_bytes(&bytes[..bytes.len() - 9], p), Err(Error::CorruptSnapshot { .. })));
        let mut flipped = bytes.clone();
        flipped[HEADER + 3] ^= 0x10;
        match Snapshot::from_bytes(&flipped, p) {
            Err(Error::CorruptSnapshot { reason, .. }) => assert!(reason.contains("checksum")),
            other => panic!("{other:?}"),
        }
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(Snapshot::from_bytes(&magic, p), Err(Error::CorruptSnapshot { .. })));
        let other = BasisPlan::new(Geometry::Torus { length: 2.0 }, 6).unwrap();
        assert!(matches!(snap.state(&other), Err(Error::SnapshotMismatch { .. })));
        let sphere = BasisPlan::new(Geometry::Sphere, 5).unwrap();
        assert!(matches!(snap.state(&sphere), Err(Error::SnapshotMismatch { .. })));
        assert!(snap.state(&plan).is_ok());
    }
}
