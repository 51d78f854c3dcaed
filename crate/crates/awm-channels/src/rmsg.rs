//! Interprocessor message-passing timing model.
//!
//! Transfer times are anchored at the measured 8-byte and 4096-byte medians
//! per direction and interpolated log-linearly in payload between them.
//! The two directions are deliberately asymmetric. Outside the measured
//! range the estimate is flagged as an extrapolation and capped at the
//! configured maximum rate.

use serde::{Deserialize, Serialize};

pub const RMSG_MIN_PAYLOAD: u64 = 8;
pub const RMSG_MAX_PAYLOAD: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmsgDirection {
    ApuToRpu,
    RpuToApu,
}

/// Median transfer-time anchors for one direction, microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsgAnchors {
    pub t_8_us: f64,
    pub t_4096_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsgModel {
    pub max_rate_bytes_per_s: f64,
    pub apu_to_rpu: RmsgAnchors,
    pub rpu_to_apu: RmsgAnchors,
}

/// A transfer-time estimate; `extrapolated` warns that the payload fell
/// outside the measured 8..=4096-byte range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RmsgEstimate {
    pub time_ns: f64,
    pub extrapolated: bool,
}

impl RmsgModel {
    fn anchors(&self, direction: RmsgDirection) -> RmsgAnchors {
        match direction {
            RmsgDirection::ApuToRpu => self.apu_to_rpu,
            RmsgDirection::RpuToApu => self.rpu_to_apu,
        }
    }

    /// Estimated median transfer time for one payload.
    pub fn transfer_time(&self, direction: RmsgDirection, payload_bytes: u64) -> RmsgEstimate {
        let anchors = self.anchors(direction);
        let t8 = anchors.t_8_us * 1e3;
        let t4096 = anchors.t_4096_us * 1e3;
        let octaves = 9.0; // log2(4096 / 8)
        let position = (payload_bytes.max(1) as f64 / 8.0).log2() / octaves;
        let mut time_ns = t8 * (t4096 / t8).powf(position);
        let extrapolated = !(RMSG_MIN_PAYLOAD..=RMSG_MAX_PAYLOAD).contains(&payload_bytes);
        if extrapolated {
            // extrapolations may not beat the saturation rate
            let floor_ns = payload_bytes as f64 / self.max_rate_bytes_per_s * 1e9;
            time_ns = time_ns.max(floor_ns);
        }
        RmsgEstimate {
            time_ns,
            extrapolated,
        }
    }

    pub fn throughput(&self, direction: RmsgDirection, payload_bytes: u64) -> f64 {
        payload_bytes as f64 / (self.transfer_time(direction, payload_bytes).time_ns * 1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> RmsgModel {
        RmsgModel {
            max_rate_bytes_per_s: 32e6,
            apu_to_rpu: RmsgAnchors {
                t_8_us: 2.2,
                t_4096_us: 126.0,
            },
            rpu_to_apu: RmsgAnchors {
                t_8_us: 29.0,
                t_4096_us: 160.0,
            },
        }
    }

    #[test]
    fn anchor_points_are_exact() {
        let m = model();
        let e = m.transfer_time(RmsgDirection::ApuToRpu, 8);
        assert!((e.time_ns - 2_200.0).abs() < 1e-9);
        assert!(!e.extrapolated);
        let e = m.transfer_time(RmsgDirection::RpuToApu, 4096);
        assert!((e.time_ns - 160_000.0).abs() < 1e-6);
    }

    #[test]
    fn apu_to_rpu_is_faster_at_every_measured_payload() {
        let m = model();
        let mut payload = 8u64;
        while payload <= 4096 {
            let a = m.transfer_time(RmsgDirection::ApuToRpu, payload).time_ns;
            let r = m.transfer_time(RmsgDirection::RpuToApu, payload).time_ns;
            assert!(a < r, "payload {payload}: {a} vs {r}");
            payload *= 2;
        }
    }

    #[test]
    fn transfer_time_is_monotone_in_payload() {
        let m = model();
        for dir in [RmsgDirection::ApuToRpu, RmsgDirection::RpuToApu] {
            let mut last = 0.0;
            let mut payload = 8u64;
            while payload <= 4096 {
                let t = m.transfer_time(dir, payload).time_ns;
                assert!(t > last);
                last = t;
                payload *= 2;
            }
        }
    }

    #[test]
    fn out_of_range_payloads_warn_and_saturate() {
        let m = model();
        let e = m.transfer_time(RmsgDirection::ApuToRpu, 1 << 20);
        assert!(e.extrapolated);
        let rate = (1u64 << 20) as f64 / (e.time_ns * 1e-9);
        assert!(rate <= m.max_rate_bytes_per_s * (1.0 + 1e-12));
        assert!(m.transfer_time(RmsgDirection::ApuToRpu, 4).extrapolated);
    }
}
