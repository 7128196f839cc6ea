use crate::error::{ensure_arg, Result};
use crate::oscillator::{synthesize, ControlTrack};
use crate::wavetable::WavetableBank;

/// Renders `track` with every f0 multiplied by `factor`; other controls unchanged.
pub fn pitch_shift(bank: &WavetableBank, track: &ControlTrack, factor: f64, sample_rate: f64) -> Result<Vec<f64>> {
    ensure_arg!(factor > 0.0 && factor.is_finite(), "pitch factor must be positive, got {factor}");
    let top = track.f0().iter().copied().fold(0.0, f64::max) * factor;
    ensure_arg!(
        top < sample_rate / 2.0,
        "shifted f0 {top:.1} Hz reaches Nyquist at {} Hz",
        sample_rate / 2.0
    );
    synthesize(bank, &track.with_scaled_f0(factor)?, sample_rate, true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// Table indices, highest mean attention first.
    pub order: Vec<usize>,
    /// Mean attention per original table index.
    pub mean_attention: Vec<f64>,
}

/// Orders tables by time-averaged attention, ties kept in index order.
pub fn rank_wavetables(bank: &WavetableBank, track: &ControlTrack) -> Result<Ranking> {
    let n = bank.n_tables();
    ensure_arg!(
        track.n_tables() == n,
        "track has {} attention columns for {n} tables",
        track.n_tables()
    );
    let mut mean = vec![0.0; n];
    for t in 0..track.n_frames() {
        mean.iter_mut().zip(track.attention_row(t)).for_each(|(m, c)| *m += c);
    }
    if track.n_frames() > 0 {
        mean.iter_mut().for_each(|m| *m /= track.n_frames() as f64);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| mean[b].total_cmp(&mean[a]));
    Ok(Ranking {
        order,
        mean_attention: mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavetable::{init_bank, Wavetable};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bank(n: usize) -> WavetableBank {
        init_bank(n, 32, 0.1, 0).unwrap()
    }

    #[test]
    fn unit_factor_is_identity() {
        let b = WavetableBank::new(vec![Wavetable::sawtooth(256).unwrap()]).unwrap();
        let tr = ControlTrack::constant(250.0, 20, 330.0, 0.8, &[1.0]).unwrap();
        assert_eq!(
            pitch_shift(&b, &tr, 1.0, 16000.0).unwrap(),
            synthesize(&b, &tr, 16000.0, true).unwrap()
        );
    }

    #[test]
    fn shift_past_nyquist_rejected() {
        let tr = ControlTrack::constant(250.0, 4, 3000.0, 1.0, &[0.5, 0.5]).unwrap();
        assert!(pitch_shift(&bank(2), &tr, 4.0, 16000.0).is_err());
        assert!(pitch_shift(&bank(2), &tr, 0.0, 16000.0).is_err());
    }

    #[test]
    fn uniform_attention_keeps_index_order() {
        let tr = ControlTrack::constant(250.0, 5, 100.0, 1.0, &[0.25; 4]).unwrap();
        assert_eq!(rank_wavetables(&bank(4), &tr).unwrap().order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn dominant_table_first() {
        let att = [0.0, 0.0, 0.0, 1.0].repeat(3);
        let tr = ControlTrack::new(250.0, vec![100.0; 3], vec![1.0; 3], 4, att).unwrap();
        assert_eq!(rank_wavetables(&bank(4), &tr).unwrap().order[0], 3);
    }

    #[test]
    fn matches_brute_force_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (n, t) = (6, 40);
        let mut att = Vec::new();
        for _ in 0..t {
            let row: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let s: f64 = row.iter().sum();
            att.extend(row.iter().map(|v| v / s));
        }
        let tr = ControlTrack::new(250.0, vec![100.0; t], vec![1.0; t], n, att.clone()).unwrap();
        let r = rank_wavetables(&bank(n), &tr).unwrap();

        let means: Vec<f64> = (0..n)
            .map(|i| (0..t).map(|f| att[f * n + i]).sum::<f64>() / t as f64)
            .collect();
        let mut expected: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for j in 0..n - 1 - i {
                if means[expected[j]] < means[expected[j + 1]] {
                    expected.swap(j, j + 1);
                }
            }
        }
        assert_eq!(r.order, expected);
    }
}
