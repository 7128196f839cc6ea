use proptest::prelude::*;
use wtsynth_core::oscillator::{synthesize_with, upsample_controls, RenderOptions};
use wtsynth_core::wavetable::max_harmonic;
use wtsynth_core::{bandlimit, synthesize, ControlTrack, PhaseState, Wavetable, WavetableBank};

fn table(len: usize) -> impl Strategy<Value = Wavetable> {
    prop::collection::vec(-1.0f64..1.0, len).prop_map(|v| Wavetable::new(v).unwrap())
}

fn energy(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Random track with normalized attention rows.
fn track(n_tables: usize, frames: usize) -> impl Strategy<Value = ControlTrack> {
    (
        prop::collection::vec(20.0f64..3000.0, frames),
        prop::collection::vec(0.0f64..2.0, frames),
        prop::collection::vec(0.001f64..1.0, frames * n_tables),
    )
        .prop_map(move |(f0, amp, raw)| {
            let att: Vec<f64> = raw
                .chunks(n_tables)
                .flat_map(|r| {
                    let s: f64 = r.iter().sum();
                    r.iter().map(move |c| c / s).collect::<Vec<_>>()
                })
                .collect();
            ControlTrack::new(250.0, f0, amp, n_tables, att).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bandlimit_is_idempotent(t in table(64), k in 1usize..=32) {
        let once = bandlimit(&t, k).unwrap();
        let twice = bandlimit(&once, k).unwrap();
        for (a, b) in once.samples().iter().zip(twice.samples()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bandlimit_is_linear(a in table(32), b in table(32), s in -3.0f64..3.0, k in 1usize..=16) {
        let mix = Wavetable::new(a.samples().iter().zip(b.samples()).map(|(x, y)| x + s * y).collect()).unwrap();
        let lhs = bandlimit(&mix, k).unwrap();
        let (pa, pb) = (bandlimit(&a, k).unwrap(), bandlimit(&b, k).unwrap());
        for ((l, x), y) in lhs.samples().iter().zip(pa.samples()).zip(pb.samples()) {
            prop_assert!((l - (x + s * y)).abs() < 1e-11);
        }
    }

    #[test]
    fn bandlimit_never_adds_energy(t in table(128), k in 1usize..=64) {
        let p = bandlimit(&t, k).unwrap();
        prop_assert!(energy(p.samples()) <= energy(t.samples()) * (1.0 + 1e-12));
    }

    #[test]
    fn max_harmonic_stays_below_nyquist(f0 in 1.0f64..7999.0) {
        let k = max_harmonic(16000.0, f0, 4096);
        prop_assert!(k >= 1);
        prop_assert!(k as f64 * f0 <= 8000.0);
        prop_assert!((k + 1) as f64 * f0 > 8000.0 || k == 2048);
    }

    #[test]
    fn output_within_convex_bound(
        tables in prop::collection::vec(table(64), 3),
        tr in track(3, 6),
        antialias in any::<bool>(),
    ) {
        let bank = WavetableBank::new(tables).unwrap();
        let x = synthesize(&bank, &tr, 16000.0, antialias).unwrap();
        let a_max = tr.amplitude().iter().copied().fold(0.0, f64::max);
        let w_max = if antialias {
            // Projected tables can overshoot the raw peak; bound by their own maxima.
            (1..=32)
                .map(|k| bank.tables().iter().map(|t| bandlimit(t, k).unwrap().max_abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max)
        } else {
            bank.max_abs()
        };
        prop_assert!(x.iter().all(|v| v.abs() <= a_max * w_max + 1e-12));
    }

    #[test]
    fn amplitude_scaling_is_exact(
        tables in prop::collection::vec(table(64), 2),
        tr in track(2, 5),
        pow in -4i32..4,
    ) {
        let bank = WavetableBank::new(tables).unwrap();
        let s = 2f64.powi(pow);
        let x = synthesize(&bank, &tr, 16000.0, true).unwrap();
        let y = synthesize(&bank, &tr.with_scaled_amplitude(s).unwrap(), 16000.0, true).unwrap();
        for (a, b) in x.iter().zip(&y) {
            prop_assert_eq!(a * s, *b);
        }
    }

    #[test]
    fn upsampled_attention_rows_sum_to_one(tr in track(4, 7)) {
        let c = upsample_controls(&tr, 16000.0, 7 * 64).unwrap();
        for row in c.attention.chunks(4) {
            let s: f64 = row.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-6);
            prop_assert!(row.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn split_render_is_seamless(t in table(64), f0 in 30.0f64..4000.0, split in 1usize..20) {
        let bank = WavetableBank::new(vec![t]).unwrap();
        let whole = ControlTrack::constant(250.0, 20, f0, 0.7, &[1.0]).unwrap();
        let full = synthesize(&bank, &whole, 16000.0, true).unwrap();

        let first = ControlTrack::constant(250.0, split, f0, 0.7, &[1.0]).unwrap();
        let second = ControlTrack::constant(250.0, 20 - split, f0, 0.7, &[1.0]).unwrap();
        let a = synthesize_with(&bank, &first, 16000.0, &RenderOptions::default()).unwrap();
        let b = synthesize_with(
            &bank,
            &second,
            16000.0,
            &RenderOptions { initial_phase: a.final_phase, ..RenderOptions::default() },
        )
        .unwrap();
        let joined: Vec<f64> = a.signal.iter().chain(&b.signal).copied().collect();
        prop_assert_eq!(joined, full);
    }

    #[test]
    fn phase_stays_in_range(initial in -20.0f64..20.0, f0 in prop::collection::vec(0.0f64..7999.0, 1..200)) {
        let ph = wtsynth_core::accumulate_phase(&f0, 16000.0, initial).unwrap();
        prop_assert!(ph.iter().all(|p| (0.0..std::f64::consts::TAU).contains(p)));
        prop_assert!((PhaseState::from_radians(initial).radians() - ph[0]).abs() < 1e-12);
    }
}
