//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.

use std::process::{Command, ExitCode};
use std::time::Instant;

use audiochain::adcdac::{
    process_sample, spi_decode, spi_encode, SampleChainConfig, SamplingSpeed,
};
use audiochain::measure::{
    generate_mls, measure_impulse_response, measure_thd, measure_thdn, mls_bits, Lfsr, MlsConfig,
};
use audiochain::{dequantize, generate_sine, quantize_noiseless, QuantizerSpec, Signal};
use audiochain_cli::report::{read_csv, Report};
use audiochain_cli::{run_scenario, Chain, Measurement, Scenario};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;
type LtiSystem = Box<dyn Fn(&[f64]) -> Vec<f64>>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn latency_rows(s: &Scenario) -> Vec<(String, f64)> {
    match run_scenario(s).expect("latency scenario runs") {
        Report::Latency(rows) => rows
            .into_iter()
            .map(|r| (r.parameter, r.latency_seconds))
            .collect(),
        other => panic!("unexpected report {other:?}"),
    }
}

fn distortion_row(s: &Scenario) -> (f64, f64) {
    match run_scenario(s).expect("distortion scenario runs") {
        Report::Distortion(rows) => (rows[0].thd_db, rows[0].thdn_db),
        other => panic!("unexpected report {other:?}"),
    }
}

fn i2s_latency_table() -> Outcome {
    let start = Instant::now();
    let rows = latency_rows(&Scenario::new(Chain::I2s, Measurement::Latency));
    let elapsed = start.elapsed().as_secs_f64();
    let measured = [
        ("16", 1.63e-3),
        ("32", 2.7e-3),
        ("64", 4.9e-3),
        ("128", 9.24e-3),
    ];
    let tol = 1.0 / 44_100.0;
    let mut ok = rows.len() == measured.len() && elapsed < 10.0;
    let mut detail = Vec::new();
    for ((label, got), (want_label, want)) in rows.iter().zip(measured) {
        ok &= label == want_label && (got - want).abs() <= tol;
        detail.push(format!(
            "B={label}: {:.3} ms (measured {:.2})",
            got * 1e3,
            want * 1e3
        ));
    }
    detail.push(format!("{elapsed:.1} s"));
    check(ok, detail.join(", "))
}

fn adcdac_latency_table() -> Outcome {
    let start = Instant::now();
    let rows = latency_rows(&Scenario::new(Chain::Adcdac, Measurement::Latency));
    let elapsed = start.elapsed().as_secs_f64();
    let measured = [("LOW_SPEED", 12e-6), ("HIGH_SPEED", 9.6e-6)];
    // one period of the 16x oversampled simulation
    let tol = 1.0 / (16.0 * 96_000.0);
    let mut ok = rows.len() == measured.len() && elapsed < 30.0 && tol <= 0.7e-6;
    let mut detail = Vec::new();
    for ((label, got), (want_label, want)) in rows.iter().zip(measured) {
        ok &= label == want_label && (got - want).abs() <= tol;
        detail.push(format!(
            "{label}: {:.2} us (measured {:.1})",
            got * 1e6,
            want * 1e6
        ));
    }
    detail.push(format!("tol {:.3} us, {elapsed:.1} s", tol * 1e6));
    check(ok, detail.join(", "))
}

fn i2s_point(m: Measurement) -> Scenario {
    Scenario {
        block_samples: vec![128],
        ..Scenario::new(Chain::I2s, m)
    }
}

fn adcdac_low(m: Measurement) -> Scenario {
    Scenario {
        sampling_speeds: vec![SamplingSpeed::Low],
        ..Scenario::new(Chain::Adcdac, m)
    }
}

fn thd_reproduction() -> Outcome {
    let (i2s, _) = distortion_row(&i2s_point(Measurement::Thd));
    let (adc, _) = distortion_row(&adcdac_low(Measurement::Thd));
    check(
        (i2s + 80.0).abs() <= 0.5 && (adc + 76.0).abs() <= 0.5,
        format!("i2s {i2s:.2} dB (target -80), adcdac LOW {adc:.2} dB (target -76)"),
    )
}

fn thdn_closure() -> Outcome {
    let (_, i2s) = distortion_row(&i2s_point(Measurement::Thdn));
    let (_, adc) = distortion_row(&adcdac_low(Measurement::Thdn));
    check(
        (i2s + 68.0).abs() <= 1.0 && (adc + 63.0).abs() <= 1.0,
        format!("i2s {i2s:.2} dB (target -68), adcdac LOW {adc:.2} dB (target -63)"),
    )
}

fn analyzer_exactness() -> Outcome {
    let fs = 48_000.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_thd: f64 = 0.0;
    for _ in 0..100 {
        let f0 = [200.0, 500.0, 750.0, 1000.0, 1200.0, 2000.0, 3000.0][rng.random_range(0..7)];
        let a1 = rng.random_range(0.05..1.5);
        let n_harm = rng.random_range(1..10);
        let mut sig = generate_sine(
            f0,
            a1,
            0.5,
            fs,
            rng.random_range(0.0..std::f64::consts::TAU),
        )
        .unwrap();
        let mut ratio = 0.0;
        for k in 2..2 + n_harm {
            let f = k as f64 * f0;
            if f >= fs / 2.0 {
                break;
            }
            let rel_db: f64 = rng.random_range(-110.0..-20.0);
            let rel = 10f64.powf(rel_db / 20.0);
            ratio += rel * rel;
            let h = generate_sine(
                f,
                a1 * rel,
                0.5,
                fs,
                rng.random_range(0.0..std::f64::consts::TAU),
            )
            .unwrap();
            sig = sig.add(&h).unwrap();
        }
        let expected = 10.0 * ratio.log10();
        let got = measure_thd(&sig, f0, None).unwrap().thd_db;
        worst_thd = worst_thd.max((got - expected).abs());
    }

    let mut worst_snr: f64 = 0.0;
    for (i, snr) in [40.0, 55.0, 68.0, 80.0].into_iter().enumerate() {
        let rms = 0.5;
        let noise = Normal::new(0.0, rms * 10f64.powf(-snr / 20.0)).unwrap();
        let mut nrng = ChaCha8Rng::seed_from_u64(i as u64);
        let x = generate_sine(1000.0, rms, 4.0, fs, 0.0)
            .unwrap()
            .map(|v| v + noise.sample(&mut nrng));
        let got = measure_thdn(&x, 1000.0).unwrap().thdn_db;
        worst_snr = worst_snr.max((got + snr).abs());
    }
    check(
        worst_thd <= 0.1 && worst_snr <= 0.5,
        format!("100 profiles: worst THD error {worst_thd:.4} dB; SNR 40-80 dB: worst THD+N error {worst_snr:.3} dB"),
    )
}

/// Circular autocorrelation of a ±1 sequence by XOR and popcount.
fn autocorrelation_is_two_valued(bits: &[bool]) -> bool {
    let l = bits.len();
    let words = l.div_ceil(64);
    // two copies back to back so a lag is a window, plus one spare word
    let mut doubled = vec![0u64; 2 * words + 2];
    for i in 0..2 * l {
        if bits[i % l] {
            doubled[i / 64] |= 1 << (i % 64);
        }
    }
    let window = |start: usize, w: usize| -> u64 {
        let bit = start + 64 * w;
        let (i, sh) = (bit / 64, bit % 64);
        if sh == 0 {
            doubled[i]
        } else {
            (doubled[i] >> sh) | (doubled[i + 1] << (64 - sh))
        }
    };
    let tail_mask = if l.is_multiple_of(64) {
        u64::MAX
    } else {
        (1u64 << (l % 64)) - 1
    };
    for lag in 0..l {
        let mut disagree = 0i64;
        for w in 0..words {
            let mut x = window(0, w) ^ window(lag, w);
            if w == words - 1 {
                x &= tail_mask;
            }
            disagree += x.count_ones() as i64;
        }
        let r = l as i64 - 2 * disagree;
        if r != if lag == 0 { l as i64 } else { -1 } {
            return false;
        }
    }
    true
}

/// Two-pole resonator, the reference response by direct recursion.
fn resonator(x: &[f64]) -> Vec<f64> {
    let (b0, a1, a2) = (0.3, -1.2, 0.5);
    let mut y = vec![0.0; x.len()];
    for n in 0..x.len() {
        y[n] = b0 * x[n]
            - a1 * if n >= 1 { y[n - 1] } else { 0.0 }
            - a2 * if n >= 2 { y[n - 2] } else { 0.0 };
    }
    y
}

fn fir(x: &[f64], h: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| (0..h.len().min(n + 1)).map(|k| h[k] * x[n - k]).sum())
        .collect()
}

fn mls_properties() -> Outcome {
    for order in 2..=16u32 {
        let cfg = MlsConfig {
            order,
            ..Default::default()
        };
        let mut lfsr = Lfsr::new(order, 1).unwrap();
        let start = lfsr.state();
        let mut period = 0usize;
        loop {
            lfsr.next();
            period += 1;
            if lfsr.state() == start {
                break;
            }
        }
        if period != (1 << order) - 1 {
            return Err(format!("order {order}: period {period}"));
        }
        let bits = mls_bits(&cfg).unwrap();
        let balance: i64 = bits.iter().map(|&b| if b { 1 } else { -1 }).sum();
        if balance.abs() != 1 {
            return Err(format!("order {order}: balance {balance}"));
        }
        if !autocorrelation_is_two_valued(&bits) {
            return Err(format!("order {order}: autocorrelation"));
        }
        if generate_mls(&cfg, 1.0).unwrap().len() != period {
            return Err(format!("order {order}: generated length"));
        }
    }

    let fs = 48_000.0;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let taps: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
    let systems: Vec<(&str, LtiSystem)> = vec![
        (
            "random 64-tap FIR",
            Box::new(move |x: &[f64]| fir(x, &taps)),
        ),
        ("two-pole resonator", Box::new(resonator)),
        (
            "delay 333 with gain -0.7",
            Box::new(|x: &[f64]| {
                let mut y = vec![0.0; x.len()];
                for n in 333..x.len() {
                    y[n] = -0.7 * x[n - 333];
                }
                y
            }),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (_, sys) in &systems {
        let cfg = MlsConfig {
            order: 14,
            ..Default::default()
        };
        let ir =
            measure_impulse_response(|x: &Signal| Signal::new(sys(x.samples()), fs), &cfg, 3, fs)
                .unwrap();
        let mut impulse = vec![0.0; ir.len()];
        impulse[0] = 1.0;
        let direct = sys(&impulse);
        let ms = ir
            .samples()
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / ir.len() as f64;
        worst = worst.max(ms.sqrt());
    }
    check(
        worst <= 1e-4,
        format!("orders 2-16 period/balance/autocorrelation exact; worst IR rms error {worst:.2e} over {} LTI systems", systems.len()),
    )
}

/// Firmware arithmetic on exact rationals: average the two pin voltages
/// less the ADC offset, add the DAC offset, scale to DAC codes, round half
/// away from zero and saturate.
fn rational_dac_code(c0: u32, c1: u32) -> (u32, bool) {
    let adc_lsb = Ratio::new(33i64, 10 * 65_535);
    let v0 = Ratio::from_integer(c0 as i64) * adc_lsb - Ratio::new(13, 8);
    let v1 = Ratio::from_integer(c1 as i64) * adc_lsb - Ratio::new(13, 8);
    let out = (v0 + v1) / 2 + Ratio::new(5, 4);
    let code = out * Ratio::new(65_535 * 2, 5);
    let rounded = (code + Ratio::new(1, 2)).floor().to_integer();
    if rounded < 0 {
        (0, true)
    } else if rounded > 65_535 {
        (65_535, true)
    } else {
        (rounded as u32, false)
    }
}

fn bit_exact_contracts() -> Outcome {
    for c in 0..=65_535u32 {
        let frame = spi_encode(c).map_err(|e| e.to_string())?;
        if spi_decode(frame) as u32 != c
            || frame.byte_high as u32 * 256 + frame.byte_low as u32 != c
        {
            return Err(format!("SPI round trip fails at {c}"));
        }
    }

    let cfg = SampleChainConfig::ideal(SamplingSpeed::Low);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100_000 {
        let (a, b) = (
            rng.random_range(0..=65_535u32),
            rng.random_range(0..=65_535u32),
        );
        let got = process_sample(a, b, &cfg).map_err(|e| e.to_string())?;
        if (got.code, got.clipped) != rational_dac_code(a, b) {
            return Err(format!(
                "process_sample({a}, {b}) = {got:?}, oracle {:?}",
                rational_dac_code(a, b)
            ));
        }
    }

    let spec = QuantizerSpec::new(16, 0.0, 3.3, None).unwrap();
    let steps = 1_000_000;
    let mut worst: f64 = 0.0;
    for i in 0..=steps {
        let v = 3.3 * i as f64 / steps as f64;
        let back = dequantize(quantize_noiseless(v, &spec), &spec).unwrap();
        worst = worst.max((back - v).abs() / spec.lsb());
    }
    check(
        worst <= 0.5 + 1e-9,
        format!("SPI 65536/65536, process_sample 100000/100000 vs rational oracle, quantizer worst {worst:.6} LSB"),
    )
}

fn run_twice(args: &[&str], outputs: &[&std::path::Path]) -> Result<bool, String> {
    let mut runs = Vec::new();
    for _ in 0..2 {
        let st = Command::new(env!("CARGO_BIN_EXE_audiochain"))
            .args(args)
            .status()
            .map_err(|e| e.to_string())?;
        if !st.success() {
            return Err(format!("{args:?} exited with {st}"));
        }
        let bytes: Vec<Vec<u8>> = outputs.iter().map(|p| std::fs::read(p).unwrap()).collect();
        runs.push(bytes);
    }
    Ok(runs[0] == runs[1])
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let csv = dir.path().join("r.csv");
    let wav = dir.path().join("r.wav");
    let (c, w) = (csv.to_str().unwrap(), wav.to_str().unwrap());
    let cases: [(&str, Vec<&str>, bool); 3] = [
        (
            "i2s thdn + wav",
            vec![
                "--chain",
                "i2s",
                "--measure",
                "thdn",
                "--block-samples",
                "32",
                "--seed",
                "11",
                "--out",
                c,
                "--wav-out",
                w,
            ],
            true,
        ),
        (
            "adcdac latency sweep",
            vec![
                "--chain",
                "adcdac",
                "--measure",
                "latency",
                "--seed",
                "3",
                "--out",
                c,
            ],
            false,
        ),
        (
            "adcdac spectrum + wav",
            vec![
                "--chain",
                "adcdac",
                "--measure",
                "spectrum",
                "--sampling-speed",
                "high",
                "--out",
                c,
                "--wav-out",
                w,
            ],
            true,
        ),
    ];
    let mut names = Vec::new();
    for (name, args, with_wav) in &cases {
        let outputs: Vec<&std::path::Path> = if *with_wav {
            vec![&csv, &wav]
        } else {
            vec![&csv]
        };
        if !run_twice(args, &outputs)? {
            return Err(format!("{name}: outputs differ"));
        }
        read_csv(std::fs::File::open(&csv).unwrap()).map_err(|e| format!("{name}: {e}"))?;
        names.push(*name);
    }
    Ok(format!(
        "byte-identical over two runs: {}",
        names.join(", ")
    ))
}

fn spectrum_scenario() -> Outcome {
    let Report::Spectrum(rows) = run_scenario(&i2s_point(Measurement::Spectrum)).unwrap() else {
        return Err("not a spectrum".into());
    };
    let peak = rows
        .iter()
        .max_by(|a, b| a.power_dbv.total_cmp(&b.power_dbv))
        .unwrap();
    let bin = rows[1].frequency_hz;
    let band = |f: f64| -> f64 {
        rows.iter()
            .filter(|r| (r.frequency_hz - f).abs() <= 4.0 * bin)
            .map(|r| 10f64.powf(r.power_dbv / 10.0))
            .sum()
    };
    let h3 = 10.0 * (band(3000.0) / band(1000.0)).log10();
    check(
        (peak.frequency_hz - 1000.0).abs() <= bin && (h3 + 80.0).abs() <= 1.0,
        format!(
            "peak {:.1} Hz, 3rd harmonic {h3:.2} dB re fundamental (configured THD -80)",
            peak.frequency_hz
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("I2S latency table", i2s_latency_table),
        ("ADC/DAC latency table", adcdac_latency_table),
        ("THD reproduction", thd_reproduction),
        ("THD+N calibration closure", thdn_closure),
        ("Analyzer exactness", analyzer_exactness),
        ("MLS properties", mls_properties),
        ("Bit-exact micro-contracts", bit_exact_contracts),
        ("Determinism", determinism),
        ("Spectrum scenario", spectrum_scenario),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
