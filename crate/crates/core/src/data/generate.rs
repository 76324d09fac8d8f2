//! Synthetic PEC-style signal generator.
//!
//! A pulsed eddy current response rises quickly to a peak and then decays
//! toward a steady state. We model that as a difference of two exponentials
//! plus Gaussian sensor noise; metal loss raises the amplitude and shortens
//! the fast time constant, so deeper flaws produce larger, earlier peaks.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Dataset, FlawLayer, FlawSpec, ScanGrid, Signal};
use crate::error::{Error, Result};
use crate::init::stream_rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Amplitude gain per mm of metal loss.
pub const AMPLITUDE_GAIN_PER_MM: f64 = 0.5;
/// Fast (rise) time constant for an intact plate, in time steps.
pub const FAST_TAU_BASE: f64 = 12.0;
/// Relative shortening of the fast time constant per mm of metal loss.
pub const FAST_TAU_SHRINK_PER_MM: f64 = 0.6;
/// Slow decay time constant, in time steps.
pub const SLOW_TAU: f64 = 45.0;
/// Flaws on the far sheet couple more weakly to the probe.
pub const TOB_ATTENUATION: f64 = 0.85;
/// Sheet separation damps the whole response...
pub const AIRGAP_ATTENUATION: f64 = 0.8;
/// ...and delays it by a couple of time steps.
pub const AIRGAP_DELAY_STEPS: usize = 2;

const GENERATOR_STREAM: u64 = 7_001;
const LAP_JOINT_STREAM: u64 = 7_002;

/// Noiseless response for one flaw condition, evaluated at `t = 0..t_len`.
pub fn response_curve(spec: &FlawSpec, t_len: usize) -> Result<Vec<f64>> {
    let d = spec.depth_mm;
    let amplitude = {
        let mut a = 1.0 + AMPLITUDE_GAIN_PER_MM * d;
        if spec.layer == FlawLayer::Tob {
            a *= TOB_ATTENUATION;
        }
        if spec.airgap {
            a *= AIRGAP_ATTENUATION;
        }
        a
    };
    let tau_fast = FAST_TAU_BASE * (1.0 - FAST_TAU_SHRINK_PER_MM * d);
    if tau_fast <= 0.0 {
        return Err(Error::Data(format!(
            "depth {d} mm collapses the fast time constant"
        )));
    }
    let delay = if spec.airgap { AIRGAP_DELAY_STEPS } else { 0 };
    let curve = (0..t_len)
        .map(|t| {
            if t < delay {
                0.0
            } else {
                let tt = (t - delay) as f64;
                amplitude * ((-tt / SLOW_TAU).exp() - (-tt / tau_fast).exp())
            }
        })
        .collect();
    Ok(curve)
}

/// Grid of labelled signals: one row per flaw spec, `per_class` columns.
/// Class label = row index; depth labels = (bottom-of-top, top-of-bottom)
/// depth in mm; the truth map carries the flaw depth.
pub fn generate_synthetic<T: Scalar>(
    specs: &[FlawSpec],
    per_class: usize,
    t_len: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<ScanGrid<T>> {
    if specs.is_empty() {
        return Err(Error::Config("no flaw specs given".to_string()));
    }
    if per_class < 1 {
        return Err(Error::Config("per_class must be >= 1".to_string()));
    }
    if t_len < 8 {
        return Err(Error::Config(format!(
            "signal length must be >= 8, got {t_len}"
        )));
    }
    if noise_sigma < 0.0 || !noise_sigma.is_finite() {
        return Err(Error::Config(format!("invalid noise sigma {noise_sigma}")));
    }

    let mut rng = stream_rng(seed, GENERATOR_STREAM);
    let mut signals = Vec::with_capacity(specs.len() * per_class);
    let mut truth = Vec::with_capacity(specs.len() * per_class);
    for (class, spec) in specs.iter().enumerate() {
        let base = response_curve(spec, t_len)?;
        let (bot, tob) = match spec.layer {
            FlawLayer::Bot => (spec.depth_mm, 0.0),
            FlawLayer::Tob => (0.0, spec.depth_mm),
            FlawLayer::None => (0.0, 0.0),
        };
        for _ in 0..per_class {
            let mut values = Vec::with_capacity(t_len);
            for &b in &base {
                let noise: f64 = rng.sample(StandardNormal);
                values.push(T::from_f64(b + noise_sigma * noise));
            }
            let depth = Tensor::from_parts(vec![2], vec![T::from_f64(bot), T::from_f64(tob)]);
            signals.push(Signal::new(
                Tensor::from_parts(vec![1, t_len], values),
                Some(class),
                Some(depth),
            )?);
            truth.push(T::from_f64(spec.depth_mm));
        }
    }
    let height = specs.len();
    let width = per_class;
    ScanGrid::new(
        height,
        width,
        signals,
        Tensor::from_parts(vec![height, width], truth),
        vec![true; height * width],
        specs.len(),
    )
}

/// The default 10-class catalog: eight bottom-of-top milling depths, one
/// far-sheet flaw, and a loss-free class.
pub fn specimen_a_specs(airgap: bool) -> Vec<FlawSpec> {
    let bot_depths = [0.4826, 0.2519, 0.1884, 0.1545, 0.1143, 0.0572, 0.0402, 0.021];
    let mut specs: Vec<FlawSpec> = bot_depths
        .iter()
        .map(|&d| FlawSpec::new(FlawLayer::Bot, d, airgap).unwrap())
        .collect();
    specs.push(FlawSpec::new(FlawLayer::Tob, 0.4826, airgap).unwrap());
    specs.push(FlawSpec::new(FlawLayer::None, 0.0, airgap).unwrap());
    specs
}

/// Lap-joint style thickness scan: per-pixel plate thickness in `[0.01, 0.05]`
/// with `rivet_count` fastener holes (near-zero truth) to be masked out by
/// rivet removal. Signals are regression-only; the thickness is both the
/// truth map and the single depth label.
pub fn lap_joint_grid<T: Scalar>(
    height: usize,
    width: usize,
    rivet_count: usize,
    t_len: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<ScanGrid<T>> {
    if height == 0 || width == 0 {
        return Err(Error::Config("grid dimensions must be positive".to_string()));
    }
    if t_len < 8 {
        return Err(Error::Config(format!(
            "signal length must be >= 8, got {t_len}"
        )));
    }
    let mut rng = stream_rng(seed, LAP_JOINT_STREAM);

    let mut thickness = vec![0.0f64; height * width];
    for v in thickness.iter_mut() {
        *v = rng.gen_range(0.011..0.049);
    }
    // Punch rivet holes: a small disk of near-zero thickness.
    for _ in 0..rivet_count {
        let r0 = rng.gen_range(0..height);
        let c0 = rng.gen_range(0..width);
        for r in r0.saturating_sub(1)..(r0 + 2).min(height) {
            for c in c0.saturating_sub(1)..(c0 + 2).min(width) {
                thickness[r * width + c] = 0.001;
            }
        }
    }

    let mut signals = Vec::with_capacity(height * width);
    for &u in &thickness {
        // Thinner remaining material behaves like deeper metal loss.
        let loss_mm = (0.05 - u) * 10.0;
        let spec = FlawSpec::new(FlawLayer::Bot, loss_mm, false)?;
        let base = response_curve(&spec, t_len)?;
        let mut values = Vec::with_capacity(t_len);
        for &b in &base {
            let noise: f64 = rng.sample(StandardNormal);
            values.push(T::from_f64(b + noise_sigma * noise));
        }
        signals.push(Signal::new(
            Tensor::from_parts(vec![1, t_len], values),
            None,
            Some(Tensor::from_parts(vec![1], vec![T::from_f64(u)])),
        )?);
    }
    let truth = Tensor::from_parts(
        vec![height, width],
        thickness.iter().map(|&u| T::from_f64(u)).collect(),
    );
    ScanGrid::new(height, width, signals, truth, vec![true; height * width], 0)
}

/// Convenience: generate, then keep only the usable pixels as a dataset.
pub fn generate_synthetic_dataset<T: Scalar>(
    specs: &[FlawSpec],
    per_class: usize,
    t_len: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset<T>> {
    generate_synthetic(specs, per_class, t_len, noise_sigma, seed)?.to_dataset()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_makes_identical_samples_per_class() {
        let specs = vec![FlawSpec::new(FlawLayer::Bot, 0.2, false).unwrap()];
        let grid: ScanGrid<f64> = generate_synthetic(&specs, 4, 32, 0.0, 9).unwrap();
        let first = grid.signal(0, 0).values.clone();
        for c in 1..4 {
            assert_eq!(grid.signal(0, c).values, first);
        }
    }

    #[test]
    fn deeper_flaws_have_strictly_larger_peaks() {
        // Evaluate the closed form at each catalog depth and compare maxima.
        let depths = [0.021, 0.0402, 0.0572, 0.1143, 0.1545, 0.1884, 0.2519, 0.4826];
        let mut last_peak = f64::MIN;
        for &d in &depths {
            let spec = FlawSpec::new(FlawLayer::Bot, d, false).unwrap();
            let curve = response_curve(&spec, 100).unwrap();
            let peak = curve.iter().cloned().fold(f64::MIN, f64::max);
            assert!(
                peak > last_peak,
                "depth {d}: peak {peak} not above {last_peak}"
            );
            last_peak = peak;
        }
    }

    #[test]
    fn curves_decay_monotonically_after_the_peak() {
        for spec in specimen_a_specs(false) {
            let curve = response_curve(&spec, 100).unwrap();
            let peak_idx = curve
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            for t in peak_idx..99 {
                assert!(
                    curve[t + 1] <= curve[t],
                    "{:?} rises again at t={}",
                    spec,
                    t
                );
            }
        }
    }

    #[test]
    fn airgap_scales_and_delays() {
        let plain = FlawSpec::new(FlawLayer::Bot, 0.1, false).unwrap();
        let gapped = FlawSpec::new(FlawLayer::Bot, 0.1, true).unwrap();
        let a = response_curve(&plain, 50).unwrap();
        let b = response_curve(&gapped, 50).unwrap();
        for t in 0..AIRGAP_DELAY_STEPS {
            assert_eq!(b[t], 0.0);
        }
        for t in AIRGAP_DELAY_STEPS..50 {
            let want = AIRGAP_ATTENUATION * a[t - AIRGAP_DELAY_STEPS];
            assert!((b[t] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn generation_is_deterministic_under_seed() {
        let specs = specimen_a_specs(false);
        let a: ScanGrid<f64> = generate_synthetic(&specs, 3, 40, 0.01, 123).unwrap();
        let b: ScanGrid<f64> = generate_synthetic(&specs, 3, 40, 0.01, 123).unwrap();
        for (x, y) in a.signals().iter().zip(b.signals()) {
            assert_eq!(x.values, y.values);
        }
        let c: ScanGrid<f64> = generate_synthetic(&specs, 3, 40, 0.01, 124).unwrap();
        assert_ne!(a.signal(0, 0).values, c.signal(0, 0).values);
    }

    #[test]
    fn labels_carry_layer_and_depth() {
        let specs = specimen_a_specs(false);
        let grid: ScanGrid<f64> = generate_synthetic(&specs, 2, 32, 0.0, 1).unwrap();
        // Row 0: bottom-of-top flaw at 0.4826.
        let s = grid.signal(0, 0);
        assert_eq!(s.class_label, Some(0));
        assert_eq!(s.depth_labels.as_ref().unwrap().data(), &[0.4826, 0.0]);
        // Row 8: far-sheet flaw.
        let s = grid.signal(8, 0);
        assert_eq!(s.depth_labels.as_ref().unwrap().data(), &[0.0, 0.4826]);
        // Row 9: loss-free.
        let s = grid.signal(9, 0);
        assert_eq!(s.depth_labels.as_ref().unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn excessive_depth_is_rejected() {
        let spec = FlawSpec::new(FlawLayer::Bot, 2.0, false).unwrap();
        assert!(response_curve(&spec, 32).is_err());
    }

    #[test]
    fn lap_joint_grid_has_rivet_holes_and_single_target() {
        let grid: ScanGrid<f64> = lap_joint_grid(12, 16, 4, 32, 0.0, 5).unwrap();
        let holes = grid
            .truth_map()
            .data()
            .iter()
            .filter(|&&v| v < 0.005)
            .count();
        assert!(holes >= 4);
        assert_eq!(grid.signal(0, 0).depth_labels.as_ref().unwrap().len(), 1);
        assert_eq!(grid.num_classes(), 0);
    }
}
