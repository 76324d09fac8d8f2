//! Label scaling, rivet-region removal and per-class train/test splitting.

use rand::seq::SliceRandom;

use super::{Dataset, ScanGrid};
use crate::error::{Error, Result};
use crate::init::stream_rng;
use crate::scalar::Scalar;

const SPLIT_STREAM: u64 = 7_003;

/// Multiplies every depth label by `factor` and records it for inverse
/// transforms at reporting time. Small raw targets regress poorly, so the
/// labels are enlarged before training (e.g. x10 for mm-scale flaw depths,
/// x1000 for thickness maps).
pub fn scale_labels<T: Scalar>(dataset: &mut Dataset<T>, factor: f64) -> Result<()> {
    if dataset.signals().iter().any(|s| s.scaled) {
        return Err(Error::State(
            "labels have already been scaled once".to_string(),
        ));
    }
    if factor == 0.0 || !factor.is_finite() {
        return Err(Error::Config(format!("invalid label scale {factor}")));
    }
    let k = T::from_f64(factor);
    for signal in dataset.signals_mut() {
        if let Some(d) = signal.depth_labels.take() {
            signal.depth_labels = Some(d.scale(k));
        }
        signal.scaled = true;
    }
    dataset.set_scale_factor(factor);
    Ok(())
}

/// Marks fastener regions unusable: every pixel whose truth value is below
/// `threshold` is cleared, together with its Chebyshev neighbourhood of
/// radius `dilation / 2`. Other pixels keep their current mask state.
pub fn remove_rivets<T: Scalar>(
    grid: &ScanGrid<T>,
    threshold: f64,
    dilation: usize,
) -> Result<ScanGrid<T>> {
    if dilation == 0 {
        return Err(Error::Config("dilation must be positive".to_string()));
    }
    let radius = (dilation / 2) as isize;
    let (h, w) = (grid.height() as isize, grid.width() as isize);
    let mut mask = grid.mask().to_vec();
    let truth = grid.truth_map().data();
    for r in 0..h {
        for c in 0..w {
            if truth[(r * w + c) as usize].as_f64() >= threshold {
                continue;
            }
            for rr in (r - radius).max(0)..=(r + radius).min(h - 1) {
                for cc in (c - radius).max(0)..=(c + radius).min(w - 1) {
                    mask[(rr * w + cc) as usize] = false;
                }
            }
        }
    }
    Ok(grid.with_mask(mask))
}

/// Splits the usable, class-labelled pixels half/half into train and test,
/// randomly but seeded, separately within every class. Each class must hold
/// an even number of usable pixels.
pub fn split_specimen_a<T: Scalar>(
    grid: &ScanGrid<T>,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    if grid.num_classes() == 0 {
        return Err(Error::Data(
            "grid carries no class labels to split by".to_string(),
        ));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); grid.num_classes()];
    for (i, (signal, &usable)) in grid.signals().iter().zip(grid.mask()).enumerate() {
        if !usable {
            continue;
        }
        let class = signal.class_label.ok_or_else(|| {
            Error::Data(format!("pixel {i} has no class label"))
        })?;
        by_class[class].push(i);
    }

    let mut rng = stream_rng(seed, SPLIT_STREAM);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (class, indices) in by_class.iter_mut().enumerate() {
        if indices.is_empty() {
            return Err(Error::Split(format!("class {class} has no usable pixels")));
        }
        if indices.len() % 2 != 0 {
            return Err(Error::Split(format!(
                "class {class} has {} usable pixels; a half/half split needs an even count",
                indices.len()
            )));
        }
        indices.shuffle(&mut rng);
        let half = indices.len() / 2;
        train_idx.extend_from_slice(&indices[..half]);
        test_idx.extend_from_slice(&indices[half..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let pick = |idx: &[usize]| -> Result<Dataset<T>> {
        Dataset::new(
            idx.iter().map(|&i| grid.signals()[i].clone()).collect(),
            grid.num_classes(),
        )
    };
    Ok((pick(&train_idx)?, pick(&test_idx)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, specimen_a_specs, FlawLayer, FlawSpec, Signal};
    use crate::tensor::Tensor;
    use rand::Rng;

    fn uniform_grid(h: usize, w: usize, truth_value: f64) -> ScanGrid<f64> {
        let signals = (0..h * w)
            .map(|_| Signal::new(Tensor::new(&[1, 8], 0.5).unwrap(), Some(0), None).unwrap())
            .collect();
        ScanGrid::new(
            h,
            w,
            signals,
            Tensor::new(&[h, w], truth_value).unwrap(),
            vec![true; h * w],
            1,
        )
        .unwrap()
    }

    #[test]
    fn scaling_multiplies_labels_and_is_one_shot() {
        let spec = FlawSpec::new(FlawLayer::Bot, 0.4826, false).unwrap();
        let mut ds = generate_synthetic::<f64>(&[spec], 2, 16, 0.0, 1)
            .unwrap()
            .to_dataset()
            .unwrap();
        scale_labels(&mut ds, 10.0).unwrap();
        let d = ds.signals()[0].depth_labels.as_ref().unwrap();
        assert!((d.data()[0] - 4.826).abs() < 1e-12);
        assert_eq!(ds.scale_factor(), 10.0);
        assert_eq!(
            scale_labels(&mut ds, 10.0).unwrap_err().category(),
            "state"
        );
    }

    #[test]
    fn thickness_scaling_hand_value() {
        let sig = Signal::new(
            Tensor::new(&[1, 8], 0.0).unwrap(),
            None,
            Some(Tensor::from_vec(&[1], vec![0.05]).unwrap()),
        )
        .unwrap();
        let mut ds = Dataset::new(vec![sig], 0).unwrap();
        scale_labels(&mut ds, 1000.0).unwrap();
        assert_eq!(
            ds.signals()[0].depth_labels.as_ref().unwrap().data(),
            &[50.0]
        );
    }

    #[test]
    fn unit_factor_is_identity_and_inverse_recovers() {
        let spec = FlawSpec::new(FlawLayer::Bot, 0.1545, false).unwrap();
        let make = || {
            generate_synthetic::<f64>(&[spec], 2, 16, 0.0, 1)
                .unwrap()
                .to_dataset()
                .unwrap()
        };
        let mut unit = make();
        scale_labels(&mut unit, 1.0).unwrap();
        assert_eq!(
            unit.signals()[0].depth_labels.as_ref().unwrap().data(),
            make().signals()[0].depth_labels.as_ref().unwrap().data()
        );

        let mut scaled = make();
        scale_labels(&mut scaled, 10.0).unwrap();
        let back = scaled.signals()[0]
            .depth_labels
            .as_ref()
            .unwrap()
            .scale(1.0 / scaled.scale_factor());
        for (a, b) in back
            .data()
            .iter()
            .zip(make().signals()[0].depth_labels.as_ref().unwrap().data())
        {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn all_below_threshold_clears_everything() {
        let grid = uniform_grid(5, 4, 0.03);
        let out = remove_rivets(&grid, 0.05, 12).unwrap();
        assert!(out.mask().iter().all(|&m| !m));
    }

    #[test]
    fn nothing_below_threshold_changes_nothing() {
        let grid = uniform_grid(5, 4, 0.2);
        let out = remove_rivets(&grid, 0.05, 12).unwrap();
        assert!(out.mask().iter().all(|&m| m));
    }

    #[test]
    fn single_low_pixel_clears_a_chebyshev_ball() {
        let mut grid = uniform_grid(20, 20, 0.2);
        // Rebuild with one low pixel at (10, 10).
        let mut truth = grid.truth_map().clone();
        truth.data_mut()[10 * 20 + 10] = 0.01;
        grid = ScanGrid::new(
            20,
            20,
            grid.signals().to_vec(),
            truth,
            vec![true; 400],
            1,
        )
        .unwrap();
        let out = remove_rivets(&grid, 0.05, 12).unwrap();
        for r in 0..20usize {
            for c in 0..20usize {
                let dist = (r as isize - 10).abs().max((c as isize - 10).abs()) as usize;
                let expect_cleared = dist <= 6;
                assert_eq!(
                    !out.masked(r, c),
                    expect_cleared,
                    "pixel ({r},{c}) at distance {dist}"
                );
            }
        }
    }

    #[test]
    fn zero_dilation_is_a_config_error() {
        let grid = uniform_grid(3, 3, 0.2);
        assert_eq!(
            remove_rivets(&grid, 0.05, 0).unwrap_err().category(),
            "config"
        );
    }

    #[test]
    fn rivet_removal_matches_brute_force_oracle() {
        // Independent oracle: a pixel survives iff no sub-threshold pixel
        // exists anywhere within the Chebyshev radius.
        let mut rng = crate::init::stream_rng(77, 0);
        for case in 0..20 {
            let (h, w) = (20, 20);
            let truth: Vec<f64> = (0..h * w)
                .map(|_| if rng.gen_range(0..10) == 0 { 0.01 } else { 0.2 })
                .collect();
            let signals = (0..h * w)
                .map(|_| Signal::new(Tensor::new(&[1, 8], 0.0).unwrap(), Some(0), None).unwrap())
                .collect();
            let grid = ScanGrid::new(
                h,
                w,
                signals,
                Tensor::from_vec(&[h, w], truth.clone()).unwrap(),
                vec![true; h * w],
                1,
            )
            .unwrap();
            let (threshold, dilation) = (0.05, 1 + case % 13);
            let out = remove_rivets(&grid, threshold, dilation).unwrap();
            let radius = (dilation / 2) as isize;
            for r in 0..h as isize {
                for c in 0..w as isize {
                    let mut near_low = false;
                    for rr in 0..h as isize {
                        for cc in 0..w as isize {
                            if (rr - r).abs().max((cc - c).abs()) <= radius
                                && truth[(rr * w as isize + cc) as usize] < threshold
                            {
                                near_low = true;
                            }
                        }
                    }
                    assert_eq!(
                        out.masked(r as usize, c as usize),
                        !near_low,
                        "case {case} pixel ({r},{c})"
                    );
                }
            }
        }
    }

    #[test]
    fn split_is_even_disjoint_and_exhaustive() {
        let grid: ScanGrid<f64> =
            generate_synthetic(&specimen_a_specs(false), 10, 16, 0.01, 3).unwrap();
        let (train, test) = split_specimen_a(&grid, 42).unwrap();
        assert_eq!(train.len(), 50);
        assert_eq!(test.len(), 50);
        for class in 0..10 {
            let count = |ds: &Dataset<f64>| {
                ds.signals()
                    .iter()
                    .filter(|s| s.class_label == Some(class))
                    .count()
            };
            assert_eq!(count(&train), 5);
            assert_eq!(count(&test), 5);
        }
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let grid: ScanGrid<f64> =
            generate_synthetic(&specimen_a_specs(false), 4, 16, 0.01, 3).unwrap();
        let (a_train, _) = split_specimen_a(&grid, 7).unwrap();
        let (b_train, _) = split_specimen_a(&grid, 7).unwrap();
        for (a, b) in a_train.signals().iter().zip(b_train.signals()) {
            assert_eq!(a.values, b.values);
        }
        let (c_train, _) = split_specimen_a(&grid, 8).unwrap();
        let same = a_train
            .signals()
            .iter()
            .zip(c_train.signals())
            .all(|(a, b)| a.values == b.values);
        assert!(!same);
    }

    #[test]
    fn odd_class_size_is_a_split_error() {
        let spec = FlawSpec::new(FlawLayer::Bot, 0.1, false).unwrap();
        let grid: ScanGrid<f64> = generate_synthetic(&[spec], 5, 16, 0.0, 1).unwrap();
        assert_eq!(
            split_specimen_a(&grid, 1).unwrap_err().category(),
            "split"
        );
    }
}
