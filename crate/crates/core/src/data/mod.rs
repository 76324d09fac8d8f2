//! Datasets: inspection signals, scan grids, label preprocessing, the
//! synthetic signal generator and the dataset CSV format.

mod csv;
mod generate;
mod preprocess;

pub use csv::{load_csv, save_csv, to_csv_string};
pub use generate::{
    generate_synthetic, generate_synthetic_dataset, lap_joint_grid, response_curve,
    specimen_a_specs, AIRGAP_ATTENUATION, AIRGAP_DELAY_STEPS, AMPLITUDE_GAIN_PER_MM,
    FAST_TAU_BASE, FAST_TAU_SHRINK_PER_MM, SLOW_TAU, TOB_ATTENUATION,
};
pub use preprocess::{remove_rivets, scale_labels, split_specimen_a};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Which sheet of a two-layer lap structure carries the flaw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlawLayer {
    /// Bottom of the top sheet.
    Bot,
    /// Top of the bottom sheet.
    Tob,
    /// No material loss.
    None,
}

/// One flaw/condition class for the signal generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlawSpec {
    pub layer: FlawLayer,
    pub depth_mm: f64,
    pub airgap: bool,
}

impl FlawSpec {
    pub fn new(layer: FlawLayer, depth_mm: f64, airgap: bool) -> Result<Self> {
        if depth_mm < 0.0 || !depth_mm.is_finite() {
            return Err(Error::Config(format!(
                "flaw depth must be a nonnegative finite value, got {depth_mm}"
            )));
        }
        if layer == FlawLayer::None && depth_mm != 0.0 {
            return Err(Error::Config(format!(
                "loss-free class cannot carry depth {depth_mm}"
            )));
        }
        Ok(FlawSpec {
            layer,
            depth_mm,
            airgap,
        })
    }
}

/// One inspection point: a `[1, T]` time series plus optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    pub values: Tensor<T>,
    pub class_label: Option<usize>,
    /// Depth/thickness regression targets; length 1 or 2.
    pub depth_labels: Option<Tensor<T>>,
    /// True once the depth labels have been multiplied by a scale factor.
    pub scaled: bool,
}

impl<T: Scalar> Signal<T> {
    pub fn new(
        values: Tensor<T>,
        class_label: Option<usize>,
        depth_labels: Option<Tensor<T>>,
    ) -> Result<Self> {
        if values.rank() != 2 || values.shape()[0] != 1 {
            return Err(Error::Shape(format!(
                "signal values must be [1, T], got {:?}",
                values.shape()
            )));
        }
        if !values.all_finite() {
            return Err(Error::Data("signal contains non-finite values".to_string()));
        }
        if let Some(d) = &depth_labels {
            if d.rank() != 1 || d.len() > 2 {
                return Err(Error::Shape(format!(
                    "depth labels must be rank 1 with 1 or 2 entries, got {:?}",
                    d.shape()
                )));
            }
        }
        Ok(Signal {
            values,
            class_label,
            depth_labels,
            scaled: false,
        })
    }

    pub fn len(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// 2D grid of signals with a per-pixel ground-truth map and usability mask,
/// mimicking a raster scan of a specimen. Immutable after construction;
/// preprocessing returns new grids.
#[derive(Debug, Clone)]
pub struct ScanGrid<T> {
    height: usize,
    width: usize,
    signals: Vec<Signal<T>>,
    truth_map: Tensor<T>,
    mask: Vec<bool>,
    num_classes: usize,
}

impl<T: Scalar> ScanGrid<T> {
    pub fn new(
        height: usize,
        width: usize,
        signals: Vec<Signal<T>>,
        truth_map: Tensor<T>,
        mask: Vec<bool>,
        num_classes: usize,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Shape("grid dimensions must be positive".to_string()));
        }
        let n = height * width;
        if signals.len() != n || mask.len() != n {
            return Err(Error::Shape(format!(
                "grid {}x{} needs {} pixels, got {} signals and {} mask entries",
                height,
                width,
                n,
                signals.len(),
                mask.len()
            )));
        }
        if truth_map.shape() != [height, width] {
            return Err(Error::Shape(format!(
                "truth map {:?} does not match grid {}x{}",
                truth_map.shape(),
                height,
                width
            )));
        }
        let t_len = signals[0].len();
        if signals.iter().any(|s| s.len() != t_len) {
            return Err(Error::Shape(
                "signals in a grid must share one length".to_string(),
            ));
        }
        if let Some(s) = signals.iter().find(|s| {
            s.class_label
                .map(|c| num_classes == 0 || c >= num_classes)
                .unwrap_or(false)
        }) {
            return Err(Error::Data(format!(
                "class label {:?} outside {} classes",
                s.class_label, num_classes
            )));
        }
        Ok(ScanGrid {
            height,
            width,
            signals,
            truth_map,
            mask,
            num_classes,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn signal(&self, row: usize, col: usize) -> &Signal<T> {
        &self.signals[row * self.width + col]
    }

    pub fn signals(&self) -> &[Signal<T>] {
        &self.signals
    }

    pub fn truth_map(&self) -> &Tensor<T> {
        &self.truth_map
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn masked(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.width + col]
    }

    pub(crate) fn with_mask(&self, mask: Vec<bool>) -> ScanGrid<T> {
        debug_assert_eq!(mask.len(), self.mask.len());
        ScanGrid {
            height: self.height,
            width: self.width,
            signals: self.signals.clone(),
            truth_map: self.truth_map.clone(),
            mask,
            num_classes: self.num_classes,
        }
    }

    /// Flattens the usable pixels into a training/evaluation dataset.
    pub fn to_dataset(&self) -> Result<Dataset<T>> {
        let signals: Vec<Signal<T>> = self
            .signals
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(s, _)| s.clone())
            .collect();
        if signals.is_empty() {
            return Err(Error::Data("grid has no usable pixels".to_string()));
        }
        Dataset::new(signals, self.num_classes)
    }
}

/// Flat collection of signals ready for training or evaluation.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    signals: Vec<Signal<T>>,
    num_classes: usize,
    signal_len: usize,
    scale_factor: f64,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(signals: Vec<Signal<T>>, num_classes: usize) -> Result<Self> {
        if signals.is_empty() {
            return Err(Error::Data("dataset has no signals".to_string()));
        }
        let signal_len = signals[0].len();
        if signals.iter().any(|s| s.len() != signal_len) {
            return Err(Error::Shape(
                "signals in a dataset must share one length".to_string(),
            ));
        }
        if let Some(s) = signals
            .iter()
            .find(|s| s.class_label.map(|c| c >= num_classes.max(1)).unwrap_or(false))
        {
            return Err(Error::Data(format!(
                "class label {:?} outside {} classes",
                s.class_label, num_classes
            )));
        }
        Ok(Dataset {
            signals,
            num_classes,
            signal_len,
            scale_factor: 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn signals(&self) -> &[Signal<T>] {
        &self.signals
    }

    pub(crate) fn signals_mut(&mut self) -> &mut [Signal<T>] {
        &mut self.signals
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    /// Factor the depth labels were multiplied by (1.0 = raw units).
    pub fn scale_factor(&self) -> f64 {
        self.scale_factor
    }

    pub(crate) fn set_scale_factor(&mut self, f: f64) {
        self.scale_factor = f;
    }

    /// Length of the regression label vector, if labels are present.
    pub fn regression_outputs(&self) -> Option<usize> {
        self.signals
            .iter()
            .find_map(|s| s.depth_labels.as_ref().map(|d| d.len()))
    }
}
