use crate::raster::Grid;
use crate::{Error, Result};

/// Integer confusion matrix, rows = truth, columns = prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n: n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_counts(n_classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != n_classes * n_classes {
            return Err(Error::shape(format!(
                "{} counts for {n_classes} classes",
                counts.len()
            )));
        }
        Ok(Self { n: n_classes, counts })
    }

    pub fn n_classes(&self) -> usize {
        self.n
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.n + pred]
    }

    pub fn add(&mut self, truth: usize, pred: usize) {
        self.counts[truth * self.n + pred] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Pixels with nodata in either grid are skipped.
    pub fn from_grids(pred: &Grid, truth: &Grid, n_classes: usize) -> Result<Self> {
        if (pred.width(), pred.height()) != (truth.width(), truth.height()) {
            return Err(Error::shape(format!(
                "prediction is {}x{}, truth is {}x{}",
                pred.width(),
                pred.height(),
                truth.width(),
                truth.height()
            )));
        }
        let mut cm = Self::new(n_classes);
        for i in 0..pred.len() {
            let (Some(p), Some(t)) = (pred.class_at(i), truth.class_at(i)) else {
                continue;
            };
            let (p, t) = (p as usize, t as usize);
            if p >= n_classes || t >= n_classes {
                return Err(Error::param(format!(
                    "class id {} at pixel {i} is not below {n_classes}",
                    p.max(t)
                )));
            }
            cm.add(t, p);
        }
        Ok(cm)
    }

    pub fn scores(&self) -> SegmentationResult {
        let mut per_class = Vec::with_capacity(self.n);
        let mut correct = 0;
        for k in 0..self.n {
            let tp = self.get(k, k);
            correct += tp;
            let fp: u64 = (0..self.n).filter(|&t| t != k).map(|t| self.get(t, k)).sum();
            let fn_: u64 = (0..self.n).filter(|&p| p != k).map(|p| self.get(k, p)).sum();
            let union = tp + fp + fn_;
            per_class.push(if union == 0 {
                ClassScore { iou: 1.0, dice: 1.0, absent: true }
            } else {
                ClassScore {
                    iou: tp as f64 / union as f64,
                    dice: 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64,
                    absent: false,
                }
            });
        }
        let total = self.total();
        SegmentationResult {
            per_class,
            overall_accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
            pixels: total,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScore {
    pub iou: f64,
    pub dice: f64,
    /// Class appears in neither prediction nor truth; scores are 1 by convention.
    pub absent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub per_class: Vec<ClassScore>,
    pub overall_accuracy: f64,
    pub pixels: u64,
}

impl SegmentationResult {
    pub fn n_classes(&self) -> usize {
        self.per_class.len()
    }

    fn present_mean(&self, f: impl Fn(&ClassScore) -> f64) -> f64 {
        let present: Vec<f64> = self.per_class.iter().filter(|c| !c.absent).map(f).collect();
        if present.is_empty() {
            1.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        }
    }

    /// Mean IoU over classes that occur in prediction or truth.
    pub fn mean_iou(&self) -> f64 {
        self.present_mean(|c| c.iou)
    }

    pub fn mean_dice(&self) -> f64 {
        self.present_mean(|c| c.dice)
    }

    pub fn report(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("n_classes".to_string(), self.n_classes().to_string()),
            ("pixels".to_string(), self.pixels.to_string()),
            ("overall_accuracy".to_string(), self.overall_accuracy.to_string()),
            ("mean_iou".to_string(), self.mean_iou().to_string()),
            ("mean_dice".to_string(), self.mean_dice().to_string()),
        ];
        for (k, c) in self.per_class.iter().enumerate() {
            out.push((format!("iou_class{k}"), c.iou.to_string()));
            out.push((format!("dice_class{k}"), c.dice.to_string()));
            out.push((format!("absent_class{k}"), c.absent.to_string()));
        }
        out
    }
}

pub fn segmentation_metrics(pred: &Grid, truth: &Grid, n_classes: usize) -> Result<SegmentationResult> {
    Ok(ConfusionMatrix::from_grids(pred, truth, n_classes)?.scores())
}
