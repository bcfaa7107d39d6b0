//! Loss, optimizer, data splitting, the training loop and evaluation
//! metrics.

mod adam;
mod fit;
mod metrics;
mod report;
mod split;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use fit::{
    cross_entropy, evaluate, predict, train, train_step, EpochRecord, Evaluation, Sample, TrainConfig,
    TrainOutcome,
};
pub use metrics::{auc, compute_metrics, MetricsReport};
pub use report::{line_chart_svg, write_history_csv, write_line_chart, write_points_csv};
pub use split::{stratified_split, Split};
