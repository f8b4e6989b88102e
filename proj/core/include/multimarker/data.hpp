#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

namespace multimarker {

/// An intervention-study (or biomarker-only) dataset.
///
/// Y holds nonnegative biomarker measurements, one row per observation and
/// one column per biomarker. `dose` carries the consumed quantity in grams
/// for intervention data and is absent for biomarker-only data. `levels` is
/// the strictly increasing vector of food quantities used in the study.
struct Dataset {
  Eigen::MatrixXd Y;
  std::optional<Eigen::VectorXd> dose;
  Eigen::VectorXd levels;

  Eigen::Index n() const { return Y.rows(); }
  Eigen::Index P() const { return Y.cols(); }
  Eigen::Index D() const { return levels.size(); }

  bool has_dose() const { return dose.has_value(); }

  /// 0-based index of dose[i] inside levels. Requires doses.
  Eigen::Index level_index(Eigen::Index i) const;
};

/// Checks every dataset invariant, returning the dataset unchanged on
/// success. Violations raise DataError naming the offending row/column.
Dataset validate_dataset(Dataset raw);

/// Per-column affine map fitted on training data: standardize, then shift by
/// twice the magnitude of the most negative standardized value so all scaled
/// measurements stay positive. The same transform must be replayed on any
/// data predicted against a chain fitted on scaled data.
struct ScalingTransform {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::VectorXd shift;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& Y) const;
};

/// Fits the scaling transform; throws DataError on constant columns.
ScalingTransform fit_biomarker_scaling(const Eigen::MatrixXd& Y);

/// Convenience: fit + apply in one step.
Eigen::MatrixXd scale_biomarkers(const Eigen::MatrixXd& Y);

/// Order-independent digest of the dataset (rows are canonicalized, sorted
/// and hashed) so chain/dataset pairing is checkable at predict time.
std::string dataset_fingerprint(const Dataset& data);

/// Reads a headered CSV `y1,..,yP[,dose]`. When the file has no dose column
/// the food-quantity levels must be supplied.
Dataset read_dataset_csv(const std::string& path,
                         std::optional<Eigen::VectorXd> levels = std::nullopt);

void write_dataset_csv(const std::string& path, const Dataset& data);

/// Shortest round-trip decimal rendering used by every CSV writer; keeps
/// outputs byte-identical across runs.
std::string format_double(double x);

}  // namespace multimarker
