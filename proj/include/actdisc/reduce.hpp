#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace actdisc {

struct PcaModel {
  Eigen::VectorXd mean;
  // Retained principal axes as columns, ordered by decreasing variance.
  Eigen::MatrixXd components;
  // Ratio for every axis with non-zero variance (not only the retained ones).
  std::vector<double> explained_variance_ratio;
  int retained = 0;

  Eigen::Index input_dim() const { return mean.size(); }
  double retained_variance_ratio() const;
};

// Centres by column mean, computes the principal axes by SVD of the centred
// matrix and keeps the shortest prefix whose cumulative explained variance
// reaches `variance_threshold`. Each axis is signed so that its entry of
// largest magnitude is positive.
PcaModel fit_pca(const Eigen::MatrixXd& rows, double variance_threshold = 0.95);

Eigen::VectorXd pca_transform(const PcaModel& model, const Eigen::VectorXd& v);
Eigen::MatrixXd pca_transform_rows(const PcaModel& model, const Eigen::MatrixXd& rows);

nlohmann::json to_json(const PcaModel& model);
PcaModel pca_from_json(const nlohmann::json& j);

struct WindowSample {
  Eigen::VectorXd values;
  std::size_t start_keyframe = 0;
  std::optional<std::string> majority_label;
  double label_purity = 0.0;
};

// Windows of `window_len` consecutive rows; each window after the first
// starts on the last row of its predecessor. A short tail is dropped.
// `labels` is either empty or has one entry per row.
std::vector<WindowSample> window_samples(const Eigen::MatrixXd& reduced,
                                         const std::vector<std::optional<std::string>>& labels,
                                         int window_len = 15);

void write_samples_csv(std::ostream& out, const std::vector<WindowSample>& samples);

}  // namespace actdisc
