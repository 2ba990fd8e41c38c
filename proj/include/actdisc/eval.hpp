#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

namespace actdisc {

// Minimum-cost perfect matching on a square cost matrix (Hungarian method).
// Returns the column assigned to each row.
std::vector<int> hungarian_min_cost(const Eigen::MatrixXd& cost);

struct AccuracyResult {
  double accuracy = 0.0;
  std::map<int, std::string> mapping;  // cluster id -> class label
};

// Best one-to-one cluster-to-class mapping by matched sample count. Unequal
// cluster and class counts are padded with zero-weight dummies.
AccuracyResult clustering_accuracy(const std::vector<int>& pred, const std::vector<std::string>& truth);

struct ConfusionMatrix {
  std::vector<std::string> classes;  // sorted
  // Rows = truth, columns = mapped prediction. A trailing "(unmapped)" column
  // appears only when some prediction has no mapped class.
  std::vector<std::string> columns;
  std::vector<std::vector<long>> counts;

  long total() const;
};

struct MetricsReport {
  double accuracy = 0.0;
  std::map<std::string, double> per_class_fscore;
  double macro_fscore = 0.0;
  std::map<int, std::string> mapping;
};

struct Evaluation {
  ConfusionMatrix confusion;
  MetricsReport metrics;
};

Evaluation confusion_and_fscores(const std::vector<int>& pred, const std::vector<std::string>& truth,
                                 const std::map<int, std::string>& mapping);

// clustering_accuracy followed by confusion_and_fscores.
Evaluation evaluate(const std::vector<int>& pred, const std::vector<std::string>& truth);

nlohmann::json to_json(const MetricsReport& m);
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);

struct KruskalWallis {
  double h = 0.0;
  double p = 1.0;
  int dof = 0;
};

// Tie-corrected H with a chi-square (groups - 1 dof) p-value.
KruskalWallis kruskal_wallis(const std::vector<std::vector<double>>& groups);

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);
// P(X > x) for X ~ chi-square with `dof` degrees of freedom.
double chi_square_sf(double x, double dof);

}  // namespace actdisc
