#include "actdisc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>
#include <set>

#include "actdisc/error.hpp"

namespace actdisc {

std::vector<int> hungarian_min_cost(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols()) throw Error("Hungarian method needs a square cost matrix");
  const auto n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials u (rows), v (columns); p[j] = row matched to column j; 1-based
  // with column 0 as the virtual start.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

namespace {

std::vector<std::string> sorted_classes(const std::vector<std::string>& truth) {
  std::set<std::string> s(truth.begin(), truth.end());
  return {s.begin(), s.end()};
}

std::vector<int> sorted_clusters(const std::vector<int>& pred) {
  std::set<int> s(pred.begin(), pred.end());
  return {s.begin(), s.end()};
}

}  // namespace

AccuracyResult clustering_accuracy(const std::vector<int>& pred, const std::vector<std::string>& truth) {
  if (pred.size() != truth.size()) throw Error("prediction and truth lengths differ");
  if (pred.empty()) throw Error("nothing to evaluate");
  const auto classes = sorted_classes(truth);
  const auto clusters = sorted_clusters(pred);
  const auto n = static_cast<Eigen::Index>(std::max(classes.size(), clusters.size()));
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);  // rows clusters, cols classes
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto r = std::lower_bound(clusters.begin(), clusters.end(), pred[i]) - clusters.begin();
    const auto c = std::lower_bound(classes.begin(), classes.end(), truth[i]) - classes.begin();
    counts(r, c) += 1.0;
  }
  const auto match = hungarian_min_cost(counts.maxCoeff() - counts.array());

  AccuracyResult out;
  double matched = 0.0;
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(clusters.size()); ++r) {
    const int c = match[r];
    if (c < static_cast<int>(classes.size())) {
      out.mapping[clusters[r]] = classes[c];
      matched += counts(r, c);
    }
  }
  out.accuracy = matched / static_cast<double>(pred.size());
  return out;
}

long ConfusionMatrix::total() const {
  long t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

Evaluation confusion_and_fscores(const std::vector<int>& pred, const std::vector<std::string>& truth,
                                 const std::map<int, std::string>& mapping) {
  if (pred.size() != truth.size()) throw Error("prediction and truth lengths differ");
  if (pred.empty()) throw Error("nothing to evaluate");
  Evaluation out;
  auto& cm = out.confusion;
  cm.classes = sorted_classes(truth);
  const auto class_index = [&](const std::string& label) -> long {
    const auto it = std::lower_bound(cm.classes.begin(), cm.classes.end(), label);
    return it != cm.classes.end() && *it == label ? it - cm.classes.begin() : -1;
  };
  std::set<std::string> targets;
  const std::set<int> present(pred.begin(), pred.end());
  for (const auto& [cluster, label] : mapping) {
    if (class_index(label) < 0) throw Error("mapping targets unknown class '" + label + "'");
    if (!targets.insert(label).second) throw Error("mapping is not one-to-one");
    if (!present.count(cluster)) throw Error("mapping names cluster " + std::to_string(cluster) + " absent from the predictions");
  }

  const auto n_classes = cm.classes.size();
  cm.columns = cm.classes;
  const bool unmapped = std::any_of(pred.begin(), pred.end(), [&](int c) { return !mapping.count(c); });
  if (unmapped) cm.columns.push_back("(unmapped)");
  cm.counts.assign(n_classes, std::vector<long>(cm.columns.size(), 0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto it = mapping.find(pred[i]);
    const auto col = it == mapping.end() ? static_cast<long>(n_classes) : class_index(it->second);
    ++cm.counts[class_index(truth[i])][col];
  }

  auto& m = out.metrics;
  m.mapping = mapping;
  long correct = 0;
  double f_sum = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const long tp = cm.counts[c][c];
    correct += tp;
    long true_count = 0;
    long predicted = 0;
    for (std::size_t k = 0; k < cm.columns.size(); ++k) true_count += cm.counts[c][k];
    for (std::size_t r = 0; r < n_classes; ++r) predicted += cm.counts[r][c];
    const double precision = predicted ? static_cast<double>(tp) / predicted : 0.0;
    const double recall = true_count ? static_cast<double>(tp) / true_count : 0.0;
    const double f = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    m.per_class_fscore[cm.classes[c]] = f;
    f_sum += f;
  }
  m.macro_fscore = f_sum / static_cast<double>(n_classes);
  m.accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
  return out;
}

Evaluation evaluate(const std::vector<int>& pred, const std::vector<std::string>& truth) {
  const auto acc = clustering_accuracy(pred, truth);
  return confusion_and_fscores(pred, truth, acc.mapping);
}

nlohmann::json to_json(const MetricsReport& m) {
  nlohmann::json mapping = nlohmann::json::object();
  for (const auto& [cluster, label] : m.mapping) mapping[std::to_string(cluster)] = label;
  return {{"accuracy", m.accuracy},
          {"macro_fscore", m.macro_fscore},
          {"per_class_fscore", m.per_class_fscore},
          {"mapping", mapping}};
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "truth\\predicted";
  for (const auto& c : cm.columns) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < cm.classes.size(); ++r) {
    out << cm.classes[r];
    for (long v : cm.counts[r]) out << ',' << v;
    out << '\n';
  }
}

KruskalWallis kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw Error("Kruskal-Wallis needs at least 2 groups");
  struct Obs {
    double value;
    std::size_t group;
  };
  std::vector<Obs> all;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw Error("Kruskal-Wallis group " + std::to_string(g) + " is empty");
    for (double v : groups[g]) all.push_back({v, g});
  }
  const auto n = static_cast<double>(all.size());
  if (all.size() < 3) throw Error("Kruskal-Wallis needs at least 3 observations");
  std::stable_sort(all.begin(), all.end(), [](const Obs& a, const Obs& b) { return a.value < b.value; });

  std::vector<double> rank_sum(groups.size(), 0.0);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j + 1 < all.size() && all[j + 1].value == all[i].value) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank_sum[all[k].group] += avg_rank;
    const auto t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  KruskalWallis out;
  out.dof = static_cast<int>(groups.size()) - 1;
  const double correction = 1.0 - tie_term / (n * n * n - n);
  if (correction <= 0.0) return out;  // every value identical
  double s = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    s += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
  }
  const double h = (12.0 / (n * (n + 1.0)) * s - 3.0 * (n + 1.0)) / correction;
  out.h = std::max(h, 0.0);
  out.p = chi_square_sf(out.h, out.dof);
  return out;
}

namespace {

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw Error("incomplete gamma needs a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw Error("incomplete gamma needs a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_fraction(a, x);
}

double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * x);
}

}  // namespace actdisc
