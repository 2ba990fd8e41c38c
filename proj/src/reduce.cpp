#include "actdisc/reduce.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <nlohmann/json.hpp>
#include <ostream>

#include "actdisc/error.hpp"

namespace actdisc {

namespace {

// 1 minus the variance share of components [first, end), summed smallest
// first. Keeping everything gives exactly 1.
double share_up_to(const std::vector<double>& ratios, std::size_t first) {
  double dropped = 0.0;
  for (std::size_t i = ratios.size(); i > first; --i) dropped += ratios[i - 1];
  return 1.0 - dropped;
}

}  // namespace

double PcaModel::retained_variance_ratio() const {
  return share_up_to(explained_variance_ratio, static_cast<std::size_t>(retained));
}

PcaModel fit_pca(const Eigen::MatrixXd& rows, double variance_threshold) {
  if (rows.rows() < 2) throw Error("PCA needs at least 2 rows");
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0)) {
    throw Error("PCA variance threshold must lie in (0, 1]");
  }
  PcaModel model;
  model.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centred = rows.rowwise() - model.mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinV);
  const Eigen::VectorXd var = svd.singularValues().cwiseAbs2() / static_cast<double>(rows.rows() - 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < var.size(); ++i) total += var(i);
  if (!(total > 0.0)) throw Error("PCA input has zero total variance");

  for (Eigen::Index i = 0; i < var.size() && var(i) > 0.0; ++i) {
    model.explained_variance_ratio.push_back(var(i) / total);
  }
  // Select with the same quantity the model reports, so the threshold holds
  // on retained_variance_ratio() without round-off surprises.
  const auto n = model.explained_variance_ratio.size();
  std::size_t keep = 1;
  while (keep < n && share_up_to(model.explained_variance_ratio, keep) < variance_threshold) ++keep;
  const int retained = static_cast<int>(keep);
  model.retained = retained;

  model.components = svd.matrixV().leftCols(retained);
  for (int c = 0; c < retained; ++c) {
    Eigen::Index arg = 0;
    model.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (model.components(arg, c) < 0.0) model.components.col(c) *= -1.0;
  }
  return model;
}

Eigen::VectorXd pca_transform(const PcaModel& model, const Eigen::VectorXd& v) {
  if (v.size() != model.input_dim()) throw Error("PCA input dimension mismatch");
  return model.components.transpose() * (v - model.mean);
}

Eigen::MatrixXd pca_transform_rows(const PcaModel& model, const Eigen::MatrixXd& rows) {
  if (rows.cols() != model.input_dim()) throw Error("PCA input dimension mismatch");
  return (rows.rowwise() - model.mean.transpose()) * model.components;
}

nlohmann::json to_json(const PcaModel& model) {
  nlohmann::json comps = nlohmann::json::array();
  for (Eigen::Index c = 0; c < model.components.cols(); ++c) {
    const Eigen::VectorXd col = model.components.col(c);
    comps.push_back(std::vector<double>(col.data(), col.data() + col.size()));
  }
  return {{"mean", std::vector<double>(model.mean.data(), model.mean.data() + model.mean.size())},
          {"components", std::move(comps)},
          {"explained_variance_ratio", model.explained_variance_ratio},
          {"retained", model.retained}};
}

PcaModel pca_from_json(const nlohmann::json& j) {
  PcaModel m;
  const auto mean = j.at("mean").get<std::vector<double>>();
  m.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  m.explained_variance_ratio = j.at("explained_variance_ratio").get<std::vector<double>>();
  m.retained = j.at("retained").get<int>();
  const auto& comps = j.at("components");
  m.components.resize(m.mean.size(), static_cast<Eigen::Index>(comps.size()));
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const auto col = comps[c].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(col.size()) != m.mean.size()) throw Error("PCA component length mismatch");
    m.components.col(static_cast<Eigen::Index>(c)) =
        Eigen::Map<const Eigen::VectorXd>(col.data(), m.mean.size());
  }
  return m;
}

std::vector<WindowSample> window_samples(const Eigen::MatrixXd& reduced,
                                         const std::vector<std::optional<std::string>>& labels,
                                         int window_len) {
  if (window_len < 2) throw Error("window length must be >= 2");
  const auto n = reduced.rows();
  if (n < window_len) {
    throw Error("stream of " + std::to_string(n) + " keyframes is shorter than the window length " +
                std::to_string(window_len));
  }
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != n) {
    throw Error("label count does not match the keyframe count");
  }
  const Eigen::Index dim = reduced.cols();
  const Eigen::Index stride = window_len - 1;
  std::vector<WindowSample> out;
  for (Eigen::Index start = 0; start + window_len <= n; start += stride) {
    WindowSample w;
    w.start_keyframe = static_cast<std::size_t>(start);
    w.values.resize(window_len * dim);
    for (Eigen::Index r = 0; r < window_len; ++r) {
      w.values.segment(r * dim, dim) = reduced.row(start + r).transpose();
    }
    if (!labels.empty()) {
      std::vector<std::pair<std::string, int>> counts;  // first-occurrence order
      for (Eigen::Index r = start; r < start + window_len; ++r) {
        if (!labels[r]) continue;
        auto it = std::find_if(counts.begin(), counts.end(),
                               [&](const auto& c) { return c.first == *labels[r]; });
        if (it == counts.end()) {
          counts.emplace_back(*labels[r], 1);
        } else {
          ++it->second;
        }
      }
      const std::pair<std::string, int>* best = nullptr;
      for (const auto& c : counts) {
        if (!best || c.second > best->second) best = &c;
      }
      if (best) {
        w.majority_label = best->first;
        w.label_purity = static_cast<double>(best->second) / window_len;
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

void write_samples_csv(std::ostream& out, const std::vector<WindowSample>& samples) {
  const auto old = out.precision(17);
  out << "start_keyframe,majority_label,label_purity";
  const Eigen::Index dim = samples.empty() ? 0 : samples.front().values.size();
  for (Eigen::Index d = 0; d < dim; ++d) out << ",v" << d;
  out << '\n';
  for (const auto& s : samples) {
    out << s.start_keyframe << ',' << s.majority_label.value_or("") << ',' << s.label_purity;
    for (Eigen::Index d = 0; d < s.values.size(); ++d) out << ',' << s.values(d);
    out << '\n';
  }
  out.precision(old);
}

}  // namespace actdisc
