#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "actdisc/error.hpp"
#include "actdisc/reduce.hpp"

using namespace actdisc;

namespace {

Eigen::MatrixXd gaussian_rows(int n, int dim, std::uint64_t seed, const Eigen::VectorXd& scale) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(n, dim);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) m(i, d) = scale(d) * z(g);
  }
  return m;
}

// 100 rows of 181 correlated features: a few latent factors plus noise.
Eigen::MatrixXd correlated_rows(std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd latent(100, 6), mix(6, 181), noise(100, 181);
  for (Eigen::Index i = 0; i < latent.size(); ++i) latent(i) = z(g) * (1.0 + i % 6);
  for (Eigen::Index i = 0; i < mix.size(); ++i) mix(i) = z(g);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = 0.05 * z(g);
  return latent * mix + noise;
}

std::vector<std::optional<std::string>> labels_of(const std::string& s) {
  std::vector<std::optional<std::string>> out;
  for (char c : s) out.emplace_back(std::string(1, c));
  return out;
}

}  // namespace

TEST_CASE("pca on rank-one data") {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd rows(50, 2);
  for (int i = 0; i < 50; ++i) {
    const double t = u(g);
    rows.row(i) << t + 1e-12 * u(g), t + 1e-12 * u(g);
  }
  const auto m = fit_pca(rows, 0.95);
  REQUIRE(m.retained == 1);
  CHECK(std::abs(m.components(0, 0) - std::sqrt(0.5)) <= 1e-9);
  CHECK(std::abs(m.components(1, 0) - std::sqrt(0.5)) <= 1e-9);
}

TEST_CASE("pca on isotropic data retains everything at threshold 1") {
  const auto rows = gaussian_rows(400, 2, 2, Eigen::Vector2d(1.0, 1.0));
  const auto m = fit_pca(rows, 1.0);
  CHECK(m.retained == 2);
  CHECK(m.retained_variance_ratio() == 1.0);
}

TEST_CASE("pca invariants on a 181-dimensional fixture") {
  const auto rows = correlated_rows(3);
  for (double threshold : {0.5, 0.8, 0.9, 0.95, 0.99, 1.0}) {
    CAPTURE(threshold);
    const auto m = fit_pca(rows, threshold);
    const auto k = m.retained;
    CHECK(m.retained_variance_ratio() >= threshold);
    // Minimal prefix.
    if (k > 1) {
      double prefix = 0.0;
      for (int i = 0; i < k - 1; ++i) prefix += m.explained_variance_ratio[i];
      CHECK(prefix < threshold);
    }
    CHECK((m.components.transpose() * m.components - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-9);
    for (std::size_t i = 1; i < m.explained_variance_ratio.size(); ++i) {
      CHECK(m.explained_variance_ratio[i] <= m.explained_variance_ratio[i - 1]);
      CHECK(m.explained_variance_ratio[i] > 0.0);
    }
    for (int c = 0; c < k; ++c) {
      Eigen::Index arg = 0;
      m.components.col(c).cwiseAbs().maxCoeff(&arg);
      CHECK(m.components(arg, c) > 0.0);
    }
    // Reconstruction residual against the total variance computed directly.
    const Eigen::MatrixXd centred = rows.rowwise() - rows.colwise().mean();
    const double total = centred.squaredNorm() / (rows.rows() - 1);
    const Eigen::MatrixXd recon = pca_transform_rows(m, rows) * m.components.transpose();
    const double residual = (centred - recon).squaredNorm() / (rows.rows() - 1);
    CHECK(residual <= (1.0 - threshold) * total * (1.0 + 1e-6) + 1e-6 * total);
  }
}

TEST_CASE("pca agrees with a covariance eigendecomposition") {
  Eigen::VectorXd scale(5);
  scale << 5, 3, 2, 1, 0.5;
  const auto rows = gaussian_rows(300, 5, 4, scale);
  const auto m = fit_pca(rows, 1.0);
  const Eigen::MatrixXd centred = rows.rowwise() - rows.colwise().mean();
  const Eigen::MatrixXd cov = centred.transpose() * centred / (rows.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const double total = eig.eigenvalues().sum();
  for (int c = 0; c < 5; ++c) {
    const Eigen::VectorXd v = eig.eigenvectors().col(4 - c);
    CHECK(std::abs(std::abs(v.dot(m.components.col(c))) - 1.0) <= 1e-9);
    CHECK(std::abs(m.explained_variance_ratio[c] - eig.eigenvalues()(4 - c) / total) <= 1e-12);
  }
}

TEST_CASE("pca transform") {
  const auto rows = correlated_rows(5);
  const auto m = fit_pca(rows, 0.9);
  CHECK(pca_transform(m, m.mean).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd e1 = pca_transform(m, m.mean + m.components.col(0));
  CHECK(std::abs(e1(0) - 1.0) <= 1e-12);
  CHECK(e1.tail(e1.size() - 1).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::VectorXd v = rows.row(17).transpose();
  const auto t = pca_transform(m, v);
  for (int c = 0; c < m.retained; ++c) {
    double dot = 0.0;
    for (Eigen::Index d = 0; d < v.size(); ++d) dot += (v(d) - m.mean(d)) * m.components(d, c);
    CHECK(std::abs(t(c) - dot) <= 1e-10);
  }
  CHECK((pca_transform_rows(m, rows).row(17).transpose() - t).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(pca_transform(m, Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("full retention preserves distances") {
  Eigen::VectorXd scale(4);
  scale << 1, 2, 3, 4;
  const auto rows = gaussian_rows(40, 4, 6, scale);
  const auto m = fit_pca(rows, 1.0);
  REQUIRE(m.retained == 4);
  const auto t = pca_transform_rows(m, rows);
  for (int i = 0; i < 40; i += 3) {
    for (int j = i + 1; j < 40; j += 5) {
      const double a = (rows.row(i) - rows.row(j)).norm();
      const double b = (t.row(i) - t.row(j)).norm();
      CHECK(std::abs(a - b) <= 1e-6 * a);
    }
  }
}

TEST_CASE("pca errors and serialization") {
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Ones(1, 3), 0.9), Error);
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Ones(4, 3), 0.9), Error);
  CHECK_THROWS_AS(fit_pca(correlated_rows(1), 0.0), Error);
  CHECK_THROWS_AS(fit_pca(correlated_rows(1), 1.5), Error);

  const auto m = fit_pca(correlated_rows(7), 0.9);
  const auto back = pca_from_json(nlohmann::json::parse(to_json(m).dump()));
  CHECK(back.retained == m.retained);
  CHECK(back.mean == m.mean);
  CHECK(back.components == m.components);
  CHECK(back.explained_variance_ratio == m.explained_variance_ratio);
}

TEST_CASE("window sampling") {
  const auto rows_of = [](int n) {
    Eigen::MatrixXd m(n, 2);
    for (int i = 0; i < n; ++i) m.row(i) << i, -i;
    return m;
  };
  SUBCASE("29 keyframes make two windows") {
    const auto w = window_samples(rows_of(29), {}, 15);
    REQUIRE(w.size() == 2);
    CHECK(w[0].start_keyframe == 0);
    CHECK(w[1].start_keyframe == 14);
    CHECK(w[1].values.size() == 30);
    CHECK(w[1].values(0) == 14.0);
    CHECK(w[1].values(28) == 28.0);
    CHECK_FALSE(w[0].majority_label);
  }
  SUBCASE("30 keyframes drop the tail") {
    const auto w = window_samples(rows_of(30), {}, 15);
    REQUIRE(w.size() == 2);
    CHECK(w[1].values(28) == 28.0);
  }
  SUBCASE("count formula and single shared keyframe") {
    for (int n = 15; n < 80; ++n) {
      for (int len : {2, 5, 15}) {
        const auto w = window_samples(rows_of(n), {}, len);
        CHECK(static_cast<int>(w.size()) == (n - 1) / (len - 1));
        for (std::size_t i = 1; i < w.size(); ++i) {
          CHECK(w[i].start_keyframe == w[i - 1].start_keyframe + static_cast<std::size_t>(len) - 1);
        }
      }
    }
  }
  SUBCASE("majority label and purity") {
    const auto w = window_samples(rows_of(15), labels_of("AAAAAAAAABBBBBB"), 15);
    REQUIRE(w.size() == 1);
    CHECK(w[0].majority_label == "A");
    CHECK(w[0].label_purity == doctest::Approx(9.0 / 15.0));

    const auto tie = window_samples(rows_of(4), labels_of("BAAB"), 4);
    CHECK(tie[0].majority_label == "B");  // earliest in the window wins a tie
    CHECK(tie[0].label_purity == 0.5);
  }
  CHECK_THROWS_AS(window_samples(rows_of(10), {}, 15), Error);
  CHECK_THROWS_AS(window_samples(rows_of(10), {}, 1), Error);
  CHECK_THROWS_AS(window_samples(rows_of(10), labels_of("AB"), 5), Error);

  std::ostringstream os;
  write_samples_csv(os, window_samples(rows_of(3), labels_of("AAB"), 2));
  CHECK(os.str() == "start_keyframe,majority_label,label_purity,v0,v1,v2,v3\n0,A,1,0,0,1,-1\n1,A,0.5,1,-1,2,-2\n");
}
