#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "actdisc/error.hpp"

namespace actdisc {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct Partition {
  Scalar sse{};
  std::vector<int> assignments;
};

// Nearest-centroid partition of the rows of `points` (ties go to the lower
// centroid index) and its sum of squared distances.
template <typename DerivedP, typename DerivedC>
Partition<typename DerivedP::Scalar> sse(const Eigen::MatrixBase<DerivedP>& points,
                                         const Eigen::MatrixBase<DerivedC>& centroids) {
  using Scalar = typename DerivedP::Scalar;
  if (points.rows() == 0) throw Error("empty point set");
  if (centroids.rows() == 0) throw Error("no centroids");
  if (points.cols() != centroids.cols()) throw Error("point and centroid dimensions differ");
  Partition<Scalar> out;
  out.assignments.resize(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    int arg = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const Scalar d = (points.row(i) - centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    out.assignments[static_cast<std::size_t>(i)] = arg;
    out.sse += best;
  }
  return out;
}

// Per-dimension extent of a point set.
struct DataBounds {
  Eigen::RowVectorXd min;
  Eigen::RowVectorXd max;
  Eigen::RowVectorXd span() const { return max - min; }
};

DataBounds data_bounds(const Eigen::MatrixXd& points);

struct HpgmkParams {
  int k = 2;
  int swarm_size = 20;
  int iterations = 50;       // t_max
  int mutation_trials = 10;  // T
  double w_max = 0.9;
  double w_min = 0.4;
  double c1_max = 2.5;
  double c1_min = 0.0;
  double c2_max = 2.5;
  double c2_min = 0.0;
  double h0 = 1.0;
  double h_floor = 1e-6;
  std::uint64_t seed = 0;
  bool refine = true;

  void validate() const;
};

nlohmann::json to_json(const HpgmkParams& p);
HpgmkParams params_from_json(const nlohmann::json& j, HpgmkParams defaults = {});

struct Coefficients {
  double w = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

// Linear schedules over t in [0, t_max): w and c1 fall from their maxima to
// their minima while c2 rises from its minimum to its maximum.
Coefficients schedule(int t, const HpgmkParams& params);

// Position, velocity and personal best are k x dim centroid matrices.
struct Particle {
  Eigen::MatrixXd position;
  Eigen::MatrixXd velocity;
  Eigen::MatrixXd pbest_position;
  double pbest_fitness = std::numeric_limits<double>::infinity();
  double fitness = std::numeric_limits<double>::infinity();
};

using Rng = std::mt19937_64;

// Independent stream `stream` derived from `seed`.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

// One velocity/position step. For every centroid row and dimension the
// stream yields r1 then r2 from U[0, 1). Velocities are clamped to the data
// span of their dimension before the position moves.
Particle update_particle(Particle p, const Eigen::MatrixXd& gbest_position,
                         const Coefficients& coeffs, const DataBounds& bounds,
                         const Eigen::MatrixXd& points, Rng& rng);
Particle update_particle(Particle p, const Eigen::MatrixXd& gbest_position, int t,
                         const HpgmkParams& params, const DataBounds& bounds,
                         const Eigen::MatrixXd& points, Rng& rng);

// `trials` greedy Gaussian perturbations of one random centroid each; a
// mutant replaces the global best only if its SSE is strictly lower.
Particle gaussian_mutate_gbest(Particle gbest, double h, const DataBounds& bounds, int trials,
                               const Eigen::MatrixXd& points, Rng& rng);

double decay_h(double h, int t_max, double h_floor = 1e-6);

struct ClusteringResult {
  Eigen::MatrixXd centroids;
  std::vector<int> assignments;
  double sse = 0.0;
  std::vector<double> convergence;       // global best SSE after each iteration
  int refine_iterations = 0;
  std::vector<double> refine_sse_trace;  // SSE after each assignment step
  Eigen::MatrixXd swarm_centroids;       // global best before refinement
  std::uint64_t seed = 0;
  std::string algorithm;
  std::optional<HpgmkParams> params;
};

// Lloyd iterations until the assignment stops changing. An empty cluster
// takes over the point farthest from its own centroid.
ClusteringResult kmeans_refine(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids);

ClusteringResult run_hpgmk(const Eigen::MatrixXd& points, const HpgmkParams& params);
// Random distinct data points as initial centroids, then kmeans_refine.
ClusteringResult run_kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed);
// The swarm alone: no mutation, no refinement.
ClusteringResult run_pso(const Eigen::MatrixXd& points, HpgmkParams params);

nlohmann::json to_json(const ClusteringResult& r);
void write_convergence_csv(std::ostream& out, const ClusteringResult& r);

}  // namespace actdisc
