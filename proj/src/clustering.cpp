#include "actdisc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>

namespace actdisc {

namespace {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Lowest fitness wins; ties go to the lower index.
std::size_t best_particle(const std::vector<Particle>& swarm) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < swarm.size(); ++i) {
    if (swarm[i].pbest_fitness < swarm[best].pbest_fitness) best = i;
  }
  return best;
}

Particle as_gbest(const Particle& p) {
  Particle g;
  g.position = p.pbest_position;
  g.velocity = p.velocity;
  g.pbest_position = p.pbest_position;
  g.fitness = g.pbest_fitness = p.pbest_fitness;
  return g;
}

void check_points(const Eigen::MatrixXd& points, int k) {
  if (points.rows() == 0) throw Error("empty point set");
  if (k > points.rows()) {
    throw Error("k = " + std::to_string(k) + " exceeds the number of points (" +
                std::to_string(points.rows()) + ")");
  }
}

// The swarm phase shared by HPGMK and plain PSO.
ClusteringResult run_swarm(const Eigen::MatrixXd& points, const HpgmkParams& params) {
  params.validate();
  check_points(points, params.k);
  const auto bounds = data_bounds(points);
  const Eigen::RowVectorXd span = bounds.span();
  const Eigen::Index dim = points.cols();

  Rng init = make_stream(params.seed, 0);
  Rng mutation = make_stream(params.seed, 1);
  std::vector<Rng> streams;
  std::vector<Particle> swarm(static_cast<std::size_t>(params.swarm_size));
  for (std::size_t i = 0; i < swarm.size(); ++i) {
    streams.push_back(make_stream(params.seed, 2 + i));
    Particle& p = swarm[i];
    p.position.resize(params.k, dim);
    p.velocity.resize(params.k, dim);
    for (int r = 0; r < params.k; ++r) {
      for (Eigen::Index d = 0; d < dim; ++d) p.position(r, d) = uniform(init, bounds.min(d), bounds.max(d));
    }
    for (int r = 0; r < params.k; ++r) {
      for (Eigen::Index d = 0; d < dim; ++d) p.velocity(r, d) = uniform(init, -0.1 * span(d), 0.1 * span(d));
    }
    p.fitness = p.pbest_fitness = sse(points, p.position).sse;
    p.pbest_position = p.position;
  }

  Particle gbest = as_gbest(swarm[best_particle(swarm)]);
  double h = params.h0;
  ClusteringResult out;
  out.convergence.reserve(static_cast<std::size_t>(params.iterations));
  for (int t = 0; t < params.iterations; ++t) {
    const auto coeffs = schedule(t, params);
    // Every particle sees the global best frozen at the start of the iteration.
    for (std::size_t i = 0; i < swarm.size(); ++i) {
      swarm[i] = update_particle(std::move(swarm[i]), gbest.position, coeffs, bounds, points, streams[i]);
    }
    const auto& best = swarm[best_particle(swarm)];
    if (best.pbest_fitness < gbest.fitness) gbest = as_gbest(best);
    gbest = gaussian_mutate_gbest(std::move(gbest), h, bounds, params.mutation_trials, points, mutation);
    h = decay_h(h, params.iterations, params.h_floor);
    out.convergence.push_back(gbest.fitness);
  }
  out.swarm_centroids = gbest.position;
  out.centroids = gbest.position;
  auto part = sse(points, gbest.position);
  out.sse = part.sse;
  out.assignments = std::move(part.assignments);
  out.seed = params.seed;
  out.params = params;
  return out;
}

}  // namespace

DataBounds data_bounds(const Eigen::MatrixXd& points) {
  if (points.rows() == 0) throw Error("empty point set");
  return {points.colwise().minCoeff(), points.colwise().maxCoeff()};
}

void HpgmkParams::validate() const {
  if (k < 2) throw Error("k must be >= 2");
  if (swarm_size < 2) throw Error("swarm size must be >= 2");
  if (iterations < 1) throw Error("iteration count must be >= 1");
  if (mutation_trials < 0) throw Error("mutation trial count must be >= 0");
  if (!(w_min < w_max)) throw Error("w_min must be below w_max");
  if (!(h0 > 0.0)) throw Error("h0 must be > 0");
  if (!(h_floor > 0.0)) throw Error("h floor must be > 0");
}

nlohmann::json to_json(const HpgmkParams& p) {
  return {{"k", p.k},           {"swarm_size", p.swarm_size},
          {"iterations", p.iterations}, {"mutation_trials", p.mutation_trials},
          {"w_max", p.w_max},   {"w_min", p.w_min},
          {"c1_max", p.c1_max}, {"c1_min", p.c1_min},
          {"c2_max", p.c2_max}, {"c2_min", p.c2_min},
          {"h0", p.h0},         {"h_floor", p.h_floor},
          {"seed", p.seed},     {"refine", p.refine}};
}

HpgmkParams params_from_json(const nlohmann::json& j, HpgmkParams p) {
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("k", p.k);
  get("swarm_size", p.swarm_size);
  get("iterations", p.iterations);
  get("mutation_trials", p.mutation_trials);
  get("w_max", p.w_max);
  get("w_min", p.w_min);
  get("c1_max", p.c1_max);
  get("c1_min", p.c1_min);
  get("c2_max", p.c2_max);
  get("c2_min", p.c2_min);
  get("h0", p.h0);
  get("h_floor", p.h_floor);
  get("seed", p.seed);
  get("refine", p.refine);
  return p;
}

Coefficients schedule(int t, const HpgmkParams& params) {
  if (t < 0 || t >= params.iterations) throw Error("iteration " + std::to_string(t) + " out of range");
  const double frac = params.iterations > 1 ? static_cast<double>(t) / (params.iterations - 1) : 0.0;
  return {params.w_max - (params.w_max - params.w_min) * frac,
          params.c1_max - (params.c1_max - params.c1_min) * frac,
          params.c2_min + (params.c2_max - params.c2_min) * frac};
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x48504d4bU};
  return Rng(seq);
}

Particle update_particle(Particle p, const Eigen::MatrixXd& gbest_position,
                         const Coefficients& coeffs, const DataBounds& bounds,
                         const Eigen::MatrixXd& points, Rng& rng) {
  if (p.position.rows() != gbest_position.rows() || p.position.cols() != gbest_position.cols()) {
    throw Error("particle and global best shapes differ");
  }
  const Eigen::RowVectorXd span = bounds.span();
  for (Eigen::Index r = 0; r < p.position.rows(); ++r) {
    for (Eigen::Index d = 0; d < p.position.cols(); ++d) {
      const double r1 = uniform01(rng);
      const double r2 = uniform01(rng);
      const double x = p.position(r, d);
      double v = coeffs.w * p.velocity(r, d) + coeffs.c1 * r1 * (p.pbest_position(r, d) - x) +
                 coeffs.c2 * r2 * (gbest_position(r, d) - x);
      v = std::clamp(v, -span(d), span(d));
      p.velocity(r, d) = v;
      p.position(r, d) = x + v;
    }
  }
  p.fitness = sse(points, p.position).sse;
  if (p.fitness < p.pbest_fitness) {
    p.pbest_fitness = p.fitness;
    p.pbest_position = p.position;
  }
  return p;
}

Particle update_particle(Particle p, const Eigen::MatrixXd& gbest_position, int t,
                         const HpgmkParams& params, const DataBounds& bounds,
                         const Eigen::MatrixXd& points, Rng& rng) {
  return update_particle(std::move(p), gbest_position, schedule(t, params), bounds, points, rng);
}

Particle gaussian_mutate_gbest(Particle gbest, double h, const DataBounds& bounds, int trials,
                               const Eigen::MatrixXd& points, Rng& rng) {
  if (trials <= 0) return gbest;
  if (!(h > 0.0)) throw Error("mutation variance must be > 0");
  const Eigen::RowVectorXd span = bounds.span();
  const auto k = static_cast<int>(gbest.position.rows());
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::normal_distribution<double> gauss(0.0, std::sqrt(h));
  for (int trial = 0; trial < trials; ++trial) {
    const int q = pick(rng);
    Eigen::MatrixXd position = gbest.position;
    Eigen::RowVectorXd velocity = gbest.velocity.row(q);
    for (Eigen::Index d = 0; d < position.cols(); ++d) {
      velocity(d) = velocity(d) * gauss(rng) * span(d);
      position(q, d) += gauss(rng) * velocity(d);
    }
    const double fitness = sse(points, position).sse;
    if (fitness < gbest.fitness) {
      gbest.position = std::move(position);
      gbest.velocity.row(q) = velocity;
      gbest.pbest_position = gbest.position;
      gbest.fitness = gbest.pbest_fitness = fitness;
    }
  }
  return gbest;
}

double decay_h(double h, int t_max, double h_floor) {
  if (t_max < 1) throw Error("t_max must be >= 1");
  return std::max(h - 1.0 / t_max, h_floor);
}

ClusteringResult kmeans_refine(const Eigen::MatrixXd& points, const Eigen::MatrixXd& initial) {
  check_points(points, static_cast<int>(initial.rows()));
  const auto k = initial.rows();
  Eigen::MatrixXd centroids = initial;
  auto part = sse(points, centroids);

  ClusteringResult out;
  out.refine_sse_trace.push_back(part.sse);
  constexpr int kMaxIterations = 10000;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    // Repair empty clusters with the points farthest from their centroids.
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int a : part.assignments) ++sizes[a];
    for (Eigen::Index c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      Eigen::Index far = -1;
      double far_d = 0.0;
      for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const int a = part.assignments[i];
        if (sizes[a] < 2) continue;
        const double d = (points.row(i) - centroids.row(a)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) continue;  // every point already sits on its centroid
      --sizes[part.assignments[far]];
      part.assignments[far] = static_cast<int>(c);
      sizes[c] = 1;
    }

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    for (Eigen::Index i = 0; i < points.rows(); ++i) sums.row(part.assignments[i]) += points.row(i);
    for (Eigen::Index c = 0; c < k; ++c) {
      if (sizes[c] > 0) centroids.row(c) = sums.row(c) / static_cast<double>(sizes[c]);
    }
    out.refine_iterations = iter + 1;

    auto next = sse(points, centroids);
    out.refine_sse_trace.push_back(next.sse);
    const bool stable = next.assignments == part.assignments;
    part = std::move(next);
    if (stable) break;
  }
  out.centroids = std::move(centroids);
  out.sse = part.sse;
  out.assignments = std::move(part.assignments);
  out.swarm_centroids = initial;
  out.algorithm = "kmeans_refine";
  return out;
}

ClusteringResult run_hpgmk(const Eigen::MatrixXd& points, const HpgmkParams& params) {
  auto swarm = run_swarm(points, params);
  if (!params.refine) {
    swarm.algorithm = params.mutation_trials > 0 ? "hpgmk_norefine" : "pso";
    return swarm;
  }
  auto out = kmeans_refine(points, swarm.centroids);
  out.convergence = std::move(swarm.convergence);
  out.swarm_centroids = std::move(swarm.swarm_centroids);
  out.seed = params.seed;
  out.params = params;
  out.algorithm = params.mutation_trials > 0 ? "hpgmk" : "pso_kmeans";
  return out;
}

ClusteringResult run_kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
  if (k < 1) throw Error("k must be >= 1");
  check_points(points, k);
  Rng rng = make_stream(seed, 0);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(points.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // Partial Fisher-Yates: the first k entries are a uniform sample.
  for (int i = 0; i < k; ++i) {
    const auto remaining = static_cast<std::uint64_t>(idx.size() - i);
    const auto j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(remaining));
    std::swap(idx[i], idx[std::min(j, idx.size() - 1)]);
  }
  Eigen::MatrixXd init(k, points.cols());
  for (int i = 0; i < k; ++i) init.row(i) = points.row(idx[i]);
  auto out = kmeans_refine(points, init);
  out.seed = seed;
  out.algorithm = "kmeans";
  return out;
}

ClusteringResult run_pso(const Eigen::MatrixXd& points, HpgmkParams params) {
  params.mutation_trials = 0;
  params.refine = false;
  return run_hpgmk(points, params);
}

nlohmann::json to_json(const ClusteringResult& r) {
  const auto rows = [](const Eigen::MatrixXd& m) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(m.cols()));
      for (Eigen::Index d = 0; d < m.cols(); ++d) row[d] = m(i, d);
      a.push_back(std::move(row));
    }
    return a;
  };
  nlohmann::json j = {{"algorithm", r.algorithm},
                      {"seed", r.seed},
                      {"sse", r.sse},
                      {"centroids", rows(r.centroids)},
                      {"assignments", r.assignments},
                      {"convergence", r.convergence},
                      {"refine_iterations", r.refine_iterations},
                      {"refine_sse_trace", r.refine_sse_trace}};
  j["params"] = r.params ? to_json(*r.params) : nlohmann::json(nullptr);
  return j;
}

void write_convergence_csv(std::ostream& out, const ClusteringResult& r) {
  out << "iteration,gbest_sse\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < r.convergence.size(); ++i) out << i << ',' << r.convergence[i] << '\n';
  out.precision(old);
}

}  // namespace actdisc
