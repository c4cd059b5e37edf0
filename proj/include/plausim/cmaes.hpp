#pragma once

#include <cstdint>
#include <limits>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace plausim {

/// (mu/mu_w, lambda)-CMA-ES with rank-mu update and cumulative step-size adaptation.
/// Ask/tell interface; sampling is sequential so results depend only on the seed.
class Cmaes {
 public:
  Cmaes(const Eigen::VectorXd& x0, double sigma0, int lambda, std::uint64_t seed);

  int dimension() const { return static_cast<int>(mean_.size()); }
  int lambda() const { return lambda_; }
  int mu() const { return mu_; }
  int generation() const { return generation_; }
  double sigma() const { return sigma_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return C_; }

  std::vector<Eigen::VectorXd> ask();
  /// Fitness of the candidates from the last ask(), same order. Non-finite values rank last.
  void tell(const std::vector<double>& fitness);

  static int default_lambda(int dimension);

 private:
  void update_eigensystem(bool force);

  int n_;
  int lambda_;
  int mu_;
  Eigen::VectorXd weights_;
  double mueff_, cs_, ds_, cc_, c1_, cmu_, chi_n_;

  Eigen::VectorXd mean_;
  double sigma_;
  Eigen::MatrixXd C_, B_;
  Eigen::VectorXd D_;  // square roots of the eigenvalues
  Eigen::VectorXd ps_, pc_;
  int generation_ = 0;
  int eigen_generation_ = 0;
  std::mt19937_64 rng_;
  std::vector<Eigen::VectorXd> candidates_;
};

struct CmaesOptions {
  int population = 0;  // 0 = default_lambda
  int iterations = 200;
  double sigma0 = 0.05;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Evaluate x0 before the first generation so the result is never worse than it.
  bool evaluate_initial = true;
  /// Stop once the best cost reaches this value.
  double target_cost = -std::numeric_limits<double>::infinity();
};

struct CmaesGeneration {
  int generation = 0;
  double best_so_far = 0.0;
  double generation_best = 0.0;
  double sigma = 0.0;
};

struct CmaesResult {
  Eigen::VectorXd best_x;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<CmaesGeneration> history;
  int evaluations = 0;
};

/// Objective receives the candidate and the id of the worker evaluating it.
using CmaesObjective = std::function<double(const Eigen::VectorXd&, int worker)>;

CmaesResult cmaes_minimize(const CmaesObjective& objective, const Eigen::VectorXd& x0, const CmaesOptions& options);

}  // namespace plausim
