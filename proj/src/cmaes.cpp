#include "plausim/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "plausim/errors.hpp"
#include "plausim/parallel.hpp"

namespace plausim {

int Cmaes::default_lambda(int dimension) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dimension))));
}

Cmaes::Cmaes(const Eigen::VectorXd& x0, double sigma0, int lambda, std::uint64_t seed)
    : n_(static_cast<int>(x0.size())), lambda_(lambda), mean_(x0), sigma_(sigma0), rng_(seed) {
  if (n_ < 1) throw InvalidArgument("CMA-ES dimension must be at least 1");
  if (lambda_ < 4) throw InvalidArgument("CMA-ES population must be at least 4, got " + std::to_string(lambda_));
  if (!(sigma0 > 0.0)) throw InvalidArgument("CMA-ES initial step size must be positive");
  const double n = n_;
  mu_ = lambda_ / 2;
  weights_.resize(mu_);
  for (int i = 0; i < mu_; ++i) weights_[i] = std::log(mu_ + 0.5) - std::log(i + 1.0);
  weights_ /= weights_.sum();
  mueff_ = 1.0 / weights_.squaredNorm();
  cs_ = (mueff_ + 2.0) / (n + mueff_ + 5.0);
  ds_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff_ - 1.0) / (n + 1.0)) - 1.0) + cs_;
  cc_ = (4.0 + mueff_ / n) / (n + 4.0 + 2.0 * mueff_ / n);
  c1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mueff_);
  cmu_ = std::min(1.0 - c1_, 2.0 * (mueff_ - 2.0 + 1.0 / mueff_) / ((n + 2.0) * (n + 2.0) + mueff_));
  chi_n_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  C_ = Eigen::MatrixXd::Identity(n_, n_);
  B_ = Eigen::MatrixXd::Identity(n_, n_);
  D_ = Eigen::VectorXd::Ones(n_);
  ps_ = Eigen::VectorXd::Zero(n_);
  pc_ = Eigen::VectorXd::Zero(n_);
}

std::vector<Eigen::VectorXd> Cmaes::ask() {
  std::normal_distribution<double> normal(0.0, 1.0);
  candidates_.assign(lambda_, Eigen::VectorXd(n_));
  Eigen::VectorXd z(n_);
  for (auto& x : candidates_) {
    for (int i = 0; i < n_; ++i) z[i] = normal(rng_);
    x = mean_ + sigma_ * (B_ * D_.cwiseProduct(z));
  }
  return candidates_;
}

void Cmaes::tell(const std::vector<double>& fitness) {
  if (static_cast<int>(fitness.size()) != lambda_ || static_cast<int>(candidates_.size()) != lambda_)
    throw InvalidArgument("CMA-ES tell() needs one fitness per candidate of the last ask()");
  std::vector<int> order(lambda_);
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](int i) { return std::isfinite(fitness[i]) ? fitness[i] : std::numeric_limits<double>::infinity(); };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });

  const Eigen::VectorXd old_mean = mean_;
  Eigen::MatrixXd Y(n_, mu_);
  for (int i = 0; i < mu_; ++i) Y.col(i) = (candidates_[order[i]] - old_mean) / sigma_;
  const Eigen::VectorXd yw = Y * weights_;
  mean_ = old_mean + sigma_ * yw;

  // C^{-1/2} yw = B D^{-1} B^T yw
  const Eigen::VectorXd cinv_yw = B_ * (B_.transpose() * yw).cwiseQuotient(D_);
  ps_ = (1.0 - cs_) * ps_ + std::sqrt(cs_ * (2.0 - cs_) * mueff_) * cinv_yw;
  ++generation_;
  const double ps_norm = ps_.norm();
  const double decay = 1.0 - std::pow(1.0 - cs_, 2.0 * generation_);
  const bool hsig = ps_norm / std::sqrt(decay) < (1.4 + 2.0 / (n_ + 1.0)) * chi_n_;
  pc_ = (1.0 - cc_) * pc_ + (hsig ? std::sqrt(cc_ * (2.0 - cc_) * mueff_) : 0.0) * yw;

  const double delta = hsig ? 0.0 : cc_ * (2.0 - cc_);
  C_ = (1.0 - c1_ - cmu_ + c1_ * delta) * C_ + c1_ * pc_ * pc_.transpose() +
       cmu_ * Y * weights_.asDiagonal() * Y.transpose();
  sigma_ *= std::exp((cs_ / ds_) * (ps_norm / chi_n_ - 1.0));
  update_eigensystem(false);
}

void Cmaes::update_eigensystem(bool force) {
  // Lazy decomposition: the covariance changes slowly relative to its learning rates.
  const double gap = 1.0 / ((c1_ + cmu_) * n_ * 10.0);
  if (!force && generation_ - eigen_generation_ < gap) return;
  eigen_generation_ = generation_;
  C_ = 0.5 * (C_ + C_.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C_);
  Eigen::VectorXd ev = es.eigenvalues();
  const double floor = std::max(ev.maxCoeff(), 1e-300) * 1e-14;
  bool repaired = false;
  for (int i = 0; i < n_; ++i) {
    if (!(ev[i] > floor)) {
      ev[i] = floor;
      repaired = true;
    }
  }
  B_ = es.eigenvectors();
  D_ = ev.cwiseSqrt();
  if (repaired) C_ = B_ * ev.asDiagonal() * B_.transpose();
}

CmaesResult cmaes_minimize(const CmaesObjective& objective, const Eigen::VectorXd& x0, const CmaesOptions& options) {
  const int lambda = options.population > 0 ? options.population : Cmaes::default_lambda(static_cast<int>(x0.size()));
  Cmaes es(x0, options.sigma0, lambda, options.seed);
  CmaesResult result;
  auto safe = [](double f) { return std::isfinite(f) ? f : std::numeric_limits<double>::infinity(); };
  if (options.evaluate_initial) {
    result.best_x = x0;
    result.best_cost = safe(objective(x0, 0));
    ++result.evaluations;
  }
  std::vector<double> fitness(lambda);
  for (int g = 0; g < options.iterations; ++g) {
    if (result.best_cost <= options.target_cost) break;
    const std::vector<Eigen::VectorXd> xs = es.ask();
    parallel_for(lambda, options.threads, [&](int i, int worker) { fitness[i] = safe(objective(xs[i], worker)); });
    result.evaluations += lambda;
    int best = 0;
    for (int i = 1; i < lambda; ++i)
      if (fitness[i] < fitness[best]) best = i;
    if (result.best_x.size() == 0 || fitness[best] < result.best_cost) {
      result.best_cost = fitness[best];
      result.best_x = xs[best];
    }
    es.tell(fitness);
    result.history.push_back({g + 1, result.best_cost, fitness[best], es.sigma()});
    if (!(es.sigma() > 1e-250)) break;  // converged to machine precision
  }
  if (result.best_x.size() == 0) result.best_x = x0;
  return result;
}

}  // namespace plausim
