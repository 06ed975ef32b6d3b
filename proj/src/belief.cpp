#include "scalefb/belief.hpp"

#include "scalefb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scalefb {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

double upper_tail(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    fail(ErrorCode::invalid_input, "response noise sigma must be positive, got " +
                                       std::to_string(sigma));
  }
}

void check_alpha(double alpha) {
  if (!(alpha >= kAlphaMin - 1e-12 && alpha <= 1.0 + 1e-12)) {
    fail(ErrorCode::invalid_input, "alpha " + std::to_string(alpha) + " outside [" +
                                       std::to_string(kAlphaMin) + ", 1]");
  }
}

double reflect_alpha(double a) {
  const double lo = kAlphaMin;
  const double hi = 1.0;
  const double width = hi - lo;
  double t = std::fmod(a - lo, 2.0 * width);
  if (t < 0) t += 2.0 * width;
  return t <= width ? lo + t : hi - (t - width);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_interval(double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  // Difference of the smaller tails keeps precision away from the center.
  if (lo >= 0.0) return upper_tail(lo) - upper_tail(hi);
  if (hi <= 0.0) return normal_cdf(hi) - normal_cdf(lo);
  return 1.0 - normal_cdf(lo) - upper_tail(hi);
}

double bucket_probability(const SliderGrid& grid, std::size_t index, double psi, double sigma) {
  const auto b = grid.boundaries();
  const double lo = index == 0 ? -std::numeric_limits<double>::infinity() : (b[index - 1] - psi) / sigma;
  const double hi = index + 1 == grid.size() ? std::numeric_limits<double>::infinity()
                                             : (b[index] - psi) / sigma;
  if (std::isinf(lo)) return normal_cdf(hi);
  if (std::isinf(hi)) return upper_tail(lo);
  return normal_interval(lo, hi);
}

double feedback_likelihood(double mu, double psi, double sigma, double epsilon) {
  check_sigma(sigma);
  const SliderGrid grid(epsilon);
  const auto idx = grid.index_of(mu);
  if (!idx) {
    fail(ErrorCode::invalid_input, "slider value " + std::to_string(mu) +
                                       " is not on the grid of step " + std::to_string(epsilon));
  }
  return bucket_probability(grid, *idx, psi, sigma);
}

double soft_choice_likelihood(int choice, double psi, double sigma) {
  check_sigma(sigma);
  switch (choice) {
    case 1: return upper_tail((0.5 - psi) / sigma);
    case -1: return normal_cdf((-0.5 - psi) / sigma);
    case 0: return normal_interval((-0.5 - psi) / sigma, (0.5 - psi) / sigma);
    default: fail(ErrorCode::invalid_input, "soft choice must be -1, 0 or 1");
  }
}

double model_response(double diff, double alpha, double gap) {
  if (!(gap > 0.0)) return 0.0;
  return std::clamp(diff / (alpha * gap), -1.0, 1.0);
}

double query_likelihood(const FeedbackRecord& record, const WeightVector& w, double alpha,
                        double sigma, const TrajectorySet& set) {
  check_alpha(alpha);
  const Eigen::VectorXd r = set.rewards(w);
  const double gap = r.maxCoeff() - r.minCoeff();
  const double diff = r[static_cast<Eigen::Index>(record.query.p)] -
                      r[static_cast<Eigen::Index>(record.query.q)];
  return feedback_likelihood(record.mu, model_response(diff, alpha, gap), sigma, record.epsilon);
}

double log_posterior(const WeightVector& w, double alpha, std::span<const FeedbackRecord> dataset,
                     double sigma, const TrajectorySet& set) {
  check_alpha(alpha);
  return PosteriorModel(set, dataset, sigma).log_likelihood(w, alpha);
}

// ---------------------------------------------------------------------------

PosteriorModel::PosteriorModel(const TrajectorySet& set, std::span<const FeedbackRecord> dataset,
                               double sigma)
    : set_(&set), sigma_(sigma) {
  check_sigma(sigma);
  for (const auto& rec : dataset) {
    if (rec.query.p >= set.size() || rec.query.q >= set.size()) {
      fail(ErrorCode::invalid_input, "feedback record refers to a trajectory outside the set");
    }
    std::size_t g = 0;
    while (g < grids_.size() && grids_[g].epsilon() != rec.epsilon) ++g;
    if (g == grids_.size()) grids_.emplace_back(rec.epsilon);
    const auto idx = grids_[g].index_of(rec.mu);
    if (!idx) {
      fail(ErrorCode::invalid_input, "slider value " + std::to_string(rec.mu) +
                                         " is not on the grid of step " + std::to_string(rec.epsilon));
    }
    grid_of_.push_back(g);
    mu_index_.push_back(*idx);
    queries_.push_back(rec.query);
  }
}

double PosteriorModel::log_likelihood(const WeightVector& w, double alpha) const {
  return log_likelihood_from_rewards(set_->rewards(w), alpha);
}

double PosteriorModel::log_likelihood_from_rewards(const Eigen::Ref<const Eigen::VectorXd>& rewards,
                                      double alpha) const {
  if (mu_index_.empty()) return 0.0;
  const double gap = rewards.maxCoeff() - rewards.minCoeff();
  double total = 0.0;
  for (std::size_t k = 0; k < mu_index_.size(); ++k) {
    const double diff = rewards[static_cast<Eigen::Index>(queries_[k].p)] -
                        rewards[static_cast<Eigen::Index>(queries_[k].q)];
    const double psi = model_response(diff, alpha, gap);
    const double p = bucket_probability(grids_[grid_of_[k]], mu_index_[k], psi, sigma_);
    total += std::log(std::max(p, kLikelihoodFloor));
  }
  return total;
}

// ---------------------------------------------------------------------------

Belief::Belief(std::shared_ptr<const TrajectorySet> set, Eigen::MatrixXd samples,
               Eigen::VectorXd alphas, Eigen::VectorXd weights, std::vector<FeedbackRecord> dataset,
               double sigma)
    : set_(std::move(set)),
      samples_(std::move(samples)),
      alphas_(std::move(alphas)),
      weights_(std::move(weights)),
      dataset_(std::move(dataset)),
      sigma_(sigma) {
  if (!set_) fail(ErrorCode::invalid_input, "belief needs a trajectory set");
  const Eigen::Index m = alphas_.size();
  if (m < 1) fail(ErrorCode::invalid_input, "belief needs at least one sample");
  if (samples_.rows() != m || weights_.size() != m) {
    fail(ErrorCode::invalid_input, "belief samples, alphas and weights differ in length");
  }
  if (static_cast<std::size_t>(samples_.cols()) != set_->dimension()) {
    fail(ErrorCode::invalid_input, "belief sample dimension does not match the trajectory set");
  }
  check_sigma(sigma_);
  if ((weights_.array() < 0.0).any() || std::abs(weights_.sum() - 1.0) > 1e-9) {
    fail(ErrorCode::invalid_input, "belief weights must be non-negative and sum to 1");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    check_alpha(alphas_[i]);
    if (std::abs(samples_.row(i).norm() - 1.0) > 1e-9) {
      fail(ErrorCode::invalid_input, "belief samples must have unit norm");
    }
  }
  rewards_ = samples_ * set_->features().transpose();
  gaps_ = rewards_.rowwise().maxCoeff() - rewards_.rowwise().minCoeff();
  optimal_.resize(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    optimal_[static_cast<std::size_t>(i)] = best_index_by_reward(*set_, rewards_.row(i).transpose());
  }
}

Belief prior_belief(std::shared_ptr<const TrajectorySet> set, double sigma, std::size_t M, Rng& rng) {
  if (!set) fail(ErrorCode::invalid_input, "belief needs a trajectory set");
  if (M < 1) fail(ErrorCode::invalid_input, "sample count M must be at least 1");
  const auto d = static_cast<Eigen::Index>(set->dimension());
  const auto m = static_cast<Eigen::Index>(M);
  Eigen::MatrixXd samples(m, d);
  Eigen::VectorXd alphas(m);
  std::uniform_real_distribution<double> unif(kAlphaMin, 1.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    samples.row(i) = random_unit_vector(d, rng).transpose();
    alphas[i] = unif(rng);
  }
  return Belief(std::move(set), std::move(samples), std::move(alphas),
                Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(M)), {}, sigma);
}

Belief sample_posterior(std::shared_ptr<const TrajectorySet> set, std::vector<FeedbackRecord> dataset,
                        double sigma, std::size_t M, Rng& rng, const SamplerConfig& config) {
  if (!set) fail(ErrorCode::invalid_input, "belief needs a trajectory set");
  if (M < 1) fail(ErrorCode::invalid_input, "sample count M must be at least 1");
  check_sigma(sigma);
  if (dataset.empty()) return prior_belief(std::move(set), sigma, M, rng);

  const PosteriorModel model(*set, dataset, sigma);
  const auto d = static_cast<Eigen::Index>(set->dimension());
  const Eigen::MatrixXd& features = set->features();

  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> alpha_prior(kAlphaMin, 1.0);

  // Chain starts: sampling-importance-resampling from a pool of prior draws.
  const std::size_t pool_size = std::max<std::size_t>(config.init_pool, 1);
  std::vector<Eigen::VectorXd> pool_w;
  std::vector<double> pool_alpha, pool_logp;
  pool_w.reserve(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) {
    pool_w.push_back(random_unit_vector(d, rng));
    pool_alpha.push_back(alpha_prior(rng));
    pool_logp.push_back(model.log_likelihood_from_rewards(features * pool_w.back(), pool_alpha.back()));
  }
  const double max_logp = *std::max_element(pool_logp.begin(), pool_logp.end());
  std::vector<double> cumulative(pool_size);
  double acc = 0.0;
  for (std::size_t i = 0; i < pool_size; ++i) {
    acc += std::exp(pool_logp[i] - max_logp);
    cumulative[i] = acc;
  }

  const std::size_t chains = std::clamp<std::size_t>(config.chains, 1, M);
  const std::size_t thin = std::max<std::size_t>(config.thin, 1);
  const std::size_t burn_per_chain = config.burn_in_factor * M / chains;

  Eigen::MatrixXd samples(static_cast<Eigen::Index>(M), d);
  Eigen::VectorXd alphas(static_cast<Eigen::Index>(M));
  std::size_t filled = 0;

  Eigen::VectorXd proposal(d), z(d);
  for (std::size_t c = 0; c < chains; ++c) {
    const double u = unit(rng) * acc;
    const auto start = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    const std::size_t pick = std::min(start, pool_size - 1);
    Eigen::VectorXd w = pool_w[pick];
    double alpha = pool_alpha[pick];
    double logp = pool_logp[pick];

    // Remaining samples spread as evenly as possible over the remaining chains.
    const std::size_t quota = (M - filled) / (chains - c);
    const std::size_t steps = burn_per_chain + quota * thin;
    for (std::size_t step = 1; step <= steps; ++step) {
      for (Eigen::Index i = 0; i < d; ++i) z[i] = normal(rng);
      z -= z.dot(w) * w;
      proposal = w + config.w_step * z;
      proposal.normalize();
      const double alpha_prop = reflect_alpha(alpha + config.alpha_step * normal(rng));
      const double logp_prop = model.log_likelihood_from_rewards(features * proposal, alpha_prop);
      if (std::log(unit(rng)) < logp_prop - logp) {
        w = proposal;
        alpha = alpha_prop;
        logp = logp_prop;
      }
      if (step > burn_per_chain && (step - burn_per_chain) % thin == 0) {
        samples.row(static_cast<Eigen::Index>(filled)) = w.transpose();
        alphas[static_cast<Eigen::Index>(filled)] = alpha;
        ++filled;
      }
    }
  }
  return Belief(std::move(set), std::move(samples), std::move(alphas),
                Eigen::VectorXd::Constant(static_cast<Eigen::Index>(M), 1.0 / static_cast<double>(M)),
                std::move(dataset), sigma);
}

PosteriorEstimate mean_weight(const Belief& belief) {
  const Eigen::VectorXd mean = belief.samples().transpose() * belief.weights();
  const double norm = mean.norm();
  if (!(norm > 1e-14)) {
    fail(ErrorCode::degenerate_posterior, "posterior mean weight is the zero vector");
  }
  return {mean / norm, belief.weights().dot(belief.alphas())};
}

double validation_log_likelihood(std::span<const FeedbackRecord> validation, const Belief& belief) {
  if (validation.empty()) fail(ErrorCode::invalid_input, "validation set is empty");
  const PosteriorModel model(belief.set(), validation, belief.sigma());
  const auto m = static_cast<Eigen::Index>(belief.size());
  std::vector<double> terms(static_cast<std::size_t>(m));
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double w = belief.weights()[i];
    double t = -std::numeric_limits<double>::infinity();
    if (w > 0.0) {
      t = std::log(w) +
          model.log_likelihood_from_rewards(belief.sample_rewards().row(i).transpose(), belief.alphas()[i]);
    }
    terms[static_cast<std::size_t>(i)] = t;
    top = std::max(top, t);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  return top + std::log(sum);
}

bool noiseless_feasible(const WeightVector& w, double alpha, std::span<const FeedbackRecord> dataset,
                        const TrajectorySet& set, double tau) {
  if (!(tau > 0.0)) fail(ErrorCode::invalid_input, "feasibility tolerance must be positive");
  const Eigen::VectorXd r = set.rewards(w);
  const double gap = r.maxCoeff() - r.minCoeff();
  const double saturation = alpha * gap;
  for (const auto& rec : dataset) {
    const double diff = r[static_cast<Eigen::Index>(rec.query.p)] -
                        r[static_cast<Eigen::Index>(rec.query.q)];
    const double psi = rec.mu;
    if (psi >= 1.0) {
      if (!(diff >= saturation)) return false;
    } else if (psi <= -1.0) {
      if (!(diff <= -saturation)) return false;
    } else {
      const double band = tau * saturation * (psi != 0.0 ? std::abs(psi) : 1.0);
      if (!(std::abs(diff - psi * saturation) <= band)) return false;
    }
  }
  return true;
}

double worst_case_error(const Belief& belief, const WeightVector& w_true, Measure measure) {
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < belief.samples().rows(); ++i) {
    const WeightVector w = belief.samples().row(i).transpose();
    const double xi = measure == Measure::alignment ? alignment(w, w_true)
                                                    : relative_reward(w, w_true, belief.set());
    worst = std::max(worst, belief.weights()[i] * (1.0 - xi));
  }
  return worst;
}

}  // namespace scalefb
