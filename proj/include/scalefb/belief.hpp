#pragma once

#include "scalefb/random.hpp"
#include "scalefb/trajectory.hpp"
#include "scalefb/user_model.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace scalefb {

/// Lower end of the uniform prior on the saturation parameter.
inline constexpr double kAlphaMin = 0.05;
/// Each per-record likelihood is floored here before taking logs.
inline constexpr double kLikelihoodFloor = 1e-12;

struct FeedbackRecord {
  Query query;
  double mu = 0.0;       // slider value on the epsilon grid
  double epsilon = 0.1;  // step of the slider the value was collected with
};

double normal_cdf(double x);
/// P(lo < Z < hi) for standard normal Z, accurate in both tails.
double normal_interval(double lo, double hi);

/// Probability that a response with noiseless value psi lands on grid position index.
double bucket_probability(const SliderGrid& grid, std::size_t index, double psi, double sigma);

/// P(mu | psi) for slider step epsilon and response noise sigma.
/// Throws invalid_input when mu is off-grid or sigma is not positive.
double feedback_likelihood(double mu, double psi, double sigma, double epsilon);

/// Closed-form soft-choice outcome probability: choice in {-1, 0, +1}.
double soft_choice_likelihood(int choice, double psi, double sigma);

/// Model response psi for reward difference diff under (alpha, gap); 0 when gap is 0.
double model_response(double diff, double alpha, double gap);

/// P(mu_k | P_k, Q_k, w, alpha) with psi from the model response.
double query_likelihood(const FeedbackRecord& record, const WeightVector& w, double alpha,
                        double sigma, const TrajectorySet& set);

/// Unnormalized log posterior: constant prior plus floored log-likelihoods.
double log_posterior(const WeightVector& w, double alpha, std::span<const FeedbackRecord> dataset,
                     double sigma, const TrajectorySet& set);

/// Precomputed view of a dataset for repeated posterior evaluation.
class PosteriorModel {
 public:
  PosteriorModel(const TrajectorySet& set, std::span<const FeedbackRecord> dataset, double sigma);

  double log_likelihood(const WeightVector& w, double alpha) const;
  /// Same, with the rewards of every trajectory under w already known.
  double log_likelihood_from_rewards(const Eigen::Ref<const Eigen::VectorXd>& rewards, double alpha) const;

  std::size_t size() const noexcept { return mu_index_.size(); }

 private:
  const TrajectorySet* set_;
  double sigma_;
  std::vector<SliderGrid> grids_;
  std::vector<std::size_t> grid_of_;
  std::vector<std::size_t> mu_index_;
  std::vector<Query> queries_;
};

struct SamplerConfig {
  double w_step = 0.15;             // tangent-space proposal scale for w
  double alpha_step = 0.1;          // reflected proposal scale for alpha
  std::size_t burn_in_factor = 20;  // burn-in proposals = factor * M, split over chains
  std::size_t thin = 10;            // proposals between kept samples
  std::size_t chains = 4;
  std::size_t init_pool = 1000;     // prior draws screened for chain starts
};

struct PosteriorEstimate {
  WeightVector w_hat;  // unit norm
  double alpha_hat = 0.0;
};

/// Weighted sample approximation of the joint posterior over (w, alpha).
class Belief {
 public:
  Belief(std::shared_ptr<const TrajectorySet> set, Eigen::MatrixXd samples, Eigen::VectorXd alphas,
         Eigen::VectorXd weights, std::vector<FeedbackRecord> dataset, double sigma);

  std::size_t size() const noexcept { return static_cast<std::size_t>(alphas_.size()); }
  const Eigen::MatrixXd& samples() const noexcept { return samples_; }  // M x d
  const Eigen::VectorXd& alphas() const noexcept { return alphas_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  const std::vector<FeedbackRecord>& dataset() const noexcept { return dataset_; }
  double sigma() const noexcept { return sigma_; }
  const TrajectorySet& set() const noexcept { return *set_; }
  const std::shared_ptr<const TrajectorySet>& set_ptr() const noexcept { return set_; }

  /// M x n rewards of every trajectory under every sample.
  const Eigen::MatrixXd& sample_rewards() const noexcept { return rewards_; }
  /// Maximum reward gap per sample.
  const Eigen::VectorXd& gaps() const noexcept { return gaps_; }
  /// Optimal trajectory index per sample.
  const std::vector<std::size_t>& optimal() const noexcept { return optimal_; }

 private:
  std::shared_ptr<const TrajectorySet> set_;
  Eigen::MatrixXd samples_;
  Eigen::VectorXd alphas_;
  Eigen::VectorXd weights_;
  std::vector<FeedbackRecord> dataset_;
  double sigma_;
  Eigen::MatrixXd rewards_;
  Eigen::VectorXd gaps_;
  std::vector<std::size_t> optimal_;
};

/// Independent draws from the prior: uniform sphere x uniform [kAlphaMin, 1].
Belief prior_belief(std::shared_ptr<const TrajectorySet> set, double sigma, std::size_t M, Rng& rng);

/// Random-walk Metropolis over (w, alpha). Returns prior draws for an empty dataset.
/// Convergence is not checked.
Belief sample_posterior(std::shared_ptr<const TrajectorySet> set, std::vector<FeedbackRecord> dataset,
                        double sigma, std::size_t M, Rng& rng, const SamplerConfig& config = {});

/// Weighted mean of the samples with w renormalized; throws degenerate_posterior
/// when the mean weight vector vanishes.
PosteriorEstimate mean_weight(const Belief& belief);

/// log E_belief[ prod_k P(record_k | w, alpha) ], each record with its own epsilon.
double validation_log_likelihood(std::span<const FeedbackRecord> validation, const Belief& belief);

/// Noiseless feasibility of (w, alpha) for records whose mu is the exact noiseless
/// response. Saturated records are inequalities; an interior record with value psi
/// must satisfy |diff - psi*alpha*delta| <= tau * alpha * delta * (psi != 0 ? |psi| : 1).
bool noiseless_feasible(const WeightVector& w, double alpha, std::span<const FeedbackRecord> dataset,
                        const TrajectorySet& set, double tau);

enum class Measure { alignment, relative_reward };

/// max over samples of weight * (1 - measure(sample, w_true)); the continuous
/// maximum is approximated by the sample set.
double worst_case_error(const Belief& belief, const WeightVector& w_true, Measure measure);

}  // namespace scalefb
