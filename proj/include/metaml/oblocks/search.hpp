#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "metaml/metamodel/metamodel.hpp"
#include "metaml/surrogate/backend.hpp"
#include "metaml/surrogate/precision.hpp"

namespace metaml::oblocks {

// ---- pruning ---------------------------------------------------------------

struct PruningParams {
  double tolerate_acc_loss = 0.02;   // alpha_p, in (0,1]
  double pruning_rate_thresh = 0.02;  // beta_p, in (0,0.5]
  bool keep_all_candidates = true;
  std::int64_t train_epochs = 0;     // forwarded, inert in the reference backend

  void validate() const;  // InvalidValue
};

struct PruneStep {
  double rate = 0.0;
  double accuracy = 0.0;
  bool feasible = false;
};

struct PruneTrace {
  std::vector<PruneStep> steps;  // steps[0] is the rate-0 baseline
  double baseline = 0.0;
  double selected_rate = 0.0;
  std::size_t selected_step = 0;
};

// Number of bisection halvings: floor(log2(1/beta)), computed exactly.
int bisection_steps(double pruning_rate_thresh);

// Bisection on [0,1) with lo=0 feasible; a rate is feasible iff
// acc(rate) >= baseline - alpha. Evaluates 1 + bisection_steps(beta) rates.
PruneTrace bisect_pruning_rate(const PruningParams& params, const std::function<double(double)>& accuracy_at);

// Searches the focus NEURAL model, commits candidates as variations and
// marks the optimum. Throws MissingFocus.
MetaModel prune_search(MetaModel mm, const PruningParams& params, const surrogate::Backend& backend,
                       const Actor& actor);

// ---- scaling ---------------------------------------------------------------

struct ScalingParams {
  double scale_factor = 0.8;        // in (0,1)
  double tolerate_acc_loss = 0.005;  // alpha_s
  bool scale_auto = true;           // false: one step at scale_factor
  std::int64_t max_trials_num = 16;

  void validate() const;
};

struct ScaleStep {
  double sigma = 1.0;
  double accuracy = 0.0;
};

struct ScaleTrace {
  std::vector<ScaleStep> steps;  // steps[0] is the unscaled baseline
  std::size_t selected_step = 0;
};

// Step i multiplies the entry scale by factor^i; stops at the first step
// whose loss against step 0 exceeds alpha and selects the one before it.
ScaleTrace search_scale(const ScalingParams& params, double entry_sigma,
                        const std::function<double(double)>& accuracy_at);

// Throws MissingFocus, DegenerateModel.
MetaModel scale_search(MetaModel mm, const ScalingParams& params, const surrogate::Backend& backend,
                       const Actor& actor);

// ---- quantization ----------------------------------------------------------

struct QuantParams {
  double tolerate_acc_loss = 0.01;  // alpha_q
  int min_total_bits = 2;
  int bit_step = 1;

  void validate() const;
};

// Within each virtual layer, a result feeding an absorber never keeps more
// bits than that absorber's result (suffix minimum). Never widens.
surrogate::PrecisionConfig normalize_precision(surrogate::PrecisionConfig cfg);

struct QuantTrace {
  double baseline = 0.0;
  std::vector<surrogate::PrecisionConfig> accepted;  // in acceptance order
  surrogate::PrecisionConfig final_config;
  double final_accuracy = 0.0;
  std::size_t sweeps = 0;
};

// Greedy sweeps over virtual layers and fields (weight, bias, output):
// decrement while the loss stays < alpha (or is zero), normalize after each
// sweep, stop after a sweep with no change.
QuantTrace search_precision(const QuantParams& params, surrogate::PrecisionConfig start,
                            const std::function<double(const surrogate::PrecisionConfig&)>& accuracy_of);

// Works on the focus KERNEL model. Throws MissingFocus.
MetaModel quant_search(MetaModel mm, const QuantParams& params, const surrogate::Backend& backend,
                       const Actor& actor);

}  // namespace metaml::oblocks
