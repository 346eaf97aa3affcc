#pragma once

#include <string>
#include <vector>

#include "metaml/flowgraph/block.hpp"
#include "metaml/surrogate/backend.hpp"

namespace metaml {

struct ExternalBlockSpec {
  std::string command;
  std::vector<std::string> args;
  double timeout_s = 30.0;
  Role role = Role::Lambda;  // Lambda or Opt

  void validate() const;  // InvalidValue
  static ExternalBlockSpec from_json(const Json& j);
};

struct ProcessResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

// Runs `spec.command spec.args...` with `input` on stdin and collects
// stdout/stderr. The child is killed when the deadline passes. Throws
// Timeout, ChildFailed (spawn failure or signal death).
ProcessResult run_process(const ExternalBlockSpec& spec, const std::string& input);

// Sends the meta-model as a checkpoint document and applies the reply
// {commits:[{parent?, edge, stage, payload, metrics, marks?}], config_changes:{}}.
// A commit without "parent" hangs off the current focus: the same stage for
// a VARIATION, the nearest earlier stage for a SPECIALIZATION.
// Throws ChildFailed, Timeout, ProtocolError.
MetaModel run_external_block(const ExternalBlockSpec& spec, MetaModel mm, const Actor& actor);

// Accuracy from an external evaluator ({network, precision} in,
// {accuracy} out); resources and parts come from the reference estimator.
class ExternalBackend : public surrogate::Backend {
 public:
  ExternalBackend(ExternalBlockSpec spec, surrogate::ReferenceBackend estimator)
      : spec_(std::move(spec)), estimator_(std::move(estimator)) {}

  double evaluate(const surrogate::NetworkModel& network, const surrogate::PrecisionConfig* precision) const override;
  surrogate::ResourceReport estimate(const surrogate::NetworkModel& network,
                                     const surrogate::PrecisionConfig& precision) const override {
    return estimator_.estimate(network, precision);
  }
  const surrogate::FpgaPart& part(const std::string& name) const override { return estimator_.part(name); }

 private:
  ExternalBlockSpec spec_;
  surrogate::ReferenceBackend estimator_;
};

}  // namespace metaml
