#pragma once

#include <stdexcept>
#include <string>

namespace metaml {

// Base of every engine error. `kind()` is the stable name used in logs,
// result files and CLI messages.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define METAML_DEFINE_ERROR(Name)                                        \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(#Name, what) {}       \
  };

// metamodel
METAML_DEFINE_ERROR(InvalidKey)
METAML_DEFINE_ERROR(InvalidValue)
METAML_DEFINE_ERROR(MissingParam)
METAML_DEFINE_ERROR(LineageViolation)
METAML_DEFINE_ERROR(UnknownModel)
METAML_DEFINE_ERROR(UnrelatedMetaModels)
METAML_DEFINE_ERROR(IoError)
METAML_DEFINE_ERROR(CorruptCheckpoint)

// flowgraph
METAML_DEFINE_ERROR(DuplicateType)
METAML_DEFINE_ERROR(UnknownType)
METAML_DEFINE_ERROR(DuplicateInstance)
METAML_DEFINE_ERROR(UnknownInstance)
METAML_DEFINE_ERROR(ChildFailed)
METAML_DEFINE_ERROR(Timeout)
METAML_DEFINE_ERROR(ProtocolError)

// scheduler
METAML_DEFINE_ERROR(ValidationFailed)
METAML_DEFINE_ERROR(FlowDiverged)
METAML_DEFINE_ERROR(NoStopReached)

// kblocks
METAML_DEFINE_ERROR(PredicateError)
METAML_DEFINE_ERROR(ActionError)
METAML_DEFINE_ERROR(MissingMetric)
METAML_DEFINE_ERROR(MissingBranch)
METAML_DEFINE_ERROR(CallbackError)
METAML_DEFINE_ERROR(UnknownControl)

// oblocks / surrogate
METAML_DEFINE_ERROR(MissingFocus)
METAML_DEFINE_ERROR(BackendError)
METAML_DEFINE_ERROR(DegenerateModel)
METAML_DEFINE_ERROR(NoWeightsLayer)
METAML_DEFINE_ERROR(UnknownPreset)
METAML_DEFINE_ERROR(UnknownPart)

#undef METAML_DEFINE_ERROR

}  // namespace metaml
