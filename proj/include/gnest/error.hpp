#pragma once

#include <stdexcept>
#include <string>

namespace gnest {

enum class Errc {
  malformed_partition,
  empty_vector,
  out_of_domain,
  no_convergence,
  not_a_contraction,
  spectral_condition_violated,
  singular_system,
  not_interior,
  parameter_out_of_box,
  degenerate_aggregate,
  infeasible_parameter_set,
  no_start,
  empty_group,
  invalid_graphon,
  invalid_game,
  config,
  io,
};

inline const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_partition: return "MalformedPartition";
    case Errc::empty_vector: return "EmptyVector";
    case Errc::out_of_domain: return "OutOfDomain";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::not_a_contraction: return "NotAContraction";
    case Errc::spectral_condition_violated: return "SpectralConditionViolated";
    case Errc::singular_system: return "SingularSystem";
    case Errc::not_interior: return "NotInterior";
    case Errc::parameter_out_of_box: return "ParameterOutOfBox";
    case Errc::degenerate_aggregate: return "DegenerateAggregate";
    case Errc::infeasible_parameter_set: return "InfeasibleParameterSet";
    case Errc::no_start: return "NoStart";
    case Errc::empty_group: return "EmptyGroup";
    case Errc::invalid_graphon: return "InvalidGraphon";
    case Errc::invalid_game: return "InvalidGame";
    case Errc::config: return "ConfigError";
    case Errc::io: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace gnest
