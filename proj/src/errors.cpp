#include "faultpred/errors.hpp"

namespace faultpred {

ExitCode exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return ExitCode::kNumeric;
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return ExitCode::kUsage;
  if (dynamic_cast<const ContractError*>(&e) != nullptr) return ExitCode::kUsage;
  return ExitCode::kData;
}

}  // namespace faultpred
