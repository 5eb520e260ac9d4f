// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sfbf {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::string selector;
  std::vector<CheckResult> checks;
  double elapsed_seconds = 0.0;

  bool passed() const;
  std::optional<CheckResult> first_failure() const;
  nlohmann::json to_json() const;
};

/// Suite names accepted by run_validation besides "all".
const std::vector<std::string>& validation_suites();

/// Runs one suite or "all". Throws InvalidInput for an unknown selector.
ValidationReport run_validation(std::string_view selector, std::uint64_t seed = 20240601);

}  // namespace sfbf
