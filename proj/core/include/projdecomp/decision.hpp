#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

namespace projdecomp {

enum class Verdict {
  FiniteSum,
  NotFiniteSum,
  StrongSum,
  NotStrongSum,
  PositiveCombination,
  NotPositiveCombination,
  Inconclusive,
};

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct DecisionReport {
  Verdict verdict = Verdict::Inconclusive;
  std::string condition;
  nlohmann::json witness = nlohmann::json::object();
};

nlohmann::json to_json(const DecisionReport& r);
DecisionReport report_from_json(const nlohmann::json& j);

}  // namespace projdecomp
