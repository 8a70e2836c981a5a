#pragma once

#include <json.hpp>

#include "memirl/fitting.hpp"
#include "memirl/irl.hpp"

namespace memirl::io {

using json = nlohmann::json;

/// {"kernel": "tanh_power", "alpha": [...], "d", "tau", "xbar" (number or null),
///  "use_innate", "s", "epsilon_floor", "memory_window": "inclusive" | "horizon_only"}
json model_to_json(const fitting::ModelSpec& m);
/// Accepts a bare model object or a fit report carrying one under "model".
/// Throws std::invalid_argument on missing or ill-typed fields.
fitting::ModelSpec model_from_json(const json& j);

json fit_report(const fitting::FitResult& r, const Series& series);
json learn_report(const irl::LearnResult& r, std::size_t window, long first_time);

/// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace memirl::io
