#pragma once

// JSON forms of the library's persisted values.
//
//   ProductMeasure: {"components":[{"weights":[...],"positions":[...]}, ...]}
//   DeCheckpoint:   {"population":[[...]], "fitness":[...], "best_x":[...],
//                    "best_f":..., "best_history":[...], "generation":...,
//                    "evals":..., "seed":..., "rng_state":"..."}
//
// Non-finite reals are written as the strings "inf", "-inf" and "nan".

#include <string>

#include "json.hpp"
#include "ouq/measures.hpp"
#include "ouq/optimize.hpp"

namespace ouq {

/// Shortest decimal text that reads back to exactly x ("nan", "inf", "-inf"
/// for non-finite values).
std::string format_real(double x);

nlohmann::json encode_real(double x);
double decode_real(const nlohmann::json& j);

nlohmann::json to_json(const ProductMeasure& pm);
ProductMeasure product_measure_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DeCheckpoint& checkpoint);
DeCheckpoint checkpoint_from_json(const nlohmann::json& j);

/// Writes j.dump(2) plus a trailing newline. Throws std::runtime_error on I/O failure.
void write_json_file(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json_file(const std::string& path);

} // namespace ouq
