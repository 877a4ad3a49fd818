#pragma once

#include <nlohmann/json.hpp>

#include "fermidyn/sector_algebra.hpp"

namespace fermidyn {

inline constexpr const char* kSchema = "fermidyn/1";

/// {rows, cols, entries: [[i, j, re, im], ...]} listing nonzeros only.
nlohmann::json block_to_json(const Block& b);
Block block_from_json(const nlohmann::json& j);

/// {schema, kind: "fock_operator", modes, nmax, grade, blocks: [{source, ...}]}
nlohmann::json to_json(const FockOperator& a);
/// Rebuilds on `space` when given (ShapeError on mismatch), otherwise on a
/// fresh space of the recorded size. Malformed input raises ConfigError.
FockOperator operator_from_json(const nlohmann::json& j, FockSpacePtr space = nullptr);

/// {schema, kind: "sector_decomposition", modes, nmax, level, convention,
///  components: [{m, rows, cols, entries}]}
nlohmann::json to_json(const SectorDecomposition& d);
SectorDecomposition decomposition_from_json(const nlohmann::json& j, FockSpacePtr space = nullptr);

}  // namespace fermidyn
