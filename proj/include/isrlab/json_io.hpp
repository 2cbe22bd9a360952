#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "isrlab/analysis.hpp"
#include "isrlab/attack.hpp"
#include "isrlab/engine.hpp"

namespace isrlab::io {

using nlohmann::json;

// Field names are stable; see docs/formats.md.
json to_json(const exec::RunReport& r, const exec::CostModel& cost = {});
json to_json(const attack::AttackOutcome& o, const exec::CostModel& cost = {});
json to_json(const analysis::DiversificationReport& d);
json to_json(const analysis::SurvivalFit& f);

/// Parses one scenario object, e.g.
///   {"kind": "rogue-edge", "trigger": 12, "target": "0x40"}
/// Addresses and values accept integers or "0x" strings; payload is hex.
attack::AttackScenario scenario_from_json(const json& j);
/// A file holds either one scenario object or an array of them.
std::vector<attack::AttackScenario> scenarios_from_text(std::string_view text);

std::string hex_bytes(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> bytes_from_hex(std::string_view hex);

/// "trial,detected,latency" rows, with a header.
std::string trials_csv(const std::vector<attack::SurvivalSample>& samples);
/// "k,empirical,model" rows, with a header.
std::string survival_csv(const analysis::SurvivalFit& fit);

}  // namespace isrlab::io
