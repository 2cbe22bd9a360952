#include "isrlab/json_io.hpp"

#include <cctype>
#include <iomanip>
#include <sstream>

#include "isrlab/container.hpp"

namespace isrlab::io {

namespace {

json opt(const auto& v) {
  if (!v) return nullptr;
  return *v;
}

std::uint64_t number(const json& j, const char* what) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    const auto v = j.get<std::int64_t>();
    if (v < 0) throw Error(std::string(what) + " must be non-negative");
    return static_cast<std::uint64_t>(v);
  }
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used, 0);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(std::string("bad number for ") + what + ": '" + s + "'");
  }
  throw Error(std::string(what) + " must be a number or a 0x string");
}

Addr address(const json& j, const char* what) {
  const auto v = number(j, what);
  if (v > 0xFFFFFFFFull) throw Error(std::string(what) + " exceeds 32 bits");
  return static_cast<Addr>(v);
}

}  // namespace

json to_json(const exec::RunReport& r, const exec::CostModel& cost) {
  const auto& c = r.counters;
  json j;
  j["outcome"] = exec::outcome_name(r.outcome);
  j["fault_pc"] = opt(r.fault_pc);
  j["fault_word"] = r.fault_word ? json(r.fault_word->bits) : json(nullptr);
  j["instructions_until_fault"] = opt(r.instructions_until_fault);
  j["memory_fault_addr"] = opt(r.memory_fault_addr);
  j["digest"] = hex64(r.digest);
  j["regs"] = r.regs;
  j["counters"] = {
      {"instructions_retired", c.instructions_retired},
      {"control_transfers", c.control_transfers},
      {"key_switches", c.key_switches},
      {"patch_lookups", c.patch_lookups},
      {"keystream_invocations", c.keystream_invocations},
      {"cycles", c.cycles(cost)},
  };
  return j;
}

json to_json(const attack::AttackOutcome& o, const exec::CostModel& cost) {
  return {
      {"triggered", o.triggered},
      {"detected", o.detected},
      {"instructions_until_fault", opt(o.instructions_until_fault)},
      {"hijack_succeeded", o.hijack_succeeded},
      {"target", o.target},
      {"report", to_json(o.report, cost)},
  };
}

json to_json(const analysis::DiversificationReport& d) {
  return {
      {"plaintext_entropy", d.plaintext_entropy},
      {"ciphertext_entropy", d.ciphertext_entropy},
      {"distinct_ciphertext_words_fraction", d.distinct_ciphertext_words_fraction},
      {"repeated_instruction_diversification", d.repeated_instruction_diversification},
      {"repeated_pairs", d.repeated_pairs},
      {"ciphertext_decode_failure_fraction", d.ciphertext_decode_failure_fraction},
      {"valid_decode_p", d.valid_decode_p},
  };
}

json to_json(const analysis::SurvivalFit& f) {
  json pts = json::array();
  for (const auto& p : f.points) {
    pts.push_back({{"k", p.k}, {"empirical", p.empirical}, {"model", p.model},
                   {"std_error", p.std_error}, {"within", p.within}});
  }
  return {{"points", pts}, {"max_abs_deviation", f.max_abs_deviation}, {"within_bounds", f.within_bounds}};
}

attack::AttackScenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw Error("scenario must be a JSON object");
  attack::AttackScenario s;
  const auto kind = j.at("kind").get<std::string>();
  const auto k = attack::kind_from_name(kind);
  if (!k) throw Error("unknown scenario kind '" + kind + "'");
  s.kind = *k;
  s.trigger_step = j.contains("trigger") ? number(j["trigger"], "trigger") : 0;
  if (j.contains("target") && !j["target"].is_null()) s.target = address(j["target"], "target");
  if (j.contains("payload") && !j["payload"].is_null()) s.payload = bytes_from_hex(j["payload"].get<std::string>());
  if (j.contains("sentinel") && !j["sentinel"].is_null()) {
    const auto& sj = j["sentinel"];
    attack::Sentinel sen;
    sen.addr = address(sj.at("addr"), "sentinel.addr");
    if (sj.contains("value")) sen.value = address(sj["value"], "sentinel.value");
    s.sentinel = sen;
  }
  if (j.contains("program")) s.program = j["program"].get<std::string>();
  return s;
}

std::vector<attack::AttackScenario> scenarios_from_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("scenario file is not valid JSON: ") + e.what());
  }
  std::vector<attack::AttackScenario> out;
  try {
    if (j.is_array()) {
      for (const auto& s : j) out.push_back(scenario_from_json(s));
    } else {
      out.push_back(scenario_from_json(j));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed scenario: ") + e.what());
  }
  return out;
}

std::string hex_bytes(const std::vector<std::uint8_t>& bytes) {
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (auto b : bytes) os << std::setw(2) << static_cast<int>(b);
  return os.str();
}

std::vector<std::uint8_t> bytes_from_hex(std::string_view hex) {
  std::string clean;
  for (char c : hex) {
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  }
  if (clean.size() % 2 != 0) throw Error("hex payload has odd length");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < clean.size(); i += 2) {
    const std::string byte = clean.substr(i, 2);
    if (!std::isxdigit(static_cast<unsigned char>(byte[0])) || !std::isxdigit(static_cast<unsigned char>(byte[1]))) {
      throw Error("invalid hex payload");
    }
    out.push_back(static_cast<std::uint8_t>(std::stoul(byte, nullptr, 16)));
  }
  return out;
}

std::string trials_csv(const std::vector<attack::SurvivalSample>& samples) {
  std::ostringstream os;
  os << "trial,detected,latency\n";
  for (const auto& s : samples) os << s.trial << ',' << (s.detected ? 1 : 0) << ',' << s.latency << '\n';
  return os.str();
}

std::string survival_csv(const analysis::SurvivalFit& fit) {
  std::ostringstream os;
  os << "k,empirical,model\n" << std::setprecision(12);
  for (const auto& p : fit.points) os << p.k << ',' << p.empirical << ',' << p.model << '\n';
  return os.str();
}

}  // namespace isrlab::io
