#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isrlab/crypto.hpp"
#include "isrlab/engine.hpp"

namespace isrlab::attack {

// Adversary model: at a chosen moment the attacker may write arbitrary
// memory (including the patch table) and set the pc. It knows the plaintext
// program and CFG, never the keys.
enum class AttackKind : std::uint8_t { CodeInjection, RogueEdge, MidBlockEntry, PatchReplay };

std::string_view kind_name(AttackKind k);
std::optional<AttackKind> kind_from_name(std::string_view name);

struct Sentinel {
  Addr addr = 0;
  std::uint32_t value = 0x41414141;
};

struct AttackScenario {
  AttackKind kind = AttackKind::RogueEdge;
  std::uint64_t trigger_step = 0;  // attack fires once this many instructions have retired
  std::vector<std::uint8_t> payload;  // plaintext machine code, code-injection only
  std::optional<Addr> target;  // drawn from the harness seed when absent
  std::optional<Sentinel> sentinel;
  std::string program;  // informational; which corpus program this targets
};

struct AttackOutcome {
  bool triggered = false;
  bool detected = false;  // ended in an integrity fault after the trigger
  std::optional<std::uint64_t> instructions_until_fault;  // fetches after the trigger, faulting one included
  bool hijack_succeeded = false;  // sentinel written with the attacker's value
  Addr target = 0;
  exec::RunReport report;
};

class HarnessError : public Error {
 public:
  using Error::Error;
};

/// Default sentinel for an image: the first data word, or the lowest stack
/// word when there is no data segment.
Sentinel default_sentinel(const Image& image);

/// Machine code that stores `s.value` to `s.addr` and halts.
std::vector<std::uint8_t> sentinel_payload(const Sentinel& s);

AttackOutcome run_attack(const crypto::EncryptedImage& eimage, const AttackScenario& scenario,
                         std::uint64_t seed, std::uint64_t step_limit = exec::kDefaultStepLimit,
                         const exec::EngineOptions& options = {});

/// The same scenario against the unprotected plaintext image. Patch-replay
/// has no meaning there and raises HarnessError.
AttackOutcome run_attack_plaintext(const Image& image, const AttackScenario& scenario, std::uint64_t seed,
                                   std::uint64_t step_limit = exec::kDefaultStepLimit);

struct SurvivalSample {
  std::uint64_t trial = 0;
  bool detected = false;
  bool censored = false;  // still running at step_limit or halted normally
  std::uint64_t latency = 0;  // step_limit when censored
  exec::Outcome outcome = exec::Outcome::StepLimit;
};

/// Randomised trials of one attack kind. Trial i draws its trigger point and
/// target from a generator seeded by (seed, i) alone, so results do not depend
/// on scheduling.
std::vector<SurvivalSample> survival_trials(const crypto::EncryptedImage& eimage, AttackKind kind,
                                            std::uint64_t n_trials, std::uint64_t seed,
                                            std::uint64_t step_limit = exec::kDefaultStepLimit,
                                            const exec::EngineOptions& options = {});

std::vector<std::uint64_t> latencies(const std::vector<SurvivalSample>& samples);

}  // namespace isrlab::attack
