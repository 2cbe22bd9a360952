#include "isrlab/attack.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <thread>

namespace isrlab::attack {

using exec::Engine;
using exec::Outcome;
using isa::Instruction;
using isa::Mnemonic;

std::string_view kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::CodeInjection: return "code-injection";
    case AttackKind::RogueEdge: return "rogue-edge";
    case AttackKind::MidBlockEntry: return "mid-block-entry";
    case AttackKind::PatchReplay: return "patch-replay";
  }
  return "?";
}

std::optional<AttackKind> kind_from_name(std::string_view name) {
  for (auto k : {AttackKind::CodeInjection, AttackKind::RogueEdge, AttackKind::MidBlockEntry,
                 AttackKind::PatchReplay}) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

Sentinel default_sentinel(const Image& image) {
  Sentinel s;
  s.addr = image.data.size() >= 4 ? image.data_base : kStackTop - kStackSize;
  return s;
}

std::vector<std::uint8_t> sentinel_payload(const Sentinel& s) {
  auto hi = [](std::uint32_t v) { return static_cast<std::int32_t>(((v + 0x800u) >> 12) & 0xFFFFFu); };
  auto lo = [](std::uint32_t v) {
    const std::int32_t l = static_cast<std::int32_t>(v & 0xFFFu);
    return l >= 0x800 ? l - 0x1000 : l;
  };
  const std::vector<Instruction> code = {
      {Mnemonic::LUI, 5, 0, 0, hi(s.addr)},
      {Mnemonic::ADDI, 5, 5, 0, lo(s.addr)},
      {Mnemonic::LUI, 6, 0, 0, hi(s.value)},
      {Mnemonic::ADDI, 6, 6, 0, lo(s.value)},
      {Mnemonic::SW, 0, 5, 6, 0},
      {Mnemonic::ECALL},
  };
  std::vector<std::uint8_t> out;
  for (const auto& in : code) {
    const auto w = isa::encode(in).bits;
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(w >> (8 * i)));
  }
  return out;
}

namespace {

std::string hex(Addr a) {
  std::ostringstream os;
  os << "0x" << std::hex << a;
  return os.str();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// rng() % n; the bias is irrelevant at these ranges and the result is
// identical across standard libraries.
std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

struct Watch {
  bool armed = false;
  bool hit = false;
  Sentinel sentinel;
};

exec::EngineOptions watched(const exec::EngineOptions& base, Watch& w) {
  exec::EngineOptions o = base;
  auto prev = base.on_store;
  o.on_store = [&w, prev](Addr a, std::uint32_t v) {
    if (prev) prev(a, v);
    if (w.armed && a == w.sentinel.addr && v == w.sentinel.value) w.hit = true;
  };
  return o;
}

// Picks or validates the target and applies the scenario's primitive.
Addr apply(Engine& e, const AttackScenario& sc, std::mt19937_64& rng, const std::vector<std::uint8_t>& payload) {
  const auto& cfg = e.cfg();
  const auto cur = e.state().cur_block;
  auto pick = [&](const std::vector<Addr>& candidates, const char* what) {
    if (candidates.empty()) throw HarnessError(std::string("no candidate target for ") + what);
    return candidates[draw(rng, candidates.size())];
  };

  switch (sc.kind) {
    case AttackKind::CodeInjection: {
      if (payload.empty() || payload.size() % 4 != 0) {
        throw HarnessError("code-injection payload must be a non-empty multiple of 4 bytes");
      }
      Addr t = 0;
      if (sc.target) {
        t = *sc.target;
      } else {
        const Addr lo = kStackTop - kStackSize;
        const std::uint64_t slots = (kStackSize / 2 - payload.size()) / 4;
        t = lo + static_cast<Addr>(4 * draw(rng, slots));
      }
      if (t % 4 != 0 || !e.state().mem.writable(t, static_cast<std::uint32_t>(payload.size()))) {
        throw HarnessError("code-injection target " + hex(t) + " is not writable memory");
      }
      e.poke(t, payload);
      e.set_pc(t);
      return t;
    }
    case AttackKind::RogueEdge: {
      Addr t = 0;
      if (sc.target) {
        t = *sc.target;
        if (!cfg.block_at_entry(t)) throw HarnessError("rogue-edge target " + hex(t) + " is not a block entry");
      } else {
        std::vector<Addr> c;
        for (const auto& b : cfg.blocks) {
          if (cur && (b.id == *cur || cfg.has_edge(*cur, b.id))) continue;
          c.push_back(b.entry_addr);
        }
        t = pick(c, "rogue-edge");
      }
      e.set_pc(t);
      return t;
    }
    case AttackKind::MidBlockEntry: {
      Addr t = 0;
      if (sc.target) {
        t = *sc.target;
        if (t % 4 != 0 || !cfg.block_containing(t) || cfg.block_at_entry(t)) {
          throw HarnessError("mid-block-entry target " + hex(t) + " is not inside a block body");
        }
      } else {
        std::vector<Addr> c;
        for (const auto& b : cfg.blocks) {
          if (cur && b.id == *cur) continue;
          for (std::uint32_t m = 1; m < b.length_words; ++m) c.push_back(b.entry_addr + 4 * m);
        }
        t = pick(c, "mid-block-entry");
      }
      e.set_pc(t);
      return t;
    }
    case AttackKind::PatchReplay: {
      if (!e.is_encrypted()) throw HarnessError("patch-replay needs an encrypted image");
      if (!cur) throw HarnessError("patch-replay: no current block");
      std::vector<const crypto::EdgePatch*> c;
      for (const auto& p : e.patch_table()) {
        if (p.source_block == *cur || e.has_patch(*cur, p.target_entry)) continue;
        if (sc.target && p.target_entry != *sc.target) continue;
        c.push_back(&p);
      }
      if (c.empty()) {
        throw HarnessError("patch-replay: no patch from another source block" +
                           (sc.target ? " targets " + hex(*sc.target) : std::string()));
      }
      const auto* p = c[draw(rng, c.size())];
      // Forge the table record (current block -> target) from someone else's patch.
      e.insert_patch(*cur, p->target_entry, p->patch);
      e.set_pc(p->target_entry);
      return p->target_entry;
    }
  }
  throw HarnessError("unknown attack kind");
}

AttackOutcome execute(Engine& e, Watch& watch, const AttackScenario& sc, const Image& image,
                      std::uint64_t seed, std::uint64_t step_limit) {
  if (sc.target && *sc.target % 4 != 0) throw HarnessError("target " + hex(*sc.target) + " is not 4-byte aligned");
  watch.sentinel = sc.sentinel.value_or(default_sentinel(image));
  const auto payload = sc.payload.empty() && sc.kind == AttackKind::CodeInjection
                           ? sentinel_payload(watch.sentinel)
                           : sc.payload;

  AttackOutcome out;
  std::mt19937_64 rng(seed);
  if (sc.trigger_step < step_limit) {
    e.run_until_retired(sc.trigger_step);
    if (!e.stopped()) {
      out.triggered = true;
      out.target = apply(e, sc, rng, payload);
      watch.armed = true;
    }
  }
  const std::uint64_t at_trigger = e.state().counters.instructions_retired;
  out.report = e.run(step_limit);
  out.hijack_succeeded = watch.hit;
  if (out.triggered) {
    const auto o = out.report.outcome;
    if (o == Outcome::IntegrityFault || o == Outcome::MemoryFault) {
      out.instructions_until_fault = out.report.counters.instructions_retired - at_trigger + 1;
    }
    out.detected = o == Outcome::IntegrityFault;
    if (!out.detected && o != Outcome::MemoryFault) out.instructions_until_fault.reset();
  }
  return out;
}

}  // namespace

AttackOutcome run_attack(const crypto::EncryptedImage& eimage, const AttackScenario& scenario,
                         std::uint64_t seed, std::uint64_t step_limit, const exec::EngineOptions& options) {
  Watch watch;
  auto e = Engine::encrypted(eimage, watched(options, watch));
  return execute(e, watch, scenario, eimage.image, seed, step_limit);
}

AttackOutcome run_attack_plaintext(const Image& image, const AttackScenario& scenario, std::uint64_t seed,
                                   std::uint64_t step_limit) {
  if (scenario.kind == AttackKind::PatchReplay) throw HarnessError("patch-replay needs an encrypted image");
  Watch watch;
  auto e = Engine::plaintext(image, image.entry, watched({}, watch));
  return execute(e, watch, scenario, image, seed, step_limit);
}

std::vector<SurvivalSample> survival_trials(const crypto::EncryptedImage& eimage, AttackKind kind,
                                            std::uint64_t n_trials, std::uint64_t seed,
                                            std::uint64_t step_limit, const exec::EngineOptions& options) {
  if (n_trials == 0) throw HarnessError("survival_trials needs at least one trial");
  const auto baseline = exec::run_encrypted(eimage, step_limit);
  const std::uint64_t span = baseline.counters.instructions_retired;
  if (span == 0) throw HarnessError("program retires no instructions; nothing to attack");

  std::vector<SurvivalSample> out(n_trials);
  auto one = [&](std::uint64_t i) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(i)));
    // A trigger point can lack candidates (every block reachable from the
    // current one); redraw a bounded number of times.
    for (int attempt = 0;; ++attempt) {
      AttackScenario sc;
      sc.kind = kind;
      sc.trigger_step = draw(rng, span);
      try {
        const auto r = run_attack(eimage, sc, rng(), step_limit, options);
        SurvivalSample& s = out[i];
        s.trial = i;
        s.outcome = r.report.outcome;
        s.detected = r.detected;
        if (r.instructions_until_fault) {
          s.latency = *r.instructions_until_fault;
        } else {
          s.censored = true;
          s.latency = step_limit;
        }
        return;
      } catch (const HarnessError&) {
        if (attempt >= 63) throw;
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 16));
  if (workers == 1 || n_trials < 2 * workers) {
    for (std::uint64_t i = 0; i < n_trials; ++i) one(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::uint64_t i = w; i < n_trials; i += workers) one(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return out;
}

std::vector<std::uint64_t> latencies(const std::vector<SurvivalSample>& samples) {
  std::vector<std::uint64_t> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.latency);
  return v;
}

}  // namespace isrlab::attack
