// isrlab: assemble, encrypt, run, attack, analyze and bench programs for the
// encrypted-fetch simulator.
//
// Exit codes: 0 success (fault outcomes included), 1 domain error, 2 usage.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "isrlab/analysis.hpp"
#include "isrlab/attack.hpp"
#include "isrlab/container.hpp"
#include "isrlab/crypto.hpp"
#include "isrlab/engine.hpp"
#include "isrlab/json_io.hpp"
#include "isrlab/program.hpp"

namespace fs = std::filesystem;
using namespace isrlab;

namespace {

struct Config {
  std::string seed = "00000000000000000000000000000000";
  std::uint64_t step_limit = exec::kDefaultStepLimit;
  std::uint64_t decrypt_cost = 0;
  std::uint64_t switch_cost = 0;
  std::string format;
  std::string out;

  exec::CostModel cost() const { return {decrypt_cost, switch_cost}; }
  crypto::Key128 master_seed() const { return crypto::Key128::from_hex(seed); }
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void emit(const Config& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::trunc);
  if (!f) throw Error("cannot write " + cfg.out);
  f << text;
}

std::string format_or(const Config& cfg, const std::string& fallback,
                      std::initializer_list<std::string_view> allowed) {
  const std::string f = cfg.format.empty() ? fallback : cfg.format;
  if (std::find(allowed.begin(), allowed.end(), f) == allowed.end()) {
    throw UsageError("--format " + f + " is not supported by this command");
  }
  return f;
}

Image assemble_file(const fs::path& path, Addr text_base) {
  return layout_image(parse_assembly(read_text_file(path)), text_base);
}

std::string human_report(const exec::RunReport& r, const exec::CostModel& cost) {
  std::ostringstream os;
  os << "outcome:   " << exec::outcome_name(r.outcome) << '\n';
  if (r.fault_pc) {
    os << "fault pc:  0x" << std::hex << *r.fault_pc << "  word 0x" << std::setw(8) << std::setfill('0')
       << r.fault_word->bits << std::dec << std::setfill(' ') << '\n';
  }
  if (r.memory_fault_addr) os << "bad addr:  0x" << std::hex << *r.memory_fault_addr << std::dec << '\n';
  const auto& c = r.counters;
  os << "retired:   " << c.instructions_retired << "\ntransfers: " << c.control_transfers
     << "\nswitches:  " << c.key_switches << "\nkeystream: " << c.keystream_invocations
     << "\ncycles:    " << c.cycles(cost) << "\ndigest:    " << hex64(r.digest) << '\n';
  for (int i = 0; i < 32; ++i) {
    os << "x" << std::left << std::setw(2) << i << std::right << " = 0x" << std::hex << std::setw(8)
       << std::setfill('0') << r.regs[static_cast<std::size_t>(i)] << std::dec << std::setfill(' ')
       << ((i % 4 == 3) ? "\n" : "   ");
  }
  return os.str();
}

int cmd_assemble(const Config& cfg, const std::string& in, std::uint32_t text_base) {
  const Image img = assemble_file(in, text_base);
  const fs::path out = cfg.out.empty() ? fs::path(in).replace_extension(".img") : fs::path(cfg.out);
  write_file(out, serialize(img));
  std::cerr << "wrote " << out.string() << ": " << img.text_words() << " instructions, "
            << img.cfg.blocks.size() << " blocks, " << img.cfg.edges.size() << " edges\n";
  return 0;
}

int cmd_encrypt(const Config& cfg, const std::string& in) {
  const Image img = parse_image(read_file(in));
  const auto schedule = crypto::gen_keys(img.cfg, cfg.master_seed());
  const auto e = crypto::encrypt_image(img, schedule);
  const fs::path out = cfg.out.empty() ? fs::path(in).replace_extension(".eimg") : fs::path(cfg.out);
  write_file(out, serialize(e));
  std::cerr << "wrote " << out.string() << ": " << e.patch_table.size() << " edge patches\n";
  return 0;
}

int cmd_run(const Config& cfg, const std::string& in, bool with_trace) {
  const auto fmt = format_or(cfg, "json", {"json", "human"});
  const auto c = parse_container(read_file(in));
  exec::EngineOptions opts;
  opts.record_trace = with_trace;
  auto engine = std::holds_alternative<Image>(c)
                    ? exec::Engine::plaintext(std::get<Image>(c), std::get<Image>(c).entry, opts)
                    : exec::Engine::encrypted(std::get<crypto::EncryptedImage>(c), opts);
  const auto report = engine.run(cfg.step_limit);
  if (fmt == "human") {
    emit(cfg, human_report(report, cfg.cost()));
    return 0;
  }
  auto j = io::to_json(report, cfg.cost());
  if (with_trace) {
    auto t = io::json::array();
    for (const auto& e : engine.trace()) t.push_back({{"pc", e.pc}, {"instr", isa::to_string(e.instr)}});
    j["trace"] = std::move(t);
  }
  emit(cfg, j.dump(2) + "\n");
  return 0;
}

int cmd_attack(const Config& cfg, const std::string& in, const std::string& scenario_path,
               const std::string& kind, std::uint64_t trials, std::uint64_t attack_seed,
               const std::string& curve) {
  const auto e = parse_encrypted(read_file(in));
  if (trials > 0) {
    if (!scenario_path.empty()) throw UsageError("give either a scenario file or --trials, not both");
    const auto k = attack::kind_from_name(kind);
    if (!k) throw UsageError("--kind must be one of code-injection, rogue-edge, mid-block-entry, patch-replay");
    const auto fmt = format_or(cfg, "csv", {"csv", "json"});
    const auto samples = attack::survival_trials(e, *k, trials, attack_seed, cfg.step_limit);
    const auto fit = analysis::fit_survival(attack::latencies(samples), isa::exact_valid_decode_fraction());
    if (!curve.empty()) {
      std::ofstream f(curve, std::ios::trunc);
      if (!f) throw Error("cannot write " + curve);
      f << io::survival_csv(fit);
    }
    if (fmt == "csv") {
      emit(cfg, io::trials_csv(samples));
    } else {
      emit(cfg, io::to_json(fit).dump(2) + "\n");
    }
    return 0;
  }
  if (scenario_path.empty()) throw UsageError("attack needs a scenario file or --trials N");
  format_or(cfg, "json", {"json"});
  const auto scenarios = io::scenarios_from_text(read_text_file(scenario_path));
  auto results = io::json::array();
  for (const auto& s : scenarios) {
    auto j = io::to_json(attack::run_attack(e, s, attack_seed, cfg.step_limit), cfg.cost());
    j["kind"] = attack::kind_name(s.kind);
    if (!s.program.empty()) j["program"] = s.program;
    results.push_back(std::move(j));
  }
  emit(cfg, (scenarios.size() == 1 ? results[0] : results).dump(2) + "\n");
  return 0;
}

int cmd_analyze(const Config& cfg, const std::string& img_path, const std::string& eimg_path) {
  const auto fmt = format_or(cfg, "json", {"json", "human"});
  const auto d = analysis::diversification_report(parse_image(read_file(img_path)),
                                                  parse_encrypted(read_file(eimg_path)));
  if (fmt == "json") {
    emit(cfg, io::to_json(d).dump(2) + "\n");
    return 0;
  }
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << "plaintext entropy:   " << d.plaintext_entropy
     << " bits/byte\nciphertext entropy:  " << d.ciphertext_entropy
     << " bits/byte\ndistinct ciphertext: " << d.distinct_ciphertext_words_fraction
     << "\nrepeated-instruction diversification: " << d.repeated_instruction_diversification << " over "
     << d.repeated_pairs << " pairs\nciphertext decode failures: " << d.ciphertext_decode_failure_fraction
     << "\nvalid-decode p:      " << std::setprecision(6) << d.valid_decode_p << '\n';
  emit(cfg, os.str());
  return 0;
}

struct BenchRow {
  std::string program;
  exec::RunReport plain;
  exec::RunReport enc;
  double overhead = 0;
};

int cmd_bench(const Config& cfg, const std::string& dir) {
  const auto fmt = format_or(cfg, "csv", {"csv", "json", "human"});
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".s") files.push_back(entry.path());
  }
  if (files.empty()) throw Error("no .s programs in " + dir);
  std::sort(files.begin(), files.end());

  const auto seed = cfg.master_seed();
  std::vector<std::future<BenchRow>> jobs;
  for (const auto& f : files) {
    jobs.push_back(std::async(std::launch::async, [&cfg, f, seed] {
      const Image img = assemble_file(f, 0);
      const auto e = crypto::encrypt_image(img, crypto::gen_keys(img.cfg, seed));
      BenchRow r{f.filename().string(), exec::run_plaintext(img, img.entry, cfg.step_limit),
                 exec::run_encrypted(e, cfg.step_limit), 0};
      r.overhead = exec::overhead_report(r.plain, r.enc, cfg.cost());
      return r;
    }));
  }
  std::vector<BenchRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());

  std::ostringstream os;
  if (fmt == "json") {
    auto arr = io::json::array();
    for (const auto& r : rows) {
      arr.push_back({{"program", r.program},
                     {"plain", io::to_json(r.plain, cfg.cost())},
                     {"encrypted", io::to_json(r.enc, cfg.cost())},
                     {"overhead", r.overhead}});
    }
    os << arr.dump(2) << '\n';
  } else {
    const char sep = fmt == "csv" ? ',' : '\t';
    os << "program" << sep << "retired" << sep << "control_transfers" << sep << "key_switches" << sep
       << "keystream_invocations" << sep << "plain_cycles" << sep << "enc_cycles" << sep << "overhead\n";
    for (const auto& r : rows) {
      const auto& c = r.enc.counters;
      os << r.program << sep << c.instructions_retired << sep << c.control_transfers << sep << c.key_switches
         << sep << c.keystream_invocations << sep << r.plain.counters.cycles(cfg.cost()) << sep
         << c.cycles(cfg.cost()) << sep << std::setprecision(10) << r.overhead << '\n';
    }
  }
  emit(cfg, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Encrypted-fetch ISA laboratory: assemble, encrypt, run, attack, analyze, bench"};
  app.require_subcommand(1);
  Config cfg;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "128-bit master seed as 32 hex digits")->envname("ISRLAB_SEED");
    sub->add_option("--step-limit", cfg.step_limit, "Maximum retired instructions");
    sub->add_option("--decrypt-cost", cfg.decrypt_cost, "Cycles per keystream invocation");
    sub->add_option("--switch-cost", cfg.switch_cost, "Cycles per key switch");
    sub->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"json", "csv", "human"}));
    sub->add_option("--out", cfg.out, "Output path");
  };

  std::string in, in2;
  std::uint32_t text_base = 0;
  bool with_trace = false;
  std::string kind = "rogue-edge", curve;
  std::uint64_t trials = 0, attack_seed = 0;

  auto* assemble = app.add_subcommand("assemble", "Assemble a .s file into a .img image");
  common(assemble);
  assemble->add_option("input", in, "Assembly source (.s)")->required()->check(CLI::ExistingFile);
  assemble->add_option("--text-base", text_base, "Load address of the text segment");

  auto* encrypt = app.add_subcommand("encrypt", "Encrypt a .img image into a .eimg image");
  common(encrypt);
  encrypt->add_option("input", in, "Plaintext image (.img)")->required()->check(CLI::ExistingFile);

  auto* run = app.add_subcommand("run", "Execute a .img or .eimg image");
  common(run);
  run->add_option("input", in, "Image (.img or .eimg)")->required()->check(CLI::ExistingFile);
  run->add_flag("--trace", with_trace, "Include the retired-instruction trace");

  auto* attack = app.add_subcommand("attack", "Run attack scenarios against a .eimg image");
  common(attack);
  attack->add_option("input", in, "Encrypted image (.eimg)")->required()->check(CLI::ExistingFile);
  attack->add_option("scenario", in2, "Scenario JSON file")->check(CLI::ExistingFile);
  attack->add_option("--trials", trials, "Run N randomised trials instead of a scenario file");
  attack->add_option("--kind", kind, "Attack kind for --trials");
  attack->add_option("--attack-seed", attack_seed, "64-bit harness seed");
  attack->add_option("--curve", curve, "Write the survival curve CSV here (with --trials)");

  auto* analyze = app.add_subcommand("analyze", "Diversification report for an image pair");
  common(analyze);
  analyze->add_option("image", in, "Plaintext image (.img)")->required()->check(CLI::ExistingFile);
  analyze->add_option("eimage", in2, "Encrypted image (.eimg)")->required()->check(CLI::ExistingFile);

  auto* bench = app.add_subcommand("bench", "Plaintext vs encrypted overhead for every .s in a directory");
  common(bench);
  bench->add_option("corpus", in, "Directory of .s programs")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
    if (cfg.seed.size() != 32 ||
        !std::all_of(cfg.seed.begin(), cfg.seed.end(), [](unsigned char c) { return std::isxdigit(c); })) {
      throw UsageError("--seed must be exactly 32 hex digits");
    }
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*assemble) return cmd_assemble(cfg, in, text_base);
    if (*encrypt) return cmd_encrypt(cfg, in);
    if (*run) return cmd_run(cfg, in, with_trace);
    if (*attack) return cmd_attack(cfg, in, in2, kind, trials, attack_seed, curve);
    if (*analyze) return cmd_analyze(cfg, in, in2);
    if (*bench) return cmd_bench(cfg, in);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
