#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <sstream>

#include "isrlab/container.hpp"
#include "isrlab/engine.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
namespace ts = testing_support;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(ISRLAB_CLI_PATH) + "' " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("isrlab_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return "'" + (dir_ / name).string() + "'"; }
  std::string corpus(const std::string& name) const { return "'" + (ts::corpus_dir() / name).string() + "'"; }

  void build_fib() {
    ASSERT_EQ(cli("assemble " + corpus("fib.s") + " --out " + path("fib.img")).code, 0);
    ASSERT_EQ(cli("encrypt " + path("fib.img") + " --out " + path("fib.eimg")).code, 0);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, RunEncryptedFib) {
  build_fib();
  const auto r = cli("run " + path("fib.eimg"));
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["outcome"], "halt");
  EXPECT_EQ(j["regs"][10], 55);
  EXPECT_EQ(cli("run " + path("fib.img")).out, cli("run " + path("fib.img")).out);
}

TEST_F(Cli, EncryptIsDeterministicPerSeed) {
  ASSERT_EQ(cli("assemble " + corpus("gcd.s") + " --out " + path("g.img")).code, 0);
  const std::string seed = "--seed 0123456789abcdef0123456789abcdef";
  ASSERT_EQ(cli("encrypt " + path("g.img") + " " + seed + " --out " + path("a.eimg")).code, 0);
  ASSERT_EQ(cli("encrypt " + path("g.img") + " " + seed + " --out " + path("b.eimg")).code, 0);
  ASSERT_EQ(cli("encrypt " + path("g.img") + " --out " + path("c.eimg"),
                "ISRLAB_SEED=0123456789abcdef0123456789abcdef").code, 0);
  ASSERT_EQ(cli("encrypt " + path("g.img") + " --out " + path("d.eimg")).code, 0);
  const auto a = isrlab::read_file(dir_ / "a.eimg");
  EXPECT_EQ(a, isrlab::read_file(dir_ / "b.eimg"));
  EXPECT_EQ(a, isrlab::read_file(dir_ / "c.eimg"));
  EXPECT_NE(a, isrlab::read_file(dir_ / "d.eimg"));
}

TEST_F(Cli, BenchWritesOneSortedRowPerProgram) {
  const auto r = cli("bench '" + ts::corpus_dir().string() + "' --decrypt-cost 1 --switch-cost 4");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("program,", 0), 0u);
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    names.push_back(line.substr(0, line.find(',')));
    // fib: 62 retired, 62 keystream words, 13 switches.
    if (names.back() == "fib.s") {
      EXPECT_NEAR(std::stod(line.substr(line.rfind(',') + 1)), 114.0 / 62.0, 1e-9);
    }
  }
  auto sorted = names;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(names, sorted);
  EXPECT_EQ(names.size(), ts::corpus_names().size());
}

TEST_F(Cli, AttackScenarioAndTrials) {
  build_fib();
  const auto s = cli("attack " + path("fib.eimg") + " '" + (ts::source_dir() / "scenarios" / "fib.json").string() + "'");
  ASSERT_EQ(s.code, 0);
  const auto j = nlohmann::json::parse(s.out);
  ASSERT_TRUE(j.is_array());
  EXPECT_TRUE(j[0]["detected"].get<bool>());

  const auto t = cli("attack " + path("fib.eimg") + " --trials 100 --kind mid-block-entry --curve " + path("c.csv"));
  ASSERT_EQ(t.code, 0);
  EXPECT_EQ(std::count(t.out.begin(), t.out.end(), '\n'), 101);
  EXPECT_EQ(isrlab::read_text_file(dir_ / "c.csv").rfind("k,empirical,model\n1,", 0), 0u);
}

TEST_F(Cli, AnalyzeAndHumanFormat) {
  build_fib();
  const auto a = cli("analyze " + path("fib.img") + " " + path("fib.eimg"));
  ASSERT_EQ(a.code, 0);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_GT(j["ciphertext_entropy"].get<double>(), j["plaintext_entropy"].get<double>());
  const auto h = cli("run " + path("fib.eimg") + " --format human");
  ASSERT_EQ(h.code, 0);
  EXPECT_NE(h.out.find("outcome:   halt"), std::string::npos);
}

TEST_F(Cli, FaultsAreSuccessfulRuns) {
  ASSERT_EQ(cli("assemble " + corpus("sum_array.s") + " --out " + path("s.img")).code, 0);
  const auto r = cli("run " + path("s.img") + " --step-limit 3");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["outcome"], "step-limit");
}

TEST_F(Cli, ExitCodes) {
  build_fib();
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("run").code, 2);
  EXPECT_EQ(cli("run " + path("missing.img")).code, 2);
  EXPECT_EQ(cli("run " + path("fib.img") + " --bogus").code, 2);
  EXPECT_EQ(cli("encrypt " + path("fib.img") + " --seed 1234").code, 2);
  EXPECT_EQ(cli("run " + path("fib.img") + " --format csv").code, 2);
  EXPECT_EQ(cli("run " + path("fib.img") + " --format xml").code, 2);
  EXPECT_EQ(cli("attack " + path("fib.eimg")).code, 2);
  EXPECT_EQ(cli("attack " + path("fib.eimg") + " --trials 10 --kind rop").code, 2);
  // Domain errors.
  {
    std::ofstream(dir_ / "bad.s") << "addi a0, zero\n";
  }
  EXPECT_EQ(cli("assemble " + path("bad.s")).code, 1);
  EXPECT_EQ(cli("run " + corpus("fib.s")).code, 1);  // not a container
  EXPECT_EQ(cli("encrypt " + path("fib.eimg")).code, 1);
  EXPECT_EQ(cli("--help").code, 0);
}
