// Runs the built `osd` executable as a subprocess.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(OSD_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("osd_cli_") +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("diarize --out x.rttm").code, 1);
  EXPECT_EQ(run("score --ref a.rttm --hyp b.rttm --collar abc").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, SimulateDiarizeScore) {
  const std::string sim = "simulate --speakers 3 --duration 120 --seed 42 --noise 0.05 "
                          "--out-embeddings " + p("s.sdeb") + " --out-ref " + p("ref.rttm");
  ASSERT_EQ(run(sim).code, 0);
  const std::string first = slurp(p("s.sdeb"));
  ASSERT_EQ(run(sim).code, 0);
  EXPECT_EQ(slurp(p("s.sdeb")), first);

  ASSERT_EQ(run("diarize --embeddings " + p("s.sdeb") + " --out " + p("hyp.rttm")).code, 0);
  const Result same = run("score --ref " + p("hyp.rttm") + " --hyp " + p("hyp.rttm"));
  EXPECT_EQ(same.code, 0);
  EXPECT_NE(same.out.find("der=0.00\n"), std::string::npos);

  const Result real = run("score --ref " + p("ref.rttm") + " --hyp " + p("hyp.rttm") +
                          " --collar 0.25");
  EXPECT_EQ(real.code, 0);
  EXPECT_NE(real.out.find("jer="), std::string::npos);
}

TEST_F(Cli, SimulateSingleSpeakerAndConfigFile) {
  std::ofstream(p("spec.txt")) << "n_speakers = 2\nduration = 30\n";
  ASSERT_EQ(run("simulate --config " + p("spec.txt") + " --speakers 1 --out-embeddings " +
                p("s.sdeb") + " --out-ref " + p("ref.rttm"))
                .code,
            0);
  std::ifstream is(p("ref.rttm"));
  std::string line;
  while (std::getline(is, line)) EXPECT_NE(line.find(" S0 "), std::string::npos);
}

TEST_F(Cli, DataErrorsExitTwo) {
  std::ofstream(p("bad.sdeb")) << "nope";
  EXPECT_EQ(run("diarize --embeddings " + p("bad.sdeb") + " --out " + p("h.rttm")).code, 2);
  std::ofstream(p("r.rttm")) << "SPEAKER f 1 0 1 <NA> <NA> a <NA>\n";
  EXPECT_EQ(run("score --ref " + p("r.rttm") + " --hyp " + p("r.rttm")).code, 2);
  std::ofstream(p("empty.rttm")) << "";
  EXPECT_EQ(run("score --ref " + p("empty.rttm") + " --hyp " + p("empty.rttm")).code, 2);
}

TEST_F(Cli, EmptyStreamGivesEmptyRttm) {
  std::ofstream(p("e.sdeb"), std::ios::binary) << "SDEB1\n256\n0\n";
  EXPECT_EQ(run("diarize --embeddings " + p("e.sdeb") + " --out " + p("h.rttm")).code, 0);
  EXPECT_EQ(slurp(p("h.rttm")), "");
}

TEST_F(Cli, BenchTable) {
  ASSERT_EQ(run("simulate --duration 30 --out-embeddings " + p("s.sdeb") + " --out-ref " +
                p("r.rttm"))
                .code,
            0);
  const Result r = run("bench --embeddings " + p("s.sdeb") + " --n-ckpt 60,120 --repeats 1");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("N_ckpt"), std::string::npos);
  EXPECT_NE(r.out.find("    60  "), std::string::npos);
  EXPECT_NE(r.out.find("   120  "), std::string::npos);
}

}  // namespace
