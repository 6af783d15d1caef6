#include "commands.hpp"

#include "gblr/io.hpp"
#include "gblr/random.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gblr;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "gblr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json parse(const std::string& s) { return nlohmann::json::parse(s); }

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  [[nodiscard]] std::string operator/(const std::string& f) const { return (path / f).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == cli::kUsageError);
  CHECK(run({"frobnicate"}).code == cli::kUsageError);
  CHECK(run({"compress"}).code == cli::kUsageError);
  CHECK(run({"compress", "--input", "/nonexistent/file.bin", "--budget", "4"}).code == cli::kUsageError);
  CHECK(run({"mask-dump", "--input", "/nonexistent.gblr"}).code == cli::kUsageError);
  CHECK(run({"check", "--suite", "unknown"}).code == cli::kUsageError);
  CHECK(run({"--help"}).code == cli::kSuccess);
}

TEST_CASE("compress identity, zero budget and malformed input") {
  TempDir dir("gblr_cli_compress");
  io::write_dense(dir / "eye.bin", DenseMatrix::Identity(64, 64));
  const auto eye = run({"compress", "--input", dir / "eye.bin", "--output", dir / "eye.gaudi", "--budget", "256"});
  REQUIRE(eye.code == 0);
  CHECK(parse(eye.out)["relative_error"].get<double>() < 1e-3);
  CHECK(io::peek_format(dir / "eye.gaudi") == io::kGaudiFormat);

  const auto zero = run({"compress", "--input", dir / "eye.bin", "--budget", "0"});
  REQUIRE(zero.code == 0);
  const auto z = parse(zero.out);
  CHECK(z["flops"] == 0);
  CHECK(z["frobenius_error"].get<double>() == doctest::Approx(8.0));

  std::ofstream(dir / "junk.bin") << "{\"format\":\"gblr-dense\",\"rows\":3,\"cols\":3,\"dtype\":\"f32\",\"layout\":\"row-major\"}\nabc";
  const auto junk = run({"compress", "--input", dir / "junk.bin", "--budget", "4"});
  CHECK(junk.code == cli::kUsageError);
  CHECK(junk.err.find("payload") != std::string::npos);
}

TEST_CASE("config overrides flags and is validated") {
  TempDir dir("gblr_cli_config");
  Rng rng(1);
  io::write_dense(dir / "w.bin", random_dense(8, 8, rng));
  std::ofstream(dir / "c.json") << R"({"compress": {"budget": 0, "refine_iterations": 5}})";
  const auto r = run({"compress", "--input", dir / "w.bin", "--budget", "40", "--config", dir / "c.json"});
  REQUIRE(r.code == 0);
  CHECK(parse(r.out)["budget"].get<double>() == 0.0);
  CHECK(parse(r.out)["flops"] == 0);

  std::ofstream(dir / "bad.json") << R"({"compress": {"budget": "lots"}})";
  CHECK(run({"compress", "--input", dir / "w.bin", "--config", dir / "bad.json"}).code == cli::kUsageError);
  std::ofstream(dir / "unknown.json") << R"({"compress": {"budgte": 3}})";
  CHECK(run({"compress", "--input", dir / "w.bin", "--config", dir / "unknown.json"}).code == cli::kUsageError);
  std::ofstream(dir / "range.json") << R"({"train": {"batch_size": 0}})";
  CHECK(run({"train", "--config", dir / "range.json"}).code == cli::kUsageError);
  std::ofstream(dir / "syntax.json") << "{";
  CHECK(run({"train", "--config", dir / "syntax.json"}).code == cli::kUsageError);
}

TEST_CASE("train writes logs and checkpoints") {
  TempDir dir("gblr_cli_train");
  const auto r = run({"train", "--output", dir / "run", "--epochs", "6", "--seed", "3"});
  REQUIRE(r.code == 0);
  std::ifstream metrics(dir / "run/metrics.jsonl");
  std::vector<nlohmann::json> lines;
  for (std::string line; std::getline(metrics, line);) lines.push_back(parse(line));
  REQUIRE(lines.size() == 6);
  CHECK(lines.front()["sigma"] == 1.0);
  CHECK(lines.back()["sigma"] == 100.0);
  for (const char* key : {"epoch", "loss", "total_width", "sigma", "lambda", "flops"}) CHECK(lines[0].contains(key));
  CHECK(io::peek_format(dir / "run/layer0.gblr") == io::kFrozenFormat);
  CHECK(io::peek_format(dir / "run/layer0.gaudi") == io::kGaudiFormat);

  const auto dump = run({"mask-dump", "--input", dir / "run", "--output", dir / "masks", "--format", "csv"});
  REQUIRE(dump.code == 0);
  CHECK(fs::exists(dir / "masks/layer0.csv"));
  CHECK(fs::exists(dir / "masks/layer0_gaudi.csv"));
  const auto bench = run({"bench", "--input", dir / "run/layer0.gblr", "--trials", "10"});
  REQUIRE(bench.code == 0);
  CHECK(parse(bench.out)["counted_multiplications"] == parse(bench.out)["flops"]);
}

TEST_CASE("train with zero epochs emits the initial model") {
  TempDir dir("gblr_cli_train0");
  auto cfg = cli::default_train_config();
  cfg.train.epochs = 0;
  const auto a = cli::run_training(cfg);
  CHECK(a.result.log.empty());
  const auto r = run({"train", "--output", dir / "run", "--epochs", "0"});
  REQUIRE(r.code == 0);
  CHECK(fs::file_size(dir / "run/metrics.jsonl") == 0);
  const auto frozen = io::read_gblr(dir / "run/layer0.gblr");
  CHECK(frozen.structure() == freeze(a.result.model.layers[0].weight).structure());
}

TEST_CASE("check runs suites and reports failures") {
  const auto g = run({"check", "--suite", "gradients"});
  CHECK(g.code == 0);
  const auto report = parse(g.out);
  REQUIRE(report["suites"].size() == 1);
  CHECK(report["suites"][0]["suite"] == "gradients");
  const auto neg = run({"check", "--suite", "flops,sparsification", "--negative-control"});
  CHECK(neg.code == cli::kVerificationFailure);
}

TEST_CASE("mask dump examples") {
  TempDir dir("gblr_cli_dump");
  Rng rng(2);
  const GblrMatrix full(BlockStructure(6, 6, {Block{6, 0, 6, 0}}), {random_vector(6, rng)}, {random_vector(6, rng)});
  io::write_gblr(dir / "full.gblr", full);
  const auto r = run({"mask-dump", "--input", dir / "full.gblr", "--output", dir / "full.pgm"});
  REQUIRE(r.code == 0);
  CHECK(parse(r.out)[0]["rank"] == 1);
  std::ifstream pgm(dir / "full.pgm");
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  pgm >> magic >> w >> h >> maxval;
  CHECK(magic == "P2");
  CHECK(w == 6);
  CHECK(h == 6);
  for (int i = 0; i < 36; ++i) {
    int v = 0;
    pgm >> v;
    CHECK(v == 1);
  }

  const GblrMatrix two(BlockStructure(6, 6, {Block{3, 0, 3, 0}, Block{3, 2, 3, 2}}),
                       {random_vector(3, rng), random_vector(3, rng)}, {random_vector(3, rng), random_vector(3, rng)});
  const auto counts = cli::overlap_counts(two);
  CHECK(counts(2, 2) == 2);
  CHECK(counts(0, 0) == 1);
  CHECK(counts(5, 5) == 0);
  CHECK(counts(4, 4) == 1);

  const GblrMatrix planted = planted_gblr(16, 16, 4, 3, rng);
  const auto pc = cli::overlap_counts(planted);
  Eigen::MatrixXi cover = Eigen::MatrixXi::Zero(16, 16);
  for (const auto& b : planted.structure().blocks())
    for (int i = 0; i < b.row_width; ++i)
      for (int j = 0; j < b.col_width; ++j) cover((b.row_location + i) % 16, (b.col_location + j) % 16) = 1;
  CHECK((pc.array() > 0).cast<int>().matrix() == cover);

  std::ostringstream csv;
  cli::write_csv(csv, counts);
  CHECK(csv.str().substr(0, 12) == "1,1,1,0,0,0\n");
  CHECK(cli::numerical_rank(DenseMatrix::Zero(3, 3)) == 0);
  CHECK(cli::numerical_rank(DenseMatrix::Identity(4, 4)) == 4);
}

TEST_CASE("bench counts for a dense-equivalent matrix") {
  TempDir dir("gblr_cli_bench");
  Rng rng(3);
  const int n = 8, k = 8;
  const GblrMatrix g = random_gblr(BlockStructure(n, n, std::vector<Block>(k, Block{n, 0, n, 0})), rng);
  io::write_gblr(dir / "d.gblr", g);
  const auto r = run({"bench", "--input", dir / "d.gblr", "--trials", "5"});
  REQUIRE(r.code == 0);
  const auto j = parse(r.out);
  CHECK(j["counted_multiplications"] == 2 * k * n);
  CHECK(j["flops"] == 2 * k * n);
}
