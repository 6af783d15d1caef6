#include "gblr/io.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <vector>

namespace gblr::io {
namespace {

using nlohmann::ordered_json;

static_assert(std::numeric_limits<float>::is_iec559, "payloads require IEEE-754 floats");

void put_f32(std::ostream& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  const unsigned char bytes[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                  static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

class PayloadReader {
 public:
  explicit PayloadReader(std::istream& in) : in_(in) {}

  double next() {
    unsigned char bytes[4];
    if (!in_.read(reinterpret_cast<char*>(bytes), 4)) throw FormatError("payload is shorter than the manifest declares");
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[3]) << 24);
    return static_cast<double>(std::bit_cast<float>(bits));
  }

  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw FormatError("payload is longer than the manifest declares");
  }

 private:
  std::istream& in_;
};

void write_manifest(std::ostream& out, const ordered_json& manifest) {
  out << manifest.dump() << '\n';
}

ordered_json read_manifest(std::istream& in, const char* expected) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing manifest line");
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  if (!j.is_object() || !j.contains("format")) throw FormatError("manifest has no format field");
  if (expected != nullptr && j.at("format") != expected)
    throw FormatError("expected format '" + std::string(expected) + "', found " + j.at("format").dump());
  if (j.contains("dtype") && j.at("dtype") != "f32") throw FormatError("unsupported dtype " + j.at("dtype").dump());
  return j;
}

template <class T>
T field(const ordered_json& j, const char* name) {
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest field '") + name + "': " + e.what());
  }
}

RealVector real_array(const ordered_json& j, const char* name, int expected) {
  const auto values = field<std::vector<double>>(j, name);
  if (static_cast<int>(values.size()) != expected)
    throw FormatError(std::string("manifest array '") + name + "' has the wrong length");
  return Eigen::Map<const RealVector>(values.data(), expected);
}

std::vector<double> to_vector(const RealVector& v) { return {v.data(), v.data() + v.size()}; }

template <class Fn>
void with_output(const std::filesystem::path& path, Fn fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  fn(out);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

template <class Fn>
auto with_input(const std::filesystem::path& path, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return fn(in);
}

}  // namespace

void write_dense(std::ostream& out, const DenseMatrix& m) {
  ordered_json j;
  j["format"] = kDenseFormat;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["dtype"] = "f32";
  j["layout"] = "row-major";
  write_manifest(out, j);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f32(out, m(i, c));
}

DenseMatrix read_dense(std::istream& in) {
  const auto j = read_manifest(in, kDenseFormat);
  const auto rows = field<long long>(j, "rows");
  const auto cols = field<long long>(j, "cols");
  if (rows < 0 || cols < 0) throw FormatError("negative dimensions");
  if (j.contains("layout") && j.at("layout") != "row-major") throw FormatError("only row-major layout is supported");
  DenseMatrix m(rows, cols);
  PayloadReader payload(in);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = payload.next();
  payload.expect_end();
  return m;
}

void write_gblr(std::ostream& out, const GblrMatrix& m) {
  ordered_json j;
  j["format"] = kFrozenFormat;
  j["m"] = m.rows();
  j["n"] = m.cols();
  j["K"] = m.blocks();
  j["dtype"] = "f32";
  auto blocks = ordered_json::array();
  for (const auto& b : m.structure().blocks())
    blocks.push_back({{"wR", b.row_width}, {"lR", b.row_location}, {"wC", b.col_width}, {"lC", b.col_location}});
  j["blocks"] = std::move(blocks);
  write_manifest(out, j);
  for (int k = 0; k < m.blocks(); ++k)
    for (double v : m.row_content(k)) put_f32(out, v);
  for (int k = 0; k < m.blocks(); ++k)
    for (double v : m.col_content(k)) put_f32(out, v);
}

GblrMatrix read_gblr(std::istream& in) {
  const auto j = read_manifest(in, kFrozenFormat);
  const int m = field<int>(j, "m");
  const int n = field<int>(j, "n");
  const int k_count = field<int>(j, "K");
  const auto& list = j.at("blocks");
  if (!list.is_array() || static_cast<int>(list.size()) != k_count)
    throw FormatError("manifest 'blocks' must list K entries");
  std::vector<Block> blocks;
  for (const auto& b : list)
    blocks.push_back({field<int>(b, "wR"), field<int>(b, "lR"), field<int>(b, "wC"), field<int>(b, "lC")});
  BlockStructure structure;
  try {
    structure = BlockStructure(m, n, std::move(blocks));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid structure: ") + e.what());
  }
  PayloadReader payload(in);
  std::vector<RealVector> u;
  std::vector<RealVector> v;
  for (const auto& b : structure.blocks()) {
    RealVector uk(b.row_width);
    for (auto& x : uk) x = payload.next();
    u.push_back(std::move(uk));
  }
  for (const auto& b : structure.blocks()) {
    RealVector vk(b.col_width);
    for (auto& x : vk) x = payload.next();
    v.push_back(std::move(vk));
  }
  payload.expect_end();
  return GblrMatrix(std::move(structure), std::move(u), std::move(v));
}

void write_gaudi(std::ostream& out, const GaudiGblrMatrix& theta) {
  theta.validate();
  ordered_json j;
  j["format"] = kGaudiFormat;
  j["m"] = theta.rows;
  j["n"] = theta.cols;
  j["K"] = theta.blocks();
  j["sigma"] = theta.smoothing.is_infinite() ? ordered_json("inf") : ordered_json(theta.smoothing.sigma());
  j["dtype"] = "f32";
  j["row_width"] = to_vector(theta.row_width);
  j["row_location"] = to_vector(theta.row_location);
  j["col_width"] = to_vector(theta.col_width);
  j["col_location"] = to_vector(theta.col_location);
  write_manifest(out, j);
  for (int k = 0; k < theta.blocks(); ++k)
    for (int i = 0; i < theta.rows; ++i) put_f32(out, theta.row_content(i, k));
  for (int k = 0; k < theta.blocks(); ++k)
    for (int i = 0; i < theta.cols; ++i) put_f32(out, theta.col_content(i, k));
}

GaudiGblrMatrix read_gaudi(std::istream& in) {
  const auto j = read_manifest(in, kGaudiFormat);
  const int m = field<int>(j, "m");
  const int n = field<int>(j, "n");
  const int k_count = field<int>(j, "K");
  if (m < 1 || n < 1 || k_count < 0) throw FormatError("invalid dimensions");
  Smoothing smoothing;
  const auto& s = j.at("sigma");
  if (s.is_string()) {
    if (s != "inf") throw FormatError("sigma must be a positive number or \"inf\"");
  } else {
    const double sigma = field<double>(j, "sigma");
    if (!(sigma > 0.0)) throw FormatError("sigma must be positive");
    smoothing = Smoothing(sigma);
  }
  auto theta = GaudiGblrMatrix::zeros(m, n, k_count, smoothing);
  theta.row_width = real_array(j, "row_width", k_count);
  theta.row_location = real_array(j, "row_location", k_count);
  theta.col_width = real_array(j, "col_width", k_count);
  theta.col_location = real_array(j, "col_location", k_count);
  PayloadReader payload(in);
  for (int k = 0; k < k_count; ++k)
    for (int i = 0; i < m; ++i) theta.row_content(i, k) = payload.next();
  for (int k = 0; k < k_count; ++k)
    for (int i = 0; i < n; ++i) theta.col_content(i, k) = payload.next();
  payload.expect_end();
  try {
    theta.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid structure: ") + e.what());
  }
  return theta;
}

void write_dense(const std::filesystem::path& path, const DenseMatrix& m) {
  with_output(path, [&](std::ostream& out) { write_dense(out, m); });
}
DenseMatrix read_dense(const std::filesystem::path& path) {
  return with_input(path, [](std::istream& in) { return read_dense(in); });
}
void write_gblr(const std::filesystem::path& path, const GblrMatrix& m) {
  with_output(path, [&](std::ostream& out) { write_gblr(out, m); });
}
GblrMatrix read_gblr(const std::filesystem::path& path) {
  return with_input(path, [](std::istream& in) { return read_gblr(in); });
}
void write_gaudi(const std::filesystem::path& path, const GaudiGblrMatrix& theta) {
  with_output(path, [&](std::ostream& out) { write_gaudi(out, theta); });
}
GaudiGblrMatrix read_gaudi(const std::filesystem::path& path) {
  return with_input(path, [](std::istream& in) { return read_gaudi(in); });
}

std::string peek_format(const std::filesystem::path& path) {
  return with_input(path, [](std::istream& in) { return read_manifest(in, nullptr).at("format").get<std::string>(); });
}

GblrMatrix read_any_as_frozen(const std::filesystem::path& path) {
  const auto format = peek_format(path);
  if (format == kFrozenFormat) return read_gblr(path);
  if (format == kGaudiFormat) return freeze(read_gaudi(path));
  throw FormatError("'" + path.string() + "' is not a GBLR checkpoint (format " + format + ")");
}

}  // namespace gblr::io
