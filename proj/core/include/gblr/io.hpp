#pragma once

// File formats. Every file is one line of JSON (the manifest) terminated by
// '\n', followed by a payload of little-endian IEEE-754 32-bit floats.
//
//   dense       {"format":"gblr-dense","rows":R,"cols":C,"dtype":"f32","layout":"row-major"}
//               payload: R*C values, row-major
//   frozen      {"format":"gblr-frozen","m":M,"n":N,"K":K,"dtype":"f32",
//                "blocks":[{"wR":..,"lR":..,"wC":..,"lC":..},...]}
//               payload: u_0..u_{K-1} (cropped), then v_0..v_{K-1} (cropped)
//   gaudi       {"format":"gaudi-gblr","m":M,"n":N,"K":K,"sigma":S|"inf","dtype":"f32",
//                "row_width":[..],"row_location":[..],"col_width":[..],"col_location":[..]}
//               payload: u_0..u_{K-1} (length M each), then v_0..v_{K-1} (length N each)

#include "gblr/gaudi.hpp"
#include "gblr/gblr_matrix.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace gblr::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kDenseFormat = "gblr-dense";
inline constexpr const char* kFrozenFormat = "gblr-frozen";
inline constexpr const char* kGaudiFormat = "gaudi-gblr";

void write_dense(std::ostream& out, const DenseMatrix& m);
[[nodiscard]] DenseMatrix read_dense(std::istream& in);
void write_gblr(std::ostream& out, const GblrMatrix& m);
[[nodiscard]] GblrMatrix read_gblr(std::istream& in);
void write_gaudi(std::ostream& out, const GaudiGblrMatrix& theta);
[[nodiscard]] GaudiGblrMatrix read_gaudi(std::istream& in);

void write_dense(const std::filesystem::path& path, const DenseMatrix& m);
[[nodiscard]] DenseMatrix read_dense(const std::filesystem::path& path);
void write_gblr(const std::filesystem::path& path, const GblrMatrix& m);
[[nodiscard]] GblrMatrix read_gblr(const std::filesystem::path& path);
void write_gaudi(const std::filesystem::path& path, const GaudiGblrMatrix& theta);
[[nodiscard]] GaudiGblrMatrix read_gaudi(const std::filesystem::path& path);

/// The "format" field of a file's manifest.
[[nodiscard]] std::string peek_format(const std::filesystem::path& path);

/// Frozen matrix from either a frozen or a Gaudi checkpoint (the latter is frozen on load).
[[nodiscard]] GblrMatrix read_any_as_frozen(const std::filesystem::path& path);

}  // namespace gblr::io
