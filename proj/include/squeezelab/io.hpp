// SPDX-License-Identifier: MIT
//
// Small persistence helpers shared by the run driver: round-trip numeric
// formatting, atomic file writes, FNV-1a hashing for config fingerprints,
// and a CSV assembler with '#'-prefixed metadata comments.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sqz {

// Shortest decimal that round-trips an IEEE double (printf %.17g).
std::string format_g17(double v);

// 64-bit FNV-1a over a byte string; `h` lets hashes be chained.
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset);

// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

// Write `content` to `path` atomically: the bytes land in a temporary file in
// the same directory which is then renamed over the target, so a crash never
// leaves a partially written output. Parent directories are created.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// CSV with a comment block, a header row, and fixed-width rows:
//   # key=value
//   colA,colB
//   1,2
class CsvBuilder {
 public:
  void comment(const std::string& line);               // '#' is prepended
  void header(const std::vector<std::string>& cols);   // exactly once
  void row(const std::vector<std::string>& cells);     // size must match
  const std::string& str() const { return out_; }

  static std::string cell(double v) { return format_g17(v); }
  static std::string cell(std::uint64_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }

 private:
  std::string out_;
  std::size_t n_cols_ = 0;
  bool have_header_ = false;
};

}  // namespace sqz
