// SPDX-License-Identifier: MIT

#include "squeezelab/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sqz {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void CsvBuilder::comment(const std::string& line) {
  out_ += "# ";
  out_ += line;
  out_ += '\n';
}

void CsvBuilder::header(const std::vector<std::string>& cols) {
  if (have_header_) throw std::logic_error("CSV header written twice");
  if (cols.empty()) throw std::logic_error("CSV header must name at least one column");
  have_header_ = true;
  n_cols_ = cols.size();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out_ += ',';
    out_ += cols[i];
  }
  out_ += '\n';
}

void CsvBuilder::row(const std::vector<std::string>& cells) {
  if (!have_header_) throw std::logic_error("CSV row before header");
  if (cells.size() != n_cols_)
    throw std::logic_error("CSV row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ += ',';
    out_ += cells[i];
  }
  out_ += '\n';
}

}  // namespace sqz
