#pragma once

// CSV and JSON emission.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace fpplab {

/// Shortest round-trip form is not needed; 17 significant digits always
/// round-trip a double. Non-finite values print as inf, -inf, nan.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

using CsvCell = std::variant<std::int64_t, double, std::string>;

/// Comma-separated, header row first, LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
      : out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_raw(header);
  }

  void row(const std::vector<CsvCell>& cells) {
    if (cells.size() != columns_) throw std::logic_error("CsvWriter: wrong number of cells");
    std::vector<std::string> s;
    for (const auto& c : cells) {
      if (const auto* i = std::get_if<std::int64_t>(&c)) s.push_back(std::to_string(*i));
      else if (const auto* d = std::get_if<double>(&c)) s.push_back(format_double(*d));
      else s.push_back(std::get<std::string>(c));
    }
    write_raw(s);
  }

 private:
  void write_raw(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      const auto& c = cells[i];
      if (c.find_first_of(",\"\n") != std::string::npos) {
        out_ << '"';
        for (char ch : c) out_ << (ch == '"' ? "\"\"" : std::string(1, ch));
        out_ << '"';
      } else {
        out_ << c;
      }
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::size_t columns_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

/// Hash of the canonical dump; nlohmann::json objects keep keys sorted, so
/// the value does not depend on key order in the source file.
inline std::string config_hash(const nlohmann::json& j) { return hex64(fnv1a64(j.dump())); }

}  // namespace fpplab
