#pragma once

// Per-vertex scalar fields and passage-time weights, with binary snapshots.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpplab/lattice.hpp"
#include "fpplab/rng.hpp"

namespace fpplab {

using json = nlohmann::json;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Where a field came from: enough to regenerate it bit-for-bit.
struct Provenance {
  std::string sampler;
  RngStream stream;
  json parameters = json::object();
};

struct ScalarField {
  LatticeBox box;
  std::vector<double> values;
  Provenance provenance;

  double operator[](Index v) const { return values[v]; }
  double& operator[](Index v) { return values[v]; }
};

enum class WeightMode { Edge, Vertex };

inline const char* to_string(WeightMode m) { return m == WeightMode::Edge ? "edge" : "vertex"; }

inline WeightMode weight_mode_from_string(const std::string& s) {
  if (s == "edge") return WeightMode::Edge;
  if (s == "vertex") return WeightMode::Vertex;
  throw std::invalid_argument("unknown weight mode '" + s + "'");
}

/// Non-negative passage times on edges or vertices; +inf marks a closed element.
struct PassageWeights {
  LatticeBox box;
  WeightMode mode = WeightMode::Edge;
  std::vector<double> values;
  double level_shift = 0.0;

  Index expected_size() const {
    return mode == WeightMode::Edge ? box.num_edges() : box.num_vertices();
  }

  void validate() const {
    if (static_cast<Index>(values.size()) != expected_size())
      throw std::invalid_argument("PassageWeights: value count does not match box");
    for (double w : values)
      if (!(w >= 0.0)) throw std::invalid_argument("PassageWeights: negative or NaN weight");
  }
};

// --------------------------------------------------------------------------
// Snapshots: <stem>.bin holds little-endian float64 values in dense index
// order, <stem>.json holds geometry and provenance.

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((x >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return r;
  }
  return x;
}

inline void write_f64_block(const std::filesystem::path& path, const std::vector<double>& v) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (double x : v) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(x));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
}

inline std::vector<double> read_f64_block(const std::filesystem::path& path, Index count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<double> v(count);
  for (auto& x : v) {
    std::uint64_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits))
      throw std::runtime_error("truncated snapshot " + path.string());
    x = std::bit_cast<double>(to_little_endian(bits));
  }
  return v;
}

}  // namespace detail

inline json box_to_json(const LatticeBox& box) {
  return {{"dimension", box.dim()}, {"sides", box.sides()}, {"offset", box.offset()}};
}

inline LatticeBox box_from_json(const json& j) {
  return LatticeBox::build(j.at("dimension").get<int>(), j.at("sides").get<std::vector<std::int64_t>>(),
                           j.value("offset", std::vector<std::int64_t>{}));
}

/// Writes <stem>.bin and <stem>.json. `kind` names the payload ("field", "green", ...).
inline void write_snapshot(const std::filesystem::path& stem, const LatticeBox& box,
                           const std::vector<double>& values, const std::string& kind,
                           const Provenance& prov, json extra = json::object()) {
  auto bin = stem;
  bin += ".bin";
  auto side = stem;
  side += ".json";
  detail::write_f64_block(bin, values);
  json meta = {{"kind", kind},
               {"box", box_to_json(box)},
               {"count", values.size()},
               {"encoding", "float64-le"},
               {"order", "row-major, last axis fastest"},
               {"sampler", prov.sampler},
               {"parameters", prov.parameters},
               {"generator", prov.stream.algorithm()},
               {"seed", prov.stream.seed},
               {"replica", prov.stream.replica},
               {"substream", prov.stream.substream}};
  for (auto& [k, v] : extra.items()) meta[k] = v;
  std::ofstream out(side);
  if (!out) throw std::runtime_error("cannot open " + side.string() + " for writing");
  out << meta.dump(2) << '\n';
}

inline void write_field_snapshot(const std::filesystem::path& stem, const ScalarField& f) {
  write_snapshot(stem, f.box, f.values, "field", f.provenance);
}

inline ScalarField read_field_snapshot(const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".bin";
  auto side = stem;
  side += ".json";
  std::ifstream in(side);
  if (!in) throw std::runtime_error("cannot open " + side.string());
  const json meta = json::parse(in);
  ScalarField f;
  f.box = box_from_json(meta.at("box"));
  f.values = detail::read_f64_block(bin, f.box.num_vertices());
  f.provenance.sampler = meta.value("sampler", "");
  f.provenance.parameters = meta.value("parameters", json::object());
  f.provenance.stream = {meta.value("seed", std::uint64_t{0}), meta.value("replica", std::uint64_t{0}),
                         meta.value("substream", std::uint64_t{0})};
  return f;
}

}  // namespace fpplab
