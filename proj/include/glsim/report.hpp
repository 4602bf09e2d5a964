// Copyright 2026 The glsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Artifact writers: CSV tables, PGM/PPM images and a checksummed manifest.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "glsim/checksum.hpp"
#include "glsim/config.hpp"
#include "glsim/dataset.hpp"
#include "glsim/error.hpp"
#include "json.hpp"

namespace glsim {

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  // Appends a row of already formatted cells.
  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw InputError("csv: row width differs from header");
    rows_.push_back(std::move(row));
  }

  std::string str() const {
    std::string out = join(header_);
    for (const auto& r : rows_) out += join(r);
    return out;
  }

  std::size_t rows() const { return rows_.size(); }

 private:
  static std::string join(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    return s + "\n";
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string cell(double v) { return config_detail::fmt_double(v); }
template <typename T>
  requires std::is_integral_v<T>
std::string cell(T v) {
  return std::to_string(v);
}
inline std::string cell(const std::string& s) { return s; }

// 8-bit binary PGM (1 channel) or PPM (3 channels) after min-max scaling.
inline std::string encode_pnm(std::span<const double> v, const ImageShape& shape) {
  if (v.size() != shape.height * shape.width * shape.channels)
    throw InputError("image size does not match its shape");
  double lo = v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
  double hi = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  const bool color = shape.channels == 3;
  std::string out = std::string(color ? "P6" : "P5") + "\n" + std::to_string(shape.width) + " " +
                    std::to_string(shape.height) + "\n255\n";
  for (double x : v) {
    double t = hi > lo ? (x - lo) / (hi - lo) : 0.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0))));
  }
  return out;
}

// Writes files under one output directory and remembers their checksums.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path& dir() const { return dir_; }

  void write(const std::string& rel, const std::string& bytes) {
    auto path = dir_ / rel;
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path.string());
    Fnv1a64 h;
    h.update(bytes);
    entries_.push_back({rel, hex64(h.digest()), bytes.size()});
  }

  void write_csv(const std::string& rel, const CsvTable& t) { write(rel, t.str()); }

  void write_json(const std::string& rel, const nlohmann::ordered_json& j) {
    write(rel, j.dump(2) + "\n");
  }

  // manifest.json: config, seeds and every artifact with its checksum.
  void write_manifest(const ExperimentConfig& cfg, const nlohmann::ordered_json& extra) {
    nlohmann::ordered_json m;
    m["experiment"] = cfg.experiment;
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    for (const auto& f : config_fields()) c[f.key] = f.get(cfg);
    m["config"] = c;
    m["seeds"] = {{"master", cfg.seed}, {"repetitions", cfg.seeds}};
    m["rerun"] = "glsim " + cfg.experiment + " --config config.txt --out <dir>";
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    nlohmann::ordered_json arts = nlohmann::ordered_json::array();
    for (const auto& e : entries_)
      arts.push_back({{"path", e.path}, {"fnv1a64", e.checksum}, {"bytes", e.bytes}});
    m["artifacts"] = arts;
    auto path = dir_ / "manifest.json";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << m.dump(2) << "\n";
  }

 private:
  struct Entry {
    std::string path;
    std::string checksum;
    std::size_t bytes;
  };
  std::filesystem::path dir_;
  std::vector<Entry> entries_;
};

}  // namespace glsim
