#include "loopforge/io.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#ifndef LOOPFORGE_BUILD_ID
#define LOOPFORGE_BUILD_ID "unknown"
#endif

namespace loopforge {

using nlohmann::json;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

json site_json(const Site& s) {
  json a = json::array();
  for (int k = 0; k < s.dim; ++k) a.push_back(s[k]);
  return a;
}

json sites_json(std::span<const Site> sites) {
  json a = json::array();
  for (const auto& s : sites) a.push_back(site_json(s));
  return a;
}

json grid_json(const PathGrid& g) {
  json a = json::array();
  for (std::size_t i = 0; i < g.points(); ++i) {
    json row = json::array();
    for (int k = 0; k < g.dim; ++k) row.push_back(g.at(i, k));
    a.push_back(std::move(row));
  }
  return a;
}

}  // namespace

std::string path_record(const LatticePath& path) {
  json j;
  j["d"] = path.dim();
  j["sites"] = sites_json(path.sites());
  return j.dump();
}

LatticePath parse_path_record(std::string_view line) {
  const json j = json::parse(line);
  const int d = j.at("d").get<int>();
  if (d < 1 || d > kMaxDim) throw std::domain_error("path record: dimension out of range");
  std::vector<Site> sites;
  for (const auto& row : j.at("sites")) {
    if (row.size() != static_cast<std::size_t>(d)) throw std::domain_error("path record: site of wrong dimension");
    Site s(d);
    for (int k = 0; k < d; ++k) s[k] = row[static_cast<std::size_t>(k)].get<std::int32_t>();
    sites.push_back(s);
  }
  return LatticePath(std::move(sites));
}

std::vector<LatticePath> read_path_jsonl(std::istream& in) {
  std::vector<LatticePath> out;
  std::string line;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(parse_path_record(line));
  return out;
}

std::string discrete_loop_record(const DiscreteLoop& loop) {
  json j;
  j["root"] = site_json(loop.root());
  j["label"] = loop.label();
  j["sites"] = sites_json(loop.path().sites());
  return j.dump();
}

std::string continuous_loop_record(const ContinuousLoop& loop) {
  json j;
  j["root"] = loop.root;
  j["duration"] = loop.duration;
  j["grid"] = grid_json(loop.displacements);
  return j.dump();
}

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), columns_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("csv: row width differs from header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

std::string ExperimentManifest::to_json() const {
  json j;
  j["command"] = command;
  j["flags"] = flags;
  j["seed"] = seed;
  j["threads"] = threads;
  j["build_id"] = build_id;
  j["started"] = started;
  j["finished"] = finished;
  return j.dump(2) + "\n";
}

std::string build_id() { return LOOPFORGE_BUILD_ID; }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

void write_manifest(const ExperimentManifest& manifest, const std::string& output) {
  std::ofstream f(manifest_path(output), std::ios::binary);
  if (!f) throw std::runtime_error("cannot write manifest for " + output);
  f << manifest.to_json();
}

}  // namespace loopforge
