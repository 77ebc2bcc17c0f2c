#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "loopforge/lattice.hpp"
#include "loopforge/soup.hpp"

namespace loopforge {

// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

// {"d":3,"sites":[[0,0,0],[1,0,0],...]} on one line, no trailing newline.
std::string path_record(const LatticePath& path);
LatticePath parse_path_record(std::string_view line);
std::vector<LatticePath> read_path_jsonl(std::istream& in);

// {"root":[..],"label":x,"sites":[[..],..]}
std::string discrete_loop_record(const DiscreteLoop& loop);
// {"root":[..],"duration":t,"grid":[[..],..]}, grid rows are displacements.
std::string continuous_loop_record(const ContinuousLoop& loop);

// Comma-separated rows with a header, LF line endings. Cells are written as
// given; callers pass numbers through format_double.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);

 private:
  std::ostream& out_;
  std::size_t columns_;
};

struct ExperimentManifest {
  std::string command;
  std::map<std::string, std::string> flags;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string build_id;
  std::string started;
  std::string finished;

  std::string to_json() const;
};

std::string build_id();
std::string utc_timestamp();
// "<output>.manifest.json"
std::string manifest_path(const std::string& output);
void write_manifest(const ExperimentManifest& manifest, const std::string& output);

}  // namespace loopforge
