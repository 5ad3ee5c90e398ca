#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gqh {

/// One row of records.csv: metrics of one (arm, seed) run after one epoch.
struct RunRecord {
  std::string arm;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> w1_oracle;  // empty when the environment has no oracle
  double risk = 0.0;
  double b = 0.0;
  double ms = 0.0;

  bool operator==(const RunRecord&) const = default;
};

inline constexpr const char* kRecordsHeader = "arm,seed,epoch,loss,w1_oracle,risk,b,ms";

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

std::string records_to_csv(const std::vector<RunRecord>& records);
std::vector<RunRecord> parse_records_csv(const std::string& text);
std::vector<RunRecord> read_records_csv(const std::filesystem::path& path);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace gqh
