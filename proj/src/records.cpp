#include "gqh/records.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gqh {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("records.csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& s, std::size_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("records.csv line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

std::string records_to_csv(const std::vector<RunRecord>& records) {
  std::string out = kRecordsHeader;
  out += '\n';
  for (const auto& r : records) {
    if (r.arm.find_first_of(",\n\"") != std::string::npos) {
      throw std::invalid_argument("records: arm names may not contain commas, quotes or newlines");
    }
    out += r.arm;
    out += ',' + std::to_string(r.seed);
    out += ',' + std::to_string(r.epoch);
    out += ',' + format_double(r.loss);
    out += ',' + (r.w1_oracle ? format_double(*r.w1_oracle) : std::string());
    out += ',' + format_double(r.risk);
    out += ',' + format_double(r.b);
    out += ',' + format_double(r.ms);
    out += '\n';
  }
  return out;
}

std::vector<RunRecord> parse_records_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader) {
    throw std::invalid_argument("records.csv: header must be '" + std::string(kRecordsHeader) + "'");
  }
  std::vector<RunRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw std::invalid_argument("records.csv line " + std::to_string(lineno) + ": expected 8 fields");
    RunRecord r;
    r.arm = f[0];
    r.seed = parse_uint(f[1], lineno);
    r.epoch = static_cast<std::size_t>(parse_uint(f[2], lineno));
    r.loss = parse_double(f[3], lineno);
    if (!f[4].empty()) r.w1_oracle = parse_double(f[4], lineno);
    r.risk = parse_double(f[5], lineno);
    r.b = parse_double(f[6], lineno);
    r.ms = parse_double(f[7], lineno);
    out.push_back(std::move(r));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<RunRecord> read_records_csv(const std::filesystem::path& path) {
  return parse_records_csv(read_file(path));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace gqh
