#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xstab {

// Mixes a base seed with a list of integer keys. Used to give every
// (candidate, fold), (feature, repeat) or sample its own independent stream so
// results never depend on scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);
std::uint64_t hash_string(std::string_view s);

// Deterministic random source. Distribution code is written out here instead
// of using <random> distributions, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Random permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Shortest representation that parses back to the same double.
std::string format_double(double v);
// Fixed number of decimals, trailing zeros kept. Negative zero prints as 0.
std::string format_fixed(double v, int decimals);
// Strict double parse of the whole field; returns false on any junk.
bool parse_double(std::string_view s, double& out);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Minimal RFC 4180 reader/writer helpers (quotes, embedded commas).
std::vector<std::string> parse_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);
std::string join_csv(const std::vector<std::string>& fields);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

// Runs body(i) for i in [0, n) on up to `jobs` threads (0 = hardware
// concurrency). body must only write to slots owned by index i.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body);

}  // namespace xstab
