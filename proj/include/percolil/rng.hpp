// Counter-based random streams.
//
// Every random quantity in the library is a pure function of a 64-bit key
// and a 64-bit counter. A key is derived from a master seed and a purpose
// (edge plane, trial index, attempt index, ...) with derive_key, so streams
// can be split without ever sharing state between trials or threads.
//
// The output function is the SplitMix64 generator evaluated at state
// (premixed key + counter * golden gamma). The distributions below are
// written out by hand (inverse CDF) so that results do not depend on the
// standard library's unspecified distribution algorithms.
#ifndef PERCOLIL_RNG_HPP
#define PERCOLIL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>

namespace percolil {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Output number `counter` of the stream identified by `key`.
constexpr std::uint64_t counter_hash(std::uint64_t key, std::uint64_t counter) noexcept {
  return splitmix64(splitmix64(key) + (counter + 1) * kGoldenGamma);
}

/// Child key for sub-stream `index` of `parent` within namespace `tag`.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t tag,
                                   std::uint64_t index) noexcept {
  return counter_hash(counter_hash(parent, tag), index);
}

// Namespaces for derive_key so that e.g. trial 3 and attempt 3 never collide.
enum class StreamTag : std::uint64_t {
  edges = 1,
  attempt = 2,
  trial = 3,
  environment = 4,
};

constexpr std::uint64_t derive_key(std::uint64_t parent, StreamTag tag,
                                   std::uint64_t index) noexcept {
  return derive_key(parent, static_cast<std::uint64_t>(tag), index);
}

/// Sequential view of a counter-based stream. Satisfies
/// UniformRandomBitGenerator; copying it forks the stream.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterStream(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept { return counter_hash(key_, counter_++); }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Uniform on [0, 1) with 53 random bits.
constexpr double bits_to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

template <typename Gen>
double uniform01(Gen& gen) {
  return bits_to_unit(gen());
}

/// Uniform integer in [0, n) (Lemire's multiply-shift with rejection).
template <typename Gen>
std::uint64_t uniform_below(Gen& gen, std::uint64_t n) {
  unsigned __int128 m = static_cast<unsigned __int128>(gen()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(gen()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Exponential with mean 1 by inversion. Consumes one draw.
template <typename Gen>
double exponential(Gen& gen) {
  return -std::log1p(-uniform01(gen));
}

/// Number of Bernoulli(success) trials up to and including the first
/// success, i.e. support {1, 2, ...} and mean 1/success. Always consumes
/// exactly one draw, including the degenerate case success == 1.
/// `log_failure` must be log(1 - success) (ignored when success >= 1).
template <typename Gen>
std::uint64_t geometric_trials(Gen& gen, double success, double log_failure) {
  const double u = 1.0 - uniform01(gen);  // (0, 1]
  if (success >= 1.0) return 1;
  return 1 + static_cast<std::uint64_t>(std::floor(std::log(u) / log_failure));
}

template <typename Gen>
std::uint64_t geometric_trials(Gen& gen, double success) {
  return geometric_trials(gen, success, std::log1p(-success));
}

}  // namespace percolil

#endif  // PERCOLIL_RNG_HPP
