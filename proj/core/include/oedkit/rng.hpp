#pragma once

#include <cstdint>
#include <random>

namespace oedkit {

// splitmix64 mixing step, used to derive engine seeds from (seed, stream, index).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

// Fixed stream ids. Every sampling site in the toolkit draws from its own
// (seed, stream, index) triple, so loops can run on any number of threads and
// still produce identical numbers.
namespace streams {
constexpr std::uint64_t kPriorSample = 0x10;
constexpr std::uint64_t kOuterParam = 0x20;
constexpr std::uint64_t kOuterNoise = 0x21;
constexpr std::uint64_t kInnerParam = 0x22;
constexpr std::uint64_t kInnerShared = 0x23;
constexpr std::uint64_t kDatasetParam = 0x30;
constexpr std::uint64_t kSplitShuffle = 0x31;
constexpr std::uint64_t kWeightInit = 0x40;
constexpr std::uint64_t kBatchShuffle = 0x41;
constexpr std::uint64_t kReductionAs = 0x50;
constexpr std::uint64_t kReductionPod = 0x51;
constexpr std::uint64_t kDesign = 0x60;
constexpr std::uint64_t kTestInputs = 0x70;
}  // namespace streams

// Deterministic random stream. Two streams built from the same triple yield
// bitwise-identical draw sequences.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0,
                     std::uint64_t index = 0)
      : engine_(derive_seed(seed, stream, index)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }  // [0, 1)

  std::uint64_t below(std::uint64_t bound) {
    std::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
    return dist(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace oedkit
