#pragma once

#include <cstdint>
#include <initializer_list>

namespace simflow {

/// Counter-based generator. The stream is a pure function of its key words
/// and the draw index, so any entity can reproduce its draws regardless of
/// which worker runs it or in what order.
class KeyedRng {
 public:
  KeyedRng() = default;
  KeyedRng(std::initializer_list<std::uint64_t> key);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace simflow
