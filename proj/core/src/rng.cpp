#include "simflow/rng.hpp"

namespace simflow {

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

KeyedRng::KeyedRng(std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (std::uint64_t word : key) {
    h = mix64(h ^ mix64(word));
  }
  key_ = h;
}

std::uint64_t KeyedRng::next_u64() {
  const std::uint64_t c = counter_++;
  return mix64(key_ ^ mix64(c + 0xd1b54a32d192ed03ULL));
}

double KeyedRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t KeyedRng::below(std::uint64_t n) {
  // Reject the low 2^64 mod n values so every residue is equally likely.
  const std::uint64_t threshold = (0 - n) % n;
  std::uint64_t x = next_u64();
  while (x < threshold) {
    x = next_u64();
  }
  return x % n;
}

}  // namespace simflow
