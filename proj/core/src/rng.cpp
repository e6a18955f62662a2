#include "manyclass/rng.hpp"

#include <cmath>

namespace manyclass {

namespace {

// splitmix64 finalizer; used to spread seed material before feeding mt19937_64.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double RngStream::next_gaussian() {
  const double u1 = next_uniform_open();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(6.283185307179586476925286766559 * u2);
}

std::size_t RngStream::next_index(std::size_t n) {
  // multiply-shift range reduction; bias is below 2^-64 per draw
  const unsigned __int128 wide =
      static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
  return static_cast<std::size_t>(wide >> 64);
}

RngStream derive_stream(std::uint64_t master, StreamTag tag, std::uint64_t salt,
                        std::uint64_t salt2) {
  std::uint64_t s = mix64(master);
  s = mix64(s ^ (static_cast<std::uint64_t>(tag) * 0x9e3779b97f4a7c15ULL));
  s = mix64(s ^ (salt + 0xbf58476d1ce4e5b9ULL));
  s = mix64(s ^ (salt2 + 0x94d049bb133111ebULL));
  return RngStream(s);
}

}  // namespace manyclass
