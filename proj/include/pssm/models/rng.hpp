#pragma once

#include <array>
#include <cstdint>

namespace pssm {

// xoshiro256** seeded through splitmix64. Normal draws use Box–Muller so that streams are
// reproducible independently of the standard library.
class Rng {
 public:
  static constexpr const char* algorithm = "xoshiro256**";

  explicit Rng(std::uint64_t seed = 0);
  // Seed, then jump `stream` times; distinct streams are 2^128 draws apart.
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  void jump();

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pssm
