#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace selfguard {

/// Seeded source of randomized process/file names. Draws straight from the
/// engine so output is identical for a given seed on every platform.
class NameGenerator {
 public:
  static constexpr std::size_t kNameLength = 12;
  static constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789";

  explicit NameGenerator(std::uint64_t seed) : engine_(seed) {}

  std::string next(std::size_t length = kNameLength) {
    std::string out(length, '?');
    for (auto& c : out) c = kAlphabet[engine_() % kAlphabet.size()];
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace selfguard
