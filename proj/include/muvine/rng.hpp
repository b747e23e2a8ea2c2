#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace muvine {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive the seed of a named component from the global seed. The mapping is
/// fixed (FNV-1a over the name), so adding a component never shifts the
/// seeds of the existing ones.
constexpr std::uint64_t sub_seed(std::uint64_t global, std::string_view component) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : component) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix_seed(global ^ mix_seed(h));
}

}  // namespace muvine
