// Copyright 2026 The facil Authors.
// SPDX-License-Identifier: Apache-2.0

// Counter-based random streams. Every draw is a pure function of its key, so
// results do not depend on evaluation order or thread count.

#pragma once

#include <cstdint>
#include <initializer_list>

namespace facil::rng {

/// splitmix64 finalizer.
constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t key(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (std::uint64_t p : parts) h = mix(h ^ mix(p));
    return h;
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double uniform(std::uint64_t k) noexcept {
    return static_cast<double>(mix(k) >> 11) * 0x1.0p-53;
}

// Salts separating independent uses of the same (seed, tag, cell, draw) key.
inline constexpr std::uint64_t kRolloutSalt = 0x726f6c6cULL;
inline constexpr std::uint64_t kSlotSalt = 0x736c6f74ULL;
inline constexpr std::uint64_t kSamplerSalt = 0x73616d70ULL;

}  // namespace facil::rng
