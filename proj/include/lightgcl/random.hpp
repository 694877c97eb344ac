// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>

namespace lightgcl {

// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream seed for (base, counters...), e.g. (seed, epoch, batch).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> counters) {
    std::uint64_t h = mix64(base);
    for (std::uint64_t c : counters) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
    return h;
}

}  // namespace lightgcl
