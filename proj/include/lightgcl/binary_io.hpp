// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "lightgcl/errors.hpp"

namespace lightgcl::binary {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw DataError("cannot open " + path.string() + " for writing");
    }

    void u64(std::uint64_t v) { raw(&v, sizeof v); }

    template <typename T>
    void array(std::span<const T> values) {
        raw(values.data(), values.size_bytes());
    }

    void close() {
        out_.close();
        if (!out_) throw DataError("failed writing " + path_.string());
    }

private:
    void raw(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw DataError("failed writing " + path_.string());
    }

    std::filesystem::path path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw DataError("cannot open " + path.string());
    }

    std::uint64_t u64() {
        std::uint64_t v = 0;
        raw(&v, sizeof v);
        return v;
    }

    template <typename T>
    std::vector<T> array(std::size_t count) {
        std::vector<T> v(count);
        raw(v.data(), count * sizeof(T));
        return v;
    }

    void expect_end() {
        if (in_.peek() != std::char_traits<char>::eof()) throw DataError(path_.string() + ": trailing bytes");
    }

    const std::filesystem::path& path() const { return path_; }

private:
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError(path_.string() + ": truncated file");
    }

    std::filesystem::path path_;
    std::ifstream in_;
};

// Eight ASCII bytes packed little-endian into a u64 magic number.
constexpr std::uint64_t magic(const char (&tag)[9]) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(tag[i]);
    return v;
}

}  // namespace lightgcl::binary
